//! Resonant Wigner distributions: for a direction `omega` with primitive
//! vector `p`, the state is cut into the lines `k = (n p + r_scaled)/|p|^2`,
//! and each populated line contributes a rank-one operator `v (x) conj(v)`
//! at `xi = h r`, where `v(n) = u_hat(k)`.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{gaussian_tail_sum, ordered_sum, KahanSum};
use crate::resonance_lattice::{
    directions_of_modes, group_by_lines, LatticePoint, LineDecomposition, PrimitiveDirection,
};
use crate::symbols::{CoefficientFn, Symbol, TimeWindow};
use crate::torus_state::{near_hyperplane_mass, FourierState, StateFamily};
use crate::wigner::{check_scale, midpoint, momentum_marginal_pair};

/// The contribution of one line: a rank-one positive operator.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonantAtom {
    pub r_scaled: LatticePoint,
    pub xi: Vec<f64>,
    /// Line amplitudes sorted by `n`.
    pub v: Vec<(i64, Complex64)>,
    pub class_c: i64,
}

impl ResonantAtom {
    fn new(
        r_scaled: LatticePoint,
        h: f64,
        omega: &PrimitiveDirection,
        v: Vec<(i64, Complex64)>,
    ) -> Self {
        let xi = r_scaled.to_f64(h / omega.norm_sq() as f64);
        let class_c = v
            .first()
            .map(|(n, _)| n.rem_euclid(omega.norm_sq()))
            .unwrap_or(0);
        Self {
            r_scaled,
            xi,
            v,
            class_c,
        }
    }

    pub fn get(&self, n: i64) -> Complex64 {
        self.v
            .binary_search_by_key(&n, |(m, _)| *m)
            .map(|i| self.v[i].1)
            .unwrap_or_default()
    }

    /// `||v||^2`.
    pub fn trace(&self) -> f64 {
        let mut acc = KahanSum::new();
        for (_, c) in &self.v {
            acc.add(Complex64::new(c.norm_sqr(), 0.0));
        }
        acc.value().re
    }

    pub fn max_abs_n(&self) -> i64 {
        self.v.iter().map(|(n, _)| n.abs()).max().unwrap_or(0)
    }
}

/// The atomic operator-valued measure `R_u^h(omega, .)` on the hyperplane
/// orthogonal to `omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonantMeasure {
    pub omega: PrimitiveDirection,
    pub h: f64,
    /// Sorted by `r_scaled`.
    pub atoms: Vec<ResonantAtom>,
    /// `||u||^2` of the state the measure was built from.
    pub source_norm_sq: f64,
}

impl ResonantMeasure {
    pub fn total_trace(&self) -> f64 {
        let mut acc = KahanSum::new();
        for a in &self.atoms {
            acc.add(Complex64::new(a.trace(), 0.0));
        }
        acc.value().re
    }

    pub fn max_abs_n(&self) -> i64 {
        self.atoms
            .iter()
            .map(ResonantAtom::max_abs_n)
            .max()
            .unwrap_or(0)
    }

    pub fn to_json(&self) -> ResonantMeasureJson {
        ResonantMeasureJson {
            omega: self.omega.vector().coords().to_vec(),
            h: self.h,
            atoms: self
                .atoms
                .iter()
                .map(|a| AtomJson {
                    r_scaled: a.r_scaled.coords().to_vec(),
                    entries: a
                        .v
                        .iter()
                        .map(|(n, c)| EntryJson {
                            n: *n,
                            re: c.re,
                            im: c.im,
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn from_json(json: &ResonantMeasureJson) -> Result<Self> {
        check_scale(json.h)?;
        let omega =
            crate::resonance_lattice::primitive_direction(&LatticePoint::from(json.omega.clone()))?;
        if omega.vector().coords() != json.omega.as_slice() {
            return Err(Error::InvalidParameter(format!(
                "omega {:?} is not primitive",
                json.omega
            )));
        }
        let mut atoms = Vec::with_capacity(json.atoms.len());
        for a in &json.atoms {
            let r_scaled = LatticePoint::from(a.r_scaled.clone());
            let mut v: Vec<(i64, Complex64)> = a
                .entries
                .iter()
                .map(|e| (e.n, Complex64::new(e.re, e.im)))
                .collect();
            v.sort_by_key(|(n, _)| *n);
            for (n, _) in &v {
                if LineDecomposition::reconstruct(*n, &r_scaled, &omega).is_none() {
                    return Err(Error::InvalidParameter(format!(
                        "entry n = {n} does not lie on the line r_scaled = {:?}",
                        a.r_scaled
                    )));
                }
            }
            atoms.push(ResonantAtom::new(r_scaled, json.h, &omega, v));
        }
        atoms.sort_by(|a, b| a.r_scaled.cmp(&b.r_scaled));
        let mut out = Self {
            omega,
            h: json.h,
            atoms,
            source_norm_sq: 0.0,
        };
        out.source_norm_sq = out.total_trace();
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonantMeasureJson {
    pub omega: Vec<i64>,
    pub h: f64,
    pub atoms: Vec<AtomJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomJson {
    pub r_scaled: Vec<i64>,
    pub entries: Vec<EntryJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryJson {
    pub n: i64,
    pub re: f64,
    pub im: f64,
}

/// Dense section `m, n in [-M, M]` of an operator on `l2(Z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorWindowMatrix {
    pub index_window: usize,
    pub entries: DMatrix<Complex64>,
    /// Bound on the Hilbert-Schmidt norm of the omitted entries.
    pub tail_bound: f64,
}

impl OperatorWindowMatrix {
    fn zeros(m: usize) -> Self {
        Self {
            index_window: m,
            entries: DMatrix::zeros(2 * m + 1, 2 * m + 1),
            tail_bound: 0.0,
        }
    }

    fn index(&self, n: i64) -> Option<usize> {
        let m = self.index_window as i64;
        (-m..=m).contains(&n).then(|| (n + m) as usize)
    }

    pub fn entry(&self, m: i64, n: i64) -> Complex64 {
        match (self.index(m), self.index(n)) {
            (Some(i), Some(j)) => self.entries[(i, j)],
            _ => Complex64::default(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        let herm = (&self.entries + self.entries.adjoint()) * Complex64::new(0.5, 0.0);
        herm.symmetric_eigenvalues().min()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

fn check_direction(d: usize, omega: &PrimitiveDirection) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidDimension(
            d,
            "resonant directions need d >= 2",
        ));
    }
    if omega.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: omega.dim(),
        });
    }
    Ok(())
}

pub fn build_resonant(
    u: &FourierState,
    h: f64,
    omega: &PrimitiveDirection,
) -> Result<ResonantMeasure> {
    check_scale(h)?;
    check_direction(u.dim(), omega)?;
    let groups = group_by_lines(u.support(), omega)?;
    let atoms = groups
        .into_iter()
        .map(|(r_scaled, members)| {
            let v = members.into_iter().map(|(n, k)| (n, u.get(&k))).collect();
            ResonantAtom::new(r_scaled, h, omega, v)
        })
        .collect();
    Ok(ResonantMeasure {
        omega: omega.clone(),
        h,
        atoms,
        source_norm_sq: u.norm_sq(),
    })
}

/// `sum_atoms b(xi) ||v||^2`.
pub fn trace_pair(r: &ResonantMeasure, b: &CoefficientFn) -> Complex64 {
    let mut acc = KahanSum::new();
    for a in &r.atoms {
        acc.add(b.eval(&a.xi) * a.trace());
    }
    acc.value()
}

/// `sum_atoms b(xi) v(m) conj(v(n))` for `|m|, |n| <= M`.
pub fn operator_window(r: &ResonantMeasure, b: &CoefficientFn, m: usize) -> OperatorWindowMatrix {
    let mut out = OperatorWindowMatrix::zeros(m);
    let mut tail_sq = 0.0;
    for atom in &r.atoms {
        let w = b.eval(&atom.xi);
        let inside: Vec<(usize, Complex64)> = atom
            .v
            .iter()
            .filter_map(|(n, c)| out.index(*n).map(|i| (i, *c)))
            .collect();
        for &(i, ci) in &inside {
            for &(j, cj) in &inside {
                out.entries[(i, j)] += w * ci * cj.conj();
            }
        }
        let full = atom.trace();
        let kept: f64 = inside.iter().map(|(_, c)| c.norm_sqr()).sum();
        let omitted = (full * full - kept * kept).max(0.0).sqrt();
        tail_sq += w.norm() * omitted;
    }
    out.tail_bound = tail_sq;
    out
}

/// `||u||^2 sup|b| - sum_atoms |b(xi)| ||v||^2`.
pub fn trace_norm_bound_gap(r: &ResonantMeasure, b: &CoefficientFn) -> f64 {
    let mut acc = KahanSum::new();
    for a in &r.atoms {
        acc.add(Complex64::new(b.eval(&a.xi).norm() * a.trace(), 0.0));
    }
    r.source_norm_sq * b.sup_norm() - acc.value().re
}

#[inline]
fn line_phase(n: i64, t: f64, omega: &PrimitiveDirection) -> Complex64 {
    Complex64::from_polar(1.0, -t * (n * n) as f64 / (2.0 * omega.norm_sq() as f64))
}

/// Conjugation by `e^{i t d_omega^2 / 2}`: `v(n) -> e^{-i t n^2 / (2|p|^2)} v(n)`.
pub fn evolve_resonant(r: &ResonantMeasure, t: f64) -> ResonantMeasure {
    let mut out = r.clone();
    for atom in &mut out.atoms {
        for (n, c) in &mut atom.v {
            *c *= line_phase(*n, t, &r.omega);
        }
    }
    out
}

/// Symbol modes on the line of `omega`, as `(lambda, a_{lambda p})`.
fn line_modes<'a>(a: &'a Symbol, omega: &PrimitiveDirection) -> Vec<(i64, &'a CoefficientFn)> {
    a.modes()
        .iter()
        .filter_map(|(k, f)| omega.multiple_of(k).filter(|l| *l != 0).map(|l| (l, f)))
        .collect()
}

/// `k_{a,phi}(omega, xi)(m, n) = (2 pi)^{-d/2} phi_hat((n^2 - m^2)/(2|p|^2)) a_{lambda p}(xi)`
/// for `m - n = lambda |p|^2`, `lambda != 0`.
pub fn k_a_phi_window(
    omega: &PrimitiveDirection,
    xi: &[f64],
    a: &Symbol,
    phi: &TimeWindow,
    m: usize,
) -> OperatorWindowMatrix {
    let mut out = OperatorWindowMatrix::zeros(m);
    let d = a.dim() as f64;
    let norm = (2.0 * PI).powf(-d / 2.0);
    let p2 = omega.norm_sq();
    let big_m = m as i64;
    let mut tail_sq = 0.0;
    for (lambda, f) in line_modes(a, omega) {
        let coeff = f.eval(xi) * norm;
        let shift = lambda * p2;
        for n in -big_m..=big_m {
            let mm = n + shift;
            if let (Some(i), Some(j)) = (out.index(mm), out.index(n)) {
                let s = (n * n - mm * mm) as f64 / (2.0 * p2 as f64);
                out.entries[(i, j)] = phi.transform(s) * coeff;
            }
        }
        // Omitted entries have midpoint |(m + n)/2| >= M + 1 - |lambda| |p|^2 / 2,
        // where |phi_hat| <= |phi_hat(0)| exp(-tau^2 lambda^2 c^2 / 2).
        let x0 = big_m as f64 + 1.0 - (shift.abs() as f64) / 2.0;
        let alpha = (phi.width * lambda as f64).powi(2);
        tail_sq +=
            2.0 * coeff.norm_sqr() * phi.transform_sup().powi(2) * gaussian_tail_sum(alpha, x0);
    }
    out.tail_bound = tail_sq.sqrt();
    out
}

/// `sum |entries|^2`; the omitted part is reported by `tail_bound`.
pub fn hs_norm_sq_window(k: &OperatorWindowMatrix) -> f64 {
    let mut acc = KahanSum::new();
    for z in k.entries.iter() {
        acc.add(Complex64::new(z.norm_sqr(), 0.0));
    }
    acc.value().re
}

/// `(2 pi)^{-d} sum_{N in Z} |phi_hat(N/2)|^2 sum_{k != 0} sup|a_k|^2`.
pub fn hs_norm_bound(a: &Symbol, phi: &TimeWindow) -> f64 {
    let d = a.dim() as f64;
    let alpha = phi.width * phi.width / 4.0;
    let cutoff = (50.0 / alpha).sqrt().ceil() as i64;
    let mut sum = KahanSum::new();
    for n in -cutoff..=cutoff {
        sum.add(Complex64::new((-alpha * (n * n) as f64).exp(), 0.0));
    }
    let tail = 2.0 * gaussian_tail_sum(alpha, (cutoff + 1) as f64);
    let window_sq = phi.transform_sup().powi(2) * (sum.value().re + tail);
    let modes: f64 = a
        .modes()
        .iter()
        .filter(|(k, _)| !k.is_zero())
        .map(|(_, f)| f.sup_norm().powi(2))
        .sum();
    (2.0 * PI).powf(-d) * window_sq * modes
}

fn require_zero_mean(a: &Symbol) -> Result<()> {
    if a.has_mean_mode() {
        Err(Error::NonzeroMeanMode)
    } else {
        Ok(())
    }
}

/// Atom-wise evaluation of `tr int k_{a,phi} dR` and of the remainder, summed
/// over all directions carried by `a`.
fn lemma_main_terms(
    u: &FourierState,
    h: f64,
    a: &Symbol,
    phi: &TimeWindow,
) -> Result<(Complex64, Complex64)> {
    check_scale(h)?;
    require_zero_mean(a)?;
    if u.dim() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            found: a.dim(),
        });
    }
    let norm = (2.0 * PI).powf(-(u.dim() as f64) / 2.0);
    let mut resonant = KahanSum::new();
    let mut remainder = KahanSum::new();
    let directions: BTreeSet<PrimitiveDirection> = directions_of_modes(a.modes().keys());
    for omega in &directions {
        let lines = line_modes(a, omega);
        let r = build_resonant(u, h, omega)?;
        let p2 = omega.norm_sq();
        let atoms = &r.atoms;
        // two sums packed into one complex accumulator pass each
        let (res, _) = ordered_sum(atoms.len(), |i, acc| {
            let atom = &atoms[i];
            let mut terms = 0;
            for &(n, vn) in &atom.v {
                for &(lambda, f) in &lines {
                    let m = n + lambda * p2;
                    let vm = atom.get(m);
                    if vm == Complex64::default() {
                        continue;
                    }
                    let s = (n * n - m * m) as f64 / (2.0 * p2 as f64);
                    acc.add(phi.transform(s) * f.eval(&atom.xi) * vn * vm.conj());
                    terms += 1;
                }
            }
            terms
        });
        let (rem, _) = ordered_sum(atoms.len(), |i, acc| {
            let atom = &atoms[i];
            let mut terms = 0;
            for &(n, vn) in &atom.v {
                let k = LineDecomposition::reconstruct(n, &atom.r_scaled, omega)
                    .expect("populated line");
                for &(lambda, f) in &lines {
                    let m = n + lambda * p2;
                    let vm = atom.get(m);
                    if vm == Complex64::default() {
                        continue;
                    }
                    let j = LineDecomposition::reconstruct(m, &atom.r_scaled, omega)
                        .expect("same line");
                    let l = f.eval(&midpoint(&k, &j, h)) - f.eval(&atom.xi);
                    let s = (n * n - m * m) as f64 / (2.0 * p2 as f64);
                    acc.add(phi.transform(s) * l * vn * vm.conj());
                    terms += 1;
                }
            }
            terms
        });
        resonant.add(res);
        remainder.add(rem);
    }
    Ok((resonant.value() * norm, remainder.value() * norm))
}

/// `sum_omega tr int k_{a,phi}(omega, xi) R_u^h(omega, d xi)` for zero-mean `a`.
pub fn resonant_term(u: &FourierState, h: f64, a: &Symbol, phi: &TimeWindow) -> Result<Complex64> {
    Ok(lemma_main_terms(u, h, a, phi)?.0)
}

/// The remainder `r_{a,phi}`, built from
/// `l(m, n) = a_q(h (k + j)/2) - a_q(h r)`.
pub fn remainder_term(u: &FourierState, h: f64, a: &Symbol, phi: &TimeWindow) -> Result<Complex64> {
    Ok(lemma_main_terms(u, h, a, phi)?.1)
}

/// Both terms at once.
pub fn resonant_and_remainder(
    u: &FourierState,
    h: f64,
    a: &Symbol,
    phi: &TimeWindow,
) -> Result<(Complex64, Complex64)> {
    lemma_main_terms(u, h, a, phi)
}

/// `|time_averaged_pair - resonant_term|`.
pub fn lemma_main_residual(u: &FourierState, h: f64, a: &Symbol, phi: &TimeWindow) -> Result<f64> {
    let total = crate::wigner::time_averaged_pair(u, h, a, phi)?.value;
    Ok((total - resonant_term(u, h, a, phi)?).norm())
}

/// Bound on `|remainder_term|`: on an atom, `|l(m, n)| <= sup|grad a_q| h N / |p|`
/// with `N` the largest populated `|n|`, and Cauchy-Schwarz over `n` gives
/// `(2 pi)^{-d/2} sup|phi_hat| sum_omega sum_q sup|grad a_q| h N / |p| ||u||^2`.
pub fn remainder_bound(u: &FourierState, h: f64, a: &Symbol, phi: &TimeWindow) -> Result<f64> {
    require_zero_mean(a)?;
    let norm = (2.0 * PI).powf(-(u.dim() as f64) / 2.0);
    let mut total = 0.0;
    for omega in directions_of_modes(a.modes().keys()) {
        let reach = build_resonant(u, h, &omega)?.max_abs_n() as f64 / omega.norm();
        for (_, f) in line_modes(a, &omega) {
            total += f.grad_sup_norm() * h * reach;
        }
    }
    Ok(norm * phi.transform_sup() * total * u.norm_sq())
}

/// `(2 pi)^{-d/2} sum_atoms b(xi) sum_{m - n = k.p} v_t(m) conj(v_t(n))`.
pub fn rho_fourier_coefficient(
    r: &ResonantMeasure,
    t: f64,
    k: &LatticePoint,
    b: &CoefficientFn,
) -> Result<Complex64> {
    let lambda =
        r.omega.multiple_of(k).filter(|l| *l != 0).ok_or_else(|| {
            Error::NotOnLine(k.coords().to_vec(), r.omega.vector().coords().to_vec())
        })?;
    let shift = lambda * r.omega.norm_sq();
    let norm = (2.0 * PI).powf(-(r.omega.dim() as f64) / 2.0);
    let mut acc = KahanSum::new();
    for atom in &r.atoms {
        let mut inner = KahanSum::new();
        for &(n, vn) in &atom.v {
            let vm = atom.get(n + shift);
            if vm != Complex64::default() {
                inner.add(
                    vm * line_phase(n + shift, t, &r.omega)
                        * (vn * line_phase(n, t, &r.omega)).conj(),
                );
            }
        }
        acc.add(b.eval(&atom.xi) * inner.value());
    }
    Ok(acc.value() * norm)
}

/// `sum_atoms b(xi) |sum_n v_t(n) phi_n(s)|^2` with
/// `phi_n(s) = e^{i n s / |p|} / sqrt(2 pi |p|)`, `s` the arc length on the geodesic.
pub fn trace_density_eval(r: &ResonantMeasure, t: f64, s: f64, b: &CoefficientFn) -> Result<f64> {
    if !b.is_nonnegative() {
        return Err(Error::NotNonnegative);
    }
    let len = r.omega.geodesic_length();
    let p = r.omega.norm();
    let mut acc = KahanSum::new();
    for atom in &r.atoms {
        let mut wave = KahanSum::new();
        for &(n, vn) in &atom.v {
            wave.add(
                vn * line_phase(n, t, &r.omega) * Complex64::from_polar(1.0, n as f64 * s / p),
            );
        }
        acc.add(Complex64::new(
            b.eval(&atom.xi).re * wave.value().norm_sqr() / len,
            0.0,
        ));
    }
    Ok(acc.value().re)
}

/// `resonant_term(zero_mean_part(a)) + int phi * momentum_marginal_pair(u, h, mean_mode(a))`.
pub fn main_formula_pair(
    u: &FourierState,
    h: f64,
    a: &Symbol,
    phi: &TimeWindow,
) -> Result<Complex64> {
    let resonant = resonant_term(u, h, &a.zero_mean_part(), phi)?;
    Ok(resonant + momentum_marginal_pair(u, h, &a.mean_mode()) * phi.integral())
}

/// `near_hyperplane_mass` along an h schedule.
pub fn vanishing_criterion(
    family: &StateFamily,
    d: usize,
    omega: &PrimitiveDirection,
    width: f64,
    h_schedule: &[f64],
) -> Result<Vec<f64>> {
    if !(width > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "slab width must be positive, got {width}"
        )));
    }
    h_schedule
        .iter()
        .map(|&h| near_hyperplane_mass(&family.generate(d, h)?, omega, width))
        .collect()
}

/// `sum_k b(hk)|u_hat(k)|^2 + h N sup|grad b| ||u||^2 - trace_pair(R, b)` with
/// `N` the largest populated `|n|`.
pub fn domination_gap(
    u: &FourierState,
    h: f64,
    omega: &PrimitiveDirection,
    b: &CoefficientFn,
) -> Result<f64> {
    if !b.is_nonnegative() {
        return Err(Error::NotNonnegative);
    }
    let r = build_resonant(u, h, omega)?;
    let marginal = momentum_marginal_pair(u, h, b).re;
    let slack = h * r.max_abs_n() as f64 * b.grad_sup_norm() * u.norm_sq();
    Ok(marginal + slack - trace_pair(&r, b).re)
}
