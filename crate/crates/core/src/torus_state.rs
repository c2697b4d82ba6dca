//! Sparse Fourier states on the flat torus `T^d = R^d / 2 pi Z^d` and their
//! free Schrodinger evolution.
//!
//! Amplitudes are taken in the orthonormal basis
//! `psi_k(x) = (2 pi)^{-d/2} e^{i k.x}`, so the L2 norm is the l2 norm of the
//! coefficients. Density modes `m_hat(q) = (2 pi)^{-d} int m e^{-i q.x} dx`
//! are plain Fourier coefficients instead: `m = 1` is `{0: 1}`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{KahanSum, CHUNK};
use crate::resonance_lattice::{LatticePoint, PrimitiveDirection};

/// Sparse complex coefficients indexed by lattice points.
pub type ModeMap = BTreeMap<LatticePoint, Complex64>;

/// A finitely supported `u = sum_k u_hat(k) psi_k`, modes kept in
/// lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierState {
    d: usize,
    modes: Vec<(LatticePoint, Complex64)>,
    dropped_mass: f64,
}

impl FourierState {
    pub fn empty(d: usize) -> Self {
        Self {
            d,
            modes: Vec::new(),
            dropped_mass: 0.0,
        }
    }

    /// Builds a state from `(k, amplitude)` pairs; repeated modes are summed.
    pub fn from_modes(
        d: usize,
        modes: impl IntoIterator<Item = (LatticePoint, Complex64)>,
    ) -> Result<Self> {
        let mut map = ModeMap::new();
        for (k, c) in modes {
            if k.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: k.dim(),
                });
            }
            *map.entry(k).or_default() += c;
        }
        Ok(Self {
            d,
            modes: map.into_iter().collect(),
            dropped_mass: 0.0,
        })
    }

    /// The basis vector `psi_k`.
    pub fn basis(k: LatticePoint) -> Self {
        let d = k.dim();
        Self {
            d,
            modes: vec![(k, Complex64::new(1.0, 0.0))],
            dropped_mass: 0.0,
        }
    }

    /// Random state with `count` distinct modes in `[-half_width, half_width]^d`
    /// and amplitudes drawn uniformly from the unit square.
    pub fn random(d: usize, count: usize, half_width: i64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let side = (2 * half_width + 1) as usize;
        let count = count.min(side.pow(d as u32));
        let mut map = ModeMap::new();
        while map.len() < count {
            let k = LatticePoint::new((0..d).map(|_| rng.gen_range(-half_width..=half_width)));
            let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            map.insert(k, c);
        }
        Self {
            d,
            modes: map.into_iter().collect(),
            dropped_mass: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[(LatticePoint, Complex64)] {
        &self.modes
    }

    pub fn support(&self) -> impl Iterator<Item = &LatticePoint> {
        self.modes.iter().map(|(k, _)| k)
    }

    pub fn get(&self, k: &LatticePoint) -> Complex64 {
        self.modes
            .binary_search_by(|(m, _)| m.cmp(k))
            .map(|i| self.modes[i].1)
            .unwrap_or_default()
    }

    /// Mass of the coefficients discarded when the state was generated.
    pub fn dropped_mass(&self) -> f64 {
        self.dropped_mass
    }

    pub fn with_dropped_mass(mut self, mass: f64) -> Self {
        self.dropped_mass = mass;
        self
    }

    pub fn norm_sq(&self) -> f64 {
        let mut acc = KahanSum::new();
        for (_, c) in &self.modes {
            acc.add(Complex64::new(c.norm_sqr(), 0.0));
        }
        acc.value().re
    }

    pub fn scaled(&self, alpha: Complex64) -> Self {
        Self {
            d: self.d,
            modes: self
                .modes
                .iter()
                .map(|(k, c)| (k.clone(), c * alpha))
                .collect(),
            dropped_mass: self.dropped_mass * alpha.norm_sqr(),
        }
    }

    /// `e^{i t Delta / 2} u`: each coefficient picks up `e^{-i t |k|^2 / 2}`.
    pub fn evolve(&self, t: f64) -> Self {
        Self {
            d: self.d,
            modes: self
                .modes
                .iter()
                .map(|(k, c)| (k.clone(), c * free_phase(k, t)))
                .collect(),
            dropped_mass: self.dropped_mass,
        }
    }

    /// Sums `term(i, j, s)` over all pairs with `modes[j].k = modes[i].k + shifts[s]`,
    /// in `(k, shift)` order. Shifts must be sorted and of matching dimension.
    pub(crate) fn shifted_pair_sum<F>(&self, shifts: &[LatticePoint], term: F) -> (Complex64, usize)
    where
        F: Fn(usize, usize, usize) -> Complex64 + Sync,
    {
        use rayon::prelude::*;
        let n = self.modes.len();
        if n == 0 || shifts.is_empty() {
            return (Complex64::default(), 0);
        }
        let chunks = n.div_ceil(CHUNK);
        let partials: Vec<(Complex64, usize)> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let lo = c * CHUNK;
                let hi = ((c + 1) * CHUNK).min(n);
                let first = self.modes[lo].0.coords();
                let mut ptr: Vec<usize> = shifts
                    .iter()
                    .map(|q| {
                        self.modes.partition_point(|(m, _)| {
                            cmp_shifted(first, q.coords(), m.coords()) == Ordering::Greater
                        })
                    })
                    .collect();
                let mut acc = KahanSum::new();
                let mut terms = 0;
                for i in lo..hi {
                    let k = self.modes[i].0.coords();
                    for (s, q) in shifts.iter().enumerate() {
                        let p = &mut ptr[s];
                        while *p < n
                            && cmp_shifted(k, q.coords(), self.modes[*p].0.coords())
                                == Ordering::Greater
                        {
                            *p += 1;
                        }
                        if *p < n
                            && cmp_shifted(k, q.coords(), self.modes[*p].0.coords())
                                == Ordering::Equal
                        {
                            acc.add(term(i, *p, s));
                            terms += 1;
                        }
                    }
                }
                (acc.value(), terms)
            })
            .collect();
        let mut total = KahanSum::new();
        let mut terms = 0;
        for (v, t) in partials {
            total.add(v);
            terms += t;
        }
        (total.value(), terms)
    }

    pub fn to_json(&self) -> StateJson {
        StateJson {
            d: self.d,
            modes: self
                .modes
                .iter()
                .map(|(k, c)| ModeJson {
                    k: k.coords().to_vec(),
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        }
    }

    pub fn from_json(json: &StateJson) -> Result<Self> {
        Self::from_modes(
            json.d,
            json.modes
                .iter()
                .map(|m| (LatticePoint::from(m.k.clone()), Complex64::new(m.re, m.im))),
        )
    }
}

/// Lexicographic comparison of `a + q` against `b`.
#[inline]
fn cmp_shifted(a: &[i64], q: &[i64], b: &[i64]) -> Ordering {
    for ((x, s), y) in a.iter().zip(q).zip(b) {
        match (x + s).cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

#[inline]
pub(crate) fn free_phase(k: &LatticePoint, t: f64) -> Complex64 {
    Complex64::from_polar(1.0, -0.5 * t * k.norm_sq() as f64)
}

/// JSON wire form of a state: `{"d": int, "modes": [{"k": [..], "re": .., "im": ..}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateJson {
    pub d: usize,
    pub modes: Vec<ModeJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeJson {
    pub k: Vec<i64>,
    pub re: f64,
    pub im: f64,
}

pub fn modes_from_json(d: usize, modes: &[ModeJson]) -> Result<ModeMap> {
    let mut map = ModeMap::new();
    for m in modes {
        if m.k.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: m.k.len(),
            });
        }
        *map.entry(LatticePoint::from(m.k.clone())).or_default() += Complex64::new(m.re, m.im);
    }
    Ok(map)
}

pub fn norm_sq(u: &FourierState) -> f64 {
    u.norm_sq()
}

pub fn evolve(u: &FourierState, t: f64) -> FourierState {
    u.evolve(t)
}

/// Gaussian wave-packet profile `rho(y) = exp(-|y|^2 / (2 sigma^2))` on `R^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianProfile {
    pub sigma: f64,
}

impl GaussianProfile {
    /// `||rho||^2_{L2(R^d)} = (pi sigma^2)^{d/2}`.
    pub fn norm_sq(&self, d: usize) -> f64 {
        (PI * self.sigma * self.sigma).powf(d as f64 / 2.0)
    }

    /// `rho_hat(zeta) = (2 pi)^{-d} int rho(y) e^{-i zeta.y} dy`.
    pub fn transform(&self, zeta_sq: f64, d: usize) -> f64 {
        let s2 = self.sigma * self.sigma;
        (s2 / (2.0 * PI)).powf(d as f64 / 2.0) * (-0.5 * s2 * zeta_sq).exp()
    }
}

/// Periodized wave packet `h^{-d/4} rho((x - x0)/sqrt h) e^{i xi0.x/h}` with a
/// Gaussian profile. Coefficients below `trunc * max|c|^2` are discarded, with
/// the cutoff widened until the discarded mass is below `trunc * ||rho||^2`.
pub fn wave_packet(
    x0: &[f64],
    xi0: &[f64],
    sigma: f64,
    h: f64,
    trunc: f64,
) -> Result<FourierState> {
    if !(h > 0.0) {
        return Err(Error::NonPositiveScale(h));
    }
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if !(trunc > 0.0 && trunc < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "trunc must lie in (0, 1), got {trunc}"
        )));
    }
    let d = xi0.len();
    if x0.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: x0.len(),
        });
    }
    let profile = GaussianProfile { sigma };
    let center: Vec<f64> = xi0.iter().map(|x| x / h).collect();
    let decay = sigma * sigma * h;
    let amp = (2.0 * PI).powf(d as f64 / 2.0) * h.powf(d as f64 / 4.0);
    // Mass of the untruncated lattice sum, separable across coordinates.
    let lattice_total: f64 = amp
        * amp
        * center
            .iter()
            .map(|&c| gaussian_line_sum(decay, c))
            .product::<f64>()
        * profile.transform(0.0, d).powi(2);

    let mut level = (1.0 / trunc).ln();
    loop {
        let radius = (level / decay).sqrt();
        let mut modes = Vec::new();
        let mut kept = KahanSum::new();
        let mut k = vec![0i64; d];
        let ranges: Vec<(i64, i64)> = center
            .iter()
            .map(|c| ((c - radius).ceil() as i64, (c + radius).floor() as i64))
            .collect();
        fill_ball(
            &ranges,
            &center,
            radius * radius,
            0,
            0.0,
            &mut k,
            &mut |k, dist_sq| {
                let zeta_sq = h * dist_sq;
                let phase: f64 = -k
                    .iter()
                    .zip(&center)
                    .zip(x0)
                    .map(|((&ki, c), x)| (ki as f64 - c) * x)
                    .sum::<f64>();
                let c = Complex64::from_polar(amp * profile.transform(zeta_sq, d), phase);
                kept.add(Complex64::new(c.norm_sqr(), 0.0));
                modes.push((LatticePoint::new(k.iter().copied()), c));
            },
        );
        let dropped = (lattice_total - kept.value().re).max(0.0);
        if dropped <= trunc * profile.norm_sq(d) || level > 800.0 {
            return Ok(FourierState {
                d,
                modes,
                dropped_mass: dropped,
            });
        }
        level += 2.0;
    }
}

/// `sum_{n in Z} exp(-a (n - c)^2)`.
fn gaussian_line_sum(a: f64, c: f64) -> f64 {
    let reach = (760.0 / a).sqrt().ceil() as i64 + 1;
    let base = c.round() as i64;
    let mut acc = KahanSum::new();
    for n in base - reach..=base + reach {
        let x = n as f64 - c;
        acc.add(Complex64::new((-a * x * x).exp(), 0.0));
    }
    acc.value().re
}

/// Visits lattice points of the box `ranges` within squared distance
/// `r_sq` of `center`, in lexicographic order.
fn fill_ball(
    ranges: &[(i64, i64)],
    center: &[f64],
    r_sq: f64,
    axis: usize,
    partial: f64,
    k: &mut [i64],
    visit: &mut impl FnMut(&[i64], f64),
) {
    if axis == ranges.len() {
        visit(k, partial);
        return;
    }
    let (lo, hi) = ranges[axis];
    for c in lo..=hi {
        let dx = c as f64 - center[axis];
        let next = partial + dx * dx;
        if next > r_sq {
            continue;
        }
        k[axis] = c;
        fill_ball(ranges, center, r_sq, axis + 1, next, k, visit);
    }
}

/// Resonant plane wave with profile coefficients `rho_hat` translated by `n K`;
/// returns the state together with its scale `h = 1/n`.
pub fn resonant_plane_wave(
    profile_modes: &ModeMap,
    direction: &LatticePoint,
    n: i64,
    trunc: f64,
) -> Result<(FourierState, f64)> {
    if n < 1 {
        return Err(Error::InvalidParameter(format!("n must be >= 1, got {n}")));
    }
    let d = direction.dim();
    let shift = direction.scale(n);
    let max_sq = profile_modes
        .values()
        .map(|c| c.norm_sqr())
        .fold(0.0, f64::max);
    let mut dropped = 0.0;
    let mut modes = Vec::with_capacity(profile_modes.len());
    for (k, c) in profile_modes {
        if k.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: k.dim(),
            });
        }
        if c.norm_sqr() < trunc * max_sq {
            dropped += c.norm_sqr();
            continue;
        }
        modes.push((k + &shift, *c));
    }
    // translation preserves lexicographic order
    Ok((
        FourierState {
            d,
            modes,
            dropped_mass: dropped,
        },
        1.0 / n as f64,
    ))
}

/// Mass outside the ball `|k| <= R/h`.
pub fn h_oscillation_tail(u: &FourierState, h: f64, radius: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::NonPositiveScale(h));
    }
    let cut = radius / h;
    let cut_sq = cut * cut;
    Ok(u.modes
        .iter()
        .filter(|(k, _)| k.norm_sq() as f64 > cut_sq)
        .map(|(_, c)| c.norm_sqr())
        .sum())
}

/// Mass in the slab `|k . p| < N` around the hyperplane orthogonal to `p`.
pub fn near_hyperplane_mass(u: &FourierState, p: &PrimitiveDirection, width: f64) -> Result<f64> {
    if u.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            found: p.dim(),
        });
    }
    let mut acc = KahanSum::new();
    for (k, c) in &u.modes {
        if (k.dot(p.vector()) as f64).abs() < width {
            acc.add(Complex64::new(c.norm_sqr(), 0.0));
        }
    }
    Ok(acc.value().re)
}

/// `int m |u|^2 dx = sum_{k,j} m_hat(j - k) u_hat(k) conj(u_hat(j))`.
pub fn position_density_pair(u: &FourierState, m_modes: &ModeMap) -> Result<Complex64> {
    let shifts: Vec<LatticePoint> = m_modes.keys().cloned().collect();
    for q in &shifts {
        if q.dim() != u.dim() {
            return Err(Error::DimensionMismatch {
                expected: u.dim(),
                found: q.dim(),
            });
        }
    }
    let weights: Vec<Complex64> = m_modes.values().copied().collect();
    let modes = u.modes();
    let (value, _) = u.shifted_pair_sum(&shifts, |i, j, s| {
        weights[s] * modes[i].1 * modes[j].1.conj()
    });
    Ok(value)
}

/// Parametric families `h -> FourierState` of initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateFamily {
    WavePacket {
        x0: Vec<f64>,
        xi0: Vec<f64>,
        sigma: f64,
        #[serde(default = "default_trunc")]
        trunc: f64,
    },
    /// Requires `h = 1/n`; the profile is translated by `n * direction`.
    ResonantPlaneWave {
        profile: Vec<ModeJson>,
        direction: Vec<i64>,
        #[serde(default = "default_trunc")]
        trunc: f64,
    },
    /// Unit-mass, random-phase superposition of the modes with
    /// `| |k| - radius/h | < 1/2`.
    Shell {
        radius: f64,
        seed: u64,
    },
    Superposition {
        components: Vec<WeightedFamily>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedFamily {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
    pub family: StateFamily,
}

fn default_trunc() -> f64 {
    1e-12
}

impl StateFamily {
    pub fn generate(&self, d: usize, h: f64) -> Result<FourierState> {
        if !(h > 0.0) {
            return Err(Error::NonPositiveScale(h));
        }
        let state = match self {
            StateFamily::WavePacket {
                x0,
                xi0,
                sigma,
                trunc,
            } => wave_packet(x0, xi0, *sigma, h, *trunc)?,
            StateFamily::ResonantPlaneWave {
                profile,
                direction,
                trunc,
            } => {
                let n = (1.0 / h).round();
                if ((n * h) - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "resonant plane waves need h = 1/n, got h = {h}"
                    )));
                }
                let profile = modes_from_json(d, profile)?;
                resonant_plane_wave(
                    &profile,
                    &LatticePoint::from(direction.clone()),
                    n as i64,
                    *trunc,
                )?
                .0
            }
            StateFamily::Shell { radius, seed } => shell_state(d, *radius, h, *seed)?,
            StateFamily::Superposition { components } => {
                let mut map = ModeMap::new();
                let mut dropped_amp = 0.0;
                for comp in components {
                    let w = Complex64::new(comp.re, comp.im);
                    let part = comp.family.generate(d, h)?;
                    dropped_amp += w.norm() * part.dropped_mass().sqrt();
                    for (k, c) in part.modes {
                        *map.entry(k).or_default() += w * c;
                    }
                }
                FourierState {
                    d,
                    modes: map.into_iter().collect(),
                    dropped_mass: dropped_amp * dropped_amp,
                }
            }
        };
        if state.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: state.dim(),
            });
        }
        Ok(state)
    }

    /// `||rho||^2` for wave packets, `sum |rho_hat|^2` for plane waves.
    pub fn limit_mass(&self, d: usize) -> Option<f64> {
        match self {
            StateFamily::WavePacket { sigma, .. } => {
                Some(GaussianProfile { sigma: *sigma }.norm_sq(d))
            }
            StateFamily::ResonantPlaneWave { profile, .. } => {
                Some(profile.iter().map(|m| m.re * m.re + m.im * m.im).sum())
            }
            StateFamily::Shell { .. } => Some(1.0),
            StateFamily::Superposition { .. } => None,
        }
    }
}

fn shell_state(d: usize, radius: f64, h: f64, seed: u64) -> Result<FourierState> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "shell radius must be positive, got {radius}"
        )));
    }
    let target = radius / h;
    let outer = target + 0.5;
    let inner = (target - 0.5).max(0.0);
    let b = outer.floor() as i64;
    let ranges = vec![(-b, b); d];
    let center = vec![0.0; d];
    let mut pts = Vec::new();
    let mut k = vec![0i64; d];
    fill_ball(
        &ranges,
        &center,
        outer * outer,
        0,
        0.0,
        &mut k,
        &mut |k, r_sq| {
            if r_sq >= inner * inner && r_sq < outer * outer {
                pts.push(LatticePoint::new(k.iter().copied()));
            }
        },
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amp = if pts.is_empty() {
        0.0
    } else {
        (pts.len() as f64).sqrt().recip()
    };
    let modes = pts
        .into_iter()
        .map(|k| (k, Complex64::from_polar(amp, rng.gen_range(0.0..2.0 * PI))))
        .collect();
    Ok(FourierState {
        d,
        modes,
        dropped_mass: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resonance_lattice::primitive_direction;

    fn lp<const N: usize>(c: [i64; N]) -> LatticePoint {
        LatticePoint::from(c)
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn norm_examples() {
        assert_eq!(FourierState::basis(lp([3, -1])).norm_sq(), 1.0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let u = FourierState::from_modes(2, [(lp([1, 0]), c(s, 0.0)), (lp([0, 1]), c(0.0, s))])
            .unwrap();
        assert!((u.norm_sq() - 1.0).abs() < 1e-15);
        assert_eq!(FourierState::empty(3).norm_sq(), 0.0);
    }

    #[test]
    fn evolve_examples() {
        let zero = FourierState::basis(lp([0, 0]));
        assert_eq!(zero.evolve(12.3), zero);

        let k = FourierState::basis(lp([2, 1]));
        let e = k.evolve(0.7);
        assert!((e.get(&lp([2, 1])) - Complex64::from_polar(1.0, -0.7 * 2.5)).norm() < 1e-15);

        let u = FourierState::from_modes(2, [(lp([1, 0]), c(1.0, 0.0)), (lp([2, 0]), c(1.0, 0.0))])
            .unwrap();
        let v = u.evolve(2.0 * PI);
        assert!((v.get(&lp([1, 0])) - c(-1.0, 0.0)).norm() < 1e-14);
        assert!((v.get(&lp([2, 0])) - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn from_modes_rejects_wrong_dimension() {
        assert!(matches!(
            FourierState::from_modes(2, [(lp([1, 0, 0]), c(1.0, 0.0))]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn wave_packet_centered_is_real_and_symmetric() {
        let u = wave_packet(&[0.0, 0.0], &[0.0, 0.0], 0.3, 0.05, 1e-12).unwrap();
        let peak = u.get(&lp([0, 0]));
        for (k, a) in u.modes() {
            assert!(a.im.abs() < 1e-15 && a.re > 0.0);
            assert!(a.re <= peak.re);
            assert_eq!(*a, u.get(&-k));
        }
    }

    #[test]
    fn wave_packet_peak_sits_at_xi0_over_h() {
        let h = 0.125;
        let u = wave_packet(&[0.4, -1.0], &[1.0, -0.5], 0.4, h, 1e-10).unwrap();
        let (kmax, _) = u
            .modes()
            .iter()
            .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
            .unwrap();
        assert_eq!(kmax, &lp([8, -4]));
    }

    #[test]
    fn wave_packet_mass_is_accounted() {
        let sigma = 0.5;
        let h = 1.0 / 64.0;
        let trunc = 1e-10;
        let u = wave_packet(&[0.0, 0.0], &[1.0, 0.0], sigma, h, trunc).unwrap();
        let rho = GaussianProfile { sigma }.norm_sq(2);
        assert!(u.dropped_mass() <= trunc * rho);
        // the lattice sum equals ||rho||^2 up to exponentially small aliasing
        assert!(((u.norm_sq() + u.dropped_mass()) - rho).abs() < 1e-12 * rho);
    }

    #[test]
    fn wave_packet_rejects_bad_scale() {
        assert!(matches!(
            wave_packet(&[0.0], &[0.0], 1.0, 0.0, 1e-8),
            Err(Error::NonPositiveScale(_))
        ));
        assert!(matches!(
            wave_packet(&[0.0], &[0.0], 1.0, -1.0, 1e-8),
            Err(Error::NonPositiveScale(_))
        ));
    }

    #[test]
    fn resonant_plane_wave_examples() {
        let profile = ModeMap::from([(lp([0, 0]), c(1.0, 0.0))]);
        let (u, h) = resonant_plane_wave(&profile, &lp([1, 0]), 4, 1e-14).unwrap();
        assert_eq!(h, 0.25);
        assert_eq!(u.support().cloned().collect::<Vec<_>>(), vec![lp([4, 0])]);

        let profile = ModeMap::from([(lp([0, 0]), c(0.6, 0.0)), (lp([0, 1]), c(0.0, 0.8))]);
        let (u, _) = resonant_plane_wave(&profile, &lp([1, 0]), 2, 1e-14).unwrap();
        assert_eq!(
            u.support().cloned().collect::<Vec<_>>(),
            vec![lp([2, 0]), lp([2, 1])]
        );
        assert_eq!(u.norm_sq(), 0.6 * 0.6 + 0.8 * 0.8);

        assert!(resonant_plane_wave(&profile, &lp([1, 0]), 0, 1e-14).is_err());
    }

    #[test]
    fn oscillation_tail_examples() {
        let u = FourierState::from_modes(1, [(lp([3]), c(1.0, 0.0)), (lp([-10]), c(0.0, 2.0))])
            .unwrap();
        assert_eq!(h_oscillation_tail(&u, 0.1, 2.0).unwrap(), 0.0);
        assert_eq!(h_oscillation_tail(&u, 0.1, 0.5).unwrap(), 4.0);
        assert_eq!(h_oscillation_tail(&u, 0.1, 0.2).unwrap(), 5.0);
    }

    #[test]
    fn oscillation_tail_decreases_for_packets() {
        let mut prev = f64::INFINITY;
        for j in 3..=7 {
            let h = 0.5f64.powi(j);
            let u = wave_packet(&[0.0, 0.0], &[1.0, 0.0], 0.3, h, 1e-12).unwrap();
            let tail = h_oscillation_tail(&u, h, 1.5).unwrap();
            assert!(tail < prev, "h={h}: {tail} !< {prev}");
            prev = tail;
        }
    }

    #[test]
    fn near_hyperplane_examples() {
        let p = primitive_direction(&lp([1, 1])).unwrap();
        let on = FourierState::from_modes(2, [(lp([3, -3]), c(0.0, 2.0))]).unwrap();
        assert_eq!(near_hyperplane_mass(&on, &p, 0.5).unwrap(), 4.0);
        let off = FourierState::basis(lp([3, 4]));
        assert_eq!(near_hyperplane_mass(&off, &p, 5.0).unwrap(), 0.0);

        let profile = ModeMap::from([
            (lp([0, 0]), c(1.0, 0.0)),
            (lp([0, 2]), c(0.5, 0.5)),
            (lp([-1, -1]), c(0.2, 0.0)),
        ]);
        let (u, _) = resonant_plane_wave(&profile, &lp([1, 0]), 40, 1e-14).unwrap();
        let q = primitive_direction(&lp([0, 1])).unwrap();
        assert_eq!(near_hyperplane_mass(&u, &q, 2.5).unwrap(), u.norm_sq());
        assert!(
            near_hyperplane_mass(&u, &primitive_direction(&lp([1, 0, 0])).unwrap(), 1.0).is_err()
        );
    }

    #[test]
    fn position_density_examples() {
        let u = FourierState::random(2, 30, 5, 7);
        let one = ModeMap::from([(lp([0, 0]), c(1.0, 0.0))]);
        let v = position_density_pair(&u, &one).unwrap();
        assert!((v - c(u.norm_sq(), 0.0)).norm() < 1e-13 * u.norm_sq());

        let single = FourierState::from_modes(2, [(lp([2, 2]), c(0.3, -0.4))]).unwrap();
        let m = ModeMap::from([(lp([0, 0]), c(0.7, 0.1)), (lp([1, 0]), c(2.0, 0.0))]);
        let v = position_density_pair(&single, &m).unwrap();
        assert!((v - c(0.7, 0.1) * 0.25).norm() < 1e-15);
    }

    /// Oracle: tensor-grid quadrature of `m |u|^2` (exact for trigonometric
    /// polynomials of degree below the grid size).
    fn grid_density_pair(u: &FourierState, m: &ModeMap, n: usize) -> Complex64 {
        let dx = 2.0 * PI / n as f64;
        let mut acc = Complex64::default();
        for a in 0..n {
            for b in 0..n {
                let x = [a as f64 * dx, b as f64 * dx];
                let uval: Complex64 = u
                    .modes()
                    .iter()
                    .map(|(k, c)| {
                        c * Complex64::from_polar(
                            1.0 / (2.0 * PI),
                            k.coords()[0] as f64 * x[0] + k.coords()[1] as f64 * x[1],
                        )
                    })
                    .sum();
                let mval: Complex64 = m
                    .iter()
                    .map(|(q, c)| {
                        c * Complex64::from_polar(
                            1.0,
                            q.coords()[0] as f64 * x[0] + q.coords()[1] as f64 * x[1],
                        )
                    })
                    .sum();
                acc += mval * uval.norm_sqr();
            }
        }
        acc * dx * dx
    }

    #[test]
    fn position_density_matches_grid_quadrature() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let u = FourierState::from_modes(2, [(lp([1, 0]), c(s, 0.0)), (lp([2, 0]), c(s, 0.0))])
            .unwrap();
        let cc = c(0.3, 0.7);
        let m = ModeMap::from([(lp([1, 0]), cc), (lp([-1, 0]), cc.conj())]);
        let v = position_density_pair(&u, &m).unwrap();
        assert!((v - c(cc.re, 0.0)).norm() < 1e-14);
        assert!((v - grid_density_pair(&u, &m, 64)).norm() < 1e-12);

        let u = FourierState::random(2, 12, 4, 3);
        let m = ModeMap::from([
            (lp([0, 0]), c(1.0, 0.0)),
            (lp([1, -2]), c(0.2, 0.1)),
            (lp([-1, 2]), c(0.2, -0.1)),
            (lp([3, 1]), c(0.0, 0.5)),
        ]);
        let v = position_density_pair(&u, &m).unwrap();
        assert!((v - grid_density_pair(&u, &m, 64)).norm() < 1e-11);
    }

    #[test]
    fn json_roundtrip_is_ordered() {
        let u = FourierState::random(3, 10, 3, 11);
        let json = serde_json::to_string(&u.to_json()).unwrap();
        let back = FourierState::from_json(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, u);
        let ks: Vec<_> = u.to_json().modes.iter().map(|m| m.k.clone()).collect();
        assert!(ks.windows(2).all(|w| w[0] < w[1]));
        assert!(serde_json::from_str::<StateJson>(r#"{"d":1,"modes":[],"extra":0}"#).is_err());
    }

    #[test]
    fn shell_family_is_normalized() {
        let fam = StateFamily::Shell {
            radius: 1.0,
            seed: 5,
        };
        let u = fam.generate(2, 0.1).unwrap();
        assert!(!u.is_empty());
        assert!((u.norm_sq() - 1.0).abs() < 1e-12);
        for k in u.support() {
            let r = (k.norm_sq() as f64).sqrt();
            assert!((r - 10.0).abs() < 0.5);
        }
        assert_eq!(fam.generate(2, 0.1).unwrap(), u);
    }

    #[test]
    fn plane_wave_family_needs_reciprocal_integer_scale() {
        let fam = StateFamily::ResonantPlaneWave {
            profile: vec![ModeJson {
                k: vec![0, 0],
                re: 1.0,
                im: 0.0,
            }],
            direction: vec![1, 0],
            trunc: 1e-12,
        };
        assert!(fam.generate(2, 0.125).is_ok());
        assert!(fam.generate(2, 0.3).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn evolution_is_unitary_and_a_group(seed in 0u64..1000, s in -20.0f64..20.0, t in -20.0f64..20.0) {
                let u = FourierState::random(2, 25, 12, seed);
                let a = u.evolve(s).evolve(t);
                let b = u.evolve(s + t);
                prop_assert!((a.norm_sq() - u.norm_sq()).abs() <= 1e-12 * u.norm_sq());
                prop_assert_eq!(a.support().collect::<Vec<_>>(), u.support().collect::<Vec<_>>());
                for ((_, x), (_, y)) in a.modes().iter().zip(b.modes()) {
                    prop_assert!((x - y).norm() <= 1e-12);
                }
            }

            #[test]
            fn density_pair_phase_invariant_and_real(seed in 0u64..1000, theta in 0.0f64..6.3) {
                let u = FourierState::random(2, 20, 6, seed);
                let m = ModeMap::from([
                    (lp([0, 0]), c(0.5, 0.0)),
                    (lp([1, 1]), c(0.3, -0.2)),
                    (lp([-1, -1]), c(0.3, 0.2)),
                ]);
                let a = position_density_pair(&u, &m).unwrap();
                let b = position_density_pair(&u.scaled(Complex64::from_polar(1.0, theta)), &m).unwrap();
                let scale = u.norm_sq() * m.values().map(|c| c.norm()).sum::<f64>();
                prop_assert!((a - b).norm() <= 1e-12 * scale);
                prop_assert!(a.im.abs() <= 1e-12 * scale);
            }
        }
    }
}
