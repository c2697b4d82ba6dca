//! Pairings of Wigner distributions with phase-space symbols.
//!
//! With `u = sum_k u_hat(k) psi_k` and `a = sum_q a_q(xi) psi_q(x)`,
//! `<w_u^h, a> = (2 pi)^{-d/2} sum_{k,j} u_hat(k) conj(u_hat(j)) a_{j-k}(h (k + j) / 2)`.
//! Every sum below runs over `(k, q)` with `j = k + q`, in sorted order.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::numerics::{ordered_sum, KahanSum};
use crate::resonance_lattice::LatticePoint;
use crate::symbols::{CoefficientFn, Symbol, TimeWindow};
use crate::torus_state::{FourierState, ModeMap};

/// A computed pairing together with the number of summed terms and a bound
/// on everything left out by truncating the state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairingResult {
    pub value: Complex64,
    pub terms_summed: usize,
    pub truncation_tail_bound: f64,
}

pub(crate) type Point = SmallVec<[f64; 4]>;

#[inline]
pub(crate) fn midpoint(k: &LatticePoint, j: &LatticePoint, h: f64) -> Point {
    k.coords()
        .iter()
        .zip(j.coords())
        .map(|(&a, &b)| 0.5 * h * (a + b) as f64)
        .collect()
}

pub(crate) fn check_scale(h: f64) -> Result<()> {
    if h > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveScale(h))
    }
}

fn check_dims(u: &FourierState, a: &Symbol) -> Result<()> {
    if u.dim() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            found: a.dim(),
        });
    }
    Ok(())
}

/// `(2 pi)^{-d/2} sum_{k, q} w(k, j) a_q(h (k + j)/2) u_hat(k) conj(u_hat(j))`.
fn weighted_pair_sum<W>(u: &FourierState, h: f64, a: &Symbol, weight: W) -> (Complex64, usize)
where
    W: Fn(&LatticePoint, &LatticePoint) -> Complex64 + Sync,
{
    let shifts: Vec<LatticePoint> = a.modes().keys().cloned().collect();
    let coeffs: Vec<&CoefficientFn> = a.modes().values().collect();
    let norm = (2.0 * PI).powf(-(u.dim() as f64) / 2.0);
    let modes = u.modes();
    let (value, terms) = u.shifted_pair_sum(&shifts, |i, j, s| {
        let (k, uk) = &modes[i];
        let (jj, uj) = &modes[j];
        coeffs[s].eval(&midpoint(k, jj, h)) * weight(k, jj) * uk * uj.conj()
    });
    (value * norm, terms)
}

/// Bound on the pairing error caused by the mass a state generator dropped:
/// `|<w_f,g, a>| <= (2 pi)^{-d/2} sum_q sup|a_q| ||f|| ||g||`.
fn dropped_mass_bound(u: &FourierState, a: &Symbol, factor: f64) -> f64 {
    let dropped = u.dropped_mass();
    if dropped == 0.0 {
        return 0.0;
    }
    let norm = (2.0 * PI).powf(-(u.dim() as f64) / 2.0);
    let cross = 2.0 * (u.norm_sq() * dropped).sqrt() + dropped;
    norm * a.sup_mode_sum() * cross * factor
}

pub fn wigner_pair(u: &FourierState, h: f64, a: &Symbol) -> Result<PairingResult> {
    check_scale(h)?;
    check_dims(u, a)?;
    let (value, terms) = weighted_pair_sum(u, h, a, |_, _| Complex64::new(1.0, 0.0));
    Ok(PairingResult {
        value,
        terms_summed: terms,
        truncation_tail_bound: dropped_mass_bound(u, a, 1.0),
    })
}

/// `int phi(t) <w_{u(t)}^h, a> dt` with `u(t) = e^{i t Delta/2} u`, evaluated as
/// `(2 pi)^{-d/2} sum phi_hat((|k|^2 - |j|^2)/2) a_{j-k}(h(k+j)/2) u_hat(k) conj(u_hat(j))`.
pub fn time_averaged_pair(
    u: &FourierState,
    h: f64,
    a: &Symbol,
    phi: &TimeWindow,
) -> Result<PairingResult> {
    check_scale(h)?;
    check_dims(u, a)?;
    let (value, terms) = weighted_pair_sum(u, h, a, |k, j| {
        phi.transform(0.5 * (k.norm_sq() - j.norm_sq()) as f64)
    });
    Ok(PairingResult {
        value,
        terms_summed: terms,
        truncation_tail_bound: dropped_mass_bound(u, a, phi.transform_sup()),
    })
}

/// `int phi(t) int m |u(t)|^2 dx dt` for density modes `m_hat`.
pub fn time_averaged_position_pair(
    u: &FourierState,
    m_modes: &ModeMap,
    phi: &TimeWindow,
) -> Result<PairingResult> {
    let a = Symbol::from_density(u.dim(), m_modes)?;
    time_averaged_pair(u, 1.0, &a, phi)
}

/// `sum_k b(h k) |u_hat(k)|^2`.
pub fn momentum_marginal_pair(u: &FourierState, h: f64, b: &CoefficientFn) -> Complex64 {
    let modes = u.modes();
    ordered_sum(modes.len(), |i, acc: &mut KahanSum| {
        let (k, c) = &modes[i];
        acc.add(b.eval(&k.to_f64(h)) * c.norm_sqr());
        1
    })
    .0
}

/// `|marginal(evolve(u, t)) - marginal(u)|`; zero up to rounding.
pub fn liouville_invariance_gap(u: &FourierState, h: f64, b: &CoefficientFn, t: f64) -> f64 {
    (momentum_marginal_pair(&u.evolve(t), h, b) - momentum_marginal_pair(u, h, b)).norm()
}

/// `<w^h(ht), a>` against `<w^h(0), a o phi_t>` with `(a o phi_t)(x, xi) = a(x + t xi, xi)`.
pub fn classical_limit_gap(u: &FourierState, h: f64, a: &Symbol, t: f64) -> Result<f64> {
    let lhs = wigner_pair(&u.evolve(h * t), h, a)?.value;
    let (rhs, _) = weighted_pair_sum(u, h, a, |k, j| {
        let q = j - k;
        let xi = midpoint(k, j, h);
        let phase: f64 = q
            .coords()
            .iter()
            .zip(&xi)
            .map(|(&qi, x)| qi as f64 * x)
            .sum();
        Complex64::from_polar(1.0, t * phase)
    });
    Ok((lhs - rhs).norm())
}

/// `|<w^h(ht), a> - mass * a(x0 + t xi0, xi0)|`: distance of the transported
/// pairing from its point-mass limit for data concentrating at `(x0, xi0)`.
pub fn transported_limit_gap(
    u: &FourierState,
    h: f64,
    a: &Symbol,
    t: f64,
    x0: &[f64],
    xi0: &[f64],
    mass: f64,
) -> Result<f64> {
    if x0.len() != u.dim() || xi0.len() != u.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            found: x0.len().max(xi0.len()),
        });
    }
    let lhs = wigner_pair(&u.evolve(h * t), h, a)?.value;
    let x: Vec<f64> = x0.iter().zip(xi0).map(|(x, v)| x + t * v).collect();
    Ok((lhs - a.eval(&x, xi0) * mass).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate;
    use crate::torus_state::wave_packet;

    fn lp<const N: usize>(c: [i64; N]) -> LatticePoint {
        LatticePoint::from(c)
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Oracle: all (k, j) pairs, no merge-join.
    fn brute_pair(u: &FourierState, h: f64, a: &Symbol, phi: Option<&TimeWindow>) -> Complex64 {
        let d = u.dim() as f64;
        let mut acc = Complex64::default();
        for (k, uk) in u.modes() {
            for (j, uj) in u.modes() {
                let q: Vec<i64> = j
                    .coords()
                    .iter()
                    .zip(k.coords())
                    .map(|(a, b)| a - b)
                    .collect();
                let xi: Vec<f64> = j
                    .coords()
                    .iter()
                    .zip(k.coords())
                    .map(|(a, b)| h * (a + b) as f64 / 2.0)
                    .collect();
                let coeff = a.eval_coeff(&LatticePoint::from(q), &xi);
                let w = match phi {
                    Some(p) => p.transform((k.norm_sq() - j.norm_sq()) as f64 / 2.0),
                    None => c(1.0, 0.0),
                };
                acc += coeff * w * uk * uj.conj();
            }
        }
        acc * (2.0 * PI).powf(-d / 2.0)
    }

    fn test_symbol() -> Symbol {
        Symbol::hermitian_from_half(
            2,
            [
                (
                    lp([0, 0]),
                    CoefficientFn::gaussian(c(0.7, 0.0), vec![0.3, 0.0], 1.1),
                ),
                (
                    lp([1, 0]),
                    CoefficientFn::gaussian(c(0.5, 0.2), vec![0.0, 0.4], 0.8),
                ),
                (lp([1, -1]), CoefficientFn::constant(c(0.0, 0.3))),
                (
                    lp([0, 2]),
                    CoefficientFn::PolyGaussian {
                        re: 0.4,
                        im: -0.1,
                        center: vec![0.1, 0.1],
                        width: 0.9,
                        powers: vec![1, 0],
                    },
                ),
            ],
        )
        .unwrap()
    }

    #[test]
    fn single_mode_gives_symbol_value() {
        let b = CoefficientFn::gaussian(c(1.3, 0.0), vec![0.2, -0.1], 0.5);
        let a = Symbol::constant_in_x(2, b.clone()).unwrap();
        let q = lp([3, -1]);
        let h = 0.1;
        let v = wigner_pair(&FourierState::basis(q.clone()), h, &a).unwrap();
        assert!((v.value - b.eval(&q.to_f64(h))).norm() < 1e-15);
        assert_eq!(v.terms_summed, 1);
    }

    #[test]
    fn unmatched_modes_give_zero() {
        let u = FourierState::from_modes(2, [(lp([0, 0]), c(1.0, 0.0)), (lp([1, 0]), c(1.0, 0.0))])
            .unwrap();
        let a = Symbol::new(
            2,
            [(lp([0, 3]), CoefficientFn::constant(c(1.0, 0.0)))],
            false,
        )
        .unwrap();
        let v = wigner_pair(&u, 0.5, &a).unwrap();
        assert_eq!(v.value, Complex64::default());
        assert_eq!(v.terms_summed, 0);
    }

    #[test]
    fn two_mode_example() {
        let s = 0.5f64.sqrt();
        let k = lp([1, 0]);
        let j = lp([2, 0]);
        let u =
            FourierState::from_modes(2, [(k.clone(), c(s, 0.0)), (j.clone(), c(s, 0.0))]).unwrap();
        let g = CoefficientFn::gaussian(c(0.8, -0.3), vec![0.5, 0.0], 0.4);
        let a = Symbol::new(2, [(&j - &k, g.clone())], false).unwrap();
        let h = 0.25;
        let expected = g.eval(&[h * 1.5, 0.0]) * 0.5 / (2.0 * PI);
        assert!((wigner_pair(&u, h, &a).unwrap().value - expected).norm() < 1e-15);

        let phi = TimeWindow::new(1.0, 0.8, 0.3).unwrap();
        let expected = expected * phi.transform(-1.5);
        assert!((time_averaged_pair(&u, h, &a, &phi).unwrap().value - expected).norm() < 1e-15);
    }

    #[test]
    fn time_average_of_single_mode() {
        let b = CoefficientFn::gaussian(c(1.0, 0.0), vec![1.0, 1.0], 2.0);
        let a = Symbol::constant_in_x(2, b.clone()).unwrap();
        let phi = TimeWindow::new(0.5, 2.0, -1.0).unwrap();
        let q = lp([4, 5]);
        let v = time_averaged_pair(&FourierState::basis(q.clone()), 0.2, &a, &phi).unwrap();
        assert!((v.value - b.eval(&q.to_f64(0.2)) * phi.integral()).norm() < 1e-14);
    }

    #[test]
    fn mean_only_symbol_reduces_to_marginal() {
        let u = FourierState::random(2, 40, 6, 5);
        let b = CoefficientFn::gaussian(c(0.9, 0.0), vec![0.0, 0.5], 1.0);
        let a = Symbol::constant_in_x(2, b.clone()).unwrap();
        let phi = TimeWindow::unit();
        let v = time_averaged_pair(&u, 0.1, &a, &phi).unwrap().value;
        let m = momentum_marginal_pair(&u, 0.1, &b) * phi.integral();
        assert!((v - m).norm() <= 1e-14 * m.norm());
        let w = wigner_pair(&u, 0.1, &a).unwrap().value;
        assert!((w - momentum_marginal_pair(&u, 0.1, &b)).norm() <= 1e-15 * w.norm());
    }

    #[test]
    fn merge_join_matches_brute_force() {
        let a = test_symbol();
        let phi = TimeWindow::new(1.2, 0.7, 0.4).unwrap();
        for seed in 0..5 {
            let u = FourierState::random(2, 60, 3, seed);
            let v = wigner_pair(&u, 0.3, &a).unwrap().value;
            let o = brute_pair(&u, 0.3, &a, None);
            assert!((v - o).norm() <= 1e-13 * (1.0 + o.norm()));
            let v = time_averaged_pair(&u, 0.3, &a, &phi).unwrap().value;
            let o = brute_pair(&u, 0.3, &a, Some(&phi));
            assert!((v - o).norm() <= 1e-13 * (1.0 + o.norm()));
        }
    }

    #[test]
    fn time_average_matches_quadrature() {
        let a = test_symbol();
        for (seed, phi) in [
            (1, TimeWindow::unit()),
            (2, TimeWindow::new(0.6, 0.5, 0.8).unwrap()),
        ] {
            let u = FourierState::random(2, 50, 3, seed);
            let h = 0.2;
            let lo = phi.center - 12.0 * phi.width;
            let hi = phi.center + 12.0 * phi.width;
            let oracle = integrate(
                |t| wigner_pair(&u.evolve(t), h, &a).unwrap().value * phi.eval(t),
                lo,
                hi,
                1200,
                16,
            );
            let v = time_averaged_pair(&u, h, &a, &phi).unwrap().value;
            assert!((v - oracle).norm() <= 1e-8, "{v} vs {oracle}");
        }
    }

    #[test]
    fn sesquilinearity_and_reality() {
        let a = test_symbol();
        let phi = TimeWindow::new(1.0, 1.5, 0.0).unwrap();
        let u = FourierState::random(2, 80, 5, 9);
        let alpha = c(0.6, -1.3);
        let v = time_averaged_pair(&u, 0.15, &a, &phi).unwrap().value;
        let w = time_averaged_pair(&u.scaled(alpha), 0.15, &a, &phi)
            .unwrap()
            .value;
        assert!((w - v * alpha.norm_sqr()).norm() <= 1e-13 * w.norm());
        assert!(v.im.abs() <= 1e-10 * (v.norm() + u.norm_sq()));
    }

    #[test]
    fn density_symbol_matches_position_pair() {
        let u = FourierState::random(2, 70, 5, 4);
        let m = ModeMap::from([
            (lp([0, 0]), c(1.0, 0.0)),
            (lp([1, 0]), c(0.2, 0.1)),
            (lp([-1, 0]), c(0.2, -0.1)),
            (lp([2, -1]), c(0.0, 0.3)),
        ]);
        let a = Symbol::from_density(2, &m).unwrap();
        let v = wigner_pair(&u, 0.37, &a).unwrap().value;
        let p = crate::torus_state::position_density_pair(&u, &m).unwrap();
        assert!((v - p).norm() <= 1e-12 * p.norm());
    }

    #[test]
    fn liouville_gap_examples() {
        let b = CoefficientFn::gaussian(c(1.0, 0.0), vec![0.0, 0.0], 1.0);
        let u = FourierState::random(2, 100, 8, 21);
        assert_eq!(liouville_invariance_gap(&u, 0.1, &b, 0.0), 0.0);
        assert_eq!(
            liouville_invariance_gap(&FourierState::basis(lp([2, 3])), 0.1, &b, 4.0),
            0.0
        );
        assert!(liouville_invariance_gap(&u, 0.1, &b, 3.7) <= 1e-12 * u.norm_sq() * b.sup_norm());
    }

    #[test]
    fn classical_limit_gap_examples() {
        let u = FourierState::random(2, 60, 6, 2);
        let a = test_symbol();
        assert!(classical_limit_gap(&u, 0.1, &a, 0.0).unwrap() <= 1e-14);
        let b = Symbol::constant_in_x(2, CoefficientFn::gaussian(c(1.0, 0.0), vec![0.0, 0.0], 1.0))
            .unwrap();
        assert!(classical_limit_gap(&u, 0.1, &b, 1.0).unwrap() <= 1e-14);
        assert!(classical_limit_gap(&u, 0.0, &a, 1.0).is_err());
    }

    #[test]
    fn transported_limit_gap_shrinks_with_h() {
        let a = Symbol::hermitian_from_half(
            2,
            [(
                lp([1, 0]),
                CoefficientFn::gaussian(c(1.0, 0.0), vec![1.0, 0.0], 1.0),
            )],
        )
        .unwrap();
        let x0 = [0.5, 0.0];
        let xi0 = [1.0, 0.0];
        let mass = crate::torus_state::GaussianProfile { sigma: 1.0 }.norm_sq(2);
        let gaps: Vec<f64> = [0.125, 0.0625, 0.03125]
            .iter()
            .map(|&h| {
                let u = wave_packet(&x0, &xi0, 1.0, h, 1e-12).unwrap();
                transported_limit_gap(&u, h, &a, 1.0, &x0, &xi0, mass).unwrap() / h
            })
            .collect();
        assert!(gaps.iter().all(|g| *g < 10.0), "{gaps:?}");
        assert!(gaps[2] > 0.1 * gaps[0]);
    }

    #[test]
    fn dropped_mass_enters_tail_bound() {
        let u = FourierState::random(2, 10, 2, 0).with_dropped_mass(1e-6);
        let a = test_symbol();
        let r = wigner_pair(&u, 0.5, &a).unwrap();
        assert!(r.truncation_tail_bound > 0.0);
        assert_eq!(
            wigner_pair(&FourierState::random(2, 10, 2, 0), 0.5, &a)
                .unwrap()
                .truncation_tail_bound,
            0.0
        );
    }

    #[test]
    fn nonpositive_scale_is_rejected() {
        let u = FourierState::basis(lp([1, 0]));
        let a = test_symbol();
        assert!(wigner_pair(&u, 0.0, &a).is_err());
        assert!(time_averaged_pair(&u, -1.0, &a, &TimeWindow::unit()).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]
            #[test]
            fn marginal_is_evolution_invariant(seed in 0u64..1000, t in -10.0f64..10.0) {
                let u = FourierState::random(2, 50, 7, seed);
                let b = CoefficientFn::gaussian(c(1.0, 0.0), vec![0.3, 0.0], 0.7);
                let m0 = momentum_marginal_pair(&u, 0.2, &b);
                let mt = momentum_marginal_pair(&u.evolve(t), 0.2, &b);
                prop_assert!((m0 - mt).norm() <= 1e-12 * u.norm_sq() * b.sup_norm());
            }
        }
    }
}
