//! Closed-form limits of time-averaged position pairings, evaluated directly
//! from the profile coefficients.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::resonance_lattice::LatticePoint;
use crate::symbols::TimeWindow;
use crate::torus_state::ModeMap;

fn sub(a: &LatticePoint, b: &LatticePoint) -> LatticePoint {
    LatticePoint::new(a.coords().iter().zip(b.coords()).map(|(x, y)| x - y))
}

/// Beat coefficients `c_q = sum_k rho(k) conj(rho(k + q)) phi_hat((|k|^2 - |k + q|^2)/2)`
/// for every `q` orthogonal to `K` that occurs as a difference of profile modes.
pub fn averaged_density_coefficients(
    profile: &ModeMap,
    k_dir: &LatticePoint,
    phi: &TimeWindow,
) -> Result<BTreeMap<LatticePoint, Complex64>> {
    if k_dir.is_zero() {
        return Err(Error::NoDirection);
    }
    let mut out: BTreeMap<LatticePoint, Complex64> = BTreeMap::new();
    for (k, rk) in profile {
        if k.dim() != k_dir.dim() {
            return Err(Error::DimensionMismatch {
                expected: k_dir.dim(),
                found: k.dim(),
            });
        }
        for (j, rj) in profile {
            let q = sub(j, k);
            if q.dot(k_dir) != 0 {
                continue;
            }
            let s = 0.5 * (k.norm_sq() - j.norm_sq()) as f64;
            *out.entry(q).or_default() += rk * rj.conj() * phi.transform(s);
        }
    }
    Ok(out)
}

/// `int phi(t) int m(x) <|e^{it Delta/2} rho_per|^2>_K(x) dx dt
///  = sum_{q . K = 0} m_hat(q) c_q`.
pub fn averaged_density_oracle(
    profile: &ModeMap,
    k_dir: &LatticePoint,
    m_modes: &ModeMap,
    phi: &TimeWindow,
) -> Result<Complex64> {
    let coeffs = averaged_density_coefficients(profile, k_dir, phi)?;
    Ok(m_modes
        .iter()
        .filter_map(|(q, m)| coeffs.get(q).map(|c| m * c))
        .sum())
}

/// The limiting density `(2 pi)^{-d} sum_q c_q e^{-i q.x}` at `x`.
pub fn averaged_density_eval(coeffs: &BTreeMap<LatticePoint, Complex64>, x: &[f64]) -> Complex64 {
    let d = x.len() as f64;
    let sum: Complex64 = coeffs
        .iter()
        .map(|(q, c)| {
            let phase: f64 = q
                .coords()
                .iter()
                .zip(x)
                .map(|(&qi, xi)| qi as f64 * xi)
                .sum();
            c * Complex64::from_polar(1.0, -phase)
        })
        .sum();
    sum * (2.0 * PI).powf(-d)
}

/// `int phi * ||rho||^2 * m_hat(0)`: a wave packet spreads uniformly over the torus.
pub fn wave_packet_limit_oracle(
    m_modes: &ModeMap,
    phi: &TimeWindow,
    rho_norm_sq: f64,
    d: usize,
) -> Complex64 {
    let mean = m_modes
        .get(&LatticePoint::zero(d))
        .copied()
        .unwrap_or_default();
    mean * rho_norm_sq * phi.integral()
}
