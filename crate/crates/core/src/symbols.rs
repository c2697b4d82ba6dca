//! Phase-space observables `a(x, xi) = sum_k a_k(xi) psi_k(x)` with finitely
//! many x-modes, and Gaussian time windows.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::resonance_lattice::LatticePoint;
use crate::torus_state::ModeMap;

/// A xi-dependent coefficient from a closed-form family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientFn {
    Constant {
        re: f64,
        #[serde(default)]
        im: f64,
    },
    /// `c exp(-|xi - center|^2 / (2 width^2))`
    Gaussian {
        re: f64,
        #[serde(default)]
        im: f64,
        center: Vec<f64>,
        width: f64,
    },
    /// `c prod_i (xi_i - center_i)^{powers_i} exp(-|xi - center|^2 / (2 width^2))`
    PolyGaussian {
        re: f64,
        #[serde(default)]
        im: f64,
        center: Vec<f64>,
        width: f64,
        powers: Vec<u32>,
    },
}

impl CoefficientFn {
    pub fn constant(c: Complex64) -> Self {
        CoefficientFn::Constant { re: c.re, im: c.im }
    }

    pub fn zero() -> Self {
        Self::constant(Complex64::default())
    }

    pub fn gaussian(c: Complex64, center: Vec<f64>, width: f64) -> Self {
        CoefficientFn::Gaussian {
            re: c.re,
            im: c.im,
            center,
            width,
        }
    }

    pub fn amplitude(&self) -> Complex64 {
        match self {
            CoefficientFn::Constant { re, im }
            | CoefficientFn::Gaussian { re, im, .. }
            | CoefficientFn::PolyGaussian { re, im, .. } => Complex64::new(*re, *im),
        }
    }

    fn with_amplitude(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        match &mut out {
            CoefficientFn::Constant { re, im }
            | CoefficientFn::Gaussian { re, im, .. }
            | CoefficientFn::PolyGaussian { re, im, .. } => {
                *re = c.re;
                *im = c.im;
            }
        }
        out
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        self.with_amplitude(self.amplitude() * s)
    }

    pub fn conj(&self) -> Self {
        self.with_amplitude(self.amplitude().conj())
    }

    pub fn is_zero(&self) -> bool {
        self.amplitude() == Complex64::default()
    }

    /// Dimension of xi the function expects, if it constrains one.
    pub fn dim(&self) -> Option<usize> {
        match self {
            CoefficientFn::Constant { .. } => None,
            CoefficientFn::Gaussian { center, .. } => Some(center.len()),
            CoefficientFn::PolyGaussian { center, powers, .. } => (center.len() == powers.len())
                .then_some(center.len())
                .or(Some(usize::MAX)),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            CoefficientFn::Constant { .. } => Ok(()),
            CoefficientFn::Gaussian { width, .. } | CoefficientFn::PolyGaussian { width, .. }
                if !(*width > 0.0) =>
            {
                Err(Error::InvalidParameter(format!(
                    "coefficient width must be positive, got {width}"
                )))
            }
            CoefficientFn::PolyGaussian { center, powers, .. } if center.len() != powers.len() => {
                Err(Error::DimensionMismatch {
                    expected: center.len(),
                    found: powers.len(),
                })
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, xi: &[f64]) -> Complex64 {
        match self {
            CoefficientFn::Constant { re, im } => Complex64::new(*re, *im),
            CoefficientFn::Gaussian {
                re,
                im,
                center,
                width,
            } => Complex64::new(*re, *im) * (-dist_sq(xi, center) / (2.0 * width * width)).exp(),
            CoefficientFn::PolyGaussian {
                re,
                im,
                center,
                width,
                powers,
            } => {
                let poly: f64 = xi
                    .iter()
                    .zip(center)
                    .zip(powers)
                    .map(|((x, c), &a)| (x - c).powi(a as i32))
                    .product();
                Complex64::new(*re, *im)
                    * poly
                    * (-dist_sq(xi, center) / (2.0 * width * width)).exp()
            }
        }
    }

    pub fn gradient(&self, xi: &[f64]) -> Vec<Complex64> {
        match self {
            CoefficientFn::Constant { .. } => vec![Complex64::default(); xi.len()],
            CoefficientFn::Gaussian { center, width, .. } => {
                let v = self.eval(xi);
                xi.iter()
                    .zip(center)
                    .map(|(x, c)| -v * (x - c) / (width * width))
                    .collect()
            }
            CoefficientFn::PolyGaussian {
                re,
                im,
                center,
                width,
                powers,
            } => {
                let amp = Complex64::new(*re, *im);
                let g = (-dist_sq(xi, center) / (2.0 * width * width)).exp();
                let y: Vec<f64> = xi.iter().zip(center).map(|(x, c)| x - c).collect();
                (0..y.len())
                    .map(|i| {
                        let others: f64 = (0..y.len())
                            .filter(|&j| j != i)
                            .map(|j| y[j].powi(powers[j] as i32))
                            .product();
                        let a = powers[i] as i32;
                        let own = if a > 0 {
                            a as f64 * y[i].powi(a - 1)
                        } else {
                            0.0
                        } - y[i].powi(a + 1) / (width * width);
                        amp * own * others * g
                    })
                    .collect()
            }
        }
    }

    /// `sup_xi |f(xi)|`.
    pub fn sup_norm(&self) -> f64 {
        let a = self.amplitude().norm();
        match self {
            CoefficientFn::Constant { .. } | CoefficientFn::Gaussian { .. } => a,
            CoefficientFn::PolyGaussian { width, powers, .. } => {
                a * powers
                    .iter()
                    .map(|&p| monomial_gaussian_sup(p, *width))
                    .product::<f64>()
            }
        }
    }

    /// Upper bound for `sup_xi |grad f(xi)|`.
    pub fn grad_sup_norm(&self) -> f64 {
        let a = self.amplitude().norm();
        match self {
            CoefficientFn::Constant { .. } => 0.0,
            CoefficientFn::Gaussian { width, .. } => a / width * (-0.5f64).exp(),
            CoefficientFn::PolyGaussian { width, powers, .. } => {
                let sups: Vec<f64> = powers
                    .iter()
                    .map(|&p| monomial_gaussian_sup(p, *width))
                    .collect();
                let sq: f64 = (0..powers.len())
                    .map(|i| {
                        let others: f64 = (0..powers.len())
                            .filter(|&j| j != i)
                            .map(|j| sups[j])
                            .product();
                        let p = powers[i];
                        let lower = if p > 0 {
                            p as f64 * monomial_gaussian_sup(p - 1, *width)
                        } else {
                            0.0
                        };
                        let own = lower + monomial_gaussian_sup(p + 1, *width) / (width * width);
                        (a * others * own).powi(2)
                    })
                    .sum();
                sq.sqrt()
            }
        }
    }

    /// Whether the function is real and nonnegative everywhere.
    pub fn is_nonnegative(&self) -> bool {
        let c = self.amplitude();
        let real_nonneg = c.im == 0.0 && c.re >= 0.0;
        match self {
            CoefficientFn::PolyGaussian { powers, .. } => {
                real_nonneg && powers.iter().all(|p| p % 2 == 0)
            }
            _ => real_nonneg,
        }
    }
}

/// `sup_y |y|^a exp(-y^2 / (2 s^2)) = (a s^2)^{a/2} e^{-a/2}`.
fn monomial_gaussian_sup(a: u32, s: f64) -> f64 {
    if a == 0 {
        1.0
    } else {
        let a = a as f64;
        (a * s * s).powf(a / 2.0) * (-a / 2.0).exp()
    }
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// An observable with finitely many x-modes, coefficients in the psi-basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Symbol {
    d: usize,
    modes: BTreeMap<LatticePoint, CoefficientFn>,
    hermitian: bool,
}

impl Symbol {
    /// Validates dimensions and, when `hermitian` is set, that
    /// `a_{-k} = conj(a_k)` holds structurally.
    pub fn new(
        d: usize,
        modes: impl IntoIterator<Item = (LatticePoint, CoefficientFn)>,
        hermitian: bool,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (k, f) in modes {
            if k.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: k.dim(),
                });
            }
            f.validate()?;
            if let Some(fd) = f.dim() {
                if fd != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: fd,
                    });
                }
            }
            if map.insert(k.clone(), f).is_some() {
                return Err(Error::InvalidParameter(format!(
                    "duplicate symbol mode {k:?}"
                )));
            }
        }
        if hermitian {
            for (k, f) in &map {
                let partner = map.get(&-k);
                if partner != Some(&f.conj()) {
                    return Err(Error::InvalidParameter(format!(
                        "hermitian symbol needs a_(-k) = conj(a_k) at k = {k:?}"
                    )));
                }
            }
        }
        Ok(Self {
            d,
            modes: map,
            hermitian,
        })
    }

    pub fn empty(d: usize) -> Self {
        Self {
            d,
            modes: BTreeMap::new(),
            hermitian: true,
        }
    }

    /// Adds the conjugate partner of every mode, yielding a real-valued observable.
    pub fn hermitian_from_half(
        d: usize,
        half: impl IntoIterator<Item = (LatticePoint, CoefficientFn)>,
    ) -> Result<Self> {
        let mut modes = Vec::new();
        for (k, f) in half {
            if k.is_zero() {
                let a = f.amplitude();
                modes.push((k, f.with_amplitude(Complex64::new(a.re, 0.0))));
            } else {
                modes.push((-&k, f.conj()));
                modes.push((k, f));
            }
        }
        Self::new(d, modes, true)
    }

    /// From the plane-wave form `a = sum_k A_k(xi) e^{i k.x}`.
    pub fn from_plane_waves(
        d: usize,
        modes: impl IntoIterator<Item = (LatticePoint, CoefficientFn)>,
        hermitian: bool,
    ) -> Result<Self> {
        let s = Complex64::new((2.0 * PI).powf(d as f64 / 2.0), 0.0);
        Self::new(
            d,
            modes.into_iter().map(|(k, f)| (k, f.scaled(s))),
            hermitian,
        )
    }

    /// The xi-independent observable `a(x, xi) = m(x)` for density modes `m_hat`.
    pub fn from_density(d: usize, m_modes: &ModeMap) -> Result<Self> {
        let hermitian = m_modes
            .iter()
            .all(|(q, c)| m_modes.get(&-q).is_some_and(|p| *p == c.conj()));
        Self::from_plane_waves(
            d,
            m_modes
                .iter()
                .map(|(q, c)| (q.clone(), CoefficientFn::constant(*c))),
            hermitian,
        )
    }

    /// `a(x, xi) = b(xi)`.
    pub fn constant_in_x(d: usize, b: CoefficientFn) -> Result<Self> {
        let real = b.amplitude().im == 0.0;
        Self::from_plane_waves(d, [(LatticePoint::zero(d), b)], real)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn modes(&self) -> &BTreeMap<LatticePoint, CoefficientFn> {
        &self.modes
    }

    pub fn coeff(&self, k: &LatticePoint) -> Option<&CoefficientFn> {
        self.modes.get(k)
    }

    pub fn has_mean_mode(&self) -> bool {
        self.modes.contains_key(&LatticePoint::zero(self.d))
    }

    /// `a_k(xi)`, zero when `k` is not a mode.
    pub fn eval_coeff(&self, k: &LatticePoint, xi: &[f64]) -> Complex64 {
        self.modes.get(k).map(|f| f.eval(xi)).unwrap_or_default()
    }

    /// `a(x, xi)` at a point of phase space.
    pub fn eval(&self, x: &[f64], xi: &[f64]) -> Complex64 {
        let norm = (2.0 * PI).powf(-(self.d as f64) / 2.0);
        self.modes
            .iter()
            .map(|(k, f)| {
                let phase: f64 = k
                    .coords()
                    .iter()
                    .zip(x)
                    .map(|(&ki, xi)| ki as f64 * xi)
                    .sum();
                f.eval(xi) * Complex64::from_polar(norm, phase)
            })
            .sum()
    }

    /// The x-average `(2 pi)^{-d} int a(x, .) dx = (2 pi)^{-d/2} a_0`.
    pub fn mean_mode(&self) -> CoefficientFn {
        match self.modes.get(&LatticePoint::zero(self.d)) {
            Some(f) => f.scaled(Complex64::new((2.0 * PI).powf(-(self.d as f64) / 2.0), 0.0)),
            None => CoefficientFn::zero(),
        }
    }

    pub fn zero_mean_part(&self) -> Self {
        let mut out = self.clone();
        out.modes.remove(&LatticePoint::zero(self.d));
        out
    }

    /// `sum_k sup |a_k|`.
    pub fn sup_mode_sum(&self) -> f64 {
        self.modes.values().map(CoefficientFn::sup_norm).sum()
    }
}

pub fn eval_symbol_coeff(a: &Symbol, k: &LatticePoint, xi: &[f64]) -> Complex64 {
    a.eval_coeff(k, xi)
}

pub fn mean_mode(a: &Symbol) -> CoefficientFn {
    a.mean_mode()
}

pub fn zero_mean_part(a: &Symbol) -> Symbol {
    a.zero_mean_part()
}

/// `phi(t) = A exp(-(t - t0)^2 / (2 tau^2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeWindow {
    pub amplitude: f64,
    pub width: f64,
    #[serde(default)]
    pub center: f64,
}

impl TimeWindow {
    pub fn new(amplitude: f64, width: f64, center: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "window width must be positive, got {width}"
            )));
        }
        Ok(Self {
            amplitude,
            width,
            center,
        })
    }

    pub fn unit() -> Self {
        Self {
            amplitude: 1.0,
            width: 1.0,
            center: 0.0,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let z = (t - self.center) / self.width;
        self.amplitude * (-0.5 * z * z).exp()
    }

    /// `phi_hat(s) = int phi(t) e^{-i s t} dt`.
    pub fn transform(&self, s: f64) -> Complex64 {
        let mag = self.amplitude
            * self.width
            * (2.0 * PI).sqrt()
            * (-0.5 * (self.width * s).powi(2)).exp();
        Complex64::from_polar(mag, -s * self.center)
    }

    /// `int phi = phi_hat(0)`.
    pub fn integral(&self) -> f64 {
        self.amplitude * self.width * (2.0 * PI).sqrt()
    }

    /// `sup |phi_hat|`.
    pub fn transform_sup(&self) -> f64 {
        self.integral().abs()
    }
}

pub fn window_transform(phi: &TimeWindow, s: f64) -> Complex64 {
    phi.transform(s)
}

/// Config descriptor of a symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolSpec {
    pub id: String,
    #[serde(default)]
    pub hermitian: bool,
    /// Coefficients given for `e^{i k.x}` rather than `psi_k`.
    #[serde(default)]
    pub plane_wave: bool,
    pub modes: Vec<SymbolModeSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolModeSpec {
    pub k: Vec<i64>,
    pub coeff: CoefficientFn,
}

impl SymbolSpec {
    pub fn build(&self, d: usize) -> Result<Symbol> {
        let modes = self
            .modes
            .iter()
            .map(|m| (LatticePoint::from(m.k.clone()), m.coeff.clone()));
        if self.plane_wave {
            Symbol::from_plane_waves(d, modes, self.hermitian)
        } else {
            Symbol::new(d, modes, self.hermitian)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub id: String,
    #[serde(flatten)]
    pub window: TimeWindow,
}
