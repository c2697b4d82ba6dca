//! Experiment configuration: JSON with unknown fields rejected and every
//! semantic problem reported at once.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::resonance_lattice::{primitive_direction, LatticePoint, PrimitiveDirection};
use crate::symbols::{Symbol, SymbolSpec, TimeWindow, WindowSpec};
use crate::torus_state::{modes_from_json, ModeJson, ModeMap, StateFamily};

use super::tolerances::{MIN_R_SQUARED, MIN_SLOPE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub d: usize,
    pub family: StateFamily,
    #[serde(default = "default_schedule")]
    pub h_schedule: Vec<f64>,
    #[serde(default)]
    pub symbols: Vec<SymbolSpec>,
    #[serde(default)]
    pub windows: Vec<WindowSpec>,
    #[serde(default)]
    pub densities: Vec<DensitySpec>,
    #[serde(default)]
    pub quantities: Vec<QuantitySpec>,
    #[serde(default)]
    pub tolerances: ToleranceSpec,
    /// Run directory; the CLI `--out` flag takes precedence.
    #[serde(default)]
    pub output: Option<String>,
    /// Worker threads; the CLI `--threads` flag takes precedence.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Mixed into the seed of every random family.
    #[serde(default)]
    pub seed: u64,
}

fn default_name() -> String {
    "experiment".to_string()
}

/// Dyadic `2^-3 ... 2^-9`.
pub fn default_schedule() -> Vec<f64> {
    (3..=9).map(|e| 2f64.powi(-e)).collect()
}

/// A position density `m(x) = sum_q m_hat(q) e^{i q.x}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySpec {
    pub id: String,
    pub modes: Vec<ModeJson>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    #[serde(default = "default_min_slope")]
    pub min_slope: f64,
    #[serde(default = "default_min_r_squared")]
    pub min_r_squared: f64,
}

fn default_min_slope() -> f64 {
    MIN_SLOPE
}

fn default_min_r_squared() -> f64 {
    MIN_R_SQUARED
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        Self {
            min_slope: MIN_SLOPE,
            min_r_squared: MIN_R_SQUARED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantitySpec {
    /// Name used in reports; defaults to the quantity kind.
    #[serde(default)]
    pub label: Option<String>,
    pub quantity: Quantity,
    #[serde(default)]
    pub expect: Expectation,
}

impl QuantitySpec {
    pub fn label(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| self.quantity.kind().to_string())
    }
}

/// Named checks evaluated at every `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Quantity {
    /// `norm_sq` of the generated state.
    Mass,
    /// `wigner_pair`, or `time_averaged_pair` when a window is given.
    Pairing {
        symbol: String,
        #[serde(default)]
        window: Option<String>,
    },
    /// `lemma_main_residual` for the zero-mean part of the symbol.
    Residual {
        symbol: String,
        window: String,
    },
    /// `|time_averaged_pair - main_formula_pair|`.
    MainFormulaGap {
        symbol: String,
        window: String,
    },
    /// Time-averaged `int m |u(t)|^2`.
    PositionPairing {
        density: String,
        window: String,
    },
    /// Distance of the time-averaged position pairing from the family's
    /// closed-form limit.
    OracleGap {
        density: String,
        window: String,
        #[serde(default)]
        relative: bool,
    },
    NearHyperplaneMass {
        direction: Vec<i64>,
        width: f64,
    },
    ClassicalLimitGap {
        symbol: String,
        t: f64,
    },
    /// Wave-packet families only.
    TransportedLimitGap {
        symbol: String,
        t: f64,
    },
}

impl Quantity {
    pub fn kind(&self) -> &'static str {
        match self {
            Quantity::Mass => "mass",
            Quantity::Pairing { .. } => "pairing",
            Quantity::Residual { .. } => "residual",
            Quantity::MainFormulaGap { .. } => "main_formula_gap",
            Quantity::PositionPairing { .. } => "position_pairing",
            Quantity::OracleGap { .. } => "oracle_gap",
            Quantity::NearHyperplaneMass { .. } => "near_hyperplane_mass",
            Quantity::ClassicalLimitGap { .. } => "classical_limit_gap",
            Quantity::TransportedLimitGap { .. } => "transported_limit_gap",
        }
    }

    /// The symbol or density id the quantity refers to.
    pub fn object_id(&self) -> &str {
        match self {
            Quantity::Pairing { symbol, .. }
            | Quantity::Residual { symbol, .. }
            | Quantity::MainFormulaGap { symbol, .. }
            | Quantity::ClassicalLimitGap { symbol, .. }
            | Quantity::TransportedLimitGap { symbol, .. } => symbol,
            Quantity::PositionPairing { density, .. } | Quantity::OracleGap { density, .. } => {
                density
            }
            Quantity::Mass | Quantity::NearHyperplaneMass { .. } => "",
        }
    }

    pub fn window_id(&self) -> &str {
        match self {
            Quantity::Pairing {
                window: Some(w), ..
            }
            | Quantity::Residual { window: w, .. }
            | Quantity::MainFormulaGap { window: w, .. }
            | Quantity::PositionPairing { window: w, .. }
            | Quantity::OracleGap { window: w, .. } => w,
            _ => "",
        }
    }
}

/// Pass criteria for one series; values are compared by modulus.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    /// Require a fitted rate of at least `min_slope` with `R^2 >= min_r_squared`.
    #[serde(default)]
    pub rate: bool,
    #[serde(default)]
    pub min_slope: Option<f64>,
    #[serde(default)]
    pub min_r_squared: Option<f64>,
    /// Upper bound on the value at the smallest `h`.
    #[serde(default)]
    pub max_final: Option<f64>,
    /// Lower bound on every value.
    #[serde(default)]
    pub min_value: Option<f64>,
    /// Values must not increase as `h` decreases.
    #[serde(default)]
    pub decreasing: bool,
}

/// Symbols, windows and densities resolved by id.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub symbols: BTreeMap<String, Symbol>,
    pub windows: BTreeMap<String, TimeWindow>,
    pub densities: BTreeMap<String, ModeMap>,
}

impl ExperimentConfig {
    /// Parses and validates; every failure is a `Error::Config`.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| Error::Config(vec![e.to_string()]))?;
        cfg.resolve()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
        Self::from_json_str(&text)
    }

    pub fn needs_fit(&self) -> bool {
        self.quantities.iter().any(|q| q.expect.rate)
    }

    /// Validates the whole config and builds the referenced objects.
    pub fn resolve(&self) -> Result<Resolved> {
        let mut errors = Vec::new();
        let d = self.d;
        if d == 0 {
            errors.push("d: must be at least 1".to_string());
        }
        if self.h_schedule.is_empty() {
            errors.push("h_schedule: must not be empty".to_string());
        }
        if self.h_schedule.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
            errors.push("h_schedule: every h must be positive and finite".to_string());
        }
        if self.h_schedule.windows(2).any(|w| !(w[1] < w[0])) {
            errors.push("h_schedule: must be strictly decreasing".to_string());
        }
        if self.needs_fit() && self.h_schedule.len() < 3 {
            errors.push("h_schedule: rate fits need at least 3 points".to_string());
        }
        if self.workers == Some(0) {
            errors.push("workers: must be at least 1".to_string());
        }
        self.check_family(&mut errors);

        let mut symbols = BTreeMap::new();
        for (i, s) in self.symbols.iter().enumerate() {
            match s.build(d) {
                Ok(sym) => {
                    if symbols.insert(s.id.clone(), sym).is_some() {
                        errors.push(format!("symbols[{i}].id: duplicate id {:?}", s.id));
                    }
                }
                Err(e) => errors.push(format!("symbols[{i}] ({}): {e}", s.id)),
            }
        }
        let mut windows = BTreeMap::new();
        for (i, w) in self.windows.iter().enumerate() {
            match TimeWindow::new(w.window.amplitude, w.window.width, w.window.center) {
                Ok(win) => {
                    if windows.insert(w.id.clone(), win).is_some() {
                        errors.push(format!("windows[{i}].id: duplicate id {:?}", w.id));
                    }
                }
                Err(e) => errors.push(format!("windows[{i}] ({}): {e}", w.id)),
            }
        }
        let mut densities = BTreeMap::new();
        for (i, m) in self.densities.iter().enumerate() {
            match modes_from_json(d, &m.modes) {
                Ok(map) => {
                    if densities.insert(m.id.clone(), map).is_some() {
                        errors.push(format!("densities[{i}].id: duplicate id {:?}", m.id));
                    }
                }
                Err(e) => errors.push(format!("densities[{i}] ({}): {e}", m.id)),
            }
        }

        for (i, q) in self.quantities.iter().enumerate() {
            let at = format!("quantities[{i}]");
            let need_symbol = |id: &str, errors: &mut Vec<String>| {
                if !symbols.contains_key(id) {
                    errors.push(format!("{at}.symbol: unknown symbol {id:?}"));
                }
            };
            let need_window = |id: &str, errors: &mut Vec<String>| {
                if !windows.contains_key(id) {
                    errors.push(format!("{at}.window: unknown window {id:?}"));
                }
            };
            let need_density = |id: &str, errors: &mut Vec<String>| {
                if !densities.contains_key(id) {
                    errors.push(format!("{at}.density: unknown density {id:?}"));
                }
            };
            match &q.quantity {
                Quantity::Mass => {}
                Quantity::Pairing { symbol, window } => {
                    need_symbol(symbol, &mut errors);
                    if let Some(w) = window {
                        need_window(w, &mut errors);
                    }
                }
                Quantity::Residual { symbol, window }
                | Quantity::MainFormulaGap { symbol, window } => {
                    need_symbol(symbol, &mut errors);
                    need_window(window, &mut errors);
                    if d < 2 {
                        errors.push(format!("{at}: resonant quantities need d >= 2"));
                    }
                }
                Quantity::PositionPairing { density, window } => {
                    need_density(density, &mut errors);
                    need_window(window, &mut errors);
                }
                Quantity::OracleGap {
                    density, window, ..
                } => {
                    need_density(density, &mut errors);
                    need_window(window, &mut errors);
                    if !matches!(
                        self.family,
                        StateFamily::WavePacket { .. } | StateFamily::ResonantPlaneWave { .. }
                    ) {
                        errors.push(format!(
                            "{at}: oracle_gap needs a wave_packet or resonant_plane_wave family"
                        ));
                    }
                }
                Quantity::NearHyperplaneMass { direction, width } => {
                    if direction.len() != d {
                        errors.push(format!(
                            "{at}.direction: expected {d} components, found {}",
                            direction.len()
                        ));
                    } else if direction.iter().all(|x| *x == 0) {
                        errors.push(format!("{at}.direction: must be nonzero"));
                    }
                    if !(*width > 0.0) {
                        errors.push(format!("{at}.width: must be positive"));
                    }
                }
                Quantity::ClassicalLimitGap { symbol, .. } => need_symbol(symbol, &mut errors),
                Quantity::TransportedLimitGap { symbol, .. } => {
                    need_symbol(symbol, &mut errors);
                    if !matches!(self.family, StateFamily::WavePacket { .. }) {
                        errors.push(format!(
                            "{at}: transported_limit_gap needs a wave_packet family"
                        ));
                    }
                }
            }
            let e = &q.expect;
            if e.rate && self.h_schedule.len() < 3 {
                errors.push(format!(
                    "{at}.expect.rate: needs at least 3 schedule points"
                ));
            }
            if e.min_slope.is_some() && !e.rate {
                errors.push(format!(
                    "{at}.expect.min_slope: only meaningful with rate = true"
                ));
            }
        }
        let labels: Vec<String> = self.quantities.iter().map(QuantitySpec::label).collect();
        let unique: BTreeSet<_> = labels.iter().collect();
        if unique.len() != labels.len() {
            errors.push(
                "quantities: labels must be unique (set `label` to distinguish repeated kinds)"
                    .to_string(),
            );
        }
        for label in &labels {
            if label.contains([',', '"', '\n']) {
                errors.push(format!(
                    "quantities: label {label:?} must not contain commas, quotes or newlines"
                ));
            }
        }

        if errors.is_empty() {
            Ok(Resolved {
                symbols,
                windows,
                densities,
            })
        } else {
            Err(Error::Config(errors))
        }
    }

    fn check_family(&self, errors: &mut Vec<String>) {
        check_family_at(&self.family, self.d, &self.h_schedule, "family", errors);
    }
}

fn check_family_at(
    family: &StateFamily,
    d: usize,
    schedule: &[f64],
    at: &str,
    errors: &mut Vec<String>,
) {
    match family {
        StateFamily::WavePacket {
            x0,
            xi0,
            sigma,
            trunc,
        } => {
            if x0.len() != d || xi0.len() != d {
                errors.push(format!("{at}: x0 and xi0 need {d} components"));
            }
            if !(*sigma > 0.0) {
                errors.push(format!("{at}.sigma: must be positive"));
            }
            if !(*trunc > 0.0 && *trunc < 1.0) {
                errors.push(format!("{at}.trunc: must lie in (0, 1)"));
            }
        }
        StateFamily::ResonantPlaneWave {
            profile, direction, ..
        } => {
            if direction.len() != d || direction.iter().all(|x| *x == 0) {
                errors.push(format!(
                    "{at}.direction: needs {d} components, not all zero"
                ));
            }
            if profile.iter().any(|m| m.k.len() != d) {
                errors.push(format!("{at}.profile: every mode needs {d} components"));
            }
            for h in schedule {
                let n = (1.0 / h).round();
                if n < 1.0 || (n * h - 1.0).abs() > 1e-12 {
                    errors.push(format!("{at}: h = {h} is not of the form 1/n"));
                }
            }
        }
        StateFamily::Shell { radius, .. } => {
            if !(*radius > 0.0) {
                errors.push(format!("{at}.radius: must be positive"));
            }
        }
        StateFamily::Superposition { components } => {
            if components.is_empty() {
                errors.push(format!("{at}.components: must not be empty"));
            }
            for (i, c) in components.iter().enumerate() {
                check_family_at(
                    &c.family,
                    d,
                    schedule,
                    &format!("{at}.components[{i}].family"),
                    errors,
                );
            }
        }
    }
}

/// Adds `seed` to every random family.
pub fn reseed(family: &StateFamily, seed: u64) -> StateFamily {
    match family {
        StateFamily::Shell { radius, seed: s } => StateFamily::Shell {
            radius: *radius,
            seed: s.wrapping_add(seed),
        },
        StateFamily::Superposition { components } => StateFamily::Superposition {
            components: components
                .iter()
                .map(|c| crate::torus_state::WeightedFamily {
                    family: reseed(&c.family, seed),
                    ..c.clone()
                })
                .collect(),
        },
        other => other.clone(),
    }
}

pub fn direction_of(v: &[i64]) -> Result<PrimitiveDirection> {
    primitive_direction(&LatticePoint::from(v.to_vec()))
}
