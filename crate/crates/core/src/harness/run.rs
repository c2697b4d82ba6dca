//! Schedule sweeps, rate fits and report emission.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::resonant::{lemma_main_residual, main_formula_pair};
use crate::torus_state::{modes_from_json, near_hyperplane_mass, FourierState, StateFamily};
use crate::wigner::{
    classical_limit_gap, time_averaged_pair, time_averaged_position_pair, transported_limit_gap,
    wigner_pair,
};

use super::config::{direction_of, reseed, ExperimentConfig, Quantity, QuantitySpec, Resolved};
use super::fit::{fit_rate, FitOutcome};
use super::oracles::{averaged_density_oracle, wave_packet_limit_oracle};
use super::tolerances::TAIL_FLAG_REL;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub threads: Option<usize>,
    /// Relaxes every threshold: upper bounds are multiplied by it, lower bounds divided.
    pub tol_scale: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            threads: None,
            tol_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub h: f64,
    pub value_re: f64,
    pub value_im: f64,
    pub tail_bound: f64,
    /// Tail bound above the flag fraction of `|value|`.
    pub flagged: bool,
}

impl SeriesPoint {
    pub fn modulus(&self) -> f64 {
        Complex64::new(self.value_re, self.value_im).norm()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesReport {
    pub quantity: String,
    pub symbol_id: String,
    pub window_id: String,
    pub points: Vec<SeriesPoint>,
    pub fit: FitOutcome,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub crate_version: String,
    pub os: String,
    pub arch: String,
    pub threads: usize,
    pub tol_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub name: String,
    pub family: String,
    pub d: usize,
    pub series: Vec<SeriesReport>,
    pub pass: bool,
    pub environment: Environment,
}

pub fn family_name(f: &StateFamily) -> &'static str {
    match f {
        StateFamily::WavePacket { .. } => "wave_packet",
        StateFamily::ResonantPlaneWave { .. } => "resonant_plane_wave",
        StateFamily::Shell { .. } => "shell",
        StateFamily::Superposition { .. } => "superposition",
    }
}

/// Computes every quantity at every `h` and evaluates the expectations.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ConvergenceReport> {
    if !(opts.tol_scale > 0.0) {
        return Err(Error::Config(vec![format!(
            "tol-scale must be positive, got {}",
            opts.tol_scale
        )]));
    }
    let threads = opts.threads.or(cfg.workers);
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .install(|| run_inner(cfg, opts)),
        None => run_inner(cfg, opts),
    }
}

fn run_inner(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ConvergenceReport> {
    let resolved = cfg.resolve()?;
    let family = reseed(&cfg.family, cfg.seed);
    let states: Vec<FourierState> = if cfg.quantities.is_empty() {
        Vec::new()
    } else {
        cfg.h_schedule
            .par_iter()
            .map(|&h| family.generate(cfg.d, h))
            .collect::<Result<_>>()?
    };
    let cells: Vec<(usize, usize)> = (0..cfg.quantities.len())
        .flat_map(|q| (0..cfg.h_schedule.len()).map(move |i| (q, i)))
        .collect();
    let values: Vec<(Complex64, f64)> = cells
        .par_iter()
        .map(|&(q, i)| {
            evaluate(
                cfg,
                &resolved,
                &cfg.quantities[q].quantity,
                &states[i],
                cfg.h_schedule[i],
            )
        })
        .collect::<Result<_>>()?;

    let mut series = Vec::with_capacity(cfg.quantities.len());
    for (q, spec) in cfg.quantities.iter().enumerate() {
        let points: Vec<SeriesPoint> = cfg
            .h_schedule
            .iter()
            .enumerate()
            .map(|(i, &h)| {
                let (v, tail) = values[q * cfg.h_schedule.len() + i];
                SeriesPoint {
                    h,
                    value_re: v.re,
                    value_im: v.im,
                    tail_bound: tail,
                    flagged: tail > TAIL_FLAG_REL * v.norm(),
                }
            })
            .collect();
        series.push(assess(cfg, spec, points, opts.tol_scale));
    }
    let pass = series.iter().all(|s| s.pass);
    Ok(ConvergenceReport {
        name: cfg.name.clone(),
        family: family_name(&cfg.family).to_string(),
        d: cfg.d,
        series,
        pass,
        environment: Environment {
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            threads: rayon::current_num_threads(),
            tol_scale: opts.tol_scale,
        },
    })
}

fn evaluate(
    cfg: &ExperimentConfig,
    r: &Resolved,
    q: &Quantity,
    u: &FourierState,
    h: f64,
) -> Result<(Complex64, f64)> {
    let real = |x: f64| (Complex64::new(x, 0.0), 0.0);
    Ok(match q {
        Quantity::Mass => real(u.norm_sq()),
        Quantity::Pairing { symbol, window } => {
            let a = &r.symbols[symbol];
            let p = match window {
                Some(w) => time_averaged_pair(u, h, a, &r.windows[w])?,
                None => wigner_pair(u, h, a)?,
            };
            (p.value, p.truncation_tail_bound)
        }
        Quantity::Residual { symbol, window } => real(lemma_main_residual(
            u,
            h,
            &r.symbols[symbol].zero_mean_part(),
            &r.windows[window],
        )?),
        Quantity::MainFormulaGap { symbol, window } => {
            let a = &r.symbols[symbol];
            let phi = &r.windows[window];
            let total = time_averaged_pair(u, h, a, phi)?;
            let predicted = main_formula_pair(u, h, a, phi)?;
            (
                (total.value - predicted).norm().into(),
                total.truncation_tail_bound,
            )
        }
        Quantity::PositionPairing { density, window } => {
            let p = time_averaged_position_pair(u, &r.densities[density], &r.windows[window])?;
            (p.value, p.truncation_tail_bound)
        }
        Quantity::OracleGap {
            density,
            window,
            relative,
        } => {
            let m = &r.densities[density];
            let phi = &r.windows[window];
            let p = time_averaged_position_pair(u, m, phi)?;
            let oracle = match &cfg.family {
                StateFamily::WavePacket { .. } => {
                    let mass = cfg
                        .family
                        .limit_mass(cfg.d)
                        .expect("wave packets have a limit mass");
                    wave_packet_limit_oracle(m, phi, mass, cfg.d)
                }
                StateFamily::ResonantPlaneWave {
                    profile, direction, ..
                } => {
                    let profile = modes_from_json(cfg.d, profile)?;
                    averaged_density_oracle(&profile, &direction.clone().into(), m, phi)?
                }
                _ => {
                    return Err(Error::Config(vec![
                        "oracle_gap: unsupported family".to_string()
                    ]))
                }
            };
            let gap = (p.value - oracle).norm();
            if *relative {
                let scale = oracle.norm().max(f64::MIN_POSITIVE);
                (
                    Complex64::new(gap / scale, 0.0),
                    p.truncation_tail_bound / scale,
                )
            } else {
                (gap.into(), p.truncation_tail_bound)
            }
        }
        Quantity::NearHyperplaneMass { direction, width } => {
            real(near_hyperplane_mass(u, &direction_of(direction)?, *width)?)
        }
        Quantity::ClassicalLimitGap { symbol, t } => {
            real(classical_limit_gap(u, h, &r.symbols[symbol], *t)?)
        }
        Quantity::TransportedLimitGap { symbol, t } => {
            let StateFamily::WavePacket { x0, xi0, sigma, .. } = &cfg.family else {
                return Err(Error::Config(vec![
                    "transported_limit_gap: needs a wave packet".to_string(),
                ]));
            };
            let mass = crate::torus_state::GaussianProfile { sigma: *sigma }.norm_sq(cfg.d);
            real(transported_limit_gap(
                u,
                h,
                &r.symbols[symbol],
                *t,
                x0,
                xi0,
                mass,
            )?)
        }
    })
}

fn assess(
    cfg: &ExperimentConfig,
    spec: &QuantitySpec,
    points: Vec<SeriesPoint>,
    scale: f64,
) -> SeriesReport {
    let moduli: Vec<(f64, f64)> = points.iter().map(|p| (p.h, p.modulus())).collect();
    let fit = fit_rate(&moduli);
    let e = &spec.expect;
    let mut checks = Vec::new();
    if e.rate {
        let min_slope = e.min_slope.unwrap_or(cfg.tolerances.min_slope) / scale;
        let min_r2 = e.min_r_squared.unwrap_or(cfg.tolerances.min_r_squared) / scale;
        checks.push(CheckResult {
            name: "rate".into(),
            pass: fit.meets(min_slope, min_r2),
            detail: format!("{fit:?}; need slope >= {min_slope} and R^2 >= {min_r2}"),
        });
    }
    if let Some(max) = e.max_final {
        let last = moduli.last().map(|p| p.1).unwrap_or(0.0);
        let max = max * scale;
        checks.push(CheckResult {
            name: "max_final".into(),
            pass: last <= max,
            detail: format!("final value {last:e}, limit {max:e}"),
        });
    }
    if let Some(min) = e.min_value {
        let least = moduli.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let min = min / scale;
        checks.push(CheckResult {
            name: "min_value".into(),
            pass: least >= min,
            detail: format!("smallest value {least:e}, limit {min:e}"),
        });
    }
    if e.decreasing {
        let ok = moduli.windows(2).all(|w| w[1].1 <= w[0].1);
        checks.push(CheckResult {
            name: "decreasing".into(),
            pass: ok,
            detail: format!(
                "values {:?}",
                moduli.iter().map(|p| p.1).collect::<Vec<_>>()
            ),
        });
    }
    let pass = checks.iter().all(|c| c.pass);
    SeriesReport {
        quantity: spec.label(),
        symbol_id: spec.quantity.object_id().to_string(),
        window_id: spec.quantity.window_id().to_string(),
        points,
        fit,
        checks,
        pass,
    }
}

/// Float formatting with 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub const CSV_HEADER: &str = "family,d,h,quantity,symbol_id,window_id,value_re,value_im,tail_bound";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn render_csv(report: &ConvergenceReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for s in &report.series {
        for p in &s.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                csv_field(&report.family),
                report.d,
                fmt_float(p.h),
                csv_field(&s.quantity),
                csv_field(&s.symbol_id),
                csv_field(&s.window_id),
                fmt_float(p.value_re),
                fmt_float(p.value_im),
                fmt_float(p.tail_bound),
            );
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub quantity: String,
    pub symbol_id: String,
    pub window_id: String,
    /// `(h, |value|)` pairs.
    pub series: Vec<(f64, f64)>,
    pub slope: Option<f64>,
    pub r_squared: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub pass: bool,
    pub series: Vec<SeriesSummary>,
}

pub fn summarize(report: &ConvergenceReport) -> Summary {
    Summary {
        name: report.name.clone(),
        pass: report.pass,
        series: report
            .series
            .iter()
            .map(|s| SeriesSummary {
                quantity: s.quantity.clone(),
                symbol_id: s.symbol_id.clone(),
                window_id: s.window_id.clone(),
                series: s.points.iter().map(|p| (p.h, p.modulus())).collect(),
                slope: s.fit.slope(),
                r_squared: s.fit.r_squared(),
                pass: s.pass,
            })
            .collect(),
    }
}

pub const REPORT_FILE: &str = "report.json";
pub const CSV_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// Writes `report.json`, `results.csv` and `summary.json` into `dir`.
pub fn write_run(report: &ConvergenceReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(
        dir.join(REPORT_FILE),
        serde_json::to_string_pretty(report)? + "\n",
    )?;
    render_outputs(report, dir)
}

fn render_outputs(report: &ConvergenceReport, dir: &Path) -> Result<()> {
    std::fs::write(dir.join(CSV_FILE), render_csv(report))?;
    std::fs::write(
        dir.join(SUMMARY_FILE),
        serde_json::to_string_pretty(&summarize(report))? + "\n",
    )?;
    Ok(())
}

/// Re-renders the CSV and summary of an existing run directory.
pub fn rerender(dir: &Path) -> Result<ConvergenceReport> {
    let text = std::fs::read_to_string(dir.join(REPORT_FILE))?;
    let report: ConvergenceReport = serde_json::from_str(&text)?;
    render_outputs(&report, dir)?;
    Ok(report)
}
