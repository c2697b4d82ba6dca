//! Least-squares rate fits `log(value) ~ slope * log(h)`.

use serde::{Deserialize, Serialize};

use super::tolerances::ZERO_LEVEL;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum FitOutcome {
    Fitted {
        slope: f64,
        r_squared: f64,
    },
    /// Every value is at or below the zero level.
    IdenticallyZero,
    /// Some values are nonpositive and some are not.
    Mixed,
    TooFewPoints,
}

impl FitOutcome {
    pub fn slope(&self) -> Option<f64> {
        match self {
            FitOutcome::Fitted { slope, .. } => Some(*slope),
            _ => None,
        }
    }

    pub fn r_squared(&self) -> Option<f64> {
        match self {
            FitOutcome::Fitted { r_squared, .. } => Some(*r_squared),
            _ => None,
        }
    }

    /// Whether the fit shows a rate of at least `min_slope` with `r_squared >= min_r2`.
    pub fn meets(&self, min_slope: f64, min_r2: f64) -> bool {
        matches!(self, FitOutcome::Fitted { slope, r_squared } if *slope >= min_slope && *r_squared >= min_r2)
    }
}

pub fn fit_rate(series: &[(f64, f64)]) -> FitOutcome {
    if series.len() < 3 {
        return FitOutcome::TooFewPoints;
    }
    if series.iter().all(|(_, v)| v.abs() <= ZERO_LEVEL) {
        return FitOutcome::IdenticallyZero;
    }
    if series.iter().any(|(h, v)| !(*v > 0.0) || !(*h > 0.0)) {
        return FitOutcome::Mixed;
    }
    let pts: Vec<(f64, f64)> = series.iter().map(|(h, v)| (h.ln(), v.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return FitOutcome::TooFewPoints;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    FitOutcome::Fitted { slope, r_squared }
}
