//! Regression metrics and PHQ-8 severity banding.

use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Upper end of the PHQ-8 total score.
pub const MAX_SCORE: f64 = 24.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("no predictions to evaluate")]
    Empty,
    #[error("prediction and target counts differ")]
    LengthMismatch,
    #[error("score is not finite")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub mae: f64,
    pub rmse: f64,
    pub n: usize,
}

/// MAE and RMSE of `preds` against `targets`, accumulated in index order.
pub fn evaluate_predictions(preds: &[f64], targets: &[f64]) -> Result<EvalMetrics, MetricsError> {
    if preds.len() != targets.len() {
        return Err(MetricsError::LengthMismatch);
    }
    if preds.is_empty() {
        return Err(MetricsError::Empty);
    }
    let (abs, sq) = preds.iter().zip(targets).fold((0.0, 0.0), |(a, s), (p, t)| {
        let d = p - t;
        (a + d.abs(), s + d * d)
    });
    let n = preds.len() as f64;
    Ok(EvalMetrics {
        mae: abs / n,
        rmse: libm::sqrt(sq / n),
        n: preds.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeverityBand {
    Minimal,
    Mild,
    Moderate,
    ModeratelySevere,
    Severe,
}

impl SeverityBand {
    pub fn label(self) -> &'static str {
        match self {
            SeverityBand::Minimal => "minimal",
            SeverityBand::Mild => "mild",
            SeverityBand::Moderate => "moderate",
            SeverityBand::ModeratelySevere => "moderately-severe",
            SeverityBand::Severe => "severe",
        }
    }
}

impl fmt::Display for SeverityBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Clamps `score` to `[0, 24]` and bins it in steps of five; 20 and above is severe.
pub fn severity_band(score: f64) -> Result<(f64, SeverityBand), MetricsError> {
    if !score.is_finite() {
        return Err(MetricsError::NonFinite);
    }
    let display = score.clamp(0.0, MAX_SCORE);
    let band = if display < 5.0 {
        SeverityBand::Minimal
    } else if display < 10.0 {
        SeverityBand::Mild
    } else if display < 15.0 {
        SeverityBand::Moderate
    } else if display < 20.0 {
        SeverityBand::ModeratelySevere
    } else {
        SeverityBand::Severe
    };
    Ok((display, band))
}
