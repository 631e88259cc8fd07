//! Engine-independent summary of a fit.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Gibbs,
    Vb,
    Map,
    Lasso,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Gibbs => "gibbs",
            Method::Vb => "vb",
            Method::Map => "map",
            Method::Lasso => "lasso",
        }
    }
}

/// Per-coefficient summary. Interval bounds are 95% posterior intervals
/// (Gibbs quantiles or the Gaussian VB approximation); `exact_zero` marks
/// coordinates thresholded by the MAP routine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSummary {
    pub index: usize,
    pub estimate: f64,
    pub sd: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub exact_zero: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub method: Method,
    pub beta: Vec<f64>,
    pub sigma2: f64,
    pub iterations: usize,
    pub draws: usize,
    pub converged: bool,
    pub elapsed_seconds: f64,
    pub seed: Option<u64>,
    pub coefficients: Vec<CoefficientSummary>,
    pub warnings: Vec<String>,
}

impl FitReport {
    pub(crate) fn point_summaries(beta: &[f64]) -> Vec<CoefficientSummary> {
        beta.iter()
            .enumerate()
            .map(|(index, &estimate)| CoefficientSummary {
                index,
                estimate,
                sd: None,
                lower: None,
                upper: None,
                exact_zero: false,
            })
            .collect()
    }
}
