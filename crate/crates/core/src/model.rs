//! Regression data, prior configuration and the sufficient statistics shared
//! by the inference engines.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dist::{Phi, TpbParams};
use crate::error::{Error, Result};

/// y = Xβ + ε, optionally with the generating β* and design covariance C.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionDataset {
    pub y: DVector<f64>,
    pub x: DMatrix<f64>,
    pub true_beta: Option<DVector<f64>>,
    pub design_cov: Option<DMatrix<f64>>,
}

impl RegressionDataset {
    pub fn new(y: DVector<f64>, x: DMatrix<f64>) -> Result<Self> {
        let d = Self {
            y,
            x,
            true_beta: None,
            design_cov: None,
        };
        d.validate()?;
        Ok(d)
    }

    /// Attach ground truth for simulation metrics.
    pub fn with_truth(mut self, true_beta: DVector<f64>, design_cov: Option<DMatrix<f64>>) -> Result<Self> {
        self.true_beta = Some(true_beta);
        self.design_cov = design_cov;
        self.validate()?;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let (n, p) = self.x.shape();
        if self.y.len() != n {
            return Err(Error::Usage(format!("response has {} entries but X has {n} rows", self.y.len())));
        }
        if n == 0 || p == 0 {
            return Err(Error::Usage(format!("empty design ({n} x {p})")));
        }
        if self.y.iter().chain(self.x.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Usage("data contain non-finite values".into()));
        }
        if let Some(b) = &self.true_beta {
            if b.len() != p {
                return Err(Error::Usage(format!("true_beta has length {} but p = {p}", b.len())));
            }
        }
        if let Some(c) = &self.design_cov {
            if c.shape() != (p, p) {
                return Err(Error::Usage(format!("design_cov is {:?} but p = {p}", c.shape())));
            }
            let asym = (c - c.transpose()).amax();
            if asym > 1e-10 * c.amax().max(1.0) || Cholesky::new(c.clone()).is_none() {
                return Err(Error::Usage("design_cov is not symmetric positive-definite".into()));
            }
        }
        Ok(())
    }

    /// Sample variance of y (denominator n − 1), or 1 when undefined.
    pub fn response_variance(&self) -> f64 {
        let n = self.y.len();
        if n < 2 {
            return 1.0;
        }
        let m = self.y.mean();
        let v = self.y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64;
        if v > 0.0 {
            v
        } else {
            1.0
        }
    }
}

/// Prior on (β, σ², τ, λ, φ): TPB normal scale mixture for β with an
/// error-precision prior σ⁻² ~ G(c₀/2, d₀/2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorConfig {
    pub tpb: TpbParams,
    pub c0: f64,
    pub d0: f64,
}

impl PriorConfig {
    /// c₀ = d₀ = 0.
    pub fn new(tpb: TpbParams) -> Self {
        Self { tpb, c0: 0.0, d0: 0.0 }
    }

    pub fn with_error_prior(tpb: TpbParams, c0: f64, d0: f64) -> Result<Self> {
        if !(c0 >= 0.0 && d0 >= 0.0 && c0.is_finite() && d0.is_finite()) {
            return Err(Error::Usage(format!("c0 and d0 must be non-negative, got {c0}, {d0}")));
        }
        Ok(Self { tpb, c0, d0 })
    }

    /// Whether φ carries the φ ~ G(1/2, ω), ω ~ G(1/2, 1) hyperprior.
    pub fn hierarchical_phi(&self) -> bool {
        matches!(self.tpb.phi, Phi::HalfCauchy)
    }

    /// Fixed φ, or 1 as the starting value when φ is learned.
    pub fn phi_start(&self) -> f64 {
        match self.tpb.phi {
            Phi::Fixed(v) => v,
            Phi::HalfCauchy => 1.0,
        }
    }
}

/// X'X, X'y and y'y.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStats {
    pub xtx: DMatrix<f64>,
    pub xty: DVector<f64>,
    pub yty: f64,
    pub n: usize,
}

pub fn build_stats(data: &RegressionDataset) -> Result<SufficientStats> {
    data.validate()?;
    let xt = data.x.transpose();
    Ok(SufficientStats {
        xtx: &xt * &data.x,
        xty: &xt * &data.y,
        yty: data.y.norm_squared(),
        n: data.n(),
    })
}

/// Centering and scaling applied by [`standardize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub x_mean: Vec<f64>,
    pub x_scale: Vec<f64>,
    pub y_mean: f64,
}

impl Standardization {
    /// Coefficients on the original scale and the implied intercept.
    pub fn back_transform(&self, beta_std: &DVector<f64>) -> (DVector<f64>, f64) {
        let beta = DVector::from_iterator(beta_std.len(), beta_std.iter().zip(&self.x_scale).map(|(b, s)| b / s));
        let intercept = self.y_mean - beta.iter().zip(&self.x_mean).map(|(b, m)| b * m).sum::<f64>();
        (beta, intercept)
    }
}

/// Center y and every column of X, and scale the columns to unit Euclidean
/// norm so that X'X has a unit diagonal. Ground truth is dropped.
pub fn standardize(data: &RegressionDataset) -> Result<(RegressionDataset, Standardization)> {
    data.validate()?;
    let n = data.n();
    let mut x = data.x.clone();
    let mut x_mean = Vec::with_capacity(data.p());
    let mut x_scale = Vec::with_capacity(data.p());
    for (j, mut col) in x.column_iter_mut().enumerate() {
        let m = col.sum() / n as f64;
        col.add_scalar_mut(-m);
        let s = col.norm();
        if !(s > 1e-12 * (1.0 + m.abs()) * (n as f64).sqrt()) {
            return Err(Error::Usage(format!("column {j} has zero variance and cannot be standardized")));
        }
        col /= s;
        x_mean.push(m);
        x_scale.push(s);
    }
    let y_mean = data.y.mean();
    let y = data.y.add_scalar(-y_mean);
    Ok((
        RegressionDataset {
            y,
            x,
            true_beta: None,
            design_cov: None,
        },
        Standardization { x_mean, x_scale, y_mean },
    ))
}
