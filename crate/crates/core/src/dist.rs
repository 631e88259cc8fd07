//! The three-parameter beta (TPB) family and its relatives.
//!
//! A TPB(a, b, φ) variable ρ on (0, 1) is the shrinkage coefficient of a
//! normal scale mixture, θ | ρ ~ N(0, 1/ρ − 1). Equivalently τ = 1/ρ − 1 has
//! τ/φ ~ inverted beta(a, b), and τ arises from the gamma–gamma hierarchy
//! λ ~ G(b, φ), τ | λ ~ G(a, λ) (shape/rate). The samplers below implement
//! each of those routes separately so that they can be checked against each
//! other.
//!
//! The generalized inverse Gaussian GIG(μ, ν, ξ) used by the samplers and the
//! variational updates has density ∝ x^{μ−1} exp{−(νx + ξ/x)/2}.

use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use rand_distr::{Beta, Cauchy, Distribution, Gamma, Open01};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::specfun::{self, exp_scaled_e1, gauss_2f1, log_gamma};

/// Global shrinkage parameter: a fixed value, or unknown with
/// φ^{1/2} ~ C⁺(0, 1) (written as φ ~ G(1/2, ω), ω ~ G(1/2, 1)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phi {
    Fixed(f64),
    HalfCauchy,
}

/// Prior triple (a, b, φ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TpbParams {
    pub a: f64,
    pub b: f64,
    pub phi: Phi,
}

impl TpbParams {
    pub fn new(a: f64, b: f64, phi: Phi) -> Result<Self> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(a) || !ok(b) {
            return Err(Error::domain("TpbParams", format!("shapes must be positive, got a = {a}, b = {b}")));
        }
        if let Phi::Fixed(phi) = phi {
            if !ok(phi) {
                return Err(Error::domain("TpbParams", format!("phi must be positive, got {phi}")));
            }
        }
        Ok(Self { a, b, phi })
    }

    pub fn fixed(a: f64, b: f64, phi: f64) -> Result<Self> {
        Self::new(a, b, Phi::Fixed(phi))
    }

    /// a = b = 1/2.
    pub fn horseshoe(phi: Phi) -> Self {
        Self { a: 0.5, b: 0.5, phi }
    }

    /// a = 1, b = 1/2, φ = 1.
    pub fn strawderman_berger() -> Self {
        Self {
            a: 1.0,
            b: 0.5,
            phi: Phi::Fixed(1.0),
        }
    }

    /// The fixed φ, or a usage error when φ is unknown.
    pub fn phi_value(&self) -> Result<f64> {
        match self.phi {
            Phi::Fixed(v) => Ok(v),
            Phi::HalfCauchy => Err(Error::Usage("phi is unknown (half-Cauchy); a fixed value is required here".into())),
        }
    }
}

/// GIG(μ, ν, ξ) with density ∝ x^{μ−1} exp{−(νx + ξ/x)/2}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GigParams {
    pub mu: f64,
    pub nu: f64,
    pub xi: f64,
}

impl GigParams {
    pub fn new(mu: f64, nu: f64, xi: f64) -> Result<Self> {
        let p = Self { mu, nu, xi };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        let Self { mu, nu, xi } = *self;
        if !(mu.is_finite() && nu.is_finite() && xi.is_finite()) || nu <= 0.0 || xi < 0.0 {
            return Err(Error::domain("GigParams", format!("need nu > 0, xi >= 0, got ({mu}, {nu}, {xi})")));
        }
        if xi == 0.0 && mu <= 0.0 {
            return Err(Error::domain("GigParams", format!("xi = 0 requires mu > 0, got mu = {mu}")));
        }
        Ok(())
    }
}

/// Shrinkage coefficient ρ = 1/(1 + τ).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct ShrinkageCoefficient {
    rho: f64,
}

impl ShrinkageCoefficient {
    pub fn from_rho(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::domain("ShrinkageCoefficient", format!("rho = {rho} outside (0, 1)")));
        }
        Ok(Self { rho })
    }

    pub fn from_tau(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::domain("ShrinkageCoefficient", format!("tau = {tau} must be positive")));
        }
        Self::from_rho(1.0 / (1.0 + tau))
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn tau(&self) -> f64 {
        (1.0 - self.rho) / self.rho
    }
}

fn check_unit_open(func: &'static str, x: f64) -> Result<()> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::domain(func, format!("x = {x} outside (0, 1)")));
    }
    Ok(())
}

fn log_beta(p: f64, q: f64) -> f64 {
    log_gamma(p).unwrap() + log_gamma(q).unwrap() - log_gamma(p + q).unwrap()
}

// log density at x with 1 − x supplied separately, so that both ends keep
// full relative precision
fn tpb_log_pdf_split(x: f64, omx: f64, a: f64, b: f64, phi: f64) -> f64 {
    -log_beta(a, b) + b * phi.ln() + (b - 1.0) * x.ln() + (a - 1.0) * omx.ln() - (a + b) * (omx + phi * x).ln()
}

/// Log density of TPB(a, b, φ) at x ∈ (0, 1).
pub fn tpb_log_pdf(x: f64, params: &TpbParams) -> Result<f64> {
    check_unit_open("tpb_pdf", x)?;
    let phi = params.phi_value()?;
    Ok(tpb_log_pdf_split(x, 1.0 - x, params.a, params.b, phi))
}

/// Density Γ(a+b)/(Γ(a)Γ(b)) φ^b x^{b−1}(1−x)^{a−1}{1 + (φ−1)x}^{−(a+b)}.
pub fn tpb_pdf(x: f64, params: &TpbParams) -> Result<f64> {
    tpb_log_pdf(x, params).map(f64::exp)
}

/// Gauss hypergeometric density on (0, 1):
/// x^{b−1}(1−x)^{a−1}(1+ζx)^{−r} / {B(b, a) ₂F₁(r, b; a+b; −ζ)}.
pub fn gh_pdf(x: f64, a: f64, b: f64, r: f64, zeta: f64) -> Result<f64> {
    check_unit_open("gh_pdf", x)?;
    if !(a > 0.0 && b > 0.0 && r > 0.0 && zeta.is_finite() && zeta > -1.0) {
        return Err(Error::domain(
            "gh_pdf",
            format!("need a, b, r > 0 and zeta > -1, got ({a}, {b}, {r}, {zeta})"),
        ));
    }
    let norm = gauss_2f1(r, b, a + b, -zeta)?;
    let log = -log_beta(b, a) - norm.ln() + (b - 1.0) * x.ln() + (a - 1.0) * (-x).ln_1p() - r * (zeta * x).ln_1p();
    Ok(log.exp())
}

/// CDF of TPB(a, b, φ) by tanh–sinh quadrature of the density. The upper
/// half is computed as a complement so that mass piled against 1 is resolved.
pub fn tpb_cdf(x: f64, params: &TpbParams) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::domain("tpb_cdf", "x is NaN"));
    }
    let phi = params.phi_value()?;
    let (a, b) = (params.a, params.b);
    if x <= 0.0 {
        return Ok(0.0);
    }
    if x >= 1.0 {
        return Ok(1.0);
    }
    const ABS_TOL: f64 = 1e-12;
    const REL_TOL: f64 = 1e-11;
    let v = if x <= 0.5 {
        quad::tanh_sinh(|t, from_lo, _| tpb_log_pdf_split(from_lo, 1.0 - t, a, b, phi).exp(), 0.0, x, ABS_TOL, REL_TOL)?.value
    } else {
        let upper = quad::tanh_sinh(|t, _, to_hi| tpb_log_pdf_split(t, to_hi, a, b, phi).exp(), x, 1.0, ABS_TOL, REL_TOL)?;
        1.0 - upper.value
    };
    Ok(v.clamp(0.0, 1.0))
}

/// k-th raw moment φ^b Γ(a+b)Γ(b+k)/{Γ(b)Γ(a+b+k)} ₂F₁(a+b, b+k; a+b+k; 1−φ).
///
/// The φ^b factor comes from the density's normalising constant; it is 1 at
/// φ = 1, where the expression reduces to the beta moment.
pub fn tpb_moment(k: u32, params: &TpbParams) -> Result<f64> {
    if k < 1 {
        return Err(Error::domain("tpb_moment", "k must be at least 1"));
    }
    let phi = params.phi_value()?;
    let (a, b, k) = (params.a, params.b, k as f64);
    let log_front = b * phi.ln() + log_gamma(a + b)? + log_gamma(b + k)? - log_gamma(b)? - log_gamma(a + b + k)?;
    let f = gauss_2f1(a + b, b + k, a + b + k, 1.0 - phi)?;
    Ok(log_front.exp() * f)
}

/// φ* with P(ρ > threshold) = target under TPB(a, b, φ*), by bisection on
/// log φ over [1e-12, 1e12].
pub fn calibrate_phi(a: f64, b: f64, threshold: f64, target: f64) -> Result<f64> {
    if !(threshold > 0.0 && threshold < 1.0) || !(target > 0.0 && target < 1.0) {
        return Err(Error::domain(
            "calibrate_phi",
            format!("threshold and target must lie in (0, 1), got {threshold}, {target}"),
        ));
    }
    TpbParams::fixed(a, b, 1.0)?;
    let excess = |log_phi: f64| -> Result<f64> {
        let p = TpbParams::fixed(a, b, log_phi.exp())?;
        Ok(1.0 - tpb_cdf(threshold, &p)? - target)
    };
    let (mut lo, mut hi) = (1e-12f64.ln(), 1e12f64.ln());
    let (f_lo, f_hi) = (excess(lo)?, excess(hi)?);
    if f_lo < 0.0 || f_hi > 0.0 {
        return Err(Error::Calibration(format!(
            "P(rho > {threshold}) = {target} not bracketed on phi in [1e-12, 1e12] (a = {a}, b = {b}; \
             probabilities {:.6} .. {:.6})",
            f_lo + target,
            f_hi + target
        )));
    }
    while hi - lo > 1e-8 {
        let mid = 0.5 * (lo + hi);
        if excess(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

fn gamma_dist(shape: f64, rate: f64) -> Result<Gamma<f64>> {
    Gamma::new(shape, 1.0 / rate)
        .map_err(|e| Error::domain("gamma", format!("shape {shape}, rate {rate}: {e}")))
}

fn clamp_open(rho: f64) -> f64 {
    rho.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

fn normal_with_variance<R: Rng + ?Sized>(var: f64, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(rand_distr::StandardNormal);
    z * var.sqrt()
}

/// ρ draws through τ/φ = G(a, 1)/G(b, 1) and ρ = 1/(1 + τ).
pub fn sample_tpb<R: Rng + ?Sized>(params: &TpbParams, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    let phi = params.phi_value()?;
    let ga = gamma_dist(params.a, 1.0)?;
    let gb = gamma_dist(params.b, 1.0)?;
    Ok((0..n)
        .map(|_| {
            let (u, v) = (ga.sample(rng), gb.sample(rng));
            clamp_open(v / (v + phi * u))
        })
        .collect())
}

/// ρ draws as the image of B ~ Beta(b, a) under B ↦ B/{B + φ(1 − B)}.
pub fn sample_tpb_direct<R: Rng + ?Sized>(params: &TpbParams, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    let phi = params.phi_value()?;
    let beta = Beta::new(params.b, params.a).map_err(|e| Error::domain("sample_tpb_direct", e.to_string()))?;
    Ok((0..n)
        .map(|_| {
            let x: f64 = beta.sample(rng);
            clamp_open(x / (x + phi * (1.0 - x)))
        })
        .collect())
}

/// θ via λ ~ G(b, φ), τ ~ G(a, λ), θ ~ N(0, τ).
pub fn sample_theta_hier1<R: Rng + ?Sized>(params: &TpbParams, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    let phi = params.phi_value()?;
    let lam = gamma_dist(params.b, phi)?;
    let ga = gamma_dist(params.a, 1.0)?;
    Ok((0..n)
        .map(|_| {
            let lambda = lam.sample(rng);
            let tau = ga.sample(rng) / lambda;
            normal_with_variance(tau, rng)
        })
        .collect())
}

/// θ via τ/φ ~ inverted beta(a, b), θ ~ N(0, τ).
pub fn sample_theta_inverted_beta<R: Rng + ?Sized>(params: &TpbParams, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    let phi = params.phi_value()?;
    let ga = gamma_dist(params.a, 1.0)?;
    let gb = gamma_dist(params.b, 1.0)?;
    Ok((0..n)
        .map(|_| {
            let tau = phi * ga.sample(rng) / gb.sample(rng);
            normal_with_variance(tau, rng)
        })
        .collect())
}

/// θ via ρ ~ TPB(a, b, φ) (direct route), θ | ρ ~ N(0, 1/ρ − 1).
pub fn sample_theta_rho_mixing<R: Rng + ?Sized>(params: &TpbParams, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    let rho = sample_tpb_direct(params, n, rng)?;
    Ok(rho.into_iter().map(|r| normal_with_variance((1.0 - r) / r, rng)).collect())
}

/// Horseshoe θ via φ^{1/2} ~ C⁺(0, 1), τ^{1/2} ~ C⁺(0, φ^{1/2}), θ ~ N(0, τ).
pub fn sample_theta_horseshoe_cauchy<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let c: Cauchy<f64> = Cauchy::new(0.0, 1.0).unwrap();
    (0..n)
        .map(|_| {
            let global: f64 = c.sample(rng).abs();
            let local = global * c.sample(rng).abs();
            local * rng.sample::<f64, _>(rand_distr::StandardNormal)
        })
        .collect()
}

/// Horseshoe θ via ω ~ G(1/2, 1), φ ~ G(1/2, ω), λ ~ G(1/2, φ), τ ~ G(1/2, λ).
pub fn sample_theta_horseshoe_gamma<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let g = gamma_dist(0.5, 1.0).unwrap();
    (0..n)
        .map(|_| {
            let omega = g.sample(rng);
            let phi = g.sample(rng) / omega;
            let lambda = g.sample(rng) / phi;
            let tau = g.sample(rng) / lambda;
            normal_with_variance(tau, rng)
        })
        .collect()
}

/// One draw from GIG(μ, ν, ξ), Hörmann–Leydold generators.
pub fn gig_sample<R: Rng + ?Sized>(params: &GigParams, rng: &mut R) -> Result<f64> {
    params.validate()?;
    let GigParams { mu, nu, xi } = *params;
    if xi == 0.0 {
        return Ok(gamma_dist(mu, nu / 2.0)?.sample(rng));
    }
    let alpha = (xi / nu).sqrt();
    let omega = (nu * xi).sqrt();
    let lambda = mu.abs();
    let y = if lambda > 2.0 || omega > 3.0 {
        rou_shift(lambda, omega, rng)
    } else if lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2 {
        rou_noshift(lambda, omega, rng)
    } else {
        concave_hat(lambda, omega, rng)
    };
    Ok(if mu < 0.0 { alpha / y } else { alpha * y })
}

// Mode of y^{λ−1} exp{−ω(y + 1/y)/2}.
fn gig_mode(lambda: f64, omega: f64) -> f64 {
    if lambda >= 1.0 {
        (((lambda - 1.0) * (lambda - 1.0) + omega * omega).sqrt() + (lambda - 1.0)) / omega
    } else {
        omega / (((1.0 - lambda) * (1.0 - lambda) + omega * omega).sqrt() + (1.0 - lambda))
    }
}

fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Open01)
}

// ratio-of-uniforms with the mode shifted to the origin
fn rou_shift<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = gig_mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);
    // extrema of (x − xm) √f(x) from the cubic y³ + a y² + b y + c = 0
    let a = -(2.0 * (lambda + 1.0) / omega + xm);
    let b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
    let c = xm;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let fi = (-q / (2.0 * (-(p * p * p) / 27.0).sqrt())).clamp(-1.0, 1.0).acos();
    let fak = 2.0 * (-p / 3.0).sqrt();
    let y1 = fak * (fi / 3.0).cos() - a / 3.0;
    let y2 = fak * (fi / 3.0 + 4.0 / 3.0 * PI).cos() - a / 3.0;
    let uplus = (y1 - xm) * (t * y1.ln() - s * (y1 + 1.0 / y1) - nc).exp();
    let uminus = (y2 - xm) * (t * y2.ln() - s * (y2 + 1.0 / y2) - nc).exp();
    loop {
        let u = uminus + rng.random::<f64>() * (uplus - uminus);
        let v = open01(rng);
        let x = u / v + xm;
        if x > 0.0 && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

fn rou_noshift<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = gig_mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);
    let ym = ((lambda + 1.0) + ((lambda + 1.0) * (lambda + 1.0) + omega * omega).sqrt()) / omega;
    let um = (0.5 * (lambda + 1.0) * ym.ln() - s * (ym + 1.0 / ym) - nc).exp();
    loop {
        let u = um * open01(rng);
        let v = open01(rng);
        let x = u / v;
        if v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

// Rejection from a three-piece hat for 0 ≤ λ < 1 and small ω, where the
// density is not T-concave.
fn concave_hat<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let xm = gig_mode(lambda, omega);
    let x0 = omega / (1.0 - lambda);
    let k0 = ((lambda - 1.0) * xm.ln() - 0.5 * omega * (xm + 1.0 / xm)).exp();
    let a0 = k0 * x0;
    let (k1, a1, k2, a2);
    if x0 >= 2.0 / omega {
        k1 = 0.0;
        a1 = 0.0;
        k2 = x0.powf(lambda - 1.0);
        a2 = k2 * 2.0 * (-omega * x0 / 2.0).exp() / omega;
    } else {
        k1 = (-omega).exp();
        a1 = if lambda == 0.0 {
            k1 * (2.0 / (omega * omega)).ln()
        } else {
            k1 / lambda * ((2.0 / omega).powf(lambda) - x0.powf(lambda))
        };
        k2 = (2.0 / omega).powf(lambda - 1.0);
        a2 = k2 * 2.0 * (-1.0f64).exp() / omega;
    }
    let total = a0 + a1 + a2;
    loop {
        let mut v = total * rng.random::<f64>();
        let (x, hx);
        if v <= a0 {
            x = x0 * v / a0;
            hx = k0;
        } else {
            v -= a0;
            if v <= a1 {
                if lambda == 0.0 {
                    x = omega * (omega.exp() * v).exp();
                    hx = k1 / x;
                } else {
                    x = (x0.powf(lambda) + lambda / k1 * v).powf(1.0 / lambda);
                    hx = k1 * x.powf(lambda - 1.0);
                }
            } else {
                v -= a1;
                let start = x0.max(2.0 / omega);
                x = -2.0 / omega * ((-omega / 2.0 * start).exp() - omega / (2.0 * k2) * v).ln();
                hx = k2 * (-omega / 2.0 * x).exp();
            }
        }
        let u = open01(rng) * hx;
        if x > 0.0 && x.is_finite() && u.ln() <= (lambda - 1.0) * x.ln() - omega / 2.0 * (x + 1.0 / x) {
            return x;
        }
    }
}

/// Log density of GIG(μ, ν, ξ) for ξ > 0.
pub fn gig_log_pdf(x: f64, params: &GigParams) -> Result<f64> {
    params.validate()?;
    let GigParams { mu, nu, xi } = *params;
    if xi == 0.0 {
        return Err(Error::domain("gig_log_pdf", "xi must be positive"));
    }
    if !(x > 0.0) {
        return Ok(f64::NEG_INFINITY);
    }
    let log_norm = 0.5 * mu * (nu / xi).ln() - (2.0f64).ln() - specfun::log_bessel_k(mu, (nu * xi).sqrt())?;
    Ok(log_norm + (mu - 1.0) * x.ln() - 0.5 * (nu * x + xi / x))
}

/// E[X] = √(ξ/ν) K_{μ+1}(√(νξ))/K_μ(√(νξ)); 2μ/ν when ξ = 0.
pub fn gig_mean(params: &GigParams) -> Result<f64> {
    params.validate()?;
    let GigParams { mu, nu, xi } = *params;
    if xi == 0.0 {
        return Ok(2.0 * mu / nu);
    }
    Ok((xi / nu).sqrt() * specfun::bessel_k_ratio(mu, (nu * xi).sqrt())?)
}

/// E[1/X] = √(ν/ξ) K_{μ−1}(√(νξ))/K_μ(√(νξ)); ν/{2(μ−1)} when ξ = 0 and μ > 1.
pub fn gig_inv_mean(params: &GigParams) -> Result<f64> {
    params.validate()?;
    let GigParams { mu, nu, xi } = *params;
    if xi == 0.0 {
        if mu <= 1.0 {
            return Err(Error::domain("gig_inv_mean", format!("E[1/X] is infinite for xi = 0, mu = {mu}")));
        }
        return Ok(nu / (2.0 * (mu - 1.0)));
    }
    Ok((nu / xi).sqrt() / specfun::bessel_k_ratio(mu - 1.0, (nu * xi).sqrt())?)
}

/// Marginal density of β under β | τ ~ N(0, τ) with τ ~ inverted beta(a, 1/2)
/// (φ = 1), in closed form for a ∈ {1/2, 1, 3/2}. At a = 1/2 the density is
/// infinite at the origin.
pub fn marginal_beta_pdf(beta: f64, a: f64) -> Result<f64> {
    if !beta.is_finite() {
        return Err(Error::domain("marginal_beta_pdf", format!("beta = {beta} is not finite")));
    }
    let z = 0.5 * beta * beta;
    if a == 0.5 {
        if z == 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(exp_scaled_e1(z) / (SQRT_2 * PI.powf(1.5)))
    } else if a == 1.0 {
        let t = beta.abs();
        Ok(1.0 / (2.0 * PI).sqrt() - 0.5 * t * specfun::erfcx(t / SQRT_2))
    } else if a == 1.5 {
        let tail = if z == 0.0 { 0.0 } else { z * exp_scaled_e1(z) };
        Ok(SQRT_2 / PI.powf(1.5) * (1.0 - tail))
    } else {
        Err(Error::domain("marginal_beta_pdf", format!("closed form available only for a in {{1/2, 1, 3/2}}, got {a}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn parameter_validation() {
        assert!(TpbParams::fixed(0.0, 1.0, 1.0).is_err());
        assert!(TpbParams::fixed(1.0, 1.0, -1.0).is_err());
        assert!(TpbParams::horseshoe(Phi::HalfCauchy).phi_value().is_err());
        assert!(GigParams::new(-0.5, 1.0, 0.0).is_err());
        assert!(GigParams::new(0.5, 0.0, 1.0).is_err());
        assert!(GigParams::new(0.5, 2.0, 0.0).is_ok());
    }

    #[test]
    fn shrinkage_coefficient_round_trip() {
        let s = ShrinkageCoefficient::from_tau(3.0).unwrap();
        assert_eq!(s.rho(), 0.25);
        assert!((s.tau() - 3.0).abs() < 1e-15);
        assert!(ShrinkageCoefficient::from_rho(1.0).is_err());
    }

    #[test]
    fn arcsine_special_case() {
        let p = TpbParams::fixed(0.5, 0.5, 1.0).unwrap();
        assert!((tpb_pdf(0.5, &p).unwrap() - 2.0 / PI).abs() < 1e-14);
        assert!((tpb_cdf(0.5, &p).unwrap() - 0.5).abs() < 1e-10);
        assert_eq!(tpb_cdf(1.0, &p).unwrap(), 1.0);
        assert!(tpb_pdf(1.0, &p).is_err());
        assert!(tpb_pdf(0.5, &TpbParams::horseshoe(Phi::HalfCauchy)).is_err());
    }

    #[test]
    fn gh_reduces_to_tpb() {
        let p = TpbParams::fixed(2.0, 2.0, 3.0).unwrap();
        assert!(rel(gh_pdf(0.3, 2.0, 2.0, 4.0, 2.0).unwrap(), tpb_pdf(0.3, &p).unwrap()) < 1e-12);
        assert!((gh_pdf(0.5, 1.0, 1.0, 2.0, 0.0).unwrap() - 1.0).abs() < 1e-14);
        assert!(gh_pdf(0.5, 1.0, 1.0, 2.0, -1.0).is_err());
    }

    #[test]
    fn simple_moments() {
        assert!((tpb_moment(1, &TpbParams::fixed(0.5, 0.5, 1.0).unwrap()).unwrap() - 0.5).abs() < 1e-13);
        assert!((tpb_moment(1, &TpbParams::fixed(2.0, 1.0, 1.0).unwrap()).unwrap() - 1.0 / 3.0).abs() < 1e-13);
        assert!(tpb_moment(0, &TpbParams::fixed(2.0, 1.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn samplers_stay_inside_unit_interval() {
        let mut rng = seeded(4);
        for p in [(0.05, 0.05, 1.0), (1.0, 0.5, 1e-8), (3.0, 0.1, 1e8)] {
            let p = TpbParams::fixed(p.0, p.1, p.2).unwrap();
            for r in sample_tpb(&p, 2000, &mut rng).unwrap() {
                assert!(r > 0.0 && r < 1.0);
            }
            for r in sample_tpb_direct(&p, 2000, &mut rng).unwrap() {
                assert!(r > 0.0 && r < 1.0);
            }
        }
        assert!(sample_tpb(&TpbParams::horseshoe(Phi::Fixed(1.0)), 0, &mut rng).unwrap().is_empty());
    }

    #[test]
    fn gig_half_order_inverse_mean_is_exact() {
        let p = GigParams::new(0.5, 3.0, 0.7).unwrap();
        assert!(rel(gig_inv_mean(&p).unwrap(), (3.0f64 / 0.7).sqrt()) < 1e-13);
        let g = GigParams::new(1.5, 4.0, 0.0).unwrap();
        assert_eq!(gig_mean(&g).unwrap(), 0.75);
        assert!(gig_inv_mean(&GigParams::new(0.5, 4.0, 0.0).unwrap()).is_err());
    }

    #[test]
    fn marginal_special_values() {
        assert!((marginal_beta_pdf(0.0, 1.0).unwrap() - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-15);
        assert!((marginal_beta_pdf(0.0, 1.5).unwrap() - 0.253_974_543_736_963_9).abs() < 1e-15);
        let f = |b| marginal_beta_pdf(b, 0.5).unwrap();
        assert!(f(1e-8) > f(1e-4) && f(1e-4) > f(1e-2));
        assert!(marginal_beta_pdf(0.3, 2.0).is_err());
        for a in [0.5, 1.0, 1.5] {
            let v = marginal_beta_pdf(40.0, a).unwrap();
            assert!(v.is_finite() && v > 0.0);
        }
    }
}
