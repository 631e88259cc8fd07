//! Numerical integration.
//!
//! * [`tanh_sinh`]: double-exponential rule on a finite interval; handles
//!   integrable endpoint singularities. The integrand receives the abscissa
//!   together with its exact distances to both endpoints so that factors such
//!   as `(1 - x)^(a-1)` stay accurate right next to the boundary.
//! * [`gauss_kronrod`]: globally adaptive 7/15-point Gauss–Kronrod.
//! * [`log_integral_concave`]: `ln ∫ exp(g(s)) ds` over the real line for a
//!   concave log-integrand, computed with a shifted trapezoid rule.

use crate::error::{Error, Result};

/// Result of a quadrature.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Tanh-sinh quadrature of `f(x, x - a, b - x)` over `[a, b]`.
///
/// Levels halve the step until two successive estimates agree to
/// `abs_tol + rel_tol·|I|`.
pub fn tanh_sinh<F>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<Integral>
where
    F: Fn(f64, f64, f64) -> f64,
{
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::Usage(format!("tanh_sinh: invalid interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
        });
    }
    const MAX_LEVEL: u32 = 12;
    const T_MAX: f64 = 6.5;
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let hpi = std::f64::consts::FRAC_PI_2;
    let evaluations = std::cell::Cell::new(0usize);

    // contribution of the node pair at parameter t (t > 0) plus its weight
    let eval_pair = |t: f64| -> Option<f64> {
        let u = hpi * t.sinh();
        let e = (-2.0 * u).exp();
        // distance from the nearer endpoint: half * (1 - tanh u) = half * 2e/(1+e)
        let dist = half * 2.0 * e / (1.0 + e);
        if dist < f64::MIN_POSITIVE {
            return None;
        }
        let w = hpi * t.cosh() * 4.0 * e / ((1.0 + e) * (1.0 + e));
        let x_hi = b - dist;
        let x_lo = a + dist;
        let f_hi = f(x_hi, b - a - dist, dist);
        let f_lo = f(x_lo, dist, b - a - dist);
        evaluations.set(evaluations.get() + 2);
        Some(w * (finite_or_zero(f_hi) + finite_or_zero(f_lo)))
    };

    let mut h = 1.0;
    let f0 = f(mid, half, half);
    evaluations.set(evaluations.get() + 1);
    let mut sum = hpi * finite_or_zero(f0);
    let mut k = 1;
    loop {
        let t = k as f64 * h;
        if t > T_MAX {
            break;
        }
        match eval_pair(t) {
            Some(v) => sum += v,
            None => break,
        }
        k += 1;
    }
    let mut estimate = sum * h * half;
    let mut last_diff = f64::INFINITY;
    for _level in 1..=MAX_LEVEL {
        h *= 0.5;
        // new nodes are the odd multiples of h
        let mut k = 1;
        loop {
            let t = k as f64 * h;
            if t > T_MAX {
                break;
            }
            match eval_pair(t) {
                Some(v) => sum += v,
                None => break,
            }
            k += 2;
        }
        let next = sum * h * half;
        last_diff = (next - estimate).abs();
        estimate = next;
        if last_diff <= abs_tol + rel_tol * estimate.abs() {
            return Ok(Integral {
                value: estimate,
                error_estimate: last_diff,
                evaluations: evaluations.get(),
            });
        }
    }
    Err(Error::Numerical(format!(
        "tanh_sinh did not converge on [{a}, {b}]: last change {last_diff:e}, estimate {estimate}"
    )))
}

fn finite_or_zero(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

// 15-point Kronrod abscissae/weights and the embedded 7-point Gauss weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Globally adaptive Gauss–Kronrod (7/15) on a finite interval.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<Integral> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Usage(format!("gauss_kronrod: invalid interval [{a}, {b}]")));
    }
    const MAX_INTERVALS: usize = 5000;
    let (v, e) = gk15(&f, a, b);
    let mut parts = vec![(a, b, v, e)];
    let mut evaluations = 15;
    loop {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(Integral {
                value: total,
                error_estimate: err,
                evaluations,
            });
        }
        if parts.len() >= MAX_INTERVALS {
            return Err(Error::Numerical(format!(
                "gauss_kronrod exhausted {MAX_INTERVALS} subintervals on [{a}, {b}] (error {err:e})"
            )));
        }
        let (idx, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, _, _) = parts.swap_remove(idx);
        let m = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, m);
        let (v2, e2) = gk15(&f, m, hi);
        evaluations += 30;
        parts.push((lo, m, v1, e1));
        parts.push((m, hi, v2, e2));
    }
}

/// `ln ∫_{-∞}^{∞} exp(g(s)) ds` for a concave `g` whose integral is finite.
///
/// The mode is bracketed and refined by golden-section search, the support is
/// truncated where `g` falls 60 nats below its maximum, and the trapezoid rule
/// (exponentially convergent for smooth, rapidly decaying integrands) is
/// refined until the relative change is below `rel_tol`.
pub fn log_integral_concave<G: Fn(f64) -> f64>(g: G, start: f64, rel_tol: f64) -> Result<f64> {
    let (mode, gmax) = maximize_concave(&g, start)?;
    const DROP: f64 = 60.0;
    let mut step = 1.0;
    let mut lo = mode - step;
    let mut n = 0;
    while g(lo) > gmax - DROP {
        step *= 1.5;
        lo = mode - step;
        n += 1;
        if n > 200 {
            return Err(Error::Numerical("log_integral_concave: left tail does not decay".into()));
        }
    }
    step = 1.0;
    let mut hi = mode + step;
    n = 0;
    while g(hi) > gmax - DROP {
        step *= 1.5;
        hi = mode + step;
        n += 1;
        if n > 200 {
            return Err(Error::Numerical("log_integral_concave: right tail does not decay".into()));
        }
    }
    let shifted = |s: f64| {
        let v = g(s) - gmax;
        if v.is_finite() {
            v.exp()
        } else {
            0.0
        }
    };
    let mut m = 32usize;
    let mut h = (hi - lo) / m as f64;
    let mut sum = 0.5 * (shifted(lo) + shifted(hi)) + (1..m).map(|i| shifted(lo + i as f64 * h)).sum::<f64>();
    let mut est = sum * h;
    for _ in 0..14 {
        // add midpoints
        let mids: f64 = (0..m).map(|i| shifted(lo + (i as f64 + 0.5) * h)).sum();
        sum += mids;
        m *= 2;
        h *= 0.5;
        let next = sum * h;
        let done = (next - est).abs() <= rel_tol * next;
        est = next;
        if done {
            return Ok(gmax + est.ln());
        }
    }
    Err(Error::Numerical(format!(
        "log_integral_concave: trapezoid rule did not settle on [{lo}, {hi}]"
    )))
}

/// Maximizer of a concave function on the real line.
fn maximize_concave<G: Fn(f64) -> f64>(g: &G, start: f64) -> Result<(f64, f64)> {
    let mut a = start - 1.0;
    let mut b = start + 1.0;
    let ga = g(a);
    let gb = g(b);
    let gs = g(start);
    let mut step = 1.0;
    // expand until start-ish point dominates both ends
    let (mut lo, mut hi) = (a, b);
    if !(gs >= ga && gs >= gb) {
        let dir = if gb > ga { 1.0 } else { -1.0 };
        let mut x0 = start;
        let mut g0 = gs;
        let mut iter = 0;
        loop {
            step *= 1.6;
            let x1 = x0 + dir * step;
            let g1 = g(x1);
            if !(g1 > g0) {
                lo = (x0 - dir * step / 1.6).min(x1);
                hi = (x0 - dir * step / 1.6).max(x1);
                break;
            }
            x0 = x1;
            g0 = g1;
            iter += 1;
            if iter > 400 {
                return Err(Error::Numerical("maximize_concave: no maximum found".into()));
            }
        }
    }
    a = lo;
    b = hi;
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let mut gc = g(c);
    let mut gd = g(d);
    for _ in 0..200 {
        if (b - a).abs() < 1e-10 * (1.0 + c.abs()) {
            break;
        }
        if gc > gd {
            b = d;
            d = c;
            gd = gc;
            c = b - invphi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + invphi * (b - a);
            gd = g(d);
        }
    }
    let x = 0.5 * (a + b);
    let gx = g(x);
    if !gx.is_finite() {
        return Err(Error::Numerical(format!("maximize_concave: non-finite maximum at {x}")));
    }
    Ok((x, gx))
}
