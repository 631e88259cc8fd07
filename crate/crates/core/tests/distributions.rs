use statrs::function::beta::beta_reg;
use tpbn::dist::*;
use tpbn::quad;
use tpbn::rng::seeded;
use tpbn::stats::{ks_one_sample, ks_two_sample, mean, std_error};

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn grid() -> Vec<TpbParams> {
    [(0.5, 0.5, 1.0), (1.0, 0.5, 1e-4), (2.0, 2.0, 0.5), (0.3, 1.7, 20.0), (1.5, 0.5, 3.0)]
        .iter()
        .map(|&(a, b, phi)| TpbParams::fixed(a, b, phi).unwrap())
        .collect()
}

// P(ρ ≤ x) = P(τ/φ ≥ (1 − x)/(xφ)) with τ/φ inverted beta(a, b)
fn cdf_oracle(x: f64, p: &TpbParams) -> f64 {
    let phi = p.phi_value().unwrap();
    let t = (1.0 - x) / (x * phi);
    1.0 - beta_reg(p.a, p.b, t / (1.0 + t))
}

// 1 − ρ ~ TPB(b, a, 1/φ), so the upper half is integrated near 0 as well,
// where the abscissae carry full relative precision
fn reflected(p: &TpbParams) -> TpbParams {
    TpbParams::fixed(p.b, p.a, 1.0 / p.phi_value().unwrap()).unwrap()
}

#[test]
fn density_integrates_to_one() {
    for p in grid() {
        let half = |q: &TpbParams| {
            quad::tanh_sinh(|x, _, _| tpb_pdf(x, q).unwrap(), 0.0, 0.5, 1e-12, 1e-11).unwrap().value
        };
        let total = half(&p) + half(&reflected(&p));
        assert!((total - 1.0).abs() < 1e-8, "{p:?}: {total}");
    }
}

#[test]
fn density_reflection() {
    for p in grid() {
        for &x in &[0.1, 0.25, 0.5, 0.8] {
            let lhs = tpb_pdf(x, &p).unwrap();
            let rhs = tpb_pdf(1.0 - x, &reflected(&p)).unwrap();
            assert!(rel(lhs, rhs) < 1e-12, "{p:?} x={x}");
        }
    }
}

#[test]
fn cdf_matches_inverted_beta_closed_form() {
    for p in grid() {
        for &x in &[1e-6, 0.01, 0.2, 0.5, 0.7, 0.99, 0.999999] {
            let got = tpb_cdf(x, &p).unwrap();
            let want = cdf_oracle(x, &p);
            assert!((got - want).abs() < 1e-9, "{p:?} x={x}: {got} vs {want}");
        }
    }
}

#[test]
fn cdf_is_monotone() {
    let p = TpbParams::fixed(1.0, 0.5, 1e-4).unwrap();
    let mut last = 0.0;
    for i in 1..200 {
        let v = tpb_cdf(i as f64 / 200.0, &p).unwrap();
        assert!(v >= last - 1e-12);
        last = v;
    }
}

#[test]
fn gh_density_against_normalised_kernel() {
    let kernel = |x: f64| 1.0 / ((x * (1.0 - x)).sqrt() * (1.0 + x));
    let z = quad::tanh_sinh(|x, lo, hi| 1.0 / ((lo * hi).sqrt() * (1.0 + x)), 0.0, 1.0, 1e-13, 1e-12).unwrap().value;
    let got = gh_pdf(0.25, 0.5, 0.5, 1.0, 1.0).unwrap();
    assert!(rel(got, kernel(0.25) / z) < 1e-10);
    for &x in &[0.01, 0.4, 0.93] {
        let p = TpbParams::fixed(0.7, 1.3, 4.0).unwrap();
        assert!(rel(gh_pdf(x, 0.7, 1.3, 2.0, 3.0).unwrap(), tpb_pdf(x, &p).unwrap()) < 1e-11);
    }
}

#[test]
fn moments_match_monte_carlo() {
    let mut rng = seeded(11);
    for p in grid() {
        let draws = sample_tpb(&p, 400_000, &mut rng).unwrap();
        for k in 1..=3u32 {
            let pow: Vec<f64> = draws.iter().map(|r| r.powi(k as i32)).collect();
            let want = tpb_moment(k, &p).unwrap();
            let (m, se) = (mean(&pow), std_error(&pow));
            assert!((m - want).abs() < 4.0 * se + 1e-12, "{p:?} k={k}: mc {m} ± {se}, exact {want}");
        }
    }
}

#[test]
fn second_moment_of_arcsine_like_case() {
    let p = TpbParams::fixed(0.5, 0.5, 2.0).unwrap();
    let mut rng = seeded(12);
    let draws: Vec<f64> = sample_tpb(&p, 1_000_000, &mut rng).unwrap().iter().map(|r| r * r).collect();
    let want = tpb_moment(2, &p).unwrap();
    assert!((mean(&draws) - want).abs() < 3.0 * std_error(&draws));
}

#[test]
fn gamma_ratio_matches_beta_for_horseshoe() {
    let p = TpbParams::fixed(0.5, 0.5, 1.0).unwrap();
    let mut rng = seeded(13);
    let a = sample_tpb(&p, 100_000, &mut rng).unwrap();
    let b = sample_tpb_direct(&p, 100_000, &mut rng).unwrap();
    assert!(ks_two_sample(&a, &b) < 0.012);
    let arcsine = |x: f64| 2.0 / std::f64::consts::PI * x.sqrt().asin();
    assert!(ks_one_sample(&a, arcsine) < 0.012);
}

#[test]
fn calibrated_prior_puts_ninety_nine_percent_above_half() {
    let p = TpbParams::fixed(1.0, 0.5, 1e-4).unwrap();
    let mut rng = seeded(14);
    let draws = sample_tpb(&p, 100_000, &mut rng).unwrap();
    let frac = draws.iter().filter(|&&r| r > 0.5).count() as f64 / draws.len() as f64;
    assert!((frac - 0.99).abs() < 0.005, "{frac}");
}

#[test]
fn calibration_round_trips() {
    let phi = calibrate_phi(1.0, 0.5, 0.5, 0.9).unwrap();
    let p = TpbParams::fixed(1.0, 0.5, phi).unwrap();
    assert!((tpb_cdf(0.5, &p).unwrap() - 0.1).abs() < 1e-6);
    let sym = calibrate_phi(0.5, 0.5, 0.5, 0.5).unwrap();
    assert!((sym - 1.0).abs() < 1e-7, "{sym}");
    // a closed-form check at the a = 1, b = 1/2 calibration point
    let phi = calibrate_phi(1.0, 0.5, 0.5, 0.99).unwrap();
    let p = TpbParams::fixed(1.0, 0.5, phi).unwrap();
    assert!((cdf_oracle(0.5, &p) - 0.01).abs() < 1e-8);
    assert!(calibrate_phi(1.0, 0.5, 0.5, 1.0).is_err());
    // P(ρ ≤ 1/2) stays near 1e-6 even at φ = 1e-12
    assert!(matches!(calibrate_phi(1.0, 0.5, 0.5, 1.0 - 1e-10), Err(tpbn::Error::Calibration(_))));
}

#[test]
fn hierarchy_one_gives_half_cauchy_scale() {
    // with a = 1/2 the prior sd τ^{1/2} is C⁺(0, φ^{1/2}); recover τ from the
    // same gamma chain the θ sampler uses
    let phi: f64 = 2.5;
    let mut rng = seeded(15);
    let lam = rand_distr::Gamma::new(0.5, 1.0 / phi).unwrap();
    let g = rand_distr::Gamma::new(0.5, 1.0).unwrap();
    use rand_distr::Distribution;
    let sd: Vec<f64> = (0..100_000)
        .map(|_| {
            let l: f64 = lam.sample(&mut rng);
            (g.sample(&mut rng) / l).sqrt()
        })
        .collect();
    let s = phi.sqrt();
    let half_cauchy = |x: f64| 2.0 / std::f64::consts::PI * (x / s).atan();
    assert!(ks_one_sample(&sd, half_cauchy) < 0.012);
    let theta = sample_theta_hier1(&TpbParams::fixed(0.5, 0.5, phi).unwrap(), 1_000_000, &mut rng).unwrap();
    // heavy tails: compare the sign balance instead of the mean
    let pos = theta.iter().filter(|&&t| t > 0.0).count() as f64 / theta.len() as f64;
    assert!((pos - 0.5).abs() < 3.0 * 0.0005);
}

#[test]
fn theta_mean_is_zero_for_light_tails() {
    let mut rng = seeded(16);
    let theta = sample_theta_hier1(&TpbParams::fixed(2.0, 3.0, 1.0).unwrap(), 1_000_000, &mut rng).unwrap();
    assert!(mean(&theta).abs() < 3.0 * std_error(&theta));
}

#[test]
fn strawderman_berger_matches_rho_mixture() {
    // ρ ~ Beta(1/2, 1) in the usual (first-shape-on-ρ) order
    let mut rng = seeded(17);
    let beta = rand_distr::Beta::new(0.5, 1.0).unwrap();
    use rand_distr::Distribution;
    let sb: Vec<f64> = (0..100_000)
        .map(|_| {
            let r: f64 = beta.sample(&mut rng);
            let z: f64 = rand_distr::StandardNormal.sample(&mut rng);
            z * ((1.0 - r) / r).sqrt()
        })
        .collect();
    let tpbn = sample_theta_inverted_beta(&TpbParams::strawderman_berger(), 100_000, &mut rng).unwrap();
    assert!(ks_two_sample(&sb, &tpbn) < 0.012);
}

// (μ, ν, ξ, E X, E 1/X) by 30-digit quadrature of the unnormalised density
const GIG_MOMENTS: &[(f64, f64, f64, f64, f64)] = &[
    (0.2, 1.6, 0.3, 0.82477079472888822242, 3.0654442385540708032),
    (2.0, 1.0, 1.0, 4.3704411746314179401, 0.37044117463141794006),
    (-1.3, 0.5, 4.0, 1.8362034720586891041, 0.87952543400733616022),
    (0.0, 2.0, 1e-06, 0.074882079830058546658, 149764.15966011710009),
    (4.5, 0.2, 30.0, 48.770004224238912231, 0.025133361494926099591),
];

#[test]
fn gig_moments_against_quadrature() {
    for &(mu, nu, xi, m, im) in GIG_MOMENTS {
        let p = GigParams::new(mu, nu, xi).unwrap();
        assert!(rel(gig_mean(&p).unwrap(), m) < 1e-10, "{p:?}");
        assert!(rel(gig_inv_mean(&p).unwrap(), im) < 1e-10, "{p:?}");
    }
}

#[test]
fn gig_mean_by_local_quadrature() {
    let p = GigParams::new(2.0, 1.0, 1.0).unwrap();
    let dens = |x: f64| gig_log_pdf(x, &p).unwrap().exp();
    let z = quad::gauss_kronrod(|t| dens(t / (1.0 - t)) / ((1.0 - t) * (1.0 - t)), 0.0, 1.0, 1e-14, 1e-13).unwrap();
    let m = quad::gauss_kronrod(|t| t / (1.0 - t) * dens(t / (1.0 - t)) / ((1.0 - t) * (1.0 - t)), 0.0, 1.0, 1e-14, 1e-13)
        .unwrap();
    assert!((z.value - 1.0).abs() < 1e-10);
    assert!(rel(m.value, gig_mean(&p).unwrap()) < 1e-9);
}

#[test]
fn gig_sampler_moments() {
    // cover the three generators: three-piece hat, ROU without and with shift,
    // plus negative index and the gamma limit
    let cases = [
        (0.0, 2.0, 1e-4),
        (0.3, 0.05, 0.05),
        (0.5, 3.0, 2.0),
        (1.2, 3.0, 2.0),
        (-0.4, 1.0, 0.01),
        (-2.7, 2.0, 5.0),
        (6.0, 1.0, 40.0),
        (0.7, 0.3, 0.0),
    ];
    let mut rng = seeded(18);
    for &(mu, nu, xi) in &cases {
        let p = GigParams::new(mu, nu, xi).unwrap();
        let draws: Vec<f64> = (0..200_000).map(|_| gig_sample(&p, &mut rng).unwrap()).collect();
        assert!(draws.iter().all(|x| *x > 0.0 && x.is_finite()));
        let (m, se) = (mean(&draws), std_error(&draws));
        let want = gig_mean(&p).unwrap();
        assert!((m - want).abs() < 4.0 * se, "{p:?}: {m} ± {se} vs {want}");
        if xi > 0.0 {
            let inv: Vec<f64> = draws.iter().map(|x| 1.0 / x).collect();
            let (m, se) = (mean(&inv), std_error(&inv));
            let want = gig_inv_mean(&p).unwrap();
            assert!((m - want).abs() < 4.0 * se, "{p:?} inverse: {m} ± {se} vs {want}");
        }
    }
}

#[test]
fn gig_half_order_inverse_mean_by_sampling() {
    let (nu, xi) = (2.0, 0.5);
    let p = GigParams::new(0.5, nu, xi).unwrap();
    let mut rng = seeded(19);
    let inv: Vec<f64> = (0..1_000_000).map(|_| 1.0 / gig_sample(&p, &mut rng).unwrap()).collect();
    assert!((mean(&inv) - (nu / xi).sqrt()).abs() < 3.0 * std_error(&inv));
}

#[test]
fn gig_sampler_distribution_by_ks() {
    let p = GigParams::new(0.25, 1.5, 0.8).unwrap();
    let cdf = |x: f64| {
        quad::tanh_sinh(|t, _, _| gig_log_pdf(t, &p).unwrap().exp(), 0.0, x, 1e-12, 1e-10)
            .unwrap()
            .value
    };
    let mut rng = seeded(20);
    let draws: Vec<f64> = (0..20_000).map(|_| gig_sample(&p, &mut rng).unwrap()).collect();
    assert!(ks_one_sample(&draws, cdf) < 0.015);
}

// values of the normal/inverted-beta(a, 1/2) mixture density by 30-digit quadrature
const MARGINALS: &[(f64, f64, f64)] = &[
    (0.5, 0.7, 0.17198523769182039130),
    (1.0, 0.7, 0.18254573703066755931),
    (1.5, 0.7, 0.16970177726797188740),
    (0.5, 3.0, 0.023701106074241306748),
    (1.0, 3.0, 0.034400435334746176576),
    (1.5, 3.0, 0.040664589068792118407),
];

#[test]
fn marginal_densities_match_mixture_integral() {
    for &(a, beta, want) in MARGINALS {
        assert!(rel(marginal_beta_pdf(beta, a).unwrap(), want) < 1e-12, "a={a} beta={beta}");
        assert_eq!(marginal_beta_pdf(-beta, a).unwrap(), marginal_beta_pdf(beta, a).unwrap());
    }
}

#[test]
fn marginal_densities_integrate_to_one() {
    // tails decay like c/β² with c = 2 × (limit of β² f(β)); add the tail beyond B analytically
    let big = 2000.0;
    for &a in &[0.5, 1.0, 1.5] {
        let body = quad::tanh_sinh(|b, _, _| marginal_beta_pdf(b, a).unwrap(), 0.0, big, 1e-12, 1e-11)
            .unwrap()
            .value;
        let c = marginal_beta_pdf(big, a).unwrap() * big * big;
        let total = 2.0 * (body + c / big);
        assert!((total - 1.0).abs() < 1e-6, "a={a}: {total}");
    }
}
