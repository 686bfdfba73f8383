use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stable_consensus::fluctuation::{sigma_alpha_complete, NoiseSpec};
use stable_consensus::graph::{generators, Graph};
use stable_consensus::simulate::{estimate_scale, fractional_moment_check, run, Scheme, SimConfig};
use stable_consensus::stable::StableParams;

fn k5() -> Graph {
    generators::complete(5, 1.0).unwrap()
}

fn draws(law: StableParams, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = law.sampler();
    (0..count)
        .map(|_| rand_distr::Distribution::sample(&s, &mut rng))
        .collect()
}

#[test]
fn bit_identical_across_runs_and_thread_counts() {
    let cfg = SimConfig::new(
        generators::g1(),
        NoiseSpec::uniform(1.3, 0.4, 6).unwrap(),
        0.01,
        2.0,
        37,
        11,
    )
    .with_stride(10);
    let a = run(&cfg).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let b = pool.install(|| run(&cfg).unwrap());
    assert_eq!(a, b);
    let c = run(&SimConfig { seed: 12, ..cfg }).unwrap();
    assert_ne!(a, c);
}

#[test]
fn outputs_are_centered() {
    for scheme in [Scheme::Euler, Scheme::SemiExact] {
        let cfg = SimConfig::new(
            generators::path(5).unwrap(),
            NoiseSpec::symmetric(0.9, 5).unwrap(),
            0.01,
            5.0,
            20,
            3,
        )
        .with_stride(1)
        .with_scheme(scheme)
        .with_x0(vec![3.0, -1.0, 0.5, 10.0, 2.0]);
        assert!(run(&cfg).unwrap().centering_defect() <= 1e-8);
    }
}

#[test]
fn noise_free_drift_decays_at_lambda2() {
    let g = generators::path(4).unwrap();
    let lambda2 = g.spectrum().unwrap().lambda2();
    for (scheme, dt, tol) in [(Scheme::SemiExact, 0.01, 1e-9), (Scheme::Euler, 1e-4, 1e-3)] {
        let cfg = SimConfig::new(g.clone(), NoiseSpec::symmetric(1.5, 4).unwrap(), dt, 20.0, 1, 0)
            .with_stride((5.0 / dt).round() as usize)
            .with_scheme(scheme)
            .with_x0(vec![1.0, 0.0, 0.0, 0.0])
            .with_noise_scale(0.0);
        let e = run(&cfg).unwrap();
        let norm = |r: usize| e.y(0, r).iter().map(|v| v * v).sum::<f64>().sqrt();
        let rate = (norm(2) / norm(4)).ln() / (e.times[4] - e.times[2]);
        assert!((rate - lambda2).abs() < tol * lambda2, "{scheme}: {rate} vs {lambda2}");
        assert!(norm(4) < 1e-5);
    }
}

#[test]
fn gaussian_variance_matches_closed_form() {
    // K5 at α = 2: σ_l² = Σ₂/5 and Var = 2σ_l²
    let sigma2 = sigma_alpha_complete(5, 5.0, 2.0).unwrap() / 5.0;
    let cfg = SimConfig::new(k5(), NoiseSpec::symmetric(2.0, 5).unwrap(), 1e-3, 3.0, 4000, 5);
    let e = run(&cfg).unwrap();
    for l in 0..5 {
        let ys = e.stationary_samples(l, None);
        let var = ys.iter().map(|y| y * y).sum::<f64>() / ys.len() as f64;
        assert!((var / (2.0 * sigma2) - 1.0).abs() < 0.07, "node {l}: {var}");
        let est = estimate_scale(&ys, 2.0).unwrap();
        assert!((est.sigma_alpha / (0.5 * var) - 1.0).abs() < 0.08);
        assert!(est.beta.is_none());
    }
}

#[test]
fn estimator_recovers_sampler_scale() {
    for (alpha, sigma) in [(1.2, 0.7), (1.5, 2.0), (1.8, 1.0)] {
        let xs = draws(StableParams::symmetric(alpha, sigma).unwrap(), 100_000, 17);
        let est = estimate_scale(&xs, alpha).unwrap();
        let want = sigma.powf(alpha);
        assert!(
            (est.sigma_alpha / want - 1.0).abs() < 0.05,
            "α={alpha}: {} vs {want}",
            est.sigma_alpha
        );
        assert!(est.beta.unwrap().abs() < 0.1);
    }
    let xs = draws(StableParams::new(1.5, 1.0, 0.7, 0.0).unwrap(), 100_000, 18);
    let beta = estimate_scale(&xs, 1.5).unwrap().beta.unwrap();
    assert!((beta - 0.7).abs() < 0.1, "{beta}");
}

#[test]
fn fractional_moments_of_direct_draws() {
    let xs = draws(StableParams::symmetric(1.5, 1.3).unwrap(), 1_000_000, 23);
    let check = fractional_moment_check(&xs, 0.5, 1.5, 0.0, 1.3, 0.05).unwrap();
    assert!(check.pass, "{check:?}");
    let xs = draws(StableParams::symmetric(2.0, 0.8).unwrap(), 200_000, 24);
    let check = fractional_moment_check(&xs, 2.0, 2.0, 0.0, 0.8, 0.02).unwrap();
    assert!(check.pass, "{check:?}");
    assert!(fractional_moment_check(&xs, 1.5, 1.5, 0.0, 1.0, 0.1).is_err());
}

#[test]
fn stationary_windows_agree() {
    // T = 20/λ₂ on K5, sampled every 0.1 in [T/2, T]
    let cfg = SimConfig::new(k5(), NoiseSpec::symmetric(1.5, 5).unwrap(), 2e-3, 4.0, 1500, 8).with_stride(50);
    let e = run(&cfg).unwrap();
    for l in 0..5 {
        let half = estimate_scale(&e.window_samples(l, 2.0, 4.0), 1.5).unwrap().sigma_alpha;
        let quarter = estimate_scale(&e.window_samples(l, 3.0, 4.0), 1.5).unwrap().sigma_alpha;
        assert!((half / quarter - 1.0).abs() < 0.08, "node {l}: {half} vs {quarter}");
    }
}

#[test]
fn halving_the_step_keeps_estimates() {
    let base = SimConfig::new(k5(), NoiseSpec::symmetric(1.5, 5).unwrap(), 4e-3, 3.0, 3000, 9);
    let coarse = run(&base).unwrap();
    let fine = run(&SimConfig { dt: 2e-3, ..base }).unwrap();
    let pooled = |e: &stable_consensus::simulate::TrajectoryEnsemble| {
        let all: Vec<f64> = (0..5).flat_map(|l| e.stationary_samples(l, None)).collect();
        estimate_scale(&all, 1.5).unwrap().sigma_alpha
    };
    let (a, b) = (pooled(&coarse), pooled(&fine));
    assert!((a / b - 1.0).abs() < 0.1, "{a} vs {b}");
}

#[test]
fn heavier_tails_jump_more() {
    let fraction = |alpha: f64| {
        let cfg = SimConfig::new(k5(), NoiseSpec::symmetric(alpha, 5).unwrap(), 1e-3, 2.0, 4, 2).with_stride(1);
        run(&cfg).unwrap().jump_fraction(5.0)
    };
    let (f12, f16, f20) = (fraction(1.2), fraction(1.6), fraction(2.0));
    assert!(f12 > f16 && f16 > f20, "{f12} {f16} {f20}");
}

#[test]
fn csv_dump_layout() {
    let cfg = SimConfig::new(
        generators::path(3).unwrap(),
        NoiseSpec::symmetric(1.5, 3).unwrap(),
        0.1,
        0.3,
        2,
        1,
    )
    .with_stride(1);
    let e = run(&cfg).unwrap();
    let mut buf = Vec::new();
    e.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "time,path,node,y");
    assert_eq!(lines.len(), 1 + 2 * 4 * 3);
    assert_eq!(lines[1], "0,0,1,0");
}
