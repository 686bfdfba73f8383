use proptest::prelude::*;
use stable_consensus::graph::generators;
use stable_consensus::kernel::{g_alpha_from_rates, g_alpha_tail_bound, lambda_table, SpectralKernel};

/// Composite Simpson rule with `m` (even) panels on [0, t].
fn simpson(f: impl Fn(f64) -> f64, t: f64, m: usize) -> f64 {
    let h = t / m as f64;
    let mut s = f(0.0) + f(t);
    for k in 1..m {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
    }
    s * h / 3.0
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn kernel_of(g: &stable_consensus::graph::Graph) -> SpectralKernel {
    SpectralKernel::from_graph(g).unwrap()
}

#[test]
fn g_alpha_closed_forms() {
    for n in [3usize, 5, 8] {
        let k = kernel_of(&generators::complete(n, 1.0).unwrap());
        for alpha in [0.3, 1.0, 1.6, 2.0] {
            let v = k.g_alpha(alpha, 1e-10).unwrap().value;
            let exact = ((n - 1) as f64).powf(alpha) / (alpha * n as f64);
            assert!(rel(v, exact) < 1e-9, "n={n} α={alpha}: {v} vs {exact}");
        }
    }
    let g1 = g_alpha_from_rates(&[1.0, 3.0], 1.0, 1e-12).unwrap().value;
    assert!(rel(g1, 4.0 / 3.0) < 1e-11);
    let g2 = g_alpha_from_rates(&[1.0, 3.0], 2.0, 1e-12).unwrap().value;
    assert!(rel(g2, 7.0 / 6.0) < 1e-11);
}

#[test]
fn g_alpha_below_tail_bound() {
    for seed in 0..5 {
        let g = generators::random_connected(9, 0.35, seed).unwrap();
        let k = kernel_of(&g);
        for alpha in [0.2, 0.9, 1.5, 2.0] {
            let v = k.g_alpha(alpha, 1e-9).unwrap().value;
            assert!(v <= g_alpha_tail_bound(k.spectrum(), alpha) * (1.0 + 1e-9));
        }
    }
}

#[test]
fn complete_graph_pair_scales() {
    let k = kernel_of(&generators::complete(3, 1.0).unwrap());
    let off = k.sigma_ij_alpha(0, 1, 1.0, 1e-12).unwrap().value;
    let diag = k.sigma_ij_alpha(2, 2, 1.0, 1e-12).unwrap().value;
    assert!(rel(off, 1.0 / 9.0) < 1e-10);
    assert!(rel(diag, 2.0 / 9.0) < 1e-10);
}

#[test]
fn gaussian_pair_scales_match_termwise_sum() {
    for g in [
        generators::g1(),
        generators::path(4).unwrap(),
        generators::random_connected(7, 0.5, 3).unwrap(),
    ] {
        let k = kernel_of(&g);
        let s = k.spectrum();
        let q = s.eigenvectors();
        let lam = s.eigenvalues();
        let n = g.n();
        for i in 0..n {
            for j in 0..n {
                let mut oracle = 0.0;
                for a in 1..n {
                    for b in 1..n {
                        oracle += q[(i, a)] * q[(j, a)] * q[(i, b)] * q[(j, b)] / (lam[a] + lam[b]);
                    }
                }
                oracle *= 0.5;
                let v = k.sigma_ij_alpha(i, j, 2.0, 1e-11).unwrap().value;
                assert!(
                    (v - oracle).abs() <= 1e-9 * oracle.abs().max(1e-6),
                    "({i},{j}): {v} vs {oracle}"
                );
            }
        }
    }
}

#[test]
fn signed_integral_complete_graph() {
    let n = 5;
    let k = kernel_of(&generators::complete(n, 1.0).unwrap());
    for alpha in [0.5, 1.0, 1.7] {
        let v = k.signed_sigma_integral(1, 3, alpha, 1e-12).unwrap().value;
        let exact = -1.0 / ((n as f64).powf(alpha) * alpha * n as f64);
        assert!(rel(v, exact) < 1e-10);
    }
    // even power on the diagonal: ∫f² = 2σ²
    let g = generators::g1();
    let k = kernel_of(&g);
    let signed = k.signed_sigma_integral(2, 2, 2.0, 1e-12).unwrap().value;
    let sigma = k.sigma_ij_alpha(2, 2, 2.0, 1e-12).unwrap().value;
    assert!(rel(signed, 2.0 * sigma) < 1e-10);
}

#[test]
fn path_integrals_match_dense_oracle() {
    let k = kernel_of(&generators::path(3).unwrap());
    let t_end = 60.0;
    let m = 1_000_000;
    let oracle = simpson(|t| k.f(0, 2, t), t_end, m);
    let v = k.signed_sigma_integral(0, 2, 1.0, 1e-12).unwrap().value;
    assert!((v - oracle).abs() < 1e-6, "{v} vs {oracle}");
    let oracle = simpson(
        |t| {
            let f = k.f(0, 1, t);
            if f.abs() < 1e-300 {
                0.0
            } else {
                f * f.abs().ln()
            }
        },
        t_end,
        m,
    );
    let v = k.xlogx_integral(0, 1, 1e-12).value;
    assert!((v - oracle).abs() < 1e-6, "{v} vs {oracle}");
}

#[test]
fn xlogx_of_vanishing_kernel_is_zero() {
    let zero = stable_consensus::kernel::ExpSum::new(std::iter::empty());
    assert_eq!(zero.xlogx_integral(None, 1e-10).value, 0.0);
}

#[test]
fn rows_of_kernel_sum_to_zero() {
    let g = generators::random_connected(10, 0.3, 9).unwrap();
    let k = kernel_of(&g);
    for i in 0..10 {
        for t in [0.0, 0.1, 1.0, 5.0] {
            let s: f64 = (0..10).map(|j| k.f(i, j, t)).sum();
            assert!(s.abs() < 1e-12, "row {i} t={t}: {s}");
        }
    }
}

#[test]
fn pair_scales_dominated_and_symmetric() {
    let g = generators::random_connected(8, 0.4, 21).unwrap();
    let k = kernel_of(&g);
    for alpha in [0.4, 1.2, 1.9] {
        let big_g = k.g_alpha(alpha, 1e-10).unwrap().value;
        let (m, _) = k.sigma_matrix(alpha, 1e-10).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(m[(i, j)], m[(j, i)]);
                assert_eq!(m[(i, j)], k.sigma_ij_alpha(i, j, alpha, 1e-10).unwrap().value);
                assert!(m[(i, j)] <= big_g / alpha * (1.0 + 1e-9));
            }
        }
    }
}

#[test]
fn lambda_table_vanishes_on_complete_spectrum() {
    let s = generators::complete(6, 2.0).unwrap().spectrum().unwrap();
    for (alpha, p) in [(0.5, 1.0), (1.5, 1.5)] {
        let t = lambda_table(&s, alpha, p).unwrap();
        assert_eq!(t.total, 0.0);
        assert!(t.per_k.iter().all(|&v| v == 0.0));
    }
}

#[test]
fn lambda_table_matches_direct_evaluation() {
    // independent re-evaluation of the spread functional
    let s = generators::g1().spectrum().unwrap();
    let lam = s.nonzero_eigenvalues();
    let eps = 1e-9 * lam.last().unwrap().max(1.0);
    for (alpha, p) in [(0.6, 1.0), (1.4, 1.4), (2.0, 2.0)] {
        let t = lambda_table(&s, alpha, p).unwrap();
        let gam = gamma_oracle(alpha + 1.0).powf(1.0 / p);
        for (k, &lk) in lam.iter().enumerate() {
            let mut below = 0.0;
            let mut above = 0.0;
            for (m, &lm) in lam.iter().enumerate() {
                if m < k && lk - lm > eps {
                    below += (lk - lm).powf(alpha / p) / (alpha * lm).powf((alpha + 1.0) / p);
                }
                if m > k && lm - lk > eps {
                    above += (lm - lk).powf(alpha / p) / (alpha * lk).powf((alpha + 1.0) / p);
                }
            }
            let want = gam * (below + above);
            assert!((t.per_k[k] - want).abs() <= 1e-10 * want.max(1.0));
        }
    }
}

/// Γ(x) from Stirling's series at x + 12, brought back by the recurrence.
fn gamma_oracle(x: f64) -> f64 {
    let z = x + 12.0;
    let ln = (z - 0.5) * z.ln() - z + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * z)
        - 1.0 / (360.0 * z.powi(3))
        + 1.0 / (1260.0 * z.powi(5))
        - 1.0 / (1680.0 * z.powi(7));
    let shift: f64 = (0..12).map(|k| x + k as f64).product();
    ln.exp() / shift
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn kernel_dominated_by_g(seed in 0u64..1000, n in 3usize..9, t in 0.0f64..6.0) {
        let g = generators::random_connected(n, 0.45, seed).unwrap();
        let k = kernel_of(&g);
        let gt = k.g(t);
        for i in 0..n {
            for j in 0..n {
                prop_assert!(k.f(i, j, t).abs() <= gt + 1e-12);
            }
        }
    }
}
