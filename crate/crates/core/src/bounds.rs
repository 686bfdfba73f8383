//! Spectral upper bounds on the cumulative scale Σ_α.
//!
//! Three families are computed:
//!
//! * spectral bounds built from eigenvector α-norms, the spread
//!   functional Λ and G_α, with one formula for α ∈ (0, 1] and the minimum
//!   of two for α ∈ [1, 2];
//! * claim-level bounds, the same estimates applied per pair (i, j) and
//!   summed (for α ∈ [1, 2] the better option is taken per pair);
//! * a bound near the Gaussian case, for α ∈ (1, 2], obtained by
//!   integrating the derivative of |f|^w in w from α to 2.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::fluctuation::{sigma_alpha_total, CumulativeScale};
use crate::format::g9;
use crate::graph::Spectrum;
use crate::kernel::{g_alpha_from_rates, lambda_table, LambdaTable, SpectralKernel};
use crate::linalg::Matrix;
use crate::quadrature::{integrate_semi_infinite, Integral, QuadOptions};
use crate::special::gauss_legendre;
use crate::stable::check_alpha;

fn checked(what: &str, r: Integral) -> Result<f64> {
    if r.converged && r.value.is_finite() {
        Ok(r.value)
    } else {
        Err(crate::Error::Numerical(format!("{what}: quadrature did not converge")))
    }
}

/// ‖q_k‖_α for every eigenvector k ≥ 2 (entry 0 is k = 2).
pub fn eigenvector_alpha_norms(spectrum: &Spectrum, alpha: f64) -> Vec<f64> {
    let q = spectrum.eigenvectors();
    let n = spectrum.n();
    (1..n)
        .map(|k| {
            (0..n)
                .map(|i| q[(i, k)].abs().powf(alpha))
                .sum::<f64>()
                .powf(1.0 / alpha)
        })
        .collect()
}

/// Σ_k ‖q_k‖_α^{2α} Λ^{(k)}.
fn weighted_spread(spectrum: &Spectrum, alpha: f64, table: &LambdaTable) -> f64 {
    eigenvector_alpha_norms(spectrum, alpha)
        .iter()
        .zip(&table.per_k)
        .map(|(norm, lk)| norm.powf(2.0 * alpha) * lk)
        .sum()
}

/// Spectral bound for α ∈ (0, 1]:
/// c₁ Σ_k ‖q_k‖_α^{2α} Λ_{α,1}^{(k)} + c₂ G_α.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowAlphaBound {
    pub c1: f64,
    pub c2: f64,
    pub spread: f64,
    pub g_alpha: f64,
    pub value: f64,
}

/// Spectral bound for α ∈ [1, 2]: the smaller of
/// d₁ Λ^{α−1} S + d₂ G_α and d₃ Λ^{α−1} S + d₄ G_α, with Λ = Λ_{α,α} and
/// S = Σ_k ‖q_k‖_α^{2α} Λ_{α,α}^{(k)}.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HighAlphaBound {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
    pub lambda_total: f64,
    pub spread: f64,
    pub g_alpha: f64,
    pub option1: f64,
    pub option2: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremBound {
    pub alpha: f64,
    pub low: Option<LowAlphaBound>,
    pub high: Option<HighAlphaBound>,
    /// Smallest applicable branch (both apply at α = 1).
    pub value: f64,
}

pub fn bound_theorem1(spectrum: &Spectrum, alpha: f64, tol: f64) -> Result<TheoremBound> {
    check_alpha(alpha)?;
    let n = spectrum.n() as f64;
    let m = n - 1.0;
    let g_alpha = checked("G_α", g_alpha_from_rates(spectrum.nonzero_eigenvalues(), alpha, tol)?)?;
    let low = if alpha <= 1.0 {
        let table = lambda_table(spectrum, alpha, 1.0)?;
        let spread = weighted_spread(spectrum, alpha, &table);
        let c1 = 1.0 / (alpha * m.powf(alpha));
        let c2 = (1.0 + m.powf(1.0 - alpha)) / (alpha * n.powf(alpha - 1.0));
        Some(LowAlphaBound {
            c1,
            c2,
            spread,
            g_alpha,
            value: c1 * spread + c2 * g_alpha,
        })
    } else {
        None
    };
    let high = if alpha >= 1.0 {
        let table = lambda_table(spectrum, alpha, alpha)?;
        let spread = weighted_spread(spectrum, alpha, &table);
        let lam_pow = table.total.powf(alpha - 1.0);
        let d1 = 2f64.powf(alpha - 1.0) / (alpha * m.powf(alpha));
        let d2 = 2f64.powf(alpha - 1.0) * n.powf(1.0 - alpha) / alpha * (1.0 + m.powf(1.0 - alpha));
        let d3 = 1.0 / (alpha * m.powf(alpha));
        let d4 = (1.0 + m.powf(1.0 - alpha)) * (1.0 + alpha * lam_pow) / (n.powf(alpha - 1.0) * m.powf(-alpha));
        let option1 = d1 * lam_pow * spread + d2 * g_alpha;
        let option2 = d3 * lam_pow * spread + d4 * g_alpha;
        Some(HighAlphaBound {
            d1,
            d2,
            d3,
            d4,
            lambda_total: table.total,
            spread,
            g_alpha,
            option1,
            option2,
            value: option1.min(option2),
        })
    } else {
        None
    };
    let value = match (&low, &high) {
        (Some(l), Some(h)) => l.value.min(h.value),
        (Some(l), None) => l.value,
        (None, Some(h)) => h.value,
        (None, None) => unreachable!("α lies in at least one branch"),
    };
    Ok(TheoremBound {
        alpha,
        low,
        high,
        value,
    })
}

/// Per-pair bounds on σ_ij^α and their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct ClaimsBound {
    pub alpha: f64,
    pub per_pair: Matrix,
    pub value: f64,
}

/// Claim-level bound: per-pair estimates summed over all (i, j).
///
/// For α ≤ 1:
/// σ_ij^α ≤ c₁ Σ_k |q_ik|^α |q_jk|^α Λ_{α,1}^{(k)} + c̄ G_α with
/// c̄ = 1/(n^α α (n−1)^α) off the diagonal and 1/(α n^α) on it.
/// For α ≥ 1 the smaller of
/// 2^{α−1}/(α(n−1)^α) [Λ^{α−1} s_ij + t_ij G_α] and
/// 1/(α(n−1)^α) [Λ^{α−1} s_ij + t_ij G_α (1 + αΛ^{α−1})],
/// s_ij = Σ_k |q_ik|^α |q_jk|^α Λ_{α,α}^{(k)}, t_ij = 1/n^α (i ≠ j) or
/// (n−1)^α/n^α (i = j). At α = 1 both families apply and the smaller wins.
pub fn bound_claims(kernel: &SpectralKernel, alpha: f64, tol: f64) -> Result<ClaimsBound> {
    check_alpha(alpha)?;
    let spectrum = kernel.spectrum();
    let nn = spectrum.n();
    let n = nn as f64;
    let m = n - 1.0;
    let q = spectrum.eigenvectors();
    let g_alpha = checked("G_α", kernel.g_alpha(alpha, tol)?)?;
    let weighted = |table: &LambdaTable, i: usize, j: usize| -> f64 {
        (1..nn)
            .map(|k| (q[(i, k)].abs() * q[(j, k)].abs()).powf(alpha) * table.per_k[k - 1])
            .sum()
    };
    let low = if alpha <= 1.0 {
        let table = lambda_table(spectrum, alpha, 1.0)?;
        let c1 = 1.0 / (alpha * m.powf(alpha));
        let off = 1.0 / (n.powf(alpha) * alpha * m.powf(alpha));
        let diag = 1.0 / (alpha * n.powf(alpha));
        Some(move |i: usize, j: usize| {
            let c = if i == j { diag } else { off };
            c1 * weighted(&table, i, j) + c * g_alpha
        })
    } else {
        None
    };
    let high = if alpha >= 1.0 {
        let table = lambda_table(spectrum, alpha, alpha)?;
        let lam_pow = table.total.powf(alpha - 1.0);
        let k1 = 2f64.powf(alpha - 1.0) / (alpha * m.powf(alpha));
        let k2 = 1.0 / (alpha * m.powf(alpha));
        Some(move |i: usize, j: usize| {
            let s = lam_pow * weighted(&table, i, j);
            let t = if i == j {
                (m / n).powf(alpha)
            } else {
                1.0 / n.powf(alpha)
            };
            let o1 = k1 * (s + t * g_alpha);
            let o2 = k2 * (s + t * g_alpha * (1.0 + alpha * lam_pow));
            o1.min(o2)
        })
    } else {
        None
    };
    let mut per_pair = Matrix::zeros(nn);
    for i in 0..nn {
        for j in 0..nn {
            let a = low.as_ref().map(|f| f(i, j));
            let b = high.as_ref().map(|f| f(i, j));
            per_pair[(i, j)] = match (a, b) {
                (Some(a), Some(b)) => a.min(b),
                (Some(a), None) => a,
                (None, Some(b)) => b,
                (None, None) => unreachable!("α lies in at least one branch"),
            };
        }
    }
    let value = (0..nn)
        .flat_map(|i| (0..nn).map(move |j| (i, j)))
        .map(|ij| per_pair[ij])
        .sum();
    Ok(ClaimsBound { alpha, per_pair, value })
}

/// Bound near the Gaussian case, α ∈ (1, 2]:
///
/// ```text
/// (1/α) Σ_k 1/(2λ_k) + (1/α) ∫_α^2 ∫₀^∞ n^{2−w} g(s)^w |ln g(s)| ds dw.
/// ```
///
/// The outer integral uses 21-point Gauss–Legendre; the inner one is split
/// where g = 1. At α = 2 the second term is empty.
pub fn bound_near2(spectrum: &Spectrum, alpha: f64, tol: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if alpha <= 1.0 {
        return invalid(format!("the near-Gaussian bound needs α > 1, got {alpha}"));
    }
    let first = spectrum
        .nonzero_eigenvalues()
        .iter()
        .map(|l| 1.0 / (2.0 * l))
        .sum::<f64>()
        / alpha;
    if alpha == 2.0 {
        return Ok(first);
    }
    let n = spectrum.n() as f64;
    let lam2 = spectrum.lambda2();
    let rates = spectrum.nonzero_eigenvalues();
    let g = |s: f64| rates.iter().map(|l| (-l * s).exp()).sum::<f64>();
    // g(0) = n − 1 and g(s) ≤ (n−1)e^{−λ₂s}, so g crosses 1 before ln(n−1)/λ₂
    let crossing = if n > 2.0 {
        let (mut a, mut b) = (0.0, (n - 1.0).ln() / lam2);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if g(mid) > 1.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        vec![0.5 * (a + b)]
    } else {
        Vec::new()
    };
    let settle = (n - 1.0).max(1.0).ln() / lam2;
    let inner = |w: f64| -> Result<f64> {
        let integrand = |s: f64| {
            let v = g(s);
            if v <= 0.0 {
                0.0
            } else {
                v.powf(w) * v.ln().abs()
            }
        };
        // x^w |ln x| ≤ (2/(e w)) x^{w/2} on (0, 1]
        let tail = |t: f64| {
            if t < settle {
                f64::INFINITY
            } else {
                let c = 2.0 / (std::f64::consts::E * w);
                c * (n - 1.0).powf(0.5 * w) * (-0.5 * w * lam2 * t).exp() * 2.0 / (w * lam2)
            }
        };
        let opts = QuadOptions::relative(0.1 * tol).with_abs(f64::MIN_POSITIVE);
        let r = integrate_semi_infinite(integrand, &crossing, tail, settle + 30.0 / (w * lam2), &opts);
        Ok(n.powf(2.0 - w) * checked("near-Gaussian inner integral", r)?)
    };
    let (nodes, weights) = gauss_legendre(21);
    let half = 0.5 * (2.0 - alpha);
    let mid = 0.5 * (2.0 + alpha);
    let mut outer = 0.0;
    for (x, wt) in nodes.iter().zip(&weights) {
        outer += wt * inner(mid + half * x)?;
    }
    Ok(first + half * outer / alpha)
}

/// Exact Σ_α next to every bound, with ratios bound/exact and soundness
/// flags (a bound below exact − 10·tol·exact is unsound).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub alpha: f64,
    pub exact: CumulativeScale,
    pub theorem: TheoremBound,
    pub claims: f64,
    pub near2: Option<f64>,
    pub theorem_ratio: f64,
    pub claims_ratio: f64,
    pub near2_ratio: Option<f64>,
    pub theorem_sound: bool,
    pub claims_sound: bool,
    pub near2_sound: Option<bool>,
}

impl BoundReport {
    pub fn csv_header() -> &'static str {
        "alpha,exact,thm_bound,claims_bound,near2_bound,thm_ratio,claims_ratio,near2_ratio"
    }

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(g9).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{}",
            g9(self.alpha),
            g9(self.exact.value),
            g9(self.theorem.value),
            g9(self.claims),
            opt(self.near2),
            g9(self.theorem_ratio),
            g9(self.claims_ratio),
            opt(self.near2_ratio)
        )
    }

    pub fn all_sound(&self) -> bool {
        self.theorem_sound && self.claims_sound && self.near2_sound.unwrap_or(true)
    }
}

pub fn bound_report(kernel: &SpectralKernel, alpha: f64, tol: f64) -> Result<BoundReport> {
    let exact = sigma_alpha_total(kernel, alpha, tol)?;
    let theorem = bound_theorem1(kernel.spectrum(), alpha, tol)?;
    let claims = bound_claims(kernel, alpha, tol)?.value;
    let near2 = if alpha > 1.0 {
        Some(bound_near2(kernel.spectrum(), alpha, tol)?)
    } else {
        None
    };
    let floor = exact.value * (1.0 - 10.0 * tol);
    Ok(BoundReport {
        alpha,
        theorem_ratio: theorem.value / exact.value,
        claims_ratio: claims / exact.value,
        near2_ratio: near2.map(|b| b / exact.value),
        theorem_sound: theorem.value >= floor,
        claims_sound: claims >= floor,
        near2_sound: near2.map(|b| b >= floor),
        exact,
        theorem,
        claims,
        near2,
    })
}

/// One [`BoundReport`] per α.
pub fn tightness_report(kernel: &SpectralKernel, alpha_grid: &[f64], tol: f64) -> Result<Vec<BoundReport>> {
    alpha_grid.iter().map(|&a| bound_report(kernel, a, tol)).collect()
}
