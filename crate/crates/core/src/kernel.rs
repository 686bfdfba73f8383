//! Spectral kernels of the consensus dynamics and their scale integrals.
//!
//! With L = QΛQᵀ,
//!
//! ```text
//! f_ij(t) = Σ_{k≥2} q_ik q_jk e^{−λ_k t},   g(t) = Σ_{k≥2} e^{−λ_k t},
//! G_α = ∫₀^∞ g^α,                          σ_ij^α = (1/α) ∫₀^∞ |f_ij|^α.
//! ```
//!
//! Pair kernels are assembled from eigenspace projectors rather than single
//! eigenvector columns, so repeated eigenvalues give basis-independent
//! coefficients and exact cancellations come out as exact zeros.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::graph::{Graph, Spectrum};
use crate::linalg::Matrix;
use crate::quadrature::{integrate_semi_infinite, integrate_with_breaks, Integral, QuadOptions};
use crate::special::gamma;
use crate::stable::check_alpha;

/// Projector entries below this are rounding noise and dropped.
const COEF_EPS: f64 = 1e-12;

/// Exponential mixture t ↦ Σ c_k e^{−r_k t} with positive rates, sorted by
/// rate, zero coefficients removed.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpSum {
    rates: Vec<f64>,
    coefs: Vec<f64>,
}

impl ExpSum {
    pub fn new(terms: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut terms: Vec<(f64, f64)> = terms.into_iter().filter(|&(_, c)| c != 0.0).collect();
        terms.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!(terms.iter().all(|&(r, _)| r > 0.0), "rates must be positive");
        Self {
            rates: terms.iter().map(|t| t.0).collect(),
            coefs: terms.iter().map(|t| t.1).collect(),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.rates
            .iter()
            .zip(&self.coefs)
            .map(|(r, c)| c * (-r * t).exp())
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.rates.iter().copied().zip(self.coefs.iter().copied())
    }

    /// Σ|c_k|, a bound on |f(t)| e^{r_min t}.
    pub fn abs_coef_sum(&self) -> f64 {
        self.coefs.iter().map(|c| c.abs()).sum()
    }

    pub fn slowest_rate(&self) -> Option<f64> {
        self.rates.first().copied()
    }

    /// Time after which the slowest mode dominates all others, so the sign
    /// of f is fixed.
    fn dominance_time(&self) -> f64 {
        if self.rates.len() < 2 {
            return 0.0;
        }
        let lead = self.coefs[0].abs();
        let rest: f64 = self.coefs[1..].iter().map(|c| c.abs()).sum();
        let gap = self.rates[1] - self.rates[0];
        let t = (rest / lead).ln() / gap;
        t.clamp(0.0, 1e4 / self.rates[0])
    }

    /// Sign changes on (0, ∞), located on a mixed uniform/geometric grid and
    /// refined by bisection.
    pub fn sign_changes(&self) -> Vec<f64> {
        if self.rates.len() < 2 {
            return Vec::new();
        }
        let t_end = self.dominance_time();
        if t_end <= 0.0 {
            return Vec::new();
        }
        let fastest = *self.rates.last().unwrap();
        let m = 256;
        let mut grid: Vec<f64> = (0..=m).map(|k| t_end * k as f64 / m as f64).collect();
        let start = (1e-3 / fastest).min(t_end * 1e-3);
        let ratio = (t_end / start).powf(1.0 / m as f64);
        grid.extend((0..m).map(|k| start * ratio.powi(k)));
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let mut zeros = Vec::new();
        let mut prev = (grid[0], self.eval(grid[0]));
        for &t in &grid[1..] {
            let v = self.eval(t);
            if v == 0.0 {
                zeros.push(t);
            } else if prev.1 != 0.0 && v.signum() != prev.1.signum() {
                zeros.push(self.bisect(prev.0, t, prev.1));
            }
            prev = (t, v);
        }
        zeros
    }

    fn bisect(&self, mut a: f64, mut b: f64, fa: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            let fm = self.eval(mid);
            if fm == 0.0 {
                return mid;
            }
            if fm.signum() == fa.signum() {
                a = mid;
            } else {
                b = mid;
            }
        }
        0.5 * (a + b)
    }

    /// ∫ h(f(t)) dt over [0, upper] (or [0, ∞) when `upper` is None), with
    /// panels split at the sign changes of f. `tail(T)` must bound the
    /// integral beyond T.
    fn integrate_transform<H, B>(&self, h: H, tail: B, upper: Option<f64>, rel_tol: f64, initial: f64) -> Integral
    where
        H: Fn(f64) -> f64,
        B: Fn(f64) -> f64,
    {
        if self.is_zero() {
            return Integral::ZERO;
        }
        let breaks = self.sign_changes();
        let opts = QuadOptions::relative(rel_tol).with_abs(f64::MIN_POSITIVE);
        let integrand = |t: f64| h(self.eval(t));
        match upper {
            Some(t_max) => {
                let mut pts = vec![0.0];
                pts.extend(breaks.iter().copied().filter(|&b| b < t_max));
                pts.push(t_max);
                integrate_with_breaks(integrand, &pts, &opts)
            }
            None => {
                let cutoff = breaks.last().copied().unwrap_or(0.0).max(initial);
                integrate_semi_infinite(integrand, &breaks, tail, cutoff, &opts)
            }
        }
    }

    /// ∫₀^T |f|^α (T = ∞ when `upper` is None).
    pub fn abs_power_integral(&self, alpha: f64, upper: Option<f64>, rel_tol: f64) -> Integral {
        let Some(r) = self.slowest_rate() else {
            return Integral::ZERO;
        };
        let c = self.abs_coef_sum().powf(alpha);
        self.integrate_transform(
            |v| v.abs().powf(alpha),
            |t| c * (-alpha * r * t).exp() / (alpha * r),
            upper,
            rel_tol,
            28.0 / (alpha * r),
        )
    }

    /// ∫₀^T f^{<α>} with f^{<α>} = |f|^α sign f.
    pub fn signed_power_integral(&self, alpha: f64, upper: Option<f64>, rel_tol: f64) -> Integral {
        let Some(r) = self.slowest_rate() else {
            return Integral::ZERO;
        };
        let c = self.abs_coef_sum().powf(alpha);
        self.integrate_transform(
            |v| v.signum() * v.abs().powf(alpha),
            |t| c * (-alpha * r * t).exp() / (alpha * r),
            upper,
            rel_tol,
            28.0 / (alpha * r),
        )
    }

    /// ∫₀^T f ln|f|, with the integrand taken as 0 where |f| < 1e-30.
    pub fn xlogx_integral(&self, upper: Option<f64>, rel_tol: f64) -> Integral {
        let Some(r) = self.slowest_rate() else {
            return Integral::ZERO;
        };
        let c = self.abs_coef_sum();
        self.integrate_transform(
            xlogx,
            |t| {
                // x|ln x| ≤ (2/e)√x once x ≤ e⁻²
                let x = c * (-r * t).exp();
                if x > (-2f64).exp() {
                    f64::INFINITY
                } else {
                    2.0 / std::f64::consts::E * 2.0 * c.sqrt() * (-0.5 * r * t).exp() / r
                }
            },
            upper,
            rel_tol,
            60.0 / r,
        )
    }
}

pub(crate) fn xlogx(v: f64) -> f64 {
    if v.abs() < 1e-30 {
        0.0
    } else {
        v * v.abs().ln()
    }
}

/// Kernel functions of a validated spectrum.
#[derive(Debug, Clone)]
pub struct SpectralKernel {
    spectrum: Spectrum,
    /// (eigenvalue, projector onto its eigenspace) for each distinct λ_k > 0.
    projectors: Vec<(f64, Matrix)>,
}

impl SpectralKernel {
    pub fn new(spectrum: Spectrum) -> Self {
        let n = spectrum.n();
        let q = spectrum.eigenvectors();
        let projectors = spectrum
            .eigenspaces()
            .into_iter()
            .map(|(lam, ks)| {
                let mut p = Matrix::zeros(n);
                for i in 0..n {
                    for j in 0..n {
                        let v: f64 = ks.iter().map(|&k| q[(i, k)] * q[(j, k)]).sum();
                        p[(i, j)] = if v.abs() < COEF_EPS { 0.0 } else { v };
                    }
                }
                (lam, p)
            })
            .collect();
        Self { spectrum, projectors }
    }

    pub fn from_graph(graph: &Graph) -> Result<Self> {
        Ok(Self::new(graph.spectrum()?))
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn n(&self) -> usize {
        self.spectrum.n()
    }

    /// f_ij as an exponential mixture (0-based node indices).
    pub fn pair(&self, i: usize, j: usize) -> ExpSum {
        ExpSum::new(self.projectors.iter().map(|(lam, p)| (*lam, p[(i, j)])))
    }

    pub fn f(&self, i: usize, j: usize, t: f64) -> f64 {
        self.projectors
            .iter()
            .map(|(lam, p)| p[(i, j)] * (-lam * t).exp())
            .sum()
    }

    pub fn g(&self, t: f64) -> f64 {
        self.spectrum
            .nonzero_eigenvalues()
            .iter()
            .map(|lam| (-lam * t).exp())
            .sum()
    }

    /// g as an exponential mixture, eigenvalue multiplicities as coefficients.
    pub fn g_sum(&self) -> ExpSum {
        rates_sum(self.spectrum.nonzero_eigenvalues())
    }

    /// G_α = ∫₀^∞ g^α.
    pub fn g_alpha(&self, alpha: f64, rel_tol: f64) -> Result<Integral> {
        g_alpha_from_rates(self.spectrum.nonzero_eigenvalues(), alpha, rel_tol)
    }

    /// σ_ij^α = (1/α) ∫₀^∞ |f_ij|^α.
    pub fn sigma_ij_alpha(&self, i: usize, j: usize, alpha: f64, rel_tol: f64) -> Result<Integral> {
        check_alpha(alpha)?;
        Ok(self
            .pair(i, j)
            .abs_power_integral(alpha, None, rel_tol)
            .scaled(1.0 / alpha))
    }

    /// (1/α) ∫₀^t |f_ij|^α over a finite horizon.
    pub fn sigma_ij_alpha_until(&self, i: usize, j: usize, alpha: f64, t: f64, rel_tol: f64) -> Result<Integral> {
        check_alpha(alpha)?;
        if !(t >= 0.0) {
            return invalid("horizon must be non-negative");
        }
        Ok(self
            .pair(i, j)
            .abs_power_integral(alpha, Some(t), rel_tol)
            .scaled(1.0 / alpha))
    }

    /// ∫₀^∞ f_ij^{<α>}.
    pub fn signed_sigma_integral(&self, i: usize, j: usize, alpha: f64, rel_tol: f64) -> Result<Integral> {
        check_alpha(alpha)?;
        Ok(self.pair(i, j).signed_power_integral(alpha, None, rel_tol))
    }

    /// ∫₀^∞ f_ij ln|f_ij|.
    pub fn xlogx_integral(&self, i: usize, j: usize, rel_tol: f64) -> Integral {
        self.pair(i, j).xlogx_integral(None, rel_tol)
    }

    /// All σ_ij^α, computed for j ≥ i in parallel and mirrored, with the
    /// total Σ_ij σ_ij^α and its combined error estimate.
    pub fn sigma_matrix(&self, alpha: f64, rel_tol: f64) -> Result<(Matrix, Integral)> {
        check_alpha(alpha)?;
        let n = self.n();
        let rows: Vec<Vec<Integral>> = (0..n)
            .into_par_iter()
            .map(|i| {
                (i..n)
                    .map(|j| {
                        self.pair(i, j)
                            .abs_power_integral(alpha, None, rel_tol)
                            .scaled(1.0 / alpha)
                    })
                    .collect()
            })
            .collect();
        let mut m = Matrix::zeros(n);
        let mut summary = Integral::ZERO;
        for (i, row) in rows.iter().enumerate() {
            for (off, r) in row.iter().enumerate() {
                let j = i + off;
                m[(i, j)] = r.value;
                m[(j, i)] = r.value;
                let weight = if i == j { 1.0 } else { 2.0 };
                summary = summary.combine(r.scaled(weight));
            }
        }
        // row-major total, independent of how the pairs were scheduled
        summary.value = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|ij| m[ij]).sum();
        Ok((m, summary))
    }
}

fn rates_sum(rates: &[f64]) -> ExpSum {
    ExpSum::new(rates.iter().map(|&r| (r, 1.0)))
}

/// G_α for g(t) = Σ e^{−r_k t} over the given positive rates.
pub fn g_alpha_from_rates(rates: &[f64], alpha: f64, rel_tol: f64) -> Result<Integral> {
    check_alpha(alpha)?;
    if rates.is_empty() || rates.iter().any(|&r| !(r > 0.0)) {
        return invalid("rates must be non-empty and positive");
    }
    Ok(rates_sum(rates).abs_power_integral(alpha, None, rel_tol))
}

/// The coarse bound G_α ≤ (n−1)/λ₂. It is exact only at α = 1 in the sense
/// of g ≤ (n−1)e^{−λ₂t}; for other α it can fail and is reported, not used.
pub fn g_alpha_simple_bound(spectrum: &Spectrum) -> f64 {
    (spectrum.n() - 1) as f64 / spectrum.lambda2()
}

/// G_α ≤ (n−1)^α/(αλ₂), from g(t) ≤ (n−1)e^{−λ₂t}.
pub fn g_alpha_tail_bound(spectrum: &Spectrum, alpha: f64) -> f64 {
    ((spectrum.n() - 1) as f64).powf(alpha) / (alpha * spectrum.lambda2())
}

/// Per-mode values Λ_{α,p}^{(k)} for k = 2..n and their sum Λ_{α,p}.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaTable {
    pub alpha: f64,
    pub p: f64,
    /// Entry m is Λ^{(m+2)}, paired with the (m+2)-th eigenvalue.
    pub per_k: Vec<f64>,
    pub total: f64,
}

impl LambdaTable {
    /// Λ table for nonzero eigenvalues λ₂ ≤ … ≤ λ_n. Differences within
    /// 1e-9·max(1, λ_n) count as zero.
    pub fn from_rates(rates: &[f64], alpha: f64, p: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(p > 0.0) {
            return invalid(format!("exponent p = {p} must be positive"));
        }
        if rates.is_empty() || rates.iter().any(|&r| !(r > 0.0)) || rates.windows(2).any(|w| w[1] < w[0]) {
            return invalid("rates must be positive and sorted ascending");
        }
        let eps = Spectrum::tolerance(*rates.last().unwrap());
        let g = gamma(alpha + 1.0).powf(1.0 / p);
        let e_diff = alpha / p;
        let e_den = (alpha + 1.0) / p;
        let per_k: Vec<f64> = rates
            .iter()
            .enumerate()
            .map(|(k, &lk)| {
                let mut s = 0.0;
                for (m, &lm) in rates.iter().enumerate() {
                    let d = (lk - lm).abs();
                    if m == k || d <= eps {
                        continue;
                    }
                    let den = if m < k { alpha * lm } else { alpha * lk };
                    s += d.powf(e_diff) / den.powf(e_den);
                }
                g * s
            })
            .collect();
        let total = per_k.iter().sum();
        Ok(Self { alpha, p, per_k, total })
    }
}

pub fn lambda_table(spectrum: &Spectrum, alpha: f64, p: f64) -> Result<LambdaTable> {
    LambdaTable::from_rates(spectrum.nonzero_eigenvalues(), alpha, p)
}
