//! Steady-state laws of the centered outputs and the cumulative scale
//! Σ_α = Σ_l σ_l^α.
//!
//! Output l at stationarity is S_α(σ_l, β_l, μ_l) with
//!
//! ```text
//! σ_l^α = Σ_j σ_lj^α,
//! β_l   = Σ_j β_j (1/α) ∫ f_lj^{<α>} / σ_l^α,
//! μ_l   = −(2/π) Σ_j β_j ∫ f_lj ln|f_lj|      (α = 1; zero otherwise).
//! ```

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::format::g9;
use crate::graph::Spectrum;
use crate::kernel::SpectralKernel;
use crate::quadrature::Integral;
use crate::stable::{check_alpha, check_beta, moment_constant, StableParams};

/// Default relative tolerance of every scale integral.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Spread (λ_n − λ₂)/λ_n at or below which a spectrum counts as complete.
pub const COMPLETE_SPECTRUM_TOL: f64 = 1e-9;

/// Distance from α = 2 within which the Gaussian closed form is used.
pub const ALPHA2_TOL: f64 = 1e-12;

/// Shared stability index and per-node skewness of the driving noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    alpha: f64,
    betas: Vec<f64>,
}

impl NoiseSpec {
    pub fn new(alpha: f64, betas: Vec<f64>) -> Result<Self> {
        check_alpha(alpha)?;
        for &b in &betas {
            check_beta(b)?;
        }
        if betas.is_empty() {
            return invalid("noise needs at least one node");
        }
        Ok(Self { alpha, betas })
    }

    pub fn symmetric(alpha: f64, n: usize) -> Result<Self> {
        Self::new(alpha, vec![0.0; n])
    }

    pub fn uniform(alpha: f64, beta: f64, n: usize) -> Result<Self> {
        Self::new(alpha, vec![beta; n])
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn n(&self) -> usize {
        self.betas.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.betas.iter().all(|&b| b == 0.0)
    }
}

/// How a scale was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Quadrature,
    ClosedFormAlpha2,
    ClosedFormComplete,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Quadrature => "quadrature",
            Method::ClosedFormAlpha2 => "closed_form_alpha2",
            Method::ClosedFormComplete => "closed_form_complete",
        })
    }
}

/// Law parameters of one output component; `node` is 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeParams {
    pub node: usize,
    pub sigma_alpha: f64,
    pub beta: f64,
    pub mu: f64,
}

impl NodeParams {
    pub fn law(&self, alpha: f64) -> Result<StableParams> {
        StableParams::new(
            alpha,
            self.sigma_alpha.powf(1.0 / alpha),
            self.beta.clamp(-1.0, 1.0),
            self.mu,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluctuationReport {
    pub alpha: f64,
    pub nodes: Vec<NodeParams>,
    pub sigma_alpha_total: f64,
    pub method: Method,
    pub tolerance: f64,
}

impl FluctuationReport {
    /// `node,sigma_alpha,beta,mu` rows (1-based nodes) and a closing
    /// `total` row carrying Σ_α.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("node,sigma_alpha,beta,mu\n");
        for p in &self.nodes {
            out.push_str(&format!(
                "{},{},{},{}\n",
                p.node + 1,
                g9(p.sigma_alpha),
                g9(p.beta),
                g9(p.mu)
            ));
        }
        out.push_str(&format!("total,{},,\n", g9(self.sigma_alpha_total)));
        out
    }
}

fn numerical(what: &str, r: &Integral) -> Error {
    Error::Numerical(format!(
        "{what}: quadrature did not converge (estimate {:e}, error {:e})",
        r.value, r.error
    ))
}

fn checked(what: &str, r: Integral) -> Result<f64> {
    if r.converged && r.value.is_finite() {
        Ok(r.value)
    } else {
        Err(numerical(what, &r))
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol < 1.0) {
        return invalid(format!("tolerance {tol} must lie in (0, 1)"));
    }
    Ok(())
}

fn pick_method(spectrum: &Spectrum, alpha: f64) -> Method {
    if spectrum.is_complete_spectrum(COMPLETE_SPECTRUM_TOL) {
        Method::ClosedFormComplete
    } else if (alpha - 2.0).abs() <= ALPHA2_TOL {
        Method::ClosedFormAlpha2
    } else {
        Method::Quadrature
    }
}

/// Mean nonzero eigenvalue, the λ of a complete spectrum.
fn complete_lambda(spectrum: &Spectrum) -> f64 {
    let nz = spectrum.nonzero_eigenvalues();
    nz.iter().sum::<f64>() / nz.len() as f64
}

/// Σ_α = ((n−1)(1 + (n−1)^{α−1}))/(α² n^{α−1} λ) for a spectrum with
/// λ₂ = … = λ_n = λ.
pub fn sigma_alpha_complete(n: usize, lambda: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if n < 2 {
        return invalid("need at least two nodes");
    }
    if !(lambda > 0.0) {
        return invalid("λ must be positive");
    }
    let m = (n - 1) as f64;
    Ok(m * (1.0 + m.powf(alpha - 1.0)) / (alpha * alpha * (n as f64).powf(alpha - 1.0) * lambda))
}

/// Σ₂ = (1/2) Σ_{k≥2} 1/(2λ_k).
pub fn sigma_alpha_gaussian(spectrum: &Spectrum) -> f64 {
    0.5 * spectrum
        .nonzero_eigenvalues()
        .iter()
        .map(|l| 1.0 / (2.0 * l))
        .sum::<f64>()
}

/// Σ_α by pairwise quadrature, regardless of closed forms.
pub fn sigma_alpha_quadrature(kernel: &SpectralKernel, alpha: f64, tol: f64) -> Result<f64> {
    check_tol(tol)?;
    let (_, total) = kernel.sigma_matrix(alpha, 0.1 * tol)?;
    checked("Σ_α", total)
}

/// Σ_α with the method used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CumulativeScale {
    pub alpha: f64,
    pub value: f64,
    pub method: Method,
}

/// Σ_α, using a closed form when the spectrum is complete or α = 2.
pub fn sigma_alpha_total(kernel: &SpectralKernel, alpha: f64, tol: f64) -> Result<CumulativeScale> {
    check_alpha(alpha)?;
    let spectrum = kernel.spectrum();
    let method = pick_method(spectrum, alpha);
    let value = match method {
        Method::ClosedFormComplete => sigma_alpha_complete(spectrum.n(), complete_lambda(spectrum), alpha)?,
        Method::ClosedFormAlpha2 => sigma_alpha_gaussian(spectrum),
        Method::Quadrature => sigma_alpha_quadrature(kernel, alpha, tol)?,
    };
    Ok(CumulativeScale { alpha, value, method })
}

fn check_noise(kernel: &SpectralKernel, noise: &NoiseSpec) -> Result<()> {
    if noise.n() != kernel.n() {
        return invalid(format!(
            "noise has {} skewness values for {} nodes",
            noise.n(),
            kernel.n()
        ));
    }
    Ok(())
}

/// Per-node steady-state parameters.
pub fn steady_state_params(kernel: &SpectralKernel, noise: &NoiseSpec, tol: f64) -> Result<FluctuationReport> {
    check_noise(kernel, noise)?;
    check_tol(tol)?;
    let alpha = noise.alpha();
    let spectrum = kernel.spectrum();
    let method = pick_method(spectrum, alpha);
    let nodes = match method {
        Method::ClosedFormComplete => complete_params(spectrum, noise, None)?,
        _ => quadrature_params(kernel, noise, method, None, tol)?,
    };
    let sigma_alpha_total = nodes.iter().map(|p| p.sigma_alpha).sum();
    Ok(FluctuationReport {
        alpha,
        nodes,
        sigma_alpha_total,
        method,
        tolerance: tol,
    })
}

/// Parameters of the outputs at a finite time t from a zero initial state,
/// by quadrature over [0, t].
pub fn transient_params(kernel: &SpectralKernel, noise: &NoiseSpec, t: f64, tol: f64) -> Result<Vec<NodeParams>> {
    check_noise(kernel, noise)?;
    check_tol(tol)?;
    if !(t >= 0.0 && t.is_finite()) {
        return invalid("time must be finite and non-negative");
    }
    quadrature_params(kernel, noise, Method::Quadrature, Some(t), tol)
}

fn quadrature_params(
    kernel: &SpectralKernel,
    noise: &NoiseSpec,
    method: Method,
    upper: Option<f64>,
    tol: f64,
) -> Result<Vec<NodeParams>> {
    use rayon::prelude::*;

    let alpha = noise.alpha();
    let n = kernel.n();
    let qtol = 0.1 * tol;
    let alpha_one = (alpha - 1.0).abs() < 1e-12;
    let gaussian_rows = method == Method::ClosedFormAlpha2;
    let q = kernel.spectrum().eigenvectors();
    let lambdas = kernel.spectrum().eigenvalues();
    (0..n)
        .into_par_iter()
        .map(|l| {
            let mut sigma_alpha = 0.0;
            let mut skew_num = 0.0;
            let mut mu_sum = 0.0;
            for j in 0..n {
                let f = kernel.pair(l, j);
                if !gaussian_rows {
                    let r = f.abs_power_integral(alpha, upper, qtol);
                    sigma_alpha += checked("σ_lj^α", r)? / alpha;
                }
                let beta_j = noise.betas()[j];
                if beta_j != 0.0 {
                    let r = f.signed_power_integral(alpha, upper, qtol);
                    skew_num += beta_j * checked("skewness integral", r)? / alpha;
                    if alpha_one {
                        mu_sum += beta_j * checked("f ln|f| integral", f.xlogx_integral(upper, qtol))?;
                    }
                }
            }
            if gaussian_rows {
                // (1/2)∫ Σ_j f_lj² = (1/2) Σ_k q_lk²/(2λ_k)
                sigma_alpha = 0.5 * (1..n).map(|k| q[(l, k)] * q[(l, k)] / (2.0 * lambdas[k])).sum::<f64>();
            }
            let beta = if sigma_alpha > 0.0 { skew_num / sigma_alpha } else { 0.0 };
            let mu = if alpha_one { -(2.0 / PI) * mu_sum } else { 0.0 };
            Ok(NodeParams {
                node: l,
                sigma_alpha,
                beta,
                mu,
            })
        })
        .collect()
}

/// Closed-form parameters on a complete spectrum, at time `t` (steady state
/// when `None`). With c_ll = (n−1)/n and c_lj = −1/n,
///
/// ```text
/// σ_l^α(t) = ((n−1) + (n−1)^α)(1 − e^{−αλt}) / (n^α α² λ),
/// β_l(t)   = (β_l (n−1)^α − Σ_{j≠l} β_j) / ((n−1) + (n−1)^α),   t > 0,
/// μ_l(t)   = (2/π) Σ_j β_j c_lj [(1 − ln|c_lj|)(1 − e^{−λt})/λ − t e^{−λt}]   (α = 1).
/// ```
fn complete_params(spectrum: &Spectrum, noise: &NoiseSpec, t: Option<f64>) -> Result<Vec<NodeParams>> {
    let alpha = noise.alpha();
    let n = spectrum.n();
    let nf = n as f64;
    let m = nf - 1.0;
    let lambda = complete_lambda(spectrum);
    let decay = |rate: f64| t.map_or(1.0, |t| 1.0 - (-rate * t).exp());
    let sigma_alpha = (m + m.powf(alpha)) * decay(alpha * lambda) / (nf.powf(alpha) * alpha * alpha * lambda);
    let beta_sum: f64 = noise.betas().iter().sum();
    let alpha_one = (alpha - 1.0).abs() < 1e-12;
    let mu_factor = |c: f64| {
        let steady = (1.0 - c.abs().ln()) * decay(lambda) / lambda;
        let trailing = t.map_or(0.0, |t| t * (-lambda * t).exp());
        c * (steady - trailing)
    };
    Ok((0..n)
        .map(|l| {
            let bl = noise.betas()[l];
            let beta = if sigma_alpha > 0.0 {
                (bl * m.powf(alpha) - (beta_sum - bl)) / (m + m.powf(alpha))
            } else {
                0.0
            };
            let mu = if alpha_one {
                (2.0 / PI) * (bl * mu_factor(m / nf) + (beta_sum - bl) * mu_factor(-1.0 / nf))
            } else {
                0.0
            };
            NodeParams {
                node: l,
                sigma_alpha,
                beta,
                mu,
            }
        })
        .collect())
}

/// Closed-form output parameters at time t on a complete spectrum.
pub fn transient_params_complete(spectrum: &Spectrum, noise: &NoiseSpec, t: f64) -> Result<Vec<NodeParams>> {
    if noise.n() != spectrum.n() {
        return invalid(format!(
            "noise has {} skewness values for {} nodes",
            noise.n(),
            spectrum.n()
        ));
    }
    if !spectrum.is_complete_spectrum(COMPLETE_SPECTRUM_TOL) {
        return invalid("closed-form transients need λ₂ = λ_n");
    }
    if !(t >= 0.0) {
        return invalid("time must be non-negative");
    }
    complete_params(spectrum, noise, if t.is_finite() { Some(t) } else { None })
}

/// Σ_α over an ascending α grid, with the indices k where Σ at grid[k+1]
/// fails to drop below Σ at grid[k] by more than 2·tol relative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityProfile {
    pub points: Vec<CumulativeScale>,
    pub violations: Vec<usize>,
}

impl MonotonicityProfile {
    pub fn is_strictly_decreasing(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn monotonicity_profile(kernel: &SpectralKernel, alpha_grid: &[f64], tol: f64) -> Result<MonotonicityProfile> {
    if alpha_grid.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("α grid must be strictly ascending");
    }
    let points = alpha_grid
        .iter()
        .map(|&a| sigma_alpha_total(kernel, a, tol))
        .collect::<Result<Vec<_>>>()?;
    let violations = points
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1].value - w[0].value >= -2.0 * tol * w[0].value)
        .map(|(k, _)| k)
        .collect();
    Ok(MonotonicityProfile { points, violations })
}

/// E|y_l|^p per node and the two-sided bound on E‖y‖_p^p.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PMoment {
    pub p: f64,
    /// c(α, β, p) used for every node.
    pub constant: f64,
    pub per_node: Vec<f64>,
    pub total: f64,
    pub lower: f64,
    pub upper: f64,
}

/// p-th absolute moments of the stationary outputs,
/// E|y_l|^p = c^p σ_l^p, with c^p Σ_α^{p/α} ≤ E‖y‖_p^p ≤ n^{1−p/α} c^p Σ_α^{p/α}.
pub fn p_moment(report: &FluctuationReport, p: f64, beta_for_c: f64) -> Result<PMoment> {
    let alpha = report.alpha;
    let c = moment_constant(alpha, beta_for_c, p)?;
    let cp = c.powf(p);
    let per_node: Vec<f64> = report
        .nodes
        .iter()
        .map(|node| cp * node.sigma_alpha.powf(p / alpha))
        .collect();
    let total = per_node.iter().sum();
    let base = cp * report.sigma_alpha_total.powf(p / alpha);
    let n = report.nodes.len() as f64;
    Ok(PMoment {
        p,
        constant: c,
        per_node,
        total,
        lower: base,
        upper: n.powf(1.0 - p / alpha) * base,
    })
}
