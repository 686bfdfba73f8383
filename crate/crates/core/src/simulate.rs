//! Monte Carlo integration of dx = −Lx dt + dz with α-stable driving
//! noise, and empirical estimators for the stationary output laws.
//!
//! The driving Lévy motions are normalized so that the increment over a
//! step dt is S_α((dt/α)^{1/α}, β_i, 0); with this convention the
//! stationary outputs have exactly the scales computed by
//! [`crate::fluctuation`].

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fluctuation::NoiseSpec;
use crate::format::g9;
use crate::graph::{Graph, Spectrum};
use crate::linalg::Matrix;
use crate::stable::{check_alpha, moment_constant, StableParams, StableSampler};

/// Fewest samples accepted by the characteristic-function estimator.
pub const MIN_ESTIMATION_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// x ← x − dt·Lx + Δz
    Euler,
    /// x ← e^{−L dt}x + Δz
    SemiExact,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Euler => "euler",
            Scheme::SemiExact => "semi-exact",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(Scheme::Euler),
            "semi-exact" => Ok(Scheme::SemiExact),
            other => invalid(format!("unknown scheme '{other}' (expected euler or semi-exact)")),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimConfig {
    #[serde(skip)]
    pub graph: Graph,
    pub noise: NoiseSpec,
    pub dt: f64,
    pub horizon: f64,
    pub paths: usize,
    pub seed: u64,
    /// Initial state; `None` starts every path at the origin.
    pub x0: Option<Vec<f64>>,
    /// Record every `stride` steps; `None` records the terminal state only.
    pub record_stride: Option<usize>,
    pub scheme: Scheme,
    /// Multiplier on every noise increment; 0 switches the noise off.
    pub noise_scale: f64,
}

impl SimConfig {
    pub fn new(graph: Graph, noise: NoiseSpec, dt: f64, horizon: f64, paths: usize, seed: u64) -> Self {
        Self {
            graph,
            noise,
            dt,
            horizon,
            paths,
            seed,
            x0: None,
            record_stride: None,
            scheme: Scheme::Euler,
            noise_scale: 1.0,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = Some(stride);
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_x0(mut self, x0: Vec<f64>) -> Self {
        self.x0 = Some(x0);
        self
    }

    pub fn with_noise_scale(mut self, scale: f64) -> Self {
        self.noise_scale = scale;
        self
    }

    /// Number of steps, horizon / dt rounded to the nearest integer.
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round().max(1.0) as usize
    }

    fn validate(&self, spectrum: &Spectrum) -> Result<()> {
        let n = self.graph.n();
        if self.noise.n() != n {
            return invalid(format!("noise has {} nodes, graph has {n}", self.noise.n()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return invalid(format!("dt must be positive, got {}", self.dt));
        }
        let limit = 2.0 / spectrum.lambda_max();
        if self.dt >= limit {
            return invalid(format!(
                "dt = {} violates the stability limit dt < 2/λ_n = {limit}",
                self.dt
            ));
        }
        if !(self.horizon >= self.dt) {
            return invalid(format!("horizon {} is shorter than dt {}", self.horizon, self.dt));
        }
        if self.paths == 0 {
            return invalid("need at least one path");
        }
        if self.record_stride == Some(0) {
            return invalid("record stride must be at least 1");
        }
        if let Some(x0) = &self.x0 {
            if x0.len() != n {
                return invalid(format!("x0 has {} entries, graph has {n}", x0.len()));
            }
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return invalid(format!("noise scale must be non-negative, got {}", self.noise_scale));
        }
        Ok(())
    }
}

/// Recorded centered outputs of every path.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryEnsemble {
    pub alpha: f64,
    pub n: usize,
    pub paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub scheme: Scheme,
    pub lambda2: f64,
    pub times: Vec<f64>,
    /// Flattened `[path][record][node]`.
    data: Vec<f64>,
}

impl TrajectoryEnsemble {
    pub fn records(&self) -> usize {
        self.times.len()
    }

    /// Output vector y of `path` at record `r`.
    pub fn y(&self, path: usize, r: usize) -> &[f64] {
        let start = (path * self.times.len() + r) * self.n;
        &self.data[start..start + self.n]
    }

    pub fn terminal(&self, path: usize) -> &[f64] {
        self.y(path, self.times.len() - 1)
    }

    /// 10/λ₂, the default start of the stationary window.
    pub fn default_burn_in(&self) -> f64 {
        10.0 / self.lambda2
    }

    /// Pooled samples of node `l` over all paths and records with
    /// `from ≤ t ≤ to`.
    pub fn window_samples(&self, node: usize, from: f64, to: f64) -> Vec<f64> {
        let slack = 1e-9 * self.dt;
        let recs: Vec<usize> = (0..self.records())
            .filter(|&r| self.times[r] >= from - slack && self.times[r] <= to + slack)
            .collect();
        let mut out = Vec::with_capacity(recs.len() * self.paths);
        for p in 0..self.paths {
            for &r in &recs {
                out.push(self.y(p, r)[node]);
            }
        }
        out
    }

    /// Samples of node `l` after `burn_in` (default 10/λ₂). If nothing was
    /// recorded that late, the terminal records are used.
    pub fn stationary_samples(&self, node: usize, burn_in: Option<f64>) -> Vec<f64> {
        let from = burn_in.unwrap_or_else(|| self.default_burn_in());
        let last = *self.times.last().expect("at least one record");
        self.window_samples(node, from.min(last), f64::INFINITY)
    }

    /// Per-node characteristic-function estimates on the stationary window.
    pub fn estimate(&self, burn_in: Option<f64>) -> Result<Vec<ScaleEstimate>> {
        (0..self.n)
            .map(|l| estimate_scale(&self.stationary_samples(l, burn_in), self.alpha))
            .collect()
    }

    /// Largest |Σ_l y_l| over every record, relative to the largest ‖y‖₁.
    pub fn centering_defect(&self) -> f64 {
        let mut worst_sum: f64 = 0.0;
        let mut worst_norm: f64 = 0.0;
        for chunk in self.data.chunks(self.n) {
            worst_sum = worst_sum.max(chunk.iter().sum::<f64>().abs());
            worst_norm = worst_norm.max(chunk.iter().map(|v| v.abs()).sum());
        }
        if worst_norm == 0.0 {
            0.0
        } else {
            worst_sum / worst_norm
        }
    }

    /// Fraction of record-to-record moves |Δy| exceeding `factor` times
    /// their median, pooled over paths and nodes.
    pub fn jump_fraction(&self, factor: f64) -> f64 {
        let mut moves = Vec::new();
        for p in 0..self.paths {
            for r in 1..self.records() {
                let (a, b) = (self.y(p, r - 1), self.y(p, r));
                moves.extend(a.iter().zip(b).map(|(u, v)| (v - u).abs()));
            }
        }
        if moves.is_empty() {
            return 0.0;
        }
        let median = quantile(&mut moves.clone(), 0.5);
        moves.iter().filter(|&&m| m > factor * median).count() as f64 / moves.len() as f64
    }

    /// Long-format dump: `time,path,node,y` with 1-based nodes and
    /// 0-based path indices (the RNG stream ids).
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "time,path,node,y")?;
        for p in 0..self.paths {
            for (r, &t) in self.times.iter().enumerate() {
                for (l, v) in self.y(p, r).iter().enumerate() {
                    writeln!(w, "{},{},{},{}", g9(t), p, l + 1, g9(*v))?;
                }
            }
        }
        Ok(())
    }
}

/// Integrate all paths. Path k draws from ChaCha8 seeded with `seed` on
/// stream k, so the ensemble does not depend on the thread count.
pub fn run(config: &SimConfig) -> Result<TrajectoryEnsemble> {
    let spectrum = config.graph.spectrum()?;
    config.validate(&spectrum)?;
    let n = config.graph.n();
    let alpha = config.noise.alpha();
    let dt = config.dt;
    let steps = config.steps();
    let stride = config.record_stride.unwrap_or(steps);

    let mut record_steps: Vec<usize> = (0..=steps).step_by(stride).collect();
    if *record_steps.last().unwrap() != steps {
        record_steps.push(steps);
    }
    let times: Vec<f64> = record_steps.iter().map(|&k| k as f64 * dt).collect();

    let step_scale = config.noise_scale * (dt / alpha).powf(1.0 / alpha);
    let samplers: Vec<StableSampler> = config
        .noise
        .betas()
        .iter()
        .map(|&b| StableParams::new(alpha, step_scale, b, 0.0).map(|p| p.sampler()))
        .collect::<Result<_>>()?;
    let propagator = match config.scheme {
        Scheme::Euler => None,
        Scheme::SemiExact => Some(heat_kernel(&spectrum, dt)),
    };
    let edges: Vec<(usize, usize, f64)> = config.graph.edges().iter().map(|e| (e.i, e.j, e.w)).collect();
    let x0 = config.x0.clone().unwrap_or_else(|| vec![0.0; n]);

    let per_path: Vec<Vec<f64>> = (0..config.paths)
        .into_par_iter()
        .map(|path| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(path as u64);
            let mut x = x0.clone();
            let mut scratch = vec![0.0; n];
            let mut out = Vec::with_capacity(record_steps.len() * n);
            let mut next = 0;
            for k in 0..=steps {
                if k > 0 {
                    match &propagator {
                        None => {
                            scratch.iter_mut().for_each(|v| *v = 0.0);
                            for &(i, j, w) in &edges {
                                let d = w * (x[i] - x[j]);
                                scratch[i] += d;
                                scratch[j] -= d;
                            }
                            for (xi, li) in x.iter_mut().zip(&scratch) {
                                *xi -= dt * li;
                            }
                        }
                        Some(e) => {
                            for (i, s) in scratch.iter_mut().enumerate() {
                                *s = e.row(i).iter().zip(&x).map(|(a, b)| a * b).sum();
                            }
                            x.copy_from_slice(&scratch);
                        }
                    }
                    for (xi, s) in x.iter_mut().zip(&samplers) {
                        *xi += s.sample(&mut rng);
                    }
                }
                if next < record_steps.len() && record_steps[next] == k {
                    let mean = x.iter().sum::<f64>() / n as f64;
                    out.extend(x.iter().map(|v| v - mean));
                    next += 1;
                }
            }
            out
        })
        .collect();

    Ok(TrajectoryEnsemble {
        alpha,
        n,
        paths: config.paths,
        dt,
        seed: config.seed,
        scheme: config.scheme,
        lambda2: spectrum.lambda2(),
        times,
        data: per_path.concat(),
    })
}

/// e^{−L t} assembled from the eigendecomposition.
fn heat_kernel(spectrum: &Spectrum, t: f64) -> Matrix {
    let q = spectrum.eigenvectors();
    let lam = spectrum.eigenvalues();
    let n = spectrum.n();
    let mut e = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            e[(i, j)] = (0..n).map(|k| q[(i, k)] * q[(j, k)] * (-lam[k] * t).exp()).sum();
        }
    }
    e
}

/// Empirical σ^α (and β where identifiable) of one node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleEstimate {
    pub sigma_alpha: f64,
    /// `None` at α = 1 and α = 2, where the phase does not identify β.
    pub beta: Option<f64>,
    pub samples: usize,
}

fn quantile(v: &mut [f64], q: f64) -> f64 {
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// Characteristic-function estimator. The probe frequencies are
/// θ ∈ {0.25, 0.5, 1}/σ_guess with σ_guess = IQR/2, and
/// σ̂^α = mean of −ln|φ̂(θ)|/θ^α. For α ∉ {1, 2}, β̂ comes from a least
/// squares fit of arg φ̂(θ) = σ^α β tan(πα/2) θ^α + μθ.
pub fn estimate_scale(samples: &[f64], alpha: f64) -> Result<ScaleEstimate> {
    check_alpha(alpha)?;
    if samples.len() < MIN_ESTIMATION_SAMPLES {
        return invalid(format!(
            "need at least {MIN_ESTIMATION_SAMPLES} samples for estimation, got {}",
            samples.len()
        ));
    }
    let mut sorted = samples.to_vec();
    let iqr = quantile(&mut sorted, 0.75) - quantile(&mut sorted, 0.25);
    let guess = iqr / 2.0;
    if !(guess > 0.0) {
        return Err(Error::Numerical("samples have zero interquartile range".into()));
    }
    let thetas = [0.25 / guess, 0.5 / guess, 1.0 / guess];
    let m = samples.len() as f64;
    let phis: Vec<Complex64> = thetas
        .iter()
        .map(|&th| {
            let (c, s) = samples
                .iter()
                .fold((0.0, 0.0), |(c, s), &x| (c + (th * x).cos(), s + (th * x).sin()));
            Complex64::new(c / m, s / m)
        })
        .collect();
    let sigma_alpha = thetas
        .iter()
        .zip(&phis)
        .map(|(&th, phi)| -phi.norm().ln() / th.powf(alpha))
        .sum::<f64>()
        / thetas.len() as f64;

    let skew_factor = (FRAC_PI_2 * alpha).tan();
    let beta = if alpha == 2.0 || (alpha - 1.0).abs() < 1e-12 || sigma_alpha <= 0.0 {
        None
    } else {
        // normal equations of arg φ̂ ≈ a θ^α + μ θ
        let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&th, phi) in thetas.iter().zip(&phis) {
            let (u, v, y) = (th.powf(alpha), th, phi.arg());
            s11 += u * u;
            s12 += u * v;
            s22 += v * v;
            r1 += u * y;
            r2 += v * y;
        }
        let a = (r1 * s22 - r2 * s12) / (s11 * s22 - s12 * s12);
        Some((a / (sigma_alpha * skew_factor)).clamp(-1.0, 1.0))
    };
    Ok(ScaleEstimate {
        sigma_alpha,
        beta,
        samples: samples.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentCheck {
    pub empirical: f64,
    pub theoretical: f64,
    pub ratio: f64,
    pub pass: bool,
}

/// Compares the sample mean of |x|^p with c(α,β,p)^p σ^p; passes when the
/// ratio is within `rel_tol` of 1.
pub fn fractional_moment_check(
    samples: &[f64],
    p: f64,
    alpha: f64,
    beta: f64,
    sigma: f64,
    rel_tol: f64,
) -> Result<MomentCheck> {
    if samples.is_empty() {
        return invalid("no samples");
    }
    let c = moment_constant(alpha, beta, p)?;
    let theoretical = (c * sigma).powf(p);
    let empirical = samples.iter().map(|x| x.abs().powf(p)).sum::<f64>() / samples.len() as f64;
    let ratio = empirical / theoretical;
    Ok(MomentCheck {
        empirical,
        theoretical,
        ratio,
        pass: (ratio - 1.0).abs() <= rel_tol,
    })
}
