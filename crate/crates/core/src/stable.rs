//! α-stable laws S_α(σ, β, μ): characteristic function, parameter algebra,
//! Chambers–Mallows–Stuck sampling and fractional absolute moments.
//!
//! The parametrization is the usual one,
//!
//! ```text
//! φ(θ) = exp{ σ^α (−|θ|^α + iθ ω(θ, α, β)) + iμθ },
//! ω = β |θ|^{α−1} tan(πα/2)   (α ≠ 1),
//! ω = −β (2/π) ln|θ|          (α = 1),
//! ```
//!
//! so that S₂(σ, 0, μ) is Gaussian with variance 2σ².

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::quadrature::{integrate_with_breaks, QuadOptions};
use crate::special::gamma;

/// Parameters of a stable law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StableParams {
    pub alpha: f64,
    pub sigma: f64,
    pub beta: f64,
    pub mu: f64,
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return invalid(format!("stability index {alpha} outside (0, 2]"));
    }
    Ok(())
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&beta) {
        return invalid(format!("skewness {beta} outside [-1, 1]"));
    }
    Ok(())
}

// α within this distance of 1 uses the α = 1 branch.
const ALPHA_ONE_EPS: f64 = 1e-12;

fn is_alpha_one(alpha: f64) -> bool {
    (alpha - 1.0).abs() < ALPHA_ONE_EPS
}

impl StableParams {
    pub fn new(alpha: f64, sigma: f64, beta: f64, mu: f64) -> Result<Self> {
        check_alpha(alpha)?;
        check_beta(beta)?;
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return invalid(format!("scale {sigma} must be finite and non-negative"));
        }
        if !mu.is_finite() {
            return invalid("shift must be finite");
        }
        Ok(Self { alpha, sigma, beta, mu })
    }

    /// Symmetric law S_α(σ, 0, 0).
    pub fn symmetric(alpha: f64, sigma: f64) -> Result<Self> {
        Self::new(alpha, sigma, 0.0, 0.0)
    }

    /// Law of a Lévy-motion increment over a step `dt`: S_α(dt^{1/α}, β, 0).
    pub fn increment(alpha: f64, beta: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return invalid(format!("time step {dt} must be positive"));
        }
        check_alpha(alpha)?;
        Self::new(alpha, dt.powf(1.0 / alpha), beta, 0.0)
    }

    pub fn char_fn(&self, theta: f64) -> Complex64 {
        if theta == 0.0 {
            return Complex64::new(1.0, 0.0);
        }
        let sa = self.sigma.powf(self.alpha);
        let abs_t = theta.abs();
        let omega = if is_alpha_one(self.alpha) {
            -self.beta * (2.0 / PI) * abs_t.ln()
        } else {
            self.beta * abs_t.powf(self.alpha - 1.0) * (FRAC_PI_2 * self.alpha).tan()
        };
        let re = -sa * abs_t.powf(self.alpha);
        let im = sa * theta * omega + self.mu * theta;
        Complex64::new(re, im).exp()
    }

    /// Law of z + a.
    pub fn shift(&self, a: f64) -> StableParams {
        StableParams {
            mu: self.mu + a,
            ..*self
        }
    }

    /// Law of a·z for a ≠ 0. For α = 1 the shift picks up
    /// −(2/π)·a·ln|a|·σβ, the correction implied by the characteristic
    /// function above.
    pub fn scale_by(&self, a: f64) -> Result<StableParams> {
        if a == 0.0 || !a.is_finite() {
            return invalid("scale factor must be finite and non-zero");
        }
        let mu = if is_alpha_one(self.alpha) {
            a * self.mu - (2.0 / PI) * a * a.abs().ln() * self.sigma * self.beta
        } else {
            a * self.mu
        };
        Ok(StableParams {
            alpha: self.alpha,
            sigma: a.abs() * self.sigma,
            beta: a.signum() * self.beta,
            mu,
        })
    }

    /// Law of the sum of two independent stable variables with equal α.
    pub fn sum_indep(&self, other: &StableParams) -> Result<StableParams> {
        if self.alpha != other.alpha {
            return invalid(format!(
                "cannot add laws with α = {} and α = {}",
                self.alpha, other.alpha
            ));
        }
        let a = self.alpha;
        let s1 = self.sigma.powf(a);
        let s2 = other.sigma.powf(a);
        let total = s1 + s2;
        let beta = if total > 0.0 {
            (self.beta * s1 + other.beta * s2) / total
        } else {
            0.0
        };
        Ok(StableParams {
            alpha: a,
            sigma: total.powf(1.0 / a),
            beta,
            mu: self.mu + other.mu,
        })
    }

    pub fn sampler(&self) -> StableSampler {
        StableSampler::new(*self)
    }

    /// One Chambers–Mallows–Stuck draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sampler().sample(rng)
    }
}

/// Sampler with the per-law constants of the Chambers–Mallows–Stuck
/// construction precomputed.
#[derive(Debug, Clone, Copy)]
pub struct StableSampler {
    params: StableParams,
    kind: SamplerKind,
}

#[derive(Debug, Clone, Copy)]
enum SamplerKind {
    PointMass,
    Gaussian {
        sd: f64,
    },
    AlphaOne {
        shift: f64,
    },
    General {
        b: f64,
        s: f64,
        inv_alpha: f64,
        tail_exp: f64,
    },
}

impl StableSampler {
    pub fn new(params: StableParams) -> Self {
        let StableParams { alpha, sigma, beta, .. } = params;
        let kind = if sigma == 0.0 {
            SamplerKind::PointMass
        } else if alpha == 2.0 {
            SamplerKind::Gaussian {
                sd: sigma * 2f64.sqrt(),
            }
        } else if is_alpha_one(alpha) {
            SamplerKind::AlphaOne {
                shift: (2.0 / PI) * beta * sigma * sigma.ln(),
            }
        } else {
            let bt = beta * (FRAC_PI_2 * alpha).tan();
            SamplerKind::General {
                b: bt.atan() / alpha,
                s: (1.0 + bt * bt).powf(0.5 / alpha),
                inv_alpha: 1.0 / alpha,
                tail_exp: (1.0 - alpha) / alpha,
            }
        };
        Self { params, kind }
    }

    pub fn params(&self) -> &StableParams {
        &self.params
    }
}

fn open_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return PI * (u - 0.5);
        }
    }
}

fn positive_exp<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let w: f64 = Exp1.sample(rng);
        if w > 0.0 {
            return w;
        }
    }
}

impl Distribution<f64> for StableSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let p = &self.params;
        match self.kind {
            SamplerKind::PointMass => p.mu,
            SamplerKind::Gaussian { sd } => {
                let z: f64 = StandardNormal.sample(rng);
                p.mu + sd * z
            }
            SamplerKind::AlphaOne { shift } => {
                let v = open_angle(rng);
                let w = positive_exp(rng);
                let a = FRAC_PI_2 + p.beta * v;
                let x = (2.0 / PI) * (a * v.tan() - p.beta * (FRAC_PI_2 * w * v.cos() / a).ln());
                p.sigma * x + shift + p.mu
            }
            SamplerKind::General {
                b,
                s,
                inv_alpha,
                tail_exp,
            } => {
                let v = open_angle(rng);
                let w = positive_exp(rng);
                let phase = p.alpha * (v + b);
                let x = s * phase.sin() / v.cos().powf(inv_alpha) * ((v - phase).cos() / w).powf(tail_exp);
                p.sigma * x + p.mu
            }
        }
    }
}

/// q^{<α>} = |q|^α · sign(q).
pub fn signed_power(q: f64, alpha: f64) -> f64 {
    if q == 0.0 {
        0.0
    } else {
        q.signum() * q.abs().powf(alpha)
    }
}

fn check_moment_order(alpha: f64, p: f64) -> Result<()> {
    check_alpha(alpha)?;
    if !(p > 0.0) {
        return invalid(format!("moment order {p} must be positive"));
    }
    if alpha < 2.0 && p >= alpha {
        return invalid(format!("E|z|^p is infinite for p = {p} >= α = {alpha}"));
    }
    if alpha == 2.0 && p > 2.0 {
        return invalid("moment orders above 2 are not supported");
    }
    Ok(())
}

/// c(α, β, p) = (E|z₀|^p)^{1/p} for z₀ ~ S_α(1, β, 0).
///
/// Symmetric laws use the Gamma-function closed form
/// E|z₀|^p = 2^p Γ((1+p)/2) Γ(1−p/α) / (√π Γ(1−p/2)); skewed laws integrate
/// the characteristic function (see [`abs_moment_from_char_fn`]). Skewed
/// α = 1 laws are not supported.
pub fn moment_constant(alpha: f64, beta: f64, p: f64) -> Result<f64> {
    check_moment_order(alpha, p)?;
    check_beta(beta)?;
    if beta == 0.0 || alpha == 2.0 {
        let m = if alpha == 2.0 {
            // N(0, 2): E|z|^p = 2^p Γ((p+1)/2) / √π
            2f64.powf(p) * gamma(0.5 * (p + 1.0)) / PI.sqrt()
        } else {
            2f64.powf(p) * gamma(0.5 * (1.0 + p)) * gamma(1.0 - p / alpha) / (PI.sqrt() * gamma(1.0 - 0.5 * p))
        };
        return Ok(m.powf(1.0 / p));
    }
    if is_alpha_one(alpha) {
        return invalid("moment constant for skewed α = 1 laws is not supported");
    }
    let law = StableParams::new(alpha, 1.0, beta, 0.0)?;
    Ok(abs_moment_from_char_fn(&law, p, 1e-10)?.powf(1.0 / p))
}

/// E|z|^p for 0 < p < min(α, 2) from the characteristic function, via
/// E|z|^p = (2/π) Γ(p+1) sin(pπ/2) ∫₀^∞ (1 − Re φ(θ)) θ^{−p−1} dθ,
/// integrated in log θ with analytic end corrections.
pub fn abs_moment_from_char_fn(law: &StableParams, p: f64, rel_tol: f64) -> Result<f64> {
    check_moment_order(law.alpha, p)?;
    if p >= 2.0 {
        return invalid("the characteristic-function route needs p < 2");
    }
    if law.mu != 0.0 {
        return invalid("the characteristic-function route assumes μ = 0");
    }
    if law.sigma == 0.0 {
        return Ok(0.0);
    }
    let a = law.alpha;
    let sa = law.sigma.powf(a);
    // below s_lo, 1 − Re φ = σ^α θ^α (1 + O(1e-8)); above s_hi, φ underflows
    let s_lo = ((1e-8 / sa).ln()) / a;
    let s_hi = ((750.0 / sa).ln()) / a;
    let integrand = |s: f64| {
        let theta = s.exp();
        (1.0 - law.char_fn(theta).re) * (-p * s).exp()
    };
    // Interior panels of unit width in log θ keep the oscillating part resolved.
    let mut breaks = vec![s_lo];
    let mut s = s_lo.ceil();
    while s < s_hi {
        breaks.push(s);
        s += 1.0;
    }
    breaks.push(s_hi);
    let body = integrate_with_breaks(integrand, &breaks, &QuadOptions::relative(rel_tol));
    let lower = sa * ((a - p) * s_lo).exp() / (a - p);
    let upper = (-p * s_hi).exp() / p;
    let constant = 2.0 / PI * gamma(p + 1.0) * (0.5 * p * PI).sin();
    Ok(constant * (body.value + lower + upper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn char_fn_gaussian_and_origin() {
        let g = StableParams::new(2.0, 1.0, 0.0, 0.0).unwrap();
        let v = g.char_fn(1.0);
        assert!(close(v.re, (-1f64).exp(), 1e-15) && v.im.abs() < 1e-15);
        for p in [
            g,
            StableParams::new(0.7, 2.0, -0.3, 1.0).unwrap(),
            StableParams::new(1.0, 1.0, 1.0, 0.0).unwrap(),
        ] {
            assert_eq!(p.char_fn(0.0), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn char_fn_alpha_one_at_unit_theta() {
        let c = StableParams::new(1.0, 1.0, 1.0, 0.0).unwrap().char_fn(1.0);
        assert!(close(c.re, (-1f64).exp(), 1e-15));
        assert!(c.im.abs() < 1e-15);
    }

    #[test]
    fn char_fn_modulus() {
        let p = StableParams::new(1.3, 0.8, 0.6, -2.0).unwrap();
        for t in [-3.0, -0.4, 0.2, 1.7] {
            let expected = (-(0.8f64.powf(1.3)) * f64::abs(t).powf(1.3)).exp();
            assert!(close(p.char_fn(t).norm(), expected, 1e-14));
        }
    }

    #[test]
    fn scale_by_alpha_not_one() {
        let p = StableParams::new(1.5, 2.0, 0.5, 1.0).unwrap().scale_by(-3.0).unwrap();
        assert_eq!(
            p,
            StableParams {
                alpha: 1.5,
                sigma: 6.0,
                beta: -0.5,
                mu: -3.0
            }
        );
    }

    #[test]
    fn scale_by_alpha_one_shift_correction() {
        let p = StableParams::new(1.0, 1.0, 1.0, 0.0).unwrap().scale_by(2.0).unwrap();
        assert_eq!((p.sigma, p.beta), (2.0, 1.0));
        assert!(close(p.mu, -(4.0 / PI) * 2f64.ln(), 1e-15));
    }

    #[test]
    fn scale_by_matches_char_fn() {
        for p in [
            StableParams::new(1.0, 1.3, 0.7, 0.4).unwrap(),
            StableParams::new(0.6, 0.5, -0.9, 1.0).unwrap(),
            StableParams::new(1.8, 2.0, 0.2, -1.0).unwrap(),
        ] {
            for a in [2.0, -0.5, 3.7] {
                let q = p.scale_by(a).unwrap();
                for t in [0.3, 1.0, 2.2, -1.4] {
                    let lhs = q.char_fn(t);
                    let rhs = p.char_fn(a * t);
                    assert!((lhs - rhs).norm() < 1e-12, "{p:?} a={a} t={t}");
                }
            }
        }
    }

    #[test]
    fn scale_by_zero_rejected() {
        assert!(StableParams::symmetric(1.2, 1.0).unwrap().scale_by(0.0).is_err());
    }

    #[test]
    fn shift_moves_mu() {
        let p = StableParams::new(0.9, 1.1, 0.3, 0.0).unwrap().shift(2.5);
        assert_eq!(p.mu, 2.5);
    }

    #[test]
    fn sums_of_independent_laws() {
        for alpha in [0.5, 1.0, 1.5, 2.0] {
            let p = StableParams::symmetric(alpha, 1.0).unwrap();
            let s = p.sum_indep(&p).unwrap();
            assert!(close(s.sigma, 2f64.powf(1.0 / alpha), 1e-15));
        }
        let s = StableParams::symmetric(2.0, 1.0).unwrap();
        assert!(close(s.sum_indep(&s).unwrap().sigma, 2f64.sqrt(), 1e-15));
        let a = StableParams::new(1.5, 1.0, 1.0, 0.0).unwrap();
        let b = StableParams::new(1.5, 1.0, -1.0, 0.0).unwrap();
        let s = a.sum_indep(&b).unwrap();
        assert!(close(s.sigma, 2f64.powf(2.0 / 3.0), 1e-15));
        assert_eq!(s.beta, 0.0);
        assert!(a.sum_indep(&StableParams::symmetric(1.2, 1.0).unwrap()).is_err());
    }

    #[test]
    fn signed_power_values() {
        assert_eq!(signed_power(-2.0, 2.0), -4.0);
        assert_eq!(signed_power(0.0, 0.7), 0.0);
        assert!(close(signed_power(0.5, 0.5), 0.5f64.sqrt(), 1e-16));
    }

    #[test]
    fn moment_constant_gaussian() {
        assert!(close(moment_constant(2.0, 0.0, 2.0).unwrap(), 2f64.sqrt(), 1e-12));
        assert!(close(moment_constant(2.0, 0.0, 1.0).unwrap(), 2.0 / PI.sqrt(), 1e-12));
    }

    #[test]
    fn moment_constant_cauchy() {
        // standard Cauchy: E|z|^p = 1 / cos(πp/2)
        let c = moment_constant(1.0, 0.0, 0.5).unwrap();
        assert!(close(c.sqrt(), 1.0 / (PI / 4.0).cos(), 1e-12));
    }

    #[test]
    fn moment_constant_domain() {
        assert!(moment_constant(1.5, 0.0, 1.5).is_err());
        assert!(moment_constant(1.5, 0.0, 2.0).is_err());
        assert!(moment_constant(1.0, 0.5, 0.5).is_err());
        assert!(moment_constant(2.0, 0.0, 2.5).is_err());
        assert!(moment_constant(1.5, 0.0, 0.0).is_err());
    }

    #[test]
    fn moment_constant_diverges_near_alpha() {
        for alpha in [0.5, 1.0, 1.5, 1.9] {
            let near = moment_constant(alpha, 0.0, alpha - 1e-3).unwrap();
            let mid = moment_constant(alpha, 0.0, alpha / 2.0).unwrap();
            assert!(near > 10.0 * mid, "alpha={alpha}: {near} vs {mid}");
        }
    }

    #[test]
    fn char_fn_route_agrees_with_closed_form() {
        for &(alpha, p) in &[(1.5, 0.75), (0.8, 0.3), (1.2, 1.0), (2.0, 1.3), (1.9, 0.5)] {
            let law = StableParams::symmetric(alpha, 1.0).unwrap();
            let numeric = abs_moment_from_char_fn(&law, p, 1e-11).unwrap();
            let closed = moment_constant(alpha, 0.0, p).unwrap().powf(p);
            assert!(
                ((numeric - closed) / closed).abs() < 1e-7,
                "α={alpha} p={p}: {numeric} vs {closed}"
            );
        }
    }

    #[test]
    fn skewed_moment_constant_matches_monte_carlo() {
        let (alpha, beta, p) = (1.5, 0.7, 0.5);
        let c = moment_constant(alpha, beta, p).unwrap();
        let sampler = StableParams::new(alpha, 1.0, beta, 0.0).unwrap().sampler();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 400_000;
        let mc = (0..n).map(|_| sampler.sample(&mut rng).abs().powf(p)).sum::<f64>() / n as f64;
        assert!(((mc - c.powf(p)) / c.powf(p)).abs() < 0.01, "{mc} vs {}", c.powf(p));
    }

    #[test]
    fn gaussian_sample_variance() {
        let s = StableParams::symmetric(2.0, 1.0).unwrap().sampler();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| s.sample(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        assert!((var - 2.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn cauchy_sample_median() {
        let s = StableParams::symmetric(1.0, 1.0).unwrap().sampler();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut xs: Vec<f64> = (0..100_000).map(|_| s.sample(&mut rng)).collect();
        xs.sort_by(f64::total_cmp);
        let median = 0.5 * (xs[49_999] + xs[50_000]);
        assert!(median.abs() < 0.02, "{median}");
    }

    #[test]
    fn increment_scale() {
        let p = StableParams::increment(1.5, 0.2, 0.008).unwrap();
        assert!(close(p.sigma.powf(1.5), 0.008, 1e-15));
        assert!(StableParams::increment(1.5, 0.2, 0.0).is_err());
    }

    #[test]
    fn point_mass() {
        let s = StableParams::new(1.3, 0.0, 0.5, 4.0).unwrap().sampler();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(s.sample(&mut rng), 4.0);
    }
}
