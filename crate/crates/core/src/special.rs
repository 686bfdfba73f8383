//! Gamma function and Gauss–Legendre rules.

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function via the Lanczos approximation (g = 7, nine coefficients)
/// with the reflection formula below 1/2.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS_COEF[0];
        for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + LANCZOS_G + 0.5;
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [-1, 1],
/// nodes in ascending order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-like initial guess, refined by Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn gamma_known_values() {
        assert!(rel(gamma(1.0), 1.0) < 1e-12);
        assert!(rel(gamma(2.0), 1.0) < 1e-12);
        assert!(rel(gamma(0.5), PI.sqrt()) < 1e-12);
        assert!(rel(gamma(1.5), PI.sqrt() / 2.0) < 1e-12);
        assert!(rel(gamma(5.0), 24.0) < 1e-12);
        assert!(rel(gamma(10.0), 362_880.0) < 1e-11);
        assert!(rel(gamma(0.1), 9.513_507_698_668_732) < 1e-11);
        assert!(rel(gamma(2.5), 1.329_340_388_179_137) < 1e-12);
    }

    #[test]
    fn gamma_recurrence_on_grid() {
        let mut x = 0.05;
        while x < 9.0 {
            assert!(rel(gamma(x + 1.0), x * gamma(x)) < 1e-11, "x = {x}");
            x += 0.173;
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(21);
        assert_eq!(x.len(), 21);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        // degree 40 monomial is within the 2n-1 = 41 exactness range
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(40)).sum();
        assert!((s - 2.0 / 41.0).abs() < 1e-13);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
        assert!(x[10].abs() < 1e-15);
    }
}
