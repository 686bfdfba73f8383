//! Adaptive 15-point Gauss–Kronrod quadrature.
//!
//! The integrators here are used for every scale integral in the crate:
//! finite intervals with caller-supplied breakpoints (sign changes of the
//! spectral kernel, crossings of `g(t) = 1`) and semi-infinite intervals
//! closed off by an analytic tail bound.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
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

// 7-point Gauss weights, paired with XGK[1], XGK[3], XGK[5], XGK[7].
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Convergence controls for the adaptive integrators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl QuadOptions {
    pub fn relative(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol: 0.0,
            max_subdivisions: 20_000,
        }
    }

    pub fn with_abs(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self::relative(1e-8)
    }
}

/// Value of an integral with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl Integral {
    pub const ZERO: Integral = Integral {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
        converged: true,
    };

    pub(crate) fn scaled(self, factor: f64) -> Integral {
        Integral {
            value: self.value * factor,
            error: self.error * factor.abs(),
            ..self
        }
    }

    pub(crate) fn combine(self, other: Integral) -> Integral {
        Integral {
            value: self.value + other.value,
            error: self.error + other.error,
            evaluations: self.evaluations + other.evaluations,
            converged: self.converged && other.converged,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut err = err.abs();
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    err
}

/// One application of the 15-point Kronrod rule with its embedded 7-point
/// Gauss rule on [a, b].
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut res_abs = kronrod.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kronrod * half;
    let err = rescale_error((kronrod - gauss) * half, res_abs * half.abs(), res_asc * half.abs());
    (value, err)
}

/// Integrates `f` over [a, b].
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Integral {
    integrate_with_breaks(f, &[a, b], opts)
}

/// Integrates `f` over [breaks[0], breaks[last]] with the given interior
/// breakpoints as initial panel boundaries. Refinement is global: the panel
/// with the largest error estimate is bisected until the total error meets
/// the tolerance.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(f: F, breaks: &[f64], opts: &QuadOptions) -> Integral {
    assert!(breaks.len() >= 2, "need at least the two endpoints");
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let (value, error) = gk15(&f, a, b);
        evaluations += 15;
        heap.push(Segment { a, b, value, error });
    }
    let mut total: f64 = heap.iter().map(|s| s.value).sum();
    let mut err: f64 = heap.iter().map(|s| s.error).sum();
    let mut converged = false;
    let mut subdivisions = 0;
    loop {
        if err <= opts.abs_tol.max(opts.rel_tol * total.abs()) {
            converged = true;
            break;
        }
        if subdivisions >= opts.max_subdivisions {
            break;
        }
        let Some(worst) = heap.pop() else {
            converged = true;
            break;
        };
        if worst.error == 0.0 {
            // Everything left is frozen at machine resolution.
            heap.push(worst);
            break;
        }
        let mid = 0.5 * (worst.a + worst.b);
        let width = worst.b - worst.a;
        if mid <= worst.a || mid >= worst.b || width < 8.0 * f64::EPSILON * worst.a.abs().max(worst.b.abs()) {
            heap.push(Segment { error: 0.0, ..worst });
            err -= worst.error;
            continue;
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        evaluations += 30;
        subdivisions += 1;
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
        if subdivisions % 256 == 0 {
            total = heap.iter().map(|s| s.value).sum();
            err = heap.iter().map(|s| s.error).sum();
        }
    }
    finish(&heap, evaluations, converged)
}

fn finish(heap: &BinaryHeap<Segment>, evaluations: usize, converged: bool) -> Integral {
    // Sum in positional order so results do not depend on heap layout.
    let mut segs: Vec<Segment> = heap.iter().copied().collect();
    segs.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = segs.iter().map(|s| s.value).sum();
    let error = segs.iter().map(|s| s.error).sum::<f64>();
    Integral {
        value,
        error,
        evaluations,
        converged,
    }
}

/// Integrates `f` over [0, ∞).
///
/// `tail(T)` must bound |∫_T^∞ f|. The integration range starts at
/// `initial_cutoff` and is extended until the tail bound falls below a
/// tenth of the accuracy target; `breaks` are interior breakpoints
/// (ignored beyond the final cutoff).
pub fn integrate_semi_infinite<F, B>(f: F, breaks: &[f64], tail: B, initial_cutoff: f64, opts: &QuadOptions) -> Integral
where
    F: Fn(f64) -> f64,
    B: Fn(f64) -> f64,
{
    let mut cutoff = initial_cutoff.max(f64::MIN_POSITIVE);
    let mut points = vec![0.0];
    points.extend(breaks.iter().copied().filter(|&t| t > 0.0 && t < cutoff));
    points.push(cutoff);
    let mut result = integrate_with_breaks(&f, &points, opts);
    for _ in 0..200 {
        let target = 0.1 * opts.abs_tol.max(opts.rel_tol * result.value.abs());
        let t = tail(cutoff);
        if t <= target || t == 0.0 {
            return Integral {
                error: result.error + t,
                ..result
            };
        }
        let next = cutoff * 2.0;
        let mut pts = vec![cutoff];
        pts.extend(breaks.iter().copied().filter(|&t| t > cutoff && t < next));
        pts.push(next);
        let ext = integrate_with_breaks(&f, &pts, opts);
        result = result.combine(ext);
        cutoff = next;
    }
    Integral {
        converged: false,
        error: result.error + tail(cutoff),
        ..result
    }
}
