//! Globally adaptive 21-point Gauss–Kronrod quadrature.
//!
//! The interval with the largest error estimate is always split next; ties
//! break on the left endpoint, so the subdivision sequence is a pure function
//! of the integrand.

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_980_160_685,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Gauss weights for the nodes `XGK[1], XGK[3], .., XGK[9]`.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Value and error estimate of an integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

impl Estimate {
    pub fn relative_error(&self) -> f64 {
        if self.value == 0.0 {
            if self.error == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            self.error / self.value.abs()
        }
    }
}

/// Tolerances and subdivision budget for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { rel: 1e-6, abs: 0.0, max_intervals: 4000 }
    }
}

/// One 21-point rule on `[a, b]`; returns Kronrod value and error estimate.
pub fn gauss_kronrod21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut res_k = WGK[10] * fc;
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let h = h.abs();
    let result = res_k * h;
    res_asc *= h;
    res_abs *= h;
    let mut err = ((res_k - res_g) * h).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    let round_off = 50.0 * f64::EPSILON * res_abs;
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(round_off);
    }
    (result, err)
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn ordered_sum(pieces: &mut [Piece]) -> (f64, f64) {
    pieces.sort_by(|p, q| p.a.total_cmp(&q.a));
    let mut value = 0.0;
    let mut comp = 0.0;
    let mut error = 0.0;
    for p in pieces.iter() {
        let y = p.value - comp;
        let t = value + y;
        comp = (t - value) - y;
        value = t;
        error += p.error;
    }
    (value, error)
}

/// Integrates `f` over the union of the given breakpoint panels.
///
/// `breaks` must be strictly increasing. Fails with [`Error::Quadrature`] if the
/// budget runs out before `error <= max(abs, rel * |value|)`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, breaks: &[f64], tol: Tolerance) -> Result<Estimate> {
    if breaks.len() < 2 {
        return Err(Error::InvalidParameter("quadrature needs at least two breakpoints".into()));
    }
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for w in breaks.windows(2) {
        let (value, error) = gauss_kronrod21(&mut f, w[0], w[1]);
        evaluations += 21;
        heap.push(Piece { a: w[0], b: w[1], value, error });
    }
    let mut total_value: f64 = heap.iter().map(|p| p.value).sum();
    let mut total_error: f64 = heap.iter().map(|p| p.error).sum();
    let target = |v: f64| tol.abs.max(tol.rel * v.abs());
    while total_error > target(total_value) && heap.len() < tol.max_intervals.max(breaks.len()) {
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let (v1, e1) = gauss_kronrod21(&mut f, worst.a, mid);
        let (v2, e2) = gauss_kronrod21(&mut f, mid, worst.b);
        evaluations += 42;
        total_value += v1 + v2 - worst.value;
        total_error += e1 + e2 - worst.error;
        heap.push(Piece { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Piece { a: mid, b: worst.b, value: v2, error: e2 });
    }
    let mut pieces = heap.into_vec();
    let (value, error) = ordered_sum(&mut pieces);
    let est = Estimate { value, error, evaluations };
    if !value.is_finite() || error > target(value) {
        return Err(Error::Quadrature {
            achieved: est.relative_error(),
            requested: tol.rel,
        });
    }
    Ok(est)
}

/// Integrates `f` over the whole real line.
///
/// The core `[c - w, c + w]` is split into `panels` pieces; each tail is mapped
/// onto a unit interval by `x = c ± w / t`, so `f` must decay at least as `1/x²`.
pub fn integrate_real_line<F: FnMut(f64) -> f64>(
    mut f: F,
    center: f64,
    half_width: f64,
    panels: usize,
    tol: Tolerance,
) -> Result<Estimate> {
    if !(half_width > 0.0) {
        return Err(Error::InvalidParameter(format!("non-positive half width {half_width}")));
    }
    let n = panels.max(1);
    let mut breaks = Vec::with_capacity(n + 5);
    for k in 0..=4 {
        breaks.push(-2.0 + 0.25 * k as f64);
    }
    for k in 1..n {
        breaks.push(-1.0 + 2.0 * k as f64 / n as f64);
    }
    for k in 0..=4 {
        breaks.push(1.0 + 0.25 * k as f64);
    }
    let g = |s: f64| -> f64 {
        if s < -1.0 {
            let t = 2.0 + s;
            if t <= 0.0 {
                return 0.0;
            }
            f(center - half_width / t) * half_width / (t * t)
        } else if s > 1.0 {
            let t = 2.0 - s;
            if t <= 0.0 {
                return 0.0;
            }
            f(center + half_width / t) * half_width / (t * t)
        } else {
            f(center + half_width * s) * half_width
        }
    };
    integrate(g, &breaks, tol)
}
