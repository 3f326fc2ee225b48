//! Grids on horizontal lines, sampling, norms, and one-sided series.
//!
//! A line `{ x + i c : x real }` is parametrized by `x = -scale * cot(theta/2)`,
//! the image of the unit circle under a Moebius map. Functions analytic above
//! the line become power series in `w(alpha) = (alpha - ic - i*scale)/(alpha - ic + i*scale)`
//! (which maps the upper half plane onto the unit disk), functions analytic
//! below the line become series in the reciprocal map. On the line itself both
//! maps trace the unit circle, so series coefficients are Fourier coefficients
//! of the samples and everything downstream is FFT-sized.

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use std::cell::RefCell;
use std::f64::consts::PI;

thread_local! {
    // one planner per thread so repeated transform sizes reuse their plans
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn fft_forward(buf: &mut [C64]) {
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    fft.process(buf);
}

/// Unnormalized inverse transform: `out_j = sum_k buf_k exp(+2 pi i j k / n)`.
pub(crate) fn fft_inverse_unnormalized(buf: &mut [C64]) {
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()));
    fft.process(buf);
}

/// Quadrature grid on the line `Im alpha = offset`.
///
/// Nodes avoid the poles of the cotangent map by the half-step shift, and
/// `weight` carries `dx/dtheta * (2 pi / n)` so that plain weighted sums
/// approximate integrals over the whole line.
#[derive(Clone, Debug)]
pub struct LineGrid {
    pub offset: f64,
    pub map_scale: f64,
    pub n: usize,
    pub theta: Vec<f64>,
    pub x: Vec<f64>,
    pub alpha: Vec<C64>,
    pub weight: Vec<f64>,
}

impl LineGrid {
    pub fn new(offset: f64, map_scale: f64, n: usize) -> Self {
        assert!(n >= 16 && n % 2 == 0, "grid size must be even and at least 16");
        assert!(map_scale > 0.0, "map scale must be positive");
        let mut theta = Vec::with_capacity(n);
        let mut x = Vec::with_capacity(n);
        let mut alpha = Vec::with_capacity(n);
        let mut weight = Vec::with_capacity(n);
        for j in 0..n {
            let t = 2.0 * PI * (j as f64 + 0.5) / n as f64;
            let xv = -map_scale / (t / 2.0).tan();
            theta.push(t);
            x.push(xv);
            alpha.push(C64::new(xv, offset));
            weight.push(map_scale / (2.0 * (t / 2.0).sin().powi(2)) * (2.0 * PI / n as f64));
        }
        LineGrid { offset, map_scale, n, theta, x, alpha, weight }
    }

    /// Sample a function at every node of the grid.
    pub fn sample(&self, f: impl Fn(C64) -> C64) -> Vec<C64> {
        self.alpha.iter().map(|&a| f(a)).collect()
    }

    pub(crate) fn same_frame(&self, offset: f64, map_scale: f64) -> bool {
        self.offset == offset && self.map_scale == map_scale
    }
}

/// Weighted L2 norm of line samples: `sqrt(integral |f|^2 dx)`.
pub fn norm_on_line(grid: &LineGrid, samples: &[C64]) -> f64 {
    debug_assert_eq!(samples.len(), grid.n);
    samples
        .iter()
        .zip(&grid.weight)
        .map(|(s, w)| s.norm_sqr() * w)
        .sum::<f64>()
        .sqrt()
}

pub fn max_abs(samples: &[C64]) -> f64 {
    samples.iter().map(|s| s.norm()).fold(0.0, f64::max)
}

/// Combine two sample vectors node by node.
pub fn pointwise_combine(a: &[C64], b: &[C64], op: impl Fn(C64, C64) -> C64) -> Vec<C64> {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| op(x, y)).collect()
}

/// Fourier coefficients `c_k` with `G(theta_j) = sum_k c_k exp(i k theta_j)`,
/// returned in signed-frequency FFT order `0, 1, .., n/2-1, -n/2, .., -1`.
/// The phase factor accounts for the half-step node shift.
pub fn fourier_coeffs(grid: &LineGrid, samples: &[C64]) -> Vec<C64> {
    let n = grid.n;
    debug_assert_eq!(samples.len(), n);
    let mut buf = samples.to_vec();
    fft_forward(&mut buf);
    for (j, v) in buf.iter_mut().enumerate() {
        let k = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
        *v = *v / n as f64 * C64::new(0.0, -PI * k / n as f64).exp();
    }
    buf
}

/// Length of the coefficient prefix that is above the noise floor. Keeps the
/// geometric decay of a series meaningful when it is evaluated beyond its
/// birth line, where the tail would otherwise be amplified.
pub(crate) fn trunc_len(coeffs: &[C64], floor: f64) -> usize {
    let top = max_abs(coeffs);
    let thresh = f64::max(1e-14 * top, floor);
    coeffs
        .iter()
        .rposition(|c| c.norm() > thresh)
        .map_or(0, |i| i + 1)
}

fn horner(coeffs: &[C64], w: C64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        acc = acc * w + c;
    }
    acc
}

fn horner_guarded(coeffs: &[C64], w: C64, floor: f64) -> C64 {
    if w.norm() > 1.0 + 1e-12 {
        horner(&coeffs[..trunc_len(coeffs, floor)], w)
    } else {
        horner(coeffs, w)
    }
}

/// Geometric decay radius `R` of a coefficient tail, `|c_k| ~ C R^-k`.
/// Infinity when there is no usable tail to fit.
pub(crate) fn fit_radius(coeffs: &[C64]) -> f64 {
    let mags: Vec<f64> = coeffs.iter().map(|c| c.norm()).collect();
    let top = mags.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return f64::INFINITY;
    }
    // envelope: running maximum from the tail end backwards
    let mut env = mags.clone();
    for i in (0..env.len().saturating_sub(1)).rev() {
        env[i] = env[i].max(env[i + 1]);
    }
    let k1 = match env.iter().rposition(|&e| e > 1e-15 * top) {
        Some(k) => k,
        None => return f64::INFINITY,
    };
    let k0 = (k1 / 4).max(1);
    if k1 - k0 < 8 {
        return f64::INFINITY;
    }
    let r = (env[k0] / env[k1]).powf(1.0 / (k1 - k0) as f64);
    r.max(1.0 + 1e-9)
}

/// A function analytic above its birth line, held as a power series in the
/// disk variable of that line.
#[derive(Clone, Debug)]
pub struct PlusSeries {
    pub offset: f64,
    pub map_scale: f64,
    pub coeffs: Vec<C64>,
    /// absolute coefficient scale below which everything is split noise
    pub floor: f64,
}

/// A function analytic below its birth line; series in the reciprocal map.
#[derive(Clone, Debug)]
pub struct MinusSeries {
    pub offset: f64,
    pub map_scale: f64,
    pub coeffs: Vec<C64>,
    pub floor: f64,
}

/// Common evaluation interface for one-sided series.
pub trait OneSided {
    fn birth_line(&self) -> f64;
    fn eval(&self, alpha: C64) -> C64;
    fn eval_many(&self, alpha: &[C64]) -> Vec<C64> {
        alpha.iter().map(|&a| self.eval(a)).collect()
    }
    fn eval_grid(&self, grid: &LineGrid) -> Vec<C64>;
}

impl PlusSeries {
    pub fn new(offset: f64, map_scale: f64, coeffs: Vec<C64>, floor: f64) -> Self {
        PlusSeries { offset, map_scale, coeffs, floor }
    }

    fn wmap(&self, alpha: C64) -> C64 {
        let d = alpha - C64::new(0.0, self.offset);
        (d - C64::new(0.0, self.map_scale)) / (d + C64::new(0.0, self.map_scale))
    }

    pub fn scale_by(&self, s: C64) -> Self {
        PlusSeries {
            offset: self.offset,
            map_scale: self.map_scale,
            coeffs: self.coeffs.iter().map(|&c| c * s).collect(),
            floor: self.floor * s.norm(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert!(
            self.offset == other.offset && self.map_scale == other.map_scale,
            "series live on different frames"
        );
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = vec![C64::new(0.0, 0.0); n];
        for (i, &c) in self.coeffs.iter().enumerate() {
            coeffs[i] += c;
        }
        for (i, &c) in other.coeffs.iter().enumerate() {
            coeffs[i] += c;
        }
        PlusSeries {
            offset: self.offset,
            map_scale: self.map_scale,
            coeffs,
            floor: self.floor.max(other.floor),
        }
    }
}

impl OneSided for PlusSeries {
    fn birth_line(&self) -> f64 {
        self.offset
    }

    fn eval(&self, alpha: C64) -> C64 {
        horner_guarded(&self.coeffs, self.wmap(alpha), self.floor)
    }

    fn eval_many(&self, alpha: &[C64]) -> Vec<C64> {
        let trunc = &self.coeffs[..trunc_len(&self.coeffs, self.floor)];
        alpha
            .iter()
            .map(|&a| {
                let w = self.wmap(a);
                if w.norm() > 1.0 + 1e-12 { horner(trunc, w) } else { horner(&self.coeffs, w) }
            })
            .collect()
    }

    fn eval_grid(&self, grid: &LineGrid) -> Vec<C64> {
        // own-grid fast path: the series is a Fourier polynomial there
        if grid.same_frame(self.offset, self.map_scale) && self.coeffs.len() <= grid.n {
            let n = grid.n;
            let mut padded = vec![C64::new(0.0, 0.0); n];
            for (k, &c) in self.coeffs.iter().enumerate() {
                padded[k] = c * C64::new(0.0, PI * k as f64 / n as f64).exp();
            }
            fft_inverse_unnormalized(&mut padded);
            return padded;
        }
        self.eval_many(&grid.alpha)
    }
}

impl MinusSeries {
    pub fn new(offset: f64, map_scale: f64, coeffs: Vec<C64>, floor: f64) -> Self {
        MinusSeries { offset, map_scale, coeffs, floor }
    }

    fn wmap(&self, alpha: C64) -> C64 {
        let d = alpha - C64::new(0.0, self.offset);
        (d + C64::new(0.0, self.map_scale)) / (d - C64::new(0.0, self.map_scale))
    }

    pub fn scale_by(&self, s: C64) -> Self {
        MinusSeries {
            offset: self.offset,
            map_scale: self.map_scale,
            coeffs: self.coeffs.iter().map(|&c| c * s).collect(),
            floor: self.floor * s.norm(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert!(
            self.offset == other.offset && self.map_scale == other.map_scale,
            "series live on different frames"
        );
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = vec![C64::new(0.0, 0.0); n];
        for (i, &c) in self.coeffs.iter().enumerate() {
            coeffs[i] += c;
        }
        for (i, &c) in other.coeffs.iter().enumerate() {
            coeffs[i] += c;
        }
        MinusSeries {
            offset: self.offset,
            map_scale: self.map_scale,
            coeffs,
            floor: self.floor.max(other.floor),
        }
    }
}

impl OneSided for MinusSeries {
    fn birth_line(&self) -> f64 {
        self.offset
    }

    fn eval(&self, alpha: C64) -> C64 {
        horner_guarded(&self.coeffs, self.wmap(alpha), self.floor)
    }

    fn eval_many(&self, alpha: &[C64]) -> Vec<C64> {
        let trunc = &self.coeffs[..trunc_len(&self.coeffs, self.floor)];
        alpha
            .iter()
            .map(|&a| {
                let w = self.wmap(a);
                if w.norm() > 1.0 + 1e-12 { horner(trunc, w) } else { horner(&self.coeffs, w) }
            })
            .collect()
    }

    fn eval_grid(&self, grid: &LineGrid) -> Vec<C64> {
        if grid.same_frame(self.offset, self.map_scale) && self.coeffs.len() <= grid.n {
            let n = grid.n;
            let mut padded = vec![C64::new(0.0, 0.0); n];
            for (m, &c) in self.coeffs.iter().enumerate() {
                padded[m] = c * C64::new(0.0, -PI * m as f64 / n as f64).exp();
            }
            fft_forward(&mut padded);
            return padded;
        }
        self.eval_many(&grid.alpha)
    }
}

/// Evaluate a one-sided series on a parallel line.
pub fn shift_line<S: OneSided>(series: &S, to: &LineGrid) -> Vec<C64> {
    series.eval_grid(to)
}

/// A function with analytic content on both sides of its birth line.
#[derive(Clone, Debug, Default)]
pub struct TwoSided {
    pub plus: Option<PlusSeries>,
    pub minus: Option<MinusSeries>,
}

impl TwoSided {
    pub fn eval(&self, alpha: C64) -> C64 {
        let mut out = C64::new(0.0, 0.0);
        if let Some(p) = &self.plus {
            out += p.eval(alpha);
        }
        if let Some(m) = &self.minus {
            out += m.eval(alpha);
        }
        out
    }

    pub fn eval_many(&self, alpha: &[C64]) -> Vec<C64> {
        alpha.iter().map(|&a| self.eval(a)).collect()
    }

    pub fn eval_grid(&self, grid: &LineGrid) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); grid.n];
        if let Some(p) = &self.plus {
            for (o, v) in out.iter_mut().zip(p.eval_grid(grid)) {
                *o += v;
            }
        }
        if let Some(m) = &self.minus {
            for (o, v) in out.iter_mut().zip(m.eval_grid(grid)) {
                *o += v;
            }
        }
        out
    }
}

/// Value at `z` of the one-sided part carried by these line samples, by the
/// Cauchy integral over the line. Above the line this continues the plus
/// part, below the line the minus part (orientation handled internally).
pub fn cauchy_eval(grid: &LineGrid, samples: &[C64], z: C64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for ((&s, &a), &w) in samples.iter().zip(&grid.alpha).zip(&grid.weight) {
        acc += s * w / (a - z);
    }
    let val = acc / C64::new(0.0, 2.0 * PI);
    if z.im > grid.offset {
        val
    } else {
        -val
    }
}

/// Residue of a single simple pole from its line samples: given samples of
/// `r/(alpha - z0)`, recovers `r`. The modulus-squared weighting keeps the
/// quiet far tail from polluting the estimate; all-zero samples give zero.
pub fn pole_residue(grid: &LineGrid, samples: &[C64], z0: C64) -> C64 {
    let mut num = C64::new(0.0, 0.0);
    let mut den = 0.0;
    for ((&s, &a), &w) in samples.iter().zip(&grid.alpha).zip(&grid.weight) {
        let wt = s.norm_sqr() * w;
        num += s * (a - z0) * wt;
        den += wt;
    }
    if den == 0.0 || !den.is_finite() {
        return C64::new(0.0, 0.0);
    }
    num / den
}
