//! Splittings of line samples into one-sided parts.
//!
//! * [`additive_split`]: `F = F_plus + F_minus` via Fourier coefficients of
//!   the circle samples. The circle constant (the value of `F` at the line
//!   ends) is shared half and half between the two parts.
//! * [`multiplicative_split`]: `K = K_plus * K_minus` as `exp` of the
//!   additive split of `log K`; requires winding index zero.
//! * [`window_plus`] / [`window_minus`]: the exponential window projections
//!   `P -> [exp(-i alpha len) P]_plus` and `V -> [exp(+i alpha len) V]_minus`
//!   computed by a contour integral in the disk variable.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;
use thiserror::Error;

use crate::analytic_core::{
    fft_forward, fft_inverse_unnormalized, fit_radius, fourier_coeffs, max_abs, trunc_len,
    LineGrid, MinusSeries, OneSided, PlusSeries,
};

#[derive(Debug, Error)]
pub enum SplitError {
    #[error(
        "symbol has winding index {winding} (fractional residual {residual:.3}); \
         the multiplicative split needs index zero"
    )]
    NotIndexZero { winding: i64, residual: f64 },
}

/// Additive split with an explicit coefficient budget per side.
pub fn additive_split_k(
    grid: &LineGrid,
    samples: &[C64],
    kmax: usize,
) -> (PlusSeries, MinusSeries) {
    let n = grid.n;
    assert!(kmax >= 1 && kmax <= n / 2);
    let ck = fourier_coeffs(grid, samples);
    let delta: C64 = ck.iter().sum();

    let mut a = vec![C64::new(0.0, 0.0); kmax];
    a[1..kmax].copy_from_slice(&ck[1..kmax]);
    let head: C64 = ck[1..n / 2].iter().sum();
    a[0] = delta / 2.0 - head;

    let mut b = vec![C64::new(0.0, 0.0); kmax];
    for m in 1..kmax {
        b[m] = ck[n - m];
    }
    let tail: C64 = ck[n / 2 + 1..].iter().sum();
    b[0] = delta / 2.0 - tail;

    let floor = 1e-14 * max_abs(samples);
    (
        PlusSeries::new(grid.offset, grid.map_scale, a, floor),
        MinusSeries::new(grid.offset, grid.map_scale, b, floor),
    )
}

/// Additive split `F = F_plus + F_minus` of line samples.
///
/// Both parts are returned as one-sided series on the sampling line. On the
/// grid itself `F_plus + F_minus` reproduces the samples to spectral
/// accuracy for functions analytic in a neighborhood of the line and
/// decaying along it.
pub fn additive_split(grid: &LineGrid, samples: &[C64]) -> (PlusSeries, MinusSeries) {
    additive_split_k(grid, samples, grid.n / 2)
}

fn unwrapped_angles(samples: &[C64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(samples.len());
    let mut prev = samples[0].arg();
    out.push(prev);
    for s in &samples[1..] {
        let d = s.arg() - prev;
        let d = d - (d / (2.0 * PI)).round() * 2.0 * PI;
        prev += d;
        out.push(prev);
    }
    out
}

/// Winding index of the sample curve around the origin, together with the
/// fractional part left over by the nearest-integer rounding. A residual
/// well away from zero means the samples do not close up (the function is
/// not index-clean on this grid).
pub fn winding_index(samples: &[C64]) -> (i64, f64) {
    let ang = unwrapped_angles(samples);
    let w = (ang[ang.len() - 1] - ang[0]) / (2.0 * PI);
    let rounded = w.round();
    (rounded as i64, (w - rounded).abs())
}

/// One factor of a multiplicative split: `exp` of a one-sided log-series.
#[derive(Clone, Debug)]
pub struct ExpFactor<S: OneSided> {
    pub log_series: S,
}

impl<S: OneSided> ExpFactor<S> {
    pub fn eval(&self, alpha: C64) -> C64 {
        self.log_series.eval(alpha).exp()
    }

    pub fn eval_many(&self, alpha: &[C64]) -> Vec<C64> {
        self.log_series.eval_many(alpha).into_iter().map(|v| v.exp()).collect()
    }

    pub fn eval_grid(&self, grid: &LineGrid) -> Vec<C64> {
        self.log_series.eval_grid(grid).into_iter().map(|v| v.exp()).collect()
    }
}

/// Multiplicative split `K = K_plus * K_minus` for an index-zero symbol
/// whose samples stay away from zero. Fails with [`SplitError::NotIndexZero`]
/// when the winding index is nonzero or the argument does not close up.
pub fn multiplicative_split(
    grid: &LineGrid,
    samples: &[C64],
) -> Result<(ExpFactor<PlusSeries>, ExpFactor<MinusSeries>), SplitError> {
    let (winding, residual) = winding_index(samples);
    if winding != 0 || residual > 0.1 {
        return Err(SplitError::NotIndexZero { winding, residual });
    }
    let ang = unwrapped_angles(samples);
    let lg: Vec<C64> = samples
        .iter()
        .zip(&ang)
        .map(|(s, &a)| C64::new(s.norm().ln(), a))
        .collect();
    let (p, m) = additive_split(grid, &lg);
    Ok((ExpFactor { log_series: p }, ExpFactor { log_series: m }))
}

/// Contour radius safely inside the series' convergence disk, and enough
/// quadrature nodes that the aliasing factor `rhat^-nc` is negligible.
fn contour_params(coeffs: &[C64], rhat: Option<f64>, nc: Option<usize>) -> (f64, usize) {
    let rhat = rhat.unwrap_or_else(|| {
        let r = fit_radius(coeffs);
        let grow = if r.is_finite() { (r - 1.0).min(1.0) } else { 1.0 };
        (1.0 + 0.2 * grow).clamp(1.002, 1.2)
    });
    let nc = nc.unwrap_or_else(|| (4 * coeffs.len()).max((60.0 / (rhat - 1.0)).ceil() as usize));
    (rhat, nc)
}

/// Values of `sum_k coeffs[k] w^k` at the `nc` contour points
/// `w_j = rhat exp(2 pi i j / nc)`: one unnormalized inverse transform of
/// the rhat-weighted coefficients, folded mod `nc` since the contour nodes
/// only see `k mod nc`.
fn contour_values(coeffs: &[C64], rhat: f64, nc: usize) -> Vec<C64> {
    let mut buf = vec![C64::new(0.0, 0.0); nc];
    let mut rk = 1.0;
    for (k, &c) in coeffs.iter().enumerate() {
        buf[k % nc] += c * rk;
        rk *= rhat;
    }
    fft_inverse_unnormalized(&mut buf);
    buf
}

/// `[exp(-i alpha len) P]_plus` for a plus-series `P`: kill the carrier,
/// keep the part that is still analytic above the line.
///
/// The contour `|w| = rhat > 1` lies below the line, where the carrier
/// damps, so the integrand stays bounded; the output coefficients come out
/// as first differences of the contour moments.
pub fn window_plus(series: &PlusSeries, len: f64) -> PlusSeries {
    window_plus_detailed(series, len, None, None, None)
}

pub fn window_plus_detailed(
    series: &PlusSeries,
    len: f64,
    rhat: Option<f64>,
    nc: Option<usize>,
    kout: Option<usize>,
) -> PlusSeries {
    let (c, rho) = (series.offset, series.map_scale);
    let (rhat, nc) = contour_params(&series.coeffs, rhat, nc);
    let kout = kout.unwrap_or(series.coeffs.len()).max(1);
    // |w| > 1 on the contour: evaluate only the coefficients above the
    // noise floor, or the dead tail gets amplified by rhat^k
    let eff = &series.coeffs[..trunc_len(&series.coeffs, series.floor)];
    let ic = C64::new(0.0, c);
    let irho = C64::new(0.0, rho);
    let pvals = contour_values(eff, rhat, nc);
    let mut h = Vec::with_capacity(nc);
    for (i, &pv) in pvals.iter().enumerate() {
        let phi = 2.0 * PI * i as f64 / nc as f64;
        let w = rhat * C64::new(0.0, phi).exp();
        let tau = ic + irho * (1.0 + w) / (1.0 - w);
        h.push((-C64::i() * tau * len).exp() * pv / (1.0 - w));
    }
    fft_forward(&mut h);
    let mut m = Vec::with_capacity(kout);
    for (k, v) in h.iter().take(kout).enumerate() {
        m.push(*v / nc as f64 * rhat.powi(-(k as i32)));
    }
    let mut q = vec![C64::new(0.0, 0.0); kout];
    q[0] = m[0];
    for k in 1..kout {
        q[k] = m[k] - m[k - 1];
    }
    PlusSeries::new(c, rho, q, series.floor)
}

/// `[exp(+i alpha len) V]_minus` for a minus-series `V`; mirror image of
/// [`window_plus`].
pub fn window_minus(series: &MinusSeries, len: f64) -> MinusSeries {
    window_minus_detailed(series, len, None, None, None)
}

pub fn window_minus_detailed(
    series: &MinusSeries,
    len: f64,
    rhat: Option<f64>,
    nc: Option<usize>,
    kout: Option<usize>,
) -> MinusSeries {
    let (c, rho) = (series.offset, series.map_scale);
    let (rhat, nc) = contour_params(&series.coeffs, rhat, nc);
    let kout = kout.unwrap_or(series.coeffs.len()).max(1);
    let eff = &series.coeffs[..trunc_len(&series.coeffs, series.floor)];
    let ic = C64::new(0.0, c);
    let irho = C64::new(0.0, rho);
    let pvals = contour_values(eff, rhat, nc);
    let mut h = Vec::with_capacity(nc);
    for (i, &pv) in pvals.iter().enumerate() {
        let phi = 2.0 * PI * i as f64 / nc as f64;
        let w = rhat * C64::new(0.0, phi).exp();
        let tau = ic + irho * (w + 1.0) / (w - 1.0);
        h.push((C64::i() * tau * len).exp() * pv / (w - 1.0));
    }
    fft_forward(&mut h);
    let mut m = Vec::with_capacity(kout);
    for (k, v) in h.iter().take(kout).enumerate() {
        m.push(*v / nc as f64 * rhat.powi(-(k as i32)));
    }
    let mut r = vec![C64::new(0.0, 0.0); kout];
    r[0] = -m[0];
    for k in 1..kout {
        r[k] = m[k - 1] - m[k];
    }
    MinusSeries::new(c, rho, r, series.floor)
}
