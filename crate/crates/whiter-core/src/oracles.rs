//! Independent references used to validate the numerical machinery: exact
//! one-sided series of rational poles, randomized pole sums and rational
//! symbols with analytically known parts and winding, recurrences and closed
//! forms for the two built-in problem families, and the coupling-strength
//! parameter scan.
//!
//! Nothing here shares code with the solver path it checks.

use num_complex::Complex64 as C64;

use crate::analytic_core::{MinusSeries, PlusSeries};

/// Exact series of `1/(alpha - z0)` in the disk variable of the line
/// `Im alpha = offset`; valid when the pole lies below the line.
pub fn rational_pole_plus(offset: f64, map_scale: f64, z0: C64, kmax: usize) -> PlusSeries {
    assert!(z0.im < offset, "pole must lie below the line");
    let ic = C64::new(0.0, offset);
    let irho = C64::new(0.0, map_scale);
    let a0 = irho + ic - z0;
    let w0 = (z0 - ic - irho) / (z0 - ic + irho);
    let beta = 1.0 / w0;
    let mut coeffs = vec![C64::new(0.0, 0.0); kmax];
    coeffs[0] = 1.0 / a0;
    let mut bk = beta;
    for k in 1..kmax {
        coeffs[k] = (bk - bk / beta) / a0;
        bk *= beta;
    }
    PlusSeries::new(offset, map_scale, coeffs, 0.0)
}

/// Exact series of `1/(alpha - z1)` for a pole above the line.
pub fn rational_pole_minus(offset: f64, map_scale: f64, z1: C64, kmax: usize) -> MinusSeries {
    assert!(z1.im > offset, "pole must lie above the line");
    let ic = C64::new(0.0, offset);
    let irho = C64::new(0.0, map_scale);
    let a0 = -irho + ic - z1;
    let w0 = (z1 - ic + irho) / (z1 - ic - irho);
    let beta = 1.0 / w0;
    let mut coeffs = vec![C64::new(0.0, 0.0); kmax];
    coeffs[0] = 1.0 / a0;
    let mut bk = beta;
    for k in 1..kmax {
        coeffs[k] = (bk - bk / beta) / a0;
        bk *= beta;
    }
    MinusSeries::new(offset, map_scale, coeffs, 0.0)
}

/// A sum of simple poles `sum_j r_j/(alpha - z_j)`: the simplest family of
/// class functions whose one-sided parts are known exactly (partial
/// fractions sort by pole side).
#[derive(Clone, Debug)]
pub struct PoleSum {
    /// (location, residue) pairs
    pub terms: Vec<(C64, C64)>,
}

impl PoleSum {
    pub fn eval(&self, alpha: C64) -> C64 {
        self.terms.iter().map(|&(z, r)| r / (alpha - z)).sum()
    }

    /// Terms analytic above the line (poles strictly below it).
    pub fn plus_part(&self, line: f64) -> PoleSum {
        PoleSum { terms: self.terms.iter().copied().filter(|t| t.0.im < line).collect() }
    }

    /// Terms analytic below the line.
    pub fn minus_part(&self, line: f64) -> PoleSum {
        PoleSum { terms: self.terms.iter().copied().filter(|t| t.0.im > line).collect() }
    }

    /// Random sum with one to four poles on each side of the line, all kept
    /// at least `gap` away from it. `uniform` supplies numbers in `[0, 1)`.
    pub fn random(line: f64, gap: f64, uniform: &mut impl FnMut() -> f64) -> PoleSum {
        let mut terms = Vec::new();
        for side in [1.0, -1.0] {
            let count = 1 + (uniform() * 4.0) as usize;
            for _ in 0..count.min(4) {
                let re = -3.0 + 6.0 * uniform();
                let im = line + side * (gap + 2.75 * uniform());
                let cre = -2.0 + 4.0 * uniform();
                let cim = -2.0 + 4.0 * uniform();
                terms.push((C64::new(re, im), C64::new(cre, cim)));
            }
        }
        PoleSum { terms }
    }
}

/// A rational symbol `prod (alpha - z_j) / prod (alpha - p_j)` with equal
/// numerator and denominator degree, so it tends to one at the line ends.
#[derive(Clone, Debug)]
pub struct RationalSymbol {
    pub zeros: Vec<C64>,
    pub poles: Vec<C64>,
}

impl RationalSymbol {
    pub fn eval(&self, alpha: C64) -> C64 {
        let num: C64 = self.zeros.iter().map(|&z| alpha - z).product();
        let den: C64 = self.poles.iter().map(|&p| alpha - p).product();
        num / den
    }

    /// Winding index along the line, by the argument principle: zeros above
    /// the line count plus one, poles above count minus one.
    pub fn winding_on(&self, line: f64) -> i64 {
        let z_up = self.zeros.iter().filter(|z| z.im > line).count() as i64;
        let p_up = self.poles.iter().filter(|p| p.im > line).count() as i64;
        z_up - p_up
    }

    /// Random symbol with `1..=3` zero/pole pairs placed `gap` away from the
    /// line; each pair shares a side, which forces winding index zero.
    pub fn random_index_zero(line: f64, gap: f64, uniform: &mut impl FnMut() -> f64) -> Self {
        let pairs = 1 + (uniform() * 3.0) as usize;
        let mut zeros = Vec::new();
        let mut poles = Vec::new();
        for _ in 0..pairs.min(3) {
            let side = if uniform() < 0.5 { 1.0 } else { -1.0 };
            zeros.push(C64::new(
              -3.0 + 6.0 * uniform(),
              line + side * (gap + 2.5 * uniform()),
            ));
            poles.push(C64::new(
              -3.0 + 6.0 * uniform(),
              line + side * (gap + 2.5 * uniform()),
            ));
        }
        RationalSymbol { zeros, poles }
    }

    /// Random symbol with unconstrained sides; the winding index is whatever
    /// [`Self::winding_on`] says it is.
    pub fn random(line: f64, gap: f64, uniform: &mut impl FnMut() -> f64) -> Self {
        let pairs = 1 + (uniform() * 3.0) as usize;
        let mut zeros = Vec::new();
        let mut poles = Vec::new();
        for _ in 0..pairs.min(3) {
            for list in [&mut zeros, &mut poles] {
                let side = if uniform() < 0.5 { 1.0 } else { -1.0 };
                list.push(C64::new(
                    -3.0 + 6.0 * uniform(),
                    line + side * (gap + 2.5 * uniform()),
                ));
            }
        }
        RationalSymbol { zeros, poles }
    }
}

// ---------------------------------------------------------------------------
// first built-in family: rational kernel on a strip

/// Closed-form reference for the first built-in family. All constants come
/// from the class conditions at the kernel zeros `-i mu` and `+i mu`.
#[derive(Clone, Debug)]
pub struct StripExampleReference {
    pub lam: C64,
    pub len: f64,
    pub mu: C64,
    /// `exp(-mu len)`: decay picked up when content crosses the kernel zero
    pub zero_decay: C64,
    /// per-half-cycle coupling; the true contraction rate is its square
    pub coupling: C64,
    pub c_seed: C64,
    pub d_seed: C64,
    pub k1_fix: C64,
    pub k2_fix: C64,
    /// `exp(-lam len)`: the loose advertised rate (its square bounds the
    /// increment ratio with margin)
    pub decay_bound: C64,
}

pub fn example1_exact(lam: C64, len: f64) -> StripExampleReference {
    let mu = (lam * lam + 0.5).sqrt();
    let big_b = (-mu * len).exp();
    let bt = big_b * (mu - lam) / (mu + lam);
    let ct = (lam - mu) / (mu + 1.0);
    let dt = (mu - lam) / (mu + 2.0);
    let one_b = big_b + 1.0;
    let k1_fix = one_b * (dt - bt * ct) / (1.0 - bt * bt);
    let k2_fix = one_b * (ct - bt * dt) / (1.0 - bt * bt);
    StripExampleReference {
        lam,
        len,
        mu,
        zero_decay: big_b,
        coupling: bt,
        c_seed: ct,
        d_seed: dt,
        k1_fix,
        k2_fix,
        decay_bound: (-lam * len).exp(),
    }
}

impl StripExampleReference {
    pub fn kernel(&self, a: C64) -> C64 {
        (a * a + self.mu * self.mu) / (a * a + self.lam * self.lam)
    }

    /// Exact lower unknown of the second row, on any line of the strip.
    pub fn phi(&self, a: C64) -> C64 {
        let ilam = C64::i() * self.lam;
        let smooth = 1.0 / (a - C64::i()) + self.k2_fix / (a + ilam);
        let carried = self.k1_fix / (a - ilam) + 1.0 / (a - C64::i());
        (smooth + (-C64::i() * a * self.len).exp() * carried) / self.kernel(a)
    }

    /// Exact upper unknown of the first row.
    pub fn psi(&self, a: C64) -> C64 {
        let ilam = C64::i() * self.lam;
        let two_i = C64::new(0.0, 2.0);
        let smooth = -1.0 / (a + two_i) + self.k1_fix / (a - ilam);
        let carried = self.k2_fix / (a + ilam) - 1.0 / (a + two_i);
        (smooth + (C64::i() * a * self.len).exp() * carried) / self.kernel(a)
    }
}

/// The residue-constant recurrence for the first family. Entry `0` of the
/// `k1` sequence is undefined (the iteration produces `k2` first) and is
/// filled with NaN; alignment matches the solver's extraction indices.
pub fn example1_iterates(lam: C64, len: f64, n: usize) -> (Vec<C64>, Vec<C64>) {
    let r = example1_exact(lam, len);
    let one_b = r.zero_decay + 1.0;
    let mut k1 = vec![C64::new(f64::NAN, f64::NAN)];
    let mut k2 = vec![r.c_seed];
    for i in 1..=n {
        let k1i = one_b * r.d_seed - r.coupling * k2[i - 1];
        k1.push(k1i);
        k2.push(one_b * r.c_seed - r.coupling * k1i);
    }
    (k1, k2)
}

// ---------------------------------------------------------------------------
// second built-in family: coupled half-line convolution pair

/// Closed-form reference for the second built-in family.
#[derive(Clone, Debug)]
pub struct HalfLinePairReference {
    pub lam: f64,
    pub len: f64,
    pub l0: f64,
    pub l1: f64,
    /// `exp(-l0 len)`
    pub zero_decay: f64,
    /// cross-coupling constant; one full cycle contracts by `b^2`
    pub b: f64,
    pub a1: C64,
    pub a2: C64,
    pub rho2: C64,
    pub rho0f: C64,
    pub d1: C64,
    pub d2: C64,
    pub c1: C64,
    pub c2: C64,
}

pub fn example2_exact(lam: f64, len: f64) -> HalfLinePairReference {
    assert!(lam < 0.25, "coupling parameter must stay below 1/4");
    let l0 = (1.0 - 2.0 * lam).sqrt();
    let l1 = (1.0 - 4.0 * lam).sqrt();
    let big_b = (-l0 * len).exp();
    let b = 2.0 * lam * big_b / ((l0 + 1.0) * (l0 + l1));
    let i = C64::i();
    let a1 = 3.0 * i / (2.0 + l0);
    let a2 = i * (l0 - 1.0) / (l0 + 2.0);
    let rho2 = 2.0 * i * lam / ((l0 - 2.0) * (l1 + 2.0));
    let rho0f = 2.0 * i * lam / ((2.0 - l0) * (l0 + l1));
    let yf_at_il0 = (-2.0 * len).exp() * rho2 / (i * l0 + C64::new(0.0, 2.0))
        + big_b * rho0f / (i * l0 + i * l0);
    let d1 = 2.0 * i * l0 * b * yf_at_il0;
    let d2 = b * a2;
    let c1 = (d1 + b * d2) / (1.0 + b * b);
    let c2 = d2 - b * c1;
    HalfLinePairReference { lam, len, l0, l1, zero_decay: big_b, b, a1, a2, rho2, rho0f, d1, d2, c1, c2 }
}

impl HalfLinePairReference {
    /// Forcing channel of the second row after transport: two moved poles.
    pub fn yf(&self, a: C64) -> C64 {
        let i = C64::i();
        (-2.0 * self.len).exp() * self.rho2 / (a + 2.0 * i)
            + self.zero_decay * self.rho0f / (a + i * self.l0)
    }

    pub fn u2(&self, a: C64) -> C64 {
        let i = C64::i();
        (self.yf(a) + self.c2 / (a + i * self.l0)) * (a + i * self.l0) / (a + i * self.l1)
    }

    fn cross(&self, a: C64) -> C64 {
        let i = C64::i();
        2.0 * self.lam * self.u2(a) / ((a + i) * (a - i * self.l0))
    }

    pub fn u1(&self, a: C64) -> C64 {
        let i = C64::i();
        (self.a1 / (a + 2.0 * i)
            + self.c1 / (a - i * self.l0)
            + (i * a * self.len).exp() * self.cross(a))
            * (a + i)
            / (a + i * self.l0)
    }

    pub fn h1(&self, a: C64) -> C64 {
        -(self.a2 - self.c1) / (a - C64::i())
    }

    pub fn h2(&self, a: C64) -> C64 {
        let i = C64::i();
        let h = 2.0 * self.lam * (i / (a + 2.0 * i) + self.h1(a))
            / ((a + i * self.l0) * (a - i * self.l1));
        let ydet = self.yf(a) + self.c2 / (a + i * self.l0);
        let dminus = (a - i * self.l1) / (a - i * self.l0);
        -dminus * ((-i * a * self.len).exp() * h - ydet)
    }

    /// Value of the first coupling constant after two full updates of the
    /// seeded recurrence, written out as the explicit polynomial in `b`.
    pub fn seeded_c1_step2_polynomial(&self) -> C64 {
        let b = self.b;
        self.d1 + self.d2 * b - self.d1 * b * b - self.d2 * b * b * b
            + self.d1 * b * b * b * b
    }
}

/// The seeded constant recurrence of the second family: starts from
/// `(d1, d2 - b d1)` and alternates `c1 <- d1 + b c2`, `c2 <- d2 - b c1`.
/// Returns the sequences after `0..=n` updates.
pub fn example2_iterates(lam: f64, len: f64, n: usize) -> (Vec<C64>, Vec<C64>) {
    let r = example2_exact(lam, len);
    let mut p1 = vec![r.d1];
    let mut p2 = vec![r.d2 - r.b * r.d1];
    for k in 1..=n {
        let n1 = r.d1 + r.b * p2[k - 1];
        p1.push(n1);
        p2.push(r.d2 - r.b * n1);
    }
    (p1, p2)
}

// ---------------------------------------------------------------------------
// parameter scan

#[derive(Clone, Copy, Debug)]
pub struct ScanResult {
    /// largest squared cross-coupling over the scanned rectangle
    pub max_coupling_sq: f64,
    /// (lam, len) where the maximum is attained
    pub at: (f64, f64),
}

/// Scan `|b|^2` for the second family over an `n x n` grid of the parameter
/// rectangle `lam in [-50, 0.25], len in [1e-4, 10]`. Entirely analytic.
pub fn contraction_scan(n: usize) -> ScanResult {
    assert!(n >= 2);
    let mut best = ScanResult { max_coupling_sq: 0.0, at: (0.0, 0.0) };
    for i in 0..n {
        let lam = -50.0 + (0.25 + 50.0) * i as f64 / (n - 1) as f64;
        let l0 = (1.0 - 2.0 * lam).sqrt();
        let l1 = (1.0 - 4.0 * lam).sqrt();
        for j in 0..n {
            let len = 1e-4 + (10.0 - 1e-4) * j as f64 / (n - 1) as f64;
            let b = 2.0 * lam * (-l0 * len).exp() / ((l0 + 1.0) * (l0 + l1));
            let b2 = b * b;
            if b2 > best.max_coupling_sq {
                best = ScanResult { max_coupling_sq: b2, at: (lam, len) };
            }
        }
    }
    best
}
