//! The strip pipeline: reduction of a two-row triangular system with an
//! exponentially coupled off-diagonal to a fixed-point iteration between
//! two one-sided unknowns, plus convergence estimation, recovery of the
//! secondary unknowns, and residual checks against the original rows.
//!
//! The system solved here, on working lines `a <= 0 <= b` inside the common
//! analyticity strip, is
//!
//! ```text
//!   Phi0_minus = A Psi0_plus + B exp(+i alpha len) PsiL_plus + f1
//!   PhiL_minus = C exp(-i alpha len) Psi0_plus + f2
//! ```
//!
//! with `f2` supplied in slot form `f2 = f2_smooth + exp(-i alpha len) f2_carrier`
//! so that forcing terms with carrier content never have to be resolved as
//! raw oscillatory samples. With `B = B_plus B_minus` the reduction is
//! `f4 = f1/B_minus`, `K1 = A/(C B_minus)`, `K3 = A/B_minus`,
//! `f3 = K1 f2 - exp(-i alpha len) f4`, and the iteration alternates
//!
//! ```text
//!   PhiL^0 = (1/K1-)[ f3^- / K1+ ]^-
//!   S^n    = (K1add+ PhiL^{n-1})^+                               (line a)
//!   Psi0^n = (1/K3+)[ (-f4^+ + e^{ial}(S^n - f3^+)) / K3- ]^+    (line b)
//!   T^n    = (K3add- Psi0^n)^-                                   (line b)
//!   PhiL^n = (1/K1-)[ (f3^- + e^{-ial}(T^n + f4^-)) / K1+ ]^-    (line a)
//! ```
//!
//! with recovery `PsiL = (f3^+ - S)/B_plus`, `Phi0 = B_minus (T + f4^-)`.
//!
//! Iterates are held in slot form `u + exp(+-i alpha len) v`: the slots are
//! individually one-sided series and the carrier is reattached only when
//! samples of the total are needed. Assembling the raw product on a grid
//! would lose the carrier phase at the far nodes of the line.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::analytic_core::{
    fourier_coeffs, max_abs, norm_on_line, LineGrid, MinusSeries, OneSided, PlusSeries, TwoSided,
};
use crate::splitting::{
    additive_split, multiplicative_split, window_minus, window_plus, SplitError,
};

pub type SymbolFn = Box<dyn Fn(C64) -> C64>;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("class violation: {0}")]
    ClassViolation(String),
}

impl From<SplitError> for SolveError {
    fn from(e: SplitError) -> Self {
        SolveError::ClassViolation(e.to_string())
    }
}

/// Raw description of the two-row system.
pub struct SystemData {
    pub a_sym: SymbolFn,
    pub b_sym: SymbolFn,
    pub c_sym: SymbolFn,
    pub f1: SymbolFn,
    pub f2_smooth: SymbolFn,
    /// optional slot multiplying `exp(-i alpha len)` inside `f2`
    pub f2_carrier: Option<SymbolFn>,
    /// working lines `(a, b)` with `a <= 0 <= b`
    pub lines: (f64, f64),
    pub carrier_len: f64,
    pub grid_n: usize,
    pub map_scale: f64,
}

/// Everything the iteration needs, sampled and factorized up front.
pub struct StripProblem {
    pub ga: LineGrid,
    pub gb: LineGrid,
    pub g0: LineGrid,
    pub carrier_len: f64,
    k1p_a: Vec<C64>,
    k1m_a: Vec<C64>,
    k3p_b: Vec<C64>,
    k3m_b: Vec<C64>,
    k1m_0: Vec<C64>,
    k3p_0: Vec<C64>,
    k1_0: Vec<C64>,
    k3_0: Vec<C64>,
    k1add_plus_a: Vec<C64>,
    k3add_minus_b: Vec<C64>,
    f3p: PlusSeries,
    f3m: TwoSided,
    f3w_a: Vec<C64>,
    f3w_0: Vec<C64>,
    f4p: PlusSeries,
    f4m: MinusSeries,
    a_0: Vec<C64>,
    bp_0: Vec<C64>,
    bm_0: Vec<C64>,
    c_0: Vec<C64>,
    f1_0: Vec<C64>,
    f2_0: Vec<C64>,
}

/// One iterate of the lower-row unknown, in slot form on line `a`.
pub struct PhiState {
    pub smooth_a: Vec<C64>,
    /// slot multiplying `exp(-i alpha len)`
    pub carrier_slot_a: Vec<C64>,
    pub mu2: MinusSeries,
    pub corr: PlusSeries,
}

/// One iterate of the upper-row unknown, in slot form on line `b`.
pub struct PsiState {
    pub smooth_b: Vec<C64>,
    /// slot multiplying `exp(+i alpha len)`
    pub carrier_slot_b: Vec<C64>,
    pub s: PlusSeries,
    pub pu2: PlusSeries,
    pub corr2: MinusSeries,
}

/// Pieces of the last completed cycle, enough to assemble every output.
/// The optional fields are absent when no full cycle has run.
pub struct FinalState {
    pub s: Option<PlusSeries>,
    pub t: Option<MinusSeries>,
    pub mu2: MinusSeries,
    pub corr: PlusSeries,
    pub pu2: Option<PlusSeries>,
    pub corr2: Option<MinusSeries>,
}

#[derive(Clone, Copy, Debug)]
pub struct ConvergenceEstimate {
    pub d1: f64,
    pub eps1: f64,
    pub d2: f64,
    pub eps2: f64,
    pub q: f64,
}

pub struct SolveOutput {
    /// lower-unknown samples on line `a`, iterates `0..=iterations`
    pub phi_line_a: Vec<Vec<C64>>,
    /// upper-unknown samples on line `b`, iterates `1..=iterations`
    pub psi_line_b: Vec<Vec<C64>>,
    /// plus-projection samples on line `a`, one per phi iterate
    pub s_line_a: Vec<Vec<C64>>,
    /// minus-projection samples on line `b`, one per completed cycle
    pub t_line_b: Vec<Vec<C64>>,
    pub increments: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub diverged: bool,
    pub fin: FinalState,
}

/// All four unknowns sampled on the output line `Im alpha = 0`. Secondary
/// unknowns are zero until a full cycle has produced them.
pub struct RealLineOutputs {
    pub phi_l: Vec<C64>,
    pub psi_0: Vec<C64>,
    pub phi_0: Vec<C64>,
    pub psi_l: Vec<C64>,
}

fn vdiv(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(&x, &y)| x / y).collect()
}

fn vmul(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(&x, &y)| x * y).collect()
}

fn vadd(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

fn carrier_up(grid: &LineGrid, len: f64) -> Vec<C64> {
    grid.alpha.iter().map(|&a| (C64::i() * a * len).exp()).collect()
}

fn carrier_down(grid: &LineGrid, len: f64) -> Vec<C64> {
    grid.alpha.iter().map(|&a| (-C64::i() * a * len).exp()).collect()
}

/// Build the iteration-ready problem from the raw system description.
pub fn reduce(data: &SystemData) -> Result<StripProblem, SolveError> {
    let (la, lb) = data.lines;
    if !(la <= 0.0 && 0.0 <= lb) {
        return Err(SolveError::Config(format!(
            "working lines ({la}, {lb}) must straddle the output line Im alpha = 0"
        )));
    }
    if !(data.carrier_len > 0.0) {
        return Err(SolveError::Config("carrier length must be positive".into()));
    }
    let ga = LineGrid::new(la, data.map_scale, data.grid_n);
    let gb = LineGrid::new(lb, data.map_scale, data.grid_n);
    let g0 = LineGrid::new(0.0, data.map_scale, data.grid_n);
    let len = data.carrier_len;

    // factor B separately on every line where a factor is consumed; the
    // normalized factorization is unique so the pieces agree
    let bm_a = {
        let b_a = ga.sample(|z| (data.b_sym)(z));
        multiplicative_split(&ga, &b_a)?.1.eval_grid(&ga)
    };
    let bm_b = {
        let b_b = gb.sample(|z| (data.b_sym)(z));
        multiplicative_split(&gb, &b_b)?.1.eval_grid(&gb)
    };
    let (bp_0, bm_0) = {
        let b_0 = g0.sample(|z| (data.b_sym)(z));
        let (p, m) = multiplicative_split(&g0, &b_0)?;
        (p.eval_grid(&g0), m.eval_grid(&g0))
    };

    let a_a = ga.sample(|z| (data.a_sym)(z));
    let c_a = ga.sample(|z| (data.c_sym)(z));
    let a_b = gb.sample(|z| (data.a_sym)(z));
    let a_0 = g0.sample(|z| (data.a_sym)(z));
    let c_0 = g0.sample(|z| (data.c_sym)(z));

    let k1_a: Vec<C64> = (0..ga.n).map(|i| a_a[i] / (c_a[i] * bm_a[i])).collect();
    let k3_b: Vec<C64> = (0..gb.n).map(|i| a_b[i] / bm_b[i]).collect();
    let k1_0: Vec<C64> = (0..g0.n).map(|i| a_0[i] / (c_0[i] * bm_0[i])).collect();
    let k3_0: Vec<C64> = (0..g0.n).map(|i| a_0[i] / bm_0[i]).collect();

    let (k1p_fac, k1m_fac) = multiplicative_split(&ga, &k1_a)?;
    let (k3p_fac, k3m_fac) = multiplicative_split(&gb, &k3_b)?;
    let k1p_a = k1p_fac.eval_grid(&ga);
    let k1m_a = k1m_fac.eval_grid(&ga);
    let k3p_b = k3p_fac.eval_grid(&gb);
    let k3m_b = k3m_fac.eval_grid(&gb);
    let k1m_0 = multiplicative_split(&g0, &k1_0)?.1.eval_grid(&g0);
    let k3p_0 = multiplicative_split(&g0, &k3_0)?.0.eval_grid(&g0);

    // decaying additive parts of the kernels: split, then remove the shared
    // constant so the parts vanish at the line ends
    let k1add_plus_a = {
        let (mut p1, _) = additive_split(&ga, &k1_a);
        let delta: C64 = fourier_coeffs(&ga, &k1_a).iter().sum();
        p1.coeffs[0] -= delta / 2.0;
        p1.eval_grid(&ga)
    };
    let k3add_minus_b = {
        let (_, mut m3) = additive_split(&gb, &k3_b);
        let delta: C64 = fourier_coeffs(&gb, &k3_b).iter().sum();
        m3.coeffs[0] -= delta / 2.0;
        m3.eval_grid(&gb)
    };

    // forcing reduction on line a
    let f1_a = ga.sample(|z| (data.f1)(z));
    let f4_a = vdiv(&f1_a, &bm_a);
    let (f4p, f4m) = additive_split(&ga, &f4_a);

    let f2u_a = ga.sample(|z| (data.f2_smooth)(z));
    let f2w_a: Vec<C64> = match &data.f2_carrier {
        Some(f) => ga.sample(|z| f(z)),
        None => vec![C64::new(0.0, 0.0); ga.n],
    };
    let f3u_a = vmul(&k1_a, &f2u_a);
    let f3w_raw: Vec<C64> = (0..ga.n).map(|i| k1_a[i] * f2w_a[i] - f4_a[i]).collect();
    // a slot that only holds cancellation roundoff is treated as empty
    let fscale = max_abs(&f3u_a).max(max_abs(&f4_a));
    let carrier_forcing = max_abs(&f3w_raw) > 1e-12 * fscale;
    let f3w_a = if carrier_forcing { f3w_raw } else { vec![C64::new(0.0, 0.0); ga.n] };

    let (pu, mu) = additive_split(&ga, &f3u_a);
    let mut f3p = pu;
    let mut f3m = TwoSided { plus: None, minus: Some(mu) };
    if carrier_forcing {
        let (pw, _) = additive_split(&ga, &f3w_a);
        let qw = window_plus(&pw, len);
        f3p = f3p.add(&qw);
        f3m.plus = Some(qw.scale_by(C64::new(-1.0, 0.0)));
    }

    // real-line views of the forcing data
    let f1_0 = g0.sample(|z| (data.f1)(z));
    let f4_0 = vdiv(&f1_0, &bm_0);
    let f2u_0 = g0.sample(|z| (data.f2_smooth)(z));
    let f2w_0: Vec<C64> = match &data.f2_carrier {
        Some(f) => g0.sample(|z| f(z)),
        None => vec![C64::new(0.0, 0.0); g0.n],
    };
    let down_0 = carrier_down(&g0, len);
    let f2_0: Vec<C64> =
        (0..g0.n).map(|i| f2u_0[i] + down_0[i] * f2w_0[i]).collect();
    let f3w_0: Vec<C64> = if carrier_forcing {
        (0..g0.n).map(|i| k1_0[i] * f2w_0[i] - f4_0[i]).collect()
    } else {
        vec![C64::new(0.0, 0.0); g0.n]
    };

    Ok(StripProblem {
        ga,
        gb,
        g0,
        carrier_len: len,
        k1p_a,
        k1m_a,
        k3p_b,
        k3m_b,
        k1m_0,
        k3p_0,
        k1_0,
        k3_0,
        k1add_plus_a,
        k3add_minus_b,
        f3p,
        f3m,
        f3w_a,
        f3w_0,
        f4p,
        f4m,
        a_0,
        bp_0,
        bm_0,
        c_0,
        f1_0,
        f2_0,
    })
}

impl StripProblem {
    fn phi_step(&self, t: Option<&MinusSeries>) -> PhiState {
        let ga = &self.ga;
        let w_slot: Vec<C64> = match t {
            None => self.f3w_a.clone(),
            Some(t) => {
                let t_a = t.eval_many(&ga.alpha);
                let f4m_a = self.f4m.eval_grid(ga);
                (0..ga.n).map(|i| self.f3w_a[i] + t_a[i] + f4m_a[i]).collect()
            }
        };
        let u = vdiv(&self.f3m.eval_grid(ga), &self.k1p_a);
        let w = vdiv(&w_slot, &self.k1p_a);
        let (_, mu2) = additive_split(ga, &u);
        let (pw, _) = additive_split(ga, &w);
        let corr = window_plus(&pw, self.carrier_len).scale_by(C64::new(-1.0, 0.0));
        let smooth_a = vdiv(&vadd(&mu2.eval_grid(ga), &corr.eval_grid(ga)), &self.k1m_a);
        let carrier_slot_a = vdiv(&w, &self.k1m_a);
        PhiState { smooth_a, carrier_slot_a, mu2, corr }
    }

    /// The zeroth iterate: forcing only, no transferred content yet.
    pub fn initial_phi(&self) -> PhiState {
        self.phi_step(None)
    }

    /// Plus-project the lower unknown through the first kernel and solve the
    /// upper row on line `b`.
    pub fn iterate_psi(&self, phi: &PhiState) -> PsiState {
        let (ga, gb, len) = (&self.ga, &self.gb, self.carrier_len);
        let gu = vmul(&self.k1add_plus_a, &phi.smooth_a);
        let gw = vmul(&self.k1add_plus_a, &phi.carrier_slot_a);
        let (pu, _) = additive_split(ga, &gu);
        let (pw, _) = additive_split(ga, &gw);
        let s = pu.add(&window_plus(&pw, len));
        let s_b: Vec<C64> = {
            let sv = s.eval_many(&gb.alpha);
            let fv = self.f3p.eval_many(&gb.alpha);
            (0..gb.n).map(|i| sv[i] - fv[i]).collect()
        };
        let u_b: Vec<C64> = {
            let f4v = self.f4p.eval_many(&gb.alpha);
            (0..gb.n).map(|i| -f4v[i] / self.k3m_b[i]).collect()
        };
        let v_b = vdiv(&s_b, &self.k3m_b);
        let (pu2, _) = additive_split(gb, &u_b);
        let (_, mv) = additive_split(gb, &v_b);
        let corr2 = window_minus(&mv, len).scale_by(C64::new(-1.0, 0.0));
        let smooth_b = vdiv(&vadd(&pu2.eval_grid(gb), &corr2.eval_grid(gb)), &self.k3p_b);
        let carrier_slot_b = vdiv(&v_b, &self.k3p_b);
        PsiState { smooth_b, carrier_slot_b, s, pu2, corr2 }
    }

    /// Minus-project the upper unknown through the second kernel.
    pub fn transfer_minus(&self, psi: &PsiState) -> MinusSeries {
        let (gb, len) = (&self.gb, self.carrier_len);
        let gu = vmul(&self.k3add_minus_b, &psi.smooth_b);
        let gv = vmul(&self.k3add_minus_b, &psi.carrier_slot_b);
        let (_, mu) = additive_split(gb, &gu);
        let (_, mv) = additive_split(gb, &gv);
        mu.add(&window_minus(&mv, len))
    }

    /// Feed the transferred content back into the lower row.
    pub fn iterate_phi(&self, t: &MinusSeries) -> PhiState {
        self.phi_step(Some(t))
    }

    /// Samples of the lower unknown on line `a` (carrier reattached).
    pub fn phi_samples(&self, phi: &PhiState) -> Vec<C64> {
        let down = carrier_down(&self.ga, self.carrier_len);
        (0..self.ga.n)
            .map(|i| phi.smooth_a[i] + down[i] * phi.carrier_slot_a[i])
            .collect()
    }

    /// Samples of the upper unknown on line `b`.
    pub fn psi_samples(&self, psi: &PsiState) -> Vec<C64> {
        let up = carrier_up(&self.gb, self.carrier_len);
        (0..self.gb.n)
            .map(|i| psi.smooth_b[i] + up[i] * psi.carrier_slot_b[i])
            .collect()
    }

    /// Run the iteration. `stop_tol` is relative to the current iterate's
    /// norm; zero disables early stopping and runs all `max_iter` cycles.
    pub fn solve(&self, max_iter: usize, stop_tol: f64) -> SolveOutput {
        let mut phi = self.initial_phi();
        let mut fin = FinalState {
            s: None,
            t: None,
            mu2: phi.mu2.clone(),
            corr: phi.corr.clone(),
            pu2: None,
            corr2: None,
        };
        let mut phi_hist = vec![self.phi_samples(&phi)];
        let mut psi_hist = Vec::new();
        let mut s_hist = Vec::new();
        let mut t_hist = Vec::new();
        let mut increments = Vec::new();
        let mut converged = false;
        let mut diverged = false;
        let mut iterations = 0;

        for k in 1..=max_iter {
            let psi = self.iterate_psi(&phi);
            psi_hist.push(self.psi_samples(&psi));
            s_hist.push(psi.s.eval_grid(&self.ga));
            let t = self.transfer_minus(&psi);
            t_hist.push(t.eval_grid(&self.gb));
            phi = self.iterate_phi(&t);
            phi_hist.push(self.phi_samples(&phi));
            fin = FinalState {
                s: Some(psi.s),
                t: Some(t),
                mu2: phi.mu2.clone(),
                corr: phi.corr.clone(),
                pu2: Some(psi.pu2),
                corr2: Some(psi.corr2),
            };
            iterations = k;

            let last = &phi_hist[phi_hist.len() - 1];
            let prev = &phi_hist[phi_hist.len() - 2];
            let diff: Vec<C64> = (0..last.len()).map(|i| last[i] - prev[i]).collect();
            let inc = norm_on_line(&self.ga, &diff);
            increments.push(inc);
            let base = norm_on_line(&self.ga, last);
            if stop_tol > 0.0 && inc <= stop_tol * base {
                converged = true;
                break;
            }
            // three consecutive growing increments well above the first one
            let m = increments.len();
            if m >= 3
                && increments[m - 1] > increments[m - 2]
                && increments[m - 2] > increments[m - 3]
                && increments[m - 1] > 10.0 * increments[0]
            {
                diverged = true;
                break;
            }
        }
        // one more plus projection so the last phi iterate has its own entry
        s_hist.push(self.iterate_psi(&phi).s.eval_grid(&self.ga));

        SolveOutput {
            phi_line_a: phi_hist,
            psi_line_b: psi_hist,
            s_line_a: s_hist,
            t_line_b: t_hist,
            increments,
            iterations,
            converged,
            diverged,
            fin,
        }
    }

    /// The a priori contraction estimate of one full cycle: kernel-factor
    /// gains times the carrier decay between the working lines.
    pub fn estimate_convergence(&self) -> ConvergenceEstimate {
        let e_up = (self.ga.offset * self.carrier_len).exp();
        let e_dn = (-self.gb.offset * self.carrier_len).exp();
        let d1 = max_abs(&self.k1p_a);
        let eps1 = e_up * self.k1p_a.iter().map(|v| 1.0 / v.norm()).fold(0.0, f64::max);
        let d2 = max_abs(&self.k3m_b);
        let eps2 = e_dn * self.k3m_b.iter().map(|v| 1.0 / v.norm()).fold(0.0, f64::max);
        ConvergenceEstimate { d1, eps1, d2, eps2, q: d1 * eps1 * d2 * eps2 }
    }

    fn slot_values_0(&self, fin: &FinalState) -> (Vec<C64>, Vec<C64>, Vec<C64>, Vec<C64>) {
        let x = &self.g0.alpha;
        let zero = vec![C64::new(0.0, 0.0); self.g0.n];
        let s_0 = fin.s.as_ref().map_or(zero.clone(), |s| s.eval_many(x));
        let t_0 = fin.t.as_ref().map_or(zero, |t| t.eval_many(x));
        let f3p_0 = self.f3p.eval_many(x);
        let f4m_0 = self.f4m.eval_many(x);
        (s_0, t_0, f3p_0, f4m_0)
    }

    /// The two secondary unknowns on the output line, recovered from the
    /// final projections: upper-row pair `(Phi0, PsiL)`.
    pub fn recover_secondary(&self, fin: &FinalState) -> (Vec<C64>, Vec<C64>) {
        let n = self.g0.n;
        let (s_0, t_0, f3p_0, f4m_0) = self.slot_values_0(fin);
        let phi_0 = if fin.t.is_some() {
            (0..n).map(|i| self.bm_0[i] * (t_0[i] + f4m_0[i])).collect()
        } else {
            vec![C64::new(0.0, 0.0); n]
        };
        let psi_l = if fin.s.is_some() {
            (0..n).map(|i| (f3p_0[i] - s_0[i]) / self.bp_0[i]).collect()
        } else {
            vec![C64::new(0.0, 0.0); n]
        };
        (phi_0, psi_l)
    }

    /// All four unknowns on the output line. Each total is assembled from
    /// pure one-sided pieces evaluated on their valid sides; the slot
    /// denominators are the factors refactorized on this line.
    pub fn outputs_real_line(&self, fin: &FinalState) -> RealLineOutputs {
        let n = self.g0.n;
        let x = &self.g0.alpha;
        let len = self.carrier_len;
        let (s_0, t_0, f3p_0, f4m_0) = self.slot_values_0(fin);
        let down = carrier_down(&self.g0, len);
        let up = carrier_up(&self.g0, len);

        let mu2_0 = fin.mu2.eval_many(x);
        let corr_0 = fin.corr.eval_many(x);
        let w_slot_0: Vec<C64> = if fin.t.is_some() {
            (0..n).map(|i| self.f3w_0[i] + t_0[i] + f4m_0[i]).collect()
        } else {
            self.f3w_0.clone()
        };
        let phi_l: Vec<C64> = (0..n)
            .map(|i| {
                (mu2_0[i] + corr_0[i]) / self.k1m_0[i] + down[i] * w_slot_0[i] / self.k1_0[i]
            })
            .collect();

        let psi_0: Vec<C64> = match (&fin.pu2, &fin.corr2) {
            (Some(pu2), Some(corr2)) => {
                let pu2_0 = pu2.eval_many(x);
                let corr2_0 = corr2.eval_many(x);
                (0..n)
                    .map(|i| {
                        (pu2_0[i] + corr2_0[i]) / self.k3p_0[i]
                            + up[i] * (s_0[i] - f3p_0[i]) / self.k3_0[i]
                    })
                    .collect()
            }
            _ => vec![C64::new(0.0, 0.0); n],
        };

        let (phi_0, psi_l) = self.recover_secondary(fin);
        RealLineOutputs { phi_l, psi_0, phi_0, psi_l }
    }

    /// L2 norms of the two system rows on the output line, and the forcing
    /// scale to compare them against. `None` until a full cycle has run.
    pub fn residual(&self, fin: &FinalState) -> Option<(f64, f64, f64)> {
        fin.s.as_ref()?;
        fin.t.as_ref()?;
        let n = self.g0.n;
        let len = self.carrier_len;
        let o = self.outputs_real_line(fin);
        let (phi_0, psi_l) = self.recover_secondary(fin);
        let up = carrier_up(&self.g0, len);
        let down = carrier_down(&self.g0, len);
        let row1: Vec<C64> = (0..n)
            .map(|i| {
                phi_0[i]
                    - self.a_0[i] * o.psi_0[i]
                    - self.bp_0[i] * self.bm_0[i] * up[i] * psi_l[i]
                    - self.f1_0[i]
            })
            .collect();
        let row2: Vec<C64> = (0..n)
            .map(|i| o.phi_l[i] - self.c_0[i] * down[i] * o.psi_0[i] - self.f2_0[i])
            .collect();
        let scale = norm_on_line(&self.g0, &self.f1_0) + norm_on_line(&self.g0, &self.f2_0);
        Some((norm_on_line(&self.g0, &row1), norm_on_line(&self.g0, &row2), scale))
    }
}
