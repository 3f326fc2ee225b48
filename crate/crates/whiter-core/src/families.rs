//! Named problem families behind a common trait, so frontends can select a
//! setup at runtime and get back a uniform result bundle. Two builtin
//! families carry closed-form references and report per-iterate errors
//! against them; the `custom` family runs user-supplied symbols.

use num_complex::Complex64 as C64;

use crate::analytic_core::{max_abs, norm_on_line, pole_residue, LineGrid, OneSided};
use crate::oracles::{example1_exact, example2_exact};
use crate::splitting::{additive_split, multiplicative_split, window_plus};
use crate::whsolver::{reduce, ConvergenceEstimate, SolveError, SymbolFn, SystemData};

/// User-supplied system pieces for the `custom` family. `f2_carrier` is the
/// optional slot multiplying `exp(-i alpha len)` inside the second forcing.
pub struct CustomSystem {
    pub a_sym: SymbolFn,
    pub b_sym: SymbolFn,
    pub c_sym: SymbolFn,
    pub f1: SymbolFn,
    pub f2_smooth: SymbolFn,
    pub f2_carrier: Option<SymbolFn>,
}

/// Runtime knobs shared by every family. Unset options fall back to
/// family-specific defaults.
pub struct FamilyConfig {
    pub lambda: C64,
    pub carrier_len: f64,
    pub grid_n: Option<usize>,
    pub map_scale: Option<f64>,
    pub line_a: Option<f64>,
    pub line_b: Option<f64>,
    /// relative increment below which the iteration stops; zero runs all
    /// `max_iter` cycles
    pub stop_tol: f64,
    pub max_iter: usize,
    pub custom: Option<CustomSystem>,
}

impl FamilyConfig {
    pub fn new(lambda: C64, carrier_len: f64) -> Self {
        FamilyConfig {
            lambda,
            carrier_len,
            grid_n: None,
            map_scale: None,
            line_a: None,
            line_b: None,
            stop_tol: 1e-10,
            max_iter: 16,
            custom: None,
        }
    }
}

/// Per-unknown error history against a closed-form reference.
pub struct OracleErrors {
    pub unknown: String,
    pub max_abs: Vec<f64>,
    pub l2: Vec<f64>,
}

pub struct FamilyOutput {
    /// sample points on the output line `Im alpha = 0`
    pub grid_alpha: Vec<C64>,
    /// final samples of each unknown on the output line
    pub unknowns: Vec<(String, Vec<C64>)>,
    /// named scalar sequences produced along the way (fitted pole strengths,
    /// coupling data); single-valued entries hold one element
    pub constants: Vec<(String, Vec<C64>)>,
    /// iterate-to-iterate distances of the tracked unknown
    pub increments: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub diverged: bool,
    pub estimate: ConvergenceEstimate,
    /// `(row1, row2, forcing scale)` L2 norms on the output line, once at
    /// least one full cycle has run
    pub residuals: Option<(f64, f64, f64)>,
    /// filled only by families that carry a reference solution
    pub oracle_errors: Vec<OracleErrors>,
}

pub trait ProblemFamily {
    /// identifier used to select the family from a frontend
    fn name(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    fn run(&self, cfg: FamilyConfig) -> Result<FamilyOutput, SolveError>;
}

pub fn registry() -> Vec<Box<dyn ProblemFamily>> {
    vec![
        Box::new(MatchedForcingFamily),
        Box::new(CoupledPairFamily),
        Box::new(CustomFamily),
    ]
}

pub fn lookup(name: &str) -> Option<Box<dyn ProblemFamily>> {
    registry().into_iter().find(|f| f.name() == name)
}

fn iterate_errors(grid: &LineGrid, hist: &[Vec<C64>], reference: &[C64]) -> (Vec<f64>, Vec<f64>) {
    let mut mx = Vec::with_capacity(hist.len());
    let mut l2 = Vec::with_capacity(hist.len());
    for it in hist {
        let d: Vec<C64> = it.iter().zip(reference).map(|(a, b)| a - b).collect();
        mx.push(max_abs(&d));
        l2.push(norm_on_line(grid, &d));
    }
    (mx, l2)
}

/// Even rational symbol with forcing whose carrier part mirrors its smooth
/// part through the kernel, so the reduced carrier slot vanishes. Carries a
/// closed-form solution pair parameterized by two fitted pole strengths.
struct MatchedForcingFamily;

impl ProblemFamily for MatchedForcingFamily {
    fn name(&self) -> &'static str {
        "example1"
    }

    fn summary(&self) -> &'static str {
        "even rational symbol, matched exponential forcing, closed-form reference"
    }

    fn run(&self, cfg: FamilyConfig) -> Result<FamilyOutput, SolveError> {
        let lam = cfg.lambda;
        let len = cfg.carrier_len;
        if !(len > 0.0) {
            return Err(SolveError::Config("carrier length must be positive".into()));
        }
        let (la, lb) = match (cfg.line_a, cfg.line_b) {
            (Some(a), Some(b)) => (a, b),
            (None, None) if lam.re > 0.0 => (-lam.re / 2.0, lam.re / 2.0),
            (None, None) => {
                return Err(SolveError::Config(
                    "working lines default to +-Re(lambda)/2; give line_a and line_b when \
                     Re(lambda) <= 0"
                        .into(),
                ))
            }
            _ => {
                return Err(SolveError::Config(
                    "give both working lines or neither".into(),
                ))
            }
        };
        let wide = lam.im.abs() > 0.5;
        let n = cfg.grid_n.unwrap_or(if wide { 4096 } else { 2048 });
        let rho = cfg.map_scale.unwrap_or(if wide { 5.0 } else { 2.0 });

        let i = C64::i();
        let mu = (lam * lam + 0.5).sqrt();
        let ksym = move |z: C64| (z * z + mu * mu) / (z * z + lam * lam);
        let f34 = move |z: C64| 1.0 / (z - i) + 1.0 / (z + 2.0 * i);
        let data = SystemData {
            a_sym: Box::new(ksym),
            b_sym: Box::new(|_| C64::new(1.0, 0.0)),
            c_sym: Box::new(|_| C64::new(1.0, 0.0)),
            f1: Box::new(f34),
            f2_smooth: Box::new(move |z| f34(z) / ksym(z)),
            f2_carrier: Some(Box::new(move |z| f34(z) / ksym(z))),
            lines: (la, lb),
            carrier_len: len,
            grid_n: n,
            map_scale: rho,
        };
        let problem = reduce(&data)?;
        let out = problem.solve(cfg.max_iter, cfg.stop_tol);

        // pole strengths fitted from the running projections: the plus
        // projection continues below line a with a pole at -i lam, the minus
        // projection continues above line b with a pole at +i lam
        let k2: Vec<C64> = out
            .s_line_a
            .iter()
            .map(|s| pole_residue(&problem.ga, s, -i * lam))
            .collect();
        let mut k1 = vec![C64::new(f64::NAN, f64::NAN)];
        k1.extend(
            out.t_line_b
                .iter()
                .map(|t| pole_residue(&problem.gb, t, i * lam)),
        );

        let reference = example1_exact(lam, len);
        let phi_ref: Vec<C64> = problem.ga.alpha.iter().map(|&z| reference.phi(z)).collect();
        let psi_ref: Vec<C64> = problem.gb.alpha.iter().map(|&z| reference.psi(z)).collect();
        let (phi_mx, phi_l2) = iterate_errors(&problem.ga, &out.phi_line_a, &phi_ref);
        let (psi_mx, psi_l2) = iterate_errors(&problem.gb, &out.psi_line_b, &psi_ref);

        let o = problem.outputs_real_line(&out.fin);
        let residuals = problem.residual(&out.fin);
        Ok(FamilyOutput {
            grid_alpha: problem.g0.alpha.clone(),
            unknowns: vec![
                ("phi_l".into(), o.phi_l),
                ("psi_0".into(), o.psi_0),
                ("phi_0".into(), o.phi_0),
                ("psi_l".into(), o.psi_l),
            ],
            constants: vec![("k1".into(), k1), ("k2".into(), k2)],
            increments: out.increments,
            iterations: out.iterations,
            converged: out.converged,
            diverged: out.diverged,
            estimate: problem.estimate_convergence(),
            residuals,
            oracle_errors: vec![
                OracleErrors { unknown: "phi_l".into(), max_abs: phi_mx, l2: phi_l2 },
                OracleErrors { unknown: "psi_0".into(), max_abs: psi_mx, l2: psi_l2 },
            ],
        })
    }
}

/// Two half-line unknowns coupled through a decaying off-diagonal term; the
/// rows are solved alternately through one-symbol eliminations. The real
/// coupling parameter must stay below 1/4 so the determinant symbol keeps a
/// zero-free strip.
struct CoupledPairFamily;

impl ProblemFamily for CoupledPairFamily {
    fn name(&self) -> &'static str {
        "example2"
    }

    fn summary(&self) -> &'static str {
        "coupled half-line pair, decaying off-diagonal, closed-form reference"
    }

    fn run(&self, cfg: FamilyConfig) -> Result<FamilyOutput, SolveError> {
        let len = cfg.carrier_len;
        if !(len > 0.0) {
            return Err(SolveError::Config("carrier length must be positive".into()));
        }
        if cfg.lambda.im.abs() > 1e-12 {
            return Err(SolveError::Config(
                "this family takes a real coupling parameter".into(),
            ));
        }
        let lam = cfg.lambda.re;
        if lam >= 0.25 - 1e-12 {
            return Err(SolveError::ClassViolation(
                "coupling parameter must stay below 1/4: the determinant symbol loses its \
                 zero-free strip"
                    .into(),
            ));
        }
        let l0 = (1.0 - 2.0 * lam).sqrt();
        let l1 = (1.0 - 4.0 * lam).sqrt();
        if (l0 - 2.0).abs() < 1e-9 {
            return Err(SolveError::Config(
                "this coupling parameter puts a symbol zero on top of a forcing pole".into(),
            ));
        }
        let n = cfg.grid_n.unwrap_or(2048);
        let rho = cfg.map_scale.unwrap_or(2.5);
        if (rho - 2.0).abs() < 1e-9 {
            return Err(SolveError::Config(
                "map scale 2 puts the forcing pole at the minus-side expansion point; pick \
                 another scale"
                    .into(),
            ));
        }

        let g0 = LineGrid::new(0.0, rho, n);
        let x = &g0.alpha;
        let i = C64::i();
        let zero = C64::new(0.0, 0.0);

        let msamp: Vec<C64> = x.iter().map(|&z| (z * z + l0 * l0) / (z * z + 1.0)).collect();
        let nsamp: Vec<C64> = x.iter().map(|&z| 2.0 * lam / (z * z + 1.0)).collect();
        let fsamp: Vec<C64> = x.iter().map(|&z| i / (z + 2.0 * i)).collect();
        let dsamp: Vec<C64> = x
            .iter()
            .map(|&z| (z * z + l1 * l1) / (z * z + l0 * l0))
            .collect();

        let (mp_f, mm_f) = multiplicative_split(&g0, &msamp)?;
        let mp_0 = mp_f.eval_grid(&g0);
        let mm_0 = mm_f.eval_grid(&g0);
        let dm_0 = multiplicative_split(&g0, &dsamp)?.1.eval_grid(&g0);

        let usamp: Vec<C64> = (0..n).map(|j| fsamp[j] / mm_0[j]).collect();
        let (pu, mu) = additive_split(&g0, &usamp);
        let pu_0 = pu.eval_grid(&g0);
        let mu_0 = mu.eval_grid(&g0);
        let a2 = pole_residue(&g0, &mu_0, i * l0);

        let b_c = 2.0 * lam * (-l0 * len).exp() / ((l0 + 1.0) * (l0 + l1));
        let big_b = (-l0 * len).exp();

        let hf: Vec<C64> = (0..n)
            .map(|j| 2.0 * lam * fsamp[j] / ((x[j] + i * l0) * (x[j] - i * l1)))
            .collect();
        let (ph, _) = additive_split(&g0, &hf);
        let yf = window_plus(&ph, len);
        let yf_0 = yf.eval_grid(&g0);
        let d1 = 2.0 * i * l0 * b_c * yf.eval(i * l0);
        let d2 = b_c * a2;

        let up: Vec<C64> = x.iter().map(|&z| (i * z * len).exp()).collect();
        let down: Vec<C64> = x.iter().map(|&z| (-i * z * len).exp()).collect();

        let mut u2 = vec![zero; n];
        let mut u2_hist: Vec<Vec<C64>> = Vec::new();
        let mut u1_hist: Vec<Vec<C64>> = Vec::new();
        let mut h1_last = vec![zero; n];
        let mut h2_last = vec![zero; n];
        let mut c1s = Vec::new();
        let mut c2s = Vec::new();
        let mut increments = Vec::new();
        let mut residuals = None;
        let mut converged = false;
        let mut diverged = false;
        let mut iterations = 0;

        for k in 1..=cfg.max_iter {
            let gsamp: Vec<C64> = (0..n).map(|j| nsamp[j] * u2[j] / mm_0[j]).collect();
            let gamma = if max_abs(&gsamp) < 1e-290 {
                zero
            } else {
                let (_, mg) = additive_split(&g0, &gsamp);
                pole_residue(&g0, &mg.eval_grid(&g0), i * l0)
            };
            let c1 = -big_b * gamma;
            let u1: Vec<C64> = (0..n)
                .map(|j| (pu_0[j] + c1 / (x[j] - i * l0) + up[j] * gsamp[j]) / mp_0[j])
                .collect();
            let bg = big_b * gamma;
            let h1: Vec<C64> = (0..n)
                .map(|j| -mm_0[j] * (mu_0[j] + bg / (x[j] - i * l0)))
                .collect();
            let h1_at = -mm_f.eval(-i * l0) * (mu.eval(-i * l0) + bg / (-2.0 * i * l0));
            let rho0h = 2.0 * i * lam * h1_at / (l0 + l1);
            let c2 = big_b * rho0h;
            let ydet: Vec<C64> = (0..n).map(|j| yf_0[j] + c2 / (x[j] + i * l0)).collect();
            let u2_new: Vec<C64> = (0..n)
                .map(|j| ydet[j] * (x[j] + i * l0) / (x[j] + i * l1))
                .collect();
            let hsamp: Vec<C64> = (0..n)
                .map(|j| 2.0 * lam * (fsamp[j] + h1[j]) / ((x[j] + i * l0) * (x[j] - i * l1)))
                .collect();
            let h2: Vec<C64> = (0..n)
                .map(|j| -dm_0[j] * (down[j] * hsamp[j] - ydet[j]))
                .collect();

            // row residuals use this cycle's u2 so the lag itself is measured
            let row1: Vec<C64> = (0..n)
                .map(|j| msamp[j] * u1[j] - nsamp[j] * up[j] * u2_new[j] - fsamp[j] - h1[j])
                .collect();
            let row2: Vec<C64> = (0..n)
                .map(|j| msamp[j] * u2_new[j] - nsamp[j] * down[j] * u1[j] - h2[j])
                .collect();
            residuals = Some((
                norm_on_line(&g0, &row1),
                norm_on_line(&g0, &row2),
                norm_on_line(&g0, &fsamp),
            ));

            c1s.push(c1);
            c2s.push(c2);
            u1_hist.push(u1);
            u2_hist.push(u2_new.clone());
            h1_last = h1;
            h2_last = h2;
            iterations = k;

            if k >= 2 {
                let d: Vec<C64> = (0..n).map(|j| u2_new[j] - u2[j]).collect();
                let inc = norm_on_line(&g0, &d);
                increments.push(inc);
                let m = increments.len();
                if cfg.stop_tol > 0.0 && inc <= cfg.stop_tol * norm_on_line(&g0, &u2_new) {
                    u2 = u2_new;
                    converged = true;
                    break;
                }
                if m >= 3
                    && increments[m - 1] > increments[m - 2]
                    && increments[m - 2] > increments[m - 3]
                    && increments[m - 1] > 10.0 * increments[0]
                {
                    u2 = u2_new;
                    diverged = true;
                    break;
                }
            }
            u2 = u2_new;
        }

        let reference = example2_exact(lam, len);
        let u1_ref: Vec<C64> = x.iter().map(|&z| reference.u1(z)).collect();
        let u2_ref: Vec<C64> = x.iter().map(|&z| reference.u2(z)).collect();
        let (u1_mx, u1_l2) = iterate_errors(&g0, &u1_hist, &u1_ref);
        let (u2_mx, u2_l2) = iterate_errors(&g0, &u2_hist, &u2_ref);

        let u1_last = u1_hist.last().cloned().unwrap_or_else(|| vec![zero; n]);
        Ok(FamilyOutput {
            grid_alpha: g0.alpha.clone(),
            unknowns: vec![
                ("u1".into(), u1_last),
                ("u2".into(), u2),
                ("h1".into(), h1_last),
                ("h2".into(), h2_last),
            ],
            constants: vec![
                ("c1".into(), c1s),
                ("c2".into(), c2s),
                ("d1".into(), vec![d1]),
                ("d2".into(), vec![d2]),
                ("b".into(), vec![C64::new(b_c, 0.0)]),
            ],
            increments,
            iterations,
            converged,
            diverged,
            estimate: ConvergenceEstimate {
                d1: b_c.abs(),
                eps1: 1.0,
                d2: b_c.abs(),
                eps2: 1.0,
                q: b_c * b_c,
            },
            residuals,
            oracle_errors: vec![
                OracleErrors { unknown: "u1".into(), max_abs: u1_mx, l2: u1_l2 },
                OracleErrors { unknown: "u2".into(), max_abs: u2_mx, l2: u2_l2 },
            ],
        })
    }
}

/// User-supplied symbols and forcing; no reference solution.
struct CustomFamily;

impl ProblemFamily for CustomFamily {
    fn name(&self) -> &'static str {
        "custom"
    }

    fn summary(&self) -> &'static str {
        "user-supplied symbols and forcing"
    }

    fn run(&self, cfg: FamilyConfig) -> Result<FamilyOutput, SolveError> {
        let sys = cfg.custom.ok_or_else(|| {
            SolveError::Config("the custom family needs user-supplied symbols".into())
        })?;
        let (la, lb) = match (cfg.line_a, cfg.line_b) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(SolveError::Config(
                    "the custom family needs explicit working lines".into(),
                ))
            }
        };
        let data = SystemData {
            a_sym: sys.a_sym,
            b_sym: sys.b_sym,
            c_sym: sys.c_sym,
            f1: sys.f1,
            f2_smooth: sys.f2_smooth,
            f2_carrier: sys.f2_carrier,
            lines: (la, lb),
            carrier_len: cfg.carrier_len,
            grid_n: cfg.grid_n.unwrap_or(2048),
            map_scale: cfg.map_scale.unwrap_or(2.0),
        };
        let problem = reduce(&data)?;
        let out = problem.solve(cfg.max_iter, cfg.stop_tol);
        let o = problem.outputs_real_line(&out.fin);
        let residuals = problem.residual(&out.fin);
        Ok(FamilyOutput {
            grid_alpha: problem.g0.alpha.clone(),
            unknowns: vec![
                ("phi_l".into(), o.phi_l),
                ("psi_0".into(), o.psi_0),
                ("phi_0".into(), o.phi_0),
                ("psi_l".into(), o.psi_l),
            ],
            constants: Vec::new(),
            increments: out.increments,
            iterations: out.iterations,
            converged: out.converged,
            diverged: out.diverged,
            estimate: problem.estimate_convergence(),
            residuals,
            oracle_errors: Vec::new(),
        })
    }
}
