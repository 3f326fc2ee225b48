//! Config loading, run orchestration, and artifact writing shared by the
//! subcommands. Exit policy: configuration problems are code 2, class
//! violations (symbols outside what the method can factorize) are code 3,
//! and a run whose iteration did not meet its tolerance is code 4, with all
//! artifacts already on disk.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer};
use serde_json::{json, Value};
use thiserror::Error;

use whiter_core::analytic_core::{max_abs, LineGrid, OneSided};
use whiter_core::families::{lookup, registry, CustomSystem, FamilyConfig, FamilyOutput};
use whiter_core::splitting::{additive_split, multiplicative_split, winding_index};
use whiter_core::whsolver::{SolveError, SymbolFn};

use crate::expr;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("class violation: {0}")]
    ClassViolation(String),
    #[error("not converged: {0}")]
    Diverged(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Io(_) => 1,
            RunError::Config(_) => 2,
            RunError::ClassViolation(_) => 3,
            RunError::Diverged(_) => 4,
        }
    }
}

impl From<SolveError> for RunError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Config(m) => RunError::Config(m),
            SolveError::ClassViolation(m) => RunError::ClassViolation(m),
        }
    }
}

/// Complex scalar accepted as `3.5`, `[re, im]`, or a constant expression
/// like `"0.7+10i"`.
#[derive(Debug, Clone, Copy)]
pub struct ComplexVal(pub C64);

impl<'de> Deserialize<'de> for ComplexVal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Re(f64),
            Pair([f64; 2]),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Re(x) => Ok(ComplexVal(C64::new(x, 0.0))),
            Raw::Pair([re, im]) => Ok(ComplexVal(C64::new(re, im))),
            Raw::Text(s) => parse_complex(&s).map(ComplexVal).map_err(D::Error::custom),
        }
    }
}

/// Parse a constant expression such as `"3"`, `"-15"`, or `"0.7+10i"`.
pub fn parse_complex(src: &str) -> Result<C64, String> {
    let node = expr::parse(src).map_err(|e| e.to_string())?;
    let u = expr::uses(&node);
    if u.alpha || u.lambda || u.len {
        return Err("a constant value cannot reference alpha, lam, or L".into());
    }
    Ok(expr::eval(&node, C64::new(0.0, 0.0), C64::new(0.0, 0.0), 0.0))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ProblemSpec {
    Builtin(String),
    Custom { custom: CustomSpec },
}

/// Symbol table of a user-supplied system, each entry an expression in
/// `alpha`, `lam`, `L`, and `i`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomSpec {
    pub a: String,
    pub b: String,
    pub c: String,
    pub f1: String,
    pub f2_smooth: String,
    #[serde(default)]
    pub f2_carrier: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SplitKind {
    Add,
    Mult,
}

/// One solver run, as read from a config file or assembled from flags.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub lambda: ComplexVal,
    #[serde(rename = "L")]
    pub len: f64,
    #[serde(default)]
    pub grid_n: Option<usize>,
    /// map scale of the sampling grids (the `x` spread of the nodes)
    #[serde(default)]
    pub grid_x: Option<f64>,
    #[serde(default)]
    pub line_a: Option<f64>,
    #[serde(default)]
    pub line_b: Option<f64>,
    #[serde(default)]
    pub stop_tol: Option<f64>,
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<OutputFormat>,
}

pub fn load_config(path: &Path) -> Result<RunConfig, RunError> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| RunError::Config(format!("{}: {}", path.display(), e)))
}

/// Flag beats config beats the `WHITER_OUT` environment variable beats the
/// `whiter-out` default.
pub fn resolve_out_dir(flag: Option<PathBuf>, from_config: Option<PathBuf>) -> PathBuf {
    flag.or(from_config)
        .or_else(|| std::env::var_os("WHITER_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("whiter-out"))
}

fn validate_numerics(cfg: &RunConfig) -> Result<(), RunError> {
    if let Some(n) = cfg.grid_n {
        if n < 16 || n % 2 != 0 {
            return Err(RunError::Config(format!(
                "grid size {} must be even and at least 16",
                n
            )));
        }
    }
    if let Some(x) = cfg.grid_x {
        if !(x > 0.0) {
            return Err(RunError::Config("the grid map scale must be positive".into()));
        }
    }
    if let Some(t) = cfg.stop_tol {
        if !(t >= 0.0) {
            return Err(RunError::Config("the stop tolerance must be nonnegative".into()));
        }
    }
    Ok(())
}

fn compile_symbol(src: &str, slot: &str, lam: C64, len: f64) -> Result<SymbolFn, RunError> {
    let node = expr::parse(src)
        .map_err(|e| RunError::Config(format!("in the '{}' expression, {}", slot, e)))?;
    Ok(Box::new(move |z| expr::eval(&node, z, lam, len)))
}

fn build_family_config(cfg: &RunConfig) -> Result<(String, FamilyConfig), RunError> {
    validate_numerics(cfg)?;
    let mut fc = FamilyConfig::new(cfg.lambda.0, cfg.len);
    fc.grid_n = cfg.grid_n;
    fc.map_scale = cfg.grid_x;
    fc.line_a = cfg.line_a;
    fc.line_b = cfg.line_b;
    if let Some(t) = cfg.stop_tol {
        fc.stop_tol = t;
    }
    if let Some(m) = cfg.max_iter {
        fc.max_iter = m;
    }
    let name = match &cfg.problem {
        ProblemSpec::Builtin(name) => {
            if lookup(name).is_none() {
                let known: Vec<&str> = registry().iter().map(|f| f.name()).collect();
                return Err(RunError::Config(format!(
                    "unknown problem '{}'; available: {}",
                    name,
                    known.join(", ")
                )));
            }
            name.clone()
        }
        ProblemSpec::Custom { custom } => {
            let lam = cfg.lambda.0;
            let len = cfg.len;
            fc.custom = Some(CustomSystem {
                a_sym: compile_symbol(&custom.a, "a", lam, len)?,
                b_sym: compile_symbol(&custom.b, "b", lam, len)?,
                c_sym: compile_symbol(&custom.c, "c", lam, len)?,
                f1: compile_symbol(&custom.f1, "f1", lam, len)?,
                f2_smooth: compile_symbol(&custom.f2_smooth, "f2_smooth", lam, len)?,
                f2_carrier: match &custom.f2_carrier {
                    Some(s) => Some(compile_symbol(s, "f2_carrier", lam, len)?),
                    None => None,
                },
            });
            "custom".to_string()
        }
    };
    Ok((name, fc))
}

pub struct RunArtifacts {
    pub family: String,
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub output: FamilyOutput,
}

/// Run the configured problem and write every artifact, whether or not the
/// iteration met its tolerance. The convergence verdict is applied
/// separately by [`finish`].
pub fn run_and_write(
    cfg: &RunConfig,
    out_flag: Option<PathBuf>,
    fmt_flag: Option<OutputFormat>,
) -> Result<RunArtifacts, RunError> {
    let (family, fc) = build_family_config(cfg)?;
    let output = lookup(&family).unwrap().run(fc)?;

    let out_dir = resolve_out_dir(out_flag, cfg.out_dir.clone());
    fs::create_dir_all(&out_dir)?;
    let format = fmt_flag.or(cfg.format).unwrap_or(OutputFormat::Csv);

    let mut files = Vec::new();
    for (name, values) in &output.unknowns {
        files.push(write_samples(&out_dir, name, &output.grid_alpha, values, format)?);
    }
    files.push(write_convergence(&out_dir, &output)?);
    if !output.oracle_errors.is_empty() {
        files.push(write_reference_errors(&out_dir, &output)?);
    }
    files.push(write_config_echo(&out_dir, cfg, &family, &output, format)?);
    Ok(RunArtifacts { family, out_dir, files, output })
}

/// Turn a finished run into the final exit verdict.
pub fn finish(art: &RunArtifacts) -> Result<(), RunError> {
    if art.output.diverged {
        Err(RunError::Diverged(format!(
            "increments grew over {} cycle(s); artifacts in {}",
            art.output.iterations,
            art.out_dir.display()
        )))
    } else if !art.output.converged {
        Err(RunError::Diverged(format!(
            "stop tolerance not reached after {} cycle(s); artifacts in {}",
            art.output.iterations,
            art.out_dir.display()
        )))
    } else {
        Ok(())
    }
}

fn cnum(v: C64) -> Value {
    if v.re.is_finite() && v.im.is_finite() {
        json!([v.re, v.im])
    } else {
        Value::Null
    }
}

fn write_pretty(path: &Path, doc: &Value) -> Result<(), RunError> {
    let mut text = serde_json::to_string_pretty(doc).expect("serializable");
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_samples(
    dir: &Path,
    name: &str,
    alpha: &[C64],
    values: &[C64],
    format: OutputFormat,
) -> Result<PathBuf, RunError> {
    match format {
        OutputFormat::Csv => {
            let path = dir.join(format!("{}.csv", name));
            let mut text = String::from("alpha_re,alpha_im,value_re,value_im\n");
            for (a, v) in alpha.iter().zip(values) {
                text.push_str(&format!("{:e},{:e},{:e},{:e}\n", a.re, a.im, v.re, v.im));
            }
            fs::write(&path, text)?;
            Ok(path)
        }
        OutputFormat::Json => {
            let path = dir.join(format!("{}.json", name));
            let doc = json!({
                "alpha": alpha.iter().map(|&a| cnum(a)).collect::<Vec<_>>(),
                "values": values.iter().map(|&v| cnum(v)).collect::<Vec<_>>(),
            });
            write_pretty(&path, &doc)?;
            Ok(path)
        }
    }
}

fn write_convergence(dir: &Path, out: &FamilyOutput) -> Result<PathBuf, RunError> {
    let e = &out.estimate;
    let constants: serde_json::Map<String, Value> = out
        .constants
        .iter()
        .map(|(name, seq)| {
            (name.clone(), Value::Array(seq.iter().map(|&v| cnum(v)).collect()))
        })
        .collect();
    let mut doc = json!({
        "iterations": out.iterations,
        "converged": out.converged,
        "diverged": out.diverged,
        "estimate": {"d1": e.d1, "eps1": e.eps1, "d2": e.d2, "eps2": e.eps2, "q": e.q},
        "increments": out.increments,
        "residuals": out.residuals.map_or(Value::Null, |(r1, r2, scale)| {
            json!({"row1": r1, "row2": r2, "forcing_scale": scale})
        }),
        "constants": constants,
    });
    // with a contracting estimate the first increment bounds every later
    // error: |x_n - x*| <= q^n/(1-q) |x_1 - x_0|
    if e.q < 1.0 && !out.increments.is_empty() {
        let bounds: Vec<f64> = (1..=out.iterations)
            .map(|n| e.q.powi(n as i32) / (1.0 - e.q) * out.increments[0])
            .collect();
        doc["predicted_bounds"] = json!(bounds);
    }
    let path = dir.join("convergence.json");
    write_pretty(&path, &doc)?;
    Ok(path)
}

fn write_reference_errors(dir: &Path, out: &FamilyOutput) -> Result<PathBuf, RunError> {
    let doc: Vec<Value> = out
        .oracle_errors
        .iter()
        .map(|o| json!({"unknown": o.unknown, "max_abs": o.max_abs, "l2": o.l2}))
        .collect();
    let path = dir.join("reference_errors.json");
    write_pretty(&path, &Value::Array(doc))?;
    Ok(path)
}

fn write_config_echo(
    dir: &Path,
    cfg: &RunConfig,
    family: &str,
    out: &FamilyOutput,
    format: OutputFormat,
) -> Result<PathBuf, RunError> {
    let problem = match &cfg.problem {
        ProblemSpec::Builtin(s) => json!(s),
        ProblemSpec::Custom { custom } => json!({"custom": {
            "a": custom.a, "b": custom.b, "c": custom.c,
            "f1": custom.f1, "f2_smooth": custom.f2_smooth,
            "f2_carrier": custom.f2_carrier,
        }}),
    };
    let doc = json!({
        "problem": problem,
        "family": family,
        "lambda": [cfg.lambda.0.re, cfg.lambda.0.im],
        "L": cfg.len,
        "grid_n": out.grid_alpha.len(),
        "grid_x": cfg.grid_x,
        "line_a": cfg.line_a,
        "line_b": cfg.line_b,
        "stop_tol": cfg.stop_tol.unwrap_or(1e-10),
        "max_iter": cfg.max_iter.unwrap_or(16),
        "format": match format { OutputFormat::Csv => "csv", OutputFormat::Json => "json" },
    });
    let path = dir.join("config.json");
    write_pretty(&path, &doc)?;
    Ok(path)
}

/// A standalone splitting of one expression sampled on a line.
pub struct SplitRequest {
    pub expr_src: String,
    pub kind: SplitKind,
    pub lambda: Option<C64>,
    pub len: Option<f64>,
    pub line: f64,
    pub grid_n: usize,
    pub grid_x: f64,
}

pub struct SplitReport {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub winding: Option<i64>,
    pub reconstruction_error: f64,
}

pub fn split_and_write(
    req: &SplitRequest,
    out_flag: Option<PathBuf>,
    fmt_flag: Option<OutputFormat>,
) -> Result<SplitReport, RunError> {
    if req.grid_n < 16 || req.grid_n % 2 != 0 {
        return Err(RunError::Config(format!(
            "grid size {} must be even and at least 16",
            req.grid_n
        )));
    }
    if !(req.grid_x > 0.0) {
        return Err(RunError::Config("the grid map scale must be positive".into()));
    }
    let node = expr::parse(&req.expr_src).map_err(|e| RunError::Config(e.to_string()))?;
    let u = expr::uses(&node);
    if u.lambda && req.lambda.is_none() {
        return Err(RunError::Config(
            "the expression references lam; pass --lambda".into(),
        ));
    }
    if u.len && req.len.is_none() {
        return Err(RunError::Config("the expression references L; pass --L".into()));
    }
    let lam = req.lambda.unwrap_or_else(|| C64::new(0.0, 0.0));
    let len = req.len.unwrap_or(0.0);

    let grid = LineGrid::new(req.line, req.grid_x, req.grid_n);
    let samples = grid.sample(|z| expr::eval(&node, z, lam, len));
    let (plus_vals, minus_vals, winding, recon) = match req.kind {
        SplitKind::Add => {
            let (p, m) = additive_split(&grid, &samples);
            let pv = p.eval_grid(&grid);
            let mv = m.eval_grid(&grid);
            let err: Vec<C64> = (0..grid.n).map(|j| pv[j] + mv[j] - samples[j]).collect();
            (pv, mv, None, max_abs(&err))
        }
        SplitKind::Mult => {
            let (p, m) = multiplicative_split(&grid, &samples)
                .map_err(|e| RunError::ClassViolation(e.to_string()))?;
            let pv = p.eval_grid(&grid);
            let mv = m.eval_grid(&grid);
            let err: Vec<C64> = (0..grid.n).map(|j| pv[j] * mv[j] - samples[j]).collect();
            (pv, mv, Some(winding_index(&samples).0), max_abs(&err))
        }
    };

    let out_dir = resolve_out_dir(out_flag, None);
    fs::create_dir_all(&out_dir)?;
    let format = fmt_flag.unwrap_or(OutputFormat::Csv);
    let mut files = vec![
        write_samples(&out_dir, "input", &grid.alpha, &samples, format)?,
        write_samples(&out_dir, "plus", &grid.alpha, &plus_vals, format)?,
        write_samples(&out_dir, "minus", &grid.alpha, &minus_vals, format)?,
    ];
    let doc = json!({
        "expr": req.expr_src,
        "kind": match req.kind { SplitKind::Add => "add", SplitKind::Mult => "mult" },
        "line": req.line,
        "grid_n": req.grid_n,
        "grid_x": req.grid_x,
        "winding": winding,
        "reconstruction_error": recon,
    });
    let path = out_dir.join("split.json");
    write_pretty(&path, &doc)?;
    files.push(path);
    Ok(SplitReport { out_dir, files, winding, reconstruction_error: recon })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(text: &str) -> Result<RunConfig, serde_json::Error> {
        serde_json::from_str(text)
    }

    #[test]
    fn lambda_accepts_number_pair_and_text_forms() {
        let base = |lam: &str| {
            format!(r#"{{"problem": "example1", "lambda": {}, "L": 1.0}}"#, lam)
        };
        assert_eq!(config(&base("3.0")).unwrap().lambda.0, C64::new(3.0, 0.0));
        assert_eq!(config(&base("[0.7, 10]")).unwrap().lambda.0, C64::new(0.7, 10.0));
        assert_eq!(
            config(&base("\"0.7+10i\"")).unwrap().lambda.0,
            C64::new(0.7, 10.0)
        );
        assert!(config(&base("\"alpha\"")).is_err(), "constants cannot use alpha");
    }

    #[test]
    fn unknown_config_fields_are_rejected() {
        let text = r#"{"problem": "example1", "lambda": 3, "L": 1, "bogus": true}"#;
        assert!(config(text).is_err());
    }

    #[test]
    fn custom_problems_carry_a_symbol_table() {
        let text = r#"{
            "problem": {"custom": {"a": "1", "b": "1", "c": "1",
                        "f1": "1/(a-1.5i)", "f2_smooth": "1/(a+3i)"}},
            "lambda": 0, "L": 1.5
        }"#;
        let cfg = config(text).unwrap();
        match cfg.problem {
            ProblemSpec::Custom { custom } => {
                assert_eq!(custom.f2_carrier, None);
                assert_eq!(custom.f1, "1/(a-1.5i)");
            }
            _ => panic!("expected the custom branch"),
        }
    }

    #[test]
    fn out_dir_resolution_prefers_the_flag() {
        let flag = Some(PathBuf::from("a"));
        let cfg = Some(PathBuf::from("b"));
        assert_eq!(resolve_out_dir(flag.clone(), cfg.clone()), PathBuf::from("a"));
        assert_eq!(resolve_out_dir(None, cfg), PathBuf::from("b"));
    }

    #[test]
    fn bad_grid_requests_fail_before_any_sampling() {
        let req = SplitRequest {
            expr_src: "1/(a-2i)".into(),
            kind: SplitKind::Add,
            lambda: None,
            len: None,
            line: 0.0,
            grid_n: 15,
            grid_x: 2.0,
        };
        assert!(matches!(split_and_write(&req, None, None), Err(RunError::Config(_))));
    }

    #[test]
    fn split_requires_the_variables_it_mentions() {
        let req = SplitRequest {
            expr_src: "lam/(a-2i)".into(),
            kind: SplitKind::Add,
            lambda: None,
            len: None,
            line: 0.0,
            grid_n: 64,
            grid_x: 2.0,
        };
        match split_and_write(&req, None, None) {
            Err(RunError::Config(m)) => assert!(m.contains("lam")),
            other => panic!("expected a config error, got {:?}", other.err().map(|e| e.to_string())),
        }
    }
}
