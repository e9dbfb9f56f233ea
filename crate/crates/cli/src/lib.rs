//! The `ksq` command-line tool.
//!
//! Exit codes: 0 success, 2 invalid spec or arguments, 3 I/O failure,
//! 4 every sample point failed, 5 Kähler premise failed somewhere,
//! 6 a certification tolerance failed somewhere.

pub mod report;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use ksq_core::field::spec::{forms_at, Manifold, ManifoldSpec};
use ksq_core::gromov::{gromov_j, FrameResiduals};
use ksq_core::kahler::{certify_kahler, CertifyConfig, Verdict, FD_RELATIVE_STEP};
use ksq_core::sequence::{run_sequence, SequenceConfig};
use ksq_core::tensor::{Tensor3, TorsionTensor};
use ksq_core::zoo;
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};

use report::{CertifyRunReport, SequenceRunReport, SpecInfo, ToolInfo, SCHEMA};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_ALL_FAILED: i32 = 4;
pub const EXIT_PREMISE: i32 = 5;
pub const EXIT_TOLERANCE: i32 = 6;

/// Prefix that selects a built-in spec instead of a file.
pub const ZOO_PREFIX: &str = "zoo:";

#[derive(Debug, Parser)]
#[command(
    name = "ksq",
    version,
    about = "Connection sequences and Kähler certification on a chart"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a spec and check both fields at every sample point.
    Validate { spec: String },
    /// Run the alternating connection sequence at every sample point.
    Sequence {
        spec: String,
        #[command(flatten)]
        seq: SequenceArgs,
        /// Write the per-point distance table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Certify the Kähler conditions pointwise.
    Certify {
        spec: String,
        #[command(flatten)]
        seq: SequenceArgs,
        /// Finite-difference step as a fraction of the box diameter.
        #[arg(long, default_value_t = FD_RELATIVE_STEP)]
        fd_step: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Print the Gromov frame at one point.
    Gromov {
        spec: String,
        /// Comma-separated coordinates.
        #[arg(long, allow_hyphen_values = true)]
        at: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Built-in specs.
    Zoo {
        #[command(subcommand)]
        action: ZooAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum ZooAction {
    /// List catalog entries.
    List,
    /// Print an entry as a spec file.
    Export {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct SequenceArgs {
    #[arg(long, default_value_t = 16)]
    pub max_steps: usize,
    /// Relative period tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Constant seed torsion as `k,i,j=v;...` with one-based indices and i < j.
    #[arg(long)]
    pub seed_torsion: Option<String>,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record wall time in the report (breaks byte-identical output).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn invalid(message: impl fmt::Display) -> Self {
        Self {
            code: EXIT_INVALID,
            message: message.to_string(),
        }
    }

    fn io(message: impl fmt::Display) -> Self {
        Self {
            code: EXIT_IO,
            message: message.to_string(),
        }
    }
}

pub struct LoadedSpec {
    pub spec: ManifoldSpec,
    pub manifold: Manifold,
    pub sha256: String,
}

impl LoadedSpec {
    fn info(&self) -> SpecInfo {
        SpecInfo {
            name: self.manifold.name.clone(),
            dim: self.manifold.dim(),
            sha256: self.sha256.clone(),
        }
    }
}

/// Reads a spec file, or a catalog entry when the argument starts with `zoo:`.
pub fn load_spec(arg: &str) -> Result<LoadedSpec, Failure> {
    let (spec, text) = match arg.strip_prefix(ZOO_PREFIX) {
        Some(name) => {
            let spec = zoo::builtin(name).map_err(Failure::invalid)?.spec;
            let text = spec.to_json_pretty();
            (spec, text)
        }
        None => {
            let text = fs::read_to_string(arg).map_err(|e| Failure::io(format!("{arg}: {e}")))?;
            let spec = ManifoldSpec::from_json(&text)
                .map_err(|e| Failure::invalid(format!("{arg}: {e}")))?;
            (spec, text)
        }
    };
    let manifold = spec
        .compile()
        .map_err(|e| Failure::invalid(format!("{arg}: {e}")))?;
    Ok(LoadedSpec {
        spec,
        manifold,
        sha256: hex::encode(Sha256::digest(text.as_bytes())),
    })
}

/// Parses `k,i,j=v;...` into a constant torsion tensor.
pub fn parse_seed_torsion(text: &str, dim: usize) -> Result<TorsionTensor, String> {
    let mut t = Tensor3::zeros(dim);
    for item in text.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let (idx, val) = item
            .split_once('=')
            .ok_or_else(|| format!("`{item}`: expected k,i,j=value"))?;
        let idx: Vec<usize> = idx
            .split(',')
            .map(|s| s.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|e| format!("`{item}`: {e}"))?;
        let v: f64 = val.trim().parse().map_err(|e| format!("`{item}`: {e}"))?;
        let [k, i, j] = idx[..] else {
            return Err(format!("`{item}`: expected three indices"));
        };
        if [k, i, j].iter().any(|&x| x == 0 || x > dim) {
            return Err(format!("`{item}`: indices must lie in 1..={dim}"));
        }
        if i >= j {
            return Err(format!("`{item}`: give components with i < j"));
        }
        t[(k - 1, i - 1, j - 1)] = v;
        t[(k - 1, j - 1, i - 1)] = -v;
    }
    TorsionTensor::new(t).map_err(|e| e.to_string())
}

fn sequence_config(args: &SequenceArgs, dim: usize) -> Result<SequenceConfig, Failure> {
    let seed_torsion = args
        .seed_torsion
        .as_deref()
        .map(|s| parse_seed_torsion(s, dim))
        .transpose()
        .map_err(|e| Failure::invalid(format!("--seed-torsion: {e}")))?;
    let cfg = SequenceConfig {
        max_steps: args.max_steps,
        period_tol: args.tol,
        seed_torsion,
    };
    cfg.validate(dim).map_err(Failure::invalid)?;
    Ok(cfg)
}

fn write_output(path: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::io(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::io(format!("stdout: {e}")))
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn cmd_validate(spec: &str) -> Result<i32, Failure> {
    let loaded = load_spec(spec)?;
    loaded
        .manifold
        .validate()
        .map_err(|e| Failure::invalid(format!("{spec}: {e}")))?;
    eprintln!(
        "{spec}: valid ({} dimensions, {} sample points)",
        loaded.manifold.dim(),
        loaded.manifold.domain.samples().len()
    );
    Ok(EXIT_OK)
}

fn cmd_sequence(
    spec: &str,
    seq: &SequenceArgs,
    csv_path: Option<&PathBuf>,
    out: &OutputArgs,
) -> Result<i32, Failure> {
    let start = Instant::now();
    let loaded = load_spec(spec)?;
    let m = &loaded.manifold;
    let cfg = sequence_config(seq, m.dim())?;
    let result = run_sequence(&m.metric, &m.omega, &m.domain, &cfg).map_err(Failure::invalid)?;
    let mut report = SequenceRunReport::new(loaded.info(), &cfg, &result);
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if out.timing {
        report.wall_time_s = Some(start.elapsed().as_secs_f64());
    }
    write_output(out.out.as_ref(), &to_json(&report))?;
    if let Some(path) = csv_path {
        let file =
            fs::File::create(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
        report::write_distance_csv(file, &result, m.dim())
            .map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
    }
    Ok(if result.summary.failed == result.summary.points {
        EXIT_ALL_FAILED
    } else {
        EXIT_OK
    })
}

fn cmd_certify(
    spec: &str,
    seq: &SequenceArgs,
    fd_step: f64,
    out: &OutputArgs,
) -> Result<i32, Failure> {
    let start = Instant::now();
    let loaded = load_spec(spec)?;
    let m = &loaded.manifold;
    let cfg = CertifyConfig {
        sequence: sequence_config(seq, m.dim())?,
        fd_relative_step: fd_step,
    };
    let verdict = certify_kahler(m, &cfg).map_err(Failure::invalid)?;
    let mut report = CertifyRunReport::new(loaded.info(), &cfg.sequence, fd_step, &verdict);
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if out.timing {
        report.wall_time_s = Some(start.elapsed().as_secs_f64());
    }
    write_output(out.out.as_ref(), &to_json(&report))?;
    eprintln!("{spec}: {}", verdict.overall.as_str());
    Ok(match verdict.overall {
        Verdict::KahlerCertified => EXIT_OK,
        Verdict::PremiseFailed => EXIT_PREMISE,
        Verdict::ToleranceFailed => EXIT_TOLERANCE,
        Verdict::Failed => EXIT_ALL_FAILED,
    })
}

/// A double printed with 17 significant digits.
fn raw(x: f64) -> Box<RawValue> {
    let text = if x.is_finite() {
        format!("{:.16e}", x + 0.0)
    } else {
        "null".to_string()
    };
    RawValue::from_string(text).expect("valid JSON number")
}

fn raw_matrix(m: &DMatrix<f64>) -> Vec<Vec<Box<RawValue>>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| raw(m[(r, c)])).collect())
        .collect()
}

#[derive(Serialize)]
struct RawTiered {
    value: Box<RawValue>,
    tier: report::Tier,
}

#[derive(Serialize)]
struct GromovReport {
    schema: &'static str,
    tool: ToolInfo,
    command: &'static str,
    spec: SpecInfo,
    point: Vec<Box<RawValue>>,
    tier: report::Tier,
    a: Vec<Vec<Box<RawValue>>>,
    b: Vec<Vec<Box<RawValue>>>,
    j: Vec<Vec<Box<RawValue>>>,
    g_herm: Vec<Vec<Box<RawValue>>>,
    residuals: BTreeMap<&'static str, RawTiered>,
    all_hold: bool,
}

fn residual_rows(r: &FrameResiduals) -> BTreeMap<&'static str, RawTiered> {
    let row = |name, v| {
        (
            name,
            RawTiered {
                value: raw(v),
                tier: report::Tier::Exact,
            },
        )
    };
    BTreeMap::from([
        row("defining_identity", r.defining_identity),
        row("a_antisymmetry", r.a_antisymmetry),
        row("b_self_adjoint", r.b_self_adjoint),
        row("b_min_eigenvalue", r.b_min_eigenvalue),
        row("b_squared", r.b_squared),
        row("b_commutator", r.b_commutator),
        row("j_squared", r.j_squared),
        row("compatibility", r.compatibility),
        row("omega_invariance", r.omega_invariance),
        row("min_omega_x_jx_basis", r.min_omega_x_jx_basis),
        row("herm_asymmetry", r.herm_asymmetry),
        row("herm_min_eigenvalue", r.herm_min_eigenvalue),
        row("j_isometry", r.j_isometry),
    ])
}

fn parse_point(text: &str, dim: usize) -> Result<Vec<f64>, Failure> {
    let p: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::invalid(format!("--at `{text}`: {e}")))?;
    if p.len() != dim {
        return Err(Failure::invalid(format!(
            "--at `{text}`: expected {dim} coordinates, got {}",
            p.len()
        )));
    }
    Ok(p)
}

fn cmd_gromov(spec: &str, at: &str, out: Option<&PathBuf>) -> Result<i32, Failure> {
    let loaded = load_spec(spec)?;
    let m = &loaded.manifold;
    let p = parse_point(at, m.dim())?;
    if !m.domain.contains(&p) {
        return Err(Failure::invalid(format!(
            "--at {p:?} lies outside the box {:?}",
            m.domain.bounds()
        )));
    }
    let (g, w) = forms_at(m, &p).map_err(Failure::invalid)?;
    let f = gromov_j(&g, &w).map_err(Failure::invalid)?;
    let report = GromovReport {
        schema: SCHEMA,
        tool: ToolInfo::current(),
        command: "gromov",
        spec: loaded.info(),
        point: p.iter().map(|&x| raw(x)).collect(),
        tier: report::Tier::Exact,
        a: raw_matrix(&f.a),
        b: raw_matrix(&f.b),
        j: raw_matrix(&f.j),
        g_herm: raw_matrix(&f.g_herm),
        residuals: residual_rows(&f.residuals),
        all_hold: f.residuals.all_hold(),
    };
    write_output(out, &to_json(&report))?;
    Ok(EXIT_OK)
}

fn cmd_zoo(action: &ZooAction) -> Result<i32, Failure> {
    match action {
        ZooAction::List => {
            let mut text = String::new();
            for e in zoo::all() {
                text.push_str(&format!("{:<20} {}\n", e.name, e.description));
            }
            write_output(None, &text)?;
        }
        ZooAction::Export { name, out } => {
            let entry = zoo::builtin(name).map_err(Failure::invalid)?;
            let mut text = entry.spec.to_json_pretty();
            text.push('\n');
            write_output(out.as_ref(), &text)?;
        }
    }
    Ok(EXIT_OK)
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("KSQ_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            Failure::invalid(format!("KSQ_THREADS={value}: expected a positive integer"))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::invalid(format!("KSQ_THREADS: {e}")))
}

pub fn execute(cli: &Cli) -> Result<i32, Failure> {
    configure_threads()?;
    match &cli.command {
        Command::Validate { spec } => cmd_validate(spec),
        Command::Sequence {
            spec,
            seq,
            csv,
            out,
        } => cmd_sequence(spec, seq, csv.as_ref(), out),
        Command::Certify {
            spec,
            seq,
            fd_step,
            out,
        } => cmd_certify(spec, seq, *fd_step, out),
        Command::Gromov { spec, at, out } => cmd_gromov(spec, at, out.as_ref()),
        Command::Zoo { action } => cmd_zoo(action),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_torsion_parsing() {
        let t = parse_seed_torsion("1,1,2=0.5; 2,1,2=-1", 2).unwrap();
        assert_eq!(t.tensor()[(0, 0, 1)], 0.5);
        assert_eq!(t.tensor()[(0, 1, 0)], -0.5);
        assert_eq!(t.tensor()[(1, 0, 1)], -1.0);
        assert!(parse_seed_torsion("1,2,1=1", 2).is_err());
        assert!(parse_seed_torsion("1,1,3=1", 2).is_err());
        assert!(parse_seed_torsion("1,1=1", 2).is_err());
        assert!(parse_seed_torsion("1,1,2=abc", 2).is_err());
        assert_eq!(parse_seed_torsion("", 2).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn raw_numbers_carry_seventeen_digits() {
        assert_eq!(raw(0.1).get(), "1.0000000000000001e-1");
        assert_eq!(raw(-2.0).get(), "-2.0000000000000000e0");
        let back: f64 = serde_json::from_str(raw(std::f64::consts::PI).get()).unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }

    #[test]
    fn point_parsing() {
        assert_eq!(parse_point("0.5, -0.25", 2).unwrap(), vec![0.5, -0.25]);
        assert_eq!(parse_point("0.5", 2).unwrap_err().code, EXIT_INVALID);
    }

    #[test]
    fn zoo_prefix_loads_catalog_entries() {
        let a = load_spec("zoo:fs_cp1").unwrap();
        let b = load_spec("zoo:fs_cp1").unwrap();
        assert_eq!(a.sha256, b.sha256);
        assert_eq!(a.sha256.len(), 64);
        assert_eq!(load_spec("zoo:nope").err().unwrap().code, EXIT_INVALID);
        assert_eq!(
            load_spec("/definitely/missing.json").err().unwrap().code,
            EXIT_IO
        );
    }
}
