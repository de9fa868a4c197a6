//! `postq`: command-line access to assemblage validation, functional
//! evaluation, almost-quantum bounds, locality checks, GHJW realizations,
//! the locality-constrained search and the bundled example pipeline.

mod bloch;
mod error;
mod input;
mod reproduce;

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use postq_core::aq::{aq_bound_with, bound_program, membership_sdp_with, projection_program, AqOptions};
use postq_core::conic::{ConicProgram, SolverSettings};
use postq_core::constructions::behaviour;
use postq_core::io::AnyAssemblage;
use postq_core::locality::{locality_for_all_projective_eps, locality_lp, LOCALITY_EPS};
use postq_core::search::{DescentMethod, DescentObjective};
use postq_core::{
    evaluate_functional, ghjw_realize, octagon_set, run_search, validate_bipartite_ns, validate_tripartite_ns,
    MembershipVerdict, SearchConfig, SearchStatus,
};
use serde::Serialize;
use serde_json::json;

use crate::error::{CliError, EXIT_NEGATIVE};
use crate::input::{read_assemblage, read_bipartite, read_functional, read_json, read_tripartite};

const VALIDATE_TOL: f64 = 1e-8;
const GHJW_TOL: f64 = 1e-10;

#[derive(Parser, Debug)]
#[command(name = "postq", version, about = "Certify post-quantum steering assemblages")]
struct Cli {
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    json: bool,
    /// Numerical tolerance of the command (validation, locality ε, solver gap).
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Write the conic program solved by the command as JSON.
    #[arg(long, global = true, value_name = "PATH")]
    solver_dump: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check positivity, no-signaling and normalization of an assemblage.
    Validate { path: PathBuf },
    /// Value of a steering functional on an assemblage.
    Evaluate { assemblage: PathBuf, functional: PathBuf },
    /// Almost-quantum bound of a functional or membership of an assemblage.
    Aq {
        #[command(subcommand)]
        mode: AqMode,
    },
    /// Whether the de-noised assemblage gives local behaviours for every
    /// projective measurement of the trusted qubit at visibility `--mu`.
    Local {
        path: PathBuf,
        #[arg(long, default_value_t = (PI / 8.0).cos())]
        mu: f64,
    },
    /// Quantum realization of a bipartite no-signaling assemblage.
    Ghjw {
        path: PathBuf,
        /// Also write the realization to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for a post-quantum assemblage with only local behaviours.
    Search {
        #[arg(long)]
        seed: Option<u64>,
        /// Attempts after the first.
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        mu_target: Option<f64>,
        #[arg(long)]
        no_symmetrize: bool,
        #[arg(long, value_enum)]
        method: Option<Method>,
        #[arg(long, value_enum)]
        objective: Option<Objective>,
        /// Write the full result JSON to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Equatorial Bloch plot of a qubit assemblage as SVG.
    Bloch { path: PathBuf, out: PathBuf },
    /// Run the bundled example end to end.
    ReproducePaper {
        /// Replace the bundled assemblage fixture.
        #[arg(long, value_name = "PATH")]
        assemblage_fixture: Option<PathBuf>,
        /// Replace the bundled witness fixture.
        #[arg(long, value_name = "PATH")]
        witness_fixture: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum AqMode {
    /// Minimum of the functional over the almost-quantum set.
    Bound { functional: PathBuf },
    /// Decide membership; exits 0 for IN, 1 for NOT_IN.
    Member { assemblage: PathBuf },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Method {
    Alternating,
    FiniteDifference,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Objective {
    MuCritical,
    Gap,
}

/// Result of a command: what to print and whether the verdict is positive.
struct Outcome {
    text: String,
    json: serde_json::Value,
    positive: bool,
}

impl Outcome {
    fn new(text: String, json: impl Serialize, positive: bool) -> Result<Self, CliError> {
        let json = serde_json::to_value(json).map_err(|e| CliError::Core(e.into()))?;
        Ok(Outcome { text, json, positive })
    }
}

fn solver_settings(tol: Option<f64>) -> SolverSettings {
    match tol {
        Some(t) => SolverSettings { tol_feas: t, tol_gap: t, ..SolverSettings::default() },
        None => SolverSettings::default(),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn dump(path: Option<&Path>, program: impl FnOnce() -> Result<ConicProgram, CliError>) -> Result<(), CliError> {
    if let Some(path) = path {
        let text = serde_json::to_string_pretty(&program()?.to_dump()).map_err(|e| CliError::Core(e.into()))?;
        write_file(path, &text)?;
    }
    Ok(())
}

fn no_dump(cli: &Cli) -> Result<(), CliError> {
    match cli.solver_dump {
        Some(_) => Err(CliError::Input("--solver-dump applies to `aq` and `local` only".into())),
        None => Ok(()),
    }
}

fn validate(cli: &Cli, path: &Path) -> Result<Outcome, CliError> {
    no_dump(cli)?;
    let tol = cli.tolerance.unwrap_or(VALIDATE_TOL);
    let report = match read_assemblage(path)? {
        AnyAssemblage::Tripartite(a) => validate_tripartite_ns(&a, tol),
        AnyAssemblage::Bipartite(a) => validate_bipartite_ns(&a, tol),
    };
    let mut text = String::new();
    for c in &report.checks {
        let v = if c.passed { "ok  " } else { "FAIL" };
        text.push_str(&format!("{v} {:?}: max violation {:.3e} ({})\n", c.family, c.max_violation, c.worst));
    }
    text.push_str(if report.passed { "VALID" } else { "INVALID" });
    Outcome::new(text, &report, report.passed)
}

fn evaluate(cli: &Cli, asm: &Path, f: &Path) -> Result<Outcome, CliError> {
    no_dump(cli)?;
    let beta = evaluate_functional(&read_functional(f)?, &read_tripartite(asm)?)?;
    Outcome::new(format!("β = {beta:.10}"), json!({ "beta": beta }), true)
}

fn aq(cli: &Cli, mode: &AqMode) -> Result<Outcome, CliError> {
    let opts = AqOptions { settings: solver_settings(cli.tolerance), ..AqOptions::default() };
    match mode {
        AqMode::Bound { functional } => {
            let f = read_functional(functional)?;
            dump(cli.solver_dump.as_deref(), || Ok(bound_program(&f, false).program))?;
            let b = aq_bound_with(&f, &opts)?;
            let text = format!("β_Q̃ = {:.10} ({} formulation)", b.value, if b.complex { "complex" } else { "real" });
            Outcome::new(text, &b, true)
        }
        AqMode::Member { assemblage } => {
            let a = read_tripartite(assemblage)?;
            dump(cli.solver_dump.as_deref(), || Ok(projection_program(&a, false).0.program))?;
            let m = membership_sdp_with(&a, &opts)?;
            let verdict = match m.verdict {
                MembershipVerdict::In => "IN",
                MembershipVerdict::NotIn => "NOT_IN",
            };
            let mut text = format!("{verdict} (distance {:.3e})", m.distance);
            if let Some(c) = &m.certificate {
                text.push_str(&format!("\nseparating functional: value {:.6}, bound {:.6}, separation {:.6}", c.value, c.aq_bound, c.separation));
            }
            Outcome::new(text, &m, m.verdict == MembershipVerdict::In)
        }
    }
}

fn local(cli: &Cli, path: &Path, mu: f64) -> Result<Outcome, CliError> {
    let a = read_tripartite(path)?;
    let eps = cli.tolerance.unwrap_or(LOCALITY_EPS);
    dump(cli.solver_dump.as_deref(), || Ok(locality_lp(&behaviour(&a, &octagon_set().povms)?)?.program))?;
    let v = locality_for_all_projective_eps(&a, mu, eps)?;
    let text = format!("{} at μ = {mu:.6}: {}", if v.pass { "LOCAL" } else { "NOT CERTIFIED" }, v.reason);
    Outcome::new(text, &v, v.pass)
}

fn ghjw(cli: &Cli, path: &Path, out: Option<&Path>) -> Result<Outcome, CliError> {
    no_dump(cli)?;
    let a = read_bipartite(path)?;
    let r = ghjw_realize(&a, cli.tolerance.unwrap_or(GHJW_TOL))?;
    let err = r.reconstruct()?.max_abs_diff(&a);
    let pretty = serde_json::to_string_pretty(&r).map_err(|e| CliError::Core(e.into()))?;
    if let Some(out) = out {
        write_file(out, &pretty)?;
    }
    let text = format!("{pretty}\nreconstruction error {err:.3e}");
    Outcome::new(text, &r, true)
}

#[allow(clippy::too_many_arguments)]
fn search(
    cli: &Cli,
    seed: Option<u64>,
    restarts: Option<usize>,
    mu_target: Option<f64>,
    no_symmetrize: bool,
    method: Option<Method>,
    objective: Option<Objective>,
    out: Option<&Path>,
) -> Result<Outcome, CliError> {
    no_dump(cli)?;
    let mut cfg = SearchConfig::default();
    if let Some(s) = seed {
        cfg.rng_seed = s;
    }
    if let Some(r) = restarts {
        cfg.max_restarts = r;
    }
    if let Some(m) = mu_target {
        cfg.mu_target = m;
    }
    if let Some(t) = cli.tolerance {
        cfg.validation_tol = t;
    }
    cfg.symmetrize = !no_symmetrize;
    if let Some(m) = method {
        cfg.method = match m {
            Method::Alternating => DescentMethod::Alternating,
            Method::FiniteDifference => DescentMethod::FiniteDifference,
        };
    }
    if let Some(o) = objective {
        cfg.objective = match o {
            Objective::MuCritical => DescentObjective::MuCritical,
            Objective::Gap => DescentObjective::Gap,
        };
    }
    cfg.validate().map_err(|e| CliError::Input(e.to_string()))?;
    let r = run_search(&cfg)?;
    if let Some(out) = out {
        write_file(out, &serde_json::to_string_pretty(&r).map_err(|e| CliError::Core(e.into()))?)?;
    }
    let status = match r.status {
        SearchStatus::Success => "SUCCESS",
        SearchStatus::Diagnostic => "DIAGNOSTIC",
    };
    let mu = r.mu_critical.map_or("undefined".to_string(), |m| format!("{m:.6}"));
    let text = format!(
        "{status} (seed {}, attempt {} of {} evaluated): {}\nμ_critical {mu}, β {:.6}, β_Q̃ {:.6}",
        r.rng_seed, r.restart, r.attempts, r.reason, r.beta, r.beta_aq
    );
    Outcome::new(text, &r, r.status == SearchStatus::Success)
}

fn bloch_cmd(cli: &Cli, path: &Path, out: &Path) -> Result<Outcome, CliError> {
    no_dump(cli)?;
    let points = bloch::bloch_points(&read_tripartite(path)?)?;
    write_file(out, &bloch::render_svg(&points))?;
    Outcome::new(format!("wrote {} points to {}", points.len(), out.display()), &points, true)
}

fn reproduce_cmd(cli: &Cli, assemblage: Option<&Path>, witness: Option<&Path>) -> Result<Outcome, CliError> {
    no_dump(cli)?;
    let mut inputs = reproduce::Inputs::default();
    if let Some(t) = cli.tolerance {
        inputs.tol = t;
    }
    if let Some(p) = assemblage {
        inputs = inputs.with_assemblage(read_json(p)?)?;
    }
    if let Some(p) = witness {
        inputs = inputs.with_witness(read_json(p)?)?;
    }
    let report = reproduce::run(&inputs);
    let text = reproduce::render(&report);
    Outcome::new(text.trim_end().to_string(), &report, report.passed)
}

fn dispatch(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Validate { path } => validate(cli, path),
        Command::Evaluate { assemblage, functional } => evaluate(cli, assemblage, functional),
        Command::Aq { mode } => aq(cli, mode),
        Command::Local { path, mu } => local(cli, path, *mu),
        Command::Ghjw { path, out } => ghjw(cli, path, out.as_deref()),
        Command::Search { seed, restarts, mu_target, no_symmetrize, method, objective, out } => {
            search(cli, *seed, *restarts, *mu_target, *no_symmetrize, *method, *objective, out.as_deref())
        }
        Command::Bloch { path, out } => bloch_cmd(cli, path, out),
        Command::ReproducePaper { assemblage_fixture, witness_fixture } => {
            reproduce_cmd(cli, assemblage_fixture.as_deref(), witness_fixture.as_deref())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(o) => {
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&o.json).expect("JSON values serialize"));
            } else {
                println!("{}", o.text);
            }
            if o.positive {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_NEGATIVE)
            }
        }
        Err(e) => {
            if cli.json {
                println!("{}", json!({ "error": e.to_string(), "exit_code": e.exit_code() }));
            }
            eprintln!("postq: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
