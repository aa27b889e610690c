//! Subcommand implementations. Each returns `Ok(())` or a [`CliError`]
//! carrying the process exit code.

use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use copos::fuzzy::{self, AugmentedVertexSystem, PremiseBounds, VertexSystem};
use copos::model::{self, Equilibrium};
use copos::sim::{self, OutcomeMetrics, Trajectory};
use copos::synthesis::{self, DesignProblem, SynthesisOutcome, SynthesisResult, VerifyOptions};
use log::info;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub const EXIT_OTHER: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DEGENERATE: u8 = 3;
pub const EXIT_INFEASIBLE: u8 = 4;
pub const EXIT_VERIFICATION: u8 = 5;
pub const EXIT_DIVERGED: u8 = 6;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }
}

impl From<copos::Error> for CliError {
    fn from(e: copos::Error) -> Self {
        let code = match e {
            copos::Error::DegenerateSector { .. } => EXIT_DEGENERATE,
            copos::Error::Diverged { .. } | copos::Error::StepRejected { .. } => EXIT_DIVERGED,
            copos::Error::Domain(_) | copos::Error::InvalidParams(_) => EXIT_CONFIG,
            _ => EXIT_OTHER,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new(EXIT_OTHER, format!("i/o error: {e}"))
    }
}

type CmdResult<T = ()> = Result<T, CliError>;

#[derive(Debug, Serialize)]
struct Meta<'a> {
    tool: &'static str,
    version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    generated_at: Option<u64>,
    config: &'a RunConfig,
}

fn meta(cfg: &RunConfig) -> Meta<'_> {
    let generated_at = cfg.timestamp.then(|| {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    });
    Meta {
        tool: "copos",
        version: env!("CARGO_PKG_VERSION"),
        generated_at,
        config: cfg,
    }
}

fn out_path(cfg: &RunConfig, name: &str) -> CmdResult<PathBuf> {
    fs::create_dir_all(&cfg.out_dir)?;
    Ok(cfg.out_dir.join(name))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CmdResult {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::new(EXIT_OTHER, format!("serialization failed: {e}")))?;
    text.push('\n');
    fs::write(path, text)?;
    info!("wrote {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct EquilibriaFile<'a> {
    meta: Meta<'a>,
    equilibria: &'a [Equilibrium],
}

pub fn equilibria(cfg: &RunConfig) -> CmdResult {
    let eq = model::default_equilibria(&cfg.params)?;
    println!("{:<22} {:>12} {:>10} {:>24} {:>24}", "kind", "x1", "x2", "lambda1", "lambda2");
    for e in &eq {
        println!(
            "{:<22} {:>12.4} {:>10.5} {:>24} {:>24}",
            format!("{:?}", e.kind),
            e.point.x1,
            e.point.x2,
            format_complex(e.eigenvalues[0]),
            format_complex(e.eigenvalues[1])
        );
    }
    if eq.is_empty() {
        println!("no equilibria found on the scan interval");
    }
    write_json(
        &out_path(cfg, "equilibria.json")?,
        &EquilibriaFile {
            meta: meta(cfg),
            equilibria: &eq,
        },
    )
}

fn format_complex(z: nalgebra::Complex<f64>) -> String {
    if z.im == 0.0 {
        format!("{:.6}", z.re)
    } else {
        format!("{:.6}{:+.6}i", z.re, z.im)
    }
}

#[derive(Serialize)]
struct VertexFile<'a> {
    meta: Meta<'a>,
    premise_bounds: PremiseBounds,
    vertices: &'a VertexSystem,
    augmented: &'a AugmentedVertexSystem,
    discrete: &'a AugmentedVertexSystem,
}

fn design(cfg: &RunConfig) -> CmdResult<(VertexSystem, AugmentedVertexSystem, AugmentedVertexSystem)> {
    Ok(fuzzy::discrete_design_system(
        &cfg.params,
        &cfg.domain,
        cfg.mode,
        cfg.sampling_period,
    )?)
}

pub fn fuzzify(cfg: &RunConfig) -> CmdResult {
    let (vertices, augmented, discrete) = design(cfg)?;
    let b = vertices.premise_bounds;
    for (k, s) in b.sectors.iter().enumerate() {
        println!("theta{} in [{:.4}, {:.4}]", k + 1, s.min, s.max);
    }
    write_json(
        &out_path(cfg, "vertex_system.json")?,
        &VertexFile {
            meta: meta(cfg),
            premise_bounds: b,
            vertices: &vertices,
            augmented: &augmented,
            discrete: &discrete,
        },
    )
}

#[derive(Serialize)]
struct SynthesisFile<'a> {
    meta: Meta<'a>,
    #[serde(flatten)]
    outcome: &'a SynthesisOutcome,
}

#[derive(Deserialize)]
struct StoredGains {
    #[serde(flatten)]
    outcome: SynthesisOutcome,
}

fn print_summary(res: &SynthesisResult) {
    let r = &res.report;
    println!("Lyapunov vector q = {:?}", res.q);
    println!(
        "closed-loop pairs: {}  all Schur: {}  plant rows nonnegative: {}",
        r.pairs.len(),
        r.all_schur,
        r.all_rows_nonnegative
    );
    println!("worst spectral radius: {:.12}", r.worst_spectral_radius);
    if let Some(d) = r.worst_decrement {
        println!("worst Lyapunov decrement: {d:.6e}");
    }
    println!(
        "independent certificate: {}",
        if r.independent_certificate.is_some() { "found" } else { "not found" }
    );
    println!("gain residual: {:.3e}", res.gain_residual);
    println!("verification: {}", if res.passed() { "PASS" } else { "FAIL" });
}

/// Runs the synthesis LP, writes its outcome and returns the verified result.
fn synthesize_inner(cfg: &RunConfig, dump_lp: bool) -> CmdResult<(AugmentedVertexSystem, SynthesisResult)> {
    let (_, _, discrete) = design(cfg)?;
    let problem = DesignProblem::from_augmented(&discrete)?;
    if dump_lp {
        let (prog, tags) = synthesis::build_synthesis_lp(&problem, &cfg.synthesis)?;
        let mut text = prog.to_string();
        text.push_str("\n# constraint tags\n");
        for (k, tag) in tags.iter().enumerate() {
            let _ = writeln!(text, "# c{k}: {tag}");
        }
        let path = out_path(cfg, "synthesis_lp.txt")?;
        fs::write(&path, text)?;
        info!("wrote {}", path.display());
    }
    let outcome = synthesis::synthesize_pdc(&problem, &cfg.synthesis)?;
    write_json(
        &out_path(cfg, "synthesis.json")?,
        &SynthesisFile {
            meta: meta(cfg),
            outcome: &outcome,
        },
    )?;
    check_outcome(outcome).map(|res| (discrete, res))
}

fn check_outcome(outcome: SynthesisOutcome) -> CmdResult<SynthesisResult> {
    match outcome {
        SynthesisOutcome::Infeasible(f) => {
            println!("synthesis LP: {:?}", f.status);
            println!("phase-1 infeasibility: {:.6e}", f.phase1_infeasibility);
            for t in &f.tight {
                println!("  tight: {} (residual {:.3e})", t.constraint, t.residual);
            }
            Err(CliError::new(EXIT_INFEASIBLE, "synthesis LP is infeasible"))
        }
        SynthesisOutcome::Feasible(res) => {
            print_summary(&res);
            if res.passed() {
                Ok(*res)
            } else {
                Err(CliError::new(EXIT_VERIFICATION, "closed-loop verification failed"))
            }
        }
    }
}

pub fn synthesize(cfg: &RunConfig, dump_lp: bool) -> CmdResult {
    synthesize_inner(cfg, dump_lp).map(|_| ())
}

/// Loads gains written by `synthesize` and re-verifies them against the
/// configured design system.
fn load_gains(cfg: &RunConfig, path: &Path) -> CmdResult<(AugmentedVertexSystem, SynthesisResult)> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::new(EXIT_CONFIG, format!("cannot read gains {}: {e}", path.display())))?;
    let stored: StoredGains = serde_json::from_str(&text)
        .map_err(|e| CliError::new(EXIT_CONFIG, format!("malformed gains file {}: {e}", path.display())))?;
    let (_, _, discrete) = design(cfg)?;
    let problem = DesignProblem::from_augmented(&discrete)?;
    let mut res = match stored.outcome {
        SynthesisOutcome::Feasible(res) => *res,
        SynthesisOutcome::Infeasible(_) => {
            return Err(CliError::new(EXIT_INFEASIBLE, "gains file records an infeasible synthesis"))
        }
    };
    let shape = (problem.inputs(), problem.states());
    if res.k.len() != problem.rules() || res.k.iter().any(|k| k.shape() != shape) || res.q.len() != shape.1 {
        return Err(CliError::new(EXIT_CONFIG, "gains do not match the configured design system"));
    }
    let opts = VerifyOptions {
        rows: problem.rows(&cfg.synthesis.positivity_rows)?,
        eps: cfg.synthesis.eps,
        q_max: cfg.synthesis.q_max,
    };
    res.report = synthesis::verify_closed_loop(&problem, &res.k, Some(&res.q), &opts)?;
    print_summary(&res);
    if !res.passed() {
        return Err(CliError::new(EXIT_VERIFICATION, "loaded gains fail closed-loop verification"));
    }
    Ok((discrete, res))
}

#[derive(Serialize)]
struct MetricsFile<'a> {
    meta: Meta<'a>,
    metrics: &'a [OutcomeMetrics],
}

fn print_metrics(metrics: &[OutcomeMetrics]) {
    println!(
        "{:<16} {:>10} {:>14} {:>12} {:>10} {:>12} {:>12} {:>8}",
        "scenario", "max x1", "time-to-benign", "terminal x1", "terminal x2", "chemo dose", "immuno dose", "clamps"
    );
    for m in metrics {
        let ttb = m.time_to_benign.map_or_else(|| "-".to_string(), |t| format!("{t:.3}"));
        println!(
            "{:<16} {:>10.3} {:>14} {:>12.4} {:>10.5} {:>12.4} {:>12.4} {:>8}",
            m.scenario,
            m.max_tumor,
            ttb,
            m.terminal_state.x1,
            m.terminal_state.x2,
            m.total_chemo_dose,
            m.total_immuno_dose,
            m.clamp_events
        );
    }
}

fn run_scenarios(cfg: &RunConfig, system: &AugmentedVertexSystem, res: &SynthesisResult) -> CmdResult<Vec<OutcomeMetrics>> {
    let results = sim::run_batch(&cfg.scenarios, system, &res.k, &cfg.params, &cfg.sim_options());
    let mut metrics = Vec::new();
    let mut failed = 0usize;
    for (sc, traj) in cfg.scenarios.iter().zip(results) {
        match traj {
            Ok(traj) => {
                write_trajectory(cfg, &traj)?;
                metrics.push(sim::summarize(&traj, &cfg.params)?);
            }
            Err(e) => {
                eprintln!("scenario {}: {e}", sc.name);
                failed += 1;
            }
        }
    }
    print_metrics(&metrics);
    write_json(
        &out_path(cfg, "metrics.json")?,
        &MetricsFile {
            meta: meta(cfg),
            metrics: &metrics,
        },
    )?;
    if failed > 0 {
        return Err(CliError::new(EXIT_DIVERGED, format!("{failed} scenario(s) diverged")));
    }
    Ok(metrics)
}

fn write_trajectory(cfg: &RunConfig, traj: &Trajectory) -> CmdResult {
    let path = out_path(cfg, &format!("{}.csv", traj.scenario.name))?;
    let file = fs::File::create(&path)?;
    sim::write_csv(traj, BufWriter::new(file), cfg.csv_stride)?;
    info!("wrote {}", path.display());
    Ok(())
}

pub fn simulate(cfg: &RunConfig, gains: Option<&Path>, dump_lp: bool) -> CmdResult {
    let (system, res) = match gains {
        Some(path) => load_gains(cfg, path)?,
        None => synthesize_inner(cfg, dump_lp)?,
    };
    run_scenarios(cfg, &system, &res).map(|_| ())
}

#[derive(Serialize)]
struct ReportFile<'a> {
    meta: Meta<'a>,
    equilibria: &'a [Equilibrium],
    premise_bounds: PremiseBounds,
    lyapunov_vector: &'a [f64],
    worst_spectral_radius: f64,
    verification_passed: bool,
    metrics: &'a [OutcomeMetrics],
}

pub fn report(cfg: &RunConfig, dump_lp: bool) -> CmdResult {
    equilibria(cfg)?;
    fuzzify(cfg)?;
    let (system, res) = synthesize_inner(cfg, dump_lp)?;
    let metrics = run_scenarios(cfg, &system, &res)?;
    let eq = model::default_equilibria(&cfg.params)?;
    write_json(
        &out_path(cfg, "report.json")?,
        &ReportFile {
            meta: meta(cfg),
            equilibria: &eq,
            premise_bounds: system.premise_bounds,
            lyapunov_vector: &res.q,
            worst_spectral_radius: res.report.worst_spectral_radius,
            verification_passed: res.passed(),
            metrics: &metrics,
        },
    )
}
