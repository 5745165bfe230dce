//! Command-line front end.
//!
//! Configuration is resolved as defaults, then the `--config` file, then
//! flags. The config file is flat `key = value` text using the field names of
//! [`ScenarioConfig`]; `#` starts a comment. Angles are radians or one of the
//! literals `pi/2`, `pi/3`, `pi/4`, `pi/6`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical invariant
//! violation, 1 anything else (I/O).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::{self, Write as _};
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::analysis::{entropy_sweep, theta_grid, write_sweep_csv, SweepRow};
use crate::dynamics::{
    distinguishing_power, exact_outcome, run_trajectories, trajectory_rng, BetReport, Distinguishability,
    DynamicsModel, ExactOutcome,
};
use crate::error::Error;
use crate::protocol::{
    build_necker_script, build_wigner_script_with, run_script, ProtocolScript, QueryKind, StepKind, StepRecord,
    WignerOptions, BOB_OBSERVES, OBSERVE,
};
use crate::qstate::NORM_TOL;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Wigner,
    Necker,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Unitary,
    Collapse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
    Text,
}

macro_rules! keyword_enum {
    ($ty:ty, $field:literal, { $($word:literal => $variant:expr),+ $(,)? }) => {
        impl FromStr for $ty {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, String> {
                match s.trim() {
                    $($word => Ok($variant),)+
                    other => Err(format!(
                        "expected one of {}, got `{other}`",
                        [$($word),+].join("|")
                    )),
                }
            }
        }
    };
}

keyword_enum!(Scenario, "scenario", { "wigner" => Scenario::Wigner, "necker" => Scenario::Necker });
keyword_enum!(ModelKind, "model", { "unitary" => ModelKind::Unitary, "collapse" => ModelKind::Collapse });
keyword_enum!(QueryKind, "query", { "definite" => QueryKind::Definite, "which" => QueryKind::Which });
keyword_enum!(OutputFormat, "output", {
    "json" => OutputFormat::Json,
    "csv" => OutputFormat::Csv,
    "text" => OutputFormat::Text,
});

/// Fully resolved scenario settings. `theta` is the decay angle for `wigner`
/// and the flip angle `ω t` for `necker`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub theta: f64,
    pub model: ModelKind,
    pub collapse_step: Option<String>,
    pub n_trajectories: u64,
    pub master_seed: u64,
    pub output: OutputFormat,
    pub query: QueryKind,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::Wigner,
            theta: std::f64::consts::FRAC_PI_2,
            model: ModelKind::Unitary,
            collapse_step: None,
            n_trajectories: 10_000,
            master_seed: 42,
            output: OutputFormat::Text,
            query: QueryKind::Definite,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config { field: String, message: String },
    Numerical(String),
    Io(String),
}

impl CliError {
    fn config(field: &str, message: impl Into<String>) -> Self {
        CliError::Config { field: field.to_string(), message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config { field, message } => write!(f, "invalid config: `{field}`: {message}"),
            CliError::Numerical(m) => write!(f, "numerical invariant violated: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::config("scenario", e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Angle in radians, or one of the literals `pi/2`, `pi/3`, `pi/4`, `pi/6`.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    use std::f64::consts::PI;
    match s.trim() {
        "pi/2" => Ok(PI / 2.0),
        "pi/3" => Ok(PI / 3.0),
        "pi/4" => Ok(PI / 4.0),
        "pi/6" => Ok(PI / 6.0),
        other => other
            .parse::<f64>()
            .map_err(|_| format!("expected radians or pi/2|pi/3|pi/4|pi/6, got `{other}`")),
    }
}

fn parse_field<T: FromStr>(field: &str, value: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    value.trim().parse::<T>().map_err(|e| CliError::config(field, e.to_string()))
}

/// Settings that may be present in a config file or on the command line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigOverrides {
    pub scenario: Option<String>,
    pub theta: Option<String>,
    pub model: Option<String>,
    pub collapse_step: Option<String>,
    pub n_trajectories: Option<String>,
    pub master_seed: Option<String>,
    pub output: Option<String>,
    pub query: Option<String>,
}

impl ConfigOverrides {
    /// Parses the flat `key = value` scenario format.
    pub fn parse_file(text: &str) -> Result<Self, CliError> {
        let mut o = ConfigOverrides::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::config(&format!("line {}", lineno + 1), format!("expected `key = value`, got `{line}`"))
            })?;
            let (key, value) = (key.trim(), value.trim().trim_matches('"').to_string());
            let slot = match key {
                "scenario" => &mut o.scenario,
                "theta" | "omega_t" => &mut o.theta,
                "model" => &mut o.model,
                "collapse_step" => &mut o.collapse_step,
                "n_trajectories" => &mut o.n_trajectories,
                "master_seed" => &mut o.master_seed,
                "output" => &mut o.output,
                "query" => &mut o.query,
                other => return Err(CliError::config(other, "unknown key")),
            };
            *slot = Some(value);
        }
        Ok(o)
    }

    fn merge(self, over: ConfigOverrides) -> Self {
        ConfigOverrides {
            scenario: over.scenario.or(self.scenario),
            theta: over.theta.or(self.theta),
            model: over.model.or(self.model),
            collapse_step: over.collapse_step.or(self.collapse_step),
            n_trajectories: over.n_trajectories.or(self.n_trajectories),
            master_seed: over.master_seed.or(self.master_seed),
            output: over.output.or(self.output),
            query: over.query.or(self.query),
        }
    }

    /// Applies these settings on top of the defaults and validates the result.
    /// With `for_bet`, `collapse_step` may be given regardless of `model`.
    pub fn resolve(self, for_bet: bool) -> Result<ScenarioConfig, CliError> {
        let mut c = ScenarioConfig::default();
        if let Some(v) = &self.scenario {
            c.scenario = parse_field("scenario", v)?;
        }
        if let Some(v) = &self.theta {
            c.theta = parse_angle(v).map_err(|m| CliError::config("theta", m))?;
        }
        if let Some(v) = &self.model {
            c.model = parse_field("model", v)?;
        }
        c.collapse_step = self.collapse_step.clone();
        if let Some(v) = &self.n_trajectories {
            c.n_trajectories = parse_field("n_trajectories", v)?;
        }
        if let Some(v) = &self.master_seed {
            c.master_seed = parse_field("master_seed", v)?;
        }
        if let Some(v) = &self.output {
            c.output = parse_field("output", v)?;
        }
        if let Some(v) = &self.query {
            c.query = parse_field("query", v)?;
        }
        c.validate(for_bet)?;
        Ok(c)
    }
}

impl ScenarioConfig {
    pub fn validate(&self, for_bet: bool) -> Result<(), CliError> {
        let angle_field = match self.scenario {
            Scenario::Wigner => "theta",
            Scenario::Necker => "omega_t",
        };
        if !(self.theta > 0.0 && self.theta < std::f64::consts::PI) {
            return Err(CliError::config(angle_field, format!("{} is outside (0, pi)", self.theta)));
        }
        if self.n_trajectories < 1 {
            return Err(CliError::config("n_trajectories", "must be at least 1"));
        }
        if !for_bet {
            match (self.model, &self.collapse_step) {
                (ModelKind::Collapse, None) => {
                    return Err(CliError::config("collapse_step", "required when model = collapse"))
                }
                (ModelKind::Unitary, Some(_)) => {
                    return Err(CliError::config("collapse_step", "only allowed when model = collapse"))
                }
                _ => {}
            }
        }
        let script = self.script()?;
        if let Some(step) = &self.collapse_step {
            collapse_subsystem(&script, step)?;
        }
        Ok(())
    }

    pub fn script(&self) -> Result<ProtocolScript, CliError> {
        let script = match self.scenario {
            Scenario::Wigner => build_wigner_script_with(&WignerOptions { query: self.query, ..WignerOptions::new(self.theta) }),
            Scenario::Necker => build_necker_script(self.theta),
        };
        script.map_err(|e| CliError::config("theta", e.to_string()))
    }

    fn default_collapse_step(&self) -> &'static str {
        match self.scenario {
            Scenario::Wigner => BOB_OBSERVES,
            Scenario::Necker => OBSERVE,
        }
    }

    /// The collapse model named by `collapse_step` (or the scenario's
    /// observation step when none is given).
    pub fn collapse_model(&self, script: &ProtocolScript) -> Result<DynamicsModel, CliError> {
        let step = self.collapse_step.as_deref().unwrap_or(self.default_collapse_step());
        Ok(DynamicsModel::collapse_at(step, collapse_subsystem(script, step)?))
    }

    pub fn model(&self, script: &ProtocolScript) -> Result<DynamicsModel, CliError> {
        match self.model {
            ModelKind::Unitary => Ok(DynamicsModel::UnitaryOnly),
            ModelKind::Collapse => self.collapse_model(script),
        }
    }
}

/// The register a collapse after `step` acts on: the last target of a gate
/// (the register the gate writes), the record of a query, or the marked
/// subsystem of a collapse point.
pub fn collapse_subsystem(script: &ProtocolScript, step: &str) -> Result<String, CliError> {
    let s = script
        .step(step)
        .ok_or_else(|| CliError::config("collapse_step", format!("no step labelled `{step}`")))?;
    match &s.kind {
        StepKind::Gate(g) => Ok(g.targets().last().expect("gates have targets").clone()),
        StepKind::QueryDefinite { record, .. } | StepKind::QueryWhich { record, .. } => Ok(record.clone()),
        StepKind::CollapsePoint { subsystem } => Ok(subsystem.clone()),
        StepKind::ClassicalMessage(_) | StepKind::Snapshot => Err(CliError::config(
            "collapse_step",
            format!("step `{step}` does not act on a register"),
        )),
    }
}

#[derive(Debug, Serialize)]
struct LabeledAmplitude {
    basis: String,
    re: f64,
    im: f64,
    probability: f64,
}

#[derive(Debug, Serialize)]
struct RunMetrics {
    return_fidelity: f64,
    /// Level of the record register in the final state, when it is definite.
    record_final_value: Option<usize>,
    record_final_probabilities: Option<Vec<f64>>,
    peak_entropy_bits: BTreeMap<String, f64>,
    final_entropy_bits: BTreeMap<String, f64>,
    min_record_purity: Option<f64>,
    final_state: Vec<LabeledAmplitude>,
}

#[derive(Debug, Serialize)]
struct BetSection {
    unitary: BetReport,
    collapse: BetReport,
    distinguishing_power: Distinguishability,
}

#[derive(Debug, Serialize)]
struct BetMetrics {
    exact_unitary: ExactOutcome,
    exact_collapse: ExactOutcome,
}

#[derive(Debug, Serialize)]
pub struct SweepConfig {
    pub theta_min: f64,
    pub theta_max: f64,
    pub steps: usize,
    pub output: OutputFormat,
}

#[derive(Debug, Serialize)]
struct SweepMetrics {
    sweep: Vec<SweepRow>,
}

#[derive(Debug, Serialize)]
struct Report<C: Serialize, M: Serialize> {
    config: C,
    trace: Vec<StepRecord>,
    metrics: M,
    #[serde(skip_serializing_if = "Option::is_none")]
    bet: Option<BetSection>,
    version: &'static str,
}

fn check_trace(trace: &[StepRecord]) -> Result<(), CliError> {
    for r in trace {
        if r.norm_sqr.is_nan() || (r.norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(CliError::Numerical(format!("norm drift at step `{}`: {}", r.label, r.norm_sqr)));
        }
    }
    Ok(())
}

fn run_metrics(script: &ProtocolScript, trace: &crate::protocol::RunTrace) -> Result<RunMetrics, CliError> {
    let last = trace.steps.last().ok_or_else(|| CliError::Numerical("empty trace".into()))?;
    let mut peak = BTreeMap::new();
    for r in &trace.steps {
        for (k, &v) in &r.entropy_bits {
            let e = peak.entry(k.clone()).or_insert(0.0f64);
            *e = e.max(v);
        }
    }
    let record_probs = match script.record() {
        Some(r) => Some(trace.final_state.probabilities(r)?),
        None => None,
    };
    let record_final_value =
        record_probs.as_ref().and_then(|p| p.iter().position(|&x| (x - 1.0).abs() <= NORM_TOL));
    let min_record_purity = trace.steps.iter().filter_map(|r| r.record_purity).reduce(f64::min);
    let final_state = trace
        .final_state
        .labeled_amplitudes(1e-12)
        .into_iter()
        .map(|(basis, a)| LabeledAmplitude { basis, re: a.re, im: a.im, probability: a.norm_sqr() })
        .collect();
    Ok(RunMetrics {
        return_fidelity: trace.return_fidelity,
        record_final_value,
        record_final_probabilities: record_probs,
        peak_entropy_bits: peak,
        final_entropy_bits: last.entropy_bits.clone(),
        min_record_purity,
        final_state,
    })
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn trace_csv(trace: &[StepRecord]) -> Result<String, CliError> {
    let registers: Vec<String> = trace.first().map(|r| r.entropy_bits.keys().cloned().collect()).unwrap_or_default();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["index", "label", "kind", "norm_sqr", "fidelity_to_initial", "record_purity"]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
    header.extend(registers.iter().map(|r| format!("entropy_{r}_bits")));
    w.write_record(&header).map_err(|e| CliError::Io(e.to_string()))?;
    for r in trace {
        let mut row = vec![
            r.index.to_string(),
            r.label.clone(),
            r.kind.to_string(),
            r.norm_sqr.to_string(),
            r.fidelity_to_initial.to_string(),
            r.record_purity.map(|p| p.to_string()).unwrap_or_default(),
        ];
        row.extend(registers.iter().map(|k| r.entropy_bits[k].to_string()));
        w.write_record(&row).map_err(|e| CliError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Executes the scenario once and renders the report.
pub fn cmd_run(config: &ScenarioConfig) -> Result<String, CliError> {
    config.validate(false)?;
    let script = config.script()?;
    let model = config.model(&script)?;
    let mut rng = trajectory_rng(config.master_seed, 0);
    let trace = run_script(&script, &model, &mut rng)?;
    check_trace(&trace.steps)?;
    let metrics = run_metrics(&script, &trace)?;

    match config.output {
        OutputFormat::Json => to_json(&Report { config, trace: trace.steps, metrics, bet: None, version: VERSION }),
        OutputFormat::Csv => trace_csv(&trace.steps),
        OutputFormat::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "scenario {} (angle {:.6} rad), {:?}", script.name(), config.theta, model);
            let _ = writeln!(s, "{:<22} {:>10} {:>12} {:>12}", "step", "norm^2", "fid(init)", "record pur.");
            for r in &trace.steps {
                let _ = writeln!(
                    s,
                    "{:<22} {:>10.6} {:>12.6} {:>12}",
                    r.label,
                    r.norm_sqr,
                    r.fidelity_to_initial,
                    r.record_purity.map(|p| format!("{p:.6}")).unwrap_or_else(|| "-".into())
                );
            }
            let _ = writeln!(s, "return fidelity: {:.12}", metrics.return_fidelity);
            if let (Some(name), Some(v)) = (script.record(), metrics.record_final_value) {
                let _ = writeln!(s, "record `{name}` final value: {v}");
            }
            let peaks: Vec<String> = metrics.peak_entropy_bits.iter().map(|(k, v)| format!("{k}={v:.6}")).collect();
            let _ = writeln!(s, "peak entropy (bits): {}", peaks.join(" "));
            let finals: Vec<String> = metrics.final_entropy_bits.iter().map(|(k, v)| format!("{k}={v:.6}")).collect();
            let _ = writeln!(s, "final entropy (bits): {}", finals.join(" "));
            for a in &metrics.final_state {
                let _ = writeln!(s, "  |{}>  {:+.6}{:+.6}i", a.basis, a.re, a.im);
            }
            Ok(s)
        }
    }
}

/// Runs both dynamics models on the same script and seed.
pub fn cmd_bet(config: &ScenarioConfig) -> Result<String, CliError> {
    config.validate(true)?;
    let script = config.script()?;
    let collapse_model = config.collapse_model(&script)?;
    let unitary_model = DynamicsModel::UnitaryOnly;

    let unitary = run_trajectories(&script, &unitary_model, config.n_trajectories, config.master_seed)?;
    let collapse = run_trajectories(&script, &collapse_model, config.n_trajectories, config.master_seed)?;
    let power = distinguishing_power(&unitary, &collapse)?;
    let metrics = BetMetrics {
        exact_unitary: exact_outcome(&script, &unitary_model)?,
        exact_collapse: exact_outcome(&script, &collapse_model)?,
    };

    match config.output {
        OutputFormat::Json => {
            let mut rng = trajectory_rng(config.master_seed, 0);
            let trace = run_script(&script, &unitary_model, &mut rng)?;
            check_trace(&trace.steps)?;
            to_json(&Report {
                config,
                trace: trace.steps,
                metrics,
                bet: Some(BetSection { unitary, collapse, distinguishing_power: power }),
                version: VERSION,
            })
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| CliError::Io(e.to_string());
            w.write_record(["observable", "freq_unitary", "freq_collapse", "tv_distance", "z_score"]).map_err(io)?;
            w.write_record([
                "return_fidelity".to_string(),
                unitary.mean_return_fidelity.to_string(),
                collapse.mean_return_fidelity.to_string(),
                String::new(),
                String::new(),
            ])
            .map_err(io)?;
            for (name, o) in &power.observables {
                w.write_record([
                    format!("{name}_excited"),
                    o.freq_a.to_string(),
                    o.freq_b.to_string(),
                    o.tv_distance.to_string(),
                    o.z_score.map(|z| z.to_string()).unwrap_or_default(),
                ])
                .map_err(io)?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        OutputFormat::Text => {
            let mut s = String::new();
            let _ = writeln!(
                s,
                "bet on {} ({} trajectories, seed {})",
                script.name(),
                config.n_trajectories,
                config.master_seed
            );
            for (label, r) in [("unitary", &unitary), ("collapse", &collapse)] {
                let _ = writeln!(
                    s,
                    "{label:<9} return fidelity {:.6} ± {:.6}",
                    r.mean_return_fidelity, r.stderr_return_fidelity
                );
                if let Some(p) = r.freq_cat_alive_final {
                    let _ = writeln!(s, "          cat alive at end {p:.6}");
                }
                if let Some(p) = r.freq_atom_decayed_final {
                    let _ = writeln!(s, "          atom decayed at end {p:.6}");
                }
                let branches: Vec<String> = r.branch_counts.iter().map(|(k, v)| format!("{k}:{v}")).collect();
                let _ = writeln!(s, "          branches {}", branches.join(" "));
            }
            let _ = writeln!(s, "total-variation distance of final readouts: {:.6}", power.tv_distance);
            match power.trajectories_to_settle {
                Some(n) => {
                    let _ = writeln!(s, "trajectories per model for a 3-sigma verdict: {n}");
                }
                None => {
                    let _ = writeln!(s, "the models are indistinguishable on these observables");
                }
            }
            Ok(s)
        }
    }
}

pub fn cmd_sweep(theta_min: f64, theta_max: f64, steps: usize, output: OutputFormat) -> Result<String, CliError> {
    if steps < 2 {
        return Err(CliError::config("steps", format!("must be at least 2, got {steps}")));
    }
    let grid = theta_grid(theta_min, theta_max, steps).map_err(|e| CliError::config("theta_min/theta_max", e.to_string()))?;
    let rows = entropy_sweep(&grid)?;
    match output {
        OutputFormat::Csv => {
            let mut buf = Vec::new();
            write_sweep_csv(&rows, &mut buf)?;
            Ok(String::from_utf8(buf).expect("csv output is utf-8"))
        }
        OutputFormat::Json => to_json(&Report {
            config: SweepConfig { theta_min, theta_max, steps, output },
            trace: Vec::new(),
            metrics: SweepMetrics { sweep: rows },
            bet: None,
            version: VERSION,
        }),
        OutputFormat::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "{:>12} {:>18} {:>14} {:>16}", "theta", "entropy_bob_bits", "purity_paper", "fidelity_final");
            for r in rows {
                let _ = writeln!(
                    s,
                    "{:>12.6} {:>18.12} {:>14.12} {:>16.12}",
                    r.theta, r.entropy_bob_bits, r.purity_paper, r.fidelity_final
                );
            }
            Ok(s)
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "wigner-friend", version, about = "Wigner's-friend protocol simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Execute a scenario once and report the step trace.
    Run(ScenarioArgs),
    /// Compare unitary and collapse dynamics over many trajectories.
    Bet(ScenarioArgs),
    /// Tabulate entropy, record purity and return fidelity over theta.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// Scenario file with `key = value` lines.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// wigner | necker
    #[arg(long)]
    scenario: Option<String>,
    /// Decay angle (wigner) or flip angle (necker): radians or pi/2, pi/3, pi/4, pi/6.
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    /// unitary | collapse
    #[arg(long)]
    model: Option<String>,
    /// Step label after which the collapse model measures.
    #[arg(long)]
    collapse_step: Option<String>,
    /// definite | which
    #[arg(long)]
    query: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    trajectories: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    seed: Option<String>,
    /// json | csv | text
    #[arg(long)]
    output: Option<String>,
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, default_value = "pi/6", allow_hyphen_values = true)]
    theta_min: String,
    #[arg(long, default_value = "pi/2", allow_hyphen_values = true)]
    theta_max: String,
    #[arg(long, default_value_t = 50)]
    steps: usize,
    #[arg(long, default_value = "csv")]
    output: String,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

impl ScenarioArgs {
    fn resolve(&self, for_bet: bool) -> Result<ScenarioConfig, CliError> {
        let base = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;
                ConfigOverrides::parse_file(&text)?
            }
            None => ConfigOverrides::default(),
        };
        let flags = ConfigOverrides {
            scenario: self.scenario.clone(),
            theta: self.theta.clone(),
            model: self.model.clone(),
            collapse_step: self.collapse_step.clone(),
            n_trajectories: self.trajectories.clone(),
            master_seed: self.seed.clone(),
            output: self.output.clone(),
            query: self.query.clone(),
        };
        base.merge(flags).resolve(for_bet)
    }
}

fn emit(report: &str, out: &Option<PathBuf>, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, report)?,
        None => stdout.write_all(report.as_bytes())?,
    }
    Ok(())
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => {
            let config = args.resolve(false)?;
            emit(&cmd_run(&config)?, &args.out, stdout)
        }
        Command::Bet(args) => {
            let config = args.resolve(true)?;
            emit(&cmd_bet(&config)?, &args.out, stdout)
        }
        Command::Sweep(args) => {
            let min = parse_angle(&args.theta_min).map_err(|m| CliError::config("theta_min", m))?;
            let max = parse_angle(&args.theta_max).map_err(|m| CliError::config("theta_max", m))?;
            let output = parse_field("output", &args.output)?;
            emit(&cmd_sweep(min, max, args.steps, output)?, &args.out, stdout)
        }
    }
}

/// Parses `args` (including the program name) and runs the command, returning
/// the process exit code.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(rendered.as_bytes()) } else { stderr.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
