//! The Wigner's-friend experiment (and the two-register Necker preset) as an
//! inspectable script of labelled steps.
//!
//! Basis conventions for the laboratory registers, level 0 / level 1:
//!
//! | register | 0                 | 1                    |
//! |----------|-------------------|----------------------|
//! | `atom`   | no decay          | decayed              |
//! | `poison` | in the bottle     | released             |
//! | `cat`    | alive             | dead                 |
//! | `bob`    | sees alive cat    | sees dead cat        |
//! | `paper`  | blank             | "yes, definite"      |
//!
//! The entangling cascade is a chain `atom → poison → cat → bob`, each CNOT
//! controlled on the previous link. The reversal undoes the chain in reverse
//! order and never touches the paper.
//!
//! With this gate set a collapse of Bob's memory followed by the reversal
//! always returns the cat alive: the dead branch `|1111⟩` unwinds to
//! `|1000⟩` and the final `R_y(−θ)` leaves the atom in `sin|0⟩ + cos|1⟩`.
//! Collapse shows up instead as a return fidelity of `cos⁴(θ/2) + sin⁴(θ/2)`
//! and a residual atom excitation of `sin²θ / 2`. An optional `mixer` gate can
//! be inserted before the reversal to explore other gate sets.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{collapse_step, CollapseEvent, DynamicsModel};
use crate::error::{Error, Result};
use crate::qstate::{fidelity, GateSpec, PureState, RegisterLayout, NORM_TOL};

pub const ATOM: &str = "atom";
pub const POISON: &str = "poison";
pub const CAT: &str = "cat";
pub const BOB: &str = "bob";
pub const PAPER: &str = "paper";

pub const PERCEPT: &str = "percept";
pub const ANCILLA: &str = "ancilla";

/// Label of the step at which Bob's memory records the cat.
pub const BOB_OBSERVES: &str = "bob_observes";
/// Label of the Necker observation step.
pub const OBSERVE: &str = "observe";

const UNDO_PREFIX: &str = "undo_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum StepKind {
    Gate(GateSpec),
    /// "Do you see a definite state?" written onto `record`.
    QueryDefinite { memory: String, record: String },
    /// "Dead or alive?" written onto `record`.
    QueryWhich { memory: String, record: String },
    ClassicalMessage(String),
    /// Marker where a collapse model may act; no effect on its own.
    CollapsePoint { subsystem: String },
    Snapshot,
}

impl StepKind {
    pub fn name(&self) -> &'static str {
        match self {
            StepKind::Gate(_) => "gate",
            StepKind::QueryDefinite { .. } => "query_definite",
            StepKind::QueryWhich { .. } => "query_which",
            StepKind::ClassicalMessage(_) => "classical_message",
            StepKind::CollapsePoint { .. } => "collapse_point",
            StepKind::Snapshot => "snapshot",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolStep {
    pub label: String,
    #[serde(flatten)]
    pub kind: StepKind,
    pub reversible: bool,
}

impl ProtocolStep {
    pub fn gate(label: impl Into<String>, gate: GateSpec) -> Self {
        Self { label: label.into(), kind: StepKind::Gate(gate), reversible: true }
    }

    fn fixed(label: impl Into<String>, kind: StepKind) -> Self {
        Self { label: label.into(), kind, reversible: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum QueryKind {
    #[default]
    Definite,
    Which,
}

/// An ordered list of steps over a layout, starting from a basis state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScriptRepr")]
pub struct ProtocolScript {
    name: String,
    layout: RegisterLayout,
    initial: Vec<usize>,
    theta: f64,
    record: Option<String>,
    steps: Vec<ProtocolStep>,
}

#[derive(Deserialize)]
struct ScriptRepr {
    name: String,
    layout: RegisterLayout,
    initial: Vec<usize>,
    theta: f64,
    record: Option<String>,
    steps: Vec<ProtocolStep>,
}

impl TryFrom<ScriptRepr> for ProtocolScript {
    type Error = Error;

    fn try_from(r: ScriptRepr) -> Result<Self> {
        ProtocolScript::new(r.name, r.layout, r.initial, r.theta, r.record, r.steps)
    }
}

impl ProtocolScript {
    /// `initial` holds the starting level of each register in layout order.
    /// `record` names the register whose purity is tracked in run traces.
    pub fn new(
        name: impl Into<String>,
        layout: RegisterLayout,
        initial: Vec<usize>,
        theta: f64,
        record: Option<String>,
        steps: Vec<ProtocolStep>,
    ) -> Result<Self> {
        layout.flat_index(&initial)?;
        if let Some(r) = &record {
            layout.position(r)?;
        }
        for (i, step) in steps.iter().enumerate() {
            if steps[..i].iter().any(|s| s.label == step.label) {
                return Err(Error::InvalidArgument(format!("duplicate step label `{}`", step.label)));
            }
            match &step.kind {
                StepKind::Gate(g) => {
                    let dim: usize = g
                        .targets()
                        .iter()
                        .map(|t| layout.dim_of(t))
                        .product::<Result<usize>>()?;
                    if dim != g.dim() {
                        return Err(Error::GateDimension {
                            name: g.name().to_string(),
                            expected: dim,
                            actual: g.dim(),
                        });
                    }
                }
                StepKind::QueryDefinite { memory, record } | StepKind::QueryWhich { memory, record } => {
                    layout.position(memory)?;
                    layout.position(record)?;
                    if memory == record {
                        return Err(Error::DuplicateSubsystem(memory.clone()));
                    }
                }
                StepKind::CollapsePoint { subsystem } => {
                    layout.position(subsystem)?;
                }
                StepKind::ClassicalMessage(_) | StepKind::Snapshot => {}
            }
            if step.reversible && !matches!(step.kind, StepKind::Gate(_)) {
                return Err(Error::InvalidArgument(format!(
                    "step `{}` of kind {} cannot be reversible",
                    step.label,
                    step.kind.name()
                )));
            }
        }
        Ok(Self { name: name.into(), layout, initial, theta, record, steps })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    /// Rotation angle the script was built with (θ or ωt).
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn record(&self) -> Option<&str> {
        self.record.as_deref()
    }

    pub fn steps(&self) -> &[ProtocolStep] {
        &self.steps
    }

    pub fn step(&self, label: &str) -> Option<&ProtocolStep> {
        self.steps.iter().find(|s| s.label == label)
    }

    pub fn initial_state(&self) -> PureState {
        let index = self.layout.flat_index(&self.initial).expect("validated at construction");
        PureState::basis_index(self.layout.clone(), index)
    }

    /// The initial state with every record write applied to it: the state a
    /// perfect reversal returns to.
    pub fn return_reference(&self) -> Result<PureState> {
        let mut state = self.initial_state();
        for step in &self.steps {
            match &step.kind {
                StepKind::QueryDefinite { memory, record } => state = query_definite(&state, memory, record)?,
                StepKind::QueryWhich { memory, record } => state = query_which(&state, memory, record)?,
                _ => {}
            }
        }
        Ok(state)
    }

    /// Stable identifier for comparing reports produced from the same script.
    pub fn fingerprint(&self) -> String {
        let labels: Vec<&str> = self.steps.iter().map(|s| s.label.as_str()).collect();
        format!("{}(theta={:?})[{}]", self.name, self.theta, labels.join(","))
    }

    /// The gate at `label`, if that step is a gate.
    pub fn gate(&self, label: &str) -> Option<&GateSpec> {
        match &self.step(label)?.kind {
            StepKind::Gate(g) => Some(g),
            _ => None,
        }
    }
}

fn check_angle(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < std::f64::consts::PI {
        Ok(())
    } else {
        Err(Error::AngleOutOfRange { name, value })
    }
}

pub fn laboratory_layout() -> RegisterLayout {
    RegisterLayout::qubits(&[ATOM, POISON, CAT, BOB, PAPER]).expect("static layout")
}

#[derive(Debug, Clone)]
pub struct WignerOptions {
    pub theta: f64,
    pub query: QueryKind,
    /// Extra gate applied between the midpoint snapshot and the reversal.
    /// Not part of the reversal.
    pub mixer: Option<GateSpec>,
}

impl WignerOptions {
    pub fn new(theta: f64) -> Self {
        Self { theta, query: QueryKind::Definite, mixer: None }
    }
}

/// The standard script with a definiteness query.
pub fn build_wigner_script(theta: f64) -> Result<ProtocolScript> {
    build_wigner_script_with(&WignerOptions::new(theta))
}

pub fn build_wigner_script_with(opts: &WignerOptions) -> Result<ProtocolScript> {
    let theta = opts.theta;
    check_angle("theta", theta)?;
    let layout = laboratory_layout();

    let cascade = vec![
        ProtocolStep::gate("atom_decay", GateSpec::ry(ATOM, theta)),
        ProtocolStep::gate("poison_release", GateSpec::cnot(ATOM, POISON)),
        ProtocolStep::gate("cat_dies", GateSpec::cnot(POISON, CAT)),
        ProtocolStep::gate(BOB_OBSERVES, GateSpec::cnot(CAT, BOB)),
    ];
    let reversal = reversed(&cascade)?;

    let mut steps = vec![ProtocolStep::fixed("prepare", StepKind::Snapshot)];
    steps.extend(cascade);
    let (label, kind) = match opts.query {
        QueryKind::Definite => (
            "query_definite",
            StepKind::QueryDefinite { memory: BOB.into(), record: PAPER.into() },
        ),
        QueryKind::Which => ("query_which", StepKind::QueryWhich { memory: BOB.into(), record: PAPER.into() }),
    };
    steps.push(ProtocolStep::fixed(label, kind));
    steps.push(ProtocolStep::fixed("alice_message", StepKind::ClassicalMessage(lab_state_message(theta))));
    steps.push(ProtocolStep::fixed("midpoint", StepKind::Snapshot));
    if let Some(mixer) = &opts.mixer {
        steps.push(ProtocolStep {
            label: "mixer".into(),
            kind: StepKind::Gate(mixer.clone()),
            reversible: false,
        });
    }
    steps.extend(reversal);
    steps.push(ProtocolStep::fixed("final", StepKind::Snapshot));

    let name = match opts.query {
        QueryKind::Definite => "wigner",
        QueryKind::Which => "wigner-which",
    };
    ProtocolScript::new(name, layout, vec![0; 5], theta, Some(PAPER.into()), steps)
}

fn lab_state_message(theta: f64) -> String {
    let (s, c) = (theta / 2.0).sin_cos();
    format!(
        "You are in the state ({c:.6}|atom=0,poison=0,cat=0,bob=0> + {s:.6}|atom=1,poison=1,cat=1,bob=1>) (x) |paper=1>"
    )
}

#[derive(Debug, Clone)]
pub struct NeckerOptions {
    pub omega_t: f64,
    /// Undo the observation as well as the flip. When false the ancilla keeps
    /// its which-reading record.
    pub undo_observation: bool,
}

pub fn build_necker_script(omega_t: f64) -> Result<ProtocolScript> {
    build_necker_script_with(&NeckerOptions { omega_t, undo_observation: true })
}

pub fn build_necker_script_with(opts: &NeckerOptions) -> Result<ProtocolScript> {
    if !opts.omega_t.is_finite() {
        return Err(Error::AngleOutOfRange { name: "omega_t", value: opts.omega_t });
    }
    let layout = RegisterLayout::qubits(&[PERCEPT, ANCILLA])?;
    let flip = ProtocolStep::gate("flip", GateSpec::ry(PERCEPT, opts.omega_t));
    let mut observe = ProtocolStep::gate(OBSERVE, GateSpec::cnot(PERCEPT, ANCILLA));
    observe.reversible = opts.undo_observation;
    let forward = vec![flip, observe];
    let reversal = reversed(&forward)?;

    let mut steps = vec![ProtocolStep::fixed("prepare", StepKind::Snapshot)];
    steps.extend(forward);
    steps.push(ProtocolStep::fixed("observed", StepKind::Snapshot));
    steps.extend(reversal);
    steps.push(ProtocolStep::fixed("final", StepKind::Snapshot));
    let name = if opts.undo_observation { "necker" } else { "necker-recorded" };
    ProtocolScript::new(name, layout, vec![0, 0], opts.omega_t, Some(ANCILLA.into()), steps)
}

fn undo_label(label: &str) -> String {
    match label.strip_prefix(UNDO_PREFIX) {
        Some(orig) => orig.to_string(),
        None => format!("{UNDO_PREFIX}{label}"),
    }
}

fn reversed(steps: &[ProtocolStep]) -> Result<Vec<ProtocolStep>> {
    let out: Vec<ProtocolStep> = steps
        .iter()
        .rev()
        .filter(|s| s.reversible)
        .filter_map(|s| match &s.kind {
            StepKind::Gate(g) => Some(ProtocolStep::gate(undo_label(&s.label), g.dagger())),
            _ => None,
        })
        .collect();
    if out.is_empty() {
        return Err(Error::NothingToReverse);
    }
    Ok(out)
}

/// Inverse gates of the reversible steps, in reverse order. Record writes,
/// messages and other irreversible steps are skipped.
pub fn reverse_steps(script: &ProtocolScript) -> Result<ProtocolScript> {
    let steps = reversed(&script.steps)?;
    let name = match script.name.strip_suffix("-reversed") {
        Some(orig) => orig.to_string(),
        None => format!("{}-reversed", script.name),
    };
    ProtocolScript::new(
        name,
        script.layout.clone(),
        script.initial.clone(),
        script.theta,
        script.record.clone(),
        steps,
    )
}

fn require_blank(state: &PureState, record: &str) -> Result<()> {
    let probs = state.probabilities(record)?;
    if probs.iter().skip(1).sum::<f64>() > NORM_TOL {
        return Err(Error::RecordNotBlank(record.to_string()));
    }
    Ok(())
}

/// Unitary on `[memory, record]` that writes "yes" (level 1) onto the record
/// whenever the memory is in a pointer-basis state.
///
/// On a register measured in its computational basis every basis vector is a
/// pointer state, so the predicate holds in every branch and the gate is
/// `I ⊗ X`. The answer is the same in all branches, which is why the record
/// factorizes. For a memory with non-pointer levels the predicate would become
/// a genuine projector and the control would matter.
pub fn definite_query_gate(memory: &str, dim_memory: usize, record: &str, dim_record: usize) -> Result<GateSpec> {
    let n = dim_memory * dim_record;
    let mut m = vec![Complex64::new(0.0, 0.0); n * n];
    let is_pointer_state = |_level: usize| true;
    for mem in 0..dim_memory {
        for r in 0..dim_record {
            let written = if is_pointer_state(mem) { swap01(r) } else { r };
            m[(mem * dim_record + written) * n + mem * dim_record + r] = Complex64::new(1.0, 0.0);
        }
    }
    GateSpec::new("query_definite", vec![memory.into(), record.into()], n, m)
}

/// Unitary on `[memory, record]` adding the memory value onto the record,
/// `|m, r⟩ → |m, r + m mod d⟩`. For qubits this is a CNOT.
pub fn which_query_gate(memory: &str, dim_memory: usize, record: &str, dim_record: usize) -> Result<GateSpec> {
    let n = dim_memory * dim_record;
    let mut m = vec![Complex64::new(0.0, 0.0); n * n];
    for mem in 0..dim_memory {
        for r in 0..dim_record {
            let written = (r + mem) % dim_record;
            m[(mem * dim_record + written) * n + mem * dim_record + r] = Complex64::new(1.0, 0.0);
        }
    }
    GateSpec::new("query_which", vec![memory.into(), record.into()], n, m)
}

fn swap01(level: usize) -> usize {
    match level {
        0 => 1,
        1 => 0,
        other => other,
    }
}

/// Asks whether `memory` sees a definite outcome, writing the answer onto the
/// blank `record` register without entangling it.
pub fn query_definite(state: &PureState, memory: &str, record: &str) -> Result<PureState> {
    require_blank(state, record)?;
    let layout = state.layout();
    let gate = definite_query_gate(memory, layout.dim_of(memory)?, record, layout.dim_of(record)?)?;
    state.apply_gate(&gate)
}

/// Asks which outcome `memory` sees, copying it onto the blank `record`.
pub fn query_which(state: &PureState, memory: &str, record: &str) -> Result<PureState> {
    require_blank(state, record)?;
    let layout = state.layout();
    let gate = which_query_gate(memory, layout.dim_of(memory)?, record, layout.dim_of(record)?)?;
    state.apply_gate(&gate)
}

/// Metrics captured after each executed step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub index: usize,
    pub label: String,
    pub kind: &'static str,
    pub norm_sqr: f64,
    pub fidelity_to_initial: f64,
    /// Entropy of each single register's reduced state, in bits.
    pub entropy_bits: BTreeMap<String, f64>,
    /// Purity of the record register's reduced state.
    pub record_purity: Option<f64>,
    pub collapse: Option<CollapseEvent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub steps: Vec<StepRecord>,
    pub final_state: PureState,
    /// Fidelity of the final state to [`ProtocolScript::return_reference`].
    pub return_fidelity: f64,
}

impl RunTrace {
    pub fn record(&self, label: &str) -> Option<&StepRecord> {
        self.steps.iter().find(|s| s.label == label)
    }
}

/// The unitary part of a step. Messages, markers and snapshots leave the
/// amplitudes untouched.
pub(crate) fn apply_step(mut state: PureState, step: &ProtocolStep) -> Result<PureState> {
    match &step.kind {
        StepKind::Gate(g) => state.apply_gate_in_place(g)?,
        StepKind::QueryDefinite { memory, record } => state = query_definite(&state, memory, record)?,
        StepKind::QueryWhich { memory, record } => state = query_which(&state, memory, record)?,
        StepKind::ClassicalMessage(_) | StepKind::CollapsePoint { .. } | StepKind::Snapshot => {}
    }
    Ok(state)
}

/// Executes `script` under `model`, calling `observe` after every step with
/// the current state and any collapse that happened at that step.
pub(crate) fn evolve<R, F>(
    script: &ProtocolScript,
    model: &DynamicsModel,
    rng: &mut R,
    mut observe: F,
) -> Result<PureState>
where
    R: Rng + ?Sized,
    F: FnMut(usize, &ProtocolStep, &PureState, Option<CollapseEvent>) -> Result<()>,
{
    model.validate(script)?;
    let mut state = script.initial_state();
    for (index, step) in script.steps.iter().enumerate() {
        state = apply_step(state, step)?;
        let mut event = None;
        if let DynamicsModel::CollapseAt { step_label, subsystem } = model {
            if *step_label == step.label {
                let (branch, ev) = collapse_step(&state, subsystem, rng)?;
                state = branch;
                event = Some(ev);
            }
        }
        let norm_sqr = state.norm_sqr();
        if norm_sqr.is_nan() || (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(Error::NormDrift { step: step.label.clone(), norm_sqr });
        }
        observe(index, step, &state, event)?;
    }
    Ok(state)
}

/// Runs `script` and records per-step metrics.
pub fn run_script<R: Rng + ?Sized>(
    script: &ProtocolScript,
    model: &DynamicsModel,
    rng: &mut R,
) -> Result<RunTrace> {
    let initial = script.initial_state();
    let names: Vec<String> = script.layout.names().map(str::to_string).collect();
    let mut steps = Vec::with_capacity(script.steps.len());
    let final_state = evolve(script, model, rng, |index, step, state, collapse| {
        let mut entropy_bits = BTreeMap::new();
        for name in &names {
            let rho = state.partial_trace(&[name.as_str()])?;
            entropy_bits.insert(name.clone(), rho.von_neumann_entropy()?);
        }
        let record_purity = match &script.record {
            Some(r) => Some(state.partial_trace(&[r.as_str()])?.purity()),
            None => None,
        };
        steps.push(StepRecord {
            index,
            label: step.label.clone(),
            kind: step.kind.name(),
            norm_sqr: state.norm_sqr(),
            fidelity_to_initial: fidelity(&initial, state)?,
            entropy_bits,
            record_purity,
            collapse,
        });
        Ok(())
    })?;
    let return_fidelity = fidelity(&script.return_reference()?, &final_state)?;
    Ok(RunTrace { steps, final_state, return_fidelity })
}
