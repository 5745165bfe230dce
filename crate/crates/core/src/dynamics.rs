//! Unitary-only versus objective-collapse dynamics, and the Monte-Carlo
//! machinery that turns the bet into statistics.
//!
//! Trajectory `i` of a run seeded with `master_seed` draws from
//! `ChaCha8Rng::seed_from_u64(master_seed)` with its stream set to `i`. The
//! key depends only on the master seed and the 64-bit stream id only on the
//! trajectory index, so every trajectory has its own non-overlapping sequence
//! regardless of how trajectories are scheduled across threads.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{apply_step, evolve, ProtocolScript, CAT, ATOM};
use crate::qstate::{fidelity, PureState, NORM_TOL};

/// Minimum trajectory count for reporting z-scores.
pub const MIN_TRAJECTORIES_FOR_Z: u64 = 100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum DynamicsModel {
    UnitaryOnly,
    /// Projective measurement of `subsystem` right after the step labelled
    /// `step_label`.
    CollapseAt { step_label: String, subsystem: String },
}

impl DynamicsModel {
    pub fn collapse_at(step_label: impl Into<String>, subsystem: impl Into<String>) -> Self {
        DynamicsModel::CollapseAt { step_label: step_label.into(), subsystem: subsystem.into() }
    }

    pub fn validate(&self, script: &ProtocolScript) -> Result<()> {
        if let DynamicsModel::CollapseAt { step_label, subsystem } = self {
            if script.step(step_label).is_none() {
                return Err(Error::UnknownStep(step_label.clone()));
            }
            script.layout().position(subsystem)?;
        }
        Ok(())
    }

    pub fn is_unitary(&self) -> bool {
        matches!(self, DynamicsModel::UnitaryOnly)
    }
}

/// A single projective event.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollapseEvent {
    pub subsystem: String,
    pub outcome: usize,
    pub probability: f64,
}

/// Projective measurement of `subsystem` in its pointer basis.
pub fn collapse_step<R: Rng + ?Sized>(
    state: &PureState,
    subsystem: &str,
    rng: &mut R,
) -> Result<(PureState, CollapseEvent)> {
    let m = state.measure(subsystem, rng)?;
    let event = CollapseEvent { subsystem: subsystem.to_string(), outcome: m.outcome, probability: m.probability };
    Ok((m.state, event))
}

/// Generator for trajectory `index` of a run seeded with `master_seed`.
pub fn trajectory_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub index: u64,
    pub collapse: Option<CollapseEvent>,
    pub final_state: PureState,
    pub return_fidelity: f64,
    /// Flat basis index sampled from the final state.
    pub readout: usize,
}

/// Runs one trajectory and reads out the final state in the computational
/// basis.
pub fn run_trajectory(
    script: &ProtocolScript,
    model: &DynamicsModel,
    reference: &PureState,
    master_seed: u64,
    index: u64,
) -> Result<Trajectory> {
    let mut rng = trajectory_rng(master_seed, index);
    let mut collapse = None;
    let final_state = evolve(script, model, &mut rng, |_, _, _, event| {
        if event.is_some() {
            collapse = event;
        }
        Ok(())
    })?;
    let return_fidelity = fidelity(reference, &final_state)?;
    let readout = final_state.sample_basis(&mut rng);
    Ok(Trajectory { index, collapse, final_state, return_fidelity, readout })
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    fn binomial(successes: u64, n: u64) -> Self {
        let p = successes as f64 / n as f64;
        Self { mean: p, stderr: (p * (1.0 - p) / n as f64).sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetReport {
    pub model: DynamicsModel,
    pub script: String,
    pub n_trajectories: u64,
    pub master_seed: u64,
    pub mean_return_fidelity: f64,
    pub stderr_return_fidelity: f64,
    /// Fraction of final readouts with the cat alive, when the layout has a cat.
    pub freq_cat_alive_final: Option<f64>,
    pub stderr_cat_alive_final: Option<f64>,
    /// Fraction of final readouts with the atom decayed, when the layout has an atom.
    pub freq_atom_decayed_final: Option<f64>,
    pub stderr_atom_decayed_final: Option<f64>,
    /// Per register: fraction of final readouts with the register not in level 0.
    pub excited_final: BTreeMap<String, Estimate>,
    /// Collapse outcomes (`bob=1`), or `none` for trajectories without a collapse.
    pub branch_counts: BTreeMap<String, u64>,
    /// Final readouts labelled by register values.
    pub final_outcome_counts: BTreeMap<String, u64>,
}

impl BetReport {
    /// Final readout frequencies.
    pub fn final_distribution(&self) -> BTreeMap<String, f64> {
        let n = self.n_trajectories as f64;
        self.final_outcome_counts.iter().map(|(k, &c)| (k.clone(), c as f64 / n)).collect()
    }
}

/// `n` independent trajectories of `script` under `model`, aggregated in
/// trajectory order so the report does not depend on thread scheduling.
pub fn run_trajectories(
    script: &ProtocolScript,
    model: &DynamicsModel,
    n: u64,
    master_seed: u64,
) -> Result<BetReport> {
    if n == 0 {
        return Err(Error::InvalidArgument("n_trajectories must be at least 1".into()));
    }
    model.validate(script)?;
    let reference = script.return_reference()?;
    let trajectories: Vec<(Option<usize>, f64, usize)> = (0..n)
        .into_par_iter()
        .map(|i| {
            run_trajectory(script, model, &reference, master_seed, i)
                .map(|t| (t.collapse.map(|c| c.outcome), t.return_fidelity, t.readout))
        })
        .collect::<Result<_>>()?;

    let layout = script.layout();
    let nf = n as f64;
    let mean = trajectories.iter().map(|t| t.1).sum::<f64>() / nf;
    let var = if n > 1 {
        trajectories.iter().map(|t| (t.1 - mean).powi(2)).sum::<f64>() / (nf - 1.0)
    } else {
        0.0
    };

    let mut branch_counts = BTreeMap::new();
    let mut final_outcome_counts = BTreeMap::new();
    let mut excited = vec![0u64; layout.len()];
    let collapse_name = match model {
        DynamicsModel::CollapseAt { subsystem, .. } => Some(subsystem.as_str()),
        DynamicsModel::UnitaryOnly => None,
    };
    for &(branch, _, readout) in &trajectories {
        let key = match (branch, collapse_name) {
            (Some(o), Some(s)) => format!("{s}={o}"),
            _ => "none".to_string(),
        };
        *branch_counts.entry(key).or_insert(0) += 1;
        *final_outcome_counts.entry(layout.basis_label(readout)).or_insert(0) += 1;
        for (p, e) in excited.iter_mut().enumerate() {
            if layout.digit(readout, p) != 0 {
                *e += 1;
            }
        }
    }
    let excited_final: BTreeMap<String, Estimate> = layout
        .names()
        .zip(&excited)
        .map(|(name, &k)| (name.to_string(), Estimate::binomial(k, n)))
        .collect();
    let cat = excited_final.get(CAT).map(|e| Estimate { mean: 1.0 - e.mean, stderr: e.stderr });
    let atom = excited_final.get(ATOM).copied();

    Ok(BetReport {
        model: model.clone(),
        script: script.fingerprint(),
        n_trajectories: n,
        master_seed,
        mean_return_fidelity: mean,
        stderr_return_fidelity: (var / nf).sqrt(),
        freq_cat_alive_final: cat.map(|e| e.mean),
        stderr_cat_alive_final: cat.map(|e| e.stderr),
        freq_atom_decayed_final: atom.map(|e| e.mean),
        stderr_atom_decayed_final: atom.map(|e| e.stderr),
        excited_final,
        branch_counts,
        final_outcome_counts,
    })
}

/// Final branches of `script` under `model` with their exact weights: the
/// collapse step is expanded into every nonzero-probability outcome instead of
/// being sampled.
pub fn exact_branches(script: &ProtocolScript, model: &DynamicsModel) -> Result<Vec<(f64, PureState)>> {
    model.validate(script)?;
    let mut branches = vec![(1.0, script.initial_state())];
    for step in script.steps() {
        let mut next = Vec::with_capacity(branches.len());
        for (w, state) in branches {
            let state = apply_step(state, step)?;
            match model {
                DynamicsModel::CollapseAt { step_label, subsystem } if *step_label == step.label => {
                    let dim = state.layout().dim_of(subsystem)?;
                    for outcome in 0..dim {
                        if let Some((p, s)) = state.project(subsystem, outcome)? {
                            next.push((w * p, s));
                        }
                    }
                }
                _ => next.push((w, state)),
            }
        }
        branches = next;
    }
    let total: f64 = branches.iter().map(|b| b.0).sum();
    if (total - 1.0).abs() > NORM_TOL {
        return Err(Error::NormDrift { step: "exact_branches".into(), norm_sqr: total });
    }
    Ok(branches)
}

/// Exact final readout statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactOutcome {
    pub mean_return_fidelity: f64,
    pub final_distribution: BTreeMap<String, f64>,
    /// Per register: probability of a final readout outside level 0.
    pub excited_final: BTreeMap<String, f64>,
}

pub fn exact_outcome(script: &ProtocolScript, model: &DynamicsModel) -> Result<ExactOutcome> {
    let reference = script.return_reference()?;
    let layout = script.layout();
    let mut mean_return_fidelity = 0.0;
    let mut final_distribution = BTreeMap::new();
    let mut excited = vec![0.0; layout.len()];
    for (w, state) in exact_branches(script, model)? {
        mean_return_fidelity += w * fidelity(&reference, &state)?;
        for (i, a) in state.amplitudes().iter().enumerate() {
            let p = w * a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            *final_distribution.entry(layout.basis_label(i)).or_insert(0.0) += p;
            for (pos, e) in excited.iter_mut().enumerate() {
                if layout.digit(i, pos) != 0 {
                    *e += p;
                }
            }
        }
    }
    let excited_final = layout.names().map(str::to_string).zip(excited).collect();
    Ok(ExactOutcome { mean_return_fidelity, final_distribution, excited_final })
}

/// `½ Σ |p(x) − q(x)|` over the union of outcomes.
pub fn total_variation(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    let keys: BTreeSet<&String> = a.keys().chain(b.keys()).collect();
    0.5 * keys
        .into_iter()
        .map(|k| (a.get(k).copied().unwrap_or(0.0) - b.get(k).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservableContrast {
    pub freq_a: f64,
    pub freq_b: f64,
    /// `|freq_a − freq_b|`, the total-variation distance of the binary observable.
    pub tv_distance: f64,
    /// Two-proportion z-score; absent below [`MIN_TRAJECTORIES_FOR_Z`]
    /// trajectories or when both standard errors vanish with a nonzero gap.
    pub z_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Distinguishability {
    /// Total-variation distance between the final readout tables.
    pub tv_distance: f64,
    /// Keyed by register; the observable is "register not in level 0".
    pub observables: BTreeMap<String, ObservableContrast>,
    /// Trajectories per model needed for a 3σ separation on the most
    /// different observable, when the models differ at all.
    pub trajectories_to_settle: Option<u64>,
}

/// How well the final statistics of two reports on the same script tell the
/// models apart.
pub fn distinguishing_power(a: &BetReport, b: &BetReport) -> Result<Distinguishability> {
    if a.script != b.script {
        return Err(Error::ReportMismatch(format!("scripts differ: {} vs {}", a.script, b.script)));
    }
    if a.n_trajectories != b.n_trajectories {
        return Err(Error::ReportMismatch(format!(
            "trajectory counts differ: {} vs {}",
            a.n_trajectories, b.n_trajectories
        )));
    }
    let tv_distance = total_variation(&a.final_distribution(), &b.final_distribution());
    let z_allowed = a.n_trajectories >= MIN_TRAJECTORIES_FOR_Z;
    let mut observables = BTreeMap::new();
    let mut settle: Option<(f64, u64)> = None;
    for (name, ea) in &a.excited_final {
        let eb = b
            .excited_final
            .get(name)
            .ok_or_else(|| Error::ReportMismatch(format!("register `{name}` missing")))?;
        let diff = ea.mean - eb.mean;
        let se = (ea.stderr.powi(2) + eb.stderr.powi(2)).sqrt();
        let z_score = match (z_allowed, se > 0.0, diff == 0.0) {
            (false, _, _) => None,
            (true, true, _) => Some(diff / se),
            (true, false, true) => Some(0.0),
            (true, false, false) => None,
        };
        if diff != 0.0 {
            let var = ea.mean * (1.0 - ea.mean) + eb.mean * (1.0 - eb.mean);
            let needed = ((9.0 * var / (diff * diff)).ceil() as u64).max(1);
            if settle.is_none_or(|(d, _)| diff.abs() > d) {
                settle = Some((diff.abs(), needed));
            }
        }
        observables.insert(
            name.clone(),
            ObservableContrast { freq_a: ea.mean, freq_b: eb.mean, tv_distance: diff.abs(), z_score },
        );
    }
    Ok(Distinguishability { tv_distance, observables, trajectories_to_settle: settle.map(|s| s.1) })
}
