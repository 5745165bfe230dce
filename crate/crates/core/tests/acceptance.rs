//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Run with `cargo test --test acceptance`.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use common::{full_operator, h2, matvec, max_abs_diff, unitary_from_entries};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wigner_friend::analysis::{dephase, local_indistinguishability, theta_grid};
use wigner_friend::cli::{cmd_bet, OutputFormat, ScenarioConfig};
use wigner_friend::dynamics::{run_trajectories, trajectory_rng, DynamicsModel};
use wigner_friend::protocol::{
    build_necker_script, build_necker_script_with, build_wigner_script, build_wigner_script_with, query_definite,
    run_script, NeckerOptions, ProtocolScript, QueryKind, RunTrace, StepKind, WignerOptions, BOB, BOB_OBSERVES,
    PAPER, PERCEPT,
};
use wigner_friend::qstate::{GateSpec, PureState, RegisterLayout};

const ANGLES: [f64; 4] = [PI / 6.0, PI / 4.0, PI / 3.0, PI / 2.0];

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn unitary(script: &ProtocolScript) -> RunTrace {
    run_script(script, &DynamicsModel::UnitaryOnly, &mut trajectory_rng(0, 0)).expect("script runs")
}

fn round_trip() -> Outcome {
    let mut worst_fidelity = 1.0f64;
    let mut worst_bob = 0.0f64;
    let mut slowest = Duration::ZERO;
    for theta in ANGLES {
        let script = build_wigner_script(theta).unwrap();
        let start = Instant::now();
        let trace = unitary(&script);
        slowest = slowest.max(start.elapsed());
        worst_fidelity = worst_fidelity.min(trace.return_fidelity);
        worst_bob = worst_bob.max(trace.final_state.probabilities(BOB).unwrap()[1]);
        let paper = trace.final_state.probabilities(PAPER).unwrap()[1];
        if (paper - 1.0).abs() > 1e-10 {
            return Err(format!("theta={theta}: P(paper=1)={paper}"));
        }
    }
    check(
        worst_fidelity >= 1.0 - 1e-10 && worst_bob == 0.0 && slowest < Duration::from_millis(10),
        format!("min fidelity {worst_fidelity:.15}, max P(bob=1) {worst_bob:e}, slowest run {slowest:?}"),
    )
}

fn record_persistence() -> Outcome {
    let mut worst = 0.0f64;
    for theta in ANGLES {
        let trace = unitary(&build_wigner_script(theta).unwrap());
        for step in &trace.steps {
            worst = worst.max((step.record_purity.unwrap() - 1.0).abs());
        }
        let paper = trace.final_state.probabilities(PAPER).unwrap()[1];
        if (paper - 1.0).abs() > 1e-10 {
            return Err(format!("theta={theta}: final P(paper=1)={paper}"));
        }
    }
    check(worst <= 1e-10, format!("max |purity(paper) - 1| over all steps {worst:e}; final paper = 1"))
}

fn mid_protocol_mixedness() -> Outcome {
    let mut worst = 0.0f64;
    for theta in theta_grid(PI / 100.0, PI - PI / 100.0, 50).unwrap() {
        let trace = unitary(&build_wigner_script(theta).unwrap());
        let s = trace.record(BOB_OBSERVES).unwrap().entropy_bits[BOB];
        worst = worst.max((s - h2((theta / 2.0).sin().powi(2))).abs());
    }
    let at_half = unitary(&build_wigner_script(PI / 2.0).unwrap()).record(BOB_OBSERVES).unwrap().entropy_bits[BOB];
    check(
        worst <= 1e-9 && (at_half - 1.0).abs() <= 1e-9,
        format!("max |S(bob) - H2| over 50 angles {worst:e}; S(bob) at pi/2 = {at_half:.9}"),
    )
}

fn query_contrast() -> Outcome {
    let mut worst = 0.0f64;
    for theta in ANGLES {
        let definite = unitary(&build_wigner_script(theta).unwrap()).return_fidelity;
        let which_script =
            build_wigner_script_with(&WignerOptions { query: QueryKind::Which, ..WignerOptions::new(theta) }).unwrap();
        let which = unitary(&which_script).return_fidelity;
        worst = worst.max((definite - 1.0).abs()).max((which - (theta / 2.0).cos().powi(4)).abs());
    }
    let which_script =
        build_wigner_script_with(&WignerOptions { query: QueryKind::Which, ..WignerOptions::new(PI / 2.0) }).unwrap();
    let at_half = unitary(&which_script).return_fidelity;
    check(
        worst <= 1e-10 && (at_half - 0.25).abs() <= 1e-10,
        format!("max deviation from 1 / cos^4 {worst:e}; which-query fidelity at pi/2 = {at_half:.12}"),
    )
}

fn bet_statistics() -> Outcome {
    let script = build_wigner_script(PI / 2.0).unwrap();
    let collapse = DynamicsModel::collapse_at(BOB_OBSERVES, BOB);
    let start = Instant::now();
    let c = run_trajectories(&script, &collapse, 10_000, 42).map_err(|e| e.to_string())?;
    let collapse_time = start.elapsed();
    let start = Instant::now();
    let u = run_trajectories(&script, &DynamicsModel::UnitaryOnly, 10_000, 42).map_err(|e| e.to_string())?;
    let unitary_time = start.elapsed();

    let within = |x: f64, se: f64| (x - 0.5).abs() <= 3.0 * se.max(1e-12);
    let atom = c.freq_atom_decayed_final.unwrap();
    let ok = within(c.mean_return_fidelity, c.stderr_return_fidelity)
        && within(atom, c.stderr_atom_decayed_final.unwrap())
        && c.freq_cat_alive_final == Some(1.0)
        && u.mean_return_fidelity == 1.0
        && u.stderr_return_fidelity == 0.0
        && u.final_outcome_counts.len() == 1
        && collapse_time.max(unitary_time) < Duration::from_secs(5);
    check(
        ok,
        format!(
            "collapse: fidelity {:.4}±{:.4}, atom decayed {atom:.4}±{:.4}, cat alive {:?} ({collapse_time:?}); \
             unitary: fidelity {} sd {} ({unitary_time:?})",
            c.mean_return_fidelity,
            c.stderr_return_fidelity,
            c.stderr_atom_decayed_final.unwrap(),
            c.freq_cat_alive_final,
            u.mean_return_fidelity,
            u.stderr_return_fidelity,
        ),
    )
}

fn local_indistinguishability_check() -> Outcome {
    let mut worst = 0.0f64;
    for theta in ANGLES.iter().copied().chain([0.1, 1.0, 2.0, 3.0]) {
        let script = build_wigner_script(theta).unwrap();
        let mut s = script.initial_state();
        for label in ["atom_decay", "poison_release", "cat_dies", BOB_OBSERVES] {
            s = s.apply_gate(script.gate(label).unwrap()).unwrap();
        }
        let s = query_definite(&s, BOB, PAPER).unwrap();
        let mixture = dephase(&s, BOB).unwrap();
        worst = worst.max(local_indistinguishability(&s, &mixture, BOB).unwrap());
    }
    check(worst <= 1e-10, format!("max trace distance of Bob's reduced states {worst:e}"))
}

fn random_circuit_case(rng: &mut ChaCha8Rng) -> (Vec<usize>, PureState, Vec<GateSpec>) {
    const NAMES: [&str; 4] = ["q0", "q1", "q2", "q3"];
    let n = rng.random_range(1..=4);
    let dims: Vec<usize> = (0..n).map(|_| rng.random_range(2..=3)).collect();
    let layout = RegisterLayout::new(NAMES[..n].iter().copied().zip(dims.iter().copied())).unwrap();
    let total: usize = dims.iter().product();
    let amps = (0..total).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
    let state = PureState::normalized(layout, amps).unwrap();
    let gates = (0..rng.random_range(1..=12))
        .map(|k| {
            let a = rng.random_range(0..n);
            let mut targets = vec![a];
            if n > 1 && rng.random_bool(0.5) {
                targets.push((a + rng.random_range(1..n)) % n);
            }
            let dim: usize = targets.iter().map(|&t| dims[t]).product();
            let entries: Vec<(f64, f64)> =
                (0..dim * dim).map(|_| (rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
            let names = targets.iter().map(|&t| NAMES[t].to_string()).collect();
            GateSpec::new(format!("u{k}"), names, dim, unitary_from_entries(dim, &entries)).unwrap()
        })
        .collect();
    (dims, state, gates)
}

fn oracle_equivalence() -> Outcome {
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let (dims, mut state, gates) = random_circuit_case(&mut rng);
        let names: Vec<String> = state.layout().names().map(str::to_string).collect();
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        let mut reference = state.amplitudes().to_vec();
        for g in &gates {
            state = state.apply_gate(g).unwrap();
            reference = matvec(&full_operator(g, &names, &dims), &reference);
            worst = worst.max(max_abs_diff(state.amplitudes(), &reference));
        }
    }
    for omega_t in ANGLES {
        for script in [
            build_necker_script(omega_t).unwrap(),
            build_necker_script_with(&NeckerOptions { omega_t, undo_observation: false }).unwrap(),
        ] {
            let names: Vec<&str> = vec![PERCEPT, "ancilla"];
            let mut state = script.initial_state();
            let mut reference = state.amplitudes().to_vec();
            for step in script.steps() {
                if let StepKind::Gate(g) = &step.kind {
                    state = state.apply_gate(g).unwrap();
                    reference = matvec(&full_operator(g, &names, &[2, 2]), &reference);
                }
            }
            worst = worst.max(max_abs_diff(state.amplitudes(), &reference));
        }
    }
    check(worst <= 1e-12, format!("max amplitude deviation over 200 random circuits and necker scripts {worst:e}"))
}

fn scale_check() -> Outcome {
    let names: Vec<String> = (0..20).map(|i| format!("q{i}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let gates: Vec<GateSpec> = (0..100)
        .map(|_| {
            let a = rng.random_range(0..20);
            match rng.random_range(0..5) {
                0 => GateSpec::h(refs[a]),
                1 => GateSpec::ry(refs[a], rng.random::<f64>() * 2.0 * PI),
                2 => GateSpec::rz(refs[a], rng.random::<f64>() * 2.0 * PI),
                3 => GateSpec::x(refs[a]),
                _ => GateSpec::cnot(refs[a], refs[(a + rng.random_range(1..20)) % 20]),
            }
        })
        .collect();
    let start = Instant::now();
    let mut state = PureState::zero(RegisterLayout::qubits(&refs).unwrap());
    for g in &gates {
        state.apply_gate_in_place(g).unwrap();
    }
    let elapsed = start.elapsed();
    let drift = (state.norm_sqr() - 1.0).abs();
    check(
        drift <= 1e-8 && elapsed < Duration::from_secs(2),
        format!("20 qubits, 100 gates in {elapsed:?}, |norm^2 - 1| = {drift:e}"),
    )
}

fn determinism() -> Outcome {
    let config = ScenarioConfig { output: OutputFormat::Json, ..ScenarioConfig::default() };
    let a = cmd_bet(&config).map_err(|e| e.to_string())?;
    let b = cmd_bet(&config).map_err(|e| e.to_string())?;
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| cmd_bet(&config))
        .map_err(|e| e.to_string())?;
    check(
        a == b && a == single,
        format!("{} bytes, identical across repeats and on a single thread: {}", a.len(), a == b && a == single),
    )
}

fn necker() -> Outcome {
    let mut worst_fidelity = 1.0f64;
    for omega_t in ANGLES {
        worst_fidelity = worst_fidelity.min(unitary(&build_necker_script(omega_t).unwrap()).return_fidelity);
    }
    let kept = build_necker_script_with(&NeckerOptions { omega_t: PI / 2.0, undo_observation: false }).unwrap();
    let off = unitary(&kept).final_state.partial_trace(&[PERCEPT]).unwrap().matrix()[(0, 1)].norm();
    check(
        worst_fidelity >= 1.0 - 1e-10 && off <= 1e-10,
        format!("undo fidelity {worst_fidelity:.15}; percept off-diagonal with record kept {off:e}"),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("round-trip reversibility", round_trip),
        ("record persistence", record_persistence),
        ("mid-protocol mixedness", mid_protocol_mixedness),
        ("query contrast", query_contrast),
        ("bet statistics", bet_statistics),
        ("local indistinguishability", local_indistinguishability_check),
        ("oracle equivalence", oracle_equivalence),
        ("scale check", scale_check),
        ("determinism", determinism),
        ("necker preset", necker),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("[{:>2}] PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("[{:>2}] FAIL {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
