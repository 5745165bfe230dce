use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use wigner_friend::dynamics::{exact_branches, exact_outcome, run_trajectories, run_trajectory, DynamicsModel};
use wigner_friend::protocol::{build_wigner_script, BOB, BOB_OBSERVES};
use wigner_friend::qstate::DensityMatrix;

fn collapse() -> DynamicsModel {
    DynamicsModel::collapse_at(BOB_OBSERVES, BOB)
}

fn closed_form(theta: f64) -> (f64, f64) {
    let (c2, s2) = ((theta / 2.0).cos().powi(2), (theta / 2.0).sin().powi(2));
    (c2 * c2 + s2 * s2, theta.sin().powi(2) / 2.0)
}

fn within_3_sigma(estimate: f64, stderr: f64, target: f64) -> bool {
    (estimate - target).abs() <= 3.0 * stderr.max(1e-12)
}

#[test]
fn collapse_statistics_at_right_angle() {
    let script = build_wigner_script(PI / 2.0).unwrap();
    let r = run_trajectories(&script, &collapse(), 10_000, 42).unwrap();
    assert!(within_3_sigma(r.mean_return_fidelity, r.stderr_return_fidelity, 0.5));
    assert!(within_3_sigma(r.freq_atom_decayed_final.unwrap(), r.stderr_atom_decayed_final.unwrap(), 0.5));
    assert_eq!(r.freq_cat_alive_final, Some(1.0));
    assert_eq!(r.branch_counts.values().sum::<u64>(), 10_000);
}

#[test]
fn collapse_estimates_converge_at_third_pi() {
    let theta = PI / 3.0;
    let (fidelity, decayed) = closed_form(theta);
    assert!((fidelity - 0.625).abs() < 1e-15);
    let script = build_wigner_script(theta).unwrap();
    let exact = exact_outcome(&script, &collapse()).unwrap();
    assert!((exact.mean_return_fidelity - fidelity).abs() <= 1e-12);
    assert!((exact.excited_final["atom"] - decayed).abs() <= 1e-12);

    let mut previous = f64::INFINITY;
    for n in [100u64, 1_000, 10_000] {
        let r = run_trajectories(&script, &collapse(), n, 2024).unwrap();
        assert!(within_3_sigma(r.mean_return_fidelity, r.stderr_return_fidelity, fidelity), "n={n}");
        assert!(within_3_sigma(r.freq_atom_decayed_final.unwrap(), r.stderr_atom_decayed_final.unwrap(), decayed));
        assert!(r.stderr_return_fidelity < previous);
        previous = r.stderr_return_fidelity;
    }
}

#[test]
fn trajectory_average_reproduces_branch_mixture() {
    let theta = PI / 3.0;
    let script = build_wigner_script(theta).unwrap();
    let reference = script.return_reference().unwrap();
    let n = 4_000u64;
    let dim = script.layout().total_dim();

    let mut sum = DMatrix::<Complex64>::zeros(dim, dim);
    let mut sum_sq = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..n {
        let t = run_trajectory(&script, &collapse(), &reference, 11, i).unwrap();
        let rho = DensityMatrix::from_pure(&t.final_state);
        sum += rho.matrix();
        sum_sq += rho.matrix().map(|z| z.norm_sqr());
    }
    let mean = sum / Complex64::new(n as f64, 0.0);

    let branches = exact_branches(&script, &collapse()).unwrap();
    let components: Vec<(f64, &_)> = branches.iter().map(|(w, s)| (*w, s)).collect();
    let exact = DensityMatrix::mixture(&components).unwrap();

    for i in 0..dim {
        for j in 0..dim {
            let m = mean[(i, j)];
            let var = (sum_sq[(i, j)] / n as f64 - m.norm_sqr()).max(0.0);
            let stderr = (var / (n - 1) as f64).sqrt();
            assert!((m - exact.matrix()[(i, j)]).norm() <= 3.0 * stderr + 1e-12, "entry ({i},{j})");
        }
    }
}

#[test]
fn unitary_trajectories_are_identical() {
    for theta in [PI / 6.0, PI / 2.0] {
        let script = build_wigner_script(theta).unwrap();
        let r = run_trajectories(&script, &DynamicsModel::UnitaryOnly, 2_000, 5).unwrap();
        assert_eq!(r.mean_return_fidelity, 1.0);
        assert_eq!(r.stderr_return_fidelity, 0.0);
        assert_eq!(r.branch_counts.get("none"), Some(&2_000));
        assert_eq!(r.final_outcome_counts.len(), 1);
    }
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let script = build_wigner_script(PI / 3.0).unwrap();
    let parallel = run_trajectories(&script, &collapse(), 3_000, 99).unwrap();
    let serial = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| run_trajectories(&script, &collapse(), 3_000, 99).unwrap());
    assert_eq!(serde_json::to_string(&parallel).unwrap(), serde_json::to_string(&serial).unwrap());
    let other_seed = run_trajectories(&script, &collapse(), 3_000, 100).unwrap();
    assert_ne!(parallel.branch_counts, other_seed.branch_counts);
}
