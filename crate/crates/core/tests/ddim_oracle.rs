use laf_core::diffusion::{make_schedule, sample, LatentState, ScoreModelSpec};
use laf_core::guidance::GuidanceParams;
use laf_core::locate::EditPlan;

/// Probability-flow ODE endpoint for N(2, 0.25) started at z = 0, t = 1000,
/// integrated offline with RK4 at ten substeps per DDIM interval.
const REFERENCE_ENDPOINT: f64 = 1.9936470858;

const MU: f64 = 2.0;
const VAR0: f64 = 0.25;

fn alpha_bars() -> Vec<f64> {
    let mut out = vec![1.0];
    for s in 1..=1000 {
        let beta = 1e-4 + (0.02 - 1e-4) * (s - 1) as f64 / 999.0;
        out.push(out[s - 1] * (1.0 - beta));
    }
    out
}

/// dy/dsigma for y = z / sqrt(ab), sigma^2 = (1 - ab) / ab.
fn flow(sigma: f64, y: f64) -> f64 {
    sigma * (y - MU) / (VAR0 + sigma * sigma)
}

fn rk4_endpoint(substeps: usize) -> f64 {
    let ab = alpha_bars();
    let sigma = |t: usize| ((1.0 - ab[t]) / ab[t]).sqrt();
    let mut y = 0.0;
    for t in (1..=1000).rev() {
        let (s0, s1) = (sigma(t), sigma(t - 1));
        let h = (s1 - s0) / substeps as f64;
        for k in 0..substeps {
            let s = s0 + h * k as f64;
            let k1 = flow(s, y);
            let k2 = flow(s + h / 2.0, y + h / 2.0 * k1);
            let k3 = flow(s + h / 2.0, y + h / 2.0 * k2);
            let k4 = flow(s + h, y + h * k3);
            y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
    }
    y
}

fn ddim_endpoint(steps: usize) -> f64 {
    let model = ScoreModelSpec::single("object", vec![MU], VAR0);
    let sched = make_schedule(1000, 1e-4, 0.02, steps).unwrap();
    let plan = EditPlan::positive_only(vec!["object".into()]);
    let init = LatentState::new(vec![0.0], 1000).unwrap();
    let traj = sample(&model, &plan, GuidanceParams { w: 0.0, eta: 0.0 }, &sched, init, 0).unwrap();
    traj.final_state().z[0]
}

#[test]
fn in_test_integrator_agrees_with_frozen_reference() {
    let y = rk4_endpoint(10);
    assert!((y - REFERENCE_ENDPOINT).abs() < 1e-8, "{y}");
    let closed = MU - MU * (VAR0 / (VAR0 + 1.0 / alpha_bars()[1000] - 1.0)).sqrt();
    assert!((y - closed).abs() < 1e-8, "{y} vs {closed}");
}

#[test]
fn thousand_step_ddim_matches_reference() {
    let z = ddim_endpoint(1000);
    assert!((z - REFERENCE_ENDPOINT).abs() < 1e-2, "{z}");
}

#[test]
fn coarser_grids_stay_close() {
    let errs: Vec<f64> = [50, 250, 1000]
        .iter()
        .map(|&n| (ddim_endpoint(n) - REFERENCE_ENDPOINT).abs())
        .collect();
    assert!(errs.iter().all(|e| *e < 5e-2), "{errs:?}");
    assert!(errs[2] <= errs[0], "{errs:?}");
}
