use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::model::{Condition, NoiseModel};
use super::rng::NoiseStream;
use super::schedule::NoiseSchedule;
use crate::error::{Error, Result};
use crate::guidance::{compose_laf, GuidanceParams, NoisePrediction};
use crate::locate::EditPlan;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentState {
    pub z: Vec<f64>,
    pub t: usize,
}

impl LatentState {
    pub fn new(z: Vec<f64>, t: usize) -> Result<Self> {
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "latent" });
        }
        Ok(Self { z, t })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// States from the starting timestep down to `t = 0`.
    pub states: Vec<LatentState>,
    pub seed: u64,
    pub params: GuidanceParams,
}

impl Trajectory {
    pub fn final_state(&self) -> &LatentState {
        self.states.last().expect("trajectory is never empty")
    }

    /// `t,z0,z1,...` rows; floats use Rust's shortest round-trip formatting
    /// so equal trajectories produce byte-identical files.
    pub fn to_csv(&self) -> String {
        let dim = self.states.first().map_or(0, |s| s.z.len());
        let mut out = String::from("t");
        for i in 0..dim {
            write!(out, ",z{i}").unwrap();
        }
        out.push('\n');
        for s in &self.states {
            write!(out, "{}", s.t).unwrap();
            for v in &s.z {
                write!(out, ",{v:?}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Deterministic DDIM update from `t` to `t_prev`:
/// `x0 = (z - sqrt(1 - ab_t) eps) / sqrt(ab_t)`,
/// `z_prev = sqrt(ab_prev) x0 + sqrt(1 - ab_prev) eps`.
pub fn ddim_step(
    z_t: &LatentState,
    eps: &NoisePrediction,
    t_prev: usize,
    sched: &NoiseSchedule,
) -> Result<LatentState> {
    let t = z_t.t;
    if t_prev >= t {
        return Err(Error::TimestepOrder { t, t_prev });
    }
    if t > sched.train_steps {
        return Err(Error::OffGrid(t));
    }
    if eps.t != t {
        return Err(Error::TimestepMismatch {
            expected: t,
            actual: eps.t,
        });
    }
    if eps.dim() != z_t.z.len() {
        return Err(Error::DimensionMismatch {
            expected: z_t.z.len(),
            actual: eps.dim(),
        });
    }
    let (ab, ab_prev) = (sched.alpha_bar(t), sched.alpha_bar(t_prev));
    let (sa, sn) = (ab.sqrt(), (1.0 - ab).sqrt());
    let (sa_prev, sn_prev) = (ab_prev.sqrt(), (1.0 - ab_prev).sqrt());
    let z = z_t
        .z
        .iter()
        .zip(&eps.values)
        .map(|(z, e)| {
            let x0 = (z - sn * e) / sa;
            sa_prev * x0 + sn_prev * e
        })
        .collect();
    LatentState::new(z, t_prev)
}

/// Starting timestep for an img2img edit: `round(strength * T)` snapped to
/// the inference grid (which includes 0).
pub fn start_timestep(strength: f64, sched: &NoiseSchedule) -> Result<usize> {
    if !(strength > 0.0 && strength <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "strength must be in (0, 1], got {strength}"
        )));
    }
    let raw = (strength * sched.train_steps as f64).round() as usize;
    Ok(sched.snap(raw))
}

/// Forward-noise `x_input` to the starting timestep using chain `chain` of `seed`.
pub fn img2img_init(
    x_input: &[f64],
    strength: f64,
    sched: &NoiseSchedule,
    seed: u64,
    chain: u64,
) -> Result<LatentState> {
    let t = start_timestep(strength, sched)?;
    let ab = sched.alpha_bar(t);
    let xi = NoiseStream::new(seed, chain).normals(x_input.len());
    let z = x_input
        .iter()
        .zip(xi)
        .map(|(x, n)| ab.sqrt() * x + (1.0 - ab).sqrt() * n)
        .collect();
    LatentState::new(z, t)
}

/// Conditions resolved once per run.
#[derive(Debug, Clone)]
pub struct ResolvedPlan {
    pub positive: Vec<Condition>,
    pub forgetting: Vec<Condition>,
}

impl ResolvedPlan {
    /// Resolve every phrase of `plan`; all unknown phrases are reported together.
    pub fn new<M: NoiseModel + ?Sized>(model: &M, plan: &EditPlan) -> Result<Self> {
        let mut unknown = Vec::new();
        let mut resolve = |phrases: &[String]| -> Result<Vec<Condition>> {
            let mut out = Vec::new();
            for p in phrases {
                match model.resolve(p) {
                    Ok(c) => out.push(c),
                    Err(Error::ConceptUnknown(mut names)) => unknown.append(&mut names),
                    Err(e) => return Err(e),
                }
            }
            Ok(out)
        };
        let positive = resolve(&plan.positive_concepts)?;
        let forgetting = resolve(&plan.forgetting_elements)?;
        if !unknown.is_empty() {
            return Err(Error::ConceptUnknown(unknown));
        }
        Ok(Self { positive, forgetting })
    }
}

fn mean_prediction(preds: Vec<NoisePrediction>, t: usize, dim: usize) -> NoisePrediction {
    if preds.len() == 1 {
        return preds.into_iter().next().unwrap();
    }
    let n = preds.len() as f64;
    let mut values = vec![0.0; dim];
    for p in &preds {
        for (v, x) in values.iter_mut().zip(&p.values) {
            *v += x;
        }
    }
    values.iter_mut().for_each(|v| *v /= n);
    NoisePrediction { values, t }
}

/// Guided noise estimate at one state.
pub fn guided_epsilon<M: NoiseModel + ?Sized>(
    model: &M,
    plan: &ResolvedPlan,
    params: GuidanceParams,
    state: &LatentState,
    sched: &NoiseSchedule,
) -> Result<NoisePrediction> {
    let (t, ab) = (state.t, sched.alpha_bar(state.t));
    let eps_u = model.epsilon(&state.z, t, ab, Condition::Unconditional)?;
    let eps_p = if plan.positive.is_empty() {
        eps_u.clone()
    } else {
        let preds = plan
            .positive
            .iter()
            .map(|&c| model.epsilon(&state.z, t, ab, c))
            .collect::<Result<Vec<_>>>()?;
        mean_prediction(preds, t, state.z.len())
    };
    let eps_n = if params.eta == 0.0 {
        Vec::new()
    } else {
        plan.forgetting
            .iter()
            .map(|&c| model.epsilon(&state.z, t, ab, c))
            .collect::<Result<Vec<_>>>()?
    };
    compose_laf(&eps_u, &eps_p, &eps_n, params)
}

/// Run the guided DDIM chain from `init` down to `t = 0`, recording every state.
pub fn sample<M: NoiseModel + ?Sized>(
    model: &M,
    plan: &EditPlan,
    params: GuidanceParams,
    sched: &NoiseSchedule,
    init: LatentState,
    seed: u64,
) -> Result<Trajectory> {
    params.validate()?;
    let resolved = ResolvedPlan::new(model, plan)?;
    sample_resolved(model, &resolved, params, sched, init, seed)
}

pub fn sample_resolved<M: NoiseModel + ?Sized>(
    model: &M,
    plan: &ResolvedPlan,
    params: GuidanceParams,
    sched: &NoiseSchedule,
    init: LatentState,
    seed: u64,
) -> Result<Trajectory> {
    if init.z.len() != model.dimension() {
        return Err(Error::DimensionMismatch {
            expected: model.dimension(),
            actual: init.z.len(),
        });
    }
    if !sched.on_grid(init.t) {
        return Err(Error::OffGrid(init.t));
    }
    let grid = sched.descent_from(init.t);
    let mut states = Vec::with_capacity(grid.len());
    states.push(init);
    for &t_prev in &grid[1..] {
        let cur = states.last().unwrap();
        let eps = guided_epsilon(model, plan, params, cur, sched)?;
        let next = ddim_step(cur, &eps, t_prev, sched)?;
        states.push(next);
    }
    Ok(Trajectory { states, seed, params })
}
