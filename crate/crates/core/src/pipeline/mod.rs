//! End-to-end orchestration behind the `laf` binary: locate, sample,
//! evaluate and the forgetting-scale sweep, plus their on-disk formats.

mod ablate;
mod config;
mod evaluate;
mod plot;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use ablate::{ablate, write_ablation, AblationRow, AblationSweep, ChainOutcome};
pub use config::{Overrides, Preset, RunConfig};
pub use evaluate::{evaluate_manifest, load_manifest, Manifest, ManifestEntry, VectorSource};
pub use plot::render_ablation_svg;

use crate::diffusion::{
    img2img_init, make_schedule, sample_resolved, NoiseSchedule, ResolvedPlan, ScoreModelSpec, Trajectory,
};
use crate::error::{Error, Result};
use crate::locate::{locate, EditPlan, LocateMode};
use crate::text_parse::{parse_text, ChunkSet, Lexicon};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Lexicon named by the config, layered over the shipped one.
pub fn load_lexicon(path: Option<&Path>) -> Result<Lexicon> {
    let mut lex = Lexicon::builtin().clone();
    if let Some(p) = path {
        lex.extend(Lexicon::from_path(p)?);
    }
    Ok(lex)
}

/// Parse caption and prompt and run the locator. An empty caption is an
/// empty chunk set; an empty prompt is an error.
pub fn locate_texts(caption: &str, prompt: &str, mode: LocateMode, lexicon: &Lexicon) -> Result<EditPlan> {
    if prompt.trim().is_empty() {
        return Err(Error::EmptyPrompt.context("prompt"));
    }
    let caption_set = if caption.trim().is_empty() {
        ChunkSet::empty(caption)
    } else {
        parse_text(caption, lexicon).map_err(|e| e.context("caption"))?
    };
    let prompt_set = parse_text(prompt, lexicon).map_err(|e| e.context("prompt"))?;
    locate(&caption_set, &prompt_set, mode)
}

/// A config resolved into model, plan, schedule and input latent.
#[derive(Debug, Clone)]
pub struct PreparedRun {
    pub config: RunConfig,
    pub model: ScoreModelSpec,
    pub plan: EditPlan,
    pub resolved: ResolvedPlan,
    pub schedule: NoiseSchedule,
    pub input: Vec<f64>,
}

impl PreparedRun {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let model_path = config
            .model_spec
            .as_deref()
            .ok_or_else(|| Error::InvalidArgument("a model spec path is required".into()))?;
        let model = ScoreModelSpec::from_path(model_path)?;
        let lexicon = load_lexicon(config.lexicon.as_deref())?;
        let plan = locate_texts(&config.caption, &config.prompt, config.mode, &lexicon)?;
        Self::with_parts(config, model, plan)
    }

    pub fn with_parts(config: RunConfig, model: ScoreModelSpec, plan: EditPlan) -> Result<Self> {
        config.validate()?;
        let resolved = ResolvedPlan::new(&model, &plan)?;
        let schedule = make_schedule(config.train_steps, config.beta_start, config.beta_end, config.steps)?;
        let input = match &config.input {
            Some(x) if x.len() != model.dimension => {
                return Err(Error::DimensionMismatch {
                    expected: model.dimension,
                    actual: x.len(),
                })
            }
            Some(x) => x.clone(),
            None => {
                let lexicon = load_lexicon(config.lexicon.as_deref())?;
                default_input(&config.caption, &model, &lexicon)?
            }
        };
        Ok(Self {
            config,
            model,
            plan,
            resolved,
            schedule,
            input,
        })
    }

    pub fn t_start(&self) -> Result<usize> {
        crate::diffusion::start_timestep(self.config.strength, &self.schedule)
    }

    /// One chain; chain `k` draws its initial noise from stream `k` of the seed.
    pub fn run_chain(&self, chain: u64, params: crate::guidance::GuidanceParams) -> Result<Trajectory> {
        let init = img2img_init(
            &self.input,
            self.config.strength,
            &self.schedule,
            self.config.seed,
            chain,
        )?;
        sample_resolved(
            &self.model,
            &self.resolved,
            params,
            &self.schedule,
            init,
            self.config.seed,
        )
    }
}

/// Mean of the first caption phrase the model can resolve.
fn default_input(caption: &str, model: &ScoreModelSpec, lexicon: &Lexicon) -> Result<Vec<f64>> {
    let set = if caption.trim().is_empty() {
        ChunkSet::empty(caption)
    } else {
        parse_text(caption, lexicon).map_err(|e| e.context("caption"))?
    };
    let phrases = set.phrases();
    phrases
        .iter()
        .find_map(|p| model.resolve_component(p).ok())
        .map(|i| model.components[i].mean.clone())
        .ok_or_else(|| {
            let mut names = phrases.clone();
            if names.is_empty() {
                names.push(caption.to_owned());
            }
            Error::ConceptUnknown(names).context("no caption concept gives an input latent; pass --input")
        })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRecord {
    pub train_steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub inference_steps: usize,
    pub t_start: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    pub plan: EditPlan,
    pub input: Vec<f64>,
    pub schedule: ScheduleRecord,
    /// True when the forgetting term is inactive, i.e. plain CFG sampling.
    pub cfg_equivalent: bool,
    pub rng: String,
}

pub const RNG_DESCRIPTION: &str =
    "chacha20; key = seed (u64 LE) || 24 zero bytes; stream = chain index; box-muller cosine branch";

impl RunMetadata {
    pub fn new(command: &str, run: &PreparedRun) -> Result<Self> {
        Ok(Self {
            tool: "laf".into(),
            version: TOOL_VERSION.into(),
            command: command.into(),
            config: run.config.clone(),
            plan: run.plan.clone(),
            input: run.input.clone(),
            schedule: ScheduleRecord {
                train_steps: run.schedule.train_steps,
                beta_start: run.schedule.beta_start,
                beta_end: run.schedule.beta_end,
                inference_steps: run.schedule.inference_steps(),
                t_start: run.t_start()?,
            },
            cfg_equivalent: run.config.eta == 0.0 || run.plan.forgetting_elements.is_empty(),
            rng: RNG_DESCRIPTION.into(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalState {
    pub t: usize,
    pub z: Vec<f64>,
    pub log_likelihood: f64,
    /// Component label -> posterior probability at the final state.
    pub responsibilities: Vec<(String, f64)>,
}

#[derive(Debug, Clone)]
pub struct SampleRun {
    pub prepared: PreparedRun,
    pub trajectory: Trajectory,
    pub metadata: RunMetadata,
}

impl SampleRun {
    pub fn final_state(&self) -> Result<FinalState> {
        let last = self.trajectory.final_state();
        let model = &self.prepared.model;
        let r = model.responsibilities_at(&last.z, 1.0)?;
        Ok(FinalState {
            t: last.t,
            z: last.z.clone(),
            log_likelihood: model.log_likelihood(&last.z)?,
            responsibilities: model.labels().map(str::to_owned).zip(r).collect(),
        })
    }
}

pub fn run_sample(config: RunConfig) -> Result<SampleRun> {
    let prepared = PreparedRun::new(config)?;
    let trajectory = prepared.run_chain(0, prepared.config.params())?;
    let metadata = RunMetadata::new("sample", &prepared)?;
    Ok(SampleRun {
        prepared,
        trajectory,
        metadata,
    })
}

/// Paths written by [`write_sample`].
#[derive(Debug, Clone)]
pub struct SampleFiles {
    pub trajectory_csv: PathBuf,
    pub final_state_json: PathBuf,
    pub metadata_json: PathBuf,
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub(crate) fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn write_sample(run: &SampleRun, dir: &Path) -> Result<SampleFiles> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = SampleFiles {
        trajectory_csv: dir.join("trajectory.csv"),
        final_state_json: dir.join("final_state.json"),
        metadata_json: dir.join("run_metadata.json"),
    };
    write_file(&files.trajectory_csv, &run.trajectory.to_csv())?;
    write_file(&files.final_state_json, &to_json(&run.final_state()?))?;
    write_file(&files.metadata_json, &to_json(&run.metadata))?;
    Ok(files)
}
