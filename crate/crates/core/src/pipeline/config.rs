use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diffusion::NoiseSchedule;
use crate::error::{Error, Result};
use crate::guidance::GuidanceParams;
use crate::locate::LocateMode;

/// Named guidance settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// `w = 10`, `eta = 2.5`.
    Edit,
    /// `w = 7.5`, `eta = 2.5`.
    Sweep,
}

impl Preset {
    pub fn params(self) -> GuidanceParams {
        match self {
            Preset::Edit => GuidanceParams::EDIT_DEFAULT,
            Preset::Sweep => GuidanceParams::SWEEP,
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "edit" => Ok(Preset::Edit),
            "sweep" => Ok(Preset::Sweep),
            _ => Err(format!("unknown preset {s:?} (expected edit or sweep)")),
        }
    }
}

/// Everything needed to reproduce a sampling run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub caption: String,
    pub prompt: String,
    pub mode: LocateMode,
    pub w: f64,
    pub eta: f64,
    pub steps: usize,
    pub strength: f64,
    pub seed: u64,
    pub model_spec: Option<PathBuf>,
    pub output_dir: PathBuf,
    /// Input latent; when absent the mean of the first caption concept the
    /// model knows is used.
    pub input: Option<Vec<f64>>,
    pub lexicon: Option<PathBuf>,
    pub train_steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = GuidanceParams::EDIT_DEFAULT;
        Self {
            caption: String::new(),
            prompt: String::new(),
            mode: LocateMode::default(),
            w: p.w,
            eta: p.eta,
            steps: NoiseSchedule::DEFAULT_INFERENCE_STEPS,
            strength: 0.8,
            seed: 0,
            model_spec: None,
            output_dir: PathBuf::from("laf-out"),
            input: None,
            lexicon: None,
            train_steps: NoiseSchedule::DEFAULT_TRAIN_STEPS,
            beta_start: NoiseSchedule::DEFAULT_BETA_START,
            beta_end: NoiseSchedule::DEFAULT_BETA_END,
        }
    }
}

impl RunConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(format!("config {}", path.display()), e))
    }

    pub fn params(&self) -> GuidanceParams {
        GuidanceParams {
            w: self.w,
            eta: self.eta,
        }
    }

    pub fn apply_preset(&mut self, preset: Preset) {
        let p = preset.params();
        self.w = p.w;
        self.eta = p.eta;
    }

    pub fn validate(&self) -> Result<()> {
        self.params().validate()?;
        if !(self.strength > 0.0 && self.strength <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "strength must be in (0, 1], got {}",
                self.strength
            )));
        }
        Ok(())
    }
}

/// Command-line overrides; `Some` wins over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub caption: Option<String>,
    pub prompt: Option<String>,
    pub mode: Option<LocateMode>,
    pub preset: Option<Preset>,
    pub w: Option<f64>,
    pub eta: Option<f64>,
    pub steps: Option<usize>,
    pub strength: Option<f64>,
    pub seed: Option<u64>,
    pub model_spec: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub input: Option<Vec<f64>>,
    pub lexicon: Option<PathBuf>,
}

impl Overrides {
    /// Preset first, then explicit `w` / `eta`, so `--preset sweep --eta 5`
    /// means `w = 7.5, eta = 5`.
    pub fn apply(self, cfg: &mut RunConfig) {
        if let Some(p) = self.preset {
            cfg.apply_preset(p);
        }
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field {
                    cfg.$field = v;
                }
            )*};
        }
        set!(caption, prompt, mode, w, eta, steps, strength, seed, output_dir);
        if self.model_spec.is_some() {
            cfg.model_spec = self.model_spec;
        }
        if self.input.is_some() {
            cfg.input = self.input;
        }
        if self.lexicon.is_some() {
            cfg.lexicon = self.lexicon;
        }
    }
}
