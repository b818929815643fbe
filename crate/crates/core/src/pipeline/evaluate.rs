use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diffusion::ScoreModelSpec;
use crate::error::{Error, Result};
use crate::metrics::{evaluate_batch, EvalReport, EvalSample};

/// A vector given inline or as a path to a JSON file holding either a bare
/// array or an object with a `z` array (such as `final_state.json`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VectorSource {
    Inline(Vec<f64>),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    pub prompt: String,
    pub input: VectorSource,
    pub output: VectorSource,
    #[serde(default)]
    pub reference: Option<VectorSource>,
}

/// Batch description. Relative paths are resolved against the manifest's
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub model: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum VectorFile {
    Bare(Vec<f64>),
    State { z: Vec<f64> },
}

fn load_vector(src: &VectorSource, base: &Path) -> Result<Vec<f64>> {
    match src {
        VectorSource::Inline(v) => Ok(v.clone()),
        VectorSource::File(p) => {
            let path = base.join(p);
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            match serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))? {
                VectorFile::Bare(v) | VectorFile::State { z: v } => Ok(v),
            }
        }
    }
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(format!("manifest {}", path.display()), e))
}

/// Load every entry and score the batch. Failures name the entry.
pub fn evaluate_manifest(path: &Path) -> Result<EvalReport> {
    let manifest = load_manifest(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let model = ScoreModelSpec::from_path(base.join(&manifest.model)).map_err(|e| e.context("manifest model"))?;
    let samples = manifest
        .entries
        .iter()
        .map(|entry| {
            let load = || -> Result<EvalSample> {
                Ok(EvalSample {
                    id: entry.id.clone(),
                    input: load_vector(&entry.input, base)?,
                    output: load_vector(&entry.output, base)?,
                    reference: entry.reference.as_ref().map(|r| load_vector(r, base)).transpose()?,
                    prompt: entry.prompt.clone(),
                })
            };
            load().map_err(|e| e.context(format!("entry {:?}", entry.id)))
        })
        .collect::<Result<Vec<_>>>()?;
    evaluate_batch(&samples, &model)
}
