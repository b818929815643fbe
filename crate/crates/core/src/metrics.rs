//! Edit-quality metrics: text/image alignment (CLIP-T), Inception Score,
//! pixel L1 and directional semantic change (CLIP-D), over plain embedding
//! vectors. [`toy_embed`] supplies embeddings for the analytic mixture model.

use serde::{Deserialize, Serialize};

use crate::diffusion::ScoreModelSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub values: Vec<f64>,
}

impl Embedding {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl From<Vec<f64>> for Embedding {
    fn from(values: Vec<f64>) -> Self {
        Self { values }
    }
}

pub fn cosine(a: &Embedding, b: &Embedding) -> Result<f64> {
    if a.values.len() != b.values.len() {
        return Err(Error::DimensionMismatch {
            expected: a.values.len(),
            actual: b.values.len(),
        });
    }
    let (na, nb) = (a.norm(), b.norm());
    if !(na > 0.0 && nb > 0.0) || !na.is_finite() || !nb.is_finite() {
        return Err(Error::ZeroNorm);
    }
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    Ok(dot / (na * nb))
}

/// Cosine similarity between a text embedding and an image embedding.
pub fn clip_t(text_emb: &Embedding, image_emb: &Embedding) -> Result<f64> {
    cosine(text_emb, image_emb)
}

/// `exp(mean_x KL(p(y|x) || p(y)))` with natural logs and `0 log 0 = 0`.
pub fn inception_score(class_probs: &[Vec<f64>]) -> Result<f64> {
    let Some(first) = class_probs.first() else {
        return Err(Error::InvalidArgument(
            "inception score needs at least one sample".into(),
        ));
    };
    let k = first.len();
    for (row, p) in class_probs.iter().enumerate() {
        if p.len() != k {
            return Err(Error::NotAProbability {
                row,
                reason: format!("length {} differs from {k}", p.len()),
            });
        }
        if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::NotAProbability {
                row,
                reason: "negative or non-finite entry".into(),
            });
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::NotAProbability {
                row,
                reason: format!("sums to {sum}"),
            });
        }
    }
    let n = class_probs.len() as f64;
    let mut marginal = vec![0.0; k];
    for p in class_probs {
        for (m, v) in marginal.iter_mut().zip(p) {
            *m += v / n;
        }
    }
    let mean_kl = class_probs
        .iter()
        .map(|p| {
            p.iter()
                .zip(&marginal)
                .filter(|(v, _)| **v > 0.0)
                .map(|(v, m)| v * (v / m).ln())
                .sum::<f64>()
        })
        .sum::<f64>()
        / n;
    Ok(mean_kl.exp())
}

/// Mean absolute difference.
pub fn l1(x_in: &[f64], x_out: &[f64]) -> Result<f64> {
    if x_in.len() != x_out.len() {
        return Err(Error::DimensionMismatch {
            expected: x_in.len(),
            actual: x_out.len(),
        });
    }
    if x_in.is_empty() {
        return Err(Error::InvalidArgument("l1 of empty vectors".into()));
    }
    Ok(x_in.iter().zip(x_out).map(|(a, b)| (a - b).abs()).sum::<f64>() / x_in.len() as f64)
}

/// Relative gain in similarity to the edited reference over similarity to
/// the input: `(sim(out, ref) - sim(out, in)) / sim(out, in)`.
///
/// Positive when the output moved toward the reference; an output that
/// copies the input scores `sim(in, ref) - 1 <= 0`.
pub fn clip_d(emb_out: &Embedding, emb_in: &Embedding, emb_ref: &Embedding) -> Result<f64> {
    let to_ref = cosine(emb_out, emb_ref)?;
    let to_in = cosine(emb_out, emb_in)?;
    if to_in.abs() < 1e-9 {
        return Err(Error::DivisionByNearZero(to_in));
    }
    Ok((to_ref - to_in) / to_in)
}

/// Image embedding for the analytic model: posterior responsibilities of
/// `z` under the clean mixture, one entry per component.
pub fn toy_embed(z: &[f64], model: &ScoreModelSpec) -> Result<Embedding> {
    model.responsibilities_at(z, 1.0).map(Embedding::new)
}

/// Text embedding for the analytic model: one-hot on the component the
/// phrase resolves to.
pub fn toy_embed_phrase(phrase: &str, model: &ScoreModelSpec) -> Result<Embedding> {
    let idx = model.resolve_component(phrase)?;
    let mut v = vec![0.0; model.components.len()];
    v[idx] = 1.0;
    Ok(Embedding::new(v))
}

/// Aggregate metrics for a batch. `clip_t` is reported as cosine x 100.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub sample_count: usize,
    pub clip_t: f64,
    pub inception_score: f64,
    pub l1: f64,
    /// Mean over samples that have a reference and a defined CLIP-D.
    pub clip_d: Option<f64>,
    pub clip_d_count: usize,
    pub per_sample: Vec<SampleMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMetrics {
    pub id: String,
    pub clip_t: f64,
    pub l1: f64,
    pub clip_d: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clip_d_note: Option<String>,
}

/// One edit to score: input, output, optional ground-truth edit and prompt.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSample {
    pub id: String,
    pub input: Vec<f64>,
    pub output: Vec<f64>,
    pub reference: Option<Vec<f64>>,
    pub prompt: String,
}

fn score_sample(s: &EvalSample, model: &ScoreModelSpec) -> Result<(SampleMetrics, Vec<f64>)> {
    let out_emb = toy_embed(&s.output, model)?;
    let text_emb = toy_embed_phrase(&s.prompt, model)?;
    let ct = clip_t(&text_emb, &out_emb)?;
    let dist = l1(&s.input, &s.output)?;
    let (cd, note) = match &s.reference {
        None => (None, None),
        Some(r) => {
            let in_emb = toy_embed(&s.input, model)?;
            let ref_emb = toy_embed(r, model)?;
            match clip_d(&out_emb, &in_emb, &ref_emb) {
                Ok(v) => (Some(v), None),
                Err(e @ Error::DivisionByNearZero(_)) => (None, Some(e.to_string())),
                Err(e) => return Err(e),
            }
        }
    };
    let metrics = SampleMetrics {
        id: s.id.clone(),
        clip_t: ct * 100.0,
        l1: dist,
        clip_d: cd,
        clip_d_note: note,
    };
    Ok((metrics, out_emb.values))
}

/// Score a batch with the analytic model's embeddings.
pub fn evaluate_batch(samples: &[EvalSample], model: &ScoreModelSpec) -> Result<EvalReport> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("evaluation batch is empty".into()));
    }
    let mut per_sample = Vec::with_capacity(samples.len());
    let mut probs = Vec::with_capacity(samples.len());
    for s in samples {
        let (metrics, class_probs) = score_sample(s, model).map_err(|e| e.context(format!("sample {:?}", s.id)))?;
        probs.push(class_probs);
        per_sample.push(metrics);
    }
    let n = per_sample.len() as f64;
    let defined: Vec<f64> = per_sample.iter().filter_map(|s| s.clip_d).collect();
    Ok(EvalReport {
        sample_count: per_sample.len(),
        clip_t: per_sample.iter().map(|s| s.clip_t).sum::<f64>() / n,
        inception_score: inception_score(&probs)?,
        l1: per_sample.iter().map(|s| s.l1).sum::<f64>() / n,
        clip_d: (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64),
        clip_d_count: defined.len(),
        per_sample,
    })
}
