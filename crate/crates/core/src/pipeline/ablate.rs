use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{to_json, write_file, PreparedRun, RunMetadata};
use crate::diffusion::Condition;
use crate::error::{Error, Result};
use crate::guidance::GuidanceParams;
use crate::metrics::{clip_t, inception_score, toy_embed, Embedding};

/// Per-chain measurements at the final state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainOutcome {
    pub eta: f64,
    pub chain: u64,
    pub final_z: Vec<f64>,
    /// Toy CLIP-T against the positive concepts, cosine x 100.
    pub alignment: f64,
    pub log_likelihood: f64,
    /// Distance to the nearest forgotten concept's mean, if any.
    pub forget_distance: Option<f64>,
    pub responsibilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub eta: f64,
    pub runs: usize,
    pub alignment_mean: f64,
    pub alignment_se: f64,
    pub log_likelihood_mean: f64,
    pub log_likelihood_se: f64,
    pub inception_score: f64,
    pub forget_distance_mean: Option<f64>,
    pub forget_distance_se: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct AblationSweep {
    pub rows: Vec<AblationRow>,
    /// `chains[i]` holds the outcomes behind `rows[i]`, ordered by chain.
    pub chains: Vec<Vec<ChainOutcome>>,
    pub metadata: RunMetadata,
}

/// Mean and standard error of the mean (sample standard deviation / sqrt n).
pub(crate) fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn text_embedding(run: &PreparedRun) -> Embedding {
    let k = run.model.components.len();
    let mut v = vec![0.0; k];
    let n = run.resolved.positive.len().max(1) as f64;
    for c in &run.resolved.positive {
        if let Condition::Component(i) = c {
            v[*i] += 1.0 / n;
        }
    }
    Embedding::new(v)
}

fn forgotten_means(run: &PreparedRun) -> Vec<&[f64]> {
    run.resolved
        .forgetting
        .iter()
        .filter_map(|c| match c {
            Condition::Component(i) => Some(run.model.components[*i].mean.as_slice()),
            Condition::Unconditional => None,
        })
        .collect()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn run_one(run: &PreparedRun, text: &Embedding, eta: f64, chain: u64) -> Result<ChainOutcome> {
    let params = GuidanceParams { w: run.config.w, eta };
    let traj = run.run_chain(chain, params)?;
    let z = traj.final_state().z.clone();
    let image = toy_embed(&z, &run.model)?;
    let forget = forgotten_means(run);
    Ok(ChainOutcome {
        eta,
        chain,
        alignment: clip_t(text, &image)? * 100.0,
        log_likelihood: run.model.log_likelihood(&z)?,
        forget_distance: forget.iter().map(|m| distance(&z, m)).reduce(f64::min),
        responsibilities: image.values,
        final_z: z,
    })
}

/// Sweep the forgetting scale. Every grid point reuses chains `0..runs` of
/// the configured seed, so each row depends only on its own `eta`. Rows come
/// back sorted by `eta` (stable for repeated values).
pub fn ablate(run: &PreparedRun, eta_grid: &[f64], runs: usize) -> Result<AblationSweep> {
    if eta_grid.is_empty() {
        return Err(Error::InvalidArgument("eta grid is empty".into()));
    }
    if runs == 0 {
        return Err(Error::InvalidArgument("need at least one run per grid point".into()));
    }
    for &eta in eta_grid {
        GuidanceParams { w: run.config.w, eta }.validate()?;
    }
    let mut grid = eta_grid.to_vec();
    grid.sort_by(f64::total_cmp);

    let text = text_embedding(run);
    let jobs: Vec<(usize, u64)> = (0..grid.len())
        .flat_map(|g| (0..runs as u64).map(move |c| (g, c)))
        .collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(g, c)| run_one(run, &text, grid[g], c))
        .collect::<Result<Vec<_>>>()?;

    let chains: Vec<Vec<ChainOutcome>> = outcomes.chunks(runs).map(<[_]>::to_vec).collect();
    let rows = chains
        .iter()
        .zip(&grid)
        .map(|(outs, &eta)| summarize(eta, outs))
        .collect::<Result<Vec<_>>>()?;

    Ok(AblationSweep {
        rows,
        chains,
        metadata: RunMetadata::new("ablate", run)?,
    })
}

fn summarize(eta: f64, outs: &[ChainOutcome]) -> Result<AblationRow> {
    let (alignment_mean, alignment_se) = mean_se(&outs.iter().map(|o| o.alignment).collect::<Vec<_>>());
    let (log_likelihood_mean, log_likelihood_se) = mean_se(&outs.iter().map(|o| o.log_likelihood).collect::<Vec<_>>());
    let probs: Vec<Vec<f64>> = outs.iter().map(|o| o.responsibilities.clone()).collect();
    let dists: Option<Vec<f64>> = outs.iter().map(|o| o.forget_distance).collect();
    let (forget_distance_mean, forget_distance_se) = match dists {
        Some(d) => {
            let (m, s) = mean_se(&d);
            (Some(m), Some(s))
        }
        None => (None, None),
    };
    Ok(AblationRow {
        eta,
        runs: outs.len(),
        alignment_mean,
        alignment_se,
        log_likelihood_mean,
        log_likelihood_se,
        inception_score: inception_score(&probs)?,
        forget_distance_mean,
        forget_distance_se,
    })
}

impl AblationSweep {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "eta,runs,alignment_mean,alignment_se,log_likelihood_mean,log_likelihood_se,inception_score,forget_distance_mean,forget_distance_se\n",
        );
        let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
        for r in &self.rows {
            writeln!(
                out,
                "{:?},{},{:?},{:?},{:?},{:?},{:?},{},{}",
                r.eta,
                r.runs,
                r.alignment_mean,
                r.alignment_se,
                r.log_likelihood_mean,
                r.log_likelihood_se,
                r.inception_score,
                opt(r.forget_distance_mean),
                opt(r.forget_distance_se)
            )
            .unwrap();
        }
        out
    }
}

#[derive(Serialize)]
struct AblationMetadata<'a> {
    #[serde(flatten)]
    run: &'a RunMetadata,
    eta_grid: Vec<f64>,
    runs: usize,
}

/// Write `ablation.csv`, `ablation.svg` and `ablation_metadata.json`.
pub fn write_ablation(sweep: &AblationSweep, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv = dir.join("ablation.csv");
    let svg = dir.join("ablation.svg");
    let meta = dir.join("ablation_metadata.json");
    write_file(&csv, &sweep.to_csv())?;
    write_file(&svg, &super::render_ablation_svg(&sweep.rows)?)?;
    write_file(
        &meta,
        &to_json(&AblationMetadata {
            run: &sweep.metadata,
            eta_grid: sweep.rows.iter().map(|r| r.eta).collect(),
            runs: sweep.rows.first().map_or(0, |r| r.runs),
        }),
    )?;
    Ok(vec![csv, svg, meta])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_se_values() {
        let (m, s) = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_se(&[7.0]), (7.0, 0.0));
    }
}
