use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::guidance::NoisePrediction;

/// One isotropic Gaussian component bound to a concept label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub label: String,
    pub mean: Vec<f64>,
    /// Isotropic variance `sigma^2`.
    pub variance: f64,
    pub weight: f64,
}

/// Analytic Gaussian-mixture data distribution. The unconditional
/// distribution is the weighted mixture; conditioning on a concept selects
/// its single component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreModelSpec {
    pub dimension: usize,
    pub components: Vec<Component>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Condition {
    Unconditional,
    Component(usize),
}

/// Anything that predicts noise for a latent at a given signal level.
/// Implementations must be read-only so chains can share one model.
pub trait NoiseModel: Sync {
    fn dimension(&self) -> usize;

    /// Resolve a concept phrase to a condition.
    fn resolve(&self, phrase: &str) -> Result<Condition>;

    /// Predicted noise at timestep `t` with cumulative signal `alpha_bar`.
    fn epsilon(&self, z: &[f64], t: usize, alpha_bar: f64, condition: Condition) -> Result<NoisePrediction>;
}

fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric() && c != '-' && c != '\'')
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn contains_words(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

impl ScoreModelSpec {
    pub fn new(dimension: usize, components: Vec<Component>) -> Result<Self> {
        let spec = Self { dimension, components };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(|e| Error::json("model spec", e))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model spec serializes")
    }

    /// Two equal-weight concepts in one dimension at `+offset` and `-offset`.
    pub fn two_mode(label_pos: &str, label_neg: &str, offset: f64, variance: f64) -> Self {
        Self::new(
            1,
            vec![
                Component {
                    label: label_pos.into(),
                    mean: vec![offset],
                    variance,
                    weight: 0.5,
                },
                Component {
                    label: label_neg.into(),
                    mean: vec![-offset],
                    variance,
                    weight: 0.5,
                },
            ],
        )
        .expect("valid two-mode model")
    }

    pub fn single(label: &str, mean: Vec<f64>, variance: f64) -> Self {
        Self::new(
            mean.len(),
            vec![Component {
                label: label.into(),
                mean,
                variance,
                weight: 1.0,
            }],
        )
        .expect("valid single-component model")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidModel(m));
        if self.dimension == 0 {
            return bad("dimension must be positive".into());
        }
        if self.components.is_empty() {
            return bad("at least one component is required".into());
        }
        let mut total = 0.0;
        for (i, c) in self.components.iter().enumerate() {
            if words(&c.label).is_empty() {
                return bad(format!("component {i} has an empty label"));
            }
            if self.components[..i].iter().any(|o| words(&o.label) == words(&c.label)) {
                return bad(format!("duplicate label {:?}", c.label));
            }
            if c.mean.len() != self.dimension {
                return bad(format!(
                    "component {:?} mean has dimension {}, expected {}",
                    c.label,
                    c.mean.len(),
                    self.dimension
                ));
            }
            if c.mean.iter().any(|m| !m.is_finite()) {
                return bad(format!("component {:?} mean is not finite", c.label));
            }
            if !(c.variance.is_finite() && c.variance > 0.0) {
                return bad(format!("component {:?} variance must be positive", c.label));
            }
            if !(c.weight.is_finite() && c.weight > 0.0) {
                return bad(format!("component {:?} weight must be positive", c.label));
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("weights sum to {total}, expected 1"));
        }
        Ok(())
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.components.iter().map(|c| c.label.as_str())
    }

    /// Component whose label occurs in `phrase` as a whole word sequence
    /// (`"red"` matches `"red car"` but not `"bored cat"`).
    pub fn resolve_component(&self, phrase: &str) -> Result<usize> {
        let hay = words(phrase);
        let hits: Vec<usize> = self
            .components
            .iter()
            .enumerate()
            .filter(|(_, c)| contains_words(&hay, &words(&c.label)))
            .map(|(i, _)| i)
            .collect();
        match hits.as_slice() {
            [i] => Ok(*i),
            [] => Err(Error::ConceptUnknown(vec![phrase.to_owned()])),
            many => Err(Error::AmbiguousConcept {
                phrase: phrase.to_owned(),
                labels: many.iter().map(|&i| self.components[i].label.clone()).collect(),
            }),
        }
    }

    /// Resolve several phrases, reporting every unknown one at once.
    pub fn resolve_all<S: AsRef<str>>(&self, phrases: &[S]) -> Result<Vec<usize>> {
        let mut found = Vec::with_capacity(phrases.len());
        let mut unknown = Vec::new();
        for p in phrases {
            match self.resolve_component(p.as_ref()) {
                Ok(i) => found.push(i),
                Err(Error::ConceptUnknown(mut names)) => unknown.append(&mut names),
                Err(e) => return Err(e),
            }
        }
        if unknown.is_empty() {
            Ok(found)
        } else {
            Err(Error::ConceptUnknown(unknown))
        }
    }

    fn check_dim(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                actual: z.len(),
            });
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "latent" });
        }
        Ok(())
    }

    /// Per-component log of `weight * N(z; sqrt(ab) mu, (ab sigma^2 + 1 - ab) I)`,
    /// the noised marginal at signal level `alpha_bar`.
    fn log_weighted_densities(&self, z: &[f64], alpha_bar: f64) -> Vec<f64> {
        let d = self.dimension as f64;
        let s = alpha_bar.sqrt();
        self.components
            .iter()
            .map(|c| {
                let v = alpha_bar * c.variance + (1.0 - alpha_bar);
                let sq: f64 = z.iter().zip(&c.mean).map(|(x, m)| (x - s * m).powi(2)).sum();
                c.weight.ln() - 0.5 * d * (std::f64::consts::TAU * v).ln() - 0.5 * sq / v
            })
            .collect()
    }

    /// Posterior component probabilities of `z` at signal level `alpha_bar`.
    pub fn responsibilities_at(&self, z: &[f64], alpha_bar: f64) -> Result<Vec<f64>> {
        self.check_dim(z)?;
        let logs = self.log_weighted_densities(z, alpha_bar);
        let lse = log_sum_exp(&logs);
        Ok(logs.iter().map(|l| (l - lse).exp()).collect())
    }

    /// Mixture log-density of clean data (`t = 0`).
    pub fn log_likelihood(&self, z: &[f64]) -> Result<f64> {
        self.check_dim(z)?;
        Ok(log_sum_exp(&self.log_weighted_densities(z, 1.0)))
    }

    /// `grad_z log p_t(z | condition)` at signal level `alpha_bar`.
    pub fn score(&self, z: &[f64], alpha_bar: f64, condition: Condition) -> Result<Vec<f64>> {
        self.check_dim(z)?;
        let s = alpha_bar.sqrt();
        let component_score = |c: &Component| -> Vec<f64> {
            let v = alpha_bar * c.variance + (1.0 - alpha_bar);
            z.iter().zip(&c.mean).map(|(x, m)| -(x - s * m) / v).collect()
        };
        match condition {
            Condition::Component(i) => {
                let c = self
                    .components
                    .get(i)
                    .ok_or_else(|| Error::ConceptUnknown(vec![format!("component #{i}")]))?;
                Ok(component_score(c))
            }
            Condition::Unconditional => {
                let r = self.responsibilities_at(z, alpha_bar)?;
                let mut g = vec![0.0; self.dimension];
                for (c, rk) in self.components.iter().zip(r) {
                    for (gi, si) in g.iter_mut().zip(component_score(c)) {
                        *gi += rk * si;
                    }
                }
                Ok(g)
            }
        }
    }
}

impl NoiseModel for ScoreModelSpec {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn resolve(&self, phrase: &str) -> Result<Condition> {
        self.resolve_component(phrase).map(Condition::Component)
    }

    /// `eps = -sqrt(1 - ab) * grad_z log p_t(z | c)`.
    fn epsilon(&self, z: &[f64], t: usize, alpha_bar: f64, condition: Condition) -> Result<NoisePrediction> {
        let noise_scale = (1.0 - alpha_bar).max(0.0).sqrt();
        let values = self
            .score(z, alpha_bar, condition)?
            .into_iter()
            .map(|g| -noise_scale * g)
            .collect();
        NoisePrediction::new(values, t)
    }
}

/// Noise prediction of `model` for `z` at timestep `t` of `sched`.
pub fn gm_epsilon(
    model: &ScoreModelSpec,
    z: &crate::diffusion::LatentState,
    sched: &crate::diffusion::NoiseSchedule,
    condition: Condition,
) -> Result<NoisePrediction> {
    model.epsilon(&z.z, z.t, sched.alpha_bar(z.t), condition)
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_vanishes_at_noised_mean() {
        let m = ScoreModelSpec::single("dot", vec![3.0, -1.0], 0.7);
        let ab: f64 = 0.3;
        let z: Vec<f64> = [3.0, -1.0].iter().map(|x| x * ab.sqrt()).collect();
        let eps = m.epsilon(&z, 5, ab, Condition::Component(0)).unwrap();
        assert!(eps.values.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn epsilon_zero_without_noise() {
        let m = ScoreModelSpec::single("dot", vec![3.0], 1.0);
        let eps = m.epsilon(&[0.0], 0, 1.0, Condition::Component(0)).unwrap();
        assert_eq!(eps.values, [0.0]);
    }

    #[test]
    fn symmetric_mixture_has_zero_epsilon_at_origin() {
        let m = ScoreModelSpec::two_mode("a", "b", 3.0, 0.5);
        for ab in [0.01, 0.5, 0.99] {
            let eps = m.epsilon(&[0.0], 1, ab, Condition::Unconditional).unwrap();
            assert!(eps.values[0].abs() < 1e-15);
        }
    }

    #[test]
    fn single_component_matches_closed_form() {
        let m = ScoreModelSpec::single("x", vec![2.0], 0.25);
        let (ab, z): (f64, f64) = (0.4, 0.3);
        let v = ab * 0.25 + 1.0 - ab;
        let expect = (1.0 - ab).sqrt() * (z - ab.sqrt() * 2.0) / v;
        let got = m.epsilon(&[z], 9, ab, Condition::Component(0)).unwrap().values[0];
        assert!((got - expect).abs() < 1e-14);
        let unc = m.epsilon(&[z], 9, ab, Condition::Unconditional).unwrap().values[0];
        assert!((unc - expect).abs() < 1e-14);
    }

    #[test]
    fn unconditional_score_matches_finite_difference() {
        let m = ScoreModelSpec::new(
            2,
            vec![
                Component {
                    label: "a".into(),
                    mean: vec![1.0, 2.0],
                    variance: 0.3,
                    weight: 0.2,
                },
                Component {
                    label: "b".into(),
                    mean: vec![-2.0, 0.5],
                    variance: 1.5,
                    weight: 0.8,
                },
            ],
        )
        .unwrap();
        let ab = 0.6;
        let z = [0.2, -0.4];
        let logp = |z: &[f64]| log_sum_exp(&m.log_weighted_densities(z, ab));
        let g = m.score(&z, ab, Condition::Unconditional).unwrap();
        let h = 1e-6;
        for i in 0..2 {
            let mut zp = z;
            let mut zm = z;
            zp[i] += h;
            zm[i] -= h;
            let fd = (logp(&zp) - logp(&zm)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6, "{fd} vs {}", g[i]);
        }
    }

    #[test]
    fn concept_resolution() {
        let m = ScoreModelSpec::two_mode("yellow", "red", 3.0, 0.5);
        assert_eq!(m.resolve_component("yellow bus").unwrap(), 0);
        assert_eq!(m.resolve_component("Red car").unwrap(), 1);
        assert!(matches!(
            m.resolve_component("bored cat"),
            Err(Error::ConceptUnknown(_))
        ));
        assert!(matches!(
            m.resolve_component("red and yellow car"),
            Err(Error::AmbiguousConcept { .. })
        ));
        match m.resolve_all(&["blue car", "red car", "green bus"]) {
            Err(Error::ConceptUnknown(names)) => assert_eq!(names, ["blue car", "green bus"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn multiword_labels() {
        let m = ScoreModelSpec::new(
            1,
            vec![
                Component {
                    label: "tennis ball".into(),
                    mean: vec![1.0],
                    variance: 1.0,
                    weight: 0.5,
                },
                Component {
                    label: "tomato".into(),
                    mean: vec![-1.0],
                    variance: 1.0,
                    weight: 0.5,
                },
            ],
        )
        .unwrap();
        assert_eq!(m.resolve_component("green tennis ball").unwrap(), 0);
        assert!(m.resolve_component("tennis court").is_err());
    }

    #[test]
    fn validation() {
        let c = |label: &str, mean: Vec<f64>, variance, weight| Component {
            label: label.into(),
            mean,
            variance,
            weight,
        };
        assert!(ScoreModelSpec::new(1, vec![]).is_err());
        assert!(ScoreModelSpec::new(1, vec![c("a", vec![0.0], 1.0, 0.7)]).is_err());
        assert!(ScoreModelSpec::new(1, vec![c("a", vec![0.0, 1.0], 1.0, 1.0)]).is_err());
        assert!(ScoreModelSpec::new(1, vec![c("a", vec![0.0], 0.0, 1.0)]).is_err());
        assert!(ScoreModelSpec::new(1, vec![c("", vec![0.0], 1.0, 1.0)]).is_err());
        assert!(ScoreModelSpec::new(1, vec![c("a", vec![0.0], 1.0, 0.5), c("A", vec![1.0], 1.0, 0.5)]).is_err());
        assert!(ScoreModelSpec::new(1, vec![c("a", vec![0.0], 1.0, -0.5), c("b", vec![1.0], 1.0, 1.5)]).is_err());
        assert!(ScoreModelSpec::from_json("{\"dimension\": 1}").is_err());
    }

    #[test]
    fn json_round_trip() {
        let m = ScoreModelSpec::two_mode("yellow", "red", 3.0, 0.5);
        assert_eq!(ScoreModelSpec::from_json(&m.to_json()).unwrap(), m);
    }
}
