//! Score composition over noise predictions.
//!
//! Three rules are provided: positive classifier-free guidance
//! ([`compose_cfg`]), negative guidance for unlearning a concept
//! ([`compose_negative`]), and the combined locate-and-forget estimate
//! ([`compose_laf`]) that the sampler uses at every step.
//!
//! Note the base terms differ: the positive-only rule starts from the
//! conditional prediction, `eps_c + w (eps_c - eps_u)`, while the combined
//! rule starts from the unconditional one, `eps_u + w (eps_p - eps_u) - ...`.
//! Both are kept as written; `compose_cfg(u, c, w)` therefore equals
//! `compose_laf(u, c, [], w + 1, 0)` rather than `compose_laf(u, c, [], w, 0)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisePrediction {
    pub values: Vec<f64>,
    pub t: usize,
}

impl NoisePrediction {
    pub fn new(values: Vec<f64>, t: usize) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "noise prediction",
            });
        }
        Ok(Self { values, t })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// `w` scales attraction to the prompt, `eta` repulsion from forgotten concepts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidanceParams {
    pub w: f64,
    pub eta: f64,
}

impl GuidanceParams {
    /// Main experimental setting (`w = 10`, `eta = 2.5`).
    pub const EDIT_DEFAULT: GuidanceParams = GuidanceParams { w: 10.0, eta: 2.5 };
    /// Lower positive scale used for forgetting sweeps.
    pub const SWEEP: GuidanceParams = GuidanceParams { w: 7.5, eta: 2.5 };

    pub fn new(w: f64, eta: f64) -> Result<Self> {
        let p = Self { w, eta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.w.is_finite() && self.eta.is_finite() && self.w >= 0.0 && self.eta >= 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidGuidance {
                w: self.w,
                eta: self.eta,
            })
        }
    }
}

impl Default for GuidanceParams {
    fn default() -> Self {
        Self::EDIT_DEFAULT
    }
}

fn check_pair(a: &NoisePrediction, b: &NoisePrediction) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    if a.t != b.t {
        return Err(Error::TimestepMismatch {
            expected: a.t,
            actual: b.t,
        });
    }
    Ok(())
}

/// `eps_cond + w (eps_cond - eps_uncond)`.
pub fn compose_cfg(eps_uncond: &NoisePrediction, eps_cond: &NoisePrediction, w: f64) -> Result<NoisePrediction> {
    check_pair(eps_uncond, eps_cond)?;
    let values = eps_uncond
        .values
        .iter()
        .zip(&eps_cond.values)
        .map(|(u, c)| c + w * (c - u))
        .collect();
    Ok(NoisePrediction { values, t: eps_cond.t })
}

/// `eps_cond_n - eta (eps_cond_n - eps_uncond)`.
pub fn compose_negative(
    eps_uncond: &NoisePrediction,
    eps_cond_n: &NoisePrediction,
    eta: f64,
) -> Result<NoisePrediction> {
    check_pair(eps_uncond, eps_cond_n)?;
    let values = eps_uncond
        .values
        .iter()
        .zip(&eps_cond_n.values)
        .map(|(u, n)| n - eta * (n - u))
        .collect();
    Ok(NoisePrediction {
        values,
        t: eps_cond_n.t,
    })
}

/// `eps_uncond + w (eps_pos - eps_uncond) - eta * sum_k (eps_neg_k - eps_uncond)`.
///
/// An empty `eps_neg` drops the forgetting term. Terms whose weight is exactly
/// zero are skipped rather than multiplied, so `w = eta = 0` returns
/// `eps_uncond` bit for bit and `eta = 0` never reads `eps_neg`.
pub fn compose_laf(
    eps_uncond: &NoisePrediction,
    eps_pos: &NoisePrediction,
    eps_neg: &[NoisePrediction],
    params: GuidanceParams,
) -> Result<NoisePrediction> {
    check_pair(eps_uncond, eps_pos)?;
    let mut out = eps_uncond.values.clone();
    if params.w != 0.0 {
        for ((o, u), p) in out.iter_mut().zip(&eps_uncond.values).zip(&eps_pos.values) {
            *o += params.w * (p - u);
        }
    }
    if params.eta != 0.0 {
        for n in eps_neg {
            check_pair(eps_uncond, n)?;
            for ((o, u), nv) in out.iter_mut().zip(&eps_uncond.values).zip(&n.values) {
                *o -= params.eta * (nv - u);
            }
        }
    }
    Ok(NoisePrediction {
        values: out,
        t: eps_uncond.t,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn np(v: &[f64]) -> NoisePrediction {
        NoisePrediction::new(v.to_vec(), 7).unwrap()
    }

    #[test]
    fn cfg_examples() {
        assert_eq!(compose_cfg(&np(&[0.0]), &np(&[1.0]), 0.0).unwrap().values, [1.0]);
        for w in [0.0, 1.0, 7.5, 100.0] {
            assert_eq!(compose_cfg(&np(&[1.0]), &np(&[1.0]), w).unwrap().values, [1.0]);
        }
        assert_eq!(
            compose_cfg(&np(&[0.0, 2.0]), &np(&[1.0, 0.0]), 2.0).unwrap().values,
            [3.0, -4.0]
        );
    }

    #[test]
    fn negative_examples() {
        assert_eq!(compose_negative(&np(&[0.0]), &np(&[1.0]), 0.0).unwrap().values, [1.0]);
        assert_eq!(compose_negative(&np(&[0.0]), &np(&[1.0]), 1.0).unwrap().values, [0.0]);
        assert_eq!(compose_negative(&np(&[2.0]), &np(&[1.0]), 3.0).unwrap().values, [4.0]);
    }

    #[test]
    fn laf_examples() {
        let (u, p, n) = (np(&[0.5, -1.0]), np(&[2.0, 3.0]), np(&[-4.0, 9.0]));
        let off = compose_laf(&u, &p, std::slice::from_ref(&n), GuidanceParams { w: 0.0, eta: 0.0 }).unwrap();
        assert_eq!(off.values, u.values);

        let no_eta = compose_laf(&u, &p, &[n], GuidanceParams { w: 3.0, eta: 0.0 }).unwrap();
        let expect: Vec<f64> = u.values.iter().zip(&p.values).map(|(u, p)| u + 3.0 * (p - u)).collect();
        assert_eq!(no_eta.values, expect);

        let out = compose_laf(
            &np(&[0.0]),
            &np(&[1.0]),
            &[np(&[-1.0])],
            GuidanceParams { w: 2.0, eta: 1.0 },
        )
        .unwrap();
        assert_eq!(out.values, [3.0]);
    }

    #[test]
    fn laf_relates_to_cfg_via_shifted_weight() {
        let (u, c) = (np(&[0.25, -2.0, 4.0]), np(&[1.0, 0.5, -3.0]));
        let cfg = compose_cfg(&u, &c, 2.0).unwrap();
        let laf = compose_laf(&u, &c, &[], GuidanceParams { w: 3.0, eta: 0.0 }).unwrap();
        for (a, b) in cfg.values.iter().zip(&laf.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn multiple_forgetting_terms_sum() {
        let (u, p) = (np(&[0.0]), np(&[0.0]));
        let out = compose_laf(&u, &p, &[np(&[1.0]), np(&[2.0])], GuidanceParams { w: 1.0, eta: 0.5 }).unwrap();
        assert_eq!(out.values, [-1.5]);
    }

    #[test]
    fn mismatches_are_errors() {
        let p = GuidanceParams::default();
        assert!(matches!(
            compose_cfg(&np(&[0.0]), &np(&[0.0, 1.0]), 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            compose_laf(&np(&[0.0]), &np(&[0.0]), &[np(&[1.0, 2.0])], p),
            Err(Error::DimensionMismatch { .. })
        ));
        let late = NoisePrediction::new(vec![0.0], 8).unwrap();
        assert!(matches!(
            compose_negative(&np(&[0.0]), &late, 1.0),
            Err(Error::TimestepMismatch { .. })
        ));
        assert!(NoisePrediction::new(vec![f64::NAN], 0).is_err());
        assert!(GuidanceParams::new(-1.0, 0.0).is_err());
        assert!(GuidanceParams::new(1.0, f64::INFINITY).is_err());
    }

    fn vecs(d: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0f64..10.0, d)
    }

    fn triple() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
        (1usize..=8).prop_flat_map(|d| (vecs(d), vecs(d), vecs(d)))
    }

    proptest! {
        #[test]
        fn scaling_inputs_scales_output((u, p, n) in triple(), w in 0.0f64..20.0, eta in 0.0f64..20.0, s in 0.1f64..4.0) {
            let params = GuidanceParams { w, eta };
            let base = compose_laf(&np(&u), &np(&p), &[np(&n)], params).unwrap();
            let sc = |v: &[f64]| np(&v.iter().map(|x| x * s).collect::<Vec<_>>());
            let scaled = compose_laf(&sc(&u), &sc(&p), &[sc(&n)], params).unwrap();
            for (a, b) in base.values.iter().zip(&scaled.values) {
                prop_assert!((a * s - b).abs() <= 1e-9 * (1.0 + b.abs()));
            }
        }

        #[test]
        fn affine_in_negative_argument((u, p, n) in triple(), w in 0.0f64..20.0, eta in 0.0f64..20.0, lam in -2.0f64..2.0) {
            // f(u, p, n) is affine in n: f(n1 + lam (n2 - n1)) = f(n1) + lam (f(n2) - f(n1)) with n2 = u.
            let params = GuidanceParams { w, eta };
            let f = |n: &[f64]| compose_laf(&np(&u), &np(&p), &[np(n)], params).unwrap().values;
            let mix: Vec<f64> = n.iter().zip(&u).map(|(a, b)| a + lam * (b - a)).collect();
            let (f1, f2, fm) = (f(&n), f(&u), f(&mix));
            for i in 0..u.len() {
                let expect = f1[i] + lam * (f2[i] - f1[i]);
                prop_assert!((fm[i] - expect).abs() <= 1e-8 * (1.0 + expect.abs()));
            }
        }

        #[test]
        fn swapping_roles_negates_displacement((u, p, n) in triple(), w in 0.0f64..20.0, eta in 0.0f64..20.0) {
            let a = compose_laf(&np(&u), &np(&p), &[np(&n)], GuidanceParams { w, eta }).unwrap();
            let b = compose_laf(&np(&u), &np(&n), &[np(&p)], GuidanceParams { w: eta, eta: w }).unwrap();
            for ((x, y), u) in a.values.iter().zip(&b.values).zip(&u) {
                let (da, db) = (x - u, y - u);
                prop_assert!((da + db).abs() <= 1e-9 * (1.0 + da.abs()));
            }
        }
    }
}
