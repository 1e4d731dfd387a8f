//! JSON documents for problems, value profiles and models.
//!
//! Field order is fixed by the struct definitions. Output goes through
//! [`crate::emit::to_json_bytes`], so floats carry 17 significant digits.

use std::path::Path;

use refinery_core::multivalue::{Coupling, JointRefinementModel, ValueProfile};
use refinery_core::{DecisionProblem, DistSpec, RefinementModel, ReflectionMode};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DocError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("malformed document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid document: {0}")]
    Invalid(String),
}

fn invalid<E: std::fmt::Display>(e: E) -> DocError {
    DocError::Invalid(e.to_string())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, DocError> {
    let text = std::fs::read_to_string(path).map_err(|source| DocError::Read { path: path.display().to_string(), source })?;
    Ok(serde_json::from_str(&text)?)
}

/// `{ "atoms", "credence", "desirability", "acts" }`; acts list atom indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDoc {
    pub atoms: Vec<String>,
    pub credence: Vec<f64>,
    pub desirability: Vec<f64>,
    pub acts: Vec<Vec<usize>>,
}

impl ProblemDoc {
    pub fn to_problem(&self) -> Result<DecisionProblem, DocError> {
        DecisionProblem::new(&self.atoms, &self.acts, &self.credence, &self.desirability).map_err(invalid)
    }

    pub fn from_problem(p: &DecisionProblem) -> Self {
        let acts = p
            .acts()
            .acts
            .iter()
            .map(|act| act.atoms.iter().map(|id| p.index_of(*id).expect("atom of problem")).collect())
            .collect();
        Self {
            atoms: p.atoms().iter().map(|a| a.label.clone()).collect(),
            credence: p.credences().to_vec(),
            desirability: p.desirabilities().to_vec(),
            acts,
        }
    }
}

/// A problem document with per-dimension atom values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileDoc {
    pub atoms: Vec<String>,
    pub credence: Vec<f64>,
    pub desirability: Vec<f64>,
    pub acts: Vec<Vec<usize>>,
    pub values: Vec<Vec<f64>>,
}

impl ProfileDoc {
    pub fn to_profile(&self) -> Result<ValueProfile, DocError> {
        let problem = ProblemDoc {
            atoms: self.atoms.clone(),
            credence: self.credence.clone(),
            desirability: self.desirability.clone(),
            acts: self.acts.clone(),
        }
        .to_problem()?;
        ValueProfile::new(problem, self.values.clone()).map_err(invalid)
    }
}

/// Mirror of [`DistSpec`] tagged by `"kind"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistDoc {
    Point { value: f64 },
    TwoPoint { center: f64, offset: f64, prob: f64 },
    Uniform { lo: f64, hi: f64 },
    Gaussian {
        mean: f64,
        sd: f64,
        #[serde(default = "neg_inf", skip_serializing_if = "is_neg_inf")]
        lo: f64,
        #[serde(default = "pos_inf", skip_serializing_if = "is_pos_inf")]
        hi: f64,
    },
}

fn neg_inf() -> f64 {
    f64::NEG_INFINITY
}

fn pos_inf() -> f64 {
    f64::INFINITY
}

fn is_neg_inf(x: &f64) -> bool {
    *x == f64::NEG_INFINITY
}

fn is_pos_inf(x: &f64) -> bool {
    *x == f64::INFINITY
}

impl From<DistDoc> for DistSpec {
    fn from(d: DistDoc) -> Self {
        match d {
            DistDoc::Point { value } => Self::Point { value },
            DistDoc::TwoPoint { center, offset, prob } => Self::TwoPoint { center, offset, prob },
            DistDoc::Uniform { lo, hi } => Self::Uniform { lo, hi },
            DistDoc::Gaussian { mean, sd, lo, hi } => Self::Gaussian { mean, sd, lo, hi },
        }
    }
}

impl From<DistSpec> for DistDoc {
    fn from(d: DistSpec) -> Self {
        match d {
            DistSpec::Point { value } => Self::Point { value },
            DistSpec::TwoPoint { center, offset, prob } => Self::TwoPoint { center, offset, prob },
            DistSpec::Uniform { lo, hi } => Self::Uniform { lo, hi },
            DistSpec::Gaussian { mean, sd, lo, hi } => Self::Gaussian { mean, sd, lo, hi },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ModeDoc {
    #[default]
    PerSample,
    Expectation,
}

/// `{ "u0", "p0", "q", "spread", "mass", "mode" }`. A missing mass is a
/// point mass at `p0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDoc {
    pub u0: f64,
    pub p0: f64,
    pub q: DistDoc,
    pub spread: DistDoc,
    #[serde(default)]
    pub mass: Option<DistDoc>,
    #[serde(default)]
    pub mode: ModeDoc,
}

impl ModelDoc {
    pub fn to_model(&self) -> RefinementModel {
        let mut m = RefinementModel::new(self.u0, self.p0, self.q.into(), self.spread.into());
        if let Some(mass) = self.mass {
            m = m.with_mass(mass.into());
        }
        if self.mode == ModeDoc::Expectation {
            m = m.with_mode(ReflectionMode::Expectation);
        }
        m
    }

    pub fn from_model(m: &RefinementModel) -> Self {
        Self {
            u0: m.u0,
            p0: m.p0,
            q: m.q.into(),
            spread: m.spread.into(),
            mass: Some(m.mass.into()),
            mode: match m.mode {
                ReflectionMode::PerSample => ModeDoc::PerSample,
                ReflectionMode::Expectation => ModeDoc::Expectation,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingDoc {
    Independent,
    CommonSpread,
    Explicit,
}

/// Joint refinement of a multi-valued act. `explicit` reads `offsets` and
/// `pmf` (pattern bit `i` set = dimension `i` moves up); the other couplings
/// read `marginals`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointDoc {
    pub q: DistDoc,
    pub coupling: CouplingDoc,
    #[serde(default)]
    pub marginals: Vec<DistDoc>,
    #[serde(default)]
    pub offsets: Vec<f64>,
    #[serde(default)]
    pub pmf: Vec<f64>,
}

impl JointDoc {
    pub fn to_model(&self) -> Result<JointRefinementModel, DocError> {
        let marginals = self.marginals.iter().map(|&d| d.into()).collect();
        match self.coupling {
            CouplingDoc::Explicit => {
                JointRefinementModel::two_point_joint(self.q.into(), &self.offsets, &self.pmf).map_err(invalid)
            }
            CouplingDoc::Independent => Ok(JointRefinementModel { q: self.q.into(), marginals, coupling: Coupling::Independent }),
            CouplingDoc::CommonSpread => {
                Ok(JointRefinementModel { q: self.q.into(), marginals, coupling: Coupling::CommonSpread })
            }
        }
    }
}

/// Payoff matrices of a bimatrix game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameDoc {
    pub payoff1: Vec<Vec<f64>>,
    pub payoff2: Vec<Vec<f64>>,
}

impl GameDoc {
    pub fn from_game(g: &refinery_core::games::BimatrixGame) -> Self {
        Self { payoff1: g.payoff1().to_vec(), payoff2: g.payoff2().to_vec() }
    }

    pub fn to_game(&self) -> Result<refinery_core::games::BimatrixGame, DocError> {
        refinery_core::games::BimatrixGame::new(self.payoff1.clone(), self.payoff2.clone()).map_err(invalid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emit::to_json_bytes;

    #[test]
    fn problem_round_trip_preserves_bits() {
        let p = DecisionProblem::from_acts(&[0.1, 0.2, 0.7], &[1.0 / 3.0, -2.0, 0.1]).unwrap();
        let doc = ProblemDoc::from_problem(&p);
        let text = String::from_utf8(to_json_bytes(&doc).unwrap()).unwrap();
        assert!(text.starts_with("{\"atoms\":[\"a0\",\"a1\",\"a2\"],\"credence\":["));
        assert!(text.contains("0.33333333333333331"));
        let back: ProblemDoc = serde_json::from_str(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.to_problem().unwrap(), p);
    }

    #[test]
    fn model_document() {
        let text = r#"{"u0":0,"p0":0.5,"q":{"kind":"point","value":0.5},"spread":{"kind":"two-point","center":0,"offset":2,"prob":0.5},"mode":"per-sample"}"#;
        let doc: ModelDoc = serde_json::from_str(text).unwrap();
        let m = doc.to_model();
        assert_eq!(m, RefinementModel::new(0.0, 0.5, DistSpec::point(0.5), DistSpec::pm(2.0)));
        assert_eq!(ModelDoc::from_model(&m).to_model(), m);
    }

    #[test]
    fn gaussian_bounds_default_to_infinite() {
        let d: DistDoc = serde_json::from_str(r#"{"kind":"gaussian","mean":0,"sd":1}"#).unwrap();
        assert_eq!(DistSpec::from(d), DistSpec::gaussian(0.0, 1.0));
        assert_eq!(serde_json::to_string(&d).unwrap(), r#"{"kind":"gaussian","mean":0.0,"sd":1.0}"#);
    }

    #[test]
    fn profile_and_joint_documents() {
        let text = r#"{"atoms":["A","notA"],"credence":[0.5,0.5],"desirability":[0,0],"acts":[[0],[1]],"values":[[2,1],[0,1]]}"#;
        let profile = serde_json::from_str::<ProfileDoc>(text).unwrap().to_profile().unwrap();
        assert_eq!(profile.act_values(0).unwrap(), vec![2.0, 0.0]);
        let joint: JointDoc = serde_json::from_str(
            r#"{"q":{"kind":"point","value":0.5},"coupling":"explicit","offsets":[1,4],"pmf":[0,0.25,0.5,0.25]}"#,
        )
        .unwrap();
        assert_eq!(joint.to_model().unwrap().dimension_count(), 2);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"atoms":["a"],"credence":[1],"desirability":[0],"acts":[[0]],"extra":1}"#;
        assert!(serde_json::from_str::<ProblemDoc>(text).is_err());
    }
}
