//! JSON manifest of a constructed sequence: the operator text, points, radii,
//! levels and jets of every stage, plus piece expressions for reference.

use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{rational_text, Rational};
use crate::jet::{parse_pde, AnyJet, Arithmetic, FileDiagnostic, Jet, PdeOperator};
use crate::range::JetRecord;

use super::bump::BumpFunction;
use super::{ConstructError, SequenceFailure, SolutionSequence, Stage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusRecord {
    pub r_in: String,
    pub r_out: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: usize,
    pub level: u32,
    pub points: Vec<Vec<String>>,
    pub radii: Vec<RadiusRecord>,
    pub jets: Vec<JetRecord>,
    /// `pieces[k][u]`: the Taylor polynomial of unknown `u` around point `k`.
    pub pieces: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub stage: usize,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub pde: String,
    pub schedule: Vec<u32>,
    pub points: Vec<Vec<String>>,
    pub shrink: String,
    pub stages: Vec<StageRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<FailureRecord>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ManifestError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("embedded operator: {0}")]
    Pde(#[from] FileDiagnostic),
    #[error("stage {stage}: {message}")]
    Stage { stage: usize, message: String },
}

fn text(x: &[Rational]) -> Vec<String> {
    x.iter().map(rational_text).collect()
}

fn stage_record(op: &PdeOperator, stage: &Stage) -> StageRecord {
    StageRecord {
        stage: stage.index,
        level: stage.level,
        points: stage.points.iter().map(|p| text(p)).collect(),
        radii: stage
            .bumps
            .iter()
            .map(|b| RadiusRecord { r_in: rational_text(&b.r_in), r_out: rational_text(&b.r_out) })
            .collect(),
        jets: stage.jets.iter().map(|j| JetRecord::new(j, op)).collect(),
        pieces: (0..stage.points.len())
            .map(|k| stage.functions.iter().map(|f| f.pieces()[k].function.to_string()).collect())
            .collect(),
    }
}

impl Manifest {
    pub fn from_sequence(seq: &SolutionSequence) -> Manifest {
        Manifest {
            pde: seq.op.to_file_text(),
            schedule: seq.schedule.clone(),
            points: seq.points.iter().map(|p| text(p)).collect(),
            shrink: rational_text(&seq.shrink),
            stages: seq.stages.iter().map(|s| stage_record(&seq.op, s)).collect(),
            failure: None,
        }
    }

    pub fn from_failure(f: &SequenceFailure) -> Manifest {
        let mut m = Manifest::from_sequence(&f.partial);
        let (point_index, point) = match &f.error {
            ConstructError::PointFailed { point_index, point, .. } => (Some(*point_index), Some(point.clone())),
            _ => (None, None),
        };
        m.failure = Some(FailureRecord { stage: f.stage, message: f.error.to_string(), point_index, point });
        m
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json(s: &str) -> Result<Manifest, ManifestError> {
        serde_json::from_str(s).map_err(|e| ManifestError::Json(e.to_string()))
    }

    /// Rebuilds the sequence from points, radii and jets; pieces are recomputed from
    /// the jets, so the recorded piece strings are informational only.
    pub fn to_sequence(&self) -> Result<SolutionSequence, ManifestError> {
        let op = parse_pde(&self.pde)?;
        let rat = |stage: usize, s: &str| {
            Rational::from_str(s.trim())
                .map_err(|_| ManifestError::Stage { stage, message: format!("`{s}` is not a rational number") })
        };
        let points = self
            .points
            .iter()
            .map(|p| p.iter().map(|c| rat(0, c)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        let shrink = rat(0, &self.shrink)?;
        let mut stages = Vec::with_capacity(self.stages.len());
        for rec in &self.stages {
            let s = rec.stage;
            let err = |message: String| ManifestError::Stage { stage: s, message };
            let pts = rec
                .points
                .iter()
                .map(|p| p.iter().map(|c| rat(s, c)).collect::<Result<Vec<_>, _>>())
                .collect::<Result<Vec<_>, _>>()?;
            if pts.iter().any(|p| p.len() != op.dim()) {
                return Err(err("point dimension does not match the operator".into()));
            }
            if rec.radii.len() != pts.len() || rec.jets.len() != pts.len() {
                return Err(err("points, radii and jets differ in length".into()));
            }
            let mut bumps = Vec::with_capacity(pts.len());
            for (p, r) in pts.iter().zip(&rec.radii) {
                let (r_in, r_out) = (rat(s, &r.r_in)?, rat(s, &r.r_out)?);
                if r_in <= Rational::from_integer(0.into()) || r_in >= r_out {
                    return Err(err("radii must satisfy 0 < r_in < r_out".into()));
                }
                bumps.push(Arc::new(BumpFunction::new(p.clone(), r_in, r_out)));
            }
            let layout = op.jet_layout(rec.level);
            let mut jets = Vec::with_capacity(pts.len());
            for (k, jr) in rec.jets.iter().enumerate() {
                if jr.values.len() != layout.len() {
                    return Err(err(format!("jet {k} has {} entries, expected {}", jr.values.len(), layout.len())));
                }
                for (i, e) in jr.values.iter().enumerate() {
                    let (u, p) = &layout.coords()[i];
                    if e.unknown != *u || e.index != p.entries() {
                        return Err(err(format!("jet {k} entry {i} ({}) is out of layout order", e.label)));
                    }
                }
                let jet = match jr.arithmetic {
                    Arithmetic::Exact => {
                        let v = jr.values.iter().map(|e| rat(s, &e.value)).collect::<Result<Vec<_>, _>>()?;
                        AnyJet::Exact(Jet::from_values(layout.clone(), v))
                    }
                    Arithmetic::Float => {
                        let v = jr
                            .values
                            .iter()
                            .map(|e| e.value.trim().parse::<f64>().map_err(|_| err(format!("`{}` is not a number", e.value))))
                            .collect::<Result<Vec<_>, _>>()?;
                        AnyJet::Float(Jet::from_values(layout.clone(), v))
                    }
                };
                jets.push(jet);
            }
            stages.push(Stage::from_parts(&op, s, rec.level, pts, bumps, jets));
        }
        Ok(SolutionSequence { op, points, schedule: self.schedule.clone(), shrink, stages })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructor::{construct_sequence, enumerate_dense, ConstructOptions, DenseScheme};

    #[test]
    fn round_trip() {
        let op = parse_pde("vars: x, y\nunknowns: u\norder: 1\ndomain: (0,1),(0,1)\neq: u_x^2 + u_y^2 = 1 + x^2\n").unwrap();
        let z = enumerate_dense(op.domain(), DenseScheme::Dyadic, 2).unwrap();
        let seq = construct_sequence(&op, &z, &[0, 1], &ConstructOptions::default()).unwrap();
        let m = Manifest::from_sequence(&seq);
        let back = Manifest::from_json(&m.to_json()).unwrap().to_sequence().unwrap();
        assert_eq!(back.stages.len(), 2);
        for (a, b) in seq.stages.iter().zip(&back.stages) {
            assert_eq!(a.jets, b.jets);
            assert_eq!(a.points, b.points);
            assert_eq!(a.bumps, b.bumps);
            assert_eq!(a.functions[0].to_expr(), b.functions[0].to_expr());
        }
        assert_eq!(Manifest::from_sequence(&back), m);
    }

    #[test]
    fn malformed_manifests_are_rejected() {
        let op = parse_pde("vars: x\nunknowns: u\norder: 1\ndomain: (0,1)\neq: u_x = 1\n").unwrap();
        let z = enumerate_dense(op.domain(), DenseScheme::Dyadic, 1).unwrap();
        let seq = construct_sequence(&op, &z, &[1], &ConstructOptions::default()).unwrap();
        let mut m = Manifest::from_sequence(&seq);
        m.stages[0].jets[0].values.pop();
        assert!(matches!(m.to_sequence(), Err(ManifestError::Stage { stage: 0, .. })));
        let mut m = Manifest::from_sequence(&seq);
        m.stages[0].jets[0].values[0].value = "one".into();
        assert!(m.to_sequence().is_err());
        assert!(Manifest::from_json("{").is_err());
    }
}
