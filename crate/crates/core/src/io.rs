//! File formats: arm sets (CSV or JSON), adjacency, designs and instances.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::design::{Allocation, Design};
use crate::error::{Error, Result};
use crate::geometry::{AdjacencyStructure, ArmSet};
use crate::instances::{HardInstancePair, NonStationaryInstance, Noise, ThetaSequence};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArmFormat {
    Csv,
    Json,
}

impl ArmFormat {
    /// Guesses from the extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => ArmFormat::Json,
            _ => ArmFormat::Csv,
        }
    }
}

/// One arm per row. A first row that does not parse as numbers is a header.
pub fn parse_arms_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (n, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if n == 0 => continue,
            Err(e) => return Err(Error::InvalidArmSet(format!("row {}: {e}", n + 1))),
        }
    }
    Ok(rows)
}

pub fn parse_arms_json(text: &str) -> Result<Vec<Vec<f64>>> {
    Ok(serde_json::from_str(text)?)
}

pub fn load_arms(path: &Path, format: Option<ArmFormat>) -> Result<ArmSet<f64>> {
    let text = fs::read_to_string(path)?;
    let rows = match format.unwrap_or_else(|| ArmFormat::from_path(path)) {
        ArmFormat::Csv => parse_arms_csv(&text)?,
        ArmFormat::Json => parse_arms_json(&text)?,
    };
    ArmSet::new(rows)
}

pub fn write_arms_csv<T: Scalar>(path: &Path, x: &ArmSet<T>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().from_path(path)?;
    for arm in x.arms() {
        w.write_record(arm.iter().map(|v| format!("{v}")))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessJson {
    pub w: Vec<f64>,
    /// `null` when the margin is unbounded.
    pub margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjacencyJson {
    pub extreme: Vec<usize>,
    pub edges: Vec<[usize; 2]>,
    pub witnesses: BTreeMap<String, WitnessJson>,
    /// Indices whose LP margin was positive but below ten times the tolerance.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub marginal: Vec<Vec<usize>>,
}

impl AdjacencyJson {
    pub fn from_structure<T: Scalar>(adj: &AdjacencyStructure<T>) -> Self {
        Self {
            extreme: adj.extreme_points.clone(),
            edges: adj.adjacent_pairs.iter().map(|&(i, j)| [i, j]).collect(),
            witnesses: adj
                .witnesses
                .iter()
                .map(|(&(i, j), w)| {
                    let m = w.margin.as_f64();
                    (
                        format!("{i}-{j}"),
                        WitnessJson { w: w.w.iter().map(|v| v.as_f64()).collect(), margin: m.is_finite().then_some(m) },
                    )
                })
                .collect(),
            marginal: adj.marginal.iter().map(|m| m.indices.clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignJson {
    pub weights: Vec<f64>,
    pub objective: f64,
    pub gap: f64,
    pub iters: usize,
    #[serde(default)]
    pub converged: bool,
    #[serde(default)]
    pub lower_bound: f64,
    #[serde(default)]
    pub ridge_applied: bool,
}

impl DesignJson {
    pub fn from_design<T: Scalar>(d: &Design<T>) -> Self {
        Self {
            weights: d.weights.iter().map(|v| v.as_f64()).collect(),
            objective: d.objective_value.as_f64(),
            gap: d.duality_gap.as_f64(),
            iters: d.iterations,
            converged: d.converged,
            lower_bound: d.lower_bound.as_f64(),
            ridge_applied: d.ridge_applied,
        }
    }
}

/// Reads `weights` from a design JSON or a bare JSON array.
pub fn load_weights(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let weights = match value.get("weights") {
        Some(w) => w.clone(),
        None => value,
    };
    Ok(serde_json::from_value(weights)?)
}

pub fn write_allocation_csv<T: Scalar>(path: &Path, alloc: &Allocation<T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["arm", "count"])?;
    for (i, n) in alloc.counts.iter().enumerate() {
        w.write_record([i.to_string(), n.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Instance file: either a two-phase form or an explicit sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceJson {
    pub arms: Vec<Vec<f64>>,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase1: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase2: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub noise: Noise,
}

impl InstanceJson {
    pub fn from_instance(inst: &NonStationaryInstance<f64>) -> Self {
        let (phase1, phase2, theta) = match inst.theta() {
            ThetaSequence::TwoPhase { phase1, phase2 } => (Some(phase1.clone()), Some(phase2.clone()), None),
            ThetaSequence::Explicit(seq) => (None, None, Some(seq.clone())),
        };
        Self { arms: inst.arms().arms().to_vec(), horizon: Some(inst.horizon()), phase1, phase2, theta, noise: inst.noise() }
    }

    pub fn into_instance(self) -> Result<NonStationaryInstance<f64>> {
        let arms = ArmSet::new(self.arms)?;
        let (seq, horizon) = match (self.phase1, self.phase2, self.theta) {
            (Some(p1), Some(p2), None) => {
                let t = self.horizon.ok_or_else(|| Error::InvalidArgument("two-phase instance needs \"T\"".into()))?;
                (ThetaSequence::TwoPhase { phase1: p1, phase2: p2 }, t)
            }
            (None, None, Some(seq)) => {
                let t = self.horizon.unwrap_or(seq.len());
                (ThetaSequence::Explicit(seq), t)
            }
            _ => {
                return Err(Error::InvalidArgument(
                    "instance needs either \"phase1\" and \"phase2\" or \"theta\"".into(),
                ))
            }
        };
        NonStationaryInstance::new(arms, horizon, seq, self.noise)
    }
}

pub fn load_instance(path: &Path) -> Result<NonStationaryInstance<f64>> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str::<InstanceJson>(&text)?.into_instance()
}

pub fn save_instance(path: &Path, inst: &NonStationaryInstance<f64>) -> Result<()> {
    write_json(path, &InstanceJson::from_instance(inst))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairManifest {
    pub pair: [usize; 2],
    pub gap: f64,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub lambda: Vec<f64>,
    pub v_star: Vec<f64>,
    pub theta_star: Vec<f64>,
    pub alpha: f64,
    pub edge_margin: f64,
    pub objective: f64,
    pub closed_form: f64,
    pub max_theta_norm: f64,
    pub instance_a: String,
    pub instance_b: String,
}

impl PairManifest {
    pub fn new(hp: &HardInstancePair<f64>, instance_a: String, instance_b: String) -> Self {
        Self {
            pair: [hp.pair.0, hp.pair.1],
            gap: hp.gap,
            horizon: hp.instance_a.horizon(),
            lambda: hp.lambda_used.clone(),
            v_star: hp.v_star.clone(),
            theta_star: hp.theta_star.clone(),
            alpha: hp.alpha,
            edge_margin: hp.edge_margin,
            objective: hp.objective,
            closed_form: hp.closed_form,
            max_theta_norm: hp.max_theta_norm,
            instance_a,
            instance_b,
        }
    }
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
