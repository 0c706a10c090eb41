//! Monte Carlo error estimation and reports.

pub mod acceptance;

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{Algorithm, Budget, Plan};
use crate::complexity::{lower_bound_value, upper_bound_value};
use crate::design::{adjacent_optimal, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::instances::{NonStationaryInstance, ThetaSequence};
use crate::io::InstanceJson;

pub const REPORT_SCHEMA: u32 = 1;
pub const STREAM_GENERATOR: &str = "chacha20: key from splitmix64(base_seed, cell_id), stream = trial_index";
pub const MIN_TRIALS: usize = 100;
const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `errors` successes in `n` trials.
pub fn wilson_interval(errors: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if errors == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if p == 1.0 { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

pub fn wilson95(errors: usize, n: usize) -> (f64, f64) {
    wilson_interval(errors, n, Z95)
}

/// Half the width of the 95% Wilson interval.
pub fn wilson95_half_width(errors: usize, n: usize) -> f64 {
    let (lo, hi) = wilson95(errors, n);
    (hi - lo) / 2.0
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for one trial, reproducible from the triple.
pub fn trial_rng(base_seed: u64, cell_id: u64, trial: u64) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    let mut state = splitmix64(base_seed) ^ splitmix64(cell_id.rotate_left(17) ^ 0xA076_1D64_78BD_642F);
    for chunk in key.chunks_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    let mut rng = ChaCha20Rng::from_seed(key);
    rng.set_stream(trial);
    rng
}

/// Misidentification count over `trials` runs, in parallel.
pub fn count_errors(
    budget: &Budget<f64>,
    inst: &NonStationaryInstance<f64>,
    trials: usize,
    base_seed: u64,
    cell_id: u64,
) -> Result<usize> {
    let best = inst.best_arm();
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(base_seed, cell_id, t as u64);
            budget.estimate(inst, &mut rng).map(|(_, chosen)| usize::from(chosen != best))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

/// `H_Adjacent` at the instance's gap and the degree of its best arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundContext {
    pub h_adjacent: f64,
    pub deg: usize,
}

impl BoundContext {
    pub fn new(plan: &Plan<f64>, inst: &NonStationaryInstance<f64>) -> Result<Self> {
        let objective = match plan.algorithm {
            Algorithm::Adjacent => plan.design.objective_value,
            Algorithm::G => adjacent_optimal(&plan.arms, &plan.adjacency, DEFAULT_TOL, DEFAULT_MAX_ITER)?.objective_value,
        };
        let gap = inst.min_gap();
        Ok(Self { h_adjacent: objective / (gap * gap), deg: plan.adjacency.neighbors_of(inst.best_arm()).len() })
    }

    pub fn lower(&self, horizon: usize) -> f64 {
        lower_bound_value(self.h_adjacent, horizon as f64)
    }

    pub fn upper(&self, horizon: usize) -> f64 {
        upper_bound_value(self.h_adjacent, horizon as f64, self.deg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub instance: String,
    pub algo: Algorithm,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub trials: usize,
    pub errors: usize,
    pub rate: f64,
    pub lo95: f64,
    pub hi95: f64,
    pub bound_lower: f64,
    pub bound_upper: f64,
    pub seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl CellReport {
    pub fn half_width(&self) -> f64 {
        (self.hi95 - self.lo95) / 2.0
    }

    fn failed(instance: &str, algo: Algorithm, horizon: usize, trials: usize, err: &Error) -> Self {
        Self {
            instance: instance.to_string(),
            algo,
            horizon,
            trials,
            errors: 0,
            rate: 0.0,
            lo95: 0.0,
            hi95: 1.0,
            bound_lower: 0.0,
            bound_upper: 0.0,
            seconds: 0.0,
            failure: Some(err.to_string()),
        }
    }
}

/// Runs one cell on a prepared plan. `inst` must already have the budget's horizon.
pub fn estimate_cell(
    name: &str,
    plan: &Plan<f64>,
    bounds: &BoundContext,
    inst: &NonStationaryInstance<f64>,
    trials: usize,
    base_seed: u64,
    cell_id: u64,
) -> Result<CellReport> {
    let start = Instant::now();
    let horizon = inst.horizon();
    let budget = plan.budget(horizon)?;
    let errors = count_errors(&budget, inst, trials, base_seed, cell_id)?;
    let (lo95, hi95) = wilson95(errors, trials);
    Ok(CellReport {
        instance: name.to_string(),
        algo: plan.algorithm,
        horizon,
        trials,
        errors,
        rate: errors as f64 / trials as f64,
        lo95,
        hi95,
        bound_lower: bounds.lower(horizon),
        bound_upper: bounds.upper(horizon),
        seconds: start.elapsed().as_secs_f64(),
        failure: None,
    })
}

/// One cell from scratch: plan, bounds and trials.
pub fn estimate_error(
    inst: &NonStationaryInstance<f64>,
    algo: Algorithm,
    horizon: usize,
    trials: usize,
    base_seed: u64,
) -> Result<CellReport> {
    let plan = Plan::new(inst.arms(), algo)?;
    let bounds = BoundContext::new(&plan, inst)?;
    let inst = inst.with_horizon(horizon)?;
    estimate_cell("instance", &plan, &bounds, &inst, trials, base_seed, 0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRef {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<InstanceJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub instances: Vec<InstanceRef>,
    pub algorithms: Vec<Algorithm>,
    /// Budgets to run; empty means each instance's own horizon.
    #[serde(default)]
    pub budgets: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut spec: Self = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for r in &mut spec.instances {
            if let Some(p) = &r.path {
                if p.is_relative() {
                    r.path = Some(base.join(p));
                }
            }
        }
        Ok(spec)
    }

    fn resolve(&self) -> Result<Vec<(String, NonStationaryInstance<f64>)>> {
        self.instances
            .iter()
            .map(|r| {
                let inst = match (&r.path, &r.instance) {
                    (Some(p), None) => crate::io::load_instance(p)?,
                    (None, Some(j)) => j.clone().into_instance()?,
                    _ => {
                        return Err(Error::InvalidArgument(format!(
                            "instance {:?} needs exactly one of \"path\" and \"instance\"",
                            r.name
                        )))
                    }
                };
                Ok((r.name.clone(), inst))
            })
            .collect()
    }

    /// Budgets each instance runs at.
    fn budgets_for(&self, inst: &NonStationaryInstance<f64>) -> Vec<usize> {
        if self.budgets.is_empty() {
            vec![inst.horizon()]
        } else {
            self.budgets.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < MIN_TRIALS {
            return Err(Error::InvalidArgument(format!("trials must be at least {MIN_TRIALS}, got {}", self.trials)));
        }
        if self.instances.is_empty() || self.algorithms.is_empty() {
            return Err(Error::InvalidArgument("spec needs at least one instance and one algorithm".into()));
        }
        for (name, inst) in self.resolve()? {
            let d = inst.arms().dim();
            for t in self.budgets_for(&inst) {
                if t < d * d {
                    return Err(Error::BudgetTooSmall { budget: t, min: d * d });
                }
                if matches!(inst.theta(), ThetaSequence::TwoPhase { .. }) && t % 2 == 1 {
                    return Err(Error::InvalidArgument(format!("instance {name:?} is two-phase; budget {t} is odd")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub schema: u32,
    pub generator: String,
    pub base_seed: u64,
    pub cells: Vec<CellReport>,
    pub failed_cells: usize,
}

impl TrialReport {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        crate::io::write_json(path, self)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "instance", "algo", "T", "trials", "errors", "rate", "lo95", "hi95", "bound_lower", "bound_upper", "seconds",
        ])?;
        for c in &self.cells {
            w.write_record([
                c.instance.clone(),
                c.algo.to_string(),
                c.horizon.to_string(),
                c.trials.to_string(),
                c.errors.to_string(),
                c.rate.to_string(),
                c.lo95.to_string(),
                c.hi95.to_string(),
                c.bound_lower.to_string(),
                c.bound_upper.to_string(),
                c.seconds.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs every (instance, algorithm, budget) cell. Cell `k` in that order
/// uses stream key `(seed, k)`, so counts do not depend on scheduling.
pub fn sweep(spec: &ExperimentSpec) -> Result<TrialReport> {
    spec.validate()?;
    let instances = spec.resolve()?;
    let mut plans: HashMap<(usize, Algorithm), Result<(Plan<f64>, BoundContext)>> = HashMap::new();
    let mut jobs = Vec::new();
    for (ii, (_, inst)) in instances.iter().enumerate() {
        for &algo in &spec.algorithms {
            plans.entry((ii, algo)).or_insert_with(|| {
                let plan = Plan::new(inst.arms(), algo)?;
                let bounds = BoundContext::new(&plan, inst)?;
                Ok((plan, bounds))
            });
            for t in spec.budgets_for(inst) {
                jobs.push((ii, algo, t));
            }
        }
    }
    let cells: Vec<CellReport> = jobs
        .par_iter()
        .enumerate()
        .map(|(cell_id, &(ii, algo, t))| {
            let (name, inst) = &instances[ii];
            let run = || -> Result<CellReport> {
                let (plan, bounds) = plans[&(ii, algo)].as_ref().map_err(|e| Error::CheckFailed(e.to_string()))?;
                let inst = inst.with_horizon(t)?;
                estimate_cell(name, plan, bounds, &inst, spec.trials, spec.seed, cell_id as u64)
            };
            run().unwrap_or_else(|e| CellReport::failed(name, algo, t, spec.trials, &e))
        })
        .collect();
    let failed_cells = cells.iter().filter(|c| c.failure.is_some()).count();
    Ok(TrialReport {
        schema: REPORT_SCHEMA,
        generator: STREAM_GENERATOR.to_string(),
        base_seed: spec.seed,
        cells,
        failed_cells,
    })
}

/// [`sweep`] on a dedicated pool of `jobs` threads.
pub fn sweep_with_jobs(spec: &ExperimentSpec, jobs: Option<usize>) -> Result<TrialReport> {
    match jobs {
        None => sweep(spec),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .install(|| sweep(spec)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{circle_set, Noise};
    use approx::assert_relative_eq;
    use rand::Rng;

    #[test]
    fn wilson_examples() {
        let (lo, hi) = wilson95(0, 100);
        assert_eq!(lo, 0.0);
        assert_relative_eq!(hi, 0.036_995, epsilon = 1e-5);
        let (lo, hi) = wilson95(50, 100);
        assert_relative_eq!(lo, 0.403_831, epsilon = 1e-5);
        assert_relative_eq!(hi, 0.596_169, epsilon = 1e-5);
        assert!(lo <= 0.5 && 0.5 <= hi);
        let w1 = wilson95_half_width(200, 1000);
        let w2 = wilson95_half_width(400, 2000);
        assert_relative_eq!(w2 / w1, std::f64::consts::FRAC_1_SQRT_2, max_relative = 0.01);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = trial_rng(1, 2, 3).random();
        assert_eq!(a, trial_rng(1, 2, 3).random::<u64>());
        assert_ne!(a, trial_rng(1, 2, 4).random::<u64>());
        assert_ne!(a, trial_rng(1, 3, 3).random::<u64>());
        assert_ne!(a, trial_rng(2, 2, 3).random::<u64>());
    }

    #[test]
    fn zero_noise_cell_has_no_errors() {
        let x = circle_set::<f64>(6).unwrap();
        let inst =
            NonStationaryInstance::new(x, 40, ThetaSequence::TwoPhase { phase1: vec![0.5, 0.1], phase2: vec![0.5, 0.1] }, Noise::Zero)
                .unwrap();
        let cell = estimate_error(&inst, Algorithm::Adjacent, 40, 200, 1).unwrap();
        assert_eq!(cell.errors, 0);
        assert!(cell.bound_lower > 0.0 && cell.bound_lower <= 0.25);
    }

    #[test]
    fn sweep_counts_cells_and_is_deterministic() {
        let inst = |p: [f64; 2]| InstanceJson {
            arms: vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]],
            horizon: Some(8),
            phase1: Some(vec![0.0, 0.0]),
            phase2: Some(p.to_vec()),
            theta: None,
            noise: Noise::Gauss1,
        };
        let spec = ExperimentSpec {
            instances: vec![
                InstanceRef { name: "a".into(), path: None, instance: Some(inst([0.6, 0.2])) },
                InstanceRef { name: "b".into(), path: None, instance: Some(inst([0.2, 0.6])) },
            ],
            algorithms: vec![Algorithm::Adjacent, Algorithm::G],
            budgets: vec![8, 16, 32],
            trials: 100,
            seed: 11,
        };
        let r1 = sweep(&spec).unwrap();
        assert_eq!(r1.cells.len(), 12);
        assert_eq!(r1.failed_cells, 0);
        let r2 = sweep_with_jobs(&spec, Some(1)).unwrap();
        let counts = |r: &TrialReport| r.cells.iter().map(|c| c.errors).collect::<Vec<_>>();
        assert_eq!(counts(&r1), counts(&r2));
        for c in &r1.cells {
            assert!(c.lo95 <= c.rate && c.rate <= c.hi95);
        }
    }

    #[test]
    fn spec_validation() {
        let spec = ExperimentSpec { instances: vec![], algorithms: vec![Algorithm::G], budgets: vec![], trials: 10, seed: 0 };
        assert!(spec.validate().is_err());
    }
}
