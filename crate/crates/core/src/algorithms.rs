//! Adjacent-BAI and the G-optimal baseline.
//!
//! Both algorithms fix a static allocation from a design, play it in a
//! uniformly random order, and return the arm maximizing the least-squares
//! estimate. They differ only in the design.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::design::{
    adjacent_optimal, g_optimal, round_design, Allocation, Design, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use crate::error::{Error, Result};
use crate::geometry::{compute_adjacent_pairs, AdjacencyStructure, ArmSet};
use crate::instances::NonStationaryInstance;
use crate::linalg::{dot, norm_sq, Cholesky, Matrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Adjacent,
    G,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Adjacent => "adjacent",
            Algorithm::G => "g",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adjacent" => Ok(Algorithm::Adjacent),
            "g" => Ok(Algorithm::G),
            other => Err(Error::InvalidArgument(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// Uniform permutation of `0..n` by Fisher–Yates.
pub fn sample_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        p.swap(i, j);
    }
    p
}

/// Solves `gram·θ = Σ x r` by Cholesky and checks the residual.
pub fn least_squares<T: Scalar>(gram: &Matrix<T>, plays: &[(&[T], T)]) -> Result<Vec<T>> {
    let d = gram.rows();
    let mut rhs = vec![T::zero(); d];
    for &(x, r) in plays {
        if x.len() != d {
            return Err(Error::LengthMismatch { expected: d, got: x.len() });
        }
        for (a, &b) in rhs.iter_mut().zip(x) {
            *a += b * r;
        }
    }
    solve_checked(&Cholesky::factor(gram)?, gram, &rhs)
}

fn solve_checked<T: Scalar>(chol: &Cholesky<T>, gram: &Matrix<T>, rhs: &[T]) -> Result<Vec<T>> {
    let theta = chol.solve(rhs);
    let resid: Vec<T> = gram.mul_vec(&theta).iter().zip(rhs).map(|(&a, &b)| a - b).collect();
    let scale = norm_sq(rhs).sqrt().max(T::min_positive_value());
    let limit = T::tol(1e-9) * scale.max(T::one());
    if norm_sq(&resid).sqrt() > limit {
        return Err(Error::CheckFailed(format!(
            "least-squares residual {} exceeds {limit}",
            norm_sq(&resid).sqrt()
        )));
    }
    Ok(theta)
}

/// Index of the largest `xᵀθ`, lowest index on ties.
pub fn argmax_arm<T: Scalar>(x: &ArmSet<T>, theta: &[T]) -> usize {
    let mut best = 0;
    let mut value = dot(x.arm(0), theta);
    for i in 1..x.len() {
        let v = dot(x.arm(i), theta);
        if v > value {
            best = i;
            value = v;
        }
    }
    best
}

/// Everything a single run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct BaiRun<T> {
    pub algorithm: Algorithm,
    pub allocation: Allocation<T>,
    /// Arm slot played at each round: round `t` plays `sequence[permutation[t]]`.
    pub permutation: Vec<usize>,
    /// Arm index played at each round.
    pub schedule: Vec<usize>,
    pub rewards: Vec<T>,
    pub estimator: Vec<T>,
    pub chosen_arm: usize,
    /// `Σ_t x_t x_tᵀ`
    pub gram: Matrix<T>,
}

/// The trial-independent part of a run: adjacency and design for an arm set.
#[derive(Debug, Clone)]
pub struct Plan<T> {
    pub algorithm: Algorithm,
    pub arms: ArmSet<T>,
    pub adjacency: AdjacencyStructure<T>,
    pub design: Design<T>,
}

impl<T: Scalar> Plan<T> {
    pub fn new(arms: &ArmSet<T>, algorithm: Algorithm) -> Result<Self> {
        let adjacency = compute_adjacent_pairs(arms)?;
        Self::with_adjacency(arms, adjacency, algorithm)
    }

    pub fn with_adjacency(arms: &ArmSet<T>, adjacency: AdjacencyStructure<T>, algorithm: Algorithm) -> Result<Self> {
        let tol = T::tol(DEFAULT_TOL);
        let design = match algorithm {
            Algorithm::Adjacent => adjacent_optimal(arms, &adjacency, tol, DEFAULT_MAX_ITER)?,
            Algorithm::G => g_optimal(arms, tol, DEFAULT_MAX_ITER)?,
        };
        Ok(Self { algorithm, arms: arms.clone(), adjacency, design })
    }

    /// Rounds the design to `horizon` pulls and factors the Gram matrix.
    pub fn budget(&self, horizon: usize) -> Result<Budget<T>> {
        let allocation = round_design(&self.arms, &self.design, horizon)?;
        let sequence = allocation.sequence();
        let mut gram = Matrix::zeros(self.arms.dim(), self.arms.dim());
        for (i, &n) in allocation.counts.iter().enumerate() {
            if n > 0 {
                gram.add_outer(T::of_usize(n), self.arms.arm(i));
            }
        }
        let chol = Cholesky::factor(&gram)?;
        Ok(Budget { algorithm: self.algorithm, allocation, sequence, gram, chol })
    }
}

/// A plan rounded to one budget, ready to run many trials.
#[derive(Debug, Clone)]
pub struct Budget<T> {
    pub algorithm: Algorithm,
    pub allocation: Allocation<T>,
    /// Allocation as a list of arm indices in ascending order.
    pub sequence: Vec<usize>,
    pub gram: Matrix<T>,
    chol: Cholesky<T>,
}

impl<T: Scalar> Budget<T> {
    fn check(&self, inst: &NonStationaryInstance<T>) -> Result<()> {
        if inst.horizon() != self.allocation.total {
            return Err(Error::LengthMismatch { expected: self.allocation.total, got: inst.horizon() });
        }
        Ok(())
    }

    /// One trial, returning only the estimate and the chosen arm.
    pub fn estimate<R: Rng + ?Sized>(&self, inst: &NonStationaryInstance<T>, rng: &mut R) -> Result<(Vec<T>, usize)> {
        self.check(inst)?;
        let perm = sample_permutation(self.sequence.len(), rng);
        let d = inst.arms().dim();
        let mut rhs = vec![T::zero(); d];
        for (t, &slot) in perm.iter().enumerate() {
            let x = inst.arms().arm(self.sequence[slot]);
            let r = dot(x, inst.theta_at(t)) + inst.noise().sample::<T, _>(rng);
            for (a, &b) in rhs.iter_mut().zip(x) {
                *a += b * r;
            }
        }
        let theta = solve_checked(&self.chol, &self.gram, &rhs)?;
        let chosen = argmax_arm(inst.arms(), &theta);
        Ok((theta, chosen))
    }

    /// One trial with every intermediate retained.
    pub fn run<R: Rng + ?Sized>(&self, inst: &NonStationaryInstance<T>, rng: &mut R) -> Result<BaiRun<T>> {
        self.check(inst)?;
        let permutation = sample_permutation(self.sequence.len(), rng);
        let schedule: Vec<usize> = permutation.iter().map(|&s| self.sequence[s]).collect();
        let rewards = crate::instances::sample_rewards(inst, &schedule, rng)?;
        let plays: Vec<(&[T], T)> = schedule.iter().zip(&rewards).map(|(&i, &r)| (inst.arms().arm(i), r)).collect();
        let mut rhs = vec![T::zero(); inst.arms().dim()];
        for &(x, r) in &plays {
            for (a, &b) in rhs.iter_mut().zip(x) {
                *a += b * r;
            }
        }
        let estimator = solve_checked(&self.chol, &self.gram, &rhs)?;
        let chosen_arm = argmax_arm(inst.arms(), &estimator);
        Ok(BaiRun {
            algorithm: self.algorithm,
            allocation: self.allocation.clone(),
            permutation,
            schedule,
            rewards,
            estimator,
            chosen_arm,
            gram: self.gram.clone(),
        })
    }
}

fn run_with<T: Scalar, R: Rng + ?Sized>(
    inst: &NonStationaryInstance<T>,
    algorithm: Algorithm,
    rng: &mut R,
) -> Result<BaiRun<T>> {
    let d = inst.arms().dim();
    if inst.horizon() < d * d {
        return Err(Error::BudgetTooSmall { budget: inst.horizon(), min: d * d });
    }
    Plan::new(inst.arms(), algorithm)?.budget(inst.horizon())?.run(inst, rng)
}

/// Adjacent-BAI: adjacency, adjacent-optimal design, rounding, permuted play
/// and least squares. Repeated runs on one arm set should share a [`Plan`].
pub fn run_adjacent_bai<T: Scalar, R: Rng + ?Sized>(inst: &NonStationaryInstance<T>, rng: &mut R) -> Result<BaiRun<T>> {
    run_with(inst, Algorithm::Adjacent, rng)
}

/// The same pipeline with the G-optimal design.
pub fn run_g_baseline<T: Scalar, R: Rng + ?Sized>(inst: &NonStationaryInstance<T>, rng: &mut R) -> Result<BaiRun<T>> {
    run_with(inst, Algorithm::G, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{basis_set, circle_set, Noise, ThetaSequence};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn permutation_basics() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        assert_eq!(sample_permutation(1, &mut rng), vec![0]);
        let mut p = sample_permutation(50, &mut rng);
        p.sort_unstable();
        assert_eq!(p, (0..50).collect::<Vec<_>>());
        let a = sample_permutation(20, &mut ChaCha20Rng::seed_from_u64(9));
        let b = sample_permutation(20, &mut ChaCha20Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn least_squares_on_basis() {
        let e1 = [1.0, 0.0, 0.0];
        let e2 = [0.0, 1.0, 0.0];
        let e3 = [0.0, 0.0, 1.0];
        let gram = Matrix::identity(3);
        let th = least_squares(&gram, &[(&e1, 0.5), (&e2, -2.0), (&e3, 3.0)]).unwrap();
        assert_eq!(th, vec![0.5, -2.0, 3.0]);
        let twice = least_squares(
            &gram.scaled(2.0),
            &[(&e1, 0.5), (&e2, -2.0), (&e3, 3.0), (&e1, 0.5), (&e2, -2.0), (&e3, 3.0)],
        )
        .unwrap();
        for (a, b) in th.iter().zip(&twice) {
            assert_relative_eq!(a, b, epsilon = 1e-14);
        }
        assert!(matches!(least_squares(&Matrix::<f64>::zeros(3, 3), &[]), Err(Error::Singular { .. })));
    }

    #[test]
    fn zero_noise_stationary_recovers_best_arm() {
        let x = circle_set::<f64>(8).unwrap();
        let theta = vec![0.3, 0.9];
        let inst = NonStationaryInstance::new(x, 64, ThetaSequence::Explicit(vec![theta.clone(); 64]), Noise::Zero).unwrap();
        for seed in 0..5 {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            for run in [run_adjacent_bai(&inst, &mut rng).unwrap(), run_g_baseline(&inst, &mut rng).unwrap()] {
                assert_eq!(run.chosen_arm, inst.best_arm());
                for (a, b) in run.estimator.iter().zip(&theta) {
                    assert_relative_eq!(a, b, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn run_is_reproducible_and_consistent() {
        let x = basis_set::<f64>(3).unwrap();
        let inst = NonStationaryInstance::new(
            x,
            30,
            ThetaSequence::TwoPhase { phase1: vec![0.0, 0.2, 0.1], phase2: vec![0.6, 0.2, 0.1] },
            Noise::Gauss1,
        )
        .unwrap();
        let a = run_adjacent_bai(&inst, &mut ChaCha20Rng::seed_from_u64(5)).unwrap();
        let b = run_adjacent_bai(&inst, &mut ChaCha20Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.allocation.counts, vec![10, 10, 10]);
        let plan = Plan::new(inst.arms(), Algorithm::Adjacent).unwrap();
        let budget = plan.budget(30).unwrap();
        let (est, chosen) = budget.estimate(&inst, &mut ChaCha20Rng::seed_from_u64(5)).unwrap();
        assert_eq!(chosen, argmax_arm(inst.arms(), &est));
        // Gram of the permuted schedule equals the allocation's Gram.
        let mut g = Matrix::zeros(3, 3);
        for &i in &a.schedule {
            g.add_outer(1.0, inst.arms().arm(i));
        }
        assert_eq!(g, a.gram);
    }

    #[test]
    fn budget_below_d_squared_is_rejected() {
        let x = basis_set::<f64>(3).unwrap();
        let inst = NonStationaryInstance::new(x, 8, ThetaSequence::Explicit(vec![vec![1.0, 0.0, 0.0]; 8]), Noise::Zero).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        assert!(matches!(run_adjacent_bai(&inst, &mut rng), Err(Error::BudgetTooSmall { budget: 8, min: 9 })));
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in [Algorithm::Adjacent, Algorithm::G] {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("xy".parse::<Algorithm>().is_err());
    }
}
