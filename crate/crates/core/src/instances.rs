//! Non-stationary instances, the hard-instance pair and arm-set generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::design::design_matrix;
use crate::error::{Error, Result};
use crate::geometry::{compute_extreme_points, AdjacencyStructure, ArmSet};
use crate::linalg::{dot, norm_sq, sub, Cholesky};
use crate::scalar::Scalar;

/// Slack allowed when re-verifying gaps of constructed instances.
pub const GAP_VERIFY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Noise {
    /// Standard normal.
    #[default]
    Gauss1,
    /// Rademacher signs: variance one and 1-sub-Gaussian.
    Subgauss1,
    /// No noise. Test mode only.
    Zero,
}

impl Noise {
    pub fn sample<T: Scalar, R: Rng + ?Sized>(self, rng: &mut R) -> T {
        match self {
            Noise::Gauss1 => T::of(rng.sample::<f64, _>(StandardNormal)),
            Noise::Subgauss1 => {
                if rng.random::<bool>() {
                    T::one()
                } else {
                    -T::one()
                }
            }
            Noise::Zero => T::zero(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ThetaSequence<T> {
    /// `phase1` for the first `⌊T/2⌋` rounds, `phase2` afterwards.
    TwoPhase { phase1: Vec<T>, phase2: Vec<T> },
    Explicit(Vec<Vec<T>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonStationaryInstance<T> {
    arms: ArmSet<T>,
    horizon: usize,
    theta: ThetaSequence<T>,
    noise: Noise,
    extreme_points: Vec<usize>,
    mean: Vec<T>,
    best_arm: usize,
    min_gap: T,
}

impl<T: Scalar> NonStationaryInstance<T> {
    pub fn new(arms: ArmSet<T>, horizon: usize, theta: ThetaSequence<T>, noise: Noise) -> Result<Self> {
        let extreme = compute_extreme_points(&arms)?;
        Self::with_extreme_points(arms, horizon, theta, noise, extreme)
    }

    /// Like [`new`](Self::new) with the vertex set supplied by the caller.
    pub fn with_extreme_points(
        arms: ArmSet<T>,
        horizon: usize,
        theta: ThetaSequence<T>,
        noise: Noise,
        extreme_points: Vec<usize>,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be positive".into()));
        }
        let d = arms.dim();
        let check = |v: &[T]| {
            if v.len() != d {
                Err(Error::LengthMismatch { expected: d, got: v.len() })
            } else if v.iter().any(|c| !c.is_finite()) {
                Err(Error::InvalidArgument("parameter has a non-finite coordinate".into()))
            } else {
                Ok(())
            }
        };
        let mean: Vec<T> = match &theta {
            ThetaSequence::TwoPhase { phase1, phase2 } => {
                check(phase1)?;
                check(phase2)?;
                let first = T::of_usize(horizon / 2);
                let second = T::of_usize(horizon - horizon / 2);
                let n = T::of_usize(horizon);
                phase1.iter().zip(phase2).map(|(&a, &b)| (first * a + second * b) / n).collect()
            }
            ThetaSequence::Explicit(seq) => {
                if seq.len() != horizon {
                    return Err(Error::LengthMismatch { expected: horizon, got: seq.len() });
                }
                let mut m = vec![T::zero(); d];
                for th in seq {
                    check(th)?;
                    for (a, &b) in m.iter_mut().zip(th) {
                        *a += b;
                    }
                }
                m.into_iter().map(|v| v / T::of_usize(horizon)).collect()
            }
        };
        let (best_arm, min_gap) = best_and_gap(&arms, &extreme_points, &mean)?;
        Ok(Self { arms, horizon, theta, noise, extreme_points, mean, best_arm, min_gap })
    }

    pub fn arms(&self) -> &ArmSet<T> {
        &self.arms
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn theta(&self) -> &ThetaSequence<T> {
        &self.theta
    }

    pub fn noise(&self) -> Noise {
        self.noise
    }

    pub fn extreme_points(&self) -> &[usize] {
        &self.extreme_points
    }

    /// `θ̄_T`
    pub fn mean(&self) -> &[T] {
        &self.mean
    }

    pub fn best_arm(&self) -> usize {
        self.best_arm
    }

    pub fn min_gap(&self) -> T {
        self.min_gap
    }

    /// Parameter at round `t` (zero-based).
    pub fn theta_at(&self, t: usize) -> &[T] {
        match &self.theta {
            ThetaSequence::TwoPhase { phase1, phase2 } => {
                if t < self.horizon / 2 {
                    phase1
                } else {
                    phase2
                }
            }
            ThetaSequence::Explicit(seq) => &seq[t],
        }
    }

    pub fn with_noise(&self, noise: Noise) -> Self {
        Self { noise, ..self.clone() }
    }

    /// Same two-phase instance at another horizon. Explicit sequences cannot
    /// be stretched and must already have the requested length.
    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        match &self.theta {
            ThetaSequence::Explicit(_) if horizon != self.horizon => Err(Error::InvalidArgument(format!(
                "explicit sequence has horizon {}, cannot run at {horizon}",
                self.horizon
            ))),
            _ => Self::with_extreme_points(
                self.arms.clone(),
                horizon,
                self.theta.clone(),
                self.noise,
                self.extreme_points.clone(),
            ),
        }
    }

    pub fn max_theta_norm(&self) -> T {
        let norm = |v: &[T]| norm_sq(v).sqrt();
        match &self.theta {
            ThetaSequence::TwoPhase { phase1, phase2 } => {
                let n2 = norm(phase2);
                if self.horizon >= 2 {
                    norm(phase1).max(n2)
                } else {
                    n2
                }
            }
            ThetaSequence::Explicit(seq) => seq.iter().map(|v| norm(v)).fold(T::zero(), T::max),
        }
    }

    /// The bounded regime of the upper bound: arms and parameters in the unit ball.
    pub fn check_unit_regime(&self) -> Result<()> {
        let slack = T::one() + T::tol(1e-12);
        let arm = self.arms.max_norm();
        if arm > slack {
            return Err(Error::InvalidArgument(format!("max arm norm {arm} exceeds 1")));
        }
        let th = self.max_theta_norm();
        if th > slack {
            return Err(Error::InvalidArgument(format!("max parameter norm {th} exceeds 1")));
        }
        Ok(())
    }
}

fn best_and_gap<T: Scalar>(arms: &ArmSet<T>, extreme: &[usize], mean: &[T]) -> Result<(usize, T)> {
    if extreme.is_empty() {
        return Err(Error::InvalidArmSet("no extreme points".into()));
    }
    let value = |i: usize| dot(arms.arm(i), mean);
    let mut best = extreme[0];
    for &i in &extreme[1..] {
        if value(i) > value(best) {
            best = i;
        }
    }
    let gap = extreme
        .iter()
        .filter(|&&i| i != best)
        .map(|&i| value(best) - value(i))
        .fold(T::infinity(), T::min);
    let scale = arms.max_norm() * norm_sq(mean).sqrt();
    if !(gap > T::tol(1e-12) * scale.max(T::one())) {
        let other = extreme
            .iter()
            .copied()
            .find(|&i| i != best && value(best) - value(i) == gap)
            .unwrap_or(best);
        return Err(Error::NonUniqueBest(best, other));
    }
    Ok((best, gap))
}

/// Draws `r_t = x_{schedule[t]}ᵀθ_t + ε_t` for every round.
pub fn sample_rewards<T: Scalar, R: Rng + ?Sized>(
    inst: &NonStationaryInstance<T>,
    schedule: &[usize],
    rng: &mut R,
) -> Result<Vec<T>> {
    if schedule.len() != inst.horizon {
        return Err(Error::LengthMismatch { expected: inst.horizon, got: schedule.len() });
    }
    if let Some(&bad) = schedule.iter().find(|&&i| i >= inst.arms.len()) {
        return Err(Error::InvalidArgument(format!("arm index {bad} out of range")));
    }
    Ok(schedule
        .iter()
        .enumerate()
        .map(|(t, &i)| dot(inst.arms.arm(i), inst.theta_at(t)) + inst.noise.sample::<T, _>(rng))
        .collect())
}

/// Two instances with different best arms that an algorithm sampling from
/// `lambda_used` can barely tell apart.
#[derive(Debug, Clone, PartialEq)]
pub struct HardInstancePair<T> {
    pub instance_a: NonStationaryInstance<T>,
    pub instance_b: NonStationaryInstance<T>,
    /// `(x, x′)`: best arm of `instance_a`, then of `instance_b`.
    pub pair: (usize, usize),
    pub lambda_used: Vec<T>,
    pub gap: T,
    pub v_star: Vec<T>,
    pub theta_star: Vec<T>,
    pub alpha: T,
    pub edge_margin: T,
    /// `v*ᵀA(λ)v*`
    pub objective: T,
    /// `4Δ²/‖x − x′‖²_{A(λ)⁻¹}`
    pub closed_form: T,
    pub max_theta_norm: T,
}

/// Builds the hard pair for adjacent arms `x = pair.0`, `x′ = pair.1`.
///
/// `instance_a` plays `0` then `2θ*`, `instance_b` plays `2v*` then `2θ*`, so
/// their means are `θ*` and `θ* + v*`. Both are verified by substitution to
/// have gap at least `Δ` against every other vertex.
pub fn construct_hard_pair<T: Scalar>(
    x: &ArmSet<T>,
    adj: &AdjacencyStructure<T>,
    pair: (usize, usize),
    lambda: &[T],
    gap: T,
    horizon: usize,
) -> Result<HardInstancePair<T>> {
    let (i, j) = pair;
    if i == j || !adj.is_adjacent(i, j) {
        return Err(Error::NotAdjacent(i, j));
    }
    let witness = adj.witness(i, j).ok_or(Error::NotAdjacent(i, j))?;
    if horizon % 2 == 1 {
        return Err(Error::OddHorizon(horizon));
    }
    if !(gap > T::zero()) {
        return Err(Error::InvalidArgument(format!("gap must be positive, got {gap}")));
    }
    if lambda.len() != x.len() {
        return Err(Error::LengthMismatch { expected: x.len(), got: lambda.len() });
    }
    let a = design_matrix(x, lambda);
    let chol = Cholesky::factor(&a)?;
    let diff = sub(x.arm(i), x.arm(j));
    let u = chol.solve(&diff);
    let nsq = dot(&diff, &u);
    let c = gap / nsq;
    let base: Vec<T> = u.iter().map(|&v| c * v).collect();
    let v_star: Vec<T> = u.iter().map(|&v| -T::of(2.0) * c * v).collect();

    let others: Vec<usize> = adj.extreme_points.iter().copied().filter(|&y| y != i && y != j).collect();
    let b = |z: usize, y: usize| dot(&sub(x.arm(z), x.arm(y)), &base);
    let alpha = if others.is_empty() {
        T::zero()
    } else {
        let min_bx = others.iter().map(|&y| b(i, y)).fold(T::infinity(), T::min);
        let max_bxp = others.iter().map(|&y| b(j, y)).fold(T::neg_infinity(), T::max);
        ((gap + (-min_bx).max(max_bxp)) / witness.margin).max(T::zero())
    };
    let theta_star: Vec<T> = base.iter().zip(&witness.w).map(|(&b, &w)| b + alpha * w).collect();
    let theta_b: Vec<T> = theta_star.iter().zip(&v_star).map(|(&t, &v)| t + v).collect();

    let scale = (norm_sq(&theta_star).sqrt() + norm_sq(&theta_b).sqrt()) * x.max_norm();
    let tol = T::tol(GAP_VERIFY_TOL) * scale.max(T::one());
    for (best, theta) in [(i, &theta_star), (j, &theta_b)] {
        for &y in adj.extreme_points.iter().filter(|&&y| y != best) {
            let g = dot(&sub(x.arm(best), x.arm(y)), theta);
            if g < gap - tol {
                return Err(Error::CheckFailed(format!(
                    "hard pair infeasible: gap of arm {best} over {y} is {g} < {gap}"
                )));
            }
        }
    }

    let objective = a.quad_form(&v_star);
    let closed_form = T::of(4.0) * gap * gap / nsq;
    if (objective - closed_form).abs() > T::tol(1e-8) * closed_form {
        return Err(Error::CheckFailed(format!("hard pair objective {objective} differs from {closed_form}")));
    }

    let two = |v: &[T]| v.iter().map(|&c| T::of(2.0) * c).collect::<Vec<T>>();
    let zeros = vec![T::zero(); x.dim()];
    let make = |phase1: Vec<T>| {
        NonStationaryInstance::with_extreme_points(
            x.clone(),
            horizon,
            ThetaSequence::TwoPhase { phase1, phase2: two(&theta_star) },
            Noise::Gauss1,
            adj.extreme_points.clone(),
        )
    };
    let instance_a = make(zeros)?;
    let instance_b = make(two(&v_star))?;
    for (inst, best) in [(&instance_a, i), (&instance_b, j)] {
        if inst.best_arm() != best || inst.min_gap() < gap - tol {
            return Err(Error::CheckFailed(format!(
                "averaged instance has best arm {} and gap {}, expected {best} and {gap}",
                inst.best_arm(),
                inst.min_gap()
            )));
        }
    }
    let max_theta_norm = instance_a.max_theta_norm().max(instance_b.max_theta_norm());
    Ok(HardInstancePair {
        instance_a,
        instance_b,
        pair,
        lambda_used: lambda.to_vec(),
        gap,
        v_star,
        theta_star,
        alpha,
        edge_margin: witness.margin,
        objective,
        closed_form,
        max_theta_norm,
    })
}

/// `K` equally spaced points on the unit circle.
pub fn circle_set<T: Scalar>(k: usize) -> Result<ArmSet<T>> {
    if k < 3 {
        return Err(Error::InvalidArgument(format!("circle needs at least 3 arms, got {k}")));
    }
    ArmSet::new(
        (0..k)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / k as f64;
                vec![T::of(t.cos()), T::of(t.sin())]
            })
            .collect(),
    )
}

pub fn basis_set<T: Scalar>(d: usize) -> Result<ArmSet<T>> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("basis set needs d ≥ 2, got {d}")));
    }
    ArmSet::new((0..d).map(|i| (0..d).map(|j| if i == j { T::one() } else { T::zero() }).collect()).collect())
}

/// `K` points uniform in `[−1, 1]^d`, redrawn until they span.
pub fn random_polytope_set<T: Scalar>(d: usize, k: usize, seed: u64) -> Result<ArmSet<T>> {
    if d == 0 || k < d.max(2) {
        return Err(Error::InvalidArgument(format!("need K ≥ max(d, 2), got d = {d}, K = {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..1000 {
        let pts = (0..k).map(|_| (0..d).map(|_| T::of(rng.random_range(-1.0..1.0))).collect()).collect();
        match ArmSet::new(pts) {
            Ok(x) => return Ok(x),
            Err(Error::NonSpanning { .. } | Error::InvalidArmSet(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::InvalidArgument("could not draw a spanning set".into()))
}

/// Divides every arm by the largest arm norm.
pub fn scaled_to_unit_ball<T: Scalar>(x: &ArmSet<T>) -> Result<ArmSet<T>> {
    x.scaled(T::one() / x.max_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{adjacent_optimal, DEFAULT_MAX_ITER, DEFAULT_TOL};
    use crate::geometry::compute_adjacent_pairs;
    use approx::assert_relative_eq;

    fn square() -> ArmSet<f64> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        ArmSet::new(vec![vec![s, s], vec![s, -s], vec![-s, -s], vec![-s, s]]).unwrap()
    }

    #[test]
    fn generators() {
        let c = circle_set::<f64>(4).unwrap();
        let expect = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        for (a, e) in c.arms().iter().zip(expect) {
            assert!((a[0] - e[0]).abs() < 1e-15 && (a[1] - e[1]).abs() < 1e-15);
        }
        assert_eq!(basis_set::<f64>(3).unwrap().arm(1), &[0.0, 1.0, 0.0]);
        let r = random_polytope_set::<f64>(3, 10, 7).unwrap();
        assert_eq!((r.len(), r.dim()), (10, 3));
        assert_eq!(r, random_polytope_set::<f64>(3, 10, 7).unwrap());
        let big = ArmSet::new(vec![vec![3.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_relative_eq!(scaled_to_unit_ball(&big).unwrap().max_norm(), 1.0);
        assert!(circle_set::<f64>(2).is_err());
    }

    #[test]
    fn two_phase_mean_best_arm_and_gap() {
        let x = basis_set::<f64>(2).unwrap();
        let theta = ThetaSequence::TwoPhase { phase1: vec![1.0, 0.0], phase2: vec![0.0, 0.5] };
        let inst = NonStationaryInstance::new(x, 4, theta, Noise::Zero).unwrap();
        assert_eq!(inst.mean(), &[0.5, 0.25]);
        assert_eq!(inst.best_arm(), 0);
        assert_relative_eq!(inst.min_gap(), 0.25);
        assert_eq!(inst.theta_at(1), &[1.0, 0.0]);
        assert_eq!(inst.theta_at(2), &[0.0, 0.5]);
    }

    #[test]
    fn ties_are_rejected() {
        let x = basis_set::<f64>(2).unwrap();
        let theta = ThetaSequence::Explicit(vec![vec![1.0, 1.0]; 3]);
        assert!(matches!(NonStationaryInstance::new(x, 3, theta, Noise::Gauss1), Err(Error::NonUniqueBest(..))));
    }

    #[test]
    fn zero_noise_rewards_are_exact() {
        let x = basis_set::<f64>(2).unwrap();
        let theta = ThetaSequence::TwoPhase { phase1: vec![0.0, 0.0], phase2: vec![0.3, -0.1] };
        let inst = NonStationaryInstance::new(x, 4, theta, Noise::Zero).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = sample_rewards(&inst, &[0, 1, 0, 1], &mut rng).unwrap();
        assert_eq!(r, vec![0.0, 0.0, 0.3, -0.1]);
        assert!(matches!(sample_rewards(&inst, &[0], &mut rng), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn square_hard_pair_matches_closed_form() {
        let x = square();
        let adj = compute_adjacent_pairs(&x).unwrap();
        let des = adjacent_optimal(&x, &adj, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let hp = construct_hard_pair(&x, &adj, (0, 1), &des.weights, 0.3, 100).unwrap();
        assert_relative_eq!(hp.objective, 4.0 * 0.09 / 4.0, max_relative = 1e-3);
        assert_relative_eq!(hp.objective, hp.closed_form, max_relative = 1e-8);
        assert_eq!(hp.instance_a.best_arm(), 0);
        assert_eq!(hp.instance_b.best_arm(), 1);
        assert!(hp.instance_a.min_gap() >= 0.3 - 1e-9);
        assert!(hp.instance_b.min_gap() >= 0.3 - 1e-9);
        assert_eq!(hp.instance_a.theta_at(0), &[0.0, 0.0]);
        let swapped = construct_hard_pair(&x, &adj, (1, 0), &des.weights, 0.3, 100).unwrap();
        assert_eq!((swapped.instance_a.best_arm(), swapped.instance_b.best_arm()), (1, 0));
    }

    #[test]
    fn basis_hard_pair_has_no_alpha_term() {
        let x = basis_set::<f64>(2).unwrap();
        let adj = compute_adjacent_pairs(&x).unwrap();
        let hp = construct_hard_pair(&x, &adj, (0, 1), &[0.5, 0.5], 0.2, 10).unwrap();
        assert_eq!(hp.alpha, 0.0);
        let d: f64 = hp.theta_star[0] - hp.theta_star[1];
        assert_relative_eq!(d, 0.2, epsilon = 1e-12);
    }

    #[test]
    fn hard_pair_errors() {
        let x = square();
        let adj = compute_adjacent_pairs(&x).unwrap();
        let u = [0.25; 4];
        assert!(matches!(construct_hard_pair(&x, &adj, (0, 2), &u, 0.3, 10), Err(Error::NotAdjacent(0, 2))));
        assert!(matches!(construct_hard_pair(&x, &adj, (0, 1), &u, 0.3, 11), Err(Error::OddHorizon(11))));
        assert!(matches!(
            construct_hard_pair(&x, &adj, (0, 1), &[1.0, 0.0, 0.0, 0.0], 0.3, 10),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn explicit_horizon_cannot_change() {
        let x = basis_set::<f64>(2).unwrap();
        let inst =
            NonStationaryInstance::new(x, 2, ThetaSequence::Explicit(vec![vec![1.0, 0.0], vec![0.5, 0.0]]), Noise::Gauss1)
                .unwrap();
        assert!(inst.with_horizon(4).is_err());
        assert_eq!(inst.with_horizon(2).unwrap(), inst);
    }
}
