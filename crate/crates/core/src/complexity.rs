//! Complexity measures, bound values and the Gaussian KL exponent.

use serde::Serialize;

use crate::design::{adjacent_optimal, minmax_design, Design, DirectionSet, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::geometry::{AdjacencyStructure, ArmSet};
use crate::instances::NonStationaryInstance;
use crate::linalg::{dot, sub};
use crate::scalar::Scalar;

fn check_gap<T: Scalar>(gap: T) -> Result<()> {
    if gap > T::zero() && gap.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("gap must be positive, got {gap}")))
    }
}

/// `H_G = d/Δ²`.
pub fn h_g<T: Scalar>(x: &ArmSet<T>, gap: T) -> Result<T> {
    check_gap(gap)?;
    Ok(T::of_usize(x.dim()) / (gap * gap))
}

/// Adjacent-optimal objective divided by `Δ²`.
pub fn h_adjacent<T: Scalar>(x: &ArmSet<T>, adj: &AdjacencyStructure<T>, gap: T) -> Result<T> {
    check_gap(gap)?;
    let des = adjacent_optimal(x, adj, T::tol(DEFAULT_TOL), DEFAULT_MAX_ITER)?;
    Ok(des.objective_value / (gap * gap))
}

/// `(1/4)·exp(−4T/H_Adjacent)`.
pub fn lower_bound_value<T: Scalar>(h_adjacent: T, horizon: T) -> T {
    T::of(0.25) * (-T::of(4.0) * horizon / h_adjacent).exp()
}

/// `deg·exp(−T/(36·H_Adjacent))`.
pub fn upper_bound_value<T: Scalar>(h_adjacent: T, horizon: T, deg: usize) -> T {
    T::of_usize(deg) * (-horizon / (T::of(36.0) * h_adjacent)).exp()
}

/// Budget at which the upper bound equals `delta`.
pub fn horizon_for_upper<T: Scalar>(h_adjacent: T, deg: usize, delta: T) -> T {
    T::of(36.0) * h_adjacent * (T::of_usize(deg) / delta).ln()
}

/// Budget at which the lower bound equals `value`.
pub fn horizon_for_lower<T: Scalar>(h_adjacent: T, value: T) -> T {
    h_adjacent / T::of(4.0) * (T::of(0.25) / value).ln()
}

/// Arm sampling probabilities for [`kl_exponent`].
#[derive(Debug, Clone, Copy)]
pub enum Sampling<'a, T> {
    /// The same probabilities at every round.
    Static(&'a [T]),
    /// One probability vector per round.
    PerStep(&'a [Vec<T>]),
    /// `first` for rounds before `T/2`, `second` afterwards.
    Halves { first: &'a [T], second: &'a [T] },
}

/// `Σ_t Σ_x p_t(x)·(xᵀ(θ_t − θ′_t))²/2` for unit-variance Gaussian noise.
pub fn kl_exponent<T: Scalar>(
    a: &NonStationaryInstance<T>,
    b: &NonStationaryInstance<T>,
    sampling: Sampling<'_, T>,
) -> Result<T> {
    if a.horizon() != b.horizon() {
        return Err(Error::LengthMismatch { expected: a.horizon(), got: b.horizon() });
    }
    if a.arms() != b.arms() {
        return Err(Error::InvalidArgument("instances have different arm sets".into()));
    }
    let horizon = a.horizon();
    let k = a.arms().len();
    let probs = |t: usize| -> &[T] {
        match sampling {
            Sampling::Static(p) => p,
            Sampling::PerStep(p) => &p[t],
            Sampling::Halves { first, second } => {
                if t < horizon / 2 {
                    first
                } else {
                    second
                }
            }
        }
    };
    if let Sampling::PerStep(p) = sampling {
        if p.len() != horizon {
            return Err(Error::LengthMismatch { expected: horizon, got: p.len() });
        }
    }
    let mut total = T::zero();
    for t in 0..horizon {
        let p = probs(t);
        if p.len() != k {
            return Err(Error::LengthMismatch { expected: k, got: p.len() });
        }
        let diff = sub(a.theta_at(t), b.theta_at(t));
        for (x, &px) in a.arms().arms().iter().zip(p) {
            if px > T::zero() {
                let m = dot(x, &diff);
                total += px * m * m * T::of(0.5);
            }
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparators {
    AllPairs,
    AdjacentOnly,
}

/// `min_λ max_x ‖x* − x‖²_{A(λ)⁻¹} / ((x* − x)ᵀθ)²` over `x ∈ X∖{x*}` or
/// over the neighbors of `x*`. Gaps are folded into the directions so the
/// min-max solver applies as is.
pub fn stationary_complexity<T: Scalar>(
    x: &ArmSet<T>,
    adj: &AdjacencyStructure<T>,
    theta: &[T],
    restrict: Comparators,
    tol: T,
) -> Result<Design<T>> {
    if theta.len() != x.dim() {
        return Err(Error::LengthMismatch { expected: x.dim(), got: theta.len() });
    }
    let values: Vec<T> = x.arms().iter().map(|a| dot(a, theta)).collect();
    let best = (0..x.len()).fold(0, |b, i| if values[i] > values[b] { i } else { b });
    if let Some(tie) = (0..x.len()).find(|&i| i != best && values[i] == values[best]) {
        return Err(Error::NonUniqueBest(best, tie));
    }
    let comparators: Vec<usize> = match restrict {
        Comparators::AllPairs => (0..x.len()).filter(|&i| i != best).collect(),
        Comparators::AdjacentOnly => adj.neighbors_of(best).to_vec(),
    };
    let mut dirs = Vec::with_capacity(comparators.len());
    for &i in &comparators {
        let diff = sub(x.arm(best), x.arm(i));
        let gap = values[best] - values[i];
        if !(gap > T::zero()) {
            return Err(Error::GapTooSmall { gap: gap.as_f64(), required: 0.0 });
        }
        dirs.push(diff.into_iter().map(|v| v / gap).collect());
    }
    minmax_design(x, &DirectionSet::custom(dirs)?, tol, DEFAULT_MAX_ITER)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexityReport {
    pub d: usize,
    pub k: usize,
    pub min_gap: f64,
    pub h_g: f64,
    pub h_adjacent: f64,
    pub ratio: f64,
    /// `|I^{x*}|` for the given parameter, otherwise the maximum vertex degree.
    pub deg: usize,
    pub best_arm: Option<usize>,
    pub adjacent_objective: f64,
    pub solver_gap: f64,
    pub horizon: Option<usize>,
    pub lower_bound_value: Option<f64>,
    pub upper_bound_value: Option<f64>,
}

impl ComplexityReport {
    pub fn lower_bound_at(&self, horizon: f64) -> f64 {
        lower_bound_value(self.h_adjacent, horizon)
    }

    pub fn upper_bound_at(&self, horizon: f64) -> f64 {
        upper_bound_value(self.h_adjacent, horizon, self.deg)
    }
}

/// Collects every measure for an arm set at gap `Δ`. With `theta`, the
/// degree is that of its best arm.
pub fn complexity_report<T: Scalar>(
    x: &ArmSet<T>,
    adj: &AdjacencyStructure<T>,
    gap: T,
    theta: Option<&[T]>,
    horizon: Option<usize>,
) -> Result<ComplexityReport> {
    check_gap(gap)?;
    let des = adjacent_optimal(x, adj, T::tol(DEFAULT_TOL), DEFAULT_MAX_ITER)?;
    let h_adj = des.objective_value / (gap * gap);
    let hg = h_g(x, gap)?;
    let (deg, best_arm) = match theta {
        Some(th) => {
            if th.len() != x.dim() {
                return Err(Error::LengthMismatch { expected: x.dim(), got: th.len() });
            }
            let v = |i: usize| dot(x.arm(i), th);
            let best = adj.extreme_points.iter().copied().fold(adj.extreme_points[0], |b, i| if v(i) > v(b) { i } else { b });
            (adj.neighbors_of(best).len(), Some(best))
        }
        None => (adj.max_degree(), None),
    };
    let h_adjacent = h_adj.as_f64();
    Ok(ComplexityReport {
        d: x.dim(),
        k: x.len(),
        min_gap: gap.as_f64(),
        h_g: hg.as_f64(),
        h_adjacent,
        ratio: h_adjacent / hg.as_f64(),
        deg,
        best_arm,
        adjacent_objective: des.objective_value.as_f64(),
        solver_gap: des.duality_gap.as_f64(),
        horizon,
        lower_bound_value: horizon.map(|t| lower_bound_value(h_adjacent, t as f64)),
        upper_bound_value: horizon.map(|t| upper_bound_value(h_adjacent, t as f64, deg)),
    })
}
