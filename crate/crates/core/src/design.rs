//! Experimental designs over an arm set.
//!
//! All three designs (G, XY, adjacent) solve the same problem
//!
//! ```text
//!     min_{λ ∈ Δ_X} max_{y ∈ Y} yᵀ A(λ)⁻¹ y,      A(λ) = Σ_x λ_x x xᵀ
//! ```
//!
//! for different direction sets `Y`. The solver treats it as the saddle
//! problem `min_λ max_{μ ∈ Δ_Y} Σ_y μ_y yᵀA(λ)⁻¹y` and runs mirror-prox with
//! entropic steps on both simplices. Every reported value comes with a
//! certified lower bound, so `duality_gap` bounds the suboptimality.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AdjacencyStructure, ArmSet};
use crate::linalg::{null_vector, sub, Cholesky, Matrix};
use crate::scalar::Scalar;

pub const DEFAULT_TOL: f64 = 1e-4;
pub const DEFAULT_MAX_ITER: usize = 20_000;
/// Weights below this are dropped before rounding.
pub const PRUNE_THRESHOLD: f64 = 1e-9;
const RIDGE: f64 = 1e-10;
const RIDGE_CONDITION: f64 = 1e12;

/// Where a direction came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DirectionOrigin {
    Arm(usize),
    Pair(usize, usize),
    Custom,
}

/// The directions whose worst-case variance a design minimizes.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSet<T> {
    directions: Vec<Vec<T>>,
    origins: Vec<DirectionOrigin>,
}

impl<T: Scalar> DirectionSet<T> {
    fn build(directions: Vec<Vec<T>>, origins: Vec<DirectionOrigin>) -> Result<Self> {
        if directions.is_empty() {
            return Err(Error::InvalidArgument("direction set is empty".into()));
        }
        if let Some(k) = directions.iter().position(|y| y.iter().all(|&v| v == T::zero())) {
            return Err(Error::InvalidArgument(format!("direction {k} is zero")));
        }
        Ok(Self { directions, origins })
    }

    pub fn custom(directions: Vec<Vec<T>>) -> Result<Self> {
        let n = directions.len();
        Self::build(directions, vec![DirectionOrigin::Custom; n])
    }

    /// The arms themselves (G-optimal design).
    pub fn arms(x: &ArmSet<T>) -> Result<Self> {
        Self::build(x.arms().to_vec(), (0..x.len()).map(DirectionOrigin::Arm).collect())
    }

    /// Differences of all distinct vertex pairs (XY-optimal design).
    pub fn extreme_pairs(x: &ArmSet<T>, adj: &AdjacencyStructure<T>) -> Result<Self> {
        let v = &adj.extreme_points;
        let pairs = v.iter().enumerate().flat_map(|(a, &i)| v[a + 1..].iter().map(move |&j| (i, j)));
        Self::from_pairs(x, pairs)
    }

    /// Differences of adjacent vertex pairs (adjacent-optimal design).
    pub fn adjacent_pairs(x: &ArmSet<T>, adj: &AdjacencyStructure<T>) -> Result<Self> {
        Self::from_pairs(x, adj.adjacent_pairs.iter().copied())
    }

    pub fn from_pairs(x: &ArmSet<T>, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let (dirs, origins) = pairs
            .into_iter()
            .map(|(i, j)| (sub(x.arm(i), x.arm(j)), DirectionOrigin::Pair(i, j)))
            .unzip();
        Self::build(dirs, origins)
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn directions(&self) -> &[Vec<T>] {
        &self.directions
    }

    pub fn origins(&self) -> &[DirectionOrigin] {
        &self.origins
    }

    /// `max_y yᵀ M⁻¹ y` for a factored `M`.
    pub fn max_inv_quad(&self, chol: &Cholesky<T>) -> T {
        self.directions.iter().map(|y| chol.inv_quad(y)).fold(T::zero(), T::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Design<T> {
    pub weights: Vec<T>,
    pub design_matrix: Matrix<T>,
    /// `max_y yᵀA(λ)⁻¹y` at `weights`; an upper bound on the optimum.
    pub objective_value: T,
    /// Certified lower bound on the optimum.
    pub lower_bound: T,
    /// `objective_value − lower_bound`.
    pub duality_gap: T,
    pub iterations: usize,
    pub converged: bool,
    /// Set when the final objective evaluation needed the diagnostic ridge.
    pub ridge_applied: bool,
    /// Objective after each accepted (improving) iterate, starting with the
    /// uniform initialization.
    pub trajectory: Vec<T>,
    pub directions: DirectionSet<T>,
}

impl<T: Scalar> Design<T> {
    pub fn relative_gap(&self) -> T {
        self.duality_gap / self.objective_value
    }

    pub fn support(&self) -> Vec<usize> {
        self.weights.iter().enumerate().filter(|(_, &w)| w > T::zero()).map(|(i, _)| i).collect()
    }
}

/// `A(λ) = Σ_x λ_x x xᵀ`.
pub fn design_matrix<T: Scalar>(x: &ArmSet<T>, weights: &[T]) -> Matrix<T> {
    let mut a = Matrix::zeros(x.dim(), x.dim());
    for (arm, &w) in x.arms().iter().zip(weights) {
        if w != T::zero() {
            a.add_outer(w, arm);
        }
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mahalanobis<T> {
    pub value: T,
    pub ridged: bool,
}

/// `zᵀ A⁻¹ z` by Cholesky solve. Fails if the smallest eigenvalue of `A` is
/// at most `1e-12`; if the condition number exceeds `1e12` a ridge of
/// `1e-10·I` is added and the result is flagged.
pub fn mahalanobis_sq<T: Scalar>(z: &[T], a: &Matrix<T>) -> Result<Mahalanobis<T>> {
    let ev = a.symmetric_eigenvalues();
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    if !(lo > T::tol(1e-12)) {
        return Err(Error::Singular { eigenvalue: lo.as_f64() });
    }
    let ridged = hi / lo > T::of(RIDGE_CONDITION);
    let chol = if ridged {
        let mut r = a.clone();
        for i in 0..r.rows() {
            r[(i, i)] += T::tol(RIDGE);
        }
        Cholesky::factor(&r)?
    } else {
        Cholesky::factor(a)?
    };
    Ok(Mahalanobis { value: chol.inv_quad(z), ridged })
}

struct Evaluation<T> {
    /// `y_jᵀ A⁻¹ y_j`
    v: Vec<T>,
    /// `x_iᵀ A⁻¹ B(μ) A⁻¹ x_i`
    h: Vec<T>,
}

impl<T: Scalar> Evaluation<T> {
    fn upper(&self) -> T {
        self.v.iter().copied().fold(T::zero(), T::max)
    }

    /// `2·Σ μ_y v_y − max_x h_x`, a lower bound on the optimum valid for
    /// every `λ` and `μ` (convexity of `λ ↦ tr(A(λ)⁻¹B(μ))`).
    fn lower(&self, mu: &[T]) -> T {
        let g: T = self.v.iter().zip(mu).map(|(&v, &m)| v * m).sum();
        let hmax = self.h.iter().copied().fold(T::neg_infinity(), T::max);
        T::of(2.0) * g - hmax
    }
}

struct Problem<'a, T> {
    arms: &'a [Vec<T>],
    dirs: &'a [Vec<T>],
    dim: usize,
}

impl<T: Scalar> Problem<'_, T> {
    fn evaluate(&self, lam: &[T], mu: &[T]) -> Option<Evaluation<T>> {
        let mut a = Matrix::zeros(self.dim, self.dim);
        for (x, &w) in self.arms.iter().zip(lam) {
            a.add_outer(w, x);
        }
        let chol = Cholesky::factor(&a).ok()?;
        let mut b = Matrix::zeros(self.dim, self.dim);
        let mut v = Vec::with_capacity(self.dirs.len());
        for (y, &m) in self.dirs.iter().zip(mu) {
            let yt = chol.forward(y);
            v.push(crate::linalg::norm_sq(&yt));
            if m != T::zero() {
                b.add_outer(m, &yt);
            }
        }
        let h = self.arms.iter().map(|x| b.quad_form(&chol.forward(x))).collect();
        Some(Evaluation { v, h })
    }
}

/// Multiplicative step `p ∝ p·exp(step·g)`, with `g` shifted by its max.
fn entropic_step<T: Scalar>(p: &[T], g: &[T], step: T) -> Vec<T> {
    let gmax = g.iter().copied().fold(T::neg_infinity(), T::max);
    let floor = T::min_positive_value().ln() * T::of(0.5);
    let mut out: Vec<T> = p.iter().zip(g).map(|(&p, &g)| p * (step * (g - gmax)).max(floor).exp()).collect();
    let s: T = out.iter().copied().sum();
    for v in out.iter_mut() {
        *v /= s;
    }
    out
}

fn kl<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .filter(|(&p, _)| p > T::zero())
        .map(|(&p, &q)| p * (p / q.max(T::min_positive_value())).ln())
        .sum()
}

/// Solves `min_λ max_{y ∈ dirs} yᵀA(λ)⁻¹y` to relative duality gap `tol`,
/// or stops after `max_iter` iterations with `converged = false`.
pub fn minmax_design<T: Scalar>(x: &ArmSet<T>, dirs: &DirectionSet<T>, tol: T, max_iter: usize) -> Result<Design<T>> {
    if let Some(bad) = dirs.directions().iter().position(|y| y.len() != x.dim()) {
        return Err(Error::LengthMismatch { expected: x.dim(), got: dirs.directions()[bad].len() });
    }
    let problem = Problem { arms: x.arms(), dirs: dirs.directions(), dim: x.dim() };
    let k = x.len();
    let m = dirs.len();
    let mut lam = vec![T::one() / T::of_usize(k); k];
    let mut mu = vec![T::one() / T::of_usize(m); m];

    let first = problem
        .evaluate(&lam, &mu)
        .ok_or_else(|| Error::CheckFailed("uniform design is singular on a spanning arm set".into()))?;
    let mut best_lam = lam.clone();
    let mut best_ub = first.upper();
    let mut best_lb = first.lower(&mu);
    let mut trajectory = vec![best_ub];

    let mut lam_sum = vec![T::zero(); k];
    let mut mu_sum = vec![T::zero(); m];
    let mut weight_sum = T::zero();
    let mut step = T::one();
    let mut iterations = 0;
    let converged_at = |ub: T, lb: T| ub - lb <= tol * ub;
    let mut converged = converged_at(best_ub, best_lb);

    let mut here = first;
    while !converged && iterations < max_iter {
        iterations += 1;
        let s = here.upper();
        // Extragradient step with backtracking on the prox condition.
        let (lam_half, mu_half, lam_next, mu_next, next) = loop {
            let eta = step / s;
            let lam_half = entropic_step(&lam, &here.h, eta);
            let mu_half = entropic_step(&mu, &here.v, eta);
            let half = problem.evaluate(&lam_half, &mu_half);
            let Some(half) = half else {
                step *= T::of(0.5);
                continue;
            };
            let lam_next = entropic_step(&lam, &half.h, eta);
            let mu_next = entropic_step(&mu, &half.v, eta);
            let lhs = eta
                * (lam_half
                    .iter()
                    .zip(&lam_next)
                    .zip(half.h.iter().zip(&here.h))
                    .map(|((&a, &b), (&g2, &g1))| -(g2 - g1) * (a - b))
                    .sum::<T>()
                    - mu_half
                        .iter()
                        .zip(&mu_next)
                        .zip(half.v.iter().zip(&here.v))
                        .map(|((&a, &b), (&g2, &g1))| (g2 - g1) * (a - b))
                        .sum::<T>());
            let rhs = kl(&lam_next, &lam_half) + kl(&lam_half, &lam) + kl(&mu_next, &mu_half) + kl(&mu_half, &mu);
            let next = problem.evaluate(&lam_next, &mu_next);
            if lhs <= rhs + T::epsilon() {
                if let Some(next) = next {
                    break (lam_half, mu_half, lam_next, mu_next, next);
                }
            }
            step *= T::of(0.5);
            if step < T::epsilon() {
                return Err(Error::CheckFailed("design solver step size collapsed".into()));
            }
        };
        let w = step / s;
        for (acc, &v) in lam_sum.iter_mut().zip(&lam_half) {
            *acc += w * v;
        }
        for (acc, &v) in mu_sum.iter_mut().zip(&mu_half) {
            *acc += w * v;
        }
        weight_sum += w;
        lam = lam_next;
        mu = mu_next;
        here = next;
        step *= T::of(1.2);

        if iterations % 10 == 0 || iterations == max_iter {
            let lam_avg: Vec<T> = lam_sum.iter().map(|&v| v / weight_sum).collect();
            let mu_avg: Vec<T> = mu_sum.iter().map(|&v| v / weight_sum).collect();
            let avg = problem.evaluate(&lam_avg, &mu_avg);
            for (cand_lam, cand_mu, eval) in [(&lam_avg, &mu_avg, avg.as_ref()), (&lam, &mu, Some(&here))] {
                let Some(eval) = eval else { continue };
                let ub = eval.upper();
                if ub < best_ub {
                    best_ub = ub;
                    best_lam = cand_lam.clone();
                    trajectory.push(ub);
                }
                best_lb = best_lb.max(eval.lower(cand_mu));
            }
            converged = converged_at(best_ub, best_lb);
        }
    }

    let design_matrix = design_matrix(x, &best_lam);
    let ev = design_matrix.symmetric_eigenvalues();
    let ridge_applied = ev[ev.len() - 1] / ev[0] > T::of(RIDGE_CONDITION);
    Ok(Design {
        weights: best_lam,
        design_matrix,
        objective_value: best_ub,
        lower_bound: best_lb,
        duality_gap: (best_ub - best_lb).max(T::zero()),
        iterations,
        converged,
        ridge_applied,
        trajectory,
        directions: dirs.clone(),
    })
}

pub fn g_optimal<T: Scalar>(x: &ArmSet<T>, tol: T, max_iter: usize) -> Result<Design<T>> {
    minmax_design(x, &DirectionSet::arms(x)?, tol, max_iter)
}

pub fn xy_optimal<T: Scalar>(x: &ArmSet<T>, adj: &AdjacencyStructure<T>, tol: T, max_iter: usize) -> Result<Design<T>> {
    minmax_design(x, &DirectionSet::extreme_pairs(x, adj)?, tol, max_iter)
}

pub fn adjacent_optimal<T: Scalar>(x: &ArmSet<T>, adj: &AdjacencyStructure<T>, tol: T, max_iter: usize) -> Result<Design<T>> {
    minmax_design(x, &DirectionSet::adjacent_pairs(x, adj)?, tol, max_iter)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KieferWolfowitz<T> {
    pub passed: bool,
    pub value: T,
}

/// Checks that the G-optimal value equals `d` to relative tolerance `tol`.
pub fn kiefer_wolfowitz_check<T: Scalar>(x: &ArmSet<T>, tol: T) -> Result<KieferWolfowitz<T>> {
    let solver_tol = (tol * T::of(0.1)).min(T::tol(DEFAULT_TOL));
    let g = g_optimal(x, solver_tol, DEFAULT_MAX_ITER)?;
    let d = T::of_usize(x.dim());
    Ok(KieferWolfowitz { passed: (g.objective_value - d).abs() / d <= tol, value: g.objective_value })
}

/// Integer allocation of a budget `total` across arms.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation<T> {
    pub counts: Vec<usize>,
    pub total: usize,
    /// `(1/T) Σ_t x_t x_tᵀ`
    pub empirical_matrix: Matrix<T>,
    /// The reduced design that was apportioned (zero outside its support).
    pub rounded_weights: Vec<T>,
    /// `max_y yᵀ(empirical)⁻¹y / max_y yᵀA(λ)⁻¹y` over the design's directions.
    pub variance_factor: T,
}

impl<T: Scalar> Allocation<T> {
    /// Arm index for each of the `total` slots, in ascending arm order.
    pub fn sequence(&self) -> Vec<usize> {
        self.counts.iter().enumerate().flat_map(|(i, &n)| std::iter::repeat_n(i, n)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RoundingRule {
    /// Efficient apportionment on a Carathéodory-reduced support.
    #[default]
    Efficient,
    /// Every pull on the heaviest arm. Only for fault-injection tests.
    Degenerate,
}

/// Drops weights below `threshold` and renormalizes.
pub fn prune_weights<T: Scalar>(weights: &[T], threshold: T) -> Vec<T> {
    let kept: Vec<T> = weights.iter().map(|&w| if w < threshold { T::zero() } else { w }).collect();
    let s: T = kept.iter().copied().sum();
    kept.into_iter().map(|w| w / s).collect()
}

/// Moves weight along null directions of `λ ↦ (A(λ), Σλ)` until the support
/// is affinely independent in the space of moment matrices, which leaves at
/// most `d(d+1)/2 + 1` arms. `A(λ)` and `Σλ = 1` are preserved.
pub fn reduce_support<T: Scalar>(x: &ArmSet<T>, weights: &[T]) -> Vec<T> {
    let d = x.dim();
    let mut w = weights.to_vec();
    let moment = |i: usize| {
        let a = x.arm(i);
        let mut col = Vec::with_capacity(d * (d + 1) / 2 + 1);
        for p in 0..d {
            for q in p..d {
                col.push(a[p] * a[q]);
            }
        }
        col.push(T::one());
        col
    };
    loop {
        let support: Vec<usize> = (0..w.len()).filter(|&i| w[i] > T::zero()).collect();
        if support.len() <= 1 {
            break;
        }
        let cols: Vec<Vec<T>> = support.iter().map(|&i| moment(i)).collect();
        let Some(mut c) = null_vector(&cols, T::tol(1e-10)) else { break };
        // Step length that zeroes one weight, choosing the smaller of the two signs.
        let ratio = |c: &[T]| {
            support
                .iter()
                .zip(c)
                .filter(|(_, &ci)| ci > T::zero())
                .map(|(&i, &ci)| w[i] / ci)
                .fold(T::infinity(), T::min)
        };
        let neg: Vec<T> = c.iter().map(|&v| -v).collect();
        let (tp, tn) = (ratio(&c), ratio(&neg));
        let t = if tn < tp {
            c = neg;
            tn
        } else {
            tp
        };
        if !t.is_finite() {
            break;
        }
        for (&i, &ci) in support.iter().zip(&c) {
            w[i] -= t * ci;
        }
        // Zero the exhausted entry exactly, plus any numerical dust.
        let dust = T::tol(1e-14);
        let argmin = support
            .iter()
            .copied()
            .min_by(|&a, &b| w[a].partial_cmp(&w[b]).unwrap())
            .expect("nonempty support");
        w[argmin] = T::zero();
        for v in w.iter_mut() {
            if *v < dust {
                *v = T::zero();
            }
        }
        let s: T = w.iter().copied().sum();
        for v in w.iter_mut() {
            *v /= s;
        }
    }
    w
}

/// Efficient apportionment of `total` units to positive weights `w`:
/// start from `⌈(T − p/2)·w_i⌉`, then repair the sum by decrementing the
/// largest `(n_i − 1)/w_i` or incrementing the smallest `n_i/w_i`. Zero
/// weights always get zero units.
pub fn apportion<T: Scalar>(w: &[T], total: usize) -> Vec<usize> {
    let support: Vec<usize> = (0..w.len()).filter(|&i| w[i] > T::zero()).collect();
    let p = support.len();
    let mut n = vec![0usize; w.len()];
    if p == 0 {
        return n;
    }
    let base = T::of_usize(total) - T::of_usize(p) * T::of(0.5);
    for &i in &support {
        n[i] = (base * w[i]).ceil().max(T::zero()).to_usize().unwrap_or(0);
    }
    let mut sum: usize = n.iter().sum();
    while sum > total {
        let i = support
            .iter()
            .copied()
            .filter(|&i| n[i] > 0)
            .fold(None, |best: Option<(usize, T)>, i| {
                let key = T::of_usize(n[i] - 1) / w[i];
                match best {
                    Some((_, bk)) if bk >= key => best,
                    _ => Some((i, key)),
                }
            })
            .expect("positive count exists")
            .0;
        n[i] -= 1;
        sum -= 1;
    }
    while sum < total {
        let i = support
            .iter()
            .copied()
            .fold(None, |best: Option<(usize, T)>, i| {
                let key = T::of_usize(n[i]) / w[i];
                match best {
                    Some((_, bk)) if bk <= key => best,
                    _ => Some((i, key)),
                }
            })
            .expect("nonempty support")
            .0;
        n[i] += 1;
        sum += 1;
    }
    n
}

/// Rounds `design` to exactly `total` pulls with efficient apportionment.
///
/// Requires `total ≥ d²`. Afterwards the worst variance over the design's
/// directions under the empirical matrix must be within a factor 2 of its
/// value under `A(λ)`; a violation is reported as [`Error::CheckFailed`].
pub fn round_design<T: Scalar>(x: &ArmSet<T>, design: &Design<T>, total: usize) -> Result<Allocation<T>> {
    round_design_with(x, design, total, RoundingRule::Efficient)
}

pub fn round_design_with<T: Scalar>(x: &ArmSet<T>, design: &Design<T>, total: usize, rule: RoundingRule) -> Result<Allocation<T>> {
    let d = x.dim();
    if total < d * d {
        return Err(Error::BudgetTooSmall { budget: total, min: d * d });
    }
    if design.weights.len() != x.len() {
        return Err(Error::LengthMismatch { expected: x.len(), got: design.weights.len() });
    }
    let pruned = prune_weights(&design.weights, T::of(PRUNE_THRESHOLD));
    let ideal = design.directions.max_inv_quad(&Cholesky::factor(&design.design_matrix)?);
    let attempt = |weights: Vec<T>| -> Result<Allocation<T>> {
        let counts = match rule {
            RoundingRule::Efficient => apportion(&weights, total),
            RoundingRule::Degenerate => {
                let top = (0..weights.len())
                    .max_by(|&a, &b| weights[a].partial_cmp(&weights[b]).unwrap().then(b.cmp(&a)))
                    .expect("nonempty");
                let mut c = vec![0; weights.len()];
                c[top] = total;
                c
            }
        };
        let freq: Vec<T> = counts.iter().map(|&n| T::of_usize(n) / T::of_usize(total)).collect();
        let empirical_matrix = design_matrix(x, &freq);
        let empirical = design.directions.max_inv_quad(&Cholesky::factor(&empirical_matrix)?);
        let variance_factor = empirical / ideal;
        if variance_factor > T::of(2.0) * (T::one() + T::tol(1e-9)) {
            return Err(Error::CheckFailed(format!(
                "rounding to T = {total} inflates the worst variance by {variance_factor} > 2"
            )));
        }
        Ok(Allocation { counts, total, empirical_matrix, rounded_weights: weights, variance_factor })
    };
    // Full pruned support first; a Carathéodory-reduced support when the
    // budget is too small to spread over it.
    match attempt(pruned.clone()) {
        Ok(a) => Ok(a),
        Err(first) => {
            let reduced = reduce_support(x, &pruned);
            if reduced == pruned {
                return Err(first);
            }
            attempt(reduced)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::compute_adjacent_pairs;
    use approx::assert_relative_eq;

    fn basis(d: usize) -> ArmSet<f64> {
        ArmSet::new((0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()).unwrap()
    }

    fn circle(k: usize) -> ArmSet<f64> {
        ArmSet::new(
            (0..k)
                .map(|i| {
                    let t = 2.0 * std::f64::consts::PI * i as f64 / k as f64;
                    vec![t.cos(), t.sin()]
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn design_matrix_examples() {
        let a = design_matrix(&basis(2), &[0.5, 0.5]);
        assert_eq!(a, Matrix::identity(2).scaled(0.5));
        let x = ArmSet::new(vec![vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        let a = design_matrix(&x, &[1.0, 0.0]);
        assert_eq!(a.to_rows(), vec![vec![1.0, 2.0], vec![2.0, 4.0]]);
        let a = design_matrix(&circle(4), &[0.25; 4]);
        assert!(a.max_abs_diff(&Matrix::identity(2).scaled(0.5)) < 1e-15);
    }

    #[test]
    fn mahalanobis_examples() {
        assert_relative_eq!(mahalanobis_sq(&[1.0, 0.0], &Matrix::identity(2)).unwrap().value, 1.0);
        let half = Matrix::identity(2).scaled(0.5);
        assert_relative_eq!(mahalanobis_sq(&[1.0, -1.0], &half).unwrap().value, 4.0, epsilon = 1e-12);
        for d in 2..6 {
            let a = design_matrix(&basis(d), &vec![1.0 / d as f64; d]);
            let mut e1 = vec![0.0; d];
            e1[0] = 1.0;
            assert_relative_eq!(mahalanobis_sq(&e1, &a).unwrap().value, d as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn mahalanobis_singular_and_ridge() {
        let sing = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]);
        assert!(matches!(mahalanobis_sq(&[1.0, 0.0], &sing), Err(Error::Singular { .. })));
        let ill = Matrix::from_rows(&[vec![10.0, 0.0], vec![0.0, 5e-12]]);
        let r = mahalanobis_sq(&[1.0, 0.0], &ill).unwrap();
        assert!(r.ridged);
        assert_relative_eq!(r.value, 0.1, epsilon = 1e-9);
    }

    #[test]
    fn g_design_on_basis_is_uniform_with_value_d() {
        for d in 2..5 {
            let g = g_optimal(&basis(d), 1e-6, DEFAULT_MAX_ITER).unwrap();
            assert_relative_eq!(g.objective_value, d as f64, max_relative = 1e-6);
            for &w in &g.weights {
                assert_relative_eq!(w, 1.0 / d as f64, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn single_difference_on_basis() {
        // Oracle: 1-D grid search of 1/λ + 1/(1−λ).
        let grid_min = (1..10_000)
            .map(|i| i as f64 / 10_000.0)
            .map(|l| 1.0 / l + 1.0 / (1.0 - l))
            .fold(f64::INFINITY, f64::min);
        assert_relative_eq!(grid_min, 4.0, epsilon = 1e-6);
        let x = basis(2);
        let dirs = DirectionSet::custom(vec![vec![1.0, -1.0]]).unwrap();
        let des = minmax_design(&x, &dirs, 1e-6, DEFAULT_MAX_ITER).unwrap();
        assert_relative_eq!(des.objective_value, grid_min, max_relative = 1e-5);
        assert_relative_eq!(des.weights[0], 0.5, epsilon = 1e-3);
        let adj = compute_adjacent_pairs(&x).unwrap();
        assert_relative_eq!(adjacent_optimal(&x, &adj, 1e-6, DEFAULT_MAX_ITER).unwrap().objective_value, 4.0, max_relative = 1e-5);
    }

    #[test]
    fn circle_adjacent_design_is_at_most_uniform_value() {
        for k in [8, 16, 32] {
            let x = circle(k);
            let adj = compute_adjacent_pairs(&x).unwrap();
            let des = adjacent_optimal(&x, &adj, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
            let bound = 8.0 * (std::f64::consts::PI / k as f64).sin().powi(2);
            assert!(des.objective_value <= bound * (1.0 + 1e-12), "{k}: {} > {bound}", des.objective_value);
        }
    }

    #[test]
    fn gap_is_certified() {
        let x = ArmSet::new(vec![vec![1.0, 0.2], vec![-0.3, 1.0], vec![-0.7, -0.6], vec![0.5, -0.9], vec![0.1, 0.1]]).unwrap();
        let adj = compute_adjacent_pairs(&x).unwrap();
        let des = xy_optimal(&x, &adj, 1e-5, DEFAULT_MAX_ITER).unwrap();
        assert!(des.converged);
        assert!(des.lower_bound <= des.objective_value);
        assert!(des.relative_gap() <= 1e-5);
        let s: f64 = des.weights.iter().sum();
        assert_relative_eq!(s, 1.0, epsilon = 1e-10);
        assert!(des.trajectory.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn apportionment_examples() {
        assert_eq!(apportion(&[1.0 / 3.0; 3], 9), vec![3, 3, 3]);
        let n = apportion(&[0.5, 0.5], 101);
        assert_eq!(n.iter().sum::<usize>(), 101);
        assert!(n == vec![51, 50] || n == vec![50, 51]);
        assert_eq!(apportion(&[0.0, 1.0, 0.0], 5), vec![0, 5, 0]);
    }

    #[test]
    fn support_reduction_preserves_moments() {
        let x = circle(12);
        let w = vec![1.0 / 12.0; 12];
        let r = reduce_support(&x, &w);
        let support = r.iter().filter(|&&v| v > 0.0).count();
        assert!(support <= 4, "support {support}");
        assert_relative_eq!(r.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(design_matrix(&x, &r).max_abs_diff(&design_matrix(&x, &w)) < 1e-12);
    }

    #[test]
    fn rounding_basis_and_budget_errors() {
        let x = basis(3);
        let g = g_optimal(&x, 1e-6, DEFAULT_MAX_ITER).unwrap();
        let alloc = round_design(&x, &g, 3 * 5).unwrap();
        assert_eq!(alloc.counts, vec![5, 5, 5]);
        assert_eq!(alloc.sequence().len(), 15);
        assert!(matches!(round_design(&x, &g, 8), Err(Error::BudgetTooSmall { budget: 8, min: 9 })));
        assert!(matches!(
            round_design_with(&x, &g, 9, RoundingRule::Degenerate),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn rounding_square_adjacent_within_factor_two() {
        let x = ArmSet::new(vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        let adj = compute_adjacent_pairs(&x).unwrap();
        let des = adjacent_optimal(&x, &adj, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let alloc = round_design(&x, &des, 100).unwrap();
        assert_eq!(alloc.counts.iter().sum::<usize>(), 100);
        assert!(alloc.variance_factor <= 2.0);
        for (i, &n) in alloc.counts.iter().enumerate() {
            if n > 0 {
                assert!(alloc.rounded_weights[i] > 0.0);
            }
        }
    }

    #[test]
    fn single_precision_g_design() {
        let x = ArmSet::<f32>::new(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.7, 0.7]]).unwrap();
        let g = g_optimal(&x, 1e-3, DEFAULT_MAX_ITER).unwrap();
        assert!((g.objective_value - 2.0).abs() < 2e-2);
    }
}
