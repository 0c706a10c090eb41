//! Dense two-phase primal simplex for the small LPs used by adjacency
//! detection (at most d + 1 free variables and K constraints).
//!
//! Problems are stated over free variables; internally each variable is
//! split as `u = u⁺ − u⁻`. Bland's rule is used for both entering and
//! leaving choices, so the method cannot cycle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `maximize objective·u` subject to `row·u = rhs` (equalities) and
/// `row·u ≤ rhs` (inequalities), with `u` unrestricted in sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram<T> {
    pub objective: Vec<T>,
    pub equalities: Vec<(Vec<T>, T)>,
    pub inequalities: Vec<(Vec<T>, T)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpResult<T> {
    Optimal { value: T, point: Vec<T> },
    Infeasible,
    Unbounded,
}

impl<T: Scalar> LpResult<T> {
    pub fn optimal(&self) -> Option<(T, &[T])> {
        match self {
            LpResult::Optimal { value, point } => Some((*value, point)),
            _ => None,
        }
    }
}

impl<T: Scalar> LinearProgram<T> {
    pub fn new(objective: Vec<T>) -> Self {
        Self { objective, equalities: Vec::new(), inequalities: Vec::new() }
    }

    pub fn variable_count(&self) -> usize {
        self.objective.len()
    }

    pub fn equal(mut self, row: Vec<T>, rhs: T) -> Self {
        self.equalities.push((row, rhs));
        self
    }

    pub fn at_most(mut self, row: Vec<T>, rhs: T) -> Self {
        self.inequalities.push((row, rhs));
        self
    }

    fn validate(&self) -> Result<()> {
        let n = self.variable_count();
        if n == 0 {
            return Err(Error::MalformedLp("no variables".into()));
        }
        for (row, rhs) in self.equalities.iter().chain(&self.inequalities) {
            if row.len() != n {
                return Err(Error::MalformedLp(format!("row of length {} for {n} variables", row.len())));
            }
            if !rhs.is_finite() || row.iter().any(|v| !v.is_finite()) {
                return Err(Error::MalformedLp("non-finite coefficient".into()));
            }
        }
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(Error::MalformedLp("non-finite objective".into()));
        }
        Ok(())
    }

    /// Largest violation of any constraint at `u`.
    pub fn max_violation(&self, u: &[T]) -> T {
        let eq = self
            .equalities
            .iter()
            .map(|(row, rhs)| (crate::linalg::dot(row, u) - *rhs).abs());
        let ineq = self
            .inequalities
            .iter()
            .map(|(row, rhs)| (crate::linalg::dot(row, u) - *rhs).max(T::zero()));
        eq.chain(ineq).fold(T::zero(), T::max)
    }
}

struct Tableau<T> {
    // m rows of `ncols + 1` entries; last entry is the right-hand side.
    rows: Vec<Vec<T>>,
    basis: Vec<usize>,
    ncols: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl<T: Scalar> Tableau<T> {
    fn pivot(&mut self, obj: &mut [T], r: usize, c: usize) {
        let inv = T::one() / self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v *= inv;
        }
        let prow = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != T::zero() {
                for (v, &p) in row.iter_mut().zip(&prow) {
                    *v -= f * p;
                }
                row[c] = T::zero();
            }
        }
        let f = obj[c];
        if f != T::zero() {
            for (v, &p) in obj.iter_mut().zip(&prow) {
                *v -= f * p;
            }
            obj[c] = T::zero();
        }
        self.basis[r] = c;
    }

    /// Maximizes with reduced-cost row `obj` (entries are `z_j − c_j`, the
    /// last entry the current objective value). Only columns `< allowed`
    /// may enter.
    fn run(&mut self, obj: &mut [T], allowed: usize, tol: T, iters: &mut usize, cap: usize) -> Result<Outcome> {
        loop {
            let Some(enter) = (0..allowed).find(|&j| obj[j] < -tol) else {
                return Ok(Outcome::Optimal);
            };
            let mut leave: Option<(usize, T)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = row[enter];
                if a > tol {
                    let ratio = row[self.ncols] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            let slack = tol * (T::one() + lr.abs());
                            let tie_wins = ratio <= lr + slack && self.basis[i] < self.basis[li];
                            if ratio < lr - slack || tie_wins {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Ok(Outcome::Unbounded);
            };
            *iters += 1;
            if *iters > cap {
                return Err(Error::LpIterationLimit { cap, basis: self.basis.clone() });
            }
            self.pivot(obj, r, enter);
        }
    }
}

/// Solves `lp`. The returned maximizer satisfies every constraint to within
/// `1e-9` (scaled by the data magnitude).
pub fn solve_lp<T: Scalar>(lp: &LinearProgram<T>) -> Result<LpResult<T>> {
    lp.validate()?;
    let n = lp.variable_count();
    let n_eq = lp.equalities.len();
    let n_in = lp.inequalities.len();
    let m = n_eq + n_in;
    let tol = T::tol(1e-11);

    // Columns: [u⁺ (n) | u⁻ (n) | slacks (n_in) | artificials (n_art)]
    let slack0 = 2 * n;
    let art0 = slack0 + n_in;
    let needs_art: Vec<bool> = (0..m)
        .map(|i| if i < n_eq { true } else { lp.inequalities[i - n_eq].1 < T::zero() })
        .collect();
    let n_art = needs_art.iter().filter(|&&b| b).count();
    let ncols = art0 + n_art;

    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut next_art = art0;
    for i in 0..m {
        let (coeffs, rhs, slack) = if i < n_eq {
            (&lp.equalities[i].0, lp.equalities[i].1, None)
        } else {
            (&lp.inequalities[i - n_eq].0, lp.inequalities[i - n_eq].1, Some(slack0 + i - n_eq))
        };
        let sign = if rhs < T::zero() { -T::one() } else { T::one() };
        let mut row = vec![T::zero(); ncols + 1];
        for (k, &a) in coeffs.iter().enumerate() {
            row[k] = sign * a;
            row[n + k] = -sign * a;
        }
        if let Some(s) = slack {
            row[s] = sign;
        }
        row[ncols] = sign * rhs;
        if needs_art[i] {
            row[next_art] = T::one();
            basis.push(next_art);
            next_art += 1;
        } else {
            basis.push(slack.expect("inequality row"));
        }
        rows.push(row);
    }
    let mut tab = Tableau { rows, basis, ncols };
    let cap = 1000 + 50 * (m + ncols);
    let mut iters = 0;

    // Phase 1: maximize −Σ artificials.
    if n_art > 0 {
        let mut obj = vec![T::zero(); ncols + 1];
        for j in art0..ncols {
            obj[j] = T::one();
        }
        for i in 0..tab.rows.len() {
            if tab.basis[i] >= art0 {
                let row = tab.rows[i].clone();
                for (v, &a) in obj.iter_mut().zip(&row) {
                    *v -= a;
                }
            }
        }
        tab.run(&mut obj, ncols, tol, &mut iters, cap)?;
        let scale = T::one() + tab.rows.iter().map(|r| r[ncols].abs()).fold(T::zero(), T::max);
        if obj[ncols] < -T::tol(1e-9) * scale {
            return Ok(LpResult::Infeasible);
        }
        // Drive zero-level artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < tab.rows.len() {
            if tab.basis[i] >= art0 {
                let col = (0..art0).find(|&j| tab.rows[i][j].abs() > T::tol(1e-9));
                match col {
                    Some(j) => {
                        tab.pivot(&mut obj, i, j);
                        i += 1;
                    }
                    None => {
                        tab.rows.remove(i);
                        tab.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
    }

    // Phase 2 over the original objective; artificial columns are barred.
    let mut obj = vec![T::zero(); ncols + 1];
    for (k, &c) in lp.objective.iter().enumerate() {
        obj[k] = -c;
        obj[n + k] = c;
    }
    for i in 0..tab.rows.len() {
        let b = tab.basis[i];
        let f = obj[b];
        if f != T::zero() {
            let row = tab.rows[i].clone();
            for (v, &a) in obj.iter_mut().zip(&row) {
                *v -= f * a;
            }
        }
    }
    match tab.run(&mut obj, art0, tol, &mut iters, cap)? {
        Outcome::Unbounded => return Ok(LpResult::Unbounded),
        Outcome::Optimal => {}
    }

    let mut x = vec![T::zero(); ncols];
    for (i, &b) in tab.basis.iter().enumerate() {
        x[b] = tab.rows[i][ncols];
    }
    let point: Vec<T> = (0..n).map(|k| x[k] - x[n + k]).collect();
    let value = crate::linalg::dot(&lp.objective, &point);

    let data_scale = lp
        .equalities
        .iter()
        .chain(&lp.inequalities)
        .flat_map(|(r, b)| r.iter().chain(std::iter::once(b)))
        .map(|v| v.abs())
        .fold(T::one(), T::max);
    let point_scale = point.iter().map(|v| v.abs()).fold(T::one(), T::max);
    let viol = lp.max_violation(&point);
    if viol > T::tol(1e-9) * data_scale * point_scale {
        return Err(Error::CheckFailed(format!("simplex solution violates constraints by {viol}")));
    }
    Ok(LpResult::Optimal { value, point })
}
