//! Extreme points and edge adjacency of a finite arm set.
//!
//! The arm set is centered at its centroid, after which a point is a vertex
//! iff some hyperplane `{y : yᵀw = 1}` through it keeps every other arm at
//! level `≤ 1 − ε` with `ε > 0`, and two vertices are adjacent iff a common
//! such hyperplane exists with respect to the remaining vertices. Both tests
//! are small LPs over `(w, ε)`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dot, rank, sub};
use crate::lp::{solve_lp, LinearProgram, LpResult};
use crate::scalar::Scalar;

/// Threshold for declaring an LP margin strictly positive.
pub const TOL_MARGIN: f64 = 1e-7;

/// Threshold on the largest 2×2 minor below which a centered pair counts as
/// linearly dependent.
pub const PAIR_INDEPENDENCE_TOL: f64 = 1e-10;

/// A finite collection of distinct arms spanning `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmSet<T> {
    arms: Vec<Vec<T>>,
    dim: usize,
    #[serde(skip)]
    duplicates_dropped: usize,
}

impl<T: Scalar> ArmSet<T> {
    /// Drops exact duplicates (keeping first occurrences), then checks that
    /// at least two arms remain and that they span `R^d`.
    pub fn new(arms: Vec<Vec<T>>) -> Result<Self> {
        let dim = arms.first().map(Vec::len).unwrap_or(0);
        if dim == 0 {
            return Err(Error::InvalidArmSet("no arms or zero-dimensional arms".into()));
        }
        if let Some(bad) = arms.iter().position(|a| a.len() != dim) {
            return Err(Error::InvalidArmSet(format!(
                "arm {bad} has {} coordinates, expected {dim}",
                arms[bad].len()
            )));
        }
        if arms.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArmSet("non-finite coordinate".into()));
        }
        let total = arms.len();
        let mut unique: Vec<Vec<T>> = Vec::with_capacity(total);
        for a in arms {
            if !unique.contains(&a) {
                unique.push(a);
            }
        }
        let duplicates_dropped = total - unique.len();
        if unique.len() < 2 {
            return Err(Error::InvalidArmSet(format!("need at least 2 distinct arms, got {}", unique.len())));
        }
        let r = rank(&unique, T::tol(1e-10));
        if r < dim {
            return Err(Error::NonSpanning { rank: r, dim });
        }
        Ok(Self { arms: unique, dim, duplicates_dropped })
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn arm(&self, i: usize) -> &[T] {
        &self.arms[i]
    }

    pub fn arms(&self) -> &[Vec<T>] {
        &self.arms
    }

    pub fn duplicates_dropped(&self) -> usize {
        self.duplicates_dropped
    }

    pub fn max_norm(&self) -> T {
        self.arms.iter().map(|a| dot(a, a).sqrt()).fold(T::zero(), T::max)
    }

    /// Every arm multiplied by `c`; `c` must be nonzero.
    pub fn scaled(&self, c: T) -> Result<Self> {
        if c == T::zero() || !c.is_finite() {
            return Err(Error::InvalidArgument(format!("scale factor {c} must be finite and nonzero")));
        }
        Self::new(self.arms.iter().map(|a| a.iter().map(|&v| v * c).collect()).collect())
    }

    /// Converts the coordinates to another precision.
    pub fn cast<U: Scalar>(&self) -> Result<ArmSet<U>> {
        ArmSet::new(self.arms.iter().map(|a| a.iter().map(|v| U::of(v.as_f64())).collect()).collect())
    }
}

/// Arms translated so their centroid is the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredArms<T> {
    pub arms: Vec<Vec<T>>,
    pub centroid: Vec<T>,
}

/// Subtracts the centroid from every point.
pub fn center_points<T: Scalar>(points: &[Vec<T>]) -> CenteredArms<T> {
    let d = points.first().map_or(0, Vec::len);
    let k = T::of_usize(points.len());
    let mut centroid = vec![T::zero(); d];
    for p in points {
        for (c, &v) in centroid.iter_mut().zip(p) {
            *c += v;
        }
    }
    for c in centroid.iter_mut() {
        *c /= k;
    }
    let arms = points.iter().map(|p| sub(p, &centroid)).collect();
    CenteredArms { arms, centroid }
}

pub fn center_arm_set<T: Scalar>(x: &ArmSet<T>) -> CenteredArms<T> {
    center_points(x.arms())
}

/// Supporting hyperplane of an edge on the centered arm set:
/// `xᵀw = x'ᵀw = 1` and `yᵀw ≤ 1 − margin` for every other vertex `y`.
/// `margin` is infinite when the pair are the only two vertices; if those two
/// are also collinear with the centroid, `w` is zero (all vertices tie).
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeWitness<T> {
    pub w: Vec<T>,
    pub margin: T,
}

/// An LP optimum that cleared the margin threshold by less than a factor 10.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalDecision<T> {
    pub indices: Vec<usize>,
    pub margin: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyStructure<T> {
    /// Vertex indices into the arm set, ascending.
    pub extreme_points: Vec<usize>,
    /// Unordered adjacent pairs stored as `(i, j)` with `i < j`, ascending.
    pub adjacent_pairs: Vec<(usize, usize)>,
    pub neighbors: BTreeMap<usize, Vec<usize>>,
    pub witnesses: BTreeMap<(usize, usize), EdgeWitness<T>>,
    /// LP decisions whose optimum fell in `(0, 10·TOL_MARGIN)`.
    pub marginal: Vec<MarginalDecision<T>>,
}

fn ordered(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

impl<T: Scalar> AdjacencyStructure<T> {
    fn from_parts(
        extreme_points: Vec<usize>,
        pairs: Vec<(usize, usize)>,
        witnesses: BTreeMap<(usize, usize), EdgeWitness<T>>,
        marginal: Vec<MarginalDecision<T>>,
    ) -> Self {
        let mut adjacent_pairs: Vec<(usize, usize)> = pairs.into_iter().map(|(i, j)| ordered(i, j)).collect();
        adjacent_pairs.sort_unstable();
        adjacent_pairs.dedup();
        let mut neighbors: BTreeMap<usize, Vec<usize>> = extreme_points.iter().map(|&v| (v, Vec::new())).collect();
        for &(i, j) in &adjacent_pairs {
            neighbors.entry(i).or_default().push(j);
            neighbors.entry(j).or_default().push(i);
        }
        for list in neighbors.values_mut() {
            list.sort_unstable();
        }
        Self { extreme_points, adjacent_pairs, neighbors, witnesses, marginal }
    }

    pub fn is_extreme(&self, i: usize) -> bool {
        self.extreme_points.binary_search(&i).is_ok()
    }

    pub fn is_adjacent(&self, i: usize, j: usize) -> bool {
        self.adjacent_pairs.binary_search(&ordered(i, j)).is_ok()
    }

    /// `I^x`; empty for non-extreme indices.
    pub fn neighbors_of(&self, i: usize) -> &[usize] {
        self.neighbors.get(&i).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn witness(&self, i: usize, j: usize) -> Option<&EdgeWitness<T>> {
        self.witnesses.get(&ordered(i, j))
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.values().map(Vec::len).max().unwrap_or(0)
    }

    /// Whether the graph on the vertices with edges `I` is connected.
    pub fn is_connected(&self) -> bool {
        let Some(&start) = self.extreme_points.first() else {
            return true;
        };
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &u in self.neighbors_of(v) {
                if seen.insert(u) {
                    queue.push_back(u);
                }
            }
        }
        seen.len() == self.extreme_points.len()
    }

    /// Same vertices and edges (witnesses and diagnostics ignored).
    pub fn same_combinatorics(&self, other: &Self) -> bool {
        self.extreme_points == other.extreme_points && self.adjacent_pairs == other.adjacent_pairs
    }
}

/// LP1 on the centered set: maximize `ε` s.t. `xᵀw = 1`, `yᵀw ≤ 1 − ε` for
/// every other arm. Returns the optimal margin (`None` if infeasible, which
/// happens when `x` is the centroid itself; infinite when unbounded).
fn vertex_margin<T: Scalar>(centered: &[Vec<T>], i: usize) -> Result<Option<T>> {
    let d = centered[i].len();
    let mut objective = vec![T::zero(); d + 1];
    objective[d] = T::one();
    let mut row = centered[i].clone();
    row.push(T::zero());
    let mut lp = LinearProgram::new(objective).equal(row, T::one());
    for (j, y) in centered.iter().enumerate() {
        if j != i {
            let mut r = y.clone();
            r.push(T::one());
            lp = lp.at_most(r, T::one());
        }
    }
    Ok(match solve_lp(&lp)? {
        LpResult::Optimal { value, .. } => Some(value),
        LpResult::Infeasible => None,
        LpResult::Unbounded => Some(T::infinity()),
    })
}

fn largest_minor<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut best = T::zero();
    for p in 0..a.len() {
        for q in p + 1..a.len() {
            best = best.max((a[p] * b[q] - a[q] * b[p]).abs());
        }
    }
    best
}

/// Minimum-norm `w` with `aᵀw = bᵀw = 1`.
fn two_point_hyperplane<T: Scalar>(a: &[T], b: &[T]) -> Option<Vec<T>> {
    let (aa, ab, bb) = (dot(a, a), dot(a, b), dot(b, b));
    let det = aa * bb - ab * ab;
    if det.abs() <= T::epsilon() * aa * bb {
        return None;
    }
    // [aa ab; ab bb] [s; t] = [1; 1]
    let s = (bb - ab) / det;
    let t = (aa - ab) / det;
    Some(a.iter().zip(b).map(|(&u, &v)| s * u + t * v).collect())
}

/// LP2 on the centered set for vertices `i`, `j`, against the other vertices.
fn edge_lp<T: Scalar>(centered: &[Vec<T>], vertices: &[usize], i: usize, j: usize) -> Result<Option<EdgeWitness<T>>> {
    let d = centered[i].len();
    let others: Vec<usize> = vertices.iter().copied().filter(|&v| v != i && v != j).collect();
    if others.is_empty() {
        return Ok(two_point_hyperplane(&centered[i], &centered[j]).map(|w| EdgeWitness { w, margin: T::infinity() }));
    }
    let mut objective = vec![T::zero(); d + 1];
    objective[d] = T::one();
    let with_zero = |v: &Vec<T>| {
        let mut r = v.clone();
        r.push(T::zero());
        r
    };
    let mut lp = LinearProgram::new(objective)
        .equal(with_zero(&centered[i]), T::one())
        .equal(with_zero(&centered[j]), T::one());
    for &k in &others {
        let mut r = centered[k].clone();
        r.push(T::one());
        lp = lp.at_most(r, T::one());
    }
    Ok(match solve_lp(&lp)? {
        LpResult::Optimal { value, point } => Some(EdgeWitness { w: point[..d].to_vec(), margin: value }),
        LpResult::Infeasible => None,
        LpResult::Unbounded => two_point_hyperplane(&centered[i], &centered[j]).map(|w| EdgeWitness { w, margin: T::infinity() }),
    })
}

/// Vertex margins for every arm (`None` = LP infeasible).
fn all_vertex_margins<T: Scalar>(centered: &[Vec<T>]) -> Result<Vec<Option<T>>> {
    (0..centered.len()).into_par_iter().map(|i| vertex_margin(centered, i)).collect()
}

/// Indices of the vertices of `conv(X)`, ascending.
pub fn compute_extreme_points<T: Scalar>(x: &ArmSet<T>) -> Result<Vec<usize>> {
    let centered = center_arm_set(x);
    let tol = T::tol(TOL_MARGIN);
    Ok(all_vertex_margins(&centered.arms)?
        .into_iter()
        .enumerate()
        .filter_map(|(i, m)| m.filter(|&m| m > tol).map(|_| i))
        .collect())
}

/// Vertices, edges and per-edge supporting hyperplanes of `conv(X)`.
pub fn compute_adjacent_pairs<T: Scalar>(x: &ArmSet<T>) -> Result<AdjacencyStructure<T>> {
    let centered = center_arm_set(x).arms;
    let tol = T::tol(TOL_MARGIN);
    let near = tol * T::of(10.0);
    let mut marginal = Vec::new();

    let margins = all_vertex_margins(&centered)?;
    let mut vertices = Vec::new();
    for (i, m) in margins.into_iter().enumerate() {
        if let Some(m) = m {
            if m > T::zero() && m < near {
                marginal.push(MarginalDecision { indices: vec![i], margin: m });
            }
            if m > tol {
                vertices.push(i);
            }
        }
    }

    // A hull with two vertices is a segment whose only edge is the pair
    // itself; the centered endpoints are then dependent and any `w` with
    // equal values on both (possibly `w = 0`) supports it.
    if vertices.len() == 2 {
        let (i, j) = (vertices[0], vertices[1]);
        let w = two_point_hyperplane(&centered[i], &centered[j]).unwrap_or_else(|| vec![T::zero(); x.dim()]);
        let witnesses = BTreeMap::from([((i, j), EdgeWitness { w, margin: T::infinity() })]);
        return Ok(AdjacencyStructure::from_parts(vertices, vec![(i, j)], witnesses, marginal));
    }

    let dep_tol = T::tol(PAIR_INDEPENDENCE_TOL);
    let candidates: Vec<(usize, usize)> = vertices
        .iter()
        .enumerate()
        .flat_map(|(a, &i)| vertices[a + 1..].iter().map(move |&j| (i, j)))
        .filter(|&(i, j)| largest_minor(&centered[i], &centered[j]) > dep_tol)
        .collect();
    let solved: Vec<((usize, usize), Option<EdgeWitness<T>>)> = candidates
        .into_par_iter()
        .map(|(i, j)| edge_lp(&centered, &vertices, i, j).map(|w| ((i, j), w)))
        .collect::<Result<_>>()?;

    let mut pairs = Vec::new();
    let mut witnesses = BTreeMap::new();
    for ((i, j), w) in solved {
        if let Some(w) = w {
            if w.margin > T::zero() && w.margin < near {
                marginal.push(MarginalDecision { indices: vec![i, j], margin: w.margin });
            }
            if w.margin > tol {
                pairs.push((i, j));
                witnesses.insert((i, j), w);
            }
        }
    }
    Ok(AdjacencyStructure::from_parts(vertices, pairs, witnesses, marginal))
}

fn cross<T: Scalar>(o: &[T], a: &[T], b: &[T]) -> T {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Planar convex hull by the monotone-chain method, as an independent check
/// of [`compute_adjacent_pairs`]. Points in the relative interior of an edge
/// are not vertices. Fails if `d ≠ 2` or all points are collinear.
pub fn hull_oracle_2d<T: Scalar>(x: &ArmSet<T>) -> Result<AdjacencyStructure<T>> {
    if x.dim() != 2 {
        return Err(Error::InvalidArgument(format!("hull oracle needs d = 2, got {}", x.dim())));
    }
    let pts = x.arms();
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&a, &b| {
        pts[a][0]
            .partial_cmp(&pts[b][0])
            .unwrap()
            .then(pts[a][1].partial_cmp(&pts[b][1]).unwrap())
    });
    let mut hull: Vec<usize> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let seq: Box<dyn Iterator<Item = &usize>> = if pass == 0 { Box::new(order.iter()) } else { Box::new(order.iter().rev()) };
        for &p in seq {
            while hull.len() >= start + 2 && cross(&pts[hull[hull.len() - 2]], &pts[hull[hull.len() - 1]], &pts[p]) <= T::zero() {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    if hull.len() < 3 {
        return Err(Error::Collinear(format!("all {} points lie on a line", pts.len())));
    }
    let centered = center_arm_set(x).arms;
    let mut vertices = hull.clone();
    vertices.sort_unstable();
    let mut witnesses = BTreeMap::new();
    let mut pairs = Vec::new();
    for k in 0..hull.len() {
        let (i, j) = ordered(hull[k], hull[(k + 1) % hull.len()]);
        pairs.push((i, j));
        if let Some(w) = two_point_hyperplane(&centered[i], &centered[j]) {
            let top = vertices
                .iter()
                .filter(|&&v| v != i && v != j)
                .map(|&v| dot(&centered[v], &w))
                .fold(T::neg_infinity(), T::max);
            witnesses.insert((i, j), EdgeWitness { w, margin: T::one() - top });
        }
    }
    Ok(AdjacencyStructure::from_parts(vertices, pairs, witnesses, Vec::new()))
}
