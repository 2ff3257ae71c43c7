//! The backward Markov chain on the Eulerian graph and the correspondence
//! between permutations and labeled standard paths.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::RandBigInt;
use rand::RngCore;

use crate::arith::Rational;
use crate::sampler::Permutation;
use crate::triangle::{transition_prob, EulerianTable, TriangleIndex};
use crate::{Error, Result};

/// A path moving up one level per step, with the chosen parallel edge on
/// every step.
///
/// `labels[i]` is the edge from `vertices[i]` to `vertices[i + 1]`: below
/// `k + 1` for a step `(n,k) -> (n+1,k)`, below `n - k` for
/// `(n,k) -> (n+1,k+1)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabeledPath {
    vertices: Vec<TriangleIndex>,
    labels: Vec<usize>,
}

impl LabeledPath {
    pub fn new(vertices: Vec<TriangleIndex>, labels: Vec<usize>) -> Result<Self> {
        if vertices.is_empty() || labels.len() + 1 != vertices.len() {
            return Err(Error::MalformedPath(format!(
                "{} vertices need {} labels, got {}",
                vertices.len(),
                vertices.len().saturating_sub(1),
                labels.len()
            )));
        }
        for (i, (w, &label)) in vertices.windows(2).zip(&labels).enumerate() {
            let (from, to) = (w[0], w[1]);
            let multiplicity = if to.n() != from.n() + 1 {
                0
            } else if to.k() == from.k() {
                from.k() + 1
            } else if to.k() == from.k() + 1 {
                from.n() - from.k()
            } else {
                0
            };
            if multiplicity == 0 {
                return Err(Error::MalformedPath(format!("step {i}: {from} -> {to} is not an edge")));
            }
            if label >= multiplicity {
                return Err(Error::MalformedPath(format!(
                    "step {i}: label {label} exceeds multiplicity {multiplicity} of {from} -> {to}"
                )));
            }
        }
        Ok(LabeledPath { vertices, labels })
    }

    pub fn vertices(&self) -> &[TriangleIndex] {
        &self.vertices
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn start(&self) -> TriangleIndex {
        self.vertices[0]
    }

    pub fn end(&self) -> TriangleIndex {
        *self.vertices.last().unwrap()
    }

    pub fn is_standard(&self) -> bool {
        self.start() == TriangleIndex::ROOT
    }

    /// Drops the last step.
    pub fn truncate_last(&self) -> Option<LabeledPath> {
        (!self.labels.is_empty()).then(|| LabeledPath {
            vertices: self.vertices[..self.vertices.len() - 1].to_vec(),
            labels: self.labels[..self.labels.len() - 1].to_vec(),
        })
    }
}

/// Insertion slots for `m + 1` into `perm` (slot `s` = after the first `s`
/// entries), split into those keeping the descent count and those raising
/// it, each listed left to right.
///
/// Keeping slots are right after each descent plus the right end; raising
/// slots are the left end plus right after each ascent.
fn slots(perm: &[u32]) -> (Vec<usize>, Vec<usize>) {
    let m = perm.len();
    let mut keep = Vec::new();
    let mut raise = vec![0];
    for s in 1..m {
        if perm[s - 1] > perm[s] {
            keep.push(s);
        } else {
            raise.push(s);
        }
    }
    keep.push(m);
    (keep, raise)
}

/// The canonical bijection from `Perm(n)` to standard labeled paths of
/// length `n`; the path visits `(m, D(pi_m))` for the iterated projections.
pub fn perm_to_path(perm: &Permutation) -> LabeledPath {
    let chain = perm.projections();
    let mut vertices = vec![TriangleIndex::ROOT];
    let mut labels = Vec::with_capacity(chain.len() - 1);
    for w in chain.windows(2) {
        let (small, big) = (w[0].as_slice(), w[1].as_slice());
        let m = small.len();
        let slot = big.iter().position(|&v| v as usize == m + 1).expect("largest entry present");
        let (keep, raise) = slots(small);
        let k = vertices.last().unwrap().k();
        if let Some(label) = keep.iter().position(|&s| s == slot) {
            labels.push(label);
            vertices.push(TriangleIndex::new(m + 1, k).unwrap());
        } else {
            labels.push(raise.iter().position(|&s| s == slot).expect("every slot is keep or raise"));
            vertices.push(TriangleIndex::new(m + 1, k + 1).unwrap());
        }
    }
    LabeledPath { vertices, labels }
}

/// Inverse of [`perm_to_path`].
pub fn path_to_perm(path: &LabeledPath) -> Result<Permutation> {
    if !path.is_standard() {
        return Err(Error::MalformedPath(format!("path starts at {}, not the root", path.start())));
    }
    let mut perm: Vec<u32> = vec![1];
    for (w, &label) in path.vertices.windows(2).zip(&path.labels) {
        let m = perm.len();
        let (keep, raise) = slots(&perm);
        let slot = if w[1].k() == w[0].k() { keep[label] } else { raise[label] };
        perm.insert(slot, m as u32 + 1);
    }
    Permutation::new(perm)
}

/// Every standard labeled path of length `n` (there are `n!`).
pub fn all_standard_paths(n: usize) -> Result<Vec<LabeledPath>> {
    if n == 0 || n > crate::triangle::ENUMERATION_BOUND {
        return Err(Error::TooLarge { n, max: crate::triangle::ENUMERATION_BOUND });
    }
    let mut out = Vec::new();
    let mut vertices = vec![TriangleIndex::ROOT];
    let mut labels = Vec::new();

    fn walk(n: usize, vertices: &mut Vec<TriangleIndex>, labels: &mut Vec<usize>, out: &mut Vec<LabeledPath>) {
        let here = *vertices.last().unwrap();
        if here.n() == n {
            out.push(LabeledPath { vertices: vertices.clone(), labels: labels.clone() });
            return;
        }
        for (next_k, multiplicity) in [(here.k(), here.k() + 1), (here.k() + 1, here.n() - here.k())] {
            for label in 0..multiplicity {
                vertices.push(TriangleIndex::new(here.n() + 1, next_k).unwrap());
                labels.push(label);
                walk(n, vertices, labels, out);
                vertices.pop();
                labels.pop();
            }
        }
    }

    walk(n, &mut vertices, &mut labels, &mut out);
    Ok(out)
}

/// One backward step from `at`, sampled exactly: a uniform integer below
/// `<n k>` is compared with `(k + 1) <n-1 k>`.
fn step(table: &EulerianTable, at: TriangleIndex, rng: &mut impl RngCore) -> TriangleIndex {
    let (n, k) = (at.n(), at.k());
    let total = table.at(at).expect("table covers the run");
    let stay = table.entry(n - 1, k as i64).expect("table covers the run") * (k + 1);
    let draw = rng.gen_bigint_range(&num_bigint::BigInt::from(0), total);
    if draw < stay {
        TriangleIndex::new(n - 1, k).unwrap()
    } else {
        TriangleIndex::new(n - 1, k - 1).unwrap()
    }
}

/// A trajectory of the backward chain from `start` down to the root.
pub fn run_backward_chain(
    table: &EulerianTable,
    start: TriangleIndex,
    rng: &mut impl RngCore,
) -> Result<Vec<TriangleIndex>> {
    table.require(start.n())?;
    let mut path = vec![start];
    let mut at = start;
    while at.n() > 1 {
        at = step(table, at, rng);
        path.push(at);
    }
    Ok(path)
}

/// Exact marginal laws of the chain started at `start`, one row at a time
/// from `start.n()` down to `down_to_row`. Row `n` is visited as a
/// probability vector over `(n, 0), ..., (n, n-1)`.
pub fn propagate_exact_with(
    table: &EulerianTable,
    start: TriangleIndex,
    down_to_row: usize,
    mut visit: impl FnMut(usize, &[Rational]),
) -> Result<()> {
    if down_to_row == 0 || down_to_row > start.n() {
        return Err(Error::Precondition(format!("down_to_row must lie in 1..={}", start.n())));
    }
    table.require(start.n())?;
    let mut row: Vec<Rational> = (0..start.n())
        .map(|k| if k == start.k() { Rational::from_integer(1.into()) } else { Rational::default() })
        .collect();
    visit(start.n(), &row);
    for n in (down_to_row..start.n()).rev() {
        let mut next = vec![Rational::default(); n];
        for (k, mass) in row.iter().enumerate() {
            if mass == &Rational::default() {
                continue;
            }
            let from = TriangleIndex::new(n + 1, k)?;
            for to in from.lower_neighbors() {
                next[to.k()] += mass * transition_prob(table, from, to)?;
            }
        }
        row = next;
        visit(n, &row);
    }
    Ok(())
}

/// [`propagate_exact_with`] collected into `(n, distribution)` pairs, top row
/// first.
pub fn propagate_exact(
    table: &EulerianTable,
    start: TriangleIndex,
    down_to_row: usize,
) -> Result<Vec<(usize, Vec<Rational>)>> {
    let mut out = Vec::new();
    propagate_exact_with(table, start, down_to_row, |n, row| out.push((n, row.to_vec())))?;
    Ok(out)
}

/// Probability that the chain from `(big_n, kappa)` passes `(n, 0)`, for
/// `n = 1..=big_n` (index `n - 1`).
pub fn left_edge_hits(table: &EulerianTable, big_n: usize, kappa: usize) -> Result<Vec<Rational>> {
    let mut out = vec![Rational::default(); big_n];
    propagate_exact_with(table, TriangleIndex::new(big_n, kappa)?, 1, |n, row| out[n - 1] = row[0].clone())?;
    Ok(out)
}

/// Two chains from `(N, kappa_a)` and `(N, kappa_b)`, independent until they
/// first occupy the same vertex and identical afterwards.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CouplingTrace {
    pub trajectory_a: Vec<TriangleIndex>,
    pub trajectory_b: Vec<TriangleIndex>,
    /// Level at which the chains first coincide.
    pub merge_level: Option<usize>,
}

impl CouplingTrace {
    /// `a` stays weakly left of `b` at every level, and they agree from the
    /// merge level down.
    pub fn ordering_holds(&self) -> bool {
        let ordered = self.trajectory_a.iter().zip(&self.trajectory_b).all(|(a, b)| a.k() <= b.k());
        let merged = match self.merge_level {
            None => true,
            Some(level) => {
                self.trajectory_a.iter().zip(&self.trajectory_b).filter(|(a, _)| a.n() <= level).all(|(a, b)| a == b)
            }
        };
        ordered && merged
    }

    /// Whether chain `a` (resp. `b`) passes `(n, 0)`.
    pub fn hits_left_edge(&self, n: usize) -> (bool, bool) {
        let hit = |t: &[TriangleIndex]| t.iter().any(|v| v.n() == n && v.k() == 0);
        (hit(&self.trajectory_a), hit(&self.trajectory_b))
    }
}

pub fn coupled_run(
    table: &EulerianTable,
    big_n: usize,
    kappa_a: usize,
    kappa_b: usize,
    rng: &mut impl RngCore,
) -> Result<CouplingTrace> {
    if kappa_a >= kappa_b || kappa_b >= big_n {
        return Err(Error::Precondition(format!(
            "need 0 <= kappa_a < kappa_b <= N - 1, got {kappa_a}, {kappa_b}, {big_n}"
        )));
    }
    table.require(big_n)?;
    let mut a = TriangleIndex::new(big_n, kappa_a)?;
    let mut b = TriangleIndex::new(big_n, kappa_b)?;
    let mut trace = CouplingTrace { trajectory_a: vec![a], trajectory_b: vec![b], merge_level: None };
    while a.n() > 1 {
        if trace.merge_level.is_some() {
            a = step(table, a, rng);
            b = a;
        } else {
            a = step(table, a, rng);
            b = step(table, b, rng);
            if a == b {
                trace.merge_level = Some(a.n());
            }
        }
        trace.trajectory_a.push(a);
        trace.trajectory_b.push(b);
    }
    Ok(trace)
}
