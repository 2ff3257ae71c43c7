//! Rebuilding solutions from their left column and splitting them into
//! extreme components.
//!
//! The left column `(V(n, 0))` determines a solution: rearranging the dual
//! recursion as
//!
//! ```text
//! V(n+1, k+1) = V(n, k) / (n - k) - (k + 1) V(n+1, k) / (n - k)
//! ```
//!
//! fills the triangle column by column. A column is admissible exactly when
//! the result is nonnegative.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{One, Signed, Zero};

use crate::arith::{independent_rows, int, solve, Rational};
use crate::boundary::{extreme_entry, extreme_solution, params_up_to, BoundaryParam, SolutionArray, TriangularArray};
use crate::triangle::{EulerianTable, TriangleIndex};
use crate::{Error, Result};

/// `(V(1,0), V(2,0), ..., V(N,0))` with `V(1,0) = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeftColumn(Vec<Rational>);

impl LeftColumn {
    pub fn new(values: Vec<Rational>) -> Result<Self> {
        match values.first() {
            None => Err(Error::Precondition("left column is empty".into())),
            Some(first) if !first.is_one() => {
                Err(Error::Precondition(format!("left column must start with 1, found {first}")))
            }
            Some(_) => Ok(LeftColumn(values)),
        }
    }

    pub fn values(&self) -> &[Rational] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// The linear operator taking a left column to the unique array that solves
/// the dual recursion on rows `1..N`. Entries may come out negative.
pub fn nabla(left: &LeftColumn) -> TriangularArray {
    let rows = left.len();
    let mut out = TriangularArray::zeros(rows);
    for (i, v) in left.values().iter().enumerate() {
        *out.get_mut(i + 1, 0) = v.clone();
    }
    for k in 0..rows.saturating_sub(1) {
        for n in k + 1..rows {
            // n - k >= 1 because k <= n - 1
            let d = int(n - k);
            let value = (out.get(n, k) - out.get(n + 1, k) * int(k + 1)) / d;
            *out.get_mut(n + 1, k + 1) = value;
        }
    }
    out
}

/// Why an array is not (a window onto) a member of the solution set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NotNormalized { value: Rational },
    Negative { at: TriangleIndex, value: Rational },
    Recursion { at: TriangleIndex },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotNormalized { value } => write!(f, "V(1,0) = {value}, expected 1"),
            Violation::Negative { at, value } => write!(f, "negative entry at {at}: {value}"),
            Violation::Recursion { at } => write!(f, "dual recursion fails at {at}"),
        }
    }
}

/// First violated membership constraint, checked in the order
/// normalization, sign, recursion.
pub fn membership(array: &TriangularArray) -> Option<Violation> {
    if array.max_row() == 0 {
        return Some(Violation::NotNormalized { value: Rational::zero() });
    }
    let top = array.get(1, 0);
    if !top.is_one() {
        return Some(Violation::NotNormalized { value: top.clone() });
    }
    if let Some(at) = array.first_negative() {
        return Some(Violation::Negative { at, value: array.get(at.n(), at.k()).clone() });
    }
    array.dual_recursion_violation().map(|at| Violation::Recursion { at })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Member,
    NonMember(Violation),
}

impl Verdict {
    pub fn is_member(&self) -> bool {
        matches!(self, Verdict::Member)
    }
}

pub fn in_v_check(array: &TriangularArray) -> Verdict {
    match membership(array) {
        None => Verdict::Member,
        Some(v) => Verdict::NonMember(v),
    }
}

/// Weights over boundary parameters plus a bound on the mass the weights
/// leave unexplained.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MixtureWeights {
    pub weights: BTreeMap<BoundaryParam, Rational>,
    pub residual: Rational,
}

impl MixtureWeights {
    pub fn weight(&self, theta: BoundaryParam) -> Rational {
        self.weights.get(&theta).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn total(&self) -> Rational {
        self.weights.values().sum()
    }

    /// `sum_theta p(theta) W(theta)` on rows `1..=max_row`.
    pub fn remix(&self, max_row: usize) -> Result<TriangularArray> {
        let parts: Vec<(Rational, SolutionArray)> = self
            .weights
            .iter()
            .map(|(theta, w)| Ok((w.clone(), extreme_solution(*theta, max_row)?)))
            .collect::<Result<_>>()?;
        if parts.is_empty() {
            return Ok(TriangularArray::zeros(max_row));
        }
        Ok(TriangularArray::linear_combination(parts.iter().map(|(w, s)| (w, &**s))))
    }

    /// Largest `|p(theta) - q(theta)|` over the union of supports.
    pub fn max_weight_gap(&self, other: &MixtureWeights) -> Rational {
        self.weights
            .keys()
            .chain(other.weights.keys())
            .map(|theta| (self.weight(*theta) - other.weight(*theta)).abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecomposeError {
    #[error(transparent)]
    Invalid(#[from] Error),
    #[error("support of size {size} spans only rank {rank} on the available rows")]
    Singular { rank: usize, size: usize },
    #[error("the fitted mixture has a negative weight")]
    Infeasible { weights: MixtureWeights },
    #[error("the fitted mixture disagrees with the array at {at}; support is insufficient")]
    SupportInsufficient { at: TriangleIndex, weights: MixtureWeights },
}

/// Exact weights for a known finite support.
///
/// Solves `sum_theta p(theta) W(n, 0)(theta) = V(n, 0)` on `n = 1..=|support|`,
/// falling back to the first independent rows of the whole left column if
/// that block is singular, then checks the remixed array against every entry
/// of `v`.
pub fn decompose_exact(v: &TriangularArray, support: &[BoundaryParam]) -> Result<MixtureWeights, DecomposeError> {
    let size = support.len();
    if size == 0 {
        return Err(Error::Precondition("support is empty".into()).into());
    }
    if size > v.max_row() {
        return Err(Error::Precondition(format!(
            "support of size {size} needs at least {size} rows, array has {}",
            v.max_row()
        ))
        .into());
    }
    let rows = v.max_row();
    let system: Vec<Vec<Rational>> =
        (1..=rows).map(|n| support.iter().map(|theta| extreme_entry(*theta, n, 0)).collect()).collect();
    let rhs = v.left_column();

    let leading: Vec<usize> = (0..size).collect();
    let solved = solve_on(&system, &rhs, &leading).or_else(|| {
        let pivots = independent_rows(&system);
        if pivots.len() < size {
            None
        } else {
            solve_on(&system, &rhs, &pivots[..size])
        }
    });
    let Some(solution) = solved else {
        return Err(DecomposeError::Singular { rank: independent_rows(&system).len(), size });
    };

    let mut weights = MixtureWeights::default();
    for (theta, w) in support.iter().zip(solution) {
        *weights.weights.entry(*theta).or_insert_with(Rational::zero) += w;
    }
    if weights.weights.values().any(Signed::is_negative) {
        return Err(DecomposeError::Infeasible { weights });
    }
    let remixed = weights.remix(rows)?;
    if let Some(at) = v.indices().find(|at| remixed.get(at.n(), at.k()) != v.get(at.n(), at.k())) {
        return Err(DecomposeError::SupportInsufficient { at, weights });
    }
    Ok(weights)
}

fn solve_on(system: &[Vec<Rational>], rhs: &[Rational], picks: &[usize]) -> Option<Vec<Rational>> {
    let a = picks.iter().map(|&i| system[i].clone()).collect();
    let b = picks.iter().map(|&i| rhs[i].clone()).collect();
    solve(a, b)
}

/// Tuning for [`decompose`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LimitConfig {
    /// Successive-row change below which an estimate counts as stable.
    pub threshold: Rational,
    /// Number of trailing rows compared.
    pub window: usize,
}

impl Default for LimitConfig {
    fn default() -> Self {
        LimitConfig { threshold: crate::arith::ten_to_minus(9), window: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LimitDecomposition {
    Determined(MixtureWeights),
    /// Some estimates kept moving across the window, or the fitted mixture
    /// leaves `unexplained` tilde mass on the last row; `estimate` is the
    /// fit at the last row.
    Indeterminate {
        oscillating: Vec<BoundaryParam>,
        unexplained: Rational,
        estimate: MixtureWeights,
    },
}

/// Blind decomposition from the tail of the array.
///
/// Each `W(upper:kappa)` concentrates its row-`N` tilde mass on `(N, kappa)`
/// and each `W(lower:kappa)` on `(N, N - 1 - kappa)`, while `W(half)` puts
/// vanishing mass on any fixed distance from either edge. The estimator reads
/// the `kappa_cut + 1` tilde entries at each edge of row `N`, removes the
/// finite-`N` leakage between components by solving the small triangular
/// system those entries satisfy, and gives the remaining mass to `half`. It
/// repeats this for the last `window` rows up to `row_budget` and declares
/// the result once every estimate has stopped moving and the fit explains
/// the whole last row. Convergence speed depends on the mixture; the default
/// threshold is a heuristic.
pub fn decompose(
    table: &EulerianTable,
    v: &TriangularArray,
    kappa_cut: usize,
    row_budget: usize,
    config: &LimitConfig,
) -> Result<LimitDecomposition> {
    if row_budget < 4 * (kappa_cut + 2) {
        return Err(Error::Precondition(format!(
            "row budget {row_budget} is below 4 (kappa_cut + 2) = {}",
            4 * (kappa_cut + 2)
        )));
    }
    if v.max_row() < row_budget {
        return Err(Error::Precondition(format!("array has {} rows, budget is {row_budget}", v.max_row())));
    }
    if config.window < 2 || config.window > row_budget {
        return Err(Error::Precondition("window must lie in 2..=row_budget".into()));
    }
    let v = v.truncated(row_budget);
    if let Some(violation) = membership(&v) {
        return Err(Error::Precondition(format!("input is not a solution: {violation}")));
    }
    table.require(row_budget)?;

    let candidates = params_up_to(kappa_cut);
    let estimates: Vec<Vec<Rational>> = (row_budget + 1 - config.window..=row_budget)
        .map(|big_n| wing_estimate(table, &v, &candidates, kappa_cut, big_n))
        .collect::<Result<_>>()?;
    let last = estimates.last().expect("window >= 2");

    let mut oscillating = Vec::new();
    let mut drift = Rational::zero();
    for (i, theta) in candidates.iter().enumerate() {
        let moves = estimates.windows(2).map(|w| (&w[1][i] - &w[0][i]).abs()).max().unwrap_or_default();
        if moves >= config.threshold {
            oscillating.push(*theta);
        }
        drift += estimates.iter().map(|e| (&e[i] - &last[i]).abs()).max().unwrap_or_default();
    }

    // Total-variation gap between the last row and the fitted mixture: mass
    // that none of the candidates accounts for.
    let eul = table.row(row_budget)?;
    let unexplained: Rational = (0..row_budget)
        .map(|k| {
            let fitted: Rational =
                candidates.iter().zip(last).map(|(theta, w)| w * extreme_entry(*theta, row_budget, k)).sum();
            ((v.get(row_budget, k) - fitted) * int(eul[k].clone())).abs()
        })
        .sum::<Rational>()
        / int(2);

    let mut weights = MixtureWeights::default();
    for (theta, w) in candidates.iter().zip(last) {
        if w.is_negative() {
            drift += w.abs();
        } else if !w.is_zero() {
            weights.weights.insert(*theta, w.clone());
        }
    }
    weights.residual = drift + &unexplained;
    Ok(if oscillating.is_empty() && unexplained < config.threshold {
        LimitDecomposition::Determined(weights)
    } else {
        LimitDecomposition::Indeterminate { oscillating, unexplained, estimate: weights }
    })
}

/// Solves for candidate weights using the `kappa_cut + 1` entries at each
/// end of row `big_n` of the tilde array plus total mass one.
fn wing_estimate(
    table: &EulerianTable,
    v: &TriangularArray,
    candidates: &[BoundaryParam],
    kappa_cut: usize,
    big_n: usize,
) -> Result<Vec<Rational>> {
    let eul = table.row(big_n)?;
    let mut columns: Vec<usize> = Vec::new();
    for kappa in 0..=kappa_cut {
        columns.push(kappa);
        columns.push(big_n - 1 - kappa);
    }
    let mut a: Vec<Vec<Rational>> = columns
        .iter()
        .map(|&k| candidates.iter().map(|theta| extreme_entry(*theta, big_n, k) * int(eul[k].clone())).collect())
        .collect();
    let mut b: Vec<Rational> = columns.iter().map(|&k| v.get(big_n, k) * int(eul[k].clone())).collect();
    a.push(vec![Rational::one(); candidates.len()]);
    b.push(Rational::one());
    solve(a, b).ok_or_else(|| Error::Precondition(format!("wing system singular at row {big_n}")))
}

/// Convenience for tests and the CLI: `sum p_i W(theta_i)` as a member array.
pub fn synthesize(parts: &[(Rational, BoundaryParam)], max_row: usize) -> Result<SolutionArray> {
    let arrays: Vec<(Rational, SolutionArray)> =
        parts.iter().map(|(w, theta)| Ok((w.clone(), extreme_solution(*theta, max_row)?))).collect::<Result<_>>()?;
    SolutionArray::mixture(arrays.iter().map(|(w, s)| (w, s)))
}

/// `1/2 W(half) + 1/2 W(upper:3)`-style weights written `p@theta`.
pub fn parse_component(s: &str) -> Result<(Rational, BoundaryParam)> {
    let (w, theta) =
        s.split_once('@').ok_or_else(|| Error::Precondition(format!("expected WEIGHT@THETA, got {s:?}")))?;
    let w: Rational = w.trim().parse().map_err(|_| Error::Precondition(format!("bad weight {w:?}")))?;
    Ok((w, theta.parse()?))
}
