//! Extreme solutions of the dual recursion, truncated solutions, and the
//! limit regimes that connect them.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Deref;
use core::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::arith::{binomial, factorial, int, pow, ratio, Rational};
use crate::reconstruct::{membership, Violation};
use crate::triangle::{EulerianTable, TriangleIndex};
use crate::{Error, Result};

/// Upper bound on `kappa` accepted by default. Denominators grow like
/// `(kappa + 1)^n`.
pub const DEFAULT_KAPPA_CAP: usize = 64;

/// A point of the boundary, `theta = W(2, 0)`.
///
/// `Upper(kappa)` has `theta = (kappa + 2) / (2 (kappa + 1)) > 1/2` and is the
/// bucket-sort solution with `kappa + 1` buckets; `Lower(kappa)` is its mirror
/// image with `theta = kappa / (2 (kappa + 1)) < 1/2`; `Half` is the uniform
/// (exchangeable) solution and the only accumulation point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BoundaryParam {
    Upper(usize),
    Half,
    Lower(usize),
}

impl BoundaryParam {
    pub fn theta(self) -> Rational {
        match self {
            BoundaryParam::Upper(kappa) => ratio(kappa + 2, 2 * (kappa + 1)),
            BoundaryParam::Half => ratio(1, 2),
            BoundaryParam::Lower(kappa) => ratio(kappa, 2 * (kappa + 1)),
        }
    }

    /// `2 theta - 1`, one of `0, +-1, +-1/2, +-1/3, ...`.
    pub fn theta_prime(self) -> Rational {
        match self {
            BoundaryParam::Upper(kappa) => ratio(1, kappa + 1),
            BoundaryParam::Half => Rational::zero(),
            BoundaryParam::Lower(kappa) => -ratio(1, kappa + 1),
        }
    }

    pub fn reflect(self) -> Self {
        match self {
            BoundaryParam::Upper(kappa) => BoundaryParam::Lower(kappa),
            BoundaryParam::Half => BoundaryParam::Half,
            BoundaryParam::Lower(kappa) => BoundaryParam::Upper(kappa),
        }
    }

    pub fn kappa(self) -> Option<usize> {
        match self {
            BoundaryParam::Upper(kappa) | BoundaryParam::Lower(kappa) => Some(kappa),
            BoundaryParam::Half => None,
        }
    }

    /// Recovers the parameter from `theta`, if `theta` lies in the boundary set.
    pub fn from_theta(theta: &Rational) -> Option<Self> {
        let half = ratio(1, 2);
        if *theta == half {
            return Some(BoundaryParam::Half);
        }
        // theta' = +-1/(kappa + 1)
        let prime = theta * int(2) - int(1);
        if prime.is_zero() || prime.abs() > int(1) {
            return None;
        }
        let inv = prime.abs().recip();
        if !inv.is_integer() {
            return None;
        }
        let kappa: usize = (inv.to_integer() - 1u32).try_into().ok()?;
        Some(if prime.is_positive() { BoundaryParam::Upper(kappa) } else { BoundaryParam::Lower(kappa) })
    }

    pub fn check_cap(self, cap: usize) -> Result<()> {
        match self.kappa() {
            Some(kappa) if kappa > cap => Err(Error::KappaAboveCap { kappa, cap }),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for BoundaryParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryParam::Upper(kappa) => write!(f, "upper:{kappa}"),
            BoundaryParam::Half => f.write_str("half"),
            BoundaryParam::Lower(kappa) => write!(f, "lower:{kappa}"),
        }
    }
}

impl FromStr for BoundaryParam {
    type Err = Error;

    /// Accepts `half`, `upper:K` and `lower:K`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("half") {
            return Ok(BoundaryParam::Half);
        }
        let bad = || Error::Precondition(format!("cannot parse boundary parameter {s:?}"));
        let (side, kappa) = s.split_once(':').ok_or_else(bad)?;
        let kappa: usize = kappa.trim().parse().map_err(|_| bad())?;
        match side.trim().to_ascii_lowercase().as_str() {
            "upper" => Ok(BoundaryParam::Upper(kappa)),
            "lower" => Ok(BoundaryParam::Lower(kappa)),
            _ => Err(bad()),
        }
    }
}

/// A triangular array of rationals, rows `1..=max_row`, row `n` holding `n`
/// entries. No sign or recursion constraints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriangularArray {
    rows: Vec<Vec<Rational>>,
}

impl TriangularArray {
    pub fn zeros(max_row: usize) -> Self {
        TriangularArray { rows: (1..=max_row).map(|n| vec![Rational::zero(); n]).collect() }
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Precondition("array needs at least one row".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != i + 1 {
                return Err(Error::Precondition(format!(
                    "row {} has {} entries, expected {}",
                    i + 1,
                    row.len(),
                    i + 1
                )));
            }
        }
        Ok(TriangularArray { rows })
    }

    pub fn from_fn(max_row: usize, mut f: impl FnMut(usize, usize) -> Rational) -> Self {
        TriangularArray { rows: (1..=max_row).map(|n| (0..n).map(|k| f(n, k)).collect()).collect() }
    }

    pub fn max_row(&self) -> usize {
        self.rows.len()
    }

    /// Entry `(n, k)`; panics outside the array.
    pub fn get(&self, n: usize, k: usize) -> &Rational {
        &self.rows[n - 1][k]
    }

    pub fn get_mut(&mut self, n: usize, k: usize) -> &mut Rational {
        &mut self.rows[n - 1][k]
    }

    pub fn row(&self, n: usize) -> &[Rational] {
        &self.rows[n - 1]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Rational]> {
        self.rows.iter().map(Vec::as_slice)
    }

    pub fn left_column(&self) -> Vec<Rational> {
        self.rows.iter().map(|r| r[0].clone()).collect()
    }

    pub fn truncated(&self, max_row: usize) -> Self {
        TriangularArray { rows: self.rows[..max_row.min(self.max_row())].to_vec() }
    }

    /// Entry `(n, k)` moved to `(n, n - 1 - k)`.
    pub fn reflected(&self) -> Self {
        TriangularArray { rows: self.rows.iter().map(|r| r.iter().rev().cloned().collect()).collect() }
    }

    pub fn first_negative(&self) -> Option<TriangleIndex> {
        self.indices().find(|v| self.get(v.n(), v.k()).is_negative())
    }

    /// First `(n, k)` with `n < max_row` where
    /// `V(n,k) != (k+1) V(n+1,k) + (n-k) V(n+1,k+1)`.
    pub fn dual_recursion_violation(&self) -> Option<TriangleIndex> {
        self.indices().filter(|v| v.n() < self.max_row()).find(|v| {
            let (n, k) = (v.n(), v.k());
            let rhs = self.get(n + 1, k) * int(k + 1) + self.get(n + 1, k + 1) * int(n - k);
            *self.get(n, k) != rhs
        })
    }

    /// `sum_k <n k> V(n, k)` for every row.
    pub fn row_masses(&self, table: &EulerianTable) -> Result<Vec<Rational>> {
        table.require(self.max_row())?;
        Ok((1..=self.max_row())
            .map(|n| {
                let eul = table.row(n).expect("checked above");
                self.row(n).iter().zip(eul).map(|(v, e)| v * int(e.clone())).sum()
            })
            .collect())
    }

    /// First entry breaking `V(n, k) <= 1 / <n k>`.
    pub fn dimension_bound_violation(&self, table: &EulerianTable) -> Result<Option<TriangleIndex>> {
        table.require(self.max_row())?;
        Ok(self.indices().find(|v| self.get(v.n(), v.k()) * int(table.at(*v).unwrap().clone()) > int(1)))
    }

    /// Largest `|self - other|` over rows `1..=rows` (both arrays must reach that far).
    pub fn max_abs_deviation(&self, other: &TriangularArray, rows: usize) -> Rational {
        (1..=rows)
            .flat_map(|n| (0..n).map(move |k| (n, k)))
            .map(|(n, k)| (self.get(n, k) - other.get(n, k)).abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }

    /// `sum_i c_i A_i` over the rows every term shares.
    pub fn linear_combination<'a>(terms: impl IntoIterator<Item = (&'a Rational, &'a TriangularArray)>) -> Self {
        let terms: Vec<_> = terms.into_iter().collect();
        let max_row = terms.iter().map(|(_, a)| a.max_row()).min().unwrap_or(0);
        TriangularArray::from_fn(max_row, |n, k| terms.iter().map(|(c, a)| *c * a.get(n, k)).sum())
    }

    pub fn indices(&self) -> impl Iterator<Item = TriangleIndex> + '_ {
        (1..=self.max_row()).flat_map(|n| (0..n).map(move |k| TriangleIndex::new(n, k).unwrap()))
    }
}

/// A window `1..=max_row` onto a nonnegative normalized solution of the dual
/// recursion. Construction checks membership.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolutionArray(TriangularArray);

impl SolutionArray {
    pub fn try_new(array: TriangularArray) -> core::result::Result<Self, Violation> {
        match membership(&array) {
            None => Ok(SolutionArray(array)),
            Some(v) => Err(v),
        }
    }

    pub(crate) fn new_unchecked(array: TriangularArray) -> Self {
        debug_assert!(membership(&array).is_none());
        SolutionArray(array)
    }

    /// Convex combination; weights must be nonnegative and sum to one.
    pub fn mixture<'a>(terms: impl IntoIterator<Item = (&'a Rational, &'a SolutionArray)>) -> Result<Self> {
        let terms: Vec<_> = terms.into_iter().collect();
        if terms.is_empty() {
            return Err(Error::Precondition("empty mixture".into()));
        }
        if terms.iter().any(|(w, _)| w.is_negative()) {
            return Err(Error::Precondition("negative mixture weight".into()));
        }
        let total: Rational = terms.iter().map(|(w, _)| (*w).clone()).sum();
        if !total.is_one() {
            return Err(Error::Precondition(format!("mixture weights sum to {total}")));
        }
        let array = TriangularArray::linear_combination(terms.iter().map(|(w, s)| (*w, &s.0)));
        Ok(SolutionArray::new_unchecked(array))
    }

    pub fn into_inner(self) -> TriangularArray {
        self.0
    }

    pub fn truncated(&self, max_row: usize) -> Self {
        SolutionArray(self.0.truncated(max_row))
    }
}

impl Deref for SolutionArray {
    type Target = TriangularArray;

    fn deref(&self) -> &TriangularArray {
        &self.0
    }
}

/// Entry `W(n, k)(theta)` from the closed forms:
/// `C(n + kappa - k, n) / (kappa + 1)^n` above one half,
/// `C(kappa + k + 1, n) / (kappa + 1)^n` below, and `1 / n!` at one half.
pub fn extreme_entry(theta: BoundaryParam, n: usize, k: usize) -> Rational {
    let (n_i, k_i) = (n as i64, k as i64);
    match theta {
        BoundaryParam::Upper(kappa) => {
            Rational::new(binomial(n_i + kappa as i64 - k_i, n_i), pow(kappa as u64 + 1, n as u32))
        }
        BoundaryParam::Lower(kappa) => {
            Rational::new(binomial(kappa as i64 + k_i + 1, n_i), pow(kappa as u64 + 1, n as u32))
        }
        BoundaryParam::Half => Rational::new(BigInt::one(), factorial(n as u64)),
    }
}

/// `W(theta)` on rows `1..=max_row`, using [`DEFAULT_KAPPA_CAP`].
pub fn extreme_solution(theta: BoundaryParam, max_row: usize) -> Result<SolutionArray> {
    extreme_solution_with_cap(theta, max_row, DEFAULT_KAPPA_CAP)
}

pub fn extreme_solution_with_cap(theta: BoundaryParam, max_row: usize, cap: usize) -> Result<SolutionArray> {
    theta.check_cap(cap)?;
    if max_row == 0 {
        return Err(Error::Precondition("max_row must be positive".into()));
    }
    Ok(SolutionArray::new_unchecked(TriangularArray::from_fn(max_row, |n, k| extreme_entry(theta, n, k))))
}

/// `W(n, k)(theta) = (1/n!) prod_{i=-k}^{n-1-k} (1 + theta' i)`.
///
/// Independent of [`extreme_entry`]; the two are meant to be compared.
pub fn unified_formula(theta: BoundaryParam, n: usize, k: i64) -> Result<Rational> {
    if n == 0 || k < 0 || k >= n as i64 {
        return Err(Error::KOutOfRange { n, k });
    }
    let prime = theta.theta_prime();
    let product: Rational = (-k..n as i64 - k).map(|i| int(1) + &prime * int(i)).product();
    Ok(product / int(factorial(n as u64)))
}

/// `V~(n, k) = <n k> V(n, k)`; rows of a solution become probability vectors.
pub fn tilde_transform(table: &EulerianTable, v: &TriangularArray) -> Result<TriangularArray> {
    table.require(v.max_row())?;
    Ok(TriangularArray::from_fn(v.max_row(), |n, k| v.get(n, k) * int(table.row(n).unwrap()[k].clone())))
}

/// Number of edge-weighted paths from every vertex on rows `1..=n_top` up to
/// `(n_top, kappa)`: `U(n,k) = (k+1) U(n+1,k) + (n-k) U(n+1,k+1)` with a unit
/// delta on the top row. Rows are produced top-down to `stop_row`.
fn path_counts_to(n_top: usize, kappa: usize, stop_row: usize, mut visit: impl FnMut(usize, &[BigInt])) {
    let mut row: Vec<BigInt> = (0..n_top).map(|k| if k == kappa { BigInt::one() } else { BigInt::zero() }).collect();
    visit(n_top, &row);
    for n in (stop_row.max(1)..n_top).rev() {
        let next: Vec<BigInt> = (0..n).map(|k| &row[k] * (k + 1) + &row[k + 1] * (n - k)).collect();
        row = next;
        visit(n, &row);
    }
}

/// The truncated solution `V^{N kappa}` (delta `1/<N kappa>` at `(N, kappa)`,
/// propagated down the dual recursion), returned on rows `1..=max_row`.
///
/// The propagation runs over integer path counts and divides by `<N kappa>`
/// once per entry.
pub fn truncated_solution(table: &EulerianTable, big_n: usize, kappa: usize, max_row: usize) -> Result<SolutionArray> {
    if big_n == 0 || kappa >= big_n {
        return Err(Error::InvalidVertex { n: big_n, k: kappa as i64 });
    }
    if max_row == 0 || max_row > big_n {
        return Err(Error::Precondition(format!("max_row must lie in 1..={big_n}")));
    }
    table.require(big_n)?;
    let denom = table.at(TriangleIndex::new(big_n, kappa)?)?.clone();
    let mut rows: Vec<Vec<Rational>> = vec![Vec::new(); max_row];
    path_counts_to(big_n, kappa, 1, |n, counts| {
        if n <= max_row {
            rows[n - 1] = counts.iter().map(|c| Rational::new(c.clone(), denom.clone())).collect();
        }
    });
    Ok(SolutionArray::new_unchecked(TriangularArray { rows }))
}

/// How `kappa` moves with `N` in a Martin-limit experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KappaSchedule {
    /// `kappa(N) = kappa`; limit `W(upper:kappa)`.
    Constant(usize),
    /// `kappa(N) = N - 1 - kappa`; limit `W(lower:kappa)`.
    Mirrored(usize),
    /// `kappa(N) = floor(N / 2)`; limit `W(half)`.
    Middle,
}

impl KappaSchedule {
    pub fn kappa_at(self, big_n: usize) -> usize {
        match self {
            KappaSchedule::Constant(kappa) => kappa,
            KappaSchedule::Mirrored(kappa) => big_n - 1 - kappa,
            KappaSchedule::Middle => big_n / 2,
        }
    }

    pub fn predicted_limit(self) -> BoundaryParam {
        match self {
            KappaSchedule::Constant(kappa) => BoundaryParam::Upper(kappa),
            KappaSchedule::Mirrored(kappa) => BoundaryParam::Lower(kappa),
            KappaSchedule::Middle => BoundaryParam::Half,
        }
    }

    fn first_n(self, row_limit: usize) -> usize {
        match self {
            KappaSchedule::Constant(kappa) | KappaSchedule::Mirrored(kappa) => row_limit.max(kappa + 1),
            KappaSchedule::Middle => row_limit.max(2),
        }
    }
}

impl fmt::Display for KappaSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KappaSchedule::Constant(kappa) => write!(f, "constant:{kappa}"),
            KappaSchedule::Mirrored(kappa) => write!(f, "mirrored:{kappa}"),
            KappaSchedule::Middle => f.write_str("middle"),
        }
    }
}

impl FromStr for KappaSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "middle" || s == "half" {
            return Ok(KappaSchedule::Middle);
        }
        let bad = || Error::Precondition(format!("cannot parse kappa schedule {s:?}"));
        let (kind, kappa) = s.split_once(':').ok_or_else(bad)?;
        let kappa = kappa.parse().map_err(|_| bad())?;
        match kind {
            "constant" => Ok(KappaSchedule::Constant(kappa)),
            "mirrored" => Ok(KappaSchedule::Mirrored(kappa)),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MartinReport {
    pub schedule: KappaSchedule,
    pub limit: BoundaryParam,
    pub row_limit: usize,
    pub tolerance: Rational,
    /// `(N, max |V^{N kappa(N)} - W|)` over rows `1..=row_limit`.
    pub trajectory: Vec<(usize, Rational)>,
    /// Smallest `N` from which every deviation up to the cap is strictly
    /// below the tolerance.
    pub converged_at: Option<usize>,
}

impl MartinReport {
    pub fn converged(&self) -> bool {
        self.converged_at.is_some()
    }

    pub fn final_deviation(&self) -> Option<&Rational> {
        self.trajectory.last().map(|(_, d)| d)
    }

    /// Deviation never increases along the trajectory.
    pub fn nonincreasing(&self) -> bool {
        self.trajectory.windows(2).all(|w| w[1].1 <= w[0].1)
    }

    /// Deviation never increases along even `N` nor along odd `N`. The middle
    /// schedule alternates between a centered and an off-center start, so
    /// only the two parity classes are monotone there.
    pub fn nonincreasing_by_parity(&self) -> bool {
        self.trajectory.windows(3).all(|w| w[2].1 <= w[0].1)
    }
}

/// Tracks `V^{N, kappa(N)}` against its predicted limit for `N` up to `n_cap`.
///
/// Comparisons are exact. Missing the tolerance by `n_cap` is reported, not
/// raised.
pub fn martin_limit_witness(
    table: &EulerianTable,
    schedule: KappaSchedule,
    row_limit: usize,
    tolerance: &Rational,
    n_cap: usize,
) -> Result<MartinReport> {
    if row_limit == 0 {
        return Err(Error::Precondition("row_limit must be positive".into()));
    }
    let limit = schedule.predicted_limit();
    let target = extreme_solution(limit, row_limit)?;
    table.require(n_cap)?;
    let mut trajectory = Vec::new();
    let mut converged_at = None;
    for big_n in schedule.first_n(row_limit)..=n_cap {
        let v = truncated_solution(table, big_n, schedule.kappa_at(big_n), row_limit)?;
        let dev = v.max_abs_deviation(&target, row_limit);
        if dev >= *tolerance {
            converged_at = None;
        } else if converged_at.is_none() {
            converged_at = Some(big_n);
        }
        trajectory.push((big_n, dev));
    }
    Ok(MartinReport { schedule, limit, row_limit, tolerance: tolerance.clone(), trajectory, converged_at })
}

/// `W~^kappa(N, kappa) = <N kappa> / (kappa + 1)^N` for `N = kappa + 1 ..= n_max`:
/// the chance that bucket sorting with `kappa + 1` buckets uses all its
/// descents. Tends to one.
pub fn saturation_witness(table: &EulerianTable, kappa: usize, n_max: usize) -> Result<Vec<(usize, Rational)>> {
    table.require(n_max)?;
    let theta = BoundaryParam::Upper(kappa);
    (kappa + 1..=n_max).map(|n| Ok((n, extreme_entry(theta, n, kappa) * int(table.entry(n, kappa as i64)?)))).collect()
}

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, failure: Option<String>) -> Self {
        match failure {
            None => Check { name, passed: true, detail: String::from("ok") },
            Some(detail) => Check { name, passed: false, detail },
        }
    }
}

/// Every structural property `W(theta)` must have on rows `1..=max_row`:
/// the dual recursion, row normalization, the dimension bound, the support
/// pattern, mirror symmetry, `W(2,0) = theta` and agreement with the unified
/// product formula.
pub fn check_extreme(table: &EulerianTable, theta: BoundaryParam, max_row: usize) -> Result<Vec<Check>> {
    let w = extreme_solution(theta, max_row)?;
    let mut checks = Vec::new();

    checks.push(Check::new("dual-recursion", w.dual_recursion_violation().map(|v| format!("recursion fails at {v}"))));
    let masses = w.row_masses(table)?;
    checks.push(Check::new(
        "normalization",
        masses.iter().position(|m| !m.is_one()).map(|i| format!("row {} has mass {}", i + 1, masses[i])),
    ));
    checks.push(Check::new("dimension-bound", w.dimension_bound_violation(table)?.map(|v| format!("W{v} > 1/<n k>"))));

    let support_failure = w.indices().find_map(|v| {
        let (n, k) = (v.n(), v.k());
        let should_vanish = match theta {
            BoundaryParam::Upper(kappa) => k > kappa,
            BoundaryParam::Lower(kappa) => k + 1 + kappa < n,
            BoundaryParam::Half => false,
        };
        (w.get(n, k).is_zero() != should_vanish).then(|| format!("support pattern broken at {v}"))
    });
    checks.push(Check::new("support", support_failure));

    let mirror = extreme_solution(theta.reflect(), max_row)?;
    checks.push(Check::new(
        "symmetry",
        (mirror.reflected() != *w).then(|| "W(theta) and W(1 - theta) are not mirror images".into()),
    ));

    let theta_failure = if max_row >= 2 && *w.get(2, 0) != theta.theta() {
        Some(format!("W(2,0) = {} but theta = {}", w.get(2, 0), theta.theta()))
    } else {
        None
    };
    checks.push(Check::new("theta-recovery", theta_failure));

    let mut unified_failure = None;
    for v in w.indices() {
        if unified_formula(theta, v.n(), v.k() as i64)? != *w.get(v.n(), v.k()) {
            unified_failure = Some(format!("unified formula disagrees at {v}"));
            break;
        }
    }
    checks.push(Check::new("unified-formula", unified_failure));
    Ok(checks)
}

/// Every `theta` with `kappa <= kappa_max`, in a fixed order.
pub fn params_up_to(kappa_max: usize) -> Vec<BoundaryParam> {
    let mut out = Vec::with_capacity(2 * kappa_max + 3);
    out.push(BoundaryParam::Half);
    for kappa in 0..=kappa_max {
        out.push(BoundaryParam::Upper(kappa));
        out.push(BoundaryParam::Lower(kappa));
    }
    out
}
