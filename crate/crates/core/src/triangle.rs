//! Eulerian numbers and the graded graph built on them.
//!
//! Vertex `(n, k)` sits on level `n` with `0 <= k <= n - 1`. It has `k + 1`
//! edges up to `(n + 1, k)` and `n - k` edges up to `(n + 1, k + 1)`, so the
//! number of standard paths ending at `(n, k)` is the Eulerian number `<n k>`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::arith::{binomial, pow, Rational};
use crate::{Error, Result};

/// A vertex of the Eulerian graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TriangleIndex {
    n: usize,
    k: usize,
}

impl TriangleIndex {
    pub const ROOT: TriangleIndex = TriangleIndex { n: 1, k: 0 };

    pub fn new(n: usize, k: usize) -> Result<Self> {
        if n == 0 || k >= n {
            return Err(Error::InvalidVertex { n, k: k as i64 });
        }
        Ok(TriangleIndex { n, k })
    }

    pub fn n(self) -> usize {
        self.n
    }

    pub fn k(self) -> usize {
        self.k
    }

    /// `(n, k) -> (n, n - 1 - k)`, the left-right symmetry of the triangle.
    pub fn mirror(self) -> Self {
        TriangleIndex { n: self.n, k: self.n - 1 - self.k }
    }

    /// The two vertices one level down, `(n - 1, k)` and `(n - 1, k - 1)`,
    /// whichever exist.
    pub fn lower_neighbors(self) -> impl Iterator<Item = TriangleIndex> {
        let n = self.n;
        let k = self.k;
        let same = (n >= 2 && k < n - 1).then(|| TriangleIndex { n: n - 1, k });
        let left = (n >= 2 && k >= 1).then(|| TriangleIndex { n: n - 1, k: k - 1 });
        same.into_iter().chain(left)
    }
}

impl fmt::Display for TriangleIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.n, self.k)
    }
}

/// Rows `1..=max_row` of the Eulerian triangle, computed by the forward
/// recursion `<n k> = (k + 1)<n-1 k> + (n - k)<n-1 k-1>`.
///
/// Reads take `&self` and the table is `Sync`; growing it needs `&mut self`,
/// so concurrent users extend it up front.
#[derive(Debug, Clone)]
pub struct EulerianTable {
    rows: Vec<Vec<BigInt>>,
}

impl Default for EulerianTable {
    fn default() -> Self {
        Self::new()
    }
}

impl EulerianTable {
    pub fn new() -> Self {
        EulerianTable { rows: vec![vec![BigInt::one()]] }
    }

    pub fn with_rows(max_row: usize) -> Self {
        let mut table = Self::new();
        table.extend_to(max_row);
        table
    }

    pub fn max_row(&self) -> usize {
        self.rows.len()
    }

    pub fn extend_to(&mut self, max_row: usize) {
        while self.rows.len() < max_row {
            let prev = self.rows.last().expect("row 1 always present");
            let n = prev.len() + 1;
            let next: Vec<BigInt> = (0..n)
                .map(|k| {
                    let stay = prev.get(k).map(|e| e * (k + 1)).unwrap_or_default();
                    let step = if k >= 1 { &prev[k - 1] * (n - k) } else { BigInt::zero() };
                    stay + step
                })
                .collect();
            self.rows.push(next);
        }
    }

    pub fn require(&self, n: usize) -> Result<()> {
        if n > self.max_row() {
            Err(Error::TableTooSmall { have: self.max_row(), need: n })
        } else {
            Ok(())
        }
    }

    /// Row `n` as a slice of length `n`.
    pub fn row(&self, n: usize) -> Result<&[BigInt]> {
        if n == 0 {
            return Err(Error::InvalidVertex { n, k: 0 });
        }
        self.require(n)?;
        Ok(&self.rows[n - 1])
    }

    /// `<n k>`, zero for `k` outside `0..n`. Fails only if `n` is zero or
    /// beyond the table.
    pub fn entry(&self, n: usize, k: i64) -> Result<BigInt> {
        let row = self.row(n)?;
        Ok(usize::try_from(k).ok().and_then(|k| row.get(k)).cloned().unwrap_or_default())
    }

    pub fn at(&self, v: TriangleIndex) -> Result<&BigInt> {
        Ok(&self.row(v.n)?[v.k])
    }

    /// Like [`entry`](Self::entry) but grows the table as needed.
    pub fn eulerian(&mut self, n: usize, k: i64) -> Result<BigInt> {
        self.extend_to(n);
        self.entry(n, k)
    }
}

/// `<n k>` from a fresh table. Use an [`EulerianTable`] when asking for many values.
pub fn eulerian(n: usize, k: i64) -> Result<BigInt> {
    EulerianTable::with_rows(n).entry(n, k)
}

/// `<n k> = sum_{j=0}^{k} (-1)^j C(n + 1, j) (k + 1 - j)^n`.
///
/// Only asserted for `0 <= k <= n - 1`; anything else is rejected.
pub fn eulerian_explicit(n: usize, k: i64) -> Result<BigInt> {
    if n == 0 {
        return Err(Error::InvalidVertex { n, k });
    }
    if k < 0 || k >= n as i64 {
        return Err(Error::KOutOfRange { n, k });
    }
    let mut acc = BigInt::zero();
    for j in 0..=k {
        let term = binomial(n as i64 + 1, j) * pow((k + 1 - j) as u64, n as u32);
        if j % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    Ok(acc)
}

/// One step of the backward chain: `P{(n,k) -> (n-1,k)} = (k+1)<n-1 k>/<n k>`
/// and `P{(n,k) -> (n-1,k-1)} = (n-k)<n-1 k-1>/<n k>`.
pub fn transition_prob(table: &EulerianTable, from: TriangleIndex, to: TriangleIndex) -> Result<Rational> {
    let (n, k) = (from.n, from.k);
    if n < 2 || to.n != n - 1 || !(to.k == k || to.k + 1 == k) {
        return Err(Error::NotAdjacent { from, to });
    }
    table.require(n)?;
    let weight = if to.k == k { k + 1 } else { n - k };
    Ok(Rational::new(table.at(to)? * weight, table.at(from)?.clone()))
}

/// Worpitzky's identity `(kappa + 1)^n = sum_k <n k> C(n + kappa - k, n)`,
/// which is the row normalization of the bucket-sort solution.
pub fn verify_worpitzky(table: &EulerianTable, n: usize, kappa: usize) -> Result<bool> {
    let row = table.row(n)?;
    let rhs: BigInt = row.iter().enumerate().map(|(k, e)| e * binomial((n + kappa) as i64 - k as i64, n as i64)).sum();
    Ok(rhs == pow(kappa as u64 + 1, n as u32))
}

/// Largest level for which [`count_standard_paths`] is allowed to enumerate.
pub const ENUMERATION_BOUND: usize = 9;

/// Counts standard edge-labeled paths from the root to `(n, k)` by walking
/// every one of them.
pub fn count_standard_paths(n: usize, k: usize) -> Result<u64> {
    if n > ENUMERATION_BOUND {
        return Err(Error::TooLarge { n, max: ENUMERATION_BOUND });
    }
    let target = TriangleIndex::new(n, k)?;

    fn walk(level: usize, kk: usize, target: TriangleIndex) -> u64 {
        if level == target.n {
            return u64::from(kk == target.k);
        }
        // unreachable targets are pruned, not counted
        if kk > target.k || target.k - kk > target.n - level {
            return 0;
        }
        let mut total = 0;
        for _label in 0..kk + 1 {
            total += walk(level + 1, kk, target);
        }
        for _label in 0..level - kk {
            total += walk(level + 1, kk + 1, target);
        }
        total
    }

    Ok(walk(1, 0, target))
}

/// Path enumeration agrees with the Eulerian number at `(n, k)`.
pub fn verify_dimension(table: &EulerianTable, n: usize, k: usize) -> Result<bool> {
    let count = count_standard_paths(n, k)?;
    Ok(BigInt::from(count) == *table.at(TriangleIndex::new(n, k)?)?)
}
