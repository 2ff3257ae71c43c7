//! Random arrangements whose permutation laws depend only on the descent
//! count, and Monte Carlo comparisons against the exact solutions.
//!
//! All samplers draw from one [`RngStream`] and grow a single infinite
//! sequence (bucket labels or uniform keys) that is truncated at `n`, so the
//! permutations for `m < n` are the remove-largest projections of the one for
//! `n`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_bigint::BigInt;
use num_traits::Zero;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arith::{factorial, int, to_f64, Rational};
use crate::boundary::{extreme_entry, BoundaryParam};
use crate::stats::{binomial_z, chi_square_z, HistogramMoments};
use crate::triangle::EulerianTable;
use crate::{Error, Result};

/// Name and version of the generator behind [`RngStream`]; recorded in
/// command output so stored frequencies stay reproducible.
pub const RNG_ALGORITHM: &str = "chacha8/rand_chacha-0.3";

/// Seeded, reproducible random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream { seed, inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Independent stream for parallel replica `replica`, same seed.
    pub fn replica(seed: u64, replica: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(replica);
        RngStream { seed, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> core::result::Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

/// A permutation of `[n]` in one-row notation, values `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Permutation(Vec<u32>);

impl Permutation {
    pub fn new(values: Vec<u32>) -> Result<Self> {
        let n = values.len();
        let mut seen = vec![false; n];
        for &v in &values {
            let i = (v as usize).wrapping_sub(1);
            if i >= n || seen[i] {
                return Err(Error::NotAPermutation(format!("{values:?}")));
            }
            seen[i] = true;
        }
        if n == 0 {
            return Err(Error::NotAPermutation(String::from("empty")));
        }
        Ok(Permutation(values))
    }

    pub fn identity(n: usize) -> Self {
        Permutation((1..=n as u32).collect())
    }

    pub fn reversed(n: usize) -> Self {
        Permutation((1..=n as u32).rev().collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn descent_count(&self) -> usize {
        self.0.windows(2).filter(|w| w[0] > w[1]).count()
    }

    /// Removes the largest entry `n`.
    pub fn project(&self) -> Option<Permutation> {
        let n = self.len() as u32;
        (n > 1).then(|| Permutation(self.0.iter().copied().filter(|&v| v != n).collect()))
    }

    /// `pi_m, ..., pi_n = self`, the iterated remove-largest projections
    /// starting from `pi_1`.
    pub fn projections(&self) -> Vec<Permutation> {
        let mut out = vec![self.clone()];
        while let Some(p) = out.last().unwrap().project() {
            out.push(p);
        }
        out.reverse();
        out
    }

    /// Position in the lexicographic order of `Perm(n)`, via the Lehmer code.
    pub fn rank(&self) -> usize {
        rank_of(&self.0)
    }

    pub fn from_rank(n: usize, mut rank: usize) -> Self {
        let mut pool: Vec<u32> = (1..=n as u32).collect();
        let mut fact: usize = (1..n).product::<usize>().max(1);
        let mut out = Vec::with_capacity(n);
        for i in (0..n).rev() {
            let idx = rank / fact;
            rank %= fact;
            out.push(pool.remove(idx));
            if let Some(f) = fact.checked_div(i) {
                fact = f;
            }
        }
        Permutation(out)
    }

    /// All permutations of `[n]` in lexicographic order.
    pub fn all(n: usize) -> impl Iterator<Item = Permutation> {
        let total: usize = (1..=n).product();
        (0..total).map(move |r| Permutation::from_rank(n, r))
    }
}

fn rank_of(values: &[u32]) -> usize {
    let n = values.len();
    let mut rank = 0usize;
    for i in 0..n {
        let smaller_after = values[i + 1..].iter().filter(|&&v| v < values[i]).count();
        rank = rank * (n - i) + smaller_after;
    }
    rank
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len() <= 9 {
            for v in &self.0 {
                write!(f, "{v}")?;
            }
            Ok(())
        } else {
            for (i, v) in self.0.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{v}")?;
            }
            Ok(())
        }
    }
}

impl FromStr for Permutation {
    type Err = Error;

    /// `"7356241"` (single digits) or `"3,1,2"` / `"3 1 2"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::NotAPermutation(String::from(s));
        let values: Vec<u32> = if s.contains(|c: char| c == ',' || c.is_whitespace()) {
            s.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| t.parse().map_err(|_| bad()))
                .collect::<Result<_>>()?
        } else {
            s.chars().map(|c| c.to_digit(10).ok_or_else(bad)).collect::<Result<_>>()?
        };
        Permutation::new(values)
    }
}

/// Descent count and the 1-based descent positions `{ j : pi(j) > pi(j+1) }`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Descents {
    pub count: usize,
    pub positions: Vec<usize>,
}

pub fn descents(perm: &[u32]) -> Result<Descents> {
    let perm = Permutation::new(perm.to_vec())?;
    let positions: Vec<usize> =
        perm.0.windows(2).enumerate().filter(|(_, w)| w[0] > w[1]).map(|(j, _)| j + 1).collect();
    Ok(Descents { count: positions.len(), positions })
}

/// Order within each bucket.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BucketOrder {
    /// Realizes `W(upper:kappa)`.
    Increasing,
    /// Realizes `W(lower:kappa)`.
    Decreasing,
}

/// `n` i.i.d. uniform bucket labels in `0..=kappa`.
pub fn allocate(kappa: usize, n: usize, rng: &mut impl RngCore) -> Vec<u32> {
    (0..n).map(|_| rng.gen_range(0..=kappa as u32)).collect()
}

/// Concatenates the buckets in order, sorting within each by `order`.
/// Integer `i` goes to bucket `labels[i - 1]`.
pub fn arrange(labels: &[u32], kappa: usize, order: BucketOrder, out: &mut Vec<u32>) {
    out.clear();
    for bucket in 0..=kappa as u32 {
        let members = labels.iter().enumerate().filter(|(_, &b)| b == bucket).map(|(i, _)| i as u32 + 1);
        match order {
            BucketOrder::Increasing => out.extend(members),
            BucketOrder::Decreasing => {
                let start = out.len();
                out.extend(members);
                out[start..].reverse();
            }
        }
    }
}

/// Bucket sorting with `kappa + 1` buckets.
pub fn bucket_sort(kappa: usize, n: usize, rng: &mut impl RngCore, order: BucketOrder) -> Permutation {
    let labels = allocate(kappa, n, rng);
    let mut out = Vec::with_capacity(n);
    arrange(&labels, kappa, order, &mut out);
    Permutation(out)
}

/// The exchangeable arrangement: label `i` gets an i.i.d. uniform key and
/// `i` precedes `j` when its key is smaller.
///
/// Keys are 64-bit draws. A key equal to an earlier one is redrawn, which
/// keeps the ordering strict and leaves earlier labels untouched.
#[derive(Debug, Clone, Default)]
pub struct ExchangeableArrangement {
    keys: Vec<u64>,
}

impl ExchangeableArrangement {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn extend_to(&mut self, n: usize, rng: &mut impl RngCore) {
        while self.keys.len() < n {
            let mut key = rng.next_u64();
            while self.keys.contains(&key) {
                key = rng.next_u64();
            }
            self.keys.push(key);
        }
    }

    /// `pi_m` for `m <= len()`: labels `1..=m` listed by increasing key.
    pub fn permutation(&self, m: usize) -> Permutation {
        let mut labels: Vec<u32> = (1..=m as u32).collect();
        labels.sort_unstable_by_key(|&i| self.keys[i as usize - 1]);
        Permutation(labels)
    }
}

pub fn exchangeable_sample(n: usize, rng: &mut impl RngCore) -> Permutation {
    let mut arrangement = ExchangeableArrangement::new();
    arrangement.extend_to(n, rng);
    arrangement.permutation(n)
}

/// Exact mean and variance of `D` under the uniform law on `Perm(n)`, from
/// the Eulerian row `<n k> / n!`.
pub fn exact_descent_moments(table: &EulerianTable, n: usize) -> Result<(Rational, Rational)> {
    let row = table.row(n)?;
    let total = int(factorial(n as u64));
    let moment = |p: u32| -> Rational {
        row.iter().enumerate().map(|(k, e)| int(e * num_traits::pow(BigInt::from(k), p as usize))).sum::<Rational>()
            / &total
    };
    let mean = moment(1);
    let variance = moment(2) - &mean * &mean;
    Ok((mean, variance))
}

/// Same quantities by listing every permutation; small `n` only.
pub fn enumerated_descent_moments(n: usize) -> Result<(Rational, Rational)> {
    if n > 9 {
        return Err(Error::TooLarge { n, max: 9 });
    }
    let mut counts = vec![0u64; n];
    for p in Permutation::all(n) {
        counts[p.descent_count()] += 1;
    }
    let total = int(factorial(n as u64));
    let mean: Rational = counts.iter().enumerate().map(|(k, &c)| int(k as u64 * c)).sum::<Rational>() / &total;
    let second: Rational = counts.iter().enumerate().map(|(k, &c)| int((k * k) as u64 * c)).sum::<Rational>() / &total;
    Ok((mean.clone(), second - &mean * &mean))
}

/// Monte Carlo moments of `D(Pi_n)` for the exchangeable arrangement.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentsReport {
    pub n: usize,
    pub moments: HistogramMoments,
    /// `(n - 1) / 2`.
    pub stated_mean: Rational,
    /// `(n - 1) / 12`, the formula as usually quoted.
    pub stated_variance: Rational,
    pub exact_mean: Rational,
    pub exact_variance: Rational,
    pub mean_z: f64,
    pub variance_z_stated: f64,
    pub variance_z_exact: f64,
}

impl MomentsReport {
    /// Whether the quoted variance formula differs from the exact variance.
    pub fn stated_variance_is_exact(&self) -> bool {
        self.stated_variance == self.exact_variance
    }
}

pub fn descent_moments(table: &EulerianTable, n: usize, trials: u64, rng: &mut impl RngCore) -> Result<MomentsReport> {
    if trials < 1000 {
        return Err(Error::Precondition(format!("at least 1000 trials needed, got {trials}")));
    }
    if n == 0 {
        return Err(Error::InvalidVertex { n, k: 0 });
    }
    let mut counts = vec![0u64; n];
    let mut arrangement = ExchangeableArrangement::new();
    for _ in 0..trials {
        arrangement.keys.clear();
        arrangement.extend_to(n, rng);
        counts[arrangement.permutation(n).descent_count()] += 1;
    }
    let moments = HistogramMoments::from_counts(&counts);
    let (exact_mean, exact_variance) = exact_descent_moments(table, n)?;
    let stated_mean = crate::arith::ratio(n - 1, 2);
    let stated_variance = crate::arith::ratio(n - 1, 12);
    Ok(MomentsReport {
        n,
        mean_z: moments.mean_z(to_f64(&stated_mean)),
        variance_z_stated: moments.variance_z(to_f64(&stated_variance)),
        variance_z_exact: moments.variance_z(to_f64(&exact_variance)),
        moments,
        stated_mean,
        stated_variance,
        exact_mean,
        exact_variance,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlnReport {
    pub kappa: usize,
    pub trials: u64,
    /// `(n, fraction of trials with D(Pi^kappa_n) = kappa)` for `n = 1..=n_max`.
    pub trajectory: Vec<(usize, f64)>,
}

impl LlnReport {
    pub fn final_fraction(&self) -> f64 {
        self.trajectory.last().map_or(0.0, |t| t.1)
    }
}

/// Fraction of bucket-sort arrangements that have used all `kappa` possible
/// descents by level `n`, for every `n` up to `n_max`.
pub fn law_of_large_numbers_witness(
    kappa: usize,
    n_max: usize,
    trials: u64,
    rng: &mut impl RngCore,
) -> Result<LlnReport> {
    if n_max < 4 * (kappa + 1) {
        return Err(Error::Precondition(format!("n_max must be at least 4 (kappa + 1) = {}", 4 * (kappa + 1))));
    }
    let mut hits = vec![0u64; n_max];
    let mut out = Vec::with_capacity(n_max);
    for _ in 0..trials {
        let labels = allocate(kappa, n_max, rng);
        for n in 1..=n_max {
            arrange(&labels[..n], kappa, BucketOrder::Increasing, &mut out);
            if out.windows(2).filter(|w| w[0] > w[1]).count() == kappa {
                hits[n - 1] += 1;
            }
        }
    }
    let trajectory = hits.iter().enumerate().map(|(i, &h)| (i + 1, h as f64 / trials as f64)).collect();
    Ok(LlnReport { kappa, trials, trajectory })
}

/// Observed vs expected count for one cell of a multinomial.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub label: String,
    pub count: u64,
    pub expected: Rational,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinReport {
    pub n: usize,
    pub trials: u64,
    pub cells: Vec<Cell>,
}

impl BinReport {
    pub fn max_abs_z(&self) -> f64 {
        self.cells.iter().map(|c| c.z.abs()).fold(0.0, f64::max)
    }
}

/// Bins `floor(Y_1 + ... + Y_n)` for uniform `Y_i` and compares each bin with
/// `<n k> / n!`.
pub fn uniform_sum_witness(table: &EulerianTable, n: usize, trials: u64, rng: &mut impl RngCore) -> Result<BinReport> {
    let row = table.row(n)?;
    let mut counts = vec![0u64; n];
    for _ in 0..trials {
        let s: f64 = (0..n).map(|_| rng.gen::<f64>()).sum();
        let bin = (s as usize).min(n - 1);
        counts[bin] += 1;
    }
    let total = factorial(n as u64);
    let cells = counts
        .iter()
        .enumerate()
        .map(|(k, &count)| {
            let expected = Rational::new(row[k].clone(), total.clone());
            Cell { label: format!("{k}"), count, z: binomial_z(count, trials, to_f64(&expected)), expected }
        })
        .collect();
    Ok(BinReport { n, trials, cells })
}

/// Per-permutation comparison of a sampler against `W(n, D(pi))(theta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalReport {
    pub theta: BoundaryParam,
    pub n: usize,
    pub trials: u64,
    /// One cell per permutation of `[n]`, in lexicographic order.
    pub cells: Vec<Cell>,
    /// `max |frequency - W|`.
    pub max_deviation: f64,
    pub chi_square: f64,
    pub chi_square_dof: usize,
    /// Wilson-Hilferty score of the within-descent-class homogeneity
    /// statistic; large values would contradict descent sufficiency.
    pub sufficiency_z: f64,
}

impl EmpiricalReport {
    pub fn max_abs_z(&self) -> f64 {
        self.cells.iter().map(|c| c.z.abs()).fold(0.0, f64::max)
    }
}

/// Largest `n` for which [`empirical_vs_exact`] tabulates `Perm(n)`.
pub const EMPIRICAL_MAX_N: usize = 7;

/// Samples `Pi_n` under `theta` (bucket sort for `upper`, reversed buckets for
/// `lower`, uniform keys for `half`) and tabulates every permutation.
pub fn empirical_vs_exact(
    theta: BoundaryParam,
    n: usize,
    trials: u64,
    rng: &mut impl RngCore,
) -> Result<EmpiricalReport> {
    if n == 0 || n > EMPIRICAL_MAX_N {
        return Err(Error::TooLarge { n, max: EMPIRICAL_MAX_N });
    }
    theta.check_cap(crate::boundary::DEFAULT_KAPPA_CAP)?;
    let total: usize = (1..=n).product();
    let mut counts = vec![0u64; total];
    let mut labels = vec![0u32; n];
    let mut out = Vec::with_capacity(n);
    let mut arrangement = ExchangeableArrangement::new();
    for _ in 0..trials {
        let rank = match theta {
            BoundaryParam::Upper(kappa) | BoundaryParam::Lower(kappa) => {
                for l in labels.iter_mut() {
                    *l = rng.gen_range(0..=kappa as u32);
                }
                let order = if matches!(theta, BoundaryParam::Upper(_)) {
                    BucketOrder::Increasing
                } else {
                    BucketOrder::Decreasing
                };
                arrange(&labels, kappa, order, &mut out);
                rank_of(&out)
            }
            BoundaryParam::Half => {
                arrangement.keys.clear();
                arrangement.extend_to(n, rng);
                arrangement.permutation(n).rank()
            }
        };
        counts[rank] += 1;
    }

    let expected_by_d: Vec<Rational> = (0..n).map(|k| extreme_entry(theta, n, k)).collect();
    let mut cells = Vec::with_capacity(total);
    let mut max_deviation = 0.0f64;
    let mut chi_square = 0.0;
    let mut dof = 0usize;
    let mut class_counts: Vec<Vec<u64>> = vec![Vec::new(); n];
    for (rank, &count) in counts.iter().enumerate() {
        let perm = Permutation::from_rank(n, rank);
        let d = perm.descent_count();
        let expected = expected_by_d[d].clone();
        let p = to_f64(&expected);
        let freq = count as f64 / trials as f64;
        max_deviation = max_deviation.max((freq - p).abs());
        if p > 0.0 {
            let e = p * trials as f64;
            chi_square += (count as f64 - e) * (count as f64 - e) / e;
            dof += 1;
            class_counts[d].push(count);
        }
        cells.push(Cell { label: format!("{perm}"), count, z: binomial_z(count, trials, p), expected });
    }
    dof = dof.saturating_sub(1);

    // Homogeneity of counts inside each descent class.
    let mut homogeneity = 0.0;
    let mut homogeneity_dof = 0usize;
    for class in class_counts.iter().filter(|c| c.len() > 1) {
        let mean = class.iter().sum::<u64>() as f64 / class.len() as f64;
        if mean > 0.0 {
            homogeneity += class.iter().map(|&c| (c as f64 - mean) * (c as f64 - mean) / mean).sum::<f64>();
            homogeneity_dof += class.len() - 1;
        }
    }
    Ok(EmpiricalReport {
        theta,
        n,
        trials,
        cells,
        max_deviation,
        chi_square,
        chi_square_dof: dof,
        sufficiency_z: chi_square_z(homogeneity, homogeneity_dof as f64),
    })
}

/// Goodness of fit of the exchangeable sampler to the uniform law on
/// `Perm(n)`: Wilson-Hilferty score of Pearson's statistic.
pub fn uniformity_z(n: usize, trials: u64, rng: &mut impl RngCore) -> Result<f64> {
    let report = empirical_vs_exact(BoundaryParam::Half, n, trials, rng)?;
    Ok(chi_square_z(report.chi_square, report.chi_square_dof as f64))
}

/// `count` as a fraction, for exact reporting of tallies.
pub fn frequency(count: u64, trials: u64) -> Rational {
    if trials == 0 {
        return Rational::zero();
    }
    Rational::new(BigInt::from(count), BigInt::from(trials))
}
