//! Exact scalars and the handful of integer functions the formulas need.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational in canonical form (positive denominator, reduced).
pub type Rational = BigRational;

/// `C(a, b)`, with the convention `C(a, b) = 0` whenever `b < 0` or `b > a`.
///
/// `a` may be negative only in the sense that the result is then zero for
/// every `b`; the formulas in this crate never need the generalized binomial.
pub fn binomial(a: i64, b: i64) -> BigInt {
    if b < 0 || a < 0 || b > a {
        return BigInt::zero();
    }
    let b = b.min(a - b);
    let mut acc = BigInt::one();
    for i in 0..b {
        acc *= a - i;
        acc /= i + 1;
    }
    acc
}

pub fn factorial(n: u64) -> BigInt {
    (2..=n).fold(BigInt::one(), |acc, i| acc * i)
}

pub fn pow(base: u64, exp: u32) -> BigInt {
    num_traits::pow(BigInt::from(base), exp as usize)
}

pub fn ratio(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Rational {
    Rational::new(numer.into(), denom.into())
}

pub fn int(n: impl Into<BigInt>) -> Rational {
    Rational::from_integer(n.into())
}

/// Best-effort conversion for reporting; exact comparisons never go through this.
pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or_else(|| if x.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY })
}

/// `10^-digits` as an exact rational, the usual shape of a tolerance.
pub fn ten_to_minus(digits: u32) -> Rational {
    Rational::new(BigInt::one(), num_traits::pow(BigInt::from(10u32), digits as usize))
}


/// Solves the square system `a x = b` exactly by Gaussian elimination.
/// Returns `None` when `a` is singular.
pub fn solve(
    mut a: alloc::vec::Vec<alloc::vec::Vec<Rational>>,
    mut b: alloc::vec::Vec<Rational>,
) -> Option<alloc::vec::Vec<Rational>> {
    let size = b.len();
    debug_assert!(a.len() == size && a.iter().all(|r| r.len() == size));
    for col in 0..size {
        let pivot = (col..size).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let pivot_row = a[col].clone();
        for r in 0..size {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = &a[r][col] / &pivot_row[col];
            for (x, p) in a[r][col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= &factor * p;
            }
            let delta = &factor * &b[col];
            b[r] -= delta;
        }
    }
    Some((0..size).map(|i| &b[i] / &a[i][i]).collect())
}

/// Indices of a maximal set of linearly independent rows, chosen greedily
/// from the top.
pub fn independent_rows(rows: &[alloc::vec::Vec<Rational>]) -> alloc::vec::Vec<usize> {
    let mut basis: alloc::vec::Vec<(usize, alloc::vec::Vec<Rational>)> = alloc::vec::Vec::new();
    let mut chosen = alloc::vec::Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let mut r = row.clone();
        for (pc, b) in &basis {
            if !r[*pc].is_zero() {
                let factor = &r[*pc] / &b[*pc];
                for (x, y) in r.iter_mut().zip(b) {
                    *x -= &factor * y;
                }
            }
        }
        if let Some(pc) = r.iter().position(|x| !x.is_zero()) {
            basis.push((pc, r));
            chosen.push(i);
        }
    }
    chosen
}

#[cfg(test)]
mod solve_tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn small_systems() {
        let a = vec![vec![int(2), int(1)], vec![int(1), int(3)]];
        assert_eq!(solve(a, vec![int(3), int(5)]).unwrap(), vec![ratio(4, 5), ratio(7, 5)]);
        let singular = vec![vec![int(1), int(2)], vec![int(2), int(4)]];
        assert!(solve(singular.clone(), vec![int(1), int(2)]).is_none());
        assert_eq!(independent_rows(&singular), vec![0]);
        let rows = vec![vec![int(0), int(0)], vec![int(1), int(1)], vec![int(2), int(2)], vec![int(0), int(1)]];
        assert_eq!(independent_rows(&rows), vec![1, 3]);
    }
}
