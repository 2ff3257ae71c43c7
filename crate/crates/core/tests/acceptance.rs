//! Acceptance suite. Each criterion prints one `PASS`/`FAIL` line; run with
//! `cargo test -p eulerian-core --test acceptance -- --nocapture --test-threads 1`
//! to see them in order.
//!
//! Statistical criteria use fixed seeds, so every line is reproducible.

use std::collections::{BTreeMap, HashSet};
use std::time::{Duration, Instant};

use eulerian_core::arith::{binomial, factorial, int, pow, ratio, ten_to_minus, to_f64};
use eulerian_core::boundary::{
    check_extreme, extreme_solution, martin_limit_witness, params_up_to, saturation_witness, truncated_solution,
    KappaSchedule,
};
use eulerian_core::chain::{all_standard_paths, coupled_run, left_edge_hits, path_to_perm, perm_to_path};
use eulerian_core::reconstruct::{
    decompose, decompose_exact, nabla, synthesize, LeftColumn, LimitConfig, LimitDecomposition,
};
use eulerian_core::sampler::{
    descent_moments, empirical_vs_exact, enumerated_descent_moments, exact_descent_moments, uniform_sum_witness,
    uniformity_z, Permutation, RngStream,
};
use eulerian_core::triangle::{eulerian_explicit, verify_worpitzky};
use eulerian_core::{BoundaryParam, EulerianTable, Rational};
use num_bigint::BigInt;
use num_traits::Signed;

/// Two-sided per-cell bound for Monte Carlo comparisons.
const SIGMA: f64 = 4.0;
/// One-sided bound on Wilson-Hilferty chi-square scores (about 1e-7 each).
const CHI_Z: f64 = 5.2;
const MC_TRIALS: u64 = 1_000_000;

fn report(id: u32, name: &str, passed: bool, detail: impl AsRef<str>) -> bool {
    println!("criterion {id:>2} [{}] {name}: {}", if passed { "PASS" } else { "FAIL" }, detail.as_ref());
    passed
}

fn within(start: Instant, budget: Duration) -> (bool, String) {
    let took = start.elapsed();
    (took < budget, format!("{:.3}s (< {}s)", took.as_secs_f64(), budget.as_secs()))
}

/// Descent counts of every permutation, tallied directly.
fn brute_force_row(n: usize) -> Vec<BigInt> {
    let mut row = vec![BigInt::from(0); n];
    for p in Permutation::all(n) {
        row[p.descent_count()] += 1;
    }
    row
}

#[test]
fn c01_exact_triangle() {
    let start = Instant::now();
    let table = EulerianTable::with_rows(30);
    let display: [&[u32]; 6] =
        [&[1], &[1, 1], &[1, 4, 1], &[1, 11, 11, 1], &[1, 26, 66, 26, 1], &[1, 57, 302, 302, 57, 1]];
    let mut ok = display.iter().enumerate().all(|(i, want)| {
        let got = table.row(i + 1).unwrap();
        got.iter().map(|x| x.to_string()).collect::<Vec<_>>() == want.iter().map(|x| x.to_string()).collect::<Vec<_>>()
    });
    let mut checked = 0;
    for n in 1..=30 {
        let row = table.row(n).unwrap();
        for k in 0..n {
            ok &= row[k] == eulerian_explicit(n, k as i64).unwrap();
            ok &= row[k] == row[n - 1 - k];
            checked += 1;
        }
        ok &= row.iter().sum::<BigInt>() == factorial(n as u64);
    }
    for n in 1..=8 {
        ok &= table.row(n).unwrap() == brute_force_row(n).as_slice();
    }
    let (fast, took) = within(start, Duration::from_secs(1));
    assert!(report(
        1,
        "exact triangle",
        ok && fast,
        format!("rows 1-6 as displayed, {checked} entries agree (recursion/explicit/symmetry/n!), {took}")
    ));
}

#[test]
fn c02_worpitzky() {
    let start = Instant::now();
    let table = EulerianTable::with_rows(20);
    let mut ok = true;
    for n in 1..=20 {
        for kappa in 0..=10 {
            ok &= verify_worpitzky(&table, n, kappa).unwrap();
            // x^n = sum_k <n k> C(x + k, n) at x = kappa + 1.
            let x = kappa as i64 + 1;
            let rhs: BigInt =
                (0..n).map(|k| table.entry(n, k as i64).unwrap() * binomial(x + k as i64, n as i64)).sum();
            ok &= rhs == pow(x as u64, n as u32);
        }
    }
    let (fast, took) = within(start, Duration::from_secs(1));
    assert!(report(2, "Worpitzky identity", ok && fast, format!("n <= 20, kappa <= 10, {took}")));
}

#[test]
fn c03_extreme_solutions() {
    let start = Instant::now();
    let rows = 25;
    let table = EulerianTable::with_rows(rows + 1);
    let params = params_up_to(10);
    let mut failures = Vec::new();
    for &theta in &params {
        for check in check_extreme(&table, theta, rows).unwrap() {
            if !check.passed {
                failures.push(format!("{theta} {}: {}", check.name, check.detail));
            }
        }
        // Closed forms, evaluated here without the library.
        let w = extreme_solution(theta, rows).unwrap();
        for n in 1..=rows {
            for k in 0..n {
                let (n_, k_) = (n as i64, k as i64);
                let want = match theta {
                    BoundaryParam::Upper(c) => {
                        Rational::new(binomial(n_ + c as i64 - k_, n_), pow(c as u64 + 1, n as u32))
                    }
                    BoundaryParam::Lower(c) => {
                        Rational::new(binomial(c as i64 + k_ + 1, n_), pow(c as u64 + 1, n as u32))
                    }
                    BoundaryParam::Half => Rational::new(1.into(), factorial(n as u64)),
                };
                if *w.get(n, k) != want {
                    failures.push(format!("{theta} entry ({n},{k})"));
                }
            }
        }
    }
    let (fast, took) = within(start, Duration::from_secs(5));
    let detail = match failures.first() {
        Some(f) => format!("{} failures, first: {f}", failures.len()),
        None => format!("{} parameters x {rows} rows, all checks exact, {took}", params.len()),
    };
    assert!(report(3, "extreme solutions", failures.is_empty() && fast, detail));
}

#[test]
fn c04_nabla_roundtrip() {
    let rows = 25;
    let mut ok = true;
    for theta in params_up_to(10) {
        let w = extreme_solution(theta, rows).unwrap();
        ok &= nabla(&LeftColumn::new(w.left_column()).unwrap()) == *w;
    }
    let ones = nabla(&LeftColumn::new(vec![int(1); rows]).unwrap());
    let standard = ones == *extreme_solution(BoundaryParam::Upper(0), rows).unwrap();
    let inv_fact =
        nabla(&LeftColumn::new((1..=rows).map(|n| Rational::new(1.into(), factorial(n as u64))).collect()).unwrap());
    let half = inv_fact == *extreme_solution(BoundaryParam::Half, rows).unwrap();
    assert!(report(
        4,
        "nabla roundtrip",
        ok && standard && half,
        format!("21 extreme columns roundtrip: {ok}; ones -> upper:0: {standard}; 1/n! -> half: {half}")
    ));
}

#[test]
fn c05_martin_limits() {
    let table = EulerianTable::with_rows(200);
    let tol = ten_to_minus(6);
    let mut ok = true;
    let mut worst = 0.0f64;
    for kappa in 0..=3 {
        for schedule in [KappaSchedule::Constant(kappa), KappaSchedule::Mirrored(kappa)] {
            let r = martin_limit_witness(&table, schedule, 4, &tol, 60).unwrap();
            ok &= r.nonincreasing() && r.converged();
            worst = worst.max(to_f64(r.final_deviation().unwrap()));
        }
    }
    // The middle schedule alternates parity classes; bound pinned from exact runs.
    let middle_tol = ten_to_minus(4);
    let middle = martin_limit_witness(&table, KappaSchedule::Middle, 4, &middle_tol, 200).unwrap();
    let middle_ok = middle.nonincreasing_by_parity() && middle.converged_at.is_some_and(|n| n <= 190);
    let saturation_min = (0..=3)
        .map(|kappa| to_f64(&saturation_witness(&table, kappa, 60).unwrap().last().unwrap().1))
        .fold(f64::INFINITY, f64::min);
    let saturation_ok = saturation_min > 0.999;
    assert!(report(
        5,
        "Martin limits",
        ok && middle_ok && saturation_ok,
        format!(
            "constant/mirrored kappa <= 3 monotone, worst dev at N=60 {worst:.2e} (< 1e-6): {ok}; \
             middle below 1e-4 from N={:?}, dev at N=200 {:.2e}: {middle_ok}; min <N,kappa>/(kappa+1)^N at N=60 {saturation_min:.9}",
            middle.converged_at,
            to_f64(middle.final_deviation().unwrap())
        )
    ));
}

#[test]
fn c06_monotonicity() {
    let table = EulerianTable::with_rows(12);
    let mut ok = true;
    for big_n in 1..=12 {
        let columns: Vec<Vec<Rational>> = (0..big_n)
            .map(|kappa| {
                let v = truncated_solution(&table, big_n, kappa, big_n).unwrap();
                let col = v.left_column();
                // Independent route: exact chain propagation.
                ok &= col == left_edge_hits(&table, big_n, kappa).unwrap();
                col
            })
            .collect();
        for n in 0..big_n {
            ok &= columns.windows(2).all(|w| w[1][n] <= w[0][n]);
        }
    }
    let mut rng = RngStream::new(6);
    let mut runs = 0;
    let mut violations = 0;
    for (a, b) in [(0, 9), (2, 7), (4, 5)] {
        for _ in 0..10_000 {
            runs += 1;
            if !coupled_run(&table, 10, a, b, &mut rng).unwrap().ordering_holds() {
                violations += 1;
            }
        }
    }
    assert!(report(
        6,
        "exact monotonicity",
        ok && violations == 0,
        format!("V(n,0) nonincreasing in kappa for N <= 12: {ok}; {violations} ordering violations in {runs} coupled runs at N=10")
    ));
}

#[test]
fn c07_bijection() {
    let table = EulerianTable::with_rows(8);
    let mut ok = true;
    for n in 1..=7 {
        for p in Permutation::all(n) {
            let path = perm_to_path(&p);
            ok &= path.end().k() == p.descent_count();
            ok &= path_to_perm(&path).unwrap() == p;
            ok &= perm_to_path(&path_to_perm(&path).unwrap()) == path;
        }
        let mut by_end: BTreeMap<usize, HashSet<Permutation>> = BTreeMap::new();
        for path in all_standard_paths(n).unwrap() {
            let p = path_to_perm(&path).unwrap();
            ok &= p.descent_count() == path.end().k();
            by_end.entry(path.end().k()).or_default().insert(p);
        }
        for k in 0..n {
            ok &= BigInt::from(by_end.get(&k).map_or(0, |s| s.len())) == table.row(n).unwrap()[k];
        }
    }
    // Every sigma in Perm(n - 1) with k descents has k + 1 preimages with k
    // descents and n - 1 - k with k + 1.
    let mut split_ok = true;
    for n in 2..=8 {
        let mut tally: BTreeMap<Vec<u32>, (usize, usize, usize)> = BTreeMap::new();
        for p in Permutation::all(n) {
            let sigma = p.project().unwrap();
            let e = tally.entry(sigma.as_slice().to_vec()).or_insert((sigma.descent_count(), 0, 0));
            if p.descent_count() == e.0 {
                e.1 += 1;
            } else if p.descent_count() == e.0 + 1 {
                e.2 += 1;
            } else {
                split_ok = false;
            }
        }
        split_ok &= tally.values().all(|&(k, keep, raise)| keep == k + 1 && raise == n - 1 - k);
    }
    assert!(report(
        7,
        "bijection",
        ok && split_ok,
        format!("roundtrips and <n,k> path classes for n <= 7: {ok}; preimage split for n <= 8: {split_ok}")
    ));
}

#[test]
fn c08_bucket_sort_law() {
    let start = Instant::now();
    let mut worst_z = 0.0f64;
    let mut worst_at = String::new();
    let mut worst_sufficiency = f64::NEG_INFINITY;
    let mut cells = 0;
    for kappa in 0..=3 {
        for n in 1..=6 {
            let mut rng = RngStream::replica(8, (kappa * 10 + n) as u64);
            let r = empirical_vs_exact(BoundaryParam::Upper(kappa), n, MC_TRIALS, &mut rng).unwrap();
            cells += r.cells.len();
            if r.max_abs_z() > worst_z {
                worst_z = r.max_abs_z();
                worst_at = format!("kappa={kappa} n={n}");
            }
            worst_sufficiency = worst_sufficiency.max(r.sufficiency_z);
        }
    }
    let (fast, took) = within(start, Duration::from_secs(60));
    let ok = worst_z <= SIGMA && worst_sufficiency <= CHI_Z;
    assert!(report(
        8,
        "bucket-sort law",
        ok && fast,
        format!(
            "{cells} cells, max |z| {worst_z:.2} at {worst_at} (<= {SIGMA}), worst sufficiency score {worst_sufficiency:.2} (<= {CHI_Z}), {took}"
        )
    ));
}

#[test]
fn c09_exchangeable() {
    let mut rng = RngStream::new(9);
    let uniform: Vec<f64> = (2..=4).map(|n| uniformity_z(n, MC_TRIALS, &mut rng).unwrap()).collect();
    let uniform_ok = uniform.iter().all(|&z| z <= CHI_Z);

    let table = EulerianTable::with_rows(20);
    let mut moments_ok = true;
    let mut lines = Vec::new();
    for n in [8, 10, 20] {
        let r = descent_moments(&table, n, MC_TRIALS, &mut rng).unwrap();
        moments_ok &= r.mean_z.abs() <= SIGMA && r.variance_z_exact.abs() <= SIGMA;
        moments_ok &= r.exact_variance == ratio(n + 1, 12);
        lines.push(format!(
            "n={n} mean z {:.2}, var {:.4} z vs exact (n+1)/12 {:.2}, z vs stated (n-1)/12 {:.1}",
            r.mean_z, r.moments.variance, r.variance_z_exact, r.variance_z_stated
        ));
    }
    // Small-n enumeration: the stated variance matches only at n = 1.
    let mut mismatch = Vec::new();
    for n in 1..=8 {
        let (mean, var) = enumerated_descent_moments(n).unwrap();
        moments_ok &= (mean.clone(), var.clone()) == exact_descent_moments(&table, n).unwrap();
        moments_ok &= mean == ratio(n - 1, 2);
        if var != ratio(n - 1, 12) {
            mismatch.push(n);
        }
    }
    assert!(report(
        9,
        "exchangeable arrangement",
        uniform_ok && moments_ok,
        format!(
            "uniformity scores n=2..4 {uniform:.2?} (<= {CHI_Z}); {}; stated variance (n-1)/12 disagrees with enumeration at n = {mismatch:?}",
            lines.join("; ")
        )
    ));
}

#[test]
fn c10_uniform_sum() {
    let table = EulerianTable::with_rows(6);
    let mut rng = RngStream::new(10);
    let zs: Vec<f64> =
        [3, 6].iter().map(|&n| uniform_sum_witness(&table, n, MC_TRIALS, &mut rng).unwrap().max_abs_z()).collect();
    assert!(report(
        10,
        "uniform-sum identity",
        zs.iter().all(|&z| z <= SIGMA),
        format!("max |z| for n=3, 6: {zs:.2?} (<= {SIGMA})")
    ));
}

fn mixtures() -> Vec<Vec<(Rational, BoundaryParam)>> {
    use BoundaryParam::{Half, Lower, Upper};
    vec![
        vec![(int(1), Half)],
        vec![(int(1), Upper(2))],
        vec![(ratio(3, 10), Upper(0)), (ratio(7, 10), Lower(0))],
        vec![(ratio(1, 4), Half), (ratio(3, 4), Upper(1))],
        vec![(ratio(1, 2), Lower(3)), (ratio(1, 3), Upper(3)), (ratio(1, 6), Half)],
        vec![(ratio(1, 10), Upper(0)), (ratio(2, 10), Upper(3)), (ratio(3, 10), Lower(1)), (ratio(4, 10), Half)],
        vec![(ratio(1, 3), Lower(2)), (ratio(1, 6), Lower(3)), (ratio(1, 4), Upper(1)), (ratio(1, 4), Upper(2))],
        vec![(ratio(1, 7), Upper(1)), (ratio(2, 7), Lower(1)), (ratio(3, 7), Upper(2)), (ratio(1, 7), Half)],
    ]
}

#[test]
fn c11_decomposition() {
    let budget = 40;
    let cut = 3;
    let table = EulerianTable::with_rows(budget);
    let tol = ten_to_minus(3);
    let mut exact_ok = true;
    let mut limit_ok = true;
    let mut worst_gap = Rational::default();
    let list = mixtures();
    for parts in &list {
        let v = synthesize(parts, budget).unwrap();
        let support: Vec<BoundaryParam> = parts.iter().map(|p| p.1).collect();
        match decompose_exact(&v, &support) {
            Ok(w) => exact_ok &= parts.iter().all(|(p, theta)| w.weight(*theta) == *p) && w.total() == int(1),
            Err(_) => exact_ok = false,
        }
        match decompose(&table, &v, cut, budget, &LimitConfig::default()).unwrap() {
            LimitDecomposition::Determined(w) => {
                for theta in params_up_to(cut) {
                    let want = parts.iter().find(|p| p.1 == theta).map_or(Rational::default(), |p| p.0.clone());
                    let gap = (w.weight(theta) - want).abs();
                    if gap > worst_gap {
                        worst_gap = gap;
                    }
                }
            }
            LimitDecomposition::Indeterminate { .. } => limit_ok = false,
        }
    }
    limit_ok &= worst_gap < tol;
    assert!(report(
        11,
        "decomposition",
        exact_ok && limit_ok,
        format!(
            "{} mixtures, exact recovery: {exact_ok}; limit mode at row budget {budget}, worst weight gap {:.2e} (< 1e-3): {limit_ok}",
            list.len(),
            to_f64(&worst_gap)
        )
    ));
}
