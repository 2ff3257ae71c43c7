//! Seeded commands: samplers and the backward chain. Output depends only on
//! the seed and the arguments.

use std::collections::BTreeMap;

use anyhow::{anyhow, bail, Result};
use clap::{Args, Subcommand, ValueEnum};
use eulerian_core::arith::to_f64;
use eulerian_core::boundary::extreme_entry;
use eulerian_core::chain::{
    coupled_run, left_edge_hits, path_to_perm, perm_to_path, propagate_exact, run_backward_chain, LabeledPath,
};
use eulerian_core::sampler::{
    bucket_sort, descent_moments, empirical_vs_exact, exchangeable_sample, frequency, law_of_large_numbers_witness,
    uniform_sum_witness, BucketOrder, EmpiricalReport, Permutation, RngStream, EMPIRICAL_MAX_N,
};
use eulerian_core::stats::{binomial_z, chi_square_z};
use eulerian_core::{BoundaryParam, EulerianTable, Rational, TriangleIndex};

use crate::output::{dec, rat, OutputRecord, Table};
use crate::{Ctx, Outcome};

/// Two-sided per-cell z bound for small tables.
const SIGMA: f64 = 4.0;
/// One-sided bound on chi-square scores.
const CHI_Z: f64 = 5.2;
const MAX_SAMPLES: usize = 100_000;

#[derive(Args, Clone)]
pub struct Trials {
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Order {
    Increasing,
    Decreasing,
}

#[derive(Subcommand)]
pub enum SampleCommand {
    /// Bucket sort with kappa + 1 buckets: per-permutation frequencies
    /// against W(upper:kappa) (increasing) or W(lower:kappa) (decreasing).
    Bucket {
        #[arg(long)]
        kappa: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Order::Increasing)]
        order: Order,
        /// Print this many sampled permutations instead of tabulating.
        #[arg(long)]
        samples: Option<usize>,
        #[command(flatten)]
        trials: Trials,
    },
    /// Uniform random order of i.i.d. keys, against the uniform law.
    Exchangeable {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        samples: Option<usize>,
        #[command(flatten)]
        trials: Trials,
    },
    /// Mean and variance of the descent count under exchangeable arrangement.
    Moments {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        trials: Trials,
    },
    /// Fraction of bucket sorts using all kappa descents, by level.
    Lln {
        #[arg(long)]
        kappa: usize,
        #[arg(long)]
        n_max: usize,
        #[command(flatten)]
        trials: Trials,
    },
    /// Integer parts of sums of n uniforms against <n k> / n!.
    UniformSum {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        trials: Trials,
    },
}

fn permutation_table(report: &EmpiricalReport) -> Table {
    let mut t = Table::new("permutations", &["perm", "descents", "count", "frequency", "expected", "z"]);
    for cell in &report.cells {
        let perm: Permutation = cell.label.parse().expect("labels are permutations");
        t.push(vec![
            cell.label.clone(),
            perm.descent_count().to_string(),
            cell.count.to_string(),
            rat(&frequency(cell.count, report.trials)),
            rat(&cell.expected),
            dec(cell.z),
        ]);
    }
    t
}

fn record_empirical(rec: &mut OutputRecord, report: &EmpiricalReport) {
    rec.table(permutation_table(report));
    let fit = chi_square_z(report.chi_square, report.chi_square_dof as f64);
    rec.check(
        "goodness-of-fit",
        fit <= CHI_Z,
        format!(
            "chi-square {} on {} dof, score {} (<= {CHI_Z}); max |z| {}, max deviation {}",
            dec(report.chi_square),
            report.chi_square_dof,
            dec(fit),
            dec(report.max_abs_z()),
            dec(report.max_deviation)
        ),
    );
    rec.check(
        "descent-sufficiency",
        report.sufficiency_z <= CHI_Z,
        format!("within-class homogeneity score {} (<= {CHI_Z})", dec(report.sufficiency_z)),
    );
}

fn samples_table(perms: impl Iterator<Item = Permutation>) -> Table {
    let mut t = Table::new("samples", &["index", "perm", "descents"]);
    for (i, p) in perms.enumerate() {
        t.push(vec![i.to_string(), p.to_string(), p.descent_count().to_string()]);
    }
    t
}

fn check_samples(samples: usize) -> Result<()> {
    if samples == 0 || samples > MAX_SAMPLES {
        bail!("--samples must lie in 1..={MAX_SAMPLES}");
    }
    Ok(())
}

fn check_tabulated(n: usize) -> Result<()> {
    if n == 0 || n > EMPIRICAL_MAX_N {
        bail!("tabulation needs 1 <= n <= {EMPIRICAL_MAX_N}; use --samples for larger n");
    }
    Ok(())
}

pub fn sample(c: &SampleCommand, ctx: &Ctx) -> Result<Outcome> {
    let seed = ctx.seed()?;
    let mut rng = RngStream::new(seed);
    let rec = match c {
        SampleCommand::Bucket { kappa, n, order, samples, trials } => {
            let mut rec = OutputRecord::seeded("sample bucket", seed);
            let order_name = format!("{order:?}").to_lowercase();
            rec.param("kappa", kappa).param("n", n).param("order", order_name);
            let theta = match order {
                Order::Increasing => BoundaryParam::Upper(*kappa),
                Order::Decreasing => BoundaryParam::Lower(*kappa),
            };
            theta.check_cap(eulerian_core::boundary::DEFAULT_KAPPA_CAP)?;
            rec.param("theta", theta);
            if let Some(s) = samples {
                check_samples(*s)?;
                let o = if *order == Order::Increasing { BucketOrder::Increasing } else { BucketOrder::Decreasing };
                rec.param("samples", s);
                rec.table(samples_table((0..*s).map(|_| bucket_sort(*kappa, *n, &mut rng, o))));
            } else {
                check_tabulated(*n)?;
                rec.param("trials", trials.trials);
                record_empirical(&mut rec, &empirical_vs_exact(theta, *n, trials.trials, &mut rng)?);
            }
            rec
        }
        SampleCommand::Exchangeable { n, samples, trials } => {
            let mut rec = OutputRecord::seeded("sample exchangeable", seed);
            rec.param("n", n);
            if let Some(s) = samples {
                check_samples(*s)?;
                rec.param("samples", s);
                rec.table(samples_table((0..*s).map(|_| exchangeable_sample(*n, &mut rng))));
            } else {
                check_tabulated(*n)?;
                rec.param("trials", trials.trials);
                record_empirical(&mut rec, &empirical_vs_exact(BoundaryParam::Half, *n, trials.trials, &mut rng)?);
            }
            rec
        }
        SampleCommand::Moments { n, trials } => {
            let table = EulerianTable::with_rows(*n);
            let r = descent_moments(&table, *n, trials.trials, &mut rng)?;
            let mut rec = OutputRecord::seeded("sample moments", seed);
            rec.param("n", n).param("trials", trials.trials);
            let mut t = Table::new("moments", &["quantity", "reference", "value", "monte_carlo", "z"]);
            t.push(vec!["mean".into(), "(n-1)/2".into(), rat(&r.stated_mean), dec(r.moments.mean), dec(r.mean_z)]);
            t.push(vec![
                "variance".into(),
                "exact".into(),
                rat(&r.exact_variance),
                dec(r.moments.variance),
                dec(r.variance_z_exact),
            ]);
            t.push(vec![
                "variance".into(),
                "(n-1)/12".into(),
                rat(&r.stated_variance),
                dec(r.moments.variance),
                dec(r.variance_z_stated),
            ]);
            rec.table(t);
            rec.check("mean", r.mean_z.abs() <= SIGMA, format!("|z| = {} (<= {SIGMA})", dec(r.mean_z.abs())));
            rec.check(
                "variance",
                r.variance_z_exact.abs() <= SIGMA,
                format!(
                    "against the exact variance {}: |z| = {} (<= {SIGMA})",
                    rat(&r.exact_variance),
                    dec(r.variance_z_exact.abs())
                ),
            );
            if !r.stated_variance_is_exact() {
                rec.param(
                    "note",
                    format!(
                        "(n-1)/12 = {} differs from the exact variance {}",
                        rat(&r.stated_variance),
                        rat(&r.exact_variance)
                    ),
                );
            }
            rec
        }
        SampleCommand::Lln { kappa, n_max, trials } => {
            let r = law_of_large_numbers_witness(*kappa, *n_max, trials.trials, &mut rng)?;
            let mut rec = OutputRecord::seeded("sample lln", seed);
            rec.param("kappa", kappa).param("n_max", n_max).param("trials", trials.trials);
            let table = EulerianTable::with_rows(*n_max);
            let mut t = Table::new("trajectory", &["n", "fraction", "exact"]);
            for (n, f) in &r.trajectory {
                // Exact chance of using every descent: <n kappa> W(n, kappa)(upper:kappa).
                let exact = if *n > *kappa {
                    extreme_entry(BoundaryParam::Upper(*kappa), *n, *kappa)
                        * Rational::from_integer(table.entry(*n, *kappa as i64)?)
                } else {
                    Rational::default()
                };
                t.push(vec![n.to_string(), dec(*f), rat(&exact)]);
            }
            rec.table(t);
            rec
        }
        SampleCommand::UniformSum { n, trials } => {
            if *n == 0 || *n > 170 {
                bail!("--n must lie in 1..=170");
            }
            let table = EulerianTable::with_rows(*n);
            let r = uniform_sum_witness(&table, *n, trials.trials, &mut rng)?;
            let mut rec = OutputRecord::seeded("sample uniform-sum", seed);
            rec.param("n", n).param("trials", trials.trials);
            let mut t = Table::new("bins", &["k", "count", "frequency", "expected", "z"]);
            for c in &r.cells {
                t.push(vec![
                    c.label.clone(),
                    c.count.to_string(),
                    rat(&frequency(c.count, trials.trials)),
                    rat(&c.expected),
                    dec(c.z),
                ]);
            }
            rec.table(t);
            rec.check("bins", r.max_abs_z() <= SIGMA, format!("max |z| = {} (<= {SIGMA})", dec(r.max_abs_z())));
            rec
        }
    };
    Ok(rec.into())
}

fn parse_vertex(s: &str) -> Result<TriangleIndex> {
    let t = s.trim().trim_start_matches('(').trim_end_matches(')');
    let (n, k) = t.split_once(',').ok_or_else(|| anyhow!("expected n,k, got {s:?}"))?;
    Ok(TriangleIndex::new(n.trim().parse()?, k.trim().parse()?)?)
}

/// `(1,0),(2,0),(3,1)` or `1,0 2,0 3,1`.
fn parse_vertices(s: &str) -> Result<Vec<TriangleIndex>> {
    let cleaned = s.replace("),(", ") (").replace(['(', ')'], "");
    cleaned.split_whitespace().map(parse_vertex).collect()
}

fn path_string(vertices: &[TriangleIndex]) -> String {
    vertices.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

#[derive(Args)]
pub struct Start {
    /// Starting vertex `n,k`.
    #[arg(long, value_parser = parse_vertex)]
    start: TriangleIndex,
}

#[derive(Subcommand)]
pub enum ChainCommand {
    /// Sample trajectories of the backward chain down to the root.
    Run {
        #[command(flatten)]
        start: Start,
        #[arg(long, default_value_t = 1)]
        runs: usize,
    },
    /// Exact marginal laws of the chain, row by row.
    Propagate {
        #[command(flatten)]
        start: Start,
        #[arg(long, default_value_t = 1)]
        down_to: usize,
    },
    /// Coupled chains from (N, kappa_a) and (N, kappa_b).
    Couple {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        kappa_a: usize,
        #[arg(long)]
        kappa_b: usize,
        #[arg(long, default_value_t = 10_000)]
        runs: usize,
    },
    /// The labeled path of a permutation, or the permutation of a path.
    Path {
        /// One-line notation, e.g. `7356241` or `3,1,2`.
        #[arg(long, conflicts_with_all = ["vertices", "labels"])]
        perm: Option<Permutation>,
        /// Vertices from the root, e.g. `(1,0),(2,0),(3,1)`.
        #[arg(long, requires = "labels")]
        vertices: Option<String>,
        /// Edge labels, one per step, comma separated.
        #[arg(long, value_delimiter = ',')]
        labels: Option<Vec<usize>>,
    },
}

const MAX_CHAIN_ROW: usize = 500;

fn check_start(v: TriangleIndex) -> Result<()> {
    if v.n() > MAX_CHAIN_ROW {
        bail!("start row must be at most {MAX_CHAIN_ROW}");
    }
    Ok(())
}

pub fn chain(c: &ChainCommand, ctx: &Ctx) -> Result<Outcome> {
    let rec = match c {
        ChainCommand::Run { start, runs } => {
            check_start(start.start)?;
            if *runs == 0 || *runs > MAX_SAMPLES {
                bail!("--runs must lie in 1..={MAX_SAMPLES}");
            }
            let seed = ctx.seed()?;
            let mut rng = RngStream::new(seed);
            let table = EulerianTable::with_rows(start.start.n());
            let mut rec = OutputRecord::seeded("chain run", seed);
            rec.param("start", start.start).param("runs", runs);
            let mut t = Table::new("paths", &["run", "path"]);
            for i in 0..*runs {
                let path = run_backward_chain(&table, start.start, &mut rng)?;
                t.push(vec![i.to_string(), path_string(&path)]);
            }
            rec.table(t);
            rec
        }
        ChainCommand::Propagate { start, down_to } => {
            check_start(start.start)?;
            let table = EulerianTable::with_rows(start.start.n());
            let mut rec = OutputRecord::new("chain propagate");
            rec.param("start", start.start).param("down_to", down_to);
            let mut t = Table::new("marginals", &["n", "k=0..."]);
            let mut mass_ok = true;
            for (n, row) in propagate_exact(&table, start.start, *down_to)? {
                mass_ok &= row.iter().sum::<Rational>() == Rational::from_integer(1.into());
                let mut cells = vec![n.to_string()];
                cells.extend(row.iter().map(rat));
                t.push(cells);
            }
            rec.table(t);
            rec.check("mass", mass_ok, "every row sums to 1");
            rec
        }
        ChainCommand::Couple { n, kappa_a, kappa_b, runs } => {
            if *n > MAX_CHAIN_ROW {
                bail!("--n must be at most {MAX_CHAIN_ROW}");
            }
            if *runs == 0 {
                bail!("--runs must be positive");
            }
            let seed = ctx.seed()?;
            let mut rng = RngStream::new(seed);
            let table = EulerianTable::with_rows(*n);
            let mut rec = OutputRecord::seeded("chain couple", seed);
            rec.param("n", n).param("kappa_a", kappa_a).param("kappa_b", kappa_b).param("runs", runs);
            let mut violations = 0usize;
            let mut hits_a = vec![0u64; *n];
            let mut hits_b = vec![0u64; *n];
            let mut merges: BTreeMap<String, u64> = BTreeMap::new();
            for _ in 0..*runs {
                let trace = coupled_run(&table, *n, *kappa_a, *kappa_b, &mut rng)?;
                if !trace.ordering_holds() {
                    violations += 1;
                }
                for level in 1..=*n {
                    let (a, b) = trace.hits_left_edge(level);
                    hits_a[level - 1] += a as u64;
                    hits_b[level - 1] += b as u64;
                }
                *merges.entry(trace.merge_level.map_or("none".into(), |m| format!("{m:04}"))).or_default() += 1;
            }
            let exact_a = left_edge_hits(&table, *n, *kappa_a)?;
            let exact_b = left_edge_hits(&table, *n, *kappa_b)?;
            let mut t =
                Table::new("left_edge", &["n", "exact_a", "frequency_a", "z_a", "exact_b", "frequency_b", "z_b"]);
            let trials = *runs as u64;
            for level in 1..=*n {
                let (ea, eb) = (&exact_a[level - 1], &exact_b[level - 1]);
                t.push(vec![
                    level.to_string(),
                    rat(ea),
                    rat(&frequency(hits_a[level - 1], trials)),
                    dec(binomial_z(hits_a[level - 1], trials, to_f64(ea))),
                    rat(eb),
                    rat(&frequency(hits_b[level - 1], trials)),
                    dec(binomial_z(hits_b[level - 1], trials, to_f64(eb))),
                ]);
            }
            rec.table(t);
            let mut m = Table::new("merge_levels", &["level", "count"]);
            for (level, count) in merges {
                m.push(vec![level.trim_start_matches('0').to_string(), count.to_string()]);
            }
            rec.table(m);
            rec.check("ordering", violations == 0, format!("{violations} violations in {runs} runs"));
            let exact_monotone = exact_a.iter().zip(&exact_b).all(|(a, b)| b <= a);
            rec.check("exact-monotonicity", exact_monotone, "V(n,0) for kappa_b never exceeds kappa_a");
            rec
        }
        ChainCommand::Path { perm, vertices, labels } => {
            let mut rec = OutputRecord::new("chain path");
            let (perm, path) = match (perm, vertices, labels) {
                (Some(p), None, None) => (p.clone(), perm_to_path(p)),
                (None, Some(v), Some(l)) => {
                    let path = LabeledPath::new(parse_vertices(v)?, l.clone())?;
                    (path_to_perm(&path)?, path)
                }
                _ => bail!("give --perm, or --vertices with --labels"),
            };
            rec.param("perm", &perm);
            let mut t = Table::new("path", &["step", "vertex", "label"]);
            for (i, v) in path.vertices().iter().enumerate() {
                let label = if i == 0 { String::new() } else { path.labels()[i - 1].to_string() };
                t.push(vec![i.to_string(), v.to_string(), label]);
            }
            rec.table(t);
            rec.param("descents", perm.descent_count()).param("path", path_string(path.vertices()));
            rec
        }
    };
    Ok(rec.into())
}
