//! Commands with exact, deterministic output.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Subcommand, ValueEnum};
use eulerian_core::arith::{factorial, ten_to_minus, to_f64};
use eulerian_core::boundary::{
    check_extreme, extreme_solution_with_cap, martin_limit_witness, params_up_to, saturation_witness, tilde_transform,
    KappaSchedule, TriangularArray, DEFAULT_KAPPA_CAP,
};
use eulerian_core::reconstruct::{
    decompose as limit_decompose, decompose_exact, membership, parse_component, synthesize, DecomposeError,
    LimitConfig, LimitDecomposition, MixtureWeights,
};
use eulerian_core::triangle::{eulerian_explicit, verify_dimension, verify_worpitzky, ENUMERATION_BOUND};
use eulerian_core::{BoundaryParam, EulerianTable, Rational};
use num_bigint::BigInt;
use num_traits::One;

use crate::arrayfile::{self, ArrayInput};
use crate::output::{dec, rat, OutputRecord, Table};
use crate::{Ctx, Outcome};

/// Largest row count accepted by the exact commands.
const MAX_ROWS: usize = 2000;

fn check_rows(rows: usize) -> Result<()> {
    if rows == 0 || rows > MAX_ROWS {
        bail!("--rows must lie in 1..={MAX_ROWS}, got {rows}");
    }
    Ok(())
}

/// `1e-9` style powers of ten, or any rational.
pub fn parse_tolerance(s: &str) -> Result<Rational> {
    if let Some(exp) = s.strip_prefix("1e-") {
        let digits: u32 = exp.parse().map_err(|_| anyhow!("bad tolerance {s:?}"))?;
        return Ok(ten_to_minus(digits));
    }
    let t = arrayfile::parse_rational(s)?;
    if t <= Rational::default() {
        bail!("tolerance must be positive, got {s:?}");
    }
    Ok(t)
}

/// A triangle as a ragged table, one row per `n`.
fn array_table(name: &str, array: &TriangularArray) -> Table {
    let mut t = Table::new(name, &["n", "k=0..."]);
    for (i, row) in array.rows().enumerate() {
        let mut cells = vec![(i + 1).to_string()];
        cells.extend(row.iter().map(rat));
        t.push(cells);
    }
    t
}

fn weights_table(name: &str, w: &MixtureWeights) -> Table {
    let mut t = Table::new(name, &["theta", "theta_value", "weight", "weight_decimal"]);
    for (theta, p) in &w.weights {
        t.push(vec![theta.to_string(), rat(&theta.theta()), rat(p), dec(to_f64(p))]);
    }
    t
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Formula {
    Recursion,
    Explicit,
}

#[derive(Args)]
pub struct TriangleArgs {
    /// Last row to print.
    #[arg(long, default_value_t = 6)]
    rows: usize,
    /// First row to print.
    #[arg(long, default_value_t = 1)]
    from: usize,
    #[arg(long, value_enum, default_value_t = Formula::Recursion)]
    formula: Formula,
    /// Cross-check recursion, explicit formula, row sums, symmetry, the
    /// Worpitzky identity and (for small rows) path counts.
    #[arg(long)]
    verify: bool,
    /// Largest kappa for the Worpitzky check.
    #[arg(long, default_value_t = 10)]
    kappa: usize,
}

pub fn triangle(a: &TriangleArgs) -> Result<Outcome> {
    check_rows(a.rows)?;
    if a.from == 0 || a.from > a.rows {
        bail!("--from must lie in 1..=--rows");
    }
    let table = EulerianTable::with_rows(a.rows);
    let mut rec = OutputRecord::new("triangle");
    rec.param("rows", a.rows).param("from", a.from).param("formula", format!("{:?}", a.formula).to_lowercase());

    let mut t = Table::new("eulerian", &["n", "k=0..."]);
    for n in a.from..=a.rows {
        let mut cells = vec![n.to_string()];
        match a.formula {
            Formula::Recursion => cells.extend(table.row(n)?.iter().map(|x| x.to_string())),
            Formula::Explicit => {
                for k in 0..n {
                    cells.push(eulerian_explicit(n, k as i64)?.to_string());
                }
            }
        }
        t.push(cells);
    }
    rec.table(t);

    if a.verify {
        rec.param("kappa", a.kappa);
        let mut explicit = None;
        let mut sums = None;
        let mut symmetric = None;
        for n in 1..=a.rows {
            let row = table.row(n)?;
            for k in 0..n {
                if explicit.is_none() && row[k] != eulerian_explicit(n, k as i64)? {
                    explicit = Some(format!("<{n} {k}> differs"));
                }
                if symmetric.is_none() && row[k] != row[n - 1 - k] {
                    symmetric = Some(format!("row {n} is not a palindrome"));
                }
            }
            if sums.is_none() && row.iter().sum::<BigInt>() != factorial(n as u64) {
                sums = Some(format!("row {n} does not sum to {n}!"));
            }
        }
        let ok_detail = |failure: Option<String>, what: String| (failure.is_none(), failure.unwrap_or(what));
        let (p, d) = ok_detail(explicit, format!("n <= {}", a.rows));
        rec.check("recursion-vs-explicit", p, d);
        let (p, d) = ok_detail(sums, format!("n <= {}", a.rows));
        rec.check("row-sums", p, d);
        let (p, d) = ok_detail(symmetric, format!("n <= {}", a.rows));
        rec.check("symmetry", p, d);

        let mut worpitzky = None;
        'outer: for n in 1..=a.rows {
            for kappa in 0..=a.kappa {
                if !verify_worpitzky(&table, n, kappa)? {
                    worpitzky = Some(format!("fails at n = {n}, kappa = {kappa}"));
                    break 'outer;
                }
            }
        }
        let (p, d) = ok_detail(worpitzky, format!("n <= {}, kappa <= {}", a.rows, a.kappa));
        rec.check("worpitzky", p, d);

        let bound = a.rows.min(ENUMERATION_BOUND);
        let mut paths = None;
        'paths: for n in 1..=bound {
            for k in 0..n {
                if !verify_dimension(&table, n, k)? {
                    paths = Some(format!("path count differs at ({n},{k})"));
                    break 'paths;
                }
            }
        }
        let (p, d) = ok_detail(paths, format!("standard paths enumerated for n <= {bound}"));
        rec.check("path-count", p, d);
    }
    Ok(rec.into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CheckLevel {
    None,
    All,
}

#[derive(Args)]
pub struct BoundaryArgs {
    /// `upper:K`, `half` or `lower:K`.
    #[arg(long)]
    theta: BoundaryParam,
    #[arg(long, default_value_t = 6)]
    rows: usize,
    #[arg(long, value_enum, default_value_t = CheckLevel::None)]
    check: CheckLevel,
    /// Also print the tilde transform `<n k> W(n, k)`.
    #[arg(long)]
    tilde: bool,
    #[arg(long, default_value_t = DEFAULT_KAPPA_CAP)]
    kappa_cap: usize,
}

pub fn boundary(a: &BoundaryArgs) -> Result<Outcome> {
    check_rows(a.rows)?;
    let w = extreme_solution_with_cap(a.theta, a.rows, a.kappa_cap)?.into_inner();
    let table = EulerianTable::with_rows(a.rows);
    let mut rec = OutputRecord::new("boundary");
    rec.param("theta", a.theta).param("theta_value", rat(&a.theta.theta())).param("rows", a.rows);
    rec.table(array_table("W", &w));
    if a.tilde {
        rec.table(array_table("tilde", &tilde_transform(&table, &w)?));
    }
    if a.check == CheckLevel::All {
        rec.param("check", "all");
        rec.checks(check_extreme(&table, a.theta, a.rows)?);
    }
    Ok(Outcome { record: rec, array: Some(w) })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exact,
    Limit,
}

#[derive(Args)]
pub struct DecomposeArgs {
    /// Array file (`rows=N` or `left=N`).
    input: Option<PathBuf>,
    /// Left column given inline, e.g. `1,1/2,1/6`.
    #[arg(long, conflicts_with = "input")]
    left: Option<String>,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    mode: Mode,
    /// Exact mode: candidate parameters, comma separated. Default: every
    /// parameter with kappa <= c for the largest c the rows can resolve.
    #[arg(long, value_delimiter = ',')]
    support: Vec<BoundaryParam>,
    /// Limit mode: largest kappa considered.
    #[arg(long, default_value_t = 3)]
    kappa_cut: usize,
    /// Limit mode: rows read from the input.
    #[arg(long, default_value_t = 40)]
    row_budget: usize,
    /// Limit mode: stabilization threshold, e.g. `1e-9` or `1/1000`.
    #[arg(long, default_value = "1e-9")]
    threshold: String,
    /// Limit mode: trailing rows compared.
    #[arg(long, default_value_t = 3)]
    window: usize,
}

/// Largest `params_up_to(c)` with no more entries than rows, cut to fit.
fn default_support(rows: usize) -> Vec<BoundaryParam> {
    let c = rows.saturating_sub(3) / 2;
    let mut s = params_up_to(c);
    s.truncate(rows);
    s
}

pub fn decompose(a: &DecomposeArgs, ctx: &Ctx) -> Result<Outcome> {
    let (input, source) = match (&a.input, &a.left) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            (
                arrayfile::parse(&text).with_context(|| format!("parsing {}", path.display()))?,
                path.display().to_string(),
            )
        }
        (None, Some(list)) => (ArrayInput::Left(arrayfile::parse_list(list)?), "--left".to_string()),
        _ => bail!("give an input file or --left"),
    };
    let v = input.into_array()?;
    let mut rec = OutputRecord::new("decompose");
    rec.param("input", source).param("rows", v.max_row()).param("mode", format!("{:?}", a.mode).to_lowercase());
    if ctx.strict {
        rec.param("strict", true);
    }
    rec.table(array_table("array", &v));

    let violation = membership(&v);
    rec.payload.verdict = Some(match &violation {
        None => "member".into(),
        Some(e) => format!("non-member: {e}"),
    });
    if ctx.strict {
        rec.check("membership", violation.is_none(), rec.payload.verdict.clone().unwrap_or_default());
    }
    if violation.is_some() {
        return Ok(Outcome { record: rec, array: Some(v) });
    }

    match a.mode {
        Mode::Exact => {
            let support = if a.support.is_empty() { default_support(v.max_row()) } else { a.support.clone() };
            let names: Vec<String> = support.iter().map(|p| p.to_string()).collect();
            rec.param("support", names.join(","));
            match decompose_exact(&v, &support) {
                Ok(w) => {
                    rec.table(weights_table("weights", &w));
                    rec.param("residual", rat(&w.residual));
                    rec.check("exact-decomposition", true, format!("remix matches all {} rows", v.max_row()));
                }
                Err(e) => {
                    if let DecomposeError::Infeasible { weights }
                    | DecomposeError::SupportInsufficient { weights, .. } = &e
                    {
                        rec.table(weights_table("weights", weights));
                    }
                    rec.check("exact-decomposition", false, e.to_string());
                }
            }
        }
        Mode::Limit => {
            let config = LimitConfig { threshold: parse_tolerance(&a.threshold)?, window: a.window };
            rec.param("kappa_cut", a.kappa_cut)
                .param("row_budget", a.row_budget)
                .param("threshold", rat(&config.threshold))
                .param("window", a.window);
            let table = EulerianTable::with_rows(a.row_budget);
            match limit_decompose(&table, &v, a.kappa_cut, a.row_budget, &config)? {
                LimitDecomposition::Determined(w) => {
                    rec.table(weights_table("weights", &w));
                    rec.param("residual", rat(&w.residual));
                    rec.check("limit-decomposition", true, format!("residual {}", dec(to_f64(&w.residual))));
                }
                LimitDecomposition::Indeterminate { oscillating, unexplained, estimate } => {
                    rec.table(weights_table("estimate", &estimate));
                    let names: Vec<String> = oscillating.iter().map(|p| p.to_string()).collect();
                    rec.check(
                        "limit-decomposition",
                        false,
                        format!(
                            "indeterminate: oscillating [{}], unexplained mass {}",
                            names.join(","),
                            dec(to_f64(&unexplained))
                        ),
                    );
                }
            }
        }
    }
    Ok(Outcome { record: rec, array: Some(v) })
}

#[derive(Args)]
pub struct MixArgs {
    #[arg(long, default_value_t = 40)]
    rows: usize,
    /// Components `WEIGHT@THETA`, e.g. `1/2@half 1/2@upper:0`.
    #[arg(required = true)]
    components: Vec<String>,
}

pub fn mix(a: &MixArgs) -> Result<Outcome> {
    check_rows(a.rows)?;
    let parts: Vec<(Rational, BoundaryParam)> =
        a.components.iter().map(|c| parse_component(c)).collect::<eulerian_core::Result<_>>()?;
    let total: Rational = parts.iter().map(|p| p.0.clone()).sum();
    if !total.is_one() {
        bail!("weights sum to {}, not 1", rat(&total));
    }
    let v = synthesize(&parts, a.rows)?.into_inner();
    let mut rec = OutputRecord::new("mix");
    rec.param("rows", a.rows).param("components", a.components.join(" "));
    rec.table(array_table("array", &v));
    Ok(Outcome { record: rec, array: Some(v) })
}

#[derive(Subcommand)]
pub enum LimitCommand {
    /// Distance of V^{N, kappa(N)} from its predicted extreme limit.
    Martin {
        /// `constant:K`, `mirrored:K` or `middle`.
        #[arg(long)]
        schedule: KappaSchedule,
        /// Rows compared.
        #[arg(long, default_value_t = 4)]
        rows: usize,
        #[arg(long, default_value = "1e-6")]
        tolerance: String,
        /// Largest N.
        #[arg(long, default_value_t = 60)]
        n_cap: usize,
    },
    /// `<N kappa> / (kappa + 1)^N`, which tends to one.
    Saturation {
        #[arg(long)]
        kappa: usize,
        #[arg(long, default_value_t = 60)]
        n_max: usize,
    },
}

pub fn limit(c: &LimitCommand) -> Result<Outcome> {
    match c {
        LimitCommand::Martin { schedule, rows, tolerance, n_cap } => {
            check_rows(*rows)?;
            check_rows(*n_cap)?;
            let tol = parse_tolerance(tolerance)?;
            let table = EulerianTable::with_rows(*n_cap);
            let r = martin_limit_witness(&table, *schedule, *rows, &tol, *n_cap)?;
            let mut rec = OutputRecord::new("limit martin");
            rec.param("schedule", schedule)
                .param("limit", r.limit)
                .param("rows", rows)
                .param("tolerance", rat(&tol))
                .param("n_cap", n_cap);
            let mut t = Table::new("trajectory", &["N", "kappa", "max_deviation"]);
            for (n, dev) in &r.trajectory {
                t.push(vec![n.to_string(), schedule.kappa_at(*n).to_string(), dec(to_f64(dev))]);
            }
            rec.table(t);
            let final_dev = r.final_deviation().map_or("none".to_string(), |d| dec(to_f64(d)));
            rec.check(
                "converged",
                r.converged(),
                match r.converged_at {
                    Some(n) => format!("below tolerance from N = {n}; final deviation {final_dev}"),
                    None => format!("not below tolerance by N = {n_cap}; final deviation {final_dev}"),
                },
            );
            let (name, monotone) = match schedule {
                KappaSchedule::Middle => ("monotone-by-parity", r.nonincreasing_by_parity()),
                _ => ("monotone", r.nonincreasing()),
            };
            rec.check(name, monotone, "");
            Ok(rec.into())
        }
        LimitCommand::Saturation { kappa, n_max } => {
            check_rows(*n_max)?;
            if *n_max <= *kappa {
                bail!("--n-max must exceed --kappa");
            }
            let table = EulerianTable::with_rows(*n_max);
            let mut rec = OutputRecord::new("limit saturation");
            rec.param("kappa", kappa).param("n_max", n_max);
            let mut t = Table::new("trajectory", &["N", "value", "exact"]);
            for (n, value) in saturation_witness(&table, *kappa, *n_max)? {
                t.push(vec![n.to_string(), dec(to_f64(&value)), rat(&value)]);
            }
            rec.table(t);
            Ok(rec.into())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use eulerian_core::arith::ratio;

    #[test]
    fn tolerances() {
        assert_eq!(parse_tolerance("1e-9").unwrap(), ten_to_minus(9));
        assert_eq!(parse_tolerance("1/1000").unwrap(), ratio(1, 1000));
        assert!(parse_tolerance("0").is_err());
        assert!(parse_tolerance("1e-x").is_err());
    }

    #[test]
    fn default_support_fits_rows() {
        assert_eq!(default_support(1), vec![BoundaryParam::Half]);
        assert_eq!(default_support(3).len(), 3);
        assert_eq!(default_support(4).len(), 3);
        assert_eq!(default_support(9), params_up_to(3));
    }
}
