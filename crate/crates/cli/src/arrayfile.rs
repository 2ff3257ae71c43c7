//! Plain-text triangular arrays.
//!
//! ```text
//! # comments and blank lines are ignored
//! rows=3
//! 1
//! 1/2 1/2
//! 1/6 2/3 1/6
//! ```
//!
//! A left column alone is written `left=N` followed by `N` rationals, split
//! over lines in any way.

use anyhow::{anyhow, bail, Context, Result};
use eulerian_core::boundary::TriangularArray;
use eulerian_core::reconstruct::{nabla, LeftColumn};
use eulerian_core::Rational;

use crate::output::rat;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArrayInput {
    Full(TriangularArray),
    Left(Vec<Rational>),
}

impl ArrayInput {
    /// The full array, reconstructing it from a left column if needed.
    pub fn into_array(self) -> Result<TriangularArray> {
        match self {
            ArrayInput::Full(a) => Ok(a),
            ArrayInput::Left(col) => Ok(nabla(&LeftColumn::new(col)?)),
        }
    }
}

pub fn parse_rational(token: &str) -> Result<Rational> {
    token.trim().parse().map_err(|_| anyhow!("not a rational: {token:?}"))
}

/// Comma or whitespace separated rationals.
pub fn parse_list(s: &str) -> Result<Vec<Rational>> {
    s.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).map(parse_rational).collect()
}

pub fn parse(text: &str) -> Result<ArrayInput> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (_, header) = lines.next().ok_or_else(|| anyhow!("empty array file"))?;
    let (kind, count) =
        header.split_once('=').ok_or_else(|| anyhow!("expected `rows=N` or `left=N`, got {header:?}"))?;
    let count: usize = count.trim().parse().with_context(|| format!("bad count in header {header:?}"))?;
    if count == 0 {
        bail!("array must have at least one row");
    }
    match kind.trim() {
        "rows" => {
            let mut rows = Vec::with_capacity(count);
            for (lineno, line) in lines {
                let row = parse_list(line).with_context(|| format!("line {lineno}"))?;
                if row.len() != rows.len() + 1 {
                    bail!(
                        "line {lineno}: row {} needs {} entries, found {}",
                        rows.len() + 1,
                        rows.len() + 1,
                        row.len()
                    );
                }
                rows.push(row);
            }
            if rows.len() != count {
                bail!("header announces {count} rows, found {}", rows.len());
            }
            Ok(ArrayInput::Full(TriangularArray::from_rows(rows)?))
        }
        "left" => {
            let mut values = Vec::with_capacity(count);
            for (lineno, line) in lines {
                values.extend(parse_list(line).with_context(|| format!("line {lineno}"))?);
            }
            if values.len() != count {
                bail!("header announces {count} values, found {}", values.len());
            }
            Ok(ArrayInput::Left(values))
        }
        other => bail!("unknown header {other:?}; expected `rows` or `left`"),
    }
}

pub fn write(array: &TriangularArray) -> String {
    let mut out = format!("rows={}\n", array.max_row());
    for row in array.rows() {
        let cells: Vec<String> = row.iter().map(rat).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use eulerian_core::arith::ratio;
    use eulerian_core::boundary::extreme_solution;
    use eulerian_core::BoundaryParam;

    #[test]
    fn roundtrip() {
        let w = extreme_solution(BoundaryParam::Upper(2), 7).unwrap();
        let text = write(&w);
        assert!(text.starts_with("rows=7\n1/1\n2/3 1/3\n"));
        assert_eq!(parse(&text).unwrap(), ArrayInput::Full(w.into_inner()));
    }

    #[test]
    fn left_column_spans_lines() {
        let input = parse("# half\nleft=4\n1, 1/2\n1/6 1/24\n").unwrap();
        assert_eq!(input, ArrayInput::Left(vec![ratio(1, 1), ratio(1, 2), ratio(1, 6), ratio(1, 24)]));
        let full = input.into_array().unwrap();
        assert_eq!(full, *extreme_solution(BoundaryParam::Half, 4).unwrap());
    }

    #[test]
    fn malformed() {
        assert!(parse("").is_err());
        assert!(parse("rows=2\n1\n1/2\n").is_err());
        assert!(parse("rows=2\n1\n").is_err());
        assert!(parse("cols=2\n1\n").is_err());
        assert!(parse("left=2\n1 x\n").is_err());
        assert!(parse("left=3\n1 2\n").is_err());
    }
}
