//! Text formats.
//!
//! `pmat <dim> <order> <exact|float>` followed by `n^d` entries in offset
//! order, and `lhc <dim> <order>` followed by `n^d` symbols. Writers put `n`
//! entries per line; readers accept any whitespace and `#` comments.

use crate::birkhoff::BvnDecomposition;
use crate::error::{Error, Result};
use crate::latin::LatinHypercube;
use crate::scalar::{format_float, format_rational, parse_float, parse_rational, NumericMode};
use crate::tensor::{Entries, MultiDimMatrix};

/// Tokens with the line they came from, comments stripped.
fn tokens(text: &str) -> Vec<(usize, &str)> {
    text.lines()
        .enumerate()
        .flat_map(|(i, line)| {
            let body = line.split('#').next().unwrap_or("");
            body.split_whitespace().map(move |t| (i + 1, t))
        })
        .collect()
}

fn parse_err<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse {
        line,
        msg: msg.into(),
    })
}

fn header_usize(toks: &[(usize, &str)], at: usize, what: &str) -> Result<usize> {
    match toks.get(at) {
        Some(&(line, t)) => t
            .parse()
            .or_else(|_| parse_err(line, format!("{what} `{t}` is not a nonnegative integer"))),
        None => parse_err(toks.last().map_or(1, |t| t.0), format!("missing {what}")),
    }
}

/// Which format a document declares in its first token.
pub fn detect_kind(text: &str) -> Option<&str> {
    tokens(text).first().map(|t| t.1)
}

pub fn write_pmat(a: &MultiDimMatrix) -> String {
    let n = a.order();
    let cells: Vec<String> = match a.entries() {
        Entries::Exact(v) => v.iter().map(format_rational).collect(),
        Entries::Float(v) => v.iter().map(|&x| format_float(x)).collect(),
    };
    let mut out = format!("pmat {} {} {}\n", a.dim(), n, a.mode());
    for row in cells.chunks(n) {
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_pmat(text: &str) -> Result<MultiDimMatrix> {
    let toks = tokens(text);
    match toks.first() {
        Some(&(_, "pmat")) => {}
        Some(&(line, t)) => return parse_err(line, format!("expected `pmat` header, found `{t}`")),
        None => return parse_err(1, "empty input"),
    }
    let dim = header_usize(&toks, 1, "dimension")?;
    let order = header_usize(&toks, 2, "order")?;
    let mode: NumericMode = match toks.get(3) {
        Some(&(line, t)) => t.parse().or_else(|_| parse_err(line, format!("unknown mode `{t}`")))?,
        None => return parse_err(toks[0].0, "missing numeric mode"),
    };
    let expected = crate::tensor::checked_len(dim, order)?;
    let body = &toks[4.min(toks.len())..];
    if body.len() != expected {
        let line = body.last().map_or(toks[0].0, |t| t.0);
        return parse_err(line, format!("expected {expected} entries, found {}", body.len()));
    }
    let wrap = |line: usize, e: Error| match e {
        Error::Input(msg) => Error::Parse { line, msg },
        other => other,
    };
    let entries = match mode {
        NumericMode::Exact => Entries::Exact(
            body.iter()
                .map(|&(line, t)| parse_rational(t).map_err(|e| wrap(line, e)))
                .collect::<Result<_>>()?,
        ),
        NumericMode::Float => Entries::Float(
            body.iter()
                .map(|&(line, t)| parse_float(t).map_err(|e| wrap(line, e)))
                .collect::<Result<_>>()?,
        ),
    };
    MultiDimMatrix::new(dim, order, entries)
}

pub fn write_lhc(q: &LatinHypercube) -> String {
    let n = q.order();
    let mut out = format!("lhc {} {}\n", q.dim(), n);
    for row in q.cells().chunks(n) {
        let row: Vec<String> = row.iter().map(|s| s.to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Parses and validates a latin hypercube; a non-latin array is a validation error.
pub fn read_lhc(text: &str) -> Result<LatinHypercube> {
    let toks = tokens(text);
    match toks.first() {
        Some(&(_, "lhc")) => {}
        Some(&(line, t)) => return parse_err(line, format!("expected `lhc` header, found `{t}`")),
        None => return parse_err(1, "empty input"),
    }
    let dim = header_usize(&toks, 1, "dimension")?;
    let order = header_usize(&toks, 2, "order")?;
    let expected = crate::tensor::checked_len(dim, order)?;
    let body = &toks[3.min(toks.len())..];
    if body.len() != expected {
        let line = body.last().map_or(toks[0].0, |t| t.0);
        return parse_err(line, format!("expected {expected} symbols, found {}", body.len()));
    }
    let cells = body
        .iter()
        .map(|&(line, t)| match t.parse::<usize>() {
            Ok(s) if s < order => Ok(s),
            _ => parse_err(line, format!("symbol `{t}` is not in 0..{order}")),
        })
        .collect::<Result<Vec<_>>>()?;
    LatinHypercube::new(dim, order, cells)
}

pub fn write_decomposition(d: &BvnDecomposition) -> String {
    let mut s = d.to_string();
    if !s.is_empty() {
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latin::{q_hypercube, z_matrix};
    use crate::tensor::rat;

    #[test]
    fn pmat_round_trip_exact_and_float() {
        let z = z_matrix(3, 2).unwrap();
        let text = write_pmat(&z);
        assert_eq!(text, "pmat 3 2 exact\n1 0\n0 1\n0 1\n1 0\n");
        assert_eq!(read_pmat(&text).unwrap(), z);

        let f = MultiDimMatrix::from_float(2, 2, vec![0.1, 0.9, 0.9, 0.1 + 1e-17]).unwrap();
        let back = read_pmat(&write_pmat(&f)).unwrap();
        let (Entries::Float(a), Entries::Float(b)) = (f.entries(), back.entries()) else { panic!() };
        assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));

        let h = MultiDimMatrix::constant(2, 2, rat(1, 2)).unwrap();
        assert_eq!(write_pmat(&h), "pmat 2 2 exact\n1/2 1/2\n1/2 1/2\n");
    }

    #[test]
    fn pmat_errors_carry_lines() {
        assert!(matches!(read_pmat(""), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(
            read_pmat("pmat 2 2 exact\n1 0\n0 x\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(read_pmat("pmat 2 2 exact\n1 0 0\n"), Err(Error::Parse { .. })));
        assert!(matches!(read_pmat("pmat 2 2 fuzzy\n1 0 0 1\n"), Err(Error::Parse { .. })));
        assert!(matches!(read_pmat("pmat 2 2 float\n1 0 0 inf\n"), Err(Error::Parse { .. })));
        // comments are ignored
        assert!(read_pmat("# header next\npmat 2 1 exact # one cell\n1\n").is_ok());
    }

    #[test]
    fn lhc_round_trip_and_validation() {
        let q = q_hypercube(3, 3).unwrap();
        assert_eq!(read_lhc(&write_lhc(&q)).unwrap(), q);
        assert!(matches!(read_lhc("lhc 2 2\n0 0\n1 1\n"), Err(Error::Validation(_))));
        assert!(matches!(read_lhc("lhc 2 2\n0 2\n1 0\n"), Err(Error::Parse { line: 2, .. })));
    }
}
