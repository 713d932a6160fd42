//! Row-latin rectangles: k x m tables whose rows are permutations of `0..m-1`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{input_err, Error, Result};
use crate::perm::{all_permutations, factorial, is_bijection};

/// Raw-table ceiling for [`enumerate_classes`].
pub const DEFAULT_CLASS_CAP: u128 = 10_000_000;

/// A k x m table over symbols `0..m-1`. Tables built with [`RowLatinRectangle::table`]
/// need not be row-latin; transversal search accepts either.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowLatinRectangle {
    rows: usize,
    cols: usize,
    cells: Vec<usize>,
}

impl RowLatinRectangle {
    pub fn new(rows: usize, cols: usize, cells: Vec<usize>) -> Result<Self> {
        let r = Self::table(rows, cols, cells)?;
        if !r.is_row_latin() {
            return Err(Error::Validation("some row is not a permutation of the symbols".into()));
        }
        Ok(r)
    }

    /// Any k x m table with symbols below m.
    pub fn table(rows: usize, cols: usize, cells: Vec<usize>) -> Result<Self> {
        if cells.len() != rows * cols {
            return input_err(format!("expected {} cells, got {}", rows * cols, cells.len()));
        }
        if cols > 64 || cells.iter().any(|&s| s >= cols) {
            return input_err(format!("symbols must lie in 0..{cols}"));
        }
        Ok(RowLatinRectangle { rows, cols, cells })
    }

    pub fn from_rows(rows: &[Vec<usize>]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn get(&self, r: usize, c: usize) -> usize {
        self.cells[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[usize] {
        &self.cells[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_row_latin(&self) -> bool {
        (0..self.rows).all(|r| is_bijection(self.row(r)))
    }

    /// Copy with cell `(r, c)` set to `symbol`.
    pub fn with_cell(&self, r: usize, c: usize, symbol: usize) -> Self {
        let mut out = self.clone();
        out.cells[r * self.cols + c] = symbol;
        out
    }

    /// Rows permuted by `row_perm`, columns by `col_perm`, symbols renamed by `sym_perm`:
    /// `R'[r][c] = sym_perm[R[row_perm[r]][col_perm[c]]]`.
    pub fn transform(&self, row_perm: &[usize], col_perm: &[usize], sym_perm: &[usize]) -> Self {
        let cells = (0..self.rows)
            .flat_map(|r| {
                (0..self.cols).map(move |c| sym_perm[self.get(row_perm[r], col_perm[c])])
            })
            .collect();
        RowLatinRectangle {
            rows: self.rows,
            cols: self.cols,
            cells,
        }
    }
}

impl fmt::Display for RowLatinRectangle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rlr {} {}", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = self.row(r).iter().map(|s| s.to_string()).collect();
            write!(f, "\n{}", row.join(" "))?;
        }
        Ok(())
    }
}

impl FromStr for RowLatinRectangle {
    type Err = Error;

    /// Parses the `rlr` text form; the table must be row-latin.
    fn from_str(s: &str) -> Result<Self> {
        let mut toks = s.split_whitespace();
        if toks.next() != Some("rlr") {
            return Err(Error::Parse {
                line: 1,
                msg: "expected header `rlr <k> <m>`".into(),
            });
        }
        let mut dim = || -> Result<usize> {
            toks.next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse {
                    line: 1,
                    msg: "bad rectangle shape".into(),
                })
        };
        let (k, m) = (dim()?, dim()?);
        let cells = s
            .split_whitespace()
            .skip(3)
            .map(|t| {
                t.parse::<usize>().map_err(|_| Error::Parse {
                    line: 0,
                    msg: format!("`{t}` is not a symbol"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        RowLatinRectangle::new(k, m, cells)
    }
}

/// The 4 x 3 row-latin rectangle with no transversal: rows `012, 012, 120, 120`.
pub fn transversal_free_rectangle() -> RowLatinRectangle {
    RowLatinRectangle {
        rows: 4,
        cols: 3,
        cells: vec![0, 1, 2, 0, 1, 2, 1, 2, 0, 1, 2, 0],
    }
}

/// `min(k, m)` cells in distinct rows, columns, and symbols, or `None`.
/// Rows are scanned top-down; a row is used (columns ascending) before it is skipped.
pub fn find_transversal(r: &RowLatinRectangle) -> Option<Vec<(usize, usize)>> {
    let target = r.rows.min(r.cols);
    let mut picked = Vec::with_capacity(target);
    if transversal_dfs(r, 0, target, 0, 0, &mut picked) {
        Some(picked)
    } else {
        None
    }
}

fn transversal_dfs(
    r: &RowLatinRectangle,
    row: usize,
    target: usize,
    used_cols: u64,
    used_syms: u64,
    picked: &mut Vec<(usize, usize)>,
) -> bool {
    if picked.len() == target {
        return true;
    }
    if r.rows - row < target - picked.len() {
        return false;
    }
    for c in 0..r.cols {
        let s = r.get(row, c);
        if used_cols & (1 << c) != 0 || used_syms & (1 << s) != 0 {
            continue;
        }
        picked.push((row, c));
        if transversal_dfs(r, row + 1, target, used_cols | 1 << c, used_syms | 1 << s, picked) {
            return true;
        }
        picked.pop();
    }
    transversal_dfs(r, row + 1, target, used_cols, used_syms, picked)
}

/// Checks the three distinctness conditions and the size of a claimed transversal.
pub fn is_transversal(r: &RowLatinRectangle, cells: &[(usize, usize)]) -> bool {
    if cells.len() != r.rows.min(r.cols) {
        return false;
    }
    let (mut rows, mut cols, mut syms) = (0u64, 0u64, 0u64);
    for &(i, j) in cells {
        if i >= r.rows || j >= r.cols {
            return false;
        }
        let s = r.get(i, j);
        if rows & (1 << i) != 0 || cols & (1 << j) != 0 || syms & (1 << s) != 0 {
            return false;
        }
        rows |= 1 << i;
        cols |= 1 << j;
        syms |= 1 << s;
    }
    true
}

/// Lexicographically least table reachable by row, column, and symbol
/// permutations. For each column/symbol pair the best row order is the sorted one.
pub fn canonical_form(r: &RowLatinRectangle) -> RowLatinRectangle {
    let perms = all_permutations(r.cols);
    let mut best: Option<Vec<usize>> = None;
    let mut rows_buf: Vec<Vec<usize>> = vec![Vec::with_capacity(r.cols); r.rows];
    for cp in &perms {
        for sp in &perms {
            for (i, buf) in rows_buf.iter_mut().enumerate() {
                buf.clear();
                buf.extend((0..r.cols).map(|c| sp.apply(r.get(i, cp.apply(c)))));
            }
            rows_buf.sort_unstable();
            let cand: Vec<usize> = rows_buf.concat();
            if best.as_ref().is_none_or(|b| cand < *b) {
                best = Some(cand);
            }
        }
    }
    RowLatinRectangle {
        rows: r.rows,
        cols: r.cols,
        cells: best.unwrap_or_default(),
    }
}

pub fn equivalent(a: &RowLatinRectangle, b: &RowLatinRectangle) -> bool {
    a.rows == b.rows && a.cols == b.cols && canonical_form(a) == canonical_form(b)
}

/// Number of k x m row-latin tables, `(m!)^k`, saturating.
pub fn raw_table_count(k: usize, m: usize) -> u128 {
    let f = factorial(m);
    (0..k).fold(1u128, |acc, _| acc.saturating_mul(f))
}

/// Calls `f` on every k x m row-latin table; rows vary fastest at the bottom.
pub fn for_each_table(k: usize, m: usize, mut f: impl FnMut(&RowLatinRectangle)) {
    let perms = all_permutations(m);
    let mut counters = vec![0usize; k];
    loop {
        let cells = counters
            .iter()
            .flat_map(|&c| perms[c].as_slice().iter().copied())
            .collect();
        f(&RowLatinRectangle {
            rows: k,
            cols: m,
            cells,
        });
        let mut advanced = false;
        for c in counters.iter_mut().rev() {
            *c += 1;
            if *c < perms.len() {
                advanced = true;
                break;
            }
            *c = 0;
        }
        if !advanced {
            return;
        }
    }
}

/// One canonical representative per equivalence class, sorted.
pub fn enumerate_classes(k: usize, m: usize) -> Result<Vec<RowLatinRectangle>> {
    enumerate_classes_with_cap(k, m, DEFAULT_CLASS_CAP)
}

pub fn enumerate_classes_with_cap(k: usize, m: usize, cap: u128) -> Result<Vec<RowLatinRectangle>> {
    let raw = raw_table_count(k, m);
    if raw > cap || m > 12 {
        return Err(Error::Capacity {
            what: "row-latin tables",
            requested: raw,
            limit: cap,
        });
    }
    if k == 0 {
        return Ok(vec![RowLatinRectangle {
            rows: 0,
            cols: m,
            cells: Vec::new(),
        }]);
    }
    let perms = all_permutations(m);
    // split on the first row; tables are independent
    let set: BTreeSet<RowLatinRectangle> = (0..perms.len())
        .into_par_iter()
        .map(|first| {
            let mut local = BTreeSet::new();
            for_each_table(k - 1, m, |rest| {
                let mut cells = perms[first].as_slice().to_vec();
                cells.extend_from_slice(rest.cells());
                let r = RowLatinRectangle {
                    rows: k,
                    cols: m,
                    cells,
                };
                local.insert(canonical_form(&r));
            });
            local
        })
        .reduce(BTreeSet::new, |mut a, b| {
            a.extend(b);
            a
        });
    Ok(set.into_iter().collect())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lemma1Report {
    pub raw_tables: u128,
    pub classes: usize,
    pub transversal_free: Vec<RowLatinRectangle>,
    pub matches_reference: bool,
    pub perturbations_checked: usize,
    pub perturbations_ok: usize,
    pub violations: Vec<String>,
}

impl Lemma1Report {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for Lemma1Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "shape: 4x3")?;
        writeln!(f, "raw_tables: {}", self.raw_tables)?;
        writeln!(f, "classes: {}", self.classes)?;
        writeln!(f, "transversal_free: {}", self.transversal_free.len())?;
        writeln!(f, "matches_T: {}", self.matches_reference)?;
        writeln!(
            f,
            "perturbations_ok: {}/{}",
            self.perturbations_ok, self.perturbations_checked
        )?;
        writeln!(f, "violations: {}", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "violation: {v}")?;
        }
        write!(f, "verdict: {}", if self.passed() { "pass" } else { "fail" })
    }
}

/// Exhaustive check of the 4 x 3 claim: ten classes, exactly one without a
/// transversal (equivalent to [`transversal_free_rectangle`]), and every
/// single-cell symbol change of that rectangle has a transversal.
pub fn verify_lemma1() -> Lemma1Report {
    verify_lemma1_with(find_transversal)
}

/// As [`verify_lemma1`] with a caller-supplied transversal oracle.
pub fn verify_lemma1_with(
    oracle: impl Fn(&RowLatinRectangle) -> Option<Vec<(usize, usize)>>,
) -> Lemma1Report {
    let t = transversal_free_rectangle();
    let classes = enumerate_classes(4, 3).expect("4x3 is within capacity");
    let transversal_free: Vec<RowLatinRectangle> = classes
        .iter()
        .filter(|c| oracle(c).is_none())
        .cloned()
        .collect();
    let t_canon = canonical_form(&t);
    let matches_reference = transversal_free.len() == 1 && transversal_free[0] == t_canon;

    let mut violations = Vec::new();
    if classes.len() != 10 {
        violations.push(format!("expected 10 classes, found {}", classes.len()));
    }
    if !matches_reference {
        violations.push(format!(
            "transversal-free classes {:?} differ from the reference rectangle",
            transversal_free.iter().map(|r| r.cells().to_vec()).collect::<Vec<_>>()
        ));
    }
    let mut checked = 0;
    let mut ok = 0;
    for r in 0..t.rows() {
        for c in 0..t.cols() {
            for s in (0..t.cols()).filter(|&s| s != t.get(r, c)) {
                checked += 1;
                let changed = t.with_cell(r, c, s);
                match oracle(&changed) {
                    Some(cells) if is_transversal(&changed, &cells) => ok += 1,
                    _ => violations.push(format!(
                        "changing cell ({r},{c}) to {s} leaves no transversal"
                    )),
                }
            }
        }
    }
    Lemma1Report {
        raw_tables: raw_table_count(4, 3),
        classes: classes.len(),
        transversal_free,
        matches_reference,
        perturbations_checked: checked,
        perturbations_ok: ok,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(rows: &[&str]) -> RowLatinRectangle {
        // one-based digits, as displayed in the lemma's proof
        let rows: Vec<Vec<usize>> = rows
            .iter()
            .map(|r| r.bytes().map(|b| (b - b'1') as usize).collect())
            .collect();
        RowLatinRectangle::from_rows(&rows).unwrap()
    }

    /// The ten listed 4 x 3 rectangles with their underlined transversals.
    fn listed() -> Vec<(RowLatinRectangle, Option<Vec<(usize, usize)>>)> {
        vec![
            (rect(&["123", "123", "123", "123"]), Some(vec![(0, 0), (1, 1), (2, 2)])),
            (rect(&["123", "123", "123", "132"]), Some(vec![(0, 0), (1, 1), (2, 2)])),
            (rect(&["123", "123", "123", "231"]), Some(vec![(0, 0), (1, 1), (2, 2)])),
            (rect(&["123", "123", "132", "132"]), Some(vec![(1, 0), (2, 1), (3, 2)])),
            (rect(&["123", "123", "132", "231"]), Some(vec![(0, 1), (1, 2), (2, 0)])),
            (rect(&["123", "123", "132", "213"]), Some(vec![(0, 0), (1, 1), (3, 2)])),
            (rect(&["123", "123", "231", "231"]), None),
            (rect(&["123", "123", "231", "312"]), Some(vec![(0, 0), (2, 1), (3, 2)])),
            (rect(&["123", "132", "213", "312"]), Some(vec![(0, 0), (1, 1), (3, 2)])),
            (rect(&["123", "132", "213", "321"]), Some(vec![(0, 1), (1, 0), (2, 2)])),
        ]
    }

    #[test]
    fn listed_rectangles_are_the_classes() {
        let classes: BTreeSet<_> = enumerate_classes(4, 3).unwrap().into_iter().collect();
        assert_eq!(classes.len(), 10);
        let listed_canon: BTreeSet<_> = listed().iter().map(|(r, _)| canonical_form(r)).collect();
        assert_eq!(listed_canon, classes);
        for (r, underlined) in listed() {
            match underlined {
                Some(cells) => assert!(is_transversal(&r, &cells), "{r}"),
                None => {
                    assert_eq!(find_transversal(&r), None);
                    assert!(equivalent(&r, &transversal_free_rectangle()));
                }
            }
        }
    }

    #[test]
    fn transversal_examples() {
        assert_eq!(find_transversal(&transversal_free_rectangle()), None);
        let one = RowLatinRectangle::new(1, 1, vec![0]).unwrap();
        assert_eq!(find_transversal(&one), Some(vec![(0, 0)]));
        let first = &listed()[0].0;
        assert_eq!(find_transversal(first), Some(vec![(0, 0), (1, 1), (2, 2)]));
        // wide rectangles pick one cell per row
        let wide = RowLatinRectangle::from_rows(&[vec![0, 1, 2], vec![0, 1, 2]]).unwrap();
        assert_eq!(find_transversal(&wide), Some(vec![(0, 0), (1, 1)]));
    }

    #[test]
    fn canonical_form_examples() {
        let t = transversal_free_rectangle();
        let reordered = t.transform(&[2, 0, 3, 1], &[0, 1, 2], &[0, 1, 2]);
        assert_eq!(canonical_form(&t), canonical_form(&reordered));
        let c = canonical_form(&t);
        assert_eq!(canonical_form(&c), c);

        let a = RowLatinRectangle::from_rows(&[vec![0, 1], vec![1, 0]]).unwrap();
        let b = RowLatinRectangle::from_rows(&[vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(canonical_form(&a), canonical_form(&b));
    }

    #[test]
    fn class_counts() {
        assert_eq!(enumerate_classes(1, 1).unwrap().len(), 1);
        // 2x2 tables: rows equal or rows different
        assert_eq!(enumerate_classes(2, 2).unwrap().len(), 2);
        assert!(matches!(
            enumerate_classes(6, 7),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn every_raw_table_lands_in_a_class() {
        let classes: BTreeSet<_> = enumerate_classes(4, 3).unwrap().into_iter().collect();
        let mut raw = 0;
        for_each_table(4, 3, |r| {
            raw += 1;
            assert!(classes.contains(&canonical_form(r)));
        });
        assert_eq!(raw, 1296);
    }

    #[test]
    fn lemma1_report() {
        let report = verify_lemma1();
        assert_eq!(report.classes, 10);
        assert_eq!(report.transversal_free.len(), 1);
        assert!(report.matches_reference);
        assert_eq!((report.perturbations_ok, report.perturbations_checked), (24, 24));
        assert!(report.passed());
        assert_eq!(report, verify_lemma1());
    }

    #[test]
    fn lemma1_single_perturbation() {
        let changed = transversal_free_rectangle().with_cell(2, 0, 0);
        assert!(!changed.is_row_latin());
        let cells = find_transversal(&changed).unwrap();
        assert!(is_transversal(&changed, &cells));
    }

    #[test]
    fn broken_oracle_is_reported() {
        let report = verify_lemma1_with(|_| None);
        assert!(!report.passed());
        assert_eq!(report.perturbations_ok, 0);
    }

    #[test]
    fn text_form() {
        let t = transversal_free_rectangle();
        let s = t.to_string();
        assert_eq!(s, "rlr 4 3\n0 1 2\n0 1 2\n1 2 0\n1 2 0");
        assert_eq!(s.parse::<RowLatinRectangle>().unwrap(), t);
        assert!("rlr 1 2\n0 0".parse::<RowLatinRectangle>().is_err());
    }
}
