//! Constructive search for a positive diagonal in a 4-dimensional
//! polystochastic matrix of order 4.
//!
//! The finder works on an internal copy of the support whose axes have been
//! relabeled; every relabeling is logged so the result can be mapped back and
//! audited. Any expectation that fails at runtime sends the search to an
//! exhaustive fallback, which is recorded as its own branch.

use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::diagonals::{
    find_positive_diagonal_in_support, format_index, is_positive_diagonal, Diagonal,
};
use crate::error::{Error, Result};
use crate::latin::{to_matrix, LatinSearch};
use crate::matching::{lex_least_perfect_matching, perfect_matchings};
use crate::perm::{all_permutations, Permutation};
use crate::rowlatin::{find_transversal, transversal_free_rectangle, RowLatinRectangle};
use crate::scalar::DEFAULT_EPS;
use crate::tensor::{Entries, MultiDimMatrix};

const N: usize = 4;
type Cell = [usize; 4];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Branch {
    RectangleTransversal,
    Step3Crossing,
    Step4Construction,
    ExhaustiveFallback,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::RectangleTransversal => "rectangle_transversal",
            Branch::Step3Crossing => "step3_crossing",
            Branch::Step4Construction => "step4_construction",
            Branch::ExhaustiveFallback => "exhaustive_fallback",
        }
    }

    pub const ALL: [Branch; 4] = [
        Branch::RectangleTransversal,
        Branch::Step3Crossing,
        Branch::Step4Construction,
        Branch::ExhaustiveFallback,
    ];
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Axis `axis` was relabeled so that new coordinate `x` reads old coordinate `perm(x)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relabeling {
    pub step: u8,
    pub axis: usize,
    pub perm: Permutation,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofTrace {
    pub branch: Branch,
    /// Result in the caller's coordinates.
    pub diagonal: Diagonal,
    /// Least positive entry, moved to the origin.
    pub anchor: Vec<usize>,
    pub relabelings: Vec<Relabeling>,
    /// Positive diagonals through the origin of each plane `(i,i,*,*)`.
    pub step2_candidates: Vec<usize>,
    /// Combinations tried after the first one.
    pub step2_retries: usize,
    /// The rectangle in internal coordinates that produced the result, or the
    /// transversal-free one that forced steps 3 and 4.
    pub step2_rectangle: Option<RowLatinRectangle>,
    pub step2_transversal: Option<Vec<(usize, usize)>>,
    /// Positive cell outside the transversal-free pattern that was swapped in.
    pub step2_perturbation: Option<Cell>,
    /// Chosen extension `(row, col)` of `{(0,0),(1,1)}` in each plane `(*,*,k,k)`.
    pub step3_extensions: Vec<(usize, usize)>,
    /// `(k1, k2, k3)` with `(2,3,k1,k1)` and `(3,2,k2,k2)` positive.
    pub step3_crossing: Option<(usize, usize, usize)>,
    pub step4_mirrored: Option<bool>,
    /// Result in internal coordinates (before undoing the relabelings).
    pub internal_diagonal: Vec<Cell>,
    pub fallback_reason: Option<String>,
}

impl fmt::Display for ProofTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "branch: {}", self.branch)?;
        writeln!(f, "diagonal: {}", self.diagonal)?;
        writeln!(f, "anchor: {}", format_index(&self.anchor))?;
        writeln!(f, "relabelings: {}", self.relabelings.len())?;
        for r in &self.relabelings {
            writeln!(f, "relabel: step{} axis {} perm {}", r.step, r.axis, r.perm)?;
        }
        let cands: Vec<String> = self.step2_candidates.iter().map(|c| c.to_string()).collect();
        writeln!(f, "step2_candidates: {}", cands.join(" "))?;
        writeln!(f, "step2_retries: {}", self.step2_retries)?;
        match &self.step2_rectangle {
            Some(r) => {
                let rows: Vec<String> = (0..r.rows())
                    .map(|i| r.row(i).iter().map(|s| s.to_string()).collect())
                    .collect();
                writeln!(f, "step2_rectangle: {}", rows.join(" "))?;
            }
            None => writeln!(f, "step2_rectangle: none")?,
        }
        match &self.step2_transversal {
            Some(t) => {
                let cells: Vec<String> = t.iter().map(|&(r, c)| format!("({r},{c})")).collect();
                writeln!(f, "step2_transversal: {}", cells.join(" "))?;
            }
            None => writeln!(f, "step2_transversal: none")?,
        }
        match &self.step2_perturbation {
            Some(c) => writeln!(f, "step2_perturbation: {}", format_index(c))?,
            None => writeln!(f, "step2_perturbation: none")?,
        }
        if self.step3_extensions.is_empty() {
            writeln!(f, "step3_extensions: none")?;
        } else {
            let ext: Vec<String> = self
                .step3_extensions
                .iter()
                .enumerate()
                .map(|(k, &(r, c))| format!("k{}=({r},{c})", k + 1))
                .collect();
            writeln!(f, "step3_extensions: {}", ext.join(" "))?;
        }
        match self.step3_crossing {
            Some((a, b, c)) => writeln!(f, "step3_crossing: k1={a} k2={b} k3={c}")?,
            None => writeln!(f, "step3_crossing: none")?,
        }
        match self.step4_mirrored {
            Some(true) => writeln!(f, "step4_orientation: mirrored")?,
            Some(false) => writeln!(f, "step4_orientation: direct")?,
            None => writeln!(f, "step4_orientation: none")?,
        }
        let internal: Vec<String> = self.internal_diagonal.iter().map(|c| format_index(c)).collect();
        writeln!(f, "internal_diagonal: {}", internal.join(" "))?;
        write!(
            f,
            "fallback_reason: {}",
            self.fallback_reason.as_deref().unwrap_or("none")
        )
    }
}

/// Support of the caller's matrix seen through per-axis relabelings.
struct Frame {
    support: Vec<bool>,
    maps: [Permutation; 4],
    log: Vec<Relabeling>,
}

impl Frame {
    fn original(&self, x: Cell) -> Cell {
        [
            self.maps[0].apply(x[0]),
            self.maps[1].apply(x[1]),
            self.maps[2].apply(x[2]),
            self.maps[3].apply(x[3]),
        ]
    }

    fn pos(&self, x: Cell) -> bool {
        let o = self.original(x);
        self.support[offset(&o)]
    }

    fn relabel(&mut self, step: u8, axis: usize, perm: Permutation) {
        if perm.is_identity() {
            return;
        }
        self.maps[axis] = self.maps[axis].compose(&perm);
        self.log.push(Relabeling { step, axis, perm });
    }

    /// 4x4 support of the plane obtained by fixing two axes; `cell(r, c)` maps
    /// plane coordinates to a full index.
    fn plane(&self, cell: impl Fn(usize, usize) -> Cell) -> Vec<bool> {
        (0..N * N).map(|o| self.pos(cell(o / N, o % N))).collect()
    }
}

enum Outcome {
    Found(Vec<Cell>),
    Fallback(String),
}

fn require_shape(a: &MultiDimMatrix) -> Result<()> {
    if a.dim() != 4 || a.order() != 4 {
        return Err(Error::Precondition(format!(
            "the constructive finder needs dimension 4 and order 4, got {} and {}",
            a.dim(),
            a.order()
        )));
    }
    if !a.is_polystochastic(DEFAULT_EPS) {
        return Err(Error::Validation("matrix is not polystochastic".into()));
    }
    Ok(())
}

/// Finds a positive diagonal of a 4-dimensional polystochastic matrix of
/// order 4 by the four-step construction and returns it with a trace.
pub fn find_positive_diagonal_44(a: &MultiDimMatrix) -> Result<(Diagonal, ProofTrace)> {
    require_shape(a)?;
    let (d, trace) = find_positive_diagonal_44_in_support(&a.support(DEFAULT_EPS)?)?;
    if !is_positive_diagonal(a, &d) {
        return Err(Error::TheoremViolation(format!("{d} is not positive")));
    }
    Ok((d, trace))
}

/// The same construction on a bare support pattern of 256 cells (last axis
/// fastest). Steps whose expectations fail on the pattern fall back to
/// exhaustive search, so any pattern with a positive diagonal succeeds.
pub fn find_positive_diagonal_44_in_support(support: &[bool]) -> Result<(Diagonal, ProofTrace)> {
    if support.len() != N.pow(4) {
        return Err(Error::Input(format!(
            "expected {} support cells, got {}",
            N.pow(4),
            support.len()
        )));
    }
    let mut frame = Frame {
        support: support.to_vec(),
        maps: std::array::from_fn(|_| Permutation::identity(N)),
        log: Vec::new(),
    };
    let mut trace = ProofTrace {
        branch: Branch::ExhaustiveFallback,
        diagonal: Diagonal::new(N, vec![Permutation::identity(N); 3])?,
        anchor: Vec::new(),
        relabelings: Vec::new(),
        step2_candidates: Vec::new(),
        step2_retries: 0,
        step2_rectangle: None,
        step2_transversal: None,
        step2_perturbation: None,
        step3_extensions: Vec::new(),
        step3_crossing: None,
        step4_mirrored: None,
        internal_diagonal: Vec::new(),
        fallback_reason: None,
    };

    let outcome = run_steps(&mut frame, &mut trace);
    trace.relabelings = frame.log.clone();
    match outcome {
        Outcome::Found(cells) => {
            let members: Vec<Vec<usize>> =
                cells.iter().map(|&c| frame.original(c).to_vec()).collect();
            match Diagonal::from_members(&members) {
                Ok(d) if members.iter().all(|m| support[offset(m)]) => {
                    trace.internal_diagonal = cells;
                    trace.diagonal = d.clone();
                    return Ok((d, trace));
                }
                _ => {
                    trace.fallback_reason =
                        Some("constructed diagonal failed verification".into());
                }
            }
        }
        Outcome::Fallback(reason) => trace.fallback_reason = Some(reason),
    }

    trace.branch = Branch::ExhaustiveFallback;
    let d = find_positive_diagonal_in_support(4, N, support).ok_or_else(|| {
        Error::TheoremViolation("support pattern without a positive diagonal".into())
    })?;
    trace.internal_diagonal = d
        .members()
        .iter()
        .map(|m| [m[0], m[1], m[2], m[3]])
        .collect();
    trace.diagonal = d.clone();
    Ok((d, trace))
}

fn offset(x: &[usize]) -> usize {
    x.iter().fold(0, |acc, &c| acc * N + c)
}

fn run_steps(frame: &mut Frame, trace: &mut ProofTrace) -> Outcome {
    // Step 1: least positive entry to the origin, then a positive diagonal of
    // the plane (*,*,0,0) through the origin onto its main diagonal.
    let Some(first) = (0..N * N * N * N).find(|&o| frame.support[o]) else {
        return Outcome::Fallback("empty support".into());
    };
    let anchor: Cell = [first >> 6, (first >> 4) & 3, (first >> 2) & 3, first & 3];
    trace.anchor = anchor.to_vec();
    for (axis, &e) in anchor.iter().enumerate() {
        frame.relabel(1, axis, Permutation::swap(N, 0, e));
    }
    let base = frame.plane(|r, c| [r, c, 0, 0]);
    let Some(sigma) = lex_least_perfect_matching(N, &base, &[(0, 0)]) else {
        return Outcome::Fallback("no diagonal through the origin of plane (*,*,0,0)".into());
    };
    frame.relabel(1, 1, sigma);

    // Step 2: every choice of diagonals through the origin of the planes
    // (i,i,*,*) gives a 4x3 row-latin rectangle.
    let lists: Vec<Vec<Permutation>> = (0..N)
        .map(|i| {
            let s = frame.plane(|r, c| [i, i, r, c]);
            perfect_matchings(N, &s)
                .into_iter()
                .filter(|p| p.apply(0) == 0)
                .collect()
        })
        .collect();
    trace.step2_candidates = lists.iter().map(|l| l.len()).collect();
    if lists.iter().any(|l| l.is_empty()) {
        return Outcome::Fallback("a plane (i,i,*,*) has no diagonal through its origin".into());
    }
    let mut choice = [0usize; N];
    let mut tried = 0usize;
    let mut first_rect = None;
    loop {
        let rect = rectangle_from(&lists, &choice);
        tried += 1;
        if let Some(t) = find_transversal(&rect) {
            trace.step2_retries = tried - 1;
            let cells = rectangle_cells(&rect, &t);
            trace.step2_rectangle = Some(rect);
            trace.step2_transversal = Some(t);
            trace.branch = Branch::RectangleTransversal;
            return Outcome::Found(cells);
        }
        first_rect.get_or_insert(rect);
        if !advance(&mut choice, &lists) {
            break;
        }
    }
    trace.step2_retries = tried - 1;

    // Every rectangle is transversal-free, so the first one is equivalent to
    // the reference rectangle; relabel so it matches exactly.
    let t_rect = transversal_free_rectangle();
    let Some((rho, cols, syms)) = map_onto(&first_rect.expect("at least one combination"), &t_rect)
    else {
        return Outcome::Fallback("transversal-free rectangle not equivalent to the reference".into());
    };
    frame.relabel(2, 0, rho.clone());
    frame.relabel(2, 1, rho);
    let mut p2 = vec![0; N];
    let mut p3 = vec![0; N];
    let sinv = syms.inverse();
    for k in 0..3 {
        p2[k + 1] = cols.apply(k) + 1;
        p3[k + 1] = sinv.apply(k) + 1;
    }
    frame.relabel(2, 2, Permutation::new(p2).expect("column map is a bijection"));
    frame.relabel(2, 3, Permutation::new(p3).expect("symbol map is a bijection"));
    trace.step2_rectangle = Some(t_rect.clone());

    for i in 0..N {
        for c in 0..3 {
            if !frame.pos([i, i, c + 1, t_rect.get(i, c) + 1]) {
                return Outcome::Fallback("relabeled rectangle cells are not positive".into());
            }
        }
    }
    // A positive cell (i,i,b,g) outside the pattern changes one entry of the
    // rectangle, and every single-entry change has a transversal.
    for i in 0..N {
        for b in 1..N {
            for g in 1..N {
                if t_rect.get(i, b - 1) + 1 == g || !frame.pos([i, i, b, g]) {
                    continue;
                }
                let changed = t_rect.with_cell(i, b - 1, g - 1);
                let Some(t) = find_transversal(&changed) else {
                    return Outcome::Fallback("perturbed rectangle has no transversal".into());
                };
                trace.step2_perturbation = Some([i, i, b, g]);
                trace.step2_transversal = Some(t.clone());
                trace.branch = Branch::RectangleTransversal;
                return Outcome::Found(rectangle_cells(&changed, &t));
            }
        }
    }

    // Step 3: extend {(0,0),(1,1)} in each plane (*,*,k,k).
    for k in 1..N {
        let s = frame.plane(|r, c| [r, c, k, k]);
        let ext = (0..N * N)
            .map(|o| (o / N, o % N))
            .find(|&(r, c)| r >= 2 && c >= 2 && s[r * N + c]);
        match ext {
            Some(e) => trace.step3_extensions.push(e),
            None => {
                return Outcome::Fallback(format!("plane (*,*,{k},{k}) has no extension cell"));
            }
        }
    }
    for k1 in 1..N {
        for k2 in 1..N {
            if k1 != k2 && frame.pos([2, 3, k1, k1]) && frame.pos([3, 2, k2, k2]) {
                let k3 = 6 - k1 - k2;
                trace.step3_crossing = Some((k1, k2, k3));
                trace.branch = Branch::Step3Crossing;
                return Outcome::Found(vec![
                    [0, 0, 0, 0],
                    [1, 1, k3, k3],
                    [2, 3, k1, k1],
                    [3, 2, k2, k2],
                ]);
            }
        }
    }

    // Step 4: all extensions sit on one side of the 2x2 block.
    let direct = (1..N).all(|k| frame.pos([2, 3, k, k]));
    let mirrored = (1..N).all(|k| frame.pos([3, 2, k, k]));
    let cells = if direct && !mirrored {
        trace.step4_mirrored = Some(false);
        vec![[0, 0, 0, 0], [1, 2, 1, 1], [2, 3, 2, 2], [3, 1, 3, 3]]
    } else if mirrored && !direct {
        trace.step4_mirrored = Some(true);
        vec![[0, 0, 0, 0], [1, 3, 1, 1], [3, 2, 2, 2], [2, 1, 3, 3]]
    } else {
        return Outcome::Fallback("step 3 extensions are neither crossing nor one-sided".into());
    };
    if !cells.iter().all(|&c| frame.pos(c)) {
        return Outcome::Fallback("step 4 cells are not all positive".into());
    }
    trace.branch = Branch::Step4Construction;
    Outcome::Found(cells)
}

/// Row `i` lists `tau_i(b) - 1` for `b = 1, 2, 3`.
fn rectangle_from(lists: &[Vec<Permutation>], choice: &[usize]) -> RowLatinRectangle {
    let cells: Vec<usize> = (0..N)
        .flat_map(|i| {
            let p = &lists[i][choice[i]];
            (1..N).map(move |b| p.apply(b) - 1)
        })
        .collect();
    RowLatinRectangle::new(N, 3, cells).expect("diagonals through the origin give latin rows")
}

/// Lexicographic odometer with plane 0 most significant.
fn advance(choice: &mut [usize], lists: &[Vec<Permutation>]) -> bool {
    for i in (0..choice.len()).rev() {
        choice[i] += 1;
        if choice[i] < lists[i].len() {
            return true;
        }
        choice[i] = 0;
    }
    false
}

/// Transversal cells `(r, c)` become `(r, r, c+1, R[r][c]+1)`; the unused row
/// contributes `(r, r, 0, 0)`.
fn rectangle_cells(rect: &RowLatinRectangle, t: &[(usize, usize)]) -> Vec<Cell> {
    let mut cells: Vec<Cell> = t
        .iter()
        .map(|&(r, c)| [r, r, c + 1, rect.get(r, c) + 1])
        .collect();
    let used: Vec<usize> = t.iter().map(|&(r, _)| r).collect();
    let free = (0..N).find(|r| !used.contains(r)).expect("three of four rows used");
    cells.push([free, free, 0, 0]);
    cells
}

/// First `(rows, cols, symbols)` with `r.transform(rows, cols, symbols) == target`.
fn map_onto(
    r: &RowLatinRectangle,
    target: &RowLatinRectangle,
) -> Option<(Permutation, Permutation, Permutation)> {
    let p4 = all_permutations(4);
    let p3 = all_permutations(3);
    for rho in &p4 {
        for c in &p3 {
            for s in &p3 {
                if r.transform(rho.as_slice(), c.as_slice(), s.as_slice()) == *target {
                    return Some((rho.clone(), c.clone(), s.clone()));
                }
            }
        }
    }
    None
}

/// One constrained entry of the worst-case pattern.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PatternEntry {
    pub index: Cell,
    pub positive: bool,
    pub step: u8,
}

/// Entries forced positive or zero when the construction reaches step 4 with
/// no relabelings, in the direct orientation.
pub fn table2_pattern() -> Vec<PatternEntry> {
    let t = transversal_free_rectangle();
    let mut out = Vec::new();
    let mut push = |index: Cell, positive: bool, step: u8| {
        out.push(PatternEntry {
            index,
            positive,
            step,
        })
    };
    for i in 0..N {
        push([i, i, 0, 0], true, 1);
    }
    for i in 0..N {
        for b in 1..N {
            for g in 1..N {
                push([i, i, b, g], t.get(i, b - 1) + 1 == g, 2);
            }
        }
    }
    for k in 1..N {
        push([2, 3, k, k], true, 3);
        push([3, 2, k, k], false, 3);
    }
    for k in 1..N {
        push([1, 2, k, k], true, 4);
        push([3, 1, k, k], true, 4);
    }
    out.sort_by_key(|e| e.index);
    out
}

/// 16x16 grid: row block `a1`, column block `a2`, row within block `a3`,
/// column within block `a4`. Cells show `+s` (positive), `0s` (zero) for the
/// step `s` that fixes them, or `..`.
pub fn render_table2() -> String {
    let pattern = table2_pattern();
    let mut lines = Vec::new();
    for a1 in 0..N {
        for a3 in 0..N {
            let mut blocks = Vec::new();
            for a2 in 0..N {
                let cells: Vec<String> = (0..N)
                    .map(|a4| {
                        match pattern.iter().find(|e| e.index == [a1, a2, a3, a4]) {
                            Some(e) => format!("{}{}", if e.positive { '+' } else { '0' }, e.step),
                            None => "..".to_string(),
                        }
                    })
                    .collect();
                blocks.push(cells.join(" "));
            }
            lines.push(blocks.join(" | "));
        }
        if a1 + 1 < N {
            lines.push(String::new());
        }
    }
    lines.join("\n")
}

/// Support containing exactly the cells the pattern marks positive.
pub fn table2_support() -> Vec<bool> {
    let mut s = vec![false; N.pow(4)];
    for e in table2_pattern().iter().filter(|e| e.positive) {
        s[offset(&e.index)] = true;
    }
    s
}

/// Uniform mixture of every latin cube of order 4 whose indicator avoids the
/// zero cells of `entries`; fails if some positive cell is left uncovered.
pub fn realize_sign_pattern(entries: &[PatternEntry]) -> Result<MultiDimMatrix> {
    let mut search = LatinSearch::new(3, N)?;
    for e in entries.iter().filter(|e| !e.positive) {
        search = search.forbid(&e.index[..3], e.index[3]);
    }
    let cubes: Vec<_> = search.into_iter().collect();
    if cubes.is_empty() {
        return Err(Error::Validation("no latin cube avoids the zero cells".into()));
    }
    let weight = BigRational::new(One::one(), (cubes.len() as i64).into());
    let mut acc = vec![BigRational::zero(); N.pow(4)];
    for q in &cubes {
        let m = to_matrix(q)?;
        let Entries::Exact(v) = m.entries() else {
            unreachable!("latin correspondence is exact")
        };
        for (a, x) in acc.iter_mut().zip(v) {
            if !x.is_zero() {
                *a += &weight;
            }
        }
    }
    let m = MultiDimMatrix::from_exact(4, N, acc)?;
    for e in entries.iter().filter(|e| e.positive) {
        if !m.get(&e.index)?.is_positive(DEFAULT_EPS) {
            return Err(Error::Validation(format!(
                "no allowed latin cube covers {}",
                format_index(&e.index)
            )));
        }
    }
    Ok(m)
}

/// Polystochastic matrix with the step 1 and step 2 signs of the pattern:
/// every rectangle is transversal-free and no cell outside it is positive.
pub fn step2_adversarial_matrix() -> Result<MultiDimMatrix> {
    let entries: Vec<PatternEntry> = table2_pattern().into_iter().filter(|e| e.step <= 2).collect();
    realize_sign_pattern(&entries)
}

/// A weighted set of lines: `(axis, point, weight)` where `point[axis]` is ignored.
pub type LineCombination = Vec<(usize, Cell, i64)>;

/// Integer weights on lines proving that no polystochastic matrix has the
/// zero cells of the pattern through step 3. Summing the weighted line sums
/// gives `1` on one side, while every cell allowed to be nonzero gets a
/// coefficient `<= 0` on the other.
pub fn step3_pattern_certificate() -> LineCombination {
    let mut lines = Vec::new();
    for k in 1..N {
        lines.push((0, [0, 2, k, k], 1));
        lines.push((0, [0, 3, k, k], 1));
        lines.push((1, [0, 0, k, k], -1));
        lines.push((1, [1, 0, k, k], -1));
        lines.push((3, [2, 3, k, 0], -1));
    }
    for i in 0..2 {
        for g in 1..N {
            lines.push((2, [i, i, 0, g], 1));
        }
        lines.push((3, [i, i, 0, 0], -1));
    }
    lines
}

/// Checks a line combination against a zero set: returns `true` iff the
/// weights sum to a positive number and every cell outside `zeros` has a
/// nonpositive coefficient, which rules out every polystochastic matrix
/// vanishing on `zeros`.
pub fn certificate_refutes(lines: &LineCombination, zeros: &[Cell]) -> bool {
    let mut coeff = vec![0i64; N.pow(4)];
    for &(axis, point, w) in lines {
        for v in 0..N {
            let mut x = point;
            x[axis] = v;
            coeff[offset(&x)] += w;
        }
    }
    let total: i64 = lines.iter().map(|l| l.2).sum();
    let zero_offsets: Vec<usize> = zeros.iter().map(|z| offset(z)).collect();
    total > 0
        && coeff
            .iter()
            .enumerate()
            .all(|(o, &c)| c <= 0 || zero_offsets.contains(&o))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latin::{q_hypercube, z_matrix};

    fn replay(a: &MultiDimMatrix, trace: &ProofTrace) -> MultiDimMatrix {
        trace
            .relabelings
            .iter()
            .fold(a.clone(), |m, r| m.relabel(r.axis, r.perm.as_slice()).unwrap())
    }

    #[test]
    fn z_matrix_example() {
        let z = z_matrix(4, 4).unwrap();
        for a in [z.clone(), z.to_float()] {
            let (d, t) = find_positive_diagonal_44(&a).unwrap();
            assert!(is_positive_diagonal(&a, &d));
            assert_ne!(t.branch, Branch::ExhaustiveFallback, "{t}");
        }
    }

    #[test]
    fn rejects_wrong_shape_and_non_stochastic() {
        let z3 = z_matrix(3, 4).unwrap();
        assert!(matches!(find_positive_diagonal_44(&z3), Err(Error::Precondition(_))));
        let ones = MultiDimMatrix::constant(4, 4, BigRational::one()).unwrap();
        assert!(matches!(find_positive_diagonal_44(&ones), Err(Error::Validation(_))));
    }

    #[test]
    fn pattern_shape() {
        let p = table2_pattern();
        assert_eq!(p.len(), 52);
        assert_eq!(p.iter().filter(|e| e.positive).count(), 4 + 12 + 3 + 6);
        let mut idx: Vec<Cell> = p.iter().map(|e| e.index).collect();
        idx.dedup();
        assert_eq!(idx.len(), 52);
        assert!(render_table2().lines().count() == 19);
    }

    #[test]
    fn step3_pattern_is_not_realizable() {
        let zeros: Vec<Cell> = table2_pattern()
            .iter()
            .filter(|e| !e.positive)
            .map(|e| e.index)
            .collect();
        assert!(certificate_refutes(&step3_pattern_certificate(), &zeros));
        // dropping the step 3 zeros removes the contradiction
        let step2: Vec<Cell> = table2_pattern()
            .iter()
            .filter(|e| !e.positive && e.step == 2)
            .map(|e| e.index)
            .collect();
        assert!(!certificate_refutes(&step3_pattern_certificate(), &step2));
        assert!(matches!(realize_sign_pattern(&table2_pattern()), Err(Error::Validation(_))));
    }

    #[test]
    fn pattern_support_reaches_step4() {
        let (d, t) = find_positive_diagonal_44_in_support(&table2_support()).unwrap();
        assert!(t.relabelings.is_empty(), "{t}");
        assert_eq!(t.branch, Branch::Step4Construction, "{t}");
        assert_eq!(t.step4_mirrored, Some(false));
        assert_eq!(d.to_string(), "diag (0,0,0,0) (1,2,1,1) (2,3,2,2) (3,1,3,3)");
    }

    #[test]
    fn mirrored_support_reaches_step4() {
        // swap coordinates 2 and 3 on axes 0 and 1
        let s = table2_support();
        let sw = |x: usize| [0, 1, 3, 2][x];
        let mirrored: Vec<bool> = (0..256)
            .map(|o| s[offset(&[sw(o >> 6), sw((o >> 4) & 3), (o >> 2) & 3, o & 3])])
            .collect();
        let (d, t) = find_positive_diagonal_44_in_support(&mirrored).unwrap();
        assert_eq!(t.branch, Branch::Step4Construction, "{t}");
        assert_eq!(t.step4_mirrored, Some(true));
        assert!(d.members().iter().all(|m| mirrored[offset(m)]));
    }

    #[test]
    fn step2_adversary_goes_through_the_rectangle() {
        let a = step2_adversarial_matrix().unwrap();
        assert!(a.is_polystochastic(DEFAULT_EPS));
        let (d, t) = find_positive_diagonal_44(&a).unwrap();
        assert!(t.relabelings.is_empty(), "{t}");
        assert_eq!(t.branch, Branch::Step3Crossing, "{t}");
        assert_eq!(t.step2_perturbation, None);
        assert!(is_positive_diagonal(&a, &d));
    }

    #[test]
    fn replay_is_stable() {
        let q = q_hypercube(3, 4).unwrap();
        let a = to_matrix(&q).unwrap().relabel(2, &[2, 0, 3, 1]).unwrap();
        let (_, t) = find_positive_diagonal_44(&a).unwrap();
        let (d2, t2) = find_positive_diagonal_44(&replay(&a, &t)).unwrap();
        assert!(t2.relabelings.is_empty(), "{t2}");
        assert_eq!(t2.internal_diagonal, t.internal_diagonal);
        assert_eq!(t2.branch, t.branch);
        assert_eq!(d2.members().len(), 4);
    }

    #[test]
    fn trace_text_is_stable() {
        let a = table2_support();
        let (_, t) = find_positive_diagonal_44_in_support(&a).unwrap();
        let text = t.to_string();
        assert!(text.starts_with("branch: step4_construction\n"));
        assert!(text.contains("step2_rectangle: 012 012 120 120"));
        assert!(text.contains("step3_extensions: k1=(2,3) k2=(2,3) k3=(2,3)"));
        assert_eq!(text, find_positive_diagonal_44_in_support(&a).unwrap().1.to_string());
    }
}
