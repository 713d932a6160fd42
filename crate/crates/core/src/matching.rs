//! Bipartite matching on square (0,1) support patterns.
//!
//! Rows are left vertices, columns right vertices, and `support[r * n + c]`
//! marks an edge. Orders up to 64.

use crate::perm::Permutation;

/// Kuhn's augmenting-path matching restricted to rows in `rows` and columns in
/// `cols` (bit masks). Returns the matching size.
pub fn max_matching(n: usize, support: &[bool], rows: u64, cols: u64) -> usize {
    let mut col_owner = vec![usize::MAX; n];
    let mut size = 0;
    for r in (0..n).filter(|r| rows & (1 << r) != 0) {
        let mut seen = 0u64;
        if augment(n, support, cols, r, &mut seen, &mut col_owner) {
            size += 1;
        }
    }
    size
}

fn augment(
    n: usize,
    support: &[bool],
    cols: u64,
    r: usize,
    seen: &mut u64,
    col_owner: &mut [usize],
) -> bool {
    for c in 0..n {
        if cols & (1 << c) == 0 || *seen & (1 << c) != 0 || !support[r * n + c] {
            continue;
        }
        *seen |= 1 << c;
        if col_owner[c] == usize::MAX || augment(n, support, cols, col_owner[c], seen, col_owner) {
            col_owner[c] = r;
            return true;
        }
    }
    false
}

fn all_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

pub fn has_perfect_matching(n: usize, support: &[bool]) -> bool {
    max_matching(n, support, all_mask(n), all_mask(n)) == n
}

/// Lexicographically least perfect matching (as row -> column permutation)
/// that uses every cell in `forced`.
pub fn lex_least_perfect_matching(
    n: usize,
    support: &[bool],
    forced: &[(usize, usize)],
) -> Option<Permutation> {
    let mut allowed = support.to_vec();
    for &(r, c) in forced {
        if !support[r * n + c] {
            return None;
        }
        for k in 0..n {
            if k != c {
                allowed[r * n + k] = false;
            }
            if k != r {
                allowed[k * n + c] = false;
            }
        }
    }
    let mut rows = all_mask(n);
    let mut cols = all_mask(n);
    let mut image = vec![0; n];
    for r in 0..n {
        rows &= !(1 << r);
        let choice = (0..n).find(|&c| {
            cols & (1 << c) != 0
                && allowed[r * n + c]
                && max_matching(n, &allowed, rows, cols & !(1 << c)) == rows.count_ones() as usize
        })?;
        cols &= !(1 << choice);
        image[r] = choice;
    }
    Some(Permutation::new(image).expect("matching is a bijection"))
}

/// Every perfect matching inside `support`, in lexicographic order.
pub fn perfect_matchings(n: usize, support: &[bool]) -> Vec<Permutation> {
    let mut out = Vec::new();
    let mut image = vec![0; n];
    collect_matchings(n, support, 0, 0, &mut image, &mut out);
    out
}

fn collect_matchings(
    n: usize,
    support: &[bool],
    r: usize,
    used: u64,
    image: &mut Vec<usize>,
    out: &mut Vec<Permutation>,
) {
    if r == n {
        out.push(Permutation::new(image.clone()).expect("bijection"));
        return;
    }
    for c in 0..n {
        if used & (1 << c) == 0 && support[r * n + c] {
            image[r] = c;
            collect_matchings(n, support, r + 1, used | 1 << c, image, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::all_permutations;

    fn pattern(n: usize, cells: &[(usize, usize)]) -> Vec<bool> {
        let mut s = vec![false; n * n];
        for &(r, c) in cells {
            s[r * n + c] = true;
        }
        s
    }

    #[test]
    fn identity_and_full() {
        let id = pattern(4, &[(0, 0), (1, 1), (2, 2), (3, 3)]);
        assert!(has_perfect_matching(4, &id));
        assert_eq!(perfect_matchings(4, &id).len(), 1);
        let full = vec![true; 16];
        assert_eq!(perfect_matchings(4, &full), all_permutations(4));
        let m = lex_least_perfect_matching(4, &full, &[(0, 3)]).unwrap();
        assert_eq!(m.as_slice(), &[3, 0, 1, 2]);
    }

    #[test]
    fn deficient_pattern() {
        // two rows confined to one column
        let s = pattern(3, &[(0, 0), (1, 0), (2, 1), (2, 2)]);
        assert!(!has_perfect_matching(3, &s));
        assert_eq!(max_matching(3, &s, 0b111, 0b111), 2);
        assert_eq!(lex_least_perfect_matching(3, &s, &[]), None);
    }

    #[test]
    fn lex_least_matches_brute_force() {
        // every 3x3 pattern and every forced cell
        for bits in 0u32..512 {
            let s: Vec<bool> = (0..9).map(|i| bits & (1 << i) != 0).collect();
            let all = perfect_matchings(3, &s);
            assert_eq!(lex_least_perfect_matching(3, &s, &[]), all.first().cloned());
            for r in 0..3 {
                for c in 0..3 {
                    let through = all.iter().find(|p| p.apply(r) == c).cloned();
                    assert_eq!(lex_least_perfect_matching(3, &s, &[(r, c)]), through);
                }
            }
        }
    }
}
