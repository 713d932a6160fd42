use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use polyperm::birkhoff::{
    birkhoff_decompose, extend_partial_diagonal, is_realizable_support, permutation_masks,
    positive_diagonal_through,
};
use polyperm::diagonals::{
    count_positive_diagonals, find_positive_diagonal, is_positive_diagonal, is_positive_partial_diagonal,
    permanent,
};
use polyperm::format::{read_lhc, read_pmat, write_lhc, write_pmat};
use polyperm::gen::{random_latin, random_polystochastic, sinkhorn_project};
use polyperm::latin::{apply_equivalence, count_transversals, from_matrix, has_transversal, to_matrix};
use polyperm::perm::all_permutations;
use polyperm::prover44::{find_positive_diagonal_44, Branch};
use polyperm::rowlatin::{canonical_form, equivalent, find_transversal, is_transversal};
use polyperm::{Diagonal, MultiDimMatrix, PartialDiagonal, RowLatinRectangle, Scalar, DEFAULT_EPS};

fn int_matrix(dim: usize, order: usize, cells: &[i64]) -> MultiDimMatrix {
    let v = cells
        .iter()
        .map(|&c| BigRational::from_integer(BigInt::from(c)))
        .collect();
    MultiDimMatrix::from_exact(dim, order, v).unwrap()
}

fn small_matrix() -> impl Strategy<Value = MultiDimMatrix> {
    (2usize..=4, 1usize..=3)
        .prop_filter("keep it small", |&(d, n)| n.pow(d as u32) <= 81)
        .prop_flat_map(|(d, n)| {
            prop::collection::vec(prop_oneof![2 => Just(0i64), 3 => 1i64..4], n.pow(d as u32))
                .prop_map(move |cells| int_matrix(d, n, &cells))
        })
}

fn perm_of(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

/// Laplace expansion along the first row.
fn laplace(m: &[Vec<i64>]) -> i64 {
    let n = m.len();
    if n == 0 {
        return 1;
    }
    (0..n)
        .map(|c| {
            if m[0][c] == 0 {
                return 0;
            }
            let minor: Vec<Vec<i64>> = m[1..]
                .iter()
                .map(|row| row.iter().enumerate().filter(|&(j, _)| j != c).map(|(_, &x)| x).collect())
                .collect();
            m[0][c] * laplace(&minor)
        })
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn permanent_invariant_under_relabel(a in small_matrix(), seed in any::<u64>()) {
        let n = a.order();
        let perms = all_permutations(n);
        let axis = (seed as usize) % a.dim();
        let p = &perms[(seed as usize / 7) % perms.len()];
        let b = a.relabel(axis, p.as_slice()).unwrap();
        prop_assert_eq!(permanent(&a).unwrap(), permanent(&b).unwrap());
    }

    #[test]
    fn permanent_invariant_under_axis_permutation(a in small_matrix(), seed in any::<u64>()) {
        let axes_perms = all_permutations(a.dim());
        let axes = &axes_perms[(seed as usize) % axes_perms.len()];
        let b = a.permute_axes(axes.as_slice()).unwrap();
        prop_assert_eq!(permanent(&a).unwrap(), permanent(&b).unwrap());
        prop_assert_eq!(count_positive_diagonals(&a).unwrap(), count_positive_diagonals(&b).unwrap());
    }

    #[test]
    fn square_permanent_matches_laplace(n in 1usize..=5, cells in prop::collection::vec(0i64..5, 25)) {
        let cells = &cells[..n * n];
        let rows: Vec<Vec<i64>> = cells.chunks(n).map(|r| r.to_vec()).collect();
        prop_assert_eq!(permanent(&int_matrix(2, n, cells)).unwrap(), Scalar::int(laplace(&rows)));
    }

    #[test]
    fn positive_diagonal_exists_iff_permanent_positive(a in small_matrix()) {
        let p = permanent(&a).unwrap();
        let count = count_positive_diagonals(&a).unwrap();
        match find_positive_diagonal(&a) {
            Some(d) => {
                prop_assert!(is_positive_diagonal(&a, &d));
                prop_assert!(p.is_positive(DEFAULT_EPS));
                prop_assert!(count > 0);
            }
            None => {
                prop_assert!(p.is_zero());
                prop_assert_eq!(count, 0);
            }
        }
    }

    #[test]
    fn pmat_round_trip(a in small_matrix(), scale in 1u32..1000) {
        prop_assert_eq!(read_pmat(&write_pmat(&a)).unwrap(), a.clone());
        let f = MultiDimMatrix::from_float(
            a.dim(),
            a.order(),
            (0..a.len()).map(|o| a.get_at(o).to_f64() / scale as f64).collect(),
        ).unwrap();
        let back = read_pmat(&write_pmat(&f)).unwrap();
        for o in 0..f.len() {
            prop_assert_eq!(f.get_at(o).to_f64().to_bits(), back.get_at(o).to_f64().to_bits());
        }
    }

    #[test]
    fn lhc_round_trips(dim in 1usize..=3, order in 1usize..=4, seed in any::<u64>()) {
        let q = random_latin(dim, order, seed).unwrap();
        prop_assert_eq!(read_lhc(&write_lhc(&q)).unwrap(), q.clone());
        let a = to_matrix(&q).unwrap();
        prop_assert!(a.is_polystochastic(0.0));
        prop_assert_eq!(from_matrix(&a).unwrap(), q.clone());
        prop_assert_eq!(
            count_transversals(&q).unwrap() as i64,
            match permanent(&a).unwrap() {
                Scalar::Exact(r) => r.to_integer().try_into().unwrap(),
                Scalar::Float(_) => unreachable!(),
            }
        );
    }

    #[test]
    fn transversals_survive_equivalence(order in 1usize..=4, seed in any::<u64>(), sym in perm_of(4), a0 in perm_of(4), a1 in perm_of(4)) {
        let q = random_latin(2, order, seed).unwrap();
        let keep = |p: &Vec<usize>| p.iter().copied().filter(|&x| x < order).collect::<Vec<_>>();
        let r = apply_equivalence(&q, &[keep(&a0), keep(&a1)], &keep(&sym)).unwrap();
        prop_assert_eq!(count_transversals(&q).unwrap(), count_transversals(&r).unwrap());
        prop_assert_eq!(has_transversal(&q), has_transversal(&r));
    }

    #[test]
    fn diagonal_text_round_trip(dim in 2usize..=4, order in 1usize..=4, seed in any::<u64>()) {
        let perms = all_permutations(order);
        let mut s = seed as usize;
        let chosen = (1..dim)
            .map(|_| {
                let p = perms[s % perms.len()].clone();
                s /= perms.len().max(2);
                p
            })
            .collect();
        let d = Diagonal::new(order, chosen).unwrap();
        let back: Diagonal = d.to_string().parse().unwrap();
        prop_assert_eq!(back, d);
    }

    #[test]
    fn rectangle_text_round_trip(cells in prop::collection::vec(perm_of(3), 4)) {
        let r = RowLatinRectangle::from_rows(&cells).unwrap();
        let back: RowLatinRectangle = r.to_string().parse().unwrap();
        prop_assert_eq!(back, r);
    }

    #[test]
    fn positive_diagonal_through_every_positive_cell(order in 1usize..=6, terms in 1usize..6, seed in any::<u64>()) {
        let a = random_polystochastic(2, order, terms, seed).unwrap();
        let support = a.support(DEFAULT_EPS).unwrap();
        for (o, &pos) in support.iter().enumerate() {
            let cell = a.index_of(o);
            match positive_diagonal_through(&a, &cell) {
                Ok(d) => {
                    prop_assert!(pos);
                    prop_assert!(is_positive_diagonal(&a, &d));
                    prop_assert!(d.members().contains(&cell));
                }
                Err(_) => prop_assert!(!pos),
            }
        }
    }

    #[test]
    fn sinkhorn_keeps_the_support(order in 2usize..=5, terms in 1usize..5, seed in any::<u64>(), noise in prop::collection::vec(0.5f64..2.0, 25)) {
        let a = random_polystochastic(2, order, terms, seed).unwrap().to_float();
        let support = a.support(DEFAULT_EPS).unwrap();
        let noisy = MultiDimMatrix::from_float(
            2,
            order,
            (0..a.len()).map(|o| a.get_at(o).to_f64() * noise[o]).collect(),
        ).unwrap();
        let r = sinkhorn_project(&noisy, 1e-10, 10_000).unwrap();
        prop_assert_eq!(r.matrix.support(DEFAULT_EPS).unwrap(), support);
        if r.converged {
            prop_assert!(r.matrix.is_polystochastic(1e-9));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn rectangle_class_invariants(
        rows in prop::collection::vec(perm_of(3), 4),
        rp in perm_of(4),
        cp in perm_of(3),
        sp in perm_of(3),
    ) {
        let r = RowLatinRectangle::from_rows(&rows).unwrap();
        let t = r.transform(&rp, &cp, &sp);
        prop_assert_eq!(canonical_form(&r), canonical_form(&t));
        prop_assert!(equivalent(&r, &t));
        let (x, y) = (find_transversal(&r), find_transversal(&t));
        prop_assert_eq!(x.is_some(), y.is_some());
        if let Some(cells) = x {
            prop_assert!(is_transversal(&r, &cells));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn realizable_supports_are_unions_of_permutations(pattern in any::<u16>()) {
        let masks = permutation_masks(4);
        let pattern = pattern as u64;
        let inside: Vec<usize> = (0..masks.len()).filter(|&i| masks[i] & !pattern == 0).collect();
        let realizable = is_realizable_support(pattern, &masks);
        if inside.is_empty() {
            prop_assert!(!realizable);
            return Ok(());
        }
        // the uniform mixture of all permutations inside the pattern is the
        // doubly stochastic matrix with the largest support under it
        let perms = all_permutations(4);
        let mut cells = vec![BigRational::from_integer(0.into()); 16];
        let w = BigRational::new(1.into(), BigInt::from(inside.len()));
        for &i in &inside {
            for r in 0..4 {
                cells[r * 4 + perms[i].apply(r)] += &w;
            }
        }
        let m = MultiDimMatrix::from_exact(2, 4, cells).unwrap();
        prop_assert!(m.is_polystochastic(0.0));
        let support = m.support(0.0).unwrap();
        let as_mask = support.iter().enumerate().fold(0u64, |acc, (i, &b)| acc | (u64::from(b) << i));
        prop_assert_eq!(realizable, as_mask == pattern);
        let d = birkhoff_decompose(&m).unwrap();
        prop_assert_eq!(d.reconstruct(), m.clone());

        // any two positive cells off a common line extend to a third
        if realizable {
            for p in 0..16 {
                for q in 0..16 {
                    let (a, b) = ((p / 4, p % 4), (q / 4, q % 4));
                    if a.0 >= b.0 || a.1 == b.1 || !support[p] || !support[q] {
                        continue;
                    }
                    let partial = PartialDiagonal::new(vec![vec![a.0, a.1], vec![b.0, b.1]]);
                    let ext = extend_partial_diagonal(&m, &partial).unwrap();
                    prop_assert_eq!(ext.len(), 3);
                    prop_assert!(ext.is_well_formed());
                    prop_assert!(is_positive_partial_diagonal(&m, &ext));
                    prop_assert!(ext.contains(&[a.0, a.1]) && ext.contains(&[b.0, b.1]));
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn constructive_search_is_sound(terms in 1usize..=8, seed in any::<u64>(), float in any::<bool>()) {
        let mut a = random_polystochastic(4, 4, terms, seed).unwrap();
        if float {
            a = a.to_float();
        }
        let (d, t) = find_positive_diagonal_44(&a).unwrap();
        prop_assert!(is_positive_diagonal(&a, &d));
        prop_assert_eq!(&t.diagonal, &d);
        prop_assert!(t.branch != Branch::ExhaustiveFallback, "{}", t);
        prop_assert!(find_positive_diagonal(&a).is_some());

        let replayed = t
            .relabelings
            .iter()
            .fold(a.clone(), |m, r| m.relabel(r.axis, r.perm.as_slice()).unwrap());
        let (d2, t2) = find_positive_diagonal_44(&replayed).unwrap();
        prop_assert!(t2.relabelings.is_empty(), "{}", t2);
        prop_assert_eq!(&t2.internal_diagonal, &t.internal_diagonal);
        prop_assert_eq!(t2.branch, t.branch);
        prop_assert!(is_positive_diagonal(&replayed, &d2));
    }
}
