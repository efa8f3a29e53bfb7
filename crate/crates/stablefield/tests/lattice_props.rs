//! Property suites for the exact lattice layer: Smith normal form on
//! random matrices, group axioms of `(H, +)`, projection invariance, the
//! quotient norm, ball growth, and the coset-count / fiber-volume link.

mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stablefield::geometry::ActionGeometry;
use stablefield::lattice::{analyze_action, smith_normal_form, GroupStructure, IntMatrix};

fn random_matrix(rng: &mut impl Rng, max_dim: usize, max_entry: i64) -> IntMatrix {
    let rows = rng.random_range(1..=max_dim);
    let cols = rng.random_range(1..=max_dim);
    let mut m = IntMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m.set(i, j, rng.random_range(-max_entry..=max_entry));
        }
    }
    m
}

#[test]
fn snf_random_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..1000 {
        let a = random_matrix(&mut rng, 5, 10);
        let s = smith_normal_form(&a).unwrap();
        let lhs = s
            .left
            .checked_mul(&a)
            .unwrap()
            .checked_mul(&s.right)
            .unwrap();
        assert_eq!(
            lhs,
            s.diag_matrix(a.rows(), a.cols()),
            "case {case}: P*A*Q != diag"
        );
        assert_eq!(s.left.det().unwrap().abs(), 1, "case {case}");
        assert_eq!(s.right.det().unwrap().abs(), 1, "case {case}");
        let nz: Vec<i64> = s.diag.iter().copied().filter(|&d| d != 0).collect();
        assert!(nz.iter().all(|&d| d > 0), "case {case}");
        for w in nz.windows(2) {
            assert_eq!(w[1] % w[0], 0, "case {case}: chain {:?}", s.diag);
        }
    }
}

fn example41() -> GroupStructure {
    analyze_action(&IntMatrix::from_cols(2, &[vec![1, 1]]).unwrap()).unwrap()
}

fn torsion_l2() -> GroupStructure {
    analyze_action(&IntMatrix::from_cols(2, &[vec![2, 0]]).unwrap()).unwrap()
}

#[test]
fn group_axioms_random_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for g in [example41(), torsion_l2()] {
        for _ in 0..400 {
            let pick = |rng: &mut ChaCha8Rng| {
                let t = vec![rng.random_range(-30..=30), rng.random_range(-30..=30)];
                g.project(&t).unwrap()
            };
            let (a, b, c) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
            let ab_c = g.add(&g.add(&a, &b).unwrap(), &c).unwrap();
            let a_bc = g.add(&a, &g.add(&b, &c).unwrap()).unwrap();
            assert_eq!(ab_c, a_bc, "associativity");
            assert_eq!(
                g.add(&a, &b).unwrap(),
                g.add(&b, &a).unwrap(),
                "commutativity"
            );
            let e = g.project(&[0, 0]).unwrap();
            assert_eq!(g.add(&a, &e).unwrap(), a, "identity");
            let inv = g.inv(&a).unwrap();
            assert!(g.add(&a, &inv).unwrap().is_identity(), "inverse");
        }
    }
}

#[test]
fn projection_invariant_under_kernel() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let g41 = example41();
    let g2 = torsion_l2();
    for _ in 0..1000 {
        let t = vec![rng.random_range(-50..=50), rng.random_range(-50..=50)];
        let k = rng.random_range(-20i64..=20);
        let shifted41 = vec![t[0] + k, t[1] + k]; // K = <(1,1)>
        assert_eq!(
            g41.project(&t).unwrap(),
            g41.project(&shifted41).unwrap()
        );
        let shifted2 = vec![t[0] + 2 * k, t[1]]; // K = <(2,0)>
        assert_eq!(g2.project(&t).unwrap(), g2.project(&shifted2).unwrap());
    }
}

#[test]
fn norm_symmetry_and_triangle() {
    let mut rng = ChaCha8Rng::seed_from_u64(123);
    for g in [example41(), torsion_l2()] {
        for _ in 0..1000 {
            let pick = |rng: &mut ChaCha8Rng| {
                let t = vec![rng.random_range(-40..=40), rng.random_range(-40..=40)];
                g.project(&t).unwrap()
            };
            let (a, b) = (pick(&mut rng), pick(&mut rng));
            let na = g.norm(&a).unwrap();
            assert_eq!(na, g.norm(&g.inv(&a).unwrap()).unwrap(), "symmetry");
            let nb = g.norm(&b).unwrap();
            let nab = g.norm(&g.add(&a, &b).unwrap()).unwrap();
            assert!(nab <= na + nb, "triangle: {nab} > {na} + {nb}");
        }
    }
}

#[test]
fn ball_growth_is_linear_in_np() {
    // |H_n| ~ l Leb(Delta) n^p; check boundedness of |H_n| / n^p and
    // exact monotonicity.
    for (g, l_leb) in [(example41(), 4.0), (torsion_l2(), 4.0)] {
        let mut prev = 0usize;
        for n in [10i64, 25, 50, 100, 200] {
            let hn = g.enumerate_hn(n).unwrap();
            assert!(hn.len() >= prev, "monotone");
            prev = hn.len();
            let ratio = hn.len() as f64 / n as f64;
            assert!(
                ratio > 0.5 * l_leb && ratio < 1.5 * l_leb,
                "n={n}: |H_n|/n = {ratio}, expected near {l_leb}"
            );
        }
        // tight asymptotics at the largest n
        let n = 200i64;
        let ratio = g.enumerate_hn(n).unwrap().len() as f64 / n as f64;
        assert!((ratio - l_leb).abs() < 0.1, "{ratio} vs {l_leb}");
    }
}

#[test]
fn coset_counts_match_fiber_volume() {
    // |m(s,n)/n - V(s1/n)| <= 2/n for Example 4.1
    let g = example41();
    let geom = ActionGeometry::new(&g).unwrap();
    let n = 50i64;
    let mut max_gap = 0.0f64;
    for s1 in -2 * n..=2 * n {
        let s = g.project(&[s1, 0]).unwrap();
        let m = g.count_coset_points(&s, n).unwrap() as f64;
        let v = geom.q_volume(&[s1 as f64 / n as f64]);
        max_gap = max_gap.max((m / n as f64 - v).abs());
    }
    assert!(max_gap <= 2.0 / n as f64 + 1e-12, "gap {max_gap}");
}

#[test]
fn hn_matches_closed_form_for_example41() {
    // N((s1,0)) = ceil(|s1|/2): H_n = {|s1| <= 2n}, so |H_n| = 4n+1
    let g = example41();
    for n in [0i64, 1, 2, 7, 31] {
        let hn = g.enumerate_hn(n).unwrap();
        assert_eq!(hn.len() as i64, 4 * n + 1, "n={n}");
    }
}

#[test]
fn torsion_structure_counts() {
    // K = <(2,0)>: two cosets, sites (k, z) with N = max(|z|, k)-ish;
    // check m(s, n) by brute enumeration of the window
    let g = torsion_l2();
    let n = 9i64;
    let mut by_site: std::collections::HashMap<_, i64> = std::collections::HashMap::new();
    for t0 in -n..=n {
        for t1 in -n..=n {
            let s = g.project(&[t0, t1]).unwrap();
            *by_site.entry(s).or_insert(0) += 1;
        }
    }
    for (s, count) in by_site {
        assert_eq!(
            g.count_coset_points(&s, n).unwrap(),
            count,
            "m(s,n) disagrees with brute enumeration at {s:?}"
        );
    }
}
