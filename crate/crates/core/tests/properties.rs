use ktree_core::gfsystem::{pointed_pieces, pointing_defect_with};
use ktree_core::ktrees::{canonical_form, decode, default_colouring, diameter, encode};
use ktree_core::sampler::{RngStream, Sampler};
use ktree_core::{KTree, Permutation, Series, SeriesTable};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;
use proptest::sample::subsequence;

fn grow(k: usize, steps: &[(usize, usize)]) -> KTree {
    let mut t = KTree::single_hedron(k);
    for &(h, o) in steps {
        let hedron = &t.hedra()[h % t.n()];
        let front: Vec<usize> = hedron.iter().enumerate().filter(|&(i, _)| i != o % (k + 1)).map(|(_, &v)| v).collect();
        t = t.attach(&front).unwrap();
    }
    t
}

fn ktree() -> impl Strategy<Value = KTree> {
    (1usize..=3, prop::collection::vec((any::<usize>(), any::<usize>()), 0..12)).prop_map(|(k, s)| grow(k, &s))
}

fn series(order: usize) -> impl Strategy<Value = Series> {
    prop::collection::vec(-4i64..=4, order).prop_map(|c| {
        let mut coeff = vec![BigRational::zero()];
        coeff.extend(c.into_iter().map(|x| BigRational::from_integer(BigInt::from(x))));
        Series::from_coefficients(coeff)
    })
}

proptest! {
    #[test]
    fn text_round_trip(t in ktree()) {
        let back: KTree = t.to_string().parse().unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn canonical_form_ignores_labels(t in ktree(), seed in any::<u64>()) {
        let m = t.vertex_count();
        let mut images: Vec<usize> = (0..m).collect();
        let mut rng = RngStream::new(seed, 0);
        use rand::seq::SliceRandom;
        images.shuffle(&mut rng);
        let u = t.relabel(&Permutation::new(images).unwrap());
        prop_assert_eq!(canonical_form(&u), canonical_form(&t));
    }

    #[test]
    fn coding_tree_round_trip(t in ktree()) {
        let ct = encode(&t, &default_colouring(&t));
        prop_assert_eq!(ct.black_count(), t.n());
        let (back, colouring) = decode(&ct);
        prop_assert!(colouring.is_valid_for(&back));
        prop_assert_eq!(canonical_form(&back), canonical_form(&t));
    }

    #[test]
    fn diameter_is_largest_distance(t in ktree()) {
        let g = t.graph();
        let all = (0..g.vertex_count()).map(|v| *g.distances(v).iter().max().unwrap()).max().unwrap();
        prop_assert_eq!(diameter(&t), all as usize);
        prop_assert!(diameter(&t) <= t.n());
    }

    #[test]
    fn exp_turns_sums_into_products(a in series(10), b in series(10)) {
        let lhs = (&a + &b).exp().unwrap();
        let rhs = &a.exp().unwrap() * &b.exp().unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn substitution_is_multiplicative(a in series(12), b in series(12), i in 1usize..4) {
        let lhs = (&a * &b).substitute_power(i);
        let rhs = &a.substitute_power(i) * &b.substitute_power(i);
        prop_assert_eq!(lhs, rhs);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn burnside_sums_are_integral(k in 1usize..=4, n in 1usize..=40) {
        let t = SeriesTable::build(k, n).unwrap();
        for s in [t.u(), t.b(), t.c(), t.e()] {
            prop_assert!(s.is_integral() && s.is_nonnegative());
        }
        let p = pointed_pieces(&t);
        for m in 1..=n {
            prop_assert!(pointing_defect_with(&t, &p, m).unwrap() >= BigRational::zero());
        }
    }

    #[test]
    fn pointed_samples_have_the_requested_size(k in 1usize..=3, n in 1usize..=60, seed in any::<u64>()) {
        let s = Sampler::new(k, 60).unwrap();
        let t = s.sample_pointed(n, &mut RngStream::new(seed, 0)).unwrap().tree;
        prop_assert_eq!(t.n(), n);
        prop_assert_eq!(t.vertex_count(), n + k);
        let reparsed: KTree = t.to_string().parse().unwrap();
        prop_assert_eq!(reparsed, t);
    }

    #[test]
    fn random_fronts_stay_k_trees(t in ktree(), picks in subsequence((0..12usize).collect::<Vec<_>>(), 0..4)) {
        let mut u = t.clone();
        let added = picks.len();
        for p in picks {
            let fronts = u.fronts();
            u = u.attach(fronts[p % fronts.len()].vertices()).unwrap();
        }
        prop_assert_eq!(u.n(), t.n() + added);
        prop_assert_eq!(u.vertex_count(), u.n() + u.k());
        prop_assert!(KTree::new(u.k(), u.hedra().to_vec()).is_ok());
    }
}
