//! Algebraic laws on random small algebras, each checked against a
//! brute-force or structurally independent computation.

mod common;

use common::corpus;
use hcomm::commutator::{commutator_lower_bound, higher_commutator_oracle, higher_commutator_with, Limits};
use hcomm::congruence::{all_congruences, all_partitions, cg, is_congruence, join_in_con, meet};
use hcomm::series::{eval_term, lemma31_bound_check, series, CommutatorTerm, SeriesKind};
use hcomm::{Element, FiniteAlgebra, Operation, PartialCongruence, Partition};
use proptest::prelude::*;

fn arb_algebra() -> impl Strategy<Value = FiniteAlgebra> {
    (2usize..=3, any::<bool>()).prop_flat_map(|(size, unary)| {
        let s = size as u32;
        (
            prop::collection::vec(0..s, size * size),
            prop::collection::vec(0..s, size),
        )
            .prop_map(move |(bin, un)| {
                let mut ops = vec![Operation {
                    symbol: "f".into(),
                    arity: 2,
                    table: bin,
                }];
                if unary {
                    ops.push(Operation {
                        symbol: "g".into(),
                        arity: 1,
                        table: un,
                    });
                }
                FiniteAlgebra::new("random", size, ops).unwrap()
            })
    })
}

fn brute_congruences(a: &FiniteAlgebra) -> Vec<Partition> {
    all_partitions(a.size())
        .into_iter()
        .filter(|p| is_congruence(a, p).unwrap())
        .collect()
}

fn comm(a: &FiniteAlgebra, thetas: &[Partition], sigma: Option<&[usize]>) -> Partition {
    higher_commutator_with(a, thetas, sigma, &Limits::default()).unwrap()
}

fn pick<T: Clone>(xs: &[T], seed: usize) -> T {
    xs[seed % xs.len()].clone()
}

/// The same algebra with carrier element `x` renamed to `perm[x]`.
fn relabel(a: &FiniteAlgebra, perm: &[u32]) -> FiniteAlgebra {
    let n = a.size();
    let mut inv = vec![0u32; n];
    for (x, &y) in perm.iter().enumerate() {
        inv[y as usize] = x as u32;
    }
    let ops = a
        .operations()
        .iter()
        .map(|op| {
            let k = op.arity;
            let table = (0..n.pow(k as u32))
                .map(|idx| {
                    // Decode the renamed arguments, map back, evaluate, map forward.
                    let args: Vec<u32> = (0..k)
                        .map(|d| inv[(idx / n.pow((k - 1 - d) as u32)) % n])
                        .collect();
                    let flat = args.iter().fold(0usize, |acc, &x| acc * n + x as usize);
                    perm[op.table[flat] as usize]
                })
                .collect();
            Operation {
                symbol: op.symbol.clone(),
                arity: k,
                table,
            }
        })
        .collect();
    FiniteAlgebra::new("relabelled", n, ops).unwrap()
}

fn relabel_partition(p: &Partition, perm: &[u32]) -> Partition {
    let mut labels = vec![0u32; p.size()];
    for x in 0..p.size() {
        labels[perm[x] as usize] = p.block_of(x);
    }
    Partition::from_labels(&labels)
}

fn permutation(n: usize, seed: u64) -> Vec<u32> {
    let mut p: Vec<u32> = (0..n as u32).collect();
    let mut s = seed;
    for i in (1..n).rev() {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        p.swap(i, (s >> 33) as usize % (i + 1));
    }
    p
}

fn arb_term(depth: u32) -> impl Strategy<Value = CommutatorTerm> {
    let leaf = Just(CommutatorTerm::X);
    leaf.prop_recursive(depth, 12, 3, |inner| {
        prop::collection::vec(inner, 2..=3).prop_map(CommutatorTerm::Node)
    })
}

fn depth_of(t: &CommutatorTerm) -> usize {
    match t {
        CommutatorTerm::X => 0,
        CommutatorTerm::Node(kids) => 1 + kids.iter().map(depth_of).max().unwrap_or(0),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn congruences_match_brute_force_and_form_a_lattice(a in arb_algebra()) {
        let con = all_congruences(&a).unwrap();
        let mut brute = brute_congruences(&a);
        let mut listed = con.clone();
        brute.sort_by_key(|p| p.to_string());
        listed.sort_by_key(|p| p.to_string());
        prop_assert_eq!(&listed, &brute);
        for p in &con {
            for q in &con {
                prop_assert!(con.contains(&meet(p, q)));
                let j = join_in_con(&a, p, q).unwrap();
                prop_assert!(con.contains(&j));
                prop_assert!(p.le(&j) && q.le(&j));
            }
        }
    }

    #[test]
    fn cg_is_the_least_congruence_containing_the_pairs(
        a in arb_algebra(),
        raw in prop::collection::vec((0usize..3, 0usize..3), 0..3),
    ) {
        let n = a.size();
        let pairs: Vec<(usize, usize)> = raw.iter().map(|&(x, y)| (x % n, y % n)).collect();
        let got = cg(&a, &pairs).unwrap();
        let least = brute_congruences(&a)
            .into_iter()
            .filter(|p| pairs.iter().all(|&(x, y)| p.related(x, y)))
            .fold(Partition::total(n), |acc, p| meet(&acc, &p));
        prop_assert_eq!(got, least);
    }

    #[test]
    fn partial_congruence_closure_agrees_with_cg(
        a in arb_algebra(),
        raw in prop::collection::vec((0usize..3, 0usize..3), 1..3),
    ) {
        let n = a.size();
        let pairs: Vec<(usize, usize)> = raw.iter().map(|&(x, y)| (x % n, y % n)).collect();
        let mut pc = PartialCongruence::new();
        for &(x, y) in &pairs {
            pc.union(&Element::Fin(x as u32), &Element::Fin(y as u32)).unwrap();
        }
        let ambient: Vec<Element> = (0..n as u32).map(Element::Fin).collect();
        pc.close(&a, &ambient).unwrap();
        let expected = cg(&a, &pairs).unwrap();
        for x in 0..n {
            for y in 0..n {
                prop_assert_eq!(
                    pc.related(&Element::Fin(x as u32), &Element::Fin(y as u32)),
                    expected.related(x, y)
                );
            }
        }
    }

    #[test]
    fn fixpoint_equals_meet_of_centralizing_congruences(
        a in arb_algebra(),
        seeds in prop::collection::vec(0usize..64, 3),
    ) {
        let con = all_congruences(&a).unwrap();
        for k in [2usize, 3] {
            let thetas: Vec<Partition> = seeds[..k].iter().map(|&s| pick(&con, s)).collect();
            prop_assert_eq!(comm(&a, &thetas, None), higher_commutator_oracle(&a, &thetas, None).unwrap());
        }
    }

    #[test]
    fn monotone_and_below_the_meet(
        a in arb_algebra(),
        seeds in prop::collection::vec(0usize..64, 6),
    ) {
        let con = all_congruences(&a).unwrap();
        let th: Vec<Partition> = seeds[..3].iter().map(|&s| pick(&con, s)).collect();
        // Raise each θ to some congruence above it.
        let be: Vec<Partition> = th
            .iter()
            .zip(&seeds[3..])
            .map(|(t, &s)| join_in_con(&a, t, &pick(&con, s)).unwrap())
            .collect();
        for k in [2usize, 3] {
            let c = comm(&a, &th[..k], None);
            let m = th[1..k].iter().fold(th[0].clone(), |acc, p| meet(&acc, p));
            prop_assert!(c.le(&m), "{} is not below {}", c, m);
            prop_assert!(c.le(&comm(&a, &be[..k], None)));
        }
        prop_assert!(comm(&a, &th, None).le(&comm(&a, &th[1..], None)));
    }

    #[test]
    fn permuting_coordinates_with_sigma_changes_nothing(
        a in arb_algebra(),
        seeds in prop::collection::vec(0usize..64, 3),
        perm_seed in any::<u64>(),
        pivot_seed in 0usize..3,
    ) {
        let con = all_congruences(&a).unwrap();
        let thetas: Vec<Partition> = seeds.iter().map(|&s| pick(&con, s)).collect();
        let pi = permutation(3, perm_seed);
        let mut sigma: Vec<usize> = (0..3).filter(|&k| k != pivot_seed).collect();
        sigma.push(pivot_seed);
        // Axis k of the new cube is axis π(k) of the old one.
        let moved: Vec<Partition> = (0..3).map(|k| thetas[pi[k] as usize].clone()).collect();
        let moved_sigma: Vec<usize> = sigma
            .iter()
            .map(|&s| pi.iter().position(|&p| p as usize == s).unwrap())
            .collect();
        prop_assert_eq!(comm(&a, &thetas, Some(&sigma)), comm(&a, &moved, Some(&moved_sigma)));
    }

    #[test]
    fn renaming_the_carrier_renames_the_commutator(
        a in arb_algebra(),
        seeds in prop::collection::vec(0usize..64, 2),
        perm_seed in any::<u64>(),
    ) {
        let con = all_congruences(&a).unwrap();
        let thetas: Vec<Partition> = seeds.iter().map(|&s| pick(&con, s)).collect();
        let perm = permutation(a.size(), perm_seed);
        let b = relabel(&a, &perm);
        let moved: Vec<Partition> = thetas.iter().map(|p| relabel_partition(p, &perm)).collect();
        prop_assert_eq!(relabel_partition(&comm(&a, &thetas, None), &perm), comm(&b, &moved, None));
    }

    #[test]
    fn lower_bound_is_sound_on_finite_algebras(
        a in arb_algebra(),
        seeds in prop::collection::vec(0usize..64, 2),
    ) {
        let con = all_congruences(&a).unwrap();
        let thetas: Vec<Partition> = seeds.iter().map(|&s| pick(&con, s)).collect();
        let pcs: Vec<PartialCongruence> = thetas
            .iter()
            .map(|p| {
                let mut pc = PartialCongruence::new();
                for (x, y) in p.pairs() {
                    pc.union(&Element::Fin(x as u32), &Element::Fin(y as u32)).unwrap();
                }
                pc
            })
            .collect();
        let lb = commutator_lower_bound(&a, &pcs, 2, 2, 1 << 20).unwrap();
        let exact = comm(&a, &thetas, None);
        for (x, y) in lb.related_pairs() {
            let (Element::Fin(x), Element::Fin(y)) = (x, y) else { panic!("finite elements only") };
            prop_assert!(exact.related(x as usize, y as usize));
        }
    }

    #[test]
    fn series_are_weakly_decreasing(a in arb_algebra()) {
        let one = Partition::total(a.size());
        for kind in [SeriesKind::Derived, SeriesKind::LeftLcs, SeriesKind::RightLcs, SeriesKind::Dim(3)] {
            let r = series(&a, kind, &one, 4, &Limits::default()).unwrap();
            for w in r.steps.windows(2) {
                prop_assert!(w[1].le(&w[0]));
            }
            prop_assert_eq!(r.stabilized, r.steps.len() >= 2 && r.steps[r.steps.len() - 1] == r.steps[r.steps.len() - 2]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn term_values_dominate_the_dimension_series(
        t in arb_term(3).prop_filter("depth at most 3", |t| depth_of(t) <= 3),
        idx in 0usize..53,
    ) {
        let small: Vec<FiniteAlgebra> = corpus().into_iter().filter(|a| a.size() <= 4).collect();
        let a = &small[idx % small.len()];
        let one = Partition::total(a.size());
        let lim = Limits::default();
        let r = lemma31_bound_check(a, &t, &one, 3, &lim).unwrap();
        prop_assert!(r.holds, "{}: [1]^3_{} = {} not below {}", t, r.m, r.series_term, r.term_value);
        // If the term kills 1, the dimension-3 series reaches 0 within m steps.
        if eval_term(a, &t, &one, &lim).unwrap().is_identity() {
            let s = series(a, SeriesKind::Dim(3), &one, r.m, &lim).unwrap();
            prop_assert!(s.steps.last().unwrap().is_identity());
        }
    }
}
