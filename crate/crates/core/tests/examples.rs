mod common;

use common::*;
use tangleforge::closure::{GreedyOrder, Separation, TreeCompatibleSet, Workbench};
use tangleforge::flower::{
    classify, concatenate, conforms_with_flower, crossing_profile, displayed_ks, loose_petals, maximal_flower,
    phi_minimum_representative, refine_with, s_order, tighten, verify_flower, Crossing, FlowerClass,
};
use tangleforge::ktree::{
    build_maximal_tree, conforms_with_tree, extend_tree, flower_to_tree, grow_terminal_bag, laminarity_check,
    retarget_terminal_bag, split_terminal_bag, verify_partial_ks_tree, Extension, PiTree, TreeAxiom, Vertex,
};
use tangleforge::oracle::{oracle_certify_tree, oracle_classes, oracle_flowers, oracle_full_closure, Oracle};
use tangleforge::rank::r8_set;
use tangleforge::system::is_vertically_k_connected;
use tangleforge::tangle::TangleAxiom;
use tangleforge::{
    build_r8_rank, canonical_vertical_tangle, enumerate_tangles, verify_tangle, ConnectivitySystem, Error,
    RankFunction, SubsetMask, Tangle,
};

/// The twelve 4-point planes of the cube: six faces and six diagonal planes.
const PLANES: [[usize; 4]; 12] = [
    [1, 2, 3, 4],
    [5, 6, 7, 8],
    [1, 2, 5, 6],
    [3, 4, 7, 8],
    [2, 3, 6, 7],
    [1, 4, 5, 8],
    [1, 3, 5, 7],
    [2, 4, 6, 8],
    [1, 2, 7, 8],
    [3, 4, 5, 6],
    [2, 3, 5, 8],
    [1, 4, 6, 7],
];

/// Rank as the largest intersection with a basis; bases are the 4-sets
/// that are not planes.
fn brute_r8_rank(x: SubsetMask) -> usize {
    let planes: Vec<SubsetMask> = PLANES.iter().map(|p| r8_set(p)).collect();
    SubsetMask::from_bits(0xff)
        .submasks()
        .filter(|b| b.len() == 4 && !planes.contains(b))
        .map(|b| (b & x).len())
        .max()
        .unwrap()
}

fn r8_tangle(sys: &ConnectivitySystem) -> Tangle {
    let members = std::iter::once(SubsetMask::EMPTY).chain((0..8).map(SubsetMask::singleton));
    Tangle::new(sys.ground(), 4, members).unwrap()
}

fn phi(wb: &Workbench) -> tangleforge::flower::Flower {
    verify_flower(
        wb,
        vec![r8_set(&[1, 2]), r8_set(&[3, 4]), r8_set(&[5, 6]), r8_set(&[7, 8])],
    )
    .unwrap()
}

fn set(elements: &[usize]) -> SubsetMask {
    SubsetMask::from_elements(elements.iter().copied())
}

#[test]
fn lambda_values() {
    let u24 = uniform(2, 4);
    let r = |x: SubsetMask| x.len().min(2) as i64;
    let x = set(&[0]);
    assert_eq!(u24.lambda(x), r(x) + r(u24.full() - x) - 2 + 1);
    assert_eq!(u24.lambda(SubsetMask::EMPTY), 1);

    let sys = r8();
    let x = r8_set(&[1, 2]);
    let y = sys.full() - x;
    assert_eq!(sys.lambda(x), (brute_r8_rank(x) + brute_r8_rank(y)) as i64 + 1 - 3);
    assert_eq!(sys.lambda(x), 4);

    // C4 with edges e1..e4 in cyclic order; {e1, e3} touches all four vertices.
    let c4 = graph(cycle(4));
    let x = set(&[0, 2]);
    let boundary = (0..4)
        .filter(|&v| {
            let touching: Vec<usize> = (0..4).filter(|&e| e == v || (e + 1) % 4 == v).collect();
            touching.iter().any(|&e| x.contains(e)) && touching.iter().any(|&e| !x.contains(e))
        })
        .count();
    assert_eq!(c4.lambda(x), boundary as i64);
}

#[test]
fn r8_rank_matches_bases() {
    let rank = build_r8_rank();
    for x in SubsetMask::from_bits(0xff).submasks() {
        assert_eq!(rank.rank(x) as usize, brute_r8_rank(x), "rank of {x}");
    }
    assert_eq!(rank.rank(r8_set(&[1, 2, 3, 4])), 3);
    assert_eq!(rank.rank(r8_set(&[1, 3, 5, 7])), 3);
    assert_eq!(rank.rank(r8_set(&[1, 2, 3])), 3);
    assert_eq!(rank.matroid_rank(), 4);
}

#[test]
fn separating_and_vertical_connectivity() {
    let u24 = uniform(2, 4);
    assert!(u24.is_exactly_k_separating(set(&[0, 1]), 3));
    assert!(u24.is_k_separating(u24.full(), 1));
    let sys = r8();
    assert!(sys.is_exactly_k_separating(r8_set(&[1, 3, 5, 7]), 4));

    let u = RankFunction::uniform(2, 4).unwrap();
    assert!(is_vertically_k_connected(&u, 3).unwrap());
    // A face and the opposite face form a 3-separation with both sides of
    // rank 3; every 4-separation has a side of rank at most 3.
    let r8 = build_r8_rank();
    assert!(!is_vertically_k_connected(&r8, 4).unwrap());
    assert!(is_vertically_k_connected(&r8, 5).unwrap());
}

#[test]
fn axiom_reports() {
    assert!(uniform(2, 4).verify_connectivity_axioms(1).is_empty());
    assert!(graph(cycle(4)).verify_connectivity_axioms(1).is_empty());
    let mut lambda = vec![0i64; 8];
    lambda[0b001] = 5;
    lambda[0b110] = 3;
    assert!(matches!(
        ConnectivitySystem::from_table(lambda),
        Err(Error::ViolationFound(_))
    ));
}

#[test]
fn tangle_examples() {
    let sys = r8();
    let t = r8_tangle(&sys);
    assert!(verify_tangle(&sys, &t).unwrap().is_empty());
    assert!(!t.is_robust());
    assert!(t.is_strong(r8_set(&[1, 2])));
    assert!(t
        .is_strong_partition(&[r8_set(&[1, 2]), r8_set(&[3, 4]), r8_set(&[5, 6]), r8_set(&[7, 8])])
        .unwrap());

    let u24 = uniform(2, 4);
    let tangles = enumerate_tangles(&u24, 2).unwrap();
    assert_eq!(tangles.len(), 1);
    let canonical = canonical_vertical_tangle(&RankFunction::uniform(2, 4).unwrap(), 2).unwrap();
    assert_eq!(canonical.members(), &[SubsetMask::EMPTY]);
    assert_eq!(tangles[0].members(), canonical.members());

    let r8m = canonical_vertical_tangle(&build_r8_rank(), 3).unwrap();
    assert_eq!(r8m.members().len(), 9);
    assert!(matches!(
        canonical_vertical_tangle(&RankFunction::uniform(2, 4).unwrap(), 4),
        Err(Error::PreconditionFailed(_))
    ));

    let u220 = RankFunction::uniform(2, 20).unwrap();
    let t20 = canonical_vertical_tangle(&u220, 2).unwrap();
    assert_eq!(t20.members(), &[SubsetMask::EMPTY]);
    assert!(t20.is_robust());

    // A member together with its complement covers E with three members.
    let bad = Tangle::new(u24.ground(), 2, [SubsetMask::EMPTY, set(&[0]), set(&[1, 2, 3])]).unwrap();
    let report = verify_tangle(&u24, &bad).unwrap();
    assert!(report.violations.iter().any(|v| v.axiom == TangleAxiom::T3));
}

#[test]
fn closure_examples() {
    let sys = r8();
    let t = r8_tangle(&sys);
    let wb = Workbench::new(&sys, &t);
    assert!(wb.is_fully_closed(r8_set(&[1, 2])).unwrap());
    assert!(wb.is_fully_closed(r8_set(&[2, 4, 6, 8])).unwrap());
    assert!(wb.is_fully_closed(sys.full()).unwrap());
    assert_eq!(wb.full_closure(r8_set(&[1, 2])).unwrap(), r8_set(&[1, 2]));
    assert_eq!(oracle_full_closure(&sys, &t, r8_set(&[1, 2])).unwrap(), r8_set(&[1, 2]));
    assert!(wb.validate_partial_k_sequence(r8_set(&[2, 4, 6, 8]), &[]));
    assert!(!wb.validate_partial_k_sequence(r8_set(&[2, 4, 6, 8]), &[r8_set(&[1])]));
    assert!(!wb.validate_partial_k_sequence(r8_set(&[1, 2]), &[r8_set(&[3]), r8_set(&[3])]));

    assert!(!wb.is_sequential(r8_set(&[1, 3, 5, 7])));
    assert!(wb.is_sequential(SubsetMask::EMPTY));
    // {3,...,8} absorbs the singleton {1}: λ({2}) = 3, so {1,2} is sequential.
    let oracle = Oracle::new(&sys, &t).unwrap();
    assert_eq!(oracle.full_closure(r8_set(&[3, 4, 5, 6, 7, 8])), sys.full());
    assert!(wb.is_sequential(r8_set(&[1, 2])));

    let face = Separation::new(wb.full(), r8_set(&[1, 2, 3, 4]), 4);
    let diag = Separation::new(wb.full(), r8_set(&[1, 3, 5, 7]), 4);
    assert!(wb.equivalent_separations(face, face).unwrap());
    assert!(!wb.equivalent_separations(face, diag).unwrap());
    assert!(wb.verify_tree_compatible().unwrap().is_empty());
    assert!(wb.in_s(r8_set(&[1, 3, 5, 7])));
    let ks: Vec<SubsetMask> = wb.enumerate_ks_separations().unwrap().iter().map(|s| s.side).collect();
    assert!(ks.contains(&r8_set(&[1, 2, 3, 4])));
    assert!(ks.contains(&r8_set(&[1, 3, 5, 7])));

    let everything = Workbench::with_s(&sys, &t, TreeCompatibleSet::explicit(sys.full().submasks()));
    assert!(!everything.verify_tree_compatible().unwrap().is_empty());
}

#[test]
fn u24_closures_and_separations_match_oracle() {
    let sys = uniform(2, 4);
    let t = enumerate_tangles(&sys, 2).unwrap().pop().unwrap();
    let wb = Workbench::new(&sys, &t);
    for x in strong_k_separating(&sys, &t) {
        assert_eq!(wb.full_closure(x).unwrap(), oracle_full_closure(&sys, &t, x).unwrap());
    }
    let engine: Vec<Vec<SubsetMask>> = wb.index().unwrap().classes().to_vec();
    let mut engine_sorted: Vec<Vec<SubsetMask>> = engine
        .into_iter()
        .map(|mut c| {
            c.sort();
            c
        })
        .collect();
    engine_sorted.sort();
    assert_eq!(engine_sorted, oracle_classes(&sys, &t).unwrap());
}

#[test]
fn equivalence_after_moving_a_weak_flap() {
    // Pendants are weak, so moving one across keeps the closures.
    let sys = graph(cycle_with_pendants(5));
    let t = enumerate_tangles(&sys, 2).unwrap().pop().unwrap();
    let wb = Workbench::new(&sys, &t);
    let full = wb.full();
    let mut moved = 0;
    for x in strong_k_separating(&sys, &t) {
        if !t.is_strong(full - x) {
            continue;
        }
        for a in (full - x).submasks() {
            let y = x | a;
            if !a.is_empty() && t.is_weak(a) && wb.is_k_sep(y) && t.is_strong(full - y) {
                assert!(wb.equivalent(x, y).unwrap(), "{x} vs {y}");
                moved += 1;
            }
        }
    }
    assert!(moved > 0);
}

#[test]
fn flower_examples() {
    let sys = r8();
    let t = r8_tangle(&sys);
    let wb = Workbench::new(&sys, &t);
    let f = phi(&wb);
    assert_eq!(classify(&wb, &f).unwrap(), FlowerClass::Anemone);
    assert!(loose_petals(&wb, &f).unwrap().is_empty());
    assert_eq!(tighten(&wb, &f).unwrap(), f);
    let order = s_order(&wb, &f).unwrap();
    assert_eq!(order.value, 4);

    let halves = concatenate(&wb, &f, &[2, 4]).unwrap();
    assert_eq!(halves.petals(), &[r8_set(&[1, 2, 3, 4]), r8_set(&[5, 6, 7, 8])]);
    assert_eq!(concatenate(&wb, &f, &[1, 2, 3, 4]).unwrap(), f);
    assert_eq!(concatenate(&wb, &f, &[4]).unwrap().petals(), &[sys.full()]);

    // {1,3} is a diagonal of a face: rank 2, complement rank 4, λ = 4.
    let diag_pair = r8_set(&[1, 3]);
    assert_eq!(
        (brute_r8_rank(diag_pair) + brute_r8_rank(sys.full() - diag_pair)) as i64 + 1 - 3,
        4
    );
    let bad = verify_flower(
        &wb,
        vec![r8_set(&[1, 3]), r8_set(&[2, 4]), r8_set(&[5, 6]), r8_set(&[7, 8])],
    );
    match bad {
        Err(Error::NotKSeparating(w)) => assert!(sys.lambda(w) > 4),
        other => panic!("expected a k-separation witness, got {other:?}"),
    }

    let displayed: Vec<SubsetMask> = displayed_ks(&wb, &f).unwrap().iter().map(|s| s.side).collect();
    assert!(displayed.contains(&r8_set(&[1, 2, 3, 4])));
    assert!(displayed.contains(&r8_set(&[1, 2, 5, 6])));

    let diag = Separation::new(wb.full(), r8_set(&[1, 3, 5, 7]), 4);
    assert!(!conforms_with_flower(&wb, diag, &f).unwrap());
    let petal = Separation::new(wb.full(), r8_set(&[1, 2]), 4);
    assert!(conforms_with_flower(&wb, petal, &f).unwrap());
    assert_eq!(phi_minimum_representative(&wb, diag, &f).unwrap(), diag);
    assert_eq!(crossing_profile(&wb, diag.side, &f, 0b1), Crossing::Weak);
    assert_eq!(
        crossing_profile(&wb, r8_set(&[1, 2, 3, 4]), &f, 0b1),
        Crossing::Uncrossed
    );
    assert_eq!(refine_with(&wb, &f, diag).unwrap(), None);
    let face = Separation::new(wb.full(), r8_set(&[1, 2, 3, 4]), 4);
    assert!(matches!(refine_with(&wb, &f, face), Err(Error::PreconditionFailed(_))));
    assert!(matches!(maximal_flower(&wb, face), Err(Error::NonRobustObstruction(s)) if s == r8_set(&[1, 3, 5, 7])));
    assert!(oracle_flowers(&sys, &t, 4).unwrap().iter().any(|g| {
        let mut p = g.petals.clone();
        p.sort();
        p == f.petals()
    }));
}

#[test]
fn two_petal_refinement_gives_four_petals() {
    let sys = uniform(5, 6);
    let t = enumerate_tangles(&sys, 2).unwrap().pop().unwrap();
    let wb = Workbench::new(&sys, &t);
    let f = verify_flower(&wb, vec![set(&[0, 1, 2]), set(&[3, 4, 5])]).unwrap();
    let sep = Separation::new(wb.full(), set(&[0, 3]), 2);
    assert!(!conforms_with_flower(&wb, sep, &f).unwrap());
    let g = refine_with(&wb, &f, sep).unwrap().unwrap();
    let (r, gr) = (set(&[0, 3]), set(&[1, 2, 4, 5]));
    assert_eq!(
        g.petals(),
        &[
            set(&[0, 1, 2]) & gr,
            set(&[0, 1, 2]) & r,
            set(&[3, 4, 5]) & r,
            set(&[3, 4, 5]) & gr
        ]
    );
}

#[test]
fn loose_petal_in_a_cycle_with_pendants() {
    // A petal made of a single pendant is absorbed into the petal holding
    // its attachment point.
    let sys = graph(cycle_with_pendants(4));
    let t = enumerate_tangles(&sys, 2).unwrap().pop().unwrap();
    let wb = Workbench::new(&sys, &t);
    let mut seen = 0;
    for g in oracle_flowers(&sys, &t, 4).unwrap() {
        let f = verify_flower(&wb, g.petals).unwrap();
        let loose = loose_petals(&wb, &f).unwrap();
        if loose.is_empty() {
            continue;
        }
        let tight = tighten(&wb, &f).unwrap();
        assert!(tight.n() < f.n());
        assert!(loose_petals(&wb, &tight).unwrap().is_empty());
        seen += 1;
    }
    assert!(seen > 0);
}

#[test]
fn maximal_flower_on_a_robust_instance_conforms() {
    let sys = uniform(2, 6);
    let t = enumerate_tangles(&sys, 2).unwrap().pop().unwrap();
    let wb = Workbench::new(&sys, &t);
    let f = maximal_flower(&wb, Separation::new(wb.full(), set(&[0]), 2)).unwrap();
    for sep in wb.enumerate_ks_separations().unwrap() {
        assert!(conforms_with_flower(&wb, sep, &f).unwrap());
    }
}

#[test]
fn tree_examples() {
    let sys = r8();
    let t = r8_tangle(&sys);
    let wb = Workbench::new(&sys, &t);
    let tree = flower_to_tree(&phi(&wb));
    assert_eq!(tree.vertices.iter().filter(|v| matches!(v, Vertex::Anemone)).count(), 1);
    assert_eq!(tree.bags().count(), 4);
    let verdict = verify_partial_ks_tree(&wb, &tree).unwrap();
    assert_eq!(verdict.failing().into_iter().collect::<Vec<_>>(), vec![TreeAxiom::P5]);
    let diag = Separation::new(wb.full(), r8_set(&[1, 3, 5, 7]), 4);
    assert!(!conforms_with_tree(&wb, diag, &tree).unwrap());
    assert!(laminarity_check(&tree));
    assert!(matches!(
        extend_tree(&wb, &PiTree::single_bag(4, sys.full())),
        Err(Error::PreconditionFailed(_))
    ));

    // Two bags whose edge displays a sequential separation break P1.
    let seq = PiTree {
        k: 4,
        vertices: vec![Vertex::Bag(r8_set(&[1, 2])), Vertex::Bag(sys.full() - r8_set(&[1, 2]))],
        edges: vec![(0, 1)],
    };
    assert!(verify_partial_ks_tree(&wb, &seq)
        .unwrap()
        .failing()
        .contains(&TreeAxiom::P1));
}

#[test]
fn single_class_gives_two_bags() {
    let sys = uniform(1, 2);
    let t = enumerate_tangles(&sys, 2).unwrap().pop().unwrap();
    let wb = Workbench::new(&sys, &t);
    let tree = build_maximal_tree(&wb).unwrap();
    assert_eq!(tree.vertices.len(), 2);
    assert!(oracle_certify_tree(&sys, &t, &tree).unwrap());
    assert_eq!(extend_tree(&wb, &tree).unwrap(), Extension::Done);
}

#[test]
fn no_classes_gives_a_single_bag() {
    let sys = uniform(9, 12);
    let t = canonical_vertical_tangle(&RankFunction::uniform(9, 12).unwrap(), 3).unwrap();
    let wb = Workbench::new(&sys, &t);
    let tree = build_maximal_tree(&wb).unwrap();
    assert_eq!(tree, PiTree::single_bag(3, sys.full()));
}

#[test]
fn first_extension_of_a_trivial_tree_displays_a_class() {
    let sys = graph(theta());
    let t = enumerate_tangles(&sys, 2).unwrap().pop().unwrap();
    let wb = Workbench::new(&sys, &t);
    match extend_tree(&wb, &PiTree::single_bag(2, sys.full())).unwrap() {
        Extension::Extended(next) => {
            assert!(!tangleforge::ktree::displayed_classes(&wb, &next).unwrap().is_empty());
        }
        Extension::Done => panic!("theta graph has (k,S)-separations"),
    }
}

#[test]
fn bag_surgery_examples() {
    let sys = graph(cycle_with_pendants(5));
    let t = enumerate_tangles(&sys, 2).unwrap().pop().unwrap();
    let wb = Workbench::new(&sys, &t);
    let tree = build_maximal_tree(&wb).unwrap();
    let (leaf, b) = tree
        .bags()
        .find(|&(v, b)| tree.is_leaf(v) && wb.is_ks(b))
        .expect("an S-terminal leaf");
    assert!(matches!(
        grow_terminal_bag(&wb, &tree, leaf, SubsetMask::EMPTY),
        Err(Error::PreconditionFailed(_))
    ));
    assert!(matches!(
        split_terminal_bag(&wb, &tree, leaf, b),
        Err(Error::PreconditionFailed(_))
    ));
    let same = retarget_terminal_bag(&wb, &tree, leaf, b).unwrap();
    assert_eq!(
        same.bags().map(|(_, x)| x).filter(|x| !x.is_empty()).count(),
        tree.bags().filter(|(_, x)| !x.is_empty()).count()
    );

    // Growing along the closure sequence makes the terminal bag fcl(B).
    let mut cur = tree.clone();
    for x in wb.closure_sequence(b, GreedyOrder::SmallestFirst).unwrap() {
        cur = grow_terminal_bag(&wb, &cur, leaf, x).unwrap();
    }
    assert_eq!(cur.vertices[leaf].bag(), Some(wb.full_closure(b).unwrap()));

    let other = wb
        .index()
        .unwrap()
        .ks_sides()
        .iter()
        .copied()
        .flat_map(|x| [x, sys.full() - x])
        .find(|&c| wb.full_closure(c).unwrap() != wb.full_closure(b).unwrap())
        .unwrap();
    assert!(matches!(
        retarget_terminal_bag(&wb, &tree, leaf, other),
        Err(Error::PreconditionFailed(_))
    ));
}
