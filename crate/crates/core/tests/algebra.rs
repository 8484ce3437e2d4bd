use cliffrb::dense::{conjugate_pauli, pauli_matrix, tableau_from_unitary, CMatrix};
use cliffrb::gates::{generates_clifford_group, GateLibrary, GateSequence, GateSet, QubitPattern};
use cliffrb::group::{enumerate_group, find_mapping, group_order, sample_choice_counts, sample_uniform};
use cliffrb::{CliffordTableau, PauliOperator};
use num_bigint::BigUint;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn p(s: &str) -> PauliOperator {
    s.parse().unwrap()
}

#[test]
fn pauli_products_match_matrices() {
    let xz = p("X").multiply(&p("Z")).unwrap();
    assert_eq!(xz.phase(), 3);
    assert_eq!(xz.unsigned(), p("Y"));
    let r = p("XZ").multiply(&p("ZZ")).unwrap();
    assert_eq!(r, p("-iYI"));
    for n in 1..=2 {
        for a in 0..(1u64 << (2 * n)) {
            for b in 0..(1u64 << (2 * n)) {
                let pa = PauliOperator::from_index(n, a);
                let pb = PauliOperator::from_index(n, b);
                let prod = pa.multiply(&pb).unwrap();
                let dense = pauli_matrix(&pa).mul(&pauli_matrix(&pb));
                assert!(pauli_matrix(&prod).max_abs_diff(&dense) < 1e-12);
                let comm = pauli_matrix(&pb).mul(&pauli_matrix(&pa));
                assert_eq!(pa.commutes(&pb).unwrap(), dense.max_abs_diff(&comm) < 1e-12);
            }
        }
    }
}

#[test]
fn commutation_examples() {
    assert!(!p("X").commutes(&p("Z")).unwrap());
    assert!(p("XI").commutes(&p("IZ")).unwrap());
    assert!(p("XZ").commutes(&p("ZX")).unwrap());
    assert_eq!(p("XIY").support(), vec![0, 2]);
    assert!(p("II").support().is_empty());
    assert_eq!(p("ZZZZZ").support(), vec![0, 1, 2, 3, 4]);
}

#[test]
fn paulis_separated_by_commutation() {
    for n in 1..=2usize {
        let all: Vec<_> = (1..(1u64 << (2 * n))).map(|i| PauliOperator::from_index(n, i)).collect();
        for a in &all {
            for b in &all {
                if a != b {
                    assert!(all.iter().any(|c| a.commutes(c).unwrap() != b.commutes(c).unwrap()));
                }
            }
        }
    }
}

#[test]
fn text_round_trip() {
    for s in ["-XZI", "+Y", "iZZ", "-iXYZI", "I"] {
        let q = p(s);
        let back: PauliOperator = format!("{q}").parse().unwrap();
        assert_eq!(q, back);
    }
    assert!("XQ".parse::<PauliOperator>().is_err());
}

#[test]
fn table_actions() {
    let lib = GateLibrary::builtin();
    let apply = |g: &str, s: &str| lib.get(g).unwrap().tableau.apply(&p(s)).unwrap();
    assert_eq!(apply("H", "X"), p("Z"));
    assert_eq!(apply("H", "Z"), p("X"));
    assert_eq!(apply("CX", "XI"), p("XX"));
    assert_eq!(apply("G", "XI"), p("YZ"));
    assert_eq!(apply("T", "X"), p("Y"));
    assert_eq!(apply("T", "Z"), p("X"));
    assert_eq!(apply("MS", "ZI"), p("-YX"));
    for name in GateLibrary::table_gates() {
        let g = lib.get(name).unwrap();
        assert_eq!(tableau_from_unitary(&g.dense).unwrap(), g.tableau, "{name}");
    }
    for name in lib.names() {
        let g = lib.get(name).unwrap();
        let inv = lib.get(&g.inverse).unwrap();
        assert!(g.tableau.compose(&inv.tableau).unwrap().is_identity(), "{name}");
        assert!(g.dense.mul(&inv.dense).phase_distance(&CMatrix::identity(g.dense.dim())) < 1e-12);
    }
}

#[test]
fn g_gate_identity_and_cz_from_cx() {
    let lib = GateLibrary::builtin();
    let mut lhs = GateSequence::new(2);
    lhs.push("Ym90", &[0]);
    lhs.push("Ym90", &[1]);
    lhs.push("MS", &[0, 1]);
    lhs.push("Y90", &[0]);
    lhs.push("Y90", &[1]);
    let mut rhs = GateSequence::new(2);
    rhs.push("CZ", &[0, 1]);
    rhs.push("Z90", &[0]);
    rhs.push("Z90", &[1]);
    let (a, b) = (lhs.to_dense(&lib).unwrap(), rhs.to_dense(&lib).unwrap());
    assert!(a.phase_distance(&b) < 1e-12);
    assert!(a.phase_distance(&lib.get("G").unwrap().dense) < 1e-12);

    let mut cz = GateSequence::new(2);
    cz.push("H", &[1]);
    cz.push("CX", &[0, 1]);
    cz.push("H", &[1]);
    assert_eq!(cz.to_tableau(&lib).unwrap(), lib.get("CZ").unwrap().tableau);
}

#[test]
fn sequence_tableau_matches_dense() {
    let lib = GateLibrary::builtin();
    let mut s = GateSequence::new(2);
    s.push("CX", &[0, 1]);
    s.push("H", &[0]);
    let t = s.to_tableau(&lib).unwrap();
    assert_eq!(t, tableau_from_unitary(&s.to_dense(&lib).unwrap()).unwrap());
    let x90 = &lib.get("X90").unwrap();
    let inv = x90.tableau.inverse();
    assert_eq!(inv, tableau_from_unitary(&x90.dense.adjoint()).unwrap());
}

#[test]
fn group_orders() {
    assert_eq!(group_order(1, false), BigUint::from(24u32));
    assert_eq!(group_order(2, false), BigUint::from(11520u32));
    assert_eq!(group_order(2, true), BigUint::from(720u32));
    assert_eq!(group_order(3, true), BigUint::from(1451520u32));
    for n in 1..=8 {
        let prod = sample_choice_counts(n).into_iter().fold(BigUint::from(1u32), |acc, (a, b)| acc * a * b);
        assert_eq!(prod, group_order(n, false), "n={n}");
    }
}

#[test]
fn enumeration() {
    assert_eq!(enumerate_group(1, true).unwrap().len(), 6);
    assert_eq!(enumerate_group(1, false).unwrap().len(), 24);
    let g2 = enumerate_group(2, false).unwrap();
    assert_eq!(g2.len(), 11520);
    assert!(g2.iter().any(|t| t.is_identity()));
    assert_eq!(enumerate_group(2, true).unwrap().len(), 720);
    assert!(enumerate_group(3, false).is_err());
    let keys: std::collections::HashSet<_> = g2.iter().map(|t| t.key(false)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    use rand::Rng;
    for _ in 0..1000 {
        let a = &g2[rng.random_range(0..g2.len())];
        let b = &g2[rng.random_range(0..g2.len())];
        assert!(keys.contains(&a.compose(b).unwrap().key(false)));
    }
}

#[test]
fn one_transitivity() {
    for n in 1..=2usize {
        let g = enumerate_group(n, false).unwrap();
        let m = 1u64 << (2 * n);
        let mut count = None;
        for i in 1..m {
            for j in 1..m {
                let (pi, pj) = (PauliOperator::from_index(n, i), PauliOperator::from_index(n, j));
                let c = g.iter().filter(|t| t.apply(&pi).unwrap().unsigned() == pj).count();
                assert_eq!(*count.get_or_insert(c), c);
            }
        }
    }
}

#[test]
fn tableaux_match_dense_conjugation() {
    let lib = GateLibrary::builtin();
    let mut s = GateSequence::new(2);
    for (name, q) in [("H", vec![0]), ("CX", vec![1, 0]), ("Z90", vec![1]), ("MS", vec![0, 1]), ("T", vec![0])] {
        s.push(name, &q);
        let u = s.to_dense(&lib).unwrap();
        let t = s.to_tableau(&lib).unwrap();
        for i in 0..16 {
            let pp = PauliOperator::from_index(2, i);
            assert_eq!(conjugate_pauli(&u, &pp).unwrap(), t.apply(&pp).unwrap());
        }
    }
}

#[test]
fn sampling_is_uniform_on_one_qubit() {
    let g = enumerate_group(1, false).unwrap();
    let idx: std::collections::HashMap<_, _> = g.iter().enumerate().map(|(i, t)| (t.key(false), i)).collect();
    let mut counts = vec![0u32; 24];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..24000 {
        counts[idx[&sample_uniform(1, &mut rng).key(false)]] += 1;
    }
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - 1000.0).powi(2) / 1000.0).sum();
    // 0.999 quantile of chi^2 with 23 dof
    assert!(chi2 < 49.728, "chi2 = {chi2}");
}

#[test]
fn samples_are_valid() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 1..=8 {
        for _ in 0..1000 {
            let t = sample_uniform(n, &mut rng);
            t.validate().unwrap();
        }
    }
}

#[test]
fn mapping_examples() {
    let lib = GateLibrary::builtin();
    for (a, b) in [("X", "Z"), ("Z", "Z"), ("XI", "ZZ"), ("YXZ", "IXI"), ("ZIY", "XYZ")] {
        let s = find_mapping(&p(a), &p(b)).unwrap();
        let img = s.to_tableau(&lib).unwrap().apply(&p(a)).unwrap();
        assert_eq!(img.unsigned(), p(b));
    }
    assert!(find_mapping(&p("II"), &p("XI")).is_err());
}

#[test]
fn closure_checks() {
    let lib = GateLibrary::builtin();
    let xy = GateSet::new(
        "xy",
        vec![GateSet::entry("X90", QubitPattern::Each, 1.0), GateSet::entry("Y90", QubitPattern::Each, 1.0)],
    )
    .unwrap();
    assert!(generates_clifford_group(&lib, &xy, 1, false).unwrap());
    assert!(generates_clifford_group(&lib, &GateSet::ion_trap(), 2, false).unwrap());
    let s = GateSet::new("s", vec![GateSet::entry("Z90", QubitPattern::Each, 1.0)]).unwrap();
    assert!(!generates_clifford_group(&lib, &s, 1, false).unwrap());
    assert!(generates_clifford_group(&lib, &xy, 3, false).is_err());
}

fn arb_pauli(n: usize) -> impl Strategy<Value = PauliOperator> {
    (0u64..(1 << (2 * n)), 0u8..4).prop_map(move |(i, ph)| PauliOperator::from_index(n, i).with_phase(ph))
}

fn arb_clifford(n: usize) -> impl Strategy<Value = CliffordTableau> {
    any::<u64>().prop_map(move |s| sample_uniform(n, &mut ChaCha8Rng::seed_from_u64(s)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn multiplication_associative(a in arb_pauli(3), b in arb_pauli(3), c in arb_pauli(3)) {
        let l = a.multiply(&b).unwrap().multiply(&c).unwrap();
        let r = a.multiply(&b.multiply(&c).unwrap()).unwrap();
        prop_assert_eq!(l, r);
    }

    #[test]
    fn commutation_symmetric(a in arb_pauli(4), b in arb_pauli(4)) {
        prop_assert_eq!(a.commutes(&b).unwrap(), b.commutes(&a).unwrap());
        prop_assert!(a.commutes(&a).unwrap());
    }

    #[test]
    fn action_is_homomorphism(n in 1usize..=6, s in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let c = sample_uniform(n, &mut rng);
        let d = sample_uniform(n, &mut rng);
        let idx: Vec<u64> = (0..2).map(|_| rand::Rng::random_range(&mut rng, 0..(1u64 << (2 * n)))).collect();
        let (pa, pb) = (PauliOperator::from_index(n, idx[0]), PauliOperator::from_index(n, idx[1]));
        let cd = c.compose(&d).unwrap();
        prop_assert_eq!(cd.apply(&pa).unwrap(), c.apply(&d.apply(&pa).unwrap()).unwrap());
        prop_assert_eq!(pa.commutes(&pb).unwrap(), c.apply(&pa).unwrap().commutes(&c.apply(&pb).unwrap()).unwrap());
        prop_assert!(c.compose(&c.inverse()).unwrap().is_identity());
        prop_assert!(c.inverse().compose(&c).unwrap().is_identity());
        let enc = c.encode(false);
        prop_assert_eq!(CliffordTableau::decode(n, &enc).unwrap(), c.clone());
        let text = format!("{c}");
        prop_assert_eq!(text.parse::<CliffordTableau>().unwrap(), c);
    }

    #[test]
    fn pauli_clifford_self_inverse(q in arb_pauli(3)) {
        let t = CliffordTableau::from_pauli(&q);
        prop_assert_eq!(t.inverse(), t.clone());
        prop_assert!(t.is_pauli());
    }

    #[test]
    fn mapping_round_trip(a in arb_pauli(5), b in arb_pauli(5)) {
        prop_assume!(!a.is_identity() && !b.is_identity());
        let lib = GateLibrary::builtin();
        let (a, b) = (a.unsigned(), b.unsigned());
        let s = find_mapping(&a, &b).unwrap();
        prop_assert!(s.len() <= 4 * 5 + 3);
        prop_assert_eq!(s.to_tableau(&lib).unwrap().apply(&a).unwrap().unsigned(), b);
    }

    #[test]
    fn identity_compose(c in arb_clifford(3)) {
        let id = CliffordTableau::identity(3);
        prop_assert_eq!(c.compose(&id).unwrap(), c.clone());
        prop_assert_eq!(id.compose(&c).unwrap(), c);
    }
}
