//! Clifford group order, enumeration, uniform sampling and Pauli mapping.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec::Vec;

use hashbrown::HashSet;
use num_bigint::BigUint;
use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::gates::{GateLibrary, GateSequence};
use crate::pauli::{Letter, PauliOperator};
use crate::tableau::CliffordTableau;

/// `|C_n| = 2^{n²+2n} ∏_{k=1}^{n} (4^k − 1)`, divided by `4ⁿ` for the quotient.
pub fn group_order(n: usize, quotient: bool) -> BigUint {
    let mut acc = BigUint::from(1u32) << (n * n + 2 * n);
    for k in 1..=n {
        acc *= (BigUint::from(1u32) << (2 * k)) - 1u32;
    }
    if quotient {
        acc >>= 2 * n;
    }
    acc
}

pub(crate) fn group_order_u64(n: usize, quotient: bool) -> u64 {
    u64::try_from(group_order(n, quotient)).unwrap_or(u64::MAX)
}

/// Per-qubit generators H, S and CX in both directions.
fn generator_sequences(n: usize) -> Vec<GateSequence> {
    let mut out = Vec::new();
    for q in 0..n {
        for g in ["H", "Z90"] {
            let mut s = GateSequence::new(n);
            s.push(g, &[q]);
            out.push(s);
        }
    }
    for a in 0..n {
        for b in 0..n {
            if a != b {
                let mut s = GateSequence::new(n);
                s.push("CX", &[a, b]);
                out.push(s);
            }
        }
    }
    out
}

/// Breadth-first closure from the identity. With `quotient` one representative
/// (unsigned images) per Pauli coset is kept.
pub fn enumerate_group(n: usize, quotient: bool) -> Result<Vec<CliffordTableau>> {
    let limit = if quotient { 3 } else { 2 };
    if n == 0 || n > limit {
        return Err(Error::ResourceLimit(format!("enumeration supports n <= {limit} (quotient={quotient}), got {n}")));
    }
    let lib = GateLibrary::builtin();
    let gens: Vec<_> = generator_sequences(n)
        .into_iter()
        .map(|s| {
            let g = &s.gates[0];
            (lib.get(&g.name).expect("generator").action().clone(), g.qubits.clone())
        })
        .collect();
    let mut seen = HashSet::new();
    let id = CliffordTableau::identity(n);
    seen.insert(id.key(quotient));
    let mut out = Vec::new();
    let mut queue = VecDeque::from([id]);
    while let Some(t) = queue.pop_front() {
        for (act, qs) in &gens {
            let mut next = t.clone();
            next.apply_local_left(act, qs);
            let next = if quotient { next.coset_representative() } else { next };
            if seen.insert(next.key(quotient)) {
                queue.push_back(next);
            }
        }
        out.push(t);
    }
    Ok(out)
}

fn random_letter<R: Rng + ?Sized>(rng: &mut R) -> Letter {
    match rng.random_range(0..4u8) {
        0 => Letter::I,
        1 => Letter::X,
        2 => Letter::Y,
        _ => Letter::Z,
    }
}

fn anticommuting_partner(p: &PauliOperator) -> PauliOperator {
    let q = p.support()[0];
    let l = if p.letter(q) == Letter::X { Letter::Z } else { Letter::X };
    PauliOperator::single(p.n_qubits(), q, l)
}

/// Sizes of the X-image and Z-image choice sets at each stage, outermost
/// (qubit 0) first.
pub fn sample_choice_counts(n: usize) -> Vec<(BigUint, BigUint)> {
    (0..n)
        .map(|k| {
            let m = n - k;
            let four_m = BigUint::from(1u32) << (2 * m);
            ((four_m.clone() - 1u32) * 2u32, four_m)
        })
        .collect()
}

/// Exactly uniform Clifford. Stage k picks a signed `P = C(X_k)` and an
/// anticommuting signed `Q = C(Z_k)` supported on qubits k..n, then composes a
/// Clifford realizing that pair with the (uniform) inner stages.
pub fn sample_uniform<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CliffordTableau {
    let lib = GateLibrary::builtin();
    sample_uniform_with(&lib, n, rng)
}

pub fn sample_uniform_with<R: Rng + ?Sized>(lib: &GateLibrary, n: usize, rng: &mut R) -> CliffordTableau {
    let mut t = CliffordTableau::identity(n);
    for k in (0..n).rev() {
        let p = loop {
            let mut p = PauliOperator::identity(n);
            for q in k..n {
                p.set(q, random_letter(rng));
            }
            if !p.is_identity() {
                break p;
            }
        };
        let mut q = PauliOperator::identity(n);
        for j in k..n {
            q.set(j, random_letter(rng));
        }
        if q.commutes_unchecked(&p) {
            q = q.multiply(&anticommuting_partner(&p)).expect("same size").unsigned();
        }
        let (sp, sq) = (rng.random_bool(0.5), rng.random_bool(0.5));
        let stage = pair_to_standard(lib, &p, &q, k);
        // W maps P -> s1 X_k, Q -> s2 Z_k; W^{-1} ∘ F realizes (±P, ±Q)
        let w = stage.to_tableau(lib).expect("valid stage");
        let s1 = w.apply_unchecked(&p).sign();
        let s2 = w.apply_unchecked(&q).sign();
        let flip_x = s1 ^ sp;
        let flip_z = s2 ^ sq;
        t.apply_local_left(
            lib.get(if flip_x && flip_z { "Y" } else if flip_x { "Z" } else if flip_z { "X" } else { "I" }).expect("pauli").action(),
            &[k],
        );
        let inv = stage.inverse(lib).expect("invertible");
        inv.apply_to(lib, &mut t).expect("valid stage");
    }
    t
}

/// Gates on one qubit mapping `l` to Z (none for Z).
fn letter_to_z(l: Letter) -> Option<&'static str> {
    match l {
        Letter::X => Some("H"),
        Letter::Y => Some("X90"),
        _ => None,
    }
}

/// Sequence mapping `p` to ±Z at its first support qubit, which is returned.
fn to_single_z(p: &PauliOperator, seq: &mut GateSequence) -> usize {
    let sup = p.support();
    for &q in &sup {
        if let Some(g) = letter_to_z(p.letter(q)) {
            seq.push(g, &[q]);
        }
    }
    let pivot = sup[0];
    if sup.len() > 1 {
        seq.push("H", &[pivot]);
        for &b in &sup[1..] {
            seq.push("CZ", &[pivot, b]);
        }
        seq.push("H", &[pivot]);
    }
    pivot
}

/// Gates mapping anticommuting `(p, q)` to `(±X_k, ±Z_k)` with supports in k..n.
fn pair_to_standard(lib: &GateLibrary, p: &PauliOperator, q: &PauliOperator, k: usize) -> GateSequence {
    let n = p.n_qubits();
    let mut seq = GateSequence::new(n);
    let pivot = to_single_z(p, &mut seq);
    if pivot != k {
        seq.push("SWAP", &[pivot, k]);
    }
    seq.push("H", &[k]);
    let mut q2 = seq.to_tableau(lib).expect("valid").apply_unchecked(q);
    let mut tail = GateSequence::new(n);
    for r in q2.support() {
        if r == k {
            continue;
        }
        if let Some(g) = letter_to_z(q2.letter(r)) {
            tail.push(g, &[r]);
        }
        tail.push("CX", &[r, k]);
    }
    let t = tail.to_tableau(lib).expect("valid");
    q2 = t.apply_unchecked(&q2);
    seq.extend(&tail);
    if q2.letter(k) == Letter::Y {
        seq.push("X90", &[k]);
    }
    seq
}

/// Sequence of one-qubit, SWAP and CZ gates whose tableau maps `p` to ±`q`.
pub fn find_mapping(p: &PauliOperator, q: &PauliOperator) -> Result<GateSequence> {
    check_dim(p.n_qubits(), q.n_qubits())?;
    if p.is_identity() || q.is_identity() {
        return Err(Error::InvalidArgument("find_mapping needs non-identity Paulis".into()));
    }
    let lib = GateLibrary::builtin();
    let n = p.n_qubits();
    let mut seq = GateSequence::new(n);
    let pp = to_single_z(p, &mut seq);
    let mut back = GateSequence::new(n);
    let pq = to_single_z(q, &mut back);
    if pp != pq {
        seq.push("SWAP", &[pp, pq]);
    }
    seq.extend(&back.inverse(&lib)?);
    Ok(seq)
}
