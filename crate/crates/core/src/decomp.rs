//! Clifford decomposition: weighted Cayley-graph search for small n and the
//! block reduction of the Choi-Jamiolkowski stabilizer matrix for any n.

use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use hashbrown::HashMap;

use crate::error::{Error, Result};
use crate::gates::{GateApp, GateLibrary, GateSequence, GateSet};
use crate::group::group_order_u64;
use crate::pauli::{Letter, PauliOperator};
use crate::stab::{RowOp, StabilizerState};
use crate::tableau::{CliffordTableau, LocalAction};

/// Lexicographic cost: multi-qubit gate count, then total gate count.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cost {
    pub primary: u32,
    pub total: u32,
}

/// Optimal sequences for every element of a (quotient) group, stored as a
/// shortest-path tree over the generator placements.
#[derive(Clone, Debug)]
pub struct DecompositionTable {
    pub gate_set: String,
    pub n_qubits: usize,
    pub quotient: bool,
    generators: Vec<GateApp>,
    keys: Vec<u128>,
    parent: Vec<u32>,
    via: Vec<u16>,
    cost: Vec<Cost>,
    index: HashMap<u128, u32>,
}

const ROOT: u32 = u32::MAX;

impl DecompositionTable {
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn generators(&self) -> &[GateApp] {
        &self.generators
    }

    fn node(&self, t: &CliffordTableau) -> Option<u32> {
        if t.n_qubits() != self.n_qubits {
            return None;
        }
        self.index.get(&t.key(self.quotient)).copied()
    }

    pub fn cost(&self, t: &CliffordTableau) -> Option<Cost> {
        self.node(t).map(|i| self.cost[i as usize])
    }

    pub fn sequence(&self, t: &CliffordTableau) -> Option<GateSequence> {
        self.node(t).map(|i| self.sequence_at(i as usize))
    }

    fn sequence_at(&self, mut i: usize) -> GateSequence {
        let mut gates = Vec::new();
        while self.parent[i] != ROOT {
            gates.push(self.generators[self.via[i] as usize].clone());
            i = self.parent[i] as usize;
        }
        gates.reverse();
        GateSequence { n_qubits: self.n_qubits, gates }
    }

    pub fn tableau_at(&self, i: usize) -> CliffordTableau {
        let k = self.keys[i];
        CliffordTableau::decode(self.n_qubits, &[k as u64, (k >> 64) as u64]).expect("stored key decodes")
    }

    /// `(tableau, sequence, cost)` in settlement order.
    pub fn entries(&self) -> impl Iterator<Item = (CliffordTableau, GateSequence, Cost)> + '_ {
        (0..self.len()).map(|i| (self.tableau_at(i), self.sequence_at(i), self.cost[i]))
    }

    /// Number of elements per primary-gate count.
    pub fn histogram(&self) -> BTreeMap<u32, u64> {
        let mut h = BTreeMap::new();
        for c in &self.cost {
            *h.entry(c.primary).or_insert(0) += 1;
        }
        h
    }

    pub fn mean_primary(&self) -> f64 {
        let s: u64 = self.cost.iter().map(|c| u64::from(c.primary)).sum();
        s as f64 / self.len() as f64
    }

    /// Compact form: header, then per element (key, parent, generator).
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.len() * 22);
        out.extend_from_slice(b"CRBT");
        out.push(self.n_qubits as u8);
        out.push(self.quotient as u8);
        out.extend_from_slice(&(self.len() as u32).to_le_bytes());
        for i in 0..self.len() {
            out.extend_from_slice(&self.keys[i].to_le_bytes());
            out.extend_from_slice(&self.parent[i].to_le_bytes());
            out.extend_from_slice(&self.via[i].to_le_bytes());
        }
        out
    }

    /// Inverse of [`Self::to_bytes`]; generators and costs are rebuilt from `gs`.
    pub fn from_bytes(lib: &GateLibrary, gs: &GateSet, bytes: &[u8]) -> Result<Self> {
        let bad = || Error::Parse("malformed decomposition table".into());
        if bytes.len() < 10 || &bytes[..4] != b"CRBT" {
            return Err(bad());
        }
        let n = bytes[4] as usize;
        let quotient = bytes[5] != 0;
        let len = u32::from_le_bytes(bytes[6..10].try_into().map_err(|_| bad())?) as usize;
        if bytes.len() != 10 + 22 * len {
            return Err(bad());
        }
        let generators: Vec<GateApp> = gs.expand(lib, n)?.into_iter().map(|(g, _)| g).collect();
        let arity: Vec<bool> = generators.iter().map(|g| g.qubits.len() > 1).collect();
        let mut t = DecompositionTable {
            gate_set: gs.name.clone(),
            n_qubits: n,
            quotient,
            generators,
            keys: Vec::with_capacity(len),
            parent: Vec::with_capacity(len),
            via: Vec::with_capacity(len),
            cost: Vec::with_capacity(len),
            index: HashMap::with_capacity(len),
        };
        for i in 0..len {
            let b = &bytes[10 + 22 * i..10 + 22 * (i + 1)];
            let key = u128::from_le_bytes(b[..16].try_into().map_err(|_| bad())?);
            let parent = u32::from_le_bytes(b[16..20].try_into().map_err(|_| bad())?);
            let via = u16::from_le_bytes(b[20..22].try_into().map_err(|_| bad())?);
            let cost = if parent == ROOT {
                Cost::default()
            } else {
                let p = *t.cost.get(parent as usize).ok_or_else(bad)?;
                let multi = *arity.get(via as usize).ok_or_else(bad)?;
                Cost { primary: p.primary + multi as u32, total: p.total + 1 }
            };
            t.index.insert(key, i as u32);
            t.keys.push(key);
            t.parent.push(parent);
            t.via.push(via);
            t.cost.push(cost);
        }
        Ok(t)
    }
}

/// Dijkstra over the Cayley graph with edge cost (1, 1) for multi-qubit
/// gates and (0, 1) otherwise; the first settlement of a vertex is optimal.
pub fn cayley_search(lib: &GateLibrary, gs: &GateSet, n: usize, quotient: bool) -> Result<DecompositionTable> {
    let limit = if quotient { 3 } else { 2 };
    if n == 0 || n > limit {
        return Err(Error::ResourceLimit(format!("cayley search supports n <= {limit} (quotient={quotient}), got {n}")));
    }
    let generators: Vec<GateApp> = gs.expand(lib, n)?.into_iter().map(|(g, _)| g).collect();
    let actions: Vec<(LocalAction, bool)> = generators
        .iter()
        .map(|g| lib.get(&g.name).map(|d| (d.action().clone(), d.arity > 1)))
        .collect::<Result<_>>()?;
    let target = group_order_u64(n, quotient) as usize;
    let mut table = DecompositionTable {
        gate_set: gs.name.clone(),
        n_qubits: n,
        quotient,
        generators,
        keys: Vec::with_capacity(target),
        parent: Vec::with_capacity(target),
        via: Vec::with_capacity(target),
        cost: Vec::with_capacity(target),
        index: HashMap::with_capacity(target),
    };
    // tentative: key -> (cost, parent node, generator)
    let mut best: HashMap<u128, (Cost, u32, u16)> = HashMap::new();
    let mut heap = BinaryHeap::new();
    let root = CliffordTableau::identity(n).key(quotient);
    best.insert(root, (Cost::default(), ROOT, 0));
    heap.push(Reverse((Cost::default(), root)));
    while let Some(Reverse((c, key))) = heap.pop() {
        if table.index.contains_key(&key) {
            continue;
        }
        let (bc, parent, via) = best[&key];
        if bc != c {
            continue;
        }
        let id = table.keys.len() as u32;
        table.index.insert(key, id);
        table.keys.push(key);
        table.parent.push(parent);
        table.via.push(via);
        table.cost.push(c);
        best.remove(&key);
        let t = table.tableau_at(id as usize);
        for (gi, ((act, multi), g)) in actions.iter().zip(&table.generators).enumerate() {
            let mut next = t.clone();
            next.apply_local_left(act, &g.qubits);
            let nk = next.key(quotient);
            if table.index.contains_key(&nk) {
                continue;
            }
            let nc = Cost { primary: c.primary + *multi as u32, total: c.total + 1 };
            let better = best.get(&nk).is_none_or(|(oc, _, _)| nc < *oc);
            if better {
                best.insert(nk, (nc, id, gi as u16));
                heap.push(Reverse((nc, nk)));
            }
        }
    }
    if table.len() != target {
        return Err(Error::Coverage(target - table.len()));
    }
    Ok(table)
}

/// Shortest word in `H`, `Z90` whose coset maps each `from` letter to the
/// paired `to` letter.
fn local_map(lib: &GateLibrary, pairs: &[(Letter, Letter)]) -> Vec<&'static str> {
    const WORDS: [&[&str]; 7] =
        [&[], &["H"], &["Z90"], &["H", "Z90"], &["Z90", "H"], &["H", "Z90", "H"], &["Z90", "H", "Z90"]];
    for w in WORDS {
        let mut t = CliffordTableau::identity(1);
        for g in w {
            t.apply_local_left(lib.get(g).expect("builtin").action(), &[0]);
        }
        let ok = pairs.iter().all(|&(a, b)| t.apply_unchecked(&PauliOperator::single(1, 0, a)).letter(0) == b);
        if ok {
            return w.to_vec();
        }
    }
    unreachable!("one-qubit cosets are covered by the word list")
}

/// The 2n-row stabilizer matrix of the Choi-Jamiolkowski state. Columns
/// 0..n are the left half, n..2n the right half.
struct BellMatrix<'a> {
    lib: &'a GateLibrary,
    n: usize,
    rows: Vec<PauliOperator>,
    /// Gates applied to the right half, in order.
    gates: GateSequence,
}

impl<'a> BellMatrix<'a> {
    fn new(lib: &'a GateLibrary, c: &CliffordTableau) -> Self {
        let n = c.n_qubits();
        let mut rows = Vec::with_capacity(2 * n);
        for i in 0..n {
            rows.push(PauliOperator::single(n, i, Letter::X).tensor(c.image_x(i)));
        }
        for i in 0..n {
            rows.push(PauliOperator::single(n, i, Letter::Z).tensor(c.image_z(i)));
        }
        BellMatrix { lib, n, rows, gates: GateSequence::new(n) }
    }

    /// Entry of quadrant 1..4 (clockwise from upper left) at local (row, col).
    fn q(&self, quadrant: u8, r: usize, c: usize) -> Letter {
        let n = self.n;
        match quadrant {
            1 => self.rows[r].letter(c),
            2 => self.rows[r].letter(n + c),
            3 => self.rows[n + r].letter(n + c),
            _ => self.rows[n + r].letter(c),
        }
    }

    fn gate(&mut self, name: &str, qubits: &[usize]) {
        let act = self.lib.get(name).expect("builtin gate").action();
        let shifted: Vec<usize> = qubits.iter().map(|q| q + self.n).collect();
        for r in self.rows.iter_mut() {
            act.conjugate(r, &shifted);
        }
        self.gates.push(name, qubits);
    }

    fn mul_row(&mut self, target: usize, src: usize) {
        let s = self.rows[src].clone();
        self.rows[target].mul_assign_right(&s);
    }

    fn replay(&mut self, offset: usize, ops: &[RowOp]) {
        for op in ops {
            match *op {
                RowOp::Mul { target, src } => self.mul_row(offset + target, offset + src),
                RowOp::Swap(a, b) => self.rows.swap(offset + a, offset + b),
                RowOp::Replace(_) => unreachable!("reduction does not replace rows"),
            }
        }
    }

    /// Bottom-half rows restricted to the right half.
    fn quadrant3_rows(&self) -> Vec<PauliOperator> {
        let right: Vec<usize> = (self.n..2 * self.n).collect();
        self.rows[self.n..].iter().map(|r| r.restrict(&right).unsigned()).collect()
    }
}

/// Gates `G_1..G_m` (in order) with `G_m ⋯ G_1 C = I`; with `sign_fix` false
/// only up to a Pauli.
fn reduce_to_identity(lib: &GateLibrary, c: &CliffordTableau, sign_fix: bool) -> GateSequence {
    let n = c.n_qubits();
    let mut m = BellMatrix::new(lib, c);
    if !c.same_coset(&CliffordTableau::identity(n)) {
        reduce_unsigned(&mut m);
    }
    // 8. signs
    if sign_fix {
        for k in 0..n {
            if m.rows[k].sign() {
                m.gate("Z", &[k]);
            }
            if m.rows[n + k].sign() {
                m.gate("X", &[k]);
            }
        }
    }
    m.gates
}

/// Steps 1-7: every quadrant diagonal, signs untouched.
fn reduce_unsigned(m: &mut BellMatrix<'_>) {
    let n = m.n;
    let lib = m.lib;

    // 1. GSSF on quadrant 3 by row operations on the bottom half
    let (q3, ops) = StabilizerState::from_rows_journaled(m.quadrant3_rows()).expect("tableau rows are a stabilizer");
    m.replay(n, &ops);

    // 2. diagonal -> X, neighbor -> Z
    for k in 0..n {
        let diag = q3.diagonal(k);
        let nb = q3.neighbor(k);
        let nb = if nb == Letter::I { [Letter::Z, Letter::X, Letter::Y].into_iter().find(|l| l.anticommutes(diag)).expect("non-identity") } else { nb };
        for g in local_map(lib, &[(diag, Letter::X), (nb, Letter::Z)]) {
            m.gate(g, &[k]);
        }
    }

    // 3. clear off-diagonal Z in quadrant 3
    for k in 0..n {
        for l in k + 1..n {
            if m.q(3, k, l) == Letter::Z {
                m.gate("CZ", &[k, l]);
            }
        }
    }

    // 4. quadrant 4 (I/Z only) to the identity by bottom-row operations
    for col in 0..n {
        let pivot = (col..n).find(|&r| m.q(4, r, col) == Letter::Z).expect("quadrant 4 has full rank");
        m.rows.swap(n + col, n + pivot);
        for r in 0..n {
            if r != col && m.q(4, r, col) == Letter::Z {
                m.mul_row(n + r, n + col);
            }
        }
    }

    // 5. quadrant 3 (I/X only) to the identity with CX, SWAP as three CX
    for k in 0..n {
        if m.q(3, k, k) == Letter::I {
            let l = (k + 1..n).find(|&l| m.q(3, k, l) == Letter::X).expect("quadrant 3 has full rank");
            m.gate("CX", &[k, l]);
            m.gate("CX", &[l, k]);
            m.gate("CX", &[k, l]);
        }
        for l in 0..n {
            if l != k && m.q(3, k, l) == Letter::X {
                m.gate("CX", &[k, l]);
            }
        }
    }

    // 6. X -> Z on quadrant 3, quadrant 2 diagonal -> X
    for k in 0..n {
        let d2 = m.q(2, k, k);
        for g in local_map(lib, &[(Letter::X, Letter::Z), (d2, Letter::X)]) {
            m.gate(g, &[k]);
        }
    }

    // 7. clear off-diagonal Z in quadrant 2
    for k in 0..n {
        for l in k + 1..n {
            if m.q(2, k, l) == Letter::Z {
                m.gate("CZ", &[k, l]);
            }
        }
    }
}

/// Largest output length of [`block_decompose`]: `2n² + 9n`, so `c = 11` in
/// the `c·n²` bound.
pub fn block_gate_bound(n: usize) -> usize {
    2 * n * n + 9 * n
}

/// Decomposition into blocks of one-qubit gates (H, S, Paulis), CZ and CX.
/// The sequence composes to `c` exactly with `sign_fix`, up to a Pauli
/// otherwise.
pub fn block_decompose(lib: &GateLibrary, c: &CliffordTableau, sign_fix: bool) -> GateSequence {
    let forward = reduce_to_identity(lib, c, sign_fix);
    forward.inverse(lib).expect("builtin gates invert")
}

/// Rewrites CZ, SWAP, MS and G through CZ and `target`'s entangler.
fn two_qubit_rule(name: &str, q: &[usize], entangler: &str) -> Result<Vec<GateApp>> {
    let (a, b) = (q[0], q[1]);
    let g = |n: &str, qs: &[usize]| GateApp::new(n, qs);
    // everything to CZ first
    let via_cz: Vec<GateApp> = match name {
        "CZ" => vec![g("CZ", &[a, b])],
        "CX" => vec![g("H", &[b]), g("CZ", &[a, b]), g("H", &[b])],
        "SWAP" => {
            let mut v = Vec::new();
            for (c, t) in [(a, b), (b, a), (a, b)] {
                v.extend([g("H", &[t]), g("CZ", &[c, t]), g("H", &[t])]);
            }
            v
        }
        // G ≅ CZ · (S ⊗ S) up to a Pauli
        "G" | "Gdg" => vec![g("CZ", &[a, b]), g("Z90", &[a]), g("Z90", &[b])],
        "MS" | "MSdg" => vec![
            g("H", &[a]),
            g("H", &[b]),
            g("CZ", &[a, b]),
            g("Z90", &[a]),
            g("Z90", &[b]),
            g("H", &[a]),
            g("H", &[b]),
        ],
        _ => return Err(Error::UnsupportedGate(name.into())),
    };
    let mut out = Vec::new();
    for app in via_cz {
        if app.name != "CZ" || entangler == "CZ" {
            out.push(app);
            continue;
        }
        let (a, b) = (app.qubits[0], app.qubits[1]);
        match entangler {
            "CX" => out.extend([g("H", &[b]), g("CX", &[a, b]), g("H", &[b])]),
            "G" | "Gdg" => out.extend([g(entangler, &[a, b]), g("Zm90", &[a]), g("Zm90", &[b])]),
            "MS" | "MSdg" => out.extend([
                g("H", &[a]),
                g("H", &[b]),
                g(entangler, &[a, b]),
                g("H", &[a]),
                g("H", &[b]),
                g("Zm90", &[a]),
                g("Zm90", &[b]),
            ]),
            _ => return Err(Error::UnsupportedGate(entangler.into())),
        }
    }
    Ok(out)
}

/// Coset-exact rewrite of `seq` into the gates of `target`. One-qubit gates
/// become the shortest word over `target`'s one-qubit gates.
pub fn translate_sequence(lib: &GateLibrary, seq: &GateSequence, target: &GateSet) -> Result<GateSequence> {
    let names: Vec<&str> = target.entries.iter().map(|e| lib.resolve_name(&e.gate)).collect();
    let in_target = |g: &str| names.contains(&lib.resolve_name(g));
    let mut one_q = Vec::new();
    let mut entangler = None;
    for name in &names {
        match lib.get(name)?.arity {
            1 => one_q.push(*name),
            2 if entangler.is_none() => entangler = Some(*name),
            _ => {}
        }
    }
    // shortest word per one-qubit coset over the target's one-qubit gates
    let mut words: HashMap<u128, Vec<&str>> = HashMap::new();
    let id = CliffordTableau::identity(1);
    words.insert(id.key(true), Vec::new());
    let mut frontier = vec![(id, Vec::<&str>::new())];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for (t, w) in &frontier {
            for g in &one_q {
                let mut u = t.clone();
                u.apply_local_left(lib.get(g)?.action(), &[0]);
                let k = u.key(true);
                if !words.contains_key(&k) {
                    let mut w2 = w.clone();
                    w2.push(*g);
                    words.insert(k, w2.clone());
                    next.push((u, w2));
                }
            }
        }
        frontier = next;
    }
    let mut out = GateSequence::new(seq.n_qubits);
    let emit_1q = |app: &GateApp, out: &mut GateSequence| -> Result<()> {
        if in_target(&app.name) {
            out.gates.push(app.clone());
            return Ok(());
        }
        let t = lib.get(&app.name)?.tableau.coset_representative();
        let w = words.get(&t.key(true)).ok_or_else(|| Error::UnsupportedGate(app.name.clone()))?;
        for g in w {
            out.push(g, &app.qubits);
        }
        Ok(())
    };
    for app in &seq.gates {
        let def = lib.get(&app.name)?;
        match def.arity {
            1 => emit_1q(app, &mut out)?,
            2 if in_target(&app.name) => out.gates.push(app.clone()),
            2 => {
                let ent = entangler.ok_or_else(|| Error::UnsupportedGate(app.name.clone()))?;
                for sub in two_qubit_rule(lib.resolve_name(&app.name), &app.qubits, ent)? {
                    if lib.get(&sub.name)?.arity == 1 {
                        emit_1q(&sub, &mut out)?;
                    } else {
                        out.gates.push(sub);
                    }
                }
            }
            _ => return Err(Error::UnsupportedGate(app.name.clone())),
        }
    }
    Ok(out)
}
