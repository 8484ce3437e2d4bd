//! Stabilizer states kept in graph-state standard form (GSSF).
//!
//! Row `j` of the stabilizer matrix always has a non-identity diagonal entry
//! at column `j`; every other entry of column `j` is the identity or the
//! column's neighbor operator, which anticommutes with the diagonal.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::gates::{GateDefinition, GateLibrary};
use crate::group::find_mapping;
use crate::pauli::{Letter, PauliOperator};
use crate::tableau::{check_qubits, CliffordTableau, LocalAction};

/// Row operations performed while maintaining GSSF, in order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowOp {
    /// `row[target] <- row[target] * row[src]`.
    Mul { target: usize, src: usize },
    Swap(usize, usize),
    /// Row replaced by a fresh measured operator.
    Replace(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Measurement {
    /// Eigenvalue `(-1)^bit`.
    pub bit: bool,
    pub deterministic: bool,
}

#[derive(Clone, PartialEq)]
pub struct StabilizerState {
    n: usize,
    rows: Vec<PauliOperator>,
    journal: Option<Vec<RowOp>>,
}

fn default_neighbor(diag: Letter) -> Letter {
    [Letter::Z, Letter::X, Letter::Y].into_iter().find(|l| l.anticommutes(diag)).expect("non-identity diagonal")
}

impl StabilizerState {
    /// `|0…0⟩`.
    pub fn zeros(n: usize) -> Self {
        StabilizerState { n, rows: (0..n).map(|i| PauliOperator::single(n, i, Letter::Z)).collect(), journal: None }
    }

    pub fn empty() -> Self {
        Self::zeros(0)
    }

    /// Builds a state from commuting, independent Hermitian rows and reduces it.
    pub fn from_rows(rows: Vec<PauliOperator>) -> Result<Self> {
        let n = rows.len();
        for (i, r) in rows.iter().enumerate() {
            check_dim(n, r.n_qubits())?;
            if !r.is_hermitian() {
                return Err(Error::InvalidState(format!("row {r} is not Hermitian")));
            }
            for s in &rows[..i] {
                if !r.commutes_unchecked(s) {
                    return Err(Error::InvalidState(format!("rows {s} and {r} anticommute")));
                }
            }
        }
        if gf2_rank(&rows) != n {
            return Err(Error::InvalidState("rows are not independent".into()));
        }
        let mut s = StabilizerState { n, rows, journal: None };
        s.reduce(vec![false; n])?;
        Ok(s)
    }

    /// As [`Self::from_rows`], also returning the row operations of the reduction.
    pub(crate) fn from_rows_journaled(rows: Vec<PauliOperator>) -> Result<(Self, Vec<RowOp>)> {
        let n = rows.len();
        let mut s = StabilizerState { n, rows, journal: Some(Vec::new()) };
        s.reduce(vec![false; n])?;
        let ops = s.take_journal();
        s.journal = None;
        Ok((s, ops))
    }

    /// Starts recording row operations.
    pub fn enable_journal(&mut self) {
        self.journal = Some(Vec::new());
    }

    pub fn take_journal(&mut self) -> Vec<RowOp> {
        self.journal.as_mut().map(core::mem::take).unwrap_or_default()
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[PauliOperator] {
        &self.rows
    }

    /// Sign bits, `true` for a `-` row.
    pub fn signs(&self) -> Vec<bool> {
        self.rows.iter().map(|r| r.sign()).collect()
    }

    pub fn diagonal(&self, j: usize) -> Letter {
        self.rows[j].letter(j)
    }

    pub fn neighbor(&self, j: usize) -> Letter {
        (0..self.n)
            .filter(|&i| i != j)
            .map(|i| self.rows[i].letter(j))
            .find(|&l| l != Letter::I)
            .unwrap_or_else(|| default_neighbor(self.diagonal(j)))
    }

    /// Graph adjacency: `(i, j)` non-identity off the diagonal.
    pub fn adjacency(&self) -> Vec<Vec<bool>> {
        (0..self.n).map(|i| (0..self.n).map(|j| i != j && self.rows[i].letter(j) != Letter::I).collect()).collect()
    }

    fn log(&mut self, op: RowOp) {
        if let Some(j) = self.journal.as_mut() {
            j.push(op);
        }
    }

    fn mul_row(&mut self, target: usize, src: usize) {
        let s = self.rows[src].clone();
        self.rows[target].mul_assign_right(&s);
        self.log(RowOp::Mul { target, src });
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            self.rows.swap(a, b);
            self.log(RowOp::Swap(a, b));
        }
    }

    /// Restores GSSF assuming the columns flagged in `done` already satisfy the
    /// column conditions.
    fn reduce(&mut self, mut done: Vec<bool>) -> Result<()> {
        while let Some(r) = done.iter().position(|&c| !c) {
            let d = (0..self.n)
                .find(|&d| !done[d] && self.rows[r].letter(d) != Letter::I)
                .ok_or_else(|| Error::InvalidState("rows are dependent or do not commute".into()))?;
            self.swap_rows(r, d);
            let diag = self.rows[d].letter(d);
            let neighbor = (0..self.n)
                .filter(|&a| a != d)
                .map(|a| self.rows[a].letter(d))
                .find(|l| l.anticommutes(diag))
                .unwrap_or_else(|| default_neighbor(diag));
            for a in 0..self.n {
                if a == d {
                    continue;
                }
                let e = self.rows[a].letter(d);
                if e != Letter::I && e != neighbor {
                    self.mul_row(a, d);
                }
            }
            done[d] = true;
        }
        Ok(())
    }

    /// Re-reduces the whole matrix (idempotent on GSSF input).
    pub fn reduce_gssf(&mut self) -> Result<()> {
        self.reduce(vec![false; self.n])
    }

    pub fn is_gssf(&self) -> bool {
        for j in 0..self.n {
            let diag = self.rows[j].letter(j);
            if diag == Letter::I {
                return false;
            }
            let mut nb: Option<Letter> = None;
            for i in 0..self.n {
                if i == j {
                    continue;
                }
                let e = self.rows[i].letter(j);
                if e == Letter::I {
                    continue;
                }
                if !e.anticommutes(diag) || nb.is_some_and(|n| n != e) {
                    return false;
                }
                nb = Some(e);
                if self.rows[j].letter(i) == Letter::I {
                    return false;
                }
            }
        }
        true
    }

    /// Adds a qubit in `|0⟩`.
    pub fn prepare_zero(&mut self) {
        let n = self.n + 1;
        let one = PauliOperator::identity(1);
        for r in self.rows.iter_mut() {
            *r = r.tensor(&one);
        }
        self.rows.push(PauliOperator::single(n, n - 1, Letter::Z));
        self.n = n;
    }

    pub fn apply_action(&mut self, action: &LocalAction, qubits: &[usize]) -> Result<()> {
        check_qubits(qubits, self.n)?;
        check_dim(action.arity(), qubits.len())?;
        for r in self.rows.iter_mut() {
            action.conjugate(r, qubits);
        }
        let mut done = vec![true; self.n];
        for &q in qubits {
            done[q] = false;
        }
        self.reduce(done)
    }

    pub fn apply_gate(&mut self, gate: &GateDefinition, qubits: &[usize]) -> Result<()> {
        self.apply_action(gate.action(), qubits)
    }

    pub fn apply_clifford(&mut self, c: &CliffordTableau) -> Result<()> {
        check_dim(self.n, c.n_qubits())?;
        for r in self.rows.iter_mut() {
            *r = c.apply_unchecked(r);
        }
        self.reduce(vec![false; self.n])
    }

    /// Measures `Z_j`, consuming one rng draw iff the outcome is random.
    pub fn measure_z<R: Rng + ?Sized>(&mut self, j: usize, rng: &mut R) -> Result<Measurement> {
        if j >= self.n {
            return Err(Error::InvalidArgument(format!("qubit {j} out of range for {} qubits", self.n)));
        }
        let first_other = (0..self.n).find(|&i| i != j && self.rows[i].letter(j) != Letter::I);
        if self.diagonal(j) == Letter::Z {
            match first_other {
                None => return Ok(Measurement { bit: self.rows[j].sign(), deterministic: true }),
                Some(i) => {
                    self.swap_rows(i, j);
                    let mut done = vec![true; self.n];
                    done[i] = false;
                    done[j] = false;
                    self.reduce(done)?;
                }
            }
        }
        debug_assert_ne!(self.diagonal(j), Letter::Z);
        if self.neighbor(j) != Letter::Z {
            for i in 0..self.n {
                if i != j && self.rows[i].letter(j) != Letter::I {
                    self.mul_row(i, j);
                }
            }
        }
        let bit: bool = rng.random();
        let mut z = PauliOperator::single(self.n, j, Letter::Z);
        if bit {
            z.negate();
        }
        self.rows[j] = z;
        self.log(RowOp::Replace(j));
        for i in 0..self.n {
            if i != j && self.rows[i].letter(j) != Letter::I {
                self.mul_row(i, j);
            }
        }
        Ok(Measurement { bit, deterministic: false })
    }

    /// Measures a Hermitian Pauli by mapping it to `Z_0`.
    pub fn measure_pauli<R: Rng + ?Sized>(&mut self, p: &PauliOperator, rng: &mut R) -> Result<Measurement> {
        check_dim(self.n, p.n_qubits())?;
        if p.is_identity() {
            return Err(Error::InvalidArgument("cannot measure the identity".into()));
        }
        if !p.is_hermitian() {
            return Err(Error::InvalidArgument(format!("{p} is not Hermitian")));
        }
        let lib = GateLibrary::builtin();
        let seq = find_mapping(&p.unsigned(), &PauliOperator::single(self.n, 0, Letter::Z))?;
        let img = seq.to_tableau(&lib)?.apply_unchecked(p);
        for g in &seq.gates {
            self.apply_gate(lib.get(&g.name)?, &g.qubits)?;
        }
        let mut m = self.measure_z(0, rng)?;
        for g in seq.inverse(&lib)?.gates.iter() {
            self.apply_gate(lib.get(&g.name)?, &g.qubits)?;
        }
        m.bit ^= img.sign();
        Ok(m)
    }

    /// Rows whose product is `±p`, if `p` is in the stabilizer group up to sign.
    pub fn decompose(&self, p: &PauliOperator) -> Option<Vec<usize>> {
        if p.n_qubits() != self.n {
            return None;
        }
        // p commutes with all rows iff it lies in the (maximal) group
        if self.rows.iter().any(|r| !r.commutes_unchecked(p)) {
            return None;
        }
        solve_gf2(&self.rows, p)
    }

    /// `Some(true)` if `p` stabilizes the state, `Some(false)` if `-p` does,
    /// `None` if neither.
    pub fn stabilizes(&self, p: &PauliOperator) -> Option<bool> {
        let idx = self.decompose(p)?;
        let mut acc = PauliOperator::identity(self.n);
        for i in idx {
            acc.mul_assign_right(&self.rows[i]);
        }
        let want = p.phase();
        if acc.phase() == want {
            Some(true)
        } else if acc.phase() == (want + 2) & 3 {
            Some(false)
        } else {
            None
        }
    }

    /// Signed stabilizer group generated by the rows as a sorted canonical list
    /// (row-reduced echelon form with signs); equal lists mean equal states.
    pub fn canonical_rows(&self) -> Vec<PauliOperator> {
        let mut rows = self.rows.clone();
        let n = self.n;
        let mut pivot_row = 0;
        for col in 0..2 * n {
            let bit = |p: &PauliOperator| {
                let (x, z) = p.letter(col % n).bits();
                if col < n { x } else { z }
            };
            let Some(k) = (pivot_row..n).find(|&k| bit(&rows[k])) else { continue };
            rows.swap(pivot_row, k);
            for k in 0..n {
                if k != pivot_row && bit(&rows[k]) {
                    let s = rows[pivot_row].clone();
                    rows[k].mul_assign_right(&s);
                }
            }
            pivot_row += 1;
        }
        rows
    }
}

fn bits_of(p: &PauliOperator) -> Vec<u64> {
    let mut v = p.x_mask().to_vec();
    v.extend_from_slice(p.z_mask());
    v
}

fn gf2_rank(rows: &[PauliOperator]) -> usize {
    let mut m: Vec<Vec<u64>> = rows.iter().map(bits_of).collect();
    let width = m.first().map_or(0, |r| r.len() * 64);
    let mut rank = 0;
    for col in 0..width {
        let (w, b) = (col / 64, col % 64);
        let Some(k) = (rank..m.len()).find(|&k| (m[k][w] >> b) & 1 == 1) else { continue };
        m.swap(rank, k);
        for k in 0..m.len() {
            if k != rank && (m[k][w] >> b) & 1 == 1 {
                let src = m[rank].clone();
                for (a, s) in m[k].iter_mut().zip(src) {
                    *a ^= s;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Indices of `rows` whose product equals `p` up to phase.
pub(crate) fn solve_gf2(rows: &[PauliOperator], p: &PauliOperator) -> Option<Vec<usize>> {
    let n = rows.len();
    let nw = n.div_ceil(64).max(1);
    // augmented: row bits | identity tracking
    let mut m: Vec<(Vec<u64>, Vec<u64>)> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut t = vec![0u64; nw];
            t[i / 64] |= 1 << (i % 64);
            (bits_of(r), t)
        })
        .collect();
    let mut target = bits_of(p);
    let mut used = vec![0u64; nw];
    let width = target.len() * 64;
    let mut rank = 0;
    for col in 0..width {
        let (w, b) = (col / 64, col % 64);
        let Some(k) = (rank..n).find(|&k| (m[k].0[w] >> b) & 1 == 1) else { continue };
        m.swap(rank, k);
        for k in 0..n {
            if k != rank && (m[k].0[w] >> b) & 1 == 1 {
                let (src, st) = m[rank].clone();
                for (a, s) in m[k].0.iter_mut().zip(&src) {
                    *a ^= s;
                }
                for (a, s) in m[k].1.iter_mut().zip(&st) {
                    *a ^= s;
                }
            }
        }
        if (target[w] >> b) & 1 == 1 {
            for (a, s) in target.iter_mut().zip(&m[rank].0) {
                *a ^= s;
            }
            for (a, s) in used.iter_mut().zip(&m[rank].1) {
                *a ^= s;
            }
        }
        rank += 1;
    }
    if target.iter().any(|&w| w != 0) {
        return None;
    }
    Some((0..n).filter(|&i| (used[i / 64] >> (i % 64)) & 1 == 1).collect())
}

impl fmt::Display for StabilizerState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rows {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for StabilizerState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StabilizerState{:?}", self.rows)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CircuitOp {
    Gate(crate::gates::GateApp),
    MeasureZ(usize),
    /// Appends a fresh qubit in `|0⟩`.
    Prepare,
}

/// Circuit acting on an initial `|0…0⟩` register of `n_qubits`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Circuit {
    pub n_qubits: usize,
    pub ops: Vec<CircuitOp>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit { n_qubits, ops: Vec::new() }
    }

    pub fn gate(&mut self, name: &str, qubits: &[usize]) -> &mut Self {
        self.ops.push(CircuitOp::Gate(crate::gates::GateApp::new(name, qubits)));
        self
    }

    pub fn measure(&mut self, q: usize) -> &mut Self {
        self.ops.push(CircuitOp::MeasureZ(q));
        self
    }

    /// Runs the circuit from `|0…0⟩`, returning the measurement record.
    pub fn run<R: Rng + ?Sized>(&self, lib: &GateLibrary, rng: &mut R) -> Result<(Vec<Measurement>, StabilizerState)> {
        let mut st = StabilizerState::zeros(self.n_qubits);
        let mut out = Vec::new();
        for op in &self.ops {
            match op {
                CircuitOp::Gate(g) => st.apply_gate(lib.get(&g.name)?, &g.qubits)?,
                CircuitOp::MeasureZ(q) => out.push(st.measure_z(*q, rng)?),
                CircuitOp::Prepare => st.prepare_zero(),
            }
        }
        Ok((out, st))
    }
}
