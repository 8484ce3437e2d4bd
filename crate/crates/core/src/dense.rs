//! Dense matrices and superoperators for n ≤ 3.
//!
//! Basis states are indexed little-endian: bit q of the index is qubit q.
//! Superoperators are stored as Pauli-basis process matrices,
//! `Λ(ρ) = Σ_ab χ_ab P_a ρ P_b` with `P_a` the letter-form Paulis in
//! [`PauliOperator::from_index`] order.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::PauliOperator;
use crate::tableau::CliffordTableau;

pub type C64 = Complex64;

const MAX_DENSE_QUBITS: usize = 3;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        CMatrix { dim, data: vec![C64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = c(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(dim: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), dim * dim);
        CMatrix { dim, data }
    }

    pub fn diag(d: &[C64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mul(&self, o: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, o.dim);
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += a * o.data[k * d + j];
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> CMatrix {
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out.data[j * d + i] = self.data[i * d + j].conj();
            }
        }
        out
    }

    pub fn add(&self, o: &CMatrix) -> CMatrix {
        CMatrix { dim: self.dim, data: self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect() }
    }

    pub fn scale(&self, s: C64) -> CMatrix {
        CMatrix { dim: self.dim, data: self.data.iter().map(|a| a * s).collect() }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    /// `tr(A† B)`.
    pub fn inner(&self, o: &CMatrix) -> C64 {
        self.data.iter().zip(&o.data).map(|(a, b)| a.conj() * b).sum()
    }

    /// `self ⊗ other` with `self` on the low qubits.
    pub fn kron_low(&self, high: &CMatrix) -> CMatrix {
        let (a, b) = (self.dim, high.dim);
        let d = a * b;
        let mut out = Self::zeros(d);
        for hi in 0..b {
            for hj in 0..b {
                let h = high[(hi, hj)];
                if h.re == 0.0 && h.im == 0.0 {
                    continue;
                }
                for li in 0..a {
                    for lj in 0..a {
                        out[(hi * a + li, hj * a + lj)] = h * self[(li, lj)];
                    }
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, o: &CMatrix) -> f64 {
        self.data.iter().zip(&o.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Distance after removing the best global phase.
    pub fn phase_distance(&self, o: &CMatrix) -> f64 {
        let ip = self.inner(o);
        if ip.norm() < 1e-300 {
            return self.max_abs_diff(o);
        }
        let ph = ip / ip.norm();
        self.scale(ph).max_abs_diff(o)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.adjoint().mul(self).max_abs_diff(&Self::identity(self.dim)) < tol
    }

    pub fn apply_vec(&self, v: &[C64]) -> Vec<C64> {
        let d = self.dim;
        (0..d).map(|i| (0..d).map(|j| self.data[i * d + j] * v[j]).sum()).collect()
    }

    /// Embeds a k-qubit operator on `qubits` of an n-qubit register; `qubits[i]`
    /// receives local qubit i.
    pub fn embed(&self, qubits: &[usize], n: usize) -> CMatrix {
        let k = qubits.len();
        assert_eq!(self.dim, 1 << k);
        let d = 1usize << n;
        let mut out = Self::zeros(d);
        let local = |b: usize| qubits.iter().enumerate().fold(0usize, |acc, (i, &q)| acc | (((b >> q) & 1) << i));
        let mut rest_mask = d - 1;
        for &q in qubits {
            rest_mask &= !(1 << q);
        }
        for col in 0..d {
            let lc = local(col);
            for lr in 0..(1usize << k) {
                let v = self[(lr, lc)];
                if v.re == 0.0 && v.im == 0.0 {
                    continue;
                }
                let mut row = col & rest_mask;
                for (i, &q) in qubits.iter().enumerate() {
                    row |= ((lr >> i) & 1) << q;
                }
                out[(row, col)] = v;
            }
        }
        out
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

fn i_pow(k: u32) -> C64 {
    match k & 3 {
        0 => c(1.0, 0.0),
        1 => c(0.0, 1.0),
        2 => c(-1.0, 0.0),
        _ => c(0.0, -1.0),
    }
}

/// Dense matrix of a Pauli operator including its phase.
pub fn pauli_matrix(p: &PauliOperator) -> CMatrix {
    let n = p.n_qubits();
    let d = 1usize << n;
    let (x, z) = (p.x_mask()[0] as usize, p.z_mask()[0] as usize);
    let base = p.phase() as u32 + (x & z).count_ones();
    let mut m = CMatrix::zeros(d);
    for b in 0..d {
        let sign = if (z & b).count_ones() % 2 == 1 { 2 } else { 0 };
        m[(b ^ x, b)] = i_pow(base + sign);
    }
    m
}

/// Identifies `U P U†` as a signed Pauli, or `None` if it is not one.
pub fn conjugate_pauli(u: &CMatrix, p: &PauliOperator) -> Option<PauliOperator> {
    let n = p.n_qubits();
    let m = u.mul(&pauli_matrix(p)).mul(&u.adjoint());
    let d = (1usize << n) as f64;
    for idx in 0..(1u64 << (2 * n)) {
        let q = PauliOperator::from_index(n, idx);
        let v = pauli_matrix(&q).inner(&m) / d;
        if (v.norm() - 1.0).abs() < 1e-9 {
            let ph = if v.re > 0.5 {
                0
            } else if v.im > 0.5 {
                1
            } else if v.re < -0.5 {
                2
            } else {
                3
            };
            return Some(q.with_phase(ph));
        }
    }
    None
}

/// Tableau of a Clifford unitary, or an error if `u` is not Clifford.
pub fn tableau_from_unitary(u: &CMatrix) -> Result<CliffordTableau> {
    let n = u.dim().trailing_zeros() as usize;
    let mut ix = Vec::new();
    let mut iz = Vec::new();
    for q in 0..n {
        for (letter, out) in [(crate::pauli::Letter::X, &mut ix), (crate::pauli::Letter::Z, &mut iz)] {
            let img = conjugate_pauli(u, &PauliOperator::single(n, q, letter))
                .ok_or_else(|| Error::InvalidArgument("matrix is not a Clifford unitary".into()))?;
            out.push(img);
        }
    }
    CliffordTableau::from_images(ix, iz)
}

fn check_dense_n(n: usize) -> Result<()> {
    if n > MAX_DENSE_QUBITS {
        return Err(Error::ResourceLimit(format!("dense oracle supports n <= {MAX_DENSE_QUBITS}, got {n}")));
    }
    Ok(())
}

/// Trace-preserving superoperator as a Pauli-basis process matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseSuperoperator {
    n: usize,
    chi: CMatrix,
}

impl DenseSuperoperator {
    pub fn from_kraus(n: usize, kraus: &[CMatrix]) -> Result<Self> {
        check_dense_n(n)?;
        let d = 1usize << n;
        let m = d * d;
        let mut chi = CMatrix::zeros(m);
        let paulis: Vec<CMatrix> = (0..m as u64).map(|i| pauli_matrix(&PauliOperator::from_index(n, i))).collect();
        let mut tp = CMatrix::zeros(d);
        for a in kraus {
            if a.dim() != d {
                return Err(Error::Dimension(a.dim(), d));
            }
            tp = tp.add(&a.adjoint().mul(a));
            let coef: Vec<C64> = paulis.iter().map(|p| p.inner(a) / d as f64).collect();
            for i in 0..m {
                for j in 0..m {
                    chi[(i, j)] += coef[i] * coef[j].conj();
                }
            }
        }
        if tp.max_abs_diff(&CMatrix::identity(d)) > 1e-10 {
            return Err(Error::InvalidArgument("Kraus operators are not trace preserving".into()));
        }
        Ok(DenseSuperoperator { n, chi })
    }

    pub fn from_unitary(u: &CMatrix) -> Result<Self> {
        let n = u.dim().trailing_zeros() as usize;
        Self::from_kraus(n, core::slice::from_ref(u))
    }

    pub fn from_chi(n: usize, chi: CMatrix) -> Result<Self> {
        check_dense_n(n)?;
        if chi.dim() != 1 << (2 * n) {
            return Err(Error::Dimension(chi.dim(), 1 << (2 * n)));
        }
        Ok(DenseSuperoperator { n, chi })
    }

    /// Depolarizing channel `ρ ↦ (1−p)ρ + p tr(ρ) I/D`.
    pub fn depolarizing(n: usize, p: f64) -> Result<Self> {
        check_dense_n(n)?;
        let m = 1usize << (2 * n);
        let mut d = vec![c(p / m as f64, 0.0); m];
        d[0] = c(1.0 - p + p / m as f64, 0.0);
        Ok(DenseSuperoperator { n, chi: CMatrix::diag(&d) })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::depolarizing(n, 0.0)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn chi(&self) -> &CMatrix {
        &self.chi
    }

    /// `tr Λ̂ = Σ|tr A_i|² = D² χ_00`.
    pub fn superoperator_trace(&self) -> f64 {
        let d2 = (1usize << (2 * self.n)) as f64;
        d2 * self.chi[(0, 0)].re
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let m = 1usize << (2 * self.n);
        let paulis: Vec<CMatrix> = (0..m as u64).map(|i| pauli_matrix(&PauliOperator::from_index(self.n, i))).collect();
        let mut out = CMatrix::zeros(rho.dim());
        for a in 0..m {
            let left = paulis[a].mul(rho);
            for b in 0..m {
                let v = self.chi[(a, b)];
                if v.norm() < 1e-300 {
                    continue;
                }
                out = out.add(&left.mul(&paulis[b]).scale(v));
            }
        }
        out
    }

    /// `other ∘ self` (apply self first).
    pub fn then(&self, other: &DenseSuperoperator) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::Dimension(self.n, other.n));
        }
        let m = 1usize << (2 * self.n);
        let mut chi = CMatrix::zeros(m);
        // P_c P_a ρ P_b P_d: products are Paulis with phases
        let ps: Vec<PauliOperator> = (0..m as u64).map(|i| PauliOperator::from_index(self.n, i)).collect();
        for a in 0..m {
            for b in 0..m {
                let x = self.chi[(a, b)];
                if x.norm() < 1e-300 {
                    continue;
                }
                for cc in 0..m {
                    let left = ps[cc].multiply(&ps[a]).expect("same size");
                    for d in 0..m {
                        let y = other.chi[(cc, d)];
                        if y.norm() < 1e-300 {
                            continue;
                        }
                        let right = ps[b].multiply(&ps[d]).expect("same size");
                        let ph = i_pow(left.phase() as u32 + right.phase() as u32);
                        let (li, ri) = (left.index() as usize, right.index() as usize);
                        chi[(li, ri)] += x * y * ph;
                    }
                }
            }
        }
        Ok(DenseSuperoperator { n: self.n, chi })
    }

    /// Tensor product with `high` on the higher qubit indices.
    pub fn tensor(&self, high: &DenseSuperoperator) -> Result<Self> {
        let n = self.n + high.n;
        check_dense_n(n)?;
        let (ml, mh) = (1usize << (2 * self.n), 1usize << (2 * high.n));
        let mut chi = CMatrix::zeros(ml * mh);
        for a in 0..ml {
            for b in 0..ml {
                for cc in 0..mh {
                    for d in 0..mh {
                        // index of P_a ⊗ P_c: low qubits carry the low index bits
                        let i = a | (cc << (2 * self.n));
                        let j = b | (d << (2 * self.n));
                        chi[(i, j)] = self.chi[(a, b)] * high.chi[(cc, d)];
                    }
                }
            }
        }
        Ok(DenseSuperoperator { n, chi })
    }

    /// `C† Λ(C ρ C†) C` for a Clifford given by its tableau.
    pub fn conjugate_by(&self, cl: &CliffordTableau) -> DenseSuperoperator {
        let inv = cl.inverse();
        let m = 1usize << (2 * self.n);
        let mut perm = vec![(0usize, 1.0f64); m];
        for (a, slot) in perm.iter_mut().enumerate() {
            let img = inv.apply_unchecked(&PauliOperator::from_index(self.n, a as u64));
            *slot = (img.index() as usize, if img.sign() { -1.0 } else { 1.0 });
        }
        let mut chi = CMatrix::zeros(m);
        for a in 0..m {
            for b in 0..m {
                let (pa, sa) = perm[a];
                let (pb, sb) = perm[b];
                chi[(pa, pb)] = self.chi[(a, b)] * (sa * sb);
            }
        }
        DenseSuperoperator { n: self.n, chi }
    }

    pub fn distance(&self, other: &DenseSuperoperator) -> f64 {
        self.chi.max_abs_diff(&other.chi)
    }

    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        let d = 1usize << self.n;
        let m = d * d;
        let ps: Vec<CMatrix> = (0..m as u64).map(|i| pauli_matrix(&PauliOperator::from_index(self.n, i))).collect();
        let mut acc = CMatrix::zeros(d);
        for a in 0..m {
            for b in 0..m {
                let v = self.chi[(a, b)];
                if v.norm() > 0.0 {
                    acc = acc.add(&ps[b].mul(&ps[a]).scale(v));
                }
            }
        }
        acc.max_abs_diff(&CMatrix::identity(d)) < tol
    }

    /// Largest off-diagonal magnitude of the process matrix.
    pub fn off_diagonal_norm(&self) -> f64 {
        let m = self.chi.dim();
        let mut best = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    best = best.max(self.chi[(i, j)].norm());
                }
            }
        }
        best
    }
}

/// Which group to average over in [`group_twirl`].
pub enum TwirlGroup<'a> {
    Pauli,
    Cliffords(&'a [CliffordTableau]),
}

/// `p_d = (D² − tr Λ̂)/(D² − 1)`.
pub fn depolarization_strength(s: &DenseSuperoperator) -> Result<f64> {
    if !s.is_trace_preserving(1e-10) {
        return Err(Error::InvalidArgument("superoperator is not trace preserving".into()));
    }
    let d2 = (1usize << (2 * s.n)) as f64;
    Ok((d2 - s.superoperator_trace()) / (d2 - 1.0))
}

/// `(1/|K|) Σ_C Ĉ† ∘ Λ̂ ∘ Ĉ`.
pub fn group_twirl(s: &DenseSuperoperator, group: TwirlGroup<'_>) -> Result<DenseSuperoperator> {
    match group {
        TwirlGroup::Pauli => {
            let m = s.chi.dim();
            let mut chi = CMatrix::zeros(m);
            for i in 0..m {
                chi[(i, i)] = s.chi[(i, i)];
            }
            Ok(DenseSuperoperator { n: s.n, chi })
        }
        TwirlGroup::Cliffords(list) => {
            if list.is_empty() {
                return Err(Error::InvalidArgument("empty twirl set".into()));
            }
            let m = s.chi.dim();
            let mut acc = CMatrix::zeros(m);
            for cl in list {
                if cl.n_qubits() != s.n {
                    return Err(Error::Dimension(cl.n_qubits(), s.n));
                }
                acc = acc.add(&s.conjugate_by(cl).chi);
            }
            Ok(DenseSuperoperator { n: s.n, chi: acc.scale(c(1.0 / list.len() as f64, 0.0)) })
        }
    }
}

/// `F = (1 + D χ′_00)/(1 + D)` with χ′ the process matrix of `U† ∘ Λ`.
pub fn gate_fidelity(s: &DenseSuperoperator, u: &CMatrix) -> Result<f64> {
    let d = 1usize << s.n;
    if u.dim() != d {
        return Err(Error::Dimension(u.dim(), d));
    }
    let undo = DenseSuperoperator::from_unitary(&u.adjoint())?;
    let rel = s.then(&undo)?;
    let df = d as f64;
    Ok((1.0 + df * rel.chi[(0, 0)].re) / (1.0 + df))
}

/// `e^{-iθP}` for a Hermitian Pauli.
pub fn pauli_rotation(p: &PauliOperator, theta: f64) -> CMatrix {
    let d = 1usize << p.n_qubits();
    CMatrix::identity(d)
        .scale(c(libm::cos(theta), 0.0))
        .add(&pauli_matrix(p).scale(c(0.0, -libm::sin(theta))))
}

/// Random-state expectation `⟨ψ|U† Λ(|ψ⟩⟨ψ|) U|ψ⟩` for one state.
pub fn state_fidelity(s: &DenseSuperoperator, u: &CMatrix, psi: &[C64]) -> f64 {
    let d = psi.len();
    let mut rho = CMatrix::zeros(d);
    for i in 0..d {
        for j in 0..d {
            rho[(i, j)] = psi[i] * psi[j].conj();
        }
    }
    let out = s.apply(&rho);
    let target = u.apply_vec(psi);
    let mut acc = c(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            acc += target[i].conj() * out[(i, j)] * target[j];
        }
    }
    acc.re
}

/// Pure state vector for n ≤ 3.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn zeros(n: usize) -> Result<Self> {
        check_dense_n(n)?;
        let mut amps = vec![c(0.0, 0.0); 1 << n];
        amps[0] = c(1.0, 0.0);
        Ok(StateVector { n, amps })
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let n = amps.len().trailing_zeros() as usize;
        check_dense_n(n)?;
        if amps.len() != 1 << n {
            return Err(Error::InvalidArgument("amplitude count is not a power of two".into()));
        }
        Ok(StateVector { n, amps })
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn apply(&mut self, u: &CMatrix, qubits: &[usize]) {
        self.amps = u.embed(qubits, self.n).apply_vec(&self.amps);
    }

    /// Probability of reading 1 on qubit `q`.
    pub fn prob_one(&self, q: usize) -> f64 {
        self.amps.iter().enumerate().filter(|(b, _)| (b >> q) & 1 == 1).map(|(_, a)| a.norm_sqr()).sum()
    }

    /// Projects qubit `q` onto `bit` and renormalizes; returns the branch probability.
    pub fn project(&mut self, q: usize, bit: bool) -> f64 {
        let mut norm = 0.0;
        for (b, a) in self.amps.iter_mut().enumerate() {
            if ((b >> q) & 1 == 1) != bit {
                *a = c(0.0, 0.0);
            } else {
                norm += a.norm_sqr();
            }
        }
        if norm > 0.0 {
            let s = 1.0 / libm::sqrt(norm);
            for a in self.amps.iter_mut() {
                *a *= s;
            }
        }
        norm
    }

    /// `⟨ψ|P|ψ⟩`.
    pub fn expectation(&self, p: &PauliOperator) -> C64 {
        let v = pauli_matrix(p).apply_vec(&self.amps);
        self.amps.iter().zip(&v).map(|(a, b)| a.conj() * b).sum()
    }
}
