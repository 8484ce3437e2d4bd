//! GF(2ⁿ) arithmetic and the small twirling subgroups T and Q_n.
//!
//! Field elements are polynomials over GF(2) packed into a `u32` (bit k is the
//! coefficient of xᵏ). A Pauli `P = X₁^a Z₁^c` carries X on qubit i when
//! `(a)_i = 1` and Z on qubit i when `(c * b_i)_1 = 1`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::pauli::{Letter, PauliOperator};
use crate::tableau::CliffordTableau;

/// Irreducible polynomials for n = 1..=8.
const IRREDUCIBLE: [u32; 8] = [0b11, 0b111, 0b1011, 0b1_0011, 0b10_0101, 0b100_0011, 0b1000_0011, 0b1_0001_1011];

pub const MAX_FIELD_DEGREE: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldContext {
    n: usize,
    poly: u32,
    basis: Vec<u32>,
    dual: Vec<u32>,
    // rows of the inverse basis matrix: (k)_i = parity(coord[i] & k)
    coord: Vec<u32>,
}

fn parity(x: u32) -> bool {
    x.count_ones() & 1 == 1
}

/// Inverse of an n×n GF(2) matrix given by row bitmasks.
fn invert(rows: &[u32]) -> Option<Vec<u32>> {
    let n = rows.len();
    let mut m: Vec<(u32, u32)> = rows.iter().enumerate().map(|(i, &r)| (r, 1 << i)).collect();
    for col in 0..n {
        let k = (col..n).find(|&k| (m[k].0 >> col) & 1 == 1)?;
        m.swap(col, k);
        let (pr, pi) = m[col];
        for (j, row) in m.iter_mut().enumerate() {
            if j != col && (row.0 >> col) & 1 == 1 {
                row.0 ^= pr;
                row.1 ^= pi;
            }
        }
    }
    Some(m.into_iter().map(|(_, inv)| inv).collect())
}

fn transpose(rows: &[u32]) -> Vec<u32> {
    let n = rows.len();
    (0..n).map(|j| (0..n).fold(0, |acc, i| acc | (((rows[i] >> j) & 1) << i))).collect()
}

impl FieldContext {
    /// Polynomial basis {1, x, x², ...}.
    pub fn new(n: usize) -> Result<Self> {
        Self::with_basis(n, (0..n).map(|k| 1u32 << k).collect())
    }

    pub fn with_basis(n: usize, basis: Vec<u32>) -> Result<Self> {
        if n == 0 || n > MAX_FIELD_DEGREE {
            return Err(Error::ResourceLimit(format!("field degree must be in 1..={MAX_FIELD_DEGREE}, got {n}")));
        }
        if basis.len() != n || basis[0] != 1 || basis.iter().any(|&b| b >> n != 0) {
            return Err(Error::InvalidArgument("basis needs n elements of degree < n with b_1 = 1".into()));
        }
        // basis matrix has columns b_i; rows of its inverse give coordinates
        let coord = invert(&transpose(&basis))
            .ok_or_else(|| Error::InvalidArgument("basis is not independent".into()))?;
        let mut ctx = FieldContext { n, poly: IRREDUCIBLE[n - 1], basis, dual: Vec::new(), coord };
        ctx.dual = ctx.dual_basis()?;
        Ok(ctx)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn polynomial(&self) -> u32 {
        self.poly
    }
    pub fn basis(&self) -> &[u32] {
        &self.basis
    }
    pub fn dual(&self) -> &[u32] {
        &self.dual
    }
    pub fn size(&self) -> u32 {
        1 << self.n
    }

    /// `(k)_i`, the coefficient of `b_i` (0-based).
    pub fn coordinate(&self, k: u32, i: usize) -> bool {
        parity(self.coord[i] & k)
    }

    /// `(k)_1`.
    pub fn first(&self, k: u32) -> bool {
        self.coordinate(k, 0)
    }

    pub fn mul(&self, a: u32, b: u32) -> u32 {
        let mut acc = 0u32;
        let mut a = a;
        let mut b = b;
        while b != 0 {
            if b & 1 == 1 {
                acc ^= a;
            }
            b >>= 1;
            a <<= 1;
            if (a >> self.n) & 1 == 1 {
                a ^= self.poly;
            }
        }
        acc
    }

    pub fn inv(&self, a: u32) -> Result<u32> {
        if a == 0 {
            return Err(Error::InvalidArgument("zero has no inverse".into()));
        }
        // a^(2^n - 2)
        let mut e = self.size() - 2;
        let (mut base, mut acc) = (a, 1u32);
        while e != 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        Ok(acc)
    }

    /// Solves `(b_i * y_j)_1 = δ_ij` for the dual basis.
    pub fn dual_basis(&self) -> Result<Vec<u32>> {
        // row i: the functional y -> (b_i * y)_1 in monomial coordinates
        let w: Vec<u32> = self
            .basis
            .iter()
            .map(|&b| (0..self.n).fold(0u32, |acc, k| acc | (u32::from(self.first(self.mul(b, 1 << k))) << k)))
            .collect();
        let inv = invert(&w).ok_or_else(|| Error::InvalidState("trace form is singular".into()))?;
        // y_j is column j of W⁻¹
        Ok(transpose(&inv))
    }

    /// `(a, c)` with `p = X₁^a Z₁^c` up to phase.
    pub fn encode(&self, p: &PauliOperator) -> Result<(u32, u32)> {
        self.check(p.n_qubits())?;
        let (mut a, mut c) = (0, 0);
        for i in 0..self.n {
            let (x, z) = p.letter(i).bits();
            if x {
                a ^= self.basis[i];
            }
            if z {
                c ^= self.dual[i];
            }
        }
        Ok((a, c))
    }

    pub fn decode(&self, a: u32, c: u32) -> PauliOperator {
        let mut p = PauliOperator::identity(self.n);
        for i in 0..self.n {
            let x = self.coordinate(a, i);
            let z = self.first(self.mul(c, self.basis[i]));
            p.set(i, Letter::from_bits(x, z));
        }
        p
    }

    /// True iff `X₁^a Z₁^c` and `X₁^d Z₁^e` commute by the field formula.
    pub fn commutes(&self, (a, c): (u32, u32), (d, e): (u32, u32)) -> bool {
        !(self.first(self.mul(c, d)) ^ self.first(self.mul(a, e)))
    }

    fn check(&self, n: usize) -> Result<()> {
        if n == self.n {
            Ok(())
        } else {
            Err(Error::Dimension(self.n, n))
        }
    }
}

pub fn field_mul(ctx: &FieldContext, a: u32, b: u32) -> u32 {
    ctx.mul(a, b)
}

pub fn field_inv(ctx: &FieldContext, a: u32) -> Result<u32> {
    ctx.inv(a)
}

/// `X₁^a Z₁^c ↦ X₁^{k*a} Z₁^{k*c}`, returned with phase 0.
pub fn vectorial_power(ctx: &FieldContext, p: &PauliOperator, k: u32) -> Result<PauliOperator> {
    let (a, c) = ctx.encode(p)?;
    Ok(ctx.decode(ctx.mul(k, a), ctx.mul(k, c)))
}

/// `{I, T, T²}` with `T: X → Y → Z → X`.
pub fn t_subgroup() -> Vec<CliffordTableau> {
    let t = CliffordTableau::from_images(
        vec![PauliOperator::single(1, 0, Letter::Y)],
        vec![PauliOperator::single(1, 0, Letter::X)],
    )
    .expect("T is Clifford");
    let t2 = t.compose(&t).expect("same size");
    vec![CliffordTableau::identity(1), t, t2]
}

/// Coset representative defined by `C(X₁) = X₁^a Z₁^c`, `C(Z₁) = X₁^d Z₁^e`.
pub fn q_element(ctx: &FieldContext, (a, c): (u32, u32), (d, e): (u32, u32)) -> Result<CliffordTableau> {
    let xs = ctx.basis.iter().map(|&b| ctx.decode(ctx.mul(a, b), ctx.mul(c, b))).collect();
    let zs = ctx.dual.iter().map(|&b| ctx.decode(ctx.mul(d, b), ctx.mul(e, b))).collect();
    CliffordTableau::from_images(xs, zs)
}

/// All `2ⁿ(4ⁿ−1)` elements of Q_n, as sign-free coset representatives.
pub fn q_subgroup(ctx: &FieldContext) -> Result<Vec<CliffordTableau>> {
    let n = ctx.n;
    if n > 4 {
        return Err(Error::ResourceLimit(format!("q_subgroup enumerates n <= 4, got {n}")));
    }
    let size = ctx.size();
    let mut out = Vec::new();
    for a in 0..size {
        for c in 0..size {
            if a == 0 && c == 0 {
                continue;
            }
            for d in 0..size {
                for e in 0..size {
                    if ctx.mul(c, d) ^ ctx.mul(a, e) == 1 {
                        out.push(q_element(ctx, (a, c), (d, e))?);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Whether `|{C ∈ K : C(P_i) = ±P_j}|` is the same for every pair of
/// non-identity Paulis.
pub fn verify_twirl_set(k_set: &[CliffordTableau]) -> Result<bool> {
    let Some(first) = k_set.first() else { return Ok(false) };
    let n = first.n_qubits();
    if n > 2 {
        return Err(Error::ResourceLimit(format!("twirl-set check supports n <= 2, got {n}")));
    }
    let d2 = 1u64 << (2 * n);
    let mut counts = vec![0usize; ((d2 - 1) * (d2 - 1)) as usize];
    for c in k_set {
        if c.n_qubits() != n {
            return Err(Error::Dimension(n, c.n_qubits()));
        }
        for i in 1..d2 {
            let j = c.apply_unchecked(&PauliOperator::from_index(n, i)).index();
            counts[((i - 1) * (d2 - 1) + j - 1) as usize] += 1;
        }
    }
    Ok(counts.iter().all(|&x| x == counts[0]))
}
