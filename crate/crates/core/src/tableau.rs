//! Clifford operators as signed symplectic tableaux.
//!
//! `image_x[i] = C(X_i)` and `image_z[i] = C(Z_i)` with `C(P) = CPC†`. Only the
//! sign (phase 0 or 2) of each image is stored, so a tableau names a Clifford
//! operator up to global phase.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{check_dim, Error, Result};
use crate::pauli::{Letter, PauliOperator};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CliffordTableau {
    n: usize,
    image_x: Vec<PauliOperator>,
    image_z: Vec<PauliOperator>,
}

impl CliffordTableau {
    pub fn identity(n: usize) -> Self {
        CliffordTableau {
            n,
            image_x: (0..n).map(|i| PauliOperator::single(n, i, Letter::X)).collect(),
            image_z: (0..n).map(|i| PauliOperator::single(n, i, Letter::Z)).collect(),
        }
    }

    /// Builds from images, checking Hermiticity and the commutation relations.
    pub fn from_images(image_x: Vec<PauliOperator>, image_z: Vec<PauliOperator>) -> Result<Self> {
        let n = image_x.len();
        check_dim(n, image_z.len())?;
        for p in image_x.iter().chain(&image_z) {
            check_dim(n, p.n_qubits())?;
            if !p.is_hermitian() {
                return Err(Error::InvalidArgument(format!("image {p} is not Hermitian")));
            }
        }
        let t = CliffordTableau { n, image_x, image_z };
        t.validate()?;
        Ok(t)
    }

    /// Commutation preservation. Independence follows from it: a set with the
    /// symplectic pairing of {X_i, Z_i} is always linearly independent.
    pub fn validate(&self) -> Result<()> {
        for i in 0..self.n {
            for j in 0..self.n {
                let want = i != j;
                if self.image_x[i].commutes_unchecked(&self.image_z[j]) != want {
                    return Err(Error::InvalidArgument(format!("C(X_{i}) and C(Z_{j}) have wrong commutation")));
                }
                if j > i
                    && (!self.image_x[i].commutes_unchecked(&self.image_x[j])
                        || !self.image_z[i].commutes_unchecked(&self.image_z[j]))
                {
                    return Err(Error::InvalidArgument(format!("images of qubits {i},{j} fail to commute")));
                }
            }
        }
        Ok(())
    }

    /// The Pauli operator `p` viewed as a Clifford: `P X_i P = ±X_i`.
    pub fn from_pauli(p: &PauliOperator) -> Self {
        let n = p.n_qubits();
        let mut t = Self::identity(n);
        for i in 0..n {
            if !p.commutes_unchecked(&t.image_x[i]) {
                t.image_x[i].negate();
            }
            if !p.commutes_unchecked(&t.image_z[i]) {
                t.image_z[i].negate();
            }
        }
        t
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }
    pub fn image_x(&self, i: usize) -> &PauliOperator {
        &self.image_x[i]
    }
    pub fn image_z(&self, i: usize) -> &PauliOperator {
        &self.image_z[i]
    }
    pub fn images_x(&self) -> &[PauliOperator] {
        &self.image_x
    }
    pub fn images_z(&self) -> &[PauliOperator] {
        &self.image_z
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.n)
    }

    /// True when every image is ±X_i / ±Z_i, i.e. the operator is a Pauli.
    pub fn is_pauli(&self) -> bool {
        let id = Self::identity(self.n);
        (0..self.n).all(|i| self.image_x[i].unsigned() == id.image_x[i] && self.image_z[i].unsigned() == id.image_z[i])
    }

    /// Same coset modulo the Pauli group (signs ignored).
    pub fn same_coset(&self, other: &Self) -> bool {
        self.n == other.n
            && (0..self.n).all(|i| {
                self.image_x[i].unsigned() == other.image_x[i].unsigned()
                    && self.image_z[i].unsigned() == other.image_z[i].unsigned()
            })
    }

    /// Drops all signs (the distinguished coset representative).
    pub fn coset_representative(&self) -> Self {
        CliffordTableau {
            n: self.n,
            image_x: self.image_x.iter().map(|p| p.unsigned()).collect(),
            image_z: self.image_z.iter().map(|p| p.unsigned()).collect(),
        }
    }

    /// `C(P)` with exact sign, for Hermitian or non-Hermitian `p`.
    pub fn apply(&self, p: &PauliOperator) -> Result<PauliOperator> {
        check_dim(self.n, p.n_qubits())?;
        Ok(self.apply_unchecked(p))
    }

    pub(crate) fn apply_unchecked(&self, p: &PauliOperator) -> PauliOperator {
        // letter form = i^{|x&z|} ∏X^x ∏Z^z
        let mut out = PauliOperator::identity(self.n);
        for q in 0..self.n {
            let (x, _) = p.letter(q).bits();
            if x {
                out.mul_assign_right(&self.image_x[q]);
            }
        }
        for q in 0..self.n {
            let (_, z) = p.letter(q).bits();
            if z {
                out.mul_assign_right(&self.image_z[q]);
            }
        }
        let extra = p.phase() as u32 + p.xz_phase_offset();
        let ph = (out.phase() as u32 + extra) & 3;
        out.set_phase(ph as u8);
        out
    }

    /// `C ∘ D`: apply `d` first.
    pub fn compose(&self, d: &CliffordTableau) -> Result<CliffordTableau> {
        check_dim(self.n, d.n)?;
        Ok(CliffordTableau {
            n: self.n,
            image_x: d.image_x.iter().map(|p| self.apply_unchecked(p)).collect(),
            image_z: d.image_z.iter().map(|p| self.apply_unchecked(p)).collect(),
        })
    }

    pub fn inverse(&self) -> CliffordTableau {
        let n = self.n;
        let mut ix = Vec::with_capacity(n);
        let mut iz = Vec::with_capacity(n);
        for target in [Letter::X, Letter::Z] {
            for j in 0..n {
                let t = PauliOperator::single(n, j, target);
                let mut q = PauliOperator::identity(n);
                for i in 0..n {
                    let a = !t.commutes_unchecked(&self.image_z[i]);
                    let b = !t.commutes_unchecked(&self.image_x[i]);
                    q.set(i, Letter::from_bits(a, b));
                }
                let img = self.apply_unchecked(&q);
                if img.sign() {
                    q.negate();
                }
                if target == Letter::X {
                    ix.push(q);
                } else {
                    iz.push(q);
                }
            }
        }
        CliffordTableau { n, image_x: ix, image_z: iz }
    }

    /// `G ∘ self` where `G` acts as `action` on `qubits`.
    pub fn apply_local_left(&mut self, action: &LocalAction, qubits: &[usize]) {
        for p in self.image_x.iter_mut().chain(self.image_z.iter_mut()) {
            action.conjugate(p, qubits);
        }
    }

    /// Embeds a k-qubit tableau acting on `qubits` of an n-qubit register.
    pub fn embed(local: &CliffordTableau, qubits: &[usize], n: usize) -> Result<CliffordTableau> {
        check_dim(local.n, qubits.len())?;
        check_qubits(qubits, n)?;
        let mut t = Self::identity(n);
        t.apply_local_left(&LocalAction::new(local), qubits);
        Ok(t)
    }

    /// Canonical bit string of length 4n²+2n: for each image (X images then Z
    /// images) its x mask then z mask, followed by the 2n sign bits. With
    /// `quotient` the sign bits are zero.
    pub fn encode(&self, quotient: bool) -> Vec<u64> {
        let n = self.n;
        let total = 4 * n * n + 2 * n;
        let mut bits = vec![0u64; total.div_ceil(64)];
        let mut pos = 0usize;
        let mut push = |b: bool, pos: &mut usize| {
            if b {
                bits[*pos / 64] |= 1 << (*pos % 64);
            }
            *pos += 1;
        };
        for p in self.image_x.iter().chain(&self.image_z) {
            for q in 0..n {
                push(p.letter(q).bits().0, &mut pos);
            }
            for q in 0..n {
                push(p.letter(q).bits().1, &mut pos);
            }
        }
        for p in self.image_x.iter().chain(&self.image_z) {
            push(!quotient && p.sign(), &mut pos);
        }
        bits
    }

    /// Compact key for n ≤ 5 (4n²+2n ≤ 128 bits).
    pub fn key(&self, quotient: bool) -> u128 {
        assert!(self.n <= 5, "compact key needs n <= 5");
        let e = self.encode(quotient);
        let lo = e.first().copied().unwrap_or(0) as u128;
        let hi = e.get(1).copied().unwrap_or(0) as u128;
        lo | (hi << 64)
    }

    pub fn decode(n: usize, bits: &[u64]) -> Result<CliffordTableau> {
        let total = 4 * n * n + 2 * n;
        if bits.len() * 64 < total {
            return Err(Error::Parse(format!("encoding too short for n={n}")));
        }
        let get = |pos: usize| (bits[pos / 64] >> (pos % 64)) & 1 == 1;
        let mut imgs = Vec::with_capacity(2 * n);
        let mut pos = 0;
        for _ in 0..2 * n {
            let mut p = PauliOperator::identity(n);
            for q in 0..n {
                let x = get(pos + q);
                let z = get(pos + n + q);
                p.set(q, Letter::from_bits(x, z));
            }
            pos += 2 * n;
            imgs.push(p);
        }
        for p in imgs.iter_mut() {
            if get(pos) {
                p.negate();
            }
            pos += 1;
        }
        let iz = imgs.split_off(n);
        CliffordTableau::from_images(imgs, iz)
    }

    /// JSON-friendly form: `[C(X_0), ..., C(X_{n-1}), C(Z_0), ...]` as signed strings.
    pub fn to_strings(&self) -> Vec<String> {
        self.image_x.iter().chain(&self.image_z).map(|p| format!("{p}")).collect()
    }

    pub fn from_strings(images: &[String]) -> Result<CliffordTableau> {
        if images.len() % 2 != 0 {
            return Err(Error::Parse("odd number of images".into()));
        }
        let mut ps = images.iter().map(|s| s.parse::<PauliOperator>()).collect::<Result<Vec<_>>>()?;
        let iz = ps.split_off(images.len() / 2);
        CliffordTableau::from_images(ps, iz)
    }
}

pub(crate) fn check_qubits(qubits: &[usize], n: usize) -> Result<()> {
    for (i, &q) in qubits.iter().enumerate() {
        if q >= n {
            return Err(Error::InvalidArgument(format!("qubit {q} out of range for {n} qubits")));
        }
        if qubits[..i].contains(&q) {
            return Err(Error::InvalidArgument(format!("repeated qubit {q}")));
        }
    }
    Ok(())
}

/// Precomputed conjugation table of a k-qubit Clifford on letter-form Paulis.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalAction {
    k: usize,
    table: Vec<(u64, bool)>,
}

impl LocalAction {
    pub fn new(local: &CliffordTableau) -> Self {
        let k = local.n;
        let table = (0..(1u64 << (2 * k)))
            .map(|i| {
                let img = local.apply_unchecked(&PauliOperator::from_index(k, i));
                (img.index(), img.sign())
            })
            .collect();
        LocalAction { k, table }
    }

    pub fn arity(&self) -> usize {
        self.k
    }

    pub(crate) fn conjugate(&self, p: &mut PauliOperator, qubits: &[usize]) {
        let mut idx = 0u64;
        for (i, &q) in qubits.iter().enumerate() {
            let (x, z) = p.letter(q).bits();
            idx |= ((x as u64) | ((z as u64) << 1)) << (2 * i);
        }
        let (img, neg) = self.table[idx as usize];
        for (i, &q) in qubits.iter().enumerate() {
            let v = (img >> (2 * i)) & 3;
            p.set(q, Letter::from_bits(v & 1 == 1, v & 2 == 2));
        }
        if neg {
            p.negate();
        }
    }

    /// Image of a local letter-form Pauli index.
    pub fn image(&self, index: u64) -> (u64, bool) {
        self.table[index as usize]
    }
}

impl fmt::Display for CliffordTableau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.image_x.iter().enumerate() {
            writeln!(f, "X_{i} -> {p}")?;
        }
        for (i, p) in self.image_z.iter().enumerate() {
            writeln!(f, "Z_{i} -> {p}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for CliffordTableau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CliffordTableau[")?;
        for (i, p) in self.image_x.iter().chain(&self.image_z).enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "]")
    }
}

impl FromStr for CliffordTableau {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut xs: Vec<Option<PauliOperator>> = Vec::new();
        let mut zs: Vec<Option<PauliOperator>> = Vec::new();
        for line in s.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (lhs, rhs) = line
                .split_once("->")
                .ok_or_else(|| Error::Parse(format!("expected `X_i -> P`, got `{line}`")))?;
            let lhs = lhs.trim();
            let (kind, idx) = lhs
                .split_once('_')
                .ok_or_else(|| Error::Parse(format!("bad generator `{lhs}`")))?;
            let idx: usize = idx.parse().map_err(|_| Error::Parse(format!("bad index in `{lhs}`")))?;
            let p: PauliOperator = rhs.parse()?;
            let slot = match kind {
                "X" => &mut xs,
                "Z" => &mut zs,
                _ => return Err(Error::Parse(format!("bad generator `{lhs}`"))),
            };
            if slot.len() <= idx {
                slot.resize(idx + 1, None);
            }
            slot[idx] = Some(p);
        }
        let collect = |v: Vec<Option<PauliOperator>>| -> Result<Vec<PauliOperator>> {
            v.into_iter().enumerate().map(|(i, p)| p.ok_or_else(|| Error::Parse(format!("missing image {i}")))).collect()
        };
        CliffordTableau::from_images(collect(xs)?, collect(zs)?)
    }
}

pub fn clifford_apply(c: &CliffordTableau, p: &PauliOperator) -> Result<PauliOperator> {
    c.apply(p)
}

pub fn clifford_compose(c: &CliffordTableau, d: &CliffordTableau) -> Result<CliffordTableau> {
    c.compose(d)
}

pub fn clifford_inverse(c: &CliffordTableau) -> CliffordTableau {
    c.inverse()
}
