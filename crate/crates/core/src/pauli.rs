//! Bit-packed n-qubit Pauli operators with exact phase tracking.
//!
//! An operator is `i^phase * P_0 ⊗ P_1 ⊗ ...` where each factor is one of
//! I, X, Y, Z selected by the bits `(x_k, z_k)`: (0,0)=I, (1,0)=X, (1,1)=Y,
//! (0,1)=Z. Phase 0 is therefore the Hermitian letter form, e.g. `XZ·ZZ = -iYI`.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{check_dim, Error, Result};

#[inline]
pub(crate) fn words(n: usize) -> usize {
    n.div_ceil(64).max(1)
}

#[inline]
fn popcnt(v: &[u64]) -> u32 {
    v.iter().map(|w| w.count_ones()).sum()
}

/// Single-qubit Pauli letter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    pub fn bits(self) -> (bool, bool) {
        match self {
            Letter::I => (false, false),
            Letter::X => (true, false),
            Letter::Y => (true, true),
            Letter::Z => (false, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Letter {
        match (x, z) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (true, true) => Letter::Y,
            (false, true) => Letter::Z,
        }
    }

    pub fn anticommutes(self, other: Letter) -> bool {
        let (a, b) = self.bits();
        let (c, d) = other.bits();
        (a & d) ^ (b & c)
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliOperator {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    phase: u8,
}

impl PauliOperator {
    pub fn identity(n: usize) -> Self {
        let w = words(n);
        PauliOperator { n, x: vec![0; w], z: vec![0; w], phase: 0 }
    }

    /// Single-qubit factor `letter` at `qubit`, identity elsewhere.
    pub fn single(n: usize, qubit: usize, letter: Letter) -> Self {
        let mut p = Self::identity(n);
        p.set(qubit, letter);
        p
    }

    pub fn from_letters(letters: &[Letter]) -> Self {
        let mut p = Self::identity(letters.len());
        for (q, &l) in letters.iter().enumerate() {
            p.set(q, l);
        }
        p
    }

    /// Builds from raw masks. Bits beyond `n` must be clear.
    pub fn from_masks(n: usize, x: Vec<u64>, z: Vec<u64>, phase: u8) -> Result<Self> {
        let w = words(n);
        if x.len() != w || z.len() != w {
            return Err(Error::InvalidArgument("mask length does not match qubit count".into()));
        }
        let p = PauliOperator { n, x, z, phase: phase & 3 };
        if p.has_stray_bits() {
            return Err(Error::InvalidArgument("mask bits set beyond n_qubits".into()));
        }
        Ok(p)
    }

    /// Pauli indexed by `index` in base 4, two bits per qubit (x then z).
    /// Covers all 4^n phase-0 operators for `index < 4^n`.
    pub fn from_index(n: usize, index: u64) -> Self {
        let mut p = Self::identity(n);
        for q in 0..n {
            let v = (index >> (2 * q)) & 3;
            p.set(q, Letter::from_bits(v & 1 == 1, v & 2 == 2));
        }
        p
    }

    pub fn index(&self) -> u64 {
        let mut v = 0u64;
        for q in 0..self.n {
            let (x, z) = self.letter(q).bits();
            v |= ((x as u64) | ((z as u64) << 1)) << (2 * q);
        }
        v
    }

    fn has_stray_bits(&self) -> bool {
        let r = self.n % 64;
        let last = words(self.n) - 1;
        let mask = if self.n == 0 { 0 } else if r == 0 { u64::MAX } else { (1u64 << r) - 1 };
        (self.x[last] & !mask) != 0 || (self.z[last] & !mask) != 0
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }
    pub fn phase(&self) -> u8 {
        self.phase
    }
    pub fn x_mask(&self) -> &[u64] {
        &self.x
    }
    pub fn z_mask(&self) -> &[u64] {
        &self.z
    }

    pub fn set_phase(&mut self, phase: u8) {
        self.phase = phase & 3;
    }

    /// Sign bit for Hermitian operators (phase 0 or 2).
    pub fn sign(&self) -> bool {
        self.phase == 2
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase & 1 == 0
    }

    pub fn negate(&mut self) {
        self.phase = (self.phase + 2) & 3;
    }

    pub fn with_phase(mut self, phase: u8) -> Self {
        self.phase = phase & 3;
        self
    }

    /// The phase-0 representative.
    pub fn unsigned(&self) -> Self {
        self.clone().with_phase(0)
    }

    pub fn letter(&self, q: usize) -> Letter {
        let (w, b) = (q / 64, q % 64);
        Letter::from_bits((self.x[w] >> b) & 1 == 1, (self.z[w] >> b) & 1 == 1)
    }

    pub fn set(&mut self, q: usize, l: Letter) {
        assert!(q < self.n, "qubit {q} out of range for {} qubits", self.n);
        let (w, b) = (q / 64, q % 64);
        let (x, z) = l.bits();
        self.x[w] = (self.x[w] & !(1 << b)) | ((x as u64) << b);
        self.z[w] = (self.z[w] & !(1 << b)) | ((z as u64) << b);
    }

    pub fn is_identity(&self) -> bool {
        self.x.iter().all(|&w| w == 0) && self.z.iter().all(|&w| w == 0)
    }

    pub fn weight(&self) -> usize {
        self.x.iter().zip(&self.z).map(|(a, b)| (a | b).count_ones() as usize).sum()
    }

    /// Qubit indices with a non-identity factor, ascending.
    pub fn support(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (w, (a, b)) in self.x.iter().zip(&self.z).enumerate() {
            let mut m = a | b;
            while m != 0 {
                let t = m.trailing_zeros() as usize;
                out.push(w * 64 + t);
                m &= m - 1;
            }
        }
        out
    }

    pub fn commutes(&self, other: &PauliOperator) -> Result<bool> {
        check_dim(self.n, other.n)?;
        Ok(self.commutes_unchecked(other))
    }

    pub(crate) fn commutes_unchecked(&self, other: &PauliOperator) -> bool {
        let mut acc = 0u32;
        for i in 0..self.x.len() {
            acc ^= ((self.x[i] & other.z[i]) ^ (self.z[i] & other.x[i])).count_ones();
        }
        acc & 1 == 0
    }

    pub fn multiply(&self, other: &PauliOperator) -> Result<PauliOperator> {
        check_dim(self.n, other.n)?;
        let mut out = self.clone();
        out.mul_assign_right(other);
        Ok(out)
    }

    /// `self <- self * other`, dimensions assumed equal.
    pub(crate) fn mul_assign_right(&mut self, other: &PauliOperator) {
        // phase of σ(x1,z1)σ(x2,z2) in letter form:
        // |x1&z1| + |x2&z2| + 2|z1&x2| - |x3&z3|  (mod 4)
        let mut ph = self.phase as u32 + other.phase as u32;
        let mut pos = 0u32;
        let mut neg = 0u32;
        for i in 0..self.x.len() {
            let (x1, z1, x2, z2) = (self.x[i], self.z[i], other.x[i], other.z[i]);
            let (x3, z3) = (x1 ^ x2, z1 ^ z2);
            pos += (x1 & z1).count_ones() + (x2 & z2).count_ones() + 2 * (z1 & x2).count_ones();
            neg += (x3 & z3).count_ones();
            self.x[i] = x3;
            self.z[i] = z3;
        }
        ph += pos + 4 * neg - neg;
        self.phase = (ph & 3) as u8;
    }

    /// Number of `i` factors in the `X^x Z^z` ordering: letter form equals
    /// `i^{|x&z|} ∏X^x ∏Z^z`.
    pub(crate) fn xz_phase_offset(&self) -> u32 {
        popcnt(&self.x.iter().zip(&self.z).map(|(a, b)| a & b).collect::<Vec<_>>())
    }

    /// Restriction to the given qubits, in the given order.
    pub fn restrict(&self, qubits: &[usize]) -> PauliOperator {
        let mut p = PauliOperator::identity(qubits.len());
        for (i, &q) in qubits.iter().enumerate() {
            p.set(i, self.letter(q));
        }
        p
    }

    /// Tensor product `self ⊗ other`; `other` occupies the higher qubit indices.
    pub fn tensor(&self, other: &PauliOperator) -> PauliOperator {
        let mut p = PauliOperator::identity(self.n + other.n);
        for q in 0..self.n {
            p.set(q, self.letter(q));
        }
        for q in 0..other.n {
            p.set(self.n + q, other.letter(q));
        }
        p.phase = (self.phase + other.phase) & 3;
        p
    }
}

/// Matrix product with exact phase.
pub fn pauli_multiply(p: &PauliOperator, q: &PauliOperator) -> Result<PauliOperator> {
    p.multiply(q)
}

pub fn pauli_commutes(p: &PauliOperator, q: &PauliOperator) -> Result<bool> {
    p.commutes(q)
}

pub fn pauli_support(p: &PauliOperator) -> Vec<usize> {
    p.support()
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.phase {
            0 => "+",
            1 => "i",
            2 => "-",
            _ => "-i",
        };
        f.write_str(prefix)?;
        for q in 0..self.n {
            write!(f, "{}", self.letter(q).as_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for PauliOperator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (phase, body) = if let Some(r) = s.strip_prefix("-i") {
            (3, r)
        } else if let Some(r) = s.strip_prefix("+i") {
            (1, r)
        } else if let Some(r) = s.strip_prefix('i') {
            (1, r)
        } else if let Some(r) = s.strip_prefix('-') {
            (2, r)
        } else if let Some(r) = s.strip_prefix('+') {
            (0, r)
        } else {
            (0, s)
        };
        if body.is_empty() {
            return Err(Error::Parse(String::from("empty Pauli string")));
        }
        let mut letters = Vec::with_capacity(body.len());
        for c in body.chars() {
            letters.push(match c {
                'I' => Letter::I,
                'X' => Letter::X,
                'Y' => Letter::Y,
                'Z' => Letter::Z,
                other => return Err(Error::Parse(alloc::format!("bad Pauli character `{other}`"))),
            });
        }
        Ok(PauliOperator::from_letters(&letters).with_phase(phase))
    }
}

/// Stochastic Pauli channel: `ρ ↦ Σ γ_P PρP`.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliChannel {
    n: usize,
    weights: BTreeMap<PauliOperator, f64>,
}

impl PauliChannel {
    pub fn identity(n: usize) -> Self {
        let mut weights = BTreeMap::new();
        weights.insert(PauliOperator::identity(n), 1.0);
        PauliChannel { n, weights }
    }

    /// Validates and canonicalizes. Keys must be phase-0 with matching size; weights
    /// must be probabilities summing to one within 1e-12.
    pub fn new(n: usize, entries: impl IntoIterator<Item = (PauliOperator, f64)>) -> Result<Self> {
        let mut weights: BTreeMap<PauliOperator, f64> = BTreeMap::new();
        for (p, w) in entries {
            check_dim(n, p.n_qubits())?;
            if p.phase() != 0 {
                return Err(Error::InvalidArgument(alloc::format!("channel key {p} must have phase 0")));
            }
            if !(0.0..=1.0).contains(&w) || w.is_nan() {
                return Err(Error::InvalidArgument(alloc::format!("weight {w} outside [0,1]")));
            }
            *weights.entry(p).or_insert(0.0) += w;
        }
        let total: f64 = weights.values().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(alloc::format!("weights sum to {total}, expected 1")));
        }
        weights.retain(|_, w| *w > 0.0);
        Ok(PauliChannel { n, weights })
    }

    /// Non-identity weights as given, identity weight filled in as the remainder.
    pub fn from_error_weights(n: usize, errors: impl IntoIterator<Item = (PauliOperator, f64)>) -> Result<Self> {
        let errors: Vec<_> = errors.into_iter().collect();
        let total: f64 = errors.iter().filter(|(p, _)| !p.is_identity()).map(|(_, w)| *w).sum();
        let mut all: Vec<_> = errors.into_iter().filter(|(p, _)| !p.is_identity()).collect();
        let rest = 1.0 - total;
        if rest < -1e-12 {
            return Err(Error::InvalidArgument(alloc::format!("error weights sum to {total} > 1")));
        }
        all.push((PauliOperator::identity(n), rest.max(0.0)));
        Self::new(n, all)
    }

    /// Depolarizing channel of strength `p`: γ_I = 1 − p(4ⁿ−1)/4ⁿ, γ_P = p/4ⁿ.
    pub fn depolarizing(n: usize, p: f64) -> Result<Self> {
        if n > 10 {
            return Err(Error::ResourceLimit(alloc::format!("explicit depolarizing channel on {n} qubits")));
        }
        let d2 = (1u64 << (2 * n)) as f64;
        let max = d2 / (d2 - 1.0);
        if !(0.0..=max + 1e-15).contains(&p) {
            return Err(Error::InvalidArgument(alloc::format!("depolarizing strength {p} outside [0, {max}]")));
        }
        let each = p / d2;
        let errs = (1..(1u64 << (2 * n))).map(|i| (PauliOperator::from_index(n, i), each));
        Self::from_error_weights(n, errs)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> impl Iterator<Item = (&PauliOperator, f64)> {
        self.weights.iter().map(|(p, w)| (p, *w))
    }

    pub fn weight(&self, p: &PauliOperator) -> f64 {
        self.weights.get(&p.unsigned()).copied().unwrap_or(0.0)
    }

    /// Total probability of a non-identity error.
    pub fn error_probability(&self) -> f64 {
        self.weights.iter().filter(|(p, _)| !p.is_identity()).map(|(_, w)| *w).sum()
    }

    /// Depolarizing strength D²/(D²−1) · (1 − γ_I).
    pub fn depolarizing_strength(&self) -> f64 {
        let d2 = libm::pow(4.0, self.n as f64);
        d2 / (d2 - 1.0) * self.error_probability()
    }

    /// Scales every non-identity weight by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let errs = self.weights.iter().filter(|(p, _)| !p.is_identity()).map(|(p, w)| (p.clone(), w * factor));
        Self::from_error_weights(self.n, errs.collect::<Vec<_>>())
    }

    /// Channel composition (apply `self` then `other`).
    pub fn then(&self, other: &PauliChannel) -> Result<Self> {
        check_dim(self.n, other.n)?;
        let mut acc: BTreeMap<PauliOperator, f64> = BTreeMap::new();
        for (p, a) in &self.weights {
            for (q, b) in &other.weights {
                let r = p.multiply(q)?.unsigned();
                *acc.entry(r).or_insert(0.0) += a * b;
            }
        }
        let total: f64 = acc.values().sum();
        for v in acc.values_mut() {
            *v /= total;
        }
        Self::new(self.n, acc)
    }
}
