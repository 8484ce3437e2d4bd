//! Named Clifford gates, gate sequences and gate sets.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use hashbrown::{HashMap, HashSet};

use crate::dense::{c, CMatrix, C64};
use crate::error::{Error, Result};
use crate::tableau::{check_qubits, CliffordTableau, LocalAction};

#[derive(Clone, Debug)]
pub struct GateDefinition {
    pub name: String,
    pub arity: usize,
    pub tableau: CliffordTableau,
    pub dense: CMatrix,
    pub inverse: String,
    action: LocalAction,
}

impl GateDefinition {
    /// Checks that the tableau matches conjugation by the dense matrix.
    pub fn new(name: &str, inverse: &str, tableau: CliffordTableau, dense: CMatrix) -> Result<Self> {
        let arity = tableau.n_qubits();
        if dense.dim() != 1 << arity {
            return Err(Error::Dimension(dense.dim(), 1 << arity));
        }
        let from_dense = crate::dense::tableau_from_unitary(&dense)?;
        if from_dense != tableau {
            return Err(Error::InvalidArgument(format!("gate {name}: tableau does not match dense matrix")));
        }
        let action = LocalAction::new(&tableau);
        Ok(GateDefinition { name: name.into(), arity, tableau, dense, inverse: inverse.into(), action })
    }

    pub fn action(&self) -> &LocalAction {
        &self.action
    }
}

/// Gate registry keyed by name.
#[derive(Clone, Debug)]
pub struct GateLibrary {
    gates: HashMap<String, GateDefinition>,
}

const ALIASES: &[(&str, &str)] = &[("S", "Z90"), ("P", "Z90"), ("Sdg", "Zm90"), ("CNOT", "CX")];

fn tab(images: &[&str]) -> CliffordTableau {
    let v: Vec<String> = images.iter().map(|s| s.to_string()).collect();
    CliffordTableau::from_strings(&v).expect("builtin tableau")
}

fn m1(a: [C64; 4]) -> CMatrix {
    CMatrix::from_rows(2, a.to_vec())
}

fn rot(axis: [C64; 4], sign: f64) -> CMatrix {
    // (I - i·sign·σ)/√2
    let h = core::f64::consts::FRAC_1_SQRT_2;
    let id = CMatrix::identity(2);
    id.add(&m1(axis).scale(c(0.0, -sign))).scale(c(h, 0.0))
}

fn rot2(diag_or_full: CMatrix, sign: f64) -> CMatrix {
    let h = core::f64::consts::FRAC_1_SQRT_2;
    CMatrix::identity(4).add(&diag_or_full.scale(c(0.0, -sign))).scale(c(h, 0.0))
}

impl GateLibrary {
    pub fn builtin() -> Self {
        let o = c(0.0, 0.0);
        let l = c(1.0, 0.0);
        let i = c(0.0, 1.0);
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let px = [o, l, l, o];
        let py = [o, -i, i, o];
        let pz = [l, o, o, -l];
        let xx = {
            let x = m1(px);
            x.kron_low(&x)
        };
        let zz = {
            let z = m1(pz);
            z.kron_low(&z)
        };

        // images listed as C(X_0), ..., C(Z_0), ...; strings are little-endian
        let table: Vec<(&str, &str, Vec<&str>, CMatrix)> = vec![
            ("I", "I", vec!["X", "Z"], CMatrix::identity(2)),
            ("X", "X", vec!["X", "-Z"], m1(px)),
            ("Y", "Y", vec!["-X", "-Z"], m1(py)),
            ("Z", "Z", vec!["-X", "Z"], m1(pz)),
            ("X90", "Xm90", vec!["X", "-Y"], rot(px, 1.0)),
            ("Xm90", "X90", vec!["X", "Y"], rot(px, -1.0)),
            ("Y90", "Ym90", vec!["-Z", "X"], rot(py, 1.0)),
            ("Ym90", "Y90", vec!["Z", "-X"], rot(py, -1.0)),
            ("Z90", "Zm90", vec!["Y", "Z"], m1([l, o, o, i])),
            ("Zm90", "Z90", vec!["-Y", "Z"], m1([l, o, o, -i])),
            ("H", "H", vec!["Z", "X"], m1([c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)])),
            // H·S†: X→Y, Z→X
            ("T", "Tdg", vec!["Y", "X"], m1([c(h, 0.0), c(0.0, -h), c(h, 0.0), c(0.0, h)])),
            ("Tdg", "T", vec!["Z", "Y"], m1([c(h, 0.0), c(h, 0.0), c(0.0, h), c(0.0, -h)])),
            (
                "CX",
                "CX",
                vec!["XX", "IX", "ZI", "ZZ"],
                CMatrix::from_rows(4, vec![l, o, o, o, o, o, o, l, o, o, l, o, o, l, o, o]),
            ),
            ("CZ", "CZ", vec!["XZ", "ZX", "ZI", "IZ"], CMatrix::diag(&[l, l, l, -l])),
            (
                "SWAP",
                "SWAP",
                vec!["IX", "XI", "IZ", "ZI"],
                CMatrix::from_rows(4, vec![l, o, o, o, o, o, l, o, o, l, o, o, o, o, o, l]),
            ),
            ("MS", "MSdg", vec!["XI", "IX", "-YX", "-XY"], rot2(xx.clone(), 1.0)),
            ("MSdg", "MS", vec!["XI", "IX", "YX", "XY"], rot2(xx, -1.0)),
            ("G", "Gdg", vec!["YZ", "ZY", "ZI", "IZ"], rot2(zz.clone(), 1.0)),
            ("Gdg", "G", vec!["-YZ", "-ZY", "ZI", "IZ"], rot2(zz, -1.0)),
        ];
        let mut gates = HashMap::new();
        for (name, inv, images, dense) in table {
            let g = GateDefinition::new(name, inv, tab(&images), dense).expect("builtin gate consistency");
            gates.insert(name.to_string(), g);
        }
        GateLibrary { gates }
    }

    pub fn register(&mut self, def: GateDefinition) {
        self.gates.insert(def.name.clone(), def);
    }

    pub fn resolve_name<'a>(&self, name: &'a str) -> &'a str {
        ALIASES.iter().find(|(a, _)| *a == name).map(|(_, b)| *b).unwrap_or(name)
    }

    pub fn get(&self, name: &str) -> Result<&GateDefinition> {
        self.gates.get(self.resolve_name(name)).ok_or_else(|| Error::UnsupportedGate(name.into()))
    }

    pub fn names(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.gates.keys().map(String::as_str).collect();
        v.sort_unstable();
        v
    }

    /// The gates of the common-gate table.
    pub fn table_gates() -> &'static [&'static str] {
        &["I", "X", "Y", "Z", "X90", "Z90", "T", "H", "CX", "CZ", "MS", "G"]
    }
}

pub fn builtin_gates() -> GateLibrary {
    GateLibrary::builtin()
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GateApp {
    pub name: String,
    pub qubits: Vec<usize>,
}

impl GateApp {
    pub fn new(name: &str, qubits: &[usize]) -> Self {
        GateApp { name: name.into(), qubits: qubits.to_vec() }
    }
}

/// Gates in time order: the first entry is applied first.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct GateSequence {
    pub n_qubits: usize,
    pub gates: Vec<GateApp>,
}

impl GateSequence {
    pub fn new(n_qubits: usize) -> Self {
        GateSequence { n_qubits, gates: Vec::new() }
    }

    pub fn push(&mut self, name: &str, qubits: &[usize]) {
        self.gates.push(GateApp::new(name, qubits));
    }

    pub fn extend(&mut self, other: &GateSequence) {
        self.gates.extend(other.gates.iter().cloned());
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn count(&self, name: &str) -> usize {
        self.gates.iter().filter(|g| g.name == name).count()
    }

    pub fn two_qubit_count(&self) -> usize {
        self.gates.iter().filter(|g| g.qubits.len() == 2).count()
    }

    pub fn validate(&self, lib: &GateLibrary) -> Result<()> {
        for g in &self.gates {
            let def = lib.get(&g.name)?;
            if def.arity != g.qubits.len() {
                return Err(Error::InvalidArgument(format!("gate {} takes {} qubits", g.name, def.arity)));
            }
            check_qubits(&g.qubits, self.n_qubits)?;
        }
        Ok(())
    }

    /// `G_m ∘ … ∘ G_1` applied on the left of `start`.
    pub fn apply_to(&self, lib: &GateLibrary, start: &mut CliffordTableau) -> Result<()> {
        for g in &self.gates {
            let def = lib.get(&g.name)?;
            if def.arity != g.qubits.len() {
                return Err(Error::InvalidArgument(format!("gate {} takes {} qubits", g.name, def.arity)));
            }
            check_qubits(&g.qubits, self.n_qubits)?;
            start.apply_local_left(&def.action, &g.qubits);
        }
        Ok(())
    }

    pub fn to_tableau(&self, lib: &GateLibrary) -> Result<CliffordTableau> {
        let mut t = CliffordTableau::identity(self.n_qubits);
        self.apply_to(lib, &mut t)?;
        Ok(t)
    }

    pub fn inverse(&self, lib: &GateLibrary) -> Result<GateSequence> {
        let mut out = GateSequence::new(self.n_qubits);
        for g in self.gates.iter().rev() {
            out.gates.push(GateApp { name: lib.get(&g.name)?.inverse.clone(), qubits: g.qubits.clone() });
        }
        Ok(out)
    }

    /// Dense unitary for n ≤ 3 (later gates multiply on the left).
    pub fn to_dense(&self, lib: &GateLibrary) -> Result<CMatrix> {
        if self.n_qubits > 3 {
            return Err(Error::ResourceLimit("dense sequences need n <= 3".into()));
        }
        let mut u = CMatrix::identity(1 << self.n_qubits);
        for g in &self.gates {
            let def = lib.get(&g.name)?;
            u = def.dense.embed(&g.qubits, self.n_qubits).mul(&u);
        }
        Ok(u)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum QubitPattern {
    Explicit(Vec<usize>),
    /// Every qubit (one-qubit gates).
    Each,
    /// Every ordered pair of distinct qubits.
    AllPairs,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateSetEntry {
    pub gate: String,
    pub qubits: QubitPattern,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateSet {
    pub name: String,
    pub entries: Vec<GateSetEntry>,
}

impl GateSet {
    pub fn new(name: &str, entries: Vec<GateSetEntry>) -> Result<Self> {
        for e in &entries {
            if !(e.weight >= 0.0) {
                return Err(Error::InvalidArgument(format!("negative weight for {}", e.gate)));
            }
        }
        Ok(GateSet { name: name.into(), entries })
    }

    pub fn entry(gate: &str, qubits: QubitPattern, weight: f64) -> GateSetEntry {
        GateSetEntry { gate: gate.into(), qubits, weight }
    }

    /// Concrete placements on an n-qubit register.
    pub fn expand(&self, lib: &GateLibrary, n: usize) -> Result<Vec<(GateApp, f64)>> {
        let mut out = Vec::new();
        for e in &self.entries {
            let def = lib.get(&e.gate)?;
            let placements: Vec<Vec<usize>> = match &e.qubits {
                QubitPattern::Explicit(q) => vec![q.clone()],
                QubitPattern::Each => {
                    if def.arity != 1 {
                        return Err(Error::InvalidArgument(format!("`each` needs a one-qubit gate, got {}", e.gate)));
                    }
                    (0..n).map(|q| vec![q]).collect()
                }
                QubitPattern::AllPairs => {
                    if def.arity != 2 {
                        return Err(Error::InvalidArgument(format!("`all-pairs` needs a two-qubit gate, got {}", e.gate)));
                    }
                    let mut v = Vec::new();
                    for a in 0..n {
                        for b in 0..n {
                            if a != b {
                                v.push(vec![a, b]);
                            }
                        }
                    }
                    v
                }
            };
            for q in placements {
                if q.len() != def.arity {
                    return Err(Error::InvalidArgument(format!("gate {} takes {} qubits", e.gate, def.arity)));
                }
                check_qubits(&q, n)?;
                out.push((GateApp { name: def.name.clone(), qubits: q }, e.weight));
            }
        }
        Ok(out)
    }

    /// H and S on each qubit, CX on all ordered pairs.
    pub fn standard() -> Self {
        GateSet {
            name: "standard".into(),
            entries: vec![
                Self::entry("H", QubitPattern::Each, 1.0),
                Self::entry("Z90", QubitPattern::Each, 1.0),
                Self::entry("CX", QubitPattern::AllPairs, 10.0),
            ],
        }
    }

    /// Y(π/2), X(π/2) on each qubit and G on all pairs.
    pub fn ion_trap() -> Self {
        GateSet {
            name: "ion-trap".into(),
            entries: vec![
                Self::entry("Y90", QubitPattern::Each, 1.0),
                Self::entry("X90", QubitPattern::Each, 1.0),
                Self::entry("G", QubitPattern::AllPairs, 10.0),
            ],
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "standard" => Ok(Self::standard()),
            "ion-trap" => Ok(Self::ion_trap()),
            _ => Err(Error::InvalidArgument(format!("unknown gate set `{name}`"))),
        }
    }
}

/// Breadth-first closure of the gate set; compares against the group order.
pub fn generates_clifford_group(lib: &GateLibrary, gs: &GateSet, n: usize, quotient: bool) -> Result<bool> {
    if n == 0 || n > 2 {
        return Err(Error::ResourceLimit(format!("closure check supports n <= 2, got {n}")));
    }
    let gens = gs.expand(lib, n)?;
    let target = crate::group::group_order_u64(n, quotient);
    let mut seen = HashSet::new();
    let id = CliffordTableau::identity(n);
    seen.insert(id.key(quotient));
    let mut queue = VecDeque::from([id]);
    while let Some(t) = queue.pop_front() {
        for (g, _) in &gens {
            let def = lib.get(&g.name)?;
            let mut next = t.clone();
            next.apply_local_left(def.action(), &g.qubits);
            if seen.insert(next.key(quotient)) {
                queue.push_back(next);
            }
        }
    }
    Ok(seen.len() as u64 == target)
}
