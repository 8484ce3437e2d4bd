//! Randomized-benchmarking sequence generation and simulated experiments.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use sha2::{Digest, Sha256};

use crate::analysis::{RBDataset, SequenceRecord};
use crate::error::{Error, Result};
use crate::error_sim::{expected_sequence_fidelity, ideal_outcomes, ErrorModel, Readout, SimSequence, SimStep};
use crate::gates::{GateLibrary, GateSequence};
use crate::group::sample_uniform_with;
use crate::pauli::{Letter, PauliOperator};
use crate::stab::StabilizerState;
use crate::tableau::CliffordTableau;

/// Label carried by interleaved gate steps, for per-gate error channels.
pub const INTERLEAVED_LABEL: &str = "interleaved";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Protocol {
    Exact,
    Interleaved,
    Approximate,
}

impl Protocol {
    pub fn tag(self) -> &'static str {
        match self {
            Protocol::Exact => "exact",
            Protocol::Interleaved => "interleaved",
            Protocol::Approximate => "approximate",
        }
    }

    pub fn from_tag(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Protocol::Exact),
            "interleaved" => Ok(Protocol::Interleaved),
            "approximate" => Ok(Protocol::Approximate),
            _ => Err(Error::Parse(format!("unknown protocol `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RBSequence {
    pub protocol: Protocol,
    pub n_qubits: usize,
    pub length: usize,
    pub steps: Vec<CliffordTableau>,
    /// Per-step label (interleaved gates carry [`INTERLEAVED_LABEL`]).
    pub labels: Vec<Option<String>>,
    pub inversion: CliffordTableau,
    pub final_pauli: PauliOperator,
    /// Exact inversion: one bit per qubit. Partial: the single parity bit.
    pub ideal_outcomes: Vec<bool>,
    /// Qubits whose Z parity is read; all qubits for exact inversion.
    pub measured: Vec<usize>,
    pub seed: u64,
}

impl RBSequence {
    pub fn is_partial(&self) -> bool {
        self.protocol == Protocol::Approximate
    }

    /// Simulation form: noisy steps, then the inversion without its own
    /// channel (its error is part of SPAM).
    pub fn to_sim(&self) -> SimSequence {
        let mut steps: Vec<SimStep> =
            self.steps.iter().zip(&self.labels).map(|(c, l)| SimStep::clifford(c.clone(), l.as_deref())).collect();
        steps.push(SimStep::clifford(self.inversion.clone(), None).silent());
        let readout = if self.is_partial() { Readout::Parity(self.measured.clone()) } else { Readout::AllQubits };
        SimSequence { n_qubits: self.n_qubits, steps, readout }
    }

    /// Product of every step and the inversion.
    pub fn total(&self) -> CliffordTableau {
        let mut t = CliffordTableau::identity(self.n_qubits);
        for c in self.steps.iter().chain(core::iter::once(&self.inversion)) {
            t = c.compose(&t).expect("same size");
        }
        t
    }
}

/// A finite distribution over Clifford operators.
#[derive(Clone, Debug, PartialEq)]
pub struct StepDistribution {
    entries: Vec<(CliffordTableau, f64)>,
}

impl StepDistribution {
    pub fn new(entries: Vec<(CliffordTableau, f64)>) -> Result<Self> {
        let Some(first) = entries.first() else {
            return Err(Error::InvalidArgument("empty step distribution".into()));
        };
        let n = first.0.n_qubits();
        let mut total = 0.0;
        for (i, (c, p)) in entries.iter().enumerate() {
            if c.n_qubits() != n {
                return Err(Error::Dimension(n, c.n_qubits()));
            }
            if !(*p >= 0.0) {
                return Err(Error::InvalidArgument(format!("negative probability {p}")));
            }
            if entries[..i].iter().any(|(d, _)| d == c) {
                return Err(Error::InvalidArgument("repeated tableau in step distribution".into()));
            }
            total += p;
        }
        if libm::fabs(total - 1.0) > 1e-9 {
            return Err(Error::InvalidArgument(format!("probabilities sum to {total}")));
        }
        Ok(StepDistribution { entries })
    }

    /// Uniform over the given gate sequences (coalescing equal tableaux).
    pub fn uniform_gates(lib: &GateLibrary, seqs: &[GateSequence]) -> Result<Self> {
        let w = 1.0 / seqs.len() as f64;
        let mut entries: Vec<(CliffordTableau, f64)> = Vec::new();
        for s in seqs {
            let t = s.to_tableau(lib)?;
            match entries.iter_mut().find(|(c, _)| *c == t) {
                Some(e) => e.1 += w,
                None => entries.push((t, w)),
            }
        }
        Self::new(entries)
    }

    /// Uniform over the 4ⁿ Pauli operators.
    pub fn paulis(n: usize) -> Result<Self> {
        let m = 1u64 << (2 * n);
        let entries = (0..m).map(|i| (CliffordTableau::from_pauli(&PauliOperator::from_index(n, i)), 1.0 / m as f64)).collect();
        Self::new(entries)
    }

    /// One-qubit Pauli part and `{X(±π/2), Y(±π/2)}` computational part.
    pub fn knill_1q(lib: &GateLibrary) -> Result<(Self, Self)> {
        let comp: Vec<GateSequence> = ["X90", "Xm90", "Y90", "Ym90"]
            .iter()
            .map(|g| {
                let mut s = GateSequence::new(1);
                s.push(g, &[0]);
                s
            })
            .collect();
        Ok((Self::paulis(1)?, Self::uniform_gates(lib, &comp)?))
    }

    pub fn n_qubits(&self) -> usize {
        self.entries[0].0.n_qubits()
    }

    pub fn entries(&self) -> &[(CliffordTableau, f64)] {
        &self.entries
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &CliffordTableau {
        let mut u: f64 = rng.random();
        for (c, p) in &self.entries {
            if u < *p {
                return c;
            }
            u -= p;
        }
        &self.entries.last().expect("nonempty").0
    }
}

fn random_pauli<R: Rng + ?Sized>(n: usize, rng: &mut R) -> PauliOperator {
    PauliOperator::from_index(n, rng.random_range(0..1u64 << (2 * n)))
}

fn finish_exact(
    protocol: Protocol,
    n: usize,
    length: usize,
    steps: Vec<CliffordTableau>,
    labels: Vec<Option<String>>,
    lib: &GateLibrary,
    rng: &mut (impl Rng + ?Sized),
) -> Result<RBSequence> {
    let mut total = CliffordTableau::identity(n);
    for c in &steps {
        total = c.compose(&total)?;
    }
    let final_pauli = random_pauli(n, rng);
    let inversion = CliffordTableau::from_pauli(&final_pauli).compose(&total.inverse())?;
    let mut seq = RBSequence {
        protocol,
        n_qubits: n,
        length,
        steps,
        labels,
        inversion,
        final_pauli,
        ideal_outcomes: Vec::new(),
        measured: (0..n).collect(),
        seed: 0,
    };
    seq.ideal_outcomes = ideal_outcomes(&seq.to_sim(), lib)?.1;
    Ok(seq)
}

/// `l` uniform Cliffords and an inversion that leaves a uniform random Pauli.
pub fn gen_exact_sequence<R: Rng + ?Sized>(lib: &GateLibrary, n: usize, l: usize, rng: &mut R) -> Result<RBSequence> {
    check_length(l)?;
    let steps: Vec<_> = (0..l).map(|_| sample_uniform_with(lib, n, rng)).collect();
    finish_exact(Protocol::Exact, n, l, steps, alloc::vec![None; l], lib, rng)
}

/// Alternating uniform Cliffords and `g`; consumes the rng exactly as
/// [`gen_exact_sequence`] does.
pub fn gen_interleaved_sequence<R: Rng + ?Sized>(
    lib: &GateLibrary,
    n: usize,
    l: usize,
    g: &CliffordTableau,
    rng: &mut R,
) -> Result<RBSequence> {
    check_length(l)?;
    if g.n_qubits() != n {
        return Err(Error::Dimension(n, g.n_qubits()));
    }
    let mut steps = Vec::with_capacity(2 * l);
    let mut labels = Vec::with_capacity(2 * l);
    for _ in 0..l {
        steps.push(sample_uniform_with(lib, n, rng));
        labels.push(None);
        steps.push(g.clone());
        labels.push(Some(INTERLEAVED_LABEL.to_string()));
    }
    finish_exact(Protocol::Interleaved, n, l, steps, labels, lib, rng)
}

/// Per qubit, the one-qubit Clifford taking `l` to Z.
fn to_z(lib: &GateLibrary, l: Letter) -> Result<Option<&CliffordTableau>> {
    Ok(match l {
        Letter::X => Some(&lib.get("H")?.tableau),
        Letter::Y => Some(&lib.get("X90")?.tableau),
        _ => None,
    })
}

/// Steps drawn as `computational ∘ pauli`; partial inversion onto a random
/// stabilizer, followed by a uniform random Pauli.
pub fn gen_approximate_sequence<R: Rng + ?Sized>(
    lib: &GateLibrary,
    pauli_part: &StepDistribution,
    computational: &StepDistribution,
    l: usize,
    rng: &mut R,
) -> Result<RBSequence> {
    check_length(l)?;
    let n = computational.n_qubits();
    if pauli_part.n_qubits() != n {
        return Err(Error::Dimension(n, pauli_part.n_qubits()));
    }
    let mut state = StabilizerState::zeros(n);
    let mut steps = Vec::with_capacity(l);
    for _ in 0..l {
        let p = pauli_part.sample(rng);
        let c = computational.sample(rng);
        let step = c.compose(p)?;
        state.apply_clifford(&step)?;
        steps.push(step);
    }
    // uniform over the 2ⁿ−1 non-identity stabilizer-group elements
    let mask = rng.random_range(1..1u64 << n);
    let mut stab = PauliOperator::identity(n);
    for (i, r) in state.rows().iter().enumerate() {
        if (mask >> i) & 1 == 1 {
            stab = stab.multiply(r)?;
        }
    }
    let mut inversion = CliffordTableau::identity(n);
    let mut measured = Vec::new();
    for q in 0..n {
        let letter = stab.letter(q);
        if letter == Letter::I {
            continue;
        }
        measured.push(q);
        if let Some(t) = to_z(lib, letter)? {
            inversion = CliffordTableau::embed(t, &[q], n)?.compose(&inversion)?;
        }
    }
    let final_pauli = random_pauli(n, rng);
    let inversion = CliffordTableau::from_pauli(&final_pauli).compose(&inversion)?;
    let mut seq = RBSequence {
        protocol: Protocol::Approximate,
        n_qubits: n,
        length: l,
        steps,
        labels: alloc::vec![None; l],
        inversion,
        final_pauli,
        ideal_outcomes: Vec::new(),
        measured,
        seed: 0,
    };
    seq.ideal_outcomes = ideal_outcomes(&seq.to_sim(), lib)?.1;
    Ok(seq)
}

fn check_length(l: usize) -> Result<()> {
    if l == 0 {
        return Err(Error::InvalidArgument("sequence length must be at least 1".into()));
    }
    Ok(())
}

/// How each sequence of an experiment is generated.
#[derive(Clone, Debug, PartialEq)]
pub enum ProtocolSpec {
    Exact { n_qubits: usize },
    Interleaved { gate: CliffordTableau },
    Approximate { pauli_part: StepDistribution, computational: StepDistribution },
}

impl ProtocolSpec {
    pub fn protocol(&self) -> Protocol {
        match self {
            ProtocolSpec::Exact { .. } => Protocol::Exact,
            ProtocolSpec::Interleaved { .. } => Protocol::Interleaved,
            ProtocolSpec::Approximate { .. } => Protocol::Approximate,
        }
    }

    pub fn n_qubits(&self) -> usize {
        match self {
            ProtocolSpec::Exact { n_qubits } => *n_qubits,
            ProtocolSpec::Interleaved { gate } => gate.n_qubits(),
            ProtocolSpec::Approximate { computational, .. } => computational.n_qubits(),
        }
    }

    pub fn generate<R: Rng + ?Sized>(&self, lib: &GateLibrary, l: usize, rng: &mut R) -> Result<RBSequence> {
        match self {
            ProtocolSpec::Exact { n_qubits } => gen_exact_sequence(lib, *n_qubits, l, rng),
            ProtocolSpec::Interleaved { gate } => gen_interleaved_sequence(lib, gate.n_qubits(), l, gate, rng),
            ProtocolSpec::Approximate { pauli_part, computational } => {
                gen_approximate_sequence(lib, pauli_part, computational, l, rng)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentDesign {
    pub lengths: Vec<usize>,
    /// Sequences per length, parallel to `lengths`.
    pub sequences: Vec<usize>,
    pub shots: u64,
    pub master_seed: u64,
}

impl ExperimentDesign {
    pub fn new(lengths: Vec<usize>, sequences_per_length: usize, shots: u64, master_seed: u64) -> Result<Self> {
        let sequences = alloc::vec![sequences_per_length; lengths.len()];
        let d = ExperimentDesign { lengths, sequences, shots, master_seed };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lengths.is_empty() || self.lengths.len() != self.sequences.len() {
            return Err(Error::InvalidArgument("need one sequence count per length".into()));
        }
        if self.lengths[0] == 0 || self.lengths.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("lengths must be positive and strictly increasing".into()));
        }
        if self.sequences.contains(&0) || self.shots == 0 {
            return Err(Error::InvalidArgument("sequence and shot counts must be positive".into()));
        }
        Ok(())
    }

    /// `(length, index)` for every sequence, in dataset order.
    pub fn tasks(&self) -> Vec<(usize, usize)> {
        self.lengths.iter().zip(&self.sequences).flat_map(|(&l, &k)| (0..k).map(move |i| (l, i))).collect()
    }
}

/// First 8 bytes (little endian) of SHA-256 over the master seed, protocol
/// tag, length and index.
pub fn sequence_seed(master: u64, tag: &str, length: usize, index: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(tag.as_bytes());
    h.update((length as u64).to_le_bytes());
    h.update((index as u64).to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest is 32 bytes"))
}

/// The sequence for one task, generated from its own seed.
pub fn experiment_sequence(
    lib: &GateLibrary,
    design: &ExperimentDesign,
    spec: &ProtocolSpec,
    length: usize,
    index: usize,
) -> Result<(RBSequence, ChaCha8Rng)> {
    let seed = sequence_seed(design.master_seed, spec.protocol().tag(), length, index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seq = spec.generate(lib, length, &mut rng)?;
    seq.seed = seed;
    Ok((seq, rng))
}

/// Exact success probability and binomial shot counts for one task.
pub fn run_sequence(
    lib: &GateLibrary,
    design: &ExperimentDesign,
    spec: &ProtocolSpec,
    model: &ErrorModel,
    length: usize,
    index: usize,
) -> Result<SequenceRecord> {
    let (seq, mut rng) = experiment_sequence(lib, design, spec, length, index)?;
    let p = expected_sequence_fidelity(&seq.to_sim(), model, lib)?.clamp(0.0, 1.0);
    let n_correct = Binomial::new(design.shots, p)
        .map_err(|e| Error::InvalidArgument(format!("binomial: {e}")))?
        .sample(&mut rng);
    Ok(SequenceRecord { length, seq_index: index, n_shots: design.shots, n_correct, expected: Some(p), seed: seq.seed })
}

pub fn run_experiment(
    lib: &GateLibrary,
    design: &ExperimentDesign,
    spec: &ProtocolSpec,
    model: &ErrorModel,
) -> Result<RBDataset> {
    design.validate()?;
    let records = design
        .tasks()
        .into_iter()
        .map(|(l, i)| run_sequence(lib, design, spec, model, l, i))
        .collect::<Result<Vec<_>>>()?;
    let readout = if spec.protocol() == Protocol::Approximate { 1 } else { spec.n_qubits() };
    RBDataset::new(spec.n_qubits(), spec.protocol().tag(), readout, records)
}

/// Largest `l` with `s_l < α(1 − ε/α)^l`, where `s_l` is the binomial
/// standard error of the mean fidelity over `n_e·n_l` shots.
pub fn max_useful_length(eps_est: f64, n: usize, n_e: u64, n_l: u64) -> Result<usize> {
    let alpha = 1.0 - 1.0 / (1u64 << n) as f64;
    if !(eps_est > 0.0 && eps_est < alpha) {
        return Err(Error::InvalidArgument(format!("eps_est must lie in (0, {alpha})")));
    }
    let shots = (n_e * n_l) as f64;
    // past this point the signal stays below the noise for good
    let floor = 0.5 * libm::sqrt(alpha * (1.0 - alpha) / shots);
    let mut best = 0;
    for l in 1usize.. {
        let signal = alpha * libm::pow(1.0 - eps_est / alpha, l as f64);
        let f = 1.0 - alpha + signal;
        if libm::sqrt(f * (1.0 - f) / shots) < signal {
            best = l;
        } else if signal < floor {
            break;
        }
    }
    Ok(best)
}
