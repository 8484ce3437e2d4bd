//! Exact propagation of stochastic Pauli errors through stabilizer circuits.
//!
//! A Pauli error only flips stabilizer signs, so the noisy ensemble is a
//! probability distribution over sign-list deviations `f ∈ {0,1}ⁿ` from the
//! ideal state (bit i set: row i has the opposite sign).

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::gates::{GateLibrary, GateSequence};
use crate::pauli::{PauliChannel, PauliOperator};
use crate::stab::{Measurement, RowOp, StabilizerState};
use crate::tableau::CliffordTableau;

pub const DEFAULT_CAP: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct SignListDistribution {
    n: usize,
    probs: Vec<f64>,
}

impl SignListDistribution {
    /// Point mass on the ideal sign list.
    pub fn new(n: usize, cap: usize) -> Result<Self> {
        if n > cap || n > 30 {
            return Err(Error::ResourceLimit(format!("sign-list distribution on {n} qubits exceeds cap {cap}")));
        }
        let mut probs = vec![0.0; 1 << n];
        probs[0] = 1.0;
        Ok(SignListDistribution { n, probs })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Mirrors the row operations of the ideal simulation.
    pub fn apply_row_ops(&mut self, ops: &[RowOp]) {
        for op in ops {
            match *op {
                RowOp::Mul { target, src } => {
                    let (t, s) = (1usize << target, 1usize << src);
                    for i in 0..self.probs.len() {
                        if i & s != 0 && i & t == 0 {
                            self.probs.swap(i, i | t);
                        }
                    }
                }
                RowOp::Swap(a, b) => {
                    let (ma, mb) = (1usize << a, 1usize << b);
                    for i in 0..self.probs.len() {
                        if i & ma != 0 && i & mb == 0 {
                            self.probs.swap(i, i ^ ma ^ mb);
                        }
                    }
                }
                RowOp::Replace(j) => self.marginalize(j),
            }
        }
    }

    fn marginalize(&mut self, j: usize) {
        let m = 1usize << j;
        for i in 0..self.probs.len() {
            if i & m != 0 {
                let v = core::mem::take(&mut self.probs[i]);
                self.probs[i ^ m] += v;
            }
        }
    }

    /// `dist' = Σ_pattern w · shift(dist, pattern)`.
    fn xor_convolve(&mut self, patterns: &BTreeMap<usize, f64>) {
        if patterns.len() == 1 && patterns.contains_key(&0) {
            return;
        }
        let mut out = vec![0.0; self.probs.len()];
        for (&pat, &w) in patterns {
            if w == 0.0 {
                continue;
            }
            for (i, &v) in self.probs.iter().enumerate() {
                out[i ^ pat] += w * v;
            }
        }
        self.probs = out;
    }

    /// Full-register depolarizing channel: mixes toward the uniform sign list.
    pub fn depolarize(&mut self, p: f64) {
        let u = p / self.probs.len() as f64;
        for v in self.probs.iter_mut() {
            *v = (1.0 - p) * *v + u;
        }
    }

    /// Applies `ch` on `qubits` (all qubits in order when `None`).
    pub fn propagate_channel(&mut self, state: &StabilizerState, ch: &PauliChannel, qubits: Option<&[usize]>) -> Result<()> {
        check_dim(self.n, state.n_qubits())?;
        let all: Vec<usize> = (0..self.n).collect();
        let qs = qubits.unwrap_or(&all);
        check_dim(ch.n_qubits(), qs.len())?;
        let mut patterns: BTreeMap<usize, f64> = BTreeMap::new();
        for (p, w) in ch.weights() {
            *patterns.entry(flip_pattern(state, p, qs)).or_insert(0.0) += w;
        }
        self.xor_convolve(&patterns);
        Ok(())
    }

    /// Probability that the parity of the rows in `mask` is unflipped.
    pub fn parity_even(&self, mask: usize) -> f64 {
        self.probs.iter().enumerate().filter(|(i, _)| (i & mask).count_ones() % 2 == 0).map(|(_, v)| v).sum()
    }

    /// Measures `Z_j`: ideal outcome from the state, plus the probability that
    /// the noisy outcome agrees. A random outcome is shared by both and the
    /// replaced row's deviation is marginalized.
    pub fn measure_z<R: Rng + ?Sized>(&mut self, state: &mut StabilizerState, j: usize, rng: &mut R) -> Result<(Measurement, f64)> {
        state.enable_journal();
        let m = state.measure_z(j, rng)?;
        let ops = state.take_journal();
        self.apply_row_ops(&ops);
        if m.deterministic {
            let ok = self.parity_even(1 << j);
            // condition on the correct branch
            let mask = 1usize << j;
            for (i, v) in self.probs.iter_mut().enumerate() {
                if i & mask != 0 {
                    *v = 0.0;
                }
            }
            if ok > 0.0 {
                for v in self.probs.iter_mut() {
                    *v /= ok;
                }
            }
            Ok((m, ok))
        } else {
            Ok((m, 1.0))
        }
    }
}

/// Bit i set iff `p` (placed on `qubits`) anticommutes with row i.
fn flip_pattern(state: &StabilizerState, p: &PauliOperator, qubits: &[usize]) -> usize {
    let mut pat = 0usize;
    for (i, row) in state.rows().iter().enumerate() {
        let mut odd = false;
        for (k, &q) in qubits.iter().enumerate() {
            odd ^= p.letter(k).anticommutes(row.letter(q));
        }
        if odd {
            pat |= 1 << i;
        }
    }
    pat
}

#[derive(Clone, Debug, PartialEq)]
pub enum ChannelSpec {
    /// Depolarizing of the given strength on the acted-on qubits.
    Depolarizing(f64),
    /// Pauli channel on the acted-on qubits (or the full register).
    Pauli(PauliChannel),
}

impl ChannelSpec {
    pub fn is_identity(&self) -> bool {
        match self {
            ChannelSpec::Depolarizing(p) => *p == 0.0,
            ChannelSpec::Pauli(c) => c.error_probability() == 0.0,
        }
    }

    fn scaled(&self, m: f64) -> Result<ChannelSpec> {
        Ok(match self {
            ChannelSpec::Depolarizing(p) => {
                let s = p * m;
                if !(0.0..=1.0).contains(&s) {
                    return Err(Error::InvalidArgument(format!("ramped strength {s} outside [0,1]")));
                }
                ChannelSpec::Depolarizing(s)
            }
            ChannelSpec::Pauli(c) => {
                if !(c.error_probability() * m <= 1.0 && m >= 0.0) {
                    return Err(Error::InvalidArgument("ramped Pauli channel is not a channel".into()));
                }
                ChannelSpec::Pauli(c.scaled(m)?)
            }
        })
    }
}

/// Linear strength drift `(1 + γ t)` with `t` the step index from 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeRamp {
    pub gamma: f64,
    /// Doubles the ramped strength (the `1 − 2ε_s(t)/α` reading of the drift model).
    pub factor_two: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorModel {
    pub default_channel: ChannelSpec,
    pub per_gate: BTreeMap<String, ChannelSpec>,
    pub time_ramp: Option<TimeRamp>,
    /// Applied once before readout; also carries the inversion-step error.
    pub spam: ChannelSpec,
}

impl ErrorModel {
    pub fn noiseless() -> Self {
        Self::depolarizing(0.0, 0.0)
    }

    pub fn depolarizing(p: f64, p_spam: f64) -> Self {
        ErrorModel {
            default_channel: ChannelSpec::Depolarizing(p),
            per_gate: BTreeMap::new(),
            time_ramp: None,
            spam: ChannelSpec::Depolarizing(p_spam),
        }
    }

    pub fn with_gate(mut self, label: &str, ch: ChannelSpec) -> Self {
        self.per_gate.insert(label.into(), ch);
        self
    }

    pub fn with_ramp(mut self, gamma: f64, factor_two: bool) -> Self {
        self.time_ramp = Some(TimeRamp { gamma, factor_two });
        self
    }

    /// Channel after step `t` carrying `label`.
    pub fn channel_for(&self, label: Option<&str>, t: usize) -> Result<ChannelSpec> {
        let base = label.and_then(|l| self.per_gate.get(l)).unwrap_or(&self.default_channel);
        match self.time_ramp {
            None => Ok(base.clone()),
            Some(r) => {
                let mut m = 1.0 + r.gamma * t as f64;
                if r.factor_two {
                    m *= 2.0;
                }
                base.scaled(m)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StepOp {
    Clifford(CliffordTableau),
    Gates(GateSequence),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimStep {
    pub op: StepOp,
    /// Selects a per-gate channel; `None` uses the default.
    pub label: Option<String>,
    /// Whether the error channel follows this step.
    pub noisy: bool,
}

impl SimStep {
    pub fn clifford(c: CliffordTableau, label: Option<&str>) -> Self {
        SimStep { op: StepOp::Clifford(c), label: label.map(String::from), noisy: true }
    }

    pub fn gates(g: GateSequence, label: Option<&str>) -> Self {
        SimStep { op: StepOp::Gates(g), label: label.map(String::from), noisy: true }
    }

    pub fn silent(mut self) -> Self {
        self.noisy = false;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Readout {
    /// Z on every qubit; success means every bit matches.
    AllQubits,
    /// Parity of Z over the listed qubits.
    Parity(Vec<usize>),
}

/// Circuit from `|0…0⟩`: noisy steps, SPAM channel, then readout.
#[derive(Clone, Debug, PartialEq)]
pub struct SimSequence {
    pub n_qubits: usize,
    pub steps: Vec<SimStep>,
    pub readout: Readout,
}

/// Ideal final state and the outcome bits the readout must reproduce.
pub fn ideal_outcomes(seq: &SimSequence, lib: &GateLibrary) -> Result<(StabilizerState, Vec<bool>)> {
    let mut st = StabilizerState::zeros(seq.n_qubits);
    for s in &seq.steps {
        apply_step(&mut st, &s.op, lib)?;
    }
    let mut bits = Vec::new();
    for obs in readout_observables(seq) {
        match st.stabilizes(&obs) {
            Some(plus) => bits.push(!plus),
            None => return Err(Error::InvalidState(format!("readout {obs} is not deterministic"))),
        }
    }
    Ok((st, bits))
}

fn readout_observables(seq: &SimSequence) -> Vec<PauliOperator> {
    let n = seq.n_qubits;
    match &seq.readout {
        Readout::AllQubits => (0..n).map(|q| PauliOperator::single(n, q, crate::pauli::Letter::Z)).collect(),
        Readout::Parity(qs) => {
            let mut p = PauliOperator::identity(n);
            for &q in qs {
                p.set(q, crate::pauli::Letter::Z);
            }
            alloc::vec![p]
        }
    }
}

fn apply_step(st: &mut StabilizerState, op: &StepOp, lib: &GateLibrary) -> Result<()> {
    match op {
        StepOp::Clifford(c) => st.apply_clifford(c),
        StepOp::Gates(g) => {
            for a in &g.gates {
                st.apply_gate(lib.get(&a.name)?, &a.qubits)?;
            }
            Ok(())
        }
    }
}

fn step_qubits(op: &StepOp, k: usize, n: usize) -> Result<Option<Vec<usize>>> {
    if k == n {
        return Ok(None);
    }
    match op {
        StepOp::Gates(g) if g.gates.len() == 1 && g.gates[0].qubits.len() == k => Ok(Some(g.gates[0].qubits.clone())),
        _ => Err(Error::InvalidArgument(format!("a {k}-qubit channel needs a single {k}-qubit gate step"))),
    }
}

fn apply_channel(
    dist: &mut SignListDistribution,
    st: &StabilizerState,
    ch: &ChannelSpec,
    op: Option<&StepOp>,
) -> Result<()> {
    let n = st.n_qubits();
    match ch {
        ChannelSpec::Depolarizing(p) => {
            if *p == 0.0 {
                return Ok(());
            }
            match op.map(|o| step_qubits(o, local_arity(o), n)).transpose()?.flatten() {
                Some(qs) if qs.len() < n => {
                    let local = PauliChannel::depolarizing(qs.len(), *p)?;
                    dist.propagate_channel(st, &local, Some(&qs))
                }
                _ => {
                    dist.depolarize(*p);
                    Ok(())
                }
            }
        }
        ChannelSpec::Pauli(c) => {
            let qs = match op {
                Some(o) => step_qubits(o, c.n_qubits(), n)?,
                None if c.n_qubits() == n => None,
                None => return Err(Error::Dimension(c.n_qubits(), n)),
            };
            dist.propagate_channel(st, c, qs.as_deref())
        }
    }
}

/// Arity used for depolarizing channels: the gate's arity for single-gate
/// steps carrying a per-gate override, otherwise the full register.
fn local_arity(op: &StepOp) -> usize {
    match op {
        StepOp::Gates(g) if g.gates.len() == 1 => g.gates[0].qubits.len(),
        StepOp::Gates(g) => g.n_qubits,
        StepOp::Clifford(c) => c.n_qubits(),
    }
}

/// Exact probability that the noisy run reproduces the ideal readout.
pub fn expected_sequence_fidelity(seq: &SimSequence, model: &ErrorModel, lib: &GateLibrary) -> Result<f64> {
    expected_sequence_fidelity_capped(seq, model, lib, DEFAULT_CAP)
}

pub fn expected_sequence_fidelity_capped(seq: &SimSequence, model: &ErrorModel, lib: &GateLibrary, cap: usize) -> Result<f64> {
    let n = seq.n_qubits;
    let mut dist = SignListDistribution::new(n, cap)?;
    let mut st = StabilizerState::zeros(n);
    st.enable_journal();
    let mut t = 0usize;
    for s in &seq.steps {
        apply_step(&mut st, &s.op, lib)?;
        dist.apply_row_ops(&st.take_journal());
        if s.noisy {
            let ch = model.channel_for(s.label.as_deref(), t)?;
            // per-gate overrides act on the gate's qubits; the default acts on the register
            let local = s.label.as_deref().is_some_and(|l| model.per_gate.contains_key(l));
            apply_channel(&mut dist, &st, &ch, if local { Some(&s.op) } else { None })?;
            t += 1;
        }
    }
    apply_channel(&mut dist, &st, &model.spam, None)?;
    let mut success = 1.0;
    let mut masks = Vec::new();
    for obs in readout_observables(seq) {
        let rows = st.decompose(&obs).ok_or_else(|| Error::InvalidState(format!("readout {obs} is not deterministic")))?;
        masks.push(rows.iter().fold(0usize, |m, &r| m | (1 << r)));
    }
    if masks.len() == 1 {
        success = dist.parity_even(masks[0]);
    } else {
        let mut acc = 0.0;
        for (i, &v) in dist.probabilities().iter().enumerate() {
            if masks.iter().all(|&m| (i & m).count_ones() % 2 == 0) {
                acc += v;
            }
        }
        success *= acc;
    }
    Ok(success)
}
