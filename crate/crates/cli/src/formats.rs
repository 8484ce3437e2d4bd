//! On-disk formats: sequence files, datasets, error models, step
//! distributions and gate sets.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use cliffrb::gates::{GateSetEntry, QubitPattern};
use cliffrb::rb::{Protocol, INTERLEAVED_LABEL};
use cliffrb::{
    ChannelSpec, CliffordTableau, ErrorModel, GateLibrary, GateSequence, GateSet, PauliChannel, PauliOperator,
    RBDataset, RBSequence, SequenceRecord, StepDistribution,
};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;
pub const DATASET_HEADER: [&str; 5] = ["protocol", "length", "seq_index", "n_shots", "n_correct"];

pub fn tableau_strings(c: &CliffordTableau) -> Vec<String> {
    c.to_strings()
}

pub fn tableau_from_strings(s: &[String]) -> Result<CliffordTableau> {
    Ok(CliffordTableau::from_strings(s)?)
}

/// Reads a tableau from either the canonical text form or a JSON array of
/// signed images.
pub fn read_tableau(path: &Path) -> Result<CliffordTableau> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if text.trim_start().starts_with('[') {
        let v: Vec<String> = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        return tableau_from_strings(&v);
    }
    Ok(text.parse()?)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SequenceEntry {
    pub length: usize,
    pub seq_index: usize,
    pub seed: u64,
    pub steps: Vec<Vec<String>>,
    pub labels: Vec<Option<String>>,
    pub inversion: Vec<String>,
    pub final_pauli: String,
    pub ideal_outcomes: Vec<bool>,
    pub measured: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SequenceFile {
    pub schema_version: u32,
    pub protocol: String,
    pub n_qubits: usize,
    pub master_seed: u64,
    pub lengths: Vec<usize>,
    pub sequences_per_length: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interleaved_gate: Option<Vec<String>>,
    pub sequences: Vec<SequenceEntry>,
}

impl SequenceEntry {
    pub fn from_sequence(s: &RBSequence, index: usize) -> Self {
        SequenceEntry {
            length: s.length,
            seq_index: index,
            seed: s.seed,
            steps: s.steps.iter().map(tableau_strings).collect(),
            labels: s.labels.clone(),
            inversion: tableau_strings(&s.inversion),
            final_pauli: s.final_pauli.to_string(),
            ideal_outcomes: s.ideal_outcomes.clone(),
            measured: s.measured.clone(),
        }
    }

    pub fn to_sequence(&self, protocol: Protocol, n_qubits: usize) -> Result<RBSequence> {
        let steps = self.steps.iter().map(|s| tableau_from_strings(s)).collect::<Result<Vec<_>>>()?;
        if steps.len() != self.labels.len() {
            bail!("sequence (l={}, i={}): {} steps but {} labels", self.length, self.seq_index, steps.len(), self.labels.len());
        }
        let inversion = tableau_from_strings(&self.inversion)?;
        if steps.iter().chain([&inversion]).any(|c| c.n_qubits() != n_qubits) {
            bail!("sequence (l={}, i={}) does not act on {n_qubits} qubits", self.length, self.seq_index);
        }
        Ok(RBSequence {
            protocol,
            n_qubits,
            length: self.length,
            steps,
            labels: self.labels.clone(),
            inversion,
            final_pauli: self.final_pauli.parse::<PauliOperator>()?,
            ideal_outcomes: self.ideal_outcomes.clone(),
            measured: self.measured.clone(),
            seed: self.seed,
        })
    }
}

impl SequenceFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let f: SequenceFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if f.schema_version != SCHEMA_VERSION {
            bail!("{}: unsupported schema_version {}", path.display(), f.schema_version);
        }
        Ok(f)
    }

    pub fn protocol(&self) -> Result<Protocol> {
        Ok(Protocol::from_tag(&self.protocol)?)
    }

    pub fn decode(&self) -> Result<Vec<RBSequence>> {
        let p = self.protocol()?;
        self.sequences.iter().map(|s| s.to_sequence(p, self.n_qubits)).collect()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetRow {
    protocol: String,
    length: usize,
    seq_index: usize,
    n_shots: u64,
    n_correct: u64,
}

pub fn write_dataset(path: &Path, protocol: &str, records: &[SequenceRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for r in records {
        w.serialize(DatasetRow {
            protocol: protocol.into(),
            length: r.length,
            seq_index: r.seq_index,
            n_shots: r.n_shots,
            n_correct: r.n_correct,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Loads a dataset CSV. With several protocols in one file, `protocol`
/// selects the rows to keep.
pub fn read_dataset(path: &Path, n_qubits: usize, protocol: Option<&str>) -> Result<RBDataset> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header != DATASET_HEADER {
        bail!("{}: expected header `{}`, found `{}`", path.display(), DATASET_HEADER.join(","), header.join(","));
    }
    let mut rows: Vec<DatasetRow> = Vec::new();
    for (i, row) in rdr.deserialize().enumerate() {
        rows.push(row.with_context(|| format!("{}: row {}", path.display(), i + 2))?);
    }
    let mut tags: Vec<&str> = rows.iter().map(|r| r.protocol.as_str()).collect();
    tags.sort_unstable();
    tags.dedup();
    let tag = match (protocol, tags.as_slice()) {
        (Some(p), _) => {
            if !tags.contains(&p) {
                bail!("{}: no rows with protocol `{p}`", path.display());
            }
            p.to_string()
        }
        (None, [one]) => one.to_string(),
        (None, []) => bail!("{}: empty dataset", path.display()),
        (None, many) => bail!("{}: rows mix protocols {:?}; pick one with --protocol", path.display(), many),
    };
    let records = rows
        .into_iter()
        .filter(|r| r.protocol == tag)
        .map(|r| SequenceRecord {
            length: r.length,
            seq_index: r.seq_index,
            n_shots: r.n_shots,
            n_correct: r.n_correct,
            expected: None,
            seed: 0,
        })
        .collect();
    let readout = if tag == Protocol::Approximate.tag() { 1 } else { n_qubits };
    Ok(RBDataset::new(n_qubits, &tag, readout, records)?)
}

/// `{"depolarizing": p}` or `{"pauli": {"X": 0.01, ...}}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelJson {
    Depolarizing(f64),
    Pauli(BTreeMap<String, f64>),
}

impl ChannelJson {
    pub fn to_spec(&self) -> Result<ChannelSpec> {
        Ok(match self {
            ChannelJson::Depolarizing(p) => {
                if !(0.0..=1.0).contains(p) {
                    bail!("depolarizing strength {p} outside [0, 1]");
                }
                ChannelSpec::Depolarizing(*p)
            }
            ChannelJson::Pauli(m) => {
                let mut errors = Vec::new();
                let mut n = None;
                for (k, &w) in m {
                    let p: PauliOperator = k.parse()?;
                    if *n.get_or_insert(p.n_qubits()) != p.n_qubits() {
                        bail!("Pauli channel mixes register sizes");
                    }
                    errors.push((p, w));
                }
                let Some(n) = n else { bail!("empty Pauli channel") };
                ChannelSpec::Pauli(PauliChannel::from_error_weights(n, errors)?)
            }
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RampJson {
    pub gamma: f64,
    #[serde(default)]
    pub factor_two: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ErrorModelJson {
    pub default: ChannelJson,
    #[serde(default)]
    pub spam: Option<ChannelJson>,
    /// Per-label channels; interleaved gates use the label `interleaved`.
    #[serde(default)]
    pub gates: BTreeMap<String, ChannelJson>,
    #[serde(default)]
    pub ramp: Option<RampJson>,
}

impl ErrorModelJson {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn from_flags(p: f64, pm: f64, pg: Option<f64>) -> Self {
        let mut gates = BTreeMap::new();
        if let Some(pg) = pg {
            gates.insert(INTERLEAVED_LABEL.to_string(), ChannelJson::Depolarizing(pg));
        }
        ErrorModelJson { default: ChannelJson::Depolarizing(p), spam: Some(ChannelJson::Depolarizing(pm)), gates, ramp: None }
    }

    pub fn to_model(&self) -> Result<ErrorModel> {
        let mut m = ErrorModel::noiseless();
        m.default_channel = self.default.to_spec()?;
        if let Some(s) = &self.spam {
            m.spam = s.to_spec()?;
        }
        for (label, ch) in &self.gates {
            m = m.with_gate(label, ch.to_spec()?);
        }
        if let Some(r) = &self.ramp {
            m = m.with_ramp(r.gamma, r.factor_two);
        }
        Ok(m)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepEntryJson {
    pub tableau: Vec<String>,
    pub p: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepFileJson {
    pub entries: Vec<StepEntryJson>,
}

/// A named step distribution (`paulis`, `uniform`, `knill`, `knill-pauli`)
/// or a JSON file of `{entries: [{tableau, p}]}`.
pub fn step_distribution(lib: &GateLibrary, spec: &str, n: usize) -> Result<StepDistribution> {
    match spec {
        "paulis" => Ok(StepDistribution::paulis(n)?),
        "uniform" => {
            let g = cliffrb::enumerate_group(n, false)?;
            let w = 1.0 / g.len() as f64;
            Ok(StepDistribution::new(g.into_iter().map(|c| (c, w)).collect())?)
        }
        "knill" | "knill-pauli" => {
            if n != 1 {
                bail!("the `{spec}` distribution is one-qubit only");
            }
            let (p, c) = StepDistribution::knill_1q(lib)?;
            Ok(if spec == "knill" { c } else { p })
        }
        path => {
            let text = fs::read_to_string(path).with_context(|| format!("reading step distribution {path}"))?;
            let f: StepFileJson = serde_json::from_str(&text).with_context(|| format!("parsing {path}"))?;
            let entries =
                f.entries.iter().map(|e| Ok((tableau_from_strings(&e.tableau)?, e.p))).collect::<Result<Vec<_>>>()?;
            Ok(StepDistribution::new(entries)?)
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QubitsJson {
    Pattern(String),
    Explicit(Vec<usize>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GateSetEntryJson {
    pub gate: String,
    pub qubits: QubitsJson,
    pub weight: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GateSetJson {
    pub name: String,
    pub gates: Vec<GateSetEntryJson>,
}

/// A built-in gate set name or a gate-set JSON file.
pub fn gate_set(spec: &str) -> Result<GateSet> {
    if let Ok(gs) = GateSet::by_name(spec) {
        return Ok(gs);
    }
    let text = fs::read_to_string(spec).with_context(|| format!("`{spec}` is neither a gate set name nor a readable file"))?;
    let f: GateSetJson = serde_json::from_str(&text).with_context(|| format!("parsing {spec}"))?;
    let entries = f
        .gates
        .into_iter()
        .map(|e| {
            let qubits = match e.qubits {
                QubitsJson::Explicit(q) => QubitPattern::Explicit(q),
                QubitsJson::Pattern(p) if p == "each" => QubitPattern::Each,
                QubitsJson::Pattern(p) if p == "all-pairs" => QubitPattern::AllPairs,
                QubitsJson::Pattern(p) => bail!("unknown qubit pattern `{p}`"),
            };
            Ok(GateSetEntry { gate: e.gate, qubits, weight: e.weight })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GateSet::new(&f.name, entries)?)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GateJson {
    pub gate: String,
    pub qubits: Vec<usize>,
}

pub fn sequence_json(s: &GateSequence) -> Vec<GateJson> {
    s.gates.iter().map(|g| GateJson { gate: g.name.clone(), qubits: g.qubits.clone() }).collect()
}

pub fn sequence_text(s: &GateSequence) -> String {
    s.gates
        .iter()
        .map(|g| {
            let q: Vec<String> = g.qubits.iter().map(|q| q.to_string()).collect();
            format!("{} {}", g.name, q.join(" "))
        })
        .collect::<Vec<_>>()
        .join("; ")
}
