use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use cliffrb::analysis::{bootstrap_replicate, summarize_bootstrap, ConsistencyWeights};
use cliffrb::bounds::{remaining_aggregates, tv_decay_rate, tv_series};
use cliffrb::rb::{experiment_sequence, sequence_seed, Protocol};
use cliffrb::{
    block_decompose, cayley_search, consistency_check, enumerate_group, expected_sequence_fidelity, fit,
    group_order, interleaved_gate_error, kappa_bounds, sample_uniform, step_comparison_bound, translate_sequence,
    BootstrapReport, CliffordTableau, DecompositionTable, ExperimentDesign, FitModel, FitReport, GateErrorForm,
    GateLibrary, GroupDistribution, GroupIndex, PauliOperator, ProtocolSpec,
};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::formats::{self, ErrorModelJson, SequenceEntry, SequenceFile, SCHEMA_VERSION};
use crate::{Command, LpArgs, StepArgs};

pub struct Env {
    pub out: PathBuf,
    pub seed: u64,
    pub lib: GateLibrary,
}

/// What a command produced: the report, its human rendering, and the files
/// it read and wrote.
#[derive(Default)]
pub struct Output {
    pub report: Value,
    pub pretty: String,
    pub inputs: Vec<PathBuf>,
    pub artifacts: Vec<PathBuf>,
}

impl Env {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Writes the report itself as an artifact.
    fn write_report(&self, name: &str, out: &mut Output) -> Result<()> {
        let p = self.path(name);
        fs::write(&p, serde_json::to_string_pretty(&out.report)? + "\n").with_context(|| format!("writing {}", p.display()))?;
        out.artifacts.push(p);
        Ok(())
    }
}

fn versioned(mut v: Value) -> Value {
    v["schema_version"] = json!(SCHEMA_VERSION);
    v
}

pub fn run(cmd: &Command, ctx: &Env) -> Result<Output> {
    match cmd {
        Command::Enumerate { n, quotient, list } => enumerate(ctx, *n, *quotient, *list),
        Command::SearchDecomp { n, quotient, gate_set, export } => search_decomp(ctx, *n, *quotient, gate_set, *export),
        Command::Decompose { tableau, random, n, method, table, gate_set, target } => decompose(
            ctx,
            tableau.as_deref(),
            *random,
            *n,
            method,
            table.as_deref(),
            gate_set,
            target.as_deref(),
        ),
        Command::SampleClifford { n, count } => sample_clifford(ctx, *n, *count),
        Command::GenSequences { protocol, n, lengths, sequences, gate, gate_file, pauli_part, computational } => {
            gen_sequences(ctx, protocol, *n, lengths, *sequences, gate.as_deref(), gate_file.as_deref(), pauli_part, computational)
        }
        Command::Simulate { sequences, model, p, pm, pg, shots } => simulate(ctx, sequences, model.as_deref(), *p, *pm, *pg, *shots),
        Command::Fit { data, n, model, protocol } => fit_cmd(ctx, data, *n, model, protocol.as_deref()),
        Command::Bootstrap { data, n, model, protocol, resamples } => {
            bootstrap_cmd(ctx, data, *n, model, protocol.as_deref(), *resamples)
        }
        Command::Interleaved { primary, interleaved, n, model, form, one_qubit } => {
            interleaved_cmd(ctx, primary, interleaved, *n, model, form, one_qubit)
        }
        Command::TvDecay { step, jmax } => tv_decay(ctx, step, *jmax),
        Command::Bounds { what } => match what {
            crate::BoundsKind::Lp(a) => bounds_lp(ctx, a),
            crate::BoundsKind::Kappa { sequences, e, measure } => bounds_kappa(ctx, sequences, *e, measure.as_deref()),
        },
    }
}

fn enumerate(ctx: &Env, n: usize, quotient: bool, list: bool) -> Result<Output> {
    let mut out = Output::default();
    let order = group_order(n, quotient);
    let elements = enumerate_group(n, quotient)?;
    if order != elements.len().into() {
        bail!("enumerated {} elements, expected {order}", elements.len());
    }
    let mut report = json!({ "command": "enumerate", "n": n, "quotient": quotient, "count": elements.len() });
    if list {
        report["elements"] = json!(elements.iter().map(formats::tableau_strings).collect::<Vec<_>>());
    }
    out.report = versioned(report);
    out.pretty = format!("n = {n}, {} group: count {}\n", if quotient { "quotient" } else { "full" }, elements.len());
    ctx.write_report("enumerate.json", &mut out)?;
    Ok(out)
}

fn histogram_json(t: &DecompositionTable) -> Value {
    let h: serde_json::Map<String, Value> = t.histogram().into_iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
    Value::Object(h)
}

fn search_decomp(ctx: &Env, n: usize, quotient: bool, gs: &str, export: bool) -> Result<Output> {
    let mut out = Output::default();
    let set = formats::gate_set(gs)?;
    if Path::new(gs).is_file() {
        out.inputs.push(gs.into());
    }
    let table = cayley_search(&ctx.lib, &set, n, quotient)?;
    let bin = ctx.path("decomp.bin");
    fs::write(&bin, table.to_bytes()).with_context(|| format!("writing {}", bin.display()))?;
    out.artifacts.push(bin);
    if export {
        let p = ctx.path("decomp-sequences.jsonl");
        let mut text = String::new();
        for (t, s, c) in table.entries() {
            let line = json!({
                "tableau": formats::tableau_strings(&t),
                "gates": formats::sequence_json(&s),
                "primary": c.primary,
                "total": c.total,
            });
            text.push_str(&line.to_string());
            text.push('\n');
        }
        fs::write(&p, text)?;
        out.artifacts.push(p);
    }
    out.report = versioned(json!({
        "command": "search-decomp",
        "n": n,
        "quotient": quotient,
        "gate_set": set.name,
        "elements": table.len(),
        "histogram": histogram_json(&table),
        "mean_primary": table.mean_primary(),
    }));
    let mut pretty = format!("gate set {} on {n} qubits: {} elements\n  count  elements\n", set.name, table.len());
    for (k, v) in table.histogram() {
        pretty.push_str(&format!("  {k:>5}  {v}\n"));
    }
    pretty.push_str(&format!("  mean {:.4}\n", table.mean_primary()));
    out.pretty = pretty;
    ctx.write_report("search-decomp.json", &mut out)?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn decompose(
    ctx: &Env,
    tableau: Option<&Path>,
    random: Option<usize>,
    n: Option<usize>,
    method: &str,
    table: Option<&Path>,
    gs: &str,
    target: Option<&str>,
) -> Result<Output> {
    let mut out = Output::default();
    let inputs: Vec<CliffordTableau> = match (tableau, random) {
        (Some(p), None) => {
            out.inputs.push(p.into());
            vec![formats::read_tableau(p)?]
        }
        (None, Some(k)) => {
            let Some(n) = n else { bail!("--random needs --n") };
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
            (0..k).map(|_| sample_uniform(n, &mut rng)).collect()
        }
        _ => bail!("give exactly one of --tableau or --random"),
    };
    let lookup = match method {
        "block" => None,
        "optimal" => {
            let set = formats::gate_set(gs)?;
            let n = inputs[0].n_qubits();
            Some(match table {
                Some(p) => {
                    out.inputs.push(p.into());
                    DecompositionTable::from_bytes(&ctx.lib, &set, &fs::read(p)?)?
                }
                None => cayley_search(&ctx.lib, &set, n, false)?,
            })
        }
        m => bail!("unknown method `{m}` (block or optimal)"),
    };
    let target = target.map(formats::gate_set).transpose()?;
    let mut rows = Vec::new();
    let mut pretty = String::new();
    for c in &inputs {
        let mut seq = match &lookup {
            None => block_decompose(&ctx.lib, c, true),
            Some(t) => t.sequence(c).with_context(|| format!("tableau not in the {}-qubit table", t.n_qubits))?,
        };
        if let Some(ts) = &target {
            seq = translate_sequence(&ctx.lib, &seq, ts)?;
        }
        let back = seq.to_tableau(&ctx.lib)?;
        let exact = back == *c;
        let up_to_pauli = back.key(true) == c.key(true);
        if !up_to_pauli {
            bail!("decomposition does not reproduce the input tableau");
        }
        pretty.push_str(&format!("{} gates ({} two-qubit): {}\n", seq.len(), seq.two_qubit_count(), formats::sequence_text(&seq)));
        rows.push(json!({
            "tableau": formats::tableau_strings(c),
            "gates": formats::sequence_json(&seq),
            "gate_count": seq.len(),
            "two_qubit_count": seq.two_qubit_count(),
            "exact_signs": exact,
        }));
    }
    out.report = versioned(json!({ "command": "decompose", "method": method, "decompositions": rows }));
    out.pretty = pretty;
    ctx.write_report("decompose.json", &mut out)?;
    Ok(out)
}

fn sample_clifford(ctx: &Env, n: usize, count: usize) -> Result<Output> {
    let mut out = Output::default();
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let samples: Vec<CliffordTableau> = (0..count).map(|_| sample_uniform(n, &mut rng)).collect();
    out.pretty = samples.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("\n");
    out.report = versioned(json!({
        "command": "sample-clifford",
        "n": n,
        "seed": ctx.seed,
        "samples": samples.iter().map(formats::tableau_strings).collect::<Vec<_>>(),
    }));
    ctx.write_report("samples.json", &mut out)?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn gen_sequences(
    ctx: &Env,
    protocol: &str,
    n: usize,
    lengths: &[usize],
    per_length: usize,
    gate: Option<&str>,
    gate_file: Option<&Path>,
    pauli_part: &str,
    computational: &str,
) -> Result<Output> {
    let mut out = Output::default();
    let spec = match Protocol::from_tag(protocol)? {
        Protocol::Exact => ProtocolSpec::Exact { n_qubits: n },
        Protocol::Interleaved => {
            let g = match (gate, gate_file) {
                (Some(name), None) => ctx.lib.get(name)?.tableau.clone(),
                (None, Some(p)) => {
                    out.inputs.push(p.into());
                    formats::read_tableau(p)?
                }
                _ => bail!("interleaved sequences need exactly one of --gate or --gate-file"),
            };
            if g.n_qubits() != n {
                bail!("interleaved gate acts on {} qubits, --n is {n}", g.n_qubits());
            }
            ProtocolSpec::Interleaved { gate: g }
        }
        Protocol::Approximate => ProtocolSpec::Approximate {
            pauli_part: formats::step_distribution(&ctx.lib, pauli_part, n)?,
            computational: formats::step_distribution(&ctx.lib, computational, n)?,
        },
    };
    for s in [pauli_part, computational] {
        if Path::new(s).is_file() && spec.protocol() == Protocol::Approximate {
            out.inputs.push(s.into());
        }
    }
    let design = ExperimentDesign::new(lengths.to_vec(), per_length, 1, ctx.seed)?;
    let seqs = design
        .tasks()
        .into_par_iter()
        .map(|(l, i)| experiment_sequence(&ctx.lib, &design, &spec, l, i).map(|(s, _)| SequenceEntry::from_sequence(&s, i)))
        .collect::<cliffrb::Result<Vec<_>>>()?;
    let file = SequenceFile {
        schema_version: SCHEMA_VERSION,
        protocol: spec.protocol().tag().into(),
        n_qubits: n,
        master_seed: ctx.seed,
        lengths: design.lengths.clone(),
        sequences_per_length: design.sequences.clone(),
        interleaved_gate: match &spec {
            ProtocolSpec::Interleaved { gate } => Some(formats::tableau_strings(gate)),
            _ => None,
        },
        sequences: seqs,
    };
    let p = ctx.path("sequences.json");
    fs::write(&p, serde_json::to_string(&file)? + "\n")?;
    out.artifacts.push(p);
    out.report = versioned(json!({
        "command": "gen-sequences",
        "protocol": file.protocol,
        "n": n,
        "lengths": file.lengths,
        "sequences": file.sequences.len(),
        "master_seed": ctx.seed,
    }));
    out.pretty =
        format!("{} {} sequences on {n} qubits over lengths {:?}\n", file.sequences.len(), file.protocol, file.lengths);
    ctx.write_report("gen-sequences.json", &mut out)?;
    Ok(out)
}

fn simulate(ctx: &Env, seq_path: &Path, model_path: Option<&Path>, p: f64, pm: f64, pg: Option<f64>, shots: u64) -> Result<Output> {
    let mut out = Output::default();
    if shots == 0 {
        bail!("--shots must be positive");
    }
    let file = SequenceFile::read(seq_path)?;
    out.inputs.push(seq_path.into());
    let model_json = match model_path {
        Some(m) => {
            out.inputs.push(m.into());
            ErrorModelJson::read(m)?
        }
        None => ErrorModelJson::from_flags(p, pm, pg),
    };
    let model = model_json.to_model()?;
    let seqs = file.decode()?;
    let tag = file.protocol.clone();
    let records = seqs
        .par_iter()
        .zip(&file.sequences)
        .map(|(s, e)| -> Result<cliffrb::SequenceRecord> {
            let f = expected_sequence_fidelity(&s.to_sim(), &model, &ctx.lib)?.clamp(0.0, 1.0);
            let mut rng = ChaCha8Rng::seed_from_u64(sequence_seed(ctx.seed, "simulate", e.length, e.seq_index));
            let n_correct = Binomial::new(shots, f)?.sample(&mut rng);
            Ok(cliffrb::SequenceRecord {
                length: e.length,
                seq_index: e.seq_index,
                n_shots: shots,
                n_correct,
                expected: Some(f),
                seed: e.seed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let data = ctx.path("dataset.csv");
    formats::write_dataset(&data, &tag, &records)?;
    out.artifacts.push(data);
    let mut by_len: std::collections::BTreeMap<usize, (f64, f64, usize)> = Default::default();
    for r in &records {
        let e = by_len.entry(r.length).or_default();
        e.0 += r.expected.unwrap_or(f64::NAN);
        e.1 += r.fidelity();
        e.2 += 1;
    }
    let rows: Vec<Value> = by_len
        .iter()
        .map(|(l, (ex, ob, k))| json!({ "length": l, "expected": ex / *k as f64, "observed": ob / *k as f64 }))
        .collect();
    let mut pretty = String::from("  length  expected  observed\n");
    for (l, (ex, ob, k)) in &by_len {
        pretty.push_str(&format!("  {l:>6}  {:.6}  {:.6}\n", ex / *k as f64, ob / *k as f64));
    }
    out.pretty = pretty;
    out.report = versioned(json!({
        "command": "simulate",
        "protocol": tag,
        "n": file.n_qubits,
        "shots": shots,
        "model": model_json,
        "seed": ctx.seed,
        "mean_fidelity": rows,
    }));
    ctx.write_report("simulate.json", &mut out)?;
    Ok(out)
}

pub fn fit_json(f: &FitReport) -> Value {
    let names = f.model.param_names();
    let se = f.std_errors();
    let params: serde_json::Map<String, Value> = names.iter().zip(&f.params).map(|(k, v)| (k.to_string(), json!(v))).collect();
    let errs: serde_json::Map<String, Value> = names.iter().zip(&se).map(|(k, v)| (k.to_string(), json!(v))).collect();
    json!({
        "model": f.model.tag(),
        "alpha": f.alpha,
        "params": params,
        "std_errors": errs,
        "covariance": f.covariance,
        "chi2": f.chi2,
        "dof": f.dof,
        "p_value": f.p_value,
        "significant": f.significant,
        "lengths": f.lengths,
        "residuals": f.residuals,
        "condition_number": f.condition_number(),
        "iterations": f.trace.len(),
        "diagnostics": f.diagnostics(),
    })
}

fn fit_pretty(f: &FitReport) -> String {
    let mut s = format!("model {} (alpha = {:.4})\n", f.model.tag(), f.alpha);
    for ((n, v), e) in f.model.param_names().iter().zip(&f.params).zip(f.std_errors()) {
        s.push_str(&format!("  {n:<8} {v:>12.6} +- {e:.6}\n"));
    }
    s.push_str(&format!(
        "  chi2 {:.4} on {} dof, p = {:.4}{}\n",
        f.chi2,
        f.dof,
        f.p_value,
        if f.significant { " (significant)" } else { "" }
    ));
    for d in f.diagnostics() {
        s.push_str(&format!("  warning: {d}\n"));
    }
    s
}

fn write_residuals(ctx: &Env, name: &str, f: &FitReport, out: &mut Output) -> Result<()> {
    let p = ctx.path(name);
    let mut w = csv::Writer::from_path(&p)?;
    w.write_record(["length", "residual"])?;
    for (l, r) in f.lengths.iter().zip(&f.residuals) {
        w.write_record([l.to_string(), r.to_string()])?;
    }
    w.flush()?;
    out.artifacts.push(p);
    Ok(())
}

fn fit_cmd(ctx: &Env, data: &Path, n: usize, model: &str, protocol: Option<&str>) -> Result<Output> {
    let mut out = Output::default();
    let ds = formats::read_dataset(data, n, protocol)?;
    out.inputs.push(data.into());
    let f = fit(&ds, FitModel::from_tag(model)?)?;
    out.report = versioned(json!({ "command": "fit", "protocol": ds.protocol, "n": n, "fit": fit_json(&f) }));
    out.pretty = fit_pretty(&f);
    write_residuals(ctx, "residuals.csv", &f, &mut out)?;
    ctx.write_report("fit.json", &mut out)?;
    Ok(out)
}

/// Replicates run in parallel; each is seeded from its index, so the result
/// does not depend on the thread count.
pub fn parallel_bootstrap(ds: &cliffrb::RBDataset, model: FitModel, resamples: usize, seed: u64) -> Result<BootstrapReport> {
    let original = fit(ds, model)?;
    let master = ChaCha8Rng::seed_from_u64(seed).next_u64();
    let reps = (0..resamples).into_par_iter().map(|i| bootstrap_replicate(ds, model, master, i).ok()).collect();
    Ok(summarize_bootstrap(original, reps)?)
}

fn bootstrap_cmd(ctx: &Env, data: &Path, n: usize, model: &str, protocol: Option<&str>, resamples: usize) -> Result<Output> {
    let mut out = Output::default();
    let ds = formats::read_dataset(data, n, protocol)?;
    out.inputs.push(data.into());
    let model = FitModel::from_tag(model)?;
    let b = parallel_bootstrap(&ds, model, resamples, ctx.seed)?;
    let names = model.param_names();
    let p = ctx.path("replicates.csv");
    let mut w = csv::Writer::from_path(&p)?;
    w.write_record(std::iter::once("replicate").chain(names.iter().copied()))?;
    for (i, r) in b.replicates.iter().enumerate() {
        let mut row = vec![i.to_string()];
        match r {
            Some(v) => row.extend(v.iter().map(|x| x.to_string())),
            None => row.extend(names.iter().map(|_| String::from("NaN"))),
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    out.artifacts.push(p);
    out.report = versioned(json!({
        "command": "bootstrap",
        "protocol": ds.protocol,
        "n": n,
        "seed": ctx.seed,
        "resamples": b.n_resamples,
        "failures": b.failures,
        "original": fit_json(&b.original),
        "means": b.means,
        "bias": b.bias,
        "std_errors": b.std_errors,
        "bias_significant": b.bias_significant,
        "ellipse": { "center": b.ellipse.center, "axes": b.ellipse.axes, "angle": b.ellipse.angle },
    }));
    let mut pretty = fit_pretty(&b.original);
    pretty.push_str(&format!("bootstrap over {} resamples ({} failed)\n", b.n_resamples, b.failures));
    for (i, name) in names.iter().enumerate() {
        pretty.push_str(&format!(
            "  {name:<8} se {:.6}  bias {:+.6}{}\n",
            b.std_errors[i],
            b.bias[i],
            if b.bias_significant[i] { " (significant)" } else { "" }
        ));
    }
    out.pretty = pretty;
    ctx.write_report("bootstrap.json", &mut out)?;
    Ok(out)
}

fn interleaved_cmd(
    ctx: &Env,
    primary: &Path,
    inter: &Path,
    n: usize,
    model: &str,
    form: &str,
    one_qubit: &[f64],
) -> Result<Output> {
    let mut out = Output::default();
    let model = FitModel::from_tag(model)?;
    let a = fit(&formats::read_dataset(primary, n, Some(Protocol::Exact.tag()))?, model)?;
    let b = fit(&formats::read_dataset(inter, n, Some(Protocol::Interleaved.tag()))?, model)?;
    out.inputs.push(primary.into());
    if inter != primary {
        out.inputs.push(inter.into());
    }
    let form = match form {
        "alpha" => GateErrorForm::AlphaPrefactor,
        "inverse-alpha" => GateErrorForm::InverseAlpha,
        f => bail!("unknown gate-error form `{f}` (alpha or inverse-alpha)"),
    };
    let (g, se) = interleaved_gate_error(&a, &b, form)?;
    let mut report = json!({
        "command": "interleaved",
        "n": n,
        "primary": fit_json(&a),
        "interleaved": fit_json(&b),
        "gate_error": g,
        "gate_error_se": se,
    });
    let mut pretty = format!("primary eps_s {:.6} +- {:.6}\ninterleaved eps_s {:.6} +- {:.6}\ngate error {g:.6} +- {se:.6}\n",
        a.eps_s(), a.eps_s_se(), b.eps_s(), b.eps_s_se());
    match one_qubit {
        [] => {}
        [s1, s2] => {
            let c = consistency_check(g, *s1, *s2, ConsistencyWeights::default())?;
            report["consistency"] = json!({ "one_qubit": [s1, s2], "predicted_step_error": c, "observed_step_error": a.eps_s() });
            pretty.push_str(&format!("consistency: predicted {c:.6}, observed {:.6}\n", a.eps_s()));
        }
        _ => bail!("--one-qubit takes exactly two step errors"),
    }
    out.report = versioned(report);
    out.pretty = pretty;
    ctx.write_report("interleaved.json", &mut out)?;
    Ok(out)
}

/// The composite step distribution on the group (Pauli part then
/// computational part, optionally mixed with the identity).
fn group_step(ctx: &Env, s: &StepArgs, out: &mut Output) -> Result<GroupDistribution> {
    let group = GroupIndex::new(s.n, s.quotient)?;
    for p in [Some(&s.computational), s.pauli_part.as_ref()].into_iter().flatten() {
        if Path::new(p).is_file() {
            out.inputs.push(p.into());
        }
    }
    let comp = GroupDistribution::from_steps(group.clone(), &formats::step_distribution(&ctx.lib, &s.computational, s.n)?)?;
    let comp = if s.identity_weight > 0.0 {
        if s.identity_weight > 1.0 {
            bail!("--identity-weight must lie in [0, 1]");
        }
        let id = GroupDistribution::delta(group.clone(), &CliffordTableau::identity(s.n))?;
        let w = s.identity_weight;
        let mixed = comp.probabilities().iter().zip(id.probabilities()).map(|(a, b)| (1.0 - w) * a + w * b).collect();
        GroupDistribution::new(group.clone(), mixed)?
    } else {
        comp
    };
    match &s.pauli_part {
        None => Ok(comp),
        Some(p) => {
            let pp = GroupDistribution::from_steps(group, &formats::step_distribution(&ctx.lib, p, s.n)?)?;
            Ok(pp.then(&comp)?)
        }
    }
}

fn tv_decay(ctx: &Env, s: &StepArgs, jmax: usize) -> Result<Output> {
    let mut out = Output::default();
    let d = group_step(ctx, s, &mut out)?;
    let v = tv_series(&d, jmax)?;
    let rate = tv_decay_rate(&v, 1e-13);
    let p = ctx.path("tv.csv");
    let mut w = csv::Writer::from_path(&p)?;
    w.write_record(["j", "v"])?;
    for (j, x) in v.iter().enumerate() {
        w.write_record([(j + 1).to_string(), x.to_string()])?;
    }
    w.flush()?;
    out.artifacts.push(p);
    out.report = versioned(json!({ "command": "tv-decay", "group_size": d.group().len(), "series": v, "rate": rate }));
    let mut pretty = String::from("   j  v_j\n");
    for (j, x) in v.iter().enumerate() {
        pretty.push_str(&format!("  {:>2}  {x:.6e}\n", j + 1));
    }
    pretty.push_str(&match rate {
        Some(r) => format!("  geometric rate {r:.4}\n"),
        None => "  no geometric decay fit\n".into(),
    });
    out.pretty = pretty;
    ctx.write_report("tv-decay.json", &mut out)?;
    Ok(out)
}

fn bounds_lp(ctx: &Env, a: &LpArgs) -> Result<Output> {
    let mut out = Output::default();
    let d = group_step(ctx, &a.step, &mut out)?;
    let alpha = cliffrb::analysis::alpha(a.step.n);
    let mut rows = Vec::new();
    let mut pretty = String::from("  k  delta_max  delta_min\n");
    for &k in &a.k {
        let (hi, lo) = step_comparison_bound(&d, a.eps, alpha, k)?;
        rows.push(json!({ "k": k, "delta_max": hi, "delta_min": lo }));
        pretty.push_str(&format!("  {k}  {hi:.6e}  {lo:.6e}\n"));
    }
    out.report = versioned(json!({ "command": "bounds lp", "eps": a.eps, "alpha": alpha, "rows": rows }));
    out.pretty = pretty;
    ctx.write_report("bounds-lp.json", &mut out)?;
    Ok(out)
}

fn bounds_kappa(ctx: &Env, seq_path: &Path, e: f64, measure: Option<&str>) -> Result<Output> {
    let mut out = Output::default();
    let file = SequenceFile::read(seq_path)?;
    out.inputs.push(seq_path.into());
    let mut seqs = file.decode()?;
    let n = file.n_qubits;
    let lengths: Vec<usize> = {
        let mut l: Vec<usize> = seqs.iter().map(|s| s.length).collect();
        l.dedup();
        l
    };
    let [l] = lengths.as_slice() else {
        bail!("kappa bounds need sequences of a single length, found {lengths:?}");
    };
    let gate = match &file.interleaved_gate {
        Some(g) => {
            for s in &mut seqs {
                s.steps = s.steps.iter().step_by(2).cloned().collect();
            }
            Some(formats::tableau_from_strings(g)?)
        }
        None => None,
    };
    let group = GroupIndex::new(n, false)?;
    let pp = remaining_aggregates(Arc::clone(&group), &seqs, gate.as_ref())?;
    let m: PauliOperator = match measure {
        Some(s) => s.parse()?,
        None => cliffrb::bounds::default_measurement(n),
    };
    let r = kappa_bounds(&pp, e, &m)?;
    let (lo, hi) = r.deviation_interval();
    out.report = versioned(json!({
        "command": "bounds kappa",
        "length": l,
        "e": e,
        "measured": m.to_string(),
        "kappa_max": r.kappa_max,
        "kappa_min": r.kappa_min,
        "deviation_interval": [lo, hi],
        "r_max": r.r_max.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
        "r_min": r.r_min.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
        "detect_max": r.detect_max,
        "detect_min": r.detect_min,
        "caveat": r.caveat,
    }));
    let mut pretty = format!("kappa_max {:.6e}, kappa_min {:.6e}\ntrue minus inferred strength in [{lo:.6e}, {hi:.6e}]\n", r.kappa_max, r.kappa_min);
    if let Some(c) = &r.caveat {
        pretty.push_str(&format!("warning: {c}\n"));
    }
    out.pretty = pretty;
    ctx.write_report("bounds-kappa.json", &mut out)?;
    Ok(out)
}
