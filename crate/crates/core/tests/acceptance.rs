//! One PASS/FAIL line per acceptance criterion. Set `CLIFFRB_LONG=1` to add
//! the three-qubit enumeration and CX-count checks.

mod common;

use std::collections::{BTreeMap, HashMap};
use std::time::{Duration, Instant};

use cliffrb::analysis::{alpha, chi2_cdf, chi2_quantile, chi2_sf, fit_stats, ConsistencyWeights, LengthStat};
use cliffrb::bounds::{default_measurement, remaining_aggregates, tv_decay_rate, tv_series};
use cliffrb::decomp::block_gate_bound;
use cliffrb::dense::{
    depolarization_strength, group_twirl, pauli_matrix, pauli_rotation, DenseSuperoperator,
    TwirlGroup,
};
use cliffrb::error_sim::{Readout, SimSequence, SimStep};
use cliffrb::gf2n::{q_subgroup, t_subgroup, FieldContext};
use cliffrb::group::sample_choice_counts;
use cliffrb::rb::INTERLEAVED_LABEL;
use cliffrb::{
    block_decompose, bootstrap, cayley_search, consistency_check, embed_depolarizing,
    enumerate_group, expected_sequence_fidelity, gen_approximate_sequence, group_order, interleaved_gate_error,
    kappa_bounds, run_experiment, sample_uniform, step_comparison_bound, ChannelSpec, CliffordTableau, ErrorModel,
    ExperimentDesign, FitModel, GateErrorForm, GateLibrary, GateSet, GroupDistribution, GroupIndex, PauliChannel,
    PauliOperator, ProtocolSpec, StepDistribution,
};
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn long_mode() -> bool {
    std::env::var_os("CLIFFRB_LONG").is_some()
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit_s: u64, what: &str) -> Result<(), String> {
    ensure(elapsed.as_secs() < limit_s, format!("{what} took {:.1}s, limit {limit_s}s", elapsed.as_secs_f64()))
}

fn c1_group_sizes() -> Outcome {
    let t = Instant::now();
    for (n, q, want) in [(1, false, 24u64), (1, true, 6), (2, false, 11520), (2, true, 720)] {
        ensure(group_order(n, q) == BigUint::from(want), format!("group_order({n}, {q})"))?;
        let got = enumerate_group(n, q).map_err(|e| e.to_string())?.len() as u64;
        ensure(got == want, format!("enumerate_group({n}, {q}) gave {got}, want {want}"))?;
    }
    within(t.elapsed(), 60, "n <= 2 enumeration")?;
    ensure(group_order(3, true) == BigUint::from(1451520u64), "group_order(3, quotient)")?;
    if !long_mode() {
        return Ok("24/6, 11520/720, 1451520 (order only; n=3 enumeration needs CLIFFRB_LONG)".into());
    }
    let t = Instant::now();
    let got = enumerate_group(3, true).map_err(|e| e.to_string())?.len();
    ensure(got == 1451520, format!("enumerate_group(3, quotient) gave {got}"))?;
    within(t.elapsed(), 600, "n = 3 enumeration")?;
    Ok(format!("24/6, 11520/720, 1451520 (n=3 enumerated in {:.1}s)", t.elapsed().as_secs_f64()))
}

fn c2_cx_table() -> Outcome {
    let lib = GateLibrary::builtin();
    let gs = GateSet::standard();
    let t2 = cayley_search(&lib, &gs, 2, true).map_err(|e| e.to_string())?;
    let want: BTreeMap<u32, u64> = [(0, 36), (1, 324), (2, 324), (3, 36)].into_iter().collect();
    ensure(t2.histogram() == want, format!("n=2 histogram {:?}", t2.histogram()))?;
    ensure(t2.mean_primary() == 1.5, format!("n=2 mean {}", t2.mean_primary()))?;
    let t1 = cayley_search(&lib, &gs, 1, true).map_err(|e| e.to_string())?;
    ensure(t1.histogram() == [(0, 6)].into_iter().collect(), format!("n=1 histogram {:?}", t1.histogram()))?;
    if !long_mode() {
        return Ok("n=2 {36,324,324,36} mean 1.5; n=1 6 at 0 CX (n=3 row needs CLIFFRB_LONG)".into());
    }
    let t3 = cayley_search(&lib, &gs, 3, true).map_err(|e| e.to_string())?;
    let want3: BTreeMap<u32, u64> =
        [(0, 216), (1, 5832), (2, 93312), (3, 601344), (4, 657012), (5, 93312), (6, 432)].into_iter().collect();
    ensure((t3.mean_primary() - 3.51).abs() < 0.01, format!("n=3 mean {}", t3.mean_primary()))?;
    ensure(t3.histogram() == want3, format!("n=3 histogram {:?}", t3.histogram()))?;
    Ok("n=2, n=1 and n=3 rows reproduced".into())
}

fn c3_block_decomposition() -> Outcome {
    let lib = GateLibrary::builtin();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let t = Instant::now();
    let mut worst = Vec::new();
    for n in 1..=6 {
        let mut max_len = 0;
        for _ in 0..1000 {
            let c = sample_uniform(n, &mut rng);
            let seq = block_decompose(&lib, &c, true);
            let back = seq.to_tableau(&lib).map_err(|e| e.to_string())?;
            ensure(back == c, format!("n={n}: round trip failed"))?;
            ensure(seq.len() <= block_gate_bound(n), format!("n={n}: {} gates > bound {}", seq.len(), block_gate_bound(n)))?;
            max_len = max_len.max(seq.len());
        }
        worst.push(format!("{max_len}/{}", block_gate_bound(n)));
    }
    within(t.elapsed(), 120, "6000 decompositions")?;
    Ok(format!("6000/6000 round trips; max gates vs bound 2n^2+9n: {}; {:.1}s", worst.join(" "), t.elapsed().as_secs_f64()))
}

fn c4_uniform_sampling() -> Outcome {
    let g = enumerate_group(1, false).map_err(|e| e.to_string())?;
    let idx: HashMap<_, _> = g.iter().enumerate().map(|(i, t)| (t.key(false), i)).collect();
    let mut counts = [0u32; 24];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..24000 {
        counts[idx[&sample_uniform(1, &mut rng).key(false)]] += 1;
    }
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - 1000.0).powi(2) / 1000.0).sum();
    let p = chi2_sf(chi2, 23);
    ensure(p > 0.001, format!("chi2 {chi2:.2}, p = {p:.2e}"))?;
    for n in 1..=8 {
        let prod = sample_choice_counts(n).into_iter().fold(BigUint::from(1u32), |acc, (a, b)| acc * a * b);
        ensure(prod == group_order(n, false), format!("choice-count product differs at n={n}"))?;
    }
    Ok(format!("chi2 = {chi2:.2} (23 dof, p = {p:.3}); choice products exact for n=1..8"))
}

fn c5_twirls() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for n in 1..=2 {
        let group = enumerate_group(n, false).map_err(|e| e.to_string())?;
        let d2 = (1u64 << (2 * n)) as f64;
        for trial in 0..20 {
            let s = common::random_channel(n, 1 + trial % 3, &mut rng);
            let p = (d2 - s.superoperator_trace()) / (d2 - 1.0);
            let tw = group_twirl(&s, TwirlGroup::Cliffords(&group)).map_err(|e| e.to_string())?;
            let dist = tw.distance(&DenseSuperoperator::depolarizing(n, p).map_err(|e| e.to_string())?);
            let off = group_twirl(&s, TwirlGroup::Pauli).map_err(|e| e.to_string())?.off_diagonal_norm();
            worst = worst.max(dist).max(off);
        }
    }
    ensure(worst < 1e-9, format!("Clifford/Pauli twirl residual {worst:.2e}"))?;
    let q2 = q_subgroup(&FieldContext::new(2).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    ensure(q2.len() == 60, format!("|Q2| = {}", q2.len()))?;
    let t = t_subgroup();
    let c1 = enumerate_group(1, false).map_err(|e| e.to_string())?;
    let c2 = enumerate_group(2, false).map_err(|e| e.to_string())?;
    let mut sub_worst: f64 = 0.0;
    for _ in 0..10 {
        for (n, sub, full) in [(1, &t, &c1), (2, &q2, &c2)] {
            let s = common::random_channel(n, 2, &mut rng);
            let a = group_twirl(&s, TwirlGroup::Cliffords(full)).map_err(|e| e.to_string())?;
            let pt = group_twirl(&s, TwirlGroup::Pauli).map_err(|e| e.to_string())?;
            let b = group_twirl(&pt, TwirlGroup::Cliffords(sub)).map_err(|e| e.to_string())?;
            sub_worst = sub_worst.max(a.distance(&b));
        }
    }
    ensure(sub_worst < 1e-9, format!("subgroup twirl residual {sub_worst:.2e}"))?;
    Ok(format!("40 channels depolarized (max residual {worst:.1e}); T and Q2 (60) twirls match ({sub_worst:.1e})"))
}

fn c6_over_rotation() -> Outcome {
    let x = PauliOperator::single(1, 0, cliffrb::Letter::X);
    let mut worst: f64 = 0.0;
    for k in 1..=50 {
        let theta = 0.01 * k as f64;
        let s = DenseSuperoperator::from_unitary(&pauli_rotation(&x, theta)).map_err(|e| e.to_string())?;
        let p = depolarization_strength(&s).map_err(|e| e.to_string())?;
        let exact = 4.0 / 3.0 * theta.sin().powi(2);
        worst = worst.max((p - exact).abs());
        ensure((p - 4.0 / 3.0 * theta * theta).abs() <= theta.powi(4), format!("small-angle form off at {theta}"))?;
    }
    ensure(worst < 1e-10, format!("max deviation {worst:.2e}"))?;
    let full = DenseSuperoperator::from_unitary(&pauli_matrix(&x)).map_err(|e| e.to_string())?;
    ensure((depolarization_strength(&full).map_err(|e| e.to_string())? - 4.0 / 3.0).abs() < 1e-12, "X gate strength")?;
    Ok(format!("(4/3)sin^2(theta) to {worst:.1e} over theta = 0.01..0.5"))
}

fn c7_fit_recovery() -> Outcome {
    let lib = GateLibrary::builtin();
    let (p, pm) = (0.04, 0.05);
    let a = alpha(1);
    let truth = a * p;
    let lengths = vec![1, 3, 8, 21, 55, 144];
    let spec = ProtocolSpec::Exact { n_qubits: 1 };
    let model = ErrorModel::depolarizing(p, pm);
    let t = Instant::now();
    let mut worst_analytic: f64 = 0.0;
    let trials = 100;
    let results: Vec<Result<(bool, f64), String>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..trials)
            .map(|trial| {
                let (lib, lengths, spec, model) = (&lib, &lengths, &spec, &model);
                scope.spawn(move || -> Result<(bool, f64), String> {
                    let design = ExperimentDesign::new(lengths.clone(), 100, 100, 7000 + trial).map_err(|e| e.to_string())?;
                    let ds = run_experiment(lib, &design, spec, model).map_err(|e| e.to_string())?;
                    let mut dev: f64 = 0.0;
                    for r in &ds.records {
                        let f = (1.0 - a) + a * (1.0 - pm) * (1.0 - p).powi(r.length as i32);
                        dev = dev.max((r.expected.unwrap_or(f64::NAN) - f).abs());
                    }
                    let mut rng = ChaCha8Rng::seed_from_u64(trial);
                    let b = bootstrap(&ds, FitModel::Main, 1000, &mut rng).map_err(|e| e.to_string())?;
                    Ok(((b.original.eps_s() - truth).abs() <= 3.0 * b.eps_s_se(), dev))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Err("trial panicked".into()))).collect()
    });
    let mut hits = 0;
    for r in results {
        let (hit, dev) = r?;
        hits += hit as usize;
        worst_analytic = worst_analytic.max(dev);
    }
    ensure(worst_analytic < 1e-12, format!("analytic fidelities off by {worst_analytic:.2e}"))?;
    ensure(hits * 100 >= 95 * trials as usize, format!("{hits}/{trials} trials within 3 bootstrap SE"))?;
    within(t.elapsed(), 300, "fit recovery")?;
    Ok(format!(
        "{hits}/{trials} within 3 bootstrap SE of 0.02; analytic match {worst_analytic:.1e}; {:.1}s",
        t.elapsed().as_secs_f64()
    ))
}

fn c8_interleaved() -> Outcome {
    let (g, _) = cliffrb::analysis::gate_error_from(0.162, 0.0, 0.216, 0.0, 0.75, GateErrorForm::AlphaPrefactor)
        .map_err(|e| e.to_string())?;
    ensure((g - 0.069).abs() < 0.001, format!("eps_G = {g}"))?;
    let lib = GateLibrary::builtin();
    let (p, pg) = (0.02, 0.01);
    let design = ExperimentDesign::new(vec![1, 2, 4, 8, 16, 32, 64], 1, 1, 8).map_err(|e| e.to_string())?;
    let model = ErrorModel::depolarizing(p, 0.03).with_gate(INTERLEAVED_LABEL, ChannelSpec::Depolarizing(pg));
    let exact_fit = |spec: &ProtocolSpec| -> Result<cliffrb::FitReport, String> {
        let ds = run_experiment(&lib, &design, spec, &model).map_err(|e| e.to_string())?;
        let stats: Vec<LengthStat> = ds
            .records
            .iter()
            .map(|r| LengthStat { length: r.length, n_sequences: 1, mean: r.expected.unwrap(), var_of_mean: None })
            .collect();
        fit_stats(&stats, alpha(2), FitModel::Main).map_err(|e| e.to_string())
    };
    let cx = lib.get("CX").map_err(|e| e.to_string())?.tableau.clone();
    let prim = exact_fit(&ProtocolSpec::Exact { n_qubits: 2 })?;
    let inter = exact_fit(&ProtocolSpec::Interleaved { gate: cx })?;
    let (planted, _) = interleaved_gate_error(&prim, &inter, GateErrorForm::AlphaPrefactor).map_err(|e| e.to_string())?;
    let want = alpha(2) * pg;
    ensure((planted - want).abs() < 1e-9, format!("planted {want}, recovered {planted}"))?;
    Ok(format!("eps_G = {g:.4} from (0.162, 0.216); planted {want} recovered as {planted:.10}"))
}

const CHI2_95: [f64; 20] = [
    3.841459, 5.991465, 7.814728, 9.487729, 11.070498, 12.591587, 14.067140, 15.507313, 16.918978, 18.307038,
    19.675138, 21.026070, 22.362032, 23.684791, 24.995790, 26.296228, 27.587112, 28.869299, 30.143527, 31.410433,
];

fn c9_chi2() -> Outcome {
    let c928 = chi2_cdf(9.28, 4);
    let c948 = chi2_cdf(9.48, 4);
    ensure(c928 < 0.95 && c948 < 0.95, format!("cdf(9.28) = {c928}, cdf(9.48) = {c948}"))?;
    let crit = chi2_quantile(0.95, 4);
    ensure((crit - 9.48).abs() < 0.01, format!("critical value {crit}"))?;
    let mut worst: f64 = 0.0;
    for (i, &c) in CHI2_95.iter().enumerate() {
        worst = worst.max((chi2_quantile(0.95, i + 1) - c).abs());
    }
    ensure(worst < 1e-4, format!("table deviation {worst:.2e}"))?;
    Ok(format!("cdf(9.28) = {c928:.4}, cdf(9.48) = {c948:.4}, critical {crit:.4}; table max deviation {worst:.1e}"))
}

fn c10_embedding() -> Outcome {
    let (s, f) = embed_depolarizing(1.0, 1, 2).map_err(|e| e.to_string())?;
    ensure(s == 0.8 && (f - 1.2).abs() < 1e-15, format!("factors {s}, {f}"))?;
    let mut worst: f64 = 0.0;
    for pk in [0.01, 0.1, 0.5, 1.0] {
        let d = DenseSuperoperator::depolarizing(1, pk).map_err(|e| e.to_string())?;
        let t = d.tensor(&DenseSuperoperator::identity(1).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let got = depolarization_strength(&t).map_err(|e| e.to_string())?;
        worst = worst.max((got - embed_depolarizing(pk, 1, 2).map_err(|e| e.to_string())?.0).abs());
    }
    ensure(worst < 1e-10, format!("dense cross-check off by {worst:.2e}"))?;
    let v = consistency_check(0.069, 0.010, 0.007, ConsistencyWeights::default()).map_err(|e| e.to_string())?;
    ensure((v - 0.136).abs() < 0.01, format!("consistency {v}"))?;
    Ok(format!("strength 4/5, eps factor 6/5, dense match {worst:.1e}; consistency {v:.4}"))
}

fn knill_group_step(lib: &GateLibrary, g: &std::sync::Arc<GroupIndex>, id_weight: f64) -> Result<GroupDistribution, String> {
    let (paulis, comp) = StepDistribution::knill_1q(lib).map_err(|e| e.to_string())?;
    let p = GroupDistribution::from_steps(g.clone(), &paulis).map_err(|e| e.to_string())?;
    let c = GroupDistribution::from_steps(g.clone(), &comp).map_err(|e| e.to_string())?;
    let id = GroupDistribution::delta(g.clone(), &CliffordTableau::identity(1)).map_err(|e| e.to_string())?;
    let mixed = c.probabilities().iter().zip(id.probabilities()).map(|(a, b)| (1.0 - id_weight) * a + id_weight * b).collect();
    let c = GroupDistribution::new(g.clone(), mixed).map_err(|e| e.to_string())?;
    p.then(&c).map_err(|e| e.to_string())
}

fn c11_total_variation() -> Outcome {
    let lib = GateLibrary::builtin();
    let g = GroupIndex::new(1, false).map_err(|e| e.to_string())?;
    let v = tv_series(&knill_group_step(&lib, &g, 0.0)?, 20).map_err(|e| e.to_string())?;
    let vmin = v.iter().cloned().fold(f64::INFINITY, f64::min);
    ensure(vmin > 0.4, format!("Knill v_j dips to {vmin}"))?;
    let w = tv_series(&knill_group_step(&lib, &g, 0.2)?, 20).map_err(|e| e.to_string())?;
    let rate = tv_decay_rate(&w, 1e-13).ok_or("no decay rate")?;
    ensure(rate < 0.9 && w[19] < 1e-3 * w[0], format!("identity-weighted chain: rate {rate}, v_20 = {}", w[19]))?;
    Ok(format!("Knill min v_j = {vmin:.3} for j <= 20; with identity weight 0.2 v_j ~ {rate:.3}^j (v_20 = {:.1e})", w[19]))
}

fn c12_bounds() -> Outcome {
    let lib = GateLibrary::builtin();
    let g6 = GroupIndex::new(1, true).map_err(|e| e.to_string())?;
    let (hi, lo) = step_comparison_bound(&GroupDistribution::uniform(g6.clone()), 0.01, alpha(1), 1).map_err(|e| e.to_string())?;
    ensure(hi == 0.0 && lo == 0.0, format!("uniform bound ({hi}, {lo})"))?;

    // toy case against a 10-point lattice
    let probs = vec![0.3, 0.25, 0.2, 0.15, 0.1, 0.0];
    let d = GroupDistribution::new(g6.clone(), probs.clone()).map_err(|e| e.to_string())?;
    let (a1, eps) = (alpha(1), 0.02);
    let (hi, lo) = step_comparison_bound(&d, eps, a1, 1).map_err(|e| e.to_string())?;
    let u = 4.0 / 3.0;
    let c: Vec<f64> = probs.iter().map(|p| a1 * (1.0 / 6.0 - p)).collect();
    let step = u / 9.0;
    let (mut bh, mut bl) = (f64::NEG_INFINITY, f64::INFINITY);
    for idx in 0..100_000usize {
        let mut s = [0.0; 6];
        let mut r = idx;
        for v in s.iter_mut().skip(1) {
            *v = (r % 10) as f64 * step;
            r /= 10;
        }
        s[0] = (eps / a1 - (1..6).map(|i| probs[i] * s[i]).sum::<f64>()) / probs[0];
        if (0.0..=u).contains(&s[0]) {
            let v: f64 = (0..6).map(|i| c[i] * s[i]).sum();
            bh = bh.max(v);
            bl = bl.min(v);
        }
    }
    let res = step * c.iter().map(|x| x.abs()).sum::<f64>();
    ensure(bh <= hi + 1e-12 && hi - bh <= res && bl >= lo - 1e-12 && bl - lo <= res, format!("LP ({hi}, {lo}) vs lattice ({bh}, {bl})"))?;
    let (hi3, _) = step_comparison_bound(&d, eps, a1, 3).map_err(|e| e.to_string())?;
    ensure(hi3 < hi, "k=3 bound not tighter")?;

    // exact twirl
    let g = GroupIndex::new(1, false).map_err(|e| e.to_string())?;
    let uni = vec![GroupDistribution::uniform(g.clone()); 4];
    let k = kappa_bounds(&uni, 0.01, &default_measurement(1)).map_err(|e| e.to_string())?;
    ensure(k.kappa_max.abs() < 1e-12 && k.kappa_min.abs() < 1e-12, format!("exact-twirl kappa {k:?}"))?;

    // adversarial channel on a Knill-style experiment
    let (paulis, comp) = StepDistribution::knill_1q(&lib).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (l, gamma) = (3, 1e-4);
    let seqs: Vec<_> = (0..1500)
        .map(|_| gen_approximate_sequence(&lib, &paulis, &comp, l, &mut rng))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let id = CliffordTableau::identity(1);
    let pp = remaining_aggregates(g.clone(), &seqs, Some(&id)).map_err(|e| e.to_string())?;
    let r = kappa_bounds(&pp, 0.0, &default_measurement(1)).map_err(|e| e.to_string())?.r_max[0].clone();
    let ch = PauliChannel::from_error_weights(1, [(r, gamma)]).map_err(|e| e.to_string())?;
    let model = ErrorModel::noiseless().with_gate("G", ChannelSpec::Pauli(ch));
    let mut total = 0.0;
    for s in &seqs {
        let mut steps = Vec::new();
        for c in &s.steps {
            steps.push(SimStep::clifford(c.clone(), None).silent());
            steps.push(SimStep::clifford(id.clone(), Some("G")));
        }
        steps.push(SimStep::clifford(s.inversion.clone(), None).silent());
        let sim = SimSequence { n_qubits: 1, steps, readout: Readout::Parity(s.measured.clone()) };
        total += expected_sequence_fidelity(&sim, &model, &lib).map_err(|e| e.to_string())?;
    }
    let e = 1.0 - total / seqs.len() as f64;
    let rep = kappa_bounds(&pp, e, &default_measurement(1)).map_err(|e| e.to_string())?;
    let dev = u * gamma - 2.0 * e / l as f64;
    let (klo, khi) = rep.deviation_interval();
    let slack = 4.0 * (l as f64 * gamma).powi(2);
    ensure(dev >= klo - slack && dev <= khi + slack, format!("deviation {dev:.3e} outside [{klo:.3e}, {khi:.3e}]"))?;
    Ok(format!(
        "uniform (0, 0); toy LP ({hi:.4}, {lo:.4}) vs lattice ({bh:.4}, {bl:.4}); exact-twirl kappa 0; \
         adversarial deviation {dev:.2e} in [{klo:.2e}, {khi:.2e}]"
    ))
}

fn c13_stabilizer_vs_dense() -> Outcome {
    let lib = GateLibrary::builtin();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let shots = 10_000u32;
    let (mut cells, mut exceed, mut det_checked) = (0usize, 0usize, 0usize);
    for _ in 0..200 {
        let n = rng.random_range(1..=3);
        let c = common::random_circuit(n, 30, &mut rng);
        let exact = common::dense_outcomes(&c, &lib);
        let mut counts: BTreeMap<Vec<bool>, u32> = BTreeMap::new();
        for _ in 0..shots {
            let (rec, _) = c.run(&lib, &mut rng).map_err(|e| e.to_string())?;
            let bits: Vec<bool> = rec.iter().map(|m| m.bit).collect();
            // a measurement flagged deterministic must have conditional probability 1
            for (i, m) in rec.iter().enumerate().filter(|(_, m)| m.deterministic) {
                let prefix = &bits[..i];
                let mass = |pred: &dyn Fn(&Vec<bool>) -> bool| exact.iter().filter(|(k, _)| pred(k)).map(|(_, v)| v).sum::<f64>();
                let pre = mass(&|k| k.starts_with(prefix));
                let with = mass(&|k| k.starts_with(prefix) && k[i] == m.bit);
                ensure((with - pre).abs() < 1e-9, format!("deterministic outcome {i} disagrees with the dense oracle"))?;
                det_checked += 1;
            }
            *counts.entry(bits).or_default() += 1;
        }
        for (k, pr) in &exact {
            let got = *counts.get(k).unwrap_or(&0) as f64 / shots as f64;
            let sd = (pr * (1.0 - pr) / shots as f64).sqrt();
            cells += 1;
            if (got - pr).abs() > 3.0 * sd + 1e-12 {
                exceed += 1;
            }
        }
        for k in counts.keys() {
            ensure(exact.contains_key(k), format!("impossible outcome {k:?}"))?;
        }
    }
    // two-sided 3σ exceedance probability
    let q = 0.0027;
    let allowed = cells as f64 * q + 3.0 * (cells as f64 * q * (1.0 - q)).sqrt();
    ensure(exceed as f64 <= allowed, format!("{exceed} of {cells} cells beyond 3 sigma (allowed {allowed:.1})"))?;
    Ok(format!("{det_checked} deterministic outcomes exact; {exceed}/{cells} outcome cells beyond 3 sigma (allowed {allowed:.1})"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("group sizes", c1_group_sizes),
        ("CX-count table", c2_cx_table),
        ("block decomposition", c3_block_decomposition),
        ("uniform sampling", c4_uniform_sampling),
        ("twirl equivalences", c5_twirls),
        ("over-rotation depolarization", c6_over_rotation),
        ("RB fit recovery", c7_fit_recovery),
        ("interleaved extraction", c8_interleaved),
        ("chi-square calibration", c9_chi2),
        ("depolarizing embedding", c10_embedding),
        ("total variation", c11_total_variation),
        ("LP and kappa bounds", c12_bounds),
        ("stabilizer vs dense", c13_stabilizer_vs_dense),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let res = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match res {
            Ok(msg) => println!("criterion {:>2} PASS [{name}] {msg} ({secs:.1}s)", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL [{name}] {msg} ({secs:.1}s)", i + 1);
            }
        }
    }
    println!("{} of 13 criteria passed", 13 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
