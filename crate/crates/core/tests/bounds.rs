use std::sync::Arc;

use cliffrb::analysis::alpha;
use cliffrb::bounds::{
    box_lp_max, default_measurement, remaining_aggregates, tv_decay_rate, tv_series, undetected_probabilities,
    undetected_set,
};
use cliffrb::error_sim::{Readout, SimSequence, SimStep};
use cliffrb::{
    convolve_steps, expected_sequence_fidelity, gen_approximate_sequence, kappa_bounds, step_comparison_bound,
    total_variation, ChannelSpec, CliffordTableau, ErrorModel, GateLibrary, GroupDistribution, GroupIndex,
    PauliChannel, PauliOperator, StepDistribution,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn knill_step(lib: &GateLibrary, group: &Arc<GroupIndex>, identity_weight: f64) -> GroupDistribution {
    let (paulis, comp) = StepDistribution::knill_1q(lib).unwrap();
    let p = GroupDistribution::from_steps(group.clone(), &paulis).unwrap();
    let mut c = GroupDistribution::from_steps(group.clone(), &comp).unwrap();
    if identity_weight > 0.0 {
        let id = GroupDistribution::delta(group.clone(), &CliffordTableau::identity(1)).unwrap();
        let probs = c
            .probabilities()
            .iter()
            .zip(id.probabilities())
            .map(|(a, b)| (1.0 - identity_weight) * a + identity_weight * b)
            .collect();
        c = GroupDistribution::new(group.clone(), probs).unwrap();
    }
    p.then(&c).unwrap()
}

fn random_distribution(group: &Arc<GroupIndex>, zeros: usize, rng: &mut ChaCha8Rng) -> GroupDistribution {
    let m = group.len();
    let mut w: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
    for i in 0..zeros {
        w[i] = 0.0;
    }
    let s: f64 = w.iter().sum();
    GroupDistribution::new(group.clone(), w.into_iter().map(|x| x / s).collect()).unwrap()
}

#[test]
fn convolution_examples() {
    let lib = GateLibrary::builtin();
    for (n, quotient) in [(1, false), (1, true), (2, true)] {
        let g = GroupIndex::new(n, quotient).unwrap();
        let u = GroupDistribution::uniform(g.clone());
        assert!(total_variation(&u) < 1e-15);
        assert!(total_variation(&convolve_steps(&u, 3).unwrap()) < 1e-12);
        let id = GroupDistribution::delta(g.clone(), &CliffordTableau::identity(n)).unwrap();
        assert_eq!(convolve_steps(&id, 4).unwrap(), id);
        assert!((total_variation(&id) - (1.0 - 1.0 / g.len() as f64)).abs() < 1e-12);
    }
    let g = GroupIndex::new(1, false).unwrap();
    let k = knill_step(&lib, &g, 0.0);
    assert_eq!(convolve_steps(&k, 1).unwrap(), k);
    assert!(convolve_steps(&k, 0).is_err());
    assert!(GroupIndex::new(3, true).is_err());
}

#[test]
fn knill_steps_are_periodic() {
    let lib = GateLibrary::builtin();
    let g = GroupIndex::new(1, false).unwrap();
    let v = tv_series(&knill_step(&lib, &g, 0.0), 20).unwrap();
    assert!(v.iter().all(|&x| x > 0.4), "{v:?}");
    let w = tv_series(&knill_step(&lib, &g, 0.2), 20).unwrap();
    let rate = tv_decay_rate(&w, 1e-13).unwrap();
    assert!(rate > 0.0 && rate < 0.9, "rate {rate}");
    assert!(w[19] < 1e-2 * w[0]);
    // geometric: two-step ratios settle at the square of the fitted rate
    let ratios: Vec<f64> = w.windows(3).skip(8).map(|p| p[2] / p[0]).collect();
    assert!(ratios.iter().all(|r| (r - rate * rate).abs() < 0.05), "{ratios:?} vs {rate}");
}

#[test]
fn uniform_steps_need_no_correction() {
    for n in 1..=2 {
        let g = GroupIndex::new(n, true).unwrap();
        let (hi, lo) = step_comparison_bound(&GroupDistribution::uniform(g), 0.01, alpha(n), 1).unwrap();
        assert!(hi.abs() < 1e-15 && lo.abs() < 1e-15);
    }
}

/// Maximum over all vertices of `{a·s = b, 0 ≤ s ≤ u}`.
fn vertex_max(c: &[f64], a: &[f64], b: f64, u: f64) -> f64 {
    let m = c.len();
    let mut best = f64::NEG_INFINITY;
    for free in 0..m {
        for mask in 0..1u32 << m {
            if mask >> free & 1 == 1 {
                continue;
            }
            let mut s: Vec<f64> = (0..m).map(|i| if mask >> i & 1 == 1 { u } else { 0.0 }).collect();
            let used: f64 = (0..m).map(|i| a[i] * s[i]).sum();
            let rest = b - used;
            if a[free] == 0.0 {
                if rest.abs() > 1e-12 {
                    continue;
                }
            } else {
                let x = rest / a[free];
                if !(-1e-12..=u + 1e-12).contains(&x) {
                    continue;
                }
                s[free] = x;
            }
            best = best.max((0..m).map(|i| c[i] * s[i]).sum());
        }
    }
    best
}

#[test]
fn lp_matches_vertex_enumeration() {
    let g = GroupIndex::new(1, true).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let u = 4.0 / 3.0;
    for trial in 0..40 {
        let d = random_distribution(&g, trial % 3, &mut rng);
        let a = d.probabilities().to_vec();
        let c: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = rng.random_range(0.0..1.0);
        let (v, s) = box_lp_max(&c, &a, b, u).unwrap();
        assert!((a.iter().zip(&s).map(|(x, y)| x * y).sum::<f64>() - b).abs() < 1e-12);
        assert!((v - vertex_max(&c, &a, b, u)).abs() < 1e-12);
    }
    assert!(box_lp_max(&[1.0], &[0.5], 1.0, 1.0).is_err());
}

#[test]
fn toy_bound_against_lattice_search() {
    let g = GroupIndex::new(1, true).unwrap();
    // omits the last coset entirely
    let probs = vec![0.3, 0.25, 0.2, 0.15, 0.1, 0.0];
    let d = GroupDistribution::new(g.clone(), probs.clone()).unwrap();
    let (a1, eps) = (alpha(1), 0.02);
    let (hi, lo) = step_comparison_bound(&d, eps, a1, 1).unwrap();
    let u = 4.0 / 3.0;
    // the unconstrained element contributes its full weight
    assert!(hi >= a1 * u / 6.0);

    let b = eps / a1;
    let c: Vec<f64> = probs.iter().map(|p| a1 * (1.0 / 6.0 - p)).collect();
    let step = u / 9.0;
    let (mut best_hi, mut best_lo) = (f64::NEG_INFINITY, f64::INFINITY);
    // lattice over s_1..s_5 and s_6, solving s_0 from the constraint
    for idx in 0..10usize.pow(5) {
        let mut s = [0.0; 6];
        let mut r = idx;
        for i in 1..5 {
            s[i] = (r % 10) as f64 * step;
            r /= 10;
        }
        s[5] = (r % 10) as f64 * step;
        let rest = b - (1..5).map(|i| probs[i] * s[i]).sum::<f64>();
        s[0] = rest / probs[0];
        if !(0.0..=u).contains(&s[0]) {
            continue;
        }
        let v: f64 = (0..6).map(|i| c[i] * s[i]).sum();
        best_hi = best_hi.max(v);
        best_lo = best_lo.min(v);
    }
    let resolution = step * c.iter().map(|x| x.abs()).sum::<f64>();
    assert!(best_hi <= hi + 1e-12 && hi - best_hi <= resolution, "{hi} vs {best_hi}");
    assert!(best_lo >= lo - 1e-12 && best_lo - lo <= resolution, "{lo} vs {best_lo}");

    // once the aggregate has full support the bound tightens
    let pk = convolve_steps(&d, 3).unwrap();
    assert!(pk.probabilities().iter().all(|&p| p > 0.0));
    let (hi3, _) = step_comparison_bound(&d, eps, a1, 3).unwrap();
    assert!(hi3 < hi, "{hi3} vs {hi}");
    assert!(step_comparison_bound(&d, -0.01, a1, 1).is_err());
}

#[test]
fn undetected_sets_have_fixed_size() {
    let z = default_measurement(2);
    for c in GroupIndex::new(2, true).unwrap().elements().iter().step_by(37) {
        assert_eq!(undetected_set(c, &z).unwrap().len(), 16 / 2 - 1);
    }
    let g = GroupIndex::new(1, false).unwrap();
    let q = undetected_probabilities(&GroupDistribution::uniform(g), &default_measurement(1)).unwrap();
    assert!(q.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-12));
}

#[test]
fn exact_twirl_gives_zero_kappa() {
    for n in 1..=2 {
        let g = GroupIndex::new(n, true).unwrap();
        let d2 = (1u64 << (2 * n)) as f64;
        let pp = vec![GroupDistribution::uniform(g); 3];
        for e in [0.001, 0.01, 0.05] {
            let r = kappa_bounds(&pp, e, &default_measurement(n)).unwrap();
            assert!(r.kappa_max.abs() < 1e-12 && r.kappa_min.abs() < 1e-12, "n={n}: {r:?}");
            assert!(r.detect_max.iter().all(|x| (x - d2 / (2.0 * (d2 - 1.0))).abs() < 1e-12));
            assert!(r.caveat.is_none());
        }
    }
}

fn knill_sequences(lib: &GateLibrary, l: usize, count: usize, seed: u64) -> Vec<cliffrb::RBSequence> {
    let (paulis, comp) = StepDistribution::knill_1q(lib).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| gen_approximate_sequence(lib, &paulis, &comp, l, &mut rng).unwrap()).collect()
}

#[test]
fn knill_last_step_detection() {
    let lib = GateLibrary::builtin();
    let g = GroupIndex::new(1, false).unwrap();
    let seqs = knill_sequences(&lib, 1, 2000, 2);
    let pp = remaining_aggregates(g, &seqs, None).unwrap();
    let q = undetected_probabilities(&pp[0], &default_measurement(1)).unwrap();
    let at = |s: &str| q[s.parse::<PauliOperator>().unwrap().index() as usize - 1];
    // X, Y slip through about half the time; Z never does
    assert!((at("X") - 0.5).abs() < 0.05 && (at("Y") - 0.5).abs() < 0.05, "{q:?}");
    assert_eq!(at("Z"), 0.0);
    let r = kappa_bounds(&pp, 0.01, &default_measurement(1)).unwrap();
    assert!(r.kappa_max > 0.0);
    assert!(kappa_bounds(&pp, 0.5, &default_measurement(1)).unwrap().caveat.is_some());
}

#[test]
fn kappa_shrinks_with_length() {
    let lib = GateLibrary::builtin();
    let g = GroupIndex::new(1, false).unwrap();
    let mut prev = f64::INFINITY;
    for l in [1, 2, 4, 8, 16] {
        let seqs = knill_sequences(&lib, l, 3000, 3);
        let pp = remaining_aggregates(g.clone(), &seqs, None).unwrap();
        let r = kappa_bounds(&pp, 0.001 * l as f64, &default_measurement(1)).unwrap();
        assert!(r.kappa_max < prev, "l={l}: {} vs {prev}", r.kappa_max);
        prev = r.kappa_max;
    }
}

#[test]
fn adversarial_channel_respects_bounds() {
    let lib = GateLibrary::builtin();
    let g = GroupIndex::new(1, false).unwrap();
    let gamma = 1e-4;
    let u = 4.0 / 3.0;
    for l in [1, 3, 6] {
        let seqs = knill_sequences(&lib, l, 1500, 10 + l as u64);
        let pp = remaining_aggregates(g.clone(), &seqs, Some(&CliffordTableau::identity(1))).unwrap();
        for worst in [true, false] {
            let bound = kappa_bounds(&pp, 0.0, &default_measurement(1)).unwrap();
            let r: PauliOperator = if worst { bound.r_max[0].clone() } else { bound.r_min[0].clone() };
            let ch = PauliChannel::from_error_weights(1, [(r.clone(), gamma)]).unwrap();
            let model = ErrorModel::noiseless().with_gate("G", ChannelSpec::Pauli(ch));
            let mut total = 0.0;
            for s in &seqs {
                let mut steps = Vec::new();
                for c in &s.steps {
                    steps.push(SimStep::clifford(c.clone(), None).silent());
                    steps.push(SimStep::clifford(CliffordTableau::identity(1), Some("G")));
                }
                steps.push(SimStep::clifford(s.inversion.clone(), None).silent());
                let sim = SimSequence { n_qubits: 1, steps, readout: Readout::Parity(s.measured.clone()) };
                total += expected_sequence_fidelity(&sim, &model, &lib).unwrap();
            }
            let e = 1.0 - total / seqs.len() as f64;
            let report = kappa_bounds(&pp, e, &default_measurement(1)).unwrap();
            let deviation = u * gamma - 2.0 * e / l as f64;
            let (lo, hi) = report.deviation_interval();
            // beyond first order: two errors in one sequence
            let slack = 4.0 * (l as f64 * gamma).powi(2);
            assert!(deviation >= lo - slack && deviation <= hi + slack, "l={l} {worst}: {deviation} not in [{lo}, {hi}]");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn convolution_preserves_mass(seed in any::<u64>(), j in 1usize..6) {
        let g = GroupIndex::new(1, false).unwrap();
        let d = random_distribution(&g, 5, &mut ChaCha8Rng::seed_from_u64(seed));
        let c = convolve_steps(&d, j).unwrap();
        prop_assert!((c.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(total_variation(&c) <= total_variation(&d) + 1e-12);
    }
}
