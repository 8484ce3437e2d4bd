//! Twirl-quality diagnostics: step convolution, total variation, step
//! comparison bounds and first-order bounds for incomplete depolarization.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashMap;

use crate::error::{Error, Result};
use crate::group::enumerate_group;
use crate::pauli::{Letter, PauliOperator};
use crate::rb::{RBSequence, StepDistribution};
use crate::tableau::CliffordTableau;

/// Largest register the distribution code will enumerate.
pub const MAX_ENUMERATED_QUBITS: usize = 2;

/// Caveat threshold on `l·e` for the first-order κ bounds.
pub const FIRST_ORDER_LIMIT: f64 = 0.2;

/// Enumerated group with a key index.
#[derive(Debug)]
pub struct GroupIndex {
    n: usize,
    quotient: bool,
    elements: Vec<CliffordTableau>,
    index: HashMap<u128, usize>,
}

impl GroupIndex {
    pub fn new(n: usize, quotient: bool) -> Result<Arc<Self>> {
        if n == 0 || n > MAX_ENUMERATED_QUBITS {
            return Err(Error::ResourceLimit(format!(
                "group distributions need 1 <= n <= {MAX_ENUMERATED_QUBITS}, got {n}"
            )));
        }
        let elements = enumerate_group(n, quotient)?;
        let index = elements.iter().enumerate().map(|(i, c)| (c.key(quotient), i)).collect();
        Ok(Arc::new(GroupIndex { n, quotient, elements, index }))
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }
    pub fn quotient(&self) -> bool {
        self.quotient
    }
    pub fn len(&self) -> usize {
        self.elements.len()
    }
    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
    pub fn elements(&self) -> &[CliffordTableau] {
        &self.elements
    }

    pub fn position(&self, c: &CliffordTableau) -> Result<usize> {
        if c.n_qubits() != self.n {
            return Err(Error::Dimension(self.n, c.n_qubits()));
        }
        Ok(self.index[&c.key(self.quotient)])
    }
}

/// Probability vector over an enumerated (quotient) group.
#[derive(Clone, Debug)]
pub struct GroupDistribution {
    group: Arc<GroupIndex>,
    probs: Vec<f64>,
}

impl PartialEq for GroupDistribution {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.group, &other.group) && self.probs == other.probs
    }
}

impl GroupDistribution {
    pub fn new(group: Arc<GroupIndex>, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != group.len() {
            return Err(Error::InvalidArgument(format!("{} probabilities for {} elements", probs.len(), group.len())));
        }
        if probs.iter().any(|&p| !(p >= 0.0)) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument("probabilities must be nonnegative and sum to 1".into()));
        }
        Ok(GroupDistribution { group, probs })
    }

    pub fn uniform(group: Arc<GroupIndex>) -> Self {
        let m = group.len();
        GroupDistribution { group, probs: vec![1.0 / m as f64; m] }
    }

    pub fn delta(group: Arc<GroupIndex>, c: &CliffordTableau) -> Result<Self> {
        let mut probs = vec![0.0; group.len()];
        probs[group.position(c)?] = 1.0;
        Ok(GroupDistribution { group, probs })
    }

    pub fn from_steps(group: Arc<GroupIndex>, steps: &StepDistribution) -> Result<Self> {
        let mut probs = vec![0.0; group.len()];
        for (c, p) in steps.entries() {
            probs[group.position(c)?] += p;
        }
        Ok(GroupDistribution { group, probs })
    }

    /// Empirical distribution of a list of operators.
    pub fn empirical<'a>(group: Arc<GroupIndex>, samples: impl IntoIterator<Item = &'a CliffordTableau>) -> Result<Self> {
        let mut probs = vec![0.0; group.len()];
        let mut count = 0usize;
        for c in samples {
            probs[group.position(c)?] += 1.0;
            count += 1;
        }
        if count == 0 {
            return Err(Error::InvalidArgument("no samples".into()));
        }
        probs.iter_mut().for_each(|p| *p /= count as f64);
        Ok(GroupDistribution { group, probs })
    }

    pub fn group(&self) -> &Arc<GroupIndex> {
        &self.group
    }
    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }
    pub fn probability(&self, c: &CliffordTableau) -> Result<f64> {
        Ok(self.probs[self.group.position(c)?])
    }

    pub fn support(&self) -> impl Iterator<Item = (&CliffordTableau, f64)> {
        self.group.elements.iter().zip(self.probs.iter().copied()).filter(|(_, p)| *p > 0.0)
    }

    /// Distribution of `b ∘ a` with `a ~ self` applied first and `b ~ then`.
    pub fn then(&self, then: &GroupDistribution) -> Result<Self> {
        if !Arc::ptr_eq(&self.group, &then.group) {
            return Err(Error::InvalidArgument("distributions are over different group indices".into()));
        }
        let mut probs = vec![0.0; self.group.len()];
        for (a, pa) in self.support() {
            for (b, pb) in then.support() {
                probs[self.group.position(&b.compose(a)?)?] += pa * pb;
            }
        }
        Ok(GroupDistribution { group: self.group.clone(), probs })
    }

    /// Distribution of `c ∘ a` for a fixed `c`.
    pub fn then_fixed(&self, c: &CliffordTableau) -> Result<Self> {
        let mut probs = vec![0.0; self.group.len()];
        for (a, pa) in self.support() {
            probs[self.group.position(&c.compose(a)?)?] += pa;
        }
        Ok(GroupDistribution { group: self.group.clone(), probs })
    }
}

/// `j`-fold convolution: the aggregate of `j` independent steps.
pub fn convolve_steps(d: &GroupDistribution, j: usize) -> Result<GroupDistribution> {
    if j == 0 {
        return Err(Error::InvalidArgument("j must be positive".into()));
    }
    let mut cur = d.clone();
    for _ in 1..j {
        cur = cur.then(d)?;
    }
    Ok(cur)
}

/// `½ Σ |d(g) − 1/|G||`.
pub fn total_variation(d: &GroupDistribution) -> f64 {
    let u = 1.0 / d.probs.len() as f64;
    0.5 * d.probs.iter().map(|p| (p - u).abs()).sum::<f64>()
}

/// `v_1, …, v_jmax` for the step distribution `d`.
pub fn tv_series(d: &GroupDistribution, jmax: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(jmax);
    let mut cur = d.clone();
    for j in 1..=jmax {
        if j > 1 {
            cur = cur.then(d)?;
        }
        out.push(total_variation(&cur));
    }
    Ok(out)
}

/// Geometric decay rate `r` in `v_j ≈ A rʲ`, by log-linear regression over
/// the entries above `floor`.
pub fn tv_decay_rate(series: &[f64], floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > floor)
        .map(|(j, &v)| ((j + 1) as f64, libm::log(v)))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(libm::exp(sxy / sxx))
}

/// Aggregate error-per-step after grouping `k` steps.
pub fn aggregate_error(eps: f64, alpha: f64, k: usize) -> f64 {
    alpha * (1.0 - libm::pow(1.0 - eps / alpha, k as f64))
}

/// Maximizes `c·s` subject to `a·s = b`, `0 ≤ s ≤ u`. Greedy by `c/a` is
/// optimal for a single equality row with box bounds.
pub fn box_lp_max(c: &[f64], a: &[f64], b: f64, u: f64) -> Result<(f64, Vec<f64>)> {
    let cap: f64 = a.iter().map(|x| x * u).sum();
    if b < -1e-15 || b > cap + 1e-12 {
        return Err(Error::Infeasible(format!("need a·s = {b} with a·s in [0, {cap}]")));
    }
    let mut s = vec![0.0; c.len()];
    let mut order: Vec<usize> = Vec::new();
    for i in 0..c.len() {
        if a[i] > 0.0 {
            order.push(i);
        } else if c[i] > 0.0 {
            s[i] = u;
        }
    }
    order.sort_by(|&i, &j| (c[j] / a[j]).total_cmp(&(c[i] / a[i])));
    let mut left = b.max(0.0);
    for i in order {
        if left <= 0.0 {
            break;
        }
        let take = (left / a[i]).min(u);
        s[i] = take;
        left -= take * a[i];
    }
    let val = c.iter().zip(&s).map(|(x, y)| x * y).sum();
    Ok((val, s))
}

/// `(δ_max, δ_min)`: the range of `ε_B − ε_{A,k}` over per-element strengths
/// consistent with the observed `eps_a` for the single-step distribution `p_a`.
pub fn step_comparison_bound(p_a: &GroupDistribution, eps_a: f64, alpha: f64, k: usize) -> Result<(f64, f64)> {
    let pk = convolve_steps(p_a, k)?;
    let m = pk.probs.len() as f64;
    let d2 = libm::ldexp(1.0, 2 * p_a.group.n as i32);
    let u = d2 / (d2 - 1.0);
    let rhs = aggregate_error(eps_a, alpha, k) / alpha;
    let c: Vec<f64> = pk.probs.iter().map(|p| alpha * (1.0 / m - p)).collect();
    let neg: Vec<f64> = c.iter().map(|x| -x).collect();
    let (hi, _) = box_lp_max(&c, &pk.probs, rhs, u)?;
    let (lo, _) = box_lp_max(&neg, &pk.probs, rhs, u)?;
    Ok((hi, -lo))
}

/// Non-identity Paulis `R` whose image `C(R)` commutes with `measured`.
pub fn undetected_set(c: &CliffordTableau, measured: &PauliOperator) -> Result<Vec<PauliOperator>> {
    let n = c.n_qubits();
    let mut out = Vec::new();
    for i in 1..1u64 << (2 * n) {
        let r = PauliOperator::from_index(n, i);
        if c.apply(&r)?.commutes(measured)? {
            out.push(r);
        }
    }
    Ok(out)
}

/// `q_k(R)` for every non-identity `R` (index `i − 1` for Pauli index `i`).
pub fn undetected_probabilities(p_k: &GroupDistribution, measured: &PauliOperator) -> Result<Vec<f64>> {
    let n = p_k.group.n;
    let mut q = vec![0.0; (1usize << (2 * n)) - 1];
    for (c, p) in p_k.support() {
        for r in undetected_set(c, measured)? {
            q[r.index() as usize - 1] += p;
        }
    }
    Ok(q)
}

#[derive(Clone, Debug, PartialEq)]
pub struct KappaReport {
    /// Upper bound on true minus inferred depolarizing strength.
    pub kappa_max: f64,
    /// Upper bound on inferred minus true depolarizing strength.
    pub kappa_min: f64,
    /// `R_{k,max}` and `R_{k,min}` per `k`.
    pub r_max: Vec<PauliOperator>,
    pub r_min: Vec<PauliOperator>,
    /// `1 − q_k(R_{k,max})` and `1 − q_k(R_{k,min})` per `k`.
    pub detect_max: Vec<f64>,
    pub detect_min: Vec<f64>,
    pub caveat: Option<String>,
}

impl KappaReport {
    /// Interval for true minus inferred strength.
    pub fn deviation_interval(&self) -> (f64, f64) {
        (-self.kappa_min, self.kappa_max)
    }
}

/// First-order bounds on the strength misestimate of an interleaved gate's
/// Pauli error when the remaining aggregate after the `k`-th step from the
/// end is distributed as `p_prime[k − 1]`.
pub fn kappa_bounds(p_prime: &[GroupDistribution], e: f64, measured: &PauliOperator) -> Result<KappaReport> {
    let l = p_prime.len();
    if l == 0 {
        return Err(Error::InvalidArgument("need at least one aggregate distribution".into()));
    }
    if !(0.0..=1.0).contains(&e) {
        return Err(Error::InvalidArgument(format!("observed error {e} outside [0, 1]")));
    }
    let n = p_prime[0].group.n;
    if measured.n_qubits() != n || measured.is_identity() {
        return Err(Error::InvalidArgument("measured operator must be a non-identity Pauli on the register".into()));
    }
    let d2 = libm::ldexp(1.0, 2 * n as i32);
    let u = d2 / (d2 - 1.0);
    // a fully depolarizing channel of strength p is detected with probability p/2
    let anti = (0..1u64 << (2 * n))
        .filter(|&i| !PauliOperator::from_index(n, i).commutes(measured).unwrap_or(true))
        .count() as f64;
    let to_strength = d2 / anti;

    let (mut r_max, mut r_min, mut detect_max, mut detect_min) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for pk in p_prime {
        let q = undetected_probabilities(pk, measured)?;
        let (imax, imin) = extreme_indices(&q);
        r_max.push(PauliOperator::from_index(n, imax as u64 + 1));
        r_min.push(PauliOperator::from_index(n, imin as u64 + 1));
        detect_max.push(1.0 - q[imax]);
        detect_min.push(1.0 - q[imin]);
    }
    let inferred = to_strength * e / l as f64;
    let smax: f64 = detect_max.iter().sum();
    let smin: f64 = detect_min.iter().sum();
    let gamma_hi = if smax > 0.0 { (e / smax).min(1.0) } else { 1.0 };
    let gamma_lo = if smin > 0.0 { e / smin } else { 0.0 };
    let caveat = (l as f64 * e > FIRST_ORDER_LIMIT)
        .then(|| format!("l*e = {} exceeds {FIRST_ORDER_LIMIT}; first-order bounds are unreliable", l as f64 * e));
    Ok(KappaReport {
        kappa_max: gamma_hi * u - inferred,
        kappa_min: inferred - gamma_lo * u,
        r_max,
        r_min,
        detect_max,
        detect_min,
        caveat,
    })
}

fn extreme_indices(q: &[f64]) -> (usize, usize) {
    let mut imax = 0;
    let mut imin = 0;
    for (i, &v) in q.iter().enumerate() {
        if v > q[imax] + 1e-15 {
            imax = i;
        }
        if v < q[imin] - 1e-15 {
            imin = i;
        }
    }
    (imax, imin)
}

/// `p′_k` for `k = 1..=l` from sampled sequences: the aggregate of the last
/// `k − 1` steps followed by the inversion, with an optional gate `g`
/// after every step.
pub fn remaining_aggregates(
    group: Arc<GroupIndex>,
    sequences: &[RBSequence],
    g: Option<&CliffordTableau>,
) -> Result<Vec<GroupDistribution>> {
    let Some(first) = sequences.first() else {
        return Err(Error::InvalidArgument("no sequences".into()));
    };
    let l = first.steps.len();
    if sequences.iter().any(|s| s.steps.len() != l) {
        return Err(Error::InvalidArgument("sequences differ in length".into()));
    }
    let mut per_k: Vec<Vec<CliffordTableau>> = vec![Vec::with_capacity(sequences.len()); l];
    for s in sequences {
        let mut agg = s.inversion.clone();
        for k in 1..=l {
            per_k[k - 1].push(agg.clone());
            let step = &s.steps[l - k];
            let unit = match g {
                Some(g) => g.compose(step)?,
                None => step.clone(),
            };
            agg = agg.compose(&unit)?;
        }
    }
    per_k.iter().map(|v| GroupDistribution::empirical(group.clone(), v.iter())).collect()
}

/// `Z` on the first qubit.
pub fn default_measurement(n: usize) -> PauliOperator {
    PauliOperator::single(n, 0, Letter::Z)
}
