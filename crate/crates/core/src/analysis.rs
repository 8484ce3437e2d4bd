//! Fidelity statistics, decay-model fits, χ² tests and bootstrap resampling.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};

/// Variance floor for lengths whose estimated variance is zero.
pub const VARIANCE_FLOOR: f64 = 1e-12;
pub const SIGNIFICANCE: f64 = 0.95;
pub const DEFAULT_RESAMPLES: usize = 1000;

const MAX_ITER: usize = 500;

/// Shot counts for one sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceRecord {
    pub length: usize,
    pub seq_index: usize,
    pub n_shots: u64,
    pub n_correct: u64,
    /// Exact success probability, when known from simulation.
    pub expected: Option<f64>,
    pub seed: u64,
}

impl SequenceRecord {
    pub fn fidelity(&self) -> f64 {
        self.n_correct as f64 / self.n_shots as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RBDataset {
    pub n_qubits: usize,
    pub protocol: String,
    /// Bits compared at readout; 1 for partial inversion.
    pub readout_bits: usize,
    pub records: Vec<SequenceRecord>,
}

impl RBDataset {
    pub fn new(n_qubits: usize, protocol: &str, readout_bits: usize, records: Vec<SequenceRecord>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidArgument("dataset needs n_qubits >= 1".into()));
        }
        for r in &records {
            if r.n_shots == 0 || r.n_correct > r.n_shots {
                return Err(Error::InvalidArgument(format!(
                    "record (l={}, i={}) has {} correct of {} shots",
                    r.length, r.seq_index, r.n_correct, r.n_shots
                )));
            }
        }
        Ok(RBDataset { n_qubits, protocol: protocol.into(), readout_bits, records })
    }

    /// `α_n = (2ⁿ − 1)/2ⁿ`.
    pub fn alpha(&self) -> f64 {
        alpha(self.n_qubits)
    }

    pub fn lengths(&self) -> Vec<usize> {
        let mut ls: Vec<usize> = self.records.iter().map(|r| r.length).collect();
        ls.sort_unstable();
        ls.dedup();
        ls
    }

    fn by_length(&self) -> BTreeMap<usize, Vec<&SequenceRecord>> {
        let mut m: BTreeMap<usize, Vec<&SequenceRecord>> = BTreeMap::new();
        for r in &self.records {
            m.entry(r.length).or_default().push(r);
        }
        m
    }

    /// Keeps records with `lo <= length <= hi`.
    pub fn window(&self, lo: usize, hi: usize) -> RBDataset {
        RBDataset {
            records: self.records.iter().filter(|r| (lo..=hi).contains(&r.length)).cloned().collect(),
            protocol: self.protocol.clone(),
            ..*self
        }
    }
}

pub fn alpha(n: usize) -> f64 {
    1.0 - libm::ldexp(1.0, -(n as i32))
}

/// Mean fidelity at one length.
#[derive(Clone, Debug, PartialEq)]
pub struct LengthStat {
    pub length: usize,
    pub n_sequences: usize,
    pub mean: f64,
    /// Unbiased variance of the mean; `None` for a single sequence.
    pub var_of_mean: Option<f64>,
}

impl LengthStat {
    /// Variance used as a fit weight, floored away from zero.
    pub fn weight_variance(&self) -> f64 {
        self.var_of_mean.unwrap_or(0.0).max(VARIANCE_FLOOR)
    }
}

pub fn length_statistics(ds: &RBDataset) -> Vec<LengthStat> {
    ds.by_length()
        .into_iter()
        .map(|(length, recs)| {
            let k = recs.len();
            let mean = recs.iter().map(|r| r.fidelity()).sum::<f64>() / k as f64;
            let var_of_mean = (k >= 2).then(|| {
                let ss: f64 = recs.iter().map(|r| (r.fidelity() - mean) * (r.fidelity() - mean)).sum();
                ss / (k - 1) as f64 / k as f64
            });
            LengthStat { length, n_sequences: k, mean, var_of_mean }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FitModel {
    /// `(1−α) + α(1−ε_m/α)(1−ε_s/α)^l`
    Main,
    /// `1/2 + 1/2(1−ε_m/α)(1−ε_s/α)^l`
    MainApp,
    /// `C(1−α) + Cα(1−ε_m/α)(1−ε_s/α)^l`
    ThreeParam,
    /// `a + α(1−ε_m/α)(1−ε_s/α)^l + b(l−1)(1−ε_s/α)^{l−2}`
    Magesan,
}

impl FitModel {
    pub const ALL: [FitModel; 4] = [FitModel::Main, FitModel::MainApp, FitModel::ThreeParam, FitModel::Magesan];

    pub fn tag(self) -> &'static str {
        match self {
            FitModel::Main => "main",
            FitModel::MainApp => "main-app",
            FitModel::ThreeParam => "three-param",
            FitModel::Magesan => "magesan",
        }
    }

    pub fn from_tag(s: &str) -> Result<Self> {
        FitModel::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::Parse(format!("unknown fit model `{s}`")))
    }

    pub fn n_params(self) -> usize {
        match self {
            FitModel::Main | FitModel::MainApp => 2,
            FitModel::ThreeParam => 3,
            FitModel::Magesan => 4,
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            FitModel::Main | FitModel::MainApp => &["eps_s", "eps_m"],
            FitModel::ThreeParam => &["eps_s", "eps_m", "C"],
            FitModel::Magesan => &["eps_s", "eps_m", "a", "b"],
        }
    }

    /// Model value at length `l` for parameters `p` (ε_s, ε_m, extras).
    pub fn eval(self, alpha: f64, p: &[f64], l: usize) -> f64 {
        let r = 1.0 - p[0] / alpha;
        let m = 1.0 - p[1] / alpha;
        let decay = libm::pow(r, l as f64);
        match self {
            FitModel::Main => (1.0 - alpha) + alpha * m * decay,
            FitModel::MainApp => 0.5 + 0.5 * m * decay,
            FitModel::ThreeParam => p[2] * ((1.0 - alpha) + alpha * m * decay),
            FitModel::Magesan => {
                p[2] + alpha * m * decay + p[3] * (l as f64 - 1.0) * libm::pow(r, l as f64 - 2.0)
            }
        }
    }

    fn asymptote(self, alpha: f64) -> f64 {
        match self {
            FitModel::MainApp => 0.5,
            _ => 1.0 - alpha,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitReport {
    pub model: FitModel,
    pub alpha: f64,
    pub params: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub chi2: f64,
    pub dof: usize,
    /// Upper-tail probability of `chi2`.
    pub p_value: f64,
    /// `chi2` above the 0.95 quantile.
    pub significant: bool,
    pub lengths: Vec<usize>,
    /// `(F_l − model(l))/σ_l` per length.
    pub residuals: Vec<f64>,
    /// χ² after each accepted iteration.
    pub trace: Vec<f64>,
}

impl FitReport {
    pub fn eps_s(&self) -> f64 {
        self.params[0]
    }
    pub fn eps_m(&self) -> f64 {
        self.params[1]
    }
    pub fn std_errors(&self) -> Vec<f64> {
        (0..self.params.len()).map(|i| libm::sqrt(self.covariance[i][i].max(0.0))).collect()
    }
    pub fn eps_s_se(&self) -> f64 {
        self.std_errors()[0]
    }
    /// Parameters outside `[0, 1]` are kept and reported here.
    pub fn diagnostics(&self) -> Vec<String> {
        let names = self.model.param_names();
        self.params
            .iter()
            .zip(names)
            .filter(|(v, _)| **v < 0.0 || **v > 1.0)
            .map(|(v, n)| format!("{n} = {v} lies outside [0, 1]"))
            .collect()
    }
    /// Ratio of extreme eigenvalues of the covariance matrix.
    pub fn condition_number(&self) -> f64 {
        let ev = symmetric_eigenvalues(&self.covariance);
        let max = ev.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let min = ev.iter().fold(f64::INFINITY, |a, &b| a.min(b.abs()));
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }
}

/// Fit `model` to the per-length means of `ds`.
pub fn fit(ds: &RBDataset, model: FitModel) -> Result<FitReport> {
    fit_stats(&length_statistics(ds), ds.alpha(), model)
}

/// Weighted Levenberg–Marquardt fit on precomputed length statistics.
pub fn fit_stats(stats: &[LengthStat], alpha: f64, model: FitModel) -> Result<FitReport> {
    let k = model.n_params();
    if stats.len() < k + 1 {
        return Err(Error::InvalidArgument(format!(
            "model {} needs at least {} lengths, got {}",
            model.tag(),
            k + 1,
            stats.len()
        )));
    }
    let ls: Vec<usize> = stats.iter().map(|s| s.length).collect();
    let ys: Vec<f64> = stats.iter().map(|s| s.mean).collect();
    let sig: Vec<f64> = stats.iter().map(|s| libm::sqrt(s.weight_variance())).collect();

    let resid = |p: &[f64]| -> Vec<f64> {
        ls.iter().zip(&ys).zip(&sig).map(|((&l, &y), &s)| (y - model.eval(alpha, p, l)) / s).collect()
    };
    let chi2_of = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>();
    // Jacobian of the model (not the residual), scaled by 1/σ
    let jac = |p: &[f64]| -> Vec<Vec<f64>> {
        let mut j = vec![vec![0.0; k]; ls.len()];
        for a in 0..k {
            let h = 1e-6 * p[a].abs().max(1e-3);
            let (mut hi, mut lo) = (p.to_vec(), p.to_vec());
            hi[a] += h;
            lo[a] -= h;
            for (i, (&l, &s)) in ls.iter().zip(&sig).enumerate() {
                j[i][a] = (model.eval(alpha, &hi, l) - model.eval(alpha, &lo, l)) / (2.0 * h) / s;
            }
        }
        j
    };

    let mut p = initial_guess(&ls, &ys, alpha, model);
    let mut r = resid(&p);
    let mut chi2 = chi2_of(&r);
    if !chi2.is_finite() {
        return Err(Error::Convergence(format!("non-finite objective at start {p:?}")));
    }
    let mut trace = vec![chi2];
    let mut lambda = 1e-3;
    let mut converged = false;
    for _ in 0..MAX_ITER {
        if chi2 == 0.0 {
            converged = true;
            break;
        }
        let j = jac(&p);
        let (jtj, jtr) = normal_equations(&j, &r);
        let mut a = jtj.clone();
        for d in 0..k {
            a[d][d] += lambda * jtj[d][d].max(1e-300);
        }
        let Some(step) = solve(&a, &jtr) else {
            lambda *= 10.0;
            if lambda > 1e20 {
                converged = true;
                break;
            }
            continue;
        };
        let trial: Vec<f64> = p.iter().zip(&step).map(|(x, d)| x + d).collect();
        let tr = resid(&trial);
        let tchi = chi2_of(&tr);
        if tchi.is_finite() && tchi < chi2 {
            let small_step = step.iter().zip(&p).all(|(d, x)| d.abs() <= 1e-14 * x.abs().max(1e-10));
            let small_gain = chi2 - tchi <= 1e-14 * chi2;
            p = trial;
            r = tr;
            chi2 = tchi;
            trace.push(chi2);
            lambda = (lambda / 10.0).max(1e-15);
            if small_step || small_gain {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            // no downhill step left at machine precision
            if lambda > 1e20 {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        return Err(Error::Convergence(format!("no convergence after {MAX_ITER} iterations; chi2 trace {trace:?}")));
    }
    let (jtj, _) = normal_equations(&jac(&p), &r);
    let covariance = invert_spd(&jtj).unwrap_or_else(|| vec![vec![f64::INFINITY; k]; k]);
    let dof = ls.len() - k;
    let p_value = chi2_sf(chi2, dof);
    Ok(FitReport {
        model,
        alpha,
        params: p,
        covariance,
        chi2,
        dof,
        p_value,
        significant: 1.0 - p_value > SIGNIFICANCE,
        lengths: ls,
        residuals: r,
        trace,
    })
}

/// Log-linear regression of `ln(F_l − asymptote)` against `l`.
fn initial_guess(ls: &[usize], ys: &[f64], alpha: f64, model: FitModel) -> Vec<f64> {
    let asym = model.asymptote(alpha);
    let pts: Vec<(f64, f64)> =
        ls.iter().zip(ys).filter(|(_, &y)| y - asym > 1e-9).map(|(&l, &y)| (l as f64, libm::log(y - asym))).collect();
    let (mut eps_s, mut eps_m) = (0.01 * alpha, 0.01 * alpha);
    if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        if sxx > 0.0 {
            let slope = sxy / sxx;
            let icpt = my - slope * mx;
            eps_s = alpha * (1.0 - libm::exp(slope));
            let amp = libm::exp(icpt);
            eps_m = match model {
                FitModel::MainApp => alpha * (1.0 - 2.0 * amp),
                _ => alpha * (1.0 - amp / alpha),
            };
        }
    }
    match model {
        FitModel::Main | FitModel::MainApp => vec![eps_s, eps_m],
        FitModel::ThreeParam => vec![eps_s, eps_m, 1.0],
        FitModel::Magesan => vec![eps_s, eps_m, 1.0 - alpha, 0.0],
    }
}

fn normal_equations(j: &[Vec<f64>], r: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let k = j.first().map_or(0, Vec::len);
    let mut jtj = vec![vec![0.0; k]; k];
    let mut jtr = vec![0.0; k];
    for (row, &ri) in j.iter().zip(r) {
        for a in 0..k {
            jtr[a] += row[a] * ri;
            for b in 0..k {
                jtj[a][b] += row[a] * row[b];
            }
        }
    }
    (jtj, jtr)
}

/// Gaussian elimination with partial pivoting.
fn solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(row, &bi)| row.iter().copied().chain([bi]).collect()).collect();
    for c in 0..n {
        let piv = (c..n).max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs()))?;
        if m[piv][c].abs() < 1e-300 || !m[piv][c].is_finite() {
            return None;
        }
        m.swap(c, piv);
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..=n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for c in (0..n).rev() {
        let s: f64 = (c + 1..n).map(|k| m[c][k] * x[k]).sum();
        x[c] = (m[c][n] - s) / m[c][c];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn invert_spd(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for i in 0..n {
        let e: Vec<f64> = (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect();
        cols.push(solve(a, &e)?);
    }
    // cols[i] is column i; the inverse is symmetric up to rounding
    Some((0..n).map(|r| (0..n).map(|c| 0.5 * (cols[c][r] + cols[r][c])).collect()).collect())
}

/// Cyclic Jacobi eigenvalues of a small symmetric matrix.
pub fn symmetric_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut m = a.to_vec();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[i][j] * m[i][j]).sum();
        let diag: f64 = (0..n).map(|i| m[i][i] * m[i][i]).sum();
        if off <= 1e-30 * diag || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q] == 0.0 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    (0..n).map(|i| m[i][i]).collect()
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_series(a, x)
    } else {
        1.0 - gamma_cf(a, x)
    }
}

/// Regularized upper incomplete gamma `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_series(a, x)
    } else {
        gamma_cf(a, x)
    }
}

fn gamma_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut del = sum;
    for _ in 0..1000 {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * 1e-16 {
            break;
        }
    }
    sum * libm::exp(-x + a * libm::log(x) - libm::lgamma(a))
}

fn gamma_cf(a: f64, x: f64) -> f64 {
    // modified Lentz
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..1000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    libm::exp(-x + a * libm::log(x) - libm::lgamma(a)) * h
}

pub fn chi2_cdf(x: f64, dof: usize) -> f64 {
    if dof == 0 {
        return if x >= 0.0 { 1.0 } else { 0.0 };
    }
    gamma_p(dof as f64 / 2.0, x / 2.0)
}

/// Upper-tail p-value.
pub fn chi2_sf(x: f64, dof: usize) -> f64 {
    if dof == 0 {
        return if x > 0.0 { 0.0 } else { 1.0 };
    }
    gamma_q(dof as f64 / 2.0, x / 2.0)
}

/// Quantile of the χ² distribution by bisection.
pub fn chi2_quantile(prob: f64, dof: usize) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    while chi2_cdf(hi, dof) < prob {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi2_cdf(mid, dof) < prob {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfidenceEllipse {
    /// Center in (ε_s, ε_m).
    pub center: [f64; 2],
    /// Semi-axis lengths, major first.
    pub axes: [f64; 2],
    /// Angle of the major axis from the ε_s axis.
    pub angle: f64,
    /// Inverse of the scaled covariance, for membership tests.
    precision: [[f64; 3]; 1],
}

impl ConfidenceEllipse {
    fn from_samples(xs: &[f64], ys: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let denom = (n - 1.0).max(1.0);
        let sxx = xs.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>() / denom;
        let syy = ys.iter().map(|y| (y - my) * (y - my)).sum::<f64>() / denom;
        let sxy = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / denom;
        let scale = chi2_quantile(SIGNIFICANCE, 2);
        let tr = sxx + syy;
        let det = sxx * syy - sxy * sxy;
        let disc = libm::sqrt((0.25 * tr * tr - det).max(0.0));
        let (l1, l2) = (0.5 * tr + disc, (0.5 * tr - disc).max(0.0));
        let angle = 0.5 * libm::atan2(2.0 * sxy, sxx - syy);
        let (a, b, c) = (sxx * scale, sxy * scale, syy * scale);
        let d = a * c - b * b;
        let precision = if d > 0.0 { [[c / d, -b / d, a / d]] } else { [[f64::INFINITY; 3]] };
        ConfidenceEllipse {
            center: [mx, my],
            axes: [libm::sqrt(l1 * scale), libm::sqrt(l2 * scale)],
            angle,
            precision,
        }
    }

    pub fn contains(&self, eps_s: f64, eps_m: f64) -> bool {
        let (dx, dy) = (eps_s - self.center[0], eps_m - self.center[1]);
        if dx == 0.0 && dy == 0.0 {
            return true;
        }
        let [[p, q, r]] = self.precision;
        if !p.is_finite() {
            return false;
        }
        p * dx * dx + 2.0 * q * dx * dy + r * dy * dy <= 1.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BootstrapReport {
    pub model: FitModel,
    pub original: FitReport,
    pub n_resamples: usize,
    /// Parameter vectors by replicate index; `None` where the refit failed.
    pub replicates: Vec<Option<Vec<f64>>>,
    pub failures: usize,
    pub means: Vec<f64>,
    /// Mean over replicates minus the original estimate.
    pub bias: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub ellipse: ConfidenceEllipse,
    /// `|bias| > 0.25·SE` per parameter.
    pub bias_significant: Vec<bool>,
}

impl BootstrapReport {
    pub fn eps_s_se(&self) -> f64 {
        self.std_errors[0]
    }
}

/// One resampled dataset: sequences drawn with replacement per length, then
/// each count redrawn binomially about its observed fidelity.
pub fn resample<R: Rng + ?Sized>(ds: &RBDataset, rng: &mut R) -> Result<RBDataset> {
    let mut records = Vec::with_capacity(ds.records.len());
    for (_, recs) in ds.by_length() {
        for i in 0..recs.len() {
            let r = recs[rng.random_range(0..recs.len())];
            let n_correct = Binomial::new(r.n_shots, r.fidelity())
                .map_err(|e| Error::InvalidArgument(format!("binomial: {e}")))?
                .sample(rng);
            records.push(SequenceRecord { seq_index: i, n_correct, expected: None, ..r.clone() });
        }
    }
    Ok(RBDataset { records, protocol: ds.protocol.clone(), ..*ds })
}

/// Seed of bootstrap replicate `index`.
pub fn replicate_seed(master: u64, index: usize) -> u64 {
    crate::rb::sequence_seed(master, "bootstrap", 0, index)
}

/// Refit of one replicate; replicates are independent given their seeds.
pub fn bootstrap_replicate(ds: &RBDataset, model: FitModel, master: u64, index: usize) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(replicate_seed(master, index));
    Ok(fit(&resample(ds, &mut rng)?, model)?.params)
}

pub fn bootstrap<R: Rng + ?Sized>(ds: &RBDataset, model: FitModel, n_resamples: usize, rng: &mut R) -> Result<BootstrapReport> {
    let original = fit(ds, model)?;
    let master = rng.next_u64();
    let reps = (0..n_resamples).map(|i| bootstrap_replicate(ds, model, master, i).ok()).collect();
    summarize_bootstrap(original, reps)
}

/// Aggregates replicate results; fails if more than 10% of refits failed.
pub fn summarize_bootstrap(original: FitReport, replicates: Vec<Option<Vec<f64>>>) -> Result<BootstrapReport> {
    let n = replicates.len();
    let good: Vec<&Vec<f64>> = replicates.iter().flatten().collect();
    let failures = n - good.len();
    if n == 0 || failures * 10 > n || good.len() < 2 {
        return Err(Error::Convergence(format!("{failures} of {n} bootstrap refits failed")));
    }
    let k = original.params.len();
    let m = good.len() as f64;
    let means: Vec<f64> = (0..k).map(|a| good.iter().map(|p| p[a]).sum::<f64>() / m).collect();
    let std_errors: Vec<f64> = (0..k)
        .map(|a| libm::sqrt(good.iter().map(|p| (p[a] - means[a]) * (p[a] - means[a])).sum::<f64>() / (m - 1.0)))
        .collect();
    let bias: Vec<f64> = means.iter().zip(&original.params).map(|(mu, p)| mu - p).collect();
    let bias_significant = bias.iter().zip(&std_errors).map(|(b, se)| b.abs() > 0.25 * se).collect();
    let xs: Vec<f64> = good.iter().map(|p| p[0]).collect();
    let ys: Vec<f64> = good.iter().map(|p| p[1]).collect();
    Ok(BootstrapReport {
        model: original.model,
        n_resamples: n,
        ellipse: ConfidenceEllipse::from_samples(&xs, &ys),
        original,
        replicates,
        failures,
        means,
        bias,
        std_errors,
        bias_significant,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GateErrorForm {
    /// `α(1 − (1−p_e′)/(1−p_e))`
    #[default]
    AlphaPrefactor,
    /// `(1/α)(1 − (1−p_e′)/(1−p_e))`
    InverseAlpha,
}

/// Error per interleaved gate and its first-order standard error.
pub fn interleaved_gate_error(primary: &FitReport, interleaved: &FitReport, form: GateErrorForm) -> Result<(f64, f64)> {
    if (primary.alpha - interleaved.alpha).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "fits use different alpha ({} vs {})",
            primary.alpha, interleaved.alpha
        )));
    }
    let (se, se_i) = (primary.eps_s_se(), interleaved.eps_s_se());
    gate_error_from(primary.eps_s(), se, interleaved.eps_s(), se_i, primary.alpha, form)
}

/// As [`interleaved_gate_error`] from bare estimates.
pub fn gate_error_from(eps: f64, se: f64, eps_i: f64, se_i: f64, alpha: f64, form: GateErrorForm) -> Result<(f64, f64)> {
    let u = 1.0 - eps / alpha;
    let v = 1.0 - eps_i / alpha;
    if u <= 0.0 {
        return Err(Error::DegenerateFit(format!("1 - eps_s/alpha = {u} is not positive")));
    }
    let pref = match form {
        GateErrorForm::AlphaPrefactor => alpha,
        GateErrorForm::InverseAlpha => 1.0 / alpha,
    };
    let g = pref * (1.0 - v / u);
    let d_i = pref / (alpha * u);
    let d = -pref * v / (alpha * u * u);
    let var = d * d * se * se + d_i * d_i * se_i * se_i;
    Ok((g, libm::sqrt(if var.is_finite() { var } else { f64::INFINITY })))
}

/// `(p_n, ε factor)` for a k-qubit depolarizer viewed on n qubits.
pub fn embed_depolarizing(p_k: f64, k: usize, n: usize) -> Result<(f64, f64)> {
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    let dk = libm::ldexp(1.0, 2 * k as i32);
    let dn = libm::ldexp(1.0, 2 * n as i32);
    let strength = (dk - 1.0) * dn / (dk * (dn - 1.0));
    Ok((p_k * strength, alpha(n) * strength / alpha(k)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConsistencyWeights {
    pub gate: f64,
    pub one_qubit: f64,
}

impl Default for ConsistencyWeights {
    fn default() -> Self {
        ConsistencyWeights { gate: 1.5, one_qubit: 6.5 }
    }
}

/// Composite error per step from the two-qubit gate error and the
/// one-qubit step errors.
pub fn consistency_check(eps_g: f64, eps_s1: f64, eps_s2: f64, w: ConsistencyWeights) -> Result<f64> {
    if [eps_g, eps_s1, eps_s2, w.gate, w.one_qubit].iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::InvalidArgument("inputs must be nonnegative".into()));
    }
    Ok(w.gate * eps_g + 1.2 * w.one_qubit * (eps_s1 + eps_s2) / (2.0 * 1.8))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TruncationRow {
    pub window: (usize, usize),
    pub fit: FitReport,
    /// `ε_s` shift from the first window, in units of its combined SE.
    pub drift_sigma: f64,
}

/// Refits over each `(min_length, max_length)` window.
pub fn truncation_scan(ds: &RBDataset, model: FitModel, windows: &[(usize, usize)]) -> Result<Vec<TruncationRow>> {
    let mut rows: Vec<TruncationRow> = Vec::with_capacity(windows.len());
    for &(lo, hi) in windows {
        let sub = ds.window(lo, hi);
        let have = sub.lengths().len();
        if have < model.n_params() + 1 {
            return Err(Error::InvalidArgument(format!(
                "window [{lo}, {hi}] keeps {have} lengths; {} needs {}",
                model.tag(),
                model.n_params() + 1
            )));
        }
        let fit = fit(&sub, model)?;
        let drift_sigma = match rows.first() {
            None => 0.0,
            Some(base) => {
                let se = libm::sqrt(base.fit.eps_s_se() * base.fit.eps_s_se() + fit.eps_s_se() * fit.eps_s_se());
                (fit.eps_s() - base.fit.eps_s()) / se
            }
        };
        rows.push(TruncationRow { window: (lo, hi), fit, drift_sigma });
    }
    Ok(rows)
}
