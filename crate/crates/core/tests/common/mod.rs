#![allow(dead_code)]

use std::collections::BTreeMap;

use cliffrb::dense::StateVector;
use cliffrb::gates::GateLibrary;
use cliffrb::stab::{Circuit, CircuitOp};
use rand::Rng;

/// Exact joint distribution of a circuit's measurement record, by branching.
pub fn dense_outcomes(c: &Circuit, lib: &GateLibrary) -> BTreeMap<Vec<bool>, f64> {
    let mut out = BTreeMap::new();
    let start = StateVector::zeros(c.n_qubits).unwrap();
    branch(c, lib, 0, start, Vec::new(), 1.0, &mut out);
    out
}

fn branch(
    c: &Circuit,
    lib: &GateLibrary,
    mut pc: usize,
    mut st: StateVector,
    mut rec: Vec<bool>,
    w: f64,
    out: &mut BTreeMap<Vec<bool>, f64>,
) {
    while pc < c.ops.len() {
        match &c.ops[pc] {
            CircuitOp::Gate(g) => st.apply(&lib.get(&g.name).unwrap().dense, &g.qubits),
            CircuitOp::MeasureZ(q) => {
                for bit in [false, true] {
                    let mut s2 = st.clone();
                    let p = s2.project(*q, bit);
                    if p > 1e-12 {
                        let mut r2 = rec.clone();
                        r2.push(bit);
                        branch(c, lib, pc + 1, s2, r2, w * p, out);
                    }
                }
                return;
            }
            CircuitOp::Prepare => unimplemented!("fixed-size oracle"),
        }
        pc += 1;
    }
    rec.shrink_to_fit();
    *out.entry(rec).or_insert(0.0) += w;
}

pub const GATES_1Q: &[&str] = &["H", "Z90", "X90", "Y90", "X", "Z", "T", "Zm90"];
pub const GATES_2Q: &[&str] = &["CX", "CZ", "MS", "G", "SWAP"];

/// Random circuit of `len` operations with measurements mixed in.
pub fn random_circuit<R: Rng>(n: usize, len: usize, rng: &mut R) -> Circuit {
    let mut c = Circuit::new(n);
    for _ in 0..len {
        let r: f64 = rng.random();
        if r < 0.2 {
            c.measure(rng.random_range(0..n));
        } else if n >= 2 && r < 0.45 {
            let a = rng.random_range(0..n);
            let mut b = rng.random_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            c.gate(GATES_2Q[rng.random_range(0..GATES_2Q.len())], &[a, b]);
        } else {
            c.gate(GATES_1Q[rng.random_range(0..GATES_1Q.len())], &[rng.random_range(0..n)]);
        }
    }
    for q in 0..n {
        c.measure(q);
    }
    c
}

fn gaussian_columns(rows: usize, cols: usize, rng: &mut impl Rng) -> Vec<Vec<cliffrb::dense::C64>> {
    use rand_distr::StandardNormal;
    let mut v: Vec<Vec<_>> = (0..cols)
        .map(|_| {
            (0..rows)
                .map(|_| cliffrb::dense::c(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)))
                .collect()
        })
        .collect();
    // Gram-Schmidt
    for j in 0..cols {
        for k in 0..j {
            let dot: cliffrb::dense::C64 = (0..rows).map(|r| v[k][r].conj() * v[j][r]).sum();
            for r in 0..rows {
                let s = v[k][r] * dot;
                v[j][r] -= s;
            }
        }
        let norm = v[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in &mut v[j] {
            *z /= norm;
        }
    }
    v
}

/// Haar-ish random unitary from Gram-Schmidt on a Gaussian matrix.
pub fn random_unitary(n: usize, rng: &mut impl Rng) -> cliffrb::dense::CMatrix {
    let d = 1 << n;
    let cols = gaussian_columns(d, d, rng);
    let mut data = vec![cliffrb::dense::c(0.0, 0.0); d * d];
    for (j, col) in cols.iter().enumerate() {
        for (i, z) in col.iter().enumerate() {
            data[i * d + j] = *z;
        }
    }
    cliffrb::dense::CMatrix::from_rows(d, data)
}

/// Random trace-preserving channel with `k` Kraus operators (blocks of an isometry).
pub fn random_channel(n: usize, k: usize, rng: &mut impl Rng) -> cliffrb::dense::DenseSuperoperator {
    let d = 1 << n;
    let cols = gaussian_columns(k * d, d, rng);
    let kraus: Vec<_> = (0..k)
        .map(|b| {
            let mut data = vec![cliffrb::dense::c(0.0, 0.0); d * d];
            for (j, col) in cols.iter().enumerate() {
                for i in 0..d {
                    data[i * d + j] = col[b * d + i];
                }
            }
            cliffrb::dense::CMatrix::from_rows(d, data)
        })
        .collect();
    cliffrb::dense::DenseSuperoperator::from_kraus(n, &kraus).unwrap()
}
