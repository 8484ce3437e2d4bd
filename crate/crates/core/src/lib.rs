#![no_std]
extern crate alloc;

pub mod analysis;
pub mod bounds;
pub mod decomp;
pub mod dense;
pub mod error;
pub mod error_sim;
pub mod gates;
pub mod gf2n;
pub mod group;
pub mod pauli;
pub mod rb;
pub mod stab;
pub mod tableau;

pub use error::{Error, Result};
pub use pauli::{Letter, PauliChannel, PauliOperator};
pub use tableau::{CliffordTableau, LocalAction};
pub use gates::{builtin_gates, generates_clifford_group, GateApp, GateDefinition, GateLibrary, GateSequence, GateSet};
pub use group::{enumerate_group, find_mapping, group_order, sample_uniform};
pub use stab::{Circuit, CircuitOp, Measurement, RowOp, StabilizerState};
pub use error_sim::{expected_sequence_fidelity, ChannelSpec, ErrorModel, SignListDistribution};
pub use gf2n::{field_inv, field_mul, q_subgroup, t_subgroup, vectorial_power, verify_twirl_set, FieldContext};
pub use decomp::{block_decompose, cayley_search, translate_sequence, DecompositionTable};
pub use rb::{
    gen_approximate_sequence, gen_exact_sequence, gen_interleaved_sequence, max_useful_length, run_experiment,
    ExperimentDesign, Protocol, ProtocolSpec, RBSequence, StepDistribution,
};
pub use analysis::{
    bootstrap, consistency_check, embed_depolarizing, fit, interleaved_gate_error, length_statistics, truncation_scan,
    BootstrapReport, FitModel, FitReport, GateErrorForm, RBDataset, SequenceRecord,
};
pub use bounds::{
    convolve_steps, kappa_bounds, step_comparison_bound, total_variation, GroupDistribution, GroupIndex, KappaReport,
};
