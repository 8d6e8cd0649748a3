//! Small-system exact reference computations used to cross-check the
//! symplectic engine and to verify operator-norm and distance inequalities
//! that the large-lattice experiments rely on.

pub mod checks;
pub mod dense;
pub mod lmp;

pub use dense::{
    apply_pauli_vec, cap_mixed, cap_pure, circuit_unitary, dense_from_circuit, fidelity,
    ground_projector, operator_norm, partial_trace, pauli_expectation_vec, pauli_matrix,
    pure_marginal, purified_distance, trace_norm, DenseOperator, DenseState, PurifiedState, C64,
};
