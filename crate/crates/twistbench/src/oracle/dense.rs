//! Exact statevector and density-matrix computations on small systems.
//!
//! Basis convention: computational basis index b has qubit i (row-major
//! lattice index) at bit i. Paulis act as monomials
//! X^x Z^z |b> = i^t (-1)^(z.b) |b xor x>, matching the symplectic engine.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::gf2;
use crate::lattice::Lattice;
use crate::pauli::PauliOp;
use crate::toric::RestrictedCode;

pub type C64 = Complex<f64>;

pub const DEFAULT_CAP_PURE: usize = 12;
pub const DEFAULT_CAP_MIXED: usize = 10;

fn env_cap() -> Option<usize> {
    std::env::var("TWISTBENCH_CAP_QUBITS")
        .ok()
        .and_then(|v| v.parse().ok())
}

pub fn cap_pure() -> usize {
    env_cap().unwrap_or(DEFAULT_CAP_PURE)
}

pub fn cap_mixed() -> usize {
    env_cap().unwrap_or(DEFAULT_CAP_MIXED)
}

pub fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        return Err(Error::Capacity {
            requested: n,
            cap,
        });
    }
    Ok(())
}

/// A pure statevector or a density matrix on n qubits.
#[derive(Debug, Clone)]
pub enum DenseState {
    Pure { n: usize, amps: DVector<C64> },
    Mixed { n: usize, rho: DMatrix<C64> },
}

impl DenseState {
    pub fn pure(n: usize, amps: DVector<C64>) -> Result<Self> {
        check_cap(n, cap_pure())?;
        if amps.len() != 1 << n {
            return Err(Error::InvalidInput("amplitude length != 2^n".into()));
        }
        let norm = amps.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("state norm {norm} != 1")));
        }
        Ok(DenseState::Pure { n, amps })
    }

    pub fn mixed(n: usize, rho: DMatrix<C64>) -> Result<Self> {
        check_cap(n, cap_mixed())?;
        if rho.nrows() != 1 << n || rho.ncols() != 1 << n {
            return Err(Error::InvalidInput("density matrix shape != 2^n".into()));
        }
        let tr: C64 = rho.diagonal().iter().sum();
        if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("trace {tr} != 1")));
        }
        if (&rho - rho.adjoint()).norm() > 1e-9 {
            return Err(Error::InvalidInput("density matrix not Hermitian".into()));
        }
        Ok(DenseState::Mixed { n, rho })
    }

    pub fn qubits(&self) -> usize {
        match self {
            DenseState::Pure { n, .. } | DenseState::Mixed { n, .. } => *n,
        }
    }

    pub fn density(&self) -> DMatrix<C64> {
        match self {
            DenseState::Pure { amps, .. } => amps * amps.adjoint(),
            DenseState::Mixed { rho, .. } => rho.clone(),
        }
    }
}

/// A labelled dense operator.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    pub matrix: DMatrix<C64>,
    pub label: String,
}

impl DenseOperator {
    pub fn new(matrix: DMatrix<C64>, label: impl Into<String>) -> Self {
        DenseOperator {
            matrix,
            label: label.into(),
        }
    }

    pub fn projector_residual(&self) -> f64 {
        let m = &self.matrix;
        let idem = (m * m - m).norm();
        let herm = (m - m.adjoint()).norm();
        idem.max(herm)
    }
}

fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

fn single_qubit_matrix(gate: &Gate) -> Option<[[C64; 2]; 2]> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Some(match gate {
        Gate::H(_) => [[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]],
        Gate::S(_) => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 1.0)]],
        Gate::X(_) => [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
        Gate::Y(_) => [[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]],
        Gate::Z(_) => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]],
        _ => return None,
    })
}

/// Applies one gate to a statevector in place; `extra_qubits` widens the
/// register beyond the lattice (purifying ancillas occupy the high bits).
pub fn apply_gate(amps: &mut DVector<C64>, gate: &Gate, lattice: &Lattice) {
    let dim = amps.len();
    if let Some(u) = single_qubit_matrix(gate) {
        let k = lattice.index_of(gate.sites()[0]);
        let mask = 1usize << k;
        for b in 0..dim {
            if b & mask == 0 {
                let (a0, a1) = (amps[b], amps[b | mask]);
                amps[b] = u[0][0] * a0 + u[0][1] * a1;
                amps[b | mask] = u[1][0] * a0 + u[1][1] * a1;
            }
        }
        return;
    }
    match *gate {
        Gate::Cnot(ctrl, tgt) => {
            let cm = 1usize << lattice.index_of(ctrl);
            let tm = 1usize << lattice.index_of(tgt);
            for b in 0..dim {
                if b & cm != 0 && b & tm == 0 {
                    amps.swap_rows(b, b | tm);
                }
            }
        }
        Gate::Cz(a, bq) => {
            let am = 1usize << lattice.index_of(a);
            let bm = 1usize << lattice.index_of(bq);
            for x in 0..dim {
                if x & am != 0 && x & bm != 0 {
                    amps[x] = -amps[x];
                }
            }
        }
        _ => unreachable!(),
    }
}

pub fn apply_circuit_vec(amps: &mut DVector<C64>, circuit: &Circuit, lattice: &Lattice) {
    for layer in &circuit.layers {
        for gate in layer {
            apply_gate(amps, gate, lattice);
        }
    }
}

/// Statevector U|0...0> for a validated circuit on the lattice.
pub fn dense_from_circuit(circuit: &Circuit, lattice: &Lattice) -> Result<DenseState> {
    let n = lattice.site_count();
    check_cap(n, cap_pure())?;
    circuit.validate(lattice)?;
    let mut amps = DVector::zeros(1 << n);
    amps[0] = c(1.0, 0.0);
    apply_circuit_vec(&mut amps, circuit, lattice);
    DenseState::pure(n, amps)
}

/// The full unitary of a circuit, column by column.
pub fn circuit_unitary(circuit: &Circuit, lattice: &Lattice) -> Result<DMatrix<C64>> {
    let n = lattice.site_count();
    check_cap(n, cap_mixed())?;
    circuit.validate(lattice)?;
    let dim = 1usize << n;
    let mut u = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let mut v = DVector::zeros(dim);
        v[col] = c(1.0, 0.0);
        apply_circuit_vec(&mut v, circuit, lattice);
        u.set_column(col, &v);
    }
    Ok(u)
}

fn pauli_phase_on(p: &PauliOp, b: usize) -> C64 {
    let n = p.lattice().site_count();
    let mut zb = 0usize;
    for i in 0..n {
        if gf2::get_bit(p.z_bits(), i) && b >> i & 1 == 1 {
            zb += 1;
        }
    }
    let t = (p.internal_exp() as usize + 2 * zb) % 4;
    match t {
        0 => c(1.0, 0.0),
        1 => c(0.0, 1.0),
        2 => c(-1.0, 0.0),
        _ => c(0.0, -1.0),
    }
}

fn pauli_flip_mask(p: &PauliOp) -> usize {
    let n = p.lattice().site_count();
    let mut m = 0usize;
    for i in 0..n {
        if gf2::get_bit(p.x_bits(), i) {
            m |= 1 << i;
        }
    }
    m
}

/// Applies a Pauli monomial to a statevector (which may carry extra high
/// ancilla bits; the Pauli acts on the low lattice bits).
pub fn apply_pauli_vec(amps: &DVector<C64>, p: &PauliOp) -> DVector<C64> {
    let n = p.lattice().site_count();
    let dim = amps.len();
    debug_assert!(dim % (1 << n) == 0);
    let flip = pauli_flip_mask(p);
    let mut out = DVector::zeros(dim);
    for b in 0..dim {
        let sys = b & ((1 << n) - 1);
        out[b ^ flip] += pauli_phase_on(p, sys) * amps[b];
    }
    out
}

/// The dense matrix of a Pauli operator.
pub fn pauli_matrix(p: &PauliOp) -> DMatrix<C64> {
    let n = p.lattice().site_count();
    let dim = 1usize << n;
    let flip = pauli_flip_mask(p);
    let mut m = DMatrix::zeros(dim, dim);
    for b in 0..dim {
        m[(b ^ flip, b)] = pauli_phase_on(p, b);
    }
    m
}

/// Marginal of a pure state on the listed qubits without forming the full
/// density matrix. Reshapes the amplitudes into a kept-by-traced matrix A and
/// returns A A^dag, so memory stays linear in the state vector.
pub fn pure_marginal(amps: &DVector<C64>, n: usize, keep: &[usize]) -> DMatrix<C64> {
    let kept_dim = 1usize << keep.len();
    let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let traced_dim = 1usize << traced.len();
    let mut a = DMatrix::<C64>::zeros(kept_dim, traced_dim);
    for b in 0..amps.len() {
        let mut row = 0usize;
        for (pos, &q) in keep.iter().enumerate() {
            row |= (b >> q & 1) << pos;
        }
        let mut col = 0usize;
        for (pos, &q) in traced.iter().enumerate() {
            col |= (b >> q & 1) << pos;
        }
        a[(row, col)] = amps[b];
    }
    &a * a.adjoint()
}

pub fn pauli_expectation_vec(amps: &DVector<C64>, p: &PauliOp) -> C64 {
    let applied = apply_pauli_vec(amps, p);
    amps.dotc(&applied)
}

/// Partial trace keeping the listed qubits (of an n-qubit system), in their
/// original bit order.
pub fn partial_trace(rho: &DMatrix<C64>, n: usize, keep: &[usize]) -> DMatrix<C64> {
    let k = keep.len();
    let kept_dim = 1usize << k;
    let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let traced_dim = 1usize << traced.len();
    let assemble = |bits_keep: usize, bits_tr: usize| -> usize {
        let mut b = 0usize;
        for (pos, &q) in keep.iter().enumerate() {
            if bits_keep >> pos & 1 == 1 {
                b |= 1 << q;
            }
        }
        for (pos, &q) in traced.iter().enumerate() {
            if bits_tr >> pos & 1 == 1 {
                b |= 1 << q;
            }
        }
        b
    };
    let mut out = DMatrix::zeros(kept_dim, kept_dim);
    for i in 0..kept_dim {
        for j in 0..kept_dim {
            let mut acc = c(0.0, 0.0);
            for t in 0..traced_dim {
                acc += rho[(assemble(i, t), assemble(j, t))];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// Eigendecomposition of a Hermitian matrix. Tries the library QR-based
/// solver first; that solver can emit NaNs on exactly rank-deficient
/// inputs, so the result is validated and a cyclic Jacobi sweep is used
/// as a slow reliable fallback.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let eig = m.clone().symmetric_eigen();
    let finite = eig.eigenvalues.iter().all(|v| v.is_finite());
    if finite {
        // spot-check the dominant eigenpair
        let mut best = 0usize;
        for (i, v) in eig.eigenvalues.iter().enumerate() {
            if v.abs() > eig.eigenvalues[best].abs() {
                best = i;
            }
        }
        let v0 = eig.eigenvectors.column(best);
        let resid = (m * v0 - v0 * c(eig.eigenvalues[best], 0.0)).norm();
        if resid < 1e-8 * (1.0 + m.norm()) {
            return (eig.eigenvalues.iter().cloned().collect(), eig.eigenvectors);
        }
    }
    jacobi_eigen(m)
}

fn jacobi_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    let mut a = m.clone();
    let mut vecs = DMatrix::<C64>::identity(n, n);
    let scale = 1.0 + m.norm();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() < 1e-13 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let beta = a[(p, q)];
                let ab = beta.norm();
                if ab < 1e-15 * scale {
                    continue;
                }
                let e = beta / c(ab, 0.0);
                let alpha = a[(p, p)].re;
                let gamma = a[(q, q)].re;
                let tau = (gamma - alpha) / (2.0 * ab);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let cc = 1.0 / (1.0 + t * t).sqrt();
                let ss = t * cc;
                // plane rotation J = [[c, s], [-s e*, c e*]] zeroing a_pq
                let j11 = c(cc, 0.0);
                let j12 = c(ss, 0.0);
                let j21 = -c(ss, 0.0) * e.conj();
                let j22 = c(cc, 0.0) * e.conj();
                for i in 0..n {
                    let (aip, aiq) = (a[(i, p)], a[(i, q)]);
                    a[(i, p)] = aip * j11 + aiq * j21;
                    a[(i, q)] = aip * j12 + aiq * j22;
                    let (vip, viq) = (vecs[(i, p)], vecs[(i, q)]);
                    vecs[(i, p)] = vip * j11 + viq * j21;
                    vecs[(i, q)] = vip * j12 + viq * j22;
                }
                for i in 0..n {
                    let (api, aqi) = (a[(p, i)], a[(q, i)]);
                    a[(p, i)] = j11.conj() * api + j21.conj() * aqi;
                    a[(q, i)] = j12.conj() * api + j22.conj() * aqi;
                }
            }
        }
    }
    let vals: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    (vals, vecs)
}

/// Hermitian square root of a PSD matrix (negative eigenvalues clamped).
pub fn sqrt_psd(m: &DMatrix<C64>) -> DMatrix<C64> {
    let (vals, q) = hermitian_eigen(m);
    let mut d = DMatrix::zeros(m.nrows(), m.ncols());
    for (i, v) in vals.iter().enumerate() {
        d[(i, i)] = c(v.max(0.0).sqrt(), 0.0);
    }
    &q * d * q.adjoint()
}

/// Extracts the state vector of a numerically rank-one density matrix.
fn pure_part(rho: &DMatrix<C64>) -> Option<DVector<C64>> {
    let purity: f64 = (rho * rho).diagonal().iter().map(|v| v.re).sum();
    if (purity - 1.0).abs() > 1e-10 {
        return None;
    }
    let mut best = 0usize;
    for i in 0..rho.nrows() {
        if rho[(i, i)].re > rho[(best, best)].re {
            best = i;
        }
    }
    let col = rho.column(best).clone_owned();
    let nrm: f64 = col.norm();
    if nrm < 1e-12 {
        return None;
    }
    Some(col / c(nrm, 0.0))
}

/// Uhlmann fidelity F(ρ,σ) = (Tr √(√ρ σ √ρ))².
pub fn fidelity(rho: &DMatrix<C64>, sigma: &DMatrix<C64>) -> Result<f64> {
    if rho.shape() != sigma.shape() {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    // pure states admit the direct overlap formula
    if let Some(psi) = pure_part(rho) {
        return Ok((psi.adjoint() * sigma * &psi)[(0, 0)].re.clamp(0.0, 1.0));
    }
    if let Some(phi) = pure_part(sigma) {
        return Ok((phi.adjoint() * rho * &phi)[(0, 0)].re.clamp(0.0, 1.0));
    }
    let sr = sqrt_psd(rho);
    let inner = &sr * sigma * &sr;
    // inner is PSD, so its singular values are its eigenvalues
    let tr: f64 = inner
        .svd(false, false)
        .singular_values
        .iter()
        .map(|&v| v.max(0.0).sqrt())
        .sum();
    Ok((tr * tr).min(1.0))
}

/// Purified distance √(1−F); upper bounds the trace distance.
pub fn purified_distance(rho: &DMatrix<C64>, sigma: &DMatrix<C64>) -> Result<f64> {
    Ok((1.0 - fidelity(rho, sigma)?).max(0.0).sqrt())
}

/// Trace norm ‖A‖₁ (sum of singular values).
pub fn trace_norm(a: &DMatrix<C64>) -> f64 {
    a.clone().svd(false, false).singular_values.iter().sum()
}

/// Operator norm ‖A‖∞ (largest singular value).
pub fn operator_norm(a: &DMatrix<C64>) -> f64 {
    a.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Ground-space projector ∏ (1+s)/2 over the restricted generators.
pub fn ground_projector(code: &RestrictedCode) -> Result<DenseOperator> {
    let n = code.lattice().site_count();
    check_cap(n, cap_mixed())?;
    let dim = 1usize << n;
    let mut proj = DMatrix::identity(dim, dim);
    for s in code.generators() {
        let m = pauli_matrix(s);
        proj = (&proj + &proj * m) / c(2.0, 0.0);
    }
    Ok(DenseOperator::new(proj, "ground projector"))
}

/// A pure state on system ∪ ancilla qubits purifying a system density
/// matrix; ancillas occupy the high bits.
#[derive(Debug, Clone)]
pub struct PurifiedState {
    pub n_sys: usize,
    pub n_anc: usize,
    pub amps: DVector<C64>,
}

impl PurifiedState {
    pub fn from_pure(n: usize, amps: DVector<C64>) -> Self {
        PurifiedState {
            n_sys: n,
            n_anc: 0,
            amps,
        }
    }

    /// Spectral purification: |ψ⟩ = Σ √λ_i |v_i⟩|i⟩_E.
    pub fn from_density(n: usize, rho: &DMatrix<C64>) -> Result<Self> {
        let (vals, vecs) = hermitian_eigen(rho);
        let mut kept: Vec<(f64, usize)> = vals
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 1e-12)
            .map(|(i, &v)| (v, i))
            .collect();
        kept.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        // a density matrix on n qubits has rank at most 2^n
        kept.truncate(1usize << n);
        let rank = kept.len().max(1);
        let n_anc = usize::BITS as usize - (rank - 1).leading_zeros() as usize;
        let n_anc = if rank == 1 { 0 } else { n_anc };
        let sys_dim = 1usize << n;
        let dim = sys_dim << n_anc;
        let mut amps = DVector::zeros(dim);
        for (slot, &(val, col)) in kept.iter().enumerate() {
            let vec = vecs.column(col);
            let w = c(val.sqrt(), 0.0);
            for b in 0..sys_dim {
                amps[b + (slot << n)] += w * vec[b];
            }
        }
        let norm: f64 = amps.norm();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidInput(format!(
                "purification norm {norm}; input not a unit-trace state"
            )));
        }
        amps /= c(norm, 0.0);
        Ok(PurifiedState {
            n_sys: n,
            n_anc,
            amps,
        })
    }

    pub fn total_qubits(&self) -> usize {
        self.n_sys + self.n_anc
    }

    /// Marginal on the listed system qubits.
    pub fn marginal(&self, keep: &[usize]) -> DMatrix<C64> {
        pure_marginal(&self.amps, self.total_qubits(), keep)
    }

    pub fn system_density(&self) -> DMatrix<C64> {
        self.marginal(&(0..self.n_sys).collect::<Vec<_>>())
    }
}

/// Random nonempty signed Pauli on the lattice, shared by oracle tests.
#[cfg(test)]
pub(crate) fn tests_random_pauli<R: rand::Rng>(l: &Lattice, rng: &mut R) -> PauliOp {
    use crate::lattice::SiteCoord;
    use crate::pauli::{Axis, Phase};
    loop {
        let factors: Vec<(SiteCoord, Axis)> = l
            .sites()
            .filter_map(|v| match rng.gen_range(0..4) {
                0 => Some((v, Axis::X)),
                1 => Some((v, Axis::Y)),
                2 => Some((v, Axis::Z)),
                _ => None,
            })
            .collect();
        if factors.is_empty() {
            continue;
        }
        let phase = if rng.gen_bool(0.5) {
            Phase::PlusOne
        } else {
            Phase::MinusOne
        };
        return PauliOp::from_sparse(*l, phase, &factors).unwrap();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Boundary, SiteCoord};
    use crate::pauli::{Axis, Phase};
    use crate::stabilizer::StabilizerState;
    use crate::toric::ToricCode;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lat(w: usize, h: usize) -> Lattice {
        Lattice::new(w, h, Boundary::Open).unwrap()
    }

    #[test]
    fn empty_circuit_is_basis_state() {
        let l = lat(2, 2);
        let s = dense_from_circuit(&Circuit::new(vec![]), &l).unwrap();
        match s {
            DenseState::Pure { amps, .. } => {
                assert_eq!(amps[0], c(1.0, 0.0));
                assert!(amps.rows_range(1..).norm() < 1e-15);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn hadamard_superposition() {
        let l = lat(2, 2);
        let s = dense_from_circuit(&Circuit::from_text("H (0,0)").unwrap(), &l).unwrap();
        let DenseState::Pure { amps, .. } = s else { panic!() };
        let v = std::f64::consts::FRAC_1_SQRT_2;
        assert!((amps[0] - c(v, 0.0)).norm() < 1e-12);
        assert!((amps[1] - c(v, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn engine_and_oracle_agree_on_random_circuits() {
        let l = lat(3, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..40 {
            let circ = Circuit::random_local(&l, 4, &mut rng);
            let mut tab = StabilizerState::init_zero(l);
            tab.apply_circuit(&circ).unwrap();
            let DenseState::Pure { amps, .. } = dense_from_circuit(&circ, &l).unwrap() else {
                panic!()
            };
            for _ in 0..6 {
                let p = tests_random_pauli(&l, &mut rng);
                let want = tab.expectation(&p).unwrap() as f64;
                let got = pauli_expectation_vec(&amps, &p);
                assert!(
                    (got.re - want).abs() < 1e-10 && got.im.abs() < 1e-10,
                    "mismatch for {}: engine {want} oracle {got}",
                    p.to_text()
                );
            }
        }
    }

    #[test]
    fn pauli_matrix_matches_monomial_action() {
        let l = lat(2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let p = tests_random_pauli(&l, &mut rng);
            let m = pauli_matrix(&p);
            let mut v = DVector::zeros(16);
            for i in 0..16 {
                v[i] = c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            }
            let via_matrix = &m * &v;
            let via_monomial = apply_pauli_vec(&v, &p);
            assert!((via_matrix - via_monomial).norm() < 1e-12);
        }
    }

    #[test]
    fn purified_distance_examples() {
        let l = lat(2, 2);
        let zero = dense_from_circuit(&Circuit::new(vec![]), &l).unwrap();
        let plus = dense_from_circuit(&Circuit::from_text("H (0,0)").unwrap(), &l).unwrap();
        let flipped = dense_from_circuit(&Circuit::from_text("X (0,0)").unwrap(), &l).unwrap();
        let d_same = purified_distance(&zero.density(), &zero.density()).unwrap();
        assert!(d_same < 1e-7);
        let d_orth = purified_distance(&zero.density(), &flipped.density()).unwrap();
        assert!((d_orth - 1.0).abs() < 1e-9);
        let d_plus = purified_distance(&zero.density(), &plus.density()).unwrap();
        assert!((d_plus - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
    }

    #[test]
    fn ground_projector_rank() {
        let l = Lattice::new(3, 3, Boundary::Open).unwrap();
        let code = ToricCode::build(l).unwrap();
        let rc = code.restricted(&l.full_region()).unwrap();
        let proj = ground_projector(&rc).unwrap();
        assert!(proj.projector_residual() < 1e-10);
        let rank: f64 = proj.matrix.diagonal().iter().map(|v| v.re).sum();
        let expected = 1usize << (9 - rc.num_independent());
        assert!((rank - expected as f64).abs() < 1e-8);

        // single ZZ generator halves the dimension: even-parity projector
        let l2 = lat(2, 2);
        let zz = PauliOp::from_sparse(
            l2,
            Phase::PlusOne,
            &[(SiteCoord::new(0, 0), Axis::Z), (SiteCoord::new(1, 0), Axis::Z)],
        )
        .unwrap();
        let m = pauli_matrix(&zz);
        let dim = 16;
        let proj2 = (DMatrix::identity(dim, dim) + m) / c(2.0, 0.0);
        let rank2: f64 = proj2.diagonal().iter().map(|v| v.re).sum();
        assert!((rank2 - 8.0).abs() < 1e-12);
    }

    #[test]
    fn purification_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // random 2-qubit mixed state
        let mut g = DMatrix::zeros(4, 4);
        for i in 0..4 {
            for j in 0..4 {
                g[(i, j)] = c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            }
        }
        let mut rho = &g * g.adjoint();
        let tr: f64 = rho.diagonal().iter().map(|v| v.re).sum();
        rho /= c(tr, 0.0);
        let psi = PurifiedState::from_density(2, &rho).unwrap();
        let back = psi.system_density();
        assert!((back - rho).norm() < 1e-9);
    }

    #[test]
    fn partial_trace_of_product_state() {
        let l = lat(2, 2);
        let s = dense_from_circuit(&Circuit::from_text("H (0,0); X (1,0)").unwrap(), &l).unwrap();
        let rho = s.density();
        let r0 = partial_trace(&rho, 4, &[0]);
        assert!((r0[(0, 0)].re - 0.5).abs() < 1e-12);
        assert!((r0[(0, 1)].re - 0.5).abs() < 1e-12);
        let r1 = partial_trace(&rho, 4, &[1]);
        assert!((r1[(1, 1)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn capacity_errors() {
        let l = Lattice::new(4, 4, Boundary::Open).unwrap();
        let err = dense_from_circuit(&Circuit::new(vec![]), &l).unwrap_err();
        assert!(matches!(err, Error::Capacity { requested: 16, .. }));
    }
}
