//! Local measurement projectors for circuit-prepared states and a
//! sampled estimator for how visible an operator is to local observers.
//!
//! For a state |psi> = U|0...0> and a region S, the projector is
//! Pi_S = U (|0><0|_S (x) 1) U'. Its algebraic laws are checked on random
//! small instances; residuals are exact matrix norms.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::dense::{
    circuit_unitary, operator_norm, partial_trace, pure_marginal, purified_distance, trace_norm,
    C64,
    DenseOperator, PurifiedState,
};
use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::lattice::{Lattice, Region, SiteCoord};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn region_mask(region: &Region, lattice: &Lattice) -> usize {
    let mut m = 0usize;
    for s in region.sites() {
        m |= 1 << lattice.index_of(s);
    }
    m
}

/// Pi_S = U (|0><0|_S (x) 1) U' for |psi> = U|0...0>.
pub fn lmp(circuit: &Circuit, lattice: &Lattice, region: &Region) -> Result<DenseOperator> {
    let u = circuit_unitary(circuit, lattice)?;
    let dim = u.nrows();
    let mask = region_mask(region, lattice);
    let mut m = DMatrix::zeros(dim, dim);
    // U D U' with D diagonal: column b of U survives iff b is zero on S
    for b in 0..dim {
        if b & mask == 0 {
            let col = u.column(b);
            m += col * col.adjoint();
        }
    }
    Ok(DenseOperator::new(m, format!("lmp[{} sites]", region.len())))
}

#[derive(Debug, Clone, Serialize)]
pub struct LawResult {
    pub name: String,
    pub trials: usize,
    pub passes: usize,
    pub worst_residual: f64,
    pub tolerance: f64,
}

impl LawResult {
    pub fn holds(&self) -> bool {
        self.passes == self.trials
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LawSuiteReport {
    pub laws: Vec<LawResult>,
    pub all_hold: bool,
}

fn random_region<R: Rng>(lattice: &Lattice, rng: &mut R) -> Region {
    loop {
        let picked: Vec<SiteCoord> = lattice.sites().filter(|_| rng.gen_bool(0.4)).collect();
        if !picked.is_empty() {
            return lattice.region_from(picked).unwrap();
        }
    }
}

fn random_density<R: Rng>(dim: usize, rng: &mut R) -> DMatrix<C64> {
    let mut g = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            g[(i, j)] = c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        }
    }
    let mut rho = &g * g.adjoint();
    let tr: f64 = rho.diagonal().iter().map(|v| v.re).sum();
    rho /= c(tr, 0.0);
    rho
}

fn random_state<R: Rng>(dim: usize, rng: &mut R) -> DVector<C64> {
    let mut v = DVector::zeros(dim);
    for i in 0..dim {
        v[i] = c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
    }
    let n: f64 = v.norm();
    v / c(n, 0.0)
}

/// Random Hermitian operator supported on the given qubits, embedded into
/// the full register, with operator norm scaled to about 1.
fn random_local_hermitian<R: Rng>(n: usize, qubits: &[usize], rng: &mut R) -> DMatrix<C64> {
    let k = qubits.len();
    let small = {
        let mut g = DMatrix::<C64>::zeros(1 << k, 1 << k);
        for i in 0..1 << k {
            for j in 0..1 << k {
                g[(i, j)] = c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            }
        }
        let h = (&g + g.adjoint()) / c(2.0, 0.0);
        let nrm = operator_norm(&h);
        h / c(nrm.max(1e-12), 0.0)
    };
    let dim = 1usize << n;
    let mut full = DMatrix::zeros(dim, dim);
    let project = |b: usize| -> usize {
        let mut s = 0usize;
        for (pos, &q) in qubits.iter().enumerate() {
            if b >> q & 1 == 1 {
                s |= 1 << pos;
            }
        }
        s
    };
    let rest_mask = {
        let mut m = 0usize;
        for q in qubits {
            m |= 1 << q;
        }
        !m & (dim - 1)
    };
    for row in 0..dim {
        for col in 0..dim {
            if row & rest_mask == col & rest_mask {
                full[(row, col)] = small[(project(row), project(col))];
            }
        }
    }
    full
}

struct LawTally {
    name: &'static str,
    tolerance: f64,
    trials: usize,
    passes: usize,
    worst: f64,
}

impl LawTally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        LawTally {
            name,
            tolerance,
            trials: 0,
            passes: 0,
            worst: 0.0,
        }
    }

    fn record(&mut self, residual: f64) {
        self.trials += 1;
        if residual <= self.tolerance {
            self.passes += 1;
        }
        if residual > self.worst {
            self.worst = residual;
        }
    }

    fn finish(self) -> LawResult {
        LawResult {
            name: self.name.to_string(),
            trials: self.trials,
            passes: self.passes,
            worst_residual: self.worst,
            tolerance: self.tolerance,
        }
    }
}

/// Verifies the projector algebra of the measurement family on random
/// regions of a circuit-prepared state.
pub fn check_lmp_laws(
    circuit: &Circuit,
    lattice: &Lattice,
    trials: usize,
    seed: u64,
) -> Result<LawSuiteReport> {
    let n = lattice.site_count();
    let dim = 1usize << n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = circuit_unitary(circuit, lattice)?;
    let mut psi = DVector::zeros(dim);
    psi[0] = c(1.0, 0.0);
    let psi: DVector<C64> = &u * psi;
    let depth = circuit.depth();

    let tol = 1e-9;
    let mut fix = LawTally::new("fixes the prepared state", tol);
    let mut merge = LawTally::new("product equals union projector", tol);
    let mut cover = LawTally::new("full cover collapses to the state", tol);
    let mut comm = LawTally::new("projectors commute", tol);
    let mut marginal = LawTally::new("inner-disk marginal recovery", tol);
    let mut absorb = LawTally::new("thickened projector absorbs local operators", tol);
    let mut demo = LawTally::new("absorption fails without thickening", tol);
    let mut contract = LawTally::new("vector error bounded by trace-norm error", tol);

    for _ in 0..trials {
        let s1 = random_region(lattice, &mut rng);
        let s2 = random_region(lattice, &mut rng);
        let p1 = lmp(circuit, lattice, &s1)?.matrix;
        let p2 = lmp(circuit, lattice, &s2)?.matrix;

        fix.record((&p1 * &psi - &psi).norm());
        let pu = lmp(circuit, lattice, &s1.union(&s2))?.matrix;
        merge.record((&p1 * &p2 - pu).norm());
        comm.record((&p1 * &p2 - &p2 * &p1).norm());

        // two regions that jointly cover the lattice
        let s3 = s1.complement();
        let p3 = lmp(circuit, lattice, &s3)?.matrix;
        let pure = &psi * psi.adjoint();
        cover.record((&p1 * &p3 - pure).norm());

        // perturbed state against a random projector from the family
        let phi = {
            let mut raw = psi.clone() + random_state(dim, &mut rng) * c(0.3, 0.0);
            let nr: f64 = raw.norm();
            raw /= c(nr, 0.0);
            raw
        };
        let rho_phi = &phi * phi.adjoint();
        let eps = trace_norm(&(&rho_phi - &p1 * &rho_phi * &p1));
        let vec_err = (&phi - &p1 * &phi).norm();
        contract.record((vec_err - eps).max(0.0));
    }

    // disk-geometry laws need a center with enough room
    let cx = lattice.width / 2;
    let cy = lattice.height / 2;
    let center = SiteCoord::new(cx, cy);
    let r_disk = depth + 1;
    for _ in 0..trials {
        let s = lattice.disk(center, r_disk)?;
        let p = lmp(circuit, lattice, &s)?.matrix;
        let inner = lattice.disk(center, r_disk - depth)?;
        let keep: Vec<usize> = inner.sites().map(|v| lattice.index_of(v)).collect();

        let sigma = random_density(dim, &mut rng);
        let proj = &p * &sigma * &p;
        let tr: f64 = proj.diagonal().iter().map(|v| v.re).sum();
        if tr < 1e-8 {
            continue;
        }
        let got = partial_trace(&(proj / c(tr, 0.0)), n, &keep);
        let want = partial_trace(&(&psi * psi.adjoint()), n, &keep);
        marginal.record((got - want).norm());

        // local operator inside the region is replaced by its expectation
        let sp = random_region(lattice, &mut rng);
        let mut support: Vec<usize> = sp.sites().map(|v| lattice.index_of(v)).collect();
        support.truncate(2);
        let o = random_local_hermitian(n, &support, &mut rng);
        let thick = lattice
            .region_from(sp.sites().take(support.len()))?
            .thicken(depth);
        let pt = lmp(circuit, lattice, &thick)?.matrix;
        let expect = (psi.adjoint() * &o * &psi)[(0, 0)];
        absorb.record((&pt * &o * &pt - &pt * expect).norm());

        // without the lightcone margin the same identity can fail
        if depth > 0 {
            let pn = lmp(circuit, lattice, &lattice.region_from(sp.sites().take(support.len()))?)?
                .matrix;
            demo.record((&pn * &o * &pn - &pn * expect).norm());
        }
    }

    let mut laws: Vec<LawResult> = vec![
        fix.finish(),
        merge.finish(),
        cover.finish(),
        comm.finish(),
        marginal.finish(),
        absorb.finish(),
        contract.finish(),
    ];
    let all_hold = laws.iter().all(|l| l.holds());
    // the demo law is inverted: it passes when a violation was exhibited
    let demo = demo.finish();
    if demo.trials > 0 {
        laws.push(LawResult {
            name: demo.name,
            trials: demo.trials,
            passes: if demo.worst_residual > 1e-3 { demo.trials } else { 0 },
            worst_residual: demo.worst_residual,
            tolerance: 1e-3,
        });
    }
    let all_hold = all_hold && laws.last().map_or(true, |l| l.holds());
    Ok(LawSuiteReport { laws, all_hold })
}

/// Applies a 2x2 unitary to qubit q of a register of `total` qubits.
pub fn apply_one_qubit(amps: &mut DVector<C64>, q: usize, u: &DMatrix<C64>) {
    let mask = 1usize << q;
    for b in 0..amps.len() {
        if b & mask == 0 {
            let (a0, a1) = (amps[b], amps[b | mask]);
            amps[b] = u[(0, 0)] * a0 + u[(0, 1)] * a1;
            amps[b | mask] = u[(1, 0)] * a0 + u[(1, 1)] * a1;
        }
    }
}

/// Applies a 4x4 unitary to qubits (q0, q1); q0 is the low index bit.
pub fn apply_two_qubit(amps: &mut DVector<C64>, q0: usize, q1: usize, u: &DMatrix<C64>) {
    let m0 = 1usize << q0;
    let m1 = 1usize << q1;
    for b in 0..amps.len() {
        if b & m0 == 0 && b & m1 == 0 {
            let idx = [b, b | m0, b | m1, b | m0 | m1];
            let old = [amps[idx[0]], amps[idx[1]], amps[idx[2]], amps[idx[3]]];
            for r in 0..4 {
                let mut acc = c(0.0, 0.0);
                for col in 0..4 {
                    acc += u[(r, col)] * old[col];
                }
                amps[idx[r]] = acc;
            }
        }
    }
}

/// Haar-like random unitary from the QR factorization of a Gaussian matrix.
pub fn random_unitary<R: Rng>(dim: usize, rng: &mut R) -> DMatrix<C64> {
    let mut g = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            g[(i, j)] = c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        }
    }
    g.qr().q()
}

/// Applies an operator on the system qubits (low bits) across all ancilla
/// blocks of a purified register.
pub fn apply_system_operator(amps: &DVector<C64>, n_sys: usize, m: &DMatrix<C64>) -> DVector<C64> {
    let sys_dim = 1usize << n_sys;
    let blocks = amps.len() / sys_dim;
    let mut out = DVector::zeros(amps.len());
    for blk in 0..blocks {
        let seg = amps.rows(blk * sys_dim, sys_dim);
        let res = m * seg;
        out.rows_mut(blk * sys_dim, sys_dim).copy_from(&res);
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct InvisibilityEstimate {
    pub delta_hat: f64,
    pub trials: usize,
    pub skipped: usize,
}

/// Sampled lower estimate of how visible `op` is on region A.
///
/// Each trial scrambles the purified state with random local unitaries on
/// qubits outside B (plus all purifying ancillas), applies the operator,
/// and compares the marginals on A before and after. The true visibility
/// is a supremum over adversaries, so this estimate only ever under-reports.
pub fn estimate_invisibility(
    psi: &PurifiedState,
    op: &DenseOperator,
    region_a: &[usize],
    region_b: &[usize],
    trials: usize,
    seed: u64,
) -> Result<InvisibilityEstimate> {
    let n_sys = psi.n_sys;
    if op.matrix.nrows() != 1 << n_sys {
        return Err(Error::InvalidInput("operator dimension != system".into()));
    }
    for q in region_a {
        if !region_b.contains(q) {
            return Err(Error::InvalidInput(
                "observation region must sit inside the protected region".into(),
            ));
        }
    }
    let total = psi.total_qubits();
    let free: Vec<usize> = (0..total)
        .filter(|q| *q >= n_sys || !region_b.contains(q))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut delta_hat: f64 = 0.0;
    let mut skipped = 0usize;
    for _ in 0..trials {
        let mut scrambled = psi.amps.clone();
        for _layer in 0..3 {
            let mut order = free.clone();
            use rand::seq::SliceRandom;
            order.shuffle(&mut rng);
            let mut it = order.into_iter();
            while let Some(q0) = it.next() {
                match it.next() {
                    Some(q1) => {
                        let u = random_unitary(4, &mut rng);
                        apply_two_qubit(&mut scrambled, q0, q1, &u);
                    }
                    None => {
                        let u = random_unitary(2, &mut rng);
                        apply_one_qubit(&mut scrambled, q0, &u);
                    }
                }
            }
        }
        let after = apply_system_operator(&scrambled, n_sys, &op.matrix);
        let nrm: f64 = after.norm();
        if nrm < 1e-8 {
            skipped += 1;
            continue;
        }
        let after = after / c(nrm, 0.0);
        let rho_before = pure_marginal(&scrambled, total, region_a);
        let rho_after = pure_marginal(&after, total, region_a);
        let d = purified_distance(&rho_before, &rho_after)?;
        if d > delta_hat {
            delta_hat = d;
        }
    }
    Ok(InvisibilityEstimate {
        delta_hat,
        trials,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Boundary;
    use crate::oracle::dense::{ground_projector, pauli_matrix, DenseState};
    use crate::toric::ToricCode;

    fn prep() -> (Lattice, Circuit) {
        let l = Lattice::new(4, 2, Boundary::Open).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let c = Circuit::random_local(&l, 2, &mut rng);
        (l, c)
    }

    #[test]
    fn lmp_is_projector() {
        let (l, circ) = prep();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = random_region(&l, &mut rng);
        let p = lmp(&circ, &l, &s).unwrap();
        assert!(p.projector_residual() < 1e-10);
    }

    #[test]
    fn laws_hold_on_random_instances() {
        let (l, circ) = prep();
        let report = check_lmp_laws(&circ, &l, 12, 7).unwrap();
        for law in &report.laws {
            assert!(
                law.holds(),
                "law {:?} failed: worst residual {}",
                law.name,
                law.worst_residual
            );
        }
        assert!(report.all_hold);
    }

    #[test]
    fn stabilizing_operator_is_invisible() {
        let l = Lattice::new(3, 3, Boundary::Open).unwrap();
        let code = ToricCode::build(l).unwrap();
        let state = code.ground_state().unwrap();
        // dense ground state: project |0...0> into the code space
        let rc = code.restricted(&l.full_region()).unwrap();
        let proj = ground_projector(&rc).unwrap();
        let mut v: DVector<C64> = DVector::zeros(1 << 9);
        v[0] = c(1.0, 0.0);
        let mut v = &proj.matrix * v;
        let nrm: f64 = v.norm();
        assert!(nrm > 1e-6);
        v /= c(nrm, 0.0);
        // sanity: same expectations as the tableau state on each generator
        for g in code.generators() {
            let m = pauli_matrix(g);
            let e = (v.adjoint() * &m * &v)[(0, 0)].re;
            assert!((e - state.expectation(g).unwrap() as f64).abs() < 1e-9);
        }
        let psi = PurifiedState::from_pure(9, v);
        // an interior plaquette acts invisibly: it stabilizes the state
        let p = pauli_matrix(&code.x_generators()[0]);
        let op = DenseOperator::new(p, "interior loop");
        let b: Vec<usize> = code.x_generators()[0]
            .support()
            .sites()
            .map(|s| l.index_of(s))
            .collect();
        let a = vec![b[0]];
        let est = estimate_invisibility(&psi, &op, &a, &b, 6, 42).unwrap();
        assert!(est.delta_hat < 1e-9, "delta_hat = {}", est.delta_hat);
        assert_eq!(est.skipped, 0);
    }

    #[test]
    fn visible_operator_is_detected() {
        // X on a qubit of |0..0> is perfectly visible on that qubit
        let l = Lattice::new(2, 2, Boundary::Open).unwrap();
        let zero = DenseState::pure(4, {
            let mut v = DVector::zeros(16);
            v[0] = c(1.0, 0.0);
            v
        })
        .unwrap();
        let DenseState::Pure { amps, .. } = zero else { panic!() };
        let psi = PurifiedState::from_pure(4, amps);
        let x = PauliOp::single(l, SiteCoord::new(0, 0), crate::pauli::Axis::X).unwrap();
        let op = DenseOperator::new(pauli_matrix(&x), "x0");
        let est = estimate_invisibility(&psi, &op, &[0], &[0, 1], 4, 3).unwrap();
        assert!((est.delta_hat - 1.0).abs() < 1e-9);
    }

    use crate::pauli::PauliOp;

    #[test]
    fn perturbation_bounds_visibility() {
        // perturbing the state by purified distance eps makes a stabilizing
        // operator at most 2*eps visible
        let l = Lattice::new(3, 3, Boundary::Open).unwrap();
        let code = ToricCode::build(l).unwrap();
        let rc = code.restricted(&l.full_region()).unwrap();
        let proj = ground_projector(&rc).unwrap();
        let mut v: DVector<C64> = DVector::zeros(1 << 9);
        v[0] = c(1.0, 0.0);
        let mut v = &proj.matrix * v;
        let nrm: f64 = v.norm();
        v /= c(nrm, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let noise = random_state(1 << 9, &mut rng);
        let mut pert = &v * c(1.0, 0.0) + noise * c(0.05, 0.0);
        let pn: f64 = pert.norm();
        pert /= c(pn, 0.0);
        let rho_a = &v * v.adjoint();
        let rho_b = &pert * pert.adjoint();
        let eps = purified_distance(&rho_a, &rho_b).unwrap();
        let psi = PurifiedState::from_pure(9, pert);
        let p = pauli_matrix(&code.x_generators()[0]);
        let op = DenseOperator::new(p, "interior loop");
        let b: Vec<usize> = code.x_generators()[0]
            .support()
            .sites()
            .map(|s| l.index_of(s))
            .collect();
        let est = estimate_invisibility(&psi, &op, &[b[0]], &b, 8, 11).unwrap();
        assert!(
            est.delta_hat <= 2.0 * eps + 1e-8,
            "delta_hat {} vs 2 eps {}",
            est.delta_hat,
            2.0 * eps
        );
    }
}
