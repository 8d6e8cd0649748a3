//! Tableau-based stabilizer simulation with exact phase tracking,
//! Pauli expectations and stochastic Pauli-noise trajectory ensembles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::gf2::{self, BitMat, BitVec};
use crate::lattice::Lattice;
use crate::pauli::{Axis, PauliOp, Phase};

/// Stabilizer + destabilizer tableau over the sites of a lattice.
///
/// Invariants: the 2n rows are independent over GF(2), stabilizer rows
/// mutually commute, and destabilizer i anticommutes with stabilizer i only.
#[derive(Debug, Clone)]
pub struct StabilizerState {
    lattice: Lattice,
    stab: Vec<PauliOp>,
    destab: Vec<PauliOp>,
}

impl StabilizerState {
    /// The all-zeros state: stabilizers Z_i, destabilizers X_i.
    pub fn init_zero(lattice: Lattice) -> Self {
        let stab = lattice
            .sites()
            .map(|v| PauliOp::single(lattice, v, Axis::Z).unwrap())
            .collect();
        let destab = lattice
            .sites()
            .map(|v| PauliOp::single(lattice, v, Axis::X).unwrap())
            .collect();
        StabilizerState {
            lattice,
            stab,
            destab,
        }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn qubits(&self) -> usize {
        self.lattice.site_count()
    }

    pub fn stabilizers(&self) -> &[PauliOp] {
        &self.stab
    }

    pub fn destabilizers(&self) -> &[PauliOp] {
        &self.destab
    }

    /// Builds a state stabilized by the given commuting independent
    /// generators (all with sign +1), completing them deterministically to a
    /// full tableau. The completion fixes one state of the joint
    /// +1-eigenspace (lexicographically smallest completion vectors first).
    pub fn from_generators(lattice: Lattice, generators: &[PauliOp]) -> Result<Self> {
        let n = lattice.site_count();
        if generators.len() > n {
            return Err(Error::InvalidInput(format!(
                "{} generators exceed {} qubits",
                generators.len(),
                n
            )));
        }
        for (i, g) in generators.iter().enumerate() {
            if g.lattice() != &lattice {
                return Err(Error::LatticeMismatch("generator on wrong lattice".into()));
            }
            if !g.is_hermitian() {
                return Err(Error::InvalidInput(format!(
                    "generator {i} is not Hermitian"
                )));
            }
            for h in &generators[i + 1..] {
                if !g.commutes(h)? {
                    return Err(Error::InvalidInput(format!(
                        "generator {i} anticommutes with a later generator"
                    )));
                }
            }
        }
        let mut rows: Vec<(BitVec, BitVec)> = generators
            .iter()
            .map(|g| (g.x_bits().to_vec(), g.z_bits().to_vec()))
            .collect();
        if symplectic_rank(&rows, n) != rows.len() {
            return Err(Error::InvalidInput(
                "generators are dependent over GF(2)".into(),
            ));
        }

        // complete to n commuting independent rows via the symplectic
        // centralizer of the current set
        while rows.len() < n {
            let centralizer = centralizer_basis(&rows, n);
            let mut span = BitMat::new(2 * n);
            for r in &rows {
                span.push_row(concat_xz(r, n));
            }
            let base_rank = span.rank();
            let mut added = false;
            for cand in centralizer {
                let mut trial = span.clone();
                trial.push_row(cand.clone());
                if trial.rank() > base_rank {
                    rows.push(split_xz(&cand, n));
                    added = true;
                    break;
                }
            }
            if !added {
                return Err(Error::InvalidInput(
                    "cannot complete stabilizer group (inconsistent generators)".into(),
                ));
            }
        }

        // destabilizers: solve <d, g_j> = delta_ij, then repair pairwise
        // commutation by multiplying with stabilizers
        let mut pairing = BitMat::new(2 * n);
        for row in &rows {
            pairing.push_row(symplectic_functional(row, n));
        }
        let rhs: Vec<BitVec> = (0..n)
            .map(|i| {
                let mut e = gf2::zero_vec(n);
                gf2::set_bit(&mut e, i, true);
                e
            })
            .collect();
        let mut destab_rows: Vec<(BitVec, BitVec)> = pairing
            .solve_many(&rhs)
            .ok_or_else(|| Error::InvalidInput("destabilizer system inconsistent".into()))?
            .iter()
            .map(|d| split_xz(d, n))
            .collect();
        for i in 0..n {
            for j in i + 1..n {
                if symplectic_bits(&destab_rows[i], &destab_rows[j]) {
                    let g = rows[i].clone();
                    gf2::xor_in(&mut destab_rows[j].0, &g.0);
                    gf2::xor_in(&mut destab_rows[j].1, &g.1);
                }
            }
        }

        let stab = rows
            .into_iter()
            .map(|(x, z)| hermitian_plus(lattice, x, z))
            .collect();
        let destab = destab_rows
            .into_iter()
            .map(|(x, z)| hermitian_plus(lattice, x, z))
            .collect();
        let state = StabilizerState {
            lattice,
            stab,
            destab,
        };
        debug_assert!(state.check_invariants().is_ok());
        Ok(state)
    }

    /// Verifies tableau invariants; used by tests and debug assertions.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.qubits();
        let mut m = BitMat::new(2 * n);
        for p in self.stab.iter().chain(&self.destab) {
            m.push_row(concat_xz(&(p.x_bits().to_vec(), p.z_bits().to_vec()), n));
        }
        if m.rank() != 2 * n {
            return Err(Error::InvalidInput("tableau rows are dependent".into()));
        }
        for i in 0..n {
            for j in 0..n {
                if self.stab[i].symplectic(&self.stab[j])? {
                    return Err(Error::InvalidInput(format!(
                        "stabilizers {i},{j} anticommute"
                    )));
                }
                let want = i == j;
                if self.destab[i].symplectic(&self.stab[j])? != want {
                    return Err(Error::InvalidInput(format!(
                        "destabilizer {i} pairing with stabilizer {j} broken"
                    )));
                }
                if self.destab[i].symplectic(&self.destab[j])? {
                    return Err(Error::InvalidInput(format!(
                        "destabilizers {i},{j} anticommute"
                    )));
                }
            }
        }
        for (i, s) in self.stab.iter().enumerate() {
            if !s.is_hermitian() {
                return Err(Error::InvalidInput(format!("stabilizer {i} not Hermitian")));
            }
        }
        Ok(())
    }

    /// Conjugates the tableau by the circuit, layer by layer. Returns the
    /// number of layers applied (circuit depth).
    pub fn apply_circuit(&mut self, circuit: &Circuit) -> Result<usize> {
        circuit.validate(&self.lattice)?;
        for layer in &circuit.layers {
            for gate in layer {
                for row in self.stab.iter_mut().chain(self.destab.iter_mut()) {
                    row.conjugate_by_gate(gate);
                }
            }
        }
        Ok(circuit.depth())
    }

    /// Applies a Pauli operator (e.g. a sampled error) to the state:
    /// stabilizer signs flip where rows anticommute with it.
    pub fn apply_pauli(&mut self, e: &PauliOp) -> Result<()> {
        for row in self.stab.iter_mut().chain(self.destab.iter_mut()) {
            if row.symplectic(e)? {
                row.flip_sign();
            }
        }
        Ok(())
    }

    /// Exact expectation of a Hermitian Pauli: +1/-1 if (+/-)P is in the
    /// stabilizer group, 0 if P anticommutes with some generator.
    pub fn expectation(&self, p: &PauliOp) -> Result<i8> {
        if p.lattice() != &self.lattice {
            return Err(Error::LatticeMismatch("operator on wrong lattice".into()));
        }
        if !p.is_hermitian() {
            return Err(Error::InvalidInput(
                "expectation requires a Hermitian Pauli (phase ±1)".into(),
            ));
        }
        for s in &self.stab {
            if p.symplectic(s)? {
                return Ok(0);
            }
        }
        // p commutes with the full group: decompose over generators using
        // the destabilizer pairing, then resolve the sign exactly
        let mut prod = PauliOp::identity(self.lattice);
        for (d, s) in self.destab.iter().zip(&self.stab) {
            if p.symplectic(d)? {
                prod = prod.mul(s)?;
            }
        }
        debug_assert_eq!(prod.x_bits(), p.x_bits());
        debug_assert_eq!(prod.z_bits(), p.z_bits());
        match (prod.internal_exp() + 4 - p.internal_exp()) % 4 {
            0 => Ok(1),
            2 => Ok(-1),
            _ => Err(Error::InvalidInput(
                "non-Hermitian sign resolution (tableau corrupt?)".into(),
            )),
        }
    }
}

fn concat_xz(row: &(BitVec, BitVec), n: usize) -> BitVec {
    let mut v = gf2::zero_vec(2 * n);
    for i in 0..n {
        if gf2::get_bit(&row.0, i) {
            gf2::set_bit(&mut v, i, true);
        }
        if gf2::get_bit(&row.1, i) {
            gf2::set_bit(&mut v, n + i, true);
        }
    }
    v
}

fn split_xz(v: &[u64], n: usize) -> (BitVec, BitVec) {
    let mut x = gf2::zero_vec(n);
    let mut z = gf2::zero_vec(n);
    for i in 0..n {
        if gf2::get_bit(v, i) {
            gf2::set_bit(&mut x, i, true);
        }
        if gf2::get_bit(v, n + i) {
            gf2::set_bit(&mut z, i, true);
        }
    }
    (x, z)
}

fn symplectic_bits(a: &(BitVec, BitVec), b: &(BitVec, BitVec)) -> bool {
    gf2::and_parity(&a.0, &b.1) ^ gf2::and_parity(&a.1, &b.0)
}

fn symplectic_rank(rows: &[(BitVec, BitVec)], n: usize) -> usize {
    let mut m = BitMat::new(2 * n);
    for r in rows {
        m.push_row(concat_xz(r, n));
    }
    m.rank()
}

/// Basis of all [x|z] vectors commuting with every given row.
fn centralizer_basis(rows: &[(BitVec, BitVec)], n: usize) -> Vec<BitVec> {
    let mut constraints = BitMat::new(2 * n);
    for row in rows {
        constraints.push_row(symplectic_functional(row, n));
    }
    constraints.nullspace()
}

/// The functional d ↦ ⟨g, d⟩ over unknowns d = [x_d | z_d] as a 2n-bit row.
fn symplectic_functional(g: &(BitVec, BitVec), n: usize) -> BitVec {
    let mut f = gf2::zero_vec(2 * n);
    for i in 0..n {
        if gf2::get_bit(&g.1, i) {
            gf2::set_bit(&mut f, i, true);
        }
        if gf2::get_bit(&g.0, i) {
            gf2::set_bit(&mut f, n + i, true);
        }
    }
    f
}

/// Hermitian Pauli with exposed phase +1 from raw symplectic bits.
fn hermitian_plus(lattice: Lattice, x: BitVec, z: BitVec) -> PauliOp {
    let y_count = gf2::and_count(&x, &z);
    PauliOp::from_bits(lattice, x, z, (y_count % 4) as u8)
}

impl PauliOp {
    pub(crate) fn flip_sign(&mut self) {
        let t = self.internal_exp();
        *self = PauliOp::from_bits(
            *self.lattice(),
            self.x_bits().to_vec(),
            self.z_bits().to_vec(),
            (t + 2) % 4,
        );
    }
}

/// Independent per-site Pauli error rates.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct NoiseModel {
    pub px: f64,
    pub py: f64,
    pub pz: f64,
}

impl NoiseModel {
    pub fn new(px: f64, py: f64, pz: f64) -> Result<Self> {
        let ok = |p: f64| (0.0..=1.0).contains(&p);
        if !ok(px) || !ok(py) || !ok(pz) || px + py + pz > 1.0 + 1e-12 {
            return Err(Error::InvalidInput(format!(
                "invalid noise probabilities ({px}, {py}, {pz})"
            )));
        }
        Ok(NoiseModel { px, py, pz })
    }

    pub fn is_zero(&self) -> bool {
        self.px == 0.0 && self.py == 0.0 && self.pz == 0.0
    }
}

/// A seeded ensemble of Pauli-noise trajectories over a base state.
///
/// Shot i draws its errors from an RNG stream derived from (seed, i), so
/// any partition of shots across workers reproduces identical trajectories.
#[derive(Debug, Clone)]
pub struct TrajectoryEnsemble {
    pub base: StabilizerState,
    pub noise: NoiseModel,
    pub shots: usize,
    pub seed: u64,
}

/// Exact outcome counts of a {-1, 0, +1}-valued per-shot observable.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OutcomeCounts {
    pub minus: u64,
    pub zero: u64,
    pub plus: u64,
}

impl OutcomeCounts {
    pub fn merge(self, other: OutcomeCounts) -> OutcomeCounts {
        OutcomeCounts {
            minus: self.minus + other.minus,
            zero: self.zero + other.zero,
            plus: self.plus + other.plus,
        }
    }

    pub fn record(&mut self, v: i8) {
        match v {
            -1 => self.minus += 1,
            0 => self.zero += 1,
            1 => self.plus += 1,
            _ => unreachable!(),
        }
    }

    pub fn total(&self) -> u64 {
        self.minus + self.zero + self.plus
    }

    /// (mean, stderr) from the exact counts.
    pub fn stats(&self) -> (f64, f64) {
        let n = self.total();
        if n == 0 {
            return (0.0, 0.0);
        }
        let nf = n as f64;
        let sum = self.plus as f64 - self.minus as f64;
        let mean = sum / nf;
        if n == 1 {
            return (mean, 0.0);
        }
        let sum_sq = (self.plus + self.minus) as f64;
        let var = (sum_sq - nf * mean * mean).max(0.0) / (nf - 1.0);
        (mean, (var / nf).sqrt())
    }
}

impl TrajectoryEnsemble {
    pub fn new(base: StabilizerState, noise: NoiseModel, shots: usize, seed: u64) -> Result<Self> {
        if shots == 0 {
            return Err(Error::InvalidInput("shots must be >= 1".into()));
        }
        Ok(TrajectoryEnsemble {
            base,
            noise,
            shots,
            seed,
        })
    }

    /// The error Pauli drawn for a given shot; deterministic in (seed, shot).
    pub fn error_pauli(&self, shot: usize) -> Result<PauliOp> {
        if shot >= self.shots {
            return Err(Error::InvalidInput(format!(
                "shot {shot} out of range (shots = {})",
                self.shots
            )));
        }
        let lattice = *self.base.lattice();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(shot as u64);
        let mut factors = Vec::new();
        for v in lattice.sites() {
            let u: f64 = rng.gen();
            let axis = if u < self.noise.px {
                Some(Axis::X)
            } else if u < self.noise.px + self.noise.py {
                Some(Axis::Y)
            } else if u < self.noise.px + self.noise.py + self.noise.pz {
                Some(Axis::Z)
            } else {
                None
            };
            if let Some(a) = axis {
                factors.push((v, a));
            }
        }
        PauliOp::from_sparse(lattice, Phase::PlusOne, &factors)
    }

    /// The base state with shot's error applied.
    pub fn sample_trajectory(&self, shot: usize) -> Result<StabilizerState> {
        let e = self.error_pauli(shot)?;
        let mut state = self.base.clone();
        state.apply_pauli(&e)?;
        Ok(state)
    }

    /// Exact outcome counts of ⟨P⟩ over all shots; order-independent.
    pub fn expectation_counts(&self, p: &PauliOp) -> Result<OutcomeCounts> {
        let base_exp = self.base.expectation(p)?;
        if base_exp == 0 {
            // errors are Paulis, so the anticommuting generator persists
            return Ok(OutcomeCounts {
                zero: self.shots as u64,
                ..Default::default()
            });
        }
        let counts = (0..self.shots)
            .into_par_iter()
            .map(|shot| {
                let e = self.error_pauli(shot).expect("shot in range");
                let flipped = e.symplectic(p).expect("same lattice");
                let v = if flipped { -base_exp } else { base_exp };
                let mut c = OutcomeCounts::default();
                c.record(v);
                c
            })
            .reduce(OutcomeCounts::default, OutcomeCounts::merge);
        Ok(counts)
    }

    /// (mean, stderr) of ⟨P⟩ over the ensemble.
    pub fn ensemble_expectation(&self, p: &PauliOp) -> Result<(f64, f64)> {
        Ok(self.expectation_counts(p)?.stats())
    }

    /// Per-generator violation counts: counts[i] = number of shots whose
    /// error anticommutes with generators[i] (given each base expectation is
    /// +1 or -1; zero-expectation generators yield a fixed 1/2 violation).
    pub fn violation_counts(&self, generators: &[PauliOp]) -> Result<Vec<OutcomeCounts>> {
        let base: Vec<i8> = generators
            .iter()
            .map(|g| self.base.expectation(g))
            .collect::<Result<_>>()?;
        let counts = (0..self.shots)
            .into_par_iter()
            .map(|shot| {
                let e = self.error_pauli(shot).expect("shot in range");
                generators
                    .iter()
                    .zip(&base)
                    .map(|(g, &b)| {
                        let mut c = OutcomeCounts::default();
                        if b == 0 {
                            c.record(0);
                        } else {
                            let flipped = e.symplectic(g).expect("same lattice");
                            c.record(if flipped { -b } else { b });
                        }
                        c
                    })
                    .collect::<Vec<_>>()
            })
            .reduce(
                || vec![OutcomeCounts::default(); generators.len()],
                |a, b| a.into_iter().zip(b).map(|(x, y)| x.merge(y)).collect(),
            );
        Ok(counts)
    }
}
