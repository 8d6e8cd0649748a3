//! Exact small-system verification of the distance, norm, and detectability
//! inequalities that the large-lattice estimates rely on.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::dense::{
    circuit_unitary, ground_projector, operator_norm, pauli_matrix, purified_distance, C64,
    PurifiedState,
};
use super::lmp::random_unitary;
use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::gf2;
use crate::lattice::{Boundary, Lattice, Region, SiteCoord};
use crate::pauli::{Bipartition, PauliOp};
use crate::toric::ToricCode;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// One verified inequality: holds when lhs <= rhs + slack.
#[derive(Debug, Clone, Serialize)]
pub struct InequalityCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl InequalityCheck {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, slack: f64) -> Self {
        InequalityCheck {
            name: name.into(),
            lhs,
            rhs,
            slack,
        }
    }

    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + self.slack
    }
}

fn trace_re(m: &DMatrix<C64>) -> f64 {
    m.diagonal().iter().map(|v| v.re).sum()
}

/// Tr[P rho] for a Pauli monomial, in O(dim) time.
pub fn pauli_trace(rho: &DMatrix<C64>, p: &PauliOp) -> C64 {
    let n = p.lattice().site_count();
    let mut flip = 0usize;
    for i in 0..n {
        if gf2::get_bit(p.x_bits(), i) {
            flip |= 1 << i;
        }
    }
    let mut acc = c(0.0, 0.0);
    for b in 0..1usize << n {
        let mut zb = 0usize;
        for i in 0..n {
            if gf2::get_bit(p.z_bits(), i) && b >> i & 1 == 1 {
                zb += 1;
            }
        }
        let t = (p.internal_exp() as usize + 2 * zb) % 4;
        let phase = match t {
            0 => c(1.0, 0.0),
            1 => c(0.0, 1.0),
            2 => c(-1.0, 0.0),
            _ => c(0.0, -1.0),
        };
        acc += phase * rho[(b, b ^ flip)];
    }
    acc
}

/// Conjugates rho by the single-site Pauli axis at qubit q, in place-free
/// O(dim^2) time.
fn conjugate_site(rho: &DMatrix<C64>, q: usize, axis: u8) -> DMatrix<C64> {
    let dim = rho.nrows();
    let mask = match axis {
        0 | 1 => 1usize << q,
        _ => 0,
    };
    let mut out = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let sign = match axis {
                0 => 1.0,
                // Y rho Y and Z rho Z pick up (-1)^(bit_i + bit_j)
                _ => {
                    if (i >> q & 1) ^ (j >> q & 1) == 1 {
                        -1.0
                    } else {
                        1.0
                    }
                }
            };
            out[(i, j)] = c(sign, 0.0) * rho[(i ^ mask, j ^ mask)];
        }
    }
    out
}

/// Applies independent single-site depolarizing noise of strength p to
/// every qubit of a density matrix.
pub fn depolarize(rho: &DMatrix<C64>, n: usize, p: f64) -> DMatrix<C64> {
    let mut out = rho.clone();
    for q in 0..n {
        let x = conjugate_site(&out, q, 0);
        let y = conjugate_site(&out, q, 1);
        let z = conjugate_site(&out, q, 2);
        out = out * c(1.0 - p, 0.0) + (x + y + z) * c(p / 3.0, 0.0);
    }
    out
}

/// Dense ground state of a code: |0..0> projected into the code space.
pub fn dense_ground_state(code: &ToricCode) -> Result<DVector<C64>> {
    let l = *code.lattice();
    let rc = code.restricted(&l.full_region())?;
    let proj = ground_projector(&rc)?;
    let mut v: DVector<C64> = DVector::zeros(1 << l.site_count());
    v[0] = c(1.0, 0.0);
    let mut v = &proj.matrix * v;
    let nrm: f64 = v.norm();
    if nrm < 1e-9 {
        return Err(Error::InvalidInput(
            "basis state has no overlap with the code space".into(),
        ));
    }
    v /= c(nrm, 0.0);
    Ok(v)
}

#[derive(Debug, Clone, Serialize)]
pub struct GentleUnionReport {
    pub gentle: InequalityCheck,
    pub union: InequalityCheck,
    pub trials: usize,
    pub skipped: usize,
}

/// Random instances of two measurement facts on dimensions up to `dim_cap`:
/// measuring a high-probability projector disturbs a state by at most the
/// square root of the miss probability, and the miss probability of a
/// product of commuting projectors is at most the sum of the individual
/// miss probabilities.
pub fn check_gentle_and_union(trials: usize, dim_cap: usize, seed: u64) -> Result<GentleUnionReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_gentle: f64 = f64::NEG_INFINITY;
    let mut worst_union: f64 = f64::NEG_INFINITY;
    let mut skipped = 0usize;
    for _ in 0..trials {
        let dim = 1usize << rng.gen_range(2..=dim_cap.ilog2() as usize);
        let rho = random_density_dim(dim, &mut rng);
        let u = random_unitary(dim, &mut rng);
        let diag: Vec<bool> = (0..dim).map(|_| rng.gen_bool(0.7)).collect();
        let pi = projector_from(&u, &diag);
        let keep = trace_re(&(&pi * &rho));
        if keep < 1e-6 {
            skipped += 1;
            continue;
        }
        let eps = (1.0 - keep).max(0.0);
        let collapsed = &pi * &rho * &pi / c(keep, 0.0);
        let d = purified_distance(&rho, &collapsed)?;
        worst_gentle = worst_gentle.max(d - eps.sqrt());

        // a commuting family from a shared eigenbasis
        let k = rng.gen_range(2..=4);
        let mut prod = DMatrix::identity(dim, dim);
        let mut sum_miss = 0.0;
        for _ in 0..k {
            let di: Vec<bool> = (0..dim).map(|_| rng.gen_bool(0.8)).collect();
            let pi_i = projector_from(&u, &di);
            sum_miss += 1.0 - trace_re(&(&pi_i * &rho));
            prod *= pi_i;
        }
        let joint_miss = 1.0 - trace_re(&(&prod * &rho));
        worst_union = worst_union.max(joint_miss - sum_miss);
    }
    Ok(GentleUnionReport {
        gentle: InequalityCheck::new("disturbance <= sqrt(miss probability)", worst_gentle, 0.0, 1e-6),
        union: InequalityCheck::new("joint miss <= sum of misses", worst_union, 0.0, 1e-10),
        trials,
        skipped,
    })
}

fn random_density_dim<R: Rng>(dim: usize, rng: &mut R) -> DMatrix<C64> {
    let mut g = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            g[(i, j)] = c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        }
    }
    let mut rho = &g * g.adjoint();
    let tr = trace_re(&rho);
    rho /= c(tr, 0.0);
    rho
}

fn projector_from(u: &DMatrix<C64>, diag: &[bool]) -> DMatrix<C64> {
    let dim = u.nrows();
    let mut m = DMatrix::zeros(dim, dim);
    for (i, &on) in diag.iter().enumerate() {
        if on {
            let col = u.column(i);
            m += col * col.adjoint();
        }
    }
    m
}

/// Exact check that the twist product of two commuting Paulis equals the
/// operator product P_{M^c} Q P_M of their restrictions.
pub fn twist_dense_residual(p: &PauliOp, q: &PauliOp, cut: &Bipartition) -> Result<f64> {
    let twist = p.twist_product(q, cut)?;
    let m = cut.m();
    let p_in = p.restrict(m);
    let p_out = p.restrict_outside(m);
    let dense = pauli_matrix(&p_out) * pauli_matrix(q) * pauli_matrix(&p_in);
    Ok((dense - pauli_matrix(&twist)).norm())
}

/// LMP from an explicit preparation unitary: Pi = U (|0><0|_S (x) 1) U'.
pub fn lmp_from_unitary(u: &DMatrix<C64>, lattice: &Lattice, region: &Region) -> DMatrix<C64> {
    let dim = u.nrows();
    let mut mask = 0usize;
    for s in region.sites() {
        mask |= 1 << lattice.index_of(s);
    }
    let mut m = DMatrix::zeros(dim, dim);
    for b in 0..dim {
        if b & mask == 0 {
            let col = u.column(b);
            m += col * col.adjoint();
        }
    }
    m
}

/// Weak layer of single-qubit rotations exp(i theta X), as a full matrix.
fn weak_layer(n: usize, theta: f64) -> DMatrix<C64> {
    let dim = 1usize << n;
    let mut m = DMatrix::identity(dim, dim);
    for q in 0..n {
        let mut next = DMatrix::zeros(dim, dim);
        let (cos, sin) = (theta.cos(), theta.sin());
        for col in 0..dim {
            for row in 0..dim {
                let v = m[(row, col)];
                if v != c(0.0, 0.0) {
                    next[(row, col)] += v * c(cos, 0.0);
                    next[(row ^ (1 << q), col)] += v * c(0.0, sin);
                }
            }
        }
        m = next;
    }
    m
}

#[derive(Debug, Clone, Serialize)]
pub struct NormCheckReport {
    pub epsilon_hat: f64,
    pub delta_bound: f64,
    pub checks: Vec<InequalityCheck>,
    pub all_hold: bool,
}

/// Verifies the sandwich inequalities between a weakly perturbed prepared
/// state and the operators that exactly stabilize the unperturbed state.
///
/// Construction: psi0 = U|0>, sigma = W psi0 with W a weak depth-1 layer.
/// P = U Z_v U' stabilizes psi0 exactly, so it is (2 eps)-invisible with
/// respect to sigma where eps is the exact purified distance between the
/// two states. The projectors are built for sigma's preparation W U.
pub fn norm_inequality_checks(theta: f64, seed: u64) -> Result<NormCheckReport> {
    let lattice = Lattice::new(4, 2, Boundary::Open)?;
    let n = lattice.site_count();
    let dim = 1usize << n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prep = Circuit::random_local(&lattice, 1, &mut rng);
    let u = circuit_unitary(&prep, &lattice)?;
    let w = weak_layer(n, theta);
    let u2 = &w * &u;

    let mut zero: DVector<C64> = DVector::zeros(dim);
    zero[0] = c(1.0, 0.0);
    let psi0: DVector<C64> = &u * &zero;
    let sigma: DVector<C64> = &u2 * &zero;
    let eps = purified_distance(&(&psi0 * psi0.adjoint()), &(&sigma * sigma.adjoint()))?;
    let delta = 2.0 * eps;

    let v = SiteCoord::new(1, 0);
    let zv = pauli_matrix(&PauliOp::single(lattice, v, crate::pauli::Axis::Z)?);
    let p_op = &u * zv * u.adjoint();
    let expect_p = (sigma.adjoint() * &p_op * &sigma)[(0, 0)];

    // invisibility depth of P and preparation depth of sigma
    let t_p = 2 * prep.depth() + 1;
    let d_prep = prep.depth() + 1;

    let mut checks = Vec::new();
    let slack = 1e-8;

    // single-region sandwich: the small projector can be removed
    let s = lattice.disk(v, 1)?;
    let s_big = s.thicken(t_p + 2 * d_prep);
    let pi_s = lmp_from_unitary(&u2, &lattice, &s);
    let pi_big = lmp_from_unitary(&u2, &lattice, &s_big);
    let lhs = operator_norm(&(&pi_s * &p_op * &pi_big - &p_op * &pi_big));
    checks.push(InequalityCheck::new(
        "single-region projector sandwich",
        lhs,
        delta,
        slack,
    ));

    // two regions: the error grows at most linearly in the region count
    let v2 = SiteCoord::new(2, 1);
    let s2 = lattice.disk(v2, 1)?;
    let s2_big = s2.thicken(t_p + 2 * d_prep);
    let pi_l = &pi_s * lmp_from_unitary(&u2, &lattice, &s2);
    let pi_r = &pi_big * lmp_from_unitary(&u2, &lattice, &s2_big);
    let lhs2 = operator_norm(&(&pi_l * &p_op * &pi_r - &p_op * &pi_r));
    checks.push(InequalityCheck::new(
        "two-region projector sandwich",
        lhs2,
        2.0 * 2.0 * delta,
        slack,
    ));

    // covered support: P acts as its expectation value on the projector
    let cover = lattice.disk(v, prep.depth())?.thicken(t_p + 2 * d_prep);
    let pi_c = lmp_from_unitary(&u2, &lattice, &cover);
    let lhs3 = operator_norm(&(&p_op * &pi_c - &pi_c * expect_p));
    checks.push(InequalityCheck::new(
        "expectation replacement on covered support",
        lhs3,
        2.0 * delta,
        slack,
    ));

    let all_hold = checks.iter().all(|ch| ch.holds());
    Ok(NormCheckReport {
        epsilon_hat: eps,
        delta_bound: delta,
        checks,
        all_hold,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TwistConsistencyReport {
    pub noise: f64,
    pub eps_hat: f64,
    pub delta_bound: f64,
    pub witness_exact: f64,
    pub witness_noisy: f64,
    pub checks: Vec<InequalityCheck>,
    pub all_hold: bool,
}

fn crossing_pair(code: &ToricCode) -> Result<(PauliOp, PauliOp, Bipartition)> {
    // adjacent X and Z plaquettes sharing exactly two sites, split by a
    // column cut so the restrictions anticommute
    let l = *code.lattice();
    let p = code
        .x_generators()
        .iter()
        .find(|g| g.weight() == 4)
        .ok_or_else(|| Error::InvalidInput("no weight-4 X generator".into()))?
        .clone();
    for q in code.z_generators() {
        let shared = p.support().intersection(&q.support());
        if shared.len() != 2 {
            continue;
        }
        let sites: Vec<SiteCoord> = shared.sites().collect();
        if sites[0].x == sites[1].x {
            // horizontal cut between the two shared rows
            let row = (sites[0].y.min(sites[1].y) + sites[0].y.max(sites[1].y) + 1) / 2;
            let cut = Bipartition::below_row(l, row);
            let m = cut.m();
            if !p.restrict(m).commutes(&q.restrict(m))? {
                return Ok((p, q.clone(), cut));
            }
        }
    }
    Err(Error::InvalidInput("no crossing generator pair".into()))
}

/// Verifies the twist-product witness chain on an exactly represented
/// code patch: the exact witness value, its stability bounds under
/// depolarizing noise, the leakage bound into the code space, and the
/// invisibility of stabilizers for the noisy state.
pub fn twist_consistency_check(noise: f64, seed: u64) -> Result<TwistConsistencyReport> {
    let l = Lattice::new(3, 3, Boundary::Open)?;
    let code = ToricCode::build(l)?;
    let n = l.site_count();
    let (p, q, cut) = crossing_pair(&code)?;
    let twist = p.twist_product(&q, &cut)?;

    let psi = dense_ground_state(&code)?;
    let rho0 = &psi * psi.adjoint();
    let witness = |rho: &DMatrix<C64>| -> f64 {
        let ep = pauli_trace(rho, &p).re;
        let eq = pauli_trace(rho, &q).re;
        let et = pauli_trace(rho, &twist).re;
        (et - ep * eq).abs()
    };
    let witness_exact = witness(&rho0);

    let rho = depolarize(&rho0, n, noise);
    let witness_noisy = witness(&rho);

    // worst per-generator violation and the resulting distance budget
    let gens: Vec<PauliOp> = code.generators().cloned().collect();
    let r_size = gens.len();
    let mut eps_hat: f64 = 0.0;
    for g in &gens {
        eps_hat = eps_hat.max((1.0 - pauli_trace(&rho, g).re) / 2.0);
    }
    let x = (r_size as f64 * eps_hat).sqrt().min(1.0);
    let delta_bound = 2.0 * x;

    let mut checks = Vec::new();
    checks.push(InequalityCheck::new(
        "exact ground witness equals 2",
        (witness_exact - 2.0).abs(),
        0.0,
        1e-10,
    ));

    // leakage: projecting into the code space moves the state by at most x
    let rc = code.restricted(&l.full_region())?;
    let pi0 = ground_projector(&rc)?.matrix;
    let kept = trace_re(&(&pi0 * &rho));
    let collapsed = &pi0 * &rho * &pi0 / c(kept, 0.0);
    let dp = purified_distance(&rho, &collapsed)?;
    checks.push(InequalityCheck::new(
        "code-space leakage within budget",
        dp,
        x,
        1e-8,
    ));
    checks.push(InequalityCheck::new(
        "union bound on kept weight",
        1.0 - kept,
        r_size as f64 * eps_hat,
        1e-10,
    ));

    // the noisy witness stays above the quadratic lower envelope
    let lower = (2.0_f64 - 3.0 * x + x * x).max(0.0);
    checks.push(InequalityCheck::new(
        "noisy witness above lower envelope",
        lower,
        witness_noisy,
        1e-8,
    ));

    // stabilizers stay nearly invisible on the noisy state
    let purified = PurifiedState::from_density(n, &rho)?;
    let op = super::dense::DenseOperator::new(pauli_matrix(&p), "crossing loop");
    let b: Vec<usize> = p.support().sites().map(|s| l.index_of(s)).collect();
    let est = super::lmp::estimate_invisibility(&purified, &op, &[b[0]], &b, 4, seed)?;
    checks.push(InequalityCheck::new(
        "sampled visibility within budget",
        est.delta_hat,
        delta_bound,
        1e-6,
    ));

    let all_hold = checks.iter().all(|ch| ch.holds());
    Ok(TwistConsistencyReport {
        noise,
        eps_hat,
        delta_bound,
        witness_exact,
        witness_noisy,
        checks,
        all_hold,
    })
}

/// A family of Hermitian projectors with recorded supports, the frustration
/// free Hamiltonian H = sum (1 - Pi_i), and its detectability properties.
#[derive(Debug, Clone)]
pub struct ProjectorFamily {
    pub n: usize,
    pub projectors: Vec<DMatrix<C64>>,
    pub supports: Vec<Vec<usize>>,
}

impl ProjectorFamily {
    pub fn from_code(code: &ToricCode) -> Result<Self> {
        let l = code.lattice();
        let n = l.site_count();
        super::dense::check_cap(n, super::dense::cap_mixed())?;
        let dim = 1usize << n;
        let mut projectors = Vec::new();
        let mut supports = Vec::new();
        for g in code.generators() {
            let m = pauli_matrix(&g);
            projectors.push((DMatrix::identity(dim, dim) + m) / c(2.0, 0.0));
            supports.push(g.support().sites().map(|s| l.index_of(s)).collect());
        }
        Ok(ProjectorFamily {
            n,
            projectors,
            supports,
        })
    }

    /// Nearest-neighbor symmetrizers (1 + SWAP)/2 on a qubit chain: a
    /// frustration-free but non-commuting family.
    pub fn heisenberg_chain(len: usize) -> Result<Self> {
        if len < 3 {
            return Err(Error::InvalidInput("chain needs at least 3 qubits".into()));
        }
        super::dense::check_cap(len, super::dense::cap_mixed())?;
        let dim = 1usize << len;
        let mut projectors = Vec::new();
        let mut supports = Vec::new();
        for i in 0..len - 1 {
            let mut m = DMatrix::zeros(dim, dim);
            for b in 0..dim {
                let bi = b >> i & 1;
                let bj = b >> (i + 1) & 1;
                let swapped = (b & !(1 << i) & !(1 << (i + 1))) | (bi << (i + 1)) | (bj << i);
                m[(swapped, b)] += c(0.5, 0.0);
                m[(b, b)] += c(0.5, 0.0);
            }
            projectors.push(m);
            supports.push(vec![i, i + 1]);
        }
        Ok(ProjectorFamily {
            n: len,
            projectors,
            supports,
        })
    }

    pub fn hamiltonian(&self) -> DMatrix<C64> {
        let dim = 1usize << self.n;
        let mut h = DMatrix::zeros(dim, dim);
        for p in &self.projectors {
            h += DMatrix::identity(dim, dim) - p;
        }
        h
    }

    fn overlaps(&self, i: usize, j: usize) -> bool {
        self.supports[i].iter().any(|q| self.supports[j].contains(q))
    }

    /// Greedy coloring of the support-overlap graph; the layer count may
    /// exceed the chromatic number, which only loosens the bounds below.
    pub fn color_layers(&self) -> Vec<Vec<usize>> {
        let k = self.projectors.len();
        let mut color = vec![usize::MAX; k];
        for i in 0..k {
            let mut used = vec![false; k];
            for j in 0..i {
                if self.overlaps(i, j) && color[j] < k {
                    used[color[j]] = true;
                }
            }
            color[i] = (0..k).find(|&cc| !used[cc]).unwrap();
        }
        let layers = color.iter().max().map_or(0, |m| m + 1);
        let mut out = vec![Vec::new(); layers];
        for (i, &cc) in color.iter().enumerate() {
            out[cc].push(i);
        }
        out
    }

    /// Ordered product of all projectors, one color layer at a time.
    pub fn detector(&self) -> DMatrix<C64> {
        let dim = 1usize << self.n;
        let mut dl = DMatrix::identity(dim, dim);
        for layer in self.color_layers() {
            for i in layer {
                dl = &self.projectors[i] * dl;
            }
        }
        dl
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DetectabilityReport {
    pub projectors: usize,
    pub layers: usize,
    pub gap: f64,
    pub commuting: bool,
    pub ground_fix_residual: f64,
    pub detector_vs_ground: f64,
    pub checks: Vec<InequalityCheck>,
    pub all_hold: bool,
}

/// Verifies the detectability lemma and its converse for a frustration-free
/// projector family: the ordered product of the projectors damps every
/// excited component by a factor set by the gap and the layer count.
/// Returns an error if the family is frustrated (no common +1 eigenstate).
pub fn detectability_checks(
    family: &ProjectorFamily,
    rho: &DMatrix<C64>,
) -> Result<DetectabilityReport> {
    let dim = 1usize << family.n;
    let h = family.hamiltonian();
    let (vals, vecs) = super::dense::hermitian_eigen(&h);
    let min_eig = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_eig > 1e-8 {
        return Err(Error::Frustrated);
    }
    // ground projector and spectral gap from the exact eigensolve
    let mut pi0 = DMatrix::zeros(dim, dim);
    let mut gap = f64::INFINITY;
    for (i, &val) in vals.iter().enumerate() {
        if val < 1e-8 {
            let col = vecs.column(i);
            pi0 += col * col.adjoint();
        } else if val < gap {
            gap = val;
        }
    }

    let mut ground_fix_residual: f64 = 0.0;
    for p in &family.projectors {
        ground_fix_residual = ground_fix_residual.max((p * &pi0 - &pi0).norm());
    }
    if ground_fix_residual > 1e-8 {
        return Err(Error::Frustrated);
    }

    let layers = family.color_layers();
    let g = layers.len();
    let dl = family.detector();

    let commuting = {
        let mut ok = true;
        'outer: for i in 0..family.projectors.len() {
            for j in i + 1..family.projectors.len() {
                let a = &family.projectors[i];
                let b = &family.projectors[j];
                if (a * b - b * a).norm() > 1e-10 {
                    ok = false;
                    break 'outer;
                }
            }
        }
        ok
    };
    let detector_vs_ground = operator_norm(&(&dl - &pi0));

    let mut checks = Vec::new();
    let damping = 1.0 / (gap / (g * g) as f64 + 1.0);

    let excited = DMatrix::identity(dim, dim) - &pi0;
    let lhs = operator_norm(&(&dl * &excited));
    checks.push(InequalityCheck::new(
        "detector damps excited states",
        lhs * lhs,
        damping,
        1e-8,
    ));
    checks.push(InequalityCheck::new(
        "detector fixes the ground space",
        (&dl * &pi0 - &pi0).norm(),
        0.0,
        1e-8,
    ));

    let pass = trace_re(&(dl.adjoint() * &dl * rho));
    let energy = trace_re(&(&h * rho));
    checks.push(InequalityCheck::new(
        "converse: pass probability vs energy",
        1.0 - 4.0 * energy,
        pass,
        1e-8,
    ));

    let kept = trace_re(&(&pi0 * rho));
    if kept > 1e-9 {
        let collapsed = &pi0 * rho * &pi0 / c(kept, 0.0);
        let dp = purified_distance(rho, &collapsed)?;
        let budget = (4.0 * energy + damping).sqrt();
        checks.push(InequalityCheck::new(
            "leakage bounded by energy and damping",
            dp,
            budget,
            1e-8,
        ));
    }

    if commuting {
        checks.push(InequalityCheck::new(
            "commuting detector equals ground projector",
            detector_vs_ground,
            0.0,
            1e-10,
        ));
    }

    let all_hold = checks.iter().all(|ch| ch.holds());
    Ok(DetectabilityReport {
        projectors: family.projectors.len(),
        layers: g,
        gap,
        commuting,
        ground_fix_residual,
        detector_vs_ground,
        checks,
        all_hold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gentle_and_union_hold() {
        let report = check_gentle_and_union(60, 64, 12).unwrap();
        assert!(report.gentle.holds(), "gentle margin {}", report.gentle.lhs);
        assert!(report.union.holds(), "union margin {}", report.union.lhs);
        assert!(report.skipped < report.trials / 2);
    }

    #[test]
    fn twist_matches_dense_product() {
        let l = Lattice::new(3, 3, Boundary::Open).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut tested = 0;
        while tested < 30 {
            let p = super::super::dense::tests_random_pauli(&l, &mut rng);
            let q = super::super::dense::tests_random_pauli(&l, &mut rng);
            if !p.commutes(&q).unwrap() {
                continue;
            }
            let row = rng.gen_range(1..3);
            let cut = Bipartition::below_row(l, row);
            let res = twist_dense_residual(&p, &q, &cut).unwrap();
            assert!(res < 1e-12, "twist residual {res}");
            tested += 1;
        }
    }

    #[test]
    fn norm_inequalities_hold() {
        // exact case: an unperturbed stabilizer commutes through everything
        let exact = norm_inequality_checks(0.0, 5).unwrap();
        assert!(exact.epsilon_hat < 1e-9);
        for ch in &exact.checks {
            assert!(ch.lhs < 1e-8, "{}: lhs {}", ch.name, ch.lhs);
        }
        // perturbed case: the budget is twice the exact distance
        let pert = norm_inequality_checks(0.06, 5).unwrap();
        assert!(pert.epsilon_hat > 1e-3);
        assert!(pert.all_hold, "{:#?}", pert.checks);
    }

    #[test]
    fn twist_chain_consistent_exact_and_noisy() {
        let exact = twist_consistency_check(0.0, 31).unwrap();
        assert!((exact.witness_exact - 2.0).abs() < 1e-10);
        assert!(exact.all_hold, "{:#?}", exact.checks);
        let noisy = twist_consistency_check(0.004, 31).unwrap();
        assert!(noisy.eps_hat > 0.0);
        assert!(noisy.witness_noisy < 2.0);
        assert!(noisy.all_hold, "{:#?}", noisy.checks);
    }

    #[test]
    fn commuting_family_detector_is_ground_projector() {
        let l = Lattice::new(3, 3, Boundary::Open).unwrap();
        let code = ToricCode::build(l).unwrap();
        let fam = ProjectorFamily::from_code(&code).unwrap();
        let dim = 1usize << 9;
        let rho = DMatrix::identity(dim, dim) / c(dim as f64, 0.0);
        let report = detectability_checks(&fam, &rho).unwrap();
        assert!(report.commuting);
        assert!(report.detector_vs_ground < 1e-10);
        assert!(report.all_hold, "{:#?}", report.checks);
    }

    #[test]
    fn heisenberg_family_is_noncommuting_but_detectable() {
        let fam = ProjectorFamily::heisenberg_chain(4).unwrap();
        let dim = 16;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = random_density_dim(dim, &mut rng);
        let report = detectability_checks(&fam, &rho).unwrap();
        assert!(!report.commuting);
        assert_eq!(report.layers, 2);
        assert!(report.gap > 0.1);
        assert!(report.all_hold, "{:#?}", report.checks);
    }

    #[test]
    fn frustrated_family_is_rejected() {
        // projectors onto |0> and |1> of the same qubit cannot both be 1
        let dim = 4;
        let mut p0 = DMatrix::zeros(dim, dim);
        let mut p1 = DMatrix::zeros(dim, dim);
        for b in 0..dim {
            if b & 1 == 0 {
                p0[(b, b)] = c(1.0, 0.0);
            } else {
                p1[(b, b)] = c(1.0, 0.0);
            }
        }
        let fam = ProjectorFamily {
            n: 2,
            projectors: vec![p0, p1],
            supports: vec![vec![0], vec![0]],
        };
        let rho = DMatrix::identity(dim, dim) / c(dim as f64, 0.0);
        assert!(matches!(
            detectability_checks(&fam, &rho),
            Err(Error::Frustrated)
        ));
    }

    #[test]
    fn depolarized_state_loses_stabilizer_expectation() {
        let l = Lattice::new(3, 3, Boundary::Open).unwrap();
        let code = ToricCode::build(l).unwrap();
        let psi = dense_ground_state(&code).unwrap();
        let rho0 = &psi * psi.adjoint();
        let rho = depolarize(&rho0, 9, 0.01);
        for g in code.generators() {
            let e = pauli_trace(&rho, &g).re;
            assert!(e < 1.0 && e > 0.8, "expectation {e}");
        }
        let tr = trace_re(&rho);
        assert!((tr - 1.0).abs() < 1e-10);
    }

    #[test]
    fn random_pauli_trace_matches_matrix() {
        let l = Lattice::new(2, 2, Boundary::Open).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for _ in 0..10 {
            let p = super::super::dense::tests_random_pauli(&l, &mut rng);
            let rho = random_density_dim(16, &mut rng);
            let via_matrix = (pauli_matrix(&p) * &rho).diagonal().iter().sum::<C64>();
            let fast = pauli_trace(&rho, &p);
            assert!((via_matrix - fast).norm() < 1e-12);
        }
    }

}
