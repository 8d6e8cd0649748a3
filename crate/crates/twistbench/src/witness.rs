//! Twist-pairing witness evaluation and the closed-form bounds tying the
//! witness to energy density and preparation-circuit depth.
//!
//! Conventions: x := √(|R|·ε) throughout; every bound is clamped at 0, and
//! the witness lower bound additionally clamps x at 1 (the trace-distance
//! saturation point), which keeps it sound for arbitrarily noisy sweeps.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{Lattice, SiteCoord};
use crate::pauli::PauliOp;
use crate::stabilizer::{StabilizerState, TrajectoryEnsemble};
use crate::toric::{energy_of_ensemble, energy_of_state, LoopPair, ToricCode};

/// Measured witness quantities: C = |⟨P∞Q⟩ − ⟨P⟩⟨Q⟩|.
#[derive(Debug, Clone, Serialize)]
pub struct WitnessReport {
    pub exp_p: f64,
    pub stderr_p: f64,
    pub exp_q: f64,
    pub stderr_q: f64,
    pub exp_twist: f64,
    pub stderr_twist: f64,
    pub c: f64,
    pub stderr_c: f64,
    pub shots: u64,
    pub seed: u64,
}

impl WitnessReport {
    fn assemble(
        (exp_p, stderr_p): (f64, f64),
        (exp_q, stderr_q): (f64, f64),
        (exp_twist, stderr_twist): (f64, f64),
        shots: u64,
        seed: u64,
    ) -> WitnessReport {
        let c = (exp_twist - exp_p * exp_q).abs();
        let stderr_c = (stderr_twist.powi(2)
            + (exp_q * stderr_p).powi(2)
            + (exp_p * stderr_q).powi(2))
        .sqrt();
        WitnessReport {
            exp_p,
            stderr_p,
            exp_q,
            stderr_q,
            exp_twist,
            stderr_twist,
            c,
            stderr_c,
            shots,
            seed,
        }
    }
}

fn twist_operator(pair: &LoopPair) -> Result<PauliOp> {
    if !pair.p.commutes(&pair.q)? {
        return Err(Error::InvalidInput(
            "loop operators anticommute globally; twist product is not Hermitian".into(),
        ));
    }
    pair.p.twist_product(&pair.q, &pair.cut)
}

/// Exact witness on a single stabilizer state (no sampling error).
pub fn twist_pairing_state(state: &StabilizerState, pair: &LoopPair) -> Result<WitnessReport> {
    let twist = twist_operator(pair)?;
    let e = |op: &PauliOp| -> Result<(f64, f64)> { Ok((state.expectation(op)? as f64, 0.0)) };
    Ok(WitnessReport::assemble(
        e(&pair.p)?,
        e(&pair.q)?,
        e(&twist)?,
        1,
        0,
    ))
}

/// Witness over a noise ensemble; all three observables share each shot's
/// error draw, so the report is deterministic in (seed, shots).
pub fn twist_pairing(ensemble: &TrajectoryEnsemble, pair: &LoopPair) -> Result<WitnessReport> {
    let twist = twist_operator(pair)?;
    let ops = [pair.p.clone(), pair.q.clone(), twist];
    let counts = ensemble.violation_counts(&ops)?;
    Ok(WitnessReport::assemble(
        counts[0].stats(),
        counts[1].stats(),
        counts[2].stats(),
        ensemble.shots as u64,
        ensemble.seed,
    ))
}

/// Result of the minimizing ℓ×ℓ window search.
#[derive(Debug, Clone, Serialize)]
pub struct GoodSubsystemReport {
    pub window_origin: SiteCoord,
    pub side: usize,
    pub local_energy: f64,
    pub local_density: f64,
    pub density_stderr: f64,
    pub is_good: bool,
}

/// Scans every ℓ×ℓ window and returns the one of least energy density.
/// If the global density is at most `target_eps`, the averaging argument
/// guarantees the minimizing window is too (up to the reported stderr).
pub fn scan_good_subsystem(
    ensemble: &TrajectoryEnsemble,
    code: &ToricCode,
    side: usize,
    target_eps: f64,
) -> Result<GoodSubsystemReport> {
    let lattice = *code.lattice();
    if side < 2 || side > lattice.width.min(lattice.height) {
        return Err(Error::InvalidInput(format!(
            "window side {side} out of range [2, {}]",
            lattice.width.min(lattice.height)
        )));
    }
    let gens: Vec<PauliOp> = code.generators().cloned().collect();
    let counts = ensemble.violation_counts(&gens)?;
    // per-generator mean energy (1-<s>)/2 and its stderr
    let per_gen: Vec<(f64, f64)> = counts
        .iter()
        .map(|c| {
            let (m, s) = c.stats();
            ((1.0 - m) / 2.0, s / 2.0)
        })
        .collect();
    let supports: Vec<Vec<SiteCoord>> = gens.iter().map(|g| g.support().sites().collect()).collect();

    let origins: Vec<SiteCoord> = match lattice.boundary {
        crate::lattice::Boundary::Periodic => lattice.sites().collect(),
        crate::lattice::Boundary::Open => (0..=lattice.height - side)
            .flat_map(|y| (0..=lattice.width - side).map(move |x| SiteCoord::new(x, y)))
            .collect(),
    };
    let mut best: Option<GoodSubsystemReport> = None;
    for origin in origins {
        let mut window = std::collections::BTreeSet::new();
        for dy in 0..side {
            for dx in 0..side {
                window.insert(
                    lattice
                        .wrap((origin.x + dx) as i64, (origin.y + dy) as i64)
                        .expect("window site on lattice"),
                );
            }
        }
        let mut energy = 0.0;
        let mut var = 0.0;
        for (support, &(m, s)) in supports.iter().zip(&per_gen) {
            if support.iter().all(|v| window.contains(v)) {
                energy += m;
                var += s * s;
            }
        }
        let area = (side * side) as f64;
        let density = energy / area;
        let density_stderr = var.sqrt() / area;
        let candidate = GoodSubsystemReport {
            window_origin: origin,
            side,
            local_energy: energy,
            local_density: density,
            density_stderr,
            is_good: density <= target_eps,
        };
        if best
            .as_ref()
            .map(|b| candidate.local_density < b.local_density)
            .unwrap_or(true)
        {
            best = Some(candidate);
        }
    }
    Ok(best.expect("at least one window"))
}

/// δ = 2√(|R|·ε), the invisibility radius of a low-energy region.
pub fn delta_bound(r_size: usize, eps: f64) -> Result<f64> {
    if r_size == 0 {
        return Err(Error::InvalidInput("|R| must be positive".into()));
    }
    if eps < 0.0 {
        return Err(Error::InvalidInput(format!("negative eps {eps}")));
    }
    Ok(2.0 * (r_size as f64 * eps).sqrt())
}

/// Disc-covering counts for the two loops: k_Q from the annulus formula
/// 4(4D + t + τ_p), k_P from an explicit covering (1 when a single disc of
/// admissible radius suffices). The disc radius window 3D+t+τ_p ≤ rad ≤ r−D
/// is validated against the region geometry.
pub fn covering_numbers(pair: &LoopPair, d: usize, t: usize) -> Result<(usize, usize)> {
    if t < 1 {
        return Err(Error::InvalidInput("t must be >= 1".into()));
    }
    let k_q = 4 * (4 * d + t + pair.tau_p);

    let r = region_radius(pair)?;
    let rad_min = 3 * d + t + pair.tau_p;
    if r < d || rad_min > r - d {
        return Err(Error::Sizing(format!(
            "disc radius window [{rad_min}, {}] empty for region radius {r} at depth {d}",
            r as i64 - d as i64
        )));
    }
    let rad_max = r - d;
    let support = pair.p.support();
    // try the single big disc first, then fall back to a greedy covering
    let center = region_center(pair);
    let big = pair.region.lattice().disk(center, rad_max)?;
    let k_p = if support.is_subset(&big) {
        1
    } else {
        let discs = support.cover_with_disks(rad_min)?;
        for disc in &discs {
            debug_assert!(!disc.is_empty());
        }
        discs.len()
    };
    Ok((k_p, k_q))
}

fn region_radius(pair: &LoopPair) -> Result<usize> {
    let center = region_center(pair);
    let lattice = pair.region.lattice();
    let mut r = 0;
    for v in pair.region.sites() {
        r = r.max(lattice.distance(center, v)?);
    }
    Ok(r)
}

fn region_center(pair: &LoopPair) -> SiteCoord {
    let (sx, sy, n) = pair
        .region
        .sites()
        .fold((0usize, 0usize, 0usize), |(ax, ay, c), v| {
            (ax + v.x, ay + v.y, c + 1)
        });
    SiteCoord::new(sx / n.max(1), sy / n.max(1))
}

/// Upper bound 2δ(α_P·k_Q + α_Q·k_P) on the witness.
pub fn theorem2_bound(
    delta: f64,
    alpha_p: f64,
    alpha_q: f64,
    k_p: usize,
    k_q: usize,
) -> Result<f64> {
    if delta < 0.0 || alpha_p < 0.0 || alpha_q < 0.0 {
        return Err(Error::InvalidInput("negative bound inputs".into()));
    }
    Ok(2.0 * delta * (alpha_p * k_q as f64 + alpha_q * k_p as f64))
}

/// Lower bound max(0, 2 − 3x + x²) with x = min(√(|R|ε), 1).
/// The clamp at x = 1 keeps the bound trivially true (and equal to 0) once
/// the trace-distance argument saturates; without it the raw quadratic
/// exceeds 2 again for x > 3 and would falsely fail high-noise sweeps.
pub fn witness_lower_bound(r_size: usize, eps: f64) -> Result<f64> {
    if eps < 0.0 {
        return Err(Error::InvalidInput(format!("negative eps {eps}")));
    }
    let x = (r_size as f64 * eps).sqrt().min(1.0);
    Ok((2.0 - 3.0 * x + x * x).max(0.0))
}

/// Coefficient of √|Λ| in the zero-noise depth bound (the loop-separation
/// proportionality; any positive constant is admissible at desk scale).
pub const GROUND_DEPTH_COEFF: f64 = 1.0;

/// Depth lower bound from the proof inequality
/// 1/(16x) − 21/32 + x/32 ≤ D with x = √(|R|ε), clamped at 0; requires
/// x < 1/2. At ε = 0 the topological branch `GROUND_DEPTH_COEFF`·√|Λ|
/// applies instead.
pub fn depth_lower_bound(
    r_size: usize,
    eps: f64,
    lattice: &Lattice,
    alpha_exponent: f64,
) -> Result<f64> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidInput(format!("eps {eps} outside [0, 1)")));
    }
    if !(0.0..1.0).contains(&alpha_exponent) || alpha_exponent == 0.0 {
        return Err(Error::InvalidInput(format!(
            "alpha_exponent {alpha_exponent} outside (0,1)"
        )));
    }
    if eps == 0.0 {
        return Ok(GROUND_DEPTH_COEFF * (lattice.site_count() as f64).sqrt());
    }
    let x = (r_size as f64 * eps).sqrt();
    if x >= 0.5 {
        return Err(Error::Precondition(format!(
            "sqrt(|R|*eps) = {x:.4} but the depth bound requires sqrt(|R|*eps) < 1/2"
        )));
    }
    Ok((1.0 / (16.0 * x) - 21.0 / 32.0 + x / 32.0).max(0.0))
}

/// Recommended |R| = ⌈ε^(−α)⌉ for the depth bound.
pub fn recommended_r_size(eps: f64, alpha_exponent: f64) -> Result<usize> {
    if eps <= 0.0 || eps >= 1.0 {
        return Err(Error::InvalidInput(format!("eps {eps} outside (0, 1)")));
    }
    if alpha_exponent <= 0.0 || alpha_exponent >= 1.0 {
        return Err(Error::InvalidInput(format!(
            "alpha_exponent {alpha_exponent} outside (0,1)"
        )));
    }
    Ok(eps.powf(-alpha_exponent).ceil() as usize)
}

/// Every closed-form quantity for one (region, ε) operating point.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub r_size: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub alpha_p: f64,
    pub alpha_q: f64,
    pub k_p: usize,
    pub k_q: usize,
    pub t: usize,
    pub tau_p: usize,
    pub d_input: Option<usize>,
    pub witness_upper: Option<f64>,
    pub witness_lower: f64,
    pub depth_lower: f64,
    pub alpha_exponent: f64,
    pub recommended_r_size: Option<usize>,
}

/// Assembles a BoundReport. For Pauli loops α_P = α_Q = 1. The upper form
/// needs a preparation depth and a feasible covering geometry; when either
/// is missing it is reported as absent (vacuously consistent).
pub fn evaluate_bounds(
    pair: &LoopPair,
    lattice: &Lattice,
    eps: f64,
    t: usize,
    d_input: Option<usize>,
    alpha_exponent: f64,
) -> Result<BoundReport> {
    let r_size = pair.region.len();
    let delta = delta_bound(r_size, eps)?;
    let (alpha_p, alpha_q) = (1.0, 1.0);
    let covering = d_input.map(|d| covering_numbers(pair, d, t));
    let (k_p, k_q, witness_upper) = match covering {
        Some(Ok((k_p, k_q))) => (
            k_p,
            k_q,
            Some(theorem2_bound(delta, alpha_p, alpha_q, k_p, k_q)?),
        ),
        // infeasible radius window: bound not evaluable at this scale
        Some(Err(Error::Sizing(_))) | None => (0, 0, None),
        Some(Err(e)) => return Err(e),
    };
    let depth_lower = match depth_lower_bound(r_size, eps, lattice, alpha_exponent) {
        Ok(v) => v,
        Err(Error::Precondition(_)) => 0.0,
        Err(e) => return Err(e),
    };
    Ok(BoundReport {
        r_size,
        epsilon: eps,
        delta,
        alpha_p,
        alpha_q,
        k_p,
        k_q,
        t,
        tau_p: pair.tau_p,
        d_input,
        witness_upper,
        witness_lower: witness_lower_bound(r_size, eps)?,
        depth_lower,
        alpha_exponent,
        recommended_r_size: recommended_r_size(eps, alpha_exponent).ok(),
    })
}

/// The witness sandwich at one operating point, with 3σ statistical slack.
#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    pub r_size: usize,
    pub eps_hat: f64,
    pub eps_stderr: f64,
    pub witness: WitnessReport,
    /// lower form at ε̂ + 3σ (the weakest statistically plausible bound)
    pub lower: f64,
    /// printed-constant upper form 2δ(9+16D), when D is known and feasible
    pub upper_printed: Option<f64>,
    /// direct-substitution upper form 2δ(16D+13), same gating
    pub upper_general: Option<f64>,
    pub d_input: Option<usize>,
    pub lower_consistent: bool,
    pub upper_consistent: bool,
    pub consistent: bool,
}

/// Measures ε̂ on the pair's region and checks lower ≤ C ≤ upper within 3σ.
/// A `consistent = false` result is a falsification event.
pub fn verify_main_inequality(
    ensemble: &TrajectoryEnsemble,
    code: &ToricCode,
    pair: &LoopPair,
    d_claimed: Option<usize>,
    t: usize,
) -> Result<SandwichReport> {
    let restricted = code.restricted(&pair.region)?;
    let gens = restricted.all_generators();
    let r_size = pair.region.len();
    let (energy, energy_stderr) = if ensemble.noise.is_zero() {
        (energy_of_state(&ensemble.base, &gens)?, 0.0)
    } else {
        energy_of_ensemble(ensemble, &gens)?
    };
    let eps_hat = energy / r_size as f64;
    let eps_stderr = energy_stderr / r_size as f64;
    let witness = if ensemble.noise.is_zero() {
        twist_pairing_state(&ensemble.base, pair)?
    } else {
        twist_pairing(ensemble, pair)?
    };

    let eps_slack = eps_hat + 3.0 * eps_stderr;
    let lower = witness_lower_bound(r_size, eps_slack)?;
    let lower_consistent = witness.c + 3.0 * witness.stderr_c >= lower;

    let delta_slack = delta_bound(r_size, eps_slack)?;
    let (upper_printed, upper_general) = match d_claimed {
        Some(d) => match covering_numbers(pair, d, t) {
            Ok(_) => (
                Some(delta_slack * (9.0 + 16.0 * d as f64)),
                Some(delta_slack * (16.0 * d as f64 + 13.0)),
            ),
            Err(Error::Sizing(_)) => (None, None),
            Err(e) => return Err(e),
        },
        None => (None, None),
    };
    let upper_consistent = match (upper_printed, upper_general) {
        (Some(up), Some(ug)) => {
            let c_low = witness.c - 3.0 * witness.stderr_c;
            c_low <= up.max(ug)
        }
        _ => true,
    };
    Ok(SandwichReport {
        r_size,
        eps_hat,
        eps_stderr,
        witness,
        lower,
        upper_printed,
        upper_general,
        d_input: d_claimed,
        lower_consistent,
        upper_consistent,
        consistent: lower_consistent && upper_consistent,
    })
}
