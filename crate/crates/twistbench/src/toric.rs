//! Checkerboard toric-code generator families on vertex qubits, restricted
//! codes, ground-state tableaux, energy functionals, and intersecting loop
//! pair construction.
//!
//! Layout: a 2x2 face anchored at (x,y) covers (x,y),(x+1,y),(x,y+1),(x+1,y+1)
//! and is X-type iff x+y is even. Periodic lattices take every anchor (even
//! dimensions required). Open lattices take interior anchors plus weight-2
//! boundary checks whose type is forced by the neighboring face parity, so
//! everything commutes and (for square layouts) exactly one logical remains.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gf2::BitMat;
use crate::lattice::{Boundary, Lattice, Region, SiteCoord};
use crate::pauli::{Axis, Bipartition, PauliOp, Phase};
use crate::stabilizer::{OutcomeCounts, StabilizerState, TrajectoryEnsemble};

#[derive(Debug, Clone)]
pub struct ToricCode {
    lattice: Lattice,
    x_generators: Vec<PauliOp>,
    z_generators: Vec<PauliOp>,
}

/// Generators of a code whose supports lie inside a region.
#[derive(Debug, Clone)]
pub struct RestrictedCode {
    lattice: Lattice,
    region: Region,
    x_generators: Vec<PauliOp>,
    z_generators: Vec<PauliOp>,
}

/// Two commuting loop operators whose restrictions to the cut side
/// anticommute: P an X-type ring, Q a Z-type ring, crossing at exactly two
/// patches on opposite sides of the cut.
#[derive(Debug, Clone)]
pub struct LoopPair {
    pub p: PauliOp,
    pub q: PauliOp,
    pub region: Region,
    pub cut: Bipartition,
    pub d_sep: usize,
    pub tau_p: usize,
}

impl ToricCode {
    pub fn build(lattice: Lattice) -> Result<Self> {
        if lattice.boundary == Boundary::Periodic
            && (lattice.width % 2 != 0 || lattice.height % 2 != 0)
        {
            return Err(Error::InvalidInput(format!(
                "periodic toric layout needs even dimensions, got {}x{}",
                lattice.width, lattice.height
            )));
        }
        let mut x_generators = Vec::new();
        let mut z_generators = Vec::new();
        let mut add = |axis: Axis, sites: &[SiteCoord]| -> Result<()> {
            let factors: Vec<(SiteCoord, Axis)> = sites.iter().map(|&v| (v, axis)).collect();
            let g = PauliOp::from_sparse(lattice, Phase::PlusOne, &factors)?;
            match axis {
                Axis::X => x_generators.push(g),
                Axis::Z => z_generators.push(g),
                Axis::Y => unreachable!(),
            }
            Ok(())
        };

        match lattice.boundary {
            Boundary::Periodic => {
                for y in 0..lattice.height {
                    for x in 0..lattice.width {
                        let axis = if (x + y) % 2 == 0 { Axis::X } else { Axis::Z };
                        add(axis, &face_sites(&lattice, x, y))?;
                    }
                }
            }
            Boundary::Open => {
                let (w, h) = (lattice.width, lattice.height);
                for y in 0..h - 1 {
                    for x in 0..w - 1 {
                        let axis = if (x + y) % 2 == 0 { Axis::X } else { Axis::Z };
                        add(axis, &face_sites(&lattice, x, y))?;
                    }
                }
                // boundary half-checks: type forced by adjacent face parity
                for x in (0..w - 1).step_by(2) {
                    add(
                        Axis::Z,
                        &[SiteCoord::new(x, 0), SiteCoord::new(x + 1, 0)],
                    )?;
                    let top = if h % 2 == 1 { Axis::X } else { Axis::Z };
                    add(
                        top,
                        &[SiteCoord::new(x, h - 1), SiteCoord::new(x + 1, h - 1)],
                    )?;
                }
                for y in (1..h - 1).step_by(2) {
                    add(
                        Axis::X,
                        &[SiteCoord::new(0, y), SiteCoord::new(0, y + 1)],
                    )?;
                    let right = if w % 2 == 1 { Axis::Z } else { Axis::X };
                    add(
                        right,
                        &[SiteCoord::new(w - 1, y), SiteCoord::new(w - 1, y + 1)],
                    )?;
                }
            }
        }

        let code = ToricCode {
            lattice,
            x_generators,
            z_generators,
        };
        for (i, a) in code.generators().enumerate() {
            for b in code.generators().skip(i + 1) {
                if !a.commutes(b)? {
                    return Err(Error::InvalidInput(format!(
                        "generator layout broken: {} anticommutes with {}",
                        a.to_text(),
                        b.to_text()
                    )));
                }
            }
        }
        Ok(code)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn x_generators(&self) -> &[PauliOp] {
        &self.x_generators
    }

    pub fn z_generators(&self) -> &[PauliOp] {
        &self.z_generators
    }

    /// X generators followed by Z generators.
    pub fn generators(&self) -> impl Iterator<Item = &PauliOp> {
        self.x_generators.iter().chain(&self.z_generators)
    }

    pub fn generator_count(&self) -> usize {
        self.x_generators.len() + self.z_generators.len()
    }

    /// GF(2) rank of the generator set; logical count = |Λ| − rank.
    pub fn num_independent(&self) -> usize {
        rank_of(self.generators(), self.lattice.site_count())
    }

    pub fn logical_qubits(&self) -> usize {
        self.lattice.site_count() - self.num_independent()
    }

    /// Greedy maximal independent sublist, in generator order.
    pub fn independent_generators(&self) -> Vec<PauliOp> {
        independent_subset(self.generators(), self.lattice.site_count())
    }

    /// A tableau state with every generator at +1. The completion of the
    /// logical sector is the deterministic lexicographic one, so for the
    /// torus one ground state out of four is fixed.
    pub fn ground_state(&self) -> Result<StabilizerState> {
        StabilizerState::from_generators(self.lattice, &self.independent_generators())
    }

    pub fn restricted(&self, region: &Region) -> Result<RestrictedCode> {
        if region.lattice() != &self.lattice {
            return Err(Error::LatticeMismatch("region on wrong lattice".into()));
        }
        let keep = |g: &&PauliOp| g.support().is_subset(region);
        Ok(RestrictedCode {
            lattice: self.lattice,
            region: region.clone(),
            x_generators: self.x_generators.iter().filter(keep).cloned().collect(),
            z_generators: self.z_generators.iter().filter(keep).cloned().collect(),
        })
    }

    /// JSON description: lattice, boundary, generators in sparse text form.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Doc<'a> {
            schema: &'a str,
            width: usize,
            height: usize,
            boundary: Boundary,
            x_generators: Vec<String>,
            z_generators: Vec<String>,
        }
        serde_json::to_value(Doc {
            schema: "1",
            width: self.lattice.width,
            height: self.lattice.height,
            boundary: self.lattice.boundary,
            x_generators: self.x_generators.iter().map(|g| g.to_text()).collect(),
            z_generators: self.z_generators.iter().map(|g| g.to_text()).collect(),
        })
        .expect("serializable")
    }
}

impl RestrictedCode {
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn x_generators(&self) -> &[PauliOp] {
        &self.x_generators
    }

    pub fn z_generators(&self) -> &[PauliOp] {
        &self.z_generators
    }

    pub fn generators(&self) -> impl Iterator<Item = &PauliOp> {
        self.x_generators.iter().chain(&self.z_generators)
    }

    pub fn generator_count(&self) -> usize {
        self.x_generators.len() + self.z_generators.len()
    }

    pub fn num_independent(&self) -> usize {
        rank_of(self.generators(), self.lattice.site_count())
    }

    pub fn all_generators(&self) -> Vec<PauliOp> {
        self.generators().cloned().collect()
    }
}

fn face_sites(lattice: &Lattice, x: usize, y: usize) -> [SiteCoord; 4] {
    let wrap = |a: usize, b: usize| {
        lattice
            .wrap(a as i64, b as i64)
            .expect("face site in range")
    };
    [
        wrap(x, y),
        wrap(x + 1, y),
        wrap(x, y + 1),
        wrap(x + 1, y + 1),
    ]
}

fn rank_of<'a>(gens: impl Iterator<Item = &'a PauliOp>, n: usize) -> usize {
    let mut m = BitMat::new(2 * n);
    for g in gens {
        m.push_row(concat_bits(g, n));
    }
    m.rank()
}

fn independent_subset<'a>(gens: impl Iterator<Item = &'a PauliOp>, n: usize) -> Vec<PauliOp> {
    let mut m = BitMat::new(2 * n);
    let mut out = Vec::new();
    let mut rank = 0;
    for g in gens {
        m.push_row(concat_bits(g, n));
        let r = m.rank();
        if r > rank {
            rank = r;
            out.push(g.clone());
        } else {
            m.rows.pop();
        }
    }
    out
}

fn concat_bits(g: &PauliOp, n: usize) -> crate::gf2::BitVec {
    let mut v = crate::gf2::zero_vec(2 * n);
    for i in 0..n {
        if crate::gf2::get_bit(g.x_bits(), i) {
            crate::gf2::set_bit(&mut v, i, true);
        }
        if crate::gf2::get_bit(g.z_bits(), i) {
            crate::gf2::set_bit(&mut v, n + i, true);
        }
    }
    v
}

/// Σ over generators of (1 − ⟨s⟩)/2 on a single state; exact multiple of ½.
pub fn energy_of_state(state: &StabilizerState, generators: &[PauliOp]) -> Result<f64> {
    let mut halves: i64 = 0;
    for g in generators {
        halves += 1 - state.expectation(g)? as i64;
    }
    Ok(halves as f64 / 2.0)
}

/// (mean, stderr) of the generator energy over a noise ensemble. Per-shot
/// energies are accumulated as exact integers, so the result is identical
/// for any shot partitioning.
pub fn energy_of_ensemble(
    ensemble: &TrajectoryEnsemble,
    generators: &[PauliOp],
) -> Result<(f64, f64)> {
    use rayon::prelude::*;
    let base: Vec<i8> = generators
        .iter()
        .map(|g| ensemble.base.expectation(g))
        .collect::<Result<_>>()?;
    let shots = ensemble.shots;
    let (sum_h, sum_h2) = (0..shots)
        .into_par_iter()
        .map(|shot| {
            let e = ensemble.error_pauli(shot).expect("shot in range");
            let mut h: i64 = 0; // energy in units of 1/2
            for (g, &b) in generators.iter().zip(&base) {
                let v = if b == 0 {
                    0
                } else if e.symplectic(g).expect("same lattice") {
                    -b
                } else {
                    b
                };
                h += 1 - v as i64;
            }
            (h as i128, (h * h) as i128)
        })
        .reduce(|| (0i128, 0i128), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = shots as f64;
    let mean = sum_h as f64 / (2.0 * n);
    if shots == 1 {
        return Ok((mean, 0.0));
    }
    let mean_sq = sum_h2 as f64 / (4.0 * n);
    let var = ((mean_sq - mean * mean) * n / (n - 1.0)).max(0.0);
    Ok((mean, (var / n).sqrt()))
}

/// Exact per-generator outcome counts over an ensemble (for window scans).
pub fn generator_counts(
    ensemble: &TrajectoryEnsemble,
    generators: &[PauliOp],
) -> Result<Vec<OutcomeCounts>> {
    ensemble.violation_counts(generators)
}

/// Builds an X-ring and a Z-ring of the given site diameter inside `region`,
/// crossing at two odd-sized patches separated by `d_sep`, with a horizontal
/// cut between the patches. Both rings are products of restricted-code
/// generators, so they stabilize the ground space.
pub fn build_loop_pair(
    code: &ToricCode,
    region: &Region,
    loop_diameter: usize,
    d_sep: usize,
) -> Result<LoopPair> {
    let lattice = *code.lattice();
    if region.lattice() != &lattice {
        return Err(Error::LatticeMismatch("region on wrong lattice".into()));
    }
    if loop_diameter < 4 {
        return Err(Error::Sizing(format!(
            "loop diameter {loop_diameter} too small; need at least 4"
        )));
    }
    if d_sep < 2 || d_sep % 2 != 0 {
        return Err(Error::Sizing(format!(
            "d_sep {d_sep} must be even and at least 2"
        )));
    }
    let d = loop_diameter;
    let s0 = (d as i64 - 1) - (d_sep as i64) / 2;
    if s0 < 1 {
        return Err(Error::Sizing(format!(
            "d_sep {d_sep} too large for loop diameter {d}; need d_sep <= {}",
            2 * (d - 2)
        )));
    }
    let (x0, y0, xmax, ymax) = bounding_box(region)?;
    let needed = d + s0 as usize + 1;
    if xmax + 1 - x0 < needed || ymax + 1 - y0 < needed {
        return Err(Error::Sizing(format!(
            "region spans {}x{} sites; loops of diameter {d} with d_sep {d_sep} need at least {needed}x{needed}",
            xmax + 1 - x0,
            ymax + 1 - y0
        )));
    }

    let restricted = code.restricted(region)?;
    let p = ring_product(
        &lattice,
        restricted.x_generators(),
        x0,
        y0,
        d,
    )?;

    // search small offsets around the nominal diagonal shift for a Q ring
    // whose crossings with P are two odd-sized patches at distance d_sep
    let mut best: Option<(PauliOp, Vec<Region>, usize)> = None;
    'outer: for dsy in [0i64, -1, 1] {
        for dsx in [0i64, -1, 1] {
            let (sx, sy) = (s0 + dsx, s0 + dsy);
            if sx < 0 || sy < 0 {
                continue;
            }
            let q = match ring_product(
                &lattice,
                restricted.z_generators(),
                x0 + sx as usize,
                y0 + sy as usize,
                d,
            ) {
                Ok(q) => q,
                Err(_) => continue,
            };
            let overlap = p.support().intersection(&q.support());
            let patches = connected_components(&overlap);
            if patches.len() != 2 {
                continue;
            }
            if patches.iter().any(|c| c.len() % 2 == 0) {
                continue;
            }
            let sep = region_distance(&patches[0], &patches[1])?;
            if sep != d_sep {
                continue;
            }
            best = Some((q, patches, sep));
            break 'outer;
        }
    }
    let Some((q, patches, sep)) = best else {
        return Err(Error::Sizing(format!(
            "no valid crossing geometry for diameter {d}, d_sep {d_sep} in the given region"
        )));
    };

    // horizontal cut equidistant from the two crossing patches
    let span_y = |c: &Region| {
        let ys: Vec<usize> = c.sites().map(|v| v.y).collect();
        (*ys.iter().min().unwrap(), *ys.iter().max().unwrap())
    };
    let (a_lo, a_hi) = span_y(&patches[0]);
    let (b_lo, b_hi) = span_y(&patches[1]);
    let (lower_hi, upper_lo) = if a_hi < b_lo {
        (a_hi, b_lo)
    } else if b_hi < a_lo {
        (b_hi, a_lo)
    } else {
        return Err(Error::Sizing(
            "crossing patches are not vertically separated".into(),
        ));
    };
    let cut_row = (lower_hi + upper_lo + 2) / 2;
    let cut = Bipartition::below_row(lattice, cut_row);

    if !p.restrict(cut.m()).symplectic(&q.restrict(cut.m()))? {
        return Err(Error::Sizing(
            "cut restrictions commute; crossing parity broken".into(),
        ));
    }
    Ok(LoopPair {
        p,
        q,
        region: region.clone(),
        cut,
        d_sep: sep,
        tau_p: 1,
    })
}

fn bounding_box(region: &Region) -> Result<(usize, usize, usize, usize)> {
    let mut it = region.sites();
    let first = it.next().ok_or_else(|| {
        Error::Sizing("empty region cannot host loops".into())
    })?;
    let (mut x0, mut y0, mut x1, mut y1) = (first.x, first.y, first.x, first.y);
    for v in it {
        x0 = x0.min(v.x);
        y0 = y0.min(v.y);
        x1 = x1.max(v.x);
        y1 = y1.max(v.y);
    }
    Ok((x0, y0, x1, y1))
}

/// Product of all given generators whose face anchor lies in the
/// (d−1)×(d−1) anchor block at (x0,y0); interior cancels, a ring remains.
fn ring_product(
    lattice: &Lattice,
    generators: &[PauliOp],
    x0: usize,
    y0: usize,
    d: usize,
) -> Result<PauliOp> {
    let mut prod = PauliOp::identity(*lattice);
    let mut used = 0;
    for g in generators {
        let Some(anchor) = face_anchor(lattice, g) else {
            continue;
        };
        if anchor.x >= x0 && anchor.x < x0 + d - 1 && anchor.y >= y0 && anchor.y < y0 + d - 1 {
            prod = prod.mul(g)?;
            used += 1;
        }
    }
    if used == 0 || prod.weight() == 0 {
        return Err(Error::Sizing(format!(
            "no ring from anchor block at ({x0},{y0}) size {d}"
        )));
    }
    Ok(prod)
}

/// Anchor of a weight-4 face generator (its minimal-coordinate site);
/// None for boundary half-checks and anything else.
fn face_anchor(lattice: &Lattice, g: &PauliOp) -> Option<SiteCoord> {
    if g.weight() != 4 {
        return None;
    }
    let sites: Vec<SiteCoord> = g.support().sites().collect();
    for &a in &sites {
        let face = face_sites(lattice, a.x, a.y);
        let mut f = face.to_vec();
        f.sort();
        let mut s = sites.clone();
        s.sort();
        if f == s {
            return Some(a);
        }
    }
    None
}

fn connected_components(region: &Region) -> Vec<Region> {
    let lattice = *region.lattice();
    let mut remaining: std::collections::BTreeSet<SiteCoord> = region.sites().collect();
    let mut components = Vec::new();
    while let Some(&start) = remaining.iter().next() {
        let mut stack = vec![start];
        let mut comp = Vec::new();
        remaining.remove(&start);
        while let Some(v) = stack.pop() {
            comp.push(v);
            for (dx, dy) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                if let Some(u) = lattice.wrap(v.x as i64 + dx, v.y as i64 + dy) {
                    if remaining.remove(&u) {
                        stack.push(u);
                    }
                }
            }
        }
        components.push(lattice.region_from(comp).expect("sites on lattice"));
    }
    components.sort_by_key(|c| c.sites().next());
    components
}

fn region_distance(a: &Region, b: &Region) -> Result<usize> {
    let lattice = a.lattice();
    let mut best = usize::MAX;
    for u in a.sites() {
        for v in b.sites() {
            best = best.min(lattice.distance(u, v)?);
        }
    }
    Ok(best)
}
