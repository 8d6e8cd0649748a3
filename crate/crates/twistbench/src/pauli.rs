//! Phase-tracked Pauli operators as symplectic bit vectors.
//!
//! Internally an operator is stored as `i^t * prod_v X_v^{x_v} Z_v^{z_v}`
//! with `t` an exponent of `i` mod 4. The exposed phase follows the
//! `Y = iXZ` convention: the operator equals `phase()` times a tensor
//! product of I/X/Y/Z site factors, so Hermiticity is a phase-only check.

use std::fmt;

use crate::error::{Error, Result};
use crate::gf2::{self, BitVec};
use crate::lattice::{Lattice, Region, SiteCoord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    PlusOne,
    PlusI,
    MinusOne,
    MinusI,
}

impl Phase {
    /// Exponent of i.
    pub fn exp(self) -> u8 {
        match self {
            Phase::PlusOne => 0,
            Phase::PlusI => 1,
            Phase::MinusOne => 2,
            Phase::MinusI => 3,
        }
    }

    pub fn from_exp(t: u8) -> Self {
        match t % 4 {
            0 => Phase::PlusOne,
            1 => Phase::PlusI,
            2 => Phase::MinusOne,
            _ => Phase::MinusI,
        }
    }

    pub fn is_real(self) -> bool {
        matches!(self, Phase::PlusOne | Phase::MinusOne)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::PlusOne => "+1",
            Phase::PlusI => "+i",
            Phase::MinusOne => "-1",
            Phase::MinusI => "-i",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PauliOp {
    lattice: Lattice,
    x_bits: BitVec,
    z_bits: BitVec,
    /// exponent of i in the internal X^x Z^z form
    t: u8,
}

impl PauliOp {
    pub fn identity(lattice: Lattice) -> Self {
        let n = lattice.site_count();
        PauliOp {
            lattice,
            x_bits: gf2::zero_vec(n),
            z_bits: gf2::zero_vec(n),
            t: 0,
        }
    }

    pub fn from_sparse(
        lattice: Lattice,
        phase: Phase,
        factors: &[(SiteCoord, Axis)],
    ) -> Result<Self> {
        let mut p = Self::identity(lattice);
        for &(v, axis) in factors {
            if !lattice.contains(v) {
                return Err(Error::InvalidInput(format!(
                    "site ({},{}) outside lattice",
                    v.x, v.y
                )));
            }
            let i = lattice.index_of(v);
            let (x, z) = match axis {
                Axis::X => (true, false),
                Axis::Y => (true, true),
                Axis::Z => (false, true),
            };
            if (x && gf2::get_bit(&p.x_bits, i)) || (z && gf2::get_bit(&p.z_bits, i)) {
                return Err(Error::InvalidInput(format!(
                    "duplicate factor at site ({},{})",
                    v.x, v.y
                )));
            }
            if x {
                gf2::set_bit(&mut p.x_bits, i, true);
            }
            if z {
                gf2::set_bit(&mut p.z_bits, i, true);
            }
        }
        // operator = phase * prod factors, each Y contributing one i
        p.t = (phase.exp() + (p.y_count() % 4) as u8 * 1) % 4;
        Ok(p)
    }

    pub fn single(lattice: Lattice, v: SiteCoord, axis: Axis) -> Result<Self> {
        Self::from_sparse(lattice, Phase::PlusOne, &[(v, axis)])
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub(crate) fn x_bits(&self) -> &[u64] {
        &self.x_bits
    }

    pub(crate) fn z_bits(&self) -> &[u64] {
        &self.z_bits
    }

    pub(crate) fn from_bits(lattice: Lattice, x_bits: BitVec, z_bits: BitVec, t: u8) -> Self {
        PauliOp {
            lattice,
            x_bits,
            z_bits,
            t: t % 4,
        }
    }

    pub(crate) fn internal_exp(&self) -> u8 {
        self.t
    }

    fn y_count(&self) -> usize {
        gf2::and_count(&self.x_bits, &self.z_bits)
    }

    /// Phase in the `Y = iXZ` factor convention.
    pub fn phase(&self) -> Phase {
        Phase::from_exp((self.t + 4 - (self.y_count() % 4) as u8) % 4)
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase().is_real()
    }

    pub fn is_identity_up_to_phase(&self) -> bool {
        gf2::is_zero(&self.x_bits) && gf2::is_zero(&self.z_bits)
    }

    pub fn axis_at(&self, v: SiteCoord) -> Option<Axis> {
        let i = self.lattice.index_of(v);
        match (gf2::get_bit(&self.x_bits, i), gf2::get_bit(&self.z_bits, i)) {
            (false, false) => None,
            (true, false) => Some(Axis::X),
            (true, true) => Some(Axis::Y),
            (false, true) => Some(Axis::Z),
        }
    }

    pub fn support(&self) -> Region {
        self.lattice
            .region_from(
                self.lattice
                    .sites()
                    .filter(|&v| self.axis_at(v).is_some()),
            )
            .expect("support sites are on the lattice")
    }

    pub fn weight(&self) -> usize {
        self.lattice
            .sites()
            .filter(|&v| self.axis_at(v).is_some())
            .count()
    }

    fn check_same_lattice(&self, other: &PauliOp) -> Result<()> {
        if self.lattice != other.lattice {
            return Err(Error::LatticeMismatch(
                "operators live on different lattices".into(),
            ));
        }
        Ok(())
    }

    /// Exact group product `self * other`.
    pub fn mul(&self, other: &PauliOp) -> Result<PauliOp> {
        self.check_same_lattice(other)?;
        // (i^t1 X^x1 Z^z1)(i^t2 X^x2 Z^z2) = i^(t1+t2) (-1)^(z1.x2) X^(x1+x2) Z^(z1+z2)
        let sign_swaps = gf2::and_count(&self.z_bits, &other.x_bits);
        let mut x = self.x_bits.clone();
        let mut z = self.z_bits.clone();
        gf2::xor_in(&mut x, &other.x_bits);
        gf2::xor_in(&mut z, &other.z_bits);
        let t = (self.t as usize + other.t as usize + 2 * sign_swaps) % 4;
        Ok(PauliOp {
            lattice: self.lattice,
            x_bits: x,
            z_bits: z,
            t: t as u8,
        })
    }

    /// Parity of the symplectic inner product; true iff the operators
    /// anticommute.
    pub fn symplectic(&self, other: &PauliOp) -> Result<bool> {
        self.check_same_lattice(other)?;
        Ok(gf2::and_parity(&self.x_bits, &other.z_bits)
            ^ gf2::and_parity(&self.z_bits, &other.x_bits))
    }

    pub fn commutes(&self, other: &PauliOp) -> Result<bool> {
        Ok(!self.symplectic(other)?)
    }

    fn masked_bits(&self, region: &Region) -> (BitVec, BitVec) {
        let n = self.lattice.site_count();
        let mut x = gf2::zero_vec(n);
        let mut z = gf2::zero_vec(n);
        for v in region.sites() {
            let i = self.lattice.index_of(v);
            if gf2::get_bit(&self.x_bits, i) {
                gf2::set_bit(&mut x, i, true);
            }
            if gf2::get_bit(&self.z_bits, i) {
                gf2::set_bit(&mut z, i, true);
            }
        }
        (x, z)
    }

    /// The factor of `self` on `region`, carrying the full phase of `self`,
    /// so that `restrict(R) * restrict_outside(R) = self` exactly.
    pub fn restrict(&self, region: &Region) -> PauliOp {
        let (x, z) = self.masked_bits(region);
        let y_in = gf2::and_count(&x, &z) % 4;
        let y_total = self.y_count() % 4;
        // exposed phase of the factor equals exposed phase of self
        let t = (y_in as u8 + (self.t + 4 - y_total as u8 % 4) % 4) % 4;
        PauliOp {
            lattice: self.lattice,
            x_bits: x,
            z_bits: z,
            t,
        }
    }

    /// The factor of `self` outside `region`, carrying phase +1.
    pub fn restrict_outside(&self, region: &Region) -> PauliOp {
        self.restrict(&region.complement())
            .with_exposed_phase(Phase::PlusOne)
    }

    fn with_exposed_phase(&self, phase: Phase) -> PauliOp {
        let mut p = self.clone();
        p.t = (phase.exp() + (p.y_count() % 4) as u8) % 4;
        p
    }

    /// Twist product `P ∞ Q = P_{M^c} Q P_M` for the bipartition cut, as a
    /// single phase-tracked Pauli: `(-1)^{<P_M, Q>_sympl} P Q`.
    pub fn twist_product(&self, q: &PauliOp, cut: &Bipartition) -> Result<PauliOp> {
        self.check_same_lattice(q)?;
        let p_m = self.restrict(cut.m());
        let sign = p_m.symplectic(q)?;
        let mut out = self.mul(q)?;
        if sign {
            out.t = (out.t + 2) % 4;
        }
        Ok(out)
    }

    /// Conjugates in place by a Clifford gate: `P -> U P U†`, phase exact.
    pub(crate) fn conjugate_by_gate(&mut self, gate: &crate::circuit::Gate) {
        use crate::circuit::Gate;
        let idx = |v: SiteCoord| self.lattice.index_of(v);
        match *gate {
            Gate::H(a) => {
                let i = idx(a);
                let x = gf2::get_bit(&self.x_bits, i);
                let z = gf2::get_bit(&self.z_bits, i);
                gf2::set_bit(&mut self.x_bits, i, z);
                gf2::set_bit(&mut self.z_bits, i, x);
                if x && z {
                    self.t = (self.t + 2) % 4;
                }
            }
            Gate::S(a) => {
                let i = idx(a);
                let x = gf2::get_bit(&self.x_bits, i);
                if x {
                    gf2::flip_bit(&mut self.z_bits, i);
                    self.t = (self.t + 1) % 4;
                }
            }
            Gate::X(a) => {
                let i = idx(a);
                if gf2::get_bit(&self.z_bits, i) {
                    self.t = (self.t + 2) % 4;
                }
            }
            Gate::Z(a) => {
                let i = idx(a);
                if gf2::get_bit(&self.x_bits, i) {
                    self.t = (self.t + 2) % 4;
                }
            }
            Gate::Y(a) => {
                let i = idx(a);
                if gf2::get_bit(&self.x_bits, i) ^ gf2::get_bit(&self.z_bits, i) {
                    self.t = (self.t + 2) % 4;
                }
            }
            Gate::Cnot(a, b) => {
                let (ia, ib) = (idx(a), idx(b));
                let xa = gf2::get_bit(&self.x_bits, ia);
                let zb = gf2::get_bit(&self.z_bits, ib);
                if xa {
                    gf2::flip_bit(&mut self.x_bits, ib);
                }
                if zb {
                    gf2::flip_bit(&mut self.z_bits, ia);
                }
            }
            Gate::Cz(a, b) => {
                let (ia, ib) = (idx(a), idx(b));
                let xa = gf2::get_bit(&self.x_bits, ia);
                let xb = gf2::get_bit(&self.x_bits, ib);
                if xa {
                    gf2::flip_bit(&mut self.z_bits, ib);
                }
                if xb {
                    gf2::flip_bit(&mut self.z_bits, ia);
                }
                if xa && xb {
                    self.t = (self.t + 2) % 4;
                }
            }
        }
    }

    /// Sparse text form, e.g. `-1 X(2,3) Z(4,4)`; identity is `+1 I`.
    pub fn to_text(&self) -> String {
        let mut s = self.phase().as_str().to_string();
        let mut any = false;
        for v in self.lattice.sites() {
            if let Some(axis) = self.axis_at(v) {
                let a = match axis {
                    Axis::X => 'X',
                    Axis::Y => 'Y',
                    Axis::Z => 'Z',
                };
                s.push_str(&format!(" {a}({},{})", v.x, v.y));
                any = true;
            }
        }
        if !any {
            s.push_str(" I");
        }
        s
    }

    /// Parses the sparse text form produced by [`to_text`](Self::to_text).
    pub fn from_text(lattice: Lattice, text: &str) -> Result<PauliOp> {
        let mut tokens = text.split_whitespace();
        let bad = |msg: &str| Error::Parse {
            line: 1,
            msg: msg.to_string(),
        };
        let phase = match tokens.next() {
            Some("+1") | Some("1") => Phase::PlusOne,
            Some("-1") => Phase::MinusOne,
            Some("+i") | Some("i") => Phase::PlusI,
            Some("-i") => Phase::MinusI,
            Some(other) => return Err(bad(&format!("expected phase prefix, got {other:?}"))),
            None => return Err(bad("empty Pauli string")),
        };
        let mut factors = Vec::new();
        let mut saw_identity = false;
        for tok in tokens {
            if tok == "I" {
                saw_identity = true;
                continue;
            }
            let (axis, rest) = match tok.split_at_checked(1) {
                Some(("X", r)) => (Axis::X, r),
                Some(("Y", r)) => (Axis::Y, r),
                Some(("Z", r)) => (Axis::Z, r),
                _ => return Err(bad(&format!("bad factor {tok:?}"))),
            };
            let inner = rest
                .strip_prefix('(')
                .and_then(|r| r.strip_suffix(')'))
                .ok_or_else(|| bad(&format!("bad coordinates in {tok:?}")))?;
            let (xs, ys) = inner
                .split_once(',')
                .ok_or_else(|| bad(&format!("bad coordinates in {tok:?}")))?;
            let x: usize = xs
                .trim()
                .parse()
                .map_err(|_| bad(&format!("bad x coordinate in {tok:?}")))?;
            let y: usize = ys
                .trim()
                .parse()
                .map_err(|_| bad(&format!("bad y coordinate in {tok:?}")))?;
            factors.push((SiteCoord::new(x, y), axis));
        }
        if saw_identity && !factors.is_empty() {
            return Err(bad("mixed I with site factors"));
        }
        Self::from_sparse(lattice, phase, &factors).map_err(|e| Error::Parse {
            line: 1,
            msg: e.to_string(),
        })
    }
}

impl fmt::Display for PauliOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Boundary;

    fn line(n: usize) -> Lattice {
        Lattice::new(n, 2, Boundary::Open).unwrap()
    }

    fn site(x: usize) -> SiteCoord {
        SiteCoord::new(x, 0)
    }

    /// Independent oracle: a Pauli as a monomial map on computational basis
    /// states, |b> -> i^t (-1)^(z.b) |b^x>, composed exactly.
    #[derive(Clone, PartialEq, Debug)]
    struct Monomial {
        n: usize,
        flip: u64,
        z_mask: u64,
        t: u8,
    }

    impl Monomial {
        fn from_pauli(p: &PauliOp) -> Self {
            let n = p.lattice().site_count();
            assert!(n <= 64);
            Monomial {
                n,
                flip: p.x_bits()[0],
                z_mask: p.z_bits()[0],
                t: p.internal_exp(),
            }
        }

        /// Applies self after other (matrix product self * other).
        fn compose(&self, other: &Monomial) -> Monomial {
            // (self ∘ other)|b> = self( i^t2 (-1)^(z2.b) |b^x2> )
            //                  = i^(t1+t2) (-1)^(z2.b) (-1)^(z1.(b^x2)) |b^x2^x1>
            // phase exponent linear in b with constant part (-1)^(z1.x2)
            Monomial {
                n: self.n,
                flip: self.flip ^ other.flip,
                z_mask: self.z_mask ^ other.z_mask,
                t: ((self.t as u32
                    + other.t as u32
                    + 2 * (self.z_mask & other.flip).count_ones())
                    % 4) as u8,
            }
        }
    }

    #[test]
    fn single_qubit_products() {
        let l = line(2);
        let x0 = PauliOp::single(l, site(0), Axis::X).unwrap();
        let z0 = PauliOp::single(l, site(0), Axis::Z).unwrap();
        let sq = x0.mul(&x0).unwrap();
        assert!(sq.is_identity_up_to_phase());
        assert_eq!(sq.phase(), Phase::PlusOne);

        // X0 Z0 = -i Y0
        let xz = x0.mul(&z0).unwrap();
        assert_eq!(xz.axis_at(site(0)), Some(Axis::Y));
        assert_eq!(xz.phase(), Phase::MinusI);
    }

    #[test]
    fn product_matches_monomial_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let l = Lattice::new(4, 2, Boundary::Open).unwrap();
        for _ in 0..300 {
            let mut random_pauli = || {
                let factors: Vec<(SiteCoord, Axis)> = l
                    .sites()
                    .filter_map(|v| match rng.gen_range(0..4) {
                        0 => None,
                        1 => Some((v, Axis::X)),
                        2 => Some((v, Axis::Y)),
                        _ => Some((v, Axis::Z)),
                    })
                    .collect();
                let phase = Phase::from_exp(rng.gen_range(0..4));
                PauliOp::from_sparse(l, phase, &factors).unwrap()
            };
            let p = random_pauli();
            let q = random_pauli();
            let pq = p.mul(&q).unwrap();
            let oracle = Monomial::from_pauli(&p).compose(&Monomial::from_pauli(&q));
            assert_eq!(Monomial::from_pauli(&pq), oracle);
            // commutes() agrees with monomial comparison of PQ and QP
            let qp = q.mul(&p).unwrap();
            let same = Monomial::from_pauli(&pq) == Monomial::from_pauli(&qp);
            assert_eq!(p.commutes(&q).unwrap(), same);
        }
    }

    #[test]
    fn commutation_examples() {
        let l = line(3);
        let x0 = PauliOp::single(l, site(0), Axis::X).unwrap();
        let z0 = PauliOp::single(l, site(0), Axis::Z).unwrap();
        let z1 = PauliOp::single(l, site(1), Axis::Z).unwrap();
        assert!(x0.commutes(&z1).unwrap());
        assert!(!x0.commutes(&z0).unwrap());
    }

    #[test]
    fn restriction_examples() {
        let l = line(3);
        let p = PauliOp::from_sparse(
            l,
            Phase::PlusOne,
            &[(site(0), Axis::X), (site(1), Axis::Z)],
        )
        .unwrap();
        let m = l.region_from([site(0), SiteCoord::new(0, 1)]).unwrap();
        let pm = p.restrict(&m);
        assert_eq!(pm, PauliOp::single(l, site(0), Axis::X).unwrap());
        assert_eq!(p.restrict(&l.full_region()), p);
    }

    #[test]
    fn restriction_recomposes_exactly() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let l = Lattice::new(5, 2, Boundary::Open).unwrap();
        for _ in 0..1000 {
            let factors: Vec<(SiteCoord, Axis)> = l
                .sites()
                .filter_map(|v| match rng.gen_range(0..4) {
                    0 => None,
                    1 => Some((v, Axis::X)),
                    2 => Some((v, Axis::Y)),
                    _ => Some((v, Axis::Z)),
                })
                .collect();
            let phase = Phase::from_exp(rng.gen_range(0..4));
            let p = PauliOp::from_sparse(l, phase, &factors).unwrap();
            let m = l
                .region_from(l.sites().filter(|_| rng.gen_bool(0.5)))
                .unwrap();
            let recomposed = p.restrict(&m).mul(&p.restrict_outside(&m)).unwrap();
            assert_eq!(recomposed, p);
            assert_eq!(p.restrict_outside(&m).phase(), Phase::PlusOne);
        }
    }

    #[test]
    fn twist_product_examples() {
        let l = line(3);
        let p = PauliOp::from_sparse(
            l,
            Phase::PlusOne,
            &[(site(0), Axis::X), (site(1), Axis::X)],
        )
        .unwrap();
        let q = PauliOp::from_sparse(
            l,
            Phase::PlusOne,
            &[(site(1), Axis::Z), (site(2), Axis::Z)],
        )
        .unwrap();
        let pq = p.mul(&q).unwrap();

        // commuting restrictions: M = {0} (plus its column to cover the lattice)
        let m0 = Bipartition::new(l.region_from([site(0), SiteCoord::new(0, 1)]).unwrap());
        assert_eq!(p.twist_product(&q, &m0).unwrap(), pq);

        // anticommuting restrictions: M = {1,2}
        let m12 = Bipartition::new(
            l.region_from([site(1), site(2), SiteCoord::new(1, 1), SiteCoord::new(2, 1)])
                .unwrap(),
        );
        let mut minus_pq = pq.clone();
        let twisted = p.twist_product(&q, &m12).unwrap();
        minus_pq.t = (minus_pq.t + 2) % 4;
        assert_eq!(twisted, minus_pq);

        // Q = identity
        let id = PauliOp::identity(l);
        assert_eq!(p.twist_product(&id, &m0).unwrap(), p);
    }

    #[test]
    fn twist_matches_dense_composition() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        let l = Lattice::new(4, 2, Boundary::Open).unwrap();
        for _ in 0..500 {
            let mut random_pauli = || {
                let factors: Vec<(SiteCoord, Axis)> = l
                    .sites()
                    .filter_map(|v| match rng.gen_range(0..4) {
                        0 => None,
                        1 => Some((v, Axis::X)),
                        2 => Some((v, Axis::Y)),
                        _ => Some((v, Axis::Z)),
                    })
                    .collect();
                PauliOp::from_sparse(l, Phase::from_exp(rng.gen_range(0..4)), &factors).unwrap()
            };
            let p = random_pauli();
            let q = random_pauli();
            let m = l
                .region_from(l.sites().filter(|_| rng.gen_bool(0.5)))
                .unwrap();
            let cut = Bipartition::new(m.clone());
            let twist = p.twist_product(&q, &cut).unwrap();
            // oracle: P_{M^c} Q P_M composed as exact monomials
            let oracle = Monomial::from_pauli(&p.restrict_outside(&m))
                .compose(&Monomial::from_pauli(&q))
                .compose(&Monomial::from_pauli(&p.restrict(&m)));
            assert_eq!(Monomial::from_pauli(&twist), oracle);
        }
    }

    #[test]
    fn text_round_trip() {
        let l = Lattice::new(6, 6, Boundary::Periodic).unwrap();
        let p = PauliOp::from_sparse(
            l,
            Phase::MinusOne,
            &[
                (SiteCoord::new(2, 3), Axis::X),
                (SiteCoord::new(4, 4), Axis::Z),
            ],
        )
        .unwrap();
        let text = p.to_text();
        assert_eq!(text, "-1 X(2,3) Z(4,4)");
        assert_eq!(PauliOp::from_text(l, &text).unwrap(), p);

        let id = PauliOp::identity(l);
        assert_eq!(PauliOp::from_text(l, &id.to_text()).unwrap(), id);
        assert!(PauliOp::from_text(l, "+1 X(99,0)").is_err());
        assert!(PauliOp::from_text(l, "bogus").is_err());
    }
}

/// A bipartition of the lattice into `M` and its complement.
#[derive(Debug, Clone)]
pub struct Bipartition {
    m: Region,
}

impl Bipartition {
    pub fn new(m: Region) -> Self {
        Bipartition { m }
    }

    /// Split along a horizontal line: `M` = sites with y < row.
    pub fn below_row(lattice: Lattice, row: usize) -> Self {
        let m = lattice
            .region_from(lattice.sites().filter(|v| v.y < row))
            .unwrap();
        Bipartition { m }
    }

    pub fn m(&self) -> &Region {
        &self.m
    }

    pub fn contains(&self, v: SiteCoord) -> bool {
        self.m.contains(v)
    }
}
