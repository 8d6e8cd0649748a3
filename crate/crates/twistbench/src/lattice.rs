//! Site coordinates, metric and region algebra on a 2D lattice.
//!
//! The lattice graph is the nearest-neighbor square grid, with wraparound
//! edges iff the boundary is periodic, so the metric is Manhattan distance
//! on that graph. Regions are explicit site sets.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Open,
}

/// A `width x height` grid of sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    pub width: usize,
    pub height: usize,
    pub boundary: Boundary,
}

/// A single site, canonical (already wrapped) coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SiteCoord {
    pub x: usize,
    pub y: usize,
}

impl SiteCoord {
    pub fn new(x: usize, y: usize) -> Self {
        SiteCoord { x, y }
    }
}

impl Lattice {
    pub fn new(width: usize, height: usize, boundary: Boundary) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::InvalidInput(format!(
                "lattice must be at least 2x2, got {width}x{height}"
            )));
        }
        Ok(Lattice {
            width,
            height,
            boundary,
        })
    }

    pub fn site_count(&self) -> usize {
        self.width * self.height
    }

    pub fn contains(&self, v: SiteCoord) -> bool {
        v.x < self.width && v.y < self.height
    }

    /// Dense site index in row-major order.
    pub fn index_of(&self, v: SiteCoord) -> usize {
        v.y * self.width + v.x
    }

    pub fn site_at(&self, index: usize) -> SiteCoord {
        SiteCoord::new(index % self.width, index / self.width)
    }

    pub fn sites(&self) -> impl Iterator<Item = SiteCoord> + '_ {
        (0..self.site_count()).map(|i| self.site_at(i))
    }

    /// Wraps a signed coordinate onto the lattice; `None` if it falls off an
    /// open boundary.
    pub fn wrap(&self, x: i64, y: i64) -> Option<SiteCoord> {
        match self.boundary {
            Boundary::Periodic => {
                let w = self.width as i64;
                let h = self.height as i64;
                Some(SiteCoord::new(
                    (x.rem_euclid(w)) as usize,
                    (y.rem_euclid(h)) as usize,
                ))
            }
            Boundary::Open => {
                if x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height {
                    Some(SiteCoord::new(x as usize, y as usize))
                } else {
                    None
                }
            }
        }
    }

    fn axis_distance(len: usize, a: usize, b: usize, periodic: bool) -> usize {
        let d = a.abs_diff(b);
        if periodic {
            d.min(len - d)
        } else {
            d
        }
    }

    /// Graph distance (minimal number of grid edges) between two sites.
    pub fn distance(&self, u: SiteCoord, v: SiteCoord) -> Result<usize> {
        if !self.contains(u) || !self.contains(v) {
            return Err(Error::InvalidInput(format!(
                "site out of range on {}x{} lattice",
                self.width, self.height
            )));
        }
        let periodic = self.boundary == Boundary::Periodic;
        Ok(Self::axis_distance(self.width, u.x, v.x, periodic)
            + Self::axis_distance(self.height, u.y, v.y, periodic))
    }

    /// All sites at distance <= r from `center`.
    pub fn disk(&self, center: SiteCoord, r: usize) -> Result<Region> {
        if !self.contains(center) {
            return Err(Error::InvalidInput("disk center out of range".into()));
        }
        let mut sites = BTreeSet::new();
        for v in self.sites() {
            if self.distance(center, v)? <= r {
                sites.insert(v);
            }
        }
        Ok(Region {
            home: *self,
            sites,
        })
    }

    pub fn full_region(&self) -> Region {
        Region {
            home: *self,
            sites: self.sites().collect(),
        }
    }

    pub fn empty_region(&self) -> Region {
        Region {
            home: *self,
            sites: BTreeSet::new(),
        }
    }

    pub fn region_from(&self, sites: impl IntoIterator<Item = SiteCoord>) -> Result<Region> {
        let sites: BTreeSet<SiteCoord> = sites.into_iter().collect();
        for &v in &sites {
            if !self.contains(v) {
                return Err(Error::InvalidInput(format!(
                    "site ({},{}) outside {}x{} lattice",
                    v.x, v.y, self.width, self.height
                )));
            }
        }
        Ok(Region { home: *self, sites })
    }

    /// Axis-aligned rectangle of sites with origin `(x0, y0)` (wrapped if
    /// periodic).
    pub fn rect(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Region> {
        let mut sites = BTreeSet::new();
        for dy in 0..h {
            for dx in 0..w {
                match self.wrap((x0 + dx) as i64, (y0 + dy) as i64) {
                    Some(v) => {
                        sites.insert(v);
                    }
                    None => {
                        return Err(Error::Sizing(format!(
                            "rectangle {w}x{h} at ({x0},{y0}) exceeds open {}x{} lattice",
                            self.width, self.height
                        )))
                    }
                }
            }
        }
        Ok(Region { home: *self, sites })
    }
}

/// A finite set of lattice sites.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    home: Lattice,
    sites: BTreeSet<SiteCoord>,
}

impl Region {
    pub fn lattice(&self) -> &Lattice {
        &self.home
    }

    pub fn sites(&self) -> impl Iterator<Item = SiteCoord> + '_ {
        self.sites.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn contains(&self, v: SiteCoord) -> bool {
        self.sites.contains(&v)
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.sites.is_subset(&other.sites)
    }

    pub fn union(&self, other: &Region) -> Region {
        Region {
            home: self.home,
            sites: self.sites.union(&other.sites).copied().collect(),
        }
    }

    pub fn intersection(&self, other: &Region) -> Region {
        Region {
            home: self.home,
            sites: self.sites.intersection(&other.sites).copied().collect(),
        }
    }

    pub fn complement(&self) -> Region {
        Region {
            home: self.home,
            sites: self
                .home
                .sites()
                .filter(|v| !self.sites.contains(v))
                .collect(),
        }
    }

    /// Union of r-disks around every site of the region.
    pub fn thicken(&self, r: usize) -> Region {
        if r == 0 {
            return self.clone();
        }
        let mut sites = BTreeSet::new();
        for v in self.home.sites() {
            // v is within r of the region iff some region site is within r of v
            if self
                .sites
                .iter()
                .any(|&u| self.home.distance(u, v).unwrap() <= r)
            {
                sites.insert(v);
            }
        }
        Region {
            home: self.home,
            sites,
        }
    }

    /// Sites of the region at distance > d from the complement.
    pub fn interior(&self, d: usize) -> Region {
        let comp: Vec<SiteCoord> = self.complement().sites().collect();
        let sites = self
            .sites
            .iter()
            .copied()
            .filter(|&v| {
                comp.iter()
                    .all(|&x| self.home.distance(v, x).unwrap() > d)
            })
            .collect();
        Region {
            home: self.home,
            sites,
        }
    }

    /// Covers the region with disks of the given radius, centers drawn from a
    /// square grid of pitch `disk_radius`, pruned greedily (largest uncovered
    /// gain first).
    pub fn cover_with_disks(&self, disk_radius: usize) -> Result<Vec<Region>> {
        if disk_radius == 0 {
            return Err(Error::InvalidInput("disk_radius must be >= 1".into()));
        }
        if self.sites.is_empty() {
            return Ok(Vec::new());
        }
        // candidate centers: pitch-r grid anchored at the bounding box corner
        let min_x = self.sites.iter().map(|v| v.x).min().unwrap();
        let min_y = self.sites.iter().map(|v| v.y).min().unwrap();
        let mut candidates = Vec::new();
        let mut x = min_x;
        loop {
            let mut y = min_y;
            loop {
                if let Some(c) = self.home.wrap(x as i64, y as i64) {
                    candidates.push(c);
                }
                y += disk_radius;
                if y >= min_y + self.home.height {
                    break;
                }
            }
            x += disk_radius;
            if x >= min_x + self.home.width {
                break;
            }
        }
        // grid can miss border sites on open lattices when the pitch overshoots;
        // fall back to region sites themselves as extra candidates
        candidates.extend(self.sites.iter().copied());

        let mut uncovered = self.sites.clone();
        let mut cover = Vec::new();
        while !uncovered.is_empty() {
            let mut best: Option<(usize, SiteCoord)> = None;
            for &c in &candidates {
                let gain = uncovered
                    .iter()
                    .filter(|&&v| self.home.distance(c, v).unwrap() <= disk_radius)
                    .count();
                if gain > best.map_or(0, |(g, _)| g) {
                    best = Some((gain, c));
                }
            }
            let (_, c) = best.expect("region sites are their own candidates");
            let disk = self.home.disk(c, disk_radius)?;
            uncovered.retain(|v| !disk.contains(*v));
            cover.push(disk);
        }
        Ok(cover)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn torus(w: usize, h: usize) -> Lattice {
        Lattice::new(w, h, Boundary::Periodic).unwrap()
    }

    fn open(w: usize, h: usize) -> Lattice {
        Lattice::new(w, h, Boundary::Open).unwrap()
    }

    /// BFS oracle for the grid-graph metric.
    fn bfs_distance(l: &Lattice, u: SiteCoord, v: SiteCoord) -> usize {
        use std::collections::VecDeque;
        let mut dist = vec![usize::MAX; l.site_count()];
        let mut q = VecDeque::new();
        dist[l.index_of(u)] = 0;
        q.push_back(u);
        while let Some(s) = q.pop_front() {
            let d = dist[l.index_of(s)];
            if s == v {
                return d;
            }
            for (dx, dy) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                if let Some(n) = l.wrap(s.x as i64 + dx, s.y as i64 + dy) {
                    if dist[l.index_of(n)] == usize::MAX {
                        dist[l.index_of(n)] = d + 1;
                        q.push_back(n);
                    }
                }
            }
        }
        unreachable!("grid graph is connected")
    }

    #[test]
    fn distance_identity_and_wraparound() {
        let l = torus(6, 6);
        assert_eq!(
            l.distance(SiteCoord::new(0, 0), SiteCoord::new(0, 0)).unwrap(),
            0
        );
        assert_eq!(
            l.distance(SiteCoord::new(0, 0), SiteCoord::new(5, 0)).unwrap(),
            1
        );
    }

    #[test]
    fn distance_open_matches_bfs() {
        let l = open(6, 6);
        assert_eq!(
            l.distance(SiteCoord::new(0, 0), SiteCoord::new(5, 3)).unwrap(),
            8
        );
        assert_eq!(
            bfs_distance(&l, SiteCoord::new(0, 0), SiteCoord::new(5, 3)),
            8
        );
    }

    #[test]
    fn distance_agrees_with_bfs_everywhere() {
        for l in [torus(5, 4), open(5, 4)] {
            for u in l.sites() {
                for v in l.sites() {
                    assert_eq!(l.distance(u, v).unwrap(), bfs_distance(&l, u, v));
                }
            }
        }
    }

    #[test]
    fn distance_rejects_out_of_range() {
        let l = open(4, 4);
        assert!(l
            .distance(SiteCoord::new(0, 0), SiteCoord::new(7, 0))
            .is_err());
    }

    #[test]
    fn disk_examples() {
        let l = open(10, 10);
        let c = SiteCoord::new(5, 5);
        assert_eq!(l.disk(c, 0).unwrap().len(), 1);
        assert_eq!(l.disk(c, 1).unwrap().len(), 5);
        // 4x4 torus has diameter 4
        let t = torus(4, 4);
        assert_eq!(t.disk(SiteCoord::new(0, 0), 4).unwrap().len(), 16);
    }

    #[test]
    fn thicken_examples() {
        let l = open(10, 10);
        let a = l.rect(2, 2, 3, 2).unwrap();
        assert_eq!(a.thicken(0), a);
        let single = l.region_from([SiteCoord::new(0, 0)]).unwrap();
        assert_eq!(single.thicken(1), l.disk(SiteCoord::new(0, 0), 1).unwrap());
        // pair at distance 4, thickened by 1: two disjoint 5-site disks
        let pair = l
            .region_from([SiteCoord::new(2, 2), SiteCoord::new(6, 2)])
            .unwrap();
        assert_eq!(pair.thicken(1).len(), 10);
    }

    #[test]
    fn interior_examples() {
        let l = open(20, 20);
        let a = l.rect(3, 3, 5, 4).unwrap();
        assert_eq!(a.interior(0), a);
        let d3 = l.disk(SiteCoord::new(10, 10), 3).unwrap();
        assert_eq!(d3.interior(1), l.disk(SiteCoord::new(10, 10), 2).unwrap());
        let t = torus(4, 4);
        let full = t.full_region();
        assert_eq!(full.interior(7), full);
    }

    #[test]
    fn cover_examples() {
        let l = open(20, 20);
        let single = l.region_from([SiteCoord::new(4, 4)]).unwrap();
        assert_eq!(single.cover_with_disks(2).unwrap().len(), 1);
        assert!(l.empty_region().cover_with_disks(3).unwrap().is_empty());

        // 1-thick ring of diameter 12
        let outer = l.rect(3, 3, 12, 12).unwrap();
        let ring_sites: Vec<SiteCoord> = outer
            .sites()
            .filter(|v| v.x == 3 || v.x == 14 || v.y == 3 || v.y == 14)
            .collect();
        let ring = l.region_from(ring_sites).unwrap();
        let cover = ring.cover_with_disks(3).unwrap();
        assert!(cover.len() <= 16, "k = {}", cover.len());
        let mut union = l.empty_region();
        for d in &cover {
            union = union.union(d);
        }
        assert!(ring.is_subset(&union));
    }
}
