//! Geometrically local Clifford circuits as ordered gate layers.
//!
//! Text format: one layer per line, gates separated by `;`, e.g.
//! `H (0,0); CNOT (0,0) (1,0)`. Blank lines and `#` comments are ignored.

use std::fmt;

use crate::error::{Error, Result};
use crate::lattice::{Lattice, SiteCoord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    H(SiteCoord),
    S(SiteCoord),
    X(SiteCoord),
    Y(SiteCoord),
    Z(SiteCoord),
    Cnot(SiteCoord, SiteCoord),
    Cz(SiteCoord, SiteCoord),
}

impl Gate {
    pub fn sites(&self) -> Vec<SiteCoord> {
        match *self {
            Gate::H(a) | Gate::S(a) | Gate::X(a) | Gate::Y(a) | Gate::Z(a) => vec![a],
            Gate::Cnot(a, b) | Gate::Cz(a, b) => vec![a, b],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::H(_) => "H",
            Gate::S(_) => "S",
            Gate::X(_) => "X",
            Gate::Y(_) => "Y",
            Gate::Z(_) => "Z",
            Gate::Cnot(..) => "CNOT",
            Gate::Cz(..) => "CZ",
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())?;
        for s in self.sites() {
            write!(f, " ({},{})", s.x, s.y)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct Circuit {
    pub layers: Vec<Vec<Gate>>,
    pub locality_radius: usize,
}

impl Circuit {
    pub fn new(layers: Vec<Vec<Gate>>) -> Self {
        Circuit {
            layers,
            locality_radius: 1,
        }
    }

    pub fn with_locality_radius(mut self, r: usize) -> Self {
        self.locality_radius = r;
        self
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Checks layer-disjointness and two-qubit gate locality against the
    /// lattice metric.
    pub fn validate(&self, lattice: &Lattice) -> Result<()> {
        for layer in &self.layers {
            let mut used = std::collections::BTreeSet::new();
            for gate in layer {
                for s in gate.sites() {
                    if !lattice.contains(s) {
                        return Err(Error::InvalidInput(format!(
                            "gate {gate} addresses site outside {}x{} lattice",
                            lattice.width, lattice.height
                        )));
                    }
                    if !used.insert(s) {
                        return Err(Error::InvalidInput(format!(
                            "overlapping gate supports within a layer at ({},{})",
                            s.x, s.y
                        )));
                    }
                }
                if let Gate::Cnot(a, b) | Gate::Cz(a, b) = *gate {
                    let d = lattice.distance(a, b)?;
                    if d > self.locality_radius {
                        return Err(Error::Locality {
                            gate: gate.to_string(),
                            distance: d,
                            radius: self.locality_radius,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Depth-`depth` random circuit of nearest-neighbor gates, deterministic
    /// for a given RNG state.
    pub fn random_local<R: rand::Rng>(lattice: &Lattice, depth: usize, rng: &mut R) -> Circuit {
        use rand::seq::SliceRandom;
        let mut layers = Vec::with_capacity(depth);
        for _ in 0..depth {
            let mut order: Vec<SiteCoord> = lattice.sites().collect();
            order.shuffle(rng);
            let mut used = std::collections::BTreeSet::new();
            let mut layer = Vec::new();
            for s in order {
                if used.contains(&s) {
                    continue;
                }
                used.insert(s);
                let mut neighbors: Vec<SiteCoord> = [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)]
                    .iter()
                    .filter_map(|&(dx, dy)| lattice.wrap(s.x as i64 + dx, s.y as i64 + dy))
                    .filter(|v| !used.contains(v) && *v != s)
                    .collect();
                neighbors.sort();
                if !neighbors.is_empty() && rng.gen_bool(0.6) {
                    let t = neighbors[rng.gen_range(0..neighbors.len())];
                    used.insert(t);
                    layer.push(if rng.gen_bool(0.5) {
                        Gate::Cnot(s, t)
                    } else {
                        Gate::Cz(s, t)
                    });
                } else {
                    layer.push(match rng.gen_range(0..6) {
                        0 | 1 => Gate::H(s),
                        2 | 3 => Gate::S(s),
                        4 => Gate::X(s),
                        _ => Gate::Z(s),
                    });
                }
            }
            layers.push(layer);
        }
        Circuit::new(layers)
    }

    pub fn to_text(&self) -> String {
        self.layers
            .iter()
            .map(|layer| {
                layer
                    .iter()
                    .map(|g| g.to_string())
                    .collect::<Vec<_>>()
                    .join("; ")
            })
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// Parses the layer-per-line text format with line-numbered errors.
    pub fn from_text(text: &str) -> Result<Circuit> {
        let mut layers = Vec::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut layer = Vec::new();
            for chunk in line.split(';') {
                let chunk = chunk.trim();
                if chunk.is_empty() {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: "empty gate between separators".into(),
                    });
                }
                layer.push(parse_gate(chunk, line_no)?);
            }
            layers.push(layer);
        }
        Ok(Circuit::new(layers))
    }
}

fn parse_site(tok: &str, line: usize) -> Result<SiteCoord> {
    let bad = |msg: String| Error::Parse { line, msg };
    let inner = tok
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| bad(format!("expected (x,y), got {tok:?}")))?;
    let (xs, ys) = inner
        .split_once(',')
        .ok_or_else(|| bad(format!("expected (x,y), got {tok:?}")))?;
    let x = xs
        .trim()
        .parse()
        .map_err(|_| bad(format!("bad x coordinate in {tok:?}")))?;
    let y = ys
        .trim()
        .parse()
        .map_err(|_| bad(format!("bad y coordinate in {tok:?}")))?;
    Ok(SiteCoord::new(x, y))
}

fn parse_gate(chunk: &str, line: usize) -> Result<Gate> {
    let mut parts = chunk.split_whitespace();
    let name = parts.next().ok_or(Error::Parse {
        line,
        msg: "missing gate name".into(),
    })?;
    let sites: Vec<SiteCoord> = parts
        .map(|t| parse_site(t, line))
        .collect::<Result<_>>()?;
    let arity_err = |want: usize| Error::Parse {
        line,
        msg: format!("{name} takes {want} site(s), got {}", sites.len()),
    };
    let one = |f: fn(SiteCoord) -> Gate| {
        if sites.len() == 1 {
            Ok(f(sites[0]))
        } else {
            Err(arity_err(1))
        }
    };
    let two = |f: fn(SiteCoord, SiteCoord) -> Gate| {
        if sites.len() == 2 {
            Ok(f(sites[0], sites[1]))
        } else {
            Err(arity_err(2))
        }
    };
    match name {
        "H" => one(Gate::H),
        "S" => one(Gate::S),
        "X" => one(Gate::X),
        "Y" => one(Gate::Y),
        "Z" => one(Gate::Z),
        "CNOT" => two(Gate::Cnot),
        "CZ" => two(Gate::Cz),
        other => Err(Error::Parse {
            line,
            msg: format!("unknown gate {other:?}"),
        }),
    }
}
