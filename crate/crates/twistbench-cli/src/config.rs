//! Experiment configuration: a JSON file, command-line overrides, and the
//! validation that runs before any computation starts. Validation messages
//! always name the offending field and the violated constraint.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use twistbench::lattice::{Boundary, Lattice, Region};
use twistbench::stabilizer::NoiseModel;

/// Usage-level failure: maps to exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn usage(msg: impl Into<String>) -> UsageError {
    UsageError(msg.into())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeConfig {
    pub width: usize,
    pub height: usize,
    pub boundary: String,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        LatticeConfig {
            width: 16,
            height: 16,
            boundary: "periodic".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoopConfig {
    pub diameter: usize,
    pub d_sep: usize,
    /// x0, y0, width, height of the evaluation region; defaults to a
    /// centered window when absent.
    pub region: Option<[usize; 4]>,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            diameter: 8,
            d_sep: 8,
            region: None,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub px: f64,
    pub py: f64,
    pub pz: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub format: String,
    pub path: Option<PathBuf>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            format: "csv".into(),
            path: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub lattice: LatticeConfig,
    #[serde(rename = "loop")]
    pub loop_pair: LoopConfig,
    pub noise: NoiseConfig,
    /// Symmetric per-axis noise rates for sweep commands.
    pub sweep: Vec<f64>,
    pub shots: usize,
    pub seed: u64,
    pub depth_sweep: Vec<usize>,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            lattice: LatticeConfig::default(),
            loop_pair: LoopConfig::default(),
            noise: NoiseConfig::default(),
            sweep: Vec::new(),
            shots: 10_000,
            seed: 0,
            depth_sweep: Vec::new(),
            output: OutputConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, UsageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("config: cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| usage(format!("config: {} is not a valid config file: {e}", path.display())))
    }

    /// Field-by-field validation; library preconditions are checked again at
    /// build time, this pass exists to produce named-field messages early.
    pub fn validate(&self) -> Result<(), UsageError> {
        if self.lattice.width < 2 {
            return Err(usage(format!(
                "lattice.width: {} violates the minimum of 2",
                self.lattice.width
            )));
        }
        if self.lattice.height < 2 {
            return Err(usage(format!(
                "lattice.height: {} violates the minimum of 2",
                self.lattice.height
            )));
        }
        if self.lattice.boundary != "periodic" && self.lattice.boundary != "open" {
            return Err(usage(format!(
                "lattice.boundary: '{}' is not 'periodic' or 'open'",
                self.lattice.boundary
            )));
        }
        if let Some([x0, y0, w, h]) = self.loop_pair.region {
            if w == 0 || h == 0 {
                return Err(usage("loop.region: width and height must be positive".to_string()));
            }
            if self.lattice.boundary == "open"
                && (x0 + w > self.lattice.width || y0 + h > self.lattice.height)
            {
                return Err(usage(format!(
                    "loop.region: window {x0},{y0} size {w}x{h} leaves the {}x{} open lattice",
                    self.lattice.width, self.lattice.height
                )));
            }
        }
        for (name, p) in [
            ("noise.px", self.noise.px),
            ("noise.py", self.noise.py),
            ("noise.pz", self.noise.pz),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(usage(format!("{name}: rate {p} outside [0, 1]")));
            }
        }
        if self.noise.px + self.noise.py + self.noise.pz > 1.0 {
            return Err(usage(format!(
                "noise: px+py+pz = {} exceeds 1",
                self.noise.px + self.noise.py + self.noise.pz
            )));
        }
        for &r in &self.sweep {
            if !(0.0..=1.0 / 3.0).contains(&r) {
                return Err(usage(format!(
                    "sweep: rate {r} outside [0, 1/3] (applied on all three axes)"
                )));
            }
        }
        if self.shots == 0 {
            return Err(usage("shots: must be positive".to_string()));
        }
        if self.output.format != "csv" && self.output.format != "json" {
            return Err(usage(format!(
                "output.format: '{}' is not 'csv' or 'json'",
                self.output.format
            )));
        }
        Ok(())
    }

    pub fn lattice(&self) -> Result<Lattice, UsageError> {
        let boundary = match self.lattice.boundary.as_str() {
            "periodic" => Boundary::Periodic,
            "open" => Boundary::Open,
            other => return Err(usage(format!("lattice.boundary: unknown value '{other}'"))),
        };
        Lattice::new(self.lattice.width, self.lattice.height, boundary)
            .map_err(|e| usage(format!("lattice: {e}")))
    }

    /// The loop-pair evaluation region: the configured window, or a centered
    /// default matching the library's reference geometry.
    pub fn region(&self, lattice: &Lattice) -> Result<Region, UsageError> {
        match self.loop_pair.region {
            Some([x0, y0, w, h]) => lattice
                .rect(x0, y0, w, h)
                .map_err(|e| usage(format!("loop.region: {e}"))),
            None => {
                let w = (lattice.width - 2).min(12).max(2);
                let h = (lattice.height - 2).min(12).max(2);
                lattice
                    .rect(1, 1, w, h)
                    .map_err(|e| usage(format!("loop.region (default): {e}")))
            }
        }
    }

    pub fn noise_model(&self) -> Result<NoiseModel, UsageError> {
        NoiseModel::new(self.noise.px, self.noise.py, self.noise.pz)
            .map_err(|e| usage(format!("noise: {e}")))
    }
}

pub fn parse_lattice_flag(s: &str) -> Result<(usize, usize), UsageError> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| usage(format!("--lattice: '{s}' is not of the form WxH")))?;
    let w = w
        .trim()
        .parse()
        .map_err(|_| usage(format!("--lattice: width '{w}' is not an integer")))?;
    let h = h
        .trim()
        .parse()
        .map_err(|_| usage(format!("--lattice: height '{h}' is not an integer")))?;
    Ok((w, h))
}

pub fn parse_noise_flag(s: &str) -> Result<(f64, f64, f64), UsageError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(usage(format!("--noise: '{s}' is not of the form px,py,pz")));
    }
    let mut v = [0.0; 3];
    for (slot, raw) in v.iter_mut().zip(&parts) {
        *slot = raw
            .trim()
            .parse()
            .map_err(|_| usage(format!("--noise: '{raw}' is not a number")))?;
    }
    Ok((v[0], v[1], v[2]))
}

/// Inclusive a:b:step range of noise rates.
pub fn parse_sweep_flag(s: &str) -> Result<Vec<f64>, UsageError> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(usage(format!("--sweep: '{s}' is not of the form a:b:step")));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| usage(format!("--sweep: '{p}' is not a number")))
        })
        .collect::<Result<_, _>>()?;
    let (a, b, step) = (nums[0], nums[1], nums[2]);
    if step <= 0.0 {
        return Err(usage(format!("--sweep: step {step} must be positive")));
    }
    if b < a {
        return Err(usage(format!("--sweep: end {b} below start {a}")));
    }
    let mut out = Vec::new();
    let mut k = 0u64;
    loop {
        let r = a + step * k as f64;
        if r > b + step * 1e-9 {
            break;
        }
        out.push(r);
        k += 1;
    }
    Ok(out)
}

pub fn parse_region_flag(s: &str) -> Result<[usize; 4], UsageError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        return Err(usage(format!("--region: '{s}' is not of the form x0,y0,w,h")));
    }
    let mut v = [0usize; 4];
    for (slot, raw) in v.iter_mut().zip(&parts) {
        *slot = raw
            .trim()
            .parse()
            .map_err(|_| usage(format!("--region: '{raw}' is not an integer")))?;
    }
    Ok(v)
}

pub fn parse_depths_flag(s: &str) -> Result<Vec<usize>, UsageError> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| usage(format!("--depths: '{p}' is not an integer")))
        })
        .collect()
}
