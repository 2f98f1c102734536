//! Desk-scale experiments: enumerate the sifted points of a scaled region,
//! count prime factors of the form products, and compare with the sieve main
//! term.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forms::{FormError, FormSystem, QuadraticForm};
use crate::localdensity::sifted_size;
use crate::numutil;
use crate::region::{Region, RegionError, Shape};
use crate::sievebound::{self, SieveError, SieveParams};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("the region has {points} lattice points in its bounding box, above the cap {cap}")]
    CapExceeded { points: u128, cap: u128 },
    #[error("no tabulated r_M for g = {0}; give r explicitly")]
    NoDefaultR(usize),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Sieve(#[from] SieveError),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

/// Bounding-box size allowed for one run.
pub const DEFAULT_POINT_CAP: u128 = 100_000_000;

/// An integer given either as a JSON number or as a decimal string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "IntRepr", into = "IntRepr")]
pub struct Int(pub i64);

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum IntRepr {
    Num(i64),
    Str(String),
}

impl TryFrom<IntRepr> for Int {
    type Error = String;
    fn try_from(v: IntRepr) -> std::result::Result<Self, String> {
        match v {
            IntRepr::Num(n) => Ok(Int(n)),
            IntRepr::Str(s) => s
                .trim()
                .parse()
                .map(Int)
                .map_err(|e| format!("bad integer {s:?}: {e}")),
        }
    }
}

impl From<Int> for IntRepr {
    fn from(v: Int) -> Self {
        IntRepr::Num(v.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// `(a, b, c)` for `a x² + 2b xy + c y²`.
    pub forms: Vec<[Int; 3]>,
    pub region: Shape,
    #[serde(rename = "X")]
    pub x: Int,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<u32>,
    #[serde(default = "default_strict")]
    pub strict_mode: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<[Int; 2]>,
}

fn default_strict() -> bool {
    true
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.forms.is_empty() {
            return Err(ExperimentError::Config("no forms".into()));
        }
        if self.x.0 <= 0 {
            return Err(ExperimentError::Config("X must be positive".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(ExperimentError::Config("gamma must lie in (0, 1)".into()));
        }
        if self.r == Some(0) {
            return Err(ExperimentError::Config("r must be at least 1".into()));
        }
        Ok(())
    }

    pub fn quadratic_forms(&self) -> Vec<QuadraticForm> {
        self.forms
            .iter()
            .map(|[a, b, c]| QuadraticForm::new(a.0, b.0, c.0))
            .collect()
    }

    pub fn system(&self) -> Result<FormSystem> {
        let forms = self.quadratic_forms();
        Ok(match self.z {
            Some([z1, z2]) => {
                FormSystem::build_with_z(forms, self.strict_mode, (z1.0 as i128, z2.0 as i128))?
            }
            None => FormSystem::build(forms, self.strict_mode)?,
        })
    }

    pub fn scaled_region(&self) -> Result<Region> {
        Ok(Region::new(self.region.clone(), self.x.0 as f64)?)
    }
}

/// Outcome of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    #[serde(rename = "X")]
    pub x: i64,
    /// Points with every form value nonzero and factored.
    pub total_points: u64,
    /// Points at the origin or whose values could not be evaluated.
    pub skipped: u64,
    /// Ω of the product, with multiplicity, against the number of points.
    pub histogram: BTreeMap<u32, u64>,
    /// `None` means no threshold.
    pub r: Option<u32>,
    pub p_r_count: u64,
    /// `Y = X² vol(R⁰)/D²`
    pub y: f64,
    /// `∏_{p < X^γ} (1 − ω(p)/p)`
    pub density: f64,
    pub predicted: f64,
    pub ratio: f64,
}

impl ExperimentReport {
    /// Histogram in long form: `X,total_points,skipped,omega_value,count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("X,total_points,skipped,omega_value,count\n");
        for (omega, count) in &self.histogram {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.x, self.total_points, self.skipped, omega, count
            ));
        }
        out
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "p_r_count": self.p_r_count,
            "predicted": self.predicted,
            "ratio": self.ratio,
        })
    }
}

/// Which threshold to tally against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Threshold {
    /// `r` from the config, or the tabulated `r_M` for `κ = g`.
    Configured,
    /// Every point counts.
    All,
}

/// `r_M` for `κ = g` from the tabulated constants.
pub fn default_r(g: usize) -> Result<u32> {
    let params = SieveParams::tabulated(g as u32).map_err(|_| ExperimentError::NoDefaultR(g))?;
    Ok(sievebound::minimize_r(&params)?.r_m)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment_with(cfg, Threshold::Configured)
}

pub fn run_experiment_with(cfg: &ExperimentConfig, threshold: Threshold) -> Result<ExperimentReport> {
    cfg.validate()?;
    let sys = cfg.system()?;
    let region = cfg.scaled_region()?;
    let points = region.bounding_area();
    if points > DEFAULT_POINT_CAP {
        return Err(ExperimentError::CapExceeded {
            points,
            cap: DEFAULT_POINT_CAP,
        });
    }
    let r = match threshold {
        Threshold::All => None,
        Threshold::Configured => Some(match cfg.r {
            Some(r) => r,
            None => default_r(sys.g())?,
        }),
    };

    let rows = region.residue_rows(sys.abs_d(), sys.z());
    let m = sys.abs_d() as i128;
    let (histogram, skipped) = rows
        .par_iter()
        .map(|&(y, first, last)| {
            let mut hist = BTreeMap::new();
            let mut skipped = 0u64;
            let mut x = first;
            while x <= last {
                match omega_of_product(&sys, (x, y)) {
                    Some(w) => *hist.entry(w).or_insert(0u64) += 1,
                    None => skipped += 1,
                }
                x += m;
            }
            (hist, skipped)
        })
        .reduce(
            || (BTreeMap::new(), 0),
            |(mut h1, s1), (h2, s2)| {
                for (k, v) in h2 {
                    *h1.entry(k).or_insert(0) += v;
                }
                (h1, s1 + s2)
            },
        );
    let total_points: u64 = histogram.values().sum();
    let p_r_count = match r {
        Some(r) => histogram.range(..=r).map(|(_, c)| c).sum(),
        None => total_points,
    };
    let y = sifted_size(&sys, &region);
    let density = sievebound::density_product(&sys, cfg.x.0 as f64, cfg.gamma)?;
    let predicted = y * density;
    Ok(ExperimentReport {
        x: cfg.x.0,
        total_points,
        skipped,
        histogram,
        r,
        p_r_count,
        y,
        density,
        predicted,
        ratio: p_r_count as f64 / predicted,
    })
}

/// Ω(|q₁(x)⋯q_g(x)|), or `None` at the origin, at a zero value, or on overflow.
fn omega_of_product(sys: &FormSystem, x: (i128, i128)) -> Option<u32> {
    if x == (0, 0) {
        return None;
    }
    let mut total = 0;
    for q in sys.forms() {
        let v = q.eval(x).ok()?;
        if v == 0 {
            return None;
        }
        total += numutil::omega_big(v.unsigned_abs()).ok()?;
    }
    Some(total)
}
