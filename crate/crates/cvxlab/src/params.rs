//! Command parameters: one set of flags shared by every command, which is
//! also the shape of the `--config` JSON file. Flags override the file.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, ValueEnum};
use cvxlab_core::domains::{BallConfig, RhoKind};
use cvxlab_core::verify::Suite;
use cvxlab_core::{CVec, ModulusKind, QuadCtrl, SpaceSpec};
use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

/// Types written as strings on the command line and in JSON.
macro_rules! text_serde {
    ($t:ty) => {
        impl Serialize for $t {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }
        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                String::deserialize(d)?.parse().map_err(de::Error::custom)
            }
        }
    };
}

/// `lp:2:3` on the command line; a string or a full space object in JSON.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceArg(pub SpaceSpec);

impl FromStr for SpaceArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        s.parse().map(SpaceArg).map_err(|e: cvxlab_core::Error| e.to_string())
    }
}

impl fmt::Display for SpaceArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl Serialize for SpaceArg {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for SpaceArg {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Spec(SpaceSpec),
        }
        match Raw::deserialize(d)? {
            Raw::Text(t) => t.parse().map_err(de::Error::custom),
            Raw::Spec(s) => {
                s.validate().map_err(de::Error::custom)?;
                Ok(SpaceArg(s))
            }
        }
    }
}

/// ε grid: `a:b:n` (n evenly spaced points, both ends included) or a comma
/// list; a string or a list of numbers in JSON.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct EpsArg(pub Vec<f64>);

impl FromStr for EpsArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("cannot parse eps grid `{s}` (expected a:b:n or a comma list)");
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        let parts: Vec<&str> = s.split(':').collect();
        let v = match parts.as_slice() {
            [a, b, n] => {
                let (a, b) = (num(a)?, num(b)?);
                let n: usize = n.trim().parse().map_err(|_| bad())?;
                match n {
                    0 => return Err(bad()),
                    1 => vec![a],
                    // Weighted form keeps both endpoints exact.
                    _ => (0..n).map(|k| (a * (n - 1 - k) as f64 + b * k as f64) / (n - 1) as f64).collect(),
                }
            }
            [list] => list.split(',').map(num).collect::<Result<_, _>>()?,
            _ => return Err(bad()),
        };
        Ok(EpsArg(v))
    }
}

impl<'de> Deserialize<'de> for EpsArg {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            List(Vec<f64>),
        }
        match Raw::deserialize(d)? {
            Raw::Text(t) => t.parse().map_err(de::Error::custom),
            Raw::List(v) => Ok(EpsArg(v)),
        }
    }
}

/// A point of ℂⁿ as interleaved `re,im` pairs: `1,0,0,0` is (1, 0) ∈ ℂ².
#[derive(Debug, Clone, PartialEq)]
pub struct PointArg(pub CVec);

impl FromStr for PointArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let v = s
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| format!("cannot parse point `{s}`")))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_reals(v)
    }
}

impl PointArg {
    fn from_reals(v: Vec<f64>) -> Result<Self, String> {
        if v.is_empty() || !v.len().is_multiple_of(2) {
            return Err(format!("a point needs an even number of reals (re,im pairs), got {}", v.len()));
        }
        Ok(PointArg(CVec::from_interleaved(&v)))
    }
}

impl Serialize for PointArg {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<f64> = self.0.as_slice().iter().flat_map(|z| [z.re, z.im]).collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PointArg {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            List(Vec<f64>),
        }
        match Raw::deserialize(d)? {
            Raw::Text(t) => t.parse().map_err(de::Error::custom),
            Raw::List(v) => PointArg::from_reals(v).map_err(de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModulusArg(pub ModulusKind);

impl FromStr for ModulusArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let k = match s {
            "delta" | "delta_X" => ModulusKind::DeltaX,
            "delta_q" => ModulusKind::DeltaQ,
            "Delta_q" | "Delta" => ModulusKind::BigDeltaQ,
            "H" | "H_p" => ModulusKind::Hp,
            _ => return Err(format!("unknown modulus `{s}` (expected delta, delta_q, Delta_q or H)")),
        };
        Ok(ModulusArg(k))
    }
}

impl fmt::Display for ModulusArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.0 {
            ModulusKind::DeltaX => "delta",
            ModulusKind::DeltaQ => "delta_q",
            ModulusKind::BigDeltaQ => "Delta_q",
            ModulusKind::Hp => "H",
        })
    }
}

text_serde!(ModulusArg);

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: cvxlab_core::Error| e.to_string())
}

fn parse_rho(s: &str) -> Result<RhoKind, String> {
    match s {
        "p_power" => Ok(RhoKind::PPower),
        "norm_minus_one" => Ok(RhoKind::NormMinusOne),
        _ => Err(format!("unknown defining function `{s}` (expected p_power or norm_minus_one)")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    /// JSON file with any of these parameters; flags take precedence
    #[arg(long, value_name = "PATH")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Command the config file was written for (config files only)
    #[arg(skip)]
    #[serde(skip_serializing)]
    pub command: Option<String>,

    /// Space: lp:P:N, hilbert:N, schatten:R:SIDE, weighted_lp:P:W1,W2,.. (P may be inf)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceArg>,
    /// Ball domain as JSON (config files only)
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain: Option<BallConfig>,
    /// Defining function of a ball: p_power (‖z‖^p − R^p) or norm_minus_one (‖z‖ − R)
    #[arg(long, value_parser = parse_rho)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<RhoKind>,
    /// Ball radius
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,

    /// Modulus: delta, delta_q, Delta_q or H
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modulus: Option<ModulusArg>,
    /// Exponent of the modulus: q for delta_q/Delta_q, p for H
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exp: Option<f64>,
    /// ε grid: a:b:n or a comma list
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<EpsArg>,
    /// Search budget per estimate
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    /// Seed of every random choice (default 0)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    /// Verification suite: thm51, sec6_chain, sec7_equiv, weissler, known_facts
    #[arg(long, value_parser = parse_suite)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<Suite>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    /// Number of seeded samples
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// ε grid size used by the suites
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    /// Inequality slack
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slack: Option<f64>,
    /// Circle quadrature tolerance
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quad_tol: Option<f64>,
    /// Circle quadrature node cap
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quad_max_nodes: Option<usize>,
    /// Re-check a saved verdict report instead of running a suite
    #[arg(long, value_name = "REPORT")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replay: Option<PathBuf>,

    /// Test function: norm2sq, neg_norm2sq, exp_norm2sq, re_z1, abs_re_z1, abs_z1z2, log_abs_z1, norm:<space>;
    /// for `domain exhaustion` also inv_rho[:C] (C/|ρ|)
    #[arg(long = "fn", value_name = "NAME")]
    #[serde(rename = "fn", skip_serializing_if = "Option::is_none")]
    pub func: Option<String>,
    /// Number of complex variables of the test function (default 1)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// Region: cube:S, polydisc:R or ball:<space>
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region: Option<String>,
    /// Point as interleaved re,im pairs
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<PointArg>,
    /// Direction as interleaved re,im pairs
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PointArg>,
    /// Largest probing radius
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    /// Number of probing directions
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dirs: Option<usize>,
    /// Pass tolerance of a scan
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Lower bound required of inf φ·|ρ|
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,

    /// Grid function header (JSON) to read
    #[arg(long, value_name = "PATH")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<PathBuf>,
    /// Mollifier radius
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Sampling box lo:hi, applied to every real coordinate
    #[arg(long = "box", value_name = "LO:HI", allow_hyphen_values = true)]
    #[serde(rename = "box", skip_serializing_if = "Option::is_none")]
    pub bounds: Option<String>,
    /// Grid points per real axis
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape: Option<usize>,
    /// Write grid data as little-endian f64 instead of CSV
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub binary: Option<bool>,

    /// Output format (csv only for moduli and domain scan)
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    /// Output file (default: standard output); for psh mollify, the grid header to write
    #[arg(long, value_name = "PATH")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

macro_rules! fill {
    ($a:ident, $b:ident; $($f:ident),* $(,)?) => {
        $( if $a.$f.is_none() { $a.$f = $b.$f.take(); } )*
    };
}

impl Params {
    /// Fills every unset field from `file`.
    pub fn fill_from(&mut self, mut file: Params) {
        fill!(self, file; command, space, domain, rho, radius, modulus, exp, eps, budget, seed, suite, p, q, r,
            samples, grid_points, slack, quad_tol, quad_max_nodes, replay, func, dim, region, point, dir, r_max,
            dirs, tol, threshold, grid, delta, bounds, shape, binary, format, out);
    }

    /// Loads `--config` if given, checking it was written for `command`.
    pub fn resolve(mut self, command: &str) -> Result<Self, String> {
        if let Some(path) = self.config.clone() {
            let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            let file: Params = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
            if let Some(c) = &file.command {
                if c != command {
                    return Err(format!("{}: config is for `{c}`, not `{command}`", path.display()));
                }
            }
            self.fill_from(file);
        }
        Ok(self)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn quad(&self) -> Option<QuadCtrl> {
        if self.quad_tol.is_none() && self.quad_max_nodes.is_none() {
            return None;
        }
        let d = QuadCtrl::default();
        Some(QuadCtrl { tol: self.quad_tol.unwrap_or(d.tol), max_nodes: self.quad_max_nodes.unwrap_or(d.max_nodes) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eps_grammar() {
        assert_eq!("0.1:1.0:10".parse::<EpsArg>().unwrap().0.len(), 10);
        let g = "0:1:5".parse::<EpsArg>().unwrap().0;
        assert_eq!(g, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!("0.25,0.5".parse::<EpsArg>().unwrap().0, vec![0.25, 0.5]);
        assert!("1:2".parse::<EpsArg>().is_err());
        assert!("1:2:0".parse::<EpsArg>().is_err());
    }

    #[test]
    fn point_grammar() {
        let p = "1,0,0,-2".parse::<PointArg>().unwrap();
        assert_eq!(p.0.dim(), 2);
        assert_eq!(p.0.as_slice()[1].im, -2.0);
        assert!("1,0,0".parse::<PointArg>().is_err());
    }

    #[test]
    fn config_rejects_unknown_keys_and_accepts_rich_forms() {
        assert!(serde_json::from_str::<Params>(r#"{"sede": 1}"#).is_err());
        let p: Params = serde_json::from_str(
            r#"{"space": {"family": "lp", "p": "inf", "dim": 2}, "eps": [0.5, 1], "point": "1,0", "modulus": "H", "fn": "re_z1"}"#,
        )
        .unwrap();
        assert_eq!(p.space.unwrap().0, SpaceSpec::lp(f64::INFINITY, 2));
        assert_eq!(p.eps.unwrap().0, vec![0.5, 1.0]);
        assert_eq!(p.modulus, Some(ModulusArg(ModulusKind::Hp)));
        assert_eq!(p.func.as_deref(), Some("re_z1"));
    }

    #[test]
    fn flags_override_file() {
        let mut flags = Params { seed: Some(3), ..Default::default() };
        let file = Params { seed: Some(9), samples: Some(10), ..Default::default() };
        flags.fill_from(file);
        assert_eq!((flags.seed, flags.samples), (Some(3), Some(10)));
    }
}
