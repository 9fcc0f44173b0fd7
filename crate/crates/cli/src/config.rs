use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use taylornet::BuildMode;

/// Run options as given on the command line or in a TOML file; unset fields fall through.
#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    /// Network to build: a primitive id or taylor-relu / taylor-relu2.
    #[arg(long)]
    pub function: Option<String>,
    /// Catalog target compiled by taylor-relu / taylor-relu2.
    #[arg(long)]
    pub target: Option<String>,
    /// Smoothness s.
    #[arg(long)]
    pub s: Option<u32>,
    /// Input dimension d.
    #[arg(long)]
    pub d: Option<usize>,
    /// Width parameter N (comma-separated list allowed).
    #[arg(long = "N", value_delimiter = ',')]
    #[serde(rename = "N", default, deserialize_with = "one_or_many")]
    pub big_n: Option<Vec<u64>>,
    /// Depth parameter L (comma-separated list allowed).
    #[arg(long = "L", value_delimiter = ',')]
    #[serde(rename = "L", default, deserialize_with = "one_or_many")]
    pub big_l: Option<Vec<u64>>,
    /// Sobolev order n (σ₂ paths and exact primitives).
    #[arg(long = "n")]
    #[serde(rename = "n")]
    pub order: Option<u32>,
    /// Lebesgue exponent p; enables the full-domain W^{n,p} check.
    #[arg(long)]
    pub p: Option<f64>,
    /// Step / point-matcher construction: direct or budget.
    #[arg(long)]
    pub mode: Option<BuildMode>,
    /// Sample points per axis for sup-norm estimates.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Seed for jittered grids and generated data.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Multi-index for monomial primitives, e.g. 2,1.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<u32>>,
    /// Trifling width δ (defaults to 1/(3K)).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Blocks side by side in exact-polynomial.
    #[arg(long)]
    pub a: Option<u64>,
    /// Blocks in sequence in exact-polynomial.
    #[arg(long)]
    pub b: Option<u64>,
}

fn one_or_many<'de, D: serde::Deserializer<'de>>(de: D) -> Result<Option<Vec<u64>>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(u64),
        Many(Vec<u64>),
    }
    Ok(Some(match OneOrMany::deserialize(de)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    }))
}

/// Fully resolved run configuration.
#[derive(Clone, Debug, Serialize)]
pub struct Config {
    pub function: String,
    pub target: String,
    pub s: u32,
    pub d: usize,
    #[serde(rename = "N")]
    pub big_n: Option<Vec<u64>>,
    #[serde(rename = "L")]
    pub big_l: Option<Vec<u64>>,
    #[serde(rename = "n")]
    pub order: u32,
    pub p: Option<f64>,
    pub mode: BuildMode,
    pub grid: Option<usize>,
    pub seed: u64,
    #[serde(skip)]
    pub out: PathBuf,
    pub alpha: Option<Vec<u32>>,
    pub delta: Option<f64>,
    pub a: Option<u64>,
    pub b: Option<u64>,
}

macro_rules! pick {
    ($cli:expr, $file:expr, $field:ident) => {
        $cli.$field.clone().or_else(|| $file.$field.clone())
    };
}

impl Config {
    /// Precedence: command line, then file, then defaults.
    pub fn resolve(cli: &Overrides, file: &Overrides) -> Config {
        Config {
            function: pick!(cli, file, function).unwrap_or_else(|| "taylor-relu".into()),
            target: pick!(cli, file, target).unwrap_or_else(|| "sine-product".into()),
            s: pick!(cli, file, s).unwrap_or(2),
            d: pick!(cli, file, d).unwrap_or(1),
            big_n: pick!(cli, file, big_n),
            big_l: pick!(cli, file, big_l),
            order: pick!(cli, file, order).unwrap_or(1),
            p: pick!(cli, file, p),
            mode: pick!(cli, file, mode).unwrap_or(BuildMode::Direct),
            grid: pick!(cli, file, grid),
            seed: pick!(cli, file, seed).unwrap_or(0),
            out: pick!(cli, file, out).unwrap_or_else(|| PathBuf::from("out")),
            alpha: pick!(cli, file, alpha),
            delta: pick!(cli, file, delta),
            a: pick!(cli, file, a),
            b: pick!(cli, file, b),
        }
    }

    /// SHA-256 of the canonical JSON form (output location excluded).
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Sample points per axis, defaulting by dimension.
    pub fn points_per_axis(&self, d: usize) -> usize {
        self.grid.unwrap_or(match d {
            1 => 20_000,
            2 => 100,
            _ => 20,
        })
    }

    /// `(N, L)` pairs: the cartesian product of the two lists.
    pub fn grid_pairs(&self, default: u64) -> Vec<(u64, u64)> {
        let ns = self.big_n.clone().unwrap_or_else(|| vec![default]);
        let ls = self.big_l.clone().unwrap_or_else(|| vec![default]);
        ns.iter().flat_map(|&n| ls.iter().map(move |&l| (n, l))).collect()
    }

    /// `(N, L)` pairs zipped position by position; a single value is broadcast.
    pub fn zipped_pairs(&self, default: &[u64]) -> Result<Vec<(u64, u64)>, String> {
        let ns = self.big_n.clone();
        let ls = self.big_l.clone();
        let (ns, ls) = match (ns, ls) {
            (None, None) => (default.to_vec(), default.to_vec()),
            (Some(n), None) => (n.clone(), n),
            (None, Some(l)) => (l.clone(), l),
            (Some(n), Some(l)) => (n, l),
        };
        match (ns.len(), ls.len()) {
            (a, b) if a == b => Ok(ns.into_iter().zip(ls).collect()),
            (1, _) => Ok(ls.into_iter().map(|l| (ns[0], l)).collect()),
            (_, 1) => Ok(ns.into_iter().map(|n| (n, ls[0])).collect()),
            (a, b) => Err(format!("N and L lists have different lengths ({a} vs {b})")),
        }
    }
}

pub fn load_file(path: Option<&Path>) -> Result<Overrides, String> {
    let Some(path) = path else {
        return Ok(Overrides::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| format!("parsing {}: {e}", path.display()))
}
