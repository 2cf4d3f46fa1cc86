use std::path::{Path, PathBuf};

use serde::Deserialize;

/// Values read from `--config`. Keys are the long flag names; a flag given on
/// the command line wins over the file.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub lambda: Option<f64>,
    pub xi: Option<String>,
    pub grid_n: Option<usize>,
    pub grid_l: Option<f64>,
    pub tol: Option<f64>,
    pub k: Option<String>,
    pub h: Option<String>,
    pub lambda_range: Option<String>,
    pub xi_grid: Option<String>,
    pub out: Option<PathBuf>,
    #[serde(rename = "box")]
    pub box_radius: Option<f64>,
    pub s: Option<f64>,
    pub mesh: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("bad config {}: {e}", path.display()))
    }
}

/// `lo:hi:n`, inclusive, `n ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Range {
    pub fn parse(text: &str) -> Result<Self, String> {
        let parts: Vec<&str> = text.trim().split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected lo:hi:n, got {text:?}"));
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| format!("bad lower bound in {text:?}"))?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| format!("bad upper bound in {text:?}"))?;
        let n: usize = parts[2].trim().parse().map_err(|_| format!("bad count in {text:?}"))?;
        if !lo.is_finite() || !hi.is_finite() || lo > hi || n == 0 || (n == 1 && lo != hi) {
            return Err(format!("ill-formed range {text:?}"));
        }
        Ok(Self { lo, hi, n })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        (0..self.n)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64)
            .collect()
    }
}

/// One range for all three coordinates, or three comma-separated ranges.
pub fn parse_xi_grid(text: &str) -> Result<[Range; 3], String> {
    let parts: Vec<&str> = text.split(',').collect();
    match parts.len() {
        1 => {
            let r = Range::parse(parts[0])?;
            Ok([r, r, r])
        }
        3 => Ok([Range::parse(parts[0])?, Range::parse(parts[1])?, Range::parse(parts[2])?]),
        _ => Err(format!("expected one or three lo:hi:n ranges, got {text:?}")),
    }
}

pub fn parse_point(text: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = text
        .split(',')
        .map(|c| c.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| format!("expected three comma-separated numbers, got {text:?}"))?;
    match v.as_slice() {
        [a, b, c] if v.iter().all(|x| x.is_finite()) => Ok([*a, *b, *c]),
        _ => Err(format!("expected three comma-separated numbers, got {text:?}")),
    }
}
