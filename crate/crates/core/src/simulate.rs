//! Synthetic grouped data from a sum of single-split trees.
//!
//! Each of the `P` trees splits one uniform covariate at a random observed
//! value. Every region gets a mean `mu ~ N(0, k2 / (P tau))` and every group
//! a region effect `mu_j ~ N(mu, k1 / (P tau))`; the response is the sum of
//! the group effects plus `N(0, 1 / tau)` noise.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use crate::data::Dataset;
use crate::distributions::{sample_gamma, sample_normal, uniform_index, RngStream};
use crate::error::{require_positive, Error, Result};

pub const COVARIATE: &str = "x";
pub const RESPONSE: &str = "y";
pub const GROUP: &str = "group";

/// One generating tree: values below `cutpoint` fall in region 0.
#[derive(Clone, Debug, PartialEq)]
pub struct TruthTree {
    pub cutpoint: f64,
    pub region_mus: [f64; 2],
    /// `group_effects[region][group]`, groups in label order.
    pub group_effects: [Vec<f64>; 2],
}

/// Every generating value of a simulated dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct Truth {
    pub tau: f64,
    pub k1: f64,
    pub k2: f64,
    pub group_labels: Vec<String>,
    pub trees: Vec<TruthTree>,
}

impl Truth {
    /// `sqrt(k1 / tau)`: the spread of group effects around a region mean,
    /// summed over trees.
    pub fn intra_group_sd(&self) -> f64 {
        (self.k1 / self.tau).sqrt()
    }

    /// Noise-free mean for a covariate value and group index.
    pub fn mean(&self, x: f64, group: usize) -> f64 {
        self.trees
            .iter()
            .map(|t| t.group_effects[usize::from(x >= t.cutpoint)][group])
            .sum()
    }

    /// Plain `key=value` lines, one value per line.
    pub fn to_sidecar(&self) -> String {
        let mut s = String::new();
        writeln!(s, "tau={}", self.tau).unwrap();
        writeln!(s, "k1={}", self.k1).unwrap();
        writeln!(s, "k2={}", self.k2).unwrap();
        writeln!(s, "num_trees={}", self.trees.len()).unwrap();
        writeln!(s, "groups={}", self.group_labels.join(",")).unwrap();
        for (p, t) in self.trees.iter().enumerate() {
            writeln!(s, "tree.{p}.cutpoint={}", t.cutpoint).unwrap();
            for r in 0..2 {
                writeln!(s, "tree.{p}.region.{r}.mu={}", t.region_mus[r]).unwrap();
                let effects: Vec<String> = t.group_effects[r].iter().map(|v| v.to_string()).collect();
                writeln!(s, "tree.{p}.region.{r}.group_effects={}", effects.join(",")).unwrap();
            }
        }
        s
    }

    pub fn from_sidecar(text: &str) -> Result<Self> {
        let mut map = std::collections::HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("truth line {}: expected key=value", i + 1)))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| {
            map.get(k)
                .ok_or_else(|| Error::Config(format!("truth file lacks `{k}`")))
        };
        let num = |k: &str| -> Result<f64> {
            get(k)?
                .parse()
                .map_err(|_| Error::Config(format!("truth `{k}` is not a number")))
        };
        let nums = |k: &str| -> Result<Vec<f64>> {
            get(k)?
                .split(',')
                .map(|v| v.parse().map_err(|_| Error::Config(format!("truth `{k}` is not a list of numbers"))))
                .collect()
        };
        let num_trees = num("num_trees")? as usize;
        let group_labels: Vec<String> = get("groups")?.split(',').map(str::to_string).collect();
        let trees = (0..num_trees)
            .map(|p| {
                Ok(TruthTree {
                    cutpoint: num(&format!("tree.{p}.cutpoint"))?,
                    region_mus: [
                        num(&format!("tree.{p}.region.0.mu"))?,
                        num(&format!("tree.{p}.region.1.mu"))?,
                    ],
                    group_effects: [
                        nums(&format!("tree.{p}.region.0.group_effects"))?,
                        nums(&format!("tree.{p}.region.1.group_effects"))?,
                    ],
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            tau: num("tau")?,
            k1: num("k1")?,
            k2: num("k2")?,
            group_labels,
            trees,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_sidecar()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_sidecar(&text)
    }
}

/// Labels `g1..gJ`, zero-padded so they sort in index order.
pub fn group_labels(j: usize) -> Vec<String> {
    let width = j.to_string().len();
    (1..=j).map(|g| format!("g{g:0width$}")).collect()
}

/// Simulate `n` rows in `j` equiprobable groups from `num_trees` single-split
/// trees. `tau` is drawn from `Gamma(tau_prior.0, tau_prior.1)` (shape, rate).
pub fn simulate_eq8(
    n: usize,
    j: usize,
    num_trees: usize,
    k1: f64,
    k2: f64,
    tau_prior: (f64, f64),
    rng: &mut RngStream,
) -> Result<(Dataset, Truth)> {
    if j == 0 || n < j || num_trees == 0 {
        return Err(Error::InvalidParameter(format!(
            "simulation needs n >= J >= 1 and at least one tree, got n={n}, J={j}, P={num_trees}"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidParameter("simulation needs at least two rows".into()));
    }
    require_positive("k1", k1)?;
    require_positive("k2", k2)?;
    let tau = sample_gamma(tau_prior.0, tau_prior.1, rng)?;
    let p = num_trees as f64;

    let x: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    let group: Vec<usize> = (0..n).map(|_| uniform_index(j, rng)).collect();
    let mut sorted = x.clone();
    sorted.sort_by(f64::total_cmp);

    let mut trees = Vec::with_capacity(num_trees);
    for _ in 0..num_trees {
        // any observed value but the minimum leaves both regions non-empty
        let cutpoint = sorted[1 + uniform_index(n - 1, rng)];
        let mut region_mus = [0.0; 2];
        let mut group_effects = [Vec::new(), Vec::new()];
        for r in 0..2 {
            region_mus[r] = sample_normal(0.0, p * tau / k2, rng)?;
            group_effects[r] = (0..j)
                .map(|_| sample_normal(region_mus[r], p * tau / k1, rng))
                .collect::<Result<_>>()?;
        }
        trees.push(TruthTree {
            cutpoint,
            region_mus,
            group_effects,
        });
    }
    let truth = Truth {
        tau,
        k1,
        k2,
        group_labels: group_labels(j),
        trees,
    };
    let y = x
        .iter()
        .zip(&group)
        .map(|(&xi, &g)| Ok(truth.mean(xi, g) + sample_normal(0.0, tau, rng)?))
        .collect::<Result<Vec<f64>>>()?;
    let labels: Vec<&str> = group.iter().map(|&g| truth.group_labels[g].as_str()).collect();
    let dataset = Dataset::from_raw(vec![COVARIATE.to_string()], vec![x], RESPONSE, &y, &labels)?;
    Ok((dataset, truth))
}
