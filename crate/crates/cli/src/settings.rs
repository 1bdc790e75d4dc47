//! Configuration resolution: command-line flag, then config file, then
//! built-in default.

use std::path::Path;

use hebart_core::{Hyperparams, Mode};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Everything a run needs besides its data. This is also the schema of
/// `config.resolved.json` and of files passed with `--config`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub hyperparams: Hyperparams,
}

/// Values given on the command line; `None` leaves the lower layers alone.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub seed: Option<u64>,
    pub num_trees: Option<usize>,
    pub iterations: Option<usize>,
    pub burn_in: Option<usize>,
    pub thin: Option<usize>,
    pub k2: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        serde_json::from_str(&text).map_err(|source| CliError::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(self).expect("config serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(CliError::io(path))
    }

    pub fn resolve(file: Option<&Path>, overrides: &Overrides) -> CliResult<Self> {
        let mut cfg = match file {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        let hp = &mut cfg.hyperparams;
        if let Some(m) = overrides.mode {
            cfg.mode = m;
        }
        if let Some(v) = overrides.seed {
            hp.rng_seed = v;
        }
        if let Some(v) = overrides.num_trees {
            hp.num_trees = v;
        }
        if let Some(v) = overrides.iterations {
            hp.iterations = v;
        }
        if let Some(v) = overrides.burn_in {
            hp.burn_in = v;
        }
        if let Some(v) = overrides.thin {
            hp.thin = v;
        }
        if let Some(v) = overrides.k2 {
            hp.k2 = v;
        }
        cfg.hyperparams.validate()?;
        Ok(cfg)
    }
}
