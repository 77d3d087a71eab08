//! Monte Carlo replicate driver with scheduling-independent seed streams.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::numeric::mean_stderr;

/// Generator for replicate `r` of a campaign with master seed `master`.
/// Stream 0 coincides with the generator used by a direct single run.
pub fn replicate_rng(master: u64, r: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(r);
    rng
}

/// Runs `f` for replicates `0..replicates` on `threads` workers (0 means the
/// rayon default) and returns the outcomes in replicate order.
pub fn run_replicates<T, F>(replicates: usize, master: u64, threads: usize, f: F) -> Vec<Result<T>>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> Result<T> + Sync,
{
    let work = || {
        (0..replicates)
            .into_par_iter()
            .map(|r| {
                let mut rng = replicate_rng(master, r as u64);
                f(r, &mut rng)
            })
            .collect::<Vec<_>>()
    };
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(work),
        Err(_) => work(),
    }
}

/// Point estimate with its standard error and campaign bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub estimate: f64,
    pub stderr: f64,
    pub replicates: usize,
    /// Replicates whose computation returned an error.
    pub failures: usize,
    pub seed: u64,
    /// Named auxiliary quantities (bounds, rates, counts).
    pub aux: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl McResult {
    /// Mean and standard error of `values`; `failures` counts dropped replicates.
    pub fn from_values(values: &[f64], seed: u64, failures: usize) -> Self {
        let (estimate, stderr) = mean_stderr(values);
        Self {
            estimate,
            stderr,
            replicates: values.len() + failures,
            failures,
            seed,
            aux: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.aux.insert(key.to_string(), value);
        self
    }

    /// Stable JSON rendering used for summaries.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// Splits replicate outcomes into successes and a failure count.
pub fn partition<T>(outcomes: Vec<Result<T>>) -> (Vec<T>, usize) {
    let mut ok = Vec::with_capacity(outcomes.len());
    let mut failed = 0;
    for o in outcomes {
        match o {
            Ok(v) => ok.push(v),
            Err(_) => failed += 1,
        }
    }
    (ok, failed)
}
