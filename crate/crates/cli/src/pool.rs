//! A fixed-size rayon pool behind the core's `ReplicaMap`.

use bbmlab_core::rng::ReplicaMap;
use rayon::prelude::*;

use crate::{CliError, CliResult};

pub struct Pool {
    pool: rayon::ThreadPool,
    workers: usize,
}

impl Pool {
    pub fn new(workers: usize) -> CliResult<Self> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| CliError::Runtime(e.to_string()))?;
        Ok(Self { pool, workers })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }
}

impl ReplicaMap for Pool {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        // indexed collect keeps replica order whatever the scheduling
        self.pool.install(|| (0..n).into_par_iter().map(f).collect())
    }
}
