//! The experiment suites. Each runs at the configured κ, writes its
//! artifacts through an [`Output`] and returns its check items.

mod disk;
mod malthus;
mod martingale;
mod measure;
mod relations;
mod stable;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, Suite};
use crate::manifest::CheckItem;

pub use measure::MeasureSummary;

/// Artifact writer that remembers what it wrote.
#[derive(Debug)]
pub struct Output {
    dir: PathBuf,
    files: Vec<String>,
}

impl Output {
    pub fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Relative names of the files written so far.
    pub fn files(&self) -> &[String] {
        &self.files
    }

    fn claim(&mut self, name: &str) -> PathBuf {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        self.dir.join(name)
    }

    pub fn csv<T: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = T>) -> anyhow::Result<()> {
        let path = self.claim(name);
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        let path = self.claim(name);
        let text = serde_json::to_string_pretty(value)?;
        fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    /// Deletes every file written so far.
    pub fn remove_all(&mut self) {
        for f in self.files.drain(..) {
            let _ = fs::remove_file(self.dir.join(f));
        }
    }
}

/// Maps replicate indices `0..n` in parallel, keeping index order.
pub(crate) fn par_map<T, F>(n: u64, f: F) -> anyhow::Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> frag_core::Result<T> + Sync + Send,
{
    Ok((0..n).into_par_iter().map(f).collect::<frag_core::Result<Vec<T>>>()?)
}

/// Folds `0..n` in parallel chunks. Chunk results are combined in index
/// order, so the outcome does not depend on the thread count.
pub(crate) fn par_fold<T, A, F, G>(n: u64, chunk: u64, f: F, mut acc: A, mut merge: G) -> anyhow::Result<A>
where
    T: Send,
    F: Fn(u64) -> frag_core::Result<T> + Sync + Send,
    G: FnMut(&mut A, T),
{
    let mut start = 0;
    while start < n {
        let end = (start + chunk).min(n);
        let part = (start..end).into_par_iter().map(&f).collect::<frag_core::Result<Vec<T>>>()?;
        for t in part {
            merge(&mut acc, t);
        }
        start = end;
    }
    Ok(acc)
}

pub fn run_suite(cfg: &ExperimentConfig, out: &mut Output) -> anyhow::Result<Vec<CheckItem>> {
    match cfg.suite {
        Suite::RelationsSweep => relations::run(cfg, out),
        Suite::StableChecks => stable::run(cfg, out),
        Suite::DiskChecks => disk::run(cfg, out),
        Suite::TreeMartingales => martingale::run(cfg, out),
        Suite::Malthus => malthus::run(cfg, out),
        Suite::Measure => measure::run(cfg, out),
    }
}
