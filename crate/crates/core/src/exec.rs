//! Work dispatch for the data-parallel loops.
//!
//! Every parallel map here collects into a `Vec` in input order, so results
//! never depend on the worker count. Without the `parallel` feature all
//! strategies run sequentially.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exec {
    Sequential,
    /// `None` uses the global pool.
    Parallel {
        workers: Option<usize>,
    },
}

impl Default for Exec {
    fn default() -> Self {
        Exec::Parallel { workers: None }
    }
}

impl Exec {
    /// `Sequential` for one worker, a dedicated pool otherwise.
    pub fn with_workers(workers: usize) -> Self {
        match workers {
            0 => Exec::default(),
            1 => Exec::Sequential,
            n => Exec::Parallel { workers: Some(n) },
        }
    }

    pub fn map_range<T, F>(&self, range: RangeInclusive<u64>, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        match self {
            Exec::Sequential => range.map(f).collect(),
            Exec::Parallel { workers } => par::map_range(*workers, range, f),
        }
    }

    pub fn map_slice<I, T, F>(&self, items: &[I], f: F) -> Vec<T>
    where
        I: Sync,
        T: Send,
        F: Fn(&I) -> T + Sync + Send,
    {
        match self {
            Exec::Sequential => items.iter().map(f).collect(),
            Exec::Parallel { workers } => par::map_slice(*workers, items, f),
        }
    }
}

#[cfg(feature = "parallel")]
mod par {
    use std::ops::RangeInclusive;

    use rayon::prelude::*;

    fn install<R: Send>(workers: Option<usize>, job: impl FnOnce() -> R + Send) -> R {
        match workers {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .expect("failed to build worker pool")
                .install(job),
            None => job(),
        }
    }

    pub(super) fn map_range<T, F>(
        workers: Option<usize>,
        range: RangeInclusive<u64>,
        f: F,
    ) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        install(workers, || range.into_par_iter().map(f).collect())
    }

    pub(super) fn map_slice<I, T, F>(workers: Option<usize>, items: &[I], f: F) -> Vec<T>
    where
        I: Sync,
        T: Send,
        F: Fn(&I) -> T + Sync + Send,
    {
        install(workers, || items.par_iter().map(f).collect())
    }
}

#[cfg(not(feature = "parallel"))]
mod par {
    use std::ops::RangeInclusive;

    pub(super) fn map_range<T, F>(
        _workers: Option<usize>,
        range: RangeInclusive<u64>,
        f: F,
    ) -> Vec<T>
    where
        F: Fn(u64) -> T,
    {
        range.map(f).collect()
    }

    pub(super) fn map_slice<I, T, F>(_workers: Option<usize>, items: &[I], f: F) -> Vec<T>
    where
        F: Fn(&I) -> T,
    {
        items.iter().map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let seq = Exec::Sequential.map_range(1..=1000, |t| t * t);
        for exec in [
            Exec::with_workers(2),
            Exec::with_workers(3),
            Exec::default(),
        ] {
            assert_eq!(exec.map_range(1..=1000, |t| t * t), seq);
        }
        let items: Vec<u64> = (0..100).collect();
        assert_eq!(
            Exec::with_workers(4).map_slice(&items, |x| x + 1),
            (1..=100).collect::<Vec<_>>()
        );
    }

    #[test]
    fn empty_range() {
        #[allow(clippy::reversed_empty_ranges)]
        let out: Vec<u64> = Exec::default().map_range(1..=0, |t| t);
        assert!(out.is_empty());
    }
}
