//! Execution policy for the data-parallel loops (verification over occupied
//! sets, prover subtrees, oracle batteries).
//!
//! With the `parallel` feature the loops run on a rayon pool; without it, or
//! with one job, they run sequentially. Every combinator here returns the
//! same value in both modes.

#[cfg(feature = "parallel")]
use std::sync::Arc;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Default)]
pub struct Exec {
    #[cfg(feature = "parallel")]
    pool: Option<Arc<rayon::ThreadPool>>,
}

impl std::fmt::Debug for Exec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Exec(jobs={})", self.jobs())
    }
}

impl Exec {
    pub fn sequential() -> Exec {
        Exec::default()
    }

    /// `jobs = None` uses every core. Falls back to sequential when the
    /// `parallel` feature is off or `jobs == Some(1)`.
    pub fn parallel(jobs: Option<usize>) -> Exec {
        #[cfg(feature = "parallel")]
        {
            if jobs == Some(1) {
                return Exec::sequential();
            }
            let mut builder = rayon::ThreadPoolBuilder::new();
            if let Some(j) = jobs {
                builder = builder.num_threads(j);
            }
            match builder.build() {
                Ok(pool) => Exec {
                    pool: Some(Arc::new(pool)),
                },
                Err(_) => Exec::sequential(),
            }
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = jobs;
            Exec::sequential()
        }
    }

    pub fn jobs(&self) -> usize {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            return pool.current_num_threads();
        }
        1
    }

    pub fn is_parallel(&self) -> bool {
        self.jobs() > 1
    }

    /// `f` applied to the lowest index in `range` for which it is `Some`.
    pub fn find_map_first<T, F>(&self, range: std::ops::Range<u64>, f: F) -> Option<T>
    where
        T: Send,
        F: Fn(u64) -> Option<T> + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            return pool.install(|| range.into_par_iter().find_map_first(&f));
        }
        range.into_iter().find_map(f)
    }

    /// Order-preserving map.
    pub fn map<I, T, F>(&self, items: &[I], f: F) -> Vec<T>
    where
        I: Sync,
        T: Send,
        F: Fn(&I) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            return pool.install(|| items.par_iter().map(&f).collect());
        }
        items.iter().map(f).collect()
    }

    /// True iff `pred` holds for every index in `range`.
    pub fn all<F>(&self, range: std::ops::Range<u64>, pred: F) -> bool
    where
        F: Fn(u64) -> bool + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            return pool.install(|| range.into_par_iter().all(&pred));
        }
        range.into_iter().all(pred)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let seq = Exec::sequential();
        let par = Exec::parallel(Some(4));
        let f = |i: u64| (i % 97 == 13 && i > 500).then_some(i * 2);
        assert_eq!(
            seq.find_map_first(0..10_000, f),
            par.find_map_first(0..10_000, f)
        );
        assert_eq!(seq.find_map_first(0..10_000, f), Some(1190));
        let items: Vec<u32> = (0..1000).collect();
        assert_eq!(seq.map(&items, |x| x * x), par.map(&items, |x| x * x));
        assert!(par.all(0..1000, |i| i < 1000));
        assert_eq!(Exec::parallel(Some(1)).jobs(), 1);
    }
}
