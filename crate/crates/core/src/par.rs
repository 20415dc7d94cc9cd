//! Execution-mode switch between rayon and plain iterators.
//!
//! With the `parallel` feature disabled every entry point here runs
//! sequentially, and `Exec::Parallel` silently degrades to `Exec::Sequential`.

/// How a data-parallel loop should run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    /// Single-threaded, bit-reproducible.
    #[default]
    Sequential,
    /// Use the rayon global pool when compiled with `parallel`.
    Parallel,
}

impl Exec {
    /// Whether parallel execution is actually available for this mode.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// Number of workers a parallel loop would use.
    pub fn workers(self) -> usize {
        if !self.is_parallel() {
            return 1;
        }
        #[cfg(feature = "parallel")]
        {
            rayon::current_num_threads().max(1)
        }
        #[cfg(not(feature = "parallel"))]
        {
            1
        }
    }

    /// Order-preserving map over `0..n`.
    pub fn map_range<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Order-preserving map over a slice.
    pub fn map_slice<S, T, F>(self, items: &[S], f: F) -> Vec<T>
    where
        S: Sync,
        T: Send,
        F: Fn(&S) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Order-preserving map over fixed-size chunks of a slice. Chunk
    /// boundaries do not depend on the thread count.
    pub fn map_chunks<S, T, F>(self, items: &[S], chunk: usize, f: F) -> Vec<T>
    where
        S: Sync,
        T: Send,
        F: Fn(&[S]) -> T + Sync + Send,
    {
        let chunk = chunk.max(1);
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return items.par_chunks(chunk).map(f).collect();
        }
        items.chunks(chunk).map(f).collect()
    }
}
