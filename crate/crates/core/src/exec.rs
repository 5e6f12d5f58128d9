//! Sequential / data-parallel execution of independent work items.
//!
//! With the `parallel` feature (default) [`Execution::Parallel`] fans work
//! out over rayon; without it every request runs sequentially. Results are
//! always returned in index order, so callers see identical output either way.

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// `f(0), ..., f(len - 1)` in index order.
    pub fn map_indexed<T, F>(self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..len).into_par_iter().map(f).collect()
            }
            _ => (0..len).map(f).collect(),
        }
    }

    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Run `f` with at most `threads` worker threads (all cores when `None`).
pub fn with_threads<R, F>(threads: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    {
        if let Some(t) = threads {
            if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build() {
                return pool.install(f);
            }
        }
        f()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let seq = Execution::Sequential.map_indexed(100, |i| i * i);
        let par = Execution::Parallel.map_indexed(100, |i| i * i);
        assert_eq!(seq, par);
        let pooled = with_threads(Some(3), || Execution::Parallel.map_indexed(10, |i| i + 1));
        assert_eq!(pooled, (1..=10).collect::<Vec<_>>());
    }
}
