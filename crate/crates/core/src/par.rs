//! Trial-level data parallelism.
//!
//! With the `parallel` feature (default) independent trials are spread over
//! the rayon pool; without it every [`Execution`] runs sequentially. Each trial
//! derives its own RNG stream from its index, so both paths return identical
//! results in identical order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// Evaluates `f(0), ..., f(n - 1)` and collects the results in index order.
pub fn map_trials<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..n as u64).into_par_iter().map(f).collect(),
        _ => (0..n as u64).map(f).collect(),
    }
}

/// Runs two closures, concurrently when the execution mode allows it.
pub fn join<A, B, RA, RB>(exec: Execution, a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => rayon::join(a, b),
        _ => (a(), b()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_and_parallel_agree() {
        let f = |i: u64| (i * 2654435761) % 97;
        assert_eq!(
            map_trials(Execution::Sequential, 1000, f),
            map_trials(Execution::Parallel, 1000, f)
        );
    }
}
