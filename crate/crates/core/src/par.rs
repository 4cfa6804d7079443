//! Data-parallel helpers.
//!
//! With the `parallel` feature (default) batch work is spread over the rayon
//! thread pool; without it every helper degrades to a plain sequential loop.
//! Results are always returned in input order, so callers observe identical
//! output under either mode.

/// How to evaluate an independent batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// `Parallel` when the crate was built with rayon, `Sequential` otherwise.
    pub fn available() -> Exec {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

/// Map `f` over `items`, preserving order.
pub fn map<T, R, F>(exec: Exec, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        Exec::Sequential => items.iter().map(f).collect(),
        Exec::Parallel => par_map(items, f),
    }
}

/// Index of the first item (in input order) for which `f` returns `Some`,
/// together with the value. Parallel evaluation may run every item but the
/// winner is always the lowest index.
pub fn find_first<T, R, F>(exec: Exec, items: &[T], f: F) -> Option<(usize, R)>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Option<R> + Sync + Send,
{
    match exec {
        Exec::Sequential => items.iter().enumerate().find_map(|(i, t)| f(t).map(|r| (i, r))),
        Exec::Parallel => par_find_first(items, f),
    }
}

#[cfg(feature = "parallel")]
fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}

#[cfg(feature = "parallel")]
fn par_find_first<T, R, F>(items: &[T], f: F) -> Option<(usize, R)>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Option<R> + Sync + Send,
{
    use rayon::prelude::*;
    // Chunks keep the early exit of the sequential scan while still using
    // every worker; within a chunk the lowest index wins.
    let chunk = 2 * rayon::current_num_threads().max(1);
    for (c, block) in items.chunks(chunk).enumerate() {
        let hit = block
            .par_iter()
            .enumerate()
            .filter_map(|(i, t)| f(t).map(|r| (c * chunk + i, r)))
            .min_by_key(|(i, _)| *i);
        if hit.is_some() {
            return hit;
        }
    }
    None
}

#[cfg(not(feature = "parallel"))]
fn par_find_first<T, R, F>(items: &[T], f: F) -> Option<(usize, R)>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Option<R> + Sync + Send,
{
    items.iter().enumerate().find_map(|(i, t)| f(t).map(|r| (i, r)))
}
