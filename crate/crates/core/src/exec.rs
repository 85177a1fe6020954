//! Data-parallel execution with a runtime switch to a sequential path.
//!
//! With the `parallel` feature (default) chunked maps run on the rayon pool
//! unless the calling thread is inside [`sequential`]. Without the feature
//! everything runs on the calling thread.

use std::cell::Cell;

thread_local! {
    static FORCE_SEQUENTIAL: Cell<bool> = const { Cell::new(false) };
}

/// Runs `f` with every chunked map issued from this thread executed serially.
pub fn sequential<R>(f: impl FnOnce() -> R) -> R {
    let prev = FORCE_SEQUENTIAL.with(|c| c.replace(true));
    let out = f();
    FORCE_SEQUENTIAL.with(|c| c.set(prev));
    out
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && !FORCE_SEQUENTIAL.with(|c| c.get())
}

/// Caps the global worker pool. Only the first call has an effect.
pub fn init_threads(n: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
        false
    }
}

/// Calls `f(chunk_index, chunk)` for consecutive chunks of `data`.
pub fn for_each_chunk<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        data.par_chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
        return;
    }
    data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}

/// Fallible variant of [`for_each_chunk`]; returns the error of the lowest
/// failing chunk.
pub fn try_for_each_chunk<T, E, F>(data: &mut [T], chunk: usize, f: F) -> Result<(), E>
where
    T: Send,
    E: Send,
    F: Fn(usize, &mut [T]) -> Result<(), E> + Sync + Send,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        let errs: Vec<(usize, E)> = data
            .par_chunks_mut(chunk)
            .enumerate()
            .filter_map(|(i, c)| f(i, c).err().map(|e| (i, e)))
            .collect();
        return match errs.into_iter().min_by_key(|(i, _)| *i) {
            Some((_, e)) => Err(e),
            None => Ok(()),
        };
    }
    for (i, c) in data.chunks_mut(chunk).enumerate() {
        f(i, c)?;
    }
    Ok(())
}

/// Maps `0..n` to a vector, in parallel when enabled.
pub fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_scope_restores_flag() {
        let before = is_parallel();
        sequential(|| assert!(!is_parallel()));
        assert_eq!(is_parallel(), before);
    }

    #[test]
    fn chunked_map_matches_serial() {
        let mut a = vec![0usize; 1000];
        for_each_chunk(&mut a, 64, |ci, c| {
            for (j, x) in c.iter_mut().enumerate() {
                *x = ci * 64 + j;
            }
        });
        assert!(a.iter().enumerate().all(|(i, &x)| i == x));
    }

    #[test]
    fn first_error_is_reported() {
        let mut a = vec![0u8; 100];
        let r = try_for_each_chunk(&mut a, 10, |ci, _| if ci >= 3 { Err(ci) } else { Ok(()) });
        assert_eq!(r, Err(3));
    }
}
