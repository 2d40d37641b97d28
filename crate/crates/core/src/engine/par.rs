use super::Parallelism;

/// Apply `f` to every item, returning results in input order.
pub(crate) fn map_indexed<T, R, F>(par: Parallelism, items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(usize, T) -> R + Sync + Send,
{
    match par {
        Parallelism::Sequential => items.into_iter().enumerate().map(|(i, t)| f(i, t)).collect(),
        #[cfg(feature = "parallel")]
        Parallelism::Rayon => {
            use rayon::prelude::*;
            items.into_par_iter().enumerate().map(|(i, t)| f(i, t)).collect()
        }
    }
}
