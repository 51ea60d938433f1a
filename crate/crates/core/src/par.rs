//! Order-preserving map used by the enumeration and experiment drivers.
//!
//! With the `parallel` feature the work is spread over the rayon pool;
//! without it, or when [`Mode::Sequential`] is requested, items are processed
//! in order on the calling thread. Results are identical in both modes.

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    #[default]
    Parallel,
    Sequential,
}

pub fn map_ordered<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    map_ordered_with(Mode::Parallel, items, f)
}

pub fn map_ordered_with<T, R, F>(mode: Mode, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match mode {
        #[cfg(feature = "parallel")]
        Mode::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}
