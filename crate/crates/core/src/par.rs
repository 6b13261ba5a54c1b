use rayon::prelude::*;

/// Below this many entries the per-entry work is not worth a fork.
const PAR_THRESHOLD: usize = 256;

/// `out[i] = f(i)`, in parallel for long outputs. Each entry is produced by
/// one sequential call, so results do not depend on the thread count.
pub(crate) fn fill(out: &mut [f64], f: impl Fn(usize) -> f64 + Sync + Send) {
    if out.len() >= PAR_THRESHOLD {
        out.par_iter_mut().enumerate().for_each(|(i, o)| *o = f(i));
    } else {
        out.iter_mut().enumerate().for_each(|(i, o)| *o = f(i));
    }
}

/// Chunked variant of [`fill`] for vector-valued entries of width `dim`.
pub(crate) fn fill_chunks(out: &mut [f64], dim: usize, f: impl Fn(usize, &mut [f64]) + Sync + Send) {
    if out.len() / dim >= PAR_THRESHOLD {
        out.par_chunks_mut(dim).enumerate().for_each(|(i, o)| f(i, o));
    } else {
        out.chunks_mut(dim).enumerate().for_each(|(i, o)| f(i, o));
    }
}
