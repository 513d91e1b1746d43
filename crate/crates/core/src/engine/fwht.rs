//! Normalized fast Walsh–Hadamard transform on complex amplitudes.
//!
//! With the `2^{-N/2}` normalization the transform is its own inverse and maps
//! z-basis amplitudes to x-basis amplitudes (bit 0 ↔ `s = +1`).

use num_complex::Complex64;
use rayon::prelude::*;

/// Arrays at least this long use the data-parallel butterflies.
const PARALLEL_LEN: usize = 1 << 14;
/// Butterfly groups are processed in contiguous blocks of this many amplitudes.
const BLOCK: usize = 1 << 12;

#[inline(always)]
fn butterfly(lo: &mut [Complex64], hi: &mut [Complex64]) {
    for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = x + y;
        *b = x - y;
    }
}

/// Unnormalized in-place transform of a block whose length is a power of two,
/// for butterfly half-widths `1, 2, …, len/2`.
fn transform_block(data: &mut [Complex64]) {
    let len = data.len();
    let mut half = 1;
    while half < len {
        for chunk in data.chunks_exact_mut(2 * half) {
            let (lo, hi) = chunk.split_at_mut(half);
            butterfly(lo, hi);
        }
        half <<= 1;
    }
}

/// In-place normalized FWHT. `data.len()` must be a power of two.
pub fn fwht_in_place(data: &mut [Complex64]) {
    let len = data.len();
    assert!(len.is_power_of_two(), "FWHT length {len} is not a power of two");
    if len < PARALLEL_LEN {
        transform_block(data);
    } else {
        // Low stages stay inside cache-sized blocks.
        data.par_chunks_mut(BLOCK).for_each(transform_block);
        let mut half = BLOCK;
        while half < len {
            data.par_chunks_mut(2 * half).for_each(|chunk| {
                let (lo, hi) = chunk.split_at_mut(half);
                lo.par_chunks_mut(BLOCK)
                    .zip(hi.par_chunks_mut(BLOCK))
                    .for_each(|(l, h)| butterfly(l, h));
            });
            half <<= 1;
        }
    }
    let scale = 1.0 / (len as f64).sqrt();
    if len < PARALLEL_LEN {
        data.iter_mut().for_each(|v| *v *= scale);
    } else {
        data.par_iter_mut().for_each(|v| *v *= scale);
    }
}
