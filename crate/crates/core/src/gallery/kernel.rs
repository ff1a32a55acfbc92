//! Dot-product kernels for gallery scans.
//!
//! Similarities accumulate in f64 with a fixed 8-lane structure and a fixed
//! combine order, so every path (portable scalar, AVX2) produces bit-identical
//! scores. Fused multiply-adds are correctly rounded in all backends.

use crate::math;

pub(crate) const LANES: usize = 8;

/// Portable lane-structured dot product of two equal-length f64 slices.
pub(crate) fn dot_f64(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; LANES];
    let ca = a.chunks_exact(LANES);
    let cb = b.chunks_exact(LANES);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for j in 0..LANES {
            acc[j] = math::fma(x[j], y[j], acc[j]);
        }
    }
    for (j, (x, y)) in ra.iter().zip(rb).enumerate() {
        acc[j] = math::fma(*x, *y, acc[j]);
    }
    combine(&acc)
}

#[inline(always)]
fn combine(acc: &[f64; LANES]) -> f64 {
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]))
}

/// Widens an f32 row into the caller's scratch buffer (exact conversion).
pub(crate) fn widen(row: &[f32], out: &mut [f64]) {
    for (dst, &src) in out.iter_mut().zip(row) {
        *dst = src as f64;
    }
}

/// Scores one gallery row against a block of pre-widened queries.
///
/// `q64` holds `nq` queries of length `d` back to back; `row64` is scratch of
/// length `d`; `out[..nq]` receives the raw dot products.
pub(crate) fn row_scores(q64: &[f64], nq: usize, d: usize, row: &[f32], row64: &mut [f64], out: &mut [f64]) {
    debug_assert_eq!(q64.len(), nq * d);
    debug_assert_eq!(row.len(), d);
    debug_assert!(out.len() >= nq);

    #[cfg(all(feature = "std", target_arch = "x86_64"))]
    if avx2_available() {
        let tiled = nq - nq % 4;
        let mut qi = 0;
        while qi < tiled {
            // SAFETY: avx2+fma presence checked at runtime; slice bounds
            // guaranteed by the debug-asserted layout above.
            unsafe {
                scan4_avx2(&q64[qi * d..(qi + 4) * d], d, row, &mut out[qi..qi + 4]);
            }
            qi += 4;
        }
        if qi < nq {
            widen(row, row64);
            for q in qi..nq {
                out[q] = dot_f64(&q64[q * d..(q + 1) * d], row64);
            }
        }
        return;
    }

    widen(row, row64);
    for q in 0..nq {
        out[q] = dot_f64(&q64[q * d..(q + 1) * d], row64);
    }
}

/// Portable-only variant, kept callable so tests can assert bitwise parity
/// with whatever path [`row_scores`] selects.
#[cfg(test)]
pub(crate) fn row_scores_portable(
    q64: &[f64],
    nq: usize,
    d: usize,
    row: &[f32],
    row64: &mut [f64],
    out: &mut [f64],
) {
    widen(row, row64);
    for q in 0..nq {
        out[q] = dot_f64(&q64[q * d..(q + 1) * d], row64);
    }
}

#[cfg(all(feature = "std", target_arch = "x86_64"))]
fn avx2_available() -> bool {
    use std::sync::OnceLock;
    static AVAILABLE: OnceLock<bool> = OnceLock::new();
    *AVAILABLE.get_or_init(|| {
        std::is_x86_feature_detected!("avx2") && std::is_x86_feature_detected!("fma")
    })
}

/// Four queries against one row, with the row widened in-register.
///
/// Lane assignment and combine order match [`dot_f64`] exactly, so the result
/// is bit-identical to four portable dot products.
#[cfg(all(feature = "std", target_arch = "x86_64"))]
#[target_feature(enable = "avx2,fma")]
unsafe fn scan4_avx2(q64: &[f64], d: usize, row: &[f32], out: &mut [f64]) {
    use core::arch::x86_64::*;
    debug_assert_eq!(q64.len(), 4 * d);
    debug_assert_eq!(out.len(), 4);
    let n8 = d - d % LANES;
    let pr = row.as_ptr();
    let q = q64.as_ptr();
    unsafe {
        let (q0, q1, q2, q3) = (q, q.add(d), q.add(2 * d), q.add(3 * d));
        let mut a00 = _mm256_setzero_pd();
        let mut a01 = _mm256_setzero_pd();
        let mut a10 = _mm256_setzero_pd();
        let mut a11 = _mm256_setzero_pd();
        let mut a20 = _mm256_setzero_pd();
        let mut a21 = _mm256_setzero_pd();
        let mut a30 = _mm256_setzero_pd();
        let mut a31 = _mm256_setzero_pd();
        // wrapping pointer bumps keep the hot loop free of the checked
        // arithmetic debug builds insert around `ptr::add`
        let (mut rp, mut p0, mut p1, mut p2, mut p3) = (pr, q0, q1, q2, q3);
        for _ in 0..n8 / LANES {
            let r0 = _mm256_cvtps_pd(_mm_loadu_ps(rp));
            let r1 = _mm256_cvtps_pd(_mm_loadu_ps(rp.wrapping_add(4)));
            a00 = _mm256_fmadd_pd(_mm256_loadu_pd(p0), r0, a00);
            a01 = _mm256_fmadd_pd(_mm256_loadu_pd(p0.wrapping_add(4)), r1, a01);
            a10 = _mm256_fmadd_pd(_mm256_loadu_pd(p1), r0, a10);
            a11 = _mm256_fmadd_pd(_mm256_loadu_pd(p1.wrapping_add(4)), r1, a11);
            a20 = _mm256_fmadd_pd(_mm256_loadu_pd(p2), r0, a20);
            a21 = _mm256_fmadd_pd(_mm256_loadu_pd(p2.wrapping_add(4)), r1, a21);
            a30 = _mm256_fmadd_pd(_mm256_loadu_pd(p3), r0, a30);
            a31 = _mm256_fmadd_pd(_mm256_loadu_pd(p3.wrapping_add(4)), r1, a31);
            rp = rp.wrapping_add(LANES);
            p0 = p0.wrapping_add(LANES);
            p1 = p1.wrapping_add(LANES);
            p2 = p2.wrapping_add(LANES);
            p3 = p3.wrapping_add(LANES);
        }
        for (slot, (lo, hi, qp)) in [
            (a00, a01, q0),
            (a10, a11, q1),
            (a20, a21, q2),
            (a30, a31, q3),
        ]
        .into_iter()
        .enumerate()
        {
            let (lo, hi, qp) = (lo, hi, qp);
            let mut acc = [0.0f64; LANES];
            _mm256_storeu_pd(acc.as_mut_ptr(), lo);
            _mm256_storeu_pd(acc.as_mut_ptr().add(4), hi);
            for (j, k) in (n8..d).enumerate() {
                acc[j] = math::fma(*qp.add(k), *pr.add(k) as f64, acc[j]);
            }
            out[slot] = combine(&acc);
        }
    }
}
