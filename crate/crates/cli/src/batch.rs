//! Deterministic parallel batch queries.
//!
//! Queries split into contiguous chunks, one scoped thread per chunk, and
//! results reassemble in input order. Each query's result is independent of
//! the partitioning, so any worker count produces byte-identical output.

use crossview_core::gallery::{Gallery, QueryResult};
use crossview_core::Result;

pub fn top_k_batch(
    gallery: &Gallery,
    queries: &[Vec<f32>],
    k: usize,
    workers: usize,
) -> Result<Vec<QueryResult>> {
    let workers = workers.max(1).min(queries.len().max(1));
    if workers == 1 {
        return gallery.top_k_many(queries, k);
    }
    let chunk_size = queries.len().div_ceil(workers);
    let chunks: Vec<&[Vec<f32>]> = queries.chunks(chunk_size).collect();

    let outcomes: Vec<Result<Vec<QueryResult>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = chunks
            .iter()
            .map(|chunk| scope.spawn(move || gallery.top_k_many(chunk, k)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("query worker panicked"))
            .collect()
    });

    let mut results = Vec::with_capacity(queries.len());
    for outcome in outcomes {
        results.extend(outcome?);
    }
    Ok(results)
}
