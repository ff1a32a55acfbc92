//! Immutable gallery of L2-normalized embeddings with deterministic exact
//! top-k cosine search.
//!
//! Similarity is the dot product of pre-normalized vectors, accumulated in
//! f64. Ranking is total: descending score, ties broken by ascending id, so
//! results are reproducible across platforms and worker counts.

mod kernel;

use crate::math;
use crate::{Error, Result};
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

/// Queries per gallery pass; bounds scratch memory while amortizing row loads.
const QUERY_BLOCK: usize = 64;

/// One embedding with its string id.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub id: String,
    pub vector: Vec<f32>,
}

impl EmbeddingRecord {
    pub fn new(id: impl Into<String>, vector: Vec<f32>) -> Self {
        Self {
            id: id.into(),
            vector,
        }
    }
}

/// A ranked retrieval hit.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScoredId {
    pub id: String,
    pub score: f64,
}

/// Exact top-k result: scores non-increasing, ties in ascending id order.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QueryResult {
    pub ranked: Vec<ScoredId>,
}

impl QueryResult {
    /// Position of `id` in the ranking, if present (0-based).
    pub fn position_of(&self, id: &str) -> Option<usize> {
        self.ranked.iter().position(|s| s.id == id)
    }
}

/// Scales a vector to unit L2 norm (norm computed in f64).
pub fn l2_normalize(v: &[f32]) -> Result<Vec<f32>> {
    let norm = math::sqrt(v.iter().map(|&x| x as f64 * x as f64).sum());
    if !norm.is_finite() {
        return Err(Error::NonFinite {
            context: "embedding vector",
        });
    }
    if norm <= 1e-12 {
        return Err(Error::DegenerateEmbedding {
            id: "vector".to_string(),
        });
    }
    Ok(v.iter().map(|&x| (x as f64 / norm) as f32).collect())
}

/// Immutable, indexed set of unit vectors sharing one dimension.
#[derive(Debug, Clone)]
pub struct Gallery {
    dim: usize,
    ids: Vec<String>,
    data: Vec<f32>,
    index: BTreeMap<String, u32>,
}

impl Gallery {
    /// Normalizes, validates, and indexes the records. Order is preserved.
    pub fn build(records: Vec<EmbeddingRecord>) -> Result<Self> {
        let first = records.first().ok_or(Error::EmptyGallery)?;
        let dim = first.vector.len();
        if dim == 0 {
            return Err(Error::InvalidParameter("embedding dimension must be >= 1"));
        }
        if records.len() > u32::MAX as usize {
            return Err(Error::InvalidParameter("gallery exceeds u32::MAX records"));
        }
        let mut ids = Vec::with_capacity(records.len());
        let mut data = Vec::with_capacity(records.len() * dim);
        let mut index = BTreeMap::new();
        for (pos, rec) in records.into_iter().enumerate() {
            if rec.vector.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: rec.vector.len(),
                });
            }
            if rec.vector.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite {
                    context: "embedding vector",
                });
            }
            let norm = math::sqrt(rec.vector.iter().map(|&x| x as f64 * x as f64).sum());
            if norm <= 1e-12 {
                return Err(Error::DegenerateEmbedding { id: rec.id });
            }
            if index.insert(rec.id.clone(), pos as u32).is_some() {
                return Err(Error::DuplicateId(rec.id));
            }
            data.extend(rec.vector.iter().map(|&x| (x as f64 / norm) as f32));
            ids.push(rec.id);
        }
        Ok(Self {
            dim,
            ids,
            data,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn id_at(&self, pos: usize) -> &str {
        &self.ids[pos]
    }

    pub fn vector_at(&self, pos: usize) -> &[f32] {
        &self.data[pos * self.dim..(pos + 1) * self.dim]
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).map(|&p| p as usize)
    }

    pub fn vector_by_id(&self, id: &str) -> Option<&[f32]> {
        self.position(id).map(|p| self.vector_at(p))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.ids.iter().map(|s| s.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.ids
            .iter()
            .map(|s| s.as_str())
            .zip(self.data.chunks_exact(self.dim))
    }

    /// Bytes held by the vector storage.
    pub fn vector_bytes(&self) -> usize {
        expected_vector_bytes(self.len(), self.dim)
    }

    /// Exact k best matches by cosine similarity; deterministic tie-break by
    /// ascending id. Scores are clamped to [-1, 1].
    pub fn top_k(&self, query: &[f32], k: usize) -> Result<QueryResult> {
        Ok(self.top_k_many(core::slice::from_ref(&query), k)?.pop().expect("one query in, one result out"))
    }

    /// Serial multi-query search; identical to mapping [`Gallery::top_k`]
    /// over the queries, but amortizes gallery passes across query blocks.
    pub fn top_k_many<Q: AsRef<[f32]>>(&self, queries: &[Q], k: usize) -> Result<Vec<QueryResult>> {
        if k < 1 || k > self.len() {
            return Err(Error::KOutOfRange { k, len: self.len() });
        }
        let mut results = Vec::with_capacity(queries.len());
        let mut row64 = vec![0.0f64; self.dim];
        let mut scores = vec![0.0f64; QUERY_BLOCK];
        for block in queries.chunks(QUERY_BLOCK) {
            let q64 = self.widen_and_normalize(block)?;
            let nq = block.len();
            let mut tops: Vec<Vec<(f64, u32)>> = vec![Vec::with_capacity(k + 1); nq];
            for row in 0..self.len() {
                kernel::row_scores(
                    &q64,
                    nq,
                    self.dim,
                    self.vector_at(row),
                    &mut row64,
                    &mut scores[..nq],
                );
                for (top, &raw) in tops.iter_mut().zip(scores.iter()) {
                    self.push_candidate(top, k, raw.clamp(-1.0, 1.0), row as u32);
                }
            }
            for top in tops {
                results.push(QueryResult {
                    ranked: top
                        .into_iter()
                        .map(|(score, pos)| ScoredId {
                            id: self.ids[pos as usize].clone(),
                            score,
                        })
                        .collect(),
                });
            }
        }
        Ok(results)
    }

    /// 1-based rank of `id` against `query` over the whole gallery.
    pub fn rank_of(&self, query: &[f32], id: &str) -> Result<usize> {
        let target = self
            .position(id)
            .ok_or_else(|| Error::UnknownId(id.to_string()))?;
        let q64 = self.widen_and_normalize(core::slice::from_ref(&query))?;
        let mut row64 = vec![0.0f64; self.dim];
        let mut out = [0.0f64];
        let mut all = vec![0.0f64; self.len()];
        for (row, slot) in all.iter_mut().enumerate() {
            kernel::row_scores(&q64, 1, self.dim, self.vector_at(row), &mut row64, &mut out);
            *slot = out[0].clamp(-1.0, 1.0);
        }
        let ts = all[target];
        let tid = &self.ids[target];
        let before = all
            .iter()
            .zip(&self.ids)
            .filter(|&(&s, id)| s > ts || (s == ts && id < tid))
            .count();
        Ok(before + 1)
    }

    /// Restriction to `ids`, preserving record order and exact stored bits.
    pub fn subset<I, S>(&self, ids: I) -> Result<Gallery>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut keep = vec![false; self.len()];
        for id in ids {
            let pos = self
                .position(id.as_ref())
                .ok_or_else(|| Error::UnknownId(id.as_ref().to_string()))?;
            keep[pos] = true;
        }
        let mut sub_ids = Vec::new();
        let mut data = Vec::new();
        let mut index = BTreeMap::new();
        for (pos, retain) in keep.iter().enumerate() {
            if *retain {
                index.insert(self.ids[pos].clone(), sub_ids.len() as u32);
                sub_ids.push(self.ids[pos].clone());
                data.extend_from_slice(self.vector_at(pos));
            }
        }
        if sub_ids.is_empty() {
            return Err(Error::EmptyGallery);
        }
        Ok(Gallery {
            dim: self.dim,
            ids: sub_ids,
            data,
            index,
        })
    }

    fn widen_and_normalize<Q: AsRef<[f32]>>(&self, queries: &[Q]) -> Result<Vec<f64>> {
        let mut q64 = Vec::with_capacity(queries.len() * self.dim);
        for q in queries {
            let q = q.as_ref();
            if q.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: q.len(),
                });
            }
            if q.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite { context: "query vector" });
            }
            let norm = math::sqrt(q.iter().map(|&x| x as f64 * x as f64).sum());
            if norm <= 1e-12 {
                return Err(Error::DegenerateEmbedding {
                    id: "query".to_string(),
                });
            }
            q64.extend(q.iter().map(|&x| x as f64 / norm));
        }
        Ok(q64)
    }

    // Keeps `top` sorted by (score desc, id asc), truncated to k.
    fn push_candidate(&self, top: &mut Vec<(f64, u32)>, k: usize, score: f64, pos: u32) {
        let ranks_before = |a: (f64, u32), b: (f64, u32)| {
            a.0 > b.0 || (a.0 == b.0 && self.ids[a.1 as usize] < self.ids[b.1 as usize])
        };
        let cand = (score, pos);
        if top.len() == k {
            let worst = *top.last().expect("k >= 1");
            if !ranks_before(cand, worst) {
                return;
            }
            top.pop();
        }
        let at = top.partition_point(|&e| ranks_before(e, cand));
        top.insert(at, cand);
    }
}

/// Size arithmetic for vector storage: `count * dim * 4` bytes.
pub fn expected_vector_bytes(count: usize, dim: usize) -> usize {
    count * dim * 4
}

#[cfg(test)]
mod tests {
    use super::kernel::dot_f64;
    use super::*;

    fn basis(n: usize) -> Vec<EmbeddingRecord> {
        (0..n)
            .map(|i| {
                let mut v = vec![0.0f32; n];
                v[i] = 1.0;
                EmbeddingRecord::new(alloc::format!("id{i}"), v)
            })
            .collect()
    }

    #[test]
    fn normalize_three_four_five() {
        assert_eq!(l2_normalize(&[3.0, 4.0]).unwrap(), vec![0.6, 0.8]);
    }

    #[test]
    fn normalize_unit_is_identity() {
        assert_eq!(l2_normalize(&[1.0, 0.0]).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn normalize_rejects_zero() {
        assert!(matches!(
            l2_normalize(&[0.0, 0.0]),
            Err(Error::DegenerateEmbedding { .. })
        ));
    }

    #[test]
    fn build_rejects_empty_and_duplicates() {
        assert_eq!(Gallery::build(vec![]).err(), Some(Error::EmptyGallery));

        let mut recs = basis(3);
        recs[2].id = "id0".into();
        assert_eq!(
            Gallery::build(recs).err(),
            Some(Error::DuplicateId("id0".into()))
        );

        let mut recs = basis(3);
        recs[1].vector.push(0.0);
        assert!(matches!(
            Gallery::build(recs),
            Err(Error::DimensionMismatch { expected: 3, got: 4 })
        ));
    }

    #[test]
    fn storage_size_arithmetic() {
        // 1M x 512 f32 vectors occupy ~2.05 GB
        assert_eq!(expected_vector_bytes(1_000_000, 512), 2_048_000_000);
        let g = Gallery::build(basis(5)).unwrap();
        assert_eq!(g.vector_bytes(), 5 * 5 * 4);
    }

    #[test]
    fn self_match_scores_one() {
        let g = Gallery::build(basis(5)).unwrap();
        let q = vec![0.0, 0.0, 1.0, 0.0, 0.0];
        let r = g.top_k(&q, 1).unwrap();
        assert_eq!(r.ranked.len(), 1);
        assert_eq!(r.ranked[0].id, "id2");
        assert_eq!(r.ranked[0].score, 1.0);
    }

    #[test]
    fn orthogonal_query_ties_break_by_id() {
        let mut recs = basis(6);
        recs.truncate(4); // ids id0..id3, all orthogonal to axis 5
        let g = Gallery::build(recs).unwrap();
        let q = vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0];
        let r = g.top_k(&q, 4).unwrap();
        let ids: Vec<&str> = r.ranked.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, vec!["id0", "id1", "id2", "id3"]);
        assert!(r.ranked.iter().all(|s| s.score == 0.0));
    }

    #[test]
    fn k_bounds_and_dim_checked() {
        let g = Gallery::build(basis(3)).unwrap();
        assert!(matches!(
            g.top_k(&[1.0, 0.0, 0.0], 0),
            Err(Error::KOutOfRange { .. })
        ));
        assert!(matches!(
            g.top_k(&[1.0, 0.0, 0.0], 4),
            Err(Error::KOutOfRange { .. })
        ));
        assert!(matches!(
            g.top_k(&[1.0, 0.0], 1),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    fn random_records(seed: u64, n: usize, d: usize) -> Vec<EmbeddingRecord> {
        let mut state = seed;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f32 / (1u64 << 53) as f32 - 0.5
        };
        (0..n)
            .map(|i| {
                EmbeddingRecord::new(
                    alloc::format!("g{i:05}"),
                    (0..d).map(|_| next()).collect(),
                )
            })
            .collect()
    }

    /// Independent full-scan sort used as the selection oracle.
    fn brute_force_top_k(g: &Gallery, q: &[f32], k: usize) -> Vec<(String, f64)> {
        let norm = math::sqrt(q.iter().map(|&x| x as f64 * x as f64).sum());
        let q64: Vec<f64> = q.iter().map(|&x| x as f64 / norm).collect();
        let mut scored: Vec<(String, f64)> = g
            .iter()
            .map(|(id, v)| {
                let v64: Vec<f64> = v.iter().map(|&x| x as f64).collect();
                (id.to_string(), dot_f64(&q64, &v64).clamp(-1.0, 1.0))
            })
            .collect();
        scored.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap()
                .then_with(|| a.0.cmp(&b.0))
        });
        scored.truncate(k);
        scored
    }

    #[test]
    fn top_k_matches_full_scan_sort() {
        let g = Gallery::build(random_records(42, 500, 16)).unwrap();
        let queries: Vec<Vec<f32>> = random_records(43, 80, 16)
            .into_iter()
            .map(|r| r.vector)
            .collect();
        let got = g.top_k_many(&queries, 7).unwrap();
        for (q, r) in queries.iter().zip(&got) {
            let want = brute_force_top_k(&g, q, 7);
            let got_pairs: Vec<(String, f64)> =
                r.ranked.iter().map(|s| (s.id.clone(), s.score)).collect();
            assert_eq!(got_pairs, want);
        }
    }

    #[test]
    fn growing_k_extends_the_prefix() {
        let g = Gallery::build(random_records(7, 300, 12)).unwrap();
        let q: Vec<f32> = random_records(9, 1, 12).remove(0).vector;
        let small = g.top_k(&q, 5).unwrap();
        let large = g.top_k(&q, 20).unwrap();
        assert_eq!(&large.ranked[..5], &small.ranked[..]);
        assert!(large
            .ranked
            .windows(2)
            .all(|w| w[0].score >= w[1].score));
    }

    #[test]
    fn subset_preserves_order_and_improves_ranks() {
        let g = Gallery::build(random_records(99, 200, 8)).unwrap();
        let all: Vec<String> = g.ids().map(|s| s.to_string()).collect();
        let full_copy = g.subset(&all).unwrap();
        assert_eq!(full_copy.len(), g.len());
        assert_eq!(full_copy.ids().collect::<Vec<_>>(), g.ids().collect::<Vec<_>>());

        let one = g.subset(["g00007"]).unwrap();
        assert_eq!(one.len(), 1);

        assert!(matches!(
            g.subset(["missing"]),
            Err(Error::UnknownId(_))
        ));

        // rank of any retained item never worsens under restriction
        let keep: Vec<String> = all.iter().step_by(3).cloned().collect();
        let sub = g.subset(&keep).unwrap();
        let q: Vec<f32> = random_records(123, 1, 8).remove(0).vector;
        for id in keep.iter().take(20) {
            let full_rank = g.rank_of(&q, id).unwrap();
            let sub_rank = sub.rank_of(&q, id).unwrap();
            assert!(sub_rank <= full_rank, "{id}: {sub_rank} > {full_rank}");
        }
    }

    #[test]
    fn gallery_member_query_ranks_itself_first() {
        let g = Gallery::build(random_records(5, 100, 24)).unwrap();
        for pos in [0usize, 17, 99] {
            let q: Vec<f32> = g.vector_at(pos).to_vec();
            let r = g.top_k(&q, 1).unwrap();
            assert_eq!(r.ranked[0].id, g.id_at(pos));
            assert!((r.ranked[0].score - 1.0).abs() <= 1e-6);
        }
    }
}
