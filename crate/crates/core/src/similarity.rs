//! Sparse symmetric item-similarity matrix.
//!
//! Entries are stored once per unordered pair with `j <= n`; symmetry is
//! implied by lookup. Each pair's cosine is computed exactly once, from
//! the lower-indexed side, so both lookup directions see the same bits.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::SimilarityError;
use crate::num::Real;
use crate::text::TfidfProfile;

/// Sparse symmetric post-similarity matrix aligned with a rating
/// matrix's item list. Stored values lie in [0, 1]; the diagonal is 1
/// for items with a nonzero profile when built with the diagonal on.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix<S> {
    items: Vec<String>,
    /// Canonical entries, sorted, with j <= n.
    entries: Vec<(usize, usize, S)>,
}

impl<S: Real> SimilarityMatrix<S> {
    /// Builds from explicit canonical entries; validates ordering, range
    /// and index bounds.
    pub fn from_entries(
        items: Vec<String>,
        mut entries: Vec<(usize, usize, S)>,
    ) -> Result<Self, SimilarityError> {
        entries.sort_by_key(|&(j, n, _)| (j, n));
        for &(j, n, s) in &entries {
            if j > n {
                return Err(SimilarityError::Invalid(format!(
                    "entry ({j}, {n}) must be stored with j <= n"
                )));
            }
            if n >= items.len() {
                return Err(SimilarityError::Invalid(format!(
                    "entry ({j}, {n}) out of range for {} items",
                    items.len()
                )));
            }
            if !s.is_finite() || s < S::zero() || s > S::one() {
                return Err(SimilarityError::Invalid(format!(
                    "similarity at ({j}, {n}) must be in [0, 1], got {s}"
                )));
            }
        }
        for window in entries.windows(2) {
            if window[0].0 == window[1].0 && window[0].1 == window[1].1 {
                return Err(SimilarityError::Invalid(format!(
                    "duplicate entry at ({}, {})",
                    window[0].0, window[0].1
                )));
            }
        }
        Ok(SimilarityMatrix { items, entries })
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    /// Stored canonical entries (j <= n), sorted by (j, n).
    pub fn entries(&self) -> &[(usize, usize, S)] {
        &self.entries
    }

    /// Symmetric lookup; unstored pairs read as 0.
    pub fn get(&self, j: usize, n: usize) -> S {
        let key = (j.min(n), j.max(n));
        self.entries
            .binary_search_by_key(&key, |&(a, b, _)| (a, b))
            .map(|pos| self.entries[pos].2)
            .unwrap_or_else(|_| S::zero())
    }

    /// Restriction to a subset of items (given by id), reindexed to the
    /// new list's order. Values are carried over unchanged.
    pub fn restrict(&self, items: &[String]) -> SimilarityMatrix<S> {
        let mut new_index: BTreeMap<&str, usize> = BTreeMap::new();
        for (idx, id) in items.iter().enumerate() {
            new_index.insert(id.as_str(), idx);
        }
        let mut old_to_new: Vec<Option<usize>> = vec![None; self.items.len()];
        for (old, id) in self.items.iter().enumerate() {
            old_to_new[old] = new_index.get(id.as_str()).copied();
        }
        let mut entries: Vec<(usize, usize, S)> = Vec::new();
        for &(j, n, s) in &self.entries {
            if let (Some(a), Some(b)) = (old_to_new[j], old_to_new[n]) {
                entries.push((a.min(b), a.max(b), s));
            }
        }
        entries.sort_by_key(|&(j, n, _)| (j, n));
        SimilarityMatrix {
            items: items.to_vec(),
            entries,
        }
    }

    /// Writes `post_id_j,post_id_n,similarity` lines, j <= n, full
    /// round-trip precision.
    pub fn write(&self, out: impl Write) -> Result<(), std::io::Error> {
        let mut out = BufWriter::new(out);
        writeln!(out, "post_id_j,post_id_n,similarity")?;
        for &(j, n, s) in &self.entries {
            writeln!(out, "{},{},{}", self.items[j], self.items[n], s)?;
        }
        out.flush()
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<(), SimilarityError> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|source| SimilarityError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.write(file).map_err(|source| SimilarityError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Reads a similarity file and aligns it to `items`; pairs touching
    /// unknown ids are dropped (the file may cover a superset).
    pub fn read_file(
        path: impl AsRef<Path>,
        items: &[String],
    ) -> Result<SimilarityMatrix<S>, SimilarityError> {
        let path = path.as_ref();
        let mut raw = String::new();
        File::open(path)
            .and_then(|mut f| f.read_to_string(&mut raw))
            .map_err(|source| SimilarityError::Io {
                path: path.display().to_string(),
                source,
            })?;
        let index: BTreeMap<&str, usize> = items
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let mut entries = Vec::new();
        for (idx, line) in raw.lines().enumerate() {
            let line_no = idx as u64 + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || (idx == 0 && trimmed == "post_id_j,post_id_n,similarity") {
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').collect();
            if fields.len() != 3 {
                return Err(SimilarityError::Parse {
                    path: path.display().to_string(),
                    line: line_no,
                    message: format!("expected 3 fields, got {}", fields.len()),
                });
            }
            let value: f64 = fields[2].parse().map_err(|e| SimilarityError::Parse {
                path: path.display().to_string(),
                line: line_no,
                message: format!("bad similarity value: {e}"),
            })?;
            if let (Some(&a), Some(&b)) = (index.get(fields[0]), index.get(fields[1])) {
                entries.push((a.min(b), a.max(b), S::from_config(value)));
            }
        }
        SimilarityMatrix::from_entries(items.to_vec(), entries)
    }
}

/// Builds the similarity matrix from TF-IDF profiles.
///
/// Per item, the `top_k` largest cosines strictly above `threshold` are
/// kept; the kept sets are symmetrized by union. With the diagonal on,
/// items with a nonzero profile store a 1 on the diagonal. Ties at the
/// top-k boundary break toward the lower item index.
pub fn build_similarity<S: Real>(
    profiles: &[TfidfProfile<S>],
    top_k: usize,
    threshold: f64,
    include_diagonal: bool,
) -> Result<SimilarityMatrix<S>, SimilarityError> {
    if top_k == 0 {
        return Err(SimilarityError::ZeroTopK);
    }
    if !(0.0..1.0).contains(&threshold) {
        return Err(SimilarityError::Invalid(format!(
            "threshold must be in [0, 1), got {threshold}"
        )));
    }
    let threshold = S::from_config(threshold);
    let n = profiles.len();
    let items: Vec<String> = profiles.iter().map(|p| p.post_id.clone()).collect();

    let norms: Vec<S> = profiles.iter().map(TfidfProfile::norm).collect();

    // Inverted index: term -> (item, weight), items ascending.
    let mut postings: BTreeMap<usize, Vec<(usize, S)>> = BTreeMap::new();
    for (item, profile) in profiles.iter().enumerate() {
        for &(term, weight) in profile.weights() {
            postings.entry(term).or_default().push((item, weight));
        }
    }

    // candidates[i]: all neighbors with cosine above threshold, both
    // directions, each pair computed once from its lower index.
    let mut candidates: Vec<Vec<(usize, S)>> = vec![Vec::new(); n];
    let mut dot_acc: Vec<S> = vec![S::zero(); n];
    let mut touched: Vec<usize> = Vec::new();
    for j in 0..n {
        if norms[j] == S::zero() {
            continue;
        }
        // Accumulate dot products against every higher-indexed item, in
        // ascending term order (the same order a direct sparse dot uses).
        for &(term, weight_j) in profiles[j].weights() {
            for &(other, weight_o) in &postings[&term] {
                if other <= j {
                    continue;
                }
                if dot_acc[other] == S::zero() {
                    touched.push(other);
                }
                dot_acc[other] += weight_j * weight_o;
            }
        }
        for &other in &touched {
            let dot = dot_acc[other];
            dot_acc[other] = S::zero();
            if dot == S::zero() || norms[other] == S::zero() {
                continue;
            }
            let value = dot / (norms[j] * norms[other]);
            if value > threshold {
                candidates[j].push((other, value));
                candidates[other].push((j, value));
            }
        }
        touched.clear();
    }

    // Union of per-item top-k selections.
    let mut kept: BTreeMap<(usize, usize), S> = BTreeMap::new();
    for (item, mut cand) in candidates.into_iter().enumerate() {
        cand.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .expect("finite cosines")
                .then(a.0.cmp(&b.0))
        });
        for &(other, value) in cand.iter().take(top_k) {
            kept.insert((item.min(other), item.max(other)), value);
        }
    }
    if include_diagonal {
        for (item, norm) in norms.iter().enumerate() {
            if *norm > S::zero() {
                kept.insert((item, item), S::one());
            }
        }
    }

    let entries: Vec<(usize, usize, S)> = kept.into_iter().map(|((j, n), s)| (j, n, s)).collect();
    // Cosines of nonnegative vectors can exceed 1 by a few ulps; clamp
    // through the validating constructor's tolerance by capping here.
    let entries = entries
        .into_iter()
        .map(|(j, n, s)| (j, n, if s > S::one() { S::one() } else { s }))
        .collect();
    SimilarityMatrix::from_entries(items, entries)
}
