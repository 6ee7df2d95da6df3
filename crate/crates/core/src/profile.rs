//! Feedback scoring and rating-matrix assembly.
//!
//! Events are weighted per interaction type and grouped into three
//! categories; a profile selector picks which categories count. Scores
//! are summed per (user, post), zero-score pairs are dropped, and the
//! survivors are normalized onto a bounded rating scale.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::data::{Dataset, InteractionEvent, InteractionType};
use crate::error::{ConfigError, ProfileError};
use crate::num::Real;

/// The three feedback categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    Direct,
    Social,
    Reading,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Direct, Category::Social, Category::Reading];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Direct => "direct",
            Category::Social => "social",
            Category::Reading => "reading",
        }
    }

    fn index(self) -> usize {
        match self {
            Category::Direct => 0,
            Category::Social => 1,
            Category::Reading => 2,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "direct" => Ok(Category::Direct),
            "social" => Ok(Category::Social),
            "reading" => Ok(Category::Reading),
            other => Err(format!("unknown category `{other}`")),
        }
    }
}

/// Which feedback categories contribute to a profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProfileSelector {
    AllInteraction,
    DirectOnly,
    SocialOnly,
    ReadingOnly,
}

impl ProfileSelector {
    pub const ALL: [ProfileSelector; 4] = [
        ProfileSelector::AllInteraction,
        ProfileSelector::DirectOnly,
        ProfileSelector::SocialOnly,
        ProfileSelector::ReadingOnly,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProfileSelector::AllInteraction => "all",
            ProfileSelector::DirectOnly => "direct",
            ProfileSelector::SocialOnly => "social",
            ProfileSelector::ReadingOnly => "reading",
        }
    }

    pub fn passes(self, category: Category) -> bool {
        match self {
            ProfileSelector::AllInteraction => true,
            ProfileSelector::DirectOnly => category == Category::Direct,
            ProfileSelector::SocialOnly => category == Category::Social,
            ProfileSelector::ReadingOnly => category == Category::Reading,
        }
    }
}

impl fmt::Display for ProfileSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProfileSelector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" | "all_interaction" => Ok(ProfileSelector::AllInteraction),
            "direct" => Ok(ProfileSelector::DirectOnly),
            "social" => Ok(ProfileSelector::SocialOnly),
            "reading" => Ok(ProfileSelector::ReadingOnly),
            other => Err(format!("unknown selector `{other}`")),
        }
    }
}

/// Per-type weights and category assignments.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    entries: BTreeMap<InteractionType, (f64, Category)>,
}

impl WeightTable {
    /// Effort-ordered defaults: shares above comments above likes above
    /// impressions; reading weight applies to the progress fraction.
    pub fn default_table() -> Self {
        use Category::*;
        use InteractionType::*;
        let entries = BTreeMap::from([
            (DirectLike, (1.0, Direct)),
            (DirectComment, (2.0, Direct)),
            (DirectShare, (3.0, Direct)),
            (DirectReshare, (3.0, Direct)),
            (DirectClickthrough, (1.0, Direct)),
            (DirectImpression, (0.2, Direct)),
            (TwitterShare, (3.0, Social)),
            (TwitterReshare, (3.0, Social)),
            (FacebookShare, (3.0, Social)),
            (FacebookReshare, (3.0, Social)),
            (LinkedinShare, (3.0, Social)),
            (LinkedinReshare, (3.0, Social)),
            (ReadingProgress, (2.0, Reading)),
            (ReadingCompletion, (2.0, Reading)),
        ]);
        WeightTable { entries }
    }

    /// Builds a table from explicit entries and checks the invariants:
    /// every schema type covered, weights nonnegative, every category
    /// inhabited.
    pub fn new(
        entries: impl IntoIterator<Item = (InteractionType, f64, Category)>,
    ) -> Result<Self, ProfileError> {
        let mut map = BTreeMap::new();
        for (ty, weight, category) in entries {
            if map.insert(ty, (weight, category)).is_some() {
                return Err(ProfileError::BadWeightTable(format!(
                    "duplicate entry for `{ty}`"
                )));
            }
        }
        let table = WeightTable { entries: map };
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        for ty in InteractionType::ALL {
            match self.entries.get(&ty) {
                None => {
                    return Err(ProfileError::BadWeightTable(format!(
                        "missing entry for `{ty}`"
                    )))
                }
                Some(&(w, _)) if !w.is_finite() || w < 0.0 => {
                    return Err(ProfileError::BadWeightTable(format!(
                        "weight for `{ty}` must be finite and nonnegative, got {w}"
                    )))
                }
                _ => {}
            }
        }
        for category in Category::ALL {
            if !self.entries.values().any(|&(_, c)| c == category) {
                return Err(ProfileError::BadWeightTable(format!(
                    "category `{category}` has no member type"
                )));
            }
        }
        Ok(())
    }

    pub fn weight_of(&self, ty: InteractionType) -> Result<f64, ProfileError> {
        self.entries
            .get(&ty)
            .map(|&(w, _)| w)
            .ok_or_else(|| ProfileError::UnknownType(ty.as_str().to_string()))
    }

    pub fn category_of(&self, ty: InteractionType) -> Result<Category, ProfileError> {
        self.entries
            .get(&ty)
            .map(|&(_, c)| c)
            .ok_or_else(|| ProfileError::UnknownType(ty.as_str().to_string()))
    }

    pub fn entries(&self) -> impl Iterator<Item = (InteractionType, f64, Category)> + '_ {
        self.entries.iter().map(|(&ty, &(w, c))| (ty, w, c))
    }

    /// Returns a copy with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> WeightTable {
        WeightTable {
            entries: self
                .entries
                .iter()
                .map(|(&ty, &(w, c))| (ty, (w * factor, c)))
                .collect(),
        }
    }

    /// Reads a `interaction_type,weight,category` file. A header line is
    /// optional; blank lines and `#` comments are skipped.
    pub fn read_file(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let raw = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut rows = Vec::new();
        for (idx, line) in raw.lines().enumerate() {
            let line_no = idx as u64 + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if idx == 0 && trimmed == "interaction_type,weight,category" {
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(ConfigError::Parse {
                    path: path.display().to_string(),
                    line: line_no,
                    message: format!("expected 3 fields, got {}", fields.len()),
                });
            }
            let ty: InteractionType = fields[0].parse().map_err(|message| ConfigError::Parse {
                path: path.display().to_string(),
                line: line_no,
                message,
            })?;
            let weight: f64 = fields[1].parse().map_err(|e| ConfigError::Parse {
                path: path.display().to_string(),
                line: line_no,
                message: format!("bad weight: {e}"),
            })?;
            let category: Category =
                fields[2].parse().map_err(|_| ConfigError::UnknownCategory {
                    path: path.display().to_string(),
                    line: line_no,
                    token: fields[2].to_string(),
                })?;
            rows.push((ty, weight, category));
        }
        WeightTable::new(rows).map_err(|e| ConfigError::Parse {
            path: path.display().to_string(),
            line: 0,
            message: e.to_string(),
        })
    }

    /// Serializes the table in the same format `read_file` accepts.
    pub fn to_file_string(&self) -> String {
        let mut out = String::from("interaction_type,weight,category\n");
        for (ty, weight, category) in self.entries() {
            out.push_str(&format!("{ty},{weight},{category}\n"));
        }
        out
    }
}

impl Default for WeightTable {
    fn default() -> Self {
        WeightTable::default_table()
    }
}

/// How raw feedback scores map onto the rating scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMethod {
    None,
    Log1pThenMinMax,
    MinMax,
}

impl NormMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            NormMethod::None => "none",
            NormMethod::Log1pThenMinMax => "log1p_minmax",
            NormMethod::MinMax => "minmax",
        }
    }
}

impl fmt::Display for NormMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NormMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(NormMethod::None),
            "log1p_minmax" | "log1p_then_minmax" => Ok(NormMethod::Log1pThenMinMax),
            "minmax" => Ok(NormMethod::MinMax),
            other => Err(format!("unknown normalization method `{other}`")),
        }
    }
}

/// Normalization method plus target rating bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationSpec<S> {
    pub method: NormMethod,
    pub rating_min: S,
    pub rating_max: S,
}

impl<S: Real> Default for NormalizationSpec<S> {
    fn default() -> Self {
        NormalizationSpec {
            method: NormMethod::Log1pThenMinMax,
            rating_min: S::zero(),
            rating_max: S::from_config(5.0),
        }
    }
}

impl<S: Real> NormalizationSpec<S> {
    pub fn validate(&self) -> Result<(), ProfileError> {
        if !self.rating_min.is_finite() || !self.rating_max.is_finite() {
            return Err(ProfileError::BadNormalization(
                "rating bounds must be finite".into(),
            ));
        }
        if self.rating_min >= self.rating_max {
            return Err(ProfileError::BadNormalization(format!(
                "rating_min {} must be below rating_max {}",
                self.rating_min, self.rating_max
            )));
        }
        Ok(())
    }

    pub fn midpoint(&self) -> S {
        let two = S::from_config(2.0);
        (self.rating_min + self.rating_max) / two
    }
}

/// Sparse user x item rating matrix. Entries are the known-pair set the
/// factorization loss sums over; they are kept sorted by (user, item).
#[derive(Debug, Clone)]
pub struct RatingMatrix<S> {
    users: Vec<String>,
    items: Vec<String>,
    entries: Vec<(usize, usize, S)>,
    row_start: Vec<usize>,
}

impl<S: Real> PartialEq for RatingMatrix<S> {
    fn eq(&self, other: &Self) -> bool {
        self.users == other.users && self.items == other.items && self.entries == other.entries
    }
}

impl<S: Real> RatingMatrix<S> {
    /// Builds a matrix from index lists and entries. Entries are sorted
    /// here; duplicate keys, out-of-range indices and non-finite ratings
    /// are rejected.
    pub fn from_parts(
        users: Vec<String>,
        items: Vec<String>,
        mut entries: Vec<(usize, usize, S)>,
    ) -> Result<Self, ProfileError> {
        entries.sort_by_key(|&(u, i, _)| (u, i));
        for window in entries.windows(2) {
            if window[0].0 == window[1].0 && window[0].1 == window[1].1 {
                return Err(ProfileError::BadMatrix(format!(
                    "duplicate rating entry at ({}, {})",
                    window[0].0, window[0].1
                )));
            }
        }
        for &(u, i, r) in &entries {
            if u >= users.len() || i >= items.len() {
                return Err(ProfileError::BadMatrix(format!(
                    "rating entry ({u}, {i}) out of range {}x{}",
                    users.len(),
                    items.len()
                )));
            }
            if !r.is_finite() {
                return Err(ProfileError::BadMatrix(format!(
                    "non-finite rating at ({u}, {i})"
                )));
            }
        }
        let row_start = build_row_start(users.len(), &entries);
        Ok(RatingMatrix {
            users,
            items,
            entries,
            row_start,
        })
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn users(&self) -> &[String] {
        &self.users
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    /// All entries, sorted by (user, item).
    pub fn entries(&self) -> &[(usize, usize, S)] {
        &self.entries
    }

    /// One user's entries, sorted by item index.
    pub fn user_row(&self, user: usize) -> &[(usize, usize, S)] {
        &self.entries[self.row_start[user]..self.row_start[user + 1]]
    }

    pub fn get(&self, user: usize, item: usize) -> Option<S> {
        self.user_row(user)
            .binary_search_by_key(&item, |&(_, i, _)| i)
            .ok()
            .map(|pos| self.user_row(user)[pos].2)
    }

    pub fn user_position(&self, user_id: &str) -> Option<usize> {
        self.users.iter().position(|u| u == user_id)
    }

    /// Serializes as `user_id,post_id,rating` lines with a header.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("user_id,post_id,rating\n");
        for &(u, i, r) in &self.entries {
            out.push_str(&format!("{},{},{}\n", self.users[u], self.items[i], r));
        }
        out
    }

    /// Parses the `to_csv_string` format. Users and items are indexed in
    /// order of first appearance.
    pub fn from_csv_str(raw: &str) -> Result<Self, ProfileError> {
        let mut users: Vec<String> = Vec::new();
        let mut items: Vec<String> = Vec::new();
        let mut user_idx: HashMap<String, usize> = HashMap::new();
        let mut item_idx: HashMap<String, usize> = HashMap::new();
        let mut entries = Vec::new();
        for (idx, line) in raw.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || (idx == 0 && trimmed == "user_id,post_id,rating") {
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').collect();
            if fields.len() != 3 {
                return Err(ProfileError::BadMatrix(format!(
                    "ratings line {}: expected 3 fields",
                    idx + 1
                )));
            }
            let u = *user_idx.entry(fields[0].to_string()).or_insert_with(|| {
                users.push(fields[0].to_string());
                users.len() - 1
            });
            let i = *item_idx.entry(fields[1].to_string()).or_insert_with(|| {
                items.push(fields[1].to_string());
                items.len() - 1
            });
            let r: f64 = fields[2].parse().map_err(|e| {
                ProfileError::BadMatrix(format!("ratings line {}: bad rating: {e}", idx + 1))
            })?;
            entries.push((u, i, S::from_config(r)));
        }
        if entries.is_empty() {
            return Err(ProfileError::EmptyMatrix);
        }
        RatingMatrix::from_parts(users, items, entries)
    }
}

fn build_row_start<S>(num_users: usize, entries: &[(usize, usize, S)]) -> Vec<usize> {
    let mut row_start = vec![0usize; num_users + 1];
    for &(u, _, _) in entries {
        row_start[u + 1] += 1;
    }
    for u in 0..num_users {
        row_start[u + 1] += row_start[u];
    }
    row_start
}

/// Weighted feedback score for one (user, post) group of events.
///
/// Category subtotals are accumulated separately and combined in a fixed
/// direct + social + reading order, so the all-interaction score equals
/// the sum of the single-category scores exactly.
pub fn feedback_score<S: Real>(
    events: &[InteractionEvent],
    weights: &WeightTable,
    selector: ProfileSelector,
) -> Result<S, ProfileError> {
    let mut subtotal = [S::zero(); 3];
    for event in events {
        let weight = weights.weight_of(event.interaction_type)?;
        let category = weights.category_of(event.interaction_type)?;
        subtotal[category.index()] +=
            S::from_config(weight) * S::from_config(event.value);
    }
    let mut score = S::zero();
    for category in Category::ALL {
        if selector.passes(category) {
            score += subtotal[category.index()];
        }
    }
    Ok(score)
}

/// Event and distinct-user counts for one category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CoverageRow {
    pub events: usize,
    pub users: usize,
}

/// Per-category dataset coverage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CategoryCoverage {
    pub direct: CoverageRow,
    pub social: CoverageRow,
    pub reading: CoverageRow,
}

impl CategoryCoverage {
    pub fn row(&self, category: Category) -> CoverageRow {
        match category {
            Category::Direct => self.direct,
            Category::Social => self.social,
            Category::Reading => self.reading,
        }
    }
}

/// Counts events and distinct users per category.
pub fn category_coverage(
    dataset: &Dataset,
    weights: &WeightTable,
) -> Result<CategoryCoverage, ProfileError> {
    weights.validate()?;
    let user_index = dataset.user_index();
    let mut events = [0usize; 3];
    let mut seen = [
        vec![false; dataset.users().len()],
        vec![false; dataset.users().len()],
        vec![false; dataset.users().len()],
    ];
    for event in dataset.events() {
        let cat = weights.category_of(event.interaction_type)?.index();
        events[cat] += 1;
        seen[cat][user_index[event.user_id.as_str()]] = true;
    }
    let users = |cat: usize| seen[cat].iter().filter(|&&s| s).count();
    Ok(CategoryCoverage {
        direct: CoverageRow {
            events: events[0],
            users: users(0),
        },
        social: CoverageRow {
            events: events[1],
            users: users(1),
        },
        reading: CoverageRow {
            events: events[2],
            users: users(2),
        },
    })
}

/// Groups events by (user, post), scores each group under the selector,
/// drops zero scores, normalizes the survivors, and re-indexes to the
/// users and items that remain.
pub fn build_rating_matrix<S: Real>(
    dataset: &Dataset,
    weights: &WeightTable,
    selector: ProfileSelector,
    norm: &NormalizationSpec<S>,
) -> Result<RatingMatrix<S>, ProfileError> {
    weights.validate()?;
    norm.validate()?;
    let user_index = dataset.user_index();
    let post_index = dataset.post_index();

    // Per-pair category subtotals, accumulated in event order.
    let mut groups: BTreeMap<(usize, usize), [S; 3]> = BTreeMap::new();
    for event in dataset.events() {
        let weight = weights.weight_of(event.interaction_type)?;
        let category = weights.category_of(event.interaction_type)?;
        let key = (
            user_index[event.user_id.as_str()],
            post_index[event.post_id.as_str()],
        );
        groups.entry(key).or_insert([S::zero(); 3])[category.index()] +=
            S::from_config(weight) * S::from_config(event.value);
    }

    let mut scored: Vec<(usize, usize, S)> = Vec::new();
    for (&(u, i), subtotal) in &groups {
        let mut score = S::zero();
        for category in Category::ALL {
            if selector.passes(category) {
                score += subtotal[category.index()];
            }
        }
        if score != S::zero() {
            scored.push((u, i, score));
        }
    }
    if scored.is_empty() {
        return Err(ProfileError::EmptyMatrix);
    }

    normalize_scores(&mut scored, norm);

    // Re-index to surviving users/items, preserving dataset order.
    let mut user_map: Vec<Option<usize>> = vec![None; dataset.users().len()];
    let mut item_map: Vec<Option<usize>> = vec![None; dataset.posts().len()];
    let mut users = Vec::new();
    let mut items = Vec::new();
    for &(u, _, _) in &scored {
        if user_map[u].is_none() {
            user_map[u] = Some(usize::MAX); // mark, number later in dataset order
        }
    }
    for &(_, i, _) in &scored {
        if item_map[i].is_none() {
            item_map[i] = Some(usize::MAX);
        }
    }
    for (u, slot) in user_map.iter_mut().enumerate() {
        if slot.is_some() {
            *slot = Some(users.len());
            users.push(dataset.users()[u].clone());
        }
    }
    for (i, slot) in item_map.iter_mut().enumerate() {
        if slot.is_some() {
            *slot = Some(items.len());
            items.push(dataset.posts()[i].post_id.clone());
        }
    }
    let entries: Vec<(usize, usize, S)> = scored
        .into_iter()
        .map(|(u, i, r)| (user_map[u].unwrap(), item_map[i].unwrap(), r))
        .collect();
    RatingMatrix::from_parts(users, items, entries)
}

fn normalize_scores<S: Real>(scored: &mut [(usize, usize, S)], norm: &NormalizationSpec<S>) {
    match norm.method {
        NormMethod::None => {}
        NormMethod::Log1pThenMinMax => {
            for entry in scored.iter_mut() {
                entry.2 = entry.2.ln_1p();
            }
            min_max_map(scored, norm);
        }
        NormMethod::MinMax => min_max_map(scored, norm),
    }
}

/// Affine map of the observed score range onto the rating bounds.
/// A degenerate range (all scores equal) maps everything to the top of
/// the scale: uniform engagement reads as positive signal.
fn min_max_map<S: Real>(scored: &mut [(usize, usize, S)], norm: &NormalizationSpec<S>) {
    let mut lo = scored[0].2;
    let mut hi = scored[0].2;
    for &(_, _, s) in scored.iter() {
        if s < lo {
            lo = s;
        }
        if s > hi {
            hi = s;
        }
    }
    if lo == hi {
        for entry in scored.iter_mut() {
            entry.2 = norm.rating_max;
        }
        return;
    }
    let span = norm.rating_max - norm.rating_min;
    for entry in scored.iter_mut() {
        let mapped = norm.rating_min + (entry.2 - lo) / (hi - lo) * span;
        entry.2 = mapped.max(norm.rating_min).min(norm.rating_max);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Post;

    fn event(user: &str, post: &str, ty: InteractionType, value: f64) -> InteractionEvent {
        InteractionEvent {
            user_id: user.into(),
            post_id: post.into(),
            interaction_type: ty,
            value,
            timestamp: None,
        }
    }

    fn mixed_events() -> Vec<InteractionEvent> {
        vec![
            event("u1", "p1", InteractionType::DirectLike, 1.0),
            event("u1", "p1", InteractionType::DirectLike, 1.0),
            event("u1", "p1", InteractionType::TwitterShare, 1.0),
        ]
    }

    #[test]
    fn weighted_sum_matches_hand_arithmetic() {
        let weights = WeightTable::default_table();
        // like weight 1 (x2) + twitter share weight 3 (x1)
        let all: f64 =
            feedback_score(&mixed_events(), &weights, ProfileSelector::AllInteraction).unwrap();
        assert_eq!(all, 5.0);
        let direct: f64 =
            feedback_score(&mixed_events(), &weights, ProfileSelector::DirectOnly).unwrap();
        assert_eq!(direct, 2.0);
        let empty: f64 =
            feedback_score(&[], &weights, ProfileSelector::AllInteraction).unwrap();
        assert_eq!(empty, 0.0);
    }

    #[test]
    fn additivity_is_exact() {
        let weights = WeightTable::default_table();
        let events = vec![
            event("u1", "p1", InteractionType::DirectComment, 3.0),
            event("u1", "p1", InteractionType::ReadingProgress, 0.37),
            event("u1", "p1", InteractionType::LinkedinReshare, 2.0),
            event("u1", "p1", InteractionType::DirectImpression, 7.0),
        ];
        let all: f64 = feedback_score(&events, &weights, ProfileSelector::AllInteraction).unwrap();
        let d: f64 = feedback_score(&events, &weights, ProfileSelector::DirectOnly).unwrap();
        let s: f64 = feedback_score(&events, &weights, ProfileSelector::SocialOnly).unwrap();
        let r: f64 = feedback_score(&events, &weights, ProfileSelector::ReadingOnly).unwrap();
        assert_eq!(all, d + s + r);
    }

    fn tiny_dataset() -> Dataset {
        Dataset::from_events(
            vec![
                Post {
                    post_id: "p1".into(),
                    text: "one".into(),
                },
                Post {
                    post_id: "p2".into(),
                    text: "two".into(),
                },
            ],
            vec![
                event("u1", "p1", InteractionType::DirectLike, 1.0),
                event("u2", "p2", InteractionType::DirectLike, 9.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn minmax_endpoints_map_to_bounds() {
        let norm = NormalizationSpec::<f64> {
            method: NormMethod::MinMax,
            rating_min: 0.0,
            rating_max: 5.0,
        };
        let matrix = build_rating_matrix(
            &tiny_dataset(),
            &WeightTable::default_table(),
            ProfileSelector::AllInteraction,
            &norm,
        )
        .unwrap();
        let ratings: Vec<f64> = matrix.entries().iter().map(|&(_, _, r)| r).collect();
        assert_eq!(ratings, vec![0.0, 5.0]);
    }

    #[test]
    fn degenerate_single_score_maps_to_rating_max() {
        let ds = Dataset::from_events(
            vec![Post {
                post_id: "p1".into(),
                text: "one".into(),
            }],
            // raw score e - 1, so ln(1 + s) = 1; single value is degenerate
            vec![event("u1", "p1", InteractionType::DirectLike, std::f64::consts::E - 1.0)],
        )
        .unwrap();
        let matrix = build_rating_matrix(
            &ds,
            &WeightTable::default_table(),
            ProfileSelector::AllInteraction,
            &NormalizationSpec::<f64>::default(),
        )
        .unwrap();
        assert_eq!(matrix.entries(), &[(0, 0, 5.0)]);
    }

    #[test]
    fn zero_score_pairs_are_dropped_and_indexes_shrink() {
        // u2 only has a social event: DirectOnly drops it entirely.
        let ds = Dataset::from_events(
            vec![
                Post {
                    post_id: "p1".into(),
                    text: "one".into(),
                },
                Post {
                    post_id: "p2".into(),
                    text: "two".into(),
                },
            ],
            vec![
                event("u1", "p1", InteractionType::DirectLike, 1.0),
                event("u2", "p2", InteractionType::TwitterShare, 1.0),
            ],
        )
        .unwrap();
        let matrix = build_rating_matrix(
            &ds,
            &WeightTable::default_table(),
            ProfileSelector::DirectOnly,
            &NormalizationSpec::<f64>::default(),
        )
        .unwrap();
        assert_eq!(matrix.users(), ["u1".to_string()]);
        assert_eq!(matrix.items(), ["p1".to_string()]);

        let err = build_rating_matrix(
            &ds,
            &WeightTable::default_table(),
            ProfileSelector::ReadingOnly,
            &NormalizationSpec::<f64>::default(),
        )
        .unwrap_err();
        assert!(matches!(err, ProfileError::EmptyMatrix));
    }

    #[test]
    fn coverage_counts_events_and_distinct_users() {
        let ds = Dataset::from_events(
            vec![
                Post {
                    post_id: "p1".into(),
                    text: "one".into(),
                },
                Post {
                    post_id: "p2".into(),
                    text: "two".into(),
                },
            ],
            vec![
                event("u1", "p1", InteractionType::DirectLike, 1.0),
                event("u1", "p2", InteractionType::DirectComment, 1.0),
                event("u2", "p1", InteractionType::TwitterShare, 1.0),
                event("u1", "p1", InteractionType::ReadingProgress, 0.5),
            ],
        )
        .unwrap();
        let cov = category_coverage(&ds, &WeightTable::default_table()).unwrap();
        assert_eq!(cov.direct, CoverageRow { events: 2, users: 1 });
        assert_eq!(cov.social, CoverageRow { events: 1, users: 1 });
        assert_eq!(cov.reading, CoverageRow { events: 1, users: 1 });
    }

    #[test]
    fn empty_dataset_coverage_is_zero() {
        let ds = Dataset::from_events(vec![], vec![]).unwrap();
        let cov = category_coverage(&ds, &WeightTable::default_table()).unwrap();
        assert_eq!(cov, CategoryCoverage::default());
    }

    #[test]
    fn weight_table_invariants_are_enforced() {
        // Missing reading types.
        let partial: Vec<_> = WeightTable::default_table()
            .entries()
            .filter(|(ty, _, _)| !ty.as_str().starts_with("reading"))
            .collect();
        assert!(WeightTable::new(partial).is_err());

        // Negative weight.
        let negative: Vec<_> = WeightTable::default_table()
            .entries()
            .map(|(ty, w, c)| {
                if ty == InteractionType::DirectLike {
                    (ty, -1.0, c)
                } else {
                    (ty, w, c)
                }
            })
            .collect();
        assert!(WeightTable::new(negative).is_err());
    }

    #[test]
    fn weight_table_round_trips_through_file_format() {
        let table = WeightTable::default_table();
        let text = table.to_file_string();
        let dir = std::env::temp_dir().join("feedrec_profile_tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("weights.csv");
        std::fs::write(&path, &text).unwrap();
        let back = WeightTable::read_file(&path).unwrap();
        assert_eq!(back, table);
    }

    #[test]
    fn unknown_category_in_weight_file_is_a_config_error() {
        let dir = std::env::temp_dir().join("feedrec_profile_tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad_weights.csv");
        std::fs::write(&path, "direct_like,1,sideways\n").unwrap();
        let err = WeightTable::read_file(&path).unwrap_err();
        assert!(err.to_string().contains("sideways"), "{err}");
    }

    #[test]
    fn none_method_keeps_raw_scores() {
        let norm = NormalizationSpec::<f64> {
            method: NormMethod::None,
            rating_min: 0.0,
            rating_max: 5.0,
        };
        let matrix = build_rating_matrix(
            &tiny_dataset(),
            &WeightTable::default_table(),
            ProfileSelector::AllInteraction,
            &norm,
        )
        .unwrap();
        let ratings: Vec<f64> = matrix.entries().iter().map(|&(_, _, r)| r).collect();
        assert_eq!(ratings, vec![1.0, 9.0]);
    }

    #[test]
    fn scores_work_in_single_precision() {
        let weights = WeightTable::default_table();
        let score: f32 =
            feedback_score(&mixed_events(), &weights, ProfileSelector::AllInteraction).unwrap();
        assert_eq!(score, 5.0f32);
    }

    #[test]
    fn ratings_csv_round_trips() {
        let matrix = RatingMatrix::<f64>::from_parts(
            vec!["u1".into(), "u2".into()],
            vec!["p1".into(), "p2".into()],
            vec![(0, 0, 1.5), (1, 1, 4.25), (0, 1, 0.125)],
        )
        .unwrap();
        let text = matrix.to_csv_string();
        let back = RatingMatrix::<f64>::from_csv_str(&text).unwrap();
        assert_eq!(back, matrix);
    }
}
