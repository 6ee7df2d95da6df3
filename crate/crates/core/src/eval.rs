//! Train/test splitting, error and ranking metrics, and the
//! 4-profile x 2-model experiment grid.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::error::{Error, EvalError};
use crate::factor::{train, FactorModel, Hyperparams};
use crate::num::Real;
use crate::profile::{
    build_rating_matrix, NormalizationSpec, ProfileSelector, RatingMatrix, WeightTable,
};
use crate::similarity::{build_similarity, SimilarityMatrix};
use crate::text::build_tfidf;

/// Per-user holdout split: each user's rated items are split
/// independently; users with fewer than two ratings stay in train.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            test_fraction: 0.2,
            seed: 7,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), EvalError> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(EvalError::BadConfig(format!(
                "test_fraction must be in (0, 1), got {}",
                self.test_fraction
            )));
        }
        Ok(())
    }
}

/// Splits a rating matrix per user. Both outputs keep the input's full
/// user and item index lists, so factor rows stay aligned.
pub fn split<S: Real>(
    ratings: &RatingMatrix<S>,
    spec: &SplitSpec,
) -> Result<(RatingMatrix<S>, RatingMatrix<S>), EvalError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut train_entries: Vec<(usize, usize, S)> = Vec::new();
    let mut test_entries: Vec<(usize, usize, S)> = Vec::new();
    for u in 0..ratings.num_users() {
        let row = ratings.user_row(u);
        if row.len() < 2 {
            train_entries.extend_from_slice(row);
            continue;
        }
        let n_test = (spec.test_fraction * row.len() as f64).round() as usize;
        let mut order: Vec<usize> = (0..row.len()).collect();
        order.shuffle(&mut rng);
        for (pos, &idx) in order.iter().enumerate() {
            if pos < n_test {
                test_entries.push(row[idx]);
            } else {
                train_entries.push(row[idx]);
            }
        }
    }
    let make = |entries: Vec<(usize, usize, S)>| {
        RatingMatrix::from_parts(ratings.users().to_vec(), ratings.items().to_vec(), entries)
            .expect("subset of a valid matrix")
    };
    Ok((make(train_entries), make(test_entries)))
}

/// RMSE and MAE over (true, predicted) pairs.
pub fn rmse_mae<S: Real>(pairs: &[(S, S)]) -> Result<(S, S), EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::UndefinedMetric(
            "no prediction pairs to score".into(),
        ));
    }
    let n = S::from_config(pairs.len() as f64);
    let mut sq = S::zero();
    let mut abs = S::zero();
    for &(truth, predicted) in pairs {
        let e = truth - predicted;
        sq += e * e;
        abs += e.abs();
    }
    let rmse = (sq / n).sqrt();
    let mae = abs / n;
    // Jensen: the quadratic mean dominates the absolute mean.
    debug_assert!(
        mae <= rmse || mae - rmse <= rmse * S::from_config(1e-12),
        "mae {mae} exceeds rmse {rmse}"
    );
    Ok((rmse, mae))
}

/// A held-out item is relevant when its true rating reaches the
/// threshold (default: midpoint of the rating scale).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelevanceRule<S> {
    pub threshold: S,
}

impl<S: Real> RelevanceRule<S> {
    pub fn midpoint(norm: &NormalizationSpec<S>) -> Self {
        RelevanceRule {
            threshold: norm.midpoint(),
        }
    }
}

impl<S: Real> Default for RelevanceRule<S> {
    fn default() -> Self {
        RelevanceRule::midpoint(&NormalizationSpec::default())
    }
}

/// Which items are ranked for top-k metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateMode {
    /// Rank only the user's held-out test items.
    Test,
    /// Rank every item the user has no training rating for.
    AllUnrated,
}

impl CandidateMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CandidateMode::Test => "test",
            CandidateMode::AllUnrated => "all-unrated",
        }
    }
}

impl fmt::Display for CandidateMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CandidateMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "test" => Ok(CandidateMode::Test),
            "all-unrated" | "all_unrated" => Ok(CandidateMode::AllUnrated),
            other => Err(format!("unknown candidate mode `{other}`")),
        }
    }
}

/// Macro-averaged precision, recall and F1 at k.
///
/// Per qualifying user (at least one relevant held-out item): rank the
/// candidate set by predicted score descending (ties toward the lower
/// item index), take the top `min(k, candidates)`, and score hits
/// against the relevant held-out items. F1 is the harmonic mean of the
/// averaged precision and recall.
pub fn topk_f1<S: Real>(
    model: &FactorModel<S>,
    train: &RatingMatrix<S>,
    test: &RatingMatrix<S>,
    k: usize,
    rule: &RelevanceRule<S>,
    candidates: CandidateMode,
) -> Result<(S, S, S), EvalError> {
    if k == 0 {
        return Err(EvalError::BadConfig("k must be at least 1".into()));
    }
    if model.num_users() != test.num_users()
        || model.num_items() != test.num_items()
        || train.num_users() != test.num_users()
        || train.num_items() != test.num_items()
    {
        return Err(EvalError::BadConfig(format!(
            "model {}x{}, train {}x{} and test {}x{} must share index lists",
            model.num_users(),
            model.num_items(),
            train.num_users(),
            train.num_items(),
            test.num_users(),
            test.num_items()
        )));
    }
    let mut precision_sum = S::zero();
    let mut recall_sum = S::zero();
    let mut qualifying = 0usize;

    for u in 0..test.num_users() {
        let held_out = test.user_row(u);
        if held_out.is_empty() {
            continue;
        }
        let relevant: BTreeSet<usize> = held_out
            .iter()
            .filter(|&&(_, _, r)| r >= rule.threshold)
            .map(|&(_, i, _)| i)
            .collect();
        if relevant.is_empty() {
            continue;
        }
        let mut ranked: Vec<(usize, S)> = match candidates {
            CandidateMode::Test => held_out
                .iter()
                .map(|&(_, i, _)| (i, model.predict(u, i).expect("aligned indices")))
                .collect(),
            CandidateMode::AllUnrated => {
                let mut in_train = vec![false; train.num_items()];
                for &(_, i, _) in train.user_row(u) {
                    in_train[i] = true;
                }
                (0..train.num_items())
                    .filter(|&i| !in_train[i])
                    .map(|i| (i, model.predict(u, i).expect("aligned indices")))
                    .collect()
            }
        };
        ranked.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .expect("finite predictions")
                .then(a.0.cmp(&b.0))
        });
        let taken = k.min(ranked.len());
        let hits = ranked[..taken]
            .iter()
            .filter(|&&(i, _)| relevant.contains(&i))
            .count();
        precision_sum += S::from_config(hits as f64) / S::from_config(taken as f64);
        recall_sum += S::from_config(hits as f64) / S::from_config(relevant.len() as f64);
        qualifying += 1;
    }

    if qualifying == 0 {
        return Err(EvalError::UndefinedMetric(
            "no user has a relevant held-out item".into(),
        ));
    }
    let count = S::from_config(qualifying as f64);
    let precision = precision_sum / count;
    let recall = recall_sum / count;
    let f1 = if precision + recall == S::zero() {
        S::zero()
    } else {
        S::from_config(2.0) * precision * recall / (precision + recall)
    };
    Ok((precision, recall, f1))
}

/// Basic objective or the similarity-regularized hybrid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ModelKind {
    Basic,
    Hybrid,
}

impl ModelKind {
    pub const ALL: [ModelKind; 2] = [ModelKind::Basic, ModelKind::Hybrid];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Basic => "basic",
            ModelKind::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One experiment cell's metrics with its configuration echo.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport<S> {
    pub selector: ProfileSelector,
    pub model: ModelKind,
    pub d: usize,
    pub lambda: S,
    pub alpha: S,
    pub rmse: S,
    pub mae: S,
    pub precision_at_k: S,
    pub recall_at_k: S,
    pub f1_at_k: S,
    pub k: usize,
    pub n_test_pairs: usize,
}

impl<S: Real> MetricReport<S> {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
            self.selector,
            self.model,
            self.d,
            self.lambda.to_report(),
            self.alpha.to_report(),
            self.rmse.to_report(),
            self.mae.to_report(),
            self.precision_at_k.to_report(),
            self.recall_at_k.to_report(),
            self.f1_at_k.to_report(),
            self.n_test_pairs
        )
    }
}

pub const REPORT_CSV_HEADER: &str =
    "selector,model,d,lambda,alpha,rmse,mae,precision_at_k,recall_at_k,f1_at_k,n_test_pairs";

/// Serializes reports in canonical (selector, model) order.
pub fn report_csv<S: Real>(reports: &[MetricReport<S>]) -> String {
    let mut sorted: Vec<&MetricReport<S>> = reports.iter().collect();
    sorted.sort_by_key(|r| (r.selector, r.model));
    let mut out = String::from(REPORT_CSV_HEADER);
    out.push('\n');
    for report in sorted {
        out.push_str(&report.csv_row());
        out.push('\n');
    }
    out
}

/// Everything the experiment grid needs beyond the dataset and weights.
#[derive(Debug, Clone)]
pub struct GridConfig<S> {
    pub hp: Hyperparams<S>,
    pub split: SplitSpec,
    pub rule: RelevanceRule<S>,
    pub norm: NormalizationSpec<S>,
    pub sim_top_k: usize,
    pub sim_threshold: f64,
    pub sim_diagonal: bool,
    pub k: usize,
    pub selectors: Vec<ProfileSelector>,
    pub candidates: CandidateMode,
    /// Clamp predictions to the rating bounds for RMSE/MAE (ranking
    /// always uses raw scores).
    pub clamp: bool,
    pub stop_words: Option<BTreeSet<String>>,
}

impl<S: Real> Default for GridConfig<S> {
    fn default() -> Self {
        let norm = NormalizationSpec::default();
        GridConfig {
            hp: Hyperparams::default(),
            split: SplitSpec::default(),
            rule: RelevanceRule::midpoint(&norm),
            norm,
            sim_top_k: 50,
            sim_threshold: 0.01,
            sim_diagonal: true,
            k: 10,
            selectors: ProfileSelector::ALL.to_vec(),
            candidates: CandidateMode::Test,
            clamp: true,
            stop_words: None,
        }
    }
}

fn cell_err(selector: ProfileSelector, model: &str, source: impl Into<Error>) -> EvalError {
    EvalError::Cell {
        selector: selector.as_str().to_string(),
        model: model.to_string(),
        source: Box::new(source.into()),
    }
}

struct CellScores<S> {
    rmse: S,
    mae: S,
    precision: S,
    recall: S,
    f1: S,
}

/// Scores one trained model against held-out ratings.
fn score_cell<S: Real>(
    model: &FactorModel<S>,
    train_mx: &RatingMatrix<S>,
    test_mx: &RatingMatrix<S>,
    cfg: &GridConfig<S>,
) -> Result<CellScores<S>, Error> {
    let mut pairs: Vec<(S, S)> = Vec::with_capacity(test_mx.len());
    for &(u, i, truth) in test_mx.entries() {
        let mut predicted = model.predict(u, i)?;
        if cfg.clamp {
            predicted = predicted
                .max(cfg.norm.rating_min)
                .min(cfg.norm.rating_max);
        }
        pairs.push((truth, predicted));
    }
    let (rmse, mae) = rmse_mae(&pairs)?;
    let (precision, recall, f1) =
        topk_f1(model, train_mx, test_mx, cfg.k, &cfg.rule, cfg.candidates)?;
    Ok(CellScores {
        rmse,
        mae,
        precision,
        recall,
        f1,
    })
}

/// Runs the selector x model grid: build the rating matrix per selector,
/// split once, train both models on the same split, and score each. The
/// similarity matrix is built once from the full post corpus and
/// restricted to each cell's surviving items.
pub fn run_experiment_grid<S: Real>(
    dataset: &Dataset,
    weights: &WeightTable,
    cfg: &GridConfig<S>,
) -> Result<Vec<MetricReport<S>>, EvalError> {
    cfg.split.validate()?;
    if cfg.k == 0 {
        return Err(EvalError::BadConfig("k must be at least 1".into()));
    }
    let hybrid_on = cfg.hp.alpha > S::zero();
    let sim_full: Option<SimilarityMatrix<S>> = if hybrid_on {
        let (_, profiles) = build_tfidf::<S>(dataset.posts(), cfg.stop_words.as_ref());
        Some(
            build_similarity(&profiles, cfg.sim_top_k, cfg.sim_threshold, cfg.sim_diagonal)
                .map_err(|e| EvalError::BadConfig(format!("similarity build failed: {e}")))?,
        )
    } else {
        None
    };

    let mut reports = Vec::new();
    for selector in ProfileSelector::ALL {
        if !cfg.selectors.contains(&selector) {
            continue;
        }
        let matrix = build_rating_matrix(dataset, weights, selector, &cfg.norm)
            .map_err(|e| cell_err(selector, "*", e))?;
        let (train_mx, test_mx) = match split(&matrix, &cfg.split) {
            Ok(pair) => pair,
            Err(e) => return Err(cell_err(selector, "*", e)),
        };
        let sim_cell = sim_full.as_ref().map(|s| s.restrict(matrix.items()));

        for model_kind in ModelKind::ALL {
            let mut hp = cfg.hp.clone();
            if model_kind == ModelKind::Basic {
                hp.alpha = S::zero();
            }
            let sim_arg = if model_kind == ModelKind::Hybrid {
                sim_cell.as_ref()
            } else {
                None
            };
            let (model, _report) = train(&train_mx, sim_arg, &hp)
                .map_err(|e| cell_err(selector, model_kind.as_str(), e))?;
            let scores = score_cell(&model, &train_mx, &test_mx, cfg)
                .map_err(|e| cell_err(selector, model_kind.as_str(), e))?;
            reports.push(MetricReport {
                selector,
                model: model_kind,
                d: hp.d,
                lambda: hp.lambda,
                alpha: hp.alpha,
                rmse: scores.rmse,
                mae: scores.mae,
                precision_at_k: scores.precision,
                recall_at_k: scores.recall,
                f1_at_k: scores.f1,
                k: cfg.k,
                n_test_pairs: test_mx.len(),
            });
        }
    }
    reports.sort_by_key(|r| (r.selector, r.model));
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix_with_rows(rows: &[(usize, usize, f64)], m: usize, n: usize) -> RatingMatrix<f64> {
        RatingMatrix::from_parts(
            (0..m).map(|u| format!("u{u}")).collect(),
            (0..n).map(|i| format!("i{i}")).collect(),
            rows.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn split_partitions_per_user() {
        let rows: Vec<(usize, usize, f64)> = (0..10).map(|i| (0, i, i as f64 + 1.0)).collect();
        let matrix = matrix_with_rows(&rows, 1, 10);
        let spec = SplitSpec {
            test_fraction: 0.2,
            seed: 3,
        };
        let (train_mx, test_mx) = split(&matrix, &spec).unwrap();
        assert_eq!(test_mx.len(), 2);
        assert_eq!(train_mx.len(), 8);
        let mut all: Vec<(usize, usize, f64)> = train_mx
            .entries()
            .iter()
            .chain(test_mx.entries())
            .copied()
            .collect();
        all.sort_by_key(|&(u, i, _)| (u, i));
        assert_eq!(all, matrix.entries());
    }

    #[test]
    fn single_rating_user_stays_in_train() {
        let matrix = matrix_with_rows(&[(0, 0, 2.0)], 1, 1);
        let (train_mx, test_mx) = split(&matrix, &SplitSpec::default()).unwrap();
        assert_eq!(train_mx.len(), 1);
        assert!(test_mx.is_empty());
    }

    #[test]
    fn split_is_deterministic_in_seed() {
        let rows: Vec<(usize, usize, f64)> = (0..3)
            .flat_map(|u| (0..7).map(move |i| (u, i, (u * 7 + i) as f64)))
            .collect();
        let matrix = matrix_with_rows(&rows, 3, 7);
        let spec = SplitSpec {
            test_fraction: 0.3,
            seed: 11,
        };
        let (tr1, te1) = split(&matrix, &spec).unwrap();
        let (tr2, te2) = split(&matrix, &spec).unwrap();
        assert_eq!(tr1, tr2);
        assert_eq!(te1, te2);
        let different = SplitSpec {
            test_fraction: 0.3,
            seed: 12,
        };
        let (_, te3) = split(&matrix, &different).unwrap();
        assert_ne!(te1, te3);
    }

    #[test]
    fn rmse_mae_hand_cases() {
        let (rmse, mae) = rmse_mae(&[(1.0, 1.0), (2.0, 2.0)]).unwrap();
        assert_eq!((rmse, mae), (0.0, 0.0));
        let (rmse, mae) = rmse_mae(&[(2.0, 1.0), (5.0, 3.0)]).unwrap();
        assert!((rmse - (2.5f64).sqrt()).abs() < 1e-15);
        assert!((mae - 1.5).abs() < 1e-15);
        assert!(mae <= rmse);
        assert!(rmse_mae::<f64>(&[]).is_err());
    }

    fn ranked_model(preds: &[f64]) -> FactorModel<f64> {
        // d = 1, P = [1], Q = predictions: predict(0, i) = preds[i].
        FactorModel::from_parts(
            vec!["u0".into()],
            (0..preds.len()).map(|i| format!("i{i}")).collect(),
            vec![1.0],
            preds.to_vec(),
            Hyperparams {
                d: 1,
                ..Hyperparams::default()
            },
            vec![vec![]],
        )
        .unwrap()
    }

    #[test]
    fn topk_f1_hand_case() {
        // Test items a..d = indices 0..3; relevant = {1 (b), 2 (c), 3 (d)};
        // predictions rank b then a first.
        let test_mx = matrix_with_rows(&[(0, 0, 1.0), (0, 1, 5.0), (0, 2, 4.0), (0, 3, 4.0)], 1, 4);
        let train_mx = matrix_with_rows(&[], 1, 4);
        let model = ranked_model(&[3.0, 4.0, 1.0, 0.5]);
        let rule = RelevanceRule { threshold: 2.5 };
        let (p, r, f1) = topk_f1(&model, &train_mx, &test_mx, 2, &rule, CandidateMode::Test).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        assert!((r - 1.0 / 3.0).abs() < 1e-12);
        assert!((f1 - 0.4).abs() < 1e-12);
    }

    #[test]
    fn topk_f1_perfect_when_everything_relevant_and_k_large() {
        let test_mx = matrix_with_rows(&[(0, 0, 5.0), (0, 1, 5.0)], 1, 2);
        let train_mx = matrix_with_rows(&[], 1, 2);
        let model = ranked_model(&[1.0, 2.0]);
        let rule = RelevanceRule { threshold: 2.5 };
        let (p, r, f1) = topk_f1(&model, &train_mx, &test_mx, 5, &rule, CandidateMode::Test).unwrap();
        assert_eq!((p, r, f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn topk_f1_without_relevant_items_is_undefined() {
        let test_mx = matrix_with_rows(&[(0, 0, 1.0)], 1, 1);
        let train_mx = matrix_with_rows(&[], 1, 1);
        let model = ranked_model(&[1.0]);
        let rule = RelevanceRule { threshold: 2.5 };
        assert!(matches!(
            topk_f1(&model, &train_mx, &test_mx, 2, &rule, CandidateMode::Test),
            Err(EvalError::UndefinedMetric(_))
        ));
    }

    #[test]
    fn topk_f1_depends_only_on_ranking() {
        let test_mx = matrix_with_rows(
            &[(0, 0, 5.0), (0, 1, 1.0), (0, 2, 4.0), (0, 3, 0.5)],
            1,
            4,
        );
        let train_mx = matrix_with_rows(&[], 1, 4);
        let rule = RelevanceRule { threshold: 2.5 };
        let base = ranked_model(&[0.9, 0.1, 0.5, 0.2]);
        // exp is strictly increasing; the ranking is unchanged.
        let transformed = ranked_model(&[0.9f64.exp(), 0.1f64.exp(), 0.5f64.exp(), 0.2f64.exp()]);
        let a = topk_f1(&base, &train_mx, &test_mx, 2, &rule, CandidateMode::Test).unwrap();
        let b = topk_f1(&transformed, &train_mx, &test_mx, 2, &rule, CandidateMode::Test).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tie_break_is_by_ascending_item_index() {
        let test_mx = matrix_with_rows(&[(0, 0, 1.0), (0, 1, 5.0), (0, 2, 5.0)], 1, 3);
        let train_mx = matrix_with_rows(&[], 1, 3);
        // All predictions equal: top-1 must pick item 0 (not relevant).
        let model = ranked_model(&[1.0, 1.0, 1.0]);
        let rule = RelevanceRule { threshold: 2.5 };
        let (p, _, _) = topk_f1(&model, &train_mx, &test_mx, 1, &rule, CandidateMode::Test).unwrap();
        assert_eq!(p, 0.0);
    }
}
