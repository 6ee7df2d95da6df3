//! Latent-factor models trained by full-batch gradient descent.
//!
//! The objective is squared error over the known rating pairs plus a
//! Frobenius penalty on both factor matrices; with `alpha > 0` an item
//! similarity term is added that pulls each inner product `Q_j . Q_n`
//! toward the content similarity `S_jn`.
//!
//! Pair enumeration convention for the similarity term: every stored
//! off-diagonal entry counts in both orders (so it contributes
//! `2 * (S_jn - Q_j.Q_n)^2` to the sum inside `alpha/2 * ...`), and a
//! stored diagonal entry counts once. In exact mode the sum instead runs
//! over the full item x item grid with unstored pairs read as 0. The
//! finite-difference tests pin the gradients to this convention.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::TrainError;
use crate::num::Real;
use crate::profile::RatingMatrix;
use crate::similarity::SimilarityMatrix;

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams<S> {
    /// Latent rank.
    pub d: usize,
    /// Frobenius regularization strength.
    pub lambda: S,
    /// Similarity regularization strength; 0 disables the term.
    pub alpha: S,
    pub learning_rate: S,
    pub epochs: usize,
    pub seed: u64,
    /// Factors initialize uniformly in [-init_scale, init_scale].
    pub init_scale: S,
    /// Extra zero-similarity pairs sampled per item, fixed for the run;
    /// keeps a push-apart signal for items the sparse matrix never pairs.
    pub zero_sample_per_item: usize,
    /// Sum the similarity term over the full item grid instead of the
    /// stored pairs. For small instances and verification.
    pub exact_sim_pairs: bool,
}

impl<S: Real> Default for Hyperparams<S> {
    fn default() -> Self {
        Hyperparams {
            d: 16,
            lambda: S::from_config(0.05),
            alpha: S::from_config(0.1),
            learning_rate: S::from_config(0.005),
            epochs: 200,
            seed: 42,
            init_scale: S::from_config(0.1),
            zero_sample_per_item: 10,
            exact_sim_pairs: false,
        }
    }
}

impl<S: Real> Hyperparams<S> {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.d == 0 {
            return Err(TrainError::BadHyperparams("d must be at least 1".into()));
        }
        if !self.lambda.is_finite() || self.lambda < S::zero() {
            return Err(TrainError::BadHyperparams(format!(
                "lambda must be finite and nonnegative, got {}",
                self.lambda
            )));
        }
        if !self.alpha.is_finite() || self.alpha < S::zero() {
            return Err(TrainError::BadHyperparams(format!(
                "alpha must be finite and nonnegative, got {}",
                self.alpha
            )));
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= S::zero() {
            return Err(TrainError::BadHyperparams(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(TrainError::BadHyperparams("epochs must be at least 1".into()));
        }
        if !self.init_scale.is_finite() || self.init_scale <= S::zero() {
            return Err(TrainError::BadHyperparams(format!(
                "init_scale must be positive, got {}",
                self.init_scale
            )));
        }
        Ok(())
    }
}

/// User and item latent factors plus the hyperparameters and index maps
/// they were trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel<S> {
    users: Vec<String>,
    items: Vec<String>,
    p: Vec<S>,
    q: Vec<S>,
    hp: Hyperparams<S>,
    /// Per-user item indices rated in the training matrix.
    rated: Vec<Vec<u32>>,
}

impl<S: Real> FactorModel<S> {
    /// Assembles a model from raw parts (row-major factors).
    pub fn from_parts(
        users: Vec<String>,
        items: Vec<String>,
        p: Vec<S>,
        q: Vec<S>,
        hp: Hyperparams<S>,
        rated: Vec<Vec<u32>>,
    ) -> Result<Self, TrainError> {
        hp.validate()?;
        if p.len() != users.len() * hp.d || q.len() != items.len() * hp.d {
            return Err(TrainError::ShapeMismatch(format!(
                "factors {}x{} and {}x{} do not match {} users x {} items at d={}",
                p.len() / hp.d.max(1),
                hp.d,
                q.len() / hp.d.max(1),
                hp.d,
                users.len(),
                items.len(),
                hp.d
            )));
        }
        if p.iter().chain(q.iter()).any(|v| !v.is_finite()) {
            return Err(TrainError::ShapeMismatch("non-finite factor entry".into()));
        }
        if rated.len() != users.len() {
            return Err(TrainError::ShapeMismatch(format!(
                "rated-list count {} does not match {} users",
                rated.len(),
                users.len()
            )));
        }
        Ok(FactorModel {
            users,
            items,
            p,
            q,
            hp,
            rated,
        })
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn users(&self) -> &[String] {
        &self.users
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn hyperparams(&self) -> &Hyperparams<S> {
        &self.hp
    }

    pub fn user_factors(&self) -> &[S] {
        &self.p
    }

    pub fn item_factors(&self) -> &[S] {
        &self.q
    }

    pub fn user_row(&self, u: usize) -> &[S] {
        &self.p[u * self.hp.d..(u + 1) * self.hp.d]
    }

    pub fn item_row(&self, i: usize) -> &[S] {
        &self.q[i * self.hp.d..(i + 1) * self.hp.d]
    }

    pub fn user_position(&self, user_id: &str) -> Option<usize> {
        self.users.iter().position(|u| u == user_id)
    }

    /// Item indices the user had ratings for at training time.
    pub fn rated_items(&self, u: usize) -> &[u32] {
        &self.rated[u]
    }

    /// Predicted rating: the inner product of the two factor rows.
    /// Unclamped; evaluation decides whether to clamp.
    pub fn predict(&self, u: usize, i: usize) -> Result<S, TrainError> {
        if u >= self.users.len() {
            return Err(TrainError::IndexOutOfRange {
                what: "user",
                index: u,
                len: self.users.len(),
            });
        }
        if i >= self.items.len() {
            return Err(TrainError::IndexOutOfRange {
                what: "item",
                index: i,
                len: self.items.len(),
            });
        }
        Ok(dot(self.user_row(u), self.item_row(i)))
    }

    /// Top-k items the user has no training rating for, ranked by
    /// predicted score descending, ties toward the lower item index.
    pub fn recommend(&self, u: usize, k: usize) -> Result<Vec<(usize, S)>, TrainError> {
        if u >= self.users.len() {
            return Err(TrainError::IndexOutOfRange {
                what: "user",
                index: u,
                len: self.users.len(),
            });
        }
        let mut seen = vec![false; self.items.len()];
        for &i in &self.rated[u] {
            seen[i as usize] = true;
        }
        let mut scored: Vec<(usize, S)> = (0..self.items.len())
            .filter(|&i| !seen[i])
            .map(|i| (i, dot(self.user_row(u), self.item_row(i))))
            .collect();
        scored.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .expect("finite predictions")
                .then(a.0.cmp(&b.0))
        });
        scored.truncate(k);
        Ok(scored)
    }
}

fn dot<S: Real>(a: &[S], b: &[S]) -> S {
    let mut acc = S::zero();
    for k in 0..a.len() {
        acc += a[k] * b[k];
    }
    acc
}

/// The three objective terms, in evaluation order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms<S> {
    /// Half the sum of squared residuals over the known pairs.
    pub data: S,
    /// `lambda/2 * (||P||_F^2 + ||Q||_F^2)`.
    pub frobenius: S,
    /// `alpha/2 *` the similarity-pair sum; 0 when alpha is 0.
    pub similarity: S,
}

impl<S: Real> LossTerms<S> {
    pub fn total(&self) -> S {
        self.data + self.frobenius + self.similarity
    }
}

enum SimPairs<'a, S> {
    None,
    /// Canonical `(j, n, s)` entries with `j <= n`; off-diagonal entries
    /// count in both orders.
    Sparse(&'a [(usize, usize, S)]),
    /// Full grid; unstored pairs read as 0.
    Exact(&'a SimilarityMatrix<S>),
}

fn check_ratings_aligned<S: Real>(
    model: &FactorModel<S>,
    ratings: &RatingMatrix<S>,
) -> Result<(), TrainError> {
    if model.users() != ratings.users() || model.items() != ratings.items() {
        return Err(TrainError::ShapeMismatch(format!(
            "model is {}x{}, ratings are {}x{} (or ids differ)",
            model.num_users(),
            model.num_items(),
            ratings.num_users(),
            ratings.num_items()
        )));
    }
    Ok(())
}

fn check_sim_aligned<S: Real>(
    items: &[String],
    sim: &SimilarityMatrix<S>,
) -> Result<(), TrainError> {
    if sim.items() != items {
        return Err(TrainError::Misaligned(format!(
            "{} similarity items vs {} rating items",
            sim.num_items(),
            items.len()
        )));
    }
    Ok(())
}

fn sim_pairs_for<'a, S: Real>(
    hp: &Hyperparams<S>,
    sim: Option<&'a SimilarityMatrix<S>>,
) -> Result<SimPairs<'a, S>, TrainError> {
    if hp.alpha == S::zero() {
        return Ok(SimPairs::None);
    }
    let sim = sim.ok_or(TrainError::MissingSimilarity)?;
    if hp.exact_sim_pairs {
        Ok(SimPairs::Exact(sim))
    } else {
        Ok(SimPairs::Sparse(sim.entries()))
    }
}

/// Objective value split into its terms.
pub fn loss_terms<S: Real>(
    model: &FactorModel<S>,
    ratings: &RatingMatrix<S>,
    sim: Option<&SimilarityMatrix<S>>,
) -> Result<LossTerms<S>, TrainError> {
    check_ratings_aligned(model, ratings)?;
    if model.hp.alpha > S::zero() {
        if let Some(sim) = sim {
            check_sim_aligned(model.items(), sim)?;
        }
    }
    let pairs = sim_pairs_for(&model.hp, sim)?;
    Ok(loss_terms_raw(
        &model.p,
        &model.q,
        model.hp.d,
        ratings,
        model.hp.lambda,
        model.hp.alpha,
        &pairs,
    ))
}

/// Objective value. With `alpha == 0` this is exactly the data term plus
/// the Frobenius penalty.
pub fn loss<S: Real>(
    model: &FactorModel<S>,
    ratings: &RatingMatrix<S>,
    sim: Option<&SimilarityMatrix<S>>,
) -> Result<S, TrainError> {
    loss_terms(model, ratings, sim).map(|t| t.total())
}

fn loss_terms_raw<S: Real>(
    p: &[S],
    q: &[S],
    d: usize,
    ratings: &RatingMatrix<S>,
    lambda: S,
    alpha: S,
    pairs: &SimPairs<'_, S>,
) -> LossTerms<S> {
    let half = S::from_config(0.5);

    let mut sq_err = S::zero();
    for &(u, i, r) in ratings.entries() {
        let e = r - dot(&p[u * d..(u + 1) * d], &q[i * d..(i + 1) * d]);
        sq_err += e * e;
    }
    let data = half * sq_err;

    let mut frob = S::zero();
    for &v in p {
        frob += v * v;
    }
    for &v in q {
        frob += v * v;
    }
    let frobenius = half * lambda * frob;

    let similarity = half * alpha * sim_pair_sum(q, d, pairs);

    LossTerms {
        data,
        frobenius,
        similarity,
    }
}

/// Sum of squared similarity residuals under the pair convention:
/// stored off-diagonal pairs weighted twice, diagonal once; exact mode
/// runs the full grid.
fn sim_pair_sum<S: Real>(q: &[S], d: usize, pairs: &SimPairs<'_, S>) -> S {
    let two = S::from_config(2.0);
    let mut acc = S::zero();
    match pairs {
        SimPairs::None => {}
        SimPairs::Sparse(entries) => {
            for &(j, n, s) in *entries {
                let e = s - dot(&q[j * d..(j + 1) * d], &q[n * d..(n + 1) * d]);
                if j == n {
                    acc += e * e;
                } else {
                    acc += two * e * e;
                }
            }
        }
        SimPairs::Exact(sim) => {
            let n_items = q.len() / d;
            for j in 0..n_items {
                for n in j..n_items {
                    let e = sim.get(j, n) - dot(&q[j * d..(j + 1) * d], &q[n * d..(n + 1) * d]);
                    if j == n {
                        acc += e * e;
                    } else {
                        acc += two * e * e;
                    }
                }
            }
        }
    }
    acc
}

/// Analytic gradients of the objective with respect to P and Q,
/// row-major, matching the loss convention exactly.
pub fn gradients<S: Real>(
    model: &FactorModel<S>,
    ratings: &RatingMatrix<S>,
    sim: Option<&SimilarityMatrix<S>>,
) -> Result<(Vec<S>, Vec<S>), TrainError> {
    check_ratings_aligned(model, ratings)?;
    if model.hp.alpha > S::zero() {
        if let Some(sim) = sim {
            check_sim_aligned(model.items(), sim)?;
        }
    }
    let pairs = sim_pairs_for(&model.hp, sim)?;
    Ok(gradients_raw(
        &model.p,
        &model.q,
        model.hp.d,
        ratings,
        model.hp.lambda,
        model.hp.alpha,
        &pairs,
    ))
}

fn gradients_raw<S: Real>(
    p: &[S],
    q: &[S],
    d: usize,
    ratings: &RatingMatrix<S>,
    lambda: S,
    alpha: S,
    pairs: &SimPairs<'_, S>,
) -> (Vec<S>, Vec<S>) {
    let mut dp = vec![S::zero(); p.len()];
    let mut dq = vec![S::zero(); q.len()];

    for &(u, i, r) in ratings.entries() {
        let pu = &p[u * d..(u + 1) * d];
        let qi = &q[i * d..(i + 1) * d];
        let e = r - dot(pu, qi);
        for k in 0..d {
            dp[u * d + k] -= e * qi[k];
            dq[i * d + k] -= e * pu[k];
        }
    }
    for (dst, &src) in dp.iter_mut().zip(p.iter()) {
        *dst += lambda * src;
    }
    for (dst, &src) in dq.iter_mut().zip(q.iter()) {
        *dst += lambda * src;
    }

    let two_alpha = S::from_config(2.0) * alpha;
    let add_pair = |j: usize, n: usize, s: S, dq: &mut [S]| {
        let e = s - dot(&q[j * d..(j + 1) * d], &q[n * d..(n + 1) * d]);
        if j == n {
            for k in 0..d {
                dq[j * d + k] -= two_alpha * e * q[j * d + k];
            }
        } else {
            for k in 0..d {
                dq[j * d + k] -= two_alpha * e * q[n * d + k];
                dq[n * d + k] -= two_alpha * e * q[j * d + k];
            }
        }
    };
    match pairs {
        SimPairs::None => {}
        SimPairs::Sparse(entries) => {
            for &(j, n, s) in *entries {
                add_pair(j, n, s, &mut dq);
            }
        }
        SimPairs::Exact(sim) => {
            let n_items = q.len() / d;
            for j in 0..n_items {
                for n in j..n_items {
                    add_pair(j, n, sim.get(j, n), &mut dq);
                }
            }
        }
    }

    (dp, dq)
}

/// Per-epoch record of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport<S> {
    /// Objective values: index 0 is the initial loss, one entry per
    /// accepted epoch after that. Non-increasing by construction.
    pub losses: Vec<S>,
    pub final_loss: S,
    pub wall_seconds: f64,
    /// "L" for the plain objective, "L^" when the similarity term is on.
    pub objective: &'static str,
    /// True when an epoch could not decrease the loss within the
    /// halving budget and training stopped before `epochs`.
    pub early_stopped: bool,
}

impl<S: Real> TrainingReport<S> {
    /// `epoch,<objective>` CSV, one row per recorded loss.
    pub fn to_loss_csv(&self) -> String {
        let mut out = format!("epoch,{}\n", self.objective);
        for (epoch, loss) in self.losses.iter().enumerate() {
            out.push_str(&format!("{epoch},{loss}\n"));
        }
        out
    }
}

const MAX_HALVINGS: usize = 20;

/// Trains a model by full-batch gradient descent with step halving:
/// whenever an epoch would increase the loss, the step is halved and the
/// epoch retried, up to 20 times; if the loss still cannot decrease the
/// run stops early (divergence error if it is not even finite). The
/// result is a pure function of `(ratings, sim, hp)`.
pub fn train<S: Real>(
    ratings: &RatingMatrix<S>,
    sim: Option<&SimilarityMatrix<S>>,
    hp: &Hyperparams<S>,
) -> Result<(FactorModel<S>, TrainingReport<S>), TrainError> {
    hp.validate()?;
    if ratings.is_empty() {
        return Err(TrainError::EmptyRatings);
    }
    let use_sim = hp.alpha > S::zero();
    if use_sim {
        let sim = sim.ok_or(TrainError::MissingSimilarity)?;
        check_sim_aligned(ratings.items(), sim)?;
    }

    let started = Instant::now();
    let m = ratings.num_users();
    let n = ratings.num_items();
    let d = hp.d;
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let scale = hp.init_scale.to_report();
    let mut p: Vec<S> = (0..m * d)
        .map(|_| S::from_config(rng.gen_range(-scale..scale)))
        .collect();
    let mut q: Vec<S> = (0..n * d)
        .map(|_| S::from_config(rng.gen_range(-scale..scale)))
        .collect();

    // Fix the active similarity pairs for the whole run: the stored
    // entries plus a seeded sample of zero pairs. A fixed set keeps the
    // recorded loss sequence comparable across epochs.
    let augmented: Option<Vec<(usize, usize, S)>> = if use_sim && !hp.exact_sim_pairs {
        let sim = sim.expect("checked above");
        let mut pairs: BTreeMap<(usize, usize), S> = sim
            .entries()
            .iter()
            .map(|&(j, k, s)| ((j, k), s))
            .collect();
        if hp.zero_sample_per_item > 0 && n >= 2 {
            for j in 0..n {
                for _ in 0..hp.zero_sample_per_item {
                    let mut other = rng.gen_range(0..n - 1);
                    if other >= j {
                        other += 1;
                    }
                    pairs
                        .entry((j.min(other), j.max(other)))
                        .or_insert_with(S::zero);
                }
            }
        }
        Some(pairs.into_iter().map(|((j, k), s)| (j, k, s)).collect())
    } else {
        None
    };
    let pairs = if !use_sim {
        SimPairs::None
    } else if hp.exact_sim_pairs {
        SimPairs::Exact(sim.expect("checked above"))
    } else {
        SimPairs::Sparse(augmented.as_deref().expect("built above"))
    };

    let eval =
        |p: &[S], q: &[S]| loss_terms_raw(p, q, d, ratings, hp.lambda, hp.alpha, &pairs).total();

    let mut current = eval(&p, &q);
    if !current.is_finite() {
        return Err(TrainError::Diverged {
            epoch: 0,
            halvings: 0,
        });
    }
    let mut losses = vec![current];
    let mut lr = hp.learning_rate;
    let mut early_stopped = false;

    let mut p_next = vec![S::zero(); p.len()];
    let mut q_next = vec![S::zero(); q.len()];
    for epoch in 1..=hp.epochs {
        let (dp, dq) = gradients_raw(&p, &q, d, ratings, hp.lambda, hp.alpha, &pairs);
        let mut halvings = 0;
        loop {
            for (dst, (&cur, &g)) in p_next.iter_mut().zip(p.iter().zip(dp.iter())) {
                *dst = cur - lr * g;
            }
            for (dst, (&cur, &g)) in q_next.iter_mut().zip(q.iter().zip(dq.iter())) {
                *dst = cur - lr * g;
            }
            let candidate = eval(&p_next, &q_next);
            if candidate.is_finite() && candidate <= current {
                std::mem::swap(&mut p, &mut p_next);
                std::mem::swap(&mut q, &mut q_next);
                current = candidate;
                losses.push(current);
                break;
            }
            if halvings == MAX_HALVINGS {
                if !candidate.is_finite() {
                    return Err(TrainError::Diverged { epoch, halvings });
                }
                early_stopped = true;
                break;
            }
            halvings += 1;
            lr /= S::from_config(2.0);
        }
        if early_stopped {
            break;
        }
    }

    let rated: Vec<Vec<u32>> = (0..m)
        .map(|u| ratings.user_row(u).iter().map(|&(_, i, _)| i as u32).collect())
        .collect();
    let model = FactorModel {
        users: ratings.users().to_vec(),
        items: ratings.items().to_vec(),
        p,
        q,
        hp: hp.clone(),
        rated,
    };
    let report = TrainingReport {
        final_loss: *losses.last().expect("at least the initial loss"),
        losses,
        wall_seconds: started.elapsed().as_secs_f64(),
        objective: if use_sim { "L^" } else { "L" },
        early_stopped,
    };
    Ok((model, report))
}

/// RMSE over the training entries themselves.
pub fn train_rmse<S: Real>(model: &FactorModel<S>, ratings: &RatingMatrix<S>) -> Result<S, TrainError> {
    check_ratings_aligned(model, ratings)?;
    if ratings.is_empty() {
        return Err(TrainError::EmptyRatings);
    }
    let mut acc = S::zero();
    for &(u, i, r) in ratings.entries() {
        let e = r - dot(model.user_row(u), model.item_row(i));
        acc += e * e;
    }
    Ok((acc / S::from_config(ratings.len() as f64)).sqrt())
}

// ---------------------------------------------------------------------
// Model persistence: a self-describing JSON container, version-guarded,
// with exact float round-trip via the shortest-representation encoder.

const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct HyperparamsFile {
    d: usize,
    lambda: f64,
    alpha: f64,
    learning_rate: f64,
    epochs: usize,
    seed: u64,
    init_scale: f64,
    zero_sample_per_item: usize,
    exact_sim_pairs: bool,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    num_users: usize,
    num_items: usize,
    hyperparams: HyperparamsFile,
    users: Vec<String>,
    items: Vec<String>,
    /// Row-major m x d.
    p: Vec<f64>,
    /// Row-major n x d.
    q: Vec<f64>,
    rated: Vec<Vec<u32>>,
    /// Resolved run configuration, for provenance.
    config: BTreeMap<String, String>,
}

/// Writes the model with its resolved configuration.
pub fn save_model<S: Real>(
    model: &FactorModel<S>,
    path: impl AsRef<Path>,
    config: &BTreeMap<String, String>,
) -> Result<(), TrainError> {
    let hp = &model.hp;
    let file = ModelFile {
        version: MODEL_FORMAT_VERSION,
        num_users: model.num_users(),
        num_items: model.num_items(),
        hyperparams: HyperparamsFile {
            d: hp.d,
            lambda: hp.lambda.to_report(),
            alpha: hp.alpha.to_report(),
            learning_rate: hp.learning_rate.to_report(),
            epochs: hp.epochs,
            seed: hp.seed,
            init_scale: hp.init_scale.to_report(),
            zero_sample_per_item: hp.zero_sample_per_item,
            exact_sim_pairs: hp.exact_sim_pairs,
        },
        users: model.users.clone(),
        items: model.items.clone(),
        p: model.p.iter().map(|v| v.to_report()).collect(),
        q: model.q.iter().map(|v| v.to_report()).collect(),
        rated: model.rated.clone(),
        config: config.clone(),
    };
    let path = path.as_ref();
    let out = File::create(path)
        .map_err(|e| TrainError::ModelFile(format!("{}: {e}", path.display())))?;
    let mut out = BufWriter::new(out);
    serde_json::to_writer(&mut out, &file)
        .map_err(|e| TrainError::ModelFile(format!("{}: {e}", path.display())))?;
    out.write_all(b"\n")
        .and_then(|_| out.flush())
        .map_err(|e| TrainError::ModelFile(format!("{}: {e}", path.display())))?;
    Ok(())
}

/// Loads a model saved by [`save_model`], returning it with the stored
/// configuration echo.
pub fn load_model<S: Real>(
    path: impl AsRef<Path>,
) -> Result<(FactorModel<S>, BTreeMap<String, String>), TrainError> {
    let path = path.as_ref();
    let file = File::open(path)
        .map_err(|e| TrainError::ModelFile(format!("{}: {e}", path.display())))?;
    let parsed: ModelFile = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| TrainError::ModelFile(format!("{}: {e}", path.display())))?;
    if parsed.version != MODEL_FORMAT_VERSION {
        return Err(TrainError::ModelFile(format!(
            "{}: unsupported format version {} (expected {})",
            path.display(),
            parsed.version,
            MODEL_FORMAT_VERSION
        )));
    }
    if parsed.users.len() != parsed.num_users || parsed.items.len() != parsed.num_items {
        return Err(TrainError::ModelFile(format!(
            "{}: header counts do not match index lists",
            path.display()
        )));
    }
    let hp = Hyperparams {
        d: parsed.hyperparams.d,
        lambda: S::from_config(parsed.hyperparams.lambda),
        alpha: S::from_config(parsed.hyperparams.alpha),
        learning_rate: S::from_config(parsed.hyperparams.learning_rate),
        epochs: parsed.hyperparams.epochs,
        seed: parsed.hyperparams.seed,
        init_scale: S::from_config(parsed.hyperparams.init_scale),
        zero_sample_per_item: parsed.hyperparams.zero_sample_per_item,
        exact_sim_pairs: parsed.hyperparams.exact_sim_pairs,
    };
    let model = FactorModel::from_parts(
        parsed.users,
        parsed.items,
        parsed.p.into_iter().map(S::from_config).collect(),
        parsed.q.into_iter().map(S::from_config).collect(),
        hp,
        parsed.rated,
    )
    .map_err(|e| TrainError::ModelFile(format!("{}: {e}", path.display())))?;
    Ok((model, parsed.config))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hp1(lambda: f64, alpha: f64) -> Hyperparams<f64> {
        Hyperparams {
            d: 1,
            lambda,
            alpha,
            ..Hyperparams::default()
        }
    }

    fn one_by_one(lambda: f64, alpha: f64) -> (FactorModel<f64>, RatingMatrix<f64>) {
        let ratings = RatingMatrix::from_parts(
            vec!["u1".into()],
            vec!["i1".into()],
            vec![(0, 0, 5.0)],
        )
        .unwrap();
        let model = FactorModel::from_parts(
            vec!["u1".into()],
            vec!["i1".into()],
            vec![2.0],
            vec![3.0],
            hp1(lambda, alpha),
            vec![vec![0]],
        )
        .unwrap();
        (model, ratings)
    }

    #[test]
    fn predict_is_a_dot_product() {
        let model = FactorModel::from_parts(
            vec!["u1".into()],
            vec!["i1".into(), "i2".into()],
            vec![1.0, 2.0],
            vec![3.0, 4.0, -3.0, 0.0],
            Hyperparams {
                d: 2,
                ..Hyperparams::default()
            },
            vec![vec![]],
        )
        .unwrap();
        assert_eq!(model.predict(0, 0).unwrap(), 11.0);
        assert_eq!(model.predict(0, 1).unwrap(), -3.0);
        assert!(model.predict(0, 5).is_err());
        assert!(model.predict(3, 0).is_err());
    }

    #[test]
    fn zero_user_row_predicts_zero_everywhere() {
        let model = FactorModel::from_parts(
            vec!["u1".into()],
            vec!["i1".into(), "i2".into()],
            vec![0.0, 0.0],
            vec![3.0, 4.0, -1.0, 2.0],
            Hyperparams {
                d: 2,
                ..Hyperparams::default()
            },
            vec![vec![]],
        )
        .unwrap();
        assert_eq!(model.predict(0, 0).unwrap(), 0.0);
        assert_eq!(model.predict(0, 1).unwrap(), 0.0);
    }

    #[test]
    fn loss_matches_hand_evaluated_closed_form() {
        // 1x1x1: P = [2], Q = [3], R = 5, lambda = 0.1:
        // 0.5*(5-6)^2 + 0.05*(4+9) = 1.15
        let (model, ratings) = one_by_one(0.1, 0.0);
        let l = loss(&model, &ratings, None).unwrap();
        assert!((l - 1.15).abs() < 1e-12, "{l}");

        // Adding S_11 = 1 with alpha 0.2: + 0.1*(1-9)^2 = 6.4
        let (model, ratings) = one_by_one(0.1, 0.2);
        let sim =
            SimilarityMatrix::from_entries(vec!["i1".into()], vec![(0, 0, 1.0f64)]).unwrap();
        let l = loss(&model, &ratings, Some(&sim)).unwrap();
        assert!((l - 7.55).abs() < 1e-12, "{l}");
    }

    #[test]
    fn gradients_match_hand_differentiation() {
        let (model, ratings) = one_by_one(0.1, 0.0);
        let (dp, dq) = gradients(&model, &ratings, None).unwrap();
        assert!((dp[0] - 3.2).abs() < 1e-12, "{}", dp[0]);
        assert!((dq[0] - 2.3).abs() < 1e-12, "{}", dq[0]);
    }

    #[test]
    fn perfect_factorization_has_zero_loss_and_gradients() {
        let p = vec![1.0, 2.0, -1.0, 0.5];
        let q = vec![0.5, 1.0, 2.0, -1.0, 1.5, 0.0];
        let d = 2;
        let users = vec!["u1".into(), "u2".into()];
        let items = vec!["i1".into(), "i2".into(), "i3".into()];
        let mut entries = Vec::new();
        for u in 0..2 {
            for i in 0..3 {
                let r = p[u * d] * q[i * d] + p[u * d + 1] * q[i * d + 1];
                entries.push((u, i, r));
            }
        }
        let ratings = RatingMatrix::from_parts(users.clone(), items.clone(), entries).unwrap();
        let hp = Hyperparams {
            d,
            lambda: 0.0,
            alpha: 0.0,
            ..Hyperparams::default()
        };
        let model =
            FactorModel::from_parts(users, items, p, q, hp, vec![vec![], vec![]]).unwrap();
        assert_eq!(loss(&model, &ratings, None).unwrap(), 0.0);
        let (dp, dq) = gradients(&model, &ratings, None).unwrap();
        assert!(dp.iter().chain(dq.iter()).all(|&g| g == 0.0));
    }

    #[test]
    fn alpha_zero_ignores_similarity() {
        let ratings = RatingMatrix::from_parts(
            vec!["u1".into(), "u2".into()],
            vec!["i1".into(), "i2".into()],
            vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 4.0)],
        )
        .unwrap();
        let sim = SimilarityMatrix::from_entries(
            vec!["i1".into(), "i2".into()],
            vec![(0, 0, 1.0f64), (0, 1, 0.9), (1, 1, 1.0)],
        )
        .unwrap();
        let hp = Hyperparams {
            d: 2,
            alpha: 0.0,
            epochs: 5,
            ..Hyperparams::default()
        };
        let (with_sim, _) = train(&ratings, Some(&sim), &hp).unwrap();
        let (without_sim, _) = train(&ratings, None, &hp).unwrap();
        assert_eq!(with_sim, without_sim);
    }

    #[test]
    fn training_is_deterministic() {
        let ratings = RatingMatrix::from_parts(
            vec!["u1".into(), "u2".into()],
            vec!["i1".into(), "i2".into()],
            vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 4.0)],
        )
        .unwrap();
        let hp = Hyperparams {
            d: 2,
            epochs: 50,
            alpha: 0.0,
            ..Hyperparams::default()
        };
        let (a, ra) = train(&ratings, None, &hp).unwrap();
        let (b, rb) = train(&ratings, None, &hp).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra.losses, rb.losses);
    }

    #[test]
    fn loss_sequence_is_non_increasing() {
        let ratings = RatingMatrix::from_parts(
            vec!["u1".into(), "u2".into()],
            vec!["i1".into(), "i2".into()],
            vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 4.0)],
        )
        .unwrap();
        let hp = Hyperparams {
            d: 1,
            lambda: 0.0,
            alpha: 0.0,
            learning_rate: 0.4, // deliberately hot; halving has to kick in
            epochs: 120,
            ..Hyperparams::default()
        };
        let (_, report) = train(&ratings, None, &hp).unwrap();
        for w in report.losses.windows(2) {
            assert!(w[1] <= w[0], "loss increased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn missing_similarity_with_positive_alpha_is_an_error() {
        let ratings = RatingMatrix::from_parts(
            vec!["u1".into()],
            vec!["i1".into()],
            vec![(0, 0, 1.0)],
        )
        .unwrap();
        let hp = Hyperparams {
            d: 1,
            alpha: 0.5,
            ..Hyperparams::default()
        };
        assert!(matches!(
            train::<f64>(&ratings, None, &hp),
            Err(TrainError::MissingSimilarity)
        ));
    }

    #[test]
    fn model_file_round_trips_exactly() {
        let ratings = RatingMatrix::from_parts(
            vec!["u1".into(), "u2".into()],
            vec!["i1".into(), "i2".into(), "i3".into()],
            vec![(0, 0, 1.0), (0, 2, 3.5), (1, 1, 2.25)],
        )
        .unwrap();
        let hp = Hyperparams {
            d: 3,
            epochs: 20,
            alpha: 0.0,
            ..Hyperparams::default()
        };
        let (model, _) = train(&ratings, None, &hp).unwrap();
        let dir = std::env::temp_dir().join("feedrec_factor_tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("model.json");
        let config = BTreeMap::from([("selector".to_string(), "all".to_string())]);
        save_model(&model, &path, &config).unwrap();
        let (back, echo) = load_model::<f64>(&path).unwrap();
        assert_eq!(back, model);
        assert_eq!(echo, config);

        // Saving again produces identical bytes.
        let path2 = dir.join("model2.json");
        save_model(&model, &path2, &config).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }

    #[test]
    fn the_engine_works_in_single_precision_too() {
        let ratings = RatingMatrix::<f32>::from_parts(
            vec!["u1".into(), "u2".into()],
            vec!["i1".into(), "i2".into()],
            vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 4.0)],
        )
        .unwrap();
        let hp = Hyperparams::<f32> {
            d: 1,
            lambda: 0.0,
            alpha: 0.0,
            learning_rate: 0.1,
            epochs: 300,
            ..Hyperparams::default()
        };
        let (model, report) = train(&ratings, None, &hp).unwrap();
        assert!(train_rmse(&model, &ratings).unwrap() < 1e-2);
        for w in report.losses.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn recommend_excludes_rated_and_truncates() {
        let model = FactorModel::from_parts(
            vec!["u1".into()],
            vec!["i1".into(), "i2".into(), "i3".into()],
            vec![1.0],
            vec![0.5, 2.0, 1.0],
            hp1(0.0, 0.0),
            vec![vec![1]],
        )
        .unwrap();
        let recs = model.recommend(0, 10).unwrap();
        assert_eq!(recs.len(), 2); // i2 rated, catalog smaller than k
        assert_eq!(recs[0].0, 2); // score 1.0
        assert_eq!(recs[1].0, 0); // score 0.5
    }
}
