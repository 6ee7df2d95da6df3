//! Deterministic synthetic dataset generator.
//!
//! Posts are assigned latent topics and share vocabulary within a topic;
//! users prefer a couple of topics, so content similarity carries real
//! signal that a content-aware model can exploit. Per-category event
//! totals and distinct-user counts are hit exactly, which makes dataset
//! summaries reproducible targets rather than approximations.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{Dataset, InteractionEvent, InteractionType, Post};
use crate::error::DataError;

/// Event volume and distinct-user target for one feedback category.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CategoryScale {
    pub events: usize,
    pub active_users: usize,
}

/// Shape of a generated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScale {
    pub users: usize,
    pub posts: usize,
    pub topics: usize,
    pub direct: CategoryScale,
    pub social: CategoryScale,
    pub reading: CategoryScale,
    /// Distinct favorite topics per user.
    pub favorite_topics_per_user: usize,
    /// Probability that an event lands on a post from a favorite topic.
    pub topic_affinity: f64,
    /// Inclusive token-count range for post texts.
    pub tokens_per_post: (usize, usize),
}

impl SyntheticScale {
    /// The reference dataset shape: 250 users, 6,900 posts, and the
    /// per-category interaction volumes the toolkit's summaries target.
    pub fn reference() -> Self {
        SyntheticScale {
            users: 250,
            posts: 6_900,
            topics: 25,
            direct: CategoryScale {
                events: 20_868,
                active_users: 150,
            },
            social: CategoryScale {
                events: 28_363,
                active_users: 165,
            },
            reading: CategoryScale {
                events: 10_985,
                active_users: 134,
            },
            favorite_topics_per_user: 2,
            topic_affinity: 0.85,
            tokens_per_post: (20, 60),
        }
    }

    /// A scale with roughly `density` fraction of the user x post grid
    /// rated, split 42/38/20 across direct/social/reading events.
    pub fn structured(users: usize, posts: usize, density: f64) -> Self {
        let pairs = (density * users as f64 * posts as f64).round() as usize;
        // Repeat interactions collapse into one rating; pad for that.
        let events = ((pairs as f64) * 1.15).round() as usize;
        let share = |frac: f64| ((events as f64) * frac).round() as usize;
        let cap_users = |frac: f64| ((users as f64) * frac).round() as usize;
        SyntheticScale {
            users,
            posts,
            topics: (posts / 50).max(4),
            direct: CategoryScale {
                events: share(0.42),
                active_users: cap_users(0.8).clamp(1, users),
            },
            social: CategoryScale {
                events: share(0.38),
                active_users: cap_users(0.7).clamp(1, users),
            },
            reading: CategoryScale {
                events: share(0.20),
                active_users: cap_users(0.5).clamp(1, users),
            },
            favorite_topics_per_user: 2,
            topic_affinity: 0.85,
            tokens_per_post: (20, 60),
        }
    }

    /// A tiny scale for fast tests.
    pub fn small() -> Self {
        SyntheticScale {
            users: 12,
            posts: 20,
            topics: 4,
            direct: CategoryScale {
                events: 40,
                active_users: 8,
            },
            social: CategoryScale {
                events: 30,
                active_users: 6,
            },
            reading: CategoryScale {
                events: 20,
                active_users: 5,
            },
            favorite_topics_per_user: 2,
            topic_affinity: 0.85,
            tokens_per_post: (8, 16),
        }
    }

    fn validate(&self) -> Result<(), DataError> {
        if self.users == 0 {
            return Err(DataError::InvalidScale("user count must be positive".into()));
        }
        if self.posts == 0 {
            return Err(DataError::InvalidScale("post count must be positive".into()));
        }
        if self.topics == 0 || self.topics > self.posts {
            return Err(DataError::InvalidScale(format!(
                "topic count must be in 1..={}, got {}",
                self.posts, self.topics
            )));
        }
        if self.favorite_topics_per_user == 0 || self.favorite_topics_per_user > self.topics {
            return Err(DataError::InvalidScale(format!(
                "favorite_topics_per_user must be in 1..={}, got {}",
                self.topics, self.favorite_topics_per_user
            )));
        }
        if !(0.0..=1.0).contains(&self.topic_affinity) {
            return Err(DataError::InvalidScale(format!(
                "topic_affinity must be in [0, 1], got {}",
                self.topic_affinity
            )));
        }
        let (lo, hi) = self.tokens_per_post;
        if lo == 0 || lo > hi {
            return Err(DataError::InvalidScale(format!(
                "tokens_per_post range ({lo}, {hi}) is invalid"
            )));
        }
        for (name, cat) in [
            ("direct", self.direct),
            ("social", self.social),
            ("reading", self.reading),
        ] {
            if cat.events == 0 && cat.active_users != 0 {
                return Err(DataError::InvalidScale(format!(
                    "{name}: {} active users but zero events",
                    cat.active_users
                )));
            }
            if cat.events > 0 && cat.active_users == 0 {
                return Err(DataError::InvalidScale(format!(
                    "{name}: {} events but zero active users",
                    cat.events
                )));
            }
            if cat.active_users > self.users {
                return Err(DataError::InvalidScale(format!(
                    "{name}: {} active users exceeds {} total users",
                    cat.active_users, self.users
                )));
            }
            if cat.events < cat.active_users {
                return Err(DataError::InvalidScale(format!(
                    "{name}: {} events cannot cover {} active users",
                    cat.events, cat.active_users
                )));
            }
        }
        Ok(())
    }
}

const WORDS_PER_TOPIC: usize = 40;

const SYLLABLES: [&str; 20] = [
    "ba", "ce", "di", "fo", "gu", "ha", "ji", "ko", "lu", "me", "ni", "po", "qa", "re", "su",
    "ta", "ve", "wi", "xo", "zy",
];

const COMMON_WORDS: [&str; 15] = [
    "the", "and", "for", "with", "from", "this", "that", "post", "team", "update", "news",
    "week", "today", "share", "work",
];

/// Base-20 syllable spelling; injective because all syllables are
/// distinct and two characters long.
fn pseudo_word(mut w: usize) -> String {
    w += SYLLABLES.len(); // at least two syllables
    let mut word = String::new();
    while w > 0 {
        word.push_str(SYLLABLES[w % SYLLABLES.len()]);
        w /= SYLLABLES.len();
    }
    word
}

fn topic_word(topic: usize, k: usize) -> String {
    pseudo_word(topic * WORDS_PER_TOPIC + k)
}

const DIRECT_TYPES: [(InteractionType, u32); 6] = [
    (InteractionType::DirectLike, 35),
    (InteractionType::DirectClickthrough, 20),
    (InteractionType::DirectComment, 15),
    (InteractionType::DirectImpression, 15),
    (InteractionType::DirectShare, 10),
    (InteractionType::DirectReshare, 5),
];

const SOCIAL_TYPES: [(InteractionType, u32); 6] = [
    (InteractionType::TwitterShare, 30),
    (InteractionType::FacebookShare, 25),
    (InteractionType::LinkedinShare, 20),
    (InteractionType::TwitterReshare, 10),
    (InteractionType::FacebookReshare, 10),
    (InteractionType::LinkedinReshare, 5),
];

const READING_TYPES: [(InteractionType, u32); 2] = [
    (InteractionType::ReadingProgress, 70),
    (InteractionType::ReadingCompletion, 30),
];

fn pick_weighted(rng: &mut ChaCha8Rng, table: &[(InteractionType, u32)]) -> InteractionType {
    let total: u32 = table.iter().map(|(_, w)| w).sum();
    let mut roll = rng.gen_range(0..total);
    for &(ty, w) in table {
        if roll < w {
            return ty;
        }
        roll -= w;
    }
    table[table.len() - 1].0
}

const TIMESTAMP_BASE: i64 = 1_600_000_000;

/// Generates a dataset as a pure function of `(seed, scale)`.
///
/// Guarantees, exactly: per-category event totals, per-category
/// distinct-user counts, `scale.users` users and `scale.posts` posts.
/// Every user appears in at least one category whenever the combined
/// active-user targets cover the user count.
pub fn generate_synthetic(seed: u64, scale: &SyntheticScale) -> Result<Dataset, DataError> {
    scale.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let user_width = scale.users.to_string().len().max(4);
    let post_width = scale.posts.to_string().len().max(5);
    let user_ids: Vec<String> = (1..=scale.users)
        .map(|i| format!("u{i:0user_width$}"))
        .collect();
    let post_ids: Vec<String> = (1..=scale.posts)
        .map(|i| format!("p{i:0post_width$}"))
        .collect();

    // Posts: balanced topic assignment, topic-heavy vocabulary.
    let topic_of: Vec<usize> = (0..scale.posts).map(|i| i % scale.topics).collect();
    let mut posts_of_topic: Vec<Vec<usize>> = vec![Vec::new(); scale.topics];
    for (post, &topic) in topic_of.iter().enumerate() {
        posts_of_topic[topic].push(post);
    }
    let (len_lo, len_hi) = scale.tokens_per_post;
    let mut posts = Vec::with_capacity(scale.posts);
    for (post, &topic) in topic_of.iter().enumerate() {
        let len = rng.gen_range(len_lo..=len_hi);
        let mut tokens = Vec::with_capacity(len);
        for _ in 0..len {
            if rng.gen::<f64>() < 0.2 {
                tokens.push(COMMON_WORDS[rng.gen_range(0..COMMON_WORDS.len())].to_string());
            } else {
                // Square the draw to skew toward the topic's head words.
                let k = ((rng.gen::<f64>().powi(2)) * WORDS_PER_TOPIC as f64) as usize;
                tokens.push(topic_word(topic, k.min(WORDS_PER_TOPIC - 1)));
            }
        }
        posts.push(Post {
            post_id: post_ids[post].clone(),
            text: tokens.join(" "),
        });
    }

    // User preferences: a few favorite topics each.
    let favorites: Vec<Vec<usize>> = (0..scale.users)
        .map(|_| {
            rand::seq::index::sample(&mut rng, scale.topics, scale.favorite_topics_per_user)
                .into_vec()
        })
        .collect();

    // Category membership: deal every user one slot while capacity lasts
    // (covers all users when the targets sum to at least the user count),
    // then fill the remaining slots with extra users.
    let mut member = [
        vec![false; scale.users],
        vec![false; scale.users],
        vec![false; scale.users],
    ];
    let mut capacity = [
        scale.direct.active_users,
        scale.social.active_users,
        scale.reading.active_users,
    ];
    let mut order: Vec<usize> = (0..scale.users).collect();
    order.shuffle(&mut rng);
    for &user in &order {
        let total: usize = capacity.iter().sum();
        if total == 0 {
            break;
        }
        let mut roll = rng.gen_range(0..total);
        let cat = if roll < capacity[0] {
            0
        } else {
            roll -= capacity[0];
            if roll < capacity[1] {
                1
            } else {
                2
            }
        };
        member[cat][user] = true;
        capacity[cat] -= 1;
    }
    for cat in 0..3 {
        while capacity[cat] > 0 {
            let user = rng.gen_range(0..scale.users);
            if !member[cat][user] {
                member[cat][user] = true;
                capacity[cat] -= 1;
            }
        }
    }
    let active: Vec<Vec<usize>> = member
        .iter()
        .map(|flags| {
            (0..scale.users)
                .filter(|&u| flags[u])
                .collect::<Vec<usize>>()
        })
        .collect();

    let mut events = Vec::with_capacity(
        scale.direct.events + scale.social.events + scale.reading.events,
    );
    let mut clock: i64 = 0;

    let categories = [
        (&scale.direct, DIRECT_TYPES.as_slice(), 0usize),
        (&scale.social, SOCIAL_TYPES.as_slice(), 1),
        (&scale.reading, READING_TYPES.as_slice(), 2),
    ];
    for (cat_scale, types, cat) in categories {
        if cat_scale.events == 0 {
            continue;
        }
        let active_users = &active[cat];
        let emit = |user: usize, rng: &mut ChaCha8Rng, events: &mut Vec<InteractionEvent>, clock: &mut i64| {
            let post = if rng.gen::<f64>() < scale.topic_affinity {
                let topic = favorites[user][rng.gen_range(0..favorites[user].len())];
                posts_of_topic[topic][rng.gen_range(0..posts_of_topic[topic].len())]
            } else {
                rng.gen_range(0..scale.posts)
            };
            let ty = pick_weighted(rng, types);
            let value = match ty {
                InteractionType::ReadingProgress => rng.gen_range(1..=100) as f64 / 100.0,
                _ => 1.0,
            };
            *clock += 60;
            events.push(InteractionEvent {
                user_id: user_ids[user].clone(),
                post_id: post_ids[post].clone(),
                interaction_type: ty,
                value,
                timestamp: Some(TIMESTAMP_BASE + *clock),
            });
        };
        // One guaranteed event per active user pins the distinct-user count.
        for &user in active_users {
            emit(user, &mut rng, &mut events, &mut clock);
        }
        for _ in 0..(cat_scale.events - active_users.len()) {
            let user = active_users[rng.gen_range(0..active_users.len())];
            emit(user, &mut rng, &mut events, &mut clock);
        }
    }

    Dataset::new(user_ids, posts, events)
}
