//! Dataset schema: interaction events, posts, and the validated container.

mod io;
mod synth;

pub use io::{load_dataset, read_events_file, read_posts_file, write_dataset, write_events, write_posts};
pub use synth::{generate_synthetic, CategoryScale, SyntheticScale};

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use crate::error::DataError;

/// One user action on one post.
///
/// Types cover three groups: actions inside the platform itself
/// (`Direct*`), shares out to social networks, and reading telemetry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum InteractionType {
    DirectShare,
    DirectImpression,
    DirectReshare,
    DirectLike,
    DirectComment,
    DirectClickthrough,
    TwitterShare,
    TwitterReshare,
    FacebookShare,
    FacebookReshare,
    LinkedinShare,
    LinkedinReshare,
    ReadingProgress,
    ReadingCompletion,
}

impl InteractionType {
    pub const ALL: [InteractionType; 14] = [
        InteractionType::DirectShare,
        InteractionType::DirectImpression,
        InteractionType::DirectReshare,
        InteractionType::DirectLike,
        InteractionType::DirectComment,
        InteractionType::DirectClickthrough,
        InteractionType::TwitterShare,
        InteractionType::TwitterReshare,
        InteractionType::FacebookShare,
        InteractionType::FacebookReshare,
        InteractionType::LinkedinShare,
        InteractionType::LinkedinReshare,
        InteractionType::ReadingProgress,
        InteractionType::ReadingCompletion,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            InteractionType::DirectShare => "direct_share",
            InteractionType::DirectImpression => "direct_impression",
            InteractionType::DirectReshare => "direct_reshare",
            InteractionType::DirectLike => "direct_like",
            InteractionType::DirectComment => "direct_comment",
            InteractionType::DirectClickthrough => "direct_clickthrough",
            InteractionType::TwitterShare => "twitter_share",
            InteractionType::TwitterReshare => "twitter_reshare",
            InteractionType::FacebookShare => "facebook_share",
            InteractionType::FacebookReshare => "facebook_reshare",
            InteractionType::LinkedinShare => "linkedin_share",
            InteractionType::LinkedinReshare => "linkedin_reshare",
            InteractionType::ReadingProgress => "reading_progress",
            InteractionType::ReadingCompletion => "reading_completion",
        }
    }
}

impl fmt::Display for InteractionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InteractionType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        InteractionType::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown interaction_type `{s}`"))
    }
}

/// One user action on one post, typed and timestamped.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionEvent {
    pub user_id: String,
    pub post_id: String,
    pub interaction_type: InteractionType,
    /// Count for most types; progress fraction in [0, 1] for
    /// `reading_progress`; 0 or 1 for `reading_completion`.
    pub value: f64,
    pub timestamp: Option<i64>,
}

impl InteractionEvent {
    /// Checks the value invariants for this event's type.
    pub fn validate_value(&self) -> Result<(), String> {
        if !self.value.is_finite() || self.value < 0.0 {
            return Err(format!(
                "value must be a finite nonnegative number, got {}",
                self.value
            ));
        }
        match self.interaction_type {
            InteractionType::ReadingProgress if self.value > 1.0 => Err(format!(
                "reading_progress value must be in [0, 1], got {}",
                self.value
            )),
            InteractionType::ReadingCompletion if self.value != 0.0 && self.value != 1.0 => {
                Err(format!(
                    "reading_completion value must be 0 or 1, got {}",
                    self.value
                ))
            }
            _ => Ok(()),
        }
    }
}

/// A post with its text content (title and body concatenated).
#[derive(Debug, Clone, PartialEq)]
pub struct Post {
    pub post_id: String,
    pub text: String,
}

/// Validated dataset: users, posts, and interaction events with
/// referential integrity.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    users: Vec<String>,
    posts: Vec<Post>,
    events: Vec<InteractionEvent>,
}

impl Dataset {
    /// Builds a dataset and checks every invariant: unique post ids,
    /// valid event values, and every event referencing a known user and
    /// post. `users` may list users without events (sorted on entry).
    pub fn new(
        mut users: Vec<String>,
        posts: Vec<Post>,
        events: Vec<InteractionEvent>,
    ) -> Result<Self, DataError> {
        users.sort();
        users.dedup();
        let user_set: HashSet<&str> = users.iter().map(String::as_str).collect();
        let mut post_set: HashSet<&str> = HashSet::with_capacity(posts.len());
        for post in &posts {
            if !post_set.insert(post.post_id.as_str()) {
                return Err(DataError::DuplicatePost(post.post_id.clone()));
            }
        }
        for event in &events {
            if let Err(message) = event.validate_value() {
                return Err(DataError::InvalidValue {
                    path: "<memory>".into(),
                    line: 0,
                    message,
                });
            }
            if !post_set.contains(event.post_id.as_str()) {
                return Err(DataError::DanglingPost {
                    user_id: event.user_id.clone(),
                    post_id: event.post_id.clone(),
                });
            }
            if !user_set.contains(event.user_id.as_str()) {
                return Err(DataError::DanglingUser {
                    user_id: event.user_id.clone(),
                    post_id: event.post_id.clone(),
                });
            }
        }
        Ok(Dataset {
            users,
            posts,
            events,
        })
    }

    /// Builds a dataset whose user set is derived from the events.
    pub fn from_events(posts: Vec<Post>, events: Vec<InteractionEvent>) -> Result<Self, DataError> {
        let users: Vec<String> = events.iter().map(|e| e.user_id.clone()).collect();
        Dataset::new(users, posts, events)
    }

    pub fn users(&self) -> &[String] {
        &self.users
    }

    pub fn posts(&self) -> &[Post] {
        &self.posts
    }

    pub fn events(&self) -> &[InteractionEvent] {
        &self.events
    }

    /// Map from user_id to its index in `users()`.
    pub fn user_index(&self) -> HashMap<&str, usize> {
        self.users
            .iter()
            .enumerate()
            .map(|(i, u)| (u.as_str(), i))
            .collect()
    }

    /// Map from post_id to its index in `posts()`.
    pub fn post_index(&self) -> HashMap<&str, usize> {
        self.posts
            .iter()
            .enumerate()
            .map(|(i, p)| (p.post_id.as_str(), i))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn event(user: &str, post: &str, ty: InteractionType, value: f64) -> InteractionEvent {
        InteractionEvent {
            user_id: user.into(),
            post_id: post.into(),
            interaction_type: ty,
            value,
            timestamp: None,
        }
    }

    #[test]
    fn minimal_dataset_builds() {
        let ds = Dataset::from_events(
            vec![Post {
                post_id: "p1".into(),
                text: "hello".into(),
            }],
            vec![event("u1", "p1", InteractionType::DirectLike, 1.0)],
        )
        .unwrap();
        assert_eq!(ds.users(), ["u1".to_string()]);
        assert_eq!(ds.posts().len(), 1);
        assert_eq!(ds.events().len(), 1);
    }

    #[test]
    fn dangling_post_is_rejected_by_name() {
        let err = Dataset::from_events(
            vec![Post {
                post_id: "p1".into(),
                text: "hello".into(),
            }],
            vec![event("u1", "p9", InteractionType::DirectLike, 1.0)],
        )
        .unwrap_err();
        assert!(err.to_string().contains("p9"), "{err}");
    }

    #[test]
    fn negative_value_is_rejected() {
        let err = Dataset::from_events(
            vec![Post {
                post_id: "p1".into(),
                text: "hello".into(),
            }],
            vec![event("u1", "p1", InteractionType::DirectLike, -1.0)],
        )
        .unwrap_err();
        assert!(err.to_string().contains("nonnegative"), "{err}");
    }

    #[test]
    fn reading_progress_bounds() {
        let ok = event("u1", "p1", InteractionType::ReadingProgress, 0.4);
        assert!(ok.validate_value().is_ok());
        let bad = event("u1", "p1", InteractionType::ReadingProgress, 1.5);
        assert!(bad.validate_value().is_err());
        let bad_completion = event("u1", "p1", InteractionType::ReadingCompletion, 0.5);
        assert!(bad_completion.validate_value().is_err());
    }

    #[test]
    fn duplicate_post_id_is_rejected() {
        let err = Dataset::from_events(
            vec![
                Post {
                    post_id: "p1".into(),
                    text: "a".into(),
                },
                Post {
                    post_id: "p1".into(),
                    text: "b".into(),
                },
            ],
            vec![],
        )
        .unwrap_err();
        assert!(matches!(err, DataError::DuplicatePost(ref id) if id == "p1"));
    }

    #[test]
    fn interaction_type_round_trips_through_token() {
        for ty in InteractionType::ALL {
            assert_eq!(ty.as_str().parse::<InteractionType>().unwrap(), ty);
        }
        assert!("direct_wave".parse::<InteractionType>().is_err());
    }
}
