use std::collections::HashSet;

use chrono::{DateTime, Utc};
use gecwork::text::normalize;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Open,
    Annotating,
    InReview,
    Done,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub task_id: String,
    pub sentence: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
    pub domain: String,
    pub status: TaskStatus,
    /// Submissions collected before the task moves to review.
    pub required_submissions: usize,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submission {
    pub submission_id: String,
    pub task_id: String,
    pub annotator_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corrected_text: Option<String>,
    #[serde(default)]
    pub error_free: bool,
    #[serde(default)]
    pub need_context: bool,
    pub created_at: DateTime<Utc>,
}

impl Submission {
    /// The sentence this submission proposes: the rewrite, or the original
    /// sentence for an Error Free submission.
    pub fn proposed<'a>(&'a self, sentence: &'a str) -> &'a str {
        match &self.corrected_text {
            Some(t) => t,
            None => sentence,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Review {
    pub review_id: String,
    pub task_id: String,
    pub reviewer_id: String,
    pub accepted_submission_ids: Vec<String>,
    #[serde(default)]
    pub added_references: Vec<String>,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldenReferenceSet {
    pub task_id: String,
    pub references: Vec<String>,
}

/// Accepted proposals followed by added references, normalized, first
/// occurrence kept.
pub fn golden_references<'a>(
    accepted: impl IntoIterator<Item = &'a str>,
    added: impl IntoIterator<Item = &'a str>,
) -> Vec<String> {
    let mut seen = HashSet::new();
    accepted
        .into_iter()
        .chain(added)
        .map(normalize)
        .filter(|r| seen.insert(r.clone()))
        .collect()
}

/// One task of an import request: a bare sentence or a record.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum TaskInput {
    Sentence(String),
    Record {
        #[serde(default)]
        id: Option<String>,
        #[serde(alias = "source")]
        sentence: String,
        #[serde(default)]
        context: Option<String>,
        #[serde(default)]
        domain: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ImportRequest {
    #[serde(default)]
    pub domain: Option<String>,
    #[serde(default)]
    pub tasks: Vec<TaskInput>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportResponse {
    pub created: usize,
    pub task_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SubmissionRequest {
    pub task_id: String,
    pub annotator_id: String,
    #[serde(default)]
    pub corrected_text: Option<String>,
    #[serde(default)]
    pub error_free: bool,
    #[serde(default)]
    pub need_context: bool,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ReviewRequest {
    pub task_id: String,
    pub reviewer_id: String,
    #[serde(default)]
    pub accepted_submission_ids: Vec<String>,
    #[serde(default)]
    pub added_references: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewItem {
    pub task: Task,
    pub submissions: Vec<Submission>,
}

/// A record of the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    TaskCreated {
        task: Task,
    },
    Assigned {
        task_id: String,
        annotator_id: String,
        at: DateTime<Utc>,
    },
    Submission {
        submission: Submission,
    },
    Review {
        review: Review,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub seq: u64,
    #[serde(flatten)]
    pub event: Event,
}
