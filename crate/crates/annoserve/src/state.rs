//! In-memory projection of the event log.
//!
//! Every mutation is planned against the current state, which validates it
//! and yields events, and only then applied. Replaying the log runs the same
//! checks, so a log that could not have been produced by the service is
//! rejected.

use std::collections::{BTreeSet, HashMap, HashSet};

use chrono::{DateTime, Utc};
use gecwork::corruptor::mix_seed;
use gecwork::data::Sample;
use gecwork::metrics::AnnotationLedgerView;
use gecwork::text::normalize;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, ServiceError};
use crate::model::{
    golden_references, Event, GoldenReferenceSet, ImportRequest, LogRecord, Review, ReviewItem,
    ReviewRequest, Submission, SubmissionRequest, Task, TaskInput, TaskStatus,
};

pub const DEFAULT_DOMAIN: &str = "default";

#[derive(Debug, Clone, PartialEq)]
struct TaskEntry {
    task: Task,
    bound_to: Option<String>,
    /// Annotators who have ever been given this task.
    served: BTreeSet<String>,
    submissions: Vec<usize>,
    golden: Option<GoldenReferenceSet>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct State {
    tasks: Vec<TaskEntry>,
    index: HashMap<String, usize>,
    submissions: Vec<Submission>,
    submission_index: HashMap<String, usize>,
    reviews: Vec<Review>,
    bindings: HashMap<String, usize>,
    assignments: u64,
    seq: u64,
}

/// Outcome of planning an assignment.
#[derive(Debug, Clone, PartialEq)]
pub enum Assignment {
    /// The annotator already holds this task.
    Held(Task),
    Draw(Event),
    NothingOpen,
}

fn require_id(what: &str, id: &str) -> Result<()> {
    if id.trim().is_empty() {
        return Err(ServiceError::Invalid(format!("{what} must not be empty")));
    }
    Ok(())
}

fn squeeze(s: &str) -> String {
    normalize(s)
        .chars()
        .filter(|c| !c.is_whitespace())
        .collect()
}

impl State {
    pub fn seq(&self) -> u64 {
        self.seq
    }

    pub fn task(&self, task_id: &str) -> Option<&Task> {
        self.index.get(task_id).map(|&i| &self.tasks[i].task)
    }

    pub fn tasks(&self) -> impl Iterator<Item = &Task> {
        self.tasks.iter().map(|e| &e.task)
    }

    pub fn golden(&self, task_id: &str) -> Option<&GoldenReferenceSet> {
        self.index
            .get(task_id)
            .and_then(|&i| self.tasks[i].golden.as_ref())
    }

    pub fn submissions(&self) -> &[Submission] {
        &self.submissions
    }

    pub fn reviews(&self) -> &[Review] {
        &self.reviews
    }

    /// Task currently bound to `annotator`.
    pub fn binding(&self, annotator: &str) -> Option<&Task> {
        self.bindings.get(annotator).map(|&i| &self.tasks[i].task)
    }

    fn entry(&self, task_id: &str) -> Result<(usize, &TaskEntry)> {
        self.index
            .get(task_id)
            .map(|&i| (i, &self.tasks[i]))
            .ok_or_else(|| ServiceError::NotFound(format!("no task {task_id:?}")))
    }

    pub fn plan_import(
        &self,
        req: &ImportRequest,
        required: usize,
        now: DateTime<Utc>,
    ) -> Result<Vec<Event>> {
        if required == 0 {
            return Err(ServiceError::Invalid(
                "required submissions must be at least 1".into(),
            ));
        }
        let mut taken: HashSet<String> = self.index.keys().cloned().collect();
        let mut duplicates = Vec::new();
        for t in &req.tasks {
            if let TaskInput::Record { id: Some(id), .. } = t {
                require_id("task id", id)?;
                if !taken.insert(id.clone()) && !duplicates.contains(id) {
                    duplicates.push(id.clone());
                }
            }
        }
        if !duplicates.is_empty() {
            return Err(ServiceError::DuplicateIds(duplicates));
        }

        let mut next = self.tasks.len() + 1;
        let mut events = Vec::with_capacity(req.tasks.len());
        for (n, t) in req.tasks.iter().enumerate() {
            let (id, sentence, context, domain) = match t {
                TaskInput::Sentence(s) => (None, s, None, None),
                TaskInput::Record {
                    id,
                    sentence,
                    context,
                    domain,
                } => (id.clone(), sentence, context.clone(), domain.clone()),
            };
            if sentence.trim().is_empty() {
                return Err(ServiceError::Invalid(format!(
                    "task {} has an empty sentence",
                    n + 1
                )));
            }
            let task_id = id.unwrap_or_else(|| loop {
                let candidate = format!("t{next}");
                next += 1;
                if taken.insert(candidate.clone()) {
                    break candidate;
                }
            });
            let domain = domain
                .or_else(|| req.domain.clone())
                .unwrap_or_else(|| DEFAULT_DOMAIN.to_string());
            events.push(Event::TaskCreated {
                task: Task {
                    task_id,
                    sentence: sentence.clone(),
                    context,
                    domain,
                    status: TaskStatus::Open,
                    required_submissions: required,
                    created_at: now,
                },
            });
        }
        Ok(events)
    }

    /// Draws an open task the annotator has not seen before. The draw is
    /// seeded from `seed` and the number of assignments made so far.
    pub fn plan_assign(
        &self,
        annotator: &str,
        seed: u64,
        now: DateTime<Utc>,
    ) -> Result<Assignment> {
        require_id("annotator id", annotator)?;
        if let Some(t) = self.binding(annotator) {
            return Ok(Assignment::Held(t.clone()));
        }
        let open: Vec<usize> = (0..self.tasks.len())
            .filter(|&i| {
                let e = &self.tasks[i];
                e.task.status == TaskStatus::Open && !e.served.contains(annotator)
            })
            .collect();
        if open.is_empty() {
            return Ok(Assignment::NothingOpen);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, self.assignments));
        let pick = open[rng.gen_range(0..open.len())];
        Ok(Assignment::Draw(Event::Assigned {
            task_id: self.tasks[pick].task.task_id.clone(),
            annotator_id: annotator.to_string(),
            at: now,
        }))
    }

    pub fn plan_submit(&self, req: &SubmissionRequest, now: DateTime<Utc>) -> Result<Event> {
        require_id("annotator id", &req.annotator_id)?;
        let (_, entry) = self.entry(&req.task_id)?;
        match (&req.corrected_text, req.error_free) {
            (Some(_), true) => {
                return Err(ServiceError::Invalid(
                    "corrected_text and error_free are mutually exclusive".into(),
                ))
            }
            (None, false) => {
                return Err(ServiceError::Invalid(
                    "provide either corrected_text or error_free".into(),
                ))
            }
            (Some(text), false) => {
                if normalize(text).is_empty() {
                    return Err(ServiceError::Invalid("corrected_text is empty".into()));
                }
                if squeeze(text) == squeeze(&entry.task.sentence) {
                    return Err(ServiceError::Invalid(
                        "corrected_text only changes whitespace; submit error_free instead".into(),
                    ));
                }
            }
            (None, true) => {}
        }
        self.check_submit(entry, &req.annotator_id)?;
        Ok(Event::Submission {
            submission: Submission {
                submission_id: format!("s{}", self.submissions.len() + 1),
                task_id: req.task_id.clone(),
                annotator_id: req.annotator_id.clone(),
                corrected_text: req.corrected_text.clone(),
                error_free: req.error_free,
                need_context: req.need_context,
                created_at: now,
            },
        })
    }

    fn check_submit(&self, entry: &TaskEntry, annotator: &str) -> Result<()> {
        if entry.task.status != TaskStatus::Annotating
            || entry.bound_to.as_deref() != Some(annotator)
        {
            return Err(ServiceError::Conflict(format!(
                "task {:?} is not assigned to annotator {annotator:?}",
                entry.task.task_id
            )));
        }
        Ok(())
    }

    pub fn plan_review(&self, req: &ReviewRequest, now: DateTime<Utc>) -> Result<Event> {
        require_id("reviewer id", &req.reviewer_id)?;
        let (_, entry) = self.entry(&req.task_id)?;
        if entry.task.status != TaskStatus::InReview {
            return Err(ServiceError::Conflict(format!(
                "task {:?} is not awaiting review",
                req.task_id
            )));
        }
        self.check_review(entry, &req.accepted_submission_ids, &req.added_references)?;
        Ok(Event::Review {
            review: Review {
                review_id: format!("r{}", self.reviews.len() + 1),
                task_id: req.task_id.clone(),
                reviewer_id: req.reviewer_id.clone(),
                accepted_submission_ids: req.accepted_submission_ids.clone(),
                added_references: req.added_references.clone(),
                created_at: now,
            },
        })
    }

    fn check_review(&self, entry: &TaskEntry, accepted: &[String], added: &[String]) -> Result<()> {
        let mut seen = HashSet::new();
        for id in accepted {
            let belongs = self
                .submission_index
                .get(id)
                .is_some_and(|&i| self.submissions[i].task_id == entry.task.task_id);
            if !belongs {
                return Err(ServiceError::Invalid(format!(
                    "submission {id:?} does not belong to task {:?}",
                    entry.task.task_id
                )));
            }
            if !seen.insert(id) {
                return Err(ServiceError::Invalid(format!(
                    "submission {id:?} accepted twice"
                )));
            }
        }
        if added.iter().any(|r| normalize(r).is_empty()) {
            return Err(ServiceError::Invalid("added reference is empty".into()));
        }
        Ok(())
    }

    /// Applies one logged record. Records must arrive in sequence.
    pub fn apply(&mut self, rec: &LogRecord) -> Result<(), String> {
        if rec.seq != self.seq + 1 {
            return Err(format!("expected seq {}, found {}", self.seq + 1, rec.seq));
        }
        match &rec.event {
            Event::TaskCreated { task } => {
                if self.index.contains_key(&task.task_id) {
                    return Err(format!("task {:?} created twice", task.task_id));
                }
                if task.status != TaskStatus::Open || task.required_submissions == 0 {
                    return Err(format!(
                        "task {:?} created in an invalid state",
                        task.task_id
                    ));
                }
                self.index.insert(task.task_id.clone(), self.tasks.len());
                self.tasks.push(TaskEntry {
                    task: task.clone(),
                    bound_to: None,
                    served: BTreeSet::new(),
                    submissions: Vec::new(),
                    golden: None,
                });
            }
            Event::Assigned {
                task_id,
                annotator_id,
                ..
            } => {
                let (i, entry) = self.entry(task_id).map_err(|e| e.to_string())?;
                if entry.task.status != TaskStatus::Open
                    || entry.served.contains(annotator_id)
                    || self.bindings.contains_key(annotator_id)
                {
                    return Err(format!(
                        "task {task_id:?} cannot be assigned to {annotator_id:?}"
                    ));
                }
                let entry = &mut self.tasks[i];
                entry.task.status = TaskStatus::Annotating;
                entry.bound_to = Some(annotator_id.clone());
                entry.served.insert(annotator_id.clone());
                self.bindings.insert(annotator_id.clone(), i);
                self.assignments += 1;
            }
            Event::Submission { submission } => {
                let (i, entry) = self.entry(&submission.task_id).map_err(|e| e.to_string())?;
                self.check_submit(entry, &submission.annotator_id)
                    .map_err(|e| e.to_string())?;
                if submission.corrected_text.is_some() == submission.error_free {
                    return Err(format!(
                        "submission {:?} has an invalid payload",
                        submission.submission_id
                    ));
                }
                if self
                    .submission_index
                    .contains_key(&submission.submission_id)
                {
                    return Err(format!(
                        "submission {:?} recorded twice",
                        submission.submission_id
                    ));
                }
                let k = self.submissions.len();
                self.submission_index
                    .insert(submission.submission_id.clone(), k);
                self.submissions.push(submission.clone());
                self.bindings.remove(&submission.annotator_id);
                let entry = &mut self.tasks[i];
                entry.bound_to = None;
                entry.submissions.push(k);
                entry.task.status = if entry.submissions.len() >= entry.task.required_submissions {
                    TaskStatus::InReview
                } else {
                    TaskStatus::Open
                };
            }
            Event::Review { review } => {
                let (i, entry) = self.entry(&review.task_id).map_err(|e| e.to_string())?;
                if entry.task.status != TaskStatus::InReview {
                    return Err(format!("task {:?} is not awaiting review", review.task_id));
                }
                self.check_review(
                    entry,
                    &review.accepted_submission_ids,
                    &review.added_references,
                )
                .map_err(|e| e.to_string())?;
                let sentence = entry.task.sentence.as_str();
                let accepted = review
                    .accepted_submission_ids
                    .iter()
                    .map(|id| self.submissions[self.submission_index[id]].proposed(sentence));
                let references =
                    golden_references(accepted, review.added_references.iter().map(String::as_str));
                let golden = GoldenReferenceSet {
                    task_id: review.task_id.clone(),
                    references,
                };
                self.reviews.push(review.clone());
                let entry = &mut self.tasks[i];
                entry.golden = Some(golden);
                entry.task.status = TaskStatus::Done;
            }
        }
        self.seq = rec.seq;
        Ok(())
    }

    pub fn review_queue(&self) -> Vec<ReviewItem> {
        self.tasks
            .iter()
            .filter(|e| e.task.status == TaskStatus::InReview)
            .map(|e| ReviewItem {
                task: e.task.clone(),
                submissions: e
                    .submissions
                    .iter()
                    .map(|&k| self.submissions[k].clone())
                    .collect(),
            })
            .collect()
    }

    fn reviewed(&self) -> impl Iterator<Item = (&TaskEntry, &GoldenReferenceSet)> {
        self.tasks
            .iter()
            .filter_map(|e| e.golden.as_ref().map(|g| (e, g)))
            .filter(|(_, g)| !g.references.is_empty())
    }

    /// One sample per reviewed task that kept at least one reference.
    pub fn export(&self, domain: Option<&str>) -> Vec<Sample> {
        self.reviewed()
            .filter(|(e, _)| domain.is_none_or(|d| e.task.domain == d))
            .map(|(e, g)| Sample {
                id: e.task.task_id.clone(),
                source: e.task.sentence.clone(),
                references: g.references.clone(),
                domain: e.task.domain.clone(),
                need_context: Some(
                    e.submissions
                        .iter()
                        .any(|&k| self.submissions[k].need_context),
                ),
            })
            .collect()
    }

    /// Each submission on a reviewed task paired with the golden references.
    pub fn ledger(&self) -> AnnotationLedgerView {
        let mut ledger = AnnotationLedgerView::default();
        for (e, g) in self.reviewed() {
            for &k in &e.submissions {
                let s = &self.submissions[k];
                ledger.push(
                    s.annotator_id.clone(),
                    s.proposed(&e.task.sentence),
                    g.references.clone(),
                );
            }
        }
        ledger
    }

    /// Checks that bindings and task states agree. Used by tests.
    pub fn check_invariants(&self) -> Result<(), String> {
        for (annotator, &i) in &self.bindings {
            let e = &self.tasks[i];
            if e.task.status != TaskStatus::Annotating || e.bound_to.as_deref() != Some(annotator) {
                return Err(format!(
                    "binding {annotator:?} -> {:?} is stale",
                    e.task.task_id
                ));
            }
        }
        for (i, e) in self.tasks.iter().enumerate() {
            let bound = e.bound_to.is_some();
            if bound != (e.task.status == TaskStatus::Annotating) {
                return Err(format!(
                    "task {:?} binding disagrees with status",
                    e.task.task_id
                ));
            }
            if let Some(a) = &e.bound_to {
                if self.bindings.get(a) != Some(&i) {
                    return Err(format!(
                        "task {:?} bound to {a:?} without a binding",
                        e.task.task_id
                    ));
                }
            }
        }
        Ok(())
    }
}
