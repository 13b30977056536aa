use std::path::Path;
use std::sync::{Mutex, MutexGuard};

use chrono::Utc;
use gecwork::data::Sample;
use gecwork::metrics::{annotator_accuracy, AccuracyReport};

use crate::error::{Result, ServiceError};
use crate::log::EventLog;
use crate::model::{
    Event, GoldenReferenceSet, ImportRequest, ImportResponse, LogRecord, ReviewItem, ReviewRequest,
    Submission, SubmissionRequest, Task,
};
use crate::state::{Assignment, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ServiceConfig {
    /// Seed for task assignment draws.
    pub seed: u64,
    /// Submissions collected per task before review.
    pub annotators_per_task: usize,
    /// Sync the log to disk after every write.
    pub fsync: bool,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            seed: 0,
            annotators_per_task: 1,
            fsync: false,
        }
    }
}

struct Inner {
    state: State,
    log: EventLog,
}

/// The annotation service. All mutations go through one lock, which covers
/// both the log write and the state update.
pub struct Service {
    config: ServiceConfig,
    inner: Mutex<Inner>,
}

impl Service {
    /// Opens the log at `path`, replaying it into a fresh state.
    pub fn open(path: impl AsRef<Path>, config: ServiceConfig) -> Result<Service> {
        let path = path.as_ref();
        if config.annotators_per_task == 0 {
            return Err(ServiceError::Invalid(
                "annotators per task must be at least 1".into(),
            ));
        }
        let (log, records) = EventLog::open(path, config.fsync)?;
        let mut state = State::default();
        for (i, rec) in records.iter().enumerate() {
            state.apply(rec).map_err(|message| ServiceError::Replay {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            })?;
        }
        Ok(Service {
            config,
            inner: Mutex::new(Inner { state, log }),
        })
    }

    pub fn config(&self) -> ServiceConfig {
        self.config
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        // A panic while holding the lock cannot leave the state half
        // updated: the log write comes first and apply has been validated.
        self.inner.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn commit(inner: &mut Inner, events: Vec<Event>) -> Result<()> {
        let first = inner.state.seq() + 1;
        let records: Vec<LogRecord> = events
            .into_iter()
            .zip(first..)
            .map(|(event, seq)| LogRecord { seq, event })
            .collect();
        inner.log.append(&records)?;
        for rec in &records {
            inner
                .state
                .apply(rec)
                .expect("planned events apply to the state they were planned on");
        }
        Ok(())
    }

    pub fn import_tasks(&self, req: &ImportRequest) -> Result<ImportResponse> {
        let mut inner = self.lock();
        let events = inner
            .state
            .plan_import(req, self.config.annotators_per_task, Utc::now())?;
        let task_ids: Vec<String> = events
            .iter()
            .map(|e| match e {
                Event::TaskCreated { task } => task.task_id.clone(),
                _ => unreachable!(),
            })
            .collect();
        if !events.is_empty() {
            Self::commit(&mut inner, events)?;
        }
        Ok(ImportResponse {
            created: task_ids.len(),
            task_ids,
        })
    }

    pub fn next_task(&self, annotator: &str) -> Result<Option<Task>> {
        let mut inner = self.lock();
        match inner
            .state
            .plan_assign(annotator, self.config.seed, Utc::now())?
        {
            Assignment::Held(t) => Ok(Some(t)),
            Assignment::NothingOpen => Ok(None),
            Assignment::Draw(ev) => {
                let Event::Assigned { task_id, .. } = &ev else {
                    unreachable!()
                };
                let task_id = task_id.clone();
                Self::commit(&mut inner, vec![ev])?;
                Ok(inner.state.task(&task_id).cloned())
            }
        }
    }

    pub fn submit(&self, req: &SubmissionRequest) -> Result<Submission> {
        let mut inner = self.lock();
        let ev = inner.state.plan_submit(req, Utc::now())?;
        let Event::Submission { submission } = &ev else {
            unreachable!()
        };
        let submission = submission.clone();
        Self::commit(&mut inner, vec![ev])?;
        Ok(submission)
    }

    pub fn review(&self, req: &ReviewRequest) -> Result<GoldenReferenceSet> {
        let mut inner = self.lock();
        let ev = inner.state.plan_review(req, Utc::now())?;
        Self::commit(&mut inner, vec![ev])?;
        Ok(inner
            .state
            .golden(&req.task_id)
            .cloned()
            .expect("reviewed task has a golden set"))
    }

    pub fn review_queue(&self) -> Vec<ReviewItem> {
        self.lock().state.review_queue()
    }

    pub fn export(&self, domain: Option<&str>) -> Vec<Sample> {
        self.lock().state.export(domain)
    }

    /// Export as JSON lines, one sample per line.
    pub fn export_jsonl(&self, domain: Option<&str>) -> String {
        let mut out = Vec::new();
        gecwork::data::write_jsonl(&mut out, &self.export(domain)).expect("writing to memory");
        String::from_utf8(out).expect("JSON is UTF-8")
    }

    pub fn annotator_report(&self) -> Result<AccuracyReport> {
        let ledger = self.lock().state.ledger();
        annotator_accuracy(&ledger).map_err(|e| ServiceError::Invalid(e.to_string()))
    }

    /// A copy of the current state.
    pub fn snapshot(&self) -> State {
        self.lock().state.clone()
    }
}
