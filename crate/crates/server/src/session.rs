//! The rater session: the query set being labeled, per-item status, the
//! label store with its audit trail, and the run status shown to the rater.
//! Every mutation goes through one mutex and is written to disk before the
//! caller sees its result.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Condvar, Mutex, MutexGuard};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use alqa::active::CurvePoint;
use alqa::corpus::write_atomic;
use alqa::{AlqaError, LikertClass, Result, NUM_CLASSES};
use serde::{Deserialize, Serialize};

pub const SESSION_FORMAT_VERSION: u32 = 1;

pub const INSTRUCTIONS: &str = "\
Rate the overall diagnostic quality of each image series on a five point scale.

1  non-diagnostic: artifacts make the series unusable
2  poor: strong artifacts, findings could be missed
3  acceptable: visible artifacts that do not prevent reading
4  good: minor artifacts only
5  excellent: no visible artifacts

Scroll through all slices before scoring. Judge the series as a whole, not
its worst slice. Ghosting, aliasing, blur and noise all count. You can
change a score until the last series of the current set is scored. Series
are shown in the order the model is least sure about, so early items are
often borderline. Scores are saved immediately; you can stop at any time
and continue later.";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunState {
    /// The loop is loading or has not asked for labels yet.
    Starting,
    Labeling,
    /// The current set is complete; the model is being refitted.
    Retraining,
    Finished,
    Failed,
    Stopped,
}

impl RunState {
    pub fn is_active(self) -> bool {
        matches!(self, Self::Starting | Self::Labeling | Self::Retraining)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemStatus {
    Pending,
    Labeled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryItem {
    pub dataset_id: String,
    pub slices: usize,
    pub status: ItemStatus,
    pub class: Option<LikertClass>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub dataset_id: String,
    pub rater_id: String,
    pub class: LikertClass,
    /// Seconds since the Unix epoch.
    pub submitted_at: f64,
    pub session_id: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub format_version: u32,
    pub session_id: String,
    pub rater_id: String,
    pub run_state: RunState,
    pub message: Option<String>,
    /// 1-based number of the current query set, 0 before the first.
    pub query_number: usize,
    pub query: Vec<QueryItem>,
    /// One final record per dataset, in first-submission order.
    pub history: Vec<LabelRecord>,
    /// Records replaced by a later submission.
    pub audit: Vec<LabelRecord>,
    pub labeled: usize,
    pub unlabeled: usize,
    pub curve_point: Option<CurvePoint>,
}

impl SessionState {
    fn new(rater_id: &str) -> Self {
        Self {
            format_version: SESSION_FORMAT_VERSION,
            session_id: format!("s{:016x}", rand::random::<u64>()),
            rater_id: rater_id.to_string(),
            run_state: RunState::Starting,
            message: None,
            query_number: 0,
            query: Vec::new(),
            history: Vec::new(),
            audit: Vec::new(),
            labeled: 0,
            unlabeled: 0,
            curve_point: None,
        }
    }

    fn query_complete(&self) -> bool {
        !self.query.is_empty() && self.query.iter().all(|i| i.status == ItemStatus::Labeled)
    }

    fn progress(&self) -> (usize, usize) {
        let done = self.query.iter().filter(|i| i.status == ItemStatus::Labeled).count();
        (done, self.query.len())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ItemView {
    pub dataset_id: String,
    /// 1-based position in the query set.
    pub position: usize,
    pub query_size: usize,
    pub query_number: usize,
    pub slices: usize,
    pub slice_uris: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum NextItem {
    Item(ItemView),
    Waiting(&'static str),
    NoRun(String),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ack {
    pub dataset_id: String,
    pub class: LikertClass,
    pub overwritten: bool,
    pub labeled_in_query: usize,
    pub query_size: usize,
    pub query_complete: bool,
}

#[derive(Debug)]
pub enum SubmitError {
    InvalidClass(i64),
    NotInQuery(String),
    Storage(AlqaError),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StatusView {
    pub run_state: RunState,
    pub message: Option<String>,
    pub labeled: usize,
    pub unlabeled: usize,
    pub curve_point: Option<CurvePoint>,
    pub query_number: usize,
    pub query_labeled: usize,
    pub query_size: usize,
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

pub struct SessionStore {
    path: PathBuf,
    state: Mutex<SessionState>,
    changed: Condvar,
    shutdown: AtomicBool,
}

impl SessionStore {
    /// Opens the session at `path`, or starts a new one. A reopened session
    /// keeps its query set and labels; the run state goes back to starting
    /// until the loop asks again.
    pub fn open(path: &Path, rater_id: &str) -> Result<Self> {
        let state = if path.exists() {
            let mut s: SessionState = serde_json::from_slice(&fs::read(path)?).map_err(|e| AlqaError::Corrupt {
                path: path.to_path_buf(),
                reason: e.to_string(),
            })?;
            if s.format_version != SESSION_FORMAT_VERSION {
                return Err(AlqaError::VersionMismatch {
                    expected: SESSION_FORMAT_VERSION,
                    found: s.format_version,
                });
            }
            if s.run_state != RunState::Finished {
                s.run_state = RunState::Starting;
                s.message = None;
            }
            s
        } else {
            SessionState::new(rater_id)
        };
        let store = Self {
            path: path.to_path_buf(),
            state: Mutex::new(state),
            changed: Condvar::new(),
            shutdown: AtomicBool::new(false),
        };
        store.persist(&store.lock())?;
        Ok(store)
    }

    fn lock(&self) -> MutexGuard<'_, SessionState> {
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn persist(&self, s: &SessionState) -> Result<()> {
        write_atomic(&self.path, &serde_json::to_vec_pretty(s)?)
    }

    fn commit(&self, s: &SessionState) -> Result<()> {
        self.persist(s)?;
        self.changed.notify_all();
        Ok(())
    }

    pub fn snapshot(&self) -> SessionState {
        self.lock().clone()
    }

    /// Installs the query set the loop wants labeled. Asking again for the
    /// same ids keeps the labels already given, which is how a restarted
    /// loop picks up a half-labeled set.
    pub fn begin_query(&self, ids: &[String], slices: impl Fn(&str) -> usize) -> Result<()> {
        let mut s = self.lock();
        let same = s.query.len() == ids.len() && s.query.iter().zip(ids).all(|(item, id)| item.dataset_id == *id);
        if !same {
            s.query = ids
                .iter()
                .map(|id| QueryItem {
                    dataset_id: id.clone(),
                    slices: slices(id),
                    status: ItemStatus::Pending,
                    class: None,
                })
                .collect();
            s.query_number += 1;
        }
        s.run_state = if s.query_complete() { RunState::Retraining } else { RunState::Labeling };
        self.commit(&s)
    }

    /// Blocks until every item of the current set is labeled, then returns
    /// the labels in query order.
    pub fn wait_labels(&self, ids: &[String]) -> Result<Vec<LikertClass>> {
        let mut s = self.lock();
        loop {
            if self.shutdown.load(Ordering::SeqCst) {
                return Err(AlqaError::Labeler("label server shutting down".into()));
            }
            if s.query.iter().map(|i| &i.dataset_id).ne(ids.iter()) {
                return Err(AlqaError::Labeler("query set replaced while waiting".into()));
            }
            if s.query_complete() {
                return s
                    .query
                    .iter()
                    .map(|i| i.class.ok_or_else(|| AlqaError::Labeler(format!("{} has no label", i.dataset_id))))
                    .collect();
            }
            s = self.changed.wait_timeout(s, Duration::from_millis(250)).unwrap_or_else(|p| p.into_inner()).0;
        }
    }

    /// Records a label for an item of the current set. The set freezes once
    /// its last item is labeled.
    pub fn submit(&self, dataset_id: &str, class: i64) -> std::result::Result<Ack, SubmitError> {
        let class = u8::try_from(class)
            .ok()
            .filter(|c| (1..=NUM_CLASSES as u8).contains(c))
            .and_then(|c| LikertClass::new(c).ok())
            .ok_or(SubmitError::InvalidClass(class))?;
        let mut s = self.lock();
        if s.run_state != RunState::Labeling {
            return Err(SubmitError::NotInQuery(dataset_id.to_string()));
        }
        let idx = s
            .query
            .iter()
            .position(|i| i.dataset_id == dataset_id)
            .ok_or_else(|| SubmitError::NotInQuery(dataset_id.to_string()))?;
        let record = LabelRecord {
            dataset_id: dataset_id.to_string(),
            rater_id: s.rater_id.clone(),
            class,
            submitted_at: now(),
            session_id: s.session_id.clone(),
        };
        let overwritten = match s.history.iter().position(|r| r.dataset_id == dataset_id) {
            Some(h) => {
                let old = std::mem::replace(&mut s.history[h], record);
                s.audit.push(old);
                true
            }
            None => {
                s.history.push(record);
                false
            }
        };
        s.query[idx].status = ItemStatus::Labeled;
        s.query[idx].class = Some(class);
        let query_complete = s.query_complete();
        if query_complete {
            s.run_state = RunState::Retraining;
        }
        let (labeled_in_query, query_size) = s.progress();
        self.commit(&s).map_err(SubmitError::Storage)?;
        Ok(Ack {
            dataset_id: dataset_id.to_string(),
            class,
            overwritten,
            labeled_in_query,
            query_size,
            query_complete,
        })
    }

    pub fn next_item(&self) -> NextItem {
        let s = self.lock();
        match s.run_state {
            RunState::Starting => NextItem::Waiting("starting"),
            RunState::Retraining => NextItem::Waiting("retraining"),
            RunState::Labeling => match s.query.iter().position(|i| i.status == ItemStatus::Pending) {
                Some(k) => {
                    let item = &s.query[k];
                    NextItem::Item(ItemView {
                        dataset_id: item.dataset_id.clone(),
                        position: k + 1,
                        query_size: s.query.len(),
                        query_number: s.query_number,
                        slices: item.slices,
                        slice_uris: (0..item.slices).map(|z| format!("/api/image/{}/{z}", item.dataset_id)).collect(),
                    })
                }
                None => NextItem::Waiting("retraining"),
            },
            RunState::Finished => NextItem::NoRun("the labeling run has finished; start a new one with `alqa serve`".into()),
            RunState::Failed | RunState::Stopped => NextItem::NoRun(format!(
                "no active labeling run ({}); restart it with `alqa serve`",
                s.message.as_deref().unwrap_or("stopped")
            )),
        }
    }

    pub fn status(&self) -> StatusView {
        let s = self.lock();
        let (query_labeled, query_size) = s.progress();
        StatusView {
            run_state: s.run_state,
            message: s.message.clone(),
            labeled: s.labeled,
            unlabeled: s.unlabeled,
            curve_point: s.curve_point.clone(),
            query_number: s.query_number,
            query_labeled,
            query_size,
        }
    }

    pub fn history(&self) -> Vec<LabelRecord> {
        self.lock().history.clone()
    }

    pub fn set_run_state(&self, state: RunState, message: Option<String>) -> Result<()> {
        let mut s = self.lock();
        s.run_state = state;
        s.message = message;
        self.commit(&s)
    }

    pub fn set_pools(&self, labeled: usize, unlabeled: usize) -> Result<()> {
        let mut s = self.lock();
        s.labeled = labeled;
        s.unlabeled = unlabeled;
        self.commit(&s)
    }

    pub fn set_curve_point(&self, point: &CurvePoint) -> Result<()> {
        let mut s = self.lock();
        s.curve_point = Some(point.clone());
        self.commit(&s)
    }

    /// Wakes any waiting labeler with an error so the loop can persist and
    /// exit.
    pub fn shut_down(&self) {
        self.shutdown.store(true, Ordering::SeqCst);
        self.changed.notify_all();
    }

    pub fn is_shut_down(&self) -> bool {
        self.shutdown.load(Ordering::SeqCst)
    }
}
