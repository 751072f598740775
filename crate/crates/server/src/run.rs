//! Wiring of the live loop to the label server: a labeler that waits on the
//! session, an observer that publishes progress, and the serve entry point.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::thread::{self, JoinHandle};

use alqa::active::{run_loop, ActiveLearningConfig, CurvePoint, Labeler, LearningCurve, LoopObserver, LoopState, Strategy};
use alqa::pipeline::DatasetFeatures;
use alqa::{AlqaError, LikertClass, Result, TestCaseDatabase};

use crate::api::{router, AppState};
use crate::session::{RunState, SessionStore};

/// Hands each query set to the rater and blocks until it is fully labeled.
pub struct ServerLabeler {
    pub store: Arc<SessionStore>,
    pub slices: BTreeMap<String, usize>,
}

impl Labeler for ServerLabeler {
    fn label(&mut self, ids: &[String]) -> Result<Vec<LikertClass>> {
        self.store.begin_query(ids, |id| self.slices.get(id).copied().unwrap_or(0))?;
        self.store.wait_labels(ids)
    }
}

pub struct StatusObserver {
    pub store: Arc<SessionStore>,
    pub pool_size: usize,
}

impl LoopObserver for StatusObserver {
    fn on_point(&mut self, point: &CurvePoint) {
        let updated = self
            .store
            .set_curve_point(point)
            .and_then(|_| self.store.set_pools(point.labeled, self.pool_size.saturating_sub(point.labeled)));
        if let Err(e) = updated {
            log::warn!("could not record curve point: {e}");
        }
    }
}

pub const STATE_FILE: &str = "loop_state.json";
pub const SESSION_FILE: &str = "session.json";
pub const CURVE_FILE: &str = "curve.csv";

/// Runs the uncertainty loop on its own thread with the server labeler.
/// The loop state lives in `work_dir`, so a restarted process resumes it.
pub fn spawn_loop(
    mut db: TestCaseDatabase,
    features: DatasetFeatures,
    cfg: ActiveLearningConfig,
    store: Arc<SessionStore>,
    work_dir: PathBuf,
) -> JoinHandle<Result<LearningCurve>> {
    thread::spawn(move || {
        let state_path = work_dir.join(STATE_FILE);
        let pool = db.splits.train.len();
        let done = LoopState::load(&state_path).map(|s| s.labeled.len()).unwrap_or(0);
        store.set_pools(done, pool.saturating_sub(done))?;
        let mut labeler = ServerLabeler {
            store: store.clone(),
            slices: db.volumes.iter().map(|(id, v)| (id.clone(), v.depth())).collect(),
        };
        // the loop works on features; pixels are only needed for rendering
        db.volumes.clear();
        let mut observer = StatusObserver {
            store: store.clone(),
            pool_size: pool,
        };
        let result = run_loop(&mut db, &features, &cfg, Strategy::Uncertainty, &mut labeler, Some(&state_path), &mut observer);
        match &result {
            Ok(curve) => {
                curve.write_csv(&work_dir.join(CURVE_FILE))?;
                store.set_run_state(RunState::Finished, None)?;
            }
            Err(_) if store.is_shut_down() => store.set_run_state(RunState::Stopped, Some("server stopped".into()))?,
            Err(e) => {
                log::error!("labeling loop failed: {e}");
                store.set_run_state(RunState::Failed, Some(e.to_string()))?;
            }
        }
        result
    })
}

pub struct ServeOptions {
    pub work_dir: PathBuf,
    pub bind: String,
    pub token: String,
    pub rater_id: String,
}

/// Serves the API until ctrl-c while the loop runs in the background. The
/// bound address is printed on stdout as `listening on http://ADDR`.
pub fn serve(db: TestCaseDatabase, features: DatasetFeatures, cfg: ActiveLearningConfig, opts: &ServeOptions) -> Result<()> {
    if db.splits.train.is_empty() || db.splits.test.is_empty() {
        return Err(AlqaError::Parameter("the database has no train/test split".into()));
    }
    std::fs::create_dir_all(&opts.work_dir)?;
    let store = Arc::new(SessionStore::open(&session_path(&opts.work_dir), &opts.rater_id)?);
    let app = AppState {
        store: store.clone(),
        volumes: Arc::new(db.volumes.clone()),
        token: opts.token.as_str().into(),
    };
    let handle = spawn_loop(db, features, cfg, store.clone(), opts.work_dir.clone());

    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    let served = runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(&opts.bind).await?;
        println!("listening on http://{}", listener.local_addr()?);
        std::io::stdout().flush()?;
        axum::serve(listener, router(app))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
    });
    store.shut_down();
    let looped = handle.join().map_err(|_| AlqaError::Labeler("labeling loop panicked".into()))?;
    served?;
    match looped {
        Err(AlqaError::Labeler(_)) if store.is_shut_down() => Ok(()),
        other => other.map(|_| ()),
    }
}

pub fn session_path(work_dir: &Path) -> PathBuf {
    work_dir.join(SESSION_FILE)
}
