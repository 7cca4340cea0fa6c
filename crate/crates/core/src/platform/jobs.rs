//! In-memory store of background optimization jobs. Each job runs on its own
//! thread; every completed step is appended under the job's lock, so a poll
//! always sees whole steps.

use std::collections::HashMap;
use std::sync::{mpsc, Arc, Mutex};
use std::thread;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::FlowModel;
use crate::molgraph::MolecularGraph;
use crate::optimizer::{optimize, OptimizeError, OptimizeSpec, TrajectoryEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeJob {
    pub job_id: String,
    pub state: JobState,
    pub spec: OptimizeSpec,
    pub trajectory: Vec<TrajectoryEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_id: Option<String>,
}

impl OptimizeJob {
    fn advance(&mut self, next: JobState) {
        if next > self.state {
            self.state = next;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JobError {
    #[error("no job with id {0:?}")]
    NotFound(String),
    #[error(transparent)]
    Spec(#[from] OptimizeError),
}

type Slot = Arc<Mutex<OptimizeJob>>;

#[derive(Default, Clone)]
pub struct JobStore {
    jobs: Arc<Mutex<HashMap<String, Slot>>>,
}

impl JobStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Start an optimization in the background. Returns once the seed entry
    /// is recorded, so the first poll already has a trajectory of length one.
    pub fn submit(&self, model: Arc<FlowModel>, seed: MolecularGraph, spec: OptimizeSpec) -> Result<String, JobError> {
        spec.validate()?;
        let job_id = uuid::Uuid::new_v4().to_string();
        let slot: Slot = Arc::new(Mutex::new(OptimizeJob {
            job_id: job_id.clone(),
            state: JobState::Queued,
            spec: spec.clone(),
            trajectory: Vec::new(),
            error: None,
            error_id: None,
        }));
        self.jobs.lock().unwrap().insert(job_id.clone(), slot.clone());

        let (first_tx, first_rx) = mpsc::channel::<()>();
        thread::spawn(move || {
            slot.lock().unwrap().advance(JobState::Running);
            let mut first = Some(first_tx);
            let result = optimize(&model, &seed, &spec, |entry| {
                slot.lock().unwrap().trajectory.push(entry.clone());
                if let Some(tx) = first.take() {
                    let _ = tx.send(());
                }
            });
            let mut job = slot.lock().unwrap();
            match result {
                Ok(_) => job.advance(JobState::Done),
                Err(e) => {
                    job.error = Some(e.to_string());
                    job.error_id = Some(uuid::Uuid::new_v4().to_string());
                    job.advance(JobState::Failed);
                }
            }
        });
        // disconnects without a message if the job fails before step 0
        let _ = first_rx.recv();
        Ok(job_id)
    }

    pub fn poll(&self, job_id: &str) -> Result<OptimizeJob, JobError> {
        let slot = self.jobs.lock().unwrap().get(job_id).cloned();
        match slot {
            Some(s) => Ok(s.lock().unwrap().clone()),
            None => Err(JobError::NotFound(job_id.to_string())),
        }
    }

    pub fn len(&self) -> usize {
        self.jobs.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::FlowConfig;
    use crate::molgraph::parse_smiles;
    use std::time::{Duration, Instant};

    fn wait_done(store: &JobStore, id: &str) -> OptimizeJob {
        let start = Instant::now();
        loop {
            let job = store.poll(id).unwrap();
            if matches!(job.state, JobState::Done | JobState::Failed) || start.elapsed() > Duration::from_secs(60) {
                return job;
            }
            thread::sleep(Duration::from_millis(5));
        }
    }

    #[test]
    fn lifecycle_and_prefix_snapshots() {
        let model = Arc::new(FlowModel::new(FlowConfig::default()).unwrap().with_random_parameters(1, 0.02));
        let store = JobStore::new();
        let spec = OptimizeSpec { steps: 6, proposals_per_step: 4, ..OptimizeSpec::default() };
        let id = store.submit(model.clone(), parse_smiles("CCO").unwrap(), spec.clone()).unwrap();
        let first = store.poll(&id).unwrap();
        assert!(matches!(first.state, JobState::Running | JobState::Done));
        assert!(!first.trajectory.is_empty());

        let mut seen = vec![first];
        loop {
            let job = store.poll(&id).unwrap();
            let done = job.state == JobState::Done;
            seen.push(job);
            if done {
                break;
            }
        }
        let last = seen.last().unwrap().clone();
        assert_eq!(last.trajectory.len(), 7);
        for s in &seen {
            assert_eq!(s.trajectory[..], last.trajectory[..s.trajectory.len()]);
        }
        assert!(seen.windows(2).all(|w| w[0].state <= w[1].state));

        let direct = optimize(&model, &parse_smiles("CCO").unwrap(), &spec, |_| {}).unwrap();
        assert_eq!(direct, last.trajectory);
    }

    #[test]
    fn unknown_and_invalid() {
        let store = JobStore::new();
        assert!(matches!(store.poll("nope"), Err(JobError::NotFound(_))));
        let model = Arc::new(FlowModel::new(FlowConfig::default()).unwrap());
        let bad = OptimizeSpec { property: "logp".into(), ..OptimizeSpec::default() };
        assert!(matches!(store.submit(model.clone(), parse_smiles("C").unwrap(), bad), Err(JobError::Spec(_))));
        assert!(store.is_empty());
        // a seed that does not fit the model fails in the background
        let id = store.submit(model, parse_smiles("CCCCCCCCCC").unwrap(), OptimizeSpec::default()).unwrap();
        let job = wait_done(&store, &id);
        assert_eq!(job.state, JobState::Failed);
        assert!(job.error.is_some() && job.error_id.is_some());
    }
}
