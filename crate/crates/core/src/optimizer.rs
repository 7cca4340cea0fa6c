//! Similarity-constrained hill climbing in latent space: Gaussian proposals
//! around the incumbent, filtered by Tanimoto similarity to the seed, and a
//! move only on strict improvement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chem::{fingerprint, Property, UnknownProperty, DEFAULT_N_BITS, DEFAULT_RADIUS};
use crate::flow::FlowModel;
use crate::latent::{decode_cell, encode_graph, ExplorationCell, LatentError, Position};
use crate::molgraph::MolecularGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeSpec {
    pub property: String,
    pub maximize: bool,
    pub steps: usize,
    pub step_size: f64,
    pub sim_min: f64,
    pub proposals_per_step: usize,
    pub seed: u64,
}

impl Default for OptimizeSpec {
    fn default() -> Self {
        OptimizeSpec {
            property: "mol_weight".into(),
            maximize: true,
            steps: 20,
            step_size: 0.5,
            sim_min: 0.0,
            proposals_per_step: 16,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizeError {
    #[error(transparent)]
    UnknownProperty(#[from] UnknownProperty),
    #[error("invalid optimization spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Latent(#[from] LatentError),
}

impl OptimizeSpec {
    pub fn validate(&self) -> Result<Property, OptimizeError> {
        let property: Property = self.property.parse()?;
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(OptimizeError::InvalidSpec(format!("step_size must be > 0 (got {})", self.step_size)));
        }
        if !(0.0..=1.0).contains(&self.sim_min) {
            return Err(OptimizeError::InvalidSpec(format!("sim_min must lie in [0, 1] (got {})", self.sim_min)));
        }
        if self.proposals_per_step == 0 {
            return Err(OptimizeError::InvalidSpec("proposals_per_step must be ≥ 1".into()));
        }
        Ok(property)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEntry {
    pub step: usize,
    pub cell: ExplorationCell,
    pub score: f64,
    /// True when the search moved to this cell (always true for step 0).
    pub accepted: bool,
}

/// Entry 0 is the seed reconstruction, then one entry per step.
pub type Trajectory = Vec<TrajectoryEntry>;

pub fn optimize(
    model: &FlowModel,
    seed_graph: &MolecularGraph,
    spec: &OptimizeSpec,
    mut on_step: impl FnMut(&TrajectoryEntry),
) -> Result<Trajectory, OptimizeError> {
    let property = spec.validate()?;
    let baseline = fingerprint(seed_graph, DEFAULT_RADIUS, DEFAULT_N_BITS);
    let better = |a: f64, b: f64| if spec.maximize { a > b } else { a < b };

    let z0 = encode_graph(model, seed_graph)?;
    let start = decode_cell(model, z0, &baseline, Position::Step { step: 0 })?;
    let mut incumbent_score = property.evaluate(&start.molecule);
    let mut incumbent = start.clone();
    let first = TrajectoryEntry { step: 0, cell: start, score: incumbent_score, accepted: true };
    on_step(&first);
    let mut trajectory = vec![first];

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dim = model.dim();
    for step in 1..=spec.steps {
        let noise: Vec<Vec<f64>> = (0..spec.proposals_per_step)
            .map(|_| (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        let candidates: Vec<ExplorationCell> = noise
            .par_iter()
            .map(|eps| decode_cell(model, incumbent.z.offset(eps, spec.step_size), &baseline, Position::Step { step }))
            .collect::<Result<_, _>>()?;
        let mut best: Option<(ExplorationCell, f64)> = None;
        for cell in candidates.into_iter().filter(|c| c.similarity >= spec.sim_min) {
            let score = property.evaluate(&cell.molecule);
            if best.as_ref().is_none_or(|(_, s)| better(score, *s)) {
                best = Some((cell, score));
            }
        }
        let entry = match best {
            Some((cell, score)) if better(score, incumbent_score) => {
                incumbent = cell.clone();
                incumbent_score = score;
                TrajectoryEntry { step, cell, score, accepted: true }
            }
            Some((cell, score)) => TrajectoryEntry { step, cell, score, accepted: false },
            // nothing met the constraint: report the incumbent again
            None => {
                let mut cell = incumbent.clone();
                cell.position = Position::Step { step };
                TrajectoryEntry { step, cell, score: incumbent_score, accepted: false }
            }
        };
        on_step(&entry);
        trajectory.push(entry);
    }
    Ok(trajectory)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::FlowConfig;
    use crate::molgraph::parse_smiles;

    fn model() -> FlowModel {
        FlowModel::new(FlowConfig::default()).unwrap().with_random_parameters(8, 0.02)
    }

    #[test]
    fn zero_steps_is_seed_only() {
        let m = model();
        let g = parse_smiles("CCO").unwrap();
        let spec = OptimizeSpec { steps: 0, ..OptimizeSpec::default() };
        let traj = optimize(&m, &g, &spec, |_| {}).unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj[0].cell.molecule, g);
        assert!(traj[0].accepted);
    }

    #[test]
    fn callback_sees_every_entry_in_order() {
        let m = model();
        let g = parse_smiles("CCO").unwrap();
        let spec = OptimizeSpec { steps: 4, proposals_per_step: 4, ..OptimizeSpec::default() };
        let mut seen = Vec::new();
        let traj = optimize(&m, &g, &spec, |e| seen.push(e.step)).unwrap();
        assert_eq!(seen, vec![0, 1, 2, 3, 4]);
        assert_eq!(traj.len(), 5);
    }

    #[test]
    fn spec_errors() {
        let m = model();
        let g = parse_smiles("C").unwrap();
        let bad = OptimizeSpec { property: "qed".into(), ..OptimizeSpec::default() };
        assert!(matches!(optimize(&m, &g, &bad, |_| {}), Err(OptimizeError::UnknownProperty(_))));
        let bad = OptimizeSpec { step_size: 0.0, ..OptimizeSpec::default() };
        assert!(matches!(optimize(&m, &g, &bad, |_| {}), Err(OptimizeError::InvalidSpec(_))));
        let bad = OptimizeSpec { sim_min: 1.5, ..OptimizeSpec::default() };
        assert!(matches!(optimize(&m, &g, &bad, |_| {}), Err(OptimizeError::InvalidSpec(_))));
    }
}
