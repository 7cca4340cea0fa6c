//! Latent-space exploration: reconstructions, neighbourhood grids around a
//! seed, and linear interpolation between two seeds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chem::{fingerprint, tanimoto, Fingerprint, DEFAULT_N_BITS, DEFAULT_RADIUS};
use crate::flow::{FlowError, FlowModel, LatentPoint};
use crate::molgraph::{from_tensors, to_smiles, to_tensors, validity_correct, MolecularGraph, TensorError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatentError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("invalid exploration request: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Position {
    Grid { row: usize, col: usize },
    Step { step: usize },
}

/// A decoded latent point, ready for display.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationCell {
    pub z: LatentPoint,
    pub molecule: MolecularGraph,
    /// Empty string for the empty molecule.
    pub smiles: String,
    /// Tanimoto similarity to the cell's baseline molecule.
    pub similarity: f64,
    /// Whether validity correction changed the decoded graph.
    pub corrected: bool,
    pub position: Position,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub steps: usize,
    pub delta: f64,
    pub direction_seed: u64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { steps: 5, delta: 0.5, direction_seed: 0 }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), LatentError> {
        if self.steps == 0 || self.steps.is_multiple_of(2) {
            return Err(LatentError::InvalidSpec(format!("grid steps must be odd and ≥ 1 (got {})", self.steps)));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(LatentError::InvalidSpec(format!("grid delta must be finite and ≥ 0 (got {})", self.delta)));
        }
        Ok(())
    }
}

fn default_fingerprint(g: &MolecularGraph) -> Fingerprint {
    fingerprint(g, DEFAULT_RADIUS, DEFAULT_N_BITS)
}

pub(crate) fn smiles_or_empty(g: &MolecularGraph) -> String {
    to_smiles(g).unwrap_or_default()
}

/// Deterministic latent encoding of a graph.
pub fn encode_graph(model: &FlowModel, graph: &MolecularGraph) -> Result<LatentPoint, LatentError> {
    let t = to_tensors(graph, model.config().n_max)?;
    Ok(model.encode(&t, true, 0)?.0)
}

/// Decode, discretize and correct `z`; score it against `baseline`.
pub fn decode_cell(
    model: &FlowModel,
    z: LatentPoint,
    baseline: &Fingerprint,
    position: Position,
) -> Result<ExplorationCell, LatentError> {
    let raw = from_tensors(&model.decode(&z)?)?;
    let (molecule, corrected) = validity_correct(&raw);
    let similarity = tanimoto(&default_fingerprint(&molecule), baseline).expect("default widths match");
    Ok(ExplorationCell { smiles: smiles_or_empty(&molecule), z, molecule, similarity, corrected, position })
}

pub fn reconstruct(model: &FlowModel, graph: &MolecularGraph) -> Result<ExplorationCell, LatentError> {
    let z = encode_graph(model, graph)?;
    decode_cell(model, z, &default_fingerprint(graph), Position::Step { step: 0 })
}

/// Two orthonormal directions from a seeded Gaussian stream (Gram-Schmidt).
pub fn grid_directions(dim: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> Vec<f64> { (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect() };
    let normalize = |v: &mut Vec<f64>| {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= n);
    };
    let mut d1 = draw();
    normalize(&mut d1);
    let mut d2 = draw();
    let proj: f64 = d1.iter().zip(&d2).map(|(a, b)| a * b).sum();
    d2.iter_mut().zip(&d1).for_each(|(b, a)| *b -= proj * a);
    normalize(&mut d2);
    (d1, d2)
}

/// `steps × steps` grid around the seed's latent point. Cell `(r, c)`
/// decodes `z₀ + (r−m)·δ·d₁ + (c−m)·δ·d₂` with `m = (steps−1)/2`; every
/// similarity is measured against the seed.
pub fn neighborhood_grid(
    model: &FlowModel,
    seed_graph: &MolecularGraph,
    spec: &GridSpec,
) -> Result<Vec<Vec<ExplorationCell>>, LatentError> {
    spec.validate()?;
    let (d1, d2) = grid_directions(model.dim(), spec.direction_seed);
    neighborhood_grid_with_directions(model, seed_graph, spec.steps, spec.delta, &d1, &d2)
}

pub fn neighborhood_grid_with_directions(
    model: &FlowModel,
    seed_graph: &MolecularGraph,
    steps: usize,
    delta: f64,
    d1: &[f64],
    d2: &[f64],
) -> Result<Vec<Vec<ExplorationCell>>, LatentError> {
    GridSpec { steps, delta, direction_seed: 0 }.validate()?;
    let z0 = encode_graph(model, seed_graph)?;
    let baseline = default_fingerprint(seed_graph);
    let m = (steps as f64 - 1.0) / 2.0;
    let coords: Vec<(usize, usize)> = (0..steps).flat_map(|r| (0..steps).map(move |c| (r, c))).collect();
    let cells: Vec<ExplorationCell> = coords
        .par_iter()
        .map(|&(row, col)| {
            let a = (row as f64 - m) * delta;
            let b = (col as f64 - m) * delta;
            let z: Vec<f64> = z0.z.iter().zip(d1.iter().zip(d2)).map(|(z, (p, q))| z + (a * p + b * q)).collect();
            decode_cell(model, LatentPoint::new(z), &baseline, Position::Grid { row, col })
        })
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::with_capacity(steps);
    let mut it = cells.into_iter();
    for _ in 0..steps {
        rows.push(it.by_ref().take(steps).collect());
    }
    Ok(rows)
}

/// Linear path from `graph_a` to `graph_b`; similarities are against `graph_a`.
pub fn interpolate(
    model: &FlowModel,
    graph_a: &MolecularGraph,
    graph_b: &MolecularGraph,
    steps: usize,
) -> Result<Vec<ExplorationCell>, LatentError> {
    if steps < 2 {
        return Err(LatentError::InvalidSpec(format!("interpolation needs at least 2 steps (got {steps})")));
    }
    let za = encode_graph(model, graph_a)?;
    let zb = encode_graph(model, graph_b)?;
    let baseline = default_fingerprint(graph_a);
    (0..steps)
        .into_par_iter()
        .map(|i| {
            let lambda = i as f64 / (steps - 1) as f64;
            decode_cell(model, za.lerp(&zb, lambda), &baseline, Position::Step { step: i })
        })
        .collect()
}
