//! Route handlers. Request bodies are parsed by hand so that malformed JSON
//! gets the same `{error, detail}` body as every other client error.

use std::collections::BTreeMap;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use molflow_core::chem::{Property, DEFAULT_N_BITS, DEFAULT_RADIUS};
use molflow_core::geometry::{embed_3d, layout_2d, render_svg, to_xyz};
use molflow_core::latent::{self, decode_cell, ExplorationCell, GridSpec, LatentError, Position};
use molflow_core::molgraph::{canonical_smiles, is_valid, parse_smiles, Bond};
use molflow_core::optimizer::OptimizeSpec;
use molflow_core::platform::{JobError, OptimizeJob};
use molflow_core::{fingerprint, LatentPoint, MolecularGraph};

use crate::{ApiError, AppState};

pub const MAX_GRID_STEPS: usize = 15;
pub const MAX_PATH_STEPS: usize = 64;
pub const MAX_OPT_STEPS: usize = 1000;
pub const MAX_PROPOSALS: usize = 256;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/dataset", get(dataset))
        .route("/api/render", post(render))
        .route("/api/encode", post(encode))
        .route("/api/decode", post(decode))
        .route("/api/grid", post(grid))
        .route("/api/interpolate", post(interpolate))
        .route("/api/optimize", post(optimize))
        .route("/api/jobs/{id}", get(job))
        .with_state(state)
}

fn body<T: DeserializeOwned>(bytes: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(bytes).map_err(|e| ApiError::bad_request("invalid_request", e.to_string()))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

pub fn parse_seed(smiles: &str, n_max: usize) -> Result<MolecularGraph, ApiError> {
    let g = parse_smiles(smiles).map_err(|e| ApiError::bad_request("invalid_smiles", format!("{smiles:?}: {e}")))?;
    if g.atom_count() > n_max {
        return Err(ApiError::bad_request(
            "too_many_atoms",
            format!("{smiles:?} has {} heavy atoms, the model supports at most {n_max}", g.atom_count()),
        ));
    }
    Ok(g)
}

fn latent_error(e: LatentError) -> ApiError {
    match e {
        LatentError::InvalidSpec(d) => ApiError::bad_request("invalid_spec", d),
        LatentError::Tensor(t) => ApiError::bad_request("too_many_atoms", t.to_string()),
        other => ApiError::internal(other.to_string()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub model_version: String,
    pub dim: usize,
    pub n_max: usize,
}

async fn health(State(s): State<AppState>) -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        model_version: s.model_version.clone(),
        dim: s.model.dim(),
        n_max: s.model.config().n_max,
    })
}

#[derive(Serialize)]
struct DatasetItem<'a> {
    id: usize,
    name: Option<&'a str>,
    smiles: &'a str,
}

async fn dataset(State(s): State<AppState>) -> Json<serde_json::Value> {
    let items: Vec<DatasetItem> =
        s.dataset.iter().map(|e| DatasetItem { id: e.id, name: e.name.as_deref(), smiles: &e.smiles }).collect();
    Json(serde_json::json!({ "entries": items }))
}

#[derive(Deserialize)]
struct RenderRequest {
    smiles: String,
    #[serde(default)]
    highlight: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RenderResponse {
    pub smiles: String,
    pub svg: String,
    pub xyz: String,
    pub atoms: Vec<String>,
    pub bonds: Vec<Bond>,
    pub coords2d: Vec<[f64; 2]>,
    pub coords3d: Vec<[f64; 3]>,
    pub properties: BTreeMap<String, f64>,
}

pub fn render_molecule(graph: &MolecularGraph, highlight: &[usize], comment: &str) -> Result<RenderResponse, ApiError> {
    let layout = layout_2d(graph).map_err(|e| ApiError::bad_request("invalid_smiles", e.to_string()))?;
    let coords = embed_3d(graph).map_err(|e| ApiError::internal(e.to_string()))?;
    let svg =
        render_svg(graph, &layout, highlight).map_err(|e| ApiError::bad_request("invalid_highlight", e.to_string()))?;
    let xyz = to_xyz(graph, &coords, comment).map_err(|e| ApiError::bad_request("invalid_request", e.to_string()))?;
    Ok(RenderResponse {
        smiles: canonical_smiles(graph).unwrap_or_default(),
        svg,
        xyz,
        atoms: graph.atoms().iter().map(|a| a.symbol().to_string()).collect(),
        bonds: graph.bonds().to_vec(),
        coords2d: layout.coords,
        coords3d: coords.coords,
        properties: Property::ALL.iter().map(|p| (p.name().to_string(), p.evaluate(graph))).collect(),
    })
}

async fn render(State(s): State<AppState>, bytes: Bytes) -> Result<Json<RenderResponse>, ApiError> {
    let req: RenderRequest = body(&bytes)?;
    let _ = &s;
    blocking(move || {
        // depiction has no model-size limit
        let g = parse_seed(&req.smiles, usize::MAX)?;
        let comment = req.smiles.replace(['\n', '\r'], " ");
        render_molecule(&g, &req.highlight, &comment)
    })
    .await
    .map(Json)
}

#[derive(Deserialize)]
struct SmilesRequest {
    smiles: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EncodeResponse {
    pub z: LatentPoint,
    pub reconstructed_smiles: String,
    pub similarity: f64,
}

async fn encode(State(s): State<AppState>, bytes: Bytes) -> Result<Json<EncodeResponse>, ApiError> {
    let req: SmilesRequest = body(&bytes)?;
    blocking(move || {
        let g = parse_seed(&req.smiles, s.model.config().n_max)?;
        let cell = latent::reconstruct(&s.model, &g).map_err(latent_error)?;
        Ok(EncodeResponse { z: cell.z, reconstructed_smiles: cell.smiles, similarity: cell.similarity })
    })
    .await
    .map(Json)
}

#[derive(Deserialize)]
struct DecodeRequest {
    z: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecodeResponse {
    pub smiles: String,
    pub valid: bool,
    pub corrected: bool,
    pub molecule: MolecularGraph,
}

async fn decode(State(s): State<AppState>, bytes: Bytes) -> Result<Json<DecodeResponse>, ApiError> {
    let req: DecodeRequest = body(&bytes)?;
    let dim = s.model.dim();
    if req.z.len() != dim {
        return Err(ApiError::bad_request(
            "dimension_mismatch",
            format!("z must have {dim} values, got {}", req.z.len()),
        ));
    }
    blocking(move || {
        let baseline = fingerprint(&MolecularGraph::empty(), DEFAULT_RADIUS, DEFAULT_N_BITS);
        let cell = decode_cell(&s.model, LatentPoint::new(req.z), &baseline, Position::Step { step: 0 })
            .map_err(latent_error)?;
        let valid = !cell.molecule.is_empty() && is_valid(&cell.molecule).0 && cell.molecule.is_connected();
        Ok(DecodeResponse { smiles: cell.smiles, valid, corrected: cell.corrected, molecule: cell.molecule })
    })
    .await
    .map(Json)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridRequest {
    pub smiles: String,
    #[serde(default = "default_grid_steps")]
    pub steps: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_grid_steps() -> usize {
    GridSpec::default().steps
}

fn default_delta() -> f64 {
    GridSpec::default().delta
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridResponse {
    pub cells: Vec<Vec<ExplorationCell>>,
}

pub fn run_grid(s: &AppState, req: &GridRequest) -> Result<GridResponse, ApiError> {
    if req.steps > MAX_GRID_STEPS {
        return Err(ApiError::bad_request("invalid_spec", format!("grid steps must be at most {MAX_GRID_STEPS}")));
    }
    let g = parse_seed(&req.smiles, s.model.config().n_max)?;
    let spec = GridSpec { steps: req.steps, delta: req.delta, direction_seed: req.seed };
    let cells = latent::neighborhood_grid(&s.model, &g, &spec).map_err(latent_error)?;
    Ok(GridResponse { cells })
}

async fn grid(State(s): State<AppState>, bytes: Bytes) -> Result<Json<GridResponse>, ApiError> {
    let req: GridRequest = body(&bytes)?;
    blocking(move || run_grid(&s, &req)).await.map(Json)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InterpolateRequest {
    pub from: String,
    pub to: String,
    #[serde(default = "default_path_steps")]
    pub steps: usize,
}

fn default_path_steps() -> usize {
    5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathResponse {
    pub cells: Vec<ExplorationCell>,
}

pub fn run_interpolate(s: &AppState, req: &InterpolateRequest) -> Result<PathResponse, ApiError> {
    if req.steps > MAX_PATH_STEPS {
        return Err(ApiError::bad_request("invalid_spec", format!("steps must be at most {MAX_PATH_STEPS}")));
    }
    let n_max = s.model.config().n_max;
    let a = parse_seed(&req.from, n_max)?;
    let b = parse_seed(&req.to, n_max)?;
    let cells = latent::interpolate(&s.model, &a, &b, req.steps).map_err(latent_error)?;
    Ok(PathResponse { cells })
}

async fn interpolate(State(s): State<AppState>, bytes: Bytes) -> Result<Json<PathResponse>, ApiError> {
    let req: InterpolateRequest = body(&bytes)?;
    blocking(move || run_interpolate(&s, &req)).await.map(Json)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizeRequest {
    pub smiles: String,
    #[serde(flatten)]
    pub spec: OptimizeSpecFields,
}

/// Optional optimizer fields; anything omitted takes the library default.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OptimizeSpecFields {
    pub property: Option<String>,
    pub maximize: Option<bool>,
    pub steps: Option<usize>,
    pub step_size: Option<f64>,
    pub sim_min: Option<f64>,
    pub proposals_per_step: Option<usize>,
    pub seed: Option<u64>,
}

impl OptimizeSpecFields {
    pub fn to_spec(&self) -> Result<OptimizeSpec, ApiError> {
        let d = OptimizeSpec::default();
        let spec = OptimizeSpec {
            property: self.property.clone().unwrap_or(d.property),
            maximize: self.maximize.unwrap_or(d.maximize),
            steps: self.steps.unwrap_or(d.steps),
            step_size: self.step_size.unwrap_or(d.step_size),
            sim_min: self.sim_min.unwrap_or(d.sim_min),
            proposals_per_step: self.proposals_per_step.unwrap_or(d.proposals_per_step),
            seed: self.seed.unwrap_or(d.seed),
        };
        if spec.steps > MAX_OPT_STEPS || spec.proposals_per_step > MAX_PROPOSALS {
            return Err(ApiError::bad_request(
                "invalid_spec",
                format!("steps must be at most {MAX_OPT_STEPS} and proposals_per_step at most {MAX_PROPOSALS}"),
            ));
        }
        spec.validate().map_err(|e| ApiError::bad_request("invalid_spec", e.to_string()))?;
        Ok(spec)
    }
}

async fn optimize(State(s): State<AppState>, bytes: Bytes) -> Result<Json<serde_json::Value>, ApiError> {
    let req: OptimizeRequest = body(&bytes)?;
    blocking(move || {
        let spec = req.spec.to_spec()?;
        let g = parse_seed(&req.smiles, s.model.config().n_max)?;
        let id = s.jobs.submit(s.model.clone(), g, spec).map_err(|e| match e {
            JobError::Spec(e) => ApiError::bad_request("invalid_spec", e.to_string()),
            other => ApiError::internal(other.to_string()),
        })?;
        Ok(serde_json::json!({ "job_id": id }))
    })
    .await
    .map(Json)
}

async fn job(State(s): State<AppState>, Path(id): Path<String>) -> Result<Json<OptimizeJob>, ApiError> {
    s.jobs.poll(&id).map(Json).map_err(|e| ApiError::not_found(e.to_string()))
}
