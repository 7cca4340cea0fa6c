//! Core library for exploring the latent space of an invertible molecular
//! graph flow.
//!
//! The crate is organised bottom-up:
//!
//! * [`molgraph`] – molecular graphs, the SMILES subset, tensor conversion and
//!   post-hoc validity correction.
//! * [`flow`] – the invertible bond/atom coupling flow, its likelihood and
//!   training loop.
//! * [`latent`] – reconstructions, neighbourhood grids and interpolations.
//! * [`chem`] – circular fingerprints, Tanimoto similarity and property scores.
//! * [`optimizer`] – similarity-constrained hill climbing in latent space.
//! * [`geometry`] – 2D layout, 3D embedding, SVG depiction and xyz output.
//! * [`platform`] – checkpoints, dataset ingestion and background jobs.

pub mod chem;
pub mod flow;
pub mod geometry;
pub mod latent;
pub mod molgraph;
pub mod optimizer;
pub mod platform;

mod fnv;

pub use chem::{fingerprint, property_score, tanimoto, Fingerprint, Property, PropertyScore};
pub use geometry::{embed_3d, layout_2d, render_svg, to_xyz, Coords3D, GeometryError, Layout2D};
pub use latent::{ExplorationCell, GridSpec, Position};
pub use molgraph::{BondOrder, Element, GraphTensors, MolecularGraph};

pub use flow::{FlowConfig, FlowModel, LatentPoint, TrainReport};
pub use optimizer::{optimize, OptimizeSpec, Trajectory, TrajectoryEntry};
