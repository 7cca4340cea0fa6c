//! Depiction and coordinates: force-directed 2D layout, approximate 3D
//! embedding, SVG rendering and xyz output. All outputs are deterministic.
//!
//! Only heavy atoms get coordinates; implicit hydrogens are never placed.

mod embed;
mod layout;
mod svg;
mod xyz;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use embed::{bond_length, embed_3d, embedding_energy};
pub use layout::{layout_2d, REPULSION};
pub use svg::{render_panel_svg, render_svg, PanelCell};
pub use xyz::to_xyz;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Layout2D {
    pub coords: Vec<[f64; 2]>,
}

/// Per-atom Cartesian coordinates in ångströms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Coords3D {
    pub coords: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("cannot lay out an empty graph")]
    Empty,
    #[error("expected {expected} coordinates, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("xyz comment line must not contain a newline")]
    NewlineInComment,
    #[error("highlighted atom {0} does not exist")]
    HighlightOutOfRange(usize),
}
