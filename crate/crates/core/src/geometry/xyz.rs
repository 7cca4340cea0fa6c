use std::fmt::Write;

use super::{Coords3D, GeometryError};
use crate::MolecularGraph;

/// xyz text: atom count, comment, then `SYMBOL x y z` with four decimals
/// and a period as decimal separator regardless of locale.
pub fn to_xyz(graph: &MolecularGraph, coords: &Coords3D, comment: &str) -> Result<String, GeometryError> {
    if coords.coords.len() != graph.atom_count() {
        return Err(GeometryError::LengthMismatch { expected: graph.atom_count(), got: coords.coords.len() });
    }
    if comment.contains(['\n', '\r']) {
        return Err(GeometryError::NewlineInComment);
    }
    let mut out = String::new();
    let _ = writeln!(out, "{}", graph.atom_count());
    let _ = writeln!(out, "{comment}");
    for (e, p) in graph.atoms().iter().zip(&coords.coords) {
        let _ = writeln!(out, "{} {:.4} {:.4} {:.4}", e.symbol(), p[0], p[1], p[2]);
    }
    Ok(out)
}
