//! Chemical similarity and exactly computable property scores.

mod fingerprint;
mod properties;

pub use fingerprint::{fingerprint, tanimoto, Fingerprint, FingerprintError, DEFAULT_N_BITS, DEFAULT_RADIUS};
pub use properties::{property_score, Property, PropertyScore, UnknownProperty};

/// Tanimoto similarity of two graphs under the default fingerprint settings.
pub fn similarity(a: &crate::MolecularGraph, b: &crate::MolecularGraph) -> f64 {
    let fa = fingerprint(a, DEFAULT_RADIUS, DEFAULT_N_BITS);
    let fb = fingerprint(b, DEFAULT_RADIUS, DEFAULT_N_BITS);
    tanimoto(&fa, &fb).expect("same bit width")
}
