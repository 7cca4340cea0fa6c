use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::molgraph::Element;
use crate::MolecularGraph;

const HYDROGEN_MASS: f64 = 1.008;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    MolWeight,
    HeavyAtoms,
    RingCount,
    Hbd,
    Hba,
}

impl Property {
    pub const ALL: [Property; 5] =
        [Property::MolWeight, Property::HeavyAtoms, Property::RingCount, Property::Hbd, Property::Hba];

    pub fn name(self) -> &'static str {
        match self {
            Property::MolWeight => "mol_weight",
            Property::HeavyAtoms => "heavy_atoms",
            Property::RingCount => "ring_count",
            Property::Hbd => "hbd",
            Property::Hba => "hba",
        }
    }

    pub fn evaluate(self, graph: &MolecularGraph) -> f64 {
        let n = graph.atom_count();
        let is_donor_or_acceptor = |e: Element| matches!(e, Element::N | Element::O);
        match self {
            Property::MolWeight => {
                (0..n).map(|i| graph.atoms()[i].mass() + HYDROGEN_MASS * f64::from(graph.implicit_hydrogens(i))).sum()
            }
            Property::HeavyAtoms => n as f64,
            Property::RingCount => (graph.bonds().len() + graph.components().len()) as f64 - n as f64,
            Property::Hbd => (0..n)
                .filter(|&i| is_donor_or_acceptor(graph.atoms()[i]) && graph.implicit_hydrogens(i) >= 1)
                .count() as f64,
            Property::Hba => graph.atoms().iter().filter(|&&e| is_donor_or_acceptor(e)).count() as f64,
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown property {0:?} (expected one of mol_weight, heavy_atoms, ring_count, hbd, hba)")]
pub struct UnknownProperty(pub String);

impl FromStr for Property {
    type Err = UnknownProperty;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Property::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| UnknownProperty(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropertyScore {
    pub name: Property,
    pub value: f64,
}

/// Look up a property by registry name and evaluate it.
pub fn property_score(graph: &MolecularGraph, name: &str) -> Result<PropertyScore, UnknownProperty> {
    let p: Property = name.parse()?;
    Ok(PropertyScore { name: p, value: p.evaluate(graph) })
}
