use serde::{Deserialize, Serialize};

use super::MolecularGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValenceViolation {
    pub atom_index: usize,
    /// Total bond order minus valence, always ≥ 1.
    pub excess: u32,
}

/// Valence check; violations come back in ascending atom order.
pub fn is_valid(graph: &MolecularGraph) -> (bool, Vec<ValenceViolation>) {
    let violations: Vec<ValenceViolation> = (0..graph.atom_count())
        .filter_map(|atom| {
            let total = graph.total_bond_order(atom);
            let valence = u32::from(graph.atoms()[atom].valence());
            (total > valence).then(|| ValenceViolation { atom_index: atom, excess: total - valence })
        })
        .collect();
    (violations.is_empty(), violations)
}

/// Post-hoc repair: lower bond orders until every atom is within valence,
/// then keep the largest connected component.
///
/// Repair always works on the lowest-index violating atom and decrements its
/// highest-order bond, breaking ties towards the highest neighbour index.
/// Component ties keep the component holding the lowest atom index.
pub fn validity_correct(graph: &MolecularGraph) -> (MolecularGraph, bool) {
    let mut g = graph.clone();
    let mut corrected = false;
    loop {
        let (ok, violations) = is_valid(&g);
        if ok {
            break;
        }
        let atom = violations[0].atom_index;
        let (neighbor, order) =
            g.neighbors(atom).into_iter().max_by_key(|&(j, o)| (o, j)).expect("an over-valent atom has bonds");
        let lowered = order.decremented();
        g.set_bond_order(atom, neighbor, lowered);
        corrected = true;
    }
    let comps = g.components();
    if comps.len() > 1 {
        // components are ordered by lowest index, so max_by_key's "last max"
        // would pick the wrong tie; iterate and keep the first largest.
        let mut best = &comps[0];
        for c in &comps[1..] {
            if c.len() > best.len() {
                best = c;
            }
        }
        g = g.induced(best);
        corrected = true;
    }
    (g, corrected)
}
