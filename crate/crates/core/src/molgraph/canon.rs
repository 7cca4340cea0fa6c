//! Canonical labelling by colour refinement with exhaustive individualization.
//!
//! The canonical certificate is the lexicographically smallest relabelled
//! graph over every leaf of the individualization tree, so two graphs are
//! isomorphic iff their certificates are equal. Exponential in the worst case;
//! fine for the small molecules this crate handles.

use super::{to_smiles, BondOrder, MolecularGraph, WriteError};

type Certificate = (Vec<usize>, Vec<(usize, usize, u8)>);

fn renumber<T: Ord + Clone>(keys: &[T]) -> Vec<usize> {
    let mut uniq = keys.to_vec();
    uniq.sort();
    uniq.dedup();
    keys.iter().map(|k| uniq.binary_search(k).expect("present")).collect()
}

fn class_count(colors: &[usize]) -> usize {
    let mut c = colors.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

fn refine(colors: Vec<usize>, adj: &[Vec<(usize, BondOrder)>]) -> Vec<usize> {
    let mut colors = colors;
    loop {
        let before = class_count(&colors);
        let keys: Vec<(usize, Vec<(u8, usize)>)> = (0..colors.len())
            .map(|i| {
                let mut env: Vec<(u8, usize)> = adj[i].iter().map(|&(j, o)| (o.value(), colors[j])).collect();
                env.sort_unstable();
                (colors[i], env)
            })
            .collect();
        let next = renumber(&keys);
        if class_count(&next) == before {
            return next;
        }
        colors = next;
    }
}

fn certificate(graph: &MolecularGraph, colors: &[usize]) -> (Certificate, Vec<usize>) {
    // colors is a discrete colouring; colour value is the new index.
    let perm = colors.to_vec();
    let mut atoms = vec![0; graph.atom_count()];
    for (old, &new) in perm.iter().enumerate() {
        atoms[new] = graph.atoms()[old].rank();
    }
    let mut bonds: Vec<(usize, usize, u8)> = graph
        .bonds()
        .iter()
        .map(|b| {
            let (a, c) = (perm[b.i], perm[b.j]);
            (a.min(c), a.max(c), b.order.value())
        })
        .collect();
    bonds.sort_unstable();
    ((atoms, bonds), perm)
}

fn search(
    graph: &MolecularGraph,
    adj: &[Vec<(usize, BondOrder)>],
    colors: Vec<usize>,
    best: &mut Option<(Certificate, Vec<usize>)>,
) {
    let n = colors.len();
    let mut counts = vec![0usize; n];
    for &c in &colors {
        counts[c] += 1;
    }
    let Some(target) = (0..n).find(|&c| counts[c] > 1) else {
        let (cert, perm) = certificate(graph, &colors);
        if best.as_ref().is_none_or(|(b, _)| cert < *b) {
            *best = Some((cert, perm));
        }
        return;
    };
    for v in (0..n).filter(|&i| colors[i] == target) {
        let keys: Vec<(usize, u8)> = (0..n).map(|i| (colors[i], u8::from(i != v))).collect();
        let split = refine(renumber(&keys), adj);
        search(graph, adj, split, best);
    }
}

fn canonical_form(graph: &MolecularGraph) -> (Certificate, Vec<usize>) {
    let adj = graph.adjacency();
    let init: Vec<(usize, usize)> = (0..graph.atom_count()).map(|i| (graph.atoms()[i].rank(), adj[i].len())).collect();
    let colors = refine(renumber(&init), &adj);
    let mut best = None;
    search(graph, &adj, colors, &mut best);
    best.unwrap_or_else(|| ((Vec::new(), Vec::new()), Vec::new()))
}

/// Relabel `graph` into canonical atom order.
pub fn canonicalize(graph: &MolecularGraph) -> MolecularGraph {
    let (_, perm) = canonical_form(graph);
    graph.permuted(&perm)
}

/// SMILES of the canonical relabelling; equal strings iff isomorphic graphs.
pub fn canonical_smiles(graph: &MolecularGraph) -> Result<String, WriteError> {
    to_smiles(&canonicalize(graph))
}

pub fn is_isomorphic(a: &MolecularGraph, b: &MolecularGraph) -> bool {
    a.atom_count() == b.atom_count() && a.bonds().len() == b.bonds().len() && canonical_form(a).0 == canonical_form(b).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::parse_smiles;

    #[test]
    fn different_writings_agree() {
        let pairs = [("CCO", "OCC"), ("CC(C)O", "OC(C)C"), ("C1=CC=CC=C1", "C=1C=CC=CC=1"), ("C1CC1N", "NC1CC1")];
        for (a, b) in pairs {
            let ga = parse_smiles(a).unwrap();
            let gb = parse_smiles(b).unwrap();
            assert!(is_isomorphic(&ga, &gb), "{a} vs {b}");
            assert_eq!(canonical_smiles(&ga).unwrap(), canonical_smiles(&gb).unwrap());
        }
    }

    #[test]
    fn distinguishes_non_isomorphic() {
        let pairs = [("CCO", "COC"), ("C=CC", "CC=C=C"), ("C1CCC1C", "C1CC1CC"), ("CCCCCC", "C1CCCCC1")];
        for (a, b) in pairs {
            assert!(!is_isomorphic(&parse_smiles(a).unwrap(), &parse_smiles(b).unwrap()), "{a} vs {b}");
        }
    }

    #[test]
    fn regular_graphs_need_individualization() {
        use crate::molgraph::Element;
        let s = BondOrder::Single;
        let build = |edges: &[(usize, usize)]| {
            MolecularGraph::new(vec![Element::C; 6], edges.iter().map(|&(i, j)| (i, j, s))).unwrap()
        };
        // triangular prism and K3,3 are both 3-regular on six atoms
        let prism = build(&[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (0, 3), (1, 4), (2, 5)]);
        let k33 = build(&[(0, 3), (0, 4), (0, 5), (1, 3), (1, 4), (1, 5), (2, 3), (2, 4), (2, 5)]);
        assert!(!is_isomorphic(&prism, &k33));
        let relabelled = prism.permuted(&[4, 2, 0, 5, 1, 3]);
        assert!(is_isomorphic(&prism, &relabelled));
        assert_eq!(canonical_smiles(&prism).unwrap(), canonical_smiles(&relabelled).unwrap());
    }
}
