//! Molecular graph data model.
//!
//! Atoms are heavy atoms drawn from a four-element vocabulary; hydrogens are
//! implicit and derived from the valence table. Bonds are stored once per
//! unordered pair with `i < j`.

mod canon;
mod smiles;
mod tensors;
mod validity;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use canon::{canonical_smiles, canonicalize, is_isomorphic};
pub use smiles::{parse_smiles, to_smiles, ErrorClass, SmilesError, SmilesErrorKind, WriteError};
pub use tensors::{from_tensors, to_tensors, GraphTensors, TensorError};
pub use validity::{is_valid, validity_correct, ValenceViolation};

/// Number of atom channels in [`GraphTensors`]: padding plus four elements.
pub const ATOM_CHANNELS: usize = 5;
/// Number of bond channels in [`GraphTensors`]: single, double, triple, none.
pub const BOND_CHANNELS: usize = 4;
/// Default maximum number of heavy atoms.
pub const DEFAULT_N_MAX: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Element {
    C,
    N,
    O,
    F,
}

impl Element {
    pub const ALL: [Element; 4] = [Element::C, Element::N, Element::O, Element::F];

    pub fn symbol(self) -> &'static str {
        match self {
            Element::C => "C",
            Element::N => "N",
            Element::O => "O",
            Element::F => "F",
        }
    }

    /// Maximum total bond order.
    pub fn valence(self) -> u8 {
        match self {
            Element::C => 4,
            Element::N => 3,
            Element::O => 2,
            Element::F => 1,
        }
    }

    /// Standard atomic mass in daltons.
    pub fn mass(self) -> f64 {
        match self {
            Element::C => 12.011,
            Element::N => 14.007,
            Element::O => 15.999,
            Element::F => 18.998,
        }
    }

    /// Position in the vocabulary, used for tie-breaking and channel layout.
    pub fn rank(self) -> usize {
        self as usize
    }

    /// Atom channel in [`GraphTensors`]. Channel 0 is padding.
    pub fn channel(self) -> usize {
        self.rank() + 1
    }

    pub fn from_channel(channel: usize) -> Option<Element> {
        channel.checked_sub(1).and_then(|r| Element::ALL.get(r).copied())
    }

    pub fn from_symbol(s: &str) -> Option<Element> {
        Element::ALL.into_iter().find(|e| e.symbol() == s)
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum BondOrder {
    Single = 1,
    Double = 2,
    Triple = 3,
}

impl BondOrder {
    pub const ALL: [BondOrder; 3] = [BondOrder::Single, BondOrder::Double, BondOrder::Triple];

    pub fn value(self) -> u8 {
        self as u8
    }

    pub fn from_value(v: u8) -> Option<BondOrder> {
        match v {
            1 => Some(BondOrder::Single),
            2 => Some(BondOrder::Double),
            3 => Some(BondOrder::Triple),
            _ => None,
        }
    }

    /// Bond channel in [`GraphTensors`]; channel 3 is "no bond".
    pub fn channel(self) -> usize {
        self.value() as usize - 1
    }

    /// One order lower, or `None` when a single bond is decremented away.
    pub fn decremented(self) -> Option<BondOrder> {
        BondOrder::from_value(self.value() - 1)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BondOrder::Single => "-",
            BondOrder::Double => "=",
            BondOrder::Triple => "#",
        }
    }
}

impl From<BondOrder> for u8 {
    fn from(b: BondOrder) -> u8 {
        b.value()
    }
}

impl TryFrom<u8> for BondOrder {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, Self::Error> {
        BondOrder::from_value(v).ok_or_else(|| format!("invalid bond order {v}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Bond {
    pub i: usize,
    pub j: usize,
    pub order: BondOrder,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("bond ({0}, {1}) references an atom outside 0..{2}")]
    IndexOutOfRange(usize, usize, usize),
    #[error("self bond on atom {0}")]
    SelfBond(usize),
    #[error("duplicate bond between atoms {0} and {1}")]
    DuplicateBond(usize, usize),
}

/// Heavy-atom graph with typed, symmetric bonds.
///
/// Bonds are kept sorted by `(i, j)` with `i < j`, so two graphs built from
/// the same bond set compare equal regardless of insertion order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MolecularGraph {
    atoms: Vec<Element>,
    bonds: Vec<Bond>,
}

impl MolecularGraph {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Build a graph from atoms and `(i, j, order)` triples in any orientation.
    pub fn new(
        atoms: Vec<Element>,
        bonds: impl IntoIterator<Item = (usize, usize, BondOrder)>,
    ) -> Result<Self, GraphError> {
        let mut g = MolecularGraph { atoms, bonds: Vec::new() };
        for (i, j, order) in bonds {
            g.add_bond(i, j, order)?;
        }
        Ok(g)
    }

    pub fn add_atom(&mut self, element: Element) -> usize {
        self.atoms.push(element);
        self.atoms.len() - 1
    }

    pub fn add_bond(&mut self, a: usize, b: usize, order: BondOrder) -> Result<(), GraphError> {
        let n = self.atoms.len();
        if a >= n || b >= n {
            return Err(GraphError::IndexOutOfRange(a, b, n));
        }
        if a == b {
            return Err(GraphError::SelfBond(a));
        }
        let (i, j) = (a.min(b), a.max(b));
        match self.bonds.binary_search_by(|x| (x.i, x.j).cmp(&(i, j))) {
            Ok(_) => Err(GraphError::DuplicateBond(i, j)),
            Err(pos) => {
                self.bonds.insert(pos, Bond { i, j, order });
                Ok(())
            }
        }
    }

    pub fn atoms(&self) -> &[Element] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<BondOrder> {
        let (i, j) = (a.min(b), a.max(b));
        self.bonds.binary_search_by(|x| (x.i, x.j).cmp(&(i, j))).ok().map(|p| self.bonds[p].order)
    }

    /// Neighbours of `atom` with the connecting bond order, ascending by index.
    pub fn neighbors(&self, atom: usize) -> Vec<(usize, BondOrder)> {
        let mut out: Vec<(usize, BondOrder)> = self
            .bonds
            .iter()
            .filter_map(|b| {
                if b.i == atom {
                    Some((b.j, b.order))
                } else if b.j == atom {
                    Some((b.i, b.order))
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }

    pub fn adjacency(&self) -> Vec<Vec<(usize, BondOrder)>> {
        let mut adj = vec![Vec::new(); self.atoms.len()];
        for b in &self.bonds {
            adj[b.i].push((b.j, b.order));
            adj[b.j].push((b.i, b.order));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.bonds.iter().filter(|b| b.i == atom || b.j == atom).count()
    }

    /// Sum of incident bond orders.
    pub fn total_bond_order(&self, atom: usize) -> u32 {
        self.bonds.iter().filter(|b| b.i == atom || b.j == atom).map(|b| u32::from(b.order.value())).sum()
    }

    /// Implicit hydrogen count: valence minus total bond order, floored at 0.
    pub fn implicit_hydrogens(&self, atom: usize) -> u32 {
        u32::from(self.atoms[atom].valence()).saturating_sub(self.total_bond_order(atom))
    }

    /// Connected components as sorted atom index lists, ordered by their
    /// lowest atom index.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let adj = self.adjacency();
        let mut seen = vec![false; self.atoms.len()];
        let mut comps = Vec::new();
        for start in 0..self.atoms.len() {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                for &(v, _) in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                        stack.push(v);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// Subgraph induced by `keep` (ascending), reindexed in that order.
    pub fn induced(&self, keep: &[usize]) -> MolecularGraph {
        let mut map = vec![usize::MAX; self.atoms.len()];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let atoms = keep.iter().map(|&i| self.atoms[i]).collect();
        let bonds = self
            .bonds
            .iter()
            .filter(|b| map[b.i] != usize::MAX && map[b.j] != usize::MAX)
            .map(|b| (map[b.i], map[b.j], b.order));
        MolecularGraph::new(atoms, bonds).expect("induced subgraph of a well-formed graph")
    }

    /// Relabel atoms: new index of old atom `i` is `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> MolecularGraph {
        assert_eq!(perm.len(), self.atoms.len(), "permutation length");
        let mut atoms = vec![Element::C; self.atoms.len()];
        for (old, &new) in perm.iter().enumerate() {
            atoms[new] = self.atoms[old];
        }
        let bonds = self.bonds.iter().map(|b| (perm[b.i], perm[b.j], b.order));
        MolecularGraph::new(atoms, bonds).expect("permutation of a well-formed graph")
    }

    pub(crate) fn set_bond_order(&mut self, i: usize, j: usize, order: Option<BondOrder>) {
        let (i, j) = (i.min(j), i.max(j));
        if let Ok(pos) = self.bonds.binary_search_by(|x| (x.i, x.j).cmp(&(i, j))) {
            match order {
                Some(o) => self.bonds[pos].order = o,
                None => {
                    self.bonds.remove(pos);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bonds_are_normalized_and_sorted() {
        let g = MolecularGraph::new(
            vec![Element::C, Element::C, Element::O],
            [(2, 1, BondOrder::Single), (1, 0, BondOrder::Double)],
        )
        .unwrap();
        assert_eq!(
            g.bonds(),
            &[Bond { i: 0, j: 1, order: BondOrder::Double }, Bond { i: 1, j: 2, order: BondOrder::Single }]
        );
        assert_eq!(g.implicit_hydrogens(1), 1);
        assert_eq!(g.implicit_hydrogens(2), 1);
    }

    #[test]
    fn structural_errors() {
        let atoms = vec![Element::C, Element::C];
        assert_eq!(MolecularGraph::new(atoms.clone(), [(0, 0, BondOrder::Single)]), Err(GraphError::SelfBond(0)));
        assert_eq!(
            MolecularGraph::new(atoms.clone(), [(0, 1, BondOrder::Single), (1, 0, BondOrder::Double)]),
            Err(GraphError::DuplicateBond(0, 1))
        );
        assert!(matches!(
            MolecularGraph::new(atoms, [(0, 2, BondOrder::Single)]),
            Err(GraphError::IndexOutOfRange(0, 2, 2))
        ));
    }

    #[test]
    fn channels_round_trip() {
        for e in Element::ALL {
            assert_eq!(Element::from_channel(e.channel()), Some(e));
        }
        assert_eq!(Element::from_channel(0), None);
        assert_eq!(BondOrder::Single.decremented(), None);
        assert_eq!(BondOrder::Triple.decremented(), Some(BondOrder::Double));
    }

    #[test]
    fn components_and_induced() {
        let g = MolecularGraph::new(
            vec![Element::C, Element::O, Element::C, Element::N, Element::C],
            [(0, 2, BondOrder::Single), (1, 3, BondOrder::Single), (2, 4, BondOrder::Single)],
        )
        .unwrap();
        assert_eq!(g.components(), vec![vec![0, 2, 4], vec![1, 3]]);
        let sub = g.induced(&[0, 2, 4]);
        assert_eq!(sub.atom_count(), 3);
        assert_eq!(sub.bonds().len(), 2);
    }
}
