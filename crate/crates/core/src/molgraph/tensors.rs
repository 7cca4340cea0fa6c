use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{BondOrder, Element, MolecularGraph, ATOM_CHANNELS, BOND_CHANNELS};

/// Fixed-size dense encoding of a molecule.
///
/// `atoms` is row-major `n_max × k`; channel 0 is padding, channels 1..=4 are
/// C, N, O, F. `bonds` is channel-major `c × n_max × n_max`; channels 0..=2
/// are single/double/triple and channel 3 is "no bond". The same container
/// holds arbitrary real-valued decoder output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphTensors {
    pub n_max: usize,
    pub k: usize,
    pub c: usize,
    pub atoms: Vec<f64>,
    pub bonds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TensorError {
    #[error("molecule has {atoms} atoms, tensors hold at most {n_max}")]
    TooManyAtoms { atoms: usize, n_max: usize },
    #[error("tensor shape mismatch: {0}")]
    Shape(String),
}

impl GraphTensors {
    pub fn zeros(n_max: usize, k: usize, c: usize) -> Self {
        GraphTensors { n_max, k, c, atoms: vec![0.0; n_max * k], bonds: vec![0.0; c * n_max * n_max] }
    }

    pub fn atom(&self, row: usize, channel: usize) -> f64 {
        self.atoms[row * self.k + channel]
    }

    pub fn bond(&self, channel: usize, i: usize, j: usize) -> f64 {
        self.bonds[(channel * self.n_max + i) * self.n_max + j]
    }

    pub fn bond_mut(&mut self, channel: usize, i: usize, j: usize) -> &mut f64 {
        &mut self.bonds[(channel * self.n_max + i) * self.n_max + j]
    }

    /// Total flattened dimension `n_max·k + c·n_max²`.
    pub fn dim(&self) -> usize {
        self.atoms.len() + self.bonds.len()
    }

    pub fn check_shape(&self) -> Result<(), TensorError> {
        if self.atoms.len() != self.n_max * self.k {
            return Err(TensorError::Shape(format!(
                "atom block has {} entries, expected {}×{}",
                self.atoms.len(),
                self.n_max,
                self.k
            )));
        }
        if self.bonds.len() != self.c * self.n_max * self.n_max {
            return Err(TensorError::Shape(format!(
                "bond block has {} entries, expected {}×{}×{}",
                self.bonds.len(),
                self.c,
                self.n_max,
                self.n_max
            )));
        }
        Ok(())
    }

    /// Concatenated `atoms ‖ bonds`.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        v.extend_from_slice(&self.atoms);
        v.extend_from_slice(&self.bonds);
        v
    }

    pub fn from_flat(n_max: usize, k: usize, c: usize, flat: &[f64]) -> Result<Self, TensorError> {
        let na = n_max * k;
        if flat.len() != na + c * n_max * n_max {
            return Err(TensorError::Shape(format!(
                "flat vector has {} entries, expected {}",
                flat.len(),
                na + c * n_max * n_max
            )));
        }
        Ok(GraphTensors { n_max, k, c, atoms: flat[..na].to_vec(), bonds: flat[na..].to_vec() })
    }

    /// Per-pair bond channel after symmetrization and argmax: `None` for
    /// no-bond. Works for any channel count `c ≥ 1` where channel `c-1` is
    /// "no bond" and channel `o` is bond order `o+1`.
    pub fn bond_argmax(&self, i: usize, j: usize) -> Option<usize> {
        let none = self.c - 1;
        let sym = |ch| 0.5 * (self.bond(ch, i, j) + self.bond(ch, j, i));
        let none_val = sym(none);
        let mut best: Option<(usize, f64)> = None;
        for ch in 0..none {
            let v = sym(ch);
            if v > none_val && best.is_none_or(|(_, b)| v > b) {
                best = Some((ch, v));
            }
        }
        best.map(|(ch, _)| ch)
    }

    /// Discretized one-hot bond tensor (diagonal forced to no-bond). Used as
    /// the adjacency that conditions the atom flow.
    pub fn discretized_bonds(&self) -> Vec<f64> {
        let n = self.n_max;
        let mut out = vec![0.0; self.c * n * n];
        let none = self.c - 1;
        for i in 0..n {
            for j in 0..n {
                let ch = if i == j { none } else { self.bond_argmax(i, j).unwrap_or(none) };
                out[(ch * n + i) * n + j] = 1.0;
            }
        }
        out
    }
}

pub fn to_tensors(graph: &MolecularGraph, n_max: usize) -> Result<GraphTensors, TensorError> {
    if graph.atom_count() > n_max {
        return Err(TensorError::TooManyAtoms { atoms: graph.atom_count(), n_max });
    }
    let mut t = GraphTensors::zeros(n_max, ATOM_CHANNELS, BOND_CHANNELS);
    for row in 0..n_max {
        let ch = graph.atoms().get(row).map_or(0, |e| e.channel());
        t.atoms[row * ATOM_CHANNELS + ch] = 1.0;
    }
    let none = BOND_CHANNELS - 1;
    for i in 0..n_max {
        for j in 0..n_max {
            *t.bond_mut(none, i, j) = 1.0;
        }
    }
    for b in graph.bonds() {
        for (i, j) in [(b.i, b.j), (b.j, b.i)] {
            *t.bond_mut(none, i, j) = 0.0;
            *t.bond_mut(b.order.channel(), i, j) = 1.0;
        }
    }
    Ok(t)
}

/// Discretize real-valued tensors into a graph.
///
/// Atom rows take the argmax channel (ties to the lowest channel, so padding
/// wins an all-equal row). Padding rows are dropped with their bonds. Bonds
/// are decided on the pair-symmetrized average, ties falling to no-bond and
/// then to the lowest order.
pub fn from_tensors(t: &GraphTensors) -> Result<MolecularGraph, TensorError> {
    t.check_shape()?;
    if t.k != ATOM_CHANNELS || t.c != BOND_CHANNELS {
        return Err(TensorError::Shape(format!(
            "expected {ATOM_CHANNELS} atom and {BOND_CHANNELS} bond channels, got {} and {}",
            t.k, t.c
        )));
    }
    let mut kept: Vec<usize> = Vec::new();
    let mut graph = MolecularGraph::empty();
    for row in 0..t.n_max {
        let mut best = 0;
        for ch in 1..t.k {
            if t.atom(row, ch) > t.atom(row, best) {
                best = ch;
            }
        }
        if let Some(e) = Element::from_channel(best) {
            graph.add_atom(e);
            kept.push(row);
        }
    }
    for (a, &ri) in kept.iter().enumerate() {
        for (b, &rj) in kept.iter().enumerate().skip(a + 1) {
            if let Some(ch) = t.bond_argmax(ri, rj) {
                let order = BondOrder::from_value(ch as u8 + 1).expect("three bond channels");
                graph.add_bond(a, b, order).expect("each pair visited once");
            }
        }
    }
    Ok(graph)
}
