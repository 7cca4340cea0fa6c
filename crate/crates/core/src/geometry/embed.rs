use super::{Coords3D, GeometryError};
use crate::fnv::fnv1a;
use crate::molgraph::{BondOrder, Element};
use crate::MolecularGraph;

const ITERATIONS: usize = 1000;
const STEP: f64 = 0.01;
const LAYOUT_SCALE: f64 = 1.5;
const REPULSION_CUTOFF: f64 = 2.5;
const DEFAULT_SINGLE: f64 = 1.50;

fn single_length(a: Element, b: Element) -> f64 {
    use Element::*;
    match (a.min(b), a.max(b)) {
        (C, C) => 1.54,
        (C, N) => 1.47,
        (C, O) => 1.43,
        (C, F) => 1.35,
        (N, N) => 1.45,
        (N, O) => 1.40,
        (O, O) => 1.48,
        _ => DEFAULT_SINGLE,
    }
}

/// Ideal bond length in ångströms.
pub fn bond_length(a: Element, b: Element, order: BondOrder) -> f64 {
    match (a, b, order) {
        (Element::C, Element::C, BondOrder::Double) => 1.34,
        (Element::C, Element::C, BondOrder::Triple) => 1.20,
        (_, _, BondOrder::Single) => single_length(a, b),
        (_, _, BondOrder::Double) => single_length(a, b) * 0.87,
        (_, _, BondOrder::Triple) => single_length(a, b) * 0.78,
    }
}

fn is_bonded(graph: &MolecularGraph) -> Vec<Vec<bool>> {
    let n = graph.atom_count();
    let mut m = vec![vec![false; n]; n];
    for b in graph.bonds() {
        m[b.i][b.j] = true;
        m[b.j][b.i] = true;
    }
    m
}

/// Harmonic bond springs `½(d − L)²` plus soft repulsion `½(2.5 − d)²` for
/// non-bonded pairs closer than 2.5 Å.
pub fn embedding_energy(graph: &MolecularGraph, coords: &Coords3D) -> f64 {
    let bonded = is_bonded(graph);
    let p = &coords.coords;
    let dist = |i: usize, j: usize| (0..3).map(|a| (p[i][a] - p[j][a]).powi(2)).sum::<f64>().sqrt();
    let mut e = 0.0;
    for b in graph.bonds() {
        let l = bond_length(graph.atoms()[b.i], graph.atoms()[b.j], b.order);
        e += 0.5 * (dist(b.i, b.j) - l).powi(2);
    }
    for (i, row) in bonded.iter().enumerate() {
        for (j, &is_bond) in row.iter().enumerate().skip(i + 1) {
            if !is_bond {
                let d = dist(i, j);
                if d < REPULSION_CUTOFF {
                    e += 0.5 * (REPULSION_CUTOFF - d).powi(2);
                }
            }
        }
    }
    e
}

pub(crate) fn initial_coords(graph: &MolecularGraph) -> Result<Coords3D, GeometryError> {
    let layout = super::layout_2d(graph)?;
    Ok(Coords3D {
        coords: layout
            .coords
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let h = fnv1a(&(i as u64).to_le_bytes()) % 1000;
                let z = 0.1 * (h as f64 / 1000.0 - 0.5);
                [LAYOUT_SCALE * p[0], LAYOUT_SCALE * p[1], z]
            })
            .collect(),
    })
}

/// Approximate heavy-atom 3D coordinates: the 2D layout scaled to 1.5 Å
/// with a small hashed z jitter (FNV-1a of the atom index as a little-endian
/// u64), relaxed by 1000 gradient steps of 0.01 on
/// [`embedding_energy`], then centred on the centroid.
pub fn embed_3d(graph: &MolecularGraph) -> Result<Coords3D, GeometryError> {
    let mut p = initial_coords(graph)?.coords;
    let n = p.len();
    let bonded = is_bonded(graph);
    let lengths: Vec<f64> =
        graph.bonds().iter().map(|b| bond_length(graph.atoms()[b.i], graph.atoms()[b.j], b.order)).collect();
    let mut grad = vec![[0.0f64; 3]; n];
    for _ in 0..ITERATIONS {
        grad.iter_mut().for_each(|g| *g = [0.0; 3]);
        let mut pair = |i: usize, j: usize, de_dd: f64, p: &[[f64; 3]], d: f64| {
            for a in 0..3 {
                let u = (p[i][a] - p[j][a]) / d;
                grad[i][a] += de_dd * u;
                grad[j][a] -= de_dd * u;
            }
        };
        for (b, &l) in graph.bonds().iter().zip(&lengths) {
            let d = (0..3).map(|a| (p[b.i][a] - p[b.j][a]).powi(2)).sum::<f64>().sqrt().max(1e-9);
            pair(b.i, b.j, d - l, &p, d);
        }
        for i in 0..n {
            for j in i + 1..n {
                if bonded[i][j] {
                    continue;
                }
                let d = (0..3).map(|a| (p[i][a] - p[j][a]).powi(2)).sum::<f64>().sqrt().max(1e-9);
                if d < REPULSION_CUTOFF {
                    pair(i, j, -(REPULSION_CUTOFF - d), &p, d);
                }
            }
        }
        for (q, g) in p.iter_mut().zip(&grad) {
            for a in 0..3 {
                q[a] -= STEP * g[a];
            }
        }
    }
    let mut centroid = [0.0; 3];
    for q in &p {
        for a in 0..3 {
            centroid[a] += q[a] / n as f64;
        }
    }
    Ok(Coords3D {
        coords: p.into_iter().map(|q| [q[0] - centroid[0], q[1] - centroid[1], q[2] - centroid[2]]).collect(),
    })
}
