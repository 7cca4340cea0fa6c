#![allow(dead_code)]

/// log|det M| by LU decomposition with partial pivoting.
#[allow(clippy::needless_range_loop)]
pub fn log_abs_det(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut acc = 0.0;
    for col in 0..n {
        let pivot = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).unwrap();
        m.swap(col, pivot);
        let p = m[col][col];
        assert!(p != 0.0, "singular jacobian");
        acc += p.abs().ln();
        for row in col + 1..n {
            let f = m[row][col] / p;
            for c in col..n {
                m[row][c] -= f * m[col][c];
            }
        }
    }
    acc
}

/// Central-difference Jacobian of `f` at `x`: `J[i][j] = ∂f_i/∂x_j`.
pub fn fd_jacobian(f: impl Fn(&[f64]) -> Vec<f64>, x: &[f64], h: f64) -> Vec<Vec<f64>> {
    let n_out = f(x).len();
    let mut jac = vec![vec![0.0; x.len()]; n_out];
    for j in 0..x.len() {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        let (fp, fm) = (f(&xp), f(&xm));
        for i in 0..n_out {
            jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}

use molflow_core::molgraph::{BondOrder, Element, MolecularGraph};

/// Grow a valence-respecting connected molecule. Each step is
/// `(element, attach point, bond order)`, reduced modulo what is feasible;
/// `ring` optionally closes a single bond between two non-adjacent atoms.
pub fn grow_molecule(steps: &[(u8, u16, u8)], ring: Option<(u16, u16)>) -> MolecularGraph {
    const ELEMENTS: [Element; 4] = [Element::C, Element::N, Element::O, Element::F];
    let mut g = MolecularGraph::empty();
    g.add_atom(Element::C);
    for &(e, at, order) in steps {
        let open: Vec<usize> = (0..g.atom_count()).filter(|&i| g.implicit_hydrogens(i) > 0).collect();
        if open.is_empty() {
            break;
        }
        let at = open[at as usize % open.len()];
        let element = ELEMENTS[e as usize % 4];
        let max = g.implicit_hydrogens(at).min(element.valence() as u32).min(3);
        let order = BondOrder::from_value(1 + (order as u32 % max) as u8).unwrap();
        let new = g.add_atom(element);
        g.add_bond(at, new, order).unwrap();
    }
    if let Some((a, b)) = ring {
        let n = g.atom_count();
        let (a, b) = (a as usize % n, b as usize % n);
        if a != b && g.bond_between(a, b).is_none() && g.implicit_hydrogens(a) > 0 && g.implicit_hydrogens(b) > 0 {
            g.add_bond(a, b, BondOrder::Single).unwrap();
        }
    }
    g
}

/// Corpus SMILES strings in file order.
pub fn corpus() -> Vec<String> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/corpus.smi");
    molflow_core::platform::ingest_dataset(path.as_ref(), 9)
        .expect("corpus readable")
        .entries
        .into_iter()
        .map(|e| e.smiles)
        .collect()
}

/// Fisher-Yates permutation driven by a splitmix64 stream.
pub fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut state = seed;
    let mut next = || {
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    };
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        p.swap(i, (next() % (i as u64 + 1)) as usize);
    }
    p
}

/// Bond block with every pair set to no-bond except `edges` `(i, j, channel)`.
pub fn one_hot_bonds(n: usize, c: usize, edges: &[(usize, usize, usize)]) -> Vec<f64> {
    let none = c - 1;
    let mut b = vec![0.0; c * n * n];
    for i in 0..n {
        for j in 0..n {
            b[(none * n + i) * n + j] = 1.0;
        }
    }
    for &(i, j, ch) in edges {
        for (a, z) in [(i, j), (j, i)] {
            b[(none * n + a) * n + z] = 0.0;
            b[(ch * n + a) * n + z] = 1.0;
        }
    }
    b
}
