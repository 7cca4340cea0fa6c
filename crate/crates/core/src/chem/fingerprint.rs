//! Circular (Morgan-style) fingerprints with a published hash encoding.
//!
//! Round 0 identifier of an atom is FNV-1a-64 over the ASCII string
//! `"{symbol}|{degree}|{total_bond_order}|{implicit_h}"`, e.g. `"C|1|1|3"`.
//! Round `r` identifier is FNV-1a-64 over the previous identifier as 8
//! little-endian bytes followed, for every neighbour sorted by
//! `(bond_order, neighbour_id)`, by one byte of bond order and the neighbour's
//! previous identifier as 8 little-endian bytes. Every identifier of every
//! round sets bit `id mod n_bits`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fnv::fnv1a;
use crate::MolecularGraph;

pub const DEFAULT_N_BITS: usize = 1024;
pub const DEFAULT_RADIUS: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fingerprint {
    n_bits: usize,
    radius: usize,
    words: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("fingerprint widths differ: {0} vs {1} bits")]
pub struct FingerprintError(pub usize, pub usize);

impl Fingerprint {
    pub fn new(n_bits: usize, radius: usize) -> Self {
        Fingerprint { n_bits, radius, words: vec![0; n_bits.div_ceil(64)] }
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn set(&mut self, bit: usize) {
        self.words[bit / 64] |= 1u64 << (bit % 64);
    }

    pub fn get(&self, bit: usize) -> bool {
        self.words[bit / 64] & (1u64 << (bit % 64)) != 0
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn on_bits(&self) -> Vec<usize> {
        (0..self.n_bits).filter(|&b| self.get(b)).collect()
    }
}

pub fn fingerprint(graph: &MolecularGraph, radius: usize, n_bits: usize) -> Fingerprint {
    assert!(n_bits > 0, "fingerprint needs at least one bit");
    let mut fp = Fingerprint::new(n_bits, radius);
    let adj = graph.adjacency();
    let mut ids: Vec<u64> = (0..graph.atom_count())
        .map(|i| {
            let key = format!(
                "{}|{}|{}|{}",
                graph.atoms()[i].symbol(),
                adj[i].len(),
                graph.total_bond_order(i),
                graph.implicit_hydrogens(i)
            );
            fnv1a(key.as_bytes())
        })
        .collect();
    let mark = |fp: &mut Fingerprint, ids: &[u64]| {
        for &id in ids {
            fp.set((id % n_bits as u64) as usize);
        }
    };
    mark(&mut fp, &ids);
    for _ in 0..radius {
        let next: Vec<u64> = (0..ids.len())
            .map(|i| {
                let mut env: Vec<(u8, u64)> = adj[i].iter().map(|&(j, o)| (o.value(), ids[j])).collect();
                env.sort_unstable();
                let mut bytes = Vec::with_capacity(8 + 9 * env.len());
                bytes.extend_from_slice(&ids[i].to_le_bytes());
                for (order, nid) in env {
                    bytes.push(order);
                    bytes.extend_from_slice(&nid.to_le_bytes());
                }
                fnv1a(&bytes)
            })
            .collect();
        ids = next;
        mark(&mut fp, &ids);
    }
    fp
}

/// `|a ∧ b| / |a ∨ b|`, defined as 1.0 when both are empty.
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> Result<f64, FingerprintError> {
    if a.n_bits != b.n_bits {
        return Err(FingerprintError(a.n_bits, b.n_bits));
    }
    let (mut inter, mut union) = (0u32, 0u32);
    for (x, y) in a.words.iter().zip(&b.words) {
        inter += (x & y).count_ones();
        union += (x | y).count_ones();
    }
    Ok(if union == 0 { 1.0 } else { f64::from(inter) / f64::from(union) })
}
