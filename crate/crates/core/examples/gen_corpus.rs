//! Regenerates `data/corpus.smi`: a curated list of named small molecules
//! followed by seeded random molecules grown atom by atom.
//!
//!     cargo run -p molflow-core --example gen_corpus -- data/corpus.smi

use std::collections::BTreeSet;
use std::fmt::Write;

use molflow_core::molgraph::{canonical_smiles, is_valid, parse_smiles};
use molflow_core::{BondOrder, Element, MolecularGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NAMED: &str = include_str!("named_molecules.tsv");
const GENERATED: usize = 160;
const N_MAX: usize = 9;

fn free_valence(g: &MolecularGraph, i: usize) -> u32 {
    g.implicit_hydrogens(i)
}

fn grow(rng: &mut ChaCha8Rng) -> MolecularGraph {
    const ELEMENTS: [(Element, u32); 4] = [(Element::C, 70), (Element::N, 12), (Element::O, 13), (Element::F, 5)];
    let pick = |rng: &mut ChaCha8Rng| {
        let mut r = rng.random_range(0..100);
        for (e, w) in ELEMENTS {
            if r < w {
                return e;
            }
            r -= w;
        }
        Element::C
    };
    let target = rng.random_range(3..=N_MAX);
    let mut g = MolecularGraph::empty();
    g.add_atom(Element::C);
    while g.atom_count() < target {
        let open: Vec<usize> = (0..g.atom_count()).filter(|&i| free_valence(&g, i) > 0).collect();
        if open.is_empty() {
            break;
        }
        let at = open[rng.random_range(0..open.len())];
        let e = pick(rng);
        let max_order = free_valence(&g, at).min(e.valence() as u32).min(3);
        let order = match (max_order, rng.random_range(0..10)) {
            (m, 0) if m >= 3 => BondOrder::Triple,
            (m, 1 | 2) if m >= 2 => BondOrder::Double,
            _ => BondOrder::Single,
        };
        let new = g.add_atom(e);
        g.add_bond(at, new, order).unwrap();
    }
    // occasional ring closure between two non-adjacent atoms with spare valence
    if rng.random_range(0..3) == 0 {
        let cand: Vec<(usize, usize)> = (0..g.atom_count())
            .flat_map(|i| (i + 1..g.atom_count()).map(move |j| (i, j)))
            .filter(|&(i, j)| g.bond_between(i, j).is_none() && free_valence(&g, i) > 0 && free_valence(&g, j) > 0)
            .collect();
        if !cand.is_empty() {
            let (i, j) = cand[rng.random_range(0..cand.len())];
            g.add_bond(i, j, BondOrder::Single).unwrap();
        }
    }
    g
}

fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| "data/corpus.smi".into());
    let mut seen = BTreeSet::new();
    let mut text = String::from("# SMILES<TAB>name; C/N/O/F only, kekulized, at most 9 heavy atoms\n");
    for line in NAMED.lines().filter(|l| !l.trim().is_empty()) {
        let (smiles, name) = line.split_once('\t').expect("named line has a tab");
        let g = parse_smiles(smiles).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(g.atom_count() <= N_MAX && is_valid(&g).0 && g.is_connected(), "{name}");
        if seen.insert(canonical_smiles(&g).unwrap()) {
            let _ = writeln!(text, "{smiles}\t{name}");
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    let mut added = 0;
    while added < GENERATED {
        let g = grow(&mut rng);
        let s = canonical_smiles(&g).unwrap();
        if seen.insert(s.clone()) {
            let _ = writeln!(text, "{s}");
            added += 1;
        }
    }
    std::fs::write(&out, text).unwrap();
    eprintln!("wrote {} molecules to {out}", seen.len());
}
