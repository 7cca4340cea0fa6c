//! Kekulized SMILES subset.
//!
//! ```text
//! smiles  ::= chain
//! chain   ::= atom ( bond? ( atom | ring ) | branch )*
//! branch  ::= "(" bond? chain ")"
//! ring    ::= digit                       (* "1" .. "9" *)
//! atom    ::= "C" | "N" | "O" | "F"
//! bond    ::= "-" | "=" | "#"
//! ```
//!
//! Hydrogens are implicit. Aromatic atoms, bracket atoms (charges, isotopes,
//! explicit hydrogens, stereo), `%nn` ring labels and the `.` separator are
//! rejected with [`SmilesErrorKind::Unsupported`].

use thiserror::Error;

use super::{BondOrder, Element, MolecularGraph};

/// Coarse category of a [`SmilesError`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// The string is not in the grammar.
    Syntax,
    /// The string is grammatical but describes an impossible graph.
    Semantic,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmilesErrorKind {
    #[error("empty SMILES string")]
    Empty,
    #[error("unexpected character {0:?}")]
    UnexpectedChar(char),
    #[error("element {0} is outside the C/N/O/F vocabulary")]
    UnsupportedElement(String),
    #[error("{0} is not supported")]
    Unsupported(&'static str),
    #[error("unbalanced parenthesis")]
    UnbalancedParen,
    #[error("empty branch")]
    EmptyBranch,
    #[error("branch opened before any atom")]
    BranchWithoutAtom,
    #[error("bond symbol at string start")]
    BondAtStart,
    #[error("bond symbol not followed by an atom or ring digit")]
    DanglingBond,
    #[error("two consecutive bond symbols")]
    ConsecutiveBonds,
    #[error("bond symbol before a branch")]
    BondBeforeBranch,
    #[error("ring digit before any atom")]
    RingWithoutAtom,
    #[error("ring closure {0} is never closed")]
    UnmatchedRing(u8),
    #[error("ring closure {0} has conflicting bond symbols")]
    RingBondMismatch(u8),
    #[error("duplicate bond between atoms {0} and {1}")]
    DuplicateBond(usize, usize),
    #[error("ring closure bonds atom {0} to itself")]
    SelfBond(usize),
    #[error("atom {atom} has total bond order {total}, valence is {valence}")]
    ValenceExceeded { atom: usize, total: u32, valence: u8 },
}

impl SmilesErrorKind {
    pub fn class(&self) -> ErrorClass {
        use SmilesErrorKind::*;
        match self {
            DuplicateBond(..) | SelfBond(_) | ValenceExceeded { .. } => ErrorClass::Semantic,
            _ => ErrorClass::Syntax,
        }
    }
}

/// Parse failure with the byte offset it was detected at.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} (at position {position})")]
pub struct SmilesError {
    pub position: usize,
    pub kind: SmilesErrorKind,
}

impl SmilesError {
    fn new(position: usize, kind: SmilesErrorKind) -> Self {
        Self { position, kind }
    }

    pub fn class(&self) -> ErrorClass {
        self.kind.class()
    }
}

struct OpenRing {
    atom: usize,
    bond: Option<BondOrder>,
    position: usize,
}

pub fn parse_smiles(text: &str) -> Result<MolecularGraph, SmilesError> {
    use SmilesErrorKind::*;

    if text.is_empty() {
        return Err(SmilesError::new(0, Empty));
    }
    let bytes = text.as_bytes();
    let mut graph = MolecularGraph::empty();
    let mut prev: Option<usize> = None;
    let mut pending: Option<BondOrder> = None;
    // (branch point, atom count when the branch opened, position of "(")
    let mut branches: Vec<(usize, usize, usize)> = Vec::new();
    let mut rings: [Option<OpenRing>; 10] = Default::default();

    let mut pos = 0;
    while pos < bytes.len() {
        let ch = bytes[pos];
        let err = |kind| Err(SmilesError::new(pos, kind));
        match ch {
            b'C' | b'N' | b'O' | b'F' => {
                let next = bytes.get(pos + 1).copied();
                if let Some(second @ b'a'..=b'z') = next {
                    if matches!(
                        (ch, second),
                        (b'C', b'l' | b'a' | b'o' | b'u' | b'r' | b's' | b'd' | b'e' | b'f' | b'm')
                            | (b'N', b'a' | b'e' | b'i' | b'b' | b'd' | b'p' | b'o')
                            | (b'O', b's')
                            | (b'F', b'e' | b'r' | b'l' | b'm')
                    ) {
                        let sym = String::from_utf8_lossy(&bytes[pos..pos + 2]).into_owned();
                        return err(UnsupportedElement(sym));
                    }
                }
                let element = match ch {
                    b'C' => Element::C,
                    b'N' => Element::N,
                    b'O' => Element::O,
                    _ => Element::F,
                };
                let idx = graph.add_atom(element);
                if let Some(p) = prev {
                    graph
                        .add_bond(p, idx, pending.take().unwrap_or(BondOrder::Single))
                        .expect("fresh atom cannot duplicate a bond");
                }
                prev = Some(idx);
            }
            b'-' | b'=' | b'#' => {
                if prev.is_none() {
                    return err(BondAtStart);
                }
                if pending.is_some() {
                    return err(ConsecutiveBonds);
                }
                pending = Some(match ch {
                    b'-' => BondOrder::Single,
                    b'=' => BondOrder::Double,
                    _ => BondOrder::Triple,
                });
            }
            b'(' => {
                let Some(p) = prev else {
                    return err(BranchWithoutAtom);
                };
                if pending.is_some() {
                    return err(BondBeforeBranch);
                }
                branches.push((p, graph.atom_count(), pos));
            }
            b')' => {
                let Some((p, count_at_open, _)) = branches.pop() else {
                    return err(UnbalancedParen);
                };
                if pending.is_some() {
                    return err(DanglingBond);
                }
                if graph.atom_count() == count_at_open {
                    return err(EmptyBranch);
                }
                prev = Some(p);
            }
            b'1'..=b'9' => {
                let digit = ch - b'0';
                let Some(p) = prev else {
                    return err(RingWithoutAtom);
                };
                let slot = &mut rings[digit as usize];
                match slot.take() {
                    Some(open) => {
                        let order = match (open.bond, pending.take()) {
                            (Some(a), Some(b)) if a != b => return err(RingBondMismatch(digit)),
                            (a, b) => a.or(b).unwrap_or(BondOrder::Single),
                        };
                        if open.atom == p {
                            return err(SelfBond(p));
                        }
                        if graph.bond_between(open.atom, p).is_some() {
                            return err(DuplicateBond(open.atom.min(p), open.atom.max(p)));
                        }
                        graph.add_bond(open.atom, p, order).expect("checked above");
                    }
                    None => {
                        *slot = Some(OpenRing { atom: p, bond: pending.take(), position: pos });
                    }
                }
            }
            b'0' | b'%' => return err(Unsupported("ring labels other than 1-9")),
            b'[' => return err(Unsupported("bracket atoms (charges, isotopes, explicit H, stereo)")),
            b'.' => return err(Unsupported("disconnected fragments")),
            b':' => return err(Unsupported("aromatic bonds")),
            b'/' | b'\\' | b'@' => return err(Unsupported("stereochemistry")),
            b'+' => return err(Unsupported("formal charges")),
            b'H' => return err(Unsupported("explicit hydrogens")),
            b'b' | b'c' | b'n' | b'o' | b'p' | b's' => return err(Unsupported("aromatic atoms")),
            b'A'..=b'Z' => {
                let end = if bytes.get(pos + 1).is_some_and(u8::is_ascii_lowercase) { pos + 2 } else { pos + 1 };
                let sym = String::from_utf8_lossy(&bytes[pos..end]).into_owned();
                return err(UnsupportedElement(sym));
            }
            _ => {
                let c = text[pos..].chars().next().unwrap_or('\u{fffd}');
                return err(UnexpectedChar(c));
            }
        }
        pos += 1;
    }

    let end = bytes.len();
    if pending.is_some() {
        return Err(SmilesError::new(end, DanglingBond));
    }
    if let Some(&(_, _, open_pos)) = branches.first() {
        return Err(SmilesError::new(open_pos, UnbalancedParen));
    }
    if let Some((d, open)) =
        rings.iter().enumerate().filter_map(|(d, r)| r.as_ref().map(|r| (d, r))).min_by_key(|(_, r)| r.position)
    {
        return Err(SmilesError::new(open.position, UnmatchedRing(d as u8)));
    }
    for atom in 0..graph.atom_count() {
        let total = graph.total_bond_order(atom);
        let valence = graph.atoms()[atom].valence();
        if total > u32::from(valence) {
            return Err(SmilesError::new(end, ValenceExceeded { atom, total, valence }));
        }
    }
    Ok(graph)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WriteError {
    #[error("cannot serialize an empty graph")]
    Empty,
    #[error("graph has {0} connected components")]
    Disconnected(usize),
    #[error("more than nine ring closures open at once")]
    TooManyRings,
}

/// Serialize a connected graph.
///
/// Traversal is depth-first from the atom with the smallest
/// `(degree, element rank, index)`, visiting neighbours in ascending index
/// order. Ring-closure digits are assigned in discovery order, reusing the
/// lowest free digit. Output depends on atom numbering; use
/// [`super::canonical_smiles`] for an isomorphism-invariant string.
pub fn to_smiles(graph: &MolecularGraph) -> Result<String, WriteError> {
    let n = graph.atom_count();
    if n == 0 {
        return Err(WriteError::Empty);
    }
    let comps = graph.components().len();
    if comps > 1 {
        return Err(WriteError::Disconnected(comps));
    }
    let adj = graph.adjacency();
    let start = (0..n).min_by_key(|&i| (adj[i].len(), graph.atoms()[i].rank(), i)).expect("non-empty");

    // Pass 1: spanning tree and ring-closure edges.
    let mut visited = vec![false; n];
    let mut children: Vec<Vec<(usize, BondOrder)>> = vec![Vec::new(); n];
    // (opener, closer, order) in discovery order
    let mut ring_edges: Vec<(usize, usize, BondOrder)> = Vec::new();
    let mut seen_edge = std::collections::HashSet::new();
    fn dfs(
        u: usize,
        adj: &[Vec<(usize, BondOrder)>],
        visited: &mut [bool],
        children: &mut [Vec<(usize, BondOrder)>],
        ring_edges: &mut Vec<(usize, usize, BondOrder)>,
        seen_edge: &mut std::collections::HashSet<(usize, usize)>,
    ) {
        visited[u] = true;
        for &(v, order) in &adj[u] {
            if !seen_edge.insert((u.min(v), u.max(v))) {
                continue;
            }
            if visited[v] {
                ring_edges.push((v, u, order));
            } else {
                children[u].push((v, order));
                dfs(v, adj, visited, children, ring_edges, seen_edge);
            }
        }
    }
    dfs(start, &adj, &mut visited, &mut children, &mut ring_edges, &mut seen_edge);

    let mut opens: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut closes: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (idx, &(opener, closer, _)) in ring_edges.iter().enumerate() {
        opens[opener].push(idx);
        closes[closer].push(idx);
    }

    struct Emitter<'a> {
        graph: &'a MolecularGraph,
        children: &'a [Vec<(usize, BondOrder)>],
        ring_edges: &'a [(usize, usize, BondOrder)],
        opens: &'a [Vec<usize>],
        closes: &'a [Vec<usize>],
        digit_of: Vec<Option<u8>>,
        free: [bool; 10],
        out: String,
    }

    impl Emitter<'_> {
        fn emit(&mut self, u: usize) -> Result<(), WriteError> {
            self.out.push_str(self.graph.atoms()[u].symbol());
            for &r in &self.closes[u] {
                let d = self.digit_of[r].expect("ring opened before it closes");
                let order = self.ring_edges[r].2;
                if order != BondOrder::Single {
                    self.out.push_str(order.symbol());
                }
                self.out.push(char::from(b'0' + d));
                self.free[d as usize] = true;
            }
            for &r in &self.opens[u] {
                let d = (1..=9u8).find(|&d| self.free[d as usize]).ok_or(WriteError::TooManyRings)?;
                self.free[d as usize] = false;
                self.digit_of[r] = Some(d);
                self.out.push(char::from(b'0' + d));
            }
            let kids = &self.children[u];
            for (pos, &(v, order)) in kids.iter().enumerate() {
                let last = pos + 1 == kids.len();
                if !last {
                    self.out.push('(');
                }
                if order != BondOrder::Single {
                    self.out.push_str(order.symbol());
                }
                self.emit(v)?;
                if !last {
                    self.out.push(')');
                }
            }
            Ok(())
        }
    }

    let mut free = [true; 10];
    free[0] = false;
    let mut emitter = Emitter {
        graph,
        children: &children,
        ring_edges: &ring_edges,
        opens: &opens,
        closes: &closes,
        digit_of: vec![None; ring_edges.len()],
        free,
        out: String::new(),
    };
    emitter.emit(start)?;
    Ok(emitter.out)
}
