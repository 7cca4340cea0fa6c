//! Affine coupling layers with hand-written backward passes.
//!
//! Both layer kinds map the transformed coordinates as `y = x·exp(s) + t`
//! with `s = S_CAP·tanh(raw/S_CAP)`, so `|s| < S_CAP` for every input.

use rand::Rng;
use rand_distr::StandardNormal;

use super::Param;

pub const S_CAP: f64 = 5.0;

#[inline]
fn squash(raw: f64) -> f64 {
    S_CAP * (raw / S_CAP).tanh()
}

/// `out = W·x + b` with `W` row-major `rows × cols`.
fn affine(w: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    let cols = x.len();
    for (r, o) in out.iter_mut().enumerate() {
        let row = &w[r * cols..(r + 1) * cols];
        *o = b[r] + row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>();
    }
}

/// `out += W·x`.
fn matvec_acc(w: &[f64], x: &[f64], out: &mut [f64]) {
    let cols = x.len();
    for (r, o) in out.iter_mut().enumerate() {
        *o += w[r * cols..(r + 1) * cols].iter().zip(x).map(|(a, v)| a * v).sum::<f64>();
    }
}

/// `out += Wᵀ·g`.
fn affine_t_acc(w: &[f64], g: &[f64], out: &mut [f64]) {
    let cols = out.len();
    for (r, &gr) in g.iter().enumerate() {
        if gr == 0.0 {
            continue;
        }
        let row = &w[r * cols..(r + 1) * cols];
        for (o, a) in out.iter_mut().zip(row) {
            *o += gr * a;
        }
    }
}

/// `gw += g ⊗ x`, `gb += g`.
fn outer_acc(gw: &mut [f64], gb: Option<&mut [f64]>, g: &[f64], x: &[f64]) {
    let cols = x.len();
    for (r, &gr) in g.iter().enumerate() {
        if gr == 0.0 {
            continue;
        }
        let row = &mut gw[r * cols..(r + 1) * cols];
        for (o, v) in row.iter_mut().zip(x) {
            *o += gr * v;
        }
    }
    if let Some(gb) = gb {
        for (o, v) in gb.iter_mut().zip(g) {
            *o += v;
        }
    }
}

fn random_param<R: Rng>(name: String, shape: Vec<usize>, fan_in: usize, rng: &mut R) -> Param {
    let len = shape.iter().product();
    let scale = 1.0 / (fan_in.max(1) as f64).sqrt();
    let data = (0..len).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
    Param { name, shape, data }
}

/// Output heads producing `s` and `t` from a hidden vector.
#[derive(Debug, Clone, PartialEq)]
struct Heads {
    scale_w: Param,
    scale_b: Param,
    shift_w: Param,
    shift_b: Param,
}

impl Heads {
    fn zeros(prefix: &str, hidden: usize, out: usize) -> Self {
        Heads {
            scale_w: Param::zeros(format!("{prefix}.scale.weight"), vec![out, hidden]),
            scale_b: Param::zeros(format!("{prefix}.scale.bias"), vec![out]),
            shift_w: Param::zeros(format!("{prefix}.shift.weight"), vec![out, hidden]),
            shift_b: Param::zeros(format!("{prefix}.shift.bias"), vec![out]),
        }
    }

    /// Returns `(s, t)`.
    fn eval(&self, h: &[f64], out: usize) -> (Vec<f64>, Vec<f64>) {
        let mut raw = vec![0.0; out];
        let mut t = vec![0.0; out];
        affine(&self.scale_w.data, &self.scale_b.data, h, &mut raw);
        affine(&self.shift_w.data, &self.shift_b.data, h, &mut t);
        (raw.into_iter().map(squash).collect(), t)
    }

    /// Accumulates head gradients; returns dL/dh.
    fn backward(&self, grads: &mut Heads, h: &[f64], s: &[f64], g_s: &[f64], g_t: &[f64]) -> Vec<f64> {
        let g_raw: Vec<f64> = g_s.iter().zip(s).map(|(g, s)| g * (1.0 - (s / S_CAP).powi(2))).collect();
        outer_acc(&mut grads.scale_w.data, Some(&mut grads.scale_b.data), &g_raw, h);
        outer_acc(&mut grads.shift_w.data, Some(&mut grads.shift_b.data), g_t, h);
        let mut g_h = vec![0.0; h.len()];
        affine_t_acc(&self.scale_w.data, &g_raw, &mut g_h);
        affine_t_acc(&self.shift_w.data, g_t, &mut g_h);
        g_h
    }

    fn params(&self) -> [&Param; 4] {
        [&self.scale_w, &self.scale_b, &self.shift_w, &self.shift_b]
    }

    fn params_mut(&mut self) -> [&mut Param; 4] {
        [&mut self.scale_w, &mut self.scale_b, &mut self.shift_w, &mut self.shift_b]
    }
}

/// Coupling over the flattened bond block. Coordinates whose index parity
/// equals `parity` are transformed; the others condition a one-hidden-layer
/// tanh network.
#[derive(Debug, Clone, PartialEq)]
pub struct BondCoupling {
    parity: usize,
    cond: Vec<usize>,
    trans: Vec<usize>,
    hidden_w: Param,
    hidden_b: Param,
    heads: Heads,
}

pub struct BondCache {
    x_trans: Vec<f64>,
    cond_vals: Vec<f64>,
    h: Vec<f64>,
    s: Vec<f64>,
}

impl BondCoupling {
    pub fn new<R: Rng>(index: usize, dim: usize, hidden: usize, rng: &mut R) -> Self {
        let parity = index % 2;
        let (trans, cond): (Vec<usize>, Vec<usize>) = (0..dim).partition(|i| i % 2 == parity);
        let prefix = format!("bond.{index}");
        BondCoupling {
            parity,
            hidden_w: random_param(format!("{prefix}.hidden.weight"), vec![hidden, cond.len()], cond.len(), rng),
            hidden_b: Param::zeros(format!("{prefix}.hidden.bias"), vec![hidden]),
            heads: Heads::zeros(&prefix, hidden, trans.len()),
            cond,
            trans,
        }
    }

    fn hidden(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let cond_vals: Vec<f64> = self.cond.iter().map(|&i| x[i]).collect();
        let mut h = vec![0.0; self.hidden_b.data.len()];
        affine(&self.hidden_w.data, &self.hidden_b.data, &cond_vals, &mut h);
        h.iter_mut().for_each(|v| *v = v.tanh());
        (cond_vals, h)
    }

    /// In place; returns the layer's log-determinant.
    pub fn forward(&self, x: &mut [f64], cache: Option<&mut Option<BondCache>>) -> f64 {
        let (cond_vals, h) = self.hidden(x);
        let (s, t) = self.heads.eval(&h, self.trans.len());
        let x_trans: Vec<f64> = self.trans.iter().map(|&i| x[i]).collect();
        for (n, &i) in self.trans.iter().enumerate() {
            x[i] = x_trans[n] * s[n].exp() + t[n];
        }
        let logdet = s.iter().sum();
        if let Some(slot) = cache {
            *slot = Some(BondCache { x_trans, cond_vals, h, s });
        }
        logdet
    }

    pub fn inverse(&self, y: &mut [f64]) {
        let (_, h) = self.hidden(y);
        let (s, t) = self.heads.eval(&h, self.trans.len());
        for (n, &i) in self.trans.iter().enumerate() {
            y[i] = (y[i] - t[n]) * (-s[n]).exp();
        }
    }

    /// `g` holds dL/dy on entry and dL/dx on return. The loss includes
    /// `-logdet`, whose gradient is folded in here.
    pub fn backward(&self, cache: &BondCache, g: &mut [f64], grads: &mut BondCoupling) {
        let n_t = self.trans.len();
        let mut g_s = vec![0.0; n_t];
        let mut g_t = vec![0.0; n_t];
        for (n, &i) in self.trans.iter().enumerate() {
            let e = cache.s[n].exp();
            let gy = g[i];
            g_t[n] = gy;
            g_s[n] = gy * cache.x_trans[n] * e - 1.0;
            g[i] = gy * e;
        }
        let g_h = self.heads.backward(&mut grads.heads, &cache.h, &cache.s, &g_s, &g_t);
        let g_pre: Vec<f64> = g_h.iter().zip(&cache.h).map(|(g, h)| g * (1.0 - h * h)).collect();
        outer_acc(&mut grads.hidden_w.data, Some(&mut grads.hidden_b.data), &g_pre, &cache.cond_vals);
        let mut g_cond = vec![0.0; self.cond.len()];
        affine_t_acc(&self.hidden_w.data, &g_pre, &mut g_cond);
        for (n, &i) in self.cond.iter().enumerate() {
            g[i] += g_cond[n];
        }
    }

    /// Largest |s| produced for this input (for the boundedness invariant).
    pub fn max_abs_scale(&self, x: &[f64]) -> f64 {
        let (_, h) = self.hidden(x);
        let (s, _) = self.heads.eval(&h, self.trans.len());
        s.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn params(&self) -> Vec<&Param> {
        let mut v = vec![&self.hidden_w, &self.hidden_b];
        v.extend(self.heads.params());
        v
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = vec![&mut self.hidden_w, &mut self.hidden_b];
        v.extend(self.heads.params_mut());
        v
    }
}

/// Bond-derived conditioning for the atom flow, computed once per molecule.
pub struct Adjacency {
    n: usize,
    /// Per bond channel, row-normalized adjacency `n × n`.
    norm: Vec<Vec<f64>>,
    /// Per atom, count of incident bonds in each bond channel.
    degree: Vec<Vec<f64>>,
}

impl Adjacency {
    /// `bonds` is a one-hot `c × n × n` tensor whose last channel is no-bond.
    pub fn from_one_hot(bonds: &[f64], n: usize, c: usize) -> Self {
        let bond_channels = c.saturating_sub(1);
        let at = |ch: usize, i: usize, j: usize| bonds[(ch * n + i) * n + j];
        let degree: Vec<Vec<f64>> =
            (0..n).map(|i| (0..bond_channels).map(|ch| (0..n).map(|j| at(ch, i, j)).sum()).collect()).collect();
        let norm = (0..bond_channels)
            .map(|ch| {
                let mut m = vec![0.0; n * n];
                for i in 0..n {
                    let total: f64 = degree[i].iter().sum();
                    let inv = 1.0 / total.max(1.0);
                    for j in 0..n {
                        m[i * n + j] = at(ch, i, j) * inv;
                    }
                }
                m
            })
            .collect();
        Adjacency { n, norm, degree }
    }
}

/// Graph-conditional coupling over atom rows. Rows whose index parity equals
/// `parity` are transformed using one round of adjacency-weighted averaging
/// of the remaining (conditioning) rows, per bond channel, plus the row's own
/// per-channel bond counts.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomCoupling {
    parity: usize,
    k: usize,
    msg_w: Vec<Param>,
    degree_w: Param,
    hidden_b: Param,
    heads: Heads,
}

struct RowCache {
    row: usize,
    x_row: Vec<f64>,
    /// Neighbour aggregate per bond channel.
    aggs: Vec<Vec<f64>>,
    h: Vec<f64>,
    s: Vec<f64>,
}

pub struct AtomCache {
    rows: Vec<RowCache>,
}

impl AtomCoupling {
    pub fn new<R: Rng>(index: usize, k: usize, c: usize, hidden: usize, rng: &mut R) -> Self {
        let bond_channels = c.saturating_sub(1);
        let prefix = format!("atom.{index}");
        let fan_in = k * bond_channels + bond_channels;
        AtomCoupling {
            parity: index % 2,
            k,
            msg_w: (0..bond_channels)
                .map(|ch| random_param(format!("{prefix}.message.{ch}.weight"), vec![hidden, k], fan_in, rng))
                .collect(),
            degree_w: random_param(format!("{prefix}.degree.weight"), vec![hidden, bond_channels], fan_in, rng),
            hidden_b: Param::zeros(format!("{prefix}.hidden.bias"), vec![hidden]),
            heads: Heads::zeros(&prefix, hidden, k),
        }
    }

    fn row_hidden(&self, x: &[f64], adj: &Adjacency, row: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let (n, k) = (adj.n, self.k);
        let mut pre = self.hidden_b.data.clone();
        let mut aggs = Vec::with_capacity(self.msg_w.len());
        for (ch, w) in self.msg_w.iter().enumerate() {
            let mut agg = vec![0.0; k];
            for j in (0..n).filter(|j| j % 2 != self.parity) {
                let a = adj.norm[ch][row * n + j];
                if a != 0.0 {
                    for (o, v) in agg.iter_mut().zip(&x[j * k..(j + 1) * k]) {
                        *o += a * v;
                    }
                }
            }
            matvec_acc(&w.data, &agg, &mut pre);
            aggs.push(agg);
        }
        matvec_acc(&self.degree_w.data, &adj.degree[row], &mut pre);
        (aggs, pre.into_iter().map(f64::tanh).collect())
    }

    fn rows(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        (0..n).filter(move |i| i % 2 == self.parity)
    }

    pub fn forward(&self, x: &mut [f64], adj: &Adjacency, cache: Option<&mut Option<AtomCache>>) -> f64 {
        let k = self.k;
        // conditioning rows are untouched, so every row's hidden state can
        // be computed from x before any transformed row is overwritten.
        let mut logdet = 0.0;
        let mut rows = Vec::new();
        let evaluated: Vec<_> = self.rows(adj.n).map(|r| (r, self.row_hidden(x, adj, r))).collect();
        for (r, (aggs, h)) in evaluated {
            let (s, t) = self.heads.eval(&h, k);
            let x_row = x[r * k..(r + 1) * k].to_vec();
            for c in 0..k {
                x[r * k + c] = x_row[c] * s[c].exp() + t[c];
            }
            logdet += s.iter().sum::<f64>();
            rows.push(RowCache { row: r, x_row, aggs, h, s });
        }
        if let Some(slot) = cache {
            *slot = Some(AtomCache { rows });
        }
        logdet
    }

    pub fn inverse(&self, y: &mut [f64], adj: &Adjacency) {
        let k = self.k;
        let evaluated: Vec<_> = self.rows(adj.n).map(|r| (r, self.row_hidden(y, adj, r).1)).collect();
        for (r, h) in evaluated {
            let (s, t) = self.heads.eval(&h, k);
            for c in 0..k {
                y[r * k + c] = (y[r * k + c] - t[c]) * (-s[c]).exp();
            }
        }
    }

    pub fn backward(&self, cache: &AtomCache, g: &mut [f64], adj: &Adjacency, grads: &mut AtomCoupling) {
        let (n, k) = (adj.n, self.k);
        let mut g_cond = vec![0.0; n * k];
        for RowCache { row: r, x_row, aggs, h, s } in &cache.rows {
            let r = *r;
            let mut g_s = vec![0.0; k];
            let mut g_t = vec![0.0; k];
            for c in 0..k {
                let e = s[c].exp();
                let gy = g[r * k + c];
                g_t[c] = gy;
                g_s[c] = gy * x_row[c] * e - 1.0;
                g[r * k + c] = gy * e;
            }
            let g_h = self.heads.backward(&mut grads.heads, h, s, &g_s, &g_t);
            let g_pre: Vec<f64> = g_h.iter().zip(h).map(|(g, h)| g * (1.0 - h * h)).collect();
            for (b, gb) in grads.hidden_b.data.iter_mut().zip(&g_pre) {
                *b += gb;
            }
            outer_acc(&mut grads.degree_w.data, None, &g_pre, &adj.degree[r]);
            for (ch, w) in self.msg_w.iter().enumerate() {
                outer_acc(&mut grads.msg_w[ch].data, None, &g_pre, &aggs[ch]);
                let mut g_agg = vec![0.0; k];
                affine_t_acc(&w.data, &g_pre, &mut g_agg);
                for j in (0..n).filter(|j| j % 2 != self.parity) {
                    let a = adj.norm[ch][r * n + j];
                    if a != 0.0 {
                        for c in 0..k {
                            g_cond[j * k + c] += a * g_agg[c];
                        }
                    }
                }
            }
        }
        for j in (0..n).filter(|j| j % 2 != self.parity) {
            for c in 0..k {
                g[j * k + c] += g_cond[j * k + c];
            }
        }
    }

    pub fn max_abs_scale(&self, x: &[f64], adj: &Adjacency) -> f64 {
        self.rows(adj.n)
            .map(|r| {
                let (_, h) = self.row_hidden(x, adj, r);
                let (s, _) = self.heads.eval(&h, self.k);
                s.iter().fold(0.0f64, |m, v| m.max(v.abs()))
            })
            .fold(0.0, f64::max)
    }

    pub fn params(&self) -> Vec<&Param> {
        let mut v: Vec<&Param> = self.msg_w.iter().collect();
        v.push(&self.degree_w);
        v.push(&self.hidden_b);
        v.extend(self.heads.params());
        v
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v: Vec<&mut Param> = self.msg_w.iter_mut().collect();
        v.push(&mut self.degree_w);
        v.push(&mut self.hidden_b);
        v.extend(self.heads.params_mut());
        v
    }
}
