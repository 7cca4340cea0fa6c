//! Invertible flow over [`GraphTensors`].
//!
//! The bond block passes through a stack of affine couplings with
//! alternating even/odd coordinate masks. The atom block passes through a
//! stack of graph-conditional couplings whose networks read the (discrete)
//! bond tensor as adjacency, so atoms are modelled given bonds. Encoding
//! dequantizes the one-hot input with uniform noise on `[0, γ)`; decoding
//! inverts bonds first, discretizes them, then inverts atoms conditioned on
//! the discretized bonds.

mod coupling;
mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::molgraph::{GraphTensors, ATOM_CHANNELS, BOND_CHANNELS, DEFAULT_N_MAX};
use coupling::{Adjacency, AtomCache, AtomCoupling, BondCache, BondCoupling};

pub use coupling::S_CAP;
pub use train::{mean_bits_per_dim, train, train_with_progress, TrainError, TrainOptions, TrainReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub n_max: usize,
    pub k: usize,
    pub c: usize,
    pub n_bond_layers: usize,
    pub n_atom_layers: usize,
    pub hidden_width: usize,
    pub dequant_gamma: f64,
    pub seed: u64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            n_max: DEFAULT_N_MAX,
            k: ATOM_CHANNELS,
            c: BOND_CHANNELS,
            n_bond_layers: 8,
            n_atom_layers: 6,
            hidden_width: 64,
            dequant_gamma: 0.6,
            seed: 0,
        }
    }
}

impl FlowConfig {
    pub fn atom_dim(&self) -> usize {
        self.n_max * self.k
    }

    pub fn bond_dim(&self) -> usize {
        self.c * self.n_max * self.n_max
    }

    /// Latent dimension `n_max·k + c·n_max²`.
    pub fn dim(&self) -> usize {
        self.atom_dim() + self.bond_dim()
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        let bad = |msg: String| Err(FlowError::InvalidConfig(msg));
        if self.n_max == 0 || self.k == 0 || self.c == 0 {
            return bad(format!("n_max, k and c must be positive (got {}, {}, {})", self.n_max, self.k, self.c));
        }
        for (name, n) in [("n_bond_layers", self.n_bond_layers), ("n_atom_layers", self.n_atom_layers)] {
            if n < 2 || n % 2 != 0 {
                return bad(format!("{name} must be even and at least 2 (got {n})"));
            }
        }
        if self.hidden_width == 0 {
            return bad("hidden_width must be positive".into());
        }
        if !(self.dequant_gamma > 0.0 && self.dequant_gamma <= 1.0) {
            return bad(format!("dequant_gamma must lie in (0, 1] (got {})", self.dequant_gamma));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("invalid flow config: {0}")]
    InvalidConfig(String),
    #[error("latent dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("tensor shape does not match the model: {0}")]
    Shape(String),
    #[error("non-finite value after {stage} layer {layer}")]
    NonFinite { stage: &'static str, layer: usize },
    #[error("temperature must be non-negative (got {0})")]
    NegativeTemperature(f64),
}

/// Named parameter array.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Param {
    pub fn zeros(name: String, shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Param { name, shape, data: vec![0.0; len] }
    }
}

/// A point in the flow's latent space: atom block then bond block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatentPoint {
    pub z: Vec<f64>,
}

impl LatentPoint {
    pub fn new(z: Vec<f64>) -> Self {
        LatentPoint { z }
    }

    pub fn zeros(dim: usize) -> Self {
        LatentPoint { z: vec![0.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    pub fn is_finite(&self) -> bool {
        self.z.iter().all(|v| v.is_finite())
    }

    /// `(1-λ)·self + λ·other`.
    pub fn lerp(&self, other: &LatentPoint, lambda: f64) -> LatentPoint {
        LatentPoint { z: self.z.iter().zip(&other.z).map(|(a, b)| (1.0 - lambda) * a + lambda * b).collect() }
    }

    /// `self + scale·direction`.
    pub fn offset(&self, direction: &[f64], scale: f64) -> LatentPoint {
        LatentPoint { z: self.z.iter().zip(direction).map(|(a, d)| a + scale * d).collect() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowModel {
    config: FlowConfig,
    bond_layers: Vec<BondCoupling>,
    atom_layers: Vec<AtomCoupling>,
}

fn gaussian_log_density(z: &[f64]) -> f64 {
    let sq: f64 = z.iter().map(|v| v * v).sum();
    -0.5 * sq - 0.5 * z.len() as f64 * (2.0 * std::f64::consts::PI).ln()
}

impl FlowModel {
    /// Identity-initialized model: every coupling's scale and shift heads
    /// start at zero, so each layer is the identity map. Hidden and message
    /// weights are drawn from a ChaCha8 stream seeded with `config.seed`.
    pub fn new(config: FlowConfig) -> Result<Self, FlowError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let bond_layers = (0..config.n_bond_layers)
            .map(|l| BondCoupling::new(l, config.bond_dim(), config.hidden_width, &mut rng))
            .collect();
        let atom_layers = (0..config.n_atom_layers)
            .map(|l| AtomCoupling::new(l, config.k, config.c, config.hidden_width, &mut rng))
            .collect();
        Ok(FlowModel { config, bond_layers, atom_layers })
    }

    pub fn config(&self) -> &FlowConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.config.dim()
    }

    pub fn params(&self) -> Vec<&Param> {
        let mut v = Vec::new();
        for l in &self.bond_layers {
            v.extend(l.params());
        }
        for l in &self.atom_layers {
            v.extend(l.params());
        }
        v
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = Vec::new();
        for l in &mut self.bond_layers {
            v.extend(l.params_mut());
        }
        for l in &mut self.atom_layers {
            v.extend(l.params_mut());
        }
        v
    }

    pub fn parameter_count(&self) -> usize {
        self.params().iter().map(|p| p.data.len()).sum()
    }

    pub fn flat_parameters(&self) -> Vec<f64> {
        self.params().iter().flat_map(|p| p.data.iter().copied()).collect()
    }

    pub fn set_flat_parameters(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.parameter_count(), "flat parameter length");
        let mut offset = 0;
        for p in self.params_mut() {
            let n = p.data.len();
            p.data.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
    }

    fn zeros_like(&self) -> FlowModel {
        let mut g = self.clone();
        for p in g.params_mut() {
            p.data.iter_mut().for_each(|v| *v = 0.0);
        }
        g
    }

    /// Copy with every parameter (heads included) replaced by
    /// `scale·N(0,1)` draws from `seed`. Gives non-trivial flows for oracle
    /// tests; trained checkpoints do not need it.
    pub fn with_random_parameters(&self, seed: u64, scale: f64) -> FlowModel {
        let mut m = self.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for p in m.params_mut() {
            for v in &mut p.data {
                *v = scale * rng.sample::<f64, _>(StandardNormal);
            }
        }
        m
    }

    fn check_tensors(&self, t: &GraphTensors) -> Result<(), FlowError> {
        let c = &self.config;
        if t.n_max != c.n_max || t.k != c.k || t.c != c.c || t.check_shape().is_err() {
            return Err(FlowError::Shape(format!(
                "model expects n_max={} k={} c={}, got n_max={} k={} c={} with {}+{} entries",
                c.n_max,
                c.k,
                c.c,
                t.n_max,
                t.k,
                t.c,
                t.atoms.len(),
                t.bonds.len()
            )));
        }
        Ok(())
    }

    /// `x + u`, `u ~ U[0, γ)` per entry, or `u = γ/2` when deterministic.
    pub fn dequantize(&self, t: &GraphTensors, deterministic: bool, noise_seed: u64) -> Vec<f64> {
        let gamma = self.config.dequant_gamma;
        let mut flat = t.flatten();
        if deterministic {
            flat.iter_mut().for_each(|v| *v += 0.5 * gamma);
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
            flat.iter_mut().for_each(|v| *v += gamma * rng.random::<f64>());
        }
        flat
    }

    fn adjacency(&self, bond_block: &[f64]) -> Adjacency {
        let c = &self.config;
        let t = GraphTensors { n_max: c.n_max, k: c.k, c: c.c, atoms: Vec::new(), bonds: bond_block.to_vec() };
        Adjacency::from_one_hot(&t.discretized_bonds(), c.n_max, c.c)
    }

    fn run_forward(&self, x: &mut [f64], conditioning_bonds: &[f64]) -> Result<f64, FlowError> {
        let (atoms, bonds) = x.split_at_mut(self.config.atom_dim());
        let mut logdet = 0.0;
        for (l, layer) in self.bond_layers.iter().enumerate() {
            logdet += layer.forward(bonds, None);
            if !bonds.iter().all(|v| v.is_finite()) {
                return Err(FlowError::NonFinite { stage: "bond", layer: l });
            }
        }
        let adj = self.adjacency(conditioning_bonds);
        for (l, layer) in self.atom_layers.iter().enumerate() {
            logdet += layer.forward(atoms, &adj, None);
            if !atoms.iter().all(|v| v.is_finite()) {
                return Err(FlowError::NonFinite { stage: "atom", layer: l });
            }
        }
        Ok(logdet)
    }

    /// Push already-dequantized values through the flow. `conditioning` is
    /// the bond block (one-hot or real) whose argmax discretization
    /// conditions the atom layers. Returns `(z, logdet)`.
    pub fn transform(&self, dequantized: &[f64], conditioning: &[f64]) -> Result<(Vec<f64>, f64), FlowError> {
        if dequantized.len() != self.dim() {
            return Err(FlowError::Dimension { expected: self.dim(), got: dequantized.len() });
        }
        let mut x = dequantized.to_vec();
        let logdet = self.run_forward(&mut x, conditioning)?;
        Ok((x, logdet))
    }

    pub fn encode(
        &self,
        tensors: &GraphTensors,
        deterministic: bool,
        noise_seed: u64,
    ) -> Result<(LatentPoint, f64), FlowError> {
        self.check_tensors(tensors)?;
        let x = self.dequantize(tensors, deterministic, noise_seed);
        let (z, logdet) = self.transform(&x, &tensors.bonds)?;
        Ok((LatentPoint::new(z), logdet))
    }

    /// Inverse of [`encode`](Self::encode) up to dequantization. Returns
    /// continuous tensors; discretize with [`crate::molgraph::from_tensors`].
    pub fn decode(&self, z: &LatentPoint) -> Result<GraphTensors, FlowError> {
        if z.dim() != self.dim() {
            return Err(FlowError::Dimension { expected: self.dim(), got: z.dim() });
        }
        let cfg = &self.config;
        let mut x = z.z.clone();
        let (atoms, bonds) = x.split_at_mut(cfg.atom_dim());
        for (l, layer) in self.bond_layers.iter().enumerate().rev() {
            layer.inverse(bonds);
            if !bonds.iter().all(|v| v.is_finite()) {
                return Err(FlowError::NonFinite { stage: "bond", layer: l });
            }
        }
        let adj = self.adjacency(bonds);
        for (l, layer) in self.atom_layers.iter().enumerate().rev() {
            layer.inverse(atoms, &adj);
            if !atoms.iter().all(|v| v.is_finite()) {
                return Err(FlowError::NonFinite { stage: "atom", layer: l });
            }
        }
        GraphTensors::from_flat(cfg.n_max, cfg.k, cfg.c, &x).map_err(|e| FlowError::Shape(e.to_string()))
    }

    /// `log N(z; 0, I) + logdet`.
    pub fn log_likelihood(
        &self,
        tensors: &GraphTensors,
        deterministic: bool,
        noise_seed: u64,
    ) -> Result<f64, FlowError> {
        let (z, logdet) = self.encode(tensors, deterministic, noise_seed)?;
        Ok(gaussian_log_density(&z.z) + logdet)
    }

    pub fn bits_per_dim(&self, log_likelihood: f64) -> f64 {
        -log_likelihood / (self.dim() as f64 * std::f64::consts::LN_2)
    }

    /// Negative log-likelihood of a dequantized sample and its gradient
    /// with respect to [`flat_parameters`](Self::flat_parameters).
    pub fn nll_and_gradient(&self, dequantized: &[f64], conditioning: &[f64]) -> Result<(f64, Vec<f64>), FlowError> {
        let mut grads = self.zeros_like();
        let nll = self.accumulate_gradient(dequantized, conditioning, &mut grads)?;
        Ok((nll, grads.flat_parameters()))
    }

    /// Adds this sample's NLL gradient into `grads`; returns the NLL.
    fn accumulate_gradient(
        &self,
        dequantized: &[f64],
        conditioning: &[f64],
        grads: &mut FlowModel,
    ) -> Result<f64, FlowError> {
        if dequantized.len() != self.dim() {
            return Err(FlowError::Dimension { expected: self.dim(), got: dequantized.len() });
        }
        let na = self.config.atom_dim();
        let mut x = dequantized.to_vec();
        let adjacency = self.adjacency(conditioning);
        let mut bond_caches: Vec<Option<BondCache>> = (0..self.bond_layers.len()).map(|_| None).collect();
        let mut atom_caches: Vec<Option<AtomCache>> = (0..self.atom_layers.len()).map(|_| None).collect();
        let mut logdet = 0.0;
        {
            let (atoms, bonds) = x.split_at_mut(na);
            for (l, layer) in self.bond_layers.iter().enumerate() {
                logdet += layer.forward(bonds, Some(&mut bond_caches[l]));
                if !bonds.iter().all(|v| v.is_finite()) {
                    return Err(FlowError::NonFinite { stage: "bond", layer: l });
                }
            }
            for (l, layer) in self.atom_layers.iter().enumerate() {
                logdet += layer.forward(atoms, &adjacency, Some(&mut atom_caches[l]));
                if !atoms.iter().all(|v| v.is_finite()) {
                    return Err(FlowError::NonFinite { stage: "atom", layer: l });
                }
            }
        }
        let nll = -(gaussian_log_density(&x) + logdet);
        // dL/dz = z for the standard normal prior
        let mut g = x;
        let (g_atoms, g_bonds) = g.split_at_mut(na);
        for (l, layer) in self.atom_layers.iter().enumerate().rev() {
            let cache = atom_caches[l].as_ref().expect("forward filled every cache");
            layer.backward(cache, g_atoms, &adjacency, &mut grads.atom_layers[l]);
        }
        for (l, layer) in self.bond_layers.iter().enumerate().rev() {
            let cache = bond_caches[l].as_ref().expect("forward filled every cache");
            layer.backward(cache, g_bonds, &mut grads.bond_layers[l]);
        }
        Ok(nll)
    }

    /// Largest |s| any coupling emits along the forward pass of `dequantized`.
    pub fn max_abs_scale(&self, dequantized: &[f64], conditioning: &[f64]) -> f64 {
        let na = self.config.atom_dim();
        let mut x = dequantized.to_vec();
        let adjacency = self.adjacency(conditioning);
        let (atoms, bonds) = x.split_at_mut(na);
        let mut m: f64 = 0.0;
        for layer in &self.bond_layers {
            m = m.max(layer.max_abs_scale(bonds));
            layer.forward(bonds, None);
        }
        for layer in &self.atom_layers {
            m = m.max(layer.max_abs_scale(atoms, &adjacency));
            layer.forward(atoms, &adjacency, None);
        }
        m
    }
}

/// `count` draws from `N(0, temperature²·I)` in `dim` dimensions.
pub fn sample_latents(dim: usize, count: usize, temperature: f64, seed: u64) -> Result<Vec<LatentPoint>, FlowError> {
    if temperature < 0.0 || temperature.is_nan() {
        return Err(FlowError::NegativeTemperature(temperature));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| LatentPoint::new((0..dim).map(|_| temperature * rng.sample::<f64, _>(StandardNormal)).collect()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::{from_tensors, parse_smiles, to_tensors};

    fn ethanol() -> GraphTensors {
        to_tensors(&parse_smiles("CCO").unwrap(), 9).unwrap()
    }

    #[test]
    fn identity_initialization() {
        let m = FlowModel::new(FlowConfig::default()).unwrap();
        let t = ethanol();
        let (z, logdet) = m.encode(&t, true, 0).unwrap();
        assert_eq!(logdet, 0.0);
        let expected: Vec<f64> = t.flatten().iter().map(|v| v + 0.3).collect();
        assert_eq!(z.z, expected);
        let empty = to_tensors(&crate::MolecularGraph::empty(), 9).unwrap();
        let ll = m.log_likelihood(&empty, true, 0).unwrap();
        let flat: Vec<f64> = empty.flatten().iter().map(|v| v + 0.3).collect();
        let closed = -0.5 * flat.iter().map(|v| v * v).sum::<f64>() - 0.5 * 369.0 * (2.0 * std::f64::consts::PI).ln();
        assert!((ll - closed).abs() < 1e-9);
    }

    #[test]
    fn zero_latent_decodes_to_empty() {
        let m = FlowModel::new(FlowConfig::default()).unwrap();
        let out = m.decode(&LatentPoint::zeros(m.dim())).unwrap();
        assert!(out.flatten().iter().all(|&v| v == 0.0));
        assert!(from_tensors(&out).unwrap().is_empty());
    }

    #[test]
    fn seeded_construction_is_deterministic() {
        let cfg = FlowConfig { seed: 11, ..FlowConfig::default() };
        assert_eq!(FlowModel::new(cfg).unwrap(), FlowModel::new(cfg).unwrap());
        let other = FlowModel::new(FlowConfig { seed: 12, ..cfg }).unwrap();
        assert_ne!(FlowModel::new(cfg).unwrap().flat_parameters(), other.flat_parameters());
    }

    #[test]
    fn config_validation() {
        let bad = FlowConfig { n_bond_layers: 7, ..FlowConfig::default() };
        assert!(matches!(FlowModel::new(bad), Err(FlowError::InvalidConfig(_))));
        let bad = FlowConfig { n_atom_layers: 0, ..FlowConfig::default() };
        assert!(matches!(FlowModel::new(bad), Err(FlowError::InvalidConfig(_))));
        let bad = FlowConfig { dequant_gamma: 1.5, ..FlowConfig::default() };
        assert!(matches!(FlowModel::new(bad), Err(FlowError::InvalidConfig(_))));
        assert_eq!(FlowConfig::default().dim(), 9 * 5 + 4 * 81);
    }

    #[test]
    fn random_model_inverts() {
        let m = FlowModel::new(FlowConfig::default()).unwrap().with_random_parameters(3, 0.05);
        for s in ["CCO", "C1=CC=CC=C1", "N#CC(=O)OF", "C"] {
            let g = parse_smiles(s).unwrap();
            let t = to_tensors(&g, 9).unwrap();
            for det in [true, false] {
                let x = m.dequantize(&t, det, 5);
                let (z, _) = m.encode(&t, det, 5).unwrap();
                let back = m.decode(&z).unwrap().flatten();
                let err = x.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(err < 1e-6, "{s}: {err}");
            }
            let (z, _) = m.encode(&t, true, 0).unwrap();
            assert_eq!(from_tensors(&m.decode(&z).unwrap()).unwrap(), g);
        }
    }

    #[test]
    fn decode_rejects_wrong_dimension() {
        let m = FlowModel::new(FlowConfig::default()).unwrap();
        assert_eq!(m.decode(&LatentPoint::zeros(3)), Err(FlowError::Dimension { expected: 369, got: 3 }));
    }

    #[test]
    fn prior_sampling() {
        let zs = sample_latents(5, 3, 0.0, 1).unwrap();
        assert!(zs.iter().all(|z| z.z == vec![0.0; 5]));
        assert!(sample_latents(5, 0, 1.0, 1).unwrap().is_empty());
        assert_eq!(sample_latents(5, 4, 0.7, 9).unwrap(), sample_latents(5, 4, 0.7, 9).unwrap());
        assert!(matches!(sample_latents(5, 1, -1.0, 1), Err(FlowError::NegativeTemperature(_))));
    }
}
