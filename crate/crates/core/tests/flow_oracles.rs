//! Finite-difference checks of the flow's log-determinant and NLL gradient.

mod common;

use common::{fd_jacobian, log_abs_det, one_hot_bonds};
use molflow_core::flow::{FlowConfig, FlowModel};
use molflow_core::molgraph::GraphTensors;

/// `n_max=2, k=2, c=1`: D = 4 + 4 = 8.
fn toy_config(seed: u64) -> FlowConfig {
    FlowConfig { n_max: 2, k: 2, c: 1, n_bond_layers: 2, n_atom_layers: 2, hidden_width: 6, dequant_gamma: 0.6, seed }
}

#[test]
fn logdet_matches_fd_jacobian_full_map() {
    for draw in 0..20u64 {
        let cfg = toy_config(draw);
        assert!(cfg.dim() <= 8);
        let model = FlowModel::new(cfg).unwrap().with_random_parameters(100 + draw, 0.5);
        let cond = one_hot_bonds(2, 1, &[]);
        let x: Vec<f64> = (0..cfg.dim()).map(|i| 0.1 + 0.37 * ((i as f64 * 1.7 + draw as f64).sin())).collect();
        let (_, logdet) = model.transform(&x, &cond).unwrap();
        let jac = fd_jacobian(|v| model.transform(v, &cond).unwrap().0, &x, 1e-5);
        let fd = log_abs_det(jac);
        assert!((logdet - fd).abs() < 1e-4, "draw {draw}: {logdet} vs {fd}");
    }
}

#[test]
fn logdet_matches_fd_jacobian_with_bond_conditioning() {
    // atom block of 4 rows × 2 channels; bond block of 2 channels conditions it
    for draw in 0..10u64 {
        let cfg = FlowConfig {
            n_max: 4,
            k: 2,
            c: 2,
            n_bond_layers: 2,
            n_atom_layers: 2,
            hidden_width: 5,
            dequant_gamma: 0.6,
            seed: draw,
        };
        let model = FlowModel::new(cfg).unwrap().with_random_parameters(7 * draw + 1, 0.5);
        let cond = one_hot_bonds(4, 2, &[(0, 1, 0), (1, 2, 0), (2, 3, 0)]);
        let na = cfg.atom_dim();
        let base: Vec<f64> = (0..cfg.dim()).map(|i| 0.3 * ((i as f64 + draw as f64) * 0.9).cos()).collect();
        let bonds = base[na..].to_vec();
        let atoms_only = |a: &[f64]| {
            let mut full = a.to_vec();
            full.extend_from_slice(&bonds);
            model.transform(&full, &cond).unwrap().0[..na].to_vec()
        };
        let bond_only = |b: &[f64]| {
            let mut full = base[..na].to_vec();
            full.extend_from_slice(b);
            model.transform(&full, &cond).unwrap().0[na..].to_vec()
        };
        let fd =
            log_abs_det(fd_jacobian(atoms_only, &base[..na], 1e-5)) + log_abs_det(fd_jacobian(bond_only, &bonds, 1e-5));
        let (_, logdet) = model.transform(&base, &cond).unwrap();
        assert!((logdet - fd).abs() < 1e-4, "draw {draw}: {logdet} vs {fd}");
    }
}

#[test]
fn nll_gradient_matches_central_differences() {
    let cfg = FlowConfig {
        n_max: 3,
        k: 3,
        c: 2,
        n_bond_layers: 2,
        n_atom_layers: 2,
        hidden_width: 4,
        dequant_gamma: 0.6,
        seed: 5,
    };
    let model = FlowModel::new(cfg).unwrap().with_random_parameters(17, 0.3);
    let cond = one_hot_bonds(3, 2, &[(0, 1, 0), (1, 2, 0)]);
    let t = GraphTensors {
        n_max: 3,
        k: 3,
        c: 2,
        atoms: vec![0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0],
        bonds: cond.clone(),
    };
    let x = model.dequantize(&t, false, 3);
    let (_, grad) = model.nll_and_gradient(&x, &cond).unwrap();
    let params = model.flat_parameters();
    let h = 1e-5;
    let nll_at = |p: &[f64]| {
        let mut m = model.clone();
        m.set_flat_parameters(p);
        m.nll_and_gradient(&x, &cond).unwrap().0
    };
    let mut worst: f64 = 0.0;
    for i in 0..params.len() {
        let mut pp = params.clone();
        let mut pm = params.clone();
        pp[i] += h;
        pm[i] -= h;
        let fd = (nll_at(&pp) - nll_at(&pm)) / (2.0 * h);
        let rel = (grad[i] - fd).abs() / grad[i].abs().max(fd.abs()).max(1e-6);
        worst = worst.max(rel);
        assert!(rel < 1e-4, "param {i}: analytic {} vs fd {fd}", grad[i]);
    }
    eprintln!("worst relative gradient error {worst:.3e} over {} parameters", params.len());
}
