//! Python module `molflow`: molecules, the flow model, similarity and the
//! latent exploration operations.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use molflow_core::chem::{fingerprint, Property, DEFAULT_N_BITS, DEFAULT_RADIUS};
use molflow_core::flow::{mean_bits_per_dim, sample_latents, train, TrainOptions};
use molflow_core::geometry::{embed_3d, layout_2d, render_svg, to_xyz};
use molflow_core::latent::{self, decode_cell, ExplorationCell, GridSpec, Position};
use molflow_core::molgraph::{canonical_smiles, is_isomorphic, is_valid, parse_smiles, to_smiles, to_tensors};
use molflow_core::optimizer::{optimize as run_optimize, OptimizeSpec};
use molflow_core::platform::{ingest_dataset, load_checkpoint, save_checkpoint, TrainingMetadata};
use molflow_core::{FlowConfig, LatentPoint, MolecularGraph};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "Molecule", module = "molflow", frozen, eq, from_py_object)]
#[derive(Clone, PartialEq)]
pub struct PyMolecule {
    graph: MolecularGraph,
}

#[pymethods]
impl PyMolecule {
    #[new]
    fn new(smiles: &str) -> PyResult<Self> {
        Ok(PyMolecule { graph: parse_smiles(smiles).map_err(value_err)? })
    }

    #[getter]
    fn smiles(&self) -> String {
        to_smiles(&self.graph).unwrap_or_default()
    }

    #[getter]
    fn canonical_smiles(&self) -> String {
        canonical_smiles(&self.graph).unwrap_or_default()
    }

    #[getter]
    fn atoms(&self) -> Vec<&'static str> {
        self.graph.atoms().iter().map(|a| a.symbol()).collect()
    }

    /// `(i, j, order)` triples with `i < j`.
    #[getter]
    fn bonds(&self) -> Vec<(usize, usize, u8)> {
        self.graph.bonds().iter().map(|b| (b.i, b.j, b.order.value())).collect()
    }

    fn __len__(&self) -> usize {
        self.graph.atom_count()
    }

    fn is_valid(&self) -> bool {
        is_valid(&self.graph).0
    }

    fn is_isomorphic(&self, other: &PyMolecule) -> bool {
        is_isomorphic(&self.graph, &other.graph)
    }

    fn property(&self, name: &str) -> PyResult<f64> {
        let p: Property = name.parse().map_err(value_err)?;
        Ok(p.evaluate(&self.graph))
    }

    fn properties<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        for p in Property::ALL {
            d.set_item(p.name(), p.evaluate(&self.graph))?;
        }
        Ok(d)
    }

    /// Indices of fingerprint bits that are set.
    #[pyo3(signature = (radius = DEFAULT_RADIUS, n_bits = DEFAULT_N_BITS))]
    fn fingerprint(&self, radius: usize, n_bits: usize) -> Vec<usize> {
        fingerprint(&self.graph, radius, n_bits).on_bits()
    }

    #[pyo3(signature = (comment = ""))]
    fn to_xyz(&self, comment: &str) -> PyResult<String> {
        let coords = embed_3d(&self.graph).map_err(value_err)?;
        to_xyz(&self.graph, &coords, comment).map_err(value_err)
    }

    #[pyo3(signature = (highlight = Vec::new()))]
    fn to_svg(&self, highlight: Vec<usize>) -> PyResult<String> {
        let layout = layout_2d(&self.graph).map_err(value_err)?;
        render_svg(&self.graph, &layout, &highlight).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!("Molecule({:?})", self.smiles())
    }
}

#[pyfunction]
fn tanimoto(a: &PyMolecule, b: &PyMolecule) -> f64 {
    molflow_core::chem::similarity(&a.graph, &b.graph)
}

#[pyclass(name = "FlowModel", module = "molflow")]
pub struct PyFlowModel {
    model: molflow_core::FlowModel,
    epochs: usize,
}

fn graphs(smiles: &[String]) -> PyResult<Vec<MolecularGraph>> {
    smiles.iter().map(|s| parse_smiles(s).map_err(value_err)).collect()
}

fn cell_dict<'py>(py: Python<'py>, cell: &ExplorationCell) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("smiles", &cell.smiles)?;
    d.set_item("similarity", cell.similarity)?;
    d.set_item("corrected", cell.corrected)?;
    d.set_item("z", &cell.z.z)?;
    Ok(d)
}

#[pymethods]
impl PyFlowModel {
    /// Identity-initialized model.
    #[new]
    #[pyo3(signature = (n_max = 9, hidden_width = 64, n_bond_layers = 8, n_atom_layers = 6, seed = 0))]
    fn new(n_max: usize, hidden_width: usize, n_bond_layers: usize, n_atom_layers: usize, seed: u64) -> PyResult<Self> {
        let config = FlowConfig { n_max, hidden_width, n_bond_layers, n_atom_layers, seed, ..FlowConfig::default() };
        Ok(PyFlowModel { model: molflow_core::FlowModel::new(config).map_err(value_err)?, epochs: 0 })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let (model, meta) = load_checkpoint(path.as_ref()).map_err(|e| PyIOError::new_err(e.to_string()))?;
        Ok(PyFlowModel { model, epochs: meta.epochs })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        let meta = TrainingMetadata { epochs: self.epochs, final_bits_per_dim: None };
        save_checkpoint(&self.model, &meta, path.as_ref()).map_err(|e| PyIOError::new_err(e.to_string()))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.model.dim()
    }

    #[getter]
    fn n_max(&self) -> usize {
        self.model.config().n_max
    }

    #[getter]
    fn parameter_count(&self) -> usize {
        self.model.parameter_count()
    }

    fn encode(&self, molecule: &PyMolecule) -> PyResult<Vec<f64>> {
        Ok(latent::encode_graph(&self.model, &molecule.graph).map_err(value_err)?.z)
    }

    /// Decoded and corrected molecule, plus whether correction changed it.
    fn decode(&self, z: Vec<f64>) -> PyResult<(PyMolecule, bool)> {
        if z.len() != self.model.dim() {
            return Err(PyValueError::new_err(format!("z must have {} values, got {}", self.model.dim(), z.len())));
        }
        let empty = fingerprint(&MolecularGraph::empty(), DEFAULT_RADIUS, DEFAULT_N_BITS);
        let cell =
            decode_cell(&self.model, LatentPoint::new(z), &empty, Position::Step { step: 0 }).map_err(value_err)?;
        Ok((PyMolecule { graph: cell.molecule }, cell.corrected))
    }

    fn bits_per_dim(&self, py: Python<'_>, smiles: Vec<String>) -> PyResult<f64> {
        let n_max = self.model.config().n_max;
        let t =
            graphs(&smiles)?.iter().map(|g| to_tensors(g, n_max).map_err(value_err)).collect::<PyResult<Vec<_>>>()?;
        py.detach(|| mean_bits_per_dim(&self.model, &t)).map_err(value_err)
    }

    /// Train in place; returns the per-epoch training bits per dimension.
    #[pyo3(signature = (smiles, epochs = 5, lr = 1e-3, batch = 16, seed = 0))]
    fn train(
        &mut self,
        py: Python<'_>,
        smiles: Vec<String>,
        epochs: usize,
        lr: f64,
        batch: usize,
        seed: u64,
    ) -> PyResult<Vec<f64>> {
        let n_max = self.model.config().n_max;
        let t =
            graphs(&smiles)?.iter().map(|g| to_tensors(g, n_max).map_err(value_err)).collect::<PyResult<Vec<_>>>()?;
        let opts = TrainOptions { epochs, lr, batch, seed };
        let (model, reports) = py.detach(|| train(&self.model, &t, &opts)).map_err(value_err)?;
        self.model = model;
        self.epochs += epochs;
        Ok(reports.iter().map(|r| r.nll_bits_per_dim).collect())
    }

    /// Decoded and corrected samples from the prior at `temperature`.
    #[pyo3(signature = (count, temperature = 0.7, seed = 0))]
    fn sample(&self, py: Python<'_>, count: usize, temperature: f64, seed: u64) -> PyResult<Vec<PyMolecule>> {
        let zs = sample_latents(self.model.dim(), count, temperature, seed).map_err(value_err)?;
        let empty = fingerprint(&MolecularGraph::empty(), DEFAULT_RADIUS, DEFAULT_N_BITS);
        py.detach(|| {
            zs.into_iter()
                .map(|z| {
                    decode_cell(&self.model, z, &empty, Position::Step { step: 0 })
                        .map(|c| PyMolecule { graph: c.molecule })
                        .map_err(value_err)
                })
                .collect()
        })
    }

    fn __repr__(&self) -> String {
        let c = self.model.config();
        format!("FlowModel(n_max={}, dim={}, parameters={})", c.n_max, self.model.dim(), self.model.parameter_count())
    }
}

/// Neighbourhood grid around `smiles` as rows of cell dicts.
#[pyfunction]
#[pyo3(signature = (model, smiles, steps = 5, delta = 0.5, seed = 0))]
fn grid<'py>(
    py: Python<'py>,
    model: &PyFlowModel,
    smiles: &str,
    steps: usize,
    delta: f64,
    seed: u64,
) -> PyResult<Vec<Vec<Bound<'py, PyDict>>>> {
    let g = parse_smiles(smiles).map_err(value_err)?;
    let spec = GridSpec { steps, delta, direction_seed: seed };
    let rows = py.detach(|| latent::neighborhood_grid(&model.model, &g, &spec)).map_err(value_err)?;
    rows.iter().map(|r| r.iter().map(|c| cell_dict(py, c)).collect()).collect()
}

#[pyfunction]
#[pyo3(signature = (model, start, end, steps = 5))]
fn interpolate<'py>(
    py: Python<'py>,
    model: &PyFlowModel,
    start: &str,
    end: &str,
    steps: usize,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let a = parse_smiles(start).map_err(value_err)?;
    let b = parse_smiles(end).map_err(value_err)?;
    let cells = py.detach(|| latent::interpolate(&model.model, &a, &b, steps)).map_err(value_err)?;
    cells.iter().map(|c| cell_dict(py, c)).collect()
}

/// Hill-climbing trajectory as a list of dicts, seed entry first.
#[pyfunction]
#[pyo3(signature = (model, smiles, property = "mol_weight", maximize = true, steps = 20, step_size = 0.5,
                    sim_min = 0.0, proposals_per_step = 16, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn optimize<'py>(
    py: Python<'py>,
    model: &PyFlowModel,
    smiles: &str,
    property: &str,
    maximize: bool,
    steps: usize,
    step_size: f64,
    sim_min: f64,
    proposals_per_step: usize,
    seed: u64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let g = parse_smiles(smiles).map_err(value_err)?;
    let spec =
        OptimizeSpec { property: property.into(), maximize, steps, step_size, sim_min, proposals_per_step, seed };
    let traj = py.detach(|| run_optimize(&model.model, &g, &spec, |_| {})).map_err(value_err)?;
    traj.iter()
        .map(|e| {
            let d = cell_dict(py, &e.cell)?;
            d.set_item("step", e.step)?;
            d.set_item("score", e.score)?;
            d.set_item("accepted", e.accepted)?;
            Ok(d)
        })
        .collect()
}

/// `(entries, rejects)` where entries are `(id, name, smiles)` and rejects
/// are `(line, text, reason)`.
#[pyfunction]
#[pyo3(signature = (path, n_max = 9))]
#[allow(clippy::type_complexity)]
fn ingest(path: &str, n_max: usize) -> PyResult<(Vec<(usize, Option<String>, String)>, Vec<(usize, String, String)>)> {
    let report = ingest_dataset(path.as_ref(), n_max).map_err(|e| PyIOError::new_err(e.to_string()))?;
    Ok((
        report.entries.into_iter().map(|e| (e.id, e.name, e.smiles)).collect(),
        report.rejects.into_iter().map(|r| (r.line, r.text, r.reason)).collect(),
    ))
}

#[pymodule]
fn molflow(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMolecule>()?;
    m.add_class::<PyFlowModel>()?;
    m.add_function(wrap_pyfunction!(tanimoto, m)?)?;
    m.add_function(wrap_pyfunction!(grid, m)?)?;
    m.add_function(wrap_pyfunction!(interpolate, m)?)?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(ingest, m)?)?;
    Ok(())
}
