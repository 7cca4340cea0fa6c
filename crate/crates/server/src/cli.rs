//! The `molflow` command line. Exit status: 0 on success, 1 on usage
//! errors, 2 on runtime errors. Every output file is written atomically.

use std::ffi::OsString;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use molflow_core::flow::{mean_bits_per_dim, train_with_progress, TrainOptions};
use molflow_core::geometry::{embed_3d, layout_2d, render_panel_svg, render_svg, to_xyz, PanelCell};
use molflow_core::latent::ExplorationCell;
use molflow_core::molgraph::to_tensors;
use molflow_core::optimizer::optimize;
use molflow_core::platform::{
    ingest_dataset, load_checkpoint, save_checkpoint, write_atomic, IngestReport, TrainingMetadata,
};
use molflow_core::{FlowConfig, FlowModel, MolecularGraph};

use crate::api::{parse_seed, run_grid, run_interpolate, GridRequest, InterpolateRequest, OptimizeSpecFields};
use crate::AppState;

#[derive(Debug, Parser)]
#[command(name = "molflow", version, about = "Explore the latent space of a molecular graph flow")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a flow from identity initialization on a SMILES corpus.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5)]
        epochs: usize,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        #[arg(long, default_value_t = 16)]
        batch: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 9)]
        n_max: usize,
        #[arg(long, default_value_t = 64)]
        hidden: usize,
        /// Use only the first N corpus entries.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Serve the HTTP/JSON API.
    Serve {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
    },
    /// Render the latent neighbourhood grid of a seed as an SVG panel.
    Grid {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        smiles: String,
        #[arg(long, default_value_t = 5)]
        steps: usize,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_svg: PathBuf,
        #[arg(long)]
        out_json: Option<PathBuf>,
    },
    /// Render a linear latent path between two molecules as an SVG strip.
    Interpolate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long, default_value_t = 5)]
        steps: usize,
        #[arg(long)]
        out_svg: PathBuf,
        #[arg(long)]
        out_json: Option<PathBuf>,
    },
    /// Run similarity-constrained property optimization from a seed.
    Optimize {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        smiles: String,
        #[arg(long, default_value = "mol_weight")]
        property: String,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        #[arg(long, default_value_t = 0.0)]
        sim_min: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.5)]
        step_size: f64,
        #[arg(long, default_value_t = 16)]
        proposals: usize,
        /// Minimize the property instead of maximizing it.
        #[arg(long)]
        minimize: bool,
        #[arg(long)]
        out_json: PathBuf,
    },
    /// Convert a SMILES string to xyz (and optionally SVG).
    Convert {
        #[arg(long)]
        smiles: String,
        #[arg(long)]
        out_xyz: PathBuf,
        #[arg(long)]
        out_svg: Option<PathBuf>,
    },
}

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct CliError(String);

fn fail(e: impl std::fmt::Display) -> CliError {
    CliError(e.to_string())
}

/// Parse `argv` and run; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    write_atomic(path, bytes).map_err(|e| CliError(format!("cannot write {}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<FlowModel, CliError> {
    load_checkpoint(path).map(|(m, _)| m).map_err(|e| CliError(format!("{}: {e}", path.display())))
}

fn load_data(path: &Path, n_max: usize) -> Result<IngestReport, CliError> {
    let report = ingest_dataset(path, n_max).map_err(fail)?;
    for r in &report.rejects {
        eprintln!("{}:{}: skipped {:?}: {}", path.display(), r.line, r.text, r.reason);
    }
    Ok(report)
}

fn label(cell: &ExplorationCell) -> String {
    let s = if cell.smiles.is_empty() { "(empty)" } else { &cell.smiles };
    format!("{s}  sim {:.2}", cell.similarity)
}

fn panel_cell<'a>(cell: &'a ExplorationCell) -> Result<PanelCell<'a>, CliError> {
    let layout = if cell.molecule.is_empty() { None } else { Some(layout_2d(&cell.molecule).map_err(fail)?) };
    Ok(PanelCell { graph: &cell.molecule, layout, label: label(cell), highlight: Vec::new() })
}

fn to_json<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("serializable");
    v.push(b'\n');
    v
}

fn state_for(model: FlowModel) -> AppState {
    AppState::new(model, Vec::new())
}

fn api_fail(e: crate::ApiError) -> CliError {
    CliError(format!("{}: {}", e.body.error, e.body.detail))
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Train { data, out, epochs, lr, batch, seed, n_max, hidden, limit } => {
            let mut report = load_data(&data, n_max)?;
            if let Some(n) = limit {
                report.entries.truncate(n);
            }
            let tensors = report
                .entries
                .iter()
                .map(|e| to_tensors(&e.graph, n_max))
                .collect::<Result<Vec<_>, _>>()
                .map_err(fail)?;
            let config = FlowConfig { n_max, hidden_width: hidden, seed, ..FlowConfig::default() };
            let model = FlowModel::new(config).map_err(fail)?;
            let before = mean_bits_per_dim(&model, &tensors).map_err(fail)?;
            eprintln!("{} molecules, dim {}, initial {before:.4} bits/dim", tensors.len(), model.dim());
            let opts = TrainOptions { epochs, lr, batch, seed };
            let (trained, _) = train_with_progress(&model, &tensors, &opts, |r| {
                eprintln!("epoch {:>3}  nll {:.4} bits/dim  |grad| {:.4}", r.epoch + 1, r.nll_bits_per_dim, r.grad_norm)
            })
            .map_err(fail)?;
            let after = mean_bits_per_dim(&trained, &tensors).map_err(fail)?;
            let meta = TrainingMetadata { epochs, final_bits_per_dim: Some(after) };
            save_checkpoint(&trained, &meta, &out).map_err(fail)?;
            println!("bits/dim {before:.6} -> {after:.6}; wrote {}", out.display());
            Ok(())
        }
        Command::Serve { model, data, port, host } => {
            let model = load_model(&model)?;
            let report = load_data(&data, model.config().n_max)?;
            let state = AppState::new(model, report.entries);
            let rt = tokio::runtime::Runtime::new().map_err(fail)?;
            rt.block_on(crate::serve(state, SocketAddr::new(host, port)))
                .map_err(|e| CliError(format!("cannot serve on {host}:{port}: {e}")))
        }
        Command::Grid { model, smiles, steps, delta, seed, out_svg, out_json } => {
            let state = state_for(load_model(&model)?);
            let grid = run_grid(&state, &GridRequest { smiles, steps, delta, seed }).map_err(api_fail)?;
            let rows = grid
                .cells
                .iter()
                .map(|row| row.iter().map(panel_cell).collect::<Result<Vec<_>, _>>())
                .collect::<Result<Vec<_>, _>>()?;
            write(&out_svg, render_panel_svg(&rows).map_err(fail)?.as_bytes())?;
            if let Some(p) = out_json {
                write(&p, &to_json(&grid))?;
            }
            Ok(())
        }
        Command::Interpolate { model, from, to, steps, out_svg, out_json } => {
            let state = state_for(load_model(&model)?);
            let path = run_interpolate(&state, &InterpolateRequest { from, to, steps }).map_err(api_fail)?;
            let row = path.cells.iter().map(panel_cell).collect::<Result<Vec<_>, _>>()?;
            write(&out_svg, render_panel_svg(&[row]).map_err(fail)?.as_bytes())?;
            if let Some(p) = out_json {
                write(&p, &to_json(&path))?;
            }
            Ok(())
        }
        Command::Optimize {
            model,
            smiles,
            property,
            steps,
            sim_min,
            seed,
            step_size,
            proposals,
            minimize,
            out_json,
        } => {
            let model = load_model(&model)?;
            let spec = OptimizeSpecFields {
                property: Some(property),
                maximize: Some(!minimize),
                steps: Some(steps),
                step_size: Some(step_size),
                sim_min: Some(sim_min),
                proposals_per_step: Some(proposals),
                seed: Some(seed),
            }
            .to_spec()
            .map_err(api_fail)?;
            let g = parse_seed(&smiles, model.config().n_max).map_err(api_fail)?;
            let trajectory = optimize(&model, &g, &spec, |e| {
                eprintln!(
                    "step {:>4}  {:<8} {:>10.4}  {}",
                    e.step,
                    if e.accepted { "accept" } else { "reject" },
                    e.score,
                    e.cell.smiles
                )
            })
            .map_err(fail)?;
            let out = serde_json::json!({ "spec": spec, "trajectory": trajectory });
            write(&out_json, &to_json(&out))
        }
        Command::Convert { smiles, out_xyz, out_svg } => {
            let g: MolecularGraph = parse_seed(&smiles, usize::MAX).map_err(api_fail)?;
            let coords = embed_3d(&g).map_err(fail)?;
            let comment = smiles.replace(['\n', '\r'], " ");
            write(&out_xyz, to_xyz(&g, &coords, &comment).map_err(fail)?.as_bytes())?;
            if let Some(p) = out_svg {
                let layout = layout_2d(&g).map_err(fail)?;
                write(&p, render_svg(&g, &layout, &[]).map_err(fail)?.as_bytes())?;
            }
            Ok(())
        }
    }
}
