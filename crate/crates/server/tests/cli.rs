//! CLI outputs checked against golden files. Regenerate with
//! `UPDATE_GOLDEN=1 cargo test -p molflow-server --test cli`.

use std::path::{Path, PathBuf};
use std::process::Command;

use molflow_core::platform::{save_checkpoint, TrainingMetadata};
use molflow_core::{FlowConfig, FlowModel};

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn check_golden(name: &str, actual: &[u8]) {
    let path = golden_dir().join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(golden_dir()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    assert!(expected == actual, "{name} differs from its golden file");
}

fn fixture_model(dir: &Path) -> PathBuf {
    let model = FlowModel::new(FlowConfig::default()).unwrap().with_random_parameters(11, 0.02);
    let path = dir.join("model.ckpt");
    save_checkpoint(&model, &TrainingMetadata::default(), &path).unwrap();
    path
}

fn run(args: &[&str]) -> i32 {
    molflow_server::cli::run(std::iter::once("molflow").chain(args.iter().copied()))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn convert_golden() {
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("c.xyz");
    assert_eq!(run(&["convert", "--smiles", "C", "--out-xyz", s(&one)]), 0);
    let text = std::fs::read_to_string(&one).unwrap();
    assert_eq!(text.lines().count(), 3);
    check_golden("convert_methane.xyz", text.as_bytes());

    let xyz = dir.path().join("e.xyz");
    let svg = dir.path().join("e.svg");
    assert_eq!(run(&["convert", "--smiles", "CC(=O)OC", "--out-xyz", s(&xyz), "--out-svg", s(&svg)]), 0);
    check_golden("convert_methyl_acetate.xyz", &std::fs::read(&xyz).unwrap());
    check_golden("convert_methyl_acetate.svg", &std::fs::read(&svg).unwrap());
}

#[test]
fn grid_golden() {
    let dir = tempfile::tempdir().unwrap();
    let model = fixture_model(dir.path());
    let svg = dir.path().join("grid.svg");
    let args = ["grid", "--model", s(&model), "--smiles", "CCO", "--steps", "3", "--delta", "4", "--seed", "2"];
    assert_eq!(run(&[&args[..], &["--out-svg", s(&svg)]].concat()), 0);
    check_golden("grid_ethanol.svg", &std::fs::read(&svg).unwrap());
}

#[test]
fn zero_delta_grid_is_uniform() {
    let dir = tempfile::tempdir().unwrap();
    let model = fixture_model(dir.path());
    let svg = dir.path().join("grid.svg");
    let args = ["grid", "--model", s(&model), "--smiles", "CC=O", "--steps", "3", "--delta", "0", "--out-svg", s(&svg)];
    assert_eq!(run(&args), 0);
    let text = std::fs::read_to_string(&svg).unwrap();
    let tiles: Vec<&str> = text
        .split("<g transform=")
        .skip(1)
        .map(|t| t.split_once('>').unwrap().1.split("</g>").next().unwrap())
        .collect();
    assert_eq!(tiles.len(), 9);
    assert!(tiles.iter().all(|t| *t == tiles[0]));
}

#[test]
fn interpolate_golden() {
    let dir = tempfile::tempdir().unwrap();
    let model = fixture_model(dir.path());
    let svg = dir.path().join("path.svg");
    let args = ["interpolate", "--model", s(&model), "--from", "CCO", "--to", "C1=CC=CC=C1", "--steps", "4"];
    assert_eq!(run(&[&args[..], &["--out-svg", s(&svg)]].concat()), 0);
    check_golden("interpolate_ethanol_benzene.svg", &std::fs::read(&svg).unwrap());
}

#[test]
fn optimize_golden() {
    let dir = tempfile::tempdir().unwrap();
    let model = fixture_model(dir.path());
    let json = dir.path().join("opt.json");
    let args = [
        "optimize",
        "--model",
        s(&model),
        "--smiles",
        "CCO",
        "--property",
        "mol_weight",
        "--steps",
        "6",
        "--sim-min",
        "0.1",
        "--seed",
        "3",
        "--step-size",
        "0.3",
        "--proposals",
        "4",
        "--out-json",
        s(&json),
    ];
    assert_eq!(run(&args), 0);
    let first = std::fs::read(&json).unwrap();
    assert_eq!(run(&args), 0);
    assert_eq!(first, std::fs::read(&json).unwrap());
    check_golden("optimize_ethanol.json", &first);
}

#[test]
fn exit_codes() {
    let exe = env!("CARGO_BIN_EXE_molflow");
    let out = Command::new(exe).args(["convert", "--smiles", "C", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(Command::new(exe).arg("--help").output().unwrap().status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let xyz = dir.path().join("x.xyz");
    let out = Command::new(exe).args(["convert", "--smiles", "C1CC", "--out-xyz", s(&xyz)]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!xyz.exists());
    let missing = dir.path().join("none.ckpt");
    let args = ["grid", "--model", s(&missing), "--smiles", "C", "--out-svg", s(&xyz)];
    assert_eq!(Command::new(exe).args(args).output().unwrap().status.code(), Some(2));
}

#[test]
fn train_writes_a_loadable_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("corpus.smi");
    std::fs::write(&data, "CCO\nCC=O\nC1CC1\nCN\n# comment\nC1CC\n").unwrap();
    let out = dir.path().join("trained.ckpt");
    let args = [
        "train",
        "--data",
        s(&data),
        "--out",
        s(&out),
        "--epochs",
        "2",
        "--batch",
        "2",
        "--hidden",
        "8",
        "--n-max",
        "4",
    ];
    assert_eq!(run(&args), 0);
    let (model, meta) = molflow_core::platform::load_checkpoint(&out).unwrap();
    assert_eq!(model.config().n_max, 4);
    assert_eq!(meta.epochs, 2);
    assert!(meta.final_bits_per_dim.unwrap().is_finite());
}
