//! A JSON experiment configuration driven through the runner, as the
//! `toric-lab` binary does, writing CSV tables and a markdown summary.

use std::error::Error;

use toric_lab::cli::{execute, Cli};
use toric_lab::config::ExperimentConfig;

const CONFIG: &str = r#"{
    "polytope": [
        {"normal": [1, 0], "offset": 0},
        {"normal": [0, 1], "offset": 0},
        {"normal": [-1, -1], "offset": 1}
    ],
    "metric_weights": [{"point": [0, 0], "weight": 2}],
    "ray": ["1/3", "1/3"],
    "sequence": {"kind": "tame"},
    "N_list": [30, 60, 120, 240, 480],
    "quadrature": {"resolution": 64}
}"#;

pub fn run() -> Result<(), Box<dyn Error>> {
    let dir = std::env::temp_dir().join("toric-lab-example");
    let config = ExperimentConfig::from_json(CONFIG)?;
    let path = dir.join("config.json");
    std::fs::create_dir_all(&dir)?;
    std::fs::write(&path, config.to_json())?;

    for command in ["ray", "norms"] {
        let args = ["toric-lab", command, "--config", path.to_str().unwrap(), "--out", dir.to_str().unwrap()];
        let cli = <Cli as clap::Parser>::try_parse_from(args)?;
        let summary = execute(&cli).map_err(|e| e.record())?;
        println!("{summary}");
    }
    println!("{}", std::fs::read_to_string(dir.join("norms.csv"))?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
