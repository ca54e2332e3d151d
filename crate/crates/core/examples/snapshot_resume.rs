//! Writes a snapshot halfway through a run, resumes from it, and compares
//! the two trajectories at the shared sample times.

use ltne::cli::{run_target, RunTarget};
use ltne::config::OutputConfig;
use ltne::{InitialCondition, RunConfig};

fn main() -> ltne::Result<()> {
    let dir = std::env::temp_dir();
    let full = RunConfig {
        nx: 12,
        nz: 12,
        t_end: 1.0,
        initial: InitialCondition::Random { seed: 2, energy: 1.0, decay: 0.5 },
        output: OutputConfig { snapshot_times: vec![0.5], ..OutputConfig::default() },
        ..RunConfig::default()
    };
    let target = |config: RunConfig, stem: &str| RunTarget {
        config,
        base_dir: dir.clone(),
        out_dir: dir.clone(),
        stem: stem.into(),
        write_jsonl: false,
    };
    let first = run_target(&target(full.clone(), "ltne-full"))?;
    let snap = first.snapshots[0].clone();
    println!("snapshot: {}", snap.display());

    let resumed = RunConfig {
        initial: InitialCondition::Snapshot { path: snap },
        output: OutputConfig::default(),
        ..full
    };
    let second = run_target(&target(resumed, "ltne-resumed"))?;
    let mut worst = 0.0f64;
    for r in &second.records {
        let a = first.records.iter().find(|q| (q.t - r.t).abs() < 1e-9).expect("shared sample");
        worst = worst.max((a.norms.e_y - r.norms.e_y).abs() / a.norms.e_y);
    }
    println!("{} shared samples, largest relative E_Y difference {worst:e}", second.records.len());
    Ok(())
}
