//! A Rayleigh-number sweep written to a CSV table in the temp directory.

use ltne::cli::run_sweep;
use ltne::config::{BaseConfig, SweepSpec};
use ltne::RunConfig;

fn main() -> ltne::Result<()> {
    let base = RunConfig { nx: 12, nz: 12, t_end: 1.0, ..RunConfig::default() };
    let spec = SweepSpec {
        base: BaseConfig::Inline(Box::new(base)),
        parameter: "Ra".into(),
        values: vec![10.0, 100.0, 1000.0],
        output: None,
        child_jsonl: false,
    };
    let dir = std::env::temp_dir();
    let report = run_sweep(&spec, &dir, "ltne-ra-sweep")?;
    println!("{:>8} {:>10} {:>12} {:>12} {:>6}", "Ra", "status", "decay rate", "abscissa", "decay");
    for r in &report.rows {
        println!(
            "{:>8} {:>10} {:>12.6} {:>12.6} {:>6}",
            r.value,
            r.status,
            r.decay_rate.unwrap_or(f64::NAN),
            r.abscissa.unwrap_or(f64::NAN),
            r.decay.map_or("n/a", |ok| if ok { "pass" } else { "fail" })
        );
    }
    println!("table: {}", report.csv.display());
    Ok(())
}
