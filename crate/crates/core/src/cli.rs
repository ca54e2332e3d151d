//! The four driver commands behind the `ltne` binary: `run`, `certify`,
//! `sweep` and `linearize`. Each is a plain function returning a report, so
//! the binary only parses arguments and prints.
//!
//! JSONL layout of a run: one `header` line carrying the configuration and
//! its hash, one `sample` line per [`TrajectoryRecord`], and a closing
//! `footer` line. A file without footer is treated as truncated.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificates::{
    compute_constants, recertify, summarize, CertificateConfig, CertificateSuite, CertificateSummary, Norms,
    TrajectoryRecord,
};
use crate::config::{parse_json, resolve_path, RunConfig, SweepSpec};
use crate::dynamics::{assemble_linear, block_eigenvalues, spectral_abscissa, Dynamics, State};
use crate::error::{Error, Result};
use crate::integrator::{run, Monitor, RunOptions, Sample};
use crate::params::{Domain, Params};
use crate::snapshot;

/// Environment variable capping sweep concurrency.
pub const THREADS_ENV: &str = "LTNE_THREADS";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Header {
    pub kind: String,
    pub version: u32,
    pub config_hash: String,
    pub config: RunConfig,
    pub params: Params,
    pub domain: Domain,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleLine {
    pub kind: String,
    pub config_hash: String,
    #[serde(flatten)]
    pub record: TrajectoryRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Blowup,
    Failed,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::Blowup => "blowup",
            RunStatus::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Footer {
    pub kind: String,
    pub config_hash: String,
    pub status: RunStatus,
    pub n_samples: usize,
    pub message: Option<String>,
}

/// Where a run reads from and writes to.
#[derive(Debug, Clone)]
pub struct RunTarget {
    pub config: RunConfig,
    /// Directory for relative input paths.
    pub base_dir: PathBuf,
    /// Directory for default outputs.
    pub out_dir: PathBuf,
    /// Stem of default output names.
    pub stem: String,
    pub write_jsonl: bool,
}

impl RunTarget {
    pub fn from_file(path: &Path) -> Result<RunTarget> {
        let loaded = RunConfig::load(path)?;
        Ok(RunTarget {
            config: loaded.config,
            out_dir: loaded.base_dir.clone(),
            base_dir: loaded.base_dir,
            stem: loaded.stem,
            write_jsonl: true,
        })
    }

    pub fn jsonl_path(&self) -> PathBuf {
        match &self.config.output.jsonl {
            Some(p) => resolve_path(&self.base_dir, p),
            None => self.out_dir.join(format!("{}.jsonl", self.stem)),
        }
    }

    pub fn snapshot_path(&self, t: f64) -> PathBuf {
        self.out_dir.join(format!("{}.t{}.snap", self.stem, t))
    }

    pub fn plot_path(&self) -> PathBuf {
        self.out_dir.join(format!("{}.plot.csv", self.stem))
    }
}

#[derive(Debug)]
pub struct RunReport {
    pub config_hash: String,
    pub status: RunStatus,
    pub message: Option<String>,
    pub records: Vec<TrajectoryRecord>,
    pub summary: Vec<CertificateSummary>,
    pub final_state: State,
    pub jsonl: Option<PathBuf>,
    pub snapshots: Vec<PathBuf>,
    pub plot: Option<PathBuf>,
}

impl RunReport {
    pub fn certificates_passed(&self) -> bool {
        self.summary.iter().filter(|s| s.enabled).all(|s| s.passed())
    }

    /// `0` on success, `1` when a certificate failed, `2` when the
    /// integration did not complete.
    pub fn exit_code(&self) -> i32 {
        if self.status != RunStatus::Completed {
            2
        } else if !self.certificates_passed() {
            1
        } else {
            0
        }
    }
}

struct RunMonitor<'a, W: Write> {
    suite: CertificateSuite<'a>,
    out: W,
    hash: String,
    pending_snapshots: Vec<PathBuf>,
    written: Vec<PathBuf>,
}

impl<W: Write> RunMonitor<'_, W> {
    fn line<T: Serialize>(&mut self, value: &T) -> Result<()> {
        let text = serde_json::to_string(value).map_err(|e| Error::Config(e.to_string()))?;
        writeln!(self.out, "{text}").map_err(|e| Error::io("<jsonl>", e))
    }
}

impl<W: Write> Monitor for RunMonitor<'_, W> {
    type Record = TrajectoryRecord;

    fn observe(&mut self, dynamics: &Dynamics, sample: Sample<'_>) -> Result<TrajectoryRecord> {
        let rec = self.suite.observe(dynamics, sample)?;
        let line = SampleLine {
            kind: "sample".into(),
            config_hash: self.hash.clone(),
            record: rec.clone(),
        };
        self.line(&line)?;
        Ok(rec)
    }

    fn checkpoint(&mut self, state: &State) -> Result<()> {
        self.suite.checkpoint(state)?;
        if !self.pending_snapshots.is_empty() {
            let path = self.pending_snapshots.remove(0);
            snapshot::write(&path, state)?;
            self.written.push(path);
        }
        Ok(())
    }
}

fn snapshot_steps(cfg: &RunConfig, t_start: f64) -> Result<Vec<(u64, f64)>> {
    let mut out = Vec::new();
    for &t in &cfg.output.snapshot_times {
        let k = (t - t_start) / cfg.dt;
        let kr = k.round();
        if kr < 1.0 || (k - kr).abs() > 1e-6 || t > cfg.t_end + 0.5 * cfg.dt {
            return Err(Error::Config(format!(
                "snapshot time {t} is not a whole number of steps inside ({t_start}, {}]",
                cfg.t_end
            )));
        }
        out.push((kr as u64, t));
    }
    out.sort_by_key(|e| e.0);
    out.dedup_by_key(|e| e.0);
    Ok(out)
}

/// Runs a configuration, streaming the JSONL time series as it goes.
pub fn run_target(target: &RunTarget) -> Result<RunReport> {
    let cfg = &target.config;
    cfg.validate()?;
    let dynamics = cfg.dynamics()?;
    let s0 = cfg.initial_state(&target.base_dir)?;
    let stepper = cfg.stepper();
    let hash = cfg.hash();
    let snaps = snapshot_steps(cfg, s0.t)?;

    let jsonl = target.write_jsonl.then(|| target.jsonl_path());
    let sink: Box<dyn Write> = match &jsonl {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Error::io(p, e))?)),
        None => Box::new(io::sink()),
    };
    let mut monitor = RunMonitor {
        suite: CertificateSuite::new(&dynamics, stepper, cfg.certificates.clone(), &s0)?,
        out: sink,
        hash: hash.clone(),
        pending_snapshots: snaps.iter().map(|(_, t)| target.snapshot_path(*t)).collect(),
        written: Vec::new(),
    };
    monitor.line(&Header {
        kind: "header".into(),
        version: 1,
        config_hash: hash.clone(),
        config: cfg.clone(),
        params: *dynamics.params(),
        domain: *dynamics.domain(),
    })?;

    let opts = RunOptions {
        keep_states: false,
        checkpoints: snaps.iter().map(|(k, _)| *k).collect(),
    };
    let traj = run(&dynamics, &s0, &stepper, &mut monitor, &opts)?;
    let (status, message) = match &traj.failure {
        None => (RunStatus::Completed, None),
        Some(e @ Error::Blowup { .. }) => (RunStatus::Blowup, Some(e.to_string())),
        Some(e) => (RunStatus::Failed, Some(e.to_string())),
    };
    monitor.line(&Footer {
        kind: "footer".into(),
        config_hash: hash.clone(),
        status,
        n_samples: traj.records.len(),
        message: message.clone(),
    })?;
    monitor.out.flush().map_err(|e| Error::io("<jsonl>", e))?;

    let plot = if cfg.output.plot_csv {
        let p = target.plot_path();
        write_plot_csv(&p, &traj.records)?;
        Some(p)
    } else {
        None
    };
    let summary = monitor.suite.summary();
    Ok(RunReport {
        config_hash: hash,
        status,
        message,
        summary,
        records: traj.records,
        final_state: traj.final_state,
        jsonl,
        snapshots: monitor.written,
        plot,
    })
}

/// `ltne run <config.json>`
pub fn cmd_run(config_path: &Path) -> Result<RunReport> {
    run_target(&RunTarget::from_file(config_path)?)
}

pub fn write_plot_csv(path: &Path, records: &[TrajectoryRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record([
        "t",
        "lap_psi2",
        "theta2",
        "phi2",
        "grad_theta2",
        "grad_phi2",
        "gradlap_psi2",
        "e_y",
    ])
    .map_err(|e| csv_error(path, e))?;
    for r in records {
        let n = r.norms;
        let row = [
            r.t,
            n.lap_psi2,
            n.theta2,
            n.phi2,
            n.grad_theta2,
            n.grad_phi2,
            n.gradlap_psi2,
            n.e_y,
        ];
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: io::Error::other(e.to_string()),
    }
}

/// Contents of a run's JSONL file.
#[derive(Debug, Clone)]
pub struct TimeSeries {
    pub header: Header,
    pub records: Vec<TrajectoryRecord>,
    pub footer: Footer,
}

#[derive(Deserialize)]
struct Kind {
    kind: String,
}

/// Reads a JSONL time series, refusing truncated files and mixed hashes.
pub fn read_time_series(path: &Path) -> Result<TimeSeries> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut header: Option<Header> = None;
    let mut footer: Option<Footer> = None;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let ln = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        if footer.is_some() {
            return Err(Error::parse(path, ln, "content after the footer line"));
        }
        let at_line = |e: Error| match e {
            Error::Parse { msg, .. } => Error::parse(path, ln, msg),
            other => other,
        };
        let kind: Kind = parse_json(&line, path).map_err(at_line)?;
        match (kind.kind.as_str(), &header) {
            ("header", None) => header = Some(parse_json(&line, path).map_err(at_line)?),
            ("header", Some(_)) => return Err(Error::parse(path, ln, "second header line")),
            (_, None) => return Err(Error::parse(path, ln, "missing header line")),
            ("sample", Some(h)) => {
                let s: SampleLine = parse_json(&line, path).map_err(at_line)?;
                if s.config_hash != h.config_hash {
                    return Err(Error::parse(
                        path,
                        ln,
                        format!(
                            "config hash {} differs from the header's {}; refusing mixed input",
                            s.config_hash, h.config_hash
                        ),
                    ));
                }
                records.push(s.record);
            }
            ("footer", Some(h)) => {
                let f: Footer = parse_json(&line, path).map_err(at_line)?;
                if f.config_hash != h.config_hash {
                    return Err(Error::parse(path, ln, "footer config hash differs from the header's"));
                }
                if f.n_samples != records.len() {
                    return Err(Error::parse(
                        path,
                        ln,
                        format!("footer announces {} samples, found {}", f.n_samples, records.len()),
                    ));
                }
                footer = Some(f);
            }
            (other, _) => return Err(Error::parse(path, ln, format!("unknown line kind `{other}`"))),
        }
    }
    let header = header.ok_or_else(|| Error::parse(path, 1, "empty time series"))?;
    let footer = footer.ok_or_else(|| Error::parse(path, records.len() + 1, "truncated time series: no footer line"))?;
    Ok(TimeSeries {
        header,
        records,
        footer,
    })
}

#[derive(Debug)]
pub struct CertifyReport {
    pub config_hash: String,
    pub status: RunStatus,
    pub certificates: CertificateConfig,
    pub records: Vec<TrajectoryRecord>,
    pub summary: Vec<CertificateSummary>,
    /// Samples whose recomputed verdicts differ from the stored ones.
    pub changed: usize,
}

impl CertifyReport {
    pub fn passed(&self) -> bool {
        self.summary.iter().filter(|s| s.enabled).all(|s| s.passed())
    }
}

/// `ltne certify <run.jsonl> [--mso X]`
pub fn cmd_certify(path: &Path, mso: Option<f64>) -> Result<CertifyReport> {
    let ts = read_time_series(path)?;
    let mut certs = ts.header.config.certificates.clone();
    if let Some(m) = mso {
        certs.mso = m;
    }
    let records = recertify(ts.header.params, ts.header.domain.a, certs.clone(), &ts.records)?;
    let changed = records.iter().zip(&ts.records).filter(|(a, b)| a != b).count();
    let summary = summarize(&records, &ts.header.params, &certs);
    Ok(CertifyReport {
        config_hash: ts.header.config_hash,
        status: ts.footer.status,
        certificates: certs,
        records,
        summary,
        changed,
    })
}

/// Human-readable certificate table.
pub fn format_summary(summary: &[CertificateSummary]) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:<12} {:>7} {:>9} {:>8} {:>12} {:>14} {:>14} {:>14}",
        "certificate", "verdict", "evaluated", "failures", "min slack", "at t", "lhs", "rhs"
    )
    .unwrap();
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.6e}")).unwrap_or_else(|| "-".into());
    for s in summary {
        let verdict = match (s.enabled, s.evaluated, s.passed()) {
            (false, 0, _) => "off",
            (false, _, _) => "info",
            (true, 0, _) => "n/a",
            (true, _, true) => "pass",
            (true, _, false) => "FAIL",
        };
        writeln!(
            out,
            "{:<12} {:>7} {:>9} {:>8} {:>12} {:>14} {:>14} {:>14}",
            s.name,
            verdict,
            s.evaluated,
            s.failures,
            s.min_slack.map(|x| format!("{x:.4e}")).unwrap_or_else(|| "-".into()),
            opt(s.worst_t),
            opt(s.worst_lhs),
            opt(s.worst_rhs)
        )
        .unwrap();
    }
    out
}

/// Least-squares rate `-d/dt ln(|theta|^2 + |phi|^2)` over samples with
/// `t >= t_from`. `None` with fewer than two usable samples.
pub fn measured_decay_rate(records: &[TrajectoryRecord], t_from: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.t >= t_from)
        .map(|r| (r.t, r.norms.theta2 + r.norms.phi2))
        .filter(|(_, v)| *v > f64::MIN_POSITIVE * 1e10)
        .map(|(t, v)| (t, v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(-sxy / sxx)
}

/// One row of a sweep table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub status: String,
    pub t_final: Option<f64>,
    pub lap_psi2: Option<f64>,
    pub theta2: Option<f64>,
    pub phi2: Option<f64>,
    pub e_y: Option<f64>,
    pub decay_rate: Option<f64>,
    pub abscissa: Option<f64>,
    pub m7: Option<f64>,
    pub m8: Option<f64>,
    pub decay: Option<bool>,
    pub dissipation: Option<bool>,
    pub psi_absorb: Option<bool>,
    pub h1_absorb: Option<bool>,
    pub cdep: Option<bool>,
    pub ebal: Option<bool>,
    pub tail: Option<bool>,
    pub error: Option<String>,
}

pub const SWEEP_COLUMNS: [&str; 19] = [
    "value",
    "status",
    "t_final",
    "lap_psi2",
    "theta2",
    "phi2",
    "e_y",
    "decay_rate",
    "abscissa",
    "M7",
    "M8",
    "decay_ok",
    "dissip_ok",
    "psi_absorb_ok",
    "h1_absorb_ok",
    "cdep_ok",
    "ebal_ok",
    "tail_ok",
    "error",
];

impl SweepRow {
    fn failed(value: f64, e: &Error) -> SweepRow {
        SweepRow {
            value,
            status: "error".into(),
            t_final: None,
            lap_psi2: None,
            theta2: None,
            phi2: None,
            e_y: None,
            decay_rate: None,
            abscissa: None,
            m7: None,
            m8: None,
            decay: None,
            dissipation: None,
            psi_absorb: None,
            h1_absorb: None,
            cdep: None,
            ebal: None,
            tail: None,
            error: Some(e.to_string()),
        }
    }

    fn cells(&self) -> Vec<String> {
        let f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let b = |v: Option<bool>| match v {
            Some(true) => "pass".to_string(),
            Some(false) => "fail".to_string(),
            None => "n/a".to_string(),
        };
        vec![
            self.value.to_string(),
            self.status.clone(),
            f(self.t_final),
            f(self.lap_psi2),
            f(self.theta2),
            f(self.phi2),
            f(self.e_y),
            f(self.decay_rate),
            f(self.abscissa),
            f(self.m7),
            f(self.m8),
            b(self.decay),
            b(self.dissipation),
            b(self.psi_absorb),
            b(self.h1_absorb),
            b(self.cdep),
            b(self.ebal),
            b(self.tail),
            self.error.clone().unwrap_or_default(),
        ]
    }
}

fn sweep_child(target: RunTarget, value: f64) -> SweepRow {
    let attempt = || -> Result<SweepRow> {
        let cfg = &target.config;
        let p = cfg.params()?;
        let dom = cfg.domain()?;
        let op = assemble_linear(&p, &dom, cfg.model_options())?;
        let k = compute_constants(&p, dom.a, &cfg.certificates, 0.0)?;
        let report = run_target(&target)?;
        let last = report.records.last();
        let t_start = report.records.first().map(|r| r.t).unwrap_or(0.0);
        let verdict = |name: &str| {
            report
                .summary
                .iter()
                .find(|s| s.name == name)
                .filter(|s| s.evaluated > 0)
                .map(|s| s.passed())
        };
        Ok(SweepRow {
            value,
            status: report.status.as_str().into(),
            t_final: last.map(|r| r.t),
            lap_psi2: last.map(|r| r.norms.lap_psi2),
            theta2: last.map(|r| r.norms.theta2),
            phi2: last.map(|r| r.norms.phi2),
            e_y: last.map(|r| r.norms.e_y),
            decay_rate: measured_decay_rate(&report.records, t_start + 0.2 * (cfg.t_end - t_start)),
            abscissa: Some(spectral_abscissa(&op)),
            m7: Some(k.m7),
            m8: Some(k.m8),
            decay: verdict("decay"),
            dissipation: verdict("dissipation"),
            psi_absorb: verdict("psi_absorb"),
            h1_absorb: verdict("h1_absorb"),
            cdep: verdict("cdep"),
            ebal: verdict("ebal"),
            tail: verdict("tail"),
            error: report.message,
        })
    };
    attempt().unwrap_or_else(|e| SweepRow::failed(value, &e))
}

/// Thread count from `LTNE_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

#[derive(Debug)]
pub struct SweepReport {
    pub parameter: String,
    pub rows: Vec<SweepRow>,
    pub csv: PathBuf,
}

/// Runs a sweep given its spec and the directory it was read from.
pub fn run_sweep(spec: &SweepSpec, dir: &Path, stem: &str) -> Result<SweepReport> {
    spec.validate()?;
    let (base, base_dir) = spec.base_config(dir)?;
    let targets: Vec<(f64, Result<RunTarget>)> = spec
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let mut cfg = base.clone();
            let t = cfg.set_parameter(&spec.parameter, v).map(|_| {
                cfg.output.jsonl = None;
                RunTarget {
                    config: cfg,
                    base_dir: base_dir.clone(),
                    out_dir: dir.to_path_buf(),
                    stem: format!("{stem}.{i}"),
                    write_jsonl: spec.child_jsonl,
                }
            });
            (v, t)
        })
        .collect();

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap() {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config(e.to_string()))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        targets
            .into_par_iter()
            .map(|(v, t)| match t {
                Ok(t) => sweep_child(t, v),
                Err(e) => SweepRow::failed(v, &e),
            })
            .collect()
    });

    let csv_path = match &spec.output {
        Some(p) => resolve_path(dir, p),
        None => dir.join(format!("{stem}.csv")),
    };
    let mut w = csv::Writer::from_path(&csv_path).map_err(|e| csv_error(&csv_path, e))?;
    let mut header = SWEEP_COLUMNS.to_vec();
    header[0] = &spec.parameter;
    w.write_record(&header).map_err(|e| csv_error(&csv_path, e))?;
    for r in &rows {
        w.write_record(r.cells()).map_err(|e| csv_error(&csv_path, e))?;
    }
    w.flush().map_err(|e| Error::io(&csv_path, e))?;
    Ok(SweepReport {
        parameter: spec.parameter.clone(),
        rows,
        csv: csv_path,
    })
}

/// `ltne sweep <sweep.json>`
pub fn cmd_sweep(path: &Path) -> Result<SweepReport> {
    let (spec, dir, stem) = SweepSpec::load(path)?;
    run_sweep(&spec, &dir, &stem)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSpectrum {
    pub m: usize,
    pub n: usize,
    pub psi_multiplier: f64,
    /// `[re, im]` of the two eigenvalues of the `theta`-`phi` block.
    pub block: [[f64; 2]; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearizeReport {
    pub abscissa: f64,
    pub conduction_coupling: bool,
    pub modes: Vec<ModeSpectrum>,
    /// Eigenvalues of the dense assembled matrix, for `max(Nx, Nz) <= 8`.
    pub dense: Option<Vec<[f64; 2]>>,
    /// Largest distance between the sorted dense and per-mode spectra.
    pub dense_mismatch: Option<f64>,
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

/// Largest size for which the dense spectrum is computed.
pub const DENSE_LIMIT: usize = 8;

fn sort_spectrum(v: &mut [[f64; 2]]) {
    v.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
}

/// Per-mode spectrum, abscissa and, for small truncations, the dense check.
pub fn linearize(cfg: &RunConfig) -> Result<LinearizeReport> {
    let p = cfg.params()?;
    let dom = cfg.domain()?;
    let opts = cfg.model_options();
    let op = assemble_linear(&p, &dom, opts)?;
    let mut modes = Vec::with_capacity(dom.modes());
    for m in 1..=dom.nx {
        for n in 1..=dom.nz {
            let (r1, i1, r2, i2) = block_eigenvalues(&op.block(m, n));
            modes.push(ModeSpectrum {
                m,
                n,
                psi_multiplier: op.psi_multiplier[[m - 1, n - 1]],
                block: [[r1, i1], [r2, i2]],
            });
        }
    }
    let (dense, dense_mismatch) = if dom.nx.max(dom.nz) <= DENSE_LIMIT {
        let mut d: Vec<[f64; 2]> = op
            .dense()
            .complex_eigenvalues()
            .iter()
            .map(|c| [c.re, c.im])
            .collect();
        sort_spectrum(&mut d);
        let mismatch = if opts.conduction_coupling {
            None
        } else {
            let mut modal: Vec<[f64; 2]> = op.modal_spectrum().into_iter().map(|(r, i)| [r, i]).collect();
            sort_spectrum(&mut modal);
            Some(
                d.iter()
                    .zip(&modal)
                    .map(|(a, b)| (a[0] - b[0]).hypot(a[1] - b[1]))
                    .fold(0.0, f64::max),
            )
        };
        (Some(d), mismatch)
    } else {
        (None, None)
    };
    Ok(LinearizeReport {
        abscissa: spectral_abscissa(&op),
        conduction_coupling: opts.conduction_coupling,
        modes,
        dense,
        dense_mismatch,
        output: None,
    })
}

/// `ltne linearize <config.json>`: writes `<stem>.spectrum.json`.
pub fn cmd_linearize(config_path: &Path) -> Result<LinearizeReport> {
    let target = RunTarget::from_file(config_path)?;
    let mut report = linearize(&target.config)?;
    let out = target.out_dir.join(format!("{}.spectrum.json", target.stem));
    let text = serde_json::to_string_pretty(&report).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(&out, text).map_err(|e| Error::io(&out, e))?;
    report.output = Some(out);
    Ok(report)
}

/// Norms of the last record, if any.
pub fn terminal_norms(records: &[TrajectoryRecord]) -> Option<Norms> {
    records.last().map(|r| r.norms)
}
