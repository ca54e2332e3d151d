//! Run and sweep configuration files.
//!
//! A run configuration is one JSON object. Dimensionless numbers use flat
//! keys (`Ra`, `Pr`, `Da`, `C`, `lambda`, `gamma`, `alpha`, `a`); a
//! `physical` object may be given instead or in addition, in which case the
//! flat keys override the derived values. Relative paths are resolved
//! against the directory of the configuration file.
//!
//! ```json
//! {
//!   "Ra": 100, "a": 1,
//!   "Nx": 32, "Nz": 32,
//!   "dt": 1e-3, "t_end": 5, "sample_every": 10,
//!   "initial": { "type": "random", "seed": 7 },
//!   "output": { "snapshot_times": [2.5], "plot_csv": true }
//! }
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::certificates::CertificateConfig;
use crate::dynamics::{Dynamics, ModelOptions, State};
use crate::error::{Error, Result};
use crate::integrator::{Scheme, StepperConfig};
use crate::params::{nondimensionalize_with_cap, Domain, Params, PhysicalParams, DEFAULT_NUMBER_CAP};
use crate::snapshot;
use crate::spectral::SpectralField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldName {
    Psi,
    Theta,
    Phi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeValue {
    pub field: FieldName,
    pub m: usize,
    pub n: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalyticIc {
    /// Geometrically decaying coefficients on modes `m, n <= bandwidth`,
    /// zero above.
    BandLimited,
    /// `theta_mn = 1 / (m^2 + n^2)` on every retained mode.
    AlgebraicTail,
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

fn four() -> usize {
    4
}

/// Where the initial state comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    Zero,
    /// `u_mn = U(-1, 1) exp(-decay (m + n))` for `psi`, `theta`, `phi` in
    /// turn, rescaled to `E_Y = energy`.
    Random {
        seed: u64,
        #[serde(default = "one")]
        energy: f64,
        #[serde(default = "half")]
        decay: f64,
    },
    Modes {
        modes: Vec<ModeValue>,
    },
    Analytic {
        name: AnalyticIc,
        #[serde(default = "four")]
        bandwidth: usize,
        /// Rescale to this `E_Y`; keep the raw amplitudes when absent.
        #[serde(default)]
        energy: Option<f64>,
    },
    Snapshot {
        path: PathBuf,
    },
}

impl Default for InitialCondition {
    fn default() -> Self {
        InitialCondition::Random {
            seed: 0,
            energy: 1.0,
            decay: 0.5,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Time-series file; defaults to `<config stem>.jsonl`.
    pub jsonl: Option<PathBuf>,
    /// Times at which `<stem>.t<time>.snap` files are written. Each must be a
    /// whole number of steps after the initial time.
    pub snapshot_times: Vec<f64>,
    /// Also write `<stem>.plot.csv`.
    pub plot_csv: bool,
}

fn default_a() -> f64 {
    1.0
}

fn default_n() -> usize {
    32
}

fn default_dt() -> f64 {
    1e-3
}

fn default_t_end() -> f64 {
    5.0
}

fn default_sample_every() -> u64 {
    10
}

fn default_true() -> bool {
    true
}

fn default_cap() -> f64 {
    DEFAULT_NUMBER_CAP
}

/// A complete run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "Ra", default, skip_serializing_if = "Option::is_none")]
    pub ra: Option<f64>,
    #[serde(rename = "Pr", default, skip_serializing_if = "Option::is_none")]
    pub pr: Option<f64>,
    #[serde(rename = "Da", default, skip_serializing_if = "Option::is_none")]
    pub da: Option<f64>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physical: Option<PhysicalParams>,
    /// Sanity cap on every dimensionless number.
    #[serde(default = "default_cap")]
    pub number_cap: f64,

    #[serde(default = "default_a")]
    pub a: f64,
    #[serde(rename = "Nx", default = "default_n")]
    pub nx: usize,
    #[serde(rename = "Nz", default = "default_n")]
    pub nz: usize,
    #[serde(rename = "Mx", default, skip_serializing_if = "Option::is_none")]
    pub mx: Option<usize>,
    #[serde(rename = "Mz", default, skip_serializing_if = "Option::is_none")]
    pub mz: Option<usize>,

    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "default_sample_every")]
    pub sample_every: u64,

    #[serde(default = "default_true")]
    pub nonlinear: bool,
    /// Adds the background-gradient source to the fluid temperature equation.
    #[serde(default)]
    pub conduction_coupling: bool,

    #[serde(default)]
    pub initial: InitialCondition,
    #[serde(default)]
    pub certificates: CertificateConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("every field has a default")
    }
}

/// Deserializes JSON text, reporting the failing key path and line.
pub fn parse_json<T: DeserializeOwned>(text: &str, path: &Path) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        let inner = e.into_inner();
        let msg = if key == "." || key.is_empty() {
            format!("{inner}")
        } else {
            format!("at `{key}`: {inner}")
        };
        Error::parse(path, inner.line(), msg)
    })
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Parsed configuration together with where it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    /// Directory used for relative paths and default outputs.
    pub base_dir: PathBuf,
    /// File stem used to name default outputs.
    pub stem: String,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<LoadedConfig> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: RunConfig = parse_json(&text, path)?;
        let base_dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".into());
        config.validate()?;
        Ok(LoadedConfig {
            config,
            base_dir,
            stem,
        })
    }

    /// Dimensionless numbers after applying the physical map and flat overrides.
    pub fn params(&self) -> Result<Params> {
        let mut p = match &self.physical {
            Some(ph) => nondimensionalize_with_cap(ph, self.number_cap)?,
            None => Params::default(),
        };
        let overrides = [
            (&mut p.ra, self.ra),
            (&mut p.pr, self.pr),
            (&mut p.da, self.da),
            (&mut p.c, self.c),
            (&mut p.lambda, self.lambda),
            (&mut p.gamma, self.gamma),
            (&mut p.alpha, self.alpha),
        ];
        for (slot, v) in overrides {
            if let Some(v) = v {
                *slot = v;
            }
        }
        p.validate_with_cap(self.number_cap)?;
        Ok(p)
    }

    pub fn domain(&self) -> Result<Domain> {
        match (self.mx, self.mz) {
            (None, None) => Domain::new(self.a, self.nx, self.nz),
            (mx, mz) => Domain::with_padding(
                self.a,
                self.nx,
                self.nz,
                mx.unwrap_or(2 * self.nx + 2),
                mz.unwrap_or(2 * self.nz + 2),
            ),
        }
    }

    pub fn stepper(&self) -> StepperConfig {
        StepperConfig {
            dt: self.dt,
            scheme: self.scheme,
            t_end: self.t_end,
            sample_every: self.sample_every,
        }
    }

    pub fn model_options(&self) -> ModelOptions {
        ModelOptions {
            nonlinear: self.nonlinear,
            conduction_coupling: self.conduction_coupling,
        }
    }

    pub fn dynamics(&self) -> Result<Dynamics> {
        Dynamics::new(self.params()?, self.domain()?, self.model_options())
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        self.domain()?;
        self.stepper().validate()?;
        self.certificates.validate()?;
        if let Some(bad) = self.output.snapshot_times.iter().find(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter {
                field: "snapshot_times",
                value: *bad,
                reason: "must be finite",
            });
        }
        Ok(())
    }

    /// Sets one of the seven numbers or `a` by its configuration key.
    pub fn set_parameter(&mut self, name: &str, value: f64) -> Result<()> {
        match name {
            "Ra" => self.ra = Some(value),
            "Pr" => self.pr = Some(value),
            "Da" => self.da = Some(value),
            "C" => self.c = Some(value),
            "lambda" => self.lambda = Some(value),
            "gamma" => self.gamma = Some(value),
            "alpha" => self.alpha = Some(value),
            "a" => self.a = value,
            other => {
                return Err(Error::Config(format!(
                    "unknown sweep parameter `{other}`; expected one of Ra, Pr, Da, C, lambda, gamma, alpha, a"
                )))
            }
        }
        Ok(())
    }

    /// Short hex digest of the canonical serialization.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Builds the initial state. Snapshot paths are resolved against `base_dir`.
    pub fn initial_state(&self, base_dir: &Path) -> Result<State> {
        let p = self.params()?;
        let dom = self.domain()?;
        initial_state(&self.initial, &p, &dom, base_dir)
    }
}

fn energy_of(p: &Params, s: &State) -> f64 {
    crate::certificates::Norms::of(p, s).e_y
}

fn normalize(p: &Params, s: State, energy: f64) -> Result<State> {
    if !(energy >= 0.0 && energy.is_finite()) {
        return Err(Error::InvalidParameter {
            field: "energy",
            value: energy,
            reason: "must be finite and non-negative",
        });
    }
    let e = energy_of(p, &s);
    if e == 0.0 {
        return Ok(s);
    }
    Ok(s.scaled((energy / e).sqrt()))
}

pub fn initial_state(ic: &InitialCondition, p: &Params, dom: &Domain, base_dir: &Path) -> Result<State> {
    match ic {
        InitialCondition::Zero => Ok(State::zeros(dom)),
        InitialCondition::Random { seed, energy, decay } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut field = || {
                SpectralField::from_fn(dom, |m, n| {
                    rng.random_range(-1.0..1.0) * (-decay * (m + n) as f64).exp()
                })
            };
            let psi = field();
            let theta = field();
            let phi = field();
            normalize(p, State::new(psi, theta, phi, 0.0)?, *energy)
        }
        InitialCondition::Modes { modes } => {
            let mut s = State::zeros(dom);
            for mv in modes {
                let f = match mv.field {
                    FieldName::Psi => &mut s.psi,
                    FieldName::Theta => &mut s.theta,
                    FieldName::Phi => &mut s.phi,
                };
                f.set(mv.m, mv.n, mv.value)?;
            }
            Ok(s)
        }
        InitialCondition::Analytic {
            name,
            bandwidth,
            energy,
        } => {
            let s = analytic_state(*name, *bandwidth, dom);
            match energy {
                Some(e) => normalize(p, s, *e),
                None => Ok(s),
            }
        }
        InitialCondition::Snapshot { path } => {
            let path = resolve(base_dir, path);
            let s = snapshot::read(&path)?;
            let sd = s.domain();
            if sd.nx != dom.nx || sd.nz != dom.nz || sd.a != dom.a {
                return Err(Error::DimensionMismatch(format!(
                    "snapshot {} holds Nx={} Nz={} a={}, configuration asks for Nx={} Nz={} a={}",
                    path.display(),
                    sd.nx,
                    sd.nz,
                    sd.a,
                    dom.nx,
                    dom.nz,
                    dom.a
                )));
            }
            let rebase = |f: &SpectralField| SpectralField::from_coeffs(dom, f.coeffs().clone());
            State::new(rebase(&s.psi)?, rebase(&s.theta)?, rebase(&s.phi)?, s.t)
        }
    }
}

/// The named analytic initial states.
pub fn analytic_state(name: AnalyticIc, bandwidth: usize, dom: &Domain) -> State {
    match name {
        AnalyticIc::BandLimited => {
            let shape = |scale: f64, shift: f64| {
                SpectralField::from_fn(dom, |m, n| {
                    if m <= bandwidth && n <= bandwidth {
                        scale * 0.5f64.powi((m + n) as i32 - 2) * (1.0 + shift * (m as f64 - n as f64))
                    } else {
                        0.0
                    }
                })
            };
            State {
                psi: shape(0.01, 0.1),
                theta: shape(1.0, 0.0),
                phi: shape(0.5, -0.1),
                t: 0.0,
            }
        }
        AnalyticIc::AlgebraicTail => State {
            psi: SpectralField::zeros(dom),
            theta: SpectralField::from_fn(dom, |m, n| 1.0 / (m * m + n * n) as f64),
            phi: SpectralField::zeros(dom),
            t: 0.0,
        },
    }
}

/// The base configuration of a sweep, inline or by path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BaseConfig {
    Path(PathBuf),
    Inline(Box<RunConfig>),
}

/// One parameter varied over a list of values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base: BaseConfig,
    pub parameter: String,
    pub values: Vec<f64>,
    /// CSV table; defaults to `<sweep stem>.csv`.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Write each child's JSONL time series next to the table.
    #[serde(default = "default_true")]
    pub child_jsonl: bool,
}

pub const SWEEP_PARAMETERS: [&str; 8] = ["Ra", "Pr", "Da", "C", "lambda", "gamma", "alpha", "a"];

impl SweepSpec {
    pub fn load(path: &Path) -> Result<(SweepSpec, PathBuf, String)> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: SweepSpec = parse_json(&text, path)?;
        let base_dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "sweep".into());
        spec.validate()?;
        Ok((spec, base_dir, stem))
    }

    pub fn validate(&self) -> Result<()> {
        if !SWEEP_PARAMETERS.contains(&self.parameter.as_str()) {
            return Err(Error::Config(format!(
                "unknown sweep parameter `{}`; expected one of {}",
                self.parameter,
                SWEEP_PARAMETERS.join(", ")
            )));
        }
        Ok(())
    }

    /// The base run configuration and the directory its relative paths use.
    pub fn base_config(&self, base_dir: &Path) -> Result<(RunConfig, PathBuf)> {
        match &self.base {
            BaseConfig::Inline(c) => Ok(((**c).clone(), base_dir.to_path_buf())),
            BaseConfig::Path(p) => {
                let loaded = RunConfig::load(&resolve(base_dir, p))?;
                Ok((loaded.config, loaded.base_dir))
            }
        }
    }
}

pub(crate) fn resolve_path(base: &Path, p: &Path) -> PathBuf {
    resolve(base, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        let c: RunConfig = parse_json("{}", Path::new("c.json")).unwrap();
        assert_eq!(c.params().unwrap(), Params::default());
        assert_eq!(c.nx, 32);
        assert_eq!(c.dt, 1e-3);
        assert_eq!(c.scheme, Scheme::ImexCnab2);
        assert!(!c.conduction_coupling);
    }

    #[test]
    fn flat_keys_override_physical() {
        let text = r#"{
            "physical": {"rho0":1,"eps":0.5,"K":1,"mu_f":1,"mu_c":1,"beta":1,"g":1,
                         "rhoc_f":1,"rhoc_s":1,"kappa_f":1,"kappa_s":1,"h":1,"T_l":2,"T_u":1},
            "Ra": 7
        }"#;
        let c: RunConfig = parse_json(text, Path::new("c.json")).unwrap();
        let p = c.params().unwrap();
        assert_eq!(p.ra, 7.0);
        assert_eq!(p.lambda, 2.0);
        assert_eq!(p.pr, 0.5);
    }

    #[test]
    fn unknown_key_reports_line() {
        let text = "{\n  \"Ra\": 10,\n  \"Rayleigh\": 3\n}";
        match parse_json::<RunConfig>(text, Path::new("c.json")) {
            Err(Error::Parse { line, msg, .. }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("Rayleigh"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_type_names_the_key() {
        let text = "{\n \"initial\": {\"type\": \"random\", \"seed\": \"x\"}\n}";
        let err = parse_json::<RunConfig>(text, Path::new("c.json")).unwrap_err();
        assert!(err.to_string().contains("initial"), "{err}");
    }

    #[test]
    fn random_ic_is_reproducible_and_normalized() {
        let dom = Domain::new(1.0, 8, 8).unwrap();
        let p = Params::default();
        let ic = InitialCondition::Random {
            seed: 42,
            energy: 2.5,
            decay: 0.5,
        };
        let a = initial_state(&ic, &p, &dom, Path::new(".")).unwrap();
        let b = initial_state(&ic, &p, &dom, Path::new(".")).unwrap();
        assert_eq!(a, b);
        assert!((energy_of(&p, &a) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.set_parameter("Ra", 10.0).unwrap();
        assert_ne!(a.hash(), b.hash());
        assert!(b.set_parameter("Rayleigh", 1.0).is_err());
    }
}
