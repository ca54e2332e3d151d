//! Time stepping.
//!
//! The default scheme is CNAB2: the diagonal `psi` relaxation and the 2x2
//! `theta`-`phi` blocks go through Crank-Nicolson, while the `Ra` coupling,
//! the optional conduction source and the Jacobian are extrapolated with
//! second-order Adams-Bashforth. Whenever there is no history (first step,
//! or right after a restart point) one IMEX Heun step is taken instead, which
//! keeps the scheme second order from the start.

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::dynamics::{block_eigenvalues, Block, Dynamics, State, Tangent};
use crate::error::{Error, Result};
use crate::spectral::{norm_l2, SpectralField};

/// Any field with an `L2` norm above this aborts the run.
pub const BLOWUP_THRESHOLD: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    ImexCnab2,
    Etd1,
    Rk4Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub t_end: f64,
    pub sample_every: u64,
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig {
            dt: 1e-3,
            scheme: Scheme::ImexCnab2,
            t_end: 5.0,
            sample_every: 10,
        }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter {
                field: "dt",
                value: self.dt,
                reason: "must be positive and finite",
            });
        }
        if !self.t_end.is_finite() {
            return Err(Error::InvalidParameter {
                field: "t_end",
                value: self.t_end,
                reason: "must be finite",
            });
        }
        if self.sample_every == 0 {
            return Err(Error::InvalidParameter {
                field: "sample_every",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        Ok(())
    }

    /// Number of steps from `t_start` to `t_end`.
    pub fn steps_from(&self, t_start: f64) -> Result<u64> {
        let span = self.t_end - t_start;
        if span < -0.5 * self.dt {
            return Err(Error::InvalidParameter {
                field: "t_end",
                value: self.t_end,
                reason: "lies before the initial time",
            });
        }
        Ok((span / self.dt).round().max(0.0) as u64)
    }
}

fn mat_vec(b: &Block, x: f64, y: f64) -> (f64, f64) {
    (b[0][0] * x + b[0][1] * y, b[1][0] * x + b[1][1] * y)
}

fn inverse(b: &Block) -> Block {
    let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
    [[b[1][1] / det, -b[0][1] / det], [-b[1][0] / det, b[0][0] / det]]
}

fn mat_mul(a: &Block, b: &Block) -> Block {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// `f(A)` for a 2x2 block with real eigenvalues, through the Newton form
/// `f(l2) I + f[l1, l2] (A - l2 I)`. `df` is the derivative used when the
/// eigenvalues nearly coincide.
fn block_function(b: &Block, f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64) -> Block {
    let (l1, _, l2, _) = block_eigenvalues(b);
    let gap = l1 - l2;
    let dd = if gap.abs() <= 1e-8 * l1.abs().max(l2.abs()).max(1.0) {
        df(0.5 * (l1 + l2))
    } else {
        (f(l1) - f(l2)) / gap
    };
    let f2 = f(l2);
    [
        [f2 + dd * (b[0][0] - l2), dd * b[0][1]],
        [dd * b[1][0], f2 + dd * (b[1][1] - l2)],
    ]
}

/// `(e^z - 1) / z`
fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-8 {
        1.0 + 0.5 * z
    } else {
        z.exp_m1() / z
    }
}

fn dphi1(z: f64) -> f64 {
    if z.abs() < 1e-5 {
        0.5 + z / 6.0
    } else {
        (z * z.exp() - z.exp_m1()) / (z * z)
    }
}

/// Per-mode propagators `s -> Q s + P h N` for a linear part `A`.
#[derive(Debug, Clone)]
struct Propagators {
    psi_q: Array2<f64>,
    psi_p: Array2<f64>,
    blk_q: Array2<Block>,
    blk_p: Array2<Block>,
}

impl Propagators {
    fn crank_nicolson(dynamics: &Dynamics, dt: f64) -> Self {
        let op = dynamics.linear();
        let h = 0.5 * dt;
        let psi_p = op.psi_multiplier.mapv(|l| 1.0 / (1.0 - h * l));
        let psi_q = op.psi_multiplier.mapv(|l| (1.0 + h * l) / (1.0 - h * l));
        let blk_p = op.blocks.mapv(|b| {
            inverse(&[[1.0 - h * b[0][0], -h * b[0][1]], [-h * b[1][0], 1.0 - h * b[1][1]]])
        });
        let mut blk_q = blk_p.clone();
        Zip::from(&mut blk_q).and(&op.blocks).for_each(|q, b| {
            let plus = [[1.0 + h * b[0][0], h * b[0][1]], [h * b[1][0], 1.0 + h * b[1][1]]];
            *q = mat_mul(q, &plus);
        });
        Propagators { psi_q, psi_p, blk_q, blk_p }
    }

    fn exponential(dynamics: &Dynamics, dt: f64) -> Self {
        let op = dynamics.linear();
        let psi_q = op.psi_multiplier.mapv(|l| (dt * l).exp());
        let psi_p = op.psi_multiplier.mapv(|l| phi1(dt * l));
        let scaled = op
            .blocks
            .mapv(|b| [[dt * b[0][0], dt * b[0][1]], [dt * b[1][0], dt * b[1][1]]]);
        let blk_q = scaled.mapv(|b| block_function(&b, f64::exp, f64::exp));
        let blk_p = scaled.mapv(|b| block_function(&b, phi1, dphi1));
        Propagators { psi_q, psi_p, blk_q, blk_p }
    }

    /// `Q s + P h (npsi, ntheta, 0)`
    fn advance(&self, s: &State, h: f64, npsi: &SpectralField, ntheta: &SpectralField) -> State {
        let mut psi = s.psi.coeffs().clone();
        Zip::from(&mut psi)
            .and(&self.psi_q)
            .and(&self.psi_p)
            .and(npsi.coeffs())
            .for_each(|u, &q, &p, &n| *u = q * *u + p * h * n);
        let mut theta = s.theta.coeffs().clone();
        let mut phi = s.phi.coeffs().clone();
        Zip::from(&mut theta)
            .and(&mut phi)
            .and(&self.blk_q)
            .and(&self.blk_p)
            .and(ntheta.coeffs())
            .for_each(|th, ph, q, p, &n| {
                let (a, b) = mat_vec(q, *th, *ph);
                let (c, d) = mat_vec(p, h * n, 0.0);
                *th = a + c;
                *ph = b + d;
            });
        let dom = s.domain();
        State {
            psi: SpectralField::from_coeffs(dom, psi).expect("shape preserved"),
            theta: SpectralField::from_coeffs(dom, theta).expect("shape preserved"),
            phi: SpectralField::from_coeffs(dom, phi).expect("shape preserved"),
            t: s.t + h,
        }
    }
}

/// Checks a freshly computed state for NaN, infinities and runaway norms.
pub fn check_blowup(s: &State) -> Result<()> {
    for (name, f) in s.fields() {
        if !f.is_finite() {
            return Err(Error::Blowup {
                t: s.t,
                field: name,
                detail: "non-finite".into(),
            });
        }
        let n = norm_l2(f);
        if n > BLOWUP_THRESHOLD {
            return Err(Error::Blowup {
                t: s.t,
                field: name,
                detail: format!("of norm {n:e}, above {BLOWUP_THRESHOLD:e}"),
            });
        }
    }
    Ok(())
}

/// A single-run time stepper. Holds the multistep history, so one stepper
/// must only ever advance one trajectory.
#[derive(Debug, Clone)]
pub struct Stepper<'a> {
    dynamics: &'a Dynamics,
    cfg: StepperConfig,
    props: Option<Propagators>,
    history: Option<(SpectralField, SpectralField)>,
}

impl<'a> Stepper<'a> {
    pub fn new(dynamics: &'a Dynamics, cfg: StepperConfig) -> Result<Self> {
        cfg.validate()?;
        let props = match cfg.scheme {
            Scheme::ImexCnab2 => Some(Propagators::crank_nicolson(dynamics, cfg.dt)),
            Scheme::Etd1 => Some(Propagators::exponential(dynamics, cfg.dt)),
            Scheme::Rk4Explicit => None,
        };
        Ok(Stepper {
            dynamics,
            cfg,
            props,
            history: None,
        })
    }

    pub fn config(&self) -> &StepperConfig {
        &self.cfg
    }

    /// Forgets the multistep history. The next step is self-starting, exactly
    /// as for a fresh run from the current state.
    pub fn reset_history(&mut self) {
        self.history = None;
    }

    /// Advances by one `dt`.
    pub fn step(&mut self, s: &State) -> Result<State> {
        s.check_domain(self.dynamics.domain())?;
        let dt = self.cfg.dt;
        let next = match (self.cfg.scheme, &self.props) {
            (Scheme::ImexCnab2, Some(props)) => {
                let (np, nt) = self.dynamics.explicit_terms(s)?;
                let next = match self.history.take() {
                    Some((hp, ht)) => {
                        let mut ep = np.scaled(1.5);
                        ep.axpy(-0.5, &hp);
                        let mut et = nt.scaled(1.5);
                        et.axpy(-0.5, &ht);
                        props.advance(s, dt, &ep, &et)
                    }
                    None => {
                        let pred = props.advance(s, dt, &np, &nt);
                        let (pp, pt) = self.dynamics.explicit_terms(&pred)?;
                        let mut ep = np.scaled(0.5);
                        ep.axpy(0.5, &pp);
                        let mut et = nt.scaled(0.5);
                        et.axpy(0.5, &pt);
                        props.advance(s, dt, &ep, &et)
                    }
                };
                self.history = Some((np, nt));
                next
            }
            (Scheme::Etd1, Some(props)) => {
                let (np, nt) = self.dynamics.explicit_terms(s)?;
                props.advance(s, dt, &np, &nt)
            }
            _ => self.rk4(s)?,
        };
        let mut next = next;
        next.t = s.t + dt;
        check_blowup(&next)?;
        Ok(next)
    }

    fn rk4(&self, s: &State) -> Result<State> {
        let dt = self.cfg.dt;
        let stage = |k: &Tangent, h: f64| {
            let mut y = s.clone();
            y.add_tangent(h, k);
            y
        };
        let k1 = self.dynamics.rhs(s)?;
        let k2 = self.dynamics.rhs(&stage(&k1, 0.5 * dt))?;
        let k3 = self.dynamics.rhs(&stage(&k2, 0.5 * dt))?;
        let k4 = self.dynamics.rhs(&stage(&k3, dt))?;
        let mut y = s.clone();
        y.add_tangent(dt / 6.0, &k1);
        y.add_tangent(dt / 3.0, &k2);
        y.add_tangent(dt / 3.0, &k3);
        y.add_tangent(dt / 6.0, &k4);
        Ok(y)
    }
}

/// What a monitor sees at each sample.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'s> {
    /// Steps taken since the start of this run.
    pub step: u64,
    pub state: &'s State,
    /// State one step earlier; `None` at the initial sample.
    pub prev: Option<&'s State>,
    pub dt: f64,
}

/// Per-sample callback driven by [`run`].
pub trait Monitor {
    type Record;

    fn observe(&mut self, dynamics: &Dynamics, sample: Sample<'_>) -> Result<Self::Record>;

    /// Called at every restart point, after the multistep history has been
    /// reset.
    fn checkpoint(&mut self, _state: &State) -> Result<()> {
        Ok(())
    }
}

impl Monitor for () {
    type Record = ();

    fn observe(&mut self, _: &Dynamics, _: Sample<'_>) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Retain every sampled state in the trajectory.
    pub keep_states: bool,
    /// Step counts (relative to the start) at which the multistep history is
    /// reset and [`Monitor::checkpoint`] fires. A run resumed from the state
    /// at such a step reproduces the remainder bit for bit.
    pub checkpoints: Vec<u64>,
}

#[derive(Debug)]
pub struct Trajectory<R> {
    pub times: Vec<f64>,
    /// Sampled states, empty unless `keep_states` was set.
    pub states: Vec<State>,
    pub records: Vec<R>,
    /// Last state successfully computed.
    pub final_state: State,
    pub steps: u64,
    /// Set when the run stopped early; the samples above are still valid.
    pub failure: Option<Error>,
}

impl<R> Trajectory<R> {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }

    /// Turns an early stop into an error.
    pub fn into_result(self) -> Result<Self> {
        match self.failure {
            Some(e) => Err(e),
            None => Ok(self),
        }
    }
}

/// Integrates `s0` to `cfg.t_end`, calling the monitor at the initial state
/// and every `sample_every` steps. Sample `k` sits at exactly
/// `s0.t + k * dt`.
pub fn run<M: Monitor>(
    dynamics: &Dynamics,
    s0: &State,
    cfg: &StepperConfig,
    monitor: &mut M,
    opts: &RunOptions,
) -> Result<Trajectory<M::Record>> {
    s0.check_domain(dynamics.domain())?;
    check_blowup(s0)?;
    let n_steps = cfg.steps_from(s0.t)?;
    let mut stepper = Stepper::new(dynamics, *cfg)?;
    let t_start = s0.t;

    let mut traj = Trajectory {
        times: vec![t_start],
        states: Vec::new(),
        records: Vec::new(),
        final_state: s0.clone(),
        steps: 0,
        failure: None,
    };
    let first = monitor.observe(
        dynamics,
        Sample {
            step: 0,
            state: s0,
            prev: None,
            dt: cfg.dt,
        },
    )?;
    traj.records.push(first);
    if opts.keep_states {
        traj.states.push(s0.clone());
    }

    let mut state = s0.clone();
    for k in 1..=n_steps {
        let mut next = match stepper.step(&state) {
            Ok(n) => n,
            Err(e) => {
                traj.failure = Some(e);
                break;
            }
        };
        next.t = t_start + k as f64 * cfg.dt;
        let prev = std::mem::replace(&mut state, next);
        traj.steps = k;
        if k % cfg.sample_every == 0 {
            let sample = Sample {
                step: k,
                state: &state,
                prev: Some(&prev),
                dt: cfg.dt,
            };
            match monitor.observe(dynamics, sample) {
                Ok(r) => traj.records.push(r),
                Err(e) => {
                    traj.failure = Some(e);
                    break;
                }
            }
            traj.times.push(state.t);
            if opts.keep_states {
                traj.states.push(state.clone());
            }
        }
        if opts.checkpoints.contains(&k) {
            stepper.reset_history();
            if let Err(e) = monitor.checkpoint(&state) {
                traj.failure = Some(e);
                break;
            }
        }
    }
    traj.final_state = state;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;
    use crate::dynamics::ModelOptions;
    use crate::params::{Domain, Params};

    #[test]
    fn block_function_matches_series() {
        let b = [[-0.3, 0.2], [0.1, -0.5]];
        let e = block_function(&b, f64::exp, f64::exp);
        // truncated Taylor series of exp(B)
        let mut term = [[1.0, 0.0], [0.0, 1.0]];
        let mut sum = term;
        for k in 1..30 {
            term = mat_mul(&term, &b);
            term = [
                [term[0][0] / k as f64, term[0][1] / k as f64],
                [term[1][0] / k as f64, term[1][1] / k as f64],
            ];
            for i in 0..2 {
                for j in 0..2 {
                    sum[i][j] += term[i][j];
                }
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(e[i][j], sum[i][j], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn step_count_rounds_to_grid() {
        let cfg = StepperConfig {
            dt: 1e-3,
            t_end: 0.3,
            ..Default::default()
        };
        assert_eq!(cfg.steps_from(0.0).unwrap(), 300);
        assert_eq!(cfg.steps_from(0.3).unwrap(), 0);
        assert!(cfg.steps_from(1.0).is_err());
    }

    #[test]
    fn zero_state_stays_zero_under_every_scheme() {
        let dom = Domain::new(1.0, 4, 4).unwrap();
        let d = Dynamics::new(Params::default(), dom, ModelOptions::default()).unwrap();
        for scheme in [Scheme::ImexCnab2, Scheme::Etd1, Scheme::Rk4Explicit] {
            let cfg = StepperConfig {
                dt: 1e-3,
                scheme,
                t_end: 0.01,
                sample_every: 1,
            };
            let traj = run(&d, &State::zeros(&dom), &cfg, &mut (), &RunOptions::default()).unwrap();
            assert!(traj.is_complete());
            assert_eq!(traj.final_state.theta.max_abs(), 0.0);
            assert_eq!(traj.times.len(), 11);
        }
    }
}
