//! Runtime certificates for the a priori estimates.
//!
//! Every sample of a run becomes a [`TrajectoryRecord`]. The record splits
//! into raw observations (norms and a few functionals computed from states)
//! and verdicts. Verdicts are pure functions of the observations seen so far
//! plus the constants, so re-evaluating a stored time series reproduces them
//! bit for bit; [`CertificateEvaluator`] is the single code path used both
//! online and offline.
//!
//! Certificates:
//!
//! | name          | inequality                                                              |
//! |---------------|-------------------------------------------------------------------------|
//! | `decay`       | `|theta|^2 + |phi|^2 <= M8 exp(-M7 t) rho0^2`                           |
//! | `dissipation` | `int_0^t |grad theta|^2 + |grad phi|^2 <= M9 rho0^2`                    |
//! | `psi_absorb`  | `|lap psi(t)|^2 <= |lap psi(t0)|^2 e^{-k(t-t0)} + (1-e^{-k(t-t0)}) Ra^2 rho0^2 / 4C` |
//! | `h1_absorb`   | `y(s) <= (a3/r + a2) exp(a1)` over windows `[s-r, s]` with `s >= t0 + r` |
//! | `cdep`        | `D(t) <= D(0) exp(int_0^t alpha)` for a perturbed companion run         |
//! | `ebal`        | energy identity residual and `dE/dt <= -M1 Y_1/2 + M2 E_Y`              |
//! | `tail`        | `tail_fraction(field, k, cutoff) <= threshold` after a warm-up          |

use serde::{Deserialize, Serialize};

use crate::dynamics::{Dynamics, State};
use crate::error::{Error, Result};
use crate::integrator::{Monitor, Sample, Stepper, StepperConfig};
use crate::params::{poincare_constant_for_aspect, Params};
use crate::spectral::{hk_seminorm_sq, tail_fraction};

/// Tunables and toggles of the certificate suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertificateConfig {
    /// Sobolev constant used by the `h1_absorb` and `cdep` bounds.
    pub mso: f64,
    /// Auxiliary factor of the dissipation bound; defaults to `min(1, 1/alpha)/2`.
    pub c_tilde: Option<f64>,
    /// Window length of the uniform Gronwall bound, rounded to whole samples.
    pub r: f64,
    pub decay: bool,
    pub dissipation: bool,
    pub psi_absorb: bool,
    pub h1_absorb: bool,
    pub cdep: bool,
    pub ebal: bool,
    /// The tail test is diagnostic by default: the fractions are always
    /// recorded, the verdict only when enabled.
    pub tail: bool,
    /// Size of the perturbation applied to the companion run's `theta`.
    pub cdep_perturbation: f64,
    /// One-based `(m, n)` mode that receives the perturbation.
    pub cdep_mode: (usize, usize),
    /// Allowed relative residual of the discrete energy identity.
    pub ebal_rel_tol: f64,
    pub tail_k: u32,
    /// Defaults to `min(Nx, Nz) / 2`.
    pub tail_cutoff: Option<usize>,
    pub tail_threshold: f64,
    /// Time after the initial sample before the tail verdict applies.
    pub tail_warmup: f64,
}

impl Default for CertificateConfig {
    fn default() -> Self {
        CertificateConfig {
            mso: 1.0,
            c_tilde: None,
            r: 1.0,
            decay: true,
            dissipation: true,
            psi_absorb: true,
            h1_absorb: true,
            cdep: true,
            ebal: true,
            tail: false,
            cdep_perturbation: 1e-6,
            cdep_mode: (1, 1),
            ebal_rel_tol: 1e-2,
            tail_k: 2,
            tail_cutoff: None,
            tail_threshold: 1e-8,
            tail_warmup: 1.0,
        }
    }
}

impl CertificateConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |field, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    field,
                    value: v,
                    reason: "must be positive and finite",
                })
            }
        };
        pos("mso", self.mso)?;
        pos("r", self.r)?;
        pos("ebal_rel_tol", self.ebal_rel_tol)?;
        pos("tail_threshold", self.tail_threshold)?;
        if !(self.tail_warmup >= 0.0) {
            return Err(Error::InvalidParameter {
                field: "tail_warmup",
                value: self.tail_warmup,
                reason: "must be non-negative",
            });
        }
        if !(self.cdep_perturbation.is_finite()) {
            return Err(Error::InvalidParameter {
                field: "cdep_perturbation",
                value: self.cdep_perturbation,
                reason: "must be finite",
            });
        }
        Ok(())
    }
}

/// Constants of the estimates for one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateConstants {
    pub m_p: f64,
    pub m1: f64,
    pub m2: f64,
    pub m7: f64,
    pub m8: f64,
    pub m9: f64,
    pub c_tilde: f64,
    /// Entry time into the `theta`-`phi` ball of radius `rho0`.
    pub t0: f64,
    pub rho0_sq: f64,
    /// Radius of the absorbing ball in `Y`.
    pub rho_r_sq: f64,
    pub mso: f64,
    /// Norm-equivalence constant between `H^2` and `lap`; exactly one in the sine basis.
    pub c_equiv: f64,
}

pub fn default_c_tilde(p: &Params) -> f64 {
    0.5 * (1.0f64).min(1.0 / p.alpha)
}

/// Evaluates every constant. `rho0_sq` is `|theta(0)|^2 + |phi(0)|^2`.
pub fn compute_constants(
    p: &Params,
    aspect: f64,
    cfg: &CertificateConfig,
    rho0_sq: f64,
) -> Result<CertificateConstants> {
    p.validate()?;
    cfg.validate()?;
    let c_tilde = cfg.c_tilde.unwrap_or_else(|| default_c_tilde(p));
    let c_max = (1.0f64).min(1.0 / p.alpha);
    if !(c_tilde > 0.0 && c_tilde < c_max) {
        return Err(Error::InvalidParameter {
            field: "c_tilde",
            value: c_tilde,
            reason: "must lie strictly between 0 and min(1, 1/alpha)",
        });
    }
    let m_p = poincare_constant_for_aspect(aspect);
    let (l, gl) = (p.lambda, p.gamma * p.lambda);
    let w_theta = 1.0 / (2.0 * l);
    let w_phi = p.alpha / (2.0 * gl);
    let m7 = (1.0 / m_p) * (1.0f64).min(1.0 / p.alpha);
    let m8 = w_theta.max(w_phi) / w_theta.min(w_phi);
    let m9 = w_theta.min(w_phi) / (w_theta.min(1.0 / (2.0 * gl)) * c_tilde);
    let m1 = 2.0 * (p.pr * p.c / (2.0 * p.da)).min(1.0).min(1.0 / p.alpha);
    let m2 = 2.0
        * (1.0f64)
            .max(p.ra * p.ra / (2.0 * p.c) + l * p.gamma / 4.0)
            .max(l / (4.0 * p.alpha));
    Ok(CertificateConstants {
        m_p,
        m1,
        m2,
        m7,
        m8,
        m9,
        c_tilde,
        t0: m8.ln() / m7,
        rho0_sq,
        rho_r_sq: rho0_sq * (1.0 + p.ra * p.ra / (4.0 * p.c)),
        mso: cfg.mso,
        c_equiv: 1.0,
    })
}

impl CertificateConstants {
    /// Growth coefficient of the uniform Gronwall bound, at a given `|lap psi|^2`.
    pub fn m10(&self, p: &Params, lap_psi2: f64) -> f64 {
        let (l, gl) = (p.lambda, p.gamma * p.lambda);
        p.ra * p.ra / (2.0 * p.c)
            + 2.0 * l
            + 2.0
            + 2.0 * self.c_equiv * self.mso * lap_psi2
            + (4.0 * gl + l * l) / (2.0 * p.alpha)
    }

    /// Rate function of the continuous-dependence bound.
    pub fn cdep_rate(&self, p: &Params, grad_theta2: f64) -> f64 {
        (self.mso * self.mso * grad_theta2 * p.pr / p.da)
            .max((p.ra * p.ra + p.gamma * p.lambda) / 4.0)
            .max(p.lambda / (4.0 * p.alpha))
    }
}

/// Squared norms of a state.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub lap_psi2: f64,
    pub theta2: f64,
    pub phi2: f64,
    pub grad_theta2: f64,
    pub grad_phi2: f64,
    pub gradlap_psi2: f64,
    pub e_y: f64,
}

impl Norms {
    pub fn of(p: &Params, s: &State) -> Norms {
        let lap_psi2 = hk_seminorm_sq(&s.psi, 2);
        let theta2 = hk_seminorm_sq(&s.theta, 0);
        let phi2 = hk_seminorm_sq(&s.phi, 0);
        Norms {
            lap_psi2,
            theta2,
            phi2,
            grad_theta2: hk_seminorm_sq(&s.theta, 1),
            grad_phi2: hk_seminorm_sq(&s.phi, 1),
            gradlap_psi2: hk_seminorm_sq(&s.psi, 3),
            e_y: lap_psi2 / p.psi_rate() + theta2 + p.alpha * phi2,
        }
    }

    /// `(Da/Pr) |grad lap psi|^2 + |grad theta|^2 + alpha |grad phi|^2`
    pub fn y_half(&self, p: &Params) -> f64 {
        self.gradlap_psi2 / p.psi_rate() + self.grad_theta2 + p.alpha * self.grad_phi2
    }
}

/// One sample: observations followed by verdicts. Verdicts of certificates
/// that are disabled or not yet applicable are `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub step: u64,
    pub norms: Norms,
    /// `(E_Y(next) - E_Y(prev)) / dt` over the last step.
    pub ebal_dedt: Option<f64>,
    /// Right-hand side of the half energy identity at the step midpoint.
    pub ebal_q: Option<f64>,
    /// Weighted `Y_1/2` norm squared at the step midpoint.
    pub ebal_y12: Option<f64>,
    /// `E_Y` at the step midpoint.
    pub ebal_ey: Option<f64>,
    /// Difference functional against the perturbed companion run.
    pub cdep_d: Option<f64>,
    /// Tail fractions of `psi`, `theta`, `phi`.
    pub tail_fracs: Option<[f64; 3]>,

    pub decay_ok: Option<bool>,
    pub decay_rhs: Option<f64>,
    pub decay_slack: Option<f64>,
    pub dissip_ok: Option<bool>,
    pub dissip_integral: Option<f64>,
    pub dissip_rhs: Option<f64>,
    pub dissip_slack: Option<f64>,
    pub psi_absorb_ok: Option<bool>,
    pub psi_absorb_rhs: Option<f64>,
    pub psi_absorb_slack: Option<f64>,
    pub psi_absorb_steady_ok: Option<bool>,
    pub h1_absorb_ok: Option<bool>,
    pub h1_absorb_rhs: Option<f64>,
    pub h1_absorb_slack: Option<f64>,
    pub cdep_ok: Option<bool>,
    pub cdep_bound: Option<f64>,
    pub cdep_slack: Option<f64>,
    pub ebal_resid: Option<f64>,
    pub ebal_rel_resid: Option<f64>,
    pub ebal_ineq_rhs: Option<f64>,
    pub ebal_ok: Option<bool>,
    pub ebal_slack: Option<f64>,
    pub tail_frac_k2: Option<f64>,
    pub tail_ok: Option<bool>,
}

impl TrajectoryRecord {
    /// The observation part, verdicts cleared.
    pub fn observation(&self) -> TrajectoryRecord {
        TrajectoryRecord {
            t: self.t,
            step: self.step,
            norms: self.norms,
            ebal_dedt: self.ebal_dedt,
            ebal_q: self.ebal_q,
            ebal_y12: self.ebal_y12,
            ebal_ey: self.ebal_ey,
            cdep_d: self.cdep_d,
            tail_fracs: self.tail_fracs,
            ..Default::default()
        }
    }

    /// `(name, ok)` for every certificate that produced a verdict.
    pub fn verdicts(&self) -> Vec<(&'static str, bool)> {
        [
            ("decay", self.decay_ok),
            ("dissipation", self.dissip_ok),
            ("psi_absorb", self.psi_absorb_ok),
            ("h1_absorb", self.h1_absorb_ok),
            ("cdep", self.cdep_ok),
            ("ebal", self.ebal_ok),
            ("tail", self.tail_ok),
        ]
        .into_iter()
        .filter_map(|(n, v)| v.map(|v| (n, v)))
        .collect()
    }

    pub fn all_ok(&self) -> bool {
        self.verdicts().iter().all(|(_, ok)| *ok)
    }
}

/// Outcome of one inequality `lhs <= rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Check {
    pub ok: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl Check {
    /// Relative slack `(rhs - lhs) / rhs`; `1` for `0 <= 0` and `-1` for a
    /// positive left side against a zero bound.
    pub fn new(lhs: f64, rhs: f64) -> Check {
        let slack = if rhs == 0.0 {
            if lhs <= 0.0 {
                1.0
            } else {
                -1.0
            }
        } else if rhs.is_infinite() {
            1.0
        } else {
            ((rhs - lhs) / rhs.abs()).max(-f64::MAX)
        };
        Check {
            ok: lhs <= rhs,
            lhs,
            rhs,
            slack,
        }
    }

    /// Same inequality with the bound given as `ln(rhs)`, for bounds that
    /// overflow. The stored `rhs` saturates at `f64::MAX`.
    pub fn from_log(lhs: f64, log_rhs: f64) -> Check {
        let rhs = log_rhs.exp().min(f64::MAX);
        let (ok, slack) = if lhs <= 0.0 {
            (true, 1.0)
        } else {
            let d = lhs.ln() - log_rhs;
            (d <= 0.0, (0.0 - d.exp_m1()).max(-f64::MAX))
        };
        Check { ok, lhs, rhs, slack }
    }
}

/// Trapezoid rule over uniformly spaced samples together with the error
/// estimate `T/12 max|second difference|`.
pub fn trapezoid(h: f64, f: &[f64]) -> (f64, f64) {
    if f.len() < 2 {
        return (0.0, 0.0);
    }
    let inner: f64 = f[1..f.len() - 1].iter().sum();
    let integral = h * (0.5 * (f[0] + f[f.len() - 1]) + inner);
    let dd = f
        .windows(3)
        .map(|w| (w[2] - 2.0 * w[1] + w[0]).abs())
        .fold(0.0, f64::max);
    let span = h * (f.len() - 1) as f64;
    (integral, span * dd / 12.0)
}

/// `|theta|^2 + |phi|^2 <= M8 e^{-M7 (t - t_init)} rho0^2`
pub fn check_decay(rec: &TrajectoryRecord, init: &TrajectoryRecord, k: &CertificateConstants) -> Check {
    let lhs = rec.norms.theta2 + rec.norms.phi2;
    let rhs = k.m8 * (-k.m7 * (rec.t - init.t)).exp() * k.rho0_sq;
    Check::new(lhs, rhs)
}

/// `int |grad theta|^2 + |grad phi|^2 <= M9 rho0^2` up to the last record;
/// the quadrature error estimate is credited to the bound.
pub fn check_dissipation_integral(traj: &[TrajectoryRecord], k: &CertificateConstants) -> Check {
    let f: Vec<f64> = traj
        .iter()
        .map(|r| r.norms.grad_theta2 + r.norms.grad_phi2)
        .collect();
    let (integral, err) = trapezoid(spacing(traj), &f);
    Check::new(integral, k.m9 * k.rho0_sq + err)
}

/// Full Gronwall form of the `lap psi` bound, anchored at `rec_t0`, the first
/// sample past `t0`. The second value is the steady form, the same bound
/// without the transient.
pub fn check_psi_absorbing(
    rec: &TrajectoryRecord,
    rec_t0: &TrajectoryRecord,
    k: &CertificateConstants,
    p: &Params,
) -> (Check, bool) {
    let limit = p.ra * p.ra * k.rho0_sq / (4.0 * p.c);
    let decay = (-2.0 * p.psi_rate() * (rec.t - rec_t0.t)).exp();
    let rhs = rec_t0.norms.lap_psi2 * decay + (1.0 - decay) * limit;
    let lhs = rec.norms.lap_psi2;
    (Check::new(lhs, rhs), lhs <= limit)
}

/// Uniform Gronwall bound at the last record of `window`, which must span
/// `[s - r, s]`.
pub fn check_h1_absorbing(window: &[TrajectoryRecord], k: &CertificateConstants, p: &Params) -> Result<Check> {
    if window.len() < 2 {
        return Err(Error::Config("trajectory shorter than the window r".into()));
    }
    let h = spacing(window);
    let r = h * (window.len() - 1) as f64;
    let g: Vec<f64> = window.iter().map(|w| k.m10(p, w.norms.lap_psi2)).collect();
    let y: Vec<f64> = window.iter().map(|w| w.norms.y_half(p)).collect();
    let (a1, e1) = trapezoid(h, &g);
    let (a3, e3) = trapezoid(h, &y);
    let a2 = (p.lambda * p.lambda + p.gamma * p.gamma * p.lambda * p.lambda) * k.rho_r_sq * r / 2.0;
    let log_rhs = ((a3 + e3) / r + a2).ln() + a1 + e1;
    Ok(Check::from_log(*y.last().unwrap(), log_rhs))
}

/// `D(t) <= D(0) exp(int_0^t alpha)` at the last record; `traj` must carry
/// `cdep_d` throughout.
pub fn check_continuous_dependence(traj: &[TrajectoryRecord], k: &CertificateConstants, p: &Params) -> Result<Check> {
    let d: Vec<f64> = traj
        .iter()
        .map(|r| r.cdep_d.ok_or_else(|| Error::Config("record without difference functional".into())))
        .collect::<Result<_>>()?;
    let rate: Vec<f64> = traj.iter().map(|r| k.cdep_rate(p, r.norms.grad_theta2)).collect();
    let (integral, err) = trapezoid(spacing(traj), &rate);
    Ok(Check::from_log(*d.last().unwrap(), d[0].ln() + integral + err))
}

/// Energy identity residual and the differential inequality, from the
/// observations stored in a record. Returns the inequality check, the
/// absolute residual and the relative residual.
pub fn check_energy_balance(rec: &TrajectoryRecord, k: &CertificateConstants) -> Option<(Check, f64, f64)> {
    let (dedt, q, y12, ey) = (rec.ebal_dedt?, rec.ebal_q?, rec.ebal_y12?, rec.ebal_ey?);
    let resid = (dedt - 2.0 * q).abs();
    let scale = dedt.abs() + (2.0 * q).abs();
    let rel = if scale == 0.0 { 0.0 } else { resid / scale };
    let rhs = -k.m1 * y12 + k.m2 * ey;
    let lhs = 2.0 * q;
    let mut c = Check::new(lhs, rhs);
    c.slack = if lhs == 0.0 && rhs == 0.0 {
        1.0
    } else {
        (rhs - lhs) / (rhs.abs() + lhs.abs())
    };
    Some((c, resid, rel))
}

/// `max_field tail_fraction <= threshold`
pub fn check_tail_regularity(s: &State, k: u32, cutoff: usize, threshold: f64) -> Result<(bool, f64)> {
    let mut worst: f64 = 0.0;
    for (_, f) in s.fields() {
        worst = worst.max(tail_fraction(f, k, cutoff)?);
    }
    Ok((worst <= threshold, worst))
}

fn spacing(traj: &[TrajectoryRecord]) -> f64 {
    if traj.len() < 2 {
        0.0
    } else {
        traj[1].t - traj[0].t
    }
}

/// Sequential evaluator: feed observations in order, get complete records.
#[derive(Debug, Clone)]
pub struct CertificateEvaluator {
    params: Params,
    aspect: f64,
    cfg: CertificateConfig,
    constants: Option<CertificateConstants>,
    history: Vec<TrajectoryRecord>,
    anchor: Option<usize>,
}

impl CertificateEvaluator {
    pub fn new(params: Params, aspect: f64, cfg: CertificateConfig) -> Result<Self> {
        params.validate()?;
        cfg.validate()?;
        Ok(CertificateEvaluator {
            params,
            aspect,
            cfg,
            constants: None,
            history: Vec::new(),
            anchor: None,
        })
    }

    /// Available once the first observation has been pushed.
    pub fn constants(&self) -> Option<&CertificateConstants> {
        self.constants.as_ref()
    }

    pub fn config(&self) -> &CertificateConfig {
        &self.cfg
    }

    pub fn records(&self) -> &[TrajectoryRecord] {
        &self.history
    }

    pub fn push(&mut self, obs: TrajectoryRecord) -> Result<TrajectoryRecord> {
        let mut rec = obs.observation();
        if let Some(prev) = self.history.last() {
            if !(rec.t > prev.t) {
                return Err(Error::Config(format!(
                    "sample times must increase: {} after {}",
                    rec.t, prev.t
                )));
            }
        }
        if self.constants.is_none() {
            let rho0 = rec.norms.theta2 + rec.norms.phi2;
            self.constants = Some(compute_constants(&self.params, self.aspect, &self.cfg, rho0)?);
        }
        let k = self.constants.unwrap();
        let p = self.params;
        self.history.push(rec.clone());
        let traj = &self.history[..];
        let init = &traj[0];
        let elapsed = rec.t - init.t;

        if self.cfg.decay {
            let c = check_decay(&rec, init, &k);
            rec.decay_ok = Some(c.ok);
            rec.decay_rhs = Some(c.rhs);
            rec.decay_slack = Some(c.slack);
        }
        if self.cfg.dissipation {
            let c = check_dissipation_integral(traj, &k);
            rec.dissip_ok = Some(c.ok);
            rec.dissip_integral = Some(c.lhs);
            rec.dissip_rhs = Some(c.rhs);
            rec.dissip_slack = Some(c.slack);
        }
        if self.anchor.is_none() && elapsed >= k.t0 {
            self.anchor = Some(traj.len() - 1);
        }
        if self.cfg.psi_absorb {
            if let Some(a) = self.anchor {
                let (c, steady) = check_psi_absorbing(&rec, &traj[a], &k, &p);
                rec.psi_absorb_ok = Some(c.ok);
                rec.psi_absorb_rhs = Some(c.rhs);
                rec.psi_absorb_slack = Some(c.slack);
                rec.psi_absorb_steady_ok = Some(steady);
            }
        }
        if self.cfg.h1_absorb && traj.len() >= 2 {
            let nw = (self.cfg.r / spacing(traj)).round().max(1.0) as usize;
            if let (Some(a), true) = (self.anchor, traj.len() > nw) {
                let start = traj.len() - 1 - nw;
                if start >= a {
                    let c = check_h1_absorbing(&traj[start..], &k, &p)?;
                    rec.h1_absorb_ok = Some(c.ok);
                    rec.h1_absorb_rhs = Some(c.rhs);
                    rec.h1_absorb_slack = Some(c.slack);
                }
            }
        }
        if self.cfg.cdep && rec.cdep_d.is_some() {
            let c = check_continuous_dependence(traj, &k, &p)?;
            rec.cdep_ok = Some(c.ok);
            rec.cdep_bound = Some(c.rhs);
            rec.cdep_slack = Some(c.slack);
        }
        if let Some((c, resid, rel)) = check_energy_balance(&rec, &k) {
            rec.ebal_resid = Some(resid);
            rec.ebal_rel_resid = Some(rel);
            rec.ebal_ineq_rhs = Some(c.rhs);
            if self.cfg.ebal {
                rec.ebal_ok = Some(c.ok && rel <= self.cfg.ebal_rel_tol);
                rec.ebal_slack = Some(c.slack);
            }
        }
        if let Some(fr) = rec.tail_fracs {
            let worst = fr.iter().cloned().fold(0.0, f64::max);
            rec.tail_frac_k2 = Some(worst);
            if self.cfg.tail && elapsed >= self.cfg.tail_warmup {
                rec.tail_ok = Some(worst <= self.cfg.tail_threshold);
            }
        }
        *self.history.last_mut().unwrap() = rec.clone();
        Ok(rec)
    }
}

/// Re-evaluates stored records from their observations.
pub fn recertify(
    params: Params,
    aspect: f64,
    cfg: CertificateConfig,
    records: &[TrajectoryRecord],
) -> Result<Vec<TrajectoryRecord>> {
    let mut ev = CertificateEvaluator::new(params, aspect, cfg)?;
    records.iter().map(|r| ev.push(r.observation())).collect()
}

/// Worst-case view of one certificate over a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateSummary {
    pub name: &'static str,
    pub enabled: bool,
    pub evaluated: usize,
    pub failures: usize,
    pub min_slack: Option<f64>,
    pub worst_t: Option<f64>,
    pub worst_lhs: Option<f64>,
    pub worst_rhs: Option<f64>,
}

impl CertificateSummary {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

type Extract = fn(&TrajectoryRecord, &Params) -> Option<(bool, f64, f64, f64)>;

/// Aggregates the per-sample verdicts.
pub fn summarize(records: &[TrajectoryRecord], p: &Params, cfg: &CertificateConfig) -> Vec<CertificateSummary> {
    let table: [(&'static str, bool, Extract); 7] = [
        ("decay", cfg.decay, |r, _| {
            Some((r.decay_ok?, r.decay_slack?, r.norms.theta2 + r.norms.phi2, r.decay_rhs?))
        }),
        ("dissipation", cfg.dissipation, |r, _| {
            Some((r.dissip_ok?, r.dissip_slack?, r.dissip_integral?, r.dissip_rhs?))
        }),
        ("psi_absorb", cfg.psi_absorb, |r, _| {
            Some((r.psi_absorb_ok?, r.psi_absorb_slack?, r.norms.lap_psi2, r.psi_absorb_rhs?))
        }),
        ("h1_absorb", cfg.h1_absorb, |r, p| {
            Some((r.h1_absorb_ok?, r.h1_absorb_slack?, r.norms.y_half(p), r.h1_absorb_rhs?))
        }),
        ("cdep", cfg.cdep, |r, _| {
            Some((r.cdep_ok?, r.cdep_slack?, r.cdep_d?, r.cdep_bound?))
        }),
        ("ebal", cfg.ebal, |r, _| {
            Some((r.ebal_ok?, r.ebal_slack?, 2.0 * r.ebal_q?, r.ebal_ineq_rhs?))
        }),
        ("tail", cfg.tail, |r, _| {
            let w = r.tail_frac_k2?;
            Some((r.tail_ok?, 0.0, w, f64::NAN))
        }),
    ];
    table
        .iter()
        .map(|(name, enabled, f)| {
            let mut s = CertificateSummary {
                name,
                enabled: *enabled,
                evaluated: 0,
                failures: 0,
                min_slack: None,
                worst_t: None,
                worst_lhs: None,
                worst_rhs: None,
            };
            for r in records {
                if let Some((ok, slack, lhs, rhs)) = f(r, p) {
                    s.evaluated += 1;
                    if !ok {
                        s.failures += 1;
                    }
                    let worse = match s.min_slack {
                        None => true,
                        Some(m) => slack < m,
                    };
                    if worse {
                        s.min_slack = Some(slack);
                        s.worst_t = Some(r.t);
                        s.worst_lhs = Some(lhs);
                        s.worst_rhs = Some(rhs);
                    }
                }
            }
            s
        })
        .collect()
}

/// Observation of one state, without the companion or the step-pair parts.
pub fn observe_state(d: &Dynamics, s: &State, step: u64, cfg: &CertificateConfig) -> TrajectoryRecord {
    let dom = d.domain();
    let n = dom.nx.min(dom.nz);
    let cutoff = cfg.tail_cutoff.unwrap_or(n / 2);
    let tail_fracs = if cutoff >= 1 && cutoff < n {
        let f = |u| tail_fraction(u, cfg.tail_k, cutoff).expect("cutoff checked");
        Some([f(&s.psi), f(&s.theta), f(&s.phi)])
    } else {
        None
    };
    TrajectoryRecord {
        t: s.t,
        step,
        norms: Norms::of(d.params(), s),
        tail_fracs,
        ..Default::default()
    }
}

/// Energy-balance observations for the step `prev -> next`.
pub fn observe_step(d: &Dynamics, prev: &State, next: &State, dt: f64, rec: &mut TrajectoryRecord) -> Result<()> {
    let mid = prev.midpoint(next)?;
    let p = d.params();
    rec.ebal_dedt = Some((d.energy(next) - d.energy(prev)) / dt);
    rec.ebal_q = Some(d.energy_rate(&mid));
    rec.ebal_y12 = Some(Norms::of(p, &mid).y_half(p));
    rec.ebal_ey = Some(d.energy(&mid));
    Ok(())
}

/// `(Da/Pr) |grad psi~|^2 + |theta~|^2 + alpha |phi~|^2` of a difference state.
pub fn difference_functional(p: &Params, diff: &State) -> f64 {
    hk_seminorm_sq(&diff.psi, 1) / p.psi_rate()
        + hk_seminorm_sq(&diff.theta, 0)
        + p.alpha * hk_seminorm_sq(&diff.phi, 0)
}

/// The online monitor: observes states, runs the perturbed companion for the
/// continuous-dependence bound, and evaluates every certificate.
pub struct CertificateSuite<'a> {
    evaluator: CertificateEvaluator,
    companion: Option<(Stepper<'a>, State, u64)>,
}

impl<'a> CertificateSuite<'a> {
    /// `s0` must be the initial state the run starts from.
    pub fn new(dynamics: &'a Dynamics, stepper: StepperConfig, cfg: CertificateConfig, s0: &State) -> Result<Self> {
        let evaluator = CertificateEvaluator::new(*dynamics.params(), dynamics.domain().a, cfg.clone())?;
        let companion = if cfg.cdep {
            let mut s = s0.clone();
            let (m, n) = cfg.cdep_mode;
            let dom = dynamics.domain();
            if m == 0 || n == 0 || m > dom.nx || n > dom.nz {
                return Err(Error::Config(format!(
                    "cdep_mode ({m}, {n}) outside the {}x{} mode range",
                    dom.nx, dom.nz
                )));
            }
            s.theta.set(m, n, s.theta.get(m, n) + cfg.cdep_perturbation)?;
            Some((Stepper::new(dynamics, stepper)?, s, 0))
        } else {
            None
        };
        Ok(CertificateSuite { evaluator, companion })
    }

    pub fn evaluator(&self) -> &CertificateEvaluator {
        &self.evaluator
    }

    pub fn summary(&self) -> Vec<CertificateSummary> {
        summarize(self.evaluator.records(), &self.evaluator.params, &self.evaluator.cfg)
    }
}

impl Monitor for CertificateSuite<'_> {
    type Record = TrajectoryRecord;

    fn observe(&mut self, dynamics: &Dynamics, sample: Sample<'_>) -> Result<TrajectoryRecord> {
        let cfg = self.evaluator.cfg.clone();
        let mut rec = observe_state(dynamics, sample.state, sample.step, &cfg);
        if let Some(prev) = sample.prev {
            observe_step(dynamics, prev, sample.state, sample.dt, &mut rec)?;
        }
        if let Some((stepper, s, at)) = &mut self.companion {
            while *at < sample.step {
                let mut next = stepper.step(s)?;
                next.t = sample.state.t;
                *s = next;
                *at += 1;
            }
            let diff = sample.state.sub(s)?;
            rec.cdep_d = Some(difference_functional(dynamics.params(), &diff));
        }
        self.evaluator.push(rec)
    }

    fn checkpoint(&mut self, _state: &State) -> Result<()> {
        if let Some((stepper, _, _)) = &mut self.companion {
            stepper.reset_history();
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use approx::assert_relative_eq;

    use super::*;

    fn unit() -> Params {
        Params {
            ra: 100.0,
            ..Params::default()
        }
    }

    #[test]
    fn unit_constants() {
        let k = compute_constants(&unit(), 1.0, &CertificateConfig::default(), 1.0).unwrap();
        assert_relative_eq!(k.m7, 2.0 * PI * PI, max_relative = 1e-14);
        assert_eq!(k.m8, 1.0);
        assert_eq!(k.t0, 0.0);
        assert_relative_eq!(k.m9, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn m8_for_heavy_solid() {
        let p = Params {
            alpha: 4.0,
            ..unit()
        };
        let k = compute_constants(&p, 1.0, &CertificateConfig::default(), 1.0).unwrap();
        assert_relative_eq!(k.m8, 4.0, max_relative = 1e-14);
        assert_relative_eq!(k.t0, 4.0f64.ln() / k.m7, max_relative = 1e-14);
    }

    #[test]
    fn c_tilde_out_of_range_is_rejected() {
        let cfg = CertificateConfig {
            c_tilde: Some(1.0),
            ..Default::default()
        };
        let err = compute_constants(&unit(), 1.0, &cfg, 1.0).unwrap_err();
        assert!(err.to_string().contains("c_tilde"));
    }

    #[test]
    fn zero_bound_slack_conventions() {
        assert_eq!(Check::new(0.0, 0.0).slack, 1.0);
        assert!(Check::new(0.0, 0.0).ok);
        assert!(!Check::new(1e-30, 0.0).ok);
    }

    #[test]
    fn trapezoid_is_exact_for_lines() {
        let f: Vec<f64> = (0..11).map(|i| 2.0 + 0.5 * i as f64).collect();
        let (v, e) = trapezoid(0.1, &f);
        assert_relative_eq!(v, 2.0 * 1.0 + 0.5 * 10.0 * 0.5, max_relative = 1e-14);
        assert!(e < 1e-14);
    }
}
