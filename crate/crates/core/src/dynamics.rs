//! Right-hand side of the stream-function system in coefficient space.
//!
//! Per mode `(m, n)` with Laplacian eigenvalue `mu`:
//!
//! ```text
//! dpsi/dt   = (Pr/Da) [ (C mu - 1) psi + Ra P(theta_x) / mu ]
//! dtheta/dt = mu theta + lambda (phi - theta) - P(J(psi, theta))
//! dphi/dt   = [ mu phi + gamma lambda (theta - phi) ] / alpha
//! ```
//!
//! `P` is the sine projection. The linear part is block triangular: the
//! `theta`-`phi` pair forms an independent 2x2 block per mode and feeds the
//! diagonal `psi` equation through the dense-in-`m` projection of `d/dx`.

use nalgebra::DMatrix;
use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{Domain, Params};
use crate::spectral::{dx_projection_matrix, hk_seminorm_sq, inner, Basis, SpectralField};

/// Switches for the terms of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelOptions {
    /// Include the advective Jacobian `J(psi, theta)`.
    pub nonlinear: bool,
    /// Add the background-gradient source `+psi_x` to the fluid temperature
    /// equation. Off by default: without it the origin attracts everything,
    /// with it the layer can convect. The energy certificates assume it off.
    pub conduction_coupling: bool,
}

impl Default for ModelOptions {
    fn default() -> Self {
        ModelOptions {
            nonlinear: true,
            conduction_coupling: false,
        }
    }
}

/// `(psi, theta, phi)` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub psi: SpectralField,
    pub theta: SpectralField,
    pub phi: SpectralField,
    pub t: f64,
}

impl State {
    pub fn new(psi: SpectralField, theta: SpectralField, phi: SpectralField, t: f64) -> Result<Self> {
        psi.check_same(&theta)?;
        psi.check_same(&phi)?;
        Ok(State { psi, theta, phi, t })
    }

    pub fn zeros(dom: &Domain) -> Self {
        State {
            psi: SpectralField::zeros(dom),
            theta: SpectralField::zeros(dom),
            phi: SpectralField::zeros(dom),
            t: 0.0,
        }
    }

    pub fn domain(&self) -> &Domain {
        self.psi.domain()
    }

    pub fn fields(&self) -> [(&'static str, &SpectralField); 3] {
        [("psi", &self.psi), ("theta", &self.theta), ("phi", &self.phi)]
    }

    pub fn is_finite(&self) -> bool {
        self.psi.is_finite() && self.theta.is_finite() && self.phi.is_finite()
    }

    pub fn scaled(&self, s: f64) -> State {
        State {
            psi: self.psi.scaled(s),
            theta: self.theta.scaled(s),
            phi: self.phi.scaled(s),
            t: self.t,
        }
    }

    /// Field-wise difference `self - other`, stamped with `self.t`.
    pub fn sub(&self, other: &State) -> Result<State> {
        self.psi.check_same(&other.psi)?;
        Ok(State {
            psi: self.psi.sub(&other.psi),
            theta: self.theta.sub(&other.theta),
            phi: self.phi.sub(&other.phi),
            t: self.t,
        })
    }

    /// Average of two states, at the mean time.
    pub fn midpoint(&self, other: &State) -> Result<State> {
        self.psi.check_same(&other.psi)?;
        let mut mid = self.scaled(0.5);
        mid.psi.axpy(0.5, &other.psi);
        mid.theta.axpy(0.5, &other.theta);
        mid.phi.axpy(0.5, &other.phi);
        mid.t = 0.5 * (self.t + other.t);
        Ok(mid)
    }

    /// `self += h * k`
    pub fn add_tangent(&mut self, h: f64, k: &Tangent) {
        self.psi.axpy(h, &k.dpsi);
        self.theta.axpy(h, &k.dtheta);
        self.phi.axpy(h, &k.dphi);
    }

    pub fn check_domain(&self, dom: &Domain) -> Result<()> {
        if self.domain() != dom {
            return Err(Error::DimensionMismatch(format!(
                "state domain {:?} differs from model domain {:?}",
                self.domain(),
                dom
            )));
        }
        Ok(())
    }
}

/// Time derivatives of the three fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Tangent {
    pub dpsi: SpectralField,
    pub dtheta: SpectralField,
    pub dphi: SpectralField,
}

impl Tangent {
    pub fn zeros(dom: &Domain) -> Self {
        Tangent {
            dpsi: SpectralField::zeros(dom),
            dtheta: SpectralField::zeros(dom),
            dphi: SpectralField::zeros(dom),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.dpsi.max_abs().max(self.dtheta.max_abs()).max(self.dphi.max_abs())
    }

    pub fn sub(&self, other: &Tangent) -> Tangent {
        Tangent {
            dpsi: self.dpsi.sub(&other.dpsi),
            dtheta: self.dtheta.sub(&other.dtheta),
            dphi: self.dphi.sub(&other.dphi),
        }
    }
}

/// 2x2 `theta`-`phi` block, row-major.
pub type Block = [[f64; 2]; 2];

/// Linear part of the system.
#[derive(Debug, Clone)]
pub struct LinearOperator {
    dom: Domain,
    /// `(Pr/Da)(C mu - 1)` per mode.
    pub psi_multiplier: Array2<f64>,
    /// `[[mu - lambda, lambda], [gamma lambda / alpha, (mu - gamma lambda) / alpha]]` per mode.
    pub blocks: Array2<Block>,
    eig: Array2<f64>,
    dx: Array2<f64>,
    /// `(Pr/Da) Ra`
    coupling: f64,
    conduction: bool,
}

pub fn theta_phi_block(mu: f64, p: &Params) -> Block {
    let l = p.lambda;
    let gl = p.gamma * p.lambda;
    [[mu - l, l], [gl / p.alpha, (mu - gl) / p.alpha]]
}

/// Eigenvalues of a 2x2 block, larger real part first. Returns
/// `(re1, im1, re2, im2)`.
pub fn block_eigenvalues(b: &Block) -> (f64, f64, f64, f64) {
    let tr = b[0][0] + b[1][1];
    let half_gap = 0.5 * (b[0][0] - b[1][1]);
    let disc = half_gap * half_gap + b[0][1] * b[1][0];
    if disc >= 0.0 {
        let s = disc.sqrt();
        (0.5 * tr + s, 0.0, 0.5 * tr - s, 0.0)
    } else {
        let s = (-disc).sqrt();
        (0.5 * tr, s, 0.5 * tr, -s)
    }
}

impl LinearOperator {
    pub fn domain(&self) -> &Domain {
        &self.dom
    }

    pub fn block(&self, m: usize, n: usize) -> Block {
        self.blocks[[m - 1, n - 1]]
    }

    pub fn has_conduction_coupling(&self) -> bool {
        self.conduction
    }

    /// `(Pr/Da) Ra P(theta_x) / mu`, the forcing of the `psi` equation.
    pub fn psi_forcing(&self, theta: &SpectralField) -> SpectralField {
        let mut f = self.dx.dot(theta.coeffs());
        Zip::from(&mut f)
            .and(&self.eig)
            .for_each(|v, &mu| *v *= self.coupling / mu);
        SpectralField::from_coeffs(&self.dom, f).expect("shape preserved")
    }

    /// `P(psi_x)`, the optional conduction source of the `theta` equation.
    pub fn conduction_source(&self, psi: &SpectralField) -> SpectralField {
        SpectralField::from_coeffs(&self.dom, self.dx.dot(psi.coeffs())).expect("shape preserved")
    }

    /// Diagonal and block-diagonal part only: everything treated implicitly
    /// by the IMEX schemes.
    pub fn apply_implicit(&self, s: &State) -> Tangent {
        let dpsi = s.psi.coeffs() * &self.psi_multiplier;
        let mut dtheta = Array2::zeros((self.dom.nx, self.dom.nz));
        let mut dphi = Array2::zeros((self.dom.nx, self.dom.nz));
        Zip::from(&mut dtheta)
            .and(&mut dphi)
            .and(&self.blocks)
            .and(s.theta.coeffs())
            .and(s.phi.coeffs())
            .for_each(|dt, dp, b, &th, &ph| {
                *dt = b[0][0] * th + b[0][1] * ph;
                *dp = b[1][0] * th + b[1][1] * ph;
            });
        Tangent {
            dpsi: SpectralField::from_coeffs(&self.dom, dpsi).expect("shape preserved"),
            dtheta: SpectralField::from_coeffs(&self.dom, dtheta).expect("shape preserved"),
            dphi: SpectralField::from_coeffs(&self.dom, dphi).expect("shape preserved"),
        }
    }

    /// Full linear operator applied to a state.
    pub fn apply(&self, s: &State) -> Tangent {
        let mut out = self.apply_implicit(s);
        out.dpsi.axpy(1.0, &self.psi_forcing(&s.theta));
        if self.conduction {
            out.dtheta.axpy(1.0, &self.conduction_source(&s.psi));
        }
        out
    }

    fn flat(&self, m: usize, n: usize) -> usize {
        m * self.dom.nz + n
    }

    /// Dense matrix acting on `[psi, theta, phi]`, each flattened row-major.
    pub fn dense(&self) -> DMatrix<f64> {
        let nm = self.dom.modes();
        let mut a = DMatrix::<f64>::zeros(3 * nm, 3 * nm);
        for m in 0..self.dom.nx {
            for n in 0..self.dom.nz {
                let r = self.flat(m, n);
                a[(r, r)] = self.psi_multiplier[[m, n]];
                let b = self.blocks[[m, n]];
                a[(nm + r, nm + r)] = b[0][0];
                a[(nm + r, 2 * nm + r)] = b[0][1];
                a[(2 * nm + r, nm + r)] = b[1][0];
                a[(2 * nm + r, 2 * nm + r)] = b[1][1];
                for k in 0..self.dom.nx {
                    let c = self.flat(k, n);
                    let d = self.dx[[m, k]];
                    if d != 0.0 {
                        a[(r, nm + c)] += self.coupling * d / self.eig[[m, n]];
                        if self.conduction {
                            a[(nm + r, c)] += d;
                        }
                    }
                }
            }
        }
        a
    }

    /// Dense matrix restricted to vertical wavenumber `n` (one-based), acting
    /// on `[psi(., n), theta(., n), phi(., n)]`. The operator never couples
    /// different `n`.
    pub fn dense_for_row(&self, n: usize) -> DMatrix<f64> {
        let nx = self.dom.nx;
        let j = n - 1;
        let mut a = DMatrix::<f64>::zeros(3 * nx, 3 * nx);
        for m in 0..nx {
            a[(m, m)] = self.psi_multiplier[[m, j]];
            let b = self.blocks[[m, j]];
            a[(nx + m, nx + m)] = b[0][0];
            a[(nx + m, 2 * nx + m)] = b[0][1];
            a[(2 * nx + m, nx + m)] = b[1][0];
            a[(2 * nx + m, 2 * nx + m)] = b[1][1];
            for k in 0..nx {
                let d = self.dx[[m, k]];
                if d != 0.0 {
                    a[(m, nx + k)] += self.coupling * d / self.eig[[m, j]];
                    if self.conduction {
                        a[(nx + m, k)] += d;
                    }
                }
            }
        }
        a
    }

    /// Union of the per-mode analytic eigenvalues, as `(re, im)` pairs.
    pub fn modal_spectrum(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(3 * self.dom.modes());
        for (idx, &lp) in self.psi_multiplier.indexed_iter() {
            out.push((lp, 0.0));
            let (r1, i1, r2, i2) = block_eigenvalues(&self.blocks[idx]);
            out.push((r1, i1));
            out.push((r2, i2));
        }
        out
    }
}

/// Largest real part in the spectrum of the linear operator.
///
/// Without the conduction source the operator is block triangular, so its
/// spectrum is the union of the `psi` multipliers and the 2x2 block
/// eigenvalues. With the source the per-`n` dense blocks are solved instead.
pub fn spectral_abscissa(op: &LinearOperator) -> f64 {
    if !op.conduction {
        return op
            .modal_spectrum()
            .into_iter()
            .fold(f64::NEG_INFINITY, |acc, (re, _)| acc.max(re));
    }
    (1..=op.dom.nz)
        .flat_map(|n| {
            op.dense_for_row(n)
                .complex_eigenvalues()
                .iter()
                .map(|c| c.re)
                .collect::<Vec<_>>()
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// The assembled model: parameters, domain, transform tables and operators.
#[derive(Debug, Clone)]
pub struct Dynamics {
    params: Params,
    dom: Domain,
    opts: ModelOptions,
    basis: Basis,
    linear: LinearOperator,
}

pub fn assemble_linear(p: &Params, dom: &Domain, opts: ModelOptions) -> Result<LinearOperator> {
    p.validate()?;
    let eig = crate::spectral::eigenvalue_table(dom);
    let psi_multiplier = eig.mapv(|mu| p.psi_rate() * (p.c * mu - 1.0));
    let blocks = eig.mapv(|mu| theta_phi_block(mu, p));
    Ok(LinearOperator {
        dom: *dom,
        psi_multiplier,
        blocks,
        eig,
        dx: dx_projection_matrix(dom.nx, dom.a),
        coupling: p.psi_rate() * p.ra,
        conduction: opts.conduction_coupling,
    })
}

impl Dynamics {
    pub fn new(params: Params, dom: Domain, opts: ModelOptions) -> Result<Self> {
        let linear = assemble_linear(&params, &dom, opts)?;
        Ok(Dynamics {
            params,
            dom,
            opts,
            basis: Basis::new(&dom),
            linear,
        })
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn domain(&self) -> &Domain {
        &self.dom
    }

    pub fn options(&self) -> ModelOptions {
        self.opts
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn linear(&self) -> &LinearOperator {
        &self.linear
    }

    /// `-P(J(psi, theta))`, or zero when the Jacobian is disabled.
    pub fn advection(&self, s: &State) -> Result<SpectralField> {
        if !self.opts.nonlinear {
            return Ok(SpectralField::zeros(&self.dom));
        }
        Ok(self.basis.jacobian(&s.psi, &s.theta)?.scaled(-1.0))
    }

    /// Terms the IMEX schemes treat explicitly: the `Ra` coupling into `psi`,
    /// the optional conduction source and the Jacobian into `theta`.
    /// `phi` has no explicit term.
    pub fn explicit_terms(&self, s: &State) -> Result<(SpectralField, SpectralField)> {
        s.check_domain(&self.dom)?;
        let npsi = self.linear.psi_forcing(&s.theta);
        let mut ntheta = self.advection(s)?;
        if self.opts.conduction_coupling {
            ntheta.axpy(1.0, &self.linear.conduction_source(&s.psi));
        }
        Ok((npsi, ntheta))
    }

    pub fn rhs(&self, s: &State) -> Result<Tangent> {
        let (npsi, ntheta) = self.explicit_terms(s)?;
        let mut out = self.linear.apply_implicit(s);
        out.dpsi.axpy(1.0, &npsi);
        out.dtheta.axpy(1.0, &ntheta);
        Ok(out)
    }

    /// `E_Y = (Da/Pr) ||lap psi||^2 + ||theta||^2 + alpha ||phi||^2`.
    pub fn energy(&self, s: &State) -> f64 {
        let p = &self.params;
        hk_seminorm_sq(&s.psi, 2) / p.psi_rate()
            + hk_seminorm_sq(&s.theta, 0)
            + p.alpha * hk_seminorm_sq(&s.phi, 0)
    }

    /// `<theta, d(lap psi)/dx>`, exact for retained modes.
    pub fn buoyancy_pairing(&self, s: &State) -> f64 {
        let mut lap = s.psi.coeffs().clone();
        lap.zip_mut_with(self.basis.eigenvalues(), |v, &mu| *v *= mu);
        let dlap = dx_projection_matrix(self.dom.nx, self.dom.a).dot(&lap);
        let f = SpectralField::from_coeffs(&self.dom, dlap).expect("shape preserved");
        inner(&s.theta, &f).expect("same domain")
    }

    /// Right-hand side of the energy identity,
    /// `(1/2) dE_Y/dt = -C ||grad lap psi||^2 - ||lap psi||^2 - ||grad theta||^2
    ///  - ||grad phi||^2 - lambda ||theta||^2 - gamma lambda ||phi||^2
    ///  - Ra <theta, d(lap psi)/dx> + (lambda + gamma lambda) <phi, theta>`.
    pub fn energy_rate(&self, s: &State) -> f64 {
        let p = &self.params;
        let gl = p.gamma * p.lambda;
        -p.c * hk_seminorm_sq(&s.psi, 3)
            - hk_seminorm_sq(&s.psi, 2)
            - hk_seminorm_sq(&s.theta, 1)
            - hk_seminorm_sq(&s.phi, 1)
            - p.lambda * hk_seminorm_sq(&s.theta, 0)
            - gl * hk_seminorm_sq(&s.phi, 0)
            - p.ra * self.buoyancy_pairing(s)
            + (p.lambda + gl) * inner(&s.phi, &s.theta).expect("same domain")
    }

    /// `(Da/Pr) <lap dpsi, lap psi> + <dtheta, theta> + alpha <dphi, phi>`.
    pub fn energy_pairing(&self, s: &State, k: &Tangent) -> f64 {
        let p = &self.params;
        let mut acc = 0.0;
        Zip::from(s.psi.coeffs())
            .and(k.dpsi.coeffs())
            .and(self.basis.eigenvalues())
            .for_each(|&u, &du, &mu| acc += mu * mu * u * du);
        0.25 * self.dom.a * acc / p.psi_rate()
            + inner(&s.theta, &k.dtheta).expect("same domain")
            + p.alpha * inner(&s.phi, &k.dphi).expect("same domain")
    }

    /// Norm of the mass-weighted midpoint residual
    /// `M [(s_next - s_prev) / dt - rhs((s_prev + s_next) / 2)]`, with
    /// `M = (Da/Pr) lap` on `psi`, `1` on `theta`, `alpha` on `phi`.
    pub fn weak_residual(&self, s_prev: &State, s_next: &State, dt: f64) -> Result<f64> {
        if dt <= 0.0 || !dt.is_finite() {
            return Err(Error::InvalidParameter {
                field: "dt",
                value: dt,
                reason: "time step must be positive",
            });
        }
        let mid = s_prev.midpoint(s_next)?;
        let f = self.rhs(&mid)?;
        let diff = s_next.sub(s_prev)?;
        let p = &self.params;
        let mut rpsi = &diff.psi.coeffs().mapv(|v| v / dt) - f.dpsi.coeffs();
        rpsi.zip_mut_with(self.basis.eigenvalues(), |v, &mu| *v *= mu / p.psi_rate());
        let rtheta = &diff.theta.coeffs().mapv(|v| v / dt) - f.dtheta.coeffs();
        let rphi = (&diff.phi.coeffs().mapv(|v| v / dt) - f.dphi.coeffs()) * p.alpha;
        let sq = |a: &Array2<f64>| a.iter().map(|v| v * v).sum::<f64>();
        Ok((0.25 * self.dom.a * (sq(&rpsi) + sq(&rtheta) + sq(&rphi))).sqrt())
    }
}
