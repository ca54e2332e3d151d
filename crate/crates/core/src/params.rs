//! Physical and dimensionless parameters, the rectangular domain, and the
//! map between the two parameter sets.
//!
//! The dimensionless domain is always `(0, a) x (0, 1)`: depth is the length
//! scale, so the aspect ratio `a` is the only geometric input.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default upper bound accepted for any derived dimensionless number.
pub const DEFAULT_NUMBER_CAP: f64 = 1e6;

/// Dimensional material and layer properties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    /// Reference density.
    pub rho0: f64,
    /// Porosity, strictly inside (0, 1).
    pub eps: f64,
    /// Permeability.
    #[serde(rename = "K")]
    pub permeability: f64,
    pub mu_f: f64,
    /// Couple-stress viscosity.
    pub mu_c: f64,
    /// Thermal expansion coefficient.
    pub beta: f64,
    pub g: f64,
    pub rhoc_f: f64,
    pub rhoc_s: f64,
    pub kappa_f: f64,
    pub kappa_s: f64,
    /// Inter-phase heat transfer coefficient.
    pub h: f64,
    #[serde(rename = "T_l")]
    pub t_lower: f64,
    #[serde(rename = "T_u")]
    pub t_upper: f64,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let fields: [(&'static str, f64); 14] = [
            ("rho0", self.rho0),
            ("eps", self.eps),
            ("K", self.permeability),
            ("mu_f", self.mu_f),
            ("mu_c", self.mu_c),
            ("beta", self.beta),
            ("g", self.g),
            ("rhoc_f", self.rhoc_f),
            ("rhoc_s", self.rhoc_s),
            ("kappa_f", self.kappa_f),
            ("kappa_s", self.kappa_s),
            ("h", self.h),
            ("T_l", self.t_lower),
            ("T_u", self.t_upper),
        ];
        for (field, value) in fields {
            require_positive(field, value)?;
        }
        if self.eps >= 1.0 {
            return Err(Error::InvalidParameter {
                field: "eps",
                value: self.eps,
                reason: "porosity must lie strictly inside (0, 1)",
            });
        }
        if self.t_lower <= self.t_upper {
            return Err(Error::InvalidParameter {
                field: "T_l",
                value: self.t_lower,
                reason: "the layer must be heated from below (T_l > T_u)",
            });
        }
        Ok(())
    }
}

/// The seven dimensionless groups of the stream-function system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Darcy-Rayleigh number.
    #[serde(rename = "Ra")]
    pub ra: f64,
    /// Prandtl number.
    #[serde(rename = "Pr")]
    pub pr: f64,
    /// Darcy number.
    #[serde(rename = "Da")]
    pub da: f64,
    /// Couple-stress number.
    #[serde(rename = "C")]
    pub c: f64,
    /// Inter-phase heat transfer coefficient.
    pub lambda: f64,
    /// Modified conductivity ratio.
    pub gamma: f64,
    /// Diffusivity ratio.
    pub alpha: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            ra: 100.0,
            pr: 1.0,
            da: 1.0,
            c: 1.0,
            lambda: 1.0,
            gamma: 1.0,
            alpha: 1.0,
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        self.validate_with_cap(DEFAULT_NUMBER_CAP)
    }

    pub fn validate_with_cap(&self, cap: f64) -> Result<()> {
        for (field, value) in self.named() {
            require_positive(field, value)?;
            if value > cap {
                return Err(Error::InvalidParameter {
                    field,
                    value,
                    reason: "exceeds the configured sanity cap",
                });
            }
        }
        Ok(())
    }

    /// `(name, value)` pairs using the flat configuration key names.
    pub fn named(&self) -> [(&'static str, f64); 7] {
        [
            ("Ra", self.ra),
            ("Pr", self.pr),
            ("Da", self.da),
            ("C", self.c),
            ("lambda", self.lambda),
            ("gamma", self.gamma),
            ("alpha", self.alpha),
        ]
    }

    /// `Pr / Da`, the rate factor of the stream-function equation.
    pub fn psi_rate(&self) -> f64 {
        self.pr / self.da
    }
}

fn require_positive(field: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() || value <= 0.0 {
        return Err(Error::InvalidParameter {
            field,
            value,
            reason: "must be finite and strictly positive",
        });
    }
    Ok(())
}

/// Maps dimensional properties onto the seven dimensionless groups.
pub fn nondimensionalize(p: &PhysicalParams) -> Result<Params> {
    nondimensionalize_with_cap(p, DEFAULT_NUMBER_CAP)
}

pub fn nondimensionalize_with_cap(p: &PhysicalParams, cap: f64) -> Result<Params> {
    p.validate()?;
    let dt = p.t_lower - p.t_upper;
    let out = Params {
        ra: p.rho0 * p.g * p.beta * dt * p.rhoc_f * p.permeability / (p.eps * p.mu_f * p.kappa_f),
        pr: p.mu_f * p.eps * p.rhoc_f / (p.rho0 * p.kappa_f),
        da: p.permeability,
        c: p.mu_c / p.mu_f,
        lambda: p.h / (p.eps * p.kappa_f),
        gamma: p.eps * p.kappa_f / ((1.0 - p.eps) * p.kappa_s),
        alpha: (p.rhoc_s / p.rhoc_f) * (p.kappa_f / p.kappa_s),
    };
    out.validate_with_cap(cap)?;
    Ok(out)
}

/// Rectangle `(0, a) x (0, 1)` with its spectral truncation and collocation grid.
///
/// `nx, nz` are the numbers of retained sine modes per direction. `mx, mz`
/// are the numbers of collocation intervals; the grid holds the `mx - 1` by
/// `mz - 1` interior nodes `x_i = i a / mx`, `z_j = j / mz`. Quadratic products
/// are represented exactly on this grid when `mx >= 2 nx + 1` and
/// `mz >= 2 nz + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub a: f64,
    pub nx: usize,
    pub nz: usize,
    pub mx: usize,
    pub mz: usize,
}

impl Domain {
    /// Domain with the default padding `m = 2 n + 2`.
    pub fn new(a: f64, nx: usize, nz: usize) -> Result<Self> {
        Self::with_padding(a, nx, nz, 2 * nx + 2, 2 * nz + 2)
    }

    pub fn with_padding(a: f64, nx: usize, nz: usize, mx: usize, mz: usize) -> Result<Self> {
        require_positive("a", a)?;
        if nx == 0 || nz == 0 {
            return Err(Error::Config(format!(
                "truncation must be positive, got Nx = {nx}, Nz = {nz}"
            )));
        }
        if mx < 2 * nx + 1 || mz < 2 * nz + 1 {
            return Err(Error::Config(format!(
                "collocation ({mx}, {mz}) too small for exact quadratic products with \
                 truncation ({nx}, {nz}); need Mx >= {} and Mz >= {}",
                2 * nx + 1,
                2 * nz + 1
            )));
        }
        Ok(Domain { a, nx, nz, mx, mz })
    }

    pub fn modes(&self) -> usize {
        self.nx * self.nz
    }

    /// Interior grid points per direction.
    pub fn grid_shape(&self) -> (usize, usize) {
        (self.mx - 1, self.mz - 1)
    }

    /// Grid spacings `(a / mx, 1 / mz)`.
    pub fn spacing(&self) -> (f64, f64) {
        (self.a / self.mx as f64, 1.0 / self.mz as f64)
    }
}

/// Poincare constant `1 / lambda_1` of the rectangle, with
/// `lambda_1 = pi^2 (1 / a^2 + 1)` the lowest Dirichlet eigenvalue magnitude.
pub fn poincare_constant(dom: &Domain) -> f64 {
    poincare_constant_for_aspect(dom.a)
}

pub fn poincare_constant_for_aspect(a: f64) -> f64 {
    1.0 / (PI * PI * (1.0 / (a * a) + 1.0))
}
