//! Sine-basis representation of fields vanishing on the boundary of the
//! rectangle.
//!
//! A [`SpectralField`] stores coefficients `u[m, n]` of
//! `u(x, z) = sum u[m, n] sin(m pi x / a) sin(n pi z)`, `1 <= m <= Nx`,
//! `1 <= n <= Nz`, held in a zero-based array in row-major (m outer, n inner)
//! order. Basis functions are not normalized: `||sin sin||^2 = a / 4` and
//! that Parseval weight is applied explicitly by the norms below.
//!
//! Transforms are separable matrix products against precomputed sine and
//! cosine tables ([`Basis`]). The collocation grid is the interior of a
//! uniform `Mx x Mz` partition, so the forward transform is a type-I discrete
//! sine transform: it inverts [`Basis::to_grid`] on the retained modes and is
//! exact for any sine series with frequencies below `Mx` (resp. `Mz`).

use std::f64::consts::PI;

use ndarray::{Array2, Zip};

use crate::error::{Error, Result};
use crate::params::Domain;

/// Eigenvalue of the Dirichlet Laplacian for mode `(m, n)` on `(0, a) x (0, 1)`.
pub fn laplacian_eigenvalue(m: usize, n: usize, a: f64) -> f64 {
    let kx = m as f64 * PI / a;
    let kz = n as f64 * PI;
    -(kx * kx + kz * kz)
}

/// Table of `laplacian_eigenvalue` for every retained mode.
pub fn eigenvalue_table(dom: &Domain) -> Array2<f64> {
    Array2::from_shape_fn((dom.nx, dom.nz), |(i, j)| {
        laplacian_eigenvalue(i + 1, j + 1, dom.a)
    })
}

/// Galerkin matrix of `d/dx` restricted to the sine basis in `x`.
///
/// `(D u)[m] = sum_k D[m, k] u[k]` are the sine coefficients of the
/// projection of `sum_k u[k] (k pi / a) cos(k pi x / a)`. Entries are
/// `4 m k / (a (m^2 - k^2))` when `m + k` is odd and zero otherwise, so `D`
/// is exactly antisymmetric.
pub fn dx_projection_matrix(nx: usize, a: f64) -> Array2<f64> {
    Array2::from_shape_fn((nx, nx), |(i, k)| {
        let m = (i + 1) as f64;
        let kk = (k + 1) as f64;
        if (i + k) % 2 == 1 {
            4.0 * m * kk / (a * (m * m - kk * kk))
        } else {
            0.0
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    coeffs: Array2<f64>,
    dom: Domain,
}

impl SpectralField {
    pub fn zeros(dom: &Domain) -> Self {
        SpectralField {
            coeffs: Array2::zeros((dom.nx, dom.nz)),
            dom: *dom,
        }
    }

    pub fn from_coeffs(dom: &Domain, coeffs: Array2<f64>) -> Result<Self> {
        if coeffs.dim() != (dom.nx, dom.nz) {
            return Err(Error::DimensionMismatch(format!(
                "coefficient array {:?} does not match truncation ({}, {})",
                coeffs.dim(),
                dom.nx,
                dom.nz
            )));
        }
        if coeffs.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("non-finite spectral coefficient".into()));
        }
        Ok(SpectralField { coeffs, dom: *dom })
    }

    /// Single basis function `(m, n)` (one-based) scaled by `value`.
    pub fn mode(dom: &Domain, m: usize, n: usize, value: f64) -> Result<Self> {
        let mut u = Self::zeros(dom);
        u.set(m, n, value)?;
        Ok(u)
    }

    /// Builds a field from a closure over one-based mode numbers.
    pub fn from_fn(dom: &Domain, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        SpectralField {
            coeffs: Array2::from_shape_fn((dom.nx, dom.nz), |(i, j)| f(i + 1, j + 1)),
            dom: *dom,
        }
    }

    pub fn domain(&self) -> &Domain {
        &self.dom
    }

    pub fn coeffs(&self) -> &Array2<f64> {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut Array2<f64> {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Array2<f64> {
        self.coeffs
    }

    /// Coefficient of mode `(m, n)`, one-based.
    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.coeffs[[m - 1, n - 1]]
    }

    pub fn set(&mut self, m: usize, n: usize, value: f64) -> Result<()> {
        if m == 0 || n == 0 || m > self.dom.nx || n > self.dom.nz {
            return Err(Error::DimensionMismatch(format!(
                "mode ({m}, {n}) outside truncation ({}, {})",
                self.dom.nx, self.dom.nz
            )));
        }
        self.coeffs[[m - 1, n - 1]] = value;
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn scaled(&self, s: f64) -> Self {
        SpectralField {
            coeffs: &self.coeffs * s,
            dom: self.dom,
        }
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: f64, other: &SpectralField) {
        self.coeffs.scaled_add(s, &other.coeffs);
    }

    pub fn sub(&self, other: &SpectralField) -> Self {
        SpectralField {
            coeffs: &self.coeffs - &other.coeffs,
            dom: self.dom,
        }
    }

    pub(crate) fn check_same(&self, other: &SpectralField) -> Result<()> {
        if self.dom != other.dom {
            return Err(Error::DimensionMismatch(format!(
                "fields live on different domains: {:?} vs {:?}",
                self.dom, other.dom
            )));
        }
        Ok(())
    }

    /// Same coefficients on a different truncation; modes beyond the target
    /// truncation are dropped, new modes are zero.
    pub fn resample(&self, target: &Domain) -> Result<Self> {
        if (self.dom.a - target.a).abs() > 0.0 {
            return Err(Error::DimensionMismatch(format!(
                "cannot resample between aspect ratios {} and {}",
                self.dom.a, target.a
            )));
        }
        Ok(SpectralField::from_fn(target, |m, n| {
            if m <= self.dom.nx && n <= self.dom.nz {
                self.get(m, n)
            } else {
                0.0
            }
        }))
    }
}

/// Values on the interior collocation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    values: Array2<f64>,
    dom: Domain,
}

impl GridField {
    pub fn zeros(dom: &Domain) -> Self {
        GridField {
            values: Array2::zeros(dom.grid_shape()),
            dom: *dom,
        }
    }

    pub fn from_values(dom: &Domain, values: Array2<f64>) -> Result<Self> {
        if values.dim() != dom.grid_shape() {
            return Err(Error::DimensionMismatch(format!(
                "grid array {:?} does not match collocation grid {:?}",
                values.dim(),
                dom.grid_shape()
            )));
        }
        Ok(GridField { values, dom: *dom })
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn domain(&self) -> &Domain {
        &self.dom
    }

    /// Node coordinates `(x_i, z_j)` for zero-based grid index `(i, j)`.
    pub fn node(&self, i: usize, j: usize) -> (f64, f64) {
        let (hx, hz) = self.dom.spacing();
        ((i + 1) as f64 * hx, (j + 1) as f64 * hz)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

/// Precomputed transform tables for one [`Domain`].
#[derive(Debug, Clone)]
pub struct Basis {
    dom: Domain,
    /// `sin(m pi i / Mx)`, shape `(Mx - 1, Nx)`
    sx: Array2<f64>,
    /// `(m pi / a) cos(m pi i / Mx)`
    cx: Array2<f64>,
    sz: Array2<f64>,
    cz: Array2<f64>,
    eig: Array2<f64>,
}

impl Basis {
    pub fn new(dom: &Domain) -> Self {
        let (px, pz) = dom.grid_shape();
        let mx = dom.mx as f64;
        let mz = dom.mz as f64;
        let sx = Array2::from_shape_fn((px, dom.nx), |(i, m)| {
            ((m + 1) as f64 * PI * (i + 1) as f64 / mx).sin()
        });
        let cx = Array2::from_shape_fn((px, dom.nx), |(i, m)| {
            let k = (m + 1) as f64 * PI;
            (k / dom.a) * (k * (i + 1) as f64 / mx).cos()
        });
        let sz = Array2::from_shape_fn((pz, dom.nz), |(j, n)| {
            ((n + 1) as f64 * PI * (j + 1) as f64 / mz).sin()
        });
        let cz = Array2::from_shape_fn((pz, dom.nz), |(j, n)| {
            let k = (n + 1) as f64 * PI;
            k * (k * (j + 1) as f64 / mz).cos()
        });
        Basis {
            dom: *dom,
            sx,
            cx,
            sz,
            cz,
            eig: eigenvalue_table(dom),
        }
    }

    pub fn domain(&self) -> &Domain {
        &self.dom
    }

    /// Laplacian eigenvalues per mode, same layout as the coefficients.
    pub fn eigenvalues(&self) -> &Array2<f64> {
        &self.eig
    }

    fn check_spectral(&self, u: &SpectralField) -> Result<()> {
        if u.dom != self.dom {
            return Err(Error::DimensionMismatch(format!(
                "field domain {:?} differs from basis domain {:?}",
                u.dom, self.dom
            )));
        }
        Ok(())
    }

    fn check_grid(&self, g: &GridField) -> Result<()> {
        if g.dom != self.dom {
            return Err(Error::DimensionMismatch(format!(
                "grid domain {:?} differs from basis domain {:?}",
                g.dom, self.dom
            )));
        }
        Ok(())
    }

    fn grid(&self, values: Array2<f64>) -> GridField {
        GridField {
            values,
            dom: self.dom,
        }
    }

    pub fn to_grid(&self, u: &SpectralField) -> Result<GridField> {
        self.check_spectral(u)?;
        Ok(self.grid(self.sx.dot(&u.coeffs).dot(&self.sz.t())))
    }

    /// Discrete sine transform back to coefficients of the retained modes.
    pub fn to_spectral(&self, g: &GridField) -> Result<SpectralField> {
        self.check_grid(g)?;
        Ok(self.project(&g.values))
    }

    fn project(&self, values: &Array2<f64>) -> SpectralField {
        let norm = 4.0 / (self.dom.mx as f64 * self.dom.mz as f64);
        let mut coeffs = self.sx.t().dot(values).dot(&self.sz);
        coeffs *= norm;
        SpectralField {
            coeffs,
            dom: self.dom,
        }
    }

    /// `du/dx` on the collocation grid.
    pub fn derivative_x(&self, u: &SpectralField) -> Result<GridField> {
        self.check_spectral(u)?;
        Ok(self.grid(self.cx.dot(&u.coeffs).dot(&self.sz.t())))
    }

    /// `du/dz` on the collocation grid.
    pub fn derivative_z(&self, u: &SpectralField) -> Result<GridField> {
        self.check_spectral(u)?;
        Ok(self.grid(self.sx.dot(&u.coeffs).dot(&self.cz.t())))
    }

    /// `d^2 u / dx dz` on the collocation grid.
    pub fn derivative_xz(&self, u: &SpectralField) -> Result<GridField> {
        self.check_spectral(u)?;
        Ok(self.grid(self.cx.dot(&u.coeffs).dot(&self.cz.t())))
    }

    /// Sine-Galerkin projection of `J(psi, theta) = psi_x theta_z - psi_z theta_x`.
    ///
    /// Both products are sine series of frequency at most `2N`, which the
    /// padded grid represents exactly, so the projection carries no aliasing.
    pub fn jacobian(&self, psi: &SpectralField, theta: &SpectralField) -> Result<SpectralField> {
        self.check_spectral(psi)?;
        self.check_spectral(theta)?;
        let szt = self.sz.t();
        let czt = self.cz.t();
        let cpsi = self.cx.dot(&psi.coeffs);
        let spsi = self.sx.dot(&psi.coeffs);
        let ctheta = self.cx.dot(&theta.coeffs);
        let stheta = self.sx.dot(&theta.coeffs);
        let psi_x = cpsi.dot(&szt);
        let psi_z = spsi.dot(&czt);
        let theta_x = ctheta.dot(&szt);
        let theta_z = stheta.dot(&czt);
        let mut prod = Array2::<f64>::zeros(psi_x.dim());
        Zip::from(&mut prod)
            .and(&psi_x)
            .and(&theta_z)
            .and(&psi_z)
            .and(&theta_x)
            .for_each(|p, &a, &b, &c, &d| *p = a * b - c * d);
        Ok(self.project(&prod))
    }

    /// Velocity `(v1, v2) = (-psi_z, psi_x)` on the collocation grid.
    pub fn velocity_from_stream(&self, psi: &SpectralField) -> Result<(GridField, GridField)> {
        let mut v1 = self.derivative_z(psi)?;
        v1.values.mapv_inplace(|v| -v);
        let v2 = self.derivative_x(psi)?;
        Ok((v1, v2))
    }

    /// Quadrature of `f g` over the domain using the grid nodes. Exact for
    /// products of two retained-mode fields.
    pub fn grid_inner(&self, f: &GridField, g: &GridField) -> Result<f64> {
        self.check_grid(f)?;
        self.check_grid(g)?;
        let (hx, hz) = self.dom.spacing();
        let sum = Zip::from(&f.values)
            .and(&g.values)
            .fold(0.0, |acc, &a, &b| acc + a * b);
        Ok(sum * hx * hz)
    }
}

/// `(a / 4) sum |mu|^k u^2`, the squared spectral `H^k` seminorm.
pub fn hk_seminorm_sq(u: &SpectralField, k: u32) -> f64 {
    let a = u.dom.a;
    let sum: f64 = u
        .coeffs
        .indexed_iter()
        .map(|((i, j), &c)| {
            let w = (-laplacian_eigenvalue(i + 1, j + 1, a)).powi(k as i32);
            w * c * c
        })
        .sum();
    0.25 * a * sum
}

pub fn norm_l2(u: &SpectralField) -> f64 {
    hk_seminorm_sq(u, 0).sqrt()
}

pub fn norm_grad(u: &SpectralField) -> f64 {
    hk_seminorm_sq(u, 1).sqrt()
}

pub fn norm_lap(u: &SpectralField) -> f64 {
    hk_seminorm_sq(u, 2).sqrt()
}

pub fn norm_gradlap(u: &SpectralField) -> f64 {
    hk_seminorm_sq(u, 3).sqrt()
}

pub fn norm_hk(u: &SpectralField, k: u32) -> f64 {
    hk_seminorm_sq(u, k).sqrt()
}

/// L2 inner product of two fields on the same domain.
pub fn inner(u: &SpectralField, v: &SpectralField) -> Result<f64> {
    u.check_same(v)?;
    let s = Zip::from(&u.coeffs)
        .and(&v.coeffs)
        .fold(0.0, |acc, &a, &b| acc + a * b);
    Ok(0.25 * u.dom.a * s)
}

/// Share of the `|mu|^k`-weighted energy held by modes with `m > cutoff` or
/// `n > cutoff`. Zero for the zero field.
pub fn tail_fraction(u: &SpectralField, k: u32, cutoff: usize) -> Result<f64> {
    let limit = u.dom.nx.min(u.dom.nz);
    if cutoff < 1 || cutoff >= limit {
        return Err(Error::Config(format!(
            "tail cutoff {cutoff} must satisfy 1 <= cutoff < {limit}"
        )));
    }
    let a = u.dom.a;
    let (mut tail, mut total) = (0.0, 0.0);
    for ((i, j), &c) in u.coeffs.indexed_iter() {
        let w = (-laplacian_eigenvalue(i + 1, j + 1, a)).powi(k as i32) * c * c;
        total += w;
        if i + 1 > cutoff || j + 1 > cutoff {
            tail += w;
        }
    }
    Ok(if total > 0.0 { tail / total } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn random_field(dom: &Domain, seed: u64, decay: f64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SpectralField::from_fn(dom, |m, n| {
            rng.random_range(-1.0..1.0) * (-decay * (m + n) as f64).exp()
        })
    }

    #[test]
    fn eigenvalue_examples() {
        let pi2 = PI * PI;
        assert_relative_eq!(laplacian_eigenvalue(1, 1, 1.0), -2.0 * pi2);
        assert_relative_eq!(laplacian_eigenvalue(2, 1, 2.0), -2.0 * pi2);
        assert_relative_eq!(laplacian_eigenvalue(3, 2, 1.0), -13.0 * pi2);
    }

    #[test]
    fn single_mode_grid_values() {
        let dom = Domain::new(1.5, 4, 3).unwrap();
        let basis = Basis::new(&dom);
        let u = SpectralField::mode(&dom, 1, 1, 1.0).unwrap();
        let g = basis.to_grid(&u).unwrap();
        for ((i, j), &v) in g.values().indexed_iter() {
            let (x, z) = g.node(i, j);
            let expect = (PI * x / dom.a).sin() * (PI * z).sin();
            assert!((v - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_field_maps_to_zero_grid() {
        let dom = Domain::new(1.0, 5, 5).unwrap();
        let basis = Basis::new(&dom);
        let g = basis.to_grid(&SpectralField::zeros(&dom)).unwrap();
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn round_trip_is_identity() {
        let dom = Domain::new(1.3, 16, 12).unwrap();
        let basis = Basis::new(&dom);
        let u = random_field(&dom, 7, 0.0);
        let back = basis.to_spectral(&basis.to_grid(&u).unwrap()).unwrap();
        let err = back.sub(&u).max_abs() / u.max_abs();
        assert!(err <= 1e-12, "round trip error {err}");
    }

    #[test]
    fn mismatched_domains_are_rejected() {
        let d1 = Domain::new(1.0, 4, 4).unwrap();
        let d2 = Domain::new(1.0, 5, 4).unwrap();
        let basis = Basis::new(&d1);
        let u = SpectralField::zeros(&d2);
        assert!(matches!(basis.to_grid(&u), Err(Error::DimensionMismatch(_))));
        assert!(basis.jacobian(&u, &u).is_err());
        assert!(SpectralField::from_coeffs(&d1, Array2::zeros((3, 4))).is_err());
    }

    #[test]
    fn mode_one_one_derivatives_and_velocity() {
        let dom = Domain::new(1.0, 3, 3).unwrap();
        let basis = Basis::new(&dom);
        let u = SpectralField::mode(&dom, 1, 1, 1.0).unwrap();
        let dx = basis.derivative_x(&u).unwrap();
        let (v1, v2) = basis.velocity_from_stream(&u).unwrap();
        for ((i, j), &v) in dx.values().indexed_iter() {
            let (x, z) = dx.node(i, j);
            let expect = PI * (PI * x).cos() * (PI * z).sin();
            assert!((v - expect).abs() < 1e-13);
            assert!((v2.values()[[i, j]] - expect).abs() < 1e-13);
            let e1 = -PI * (PI * x).sin() * (PI * z).cos();
            assert!((v1.values()[[i, j]] - e1).abs() < 1e-13);
        }
        let diff = u.sub(&u);
        assert_eq!(basis.derivative_x(&diff).unwrap().max_abs(), 0.0);
        let (w1, w2) = basis.velocity_from_stream(&diff).unwrap();
        assert_eq!(w1.max_abs() + w2.max_abs(), 0.0);
    }

    #[test]
    fn norms_of_single_mode() {
        let dom = Domain::new(1.0, 4, 4).unwrap();
        let c = 1.7;
        let u = SpectralField::mode(&dom, 1, 1, c).unwrap();
        assert_relative_eq!(norm_l2(&u).powi(2), c * c / 4.0, max_relative = 1e-14);
        assert_relative_eq!(
            norm_grad(&u).powi(2),
            2.0 * PI * PI * c * c / 4.0,
            max_relative = 1e-14
        );
        let z = SpectralField::zeros(&dom);
        for k in 0..5 {
            assert_eq!(norm_hk(&z, k), 0.0);
        }
    }

    #[test]
    fn hk_two_coincides_with_laplacian_norm() {
        let dom = Domain::new(0.8, 9, 7).unwrap();
        let u = random_field(&dom, 11, 0.1);
        assert_relative_eq!(norm_hk(&u, 2), norm_lap(&u), max_relative = 1e-15);
        assert_relative_eq!(norm_hk(&u, 3), norm_gradlap(&u), max_relative = 1e-15);
    }

    #[test]
    fn discrete_orthogonality() {
        let dom = Domain::new(1.4, 6, 5).unwrap();
        let basis = Basis::new(&dom);
        let grids: Vec<_> = (1..=6)
            .flat_map(|m| (1..=5).map(move |n| (m, n)))
            .map(|(m, n)| basis.to_grid(&SpectralField::mode(&dom, m, n, 1.0).unwrap()).unwrap())
            .collect();
        for (p, gp) in grids.iter().enumerate() {
            for (q, gq) in grids.iter().enumerate() {
                let ip = basis.grid_inner(gp, gq).unwrap();
                if p == q {
                    assert_relative_eq!(ip, dom.a / 4.0, max_relative = 1e-12);
                } else {
                    assert!(ip.abs() <= 1e-12, "modes {p},{q}: {ip}");
                }
            }
        }
    }

    #[test]
    fn parseval_matches_grid_quadrature() {
        let dom = Domain::new(1.2, 14, 11).unwrap();
        let basis = Basis::new(&dom);
        let u = random_field(&dom, 5, 0.0);
        let g = basis.to_grid(&u).unwrap();
        let quad = basis.grid_inner(&g, &g).unwrap();
        assert_relative_eq!(norm_l2(&u).powi(2), quad, max_relative = 1e-10);
    }

    #[test]
    fn dx_matrix_is_antisymmetric() {
        let d = dx_projection_matrix(9, 1.3);
        for i in 0..9 {
            for k in 0..9 {
                assert_eq!(d[[i, k]], -d[[k, i]]);
            }
        }
    }

    #[test]
    fn jacobian_of_field_with_itself_vanishes() {
        let dom = Domain::new(1.0, 10, 10).unwrap();
        let basis = Basis::new(&dom);
        let u = random_field(&dom, 9, 0.0);
        let j = basis.jacobian(&u, &u).unwrap();
        assert!(j.max_abs() <= 1e-11 * u.max_abs().powi(2) * 100.0);
    }

    #[test]
    fn jacobian_is_skew_in_second_argument() {
        let dom = Domain::new(1.1, 12, 12).unwrap();
        let basis = Basis::new(&dom);
        for seed in 0..5 {
            let psi = random_field(&dom, 100 + seed, 0.0);
            let theta = random_field(&dom, 200 + seed, 0.0);
            let j = basis.jacobian(&psi, &theta).unwrap();
            let skew = inner(&j, &theta).unwrap().abs();
            let scale = norm_grad(&psi) * norm_l2(&theta) * norm_grad(&theta);
            assert!(skew <= 1e-10 * scale, "seed {seed}: {skew} vs {scale}");
        }
    }

    #[test]
    fn tail_fraction_edge_cases() {
        let dom = Domain::new(1.0, 8, 8).unwrap();
        let low = SpectralField::from_fn(&dom, |m, n| if m <= 3 && n <= 3 { 1.0 } else { 0.0 });
        assert_eq!(tail_fraction(&low, 2, 4).unwrap(), 0.0);
        let high = SpectralField::mode(&dom, 6, 2, 0.3).unwrap();
        assert_eq!(tail_fraction(&high, 2, 4).unwrap(), 1.0);
        assert_eq!(tail_fraction(&SpectralField::zeros(&dom), 2, 4).unwrap(), 0.0);
        assert!(tail_fraction(&low, 2, 0).is_err());
        assert!(tail_fraction(&low, 2, 8).is_err());
    }

    #[test]
    fn exponential_tail_matches_direct_summation() {
        let dom = Domain::new(1.0, 32, 32).unwrap();
        let u = SpectralField::from_fn(&dom, |m, n| (-((m + n) as f64)).exp());
        // independent summation
        let (mut tail, mut total) = (0.0, 0.0);
        for m in 1..=32usize {
            for n in 1..=32usize {
                let mu = PI * PI * ((m * m + n * n) as f64);
                let w = mu * mu * (-2.0 * (m + n) as f64).exp();
                total += w;
                if m > 16 || n > 16 {
                    tail += w;
                }
            }
        }
        assert_relative_eq!(
            tail_fraction(&u, 2, 16).unwrap(),
            tail / total,
            max_relative = 1e-12
        );
    }
}
