//! Full-vector finite-difference eigenmode solver for waveguide
//! cross-sections.
//!
//! The transverse electric field `(Ex, Ez)` lives on a Yee-staggered grid
//! and satisfies `P Q u = beta^2 u`, where `P` and `Q` are the curl-curl
//! blocks obtained by eliminating the longitudinal components. Outer edges
//! hold zero tangential field (or are periodic in x). Bends use the
//! equivalent-index map `n'(x) = n(x) (1 + x/R)`. Returned fields are
//! collocated at cell centres and normalized so that `sum eps |E|^2 dA = 1`
//! with `dA` in um^2, i.e. `E` carries units of 1/um.

mod eigen;
mod field;
mod geometry;
mod sparse;

use std::f64::consts::PI;

use num_complex::Complex64;

pub use eigen::ArnoldiOptions;
pub use field::{read_field_csv, FieldCsvRow, FieldMap, FieldVector, ModeSolution};
pub use geometry::{CrossSection, Grid, LateralBoundary, Layer, MIN_MARGIN_UM};

use crate::error::{Error, Result};
use geometry::{averaged_permittivity, Component};
use sparse::Csr;

/// Which solved mode a derived quantity should follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModeKind {
    /// Highest effective index regardless of polarization.
    Fundamental,
    /// Highest-index mode whose vertical field dominates.
    #[default]
    FundamentalTm,
    /// Highest-index mode whose horizontal field dominates.
    FundamentalTe,
}

impl ModeKind {
    pub fn pick<'a>(&self, modes: &'a [ModeSolution]) -> Option<&'a ModeSolution> {
        match self {
            ModeKind::Fundamental => modes.first(),
            ModeKind::FundamentalTm => modes.iter().find(|m| m.is_tm()),
            ModeKind::FundamentalTe => modes.iter().find(|m| !m.is_tm()),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub arnoldi: ArnoldiOptions,
    /// Extra eigenpairs requested beyond `count` to absorb non-guided ones.
    pub extra: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            arnoldi: ArnoldiOptions::default(),
            extra: 4,
        }
    }
}

/// The `count` highest-index guided modes, sorted by descending `n_eff`.
pub fn solve_modes(
    xs: &CrossSection,
    wavelength_nm: f64,
    bend_radius_um: Option<f64>,
    count: usize,
) -> Result<Vec<ModeSolution>> {
    solve_modes_with(xs, wavelength_nm, bend_radius_um, count, &SolverOptions::default())
}

pub fn solve_modes_with(
    xs: &CrossSection,
    wavelength_nm: f64,
    bend_radius_um: Option<f64>,
    count: usize,
    opts: &SolverOptions,
) -> Result<Vec<ModeSolution>> {
    if count == 0 {
        return Err(Error::Config("mode count must be at least 1".into()));
    }
    xs.validate()?;
    if let Some(r) = bend_radius_um {
        if !(r > 0.0) {
            return Err(Error::Geometry(format!("bend radius {r} must be positive")));
        }
    }
    let n_max = xs.max_index(wavelength_nm)?;
    let n_bg = xs.background_index(wavelength_nm)?;
    if n_max <= n_bg * (1.0 + 1e-12) {
        return Err(Error::NoGuidedMode { background: n_bg });
    }

    let grid = Grid::for_cross_section(xs);
    let k0 = 2.0 * PI / (wavelength_nm * 1e-3);
    let problem = Discretization::new(xs, &grid, wavelength_nm, bend_radius_um)?;
    let a = problem.operator(k0);

    let shift = (k0 * n_max).powi(2);
    let wanted = (count + opts.extra).min(a.nrows);
    // a bend raises the mapped index at the outer edge; modes below it leak
    let floor = (k0 * problem.boundary_index().max(n_bg)).powi(2);
    let pairs = eigen::eigs_near(&a, shift, floor, wanted, &opts.arnoldi)?;

    let mut modes: Vec<ModeSolution> = pairs
        .into_iter()
        .map(|p| problem.reconstruct(xs, k0, wavelength_nm, bend_radius_um, p.value.sqrt(), &p.vector))
        .collect();
    modes.sort_by(|a, b| b.n_eff.partial_cmp(&a.n_eff).unwrap());
    modes.truncate(count);
    if modes.is_empty() {
        return Err(Error::NoGuidedMode { background: n_bg });
    }
    Ok(modes)
}

/// Solve and return the mode selected by `kind`.
pub fn solve_mode(
    xs: &CrossSection,
    wavelength_nm: f64,
    bend_radius_um: Option<f64>,
    kind: ModeKind,
) -> Result<ModeSolution> {
    let modes = solve_modes(xs, wavelength_nm, bend_radius_um, 4)?;
    kind.pick(&modes).cloned().ok_or_else(|| {
        let background = xs.background_index(wavelength_nm).unwrap_or(f64::NAN);
        Error::NoGuidedMode { background }
    })
}

/// Group index `n_g = n_eff - lambda dn_eff/dlambda` by centred difference
/// over `lambda +- step_nm`, including material dispersion.
pub fn group_index(xs: &CrossSection, wavelength_nm: f64, bend_radius_um: Option<f64>, kind: ModeKind) -> Result<f64> {
    group_index_with_step(xs, wavelength_nm, bend_radius_um, kind, 1.0)
}

pub fn group_index_with_step(
    xs: &CrossSection,
    wavelength_nm: f64,
    bend_radius_um: Option<f64>,
    kind: ModeKind,
    step_nm: f64,
) -> Result<f64> {
    let centre = solve_mode(xs, wavelength_nm, bend_radius_um, kind)?;
    let lo = solve_mode(xs, wavelength_nm - step_nm, bend_radius_um, kind)?;
    let hi = solve_mode(xs, wavelength_nm + step_nm, bend_radius_um, kind)?;
    let slope = (hi.n_eff - lo.n_eff) / (2.0 * step_nm);
    Ok(centre.n_eff - wavelength_nm * slope)
}

/// Permittivity samples for every Yee component plus the cell-centred
/// (unmapped) permittivity used for normalization.
struct Discretization {
    grid: Grid,
    periodic_x: bool,
    eps_h: Vec<f64>,
    eps_v: Vec<f64>,
    eps_l: Vec<f64>,
    eps_centre: Vec<f64>,
}

impl Discretization {
    fn new(xs: &CrossSection, grid: &Grid, wavelength_nm: f64, bend_radius_um: Option<f64>) -> Result<Self> {
        let core = xs.core.permittivity(wavelength_nm)?;
        let clad = xs.cladding.permittivity(wavelength_nm)?;
        let layers: Vec<(f64, f64)> = {
            let mut top = -xs.height_um();
            let mut v = Vec::new();
            for l in &xs.under_layers {
                let bottom = top - l.thickness_um;
                v.push((bottom, l.material.permittivity(wavelength_nm)?));
                top = bottom;
            }
            v
        };
        let hw = xs.half_width_um();
        let h_core = xs.height_um();
        let periodic_x = xs.lateral == LateralBoundary::Periodic;
        let eps_at = move |x: f64, z: f64| -> f64 {
            let in_x = periodic_x || x.abs() < hw;
            if in_x && z < 0.0 && z > -h_core {
                return core;
            }
            if z < -h_core {
                for &(bottom, e) in &layers {
                    if z >= bottom {
                        return e;
                    }
                }
            }
            clad
        };
        let h = grid.pitch_um;
        let bend = |x: f64| match bend_radius_um {
            Some(r) => (1.0 + x / r).powi(2),
            None => 1.0,
        };
        let n = grid.len();
        let (mut eps_h, mut eps_v, mut eps_l, mut eps_centre) =
            (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for i in 0..grid.nx {
            for j in 0..grid.nz {
                let k = grid.index(i, j);
                let xe = grid.x_origin_um + i as f64 * h;
                let ze = grid.z_origin_um + j as f64 * h;
                let (xh, zh) = (xe + 0.5 * h, ze);
                let (xv, zv) = (xe, ze + 0.5 * h);
                eps_h[k] = averaged_permittivity(&eps_at, xh, zh, h, Component::Horizontal) * bend(xh);
                eps_v[k] = averaged_permittivity(&eps_at, xv, zv, h, Component::Vertical) * bend(xv);
                eps_l[k] = averaged_permittivity(&eps_at, xe, ze, h, Component::Longitudinal) * bend(xe);
                eps_centre[k] = averaged_permittivity(&eps_at, xe + 0.5 * h, ze + 0.5 * h, h, Component::Longitudinal);
            }
        }
        Ok(Discretization {
            grid: *grid,
            periodic_x,
            eps_h,
            eps_v,
            eps_l,
            eps_centre,
        })
    }

    /// Largest mapped index on the outermost cells that can carry
    /// radiation (all four edges, or top and bottom when periodic).
    fn boundary_index(&self) -> f64 {
        let g = &self.grid;
        let mut best: f64 = 0.0;
        for i in 0..g.nx {
            for j in 0..g.nz {
                let edge_z = j == 0 || j + 1 == g.nz;
                let edge_x = !self.periodic_x && (i == 0 || i + 1 == g.nx);
                if edge_z || edge_x {
                    best = best.max(self.eps_l[g.index(i, j)]);
                }
            }
        }
        best.sqrt()
    }

    /// Forward and backward differences along x and z.
    fn derivatives(&self) -> [Csr; 4] {
        let g = &self.grid;
        let n = g.len();
        let inv_h = 1.0 / g.pitch_um;
        let (mut dxf, mut dxb, mut dzf, mut dzb) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for i in 0..g.nx {
            for j in 0..g.nz {
                let k = g.index(i, j);
                dxf.push((k, k, -inv_h));
                dxb.push((k, k, inv_h));
                dzf.push((k, k, -inv_h));
                dzb.push((k, k, inv_h));
                if i + 1 < g.nx {
                    dxf.push((k, g.index(i + 1, j), inv_h));
                } else if self.periodic_x {
                    dxf.push((k, g.index(0, j), inv_h));
                }
                if i > 0 {
                    dxb.push((k, g.index(i - 1, j), -inv_h));
                } else if self.periodic_x {
                    dxb.push((k, g.index(g.nx - 1, j), -inv_h));
                }
                if j + 1 < g.nz {
                    dzf.push((k, g.index(i, j + 1), inv_h));
                }
                if j > 0 {
                    dzb.push((k, g.index(i, j - 1), -inv_h));
                }
            }
        }
        [
            Csr::from_triplets(n, n, dxf),
            Csr::from_triplets(n, n, dxb),
            Csr::from_triplets(n, n, dzf),
            Csr::from_triplets(n, n, dzb),
        ]
    }

    fn q_operator(&self, k0: f64) -> Csr {
        let [dxf, dxb, dzf, dzb] = self.derivatives();
        let q11 = Csr::diag(&self.eps_h)
            .scaled(k0)
            .add(&dzb.matmul(&dzf).scaled(1.0 / k0));
        let q12 = dzb.matmul(&dxf).scaled(-1.0 / k0);
        let q21 = dxb.matmul(&dzf).scaled(-1.0 / k0);
        let q22 = Csr::diag(&self.eps_v)
            .scaled(k0)
            .add(&dxb.matmul(&dxf).scaled(1.0 / k0));
        Csr::block2(&q11, &q12, &q21, &q22)
    }

    fn operator(&self, k0: f64) -> Csr {
        let [dxf, dxb, dzf, dzb] = self.derivatives();
        let n = self.grid.len();
        let inv_eps_l = Csr::diag(&self.eps_l.iter().map(|e| 1.0 / e).collect::<Vec<_>>());
        let ident = Csr::identity(n, k0);
        let p11 = ident.add(&dxf.matmul(&inv_eps_l).matmul(&dxb).scaled(1.0 / k0));
        let p12 = dxf.matmul(&inv_eps_l).matmul(&dzb).scaled(1.0 / k0);
        let p21 = dzf.matmul(&inv_eps_l).matmul(&dxb).scaled(1.0 / k0);
        let p22 = ident.add(&dzf.matmul(&inv_eps_l).matmul(&dzb).scaled(1.0 / k0));
        let p = Csr::block2(&p11, &p12, &p21, &p22);
        p.matmul(&self.q_operator(k0))
    }

    fn reconstruct(
        &self,
        xs: &CrossSection,
        k0: f64,
        wavelength_nm: f64,
        bend_radius_um: Option<f64>,
        beta: f64,
        u: &[f64],
    ) -> ModeSolution {
        let g = &self.grid;
        let n = g.len();
        let h = g.pitch_um;
        let (e_h, e_v) = u.split_at(n);
        // magnetic field (Hz-free part): (a, b) = (Hy, -Hx) in units of eta0
        let v = self.q_operator(k0).mul_vec(u);
        let (a, b): (Vec<f64>, Vec<f64>) = (
            v[..n].iter().map(|x| x / beta).collect(),
            v[n..].iter().map(|x| x / beta).collect(),
        );
        let [_, dxb, _, dzb] = self.derivatives();
        let da = dxb.mul_vec(&a);
        let db = dzb.mul_vec(&b);
        // longitudinal E is in quadrature: E_l = -i (Dxb a + Dzb b) / (k0 eps_l)
        let e_l: Vec<f64> = (0..n).map(|k| -(da[k] + db[k]) / (k0 * self.eps_l[k])).collect();

        let flux: f64 = (0..n).map(|k| e_h[k] * a[k] + e_v[k] * b[k]).sum::<f64>() * h * h;

        let at = |f: &[f64], i: isize, j: isize| -> f64 {
            if j < 0 || j >= g.nz as isize {
                return 0.0;
            }
            let i = if i >= g.nx as isize {
                if self.periodic_x {
                    0
                } else {
                    return 0.0;
                }
            } else {
                i
            };
            f[g.index(i as usize, j as usize)]
        };
        let mut ex = vec![Complex64::new(0.0, 0.0); n];
        let mut ez = vec![Complex64::new(0.0, 0.0); n];
        let mut ey = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..g.nx as isize {
            for j in 0..g.nz as isize {
                let k = g.index(i as usize, j as usize);
                ex[k] = Complex64::new(0.5 * (at(e_h, i, j) + at(e_h, i, j + 1)), 0.0);
                ez[k] = Complex64::new(0.5 * (at(e_v, i, j) + at(e_v, i + 1, j)), 0.0);
                let l = 0.25 * (at(&e_l, i, j) + at(&e_l, i + 1, j) + at(&e_l, i, j + 1) + at(&e_l, i + 1, j + 1));
                ey[k] = Complex64::new(0.0, l);
            }
        }

        let norm: f64 = (0..n)
            .map(|k| self.eps_centre[k] * (ex[k].norm_sqr() + ey[k].norm_sqr() + ez[k].norm_sqr()))
            .sum::<f64>()
            * h
            * h;
        // deterministic sign: largest transverse sample positive
        let (mut peak, mut sign) = (0.0, 1.0);
        for k in 0..n {
            for c in [ex[k].re, ez[k].re] {
                if c.abs() > peak {
                    peak = c.abs();
                    sign = c.signum();
                }
            }
        }
        let s = sign / norm.sqrt();
        for f in [&mut ex, &mut ey, &mut ez] {
            f.iter_mut().for_each(|c| *c *= s);
        }

        let (mut p_h, mut p_v, mut in_core, mut total) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..g.nx {
            for j in 0..g.nz {
                let k = g.index(i, j);
                p_h += ex[k].norm_sqr();
                p_v += ez[k].norm_sqr();
                let w = self.eps_centre[k] * (ex[k].norm_sqr() + ey[k].norm_sqr() + ez[k].norm_sqr());
                total += w;
                if xs.is_in_core(g.center_x(i), g.center_z(j)) {
                    in_core += w;
                }
            }
        }

        let n_eff = beta / k0;
        ModeSolution {
            n_eff,
            n_g: 1.0 / (flux / norm).abs(),
            wavelength_nm,
            bend_radius_um,
            polarization_fraction: p_v / (p_h + p_v),
            core_fraction: in_core / total,
            poynting_flux: flux.abs() / norm,
            field: FieldMap {
                grid: *g,
                ex,
                ey,
                ez,
                eps: self.eps_centre.clone(),
            },
            cross_section: xs.clone(),
        }
    }
}
