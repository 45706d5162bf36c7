//! Waveguide cross-section description and its discretization.
//!
//! Coordinates: `x` is horizontal (radial for a bend, positive outward)
//! with the core centred at `x = 0`; `z` is vertical with the top surface
//! of the core at `z = 0`, so the core fills `-H <= z <= 0`. Lengths here
//! are micrometres unless a field name says otherwise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::materials::Material;

/// Minimum clearance between the core and the domain edge.
pub const MIN_MARGIN_UM: f64 = 1.5;

/// Sub-samples per axis when averaging permittivity over a cell.
const SUBSAMPLES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub material: Material,
    pub thickness_um: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LateralBoundary {
    /// Zero tangential field at the left/right edges.
    Conductor,
    /// Periodic in x with period equal to the core width; the core then
    /// fills the whole row, giving a slab.
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSection {
    pub core_width_nm: f64,
    pub core_height_nm: f64,
    pub core: Material,
    /// Layers directly below the core, top to bottom. Anything deeper is
    /// cladding.
    pub under_layers: Vec<Layer>,
    pub cladding: Material,
    pub margin_um: f64,
    pub grid_pitch_nm: f64,
    pub lateral: LateralBoundary,
}

impl CrossSection {
    /// Rectangular core on a stack of under-layers, vacuum-clad.
    pub fn ridge(
        core_width_nm: f64,
        core_height_nm: f64,
        core: Material,
        under_layers: Vec<Layer>,
        grid_pitch_nm: f64,
    ) -> Result<Self> {
        let xs = CrossSection {
            core_width_nm,
            core_height_nm,
            core,
            under_layers,
            cladding: Material::vacuum(),
            margin_um: MIN_MARGIN_UM,
            grid_pitch_nm,
            lateral: LateralBoundary::Conductor,
        };
        xs.validate()?;
        Ok(xs)
    }

    /// Symmetric slab of `thickness_nm`, periodic in x over a few cells.
    pub fn slab(core: Material, thickness_nm: f64, cladding: Material, grid_pitch_nm: f64) -> Result<Self> {
        let xs = CrossSection {
            core_width_nm: 4.0 * grid_pitch_nm,
            core_height_nm: thickness_nm,
            core,
            under_layers: Vec::new(),
            cladding,
            margin_um: MIN_MARGIN_UM,
            grid_pitch_nm,
            lateral: LateralBoundary::Periodic,
        };
        xs.validate()?;
        Ok(xs)
    }

    pub fn with_pitch(&self, grid_pitch_nm: f64) -> Self {
        CrossSection {
            grid_pitch_nm,
            ..self.clone()
        }
    }

    pub fn with_core_width(&self, core_width_nm: f64) -> Self {
        CrossSection {
            core_width_nm,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.core_width_nm > 0.0 && self.core_height_nm > 0.0) {
            return Err(Error::Geometry("core width and height must be positive".into()));
        }
        if !(self.grid_pitch_nm > 0.0) {
            return Err(Error::Geometry("grid pitch must be positive".into()));
        }
        if self.margin_um < MIN_MARGIN_UM - 1e-12 {
            return Err(Error::Geometry(format!(
                "domain margin {} um below the required {MIN_MARGIN_UM} um",
                self.margin_um
            )));
        }
        let mut smallest = self.core_width_nm.min(self.core_height_nm);
        for l in &self.under_layers {
            if !(l.thickness_um > 0.0) {
                return Err(Error::Geometry("layer thickness must be positive".into()));
            }
            smallest = smallest.min(l.thickness_um * 1e3);
        }
        if self.grid_pitch_nm > smallest + 1e-9 {
            return Err(Error::Geometry(format!(
                "grid pitch {} nm coarser than the smallest feature {smallest} nm",
                self.grid_pitch_nm
            )));
        }
        Ok(())
    }

    pub fn half_width_um(&self) -> f64 {
        self.core_width_nm * 1e-3 / 2.0
    }

    pub fn height_um(&self) -> f64 {
        self.core_height_nm * 1e-3
    }

    pub fn is_in_core(&self, x_um: f64, z_um: f64) -> bool {
        let in_x = match self.lateral {
            LateralBoundary::Periodic => true,
            LateralBoundary::Conductor => x_um.abs() < self.half_width_um(),
        };
        in_x && z_um < 0.0 && z_um > -self.height_um()
    }

    /// Material occupying a point.
    pub fn material_at(&self, x_um: f64, z_um: f64) -> &Material {
        if self.is_in_core(x_um, z_um) {
            return &self.core;
        }
        if z_um < -self.height_um() {
            let mut top = -self.height_um();
            for l in &self.under_layers {
                let bottom = top - l.thickness_um;
                if z_um >= bottom {
                    return &l.material;
                }
                top = bottom;
            }
        }
        &self.cladding
    }

    /// Largest index among the materials that reach the domain boundary;
    /// a guided mode must exceed it.
    pub fn background_index(&self, wavelength_nm: f64) -> Result<f64> {
        let grid = Grid::for_cross_section(self);
        let h = grid.pitch_um;
        let mut n: f64 = 1.0;
        let mut probe = |x: f64, z: f64| -> Result<()> {
            n = n.max(self.material_at(x, z).refractive_index(wavelength_nm)?);
            Ok(())
        };
        for i in 0..grid.nx {
            let x = grid.center_x(i);
            probe(x, grid.z_min() + 1e-3 * h)?;
            probe(x, grid.z_max() - 1e-3 * h)?;
        }
        if self.lateral == LateralBoundary::Conductor {
            for j in 0..grid.nz {
                let z = grid.center_z(j);
                probe(grid.x_min() + 1e-3 * h, z)?;
                probe(grid.x_max() - 1e-3 * h, z)?;
            }
        }
        Ok(n)
    }

    pub fn max_index(&self, wavelength_nm: f64) -> Result<f64> {
        let mut n = self
            .core
            .refractive_index(wavelength_nm)?
            .max(self.cladding.refractive_index(wavelength_nm)?);
        for l in &self.under_layers {
            n = n.max(l.material.refractive_index(wavelength_nm)?);
        }
        Ok(n)
    }
}

/// Uniform rectangular grid. Field samples are stored at cell centres
/// `(x_min + (i + 1/2) h, z_min + (j + 1/2) h)`; a grid line always passes
/// through `z = 0`, and through `z = -H` when `H` is a multiple of `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub nz: usize,
    pub pitch_um: f64,
    pub x_origin_um: f64,
    pub z_origin_um: f64,
}

impl Grid {
    pub fn for_cross_section(xs: &CrossSection) -> Self {
        let h = xs.grid_pitch_nm * 1e-3;
        let margin = xs.margin_um;
        let nx = match xs.lateral {
            LateralBoundary::Periodic => ((xs.core_width_nm * 1e-3) / h).round().max(1.0) as usize,
            LateralBoundary::Conductor => (2.0 * (xs.half_width_um() + margin) / h).ceil() as usize,
        };
        let nz_top = (margin / h - 1e-9).ceil() as usize;
        let nz_bottom = ((xs.height_um() + margin) / h - 1e-9).ceil() as usize;
        Grid {
            nx,
            nz: nz_top + nz_bottom,
            pitch_um: h,
            x_origin_um: -(nx as f64) * h / 2.0,
            z_origin_um: -(nz_bottom as f64) * h,
        }
    }

    pub fn x_min(&self) -> f64 {
        self.x_origin_um
    }
    pub fn x_max(&self) -> f64 {
        self.x_origin_um + self.nx as f64 * self.pitch_um
    }
    pub fn z_min(&self) -> f64 {
        self.z_origin_um
    }
    pub fn z_max(&self) -> f64 {
        self.z_origin_um + self.nz as f64 * self.pitch_um
    }

    pub fn len(&self) -> usize {
        self.nx * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major in x: `i * nz + j`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.nz + j
    }

    pub fn center_x(&self, i: usize) -> f64 {
        self.x_origin_um + (i as f64 + 0.5) * self.pitch_um
    }

    pub fn center_z(&self, j: usize) -> f64 {
        self.z_origin_um + (j as f64 + 0.5) * self.pitch_um
    }

    pub fn same_spacing(&self, other: &Grid) -> bool {
        (self.pitch_um - other.pitch_um).abs() <= 1e-9 * self.pitch_um
    }
}

/// Which field component a permittivity sample belongs to; this decides
/// the direction of harmonic averaging across interfaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Component {
    Horizontal,
    Vertical,
    Longitudinal,
}

/// Cell-averaged permittivity around `(xc, zc)`, using the harmonic mean
/// along the component direction and the arithmetic mean across it.
pub(crate) fn averaged_permittivity(
    eps_at: &impl Fn(f64, f64) -> f64,
    xc: f64,
    zc: f64,
    h: f64,
    component: Component,
) -> f64 {
    let n = SUBSAMPLES;
    let off = |k: usize| ((k as f64 + 0.5) / n as f64 - 0.5) * h;
    match component {
        Component::Longitudinal => {
            let mut s = 0.0;
            for a in 0..n {
                for b in 0..n {
                    s += eps_at(xc + off(a), zc + off(b));
                }
            }
            s / (n * n) as f64
        }
        Component::Horizontal => {
            let mut inv = 0.0;
            for a in 0..n {
                let mut s = 0.0;
                for b in 0..n {
                    s += eps_at(xc + off(a), zc + off(b));
                }
                inv += n as f64 / s;
            }
            n as f64 / inv
        }
        Component::Vertical => {
            let mut inv = 0.0;
            for b in 0..n {
                let mut s = 0.0;
                for a in 0..n {
                    s += eps_at(xc + off(a), zc + off(b));
                }
                inv += n as f64 / s;
            }
            n as f64 / inv
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::MaterialDb;

    fn reference_xs(pitch: f64) -> CrossSection {
        let db = MaterialDb::builtin();
        CrossSection::ridge(
            750.0,
            380.0,
            db.get("Si3N4").unwrap().clone(),
            vec![Layer {
                material: db.get("SiO2").unwrap().clone(),
                thickness_um: 1.72,
            }],
            pitch,
        )
        .unwrap()
    }

    #[test]
    fn grid_has_surface_on_a_line_and_margins() {
        let xs = reference_xs(20.0);
        let g = Grid::for_cross_section(&xs);
        let k = -g.z_origin_um / g.pitch_um;
        assert!((k - k.round()).abs() < 1e-9);
        assert!(g.z_max() >= 1.5 - 1e-9);
        assert!(g.z_min() <= -0.38 - 1.5 + 1e-9);
        assert!(g.x_max() >= 0.375 + 1.5 - 1e-9);
        assert!((g.x_min() + g.x_max()).abs() < 1e-12);
    }

    #[test]
    fn materials_by_region() {
        let xs = reference_xs(20.0);
        assert_eq!(xs.material_at(0.0, -0.1).name, "Si3N4");
        assert_eq!(xs.material_at(0.0, 0.1).name, "vacuum");
        assert_eq!(xs.material_at(1.0, -0.1).name, "vacuum");
        assert_eq!(xs.material_at(1.0, -0.5).name, "SiO2");
        assert_eq!(xs.material_at(0.0, -3.0).name, "vacuum");
        let nb = xs.background_index(894.0).unwrap();
        assert!((nb - 1.4518).abs() < 2e-3, "{nb}");
    }

    #[test]
    fn rejects_bad_geometry() {
        let xs = reference_xs(20.0);
        assert!(CrossSection {
            margin_um: 1.0,
            ..xs.clone()
        }
        .validate()
        .is_err());
        assert!(CrossSection {
            core_width_nm: 0.0,
            ..xs.clone()
        }
        .validate()
        .is_err());
        assert!(xs.with_pitch(500.0).validate().is_err());
    }

    #[test]
    fn averaging_rules() {
        // vertical interface through the cell centre: eps 1 | 4
        let f = |x: f64, _z: f64| if x < 0.0 { 1.0 } else { 4.0 };
        let h = 1.0;
        let lon = averaged_permittivity(&f, 0.0, 0.0, h, Component::Longitudinal);
        let hor = averaged_permittivity(&f, 0.0, 0.0, h, Component::Horizontal);
        let ver = averaged_permittivity(&f, 0.0, 0.0, h, Component::Vertical);
        assert!((lon - 2.5).abs() < 1e-12);
        assert!((ver - 2.5).abs() < 1e-12);
        assert!((hor - 1.6).abs() < 1e-12);
    }
}
