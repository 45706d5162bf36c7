use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::geometry::{CrossSection, Grid};
use crate::error::{Error, Result};

/// Cell-centred samples of the three electric-field components.
///
/// `ex` is horizontal (radial in a bend), `ez` vertical and `ey` along the
/// direction of propagation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldMap {
    pub grid: Grid,
    pub ex: Vec<Complex64>,
    pub ey: Vec<Complex64>,
    pub ez: Vec<Complex64>,
    /// Cell-averaged relative permittivity (without bend mapping).
    pub eps: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldVector {
    pub x: Complex64,
    pub y: Complex64,
    pub z: Complex64,
}

impl FieldVector {
    pub fn norm_sqr(&self) -> f64 {
        self.x.norm_sqr() + self.y.norm_sqr() + self.z.norm_sqr()
    }

    pub fn transverse_norm_sqr(&self) -> f64 {
        self.x.norm_sqr() + self.z.norm_sqr()
    }

    pub fn scale(&self, s: f64) -> FieldVector {
        FieldVector {
            x: self.x * s,
            y: self.y * s,
            z: self.z * s,
        }
    }

    /// `self . conj(other)`
    pub fn dot_conj(&self, other: &FieldVector) -> Complex64 {
        self.x * other.x.conj() + self.y * other.y.conj() + self.z * other.z.conj()
    }
}

/// A guided eigenmode on a cross-section grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeSolution {
    pub n_eff: f64,
    /// Group index from the energy-to-flux ratio; exact for non-dispersive
    /// materials. Use [`super::group_index`] to include material dispersion.
    pub n_g: f64,
    pub wavelength_nm: f64,
    /// `None` for a straight guide.
    pub bend_radius_um: Option<f64>,
    /// Fraction of transverse `|E|^2` in the vertical component.
    pub polarization_fraction: f64,
    /// Fraction of `eps |E|^2` inside the core.
    pub core_fraction: f64,
    /// `Re int (E x H*) . y dA` in the solver normalization (H scaled by the
    /// vacuum impedance).
    pub poynting_flux: f64,
    pub field: FieldMap,
    pub cross_section: CrossSection,
}

impl ModeSolution {
    pub fn is_tm(&self) -> bool {
        self.polarization_fraction > 0.5
    }

    pub fn grid(&self) -> &Grid {
        &self.field.grid
    }

    /// Stored sample at cell `(i, j)`.
    pub fn sample(&self, i: usize, j: usize) -> FieldVector {
        let k = self.field.grid.index(i, j);
        FieldVector {
            x: self.field.ex[k],
            y: self.field.ey[k],
            z: self.field.ez[k],
        }
    }

    /// `sum eps |E|^2 dA` over the grid (1 after normalization).
    pub fn normalization_integral(&self) -> f64 {
        let g = &self.field.grid;
        let f = &self.field;
        (0..g.len())
            .map(|k| f.eps[k] * (f.ex[k].norm_sqr() + f.ey[k].norm_sqr() + f.ez[k].norm_sqr()))
            .sum::<f64>()
            * g.pitch_um
            * g.pitch_um
    }

    /// Field at `(x, z)` in nm by bilinear interpolation between cell
    /// centres. Points in the half-cell border use the nearest centre row
    /// or column.
    pub fn field_at(&self, x_nm: f64, z_nm: f64) -> Result<FieldVector> {
        let g = &self.field.grid;
        let (x, z) = (x_nm * 1e-3, z_nm * 1e-3);
        let tol = 1e-9;
        if !(x >= g.x_min() - tol && x <= g.x_max() + tol && z >= g.z_min() - tol && z <= g.z_max() + tol) {
            return Err(Error::OutOfRange {
                quantity: "field position",
                value: if x < g.x_min() || x > g.x_max() { x_nm } else { z_nm },
                min: if x < g.x_min() || x > g.x_max() {
                    g.x_min() * 1e3
                } else {
                    g.z_min() * 1e3
                },
                max: if x < g.x_min() || x > g.x_max() {
                    g.x_max() * 1e3
                } else {
                    g.z_max() * 1e3
                },
            });
        }
        let locate = |p: f64, origin: f64, n: usize| -> (usize, usize, f64) {
            let s = (p - origin) / g.pitch_um - 0.5;
            if s <= 0.0 || n == 1 {
                return (0, 0, 0.0);
            }
            let max = (n - 1) as f64;
            if s >= max {
                return (n - 1, n - 1, 0.0);
            }
            let i0 = s.floor() as usize;
            (i0, i0 + 1, s - i0 as f64)
        };
        let (i0, i1, tx) = locate(x, g.x_origin_um, g.nx);
        let (j0, j1, tz) = locate(z, g.z_origin_um, g.nz);
        let w = [
            ((i0, j0), (1.0 - tx) * (1.0 - tz)),
            ((i1, j0), tx * (1.0 - tz)),
            ((i0, j1), (1.0 - tx) * tz),
            ((i1, j1), tx * tz),
        ];
        let mut out = FieldVector {
            x: Complex64::new(0.0, 0.0),
            y: Complex64::new(0.0, 0.0),
            z: Complex64::new(0.0, 0.0),
        };
        for ((i, j), wt) in w {
            if wt == 0.0 {
                continue;
            }
            let s = self.sample(i, j);
            out.x += s.x * wt;
            out.y += s.y * wt;
            out.z += s.z * wt;
        }
        Ok(out)
    }

    /// Write the field as CSV rows `x_nm,z_nm,re_ex,im_ex,re_ey,im_ey,re_ez,im_ez`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let g = &self.field.grid;
        writeln!(out, "x_nm,z_nm,re_ex,im_ex,re_ey,im_ey,re_ez,im_ez")?;
        for i in 0..g.nx {
            for j in 0..g.nz {
                let s = self.sample(i, j);
                writeln!(
                    out,
                    "{:.3},{:.3},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e}",
                    g.center_x(i) * 1e3,
                    g.center_z(j) * 1e3,
                    s.x.re,
                    s.x.im,
                    s.y.re,
                    s.y.im,
                    s.z.re,
                    s.z.im
                )?;
            }
        }
        Ok(())
    }
}

/// Parsed row of a field CSV export.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldCsvRow {
    pub x_nm: f64,
    pub z_nm: f64,
    pub e: [Complex64; 3],
}

/// Reader for [`ModeSolution::write_csv`] output.
pub fn read_field_csv(text: &str) -> Result<Vec<FieldCsvRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "x_nm,z_nm,re_ex,im_ex,re_ey,im_ey,re_ez,im_ez" => {}
        _ => return Err(Error::Parse("missing field CSV header".into())),
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            let v: Vec<f64> = l
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", n + 2)))?;
            if v.len() != 8 {
                return Err(Error::Parse(format!("line {}: expected 8 columns", n + 2)));
            }
            Ok(FieldCsvRow {
                x_nm: v[0],
                z_nm: v[1],
                e: [
                    Complex64::new(v[2], v[3]),
                    Complex64::new(v[4], v[5]),
                    Complex64::new(v[6], v[7]),
                ],
            })
        })
        .collect()
}
