//! Pulley coupler between a bus waveguide and the ring.
//!
//! The bus is bent concentrically around the ring over an arc of length
//! `CL`. Coupling follows from the overlap of the two mode fields over the
//! bus core and a phase-mismatch sinc:
//!
//! `kappa_c = |S sinc[(n_w R_w - n R) CL / (R lambda)] CL / R|^2`.
//!
//! `S` is evaluated in SI units with the bus mode carrying 1 W and the
//! ring mode holding 1 J, so `kappa_c` comes out as an energy decay rate
//! in rad/s.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modesolver::{solve_mode, ModeKind, ModeSolution};
use crate::resonator::{CavityRates, RingSpec};
use crate::units::{C_LIGHT, EPSILON_0};

/// Tolerance on the concentric-geometry constraint for `R_w`.
const CONCENTRIC_TOL_UM: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulleySpec {
    pub gap_um: f64,
    pub bus_width_um: f64,
    pub bus_radius_um: f64,
    pub coupling_length_um: f64,
}

impl PulleySpec {
    /// Pulley concentric with `ring`; the bus radius is derived from the
    /// gap and the two widths.
    pub fn concentric(ring: &RingSpec, gap_um: f64, bus_width_um: f64, coupling_length_um: f64) -> Result<Self> {
        let p = PulleySpec {
            gap_um,
            bus_width_um,
            bus_radius_um: ring.radius_um + ring.cross_section.half_width_um() + gap_um + 0.5 * bus_width_um,
            coupling_length_um,
        };
        p.validate(ring)?;
        Ok(p)
    }

    pub fn validate(&self, ring: &RingSpec) -> Result<()> {
        if !(self.gap_um > 0.0) {
            return Err(Error::Geometry("pulley gap must be positive".into()));
        }
        if !(self.bus_width_um > 0.0) {
            return Err(Error::Geometry("bus width must be positive".into()));
        }
        if !(self.coupling_length_um >= 0.0) {
            return Err(Error::Geometry("coupling length must be non-negative".into()));
        }
        let expected = ring.radius_um + ring.cross_section.half_width_um() + self.gap_um + 0.5 * self.bus_width_um;
        if (self.bus_radius_um - expected).abs() > CONCENTRIC_TOL_UM {
            return Err(Error::Geometry(format!(
                "bus radius {} um is not concentric with the ring (expected {expected:.4} um)",
                self.bus_radius_um
            )));
        }
        Ok(())
    }

    pub fn with_coupling_length(&self, coupling_length_um: f64) -> Self {
        PulleySpec {
            coupling_length_um,
            ..*self
        }
    }

    /// Horizontal offset of the bus centre from the ring core centre, um.
    pub fn centre_offset_um(&self, ring: &RingSpec) -> f64 {
        self.bus_radius_um - ring.radius_um
    }
}

/// `S` in SI units (W for a 1 W bus mode and a 1 J ring mode).
pub fn overlap_integral(
    ring_mode: &ModeSolution,
    bus_mode: &ModeSolution,
    pulley: &PulleySpec,
    ring: &RingSpec,
) -> Result<Complex64> {
    check_compatible(ring_mode, bus_mode)?;
    if !(bus_mode.poynting_flux > 0.0) {
        return Err(Error::Singularity("bus mode carries no power".into()));
    }
    let omega = angular_frequency(ring_mode.wavelength_nm);
    let eta0 = 1.0 / (EPSILON_0 * C_LIGHT);
    let l_m = ring.round_trip_um() * 1e-6;
    // field scale factors: unit power in the bus, unit energy in the ring
    let c_w = (2.0 * eta0 / bus_mode.poynting_flux).sqrt();
    let c_r = (2.0 / (EPSILON_0 * l_m * ring_mode.normalization_integral())).sqrt();
    let integral = core_overlap(bus_mode, ring_mode, pulley.centre_offset_um(ring), 0.0, |xb| {
        pulley.bus_radius_um + xb
    })? * 1e-6;
    Ok(Complex64::new(0.0, 1.0) * (omega * EPSILON_0 / 4.0) * c_w * c_r * integral)
}

/// Coupling coefficient per metre between two parallel straight guides,
/// `(omega eps0 / 4) int_b (eps_b - 1) E_b . E_a* dA` with both modes
/// carrying unit power. Guide `b` sits at `(dx, dz)` relative to `a`.
pub fn codirectional_coupling(a: &ModeSolution, b: &ModeSolution, dx_um: f64, dz_um: f64) -> Result<f64> {
    check_compatible(a, b)?;
    if !(a.poynting_flux > 0.0 && b.poynting_flux > 0.0) {
        return Err(Error::Singularity("mode carries no power".into()));
    }
    let eta0 = 1.0 / (EPSILON_0 * C_LIGHT);
    let c_a = (2.0 * eta0 / a.poynting_flux).sqrt();
    let c_b = (2.0 * eta0 / b.poynting_flux).sqrt();
    // normalized fields: the area integral is dimensionless in any unit
    let integral = core_overlap(b, a, dx_um, dz_um, |_| 1.0)?;
    let omega = angular_frequency(a.wavelength_nm);
    // W/m for 1 W modes, i.e. 1/m
    Ok((omega * EPSILON_0 / 4.0) * c_a * c_b * integral.norm())
}

fn angular_frequency(wavelength_nm: f64) -> f64 {
    2.0 * PI * C_LIGHT / (wavelength_nm * 1e-9)
}

fn check_compatible(a: &ModeSolution, b: &ModeSolution) -> Result<()> {
    let (ga, gb) = (a.grid(), b.grid());
    if (a.wavelength_nm - b.wavelength_nm).abs() > 1e-9 {
        return Err(Error::Config("modes solved at different wavelengths".into()));
    }
    if (ga.pitch_um - gb.pitch_um).abs() > 1e-12 {
        return Err(Error::Geometry(format!(
            "grid pitch mismatch: {} nm vs {} nm",
            ga.pitch_um * 1e3,
            gb.pitch_um * 1e3
        )));
    }
    Ok(())
}

/// `sum (eps_t - 1) E_t . E_o* w(x) dA` over the core of `target`, with the
/// other mode sampled at the target cell shifted by `(dx, dz)`. Lengths in
/// um, so the result carries um^-2 * [w] * um^2.
fn core_overlap(
    target: &ModeSolution,
    other: &ModeSolution,
    dx_um: f64,
    dz_um: f64,
    weight: impl Fn(f64) -> f64,
) -> Result<Complex64> {
    let tg = target.grid();
    let og = other.grid();
    let shift = (tg.z_origin_um + dz_um - og.z_origin_um) / og.pitch_um;
    if (shift - shift.round()).abs() > 1e-6 {
        return Err(Error::Geometry("mode grids are vertically misaligned".into()));
    }
    let h_core = target.cross_section.height_um();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..tg.nx {
        let x = tg.center_x(i);
        let xo = x + dx_um;
        if xo < og.x_min() || xo > og.x_max() {
            continue;
        }
        for j in 0..tg.nz {
            let z = tg.center_z(j);
            let zo = z + dz_um;
            if !(z > -h_core && z < 0.0) || zo < og.z_min() || zo > og.z_max() {
                continue;
            }
            let k = tg.index(i, j);
            let contrast = target.field.eps[k] - 1.0;
            if contrast == 0.0 {
                continue;
            }
            let et = target.sample(i, j);
            let eo = other.field_at(xo * 1e3, zo * 1e3)?;
            acc += et.dot_conj(&eo) * (contrast * weight(x));
        }
    }
    Ok(acc * tg.pitch_um * tg.pitch_um)
}

/// `sinc(x) = sin(pi x) / (pi x)`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - (PI * x).powi(2) / 6.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Phase-mismatch argument `(n_w R_w - n R) / (R lambda)` per um of CL.
pub fn mismatch_per_um(n_ring: f64, n_bus: f64, pulley: &PulleySpec, ring: &RingSpec, wavelength_nm: f64) -> f64 {
    (n_bus * pulley.bus_radius_um - n_ring * ring.radius_um) / (ring.radius_um * wavelength_nm * 1e-3)
}

/// Coupling rate (rad/s) for the given `S` and effective indices.
pub fn kappa_c_from_indices(
    s: Complex64,
    n_ring: f64,
    n_bus: f64,
    pulley: &PulleySpec,
    ring: &RingSpec,
    wavelength_nm: f64,
) -> f64 {
    let cl = pulley.coupling_length_um;
    let arg = mismatch_per_um(n_ring, n_bus, pulley, ring, wavelength_nm) * cl;
    (s * sinc(arg) * (cl / ring.radius_um)).norm_sqr()
}

pub fn kappa_c(
    s: Complex64,
    ring_mode: &ModeSolution,
    bus_mode: &ModeSolution,
    pulley: &PulleySpec,
    ring: &RingSpec,
    wavelength_nm: f64,
) -> f64 {
    kappa_c_from_indices(s, ring_mode.n_eff, bus_mode.n_eff, pulley, ring, wavelength_nm)
}

/// `((kappa_i - kappa_c) / (kappa_i + kappa_c))^2`.
pub fn t_res(rates: &CavityRates) -> Result<f64> {
    t_res_from(rates.kappa_c, rates.kappa_i)
}

pub fn t_res_from(kappa_c: f64, kappa_i: f64) -> Result<f64> {
    let sum = kappa_c + kappa_i;
    if !(sum > 0.0) {
        return Err(Error::Undefined("resonant transmission with zero total loss".into()));
    }
    Ok(((kappa_i - kappa_c) / sum).powi(2))
}

/// Both `kappa_c / kappa_i` ratios producing `t` on resonance:
/// (under-coupled, over-coupled).
pub fn invert_t_res(t: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&t) {
        return Err(Error::OutOfRange {
            quantity: "resonant transmission",
            value: t,
            min: 0.0,
            max: 1.0,
        });
    }
    let s = t.sqrt();
    let under = (1.0 - s) / (1.0 + s);
    Ok((under, 1.0 / under))
}

/// Ring and bus modes plus their overlap at one wavelength; `kappa_c` for
/// any coupling length follows without another solve.
#[derive(Debug, Clone)]
pub struct CouplerModel {
    pub wavelength_nm: f64,
    pub ring: RingSpec,
    pub pulley: PulleySpec,
    pub n_ring: f64,
    pub n_bus: f64,
    pub overlap: Complex64,
}

impl CouplerModel {
    pub fn solve(ring: &RingSpec, pulley: &PulleySpec, wavelength_nm: f64) -> Result<Self> {
        pulley.validate(ring)?;
        let ring_mode = solve_mode(
            &ring.cross_section,
            wavelength_nm,
            Some(ring.radius_um),
            ModeKind::FundamentalTm,
        )?;
        let bus_xs = ring.cross_section.with_core_width(pulley.bus_width_um * 1e3);
        let bus_mode = solve_mode(
            &bus_xs,
            wavelength_nm,
            Some(pulley.bus_radius_um),
            ModeKind::FundamentalTm,
        )?;
        Self::from_modes(ring, pulley, &ring_mode, &bus_mode)
    }

    pub fn from_modes(
        ring: &RingSpec,
        pulley: &PulleySpec,
        ring_mode: &ModeSolution,
        bus_mode: &ModeSolution,
    ) -> Result<Self> {
        let overlap = overlap_integral(ring_mode, bus_mode, pulley, ring)?;
        Ok(CouplerModel {
            wavelength_nm: ring_mode.wavelength_nm,
            ring: ring.clone(),
            pulley: *pulley,
            n_ring: ring_mode.n_eff,
            n_bus: bus_mode.n_eff,
            overlap,
        })
    }

    pub fn kappa_c(&self, coupling_length_um: f64) -> f64 {
        kappa_c_from_indices(
            self.overlap,
            self.n_ring,
            self.n_bus,
            &self.pulley.with_coupling_length(coupling_length_um),
            &self.ring,
            self.wavelength_nm,
        )
    }

    /// First sinc zero in CL, um (infinite when phase matched).
    pub fn first_null_um(&self) -> f64 {
        let m = mismatch_per_um(self.n_ring, self.n_bus, &self.pulley, &self.ring, self.wavelength_nm).abs();
        if m == 0.0 {
            f64::INFINITY
        } else {
            1.0 / m
        }
    }

    /// Smallest CL with `kappa_c = kappa_i` within `[0, cl_max_um]`, found
    /// by a coarse scan and bisection to 1 nm.
    pub fn find_critical_cl(&self, kappa_i: f64, cl_max_um: f64) -> Result<f64> {
        if kappa_i == 0.0 {
            return Ok(0.0);
        }
        if !(kappa_i > 0.0) {
            return Err(Error::Config("kappa_i must be non-negative".into()));
        }
        let step = 0.01;
        let n = (cl_max_um / step).ceil() as usize;
        let mut best = (f64::INFINITY, 0.0);
        let mut prev = 0.0;
        for k in 1..=n {
            let cl = (k as f64 * step).min(cl_max_um);
            let kc = self.kappa_c(cl);
            let mismatch = (kc - kappa_i).abs();
            if mismatch < best.0 {
                best = (mismatch, cl);
            }
            if kc >= kappa_i {
                let (mut lo, mut hi) = (prev, cl);
                while hi - lo > 1e-3 {
                    let mid = 0.5 * (lo + hi);
                    if self.kappa_c(mid) >= kappa_i {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                return Ok(hi);
            }
            prev = cl;
        }
        Err(Error::CriticalNotFound {
            min_mismatch: best.0,
            at_cl_um: best.1,
        })
    }
}

pub fn find_critical_cl(ring: &RingSpec, pulley: &PulleySpec, wavelength_nm: f64, kappa_i: f64) -> Result<f64> {
    if kappa_i == 0.0 {
        return Ok(0.0);
    }
    let model = CouplerModel::solve(ring, pulley, wavelength_nm)?;
    model.find_critical_cl(kappa_i, 4.0 * model.first_null_um().min(20.0))
}

/// Wavelength plus the intrinsic loss assumed there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanChannel {
    pub wavelength_nm: f64,
    pub kappa_i: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub coupling_length_um: f64,
    pub wavelength_nm: f64,
    pub t_res: f64,
    pub kappa_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignScan {
    pub rows: Vec<ScanRow>,
    /// Per channel: (wavelength, CL with the lowest T_res on the grid).
    pub critical_cl_um: Vec<(f64, f64)>,
}

impl DesignScan {
    pub fn t_res_at(&self, wavelength_nm: f64, coupling_length_um: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| {
                (r.wavelength_nm - wavelength_nm).abs() < 1e-9
                    && (r.coupling_length_um - coupling_length_um).abs() < 1e-9
            })
            .map(|r| r.t_res)
    }

    /// CSV with header `cl_um,wavelength_nm,t_res,kappa_c_rad_per_s`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "cl_um,wavelength_nm,t_res,kappa_c_rad_per_s")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{:.9e},{:.9e}",
                r.coupling_length_um, r.wavelength_nm, r.t_res, r.kappa_c
            )?;
        }
        Ok(())
    }

    pub fn read_csv(text: &str) -> Result<Vec<ScanRow>> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("cl_um,wavelength_nm,t_res,kappa_c_rad_per_s") {
            return Err(Error::Parse("missing design-scan CSV header".into()));
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
                if v.len() != 4 {
                    return Err(Error::Parse(format!("line {}: expected 4 columns", n + 2)));
                }
                Ok(ScanRow {
                    coupling_length_um: v[0],
                    wavelength_nm: v[1],
                    t_res: v[2],
                    kappa_c: v[3],
                })
            })
            .collect()
    }
}

/// Scan `T_res(CL)` over pre-solved coupler models, one per channel.
pub fn scan_models(models: &[(CouplerModel, f64)], coupling_lengths_um: &[f64]) -> Result<DesignScan> {
    let mut rows = Vec::with_capacity(models.len() * coupling_lengths_um.len());
    let mut critical_cl_um = Vec::with_capacity(models.len());
    for (model, kappa_i) in models {
        let mut best = (f64::INFINITY, f64::NAN);
        for &cl in coupling_lengths_um {
            let kc = model.kappa_c(cl);
            let t = t_res_from(kc, *kappa_i)?;
            if t < best.0 {
                best = (t, cl);
            }
            rows.push(ScanRow {
                coupling_length_um: cl,
                wavelength_nm: model.wavelength_nm,
                t_res: t,
                kappa_c: kc,
            });
        }
        critical_cl_um.push((model.wavelength_nm, best.1));
    }
    Ok(DesignScan { rows, critical_cl_um })
}

/// Solve every channel (in parallel) and scan the coupling length.
pub fn design_scan(
    ring: &RingSpec,
    pulley: &PulleySpec,
    channels: &[ScanChannel],
    coupling_lengths_um: &[f64],
) -> Result<DesignScan> {
    if coupling_lengths_um.iter().any(|cl| !(*cl >= 0.0)) {
        return Err(Error::Config("coupling lengths must be non-negative".into()));
    }
    let models = channels
        .par_iter()
        .map(|c| CouplerModel::solve(ring, pulley, c.wavelength_nm).map(|m| (m, c.kappa_i)))
        .collect::<Result<Vec<_>>>()?;
    scan_models(&models, coupling_lengths_um)
}
