//! Two-color evanescent-field trap above a straight section of the ring.
//!
//! A blue-detuned traveling wave pushes atoms away from the surface, a
//! red-detuned standing wave (two counter-propagating tones) pulls them in,
//! and the Casimir-Polder attraction takes over at short range. Potentials
//! are energies expressed as temperatures in microkelvin (`U / k_B`).

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::materials::{cs_ground_polarizability, AtomData};
use crate::modesolver::{group_index, solve_mode, CrossSection, Grid, ModeKind, ModeSolution};
use crate::resonator::{CavityRates, RingSpec};
use crate::units::{ghz_to_angular, joule_to_microkelvin, C_LIGHT, EPSILON_0, PLANCK};

/// Light fields stored by the mode solver are in 1/um; SI wants 1/m.
const PER_UM_TO_PER_M_SQ: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapConfig {
    /// Injected blue power, mW.
    pub blue_power_mw: f64,
    /// Injected red power per direction, mW.
    pub red_power_mw: f64,
    pub blue_rates: CavityRates,
    pub red_rates: CavityRates,
    /// Laser detuning from the ring resonance, GHz.
    pub blue_detuning_ghz: f64,
    pub red_detuning_ghz: f64,
}

impl TrapConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.blue_power_mw >= 0.0 && self.red_power_mw >= 0.0) {
            return Err(Error::Config("trap powers must be non-negative".into()));
        }
        Ok(())
    }

    pub fn with_powers(&self, blue_power_mw: f64, red_power_mw: f64) -> Self {
        TrapConfig {
            blue_power_mw,
            red_power_mw,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CirculatingPower {
    /// Stored energy, J.
    pub energy_j: f64,
    /// Power circulating past a point of the ring, mW.
    pub power_mw: f64,
    /// Circulating over injected power.
    pub enhancement: f64,
}

/// Build-up in the ring: `U = kappa_c P / ((kappa/2)^2 + delta^2)` and
/// `P_circ = U v_g / L`.
pub fn circulating_enhancement(
    rates: &CavityRates,
    input_power_mw: f64,
    detuning_ghz: f64,
    ring: &RingSpec,
    group_index: f64,
) -> Result<CirculatingPower> {
    if !(rates.kappa() > 0.0) {
        return Err(Error::Undefined("build-up of a lossless, uncoupled ring".into()));
    }
    if !(input_power_mw >= 0.0) {
        return Err(Error::Config("input power must be non-negative".into()));
    }
    if !(group_index > 0.0) {
        return Err(Error::Config("group index must be positive".into()));
    }
    let d = ghz_to_angular(detuning_ghz);
    let lorentz = rates.kappa_c / ((rates.kappa() / 2.0).powi(2) + d * d);
    let energy_j = lorentz * input_power_mw * 1e-3;
    let round_trip_s = group_index * ring.round_trip_um() * 1e-6 / C_LIGHT;
    let power_mw = energy_j / round_trip_s * 1e3;
    Ok(CirculatingPower {
        energy_j,
        power_mw,
        enhancement: lorentz / round_trip_s,
    })
}

/// Squared physical field (V^2/m^2) per unit solver `|E|^2` for a mode
/// holding `energy_j` in a ring of round-trip `length_um`.
fn field_scale(mode: &ModeSolution, energy_j: f64, length_um: f64) -> f64 {
    2.0 * energy_j / (EPSILON_0 * length_um * 1e-6 * mode.normalization_integral()) * PER_UM_TO_PER_M_SQ
}

fn light_shift_uk(alpha: f64, e2: f64) -> f64 {
    joule_to_microkelvin(-0.25 * alpha * e2)
}

/// Potential sampled on a mode-solver grid, `U / k_B` in uK.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialMap {
    pub grid: Grid,
    pub values_uk: Vec<f64>,
    /// Cells an atom can occupy (entirely in vacuum).
    pub accessible: Vec<bool>,
}

impl PotentialMap {
    pub fn from_fn(grid: Grid, accessible: Vec<bool>, f: impl Fn(f64, f64) -> f64 + Sync) -> Result<Self> {
        if accessible.len() != grid.len() {
            return Err(Error::Geometry("accessibility mask does not match the grid".into()));
        }
        let values_uk = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k / grid.nz, k % grid.nz);
                if accessible[k] {
                    f(grid.center_x(i), grid.center_z(j))
                } else {
                    0.0
                }
            })
            .collect();
        Ok(PotentialMap {
            grid,
            values_uk,
            accessible,
        })
    }

    /// Vacuum cells of a mode's cross-section.
    pub fn vacuum_mask(mode: &ModeSolution) -> Vec<bool> {
        mode.field.eps.iter().map(|e| *e == 1.0).collect()
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values_uk[self.grid.index(i, j)]
    }

    fn check_same_grid(&self, other: &PotentialMap) -> Result<()> {
        if self.grid != other.grid || self.accessible != other.accessible {
            return Err(Error::Geometry("potential maps are on different grids".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &PotentialMap) -> Result<PotentialMap> {
        self.check_same_grid(other)?;
        Ok(PotentialMap {
            grid: self.grid,
            values_uk: self
                .values_uk
                .iter()
                .zip(&other.values_uk)
                .map(|(a, b)| a + b)
                .collect(),
            accessible: self.accessible.clone(),
        })
    }

    pub fn scaled(&self, s: f64) -> PotentialMap {
        PotentialMap {
            grid: self.grid,
            values_uk: self.values_uk.iter().map(|v| v * s).collect(),
            accessible: self.accessible.clone(),
        }
    }

    /// `U(z)` along the vertical line nearest `x_nm`, accessible cells only.
    pub fn vertical_cut(&self, x_nm: f64) -> Vec<(f64, f64)> {
        let i = self.nearest_column(x_nm * 1e-3);
        (0..self.grid.nz)
            .filter(|&j| self.accessible[self.grid.index(i, j)])
            .map(|j| (self.grid.center_z(j) * 1e3, self.value(i, j)))
            .collect()
    }

    /// `U(x)` along the horizontal line nearest `z_nm`.
    pub fn horizontal_cut(&self, z_nm: f64) -> Vec<(f64, f64)> {
        let g = &self.grid;
        let j = (((z_nm * 1e-3 - g.z_origin_um) / g.pitch_um - 0.5).round().max(0.0) as usize).min(g.nz - 1);
        (0..g.nx)
            .filter(|&i| self.accessible[g.index(i, j)])
            .map(|i| (g.center_x(i) * 1e3, self.value(i, j)))
            .collect()
    }

    fn nearest_column(&self, x_um: f64) -> usize {
        let g = &self.grid;
        (((x_um - g.x_origin_um) / g.pitch_um - 0.5).round().max(0.0) as usize).min(g.nx - 1)
    }

    /// CSV `x_nm,z_nm,u_uk` over accessible cells.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x_nm,z_nm,u_uk")?;
        let g = &self.grid;
        for i in 0..g.nx {
            for j in 0..g.nz {
                let k = g.index(i, j);
                if self.accessible[k] {
                    writeln!(
                        out,
                        "{:.3},{:.3},{:.9e}",
                        g.center_x(i) * 1e3,
                        g.center_z(j) * 1e3,
                        self.values_uk[k]
                    )?;
                }
            }
        }
        Ok(())
    }
}

fn optical_map(mode: &ModeSolution, scale: f64, alpha: f64, standing: bool) -> Result<PotentialMap> {
    let mask = PotentialMap::vacuum_mask(mode);
    let g = *mode.grid();
    let f = &mode.field;
    let values_uk = (0..g.len())
        .map(|k| {
            if !mask[k] {
                return 0.0;
            }
            let e2 = if standing {
                // counter-propagating pair at an antinode: transverse parts
                // add, the longitudinal parts cancel
                4.0 * (f.ex[k].norm_sqr() + f.ez[k].norm_sqr())
            } else {
                f.ex[k].norm_sqr() + f.ey[k].norm_sqr() + f.ez[k].norm_sqr()
            };
            light_shift_uk(alpha, scale * e2)
        })
        .collect();
    Ok(PotentialMap {
        grid: g,
        values_uk,
        accessible: mask,
    })
}

/// Repulsive traveling-wave potential at the blue wavelength.
pub fn blue_potential(mode_b: &ModeSolution, energy_j: f64, ring: &RingSpec, atom: &AtomData) -> Result<PotentialMap> {
    let alpha = cs_ground_polarizability(atom, mode_b.wavelength_nm)?;
    if !(alpha < 0.0) {
        return Err(Error::Config(format!(
            "polarizability at {} nm is not negative; blue light would attract",
            mode_b.wavelength_nm
        )));
    }
    optical_map(
        mode_b,
        field_scale(mode_b, energy_j, ring.round_trip_um()),
        alpha,
        false,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RedLattice {
    /// Potential in the antinode plane (or the traveling-wave potential
    /// for a single tone).
    pub map: PotentialMap,
    /// Lattice period along the guide, nm (`lambda / 2 n_eff`).
    pub period_nm: f64,
}

/// Attractive potential of two equal counter-propagating red tones, each
/// holding `energy_per_direction_j`. With `standing = false` only one tone
/// is present and there is no lattice.
pub fn red_lattice_potential(
    mode_r: &ModeSolution,
    energy_per_direction_j: f64,
    ring: &RingSpec,
    atom: &AtomData,
    standing: bool,
) -> Result<RedLattice> {
    let alpha = cs_ground_polarizability(atom, mode_r.wavelength_nm)?;
    if !(alpha > 0.0) {
        return Err(Error::Config(format!(
            "polarizability at {} nm is not positive; red light would repel",
            mode_r.wavelength_nm
        )));
    }
    let scale = field_scale(mode_r, energy_per_direction_j, ring.round_trip_um());
    Ok(RedLattice {
        map: optical_map(mode_r, scale, alpha, standing)?,
        period_nm: mode_r.wavelength_nm / (2.0 * mode_r.n_eff),
    })
}

/// Intensity along the guide of the standing wave relative to one tone's
/// transverse intensity: `4 cos^2(k y)` for the transverse part and
/// `4 sin^2(k y)` weighted by the longitudinal fraction.
pub fn lattice_modulation(mode_r: &ModeSolution, y_nm: f64, transverse_fraction: f64) -> f64 {
    let k = 2.0 * PI * mode_r.n_eff / mode_r.wavelength_nm;
    let (c, s) = ((k * y_nm).cos(), (k * y_nm).sin());
    4.0 * (transverse_fraction * c * c + (1.0 - transverse_fraction) * s * s)
}

/// `U_cp = -C4 / (z^3 (z + lambda_bar))`, in uK.
pub fn casimir_polder(atom: &AtomData, z_nm: f64) -> Result<f64> {
    if !(z_nm > 0.0) {
        return Err(Error::OutOfRange {
            quantity: "surface distance",
            value: z_nm,
            min: 0.0,
            max: f64::INFINITY,
        });
    }
    let z = z_nm * 1e-3;
    let lb = atom.lambda_bar_nm * 1e-3;
    let hz = atom.c4_hz_um4 / (z.powi(3) * (z + lb));
    Ok(-joule_to_microkelvin(PLANCK * hz))
}

/// Distance (um) from a vacuum point to the nearest dielectric: the core
/// rectangle or the top of the under-layer stack.
pub fn surface_distance_um(xs: &CrossSection, x_um: f64, z_um: f64) -> f64 {
    let hw = xs.half_width_um();
    let h = xs.height_um();
    let dx = (x_um.abs() - hw).max(0.0);
    let dz = if z_um > 0.0 {
        z_um
    } else if z_um < -h {
        -h - z_um
    } else {
        0.0
    };
    let core = (dx * dx + dz * dz).sqrt();
    if xs.under_layers.is_empty() {
        core
    } else {
        core.min(z_um + h)
    }
}

/// Casimir-Polder map over the vacuum cells of `mode`'s cross-section.
pub fn casimir_polder_map(mode: &ModeSolution, atom: &AtomData) -> Result<PotentialMap> {
    let xs = &mode.cross_section;
    if !xs.cladding.is_vacuum() {
        return Err(Error::Config("surface potential needs vacuum cladding".into()));
    }
    let mask = PotentialMap::vacuum_mask(mode);
    PotentialMap::from_fn(*mode.grid(), mask, |x, z| {
        let d = surface_distance_um(xs, x, z) * 1e3;
        casimir_polder(atom, d).unwrap_or(f64::NEG_INFINITY)
    })
}

/// Everything needed to build trap maps at both colors.
#[derive(Debug, Clone)]
pub struct TrapModes {
    pub blue: ModeSolution,
    pub red: ModeSolution,
    pub blue_group_index: f64,
    pub red_group_index: f64,
}

impl TrapModes {
    /// Straight-guide TM modes on the ring cross-section (the trap sits
    /// above a linear segment) with bent-ring group indices for the
    /// build-up.
    pub fn solve(ring: &RingSpec, blue_nm: f64, red_nm: f64) -> Result<Self> {
        let xs = &ring.cross_section;
        let tm = ModeKind::FundamentalTm;
        let (blue, red) = rayon::join(
            || solve_mode(xs, blue_nm, None, tm),
            || solve_mode(xs, red_nm, None, tm),
        );
        let (ngb, ngr) = rayon::join(
            || group_index(xs, blue_nm, Some(ring.radius_um), tm),
            || group_index(xs, red_nm, Some(ring.radius_um), tm),
        );
        Ok(TrapModes {
            blue: blue?,
            red: red?,
            blue_group_index: ngb?,
            red_group_index: ngr?,
        })
    }

    fn check(&self) -> Result<()> {
        if self.blue.grid() != self.red.grid() {
            return Err(Error::Geometry("blue and red modes are on different grids".into()));
        }
        Ok(())
    }
}

/// Components of `U_tot`, kept separate so linearity in each power is
/// explicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapPotential {
    pub blue: PotentialMap,
    pub red: PotentialMap,
    pub surface: PotentialMap,
    pub total: PotentialMap,
    pub lattice_period_nm: f64,
    pub blue_circulating: CirculatingPower,
    pub red_circulating: CirculatingPower,
}

/// `U_b + U_r + U_cp` in the antinode plane of the red lattice.
pub fn total_potential(
    config: &TrapConfig,
    modes: &TrapModes,
    ring: &RingSpec,
    atom: &AtomData,
) -> Result<TrapPotential> {
    config.validate()?;
    modes.check()?;
    let blue_c = circulating_enhancement(
        &config.blue_rates,
        config.blue_power_mw,
        config.blue_detuning_ghz,
        ring,
        modes.blue_group_index,
    )?;
    let red_c = circulating_enhancement(
        &config.red_rates,
        config.red_power_mw,
        config.red_detuning_ghz,
        ring,
        modes.red_group_index,
    )?;
    let blue = blue_potential(&modes.blue, blue_c.energy_j, ring, atom)?;
    let red = red_lattice_potential(&modes.red, red_c.energy_j, ring, atom, true)?;
    let surface = casimir_polder_map(&modes.blue, atom)?;
    let total = blue.add(&red.map)?.add(&surface)?;
    Ok(TrapPotential {
        blue,
        red: red.map,
        surface,
        total,
        lattice_period_nm: red.period_nm,
        blue_circulating: blue_c,
        red_circulating: red_c,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub x_nm: f64,
    pub z_nm: f64,
    pub u_uk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapReport {
    pub centre: CriticalPoint,
    /// Height of the minimum above the top surface (`z = 0`), nm, refined
    /// by a parabola through neighbouring cells.
    pub z_t_nm: f64,
    /// Lowest barrier on any escape route.
    pub weakest_saddle: CriticalPoint,
    pub depth_uk: f64,
    /// Saddle-type cells of the map from the neighbour sign test.
    pub saddles: Vec<CriticalPoint>,
}

impl TrapReport {
    /// Depth above a thermal threshold (uK).
    pub fn exceeds(&self, threshold_uk: f64) -> bool {
        self.depth_uk > threshold_uk
    }
}

const NEIGHBOURS_8: [(isize, isize); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];

fn neighbour(g: &Grid, i: usize, j: usize, di: isize, dj: isize) -> Option<(usize, usize)> {
    let (a, b) = (i as isize + di, j as isize + dj);
    (a >= 0 && b >= 0 && (a as usize) < g.nx && (b as usize) < g.nz).then_some((a as usize, b as usize))
}

/// A cell from which an atom leaves the map: next to material or on the
/// outer edge.
fn is_exit(map: &PotentialMap, i: usize, j: usize) -> bool {
    let g = &map.grid;
    NEIGHBOURS_8.iter().any(|&(di, dj)| match neighbour(g, i, j, di, dj) {
        None => true,
        Some((a, b)) => !map.accessible[g.index(a, b)],
    })
}

#[derive(Clone, Copy, PartialEq)]
struct Level(f64, usize);

impl Eq for Level {}

impl PartialOrd for Level {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Level {
    // min-heap on the potential
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Trap centre, depth and saddles of a potential map.
///
/// The centre is the lowest interior local minimum whose horizontal
/// position lies within `|x| <= x_limit_nm`. The depth is the minimax
/// barrier: the lowest level at which a flood from the centre reaches an
/// exit cell.
pub fn analyze_trap_within(map: &PotentialMap, x_limit_nm: f64) -> Result<TrapReport> {
    let g = &map.grid;
    let at = |i: usize, j: usize| map.values_uk[g.index(i, j)];
    let mut minima = Vec::new();
    let mut saddles = Vec::new();
    for i in 0..g.nx {
        for j in 0..g.nz {
            let k = g.index(i, j);
            if !map.accessible[k] || is_exit(map, i, j) {
                continue;
            }
            let u = map.values_uk[k];
            let signs: Vec<bool> = NEIGHBOURS_8
                .iter()
                .map(|&(di, dj)| {
                    let (a, b) = neighbour(g, i, j, di, dj).expect("interior cell");
                    at(a, b) > u
                })
                .collect();
            let point = CriticalPoint {
                x_nm: g.center_x(i) * 1e3,
                z_nm: g.center_z(j) * 1e3,
                u_uk: u,
            };
            if signs.iter().all(|s| *s) {
                if point.x_nm.abs() <= x_limit_nm {
                    minima.push((i, j));
                }
                continue;
            }
            let changes = (0..8).filter(|&n| signs[n] != signs[(n + 1) % 8]).count();
            if changes >= 4 {
                saddles.push(point);
            }
        }
    }
    let &(ci, cj) = minima
        .iter()
        .min_by(|a, b| at(a.0, a.1).total_cmp(&at(b.0, b.1)))
        .ok_or_else(|| Error::Untrapped("no interior local minimum above the guide".into()))?;
    let u0 = at(ci, cj);

    // minimax flood
    let mut seen = vec![false; g.len()];
    let mut heap = BinaryHeap::new();
    let start = g.index(ci, cj);
    heap.push(Level(u0, start));
    seen[start] = true;
    let mut level = u0;
    let mut level_cell = start;
    let mut escape = None;
    while let Some(Level(u, k)) = heap.pop() {
        if u > level {
            level = u;
            level_cell = k;
        }
        let (i, j) = (k / g.nz, k % g.nz);
        if is_exit(map, i, j) {
            escape = Some(k);
            break;
        }
        for &(di, dj) in NEIGHBOURS_8.iter() {
            if let Some((a, b)) = neighbour(g, i, j, di, dj) {
                let n = g.index(a, b);
                if map.accessible[n] && !seen[n] {
                    seen[n] = true;
                    heap.push(Level(map.values_uk[n], n));
                }
            }
        }
    }
    escape.ok_or_else(|| Error::Untrapped("trap region has no exit".into()))?;
    let depth = level - u0;
    if !(depth > 0.0) {
        return Err(Error::Untrapped("minimum is not enclosed by a barrier".into()));
    }
    let (si, sj) = (level_cell / g.nz, level_cell % g.nz);

    // parabolic refinement of the height along z
    let mut z_t = g.center_z(cj) * 1e3;
    if cj > 0 && cj + 1 < g.nz {
        let (a, b, c) = (at(ci, cj - 1), u0, at(ci, cj + 1));
        let curv = a - 2.0 * b + c;
        if curv > 0.0 {
            z_t += 0.5 * g.pitch_um * 1e3 * (a - c) / curv;
        }
    }
    Ok(TrapReport {
        centre: CriticalPoint {
            x_nm: g.center_x(ci) * 1e3,
            z_nm: g.center_z(cj) * 1e3,
            u_uk: u0,
        },
        z_t_nm: z_t,
        weakest_saddle: CriticalPoint {
            x_nm: g.center_x(si) * 1e3,
            z_nm: g.center_z(sj) * 1e3,
            u_uk: level,
        },
        depth_uk: depth,
        saddles,
    })
}

/// [`analyze_trap_within`] restricted to minima above the core.
pub fn analyze_trap(map: &PotentialMap, core_width_nm: f64) -> Result<TrapReport> {
    analyze_trap_within(map, core_width_nm / 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunePoint {
    /// `P_r / P_b` with `P_r` per direction.
    pub ratio: f64,
    pub blue_power_mw: f64,
    pub red_power_mw: f64,
    /// `None` where the map holds no trap.
    pub z_t_nm: Option<f64>,
    pub depth_uk: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneCurve {
    pub points: Vec<TunePoint>,
    /// Ratio giving `z_t = target`, interpolated between trapped points.
    pub ratio_at_target: Option<f64>,
    pub target_z_nm: f64,
}

/// Sweep `P_r / P_b` at fixed total injected power `P_b + 2 P_r`.
pub fn tune_curve(
    base: &TrapConfig,
    modes: &TrapModes,
    ring: &RingSpec,
    atom: &AtomData,
    ratios: &[f64],
    total_power_mw: f64,
    target_z_nm: f64,
) -> Result<TuneCurve> {
    if ratios.iter().any(|r| !(*r >= 0.0)) {
        return Err(Error::Config("power ratios must be non-negative".into()));
    }
    let core_width = modes.blue.cross_section.core_width_nm;
    let points = ratios
        .par_iter()
        .map(|&ratio| {
            let blue = total_power_mw / (1.0 + 2.0 * ratio);
            let red = ratio * blue;
            let pot = total_potential(&base.with_powers(blue, red), modes, ring, atom)?;
            let (z, d) = match analyze_trap(&pot.total, core_width) {
                Ok(r) => (Some(r.z_t_nm), Some(r.depth_uk)),
                Err(Error::Untrapped(_)) => (None, None),
                Err(e) => return Err(e),
            };
            Ok(TunePoint {
                ratio,
                blue_power_mw: blue,
                red_power_mw: red,
                z_t_nm: z,
                depth_uk: d,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ratio_at_target = points.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        let (za, zb) = (a.z_t_nm?, b.z_t_nm?);
        let between = (za - target_z_nm) * (zb - target_z_nm) <= 0.0 && za != zb;
        between.then(|| a.ratio + (target_z_nm - za) * (b.ratio - a.ratio) / (zb - za))
    });
    Ok(TuneCurve {
        points,
        ratio_at_target,
        target_z_nm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_grid(n: usize) -> Grid {
        Grid {
            nx: n,
            nz: n,
            pitch_um: 0.01,
            x_origin_um: -0.005 * n as f64,
            z_origin_um: 0.0,
        }
    }

    #[test]
    fn casimir_polder_at_100_nm() {
        let u = casimir_polder(&AtomData::default(), 100.0).unwrap();
        assert!((u + 54.3).abs() < 0.2, "{u}");
        assert!(casimir_polder(&AtomData::default(), 0.0).is_err());
    }

    #[test]
    fn quadratic_bowl() {
        let g = square_grid(41);
        let (x0, z0) = (g.center_x(20), g.center_z(25));
        let map = PotentialMap::from_fn(g, vec![true; g.len()], |x, z| {
            1e4 * ((x - x0).powi(2) + (z - z0).powi(2)) - 7.0
        })
        .unwrap();
        let r = analyze_trap_within(&map, f64::INFINITY).unwrap();
        assert!((r.centre.x_nm - x0 * 1e3).abs() < 1e-9);
        assert!((r.z_t_nm - z0 * 1e3).abs() < 1e-6);
        // rim: closest edge cell is 15 cells above the centre
        let rim = 1e4 * (15.0 * 0.01f64).powi(2);
        assert!((r.depth_uk - rim).abs() < 1e-9, "{}", r.depth_uk);
    }

    #[test]
    fn flat_map_is_untrapped() {
        let g = square_grid(11);
        let map = PotentialMap::from_fn(g, vec![true; g.len()], |_, z| -z).unwrap();
        assert!(matches!(
            analyze_trap_within(&map, f64::INFINITY),
            Err(Error::Untrapped(_))
        ));
    }

    #[test]
    fn depth_invariant_under_offset() {
        let g = square_grid(31);
        let f = |x: f64, z: f64| ((x * 40.0).cos() + (z * 55.0 - 0.7).cos()) * 3.0;
        let a = PotentialMap::from_fn(g, vec![true; g.len()], f).unwrap();
        let b = PotentialMap::from_fn(g, vec![true; g.len()], move |x, z| f(x, z) + 123.0).unwrap();
        let ra = analyze_trap_within(&a, f64::INFINITY).unwrap();
        let rb = analyze_trap_within(&b, f64::INFINITY).unwrap();
        assert!((ra.depth_uk - rb.depth_uk).abs() < 1e-9);
        assert_eq!(ra.centre.x_nm, rb.centre.x_nm);
    }
}
