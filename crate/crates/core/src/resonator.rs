//! Microring figures of merit.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::materials::AtomData;
use crate::modesolver::{group_index, CrossSection, ModeKind, ModeSolution};
use crate::units::{angular_to_ghz, angular_to_mhz, thz_to_wavelength_nm, C_LIGHT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingSpec {
    pub radius_um: f64,
    /// Length of each of the two straight segments, um.
    pub linear_segment_um: f64,
    pub cross_section: CrossSection,
}

impl RingSpec {
    pub fn new(radius_um: f64, linear_segment_um: f64, cross_section: CrossSection) -> Result<Self> {
        let ring = RingSpec {
            radius_um,
            linear_segment_um,
            cross_section,
        };
        ring.validate()?;
        Ok(ring)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius_um > 0.0) {
            return Err(Error::Geometry("ring radius must be positive".into()));
        }
        if !(self.linear_segment_um >= 0.0) || !(self.round_trip_um() > 0.0) {
            return Err(Error::Geometry("round-trip length must be positive".into()));
        }
        self.cross_section.validate()
    }

    /// `L = 2 pi R + 2 l_seg`, um.
    pub fn round_trip_um(&self) -> f64 {
        2.0 * PI * self.radius_um + 2.0 * self.linear_segment_um
    }

    pub fn with_extra_length(&self, extra_um: f64) -> Self {
        RingSpec {
            linear_segment_um: self.linear_segment_um + 0.5 * extra_um,
            ..self.clone()
        }
    }
}

/// Linewidths of one ring resonance. Rates are angular (rad/s) and
/// describe energy decay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityRates {
    pub kappa_c: f64,
    pub kappa_i: f64,
    pub resonance_thz: f64,
}

impl CavityRates {
    pub fn new(kappa_c: f64, kappa_i: f64, resonance_thz: f64) -> Result<Self> {
        if !(kappa_c >= 0.0 && kappa_i >= 0.0) {
            return Err(Error::Config(format!(
                "cavity rates must be non-negative (kappa_c = {kappa_c}, kappa_i = {kappa_i})"
            )));
        }
        if !(resonance_thz > 0.0) {
            return Err(Error::Config("resonance frequency must be positive".into()));
        }
        Ok(CavityRates {
            kappa_c,
            kappa_i,
            resonance_thz,
        })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa_c + self.kappa_i
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI * self.resonance_thz * 1e12
    }

    pub fn q_intrinsic(&self) -> f64 {
        self.omega() / self.kappa_i
    }

    pub fn q_loaded(&self) -> f64 {
        self.omega() / self.kappa()
    }
}

/// Free spectral range `c / (n_g L)` in THz.
pub fn fsr_thz(group_index: f64, round_trip_um: f64) -> f64 {
    C_LIGHT / (group_index * round_trip_um * 1e-6) / 1e12
}

/// Free spectral range of the ring's fundamental TM mode at `wavelength_nm`.
pub fn free_spectral_range(ring: &RingSpec, wavelength_nm: f64) -> Result<f64> {
    let ng = group_index(
        &ring.cross_section,
        wavelength_nm,
        Some(ring.radius_um),
        ModeKind::FundamentalTm,
    )?;
    Ok(fsr_thz(ng, ring.round_trip_um()))
}

/// Intrinsic loss rate `kappa_i = 2 pi f / Q`, rad/s.
pub fn q_to_kappa(q: f64, frequency_thz: f64) -> Result<f64> {
    if !(q > 0.0) {
        return Err(Error::OutOfRange {
            quantity: "Q",
            value: q,
            min: 0.0,
            max: f64::INFINITY,
        });
    }
    Ok(2.0 * PI * frequency_thz * 1e12 / q)
}

/// Inverse of [`q_to_kappa`].
pub fn kappa_to_q(kappa: f64, frequency_thz: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::OutOfRange {
            quantity: "kappa",
            value: kappa,
            min: 0.0,
            max: f64::INFINITY,
        });
    }
    Ok(2.0 * PI * frequency_thz * 1e12 / kappa)
}

/// Mode volume in um^3 referenced to the field at height `atom_height_nm`
/// above the top surface on the vertical centreline:
/// `V_m = L * int eps |E|^2 dA / |E(0, z_t)|^2`.
pub fn mode_volume(mode: &ModeSolution, ring: &RingSpec, atom_height_nm: f64) -> Result<f64> {
    if !(atom_height_nm > 0.0) {
        return Err(Error::OutOfRange {
            quantity: "atom_height_nm",
            value: atom_height_nm,
            min: 0.0,
            max: mode.grid().z_max() * 1e3,
        });
    }
    let e2 = mode.field_at(0.0, atom_height_nm)?.norm_sqr();
    if !(e2 > 0.0) || !e2.is_finite() {
        return Err(Error::Singularity(format!("field vanishes at z = {atom_height_nm} nm")));
    }
    // eps = 1 at the (vacuum) atom position
    Ok(ring.round_trip_um() * mode.normalization_integral() / e2)
}

/// `C = (3 lambda^3 / 4 pi^2) (Q / V_m)`.
pub fn cooperativity(q: f64, mode_volume_um3: f64, wavelength_nm: f64) -> f64 {
    let lam = wavelength_nm * 1e-3;
    3.0 * lam.powi(3) / (4.0 * PI * PI) * q / mode_volume_um3
}

/// Single-photon coupling `g = sqrt(3 lambda_D2^3 omega Gamma / (16 pi^2 V_m))`,
/// rad/s.
pub fn coupling_strength(mode_volume_um3: f64, atom: &AtomData, frequency_thz: f64) -> Result<f64> {
    if !(mode_volume_um3 > 0.0) {
        return Err(Error::OutOfRange {
            quantity: "mode_volume_um3",
            value: mode_volume_um3,
            min: 0.0,
            max: f64::INFINITY,
        });
    }
    let lam = atom.d2_wavelength_nm * 1e-9;
    let omega = 2.0 * PI * frequency_thz * 1e12;
    let v = mode_volume_um3 * 1e-18;
    Ok((3.0 * lam.powi(3) * omega * atom.gamma_d2 / (16.0 * PI * PI * v)).sqrt())
}

/// Linear thermal tuning model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalTuning {
    pub ghz_per_mw: f64,
}

impl Default for ThermalTuning {
    fn default() -> Self {
        ThermalTuning { ghz_per_mw: 0.5 }
    }
}

impl ThermalTuning {
    /// Resonance shift in GHz for a heating power in mW.
    pub fn shift_ghz(&self, heating_power_mw: f64) -> Result<f64> {
        if !(heating_power_mw >= 0.0) {
            return Err(Error::OutOfRange {
                quantity: "heating_power_mw",
                value: heating_power_mw,
                min: 0.0,
                max: f64::INFINITY,
            });
        }
        Ok(self.ghz_per_mw * heating_power_mw)
    }
}

pub fn thermal_tuning(heating_power_mw: f64) -> Result<f64> {
    ThermalTuning::default().shift_ghz(heating_power_mw)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyWindow {
    pub center_thz: f64,
    pub half_width_thz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderEntry {
    pub length_increment_nm: f64,
    pub round_trip_um: f64,
    pub azimuthal_order: u64,
    pub frequency_thz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceLadder {
    pub entries: Vec<LadderEntry>,
    /// Frequency differences between consecutive entries, GHz.
    pub spacing_ghz: Vec<f64>,
}

impl ResonanceLadder {
    pub fn span_thz(&self) -> f64 {
        let (lo, hi) = self
            .entries
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| {
                (lo.min(e.frequency_thz), hi.max(e.frequency_thz))
            });
        if self.entries.is_empty() {
            0.0
        } else {
            hi - lo
        }
    }
}

fn resonance_thz(order: u64, n_eff: f64, length_um: f64) -> f64 {
    order as f64 * C_LIGHT / (n_eff * length_um * 1e-6) / 1e12
}

/// Azimuthal order nearest `n_eff L / lambda` at the window centre; ties
/// go to the lower order (lower frequency).
fn nearest_order(n_eff: f64, length_um: f64, center_thz: f64) -> u64 {
    let lam_um = thz_to_wavelength_nm(center_thz) * 1e-3;
    let x = n_eff * length_um / lam_um;
    let lower = x.floor();
    let pick = if x - lower <= 0.5 { lower } else { lower + 1.0 };
    pick.max(1.0) as u64
}

/// Resonances of a ring array with incremented round-trip lengths.
///
/// With no increments, every resonance of the base ring inside the window
/// is listed. Otherwise the azimuthal order nearest the window centre for
/// the base ring is followed across the increments, so that a length scan
/// of `lambda / n_eff` sweeps one full spectral period.
pub fn resonance_ladder(
    ring: &RingSpec,
    n_eff: f64,
    length_increments_nm: &[f64],
    window: FrequencyWindow,
) -> Result<ResonanceLadder> {
    if !(n_eff > 0.0) {
        return Err(Error::Config("effective index must be positive".into()));
    }
    let base = ring.round_trip_um();
    let mut entries = Vec::new();
    if length_increments_nm.is_empty() {
        let lo = window.center_thz - window.half_width_thz;
        let hi = window.center_thz + window.half_width_thz;
        let per_order = resonance_thz(1, n_eff, base);
        let m_lo = (lo / per_order).ceil().max(1.0) as u64;
        let m_hi = (hi / per_order).floor() as u64;
        for m in m_lo..=m_hi {
            entries.push(LadderEntry {
                length_increment_nm: 0.0,
                round_trip_um: base,
                azimuthal_order: m,
                frequency_thz: resonance_thz(m, n_eff, base),
            });
        }
    } else {
        let m = nearest_order(n_eff, base, window.center_thz);
        for &dl in length_increments_nm {
            let l = base + dl * 1e-3;
            if !(l > 0.0) {
                return Err(Error::Geometry(format!("increment {dl} nm gives non-positive length")));
            }
            entries.push(LadderEntry {
                length_increment_nm: dl,
                round_trip_um: l,
                azimuthal_order: m,
                frequency_thz: resonance_thz(m, n_eff, l),
            });
        }
    }
    let spacing_ghz = entries
        .windows(2)
        .map(|w| (w[1].frequency_thz - w[0].frequency_thz) * 1e3)
        .collect();
    Ok(ResonanceLadder { entries, spacing_ghz })
}

/// Figures of merit for one ring at one wavelength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiguresOfMerit {
    pub wavelength_nm: f64,
    pub n_eff: f64,
    pub n_g: f64,
    pub round_trip_um: f64,
    pub fsr_thz: f64,
    pub atom_height_nm: f64,
    pub mode_volume_um3: f64,
    pub q_intrinsic: f64,
    pub kappa_i_ghz: f64,
    pub cooperativity: f64,
    pub g_mhz: f64,
}

impl FiguresOfMerit {
    pub fn compute(
        ring: &RingSpec,
        mode: &ModeSolution,
        n_g: f64,
        atom: &AtomData,
        q: f64,
        atom_height_nm: f64,
    ) -> Result<Self> {
        let f = crate::units::wavelength_nm_to_thz(mode.wavelength_nm);
        let vm = mode_volume(mode, ring, atom_height_nm)?;
        let g = coupling_strength(vm, atom, crate::units::wavelength_nm_to_thz(atom.d2_wavelength_nm))?;
        Ok(FiguresOfMerit {
            wavelength_nm: mode.wavelength_nm,
            n_eff: mode.n_eff,
            n_g,
            round_trip_um: ring.round_trip_um(),
            fsr_thz: fsr_thz(n_g, ring.round_trip_um()),
            atom_height_nm,
            mode_volume_um3: vm,
            q_intrinsic: q,
            kappa_i_ghz: angular_to_ghz(q_to_kappa(q, f)?),
            cooperativity: cooperativity(q, vm, mode.wavelength_nm),
            g_mhz: angular_to_mhz(g),
        })
    }

    /// `key = value` lines.
    pub fn to_key_value(&self) -> String {
        let v = serde_json::to_value(self).expect("plain struct serializes");
        let mut out = String::new();
        if let serde_json::Value::Object(map) = v {
            for (k, v) in map {
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        out
    }
}
