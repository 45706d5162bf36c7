//! Project configuration: one TOML file shared by every subcommand.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coupler::{CouplerModel, PulleySpec, ScanChannel};
use crate::error::{Error, Result};
use crate::materials::{AtomData, MaterialDb};
use crate::membrane::{linspace, MembraneDesign, StressWindow};
use crate::modesolver::{CrossSection, Layer};
use crate::resonator::{CavityRates, RingSpec};
use crate::spectra::CouplingRegime;
use crate::trap::TrapConfig;
use crate::units::{ghz_to_angular, wavelength_nm_to_thz};

/// Configuration matching the fabricated device, shipped for reference runs.
pub const REFERENCE_CONFIG_TOML: &str = include_str!("../data/reference.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    #[serde(default)]
    pub materials: MaterialsSection,
    pub ring: RingSection,
    pub pulley: PulleySection,
    #[serde(default)]
    pub atom: AtomData,
    #[serde(default)]
    pub channels: Vec<ChannelSection>,
    pub cavity: CavitySection,
    pub trap: TrapSection,
    pub membrane: MembraneSection,
    #[serde(default)]
    pub sweeps: SweepSection,
    #[serde(default)]
    pub budget: BudgetSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialsSection {
    /// Extra material table merged over the built-in one; relative paths
    /// resolve against the config file.
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSection {
    pub material: String,
    pub thickness_um: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingSection {
    pub radius_um: f64,
    #[serde(default)]
    pub linear_segment_um: f64,
    pub core_width_nm: f64,
    pub core_height_nm: f64,
    pub core_material: String,
    #[serde(default)]
    pub under_layers: Vec<LayerSection>,
    #[serde(default = "default_pitch")]
    pub grid_pitch_nm: f64,
}

fn default_pitch() -> f64 {
    20.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulleySection {
    pub gap_um: f64,
    pub bus_width_um: f64,
    pub coupling_length_um: f64,
    /// Checked against the concentric value when given.
    pub bus_radius_um: Option<f64>,
}

/// Rates known at one probe wavelength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub wavelength_nm: f64,
    pub kappa_i_ghz: f64,
    /// Measured coupling rate, if fitted.
    pub kappa_c_ghz: Option<f64>,
    pub regime: Option<CouplingRegime>,
}

/// Rates used for the atom-coupled transmission models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySection {
    pub kappa_c_ghz: f64,
    pub kappa_i_ghz: f64,
    #[serde(default = "default_atom_height")]
    pub atom_height_nm: f64,
}

fn default_atom_height() -> f64 {
    100.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapSection {
    pub blue_wavelength_nm: f64,
    pub red_wavelength_nm: f64,
    pub blue_power_mw: f64,
    /// Per direction.
    pub red_power_mw: f64,
    pub blue_kappa_i_ghz: f64,
    pub red_kappa_i_ghz: f64,
    /// Solved from the pulley geometry when absent.
    pub blue_kappa_c_ghz: Option<f64>,
    pub red_kappa_c_ghz: Option<f64>,
    #[serde(default)]
    pub blue_detuning_ghz: f64,
    #[serde(default)]
    pub red_detuning_ghz: f64,
}

impl TrapSection {
    /// Trap settings given the coupling rates (rad/s) at both colors.
    pub fn trap_config(&self, blue_kappa_c: f64, red_kappa_c: f64) -> Result<TrapConfig> {
        let c = TrapConfig {
            blue_power_mw: self.blue_power_mw,
            red_power_mw: self.red_power_mw,
            blue_rates: CavityRates::new(
                blue_kappa_c,
                ghz_to_angular(self.blue_kappa_i_ghz),
                wavelength_nm_to_thz(self.blue_wavelength_nm),
            )?,
            red_rates: CavityRates::new(
                red_kappa_c,
                ghz_to_angular(self.red_kappa_i_ghz),
                wavelength_nm_to_thz(self.red_wavelength_nm),
            )?,
            blue_detuning_ghz: self.blue_detuning_ghz,
            red_detuning_ghz: self.red_detuning_ghz,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn total_power_mw(&self) -> f64 {
        self.blue_power_mw + 2.0 * self.red_power_mw
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MembraneSection {
    pub top_material: String,
    pub bottom_material: String,
    pub top_thickness_um: f64,
    pub bottom_thickness_um: f64,
    pub top_stress_mpa: f64,
    pub bottom_stress_mpa: f64,
    pub wavelength_nm: f64,
    #[serde(default = "default_na")]
    pub numerical_aperture: f64,
    #[serde(default = "default_window")]
    pub stress_window_mpa: [f64; 2],
}

fn default_na() -> f64 {
    0.35
}

fn default_window() -> [f64; 2] {
    let w = StressWindow::default();
    [w.min_mpa, w.max_mpa]
}

/// `start`, `stop` and point count of a sweep axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Range {
    pub const fn new(start: f64, stop: f64, points: usize) -> Self {
        Range { start, stop, points }
    }

    pub fn values(&self) -> Vec<f64> {
        linspace(self.start, self.stop, self.points)
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.points == 0 || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::Config(format!(
                "sweeps.{name}: need finite bounds and at least one point"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub coupling_length_um: Range,
    pub detuning_ghz: Range,
    pub atom_detuning_mhz: Range,
    pub atom_heights_nm: Vec<f64>,
    pub transparency_height_nm: Range,
    pub power_ratio: Range,
    pub membrane_top_um: Range,
    pub membrane_bottom_um: Range,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            coupling_length_um: Range::new(0.0, 6.0, 121),
            detuning_ghz: Range::new(-20.0, 20.0, 401),
            atom_detuning_mhz: Range::new(-1000.0, 1000.0, 801),
            atom_heights_nm: vec![100.0, 200.0, 300.0],
            transparency_height_nm: Range::new(50.0, 300.0, 51),
            power_ratio: Range::new(0.02, 0.3, 29),
            membrane_top_um: Range::new(1.0, 2.5, 61),
            membrane_bottom_um: Range::new(0.2, 1.0, 33),
        }
    }
}

/// Per-facet fiber coupling efficiencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetSection {
    pub facet_efficiency_measured: f64,
    pub facet_efficiency_simulated: f64,
}

impl Default for BudgetSection {
    fn default() -> Self {
        BudgetSection {
            facet_efficiency_measured: 0.5,
            facet_efficiency_simulated: 0.7,
        }
    }
}

/// Fiber-to-fiber transmission through two facets and the ring.
pub fn through_transmission(facet_in: f64, facet_out: f64, ring_transmission: f64) -> Result<f64> {
    for (name, v) in [
        ("input facet", facet_in),
        ("output facet", facet_out),
        ("ring", ring_transmission),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::OutOfRange {
                quantity: name,
                value: v,
                min: 0.0,
                max: 1.0,
            });
        }
    }
    Ok(facet_in * facet_out * ring_transmission)
}

/// Loss in dB for a power ratio.
pub fn loss_db(transmission: f64) -> f64 {
    -10.0 * transmission.log10()
}

impl ProjectConfig {
    /// Parse without touching the file system; `materials.path` is then
    /// resolved against the working directory.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let c: ProjectConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Ok(c)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut c = Self::from_toml_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        if let (Some(p), Some(dir)) = (&c.materials.path, path.parent()) {
            if p.is_relative() {
                c.materials.path = Some(dir.join(p));
            }
        }
        Ok(c)
    }

    pub fn reference() -> Self {
        Self::from_toml_str(REFERENCE_CONFIG_TOML).expect("shipped reference config is valid")
    }

    pub fn material_db(&self) -> Result<MaterialDb> {
        let mut db = MaterialDb::builtin();
        if let Some(p) = &self.materials.path {
            for m in MaterialDb::from_path(p)?.into_materials() {
                db.insert(m);
            }
        }
        Ok(db)
    }

    /// Checks values and resolves every material reference.
    pub fn validate(&self) -> Result<()> {
        let db = self.material_db()?;
        self.ring_spec_with(&db, None)?;
        self.pulley_spec_with(&self.ring_spec_with(&db, None)?)?;
        self.atom.validate()?;
        for (k, ch) in self.channels.iter().enumerate() {
            if !(ch.wavelength_nm > 0.0 && ch.kappa_i_ghz >= 0.0) || ch.kappa_c_ghz.is_some_and(|v| !(v >= 0.0)) {
                return Err(Error::Config(format!(
                    "channels[{k}]: wavelength and rates must be non-negative"
                )));
            }
        }
        self.cavity_rates()?;
        self.trap.trap_config(0.0, 0.0)?;
        self.membrane_design_with(&db)?;
        let s = &self.sweeps;
        for (name, r) in [
            ("coupling_length_um", &s.coupling_length_um),
            ("detuning_ghz", &s.detuning_ghz),
            ("atom_detuning_mhz", &s.atom_detuning_mhz),
            ("transparency_height_nm", &s.transparency_height_nm),
            ("power_ratio", &s.power_ratio),
            ("membrane_top_um", &s.membrane_top_um),
            ("membrane_bottom_um", &s.membrane_bottom_um),
        ] {
            r.validate(name)?;
        }
        if !(0.0..=1.0).contains(&self.budget.facet_efficiency_measured)
            || !(0.0..=1.0).contains(&self.budget.facet_efficiency_simulated)
        {
            return Err(Error::Config("budget: facet efficiencies must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn cross_section(&self, grid_pitch_nm: Option<f64>) -> Result<CrossSection> {
        let db = self.material_db()?;
        Ok(self.ring_spec_with(&db, grid_pitch_nm)?.cross_section)
    }

    pub fn ring_spec(&self, grid_pitch_nm: Option<f64>) -> Result<RingSpec> {
        self.ring_spec_with(&self.material_db()?, grid_pitch_nm)
    }

    fn ring_spec_with(&self, db: &MaterialDb, grid_pitch_nm: Option<f64>) -> Result<RingSpec> {
        let r = &self.ring;
        let layers = r
            .under_layers
            .iter()
            .map(|l| {
                Ok(Layer {
                    material: db
                        .get(&l.material)
                        .map_err(|_| Error::Config(format!("ring.under_layers: unknown material {:?}", l.material)))?
                        .clone(),
                    thickness_um: l.thickness_um,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let core = db
            .get(&r.core_material)
            .map_err(|_| Error::Config(format!("ring.core_material: unknown material {:?}", r.core_material)))?
            .clone();
        let xs = CrossSection::ridge(
            r.core_width_nm,
            r.core_height_nm,
            core,
            layers,
            grid_pitch_nm.unwrap_or(r.grid_pitch_nm),
        )?;
        RingSpec::new(r.radius_um, r.linear_segment_um, xs)
    }

    pub fn pulley_spec(&self, ring: &RingSpec) -> Result<PulleySpec> {
        self.pulley_spec_with(ring)
    }

    fn pulley_spec_with(&self, ring: &RingSpec) -> Result<PulleySpec> {
        let p = &self.pulley;
        let spec = PulleySpec::concentric(ring, p.gap_um, p.bus_width_um, p.coupling_length_um)?;
        if let Some(rw) = p.bus_radius_um {
            PulleySpec {
                bus_radius_um: rw,
                ..spec
            }
            .validate(ring)?;
        }
        Ok(spec)
    }

    /// Scan channels in file order.
    pub fn scan_channels(&self) -> Vec<ScanChannel> {
        self.channels
            .iter()
            .map(|c| ScanChannel {
                wavelength_nm: c.wavelength_nm,
                kappa_i: ghz_to_angular(c.kappa_i_ghz),
            })
            .collect()
    }

    /// Trap settings with coupling rates taken from the file or, where
    /// absent, solved for the pulley at its configured coupling length.
    pub fn trap_config(&self, ring: &RingSpec, pulley: &PulleySpec) -> Result<TrapConfig> {
        let t = &self.trap;
        let rate = |given: Option<f64>, wavelength_nm: f64| -> Result<f64> {
            match given {
                Some(ghz) => Ok(ghz_to_angular(ghz)),
                None => Ok(CouplerModel::solve(ring, pulley, wavelength_nm)?.kappa_c(pulley.coupling_length_um)),
            }
        };
        let (blue, red) = rayon::join(
            || rate(t.blue_kappa_c_ghz, t.blue_wavelength_nm),
            || rate(t.red_kappa_c_ghz, t.red_wavelength_nm),
        );
        t.trap_config(blue?, red?)
    }

    /// Rates of the cavity mode at the D2 line.
    pub fn cavity_rates(&self) -> Result<CavityRates> {
        CavityRates::new(
            ghz_to_angular(self.cavity.kappa_c_ghz),
            ghz_to_angular(self.cavity.kappa_i_ghz),
            wavelength_nm_to_thz(self.atom.d2_wavelength_nm),
        )
    }

    pub fn membrane_design(&self) -> Result<MembraneDesign> {
        self.membrane_design_with(&self.material_db()?)
    }

    fn membrane_design_with(&self, db: &MaterialDb) -> Result<MembraneDesign> {
        let m = &self.membrane;
        let get = |name: &str, key: &str| {
            db.get(name)
                .cloned()
                .map_err(|_| Error::Config(format!("membrane.{key}: unknown material {name:?}")))
        };
        let [lo, hi] = m.stress_window_mpa;
        if !(lo <= hi) {
            return Err(Error::Config("membrane.stress_window_mpa must be [min, max]".into()));
        }
        if !(m.top_thickness_um > 0.0 && m.bottom_thickness_um > 0.0) {
            return Err(Error::Config("membrane thicknesses must be positive".into()));
        }
        Ok(MembraneDesign {
            top: get(&m.top_material, "top_material")?,
            bottom: get(&m.bottom_material, "bottom_material")?,
            top_stress_mpa: m.top_stress_mpa,
            bottom_stress_mpa: m.bottom_stress_mpa,
            wavelength_nm: m.wavelength_nm,
            numerical_aperture: m.numerical_aperture,
            window: StressWindow {
                min_mpa: lo,
                max_mpa: hi,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_config_validates() {
        let c = ProjectConfig::reference();
        c.validate().unwrap();
        assert_eq!(c.channels.len(), 4);
        assert!((c.trap.total_power_mw() - 1.74).abs() < 1e-12);
    }

    #[test]
    fn unknown_key_reports_line() {
        let text = REFERENCE_CONFIG_TOML.replacen("[ring]", "[ring]\nradius = 3", 1);
        let e = ProjectConfig::from_toml_str(&text).unwrap_err().to_string();
        assert!(e.contains("line"), "{e}");
    }

    #[test]
    fn unknown_material_is_config_error() {
        let mut c = ProjectConfig::reference();
        c.ring.core_material = "unobtainium".into();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn budget_two_half_facets() {
        let t = through_transmission(0.5, 0.5, 1.0).unwrap();
        assert!((t - 0.25).abs() < 1e-15);
        assert!((loss_db(t) - 6.0206).abs() < 1e-4);
        assert!(through_transmission(1.5, 0.5, 1.0).is_err());
    }
}
