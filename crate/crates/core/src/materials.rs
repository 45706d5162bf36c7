//! Refractive-index dispersion and cesium atomic data.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{C_LIGHT, ELECTRON_MASS, ELEMENTARY_CHARGE};

/// Shipped dispersion database (vacuum, Si3N4, SiO2, Si).
pub const DEFAULT_MATERIALS_TOML: &str = include_str!("../data/materials.toml");

const BAND_MIN_NM: f64 = 600.0;
const BAND_MAX_NM: f64 = 1100.0;

/// How the index depends on wavelength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Dispersion {
    /// `(B_k, C_k)` terms, C in um^2. No terms means n = 1 exactly.
    Sellmeier(Vec<[f64; 2]>),
    /// Non-dispersive index, used for synthetic test structures.
    Constant(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub name: String,
    pub dispersion: Dispersion,
    /// Intrinsic film stress in MPa, tensile positive.
    pub intrinsic_stress_mpa: Option<f64>,
    pub valid_min_nm: f64,
    pub valid_max_nm: f64,
}

impl Material {
    pub fn sellmeier(name: impl Into<String>, terms: Vec<[f64; 2]>) -> Result<Self> {
        let m = Material {
            name: name.into(),
            dispersion: Dispersion::Sellmeier(terms),
            intrinsic_stress_mpa: None,
            valid_min_nm: BAND_MIN_NM,
            valid_max_nm: BAND_MAX_NM,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn constant(name: impl Into<String>, index: f64) -> Self {
        Material {
            name: name.into(),
            dispersion: Dispersion::Constant(index),
            intrinsic_stress_mpa: None,
            valid_min_nm: BAND_MIN_NM,
            valid_max_nm: BAND_MAX_NM,
        }
    }

    pub fn vacuum() -> Self {
        Material {
            name: "vacuum".into(),
            dispersion: Dispersion::Sellmeier(Vec::new()),
            intrinsic_stress_mpa: Some(0.0),
            valid_min_nm: BAND_MIN_NM,
            valid_max_nm: BAND_MAX_NM,
        }
    }

    pub fn with_stress(mut self, stress_mpa: f64) -> Self {
        self.intrinsic_stress_mpa = Some(stress_mpa);
        self
    }

    pub fn is_vacuum(&self) -> bool {
        match &self.dispersion {
            Dispersion::Sellmeier(t) => t.is_empty(),
            Dispersion::Constant(n) => *n == 1.0,
        }
    }

    /// Poles must sit outside the validity band and the index must stay
    /// real and >= 1 across it.
    fn validate(&self) -> Result<()> {
        if self.valid_min_nm >= self.valid_max_nm {
            return Err(Error::Config(format!("material {}: empty validity band", self.name)));
        }
        match &self.dispersion {
            Dispersion::Constant(n) => {
                if !(n.is_finite() && *n >= 1.0) {
                    return Err(Error::Config(format!(
                        "material {}: constant index {n} must be >= 1",
                        self.name
                    )));
                }
            }
            Dispersion::Sellmeier(terms) => {
                let lo = self.valid_min_nm * 1e-3;
                let hi = self.valid_max_nm * 1e-3;
                for [b, c] in terms {
                    if !(b.is_finite() && c.is_finite()) || *c < 0.0 {
                        return Err(Error::Config(format!(
                            "material {}: bad Sellmeier term ({b}, {c})",
                            self.name
                        )));
                    }
                    let pole = c.sqrt();
                    if pole >= lo && pole <= hi {
                        return Err(Error::Config(format!(
                            "material {}: Sellmeier pole at {:.1} nm inside validity band",
                            self.name,
                            pole * 1e3
                        )));
                    }
                }
                // A pole-free band means n^2 is continuous; sample densely
                // to catch n^2 < 1.
                for k in 0..=100 {
                    let lam = lo + (hi - lo) * k as f64 / 100.0;
                    let n2 = sellmeier_n2(terms, lam);
                    if !(n2 >= 1.0) {
                        return Err(Error::Config(format!(
                            "material {}: n^2 = {n2} < 1 at {:.0} nm",
                            self.name,
                            lam * 1e3
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Real refractive index at a vacuum wavelength in nm.
    pub fn refractive_index(&self, wavelength_nm: f64) -> Result<f64> {
        if !(wavelength_nm >= self.valid_min_nm && wavelength_nm <= self.valid_max_nm) {
            return Err(Error::OutOfRange {
                quantity: "wavelength_nm",
                value: wavelength_nm,
                min: self.valid_min_nm,
                max: self.valid_max_nm,
            });
        }
        Ok(match &self.dispersion {
            Dispersion::Constant(n) => *n,
            Dispersion::Sellmeier(terms) if terms.is_empty() => 1.0,
            Dispersion::Sellmeier(terms) => sellmeier_n2(terms, wavelength_nm * 1e-3).sqrt(),
        })
    }

    pub fn permittivity(&self, wavelength_nm: f64) -> Result<f64> {
        self.refractive_index(wavelength_nm).map(|n| n * n)
    }
}

fn sellmeier_n2(terms: &[[f64; 2]], lambda_um: f64) -> f64 {
    let l2 = lambda_um * lambda_um;
    1.0 + terms.iter().map(|[b, c]| b * l2 / (l2 - c)).sum::<f64>()
}

/// Free function form of [`Material::refractive_index`].
pub fn refractive_index(material: &Material, wavelength_nm: f64) -> Result<f64> {
    material.refractive_index(wavelength_nm)
}

#[derive(Debug, Deserialize)]
struct DbFile {
    material: Vec<DbEntry>,
}

#[derive(Debug, Deserialize)]
struct DbEntry {
    name: String,
    #[serde(default)]
    sellmeier: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    index: Option<f64>,
    #[serde(default)]
    intrinsic_stress_mpa: Option<f64>,
    #[serde(default)]
    valid_min_nm: Option<f64>,
    #[serde(default)]
    valid_max_nm: Option<f64>,
}

/// Name-indexed material table, loaded from TOML.
#[derive(Debug, Clone, Default)]
pub struct MaterialDb {
    materials: BTreeMap<String, Material>,
}

impl MaterialDb {
    pub fn builtin() -> Self {
        Self::from_toml_str(DEFAULT_MATERIALS_TOML).expect("shipped material table is valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: DbFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let mut materials = BTreeMap::new();
        for entry in file.material {
            let dispersion = match (entry.sellmeier, entry.index) {
                (Some(t), None) => Dispersion::Sellmeier(t),
                (None, Some(n)) => Dispersion::Constant(n),
                (None, None) => {
                    return Err(Error::Config(format!(
                        "material {}: needs `sellmeier` or `index`",
                        entry.name
                    )))
                }
                (Some(_), Some(_)) => {
                    return Err(Error::Config(format!(
                        "material {}: `sellmeier` and `index` are exclusive",
                        entry.name
                    )))
                }
            };
            let m = Material {
                name: entry.name.clone(),
                dispersion,
                intrinsic_stress_mpa: entry.intrinsic_stress_mpa,
                valid_min_nm: entry.valid_min_nm.unwrap_or(BAND_MIN_NM),
                valid_max_nm: entry.valid_max_nm.unwrap_or(BAND_MAX_NM),
            };
            m.validate()?;
            if materials.insert(entry.name.clone(), m).is_some() {
                return Err(Error::Config(format!("duplicate material {}", entry.name)));
            }
        }
        Ok(MaterialDb { materials })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, name: &str) -> Result<&Material> {
        self.materials
            .get(name)
            .ok_or_else(|| Error::Config(format!("unknown material `{name}`")))
    }

    pub fn insert(&mut self, material: Material) {
        self.materials.insert(material.name.clone(), material);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.materials.keys().map(String::as_str)
    }

    pub fn into_materials(self) -> impl Iterator<Item = Material> {
        self.materials.into_values()
    }
}

/// Cesium constants used across the toolkit. Missing fields in a config
/// table take the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AtomData {
    pub d1_wavelength_nm: f64,
    pub d2_wavelength_nm: f64,
    /// D2 natural linewidth, rad/s.
    pub gamma_d2: f64,
    pub magic_blue_nm: f64,
    pub magic_red_nm: f64,
    /// Surface coefficient C4 in units of h x Hz x um^4.
    pub c4_hz_um4: f64,
    /// Effective wavelength of the surface interaction, nm.
    pub lambda_bar_nm: f64,
    /// Absorption oscillator strengths of the D1 and D2 lines.
    pub oscillator_strength_d1: f64,
    pub oscillator_strength_d2: f64,
}

impl Default for AtomData {
    fn default() -> Self {
        AtomData {
            d1_wavelength_nm: 894.593,
            d2_wavelength_nm: 852.347,
            gamma_d2: crate::units::mhz_to_angular(5.2),
            magic_blue_nm: 794.0,
            magic_red_nm: 935.0,
            c4_hz_um4: 267.0,
            lambda_bar_nm: 136.0,
            oscillator_strength_d1: 0.3449,
            oscillator_strength_d2: 0.7148,
        }
    }
}

impl AtomData {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.d1_wavelength_nm,
            self.d2_wavelength_nm,
            self.gamma_d2,
            self.magic_blue_nm,
            self.magic_red_nm,
            self.c4_hz_um4,
            self.lambda_bar_nm,
            self.oscillator_strength_d1,
            self.oscillator_strength_d2,
        ];
        if positive.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Config("atom data must be positive".into()));
        }
        if !(self.d2_wavelength_nm < self.d1_wavelength_nm) {
            return Err(Error::Config("expected D2 wavelength < D1 wavelength".into()));
        }
        if !(self.magic_blue_nm < self.d2_wavelength_nm && self.d2_wavelength_nm < self.magic_red_nm) {
            return Err(Error::Config("expected magic_blue < D2 < magic_red wavelengths".into()));
        }
        Ok(())
    }

    /// D2 transition angular frequency, rad/s.
    pub fn omega_d2(&self) -> f64 {
        2.0 * std::f64::consts::PI * C_LIGHT / (self.d2_wavelength_nm * 1e-9)
    }

    pub fn omega_d1(&self) -> f64 {
        2.0 * std::f64::consts::PI * C_LIGHT / (self.d1_wavelength_nm * 1e-9)
    }
}

/// Scalar ground-state polarizability (SI, C m^2 / V) of cesium.
///
/// Two Lorentz oscillators at the D1 and D2 lines, each contributing
/// `(e^2 f / m_e) / (w_j^2 - w^2)`, which keeps the counter-rotating term.
/// Core and higher-line contributions are omitted, so values near the
/// magic wavelengths sit a few percent below tabulated data.
/// Positive values mean an attractive light shift.
pub fn cs_ground_polarizability(atom: &AtomData, wavelength_nm: f64) -> Result<f64> {
    for (line, lam) in [("D1", atom.d1_wavelength_nm), ("D2", atom.d2_wavelength_nm)] {
        if (wavelength_nm - lam).abs() < 1.0 {
            return Err(Error::Singularity(format!(
                "{wavelength_nm} nm within 1 nm of the {line} line"
            )));
        }
    }
    let omega = 2.0 * std::f64::consts::PI * C_LIGHT / (wavelength_nm * 1e-9);
    let pref = ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / ELECTRON_MASS;
    let term = |f: f64, w0: f64| pref * f / (w0 * w0 - omega * omega);
    Ok(term(atom.oscillator_strength_d1, atom.omega_d1()) + term(atom.oscillator_strength_d2, atom.omega_d2()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_is_exactly_one() {
        let db = MaterialDb::builtin();
        assert_eq!(db.get("vacuum").unwrap().refractive_index(894.0).unwrap(), 1.0);
    }

    #[test]
    fn out_of_band_is_range_error() {
        let db = MaterialDb::builtin();
        let sin = db.get("Si3N4").unwrap();
        assert!(matches!(sin.refractive_index(1550.0), Err(Error::OutOfRange { .. })));
        assert!(matches!(sin.refractive_index(599.0), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn pole_inside_band_rejected() {
        let err = Material::sellmeier("bad", vec![[1.0, 0.81]]).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn db_rejects_unknown_and_duplicates() {
        let db = MaterialDb::builtin();
        assert!(db.get("unobtainium").is_err());
        let dup = "[[material]]\nname='a'\nindex=1.5\n[[material]]\nname='a'\nindex=1.6\n";
        assert!(MaterialDb::from_toml_str(dup).is_err());
    }

    #[test]
    fn polarizability_signs() {
        let atom = AtomData::default();
        assert!(cs_ground_polarizability(&atom, 935.0).unwrap() > 0.0);
        assert!(cs_ground_polarizability(&atom, 794.0).unwrap() < 0.0);
    }

    #[test]
    fn polarizability_pole_is_error() {
        let atom = AtomData::default();
        assert!(matches!(
            cs_ground_polarizability(&atom, 852.5),
            Err(Error::Singularity(_))
        ));
        assert!(matches!(
            cs_ground_polarizability(&atom, 894.0),
            Err(Error::Singularity(_))
        ));
    }

    #[test]
    fn default_atom_data_valid() {
        AtomData::default().validate().unwrap();
        let bad = AtomData {
            magic_red_nm: 800.0,
            ..AtomData::default()
        };
        assert!(bad.validate().is_err());
    }
}
