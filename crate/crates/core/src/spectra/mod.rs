//! Bus-waveguide transmission through the ring, with and without an atom.
//!
//! Detunings in [`TransmissionSpectrum`] are ordinary frequencies in GHz;
//! the model functions take angular rates and angular detunings so they
//! mix directly with [`CavityRates`].

mod fit;

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::materials::AtomData;
use crate::modesolver::ModeSolution;
use crate::resonator::{coupling_strength, mode_volume, CavityRates, RingSpec};
use crate::units::{ghz_to_angular, wavelength_nm_to_thz};

pub use fit::{fit_spectrum, fit_spectrum_with, CouplingRegime, FitBranch, FitOptions, SpectrumFit};

/// Sampled `(detuning, transmission)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionSpectrum {
    pub detuning_ghz: Vec<f64>,
    pub transmission: Vec<f64>,
    /// Per-point noise level, if known.
    pub sigma: Option<Vec<f64>>,
}

/// Slack allowed outside `[0, 1]` for noisy measured transmission.
const TRANSMISSION_SLACK: f64 = 0.2;

impl TransmissionSpectrum {
    pub fn new(detuning_ghz: Vec<f64>, transmission: Vec<f64>) -> Result<Self> {
        let s = TransmissionSpectrum {
            detuning_ghz,
            transmission,
            sigma: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_sigma(mut self, sigma: Vec<f64>) -> Result<Self> {
        self.sigma = Some(sigma);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.detuning_ghz.len() != self.transmission.len() {
            return Err(Error::Config("detuning and transmission lengths differ".into()));
        }
        if let Some(s) = &self.sigma {
            if s.len() != self.transmission.len() || s.iter().any(|v| !(*v > 0.0)) {
                return Err(Error::Config("sigma must be positive, one per sample".into()));
            }
        }
        if self.detuning_ghz.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("detunings must be strictly increasing".into()));
        }
        if let Some(t) = self
            .transmission
            .iter()
            .find(|t| !(**t >= -TRANSMISSION_SLACK && **t <= 1.0 + TRANSMISSION_SLACK))
        {
            return Err(Error::Config(format!("transmission sample {t} far outside [0, 1]")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.detuning_ghz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detuning_ghz.is_empty()
    }

    /// Sample `model` at evenly spaced detunings over `[lo, hi]` GHz.
    pub fn sample(lo_ghz: f64, hi_ghz: f64, points: usize, mut model: impl FnMut(f64) -> f64) -> Result<Self> {
        if points < 2 || !(hi_ghz > lo_ghz) {
            return Err(Error::Config("need at least two points over a non-empty range".into()));
        }
        let d: Vec<f64> = (0..points)
            .map(|k| lo_ghz + (hi_ghz - lo_ghz) * k as f64 / (points - 1) as f64)
            .collect();
        let t = d.iter().map(|&x| model(x)).collect();
        Self::new(d, t)
    }

    /// CSV `detuning_ghz,transmission[,sigma]`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        match &self.sigma {
            None => {
                writeln!(out, "detuning_ghz,transmission")?;
                for (d, t) in self.detuning_ghz.iter().zip(&self.transmission) {
                    writeln!(out, "{d:.9e},{t:.9e}")?;
                }
            }
            Some(s) => {
                writeln!(out, "detuning_ghz,transmission,sigma")?;
                for ((d, t), e) in self.detuning_ghz.iter().zip(&self.transmission).zip(s) {
                    writeln!(out, "{d:.9e},{t:.9e},{e:.9e}")?;
                }
            }
        }
        Ok(())
    }

    /// Reads two- or three-column CSV; a non-numeric first line is taken
    /// as a header.
    pub fn read_csv(text: &str) -> Result<Self> {
        let (mut d, mut t, mut s) = (Vec::new(), Vec::new(), Vec::new());
        let mut columns = None;
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
            let v = match parsed {
                Ok(v) => v,
                Err(_) if d.is_empty() && columns.is_none() => {
                    columns = Some(fields.len());
                    continue;
                }
                Err(e) => return Err(Error::Parse(format!("line {}: {e}", n + 1))),
            };
            if !(v.len() == 2 || v.len() == 3) || columns.is_some_and(|c| c != v.len()) {
                return Err(Error::Parse(format!(
                    "line {}: expected 2 or 3 consistent columns",
                    n + 1
                )));
            }
            columns = Some(v.len());
            d.push(v[0]);
            t.push(v[1]);
            if v.len() == 3 {
                s.push(v[2]);
            }
        }
        let spectrum = Self::new(d, t).map_err(|e| Error::Parse(e.to_string()))?;
        if s.is_empty() {
            Ok(spectrum)
        } else {
            spectrum.with_sigma(s).map_err(|e| Error::Parse(e.to_string()))
        }
    }
}

/// `T = |(i delta + (kappa_i - kappa_c)/2) / (i delta + kappa/2)|^2` with
/// the detuning in GHz.
pub fn empty_ring_transmission(rates: &CavityRates, detuning_ghz: f64) -> Result<f64> {
    if !(rates.kappa() > 0.0) {
        return Err(Error::Undefined("transmission of a lossless, uncoupled ring".into()));
    }
    let d = ghz_to_angular(detuning_ghz);
    let num = Complex64::new((rates.kappa_i - rates.kappa_c) / 2.0, d);
    let den = Complex64::new(rates.kappa() / 2.0, d);
    Ok((num / den).norm_sqr())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomCavityParams {
    /// Single-photon coupling, rad/s.
    pub g: f64,
    /// Atomic decay rate, rad/s.
    pub gamma: f64,
    pub rates: CavityRates,
    /// Probe detuning from the atomic (and cavity) resonance, rad/s.
    pub detuning: f64,
}

impl AtomCavityParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.g >= 0.0 && self.gamma >= 0.0) {
            return Err(Error::Config("g and gamma must be non-negative".into()));
        }
        if !(self.rates.kappa() > 0.0 || self.gamma > 0.0) {
            return Err(Error::Undefined("no loss channel".into()));
        }
        Ok(())
    }
}

/// Weak-drive transmission with one atom:
/// `T = |(g^2 + (i d + G/2)(i d + (ki - kc)/2)) / (g^2 + (i d + G/2)(i d + k/2))|^2`.
pub fn atom_transmission(p: &AtomCavityParams) -> Result<f64> {
    p.validate()?;
    let id = Complex64::new(0.0, p.detuning);
    let g2 = p.g * p.g;
    let atom = id + p.gamma / 2.0;
    let num = g2 + atom * (id + (p.rates.kappa_i - p.rates.kappa_c) / 2.0);
    let den = g2 + atom * (id + p.rates.kappa() / 2.0);
    if den.norm() == 0.0 {
        return Err(Error::Undefined("transmission denominator vanishes".into()));
    }
    Ok((num / den).norm_sqr())
}

/// First-order estimate `1 - kappa Gamma / (2 g^2)` of the resonant
/// transmission at critical coupling.
pub fn transparency_estimate(g: f64, gamma: f64, kappa: f64) -> f64 {
    1.0 - kappa * gamma / (2.0 * g * g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransparencyPoint {
    pub z_nm: f64,
    pub mode_volume_um3: f64,
    /// rad/s
    pub g: f64,
    pub t0: f64,
}

/// Resonant transmission against atom height above the surface.
pub fn transparency_vs_position(
    mode: &ModeSolution,
    ring: &RingSpec,
    atom: &AtomData,
    rates: &CavityRates,
    heights_nm: &[f64],
) -> Result<Vec<TransparencyPoint>> {
    let f = wavelength_nm_to_thz(atom.d2_wavelength_nm);
    heights_nm
        .iter()
        .map(|&z| {
            let vm = mode_volume(mode, ring, z)?;
            let g = coupling_strength(vm, atom, f)?;
            let t0 = atom_transmission(&AtomCavityParams {
                g,
                gamma: atom.gamma_d2,
                rates: *rates,
                detuning: 0.0,
            })?;
            Ok(TransparencyPoint {
                z_nm: z,
                mode_volume_um3: vm,
                g,
                t0,
            })
        })
        .collect()
}
