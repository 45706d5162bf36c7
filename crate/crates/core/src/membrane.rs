//! Suspended SiO2/Si3N4 membrane: normal-incidence reflectance, the
//! standing-wave micro-trap above it, and the thickness-weighted stress
//! that decides whether the released film survives.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::materials::Material;

/// Below this `|r|` the standing wave is too weak to call a lattice.
pub const WEAK_REFLECTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackLayer {
    pub material: Material,
    pub thickness_um: f64,
    /// Overrides the material's intrinsic stress, MPa.
    #[serde(default)]
    pub stress_mpa: Option<f64>,
}

impl StackLayer {
    pub fn new(material: Material, thickness_um: f64) -> Self {
        StackLayer {
            material,
            thickness_um,
            stress_mpa: None,
        }
    }

    pub fn with_stress(mut self, stress_mpa: f64) -> Self {
        self.stress_mpa = Some(stress_mpa);
        self
    }

    pub fn stress(&self) -> Option<f64> {
        self.stress_mpa.or(self.material.intrinsic_stress_mpa)
    }
}

/// Layers listed top (atom side) to bottom, vacuum on both sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerStack {
    pub layers: Vec<StackLayer>,
}

impl LayerStack {
    pub fn new(layers: Vec<StackLayer>) -> Result<Self> {
        let s = LayerStack { layers };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Config("layer stack is empty".into()));
        }
        if let Some(l) = self.layers.iter().find(|l| !(l.thickness_um > 0.0)) {
            return Err(Error::Config(format!(
                "layer {} has non-positive thickness {}",
                l.material.name, l.thickness_um
            )));
        }
        Ok(())
    }

    /// The same layers seen from below.
    pub fn reversed(&self) -> LayerStack {
        LayerStack {
            layers: self.layers.iter().rev().cloned().collect(),
        }
    }

    pub fn total_thickness_um(&self) -> f64 {
        self.layers.iter().map(|l| l.thickness_um).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StackResponse {
    /// Field reflection coefficient referenced to the top surface.
    pub r: Complex64,
    pub t: Complex64,
}

impl StackResponse {
    pub fn reflectance(&self) -> f64 {
        self.r.norm_sqr()
    }

    /// Vacuum on both sides, so no index ratio is needed.
    pub fn transmittance(&self) -> f64 {
        self.t.norm_sqr()
    }
}

/// Characteristic-matrix reflection and transmission at normal incidence.
/// Time dependence `exp(-i w t)`; a wave travelling down is `exp(-i k z)`.
pub fn stack_response(stack: &LayerStack, wavelength_nm: f64) -> Result<StackResponse> {
    stack.validate()?;
    let k0 = 2.0 * PI / (wavelength_nm * 1e-3);
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::i();
    let mut m = [[one, Complex64::default()], [Complex64::default(), one]];
    for layer in &stack.layers {
        let n = layer.material.refractive_index(wavelength_nm)?;
        let d = k0 * n * layer.thickness_um;
        let (c, s) = (Complex64::new(d.cos(), 0.0), d.sin());
        let layer_m = [[c, -i * s / n], [-i * n * s, c]];
        m = [
            [
                m[0][0] * layer_m[0][0] + m[0][1] * layer_m[1][0],
                m[0][0] * layer_m[0][1] + m[0][1] * layer_m[1][1],
            ],
            [
                m[1][0] * layer_m[0][0] + m[1][1] * layer_m[1][0],
                m[1][0] * layer_m[0][1] + m[1][1] * layer_m[1][1],
            ],
        ];
    }
    // vacuum admittance 1 above and below
    let b = m[0][0] + m[0][1];
    let c = m[1][0] + m[1][1];
    let den = b + c;
    Ok(StackResponse {
        r: (b - c) / den,
        t: 2.0 / den,
    })
}

pub fn stack_reflectance(stack: &LayerStack, wavelength_nm: f64) -> Result<Complex64> {
    stack_response(stack, wavelength_nm).map(|s| s.r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Microtrap {
    /// First intensity maximum at or above the surface, nm.
    pub z_t_nm: f64,
    /// Antinode spacing, nm (half a wavelength).
    pub spacing_nm: f64,
    pub r: Complex64,
    /// `I_max / I_min` of the standing wave.
    pub contrast: f64,
    /// Focusing NA, reported but not used by the plane-wave model.
    pub numerical_aperture: f64,
    /// Set when `|r| < WEAK_REFLECTION`.
    pub weak_lattice: bool,
}

impl Microtrap {
    /// The `k`-th antinode above the surface (`k = 0` is `z_t`).
    pub fn antinode_nm(&self, k: usize) -> f64 {
        self.z_t_nm + k as f64 * self.spacing_nm
    }
}

/// Standing wave `|exp(-i k z) + r exp(i k z)|^2` above the stack; its
/// maxima sit where `2 k z + arg r` is a multiple of `2 pi`.
pub fn microtrap_from_reflection(r: Complex64, wavelength_nm: f64, numerical_aperture: f64) -> Result<Microtrap> {
    if r.norm() == 0.0 {
        return Err(Error::Undefined("no reflection, no standing wave".into()));
    }
    let phase = r.arg().rem_euclid(2.0 * PI);
    let z_t = if phase == 0.0 {
        0.0
    } else {
        (2.0 * PI - phase) / (4.0 * PI) * wavelength_nm
    };
    let a = r.norm();
    Ok(Microtrap {
        z_t_nm: z_t,
        spacing_nm: wavelength_nm / 2.0,
        r,
        contrast: ((1.0 + a) / (1.0 - a)).powi(2),
        numerical_aperture,
        weak_lattice: a < WEAK_REFLECTION,
    })
}

pub fn microtrap_position(stack: &LayerStack, wavelength_nm: f64, numerical_aperture: f64) -> Result<Microtrap> {
    let r = stack_reflectance(stack, wavelength_nm)?;
    microtrap_from_reflection(r, wavelength_nm, numerical_aperture)
}

/// Resulting stress window for a release without buckling or cracking.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StressWindow {
    pub min_mpa: f64,
    pub max_mpa: f64,
}

impl Default for StressWindow {
    fn default() -> Self {
        StressWindow {
            min_mpa: 70.0,
            max_mpa: 180.0,
        }
    }
}

impl StressWindow {
    pub fn contains(&self, stress_mpa: f64) -> bool {
        stress_mpa >= self.min_mpa && stress_mpa <= self.max_mpa
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StressVerdict {
    pub stress_mpa: f64,
    pub stable: bool,
}

/// `sum(sigma_i h_i) / sum(h_i)`.
pub fn resulting_stress(stack: &LayerStack, window: &StressWindow) -> Result<StressVerdict> {
    stack.validate()?;
    let mut weighted = 0.0;
    for l in &stack.layers {
        let s = l
            .stress()
            .ok_or_else(|| Error::Config(format!("layer {} has no stress value", l.material.name)))?;
        weighted += s * l.thickness_um;
    }
    let stress_mpa = weighted / stack.total_thickness_um();
    Ok(StressVerdict {
        stress_mpa,
        stable: window.contains(stress_mpa),
    })
}

/// Two-layer membrane with an oxide on top of a nitride.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembraneDesign {
    pub top: Material,
    pub bottom: Material,
    pub top_stress_mpa: f64,
    pub bottom_stress_mpa: f64,
    pub wavelength_nm: f64,
    pub numerical_aperture: f64,
    pub window: StressWindow,
}

impl MembraneDesign {
    pub fn stack(&self, top_um: f64, bottom_um: f64) -> Result<LayerStack> {
        LayerStack::new(vec![
            StackLayer::new(self.top.clone(), top_um).with_stress(self.top_stress_mpa),
            StackLayer::new(self.bottom.clone(), bottom_um).with_stress(self.bottom_stress_mpa),
        ])
    }

    pub fn evaluate(&self, top_um: f64, bottom_um: f64) -> Result<ThicknessPoint> {
        let stack = self.stack(top_um, bottom_um)?;
        let trap = microtrap_position(&stack, self.wavelength_nm, self.numerical_aperture)?;
        let verdict = resulting_stress(&stack, &self.window)?;
        Ok(ThicknessPoint {
            top_um,
            bottom_um,
            z_t_nm: trap.z_t_nm,
            reflectance: trap.r.norm_sqr(),
            stress_mpa: verdict.stress_mpa,
            stable: verdict.stable,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThicknessPoint {
    pub top_um: f64,
    pub bottom_um: f64,
    pub z_t_nm: f64,
    pub reflectance: f64,
    pub stress_mpa: f64,
    pub stable: bool,
}

/// Evenly spaced samples of `[lo, hi]`, endpoints included.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Design map over oxide (top) and nitride (bottom) thicknesses, ordered
/// with the nitride index varying fastest.
pub fn thickness_map(design: &MembraneDesign, top_um: &[f64], bottom_um: &[f64]) -> Result<Vec<ThicknessPoint>> {
    if top_um.iter().chain(bottom_um).any(|h| !(*h > 0.0)) {
        return Err(Error::Config("thickness ranges must be positive".into()));
    }
    let pairs: Vec<(f64, f64)> = top_um
        .iter()
        .flat_map(|&a| bottom_um.iter().map(move |&b| (a, b)))
        .collect();
    pairs.par_iter().map(|&(a, b)| design.evaluate(a, b)).collect()
}

/// CSV `h_top_um,h_bottom_um,z_t_nm,reflectance,stress_mpa,stable`.
pub fn write_thickness_csv<W: Write>(points: &[ThicknessPoint], mut out: W) -> Result<()> {
    writeln!(out, "h_top_um,h_bottom_um,z_t_nm,reflectance,stress_mpa,stable")?;
    for p in points {
        writeln!(
            out,
            "{:.6},{:.6},{:.6},{:.9},{:.6},{}",
            p.top_um, p.bottom_um, p.z_t_nm, p.reflectance, p.stress_mpa, p.stable
        )?;
    }
    Ok(())
}

pub fn read_thickness_csv(text: &str) -> Result<Vec<ThicknessPoint>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = || Error::Parse(format!("line {}: malformed thickness row", n + 1));
        if f.len() != 6 {
            return Err(bad());
        }
        let num = |k: usize| f[k].parse::<f64>().map_err(|_| bad());
        out.push(ThicknessPoint {
            top_um: num(0)?,
            bottom_um: num(1)?,
            z_t_nm: num(2)?,
            reflectance: num(3)?,
            stress_mpa: num(4)?,
            stable: f[5].parse().map_err(|_| bad())?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn film(n: f64, d: f64) -> LayerStack {
        LayerStack::new(vec![StackLayer::new(Material::constant("film", n), d)]).unwrap()
    }

    #[test]
    fn index_one_stack_does_not_reflect() {
        let r = stack_reflectance(&film(1.0, 0.3), 935.0).unwrap();
        assert!(r.norm() < 1e-15);
    }

    #[test]
    fn single_film_matches_airy_sum() {
        // r = (r1 + r2 e^{2i d}) / (1 + r1 r2 e^{2i d})
        for (n, d) in [(2.0, 0.1169), (1.45, 0.3), (2.3, 0.05)] {
            let lam = 935.0;
            let r1 = (1.0 - n) / (1.0 + n);
            let r2 = -r1;
            let ph = Complex64::from_polar(1.0, 2.0 * 2.0 * PI / (lam * 1e-3) * n * d);
            let airy = (r1 + r2 * ph) / (1.0 + r1 * r2 * ph);
            let r = stack_reflectance(&film(n, d), lam).unwrap();
            assert!((r - airy).norm() < 1e-12, "{r} vs {airy}");
        }
    }

    #[test]
    fn mirror_phases() {
        let m = microtrap_from_reflection(Complex64::new(-1.0, 0.0), 935.0, 0.35).unwrap();
        assert!((m.z_t_nm - 935.0 / 4.0).abs() < 1e-9);
        let m = microtrap_from_reflection(Complex64::new(1.0, 0.0), 935.0, 0.35).unwrap();
        assert_eq!(m.z_t_nm, 0.0);
        let weak = microtrap_from_reflection(Complex64::new(0.01, 0.0), 935.0, 0.35).unwrap();
        assert!(weak.weak_lattice);
    }

    #[test]
    fn stress_average_and_window() {
        let m = Material::constant("x", 1.5);
        let s = LayerStack::new(vec![
            StackLayer::new(m.clone(), 1.0).with_stress(300.0),
            StackLayer::new(m, 3.0).with_stress(100.0),
        ])
        .unwrap();
        let v = resulting_stress(&s, &StressWindow::default()).unwrap();
        assert!((v.stress_mpa - 150.0).abs() < 1e-12);
        assert!(v.stable);
        assert!(!StressWindow::default().contains(-100.0));
        assert!(StressWindow::default().contains(180.0));
    }

    #[test]
    fn missing_stress_is_config_error() {
        let s = film(2.0, 0.2);
        assert!(matches!(
            resulting_stress(&s, &StressWindow::default()),
            Err(Error::Config(_))
        ));
    }
}
