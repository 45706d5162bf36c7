//! Least-squares extraction of `(kappa_c, kappa_i)` from an empty-ring
//! transmission dip.
//!
//! The model is fitted as `T = (u^2 + D/4) / (u^2 + kappa^2/4)` with
//! `u = f - f0` and `D = (kappa_i - kappa_c)^2`. Only `kappa` and `D` are
//! identifiable, so both coupling regimes are returned.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::TransmissionSpectrum;
use crate::error::{Error, Result};
use crate::resonator::CavityRates;
use crate::units::ghz_to_angular;

const MIN_POINTS: usize = 20;
const MIN_SPAN_LINEWIDTHS: f64 = 3.0;

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Relative cost change (or relative step) below which the fit is
    /// converged.
    pub tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 200,
            tolerance: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingRegime {
    /// `kappa_c <= kappa_i`
    Under,
    /// `kappa_c >= kappa_i`
    Over,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitBranch {
    pub regime: CouplingRegime,
    /// rad/s
    pub kappa_c: f64,
    pub kappa_i: f64,
    pub sigma_kappa_c: f64,
    pub sigma_kappa_i: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumFit {
    /// Total linewidth, rad/s.
    pub kappa: f64,
    /// Resonance offset of the input spectrum, GHz.
    pub offset_ghz: f64,
    /// `|kappa_i - kappa_c|`, rad/s.
    pub rate_difference: f64,
    pub branches: [FitBranch; 2],
    /// Covariance of `(kappa/2pi [GHz], D [GHz^2], offset [GHz])`.
    pub covariance: [[f64; 3]; 3],
    pub residual_rms: f64,
    pub iterations: usize,
}

impl SpectrumFit {
    pub fn branch(&self, regime: CouplingRegime) -> &FitBranch {
        self.branches
            .iter()
            .find(|b| b.regime == regime)
            .expect("both regimes present")
    }

    pub fn rates(&self, regime: CouplingRegime, resonance_thz: f64) -> Result<CavityRates> {
        let b = self.branch(regime);
        CavityRates::new(b.kappa_c, b.kappa_i, resonance_thz)
    }
}

pub fn fit_spectrum(spectrum: &TransmissionSpectrum) -> Result<SpectrumFit> {
    fit_spectrum_with(spectrum, &FitOptions::default())
}

pub fn fit_spectrum_with(spectrum: &TransmissionSpectrum, opts: &FitOptions) -> Result<SpectrumFit> {
    spectrum.validate()?;
    let n = spectrum.len();
    if n < MIN_POINTS {
        return Err(Error::Config(format!(
            "spectrum has {n} points, need at least {MIN_POINTS}"
        )));
    }
    let x = &spectrum.detuning_ghz;
    let y = &spectrum.transmission;
    let weights: Vec<f64> = match &spectrum.sigma {
        Some(s) => s.iter().map(|v| 1.0 / v).collect(),
        None => vec![1.0; n],
    };

    let guess = initial_guess(x, y);
    let noise = match &spectrum.sigma {
        Some(s) => s.iter().sum::<f64>() / n as f64,
        None => noise_estimate(y),
    };
    if guess.depth < 3.0 * noise {
        return Err(Error::InsufficientSignal {
            depth: guess.depth,
            sigma: noise,
        });
    }
    let span = x[n - 1] - x[0];
    if span < MIN_SPAN_LINEWIDTHS * guess.kappa {
        return Err(Error::Config(format!(
            "spectrum spans {:.2} linewidths, need at least {MIN_SPAN_LINEWIDTHS}",
            span / guess.kappa
        )));
    }

    let mut p = Vector3::new(guess.kappa, guess.d, guess.offset);
    let mut cost = cost_of(&p, x, y, &weights);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        iterations += 1;
        let (jtj, jtr) = normal_equations(&p, x, y, &weights);
        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj;
            for k in 0..3 {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-30);
            }
            let Some(step) = a.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = p + step;
            trial[1] = trial[1].max(0.0);
            trial[0] = trial[0].abs().max(1e-12);
            let c = cost_of(&trial, x, y, &weights);
            if c <= cost {
                let rel = (cost - c) / cost.max(f64::MIN_POSITIVE);
                let moved = (trial - p).norm() / p.norm().max(f64::MIN_POSITIVE);
                p = trial;
                cost = c;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                if rel < opts.tolerance || moved < opts.tolerance.sqrt() || c < 1e-28 {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // no downhill step at any damping: at a minimum to precision
            converged = true;
        }
        if converged {
            break;
        }
    }
    if !converged || !p.iter().all(|v| v.is_finite()) {
        return Err(Error::FitFailed {
            iterations,
            cost,
            reason: "Levenberg-Marquardt did not reach the cost tolerance".into(),
        });
    }

    let dof = (n - 3) as f64;
    let (jtj, _) = normal_equations(&p, x, y, &weights);
    let scale = if spectrum.sigma.is_some() { 1.0 } else { cost / dof };
    let cov = jtj
        .try_inverse()
        .map(|m| m * scale)
        .unwrap_or_else(|| Matrix3::from_element(f64::NAN));

    let (kappa, d) = (p[0], p[1]);
    let s = d.sqrt();
    // derivatives of sqrt(D); one-sided estimate at D = 0
    let (var_s, cov_ks) = if s > 0.0 {
        (cov[(1, 1)] / (4.0 * d), cov[(0, 1)] / (2.0 * s))
    } else {
        (cov[(1, 1)].abs().sqrt(), 0.0)
    };
    let var_k = cov[(0, 0)];
    let sigma_minus = (0.25 * (var_k + var_s - 2.0 * cov_ks)).max(0.0).sqrt();
    let sigma_plus = (0.25 * (var_k + var_s + 2.0 * cov_ks)).max(0.0).sqrt();
    let small = ghz_to_angular(0.5 * (kappa - s));
    let large = ghz_to_angular(0.5 * (kappa + s));
    let (sig_small, sig_large) = (ghz_to_angular(sigma_minus), ghz_to_angular(sigma_plus));
    let branches = [
        FitBranch {
            regime: CouplingRegime::Under,
            kappa_c: small,
            kappa_i: large,
            sigma_kappa_c: sig_small,
            sigma_kappa_i: sig_large,
        },
        FitBranch {
            regime: CouplingRegime::Over,
            kappa_c: large,
            kappa_i: small,
            sigma_kappa_c: sig_large,
            sigma_kappa_i: sig_small,
        },
    ];
    let mut covariance = [[0.0; 3]; 3];
    for (r, row) in covariance.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = cov[(r, c)];
        }
    }
    Ok(SpectrumFit {
        kappa: ghz_to_angular(kappa),
        offset_ghz: p[2],
        rate_difference: ghz_to_angular(s),
        branches,
        covariance,
        residual_rms: (cost / n as f64).sqrt(),
        iterations,
    })
}

struct Guess {
    kappa: f64,
    d: f64,
    offset: f64,
    depth: f64,
}

/// Dip position and depth from the minimum sample, linewidth from the
/// full width at half depth.
fn initial_guess(x: &[f64], y: &[f64]) -> Guess {
    let (imin, tmin) = y
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (k, &v)| if v < acc.1 { (k, v) } else { acc });
    let tmin = tmin.max(0.0);
    let half = 0.5 * (1.0 + tmin);
    let crossing = |range: &mut dyn Iterator<Item = usize>| -> Option<f64> {
        let mut prev = imin;
        for k in range {
            if y[k] >= half {
                let (x0, x1, y0, y1) = (x[prev], x[k], y[prev], y[k]);
                return Some(if y1 == y0 {
                    x1
                } else {
                    x0 + (half - y0) * (x1 - x0) / (y1 - y0)
                });
            }
            prev = k;
        }
        None
    };
    let left = crossing(&mut (0..imin).rev());
    let right = crossing(&mut (imin + 1..x.len()));
    let span = x[x.len() - 1] - x[0];
    let kappa = match (left, right) {
        (Some(l), Some(r)) => r - l,
        (Some(l), None) => 2.0 * (x[imin] - l),
        (None, Some(r)) => 2.0 * (r - x[imin]),
        (None, None) => span,
    }
    .max(1e-9);
    Guess {
        kappa,
        d: tmin * kappa * kappa,
        offset: x[imin],
        depth: 1.0 - tmin,
    }
}

/// Noise from second differences, robust to a smooth underlying signal.
fn noise_estimate(y: &[f64]) -> f64 {
    if y.len() < 3 {
        return 0.0;
    }
    let ss: f64 = y.windows(3).map(|w| (w[1] - 0.5 * (w[0] + w[2])).powi(2)).sum();
    (ss / (1.5 * (y.len() - 2) as f64)).sqrt()
}

fn model(p: &Vector3<f64>, x: f64) -> (f64, Vector3<f64>) {
    let (kappa, d, x0) = (p[0], p[1], p[2]);
    let u = x - x0;
    let a = u * u + d / 4.0;
    let b = u * u + kappa * kappa / 4.0;
    let t = a / b;
    let grad = Vector3::new(-a / (b * b) * kappa / 2.0, 1.0 / (4.0 * b), 2.0 * u * (a - b) / (b * b));
    (t, grad)
}

fn cost_of(p: &Vector3<f64>, x: &[f64], y: &[f64], w: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .zip(w)
        .map(|((&xi, &yi), &wi)| (wi * (yi - model(p, xi).0)).powi(2))
        .sum()
}

fn normal_equations(p: &Vector3<f64>, x: &[f64], y: &[f64], w: &[f64]) -> (Matrix3<f64>, Vector3<f64>) {
    let mut jtj = Matrix3::zeros();
    let mut jtr = Vector3::zeros();
    for ((&xi, &yi), &wi) in x.iter().zip(y).zip(w) {
        let (t, g) = model(p, xi);
        let gw = g * wi;
        jtj += gw * gw.transpose();
        jtr += gw * (wi * (yi - t));
    }
    (jtj, jtr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::empty_ring_transmission;

    fn synthetic(kc: f64, ki: f64, offset: f64) -> TransmissionSpectrum {
        let r = CavityRates::new(ghz_to_angular(kc), ghz_to_angular(ki), 335.1).unwrap();
        TransmissionSpectrum::sample(-20.0, 20.0, 201, |d| empty_ring_transmission(&r, d - offset).unwrap()).unwrap()
    }

    #[test]
    fn noiseless_round_trip_both_branches() {
        let fit = fit_spectrum(&synthetic(1.2, 2.8, 0.7)).unwrap();
        let under = fit.branch(CouplingRegime::Under);
        let over = fit.branch(CouplingRegime::Over);
        assert!((under.kappa_c / ghz_to_angular(1.2) - 1.0).abs() < 1e-6);
        assert!((under.kappa_i / ghz_to_angular(2.8) - 1.0).abs() < 1e-6);
        assert_eq!(over.kappa_c, under.kappa_i);
        assert!((fit.offset_ghz - 0.7).abs() < 1e-6);
        assert!(fit.residual_rms < 1e-9);
    }

    #[test]
    fn flat_spectrum_is_insufficient() {
        let s = TransmissionSpectrum::sample(-20.0, 20.0, 101, |d| 1.0 - 1e-4 * (d * 7.0).sin()).unwrap();
        assert!(matches!(fit_spectrum(&s), Err(Error::InsufficientSignal { .. })));
    }

    #[test]
    fn too_few_points_rejected() {
        let s = TransmissionSpectrum::sample(-20.0, 20.0, 10, |d| d * d / (d * d + 1.0)).unwrap();
        assert!(matches!(fit_spectrum(&s), Err(Error::Config(_))));
    }

    #[test]
    fn narrow_span_rejected() {
        let r = CavityRates::new(ghz_to_angular(2.8), ghz_to_angular(2.8), 335.1).unwrap();
        let s = TransmissionSpectrum::sample(-3.0, 3.0, 50, |d| empty_ring_transmission(&r, d).unwrap()).unwrap();
        assert!(matches!(fit_spectrum(&s), Err(Error::Config(_))));
    }
}
