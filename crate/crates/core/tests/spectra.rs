use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use ringqed::modesolver::{solve_mode, ModeKind};
use ringqed::resonator::CavityRates;
use ringqed::spectra::{
    atom_transmission, empty_ring_transmission, fit_spectrum, transparency_estimate, transparency_vs_position,
    AtomCavityParams, CouplingRegime, TransmissionSpectrum,
};
use ringqed::units::{angular_to_ghz, ghz_to_angular, mhz_to_angular};
use ringqed::ProjectConfig;

const F_894: f64 = 335.1;

fn rates(kc: f64, ki: f64) -> CavityRates {
    CavityRates::new(ghz_to_angular(kc), ghz_to_angular(ki), F_894).unwrap()
}

fn noisy(r: &CavityRates, sigma: f64, seed: u64) -> TransmissionSpectrum {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = Normal::new(0.0, sigma).unwrap();
    TransmissionSpectrum::sample(-20.0, 20.0, 401, |d| {
        empty_ring_transmission(r, d).unwrap() + n.sample(&mut rng)
    })
    .unwrap()
}

fn t0(g_mhz: f64, kc: f64, ki: f64) -> f64 {
    atom_transmission(&AtomCavityParams {
        g: mhz_to_angular(g_mhz),
        gamma: mhz_to_angular(5.2),
        rates: rates(kc, ki),
        detuning: 0.0,
    })
    .unwrap()
}

#[test]
fn lorentzian_half_width() {
    let r = rates(2.8, 2.8);
    assert!((empty_ring_transmission(&r, 2.8).unwrap() - 0.5).abs() < 1e-12);
    assert!(empty_ring_transmission(&r, 0.0).unwrap().abs() < 1e-15);
    assert!(empty_ring_transmission(&r, 1e6).unwrap() > 1.0 - 1e-10);
}

#[test]
fn critical_coupling_round_trip_noiseless() {
    let s = TransmissionSpectrum::sample(-20.0, 20.0, 401, |d| {
        empty_ring_transmission(&rates(2.8, 2.8), d).unwrap()
    })
    .unwrap();
    let f = fit_spectrum(&s).unwrap();
    for b in &f.branches {
        assert!((angular_to_ghz(b.kappa_c) / 2.8 - 1.0).abs() < 1e-3);
        assert!((angular_to_ghz(b.kappa_i) / 2.8 - 1.0).abs() < 1e-3);
    }
}

#[test]
fn one_percent_noise_monte_carlo() {
    // Away from critical coupling both rates are identifiable; at critical
    // coupling only the total is (the split enters through (ki - kc)^2).
    let r = rates(1.0, 2.8);
    for seed in 0..100 {
        let f = fit_spectrum(&noisy(&r, 0.01, seed)).unwrap();
        let b = f.branch(CouplingRegime::Under);
        assert!(
            (angular_to_ghz(b.kappa_c) / 1.0 - 1.0).abs() < 0.02,
            "seed {seed}: {b:?}"
        );
        assert!(
            (angular_to_ghz(b.kappa_i) / 2.8 - 1.0).abs() < 0.02,
            "seed {seed}: {b:?}"
        );
    }
    let r = rates(2.8, 2.8);
    for seed in 0..100 {
        let f = fit_spectrum(&noisy(&r, 0.01, 1000 + seed)).unwrap();
        assert!((angular_to_ghz(f.kappa) / 5.6 - 1.0).abs() < 0.02, "seed {seed}");
    }
}

#[test]
fn residual_vanishes_with_noise() {
    let r = rates(1.7, 2.9);
    let res: Vec<f64> = [1e-2_f64, 1e-3, 1e-4, 0.0]
        .iter()
        .map(|&s| fit_spectrum(&noisy(&r, s.max(1e-300), 7)).unwrap().residual_rms)
        .collect();
    assert!(res.windows(2).all(|w| w[1] < w[0]), "{res:?}");
    assert!(res[3] < 1e-9);
}

#[test]
fn digitized_dip_gives_measured_linewidth() {
    // 3% resonant dip with a 5.6 GHz linewidth, coarsely sampled and
    // quantized as if read off a plot
    let split = 0.03_f64.sqrt() * 5.6;
    let r = rates((5.6 - split) / 2.0, (5.6 + split) / 2.0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = Normal::new(0.0, 0.01).unwrap();
    let s = TransmissionSpectrum::sample(-15.0, 15.0, 61, |d| {
        let t = empty_ring_transmission(&r, d).unwrap() + n.sample(&mut rng);
        (t / 0.005).round() * 0.005
    })
    .unwrap();
    let f = fit_spectrum(&s).unwrap();
    assert!((angular_to_ghz(f.kappa) / 5.6 - 1.0).abs() < 0.10);
}

#[test]
fn atom_transparency_values() {
    let measured = t0(176.0, 2.8, 2.8);
    assert!((measured - 0.66).abs() < 0.03, "{measured}");
    let improved = t0(176.0, 1.0, 1.0);
    assert!((improved - 0.85).abs() < 0.02, "{improved}");
    // first-order estimate falls well short of the exact value
    let approx = transparency_estimate(mhz_to_angular(176.0), mhz_to_angular(5.2), ghz_to_angular(5.6));
    assert!((approx - 0.53).abs() < 0.01, "{approx}");
    assert!(measured - approx > 0.1);
}

#[test]
fn atom_limits() {
    let r = rates(2.8, 2.8);
    for g in [0.0, 50.0, 176.0, 500.0] {
        let p = |d_ghz: f64| AtomCavityParams {
            g: mhz_to_angular(g),
            gamma: mhz_to_angular(5.2),
            rates: r,
            detuning: ghz_to_angular(d_ghz),
        };
        assert!(atom_transmission(&p(1e5)).unwrap() > 1.0 - 1e-6);
        if g > 0.0 {
            assert!(atom_transmission(&p(0.0)).unwrap() > empty_ring_transmission(&r, 0.0).unwrap());
        }
    }
}

#[test]
fn transparency_falls_with_height() {
    let c = ProjectConfig::reference();
    let ring = c.ring_spec(None).unwrap();
    let m = solve_mode(
        &ring.cross_section,
        c.atom.d2_wavelength_nm,
        Some(ring.radius_um),
        ModeKind::FundamentalTm,
    )
    .unwrap();
    let r = c.cavity_rates().unwrap();
    let heights: Vec<f64> = (0..=25).map(|k| 50.0 + 10.0 * k as f64).collect();
    let pts = transparency_vs_position(&m, &ring, &c.atom, &r, &heights).unwrap();
    assert!(pts.windows(2).all(|w| w[1].t0 < w[0].t0));
    let far = transparency_vs_position(&m, &ring, &c.atom, &r, &[1400.0]).unwrap();
    let empty = empty_ring_transmission(&r, 0.0).unwrap();
    assert!((far[0].t0 - empty).abs() < 1e-3, "{}", far[0].t0);
}

#[test]
fn spectrum_csv_round_trip() {
    let s = noisy(&rates(1.0, 2.8), 0.01, 3).with_sigma(vec![0.01; 401]).unwrap();
    let mut buf = Vec::new();
    s.write_csv(&mut buf).unwrap();
    let back = TransmissionSpectrum::read_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
    assert_eq!(back.len(), s.len());
    for (a, b) in back.transmission.iter().zip(&s.transmission) {
        assert!((a - b).abs() <= 1e-9 * b.abs().max(1e-3));
    }
}
