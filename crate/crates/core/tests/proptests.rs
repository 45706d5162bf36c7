use num_complex::Complex64;
use proptest::prelude::*;

use ringqed::coupler::{kappa_c_from_indices, t_res_from, PulleySpec};
use ringqed::membrane::{resulting_stress, stack_response, LayerStack, StackLayer, StressWindow};
use ringqed::modesolver::{CrossSection, Grid};
use ringqed::resonator::{cooperativity, kappa_to_q, q_to_kappa, CavityRates, RingSpec};
use ringqed::spectra::{atom_transmission, empty_ring_transmission, AtomCavityParams};
use ringqed::trap::{analyze_trap_within, PotentialMap};
use ringqed::units::{ghz_to_angular, mhz_to_angular};
use ringqed::Material;

fn ring_and_pulley(cl: f64) -> (RingSpec, PulleySpec) {
    let xs = CrossSection::slab(Material::constant("core", 2.0), 380.0, Material::vacuum(), 20.0).unwrap();
    let ring = RingSpec::new(15.0, 0.0, xs).unwrap();
    let p = PulleySpec::concentric(&ring, 0.25, 0.55, cl).unwrap();
    (ring, p)
}

/// Gaussian dip above a flat floor on a fully accessible 41 x 41 grid.
fn well(depth: f64, cx: f64, cz: f64) -> PotentialMap {
    let grid = Grid {
        nx: 41,
        nz: 41,
        pitch_um: 0.01,
        x_origin_um: -0.205,
        z_origin_um: 0.0,
    };
    PotentialMap::from_fn(grid, vec![true; grid.len()], |x, z| {
        let r2 = (x - cx).powi(2) + (z - cz).powi(2);
        -depth * (-r2 / 0.006).exp() + 3.0 * z
    })
    .unwrap()
}

fn layers() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((1.0..3.5f64, 0.01..1.5f64), 1..6)
}

proptest! {
    #[test]
    fn resonant_transmission_is_bounded_and_symmetric(kc in 0.0..1e11f64, ki in 1e6..1e11f64) {
        let t = t_res_from(kc, ki).unwrap();
        prop_assert!((0.0..=1.0).contains(&t));
        prop_assert!((t - t_res_from(ki, kc).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn empty_ring_transmission_is_bounded(kc in 0.1..10.0f64, ki in 0.1..10.0f64, d in -50.0..50.0f64) {
        let r = CavityRates::new(ghz_to_angular(kc), ghz_to_angular(ki), 351.7).unwrap();
        let t = empty_ring_transmission(&r, d).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&t));
    }

    #[test]
    fn coupling_rate_is_quadratic_and_phase_blind(
        mag in 1e3..1e7f64,
        phase in -3.2..3.2f64,
        scale in 0.1..10.0f64,
        n_bus in 1.5..1.9f64,
        cl in 0.1..6.0f64,
    ) {
        let (ring, p) = ring_and_pulley(cl);
        let s = Complex64::from_polar(mag, 0.3);
        let k = |s: Complex64| kappa_c_from_indices(s, 1.72, n_bus, &p, &ring, 852.0);
        let base = k(s);
        prop_assert!(base >= 0.0);
        prop_assert!((k(s * scale) - scale * scale * base).abs() <= 1e-10 * scale * scale * base.max(1e-300));
        prop_assert!((k(s * Complex64::from_polar(1.0, phase)) - base).abs() <= 1e-10 * base.max(1e-300));
    }

    #[test]
    fn atom_transmission_is_bounded(
        g in 0.0..500.0f64,
        kc in 0.1..10.0f64,
        ki in 0.1..10.0f64,
        d in -20.0..20.0f64,
    ) {
        let p = AtomCavityParams {
            g: mhz_to_angular(g),
            gamma: mhz_to_angular(5.2),
            rates: CavityRates::new(ghz_to_angular(kc), ghz_to_angular(ki), 351.7).unwrap(),
            detuning: ghz_to_angular(d),
        };
        let t = atom_transmission(&p).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&t), "{}", t);
    }

    #[test]
    fn q_and_kappa_are_inverse(q in 1e3..1e9f64, f in 300.0..400.0f64) {
        let back = kappa_to_q(q_to_kappa(q, f).unwrap(), f).unwrap();
        prop_assert!((back / q - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cooperativity_scales_with_q_over_volume(q in 1e3..1e8f64, v in 1.0..1e4f64, s in 0.1..10.0f64) {
        let c = cooperativity(q, v, 852.0);
        prop_assert!((cooperativity(s * q, v, 852.0) / (s * c) - 1.0).abs() < 1e-12);
        prop_assert!((cooperativity(q, s * v, 852.0) * s / c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stress_is_linear_in_each_layer(
        a in 0.05..3.0f64,
        b in 0.05..3.0f64,
        sa in -1000.0..1000.0f64,
        sb in -1000.0..1000.0f64,
        ds in -500.0..500.0f64,
    ) {
        let w = StressWindow::default();
        let st = |sa: f64| {
            let s = LayerStack::new(vec![
                StackLayer::new(Material::constant("a", 1.45), a).with_stress(sa),
                StackLayer::new(Material::constant("b", 2.0), b).with_stress(sb),
            ]).unwrap();
            resulting_stress(&s, &w).unwrap().stress_mpa
        };
        prop_assert!((st(sa + ds) - st(sa) - ds * a / (a + b)).abs() < 1e-9);
    }

    #[test]
    fn lossless_stack_conserves_energy(ls in layers(), lam in 600.0..1100.0f64) {
        let stack = LayerStack::new(
            ls.iter().enumerate().map(|(k, &(n, d))| StackLayer::new(Material::constant(format!("l{k}"), n), d)).collect(),
        ).unwrap();
        let s = stack_response(&stack, lam).unwrap();
        prop_assert!((s.reflectance() + s.transmittance() - 1.0).abs() < 1e-9);
        let rev = stack_response(&stack.reversed(), lam).unwrap();
        prop_assert!((s.reflectance() - rev.reflectance()).abs() < 1e-9);
    }

    #[test]
    fn trap_analysis_ignores_a_constant_offset(
        depth in 2.0..50.0f64,
        cx in -0.05..0.05f64,
        cz in 0.12..0.28f64,
        offset in -1e3..1e3f64,
        scale in 0.2..5.0f64,
    ) {
        let map = well(depth, cx, cz);
        let a = analyze_trap_within(&map, 100.0).unwrap();
        let shifted = PotentialMap {
            values_uk: map.values_uk.iter().map(|v| v + offset).collect(),
            ..map.clone()
        };
        let b = analyze_trap_within(&shifted, 100.0).unwrap();
        prop_assert!((a.z_t_nm - b.z_t_nm).abs() < 1e-6);
        prop_assert_eq!(a.centre.x_nm, b.centre.x_nm);
        prop_assert!((a.depth_uk - b.depth_uk).abs() < 1e-9 * (1.0 + offset.abs()));

        let c = analyze_trap_within(&map.scaled(scale), 100.0).unwrap();
        prop_assert!((c.z_t_nm - a.z_t_nm).abs() < 1e-6);
        prop_assert!((c.depth_uk / (scale * a.depth_uk) - 1.0).abs() < 1e-9);
    }
}
