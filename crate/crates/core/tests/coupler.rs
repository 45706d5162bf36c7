use num_complex::Complex64;
use ringqed::coupler::{
    design_scan, kappa_c_from_indices, overlap_integral, t_res_from, CouplerModel, DesignScan, PulleySpec,
};
use ringqed::modesolver::{solve_mode, ModeKind};
use ringqed::resonator::RingSpec;
use ringqed::units::ghz_to_angular;
use ringqed::ProjectConfig;

fn setup() -> (ProjectConfig, RingSpec, PulleySpec) {
    let c = ProjectConfig::reference();
    let ring = c.ring_spec(None).unwrap();
    let pulley = c.pulley_spec(&ring).unwrap();
    (c, ring, pulley)
}

#[test]
fn overlap_decays_with_gap() {
    let (_, ring, _) = setup();
    let ring_mode = solve_mode(
        &ring.cross_section,
        894.0,
        Some(ring.radius_um),
        ModeKind::FundamentalTm,
    )
    .unwrap();
    let bus_xs = ring.cross_section.with_core_width(550.0);
    let s_at = |gap: f64| {
        let p = PulleySpec::concentric(&ring, gap, 0.55, 2.9).unwrap();
        let bus = solve_mode(&bus_xs, 894.0, Some(p.bus_radius_um), ModeKind::FundamentalTm).unwrap();
        overlap_integral(&ring_mode, &bus, &p, &ring).unwrap().norm()
    };
    let gaps = [0.15, 0.2, 0.25, 0.3, 0.35];
    let s: Vec<f64> = gaps.iter().map(|&g| s_at(g)).collect();
    assert!(s.windows(2).all(|w| w[1] < w[0]), "{s:?}");
    // roughly exponential: the log-decrement per step stays within 30%
    let d: Vec<f64> = s.windows(2).map(|w| (w[0] / w[1]).ln()).collect();
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    assert!(d.iter().all(|x| (x / mean - 1.0).abs() < 0.3), "{d:?}");

    // bus entirely outside the solved ring field
    assert!(s_at(3.0) < 1e-6 * s[1]);
}

#[test]
fn nominal_overlap_and_rate_ratio() {
    let (_, ring, pulley) = setup();
    let m = CouplerModel::solve(&ring, &pulley, 894.0).unwrap();
    // frozen at 20 nm pitch
    assert!(
        (m.overlap.norm() / 6.79295e5 - 1.0).abs() < 1e-4,
        "{}",
        m.overlap.norm()
    );
    let ki = ghz_to_angular(2.8);
    let ratio = m.kappa_c(pulley.coupling_length_um) / ki;
    assert!(ratio > 1.0 / 1.6 && ratio < 1.6, "{ratio}");
    assert_eq!(m.kappa_c(0.0), 0.0);

    let cl_star = m.find_critical_cl(ki, 10.0).unwrap();
    assert!((cl_star - 2.9).abs() <= 1.0, "{cl_star}");
    assert_eq!(m.find_critical_cl(0.0, 10.0).unwrap(), 0.0);
}

#[test]
fn small_length_scaling_and_side_lobes() {
    let (_, ring, pulley) = setup();
    let m = CouplerModel::solve(&ring, &pulley, 894.0).unwrap();
    let (a, b) = (0.01, 0.02);
    let slope = (m.kappa_c(b) / m.kappa_c(a)).ln() / (b / a).ln();
    assert!((slope - 2.0).abs() < 1e-3, "{slope}");

    let null = m.first_null_um();
    let ki = ghz_to_angular(2.8);
    // non-decreasing up to the first sinc zero
    let cls: Vec<f64> = (0..=200).map(|k| null * k as f64 / 200.0).collect();
    let kc: Vec<f64> = cls.iter().map(|&cl| m.kappa_c(cl)).collect();
    let peak = kc.iter().cloned().fold(0.0, f64::max);
    let k_peak = kc.iter().position(|&v| v == peak).unwrap();
    assert!(kc[..=k_peak].windows(2).all(|w| w[1] >= w[0]));
    // T_res climbs back toward 1 near the sinc zero
    assert!(t_res_from(m.kappa_c(null), ki).unwrap() > 0.99);
    assert!(t_res_from(m.kappa_c(2.0 * null), ki).unwrap() > 0.99);
}

#[test]
fn phase_matched_rate_is_pure_overlap() {
    let (_, ring, pulley) = setup();
    let s = Complex64::new(3.0e5, -1.2e5);
    let n_ring = 1.72;
    let n_bus = n_ring * ring.radius_um / pulley.bus_radius_um;
    let kc = kappa_c_from_indices(s, n_ring, n_bus, &pulley, &ring, 894.0);
    let expected = (s * (pulley.coupling_length_um / ring.radius_um)).norm_sqr();
    assert!((kc / expected - 1.0).abs() < 1e-12);
}

#[test]
fn d1_and_d2_critical_regions_overlap() {
    let (c, ring, pulley) = setup();
    let ki = |nm: f64| {
        c.channels
            .iter()
            .find(|ch| ch.wavelength_nm == nm)
            .map(|ch| ghz_to_angular(ch.kappa_i_ghz))
            .unwrap()
    };
    let d1 = CouplerModel::solve(&ring, &pulley, 894.0).unwrap();
    let d2 = CouplerModel::solve(&ring, &pulley, 852.0).unwrap();
    let c1 = d1.find_critical_cl(ki(894.0), 10.0).unwrap();
    let c2 = d2.find_critical_cl(ki(852.0), 10.0).unwrap();
    assert!((c1 - c2).abs() < 0.75, "{c1} vs {c2}");
    let mid = 0.5 * (c1 + c2);
    assert!(t_res_from(d1.kappa_c(mid), ki(894.0)).unwrap() < 0.02);
    assert!(t_res_from(d2.kappa_c(mid), ki(852.0)).unwrap() < 0.02);
}

#[test]
fn design_scan_csv_round_trip_and_ordering() {
    let (c, ring, pulley) = setup();
    let channels = c.scan_channels();
    let scan = design_scan(&ring, &pulley, &channels, &[0.0, 1.0, 2.9, 4.0]).unwrap();
    assert_eq!(scan.rows.len(), 4 * channels.len());
    let t: Vec<f64> = [894.0, 852.0, 932.0, 795.0]
        .iter()
        .map(|&l| scan.t_res_at(l, 2.9).unwrap())
        .collect();
    assert!(t.windows(2).all(|w| w[0] <= w[1]), "{t:?}");
    assert!(scan.rows.iter().all(|r| (0.0..=1.0).contains(&r.t_res)));

    let mut buf = Vec::new();
    scan.write_csv(&mut buf).unwrap();
    let back = DesignScan::read_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
    assert_eq!(back.len(), scan.rows.len());
    for (a, b) in back.iter().zip(&scan.rows) {
        assert_eq!(
            (a.coupling_length_um, a.wavelength_nm),
            (b.coupling_length_um, b.wavelength_nm)
        );
        assert!((a.t_res - b.t_res).abs() <= 1e-9 * b.t_res.max(1e-300));
        assert!((a.kappa_c - b.kappa_c).abs() <= 1e-9 * b.kappa_c);
    }
}
