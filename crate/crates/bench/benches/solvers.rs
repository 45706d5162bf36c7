use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use ringqed::membrane::{linspace, thickness_map};
use ringqed::modesolver::{solve_mode, ModeKind};
use ringqed::spectra::{empty_ring_transmission, fit_spectrum, TransmissionSpectrum};
use ringqed::trap::{analyze_trap, total_potential, TrapModes};
use ringqed::units::ghz_to_angular;
use ringqed::{CavityRates, ProjectConfig};

fn mode_solve(c: &mut Criterion) {
    let config = ProjectConfig::reference();
    let ring = config.ring_spec(Some(40.0)).unwrap();
    let mut g = c.benchmark_group("modesolver");
    g.sample_size(10);
    g.bench_function("bent_tm_40nm", |b| {
        b.iter(|| {
            solve_mode(
                &ring.cross_section,
                852.0,
                Some(ring.radius_um),
                ModeKind::FundamentalTm,
            )
            .unwrap()
        })
    });
    g.finish();
}

fn fit(c: &mut Criterion) {
    let r = CavityRates::new(ghz_to_angular(1.0), ghz_to_angular(2.8), 335.1).unwrap();
    let s = TransmissionSpectrum::sample(-20.0, 20.0, 401, |d| empty_ring_transmission(&r, d).unwrap()).unwrap();
    c.bench_function("fit_401_points", |b| b.iter(|| fit_spectrum(black_box(&s)).unwrap()));
}

fn trap(c: &mut Criterion) {
    let config = ProjectConfig::reference();
    let ring = config.ring_spec(None).unwrap();
    let pulley = config.pulley_spec(&ring).unwrap();
    let trap = config.trap_config(&ring, &pulley).unwrap();
    let modes = TrapModes::solve(&ring, 794.0, 935.0).unwrap();
    let p = total_potential(&trap, &modes, &ring, &config.atom).unwrap();
    c.bench_function("trap_total_potential", |b| {
        b.iter(|| total_potential(&trap, &modes, &ring, &config.atom).unwrap())
    });
    c.bench_function("trap_analysis", |b| {
        b.iter(|| analyze_trap(black_box(&p.total), ring.cross_section.core_width_nm).unwrap())
    });
}

fn membrane(c: &mut Criterion) {
    let d = ProjectConfig::reference().membrane_design().unwrap();
    let (top, bottom) = (linspace(1.0, 2.5, 61), linspace(0.2, 1.0, 33));
    c.bench_function("membrane_map_61x33", |b| {
        b.iter(|| thickness_map(&d, &top, &bottom).unwrap())
    });
}

criterion_group!(benches, mode_solve, fit, trap, membrane);
criterion_main!(benches);
