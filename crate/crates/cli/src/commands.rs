use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use ringqed::config::{loss_db, through_transmission, ProjectConfig};
use ringqed::coupler::{design_scan, t_res_from};
use ringqed::membrane::{thickness_map, write_thickness_csv};
use ringqed::modesolver::{group_index, solve_mode, ModeKind, ModeSolution};
use ringqed::resonator::{coupling_strength, mode_volume, resonance_ladder, FiguresOfMerit, FrequencyWindow, RingSpec};
use ringqed::spectra::{
    atom_transmission, empty_ring_transmission, fit_spectrum, transparency_vs_position, AtomCavityParams,
    CouplingRegime, TransmissionSpectrum,
};
use ringqed::trap::{analyze_trap, total_potential, tune_curve, TrapModes};
use ringqed::units::{angular_to_ghz, angular_to_mhz, mhz_to_angular, wavelength_nm_to_thz};
use ringqed::Error;

use crate::args::{Command, Cut, Polarization, Regime};
use crate::output::{Output, Table};
use crate::CliError;

pub struct Context {
    pub config: ProjectConfig,
    pub out: Output,
    pub grid_pitch: Option<f64>,
    pub seed: u64,
}

impl Context {
    fn ring(&self) -> Result<RingSpec, CliError> {
        Ok(self.config.ring_spec(self.grid_pitch)?)
    }

    /// Bent TM ring mode at the D2 line.
    fn d2_mode(&self, ring: &RingSpec) -> Result<ModeSolution, CliError> {
        Ok(solve_mode(
            &ring.cross_section,
            self.config.atom.d2_wavelength_nm,
            Some(ring.radius_um),
            ModeKind::FundamentalTm,
        )?)
    }
}

pub fn run(cmd: &Command, ctx: &Context) -> Result<(), CliError> {
    match cmd {
        Command::Mode {
            wavelength,
            straight,
            polarization,
        } => mode(ctx, *wavelength, *straight, *polarization),
        Command::Ring {
            wavelength,
            q,
            increments,
        } => ring(ctx, *wavelength, *q, increments),
        Command::CouplerScan => coupler_scan(ctx),
        Command::Fit {
            input,
            regime,
            wavelength,
        } => fit(ctx, input, *regime, *wavelength),
        Command::Spectrum { noise, g_mhz } => spectrum(ctx, *noise, *g_mhz),
        Command::Transparency => transparency(ctx),
        Command::Trap { cut } => trap(ctx, *cut),
        Command::Tune { total_power } => tune(ctx, *total_power),
        Command::Membrane => membrane(ctx),
        Command::Budget { ring_transmission } => budget(ctx, *ring_transmission),
    }
}

#[derive(Serialize)]
struct ModeReport {
    wavelength_nm: f64,
    bend_radius_um: Option<f64>,
    n_eff: f64,
    n_g: f64,
    polarization_fraction: f64,
    core_fraction: f64,
    grid_pitch_nm: f64,
}

fn mode(ctx: &Context, wavelength: f64, straight: bool, pol: Polarization) -> Result<(), CliError> {
    let ring = ctx.ring()?;
    let bend = (!straight).then_some(ring.radius_um);
    let kind = match pol {
        Polarization::Tm => ModeKind::FundamentalTm,
        Polarization::Te => ModeKind::FundamentalTe,
        Polarization::Any => ModeKind::Fundamental,
    };
    let xs = &ring.cross_section;
    let m = solve_mode(xs, wavelength, bend, kind)?;
    let n_g = group_index(xs, wavelength, bend, kind)?;
    let report = ModeReport {
        wavelength_nm: m.wavelength_nm,
        bend_radius_um: m.bend_radius_um,
        n_eff: m.n_eff,
        n_g,
        polarization_fraction: m.polarization_fraction,
        core_fraction: m.core_fraction,
        grid_pitch_nm: xs.grid_pitch_nm,
    };
    println!(
        "n_eff = {:.6}, n_g = {:.4}, polarization fraction = {:.3}",
        m.n_eff, n_g, m.polarization_fraction
    );
    ctx.out.json("mode", &report)?;
    ctx.out.native("mode_field", &m.field, |w| m.write_csv(w))?;
    Ok(())
}

fn ring(ctx: &Context, wavelength: Option<f64>, q: Option<f64>, increments: &[f64]) -> Result<(), CliError> {
    let ring = ctx.ring()?;
    let lam = wavelength.unwrap_or(ctx.config.atom.d2_wavelength_nm);
    let kind = ModeKind::FundamentalTm;
    let m = solve_mode(&ring.cross_section, lam, Some(ring.radius_um), kind)?;
    let n_g = group_index(&ring.cross_section, lam, Some(ring.radius_um), kind)?;
    let q = match q {
        Some(q) => q,
        None => ctx.config.cavity_rates()?.q_intrinsic(),
    };
    let fom = FiguresOfMerit::compute(&ring, &m, n_g, &ctx.config.atom, q, ctx.config.cavity.atom_height_nm)?;
    print!("{}", fom.to_key_value());
    ctx.out.json("ring", &fom)?;
    if !increments.is_empty() {
        let f = wavelength_nm_to_thz(lam);
        let window = FrequencyWindow {
            center_thz: f,
            half_width_thz: fom.fsr_thz,
        };
        let ladder = resonance_ladder(&ring, m.n_eff, increments, window)?;
        let mut t = Table::new(&[
            "length_increment_nm",
            "round_trip_um",
            "azimuthal_order",
            "frequency_thz",
        ]);
        for e in &ladder.entries {
            t.push(vec![
                e.length_increment_nm,
                e.round_trip_um,
                e.azimuthal_order as f64,
                e.frequency_thz,
            ]);
        }
        ctx.out.table("ladder", &t)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ScanSummary {
    coupling_length_um: f64,
    channels: Vec<ChannelSummary>,
}

#[derive(Serialize)]
struct ChannelSummary {
    wavelength_nm: f64,
    kappa_i_ghz: f64,
    kappa_c_ghz: f64,
    t_res: f64,
    best_cl_um: f64,
}

fn coupler_scan(ctx: &Context) -> Result<(), CliError> {
    let ring = ctx.ring()?;
    let pulley = ctx.config.pulley_spec(&ring)?;
    let channels = ctx.config.scan_channels();
    if channels.is_empty() {
        return Err(CliError::Input("no [[channels]] in the config".into()));
    }
    let mut cls = ctx.config.sweeps.coupling_length_um.values();
    let cl0 = pulley.coupling_length_um;
    if !cls.iter().any(|c| (c - cl0).abs() < 1e-9) {
        cls.push(cl0);
        cls.sort_by(f64::total_cmp);
    }
    let scan = design_scan(&ring, &pulley, &channels, &cls)?;
    let mut summary = ScanSummary {
        coupling_length_um: cl0,
        channels: Vec::new(),
    };
    for (ch, (_, best)) in channels.iter().zip(&scan.critical_cl_um) {
        let row = scan
            .rows
            .iter()
            .find(|r| r.wavelength_nm == ch.wavelength_nm && (r.coupling_length_um - cl0).abs() < 1e-9)
            .expect("configured length is on the grid");
        println!(
            "{:7.1} nm: T_res = {:.3} at CL = {cl0} um (kappa_c = {:.3} GHz, kappa_i = {:.3} GHz)",
            ch.wavelength_nm,
            row.t_res,
            angular_to_ghz(row.kappa_c),
            angular_to_ghz(ch.kappa_i)
        );
        summary.channels.push(ChannelSummary {
            wavelength_nm: ch.wavelength_nm,
            kappa_i_ghz: angular_to_ghz(ch.kappa_i),
            kappa_c_ghz: angular_to_ghz(row.kappa_c),
            t_res: row.t_res,
            best_cl_um: *best,
        });
    }
    ctx.out.native("coupler_scan", &scan, |w| scan.write_csv(w))?;
    ctx.out.json("coupler_summary", &summary)?;
    Ok(())
}

#[derive(Serialize)]
struct FitReport {
    chosen: CouplingRegime,
    kappa_ghz: f64,
    kappa_c_ghz: f64,
    kappa_i_ghz: f64,
    q_intrinsic: f64,
    q_loaded: f64,
    fit: ringqed::spectra::SpectrumFit,
}

fn fit(ctx: &Context, input: &std::path::Path, regime: Regime, wavelength: Option<f64>) -> Result<(), CliError> {
    let text = std::fs::read_to_string(input)?;
    let spectrum = TransmissionSpectrum::read_csv(&text)?;
    let f = fit_spectrum(&spectrum)?;
    let chosen = match regime {
        Regime::Under => CouplingRegime::Under,
        Regime::Over => CouplingRegime::Over,
    };
    let rates = f.rates(
        chosen,
        wavelength_nm_to_thz(wavelength.unwrap_or(ctx.config.atom.d2_wavelength_nm)),
    )?;
    let report = FitReport {
        chosen,
        kappa_ghz: angular_to_ghz(f.kappa),
        kappa_c_ghz: angular_to_ghz(rates.kappa_c),
        kappa_i_ghz: angular_to_ghz(rates.kappa_i),
        q_intrinsic: rates.q_intrinsic(),
        q_loaded: rates.q_loaded(),
        fit: f,
    };
    for b in &report.fit.branches {
        println!(
            "{:?}: kappa_c = {:.4} GHz, kappa_i = {:.4} GHz",
            b.regime,
            angular_to_ghz(b.kappa_c),
            angular_to_ghz(b.kappa_i)
        );
    }
    ctx.out.json("fit", &report)?;
    Ok(())
}

/// g (rad/s) at each height from the solved D2 mode.
fn couplings(ctx: &Context, heights: &[f64]) -> Result<Vec<f64>, CliError> {
    let ring = ctx.ring()?;
    let m = ctx.d2_mode(&ring)?;
    heights
        .iter()
        .map(|&z| {
            let vm = mode_volume(&m, &ring, z)?;
            let f = wavelength_nm_to_thz(ctx.config.atom.d2_wavelength_nm);
            Ok(coupling_strength(vm, &ctx.config.atom, f)?)
        })
        .collect()
}

fn spectrum(ctx: &Context, noise: f64, g_mhz: Option<f64>) -> Result<(), CliError> {
    let rates = ctx.config.cavity_rates()?;
    let sw = &ctx.config.sweeps;
    let det = sw.detuning_ghz.values();
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let dist = if noise > 0.0 {
        Some(Normal::new(0.0, noise).map_err(|e| CliError::Input(e.to_string()))?)
    } else {
        None
    };
    let mut t = Vec::with_capacity(det.len());
    for &d in &det {
        let clean = empty_ring_transmission(&rates, d)?;
        t.push(clean + dist.as_ref().map_or(0.0, |n| n.sample(&mut rng)));
    }
    let mut s = TransmissionSpectrum::new(det, t)?;
    if noise > 0.0 {
        let n = s.len();
        s = s.with_sigma(vec![noise; n])?;
    }
    ctx.out.native("spectrum_empty", &s, |w| s.write_csv(w))?;

    let heights = &sw.atom_heights_nm;
    let gs = match g_mhz {
        Some(g) => vec![mhz_to_angular(g); heights.len().max(1)],
        None => couplings(ctx, heights)?,
    };
    let mut cols = vec!["detuning_mhz".to_string()];
    match g_mhz {
        Some(g) => cols.push(format!("t_g{g}mhz")),
        None => cols.extend(heights.iter().map(|z| format!("t_z{z}nm"))),
    }
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut table = Table::new(&col_refs);
    let gs = &gs[..col_refs.len() - 1];
    for d in sw.atom_detuning_mhz.values() {
        let mut row = vec![d];
        for &g in gs {
            row.push(atom_transmission(&AtomCavityParams {
                g,
                gamma: ctx.config.atom.gamma_d2,
                rates,
                detuning: mhz_to_angular(d),
            })?);
        }
        table.push(row);
    }
    for (name, g) in col_refs[1..].iter().zip(gs) {
        println!("{name}: g = {:.1} MHz", angular_to_mhz(*g));
    }
    ctx.out.table("spectrum_atom", &table)?;
    Ok(())
}

fn transparency(ctx: &Context) -> Result<(), CliError> {
    let ring = ctx.ring()?;
    let m = ctx.d2_mode(&ring)?;
    let heights = ctx.config.sweeps.transparency_height_nm.values();
    let pts = transparency_vs_position(&m, &ring, &ctx.config.atom, &ctx.config.cavity_rates()?, &heights)?;
    let mut t = Table::new(&["z_nm", "mode_volume_um3", "g_mhz", "t0"]);
    for p in &pts {
        t.push(vec![p.z_nm, p.mode_volume_um3, angular_to_mhz(p.g), p.t0]);
    }
    if let Some(p) = pts
        .iter()
        .min_by(|a, b| (a.z_nm - 100.0).abs().total_cmp(&(b.z_nm - 100.0).abs()))
    {
        println!(
            "z = {} nm: V_m = {:.0} um^3, g = {:.1} MHz, T(0) = {:.3}",
            p.z_nm,
            p.mode_volume_um3,
            angular_to_mhz(p.g),
            p.t0
        );
    }
    ctx.out.table("transparency", &t)?;
    Ok(())
}

fn trap(ctx: &Context, cut: Option<Cut>) -> Result<(), CliError> {
    let ring = ctx.ring()?;
    let pulley = ctx.config.pulley_spec(&ring)?;
    let tc = ctx.config.trap_config(&ring, &pulley)?;
    let t = &ctx.config.trap;
    let modes = TrapModes::solve(&ring, t.blue_wavelength_nm, t.red_wavelength_nm)?;
    let pot = total_potential(&tc, &modes, &ring, &ctx.config.atom)?;
    for (stem, map) in [
        ("trap_total", &pot.total),
        ("trap_blue", &pot.blue),
        ("trap_red", &pot.red),
        ("trap_surface", &pot.surface),
    ] {
        ctx.out.native(stem, map, |w| map.write_csv(w))?;
    }
    #[derive(Serialize)]
    struct TrapOutput<'a> {
        config: &'a ringqed::trap::TrapConfig,
        lattice_period_nm: f64,
        blue_circulating: ringqed::trap::CirculatingPower,
        red_circulating: ringqed::trap::CirculatingPower,
        report: Option<ringqed::trap::TrapReport>,
        untrapped: Option<String>,
    }
    let (report, untrapped) = match analyze_trap(&pot.total, ring.cross_section.core_width_nm) {
        Ok(r) => (Some(r), None),
        Err(Error::Untrapped(why)) => (None, Some(why)),
        Err(e) => return Err(e.into()),
    };
    match &report {
        Some(r) => println!(
            "trap at z_t = {:.1} nm, depth = {:.1} uK (saddle at x = {:.0} nm, z = {:.0} nm)",
            r.z_t_nm, r.depth_uk, r.weakest_saddle.x_nm, r.weakest_saddle.z_nm
        ),
        None => println!("untrapped: {}", untrapped.as_deref().unwrap_or("")),
    }
    if let (Some(cut), Some(r)) = (cut, &report) {
        let (name, axis, pts) = match cut {
            Cut::Vertical => ("trap_cut_vertical", "z_nm", pot.total.vertical_cut(r.centre.x_nm)),
            Cut::Horizontal => ("trap_cut_horizontal", "x_nm", pot.total.horizontal_cut(r.centre.z_nm)),
        };
        let mut t = Table::new(&[axis, "u_uk"]);
        pts.into_iter().for_each(|(a, u)| t.push(vec![a, u]));
        ctx.out.table(name, &t)?;
    }
    ctx.out.json(
        "trap_report",
        &TrapOutput {
            config: &tc,
            lattice_period_nm: pot.lattice_period_nm,
            blue_circulating: pot.blue_circulating,
            red_circulating: pot.red_circulating,
            report,
            untrapped,
        },
    )?;
    Ok(())
}

fn tune(ctx: &Context, total_power: Option<f64>) -> Result<(), CliError> {
    let ring = ctx.ring()?;
    let pulley = ctx.config.pulley_spec(&ring)?;
    let tc = ctx.config.trap_config(&ring, &pulley)?;
    let t = &ctx.config.trap;
    let modes = TrapModes::solve(&ring, t.blue_wavelength_nm, t.red_wavelength_nm)?;
    let total = total_power.unwrap_or(t.total_power_mw());
    let ratios = ctx.config.sweeps.power_ratio.values();
    let curve = tune_curve(&tc, &modes, &ring, &ctx.config.atom, &ratios, total, 100.0)?;
    let mut table = Table::new(&[
        "ratio",
        "blue_power_mw",
        "red_power_mw",
        "z_t_nm",
        "depth_uk",
        "trapped",
    ]);
    for p in &curve.points {
        table.push(vec![
            p.ratio,
            p.blue_power_mw,
            p.red_power_mw,
            p.z_t_nm.unwrap_or(f64::NAN),
            p.depth_uk.unwrap_or(f64::NAN),
            if p.z_t_nm.is_some() { 1.0 } else { 0.0 },
        ]);
    }
    match curve.ratio_at_target {
        Some(r) => println!("P_r/P_b = {r:.4} puts the trap at z_t = {} nm", curve.target_z_nm),
        None => println!("no trapped ratio reaches z_t = {} nm", curve.target_z_nm),
    }
    ctx.out.table("tune", &table)?;
    ctx.out.json("tune_report", &curve)?;
    Ok(())
}

fn membrane(ctx: &Context) -> Result<(), CliError> {
    let design = ctx.config.membrane_design()?;
    let m = &ctx.config.membrane;
    let point = design.evaluate(m.top_thickness_um, m.bottom_thickness_um)?;
    let stack = design.stack(m.top_thickness_um, m.bottom_thickness_um)?;
    let trap = ringqed::membrane::microtrap_position(&stack, design.wavelength_nm, design.numerical_aperture)?;
    if trap.weak_lattice {
        println!("warning: |r| = {:.3} is below the lattice threshold", trap.r.norm());
    }
    println!(
        "design ({}, {}) um: z_t = {:.1} nm, R = {:.3}, stress = {:.1} MPa ({})",
        point.top_um,
        point.bottom_um,
        point.z_t_nm,
        point.reflectance,
        point.stress_mpa,
        if point.stable { "stable" } else { "unstable" }
    );
    #[derive(Serialize)]
    struct MembraneReport {
        design: ringqed::membrane::ThicknessPoint,
        microtrap: ringqed::membrane::Microtrap,
    }
    ctx.out.json(
        "membrane_report",
        &MembraneReport {
            design: point,
            microtrap: trap,
        },
    )?;
    let sw = &ctx.config.sweeps;
    let map = thickness_map(&design, &sw.membrane_top_um.values(), &sw.membrane_bottom_um.values())?;
    ctx.out.native("membrane_map", &map, |w| write_thickness_csv(&map, w))?;
    Ok(())
}

#[derive(Serialize)]
struct Budget {
    ring_transmission: f64,
    measured_facet: f64,
    simulated_facet: f64,
    measured_throughput: f64,
    simulated_throughput: f64,
    measured_loss_db: f64,
    simulated_loss_db: f64,
    critical_dip: Option<f64>,
}

fn budget(ctx: &Context, ring_transmission: f64) -> Result<(), CliError> {
    let b = &ctx.config.budget;
    let meas = through_transmission(
        b.facet_efficiency_measured,
        b.facet_efficiency_measured,
        ring_transmission,
    )?;
    let sim = through_transmission(
        b.facet_efficiency_simulated,
        b.facet_efficiency_simulated,
        ring_transmission,
    )?;
    let rates = ctx.config.cavity_rates()?;
    let report = Budget {
        ring_transmission,
        measured_facet: b.facet_efficiency_measured,
        simulated_facet: b.facet_efficiency_simulated,
        measured_throughput: meas,
        simulated_throughput: sim,
        measured_loss_db: loss_db(meas),
        simulated_loss_db: loss_db(sim),
        critical_dip: t_res_from(rates.kappa_c, rates.kappa_i).ok(),
    };
    println!(
        "throughput: {:.1}% measured facets ({:.2} dB), {:.1}% simulated facets ({:.2} dB)",
        100.0 * meas,
        report.measured_loss_db,
        100.0 * sim,
        report.simulated_loss_db
    );
    ctx.out.json("budget", &report)?;
    Ok(())
}
