use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "ringqed",
    version,
    about = "Microring cavity-QED design toolkit",
    propagate_version = true
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Project configuration (TOML). The shipped reference device is used
    /// when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Override the mode-solver grid pitch.
    #[arg(long, global = true, value_name = "NM")]
    pub grid_pitch: Option<f64>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    /// Seed for synthetic noise.
    #[arg(long, global = true, value_name = "N", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Regime {
    Under,
    Over,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Polarization {
    Tm,
    Te,
    Any,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve waveguide modes and export the field.
    Mode {
        #[arg(long, default_value_t = 894.0, value_name = "NM")]
        wavelength: f64,
        /// Straight guide instead of the ring bend.
        #[arg(long)]
        straight: bool,
        #[arg(long, value_enum, default_value_t = Polarization::Tm)]
        polarization: Polarization,
    },
    /// Ring figures of merit: FSR, mode volume, g, cooperativity.
    Ring {
        /// Probe wavelength (default: the D2 line).
        #[arg(long, value_name = "NM")]
        wavelength: Option<f64>,
        /// Intrinsic quality factor (default: from the cavity rates).
        #[arg(long)]
        q: Option<f64>,
        /// Round-trip length increments for a resonance ladder.
        #[arg(long, value_delimiter = ',', value_name = "NM,..")]
        increments: Vec<f64>,
    },
    /// Resonant transmission versus coupling length per channel.
    CouplerScan,
    /// Fit an empty-ring transmission spectrum.
    Fit {
        /// Two- or three-column CSV (detuning GHz, transmission[, sigma]).
        #[arg(long, value_name = "PATH")]
        input: PathBuf,
        /// Coupling regime to report as the chosen rates.
        #[arg(long, value_enum, default_value_t = Regime::Under)]
        regime: Regime,
        /// Resonance frequency for the Q values (default: D2 line).
        #[arg(long, value_name = "NM")]
        wavelength: Option<f64>,
    },
    /// Empty-ring and atom-coupled transmission curves.
    Spectrum {
        /// Gaussian noise added to the empty-ring curve.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Skip the mode solve and use this coupling strength (MHz).
        #[arg(long, value_name = "MHZ")]
        g_mhz: Option<f64>,
    },
    /// Resonant transmission against atom height.
    Transparency,
    /// Trap potential maps and the trap report.
    Trap {
        /// Line cut through the trap centre.
        #[arg(long, value_enum)]
        cut: Option<Cut>,
    },
    /// Trap position and depth against the red/blue power ratio.
    Tune {
        /// Total injected power P_b + 2 P_r (default: from the config).
        #[arg(long, value_name = "MW")]
        total_power: Option<f64>,
    },
    /// Membrane micro-trap position and stress map.
    Membrane,
    /// Fiber-to-fiber throughput from per-facet efficiencies.
    Budget {
        /// Ring transmission to include (default: off resonance, 1).
        #[arg(long, default_value_t = 1.0)]
        ring_transmission: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Cut {
    /// U(z) through the trap centre.
    Vertical,
    /// U(x) at the trap height.
    Horizontal,
}
