use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use exlab_cli::commands::{self, FIGURE_COLUMNS};
use exlab_cli::config::{Config, Origin, Settings};
use exlab_cli::table::{plot_script, Plot, Series, Table};

/// Error exponents of threshold decoders: sweeps, optimal thresholds,
/// figure regeneration and finite-length simulation.
#[derive(Parser)]
#[command(name = "exlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal error and list exponents per rate, plus each family's best
    /// list exponent at the target error exponent.
    Exponents(Flags),
    /// Optimal thresholds per rate: T*, critical rates, g* on a marginal grid.
    Thresholds(Flags),
    /// Regenerate one of the two comparison figures (CSV plus gnuplot script).
    Figure {
        /// 1: W1 with T = 0.05; 2: W2 with T = -0.05.
        #[arg(value_parser = clap::value_parser!(u8).range(1..=2))]
        which: u8,
        #[command(flatten)]
        flags: Flags,
    },
    /// Ensemble averages of P_e and list size at finite blocklength.
    Simulate(Flags),
    /// Exponents of fixed decoders over a grid of rates and offsets.
    Sweep(Flags),
}

/// Overrides for the config file; every flag maps to the key of the same
/// name.
#[derive(Args, Default)]
struct Flags {
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// w1, w2, bsc:p, binary:a,b, "r0; r1; ..." or a matrix file.
    #[arg(long)]
    channel: Option<String>,
    /// Decoding metric channel if it differs from the true channel.
    #[arg(long)]
    metric: Option<String>,
    /// Input distribution: `uniform` or comma-separated probabilities.
    #[arg(long)]
    px: Option<String>,
    /// Threshold offset T in nats.
    #[arg(long = "T", allow_hyphen_values = true)]
    t: Option<String>,
    /// `matched` (E = E_e*(R, T)) or a fixed value in nats.
    #[arg(long = "target-ee", allow_hyphen_values = true)]
    target_ee: Option<String>,
    /// Rate grid `lo:hi:n`; `hi` may be `max`.
    #[arg(long)]
    rates: Option<String>,
    /// Comma-separated: optimal, psi, lambda1, lambda2.
    #[arg(long)]
    class: Option<String>,
    /// Coarse grid step of the optimizer.
    #[arg(long)]
    delta0: Option<String>,
    /// Final bracket width of the optimizer.
    #[arg(long)]
    delta1: Option<String>,
    /// Offset grid `lo:hi:n` for `sweep`.
    #[arg(long = "t-grid", allow_hyphen_values = true)]
    t_grid: Option<String>,
    /// Points per coordinate of the output-marginal lattice for `thresholds`.
    #[arg(long = "marginal-points")]
    marginal_points: Option<String>,
    /// Comma-separated blocklengths for `simulate`.
    #[arg(long)]
    blocklengths: Option<String>,
    /// Nominal rate for `simulate`.
    #[arg(long = "sim-rate")]
    sim_rate: Option<String>,
    /// Comma-separated: forney, typebased, lambda1, lambda2, psi.
    #[arg(long)]
    decoder: Option<String>,
    /// `exact` or `mc`.
    #[arg(long)]
    mode: Option<String>,
    /// Monte Carlo trials per configuration.
    #[arg(long)]
    trials: Option<String>,
    /// Seed for codebooks and channel noise.
    #[arg(long)]
    seed: Option<String>,
    /// Maximum decoder calls for exact enumeration.
    #[arg(long)]
    budget: Option<String>,
    /// Also check dominance by the likelihood-ratio trade-off curve.
    #[arg(long)]
    dominance: bool,
    /// Report rates and exponents in bits.
    #[arg(long)]
    bits: bool,
    /// Output CSV path; `-` for stdout.
    #[arg(long)]
    out: Option<String>,
}

impl Flags {
    fn apply(&self, settings: &mut Settings) -> Result<()> {
        if let Some(path) = &self.config {
            settings.merge_file(path)?;
        }
        let pairs: [(&str, &str, &Option<String>); 19] = [
            ("channel", "channel", &self.channel),
            ("metric", "metric", &self.metric),
            ("px", "px", &self.px),
            ("T", "T", &self.t),
            ("target_ee", "target-ee", &self.target_ee),
            ("rates", "rates", &self.rates),
            ("class", "class", &self.class),
            ("delta0", "delta0", &self.delta0),
            ("delta1", "delta1", &self.delta1),
            ("t_grid", "t-grid", &self.t_grid),
            ("marginal_points", "marginal-points", &self.marginal_points),
            ("blocklengths", "blocklengths", &self.blocklengths),
            ("sim_rate", "sim-rate", &self.sim_rate),
            ("decoder", "decoder", &self.decoder),
            ("mode", "mode", &self.mode),
            ("trials", "trials", &self.trials),
            ("seed", "seed", &self.seed),
            ("budget", "budget", &self.budget),
            ("out", "out", &self.out),
        ];
        for (key, flag, value) in pairs {
            if let Some(v) = value {
                settings.set(key, v, Origin::Flag(flag.to_string()))?;
            }
        }
        if self.dominance {
            settings.set("dominance", "true", Origin::Flag("dominance".into()))?;
        }
        if self.bits {
            settings.set("bits", "true", Origin::Flag("bits".into()))?;
        }
        Ok(())
    }
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("EXLAB_THREADS") {
        let n: usize = v.trim().parse().ok().filter(|&n| n > 0).with_context(|| format!("EXLAB_THREADS = {v:?}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn emit(table: &Table, cfg: &Config) -> Result<()> {
    match &cfg.out {
        Some(path) => table.write_file(path),
        None => {
            let mut out = std::io::stdout().lock();
            table.write_to(&mut out)?;
            out.flush()?;
            Ok(())
        }
    }
}

fn write_figure(which: u8, table: &Table, cfg: &Config) -> Result<()> {
    let Some(path) = &cfg.out else {
        return emit(table, cfg);
    };
    table.write_file(path)?;
    let name = |p: &Path| p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let unit = if cfg.bits { "bits" } else { "nats" };
    let series = [
        Series { column: FIGURE_COLUMNS[2], title: "optimal" },
        Series { column: FIGURE_COLUMNS[3], title: "general threshold" },
        Series { column: FIGURE_COLUMNS[4], title: "output-only threshold" },
        Series { column: FIGURE_COLUMNS[5], title: "scaled ML" },
    ];
    let title = format!("list-size exponents at matched error exponent, figure {which}");
    let x_label = format!("R [{unit}]");
    let y_label = format!("list-size exponent [{unit}]");
    let plot = Plot {
        csv_name: &name(path),
        image_name: &name(&path.with_extension("png")),
        title: &title,
        x: FIGURE_COLUMNS[0],
        x_label: &x_label,
        y_label: &y_label,
        series: &series,
    };
    let script = plot_script(table, &plot)?;
    let gp = path.with_extension("gp");
    std::fs::write(&gp, script).with_context(|| format!("writing {}", gp.display()))
}

fn run(cli: Cli) -> Result<()> {
    let mut settings = Settings::default();
    let (flags, which) = match &cli.command {
        Command::Figure { which, flags } => {
            commands::figure_preset(*which, &mut settings)?;
            (flags, Some(*which))
        }
        Command::Exponents(f) | Command::Thresholds(f) | Command::Simulate(f) | Command::Sweep(f) => (f, None),
    };
    flags.apply(&mut settings)?;
    let cfg = settings.resolve()?;
    let table = match &cli.command {
        Command::Exponents(_) => commands::exponents(&settings, &cfg)?,
        Command::Thresholds(_) => commands::thresholds(&settings, &cfg)?,
        Command::Simulate(_) => commands::simulate(&settings, &cfg)?,
        Command::Sweep(_) => commands::sweep_table(&settings, &cfg)?,
        Command::Figure { .. } => {
            let which = which.unwrap_or(1);
            let table = commands::figure_table(which, &settings, &cfg)?;
            return write_figure(which, &table, &cfg);
        }
    };
    if table.rows.is_empty() {
        bail!("nothing to report");
    }
    emit(&table, &cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match init_threads().and_then(|_| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
