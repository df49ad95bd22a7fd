use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use twinhet::commands;
use twinhet::config::ExperimentConfig;
use twinhet::spectrum::Band;
use twinhet::{Error, Result};

#[derive(Parser)]
#[command(
    name = "twinhet",
    version,
    about = "Dual-carrier heterodyne readout simulator and squeezing-model fitter"
)]
struct Cli {
    /// JSON experiment configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides simulation.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Analysis band in Hz, LO:HI.
    #[arg(long, global = true)]
    band: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Path efficiencies from the loss budget.
    Budget,
    /// Squeezed and antisqueezed model levels over a pump grid.
    ModelCurve {
        /// Comma-separated x values; defaults to fig2.x_grid.
        #[arg(long)]
        x_grid: Option<String>,
    },
    /// Synthesize one record of both demodulated channels.
    Simulate,
    /// Shot-normalised spectra of a simulated record.
    Spectrum { input: PathBuf },
    /// Fit efficiency and dephasing to a squeezing dataset.
    Fit {
        dataset: PathBuf,
        /// Bootstrap replicas (0 disables).
        #[arg(long, default_value_t = 0)]
        bootstrap: usize,
    },
    /// Squeezing versus pump sweep and fit.
    ReproduceFig2,
    /// Signal addition, cancellation and squeezing spectra.
    ReproduceFig3,
    /// Print the fully defaulted configuration.
    Defaults,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.simulation.seed = seed;
    }
    if let Some(b) = &cli.band {
        let band: Band = b.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
        commands::apply_band(&mut cfg, band)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let out = &cli.out;
    match &cli.command {
        Command::Budget => {
            let reports = commands::write_budget(&cfg, out)?;
            print!("{}", commands::render_budget(&reports));
        }
        Command::ModelCurve { x_grid } => {
            let grid = match x_grid {
                Some(s) => commands::parse_grid(s)?,
                None => cfg.fig2.x_grid.clone(),
            };
            let path = commands::write_model_curve(&cfg, &grid, out)?;
            println!("{}", path.display());
        }
        Command::Simulate => {
            for p in commands::simulate(&cfg, out)? {
                println!("{}", p.display());
            }
        }
        Command::Spectrum { input } => {
            let s = commands::spectrum(input, &cfg, out)?;
            println!(
                "band average: in-phase {:.3} dB, quadrature {:.3} dB",
                s.band_average_inphase_db, s.band_average_quadrature_db
            );
        }
        Command::Fit { dataset, bootstrap } => {
            let r = commands::fit_file(dataset, &cfg, out, *bootstrap)?;
            let f = &r.fit;
            println!(
                "eta_c = {:.4} ± {:.4}   xi_prime = {:.3e} (-{:.2e} +{:.2e})   converged = {}",
                f.eta_c.value,
                f.eta_c.err_plus,
                f.xi_prime.value,
                f.xi_prime.err_minus,
                f.xi_prime.err_plus,
                f.converged
            );
            match (r.eta1, r.eta2, &r.inversion_error) {
                (Some(a), Some(b), _) => println!("eta1 = {a:.4}   eta2 = {b:.4}"),
                (_, _, Some(e)) => println!("inversion: {e}"),
                _ => {}
            }
        }
        Command::ReproduceFig2 => {
            let s = commands::reproduce_fig2(&cfg, out)?;
            let f = &s.report.fit;
            println!(
                "truth ({:.4}, {:.3e})   fit ({:.4}, {:.3e})   within tolerance: {}",
                s.truth_eta_c,
                s.truth_xi_prime,
                f.eta_c.value,
                f.xi_prime.value,
                s.eta_c_within_tolerance && s.xi_prime_within_tolerance
            );
        }
        Command::ReproduceFig3 => {
            let s = commands::reproduce_fig3(&cfg, out)?;
            println!("gain          {:+.2} dB (oracle {:+.2})", s.gain_db, s.gain_oracle_db);
            println!("cancellation  {:.2} dB (oracle {:.2})", s.cancellation_db, s.cancellation_oracle_db);
            println!("squeezed      {:+.2} dB (oracle {:+.2})", s.squeezed_floor_db, s.squeezed_oracle_db);
            println!(
                "antisqueezed  {:+.2} dB (oracle {:+.2})",
                s.antisqueezed_floor_db, s.antisqueezed_oracle_db
            );
        }
        Command::Defaults => println!("{}", cfg.to_json_pretty()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("twinhet: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .expect("global thread pool configured once");
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("twinhet: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
