//! Command-line front end: Monte-Carlo sweeps, PMF analysis and the
//! analytic cost tables.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use polarflip::code::PolarCode;
use polarflip::cost::{self, CostParams};
use polarflip::fast::build_schedule;
use polarflip::flip::FlipConfig;
use polarflip::sim::{self, SimConfig};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "polarflip", version, about = "Polar-code flip decoding laboratory")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// FER and average-execution-time sweep over channel points.
    Simulate(SimArgs),
    /// Distribution of the first flip candidate at one channel point.
    Pmf(SimArgs),
    /// Closed-form latency and memory tables.
    Cost(CostArgs),
}

#[derive(Args)]
struct SimArgs {
    /// Key=value config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Block length N (power of two, at most 1024).
    #[arg(long)]
    n: Option<usize>,
    /// Information bits, CRC excluded.
    #[arg(long)]
    k: Option<usize>,
    /// CRC length (11 or 2 are bundled).
    #[arg(long)]
    crc: Option<usize>,
    /// Maximum flips per trial.
    #[arg(long)]
    omega: Option<usize>,
    /// Trial budget, initial pass included.
    #[arg(long)]
    tmax: Option<usize>,
    /// Baseline trial algorithm: sc, sclrt, fssc.
    #[arg(long)]
    baseline: Option<String>,
    /// Restart mechanism: none, lrt, srm, grm.
    #[arg(long)]
    mechanism: Option<String>,
    /// Channel points in dB, comma separated.
    #[arg(long, value_delimiter = ',')]
    ebn0: Option<Vec<f64>>,
    /// Interpret channel points as ebn0 or snr.
    #[arg(long)]
    axis: Option<String>,
    #[arg(long)]
    min_frames: Option<u64>,
    #[arg(long)]
    target_errors: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Processing elements of the latency model.
    #[arg(long)]
    pe: Option<u64>,
    /// Output directory for CSV and manifest.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SimArgs {
    fn into_config(self) -> Result<(SimConfig, Option<PathBuf>)> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                SimConfig::from_key_values(&text)?
            }
            None => SimConfig::default(),
        };
        if let Some(v) = self.n {
            cfg.n = v;
        }
        if let Some(v) = self.k {
            cfg.k = v;
        }
        if let Some(v) = self.crc {
            cfg.crc_len = v;
        }
        if let Some(v) = self.omega {
            cfg.omega = v;
        }
        if let Some(v) = self.tmax {
            cfg.t_max = v;
        }
        if let Some(v) = &self.baseline {
            cfg.set("baseline", v)?;
        }
        if let Some(v) = &self.mechanism {
            cfg.set("mechanism", v)?;
        }
        if let Some(v) = self.ebn0 {
            cfg.points_db = v;
        }
        if let Some(v) = &self.axis {
            cfg.set("axis", v)?;
        }
        if let Some(v) = self.min_frames {
            cfg.min_frames = v;
        }
        if let Some(v) = self.target_errors {
            cfg.target_errors = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.workers {
            cfg.workers = v;
        }
        if let Some(v) = self.pe {
            cfg.pe = v;
        }
        cfg.validate()?;
        Ok((cfg, self.out))
    }
}

#[derive(Args)]
struct CostArgs {
    #[arg(long, default_value_t = 1024)]
    n: usize,
    #[arg(long, default_value_t = 512)]
    k: usize,
    #[arg(long, default_value_t = 11)]
    crc: usize,
    #[arg(long, default_value_t = 3)]
    omega: usize,
    #[arg(long, default_value_t = 301)]
    tmax: usize,
    /// Processing elements.
    #[arg(long, default_value_t = 64)]
    pe: u64,
    /// Print the savings row for one restart location only.
    #[arg(long)]
    psi: Option<usize>,
}

fn run_simulate(args: SimArgs) -> Result<()> {
    let (cfg, out) = args.into_config()?;
    let points = sim::run_sweep(&cfg)?;
    print!("{}", sim::sweep_csv(&points));
    if let Some(dir) = out {
        sim::emit_sweep(&cfg, &points, &dir)?;
        eprintln!("wrote {}", dir.join("sweep.csv").display());
    }
    Ok(())
}

fn run_pmf(args: SimArgs) -> Result<()> {
    let (cfg, out) = args.into_config()?;
    if cfg.points_db.len() != 1 {
        bail!("pmf expects exactly one channel point");
    }
    let report = sim::run_pmf(&cfg)?;
    let decoder = cfg.build_decoder()?;
    println!(
        "frames={} failed={} j_rhs={} p_lhs={:.4} p_rhs={:.4}",
        report.frames, report.failed_frames, report.j_rhs, report.p_lhs, report.p_rhs
    );
    if report.failed_frames == 0 {
        eprintln!("warning: no failed initial trials; PMF is empty");
    }
    if let Some(dir) = out {
        sim::emit_pmf(&cfg, &report, &dir)?;
        eprintln!("wrote {}", dir.join("pmf.csv").display());
    } else {
        print!("{}", sim::pmf_csv(&report, decoder.code()));
    }
    Ok(())
}

fn run_cost(args: CostArgs) -> Result<()> {
    let code = PolarCode::new_5g(args.n, args.k, args.crc)?;
    let schedule = build_schedule(&code, args.omega);
    let params = CostParams::with_pe(args.pe);
    let n = args.n as u64;
    let p = params.pe;

    println!("code: ({}, {}+{})  P={}", args.n, args.k, args.crc, p);
    println!("L_SC      = {}", cost::l_sc(n, p));
    println!("L_SC_LRT  = {}  (a0 = {})", cost::l_sc_lrt(&code, p), code.first_info());
    println!(
        "L_FSSC    = {}  (q = {} special nodes, omega = {})",
        cost::l_fssc(n, &schedule, p),
        schedule.special_count(),
        args.omega
    );

    let cfg = FlipConfig::new(args.omega, args.tmax)?;
    let without = cost::memory_estimate(&cfg, &params, n, false);
    let with = cost::memory_estimate(&cfg, &params, n, true);
    println!(
        "memory: Tmax={} -> {} bits, with restart {} bits (+{:.2}%)",
        args.tmax,
        without.total(),
        with.total(),
        with.overhead_percent()
    );

    println!("j,psi,delta_sc,delta_sclrt,delta_fssc,theta");
    let rows: Vec<usize> = match args.psi {
        Some(psi) => vec![psi],
        None => code.info_set().to_vec(),
    };
    for psi in rows {
        let j = code
            .info_set()
            .binary_search(&psi)
            .map(|r| r.to_string())
            .unwrap_or_else(|_| "-".into());
        println!(
            "{j},{psi},{},{},{},{}",
            cost::delta_l_sc(psi as u64, n, p),
            cost::delta_l_sc_lrt(psi as u64, &code, p),
            cost::delta_l_fssc(psi as u64, n, &schedule, p),
            cost::theta(psi as u64, n, p)
        );
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Simulate(args) => run_simulate(args),
        Cmd::Pmf(args) => run_pmf(args),
        Cmd::Cost(args) => run_cost(args),
    }
}
