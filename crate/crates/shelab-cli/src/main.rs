mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use config::{parse_file, CliError, RunConfig, ScanCfg};
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(
    name = "shelab",
    version,
    about = "Numerical laboratory for the stochastic heat equation with homogeneous multiplicative noise"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Spectral-measure diagnostics: Dalang integrals, small-time asymptotics, heat-trace bounds
    KernelReport(CommonArgs),
    /// Existence gates for a coefficient: Dalang and Lipschitz checks plus working exponents
    Conditions(CommonArgs),
    /// Weight admissibility: classification, sup-ratio scan, ratio integrability
    Weights(CommonArgs),
    /// Weighted heat-flow profile of an initial datum over time
    GrProfile(CommonArgs),
    /// Integrate trajectories and write the recorded fields
    Simulate(CommonArgs),
    /// Monte Carlo weighted second moments with a growth verdict
    Moments(CommonArgs),
    /// Occupation-measure averages over growing windows and tightness quantiles
    Invariant(CommonArgs),
    /// Consistency of the fractional factorization against the direct convolution
    FactorizationCheck(CommonArgs),
}

/// One flag per configuration field. Flags override the file.
#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// JSON configuration file; any flag below overrides its field
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default shelab-out)
    #[arg(long)]
    output: Option<String>,
    /// Model kind: bessel-corr, bessel-spectral, matern, riesz-type,
    /// triangle-1d, sinc-squared-1d, product-triangle
    #[arg(long)]
    model: Option<String>,
    /// Smoothness/order parameter of the model
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    s1: Option<f64>,
    #[arg(long)]
    s2: Option<f64>,
    /// Matern amplitude
    #[arg(long)]
    phi: Option<f64>,
    /// Matern correlation length
    #[arg(long)]
    scale: Option<f64>,
    /// Matern smoothness
    #[arg(long)]
    nu: Option<f64>,
    /// Spatial dimension
    #[arg(long)]
    d: Option<usize>,
    /// Weight kind: exp-decay, poly-decay, stretched-exp
    #[arg(long)]
    weight: Option<String>,
    /// Weight rate or exponent
    #[arg(long)]
    a: Option<f64>,
    /// Comparison weight kind (for the ratio test and tightness)
    #[arg(long = "weight-tilde")]
    weight_tilde: Option<String>,
    /// Comparison weight rate or exponent
    #[arg(long = "a-tilde")]
    a_tilde: Option<f64>,
    /// Initial datum kind: dirac, constant, riesz, poly-growth, signed-combo
    #[arg(long)]
    datum: Option<String>,
    /// Datum total mass
    #[arg(long)]
    mass: Option<f64>,
    /// Datum location, comma-separated coordinates
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    location: Option<Vec<f64>>,
    /// Datum amplitude
    #[arg(long)]
    c: Option<f64>,
    /// Datum growth/singularity exponent
    #[arg(long = "datum-alpha")]
    datum_alpha: Option<f64>,
    /// Coefficient kind: linear, affine, bounded-sine
    #[arg(long)]
    coefficient: Option<String>,
    /// Coefficient slope
    #[arg(long)]
    lambda: Option<f64>,
    /// Coefficient offset or amplitude
    #[arg(long = "coeff-c")]
    coeff_c: Option<f64>,
    /// Lipschitz bound of the coefficient
    #[arg(long = "Lb")]
    l_b: Option<f64>,
    /// Bound on the coefficient at zero
    #[arg(long = "L0")]
    l_0: Option<f64>,
    /// Lattice points per axis
    #[arg(long)]
    n: Option<usize>,
    /// Torus side length
    #[arg(long)]
    length: Option<f64>,
    /// Time step
    #[arg(long)]
    dt: Option<f64>,
    /// Integration horizon
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    /// Record times, comma-separated
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    records: Option<Vec<f64>>,
    /// Zero the top third of forcing modes (true/false)
    #[arg(long)]
    dealias: Option<bool>,
    /// Number of independent replicas
    #[arg(long)]
    replicas: Option<usize>,
    /// Seed of the noise lineage (one 64-bit integer drives everything)
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for replica ensembles
    #[arg(long)]
    threads: Option<usize>,
    /// Fractional exponent in (0, 1/2)
    #[arg(long)]
    alpha: Option<f64>,
    /// Spectral shift of the Dalang integral
    #[arg(long)]
    beta: Option<f64>,
    /// Evaluation time
    #[arg(long)]
    t: Option<f64>,
    /// Evaluation times, comma-separated
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    times: Option<Vec<f64>>,
    /// Burn-in before occupation averaging starts
    #[arg(long)]
    tau: Option<f64>,
    /// Averaging windows, comma-separated, strictly increasing
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    windows: Option<Vec<f64>>,
    /// Quantile levels for the tightness table, comma-separated
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    levels: Option<Vec<f64>>,
    /// Number of projection directions
    #[arg(long)]
    projections: Option<usize>,
    /// Spacing of occupation snapshots
    #[arg(long = "record-spacing")]
    record_spacing: Option<f64>,
    /// Horizon of the admissibility scan
    #[arg(long = "scan-t-max")]
    scan_t_max: Option<f64>,
    /// Radius of the admissibility scan
    #[arg(long = "scan-radius")]
    scan_radius: Option<f64>,
    /// Points per axis of the admissibility scan
    #[arg(long = "scan-resolution")]
    scan_resolution: Option<usize>,
}

fn merged_config(args: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::config("<config file>", format!("{}: {e}", path.display()))
            })?;
            parse_file(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(v) = &args.output {
        cfg.output = Some(v.clone());
    }
    if let Some(v) = &args.model {
        cfg.model.get_or_insert_with(Default::default).kind = v.clone();
    }
    if let Some(v) = args.s {
        cfg.model.get_or_insert_with(Default::default).s = Some(v);
    }
    if let Some(v) = args.s1 {
        cfg.model.get_or_insert_with(Default::default).s1 = Some(v);
    }
    if let Some(v) = args.s2 {
        cfg.model.get_or_insert_with(Default::default).s2 = Some(v);
    }
    if let Some(v) = args.phi {
        cfg.model.get_or_insert_with(Default::default).phi = Some(v);
    }
    if let Some(v) = args.scale {
        cfg.model.get_or_insert_with(Default::default).scale = Some(v);
    }
    if let Some(v) = args.nu {
        cfg.model.get_or_insert_with(Default::default).nu = Some(v);
    }
    if let Some(v) = args.d {
        cfg.model.get_or_insert_with(Default::default).d = Some(v);
    }
    if let Some(v) = &args.weight {
        cfg.weight.get_or_insert_with(Default::default).kind = v.clone();
    }
    if let Some(v) = args.a {
        cfg.weight.get_or_insert_with(Default::default).a = Some(v);
    }
    if let Some(v) = &args.weight_tilde {
        cfg.weight_tilde.get_or_insert_with(Default::default).kind = v.clone();
    }
    if let Some(v) = args.a_tilde {
        cfg.weight_tilde.get_or_insert_with(Default::default).a = Some(v);
    }
    if let Some(v) = &args.datum {
        cfg.datum.get_or_insert_with(Default::default).kind = v.clone();
    }
    if let Some(v) = args.mass {
        cfg.datum.get_or_insert_with(Default::default).mass = Some(v);
    }
    if let Some(v) = &args.location {
        cfg.datum.get_or_insert_with(Default::default).location = Some(v.clone());
    }
    if let Some(v) = args.c {
        cfg.datum.get_or_insert_with(Default::default).c = Some(v);
    }
    if let Some(v) = args.datum_alpha {
        cfg.datum.get_or_insert_with(Default::default).alpha = Some(v);
    }
    if let Some(v) = &args.coefficient {
        cfg.coefficient.get_or_insert_with(Default::default).kind = v.clone();
    }
    if let Some(v) = args.lambda {
        cfg.coefficient.get_or_insert_with(Default::default).lambda = Some(v);
    }
    if let Some(v) = args.coeff_c {
        cfg.coefficient.get_or_insert_with(Default::default).c = Some(v);
    }
    if let Some(v) = args.l_b {
        cfg.lipschitz.get_or_insert_with(Default::default).l_b = v;
    }
    if let Some(v) = args.l_0 {
        cfg.lipschitz.get_or_insert_with(Default::default).l_0 = v;
    }
    if let Some(v) = args.n {
        cfg.grid.get_or_insert_with(Default::default).n = v;
    }
    if let Some(v) = args.length {
        cfg.grid.get_or_insert_with(Default::default).length = v;
    }
    if let Some(v) = args.dt {
        cfg.solver.get_or_insert_with(Default::default).dt = v;
    }
    if let Some(v) = args.t_end {
        cfg.solver.get_or_insert_with(Default::default).t_end = v;
    }
    if let Some(v) = &args.records {
        cfg.solver.get_or_insert_with(Default::default).records = Some(v.clone());
    }
    if let Some(v) = args.dealias {
        cfg.solver.get_or_insert_with(Default::default).dealias = Some(v);
    }
    if let Some(v) = args.replicas {
        cfg.replicas = Some(v);
    }
    if let Some(v) = args.seed {
        cfg.seed = Some(v);
    }
    if let Some(v) = args.threads {
        cfg.threads = Some(v);
    }
    if let Some(v) = args.alpha {
        cfg.alpha = Some(v);
    }
    if let Some(v) = args.beta {
        cfg.beta = Some(v);
    }
    if let Some(v) = args.t {
        cfg.t = Some(v);
    }
    if let Some(v) = &args.times {
        cfg.times = Some(v.clone());
    }
    if let Some(v) = args.tau {
        cfg.tau = Some(v);
    }
    if let Some(v) = &args.windows {
        cfg.windows = Some(v.clone());
    }
    if let Some(v) = &args.levels {
        cfg.levels = Some(v.clone());
    }
    if let Some(v) = args.projections {
        cfg.projections = Some(v);
    }
    if let Some(v) = args.record_spacing {
        cfg.record_spacing = Some(v);
    }
    let default_scan = || ScanCfg {
        t_max: 10.0,
        radius: 20.0,
        resolution: 64,
    };
    if let Some(v) = args.scan_t_max {
        cfg.scan.get_or_insert_with(default_scan).t_max = v;
    }
    if let Some(v) = args.scan_radius {
        cfg.scan.get_or_insert_with(default_scan).radius = v;
    }
    if let Some(v) = args.scan_resolution {
        cfg.scan.get_or_insert_with(default_scan).resolution = v;
    }
    Ok(cfg)
}

fn run(cmd: &Command) -> Result<(), CliError> {
    match cmd {
        Command::KernelReport(a) => commands::kernel_report(&merged_config(a)?),
        Command::Conditions(a) => commands::conditions(&merged_config(a)?),
        Command::Weights(a) => commands::weights(&merged_config(a)?),
        Command::GrProfile(a) => commands::gr_profile(&merged_config(a)?),
        Command::Simulate(a) => commands::simulate(&merged_config(a)?),
        Command::Moments(a) => commands::moments(&merged_config(a)?),
        Command::Invariant(a) => commands::invariant(&merged_config(a)?),
        Command::FactorizationCheck(a) => commands::factorization_check(&merged_config(a)?),
    }
}

fn main() {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => {}
        Err(e @ CliError::Config { .. }) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(1);
        }
    }
}
