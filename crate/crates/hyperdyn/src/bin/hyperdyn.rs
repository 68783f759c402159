//! Command-line surface: config ingestion, subcommands orchestrating the
//! library modules, deterministic structured outputs.
//!
//! Every run prints a JSON summary (with a manifest) on stdout; CSV and JSON
//! artifacts land in `--out` when given. All randomness derives from the
//! seed, results are byte-identical across runs and worker counts, and wall
//! time goes to stderr only.

use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::time::Instant;

use hyperdyn::config::Config;
use hyperdyn::error::{Error, Result};
use hyperdyn::experiments::{
    build_chain, correlate, laplace_consistency, nli_certificate, FiberProfile, NliParams,
    Observable, StationaryChain,
};
use hyperdyn::geodesics::{count, enumerate_classes, equidist_sums, horizon};
use hyperdyn::manifest::{fmt_f64, to_json, CsvBuilder, RunManifest};
use hyperdyn::measures::{doubling_ratio, equilibrium_measure, ncp_certificate, roof_average};
use hyperdyn::schottky::{estimate_contraction, SchottkyScheme};
use hyperdyn::transfer::{
    assemble, normalize, perron, scan_grid, solve_delta_on, stationary_weights, Discretization,
    SpectralData, TwistSpec,
};

#[derive(Parser)]
#[command(name = "hyperdyn", version, about = "Schottky boundary dynamics laboratory")]
struct Cli {
    /// Path to the JSON configuration.
    #[arg(long, global = true, default_value = "config.json")]
    config: PathBuf,

    /// Output directory for CSV/JSON artifacts (stdout always carries the
    /// JSON summary).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for all randomness; falls back to the config default.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker pool size; falls back to HYPERDYN_WORKERS, then all cores.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the configuration and report scheme diagnostics.
    Validate,
    /// Solve the pressure equation for the critical exponent.
    Delta(DeltaArgs),
    /// Scan twisted-operator contraction rates over a (b, k) grid.
    Scan(ScanArgs),
    /// Enumerate closed-geodesic classes.
    Geodesics(GeodesicsArgs),
    /// Counting and holonomy character sums against li(e^(delta T)).
    Equidist(EquidistArgs),
    /// Correlation decay of the suspension flow.
    Mix(MixArgs),
    /// Measure regularity: doubling ratios and non-concentration.
    Measure(MeasureArgs),
    /// Non-local-integrability certificate.
    Nli(NliArgs),
    /// Laplace-transform consistency of correlations and operator series.
    Laplace(LaplaceArgs),
}

#[derive(Args)]
struct DeltaArgs {
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct ScanArgs {
    /// Real exponent; defaults to the solved critical exponent.
    #[arg(long)]
    a: Option<f64>,
    #[arg(long, default_value_t = -50.0)]
    b_min: f64,
    #[arg(long, default_value_t = 50.0)]
    b_max: f64,
    #[arg(long, default_value_t = 2.5)]
    b_step: f64,
    #[arg(long, default_value_t = 20)]
    k_max: i32,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long, default_value_t = 200)]
    iters: usize,
}

#[derive(Args)]
struct GeodesicsArgs {
    #[arg(long, default_value_t = 12)]
    max_word_length: usize,
    /// Optional cutoff to report N(T); warns beyond the horizon.
    #[arg(long)]
    t: Option<f64>,
}

#[derive(Args)]
struct EquidistArgs {
    #[arg(long, default_value_t = 12)]
    max_word_length: usize,
    #[arg(long, default_value_t = 5)]
    k_max: usize,
    /// Grid points over the top quartile of the horizon.
    #[arg(long, default_value_t = 6)]
    t_points: usize,
}

#[derive(Args)]
struct MixArgs {
    #[arg(long, default_value_t = 1)]
    k: i32,
    /// Observable spec: one | bump | cos<m> | sin<m>, optionally @symbol.
    #[arg(long, default_value = "bump")]
    f: String,
    #[arg(long, default_value = "bump")]
    g: String,
    #[arg(long, default_value_t = 15.0)]
    t_max: f64,
    #[arg(long, default_value_t = 0.25)]
    t_step: f64,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long)]
    depth: Option<usize>,
}

#[derive(Args)]
struct MeasureArgs {
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long, default_value_t = 48)]
    centers: usize,
    /// Number of dyadic scales, halving from a quarter of the extent.
    #[arg(long, default_value_t = 10)]
    scales: usize,
    #[arg(long, default_value_t = 48)]
    ncp_samples: usize,
    #[arg(long, default_value_t = 64)]
    directions: usize,
}

#[derive(Args)]
struct NliArgs {
    #[arg(long, default_value_t = 4)]
    order: usize,
    #[arg(long, default_value_t = 6)]
    branches: usize,
    #[arg(long, default_value_t = 9)]
    grid: usize,
    #[arg(long, default_value_t = 32)]
    am_dirs: usize,
    #[arg(long, default_value_t = 32)]
    boundary_dirs: usize,
    #[arg(long, default_value_t = 1e-4)]
    fd_step: f64,
}

#[derive(Args)]
struct LaplaceArgs {
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long, default_value_t = 0.3)]
    xi: f64,
    #[arg(long, default_value_t = 1)]
    k: i32,
    #[arg(long, default_value = "bump")]
    f: String,
    #[arg(long, default_value = "bump")]
    g: String,
    #[arg(long, default_value_t = 60)]
    terms: usize,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
}

fn main() {
    let cli = Cli::parse();
    let started = Instant::now();
    let code = match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.class().exit_code()
        }
    };
    eprintln!("wall time: {:.3}s", started.elapsed().as_secs_f64());
    std::process::exit(code);
}

fn worker_count(cli: &Cli) -> usize {
    cli.workers
        .or_else(|| {
            std::env::var("HYPERDYN_WORKERS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(0) // zero lets the pool use every core
}

fn run(cli: &Cli) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count(cli))
        .build()
        .map_err(|e| Error::Usage(format!("worker pool: {e}")))?;
    pool.install(|| dispatch(cli))
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Validate => cmd_validate(cli),
        Command::Delta(args) => cmd_delta(cli, args),
        Command::Scan(args) => cmd_scan(cli, args),
        Command::Geodesics(args) => cmd_geodesics(cli, args),
        Command::Equidist(args) => cmd_equidist(cli, args),
        Command::Mix(args) => cmd_mix(cli, args),
        Command::Measure(args) => cmd_measure(cli, args),
        Command::Nli(args) => cmd_nli(cli, args),
        Command::Laplace(args) => cmd_laplace(cli, args),
    }
}

/// Pieces shared by most subcommands.
struct Workbench {
    config: Config,
    config_bytes: Vec<u8>,
    scheme: SchottkyScheme,
    seed: u64,
}

impl Workbench {
    fn open(cli: &Cli) -> Result<Self> {
        let (config, config_bytes) = Config::load(&cli.config)?;
        let scheme = config.build_scheme()?;
        for w in scheme.warnings() {
            eprintln!("warning: {w}");
        }
        let seed = cli.seed.unwrap_or(config.defaults.seed);
        Ok(Workbench {
            config,
            config_bytes,
            scheme,
            seed,
        })
    }

    fn manifest(&self, command: &str) -> RunManifest {
        RunManifest::new(&self.config_bytes, command, self.seed)
    }

    fn depth(&self, flag: Option<usize>) -> usize {
        flag.unwrap_or(self.config.defaults.depth)
    }

    fn critical_data(&self, depth: usize) -> Result<(Discretization, f64, SpectralData)> {
        let disc = Discretization::new(&self.scheme, depth, self.config.defaults.cylinder_cap)?;
        let delta = solve_delta_on(&disc, self.config.defaults.tol)?.delta;
        let spectral = perron(&assemble(&disc, TwistSpec::untwisted(delta)))?;
        Ok((disc, delta, spectral))
    }

    fn chain(
        &self,
        disc: &Discretization,
        delta: f64,
        spectral: &SpectralData,
    ) -> Result<StationaryChain> {
        let normalized = normalize(&assemble(disc, TwistSpec::untwisted(delta)), spectral);
        build_chain(disc, &normalized, &stationary_weights(spectral))
    }
}

fn write_artifact(out: &Option<PathBuf>, name: &str, content: &str) -> Result<()> {
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(Path::new(dir).join(name), content)?;
    }
    Ok(())
}

fn parse_observable(spec: &str) -> Result<Observable> {
    let (profile_part, symbol) = match spec.split_once('@') {
        Some((p, s)) => {
            let sym: u16 = s
                .parse()
                .map_err(|_| Error::Usage(format!("bad observable symbol in {spec:?}")))?;
            (p, Some(sym))
        }
        None => (spec, None),
    };
    let profile = match profile_part {
        "one" => FiberProfile::One,
        "zero" => FiberProfile::Zero,
        "bump" => FiberProfile::Bump,
        p if p.starts_with("cos") => FiberProfile::Cos(
            p[3..]
                .parse()
                .map_err(|_| Error::Usage(format!("bad profile {spec:?}")))?,
        ),
        p if p.starts_with("sin") => FiberProfile::Sin(
            p[3..]
                .parse()
                .map_err(|_| Error::Usage(format!("bad profile {spec:?}")))?,
        ),
        _ => {
            return Err(Error::Usage(format!(
                "unknown observable {spec:?}; use one|zero|bump|cos<m>|sin<m>[@symbol]"
            )))
        }
    };
    Ok(Observable { symbol, profile })
}

#[derive(serde::Serialize)]
struct ValidateSummary {
    manifest: RunManifest,
    rank: usize,
    symbols: usize,
    gap: f64,
    kappa: f64,
    kappa_1: f64,
    c_0: f64,
    extent: f64,
    warnings: Vec<String>,
}

fn cmd_validate(cli: &Cli) -> Result<()> {
    let wb = Workbench::open(cli)?;
    let bounds = estimate_contraction(&wb.scheme, 1024);
    let summary = ValidateSummary {
        manifest: wb.manifest("validate"),
        rank: wb.scheme.rank(),
        symbols: wb.scheme.symbol_count(),
        gap: wb.scheme.gap(),
        kappa: bounds.kappa,
        kappa_1: bounds.kappa_1,
        c_0: bounds.c_0,
        extent: wb.scheme.extent(),
        warnings: wb.scheme.warnings().to_vec(),
    };
    println!("{}", to_json(&summary)?);
    Ok(())
}

#[derive(serde::Serialize)]
struct DeltaSummary {
    manifest: RunManifest,
    delta: f64,
    depth: usize,
    residual: f64,
}

fn cmd_delta(cli: &Cli, args: &DeltaArgs) -> Result<()> {
    let wb = Workbench::open(cli)?;
    let depth = wb.depth(args.depth);
    let tol = args.tol.unwrap_or(wb.config.defaults.tol);
    let solve = if wb.scheme.rank() < 2 {
        hyperdyn::transfer::solve_delta(&wb.scheme, depth, tol, wb.config.defaults.cylinder_cap)?
    } else {
        let disc = Discretization::new(&wb.scheme, depth, wb.config.defaults.cylinder_cap)?;
        solve_delta_on(&disc, tol)?
    };
    let summary = DeltaSummary {
        manifest: wb
            .manifest("delta")
            .with_param("depth", depth)
            .with_param("tol", fmt_f64(tol)),
        delta: solve.delta,
        depth: solve.depth,
        residual: solve.residual,
    };
    println!("{}", to_json(&summary)?);
    Ok(())
}

#[derive(serde::Serialize)]
struct ScanSummary {
    manifest: RunManifest,
    a: f64,
    depth: usize,
    iters: usize,
    cells: usize,
    max_rho_unflagged: f64,
    argmax_b: f64,
    argmax_k: i32,
    max_domination_excess: f64,
}

fn cmd_scan(cli: &Cli, args: &ScanArgs) -> Result<()> {
    let wb = Workbench::open(cli)?;
    let depth = wb.depth(args.depth);
    let (disc, delta, spectral) = wb.critical_data(depth)?;
    let a = args.a.unwrap_or(delta);

    if args.b_step <= 0.0 || args.b_max < args.b_min {
        return Err(Error::Usage("bad b grid".into()));
    }
    let steps = ((args.b_max - args.b_min) / args.b_step).round() as usize;
    let b_values: Vec<f64> = (0..=steps).map(|i| args.b_min + i as f64 * args.b_step).collect();
    let k_values: Vec<i32> = (-args.k_max..=args.k_max).collect();

    let report = scan_grid(&disc, &spectral, a, &b_values, &k_values, args.iters)?;

    let mut csv = CsvBuilder::new(&["b", "k", "a", "depth", "rho_est", "flag"]);
    for row in &report.rows {
        csv.row(&[
            fmt_f64(row.b),
            row.k.to_string(),
            fmt_f64(row.a),
            row.depth.to_string(),
            fmt_f64(row.rho_est),
            (row.flagged as u8).to_string(),
        ]);
    }
    write_artifact(&cli.out, "scan.csv", &csv.finish())?;

    let max_excess = report
        .rows
        .iter()
        .map(|r| r.domination_excess)
        .fold(f64::NEG_INFINITY, f64::max);
    let summary = ScanSummary {
        manifest: wb
            .manifest("scan")
            .with_param("a", fmt_f64(a))
            .with_param("b_min", fmt_f64(args.b_min))
            .with_param("b_max", fmt_f64(args.b_max))
            .with_param("b_step", fmt_f64(args.b_step))
            .with_param("k_max", args.k_max)
            .with_param("depth", depth)
            .with_param("iters", args.iters),
        a,
        depth,
        iters: args.iters,
        cells: report.rows.len(),
        max_rho_unflagged: report.max_rho_unflagged,
        argmax_b: report.argmax_b,
        argmax_k: report.argmax_k,
        max_domination_excess: max_excess,
    };
    let json = to_json(&summary)?;
    write_artifact(&cli.out, "scan.json", &json)?;
    println!("{json}");
    Ok(())
}

#[derive(serde::Serialize)]
struct GeodesicsSummary {
    manifest: RunManifest,
    classes: usize,
    primitive: usize,
    horizon: f64,
    shortest: f64,
    longest: f64,
    t: Option<f64>,
    count_at_t: Option<usize>,
}

fn cmd_geodesics(cli: &Cli, args: &GeodesicsArgs) -> Result<()> {
    let wb = Workbench::open(cli)?;
    let bounds = estimate_contraction(&wb.scheme, 1024);
    let records = enumerate_classes(
        &wb.scheme,
        args.max_word_length,
        wb.config.defaults.enumeration_budget,
    )?;
    let h = horizon(&bounds, args.max_word_length);

    let mut csv = CsvBuilder::new(&["word", "length", "holonomy", "primitive"]);
    for r in &records {
        let word: Vec<String> = r.word.iter().map(|s| s.to_string()).collect();
        csv.row(&[
            word.join("."),
            fmt_f64(r.length),
            fmt_f64(r.holonomy),
            (r.primitive as u8).to_string(),
        ]);
    }
    write_artifact(&cli.out, "geodesics.csv", &csv.finish())?;

    let count_at_t = args.t.map(|t| {
        if t > h {
            eprintln!(
                "warning: cutoff {t} exceeds the completeness horizon {h:.6}; \
                 counts beyond it are partial"
            );
        }
        count(&records, t)
    });
    let summary = GeodesicsSummary {
        manifest: wb
            .manifest("geodesics")
            .with_param("max_word_length", args.max_word_length),
        classes: records.len(),
        primitive: records.iter().filter(|r| r.primitive).count(),
        horizon: h,
        shortest: records.first().map(|r| r.length).unwrap_or(f64::NAN),
        longest: records.last().map(|r| r.length).unwrap_or(f64::NAN),
        t: args.t,
        count_at_t,
    };
    let json = to_json(&summary)?;
    write_artifact(&cli.out, "geodesics.json", &json)?;
    println!("{json}");
    Ok(())
}

#[derive(serde::Serialize)]
struct EquidistSummary {
    manifest: RunManifest,
    delta: f64,
    horizon: f64,
    t_grid: Vec<f64>,
    counts: Vec<usize>,
    count_ratios: Vec<f64>,
    final_character_ratios: Vec<f64>,
}

fn cmd_equidist(cli: &Cli, args: &EquidistArgs) -> Result<()> {
    let wb = Workbench::open(cli)?;
    if args.t_points < 2 {
        return Err(Error::Usage("need at least two grid points".into()));
    }
    let bounds = estimate_contraction(&wb.scheme, 1024);
    let (_, delta, _) = wb.critical_data(wb.config.defaults.depth)?;
    let records = enumerate_classes(
        &wb.scheme,
        args.max_word_length,
        wb.config.defaults.enumeration_budget,
    )?;
    let h = horizon(&bounds, args.max_word_length);
    let t_grid: Vec<f64> = (0..args.t_points)
        .map(|i| h * (0.75 + 0.25 * i as f64 / (args.t_points - 1) as f64))
        .collect();
    let report = equidist_sums(&records, delta, &t_grid, args.k_max, h)?;

    let mut header: Vec<String> = vec!["t".into(), "count".into(), "li".into(), "ratio".into()];
    for k in 1..=args.k_max {
        header.push(format!("s{k}_over_n"));
    }
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut csv = CsvBuilder::new(&header_refs);
    for (i, &t) in report.t_grid.iter().enumerate() {
        let mut row = vec![
            fmt_f64(t),
            report.counts[i].to_string(),
            fmt_f64(report.li_values[i]),
            fmt_f64(report.count_ratios[i]),
        ];
        for k in 1..=args.k_max {
            row.push(fmt_f64(report.character_ratios[k - 1][i]));
        }
        csv.row(&row);
    }
    write_artifact(&cli.out, "equidist.csv", &csv.finish())?;

    let summary = EquidistSummary {
        manifest: wb
            .manifest("equidist")
            .with_param("max_word_length", args.max_word_length)
            .with_param("k_max", args.k_max)
            .with_param("t_points", args.t_points),
        delta,
        horizon: h,
        t_grid: report.t_grid.clone(),
        counts: report.counts.clone(),
        count_ratios: report.count_ratios.clone(),
        final_character_ratios: report
            .character_ratios
            .iter()
            .map(|row| *row.last().unwrap())
            .collect(),
    };
    let json = to_json(&summary)?;
    write_artifact(&cli.out, "equidist.json", &json)?;
    println!("{json}");
    Ok(())
}

#[derive(serde::Serialize)]
struct MixSummary {
    manifest: RunManifest,
    k: i32,
    samples: u64,
    seed: u64,
    constant_re: f64,
    constant_im: f64,
    slope: Option<f64>,
    window: (f64, f64),
    points: usize,
    ci_low: Option<f64>,
    ci_high: Option<f64>,
    negative_confidence: Option<f64>,
}

fn cmd_mix(cli: &Cli, args: &MixArgs) -> Result<()> {
    let wb = Workbench::open(cli)?;
    let depth = wb.depth(args.depth);
    let (disc, delta, spectral) = wb.critical_data(depth)?;
    let chain = wb.chain(&disc, delta, &spectral)?;
    let f = parse_observable(&args.f)?;
    let g = parse_observable(&args.g)?;
    let steps = (args.t_max / args.t_step).round() as usize + 1;
    let t_grid: Vec<f64> = (0..steps).map(|i| i as f64 * args.t_step).collect();
    let report = correlate(&chain, args.k, f, g, &t_grid, args.samples, wb.seed)?;

    let mut csv = CsvBuilder::new(&["t", "corr_re", "corr_im", "stderr"]);
    for (i, &t) in report.series.t_grid.iter().enumerate() {
        csv.row(&[
            fmt_f64(t),
            fmt_f64(report.series.estimates_re[i]),
            fmt_f64(report.series.estimates_im[i]),
            fmt_f64(report.series.stderr[i]),
        ]);
    }
    write_artifact(&cli.out, "mix.csv", &csv.finish())?;

    let summary = MixSummary {
        manifest: wb
            .manifest("mix")
            .with_param("k", args.k)
            .with_param("f", &args.f)
            .with_param("g", &args.g)
            .with_param("t_max", fmt_f64(args.t_max))
            .with_param("t_step", fmt_f64(args.t_step))
            .with_param("samples", args.samples)
            .with_param("depth", depth),
        k: args.k,
        samples: args.samples,
        seed: wb.seed,
        constant_re: report.constant_re,
        constant_im: report.constant_im,
        slope: report.fit.slope,
        window: report.fit.window,
        points: report.fit.points,
        ci_low: report.fit.ci_low,
        ci_high: report.fit.ci_high,
        negative_confidence: report.fit.negative_confidence,
    };
    let json = to_json(&summary)?;
    write_artifact(&cli.out, "mix.json", &json)?;
    println!("{json}");

    // A constant catalogue pair has no decaying part; any other window
    // collapse means the signal is all noise.
    if report.fit.slope.is_none() && !(args.k == 0 && f.profile == FiberProfile::One) {
        return Err(Error::Indeterminate(
            "decay window empty: correlation is all noise".into(),
        ));
    }
    Ok(())
}

#[derive(serde::Serialize)]
struct MeasureSummary {
    manifest: RunManifest,
    depth: usize,
    roof_average: f64,
    doubling_sup_ratio: f64,
    doubling_per_scale: Vec<(f64, f64)>,
    skipped_pairs: usize,
    ncp_delta_star: f64,
    ncp_worst_direction: f64,
    ncp_worst_scale: f64,
}

fn cmd_measure(cli: &Cli, args: &MeasureArgs) -> Result<()> {
    let wb = Workbench::open(cli)?;
    let depth = wb.depth(args.depth);
    let (disc, _, spectral) = wb.critical_data(depth)?;
    let measure = equilibrium_measure(&spectral, depth);

    let extent = wb.scheme.extent();
    let scales: Vec<f64> = (0..args.scales)
        .map(|i| extent / 4.0 / f64::powi(2.0, i as i32))
        .collect();
    let doubling = doubling_ratio(&disc, &measure, args.centers, &scales)?;

    let eps: Vec<f64> = (0..3).map(|i| extent / 8.0 / f64::powi(2.0, i)).collect();
    let ncp = ncp_certificate(&disc, &measure, args.ncp_samples, &eps, args.directions)?;

    let mut csv = CsvBuilder::new(&["center_re", "center_im", "scale", "mass_eps", "mass_2eps"]);
    for row in &doubling.rows {
        csv.row(&[
            fmt_f64(row.center_re),
            fmt_f64(row.center_im),
            fmt_f64(row.scale),
            fmt_f64(row.mass_eps),
            fmt_f64(row.mass_2eps),
        ]);
    }
    write_artifact(&cli.out, "doubling.csv", &csv.finish())?;

    let summary = MeasureSummary {
        manifest: wb
            .manifest("measure")
            .with_param("depth", depth)
            .with_param("centers", args.centers)
            .with_param("scales", args.scales)
            .with_param("ncp_samples", args.ncp_samples)
            .with_param("directions", args.directions),
        depth,
        roof_average: roof_average(&measure, &wb.scheme, &disc),
        doubling_sup_ratio: doubling.sup_ratio,
        doubling_per_scale: doubling.per_scale.clone(),
        skipped_pairs: doubling.skipped,
        ncp_delta_star: ncp.delta_star,
        ncp_worst_direction: ncp.worst_direction,
        ncp_worst_scale: ncp.worst_scale,
    };
    let json = to_json(&summary)?;
    write_artifact(&cli.out, "measure.json", &json)?;
    println!("{json}");
    Ok(())
}

#[derive(serde::Serialize)]
struct NliSummary {
    manifest: RunManifest,
    epsilon_0: f64,
    epsilon_theta: f64,
    branch_words: Vec<String>,
    grid_points: usize,
}

fn cmd_nli(cli: &Cli, args: &NliArgs) -> Result<()> {
    let wb = Workbench::open(cli)?;
    let params = NliParams {
        order: args.order,
        branch_count: args.branches,
        grid: args.grid,
        am_directions: args.am_dirs,
        boundary_directions: args.boundary_dirs,
        fd_step_rel: args.fd_step,
        seed: wb.seed,
        base_symbol: 1,
    };
    let report = nli_certificate(&wb.scheme, &params)?;
    let summary = NliSummary {
        manifest: wb
            .manifest("nli")
            .with_param("order", args.order)
            .with_param("branches", args.branches)
            .with_param("grid", args.grid),
        epsilon_0: report.epsilon_0,
        epsilon_theta: report.epsilon_theta,
        branch_words: report.branch_words.clone(),
        grid_points: report.grid_points,
    };
    let json = to_json(&summary)?;
    write_artifact(&cli.out, "nli.json", &json)?;
    println!("{json}");
    Ok(())
}

#[derive(serde::Serialize)]
struct LaplaceSummary {
    manifest: RunManifest,
    xi: f64,
    k: i32,
    depth: usize,
    series_re: f64,
    series_im: f64,
    mc_re: f64,
    mc_im: f64,
    discrepancy: f64,
    mc_horizon: f64,
}

fn cmd_laplace(cli: &Cli, args: &LaplaceArgs) -> Result<()> {
    let wb = Workbench::open(cli)?;
    let depth = wb.depth(args.depth);
    let (disc, delta, spectral) = wb.critical_data(depth)?;
    let chain = wb.chain(&disc, delta, &spectral)?;
    let f = parse_observable(&args.f)?;
    let g = parse_observable(&args.g)?;
    let report = laplace_consistency(
        &disc,
        &spectral,
        &chain,
        delta,
        args.xi,
        args.k,
        args.k,
        f,
        g,
        args.terms,
        args.samples,
        wb.seed,
    )?;
    let summary = LaplaceSummary {
        manifest: wb
            .manifest("laplace")
            .with_param("depth", depth)
            .with_param("xi", fmt_f64(args.xi))
            .with_param("k", args.k)
            .with_param("terms", args.terms)
            .with_param("samples", args.samples),
        xi: report.xi,
        k: report.k,
        depth: report.depth,
        series_re: report.series_re,
        series_im: report.series_im,
        mc_re: report.mc_re,
        mc_im: report.mc_im,
        discrepancy: report.discrepancy,
        mc_horizon: report.mc_horizon,
    };
    let json = to_json(&summary)?;
    write_artifact(&cli.out, "laplace.json", &json)?;
    println!("{json}");
    Ok(())
}
