use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use cantorlab::config::{ExperimentConfig, ReferenceSpec, RegimeChoice};
use cantorlab::experiment::{run_experiment, write_csv, write_json, Reference};
use cantorlab::shorthand::{parse_base, parse_map};
use cantorlab::{preset, LabError, LabResult, PRESETS};
use cantorlab_core::empirical::{kolmogorov, star_discrepancy, wasserstein1, EmpiricalCdf};
use cantorlab_core::limitlaw::{limit_cdf_conv, limit_cdf_invert, CfProduct, DEFAULT_T_MAX};
use cantorlab_core::markov::{covariance_decay, window_variance_profile, DigitChain};
use cantorlab_core::window::{resolve_regime, BoundShape, WindowModel};
use cantorlab_core::CantorBase;
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "cantorlab",
    version,
    about = "Q-additive functions over Cantor bases: limit laws, distances and window bounds"
)]
struct Cli {
    /// Experiment config (JSON); supplies base, map and defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Start from a named preset instead of a config file.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Base: `2`, `periodic:2,3`, `affine:c,d`, `factorial`, or JSON.
    #[arg(long, global = true)]
    base: Option<String>,
    /// Digit map: `radical-inverse`, `polynomial:A`, `geometric:B`,
    /// `symmetric-ternary`, `skewed-polyweight`, `zero`, or JSON.
    #[arg(long, global = true)]
    map: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (directory for `experiment`); standard output otherwise.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Digits of N, lowest level first.
    Expand { n: Vec<u64> },
    /// f(n) for the listed n, or for every n in [from, to).
    Eval {
        n: Vec<u64>,
        #[arg(long)]
        from: Option<u64>,
        #[arg(long)]
        to: Option<u64>,
    },
    /// Per-level digit statistics.
    Stats {
        #[arg(long, default_value_t = 20)]
        levels: usize,
    },
    /// Convergence diagnosis of the digit mean and variance series.
    Ewcheck {
        #[arg(long, default_value_t = 4096)]
        j_max: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Truncated characteristic-function product.
    Cf {
        #[arg(long, default_value_t = 40)]
        depth: usize,
        /// Comma-separated t values; defaults to 201 points on [-10, 10].
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        t: Vec<f64>,
    },
    /// Reference CDF of the limit law.
    Limit {
        #[arg(long, value_enum, default_value_t = LimitMethod::Conv)]
        method: LimitMethod,
        /// Evaluation points for inversion (comma-separated).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Vec<f64>,
        #[arg(long, default_value_t = 64)]
        depth: usize,
        #[arg(long, default_value_t = DEFAULT_T_MAX)]
        t_max: f64,
    },
    /// Kolmogorov and Wasserstein distances of F_N to the reference law.
    Empirical {
        #[arg(long)]
        n: u64,
        #[command(flatten)]
        reference: RefArgs,
    },
    /// The window bound at one (h, T).
    Bound {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        h: usize,
        #[arg(long)]
        t: Option<f64>,
        #[command(flatten)]
        window: WindowArgs,
        #[command(flatten)]
        reference: RefArgs,
    },
    /// The window bound minimized over (h, T).
    Optimize {
        #[arg(long)]
        n: u64,
        #[command(flatten)]
        window: WindowArgs,
        #[command(flatten)]
        reference: RefArgs,
    },
    /// Star discrepancy of {f(n) : n < N} (values must lie in [0, 1]).
    Discrepancy {
        #[arg(long)]
        n: u64,
    },
    /// Markov digit source: stationary law, gap, covariance decay and
    /// window variances.
    Markov {
        /// Transition matrix as JSON rows.
        #[arg(long, default_value = "[[0.9,0.1],[0.1,0.9]]")]
        chain: String,
        /// Digit values as a JSON list, one per state.
        #[arg(long, default_value = "[0,1]")]
        values: String,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 20)]
        r_max: usize,
        #[arg(long, default_value_t = 20)]
        h_max: usize,
    },
    /// Run a full experiment (config or preset) and write CSV and JSON.
    Experiment {
        /// Print the resolved config instead of running it.
        #[arg(long)]
        print_config: bool,
    },
    /// List the built-in presets.
    PresetList,
}

#[derive(Clone, Copy, ValueEnum)]
enum LimitMethod {
    Conv,
    Invert,
}

#[derive(Args)]
struct RefArgs {
    /// `grid` or `uniform:a,b`; defaults to the config's reference.
    #[arg(long)]
    reference: Option<String>,
}

#[derive(Args)]
struct WindowArgs {
    /// auto, A, B or C.
    #[arg(long)]
    regime: Option<String>,
    #[arg(long)]
    rho_inf: Option<f64>,
    #[arg(long, value_enum)]
    shape: Option<ShapeArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ShapeArg {
    Corollary,
    Unified,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn base_config(cli: &Cli) -> LabResult<ExperimentConfig> {
    let mut cfg = match (&cli.config, &cli.preset) {
        (Some(path), _) => ExperimentConfig::from_path(path)?,
        (None, Some(name)) => preset(name)?,
        (None, None) => preset("vdc-q2")?,
    };
    if let Some(b) = &cli.base {
        cfg.base = parse_base(b)?;
    }
    if let Some(m) = &cli.map {
        cfg.map = parse_map(m)?;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    // Short-form overrides may invalidate the reference of the source config.
    if (cli.base.is_some() || cli.map.is_some()) && cli.config.is_none() && cli.preset.is_none() {
        cfg.reference = ReferenceSpec::Grid;
        cfg.rho_inf = None;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output(out: &Option<PathBuf>) -> LabResult<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| LabError::io(p.display().to_string(), e))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn io_err(e: io::Error) -> LabError {
    LabError::io("output", e)
}

fn parse_reference(args: &RefArgs, cfg: &ExperimentConfig) -> LabResult<ReferenceSpec> {
    let Some(s) = &args.reference else {
        return Ok(cfg.reference);
    };
    match s.split_once(':') {
        None if s == "grid" => Ok(ReferenceSpec::Grid),
        Some(("uniform", ab)) => {
            let (a, b) = ab
                .split_once(',')
                .ok_or_else(|| LabError::config("--reference", "uniform needs `a,b`"))?;
            let p = |v: &str| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| LabError::config("--reference", e))
            };
            Ok(ReferenceSpec::Uniform { a: p(a)?, b: p(b)? })
        }
        _ => Err(LabError::config(
            "--reference",
            format!("expected `grid` or `uniform:a,b`, got `{s}`"),
        )),
    }
}

fn window_settings(
    args: &WindowArgs,
    cfg: &ExperimentConfig,
) -> LabResult<(RegimeChoice, Option<f64>, BoundShape)> {
    let regime = match args.regime.as_deref() {
        None => cfg.regime,
        Some(r) => serde_json::from_value(json!(r)).map_err(|e| LabError::config("--regime", e))?,
    };
    let rho = args.rho_inf.or(cfg.rho_inf);
    let shape = match args.shape {
        None => cfg.shape,
        Some(ShapeArg::Corollary) => BoundShape::Corollary,
        Some(ShapeArg::Unified) => BoundShape::Unified,
    };
    Ok((regime, rho, shape))
}

fn run(cli: &Cli) -> LabResult<u8> {
    if let Cmd::PresetList = cli.cmd {
        let mut w = output(&cli.out)?;
        for (name, about) in PRESETS {
            writeln!(w, "{name:<22} {about}").map_err(io_err)?;
        }
        w.flush().map_err(io_err)?;
        return Ok(0);
    }
    let cfg = base_config(cli)?;
    let base = CantorBase::new(cfg.base.clone())?;
    let map = &cfg.map;

    match &cli.cmd {
        Cmd::PresetList => unreachable!(),
        Cmd::Expand { n } => {
            let mut w = output(&cli.out)?;
            writeln!(w, "N,L,digits").map_err(io_err)?;
            for &v in n {
                let e = base.expand(v);
                let ds: Vec<String> = e.digits().iter().map(u64::to_string).collect();
                writeln!(w, "{v},{},{}", base.length(v), ds.join(" ")).map_err(io_err)?;
            }
            w.flush().map_err(io_err)?;
        }
        Cmd::Eval { n, from, to } => {
            let mut w = output(&cli.out)?;
            writeln!(w, "n,f").map_err(io_err)?;
            let range = match (from, to) {
                (Some(a), Some(b)) => *a..*b,
                (None, None) => 0..0,
                _ => {
                    return Err(LabError::config(
                        "--from/--to",
                        "give both ends of the range",
                    ))
                }
            };
            for v in n.iter().copied().chain(range) {
                writeln!(w, "{v},{}", map.eval(&base, v)).map_err(io_err)?;
            }
            w.flush().map_err(io_err)?;
        }
        Cmd::Stats { levels } => {
            let mut w = output(&cli.out)?;
            writeln!(w, "j,a_j,mean,var,omega,mu3,mu3_zero").map_err(io_err)?;
            for j in 0..*levels {
                let s = map.digit_stats(&base, j)?;
                writeln!(
                    w,
                    "{j},{},{},{},{},{},{}",
                    base.radix(j),
                    s.mean,
                    s.var,
                    s.omega,
                    s.mu3,
                    s.mu3_zero
                )
                .map_err(io_err)?;
            }
            w.flush().map_err(io_err)?;
        }
        Cmd::Ewcheck { j_max, tol } => {
            let d = map.ew_diagnose(&base, *j_max, *tol)?;
            eprintln!(
                "verdict: {:?} ({})",
                d.verdict,
                if d.analytic {
                    "analytic"
                } else {
                    "block heuristic"
                }
            );
            let mut w = output(&cli.out)?;
            writeln!(w, "j,mean_partial,var_partial").map_err(io_err)?;
            for (j, m, v) in &d.trace {
                writeln!(w, "{j},{m},{v}").map_err(io_err)?;
            }
            w.flush().map_err(io_err)?;
        }
        Cmd::Cf { depth, t } => {
            let cf = CfProduct::new(map, &base, *depth)?;
            let ts: Vec<f64> = if t.is_empty() {
                (0..=200).map(|k| -10.0 + k as f64 * 0.1).collect()
            } else {
                t.clone()
            };
            let mut w = output(&cli.out)?;
            writeln!(w, "t,re,im,err").map_err(io_err)?;
            for t in ts {
                let (v, err) = cf.eval(t);
                let err = err.map(|e| e.to_string()).unwrap_or_default();
                writeln!(w, "{t},{},{},{err}", v.re, v.im).map_err(io_err)?;
            }
            w.flush().map_err(io_err)?;
        }
        Cmd::Limit {
            method,
            x,
            depth,
            t_max,
        } => match method {
            LimitMethod::Conv => {
                let g = limit_cdf_conv(map, &base, &cfg.grid)?;
                info!(
                    "{} knots, eps_x {:e}, eps_p {:e}, {} levels",
                    g.len(),
                    g.eps_x,
                    g.eps_p,
                    g.levels
                );
                let mut w = output(&cli.out)?;
                writeln!(w, "x,cdf").map_err(io_err)?;
                for (x, c) in g.knots() {
                    writeln!(w, "{x},{c}").map_err(io_err)?;
                }
                w.flush().map_err(io_err)?;
            }
            LimitMethod::Invert => {
                let cf = CfProduct::new(map, &base, *depth)?;
                if x.is_empty() {
                    return Err(LabError::config("--x", "inversion needs evaluation points"));
                }
                let inv = limit_cdf_invert(&cf, x, *t_max)?;
                let mut w = output(&cli.out)?;
                writeln!(w, "x,cdf,envelope").map_err(io_err)?;
                for i in 0..inv.xs.len() {
                    writeln!(w, "{},{},{}", inv.xs[i], inv.values[i], inv.envelope[i])
                        .map_err(io_err)?;
                }
                w.flush().map_err(io_err)?;
            }
        },
        Cmd::Empirical { n, reference } => {
            let spec = parse_reference(reference, &cfg)?;
            let r = Reference::build(spec, map, &base, &cfg)?;
            let ecdf = EmpiricalCdf::enumerate(map, &base, *n, cfg.enumeration_cap)?;
            let dk = kolmogorov(&ecdf, r.as_dyn());
            let w1 = wasserstein1(&ecdf, r.as_dyn());
            let mut w = output(&cli.out)?;
            serde_json::to_writer_pretty(&mut w, &json!({ "n": n, "dk": dk, "w1": w1 }))?;
            writeln!(w).map_err(io_err)?;
            w.flush().map_err(io_err)?;
        }
        Cmd::Bound {
            n,
            h,
            t,
            window,
            reference,
        } => {
            let report = window_report(&cfg, &base, *n, Some((*h, *t)), window, reference)?;
            return emit_report(&cli.out, &report);
        }
        Cmd::Optimize {
            n,
            window,
            reference,
        } => {
            let report = window_report(&cfg, &base, *n, None, window, reference)?;
            return emit_report(&cli.out, &report);
        }
        Cmd::Discrepancy { n } => {
            let ecdf = EmpiricalCdf::enumerate(map, &base, *n, cfg.enumeration_cap)?;
            let d = star_discrepancy(ecdf.samples())?;
            let mut w = output(&cli.out)?;
            writeln!(w, "{d}").map_err(io_err)?;
            w.flush().map_err(io_err)?;
        }
        Cmd::Markov {
            chain,
            values,
            samples,
            r_max,
            h_max,
        } => {
            let rows: Vec<Vec<f64>> =
                serde_json::from_str(chain).map_err(|e| LabError::config("--chain", e))?;
            let vals: Vec<f64> =
                serde_json::from_str(values).map_err(|e| LabError::config("--values", e))?;
            let c = DigitChain::new(&rows)?;
            let decay = covariance_decay(&c, &vals, *r_max, *samples, cfg.seed)?;
            let weights = vec![1.0; *h_max];
            let profile =
                window_variance_profile(&c, &vals, &weights, *samples / *h_max as u64, cfg.seed)?;
            let mut w = output(&cli.out)?;
            let doc = json!({
                "stationary": c.stationary(),
                "lambda": c.lambda(),
                "log_lambda": c.lambda().ln(),
                "decay": decay,
                "window_variance": profile,
            });
            serde_json::to_writer_pretty(&mut w, &doc)?;
            writeln!(w).map_err(io_err)?;
            w.flush().map_err(io_err)?;
        }
        Cmd::Experiment { print_config } => {
            if *print_config {
                let mut w = output(&cli.out)?;
                writeln!(w, "{}", cfg.to_json()).map_err(io_err)?;
                w.flush().map_err(io_err)?;
                return Ok(0);
            }
            let result = run_experiment(&cfg)?;
            let (csv_path, json_path) = match &cli.out {
                Some(dir) => {
                    std::fs::create_dir_all(dir)
                        .map_err(|e| LabError::io(dir.display().to_string(), e))?;
                    (
                        Some(dir.join("results.csv")),
                        Some(dir.join("results.json")),
                    )
                }
                None => (cfg.outputs.csv.clone(), cfg.outputs.json.clone()),
            };
            write_csv(&result.rows, output(&csv_path)?)?;
            if let Some(p) = json_path {
                write_json(&result, output(&Some(p.clone()))?)?;
                info!("wrote {}", p.display());
            }
            if result.conditional() {
                log::warn!("tau1 unavailable (no tail metadata): totals are conditional");
                return Ok(4);
            }
        }
    }
    Ok(0)
}

fn window_report(
    cfg: &ExperimentConfig,
    base: &CantorBase,
    n: u64,
    at: Option<(usize, Option<f64>)>,
    window: &WindowArgs,
    reference: &RefArgs,
) -> LabResult<cantorlab_core::window::WindowBoundReport> {
    let (choice, rho, shape) = window_settings(window, cfg)?;
    let l = base.length(n);
    let model = WindowModel::new(&cfg.map, base, l)?;
    let regime = resolve_regime(choice.fixed(), rho, model.mu3_vanishes(l)?);
    let r = Reference::build(parse_reference(reference, cfg)?, &cfg.map, base, cfg)?;
    Ok(match at {
        Some((h, t)) => model.total_bound(n, h, t, regime, rho, r.as_dyn(), shape)?,
        None => model.optimize_window(n, regime, rho, r.as_dyn(), shape)?,
    })
}

fn emit_report(
    out: &Option<PathBuf>,
    report: &cantorlab_core::window::WindowBoundReport,
) -> LabResult<u8> {
    let mut w = output(out)?;
    serde_json::to_writer_pretty(&mut w, report)?;
    writeln!(w).map_err(io_err)?;
    w.flush().map_err(io_err)?;
    Ok(if report.conditional { 4 } else { 0 })
}
