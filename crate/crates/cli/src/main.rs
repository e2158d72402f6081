//! `wnchaos`: evaluate chaos expressions and run the batch experiments.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use wnchaos::chaos::write_chaos;
use wnchaos::experiments::{self as exp, Report, Tolerances};
use wnchaos::lang::{self, Env, Value};
use wnchaos::{BasisLayout, Error, Result};

#[derive(Parser)]
#[command(name = "wnchaos", version, about = "White-noise chaos algebra toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate an expression (or a `let ...;` program) and print the result.
    Eval(EvalArgs),
    /// Run a batch experiment; exits 1 if any declared tolerance fails.
    Run {
        #[command(subcommand)]
        experiment: Experiment,
    },
}

#[derive(Args)]
struct EvalArgs {
    /// Source text; read from --file when absent.
    expr: Option<String>,
    #[arg(long)]
    file: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Mode cap J.
    #[arg(long, default_value_t = 8)]
    modes: usize,
    /// Order cap N.
    #[arg(long, default_value_t = 4)]
    order: usize,
    /// Print the parsed expression instead of evaluating it.
    #[arg(long)]
    print: bool,
}

#[derive(Args, Clone)]
struct Common {
    /// Output directory for CSV artifacts and manifest.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override a tolerance, `name=value`; repeatable.
    #[arg(long = "tol")]
    tol: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Experiment {
    HermiteSuite {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        jmax: Option<usize>,
        #[arg(long)]
        cd_nmax: Option<usize>,
        #[arg(long)]
        eigen_jmax: Option<usize>,
        #[arg(long)]
        sup_jmax: Option<usize>,
        #[arg(long)]
        sup_spacing: Option<f64>,
    },
    AlgebraSuite {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        triples: Option<usize>,
        #[arg(long)]
        pairs: Option<usize>,
        #[arg(long)]
        exp_order: Option<usize>,
    },
    EmbedStudy {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        element: Option<String>,
        /// Number of levels M.
        #[arg(long = "M")]
        levels: Option<usize>,
        /// Comma-separated first-order coefficients.
        #[arg(long)]
        f: Option<String>,
        #[arg(long)]
        order_cap: Option<usize>,
        #[arg(long)]
        a_grid: Option<String>,
        #[arg(long)]
        p_grid: Option<String>,
    },
    NoiseGrowth {
        #[command(flatten)]
        common: Common,
        /// Comma-separated points.
        #[arg(long)]
        x: Option<String>,
        #[arg(long = "M")]
        levels: Option<usize>,
    },
    DonskerCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
    },
    SpdeSolve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        mc: Mc,
        #[arg(long, default_value = "heat-gaussian")]
        preset: String,
        /// Comma-separated points.
        #[arg(long)]
        x: Option<String>,
        /// Noise levels: `a..b` (inclusive), a comma list, or `none`.
        #[arg(long)]
        m: Option<String>,
        #[arg(long)]
        order: Option<usize>,
    },
    SpdeResidual {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        mc: Mc,
        #[arg(long, default_value = "heat-plus-noise")]
        preset: String,
        #[arg(long)]
        x: Option<f64>,
        /// Noise level or `none`.
        #[arg(long)]
        m: Option<String>,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        h_t: Option<f64>,
        #[arg(long)]
        h_x: Option<f64>,
        #[arg(long)]
        batches: Option<usize>,
    },
    SpdeCompareWick {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        mc: Mc,
        #[arg(long, default_value = "heat-plus-noise")]
        preset: String,
        #[arg(long)]
        x: Option<f64>,
        #[arg(long)]
        m: Option<String>,
        #[arg(long)]
        stable_m: Option<String>,
    },
    Uniqueness {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        mc: Mc,
        #[arg(long, default_value = "heat-plus-noise")]
        preset: String,
        #[arg(long)]
        x: Option<f64>,
        #[arg(long)]
        m: Option<usize>,
        /// Noise level of the second run (defaults to --m).
        #[arg(long)]
        m2: Option<usize>,
        #[arg(long)]
        order: Option<usize>,
    },
}

#[derive(Args, Clone)]
struct Mc {
    /// Monte-Carlo paths.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
}

fn list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Error::Config(format!("{what}: `{v}` is not a valid entry")))
        })
        .collect()
}

/// `a..b` inclusive, a comma list, or `none`.
fn levels(s: &str) -> Result<Option<Vec<usize>>> {
    if s == "none" {
        return Ok(None);
    }
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| Error::Config(format!("bad range `{s}`")))?;
        let b: usize = b.trim().parse().map_err(|_| Error::Config(format!("bad range `{s}`")))?;
        if a > b {
            return Err(Error::Config(format!("empty range `{s}`")));
        }
        return Ok(Some((a..=b).collect()));
    }
    list(s, "--m").map(Some)
}

fn tolerances(common: &Common) -> Result<Tolerances> {
    let mut t = Tolerances::new();
    for s in &common.tol {
        t.parse_assignment(s)?;
    }
    Ok(t)
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn run_experiment(e: Experiment) -> Result<(Report, Common)> {
    Ok(match e {
        Experiment::HermiteSuite { common, jmax, cd_nmax, eigen_jmax, sup_jmax, sup_spacing } => {
            let mut c = exp::HermiteConfig::default();
            set(&mut c.jmax, jmax);
            set(&mut c.cd_nmax, cd_nmax);
            set(&mut c.eigen_jmax, eigen_jmax);
            set(&mut c.sup_jmax, sup_jmax);
            set(&mut c.sup_spacing, sup_spacing);
            (exp::hermite_suite(&c, &tolerances(&common)?)?, common)
        }
        Experiment::AlgebraSuite { common, triples, pairs, exp_order } => {
            let mut c = exp::AlgebraConfig { seed: common.seed, ..Default::default() };
            set(&mut c.triples, triples);
            set(&mut c.pairs, pairs);
            set(&mut c.exp_order, exp_order);
            (exp::algebra_suite(&c, &tolerances(&common)?)?, common)
        }
        Experiment::EmbedStudy { common, element, levels, f, order_cap, a_grid, p_grid } => {
            let mut c = exp::EmbedConfig::default();
            set(&mut c.element, element);
            set(&mut c.levels, levels);
            set(&mut c.order_cap, order_cap);
            set(&mut c.f, f.map(|s| list(&s, "--f")).transpose()?);
            set(&mut c.a_grid, a_grid.map(|s| list(&s, "--a-grid")).transpose()?);
            set(&mut c.p_grid, p_grid.map(|s| list(&s, "--p-grid")).transpose()?);
            (exp::embed_study(&c, &tolerances(&common)?)?, common)
        }
        Experiment::NoiseGrowth { common, x, levels } => {
            let mut c = exp::NoiseGrowthConfig::default();
            set(&mut c.xs, x.map(|s| list(&s, "--x")).transpose()?);
            set(&mut c.levels, levels);
            (exp::noise_growth(&c, &tolerances(&common)?)?, common)
        }
        Experiment::DonskerCheck { common, n, eps } => {
            let mut c = exp::DonskerConfig { seed: common.seed, ..Default::default() };
            set(&mut c.n, n);
            set(&mut c.eps, eps);
            (exp::donsker_check(&c, &tolerances(&common)?)?, common)
        }
        Experiment::SpdeSolve { common, mc, preset, x, m, order } => {
            let mut c = exp::SolveConfig::for_preset(&preset)?;
            c.seed = common.seed;
            set(&mut c.n_paths, mc.n);
            set(&mut c.dt, mc.dt);
            set(&mut c.t, mc.t);
            set(&mut c.xs, x.map(|s| list(&s, "--x")).transpose()?);
            set(&mut c.ms, m.map(|s| levels(&s)).transpose()?);
            set(&mut c.order, order);
            (exp::spde_solve(&c, &tolerances(&common)?)?, common)
        }
        Experiment::SpdeResidual { common, mc, preset, x, m, order, h_t, h_x, batches } => {
            let mut c = exp::ResidualRunConfig::for_preset(&preset)?;
            c.seed = common.seed;
            set(&mut c.n_paths, mc.n);
            set(&mut c.dt, mc.dt);
            set(&mut c.t, mc.t);
            set(&mut c.x, x);
            if let Some(m) = m {
                c.m = if m == "none" {
                    None
                } else {
                    Some(m.parse().map_err(|_| Error::Config(format!("--m: `{m}` is not a level")))?)
                };
            }
            set(&mut c.order, order);
            set(&mut c.h_t, h_t);
            set(&mut c.h_x, h_x);
            set(&mut c.batches, batches);
            (exp::spde_residual(&c, &tolerances(&common)?)?, common)
        }
        Experiment::SpdeCompareWick { common, mc, preset, x, m, stable_m } => {
            let mut c = exp::CompareConfig { preset, seed: common.seed, ..Default::default() };
            set(&mut c.n_paths, mc.n);
            set(&mut c.dt, mc.dt);
            set(&mut c.t, mc.t);
            set(&mut c.x, x);
            if let Some(m) = m {
                c.ms = levels(&m)?.ok_or_else(|| Error::Config("--m none is meaningless here".into()))?;
            }
            set(&mut c.stable_ms, stable_m.map(|s| list(&s, "--stable-m")).transpose()?);
            (exp::spde_compare_wick(&c, &tolerances(&common)?)?, common)
        }
        Experiment::Uniqueness { common, mc, preset, x, m, m2, order } => {
            let mut c = exp::UniquenessConfig {
                preset,
                seeds: (common.seed.wrapping_add(1), common.seed.wrapping_add(2)),
                ..Default::default()
            };
            set(&mut c.n_paths, mc.n);
            set(&mut c.dt, mc.dt);
            set(&mut c.t, mc.t);
            set(&mut c.x, x);
            set(&mut c.order, order);
            if let Some(m) = m {
                c.ms = (m, m2.unwrap_or(m));
            } else if let Some(m2) = m2 {
                c.ms.1 = m2;
            }
            (exp::uniqueness(&c, &tolerances(&common)?)?, common)
        }
    })
}

fn eval(args: EvalArgs) -> Result<()> {
    let src = match (&args.expr, &args.file) {
        (Some(s), None) => s.clone(),
        (None, Some(p)) => std::fs::read_to_string(p)?,
        _ => return Err(Error::Config("give either an expression or --file".into())),
    };
    let prog = lang::parse_program(&src)?;
    if args.print {
        println!("{prog}");
        return Ok(());
    }
    let mut env = Env::new(BasisLayout::new(args.dim, args.modes, args.order)?);
    match lang::eval_program(&prog, &mut env)? {
        Value::Real(v) => println!("{v}"),
        Value::Chaos(c) => print!("{}", write_chaos(&c)),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Eval(args) => eval(args).map(|_| true),
        Command::Run { experiment } => run_experiment(experiment).and_then(|(report, common)| {
            print!("{}", report.summary());
            if let Some(dir) = &common.out {
                report.write_to(dir)?;
            }
            Ok(report.passed())
        }),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
