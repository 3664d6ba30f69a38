use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cpal::dynamics::{integrate, Mode, SimConfig, Simulator, StepRule};
use cpal::equilibrium::{
    beta_sweep, construct_strict_pure_ve, enumerate_pure_ve, equilibria_to_json, find_all,
    geometric_schedule, paths_to_json, solve_fixed_point, MultiStart, SweepConfig,
};
use cpal::format::{load_tree, reduced_to_json, write_events_csv, write_trajectory_csv, TreeDocument};
use cpal::reproduce::{self, Suite};
use cpal::stability::report;
use cpal::tree::{reduce, RawTree, ReducedTree};
use cpal::{fixtures, CpalError, Result};

#[derive(Parser)]
#[command(name = "cpal", version, about = "Coarse payoff-assessment learning toolkit")]
struct Cli {
    /// Worker threads (defaults to CPAL_THREADS, then all cores).
    #[arg(long, global = true, env = "CPAL_THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory for artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    quiet: bool,
    /// Machine-readable results on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args)]
struct TreeArgs {
    /// Raw or reduced tree JSON.
    tree: PathBuf,
    /// Added to every single-class payoff after loading.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    z_shift: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Reduced,
    Raw,
}

#[derive(Subcommand)]
enum Cmd {
    /// Reduce a raw tree and write the reduced form.
    Reduce {
        tree: PathBuf,
        /// Output file (defaults to <out>/reduced.json, or stdout without --out).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the stochastic learning process.
    Simulate {
        #[command(flatten)]
        tree: TreeArgs,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 10_000)]
        horizon: u64,
        /// harmonic, constant:<alpha> or power:<gamma>.
        #[arg(long, default_value = "harmonic")]
        step: String,
        #[arg(long, default_value_t = 1)]
        record_every: u64,
        #[arg(long, value_enum, default_value = "reduced")]
        mode: ModeArg,
        /// Comma-separated start valuations (defaults to the payoff box centre).
        #[arg(long, allow_hyphen_values = true)]
        v0: Option<String>,
    },
    /// Integrate the mean-field ODE with RK4.
    Integrate {
        #[command(flatten)]
        tree: TreeArgs,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 30.0)]
        t_end: f64,
        #[arg(long, default_value_t = 0.01)]
        h: f64,
        #[arg(long, allow_hyphen_values = true)]
        v0: Option<String>,
    },
    /// Find equilibria at one sensitivity.
    Solve {
        #[command(flatten)]
        tree: TreeArgs,
        #[arg(long)]
        beta: f64,
        /// Random interior starts.
        #[arg(long, default_value_t = 64)]
        m: usize,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Solve from this start only.
        #[arg(long, allow_hyphen_values = true)]
        v0: Option<String>,
    },
    /// Continue equilibria along a geometric beta schedule.
    Sweep {
        #[command(flatten)]
        tree: TreeArgs,
        #[arg(long, default_value_t = 1.0)]
        beta_start: f64,
        #[arg(long, default_value_t = 1e4)]
        beta_end: f64,
        #[arg(long, default_value_t = 1.5)]
        ratio: f64,
        /// Seed valuation (defaults to every equilibrium at the first beta).
        #[arg(long, allow_hyphen_values = true)]
        v0: Option<String>,
        #[arg(long, default_value_t = 64)]
        m: usize,
    },
    /// Stability reports at equilibria (or at a given point).
    Stability {
        #[command(flatten)]
        tree: TreeArgs,
        #[arg(long)]
        beta: f64,
        #[arg(long, allow_hyphen_values = true)]
        at: Option<String>,
        #[arg(long, default_value_t = 64)]
        m: usize,
    },
    /// Enumerate strict pure valuation equilibria.
    Enumerate {
        #[command(flatten)]
        tree: TreeArgs,
        /// Also run the greedy construction.
        #[arg(long)]
        construct: bool,
    },
    /// Run the acceptance suite on the built-in trees.
    Reproduce {
        /// Replace the single-class payoff of L in the unique-pure tree.
        #[arg(long, allow_hyphen_values = true)]
        pure_z2: Option<f64>,
    },
}

struct Ctx {
    out: Option<PathBuf>,
    quiet: bool,
    json: bool,
    seed: u64,
}

impl Ctx {
    fn dir(&self) -> Result<PathBuf> {
        let d = self.out.clone().unwrap_or_else(|| PathBuf::from("."));
        fs::create_dir_all(&d)?;
        Ok(d)
    }

    fn say(&self, text: &str) {
        if !self.quiet {
            print!("{text}");
        }
    }

    fn write(&self, name: &str, content: &str) -> Result<PathBuf> {
        let path = self.dir()?.join(name);
        fs::write(&path, content)?;
        Ok(path)
    }
}

fn parse_vec(s: &str, n: usize) -> Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| CpalError::Validation(format!("bad vector {s:?}: {e}")))?;
    if v.len() != n || v.iter().any(|x| !x.is_finite()) {
        return Err(CpalError::Validation(format!("expected {n} finite comma-separated values, got {s:?}")));
    }
    Ok(v)
}

fn parse_step(s: &str) -> Result<StepRule> {
    let rule = match s.split_once(':') {
        None if s == "harmonic" => StepRule::Harmonic,
        Some(("constant", a)) => StepRule::Constant(a.parse().map_err(|_| CpalError::Validation(format!("bad step {s:?}")))?),
        Some(("power", g)) => StepRule::Power(g.parse().map_err(|_| CpalError::Validation(format!("bad step {s:?}")))?),
        _ => return Err(CpalError::Validation(format!("unknown step rule {s:?}"))),
    };
    rule.validate()?;
    Ok(rule)
}

fn check_beta(beta: f64) -> Result<()> {
    if beta >= 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(CpalError::Validation(format!("beta {beta} must be finite and >= 0")))
    }
}

fn load(args: &TreeArgs) -> Result<(ReducedTree, Option<RawTree>)> {
    let (t, raw) = match load_tree(&args.tree)? {
        TreeDocument::Raw(raw) => (reduce(&raw)?, Some(raw)),
        TreeDocument::Reduced(t) => (t, None),
    };
    t.genericity_warnings();
    if args.z_shift != 0.0 {
        Ok((t.shift_unary_payoffs(args.z_shift), None))
    } else {
        Ok((t, raw))
    }
}

fn start(t: &ReducedTree, v0: &Option<String>) -> Result<Vec<f64>> {
    match v0 {
        Some(s) => parse_vec(s, t.n_classes()),
        None => Ok(t.payoff_box().center()),
    }
}

fn multistart(m: usize, seed: u64) -> MultiStart {
    MultiStart { m, seed, ..MultiStart::default() }
}

fn fmt_v(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(", ")
}

fn run(cli: Cli) -> Result<ExitCode> {
    let ctx = Ctx { out: cli.out, quiet: cli.quiet, json: cli.json, seed: cli.seed };
    match cli.cmd {
        Cmd::Reduce { tree, output } => {
            let t = load_tree(&tree)?.into_reduced()?;
            let text = reduced_to_json(&t);
            let target = output.or_else(|| ctx.out.as_ref().map(|d| d.join("reduced.json")));
            match target {
                Some(path) => {
                    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                        fs::create_dir_all(parent)?;
                    }
                    fs::write(&path, &text)?;
                    let mut table = String::from("classes                          prob                  payoffs\n");
                    for st in t.states() {
                        let names: Vec<&str> = st.members().iter().map(|&c| t.classes()[c].as_str()).collect();
                        let pays: Vec<String> = st.payoffs().iter().map(|x| format!("{x}")).collect();
                        table.push_str(&format!("{:<32} {:<21} {}\n", names.join("|"), st.probability().to_string(), pays.join(", ")));
                    }
                    table.push_str(&format!("wrote {}\n", path.display()));
                    ctx.say(&table);
                }
                None => print!("{text}"),
            }
        }
        Cmd::Simulate { tree, beta, horizon, step, record_every, mode, v0 } => {
            check_beta(beta)?;
            let (t, raw) = load(&tree)?;
            let cfg = SimConfig {
                beta,
                horizon,
                step_rule: parse_step(&step)?,
                seed: ctx.seed,
                record_every,
                mode: match mode {
                    ModeArg::Reduced => Mode::Reduced,
                    ModeArg::Raw => Mode::Raw,
                },
                stream: 0,
            };
            let v0 = start(&t, &v0)?;
            let traj = Simulator::new(&t, cfg, raw.as_ref())?.run(&v0);
            let dir = ctx.dir()?;
            let mut f = std::io::BufWriter::new(fs::File::create(dir.join("trajectory.csv"))?);
            write_trajectory_csv(&mut f, t.classes(), &traj)?;
            f.flush()?;
            let mut f = std::io::BufWriter::new(fs::File::create(dir.join("events.csv"))?);
            write_events_csv(&mut f, &t, &traj.events)?;
            f.flush()?;
            let last = traj.last().expect("start is recorded");
            ctx.say(&format!("final valuations ({}) after {horizon} steps\n", fmt_v(last)));
        }
        Cmd::Integrate { tree, beta, t_end, h, v0 } => {
            let (t, _) = load(&tree)?;
            let v0 = start(&t, &v0)?;
            let traj = integrate(&v0, &t, beta, t_end, h)?;
            let path = ctx.dir()?.join("trajectory.csv");
            let mut f = std::io::BufWriter::new(fs::File::create(&path)?);
            write_trajectory_csv(&mut f, t.classes(), &traj)?;
            f.flush()?;
            ctx.say(&format!("v({t_end}) = ({})\n", fmt_v(traj.last().expect("start is recorded"))));
        }
        Cmd::Solve { tree, beta, m, tol, v0 } => {
            check_beta(beta)?;
            let (t, _) = load(&tree)?;
            let eqs = match v0 {
                Some(s) => vec![solve_fixed_point(&parse_vec(&s, t.n_classes())?, &t, beta, tol)?],
                None => {
                    let mut ms = multistart(m, ctx.seed);
                    ms.solver.tol = tol;
                    find_all(&t, beta, &ms)?
                }
            };
            let text = equilibria_to_json(&eqs, &t);
            ctx.write("equilibria.json", &text)?;
            if ctx.json {
                print!("{text}");
            } else {
                let mut s = format!("{} equilibria at beta {beta}\n", eqs.len());
                for e in &eqs {
                    s.push_str(&format!("  ({})  {}  residual {:.1e}\n", fmt_v(&e.v_star), e.classification, e.residual));
                }
                ctx.say(&s);
            }
        }
        Cmd::Sweep { tree, beta_start, beta_end, ratio, v0, m } => {
            let (t, _) = load(&tree)?;
            let betas = geometric_schedule(beta_start, beta_end, ratio)?;
            let seeds = match v0 {
                Some(s) => vec![parse_vec(&s, t.n_classes())?],
                None => find_all(&t, betas[0], &multistart(m, ctx.seed))?
                    .into_iter()
                    .map(|e| e.v_star.into_inner())
                    .collect(),
            };
            let paths = beta_sweep(&t, &betas, &seeds, &SweepConfig::default())?;
            let text = paths_to_json(&paths, &t);
            ctx.write("paths.json", &text)?;
            if ctx.json {
                print!("{text}");
            } else {
                let mut s = String::new();
                for p in &paths {
                    if let Some(e) = p.last() {
                        s.push_str(&format!(
                            "path ending at beta {} : ({}) {} [{:?}]\n",
                            e.beta,
                            fmt_v(&e.v_star),
                            e.classification,
                            p.termination
                        ));
                    }
                }
                ctx.say(&s);
            }
        }
        Cmd::Stability { tree, beta, at, m } => {
            check_beta(beta)?;
            let (t, _) = load(&tree)?;
            let points: Vec<Vec<f64>> = match at {
                Some(s) => vec![parse_vec(&s, t.n_classes())?],
                None => find_all(&t, beta, &multistart(m, ctx.seed))?
                    .into_iter()
                    .map(|e| e.v_star.into_inner())
                    .collect(),
            };
            let reports = points.iter().map(|v| report(v, &t, beta)).collect::<Result<Vec<_>>>()?;
            let text = serde_json::to_string_pretty(&reports)? + "\n";
            ctx.write("stability.json", &text)?;
            if ctx.json {
                print!("{text}");
            } else {
                let mut s = String::new();
                for r in &reports {
                    s.push_str(&format!(
                        "({})  {}  abscissa {:.6}  cooperative {}  irreducible {}\n",
                        fmt_v(&r.point),
                        r.verdict,
                        r.spectral_abscissa,
                        r.cooperative,
                        r.irreducible
                    ));
                }
                ctx.say(&s);
            }
        }
        Cmd::Enumerate { tree, construct } => {
            let (t, _) = load(&tree)?;
            let ves = enumerate_pure_ve(&t)?;
            let built = if construct { Some(construct_strict_pure_ve(&t)?) } else { None };
            let doc = serde_json::json!({ "pure_ve": ves, "constructed": built });
            let text = serde_json::to_string_pretty(&doc)? + "\n";
            ctx.write("pure_ve.json", &text)?;
            if ctx.json {
                print!("{text}");
            } else {
                let mut s = format!("{} strict pure VE\n", ves.len());
                for v in &ves {
                    s.push_str(&format!("  ({})  margin {:.3e}\n", fmt_v(&v.valuations), v.margin));
                }
                if let Some(b) = &built {
                    s.push_str(&format!("constructed: ({})\n", fmt_v(&b.valuations)));
                }
                ctx.say(&s);
            }
        }
        Cmd::Reproduce { pure_z2 } => {
            let mut suite = Suite { seed: ctx.seed, ..Suite::default() };
            if let Some(z) = pure_z2 {
                suite.unique_pure = fixtures::two_class_tree(z, 0.0);
            }
            let results = reproduce::run(&suite);
            if ctx.json {
                println!("{}", serde_json::to_string_pretty(&results)?);
            } else {
                ctx.say(&reproduce::render(&results));
            }
            if ctx.out.is_some() {
                ctx.write("reproduce.json", &(serde_json::to_string_pretty(&results)? + "\n"))?;
            }
            if results.iter().any(|r| !r.passed) {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            log::warn!("could not size thread pool: {e}");
        }
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("cpal: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

