//! The `postsel` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use postsel_core::channels::{subtract, twirl_with_transcript, Channel, LinearMap};
use postsel_core::diamond::{diamond_bounds, DiamondOptions, DIAMOND_SIZE_LIMIT};
use postsel_core::linalg::{stream, trace_distance, RNG_STREAM_ID};
use postsel_core::postselect::{check_covariance, random_twirled_difference, theorem1_check_with, Covariance};
use postsel_core::qkd::{build_toy_protocol, eps_reduction, key_penalty, toy_security_eval, EpsInput, ToyMode};
use postsel_core::symmetric::{tau_family_with_limit, TAU_SIZE_LIMIT};

use crate::batch::{batch_csv, certify_batch, log_grid, sweep, sweep_csv, tau_monte_carlo_parallel};
use crate::format::{from_json, to_json, DiamondJson, MapJson, MonteCarloJson, PenaltyJson, ReduceJson, ReportJson, TauJson, ToyJson};
use crate::io::{read_text, write_atomic, CliError};

/// Release and RNG stream identifier printed by `--version`.
pub fn version_string() -> String {
    format!("postsel {} (rng stream {RNG_STREAM_ID})", env!("CARGO_PKG_VERSION"))
}

#[derive(Debug, Parser)]
#[command(name = "postsel", about = "Post-selection bounds for permutation-covariant quantum channels", disable_version_flag = true)]
pub struct Cli {
    /// Seed for every stochastic step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Largest accepted diamond-norm certificate gap.
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub tol: f64,
    /// Output file (written atomically); stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Suppress the summary on stderr.
    #[arg(long, global = true)]
    pub quiet: bool,
    /// Random seesaw restarts per diamond norm.
    #[arg(long, global = true, default_value_t = 16)]
    pub restarts: usize,
    /// Lift the size guards on the de Finetti family and the SDP.
    #[arg(long, global = true)]
    pub allow_large: bool,
    /// Print release and RNG stream identifier.
    #[arg(long, short = 'V')]
    pub version: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Diamond norm of a map given as JSON.
    Dnorm {
        #[arg(long)]
        map: PathBuf,
    },
    /// The de Finetti family for `n` copies of a `d`-level system.
    Tau {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        /// Include the extension and the purification.
        #[arg(long)]
        full: bool,
        /// Compare with a Monte Carlo estimate from this many samples.
        #[arg(long)]
        monte_carlo: Option<usize>,
    },
    /// Certify the post-selection inequality for one map or a random batch.
    #[command(group(ArgGroup::new("source").required(true).args(["map", "batch"])))]
    Check {
        #[arg(long)]
        map: Option<PathBuf>,
        /// Number of random twirled differences (seeds `seed..seed+count`).
        #[arg(long)]
        batch: Option<usize>,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, value_enum, default_value_t = Kind::Strict)]
        kind: Kind,
        /// Output dimension before the permutation register (transcript kind).
        #[arg(long)]
        inner_dout: Option<usize>,
        /// CSV output for batch mode.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Security-parameter arithmetic.
    Qkd {
        #[command(subcommand)]
        cmd: QkdCommand,
    },
    /// Worked examples and input generators.
    Demo {
        #[command(subcommand)]
        cmd: DemoCommand,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Strict,
    Transcript,
}

#[derive(Debug, Subcommand)]
pub enum QkdCommand {
    /// Convert between the general and the collective security parameter.
    #[command(group(ArgGroup::new("given").required(true).args(["eps", "eps_bar"])))]
    Reduce {
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        eps_bar: Option<f64>,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        d: u64,
    },
    /// Key shortening in bits.
    Penalty {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        d: u64,
    },
    /// Exponent, bound and penalty over a log-spaced range of `n`.
    Sweep {
        #[arg(long)]
        c: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        d: u64,
        #[arg(long)]
        n_min: u64,
        #[arg(long)]
        n_max: u64,
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum DemoCommand {
    /// Evaluate the qubit-pair toy protocol.
    Toy {
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Mode::Postselection)]
        mode: Mode,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Write an example map as JSON.
    Map {
        #[arg(long, value_enum)]
        which: DemoMap,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        d: usize,
        /// Depolarizing probability.
        #[arg(long, default_value_t = 1.0)]
        p: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Collective,
    Postselection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DemoMap {
    /// `id − D_p` on a qubit.
    IdMinusDepol,
    /// Twirled difference of two random channels on `(C^d)^⊗n`.
    Twirled,
    /// Random channel twirled with a permutation register.
    Transcript,
    /// `id ⊗ D_1` on two qubits, not permutation covariant.
    Asymmetric,
    /// Reset-to-|0⟩ minus reset-to-|1⟩.
    Resets,
}

struct Ctx {
    out: Option<PathBuf>,
    quiet: bool,
    seed: u64,
    options: DiamondOptions,
    tau_limit: u128,
}

impl Ctx {
    fn emit(&self, path: Option<&Path>, text: &str) -> Result<(), CliError> {
        match path.or(self.out.as_deref()) {
            Some(p) => write_atomic(p, text.as_bytes()),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", line.as_ref());
        }
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if cli.version {
        println!("{}", version_string());
        return 0;
    }
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("postsel: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if !(cli.tol > 0.0) {
        return Err(CliError::Usage(format!("--tol must be positive, got {}", cli.tol)));
    }
    let command = cli
        .command
        .ok_or_else(|| CliError::Usage("a subcommand is required (see --help)".into()))?;
    let ctx = Ctx {
        out: cli.out,
        quiet: cli.quiet,
        seed: cli.seed,
        options: DiamondOptions {
            tol: cli.tol,
            restarts: cli.restarts,
            size_limit: if cli.allow_large { usize::MAX } else { DIAMOND_SIZE_LIMIT },
            ..DiamondOptions::default()
        },
        tau_limit: if cli.allow_large { u128::MAX } else { TAU_SIZE_LIMIT },
    };
    match command {
        Command::Dnorm { map } => dnorm(&ctx, &map),
        Command::Tau { n, d, full, monte_carlo } => tau(&ctx, n, d, full, monte_carlo),
        Command::Check {
            map,
            batch,
            n,
            d,
            kind,
            inner_dout,
            csv,
        } => match (map, batch) {
            (Some(map), None) => check(&ctx, &map, n, d, kind, inner_dout),
            (None, Some(count)) => check_batch(&ctx, n, d, count, csv.as_deref()),
            _ => Err(CliError::Usage("give exactly one of --map and --batch".into())),
        },
        Command::Qkd { cmd } => qkd(&ctx, cmd),
        Command::Demo { cmd } => demo(&ctx, cmd),
    }
}

fn dnorm(ctx: &Ctx, path: &Path) -> Result<(), CliError> {
    let map: MapJson = from_json(&read_text(path)?)?;
    let hp = map.to_hp()?;
    let r = diamond_bounds(&hp, &ctx.options, &mut stream(ctx.seed, 0))?;
    ctx.emit(None, &to_json(&DiamondJson::from(&r)))?;
    ctx.say(format!("diamond norm {:.10} (gap {:.3e})", r.value, r.gap));
    if r.gap > ctx.options.tol {
        return Err(CliError::Verification(format!(
            "certificate gap {:.3e} exceeds tolerance {:.3e}",
            r.gap, ctx.options.tol
        )));
    }
    Ok(())
}

fn tau(ctx: &Ctx, n: usize, d: usize, full: bool, monte_carlo: Option<usize>) -> Result<(), CliError> {
    let t = tau_family_with_limit(n, d, ctx.tau_limit)?;
    let mut j = TauJson::new(&t, full)?;
    if let Some(samples) = monte_carlo {
        let est = tau_monte_carlo_parallel(n, d, samples, ctx.seed)?;
        j.monte_carlo = Some(MonteCarloJson {
            samples,
            trace_distance: trace_distance(&est, &t.tau_reduced)?,
        });
    }
    ctx.emit(None, &to_json(&j))?;
    ctx.say(format!("g = {}, {} eigenvalues", t.g, j.eigs.len()));
    Ok(())
}

fn check(ctx: &Ctx, path: &Path, n: usize, d: usize, kind: Kind, inner_dout: Option<usize>) -> Result<(), CliError> {
    let map: MapJson = from_json(&read_text(path)?)?;
    let hp = map.to_hp()?;
    let covariance = match kind {
        Kind::Strict => Covariance::Strict,
        Kind::Transcript => {
            let reg: usize = (1..=n).product();
            Covariance::Transcript {
                inner_dout: inner_dout.unwrap_or(hp.dout() / reg.max(1)),
            }
        }
    };
    let cm = check_covariance(&hp, n, d, covariance)?;
    let tau = tau_family_with_limit(n, d, ctx.tau_limit)?;
    let rep = theorem1_check_with(&cm, &tau, &ctx.options, &mut stream(ctx.seed, 0))?;
    ctx.emit(None, &to_json(&ReportJson::from(&rep)))?;
    ctx.say(format!(
        "lhs {:.10} <= rhs {:.10} (g = {}): {}",
        rep.lhs.value,
        rep.rhs,
        rep.g,
        if rep.holds { "holds" } else { "VIOLATED" }
    ));
    if !rep.holds {
        return Err(CliError::Verification(format!(
            "certified diamond norm {} exceeds {}",
            rep.lhs.upper, rep.rhs
        )));
    }
    Ok(())
}

fn check_batch(ctx: &Ctx, n: usize, d: usize, count: usize, csv: Option<&Path>) -> Result<(), CliError> {
    let rows = certify_batch(n, d, count, ctx.seed, &ctx.options, ctx.tau_limit)?;
    ctx.emit(csv, &batch_csv(&rows)?)?;
    let failures = rows.iter().filter(|r| !r.report.holds).count();
    let min_slack = rows.iter().map(|r| r.report.slack).fold(f64::INFINITY, f64::min);
    ctx.say(format!("{count} instances at n = {n}, d = {d}: {failures} violations, minimum slack {min_slack:.6}"));
    if failures > 0 {
        return Err(CliError::Verification(format!("{failures} of {count} instances violate the bound")));
    }
    Ok(())
}

fn qkd(ctx: &Ctx, cmd: QkdCommand) -> Result<(), CliError> {
    match cmd {
        QkdCommand::Reduce { eps, eps_bar, n, d } => {
            let input = match (eps, eps_bar) {
                (Some(e), None) => EpsInput::Eps(e),
                (None, Some(b)) => EpsInput::EpsBar(b),
                _ => return Err(CliError::Usage("give exactly one of --eps and --eps-bar".into())),
            };
            let p = eps_reduction(input, n, d)?;
            ctx.emit(None, &to_json(&ReduceJson::from(&p)))?;
            ctx.say(format!(
                "eps = 2^{:.4}, eps_bar = 2^{:.4}{}",
                p.log2_eps,
                p.log2_eps_bar,
                if p.is_vacuous() { " (vacuous)" } else { "" }
            ));
        }
        QkdCommand::Penalty { n, d } => {
            let p = key_penalty(n, d)?;
            ctx.emit(None, &to_json(&PenaltyJson::new(n, d, &p)))?;
            ctx.say(format!("{:.4} bits (bound {:.4})", p.exact_bits, p.bound_bits));
        }
        QkdCommand::Sweep {
            c,
            delta,
            d,
            n_min,
            n_max,
            points,
            csv,
        } => {
            if n_min == 0 || n_min > n_max {
                return Err(CliError::Usage(format!("need 1 <= n-min <= n-max, got {n_min}..{n_max}")));
            }
            let rows = sweep(c, delta, d, &log_grid(n_min, n_max, points))?;
            ctx.emit(csv.as_deref(), &sweep_csv(&rows)?)?;
            ctx.say(format!("{} grid points", rows.len()));
        }
    }
    Ok(())
}

fn demo(ctx: &Ctx, cmd: DemoCommand) -> Result<(), CliError> {
    match cmd {
        DemoCommand::Toy { n, mode, json } => {
            let tp = build_toy_protocol(n)?;
            let mode = match mode {
                Mode::Collective => ToyMode::Collective,
                Mode::Postselection => ToyMode::PostSelection,
            };
            let r = toy_security_eval(&tp, mode, &ctx.options, &mut stream(ctx.seed, 0))?;
            ctx.emit(json.as_deref(), &to_json(&ToyJson::from(&r)))?;
            ctx.say(format!(
                "collective {:.10}{}",
                r.collective,
                if r.insecure { " (insecure)" } else { "" }
            ));
            if r.mixture_ok == Some(false) {
                return Err(CliError::Verification("mixture exceeds the i.i.d. maximum".into()));
            }
        }
        DemoCommand::Map { which, n, d, p } => {
            let mut rng = stream(ctx.seed, 0);
            let json = match which {
                DemoMap::IdMinusDepol => MapJson::hp(&subtract(&Channel::identity(2), &Channel::depolarizing(2, p)?)?),
                DemoMap::Twirled => MapJson::hp(&random_twirled_difference(n, d, &mut rng)?),
                DemoMap::Transcript => {
                    let din = d.checked_pow(n as u32).ok_or(CliError::Usage("d^n overflows".into()))?;
                    let e = Channel::random(din, d, 2, &mut rng);
                    MapJson::channel(&twirl_with_transcript(&e, n, d)?)
                }
                DemoMap::Asymmetric => {
                    let id = Channel::identity(2);
                    let dep = Channel::depolarizing(2, 1.0)?;
                    let choi = id.choi().kron(dep.choi()).reorder_factors(&[0, 2, 1, 3])?;
                    MapJson::channel(&Channel::from_choi(4, 4, choi)?)
                }
                DemoMap::Resets => {
                    let zero = postsel_core::Operator::unit(2, 0, 0);
                    let one = postsel_core::Operator::unit(2, 1, 1);
                    MapJson::hp(&subtract(&Channel::replacement(2, &zero)?, &Channel::replacement(2, &one)?)?)
                }
            };
            ctx.emit(None, &to_json(&json))?;
        }
    }
    Ok(())
}
