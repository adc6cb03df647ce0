use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mpaudit_cli::commands::{self, Ctx, DiamArgs};
use mpaudit_cli::config::ExperimentConfig;
use mpaudit_cli::CliResult;
use mpaudit_core::audit::DEFAULT_NODE_BUDGET;
use mpaudit_core::par;

/// Manipulation-proof auditing experiments.
#[derive(Parser)]
#[command(name = "mpaudit", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; defaults are used when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set fig2.reps=10` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Keep rows already in the results file and compute only the rest.
    #[arg(long, global = true)]
    resume: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Write the configured dataset as CSV.
    Gen {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        p_sensitive: Option<f64>,
        #[arg(long)]
        data_seed: Option<u64>,
        /// Output file (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Diameter of one class's version space after an audit, as JSON.
    Diam {
        /// `exhaustive`, `dictionary:<m>`, `<family>` or `<family>:<json params>`.
        #[arg(long, default_value = "exhaustive")]
        class: String,
        /// JSON-lines audit set; a random audit is drawn when absent.
        #[arg(long)]
        audit: Option<PathBuf>,
        #[arg(long)]
        budget_fraction: Option<f64>,
    },
    /// Exact adaptive audit cost for each epsilon.
    Cost {
        #[arg(long, default_value = "exhaustive")]
        class: String,
        #[arg(long = "epsilon", num_args = 1.., default_values_t = [0.1, 0.5, 1.0, 1.5])]
        epsilons: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        node_budget: usize,
    },
    /// Dictionary diameter under optimal and random audits.
    Fig2 {
        #[arg(long)]
        reps: Option<usize>,
    },
    /// Capacity of every configured class.
    Capacity,
    /// Manipulability of every configured class.
    Manipulability {
        #[arg(long)]
        budget_fraction: Option<f64>,
        #[arg(long)]
        reps: Option<usize>,
    },
    /// Capacity against manipulability, with the selected class marked.
    Scatter,
    /// Manipulability of selected classes across audit budgets.
    BudgetSweep,
    /// Cost of exhaustion per trained family.
    Coe,
}

fn push_json<T: serde::Serialize>(out: &mut Vec<String>, key: &str, v: &Option<T>) {
    if let Some(v) = v {
        out.push(format!("{key}={}", serde_json::to_string(v).expect("json")));
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let c = cli.common;
    let mut overrides = c.overrides;
    push_json(&mut overrides, "seed", &c.seed);
    push_json(&mut overrides, "out_dir", &c.out_dir);
    push_json(&mut overrides, "threads", &c.threads);
    let name = match &cli.command {
        Command::Gen { n, p_sensitive, data_seed, .. } => {
            push_json(&mut overrides, "dataset.n", n);
            push_json(&mut overrides, "dataset.p_sensitive", p_sensitive);
            push_json(&mut overrides, "dataset.seed", data_seed);
            "gen"
        }
        Command::Diam { .. } => "diam",
        Command::Cost { .. } => "cost",
        Command::Fig2 { reps } => {
            push_json(&mut overrides, "fig2.reps", reps);
            "fig2"
        }
        Command::Capacity => "capacity",
        Command::Manipulability { budget_fraction, reps } => {
            push_json(&mut overrides, "budget_fraction", budget_fraction);
            push_json(&mut overrides, "reps", reps);
            "manipulability"
        }
        Command::Scatter => "scatter",
        Command::BudgetSweep => "budget-sweep",
        Command::Coe => "coe",
    };
    let cfg = ExperimentConfig::resolve(c.config.as_deref(), &overrides)?;
    let threads = cfg.threads;
    let ctx = Ctx { cfg, resume: c.resume, command: name };
    par::with_threads(threads, || match &cli.command {
        Command::Gen { out, .. } => commands::gen(&ctx, out.as_deref()),
        Command::Diam { class, audit, budget_fraction } => commands::diam(
            &ctx,
            &DiamArgs { class, audit: audit.as_deref(), budget_fraction: *budget_fraction },
        ),
        Command::Cost { class, epsilons, node_budget } => commands::cost(&ctx, class, epsilons, *node_budget),
        Command::Fig2 { .. } => commands::fig2(&ctx),
        Command::Capacity => commands::capacity_cmd(&ctx),
        Command::Manipulability { .. } => commands::manipulability_cmd(&ctx),
        Command::Scatter => commands::scatter(&ctx),
        Command::BudgetSweep => commands::budget_sweep(&ctx),
        Command::Coe => commands::coe(&ctx),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
