use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use reachtrace_core::cohort::{analyze_cohort, simulate_cohort, SimPolicy, MANIFEST_FILE};
use reachtrace_core::design::{
    assign_conditions, balanced_latin_square, eta2_to_f, required_sample_size, rm_anova_power, PowerSpec,
};
use reachtrace_core::geometry::{Condition, ModelParams};
use reachtrace_core::metrics::{build_record, write_metrics_csv};
use reachtrace_core::sensor::{ArmModel, SensorParams, SensorTrace};
use reachtrace_core::service::{ServiceConfig, SessionService};
use reachtrace_core::session::SessionLog;
use reachtrace_core::stats::eta2_label;

#[derive(Parser)]
#[command(name = "reachtrace", version, about = "Dot-trace exergame simulation and analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a cohort and write logs, traces and manifest.json.
    Simulate(SimulateArgs),
    /// Recompute metrics and write the report bundle for a cohort manifest.
    Analyze {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the balanced Latin square and participant orders.
    Design {
        #[arg(long, default_value_t = 4)]
        conditions: usize,
        #[arg(long)]
        participants: usize,
    },
    /// A priori sample size for the within-factors F test.
    Power(PowerArgs),
    /// Metrics for one session log and sensor trace, as CSV.
    Metrics {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        /// Reference resistance from the minimum over this window instead of the whole trace.
        #[arg(long, num_args = 2, value_names = ["START", "END"])]
        baseline: Option<Vec<f64>>,
    },
    /// Run the WebSocket session service at ws://ADDR/ws.
    Serve {
        #[arg(long)]
        listen: String,
        /// Directory for completed session logs and traces.
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    participants: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    out_of_order_prob: Option<f64>,
    #[arg(long)]
    speed: Option<f64>,
    #[arg(long)]
    dwell: Option<f64>,
    #[arg(long)]
    dwell_sd: Option<f64>,
    #[arg(long)]
    jitter_sd: Option<f64>,
    #[arg(long)]
    pace_sd: Option<f64>,
    /// Multiplier on all Horizontal-orientation durations.
    #[arg(long)]
    horizontal_time_scale: Option<f64>,
}

#[derive(Args)]
struct PowerArgs {
    #[arg(long)]
    eta2: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0.80)]
    power: f64,
    #[arg(long, default_value_t = 4)]
    measurements: usize,
    #[arg(long, default_value_t = 0.5)]
    corr: f64,
    #[arg(long, default_value_t = 1)]
    groups: usize,
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    match Cli::parse().command {
        Command::Simulate(a) => simulate(a),
        Command::Analyze { manifest, out } => {
            let report = analyze_cohort(&manifest, &out)?;
            println!("{} sessions analyzed, report written to {}", report.records.len(), out.display());
            for row in &report.anova {
                match &row.effects {
                    Some(effects) => {
                        for e in effects {
                            println!(
                                "{:<16} {:<28} F({}, {}) = {:.4}  p = {:.4}  eta2 = {:.4} ({})",
                                row.variable.name(),
                                e.name.label(),
                                e.df1,
                                e.df2,
                                e.f,
                                e.p,
                                e.eta2,
                                eta2_label(e.eta2)
                            );
                        }
                    }
                    None => println!("{:<16} {}", row.variable.name(), row.note),
                }
            }
            Ok(())
        }
        Command::Design { conditions, participants } => design(conditions, participants),
        Command::Power(a) => power(a),
        Command::Metrics { log, trace, baseline } => metrics(log, trace, baseline),
        Command::Serve { listen, store, seed } => serve(listen, store, seed),
    }
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let d = SimPolicy::default();
    let policy = SimPolicy {
        seed: a.seed,
        out_of_order_prob: a.out_of_order_prob.unwrap_or(d.out_of_order_prob),
        speed: a.speed.unwrap_or(d.speed),
        dwell: a.dwell.unwrap_or(d.dwell),
        dwell_sd: a.dwell_sd.unwrap_or(d.dwell_sd),
        jitter_sd: a.jitter_sd.unwrap_or(d.jitter_sd),
        pace_sd: a.pace_sd.unwrap_or(d.pace_sd),
        horizontal_time_scale: a.horizontal_time_scale.unwrap_or(d.horizontal_time_scale),
        ..d
    };
    let manifest = simulate_cohort(
        a.participants,
        &policy,
        &ModelParams::default(),
        &ArmModel::default(),
        &SensorParams::default(),
        &a.out,
    )?;
    let sessions: usize = manifest.participants.iter().map(|p| p.sessions.len()).sum();
    println!(
        "{} participants, {sessions} sessions written to {}",
        manifest.participants.len(),
        a.out.join(MANIFEST_FILE).display()
    );
    Ok(())
}

fn design(conditions: usize, participants: usize) -> Result<()> {
    let square = balanced_latin_square(conditions)?;
    let labels: Vec<String> = if conditions == Condition::ALL.len() {
        Condition::ALL.iter().map(|c| c.slug()).collect()
    } else {
        (1..=conditions).map(|i| format!("c{i}")).collect()
    };
    let out = std::io::stdout();
    let mut out = out.lock();
    writeln!(out, "# balanced Latin square, order {conditions}")?;
    for (i, row) in square.rows.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
        writeln!(out, "# row {}: {}", i + 1, cells.join(" "))?;
    }
    let ids: Vec<String> = (1..=participants).map(|k| format!("P{k:03}")).collect();
    let header: Vec<String> = (1..=conditions).map(|k| format!("session_{k}")).collect();
    writeln!(out, "participant,row,{}", header.join(","))?;
    for (k, (id, order)) in assign_conditions(&ids, &square, &labels)?.into_iter().enumerate() {
        writeln!(out, "{id},{},{}", k % conditions + 1, order.join(","))?;
    }
    Ok(())
}

fn power(a: PowerArgs) -> Result<()> {
    let f = eta2_to_f(a.eta2)?;
    let spec = PowerSpec {
        effect_f: f,
        alpha: a.alpha,
        target_power: a.power,
        groups: a.groups,
        measurements: a.measurements,
        correlation: a.corr,
        epsilon: a.epsilon,
    };
    let n = required_sample_size(&spec)?;
    let (lambda, df1, df2) = spec.test_parameters(n)?;
    println!("effect_f = {f:.6}");
    println!("required_n = {n}");
    println!("lambda = {lambda:.6}");
    println!("df = ({df1}, {df2})");
    println!("power_at_n = {:.6}", rm_anova_power(&spec, n)?);
    if n > spec.groups + 1 && n > 2 {
        println!("power_at_n_minus_1 = {:.6}", rm_anova_power(&spec, n - 1)?);
    }
    Ok(())
}

fn metrics(log: PathBuf, trace: PathBuf, baseline: Option<Vec<f64>>) -> Result<()> {
    let text = fs::read_to_string(&log).with_context(|| format!("reading {}", log.display()))?;
    let log_value = SessionLog::from_jsonl(&text).with_context(|| format!("parsing {}", log.display()))?;
    let file = fs::File::open(&trace).with_context(|| format!("reading {}", trace.display()))?;
    let mut trace_value = SensorTrace::read_csv(file).with_context(|| format!("parsing {}", trace.display()))?;
    if let Some(window) = baseline {
        let [start, end] = window[..] else {
            bail!("--baseline takes START END");
        };
        trace_value.set_baseline_window(start, end)?;
    }
    let record = build_record(&log_value, &trace_value)?;
    write_metrics_csv(&[record], std::io::stdout().lock())?;
    Ok(())
}

fn serve(listen: String, store: Option<PathBuf>, seed: u64) -> Result<()> {
    let service = SessionService::new(ServiceConfig {
        seed,
        store_dir: store,
        ..ServiceConfig::default()
    })?;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&listen)
            .await
            .with_context(|| format!("cannot listen on {listen}"))?;
        tracing::info!("listening on ws://{}/ws", listener.local_addr()?);
        eprintln!("listening on ws://{}/ws", listener.local_addr()?);
        tokio::select! {
            r = reachtrace_cli::serve(listener, service) => r?,
            _ = tokio::signal::ctrl_c() => {}
        }
        Ok(())
    })
}
