use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use gmedyn::families::{event_times, FamilySpec};
use gmedyn::sweep::{self, RunConfig, Window, FAILURE_BUDGET};

const EXIT_CONFIG: u8 = 2;
const EXIT_BUDGET: u8 = 3;

#[derive(Parser)]
#[command(name = "gmedyn", version, about = "Entanglement dynamics of two cavities and their reservoirs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep κt and write trace.csv and trace.json.
    Run(RunArgs),
    /// Print the closed-form death and birth times of a family.
    Events {
        #[arg(long)]
        family: String,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Family spec, e.g. `pure:alpha2=0.1` or `werner:p=0.45`.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    kt_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    gap_tol: Option<f64>,
    #[arg(long)]
    feas_tol: Option<f64>,
    #[arg(long)]
    plateau_tol: Option<f64>,
    /// Debug only: restrict to some cuts, e.g. `C1|C2R1R2,C1C2|R1R2`.
    #[arg(long)]
    cuts: Option<String>,
    /// Embed the joint state in every JSON row.
    #[arg(long)]
    include_joint_raw: bool,
    /// `key=value` file using the flag names (with `_` or `-`); flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn read_config_file(path: &Path) -> anyhow::Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("{}:{}: expected key=value", path.display(), n + 1))?;
        map.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    Ok(map)
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> anyhow::Result<T> {
    v.parse().map_err(|_| anyhow!("bad value for {key}: {v:?}"))
}

/// Merges the file and the flags into a validated config and output dir.
fn resolve(args: RunArgs) -> anyhow::Result<(RunConfig, PathBuf)> {
    let mut file = match &args.config {
        Some(p) => read_config_file(p)?,
        None => BTreeMap::new(),
    };
    let mut take = |key: &str| file.remove(key);

    let family = args.family.or(take("family")).ok_or_else(|| anyhow!("missing --family"))?;
    let family: FamilySpec = family.parse()?;
    let mut config = RunConfig::new(family);
    let out = args.out.or(take("out").map(PathBuf::from)).ok_or_else(|| anyhow!("missing --out"))?;
    macro_rules! field {
        ($name:ident) => {
            if let Some(v) = take(stringify!($name)) {
                config.$name = parse_value(stringify!($name), &v)?;
            }
            if let Some(v) = args.$name {
                config.$name = v;
            }
        };
    }
    field!(kt_max);
    field!(points);
    field!(gap_tol);
    field!(feas_tol);
    field!(plateau_tol);
    let file_joint = take("include_joint_raw").map(|v| parse_value::<bool>("include_joint_raw", &v)).transpose()?;
    config.include_joint_raw = args.include_joint_raw || file_joint.unwrap_or(false);
    if let Some(c) = args.cuts.or(take("cuts")) {
        config.cuts = Some(sweep::parse_cuts(&c)?);
    }
    if let Some(k) = file.keys().next() {
        bail!("unknown config key {k:?}");
    }
    config.validate()?;
    Ok((config, out))
}

fn fmt_time(t: Option<f64>) -> String {
    t.map_or_else(|| "none".to_string(), |t| format!("{t:.6}"))
}

fn fmt_window(w: &Option<Window>) -> String {
    match w {
        Some(w) => format!(
            "[{:.4}, {:.4}] level {:.6} variation {:.3e}",
            w.start_kt, w.end_kt, w.level, w.variation
        ),
        None => "none".to_string(),
    }
}

fn run(args: RunArgs) -> anyhow::Result<ExitCode> {
    let (config, out) = match resolve(args) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return Ok(ExitCode::from(EXIT_CONFIG));
        }
    };
    let trace = sweep::run(&config)?;
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    sweep::emit_csv(&trace, &out.join("trace.csv"))?;
    sweep::emit_json(&trace, &out.join("trace.json"))?;

    let ev = &trace.events;
    println!("family       {}", config.family);
    println!("t_esd        analytic {} numeric {}", fmt_time(ev.t_esd_analytic), fmt_time(ev.t_esd_numeric));
    println!("t_esb        analytic {} numeric {}", fmt_time(ev.t_esb_analytic), fmt_time(ev.t_esb_numeric));
    for d in &ev.defects {
        println!("event defect {d}");
    }
    match (ev.gme_peak_kt, ev.gme_peak_value) {
        (Some(kt), Some(v)) => println!("gme peak     {v:.6} at kt {kt:.4}"),
        _ => println!("gme peak     none"),
    }
    println!("plateau      {}", fmt_window(&ev.plateau));
    println!("dark window  {}", fmt_window(&ev.dark_window));
    println!("failures     {} of {}", trace.failures(), trace.rows.len());

    if !trace.within_failure_budget() {
        eprintln!(
            "solver failures {} of {} exceed the {:.0}% budget",
            trace.failures(),
            trace.rows.len(),
            FAILURE_BUDGET * 100.0
        );
        return Ok(ExitCode::from(EXIT_BUDGET));
    }
    Ok(ExitCode::SUCCESS)
}

fn events(family: &str) -> anyhow::Result<ExitCode> {
    let spec: FamilySpec = match family.parse() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("config error: {e}");
            return Ok(ExitCode::from(EXIT_CONFIG));
        }
    };
    match event_times(&spec) {
        Ok(t) => {
            println!("t_esd {}", fmt_time(t.t_esd));
            println!("t_esb {}", fmt_time(t.t_esb));
            Ok(ExitCode::SUCCESS)
        }
        Err(e @ gmedyn::Error::SeparableInitialState) => {
            eprintln!("config error: {e}");
            Ok(ExitCode::from(EXIT_CONFIG))
        }
        Err(e) => Err(e.into()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Events { family } => events(&family),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::FAILURE
    })
}
