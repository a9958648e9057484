use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bitlet_core::analysis::{
    crossover_oc, energy_breakeven_oc, litmus, sweep, Grid, SweepParam, SweepRow, SweepSpec, Workload,
};
use bitlet_core::catalog::{CatalogEntry, OpKind, OpSpec};
use bitlet_core::config::Config;
use bitlet_core::figures::{fig1, fig2, fig3, sig6, Cell, Table};
use bitlet_core::model::{
    mat_power_cap, perf_cpu, perf_pim, pl_perf_cpu, pl_perf_pim, PowerBudget, WorkloadPoint,
};
use bitlet_core::pac::LayoutSpec;
use bitlet_core::validate::{validate, validate_with, Report, Scope};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

/// PIM vs CPU throughput and energy model.
///
/// Without --config (or BITLET_CONFIG) the default machine is used: 1024x1024
/// arrays, 1024 MATs, 10 ns cycles, 0.1 pJ per PIM cycle, 4 Tbps (4096 Gbps)
/// and 15 pJ per bit on the CPU side. Throughput is in GOPS (1e9 op/s).
#[derive(Parser, Debug)]
#[command(name = "bitlet", version)]
struct Cli {
    /// JSON machine/workload description.
    #[arg(long, global = true, env = "BITLET_CONFIG")]
    config: Option<PathBuf>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Figure {
    Fig1,
    Fig2,
    Fig3,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Litmus verdict per workload.
    ///
    /// Columns: name, oc, pac, dio, pim_gops, cpu_gops, pl_pim_gops,
    /// pl_cpu_gops, winner, speedup, crossover_oc, energy_breakeven_oc,
    /// energy_ratio. Without --format a readable summary is printed.
    #[command(alias = "litmus")]
    Eval(PointArgs),
    /// OC where the CPU catches up with PIM, per workload.
    ///
    /// Columns: name, dio, pac, crossover_oc, cpu_wins_from_oc,
    /// energy_breakeven_oc.
    Crossover(PointArgs),
    /// Sweep one parameter over a grid.
    ///
    /// Columns: <param>, pim_gops, cpu_gops, pl_pim_gops, pl_cpu_gops.
    /// BW is in Gbps, TDP in watts.
    Sweep {
        /// One of OC, PAC, MAT, BW, DIO, TDP.
        #[arg(long)]
        param: String,
        /// lo:hi:steps[:log]
        #[arg(long)]
        grid: String,
        #[command(flatten)]
        point: PointArgs,
    },
    /// Power-limited throughput and the MAT count a budget allows.
    ///
    /// Columns: tdp_watts, name, oc, pac, dio, mat_power_cap, pim_gops,
    /// pl_pim_gops, cpu_gops, pl_cpu_gops, winner.
    Power(PointArgs),
    /// Regenerate a figure's data.
    Reproduce {
        #[arg(value_enum)]
        figure: Figure,
    },
    /// Check catalog cycle counts and PAC against simulated programs.
    Validate {
        #[arg(default_value = "all")]
        scope: Scope,
        /// JSON cycle table [{"kind","n","oc"}] to check instead of the
        /// built-in catalog.
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
}

/// Ad-hoc workload replacing the configured ones when --op or --oc is set.
#[derive(Args, Debug, Clone, Default)]
struct PointArgs {
    /// Operation kind (NOT, OR, AND, XOR, ADD, ADD_FANIN4, MPY, MPY_LOWPREC).
    #[arg(long)]
    op: Option<String>,
    /// Operand width in bits.
    #[arg(long, default_value_t = 16)]
    width: u32,
    /// Cycle count; overrides --op. DIO defaults to three operands of
    /// --width bits.
    #[arg(long)]
    oc: Option<u64>,
    #[arg(long)]
    pac: Option<u64>,
    #[arg(long)]
    dio: Option<u64>,
    /// Power budgets in watts, comma separated; overrides the config.
    #[arg(long, value_delimiter = ',')]
    tdp: Vec<f64>,
    /// Restrict to one configured workload.
    #[arg(long)]
    workload: Option<String>,
}

enum Failure {
    Validation,
    Input(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation => 1,
            Failure::Input(_) => 2,
            Failure::Io(_) => 3,
        }
    }
}

impl From<bitlet_core::Error> for Failure {
    fn from(e: bitlet_core::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Validation => {}
                Failure::Input(m) => eprintln!("error: {m}"),
                Failure::Io(m) => eprintln!("I/O error: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}

fn load_config(path: Option<&Path>) -> Outcome<Config> {
    let Some(path) = path else {
        return Ok(Config::default());
    };
    let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    Config::parse(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn emit(cli: &Cli, text: &str) -> Outcome<()> {
    match &cli.out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::Io(e.to_string()))
        }
    }
}

fn emit_table(cli: &Cli, table: &Table) -> Outcome<()> {
    match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => emit(cli, &table.to_csv()),
        Format::Json => emit(cli, &json_text(&table.to_json())),
    }
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    s
}

fn run(cli: &Cli) -> Outcome<()> {
    match &cli.command {
        Command::Reproduce { figure } => {
            let config = load_config(cli.config.as_deref())?;
            let table = match figure {
                Figure::Fig1 => fig1()?,
                Figure::Fig2 => fig2(&config.pim, &config.cpu)?,
                Figure::Fig3 => fig3(&config.pim, &config.cpu)?,
            };
            emit_table(cli, &table)
        }
        Command::Validate { scope, catalog } => {
            let report = match catalog {
                Some(path) => {
                    let entries = load_catalog(path)?;
                    validate_with(*scope, |spec| lookup(&entries, spec))
                }
                None => validate(*scope),
            };
            emit_report(cli, &report)?;
            if report.all_passed() {
                Ok(())
            } else {
                Err(Failure::Validation)
            }
        }
        Command::Eval(point) => {
            let config = load_config(cli.config.as_deref())?;
            cmd_eval(cli, &config, point)
        }
        Command::Crossover(point) => {
            let config = load_config(cli.config.as_deref())?;
            cmd_crossover(cli, &config, point)
        }
        Command::Power(point) => {
            let config = load_config(cli.config.as_deref())?;
            cmd_power(cli, &config, point)
        }
        Command::Sweep { param, grid, point } => {
            let config = load_config(cli.config.as_deref())?;
            cmd_sweep(cli, &config, param, grid, point)
        }
    }
}

fn load_catalog(path: &Path) -> Outcome<Vec<CatalogEntry>> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: line {}: {e}", path.display(), e.line())))
}

fn lookup(entries: &[CatalogEntry], spec: &OpSpec) -> Option<u64> {
    entries
        .iter()
        .find(|e| e.kind.eq_ignore_ascii_case(spec.kind.name()) && e.n == spec.width_bits)
        .map(|e| e.oc)
}

fn emit_report(cli: &Cli, report: &Report) -> Outcome<()> {
    match cli.format {
        Some(Format::Json) => emit(cli, &json_text(&serde_json::to_value(report).expect("serialisable"))),
        Some(Format::Csv) => {
            let mut out = String::from("check,passed,detail\n");
            for c in &report.checks {
                out.push_str(&format!("\"{}\",{},\"{}\"\n", c.name, c.passed, c.detail.replace('"', "'")));
            }
            emit(cli, &out)
        }
        None => {
            let mut out = String::new();
            for c in &report.checks {
                let mark = if c.passed { "PASS" } else { "FAIL" };
                out.push_str(&format!("{mark}  {:<52} {}\n", c.name, c.detail));
            }
            let failed = report.failures().count();
            out.push_str(&format!("{} checks, {failed} failed\n", report.checks.len()));
            emit(cli, &out)
        }
    }
}

/// Workloads to analyse: the ad-hoc point if given, else the configured
/// ones (optionally one by name).
fn workloads(config: &Config, point: &PointArgs) -> Outcome<Vec<(String, WorkloadPoint)>> {
    if point.op.is_some() || point.oc.is_some() {
        let width = point.width;
        let dio = point.dio.unwrap_or(2 * width as u64 + width as u64);
        let w = match (point.oc, &point.op) {
            (Some(oc), op) => {
                let name = op.clone().unwrap_or_else(|| "CUSTOM".into());
                let mut w = Workload::new(name, OpSpec::new(OpKind::Custom(oc.max(1)), width)?, dio);
                w.oc_override = Some(oc);
                w
            }
            (None, Some(op)) => {
                let spec = OpSpec::new(op.parse()?, width)?;
                Workload::new(spec.kind.name(), spec, dio)
            }
            (None, None) => unreachable!(),
        };
        let mut p = w.with_layout(LayoutSpec::aligned(width)).resolve(&config.pim)?;
        if let Some(pac) = point.pac {
            p = WorkloadPoint::new(p.oc_cycles(), pac, p.dio_bits())?;
        }
        return Ok(vec![(w_name(point), p)]);
    }
    let mut out = Vec::new();
    for w in &config.workloads {
        if point.workload.as_ref().is_some_and(|n| n != &w.name) {
            continue;
        }
        let mut p = w.resolve(&config.pim)?;
        if point.pac.is_some() || point.dio.is_some() {
            p = WorkloadPoint::new(
                p.oc_cycles(),
                point.pac.unwrap_or(p.pac_cycles()),
                point.dio.unwrap_or(p.dio_bits()),
            )?;
        }
        out.push((w.name.clone(), p));
    }
    if let Some(name) = &point.workload {
        if out.is_empty() {
            return Err(Failure::Input(format!("no workload named `{name}`")));
        }
    }
    Ok(out)
}

fn w_name(point: &PointArgs) -> String {
    match (&point.op, point.oc) {
        (Some(op), None) => format!("{}{}", op.to_ascii_uppercase(), point.width),
        (_, Some(oc)) => format!("oc{oc}"),
        (None, None) => "point".into(),
    }
}

fn budgets(config: &Config, point: &PointArgs) -> Outcome<Vec<PowerBudget>> {
    if point.tdp.is_empty() {
        return Ok(config.power.into_iter().collect());
    }
    point
        .tdp
        .iter()
        .map(|&t| PowerBudget::new(t).map_err(Failure::from))
        .collect()
}

fn cmd_eval(cli: &Cli, config: &Config, point: &PointArgs) -> Outcome<()> {
    let power = budgets(config, point)?.first().copied();
    let verdicts: Vec<_> = workloads(config, point)?
        .into_iter()
        .map(|(name, p)| (name, litmus(&config.pim, &config.cpu, &p, power.as_ref())))
        .collect();
    match cli.format {
        Some(Format::Json) => {
            let arr: Vec<Value> = verdicts
                .iter()
                .map(|(name, v)| {
                    let mut obj = serde_json::to_value(v).expect("serialisable");
                    obj.as_object_mut()
                        .expect("object")
                        .insert("name".into(), Value::from(name.as_str()));
                    obj
                })
                .collect();
            emit(cli, &json_text(&Value::Array(arr)))
        }
        Some(Format::Csv) => {
            let mut t = Table::new(
                [
                    "name", "oc", "pac", "dio", "pim_gops", "cpu_gops", "pl_pim_gops", "pl_cpu_gops",
                    "winner", "speedup", "crossover_oc", "energy_breakeven_oc", "energy_ratio",
                ]
                .map(String::from)
                .to_vec(),
            );
            if let Some(p) = power {
                t.meta.push(format!("tdp_watts={}", p.tdp_watts()));
            }
            let mut csv = t.to_csv();
            for (name, v) in &verdicts {
                let pl = v.power_limited.unwrap_or(v.raw);
                let cells = [
                    Cell::Int(v.oc_cycles),
                    Cell::Int(v.pac_cycles),
                    Cell::Int(v.dio_bits),
                    Cell::Float(v.raw.pim_gops),
                    Cell::Float(v.raw.cpu_gops),
                    Cell::Float(pl.pim_gops),
                    Cell::Float(pl.cpu_gops),
                ];
                let mut line = vec![name.clone()];
                line.extend(cells.iter().map(Cell::render));
                line.push(v.winner.to_string());
                line.extend(
                    [v.speedup, v.crossover_oc, v.energy_breakeven_oc, v.energy_ratio].map(sig6),
                );
                csv.push_str(&line.join(","));
                csv.push('\n');
            }
            emit(cli, &csv)
        }
        None => {
            let mut out = String::new();
            for (name, v) in &verdicts {
                out.push_str(&format!(
                    "{name}: OC={} PAC={} DIO={}  PIM {} GOPS, CPU {} GOPS",
                    v.oc_cycles,
                    v.pac_cycles,
                    v.dio_bits,
                    sig6(v.raw.pim_gops),
                    sig6(v.raw.cpu_gops)
                ));
                if let (Some(pl), Some(p)) = (v.power_limited, power) {
                    out.push_str(&format!(
                        "; at {} W PIM {} GOPS, CPU {} GOPS",
                        p.tdp_watts(),
                        sig6(pl.pim_gops),
                        sig6(pl.cpu_gops)
                    ));
                }
                out.push_str(&format!(
                    "\n  winner {} (x{}), crossover OC {}, energy ratio {}\n",
                    v.winner,
                    sig6(v.speedup),
                    sig6(v.crossover_oc),
                    sig6(v.energy_ratio)
                ));
            }
            if verdicts.is_empty() {
                out.push_str("no workloads\n");
            }
            emit(cli, &out)
        }
    }
}

fn cmd_crossover(cli: &Cli, config: &Config, point: &PointArgs) -> Outcome<()> {
    let mut t = Table::new(
        ["name", "dio", "pac", "crossover_oc", "cpu_wins_from_oc", "energy_breakeven_oc"]
            .map(String::from)
            .to_vec(),
    );
    t.meta.push(format!(
        "mats={} rows={} cycle_time_ns={} bandwidth_gbps={}",
        config.pim.mats(),
        config.pim.rows(),
        config.pim.cycle_time_ns(),
        config.cpu.bandwidth_gbps()
    ));
    let mut rows: Vec<(String, u64, u64)> = workloads(config, point)?
        .into_iter()
        .map(|(name, p)| (name, p.dio_bits(), p.pac_cycles()))
        .collect();
    if rows.is_empty() && point.op.is_none() && point.oc.is_none() {
        // No workload needed: a bare DIO (and PAC) query.
        if let Some(dio) = point.dio {
            rows.push(("point".into(), dio, point.pac.unwrap_or(0)));
        }
    }
    let mut csv_rows = Vec::new();
    for (name, dio, pac) in rows {
        let x = crossover_oc(&config.pim, &config.cpu, dio, pac);
        let e = energy_breakeven_oc(&config.pim, &config.cpu, dio, pac);
        csv_rows.push((name, dio, pac, x, e));
    }
    match cli.format {
        Some(Format::Json) => {
            let arr: Vec<Value> = csv_rows
                .iter()
                .map(|(name, dio, pac, x, e)| {
                    json!({"name": name, "dio": dio, "pac": pac, "crossover_oc": x,
                           "cpu_wins_from_oc": x.ceil().max(1.0), "energy_breakeven_oc": e})
                })
                .collect();
            emit(cli, &json_text(&Value::Array(arr)))
        }
        _ => {
            let mut csv = t.to_csv();
            for (name, dio, pac, x, e) in csv_rows {
                csv.push_str(&format!(
                    "{name},{dio},{pac},{},{},{}\n",
                    sig6(x),
                    sig6(x.ceil().max(1.0)),
                    sig6(e)
                ));
            }
            emit(cli, &csv)
        }
    }
}

fn cmd_power(cli: &Cli, config: &Config, point: &PointArgs) -> Outcome<()> {
    let budgets = budgets(config, point)?;
    if budgets.is_empty() {
        return Err(Failure::Input("no power budget: pass --tdp or set power.tdp_watts".into()));
    }
    let mut t = Table::new(
        [
            "tdp_watts", "name", "oc", "pac", "dio", "mat_power_cap", "pim_gops", "pl_pim_gops", "cpu_gops",
            "pl_cpu_gops", "winner",
        ]
        .map(String::from)
        .to_vec(),
    );
    t.meta.push(format!("mats={}", config.pim.mats()));
    let points = workloads(config, point)?;
    let mut json_rows = Vec::new();
    let mut csv = t.to_csv();
    for b in &budgets {
        let cap = mat_power_cap(&config.pim, b);
        if points.is_empty() {
            csv.push_str(&format!("{},-,,,,{cap},,,,,\n", sig6(b.tdp_watts())));
            json_rows.push(json!({"tdp_watts": b.tdp_watts(), "mat_power_cap": cap}));
        }
        for (name, p) in &points {
            let v = litmus(&config.pim, &config.cpu, p, Some(b));
            let vals = [
                perf_pim(&config.pim, p).gops(),
                pl_perf_pim(&config.pim, p, b).gops(),
                perf_cpu(&config.cpu, p).gops(),
                pl_perf_cpu(&config.cpu, p, b).gops(),
            ];
            csv.push_str(&format!(
                "{},{name},{},{},{},{cap},{},{}\n",
                sig6(b.tdp_watts()),
                p.oc_cycles(),
                p.pac_cycles(),
                p.dio_bits(),
                vals.map(sig6).join(","),
                v.winner
            ));
            json_rows.push(json!({
                "tdp_watts": b.tdp_watts(), "name": name, "oc": p.oc_cycles(), "pac": p.pac_cycles(),
                "dio": p.dio_bits(), "mat_power_cap": cap, "pim_gops": vals[0], "pl_pim_gops": vals[1],
                "cpu_gops": vals[2], "pl_cpu_gops": vals[3], "winner": v.winner,
            }));
        }
    }
    match cli.format {
        Some(Format::Json) => emit(cli, &json_text(&Value::Array(json_rows))),
        _ => emit(cli, &csv),
    }
}

fn cmd_sweep(cli: &Cli, config: &Config, param: &str, grid: &str, point: &PointArgs) -> Outcome<()> {
    let param: SweepParam = param.parse()?;
    let grid: Grid = grid.parse()?;
    let base = match workloads(config, point)?.into_iter().next() {
        Some((_, p)) => p,
        None => WorkloadPoint::new(point.oc.unwrap_or(1), point.pac.unwrap_or(0), point.dio.unwrap_or(48))?,
    };
    let spec = SweepSpec {
        param,
        values: grid.values(),
        pim: config.pim,
        cpu: config.cpu,
        point: base,
        power: budgets(config, point)?.first().copied(),
    };
    let rows = sweep(&spec)?;
    let mut header: Vec<String> = SweepRow::HEADER.map(String::from).to_vec();
    header[0] = param.name().to_string();
    let mut t = Table::new(header);
    t.meta.push(format!(
        "oc={} pac={} dio={} mats={} bandwidth_gbps={}{}",
        base.oc_cycles(),
        base.pac_cycles(),
        base.dio_bits(),
        config.pim.mats(),
        config.cpu.bandwidth_gbps(),
        spec.power.map_or(String::new(), |p| format!(" tdp_watts={}", p.tdp_watts()))
    ));
    for r in rows {
        t.rows.push(
            [r.x, r.pim_gops, r.cpu_gops, r.pl_pim_gops, r.pl_cpu_gops]
                .map(Cell::Float)
                .to_vec(),
        );
    }
    emit_table(cli, &t)
}
