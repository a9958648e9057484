//! Data tables behind the operation-complexity, throughput and power-limit
//! plots, plus CSV/JSON rendering shared with the command line.

use std::fmt::Write as _;

use serde_json::{Map, Value};

use crate::analysis::crossover_oc;
use crate::catalog::{oc_of, OpKind, OpSpec};
use crate::error::Result;
use crate::model::{
    mat_power_cap, perf_cpu, perf_pim, pl_perf_cpu, pl_perf_pim, CpuMachine, PimMachine, PowerBudget,
    WorkloadPoint, GBPS, GBPS_PER_TBPS,
};

pub const FIG1_WIDTHS: [u32; 5] = [4, 8, 16, 32, 64];
pub const FIG1_OPS: [OpKind; 7] = [
    OpKind::Not,
    OpKind::Or,
    OpKind::And,
    OpKind::Xor,
    OpKind::Add,
    OpKind::AddFanin4,
    OpKind::Mpy,
];
pub const FIG2_MATS: [u64; 6] = [1, 16, 256, 1024, 4096, 16384];
pub const FIG2_DIOS: [u64; 2] = [24, 48];
pub const FIG2_BW_TBPS: [u64; 3] = [1, 4, 16];
pub const FIG2_OC_MAX: u64 = 32768;
/// Log-spaced samples before integer rounding and de-duplication.
pub const FIG2_SAMPLES: usize = 481;
pub const FIG3_TDP_WATTS: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(&'static str),
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => sig6(*v),
            Cell::Text(s) => s.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => Value::from(*v),
            Cell::Float(v) => Value::from(*v),
            Cell::Text(s) => Value::from(*s),
        }
    }
}

/// Six significant digits, `%g` style, trailing zeros trimmed.
pub fn sig6(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { v.to_string() };
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// A rectangular table with `#` metadata lines.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub meta: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Self {
            header,
            ..Self::default()
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for m in &self.meta {
            let _ = writeln!(out, "# {m}");
        }
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> =
                    self.header.iter().cloned().zip(row.iter().map(Cell::json)).collect();
                Value::Object(obj)
            })
            .collect();
        serde_json::json!({ "meta": self.meta, "rows": Value::Array(rows) })
    }
}

fn machine_meta(pim: &PimMachine, cpu: &CpuMachine) -> String {
    format!(
        "rows={} cols={} cycle_time_ns={} pim_pj_per_cycle={} cpu_pj_per_bit={}; GOPS = 1e9 op/s; 1 Tbps = 1024 Gbps",
        pim.rows(),
        pim.cols(),
        pim.cycle_time_ns(),
        pim.energy_per_cycle_pj(),
        cpu.energy_per_bit_pj()
    )
}

pub fn fig1() -> Result<Table> {
    let mut t = Table::new(vec!["n".into(), "op".into(), "oc".into()]);
    t.meta.push("figure=fig1 operation complexity in cycles".into());
    for n in FIG1_WIDTHS {
        for kind in FIG1_OPS {
            let oc = oc_of(&OpSpec::new(kind, n)?)?;
            t.rows.push(vec![Cell::Int(n as u64), Cell::Text(kind.name()), Cell::Int(oc)]);
        }
    }
    Ok(t)
}

/// Integer OC grid, log-spaced from 1 to `FIG2_OC_MAX`.
pub fn fig2_oc_grid() -> Vec<u64> {
    let hi = (FIG2_OC_MAX as f64).ln();
    let last = (FIG2_SAMPLES - 1) as f64;
    let mut ocs: Vec<u64> = (0..FIG2_SAMPLES)
        .map(|i| (hi * i as f64 / last).exp().round() as u64)
        .collect();
    ocs.dedup();
    ocs
}

pub fn pim_column(mats: u64) -> String {
    format!("pim_mat{mats}")
}

pub fn cpu_column(dio: u64, bw_tbps: u64) -> String {
    format!("cpu_dio{dio}_bw{bw_tbps}t")
}

fn cpu_at(base: &CpuMachine, bw_tbps: u64) -> Result<CpuMachine> {
    base.with_bandwidth_bps(bw_tbps as f64 * GBPS_PER_TBPS * GBPS)
}

fn throughput_table(pim: &PimMachine, cpu: &CpuMachine, power: Option<&PowerBudget>) -> Result<Table> {
    let mut header = vec!["oc".to_string()];
    header.extend(FIG2_MATS.iter().map(|&m| pim_column(m)));
    for dio in FIG2_DIOS {
        header.extend(FIG2_BW_TBPS.iter().map(|&bw| cpu_column(dio, bw)));
    }
    if power.is_some() {
        header.extend(FIG2_MATS.iter().map(|&m| format!("pl_{}", pim_column(m))));
        for dio in FIG2_DIOS {
            header.extend(FIG2_BW_TBPS.iter().map(|&bw| format!("pl_{}", cpu_column(dio, bw))));
        }
    }
    let mut t = Table::new(header);
    t.meta.push(machine_meta(pim, cpu));
    t.meta.push("pac=0; pim columns use dio=24 (PIM throughput does not depend on dio)".into());
    for m in FIG2_MATS {
        for dio in FIG2_DIOS {
            for bw in FIG2_BW_TBPS {
                let x = crossover_oc(&pim.with_mats(m)?, &cpu_at(cpu, bw)?, dio, 0);
                t.meta.push(format!("crossover mat={m} dio={dio} bw_tbps={bw} oc={}", sig6(x)));
            }
        }
    }
    if let Some(p) = power {
        t.meta.push(format!(
            "tdp_watts={} mat_power_cap={}",
            p.tdp_watts(),
            mat_power_cap(pim, p)
        ));
    }

    let pims = FIG2_MATS
        .iter()
        .map(|&m| pim.with_mats(m))
        .collect::<Result<Vec<_>>>()?;
    let cpus = FIG2_BW_TBPS
        .iter()
        .map(|&bw| cpu_at(cpu, bw))
        .collect::<Result<Vec<_>>>()?;
    for oc in fig2_oc_grid() {
        let mut row = vec![Cell::Int(oc)];
        let pim_point = WorkloadPoint::new(oc, 0, FIG2_DIOS[0])?;
        row.extend(pims.iter().map(|p| Cell::Float(perf_pim(p, &pim_point).gops())));
        for dio in FIG2_DIOS {
            let w = WorkloadPoint::new(oc, 0, dio)?;
            row.extend(cpus.iter().map(|c| Cell::Float(perf_cpu(c, &w).gops())));
        }
        if let Some(budget) = power {
            row.extend(
                pims.iter()
                    .map(|p| Cell::Float(pl_perf_pim(p, &pim_point, budget).gops())),
            );
            for dio in FIG2_DIOS {
                let w = WorkloadPoint::new(oc, 0, dio)?;
                row.extend(cpus.iter().map(|c| Cell::Float(pl_perf_cpu(c, &w, budget).gops())));
            }
        }
        t.rows.push(row);
    }
    Ok(t)
}

/// Throughput against OC: one PIM diagonal per MAT count and one CPU
/// horizontal per (DIO, BW) pair. Only the MAT and BW of the base
/// machines are replaced.
pub fn fig2(pim: &PimMachine, cpu: &CpuMachine) -> Result<Table> {
    let mut t = throughput_table(pim, cpu, None)?;
    t.meta.insert(0, "figure=fig2 throughput vs OC".into());
    Ok(t)
}

/// `fig2` plus the same columns limited to `FIG3_TDP_WATTS`.
pub fn fig3(pim: &PimMachine, cpu: &CpuMachine) -> Result<Table> {
    let budget = PowerBudget::new(FIG3_TDP_WATTS)?;
    let mut t = throughput_table(pim, cpu, Some(&budget))?;
    t.meta.insert(0, "figure=fig3 throughput vs OC under a power limit".into());
    Ok(t)
}
