//! Comparisons built on the throughput equations: where PIM stops winning,
//! where it stops saving energy, and parameter sweeps for plotting.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::{oc_of, OpSpec};
use crate::error::{invalid, Error, Result};
use crate::model::{
    energy_per_op_cpu, energy_per_op_pim, perf_cpu, perf_pim, pl_perf_cpu, pl_perf_pim, CpuMachine,
    PimMachine, PowerBudget, Throughput, WorkloadPoint, GBPS,
};
use crate::pac::{pac_of, LayoutSpec};

/// Relative difference under which two throughputs are called even.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Winner {
    Pim,
    Cpu,
    Tie,
}

impl Winner {
    pub fn decide(pim: Throughput, cpu: Throughput) -> Self {
        let (p, c) = (pim.ops_per_second(), cpu.ops_per_second());
        if (p - c).abs() <= TIE_TOLERANCE * p.max(c) {
            Winner::Tie
        } else if p > c {
            Winner::Pim
        } else {
            Winner::Cpu
        }
    }
}

impl fmt::Display for Winner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Winner::Pim => "PIM",
            Winner::Cpu => "CPU",
            Winner::Tie => "TIE",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Comparison {
    pub pim_gops: f64,
    pub cpu_gops: f64,
    pub winner: Winner,
    /// PIM throughput over CPU throughput.
    pub speedup: f64,
}

impl Comparison {
    fn new(pim: Throughput, cpu: Throughput) -> Self {
        Self {
            pim_gops: pim.gops(),
            cpu_gops: cpu.gops(),
            winner: Winner::decide(pim, cpu),
            speedup: pim.ops_per_second() / cpu.ops_per_second(),
        }
    }
}

/// Outcome of the PIM-vs-CPU litmus test for one workload.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub oc_cycles: u64,
    pub pac_cycles: u64,
    pub dio_bits: u64,
    pub raw: Comparison,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power_limited: Option<Comparison>,
    /// Taken from the power-limited comparison when a budget was given.
    pub winner: Winner,
    pub speedup: f64,
    pub crossover_oc: f64,
    pub energy_breakeven_oc: f64,
    pub pim_pj_per_op: f64,
    pub cpu_pj_per_op: f64,
    /// CPU energy per operation over PIM energy per operation.
    pub energy_ratio: f64,
}

/// OC at which PIM and CPU raw throughputs are equal. PIM wins strictly
/// below it; a value `<= 0` means it never wins.
pub fn crossover_oc(pim: &PimMachine, cpu: &CpuMachine, dio_bits: u64, pac_cycles: u64) -> f64 {
    let lanes = pim.rows() as f64 * pim.mats() as f64;
    let ct_seconds = pim.cycle_time_ns() * 1e-9;
    lanes * dio_bits as f64 / (cpu.bandwidth_bps() * ct_seconds) - pac_cycles as f64
}

/// OC at which one PIM operation costs as much energy as one CPU operation.
pub fn energy_breakeven_oc(pim: &PimMachine, cpu: &CpuMachine, dio_bits: u64, pac_cycles: u64) -> f64 {
    cpu.energy_per_bit_pj() * dio_bits as f64 / pim.energy_per_cycle_pj() - pac_cycles as f64
}

pub fn litmus(
    pim: &PimMachine,
    cpu: &CpuMachine,
    w: &WorkloadPoint,
    power: Option<&PowerBudget>,
) -> Verdict {
    let raw = Comparison::new(perf_pim(pim, w), perf_cpu(cpu, w));
    let power_limited =
        power.map(|p| Comparison::new(pl_perf_pim(pim, w, p), pl_perf_cpu(cpu, w, p)));
    let decisive = power_limited.unwrap_or(raw);
    let pim_pj = energy_per_op_pim(pim, w);
    let cpu_pj = energy_per_op_cpu(cpu, w);
    Verdict {
        oc_cycles: w.oc_cycles(),
        pac_cycles: w.pac_cycles(),
        dio_bits: w.dio_bits(),
        raw,
        power_limited,
        winner: decisive.winner,
        speedup: decisive.speedup,
        crossover_oc: crossover_oc(pim, cpu, w.dio_bits(), w.pac_cycles()),
        energy_breakeven_oc: energy_breakeven_oc(pim, cpu, w.dio_bits(), w.pac_cycles()),
        pim_pj_per_op: pim_pj,
        cpu_pj_per_op: cpu_pj,
        energy_ratio: cpu_pj / pim_pj,
    }
}

/// A workload described by operation and data layout rather than raw
/// cycle counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Workload {
    pub name: String,
    pub op: OpSpec,
    /// Replaces the catalog's cycle count.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oc_override: Option<u64>,
    pub dio_bits: u64,
    pub layout: LayoutSpec,
}

impl Workload {
    pub fn new(name: impl Into<String>, op: OpSpec, dio_bits: u64) -> Self {
        Self {
            name: name.into(),
            layout: LayoutSpec::aligned(op.width_bits),
            op,
            oc_override: None,
            dio_bits,
        }
    }

    pub fn with_layout(mut self, layout: LayoutSpec) -> Self {
        self.layout = layout;
        self
    }

    pub fn resolve(&self, pim: &PimMachine) -> Result<WorkloadPoint> {
        let oc = match self.oc_override {
            Some(oc) => oc,
            None => oc_of(&self.op)?,
        };
        self.layout.validate()?;
        WorkloadPoint::new(oc, pac_of(&self.layout, pim), self.dio_bits)
    }
}

pub fn litmus_workload(
    pim: &PimMachine,
    cpu: &CpuMachine,
    workload: &Workload,
    power: Option<&PowerBudget>,
) -> Result<Verdict> {
    Ok(litmus(pim, cpu, &workload.resolve(pim)?, power))
}

/// Mix throughput as total operations over total time, each side running
/// every operation in proportion to its weight.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixVerdict {
    pub raw: Comparison,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power_limited: Option<Comparison>,
    pub winner: Winner,
}

pub fn litmus_mix(
    pim: &PimMachine,
    cpu: &CpuMachine,
    mix: &[(WorkloadPoint, f64)],
    power: Option<&PowerBudget>,
) -> Result<MixVerdict> {
    if mix.is_empty() {
        return Err(invalid("mix", "needs at least one workload"));
    }
    if mix.iter().any(|(_, wgt)| !(wgt.is_finite() && *wgt > 0.0)) {
        return Err(invalid("mix", "weights must be finite and positive"));
    }
    let total: f64 = mix.iter().map(|(_, wgt)| wgt).sum();
    let combine = |f: &dyn Fn(&WorkloadPoint) -> Throughput| {
        let seconds: f64 = mix
            .iter()
            .map(|(w, wgt)| wgt / f(w).ops_per_second())
            .sum();
        Throughput::from_ops_per_second(total / seconds)
    };
    let raw = Comparison::new(combine(&|w| perf_pim(pim, w)), combine(&|w| perf_cpu(cpu, w)));
    let power_limited = power.map(|p| {
        Comparison::new(
            combine(&|w| pl_perf_pim(pim, w, p)),
            combine(&|w| pl_perf_cpu(cpu, w, p)),
        )
    });
    Ok(MixVerdict {
        raw,
        winner: power_limited.unwrap_or(raw).winner,
        power_limited,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SweepParam {
    Oc,
    Pac,
    Mat,
    /// Bandwidth, swept in Gbps.
    Bw,
    Dio,
    Tdp,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::Oc => "OC",
            SweepParam::Pac => "PAC",
            SweepParam::Mat => "MAT",
            SweepParam::Bw => "BW",
            SweepParam::Dio => "DIO",
            SweepParam::Tdp => "TDP",
        }
    }

    fn is_integer(&self) -> bool {
        matches!(self, SweepParam::Oc | SweepParam::Pac | SweepParam::Mat | SweepParam::Dio)
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "OC" => SweepParam::Oc,
            "PAC" => SweepParam::Pac,
            "MAT" | "MATS" => SweepParam::Mat,
            "BW" => SweepParam::Bw,
            "DIO" => SweepParam::Dio,
            "TDP" => SweepParam::Tdp,
            _ => return Err(Error::UnknownParameter(s.to_string())),
        })
    }
}

/// `steps` points from `lo` to `hi` inclusive, evenly spaced or log-spaced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
    pub log: bool,
}

impl Grid {
    pub fn new(lo: f64, hi: f64, steps: usize, log: bool) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidGrid("grid is empty".into()));
        }
        if !(lo.is_finite() && hi.is_finite()) || lo <= 0.0 || hi < lo {
            return Err(Error::InvalidGrid(format!(
                "need 0 < lo <= hi, got {lo}..{hi}"
            )));
        }
        Ok(Self { lo, hi, steps, log })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.lo];
        }
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                let t = i as f64 / last;
                if self.log {
                    (self.lo.ln() + t * (self.hi.ln() - self.lo.ln())).exp()
                } else {
                    self.lo + t * (self.hi - self.lo)
                }
            })
            .collect()
    }
}

impl FromStr for Grid {
    type Err = Error;

    /// `lo:hi:steps[:log]`
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = |why: &str| Error::InvalidGrid(format!("`{s}`: {why}"));
        let log = match parts.len() {
            3 => false,
            4 if parts[3].eq_ignore_ascii_case("log") => true,
            4 if parts[3].eq_ignore_ascii_case("lin") => false,
            _ => return Err(bad("expected lo:hi:steps[:log]")),
        };
        let lo = parts[0].parse::<f64>().map_err(|_| bad("lo is not a number"))?;
        let hi = parts[1].parse::<f64>().map_err(|_| bad("hi is not a number"))?;
        let steps = parts[2].parse::<usize>().map_err(|_| bad("steps is not a count"))?;
        Grid::new(lo, hi, steps, log)
    }
}

/// One swept parameter over a fixed machine and workload context.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub pim: PimMachine,
    pub cpu: CpuMachine,
    pub point: WorkloadPoint,
    /// Power-limited columns equal the raw ones without a budget.
    pub power: Option<PowerBudget>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub x: f64,
    pub pim_gops: f64,
    pub cpu_gops: f64,
    pub pl_pim_gops: f64,
    pub pl_cpu_gops: f64,
}

impl SweepRow {
    pub const HEADER: [&'static str; 5] = ["x", "pim_gops", "cpu_gops", "pl_pim_gops", "pl_cpu_gops"];
}

/// Evaluates every grid point; rows come back in grid order.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    if spec.values.is_empty() {
        return Err(Error::InvalidGrid("grid is empty".into()));
    }
    spec.values
        .par_iter()
        .map(|&v| sweep_point(spec, v))
        .collect()
}

fn sweep_point(spec: &SweepSpec, value: f64) -> Result<SweepRow> {
    let x = if spec.param.is_integer() { value.round() } else { value };
    if !(x.is_finite() && x >= 0.0) {
        return Err(Error::InvalidGrid(format!("{} value {value} out of range", spec.param.name())));
    }
    let (mut pim, mut cpu, mut w, mut power) = (spec.pim, spec.cpu, spec.point, spec.power);
    let count = x as u64;
    match spec.param {
        SweepParam::Oc => w = WorkloadPoint::new(count, w.pac_cycles(), w.dio_bits())?,
        SweepParam::Pac => w = WorkloadPoint::new(w.oc_cycles(), count, w.dio_bits())?,
        SweepParam::Dio => w = WorkloadPoint::new(w.oc_cycles(), w.pac_cycles(), count)?,
        SweepParam::Mat => pim = pim.with_mats(count)?,
        SweepParam::Bw => cpu = cpu.with_bandwidth_bps(x * GBPS)?,
        SweepParam::Tdp => power = Some(PowerBudget::new(x)?),
    }
    let budget = power.unwrap_or_else(PowerBudget::unlimited);
    Ok(SweepRow {
        x,
        pim_gops: perf_pim(&pim, &w).gops(),
        cpu_gops: perf_cpu(&cpu, &w).gops(),
        pl_pim_gops: pl_perf_pim(&pim, &w, &budget).gops(),
        pl_cpu_gops: pl_perf_cpu(&cpu, &w, &budget).gops(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::OpKind;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn crossovers() {
        let pim = PimMachine::default();
        let cpu4 = CpuMachine::from_tbps(4.0, 15.0).unwrap();
        let cpu1 = CpuMachine::from_tbps(1.0, 15.0).unwrap();
        assert!(rel(crossover_oc(&pim, &cpu4, 24, 0), 614.4) < 1e-12);
        assert!(rel(crossover_oc(&pim, &cpu1, 24, 0), 2457.6) < 1e-12);
        assert!(rel(crossover_oc(&pim, &cpu1, 48, 0), 4915.2) < 1e-12);
        assert!(crossover_oc(&pim, &cpu4, 24, 615).abs() < 0.6 + 1e-9);
        let budget = crossover_oc(&pim, &cpu4, 24, 0);
        assert!((crossover_oc(&pim, &cpu4, 24, 614) - (budget - 614.0)).abs() < 1e-9);
    }

    #[test]
    fn crossover_can_be_zero() {
        // ROW*MAT*DIO / (BW*CT) = 4 * 8 * 3 / (96 * 1) = 1
        let pim = PimMachine::new(4, 4, 8, 1.0, 1.0).unwrap();
        let cpu = CpuMachine::new(96e9, 1.0).unwrap();
        assert!(crossover_oc(&pim, &cpu, 3, 1).abs() < 1e-12);
    }

    #[test]
    fn energy_breakeven() {
        let pim = PimMachine::default();
        let cpu = CpuMachine::default();
        assert!(rel(energy_breakeven_oc(&pim, &cpu, 48, 0), 7200.0) < 1e-12);
        let single_nor = WorkloadPoint::new(1, 0, 3).unwrap();
        let v = litmus(&pim, &cpu, &single_nor, None);
        assert!(rel(v.energy_ratio, 450.0) < 1e-12);
        let same = CpuMachine::new(1e9, 0.1).unwrap();
        assert!(rel(energy_breakeven_oc(&pim, &same, 1, 0), 1.0) < 1e-12);
    }

    #[test]
    fn litmus_examples() {
        let pim = PimMachine::default();
        let cpu4 = CpuMachine::from_tbps(4.0, 15.0).unwrap();
        let cpu1 = CpuMachine::from_tbps(1.0, 15.0).unwrap();
        let or16 = Workload::new("or", OpSpec::new(OpKind::Or, 16).unwrap(), 48);
        let mpy16 = Workload::new("mpy", OpSpec::new(OpKind::Mpy, 16).unwrap(), 48);

        let v = litmus_workload(&pim, &cpu4, &or16, None).unwrap();
        assert_eq!(v.winner, Winner::Pim);
        assert!(rel(v.raw.pim_gops, 3276.8) < 1e-12);
        assert!(v.power_limited.is_none());

        let v = litmus_workload(&pim, &cpu4, &mpy16, None).unwrap();
        assert_eq!(v.winner, Winner::Cpu);
        assert!(v.speedup < 1.0);

        let v = litmus_workload(&pim, &cpu1, &mpy16, None).unwrap();
        assert_eq!(v.winner, Winner::Pim);
    }

    #[test]
    fn power_budget_decides() {
        // 16k MATs beat the CPU raw, but 20 W caps PIM at 1389 GOPS while a
        // 16 Tbps CPU at DIO 24 keeps only 55.6 GOPS.
        let pim = PimMachine::default().with_mats(16384).unwrap();
        let cpu = CpuMachine::from_tbps(16.0, 15.0).unwrap();
        let w = WorkloadPoint::new(144, 0, 24).unwrap();
        let p = PowerBudget::new(20.0).unwrap();
        let v = litmus(&pim, &cpu, &w, Some(&p));
        let pl = v.power_limited.unwrap();
        assert!(rel(pl.pim_gops, 1388.8888889) < 1e-9);
        assert!(rel(pl.cpu_gops, 55.555_555_6) < 1e-9);
        assert_eq!(v.winner, Winner::Pim);
        assert_eq!(v.speedup, pl.speedup);
    }

    #[test]
    fn ties() {
        let t = Throughput::from_ops_per_second(1e12);
        let u = Throughput::from_ops_per_second(1e12 * (1.0 + 1e-12));
        assert_eq!(Winner::decide(t, u), Winner::Tie);
        let v = Throughput::from_ops_per_second(1.001e12);
        assert_eq!(Winner::decide(t, v), Winner::Cpu);
        assert_eq!(Winner::decide(v, t), Winner::Pim);
    }

    #[test]
    fn mix_is_harmonic() {
        let pim = PimMachine::default();
        let cpu = CpuMachine::default();
        let a = WorkloadPoint::new(32, 0, 48).unwrap();
        let b = WorkloadPoint::new(3104, 0, 48).unwrap();
        let m = litmus_mix(&pim, &cpu, &[(a, 1.0), (b, 1.0)], None).unwrap();
        let expect = 2.0 / (1.0 / 3276.8 + 1.0 / perf_pim(&pim, &b).gops());
        assert!(rel(m.raw.pim_gops, expect) < 1e-12);
        assert!(rel(m.raw.cpu_gops, 4096.0 / 48.0) < 1e-12);
        assert!(litmus_mix(&pim, &cpu, &[], None).is_err());
        assert!(litmus_mix(&pim, &cpu, &[(a, 0.0)], None).is_err());
    }

    #[test]
    fn grids() {
        let g: Grid = "1:32768:16:log".parse().unwrap();
        let v = g.values();
        assert_eq!(v.len(), 16);
        assert!((v[0] - 1.0).abs() < 1e-12 && (v[15] - 32768.0).abs() < 1e-6);
        let g: Grid = "0.5:2.5:3".parse().unwrap();
        assert_eq!(g.values(), vec![0.5, 1.5, 2.5]);
        assert_eq!("7:9:1".parse::<Grid>().unwrap().values(), vec![7.0]);
        for bad in ["1:2:0", "1:2", "2:1:3", "0:4:2", "1:2:3:cubic", "a:2:3"] {
            assert!(bad.parse::<Grid>().is_err(), "{bad}");
        }
    }

    #[test]
    fn sweep_rows_match_direct_calls() {
        let pim = PimMachine::default();
        let cpu = CpuMachine::default();
        let point = WorkloadPoint::new(144, 0, 48).unwrap();
        let spec = SweepSpec {
            param: SweepParam::Mat,
            values: Grid::new(1.0, 16384.0, 40, true).unwrap().values(),
            pim,
            cpu,
            point,
            power: Some(PowerBudget::new(20.0).unwrap()),
        };
        let rows = sweep(&spec).unwrap();
        assert_eq!(rows.len(), 40);
        for r in &rows {
            let m = pim.with_mats(r.x as u64).unwrap();
            assert_eq!(r.pim_gops, perf_pim(&m, &point).gops());
            assert_eq!(r.pl_pim_gops, pl_perf_pim(&m, &point, spec.power.as_ref().unwrap()).gops());
        }
        // plateau once the MAT count passes the power cap
        let beyond: Vec<_> = rows.iter().filter(|r| r.x > 1953.0).collect();
        assert!(beyond.len() > 3);
        assert!(beyond.iter().all(|r| r.pl_pim_gops == beyond[0].pl_pim_gops));

        let single = SweepSpec {
            param: SweepParam::Oc,
            values: vec![144.0],
            power: None,
            ..spec.clone()
        };
        let row = sweep(&single).unwrap()[0];
        assert_eq!(row.pim_gops, perf_pim(&pim, &point).gops());
        assert_eq!(row.pl_pim_gops, row.pim_gops);
        assert_eq!(row.pl_cpu_gops, row.cpu_gops);

        let empty = SweepSpec { values: vec![], ..spec };
        assert!(sweep(&empty).is_err());
        assert!("FREQ".parse::<SweepParam>().is_err());
    }
}
