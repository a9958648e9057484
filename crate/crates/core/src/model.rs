//! Throughput and energy equations for PIM and CPU execution.
//!
//! Every quantity is carried in SI-adjacent units that match how the model
//! parameters are usually quoted: cycle time in nanoseconds, energies in
//! picojoules, bandwidth in bits per second and power in watts. Conversions
//! happen inside the functions so callers never juggle exponents.

use serde::Serialize;

use crate::error::{invalid, Result};

/// Operations per second in one GOPS.
pub const GOPS: f64 = 1e9;
/// Bits per second in one Gbps.
pub const GBPS: f64 = 1e9;
/// Gbps in one Tbps. Bandwidth uses the binary step between Gbps and Tbps.
pub const GBPS_PER_TBPS: f64 = 1024.0;

const NS: f64 = 1e-9;
const PJ: f64 = 1e-12;

/// Technological and architectural parameters of a PIM system built from
/// identical memory arrays (MATs).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PimMachine {
    rows: u64,
    cols: u64,
    mats: u64,
    cycle_time_ns: f64,
    energy_per_cycle_pj: f64,
}

impl PimMachine {
    pub const DEFAULT_ROWS: u64 = 1024;
    pub const DEFAULT_COLS: u64 = 1024;
    pub const DEFAULT_MATS: u64 = 1024;
    pub const DEFAULT_CYCLE_TIME_NS: f64 = 10.0;
    pub const DEFAULT_ENERGY_PER_CYCLE_PJ: f64 = 0.1;

    pub fn new(
        rows: u64,
        cols: u64,
        mats: u64,
        cycle_time_ns: f64,
        energy_per_cycle_pj: f64,
    ) -> Result<Self> {
        if rows == 0 {
            return Err(invalid("rows", "must be at least 1"));
        }
        if cols == 0 {
            return Err(invalid("cols", "must be at least 1"));
        }
        if mats == 0 {
            return Err(invalid("mats", "must be at least 1"));
        }
        positive_finite("cycle_time_ns", cycle_time_ns)?;
        positive_finite("energy_per_cycle_pj", energy_per_cycle_pj)?;
        Ok(Self {
            rows,
            cols,
            mats,
            cycle_time_ns,
            energy_per_cycle_pj,
        })
    }

    pub fn rows(&self) -> u64 {
        self.rows
    }

    pub fn cols(&self) -> u64 {
        self.cols
    }

    pub fn mats(&self) -> u64 {
        self.mats
    }

    pub fn cycle_time_ns(&self) -> f64 {
        self.cycle_time_ns
    }

    pub fn energy_per_cycle_pj(&self) -> f64 {
        self.energy_per_cycle_pj
    }

    pub fn with_mats(self, mats: u64) -> Result<Self> {
        Self::new(
            self.rows,
            self.cols,
            mats,
            self.cycle_time_ns,
            self.energy_per_cycle_pj,
        )
    }

    pub fn with_rows(self, rows: u64) -> Result<Self> {
        Self::new(
            rows,
            self.cols,
            self.mats,
            self.cycle_time_ns,
            self.energy_per_cycle_pj,
        )
    }

    pub fn with_energy_per_cycle_pj(self, energy: f64) -> Result<Self> {
        Self::new(self.rows, self.cols, self.mats, self.cycle_time_ns, energy)
    }
}

impl Default for PimMachine {
    fn default() -> Self {
        Self {
            rows: Self::DEFAULT_ROWS,
            cols: Self::DEFAULT_COLS,
            mats: Self::DEFAULT_MATS,
            cycle_time_ns: Self::DEFAULT_CYCLE_TIME_NS,
            energy_per_cycle_pj: Self::DEFAULT_ENERGY_PER_CYCLE_PJ,
        }
    }
}

/// CPU side of the comparison: the memory bus and the energy spent per bit
/// moved across it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CpuMachine {
    bandwidth_bps: f64,
    energy_per_bit_pj: f64,
}

impl CpuMachine {
    pub const DEFAULT_BANDWIDTH_GBPS: u64 = 4096;
    pub const DEFAULT_ENERGY_PER_BIT_PJ: f64 = 15.0;

    pub fn new(bandwidth_bps: f64, energy_per_bit_pj: f64) -> Result<Self> {
        positive_finite("bandwidth_bps", bandwidth_bps)?;
        positive_finite("energy_per_bit_pj", energy_per_bit_pj)?;
        Ok(Self {
            bandwidth_bps,
            energy_per_bit_pj,
        })
    }

    pub fn from_gbps(bandwidth_gbps: f64, energy_per_bit_pj: f64) -> Result<Self> {
        Self::new(bandwidth_gbps * GBPS, energy_per_bit_pj)
    }

    pub fn from_tbps(bandwidth_tbps: f64, energy_per_bit_pj: f64) -> Result<Self> {
        Self::from_gbps(bandwidth_tbps * GBPS_PER_TBPS, energy_per_bit_pj)
    }

    pub fn bandwidth_bps(&self) -> f64 {
        self.bandwidth_bps
    }

    pub fn bandwidth_gbps(&self) -> f64 {
        self.bandwidth_bps / GBPS
    }

    pub fn energy_per_bit_pj(&self) -> f64 {
        self.energy_per_bit_pj
    }

    pub fn with_bandwidth_bps(self, bandwidth_bps: f64) -> Result<Self> {
        Self::new(bandwidth_bps, self.energy_per_bit_pj)
    }
}

impl Default for CpuMachine {
    fn default() -> Self {
        Self {
            bandwidth_bps: Self::DEFAULT_BANDWIDTH_GBPS as f64 * GBPS,
            energy_per_bit_pj: Self::DEFAULT_ENERGY_PER_BIT_PJ,
        }
    }
}

/// One operation as seen by both sides: PIM cycles (compute and data
/// placement) and CPU bus traffic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct WorkloadPoint {
    oc_cycles: u64,
    pac_cycles: u64,
    dio_bits: u64,
}

impl WorkloadPoint {
    pub fn new(oc_cycles: u64, pac_cycles: u64, dio_bits: u64) -> Result<Self> {
        if oc_cycles == 0 {
            return Err(invalid("oc_cycles", "must be at least 1"));
        }
        if dio_bits == 0 {
            return Err(invalid("dio_bits", "must be at least 1"));
        }
        Ok(Self {
            oc_cycles,
            pac_cycles,
            dio_bits,
        })
    }

    pub fn oc_cycles(&self) -> u64 {
        self.oc_cycles
    }

    pub fn pac_cycles(&self) -> u64 {
        self.pac_cycles
    }

    pub fn dio_bits(&self) -> u64 {
        self.dio_bits
    }

    /// Cycles billed per operation on the PIM side.
    pub fn pim_cycles(&self) -> u64 {
        self.oc_cycles + self.pac_cycles
    }
}

/// Thermal design power available to one side of the comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerBudget {
    tdp_watts: f64,
}

impl PowerBudget {
    /// `f64::INFINITY` is accepted and means the budget never binds.
    pub fn new(tdp_watts: f64) -> Result<Self> {
        if tdp_watts.is_nan() || tdp_watts <= 0.0 {
            return Err(invalid("tdp_watts", format!("must be > 0, got {tdp_watts}")));
        }
        Ok(Self { tdp_watts })
    }

    pub fn unlimited() -> Self {
        Self {
            tdp_watts: f64::INFINITY,
        }
    }

    pub fn tdp_watts(&self) -> f64 {
        self.tdp_watts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize)]
#[serde(transparent)]
pub struct Throughput(f64);

impl Throughput {
    pub fn from_ops_per_second(ops_per_second: f64) -> Self {
        debug_assert!(ops_per_second.is_finite() && ops_per_second >= 0.0);
        Self(ops_per_second)
    }

    pub fn ops_per_second(self) -> f64 {
        self.0
    }

    pub fn gops(self) -> f64 {
        self.0 / GOPS
    }

    pub fn min(self, other: Self) -> Self {
        if other.0 < self.0 {
            other
        } else {
            self
        }
    }
}

/// Raw PIM throughput: every row of every MAT completes one operation per
/// `OC + PAC` cycles.
pub fn perf_pim(pim: &PimMachine, w: &WorkloadPoint) -> Throughput {
    let lanes = pim.rows as f64 * pim.mats as f64;
    let seconds_per_op = w.pim_cycles() as f64 * pim.cycle_time_ns * NS;
    Throughput(lanes / seconds_per_op)
}

/// Throughput the power budget alone would allow PIM to sustain.
pub fn pim_power_ceiling(pim: &PimMachine, w: &WorkloadPoint, p: &PowerBudget) -> f64 {
    p.tdp_watts / (energy_per_op_pim(pim, w) * PJ)
}

pub fn pl_perf_pim(pim: &PimMachine, w: &WorkloadPoint, p: &PowerBudget) -> Throughput {
    let raw = perf_pim(pim, w);
    let ceiling = pim_power_ceiling(pim, w, p);
    if ceiling < raw.0 {
        Throughput(ceiling)
    } else {
        raw
    }
}

/// Largest MAT count whose raw throughput stays within the power budget.
///
/// The workload cancels out: both branches scale with `1 / (OC + PAC)`.
/// Returns `u64::MAX` for an unlimited budget.
pub fn mat_power_cap(pim: &PimMachine, p: &PowerBudget) -> u64 {
    if p.tdp_watts.is_infinite() {
        return u64::MAX;
    }
    // TDP * CT / (E * ROW) with CT in ns and E in pJ: the 1e-9 / 1e-12 ratio is 1e3.
    let cap = p.tdp_watts * pim.cycle_time_ns * 1e3 / (pim.energy_per_cycle_pj * pim.rows as f64);
    if cap >= u64::MAX as f64 {
        u64::MAX
    } else {
        cap.floor() as u64
    }
}

/// Raw CPU throughput, bounded by the memory bus.
pub fn perf_cpu(cpu: &CpuMachine, w: &WorkloadPoint) -> Throughput {
    Throughput(cpu.bandwidth_bps / w.dio_bits as f64)
}

pub fn cpu_power_ceiling(cpu: &CpuMachine, w: &WorkloadPoint, p: &PowerBudget) -> f64 {
    p.tdp_watts / (energy_per_op_cpu(cpu, w) * PJ)
}

pub fn pl_perf_cpu(cpu: &CpuMachine, w: &WorkloadPoint, p: &PowerBudget) -> Throughput {
    let raw = perf_cpu(cpu, w);
    let ceiling = cpu_power_ceiling(cpu, w, p);
    if ceiling < raw.0 {
        Throughput(ceiling)
    } else {
        raw
    }
}

/// Energy of one PIM operation in pJ.
pub fn energy_per_op_pim(pim: &PimMachine, w: &WorkloadPoint) -> f64 {
    pim.energy_per_cycle_pj * w.pim_cycles() as f64
}

/// Energy of one CPU operation in pJ (bus transfer only).
pub fn energy_per_op_cpu(cpu: &CpuMachine, w: &WorkloadPoint) -> f64 {
    cpu.energy_per_bit_pj * w.dio_bits as f64
}

fn positive_finite(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be a finite value > 0, got {v}")))
    }
}
