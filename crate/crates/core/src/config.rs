//! JSON machine and workload descriptions. Omitted fields take the
//! default machine values; unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::analysis::Workload;
use crate::catalog::{OpKind, OpSpec};
use crate::error::{Error, Result};
use crate::model::{CpuMachine, PimMachine, PowerBudget};
use crate::pac::LayoutSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PimSection {
    #[serde(default = "PimSection::rows")]
    pub rows: u64,
    #[serde(default = "PimSection::cols")]
    pub cols: u64,
    #[serde(default = "PimSection::mats")]
    pub mats: u64,
    #[serde(default = "PimSection::cycle_time_ns")]
    pub cycle_time_ns: f64,
    #[serde(default = "PimSection::energy_per_cycle_pj")]
    pub energy_per_cycle_pj: f64,
}

impl PimSection {
    fn rows() -> u64 {
        PimMachine::DEFAULT_ROWS
    }
    fn cols() -> u64 {
        PimMachine::DEFAULT_COLS
    }
    fn mats() -> u64 {
        PimMachine::DEFAULT_MATS
    }
    fn cycle_time_ns() -> f64 {
        PimMachine::DEFAULT_CYCLE_TIME_NS
    }
    fn energy_per_cycle_pj() -> f64 {
        PimMachine::DEFAULT_ENERGY_PER_CYCLE_PJ
    }
}

impl Default for PimSection {
    fn default() -> Self {
        Self {
            rows: Self::rows(),
            cols: Self::cols(),
            mats: Self::mats(),
            cycle_time_ns: Self::cycle_time_ns(),
            energy_per_cycle_pj: Self::energy_per_cycle_pj(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CpuSection {
    /// Integer Gbps; 1 Tbps is 1024 Gbps.
    #[serde(default = "CpuSection::bandwidth_gbps")]
    pub bandwidth_gbps: u64,
    #[serde(default = "CpuSection::energy_per_bit_pj")]
    pub energy_per_bit_pj: f64,
}

impl CpuSection {
    fn bandwidth_gbps() -> u64 {
        CpuMachine::DEFAULT_BANDWIDTH_GBPS
    }
    fn energy_per_bit_pj() -> f64 {
        CpuMachine::DEFAULT_ENERGY_PER_BIT_PJ
    }
}

impl Default for CpuSection {
    fn default() -> Self {
        Self {
            bandwidth_gbps: Self::bandwidth_gbps(),
            energy_per_bit_pj: Self::energy_per_bit_pj(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tdp_watts: Option<f64>,
}

/// Layout fields of a workload; the element width defaults to the
/// operation width.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element_width_bits: Option<u32>,
    #[serde(default)]
    pub misaligned_subsets: u32,
    #[serde(default)]
    pub needs_vertical_relocation: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hmove_override: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vmove_override: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadEntry {
    pub name: String,
    pub op: String,
    pub width_bits: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oc_override: Option<u64>,
    pub dio_bits: u64,
    #[serde(default)]
    pub layout: LayoutSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub pim: PimSection,
    #[serde(default)]
    pub cpu: CpuSection,
    #[serde(default)]
    pub power: PowerSection,
    #[serde(default)]
    pub workloads: Vec<WorkloadEntry>,
}

/// A validated configuration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    pub pim: PimMachine,
    pub cpu: CpuMachine,
    pub power: Option<PowerBudget>,
    pub workloads: Vec<Workload>,
}

/// 1-based line of the first occurrence of `needle`, or 1.
fn line_of(text: &str, needle: &str) -> usize {
    text.lines()
        .position(|l| l.contains(needle))
        .map_or(1, |i| i + 1)
}

fn at_line(text: &str, needle: &str, e: Error) -> Error {
    Error::Parse {
        line: line_of(text, needle),
        reason: e.to_string(),
    }
}

impl Config {
    /// Parses and validates; every error names the offending line.
    pub fn parse(text: &str) -> Result<Self> {
        let file: ConfigFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line().max(1),
            reason: e.to_string(),
        })?;
        let p = &file.pim;
        let pim = PimMachine::new(p.rows, p.cols, p.mats, p.cycle_time_ns, p.energy_per_cycle_pj)
            .map_err(|e| at_line(text, "\"pim\"", e))?;
        let cpu = CpuMachine::from_gbps(file.cpu.bandwidth_gbps as f64, file.cpu.energy_per_bit_pj)
            .map_err(|e| at_line(text, "\"cpu\"", e))?;
        let power = file
            .power
            .tdp_watts
            .map(PowerBudget::new)
            .transpose()
            .map_err(|e| at_line(text, "\"tdp_watts\"", e))?;
        let mut workloads = Vec::with_capacity(file.workloads.len());
        for entry in &file.workloads {
            let w = entry
                .to_workload(&pim)
                .map_err(|e| at_line(text, &format!("\"{}\"", entry.name), e))?;
            workloads.push(w);
        }
        Ok(Self {
            pim,
            cpu,
            power,
            workloads,
        })
    }
}

impl WorkloadEntry {
    /// Builds the workload and checks that it resolves to cycle counts.
    pub fn to_workload(&self, pim: &PimMachine) -> Result<Workload> {
        let kind = OpKind::from_name(&self.op, self.oc_override)?;
        let op = OpSpec::new(kind, self.width_bits)?;
        let l = &self.layout;
        let layout = LayoutSpec {
            element_width_bits: l.element_width_bits.unwrap_or(self.width_bits),
            misaligned_subsets: l.misaligned_subsets,
            needs_vertical_relocation: l.needs_vertical_relocation,
            hmove_override: l.hmove_override,
            vmove_override: l.vmove_override,
        };
        layout.validate()?;
        let mut w = Workload::new(self.name.clone(), op, self.dio_bits).with_layout(layout);
        if !matches!(kind, OpKind::Custom(_)) {
            w.oc_override = self.oc_override;
        }
        w.resolve(pim)?;
        Ok(w)
    }
}
