use std::collections::HashMap;

use bitlet_core::analysis::{self, SweepParam, SweepSpec};
use bitlet_core::catalog::{self, OpKind, OpSpec};
use bitlet_core::figures;
use bitlet_core::microprogram::{microprogram_of, ColumnAssignment};
use bitlet_core::model::{self, PowerBudget};
use bitlet_core::pac;
use bitlet_core::sim::{self, ArrayState, Simulator};
use bitlet_core::validate::{self, Scope};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

create_exception!(bitlet, BitletError, PyValueError);

fn err(e: bitlet_core::Error) -> PyErr {
    BitletError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, v: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| BitletError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn budget(tdp_watts: Option<f64>) -> PyResult<Option<PowerBudget>> {
    tdp_watts.map(PowerBudget::new).transpose().map_err(err)
}

/// Memory-side machine: array geometry, MAT count, cycle time and energy.
#[pyclass(name = "PimMachine", frozen, from_py_object)]
#[derive(Clone)]
struct PyPimMachine(model::PimMachine);

#[pymethods]
impl PyPimMachine {
    #[new]
    #[pyo3(signature = (rows=1024, cols=1024, mats=1024, cycle_time_ns=10.0, energy_per_cycle_pj=0.1))]
    fn new(rows: u64, cols: u64, mats: u64, cycle_time_ns: f64, energy_per_cycle_pj: f64) -> PyResult<Self> {
        model::PimMachine::new(rows, cols, mats, cycle_time_ns, energy_per_cycle_pj)
            .map(Self)
            .map_err(err)
    }

    #[getter]
    fn rows(&self) -> u64 {
        self.0.rows()
    }
    #[getter]
    fn cols(&self) -> u64 {
        self.0.cols()
    }
    #[getter]
    fn mats(&self) -> u64 {
        self.0.mats()
    }
    #[getter]
    fn cycle_time_ns(&self) -> f64 {
        self.0.cycle_time_ns()
    }
    #[getter]
    fn energy_per_cycle_pj(&self) -> f64 {
        self.0.energy_per_cycle_pj()
    }

    fn with_mats(&self, mats: u64) -> PyResult<Self> {
        self.0.with_mats(mats).map(Self).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "PimMachine(rows={}, cols={}, mats={}, cycle_time_ns={}, energy_per_cycle_pj={})",
            self.0.rows(),
            self.0.cols(),
            self.0.mats(),
            self.0.cycle_time_ns(),
            self.0.energy_per_cycle_pj()
        )
    }
}

/// CPU side: memory bandwidth in Gbps (1 Tbps = 1024 Gbps) and transfer
/// energy per bit.
#[pyclass(name = "CpuMachine", frozen, from_py_object)]
#[derive(Clone)]
struct PyCpuMachine(model::CpuMachine);

#[pymethods]
impl PyCpuMachine {
    #[new]
    #[pyo3(signature = (bandwidth_gbps=4096.0, energy_per_bit_pj=15.0))]
    fn new(bandwidth_gbps: f64, energy_per_bit_pj: f64) -> PyResult<Self> {
        model::CpuMachine::from_gbps(bandwidth_gbps, energy_per_bit_pj)
            .map(Self)
            .map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (tbps, energy_per_bit_pj=15.0))]
    fn from_tbps(tbps: f64, energy_per_bit_pj: f64) -> PyResult<Self> {
        model::CpuMachine::from_tbps(tbps, energy_per_bit_pj)
            .map(Self)
            .map_err(err)
    }

    #[getter]
    fn bandwidth_gbps(&self) -> f64 {
        self.0.bandwidth_gbps()
    }
    #[getter]
    fn energy_per_bit_pj(&self) -> f64 {
        self.0.energy_per_bit_pj()
    }

    fn __repr__(&self) -> String {
        format!(
            "CpuMachine(bandwidth_gbps={}, energy_per_bit_pj={})",
            self.0.bandwidth_gbps(),
            self.0.energy_per_bit_pj()
        )
    }
}

/// Cycles per operation (OC), alignment cycles (PAC) and CPU bits per
/// operation (DIO).
#[pyclass(name = "WorkloadPoint", frozen, from_py_object)]
#[derive(Clone)]
struct PyWorkloadPoint(model::WorkloadPoint);

#[pymethods]
impl PyWorkloadPoint {
    #[new]
    #[pyo3(signature = (oc, pac=0, dio=48))]
    fn new(oc: u64, pac: u64, dio: u64) -> PyResult<Self> {
        model::WorkloadPoint::new(oc, pac, dio).map(Self).map_err(err)
    }

    #[getter]
    fn oc(&self) -> u64 {
        self.0.oc_cycles()
    }
    #[getter]
    fn pac(&self) -> u64 {
        self.0.pac_cycles()
    }
    #[getter]
    fn dio(&self) -> u64 {
        self.0.dio_bits()
    }

    fn __repr__(&self) -> String {
        format!("WorkloadPoint(oc={}, pac={}, dio={})", self.oc(), self.pac(), self.dio())
    }
}

#[pyclass(name = "LayoutSpec", frozen, from_py_object)]
#[derive(Clone)]
struct PyLayoutSpec(pac::LayoutSpec);

#[pymethods]
impl PyLayoutSpec {
    #[new]
    #[pyo3(signature = (element_width_bits, misaligned_subsets=0, needs_vertical_relocation=false, hmove_override=None, vmove_override=None))]
    fn new(
        element_width_bits: u32,
        misaligned_subsets: u32,
        needs_vertical_relocation: bool,
        hmove_override: Option<u64>,
        vmove_override: Option<u64>,
    ) -> PyResult<Self> {
        let layout = pac::LayoutSpec {
            element_width_bits,
            misaligned_subsets,
            needs_vertical_relocation,
            hmove_override,
            vmove_override,
        };
        layout.validate().map_err(err)?;
        Ok(Self(layout))
    }

    fn hmoves(&self) -> u64 {
        self.0.hmoves()
    }

    fn vmoves(&self, rows: u64) -> u64 {
        self.0.vmoves(rows)
    }
}

/// A row-parallel NOR/move program in the line-oriented text format.
#[pyclass(name = "NorProgram", frozen, from_py_object)]
#[derive(Clone)]
struct PyNorProgram(sim::NorProgram);

#[pymethods]
impl PyNorProgram {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        text.parse().map(Self).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    #[getter]
    fn max_fanin(&self) -> usize {
        self.0.max_fanin()
    }

    /// Runs the program with one integer per row for each declared input
    /// and returns each declared output the same way.
    #[pyo3(signature = (inputs, max_fanin=4))]
    fn run(&self, inputs: HashMap<String, Vec<u64>>, max_fanin: usize) -> PyResult<HashMap<String, Vec<u64>>> {
        let rows = inputs.values().map(Vec::len).max().unwrap_or(1).max(1);
        let cols = self.0.columns_used().max(1);
        let mut state = ArrayState::new(rows, cols).map_err(err)?;
        for (name, values) in &inputs {
            let op = self
                .0
                .input(name)
                .ok_or_else(|| BitletError::new_err(format!("no input named `{name}`")))?;
            if values.len() != rows {
                return Err(BitletError::new_err("every input needs one value per row"));
            }
            let width = op.cols.len().min(64);
            for (row, &v) in values.iter().enumerate() {
                state.write_uint(row, op.cols.start, width, v);
            }
        }
        let outcome = Simulator::with_max_fanin(max_fanin).run(&self.0, &state).map_err(err)?;
        Ok(self
            .0
            .outputs
            .iter()
            .map(|op| {
                let width = op.cols.len().min(64);
                let vals = (0..rows).map(|r| outcome.state.read_uint(r, op.cols.start, width)).collect();
                (op.name.clone(), vals)
            })
            .collect())
    }
}

/// Catalog cycle count of an `n`-bit operation; `custom_oc` prices CUSTOM.
#[pyfunction]
#[pyo3(signature = (kind, width_bits, custom_oc=None))]
fn oc_of(kind: &str, width_bits: u32, custom_oc: Option<u64>) -> PyResult<u64> {
    let kind = OpKind::from_name(kind, custom_oc).map_err(err)?;
    let spec = OpSpec::new(kind, width_bits).map_err(err)?;
    catalog::oc_of(&spec).map_err(err)
}

#[pyfunction]
fn pac_of(layout: PyLayoutSpec, pim: PyPimMachine) -> u64 {
    pac::pac_of(&layout.0, &pim.0)
}

/// Generated NOR program for an operation on the packed column layout.
#[pyfunction]
fn microprogram(kind: &str, width_bits: u32) -> PyResult<PyNorProgram> {
    let spec = OpSpec::new(kind.parse().map_err(err)?, width_bits).map_err(err)?;
    let layout = ColumnAssignment::packed(&spec);
    microprogram_of(&spec, &layout, layout.columns_needed(&spec))
        .map(PyNorProgram)
        .map_err(err)
}

#[pyfunction]
fn perf_pim(pim: PyPimMachine, w: PyWorkloadPoint) -> f64 {
    model::perf_pim(&pim.0, &w.0).gops()
}

#[pyfunction]
fn perf_cpu(cpu: PyCpuMachine, w: PyWorkloadPoint) -> f64 {
    model::perf_cpu(&cpu.0, &w.0).gops()
}

#[pyfunction]
fn pl_perf_pim(pim: PyPimMachine, w: PyWorkloadPoint, tdp_watts: f64) -> PyResult<f64> {
    let p = PowerBudget::new(tdp_watts).map_err(err)?;
    Ok(model::pl_perf_pim(&pim.0, &w.0, &p).gops())
}

#[pyfunction]
fn pl_perf_cpu(cpu: PyCpuMachine, w: PyWorkloadPoint, tdp_watts: f64) -> PyResult<f64> {
    let p = PowerBudget::new(tdp_watts).map_err(err)?;
    Ok(model::pl_perf_cpu(&cpu.0, &w.0, &p).gops())
}

#[pyfunction]
fn mat_power_cap(pim: PyPimMachine, tdp_watts: f64) -> PyResult<u64> {
    let p = PowerBudget::new(tdp_watts).map_err(err)?;
    Ok(model::mat_power_cap(&pim.0, &p))
}

#[pyfunction]
#[pyo3(signature = (pim, cpu, dio, pac=0))]
fn crossover_oc(pim: PyPimMachine, cpu: PyCpuMachine, dio: u64, pac: u64) -> f64 {
    analysis::crossover_oc(&pim.0, &cpu.0, dio, pac)
}

#[pyfunction]
#[pyo3(signature = (pim, cpu, dio, pac=0))]
fn energy_breakeven_oc(pim: PyPimMachine, cpu: PyCpuMachine, dio: u64, pac: u64) -> f64 {
    analysis::energy_breakeven_oc(&pim.0, &cpu.0, dio, pac)
}

/// Verdict as a dict; the winner is decided under the budget when given.
#[pyfunction]
#[pyo3(signature = (pim, cpu, w, tdp_watts=None))]
fn litmus<'py>(
    py: Python<'py>,
    pim: PyPimMachine,
    cpu: PyCpuMachine,
    w: PyWorkloadPoint,
    tdp_watts: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let p = budget(tdp_watts)?;
    to_py(py, &analysis::litmus(&pim.0, &cpu.0, &w.0, p.as_ref()))
}

/// Rows of (x, pim_gops, cpu_gops, pl_pim_gops, pl_cpu_gops) as dicts.
#[pyfunction]
#[pyo3(signature = (param, values, pim, cpu, w, tdp_watts=None))]
fn sweep<'py>(
    py: Python<'py>,
    param: &str,
    values: Vec<f64>,
    pim: PyPimMachine,
    cpu: PyCpuMachine,
    w: PyWorkloadPoint,
    tdp_watts: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = SweepSpec {
        param: param.parse::<SweepParam>().map_err(err)?,
        values,
        pim: pim.0,
        cpu: cpu.0,
        point: w.0,
        power: budget(tdp_watts)?,
    };
    let rows = analysis::sweep(&spec).map_err(err)?;
    to_py(py, &rows)
}

/// Runs the simulator cross-checks; returns a dict with `checks`.
#[pyfunction]
#[pyo3(signature = (scope="all"))]
fn run_validation<'py>(py: Python<'py>, scope: &str) -> PyResult<Bound<'py, PyAny>> {
    let scope: Scope = scope.parse().map_err(BitletError::new_err)?;
    let report = py.detach(|| validate::validate(scope));
    to_py(py, &report)
}

/// CSV text of `fig1`, `fig2` or `fig3` on the default machines.
#[pyfunction]
fn reproduce(figure: &str) -> PyResult<String> {
    let pim = model::PimMachine::default();
    let cpu = model::CpuMachine::default();
    let table = match figure {
        "fig1" => figures::fig1(),
        "fig2" => figures::fig2(&pim, &cpu),
        "fig3" => figures::fig3(&pim, &cpu),
        other => return Err(BitletError::new_err(format!("unknown figure `{other}`"))),
    }
    .map_err(err)?;
    Ok(table.to_csv())
}

#[pymodule]
fn bitlet(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("BitletError", m.py().get_type::<BitletError>())?;
    m.add_class::<PyPimMachine>()?;
    m.add_class::<PyCpuMachine>()?;
    m.add_class::<PyWorkloadPoint>()?;
    m.add_class::<PyLayoutSpec>()?;
    m.add_class::<PyNorProgram>()?;
    m.add_function(wrap_pyfunction!(oc_of, m)?)?;
    m.add_function(wrap_pyfunction!(pac_of, m)?)?;
    m.add_function(wrap_pyfunction!(microprogram, m)?)?;
    m.add_function(wrap_pyfunction!(perf_pim, m)?)?;
    m.add_function(wrap_pyfunction!(perf_cpu, m)?)?;
    m.add_function(wrap_pyfunction!(pl_perf_pim, m)?)?;
    m.add_function(wrap_pyfunction!(pl_perf_cpu, m)?)?;
    m.add_function(wrap_pyfunction!(mat_power_cap, m)?)?;
    m.add_function(wrap_pyfunction!(crossover_oc, m)?)?;
    m.add_function(wrap_pyfunction!(energy_breakeven_oc, m)?)?;
    m.add_function(wrap_pyfunction!(litmus, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(run_validation, m)?)?;
    m.add_function(wrap_pyfunction!(reproduce, m)?)?;
    Ok(())
}
