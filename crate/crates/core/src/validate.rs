//! Cross-checks the cycle catalog and the PAC formula against programs run
//! on the array simulator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::catalog::{oc_of, OpKind, OpSpec};
use crate::error::Result;
use crate::microprogram::{microprogram_of, output_width, required_fanin, ColumnAssignment};
use crate::model::PimMachine;
use crate::pac::{pac_of, relocation_program, subset_rows, LayoutSpec, Placement};
use crate::sim::{count_cycles, ArrayState, NorProgram, Simulator};

/// Kinds whose generated gate count must equal the catalog.
pub const COUNTED_KINDS: [OpKind; 6] = [
    OpKind::Not,
    OpKind::Or,
    OpKind::And,
    OpKind::Xor,
    OpKind::Add,
    OpKind::AddFanin4,
];

pub const MAX_CHECKED_WIDTH: u32 = 32;
/// Widths up to this are checked on every input combination.
pub const EXHAUSTIVE_WIDTH: u32 = 4;
pub const RANDOM_VECTORS: usize = 1000;
const SEED: u64 = 0x5eed_b175;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Catalog,
    Pac,
    All,
}

impl std::str::FromStr for Scope {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "catalog" => Ok(Scope::Catalog),
            "pac" => Ok(Scope::Pac),
            "all" => Ok(Scope::All),
            other => Err(format!("unknown scope `{other}` (catalog|pac|all)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }
}

/// Runs the suite against the built-in catalog.
pub fn validate(scope: Scope) -> Report {
    validate_with(scope, |spec| oc_of(spec).ok())
}

/// Runs the suite against an arbitrary cycle table, e.g. one loaded from
/// disk.
pub fn validate_with(scope: Scope, catalog: impl Fn(&OpSpec) -> Option<u64>) -> Report {
    let mut report = Report::default();
    if matches!(scope, Scope::Catalog | Scope::All) {
        check_catalog(&mut report, &catalog);
    }
    if matches!(scope, Scope::Pac | Scope::All) {
        check_pac(&mut report);
    }
    report
}

fn check_catalog(report: &mut Report, catalog: &impl Fn(&OpSpec) -> Option<u64>) {
    for kind in COUNTED_KINDS {
        let mut count_mismatches = Vec::new();
        let mut functional_failures = Vec::new();
        for n in 1..=MAX_CHECKED_WIDTH {
            let spec = OpSpec::new(kind, n).expect("width in range");
            let program = match generate(&spec) {
                Ok(p) => p,
                Err(e) => {
                    functional_failures.push(format!("n={n}: {e}"));
                    continue;
                }
            };
            let cycles = count_cycles(&program);
            match catalog(&spec) {
                Some(oc) if oc == cycles => {}
                Some(oc) => count_mismatches.push(format!("n={n}: program {cycles}, catalog {oc}")),
                None => count_mismatches.push(format!("n={n}: catalog has no entry")),
            }
            if let Err(msg) = functional_check(&spec, &program) {
                functional_failures.push(format!("n={n}: {msg}"));
            }
        }
        report.push(
            format!("{kind} gate count n=1..{MAX_CHECKED_WIDTH}"),
            count_mismatches.is_empty(),
            summary(&count_mismatches, "program length equals catalog OC"),
        );
        report.push(
            format!("{kind} functional n=1..{MAX_CHECKED_WIDTH}"),
            functional_failures.is_empty(),
            summary(&functional_failures, "outputs match the reference"),
        );
    }

    // Multiply: functional only; the gate count is reported for comparison.
    for n in [4u32, 8, 16] {
        let spec = OpSpec::new(OpKind::Mpy, n).expect("width in range");
        match generate(&spec) {
            Ok(program) => {
                let result = functional_check(&spec, &program);
                let catalog_oc = catalog(&spec).map_or("none".to_string(), |c| c.to_string());
                report.push(
                    format!("MPY functional n={n}"),
                    result.is_ok(),
                    match result {
                        Ok(()) => format!(
                            "product matches; program {} gates, catalog {catalog_oc}",
                            program.len()
                        ),
                        Err(e) => e,
                    },
                );
            }
            Err(e) => report.push(format!("MPY functional n={n}"), false, e.to_string()),
        }
    }
}

fn summary(problems: &[String], ok: &str) -> String {
    match problems {
        [] => ok.to_string(),
        [one] => one.clone(),
        [first, rest @ ..] => format!("{first} (+{} more)", rest.len()),
    }
}

fn generate(spec: &OpSpec) -> Result<NorProgram> {
    let layout = ColumnAssignment::packed(spec);
    microprogram_of(spec, &layout, layout.columns_needed(spec))
}

/// Integer reference for every generated kind; `b` and `carry` are ignored
/// where the operation has no such operand.
pub fn reference(kind: OpKind, n: u32, a: u64, b: u64, carry: u64) -> u64 {
    let mask = if n >= 64 { u64::MAX } else { (1u64 << n) - 1 };
    match kind {
        OpKind::Not => !a & mask,
        OpKind::Or => a | b,
        OpKind::And => a & b,
        OpKind::Xor => a ^ b,
        OpKind::Add | OpKind::AddFanin4 => a + b + carry,
        OpKind::Mpy => a * b,
        OpKind::MpyLowPrec => (a * b) & mask,
        OpKind::Custom(_) => unimplemented!("custom operations have no reference"),
    }
}

/// Runs `program` over every input combination (narrow widths) or
/// `RANDOM_VECTORS` seeded random rows and compares with `reference`.
pub fn functional_check(spec: &OpSpec, program: &NorProgram) -> std::result::Result<(), String> {
    let n = spec.width_bits;
    let kind = spec.kind;
    let has_b = program.input("b").is_some();
    let has_carry = program.input("carry_in").is_some();
    let vectors: Vec<(u64, u64, u64)> = if n <= EXHAUSTIVE_WIDTH {
        let span = 1u64 << n;
        let mut v = Vec::new();
        for a in 0..span {
            for b in 0..if has_b { span } else { 1 } {
                for c in 0..if has_carry { 2 } else { 1 } {
                    v.push((a, b, c));
                }
            }
        }
        v
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ (n as u64) << 8 ^ kind_tag(kind));
        let mask = (1u64 << n) - 1;
        (0..RANDOM_VECTORS)
            .map(|_| {
                let a = rng.random::<u64>() & mask;
                let b = if has_b { rng.random::<u64>() & mask } else { 0 };
                let c = if has_carry { rng.random_range(0..2) } else { 0 };
                (a, b, c)
            })
            .collect()
    };

    let layout = ColumnAssignment::packed(spec);
    let mut state = ArrayState::new(vectors.len(), layout.columns_needed(spec)).map_err(|e| e.to_string())?;
    for (row, &(a, b, c)) in vectors.iter().enumerate() {
        state.write_uint(row, layout.a, n as usize, a);
        if has_b {
            state.write_uint(row, layout.b, n as usize, b);
        }
        if has_carry {
            state.write_uint(row, layout.carry_in, 1, c);
        }
    }
    let sim = Simulator::with_max_fanin(required_fanin(kind).max(2));
    let outcome = sim.run(program, &state).map_err(|e| e.to_string())?;
    if outcome.cycles != count_cycles(program) {
        return Err(format!("ran {} cycles for {} instructions", outcome.cycles, program.len()));
    }
    let width = output_width(spec);
    for (row, &(a, b, c)) in vectors.iter().enumerate() {
        let got = outcome.state.read_uint(row, layout.out, width);
        let want = reference(kind, n, a, b, c);
        if got != want {
            return Err(format!("a={a} b={b} carry={c}: got {got}, want {want}"));
        }
    }
    Ok(())
}

fn kind_tag(kind: OpKind) -> u64 {
    OpKind::BUILTIN.iter().position(|k| *k == kind).unwrap_or(0) as u64
}

/// Array height used for the exhaustive layout harness.
pub const PAC_TEST_ROWS: u64 = 64;
pub const PAC_MAX_SUBSETS: u32 = 4;

fn check_pac(report: &mut Report) {
    let mut count_failures = Vec::new();
    let mut move_failures = Vec::new();
    let mut layouts = 0;
    for n in 1..=MAX_CHECKED_WIDTH {
        for k in 0..=PAC_MAX_SUBSETS {
            for vertical in [false, true] {
                layouts += 1;
                let layout = LayoutSpec::new(n, k, vertical).expect("valid layout");
                let cols = (k as u64 + 1) * n as u64;
                let pim = PimMachine::new(PAC_TEST_ROWS, cols, 1, 10.0, 0.1).expect("valid machine");
                let tag = format!("n={n} k={k} vertical={vertical}");
                match relocation_check(&layout, &pim, SEED ^ layouts) {
                    Ok(cycles) if cycles == pac_of(&layout, &pim) => {}
                    Ok(cycles) => count_failures.push(format!(
                        "{tag}: program {cycles}, formula {}",
                        pac_of(&layout, &pim)
                    )),
                    Err(e) => move_failures.push(format!("{tag}: {e}")),
                }
            }
        }
    }
    report.push(
        format!("PAC program length, {layouts} layouts on {PAC_TEST_ROWS} rows"),
        count_failures.is_empty(),
        summary(&count_failures, "cycle count equals k*n + ROW*vertical"),
    );
    report.push(
        format!("PAC relocation result, {layouts} layouts"),
        move_failures.is_empty(),
        summary(&move_failures, "every element lands in its target cells"),
    );

    let pim = PimMachine::default();
    let layout = LayoutSpec::new(16, 1, true).expect("valid layout");
    let result = relocation_check(&layout, &pim, SEED);
    report.push(
        "PAC worked example a(i) = b(i+1) + c(i), n=16, ROW=1024",
        result == Ok(1040) && pac_of(&layout, &pim) == 1040,
        match result {
            Ok(c) => format!("{c} cycles, formula {}", pac_of(&layout, &pim)),
            Err(e) => e,
        },
    );
}

/// Builds and runs the relocation program for `layout` on random data and
/// verifies every target cell; returns the cycle count.
pub fn relocation_check(layout: &LayoutSpec, pim: &PimMachine, seed: u64) -> std::result::Result<u64, String> {
    let placement = Placement::packed(layout);
    let program = relocation_program(layout, pim, &placement).map_err(|e| e.to_string())?;
    let rows = pim.rows() as usize;
    let cols = placement.columns_needed(layout).max(1);
    let n = layout.element_width_bits as usize;
    let k = layout.misaligned_subsets as usize;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = ArrayState::new(rows, cols).map_err(|e| e.to_string())?;
    for row in 0..rows {
        for col in 0..cols {
            state.set(row, col, rng.random());
        }
    }
    let initial = state.clone();
    let outcome = Simulator::new().run(&program, &initial).map_err(|e| e.to_string())?;

    let source_row = |i: usize| {
        if layout.needs_vertical_relocation {
            (i + 1) % rows
        } else {
            i
        }
    };
    for i in 0..rows {
        let src_col = if k == 0 {
            placement.target_col
        } else {
            let j = (0..k)
                .find(|&j| {
                    let (lo, hi) = subset_rows(j, k, rows);
                    (lo..hi).contains(&i)
                })
                .expect("bands cover every row");
            placement.source_cols[j]
        };
        for bit in 0..n {
            let want = initial.get(source_row(i), src_col + bit);
            let got = outcome.state.get(i, placement.target_col + bit);
            if want != got {
                return Err(format!("row {i} bit {bit} not relocated"));
            }
        }
    }
    Ok(outcome.cycles)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_functions() {
        assert_eq!(reference(OpKind::Not, 4, 0b1010, 0, 0), 0b0101);
        assert_eq!(reference(OpKind::Add, 4, 15, 15, 1), 31);
        assert_eq!(reference(OpKind::Mpy, 16, 65535, 65535, 0), 65535 * 65535);
        assert_eq!(reference(OpKind::MpyLowPrec, 16, 65535, 65535, 0), 1);
    }

    #[test]
    fn pac_scope_passes() {
        let report = validate(Scope::Pac);
        assert!(report.all_passed(), "{:#?}", report.failures().collect::<Vec<_>>());
        assert_eq!(report.checks.len(), 3);
    }

    #[test]
    fn corrupted_catalog_fails() {
        let report = validate_with(Scope::Catalog, |spec| {
            let oc = oc_of(spec).ok()?;
            Some(if spec.kind == OpKind::And && spec.width_bits == 16 { oc + 1 } else { oc })
        });
        let and = report
            .checks
            .iter()
            .find(|c| c.name.starts_with("AND gate count"))
            .unwrap();
        assert!(!and.passed);
        assert!(and.detail.contains("n=16"));
        assert!(!report.all_passed());
    }

    #[test]
    fn scope_names() {
        assert_eq!("all".parse::<Scope>().unwrap(), Scope::All);
        assert!("everything".parse::<Scope>().is_err());
    }
}
