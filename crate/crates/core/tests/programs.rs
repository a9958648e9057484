use bitlet_core::catalog::{OpKind, OpSpec};
use bitlet_core::microprogram::{microprogram_of, ColumnAssignment};
use bitlet_core::model::PimMachine;
use bitlet_core::pac::{relocation_program, LayoutSpec, Placement};
use bitlet_core::sim::{count_cycles, ArrayState, NorProgram, Simulator};
use bitlet_core::Error;

fn golden(name: &str) -> NorProgram {
    let path = format!("{}/tests/golden/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap().parse().unwrap()
}

fn generated(kind: OpKind, n: u32) -> NorProgram {
    let spec = OpSpec::new(kind, n).unwrap();
    let layout = ColumnAssignment::packed(&spec);
    microprogram_of(&spec, &layout, layout.columns_needed(&spec)).unwrap()
}

#[test]
fn generators_match_golden_files() {
    assert_eq!(generated(OpKind::And, 2), golden("and2.nor"));
    assert_eq!(generated(OpKind::Add, 1), golden("add1.nor"));
    assert_eq!(generated(OpKind::Xor, 1), golden("xor1.nor"));

    let layout = LayoutSpec::new(2, 1, true).unwrap();
    let pim = PimMachine::new(4, 4, 1, 10.0, 0.1).unwrap();
    let reloc = relocation_program(&layout, &pim, &Placement::packed(&layout)).unwrap();
    assert_eq!(reloc, golden("shift2_rows4.nor"));
}

#[test]
fn text_round_trip() {
    for kind in [OpKind::Not, OpKind::Or, OpKind::Add, OpKind::AddFanin4, OpKind::Mpy] {
        let p = generated(kind, 3);
        let back: NorProgram = p.to_string().parse().unwrap();
        assert_eq!(back, p);
    }
}

#[test]
fn golden_full_adder_truth_table() {
    let p = golden("add1.nor");
    let mut st = ArrayState::new(8, 12).unwrap();
    for row in 0..8 {
        st.write_uint(row, 0, 3, row as u64);
    }
    let out = Simulator::new().run(&p, &st).unwrap();
    assert_eq!(out.cycles, 9);
    for row in 0..8u64 {
        let want = (row & 1) + (row >> 1 & 1) + (row >> 2);
        assert_eq!(out.state.read_uint(row as usize, 3, 2), want);
    }
}

#[test]
fn single_nor_on_one_row() {
    let p: NorProgram = "NOR 2 0 1".parse().unwrap();
    let st = ArrayState::new(1, 3).unwrap();
    let out = Simulator::new().run(&p, &st).unwrap();
    assert!(out.state.get(0, 2));
    assert_eq!(count_cycles(&NorProgram::default()), 0);
}

#[test]
fn parse_errors_name_the_line() {
    let err = "NOR 3 0 1\n\nHMOVE 1\n".parse::<NorProgram>().unwrap_err();
    assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
}

#[test]
fn invalid_programs_rejected_before_running() {
    let st = ArrayState::new(2, 4).unwrap();
    for text in ["NOR 1 1 2", "NOR 9 0", "NOR 3 0 1 2", "VMOVE -1 0 2 0", "HMOVE 2 2"] {
        let p: NorProgram = text.parse().unwrap();
        let err = Simulator::new().run(&p, &st).unwrap_err();
        assert!(matches!(err, Error::InvalidProgram { index: 0, .. }), "{text}: {err}");
    }
}

#[test]
fn paper_size_multiply_simulates_quickly() {
    let p = generated(OpKind::Mpy, 16);
    let spec = OpSpec::new(OpKind::Mpy, 16).unwrap();
    let cols = ColumnAssignment::packed(&spec).columns_needed(&spec);
    let st = ArrayState::new(1024, cols.max(1024)).unwrap();
    let start = std::time::Instant::now();
    let out = Simulator::new().run(&p, &st).unwrap();
    assert_eq!(out.cycles, p.len() as u64);
    assert!(start.elapsed().as_secs() < 10);
}
