//! Prints the NOR program for an operation, e.g. `dump_program ADD 4`.

use bitlet_core::catalog::OpSpec;
use bitlet_core::microprogram::{microprogram_of, ColumnAssignment};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    if args.len() != 3 {
        eprintln!("usage: dump_program KIND WIDTH");
        std::process::exit(2);
    }
    let spec = OpSpec::new(args[1].parse().unwrap(), args[2].parse().unwrap()).unwrap();
    let layout = ColumnAssignment::packed(&spec);
    let program = microprogram_of(&spec, &layout, layout.columns_needed(&spec)).unwrap();
    print!("{program}");
}
