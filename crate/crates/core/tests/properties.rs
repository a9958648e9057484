use bitlet_core::analysis::{crossover_oc, litmus, sweep, SweepParam, SweepSpec, Winner};
use bitlet_core::model::{
    mat_power_cap, perf_cpu, perf_pim, pim_power_ceiling, pl_perf_cpu, pl_perf_pim, CpuMachine, PimMachine,
    PowerBudget, WorkloadPoint,
};
use bitlet_core::sim::{ArrayState, NorInstr, NorProgram, Simulator};
use proptest::prelude::*;

const MODEL_CASES: u32 = 10_000;

fn pim_strategy() -> impl Strategy<Value = PimMachine> {
    (
        prop::sample::select(vec![64u64, 128, 256, 512, 1024, 2048]),
        1u64..20_000,
        0.5f64..50.0,
        0.01f64..2.0,
    )
        .prop_map(|(rows, mats, ct, e)| PimMachine::new(rows, 1024, mats, ct, e).unwrap())
}

fn cpu_strategy() -> impl Strategy<Value = CpuMachine> {
    (1u64..65_536, 1.0f64..50.0).prop_map(|(gbps, e)| CpuMachine::from_gbps(gbps as f64, e).unwrap())
}

fn point_strategy() -> impl Strategy<Value = WorkloadPoint> {
    (1u64..100_000, 0u64..5_000, 1u64..512).prop_map(|(oc, pac, dio)| WorkloadPoint::new(oc, pac, dio).unwrap())
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(MODEL_CASES))]

    #[test]
    fn pim_throughput_falls_as_cycles_grow(
        pim in pim_strategy(),
        w in point_strategy(),
        extra in 1u64..10_000,
        split in 0u64..=1,
        tdp in 0.1f64..500.0,
    ) {
        let slower = if split == 0 {
            WorkloadPoint::new(w.oc_cycles() + extra, w.pac_cycles(), w.dio_bits()).unwrap()
        } else {
            WorkloadPoint::new(w.oc_cycles(), w.pac_cycles() + extra, w.dio_bits()).unwrap()
        };
        prop_assert!(perf_pim(&pim, &slower).gops() < perf_pim(&pim, &w).gops());
        let p = PowerBudget::new(tdp).unwrap();
        prop_assert!(pl_perf_pim(&pim, &slower, &p).gops() < pl_perf_pim(&pim, &w, &p).gops());
    }

    #[test]
    fn only_oc_plus_pac_matters(pim in pim_strategy(), w in point_strategy(), shift in 0u64..1000) {
        let shift = shift.min(w.oc_cycles() - 1);
        let moved = WorkloadPoint::new(w.oc_cycles() - shift, w.pac_cycles() + shift, w.dio_bits()).unwrap();
        prop_assert_eq!(perf_pim(&pim, &moved), perf_pim(&pim, &w));
    }

    #[test]
    fn power_limit_never_raises_throughput(
        pim in pim_strategy(),
        cpu in cpu_strategy(),
        w in point_strategy(),
        tdp in 0.01f64..1000.0,
    ) {
        let p = PowerBudget::new(tdp).unwrap();
        prop_assert!(pl_perf_pim(&pim, &w, &p).gops() <= perf_pim(&pim, &w).gops());
        prop_assert!(pl_perf_cpu(&cpu, &w, &p).gops() <= perf_cpu(&cpu, &w).gops());
        let unlimited = PowerBudget::unlimited();
        prop_assert_eq!(pl_perf_pim(&pim, &w, &unlimited), perf_pim(&pim, &w));
        prop_assert_eq!(pl_perf_cpu(&cpu, &w, &unlimited), perf_cpu(&cpu, &w));
    }

    #[test]
    fn linear_in_mats_below_the_cap(
        pim in pim_strategy(),
        w in point_strategy(),
        tdp in 1.0f64..1000.0,
        frac in 0.0f64..1.0,
    ) {
        let p = PowerBudget::new(tdp).unwrap();
        let cap = mat_power_cap(&pim, &p);
        prop_assume!(cap >= 1);
        let m = 1 + ((cap - 1) as f64 * frac) as u64;
        let one = pim.with_mats(1).unwrap();
        let many = pim.with_mats(m).unwrap();
        let per_mat = perf_pim(&one, &w).gops();
        prop_assert!(close(perf_pim(&many, &w).gops(), m as f64 * per_mat));
        prop_assert!(close(pl_perf_pim(&many, &w, &p).gops(), m as f64 * per_mat));
    }

    #[test]
    fn saturates_beyond_the_cap(
        pim in pim_strategy(),
        w in point_strategy(),
        tdp in 0.01f64..100.0,
        beyond in 1u64..100_000,
    ) {
        let p = PowerBudget::new(tdp).unwrap();
        let cap = mat_power_cap(&pim, &p);
        let ceiling = pim_power_ceiling(&pim, &w, &p);
        let over = pim.with_mats(cap + beyond).unwrap();
        prop_assert_eq!(pl_perf_pim(&over, &w, &p).ops_per_second(), ceiling);
        let further = pim.with_mats(cap + beyond + 1).unwrap();
        prop_assert_eq!(pl_perf_pim(&further, &w, &p), pl_perf_pim(&over, &w, &p));
        // At the cap itself raw throughput is still within the budget.
        if cap >= 1 {
            let at = pim.with_mats(cap).unwrap();
            prop_assert!(perf_pim(&at, &w).ops_per_second() <= ceiling * (1.0 + 1e-12));
        }
    }

    #[test]
    fn litmus_agrees_with_crossover(pim in pim_strategy(), cpu in cpu_strategy(), w in point_strategy()) {
        let v = litmus(&pim, &cpu, &w, None);
        let x = crossover_oc(&pim, &cpu, w.dio_bits(), w.pac_cycles());
        let oc = w.oc_cycles() as f64;
        match v.winner {
            Winner::Pim => prop_assert!(oc < x),
            Winner::Cpu => prop_assert!(oc > x),
            Winner::Tie => prop_assert!((oc - x).abs() <= 1e-6 * x.abs().max(1.0)),
        }
    }

    #[test]
    fn crossover_scaling(pim in pim_strategy(), cpu in cpu_strategy(), dio in 1u64..1000) {
        let base = crossover_oc(&pim, &cpu, dio, 0);
        prop_assert!(close(crossover_oc(&pim, &cpu, 2 * dio, 0), 2.0 * base));
        let faster = cpu.with_bandwidth_bps(2.0 * cpu.bandwidth_bps()).unwrap();
        prop_assert!(close(crossover_oc(&pim, &faster, dio, 0), base / 2.0));
        prop_assert!(close(crossover_oc(&pim, &cpu, dio, 7) + 7.0, base));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sweep_rows_match_direct_calls(
        pim in pim_strategy(),
        cpu in cpu_strategy(),
        w in point_strategy(),
        values in prop::collection::vec(1u64..50_000, 1..40),
    ) {
        let spec = SweepSpec {
            param: SweepParam::Oc,
            values: values.iter().map(|&v| v as f64).collect(),
            pim,
            cpu,
            point: w,
            power: Some(PowerBudget::new(20.0).unwrap()),
        };
        let rows = sweep(&spec).unwrap();
        prop_assert_eq!(rows.len(), values.len());
        let p = PowerBudget::new(20.0).unwrap();
        for (row, &oc) in rows.iter().zip(&values) {
            let point = WorkloadPoint::new(oc, w.pac_cycles(), w.dio_bits()).unwrap();
            prop_assert_eq!(row.x, oc as f64);
            prop_assert_eq!(row.pim_gops, perf_pim(&pim, &point).gops());
            prop_assert_eq!(row.cpu_gops, perf_cpu(&cpu, &point).gops());
            prop_assert_eq!(row.pl_pim_gops, pl_perf_pim(&pim, &point, &p).gops());
            prop_assert_eq!(row.pl_cpu_gops, pl_perf_cpu(&cpu, &point, &p).gops());
        }
        prop_assert_eq!(sweep(&spec).unwrap(), rows);
    }
}

const COLS: usize = 12;

fn instr_strategy() -> impl Strategy<Value = NorInstr> {
    prop_oneof![
        3 => (0..COLS, prop::sample::subsequence((0..COLS).collect::<Vec<_>>(), 1..=4))
            .prop_filter_map("dest among sources", |(d, s)| {
                (!s.contains(&d)).then(|| NorInstr::nor(d, s))
            }),
        1 => (0..COLS, 0..COLS)
            .prop_filter_map("self move", |(d, s)| (d != s).then(|| NorInstr::hmove(d, s))),
    ]
}

fn state_strategy(rows: usize) -> impl Strategy<Value = ArrayState> {
    prop::collection::vec(any::<bool>(), rows * COLS).prop_map(move |bits| {
        let mut st = ArrayState::new(rows, COLS).unwrap();
        for (i, b) in bits.into_iter().enumerate() {
            st.set(i / COLS, i % COLS, b);
        }
        st
    })
}

fn program_and_state() -> impl Strategy<Value = (NorProgram, ArrayState)> {
    (prop::collection::vec(instr_strategy(), 0..40), 1usize..150)
        .prop_flat_map(|(instrs, rows)| (Just(NorProgram::new(instrs)), state_strategy(rows)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(MODEL_CASES))]

    #[test]
    fn rows_evolve_independently(
        (program, state) in program_and_state(),
        seed in any::<u64>(),
    ) {
        let rows = state.rows();
        // A rotation by a seed-dependent amount is a row permutation.
        let shift = (seed as usize) % rows;
        let perm = |r: usize| (r + shift) % rows;
        let mut permuted = ArrayState::new(rows, COLS).unwrap();
        for r in 0..rows {
            for c in 0..COLS {
                permuted.set(perm(r), c, state.get(r, c));
            }
        }
        let sim = Simulator::with_max_fanin(4);
        let a = sim.run(&program, &state).unwrap();
        let b = sim.run(&program, &permuted).unwrap();
        prop_assert_eq!(a.cycles, program.len() as u64);
        for r in 0..rows {
            for c in 0..COLS {
                prop_assert_eq!(a.state.get(r, c), b.state.get(perm(r), c));
            }
        }
        let again = sim.run(&program, &state).unwrap();
        prop_assert_eq!(again.state, a.state);
    }

    #[test]
    fn instructions_only_touch_their_destination(
        (program, state) in program_and_state(),
    ) {
        let sim = Simulator::with_max_fanin(4);
        let mut before = state;
        for instr in &program.instrs {
            let step = NorProgram::new(vec![instr.clone()]);
            let after = sim.run(&step, &before).unwrap().state;
            let dest = match instr {
                NorInstr::Nor { dest, .. } | NorInstr::HMove { dest, .. } => *dest,
                NorInstr::VMove { .. } => unreachable!(),
            };
            for r in 0..before.rows() {
                for c in (0..COLS).filter(|&c| c != dest) {
                    prop_assert_eq!(after.get(r, c), before.get(r, c));
                }
            }
            before = after;
        }
    }
}
