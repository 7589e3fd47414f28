//! Random one-loop programs, compiled and simulated against their unrolled originals.

use proptest::prelude::*;

use qlsp::frontend::parse;
use qlsp::ir::LoopRange;
use qlsp::pipeline::{compile, CompileOptions};
use qlsp::verifier::{check_output, range_env, VerifyError, VerifyOptions};

#[derive(Clone, Debug)]
enum Gen {
    Cz { k: i64, b1: i64, b2: i64 },
    Named(&'static str, i64, i64),
    Phase(i64, i64),
    Flip(i64, i64),
}

fn index(k: i64, b: i64) -> String {
    match k {
        0 => format!("{b}"),
        1 => format!("i+{b}"),
        _ => format!("{k}*i+{b}"),
    }
}

fn op() -> impl Strategy<Value = Gen> {
    prop_oneof![
        2 => (0i64..3, 0i64..4, 0i64..4).prop_filter("distinct operands", |(_, a, b)| a != b).prop_map(|(k, b1, b2)| Gen::Cz { k, b1, b2 }),
        1 => (prop::sample::select(vec!["H", "T", "S", "Y", "X"]), 0i64..3, 0i64..4).prop_map(|(g, k, b)| Gen::Named(g, k, b)),
        1 => (0i64..3, 0i64..4).prop_map(|(k, b)| Gen::Phase(k, b)),
        1 => (0i64..3, 0i64..4).prop_map(|(k, b)| Gen::Flip(k, b)),
    ]
}

fn source(body: &[Gen]) -> String {
    let mut s = String::from("qubit q[24];\ndefgate P[24] = RZ;\ndefgate F[24] = RZ+;\nsymbolic a, b;\nfor i in a to b {\n");
    for g in body {
        s += &match g {
            Gen::Cz { k, b1, b2 } => format!("CZ q[{}],q[{}];\n", index(*k, *b1), index(*k, *b2)),
            Gen::Named(n, k, b) => format!("{n} q[{}];\n", index(*k, *b)),
            Gen::Phase(k, b) => format!("P[i] q[{}];\n", index(*k, *b)),
            Gen::Flip(k, b) => format!("F[i] q[{}];\n", index(*k, *b)),
        };
    }
    s + "}\n"
}

const VERIFY: VerifyOptions = VerifyOptions { bindings: 2, states: 2, max_qubits: 16, seed: 0, tol: 1e-7 };

fn check(src: &str, range: LoopRange, runs: &[(i64, i64)], unroll: i64, compact: bool) -> Result<(), TestCaseError> {
    let p = parse(src).unwrap().with_range(range);
    let c = compile(&p, &CompileOptions { unroll, compact, ..Default::default() }).unwrap();
    for &(m, n) in runs {
        match check_output(&p, (m, n), &c.output, &range_env(&p, m, n), &VERIFY) {
            Ok(d) => prop_assert!(d < 1e-7, "{m}:{n} C={unroll} distance {d}\n{src}"),
            Err(VerifyError::OutOfBounds { .. }) => {}
            Err(e) => return Err(TestCaseError::fail(format!("{m}:{n}: {e}\n{src}"))),
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn known_ranges(body in prop::collection::vec(op(), 2..7), unroll in 1i64..4, compact in prop::bool::weighted(0.8), m in 0i64..2, len in 1i64..6) {
        let n = m + len - 1;
        check(&source(&body), LoopRange::Known { m, n }, &[(m, n)], unroll, compact)?;
    }

    #[test]
    fn symbolic_ranges(body in prop::collection::vec(op(), 2..7), unroll in 1i64..4, compact in prop::bool::weighted(0.8)) {
        let runs: Vec<(i64, i64)> = (0..2).flat_map(|m| (m..m + 5).map(move |n| (m, n))).collect();
        check(&source(&body), LoopRange::Unknown { a: "a".into(), b: "b".into() }, &runs, unroll, compact)?;
    }
}
