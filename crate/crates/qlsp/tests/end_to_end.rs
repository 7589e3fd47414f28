use qlsp::frontend::parse;
use qlsp::ir::LoopRange;
use qlsp::pipeline::{compile, CompileOptions};
use qlsp::verifier::{check_output, range_env, VerifyOptions};

fn corpus(name: &str) -> String {
    std::fs::read_to_string(format!("{}/../../corpus/{name}.qlp", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn worst(name: &str, known: bool, unroll: i64, ranges: &[(i64, i64)]) -> f64 {
    let base = parse(&corpus(name)).unwrap();
    let mut worst = 0.0f64;
    for &(m, n) in ranges {
        let range = if known { LoopRange::Known { m, n } } else { LoopRange::Unknown { a: "lo_".into(), b: "hi_".into() } };
        let p = base.with_range(range);
        let c = compile(&p, &CompileOptions { unroll, ..Default::default() }).unwrap();
        let env = range_env(&p, m, n);
        let d = check_output(&p, (m, n), &c.output, &env, &VerifyOptions { bindings: 3, ..Default::default() })
            .unwrap_or_else(|e| panic!("{name} {m}:{n} C={unroll}: {e}\n{}", qlsp::frontend::output::emit(&c.output)));
        assert!(d < 1e-7, "{name} {m}:{n} C={unroll} known={known}: distance {d}\n{}", qlsp::frontend::output::emit(&c.output));
        worst = worst.max(d);
    }
    worst
}

const SMALL: &[(&str, i64, i64)] = &[
    ("cluster", 1, 3),
    ("array1", 0, 7),
    ("array2", 0, 7),
    ("array3", 0, 5),
    ("three_cz", 0, 6),
    ("guarded_merge", 0, 7),
    ("periodic_merge", 0, 7),
    ("phase_ladder", 0, 7),
    ("single_site", 1, 7),
];

#[test]
fn known_ranges_match_original() {
    for &(name, lo, hi) in SMALL {
        for c in 1..=3 {
            let ranges: Vec<(i64, i64)> = (lo..=hi).map(|n| (lo, n)).collect();
            worst(name, true, c, &ranges);
        }
    }
}

#[test]
fn symbolic_ranges_match_original() {
    for &(name, lo, hi) in SMALL {
        for c in 1..=3 {
            let ranges: Vec<(i64, i64)> = (lo..=hi).flat_map(|m| (m..=hi).map(move |n| (m, n))).collect();
            worst(name, false, c, &ranges);
        }
    }
}
