use num_complex::Complex64;
use proptest::prelude::*;

use qlsp::aliasing::{across_loop_alias, in_loop_alias, AliasAnswer, IterRange};
use qlsp::frontend::{parse, parse_output, print_program};
use qlsp::frontend::output::emit;
use qlsp::gate_algebra::{conjugate_through_cz, variant_to_standard, Hint, Mat2, Operand, SqGate};
use qlsp::ir::{Affine, Instruction, QubitRef};
use qlsp::pipeline::{compile, CompileOptions};
use qlsp::qdg::{build, build_multigraph, reduce_multiedges, Qdg, QdgEdge, QdgOptions};
use qlsp::scheduler::{asap_ticks, search_ii};

mod common;
use common::*;

fn range() -> impl Strategy<Value = IterRange> {
    prop_oneof![
        1 => Just(IterRange::Unbounded),
        4 => (-8i64..=8, 0i64..=16).prop_map(|(lo, w)| IterRange::known(lo, (lo + w).min(8))),
    ]
}

fn qref() -> impl Strategy<Value = QubitRef> {
    (-4i64..=4, -6i64..=6).prop_map(|(k, b)| QubitRef::new(0, k, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4000))]

    #[test]
    fn in_loop_matches_brute_force(r1 in qref(), r2 in qref(), t in range()) {
        let ans = in_loop_alias(&r1, &r2, t);
        prop_assert_eq!(ans.aliases(), brute_in_loop(&r1, &r2, t));
        if let AliasAnswer::InLoop { witness } = ans {
            prop_assert!(t.contains(witness) && r1.eval(witness) == r2.eval(witness));
        }
    }

    #[test]
    fn across_loop_matches_brute_force(r1 in qref(), r2 in qref(), t in range()) {
        let ans = across_loop_alias(&r1, &r2, t);
        let got = match ans {
            AliasAnswer::AcrossLoop { delta_i, witness } => {
                prop_assert!(t.contains(witness) && t.contains(witness + delta_i));
                prop_assert_eq!(r1.eval(witness), r2.eval(witness + delta_i));
                Some(delta_i).filter(|d| *d <= MAX_DELTA)
            }
            AliasAnswer::NoAlias => None,
            AliasAnswer::InLoop { .. } => return Err(TestCaseError::fail("in-loop answer from the across-loop query")),
        };
        prop_assert_eq!(got, brute_across(&r1, &r2, t));
    }
}

fn antidiagonal() -> impl Strategy<Value = Mat2> {
    prop_oneof![Just(Mat2::x()), Just(Mat2::y()), (0.0..6.3f64).prop_map(Mat2::rz_plus)]
}

fn diagonal() -> impl Strategy<Value = Mat2> {
    prop_oneof![Just(Mat2::z()), Just(Mat2::s()), Just(Mat2::t()), (0.0..6.3f64).prop_map(Mat2::rz)]
}

proptest! {
    #[test]
    fn antidiagonal_toggles_its_operand(g in antidiagonal(), v in 0usize..4, side in prop::bool::ANY) {
        let (v, s) = (VARIANTS[v], if side { Operand::A } else { Operand::B });
        let (g2, v2) = conjugate_through_cz(&SqGate::Known(g), s, v).unwrap();
        prop_assert_eq!(v2, v.toggled(s));
        let lhs = cz(v) * on(s, &g);
        let SqGate::Known(g2) = g2 else { unreachable!() };
        let rhs = on(s, &g2) * cz(v2);
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-9);
    }

    #[test]
    fn diagonal_commutes(g in diagonal(), v in 0usize..4, side in prop::bool::ANY) {
        let (v, s) = (VARIANTS[v], if side { Operand::A } else { Operand::B });
        let (_, v2) = conjugate_through_cz(&SqGate::Known(g), s, v).unwrap();
        prop_assert_eq!(v2, v);
        prop_assert!((cz(v) * on(s, &g)).max_abs_diff(&(on(s, &g) * cz(v))) < 1e-9);
    }
}

#[test]
fn variant_expansions_are_exact() {
    for v in VARIANTS {
        let (zs, phase) = variant_to_standard(v);
        let mut m = cz(Default::default());
        for s in zs {
            m = on(s, &Mat2::z()) * m;
        }
        let m = m.scale(Complex64::new(phase as f64, 0.0));
        assert!(cz(v).max_abs_diff(&m) < 1e-9, "{v}");
    }
    assert_eq!(variant_to_standard(VARIANTS[0]).1, -1);
}

fn multigraph() -> impl Strategy<Value = Qdg> {
    (1usize..6, prop::collection::vec((0usize..6, 0usize..6, 0i64..=1, 0i64..6), 0..30)).prop_map(|(n, es)| {
        let nodes = (0..n).map(|c| Instruction::known(Mat2::h(), QubitRef::new(0, 0, c as i64), c)).collect();
        let edges = es.into_iter().map(|(f, t, min, dif)| QdgEdge { from: f % n, to: t % n, min, dif }).collect();
        Qdg { nodes, edges }
    })
}

fn gate() -> impl Strategy<Value = SqGate> {
    prop_oneof![
        Just(SqGate::Known(Mat2::h())),
        Just(SqGate::Known(Mat2::x())),
        Just(SqGate::Known(Mat2::t())),
        (0usize..3, 0i64..3).prop_map(|(d, b)| SqGate::elem(d, Affine::constant(b), [Hint::Diagonal, Hint::AntiDiagonal, Hint::Unknown][d])),
    ]
}

fn sref() -> impl Strategy<Value = QubitRef> {
    (0i64..3, 0i64..4).prop_map(|(k, b)| QubitRef::new(0, k, b))
}

fn body() -> impl Strategy<Value = Vec<Instruction>> {
    let ins = prop_oneof![
        (gate(), sref()).prop_map(|(g, r)| Instruction::sq(g, r, 0)),
        (0i64..3, 0i64..4, 0i64..4).prop_filter("distinct", |(_, a, b)| a != b).prop_map(|(k, a, b)| {
            Instruction::cz(QubitRef::new(0, k, a), QubitRef::new(0, k, b), 0)
        }),
    ];
    prop::collection::vec(ins, 1..=8).prop_map(|mut v| {
        for (c, i) in v.iter_mut().enumerate() {
            i.src = c;
        }
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn kept_edge_dominates(g in multigraph()) {
        let r = reduce_multiedges(&g);
        for ii in 1..=10 {
            prop_assert!(reduction_dominates(&g, &r, ii));
        }
    }

    #[test]
    fn kept_edge_dominates_on_real_graphs(b in body(), t in prop_oneof![Just(IterRange::Unbounded), Just(IterRange::known(0, 5))]) {
        let g = build_multigraph(&b, t, QdgOptions::default());
        let r = reduce_multiedges(&g);
        for ii in 1..=10 {
            prop_assert!(reduction_dominates(&g, &r, ii));
        }
    }

    #[test]
    fn schedules_are_legal(b in body(), t in prop_oneof![Just(IterRange::Unbounded), Just(IterRange::known(0, 5))]) {
        for opts in [QdgOptions { antidiagonal_exception: true }, QdgOptions { antidiagonal_exception: false }] {
            let g = build(&b, t, opts);
            let s = search_ii(&g, t, None);
            prop_assert!(s.is_legal(&g));
            prop_assert!(s.ii >= 1 && s.ii <= b.len() as i64 * (b.len() as i64 + 1));
            prop_assert!(s.retries.iter().all(|r| r.within_bound()));
        }
    }

    #[test]
    fn asap_respects_dependencies(b in body()) {
        let t = IterRange::known(0, 0);
        let ticks = asap_ticks(&b, t);
        let g = build(&b, t, QdgOptions { antidiagonal_exception: false });
        for e in g.edges.iter().filter(|e| e.dif == 0) {
            prop_assert!(ticks[e.to] as i64 - ticks[e.from] as i64 >= e.min);
        }
    }
}

fn index(k: i64, b: i64) -> String {
    match (k, b) {
        (0, b) => format!("{b}"),
        (1, 0) => "i".into(),
        (k, b) => format!("{k}*i+{b}"),
    }
}

fn program() -> impl Strategy<Value = String> {
    let line = prop_oneof![
        (0i64..3, 0i64..4, 1i64..4).prop_map(|(k, b, d)| format!("CZ q[{}],q[{}];", index(k, b), index(k, b + d))),
        (prop::sample::select(vec!["H", "X", "T", "Tdg", "S"]), 0i64..3, 0i64..4).prop_map(|(g, k, b)| format!("{g} q[{}];", index(k, b))),
        (0i64..3, 0i64..4).prop_map(|(k, b)| format!("P[i] q[{}];", index(k, b))),
    ];
    (prop::collection::vec(line, 1..6), prop::bool::ANY).prop_map(|(body, known)| {
        let head = "qubit q[32];\ndefgate P[32] = RZ;\n";
        let lp = if known { "for i in 0 to 5 {\n".to_string() } else { "symbolic a, b;\nfor i in a to b {\n".to_string() };
        format!("{head}{lp}{}\n}}\n", body.join("\n"))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn input_round_trips(src in program()) {
        let p = parse(&src).unwrap();
        let again = parse(&print_program(&p)).unwrap();
        prop_assert_eq!(p, again);
    }

    #[test]
    fn output_round_trips(src in program(), unroll in 1i64..4) {
        let p = parse(&src).unwrap();
        let c = compile(&p, &CompileOptions { unroll, ..Default::default() }).unwrap();
        let text = emit(&c.output);
        let back = parse_output(&text).unwrap();
        prop_assert_eq!(emit(&back), text);
    }
}
