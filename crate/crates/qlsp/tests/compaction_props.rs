use proptest::prelude::*;

use qlsp::aliasing::IterRange;
use qlsp::compaction::{compact_bidirectional, compact_fixpoint, compact_once, same_body, Direction};
use qlsp::gate_algebra::{Hint, Mat2, SqGate};
use qlsp::ir::{Affine, Instruction, QubitRef};

fn gate() -> impl Strategy<Value = SqGate> {
    prop_oneof![
        Just(SqGate::Known(Mat2::h())),
        Just(SqGate::Known(Mat2::x())),
        Just(SqGate::Known(Mat2::z())),
        Just(SqGate::Known(Mat2::s())),
        Just(SqGate::Known(Mat2::t())),
        Just(SqGate::Known(Mat2::y())),
        (0.0..6.0f64).prop_map(|a| SqGate::Known(Mat2::rz(a))),
        (0.0..6.0f64).prop_map(|a| SqGate::Known(Mat2::rz_plus(a))),
        (0.0..3.0f64, 0.0..3.0f64).prop_map(|(a, b)| SqGate::Known(Mat2::u3(a, b, 0.3))),
        (0usize..3, 0i64..3).prop_map(|(d, b)| {
            let hint = [Hint::Diagonal, Hint::AntiDiagonal, Hint::Unknown][d];
            SqGate::elem(d, Affine::constant(b), hint)
        }),
    ]
}

/// Six constant qubits, plus a few slope-1 references that alias them at some iterations.
fn qref() -> impl Strategy<Value = QubitRef> {
    prop_oneof![4 => (0i64..6).prop_map(|b| QubitRef::new(0, 0, b)), 1 => (0i64..3).prop_map(|b| QubitRef::new(0, 1, b))]
}

fn instr() -> impl Strategy<Value = Instruction> {
    prop_oneof![
        (gate(), qref()).prop_map(|(g, r)| Instruction::sq(g, r, 0)),
        (qref(), qref()).prop_filter("distinct operands", |(a, b)| a != b).prop_map(|(a, b)| Instruction::cz(a, b, 0)),
    ]
}

fn body() -> impl Strategy<Value = Vec<Instruction>> {
    prop::collection::vec(instr(), 0..=12).prop_map(|mut v| {
        for (c, ins) in v.iter_mut().enumerate() {
            ins.src = c;
        }
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn fourth_pass_is_a_noop(b in body()) {
        for t in [IterRange::Unbounded, IterRange::known(0, 3)] {
            let fx = compact_fixpoint(&b, t);
            prop_assert!(same_body(&compact_once(&fx, Direction::Left, t), &fx));
            prop_assert!(fx.len() <= b.len());
            let bi = compact_bidirectional(&b, t);
            prop_assert!(same_body(&compact_once(&bi, Direction::Left, t), &bi));
        }
    }
}
