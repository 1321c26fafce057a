use cgnet::circuit::unitary_equiv_up_to_phase;
use cgnet::statevec::circuit_to_unitary;
use cgnet::transpile::{count_gates, transpile};
use cgnet::{Circuit, Control, Gate, GateOp, NativeGateSet};
use proptest::prelude::*;

const N: usize = 3;

fn angle() -> impl Strategy<Value = f64> {
    -6.3f64..6.3
}

fn one_qubit_gate() -> impl Strategy<Value = Gate> {
    prop_oneof![
        Just(Gate::H),
        Just(Gate::X),
        Just(Gate::Y),
        Just(Gate::Z),
        angle().prop_map(Gate::Rx),
        angle().prop_map(Gate::Ry),
        angle().prop_map(Gate::Rz),
        angle().prop_map(Gate::Phase),
        (angle(), angle(), angle()).prop_map(|(a, b, c)| Gate::U3(a, b, c)),
    ]
}

fn op() -> impl Strategy<Value = GateOp> {
    let distinct = (0..N, 0..N, 0..N).prop_filter("distinct", |(a, b, c)| a != b && b != c && a != c);
    prop_oneof![
        (one_qubit_gate(), 0..N).prop_map(|(g, q)| GateOp::new(g, [q]).unwrap()),
        distinct.clone().prop_map(|(a, b, _)| GateOp::new(Gate::Cnot, [a, b]).unwrap()),
        (angle(), distinct.clone()).prop_map(|(t, (a, b, _))| GateOp::new(Gate::Rzz(t), [a, b]).unwrap()),
        (one_qubit_gate(), distinct, any::<bool>()).prop_map(|(g, (c, t, _), open)| {
            let ctl = if open { Control::on_zero(c) } else { Control::on_one(c) };
            GateOp::new(g, [t]).unwrap().with_control(ctl).unwrap()
        }),
    ]
}

fn circuit() -> impl Strategy<Value = Circuit> {
    prop::collection::vec(op(), 1..12).prop_map(|ops| {
        let mut c = Circuit::new(N).unwrap();
        for o in ops {
            c.push(o).unwrap();
        }
        c
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn transpiled_circuits_keep_their_unitary(c in circuit()) {
        let u = circuit_to_unitary(&c).unwrap();
        for basis in [NativeGateSet::IbmCnotU, NativeGateSet::QtmRzz] {
            let t = transpile(&c, basis).unwrap();
            prop_assert!(unitary_equiv_up_to_phase(&u, &circuit_to_unitary(&t).unwrap(), 1e-8).unwrap());
        }
    }

    #[test]
    fn transpile_is_idempotent_on_counts(c in circuit()) {
        for basis in [NativeGateSet::IbmCnotU, NativeGateSet::QtmRzz] {
            let once = transpile(&c, basis).unwrap();
            let twice = transpile(&once, basis).unwrap();
            prop_assert_eq!(count_gates(&once).unwrap(), count_gates(&twice).unwrap());
        }
    }

    #[test]
    fn circuit_text_round_trips(c in circuit()) {
        let back: Circuit = c.to_text().parse().unwrap();
        prop_assert_eq!(back, c);
    }
}
