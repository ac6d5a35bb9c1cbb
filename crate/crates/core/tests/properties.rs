mod common;

use proptest::prelude::*;

use common::*;
use fouriercsp_core::cop::{bottom_up, cop_gradient, top_down};
use fouriercsp_core::mdd::{apply, build_atomic, ApplyOp, EdgeTable};
use fouriercsp_core::model::oracle::brute_force_cop;
use fouriercsp_core::{DiscreteAssignment, Instance, Mdd, VariableOrder};

fn compile(inst: &Instance) -> Mdd {
    build_atomic(&inst.constraints()[0], inst.variables(), &VariableOrder::Instance).unwrap()
}

fn random_case(seed: u64) -> (Vec<u32>, Instance, Instance) {
    let mut rng = rng(seed);
    let sizes = random_sizes(&mut rng, 4, 4);
    let a = single(&sizes, &format!("expr {}", random_expression(&mut rng, &sizes)));
    let b = single(&sizes, &format!("expr {}", random_expression(&mut rng, &sizes)));
    (sizes, a, b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn diagram_agrees_with_expression(seed in any::<u64>()) {
        let (_, inst, _) = random_case(seed);
        let mdd = compile(&inst);
        mdd.check().unwrap();
        for x in all_assignments(&inst.shape()) {
            let x = DiscreteAssignment::new(x);
            prop_assert_eq!(mdd.eval(&x), inst.constraints()[0].is_satisfied(&x));
        }
    }

    #[test]
    fn apply_matches_pointwise_combination(seed in any::<u64>()) {
        let (_, a, b) = random_case(seed);
        let (ma, mb) = (compile(&a), compile(&b));
        for (op, f) in [
            (ApplyOp::And, (|p, q| p && q) as fn(bool, bool) -> bool),
            (ApplyOp::Or, |p, q| p || q),
            (ApplyOp::Xor, |p, q| p != q),
        ] {
            let m = apply(&ma, &mb, op).unwrap();
            m.check().unwrap();
            for x in all_assignments(&a.shape()) {
                let x = DiscreteAssignment::new(x);
                prop_assert_eq!(m.eval(&x), f(ma.eval(&x), mb.eval(&x)));
            }
        }
    }

    #[test]
    fn reductions_preserve_function(seed in any::<u64>()) {
        let (_, inst, _) = random_case(seed);
        let mdd = compile(&inst);
        let q = mdd.quasi_reduce();
        prop_assert!(q.is_quasi_reduced());
        prop_assert_eq!(&q.eliminate_redundant(), &mdd);
        prop_assert_eq!(&mdd.reduce(), &mdd);
        for x in all_assignments(&inst.shape()) {
            let x = DiscreteAssignment::new(x);
            prop_assert_eq!(q.eval(&x), mdd.eval(&x));
        }
    }

    #[test]
    fn edge_table_round_trip(seed in any::<u64>(), pad in 0usize..8) {
        let (_, inst, _) = random_case(seed);
        let mdd = compile(&inst);
        let rows = mdd.edge_count() + pad;
        let text = mdd.to_edge_table(rows).unwrap().to_text();
        let back = EdgeTable::parse(&text).unwrap().to_mdd().unwrap();
        prop_assert_eq!(&back, &mdd);
        prop_assert_eq!(back.to_edge_table(rows).unwrap().to_text(), text);
    }

    #[test]
    fn traversals_agree_with_oracle(seed in any::<u64>()) {
        let (_, inst, _) = random_case(seed);
        let mdd = compile(&inst);
        let mut rng = rng(seed ^ 0x5eed);
        let p = random_point(&mut rng, &inst.shape());
        let want = brute_force_cop(&inst.constraints()[0], &p, 1 << 20).unwrap();
        let (td, _) = top_down(&mdd, &p).unwrap();
        let (bu, _) = bottom_up(&mdd, &p).unwrap();
        let (cop, grad) = cop_gradient(&mdd, &p).unwrap();
        prop_assert!((td - want).abs() < 1e-12);
        prop_assert!((bu - want).abs() < 1e-12);
        prop_assert!((cop - want).abs() < 1e-12);
        // Euler identity for a polynomial homogeneous of degree |levels|
        // in the rows it mentions: sum_ij p_ij dC/dp_ij = |levels| * C
        let euler: f64 = p.data().iter().zip(grad.data()).map(|(a, b)| a * b).sum();
        prop_assert!((euler - mdd.levels().len() as f64 * want).abs() < 1e-9);
    }
}
