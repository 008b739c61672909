mod support;

use farkas_core::codec::{
    parse_network, parse_proof, parse_property, parse_query, serialize_network, serialize_proof,
    serialize_property, serialize_query, VectorStyle,
};
use farkas_core::encoder::{check_sat_witness, propagate_intervals};
use farkas_core::harness::{random_point, rng, sample_for_witness, NetworkShape};
use farkas_core::linalg::dot_product;
use farkas_core::producer::{is_query_solution, prove, ProveResult, ProverLimits};
use farkas_core::{check_proof, Backend, CheckOptions, Rational, Vector};
use proptest::prelude::*;
use support::{produced_proof, random_instance, rational, vector};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn executions_satisfy_the_encoding(seed in any::<u64>(), pick in any::<u64>()) {
        let (net, prop, enc) = random_instance(seed, NetworkShape::default());
        let x = random_point(&mut rng(pick), &prop.inputs, 8);
        let acts = net.forward(&x).unwrap();
        let point = enc.layout.assignment(&acts, Backend::Dense);
        prop_assert!(enc.query.tableau.apply(&point).unwrap().iter().all(Rational::is_zero));
        let outputs: Vec<_> = (0..enc.layout.num_outputs).map(|o| enc.layout.output(o)).collect();
        for i in 0..enc.query.num_cols() {
            if outputs.contains(&i) {
                continue;
            }
            prop_assert!(*enc.query.lower.get(i) <= *point.get(i));
            prop_assert!(*point.get(i) <= *enc.query.upper.get(i));
        }
        let hits = check_sat_witness(&net, &prop, &Vector::from_values(x, Backend::Dense)).unwrap();
        prop_assert_eq!(hits, is_query_solution(&enc.query, &point));
        prop_assert_eq!(enc.layout.inputs_of(&point).to_values(), acts.inputs);

        let ivs = propagate_intervals(&net, &prop.inputs);
        prop_assert_eq!(ivs.len(), net.num_relus());
        for (iv, v) in ivs.iter().zip(&acts.pre) {
            prop_assert!(iv.contains(v));
        }
    }

    #[test]
    fn prover_answers_are_checkable(seed in any::<u64>()) {
        let shape = NetworkShape { max_relus: 5, ..NetworkShape::default() };
        let (net, prop, enc) = random_instance(seed, shape);
        match prove(&enc.query, ProverLimits::default()).unwrap() {
            ProveResult::Sat(x) => {
                prop_assert!(is_query_solution(&enc.query, &x));
                prop_assert!(check_sat_witness(&net, &prop, &enc.layout.inputs_of(&x)).unwrap());
            }
            ProveResult::Unsat(p) => {
                prop_assert!(check_proof(&p, &CheckOptions::default()).verdict.is_valid());
                prop_assert!(sample_for_witness(&mut rng(seed), &net, &prop, 200).is_none());
            }
        }
    }

    #[test]
    fn proofs_survive_serialization(seed in any::<u64>(), sparse_out in any::<bool>()) {
        let Some(p) = produced_proof(seed) else { return Ok(()); };
        let style = if sparse_out { VectorStyle::Sparse } else { VectorStyle::Dense };
        let text = serialize_proof(&p, style);
        for backend in Backend::ALL {
            let back = parse_proof(&text, backend).unwrap();
            prop_assert_eq!(&back, &p);
            prop_assert_eq!(serialize_proof(&back, style), text.clone());
        }
    }

    #[test]
    fn inputs_survive_serialization(seed in any::<u64>()) {
        let (net, prop, enc) = random_instance(seed, NetworkShape::default());
        prop_assert_eq!(parse_network(&serialize_network(&net)).unwrap(), net);
        prop_assert_eq!(parse_property(&serialize_property(&prop)).unwrap(), prop);
        for style in [VectorStyle::Dense, VectorStyle::Sparse] {
            let q = parse_query(&serialize_query(&enc.query, style), Backend::Sparse).unwrap();
            prop_assert_eq!(q, enc.query.clone());
        }
    }

    #[test]
    fn rationals_print_and_parse(r in rational(50)) {
        let text = r.to_string();
        prop_assert_eq!(text.parse::<Rational>().unwrap(), r);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn dot_product_is_homogeneous(
        x in vector(12),
        y in vector(12),
        c in rational(6),
    ) {
        for backend in Backend::ALL {
            let xv = Vector::from_values(x.clone(), backend);
            let yv = Vector::from_values(y.clone(), backend);
            let lhs = dot_product(&xv, &yv.scale(&c)).unwrap();
            prop_assert_eq!(&lhs, &(&c * &dot_product(&xv, &yv).unwrap()));
            prop_assert!(dot_product(&xv, &yv.scale(&Rational::zero())).unwrap().is_zero());
        }
    }
}
