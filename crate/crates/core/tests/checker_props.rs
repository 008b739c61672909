mod support;

use std::collections::HashSet;

use farkas_core::checker::{check_node, state_before, CheckerState};
use farkas_core::encoder::Interval;
use farkas_core::harness::{mutate, random_point, rng, MutationKind, NetworkShape};
use farkas_core::proof::{NodeBody, NodePath};
use farkas_core::producer::tighten;
use farkas_core::{
    check_proof, Backend, BoundKind, BoundUpdate, CheckOptions, Lemma, Mode, Rational, Vector,
};
use proptest::prelude::*;
use support::{produced_proof, random_instance, rational, system};

fn leaf_paths(p: &farkas_core::Proof) -> Vec<NodePath> {
    let mut out = Vec::new();
    p.root.walk(&mut NodePath::root(), &mut |path, node| {
        if node.is_leaf() {
            out.push(path.clone());
        }
    });
    out
}

fn traced(mode: Mode) -> CheckOptions {
    CheckOptions {
        trace: true,
        keep_going: true,
        ..CheckOptions::with_mode(mode)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn produced_proofs_agree_across_backends(seed in any::<u64>()) {
        let Some(p) = produced_proof(seed) else { return Ok(()); };
        for mode in Mode::ALL {
            let dense = check_proof(&p, &traced(mode));
            let sparse = check_proof(&p.to_backend(Backend::Sparse), &traced(mode));
            prop_assert!(dense.verdict.is_valid());
            prop_assert_eq!(&dense.verdict, &sparse.verdict);
            prop_assert_eq!(&dense.trace, &sparse.trace);
            prop_assert_eq!(dense.stats, sparse.stats);
        }
    }

    #[test]
    fn full_acceptance_implies_partial(seed in any::<u64>(), kind in 0..MutationKind::ALL.len()) {
        let Some(p) = produced_proof(seed) else { return Ok(()); };
        let Some(m) = mutate(&mut rng(seed ^ 0x5eed), &p, MutationKind::ALL[kind]) else {
            return Ok(());
        };
        for backend in Backend::ALL {
            let m = m.to_backend(backend);
            let full = check_proof(&m, &CheckOptions::with_mode(Mode::Full)).verdict;
            let partial = check_proof(&m, &CheckOptions::with_mode(Mode::Partial)).verdict;
            prop_assert!(!full.is_valid() || partial.is_valid());
        }
    }

    #[test]
    fn corrupting_one_leaf_fails_only_there(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let Some(p) = produced_proof(seed) else { return Ok(()); };
        let leaves = leaf_paths(&p);
        let target = pick.get(&leaves).clone();
        let mut bad = p.clone();
        let node = bad.node_at_mut(&target).unwrap();
        if let NodeBody::Contradiction(w) = &mut node.body {
            *w = Vector::zeros(w.len(), w.backend());
        }
        let report = check_proof(&bad, &traced(Mode::Full));
        prop_assert_eq!(report.failures.len(), 1);
        prop_assert_eq!(&report.failures[0].path, &target);
        let clean = check_proof(&p, &traced(Mode::Full));
        let others = |t: &[farkas_core::checker::NodeTrace]| {
            t.iter().filter(|n| n.path != target).cloned().collect::<Vec<_>>()
        };
        prop_assert_eq!(others(&report.trace), others(&clean.trace));
    }

    #[test]
    fn subtrees_check_from_their_own_state(seed in any::<u64>()) {
        let Some(p) = produced_proof(seed) else { return Ok(()); };
        let mut paths = Vec::new();
        p.root.walk(&mut NodePath::root(), &mut |path, _| paths.push(path.clone()));
        for path in paths {
            let state = state_before(&p, &path).unwrap();
            let node = p.node_at(&path).unwrap();
            let r = check_node(node, &state, &CheckOptions::default(), &path);
            prop_assert!(r.verdict.is_valid(), "{:?}", r.verdict);
        }
    }

    #[test]
    fn apply_lemma_never_loosens(
        sys in system(6, 2),
        var in any::<prop::sample::Index>(),
        upper in any::<bool>(),
        value in rational(4),
    ) {
        let mut st = CheckerState::new(
            sys.tableau(Backend::Dense), sys.upper(Backend::Dense), sys.lower(Backend::Dense), vec![],
        ).unwrap();
        let before = st.clone();
        let v = var.index(sys.upper.len());
        let kind = if upper { BoundKind::Upper } else { BoundKind::Lower };
        let lemma = Lemma {
            causing: BoundUpdate::new(v, kind, value.clone()),
            affected: BoundUpdate::new(v, kind, value.clone()),
            constraint_id: 0,
            farkas: Vector::zeros(sys.rows.len(), Backend::Dense),
        };
        let changed = st.apply_lemma(&lemma);
        for i in 0..sys.upper.len() {
            prop_assert!(*st.upper.get(i) <= *before.upper.get(i));
            prop_assert!(*st.lower.get(i) >= *before.lower.get(i));
        }
        let expected = match kind {
            BoundKind::Upper => Rational::min_of(before.bound(v, kind), value),
            BoundKind::Lower => Rational::max_of(before.bound(v, kind), value),
        };
        prop_assert_eq!(st.bound(v, kind), expected);
        prop_assert_eq!(changed, st != before);
    }

    #[test]
    fn tightening_is_sound_and_idempotent(seed in any::<u64>(), input in any::<u64>()) {
        let (net, _, enc) = random_instance(seed, NetworkShape::default());
        let mut q = enc.query.clone();
        let wide = Rational::from(1000);
        for o in 0..enc.layout.num_outputs {
            let y = enc.layout.output(o);
            q.upper = q.upper.clone().with_entry(y, wide.clone());
            q.lower = q.lower.clone().with_entry(y, -&wide);
        }
        let start = CheckerState::new(q.tableau.clone(), q.upper.clone(), q.lower.clone(), q.constraints.clone()).unwrap();
        let mut st = start.clone();
        let lemmas = tighten(&mut st, &HashSet::new(), Backend::Dense);

        let mut replay = start.clone();
        for lemma in &lemmas {
            prop_assert!(replay.explain_lemma(lemma).unwrap().is_none());
            prop_assert!(replay.apply_lemma(lemma));
        }
        prop_assert_eq!(&replay, &st);

        let mut again = st.clone();
        prop_assert!(tighten(&mut again, &HashSet::new(), Backend::Dense).is_empty());
        prop_assert_eq!(&again, &st);

        // Any network execution inside the input box stays inside the tightened box.
        let mut r = rng(input);
        let net_inputs: Vec<_> = (0..enc.layout.num_inputs)
            .map(|i| {
                let v = enc.layout.input(i);
                Interval::new(q.lower.get(v).into_owned(), q.upper.get(v).into_owned())
            })
            .collect();
        let x = random_point(&mut r, &net_inputs, 8);
        let acts = net.forward(&x).unwrap();
        let point = enc.layout.assignment(&acts, Backend::Dense);
        for i in 0..q.num_cols() {
            prop_assert!(*st.lower.get(i) <= *point.get(i) && *point.get(i) <= *st.upper.get(i));
        }
    }
}
