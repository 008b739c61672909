//! A small two-input network, its query and a two-leaf UNSAT proof, used as
//! a golden fixture across the test suites.
//!
//! Columns: `x1 x2 b1 b2 b3 f1 f2 f3 y`. The network computes
//! `b1 = 2 x1`, `b2 = x2`, `b3 = f2 - f1`, `y = f3`; with both inputs in
//! `[-1, 1]` the output can never reach `[2, 3]`.

use crate::encoder::{BoundOverride, BoxProperty, Interval, Layer, Network};
use crate::linalg::{Backend, Tableau, Vector};
use crate::proof::{
    BoundKind, BoundUpdate, Equation, Lemma, Proof, ProofNode, Query, ReluConstraint, Split,
};
use crate::rational::Rational;

pub const NUM_COLS: usize = 9;

fn ints(v: &[i64]) -> Vec<Rational> {
    v.iter().map(|&n| Rational::from(n)).collect()
}

pub fn network() -> Network {
    Network::new(
        2,
        vec![
            Layer {
                weights: vec![ints(&[2, 0]), ints(&[0, 1])],
                biases: ints(&[0, 0]),
            },
            Layer {
                weights: vec![ints(&[-1, 1])],
                biases: ints(&[0]),
            },
            Layer {
                weights: vec![ints(&[1])],
                biases: ints(&[0]),
            },
        ],
    )
    .expect("valid network")
}

pub fn property() -> BoxProperty {
    let iv = |l: i64, u: i64| Interval::new(Rational::from(l), Rational::from(u));
    BoxProperty::new(vec![iv(-1, 1), iv(-1, 1)], vec![iv(2, 3)])
        .expect("valid property")
        .with_overrides(vec![
            BoundOverride {
                var: "b3".into(),
                lower: None,
                upper: Some(Rational::from(2)),
            },
            BoundOverride {
                var: "f3".into(),
                lower: None,
                upper: Some(Rational::from(3)),
            },
        ])
}

pub fn var_names() -> Vec<String> {
    ["x1", "x2", "b1", "b2", "b3", "f1", "f2", "f3", "y"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

pub fn query_with_backend(backend: Backend) -> Query {
    let rows = [
        [2, 0, -1, 0, 0, 0, 0, 0, 0],
        [0, 1, 0, -1, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, -1, -1, 1, 0, 0],
        [0, 0, 0, 0, 0, 0, 0, -1, 1],
    ];
    Query {
        tableau: Tableau::new(
            NUM_COLS,
            rows.iter().map(|r| Vector::from_ints(r, backend)).collect(),
        )
        .expect("rows match width"),
        upper: Vector::from_ints(&[1, 1, 2, 1, 2, 2, 1, 3, 3], backend),
        lower: Vector::from_ints(&[-1, -1, -2, -1, -2, 0, 0, 0, 2], backend),
        constraints: vec![
            ReluConstraint { id: 0, b: 2, f: 5 },
            ReluConstraint { id: 1, b: 3, f: 6 },
            ReluConstraint { id: 2, b: 4, f: 7 },
        ],
        var_names: Some(var_names()),
    }
}

pub fn query() -> Query {
    query_with_backend(Backend::Dense)
}

/// Root deduces `u(f3) = 1` from `u(b3) = 1` (row 3 alone), then splits on
/// the third ReLU.
pub fn proof(backend: Backend) -> Proof {
    let q = Rational::from;
    let lemma = Lemma {
        causing: BoundUpdate::new(4, BoundKind::Upper, q(1)),
        affected: BoundUpdate::new(7, BoundKind::Upper, q(1)),
        constraint_id: 2,
        farkas: Vector::from_ints(&[0, 0, 1, 0], backend),
    };
    let active = ProofNode::leaf(
        Split {
            bounds: vec![BoundUpdate::new(4, BoundKind::Lower, q(0))],
            equations: vec![Equation {
                row: Vector::from_ints(&[0, 0, 0, 0, 1, 0, 0, -1, 0], backend),
            }],
        },
        vec![],
        Vector::from_ints(&[0, 0, 1, -1, 1], backend),
    );
    let inactive = ProofNode::leaf(
        Split {
            bounds: vec![
                BoundUpdate::new(7, BoundKind::Upper, q(0)),
                BoundUpdate::new(4, BoundKind::Upper, q(0)),
            ],
            equations: vec![],
        },
        vec![],
        Vector::from_ints(&[0, 0, 0, 1], backend),
    );
    let root = ProofNode::inner(Split::default(), vec![lemma], vec![active, inactive]);
    query_with_backend(backend).into_proof(root)
}
