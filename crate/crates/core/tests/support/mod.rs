#![allow(dead_code)]

pub mod fm_oracle;

use farkas_core::encoder::{encode, BoxProperty, Encoding, Network};
use farkas_core::harness::{random_network, random_property, rng, NetworkShape};
use farkas_core::producer::{prove, ProveResult, ProverLimits};
use farkas_core::{Backend, Proof, Rational, Tableau, Vector};
use proptest::prelude::*;

#[derive(Debug, Clone)]
pub struct System {
    pub rows: Vec<Vec<Rational>>,
    pub upper: Vec<Rational>,
    pub lower: Vec<Rational>,
}

impl System {
    pub fn tableau(&self, backend: Backend) -> Tableau {
        let rows = self
            .rows
            .iter()
            .map(|r| Vector::from_values(r.clone(), backend))
            .collect();
        Tableau::new(self.upper.len(), rows).unwrap()
    }

    pub fn upper(&self, backend: Backend) -> Vector {
        Vector::from_values(self.upper.clone(), backend)
    }

    pub fn lower(&self, backend: Backend) -> Vector {
        Vector::from_values(self.lower.clone(), backend)
    }
}

pub fn rational(max_abs: i64) -> impl Strategy<Value = Rational> {
    prop::sample::select(vec![1i64, 1, 2, 4]).prop_flat_map(move |d| {
        (-max_abs * d..=max_abs * d).prop_map(move |n| Rational::new(n, d).unwrap())
    })
}

fn maybe_zero() -> impl Strategy<Value = Rational> {
    prop_oneof![2 => Just(Rational::zero()), 3 => rational(3)]
}

/// `A x = 0` with an ordered box; some boxes are shifted off the origin.
pub fn system(max_cols: usize, max_rows: usize) -> impl Strategy<Value = System> {
    (1..=max_cols, 0..=max_rows).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(prop::collection::vec(maybe_zero(), n), m),
            prop::collection::vec((rational(3), rational(3), prop_oneof![3 => Just(0i64), 1 => 1i64..=3]), n),
        )
            .prop_map(|(rows, bounds)| {
                let (mut upper, mut lower) = (Vec::new(), Vec::new());
                for (a, b, shift) in bounds {
                    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                    let s = Rational::from(shift);
                    lower.push(&lo + &s);
                    upper.push(&hi + &s);
                }
                System { rows, upper, lower }
            })
    })
}

pub fn vector(len: usize) -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec(maybe_zero(), len)
}

/// A random network and property drawn from `seed`, with their encoding.
pub fn random_instance(seed: u64, shape: NetworkShape) -> (Network, BoxProperty, Encoding) {
    let mut r = rng(seed);
    let net = random_network(&mut r, shape);
    let prop = random_property(&mut r, &net);
    let enc = encode(&net, &prop).expect("generated properties encode");
    (net, prop, enc)
}

pub fn random_encoding(seed: u64, shape: NetworkShape) -> Encoding {
    random_instance(seed, shape).2
}

/// An UNSAT proof produced for a random query, if the query was UNSAT.
pub fn produced_proof(seed: u64) -> Option<Proof> {
    let shape = NetworkShape {
        max_relus: 4,
        ..NetworkShape::default()
    };
    let enc = random_encoding(seed, shape);
    match prove(&enc.query, ProverLimits::default()).expect("within limits") {
        ProveResult::Unsat(p) => Some(p),
        ProveResult::Sat(_) => None,
    }
}
