//! Exact checking of Farkas-certificate UNSAT proofs for ReLU networks.

pub mod checker;
pub mod codec;
pub mod encoder;
pub mod harness;
pub mod linalg;
pub mod producer;
pub mod proof;
pub mod rational;
pub mod worked_example;

pub use checker::{check_proof, CheckOptions, CheckReport, ContradictionRule, Mode, Verdict};
pub use linalg::{Backend, Tableau, Vector};
pub use proof::{BoundKind, BoundUpdate, Lemma, NodePath, Proof, ProofNode, Query, ReluConstraint};
pub use rational::Rational;
