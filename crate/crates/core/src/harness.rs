//! Random networks and properties, proof mutations, and the fuzz loop that
//! drives encode, prove and check end to end.

use std::fmt;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::checker::{check_proof, CheckOptions, FailureReason, Mode, Verdict};
use crate::encoder::{check_sat_witness, encode, BoxProperty, Interval, Layer, Network};
use crate::linalg::{Backend, Tableau, Vector};
use crate::proof::{BoundKind, NodeBody, NodePath, Proof, ProofNode, Split};
use crate::producer::{prove, ProveResult, ProverLimits};
use crate::rational::Rational;
use crate::worked_example;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Small rational with denominator 1, 2 or 4.
pub fn small_rational<R: Rng>(rng: &mut R, max_abs: i64) -> Rational {
    let den = *[1i64, 1, 2, 4].choose(rng).expect("non-empty");
    let num = rng.random_range(-max_abs * den..=max_abs * den);
    Rational::new(num, den).expect("non-zero denominator")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetworkShape {
    pub max_inputs: usize,
    pub max_relus: usize,
    pub max_outputs: usize,
}

impl Default for NetworkShape {
    fn default() -> Self {
        NetworkShape {
            max_inputs: 3,
            max_relus: 6,
            max_outputs: 1,
        }
    }
}

pub fn random_network<R: Rng>(rng: &mut R, shape: NetworkShape) -> Network {
    let inputs = rng.random_range(1..=shape.max_inputs.max(1));
    let relus = rng.random_range(1..=shape.max_relus.max(1));
    let outputs = rng.random_range(1..=shape.max_outputs.max(1));
    let mut sizes = if relus >= 2 && rng.random_bool(0.5) {
        let first = rng.random_range(1..relus);
        vec![first, relus - first]
    } else {
        vec![relus]
    };
    sizes.push(outputs);
    let with_bias = rng.random_bool(0.4);
    let mut prev = inputs;
    let mut layers = Vec::new();
    for size in sizes {
        let weights = (0..size)
            .map(|_| {
                let mut row: Vec<Rational> = (0..prev).map(|_| small_rational(rng, 2)).collect();
                if row.iter().all(Rational::is_zero) {
                    row[0] = Rational::one();
                }
                row
            })
            .collect();
        let biases = (0..size)
            .map(|_| {
                if with_bias {
                    small_rational(rng, 1)
                } else {
                    Rational::zero()
                }
            })
            .collect();
        layers.push(Layer { weights, biases });
        prev = size;
    }
    Network::new(inputs, layers).expect("shapes built consistently")
}

fn corners(boxes: &[Interval]) -> Vec<Vec<Rational>> {
    let mut out = vec![Vec::new()];
    for iv in boxes {
        out = out
            .into_iter()
            .flat_map(|p| {
                [iv.lower.clone(), iv.upper.clone()].map(|v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

/// A point of the box on a grid of `steps` intervals per side.
pub fn random_point<R: Rng>(rng: &mut R, boxes: &[Interval], steps: i64) -> Vec<Rational> {
    boxes
        .iter()
        .map(|iv| {
            let k = Rational::new(rng.random_range(0..=steps), steps).expect("steps > 0");
            &iv.lower + &(&k * &(&iv.upper - &iv.lower))
        })
        .collect()
}

/// An input box around the origin and an output box that is either placed
/// past every sampled output (often UNSAT) or around a sampled one (SAT).
pub fn random_property<R: Rng>(rng: &mut R, net: &Network) -> BoxProperty {
    let inputs: Vec<Interval> = (0..net.input_size())
        .map(|_| {
            let lo = Rational::from(rng.random_range(-2..=0));
            let width = Rational::new(rng.random_range(1..=4), 2).expect("non-zero");
            Interval::new(lo.clone(), &lo + &width)
        })
        .collect();
    let mut samples = corners(&inputs);
    for _ in 0..16 {
        samples.push(random_point(rng, &inputs, 8));
    }
    let outs: Vec<Vec<Rational>> = samples
        .iter()
        .map(|x| net.forward(x).expect("sized").outputs)
        .collect();
    let outputs = (0..net.output_size())
        .map(|o| {
            let column = outs.iter().map(|y| y[o].clone());
            let max = column.clone().max().expect("samples");
            let min = column.min().expect("samples");
            let width = Rational::new(rng.random_range(0..=4), 2).expect("non-zero");
            if rng.random_bool(0.7) {
                let gap = Rational::new(rng.random_range(0..=2), 4).expect("non-zero");
                if rng.random_bool(0.5) {
                    let lo = &max + &gap;
                    Interval::new(lo.clone(), &lo + &width)
                } else {
                    let hi = &min - &gap;
                    Interval::new(&hi - &width, hi)
                }
            } else {
                let y = &outs[rng.random_range(0..outs.len())][o];
                Interval::new(y - &width, y.clone())
            }
        })
        .collect();
    BoxProperty::new(inputs, outputs).expect("ordered intervals")
}

/// Whether any of `count` sampled inputs (box corners first) is a
/// counterexample.
pub fn sample_for_witness<R: Rng>(
    rng: &mut R,
    net: &Network,
    prop: &BoxProperty,
    count: usize,
) -> Option<Vec<Rational>> {
    let mut points = corners(&prop.inputs);
    points.truncate(count);
    while points.len() < count {
        points.push(random_point(rng, &prop.inputs, 16));
    }
    points.into_iter().find(|x| {
        let v = Vector::from_values(x.clone(), Backend::Dense);
        check_sat_witness(net, prop, &v).unwrap_or(false)
    })
}

/// A random system `A x = 0, l <= x <= u` with `n <= max_cols` columns and
/// `m <= max_rows` rows. About half of the boxes exclude the origin in some
/// coordinate, so both outcomes are common.
pub fn random_system<R: Rng>(
    rng: &mut R,
    max_cols: usize,
    max_rows: usize,
) -> (Tableau, Vector, Vector) {
    let n = rng.random_range(1..=max_cols.max(1));
    let m = rng.random_range(0..=max_rows);
    let rows = (0..m)
        .map(|_| {
            let values = (0..n)
                .map(|_| {
                    if rng.random_bool(0.4) {
                        Rational::zero()
                    } else {
                        small_rational(rng, 3)
                    }
                })
                .collect();
            Vector::from_values(values, Backend::Dense)
        })
        .collect();
    let shift = rng.random_bool(0.5);
    let (mut upper, mut lower) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let a = small_rational(rng, 3);
        let b = small_rational(rng, 3);
        let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
        if shift && rng.random_bool(0.3) {
            let d = Rational::from(rng.random_range(1..=3));
            lo = &lo + &d;
            hi = &hi + &d;
        }
        lower.push(lo);
        upper.push(hi);
    }
    (
        Tableau::new(n, rows).expect("uniform width"),
        Vector::from_values(upper, Backend::Dense),
        Vector::from_values(lower, Backend::Dense),
    )
}

/// Every corner of the box `lower..upper`.
pub fn box_corners(upper: &Vector, lower: &Vector) -> Vec<Vec<Rational>> {
    let boxes: Vec<Interval> = (0..upper.len())
        .map(|i| Interval::new(lower.get(i).into_owned(), upper.get(i).into_owned()))
        .collect();
    corners(&boxes)
}

/// Single-field corruptions applied to produced proofs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MutationKind {
    ZeroContradiction,
    ShortenContradiction,
    LoosenSplitBound,
    DropChild,
    SwapChildSplits,
    FlipContradictionEntry,
    ZeroLemmaFarkas,
    TightenLemmaCausing,
    TightenLemmaAffected,
    PerturbTableauEntry,
    LoosenRootBound,
}

impl MutationKind {
    pub const ALL: [MutationKind; 11] = [
        MutationKind::ZeroContradiction,
        MutationKind::ShortenContradiction,
        MutationKind::LoosenSplitBound,
        MutationKind::DropChild,
        MutationKind::SwapChildSplits,
        MutationKind::FlipContradictionEntry,
        MutationKind::ZeroLemmaFarkas,
        MutationKind::TightenLemmaCausing,
        MutationKind::TightenLemmaAffected,
        MutationKind::PerturbTableauEntry,
        MutationKind::LoosenRootBound,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MutationKind::ZeroContradiction => "zero-contradiction",
            MutationKind::ShortenContradiction => "shorten-contradiction",
            MutationKind::LoosenSplitBound => "loosen-split-bound",
            MutationKind::DropChild => "drop-child",
            MutationKind::SwapChildSplits => "swap-child-splits",
            MutationKind::FlipContradictionEntry => "flip-contradiction-entry",
            MutationKind::ZeroLemmaFarkas => "zero-lemma-farkas",
            MutationKind::TightenLemmaCausing => "tighten-lemma-causing",
            MutationKind::TightenLemmaAffected => "tighten-lemma-affected",
            MutationKind::PerturbTableauEntry => "perturb-tableau-entry",
            MutationKind::LoosenRootBound => "loosen-root-bound",
        }
    }

    /// Corruptions no valid checker may accept. The rest can leave a proof
    /// valid (an unused row, a lemma whose bound is never needed).
    pub fn must_detect(self) -> bool {
        matches!(
            self,
            MutationKind::ZeroContradiction
                | MutationKind::ShortenContradiction
                | MutationKind::LoosenSplitBound
                | MutationKind::DropChild
                | MutationKind::SwapChildSplits
        )
    }

    /// Only lemma data is touched.
    pub fn lemma_only(self) -> bool {
        matches!(
            self,
            MutationKind::ZeroLemmaFarkas
                | MutationKind::TightenLemmaCausing
                | MutationKind::TightenLemmaAffected
        )
    }
}

impl fmt::Display for MutationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn paths(p: &Proof, keep: impl Fn(&ProofNode) -> bool) -> Vec<NodePath> {
    let mut out = Vec::new();
    p.root.walk(&mut NodePath::root(), &mut |path, node| {
        if keep(node) {
            out.push(path.clone());
        }
    });
    out
}

fn contradiction_mut(node: &mut ProofNode) -> &mut Vector {
    match &mut node.body {
        NodeBody::Contradiction(w) => w,
        NodeBody::Children(_) => panic!("not a leaf"),
    }
}

/// Applies `kind` at a random site; `None` when the proof has no such site.
pub fn mutate<R: Rng>(rng: &mut R, p: &Proof, kind: MutationKind) -> Option<Proof> {
    let mut out = p.clone();
    let one = Rational::one();
    match kind {
        MutationKind::ZeroContradiction
        | MutationKind::ShortenContradiction
        | MutationKind::FlipContradictionEntry => {
            let leaves = paths(p, ProofNode::is_leaf);
            let path = leaves.choose(rng)?;
            let w = contradiction_mut(out.node_at_mut(path)?);
            match kind {
                MutationKind::ZeroContradiction => *w = Vector::zeros(w.len(), w.backend()),
                MutationKind::ShortenContradiction => {
                    if w.is_empty() {
                        return None;
                    }
                    *w = w.truncated(w.len() - 1);
                }
                _ => {
                    let nz: Vec<usize> = w.nonzeros().map(|(i, _)| i).collect();
                    let i = *nz.choose(rng)?;
                    let v = w.get(i).into_owned();
                    *w = w.clone().with_entry(i, -v);
                }
            }
        }
        MutationKind::LoosenSplitBound | MutationKind::DropChild | MutationKind::SwapChildSplits => {
            let inner = paths(p, |n| n.children().len() == 2);
            let path = inner.choose(rng)?;
            let node = out.node_at_mut(path)?;
            let NodeBody::Children(children) = &mut node.body else {
                return None;
            };
            match kind {
                MutationKind::DropChild => {
                    children.remove(rng.random_range(0..2));
                }
                MutationKind::SwapChildSplits => {
                    let (a, b) = children.split_at_mut(1);
                    std::mem::swap(&mut a[0].split, &mut b[0].split);
                }
                _ => {
                    let child = children.iter_mut().find(|c| !c.split.equations.is_empty())?;
                    let bound = child.split.bounds.first_mut()?;
                    bound.value = match bound.kind {
                        BoundKind::Lower => &bound.value - &one,
                        BoundKind::Upper => &bound.value + &one,
                    };
                }
            }
        }
        MutationKind::ZeroLemmaFarkas
        | MutationKind::TightenLemmaCausing
        | MutationKind::TightenLemmaAffected => {
            let sites = paths(p, |n| !n.lemmas.is_empty());
            let path = sites.choose(rng)?;
            let node = out.node_at_mut(path)?;
            let i = rng.random_range(0..node.lemmas.len());
            let lemma = &mut node.lemmas[i];
            let tighten = |b: &mut crate::proof::BoundUpdate| {
                b.value = match b.kind {
                    BoundKind::Upper => &b.value - &one,
                    BoundKind::Lower => &b.value + &one,
                };
            };
            match kind {
                MutationKind::ZeroLemmaFarkas => {
                    if lemma.farkas.is_zero() {
                        return None;
                    }
                    lemma.farkas = Vector::zeros(lemma.farkas.len(), lemma.farkas.backend());
                }
                MutationKind::TightenLemmaCausing => tighten(&mut lemma.causing),
                _ => tighten(&mut lemma.affected),
            }
        }
        MutationKind::PerturbTableauEntry => {
            let (m, n) = (out.tableau.num_rows(), out.tableau.num_cols());
            if m == 0 || n == 0 {
                return None;
            }
            let (r, c) = (rng.random_range(0..m), rng.random_range(0..n));
            let rows: Vec<Vector> = out
                .tableau
                .rows()
                .iter()
                .enumerate()
                .map(|(i, row)| {
                    if i == r {
                        let v = &*row.get(c) + &one;
                        row.clone().with_entry(c, v)
                    } else {
                        row.clone()
                    }
                })
                .collect();
            out.tableau = Tableau::new(n, rows).expect("same width");
        }
        MutationKind::LoosenRootBound => {
            let n = out.num_cols();
            if n == 0 {
                return None;
            }
            let i = rng.random_range(0..n);
            if rng.random_bool(0.5) {
                let v = &*out.upper.get(i) + &one;
                out.upper = out.upper.clone().with_entry(i, v);
            } else {
                let v = &*out.lower.get(i) - &one;
                out.lower = out.lower.clone().with_entry(i, v);
            }
        }
    }
    Some(out)
}

/// Expected verdict of a hand-written corruption of the worked example.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expect {
    Valid,
    Invalid(FailureReason),
}

impl Expect {
    pub fn matches(self, v: &Verdict) -> bool {
        match (self, v) {
            (Expect::Valid, Verdict::Valid) => true,
            (Expect::Invalid(r), Verdict::Invalid(f)) => f.reason == r,
            _ => false,
        }
    }
}

impl fmt::Display for Expect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expect::Valid => f.write_str("VALID"),
            Expect::Invalid(r) => write!(f, "INVALID({r})"),
        }
    }
}

pub struct ExampleMutation {
    pub name: &'static str,
    pub proof: Proof,
    pub full: Expect,
    pub partial: Expect,
}

/// Single-field corruptions of the worked-example proof with their expected
/// verdicts in each mode.
pub fn example_mutations(backend: Backend) -> Vec<ExampleMutation> {
    use Expect::{Invalid, Valid};
    use FailureReason::{BadContradiction, BadLemma, BadSplitPair, Structure};
    let base = worked_example::proof(backend);
    let left = NodePath(vec![0]);
    let right = NodePath(vec![1]);
    let q = Rational::from;
    let half = Rational::new(1, 2).expect("non-zero");
    let edit = |f: &dyn Fn(&mut Proof)| {
        let mut p = base.clone();
        f(&mut p);
        p
    };
    let set_leaf = |path: &NodePath, w: &[i64]| {
        let path = path.clone();
        let w = Vector::from_ints(w, backend);
        edit(&move |p: &mut Proof| {
            *contradiction_mut(p.node_at_mut(&path).expect("exists")) = w.clone();
        })
    };
    let set_row_entry = |p: &mut Proof, r: usize, c: usize, v: Rational| {
        let rows = p
            .tableau
            .rows()
            .iter()
            .enumerate()
            .map(|(i, row)| if i == r { row.clone().with_entry(c, v.clone()) } else { row.clone() })
            .collect();
        p.tableau = Tableau::new(p.num_cols(), rows).expect("same width");
    };
    let m = |name, proof, full, partial| ExampleMutation {
        name,
        proof,
        full,
        partial,
    };
    vec![
        m("flip-left-entry", set_leaf(&left, &[0, 0, -1, -1, 1]), Invalid(BadContradiction), Invalid(BadContradiction)),
        m("left-drop-equation-weight", set_leaf(&left, &[0, 0, 1, -1, 0]), Invalid(BadContradiction), Invalid(BadContradiction)),
        m("zero-right-contradiction", set_leaf(&right, &[0, 0, 0, 0]), Invalid(BadContradiction), Invalid(BadContradiction)),
        m(
            "zero-lemma-farkas",
            edit(&|p| p.root.lemmas[0].farkas = Vector::zeros(4, backend)),
            Invalid(BadLemma),
            Valid,
        ),
        m(
            "lemma-affected-too-tight",
            edit(&|p| p.root.lemmas[0].affected.value = half.clone()),
            Invalid(BadLemma),
            Valid,
        ),
        m(
            "lemma-causing-too-tight",
            edit(&|p| p.root.lemmas[0].causing.value = half.clone()),
            Invalid(BadLemma),
            Valid,
        ),
        m(
            "lemma-affected-kind",
            edit(&|p| p.root.lemmas[0].affected.kind = BoundKind::Lower),
            Invalid(BadLemma),
            Valid,
        ),
        m(
            "lemma-wrong-constraint",
            edit(&|p| p.root.lemmas[0].constraint_id = 0),
            Invalid(Structure),
            Invalid(Structure),
        ),
        m(
            "swap-child-splits",
            edit(&|p| {
                let NodeBody::Children(c) = &mut p.root.body else { unreachable!() };
                let (a, b) = c.split_at_mut(1);
                std::mem::swap(&mut a[0].split, &mut b[0].split);
            }),
            Invalid(Structure),
            Invalid(Structure),
        ),
        m(
            "loosen-split-bound",
            edit(&|p| p.node_at_mut(&left).expect("exists").split.bounds[0].value = q(-1)),
            Invalid(BadSplitPair),
            Invalid(BadSplitPair),
        ),
        m(
            "corrupt-tableau-entry",
            edit(&|p| set_row_entry(p, 2, 6, q(2))),
            Invalid(BadLemma),
            Invalid(BadContradiction),
        ),
        m(
            "drop-child",
            edit(&|p| {
                let NodeBody::Children(c) = &mut p.root.body else { unreachable!() };
                c.pop();
            }),
            Invalid(BadSplitPair),
            Invalid(BadSplitPair),
        ),
        m(
            "shorten-contradiction",
            edit(&|p| {
                let w = contradiction_mut(p.node_at_mut(&left).expect("exists"));
                *w = w.truncated(4);
            }),
            Invalid(Structure),
            Invalid(Structure),
        ),
        m(
            "shorten-upper-bounds",
            edit(&|p| p.upper = p.upper.truncated(8)),
            Invalid(Structure),
            Invalid(Structure),
        ),
        m(
            "loosen-upper-f2",
            edit(&|p| p.upper = p.upper.clone().with_entry(6, q(2))),
            Invalid(BadLemma),
            Invalid(BadContradiction),
        ),
        m(
            "spurious-equation-entry",
            edit(&|p| {
                let eq = &mut p.node_at_mut(&left).expect("exists").split.equations[0];
                eq.row = eq.row.clone().with_entry(8, q(1));
            }),
            Invalid(BadSplitPair),
            Invalid(BadSplitPair),
        ),
        m(
            "loosen-lower-y",
            edit(&|p| p.lower = p.lower.clone().with_entry(8, q(1))),
            Invalid(BadContradiction),
            Invalid(BadContradiction),
        ),
        m(
            "lemma-causing-foreign-var",
            edit(&|p| p.root.lemmas[0].causing.var = 3),
            Invalid(Structure),
            Invalid(Structure),
        ),
    ]
}

/// One proof per structural defect kind, keyed by the defect tag.
pub fn structural_defects(backend: Backend) -> Vec<(&'static str, Proof)> {
    let base = worked_example::proof(backend);
    let left = NodePath(vec![0]);
    let right = NodePath(vec![1]);
    let edit = |f: &dyn Fn(&mut Proof)| {
        let mut p = base.clone();
        f(&mut p);
        p
    };
    vec![
        ("bound_vector_length", edit(&|p| p.upper = p.upper.truncated(8))),
        (
            "root_bounds_crossed",
            edit(&|p| p.lower = p.lower.clone().with_entry(8, Rational::from(4))),
        ),
        ("var_names_length", edit(&|p| p.var_names = Some(vec!["x1".into()]))),
        ("duplicate_constraint_id", edit(&|p| p.constraints[1].id = 0)),
        ("constraint_var_out_of_range", edit(&|p| p.constraints[0].f = 40)),
        ("constraint_same_variable", edit(&|p| p.constraints[0].f = 2)),
        (
            "empty_split",
            edit(&|p| p.node_at_mut(&right).expect("exists").split = Split::default()),
        ),
        (
            "bound_var_out_of_range",
            edit(&|p| p.node_at_mut(&right).expect("exists").split.bounds[0].var = 9),
        ),
        (
            "equation_length",
            edit(&|p| {
                let eq = &mut p.node_at_mut(&left).expect("exists").split.equations[0];
                eq.row = eq.row.extended(1);
            }),
        ),
        (
            "zero_equation",
            edit(&|p| {
                p.node_at_mut(&left).expect("exists").split.equations[0].row =
                    Vector::zeros(9, backend)
            }),
        ),
        ("unknown_constraint", edit(&|p| p.root.lemmas[0].constraint_id = 99)),
        ("lemma_var_out_of_range", edit(&|p| p.root.lemmas[0].affected.var = 12)),
        ("lemma_var_not_in_constraint", edit(&|p| p.root.lemmas[0].causing.var = 0)),
        (
            "farkas_length",
            edit(&|p| p.root.lemmas[0].farkas = p.root.lemmas[0].farkas.extended(1)),
        ),
        (
            "contradiction_length",
            edit(&|p| {
                let w = contradiction_mut(p.node_at_mut(&right).expect("exists"));
                *w = w.extended(1);
            }),
        ),
        ("no_children", edit(&|p| p.root.body = NodeBody::Children(vec![]))),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FuzzConfig {
    pub seed: u64,
    pub count: usize,
    pub shape: NetworkShape,
    /// Random inputs tried against every UNSAT result.
    pub witness_samples: usize,
    /// Mutants derived from every UNSAT proof, per mutation kind.
    pub mutants_per_kind: usize,
    pub limits: ProverLimits,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            seed: 0,
            count: 50,
            shape: NetworkShape::default(),
            witness_samples: 1000,
            mutants_per_kind: 1,
            limits: ProverLimits::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CaseOutcome {
    Sat {
        witness_ok: bool,
    },
    Unsat {
        valid_full: bool,
        /// A sampled input that violates the claimed UNSAT, if found.
        counterexample: Option<Vec<Rational>>,
        nodes: usize,
    },
    Error(String),
}

#[derive(Debug, Clone)]
pub struct FuzzCase {
    pub index: usize,
    pub network: Network,
    pub property: BoxProperty,
    pub outcome: CaseOutcome,
    pub proof: Option<Proof>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MutationStats {
    pub applied: usize,
    pub detected_full: usize,
    pub detected_partial: usize,
}

#[derive(Debug, Clone)]
pub struct FuzzReport {
    pub config: FuzzConfig,
    pub cases: Vec<FuzzCase>,
    pub mutations: Vec<(MutationKind, MutationStats)>,
}

impl FuzzReport {
    pub fn sat(&self) -> usize {
        self.cases
            .iter()
            .filter(|c| matches!(c.outcome, CaseOutcome::Sat { .. }))
            .count()
    }

    pub fn sat_witness_ok(&self) -> usize {
        self.cases
            .iter()
            .filter(|c| matches!(c.outcome, CaseOutcome::Sat { witness_ok: true }))
            .count()
    }

    pub fn unsat(&self) -> usize {
        self.cases
            .iter()
            .filter(|c| matches!(c.outcome, CaseOutcome::Unsat { .. }))
            .count()
    }

    pub fn unsat_valid(&self) -> usize {
        self.cases
            .iter()
            .filter(|c| matches!(c.outcome, CaseOutcome::Unsat { valid_full: true, .. }))
            .count()
    }

    pub fn unsat_with_counterexample(&self) -> usize {
        self.cases
            .iter()
            .filter(|c| {
                matches!(
                    c.outcome,
                    CaseOutcome::Unsat {
                        counterexample: Some(_),
                        ..
                    }
                )
            })
            .count()
    }

    pub fn errors(&self) -> usize {
        self.cases
            .iter()
            .filter(|c| matches!(c.outcome, CaseOutcome::Error(_)))
            .count()
    }

    /// Mutation kinds that must always be caught but slipped through.
    pub fn missed_mandatory(&self) -> Vec<MutationKind> {
        self.mutations
            .iter()
            .filter(|(k, s)| k.must_detect() && s.detected_full < s.applied)
            .map(|(k, _)| *k)
            .collect()
    }

    /// Lemma-only mutants must pass in PARTIAL mode.
    pub fn partial_rejected_lemma_only(&self) -> Vec<MutationKind> {
        self.mutations
            .iter()
            .filter(|(k, s)| k.lemma_only() && s.detected_partial > 0)
            .map(|(k, _)| *k)
            .collect()
    }

    pub fn all_ok(&self) -> bool {
        self.errors() == 0
            && self.sat_witness_ok() == self.sat()
            && self.unsat_valid() == self.unsat()
            && self.unsat_with_counterexample() == 0
            && self.missed_mandatory().is_empty()
            && self.partial_rejected_lemma_only().is_empty()
    }
}

impl fmt::Display for FuzzReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.config;
        writeln!(
            f,
            "fuzz seed={} count={} max_relus={} max_inputs={}",
            c.seed, c.count, c.shape.max_relus, c.shape.max_inputs
        )?;
        writeln!(
            f,
            "UNSAT {}: {}/{} proofs VALID (FULL), {} with a sampled counterexample",
            self.unsat(),
            self.unsat_valid(),
            self.unsat(),
            self.unsat_with_counterexample()
        )?;
        writeln!(
            f,
            "SAT {}: {}/{} witnesses confirmed by forward evaluation",
            self.sat(),
            self.sat_witness_ok(),
            self.sat()
        )?;
        writeln!(f, "errors {}", self.errors())?;
        for case in &self.cases {
            if let CaseOutcome::Error(e) = &case.outcome {
                writeln!(f, "  case {}: {e}", case.index)?;
            }
        }
        writeln!(f)?;
        writeln!(
            f,
            "{:<26} {:>8} {:>14} {:>17} {:>10}",
            "mutation", "applied", "detected FULL", "detected PARTIAL", "mandatory"
        )?;
        for (kind, s) in &self.mutations {
            let pct = |d: usize| {
                if s.applied == 0 {
                    "-".to_string()
                } else {
                    format!("{d} ({:.0}%)", 100.0 * d as f64 / s.applied as f64)
                }
            };
            writeln!(
                f,
                "{:<26} {:>8} {:>14} {:>17} {:>10}",
                kind.name(),
                s.applied,
                pct(s.detected_full),
                pct(s.detected_partial),
                if kind.must_detect() { "yes" } else { "no" }
            )?;
        }
        write!(f, "\nresult: {}", if self.all_ok() { "OK" } else { "FAILED" })
    }
}

/// Encodes, proves and checks `config.count` random queries, then mutates
/// every UNSAT proof.
pub fn fuzz(config: FuzzConfig) -> FuzzReport {
    let mut rng = rng(config.seed);
    let mut cases = Vec::with_capacity(config.count);
    let mut stats: Vec<(MutationKind, MutationStats)> = MutationKind::ALL
        .iter()
        .map(|&k| (k, MutationStats::default()))
        .collect();
    let full = CheckOptions::with_mode(Mode::Full);
    let partial = CheckOptions::with_mode(Mode::Partial);
    for index in 0..config.count {
        let network = random_network(&mut rng, config.shape);
        let property = random_property(&mut rng, &network);
        let mut proof = None;
        let outcome = match encode(&network, &property) {
            Err(e) => CaseOutcome::Error(e.to_string()),
            Ok(enc) => match prove(&enc.query, config.limits) {
                Err(e) => CaseOutcome::Error(e.to_string()),
                Ok(ProveResult::Sat(x)) => CaseOutcome::Sat {
                    witness_ok: check_sat_witness(&network, &property, &enc.layout.inputs_of(&x))
                        .unwrap_or(false),
                },
                Ok(ProveResult::Unsat(p)) => {
                    let valid_full = check_proof(&p, &full).verdict.is_valid();
                    let counterexample =
                        sample_for_witness(&mut rng, &network, &property, config.witness_samples);
                    for (kind, s) in stats.iter_mut() {
                        for _ in 0..config.mutants_per_kind {
                            if let Some(mutant) = mutate(&mut rng, &p, *kind) {
                                s.applied += 1;
                                if !check_proof(&mutant, &full).verdict.is_valid() {
                                    s.detected_full += 1;
                                }
                                if !check_proof(&mutant, &partial).verdict.is_valid() {
                                    s.detected_partial += 1;
                                }
                            }
                        }
                    }
                    let nodes = p.root.count_nodes();
                    proof = Some(p);
                    CaseOutcome::Unsat {
                        valid_full,
                        counterexample,
                        nodes,
                    }
                }
            },
        };
        cases.push(FuzzCase {
            index,
            network,
            property,
            outcome,
            proof,
        });
    }
    FuzzReport {
        config,
        cases,
        mutations: stats,
    }
}
