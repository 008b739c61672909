//! Typed proof trees.
//!
//! A [`Proof`] carries the root query (tableau, bounds, ReLU constraints) and
//! a tree of [`ProofNode`]s. Inner nodes hold children whose splits must pair
//! up as the two phases of one ReLU; leaves hold a contradiction vector over
//! the tableau rows visible at that leaf.
//!
//! Row indexing of contradiction and Farkas vectors: entry `r < m` refers to
//! root row `r`; later entries refer to split equations in the order they are
//! met on the path from the root, equations of one split in list order.

use std::collections::HashSet;
use std::fmt;

use crate::linalg::{Backend, Tableau, Vector};
use crate::rational::Rational;

pub type VarIndex = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundKind {
    Upper,
    Lower,
}

impl BoundKind {
    pub fn name(self) -> &'static str {
        match self {
            BoundKind::Upper => "upper",
            BoundKind::Lower => "lower",
        }
    }
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundUpdate {
    pub var: VarIndex,
    pub kind: BoundKind,
    pub value: Rational,
}

impl BoundUpdate {
    pub fn new(var: VarIndex, kind: BoundKind, value: Rational) -> Self {
        BoundUpdate { var, kind, value }
    }
}

/// `row . x = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equation {
    pub row: Vector,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Split {
    pub bounds: Vec<BoundUpdate>,
    pub equations: Vec<Equation>,
}

impl Split {
    pub fn is_empty(&self) -> bool {
        self.bounds.is_empty() && self.equations.is_empty()
    }

    /// The phase `f = b, b >= 0`, written as the row `b - f` and `l(b) := 0`.
    pub fn relu_active(c: &ReluConstraint, num_cols: usize, backend: Backend) -> Split {
        let row = Vector::zeros(num_cols, backend)
            .with_entry(c.b, Rational::one())
            .with_entry(c.f, Rational::from(-1));
        Split {
            bounds: vec![BoundUpdate::new(c.b, BoundKind::Lower, Rational::zero())],
            equations: vec![Equation { row }],
        }
    }

    /// The phase `f = 0, b <= 0`, as `u(f) := 0` and `u(b) := 0`.
    pub fn relu_inactive(c: &ReluConstraint) -> Split {
        Split {
            bounds: vec![
                BoundUpdate::new(c.f, BoundKind::Upper, Rational::zero()),
                BoundUpdate::new(c.b, BoundKind::Upper, Rational::zero()),
            ],
            equations: Vec::new(),
        }
    }
}

/// `f = max(b, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReluConstraint {
    pub id: usize,
    pub b: VarIndex,
    pub f: VarIndex,
}

/// A bound deduced through a ReLU rule, with the Farkas vector that derives
/// the causing bound from the tableau.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lemma {
    pub causing: BoundUpdate,
    pub affected: BoundUpdate,
    pub constraint_id: usize,
    pub farkas: Vector,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeBody {
    Children(Vec<ProofNode>),
    Contradiction(Vector),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofNode {
    pub split: Split,
    pub lemmas: Vec<Lemma>,
    pub body: NodeBody,
}

impl ProofNode {
    pub fn leaf(split: Split, lemmas: Vec<Lemma>, contradiction: Vector) -> Self {
        ProofNode {
            split,
            lemmas,
            body: NodeBody::Contradiction(contradiction),
        }
    }

    pub fn inner(split: Split, lemmas: Vec<Lemma>, children: Vec<ProofNode>) -> Self {
        ProofNode {
            split,
            lemmas,
            body: NodeBody::Children(children),
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.body, NodeBody::Contradiction(_))
    }

    pub fn children(&self) -> &[ProofNode] {
        match &self.body {
            NodeBody::Children(c) => c,
            NodeBody::Contradiction(_) => &[],
        }
    }

    /// Depth-first, left-to-right visit with each node's path.
    pub fn walk<'a>(&'a self, path: &mut NodePath, f: &mut impl FnMut(&NodePath, &'a ProofNode)) {
        f(path, self);
        for (i, child) in self.children().iter().enumerate() {
            path.push(i);
            child.walk(path, f);
            path.pop();
        }
    }

    pub fn count_nodes(&self) -> usize {
        1 + self.children().iter().map(ProofNode::count_nodes).sum::<usize>()
    }

    pub fn count_leaves(&self) -> usize {
        if self.is_leaf() {
            1
        } else {
            self.children().iter().map(ProofNode::count_leaves).sum()
        }
    }

    pub fn depth(&self) -> usize {
        self.children().iter().map(|c| c.depth() + 1).max().unwrap_or(0)
    }

    fn map_vectors(&self, f: &impl Fn(&Vector) -> Vector) -> ProofNode {
        ProofNode {
            split: Split {
                bounds: self.split.bounds.clone(),
                equations: self
                    .split
                    .equations
                    .iter()
                    .map(|e| Equation { row: f(&e.row) })
                    .collect(),
            },
            lemmas: self
                .lemmas
                .iter()
                .map(|l| Lemma {
                    farkas: f(&l.farkas),
                    ..l.clone()
                })
                .collect(),
            body: match &self.body {
                NodeBody::Children(c) => {
                    NodeBody::Children(c.iter().map(|n| n.map_vectors(f)).collect())
                }
                NodeBody::Contradiction(w) => NodeBody::Contradiction(f(w)),
            },
        }
    }
}

/// Child indices from the root; the root itself is the empty path.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct NodePath(pub Vec<usize>);

impl NodePath {
    pub fn root() -> Self {
        NodePath(Vec::new())
    }

    pub fn push(&mut self, i: usize) {
        self.0.push(i);
    }

    pub fn pop(&mut self) {
        self.0.pop();
    }

    pub fn child(&self, i: usize) -> NodePath {
        let mut p = self.clone();
        p.push(i);
        p
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }
}

impl fmt::Display for NodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("root")?;
        for i in &self.0 {
            write!(f, ".{i}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Proof {
    pub tableau: Tableau,
    pub upper: Vector,
    pub lower: Vector,
    pub constraints: Vec<ReluConstraint>,
    pub root: ProofNode,
    /// Optional display names for the tableau columns.
    pub var_names: Option<Vec<String>>,
}

impl Proof {
    pub fn num_cols(&self) -> usize {
        self.tableau.num_cols()
    }

    pub fn constraint(&self, id: usize) -> Option<&ReluConstraint> {
        self.constraints.iter().find(|c| c.id == id)
    }

    /// The same proof with every vector stored in `backend`.
    pub fn to_backend(&self, backend: Backend) -> Proof {
        let conv = |v: &Vector| v.to_backend(backend);
        Proof {
            tableau: self.tableau.to_backend(backend),
            upper: conv(&self.upper),
            lower: conv(&self.lower),
            constraints: self.constraints.clone(),
            root: self.root.map_vectors(&conv),
            var_names: self.var_names.clone(),
        }
    }

    pub fn node_at(&self, path: &NodePath) -> Option<&ProofNode> {
        let mut node = &self.root;
        for &i in &path.0 {
            node = node.children().get(i)?;
        }
        Some(node)
    }

    pub fn node_at_mut(&mut self, path: &NodePath) -> Option<&mut ProofNode> {
        let mut node = &mut self.root;
        for &i in &path.0 {
            node = match &mut node.body {
                NodeBody::Children(c) => c.get_mut(i)?,
                NodeBody::Contradiction(_) => return None,
            };
        }
        Some(node)
    }

    pub fn validate_structure(&self) -> Vec<Defect> {
        validate_structure(self)
    }
}

/// A verification query in LP form: `A x = 0`, `lower <= x <= upper`, plus
/// ReLU constraints over tableau columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub tableau: Tableau,
    pub upper: Vector,
    pub lower: Vector,
    pub constraints: Vec<ReluConstraint>,
    pub var_names: Option<Vec<String>>,
}

impl Query {
    pub fn num_cols(&self) -> usize {
        self.tableau.num_cols()
    }

    pub fn to_backend(&self, backend: Backend) -> Query {
        Query {
            tableau: self.tableau.to_backend(backend),
            upper: self.upper.to_backend(backend),
            lower: self.lower.to_backend(backend),
            constraints: self.constraints.clone(),
            var_names: self.var_names.clone(),
        }
    }

    /// Proof skeleton rooted at this query.
    pub fn into_proof(self, root: ProofNode) -> Proof {
        Proof {
            tableau: self.tableau,
            upper: self.upper,
            lower: self.lower,
            constraints: self.constraints,
            root,
            var_names: self.var_names,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DefectKind {
    BoundVectorLength {
        which: BoundKind,
        expected: usize,
        found: usize,
    },
    RootBoundsCrossed {
        var: VarIndex,
    },
    VarNamesLength {
        expected: usize,
        found: usize,
    },
    DuplicateConstraintId {
        id: usize,
    },
    ConstraintVarOutOfRange {
        id: usize,
        var: VarIndex,
    },
    ConstraintSameVariable {
        id: usize,
    },
    EmptySplit,
    BoundVarOutOfRange {
        var: VarIndex,
    },
    EquationLength {
        expected: usize,
        found: usize,
    },
    ZeroEquation,
    UnknownConstraint {
        id: usize,
    },
    LemmaVarOutOfRange {
        var: VarIndex,
    },
    LemmaVarNotInConstraint {
        var: VarIndex,
        id: usize,
    },
    FarkasLength {
        expected: usize,
        found: usize,
    },
    ContradictionLength {
        expected: usize,
        found: usize,
    },
    NoChildren,
}

impl DefectKind {
    /// Stable short tag for reports.
    pub fn tag(&self) -> &'static str {
        match self {
            DefectKind::BoundVectorLength { .. } => "bound_vector_length",
            DefectKind::RootBoundsCrossed { .. } => "root_bounds_crossed",
            DefectKind::VarNamesLength { .. } => "var_names_length",
            DefectKind::DuplicateConstraintId { .. } => "duplicate_constraint_id",
            DefectKind::ConstraintVarOutOfRange { .. } => "constraint_var_out_of_range",
            DefectKind::ConstraintSameVariable { .. } => "constraint_same_variable",
            DefectKind::EmptySplit => "empty_split",
            DefectKind::BoundVarOutOfRange { .. } => "bound_var_out_of_range",
            DefectKind::EquationLength { .. } => "equation_length",
            DefectKind::ZeroEquation => "zero_equation",
            DefectKind::UnknownConstraint { .. } => "unknown_constraint",
            DefectKind::LemmaVarOutOfRange { .. } => "lemma_var_out_of_range",
            DefectKind::LemmaVarNotInConstraint { .. } => "lemma_var_not_in_constraint",
            DefectKind::FarkasLength { .. } => "farkas_length",
            DefectKind::ContradictionLength { .. } => "contradiction_length",
            DefectKind::NoChildren => "no_children",
        }
    }
}

impl fmt::Display for DefectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DefectKind::BoundVectorLength {
                which,
                expected,
                found,
            } => write!(f, "{which} bound vector has length {found}, expected {expected}"),
            DefectKind::RootBoundsCrossed { var } => {
                write!(f, "root lower bound exceeds upper bound for variable {var}")
            }
            DefectKind::VarNamesLength { expected, found } => {
                write!(f, "{found} variable names for {expected} variables")
            }
            DefectKind::DuplicateConstraintId { id } => write!(f, "constraint id {id} repeated"),
            DefectKind::ConstraintVarOutOfRange { id, var } => {
                write!(f, "constraint {id} references variable {var} out of range")
            }
            DefectKind::ConstraintSameVariable { id } => {
                write!(f, "constraint {id} uses one variable for both b and f")
            }
            DefectKind::EmptySplit => f.write_str("non-root node has an empty split"),
            DefectKind::BoundVarOutOfRange { var } => {
                write!(f, "split bound on variable {var} out of range")
            }
            DefectKind::EquationLength { expected, found } => {
                write!(f, "split equation has length {found}, expected {expected}")
            }
            DefectKind::ZeroEquation => f.write_str("split equation is the zero row"),
            DefectKind::UnknownConstraint { id } => write!(f, "lemma cites unknown constraint {id}"),
            DefectKind::LemmaVarOutOfRange { var } => {
                write!(f, "lemma references variable {var} out of range")
            }
            DefectKind::LemmaVarNotInConstraint { var, id } => {
                write!(f, "lemma variable {var} is not part of constraint {id}")
            }
            DefectKind::FarkasLength { expected, found } => {
                write!(f, "lemma Farkas vector has length {found}, expected {expected}")
            }
            DefectKind::ContradictionLength { expected, found } => {
                write!(f, "contradiction vector has length {found}, expected {expected}")
            }
            DefectKind::NoChildren => f.write_str("inner node has no children"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Defect {
    pub path: NodePath,
    pub kind: DefectKind,
}

impl fmt::Display for Defect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.kind)
    }
}

/// Every structural invariant violation, root-level defects first and then
/// tree defects in depth-first order. Empty means well formed.
pub fn validate_structure(p: &Proof) -> Vec<Defect> {
    let n = p.num_cols();
    let mut defects = Vec::new();
    let root_defect = |kind| Defect {
        path: NodePath::root(),
        kind,
    };

    for (which, v) in [(BoundKind::Upper, &p.upper), (BoundKind::Lower, &p.lower)] {
        if v.len() != n {
            defects.push(root_defect(DefectKind::BoundVectorLength {
                which,
                expected: n,
                found: v.len(),
            }));
        }
    }
    if p.upper.len() == n && p.lower.len() == n {
        for var in 0..n {
            if *p.lower.get(var) > *p.upper.get(var) {
                defects.push(root_defect(DefectKind::RootBoundsCrossed { var }));
            }
        }
    }
    if let Some(names) = &p.var_names {
        if names.len() != n {
            defects.push(root_defect(DefectKind::VarNamesLength {
                expected: n,
                found: names.len(),
            }));
        }
    }
    let mut seen = HashSet::new();
    for c in &p.constraints {
        if !seen.insert(c.id) {
            defects.push(root_defect(DefectKind::DuplicateConstraintId { id: c.id }));
        }
        for var in [c.b, c.f] {
            if var >= n {
                defects.push(root_defect(DefectKind::ConstraintVarOutOfRange { id: c.id, var }));
            }
        }
        if c.b == c.f {
            defects.push(root_defect(DefectKind::ConstraintSameVariable { id: c.id }));
        }
    }

    let mut path = NodePath::root();
    validate_node(p, &p.root, p.tableau.num_rows(), &mut path, &mut defects);
    defects
}

fn validate_node(
    p: &Proof,
    node: &ProofNode,
    rows_above: usize,
    path: &mut NodePath,
    defects: &mut Vec<Defect>,
) {
    let n = p.num_cols();
    let mut push = |kind| {
        defects.push(Defect {
            path: path.clone(),
            kind,
        })
    };

    if path.depth() > 0 && node.split.is_empty() {
        push(DefectKind::EmptySplit);
    }
    for b in &node.split.bounds {
        if b.var >= n {
            push(DefectKind::BoundVarOutOfRange { var: b.var });
        }
    }
    for e in &node.split.equations {
        if e.row.len() != n {
            push(DefectKind::EquationLength {
                expected: n,
                found: e.row.len(),
            });
        } else if e.row.is_zero() {
            push(DefectKind::ZeroEquation);
        }
    }
    let rows = rows_above + node.split.equations.len();

    for lemma in &node.lemmas {
        match p.constraint(lemma.constraint_id) {
            None => push(DefectKind::UnknownConstraint {
                id: lemma.constraint_id,
            }),
            Some(c) => {
                for var in [lemma.causing.var, lemma.affected.var] {
                    if var >= n {
                        push(DefectKind::LemmaVarOutOfRange { var });
                    } else if var != c.b && var != c.f {
                        push(DefectKind::LemmaVarNotInConstraint { var, id: c.id });
                    }
                }
            }
        }
        if lemma.farkas.len() != rows {
            push(DefectKind::FarkasLength {
                expected: rows,
                found: lemma.farkas.len(),
            });
        }
    }

    match &node.body {
        NodeBody::Contradiction(w) => {
            if w.len() != rows {
                push(DefectKind::ContradictionLength {
                    expected: rows,
                    found: w.len(),
                });
            }
        }
        NodeBody::Children(children) => {
            if children.is_empty() {
                push(DefectKind::NoChildren);
            }
            for (i, child) in children.iter().enumerate() {
                path.push(i);
                validate_node(p, child, rows, path, defects);
                path.pop();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::worked_example::proof as fig2_proof;

    #[test]
    fn fig2_is_well_formed() {
        for b in Backend::ALL {
            let p = fig2_proof(b);
            assert_eq!(validate_structure(&p), vec![]);
            assert_eq!(p.root.count_leaves(), 2);
            assert_eq!(p.root.depth(), 1);
        }
    }

    #[test]
    fn short_contradiction_is_reported() {
        let mut p = fig2_proof(Backend::Dense);
        let left = p.node_at_mut(&NodePath(vec![0])).unwrap();
        if let NodeBody::Contradiction(w) = &mut left.body {
            *w = w.truncated(4);
        }
        assert_eq!(
            validate_structure(&p),
            vec![Defect {
                path: NodePath(vec![0]),
                kind: DefectKind::ContradictionLength {
                    expected: 5,
                    found: 4
                }
            }]
        );
    }

    #[test]
    fn unknown_constraint_is_reported() {
        let mut p = fig2_proof(Backend::Dense);
        p.root.lemmas[0].constraint_id = 99;
        assert_eq!(
            validate_structure(&p),
            vec![Defect {
                path: NodePath::root(),
                kind: DefectKind::UnknownConstraint { id: 99 }
            }]
        );
    }

    #[test]
    fn every_invariant_has_a_defect() {
        let base = fig2_proof(Backend::Sparse);
        let cases: Vec<(Box<dyn Fn(&mut Proof)>, &str)> = vec![
            (Box::new(|p| p.upper = p.upper.truncated(8)), "bound_vector_length"),
            (
                Box::new(|p| p.lower = p.lower.clone().with_entry(8, Rational::from(4))),
                "root_bounds_crossed",
            ),
            (Box::new(|p| p.var_names = Some(vec!["x".into()])), "var_names_length"),
            (
                Box::new(|p| p.constraints[1].id = p.constraints[0].id),
                "duplicate_constraint_id",
            ),
            (Box::new(|p| p.constraints[0].f = 40), "constraint_var_out_of_range"),
            (Box::new(|p| p.constraints[0].f = p.constraints[0].b), "constraint_same_variable"),
            (
                Box::new(|p| p.node_at_mut(&NodePath(vec![1])).unwrap().split = Split::default()),
                "empty_split",
            ),
            (
                Box::new(|p| p.node_at_mut(&NodePath(vec![1])).unwrap().split.bounds[0].var = 9),
                "bound_var_out_of_range",
            ),
            (
                Box::new(|p| {
                    let eq = &mut p.node_at_mut(&NodePath(vec![0])).unwrap().split.equations[0];
                    eq.row = eq.row.extended(1);
                }),
                "equation_length",
            ),
            (
                Box::new(|p| {
                    p.node_at_mut(&NodePath(vec![0])).unwrap().split.equations[0].row =
                        Vector::zeros(9, Backend::Sparse)
                }),
                "zero_equation",
            ),
            (Box::new(|p| p.root.lemmas[0].constraint_id = 7), "unknown_constraint"),
            (Box::new(|p| p.root.lemmas[0].affected.var = 12), "lemma_var_out_of_range"),
            (Box::new(|p| p.root.lemmas[0].causing.var = 0), "lemma_var_not_in_constraint"),
            (
                Box::new(|p| p.root.lemmas[0].farkas = p.root.lemmas[0].farkas.extended(1)),
                "farkas_length",
            ),
            (
                Box::new(|p| {
                    if let NodeBody::Contradiction(w) =
                        &mut p.node_at_mut(&NodePath(vec![1])).unwrap().body
                    {
                        *w = w.extended(1);
                    }
                }),
                "contradiction_length",
            ),
            (Box::new(|p| p.root.body = NodeBody::Children(vec![])), "no_children"),
        ];
        for (mutate, tag) in cases {
            let mut p = base.clone();
            mutate(&mut p);
            let defects = validate_structure(&p);
            assert!(
                defects.iter().any(|d| d.kind.tag() == tag),
                "expected {tag}, got {defects:?}"
            );
        }
    }

    #[test]
    fn backend_conversion_preserves_values() {
        let p = fig2_proof(Backend::Dense);
        let s = p.to_backend(Backend::Sparse);
        assert_eq!(p, s);
        assert_eq!(s.upper.backend(), Backend::Sparse);
    }

    #[test]
    fn path_display() {
        assert_eq!(NodePath::root().to_string(), "root");
        assert_eq!(NodePath(vec![0, 1]).to_string(), "root.0.1");
    }
}
