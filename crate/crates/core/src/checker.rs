//! Proof-tree checking.
//!
//! The checker walks the tree depth first. At each node it applies the split
//! to a path-local copy of the bounds and tableau, checks (or, in partial
//! mode, admits) the node's lemmas and applies them, and then either verifies
//! the leaf's contradiction vector or verifies that the children's splits are
//! the two phases of one ReLU before descending.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use crate::linalg::{row_lower_bound, row_upper_bound, DimensionError, Tableau, Vector};
use crate::proof::{
    validate_structure, BoundKind, BoundUpdate, Lemma, NodeBody, NodePath, Proof, ProofNode,
    ReluConstraint, Split, VarIndex,
};
use crate::rational::Rational;

pub const DEFAULT_MAX_DEPTH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Mode {
    /// Lemmas are verified before they are applied.
    #[default]
    Full,
    /// Lemmas are applied as claimed.
    Partial,
}

impl Mode {
    pub const ALL: [Mode; 2] = [Mode::Full, Mode::Partial];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Full => "full",
            Mode::Partial => "partial",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "full" => Ok(Mode::Full),
            "partial" => Ok(Mode::Partial),
            other => Err(format!("unknown mode {other:?}")),
        }
    }
}

/// Which sign of `w^T A x` a contradiction vector may certify.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ContradictionRule {
    /// Accept `max < 0` or `min > 0` over the box.
    #[default]
    TwoSided,
    /// Accept only `max < 0`.
    UpperOnly,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error(transparent)]
    Dimension(#[from] DimensionError),
    #[error("unknown constraint id {0}")]
    UnknownConstraint(usize),
    #[error("variable {0} out of range")]
    VarOutOfRange(VarIndex),
}

/// Bounds and rows visible at one node of the tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckerState {
    pub tableau: Tableau,
    pub upper: Vector,
    pub lower: Vector,
    pub constraints: Vec<ReluConstraint>,
}

impl CheckerState {
    pub fn new(
        tableau: Tableau,
        upper: Vector,
        lower: Vector,
        constraints: Vec<ReluConstraint>,
    ) -> Result<Self, DimensionError> {
        for v in [&upper, &lower] {
            if v.len() != tableau.num_cols() {
                return Err(DimensionError {
                    expected: tableau.num_cols(),
                    found: v.len(),
                });
            }
        }
        Ok(CheckerState {
            tableau,
            upper,
            lower,
            constraints,
        })
    }

    pub fn from_proof(p: &Proof) -> Result<Self, DimensionError> {
        Self::new(
            p.tableau.clone(),
            p.upper.clone(),
            p.lower.clone(),
            p.constraints.clone(),
        )
    }

    pub fn num_cols(&self) -> usize {
        self.tableau.num_cols()
    }

    pub fn constraint(&self, id: usize) -> Option<&ReluConstraint> {
        self.constraints.iter().find(|c| c.id == id)
    }

    pub fn bound(&self, var: VarIndex, kind: BoundKind) -> Rational {
        match kind {
            BoundKind::Upper => self.upper.get(var).into_owned(),
            BoundKind::Lower => self.lower.get(var).into_owned(),
        }
    }

    /// Whether `value` is strictly tighter than the current `kind` bound.
    pub fn is_tighter(&self, var: VarIndex, kind: BoundKind, value: &Rational) -> bool {
        match kind {
            BoundKind::Upper => *value < *self.upper.get(var),
            BoundKind::Lower => *value > *self.lower.get(var),
        }
    }

    fn tighten(&mut self, var: VarIndex, kind: BoundKind, value: &Rational) -> bool {
        if !self.is_tighter(var, kind, value) {
            return false;
        }
        match kind {
            BoundKind::Upper => self.upper.set(var, value.clone()),
            BoundKind::Lower => self.lower.set(var, value.clone()),
        }
        true
    }

    /// Restates the split's bounds (keeping whichever bound is tighter) and
    /// appends its equations as new tableau rows.
    pub fn apply_split(&mut self, split: &Split) -> Result<(), CheckError> {
        for b in &split.bounds {
            if b.var >= self.num_cols() {
                return Err(CheckError::VarOutOfRange(b.var));
            }
        }
        for e in &split.equations {
            if e.row.len() != self.num_cols() {
                return Err(DimensionError {
                    expected: self.num_cols(),
                    found: e.row.len(),
                }
                .into());
            }
        }
        for b in &split.bounds {
            self.tighten(b.var, b.kind, &b.value);
        }
        for e in &split.equations {
            self.tableau.push_row(e.row.clone())?;
        }
        Ok(())
    }

    /// Exact `(max, min)` of `w^T A x` over the current box.
    pub fn contradiction_bounds(&self, w: &Vector) -> Result<(Rational, Rational), DimensionError> {
        let combination = self.tableau.combine(w)?;
        Ok((
            row_upper_bound(&combination, &self.upper, &self.lower)?,
            row_lower_bound(&combination, &self.upper, &self.lower)?,
        ))
    }

    /// Whether `w` certifies that `A x = 0, l <= x <= u` has no solution.
    pub fn check_contradiction(
        &self,
        w: &Vector,
        rule: ContradictionRule,
    ) -> Result<bool, DimensionError> {
        let (max, min) = self.contradiction_bounds(w)?;
        Ok(match rule {
            ContradictionRule::TwoSided => max.is_negative() || min.is_positive(),
            ContradictionRule::UpperOnly => max.is_negative(),
        })
    }

    /// Bound on `x_target` implied by `w`.
    ///
    /// With `c = w^T A` (so `c . x = 0`), the identity
    /// `x_i = sum_{j != i} c_j x_j + (c_i + 1) x_i` is bounded over the box.
    pub fn derive_bound_from_farkas(
        &self,
        w: &Vector,
        target: VarIndex,
        kind: BoundKind,
    ) -> Result<Rational, CheckError> {
        if target >= self.num_cols() {
            return Err(CheckError::VarOutOfRange(target));
        }
        let c = self.tableau.combine(w)?;
        let shifted = &*c.get(target) + &Rational::one();
        let e = c.with_entry(target, shifted);
        Ok(match kind {
            BoundKind::Upper => row_upper_bound(&e, &self.upper, &self.lower)?,
            BoundKind::Lower => row_lower_bound(&e, &self.upper, &self.lower)?,
        })
    }

    /// `Ok(None)` when the lemma is justified by the current state.
    pub fn explain_lemma(&self, lemma: &Lemma) -> Result<Option<LemmaFailure>, CheckError> {
        let constraint = *self
            .constraint(lemma.constraint_id)
            .ok_or(CheckError::UnknownConstraint(lemma.constraint_id))?;
        let derived =
            self.derive_bound_from_farkas(&lemma.farkas, lemma.causing.var, lemma.causing.kind)?;
        let derived_ok = match lemma.causing.kind {
            BoundKind::Upper => derived <= lemma.causing.value,
            BoundKind::Lower => derived >= lemma.causing.value,
        };
        if !derived_ok {
            return Ok(Some(LemmaFailure::CausingBoundNotDerived {
                derived,
                claimed: lemma.causing.value.clone(),
            }));
        }
        if ReluRule::matching(&constraint, &lemma.causing, &lemma.affected).is_none() {
            return Ok(Some(LemmaFailure::NoMatchingRule));
        }
        Ok(None)
    }

    pub fn check_lemma(&self, lemma: &Lemma, mode: Mode) -> Result<bool, CheckError> {
        match mode {
            Mode::Partial => Ok(true),
            Mode::Full => Ok(self.explain_lemma(lemma)?.is_none()),
        }
    }

    /// Applies the learned bound if it is strictly tighter; returns whether
    /// the state changed.
    pub fn apply_lemma(&mut self, lemma: &Lemma) -> bool {
        let a = &lemma.affected;
        a.var < self.num_cols() && self.tighten(a.var, a.kind, &a.value)
    }

    /// The constraint whose two phases the children's splits are, if any.
    pub fn match_children_splits(&self, children: &[ProofNode]) -> Option<usize> {
        if children.len() != 2 {
            return None;
        }
        let (s0, s1) = (&children[0].split, &children[1].split);
        self.constraints
            .iter()
            .find(|c| {
                (is_active_split(c, s0) && is_inactive_split(c, s1))
                    || (is_inactive_split(c, s0) && is_active_split(c, s1))
            })
            .map(|c| c.id)
    }

    pub fn check_children_splits(&self, children: &[ProofNode]) -> bool {
        self.match_children_splits(children).is_some()
    }
}

fn is_zero_update(b: &BoundUpdate, var: VarIndex, kind: BoundKind) -> bool {
    b.var == var && b.kind == kind && b.value.is_zero()
}

/// `{ b - f = 0 (either sign), l(b) := 0 }`.
pub fn is_active_split(c: &ReluConstraint, split: &Split) -> bool {
    if split.bounds.len() != 1 || !is_zero_update(&split.bounds[0], c.b, BoundKind::Lower) {
        return false;
    }
    let [eq] = split.equations.as_slice() else {
        return false;
    };
    let row = &eq.row;
    if row.nnz() != 2 || c.b >= row.len() || c.f >= row.len() {
        return false;
    }
    let (cb, cf) = (row.get(c.b), row.get(c.f));
    cb.abs() == Rational::one() && *cf == -&*cb
}

/// `{ u(f) := 0, u(b) := 0 }` in either order, no equations.
pub fn is_inactive_split(c: &ReluConstraint, split: &Split) -> bool {
    if !split.equations.is_empty() || split.bounds.len() != 2 {
        return false;
    }
    let (x, y) = (&split.bounds[0], &split.bounds[1]);
    (is_zero_update(x, c.f, BoundKind::Upper) && is_zero_update(y, c.b, BoundKind::Upper))
        || (is_zero_update(x, c.b, BoundKind::Upper) && is_zero_update(y, c.f, BoundKind::Upper))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LemmaFailure {
    CausingBoundNotDerived { derived: Rational, claimed: Rational },
    NoMatchingRule,
}

impl fmt::Display for LemmaFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LemmaFailure::CausingBoundNotDerived { derived, claimed } => write!(
                f,
                "Farkas vector derives causing bound {derived}, weaker than claimed {claimed}"
            ),
            LemmaFailure::NoMatchingRule => f.write_str("no ReLU rule yields the learned bound"),
        }
    }
}

/// Bound deductions justified by `f = max(b, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReluRule {
    /// `l(f) > 0` gives `l(b) := l(f)`.
    PositiveLowerF,
    /// `l(b) > 0` gives `l(f) := l(b)`.
    PositiveLowerB,
    /// Any `u(f)` gives `u(b) := u(f)`.
    UpperF,
    /// `u(b) <= 0` gives `u(f) := 0`.
    NonPositiveUpperB,
    /// `u(b) > 0` gives `u(f) := u(b)`.
    PositiveUpperB,
}

impl ReluRule {
    pub const ALL: [ReluRule; 5] = [
        ReluRule::PositiveLowerF,
        ReluRule::PositiveLowerB,
        ReluRule::UpperF,
        ReluRule::NonPositiveUpperB,
        ReluRule::PositiveUpperB,
    ];

    pub fn causing(self, c: &ReluConstraint) -> (VarIndex, BoundKind) {
        match self {
            ReluRule::PositiveLowerF => (c.f, BoundKind::Lower),
            ReluRule::PositiveLowerB => (c.b, BoundKind::Lower),
            ReluRule::UpperF => (c.f, BoundKind::Upper),
            ReluRule::NonPositiveUpperB | ReluRule::PositiveUpperB => (c.b, BoundKind::Upper),
        }
    }

    pub fn affected(self, c: &ReluConstraint) -> (VarIndex, BoundKind) {
        match self {
            ReluRule::PositiveLowerF => (c.b, BoundKind::Lower),
            ReluRule::PositiveLowerB => (c.f, BoundKind::Lower),
            ReluRule::UpperF => (c.b, BoundKind::Upper),
            ReluRule::NonPositiveUpperB | ReluRule::PositiveUpperB => (c.f, BoundKind::Upper),
        }
    }

    pub fn applies(self, causing_value: &Rational) -> bool {
        match self {
            ReluRule::PositiveLowerF | ReluRule::PositiveLowerB | ReluRule::PositiveUpperB => {
                causing_value.is_positive()
            }
            ReluRule::UpperF => true,
            ReluRule::NonPositiveUpperB => !causing_value.is_positive(),
        }
    }

    pub fn conclusion(self, causing_value: &Rational) -> Rational {
        match self {
            ReluRule::NonPositiveUpperB => Rational::zero(),
            _ => causing_value.clone(),
        }
    }

    /// The rule under which `causing` entails `affected`. A learned bound
    /// looser than the rule's conclusion is still entailed.
    pub fn matching(
        c: &ReluConstraint,
        causing: &BoundUpdate,
        affected: &BoundUpdate,
    ) -> Option<ReluRule> {
        ReluRule::ALL.into_iter().find(|rule| {
            rule.causing(c) == (causing.var, causing.kind)
                && rule.affected(c) == (affected.var, affected.kind)
                && rule.applies(&causing.value)
                && {
                    let concl = rule.conclusion(&causing.value);
                    match affected.kind {
                        BoundKind::Upper => affected.value >= concl,
                        BoundKind::Lower => affected.value <= concl,
                    }
                }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FailureReason {
    BadContradiction,
    BadLemma,
    BadSplitPair,
    Structure,
}

impl FailureReason {
    pub fn name(self) -> &'static str {
        match self {
            FailureReason::BadContradiction => "BAD_CONTRADICTION",
            FailureReason::BadLemma => "BAD_LEMMA",
            FailureReason::BadSplitPair => "BAD_SPLIT_PAIR",
            FailureReason::Structure => "STRUCTURE",
        }
    }
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub reason: FailureReason,
    pub path: NodePath,
    pub detail: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.reason, self.path, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    Invalid(Failure),
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }

    pub fn failure(&self) -> Option<&Failure> {
        match self {
            Verdict::Valid => None,
            Verdict::Invalid(f) => Some(f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CheckStats {
    pub nodes_checked: usize,
    pub lemmas_checked: usize,
    pub lemmas_skipped: usize,
    pub max_depth: usize,
    pub equations_appended: usize,
    /// Splits on a constraint already split on an ancestor.
    pub resplits: usize,
}

/// Local bounds at a node after its split and lemmas were applied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeTrace {
    pub path: NodePath,
    pub upper: Vector,
    pub lower: Vector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckOptions {
    pub mode: Mode,
    pub rule: ContradictionRule,
    /// Collect every failure instead of stopping at the first.
    pub keep_going: bool,
    pub max_depth: usize,
    /// Record a [`NodeTrace`] per visited node.
    pub trace: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            mode: Mode::Full,
            rule: ContradictionRule::TwoSided,
            keep_going: false,
            max_depth: DEFAULT_MAX_DEPTH,
            trace: false,
        }
    }
}

impl CheckOptions {
    pub fn with_mode(mode: Mode) -> Self {
        CheckOptions {
            mode,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckReport {
    pub verdict: Verdict,
    /// All failures in depth-first order; at most one unless `keep_going`.
    pub failures: Vec<Failure>,
    pub stats: CheckStats,
    pub trace: Vec<NodeTrace>,
}

struct Walk<'o> {
    opts: &'o CheckOptions,
    failures: Vec<Failure>,
    stats: CheckStats,
    trace: Vec<NodeTrace>,
}

impl Walk<'_> {
    /// Records a failure; returns true when traversal must stop.
    fn fail(&mut self, reason: FailureReason, path: &NodePath, detail: String) -> bool {
        self.failures.push(Failure {
            reason,
            path: path.clone(),
            detail,
        });
        !self.opts.keep_going
    }

    fn into_report(self) -> CheckReport {
        CheckReport {
            verdict: match self.failures.first() {
                None => Verdict::Valid,
                Some(f) => Verdict::Invalid(f.clone()),
            },
            failures: self.failures,
            stats: self.stats,
            trace: self.trace,
        }
    }

    // Returns true when traversal must stop.
    fn node(
        &mut self,
        node: &ProofNode,
        mut state: CheckerState,
        path: &mut NodePath,
        split_above: &mut Vec<usize>,
    ) -> bool {
        self.stats.nodes_checked += 1;
        self.stats.max_depth = self.stats.max_depth.max(path.depth());
        if path.depth() > self.opts.max_depth {
            return self.fail(
                FailureReason::Structure,
                path,
                format!("tree deeper than the limit of {}", self.opts.max_depth),
            );
        }

        if let Err(e) = state.apply_split(&node.split) {
            return self.fail(FailureReason::Structure, path, e.to_string());
        }
        self.stats.equations_appended += node.split.equations.len();

        for (i, lemma) in node.lemmas.iter().enumerate() {
            if self.opts.mode == Mode::Full {
                self.stats.lemmas_checked += 1;
                let problem = match state.explain_lemma(lemma) {
                    Ok(None) => None,
                    Ok(Some(f)) => Some(f.to_string()),
                    Err(e) => Some(e.to_string()),
                };
                if let Some(why) = problem {
                    if self.fail(FailureReason::BadLemma, path, format!("lemma {i}: {why}")) {
                        return true;
                    }
                    continue;
                }
            } else {
                self.stats.lemmas_skipped += 1;
            }
            state.apply_lemma(lemma);
        }

        if self.opts.trace {
            self.trace.push(NodeTrace {
                path: path.clone(),
                upper: state.upper.clone(),
                lower: state.lower.clone(),
            });
        }

        match &node.body {
            NodeBody::Contradiction(w) => match state.contradiction_bounds(w) {
                Err(e) => self.fail(FailureReason::Structure, path, e.to_string()),
                Ok((max, min)) => {
                    let ok = match self.opts.rule {
                        ContradictionRule::TwoSided => max.is_negative() || min.is_positive(),
                        ContradictionRule::UpperOnly => max.is_negative(),
                    };
                    if ok {
                        false
                    } else {
                        self.fail(
                            FailureReason::BadContradiction,
                            path,
                            format!("combination ranges over [{min}, {max}], which contains 0"),
                        )
                    }
                }
            },
            NodeBody::Children(children) => {
                match state.match_children_splits(children) {
                    Some(id) => {
                        if split_above.contains(&id) {
                            self.stats.resplits += 1;
                        }
                        split_above.push(id);
                    }
                    None => {
                        let detail = format!(
                            "{} children do not form the two phases of any ReLU constraint",
                            children.len()
                        );
                        if self.fail(FailureReason::BadSplitPair, path, detail) {
                            return true;
                        }
                        split_above.push(usize::MAX);
                    }
                }
                let mut stop = false;
                for (i, child) in children.iter().enumerate() {
                    path.push(i);
                    stop = self.node(child, state.clone(), path, split_above);
                    path.pop();
                    if stop {
                        break;
                    }
                }
                split_above.pop();
                stop
            }
        }
    }
}

/// Checks a subtree starting from `state`, the state of its parent.
pub fn check_node(
    node: &ProofNode,
    state: &CheckerState,
    opts: &CheckOptions,
    path: &NodePath,
) -> CheckReport {
    let mut walk = Walk {
        opts,
        failures: Vec::new(),
        stats: CheckStats::default(),
        trace: Vec::new(),
    };
    let mut path = path.clone();
    walk.node(node, state.clone(), &mut path, &mut Vec::new());
    walk.into_report()
}

pub fn check_proof(p: &Proof, opts: &CheckOptions) -> CheckReport {
    let defects = validate_structure(p);
    if !defects.is_empty() {
        let take = if opts.keep_going { defects.len() } else { 1 };
        let failures: Vec<Failure> = defects
            .into_iter()
            .take(take)
            .map(|d| Failure {
                reason: FailureReason::Structure,
                path: d.path,
                detail: d.kind.to_string(),
            })
            .collect();
        return CheckReport {
            verdict: Verdict::Invalid(failures[0].clone()),
            failures,
            stats: CheckStats::default(),
            trace: Vec::new(),
        };
    }
    let state = CheckerState::from_proof(p).expect("validated bound lengths");
    check_node(&p.root, &state, opts, &NodePath::root())
}

/// The state a node sees after its ancestors' splits and lemmas (but before
/// its own split), assuming every lemma on the way is admitted.
pub fn state_before(p: &Proof, path: &NodePath) -> Option<CheckerState> {
    let mut state = CheckerState::from_proof(p).ok()?;
    let mut node = &p.root;
    for &i in &path.0 {
        state.apply_split(&node.split).ok()?;
        for lemma in &node.lemmas {
            state.apply_lemma(lemma);
        }
        node = node.children().get(i)?;
    }
    Some(state)
}

/// Variables whose current lower bound exceeds the upper bound.
pub fn crossed_bounds(state: &CheckerState) -> Vec<VarIndex> {
    (0..state.num_cols())
        .filter(|&i| *state.lower.get(i) > *state.upper.get(i))
        .collect()
}

/// Constraint ids split on along the path to `path` (excluding the node).
pub fn constraints_split_above(p: &Proof, path: &NodePath) -> HashSet<usize> {
    let mut out = HashSet::new();
    let mut node = &p.root;
    for &i in &path.0 {
        if let Some(child) = node.children().get(i) {
            for c in &p.constraints {
                if is_active_split(c, &child.split) || is_inactive_split(c, &child.split) {
                    out.insert(c.id);
                }
            }
            node = child;
        }
    }
    out
}
