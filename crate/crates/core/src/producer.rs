//! A small proof-producing verifier: complete ReLU case splitting, lemma
//! emitting bound tightening, and Fourier-Motzkin elimination that returns
//! either a feasible point or a Farkas certificate for each leaf.
//!
//! Only meant for desk-scale queries; elimination is exponential in the worst
//! case and is guarded by size limits.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::checker::{CheckerState, ContradictionRule, ReluRule};
use crate::linalg::{Backend, DimensionError, Tableau, Vector};
use crate::proof::{
    BoundKind, BoundUpdate, Lemma, Proof, ProofNode, Query, ReluConstraint, Split, VarIndex,
};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FmError {
    #[error("{vars} variables exceed the limit of {limit}")]
    TooManyVars { vars: usize, limit: usize },
    #[error("elimination produced more than {0} inequalities")]
    TooManyInequalities(usize),
    #[error("empty box: lower bound exceeds upper bound for variable {0}")]
    EmptyBox(VarIndex),
    #[error(transparent)]
    Dimension(#[from] DimensionError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProveError {
    #[error("{found} ReLU constraints exceed the limit of {limit}")]
    TooManyRelus { found: usize, limit: usize },
    #[error("unsupported query: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Fm(#[from] FmError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FmLimits {
    pub max_vars: usize,
    pub max_inequalities: usize,
}

impl Default for FmLimits {
    fn default() -> Self {
        FmLimits {
            max_vars: 32,
            max_inequalities: 20_000,
        }
    }
}

/// `a . x <= b`, derived as
/// `a = w^T A + alpha - beta` and `b = alpha . u - beta . l`
/// with `alpha, beta >= 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub coeffs: Vec<Rational>,
    pub rhs: Rational,
    pub w: Vec<Rational>,
    pub alpha: Vec<Rational>,
    pub beta: Vec<Rational>,
}

impl Derivation {
    /// Recomputes `(a, b)` from the multipliers alone.
    pub fn replay(
        &self,
        tableau: &Tableau,
        upper: &Vector,
        lower: &Vector,
    ) -> Result<(Vec<Rational>, Rational), DimensionError> {
        let w = Vector::from_values(self.w.clone(), Backend::Dense);
        let mut a = tableau.combine(&w)?.to_values();
        a.resize(tableau.num_cols(), Rational::zero());
        let mut b = Rational::zero();
        for i in 0..tableau.num_cols() {
            a[i] += &(&self.alpha[i] - &self.beta[i]);
            b += &(&self.alpha[i] * &*upper.get(i));
            b -= &(&self.beta[i] * &*lower.get(i));
        }
        Ok((a, b))
    }

    pub fn is_contradiction(&self) -> bool {
        self.coeffs.iter().all(Rational::is_zero) && self.rhs.is_negative()
    }
}

/// Multipliers of every inequality derived during one elimination run.
pub type FmTrace = Vec<Derivation>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FmOutcome {
    Feasible(Vector),
    Infeasible {
        certificate: Vector,
        derivation: Derivation,
    },
}

impl FmOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, FmOutcome::Feasible(_))
    }
}

#[derive(Debug, Clone)]
struct Ineq {
    d: Derivation,
    /// Original inequalities this one was derived from.
    history: Vec<u64>,
    /// Variables occurring in those originals.
    touched: Vec<u64>,
}

fn bits(v: &[u64]) -> usize {
    v.iter().map(|w| w.count_ones() as usize).sum()
}

fn bitset(n: usize, ones: impl IntoIterator<Item = usize>) -> Vec<u64> {
    let mut v = vec![0u64; n.div_ceil(64).max(1)];
    for i in ones {
        v[i / 64] |= 1 << (i % 64);
    }
    v
}

impl Ineq {
    fn support(&self) -> Vec<u64> {
        bitset(
            self.d.coeffs.len(),
            (0..self.d.coeffs.len()).filter(|&j| !self.d.coeffs[j].is_zero()),
        )
    }

    /// Imbert's acceptance test: an inequality built from more than
    /// `1 + |variables eliminated along its history|` originals is redundant.
    fn possibly_irredundant(&self) -> bool {
        let support = self.support();
        let gone: usize = self
            .touched
            .iter()
            .zip(&support)
            .map(|(t, s)| (t & !s).count_ones() as usize)
            .sum();
        bits(&self.history) <= gone + 1
    }

    fn combine(&self, s: &Rational, other: &Ineq, t: &Rational) -> Ineq {
        let lin = |x: &[Rational], y: &[Rational]| -> Vec<Rational> {
            x.iter().zip(y).map(|(p, q)| s * p + t * q).collect()
        };
        Ineq {
            d: Derivation {
                coeffs: lin(&self.d.coeffs, &other.d.coeffs),
                rhs: s * &self.d.rhs + t * &other.d.rhs,
                w: lin(&self.d.w, &other.d.w),
                alpha: lin(&self.d.alpha, &other.d.alpha),
                beta: lin(&self.d.beta, &other.d.beta),
            },
            history: self
                .history
                .iter()
                .zip(&other.history)
                .map(|(a, b)| a | b)
                .collect(),
            touched: self
                .touched
                .iter()
                .zip(&other.touched)
                .map(|(a, b)| a | b)
                .collect(),
        }
    }

    /// Scales so the first non-zero coefficient has magnitude 1.
    fn normalized(mut self) -> Ineq {
        if let Some(lead) = self.d.coeffs.iter().find(|c| !c.is_zero()) {
            let k = lead.abs().recip().expect("non-zero");
            let scale = |v: &mut Vec<Rational>| v.iter_mut().for_each(|x| *x = &*x * &k);
            scale(&mut self.d.coeffs);
            scale(&mut self.d.w);
            scale(&mut self.d.alpha);
            scale(&mut self.d.beta);
            self.d.rhs = &self.d.rhs * &k;
        }
        self
    }
}

/// Equation `row . x = 0` as a combination `w` of tableau rows.
#[derive(Debug, Clone)]
struct Pivot {
    var: VarIndex,
    row: Vec<Rational>,
    w: Vec<Rational>,
}

fn axpy(y: &mut [Rational], a: &Rational, x: &[Rational]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        if !xi.is_zero() {
            *yi += &(a * xi);
        }
    }
}

/// Decides `A x = 0, l <= x <= u` exactly.
pub fn fm_feasible(
    tableau: &Tableau,
    upper: &Vector,
    lower: &Vector,
    limits: FmLimits,
) -> Result<FmOutcome, FmError> {
    fm_feasible_traced(tableau, upper, lower, limits).map(|(o, _)| o)
}

/// Like [`fm_feasible`], also returning every inequality that was derived.
pub fn fm_feasible_traced(
    tableau: &Tableau,
    upper: &Vector,
    lower: &Vector,
    limits: FmLimits,
) -> Result<(FmOutcome, FmTrace), FmError> {
    let n = tableau.num_cols();
    let m = tableau.num_rows();
    for v in [upper, lower] {
        if v.len() != n {
            return Err(DimensionError {
                expected: n,
                found: v.len(),
            }
            .into());
        }
    }
    if n > limits.max_vars {
        return Err(FmError::TooManyVars {
            vars: n,
            limit: limits.max_vars,
        });
    }
    let u = upper.to_values();
    let l = lower.to_values();
    if let Some(i) = (0..n).find(|&i| l[i] > u[i]) {
        return Err(FmError::EmptyBox(i));
    }
    let zeros = |k: usize| vec![Rational::zero(); k];
    let mut trace = Vec::new();

    // Reduced row echelon form of the equalities, pivots normalised to 1.
    let mut pivots: Vec<Pivot> = Vec::new();
    for r in 0..m {
        let mut row = tableau.row(r).to_values();
        let mut w = zeros(m);
        w[r] = Rational::one();
        for p in &pivots {
            let k = -&row[p.var];
            if !k.is_zero() {
                axpy(&mut row, &k, &p.row);
                axpy(&mut w, &k, &p.w);
            }
        }
        let Some(var) = (0..n).rev().find(|&j| !row[j].is_zero()) else {
            continue;
        };
        let k = row[var].recip().expect("non-zero");
        row.iter_mut().for_each(|x| *x = &*x * &k);
        w.iter_mut().for_each(|x| *x = &*x * &k);
        for p in &mut pivots {
            let c = -&p.row[var];
            if !c.is_zero() {
                axpy(&mut p.row, &c, &row);
                axpy(&mut p.w, &c, &w);
            }
        }
        pivots.push(Pivot { var, row, w });
    }

    // Box inequalities, pivot variables substituted out.
    let mut ineqs = Vec::with_capacity(2 * n);
    for i in 0..n {
        for (sign, rhs) in [(1, &u[i]), (-1, &l[i])] {
            let mut coeffs = zeros(n);
            coeffs[i] = Rational::from(sign);
            let (mut alpha, mut beta) = (zeros(n), zeros(n));
            let slot = if sign > 0 { i } else { n + i };
            if sign > 0 {
                alpha[i] = Rational::one();
            } else {
                beta[i] = Rational::one();
            }
            ineqs.push(Ineq {
                d: Derivation {
                    coeffs,
                    rhs: Rational::from(sign) * rhs,
                    w: zeros(m),
                    alpha,
                    beta,
                },
                history: bitset(2 * n, [slot]),
                touched: Vec::new(),
            });
        }
    }
    // Free variables pinned by `l = u` are substituted like equalities,
    // through their own bound rows.
    let pivot_vars: HashSet<VarIndex> = pivots.iter().map(|p| p.var).collect();
    let fixed: Vec<VarIndex> = (0..n)
        .filter(|j| !pivot_vars.contains(j) && l[*j] == u[*j])
        .collect();
    for q in &mut ineqs {
        for p in &pivots {
            let k = -&q.d.coeffs[p.var];
            if !k.is_zero() {
                axpy(&mut q.d.coeffs, &k, &p.row);
                axpy(&mut q.d.w, &k, &p.w);
            }
        }
        for &j in &fixed {
            let a = std::mem::take(&mut q.d.coeffs[j]);
            if a.is_positive() {
                q.d.rhs -= &(&a * &l[j]);
                q.d.beta[j] += &a;
            } else if a.is_negative() {
                q.d.rhs -= &(&a * &u[j]);
                q.d.alpha[j] -= &a;
            }
        }
        q.touched = q.support();
    }

    let mut stages: Vec<(VarIndex, Vec<Ineq>)> = Vec::new();
    loop {
        // Drop trivial rows; stop at the first contradiction.
        let mut kept: Vec<Ineq> = Vec::new();
        let mut best: HashMap<Vec<Rational>, usize> = HashMap::new();
        for q in ineqs {
            trace.push(q.d.clone());
            if q.d.coeffs.iter().all(Rational::is_zero) {
                if q.d.rhs.is_negative() {
                    let certificate =
                        Vector::from_values(q.d.w.iter().map(|x| -x).collect(), Backend::Dense);
                    return Ok((
                        FmOutcome::Infeasible {
                            certificate,
                            derivation: q.d,
                        },
                        trace,
                    ));
                }
                continue;
            }
            if !q.possibly_irredundant() {
                continue;
            }
            let q = q.normalized();
            match best.get(&q.d.coeffs) {
                Some(&idx) if kept[idx].d.rhs <= q.d.rhs => {}
                Some(&idx) => kept[idx] = q,
                None => {
                    best.insert(q.d.coeffs.clone(), kept.len());
                    kept.push(q);
                }
            }
        }
        if kept.len() > limits.max_inequalities {
            return Err(FmError::TooManyInequalities(limits.max_inequalities));
        }
        ineqs = kept;

        let candidates: HashSet<VarIndex> = ineqs
            .iter()
            .flat_map(|q| (0..n).filter(|&j| !q.d.coeffs[j].is_zero()))
            .collect();
        let Some(j) = candidates.into_iter().min_by_key(|&j| {
            let pos = ineqs.iter().filter(|q| q.d.coeffs[j].is_positive()).count();
            let neg = ineqs.iter().filter(|q| q.d.coeffs[j].is_negative()).count();
            (pos * neg, pos + neg, j)
        }) else {
            break;
        };

        let (involved, rest): (Vec<Ineq>, Vec<Ineq>) =
            ineqs.into_iter().partition(|q| !q.d.coeffs[j].is_zero());
        let mut next = rest;
        for p in involved.iter().filter(|q| q.d.coeffs[j].is_positive()) {
            for q in involved.iter().filter(|q| q.d.coeffs[j].is_negative()) {
                let s = -&q.d.coeffs[j];
                let t = p.d.coeffs[j].clone();
                let mut c = p.combine(&s, q, &t);
                c.d.coeffs[j] = Rational::zero();
                next.push(c);
            }
            if next.len() > limits.max_inequalities {
                return Err(FmError::TooManyInequalities(limits.max_inequalities));
            }
        }
        stages.push((j, involved));
        ineqs = next;
    }

    // Back-substitution, last eliminated variable first.
    let mut x: Vec<Option<Rational>> = vec![None; n];
    for (j, involved) in stages.iter().rev() {
        let mut lo: Option<Rational> = None;
        let mut hi: Option<Rational> = None;
        for q in involved {
            let mut rest = q.d.rhs.clone();
            for (k, c) in q.d.coeffs.iter().enumerate() {
                if k != *j && !c.is_zero() {
                    rest -= &(c * x[k].as_ref().unwrap_or(&Rational::zero()));
                }
            }
            let a = &q.d.coeffs[*j];
            let v = rest.checked_div(a).expect("non-zero");
            if a.is_positive() {
                hi = Some(hi.map_or(v.clone(), |h| Rational::min_of(h, v)));
            } else {
                lo = Some(lo.map_or(v.clone(), |h| Rational::max_of(h, v)));
            }
        }
        x[*j] = Some(lo.or(hi).unwrap_or_default());
    }
    for i in 0..n {
        if x[i].is_none() && !pivot_vars.contains(&i) {
            x[i] = Some(l[i].clone());
        }
    }
    for p in &pivots {
        let mut v = Rational::zero();
        for (k, c) in p.row.iter().enumerate() {
            if k != p.var && !c.is_zero() {
                v -= &(c * x[k].as_ref().expect("free variables assigned"));
            }
        }
        x[p.var] = Some(v);
    }
    let witness = Vector::from_values(x.into_iter().map(Option::unwrap_or_default).collect(), Backend::Dense);
    debug_assert!(tableau.apply(&witness).unwrap().iter().all(Rational::is_zero));
    debug_assert!((0..n).all(|i| l[i] <= *witness.get(i) && *witness.get(i) <= u[i]));
    Ok((FmOutcome::Feasible(witness), trace))
}

fn violates_relu(c: &ReluConstraint, x: &Vector) -> bool {
    let b = x.get(c.b);
    let f = x.get(c.f);
    *f != Rational::max_of(b.into_owned(), Rational::zero())
}

/// Tightest single-row derivation of `(var, kind)`: the current bound
/// (`w = 0`) or one tableau row solved for `var`.
fn best_single_row(
    state: &CheckerState,
    var: VarIndex,
    kind: BoundKind,
    backend: Backend,
) -> (Rational, Vector) {
    let m = state.tableau.num_rows();
    let mut best_w = Vector::zeros(m, backend);
    let mut best = state.bound(var, kind);
    for (r, row) in state.tableau.rows().iter().enumerate() {
        let a = row.get(var);
        if a.is_zero() {
            continue;
        }
        let w = Vector::unit(m, r, backend).scale(&-a.recip().expect("non-zero"));
        let v = state
            .derive_bound_from_farkas(&w, var, kind)
            .expect("dimensions agree");
        let better = match kind {
            BoundKind::Upper => v < best,
            BoundKind::Lower => v > best,
        };
        if better {
            best = v;
            best_w = w;
        }
    }
    (best, best_w)
}

/// Whether applying `(var, kind, value)` keeps the box non-empty and keeps 0
/// inside the ranges of ReLUs that are still unsplit.
fn safe_update(
    state: &CheckerState,
    var: VarIndex,
    kind: BoundKind,
    value: &Rational,
    split: &HashSet<usize>,
) -> bool {
    let (lo, hi) = match kind {
        BoundKind::Upper => (state.bound(var, BoundKind::Lower), value.clone()),
        BoundKind::Lower => (value.clone(), state.bound(var, BoundKind::Upper)),
    };
    if lo > hi {
        return false;
    }
    let zero = Rational::zero();
    !state
        .constraints
        .iter()
        .any(|c| !split.contains(&c.id) && (c.b == var || c.f == var) && (lo > zero || hi < zero))
}

/// Fixpoint of the five ReLU rules, each causing bound derived from a single
/// row. Returns the emitted lemmas in application order; `state` is updated.
pub fn tighten(
    state: &mut CheckerState,
    split: &HashSet<usize>,
    backend: Backend,
) -> Vec<Lemma> {
    const MAX_ROUNDS: usize = 32;
    let mut lemmas = Vec::new();
    for _ in 0..MAX_ROUNDS {
        let mut changed = false;
        let constraints = state.constraints.clone();
        for c in &constraints {
            for rule in ReluRule::ALL {
                let (cv, ck) = rule.causing(c);
                let (value, farkas) = best_single_row(state, cv, ck, backend);
                if !rule.applies(&value) {
                    continue;
                }
                let concl = rule.conclusion(&value);
                let (av, ak) = rule.affected(c);
                if !state.is_tighter(av, ak, &concl) || !safe_update(state, av, ak, &concl, split) {
                    continue;
                }
                let lemma = Lemma {
                    causing: BoundUpdate::new(cv, ck, value),
                    affected: BoundUpdate::new(av, ak, concl),
                    constraint_id: c.id,
                    farkas,
                };
                state.apply_lemma(&lemma);
                lemmas.push(lemma);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    lemmas
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProverLimits {
    pub max_relus: usize,
    pub fm: FmLimits,
}

impl Default for ProverLimits {
    fn default() -> Self {
        ProverLimits {
            max_relus: 8,
            fm: FmLimits::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProveResult {
    /// A full column assignment satisfying rows, bounds and every ReLU.
    Sat(Vector),
    Unsat(Proof),
}

enum Search {
    Sat(Vector),
    Unsat(ProofNode),
}

pub fn prove(query: &Query, limits: ProverLimits) -> Result<ProveResult, ProveError> {
    let found = query.constraints.len();
    if found > limits.max_relus {
        return Err(ProveError::TooManyRelus {
            found,
            limit: limits.max_relus,
        });
    }
    let n = query.num_cols();
    if n > limits.fm.max_vars {
        return Err(FmError::TooManyVars {
            vars: n,
            limit: limits.fm.max_vars,
        }
        .into());
    }
    let state = CheckerState::new(
        query.tableau.clone(),
        query.upper.clone(),
        query.lower.clone(),
        query.constraints.clone(),
    )
    .map_err(FmError::from)?;
    for i in 0..n {
        if *state.lower.get(i) > *state.upper.get(i) {
            return Err(FmError::EmptyBox(i).into());
        }
    }
    for c in &query.constraints {
        let (lb, ub) = (state.lower.get(c.b), state.upper.get(c.b));
        let (lf, uf) = (state.lower.get(c.f), state.upper.get(c.f));
        if lb.is_positive() || ub.is_negative() || lf.is_negative() || lf.is_positive() || uf.is_negative() {
            return Err(ProveError::Unsupported(format!(
                "ReLU {} needs l(b) <= 0 <= u(b) and l(f) = 0 <= u(f)",
                c.id
            )));
        }
    }
    let backend = query.upper.backend();
    match search(state, Split::default(), &mut HashSet::new(), backend, limits)? {
        Search::Sat(x) => Ok(ProveResult::Sat(x)),
        Search::Unsat(root) => Ok(ProveResult::Unsat(query.clone().into_proof(root))),
    }
}

fn search(
    mut state: CheckerState,
    split: Split,
    split_ids: &mut HashSet<usize>,
    backend: Backend,
    limits: ProverLimits,
) -> Result<Search, ProveError> {
    let lemmas = tighten(&mut state, split_ids, backend);
    match fm_feasible(&state.tableau, &state.upper, &state.lower, limits.fm)? {
        FmOutcome::Infeasible { certificate, .. } => {
            let w = certificate.to_backend(backend);
            debug_assert!(state.check_contradiction(&w, ContradictionRule::UpperOnly).unwrap());
            Ok(Search::Unsat(ProofNode::leaf(split, lemmas, w)))
        }
        FmOutcome::Feasible(x) => {
            let violated = state
                .constraints
                .iter()
                .filter(|c| violates_relu(c, &x))
                .min_by_key(|c| c.id)
                .copied();
            let Some(c) = violated else {
                return Ok(Search::Sat(x.to_backend(backend)));
            };
            if split_ids.contains(&c.id) {
                return Err(ProveError::Unsupported(format!(
                    "ReLU {} violated after it was split",
                    c.id
                )));
            }
            split_ids.insert(c.id);
            let mut children = Vec::with_capacity(2);
            for child_split in [
                Split::relu_active(&c, state.num_cols(), backend),
                Split::relu_inactive(&c),
            ] {
                let mut child = state.clone();
                child
                    .apply_split(&child_split)
                    .expect("split built from the state's own columns");
                match search(child, child_split, split_ids, backend, limits)? {
                    Search::Sat(x) => {
                        split_ids.remove(&c.id);
                        return Ok(Search::Sat(x));
                    }
                    Search::Unsat(node) => children.push(node),
                }
            }
            split_ids.remove(&c.id);
            Ok(Search::Unsat(ProofNode::inner(split, lemmas, children)))
        }
    }
}

/// Whether `x` satisfies the rows, the box and every ReLU of `query`.
pub fn is_query_solution(query: &Query, x: &Vector) -> bool {
    let n = query.num_cols();
    x.len() == n
        && query
            .tableau
            .apply(x)
            .map(|r| r.iter().all(Rational::is_zero))
            .unwrap_or(false)
        && (0..n).all(|i| *query.lower.get(i) <= *x.get(i) && *x.get(i) <= *query.upper.get(i))
        && !query.constraints.iter().any(|c| violates_relu(c, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::{check_proof, CheckOptions, Mode};
    use crate::encoder::{encode, BoxProperty, Interval};
    use crate::worked_example;

    fn q(n: i64) -> Rational {
        Rational::from(n)
    }

    fn v(xs: &[i64]) -> Vector {
        Vector::from_ints(xs, Backend::Dense)
    }

    fn fm(t: &Tableau, u: &Vector, l: &Vector) -> FmOutcome {
        fm_feasible(t, u, l, FmLimits::default()).unwrap()
    }

    #[test]
    fn two_variable_conflict() {
        let t = Tableau::new(2, vec![v(&[1, -1])]).unwrap();
        match fm(&t, &v(&[1, 3]), &v(&[0, 2])) {
            FmOutcome::Infeasible {
                certificate,
                derivation,
            } => {
                // Any positive multiple of [1] works; the combination x1 - x2
                // has maximum 1 - 2 = -1.
                assert!(certificate.get(0).is_positive());
                let s = CheckerState::new(t.clone(), v(&[1, 3]), v(&[0, 2]), vec![]).unwrap();
                assert!(s.check_contradiction(&certificate, ContradictionRule::UpperOnly).unwrap());
                let (a, b) = derivation.replay(&t, &v(&[1, 3]), &v(&[0, 2])).unwrap();
                assert_eq!((a, b), (derivation.coeffs.clone(), derivation.rhs.clone()));
                assert!(derivation.is_contradiction());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_tableau_is_feasible_at_lower() {
        let t = Tableau::empty(3);
        assert_eq!(fm(&t, &v(&[1, 2, 3]), &v(&[-1, 0, 3])), FmOutcome::Feasible(v(&[-1, 0, 3])));
        assert_eq!(
            fm_feasible(&t, &v(&[0, 0, 0]), &v(&[1, 0, 0]), FmLimits::default()),
            Err(FmError::EmptyBox(0))
        );
    }

    #[test]
    fn example_root_is_feasible() {
        let qy = worked_example::query();
        match fm(&qy.tableau, &qy.upper, &qy.lower) {
            FmOutcome::Feasible(x) => {
                assert!(qy.tableau.apply(&x).unwrap().iter().all(Rational::is_zero));
                for i in 0..9 {
                    assert!(*qy.lower.get(i) <= *x.get(i) && *x.get(i) <= *qy.upper.get(i));
                }
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn trace_replays() {
        let t = Tableau::new(3, vec![v(&[1, 1, -1]), v(&[1, -2, 0])]).unwrap();
        let (u, l) = (v(&[2, 2, 1]), v(&[1, 0, 0]));
        let (_, trace) = fm_feasible_traced(&t, &u, &l, FmLimits::default()).unwrap();
        assert!(!trace.is_empty());
        for d in &trace {
            assert!(d.alpha.iter().chain(&d.beta).all(|x| !x.is_negative()));
            assert_eq!(d.replay(&t, &u, &l).unwrap(), (d.coeffs.clone(), d.rhs.clone()));
        }
    }

    #[test]
    fn limits_are_enforced() {
        let t = Tableau::empty(40);
        let z = Vector::zeros(40, Backend::Dense);
        assert_eq!(
            fm_feasible(&t, &z, &z, FmLimits::default()),
            Err(FmError::TooManyVars { vars: 40, limit: 32 })
        );
    }

    fn example_state() -> CheckerState {
        let qy = worked_example::query();
        CheckerState::new(qy.tableau, qy.upper, qy.lower, qy.constraints).unwrap()
    }

    #[test]
    fn example_tightening_reproduces_root_lemma() {
        let mut s = example_state();
        let lemmas = tighten(&mut s, &HashSet::new(), Backend::Dense);
        let root = &worked_example::proof(Backend::Dense).root.lemmas[0];
        assert_eq!(&lemmas[0], root);
        assert_eq!(*s.upper.get(7), q(1));
        // Every emitted lemma checks against the state it was emitted in.
        let mut replay = example_state();
        for l in &lemmas {
            assert_eq!(replay.explain_lemma(l).unwrap(), None, "{l:?}");
            replay.apply_lemma(l);
        }
        assert_eq!(replay, s);
    }

    #[test]
    fn tightening_is_idempotent() {
        let mut s = example_state();
        tighten(&mut s, &HashSet::new(), Backend::Dense);
        let again = s.clone();
        assert!(tighten(&mut s, &HashSet::new(), Backend::Dense).is_empty());
        assert_eq!(s, again);
    }

    #[test]
    fn non_positive_upper_b_zeroes_f() {
        let c = ReluConstraint { id: 0, b: 0, f: 1 };
        let mut s = CheckerState::new(Tableau::empty(2), v(&[-2, 5]), v(&[-3, 0]), vec![c]).unwrap();
        let lemmas = tighten(&mut s, &HashSet::from([0]), Backend::Dense);
        assert_eq!(lemmas.len(), 1);
        assert_eq!(lemmas[0].affected, BoundUpdate::new(1, BoundKind::Upper, q(0)));
        assert_eq!(
            ReluRule::matching(&c, &lemmas[0].causing, &lemmas[0].affected),
            Some(ReluRule::NonPositiveUpperB)
        );
    }

    #[test]
    fn example_is_unsat_with_valid_proof() {
        for b in Backend::ALL {
            let qy = worked_example::query_with_backend(b);
            match prove(&qy, ProverLimits::default()).unwrap() {
                ProveResult::Unsat(p) => {
                    assert!(p.validate_structure().is_empty());
                    let r = check_proof(&p, &CheckOptions::with_mode(Mode::Full));
                    assert!(r.verdict.is_valid(), "{:?}", r.verdict);
                }
                ProveResult::Sat(x) => panic!("unexpected SAT {x:?}"),
            }
        }
    }

    #[test]
    fn wider_output_box_is_sat() {
        let net = worked_example::network();
        let prop = BoxProperty::new(
            vec![Interval::new(q(-1), q(1)); 2],
            vec![Interval::new(q(0), q(3))],
        )
        .unwrap();
        let enc = encode(&net, &prop).unwrap();
        match prove(&enc.query, ProverLimits::default()).unwrap() {
            ProveResult::Sat(x) => {
                assert!(is_query_solution(&enc.query, &x));
                let inputs = enc.layout.inputs_of(&x);
                assert!(crate::encoder::check_sat_witness(&net, &prop, &inputs).unwrap());
            }
            ProveResult::Unsat(_) => panic!("expected SAT"),
        }
    }

    #[test]
    fn point_box_at_a_sat_point() {
        let net = worked_example::network();
        let prop = BoxProperty::new(
            vec![Interval::new(q(0), q(0)), Interval::new(q(1), q(1))],
            vec![Interval::new(q(1), q(1))],
        )
        .unwrap();
        let enc = encode(&net, &prop).unwrap();
        match prove(&enc.query, ProverLimits::default()).unwrap() {
            ProveResult::Sat(x) => assert_eq!(enc.layout.inputs_of(&x), v(&[0, 1])),
            ProveResult::Unsat(_) => panic!("expected SAT"),
        }
    }

    #[test]
    fn relu_limit() {
        let qy = worked_example::query();
        let limits = ProverLimits {
            max_relus: 2,
            ..ProverLimits::default()
        };
        assert_eq!(
            prove(&qy, limits),
            Err(ProveError::TooManyRelus { found: 3, limit: 2 })
        );
    }
}
