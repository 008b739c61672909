//! Plain Fourier-Motzkin feasibility for `A x = 0, l <= x <= u`, written
//! against `num_rational` directly and sharing no code with the producer.
//! Equalities are eliminated by substitution; inequalities carry only the
//! set of originals they came from, pruned with Chernikov's rule.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

type Q = BigRational;

const MAX_ROWS: usize = 200_000;

#[derive(Clone)]
struct Ineq {
    coeffs: Vec<Q>,
    rhs: Q,
    history: u64,
}

fn q(r: &farkas_core::Rational) -> Q {
    Q::new(r.numer().clone(), r.denom().clone())
}

/// `true` iff some real `x` satisfies the system.
pub fn feasible(rows: &[Vec<farkas_core::Rational>], upper: &[farkas_core::Rational], lower: &[farkas_core::Rational]) -> bool {
    let n = upper.len();
    let mut eqs: Vec<(Vec<Q>, Q)> = rows
        .iter()
        .map(|r| (r.iter().map(q).collect(), Q::zero()))
        .collect();
    let mut ineqs = Vec::new();
    for i in 0..n {
        let mut c = vec![Q::zero(); n];
        c[i] = Q::one();
        ineqs.push(Ineq { coeffs: c.clone(), rhs: q(&upper[i]), history: 1 << (2 * i) });
        c[i] = -Q::one();
        ineqs.push(Ineq { coeffs: c, rhs: -q(&lower[i]), history: 1 << (2 * i + 1) });
    }
    let mut fm_steps = 0u32;
    for j in 0..n {
        if let Some(k) = eqs.iter().position(|(c, _)| !c[j].is_zero()) {
            let (pc, pr) = eqs.swap_remove(k);
            let pivot = pc[j].clone();
            let sub = |c: &mut Vec<Q>, r: &mut Q| {
                if c[j].is_zero() {
                    return;
                }
                let f = &c[j] / &pivot;
                for t in 0..n {
                    let d = &f * &pc[t];
                    c[t] -= d;
                }
                *r -= &f * &pr;
            };
            for (c, r) in eqs.iter_mut() {
                sub(c, r);
            }
            for e in ineqs.iter_mut() {
                sub(&mut e.coeffs, &mut e.rhs);
            }
        } else {
            fm_steps += 1;
            let (mut pos, mut neg, mut rest) = (Vec::new(), Vec::new(), Vec::new());
            for e in ineqs {
                if e.coeffs[j].is_positive() {
                    pos.push(e);
                } else if e.coeffs[j].is_negative() {
                    neg.push(e);
                } else {
                    rest.push(e);
                }
            }
            for p in &pos {
                for m in &neg {
                    let history = p.history | m.history;
                    if history.count_ones() > fm_steps + 1 {
                        continue;
                    }
                    let a = -&m.coeffs[j];
                    let b = p.coeffs[j].clone();
                    let coeffs = (0..n).map(|t| &a * &p.coeffs[t] + &b * &m.coeffs[t]).collect();
                    rest.push(Ineq { coeffs, rhs: &a * &p.rhs + &b * &m.rhs, history });
                }
            }
            ineqs = dedup(rest);
            assert!(ineqs.len() <= MAX_ROWS, "oracle blowup");
        }
        if eqs.iter().any(|(c, r)| c.iter().all(Zero::is_zero) && !r.is_zero()) {
            return false;
        }
        if ineqs.iter().any(|e| e.coeffs.iter().all(Zero::is_zero) && e.rhs.is_negative()) {
            return false;
        }
    }
    true
}

fn dedup(rows: Vec<Ineq>) -> Vec<Ineq> {
    let mut best: BTreeMap<(Vec<Q>, u64), Ineq> = BTreeMap::new();
    for mut e in rows {
        if let Some(lead) = e.coeffs.iter().find(|c| !c.is_zero()).map(|c| c.abs()) {
            for c in e.coeffs.iter_mut() {
                *c /= &lead;
            }
            e.rhs /= &lead;
        }
        let key = (e.coeffs.clone(), e.history);
        match best.get(&key) {
            Some(old) if old.rhs <= e.rhs => {}
            _ => {
                best.insert(key, e);
            }
        }
    }
    best.into_values().collect()
}

/// Exact membership test for a candidate point.
pub fn satisfies(rows: &[Vec<farkas_core::Rational>], upper: &[farkas_core::Rational], lower: &[farkas_core::Rational], x: &[farkas_core::Rational]) -> bool {
    let x: Vec<Q> = x.iter().map(q).collect();
    let in_box = (0..x.len()).all(|i| q(&lower[i]) <= x[i] && x[i] <= q(&upper[i]));
    in_box
        && rows.iter().all(|r| {
            r.iter()
                .zip(&x)
                .fold(Q::zero(), |acc, (a, v)| acc + q(a) * v)
                .is_zero()
        })
}
