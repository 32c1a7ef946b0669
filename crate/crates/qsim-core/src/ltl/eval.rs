//! Direct recursive evaluation of formulas on lasso paths.
//!
//! The recursion follows the temporal operators' defining equations:
//! `G f = f & X G f`, `F f = f | X F f`, `a U b = b | (a & X (a U b))`,
//! where the next state of the final state `k` is the loop start.  Because
//! the path is eventually periodic the recursion revisits (subformula, state)
//! pairs; results are memoized, and a revisit of a *pending* pair is a cycle
//! through `X`, resolved by the fixpoint character of the operator: `G`
//! resolves to true (greatest fixpoint), `F` and `U` to false (least
//! fixpoint).  Conjunction and disjunction are evaluated short-circuit with
//! the state-`i` conjunct first, so a pending cycle is only ever closed
//! through the operator's own unfolding.

use std::collections::HashMap;

use super::{Formula, LassoPath};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("state index {index} out of range 1..={k}")]
    IndexOutOfRange { index: usize, k: usize },
    #[error("formula refers to unknown aspect or object: {0}")]
    UnknownSymbol(String),
    #[error("formula contains a quantifier; expand quantifiers before evaluation")]
    QuantifierPresent,
}

#[derive(Clone, Copy, PartialEq)]
enum Memo {
    Pending,
    Done(bool),
}

/// Evaluates a quantifier-free formula at 1-based state `index` of the path.
pub fn evaluate_on_lasso(
    f: &Formula,
    path: &LassoPath,
    index: usize,
) -> Result<bool, EvalError> {
    if index < 1 || index > path.k() {
        return Err(EvalError::IndexOutOfRange {
            index,
            k: path.k(),
        });
    }
    let mut memo: HashMap<(usize, usize), Memo> = HashMap::new();
    eval(f, path, index, &mut memo)
}

fn key(f: &Formula, i: usize) -> (usize, usize) {
    (f as *const Formula as usize, i)
}

fn eval(
    f: &Formula,
    path: &LassoPath,
    i: usize,
    memo: &mut HashMap<(usize, usize), Memo>,
) -> Result<bool, EvalError> {
    match f {
        Formula::Atom(a) => {
            let rel = path
                .relation(&a.aspect, &a.a, &a.b, i)
                .ok_or_else(|| {
                    EvalError::UnknownSymbol(format!("{}[{},{}]", a.aspect, a.a, a.b))
                })?;
            Ok(a.rels.contains(rel))
        }
        Formula::ObjCmp { equal, a, b } => Ok((a == b) == *equal),
        Formula::True => Ok(true),
        Formula::False => Ok(false),
        Formula::Not(g) => Ok(!eval(g, path, i, memo)?),
        Formula::And(gs) => {
            for g in gs {
                if !eval(g, path, i, memo)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Formula::Or(gs) => {
            for g in gs {
                if eval(g, path, i, memo)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        Formula::Implies(a, b) => {
            Ok(!eval(a, path, i, memo)? || eval(b, path, i, memo)?)
        }
        Formula::Equiv(a, b) => Ok(eval(a, path, i, memo)? == eval(b, path, i, memo)?),
        Formula::Next(g) => match path.successor(i) {
            Some(j) => eval(g, path, j, memo),
            None => Ok(false),
        },
        Formula::Eventually(g) => fixpoint(f, g, None, path, i, memo, false),
        Formula::Always(g) => fixpoint(f, g, None, path, i, memo, true),
        Formula::Until(chi, phi) => fixpoint(f, phi, Some(chi), path, i, memo, false),
        Formula::Forall { .. } | Formula::Exists { .. } => Err(EvalError::QuantifierPresent),
    }
}

/// Shared unfolding for `F`, `G`, and `U`.
///
/// With `gfp` true this computes `G head` (head must hold now and the
/// unfolding must hold next, cycles resolve to true); with `gfp` false it
/// computes `(guard) U head` (head may hold now, else guard must hold and the
/// unfolding next; cycles resolve to false), where `F head` is the guardless
/// case.
fn fixpoint(
    whole: &Formula,
    head: &Formula,
    guard: Option<&Formula>,
    path: &LassoPath,
    i: usize,
    memo: &mut HashMap<(usize, usize), Memo>,
    gfp: bool,
) -> Result<bool, EvalError> {
    let k = key(whole, i);
    match memo.get(&k) {
        Some(Memo::Done(v)) => return Ok(*v),
        Some(Memo::Pending) => return Ok(gfp),
        None => {}
    }
    memo.insert(k, Memo::Pending);
    let now = eval(head, path, i, memo)?;
    let value = if gfp {
        now && match path.successor(i) {
            Some(j) => fixpoint(whole, head, guard, path, j, memo, gfp)?,
            // A finite path trivially satisfies G beyond its end.
            None => true,
        }
    } else {
        now || {
            let guard_ok = match guard {
                Some(g) => eval(g, path, i, memo)?,
                None => true,
            };
            guard_ok
                && match path.successor(i) {
                    Some(j) => fixpoint(whole, head, guard, path, j, memo, gfp)?,
                    None => false,
                }
        }
    };
    memo.insert(k, Memo::Done(value));
    Ok(value)
}
