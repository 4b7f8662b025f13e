//! Diagonal symbols `a(K)`.
//!
//! A symbol is a small expression tree over sequences. Eventually-constant
//! tables (the class `c00+`) are folded eagerly, so products and shifts of
//! elements of the polynomial algebra never grow a tree; only symbols that
//! mention an unbounded sequence (as produced by the derivation) keep
//! structure, and those are evaluated exactly at any index.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::sequences::{scalar, Sequence, C64};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
enum Node {
    /// `prefix[k]`, then `tail`.
    Table { prefix: Vec<C64>, tail: C64 },
    Seq(Arc<Sequence>),
    /// `s~(k + hi) - s~(k + lo)` where `s~(j) = 0` for `j < 0`.
    Increment { seq: Arc<Sequence>, lo: i64, hi: i64 },
    /// `inner(k + by)`, zero where `k + by < 0`.
    Shift { inner: Symbol, by: i64 },
    Add(Symbol, Symbol),
    Mul(Symbol, Symbol),
    Conj(Symbol),
}

/// A diagonal operator `a(K) E_k = a(k) E_k`.
#[derive(Clone, PartialEq)]
pub struct Symbol(Arc<Node>);

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            Node::Table { prefix, tail } => write!(f, "Table({prefix:?}; {tail})"),
            Node::Seq(s) => write!(f, "{s:?}"),
            Node::Increment { seq, lo, hi } => write!(f, "Inc({seq:?}, {lo}..{hi})"),
            Node::Shift { inner, by } => write!(f, "Shift({inner:?}, {by})"),
            Node::Add(x, y) => write!(f, "({x:?} + {y:?})"),
            Node::Mul(x, y) => write!(f, "({x:?} * {y:?})"),
            Node::Conj(x) => write!(f, "conj({x:?})"),
        }
    }
}

impl Symbol {
    fn node(n: Node) -> Self {
        Symbol(Arc::new(n))
    }

    pub fn table(mut prefix: Vec<C64>, tail: C64) -> Self {
        while prefix.last() == Some(&tail) {
            prefix.pop();
        }
        Symbol::node(Node::Table { prefix, tail })
    }

    pub fn constant(c: C64) -> Self {
        Symbol::table(Vec::new(), c)
    }

    pub fn zero() -> Self {
        Symbol::constant(ZERO)
    }

    pub fn one() -> Self {
        Symbol::constant(ONE)
    }

    /// Finitely supported symbol with the given values.
    pub fn finite(values: Vec<C64>) -> Self {
        Symbol::table(values, ZERO)
    }

    /// Indicator `k -> [k = j]`.
    pub fn delta(j: usize) -> Self {
        let mut v = vec![ZERO; j + 1];
        v[j] = ONE;
        Symbol::finite(v)
    }

    pub fn sequence(seq: Sequence) -> Self {
        match seq {
            Sequence::EventuallyConstant { prefix, tail } => Symbol::table(prefix, tail),
            other => Symbol::node(Node::Seq(Arc::new(other))),
        }
    }

    /// `k -> s(k + hi) - s(k + lo)` with `s` extended by zero to negative
    /// indices; its limit is `(hi - lo) * lim(s(k+1) - s(k))`.
    pub fn increment(seq: &Sequence, lo: i64, hi: i64) -> Self {
        if lo == hi {
            return Symbol::zero();
        }
        Symbol::node(Node::Increment {
            seq: Arc::new(seq.clone()),
            lo,
            hi,
        })
    }

    fn as_table(&self) -> Option<(&[C64], C64)> {
        match &*self.0 {
            Node::Table { prefix, tail } => Some((prefix, *tail)),
            _ => None,
        }
    }

    fn is_const(&self, c: C64) -> bool {
        matches!(self.as_table(), Some((p, t)) if p.is_empty() && t == c)
    }

    pub fn is_zero(&self) -> bool {
        self.is_const(ZERO)
    }

    /// Whether the symbol is an eventually constant table (`c00+`).
    pub fn is_eventually_constant(&self) -> bool {
        self.as_table().is_some()
    }

    /// `k -> self(k + by)`, zero where `k + by < 0`.
    pub fn shift(&self, by: i64) -> Self {
        if by == 0 {
            return self.clone();
        }
        if let Some((prefix, tail)) = self.as_table() {
            let new_prefix = if by > 0 {
                let by = by as usize;
                if by >= prefix.len() {
                    Vec::new()
                } else {
                    prefix[by..].to_vec()
                }
            } else {
                let mut v = vec![ZERO; (-by) as usize];
                v.extend_from_slice(prefix);
                v
            };
            return Symbol::table(new_prefix, tail);
        }
        if let Node::Shift { inner, by: b0 } = &*self.0 {
            // The outer zero-fill [k + by >= 0] is implied by the inner one
            // [k + by + b0 >= 0] exactly when by >= 0 or b0 <= 0.
            if by >= 0 || *b0 <= 0 {
                return inner.shift(b0 + by);
            }
        }
        Symbol::node(Node::Shift {
            inner: self.clone(),
            by,
        })
    }

    pub fn add(&self, other: &Symbol) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        if let (Some((p, s)), Some((q, t))) = (self.as_table(), other.as_table()) {
            return zip_tables(p, s, q, t, |x, y| x + y);
        }
        Symbol::node(Node::Add(self.clone(), other.clone()))
    }

    pub fn mul(&self, other: &Symbol) -> Self {
        if self.is_zero() || other.is_zero() {
            return Symbol::zero();
        }
        if self.is_const(ONE) {
            return other.clone();
        }
        if other.is_const(ONE) {
            return self.clone();
        }
        if let (Some((p, s)), Some((q, t))) = (self.as_table(), other.as_table()) {
            return zip_tables(p, s, q, t, |x, y| x * y);
        }
        Symbol::node(Node::Mul(self.clone(), other.clone()))
    }

    pub fn scale(&self, c: C64) -> Self {
        self.mul(&Symbol::constant(c))
    }

    pub fn neg(&self) -> Self {
        self.scale(-ONE)
    }

    pub fn sub(&self, other: &Symbol) -> Self {
        self.add(&other.neg())
    }

    pub fn conj(&self) -> Self {
        if let Some((p, t)) = self.as_table() {
            return Symbol::table(p.iter().map(|z| z.conj()).collect(), t.conj());
        }
        if let Node::Conj(inner) = &*self.0 {
            return inner.clone();
        }
        Symbol::node(Node::Conj(self.clone()))
    }

    pub fn at(&self, k: usize) -> C64 {
        match &*self.0 {
            Node::Table { prefix, tail } => prefix.get(k).copied().unwrap_or(*tail),
            Node::Seq(s) => s.at(k),
            Node::Increment { seq, lo, hi } => {
                let ext = |j: i64| if j < 0 { ZERO } else { seq.at(j as usize) };
                ext(k as i64 + hi) - ext(k as i64 + lo)
            }
            Node::Shift { inner, by } => {
                let j = k as i64 + by;
                if j < 0 {
                    ZERO
                } else {
                    inner.at(j as usize)
                }
            }
            Node::Add(x, y) => x.at(k) + y.at(k),
            Node::Mul(x, y) => x.at(k) * y.at(k),
            Node::Conj(x) => x.at(k).conj(),
        }
    }

    /// Index past which the symbol is identically zero, if any.
    pub fn support_bound(&self) -> Option<usize> {
        match &*self.0 {
            Node::Table { prefix, tail } => (*tail == ZERO).then_some(prefix.len()),
            Node::Seq(s) => match s.settled_after() {
                Some(k0) if s.at(k0) == ZERO => Some(k0),
                _ => None,
            },
            Node::Increment { .. } => None,
            Node::Shift { inner, by } => inner
                .support_bound()
                .map(|b| (b as i64 - by).max(0) as usize),
            Node::Add(x, y) => Some(x.support_bound()?.max(y.support_bound()?)),
            Node::Mul(x, y) => match (x.support_bound(), y.support_bound()) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (Some(a), None) | (None, Some(a)) => Some(a),
                (None, None) => None,
            },
            Node::Conj(x) => x.support_bound(),
        }
    }

    /// Index past which the symbol is constant, when that is known
    /// structurally.
    pub fn settled_after(&self) -> Option<usize> {
        match &*self.0 {
            Node::Table { prefix, .. } => Some(prefix.len()),
            Node::Seq(s) => s.settled_after(),
            Node::Increment { .. } => None,
            Node::Shift { inner, by } => inner
                .settled_after()
                .map(|b| (b as i64 - by).max(0) as usize),
            Node::Add(x, y) => Some(x.settled_after()?.max(y.settled_after()?)),
            Node::Mul(x, y) => {
                if let Some(b) = self.support_bound() {
                    return Some(b);
                }
                Some(x.settled_after()?.max(y.settled_after()?))
            }
            Node::Conj(x) => x.settled_after(),
        }
    }

    /// `lim_k a(k)`, when it exists and follows from declared metadata.
    pub fn limit(&self) -> Option<C64> {
        match &*self.0 {
            Node::Table { tail, .. } => Some(*tail),
            Node::Seq(s) => s.limit(),
            Node::Increment { seq, lo, hi } => seq.difference_limit().map(|d| d * (hi - lo) as f64),
            Node::Shift { inner, .. } => inner.limit(),
            Node::Add(x, y) => Some(x.limit()? + y.limit()?),
            Node::Mul(x, y) => {
                if self.support_bound().is_some() {
                    return Some(ZERO);
                }
                Some(x.limit()? * y.limit()?)
            }
            Node::Conj(x) => x.limit().map(|z| z.conj()),
        }
    }

    /// Length of a window on which agreement of two `c00+` symbols implies
    /// equality everywhere.
    pub fn probe_len(&self) -> usize {
        self.settled_after().unwrap_or(0)
    }

    /// Pointwise agreement on `[0, window)` plus agreement of limits.
    pub fn agrees_with(&self, other: &Symbol, window: usize, tol: f64) -> bool {
        let pointwise = (0..window).all(|k| {
            let (x, y) = (self.at(k), other.at(k));
            (x - y).norm() <= tol * (1.0 + x.norm().max(y.norm()))
        });
        let limits = match (self.limit(), other.limit()) {
            (Some(x), Some(y)) => (x - y).norm() <= tol * (1.0 + x.norm()),
            (None, None) => true,
            _ => false,
        };
        pointwise && limits
    }

    /// Serializable description; only eventually-constant tables and plain
    /// sequences have one.
    pub fn spec(&self) -> Option<SymbolSpec> {
        match &*self.0 {
            Node::Table { prefix, tail } => Some(SymbolSpec::EventuallyConstant {
                prefix: prefix.clone(),
                tail: *tail,
            }),
            Node::Seq(s) => Some(SymbolSpec::Sequence((**s).clone())),
            _ => None,
        }
    }
}

fn zip_tables(
    p: &[C64],
    s: C64,
    q: &[C64],
    t: C64,
    op: impl Fn(C64, C64) -> C64,
) -> Symbol {
    let n = p.len().max(q.len());
    let prefix = (0..n)
        .map(|k| op(p.get(k).copied().unwrap_or(s), q.get(k).copied().unwrap_or(t)))
        .collect();
    Symbol::table(prefix, op(s, t))
}

/// Structured-text form of a symbol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SymbolSpec {
    EventuallyConstant {
        #[serde(with = "scalar::vec")]
        prefix: Vec<C64>,
        #[serde(with = "scalar")]
        tail: C64,
    },
    Sequence(Sequence),
}

impl From<SymbolSpec> for Symbol {
    fn from(spec: SymbolSpec) -> Self {
        match spec {
            SymbolSpec::EventuallyConstant { prefix, tail } => Symbol::table(prefix, tail),
            SymbolSpec::Sequence(s) => Symbol::sequence(s),
        }
    }
}
