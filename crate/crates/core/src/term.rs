//! Terms of a first-order signature.
//!
//! Term nodes are reference-counted and shared: repeated substitution along a
//! loop (e.g. `x0 <= (mul x0 x0)`) can square the written-out size of a
//! register term on every pass, so the engine works on the shared DAG. Each
//! node caches its hash and free-variable set at construction, which keeps
//! hashing, capture checks and substitution cheap regardless of the unshared
//! tree size.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::signature::Signature;

/// Sorted set of variable indices. Small in practice.
pub type VarSet = Vec<usize>;

pub(crate) fn varset_union(a: &[usize], b: &[usize]) -> VarSet {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

#[derive(Debug)]
pub enum TermKind {
    /// The variable `x_index`.
    Var(usize),
    /// A constant symbol of the signature.
    Const(String),
    /// A function symbol applied to argument terms.
    App(String, Vec<Term>),
}

#[derive(Debug)]
pub struct TermNode {
    kind: TermKind,
    hash: u64,
    free: VarSet,
    /// Written-out tree size, saturating. Lets evaluation pick a plain
    /// traversal for small terms and DAG-memoized evaluation for terms
    /// whose sharing hides exponential size.
    tree_size: u64,
}

/// A shared, immutable term.
#[derive(Debug, Clone)]
pub struct Term(Arc<TermNode>);

impl Drop for TermNode {
    /// Register terms built by loop substitution form chains as deep as the
    /// run is long; reap children iteratively so dropping the last handle
    /// does not recurse.
    fn drop(&mut self) {
        let mut stack: Vec<Term> = Vec::new();
        if let TermKind::App(_, args) = &mut self.kind {
            stack.append(args);
        }
        while let Some(term) = stack.pop() {
            if let Ok(mut node) = Arc::try_unwrap(term.0) {
                if let TermKind::App(_, args) = &mut node.kind {
                    stack.append(args);
                }
            }
        }
    }
}

impl Term {
    pub fn var(index: usize) -> Term {
        let mut h = DefaultHasher::new();
        (0u8, index).hash(&mut h);
        Term(Arc::new(TermNode {
            kind: TermKind::Var(index),
            hash: h.finish(),
            free: vec![index],
            tree_size: 1,
        }))
    }

    pub fn constant(symbol: impl Into<String>) -> Term {
        let symbol = symbol.into();
        let mut h = DefaultHasher::new();
        (1u8, &symbol).hash(&mut h);
        Term(Arc::new(TermNode {
            kind: TermKind::Const(symbol),
            hash: h.finish(),
            free: vec![],
            tree_size: 1,
        }))
    }

    pub fn apply(symbol: impl Into<String>, args: Vec<Term>) -> Term {
        let symbol = symbol.into();
        let mut h = DefaultHasher::new();
        (2u8, &symbol).hash(&mut h);
        let mut free: VarSet = vec![];
        let mut tree_size = 1u64;
        for a in &args {
            a.precomputed_hash().hash(&mut h);
            free = varset_union(&free, a.free_vars());
            tree_size = tree_size.saturating_add(a.0.tree_size);
        }
        Term(Arc::new(TermNode {
            kind: TermKind::App(symbol, args),
            hash: h.finish(),
            free,
            tree_size,
        }))
    }

    pub fn kind(&self) -> &TermKind {
        &self.0.kind
    }

    /// Free variables in ascending index order (for terms, all variables).
    pub fn free_vars(&self) -> &[usize] {
        &self.0.free
    }

    pub fn has_free_var(&self, index: usize) -> bool {
        self.0.free.binary_search(&index).is_ok()
    }

    pub fn max_var(&self) -> Option<usize> {
        self.0.free.last().copied()
    }

    pub(crate) fn precomputed_hash(&self) -> u64 {
        self.0.hash
    }

    pub(crate) fn node_ptr(&self) -> *const TermNode {
        Arc::as_ptr(&self.0)
    }

    /// Written-out tree size (saturating at u64::MAX).
    pub fn tree_size(&self) -> u64 {
        self.0.tree_size
    }

    /// A primitive term is a variable, a constant symbol, or a function
    /// symbol applied to variables only.
    pub fn is_primitive(&self) -> bool {
        match self.kind() {
            TermKind::Var(_) | TermKind::Const(_) => true,
            TermKind::App(_, args) => args.iter().all(|a| matches!(a.kind(), TermKind::Var(_))),
        }
    }

    /// Simultaneous substitution of terms for variables. Terms have no
    /// binders, so no capture can occur. Subterms untouched by `s` are
    /// returned as-is, preserving sharing.
    pub fn substitute(&self, s: &Subst) -> Term {
        if self.free_vars().iter().all(|v| !s.map.contains_key(v)) {
            return self.clone();
        }
        match self.kind() {
            TermKind::Var(i) => s.map.get(i).cloned().unwrap_or_else(|| self.clone()),
            TermKind::Const(_) => self.clone(),
            TermKind::App(f, args) => {
                Term::apply(f.clone(), args.iter().map(|a| a.substitute(s)).collect())
            }
        }
    }

    /// Prefix-notation rendering truncated at roughly `budget` characters.
    pub fn display_clipped(&self, budget: usize) -> String {
        let mut out = String::new();
        let _ = self.write_clipped(&mut out, budget);
        out
    }

    pub(crate) fn write_clipped(&self, out: &mut String, budget: usize) -> bool {
        if out.len() >= budget {
            out.push_str("...");
            return false;
        }
        match self.kind() {
            TermKind::Var(i) => {
                out.push_str(&format!("x{i}"));
                true
            }
            TermKind::Const(c) => {
                out.push_str(c);
                true
            }
            TermKind::App(f, args) => {
                out.push('(');
                out.push_str(f);
                for a in args {
                    out.push(' ');
                    if !a.write_clipped(out, budget) {
                        return false;
                    }
                }
                out.push(')');
                true
            }
        }
    }

    /// Check that every symbol is declared with matching arity.
    pub fn check(&self, sig: &Signature) -> Result<(), String> {
        match self.kind() {
            TermKind::Var(_) => Ok(()),
            TermKind::Const(c) => {
                if sig.has_constant(c) {
                    Ok(())
                } else {
                    Err(format!("unknown constant '{c}'"))
                }
            }
            TermKind::App(f, args) => {
                match sig.function_arity(f) {
                    None => return Err(format!("unknown function symbol '{f}'")),
                    Some(a) if a != args.len() => {
                        return Err(format!(
                            "function '{f}' expects {a} arguments, got {}",
                            args.len()
                        ))
                    }
                    Some(_) => {}
                }
                for a in args {
                    a.check(sig)?;
                }
                Ok(())
            }
        }
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        if Arc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        if self.0.hash != other.0.hash {
            return false;
        }
        match (self.kind(), other.kind()) {
            (TermKind::Var(a), TermKind::Var(b)) => a == b,
            (TermKind::Const(a), TermKind::Const(b)) => a == b,
            (TermKind::App(f, xs), TermKind::App(g, ys)) => {
                f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| x == y)
            }
            _ => false,
        }
    }
}

impl Eq for Term {}

impl Hash for Term {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl fmt::Display for Term {
    /// Prefix notation: `x0`, `zero`, `(add x0 x1)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            TermKind::Var(i) => write!(f, "x{i}"),
            TermKind::Const(c) => write!(f, "{c}"),
            TermKind::App(g, args) => {
                write!(f, "({g}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// A finite map from variable indices to replacement terms.
#[derive(Debug, Clone, Default)]
pub struct Subst {
    pub(crate) map: BTreeMap<usize, Term>,
}

impl Subst {
    pub fn new() -> Self {
        Subst::default()
    }

    pub fn bind(mut self, index: usize, term: Term) -> Self {
        self.map.insert(index, term);
        self
    }

    pub fn insert(&mut self, index: usize, term: Term) {
        self.map.insert(index, term);
    }

    pub fn get(&self, index: usize) -> Option<&Term> {
        self.map.get(&index)
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Largest variable index mentioned anywhere in the range.
    pub fn max_range_var(&self) -> Option<usize> {
        self.map.values().filter_map(|t| t.max_var()).max()
    }

    /// Restriction of the map to the given free-variable set, dropping
    /// identity bindings' no-ops is not attempted; callers decide.
    pub(crate) fn restricted_to(&self, free: &[usize]) -> Subst {
        Subst {
            map: free.iter().filter_map(|v| self.map.get(v).map(|t| (*v, t.clone()))).collect(),
        }
    }
}

impl FromIterator<(usize, Term)> for Subst {
    fn from_iter<T: IntoIterator<Item = (usize, Term)>>(iter: T) -> Self {
        Subst { map: iter.into_iter().collect() }
    }
}

/// Per-call memoized evaluation cache keyed by node identity; see
/// [`crate::eval`]. Exposed here so eval can reach node pointers.
pub(crate) type TermPtrMap<V> = HashMap<*const TermNode, V>;
