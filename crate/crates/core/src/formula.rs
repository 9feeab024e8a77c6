//! Formulas over a signature: equality, atoms, negation, conjunction and
//! universal quantification. `or`, `implies` and `exists` are surface sugar
//! and desugar into the core connectives at construction time.

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::sexpr::{self, SExpr};
use crate::signature::Signature;
use crate::term::{varset_union, Subst, Term, TermKind, VarSet};

/// Fresh bound-variable indices are allocated at or above this watermark when
/// substitution has to rename a binder to avoid capture.
pub const FRESH_VAR_WATERMARK: usize = 8192;

#[derive(Debug)]
pub enum FormulaKind {
    /// `t1 = t2`. Equality is built into the language.
    Equal(Term, Term),
    /// A predicate symbol applied to argument terms.
    Atom(String, Vec<Term>),
    Not(Formula),
    And(Formula, Formula),
    /// `forall x_index body`.
    ForAll(usize, Formula),
}

#[derive(Debug)]
struct FormulaNode {
    kind: FormulaKind,
    hash: u64,
    free: VarSet,
}

/// A shared, immutable formula in core-connective form.
#[derive(Debug, Clone)]
pub struct Formula(Arc<FormulaNode>);

fn mk(kind: FormulaKind) -> Formula {
    let mut h = DefaultHasher::new();
    let free = match &kind {
        FormulaKind::Equal(a, b) => {
            (0u8, a.precomputed_hash(), b.precomputed_hash()).hash(&mut h);
            varset_union(a.free_vars(), b.free_vars())
        }
        FormulaKind::Atom(p, args) => {
            (1u8, p).hash(&mut h);
            let mut free: VarSet = vec![];
            for a in args {
                a.precomputed_hash().hash(&mut h);
                free = varset_union(&free, a.free_vars());
            }
            free
        }
        FormulaKind::Not(f) => {
            (2u8, f.precomputed_hash()).hash(&mut h);
            f.free_vars().to_vec()
        }
        FormulaKind::And(a, b) => {
            (3u8, a.precomputed_hash(), b.precomputed_hash()).hash(&mut h);
            varset_union(a.free_vars(), b.free_vars())
        }
        FormulaKind::ForAll(i, f) => {
            (4u8, i, f.precomputed_hash()).hash(&mut h);
            let mut free = f.free_vars().to_vec();
            if let Ok(pos) = free.binary_search(i) {
                free.remove(pos);
            }
            free
        }
    };
    Formula(Arc::new(FormulaNode { kind, hash: h.finish(), free }))
}

impl Formula {
    pub fn equal(left: Term, right: Term) -> Formula {
        mk(FormulaKind::Equal(left, right))
    }

    pub fn atom(predicate: impl Into<String>, args: Vec<Term>) -> Formula {
        mk(FormulaKind::Atom(predicate.into(), args))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        mk(FormulaKind::Not(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        mk(FormulaKind::And(a, b))
    }

    pub fn forall(index: usize, body: Formula) -> Formula {
        mk(FormulaKind::ForAll(index, body))
    }

    /// `a or b` desugars to `not (not a and not b)`.
    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::not(Formula::and(Formula::not(a), Formula::not(b)))
    }

    /// `a implies b` desugars to `not (a and not b)`.
    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::not(Formula::and(a, Formula::not(b)))
    }

    /// `exists x body` desugars to `not (forall x (not body))`.
    pub fn exists(index: usize, body: Formula) -> Formula {
        Formula::not(Formula::forall(index, Formula::not(body)))
    }

    pub fn kind(&self) -> &FormulaKind {
        &self.0.kind
    }

    /// Free variables in ascending index order.
    pub fn free_vars(&self) -> &[usize] {
        &self.0.free
    }

    pub fn has_free_var(&self, index: usize) -> bool {
        self.0.free.binary_search(&index).is_ok()
    }

    pub(crate) fn precomputed_hash(&self) -> u64 {
        self.0.hash
    }

    /// Largest variable index occurring anywhere, bound or free.
    pub fn max_var_any(&self) -> Option<usize> {
        match self.kind() {
            FormulaKind::Equal(a, b) => a.max_var().max(b.max_var()),
            FormulaKind::Atom(_, args) => args.iter().filter_map(|t| t.max_var()).max(),
            FormulaKind::Not(f) => f.max_var_any(),
            FormulaKind::And(a, b) => a.max_var_any().max(b.max_var_any()),
            FormulaKind::ForAll(i, f) => f.max_var_any().max(Some(*i)),
        }
    }

    /// A primitive formula is `x_i = x_j` or a predicate symbol applied to
    /// variables only.
    pub fn is_primitive(&self) -> bool {
        match self.kind() {
            FormulaKind::Equal(a, b) => {
                matches!(a.kind(), TermKind::Var(_)) && matches!(b.kind(), TermKind::Var(_))
            }
            FormulaKind::Atom(_, args) => args.iter().all(|a| matches!(a.kind(), TermKind::Var(_))),
            _ => false,
        }
    }

    /// Capture-avoiding simultaneous substitution. Binders whose variable
    /// occurs free in an inserted term are renamed to a fresh index at or
    /// above [`FRESH_VAR_WATERMARK`] (and above every index already present),
    /// so the semantic substitution lemma holds.
    pub fn substitute(&self, s: &Subst) -> Formula {
        let applicable = s.restricted_to(self.free_vars());
        if applicable.is_empty() {
            return self.clone();
        }
        let mut next_fresh = FRESH_VAR_WATERMARK
            .max(self.max_var_any().map_or(0, |v| v + 1))
            .max(s.max_range_var().map_or(0, |v| v + 1));
        self.substitute_rec(&applicable, &mut next_fresh)
    }

    fn substitute_rec(&self, s: &Subst, next_fresh: &mut usize) -> Formula {
        let s = s.restricted_to(self.free_vars());
        if s.is_empty() {
            return self.clone();
        }
        match self.kind() {
            FormulaKind::Equal(a, b) => Formula::equal(a.substitute(&s), b.substitute(&s)),
            FormulaKind::Atom(p, args) => {
                Formula::atom(p.clone(), args.iter().map(|a| a.substitute(&s)).collect())
            }
            FormulaKind::Not(f) => Formula::not(f.substitute_rec(&s, next_fresh)),
            FormulaKind::And(a, b) => {
                Formula::and(a.substitute_rec(&s, next_fresh), b.substitute_rec(&s, next_fresh))
            }
            FormulaKind::ForAll(i, body) => {
                // s is already restricted to our free vars, which exclude i.
                let captures = s.map.values().any(|t| t.has_free_var(*i));
                if captures {
                    let fresh = *next_fresh;
                    *next_fresh += 1;
                    let rename: Subst = [(*i, Term::var(fresh))].into_iter().collect();
                    let renamed = body.substitute_rec(&rename, next_fresh);
                    Formula::forall(fresh, renamed.substitute_rec(&s, next_fresh))
                } else {
                    Formula::forall(*i, body.substitute_rec(&s, next_fresh))
                }
            }
        }
    }

    /// Check that every symbol is declared with matching arity.
    pub fn check(&self, sig: &Signature) -> Result<(), String> {
        match self.kind() {
            FormulaKind::Equal(a, b) => {
                a.check(sig)?;
                b.check(sig)
            }
            FormulaKind::Atom(p, args) => {
                match sig.predicate_arity(p) {
                    None => return Err(format!("unknown predicate symbol '{p}'")),
                    Some(a) if a != args.len() => {
                        return Err(format!(
                            "predicate '{p}' expects {a} arguments, got {}",
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
            FormulaKind::Not(f) => f.check(sig),
            FormulaKind::And(a, b) => {
                a.check(sig)?;
                b.check(sig)
            }
            FormulaKind::ForAll(_, f) => f.check(sig),
        }
    }
}

impl PartialEq for Formula {
    fn eq(&self, other: &Self) -> bool {
        if Arc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        if self.0.hash != other.0.hash {
            return false;
        }
        match (self.kind(), other.kind()) {
            (FormulaKind::Equal(a, b), FormulaKind::Equal(c, d)) => a == c && b == d,
            (FormulaKind::Atom(p, xs), FormulaKind::Atom(q, ys)) => p == q && xs == ys,
            (FormulaKind::Not(a), FormulaKind::Not(b)) => a == b,
            (FormulaKind::And(a, b), FormulaKind::And(c, d)) => a == c && b == d,
            (FormulaKind::ForAll(i, a), FormulaKind::ForAll(j, b)) => i == j && a == b,
            _ => false,
        }
    }
}

impl Eq for Formula {}

impl Hash for Formula {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl Formula {
    /// Prefix-notation rendering truncated at roughly `budget` characters.
    /// Register terms built by long loops can be exponentially large when
    /// written out; diagnostics use this instead of `Display`.
    pub fn display_clipped(&self, budget: usize) -> String {
        let mut out = String::new();
        let _ = self.write_clipped(&mut out, budget);
        out
    }

    fn write_clipped(&self, out: &mut String, budget: usize) -> bool {
        if out.len() >= budget {
            out.push_str("...");
            return false;
        }
        match self.kind() {
            FormulaKind::Equal(a, b) => {
                out.push_str("(= ");
                if a.write_clipped(out, budget) {
                    out.push(' ');
                    if b.write_clipped(out, budget) {
                        out.push(')');
                        return true;
                    }
                }
                false
            }
            FormulaKind::Atom(p, args) => {
                out.push('(');
                out.push_str(p);
                for a in args {
                    out.push(' ');
                    if !a.write_clipped(out, budget) {
                        return false;
                    }
                }
                out.push(')');
                true
            }
            FormulaKind::Not(g) => {
                out.push_str("(not ");
                if g.write_clipped(out, budget) {
                    out.push(')');
                    return true;
                }
                false
            }
            FormulaKind::And(a, b) => {
                out.push_str("(and ");
                if a.write_clipped(out, budget) {
                    out.push(' ');
                    if b.write_clipped(out, budget) {
                        out.push(')');
                        return true;
                    }
                }
                false
            }
            FormulaKind::ForAll(i, g) => {
                out.push_str(&format!("(forall x{i} "));
                if g.write_clipped(out, budget) {
                    out.push(')');
                    return true;
                }
                false
            }
        }
    }
}

impl fmt::Display for Formula {
    /// Prefix notation over core connectives, e.g.
    /// `(forall x1 (not (= (add x0 x1) x0)))`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            FormulaKind::Equal(a, b) => write!(f, "(= {a} {b})"),
            FormulaKind::Atom(p, args) => {
                write!(f, "({p}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
            FormulaKind::Not(g) => write!(f, "(not {g})"),
            FormulaKind::And(a, b) => write!(f, "(and {a} {b})"),
            FormulaKind::ForAll(i, g) => write!(f, "(forall x{i} {g})"),
        }
    }
}

fn parse_variable(atom: &str) -> Option<usize> {
    let rest = atom.strip_prefix('x')?;
    if rest.is_empty() || !rest.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    rest.parse().ok()
}

fn term_from_sexpr(e: &SExpr, sig: &Signature) -> Result<Term, String> {
    match e {
        SExpr::Atom(a) => {
            if let Some(i) = parse_variable(a) {
                Ok(Term::var(i))
            } else if sig.has_constant(a) {
                Ok(Term::constant(a.clone()))
            } else {
                Err(format!("unknown constant or variable '{a}'"))
            }
        }
        SExpr::List(items) => {
            let head = items
                .first()
                .and_then(SExpr::as_atom)
                .ok_or("expected a function symbol at the head of a term")?;
            let arity = sig
                .function_arity(head)
                .ok_or_else(|| format!("unknown function symbol '{head}'"))?;
            let args: Vec<Term> =
                items[1..].iter().map(|a| term_from_sexpr(a, sig)).collect::<Result<_, _>>()?;
            if args.len() != arity {
                return Err(format!(
                    "function '{head}' expects {arity} arguments, got {}",
                    args.len()
                ));
            }
            Ok(Term::apply(head.to_string(), args))
        }
    }
}

fn formula_from_sexpr(e: &SExpr, sig: &Signature) -> Result<Formula, String> {
    let items = match e {
        SExpr::Atom(a) => return Err(format!("expected a formula, got atom '{a}'")),
        SExpr::List(items) => items,
    };
    let head = items
        .first()
        .and_then(SExpr::as_atom)
        .ok_or("expected a connective or predicate symbol")?;
    let args = &items[1..];
    let expect = |n: usize| -> Result<(), String> {
        if args.len() == n {
            Ok(())
        } else {
            Err(format!("'{head}' expects {n} arguments, got {}", args.len()))
        }
    };
    match head {
        "=" => {
            expect(2)?;
            Ok(Formula::equal(term_from_sexpr(&args[0], sig)?, term_from_sexpr(&args[1], sig)?))
        }
        "not" => {
            expect(1)?;
            Ok(Formula::not(formula_from_sexpr(&args[0], sig)?))
        }
        "and" | "or" | "implies" => {
            expect(2)?;
            let a = formula_from_sexpr(&args[0], sig)?;
            let b = formula_from_sexpr(&args[1], sig)?;
            Ok(match head {
                "and" => Formula::and(a, b),
                "or" => Formula::or(a, b),
                _ => Formula::implies(a, b),
            })
        }
        "forall" | "exists" => {
            expect(2)?;
            let var = args[0]
                .as_atom()
                .and_then(parse_variable)
                .ok_or_else(|| format!("'{head}' expects a variable, e.g. (forall x1 ...)"))?;
            let body = formula_from_sexpr(&args[1], sig)?;
            Ok(if head == "forall" {
                Formula::forall(var, body)
            } else {
                Formula::exists(var, body)
            })
        }
        p => {
            let arity =
                sig.predicate_arity(p).ok_or_else(|| format!("unknown predicate symbol '{p}'"))?;
            let terms: Vec<Term> =
                args.iter().map(|a| term_from_sexpr(a, sig)).collect::<Result<_, _>>()?;
            if terms.len() != arity {
                return Err(format!(
                    "predicate '{p}' expects {arity} arguments, got {}",
                    terms.len()
                ));
            }
            Ok(Formula::atom(p.to_string(), terms))
        }
    }
}

/// Parse a term in prefix notation against a signature.
pub fn parse_term(input: &str, sig: &Signature) -> Result<Term, String> {
    term_from_sexpr(&sexpr::parse_one(input)?, sig)
}

/// Parse a formula in prefix notation against a signature. Sugar connectives
/// `or`, `implies`, `exists` are desugared.
pub fn parse_formula(input: &str, sig: &Signature) -> Result<Formula, String> {
    formula_from_sexpr(&sexpr::parse_one(input)?, sig)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arith() -> Signature {
        Signature::new(
            "arith",
            vec![("lt".into(), 2)],
            vec![("add".into(), 2), ("mul".into(), 2)],
            vec!["zero".into(), "one".into()],
        )
        .unwrap()
    }

    #[test]
    fn parse_display_round_trip() {
        let sig = arith();
        for text in
            ["(= x0 x0)", "(forall x1 (not (= (add x0 x1) x0)))", "(and (= x0 zero) (lt x0 one))"]
        {
            let f = parse_formula(text, &sig).unwrap();
            assert_eq!(f.to_string(), text);
            assert_eq!(parse_formula(&f.to_string(), &sig).unwrap(), f);
        }
    }

    #[test]
    fn sugar_desugars_to_core() {
        let sig = arith();
        let f = parse_formula("(or (= x0 zero) (= x0 one))", &sig).unwrap();
        assert_eq!(f.to_string(), "(not (and (not (= x0 zero)) (not (= x0 one))))");
        let g = parse_formula("(exists x1 (= (mul x1 x1) x0))", &sig).unwrap();
        assert_eq!(g.to_string(), "(not (forall x1 (not (= (mul x1 x1) x0))))");
        let h = parse_formula("(implies (= x0 zero) (= x1 zero))", &sig).unwrap();
        assert_eq!(h.to_string(), "(not (and (= x0 zero) (not (= x1 zero))))");
    }

    #[test]
    fn free_vars_exclude_bound() {
        let sig = arith();
        let f = parse_formula("(forall x5 (lt x2 x5))", &sig).unwrap();
        assert_eq!(f.free_vars(), &[2]);
    }

    #[test]
    fn substitute_direct_replacement() {
        let sig = arith();
        let f = parse_formula("(= x0 x1)", &sig).unwrap();
        let s: Subst = [(0, parse_term("(add x0 x1)", &sig).unwrap()), (1, Term::var(1))]
            .into_iter()
            .collect();
        assert_eq!(f.substitute(&s).to_string(), "(= (add x0 x1) x1)");
    }

    #[test]
    fn substitute_renames_captured_binder() {
        let sig = arith();
        let f = parse_formula("(forall x1 (= x0 x1))", &sig).unwrap();
        let s: Subst = [(0, Term::var(1))].into_iter().collect();
        let out = f.substitute(&s);
        match out.kind() {
            FormulaKind::ForAll(i, body) => {
                assert!(*i >= FRESH_VAR_WATERMARK);
                assert_eq!(body.to_string(), format!("(= x1 x{i})"));
            }
            _ => panic!("expected forall"),
        }

        // Truth is preserved: for every assignment over GF(3), the renamed
        // formula agrees with the original evaluated at x0 := value of x1.
        use crate::eval::{eval_formula, eval_term, Assignment};
        let gf3 = crate::structure::Structure::builder("GF3", Arc::new(arith()))
            .elements(["0", "1", "2"])
            .constant("zero", "0")
            .constant("one", "1")
            .function_by("add", 2, |t| (t[0] + t[1]) % 3)
            .function_by("mul", 2, |t| (t[0] * t[1]) % 3)
            .predicate_rows(
                "lt",
                2,
                vec![
                    vec!["0".into(), "1".into()],
                    vec!["0".into(), "2".into()],
                    vec!["1".into(), "2".into()],
                ],
            )
            .build()
            .unwrap();
        for a in gf3.elements() {
            for b in gf3.elements() {
                let v: Assignment = [(0, a), (1, b)].into_iter().collect();
                let shifted = v.clone().with(0, eval_term(s.get(0).unwrap(), &gf3, &v).unwrap());
                assert_eq!(
                    eval_formula(&out, &gf3, &v).unwrap(),
                    eval_formula(&f, &gf3, &shifted).unwrap(),
                );
            }
        }
    }

    #[test]
    fn substitute_closed_formula_unchanged() {
        let sig = arith();
        let f = parse_formula("(forall x0 (= x0 zero))", &sig).unwrap();
        let s: Subst = [(0, Term::constant("one"))].into_iter().collect();
        let out = f.substitute(&s);
        assert_eq!(out, f);
        assert!(Arc::ptr_eq(&out.0, &f.0));
    }

    #[test]
    fn primitive_formulas() {
        let sig = arith();
        assert!(parse_formula("(= x0 x1)", &sig).unwrap().is_primitive());
        assert!(parse_formula("(lt x0 x3)", &sig).unwrap().is_primitive());
        assert!(!parse_formula("(= (add x0 x1) x1)", &sig).unwrap().is_primitive());
        assert!(!parse_formula("(forall x1 (lt x1 x1))", &sig).unwrap().is_primitive());
        assert!(!parse_formula("(lt (mul x0 x0) x1)", &sig).unwrap().is_primitive());
    }

    #[test]
    fn parse_rejects_unknown_symbols_and_arity() {
        let sig = arith();
        assert!(parse_formula("(= x0 two)", &sig).is_err());
        assert!(parse_formula("(lt x0)", &sig).is_err());
        assert!(parse_formula("(foo x0 x1)", &sig).is_err());
        assert!(parse_term("(add x0)", &sig).is_err());
    }
}
