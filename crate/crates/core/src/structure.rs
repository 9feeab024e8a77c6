//! Finite structures: a nonempty universe plus interpretation tables.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::signature::{content_lines, parse_sym_arity, valid_token, ParseError, Signature};

/// An element of a structure's universe, by position in universe file order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Elem(pub u32);

impl Elem {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StructureError {
    #[error("universe is empty")]
    EmptyUniverse,
    #[error("duplicate element name '{0}'")]
    DuplicateElement(String),
    #[error("bad element name '{0}'")]
    BadElementName(String),
    #[error("symbol '{0}' is not declared in the signature")]
    UndeclaredSymbol(String),
    #[error("symbol '{symbol}' declared with arity {declared}, interpreted with arity {given}")]
    ArityMismatch { symbol: String, declared: usize, given: usize },
    #[error("symbol '{0}' has no interpretation")]
    MissingInterpretation(String),
    #[error("symbol '{0}' interpreted more than once")]
    DuplicateInterpretation(String),
    #[error("unknown element '{0}'")]
    UnknownElement(String),
    #[error("function '{symbol}' is not total: no value for tuple {tuple}")]
    PartialFunction { symbol: String, tuple: String },
    #[error("function '{symbol}' maps tuple {tuple} twice")]
    DuplicateRow { symbol: String, tuple: String },
}

/// Total function table over `universe^arity`, indexed lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
struct FnTable {
    arity: usize,
    values: Vec<Elem>,
}

/// Characteristic table of a predicate over `universe^arity`.
#[derive(Debug, Clone, PartialEq, Eq)]
struct PredTable {
    arity: usize,
    truth: Vec<bool>,
}

/// A finite structure interpreting a signature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Structure {
    name: String,
    signature: Arc<Signature>,
    universe: Vec<String>,
    elem_index: HashMap<String, Elem>,
    constants: BTreeMap<String, Elem>,
    functions: BTreeMap<String, FnTable>,
    predicates: BTreeMap<String, PredTable>,
}

/// Lexicographic position of a tuple in `universe^k` (first component most
/// significant).
fn tuple_index(tuple: &[Elem], size: usize) -> usize {
    tuple.iter().fold(0, |acc, e| acc * size + e.index())
}

/// Iterator over all tuples of the given arity in lexicographic order.
pub struct Tuples {
    size: usize,
    arity: usize,
    next: Option<Vec<Elem>>,
}

impl Iterator for Tuples {
    type Item = Vec<Elem>;

    fn next(&mut self) -> Option<Vec<Elem>> {
        let current = self.next.clone()?;
        // Advance like an odometer, most significant digit first.
        let mut t = current.clone();
        let mut pos = self.arity;
        loop {
            if pos == 0 {
                self.next = None;
                break;
            }
            pos -= 1;
            if t[pos].index() + 1 < self.size {
                t[pos] = Elem(t[pos].0 + 1);
                for slot in t.iter_mut().skip(pos + 1) {
                    *slot = Elem(0);
                }
                self.next = Some(t);
                break;
            }
        }
        Some(current)
    }
}

/// Function rows as written in a structure file: tuple names and a value.
pub type FnRows = Vec<(Vec<String>, String)>;

pub struct StructureBuilder {
    name: String,
    signature: Arc<Signature>,
    universe: Vec<String>,
    constants: Vec<(String, String)>,
    functions: Vec<(String, usize, FnRows)>,
    predicates: Vec<(String, usize, Vec<Vec<String>>)>,
}

impl StructureBuilder {
    pub fn new(name: impl Into<String>, signature: Arc<Signature>) -> Self {
        StructureBuilder {
            name: name.into(),
            signature,
            universe: Vec::new(),
            constants: Vec::new(),
            functions: Vec::new(),
            predicates: Vec::new(),
        }
    }

    pub fn elements<I: IntoIterator<Item = S>, S: Into<String>>(mut self, names: I) -> Self {
        self.universe.extend(names.into_iter().map(Into::into));
        self
    }

    pub fn constant(mut self, symbol: impl Into<String>, element: impl Into<String>) -> Self {
        self.constants.push((symbol.into(), element.into()));
        self
    }

    pub fn function_rows(mut self, symbol: impl Into<String>, arity: usize, rows: FnRows) -> Self {
        self.functions.push((symbol.into(), arity, rows));
        self
    }

    /// Define a function by computing each row from tuple indices.
    pub fn function_by(
        self,
        symbol: impl Into<String>,
        arity: usize,
        f: impl Fn(&[usize]) -> usize,
    ) -> Self {
        let names = self.universe.clone();
        let mut rows = Vec::new();
        let mut stack = vec![Vec::<usize>::new()];
        while let Some(t) = stack.pop() {
            if t.len() == arity {
                let value = f(&t);
                rows.push((t.iter().map(|i| names[*i].clone()).collect(), names[value].clone()));
            } else {
                for i in (0..names.len()).rev() {
                    let mut next = t.clone();
                    next.push(i);
                    stack.push(next);
                }
            }
        }
        self.function_rows(symbol, arity, rows)
    }

    pub fn predicate_rows(
        mut self,
        symbol: impl Into<String>,
        arity: usize,
        rows: Vec<Vec<String>>,
    ) -> Self {
        self.predicates.push((symbol.into(), arity, rows));
        self
    }

    pub fn build(self) -> Result<Structure, StructureError> {
        if self.universe.is_empty() {
            return Err(StructureError::EmptyUniverse);
        }
        let mut elem_index = HashMap::new();
        for (i, name) in self.universe.iter().enumerate() {
            if !valid_token(name) {
                return Err(StructureError::BadElementName(name.clone()));
            }
            if elem_index.insert(name.clone(), Elem(i as u32)).is_some() {
                return Err(StructureError::DuplicateElement(name.clone()));
            }
        }
        let size = self.universe.len();
        let lookup = |name: &str| -> Result<Elem, StructureError> {
            elem_index
                .get(name)
                .copied()
                .ok_or_else(|| StructureError::UnknownElement(name.to_string()))
        };

        let mut constants = BTreeMap::new();
        for (sym, elem) in self.constants {
            if !self.signature.has_constant(&sym) {
                return Err(StructureError::UndeclaredSymbol(sym));
            }
            let e = lookup(&elem)?;
            if constants.insert(sym.clone(), e).is_some() {
                return Err(StructureError::DuplicateInterpretation(sym));
            }
        }

        let mut functions = BTreeMap::new();
        for (sym, arity, rows) in self.functions {
            let declared = self
                .signature
                .function_arity(&sym)
                .ok_or_else(|| StructureError::UndeclaredSymbol(sym.clone()))?;
            if declared != arity {
                return Err(StructureError::ArityMismatch { symbol: sym, declared, given: arity });
            }
            let total = size.pow(arity as u32);
            let mut values: Vec<Option<Elem>> = vec![None; total];
            for (tuple_names, value_name) in rows {
                if tuple_names.len() != arity {
                    return Err(StructureError::ArityMismatch {
                        symbol: sym,
                        declared: arity,
                        given: tuple_names.len(),
                    });
                }
                let tuple: Vec<Elem> =
                    tuple_names.iter().map(|n| lookup(n)).collect::<Result<_, _>>()?;
                let idx = tuple_index(&tuple, size);
                if values[idx].is_some() {
                    return Err(StructureError::DuplicateRow {
                        symbol: sym,
                        tuple: format!("({})", tuple_names.join(",")),
                    });
                }
                values[idx] = Some(lookup(&value_name)?);
            }
            if let Some(missing) = values.iter().position(|v| v.is_none()) {
                let tuple = decode_tuple(missing, size, arity)
                    .iter()
                    .map(|e| self.universe[e.index()].clone())
                    .collect::<Vec<_>>()
                    .join(",");
                return Err(StructureError::PartialFunction {
                    symbol: sym,
                    tuple: format!("({tuple})"),
                });
            }
            let values = values.into_iter().map(Option::unwrap).collect();
            if functions.insert(sym.clone(), FnTable { arity, values }).is_some() {
                return Err(StructureError::DuplicateInterpretation(sym));
            }
        }

        let mut predicates = BTreeMap::new();
        for (sym, arity, rows) in self.predicates {
            let declared = self
                .signature
                .predicate_arity(&sym)
                .ok_or_else(|| StructureError::UndeclaredSymbol(sym.clone()))?;
            if declared != arity {
                return Err(StructureError::ArityMismatch { symbol: sym, declared, given: arity });
            }
            let mut truth = vec![false; size.pow(arity as u32)];
            for tuple_names in rows {
                if tuple_names.len() != arity {
                    return Err(StructureError::ArityMismatch {
                        symbol: sym,
                        declared: arity,
                        given: tuple_names.len(),
                    });
                }
                let tuple: Vec<Elem> =
                    tuple_names.iter().map(|n| lookup(n)).collect::<Result<_, _>>()?;
                truth[tuple_index(&tuple, size)] = true;
            }
            if predicates.insert(sym.clone(), PredTable { arity, truth }).is_some() {
                return Err(StructureError::DuplicateInterpretation(sym));
            }
        }

        // Every declared symbol needs exactly one interpretation entry.
        for sym in self.signature.constants() {
            if !constants.contains_key(sym) {
                return Err(StructureError::MissingInterpretation(sym.to_string()));
            }
        }
        for (sym, _) in self.signature.functions() {
            if !functions.contains_key(sym) {
                return Err(StructureError::MissingInterpretation(sym.to_string()));
            }
        }
        for (sym, _) in self.signature.predicates() {
            if !predicates.contains_key(sym) {
                return Err(StructureError::MissingInterpretation(sym.to_string()));
            }
        }

        Ok(Structure {
            name: self.name,
            signature: self.signature,
            universe: self.universe,
            elem_index,
            constants,
            functions,
            predicates,
        })
    }
}

fn decode_tuple(mut index: usize, size: usize, arity: usize) -> Vec<Elem> {
    let mut out = vec![Elem(0); arity];
    for slot in out.iter_mut().rev() {
        *slot = Elem((index % size) as u32);
        index /= size;
    }
    out
}

impl Structure {
    pub fn builder(name: impl Into<String>, signature: Arc<Signature>) -> StructureBuilder {
        StructureBuilder::new(name, signature)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.signature
    }

    pub fn size(&self) -> usize {
        self.universe.len()
    }

    pub fn element_name(&self, e: Elem) -> &str {
        &self.universe[e.index()]
    }

    pub fn element(&self, name: &str) -> Option<Elem> {
        self.elem_index.get(name).copied()
    }

    pub fn elements(&self) -> impl Iterator<Item = Elem> + '_ {
        (0..self.universe.len()).map(|i| Elem(i as u32))
    }

    /// All tuples of the given arity, lexicographic in universe file order.
    pub fn tuples(&self, arity: usize) -> Tuples {
        Tuples { size: self.size(), arity, next: Some(vec![Elem(0); arity]) }
    }

    pub fn tuple_names(&self, tuple: &[Elem]) -> Vec<String> {
        tuple.iter().map(|e| self.element_name(*e).to_string()).collect()
    }

    pub fn constant_value(&self, symbol: &str) -> Option<Elem> {
        self.constants.get(symbol).copied()
    }

    pub fn apply_function(&self, symbol: &str, args: &[Elem]) -> Option<Elem> {
        let table = self.functions.get(symbol)?;
        if table.arity != args.len() {
            return None;
        }
        Some(table.values[tuple_index(args, self.size())])
    }

    pub fn test_predicate(&self, symbol: &str, args: &[Elem]) -> Option<bool> {
        let table = self.predicates.get(symbol)?;
        if table.arity != args.len() {
            return None;
        }
        Some(table.truth[tuple_index(args, self.size())])
    }
}

impl fmt::Display for Structure {
    /// The structure file format. The signature reference is emitted as
    /// `signature <name>.sig`; loaders resolve it against their root.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "structure {} signature {}.sig", self.name, self.signature.name())?;
        writeln!(f, "universe {}", self.universe.join(" "))?;
        for (sym, e) in &self.constants {
            writeln!(f, "constant {sym} -> {}", self.element_name(*e))?;
        }
        for (sym, table) in &self.functions {
            writeln!(f, "function {sym}/{}", table.arity)?;
            for (i, value) in table.values.iter().enumerate() {
                let tuple = decode_tuple(i, self.size(), table.arity);
                writeln!(
                    f,
                    "({}) -> {}",
                    self.tuple_names(&tuple).join(","),
                    self.element_name(*value)
                )?;
            }
        }
        for (sym, table) in &self.predicates {
            writeln!(f, "predicate {sym}/{}", table.arity)?;
            for (i, truth) in table.truth.iter().enumerate() {
                if *truth {
                    let tuple = decode_tuple(i, self.size(), table.arity);
                    writeln!(f, "({})", self.tuple_names(&tuple).join(","))?;
                }
            }
        }
        Ok(())
    }
}

/// Parse a structure file. The `signature <path>` reference in the header is
/// resolved through the given callback.
pub fn parse_structure(
    text: &str,
    mut resolve_signature: impl FnMut(&str) -> Result<Arc<Signature>, String>,
) -> Result<Structure, ParseError> {
    enum Section {
        None,
        Function(String, usize, Vec<(Vec<String>, String)>),
        Predicate(String, usize, Vec<Vec<String>>),
    }

    let mut header: Option<(String, Arc<Signature>)> = None;
    let mut universe: Vec<String> = Vec::new();
    let mut constants: Vec<(String, String)> = Vec::new();
    let mut functions = Vec::new();
    let mut predicates = Vec::new();
    let mut section = Section::None;
    let mut flush = |section: &mut Section| match std::mem::replace(section, Section::None) {
        Section::None => {}
        Section::Function(sym, ar, rows) => functions.push((sym, ar, rows)),
        Section::Predicate(sym, ar, rows) => predicates.push((sym, ar, rows)),
    };

    for (line, content) in content_lines(text) {
        let mut words = content.split_whitespace();
        let keyword = words.next().unwrap();
        let rest: Vec<&str> = words.collect();
        match keyword {
            "structure" => {
                if header.is_some() {
                    return Err(ParseError::new(line, "duplicate 'structure' header"));
                }
                if rest.len() != 3 || rest[1] != "signature" {
                    return Err(ParseError::new(
                        line,
                        "expected: structure <name> signature <path>",
                    ));
                }
                let sig = resolve_signature(rest[2]).map_err(|e| ParseError::new(line, e))?;
                header = Some((rest[0].to_string(), sig));
            }
            "universe" => {
                flush(&mut section);
                universe.extend(rest.iter().map(|s| s.to_string()));
            }
            "constant" => {
                flush(&mut section);
                if rest.len() != 3 || rest[1] != "->" {
                    return Err(ParseError::new(line, "expected: constant <sym> -> <element>"));
                }
                constants.push((rest[0].to_string(), rest[2].to_string()));
            }
            "function" => {
                flush(&mut section);
                if rest.len() != 1 {
                    return Err(ParseError::new(line, "expected: function <sym>/<arity>"));
                }
                let (sym, ar) = parse_sym_arity(rest[0], line)?;
                section = Section::Function(sym, ar, Vec::new());
            }
            "predicate" => {
                flush(&mut section);
                if rest.len() != 1 {
                    return Err(ParseError::new(line, "expected: predicate <sym>/<arity>"));
                }
                let (sym, ar) = parse_sym_arity(rest[0], line)?;
                section = Section::Predicate(sym, ar, Vec::new());
            }
            row if row.starts_with('(') => {
                let parse_tuple = |t: &str| -> Result<Vec<String>, ParseError> {
                    let inner = t
                        .strip_prefix('(')
                        .and_then(|t| t.strip_suffix(')'))
                        .ok_or_else(|| ParseError::new(line, format!("bad tuple '{t}'")))?;
                    Ok(inner.split(',').map(|s| s.trim().to_string()).collect())
                };
                match &mut section {
                    Section::Function(_, _, rows) => {
                        if rest.len() != 2 || rest[0] != "->" {
                            return Err(ParseError::new(line, "expected: (<tuple>) -> <element>"));
                        }
                        rows.push((parse_tuple(row)?, rest[1].to_string()));
                    }
                    Section::Predicate(_, _, rows) => {
                        if !rest.is_empty() {
                            return Err(ParseError::new(line, "expected: (<tuple>)"));
                        }
                        rows.push(parse_tuple(row)?);
                    }
                    Section::None => {
                        return Err(ParseError::new(
                            line,
                            "table row outside function/predicate section",
                        ));
                    }
                }
            }
            other => {
                return Err(ParseError::new(
                    line,
                    format!("unexpected keyword '{other}' in structure file"),
                ));
            }
        }
    }
    flush(&mut section);

    let (name, signature) = header
        .ok_or_else(|| ParseError::new(1, "missing 'structure <name> signature <path>' header"))?;
    let mut builder = Structure::builder(name, signature).elements(universe);
    for (sym, elem) in constants {
        builder = builder.constant(sym, elem);
    }
    for (sym, ar, rows) in functions {
        builder = builder.function_rows(sym, ar, rows);
    }
    for (sym, ar, rows) in predicates {
        builder = builder.predicate_rows(sym, ar, rows);
    }
    builder.build().map_err(|e| ParseError::new(1, e.to_string()))
}

/// The signature of cyclic groups: a binary `add` and a constant `zero`.
pub fn cyclic_signature() -> Arc<Signature> {
    Arc::new(
        Signature::new("cyclic", vec![], vec![("add".into(), 2)], vec!["zero".into()])
            .expect("cyclic signature is well-formed"),
    )
}

/// The cyclic group Z_k with elements named "0".."k-1".
pub fn cyclic_group(k: usize) -> Result<Structure, StructureError> {
    if k == 0 {
        return Err(StructureError::EmptyUniverse);
    }
    Structure::builder(format!("Z{k}"), cyclic_signature())
        .elements((0..k).map(|i| i.to_string()))
        .constant("zero", "0")
        .function_by("add", 2, |t| (t[0] + t[1]) % k)
        .build()
}
