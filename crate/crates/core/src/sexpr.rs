//! Minimal s-expression reader for the prefix term/formula syntax.

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SExpr {
    Atom(String),
    List(Vec<SExpr>),
}

impl SExpr {
    pub fn as_atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom(a) => Some(a),
            SExpr::List(_) => None,
        }
    }
}

fn tokenize(input: &str) -> Result<Vec<String>, String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in input.chars() {
        match c {
            '(' | ')' => {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
                tokens.push(c.to_string());
            }
            c if c.is_whitespace() => {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
            }
            c if c.is_ascii_graphic() => current.push(c),
            other => return Err(format!("unexpected character '{other}'")),
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    Ok(tokens)
}

fn read(tokens: &[String], pos: &mut usize) -> Result<SExpr, String> {
    match tokens.get(*pos) {
        None => Err("unexpected end of input".into()),
        Some(t) if t == "(" => {
            *pos += 1;
            let mut items = Vec::new();
            loop {
                match tokens.get(*pos) {
                    None => return Err("missing ')'".into()),
                    Some(t) if t == ")" => {
                        *pos += 1;
                        return Ok(SExpr::List(items));
                    }
                    Some(_) => items.push(read(tokens, pos)?),
                }
            }
        }
        Some(t) if t == ")" => Err("unexpected ')'".into()),
        Some(atom) => {
            *pos += 1;
            Ok(SExpr::Atom(atom.clone()))
        }
    }
}

/// Parse exactly one s-expression; trailing input is an error.
pub fn parse_one(input: &str) -> Result<SExpr, String> {
    let tokens = tokenize(input)?;
    if tokens.is_empty() {
        return Err("empty input".into());
    }
    let mut pos = 0;
    let expr = read(&tokens, &mut pos)?;
    if pos != tokens.len() {
        return Err(format!("trailing input after expression: '{}'", tokens[pos]));
    }
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_lists() {
        let e = parse_one("(forall x1 (not (= (add x0 x1) x0)))").unwrap();
        match e {
            SExpr::List(items) => assert_eq!(items.len(), 3),
            _ => panic!("expected list"),
        }
    }

    #[test]
    fn rejects_trailing_and_unbalanced() {
        assert!(parse_one("x0 x1").is_err());
        assert!(parse_one("(add x0").is_err());
        assert!(parse_one(")").is_err());
    }
}
