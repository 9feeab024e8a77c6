//! File loading for the CLI: all paths, including references inside
//! documents (`signature <path>` headers, class manifests), resolve against
//! one root directory. Everything a command touches is parsed and
//! cross-checked before the command logic runs.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};

use treeprog_core::scheme::{parse_scheme, Scheme};
use treeprog_core::signature::{content_lines, parse_signature, Signature};
use treeprog_core::structure::{parse_structure, Structure};

pub struct Workspace {
    root: PathBuf,
    signatures: HashMap<PathBuf, Arc<Signature>>,
}

/// What a document declares itself to be, by its first keyword.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileKind {
    Signature,
    Structure,
    Scheme,
    Class,
    Family,
}

/// A parsed class manifest: structures in manifest order.
pub struct ClassManifest {
    pub name: String,
    pub structures: Vec<Structure>,
}

/// A parsed family spec.
pub struct FamilySpec {
    pub family: String,
    pub bound: usize,
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Workspace { root: root.into(), signatures: HashMap::new() }
    }

    pub fn resolve(&self, path: &str) -> PathBuf {
        let p = Path::new(path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    fn read(&self, path: &str) -> Result<String> {
        let full = self.resolve(path);
        fs::read_to_string(&full).with_context(|| format!("reading {}", full.display()))
    }

    pub fn sniff_kind(&self, path: &str) -> Result<FileKind> {
        let text = self.read(path)?;
        let keyword = content_lines(&text)
            .next()
            .map(|(_, l)| l.split_whitespace().next().unwrap_or("").to_string())
            .unwrap_or_default();
        match keyword.as_str() {
            "signature" => Ok(FileKind::Signature),
            "structure" => Ok(FileKind::Structure),
            "scheme" => Ok(FileKind::Scheme),
            "class" => Ok(FileKind::Class),
            "family" => Ok(FileKind::Family),
            other => bail!("{path}: unrecognized document (first keyword '{other}')"),
        }
    }

    pub fn load_signature(&mut self, path: &str) -> Result<Arc<Signature>> {
        let full = self.resolve(path);
        if let Some(sig) = self.signatures.get(&full) {
            return Ok(sig.clone());
        }
        let text = self.read(path)?;
        let sig = Arc::new(parse_signature(&text).with_context(|| path.to_string())?);
        self.signatures.insert(full, sig.clone());
        Ok(sig)
    }

    pub fn load_structure(&mut self, path: &str) -> Result<Structure> {
        let text = self.read(path)?;
        // Two-phase: closures cannot borrow self mutably inside parse, so
        // collect the signature reference first.
        let sig_ref = structure_signature_ref(&text)
            .ok_or_else(|| anyhow!("{path}: missing 'structure <name> signature <path>' header"))?;
        let sig = self.load_signature(&sig_ref)?;
        parse_structure(&text, |_| Ok(sig.clone())).map_err(|e| anyhow!("{path}: {e}"))
    }

    pub fn load_scheme(&mut self, path: &str) -> Result<Scheme> {
        let text = self.read(path)?;
        let sig_ref = scheme_signature_ref(&text).ok_or_else(|| {
            anyhow!("{path}: missing 'scheme <name> arity <n> signature <path>' header")
        })?;
        let sig = self.load_signature(&sig_ref)?;
        parse_scheme(&text, |_| Ok(sig.clone())).map_err(|e| anyhow!("{path}: {e}"))
    }

    pub fn load_class(&mut self, path: &str) -> Result<ClassManifest> {
        let text = self.read(path)?;
        let mut name = None;
        let mut structures = Vec::new();
        for (line, content) in content_lines(&text) {
            let mut words = content.split_whitespace();
            match words.next().unwrap() {
                "class" => {
                    let rest: Vec<&str> = words.collect();
                    if rest.len() != 1 {
                        bail!("{path}: line {line}: expected: class <name>");
                    }
                    name = Some(rest[0].to_string());
                }
                "structure" => {
                    let rest: Vec<&str> = words.collect();
                    if rest.len() != 1 {
                        bail!("{path}: line {line}: expected: structure <path>");
                    }
                    structures.push(self.load_structure(rest[0])?);
                }
                other => {
                    bail!("{path}: line {line}: unexpected keyword '{other}' in class manifest")
                }
            }
        }
        let name = name.ok_or_else(|| anyhow!("{path}: missing 'class <name>' header"))?;
        if structures.is_empty() {
            bail!("{path}: class '{name}' lists no structures");
        }
        Ok(ClassManifest { name, structures })
    }

    pub fn load_family(&mut self, path: &str) -> Result<FamilySpec> {
        let text = self.read(path)?;
        let mut lines = content_lines(&text);
        let (line, content) = lines.next().ok_or_else(|| anyhow!("{path}: empty family spec"))?;
        let words: Vec<&str> = content.split_whitespace().collect();
        if words.len() != 4 || words[0] != "family" || words[2] != "max" {
            bail!("{path}: line {line}: expected: family <name> max <bound>");
        }
        let bound: usize = words[3]
            .parse()
            .map_err(|_| anyhow!("{path}: line {line}: bad bound '{}'", words[3]))?;
        if let Some((line, _)) = lines.next() {
            bail!("{path}: line {line}: unexpected content after family spec");
        }
        Ok(FamilySpec { family: words[1].to_string(), bound })
    }

    pub fn write(&self, path: &str, contents: &str) -> Result<()> {
        let full = self.resolve(path);
        if let Some(dir) = full.parent() {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        fs::write(&full, contents).with_context(|| format!("writing {}", full.display()))
    }
}

fn header_field(text: &str, head: &str, key: &str) -> Option<String> {
    for (_, content) in content_lines(text) {
        let words: Vec<&str> = content.split_whitespace().collect();
        if words.first() == Some(&head) {
            return words
                .iter()
                .position(|w| *w == key)
                .and_then(|i| words.get(i + 1))
                .map(|s| s.to_string());
        }
    }
    None
}

fn structure_signature_ref(text: &str) -> Option<String> {
    header_field(text, "structure", "signature")
}

fn scheme_signature_ref(text: &str) -> Option<String> {
    header_field(text, "scheme", "signature")
}
