//! Command implementations and their text renderings.

use std::process::ExitCode;

use anyhow::{anyhow, bail, Result};

use treeprog_core::dot::export_dot;
use treeprog_core::equiv::{same_function, strongly_equivalent, EquivVerdict, FunctionComparison};
use treeprog_core::exec::{
    check_totality_class, implemented_function, run, ClassTotality, Outcome, TraceStep,
};
use treeprog_core::oracle::{distinct_elements_formula, CyclicFamily, PathSatOracle};
use treeprog_core::scheme::Scheme;
use treeprog_core::structure::{Elem, Structure};
use treeprog_core::sym::path_of_run;
use treeprog_core::treeify::{counterexample_scheme, treeify, TreeifyLimits};

use crate::workspace::{FileKind, Workspace};

/// Character budget per printed formula; loop-built path-condition formulas
/// can be exponentially large written out.
const FORMULA_BUDGET: usize = 2048;

pub fn parse_input_tuple(structure: &Structure, scheme: &Scheme, input: &str) -> Result<Vec<Elem>> {
    let names: Vec<&str> = input.split(',').map(str::trim).collect();
    if names.len() != scheme.arity() {
        bail!(
            "input tuple has {} elements, scheme '{}' has arity {}",
            names.len(),
            scheme.name(),
            scheme.arity()
        );
    }
    names
        .iter()
        .map(|n| {
            structure.element(n).ok_or_else(|| {
                anyhow!("'{n}' is not an element of structure '{}'", structure.name())
            })
        })
        .collect()
}

fn render_step(index: usize, scheme: &Scheme, step: &TraceStep) -> String {
    let label = scheme.node(&step.node);
    let edge = match step.edge {
        Some(true) => " -> 1",
        Some(false) => " -> 0",
        None => "",
    };
    format!("  {index} {} {label}{edge}", step.node)
}

fn render_outcome(scheme: &Scheme, outcome: &Outcome) -> String {
    let mut out = String::new();
    match outcome {
        Outcome::Output { value, steps, terminal } => {
            out.push_str(&format!("output {value}\n"));
            out.push_str("trace:\n");
            let mut index = 0;
            for step in steps {
                index += 1;
                out.push_str(&render_step(index, scheme, step));
                out.push('\n');
            }
            index += 1;
            out.push_str(&format!("  {index} {terminal} {}\n", scheme.node(terminal)));
        }
        Outcome::Diverges { prefix, lasso } => {
            out.push_str("diverges\n");
            out.push_str("prefix:\n");
            if prefix.is_empty() {
                out.push_str("  (empty)\n");
            }
            let mut index = 0;
            for step in prefix {
                index += 1;
                out.push_str(&render_step(index, scheme, step));
                out.push('\n');
            }
            out.push_str("lasso (repeats forever):\n");
            for step in lasso {
                index += 1;
                out.push_str(&render_step(index, scheme, step));
                out.push('\n');
            }
        }
    }
    out
}

pub fn command_run(
    ws: &mut Workspace,
    scheme_path: &str,
    structure_path: &str,
    input: &str,
    explain: bool,
) -> Result<ExitCode> {
    let scheme = ws.load_scheme(scheme_path)?;
    let structure = ws.load_structure(structure_path)?;
    let tuple = parse_input_tuple(&structure, &scheme, input)?;
    let outcome = run(&scheme, &structure, &tuple)?;
    print!("{}", render_outcome(&scheme, &outcome));
    if explain {
        let record = path_of_run(&scheme, &structure, &tuple)?;
        println!("path condition:");
        if record.pi.is_empty() {
            println!("  (empty)");
        }
        for (i, f) in record.pi.iter().enumerate() {
            println!("  {} {}", i + 1, f.display_clipped(FORMULA_BUDGET));
        }
        if let Some(start) = record.lasso_start {
            println!("lasso start: step {}", start + 1);
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Load `--class F` or `--structure F` into a class (a single structure is
/// the singleton class).
fn load_target_class(
    ws: &mut Workspace,
    class: Option<&str>,
    structure: Option<&str>,
) -> Result<Vec<Structure>> {
    match (class, structure) {
        (Some(path), None) => Ok(ws.load_class(path)?.structures),
        (None, Some(path)) => Ok(vec![ws.load_structure(path)?]),
        _ => bail!("exactly one of --class or --structure is required"),
    }
}

pub fn command_totality(
    ws: &mut Workspace,
    scheme_path: &str,
    class: Option<&str>,
    structure: Option<&str>,
    table: bool,
) -> Result<ExitCode> {
    let scheme = ws.load_scheme(scheme_path)?;
    let structures = load_target_class(ws, class, structure)?;
    let verdict = check_totality_class(&scheme, &structures)?;
    let code = match &verdict {
        ClassTotality::Total => {
            println!("total");
            ExitCode::SUCCESS
        }
        ClassTotality::NotTotal { structure, witness, outcome } => {
            let named =
                structures.iter().find(|s| s.name() == structure).expect("witness structure");
            println!(
                "not total: structure {}, input ({})",
                structure,
                named.tuple_names(witness).join(",")
            );
            print!("{}", render_outcome(&scheme, outcome));
            ExitCode::from(1)
        }
    };
    if table {
        for structure in &structures {
            println!("function table over {}:", structure.name());
            print!("{}", implemented_function(&scheme, structure)?.to_tsv(structure));
        }
    }
    Ok(code)
}

pub struct TreeifyArgs<'a> {
    pub scheme: &'a str,
    pub class: Option<&'a str>,
    pub family: Option<&'a str>,
    pub bound: Option<usize>,
    pub limits: TreeifyLimits,
    pub out: Option<&'a str>,
    pub dot: Option<&'a str>,
    pub report: Option<&'a str>,
}

fn oracle_for(
    ws: &mut Workspace,
    class: Option<&str>,
    family: Option<&str>,
    bound: Option<usize>,
) -> Result<PathSatOracle> {
    match (class, family) {
        (Some(path), None) => {
            // A class argument may also name a family spec file.
            if ws.sniff_kind(path)? == FileKind::Family {
                let spec = ws.load_family(path)?;
                if spec.family != "cyclic" {
                    bail!("unknown structure family '{}'", spec.family);
                }
                Ok(PathSatOracle::for_family(&CyclicFamily, spec.bound)?)
            } else {
                Ok(PathSatOracle::for_class(ws.load_class(path)?.structures)?)
            }
        }
        (None, Some(name)) => {
            if name != "cyclic" {
                bail!("unknown structure family '{name}'");
            }
            let bound = bound.ok_or_else(|| anyhow!("--family requires --bound"))?;
            Ok(PathSatOracle::for_family(&CyclicFamily, bound)?)
        }
        _ => bail!("exactly one of --class or --family is required"),
    }
}

pub fn command_treeify(ws: &mut Workspace, args: TreeifyArgs<'_>) -> Result<ExitCode> {
    let scheme = ws.load_scheme(args.scheme)?;
    let oracle = oracle_for(ws, args.class, args.family, args.bound)?;
    let report = treeify(&scheme, &oracle, args.limits)?;
    print!("{}", report.render());
    if let Some(path) = args.report {
        ws.write(path, &report.render())?;
    }
    match &report.result {
        Ok(tree) => {
            if let Some(path) = args.out {
                ws.write(path, &tree.to_string())?;
            }
            if let Some(path) = args.dot {
                ws.write(path, &export_dot(tree))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Err(failure) => {
            println!("treeify failed: {failure}");
            if let treeprog_core::treeify::TreeifyFailure::LimitsExceeded { deepest_pi, .. } =
                failure
            {
                if let Some(last) = deepest_pi.last() {
                    println!(
                        "deepest open branch: {} formulas, last {}",
                        deepest_pi.len(),
                        last.display_clipped(FORMULA_BUDGET)
                    );
                }
            }
            Ok(ExitCode::from(1))
        }
    }
}

pub fn command_equiv(
    ws: &mut Workspace,
    left_path: &str,
    right_path: &str,
    class_path: &str,
) -> Result<ExitCode> {
    let left = ws.load_scheme(left_path)?;
    let right = ws.load_scheme(right_path)?;
    let class = ws.load_class(class_path)?.structures;
    match strongly_equivalent(&left, &right, &class)? {
        EquivVerdict::Equivalent => {
            println!("equivalent");
            Ok(ExitCode::SUCCESS)
        }
        EquivVerdict::ArityMismatch { left, right } => {
            println!("not equivalent: arity mismatch ({left} vs {right})");
            Ok(ExitCode::from(1))
        }
        EquivVerdict::NotEquivalent { structure, tuple, position, left: lp, right: rp } => {
            println!(
                "not equivalent: structure {structure}, input ({}), first mismatch at position {position}",
                tuple.join(",")
            );
            let describe = |record: &treeprog_core::sym::PathRecord| match record.lasso_start {
                None => format!(
                    "finite, {} steps, output {}",
                    record.steps.len(),
                    record.terminal_value().map(|v| v.to_string()).unwrap_or_default()
                ),
                Some(start) => format!(
                    "divergent, prefix {} steps, lasso {} steps",
                    start,
                    record.steps.len() - start
                ),
            };
            println!("left path: {}", describe(&lp));
            println!("right path: {}", describe(&rp));
            match same_function(&left, &right, &class)? {
                FunctionComparison::Same => println!("functions agree despite path mismatch"),
                FunctionComparison::Different { structure, tuple, left, right } => println!(
                    "functions differ: structure {structure}, input ({}): {} vs {}",
                    tuple.join(","),
                    left.map(|v| v.to_string()).unwrap_or_else(|| "undefined".into()),
                    right.map(|v| v.to_string()).unwrap_or_else(|| "undefined".into()),
                ),
            }
            Ok(ExitCode::from(1))
        }
    }
}

pub struct CounterexampleArgs<'a> {
    pub family: &'a str,
    pub prefix_len: usize,
    pub arity: usize,
    pub signature: &'a str,
    pub out: &'a str,
    pub dot: Option<&'a str>,
    pub class: Option<&'a str>,
    pub bound: Option<usize>,
    pub limits: TreeifyLimits,
}

pub fn command_counterexample(
    ws: &mut Workspace,
    args: CounterexampleArgs<'_>,
) -> Result<ExitCode> {
    if args.family != "distinct" {
        bail!("unknown formula family '{}' (available: distinct)", args.family);
    }
    let signature = ws.load_signature(args.signature)?;
    let arity = args.arity;
    let chain = counterexample_scheme(
        |k| distinct_elements_formula(k, arity),
        args.prefix_len,
        arity,
        signature,
        format!("chain{}", args.prefix_len),
    )?;
    ws.write(args.out, &chain.to_string())?;
    println!("wrote {}", args.out);
    if let Some(path) = args.dot {
        ws.write(path, &export_dot(&chain))?;
        println!("wrote {path}");
    }

    if let Some(bound) = args.bound {
        // Demonstration: the chain keeps strictly more satisfiable paths as
        // the cyclic class grows, up to its prefix length.
        println!("treeify over growing cyclic classes:");
        for m in 1..=bound {
            let class: Vec<Structure> = (1..=m)
                .map(|k| treeprog_core::structure::cyclic_group(k).map_err(|e| anyhow!("{e}")))
                .collect::<Result<_>>()?;
            let oracle = PathSatOracle::for_class(class)?;
            let report = treeify(&chain, &oracle, args.limits)?;
            let satisfiable = report.leaves - report.completions.len();
            println!("M={m} leaves={} satisfiable_paths={satisfiable}", report.leaves);
        }
    } else if let Some(path) = args.class {
        let oracle = PathSatOracle::for_class(ws.load_class(path)?.structures)?;
        let report = treeify(&chain, &oracle, args.limits)?;
        print!("{}", report.render());
    }
    Ok(ExitCode::SUCCESS)
}

pub fn command_export_dot(
    ws: &mut Workspace,
    scheme_path: &str,
    out: Option<&str>,
) -> Result<ExitCode> {
    let scheme = ws.load_scheme(scheme_path)?;
    let dot = export_dot(&scheme);
    match out {
        Some(path) => {
            ws.write(path, &dot)?;
            println!("wrote {path}");
        }
        None => print!("{dot}"),
    }
    Ok(ExitCode::SUCCESS)
}

pub fn command_validate(ws: &mut Workspace, paths: &[String]) -> Result<ExitCode> {
    if paths.is_empty() {
        bail!("validate requires at least one path");
    }
    let mut failures = 0usize;
    for path in paths {
        let outcome = ws.sniff_kind(path).and_then(|kind| match kind {
            FileKind::Signature => {
                ws.load_signature(path).map(|s| format!("signature {}", s.name()))
            }
            FileKind::Structure => ws
                .load_structure(path)
                .map(|s| format!("structure {}, universe {}", s.name(), s.size())),
            FileKind::Scheme => ws.load_scheme(path).map(|s| {
                format!("scheme {}, arity {}, {} nodes", s.name(), s.arity(), s.node_count())
            }),
            FileKind::Class => ws
                .load_class(path)
                .map(|c| format!("class {}, {} structures", c.name, c.structures.len())),
            FileKind::Family => {
                ws.load_family(path).map(|f| format!("family {}, bound {}", f.family, f.bound))
            }
        });
        match outcome {
            Ok(summary) => println!("ok: {path} ({summary})"),
            Err(err) => {
                println!("error: {err:#}");
                failures += 1;
            }
        }
    }
    if failures > 0 {
        bail!("{failures} of {} files failed validation", paths.len());
    }
    Ok(ExitCode::SUCCESS)
}
