//! Command-line front end: validate, run, check totality, treeify, compare
//! and export program schemes over finite structures.

mod commands;
mod workspace;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{CounterexampleArgs, TreeifyArgs};
use treeprog_core::treeify::TreeifyLimits;
use workspace::Workspace;

#[derive(Parser)]
#[command(name = "treeprog", version, about = "Program schemes over finite structures")]
struct Cli {
    /// Directory against which all paths (including references inside
    /// documents) are resolved.
    #[arg(long, global = true, default_value = ".")]
    root: String,

    /// Reserved for randomized test tooling; no shipped command consumes
    /// randomness.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Node budget for tree expansion.
    #[arg(long, global = true, default_value_t = 100_000)]
    max_nodes: usize,

    /// Depth budget for tree expansion.
    #[arg(long, global = true, default_value_t = 10_000)]
    max_depth: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ClassOrStructure {
    /// Class manifest file.
    #[arg(long)]
    class: Option<String>,
    /// Single structure file (the singleton class).
    #[arg(long)]
    structure: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate documents (signatures, structures, schemes,
    /// classes, family specs).
    Validate {
        /// Files to validate, resolved against --root.
        paths: Vec<String>,
    },
    /// Run a scheme on one input tuple and print the outcome and trace.
    Run {
        #[arg(long)]
        scheme: String,
        #[arg(long)]
        structure: String,
        /// Comma-separated element names, e.g. `1,1`.
        #[arg(long)]
        input: String,
        /// Also print the symbolic path record (path condition).
        #[arg(long)]
        explain: bool,
    },
    /// Decide whether a scheme is total relative to a class.
    Totality {
        #[arg(long)]
        scheme: String,
        #[command(flatten)]
        over: ClassOrStructure,
        /// Also print the implemented-function table(s) as TSV.
        #[arg(long)]
        table: bool,
    },
    /// Unroll a scheme and prune it against a class into a strongly
    /// equivalent finite tree-scheme.
    Treeify {
        #[arg(long)]
        scheme: String,
        /// Class manifest (or family spec file).
        #[arg(long)]
        class: Option<String>,
        /// Structure family name (currently: cyclic); needs --bound.
        #[arg(long)]
        family: Option<String>,
        /// Number of family members to explore.
        #[arg(long)]
        bound: Option<usize>,
        /// Output scheme file for the result tree.
        #[arg(long)]
        out: Option<String>,
        /// DOT export of the result tree.
        #[arg(long)]
        dot: Option<String>,
        /// Report file (key:value lines).
        #[arg(long)]
        report: Option<String>,
    },
    /// Decide strong equivalence of two schemes relative to a class.
    Equiv {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long)]
        class: String,
    },
    /// Generate the chain scheme of a formula family (the witness that
    /// non-compact classes defeat finite trees).
    Counterexample {
        /// Formula family (currently: distinct).
        #[arg(long, default_value = "distinct")]
        family: String,
        #[arg(long)]
        prefix_len: usize,
        /// Input arity of the generated scheme.
        #[arg(long, default_value_t = 1)]
        arity: usize,
        /// Signature file referenced by the generated scheme.
        #[arg(long)]
        signature: String,
        #[arg(long)]
        out: String,
        #[arg(long)]
        dot: Option<String>,
        /// Treeify the chain once over this class and print the report.
        #[arg(long)]
        class: Option<String>,
        /// Treeify the chain over the growing classes {Z_1..Z_M} for
        /// M = 1..bound and print the leaf counts.
        #[arg(long)]
        bound: Option<usize>,
    },
    /// Render a scheme as a DOT digraph.
    ExportDot {
        #[arg(long)]
        scheme: String,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<String>,
    },
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    let mut ws = Workspace::new(&cli.root);
    let limits = TreeifyLimits { max_nodes: cli.max_nodes, max_depth: cli.max_depth };
    match &cli.command {
        Command::Validate { paths } => commands::command_validate(&mut ws, paths),
        Command::Run { scheme, structure, input, explain } => {
            commands::command_run(&mut ws, scheme, structure, input, *explain)
        }
        Command::Totality { scheme, over, table } => commands::command_totality(
            &mut ws,
            scheme,
            over.class.as_deref(),
            over.structure.as_deref(),
            *table,
        ),
        Command::Treeify { scheme, class, family, bound, out, dot, report } => {
            commands::command_treeify(
                &mut ws,
                TreeifyArgs {
                    scheme,
                    class: class.as_deref(),
                    family: family.as_deref(),
                    bound: *bound,
                    limits,
                    out: out.as_deref(),
                    dot: dot.as_deref(),
                    report: report.as_deref(),
                },
            )
        }
        Command::Equiv { a, b, class } => commands::command_equiv(&mut ws, a, b, class),
        Command::Counterexample {
            family,
            prefix_len,
            arity,
            signature,
            out,
            dot,
            class,
            bound,
        } => commands::command_counterexample(
            &mut ws,
            CounterexampleArgs {
                family,
                prefix_len: *prefix_len,
                arity: *arity,
                signature,
                out,
                dot: dot.as_deref(),
                class: class.as_deref(),
                bound: *bound,
                limits,
            },
        ),
        Command::ExportDot { scheme, out } => {
            commands::command_export_dot(&mut ws, scheme, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
