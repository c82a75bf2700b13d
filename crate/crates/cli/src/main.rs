use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use borel_core::dsl::{
    self, parse_func, parse_rational_lit, parse_set, parse_target, Command, Item, RunConfig, Script, SetDef, Source,
    SplitItem, Subspace,
};
use borel_core::oracle::Check;
use borel_core::report::{exit_code, Report};
use clap::{Args, Parser, Subcommand};

/// Symbolic constructions on functional Borel classes.
///
/// Reports go to stdout as newline-delimited JSON (or tables with
/// --pretty). Exit status: 0 all checks passed, 1 a check failed,
/// 2 usage or parse error.
#[derive(Parser, Debug)]
#[command(name = "borel", version)]
struct Cli {
    /// Write newline-delimited JSON reports (the default).
    #[arg(long, global = true, conflicts_with = "pretty")]
    json: bool,
    /// Write human-readable tables instead of JSON.
    #[arg(long, global = true)]
    pretty: bool,
    /// Seed of the sampling generator.
    #[arg(long, global = true, env = "BOREL_SEED", default_value_t = 0)]
    seed: u64,
    /// Sample points per check.
    #[arg(long, global = true, env = "BOREL_SAMPLES", default_value_t = 1000)]
    samples: usize,
    /// Truncation bound for enumerations.
    #[arg(long, global = true, env = "BOREL_NMAX", default_value_t = 64)]
    nmax: usize,
    /// Also write the reports as a JSON document to this file.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug)]
struct Decls {
    /// Script whose declarations (spaces, sets, functions, contexts) are
    /// loaded; its commands are ignored.
    script: Option<PathBuf>,
    /// Space to sample, by name (defaults to the last declared one).
    #[arg(long)]
    space: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Run every command of a script.
    Run { script: PathBuf },
    /// Report the class of a set expression.
    Classify {
        #[command(flatten)]
        decls: Decls,
        #[arg(long)]
        set: String,
    },
    /// Disjointify ambiguous sets.
    Disjointify {
        #[command(flatten)]
        decls: Decls,
        /// Set expressions, separated by `;`.
        #[arg(long, value_delimiter = ';', required = true)]
        sets: Vec<String>,
        #[arg(long)]
        alpha: u32,
    },
    /// Refine a cover by additive sets into an ambiguous partition.
    Refine {
        #[command(flatten)]
        decls: Decls,
        #[arg(long, value_delimiter = ';', required = true)]
        sets: Vec<String>,
        #[arg(long)]
        alpha: u32,
    },
    /// Build a function equal to 0 on A and 1 on B.
    Separate {
        #[command(flatten)]
        decls: Decls,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long)]
        alpha: u32,
    },
    /// Insert a set between A and the complement of B.
    Insert {
        #[command(flatten)]
        decls: Decls,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long)]
        alpha: u32,
    },
    /// Build a function whose zero set is exactly the given set.
    Zeroset {
        #[command(flatten)]
        decls: Decls,
        #[arg(long)]
        set: String,
        #[arg(long)]
        alpha: u32,
    },
    /// Split the enumerated rationals (or given closed pieces) of a subspace.
    Split {
        #[command(flatten)]
        decls: Decls,
        /// Carrier of the subspace.
        #[arg(long, default_value = "rationals")]
        from: String,
        /// Extra closed nowhere dense pieces, separated by `;`.
        #[arg(long, value_delimiter = ';')]
        sets: Vec<String>,
        /// Number of enumerated rational singletons (defaults to --nmax).
        #[arg(long)]
        rationals: Option<usize>,
        #[arg(long)]
        k: usize,
    },
    /// Extend a function from a subspace to the whole space.
    Extend {
        #[command(flatten)]
        decls: Decls,
        /// Function expression.
        #[arg(long)]
        func: String,
        /// Carrier of the subspace (a set expression) or a context name.
        #[arg(long)]
        from: String,
        #[arg(long)]
        alpha: Option<u32>,
        #[arg(long)]
        stages: usize,
        /// Tolerance as `p/q`.
        #[arg(long)]
        tol: String,
        /// `real`, `interval c d`, `cantor` or `finite k`.
        #[arg(long, num_args = 1..=3, default_value = "real")]
        target: Vec<String>,
    },
    /// Exhaustive checks over all topologies on n points.
    Oracle {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        check: Check,
    },
}

struct Usage(String);

impl<E: std::fmt::Display> From<E> for Usage {
    fn from(e: E) -> Self {
        Usage(e.to_string())
    }
}

fn load(path: &Option<PathBuf>) -> Result<Script, Usage> {
    let Some(p) = path else { return Ok(Script::default()) };
    let src = fs::read_to_string(p).map_err(|e| Usage(format!("{}: {e}", p.display())))?;
    let script = dsl::parse(&src).map_err(|e| Usage(format!("{}:{e}", p.display())))?;
    let mut decls = Script::default();
    for (item, pos) in script.items.into_iter().zip(script.positions) {
        if !matches!(item, Item::Command(_)) {
            decls.items.push(item);
            decls.positions.push(pos);
        }
    }
    Ok(decls)
}

fn sets(xs: &[String]) -> Result<Vec<SetDef>, Usage> {
    xs.iter().filter(|s| !s.trim().is_empty()).map(|s| Ok(parse_set(s)?)).collect()
}

/// The space named by `--space`, else the last declared one, else `X`
/// bound to the unit interval.
fn space_name(script: &mut Script, decls: &Decls) -> String {
    if let Some(s) = &decls.space {
        return s.clone();
    }
    let last = script.items.iter().rev().find_map(|i| match i {
        Item::Space { name, .. } => Some(name.clone()),
        _ => None,
    });
    last.unwrap_or_else(|| {
        script.push(Item::Space { name: "X".into(), def: dsl::SpaceDef::Unit });
        "X".into()
    })
}

fn build(cmd: Cmd, nmax: usize) -> Result<Script, Usage> {
    let (mut script, command) = match cmd {
        Cmd::Run { script } => {
            let src = fs::read_to_string(&script).map_err(|e| Usage(format!("{}: {e}", script.display())))?;
            return dsl::parse(&src).map_err(|e| Usage(format!("{}:{e}", script.display())));
        }
        Cmd::Classify { decls, set } => (load(&decls.script)?, Command::Classify(parse_set(&set)?)),
        Cmd::Disjointify { decls, sets: xs, alpha } => {
            (load(&decls.script)?, Command::Disjointify { sets: sets(&xs)?, alpha, space: decls.space })
        }
        Cmd::Refine { decls, sets: xs, alpha } => {
            (load(&decls.script)?, Command::Refine { sets: sets(&xs)?, alpha, space: decls.space })
        }
        Cmd::Separate { decls, a, b, alpha } => {
            (load(&decls.script)?, Command::Separate { a: parse_set(&a)?, b: parse_set(&b)?, alpha, space: decls.space })
        }
        Cmd::Insert { decls, a, b, alpha } => {
            (load(&decls.script)?, Command::Insert { a: parse_set(&a)?, b: parse_set(&b)?, alpha, space: decls.space })
        }
        Cmd::Zeroset { decls, set, alpha } => {
            (load(&decls.script)?, Command::Zeroset { set: parse_set(&set)?, alpha, space: decls.space })
        }
        Cmd::Split { decls, from, sets: xs, rationals, k } => {
            let mut script = load(&decls.script)?;
            let space = space_name(&mut script, &decls);
            let mut items = vec![SplitItem::RationalPoints(rationals.unwrap_or(nmax))];
            items.extend(sets(&xs)?.into_iter().map(SplitItem::Set));
            let sub = Subspace { carrier: parse_set(&from)?, space };
            (script, Command::Split { items, sub, k })
        }
        Cmd::Extend { decls, func, from, alpha, stages, tol, target } => {
            let mut script = load(&decls.script)?;
            let is_context = script.items.iter().any(|i| matches!(i, Item::Context { name, .. } if *name == from));
            let from = if is_context && alpha.is_none() {
                Source::Context(from)
            } else {
                let alpha = alpha.ok_or_else(|| Usage("--alpha is required unless --from names a context".into()))?;
                let space = space_name(&mut script, &decls);
                Source::Subspace { sub: Subspace { carrier: parse_set(&from)?, space }, alpha }
            };
            let command = Command::Extend {
                f: parse_func(&func)?,
                from,
                stages,
                tol: parse_rational_lit(&tol)?,
                target: Some(parse_target(&target.join(" "))?),
            };
            (script, command)
        }
        Cmd::Oracle { n, check } => (Script::default(), Command::Oracle { n, check }),
    };
    script.push(Item::Command(command));
    Ok(script)
}

fn emit(reports: &[Report], pretty: bool) -> String {
    let mut out = String::new();
    for r in reports {
        if pretty {
            out.push_str(&r.pretty());
        } else {
            out.push_str(&r.to_line());
            out.push('\n');
        }
    }
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = RunConfig { seed: cli.seed, samples: cli.samples, nmax: cli.nmax, ..RunConfig::default() };
    let script = match build(cli.cmd, cli.nmax) {
        Ok(s) => s,
        Err(Usage(msg)) => {
            eprintln!("borel: {msg}");
            return ExitCode::from(2);
        }
    };
    let reports = dsl::run(&script, &cfg);
    print!("{}", emit(&reports, cli.pretty && !cli.json));
    if let Some(path) = &cli.report {
        let doc = match reports.as_slice() {
            [one] => one.to_json(),
            many => dsl::reports_json(many),
        };
        let text = serde_json::to_string_pretty(&doc).expect("reports serialize") + "\n";
        if let Err(e) = fs::write(path, text) {
            eprintln!("borel: {}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    ExitCode::from(exit_code(&reports) as u8)
}
