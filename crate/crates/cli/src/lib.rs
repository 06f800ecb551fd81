//! The `onto` command-line tool.
//!
//! Exit codes: 0 on success, 1 when error diagnostics were emitted, 2 on
//! usage, parse, input/output or request failures. Machine output goes to
//! standard output (or `--output`), messages to standard error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value as Json};

use onto_core::diagnostic::{has_errors, Diagnostic};
use onto_core::json::{model_value, plan_value, to_json_bytes};
use onto_core::model::{Direction, Model, Multiplicity, SpaceKind};
use onto_core::world::{self, FinderError, Goal, Scope, SearchLimits, Value};
use onto_core::{
    apply_plan, check, compare, derive_material_cardinalities, lint, load_json, parse_bytes,
    to_dsl, unpack_comparative, unpack_material, InteropError,
};

#[derive(Parser, Debug)]
#[command(name = "onto", version, about = "Check, unpack, simulate and compare conceptual models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Dot,
    Text,
}

#[derive(Args, Debug)]
struct Output {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write to this file instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScopeArgs {
    /// Individual counts, e.g. `Person=2,Treatment=3`. Repeatable.
    #[arg(long = "scope", value_name = "NAME=INT{,NAME=INT}")]
    scope: Vec<String>,
    /// Count for identity-providing types not named in `--scope`.
    #[arg(long, value_name = "INT")]
    scope_default: Option<usize>,
    /// Values to try for a quality, e.g. `Severity={0,1,2}`. Repeatable.
    #[arg(long = "quality-values", value_name = "NAME={V,..}")]
    quality_values: Vec<String>,
    /// Maximum number of worlds to report.
    #[arg(long, value_name = "INT")]
    limit: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a model and print it as JSON (or DSL text).
    Parse {
        input: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Run the well-formedness rules.
    Check {
        input: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Rewrite a relation into its relator or quality-grounded form.
    Unpack {
        input: PathBuf,
        /// The relation to rewrite.
        #[arg(long)]
        relation: String,
        /// Name of the new relator (material rewrite).
        #[arg(long)]
        relator: Option<String>,
        /// Role names for the source and target ends (material rewrite).
        #[arg(long, value_name = "SOURCE,TARGET")]
        roles: Option<String>,
        /// Mediated instances per relator for a role, e.g. `Patient=1..1`.
        #[arg(long, value_name = "ROLE=CARD")]
        mediated: Vec<String>,
        /// Relators per instance of a role, e.g. `Patient=1..*`.
        #[arg(long, value_name = "ROLE=CARD")]
        relators_per: Vec<String>,
        /// Quality grounding the relation (comparative rewrite).
        #[arg(long)]
        quality: Option<String>,
        /// Quality space, `LO..HI` or `{a,b}` (comparative rewrite).
        #[arg(long)]
        space: Option<String>,
        /// Ordering direction (comparative rewrite).
        #[arg(long, default_value = "desc")]
        direction: String,
        #[command(flatten)]
        out: Output,
    },
    /// Multiplicities entailed for the material relation of a relator.
    DeriveCards {
        input: PathBuf,
        #[arg(long)]
        relator: String,
        #[command(flatten)]
        out: Output,
    },
    /// Enumerate worlds, search for a goal witness or check meta-properties.
    Simulate {
        input: PathBuf,
        #[command(flatten)]
        scope: ScopeArgs,
        /// Goal such as `t:Treatment, x:Patient, participatesPatient(t,x)`.
        #[arg(long, conflicts_with = "metaproperties")]
        goal: Option<String>,
        /// Comparative relation whose meta-properties to brute-force.
        #[arg(long, value_name = "RELATION")]
        metaproperties: Option<String>,
        #[command(flatten)]
        out: Output,
    },
    /// Detect anti-patterns, with witness worlds.
    Lint {
        input: PathBuf,
        #[command(flatten)]
        scope: ScopeArgs,
        #[command(flatten)]
        out: Output,
    },
    /// Classify correspondences between the types of two models.
    Diff {
        left: PathBuf,
        right: PathBuf,
        /// Explicit pair `LEFT=RIGHT`; defaults to all shared names. Repeatable.
        #[arg(long = "pair", value_name = "LEFT=RIGHT")]
        pairs: Vec<String>,
        #[command(flatten)]
        out: Output,
    },
}

/// A failure mapped to exit code 2.
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

struct Emitted {
    body: Vec<u8>,
    code: i32,
}

impl Emitted {
    fn ok(body: Vec<u8>) -> Self {
        Emitted { body, code: 0 }
    }

    fn json(value: &Json) -> Self {
        Emitted::ok(to_json_bytes(value))
    }
}

fn load(path: &Path) -> Result<Model, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    let name = path.to_string_lossy();
    if name.ends_with(".json") {
        load_json(&bytes).map_err(|e| Failure(format!("{name}:{}: {}", e.span, e.message)))
    } else {
        parse_bytes(&bytes).map_err(|errs| {
            Failure(
                errs.iter()
                    .map(|e| format!("{name}:{}: {}", e.span, e.message))
                    .collect::<Vec<_>>()
                    .join("\n"),
            )
        })
    }
}

fn require_format(out: &Output, allowed: &[Format], command: &str) -> Result<(), Failure> {
    if allowed.contains(&out.format) {
        Ok(())
    } else {
        Err(Failure(format!(
            "--format {:?} is not available for `{command}`",
            out.format
        )
        .to_lowercase()))
    }
}

fn diagnostics_text(path: &Path, diags: &[Diagnostic]) -> Vec<u8> {
    let mut s = String::new();
    for d in diags {
        s.push_str(&format!("{}:{d}\n", path.display()));
    }
    s.into_bytes()
}

fn emit_diagnostics(path: &Path, diags: &[Diagnostic], format: Format) -> Emitted {
    let body = match format {
        Format::Text => diagnostics_text(path, diags),
        _ => to_json_bytes(&serde_json::to_value(diags).expect("diagnostics serialize")),
    };
    Emitted {
        body,
        code: i32::from(has_errors(diags)),
    }
}

/// Splits on commas outside braces.
fn split_top(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '{' => depth += 1,
            '}' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts.into_iter().map(str::trim).filter(|p| !p.is_empty()).collect()
}

fn build_scope(args: &ScopeArgs) -> Result<Scope, Failure> {
    let mut scope = Scope::default();
    if let Some(n) = args.scope_default {
        scope.default_count = n;
    }
    if let Some(n) = args.limit {
        scope.world_limit = n;
    }
    for spec in &args.scope {
        for item in split_top(spec) {
            let (name, n) = item
                .split_once('=')
                .ok_or_else(|| Failure(format!("bad scope entry `{item}`, expected NAME=INT")))?;
            let n: usize = n
                .trim()
                .parse()
                .map_err(|_| Failure(format!("bad count in scope entry `{item}`")))?;
            scope.per_classifier.insert(name.trim().to_string(), n);
        }
    }
    for spec in &args.quality_values {
        for item in split_top(spec) {
            let (name, vs) = item
                .split_once('=')
                .ok_or_else(|| Failure(format!("bad quality values `{item}`, expected NAME={{V,..}}")))?;
            let vs = vs.trim().trim_start_matches('{').trim_end_matches('}');
            let values: Vec<Value> = vs
                .split(',')
                .map(str::trim)
                .filter(|v| !v.is_empty())
                .map(Value::parse)
                .collect();
            if values.is_empty() {
                return Err(Failure(format!("no values given for `{name}`")));
            }
            scope.quality_values.insert(name.trim().to_string(), values);
        }
    }
    Ok(scope)
}

fn parse_assignment(s: &str) -> Result<(String, Multiplicity), Failure> {
    let (role, card) = s
        .split_once('=')
        .ok_or_else(|| Failure(format!("bad `{s}`, expected ROLE=CARD")))?;
    let m = Multiplicity::parse(card).ok_or_else(|| Failure(format!("bad multiplicity `{card}`")))?;
    Ok((role.trim().to_string(), m))
}

fn parse_space(s: &str) -> Result<SpaceKind, Failure> {
    let s = s.trim();
    if let Some(inner) = s.strip_prefix('{').and_then(|r| r.strip_suffix('}')) {
        return Ok(SpaceKind::Nominal(
            inner.split(',').map(|l| l.trim().to_string()).collect(),
        ));
    }
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| Failure(format!("bad space `{s}`, expected LO..HI or {{a,b}}")))?;
    let bad = || Failure(format!("bad space `{s}`"));
    let lo: i64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: i64 = hi.trim().parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(bad());
    }
    Ok(SpaceKind::Ordered { lo, hi })
}

fn finder_failure(e: FinderError, path: &Path, format: Format) -> Result<Emitted, Failure> {
    match e {
        FinderError::IllFormedModel(diags) => {
            let format = if format == Format::Dot { Format::Json } else { format };
            Ok(emit_diagnostics(path, &diags, format))
        }
        other => Err(Failure(other.to_string())),
    }
}

fn execute(command: Command) -> Result<(Emitted, Option<PathBuf>), Failure> {
    let (emitted, out) = match command {
        Command::Parse { input, out } => {
            require_format(&out, &[Format::Json, Format::Text], "parse")?;
            let model = load(&input)?;
            let body = match out.format {
                Format::Text => to_dsl(&model).into_bytes(),
                _ => to_json_bytes(&model_value(&model)),
            };
            (Emitted::ok(body), out)
        }
        Command::Check { input, out } => {
            require_format(&out, &[Format::Json, Format::Text], "check")?;
            let model = load(&input)?;
            (emit_diagnostics(&input, &check(&model), out.format), out)
        }
        Command::Unpack {
            input,
            relation,
            relator,
            roles,
            mediated,
            relators_per,
            quality,
            space,
            direction,
            out,
        } => {
            require_format(&out, &[Format::Json, Format::Text], "unpack")?;
            let model = load(&input)?;
            let plan = if let Some(quality) = quality {
                if relator.is_some() || roles.is_some() || !mediated.is_empty() {
                    return Err(Failure(
                        "--quality cannot be combined with --relator, --roles or --mediated".into(),
                    ));
                }
                let space = parse_space(space.as_deref().unwrap_or("0..100"))?;
                let direction = Direction::from_keyword(&direction)
                    .ok_or_else(|| Failure(format!("unknown direction `{direction}`")))?;
                unpack_comparative(&model, &relation, &quality, space, direction)?
            } else {
                let relator = relator
                    .ok_or_else(|| Failure("--relator is required without --quality".into()))?;
                let roles = roles.ok_or_else(|| Failure("--roles is required without --quality".into()))?;
                let (a, b) = roles
                    .split_once(',')
                    .ok_or_else(|| Failure("--roles expects SOURCE,TARGET".into()))?;
                let mut plan = unpack_material(&model, &relation, &relator, (a.trim(), b.trim()))?;
                for m in &mediated {
                    let (role, mult) = parse_assignment(m)?;
                    plan = plan.with_mediated(&role, mult)?;
                }
                for m in &relators_per {
                    let (role, mult) = parse_assignment(m)?;
                    plan = plan.with_relators_per(&role, mult)?;
                }
                plan
            };
            let result = apply_plan(&model, &plan)?;
            let body = match out.format {
                Format::Text => to_dsl(&result).into_bytes(),
                _ => to_json_bytes(&json!({
                    "plan": plan_value(&plan),
                    "model": model_value(&result),
                })),
            };
            (Emitted::ok(body), out)
        }
        Command::DeriveCards { input, relator, out } => {
            require_format(&out, &[Format::Json, Format::Text], "derive-cards")?;
            let model = load(&input)?;
            let c = derive_material_cardinalities(&model, &relator)?;
            let body = match out.format {
                Format::Text => format!(
                    "{} {} -- {} {} (per tuple {})\n",
                    c.end_a.ty, c.end_a.multiplicity, c.end_b.multiplicity, c.end_b.ty, c.per_tuple
                )
                .into_bytes(),
                _ => to_json_bytes(&serde_json::to_value(&c)?),
            };
            (Emitted::ok(body), out)
        }
        Command::Simulate {
            input,
            scope,
            goal,
            metaproperties,
            out,
        } => {
            let model = load(&input)?;
            let scope = build_scope(&scope)?;
            let emitted = if let Some(relation) = metaproperties {
                require_format(&out, &[Format::Json], "simulate --metaproperties")?;
                match world::check_metaproperties(&model, &relation, &scope) {
                    Ok(report) => Emitted::json(&serde_json::to_value(&report)?),
                    Err(e) => finder_failure(e, &input, out.format)?,
                }
            } else if let Some(goal) = goal {
                require_format(&out, &[Format::Json, Format::Dot], "simulate --goal")?;
                let goal = Goal::parse(&goal)?;
                match world::find_witness(&model, &scope, &goal) {
                    Ok(w) => match out.format {
                        Format::Dot => Emitted::ok(match &w {
                            Some(w) => world::world_to_dot(&model, w, "witness"),
                            None => world::worlds_to_dot(&model, &[]),
                        }
                        .into_bytes()),
                        _ => Emitted::json(&json!({
                            "goal": goal.to_string(),
                            "witness": w,
                        })),
                    },
                    Err(e) => finder_failure(e, &input, out.format)?,
                }
            } else {
                require_format(&out, &[Format::Json, Format::Dot], "simulate")?;
                match world::all_worlds(&model, &scope, SearchLimits::default()) {
                    Ok(mut ws) => {
                        let total = ws.len();
                        ws.truncate(scope.world_limit);
                        match out.format {
                            Format::Dot => Emitted::ok(world::worlds_to_dot(&model, &ws).into_bytes()),
                            _ => Emitted::json(&json!({
                                "total": total,
                                "exhaustive": total <= scope.world_limit,
                                "worlds": ws,
                            })),
                        }
                    }
                    Err(e) => finder_failure(e, &input, out.format)?,
                }
            };
            (emitted, out)
        }
        Command::Lint { input, scope, out } => {
            let model = load(&input)?;
            let scope = build_scope(&scope)?;
            let emitted = match lint(&model, &scope) {
                Ok(diags) => match out.format {
                    Format::Dot => {
                        let mut dot = String::new();
                        let mut n = 0;
                        for d in &diags {
                            if let Some(w) = &d.witness {
                                let name = format!("{}_{n}", d.rule_id);
                                let graph = world::world_to_dot(&model, w, &name);
                                // Keep one legend line for the whole file.
                                let graph = if n == 0 {
                                    graph
                                } else {
                                    graph.split_once('\n').map(|(_, g)| g.to_string()).unwrap_or(graph)
                                };
                                dot.push_str(&graph);
                                n += 1;
                            }
                        }
                        if n == 0 {
                            dot = world::worlds_to_dot(&model, &[]);
                        }
                        Emitted::ok(dot.into_bytes())
                    }
                    f => emit_diagnostics(&input, &diags, f),
                },
                Err(e) => finder_failure(e, &input, out.format)?,
            };
            (emitted, out)
        }
        Command::Diff {
            left,
            right,
            pairs,
            out,
        } => {
            require_format(&out, &[Format::Json, Format::Text], "diff")?;
            let lm = load(&left)?;
            let rm = load(&right)?;
            let pairs: Option<Vec<(String, String)>> = if pairs.is_empty() {
                None
            } else {
                Some(
                    pairs
                        .iter()
                        .map(|p| {
                            p.split_once('=')
                                .map(|(l, r)| (l.trim().to_string(), r.trim().to_string()))
                                .ok_or_else(|| Failure(format!("bad pair `{p}`, expected LEFT=RIGHT")))
                        })
                        .collect::<Result<_, _>>()?,
                )
            };
            let emitted = match compare(&lm, &rm, pairs.as_deref()) {
                Ok(cs) => match out.format {
                    Format::Text => {
                        let mut s = String::new();
                        for c in &cs {
                            let alts: Vec<String> =
                                c.alternatives.iter().map(|a| format!("{a:?}")).collect();
                            s.push_str(&format!(
                                "{} ~ {}: {:?} [{}]: {}\n",
                                c.left.classifier,
                                c.right.classifier,
                                c.verdict,
                                alts.join(", "),
                                c.rationale
                            ));
                        }
                        Emitted::ok(s.into_bytes())
                    }
                    _ => Emitted::json(&serde_json::to_value(&cs)?),
                },
                Err(InteropError::IllFormedModel { side, diagnostics }) => {
                    let path = if side == "left" { &left } else { &right };
                    emit_diagnostics(path, &diagnostics, out.format)
                }
                Err(e) => return Err(e.into()),
            };
            (emitted, out)
        }
    };
    Ok((emitted, out.output))
}

/// Runs the tool with `args` (including the program name) and returns the
/// exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command) {
        Ok((emitted, path)) => {
            let written = match path {
                Some(p) => fs::write(&p, &emitted.body).map_err(|e| format!("{}: {e}", p.display())),
                None => stdout.write_all(&emitted.body).map_err(|e| e.to_string()),
            };
            match written {
                Ok(()) => emitted.code,
                Err(e) => {
                    let _ = writeln!(stderr, "error: {e}");
                    2
                }
            }
        }
        Err(Failure(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            2
        }
    }
}
