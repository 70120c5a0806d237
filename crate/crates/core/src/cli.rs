//! The `cpl` command line. [`run`] does all the work and returns the output
//! instead of printing it, so tests can drive it directly.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::ast::Scene;
use crate::check::check_scene;
use crate::cycles::{extract_cycles, ProcessGraph};
use crate::diag::Diagnostic;
use crate::forest::build_forest;
use crate::grid::{build_grid, cluster};
use crate::hierarchy::{build_ensemble, build_hierarchy};
use crate::memory::MemoryStore;
use crate::parser::parse_scene_with_spans;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DIAGNOSTICS: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandResult {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl CommandResult {
    fn ok(stdout: String) -> Self {
        CommandResult {
            code: EXIT_OK,
            stdout,
            stderr: String::new(),
        }
    }

    fn fail(code: i32, stderr: String) -> Self {
        CommandResult {
            code,
            stdout: String::new(),
            stderr,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "cpl", version, about = "Check and analyse CPL scene scripts")]
struct Cli {
    /// Write the report here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GridFormat {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and check a scene; list diagnostics.
    Check { file: PathBuf },
    /// Concept co-occurrence counts.
    Grid {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: GridFormat,
    },
    /// Primary clusters and secondary links.
    Cluster { file: PathBuf },
    /// The nested object set.
    Trees {
        file: PathBuf,
        #[arg(long)]
        dot: bool,
        /// Order children by name.
        #[arg(long)]
        sorted: bool,
    },
    /// Uni-directional links and process cycles.
    Cycles {
        file: PathBuf,
        #[arg(long, conflicts_with = "json")]
        dot: bool,
        #[arg(long)]
        json: bool,
    },
    /// The ensemble hierarchy.
    Hierarchy {
        file: PathBuf,
        #[arg(long, conflicts_with = "json")]
        dot: bool,
        #[arg(long)]
        json: bool,
    },
    /// Vote-ranked predictions from a memory directory.
    Predict {
        #[arg(long, value_name = "DIR")]
        memory: PathBuf,
        /// Comma-separated features of the current scene.
        #[arg(long, value_name = "LIST")]
        input: String,
        /// Comma-separated features allowed in the prediction.
        #[arg(long, value_name = "LIST")]
        legal: Option<String>,
        #[arg(short, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
        k: u64,
        #[arg(long)]
        json: bool,
    },
}

/// `CPL_COLOR=1` turns on colored diagnostics.
fn color_enabled() -> bool {
    std::env::var("CPL_COLOR").is_ok_and(|v| v == "1")
}

fn render_all(diags: &[Diagnostic], file: &Path) -> String {
    let name = file.display().to_string();
    let color = color_enabled();
    diags
        .iter()
        .map(|d| d.render(&name, color) + "\n")
        .collect()
}

fn load(file: &Path) -> Result<(Scene, Vec<Diagnostic>), CommandResult> {
    let src = fs::read_to_string(file)
        .map_err(|e| CommandResult::fail(EXIT_FAILURE, format!("{}: {e}\n", file.display())))?;
    let (scene, spans) = parse_scene_with_spans(&src)
        .map_err(|diags| CommandResult::fail(EXIT_FAILURE, render_all(&diags, file)))?;
    let mut diags = check_scene(&scene);
    spans.locate(&mut diags);
    Ok((scene, diags))
}

/// Load a scene that must check clean; warnings go to stderr.
fn load_clean(file: &Path) -> Result<(Scene, String), CommandResult> {
    let (scene, diags) = load(file)?;
    let rendered = render_all(&diags, file);
    if diags.iter().any(Diagnostic::is_error) {
        return Err(CommandResult::fail(EXIT_DIAGNOSTICS, rendered));
    }
    Ok((scene, rendered))
}

fn split_list(list: &str) -> Vec<String> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

fn json_text(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("json value serializes") + "\n"
}

fn plural(n: usize, word: &str) -> String {
    if n == 1 {
        format!("{n} {word}")
    } else {
        format!("{n} {word}s")
    }
}

fn execute(command: Command) -> CommandResult {
    let analysed = |file: &Path, f: &dyn Fn(&Scene) -> Result<String, String>| {
        let (scene, warnings) = match load_clean(file) {
            Ok(v) => v,
            Err(r) => return r,
        };
        match f(&scene) {
            Ok(stdout) => CommandResult {
                code: EXIT_OK,
                stdout,
                stderr: warnings,
            },
            Err(msg) => CommandResult::fail(
                EXIT_DIAGNOSTICS,
                format!("{warnings}{}: error: {msg}\n", file.display()),
            ),
        }
    };

    match command {
        Command::Check { file } => match load(&file) {
            Err(r) => r,
            Ok((_, diags)) => {
                let errors = diags.iter().filter(|d| d.is_error()).count();
                let warnings = diags.len() - errors;
                let mut stdout = render_all(&diags, &file);
                stdout.push_str(&plural(errors, "error"));
                if warnings > 0 {
                    stdout.push_str(&format!(", {}", plural(warnings, "warning")));
                }
                stdout.push('\n');
                CommandResult {
                    code: if errors > 0 {
                        EXIT_DIAGNOSTICS
                    } else {
                        EXIT_OK
                    },
                    stdout,
                    stderr: String::new(),
                }
            }
        },
        Command::Grid { file, format } => analysed(&file, &|scene| {
            let grid = build_grid(scene);
            Ok(match format {
                GridFormat::Csv => grid.to_csv(),
                GridFormat::Json => json_text(&grid.to_json(&cluster(&grid))),
            })
        }),
        Command::Cluster { file } => analysed(&file, &|scene| {
            let clustering = cluster(&build_grid(scene));
            let mut out = String::from("clusters:\n");
            for c in &clustering.clusters {
                let names: Vec<&str> = c.iter().map(|x| x.as_str()).collect();
                out.push_str(&format!("  {{{}}}\n", names.join(", ")));
            }
            out.push_str("secondary links:\n");
            for l in &clustering.secondary_links {
                out.push_str(&format!("  {} - {} ({})\n", l.a, l.b, l.count));
            }
            Ok(out)
        }),
        Command::Trees { file, dot, sorted } => analysed(&file, &|scene| {
            let forest = build_forest(scene);
            Ok(if dot {
                forest.to_dot()
            } else {
                forest.nested_notation(sorted) + "\n"
            })
        }),
        Command::Cycles { file, dot, json } => analysed(&file, &|scene| {
            let forest = build_forest(scene);
            let report = extract_cycles(scene, &forest);
            Ok(if dot {
                report.to_dot(&ProcessGraph::build(scene, &forest))
            } else if json {
                json_text(&report.to_json())
            } else {
                report.to_text()
            })
        }),
        Command::Hierarchy { file, dot, json } => analysed(&file, &|scene| {
            let (h, trace) =
                build_hierarchy(scene, &build_ensemble(scene)).map_err(|e| e.to_string())?;
            Ok(if dot {
                h.to_dot()
            } else if json {
                json_text(&h.to_json(&trace))
            } else {
                h.to_text()
            })
        }),
        Command::Predict {
            memory,
            input,
            legal,
            k,
            json,
        } => {
            let store = match MemoryStore::load_dir(&memory) {
                Ok(s) => s,
                Err(e) => return CommandResult::fail(EXIT_FAILURE, format!("{e}\n")),
            };
            let legal: Option<BTreeSet<String>> = legal
                .as_deref()
                .map(|l| split_list(l).into_iter().collect());
            let prediction = store.predict(&split_list(&input), legal.as_ref(), k as usize);
            CommandResult::ok(if json {
                json_text(&prediction.to_json())
            } else {
                prediction.to_text()
            })
        }
    }
}

/// Parse `argv` (program name first) and run the subcommand.
pub fn run<I, T>(argv: I) -> CommandResult
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                CommandResult::fail(EXIT_FAILURE, text)
            } else {
                CommandResult::ok(text)
            };
        }
    };
    let mut result = execute(cli.command);
    if let Some(path) = cli.out {
        if result.code != EXIT_FAILURE && !result.stdout.is_empty() {
            if let Err(e) = fs::write(&path, &result.stdout) {
                return CommandResult::fail(EXIT_FAILURE, format!("{}: {e}\n", path.display()));
            }
            result.stdout.clear();
        }
    }
    result
}
