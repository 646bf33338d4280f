// SPDX-License-Identifier: Apache-2.0
//! Command-line front end: parse, elaborate, lower, schedule, emit, report.
//!
//! Exit codes: 0 success, 1 usage or environment error, 2 source
//! diagnostics, 3 internal error. A failed build writes nothing.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::codegen::{emit_design, emit_function_library, lint, VerilogFile};
use crate::costs::{CostTable, Resources};
use crate::diag::Diagnostic;
use crate::estimator::{emit_report, estimate};
use crate::fixedpoint::{simulate_graph, to_fixed, Fixed};
use crate::frontend::{elaborate, parse_source, validate_rules, ElabOptions};
use crate::hwlib::{register_module, Library, LibraryEntry};
use crate::ir::{build_tree, TreeArray};
use crate::ops::OpKind;
use crate::scheduler::{schedule, Mode, ScheduledGraph};
use crate::testbench::{emit_testbench, parse_range, StimulusPlan};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DIAGNOSTICS: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug)]
pub enum DriverError {
    Usage(String),
    Diagnostics(Vec<Diagnostic>),
    Internal(String),
}

impl DriverError {
    pub fn exit_code(&self) -> i32 {
        match self {
            DriverError::Usage(_) => EXIT_USAGE,
            DriverError::Diagnostics(_) => EXIT_DIAGNOSTICS,
            DriverError::Internal(_) => EXIT_INTERNAL,
        }
    }

    fn report(&self, source: &str, err: &mut dyn Write) {
        match self {
            DriverError::Usage(m) => {
                let _ = writeln!(err, "error: {m}");
            }
            DriverError::Internal(m) => {
                let _ = writeln!(err, "internal error: {m}");
            }
            DriverError::Diagnostics(ds) => {
                for d in ds {
                    let _ = writeln!(err, "{source}: {d}");
                }
                let _ = writeln!(err, "{} error(s); nothing written", ds.len());
            }
        }
    }
}

type Result<T> = std::result::Result<T, DriverError>;

#[derive(Debug, Parser)]
#[command(
    name = "hlsgen",
    version,
    about = "Compile call-statement dataflow sources into Verilog"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Emit Verilog, testbench and report into an output directory.
    Build(BuildArgs),
    /// Print the cycle and resource report only.
    Estimate(DesignArgs),
    /// Run the golden fixed-point model on one input vector.
    Simulate(SimulateArgs),
    /// Manage the hardware module library.
    #[command(subcommand)]
    Lib(LibCommand),
}

#[derive(Debug, Clone, Args)]
pub struct DesignArgs {
    pub source: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Pipelined)]
    pub mode: Mode,
    /// Library directory for `Call_V` modules.
    #[arg(long)]
    pub lib: Option<PathBuf>,
    /// Cost overrides, one `key.field=value` per line.
    #[arg(long)]
    pub costs: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    /// Output directory; replaced as a whole on success.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Number of testbench vectors.
    #[arg(long, default_value_t = 10)]
    pub stim: usize,
    #[arg(long)]
    pub no_testbench: bool,
    /// Testbench prints outputs instead of checking them.
    #[arg(long)]
    pub no_assert: bool,
    /// Stimulus range `lo:hi`, or `name=lo:hi` for one input. Repeatable.
    #[arg(long)]
    pub range: Vec<String>,
    /// Also print the report.
    #[arg(long)]
    pub report: bool,
    /// Write the node table to ir.txt.
    #[arg(long)]
    pub dump_ir: bool,
    /// Write levels and delays to schedule.txt.
    #[arg(long)]
    pub dump_schedule: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    /// Input value as `name=real`; unset inputs are zero. Repeatable.
    #[arg(long = "set")]
    pub set: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum LibCommand {
    /// Register a Verilog module.
    Add(LibAddArgs),
    /// List registered modules.
    List {
        #[arg(long, default_value = "hwlib")]
        lib: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
pub struct LibAddArgs {
    pub file: PathBuf,
    #[arg(long, default_value = "hwlib")]
    pub lib: PathBuf,
    #[arg(long)]
    pub label: String,
    #[arg(long, value_delimiter = ',', required = true)]
    pub inputs: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub outputs: Vec<String>,
    #[arg(long)]
    pub cycles: u32,
    #[arg(long, default_value_t = 0)]
    pub lut: u64,
    #[arg(long, default_value_t = 0)]
    pub ff: u64,
    #[arg(long, default_value_t = 0)]
    pub dsp: u64,
    #[arg(long, default_value_t = 0)]
    pub bram: u64,
    /// Replace an entry with the same label.
    #[arg(long)]
    pub force: bool,
}

/// Everything derived from one source file.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub tree: TreeArray,
    pub graph: ScheduledGraph,
    pub costs: CostTable,
    pub library: Library,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| DriverError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn design_name(path: &Path) -> String {
    path.file_stem()
        .map_or("top".into(), |s| s.to_string_lossy().into_owned())
}

/// Source text to schedule. Stops at the first stage that reports anything.
pub fn compile_source(text: &str, name: &str, mode: Mode, costs: &CostTable, library: &Library) -> Result<Compiled> {
    let diag = |d: Diagnostic| DriverError::Diagnostics(vec![d]);
    let prog = parse_source(text, name).map_err(diag)?;
    let opts = ElabOptions {
        calls: library.call_sigs(),
        ..ElabOptions::default()
    };
    let elab = elaborate(&prog, &opts).map_err(diag)?;
    let issues = validate_rules(&elab, &prog);
    if !issues.is_empty() {
        return Err(DriverError::Diagnostics(issues));
    }
    let tree = build_tree(&elab, costs).map_err(diag)?;
    let graph = schedule(&tree, mode);
    Ok(Compiled {
        tree,
        graph,
        costs: costs.clone(),
        library: library.clone(),
    })
}

/// Loads the library and cost table named by `args`, then compiles.
pub fn compile(args: &DesignArgs) -> Result<Compiled> {
    let library = match &args.lib {
        Some(dir) => Library::load(dir).map_err(|e| DriverError::Usage(e.to_string()))?,
        None => Library::default(),
    };
    let mut costs = CostTable::default();
    library.apply_costs(&mut costs);
    if let Some(p) = &args.costs {
        costs
            .apply_overrides(&read(p)?)
            .map_err(|e| DriverError::Usage(format!("{}: {e}", p.display())))?;
    }
    let text = read(&args.source)?;
    compile_source(&text, &design_name(&args.source), args.mode, &costs, &library)
}

fn stimulus_plan(b: &BuildArgs) -> Result<StimulusPlan> {
    let mut plan = StimulusPlan {
        seed: b.seed,
        n_vectors: b.stim,
        assert: !b.no_assert,
        ..StimulusPlan::default()
    };
    for r in &b.range {
        let bad = |e: String| DriverError::Usage(format!("--range {r}: {e}"));
        match r.split_once('=') {
            Some((name, span)) => {
                plan.ranges
                    .insert(name.trim().to_string(), parse_range(span).map_err(bad)?);
            }
            None => plan.range = parse_range(r).map_err(bad)?,
        }
    }
    Ok(plan)
}

/// Labels of library modules the design instantiates.
fn used_labels(tree: &TreeArray) -> BTreeSet<String> {
    tree.nodes
        .iter()
        .filter_map(|n| match &n.op {
            OpKind::Call(l) => Some(l.clone()),
            _ => None,
        })
        .collect()
}

/// Artifact set of a build as `(relative path, contents)`, sorted by path.
pub fn build_artifacts(b: &BuildArgs) -> Result<Vec<(PathBuf, String)>> {
    let c = compile(&b.design)?;
    let mode = b.design.mode;
    let mut out: BTreeMap<PathBuf, String> = BTreeMap::new();

    let design = emit_design(&c.graph, mode);
    let mut lib_files = emit_function_library();
    for label in used_labels(&c.tree) {
        let e = c
            .library
            .lookup(&label)
            .map_err(|e| DriverError::Usage(e.to_string()))?;
        let path = c.library.verilog_file(e);
        let text = fs::read_to_string(&path)
            .map_err(|err| DriverError::Usage(format!("library file {}: {err}", path.display())))?;
        lib_files.push(VerilogFile {
            name: format!("{label}.v"),
            text,
        });
    }
    let violations = lint(&design, &lib_files);
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(DriverError::Internal(format!(
            "emitted Verilog fails lint:\n  {}",
            list.join("\n  ")
        )));
    }
    for f in design {
        out.insert(PathBuf::from(f.name), f.text);
    }
    for f in lib_files {
        out.insert(Path::new("lib").join(f.name), f.text);
    }
    if !b.no_testbench {
        let tb = emit_testbench(&c.graph, mode, &stimulus_plan(b)?)
            .map_err(|e| DriverError::Usage(format!("testbench: {e}; adjust --range or pass --no-testbench")))?;
        out.insert(PathBuf::from(tb.name), tb.text);
    }
    out.insert("report.txt".into(), emit_report(&estimate(&c.graph, &c.costs, mode)));
    if b.dump_ir {
        out.insert("ir.txt".into(), c.tree.dump());
    }
    if b.dump_schedule {
        out.insert("schedule.txt".into(), c.graph.dump());
    }
    Ok(out.into_iter().collect())
}

/// Top-level names a build may leave in its output directory.
fn is_artifact_name(name: &str) -> bool {
    matches!(
        name,
        "top.v" | "tb_top.v" | "report.txt" | "ir.txt" | "schedule.txt" | "lib"
    ) || (name.starts_with("ifelse_") && name.ends_with(".v"))
}

/// Stages the files next to `out`, then swaps the directory in.
pub fn write_artifacts(out: &Path, files: &[(PathBuf, String)]) -> Result<()> {
    let io = |what: &str, p: &Path, e: std::io::Error| DriverError::Internal(format!("{what} {}: {e}", p.display()));
    if out.exists() {
        let entries = fs::read_dir(out).map_err(|e| DriverError::Usage(format!("{}: {e}", out.display())))?;
        for entry in entries {
            let name = entry.map_err(|e| io("reading", out, e))?.file_name();
            let name = name.to_string_lossy();
            if !is_artifact_name(&name) {
                return Err(DriverError::Usage(format!(
                    "{} holds `{name}`, which a build would not produce; choose an empty or new --out",
                    out.display()
                )));
            }
        }
    }
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).map_err(|e| io("creating", &parent, e))?;
    let stage = tempfile::Builder::new()
        .prefix(".hlsgen-stage-")
        .tempdir_in(&parent)
        .map_err(|e| io("staging in", &parent, e))?;
    for (rel, text) in files {
        let p = stage.path().join(rel);
        if let Some(d) = p.parent() {
            fs::create_dir_all(d).map_err(|e| io("creating", d, e))?;
        }
        fs::write(&p, text).map_err(|e| io("writing", &p, e))?;
    }
    let trash = tempfile::Builder::new()
        .prefix(".hlsgen-old-")
        .tempdir_in(&parent)
        .map_err(|e| io("staging in", &parent, e))?;
    let old = trash.path().join("old");
    let had_old = out.exists();
    if had_old {
        fs::rename(out, &old).map_err(|e| io("moving aside", out, e))?;
    }
    let staged = stage.keep();
    if let Err(e) = fs::rename(&staged, out) {
        let _ = fs::remove_dir_all(&staged);
        if had_old {
            let _ = fs::rename(&old, out);
        }
        return Err(io("renaming into", out, e));
    }
    Ok(())
}

fn run_build(b: &BuildArgs, stdout: &mut dyn Write) -> Result<()> {
    let files = build_artifacts(b)?;
    write_artifacts(&b.out, &files)?;
    if b.report {
        if let Some((_, r)) = files.iter().find(|(p, _)| p == Path::new("report.txt")) {
            let _ = write!(stdout, "{r}");
        }
    }
    let _ = writeln!(stdout, "wrote {} file(s) to {}", files.len(), b.out.display());
    Ok(())
}

fn run_estimate(a: &DesignArgs, stdout: &mut dyn Write) -> Result<()> {
    let c = compile(a)?;
    let _ = write!(stdout, "{}", emit_report(&estimate(&c.graph, &c.costs, a.mode)));
    Ok(())
}

fn run_simulate(a: &SimulateArgs, stdout: &mut dyn Write) -> Result<()> {
    let c = compile(&a.design)?;
    let mut inputs: BTreeMap<String, Fixed> = c.tree.inputs.iter().map(|i| (i.clone(), Fixed(0))).collect();
    for s in &a.set {
        let bad = |m: String| DriverError::Usage(format!("--set {s}: {m}"));
        let (name, value) = s.split_once('=').ok_or_else(|| bad("expected name=value".into()))?;
        let name = name.trim();
        if !inputs.contains_key(name) {
            return Err(bad(format!("`{name}` is not an input")));
        }
        let v: f64 = value.trim().parse().map_err(|_| bad("not a number".into()))?;
        inputs.insert(name.to_string(), to_fixed(v).map_err(|e| bad(e.to_string()))?);
    }
    let r = simulate_graph(&c.tree, &inputs).map_err(|e| DriverError::Usage(format!("simulation failed: {e}")))?;
    for (name, v) in &r.outputs {
        let _ = writeln!(stdout, "{name} = {} ({})", v.decimal(), v.hex());
    }
    for (addr, w) in &r.warnings {
        let _ = writeln!(stdout, "warning: node {addr}: {w}");
    }
    Ok(())
}

fn run_lib(cmd: &LibCommand, stdout: &mut dyn Write) -> Result<()> {
    let lib_err = |e: crate::hwlib::HwlibError| DriverError::Usage(e.to_string());
    match cmd {
        LibCommand::Add(a) => {
            let entry = LibraryEntry::new(
                &a.label,
                &a.file,
                a.inputs.clone(),
                a.outputs.clone(),
                a.cycles,
                Resources::new(a.lut, a.ff, a.dsp, a.bram),
            );
            let stored = register_module(&entry, &a.lib, a.force).map_err(lib_err)?;
            let _ = writeln!(stdout, "registered {} as {}", stored.module, stored.call_template());
        }
        LibCommand::List { lib } => {
            let l = Library::load(lib).map_err(lib_err)?;
            for e in l.entries() {
                let r = e.resources;
                let _ = writeln!(
                    stdout,
                    "{}  module={} in={} out={} cycles={} lut={} ff={} dsp={} bram={}",
                    e.label,
                    e.module,
                    e.inputs.join(","),
                    e.outputs.join(","),
                    e.cycles,
                    r.lut,
                    r.ff,
                    r.dsp,
                    r.bram
                );
            }
        }
    }
    Ok(())
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{text}")
            } else {
                write!(stdout, "{text}")
            };
            return code;
        }
    };
    let (result, source) = match &cli.command {
        Command::Build(b) => (run_build(b, stdout), b.design.source.clone()),
        Command::Estimate(a) => (run_estimate(a, stdout), a.source.clone()),
        Command::Simulate(a) => (run_simulate(a, stdout), a.design.source.clone()),
        Command::Lib(l) => (run_lib(l, stdout), PathBuf::new()),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            e.report(&source.display().to_string(), stderr);
            e.exit_code()
        }
    }
}
