// SPDX-License-Identifier: Apache-2.0
//! Persistent library of user Verilog modules callable through `Call_V`.
//!
//! A library is a directory holding `manifest.json` and one `<label>.v` per
//! entry. The manifest is a single JSON document:
//!
//! ```json
//! {
//!   "format": 1,
//!   "entries": {
//!     "fft32_real": {
//!       "label": "fft32_real",
//!       "verilog_path": "fft32_real.v",
//!       "module": "fft32_real",
//!       "inputs": ["x0", "x1"],
//!       "outputs": ["y0"],
//!       "cycles": 34,
//!       "resources": { "lut": 1, "ff": 2, "dsp": 3, "bram": 0 },
//!       "kind": "normal",
//!       "clocked": true,
//!       "resettable": true,
//!       "bindings": [ { "kind": "normal", "call": "Call_V(\"fft32_real\", \"y0\", \"x0\", \"x1\")" }, ... ]
//!     }
//!   }
//! }
//! ```
//!
//! Operand binding is positional: a call lists outputs then inputs in the
//! stored order.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codegen::{module_headers, LIBRARY_MODULES};
use crate::costs::{CostTable, OpCost, Resources};
use crate::frontend::{is_reserved, CallSig};

pub const MANIFEST: &str = "manifest.json";
const LOCK: &str = ".lock";
const FORMAT: u32 = 1;

#[derive(Debug, Error)]
pub enum HwlibError {
    #[error("label `{0}` is already registered (use --force to replace it)")]
    DuplicateLabel(String),
    #[error("Verilog file {0} does not exist")]
    MissingFile(PathBuf),
    #[error("entry `{0}` needs at least one input and one output")]
    Arity(String),
    #[error("invalid entry `{label}`: {reason}")]
    InvalidEntry { label: String, reason: String },
    #[error("no library entry labelled `{0}`")]
    NotFound(String),
    #[error("corrupt manifest {path}: {reason}")]
    CorruptManifest { path: PathBuf, reason: String },
    #[error("library {0} is locked by another writer (remove the lock file if it is stale)")]
    Locked(PathBuf),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> HwlibError + '_ {
    move |source| HwlibError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    #[default]
    Normal,
    IfVariant,
    ElseVariant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LibraryEntry {
    pub label: String,
    /// Source file when registering; relative to the library once stored.
    pub verilog_path: PathBuf,
    /// Module name found in the file. Filled in by registration.
    #[serde(default)]
    pub module: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub cycles: u32,
    pub resources: Resources,
    #[serde(default)]
    pub kind: EntryKind,
    #[serde(default)]
    pub clocked: bool,
    #[serde(default)]
    pub resettable: bool,
}

impl LibraryEntry {
    pub fn new(
        label: &str,
        verilog_path: impl Into<PathBuf>,
        inputs: Vec<String>,
        outputs: Vec<String>,
        cycles: u32,
        resources: Resources,
    ) -> Self {
        LibraryEntry {
            label: label.to_string(),
            verilog_path: verilog_path.into(),
            module: String::new(),
            inputs,
            outputs,
            cycles,
            resources,
            kind: EntryKind::Normal,
            clocked: false,
            resettable: false,
        }
    }

    pub fn call_sig(&self) -> CallSig {
        CallSig {
            label: self.label.clone(),
            module: self.module.clone(),
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
            cycles: self.cycles,
            clocked: self.clocked,
            resettable: self.resettable,
        }
    }

    pub fn cost(&self) -> OpCost {
        OpCost {
            resources: self.resources,
            latency: self.cycles,
        }
    }

    /// The source form of a call, outputs first.
    pub fn call_template(&self) -> String {
        let args: Vec<String> = std::iter::once(&self.label)
            .chain(&self.outputs)
            .chain(&self.inputs)
            .map(|a| format!("\"{a}\""))
            .collect();
        format!("Call_V({})", args.join(", "))
    }
}

/// How a call is written in one statement context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BindingRecord {
    pub kind: EntryKind,
    pub call: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Record {
    #[serde(flatten)]
    entry: LibraryEntry,
    bindings: Vec<BindingRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Manifest {
    format: u32,
    entries: BTreeMap<String, Record>,
}

fn bindings(e: &LibraryEntry) -> Vec<BindingRecord> {
    let call = e.call_template();
    [EntryKind::Normal, EntryKind::IfVariant, EntryKind::ElseVariant]
        .into_iter()
        .map(|kind| BindingRecord {
            kind,
            call: call.clone(),
        })
        .collect()
}

/// A loaded library directory.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Library {
    pub dir: PathBuf,
    entries: BTreeMap<String, LibraryEntry>,
}

impl Library {
    /// Reads `dir/manifest.json`. A directory without one is an empty library.
    pub fn load(dir: &Path) -> Result<Library, HwlibError> {
        let path = dir.join(MANIFEST);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Ok(Library {
                    dir: dir.to_path_buf(),
                    entries: BTreeMap::new(),
                })
            }
            Err(e) => return Err(io_err(&path)(e)),
        };
        let corrupt = |reason: String| HwlibError::CorruptManifest {
            path: path.clone(),
            reason,
        };
        let m: Manifest = serde_json::from_str(&text).map_err(|e| corrupt(e.to_string()))?;
        if m.format != FORMAT {
            return Err(corrupt(format!("unsupported format {}", m.format)));
        }
        let mut entries = BTreeMap::new();
        for (key, r) in m.entries {
            if key != r.entry.label {
                return Err(corrupt(format!("key `{key}` holds entry `{}`", r.entry.label)));
            }
            check_shape(&r.entry).map_err(|e| corrupt(e.to_string()))?;
            entries.insert(key, r.entry);
        }
        Ok(Library {
            dir: dir.to_path_buf(),
            entries,
        })
    }

    pub fn lookup(&self, label: &str) -> Result<&LibraryEntry, HwlibError> {
        self.entries
            .get(label)
            .ok_or_else(|| HwlibError::NotFound(label.to_string()))
    }

    pub fn entries(&self) -> impl Iterator<Item = &LibraryEntry> {
        self.entries.values()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Absolute path of an entry's stored Verilog file.
    pub fn verilog_file(&self, e: &LibraryEntry) -> PathBuf {
        self.dir.join(&e.verilog_path)
    }

    pub fn call_sigs(&self) -> BTreeMap<String, CallSig> {
        self.entries.iter().map(|(k, e)| (k.clone(), e.call_sig())).collect()
    }

    /// Adds every entry's latency and resources to `costs` under its label.
    pub fn apply_costs(&self, costs: &mut CostTable) {
        for e in self.entries.values() {
            costs.set(&e.label, e.cost());
        }
    }
}

pub fn lookup(label: &str, lib: &Path) -> Result<LibraryEntry, HwlibError> {
    Library::load(lib)?.lookup(label).cloned()
}

fn is_ident(s: &str) -> bool {
    let mut c = s.chars();
    matches!(c.next(), Some(ch) if ch.is_ascii_alphabetic() || ch == '_')
        && c.all(|ch| ch.is_ascii_alphanumeric() || ch == '_')
}

fn check_shape(e: &LibraryEntry) -> Result<(), HwlibError> {
    let invalid = |reason: String| HwlibError::InvalidEntry {
        label: e.label.clone(),
        reason,
    };
    if !is_ident(&e.label) {
        return Err(invalid("labels are identifiers".into()));
    }
    if is_reserved(&e.label) || CostTable::default().contains(&e.label) {
        return Err(invalid("label is reserved".into()));
    }
    if e.inputs.is_empty() || e.outputs.is_empty() {
        return Err(HwlibError::Arity(e.label.clone()));
    }
    if e.cycles == 0 {
        return Err(invalid("cycles must be at least 1".into()));
    }
    let mut seen = std::collections::BTreeSet::new();
    for p in e.inputs.iter().chain(&e.outputs) {
        if !is_ident(p) {
            return Err(invalid(format!("port `{p}` is not an identifier")));
        }
        if !seen.insert(p) {
            return Err(invalid(format!("port `{p}` listed twice")));
        }
    }
    Ok(())
}

/// Finds the module and checks the declared I/O against its header.
/// Returns `(module, clocked, resettable)`.
fn check_ports(e: &LibraryEntry, text: &str) -> Result<(String, bool, bool), HwlibError> {
    let invalid = |reason: String| HwlibError::InvalidEntry {
        label: e.label.clone(),
        reason,
    };
    let heads = module_headers(text);
    let (module, ports) = match heads.len() {
        0 => return Err(invalid("no module declaration found".into())),
        1 => heads.into_iter().next().expect("one module"),
        _ => heads
            .into_iter()
            .find(|(m, _)| *m == e.label)
            .ok_or_else(|| invalid(format!("file declares several modules and none is named `{}`", e.label)))?,
    };
    if LIBRARY_MODULES.contains(&module.as_str()) || module.starts_with("hls_") {
        return Err(invalid(format!(
            "module name `{module}` clashes with the function library"
        )));
    }
    let dir = |name: &str| ports.iter().find(|(_, n)| n == name).map(|(i, _)| *i);
    for (list, want_in) in [(&e.inputs, true), (&e.outputs, false)] {
        for p in list {
            match dir(p) {
                None => return Err(invalid(format!("module `{module}` has no port `{p}`"))),
                Some(is_in) if is_in != want_in => {
                    return Err(invalid(format!("port `{p}` has the wrong direction")));
                }
                _ => {}
            }
        }
    }
    let clocked = dir("clk") == Some(true);
    let resettable = dir("rst") == Some(true);
    for (_, p) in &ports {
        let declared = e.inputs.contains(p) || e.outputs.contains(p);
        let control = (p == "clk" && clocked) || (p == "rst" && resettable);
        if !declared && !control {
            return Err(invalid(format!("port `{p}` of `{module}` is not in the I/O lists")));
        }
    }
    Ok((module, clocked, resettable))
}

/// Held while a writer owns the library directory.
struct LockGuard(PathBuf);

impl LockGuard {
    fn acquire(dir: &Path) -> Result<LockGuard, HwlibError> {
        let path = dir.join(LOCK);
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(LockGuard(path))
            }
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => Err(HwlibError::Locked(dir.to_path_buf())),
            Err(e) => Err(io_err(&path)(e)),
        }
    }
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), HwlibError> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(tmp.path()))?;
    let dest = dir.join(name);
    tmp.persist(&dest).map_err(|e| io_err(&dest)(e.error))?;
    Ok(())
}

/// Copies the entry's Verilog into `lib` and records it in the manifest.
/// Returns the entry as stored.
pub fn register_module(entry: &LibraryEntry, lib: &Path, force: bool) -> Result<LibraryEntry, HwlibError> {
    check_shape(entry)?;
    let text = match fs::read_to_string(&entry.verilog_path) {
        Ok(t) => t,
        Err(e) if e.kind() == io::ErrorKind::NotFound => {
            return Err(HwlibError::MissingFile(entry.verilog_path.clone()))
        }
        Err(e) => return Err(io_err(&entry.verilog_path)(e)),
    };
    let (module, clocked, resettable) = check_ports(entry, &text)?;
    fs::create_dir_all(lib).map_err(io_err(lib))?;
    let _lock = LockGuard::acquire(lib)?;

    let mut current = Library::load(lib)?;
    if current.entries.contains_key(&entry.label) && !force {
        return Err(HwlibError::DuplicateLabel(entry.label.clone()));
    }
    if let Some(other) = current.entries().find(|o| o.module == module && o.label != entry.label) {
        return Err(HwlibError::InvalidEntry {
            label: entry.label.clone(),
            reason: format!("module `{module}` is already registered as `{}`", other.label),
        });
    }
    let file = format!("{}.v", entry.label);
    let stored = LibraryEntry {
        verilog_path: PathBuf::from(&file),
        module,
        clocked,
        resettable,
        ..entry.clone()
    };
    write_atomic(lib, &file, text.as_bytes())?;
    current.entries.insert(stored.label.clone(), stored.clone());
    let manifest = Manifest {
        format: FORMAT,
        entries: current
            .entries
            .values()
            .map(|e| {
                (
                    e.label.clone(),
                    Record {
                        entry: e.clone(),
                        bindings: bindings(e),
                    },
                )
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_atomic(lib, MANIFEST, format!("{json}\n").as_bytes())?;
    Ok(stored)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn verilog(module: &str, ins: &[String], outs: &[String], clocked: bool) -> String {
        let mut ports: Vec<String> = Vec::new();
        if clocked {
            ports.push("input clk".into());
            ports.push("input rst".into());
        }
        ports.extend(ins.iter().map(|i| format!("input [31:0] {i}")));
        ports.extend(outs.iter().map(|o| format!("output [31:0] {o}")));
        let body: String = outs.iter().map(|o| format!("    assign {o} = {};\n", ins[0])).collect();
        format!(
            "module {module} (\n    {}\n);\n{body}endmodule\n",
            ports.join(",\n    ")
        )
    }

    fn names(p: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{p}{i}")).collect()
    }

    /// Writes a source module and returns an unregistered entry for it.
    fn source(dir: &Path, label: &str, n_in: usize, n_out: usize, cycles: u32) -> LibraryEntry {
        let (ins, outs) = (names("x", n_in), names("y", n_out));
        let path = dir.join(format!("src_{label}.v"));
        fs::write(&path, verilog(label, &ins, &outs, true)).unwrap();
        LibraryEntry::new(label, path, ins, outs, cycles, Resources::new(10, 20, 1, 0))
    }

    #[test]
    fn register_then_lookup() {
        let tmp = tempfile::tempdir().unwrap();
        let lib = tmp.path().join("lib");
        let e = source(tmp.path(), "fft32_real", 64, 64, 34);
        let stored = register_module(&e, &lib, false).unwrap();
        assert_eq!(stored.verilog_path, PathBuf::from("fft32_real.v"));
        assert_eq!(stored.module, "fft32_real");
        assert!(stored.clocked && stored.resettable);
        assert_eq!(lookup("fft32_real", &lib).unwrap(), stored);
        assert!(lib.join("fft32_real.v").exists());
        assert!(!lib.join(LOCK).exists());
        let sig = stored.call_sig();
        assert_eq!((sig.n_inputs(), sig.n_outputs(), sig.cycles), (64, 64, 34));
    }

    #[test]
    fn manifest_has_three_bindings() {
        let tmp = tempfile::tempdir().unwrap();
        register_module(&source(tmp.path(), "acc", 2, 1, 3), tmp.path(), false).unwrap();
        let v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(tmp.path().join(MANIFEST)).unwrap()).unwrap();
        let b = v["entries"]["acc"]["bindings"].as_array().unwrap();
        let kinds: Vec<&str> = b.iter().map(|x| x["kind"].as_str().unwrap()).collect();
        assert_eq!(kinds, vec!["normal", "if_variant", "else_variant"]);
        assert_eq!(b[0]["call"], "Call_V(\"acc\", \"y0\", \"x0\", \"x1\")");
    }

    #[test]
    fn duplicate_needs_force() {
        let tmp = tempfile::tempdir().unwrap();
        let e = source(tmp.path(), "acc", 2, 1, 3);
        register_module(&e, tmp.path(), false).unwrap();
        assert!(matches!(
            register_module(&e, tmp.path(), false),
            Err(HwlibError::DuplicateLabel(_))
        ));
        let e2 = LibraryEntry { cycles: 5, ..e };
        assert_eq!(register_module(&e2, tmp.path(), true).unwrap().cycles, 5);
        assert_eq!(lookup("acc", tmp.path()).unwrap().cycles, 5);
    }

    #[test]
    fn errors() {
        let tmp = tempfile::tempdir().unwrap();
        let e = source(tmp.path(), "acc", 2, 1, 3);
        let missing = LibraryEntry {
            verilog_path: tmp.path().join("nope.v"),
            ..e.clone()
        };
        assert!(matches!(
            register_module(&missing, tmp.path(), false),
            Err(HwlibError::MissingFile(_))
        ));
        let no_out = LibraryEntry {
            outputs: vec![],
            ..e.clone()
        };
        assert!(matches!(
            register_module(&no_out, tmp.path(), false),
            Err(HwlibError::Arity(_))
        ));
        let zero = LibraryEntry { cycles: 0, ..e.clone() };
        assert!(matches!(
            register_module(&zero, tmp.path(), false),
            Err(HwlibError::InvalidEntry { .. })
        ));
        let wrong_port = LibraryEntry {
            inputs: vec!["x0".into(), "zz".into()],
            ..e.clone()
        };
        assert!(matches!(
            register_module(&wrong_port, tmp.path(), false),
            Err(HwlibError::InvalidEntry { .. })
        ));
        let reserved = LibraryEntry {
            label: "mul".into(),
            ..e.clone()
        };
        assert!(matches!(
            register_module(&reserved, tmp.path(), false),
            Err(HwlibError::InvalidEntry { .. })
        ));
        assert!(matches!(lookup("nothing", tmp.path()), Err(HwlibError::NotFound(_))));
    }

    #[test]
    fn lock_blocks_second_writer() {
        let tmp = tempfile::tempdir().unwrap();
        let e = source(tmp.path(), "acc", 2, 1, 3);
        let held = LockGuard::acquire(tmp.path()).unwrap();
        assert!(matches!(
            register_module(&e, tmp.path(), false),
            Err(HwlibError::Locked(_))
        ));
        drop(held);
        register_module(&e, tmp.path(), false).unwrap();
    }

    #[test]
    fn corrupt_manifest() {
        let tmp = tempfile::tempdir().unwrap();
        fs::write(tmp.path().join(MANIFEST), "{ not json").unwrap();
        assert!(matches!(
            Library::load(tmp.path()),
            Err(HwlibError::CorruptManifest { .. })
        ));
        fs::write(
            tmp.path().join(MANIFEST),
            r#"{"format":1,"entries":{"a":{"label":"b"}}}"#,
        )
        .unwrap();
        assert!(matches!(
            Library::load(tmp.path()),
            Err(HwlibError::CorruptManifest { .. })
        ));
    }

    #[test]
    fn unclocked_module() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("comb.v");
        fs::write(&path, verilog("comb", &names("x", 1), &names("y", 1), false)).unwrap();
        let e = LibraryEntry::new("comb", path, names("x", 1), names("y", 1), 1, Resources::ZERO);
        let s = register_module(&e, tmp.path(), false).unwrap();
        assert!(!s.clocked && !s.resettable);
    }

    #[test]
    fn costs_and_sigs_reach_tables() {
        let tmp = tempfile::tempdir().unwrap();
        register_module(&source(tmp.path(), "acc", 2, 1, 34), tmp.path(), false).unwrap();
        let lib = Library::load(tmp.path()).unwrap();
        let mut costs = CostTable::default();
        lib.apply_costs(&mut costs);
        let op = crate::ops::OpKind::Call("acc".into());
        assert_eq!(costs.latency(&op), 34);
        assert_eq!(costs.resources(&op), Resources::new(10, 20, 1, 0));
        assert_eq!(lib.call_sigs()["acc"].inputs, vec!["x0", "x1"]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn manifest_round_trip(
            specs in proptest::collection::btree_map("[a-z][a-z0-9_]{0,8}", (1usize..6, 1usize..6, 1u32..100, any::<[u16; 4]>()), 1..5)
        ) {
            let tmp = tempfile::tempdir().unwrap();
            let lib = tmp.path().join("lib");
            let mut stored = Vec::new();
            for (label, (ni, no, cycles, r)) in &specs {
                let label = format!("m_{label}");
                let mut e = source(tmp.path(), &label, *ni, *no, *cycles);
                e.resources = Resources::new(r[0] as u64, r[1] as u64, r[2] as u64, r[3] as u64);
                stored.push(register_module(&e, &lib, false).unwrap());
            }
            let loaded = Library::load(&lib).unwrap();
            let got: Vec<LibraryEntry> = loaded.entries().cloned().collect();
            stored.sort_by(|a, b| a.label.cmp(&b.label));
            prop_assert_eq!(got, stored);
        }
    }
}
