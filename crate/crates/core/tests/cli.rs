// SPDX-License-Identifier: Apache-2.0
//! The `hlsgen` binary end to end.

mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::{corpus_path, negative_source, CORPUS, NEGATIVE};
use sha2::{Digest, Sha256};

fn hlsgen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hlsgen"))
        .args(args)
        .output()
        .expect("runs")
}

#[test]
fn rule_violations_exit_2_with_code() {
    let t = tempfile::tempdir().unwrap();
    for (name, text, code) in NEGATIVE {
        let src = t.path().join(format!("{name}.vpy"));
        fs::write(&src, negative_source(name, text)).unwrap();
        let out = t.path().join(format!("out_{name}"));
        let o = hlsgen(&["build", src.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        let err = String::from_utf8_lossy(&o.stderr);
        assert_eq!(o.status.code(), Some(2), "{name}: {err}");
        assert!(err.contains(&format!("error[{code}]")), "{name}: {err}");
        assert!(!out.exists(), "{name}");
    }
}

fn hash_dir(dir: &Path) -> String {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push(p);
            }
        }
    }
    files.sort();
    let mut h = Sha256::new();
    for f in files {
        h.update(f.strip_prefix(dir).unwrap().to_string_lossy().as_bytes());
        h.update([0]);
        h.update(fs::read(&f).unwrap());
        h.update([0]);
    }
    format!("{:x}", h.finalize())
}

#[test]
fn builds_are_byte_identical() {
    let t = tempfile::tempdir().unwrap();
    for name in ["mac16", "modulation", "polar"] {
        let src = corpus_path(name);
        let mut hashes = Vec::new();
        for k in 0..2 {
            let out = t.path().join(format!("{name}_{k}"));
            let o = hlsgen(&[
                "build",
                src.to_str().unwrap(),
                "--seed",
                "9",
                "--out",
                out.to_str().unwrap(),
            ]);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
            hashes.push(hash_dir(&out));
        }
        assert_eq!(hashes[0], hashes[1], "{name}");
    }
}

#[test]
fn seed_changes_only_the_testbench() {
    let t = tempfile::tempdir().unwrap();
    let src = corpus_path("levels");
    let (a, b) = (t.path().join("a"), t.path().join("b"));
    assert!(hlsgen(&[
        "build",
        src.to_str().unwrap(),
        "--seed",
        "1",
        "--out",
        a.to_str().unwrap()
    ])
    .status
    .success());
    assert!(hlsgen(&[
        "build",
        src.to_str().unwrap(),
        "--seed",
        "2",
        "--out",
        b.to_str().unwrap()
    ])
    .status
    .success());
    assert_eq!(fs::read(a.join("top.v")).unwrap(), fs::read(b.join("top.v")).unwrap());
    assert_ne!(
        fs::read(a.join("tb_top.v")).unwrap(),
        fs::read(b.join("tb_top.v")).unwrap()
    );
}

#[test]
fn whole_corpus_builds_in_both_modes() {
    let t = tempfile::tempdir().unwrap();
    for name in CORPUS {
        for mode in ["unrolled", "pipelined"] {
            let out = t.path().join(format!("{name}_{mode}"));
            let o = hlsgen(&[
                "build",
                corpus_path(name).to_str().unwrap(),
                "--mode",
                mode,
                "--out",
                out.to_str().unwrap(),
                "--dump-ir",
                "--dump-schedule",
            ]);
            assert!(
                o.status.success(),
                "{name} {mode}: {}",
                String::from_utf8_lossy(&o.stderr)
            );
            for f in [
                "top.v",
                "tb_top.v",
                "report.txt",
                "ir.txt",
                "schedule.txt",
                "lib/Delay_V.v",
            ] {
                assert!(out.join(f).exists(), "{name} {mode}: {f}");
            }
        }
    }
}

/// Ports bind by the stored order, not by the order in the module header.
#[test]
fn library_call_binds_positionally() {
    let t = tempfile::tempdir().unwrap();
    let v = t.path().join("mix.v");
    fs::write(
        &v,
        "module mix (\n    input [31:0] x,\n    input [31:0] k,\n    output [31:0] lo,\n    output [31:0] hi\n);\n    assign lo = x - k;\n    assign hi = x + k;\nendmodule\n",
    )
    .unwrap();
    let lib = t.path().join("lib");
    let l = lib.to_str().unwrap();
    let o = hlsgen(&[
        "lib",
        "add",
        v.to_str().unwrap(),
        "--lib",
        l,
        "--label",
        "mix",
        "--inputs",
        "k,x",
        "--outputs",
        "hi,lo",
        "--cycles",
        "2",
        "--lut",
        "64",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let src = t.path().join("d.vpy");
    fs::write(
        &src,
        "input_define(\"a\", \"b\")\noutput_define(\"p\", \"q\")\nCall_V(\"mix\", \"p\", \"q\", \"a\", \"b\")\n",
    )
    .unwrap();
    let out = t.path().join("out");
    let o = hlsgen(&[
        "build",
        src.to_str().unwrap(),
        "--lib",
        l,
        "--out",
        out.to_str().unwrap(),
        "--report",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let top = fs::read_to_string(out.join("top.v")).unwrap();
    assert!(top.contains("mix hls_u0 (.k(a), .x(b), .hi(p), .lo(q));"), "{top}");
    let stdout = String::from_utf8_lossy(&o.stdout);
    let row: Vec<&str> = stdout.lines().nth(1).unwrap().split_whitespace().collect();
    // 64 LUT from the entry plus a 2-bit counter and comparator
    assert_eq!(&row[..5], &["d", "pipelined", "2", "66", "2"]);
    let tb = fs::read_to_string(out.join("tb_top.v")).unwrap();
    assert!(!tb.contains("FAIL"), "no golden model, so no checks");
}

#[test]
fn lib_errors_exit_1() {
    let t = tempfile::tempdir().unwrap();
    let l = t.path().join("lib");
    let o = hlsgen(&[
        "lib",
        "add",
        "/nonexistent.v",
        "--lib",
        l.to_str().unwrap(),
        "--label",
        "x",
        "--inputs",
        "a",
        "--outputs",
        "b",
        "--cycles",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("does not exist"));
}
