// SPDX-License-Identifier: Apache-2.0
//! Shared fixtures for unit tests.

use crate::costs::CostTable;
use crate::frontend::{elaborate, parse_source, ElabOptions};
use crate::ir::{build_tree, TreeArray};
use crate::scheduler::{schedule, Mode, ScheduledGraph};

pub const CORPUS: [(&str, &str); 9] = [
    ("mac16", include_str!("../corpus/mac16.vpy")),
    ("fft32", include_str!("../corpus/fft32.vpy")),
    ("demodulation", include_str!("../corpus/demodulation.vpy")),
    ("modulation", include_str!("../corpus/modulation.vpy")),
    ("backprop", include_str!("../corpus/backprop.vpy")),
    ("polar", include_str!("../corpus/polar.vpy")),
    ("clip", include_str!("../corpus/clip.vpy")),
    ("levels", include_str!("../corpus/levels.vpy")),
    ("rename", include_str!("../corpus/rename.vpy")),
];

pub fn source(name: &str) -> &'static str {
    CORPUS.iter().find(|(n, _)| *n == name).expect("corpus design").1
}

pub fn tree_named(src: &str, name: &str) -> TreeArray {
    let e = elaborate(&parse_source(src, name).unwrap(), &ElabOptions::default()).unwrap();
    build_tree(&e, &CostTable::default()).unwrap()
}

pub fn graph_named(src: &str, name: &str, mode: Mode) -> ScheduledGraph {
    schedule(&tree_named(src, name), mode)
}

pub fn graph(src: &str, mode: Mode) -> ScheduledGraph {
    graph_named(src, "t", mode)
}
