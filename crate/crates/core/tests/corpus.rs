//! The conformance corpus: hand-derived slices checked against both slicers,
//! and the flow facts of every program checked against brute-force oracles.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::Deserialize;
use slicebench_core::dynamic::{dynamic_backward_slice, execute};
use slicebench_core::flow::{build_cfg, control_dependences, pdg_from_source, Pdg, PostDom};
use slicebench_core::lang::{statements_on, Ast};
use slicebench_core::slice::*;

mod oracles;
use oracles::*;

#[derive(Deserialize)]
struct StaticC {
    variable: String,
    line: usize,
}

#[derive(Deserialize)]
struct DynamicC {
    line: usize,
}

#[derive(Deserialize)]
struct Criteria {
    #[serde(rename = "static")]
    stat: StaticC,
    dynamic: DynamicC,
}

#[derive(Deserialize)]
struct DefUse {
    line: usize,
    defs: BTreeSet<String>,
    uses: BTreeSet<String>,
}

#[derive(Deserialize)]
struct Expected {
    #[serde(rename = "static")]
    stat: BTreeSet<usize>,
    dynamic: BTreeSet<usize>,
    def_use: Vec<DefUse>,
}

struct Case {
    id: String,
    source: String,
    criteria: Criteria,
    expected: Expected,
}

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn load() -> Vec<Case> {
    let dir = corpus_dir();
    let mut ids: Vec<String> = std::fs::read_dir(dir.join("programs"))
        .unwrap()
        .filter_map(|e| {
            let p = e.unwrap().path();
            (p.extension()? == "java").then(|| p.file_stem().unwrap().to_string_lossy().into_owned())
        })
        .collect();
    ids.sort();
    ids.into_iter()
        .map(|id| {
            let read = |sub: &str, ext: &str| std::fs::read_to_string(dir.join(sub).join(format!("{id}.{ext}"))).unwrap();
            Case {
                source: read("programs", "java"),
                criteria: serde_json::from_str(&read("criteria", "json")).unwrap(),
                expected: serde_json::from_str(&read("expected", "json")).unwrap(),
                id,
            }
        })
        .collect()
}

fn analyse(c: &Case) -> (Ast, Pdg) {
    pdg_from_source(&c.source, &c.id).unwrap_or_else(|e| panic!("{}: {e}", c.id))
}

fn fmt(s: &BTreeSet<usize>) -> String {
    format!("{:?}", s.iter().collect::<Vec<_>>())
}

#[test]
fn corpus_shape() {
    let cases = load();
    assert_eq!(cases.len(), 20);
    for c in &cases {
        assert!(c.source.lines().count() <= 40, "{} is longer than 40 lines", c.id);
        assert!(c.source.contains("public static int main(String[] args)"), "{}", c.id);
        assert!(c.expected.def_use.len() >= 3, "{}", c.id);
    }
}

#[test]
fn static_slices_match_hand_derivation() {
    let cases = load();
    let start = Instant::now();
    let mut mismatches = Vec::new();
    for c in &cases {
        let (ast, pdg) = analyse(c);
        let crit = SlicingCriterion::new_static(&c.criteria.stat.variable, c.criteria.stat.line);
        let got = static_backward_slice(&ast, &pdg, &crit, StructuralLines::Include).unwrap().lines;
        assert!(got.contains(&crit.line));
        if got != c.expected.stat {
            mismatches.push(format!("{} {crit}: expected {} got {}", c.id, fmt(&c.expected.stat), fmt(&got)));
        }
    }
    let elapsed = start.elapsed();
    assert!(mismatches.is_empty(), "{}", mismatches.join("\n"));
    assert!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
}

#[test]
fn dynamic_slices_match_hand_derivation_and_are_contained() {
    let mut mismatches = Vec::new();
    let mut strict = Vec::new();
    for c in &load() {
        let (ast, pdg) = analyse(c);
        let trace = execute(&ast, &pdg).unwrap_or_else(|e| panic!("{}: {e}", c.id));
        let line = c.criteria.dynamic.line;
        let got = dynamic_backward_slice(&ast, &trace, line, StructuralLines::Include).unwrap().lines;
        assert!(got.contains(&line), "{}", c.id);
        if got != c.expected.dynamic {
            mismatches.push(format!("{} @{line}: expected {} got {}", c.id, fmt(&c.expected.dynamic), fmt(&got)));
        }
        let stat = static_slice_at_line(&ast, &pdg, line, StructuralLines::Include).unwrap();
        assert!(got.is_subset(&stat), "{}: dynamic {} not within static {}", c.id, fmt(&got), fmt(&stat));
        if got.len() < stat.len() {
            strict.push(c.id.clone());
        }
    }
    assert!(mismatches.is_empty(), "{}", mismatches.join("\n"));
    assert!(strict.len() >= 3, "strictly smaller dynamic slices: {strict:?}");
}

#[test]
fn def_use_annotations() {
    for c in &load() {
        let (ast, _) = analyse(c);
        for du in &c.expected.def_use {
            let found = statements_on(&ast, du.line).into_iter().any(|s| {
                let st = ast.stmt(s);
                st.defs == du.defs && st.uses == du.uses
            });
            let actual: Vec<_> = statements_on(&ast, du.line)
                .into_iter()
                .map(|s| (ast.stmt(s).defs.clone(), ast.stmt(s).uses.clone()))
                .collect();
            assert!(found, "{} line {}: annotated defs {:?} uses {:?}, statements have {actual:?}", c.id, du.line, du.defs, du.uses);
        }
    }
}

#[test]
fn flow_facts_agree_with_oracles() {
    for c in &load() {
        let (ast, pdg) = analyse(c);
        assert_eq!(pdg_intra_data(&ast, &pdg), oracle_pdg_data(&pdg), "{} data edges", c.id);
        for m in &ast.methods {
            let cfg = build_cfg(&ast, m.id).unwrap();
            let succ = aug_succ(&cfg);
            let pdom = PostDom::compute(&cfg);
            let cd = control_dependences(&cfg, &pdom);
            assert_eq!(cd, oracle_cd(&succ), "{} control deps of {}", c.id, m.name);
            if cfg.len() <= 12 {
                assert_eq!(cd, oracle_cd_paths(&succ), "{} path control deps of {}", c.id, m.name);
            }
        }
    }
}
