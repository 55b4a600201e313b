//! Brute-force oracles for post-dominance, control dependence and data
//! dependence, checked against the dataflow implementations on hand-written
//! and randomly generated programs.

use proptest::prelude::*;

mod common;
mod oracles;
use common::{block, jumps, plant, render};
use oracles::*;
use slicebench_core::flow::reaching::{iterate_once, reaching_definitions_in_order};
use slicebench_core::flow::*;
use slicebench_core::lang::parse_program;

fn check_all(src: &str) {
    let ast = parse_program(src, "t").unwrap_or_else(|e| panic!("{e}\n{src}"));
    let pdg = build_pdg(&ast).unwrap();
    assert_eq!(pdg_intra_data(&ast, &pdg), oracle_pdg_data(&pdg), "pdg data edges\n{src}");
    for m in &ast.methods {
        let cfg = build_cfg(&ast, m.id).unwrap();
        let succ = aug_succ(&cfg);
        let pdom = PostDom::compute(&cfg);
        for a in 0..cfg.len() {
            for b in 0..cfg.len() {
                assert_eq!(pdom.post_dominates(a, b), oracle_pdom(&succ, a, b), "pdom({a},{b})\n{src}");
            }
        }
        assert_eq!(control_dependences(&cfg, &pdom), oracle_cd(&succ), "control deps\n{src}");
        if cfg.len() <= 12 {
            assert_eq!(control_dependences(&cfg, &pdom), oracle_cd_paths(&succ), "path-enumerated control deps\n{src}");
        }
        let rd = reaching_definitions(&cfg);
        assert_eq!(rd.data_edges(&cfg), oracle_data(&cfg), "data deps\n{src}");

        // fixpoint is stable and independent of visiting order
        let mut again = rd.clone();
        let order: Vec<usize> = (0..cfg.len()).collect();
        assert!(!iterate_once(&cfg, &mut again, &cfg.reverse_postorder()));
        let rev: Vec<usize> = (0..cfg.len()).rev().collect();
        assert_eq!(reaching_definitions_in_order(&cfg, &order), rd);
        assert_eq!(reaching_definitions_in_order(&cfg, &rev), rd);
    }
}

#[test]
fn handwritten_programs_match_oracles() {
    check_all(
        "class A {
  static int f(int[] target) {
    int req = 0;
    int free = target[0];
    for (int i = 1; i < target.length; i++) {
      if (target[i] > free) {
        req += target[i] - free;
        free = target[i];
      } else if (target[i] < free) {
        free = target[i];
      }
    }
    return req + free;
  }
}",
    );
    check_all(
        "class A {
  static int f(int n) {
    int s = 0;
    outer:
    while (true) {
      if (s > n) break;
      s++;
      if (s % 3 == 0) continue;
      s += 2;
    }
    do { s--; } while (s > 100);
    return s;
  }
}"
        .replace("outer:\n", "")
        .as_str(),
    );
}

#[test]
fn control_dependence_of_a_simple_if() {
    let src = "class A {\n static int f(int x) {\n  int y = 0;\n  if (x > 0)\n   y = 1;\n  return y;\n }\n}\n";
    let (ast, pdg) = pdg_from_source(src, "t").unwrap();
    let at = |l| slicebench_core::lang::statement_at(&ast, l).unwrap();
    assert!(pdg.has_edge(at(4), at(5), EdgeKind::Control));
    assert!(!pdg.has_edge(at(4), at(6), EdgeKind::Control));
    assert!(pdg.has_edge(at(2), at(6), EdgeKind::Control));
    assert!(pdg.has_edge(at(3), at(6), EdgeKind::Data));
    assert!(pdg.has_edge(at(5), at(6), EdgeKind::Data));
    assert!(pdg.has_edge(at(2), at(4), EdgeKind::Data));
}

#[test]
fn break_guards_the_rest_of_the_loop_body() {
    let src = "class A {
 static int f(int n) {
  int s = 0;
  while (s < n) {
   if (s == 7) {
    break;
   }
   s++;
  }
  return s;
 }
}
";
    let (ast, pdg) = pdg_from_source(src, "t").unwrap();
    let at = |l| slicebench_core::lang::statement_at(&ast, l).unwrap();
    assert!(pdg.has_edge(at(6), at(8), EdgeKind::Control));
    assert!(pdg.has_edge(at(5), at(6), EdgeKind::Control));
    assert!(pdg.has_edge(at(4), at(5), EdgeKind::Control));
}

#[test]
fn interprocedural_edges() {
    let src = "class A {
  static void fill(int[] a, int v) {
    a[0] = v;
  }
  static int twice(int x) {
    return x * 2;
  }
  public static void main(String[] args) {
    int[] arr = new int[3];
    fill(arr, 5);
    int r = twice(arr[0]);
    System.out.println(r);
  }
}
";
    let (ast, pdg) = pdg_from_source(src, "t").unwrap();
    let at = |l| slicebench_core::lang::statement_at(&ast, l).unwrap();
    assert!(pdg.has_edge(at(10), at(2), EdgeKind::Param));
    assert!(pdg.has_edge(at(3), at(10), EdgeKind::Call));
    assert!(pdg.has_edge(at(6), at(11), EdgeKind::Call));
    assert!(pdg.has_edge(at(10), at(11), EdgeKind::Data));
    assert!(pdg.has_edge(at(2), at(3), EdgeKind::Data));
    let dot = pdg.to_dot(&ast);
    assert!(dot.starts_with("digraph pdg {"));
    assert!(dot.contains("style=dotted"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]
    #[test]
    fn random_programs_match_oracles(mut body in block(), js in jumps()) {
        for (at, kind) in js {
            plant(&mut body, at, kind);
        }
        let mut src = String::from("class R {\n  static int f(int a, int b) {\n    int c = 0;\n");
        render(&body, 0, false, &mut src);
        src.push_str("    return c;\n  }\n}\n");
        check_all(&src);
    }
}
