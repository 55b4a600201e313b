//! Random structured programs over three int variables, for property tests.
#![allow(dead_code)]

use proptest::prelude::*;


#[derive(Debug, Clone)]
pub enum S {
    Assign(usize, usize, usize),
    Inc(usize),
    If(usize, Vec<S>, Option<Vec<S>>),
    While(usize, Vec<S>),
    Do(Vec<S>, usize),
    For(Vec<S>),
    Break,
    Continue,
    Return(usize),
}

const VARS: [&str; 3] = ["a", "b", "c"];

pub fn block() -> impl Strategy<Value = Vec<S>> {
    let leaf = prop_oneof![
        (0..3usize, 0..3usize, 0..3usize).prop_map(|(x, y, z)| S::Assign(x, y, z)),
        (0..3usize).prop_map(S::Inc),
    ];
    let stmt = leaf.prop_recursive(3, 24, 4, |inner| {
        let body = prop::collection::vec(inner, 0..4);
        prop_oneof![
            (0..3usize, body.clone(), prop::option::of(body.clone())).prop_map(|(v, t, e)| S::If(v, t, e)),
            (0..3usize, body.clone()).prop_map(|(v, b)| S::While(v, b)),
            (body.clone(), 0..3usize).prop_map(|(b, v)| S::Do(b, v)),
            body.prop_map(S::For),
        ]
    });
    prop::collection::vec(stmt, 1..5)
}

pub fn jumps() -> impl Strategy<Value = Vec<(usize, u8)>> {
    prop::collection::vec((0..40usize, 0..3u8), 0..4)
}

pub fn render(stmts: &[S], depth: usize, in_loop: bool, out: &mut String) {
    let pad = "  ".repeat(depth + 2);
    for s in stmts {
        match s {
            S::Assign(x, y, z) => out.push_str(&format!("{pad}{} = {} + {};\n", VARS[*x], VARS[*y], VARS[*z])),
            S::Inc(x) => out.push_str(&format!("{pad}{}++;\n", VARS[*x])),
            S::If(v, t, e) => {
                out.push_str(&format!("{pad}if ({} > 3) {{\n", VARS[*v]));
                render(t, depth + 1, in_loop, out);
                match e {
                    Some(e) => {
                        out.push_str(&format!("{pad}}} else {{\n"));
                        render(e, depth + 1, in_loop, out);
                        out.push_str(&format!("{pad}}}\n"));
                    }
                    None => out.push_str(&format!("{pad}}}\n")),
                }
            }
            S::While(v, b) => {
                out.push_str(&format!("{pad}while ({} < 10) {{\n", VARS[*v]));
                render(b, depth + 1, true, out);
                out.push_str(&format!("{pad}}}\n"));
            }
            S::Do(b, v) => {
                out.push_str(&format!("{pad}do {{\n"));
                render(b, depth + 1, true, out);
                out.push_str(&format!("{pad}}} while ({} < 10);\n", VARS[*v]));
            }
            S::For(b) => {
                let i = format!("i{depth}");
                out.push_str(&format!("{pad}for (int {i} = 0; {i} < a; {i}++) {{\n"));
                render(b, depth + 1, true, out);
                out.push_str(&format!("{pad}}}\n"));
            }
            S::Break => out.push_str(&format!("{pad}{}\n", if in_loop { "break;" } else { "c++;" })),
            S::Continue => out.push_str(&format!("{pad}{}\n", if in_loop { "continue;" } else { "c--;" })),
            S::Return(v) => out.push_str(&format!("{pad}return {};\n", VARS[*v])),
        }
    }
}

/// Append a jump as the last statement of some nested block.
pub fn plant(stmts: &mut Vec<S>, mut at: usize, kind: u8) -> usize {
    for s in stmts.iter_mut() {
        let kids: Vec<&mut Vec<S>> = match s {
            S::If(_, t, e) => {
                let mut v = vec![t];
                if let Some(e) = e {
                    v.push(e);
                }
                v
            }
            S::While(_, b) | S::Do(b, _) | S::For(b) => vec![b],
            _ => Vec::new(),
        };
        for k in kids {
            if at == 0 {
                k.push(match kind {
                    0 => S::Break,
                    1 => S::Continue,
                    _ => S::Return(0),
                });
                return usize::MAX;
            }
            at -= 1;
            at = plant(k, at, kind);
            if at == usize::MAX {
                return at;
            }
        }
    }
    at
}


/// A random body wrapped as `main`, starting from fixed inputs.
pub fn as_main(body: &[S]) -> String {
    let mut src = String::from("class R {\n  public static int main(String[] args) {\n    int a = 3;\n    int b = 5;\n    int c = 0;\n");
    render(body, 0, false, &mut src);
    src.push_str("    return c;\n  }\n}\n");
    src
}
