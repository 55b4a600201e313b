//! Scope-aware def/use computation. Only identifiers that resolve to a local,
//! parameter or field ever enter a statement's def/use sets; class names used
//! as static receivers (`Math.max`) and string contents never do.

use std::collections::{BTreeSet, HashMap, HashSet};

use super::ast::*;
use super::ParseError;

/// Methods that only read their receiver. Anything else called on a mutable
/// object is treated as modifying the whole object.
const PURE_METHODS: &[&str] = &[
    "size", "get", "isEmpty", "contains", "containsKey", "containsValue", "getOrDefault", "peek", "peekFirst",
    "peekLast", "length", "charAt", "equals", "indexOf", "lastIndexOf", "keySet", "values", "entrySet", "toString",
    "hashCode", "substring", "startsWith", "endsWith", "toCharArray", "getKey", "getValue", "first", "last",
    "compareTo", "trim", "toUpperCase", "toLowerCase", "split", "intValue", "longValue", "doubleValue", "clone",
    "stream", "iterator", "getFirst", "getLast", "element",
];

/// Library statics that write into one of their arguments: (class, method, arg index).
const MUTATING_STATICS: &[(&str, &str, usize)] = &[
    ("Arrays", "sort", 0),
    ("Arrays", "fill", 0),
    ("Collections", "sort", 0),
    ("Collections", "reverse", 0),
    ("Collections", "swap", 0),
    ("Collections", "shuffle", 0),
    ("System", "arraycopy", 2),
];

#[derive(Default)]
struct Effects {
    defs: BTreeSet<String>,
    uses: BTreeSet<String>,
    calls: Vec<CallRef>,
}

struct Resolver {
    user_classes: HashSet<String>,
    fields: HashMap<String, TypeRef>,
    scopes: Vec<HashMap<String, TypeRef>>,
    externals: BTreeSet<String>,
}

pub(super) fn resolve(ast: &mut Ast) -> Result<(), ParseError> {
    let user_classes: HashSet<String> = ast.classes.iter().map(|c| c.name.clone()).collect();
    for ci in 0..ast.classes.len() {
        let mut fields = HashMap::new();
        for f in ast.classes[ci].fields.clone() {
            if let StmtKind::Field(d) = &ast.stmts[f.0].kind {
                for decl in &d.declarators {
                    let mut ty = d.ty.clone();
                    ty.dims += decl.extra_dims;
                    fields.insert(decl.name.clone(), ty);
                }
            }
        }
        let mut r = Resolver { user_classes: user_classes.clone(), fields, scopes: Vec::new(), externals: BTreeSet::new() };

        for f in ast.classes[ci].fields.clone() {
            let StmtKind::Field(d) = ast.stmts[f.0].kind.clone() else { continue };
            let mut eff = Effects::default();
            for decl in &d.declarators {
                if let Some(init) = &decl.init {
                    r.expr(init, &mut eff);
                }
                eff.defs.insert(decl.name.clone());
            }
            apply(ast, f, eff);
        }

        for m in ast.classes[ci].methods.clone() {
            r.scopes.clear();
            r.externals.clear();
            let method = ast.method(m).clone();
            r.scopes.push(method.params.iter().map(|p| (p.name.clone(), p.ty.clone())).collect());
            for s in &method.body {
                r.stmt(ast, *s);
            }
            let mut defs: BTreeSet<String> = method.params.iter().map(|p| p.name.clone()).collect();
            defs.extend(r.externals.iter().cloned());
            ast.stmts[method.decl.0].defs = defs;
        }
    }
    summarize_field_effects(ast);
    Ok(())
}

/// Propagate field reads and writes through user calls. A call statement
/// weakly defines every field its callee may transitively write, and uses
/// every field it may read, so field effects stay visible intraprocedurally.
fn summarize_field_effects(ast: &mut Ast) {
    let n = ast.methods.len();
    let mut modset: Vec<BTreeSet<String>> = vec![BTreeSet::new(); n];
    let mut refset: Vec<BTreeSet<String>> = vec![BTreeSet::new(); n];
    let mut callees: Vec<Vec<MethodId>> = vec![Vec::new(); n];
    let mut call_sites: Vec<(StmtId, Vec<MethodId>)> = Vec::new();
    for m in 0..n {
        let method = &ast.methods[m];
        let params: BTreeSet<&String> = method.params.iter().map(|p| &p.name).collect();
        let externals: BTreeSet<String> =
            ast.stmts[method.decl.0].defs.iter().filter(|v| !params.contains(v)).cloned().collect();
        for s in ast.method_stmts(MethodId(m)) {
            let st = ast.stmt(s);
            modset[m].extend(st.defs.intersection(&externals).cloned());
            refset[m].extend(st.uses.intersection(&externals).cloned());
            let targets: Vec<MethodId> =
                st.calls.iter().filter_map(|c| ast.resolve_call(c, Some(method.class))).collect();
            if !targets.is_empty() {
                callees[m].extend(targets.iter().copied());
                call_sites.push((s, targets));
            }
        }
    }
    let mut changed = true;
    while changed {
        changed = false;
        for m in 0..n {
            for c in callees[m].clone() {
                for sets in [&mut modset, &mut refset] {
                    let extra: Vec<String> = sets[c.0].difference(&sets[m]).cloned().collect();
                    if !extra.is_empty() {
                        sets[m].extend(extra);
                        changed = true;
                    }
                }
            }
        }
    }
    for (s, targets) in call_sites {
        for c in targets {
            let st = &mut ast.stmts[s.0];
            st.defs.extend(modset[c.0].iter().cloned());
            st.uses.extend(modset[c.0].iter().cloned());
            st.uses.extend(refset[c.0].iter().cloned());
        }
    }
    for m in 0..n {
        let decl = ast.methods[m].decl;
        ast.stmts[decl.0].defs.extend(modset[m].iter().cloned());
        ast.stmts[decl.0].defs.extend(refset[m].iter().cloned());
    }
}

fn apply(ast: &mut Ast, id: StmtId, eff: Effects) {
    let s = &mut ast.stmts[id.0];
    s.defs.extend(eff.defs);
    s.uses.extend(eff.uses);
    s.calls.extend(eff.calls);
}

impl Resolver {
    fn lookup(&self, name: &str) -> Option<&TypeRef> {
        self.scopes.iter().rev().find_map(|s| s.get(name))
    }

    fn lookup_var(&mut self, name: &str) -> Option<TypeRef> {
        if let Some(t) = self.lookup(name) {
            return Some(t.clone());
        }
        if let Some(t) = self.fields.get(name) {
            self.externals.insert(name.to_string());
            return Some(t.clone());
        }
        None
    }

    fn declare(&mut self, name: &str, ty: TypeRef) {
        if let Some(s) = self.scopes.last_mut() {
            s.insert(name.to_string(), ty);
        }
    }

    fn scoped(&mut self, ast: &mut Ast, id: StmtId) {
        self.scopes.push(HashMap::new());
        self.stmt(ast, id);
        self.scopes.pop();
    }

    fn stmt(&mut self, ast: &mut Ast, id: StmtId) {
        let kind = ast.stmts[id.0].kind.clone();
        let mut eff = Effects::default();
        match kind {
            StmtKind::LocalDecl(d) => {
                for decl in &d.declarators {
                    if let Some(init) = &decl.init {
                        self.expr(init, &mut eff);
                        eff.defs.insert(decl.name.clone());
                    }
                    let mut ty = d.ty.clone();
                    ty.dims += decl.extra_dims;
                    self.declare(&decl.name, ty);
                }
            }
            StmtKind::Expr(e) => self.expr(&e, &mut eff),
            StmtKind::If { cond, then_branch, else_branch } => {
                self.expr(&cond, &mut eff);
                self.scoped(ast, then_branch);
                if let Some(e) = else_branch {
                    self.scoped(ast, e);
                }
            }
            StmtKind::While { cond, body } => {
                self.expr(&cond, &mut eff);
                self.scoped(ast, body);
            }
            StmtKind::DoWhile { body, cond, .. } => {
                self.scoped(ast, body);
                self.expr(&cond, &mut eff);
            }
            StmtKind::For { init, cond, update, body } => {
                self.scopes.push(HashMap::new());
                for s in &init {
                    self.stmt(ast, *s);
                }
                if let Some(c) = &cond {
                    self.expr(c, &mut eff);
                }
                self.scoped(ast, body);
                for s in &update {
                    self.stmt(ast, *s);
                }
                self.scopes.pop();
            }
            StmtKind::ForEach { ty, var, iterable, body } => {
                self.expr(&iterable, &mut eff);
                eff.defs.insert(var.clone());
                self.scopes.push(HashMap::new());
                self.declare(&var, ty);
                self.stmt(ast, body);
                self.scopes.pop();
            }
            StmtKind::Return(Some(e)) => self.expr(&e, &mut eff),
            StmtKind::Block(b) => {
                self.scopes.push(HashMap::new());
                for s in b {
                    self.stmt(ast, s);
                }
                self.scopes.pop();
            }
            StmtKind::Return(None)
            | StmtKind::Break
            | StmtKind::Continue
            | StmtKind::Empty
            | StmtKind::Import(_)
            | StmtKind::ClassDecl(_)
            | StmtKind::MethodDecl(_)
            | StmtKind::Field(_) => {}
        }
        apply(ast, id, eff);
    }

    fn is_var(&mut self, e: &Expr) -> Option<(String, TypeRef)> {
        let root = e.root_name()?;
        self.lookup_var(root).map(|t| (root.to_string(), t))
    }

    fn user_call(&mut self, class: Option<String>, name: &str, args: &[Expr], eff: &mut Effects) {
        eff.calls.push(CallRef { class, name: name.to_string(), arity: args.len() });
        // the callee may write through reference arguments
        for a in args {
            if let ExprKind::Name(n) = &a.kind {
                if let Some(t) = self.lookup_var(n) {
                    if t.is_mutable_reference() {
                        eff.defs.insert(n.clone());
                        eff.uses.insert(n.clone());
                    }
                }
            }
        }
    }

    fn lvalue(&mut self, target: &Expr, compound: bool, eff: &mut Effects) {
        match &target.kind {
            ExprKind::Name(n) => {
                if self.lookup_var(n).is_some() {
                    eff.defs.insert(n.clone());
                    if compound {
                        eff.uses.insert(n.clone());
                    }
                }
            }
            ExprKind::Index { .. } | ExprKind::Field { .. } => {
                // whole-object weak update: defines and uses the root
                let mut cur = target;
                loop {
                    match &cur.kind {
                        ExprKind::Index { target, index } => {
                            self.expr(index, eff);
                            cur = target;
                        }
                        ExprKind::Field { target, .. } => cur = target,
                        _ => break,
                    }
                }
                match &cur.kind {
                    ExprKind::Name(n) => {
                        if self.lookup_var(n).is_some() {
                            eff.defs.insert(n.clone());
                            eff.uses.insert(n.clone());
                        }
                    }
                    _ => self.expr(cur, eff),
                }
            }
            _ => self.expr(target, eff),
        }
    }

    fn expr(&mut self, e: &Expr, eff: &mut Effects) {
        match &e.kind {
            ExprKind::Int(_)
            | ExprKind::Float(_)
            | ExprKind::Bool(_)
            | ExprKind::Char(_)
            | ExprKind::Str(_)
            | ExprKind::Null => {}
            ExprKind::Name(n) => {
                if self.lookup_var(n).is_some() {
                    eff.uses.insert(n.clone());
                }
            }
            ExprKind::Field { target, .. } => {
                if let ExprKind::Name(n) = &target.kind {
                    if self.lookup_var(n).is_none() {
                        return; // Integer.MAX_VALUE and friends
                    }
                }
                self.expr(target, eff);
            }
            ExprKind::Index { target, index } => {
                self.expr(target, eff);
                self.expr(index, eff);
            }
            ExprKind::Call { target, name, args } => {
                for a in args {
                    self.expr(a, eff);
                }
                match target {
                    None => self.user_call(None, name, args, eff),
                    Some(t) => {
                        if let ExprKind::Name(cls) = &t.kind {
                            if self.lookup_var(cls).is_none() {
                                if self.user_classes.contains(cls) {
                                    self.user_call(Some(cls.clone()), name, args, eff);
                                } else if let Some((_, _, idx)) =
                                    MUTATING_STATICS.iter().find(|(c, m, _)| c == cls && m == name)
                                {
                                    if let Some(arg) = args.get(*idx) {
                                        if let Some((root, _)) = self.is_var(arg) {
                                            eff.defs.insert(root.clone());
                                            eff.uses.insert(root);
                                        }
                                    }
                                }
                                return;
                            }
                        }
                        self.expr(t, eff);
                        if let Some((root, ty)) = self.is_var(t) {
                            if ty.dims == 0 && self.user_classes.contains(&ty.base) {
                                self.user_call(Some(ty.base.clone()), name, args, eff);
                            } else if ty.is_mutable_reference() && !PURE_METHODS.contains(&name.as_str()) {
                                eff.defs.insert(root.clone());
                                eff.uses.insert(root);
                            }
                        }
                    }
                }
            }
            ExprKind::New { args, .. } => {
                for a in args {
                    self.expr(a, eff);
                }
            }
            ExprKind::NewArray { dims, .. } => {
                for d in dims {
                    self.expr(d, eff);
                }
            }
            ExprKind::ArrayInit(items) => {
                for i in items {
                    self.expr(i, eff);
                }
            }
            ExprKind::Unary { expr, .. } | ExprKind::Cast { expr, .. } => self.expr(expr, eff),
            ExprKind::IncDec { target, .. } => self.lvalue(target, true, eff),
            ExprKind::Binary { lhs, rhs, .. } => {
                self.expr(lhs, eff);
                self.expr(rhs, eff);
            }
            ExprKind::Assign { op, target, value } => {
                self.expr(value, eff);
                self.lvalue(target, op.is_some(), eff);
            }
            ExprKind::Ternary { cond, then, els } => {
                self.expr(cond, eff);
                self.expr(then, eff);
                self.expr(els, eff);
            }
        }
    }
}
