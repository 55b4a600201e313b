use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use super::builtins::{self, coerce_like};
use super::trace::{EntryKind, ExecutionTrace, TraceEntry};
use super::value::Value;
use crate::flow::Pdg;
use crate::lang::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuntimeErrorKind {
    DivisionByZero,
    IndexOutOfBounds,
    NullPointer,
    NoSuchElement,
    StackOverflow,
    Type,
    Unsupported,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExecError {
    #[error("step budget of {budget} exceeded at line {line}")]
    StepBudgetExceeded { budget: u64, line: usize },
    #[error("runtime error at line {line} (seq {seq}): {message}")]
    Runtime { kind: RuntimeErrorKind, message: String, line: usize, seq: u64 },
    #[error("program has no `main` method")]
    NoMain,
}

#[derive(Debug, Clone, Copy)]
pub struct ExecConfig {
    pub step_budget: u64,
    pub max_depth: usize,
}

impl Default for ExecConfig {
    fn default() -> Self {
        Self { step_budget: 1_000_000, max_depth: 200 }
    }
}

/// Longest rendered value kept in a trace entry.
const SNAPSHOT_LIMIT: usize = 200;

struct Slot {
    value: Value,
    ty: TypeRef,
}

struct Frame {
    class: ClassId,
    scopes: Vec<HashMap<String, Slot>>,
    last_def: HashMap<String, u64>,
    last_instance: HashMap<StmtId, u64>,
    entry_seq: u64,
    ret_seq: Option<u64>,
}

/// Call dependences gathered while one statement instance is being evaluated.
struct Pending {
    stmt: StmtId,
    deps: Vec<(String, u64)>,
    calls: usize,
}

enum Flow {
    Normal,
    Break,
    Continue,
    Return(Value),
}

enum Place {
    Var(String),
    Elem(Value, usize),
}

type R<T> = Result<T, ExecError>;

struct Interp<'a> {
    ast: &'a Ast,
    cd_preds: HashMap<StmtId, Vec<StmtId>>,
    config: ExecConfig,
    steps: u64,
    line: usize,
    trace: Vec<TraceEntry>,
    globals: HashMap<String, Slot>,
    global_last: HashMap<String, u64>,
    frames: Vec<Frame>,
    pending: Vec<Pending>,
}

/// Run `main` and record every statement instance.
pub fn execute(ast: &Ast, pdg: &Pdg) -> Result<ExecutionTrace, ExecError> {
    execute_with(ast, pdg, ExecConfig::default())
}

pub fn execute_with(ast: &Ast, pdg: &Pdg, config: ExecConfig) -> Result<ExecutionTrace, ExecError> {
    let main = ast.main_method().ok_or(ExecError::NoMain)?;
    let mut cd_preds: HashMap<StmtId, Vec<StmtId>> = HashMap::new();
    for e in &pdg.edges {
        if e.kind == crate::flow::EdgeKind::Control {
            cd_preds.entry(e.to).or_default().push(e.from);
        }
    }
    let mut it = Interp {
        ast,
        cd_preds,
        config,
        steps: 0,
        line: 0,
        trace: Vec::new(),
        globals: HashMap::new(),
        global_last: HashMap::new(),
        frames: Vec::new(),
        pending: Vec::new(),
    };
    it.init_fields()?;
    let args: Vec<Value> = main
        .params
        .iter()
        .map(|p| if p.ty.dims > 0 { Value::array(Vec::new()) } else { Value::default_for(&p.ty) })
        .collect();
    let result = it.invoke(main.id, args, &[])?;
    Ok(ExecutionTrace {
        entries: it.trace,
        result: (!matches!(result, Value::Void)).then(|| result.to_string()),
    })
}

fn snapshot(v: &Value) -> String {
    let s = v.to_string();
    if s.chars().count() > SNAPSHOT_LIMIT {
        let mut t: String = s.chars().take(SNAPSHOT_LIMIT).collect();
        t.push_str("...");
        t
    } else {
        s
    }
}

/// Convert a value for storage into a slot of declared type `ty`.
fn coerce(v: Value, ty: &TypeRef) -> Value {
    if ty.dims > 0 {
        return v;
    }
    match (ty.base.as_str(), &v) {
        ("int" | "short" | "byte" | "Integer", Value::Long(x)) => Value::Int(*x as i32),
        ("int" | "short" | "byte" | "Integer", Value::Char(c)) => Value::Int(*c as i32),
        ("int" | "short" | "byte" | "Integer", Value::Double(d)) => Value::Int(*d as i32),
        ("long" | "Long", Value::Int(_) | Value::Char(_)) => Value::Long(v.as_i64().unwrap_or(0)),
        ("long" | "Long", Value::Double(d)) => Value::Long(*d as i64),
        ("double" | "float" | "Double" | "Float", Value::Int(_) | Value::Long(_) | Value::Char(_)) => {
            Value::Double(v.as_f64().unwrap_or(0.0))
        }
        ("char" | "Character", Value::Int(i)) => Value::Char(char::from_u32(*i as u32).unwrap_or('\u{fffd}')),
        ("char" | "Character", Value::Long(i)) => Value::Char(char::from_u32(*i as u32).unwrap_or('\u{fffd}')),
        _ => v,
    }
}

/// Identifiers read by an expression, for the entry instance of a callee.
fn names_in(e: &Expr, out: &mut BTreeSet<String>) {
    match &e.kind {
        ExprKind::Name(n) => {
            out.insert(n.clone());
        }
        ExprKind::Field { target, .. } | ExprKind::Unary { expr: target, .. } | ExprKind::Cast { expr: target, .. } => {
            names_in(target, out)
        }
        ExprKind::IncDec { target, .. } => names_in(target, out),
        ExprKind::Index { target, index } => {
            names_in(target, out);
            names_in(index, out);
        }
        ExprKind::Call { target, args, .. } => {
            if let Some(t) = target {
                names_in(t, out);
            }
            args.iter().for_each(|a| names_in(a, out));
        }
        ExprKind::New { args, .. } | ExprKind::ArrayInit(args) => args.iter().for_each(|a| names_in(a, out)),
        ExprKind::NewArray { dims, .. } => dims.iter().for_each(|a| names_in(a, out)),
        ExprKind::Binary { lhs, rhs, .. } | ExprKind::Assign { target: lhs, value: rhs, .. } => {
            names_in(lhs, out);
            names_in(rhs, out);
        }
        ExprKind::Ternary { cond, then, els } => {
            names_in(cond, out);
            names_in(then, out);
            names_in(els, out);
        }
        ExprKind::Int(_)
        | ExprKind::Float(_)
        | ExprKind::Bool(_)
        | ExprKind::Char(_)
        | ExprKind::Str(_)
        | ExprKind::Null => {}
    }
}

impl<'a> Interp<'a> {
    fn fail(&self, kind: RuntimeErrorKind, message: impl Into<String>) -> ExecError {
        ExecError::Runtime { kind, message: message.into(), line: self.line, seq: self.trace.len() as u64 }
    }

    fn lift<T>(&self, r: Result<T, (RuntimeErrorKind, String)>) -> R<T> {
        r.map_err(|(k, m)| self.fail(k, m))
    }

    fn frame(&mut self) -> &mut Frame {
        self.frames.last_mut().expect("active frame")
    }

    fn is_local(&self, name: &str) -> bool {
        self.frames.last().is_some_and(|f| f.scopes.iter().any(|s| s.contains_key(name)))
    }

    fn slot(&self, name: &str) -> Option<&Slot> {
        if let Some(f) = self.frames.last() {
            if let Some(s) = f.scopes.iter().rev().find_map(|s| s.get(name)) {
                return Some(s);
            }
        }
        self.globals.get(name)
    }

    fn slot_mut(&mut self, name: &str) -> Option<&mut Slot> {
        if self.is_local(name) {
            let f = self.frames.last_mut().expect("active frame");
            return f.scopes.iter_mut().rev().find_map(|s| s.get_mut(name));
        }
        self.globals.get_mut(name)
    }

    fn last_def_of(&self, name: &str) -> Option<u64> {
        if self.is_local(name) {
            self.frames.last().and_then(|f| f.last_def.get(name).copied())
        } else {
            self.global_last.get(name).copied()
        }
    }

    fn declare(&mut self, name: &str, ty: TypeRef, value: Value) {
        let value = coerce(value, &ty);
        let f = self.frame();
        f.scopes.last_mut().expect("scope").insert(name.to_string(), Slot { value, ty });
    }

    fn step(&mut self, line: usize) -> R<()> {
        self.line = line;
        self.steps += 1;
        if self.steps > self.config.step_budget {
            return Err(ExecError::StepBudgetExceeded { budget: self.config.step_budget, line });
        }
        Ok(())
    }

    /// Start a statement instance: charge a step and resolve its reads.
    fn begin(&mut self, s: StmtId) -> R<BTreeMap<String, u64>> {
        let st = self.ast.stmt(s);
        self.step(st.line)?;
        let uses = st.uses.iter().filter_map(|v| self.last_def_of(v).map(|d| (v.clone(), d))).collect();
        self.pending.push(Pending { stmt: s, deps: Vec::new(), calls: 0 });
        Ok(uses)
    }

    fn control_parent(&self, s: StmtId) -> Option<u64> {
        let f = self.frames.last()?;
        self.cd_preds
            .get(&s)
            .into_iter()
            .flatten()
            .filter_map(|p| f.last_instance.get(p))
            .max()
            .copied()
            .or(Some(f.entry_seq))
    }

    /// Record the instance and make it the reaching definition of `defs`.
    fn finish(&mut self, s: StmtId, mut uses: BTreeMap<String, u64>, defs: &BTreeSet<String>) -> u64 {
        let p = self.pending.pop().expect("pending statement");
        debug_assert_eq!(p.stmt, s);
        uses.extend(p.deps);
        let seq = self.trace.len() as u64;
        let st = self.ast.stmt(s);
        let line = match st.kind {
            StmtKind::DoWhile { cond_line, .. } => cond_line,
            _ => st.line,
        };
        let snap = defs.iter().filter_map(|v| self.slot(v).map(|sl| (v.clone(), snapshot(&sl.value)))).collect();
        let control_parent = self.control_parent(s);
        self.trace.push(TraceEntry { seq, kind: EntryKind::Statement, line, stmt: s, defs: snap, uses, control_parent });
        for v in defs {
            if self.is_local(v) {
                self.frame().last_def.insert(v.clone(), seq);
            } else {
                self.global_last.insert(v.clone(), seq);
            }
        }
        if let Some(f) = self.frames.last_mut() {
            f.last_instance.insert(s, seq);
        }
        seq
    }

    fn init_fields(&mut self) -> R<()> {
        for class in &self.ast.classes {
            for f in &class.fields {
                let StmtKind::Field(decl) = &self.ast.stmt(*f).kind else { continue };
                let uses = self.begin(*f)?;
                for d in &decl.declarators {
                    let mut ty = decl.ty.clone();
                    ty.dims += d.extra_dims;
                    let value = match &d.init {
                        Some(e) => coerce(self.eval(e)?, &ty),
                        None => Value::default_for(&ty),
                    };
                    self.globals.insert(d.name.clone(), Slot { value, ty });
                }
                let defs = self.ast.stmt(*f).defs.clone();
                self.finish(*f, uses, &defs);
            }
        }
        Ok(())
    }

    fn invoke(&mut self, m: MethodId, args: Vec<Value>, arg_exprs: &[Expr]) -> R<Value> {
        let ast = self.ast;
        let method = ast.method(m);
        if self.frames.len() >= self.config.max_depth {
            return Err(self.fail(RuntimeErrorKind::StackOverflow, format!("call depth {} exceeded", self.config.max_depth)));
        }
        self.step(ast.stmt(method.decl).line)?;

        // the entry instance reads whatever the argument expressions read
        let mut names = BTreeSet::new();
        arg_exprs.iter().for_each(|e| names_in(e, &mut names));
        let mut uses: BTreeMap<String, u64> =
            names.iter().filter_map(|n| self.last_def_of(n).map(|d| (n.clone(), d))).collect();
        let mut control_parent = None;
        if let Some(p) = self.pending.last() {
            uses.extend(p.deps.iter().cloned());
            control_parent = self.control_parent(p.stmt);
        }

        let seq = self.trace.len() as u64;
        let mut scope = HashMap::new();
        let mut defs = BTreeMap::new();
        for (p, v) in method.params.iter().zip(args) {
            let v = coerce(v, &p.ty);
            defs.insert(p.name.clone(), snapshot(&v));
            scope.insert(p.name.clone(), Slot { value: v, ty: p.ty.clone() });
        }
        self.trace.push(TraceEntry {
            seq,
            kind: EntryKind::MethodEntry,
            line: ast.stmt(method.decl).line,
            stmt: method.decl,
            defs,
            uses,
            control_parent,
        });
        self.frames.push(Frame {
            class: method.class,
            scopes: vec![scope],
            last_def: method.params.iter().map(|p| (p.name.clone(), seq)).collect(),
            last_instance: HashMap::from([(method.decl, seq)]),
            entry_seq: seq,
            ret_seq: None,
        });

        let mut result = Value::Void;
        for s in &method.body {
            match self.exec(*s)? {
                Flow::Return(v) => {
                    result = v;
                    break;
                }
                Flow::Normal => {}
                Flow::Break | Flow::Continue => break,
            }
        }
        let frame = self.frames.pop().expect("callee frame");

        // what the caller's statement instance depends on
        if let Some(p) = self.pending.last_mut() {
            let k = p.calls;
            p.calls += 1;
            let tag = |what: &str| format!("@{}#{k}:{what}", method.name);
            p.deps.push((tag("entry"), seq));
            if let Some(r) = frame.ret_seq {
                p.deps.push((tag("return"), r));
            }
            for prm in &method.params {
                if prm.ty.is_mutable_reference() {
                    if let Some(d) = frame.last_def.get(&prm.name).filter(|d| **d != seq) {
                        p.deps.push((tag(&prm.name), *d));
                    }
                }
            }
            let params: BTreeSet<&String> = method.params.iter().map(|p| &p.name).collect();
            for f in ast.stmt(method.decl).defs.iter().filter(|v| !params.contains(v)) {
                if let Some(d) = self.global_last.get(f).filter(|d| **d > seq) {
                    p.deps.push((tag(f), *d));
                }
            }
        }
        Ok(result)
    }

    fn exec_block(&mut self, stmts: &[StmtId]) -> R<Flow> {
        self.frame().scopes.push(HashMap::new());
        let mut flow = Flow::Normal;
        for s in stmts {
            flow = self.exec(*s)?;
            if !matches!(flow, Flow::Normal) {
                break;
            }
        }
        self.frame().scopes.pop();
        Ok(flow)
    }

    fn cond(&mut self, e: &Expr) -> R<bool> {
        let v = self.eval(e)?;
        v.is_truthy().ok_or_else(|| self.fail(RuntimeErrorKind::Type, format!("condition is {}", v.type_name())))
    }

    fn exec(&mut self, s: StmtId) -> R<Flow> {
        let ast = self.ast;
        let st = ast.stmt(s);
        match &st.kind {
            StmtKind::Block(b) => self.exec_block(b),
            StmtKind::Empty => Ok(Flow::Normal),
            StmtKind::LocalDecl(decl) => {
                let uses = self.begin(s)?;
                for d in &decl.declarators {
                    let mut ty = decl.ty.clone();
                    ty.dims += d.extra_dims;
                    let value = match &d.init {
                        Some(e) => self.eval(e)?,
                        None => Value::default_for(&ty),
                    };
                    self.declare(&d.name, ty, value);
                }
                self.finish(s, uses, &st.defs);
                Ok(Flow::Normal)
            }
            StmtKind::Expr(e) => {
                let uses = self.begin(s)?;
                self.eval(e)?;
                self.finish(s, uses, &st.defs);
                Ok(Flow::Normal)
            }
            StmtKind::If { cond, then_branch, else_branch } => {
                let uses = self.begin(s)?;
                let c = self.cond(cond)?;
                self.finish(s, uses, &st.defs);
                if c {
                    self.exec_scoped(*then_branch)
                } else if let Some(e) = else_branch {
                    self.exec_scoped(*e)
                } else {
                    Ok(Flow::Normal)
                }
            }
            StmtKind::While { cond, body } => loop {
                let uses = self.begin(s)?;
                let c = self.cond(cond)?;
                self.finish(s, uses, &st.defs);
                if !c {
                    return Ok(Flow::Normal);
                }
                match self.exec_scoped(*body)? {
                    Flow::Break => return Ok(Flow::Normal),
                    r @ Flow::Return(_) => return Ok(r),
                    Flow::Normal | Flow::Continue => {}
                }
            },
            StmtKind::DoWhile { body, cond, .. } => loop {
                match self.exec_scoped(*body)? {
                    Flow::Break => return Ok(Flow::Normal),
                    r @ Flow::Return(_) => return Ok(r),
                    Flow::Normal | Flow::Continue => {}
                }
                let uses = self.begin(s)?;
                let c = self.cond(cond)?;
                self.finish(s, uses, &st.defs);
                if !c {
                    return Ok(Flow::Normal);
                }
            },
            StmtKind::For { init, cond, update, body } => {
                self.frame().scopes.push(HashMap::new());
                let r = self.exec_for(s, init, cond.as_ref(), update, *body);
                self.frame().scopes.pop();
                r
            }
            StmtKind::ForEach { ty, var, iterable, body } => {
                let uses = self.begin(s)?;
                let coll = self.eval(iterable)?;
                let items = self.lift(builtins::iterate(&coll))?;
                let mut uses = Some(uses);
                for (i, item) in items.into_iter().enumerate() {
                    let u = match uses.take() {
                        Some(u) => u,
                        None => self.begin(s)?,
                    };
                    let _ = i;
                    self.frame().scopes.push(HashMap::new());
                    self.declare(var, ty.clone(), item);
                    self.finish(s, u, &st.defs);
                    let flow = self.exec(*body);
                    self.frame().scopes.pop();
                    match flow? {
                        Flow::Break => return Ok(Flow::Normal),
                        r @ Flow::Return(_) => return Ok(r),
                        Flow::Normal | Flow::Continue => {}
                    }
                }
                // the failing guard test that ends the loop
                let u = match uses.take() {
                    Some(u) => u,
                    None => self.begin(s)?,
                };
                self.finish(s, u, &BTreeSet::new());
                Ok(Flow::Normal)
            }
            StmtKind::Return(e) => {
                let uses = self.begin(s)?;
                let v = match e {
                    Some(e) => self.eval(e)?,
                    None => Value::Void,
                };
                let seq = self.finish(s, uses, &st.defs);
                self.frame().ret_seq = Some(seq);
                Ok(Flow::Return(v))
            }
            StmtKind::Break | StmtKind::Continue => {
                let uses = self.begin(s)?;
                self.finish(s, uses, &st.defs);
                Ok(if matches!(st.kind, StmtKind::Break) { Flow::Break } else { Flow::Continue })
            }
            StmtKind::Import(_) | StmtKind::ClassDecl(_) | StmtKind::MethodDecl(_) | StmtKind::Field(_) => {
                Err(self.fail(RuntimeErrorKind::Unsupported, "declaration inside a method body"))
            }
        }
    }

    fn exec_scoped(&mut self, s: StmtId) -> R<Flow> {
        self.frame().scopes.push(HashMap::new());
        let r = self.exec(s);
        self.frame().scopes.pop();
        r
    }

    fn exec_for(&mut self, s: StmtId, init: &[StmtId], cond: Option<&Expr>, update: &[StmtId], body: StmtId) -> R<Flow> {
        let defs = self.ast.stmt(s).defs.clone();
        for i in init {
            self.exec(*i)?;
        }
        loop {
            let uses = self.begin(s)?;
            let c = match cond {
                Some(c) => self.cond(c)?,
                None => true,
            };
            self.finish(s, uses, &defs);
            if !c {
                return Ok(Flow::Normal);
            }
            match self.exec_scoped(body)? {
                Flow::Break => return Ok(Flow::Normal),
                r @ Flow::Return(_) => return Ok(r),
                Flow::Normal | Flow::Continue => {}
            }
            for u in update {
                self.exec(*u)?;
            }
        }
    }

    // ---- expressions ----

    fn eval(&mut self, e: &Expr) -> R<Value> {
        match &e.kind {
            ExprKind::Int(v) => Ok(builtins::int_result(*v)),
            ExprKind::Float(v) => Ok(Value::Double(*v)),
            ExprKind::Bool(b) => Ok(Value::Bool(*b)),
            ExprKind::Char(c) => Ok(Value::Char(*c)),
            ExprKind::Str(s) => Ok(Value::str(s)),
            ExprKind::Null => Ok(Value::Null),
            ExprKind::Name(n) => match self.slot(n) {
                Some(s) => Ok(s.value.clone()),
                None => Err(self.fail(RuntimeErrorKind::Unsupported, format!("unknown variable `{n}`"))),
            },
            ExprKind::Field { target, name } => {
                if let ExprKind::Name(cls) = &target.kind {
                    if self.slot(cls).is_none() {
                        if let Some(v) = builtins::static_field(cls, name) {
                            return Ok(v);
                        }
                        if let Some(s) = self.globals.get(name) {
                            return Ok(s.value.clone());
                        }
                        return Err(self.fail(RuntimeErrorKind::Unsupported, format!("unknown field {cls}.{name}")));
                    }
                }
                let t = self.eval(target)?;
                match (&t, name.as_str()) {
                    (Value::Array(a), "length") => Ok(Value::Int(a.borrow().len() as i32)),
                    (Value::Null, _) => Err(self.fail(RuntimeErrorKind::NullPointer, format!("reading .{name} of null"))),
                    (Value::Object(_), _) => match self.globals.get(name) {
                        Some(s) => Ok(s.value.clone()),
                        None => Err(self.fail(RuntimeErrorKind::Unsupported, format!("unknown field `{name}`"))),
                    },
                    _ => Err(self.fail(RuntimeErrorKind::Unsupported, format!("field .{name} on {}", t.type_name()))),
                }
            }
            ExprKind::Index { target, index } => {
                let place = self.elem_place(target, index)?;
                self.read(&place)
            }
            ExprKind::Call { target, name, args } => self.call(target.as_deref(), name, args),
            ExprKind::New { ty, args } => {
                let vals = self.eval_all(args)?;
                if let Some(r) = builtins::construct(&ty.base, &vals) {
                    return self.lift(r);
                }
                match self.ast.classes.iter().find(|c| c.name == ty.base) {
                    Some(c) => Ok(Value::Object(c.id)),
                    None => Err(self.fail(RuntimeErrorKind::Unsupported, format!("cannot construct {}", ty.base))),
                }
            }
            ExprKind::NewArray { elem, dims, extra_dims } => {
                let sizes: Vec<i64> = dims
                    .iter()
                    .map(|d| {
                        let v = self.eval(d)?;
                        v.as_i64().ok_or_else(|| self.fail(RuntimeErrorKind::Type, "array size must be an integer"))
                    })
                    .collect::<R<_>>()?;
                if let Some(n) = sizes.iter().find(|n| **n < 0) {
                    return Err(self.fail(RuntimeErrorKind::IndexOutOfBounds, format!("negative array size {n}")));
                }
                Ok(new_array(elem, &sizes, *extra_dims))
            }
            ExprKind::ArrayInit(items) => Ok(Value::array(self.eval_all(items)?)),
            ExprKind::Unary { op, expr } => {
                let v = self.eval(expr)?;
                self.unary(*op, v)
            }
            ExprKind::IncDec { target, increment, prefix } => {
                let place = self.place(target)?;
                let old = self.read(&place)?;
                let one = Value::Int(1);
                let new = self.binary(if *increment { BinOp::Add } else { BinOp::Sub }, old.clone(), one)?;
                let new = coerce_like(&old, new);
                self.write(&place, new.clone())?;
                Ok(if *prefix { new } else { old })
            }
            ExprKind::Binary { op: BinOp::And, lhs, rhs } => {
                Ok(Value::Bool(self.cond(lhs)? && self.cond(rhs)?))
            }
            ExprKind::Binary { op: BinOp::Or, lhs, rhs } => Ok(Value::Bool(self.cond(lhs)? || self.cond(rhs)?)),
            ExprKind::Binary { op, lhs, rhs } => {
                let l = self.eval(lhs)?;
                let r = self.eval(rhs)?;
                self.binary(*op, l, r)
            }
            ExprKind::Assign { op, target, value } => {
                let place = self.place(target)?;
                let v = match op {
                    None => self.eval(value)?,
                    Some(op) => {
                        let old = self.read(&place)?;
                        let rhs = self.eval(value)?;
                        let r = self.binary(*op, old.clone(), rhs)?;
                        // compound assignment narrows back to the target's type
                        match (&old, r) {
                            (Value::Int(_), Value::Long(x)) => Value::Int(x as i32),
                            (Value::Int(_), Value::Double(x)) => Value::Int(x as i32),
                            (Value::Long(_), Value::Double(x)) => Value::Long(x as i64),
                            (Value::Char(_), Value::Int(x)) => Value::Char(char::from_u32(x as u32).unwrap_or('\u{fffd}')),
                            (_, r) => r,
                        }
                    }
                };
                self.write(&place, v.clone())?;
                self.read(&place)
            }
            ExprKind::Ternary { cond, then, els } => {
                if self.cond(cond)? {
                    self.eval(then)
                } else {
                    self.eval(els)
                }
            }
            ExprKind::Cast { ty, expr } => {
                let v = self.eval(expr)?;
                Ok(coerce(v, ty))
            }
        }
    }

    fn eval_all(&mut self, es: &[Expr]) -> R<Vec<Value>> {
        es.iter().map(|e| self.eval(e)).collect()
    }

    fn place(&mut self, target: &Expr) -> R<Place> {
        match &target.kind {
            ExprKind::Name(n) => Ok(Place::Var(n.clone())),
            ExprKind::Index { target, index } => self.elem_place(target, index),
            ExprKind::Field { name, .. } if self.globals.contains_key(name) => Ok(Place::Var(name.clone())),
            _ => Err(self.fail(RuntimeErrorKind::Unsupported, "unsupported assignment target")),
        }
    }

    fn elem_place(&mut self, target: &Expr, index: &Expr) -> R<Place> {
        let arr = self.eval(target)?;
        let i = self.eval(index)?;
        let i = i.as_i64().ok_or_else(|| self.fail(RuntimeErrorKind::Type, "array index must be an integer"))?;
        match &arr {
            Value::Array(a) => {
                let len = a.borrow().len();
                if i < 0 || i as usize >= len {
                    return Err(self.fail(
                        RuntimeErrorKind::IndexOutOfBounds,
                        format!("index {i} out of bounds for length {len}"),
                    ));
                }
                Ok(Place::Elem(arr.clone(), i as usize))
            }
            Value::Null => Err(self.fail(RuntimeErrorKind::NullPointer, "indexing null")),
            other => Err(self.fail(RuntimeErrorKind::Type, format!("indexing {}", other.type_name()))),
        }
    }

    fn read(&self, p: &Place) -> R<Value> {
        match p {
            Place::Var(n) => self
                .slot(n)
                .map(|s| s.value.clone())
                .ok_or_else(|| self.fail(RuntimeErrorKind::Unsupported, format!("unknown variable `{n}`"))),
            Place::Elem(Value::Array(a), i) => Ok(a.borrow()[*i].clone()),
            Place::Elem(..) => unreachable!("element places always hold arrays"),
        }
    }

    fn write(&mut self, p: &Place, v: Value) -> R<()> {
        match p {
            Place::Var(n) => match self.slot_mut(n) {
                Some(s) => {
                    s.value = coerce(v, &s.ty);
                    Ok(())
                }
                None => Err(self.fail(RuntimeErrorKind::Unsupported, format!("unknown variable `{n}`"))),
            },
            Place::Elem(Value::Array(a), i) => {
                let mut a = a.borrow_mut();
                let old = &a[*i];
                a[*i] = coerce_like(old, v);
                Ok(())
            }
            Place::Elem(..) => unreachable!("element places always hold arrays"),
        }
    }

    fn unary(&self, op: UnOp, v: Value) -> R<Value> {
        Ok(match (op, &v) {
            (UnOp::Not, Value::Bool(b)) => Value::Bool(!b),
            (UnOp::Neg, Value::Int(i)) => Value::Int(i.wrapping_neg()),
            (UnOp::Neg, Value::Char(c)) => Value::Int(-(*c as i32)),
            (UnOp::Neg, Value::Long(i)) => Value::Long(i.wrapping_neg()),
            (UnOp::Neg, Value::Double(d)) => Value::Double(-d),
            (UnOp::Plus, Value::Char(c)) => Value::Int(*c as i32),
            (UnOp::Plus, Value::Int(_) | Value::Long(_) | Value::Double(_)) => v,
            (UnOp::BitNot, Value::Int(i)) => Value::Int(!i),
            (UnOp::BitNot, Value::Long(i)) => Value::Long(!i),
            _ => return Err(self.fail(RuntimeErrorKind::Type, format!("bad operand {} for {op:?}", v.type_name()))),
        })
    }

    fn binary(&self, op: BinOp, l: Value, r: Value) -> R<Value> {
        use BinOp::*;
        if op == Add && (matches!(l, Value::Str(_)) || matches!(r, Value::Str(_))) {
            return Ok(Value::str(&format!("{l}{r}")));
        }
        let bad = || self.fail(RuntimeErrorKind::Type, format!("bad operands {} {} {}", l.type_name(), op.symbol(), r.type_name()));
        match op {
            Eq | Ne => {
                let eq = match (&l, &r) {
                    (Value::Bool(a), Value::Bool(b)) => a == b,
                    _ => l.java_equals(&r),
                };
                return Ok(Value::Bool(eq == (op == Eq)));
            }
            BitAnd | BitOr | BitXor => {
                if let (Value::Bool(a), Value::Bool(b)) = (&l, &r) {
                    return Ok(Value::Bool(match op {
                        BitAnd => a & b,
                        BitOr => a | b,
                        _ => a ^ b,
                    }));
                }
            }
            _ => {}
        }
        let is_double = matches!(l, Value::Double(_)) || matches!(r, Value::Double(_));
        let is_long = matches!(l, Value::Long(_)) || matches!(r, Value::Long(_));
        if matches!(op, Lt | Le | Gt | Ge) {
            let (a, b) = (l.as_f64().ok_or_else(bad)?, r.as_f64().ok_or_else(bad)?);
            if !is_double {
                let (a, b) = (l.as_i64().ok_or_else(bad)?, r.as_i64().ok_or_else(bad)?);
                return Ok(Value::Bool(match op {
                    Lt => a < b,
                    Le => a <= b,
                    Gt => a > b,
                    _ => a >= b,
                }));
            }
            return Ok(Value::Bool(match op {
                Lt => a < b,
                Le => a <= b,
                Gt => a > b,
                _ => a >= b,
            }));
        }
        if matches!(op, Shl | Shr | UShr) {
            let n = r.as_i64().ok_or_else(bad)?;
            return Ok(match l {
                Value::Long(a) => Value::Long(match op {
                    Shl => a.wrapping_shl((n & 63) as u32),
                    Shr => a.wrapping_shr((n & 63) as u32),
                    _ => ((a as u64) >> (n & 63)) as i64,
                }),
                _ => {
                    let a = l.as_i64().ok_or_else(bad)? as i32;
                    Value::Int(match op {
                        Shl => a.wrapping_shl((n & 31) as u32),
                        Shr => a.wrapping_shr((n & 31) as u32),
                        _ => ((a as u32) >> (n & 31)) as i32,
                    })
                }
            });
        }
        if is_double {
            let (a, b) = (l.as_f64().ok_or_else(bad)?, r.as_f64().ok_or_else(bad)?);
            return Ok(Value::Double(match op {
                Add => a + b,
                Sub => a - b,
                Mul => a * b,
                Div => a / b,
                Rem => a % b,
                _ => return Err(bad()),
            }));
        }
        let (a, b) = (l.as_i64().ok_or_else(bad)?, r.as_i64().ok_or_else(bad)?);
        if matches!(op, Div | Rem) && b == 0 {
            return Err(self.fail(RuntimeErrorKind::DivisionByZero, "/ by zero"));
        }
        if is_long {
            Ok(Value::Long(match op {
                Add => a.wrapping_add(b),
                Sub => a.wrapping_sub(b),
                Mul => a.wrapping_mul(b),
                Div => a.wrapping_div(b),
                Rem => a.wrapping_rem(b),
                BitAnd => a & b,
                BitOr => a | b,
                BitXor => a ^ b,
                _ => return Err(bad()),
            }))
        } else {
            let (a, b) = (a as i32, b as i32);
            Ok(Value::Int(match op {
                Add => a.wrapping_add(b),
                Sub => a.wrapping_sub(b),
                Mul => a.wrapping_mul(b),
                Div => a.wrapping_div(b),
                Rem => a.wrapping_rem(b),
                BitAnd => a & b,
                BitOr => a | b,
                BitXor => a ^ b,
                _ => return Err(bad()),
            }))
        }
    }

    fn call(&mut self, target: Option<&Expr>, name: &str, args: &[Expr]) -> R<Value> {
        let ast = self.ast;
        let here = self.frames.last().map(|f| f.class);
        let Some(target) = target else {
            let vals = self.eval_all(args)?;
            let call = CallRef { class: None, name: name.to_string(), arity: args.len() };
            return match ast.resolve_call(&call, here) {
                Some(m) => self.invoke(m, vals, args),
                None => Err(self.fail(RuntimeErrorKind::Unsupported, format!("unknown method {name}/{}", args.len()))),
            };
        };
        // System.out.println and friends: evaluate arguments for their effects only
        if let ExprKind::Field { target: sys, name: stream } = &target.kind {
            if matches!(&sys.kind, ExprKind::Name(s) if s == "System") && (stream == "out" || stream == "err") {
                self.eval_all(args)?;
                return Ok(Value::Void);
            }
        }
        if let ExprKind::Name(cls) = &target.kind {
            if self.slot(cls).is_none() {
                let vals = self.eval_all(args)?;
                if ast.classes.iter().any(|c| &c.name == cls) {
                    let call = CallRef { class: Some(cls.clone()), name: name.to_string(), arity: args.len() };
                    return match ast.resolve_call(&call, here) {
                        Some(m) => self.invoke(m, vals, args),
                        None => Err(self.fail(RuntimeErrorKind::Unsupported, format!("unknown method {cls}.{name}"))),
                    };
                }
                return match builtins::call_static(cls, name, &vals) {
                    Some(r) => self.lift(r),
                    None => Err(self.fail(RuntimeErrorKind::Unsupported, format!("unsupported library call {cls}.{name}"))),
                };
            }
        }
        let recv = self.eval(target)?;
        let vals = self.eval_all(args)?;
        if let Value::Object(c) = recv {
            let call = CallRef { class: Some(ast.class(c).name.clone()), name: name.to_string(), arity: args.len() };
            return match ast.resolve_call(&call, here) {
                Some(m) => self.invoke(m, vals, args),
                None => Err(self.fail(RuntimeErrorKind::Unsupported, format!("unknown method {name}"))),
            };
        }
        match builtins::call_method(&recv, name, &vals) {
            Some(r) => self.lift(r),
            None => Err(self.fail(
                RuntimeErrorKind::Unsupported,
                format!("unsupported method {}.{name}/{}", recv.type_name(), args.len()),
            )),
        }
    }
}

/// `extra_dims` counts trailing `[]` without a size; those elements start out null.
fn new_array(elem: &TypeRef, sizes: &[i64], extra_dims: usize) -> Value {
    match sizes {
        [] => Value::Null,
        [n] if extra_dims > 0 => Value::array((0..*n).map(|_| Value::Null).collect()),
        [n] => {
            let mut ty = elem.clone();
            ty.dims = 0;
            Value::array((0..*n).map(|_| Value::default_for(&ty)).collect())
        }
        [n, rest @ ..] => Value::array((0..*n).map(|_| new_array(elem, rest, extra_dims)).collect()),
    }
}
