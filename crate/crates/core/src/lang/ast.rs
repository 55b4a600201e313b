use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StmtId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MethodId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ClassId(pub usize);

impl fmt::Display for StmtId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

/// Raw program text plus its 1-based line view.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceProgram {
    pub id: String,
    pub text: String,
    lines: Vec<String>,
}

impl SourceProgram {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        // split_inclusive keeps terminators so joining reproduces the text exactly
        let lines = text.split_inclusive('\n').map(str::to_owned).collect();
        Self { id: id.into(), text, lines }
    }

    pub fn line_count(&self) -> usize {
        self.lines.len()
    }

    /// Line `n` (1-based) without its terminator.
    pub fn line(&self, n: usize) -> Option<&str> {
        if n == 0 {
            return None;
        }
        self.lines
            .get(n - 1)
            .map(|l| l.strip_suffix('\n').unwrap_or(l))
            .map(|l| l.strip_suffix('\r').unwrap_or(l))
    }

    /// Lines including terminators, joinable back into `text`.
    pub fn raw_lines(&self) -> &[String] {
        &self.lines
    }

    /// The program rendered with `N: ` prefixes, the form handed to models.
    pub fn numbered(&self) -> String {
        let mut out = String::new();
        for n in 1..=self.line_count() {
            out.push_str(&format!("{}: {}\n", n, self.line(n).unwrap_or("")));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeRef {
    pub base: String,
    pub args: Vec<TypeRef>,
    pub dims: usize,
}

impl TypeRef {
    pub fn simple(base: &str) -> Self {
        Self { base: base.to_string(), args: Vec::new(), dims: 0 }
    }

    pub fn is_primitive(&self) -> bool {
        self.dims == 0
            && matches!(
                self.base.as_str(),
                "int" | "long" | "short" | "byte" | "char" | "boolean" | "double" | "float" | "void"
            )
    }

    /// Strings and boxed primitives: reference types whose methods never mutate.
    pub fn is_immutable_object(&self) -> bool {
        self.dims == 0
            && matches!(
                self.base.as_str(),
                "String" | "Integer" | "Long" | "Double" | "Float" | "Boolean" | "Character" | "Short" | "Byte"
            )
    }

    /// Arrays, collections and other objects a callee or method call may modify in place.
    pub fn is_mutable_reference(&self) -> bool {
        !self.is_primitive() && !self.is_immutable_object()
    }
}

impl fmt::Display for TypeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.base)?;
        if !self.args.is_empty() {
            write!(f, "<")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{a}")?;
            }
            write!(f, ">")?;
        }
        for _ in 0..self.dims {
            write!(f, "[]")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Shl,
    Shr,
    UShr,
    BitAnd,
    BitOr,
    BitXor,
    And,
    Or,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        use BinOp::*;
        match self {
            Add => "+",
            Sub => "-",
            Mul => "*",
            Div => "/",
            Rem => "%",
            Shl => "<<",
            Shr => ">>",
            UShr => ">>>",
            BitAnd => "&",
            BitOr => "|",
            BitXor => "^",
            And => "&&",
            Or => "||",
            Eq => "==",
            Ne => "!=",
            Lt => "<",
            Le => "<=",
            Gt => ">",
            Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnOp {
    Neg,
    Plus,
    Not,
    BitNot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expr {
    pub kind: ExprKind,
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ExprKind {
    Int(i64),
    Float(f64),
    Bool(bool),
    Char(char),
    Str(String),
    Null,
    Name(String),
    Field { target: Box<Expr>, name: String },
    Index { target: Box<Expr>, index: Box<Expr> },
    Call { target: Option<Box<Expr>>, name: String, args: Vec<Expr> },
    New { ty: TypeRef, args: Vec<Expr> },
    NewArray { elem: TypeRef, dims: Vec<Expr>, extra_dims: usize },
    ArrayInit(Vec<Expr>),
    Unary { op: UnOp, expr: Box<Expr> },
    IncDec { target: Box<Expr>, increment: bool, prefix: bool },
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Assign { op: Option<BinOp>, target: Box<Expr>, value: Box<Expr> },
    Ternary { cond: Box<Expr>, then: Box<Expr>, els: Box<Expr> },
    Cast { ty: TypeRef, expr: Box<Expr> },
}

impl Expr {
    /// The variable at the base of an lvalue chain: `a` in `a[i][j]` or `a.f`.
    pub fn root_name(&self) -> Option<&str> {
        match &self.kind {
            ExprKind::Name(n) => Some(n),
            ExprKind::Index { target, .. } | ExprKind::Field { target, .. } => target.root_name(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Declarator {
    pub name: String,
    pub extra_dims: usize,
    pub init: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarDecl {
    pub ty: TypeRef,
    pub declarators: Vec<Declarator>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StmtKind {
    Import(String),
    ClassDecl(ClassId),
    MethodDecl(MethodId),
    Field(VarDecl),
    LocalDecl(VarDecl),
    Expr(Expr),
    If { cond: Expr, then_branch: StmtId, else_branch: Option<StmtId> },
    While { cond: Expr, body: StmtId },
    DoWhile { body: StmtId, cond: Expr, cond_line: usize },
    For { init: Vec<StmtId>, cond: Option<Expr>, update: Vec<StmtId>, body: StmtId },
    ForEach { ty: TypeRef, var: String, iterable: Expr, body: StmtId },
    Return(Option<Expr>),
    Break,
    Continue,
    Block(Vec<StmtId>),
    Empty,
}

/// Coarse statement classification used by reports and the taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StmtCategory {
    Decl,
    Assign,
    If,
    Loop,
    Call,
    Return,
    Jump,
    Block,
    Import,
    ClassDecl,
    MethodDecl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Owner {
    Method(MethodId),
    Class(ClassId),
    TopLevel,
}

/// A call to a user-defined method, resolved by name and arity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CallRef {
    pub class: Option<String>,
    pub name: String,
    pub arity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stmt {
    pub id: StmtId,
    pub kind: StmtKind,
    /// Anchor line: where the statement's first token sits.
    pub line: usize,
    pub col: usize,
    /// Last line of the statement proper (for compound statements, of the header).
    pub end_line: usize,
    pub owner: Owner,
    pub defs: BTreeSet<String>,
    pub uses: BTreeSet<String>,
    pub calls: Vec<CallRef>,
}

impl Stmt {
    pub fn category(&self) -> StmtCategory {
        match &self.kind {
            StmtKind::Import(_) => StmtCategory::Import,
            StmtKind::ClassDecl(_) => StmtCategory::ClassDecl,
            StmtKind::MethodDecl(_) => StmtCategory::MethodDecl,
            StmtKind::Field(_) | StmtKind::LocalDecl(_) => StmtCategory::Decl,
            StmtKind::Expr(e) => match &e.kind {
                ExprKind::Call { .. } => StmtCategory::Call,
                _ => StmtCategory::Assign,
            },
            StmtKind::If { .. } => StmtCategory::If,
            StmtKind::While { .. } | StmtKind::DoWhile { .. } | StmtKind::For { .. } | StmtKind::ForEach { .. } => {
                StmtCategory::Loop
            }
            StmtKind::Return(_) => StmtCategory::Return,
            StmtKind::Break | StmtKind::Continue => StmtCategory::Jump,
            StmtKind::Block(_) | StmtKind::Empty => StmtCategory::Block,
        }
    }

    /// Lines a slice containing this statement reports. Everything projects to
    /// the anchor line except do-while, whose condition sits on its own line.
    pub fn slice_lines(&self) -> Vec<usize> {
        match &self.kind {
            StmtKind::DoWhile { cond_line, .. } if *cond_line != self.line => vec![self.line, *cond_line],
            _ => vec![self.line],
        }
    }

    pub fn is_structural(&self) -> bool {
        matches!(self.kind, StmtKind::ClassDecl(_) | StmtKind::MethodDecl(_))
    }

    pub fn method(&self) -> Option<MethodId> {
        match self.owner {
            Owner::Method(m) => Some(m),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub ty: TypeRef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Method {
    pub id: MethodId,
    pub class: ClassId,
    pub name: String,
    pub is_static: bool,
    pub ret: TypeRef,
    pub params: Vec<Param>,
    /// The header statement; doubles as the method's entry node.
    pub decl: StmtId,
    pub body: Vec<StmtId>,
    pub end_line: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDecl {
    pub id: ClassId,
    pub name: String,
    pub decl: StmtId,
    pub fields: Vec<StmtId>,
    pub methods: Vec<MethodId>,
    pub end_line: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ast {
    pub program: SourceProgram,
    pub imports: Vec<StmtId>,
    pub classes: Vec<ClassDecl>,
    pub methods: Vec<Method>,
    pub stmts: Vec<Stmt>,
}

impl Ast {
    pub fn stmt(&self, id: StmtId) -> &Stmt {
        &self.stmts[id.0]
    }

    pub fn method(&self, id: MethodId) -> &Method {
        &self.methods[id.0]
    }

    pub fn class(&self, id: ClassId) -> &ClassDecl {
        &self.classes[id.0]
    }

    pub fn find_method(&self, name: &str) -> Option<&Method> {
        self.methods.iter().find(|m| m.name == name)
    }

    pub fn main_method(&self) -> Option<&Method> {
        self.methods.iter().find(|m| m.name == "main")
    }

    /// Resolve a call to a user method, preferring the caller's class.
    pub fn resolve_call(&self, call: &CallRef, from: Option<ClassId>) -> Option<MethodId> {
        let matches = |m: &&Method| m.name == call.name && m.params.len() == call.arity;
        if let Some(cls) = &call.class {
            return self
                .methods
                .iter()
                .filter(matches)
                .find(|m| &self.class(m.class).name == cls)
                .map(|m| m.id);
        }
        if let Some(c) = from {
            if let Some(m) = self.methods.iter().filter(matches).find(|m| m.class == c) {
                return Some(m.id);
            }
        }
        self.methods.iter().find(matches).map(|m| m.id)
    }

    /// All statements nested inside `id` (inclusive), in textual order.
    pub fn subtree(&self, id: StmtId) -> Vec<StmtId> {
        let mut out = Vec::new();
        self.collect_subtree(id, &mut out);
        out.sort();
        out
    }

    fn collect_subtree(&self, id: StmtId, out: &mut Vec<StmtId>) {
        out.push(id);
        for c in self.children(id) {
            self.collect_subtree(c, out);
        }
    }

    pub fn children(&self, id: StmtId) -> Vec<StmtId> {
        match &self.stmt(id).kind {
            StmtKind::If { then_branch, else_branch, .. } => {
                let mut v = vec![*then_branch];
                v.extend(else_branch.iter().copied());
                v
            }
            StmtKind::While { body, .. } | StmtKind::DoWhile { body, .. } | StmtKind::ForEach { body, .. } => vec![*body],
            StmtKind::For { init, update, body, .. } => {
                let mut v = init.clone();
                v.extend(update.iter().copied());
                v.push(*body);
                v
            }
            StmtKind::Block(b) => b.clone(),
            StmtKind::MethodDecl(m) => self.method(*m).body.clone(),
            _ => Vec::new(),
        }
    }

    /// Statements belonging to a method body, excluding the header.
    pub fn method_stmts(&self, m: MethodId) -> Vec<StmtId> {
        let mut v: Vec<StmtId> = self.method(m).body.iter().flat_map(|s| self.subtree(*s)).collect();
        v.sort();
        v
    }

    pub fn class_of(&self, id: StmtId) -> Option<ClassId> {
        match self.stmt(id).owner {
            Owner::Method(m) => Some(self.method(m).class),
            Owner::Class(c) => Some(c),
            Owner::TopLevel => match self.stmt(id).kind {
                StmtKind::ClassDecl(c) => Some(c),
                _ => None,
            },
        }
    }
}
