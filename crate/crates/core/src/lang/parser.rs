use super::ast::*;
use super::lexer::{tokenize, TokKind, Token};
use super::ParseError;

const MODIFIERS: &[&str] = &[
    "public", "private", "protected", "static", "final", "abstract", "synchronized", "transient", "volatile", "strictfp",
];

const PRIMITIVES: &[&str] = &["int", "long", "short", "byte", "char", "boolean", "double", "float", "void"];

const RESERVED: &[&str] = &[
    "if", "else", "while", "do", "for", "return", "break", "continue", "new", "class", "import", "package", "true",
    "false", "null", "switch", "case", "default", "try", "catch", "finally", "throw", "throws", "this", "super",
    "instanceof", "interface", "enum", "extends", "implements", "static", "public", "private", "protected", "final",
];

/// Constructs outside the subset, named in the error so users know what to rewrite.
fn unsupported_keyword(word: &str) -> Option<&'static str> {
    Some(match word {
        "try" | "catch" | "finally" => "try/catch",
        "throw" => "throw statement",
        "switch" | "case" => "switch statement",
        "interface" => "interface declaration",
        "enum" => "enum declaration",
        "instanceof" => "instanceof",
        "this" | "super" => "instance member access (`this`/`super`)",
        "assert" => "assert statement",
        "goto" => "goto",
        "record" => "record declaration",
        "yield" => "yield",
        _ => return None,
    })
}

pub fn parse(id: &str, source: &str) -> Result<Ast, ParseError> {
    let toks = tokenize(source)?;
    for t in &toks {
        match &t.kind {
            TokKind::Punct("->") => return Err(ParseError::unsupported(t.line, t.col, "lambda expression")),
            TokKind::Punct("::") => return Err(ParseError::unsupported(t.line, t.col, "method reference")),
            _ => {}
        }
    }
    let mut p = Parser {
        toks,
        pos: 0,
        ast: Ast {
            program: SourceProgram::new(id, source),
            imports: Vec::new(),
            classes: Vec::new(),
            methods: Vec::new(),
            stmts: Vec::new(),
        },
        owner: Owner::TopLevel,
    };
    p.compilation_unit()?;
    let mut ast = p.ast;
    super::resolve::resolve(&mut ast)?;
    Ok(ast)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    ast: Ast,
    owner: Owner,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, k: usize) -> &Token {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn prev_line(&self) -> usize {
        self.toks[self.pos.saturating_sub(1)].line
    }

    fn at_punct(&self, p: &str) -> bool {
        self.peek().is_punct(p)
    }

    fn at_ident(&self, s: &str) -> bool {
        self.peek().is_ident(s)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.at_punct(p) {
            self.next();
            true
        } else {
            false
        }
    }

    fn eat_ident(&mut self, s: &str) -> bool {
        if self.at_ident(s) {
            self.next();
            true
        } else {
            false
        }
    }

    fn err_expected(&self, what: &str) -> ParseError {
        let t = self.peek();
        if let TokKind::Ident(w) = &t.kind {
            if let Some(c) = unsupported_keyword(w) {
                return ParseError::unsupported(t.line, t.col, c);
            }
        }
        ParseError::new(t.line, t.col, format!("expected {what}, found {}", t.describe()))
    }

    fn expect_punct(&mut self, p: &str) -> PResult<Token> {
        if self.at_punct(p) {
            Ok(self.next())
        } else {
            Err(self.err_expected(&format!("`{p}`")))
        }
    }

    fn expect_ident(&mut self) -> PResult<(String, Token)> {
        let t = self.peek().clone();
        match &t.kind {
            TokKind::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                self.next();
                Ok((s.clone(), t))
            }
            _ => Err(self.err_expected("identifier")),
        }
    }

    fn alloc(&mut self, tok: &Token) -> StmtId {
        let id = StmtId(self.ast.stmts.len());
        self.ast.stmts.push(Stmt {
            id,
            kind: StmtKind::Empty,
            line: tok.line,
            col: tok.col,
            end_line: tok.line,
            owner: self.owner,
            defs: Default::default(),
            uses: Default::default(),
            calls: Vec::new(),
        });
        id
    }

    fn finish(&mut self, id: StmtId, kind: StmtKind, end_line: usize) -> StmtId {
        let s = &mut self.ast.stmts[id.0];
        s.kind = kind;
        s.end_line = end_line.max(s.line);
        id
    }

    // ---------------------------------------------------------------- units

    fn compilation_unit(&mut self) -> PResult<()> {
        if self.eat_ident("package") {
            self.qualified_name()?;
            self.expect_punct(";")?;
        }
        while self.at_ident("import") {
            let t = self.next();
            let id = self.alloc(&t);
            let mut name = String::new();
            if self.eat_ident("static") {
                name.push_str("static ");
            }
            name.push_str(&self.qualified_name()?);
            if self.eat_punct(".") {
                self.expect_punct("*")?;
                name.push_str(".*");
            }
            self.expect_punct(";")?;
            let end = self.prev_line();
            self.finish(id, StmtKind::Import(name), end);
            self.ast.imports.push(id);
        }
        if matches!(self.peek().kind, TokKind::Eof) {
            return Err(self.err_expected("class declaration"));
        }
        while !matches!(self.peek().kind, TokKind::Eof) {
            self.class_decl()?;
        }
        Ok(())
    }

    fn qualified_name(&mut self) -> PResult<String> {
        let (mut s, _) = self.expect_ident()?;
        while self.at_punct(".") && matches!(self.peek_at(1).kind, TokKind::Ident(_)) && !self.peek_at(1).is_ident("*") {
            self.next();
            let (part, _) = self.expect_ident()?;
            s.push('.');
            s.push_str(&part);
        }
        Ok(s)
    }

    fn skip_annotations(&mut self) -> PResult<()> {
        while self.at_punct("@") {
            self.next();
            self.qualified_name()?;
            if self.at_punct("(") {
                self.skip_balanced("(", ")")?;
            }
        }
        Ok(())
    }

    fn skip_balanced(&mut self, open: &str, close: &str) -> PResult<()> {
        self.expect_punct(open)?;
        let mut depth = 1;
        while depth > 0 {
            if matches!(self.peek().kind, TokKind::Eof) {
                return Err(self.err_expected(&format!("`{close}`")));
            }
            let t = self.next();
            if t.is_punct(open) {
                depth += 1;
            } else if t.is_punct(close) {
                depth -= 1;
            }
        }
        Ok(())
    }

    /// Returns (first token, saw `static`).
    fn modifiers(&mut self) -> PResult<(Token, bool)> {
        self.skip_annotations()?;
        let first = self.peek().clone();
        let mut is_static = false;
        loop {
            self.skip_annotations()?;
            match &self.peek().kind {
                TokKind::Ident(w) if MODIFIERS.contains(&w.as_str()) => {
                    if w == "static" {
                        is_static = true;
                    }
                    self.next();
                }
                _ => break,
            }
        }
        Ok((first, is_static))
    }

    fn class_decl(&mut self) -> PResult<()> {
        let (first, _) = self.modifiers()?;
        if !self.at_ident("class") {
            return Err(self.err_expected("`class`"));
        }
        self.next();
        let saved_owner = self.owner;
        self.owner = Owner::TopLevel;
        let decl = self.alloc(&first);
        self.owner = saved_owner;
        let (name, _) = self.expect_ident()?;
        if self.at_punct("<") {
            return Err(ParseError::unsupported(self.peek().line, self.peek().col, "generic class declaration"));
        }
        if self.eat_ident("extends") {
            self.parse_type()?;
        }
        if self.eat_ident("implements") {
            self.parse_type()?;
            while self.eat_punct(",") {
                self.parse_type()?;
            }
        }
        let header_end = self.peek().line;
        self.expect_punct("{")?;
        let cid = ClassId(self.ast.classes.len());
        self.ast.classes.push(ClassDecl {
            id: cid,
            name,
            decl,
            fields: Vec::new(),
            methods: Vec::new(),
            end_line: 0,
        });
        self.finish(decl, StmtKind::ClassDecl(cid), header_end);

        while !self.at_punct("}") {
            if matches!(self.peek().kind, TokKind::Eof) {
                return Err(self.err_expected("`}`"));
            }
            if self.eat_punct(";") {
                continue;
            }
            self.member(cid)?;
        }
        let close = self.next();
        self.ast.classes[cid.0].end_line = close.line;
        Ok(())
    }

    fn member(&mut self, cid: ClassId) -> PResult<()> {
        let save = self.pos;
        let (first, is_static) = self.modifiers()?;
        if self.at_ident("class") {
            self.pos = save;
            return self.class_decl();
        }
        if self.at_punct("{") {
            return Err(ParseError::unsupported(first.line, first.col, "initializer block"));
        }
        if self.at_punct("<") {
            return Err(ParseError::unsupported(self.peek().line, self.peek().col, "generic method"));
        }
        // constructor: Name '('
        if matches!(&self.peek().kind, TokKind::Ident(n) if *n == self.ast.classes[cid.0].name)
            && self.peek_at(1).is_punct("(")
        {
            let t = self.peek().clone();
            return Err(ParseError::unsupported(t.line, t.col, "constructor declaration"));
        }
        let ty = self.parse_type()?;
        let (name, _) = self.expect_ident()?;
        if self.at_punct("(") {
            self.method_decl(cid, first, is_static, ty, name)
        } else {
            self.owner = Owner::Class(cid);
            let id = self.alloc(&first);
            let decl = self.var_decl_rest(ty, name)?;
            self.expect_punct(";")?;
            let end = self.prev_line();
            self.finish(id, StmtKind::Field(decl), end);
            self.ast.classes[cid.0].fields.push(id);
            self.owner = Owner::TopLevel;
            Ok(())
        }
    }

    fn method_decl(&mut self, cid: ClassId, first: Token, is_static: bool, ret: TypeRef, name: String) -> PResult<()> {
        let mid = MethodId(self.ast.methods.len());
        self.owner = Owner::Method(mid);
        let decl = self.alloc(&first);
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if !self.at_punct(")") {
            loop {
                self.skip_annotations()?;
                self.eat_ident("final");
                let mut ty = self.parse_type()?;
                if self.eat_punct("...") {
                    ty.dims += 1;
                }
                let (pname, _) = self.expect_ident()?;
                while self.at_punct("[") {
                    self.next();
                    self.expect_punct("]")?;
                    ty.dims += 1;
                }
                params.push(Param { name: pname, ty });
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        if self.eat_ident("throws") {
            self.parse_type()?;
            while self.eat_punct(",") {
                self.parse_type()?;
            }
        }
        let header_end = self.prev_line();
        self.ast.methods.push(Method {
            id: mid,
            class: cid,
            name,
            is_static,
            ret,
            params,
            decl,
            body: Vec::new(),
            end_line: 0,
        });
        self.finish(decl, StmtKind::MethodDecl(mid), header_end);
        if self.at_punct(";") {
            let t = self.peek().clone();
            return Err(ParseError::unsupported(t.line, t.col, "abstract method"));
        }
        self.expect_punct("{")?;
        let mut body = Vec::new();
        while !self.at_punct("}") {
            if matches!(self.peek().kind, TokKind::Eof) {
                return Err(self.err_expected("`}`"));
            }
            if let Some(s) = self.statement()? {
                body.push(s);
            }
        }
        let close = self.next();
        let m = &mut self.ast.methods[mid.0];
        m.body = body;
        m.end_line = close.line;
        self.ast.classes[cid.0].methods.push(mid);
        self.owner = Owner::TopLevel;
        Ok(())
    }

    // ---------------------------------------------------------------- types

    fn parse_type(&mut self) -> PResult<TypeRef> {
        let (mut base, _) = match &self.peek().kind {
            TokKind::Ident(s) if PRIMITIVES.contains(&s.as_str()) => {
                let s = s.clone();
                let t = self.next();
                (s, t)
            }
            _ => self.expect_ident()?,
        };
        while self.at_punct(".") && matches!(self.peek_at(1).kind, TokKind::Ident(_)) {
            self.next();
            let (part, _) = self.expect_ident()?;
            base.push('.');
            base.push_str(&part);
        }
        let mut args = Vec::new();
        if self.at_punct("<") {
            self.next();
            if !self.at_punct(">") {
                loop {
                    if self.eat_punct("?") {
                        if self.eat_ident("extends") || self.eat_ident("super") {
                            args.push(self.parse_type()?);
                        } else {
                            args.push(TypeRef::simple("Object"));
                        }
                    } else {
                        args.push(self.parse_type()?);
                    }
                    if !self.eat_punct(",") {
                        break;
                    }
                }
            }
            self.close_angle()?;
        }
        let mut dims = 0;
        while self.at_punct("[") && self.peek_at(1).is_punct("]") {
            self.next();
            self.next();
            dims += 1;
        }
        Ok(TypeRef { base, args, dims })
    }

    /// Consume one `>`, splitting `>>`/`>>>` tokens that close nested generics.
    fn close_angle(&mut self) -> PResult<()> {
        let t = self.peek().clone();
        match t.kind {
            TokKind::Punct(">") => {
                self.next();
                Ok(())
            }
            TokKind::Punct(">>") => {
                self.toks[self.pos].kind = TokKind::Punct(">");
                self.toks[self.pos].col += 1;
                Ok(())
            }
            TokKind::Punct(">>>") => {
                self.toks[self.pos].kind = TokKind::Punct(">>");
                self.toks[self.pos].col += 1;
                Ok(())
            }
            _ => Err(self.err_expected("`>`")),
        }
    }

    /// Speculatively parse `Type Ident` introducing a declaration.
    fn try_decl_head(&mut self) -> Option<(TypeRef, String)> {
        let save = self.pos;
        let saved_toks = self.toks[self.pos..(self.pos + 8).min(self.toks.len())].to_vec();
        let restore = |p: &mut Parser| {
            p.pos = save;
            for (k, t) in saved_toks.iter().enumerate() {
                p.toks[save + k] = t.clone();
            }
        };
        if !matches!(self.peek().kind, TokKind::Ident(_)) {
            return None;
        }
        let ty = match self.parse_type() {
            Ok(t) => t,
            Err(_) => {
                restore(self);
                return None;
            }
        };
        let name = match &self.peek().kind {
            TokKind::Ident(n) if !RESERVED.contains(&n.as_str()) => n.clone(),
            _ => {
                restore(self);
                return None;
            }
        };
        let follow = self.peek_at(1);
        if ["=", ";", ",", "[", ":"].iter().any(|p| follow.is_punct(p)) {
            self.next();
            Some((ty, name))
        } else {
            restore(self);
            None
        }
    }

    fn var_decl_rest(&mut self, ty: TypeRef, first_name: String) -> PResult<VarDecl> {
        let mut declarators = Vec::new();
        let mut name = first_name;
        loop {
            let mut extra_dims = 0;
            while self.at_punct("[") {
                self.next();
                self.expect_punct("]")?;
                extra_dims += 1;
            }
            let init = if self.eat_punct("=") {
                if self.at_punct("{") {
                    Some(self.array_init()?)
                } else {
                    Some(self.expr()?)
                }
            } else {
                None
            };
            declarators.push(Declarator { name, extra_dims, init });
            if !self.eat_punct(",") {
                break;
            }
            name = self.expect_ident()?.0;
        }
        Ok(VarDecl { ty, declarators })
    }

    fn array_init(&mut self) -> PResult<Expr> {
        let t = self.expect_punct("{")?;
        let mut items = Vec::new();
        while !self.at_punct("}") {
            if self.at_punct("{") {
                items.push(self.array_init()?);
            } else {
                items.push(self.expr()?);
            }
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect_punct("}")?;
        Ok(Expr { kind: ExprKind::ArrayInit(items), line: t.line, col: t.col })
    }

    // ----------------------------------------------------------- statements

    fn block(&mut self) -> PResult<StmtId> {
        let t = self.peek().clone();
        let id = self.alloc(&t);
        self.expect_punct("{")?;
        let mut body = Vec::new();
        while !self.at_punct("}") {
            if matches!(self.peek().kind, TokKind::Eof) {
                return Err(self.err_expected("`}`"));
            }
            if let Some(s) = self.statement()? {
                body.push(s);
            }
        }
        self.next();
        Ok(self.finish(id, StmtKind::Block(body), t.line))
    }

    /// A statement used as a branch or loop body. Never `None`.
    fn sub_statement(&mut self) -> PResult<StmtId> {
        let t = self.peek().clone();
        match self.statement()? {
            Some(s) => Ok(s),
            None => {
                let id = self.alloc(&t);
                Ok(self.finish(id, StmtKind::Block(Vec::new()), t.line))
            }
        }
    }

    /// Parses one statement; bare `;` yields `None`.
    fn statement(&mut self) -> PResult<Option<StmtId>> {
        let t = self.peek().clone();
        if t.is_punct("{") {
            return self.block().map(Some);
        }
        if t.is_punct(";") {
            self.next();
            return Ok(None);
        }
        if t.is_punct("@") {
            self.skip_annotations()?;
            return self.statement();
        }
        if let TokKind::Ident(w) = &t.kind {
            if let Some(c) = unsupported_keyword(w) {
                return Err(ParseError::unsupported(t.line, t.col, c));
            }
            if matches!(self.peek_at(1).kind, TokKind::Punct(":")) && !RESERVED.contains(&w.as_str()) {
                return Err(ParseError::unsupported(t.line, t.col, "labeled statement"));
            }
            match w.as_str() {
                "if" => return self.if_stmt().map(Some),
                "while" => return self.while_stmt().map(Some),
                "do" => return self.do_stmt().map(Some),
                "for" => return self.for_stmt().map(Some),
                "return" => {
                    let id = self.alloc(&t);
                    self.next();
                    let e = if self.at_punct(";") { None } else { Some(self.expr()?) };
                    self.expect_punct(";")?;
                    let end = self.prev_line();
                    return Ok(Some(self.finish(id, StmtKind::Return(e), end)));
                }
                "break" | "continue" => {
                    let id = self.alloc(&t);
                    self.next();
                    if matches!(self.peek().kind, TokKind::Ident(_)) {
                        return Err(ParseError::unsupported(t.line, t.col, "labeled jump"));
                    }
                    self.expect_punct(";")?;
                    let kind = if w == "break" { StmtKind::Break } else { StmtKind::Continue };
                    let end = self.prev_line();
                    return Ok(Some(self.finish(id, kind, end)));
                }
                "class" => return Err(ParseError::unsupported(t.line, t.col, "local class declaration")),
                "else" => return Err(ParseError::new(t.line, t.col, "`else` without matching `if`")),
                _ => {}
            }
        }
        let id = self.alloc(&t);
        while self.at_ident("final") {
            self.next();
        }
        if let Some((ty, name)) = self.try_decl_head() {
            let d = self.var_decl_rest(ty, name)?;
            self.expect_punct(";")?;
            let end = self.prev_line();
            return Ok(Some(self.finish(id, StmtKind::LocalDecl(d), end)));
        }
        let e = self.expr()?;
        if !is_statement_expr(&e) {
            return Err(ParseError::new(e.line, e.col, "not a statement"));
        }
        self.expect_punct(";")?;
        let end = self.prev_line();
        Ok(Some(self.finish(id, StmtKind::Expr(e), end)))
    }

    fn paren_cond(&mut self) -> PResult<Expr> {
        self.expect_punct("(")?;
        let e = self.expr()?;
        self.expect_punct(")")?;
        Ok(e)
    }

    fn if_stmt(&mut self) -> PResult<StmtId> {
        let t = self.next();
        let id = self.alloc(&t);
        let cond = self.paren_cond()?;
        let header_end = self.prev_line();
        let then_branch = self.sub_statement()?;
        let else_branch = if self.eat_ident("else") { Some(self.sub_statement()?) } else { None };
        Ok(self.finish(id, StmtKind::If { cond, then_branch, else_branch }, header_end))
    }

    fn while_stmt(&mut self) -> PResult<StmtId> {
        let t = self.next();
        let id = self.alloc(&t);
        let cond = self.paren_cond()?;
        let header_end = self.prev_line();
        let body = self.sub_statement()?;
        Ok(self.finish(id, StmtKind::While { cond, body }, header_end))
    }

    fn do_stmt(&mut self) -> PResult<StmtId> {
        let t = self.next();
        let id = self.alloc(&t);
        let body = self.sub_statement()?;
        if !self.at_ident("while") {
            return Err(self.err_expected("`while`"));
        }
        let cond_line = self.next().line;
        let cond = self.paren_cond()?;
        self.expect_punct(";")?;
        Ok(self.finish(id, StmtKind::DoWhile { body, cond, cond_line }, t.line))
    }

    fn for_stmt(&mut self) -> PResult<StmtId> {
        let t = self.next();
        let id = self.alloc(&t);
        self.expect_punct("(")?;
        // enhanced for: `for (T x : e)`
        let save = self.pos;
        while self.at_ident("final") {
            self.next();
        }
        if let Some((ty, var)) = self.try_decl_head() {
            if self.eat_punct(":") {
                let iterable = self.expr()?;
                self.expect_punct(")")?;
                let header_end = self.prev_line();
                let body = self.sub_statement()?;
                return Ok(self.finish(id, StmtKind::ForEach { ty, var, iterable, body }, header_end));
            }
        }
        self.pos = save;

        let mut init = Vec::new();
        if !self.at_punct(";") {
            let it = self.peek().clone();
            let sid = self.alloc(&it);
            while self.at_ident("final") {
                self.next();
            }
            if let Some((ty, name)) = self.try_decl_head() {
                let d = self.var_decl_rest(ty, name)?;
                let end = self.prev_line();
                init.push(self.finish(sid, StmtKind::LocalDecl(d), end));
            } else {
                let e = self.expr()?;
                let end = self.prev_line();
                init.push(self.finish(sid, StmtKind::Expr(e), end));
                while self.eat_punct(",") {
                    let it = self.peek().clone();
                    let sid = self.alloc(&it);
                    let e = self.expr()?;
                    let end = self.prev_line();
                    init.push(self.finish(sid, StmtKind::Expr(e), end));
                }
            }
        }
        self.expect_punct(";")?;
        let cond = if self.at_punct(";") { None } else { Some(self.expr()?) };
        self.expect_punct(";")?;
        let mut update = Vec::new();
        if !self.at_punct(")") {
            loop {
                let ut = self.peek().clone();
                let sid = self.alloc(&ut);
                let e = self.expr()?;
                let end = self.prev_line();
                update.push(self.finish(sid, StmtKind::Expr(e), end));
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        let header_end = self.prev_line();
        let body = self.sub_statement()?;
        Ok(self.finish(id, StmtKind::For { init, cond, update, body }, header_end))
    }

    // ---------------------------------------------------------- expressions

    fn expr(&mut self) -> PResult<Expr> {
        self.assignment()
    }

    fn assignment(&mut self) -> PResult<Expr> {
        let lhs = self.ternary()?;
        let op = match &self.peek().kind {
            TokKind::Punct(p) => match *p {
                "=" => Some(None),
                "+=" => Some(Some(BinOp::Add)),
                "-=" => Some(Some(BinOp::Sub)),
                "*=" => Some(Some(BinOp::Mul)),
                "/=" => Some(Some(BinOp::Div)),
                "%=" => Some(Some(BinOp::Rem)),
                "&=" => Some(Some(BinOp::BitAnd)),
                "|=" => Some(Some(BinOp::BitOr)),
                "^=" => Some(Some(BinOp::BitXor)),
                "<<=" => Some(Some(BinOp::Shl)),
                ">>=" => Some(Some(BinOp::Shr)),
                ">>>=" => Some(Some(BinOp::UShr)),
                _ => None,
            },
            _ => None,
        };
        let Some(op) = op else { return Ok(lhs) };
        if !is_lvalue(&lhs) {
            return Err(ParseError::new(lhs.line, lhs.col, "invalid assignment target"));
        }
        self.next();
        let value = if self.at_punct("{") { self.array_init()? } else { self.assignment()? };
        Ok(Expr {
            line: lhs.line,
            col: lhs.col,
            kind: ExprKind::Assign { op, target: Box::new(lhs), value: Box::new(value) },
        })
    }

    fn ternary(&mut self) -> PResult<Expr> {
        let cond = self.binary(0)?;
        if !self.eat_punct("?") {
            return Ok(cond);
        }
        let then = self.ternary()?;
        self.expect_punct(":")?;
        let els = self.ternary()?;
        Ok(Expr {
            line: cond.line,
            col: cond.col,
            kind: ExprKind::Ternary { cond: Box::new(cond), then: Box::new(then), els: Box::new(els) },
        })
    }

    fn binop_at(&self) -> Option<(BinOp, u8)> {
        let TokKind::Punct(p) = &self.peek().kind else { return None };
        use BinOp::*;
        Some(match *p {
            "||" => (Or, 1),
            "&&" => (And, 2),
            "|" => (BitOr, 3),
            "^" => (BitXor, 4),
            "&" => (BitAnd, 5),
            "==" => (Eq, 6),
            "!=" => (Ne, 6),
            "<" => (Lt, 7),
            "<=" => (Le, 7),
            ">" => (Gt, 7),
            ">=" => (Ge, 7),
            "<<" => (Shl, 8),
            ">>" => (Shr, 8),
            ">>>" => (UShr, 8),
            "+" => (Add, 9),
            "-" => (Sub, 9),
            "*" => (Mul, 10),
            "/" => (Div, 10),
            "%" => (Rem, 10),
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.at_ident("instanceof") {
                let t = self.peek().clone();
                return Err(ParseError::unsupported(t.line, t.col, "instanceof"));
            }
            let Some((op, prec)) = self.binop_at() else { break };
            if prec <= min_prec {
                break;
            }
            self.next();
            let rhs = self.binary(prec)?;
            lhs = Expr {
                line: lhs.line,
                col: lhs.col,
                kind: ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) },
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let t = self.peek().clone();
        let mk = |kind| Expr { kind, line: t.line, col: t.col };
        match &t.kind {
            TokKind::Punct("-") => {
                self.next();
                // fold negative literals so `-9223372036854775808`-style bounds stay literal
                let e = self.unary()?;
                Ok(match e.kind {
                    ExprKind::Int(v) => mk(ExprKind::Int(v.wrapping_neg())),
                    ExprKind::Float(v) => mk(ExprKind::Float(-v)),
                    _ => mk(ExprKind::Unary { op: UnOp::Neg, expr: Box::new(e) }),
                })
            }
            TokKind::Punct("+") => {
                self.next();
                let e = self.unary()?;
                Ok(mk(ExprKind::Unary { op: UnOp::Plus, expr: Box::new(e) }))
            }
            TokKind::Punct("!") => {
                self.next();
                let e = self.unary()?;
                Ok(mk(ExprKind::Unary { op: UnOp::Not, expr: Box::new(e) }))
            }
            TokKind::Punct("~") => {
                self.next();
                let e = self.unary()?;
                Ok(mk(ExprKind::Unary { op: UnOp::BitNot, expr: Box::new(e) }))
            }
            TokKind::Punct(p @ ("++" | "--")) => {
                let increment = *p == "++";
                self.next();
                let e = self.unary()?;
                if !is_lvalue(&e) {
                    return Err(ParseError::new(e.line, e.col, "invalid increment target"));
                }
                Ok(mk(ExprKind::IncDec { target: Box::new(e), increment, prefix: true }))
            }
            TokKind::Punct("(") if self.is_cast() => {
                self.next();
                let ty = self.parse_type()?;
                self.expect_punct(")")?;
                let e = self.unary()?;
                Ok(mk(ExprKind::Cast { ty, expr: Box::new(e) }))
            }
            _ => self.postfix(),
        }
    }

    fn is_cast(&self) -> bool {
        let TokKind::Ident(name) = &self.peek_at(1).kind else { return false };
        let mut k = 2;
        while self.peek_at(k).is_punct("[") && self.peek_at(k + 1).is_punct("]") {
            k += 2;
        }
        if !self.peek_at(k).is_punct(")") {
            return false;
        }
        if PRIMITIVES.contains(&name.as_str()) {
            return true;
        }
        let boxed = ["String", "Integer", "Long", "Double", "Character", "Boolean", "Object"];
        if !boxed.contains(&name.as_str()) {
            return false;
        }
        let after = self.peek_at(k + 1);
        matches!(
            after.kind,
            TokKind::Ident(_) | TokKind::Int(_) | TokKind::Float(_) | TokKind::Char(_) | TokKind::Str(_)
        ) || after.is_punct("(")
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        loop {
            if self.at_punct(".") {
                self.next();
                let (name, nt) = match &self.peek().kind {
                    TokKind::Ident(n) => {
                        let n = n.clone();
                        (n, self.next())
                    }
                    _ => return Err(self.err_expected("member name")),
                };
                if self.at_punct("(") {
                    let args = self.args()?;
                    e = Expr {
                        line: e.line,
                        col: e.col,
                        kind: ExprKind::Call { target: Some(Box::new(e)), name, args },
                    };
                } else {
                    let _ = nt;
                    e = Expr { line: e.line, col: e.col, kind: ExprKind::Field { target: Box::new(e), name } };
                }
            } else if self.at_punct("[") {
                self.next();
                let index = self.expr()?;
                self.expect_punct("]")?;
                e = Expr {
                    line: e.line,
                    col: e.col,
                    kind: ExprKind::Index { target: Box::new(e), index: Box::new(index) },
                };
            } else if self.at_punct("++") || self.at_punct("--") {
                let increment = self.at_punct("++");
                if !is_lvalue(&e) {
                    break;
                }
                self.next();
                e = Expr {
                    line: e.line,
                    col: e.col,
                    kind: ExprKind::IncDec { target: Box::new(e), increment, prefix: false },
                };
            } else {
                break;
            }
        }
        Ok(e)
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if !self.at_punct(")") {
            loop {
                args.push(self.expr()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        Ok(args)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let t = self.peek().clone();
        let mk = |kind| Expr { kind, line: t.line, col: t.col };
        match &t.kind {
            TokKind::Int(v) => {
                self.next();
                Ok(mk(ExprKind::Int(*v)))
            }
            TokKind::Float(v) => {
                self.next();
                Ok(mk(ExprKind::Float(*v)))
            }
            TokKind::Char(c) => {
                self.next();
                Ok(mk(ExprKind::Char(*c)))
            }
            TokKind::Str(s) => {
                self.next();
                Ok(mk(ExprKind::Str(s.clone())))
            }
            TokKind::Punct("(") => {
                self.next();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            TokKind::Ident(w) => match w.as_str() {
                "true" => {
                    self.next();
                    Ok(mk(ExprKind::Bool(true)))
                }
                "false" => {
                    self.next();
                    Ok(mk(ExprKind::Bool(false)))
                }
                "null" => {
                    self.next();
                    Ok(mk(ExprKind::Null))
                }
                "new" => {
                    self.next();
                    self.new_expr(&t)
                }
                _ if unsupported_keyword(w).is_some() => Err(self.err_expected("expression")),
                _ if RESERVED.contains(&w.as_str()) => Err(self.err_expected("expression")),
                _ => {
                    let name = w.clone();
                    self.next();
                    if self.at_punct("(") {
                        let args = self.args()?;
                        Ok(mk(ExprKind::Call { target: None, name, args }))
                    } else {
                        Ok(mk(ExprKind::Name(name)))
                    }
                }
            },
            _ => Err(self.err_expected("expression")),
        }
    }

    fn new_expr(&mut self, t: &Token) -> PResult<Expr> {
        let mk = |kind| Expr { kind, line: t.line, col: t.col };
        // element type without array dims
        let (mut base, _) = match &self.peek().kind {
            TokKind::Ident(s) if PRIMITIVES.contains(&s.as_str()) => {
                let s = s.clone();
                let tk = self.next();
                (s, tk)
            }
            _ => self.expect_ident()?,
        };
        while self.at_punct(".") {
            self.next();
            base.push('.');
            base.push_str(&self.expect_ident()?.0);
        }
        let mut targs = Vec::new();
        if self.eat_punct("<") {
            if !self.at_punct(">") {
                loop {
                    targs.push(self.parse_type()?);
                    if !self.eat_punct(",") {
                        break;
                    }
                }
            }
            self.close_angle()?;
        }
        let elem = TypeRef { base, args: targs, dims: 0 };
        if self.at_punct("(") {
            let args = self.args()?;
            if self.at_punct("{") {
                let b = self.peek().clone();
                return Err(ParseError::unsupported(b.line, b.col, "anonymous class"));
            }
            return Ok(mk(ExprKind::New { ty: elem, args }));
        }
        if !self.at_punct("[") {
            return Err(self.err_expected("`(` or `[`"));
        }
        let mut dims = Vec::new();
        let mut extra_dims = 0;
        while self.at_punct("[") {
            self.next();
            if self.at_punct("]") {
                self.next();
                extra_dims += 1;
            } else {
                if extra_dims > 0 {
                    return Err(self.err_expected("`]`"));
                }
                dims.push(self.expr()?);
                self.expect_punct("]")?;
            }
        }
        if dims.is_empty() {
            if !self.at_punct("{") {
                return Err(self.err_expected("array initializer"));
            }
            // `new int[]{...}` is just an initializer with a declared element type
            return self.array_init();
        }
        Ok(mk(ExprKind::NewArray { elem, dims, extra_dims }))
    }
}

fn is_lvalue(e: &Expr) -> bool {
    matches!(e.kind, ExprKind::Name(_) | ExprKind::Index { .. } | ExprKind::Field { .. })
}

fn is_statement_expr(e: &Expr) -> bool {
    matches!(
        e.kind,
        ExprKind::Assign { .. } | ExprKind::IncDec { .. } | ExprKind::Call { .. } | ExprKind::New { .. }
    )
}
