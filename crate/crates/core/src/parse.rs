//! The textual model and query languages.
//!
//! Model files (`.tam`) hold global declarations, process templates, and a
//! system line:
//!
//! ```text
//! model  := decl* template+ system
//! decl   := "clock" ids ";"
//!         | "int" "[" const "," const "]" ids ";"
//!         | ("broadcast")? "chan" ids ";"
//! template := "process" NAME "{" locdecl+ "init" NAME ";" edge* "}"
//! locdecl  := ("urgent" | "committed")? "loc" NAME ("inv" conj)? ";"
//! edge   := NAME "->" NAME "{" ("guard" conj ";")?
//!                              ("sync" NAME ("!" | "?") ";")?
//!                              ("assign" updates ";")? "}"
//! system := "system" NAME ("," NAME)* ";"
//! conj   := constraint ("&&" constraint)*
//! constraint := expr ("<" | "<=" | "==" | ">=" | ">") const
//! updates := NAME ":=" expr ("," NAME ":=" expr)*
//! ```
//!
//! Expressions are integer arithmetic (`+`, `-`, `*`, parentheses) over
//! declared names and constants; a constraint's left side must be a single
//! clock, a clock difference, or an integer-variable expression. Comments
//! run from `//` to end of line.
//!
//! Query files (`.tq`) hold one query per non-comment line: `E<> f`,
//! `A[] f`, `E[] f`, `A<> f`, or `f --> g`, where formulas combine atoms
//! (`Instance.location`, `name ⋈ const`, `deadlock`, `true`, `false`) with
//! `not`, `and`, `or`, and parentheses.
//!
//! Parsing is split from elaboration: [`parse_model`] produces a surface
//! AST that [`print_model`] reproduces canonically (parse-print-parse is a
//! fixpoint), and [`elaborate`] resolves names into a [`System`]. Source
//! positions ride along in [`Pos`] values that compare equal everywhere,
//! so AST equality is equality up to formatting.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::network::{Network, NetworkError, System};
use crate::query::{Query, StateFormula};
use crate::ta::{
    Bound, ChannelDecl, ChannelKind, ClockConstraint, CmpOp, Edge, IntExpr, IntGuard, Location,
    LocationKind, TimedAutomatonTemplate, VarDecl,
};

/// A position in the source text, 1-based. Positions are carried for
/// diagnostics only and compare equal to each other, so parsed trees
/// compare structurally.
#[derive(Clone, Copy, Debug, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl PartialEq for Pos {
    fn eq(&self, _: &Pos) -> bool {
        true
    }
}

impl Eq for Pos {}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug)]
pub struct ParseDiagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub severity: Severity,
}

impl ParseDiagnostic {
    fn error(pos: Pos, message: String) -> ParseDiagnostic {
        ParseDiagnostic {
            line: pos.line,
            column: pos.col,
            message,
            severity: Severity::Error,
        }
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {}: {}", self.line, self.column, sev, self.message)
    }
}

// ---------------------------------------------------------------------
// Surface AST.

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Name {
    pub text: String,
    pub pos: Pos,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SourceModel {
    pub decls: Vec<Decl>,
    pub templates: Vec<TemplateDef>,
    pub system: Vec<Name>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Decl {
    Clocks(Vec<Name>),
    Ints { lo: i64, hi: i64, names: Vec<Name> },
    Chans { broadcast: bool, names: Vec<Name> },
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TemplateDef {
    pub name: Name,
    pub locations: Vec<LocDef>,
    pub init: Name,
    pub edges: Vec<EdgeDef>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LocDef {
    pub kind: LocationKind,
    pub name: Name,
    pub invariant: Vec<SrcConstraint>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct EdgeDef {
    pub source: Name,
    pub target: Name,
    pub guard: Vec<SrcConstraint>,
    pub sync: Option<SyncDef>,
    pub assigns: Vec<AssignDef>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SyncDef {
    pub channel: Name,
    pub send: bool,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AssignDef {
    pub target: Name,
    pub value: SrcExpr,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SrcConstraint {
    pub lhs: SrcExpr,
    pub op: CmpOp,
    pub rhs: i64,
    pub pos: Pos,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum SrcExpr {
    Num(i64),
    Name(Name),
    Add(Box<SrcExpr>, Box<SrcExpr>),
    Sub(Box<SrcExpr>, Box<SrcExpr>),
    Mul(Box<SrcExpr>, Box<SrcExpr>),
}

// ---------------------------------------------------------------------
// Lexer, shared by both file kinds.

#[derive(Clone, PartialEq, Eq, Debug)]
enum Tok {
    Name(String),
    Num(i64),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Comma,
    Semi,
    Dot,
    Bang,
    Question,
    Arrow,
    LeadsTo,
    Lt,
    Le,
    EqEq,
    Ge,
    Gt,
    AndAnd,
    Assign,
    Diamond,
    BoxBrackets,
    Plus,
    Minus,
    Star,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Name(n) => return write!(f, "'{}'", n),
            Tok::Num(v) => return write!(f, "'{}'", v),
            Tok::LBrace => "'{'",
            Tok::RBrace => "'}'",
            Tok::LBracket => "'['",
            Tok::RBracket => "']'",
            Tok::LParen => "'('",
            Tok::RParen => "')'",
            Tok::Comma => "','",
            Tok::Semi => "';'",
            Tok::Dot => "'.'",
            Tok::Bang => "'!'",
            Tok::Question => "'?'",
            Tok::Arrow => "'->'",
            Tok::LeadsTo => "'-->'",
            Tok::Lt => "'<'",
            Tok::Le => "'<='",
            Tok::EqEq => "'=='",
            Tok::Ge => "'>='",
            Tok::Gt => "'>'",
            Tok::AndAnd => "'&&'",
            Tok::Assign => "':='",
            Tok::Diamond => "'<>'",
            Tok::BoxBrackets => "'[]'",
            Tok::Plus => "'+'",
            Tok::Minus => "'-'",
            Tok::Star => "'*'",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    pos: Pos,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseDiagnostic> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        let step = |i: &mut usize, col: &mut usize, n: usize| {
            *i += n;
            *col += n;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => step(&mut i, &mut col, 1),
            '/' if chars.get(i + 1) == Some(&'/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                col += i - start;
                let v = text.parse::<i64>().map_err(|_| {
                    ParseDiagnostic::error(pos, format!("number '{}' does not fit in 64 bits", text))
                })?;
                out.push(Token {
                    tok: Tok::Num(v),
                    pos,
                });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                col += i - start;
                out.push(Token {
                    tok: Tok::Name(chars[start..i].iter().collect()),
                    pos,
                });
            }
            _ => {
                let two = |a: char| chars.get(i + 1) == Some(&a);
                let (tok, n) = match c {
                    '{' => (Tok::LBrace, 1),
                    '}' => (Tok::RBrace, 1),
                    '[' if two(']') => (Tok::BoxBrackets, 2),
                    '[' => (Tok::LBracket, 1),
                    ']' => (Tok::RBracket, 1),
                    '(' => (Tok::LParen, 1),
                    ')' => (Tok::RParen, 1),
                    ',' => (Tok::Comma, 1),
                    ';' => (Tok::Semi, 1),
                    '.' => (Tok::Dot, 1),
                    '!' => (Tok::Bang, 1),
                    '?' => (Tok::Question, 1),
                    '+' => (Tok::Plus, 1),
                    '*' => (Tok::Star, 1),
                    '-' if two('-') && chars.get(i + 2) == Some(&'>') => (Tok::LeadsTo, 3),
                    '-' if two('>') => (Tok::Arrow, 2),
                    '-' => (Tok::Minus, 1),
                    '<' if two('=') => (Tok::Le, 2),
                    '<' if two('>') => (Tok::Diamond, 2),
                    '<' => (Tok::Lt, 1),
                    '>' if two('=') => (Tok::Ge, 2),
                    '>' => (Tok::Gt, 1),
                    '=' if two('=') => (Tok::EqEq, 2),
                    '&' if two('&') => (Tok::AndAnd, 2),
                    ':' if two('=') => (Tok::Assign, 2),
                    _ => {
                        return Err(ParseDiagnostic::error(
                            pos,
                            format!("unexpected character '{}'", c),
                        ))
                    }
                };
                step(&mut i, &mut col, n);
                out.push(Token { tok, pos });
            }
        }
    }
    Ok(out)
}

const RESERVED: &[&str] = &[
    "clock", "int", "chan", "broadcast", "process", "loc", "urgent", "committed", "inv", "init",
    "guard", "sync", "assign", "system", "not", "and", "or", "deadlock", "true", "false",
];

// ---------------------------------------------------------------------
// Recursive-descent parser.

struct Parser {
    toks: Vec<Token>,
    i: usize,
    end: Pos,
}

impl Parser {
    fn new(toks: Vec<Token>, end: Pos) -> Parser {
        Parser { toks, i: 0, end }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|t| &t.tok)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.i + 1).map(|t| &t.tok)
    }

    fn pos(&self) -> Pos {
        self.toks.get(self.i).map(|t| t.pos).unwrap_or(self.end)
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Name(n)) if n == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn fail<T>(&self, what: &str) -> Result<T, ParseDiagnostic> {
        let found = match self.peek() {
            Some(t) => format!("{}", t),
            None => "end of input".to_string(),
        };
        Err(ParseDiagnostic::error(
            self.pos(),
            format!("expected {} but found {}", what, found),
        ))
    }

    fn expect(&mut self, tok: Tok) -> Result<Pos, ParseDiagnostic> {
        if self.peek() == Some(&tok) {
            let p = self.pos();
            self.i += 1;
            Ok(p)
        } else {
            self.fail(&format!("{}", tok))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ParseDiagnostic> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.fail(&format!("'{}'", kw))
        }
    }

    fn ident(&mut self, what: &str) -> Result<Name, ParseDiagnostic> {
        match self.peek() {
            Some(Tok::Name(n)) if !RESERVED.contains(&n.as_str()) => {
                let pos = self.pos();
                let text = n.clone();
                self.i += 1;
                Ok(Name { text, pos })
            }
            Some(Tok::Name(n)) => Err(ParseDiagnostic::error(
                self.pos(),
                format!("'{}' is a reserved word and cannot name {}", n, what),
            )),
            _ => self.fail(&format!("a name for {}", what)),
        }
    }

    fn ident_list(&mut self, what: &str) -> Result<Vec<Name>, ParseDiagnostic> {
        let mut names = vec![self.ident(what)?];
        while self.peek() == Some(&Tok::Comma) {
            self.i += 1;
            names.push(self.ident(what)?);
        }
        Ok(names)
    }

    fn signed_const(&mut self) -> Result<i64, ParseDiagnostic> {
        let neg = if self.peek() == Some(&Tok::Minus) {
            self.i += 1;
            true
        } else {
            false
        };
        match self.peek() {
            Some(&Tok::Num(v)) => {
                self.i += 1;
                Ok(if neg { -v } else { v })
            }
            _ => self.fail("an integer constant"),
        }
    }

    // expr := term (("+" | "-") term)* ; term := factor ("*" factor)* ;
    // factor := NUM | "-" NUM | NAME | "(" expr ")"
    fn expr(&mut self) -> Result<SrcExpr, ParseDiagnostic> {
        let mut e = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.i += 1;
                    e = SrcExpr::Add(Box::new(e), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.i += 1;
                    e = SrcExpr::Sub(Box::new(e), Box::new(self.term()?));
                }
                _ => return Ok(e),
            }
        }
    }

    fn term(&mut self) -> Result<SrcExpr, ParseDiagnostic> {
        let mut e = self.factor()?;
        while self.peek() == Some(&Tok::Star) {
            self.i += 1;
            e = SrcExpr::Mul(Box::new(e), Box::new(self.factor()?));
        }
        Ok(e)
    }

    fn factor(&mut self) -> Result<SrcExpr, ParseDiagnostic> {
        match self.peek() {
            Some(&Tok::Num(v)) => {
                self.i += 1;
                Ok(SrcExpr::Num(v))
            }
            Some(Tok::Minus) => {
                self.i += 1;
                match self.peek() {
                    Some(&Tok::Num(v)) => {
                        self.i += 1;
                        Ok(SrcExpr::Num(-v))
                    }
                    _ => self.fail("an integer after '-'"),
                }
            }
            Some(Tok::Name(n)) if !RESERVED.contains(&n.as_str()) => {
                let name = self.ident("an operand")?;
                Ok(SrcExpr::Name(name))
            }
            Some(Tok::LParen) => {
                self.i += 1;
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            _ => self.fail("an expression"),
        }
    }

    fn cmp_op(&mut self) -> Result<CmpOp, ParseDiagnostic> {
        let op = match self.peek() {
            Some(Tok::Lt) => CmpOp::Lt,
            Some(Tok::Le) => CmpOp::Le,
            Some(Tok::EqEq) => CmpOp::Eq,
            Some(Tok::Ge) => CmpOp::Ge,
            Some(Tok::Gt) => CmpOp::Gt,
            _ => return self.fail("a comparison operator"),
        };
        self.i += 1;
        Ok(op)
    }

    fn constraint(&mut self) -> Result<SrcConstraint, ParseDiagnostic> {
        let pos = self.pos();
        let lhs = self.expr()?;
        let op = self.cmp_op()?;
        let rhs = self.signed_const()?;
        Ok(SrcConstraint { lhs, op, rhs, pos })
    }

    fn constraint_conj(&mut self) -> Result<Vec<SrcConstraint>, ParseDiagnostic> {
        let mut out = vec![self.constraint()?];
        while self.peek() == Some(&Tok::AndAnd) {
            self.i += 1;
            out.push(self.constraint()?);
        }
        Ok(out)
    }

    fn decl(&mut self) -> Result<Decl, ParseDiagnostic> {
        if self.eat_kw("clock") {
            let names = self.ident_list("a clock")?;
            self.expect(Tok::Semi)?;
            Ok(Decl::Clocks(names))
        } else if self.eat_kw("int") {
            self.expect(Tok::LBracket)?;
            let lo = self.signed_const()?;
            self.expect(Tok::Comma)?;
            let hi = self.signed_const()?;
            self.expect(Tok::RBracket)?;
            let names = self.ident_list("a variable")?;
            self.expect(Tok::Semi)?;
            Ok(Decl::Ints { lo, hi, names })
        } else if self.eat_kw("broadcast") {
            self.expect_kw("chan")?;
            let names = self.ident_list("a channel")?;
            self.expect(Tok::Semi)?;
            Ok(Decl::Chans {
                broadcast: true,
                names,
            })
        } else if self.eat_kw("chan") {
            let names = self.ident_list("a channel")?;
            self.expect(Tok::Semi)?;
            Ok(Decl::Chans {
                broadcast: false,
                names,
            })
        } else {
            self.fail("a declaration")
        }
    }

    fn loc_decl(&mut self) -> Result<LocDef, ParseDiagnostic> {
        let kind = if self.eat_kw("urgent") {
            LocationKind::Urgent
        } else if self.eat_kw("committed") {
            LocationKind::Committed
        } else {
            LocationKind::Normal
        };
        self.expect_kw("loc")?;
        let name = self.ident("a location")?;
        let invariant = if self.eat_kw("inv") {
            self.constraint_conj()?
        } else {
            Vec::new()
        };
        self.expect(Tok::Semi)?;
        Ok(LocDef {
            kind,
            name,
            invariant,
        })
    }

    fn edge(&mut self) -> Result<EdgeDef, ParseDiagnostic> {
        let source = self.ident("a location")?;
        self.expect(Tok::Arrow)?;
        let target = self.ident("a location")?;
        self.expect(Tok::LBrace)?;
        let guard = if self.eat_kw("guard") {
            let g = self.constraint_conj()?;
            self.expect(Tok::Semi)?;
            g
        } else {
            Vec::new()
        };
        let sync = if self.eat_kw("sync") {
            let channel = self.ident("a channel")?;
            let send = match self.peek() {
                Some(Tok::Bang) => true,
                Some(Tok::Question) => false,
                _ => return self.fail("'!' or '?'"),
            };
            self.i += 1;
            self.expect(Tok::Semi)?;
            Some(SyncDef { channel, send })
        } else {
            None
        };
        let assigns = if self.eat_kw("assign") {
            let mut out = Vec::new();
            loop {
                let target = self.ident("an assignment target")?;
                self.expect(Tok::Assign)?;
                let value = self.expr()?;
                out.push(AssignDef { target, value });
                if self.peek() == Some(&Tok::Comma) {
                    self.i += 1;
                } else {
                    break;
                }
            }
            self.expect(Tok::Semi)?;
            out
        } else {
            Vec::new()
        };
        self.expect(Tok::RBrace)?;
        Ok(EdgeDef {
            source,
            target,
            guard,
            sync,
            assigns,
        })
    }

    fn template(&mut self) -> Result<TemplateDef, ParseDiagnostic> {
        self.expect_kw("process")?;
        let name = self.ident("a process")?;
        self.expect(Tok::LBrace)?;
        let mut locations = vec![self.loc_decl()?];
        while self.at_kw("loc") || self.at_kw("urgent") || self.at_kw("committed") {
            locations.push(self.loc_decl()?);
        }
        self.expect_kw("init")?;
        let init = self.ident("a location")?;
        self.expect(Tok::Semi)?;
        let mut edges = Vec::new();
        while !matches!(self.peek(), Some(Tok::RBrace) | None) {
            edges.push(self.edge()?);
        }
        self.expect(Tok::RBrace)?;
        Ok(TemplateDef {
            name,
            locations,
            init,
            edges,
        })
    }

    fn model(&mut self) -> Result<SourceModel, ParseDiagnostic> {
        let mut decls = Vec::new();
        while self.at_kw("clock") || self.at_kw("int") || self.at_kw("chan") || self.at_kw("broadcast")
        {
            decls.push(self.decl()?);
        }
        let mut templates = Vec::new();
        while self.at_kw("process") {
            templates.push(self.template()?);
        }
        if templates.is_empty() {
            return self.fail("at least one 'process' definition");
        }
        self.expect_kw("system")?;
        let system = self.ident_list("a process")?;
        self.expect(Tok::Semi)?;
        if self.peek().is_some() {
            return self.fail("end of input");
        }
        Ok(SourceModel {
            decls,
            templates,
            system,
        })
    }
}

fn end_pos(text: &str) -> Pos {
    let line = text.lines().count().max(1);
    let col = text.lines().last().map(|l| l.chars().count()).unwrap_or(0) + 1;
    Pos { line, col }
}

/// Parses a model file. Stops at the first syntax error.
pub fn parse_model(text: &str) -> Result<SourceModel, Vec<ParseDiagnostic>> {
    let toks = lex(text).map_err(|d| vec![d])?;
    let mut p = Parser::new(toks, end_pos(text));
    p.model().map_err(|d| vec![d])
}

// ---------------------------------------------------------------------
// Canonical printing.

fn print_expr(e: &SrcExpr, min_level: u8, out: &mut String) {
    let level = match e {
        SrcExpr::Add(..) | SrcExpr::Sub(..) => 0,
        SrcExpr::Mul(..) => 1,
        SrcExpr::Num(_) | SrcExpr::Name(_) => 2,
    };
    if level < min_level {
        out.push('(');
        print_expr(e, 0, out);
        out.push(')');
        return;
    }
    match e {
        SrcExpr::Num(v) => out.push_str(&v.to_string()),
        SrcExpr::Name(n) => out.push_str(&n.text),
        SrcExpr::Add(a, b) => {
            print_expr(a, 0, out);
            out.push_str(" + ");
            print_expr(b, 1, out);
        }
        SrcExpr::Sub(a, b) => {
            print_expr(a, 0, out);
            out.push_str(" - ");
            print_expr(b, 1, out);
        }
        SrcExpr::Mul(a, b) => {
            print_expr(a, 1, out);
            out.push_str(" * ");
            print_expr(b, 2, out);
        }
    }
}

fn op_str(op: CmpOp) -> &'static str {
    match op {
        CmpOp::Lt => "<",
        CmpOp::Le => "<=",
        CmpOp::Eq => "==",
        CmpOp::Ge => ">=",
        CmpOp::Gt => ">",
    }
}

fn print_conj(cs: &[SrcConstraint], out: &mut String) {
    for (i, c) in cs.iter().enumerate() {
        if i > 0 {
            out.push_str(" && ");
        }
        print_expr(&c.lhs, 0, out);
        out.push(' ');
        out.push_str(op_str(c.op));
        out.push(' ');
        out.push_str(&c.rhs.to_string());
    }
}

fn names_list(names: &[Name], out: &mut String) {
    for (i, n) in names.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&n.text);
    }
}

/// Renders a model in the canonical layout. `parse_model(print_model(m))`
/// returns a tree structurally equal to `m`.
pub fn print_model(m: &SourceModel) -> String {
    let mut out = String::new();
    for d in &m.decls {
        match d {
            Decl::Clocks(names) => {
                out.push_str("clock ");
                names_list(names, &mut out);
                out.push_str(";\n");
            }
            Decl::Ints { lo, hi, names } => {
                out.push_str(&format!("int [{}, {}] ", lo, hi));
                names_list(names, &mut out);
                out.push_str(";\n");
            }
            Decl::Chans { broadcast, names } => {
                if *broadcast {
                    out.push_str("broadcast ");
                }
                out.push_str("chan ");
                names_list(names, &mut out);
                out.push_str(";\n");
            }
        }
    }
    for t in &m.templates {
        out.push('\n');
        out.push_str(&format!("process {} {{\n", t.name.text));
        for l in &t.locations {
            out.push_str("    ");
            match l.kind {
                LocationKind::Normal => {}
                LocationKind::Urgent => out.push_str("urgent "),
                LocationKind::Committed => out.push_str("committed "),
            }
            out.push_str("loc ");
            out.push_str(&l.name.text);
            if !l.invariant.is_empty() {
                out.push_str(" inv ");
                print_conj(&l.invariant, &mut out);
            }
            out.push_str(";\n");
        }
        out.push_str(&format!("    init {};\n", t.init.text));
        for e in &t.edges {
            out.push_str(&format!("    {} -> {} {{", e.source.text, e.target.text));
            if !e.guard.is_empty() {
                out.push_str(" guard ");
                print_conj(&e.guard, &mut out);
                out.push(';');
            }
            if let Some(s) = &e.sync {
                out.push_str(&format!(
                    " sync {}{};",
                    s.channel.text,
                    if s.send { "!" } else { "?" }
                ));
            }
            if !e.assigns.is_empty() {
                out.push_str(" assign ");
                for (i, a) in e.assigns.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    out.push_str(&a.target.text);
                    out.push_str(" := ");
                    print_expr(&a.value, 0, &mut out);
                }
                out.push(';');
            }
            out.push_str(" }\n");
        }
        out.push_str("}\n");
    }
    out.push_str("\nsystem ");
    names_list(&m.system, &mut out);
    out.push_str(";\n");
    out
}

// ---------------------------------------------------------------------
// Elaboration: surface AST to a flat system.

struct Scope {
    clocks: HashMap<String, usize>,
    clock_names: Vec<String>,
    vars: HashMap<String, usize>,
    var_decls: Vec<VarDecl>,
    chans: HashMap<String, usize>,
    chan_decls: Vec<ChannelDecl>,
}

fn int_expr(
    e: &SrcExpr,
    sc: &Scope,
    used_vars: &mut BTreeSet<usize>,
    diags: &mut Vec<ParseDiagnostic>,
) -> Option<IntExpr> {
    match e {
        SrcExpr::Num(v) => Some(IntExpr::Const(*v)),
        SrcExpr::Name(n) => {
            if let Some(&v) = sc.vars.get(&n.text) {
                used_vars.insert(v);
                Some(IntExpr::Var(v))
            } else {
                let what = if sc.clocks.contains_key(&n.text) {
                    format!("clock '{}' cannot appear in an integer expression", n.text)
                } else {
                    format!("unknown variable '{}'", n.text)
                };
                diags.push(ParseDiagnostic::error(n.pos, what));
                None
            }
        }
        SrcExpr::Add(a, b) => Some(IntExpr::Add(
            Box::new(int_expr(a, sc, used_vars, diags)?),
            Box::new(int_expr(b, sc, used_vars, diags)?),
        )),
        SrcExpr::Sub(a, b) => Some(IntExpr::Sub(
            Box::new(int_expr(a, sc, used_vars, diags)?),
            Box::new(int_expr(b, sc, used_vars, diags)?),
        )),
        SrcExpr::Mul(a, b) => Some(IntExpr::Mul(
            Box::new(int_expr(a, sc, used_vars, diags)?),
            Box::new(int_expr(b, sc, used_vars, diags)?),
        )),
    }
}

enum Elab {
    Clocks(Vec<ClockConstraint>),
    Int(IntGuard),
}

/// Sorts a surface constraint into clock constraints (equalities split
/// into two bounds) or an integer guard.
fn elaborate_constraint(
    c: &SrcConstraint,
    sc: &Scope,
    used_clocks: &mut BTreeSet<usize>,
    used_vars: &mut BTreeSet<usize>,
    diags: &mut Vec<ParseDiagnostic>,
) -> Option<Elab> {
    let clock_of = |n: &Name| sc.clocks.get(&n.text).copied();
    match &c.lhs {
        SrcExpr::Name(n) if clock_of(n).is_some() => {
            let x = clock_of(n).unwrap();
            used_clocks.insert(x);
            let cs = match c.op {
                CmpOp::Lt => vec![ClockConstraint::below(x, c.rhs)],
                CmpOp::Le => vec![ClockConstraint::at_most(x, c.rhs)],
                CmpOp::Ge => vec![ClockConstraint::at_least(x, c.rhs)],
                CmpOp::Gt => vec![ClockConstraint::above(x, c.rhs)],
                CmpOp::Eq => vec![
                    ClockConstraint::at_most(x, c.rhs),
                    ClockConstraint::at_least(x, c.rhs),
                ],
            };
            Some(Elab::Clocks(cs))
        }
        SrcExpr::Sub(a, b) => match (&**a, &**b) {
            (SrcExpr::Name(na), SrcExpr::Name(nb))
                if clock_of(na).is_some() || clock_of(nb).is_some() =>
            {
                let (x, y) = match (clock_of(na), clock_of(nb)) {
                    (Some(x), Some(y)) => (x, y),
                    _ => {
                        diags.push(ParseDiagnostic::error(
                            c.pos,
                            "a clock can only be compared to a constant or another clock"
                                .to_string(),
                        ));
                        return None;
                    }
                };
                if x == y {
                    diags.push(ParseDiagnostic::error(
                        c.pos,
                        format!("'{}' is compared with itself", na.text),
                    ));
                    return None;
                }
                used_clocks.insert(x);
                used_clocks.insert(y);
                let v = c.rhs;
                let cs = match c.op {
                    CmpOp::Lt => vec![ClockConstraint::new(x, y, Bound::Strict(v))],
                    CmpOp::Le => vec![ClockConstraint::new(x, y, Bound::Weak(v))],
                    CmpOp::Ge => vec![ClockConstraint::new(y, x, Bound::Weak(-v))],
                    CmpOp::Gt => vec![ClockConstraint::new(y, x, Bound::Strict(-v))],
                    CmpOp::Eq => vec![
                        ClockConstraint::new(x, y, Bound::Weak(v)),
                        ClockConstraint::new(y, x, Bound::Weak(-v)),
                    ],
                };
                Some(Elab::Clocks(cs))
            }
            _ => {
                let expr = int_expr(&c.lhs, sc, used_vars, diags)?;
                Some(Elab::Int(IntGuard {
                    expr,
                    op: c.op,
                    rhs: c.rhs,
                }))
            }
        },
        _ => {
            let expr = int_expr(&c.lhs, sc, used_vars, diags)?;
            Some(Elab::Int(IntGuard {
                expr,
                op: c.op,
                rhs: c.rhs,
            }))
        }
    }
}

/// Resolves names and builds the flat system: clocks, variables, and
/// channels live in global namespaces; the system line instantiates
/// templates in order.
pub fn elaborate(m: &SourceModel) -> Result<System, Vec<ParseDiagnostic>> {
    let mut diags = Vec::new();
    let mut sc = Scope {
        clocks: HashMap::new(),
        clock_names: Vec::new(),
        vars: HashMap::new(),
        var_decls: Vec::new(),
        chans: HashMap::new(),
        chan_decls: Vec::new(),
    };
    let mut taken: HashMap<String, Pos> = HashMap::new();
    let declare = |n: &Name, taken: &mut HashMap<String, Pos>, diags: &mut Vec<ParseDiagnostic>| {
        if taken.insert(n.text.clone(), n.pos).is_some() {
            diags.push(ParseDiagnostic::error(
                n.pos,
                format!("'{}' is declared twice", n.text),
            ));
            false
        } else {
            true
        }
    };
    for d in &m.decls {
        match d {
            Decl::Clocks(names) => {
                for n in names {
                    if declare(n, &mut taken, &mut diags) {
                        sc.clock_names.push(n.text.clone());
                        sc.clocks.insert(n.text.clone(), sc.clock_names.len());
                    }
                }
            }
            Decl::Ints { lo, hi, names } => {
                if lo > hi {
                    diags.push(ParseDiagnostic::error(
                        names[0].pos,
                        format!("empty range [{}, {}]", lo, hi),
                    ));
                    continue;
                }
                // Initial value: zero clamped into the declared range.
                let init = 0.clamp(*lo, *hi);
                for n in names {
                    if declare(n, &mut taken, &mut diags) {
                        sc.vars.insert(n.text.clone(), sc.var_decls.len());
                        sc.var_decls.push(VarDecl {
                            name: n.text.clone(),
                            lo: *lo,
                            hi: *hi,
                            init,
                        });
                    }
                }
            }
            Decl::Chans { broadcast, names } => {
                for n in names {
                    if declare(n, &mut taken, &mut diags) {
                        sc.chans.insert(n.text.clone(), sc.chan_decls.len());
                        sc.chan_decls.push(ChannelDecl {
                            name: n.text.clone(),
                            kind: if *broadcast {
                                ChannelKind::Broadcast
                            } else {
                                ChannelKind::Binary
                            },
                        });
                    }
                }
            }
        }
    }

    let mut templates: HashMap<String, TimedAutomatonTemplate> = HashMap::new();
    for t in &m.templates {
        if templates.contains_key(&t.name.text) {
            diags.push(ParseDiagnostic::error(
                t.name.pos,
                format!("process '{}' is defined twice", t.name.text),
            ));
            continue;
        }
        let mut loc_ids: HashMap<String, usize> = HashMap::new();
        let mut used_clocks: BTreeSet<usize> = BTreeSet::new();
        let mut used_vars: BTreeSet<usize> = BTreeSet::new();
        let mut locations = Vec::new();
        for l in &t.locations {
            if loc_ids.insert(l.name.text.clone(), locations.len()).is_some() {
                diags.push(ParseDiagnostic::error(
                    l.name.pos,
                    format!("location '{}' is declared twice", l.name.text),
                ));
                continue;
            }
            let mut inv = Vec::new();
            for c in &l.invariant {
                match elaborate_constraint(c, &sc, &mut used_clocks, &mut used_vars, &mut diags) {
                    Some(Elab::Clocks(cs)) => {
                        for cc in cs {
                            if cc.is_invariant_form() {
                                inv.push(cc);
                            } else {
                                diags.push(ParseDiagnostic::error(
                                    c.pos,
                                    "an invariant must bound a clock from above or relate two clocks"
                                        .to_string(),
                                ));
                            }
                        }
                    }
                    Some(Elab::Int(_)) => {
                        diags.push(ParseDiagnostic::error(
                            c.pos,
                            "invariants take clock constraints only".to_string(),
                        ));
                    }
                    None => {}
                }
            }
            let mut loc = Location::new(&l.name.text).with_invariant(inv);
            loc.kind = l.kind;
            locations.push(loc);
        }
        let initial = match loc_ids.get(&t.init.text) {
            Some(&i) => i,
            None => {
                diags.push(ParseDiagnostic::error(
                    t.init.pos,
                    format!("unknown location '{}'", t.init.text),
                ));
                0
            }
        };
        let mut edges = Vec::new();
        for e in &t.edges {
            let loc_of = |n: &Name, diags: &mut Vec<ParseDiagnostic>| match loc_ids.get(&n.text) {
                Some(&i) => Some(i),
                None => {
                    diags.push(ParseDiagnostic::error(
                        n.pos,
                        format!("unknown location '{}'", n.text),
                    ));
                    None
                }
            };
            let (Some(source), Some(target)) =
                (loc_of(&e.source, &mut diags), loc_of(&e.target, &mut diags))
            else {
                continue;
            };
            let mut edge = Edge::new(source, target);
            for c in &e.guard {
                match elaborate_constraint(c, &sc, &mut used_clocks, &mut used_vars, &mut diags) {
                    Some(Elab::Clocks(cs)) => {
                        for cc in cs {
                            edge = edge.guard(cc);
                        }
                    }
                    Some(Elab::Int(g)) => {
                        edge = edge.guard_int(g);
                    }
                    None => {}
                }
            }
            if let Some(s) = &e.sync {
                match sc.chans.get(&s.channel.text) {
                    Some(&ch) => {
                        edge = if s.send {
                            edge.send(ch)
                        } else {
                            edge.receive(ch)
                        };
                    }
                    None => {
                        diags.push(ParseDiagnostic::error(
                            s.channel.pos,
                            format!("unknown channel '{}'", s.channel.text),
                        ));
                    }
                }
            }
            for a in &e.assigns {
                if let Some(&x) = sc.clocks.get(&a.target.text) {
                    used_clocks.insert(x);
                    match a.value {
                        SrcExpr::Num(v) if v >= 0 => {
                            edge = edge.reset(x, v);
                        }
                        _ => {
                            diags.push(ParseDiagnostic::error(
                                a.target.pos,
                                "clocks can only be set to a non-negative constant".to_string(),
                            ));
                        }
                    }
                } else if let Some(&v) = sc.vars.get(&a.target.text) {
                    used_vars.insert(v);
                    if let Some(expr) = int_expr(&a.value, &sc, &mut used_vars, &mut diags) {
                        edge = edge.assign(v, expr);
                    }
                } else {
                    diags.push(ParseDiagnostic::error(
                        a.target.pos,
                        format!("unknown assignment target '{}'", a.target.text),
                    ));
                }
            }
            edges.push(edge);
        }
        templates.insert(
            t.name.text.clone(),
            TimedAutomatonTemplate {
                name: t.name.text.clone(),
                locations,
                initial,
                edges,
                clocks: used_clocks.into_iter().collect(),
                vars: used_vars.into_iter().collect(),
            },
        );
    }
    let mut instances = Vec::new();
    for n in &m.system {
        match templates.get(&n.text) {
            Some(t) => instances.push(t.clone()),
            None => {
                diags.push(ParseDiagnostic::error(
                    n.pos,
                    format!("unknown process '{}'", n.text),
                ));
            }
        }
    }

    if diags.is_empty() {
        Ok(System {
            clock_names: sc.clock_names,
            vars: sc.var_decls,
            channels: sc.chan_decls,
            templates: instances,
        })
    } else {
        Err(diags)
    }
}

/// Parses, elaborates, and validates a model file in one step.
pub fn load_model(text: &str) -> Result<Network, Vec<ParseDiagnostic>> {
    let m = parse_model(text)?;
    let sys = elaborate(&m)?;
    Network::new(sys).map_err(|e| {
        vec![ParseDiagnostic {
            line: 1,
            column: 1,
            message: match e {
                NetworkError::Invalid(msg) => msg,
                other => other.to_string(),
            },
            severity: Severity::Error,
        }]
    })
}

// ---------------------------------------------------------------------
// Query files.

struct QueryParser<'a> {
    p: Parser,
    sys: &'a System,
}

impl QueryParser<'_> {
    fn formula(&mut self) -> Result<StateFormula, ParseDiagnostic> {
        let mut f = self.conj_formula()?;
        while self.p.eat_kw("or") {
            f = f.or(self.conj_formula()?);
        }
        Ok(f)
    }

    fn conj_formula(&mut self) -> Result<StateFormula, ParseDiagnostic> {
        let mut f = self.unary_formula()?;
        while self.p.eat_kw("and") {
            f = f.and(self.unary_formula()?);
        }
        Ok(f)
    }

    fn unary_formula(&mut self) -> Result<StateFormula, ParseDiagnostic> {
        if self.p.eat_kw("not") {
            Ok(self.unary_formula()?.not())
        } else {
            self.atom()
        }
    }

    fn atom(&mut self) -> Result<StateFormula, ParseDiagnostic> {
        if self.p.eat_kw("deadlock") {
            return Ok(StateFormula::Deadlock);
        }
        if self.p.eat_kw("true") {
            return Ok(StateFormula::True);
        }
        if self.p.eat_kw("false") {
            return Ok(StateFormula::False);
        }
        if self.p.peek() == Some(&Tok::LParen) {
            self.p.i += 1;
            let f = self.formula()?;
            self.p.expect(Tok::RParen)?;
            return Ok(f);
        }
        let name = self.p.ident("a process, clock, or variable")?;
        if self.p.peek() == Some(&Tok::Dot) {
            self.p.i += 1;
            let loc = self.p.ident("a location")?;
            let instance = self
                .sys
                .templates
                .iter()
                .position(|t| t.name == name.text)
                .ok_or_else(|| {
                    ParseDiagnostic::error(name.pos, format!("unknown process '{}'", name.text))
                })?;
            let loc_id = self.sys.templates[instance]
                .locations
                .iter()
                .position(|l| l.name == loc.text)
                .ok_or_else(|| {
                    ParseDiagnostic::error(
                        loc.pos,
                        format!("process '{}' has no location '{}'", name.text, loc.text),
                    )
                })?;
            return Ok(StateFormula::Location {
                instance,
                loc: loc_id,
            });
        }
        let op = self.p.cmp_op()?;
        let rhs = self.p.signed_const()?;
        if let Some(clock) = self.sys.clock_index(&name.text) {
            Ok(StateFormula::ClockCmp { clock, op, rhs })
        } else if let Some(var) = self.sys.var_index(&name.text) {
            Ok(StateFormula::IntCmp { var, op, rhs })
        } else {
            Err(ParseDiagnostic::error(
                name.pos,
                format!("unknown clock or variable '{}'", name.text),
            ))
        }
    }

    fn query(&mut self) -> Result<Query, ParseDiagnostic> {
        let prefix = match (self.p.peek(), self.p.peek2()) {
            (Some(Tok::Name(n)), Some(Tok::Diamond)) if n == "E" => Some(0),
            (Some(Tok::Name(n)), Some(Tok::BoxBrackets)) if n == "A" => Some(1),
            (Some(Tok::Name(n)), Some(Tok::BoxBrackets)) if n == "E" => Some(2),
            (Some(Tok::Name(n)), Some(Tok::Diamond)) if n == "A" => Some(3),
            _ => None,
        };
        let q = match prefix {
            Some(k) => {
                self.p.i += 2;
                let f = self.formula()?;
                match k {
                    0 => Query::ExistsEventually(f),
                    1 => Query::AlwaysGlobally(f),
                    2 => Query::ExistsGlobally(f),
                    _ => Query::AlwaysEventually(f),
                }
            }
            None => {
                let a = self.formula()?;
                self.p.expect(Tok::LeadsTo)?;
                let b = self.formula()?;
                Query::LeadsTo(a, b)
            }
        };
        if self.p.peek().is_some() {
            return self.p.fail("end of query");
        }
        Ok(q)
    }
}

/// Parses a query file against an elaborated system: one query per
/// non-comment line. Diagnostics from all lines are collected.
pub fn parse_queries(text: &str, sys: &System) -> Result<Vec<Query>, Vec<ParseDiagnostic>> {
    let toks = match lex(text) {
        Ok(t) => t,
        Err(d) => return Err(vec![d]),
    };
    let mut queries = Vec::new();
    let mut diags = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        let line = toks[i].pos.line;
        let mut j = i;
        while j < toks.len() && toks[j].pos.line == line {
            j += 1;
        }
        let line_toks = toks[i..j].to_vec();
        i = j;
        let end = line_toks.last().map(|t| t.pos).unwrap_or_default();
        let mut qp = QueryParser {
            p: Parser::new(line_toks, end),
            sys,
        };
        match qp.query() {
            Ok(q) => queries.push(q),
            Err(d) => diags.push(d),
        }
    }
    if diags.is_empty() {
        Ok(queries)
    } else {
        Err(diags)
    }
}
