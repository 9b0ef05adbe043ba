//! Recursive-descent parser plus the semantic checks that define the subset.

use std::collections::{HashMap, HashSet};

use crate::ast::{min_width, Assign, Ast, BinOp, CaseItem, ClockedBlock, Decl, Direction, Expr, LValue, Stmt};
use crate::error::{Result, RtlError, Span};
use crate::lexer::{tokenize, Keyword, Tok, Token};

const MAX_WIDTH: u32 = 64;

/// Parses one module of the supported subset.
pub fn parse(source: &str) -> Result<Ast> {
    let tokens = tokenize(source)?;
    let mut p = Parser { tokens, pos: 0 };
    let mut ast = p.module()?;
    ast.clock = ast.blocks.first().map(|b| b.clock.clone());
    if let Some(t) = p.tokens.get(p.pos) {
        return Err(RtlError::syntax(
            t.span,
            "only a single module per file is supported",
        ));
    }
    check(&ast)?;
    Ok(ast)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

fn unsupported(kw: Keyword) -> Option<&'static str> {
    use Keyword::*;
    Some(match kw {
        Initial => "`initial` blocks are not supported",
        Task | Function => "tasks and functions are not supported",
        Parameter | Localparam => "parameters are not supported",
        Generate => "generate blocks are not supported",
        Integer => "integer variables are not supported",
        For | While => "loops are not supported",
        Negedge => "negedge clocking is not supported",
        Casez | Casex => "casez/casex are not supported",
        Inout => "inout ports are not supported",
        _ => return None,
    })
}

impl Parser {
    fn span(&self) -> Span {
        self.tokens
            .get(self.pos)
            .or_else(|| self.tokens.last())
            .map(|t| t.span)
            .unwrap_or_default()
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, off: usize) -> Option<&Tok> {
        self.tokens.get(self.pos + off).map(|t| &t.tok)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).map(|t| t.tok.clone());
        self.pos += 1;
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(RtlError::syntax(self.span(), msg))
    }

    /// Rejects out-of-subset constructs with a message naming them.
    fn reject_unsupported(&self) -> Result<()> {
        match self.peek() {
            Some(Tok::Keyword(k)) => {
                if let Some(msg) = unsupported(*k) {
                    return self.err(msg);
                }
            }
            Some(Tok::System(name)) => {
                return self.err(format!("system task `{name}` is not supported"));
            }
            Some(Tok::Sym("#")) => return self.err("`#` delays are not supported"),
            _ => {}
        }
        Ok(())
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(x)) if *x == s)
    }

    fn is_kw(&self, k: Keyword) -> bool {
        matches!(self.peek(), Some(Tok::Keyword(x)) if *x == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: Keyword) -> bool {
        if self.is_kw(k) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<()> {
        self.reject_unsupported()?;
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {}", self.describe()))
        }
    }

    fn expect_kw(&mut self, k: Keyword) -> Result<()> {
        self.reject_unsupported()?;
        if self.eat_kw(k) {
            Ok(())
        } else {
            self.err(format!("expected `{}`, found {}", k.as_str(), self.describe()))
        }
    }

    fn describe(&self) -> String {
        match self.peek() {
            Some(t) => format!("`{t}`"),
            None => "end of input".to_string(),
        }
    }

    fn ident(&mut self) -> Result<String> {
        self.reject_unsupported()?;
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.err(format!("expected identifier, found {}", self.describe())),
        }
    }

    fn number(&mut self) -> Result<u64> {
        match self.peek() {
            Some(Tok::Number { value, .. }) => {
                let v = *value;
                self.pos += 1;
                Ok(v)
            }
            _ => self.err(format!("expected number, found {}", self.describe())),
        }
    }

    /// Optional `[msb:0]`, returning the width.
    fn range(&mut self) -> Result<u32> {
        if !self.eat_sym("[") {
            return Ok(1);
        }
        let msb = self.number()?;
        self.expect_sym(":")?;
        let lsb = self.number()?;
        self.expect_sym("]")?;
        if lsb != 0 {
            return self.err("ranges must have the form [msb:0]");
        }
        if msb >= MAX_WIDTH as u64 {
            return self.err(format!("width {} exceeds the 64-bit limit", msb + 1));
        }
        Ok(msb as u32 + 1)
    }

    fn module(&mut self) -> Result<Ast> {
        self.reject_unsupported()?;
        self.expect_kw(Keyword::Module)?;
        let name = self.ident()?;
        if self.is_sym("#") {
            return self.err("parameters are not supported");
        }
        let mut ast = Ast {
            name,
            ports: Vec::new(),
            decls: Vec::new(),
            assigns: Vec::new(),
            blocks: Vec::new(),
            clock: None,
        };
        let mut spans: HashMap<String, Span> = HashMap::new();
        if self.eat_sym("(") {
            if !self.eat_sym(")") {
                self.port_list(&mut ast, &mut spans)?;
                self.expect_sym(")")?;
            }
        }
        self.expect_sym(";")?;

        loop {
            self.reject_unsupported()?;
            match self.peek() {
                Some(Tok::Keyword(Keyword::Endmodule)) => {
                    self.pos += 1;
                    break;
                }
                Some(Tok::Keyword(Keyword::Wire)) | Some(Tok::Keyword(Keyword::Reg)) => {
                    self.net_decl(&mut ast, &mut spans)?;
                }
                Some(Tok::Keyword(Keyword::Assign)) => {
                    self.pos += 1;
                    loop {
                        let span = self.span();
                        let targets = self.lvalue()?;
                        if self.is_sym("<=") {
                            return self.err("continuous assignment must use `=`");
                        }
                        self.expect_sym("=")?;
                        let expr = self.expr()?;
                        ast.assigns.push(Assign { targets, expr, span });
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                    self.expect_sym(";")?;
                }
                Some(Tok::Keyword(Keyword::Always)) => {
                    self.pos += 1;
                    let block = self.always()?;
                    ast.blocks.push(block);
                }
                Some(Tok::Keyword(Keyword::Input)) | Some(Tok::Keyword(Keyword::Output)) => {
                    return self.err("port declarations must appear in the module header");
                }
                None => return self.err("missing `endmodule`"),
                _ => return self.err(format!("unexpected {} in module body", self.describe())),
            }
        }
        Ok(ast)
    }

    fn declare(&self, ast: &mut Ast, spans: &mut HashMap<String, Span>, decl: Decl, span: Span) -> Result<()> {
        if spans.contains_key(&decl.name) {
            return Err(RtlError::syntax(span, format!("`{}` declared twice", decl.name)));
        }
        spans.insert(decl.name.clone(), span);
        ast.decls.push(decl);
        Ok(())
    }

    fn port_list(&mut self, ast: &mut Ast, spans: &mut HashMap<String, Span>) -> Result<()> {
        let mut current: Option<(Direction, bool, u32)> = None;
        loop {
            self.reject_unsupported()?;
            if self.eat_kw(Keyword::Input) {
                self.eat_kw(Keyword::Wire);
                if self.is_kw(Keyword::Reg) {
                    return self.err("inputs cannot be declared reg");
                }
                let w = self.range()?;
                current = Some((Direction::Input, false, w));
            } else if self.eat_kw(Keyword::Output) {
                let is_reg = if self.eat_kw(Keyword::Reg) {
                    true
                } else {
                    self.eat_kw(Keyword::Wire);
                    false
                };
                let w = self.range()?;
                current = Some((Direction::Output, is_reg, w));
            }
            let Some((dir, is_reg, width)) = current else {
                return self.err("non-ANSI port lists are not supported; declare direction in the header");
            };
            let span = self.span();
            let name = self.ident()?;
            ast.ports.push(name.clone());
            self.declare(ast, spans, Decl { name, width, dir: Some(dir), is_reg }, span)?;
            if !self.eat_sym(",") {
                return Ok(());
            }
        }
    }

    fn net_decl(&mut self, ast: &mut Ast, spans: &mut HashMap<String, Span>) -> Result<()> {
        let is_reg = matches!(self.bump(), Some(Tok::Keyword(Keyword::Reg)));
        let width = self.range()?;
        loop {
            let span = self.span();
            let name = self.ident()?;
            if self.is_sym("=") {
                return self.err("declaration initializers are not supported; use `assign`");
            }
            if self.is_sym("[") {
                return self.err("memories (arrays) are not supported");
            }
            self.declare(ast, spans, Decl { name, width, dir: None, is_reg }, span)?;
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym(";")
    }

    fn always(&mut self) -> Result<ClockedBlock> {
        self.expect_sym("@")?;
        if self.is_sym("*") {
            return self.err("combinational always blocks are not supported; use `assign`");
        }
        self.expect_sym("(")?;
        if self.is_sym("*") {
            return self.err("combinational always blocks are not supported; use `assign`");
        }
        self.expect_kw(Keyword::Posedge)?;
        let clock = self.ident()?;
        if matches!(self.peek(), Some(Tok::Ident(s)) if s == "or") || self.is_sym(",") {
            return self.err("multiple clocks or asynchronous resets are not supported");
        }
        self.expect_sym(")")?;
        let body = self.stmt()?;
        Ok(ClockedBlock { clock, body })
    }

    fn stmt(&mut self) -> Result<Stmt> {
        self.reject_unsupported()?;
        if self.eat_kw(Keyword::Begin) {
            if self.is_sym(":") {
                return self.err("named blocks are not supported");
            }
            let mut body = Vec::new();
            while !self.eat_kw(Keyword::End) {
                if self.peek().is_none() {
                    return self.err("missing `end`");
                }
                body.push(self.stmt()?);
            }
            return Ok(Stmt::Block(body));
        }
        if self.eat_kw(Keyword::If) {
            self.expect_sym("(")?;
            let cond = self.expr()?;
            self.expect_sym(")")?;
            let then = Box::new(self.stmt()?);
            let els = if self.eat_kw(Keyword::Else) {
                Some(Box::new(self.stmt()?))
            } else {
                None
            };
            return Ok(Stmt::If { cond, then, els });
        }
        if self.eat_kw(Keyword::Case) {
            self.expect_sym("(")?;
            let subject = self.expr()?;
            self.expect_sym(")")?;
            let mut items = Vec::new();
            let mut seen_default = false;
            while !self.eat_kw(Keyword::Endcase) {
                self.reject_unsupported()?;
                if self.peek().is_none() {
                    return self.err("missing `endcase`");
                }
                if self.eat_kw(Keyword::Default) {
                    if seen_default {
                        return self.err("duplicate default item");
                    }
                    seen_default = true;
                    self.eat_sym(":");
                    let body = self.stmt()?;
                    items.push(CaseItem { labels: Vec::new(), body });
                    continue;
                }
                let mut labels = vec![self.expr()?];
                while self.eat_sym(",") {
                    labels.push(self.expr()?);
                }
                self.expect_sym(":")?;
                let body = self.stmt()?;
                items.push(CaseItem { labels, body });
            }
            return Ok(Stmt::Case { subject, items });
        }
        if self.eat_sym(";") {
            return Ok(Stmt::Block(Vec::new()));
        }
        let targets = self.lvalue()?;
        if self.is_sym("=") {
            return self.err("blocking assignment `=` in a clocked block is not supported; use `<=`");
        }
        self.expect_sym("<=")?;
        let expr = self.expr()?;
        self.expect_sym(";")?;
        Ok(Stmt::NonBlocking { targets, expr })
    }

    fn lvalue(&mut self) -> Result<LValue> {
        if self.eat_sym("{") {
            let mut names = vec![self.ident()?];
            while self.eat_sym(",") {
                names.push(self.ident()?);
            }
            self.expect_sym("}")?;
            Ok(names)
        } else {
            let name = self.ident()?;
            if self.is_sym("[") {
                return self.err("part-select assignment targets are not supported");
            }
            Ok(vec![name])
        }
    }

    // Precedence, loosest first: ?: | ^ & == < (+ -) ~
    fn expr(&mut self) -> Result<Expr> {
        let cond = self.or_expr()?;
        if self.eat_sym("?") {
            let t = self.expr()?;
            self.expect_sym(":")?;
            let f = self.expr()?;
            return Ok(Expr::Ternary(Box::new(cond), Box::new(t), Box::new(f)));
        }
        Ok(cond)
    }

    fn reject_op(&self) -> Result<()> {
        if let Some(Tok::Sym(s)) = self.peek() {
            if matches!(
                *s,
                "!=" | "===" | "!==" | "&&" | "||" | "<<" | ">>" | "<<<" | ">>>" | ">" | ">=" | "*" | "/" | "%" | "~&" | "~|" | "~^" | "^~"
            ) {
                return self.err(format!("operator `{s}` is not supported"));
            }
        }
        Ok(())
    }

    fn or_expr(&mut self) -> Result<Expr> {
        let mut lhs = self.xor_expr()?;
        while self.eat_sym("|") {
            let rhs = self.xor_expr()?;
            lhs = Expr::binary(BinOp::Or, lhs, rhs);
        }
        self.reject_op()?;
        Ok(lhs)
    }

    fn xor_expr(&mut self) -> Result<Expr> {
        let mut lhs = self.and_expr()?;
        while self.eat_sym("^") {
            let rhs = self.and_expr()?;
            lhs = Expr::binary(BinOp::Xor, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr> {
        let mut lhs = self.eq_expr()?;
        while self.eat_sym("&") {
            let rhs = self.eq_expr()?;
            lhs = Expr::binary(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn eq_expr(&mut self) -> Result<Expr> {
        let mut lhs = self.rel_expr()?;
        while self.eat_sym("==") {
            let rhs = self.rel_expr()?;
            lhs = Expr::binary(BinOp::Eq, lhs, rhs);
        }
        Ok(lhs)
    }

    fn rel_expr(&mut self) -> Result<Expr> {
        let mut lhs = self.add_expr()?;
        // `<` here is unambiguous: `<=` only appears at statement level
        while self.eat_sym("<") {
            let rhs = self.add_expr()?;
            lhs = Expr::binary(BinOp::Lt, lhs, rhs);
        }
        Ok(lhs)
    }

    fn add_expr(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat_sym("+") {
                let rhs = self.unary()?;
                lhs = Expr::binary(BinOp::Add, lhs, rhs);
            } else if self.eat_sym("-") {
                let rhs = self.unary()?;
                lhs = Expr::binary(BinOp::Sub, lhs, rhs);
            } else {
                self.reject_op()?;
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat_sym("~") {
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        if let Some(Tok::Sym(s)) = self.peek() {
            if matches!(*s, "!" | "-" | "&" | "|" | "^" | "~&" | "~|" | "~^" | "^~") {
                return self.err(format!("unary operator `{s}` is not supported"));
            }
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr> {
        self.reject_unsupported()?;
        match self.peek().cloned() {
            Some(Tok::Number { width, value }) => {
                self.pos += 1;
                Ok(Expr::Lit {
                    width: width.unwrap_or_else(|| min_width(value)),
                    value,
                })
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.eat_sym("[") {
                    let hi = self.number()?;
                    if self.eat_sym(":") {
                        let lo = self.number()?;
                        self.expect_sym("]")?;
                        if hi < lo {
                            return self.err("part-select must be [msb:lsb] with msb >= lsb");
                        }
                        return Ok(Expr::Slice {
                            name,
                            msb: hi as u32,
                            lsb: lo as u32,
                        });
                    }
                    self.expect_sym("]")?;
                    return Ok(Expr::Index { name, bit: hi as u32 });
                }
                Ok(Expr::Ident(name))
            }
            Some(Tok::Sym("(")) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Some(Tok::Sym("{")) => {
                self.pos += 1;
                if matches!(self.peek(), Some(Tok::Number { .. })) && matches!(self.peek_at(1), Some(Tok::Sym("{"))) {
                    return self.err("replication is not supported");
                }
                let mut parts = vec![self.expr()?];
                while self.eat_sym(",") {
                    parts.push(self.expr()?);
                }
                self.expect_sym("}")?;
                Ok(Expr::Concat(parts))
            }
            _ => self.err(format!("expected expression, found {}", self.describe())),
        }
    }
}

/// Semantic rules of the subset that the grammar alone cannot express.
fn check(ast: &Ast) -> Result<()> {
    let at = Span::default();
    let declared: HashMap<&str, &Decl> = ast.decls.iter().map(|d| (d.name.as_str(), d)).collect();

    // clocks
    let clocks: HashSet<&str> = ast.blocks.iter().map(|b| b.clock.as_str()).collect();
    if clocks.len() > 1 {
        let mut names: Vec<_> = clocks.into_iter().collect();
        names.sort();
        return Err(RtlError::syntax(at, format!("multiple clocks are not supported: {}", names.join(", "))));
    }
    let clock = clocks.into_iter().next();
    if let Some(clk) = clock {
        match declared.get(clk) {
            Some(d) if d.dir == Some(Direction::Input) && d.width == 1 => {}
            Some(_) => return Err(RtlError::syntax(at, format!("clock `{clk}` must be a 1-bit input"))),
            None => return Err(RtlError::syntax(at, format!("undeclared clock `{clk}`"))),
        }
    }

    let check_expr = |e: &Expr| -> Result<()> {
        let mut res = Ok(());
        e.for_each_ident(&mut |n| {
            if res.is_err() {
                return;
            }
            if !declared.contains_key(n) {
                res = Err(RtlError::syntax(at, format!("undeclared identifier `{n}`")));
            } else if Some(n) == clock {
                res = Err(RtlError::syntax(at, format!("clock `{n}` used as data")));
            }
        });
        res?;
        check_selects(ast, e)
    };

    for a in &ast.assigns {
        check_expr(&a.expr).map_err(|e| relocate(e, a.span))?;
        for t in &a.targets {
            match declared.get(t.as_str()) {
                None => return Err(RtlError::syntax(a.span, format!("undeclared identifier `{t}`"))),
                Some(d) if d.is_reg => {
                    return Err(RtlError::syntax(a.span, format!("reg `{t}` cannot be driven by `assign`")))
                }
                Some(d) if d.dir == Some(Direction::Input) => {
                    return Err(RtlError::syntax(a.span, format!("input `{t}` cannot be assigned")))
                }
                _ => {}
            }
        }
        if ast.lvalue_width(&a.targets) > MAX_WIDTH {
            return Err(RtlError::WidthMismatch(format!(
                "assignment target {{{}}} wider than 64 bits",
                a.targets.join(", ")
            )));
        }
    }
    for b in &ast.blocks {
        let mut res = Ok(());
        b.body.for_each_expr(&mut |e| {
            if res.is_ok() {
                res = check_expr(e);
            }
        });
        res?;
        let mut res = Ok(());
        b.body.for_each_target(&mut |t| {
            if res.is_err() {
                return;
            }
            match declared.get(t) {
                None => res = Err(RtlError::syntax(at, format!("undeclared identifier `{t}`"))),
                Some(d) if !d.is_reg => {
                    res = Err(RtlError::syntax(at, format!("`{t}` is assigned in a clocked block but not declared reg")))
                }
                _ => {}
            }
        });
        res?;
    }
    Ok(())
}

fn relocate(e: RtlError, span: Span) -> RtlError {
    match e {
        RtlError::Syntax { msg, .. } => RtlError::Syntax { span, msg },
        other => other,
    }
}

fn check_selects(ast: &Ast, e: &Expr) -> Result<()> {
    match e {
        Expr::Index { name, bit } => {
            if *bit >= ast.width_of(name) {
                return Err(RtlError::WidthMismatch(format!(
                    "bit {bit} out of range for `{name}` of width {}",
                    ast.width_of(name)
                )));
            }
        }
        Expr::Slice { name, msb, .. } => {
            if *msb >= ast.width_of(name) {
                return Err(RtlError::WidthMismatch(format!(
                    "part-select [{msb}:..] out of range for `{name}` of width {}",
                    ast.width_of(name)
                )));
            }
        }
        Expr::Concat(parts) => {
            for p in parts {
                check_selects(ast, p)?;
            }
            let w = ast.self_width(e);
            if w > MAX_WIDTH {
                return Err(RtlError::WidthMismatch(format!("concatenation of width {w} exceeds 64 bits")));
            }
        }
        Expr::Not(a) => check_selects(ast, a)?,
        Expr::Binary(_, a, b) => {
            check_selects(ast, a)?;
            check_selects(ast, b)?;
        }
        Expr::Ternary(c, t, f) => {
            check_selects(ast, c)?;
            check_selects(ast, t)?;
            check_selects(ast, f)?;
        }
        Expr::Ident(_) | Expr::Lit { .. } => {}
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_module() {
        let ast = parse("module inv(input a, output y); assign y = ~a; endmodule").unwrap();
        assert_eq!(ast.assigns.len(), 1);
        assert_eq!(ast.width_of("a"), 1);
        assert_eq!(ast.width_of("y"), 1);
        assert!(ast.clock.is_none() && ast.blocks.is_empty());
    }

    #[test]
    fn canonical_dff() {
        let ast = parse(
            "module dff(input clk, input d, output reg q);
               always @(posedge clk) q <= d;
             endmodule",
        )
        .unwrap();
        assert_eq!(ast.blocks.len(), 1);
        assert_eq!(ast.blocks[0].clock, "clk");
    }

    fn syntax_msg(src: &str) -> String {
        match parse(src) {
            Err(RtlError::Syntax { msg, .. }) => msg,
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_initial() {
        let msg = syntax_msg("module m(input a, output reg q); initial q = 0; endmodule");
        assert!(msg.contains("initial"), "{msg}");
    }

    #[test]
    fn rejects_out_of_subset() {
        assert!(syntax_msg("module m(input a, output y); assign #5 y = a; endmodule").contains('#'));
        assert!(syntax_msg(
            "module m(input clk, input d, output reg q); always @(posedge clk) q = d; endmodule"
        )
        .contains("blocking"));
        assert!(syntax_msg(
            "module m(input c1, input c2, input d, output reg q, output reg r);
               always @(posedge c1) q <= d; always @(posedge c2) r <= d; endmodule"
        )
        .contains("multiple clocks"));
        assert!(syntax_msg(
            "module m(input clk, input d, output reg q); always @(posedge clk) $display(d); endmodule"
        )
        .contains("$display"));
        assert!(syntax_msg("module m(input a, output y); assign y = !a; endmodule").contains('!'));
        assert!(syntax_msg("module m(input a, output y); assign y = b; endmodule").contains("undeclared"));
    }

    #[test]
    fn case_and_if() {
        let ast = parse(
            "module f(input clk, input rst, input [1:0] x, output reg [1:0] s);
               always @(posedge clk) begin
                 if (rst) s <= 2'd0;
                 else case (s)
                   2'd0, 2'd1: s <= x;
                   default: s <= s + 1;
                 endcase
               end
             endmodule",
        )
        .unwrap();
        assert!(ast.blocks[0].body.has_case());
    }

    #[test]
    fn precedence() {
        let ast = parse("module p(input a, input b, input c, output y); assign y = a | b & c; endmodule").unwrap();
        match &ast.assigns[0].expr {
            Expr::Binary(BinOp::Or, _, rhs) => assert!(matches!(**rhs, Expr::Binary(BinOp::And, _, _))),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn select_out_of_range() {
        let err = parse("module p(input [3:0] a, output y); assign y = a[4]; endmodule").unwrap_err();
        assert_eq!(err.code(), "WidthMismatch");
    }
}
