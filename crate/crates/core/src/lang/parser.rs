use crate::lang::ast::*;
use crate::lang::lexer::{tokenize, Tok, Token};
use crate::lang::SyntaxError;

pub fn parse_spec(text: &str) -> Result<SpecAst, SyntaxError> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, pos: 0 };
    let mut ast = SpecAst::default();
    while !p.at(&Tok::Eof) {
        if p.eat_kw("message") {
            p.expect_kw("module")?;
            if ast.message_module.is_some() {
                return Err(p.error("duplicate message module"));
            }
            ast.message_module = Some(p.message_module()?);
        } else if p.eat_kw("interactions") {
            p.expect_kw("module")?;
            if ast.interaction_module.is_some() {
                return Err(p.error("duplicate interactions module"));
            }
            ast.interaction_module = Some(p.interaction_module()?);
        } else {
            return Err(p.unexpected("`message module` or `interactions module`"));
        }
    }
    Ok(ast)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn at(&self, t: &Tok) -> bool {
        self.peek() == t
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Keyword(k) if *k == kw)
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> SyntaxError {
        let t = &self.tokens[self.pos];
        SyntaxError {
            line: t.line,
            col: t.col,
            message: message.into(),
        }
    }

    fn unexpected(&self, wanted: &str) -> SyntaxError {
        self.error(format!("expected {wanted}, found {}", self.peek()))
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), SyntaxError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    fn expect(&mut self, t: Tok) -> Result<(), SyntaxError> {
        if self.at(&t) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&t.to_string()))
        }
    }

    fn ident(&mut self) -> Result<String, SyntaxError> {
        match self.peek() {
            Tok::Ident(_) => match self.bump() {
                Tok::Ident(s) => Ok(s),
                _ => unreachable!(),
            },
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn message_module(&mut self) -> Result<MessageModule, SyntaxError> {
        let name = self.ident()?;
        let mut decls = Vec::new();
        while !self.eat_kw("end") {
            decls.push(self.decl()?);
        }
        Ok(MessageModule { name, decls })
    }

    fn decl(&mut self) -> Result<Decl, SyntaxError> {
        if self.eat_kw("message") {
            let name = self.ident()?;
            self.expect_kw("with")?;
            let fields = self.fields()?;
            Ok(Decl::Message(RecordDecl {
                name,
                params: Vec::new(),
                fields,
            }))
        } else if self.eat_kw("record") {
            let name = self.ident()?;
            let mut params = Vec::new();
            if self.at(&Tok::LParen) {
                self.bump();
                loop {
                    params.push(self.ident()?);
                    if self.at(&Tok::Comma) {
                        self.bump();
                    } else {
                        break;
                    }
                }
                self.expect(Tok::RParen)?;
            }
            self.expect_kw("with")?;
            let fields = self.fields()?;
            Ok(Decl::Record(RecordDecl { name, params, fields }))
        } else if self.eat_kw("type") {
            let name = self.ident()?;
            self.expect_kw("is")?;
            Ok(Decl::Type(AliasDecl {
                name,
                target: self.apply()?,
            }))
        } else if self.eat_kw("codec") {
            let name = self.ident()?;
            self.expect_kw("is")?;
            Ok(Decl::Codec(AliasDecl {
                name,
                target: self.apply()?,
            }))
        } else if self.eat_kw("enum") {
            let name = self.ident()?;
            self.expect_kw("of")?;
            let base = self.ident()?;
            self.expect_kw("with")?;
            let mut constants = Vec::new();
            while !self.eat_kw("end") {
                let c = self.ident()?;
                self.expect_kw("as")?;
                let lit = match self.peek() {
                    Tok::Int(_) | Tok::Text(_) | Tok::Bits(_) => self.primary()?,
                    _ => return Err(self.unexpected("literal enum representation")),
                };
                constants.push((c, lit));
            }
            Ok(Decl::Enum(EnumDecl { name, base, constants }))
        } else {
            Err(self.unexpected("declaration (`message`, `record`, `type`, `codec` or `enum`)"))
        }
    }

    fn fields(&mut self) -> Result<Vec<FieldDecl>, SyntaxError> {
        let mut fields = Vec::new();
        while !self.eat_kw("end") {
            let name = self.ident()?;
            self.expect_kw("is")?;
            let ty = self.apply()?;
            let codec = if self.eat_kw("as") { Some(self.apply()?) } else { None };
            fields.push(FieldDecl { name, ty, codec });
        }
        Ok(fields)
    }

    fn apply(&mut self) -> Result<Apply, SyntaxError> {
        let name = self.ident()?;
        let args = if self.at(&Tok::LParen) { self.args()? } else { Vec::new() };
        Ok(Apply { name, args })
    }

    fn args(&mut self) -> Result<Vec<Arg>, SyntaxError> {
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if self.at(&Tok::RParen) {
            self.bump();
            return Ok(args);
        }
        loop {
            let name = self.ident()?;
            self.expect(Tok::Eq)?;
            let value = self.expr()?;
            args.push(Arg { name, value });
            if self.at(&Tok::Comma) {
                self.bump();
            } else {
                break;
            }
        }
        self.expect(Tok::RParen)?;
        Ok(args)
    }

    fn expr(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Percent => BinOp::Rem,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, SyntaxError> {
        match self.peek() {
            Tok::Bang => {
                self.bump();
                Ok(Expr::Unary(UnOp::Not, Box::new(self.unary()?)))
            }
            Tok::Minus => {
                self.bump();
                Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Expr, SyntaxError> {
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Ok(Expr::Int(i))
            }
            Tok::Text(s) => {
                self.bump();
                Ok(Expr::Text(s))
            }
            Tok::Bits(b) => {
                self.bump();
                Ok(Expr::Bits(b))
            }
            Tok::Regex(r) => {
                self.bump();
                Ok(Expr::Regex(r))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if self.at(&Tok::LParen) {
                    let args = self.args()?;
                    Ok(Expr::Apply(Apply { name, args }))
                } else {
                    Ok(Expr::Ident(name))
                }
            }
            _ => Err(self.unexpected("expression")),
        }
    }

    fn interaction_module(&mut self) -> Result<InteractionModule, SyntaxError> {
        let name = self.ident()?;
        let mut actors = Vec::new();
        while !self.eat_kw("end") {
            self.expect_kw("actor")?;
            let actor_name = self.ident()?;
            self.expect_kw("with")?;
            let mut states = Vec::new();
            while !self.eat_kw("end") {
                let initial = self.eat_kw("init");
                self.expect_kw("state")?;
                let state_name = self.ident()?;
                self.expect_kw("where")?;
                let mut clauses = Vec::new();
                while !self.eat_kw("end") {
                    clauses.push(self.clause()?);
                }
                states.push(StateDecl {
                    name: state_name,
                    initial,
                    clauses,
                });
            }
            actors.push(ActorDecl {
                name: actor_name,
                states,
            });
        }
        Ok(InteractionModule { name, actors })
    }

    fn clause(&mut self) -> Result<Clause, SyntaxError> {
        let trigger = if self.eat_kw("anytime") {
            Trigger::Anytime
        } else if self.eat_kw("on") {
            Trigger::On(self.ident()?)
        } else {
            return Err(self.unexpected("`anytime`, `on` or `end`"));
        };
        self.expect_kw("do")?;
        let mut alternatives = vec![self.alternative()?];
        while self.eat_kw("or") {
            self.expect_kw("do")?;
            alternatives.push(self.alternative()?);
        }
        Ok(Clause { trigger, alternatives })
    }

    fn alternative(&mut self) -> Result<Alternative, SyntaxError> {
        let mut sends = Vec::new();
        while self.eat_kw("send") {
            sends.push(self.ident()?);
        }
        let end = if self.eat_kw("next") {
            Terminal::Next(self.ident()?)
        } else if self.eat_kw("continue") {
            Terminal::Continue
        } else if self.eat_kw("quit") {
            Terminal::Quit
        } else {
            return Err(self.unexpected("`send`, `next`, `continue` or `quit`"));
        };
        Ok(Alternative { sends, end })
    }
}
