//! Canonical source rendering of a [`SpecAst`]. Parsing the output yields the
//! same tree.

use std::fmt::Write;

use crate::lang::ast::*;

pub fn pretty(ast: &SpecAst) -> String {
    let mut out = String::new();
    if let Some(m) = &ast.message_module {
        writeln!(out, "message module {}", m.name).unwrap();
        for d in &m.decls {
            decl(&mut out, d);
        }
        out.push_str("end\n");
    }
    if let Some(m) = &ast.interaction_module {
        if !out.is_empty() {
            out.push('\n');
        }
        writeln!(out, "interactions module {}", m.name).unwrap();
        for a in &m.actors {
            actor(&mut out, a);
        }
        out.push_str("end\n");
    }
    out
}

fn decl(out: &mut String, d: &Decl) {
    match d {
        Decl::Message(r) => record(out, "message", r),
        Decl::Record(r) => record(out, "record", r),
        Decl::Type(a) => writeln!(out, "  type {} is {}", a.name, apply(&a.target)).unwrap(),
        Decl::Codec(a) => writeln!(out, "  codec {} is {}", a.name, apply(&a.target)).unwrap(),
        Decl::Enum(e) => {
            write!(out, "  enum {} of {} with", e.name, e.base).unwrap();
            for (name, lit) in &e.constants {
                write!(out, " {} as {}", name, expr(lit)).unwrap();
            }
            out.push_str(" end\n");
        }
    }
}

fn record(out: &mut String, kw: &str, r: &RecordDecl) {
    write!(out, "  {kw} {}", r.name).unwrap();
    if !r.params.is_empty() {
        write!(out, "({})", r.params.join(", ")).unwrap();
    }
    out.push_str(" with\n");
    for f in &r.fields {
        write!(out, "    {} is {}", f.name, apply(&f.ty)).unwrap();
        if let Some(c) = &f.codec {
            write!(out, " as {}", apply(c)).unwrap();
        }
        out.push('\n');
    }
    out.push_str("  end\n");
}

pub fn apply(a: &Apply) -> String {
    if a.args.is_empty() {
        return a.name.clone();
    }
    let args: Vec<String> = a
        .args
        .iter()
        .map(|arg| format!("{}={}", arg.name, expr(&arg.value)))
        .collect();
    format!("{}({})", a.name, args.join(", "))
}

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
        Expr::Binary(BinOp::Mul | BinOp::Rem, ..) => 2,
        Expr::Unary(..) => 3,
        _ => 4,
    }
}

fn wrap(e: &Expr, min: u8) -> String {
    if prec(e) < min {
        format!("({})", expr(e))
    } else {
        expr(e)
    }
}

pub fn expr(e: &Expr) -> String {
    match e {
        Expr::Int(i) => i.to_string(),
        Expr::Text(s) => text_literal(s),
        Expr::Bits(b) => b.bit_literal(),
        Expr::Regex(r) => format!("/{r}/"),
        Expr::Ident(n) => n.clone(),
        Expr::Apply(a) => apply(a),
        Expr::Unary(op, inner) => {
            let sym = match op {
                UnOp::Not => "!",
                UnOp::Neg => "-",
            };
            format!("{sym}{}", wrap(inner, 3))
        }
        Expr::Binary(op, l, r) => {
            let p = prec(e);
            format!("{} {} {}", wrap(l, p), op.symbol(), wrap(r, p + 1))
        }
    }
}

pub fn text_literal(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            '\0' => out.push_str("\\0"),
            c if (c as u32) < 0x20 || (0x7f..=0xff).contains(&(c as u32)) => {
                write!(out, "\\x{:02x}", c as u32).unwrap()
            }
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

fn actor(out: &mut String, a: &ActorDecl) {
    writeln!(out, "  actor {} with", a.name).unwrap();
    for s in &a.states {
        let init = if s.initial { "init " } else { "" };
        writeln!(out, "    {init}state {} where", s.name).unwrap();
        for c in &s.clauses {
            let head = match &c.trigger {
                Trigger::Anytime => "anytime".to_string(),
                Trigger::On(m) => format!("on {m}"),
            };
            let alts: Vec<String> = c.alternatives.iter().map(alternative).collect();
            writeln!(out, "      {head} do {}", alts.join(" or do ")).unwrap();
        }
        out.push_str("    end\n");
    }
    out.push_str("  end\n");
}

fn alternative(a: &Alternative) -> String {
    let mut parts: Vec<String> = a.sends.iter().map(|m| format!("send {m}")).collect();
    parts.push(match &a.end {
        Terminal::Next(s) => format!("next {s}"),
        Terminal::Continue => "continue".into(),
        Terminal::Quit => "quit".into(),
    });
    parts.join(" ")
}
