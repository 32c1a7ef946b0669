//! Recursive-descent parser for the formula language.
//!
//! Precedence, loosest to tightest: quantifiers, `<->`, `->`, `U`
//! (left-associative), `|`, `&`, prefix `~ X F G`, primary.

use std::fmt;

use super::{Atom, Formula, ObjectSet, Vocab};
use crate::calculus::RelSet;

#[derive(Debug, thiserror::Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Dot,
    Eq,
    Neq,
    Arrow,
    DArrow,
    Pipe,
    Amp,
    Tilde,
    Plus,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(n) => return write!(f, "'{n}'"),
            Tok::LParen => "'('",
            Tok::RParen => "')'",
            Tok::LBracket => "'['",
            Tok::RBracket => "']'",
            Tok::LBrace => "'{'",
            Tok::RBrace => "'}'",
            Tok::Comma => "','",
            Tok::Dot => "'.'",
            Tok::Eq => "'='",
            Tok::Neq => "'!='",
            Tok::Arrow => "'->'",
            Tok::DArrow => "'<->'",
            Tok::Pipe => "'|'",
            Tok::Amp => "'&'",
            Tok::Tilde => "'~'",
            Tok::Plus => "'+'",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

type Spanned = (Tok, usize, usize);

fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut lx = Lexer {
        src: src.as_bytes(),
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    loop {
        lx.skip_ws();
        let (line, col) = (lx.line, lx.col);
        let Some(c) = lx.peek() else {
            out.push((Tok::Eof, line, col));
            return Ok(out);
        };
        let tok = match c {
            b'(' => lx.one(Tok::LParen),
            b')' => lx.one(Tok::RParen),
            b'[' => lx.one(Tok::LBracket),
            b']' => lx.one(Tok::RBracket),
            b'{' => lx.one(Tok::LBrace),
            b'}' => lx.one(Tok::RBrace),
            b',' => lx.one(Tok::Comma),
            b'.' => lx.one(Tok::Dot),
            b'=' => lx.one(Tok::Eq),
            b'|' => lx.one(Tok::Pipe),
            b'&' => lx.one(Tok::Amp),
            b'~' => lx.one(Tok::Tilde),
            b'+' => lx.one(Tok::Plus),
            b'!' => {
                lx.bump();
                if lx.peek() == Some(b'=') {
                    lx.bump();
                    Tok::Neq
                } else {
                    return Err(err(line, col, "expected '=' after '!'".into()));
                }
            }
            b'-' => {
                lx.bump();
                if lx.peek() == Some(b'>') {
                    lx.bump();
                    Tok::Arrow
                } else {
                    return Err(err(line, col, "expected '>' after '-'".into()));
                }
            }
            b'<' => {
                lx.bump();
                if lx.peek() == Some(b'-') {
                    lx.bump();
                    if lx.peek() == Some(b'>') {
                        lx.bump();
                        Tok::DArrow
                    } else {
                        return Err(err(line, col, "expected '>' after '<-'".into()));
                    }
                } else {
                    return Err(err(line, col, "expected '-' after '<'".into()));
                }
            }
            c if c.is_ascii_alphanumeric() || c == b'_' => {
                let start = lx.pos;
                while lx
                    .peek()
                    .map(|c| c.is_ascii_alphanumeric() || c == b'_')
                    .unwrap_or(false)
                {
                    lx.bump();
                }
                Tok::Ident(String::from_utf8_lossy(&lx.src[start..lx.pos]).into_owned())
            }
            c => {
                return Err(err(line, col, format!("unexpected character '{}'", c as char)));
            }
        };
        out.push((tok, line, col));
    }
}

impl Lexer<'_> {
    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) {
        if let Some(c) = self.peek() {
            self.pos += 1;
            if c == b'\n' {
                self.line += 1;
                self.col = 1;
            } else {
                self.col += 1;
            }
        }
    }

    fn one(&mut self, t: Tok) -> Tok {
        self.bump();
        t
    }

    fn skip_ws(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_ascii_whitespace() => self.bump(),
                Some(b'#') => {
                    while self.peek().map(|c| c != b'\n').unwrap_or(false) {
                        self.bump();
                    }
                }
                _ => break,
            }
        }
    }
}

fn err(line: usize, col: usize, message: String) -> ParseError {
    ParseError { line, col, message }
}

struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    vocab: &'a Vocab,
    bound: Vec<String>,
}

/// Parses a single formula; the whole input must be consumed.
pub fn parse(text: &str, vocab: &Vocab) -> Result<Formula, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        vocab,
        bound: Vec::new(),
    };
    let f = p.formula()?;
    p.expect_eof()?;
    Ok(f)
}

impl Parser<'_> {
    fn cur(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if &self.cur().0 == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> Result<(), ParseError> {
        let (cur, line, col) = self.cur().clone();
        if cur == t {
            self.bump();
            Ok(())
        } else {
            Err(err(line, col, format!("expected {t}, found {cur}")))
        }
    }

    fn expect_eof(&mut self) -> Result<(), ParseError> {
        let (cur, line, col) = self.cur().clone();
        if cur == Tok::Eof {
            Ok(())
        } else {
            Err(err(line, col, format!("expected end of input, found {cur}")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, usize, usize), ParseError> {
        let (cur, line, col) = self.bump();
        match cur {
            Tok::Ident(n) => Ok((n, line, col)),
            t => Err(err(line, col, format!("expected {what}, found {t}"))),
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        if let (Tok::Ident(kw), _, _) = self.cur() {
            if kw == "forall" || kw == "exists" {
                let forall = kw == "forall";
                self.bump();
                let mut vars = vec![self.ident("variable name")?.0];
                while self.eat(&Tok::Comma) {
                    vars.push(self.ident("variable name")?.0);
                }
                let (in_kw, line, col) = self.ident("'in'")?;
                if in_kw != "in" {
                    return Err(err(line, col, format!("expected 'in', found '{in_kw}'")));
                }
                let set = self.object_set()?;
                self.expect(Tok::Dot)?;
                let n_bound = vars.len();
                self.bound.extend(vars.iter().cloned());
                let body = self.formula()?;
                self.bound.truncate(self.bound.len() - n_bound);
                let mut f = body;
                for var in vars.into_iter().rev() {
                    f = if forall {
                        Formula::Forall {
                            var,
                            set: set.clone(),
                            body: Box::new(f),
                        }
                    } else {
                        Formula::Exists {
                            var,
                            set: set.clone(),
                            body: Box::new(f),
                        }
                    };
                }
                return Ok(f);
            }
        }
        self.equiv()
    }

    fn object_set(&mut self) -> Result<ObjectSet, ParseError> {
        if self.eat(&Tok::LBrace) {
            let mut members = Vec::new();
            if !self.eat(&Tok::RBrace) {
                loop {
                    let (name, line, col) = self.ident("object name")?;
                    if !self.vocab.has_object(&name) {
                        return Err(err(line, col, format!("unknown object '{name}'")));
                    }
                    members.push(name);
                    if self.eat(&Tok::RBrace) {
                        break;
                    }
                    self.expect(Tok::Comma)?;
                }
            }
            Ok(ObjectSet::Literal(members))
        } else {
            let (name, line, col) = self.ident("object set name")?;
            if self.vocab.set(&name).is_none() {
                return Err(err(line, col, format!("unknown object set '{name}'")));
            }
            Ok(ObjectSet::Named(name))
        }
    }

    fn equiv(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.implies()?;
        if self.eat(&Tok::DArrow) {
            let rhs = self.equiv()?;
            Ok(Formula::Equiv(Box::new(lhs), Box::new(rhs)))
        } else {
            Ok(lhs)
        }
    }

    fn implies(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.until()?;
        if self.eat(&Tok::Arrow) {
            let rhs = self.implies()?;
            Ok(Formula::implies(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn until(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.or()?;
        while matches!(&self.cur().0, Tok::Ident(n) if n == "U") {
            self.bump();
            let rhs = self.or()?;
            lhs = Formula::until(lhs, rhs);
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut parts = vec![self.and()?];
        while self.eat(&Tok::Pipe) {
            parts.push(self.and()?);
        }
        Ok(Formula::or(parts))
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut parts = vec![self.unary()?];
        while self.eat(&Tok::Amp) {
            parts.push(self.unary()?);
        }
        Ok(Formula::and(parts))
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        if self.eat(&Tok::Tilde) {
            return Ok(Formula::not(self.unary()?));
        }
        if let (Tok::Ident(kw), _, _) = self.cur() {
            // A quantifier may follow a prefix operator; its body extends as
            // far to the right as possible.
            if kw == "forall" || kw == "exists" {
                return self.formula();
            }
            // X/F/G are prefix operators only when followed by an operand,
            // so an object named F can still appear in atoms.
            let op = kw.as_str();
            if matches!(op, "X" | "F" | "G") && self.starts_operand(self.pos + 1) {
                let op = op.to_string();
                self.bump();
                let body = self.unary()?;
                return Ok(match op.as_str() {
                    "X" => Formula::next(body),
                    "F" => Formula::eventually(body),
                    _ => Formula::always(body),
                });
            }
        }
        self.primary()
    }

    fn starts_operand(&self, pos: usize) -> bool {
        matches!(
            self.toks[pos].0,
            Tok::Ident(_) | Tok::LParen | Tok::Tilde
        )
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        if self.eat(&Tok::LParen) {
            let f = self.formula()?;
            self.expect(Tok::RParen)?;
            return Ok(f);
        }
        let (name, line, col) = self.ident("a formula")?;
        match name.as_str() {
            "true" => return Ok(Formula::True),
            "false" => return Ok(Formula::False),
            _ => {}
        }
        if self.cur().0 == Tok::LBracket {
            return self.atom(name, line, col);
        }
        // Object guard: a = b or a != b.
        let equal = match self.bump() {
            (Tok::Eq, ..) => true,
            (Tok::Neq, ..) => false,
            (t, line, col) => {
                return Err(err(
                    line,
                    col,
                    format!("expected '[' (atom) or '='/'!=' (object guard) after '{name}', found {t}"),
                ));
            }
        };
        self.object_term(&name, line, col)?;
        let (b, bl, bc) = self.ident("object name")?;
        self.object_term(&b, bl, bc)?;
        Ok(Formula::ObjCmp { equal, a: name, b })
    }

    fn object_term(&self, name: &str, line: usize, col: usize) -> Result<(), ParseError> {
        if self.bound.iter().any(|v| v == name) || self.vocab.has_object(name) {
            Ok(())
        } else {
            Err(err(line, col, format!("unknown object '{name}'")))
        }
    }

    fn atom(&mut self, aspect: String, line: usize, col: usize) -> Result<Formula, ParseError> {
        let Some(cal) = self.vocab.aspect(&aspect) else {
            return Err(err(line, col, format!("unknown aspect '{aspect}'")));
        };
        let alphabet = cal.alphabet_size() as u8;
        self.expect(Tok::LBracket)?;
        let (a, al, ac) = self.ident("object name")?;
        self.object_term(&a, al, ac)?;
        self.expect(Tok::Comma)?;
        let (b, bl, bc) = self.ident("object name")?;
        self.object_term(&b, bl, bc)?;
        self.expect(Tok::RBracket)?;
        let (op, ol, oc) = self.bump();
        let (rels, complement) = match op {
            Tok::Eq => (self.single_rel(&aspect)?, false),
            Tok::Neq => (self.single_rel(&aspect)?, true),
            Tok::Ident(kw) if kw == "in" => (self.rel_set(&aspect)?, false),
            Tok::Ident(kw) if kw == "not" => {
                let (in_kw, line, col) = self.ident("'in'")?;
                if in_kw != "in" {
                    return Err(err(line, col, format!("expected 'in', found '{in_kw}'")));
                }
                (self.rel_set(&aspect)?, true)
            }
            t => {
                return Err(err(
                    ol,
                    oc,
                    format!("expected '=', '!=', 'in', or 'not in', found {t}"),
                ));
            }
        };
        let rels = if complement {
            rels.complement_in(alphabet as usize)
        } else {
            rels
        };
        Ok(Formula::Atom(Atom {
            aspect,
            a,
            b,
            rels,
            alphabet,
        }))
    }

    fn single_rel(&mut self, aspect: &str) -> Result<RelSet, ParseError> {
        let (name, line, col) = self.ident("relation name")?;
        let cal = self.vocab.aspect(aspect).unwrap();
        match cal.relation_id(&name) {
            Some(r) => Ok(RelSet::singleton(r)),
            None => Err(err(line, col, format!("unknown relation '{name}'"))),
        }
    }

    /// A relation-set expression: `{r1, r2, ...}` literals and single
    /// relation names, joined by `+`.
    fn rel_set(&mut self, aspect: &str) -> Result<RelSet, ParseError> {
        let mut set = self.rel_set_term(aspect)?;
        while self.eat(&Tok::Plus) {
            set = set.union(self.rel_set_term(aspect)?);
        }
        Ok(set)
    }

    fn rel_set_term(&mut self, aspect: &str) -> Result<RelSet, ParseError> {
        if self.eat(&Tok::LBrace) {
            let mut set = RelSet::EMPTY;
            if !self.eat(&Tok::RBrace) {
                loop {
                    set = set.union(self.single_rel(aspect)?);
                    if self.eat(&Tok::RBrace) {
                        break;
                    }
                    self.expect(Tok::Comma)?;
                }
            }
            Ok(set)
        } else {
            self.single_rel(aspect)
        }
    }
}
