//! Parser and canonical printer for `.domain` files.
//!
//! ```text
//! file       := { decl }
//! decl       := categories | features | vocab | action
//! categories := "categories" ":" id { id } ";"
//! features   := "features" ":" id { id } ";"
//! vocab      := "vocab" id ":" id { id } ";"
//! action     := "action" id "{" [params] [reqs] "}"
//! params     := "compulsory" ":" id { id } ";" [ "voluntary" ":" id { id } ";" ]
//! reqs       := { "require" ("target" | "storage") ":" literal { "&" literal } ";" }
//! literal    := ["!"] id
//! ```
//!
//! `#` starts a comment that runs to the end of the line and identifiers
//! match `[a-z_][a-z0-9_]*`. Categories and features must be declared
//! before an action refers to them.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{validate_domain, ActionSpec, Domain, Literal, Violation};

/// The experiment domain: nine actions over ten binary features.
pub const DEFAULT_DOMAIN: &str = include_str!("../domains/default.domain");

const HEADER: &str = "# intent domain\n";

pub fn default_domain() -> Domain {
    parse_domain(DEFAULT_DOMAIN).expect("bundled domain parses")
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Id(String),
    Colon,
    Semi,
    LBrace,
    RBrace,
    Amp,
    Bang,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Id(s) => format!("`{s}`"),
        Tok::Colon => "`:`".into(),
        Tok::Semi => "`;`".into(),
        Tok::LBrace => "`{`".into(),
        Tok::RBrace => "`}`".into(),
        Tok::Amp => "`&`".into(),
        Tok::Bang => "`!`".into(),
        Tok::Eof => "end of input".into(),
    }
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut col = 1;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (l, k) = (line, col);
        let single = match c {
            ':' => Some(Tok::Colon),
            ';' => Some(Tok::Semi),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            '&' => Some(Tok::Amp),
            '!' => Some(Tok::Bang),
            _ => None,
        };
        if let Some(tok) = single {
            chars.next();
            col += 1;
            out.push(Token {
                tok,
                line: l,
                col: k,
            });
        } else if c == '\n' {
            chars.next();
            line += 1;
            col = 1;
        } else if c.is_whitespace() {
            chars.next();
            col += 1;
        } else if c == '#' {
            while chars.peek().is_some_and(|c| *c != '\n') {
                chars.next();
            }
        } else if c.is_ascii_lowercase() || c == '_' {
            let mut id = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' {
                    id.push(c);
                    chars.next();
                    col += 1;
                } else {
                    break;
                }
            }
            out.push(Token {
                tok: Tok::Id(id),
                line: l,
                col: k,
            });
        } else {
            return Err(Error::Syntax {
                line: l,
                col: k,
                expected: "identifier or punctuation".into(),
            });
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    domain: Domain,
    action_pos: HashMap<String, (usize, usize)>,
    vocab_pos: HashMap<String, (usize, usize)>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &str) -> Result<T> {
        let t = self.peek();
        Err(Error::Syntax {
            line: t.line,
            col: t.col,
            expected: format!("{expected}, found {}", describe(&t.tok)),
        })
    }

    fn expect(&mut self, tok: Tok) -> Result<Token> {
        if self.peek().tok == tok {
            Ok(self.bump())
        } else {
            self.fail(&describe(&tok))
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<Token> {
        match &self.peek().tok {
            Tok::Id(s) if s == kw => Ok(self.bump()),
            _ => self.fail(&format!("`{kw}`")),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Id(s) if s == kw)
    }

    fn ident(&mut self) -> Result<(String, usize, usize)> {
        match self.peek().tok.clone() {
            Tok::Id(s) => {
                let t = self.bump();
                Ok((s, t.line, t.col))
            }
            _ => self.fail("identifier"),
        }
    }

    /// `id { id } ";"`
    fn id_list(&mut self) -> Result<Vec<(String, usize, usize)>> {
        let mut ids = vec![self.ident()?];
        while matches!(self.peek().tok, Tok::Id(_)) {
            ids.push(self.ident()?);
        }
        self.expect(Tok::Semi)?;
        Ok(ids)
    }

    fn file(&mut self) -> Result<()> {
        loop {
            let t = self.peek().clone();
            match &t.tok {
                Tok::Eof => return Ok(()),
                Tok::Id(s) if s == "categories" => {
                    self.bump();
                    self.expect(Tok::Colon)?;
                    let ids = self.id_list()?;
                    self.domain
                        .categories
                        .extend(ids.into_iter().map(|(s, _, _)| s));
                }
                Tok::Id(s) if s == "features" => {
                    self.bump();
                    self.expect(Tok::Colon)?;
                    let ids = self.id_list()?;
                    self.domain
                        .features
                        .extend(ids.into_iter().map(|(s, _, _)| s));
                }
                Tok::Id(s) if s == "vocab" => {
                    self.bump();
                    let (c, l, k) = self.ident()?;
                    self.semantic_category(&c, l, k)?;
                    self.expect(Tok::Colon)?;
                    let ids = self.id_list()?;
                    self.vocab_pos.entry(c.clone()).or_insert((t.line, t.col));
                    self.domain
                        .vocab
                        .push((c, ids.into_iter().map(|(s, _, _)| s).collect()));
                }
                Tok::Id(s) if s == "action" => self.action()?,
                _ => return self.fail("`categories`, `features`, `vocab` or `action`"),
            }
        }
    }

    fn semantic_category(&self, c: &str, line: usize, col: usize) -> Result<()> {
        if self.domain.categories.iter().any(|x| x == c) {
            Ok(())
        } else {
            Err(Error::Semantic {
                line,
                col,
                message: format!("unknown category `{c}`"),
            })
        }
    }

    fn action(&mut self) -> Result<()> {
        let start = self.keyword("action")?;
        let (id, _, _) = self.ident()?;
        self.expect(Tok::LBrace)?;
        let mut spec = ActionSpec::new(&id);

        if self.at_keyword("compulsory") {
            self.bump();
            self.expect(Tok::Colon)?;
            for (c, l, k) in self.id_list()? {
                self.semantic_category(&c, l, k)?;
                spec.compulsory.push(c);
            }
        }
        if self.at_keyword("voluntary") {
            self.bump();
            self.expect(Tok::Colon)?;
            for (c, l, k) in self.id_list()? {
                self.semantic_category(&c, l, k)?;
                spec.voluntary.push(c);
            }
        }
        while self.at_keyword("require") {
            self.bump();
            let target = match &self.peek().tok {
                Tok::Id(s) if s == "target" => true,
                Tok::Id(s) if s == "storage" => false,
                _ => return self.fail("`target` or `storage`"),
            };
            self.bump();
            self.expect(Tok::Colon)?;
            let mut lits = vec![self.literal()?];
            while self.peek().tok == Tok::Amp {
                self.bump();
                lits.push(self.literal()?);
            }
            // The terminating `;` may be left out on the last requirement.
            if self.peek().tok != Tok::RBrace {
                self.expect(Tok::Semi)?;
            }
            if target {
                spec.target_requirements.extend(lits);
            } else {
                spec.storage_requirements.extend(lits);
            }
        }
        if self.peek().tok != Tok::RBrace {
            return self.fail("`compulsory`, `voluntary`, `require` or `}`");
        }
        self.bump();
        self.action_pos.insert(id, (start.line, start.col));
        self.domain.actions.push(spec);
        Ok(())
    }

    fn literal(&mut self) -> Result<Literal> {
        let positive = if self.peek().tok == Tok::Bang {
            self.bump();
            false
        } else {
            true
        };
        let (f, line, col) = match self.peek().tok.clone() {
            Tok::Id(s) => {
                let t = self.bump();
                (s, t.line, t.col)
            }
            _ => return self.fail("literal"),
        };
        if !self.domain.features.contains(&f) {
            return Err(Error::Semantic {
                line,
                col,
                message: format!("unknown feature `{f}`"),
            });
        }
        Ok(Literal {
            feature: f,
            positive,
        })
    }

    fn locate(&self, v: &Violation) -> (usize, usize) {
        let action = |a: &String| self.action_pos.get(a).copied();
        let found = match v {
            Violation::DuplicateAction(a) | Violation::ActionAsParameter(a) => action(a),
            Violation::DuplicateParameter { action: a, .. }
            | Violation::CompulsoryAndVoluntary { action: a, .. }
            | Violation::UnknownFeature { action: a, .. }
            | Violation::DuplicateLiteral { action: a, .. }
            | Violation::RequirementWithoutParameter { action: a, .. } => action(a),
            Violation::DuplicateVocab(c) | Violation::DuplicateOption { category: c, .. } => {
                self.vocab_pos.get(c).copied()
            }
            _ => None,
        };
        found.unwrap_or((1, 1))
    }
}

/// Parse a domain file. Syntax errors point at the offending token; other
/// invariant violations are reported as semantic errors at the declaration.
pub fn parse_domain(text: &str) -> Result<Domain> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        domain: Domain::default(),
        action_pos: HashMap::new(),
        vocab_pos: HashMap::new(),
    };
    p.file()?;
    if let Some(v) = validate_domain(&p.domain).first() {
        let (line, col) = p.locate(v);
        return Err(Error::Semantic {
            line,
            col,
            message: v.to_string(),
        });
    }
    Ok(p.domain)
}

fn literals(lits: &[Literal]) -> String {
    lits.iter()
        .map(Literal::to_string)
        .collect::<Vec<_>>()
        .join(" & ")
}

/// Canonical text of a domain.
pub fn print_domain(d: &Domain) -> String {
    let mut s = String::from(HEADER);
    if !d.categories.is_empty() {
        let _ = writeln!(s, "categories: {};", d.categories.join(" "));
    }
    if !d.features.is_empty() {
        let _ = writeln!(s, "features: {};", d.features.join(" "));
    }
    for (c, opts) in &d.vocab {
        let _ = writeln!(s, "vocab {c}: {};", opts.join(" "));
    }
    for a in &d.actions {
        let _ = writeln!(s, "\naction {} {{", a.id);
        if !a.compulsory.is_empty() {
            let _ = writeln!(s, "    compulsory: {};", a.compulsory.join(" "));
        }
        if !a.voluntary.is_empty() {
            let _ = writeln!(s, "    voluntary: {};", a.voluntary.join(" "));
        }
        if !a.target_requirements.is_empty() {
            let _ = writeln!(
                s,
                "    require target: {};",
                literals(&a.target_requirements)
            );
        }
        if !a.storage_requirements.is_empty() {
            let _ = writeln!(
                s,
                "    require storage: {};",
                literals(&a.storage_requirements)
            );
        }
        s.push_str("}\n");
    }
    s
}
