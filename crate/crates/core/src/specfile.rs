//! Text format for random substitutions.
//!
//! ```text
//! # random period doubling
//! alphabet: a b
//! param p = 0.5
//! rule a -> "ab" : p | "ba" : 1 - p
//! rule b -> "aa" : 1
//! ```
//!
//! Every non-whitespace character after `alphabet:` is a letter. A line that
//! starts with `|` continues the previous rule. Comments run from `#` to the
//! end of the line.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::subst::{Alphabet, Letter, ProbExpr, RandomSubstitution, Word};

pub fn parse_spec(text: &str) -> Result<RandomSubstitution> {
    let mut alphabet: Option<Alphabet> = None;
    let mut defaults = BTreeMap::new();
    let mut rules: Vec<Option<Vec<(Word, ProbExpr)>>> = Vec::new();
    let mut last_rule: Option<Letter> = None;

    for (index, raw) in text.lines().enumerate() {
        let line_no = index + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut cur = Cursor::new(content, line_no);
        cur.skip_ws();
        if cur.at_end() {
            continue;
        }
        if cur.peek() == Some('|') {
            let letter = last_rule.ok_or_else(|| cur.error("continuation without a rule"))?;
            let al = alphabet.as_ref().expect("rule implies alphabet");
            cur.bump();
            let more = parse_alternatives(&mut cur, al)?;
            let rule = rules[letter as usize].as_mut().expect("rule exists");
            rule.extend(more);
            continue;
        }
        let keyword = cur.ident();
        match keyword.as_str() {
            "alphabet" => {
                if alphabet.is_some() {
                    return Err(cur.error("alphabet declared twice"));
                }
                cur.skip_ws();
                cur.expect(':')?;
                let letters: Vec<char> = cur.rest().chars().filter(|c| !c.is_whitespace()).collect();
                let al = Alphabet::new(letters).map_err(|e| cur.error(&e.to_string()))?;
                rules = vec![None; al.len()];
                alphabet = Some(al);
                last_rule = None;
            }
            "param" => {
                cur.skip_ws();
                let name = cur.ident();
                if name.is_empty() {
                    return Err(cur.error("expected parameter name"));
                }
                cur.skip_ws();
                cur.expect('=')?;
                cur.skip_ws();
                let start = cur.column();
                let value_text = cur.rest().trim().to_string();
                let value: f64 = value_text
                    .parse()
                    .map_err(|_| Error::Parse {
                        line: line_no,
                        column: start,
                        message: format!("invalid number '{value_text}'"),
                    })?;
                if defaults.insert(name.clone(), value).is_some() {
                    return Err(Error::Parse {
                        line: line_no,
                        column: 1,
                        message: format!("parameter '{name}' declared twice"),
                    });
                }
                last_rule = None;
            }
            "rule" => {
                let al = alphabet
                    .as_ref()
                    .ok_or_else(|| cur.error("rule before alphabet declaration"))?;
                cur.skip_ws();
                let symbol = cur.bump().ok_or_else(|| cur.error("expected letter"))?;
                let letter = al.index_of(symbol).ok_or_else(|| Error::UndeclaredLetter {
                    symbol: symbol.to_string(),
                    line: line_no,
                })?;
                if rules[letter as usize].is_some() {
                    return Err(Error::DuplicateRule {
                        letter: symbol.to_string(),
                        line: line_no,
                    });
                }
                cur.skip_ws();
                cur.expect('-')?;
                cur.expect('>')?;
                rules[letter as usize] = Some(parse_alternatives(&mut cur, al)?);
                last_rule = Some(letter);
            }
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    column: 1,
                    message: format!("unknown directive '{}'", content.trim()),
                })
            }
        }
    }

    let alphabet = alphabet.ok_or_else(|| Error::Parse {
        line: text.lines().count().max(1),
        column: 1,
        message: "missing alphabet declaration".into(),
    })?;
    let rules = rules
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            r.ok_or_else(|| Error::MissingRule {
                letter: alphabet.symbol(i as Letter).to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    RandomSubstitution::new(alphabet, rules, defaults)
}

fn parse_alternatives(cur: &mut Cursor, al: &Alphabet) -> Result<Vec<(Word, ProbExpr)>> {
    let mut out = Vec::new();
    loop {
        cur.skip_ws();
        if cur.at_end() {
            if out.is_empty() {
                return Err(cur.error("expected quoted realisation"));
            }
            return Ok(out);
        }
        cur.expect('"')?;
        let mut letters = Vec::new();
        loop {
            match cur.bump() {
                None => return Err(cur.error("unterminated realisation")),
                Some('"') => break,
                Some(c) => letters.push(al.index_of(c).ok_or_else(|| Error::UndeclaredLetter {
                    symbol: c.to_string(),
                    line: cur.line,
                })?),
            }
        }
        let word = Word::new(letters).map_err(|_| cur.error("empty realisation"))?;
        cur.skip_ws();
        cur.expect(':')?;
        let (text, offset) = cur.until_bar();
        let expr = ProbExpr::parse(text).map_err(|e| match e {
            Error::Parse { column, message, .. } => Error::Parse {
                line: cur.line,
                column: offset + column,
                message,
            },
            other => other,
        })?;
        out.push((word, expr));
        if cur.peek() == Some('|') {
            cur.bump();
        }
    }
}

struct Cursor<'t> {
    chars: Vec<(usize, char)>,
    text: &'t str,
    pos: usize,
    line: usize,
}

impl<'t> Cursor<'t> {
    fn new(text: &'t str, line: usize) -> Self {
        Self {
            chars: text.char_indices().collect(),
            text,
            pos: 0,
            line,
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.chars.len()
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|&(_, c)| c)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        Some(c)
    }

    /// 1-based column of the next character.
    fn column(&self) -> usize {
        self.pos + 1
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn ident(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek().filter(|c| c.is_alphanumeric() || *c == '_') {
            s.push(c);
            self.pos += 1;
        }
        s
    }

    fn expect(&mut self, want: char) -> Result<()> {
        match self.peek() {
            Some(c) if c == want => {
                self.pos += 1;
                Ok(())
            }
            Some(c) => Err(self.error(&format!("expected '{want}', found '{c}'"))),
            None => Err(self.error(&format!("expected '{want}'"))),
        }
    }

    fn byte_offset(&self) -> usize {
        self.chars.get(self.pos).map(|&(o, _)| o).unwrap_or(self.text.len())
    }

    fn rest(&mut self) -> &'t str {
        let start = self.byte_offset();
        self.pos = self.chars.len();
        &self.text[start..]
    }

    /// Text up to the next `|` or end of line, with the column of its start.
    fn until_bar(&mut self) -> (&'t str, usize) {
        let start_pos = self.pos;
        let start = self.byte_offset();
        while self.peek().is_some_and(|c| c != '|') {
            self.pos += 1;
        }
        (&self.text[start..self.byte_offset()], start_pos)
    }

    fn error(&self, message: &str) -> Error {
        self.error_at(self.column(), message)
    }

    fn error_at(&self, column: usize, message: &str) -> Error {
        Error::Parse {
            line: self.line,
            column,
            message: message.to_string(),
        }
    }
}

/// Canonical text form; [`parse_spec`] inverts it.
pub fn render(sub: &RandomSubstitution) -> String {
    let al = sub.alphabet();
    let mut out = String::new();
    let letters: Vec<String> = al.symbols().iter().map(char::to_string).collect();
    writeln!(out, "alphabet: {}", letters.join(" ")).unwrap();
    for (name, value) in sub.defaults() {
        writeln!(out, "param {name} = {value:?}").unwrap();
    }
    for (i, rule) in sub.rules().iter().enumerate() {
        write!(out, "rule {} ->", al.symbol(i as Letter)).unwrap();
        for (j, (word, expr)) in rule.iter().enumerate() {
            if j > 0 {
                out.push_str(" |");
            }
            write!(out, " \"{}\" : {expr}", al.render(word)).unwrap();
        }
        out.push('\n');
    }
    out
}
