//! Wreath-recursive group definitions and their projections to finite depth.
//!
//! Groups are written in a small line-oriented text format (`.ssg`):
//!
//! ```text
//! # Grigorchuk group
//! group grigorchuk arity 2
//! gen a = perm (0 1) sections [1, 1]
//! gen b = perm id    sections [a, c]
//! gen c = perm id    sections [a, d]
//! gen d = perm id    sections [1, b]
//! rist 1 = [b*a*b*a*d*a*b*a*b*d]
//! expect branch
//! ```
//!
//! `sections [w_0, …, w_{p-1}]` lists the section at each child `x` of the
//! root, so `gen g = perm (0 1) sections [1, g]` is the odometer
//! `g(0w) = 1w`, `g(1w) = 0g(w)`. Words are `*`-separated generator names
//! with optional integer exponents (`c^-1`, `a^2`); `1` is the empty word.
//! A word is evaluated right to left, like any other product.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, ParseError, Result};
use crate::perm::Perm;
use crate::portrait::Portrait;
use crate::tree::{TreeShape, Vertex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub generator: usize,
    pub inverse: bool,
}

/// A product of generators and their inverses. The empty word is the identity.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Concatenation `self · other`.
    pub fn concat(&self, other: &Word) -> Word {
        let mut letters = self.0.clone();
        letters.extend_from_slice(&other.0);
        Word(letters)
    }

    pub fn inverse(&self) -> Word {
        Word(
            self.0
                .iter()
                .rev()
                .map(|l| Letter {
                    generator: l.generator,
                    inverse: !l.inverse,
                })
                .collect(),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generator {
    pub name: String,
    pub root: Perm,
    pub sections: Vec<Word>,
}

/// Rigid-stabilizer generators supplied with a definition: words known to
/// lie in `rist_G(vertex)` of the profinite group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RistDecl {
    pub vertex: Vertex,
    pub words: Vec<Word>,
}

/// Structural expectations recorded with a definition (`expect` lines).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Expectations {
    pub level_transitive: Option<bool>,
    pub weakly_branch: Option<bool>,
    pub branch: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupDef {
    name: String,
    arity: usize,
    generators: Vec<Generator>,
    rist: Vec<RistDecl>,
    expect: Expectations,
}

impl GroupDef {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn rist_decls(&self) -> &[RistDecl] {
        &self.rist
    }

    pub fn expectations(&self) -> &Expectations {
        &self.expect
    }

    pub fn generator_index(&self, name: &str) -> Result<usize> {
        self.generators
            .iter()
            .position(|g| g.name == name)
            .ok_or_else(|| Error::UnknownGenerator(name.to_string()))
    }

    /// Rigid-stabilizer words declared for `v`, if any.
    pub fn rist_words(&self, v: &Vertex) -> Option<&[Word]> {
        self.rist
            .iter()
            .find(|d| d.vertex == *v)
            .map(|d| d.words.as_slice())
    }

    /// Shape of `T^k` for this definition's tree.
    pub fn shape(&self, k: usize) -> TreeShape {
        TreeShape::constant(self.arity, k).expect("arity validated at parse time")
    }

    pub fn parse_word(&self, text: &str) -> Result<Word> {
        let names: Vec<&str> = self.generators.iter().map(|g| g.name.as_str()).collect();
        parse_word(text, &names, 1, 1).map_err(|e| match e {
            WordError::Unknown(name) => Error::UnknownGenerator(name),
            WordError::Syntax(e) => Error::Parse(e),
        })
    }

    pub fn format_word(&self, w: &Word) -> String {
        if w.is_empty() {
            return "1".to_string();
        }
        let mut s = String::new();
        for (i, l) in w.0.iter().enumerate() {
            if i > 0 {
                s.push('*');
            }
            s.push_str(&self.generators[l.generator].name);
            if l.inverse {
                s.push_str("^-1");
            }
        }
        s
    }

    /// Serializes back to the `.ssg` text format.
    pub fn to_text(&self) -> String {
        let mut s = alloc::format!("group {} arity {}\n", self.name, self.arity);
        for g in &self.generators {
            let sections: Vec<String> = g.sections.iter().map(|w| self.format_word(w)).collect();
            s.push_str(&alloc::format!(
                "gen {} = perm {} sections [{}]\n",
                g.name,
                g.root,
                sections.join(", ")
            ));
        }
        for d in &self.rist {
            let words: Vec<String> = d.words.iter().map(|w| self.format_word(w)).collect();
            s.push_str(&alloc::format!(
                "rist {} = [{}]\n",
                d.vertex,
                words.join(", ")
            ));
        }
        let flags = [
            ("level-transitive", self.expect.level_transitive),
            ("weakly-branch", self.expect.weakly_branch),
            ("branch", self.expect.branch),
        ];
        for (flag, value) in flags {
            match value {
                Some(true) => s.push_str(&alloc::format!("expect {flag}\n")),
                Some(false) => s.push_str(&alloc::format!("expect not-{flag}\n")),
                None => {}
            }
        }
        s
    }
}

impl fmt::Display for GroupDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

enum WordError {
    Unknown(String),
    Syntax(ParseError),
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parses a word; `column` is the 1-based column of `text` within its line.
fn parse_word(
    text: &str,
    names: &[&str],
    line: usize,
    column: usize,
) -> core::result::Result<Word, WordError> {
    let mut letters = Vec::new();
    let trimmed = text.trim();
    let lead = text.len() - text.trim_start().len();
    if trimmed == "1" {
        return Ok(Word::identity());
    }
    if trimmed.is_empty() {
        return Err(WordError::Syntax(ParseError::new(
            line,
            column,
            "empty word",
        )));
    }
    let mut pos = lead;
    for factor in trimmed.split('*') {
        let col = column + pos + (factor.len() - factor.trim_start().len());
        pos += factor.len() + 1;
        let factor = factor.trim();
        let (name, exp) = match factor.split_once('^') {
            Some((n, e)) => {
                let e: i64 = e.trim().parse().map_err(|_| {
                    WordError::Syntax(ParseError::new(
                        line,
                        col,
                        alloc::format!("bad exponent in `{factor}`"),
                    ))
                })?;
                (n.trim(), e)
            }
            None => (factor, 1),
        };
        if name == "1" {
            continue;
        }
        if !is_ident(name) {
            return Err(WordError::Syntax(ParseError::new(
                line,
                col,
                alloc::format!("malformed word factor `{factor}`"),
            )));
        }
        let generator = names
            .iter()
            .position(|&n| n == name)
            .ok_or_else(|| WordError::Unknown(name.to_string()))?;
        let letter = Letter {
            generator,
            inverse: exp < 0,
        };
        for _ in 0..exp.unsigned_abs() {
            letters.push(letter);
        }
    }
    Ok(Word(letters))
}

/// Splits a bracketed list `[x, y, z]` at top-level commas, returning each
/// item with its byte offset inside `text`.
fn split_list(text: &str, line: usize, column: usize) -> Result<Vec<(usize, &str)>, ParseError> {
    let open = text
        .find('[')
        .ok_or_else(|| ParseError::new(line, column, "expected `[`"))?;
    let close = text
        .rfind(']')
        .ok_or_else(|| ParseError::new(line, column + open, "expected `]`"))?;
    if !text[close + 1..].trim().is_empty() {
        return Err(ParseError::new(
            line,
            column + close + 1,
            "trailing input after `]`",
        ));
    }
    let body = &text[open + 1..close];
    if body.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut start = 0;
    for (i, c) in body.char_indices() {
        if c == ',' {
            out.push((open + 1 + start, &body[start..i]));
            start = i + 1;
        }
    }
    out.push((open + 1 + start, &body[start..]));
    Ok(out)
}

struct RawGen<'a> {
    line: usize,
    name: String,
    root: Perm,
    sections: Vec<(usize, &'a str)>,
    sections_col: usize,
}

struct RawRist<'a> {
    line: usize,
    vertex: Vertex,
    words: Vec<(usize, &'a str)>,
    words_col: usize,
}

/// Parses `.ssg` text into a validated [`GroupDef`].
pub fn parse_group(text: &str) -> Result<GroupDef> {
    let mut header: Option<(String, usize)> = None;
    let mut gens: Vec<RawGen> = Vec::new();
    let mut rists: Vec<RawRist> = Vec::new();
    let mut expect = Expectations::default();

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(i) => &raw_line[..i],
            None => raw_line,
        };
        if line.trim().is_empty() {
            continue;
        }
        let indent = line.len() - line.trim_start().len();
        let body = line.trim_start();
        let col = |offset: usize| indent + offset + 1;
        let (keyword, rest) = body.split_once(char::is_whitespace).unwrap_or((body, ""));
        let rest_off = body.len() - rest.len();

        if header.is_none() && keyword != "group" {
            return Err(
                ParseError::new(line_no, col(0), "expected `group NAME arity P` header").into(),
            );
        }
        match keyword {
            "group" => {
                if header.is_some() {
                    return Err(ParseError::new(line_no, col(0), "duplicate group header").into());
                }
                let tokens: Vec<&str> = rest.split_whitespace().collect();
                match tokens.as_slice() {
                    [name, "arity", p] if is_ident_loose(name) => {
                        let arity: usize = p.parse().map_err(|_| {
                            ParseError::new(
                                line_no,
                                col(rest_off),
                                alloc::format!("bad arity `{p}`"),
                            )
                        })?;
                        if !(1..=crate::tree::MAX_ARITY).contains(&arity) {
                            return Err(ParseError::new(
                                line_no,
                                col(rest_off),
                                "arity out of range",
                            )
                            .into());
                        }
                        header = Some((name.to_string(), arity));
                    }
                    _ => {
                        return Err(ParseError::new(
                            line_no,
                            col(0),
                            "expected `group NAME arity P`",
                        )
                        .into())
                    }
                }
            }
            "gen" => {
                let arity = header.as_ref().unwrap().1;
                let (lhs, rhs) = rest.split_once('=').ok_or_else(|| {
                    ParseError::new(
                        line_no,
                        col(rest_off),
                        "expected `gen NAME = perm ... sections [...]`",
                    )
                })?;
                let name = lhs.trim();
                if !is_ident(name) {
                    return Err(ParseError::new(
                        line_no,
                        col(rest_off),
                        alloc::format!("invalid generator name `{name}`"),
                    )
                    .into());
                }
                if gens.iter().any(|g| g.name == name) {
                    return Err(ParseError::new(
                        line_no,
                        col(rest_off),
                        alloc::format!("duplicate generator `{name}`"),
                    )
                    .into());
                }
                let rhs_off = rest_off + lhs.len() + 1;
                let rhs_trim = rhs.trim_start();
                let rhs_off = rhs_off + (rhs.len() - rhs_trim.len());
                let after_perm = rhs_trim
                    .strip_prefix("perm")
                    .ok_or_else(|| ParseError::new(line_no, col(rhs_off), "expected `perm`"))?;
                let sec_at = after_perm.find("sections").ok_or_else(|| {
                    ParseError::new(line_no, col(rhs_off + 4), "expected `sections [...]`")
                })?;
                let cycles = &after_perm[..sec_at];
                let root = Perm::parse_cycles(cycles, arity).map_err(|e| {
                    ParseError::new(
                        line_no,
                        col(rhs_off + 4),
                        alloc::format!("malformed cycle: {e}"),
                    )
                })?;
                let list_off = rhs_off + 4 + sec_at + "sections".len();
                let list_text = &after_perm[sec_at + "sections".len()..];
                let sections = split_list(list_text, line_no, col(list_off))?;
                if sections.len() != arity {
                    return Err(ParseError::new(
                        line_no,
                        col(list_off),
                        alloc::format!(
                            "generator `{name}` lists {} sections, arity is {arity}",
                            sections.len()
                        ),
                    )
                    .into());
                }
                gens.push(RawGen {
                    line: line_no,
                    name: name.to_string(),
                    root,
                    sections,
                    sections_col: col(list_off),
                });
            }
            "rist" => {
                let (lhs, rhs) = rest.split_once('=').ok_or_else(|| {
                    ParseError::new(line_no, col(rest_off), "expected `rist VERTEX = [words]`")
                })?;
                let vertex: Vertex = lhs.trim().parse().map_err(|_| {
                    ParseError::new(
                        line_no,
                        col(rest_off),
                        alloc::format!("bad vertex `{}`", lhs.trim()),
                    )
                })?;
                let arity = header.as_ref().unwrap().1;
                if vertex.letters().iter().any(|&x| x as usize >= arity) {
                    return Err(ParseError::new(
                        line_no,
                        col(rest_off),
                        "vertex letter exceeds arity",
                    )
                    .into());
                }
                let list_off = rest_off + lhs.len() + 1;
                let words = split_list(rhs, line_no, col(list_off))?;
                rists.push(RawRist {
                    line: line_no,
                    vertex,
                    words,
                    words_col: col(list_off),
                });
            }
            "expect" => {
                let flag = rest.trim();
                let (negated, flag) = match flag.strip_prefix("not-") {
                    Some(f) => (true, f),
                    None => (false, flag),
                };
                let slot = match flag {
                    "level-transitive" => &mut expect.level_transitive,
                    "weakly-branch" => &mut expect.weakly_branch,
                    "branch" => &mut expect.branch,
                    _ => {
                        return Err(ParseError::new(
                            line_no,
                            col(rest_off),
                            alloc::format!("unknown expectation `{flag}`"),
                        )
                        .into())
                    }
                };
                *slot = Some(!negated);
            }
            other => {
                return Err(ParseError::new(
                    line_no,
                    col(0),
                    alloc::format!("unknown directive `{other}`"),
                )
                .into())
            }
        }
    }

    let (name, arity) = header.ok_or_else(|| ParseError::new(1, 1, "missing group header"))?;
    let names: Vec<&str> = gens.iter().map(|g| g.name.as_str()).collect();
    let resolve = |items: &[(usize, &str)], line: usize, base: usize| -> Result<Vec<Word>> {
        items
            .iter()
            .map(|&(off, t)| {
                parse_word(t, &names, line, base + off).map_err(|e| match e {
                    WordError::Unknown(n) => ParseError::new(
                        line,
                        base + off + (t.len() - t.trim_start().len()),
                        alloc::format!("unknown generator `{n}`"),
                    )
                    .into(),
                    WordError::Syntax(p) => p.into(),
                })
            })
            .collect()
    };
    let generators = gens
        .iter()
        .map(|g| {
            Ok(Generator {
                name: g.name.clone(),
                root: g.root.clone(),
                sections: resolve(&g.sections, g.line, g.sections_col)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let rist = rists
        .iter()
        .map(|r| {
            Ok(RistDecl {
                vertex: r.vertex.clone(),
                words: resolve(&r.words, r.line, r.words_col)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GroupDef {
        name,
        arity,
        generators,
        rist,
        expect,
    })
}

/// Group names may contain dashes (`gupta-sidki-3`).
fn is_ident_loose(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// Projects generators and words of a definition to finite depth, memoizing
/// per `(generator, depth, inverse)`.
pub struct Projector<'a> {
    def: &'a GroupDef,
    memo: BTreeMap<(usize, usize, bool), Portrait>,
}

impl<'a> Projector<'a> {
    pub fn new(def: &'a GroupDef) -> Self {
        Projector {
            def,
            memo: BTreeMap::new(),
        }
    }

    pub fn def(&self) -> &GroupDef {
        self.def
    }

    /// `π_k` of generator `index`.
    pub fn project(&mut self, index: usize, k: usize) -> Portrait {
        self.letter(
            Letter {
                generator: index,
                inverse: false,
            },
            k,
        )
    }

    pub fn project_named(&mut self, name: &str, k: usize) -> Result<Portrait> {
        let index = self.def.generator_index(name)?;
        Ok(self.project(index, k))
    }

    fn letter(&mut self, l: Letter, k: usize) -> Portrait {
        let key = (l.generator, k, l.inverse);
        if let Some(p) = self.memo.get(&key) {
            return p.clone();
        }
        let p = if l.inverse {
            self.letter(
                Letter {
                    inverse: false,
                    ..l
                },
                k,
            )
            .inverse()
        } else {
            self.build(l.generator, k)
        };
        self.memo.insert(key, p.clone());
        p
    }

    fn build(&mut self, index: usize, k: usize) -> Portrait {
        let def = self.def;
        if k == 0 {
            return Portrait::identity(&def.shape(0));
        }
        let generator = &def.generators[index];
        let root = generator.root.clone();
        let top = Portrait::from_vertex_perms(&def.shape(1), |_| root.clone())
            .expect("root permutation has the definition's arity");
        let sections: Vec<Portrait> = generator
            .sections
            .iter()
            .map(|w| self.evaluate(w, k - 1))
            .collect();
        Portrait::psi_compose(&sections, &top).expect("sections share one shape")
    }

    /// Right-to-left product of the projected letters of `w`.
    pub fn evaluate(&mut self, w: &Word, k: usize) -> Portrait {
        let mut acc = Portrait::identity(&self.def.shape(k));
        for &l in &w.0 {
            let p = self.letter(l, k);
            acc = acc.compose(&p).expect("same shape");
        }
        acc
    }
}

/// `π_k` of the named generator.
pub fn project(def: &GroupDef, name: &str, k: usize) -> Result<Portrait> {
    Projector::new(def).project_named(name, k)
}

pub fn evaluate_word(def: &GroupDef, w: &Word, k: usize) -> Portrait {
    Projector::new(def).evaluate(w, k)
}
