//! PENMAN notation reading and writing.
//!
//! ```text
//! (a / adjust-01
//!     :ARG0 (g / girl)
//!     :ARG1 (m / machine))
//! ```
//!
//! A bare token after a role is a variable iff that name is declared with
//! `/ concept` somewhere in the same expression; otherwise it is a constant.
//! Parsing and serialization are iterative, so deeply nested graphs do not
//! exhaust the stack.

use std::collections::HashSet;
use std::fmt;
use std::io::{self, BufRead};

use indexmap::IndexMap;
use thiserror::Error;

use crate::graph::{AmrGraph, Constant, NodeRef};

/// One PENMAN expression plus the position of its first character in the
/// enclosing file, used to report errors in file coordinates.
#[derive(Debug, Clone, Copy)]
pub struct PenmanSource<'a> {
    pub text: &'a str,
    pub line: usize,
    pub column: usize,
}

impl<'a> PenmanSource<'a> {
    pub fn new(text: &'a str) -> Self {
        Self {
            text,
            line: 1,
            column: 1,
        }
    }

    pub fn at(text: &'a str, line: usize, column: usize) -> Self {
        Self { text, line, column }
    }

    pub fn parse(&self) -> Result<Parsed, ParseError> {
        Parser::new(*self).run()
    }
}

impl<'a> From<&'a str> for PenmanSource<'a> {
    fn from(text: &'a str) -> Self {
        Self::new(text)
    }
}

/// 1-based line and column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("empty input")]
    Empty,
    #[error("unbalanced parentheses")]
    Unbalanced,
    #[error("unexpected `)`")]
    UnexpectedClose,
    #[error("variable `{0}` declared twice")]
    DuplicateVariable(String),
    #[error("edge label `{0}` is missing its leading `:`")]
    MissingColon(String),
    #[error("node is missing its variable")]
    MissingVariable,
    #[error("node `{0}` is missing `/ concept`")]
    MissingConcept(String),
    #[error("role `{0}` has no value")]
    MissingValue(String),
    #[error("unterminated string")]
    UnterminatedString,
    #[error("unexpected `{0}`")]
    Unexpected(String),
    #[error("trailing input after the graph")]
    TrailingInput,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{position}: {kind}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub position: Position,
}

/// Non-fatal observation made while parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Warning {
    pub position: Position,
    pub message: String,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.position, self.message)
    }
}

#[derive(Debug, Clone)]
pub struct Parsed {
    pub graph: AmrGraph,
    pub warnings: Vec<Warning>,
}

/// Parses one PENMAN expression, discarding warnings.
pub fn parse_penman<'a>(source: impl Into<PenmanSource<'a>>) -> Result<AmrGraph, ParseError> {
    source.into().parse().map(|p| p.graph)
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Open,
    Close,
    Slash,
    Role(String),
    Symbol(String),
    Str(String),
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(source: PenmanSource<'a>) -> Self {
        Self {
            chars: source.text.chars().peekable(),
            line: source.line,
            column: source.column,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn position(&self) -> Position {
        Position {
            line: self.line,
            column: self.column,
        }
    }

    fn next_token(&mut self) -> Result<Option<(Token, Position)>, ParseError> {
        while let Some(&c) = self.chars.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                // Comment to end of line.
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
        let pos = self.position();
        let Some(c) = self.bump() else {
            return Ok(None);
        };
        let token = match c {
            '(' => Token::Open,
            ')' => Token::Close,
            '/' => Token::Slash,
            '"' => {
                let mut value = String::new();
                loop {
                    match self.bump() {
                        None => {
                            return Err(ParseError {
                                kind: ParseErrorKind::UnterminatedString,
                                position: pos,
                            })
                        }
                        Some('"') => break,
                        Some('\\') => match self.bump() {
                            Some(escaped) => value.push(escaped),
                            None => {
                                return Err(ParseError {
                                    kind: ParseErrorKind::UnterminatedString,
                                    position: pos,
                                })
                            }
                        },
                        Some(other) => value.push(other),
                    }
                }
                Token::Str(value)
            }
            _ => {
                let mut text = String::from(c);
                while let Some(&next) = self.chars.peek() {
                    if next.is_whitespace() || matches!(next, '(' | ')' | '"') {
                        break;
                    }
                    // `g/girl` without spaces
                    if next == '/' && c != ':' {
                        break;
                    }
                    text.push(next);
                    self.bump();
                }
                if c == ':' {
                    Token::Role(text)
                } else {
                    Token::Symbol(text)
                }
            }
        };
        Ok(Some((token, pos)))
    }
}

enum RawTarget {
    Variable(String),
    Atom {
        token: String,
        quoted: bool,
        position: Position,
    },
}

struct RawEdge {
    source: String,
    label: String,
    target: RawTarget,
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    peeked: Option<(Token, Position)>,
    start: Position,
}

impl<'a> Parser<'a> {
    fn new(source: PenmanSource<'a>) -> Self {
        Self {
            lexer: Lexer::new(source),
            peeked: None,
            start: Position {
                line: source.line,
                column: source.column,
            },
        }
    }

    fn next(&mut self) -> Result<Option<(Token, Position)>, ParseError> {
        match self.peeked.take() {
            Some(t) => Ok(Some(t)),
            None => self.lexer.next_token(),
        }
    }

    fn peek(&mut self) -> Result<Option<&(Token, Position)>, ParseError> {
        if self.peeked.is_none() {
            self.peeked = self.lexer.next_token()?;
        }
        Ok(self.peeked.as_ref())
    }

    fn error<T>(kind: ParseErrorKind, position: Position) -> Result<T, ParseError> {
        Err(ParseError { kind, position })
    }

    /// Reads `var / concept` after an opening parenthesis.
    fn node_header(&mut self, open: Position) -> Result<(String, String), ParseError> {
        let variable = match self.next()? {
            Some((Token::Symbol(s), _)) => s,
            Some((_, pos)) => return Self::error(ParseErrorKind::MissingVariable, pos),
            None => return Self::error(ParseErrorKind::Unbalanced, open),
        };
        match self.next()? {
            Some((Token::Slash, _)) => {}
            Some((_, pos)) => return Self::error(ParseErrorKind::MissingConcept(variable), pos),
            None => return Self::error(ParseErrorKind::Unbalanced, open),
        }
        let concept = match self.next()? {
            Some((Token::Symbol(s), _)) | Some((Token::Str(s), _)) => s,
            Some((_, pos)) => return Self::error(ParseErrorKind::MissingConcept(variable), pos),
            None => return Self::error(ParseErrorKind::Unbalanced, open),
        };
        Ok((variable, concept))
    }

    fn run(mut self) -> Result<Parsed, ParseError> {
        let open = match self.next()? {
            None => return Self::error(ParseErrorKind::Empty, self.start),
            Some((Token::Open, pos)) => pos,
            Some((Token::Close, pos)) => return Self::error(ParseErrorKind::UnexpectedClose, pos),
            Some((t, pos)) => return Self::error(ParseErrorKind::Unexpected(describe(&t)), pos),
        };
        let (root, root_concept) = self.node_header(open)?;
        let mut nodes: Vec<(String, String, Position)> = vec![(root.clone(), root_concept, open)];
        let mut edges: Vec<RawEdge> = Vec::new();
        // Open nodes with the position of their `(`.
        let mut stack: Vec<(String, Position)> = vec![(root.clone(), open)];

        while let Some((parent, parent_open)) = stack.last().cloned() {
            let Some((token, pos)) = self.next()? else {
                return Self::error(ParseErrorKind::Unbalanced, parent_open);
            };
            match token {
                Token::Close => {
                    stack.pop();
                }
                Token::Role(label) => {
                    let value = self.next()?;
                    match value {
                        Some((Token::Open, child_open)) => {
                            let (variable, concept) = self.node_header(child_open)?;
                            edges.push(RawEdge {
                                source: parent,
                                label,
                                target: RawTarget::Variable(variable.clone()),
                            });
                            nodes.push((variable.clone(), concept, child_open));
                            stack.push((variable, child_open));
                        }
                        Some((Token::Symbol(token), position)) => edges.push(RawEdge {
                            source: parent,
                            label,
                            target: RawTarget::Atom {
                                token,
                                quoted: false,
                                position,
                            },
                        }),
                        Some((Token::Str(token), position)) => edges.push(RawEdge {
                            source: parent,
                            label,
                            target: RawTarget::Atom {
                                token,
                                quoted: true,
                                position,
                            },
                        }),
                        Some((_, p)) => return Self::error(ParseErrorKind::MissingValue(label), p),
                        None => return Self::error(ParseErrorKind::MissingValue(label), pos),
                    }
                }
                Token::Symbol(s) => {
                    // A role written without its colon, followed by a value.
                    return Self::error(ParseErrorKind::MissingColon(s), pos);
                }
                other => return Self::error(ParseErrorKind::Unexpected(describe(&other)), pos),
            }
        }

        if let Some((_, pos)) = self.peek()? {
            return Self::error(ParseErrorKind::TrailingInput, *pos);
        }

        let mut declared = HashSet::with_capacity(nodes.len());
        for (variable, _, pos) in &nodes {
            if !declared.insert(variable.as_str()) {
                return Self::error(ParseErrorKind::DuplicateVariable(variable.clone()), *pos);
            }
        }

        let mut warnings = Vec::new();
        let mut graph = AmrGraph::new(root, nodes[0].1.clone());
        for (variable, concept, _) in nodes.iter().skip(1) {
            graph
                .add_node(variable.clone(), concept.clone())
                .expect("declarations checked above");
        }
        let mut seen_edges = HashSet::with_capacity(edges.len());
        for edge in edges {
            let target = match edge.target {
                RawTarget::Variable(v) => NodeRef::Variable(v),
                RawTarget::Atom {
                    token,
                    quoted: true,
                    ..
                } => NodeRef::Constant(Constant::string(token)),
                RawTarget::Atom {
                    token,
                    quoted: false,
                    position,
                } => {
                    if declared.contains(token.as_str()) {
                        NodeRef::Variable(token)
                    } else {
                        if looks_like_variable(&token) {
                            warnings.push(Warning {
                                position,
                                message: format!(
                                    "`{token}` is not a declared variable; read as a constant"
                                ),
                            });
                        }
                        NodeRef::Constant(Constant::bare(&token))
                    }
                }
            };
            if !seen_edges.insert((edge.source.clone(), edge.label.clone(), target.clone())) {
                warnings.push(Warning {
                    position: self.start,
                    message: format!("duplicate edge {} {} dropped", edge.source, edge.label),
                });
                continue;
            }
            graph.add_edge(edge.source, edge.label, target);
        }

        Ok(Parsed { graph, warnings })
    }
}

fn describe(t: &Token) -> String {
    match t {
        Token::Open => "(".into(),
        Token::Close => ")".into(),
        Token::Slash => "/".into(),
        Token::Role(s) | Token::Symbol(s) => s.clone(),
        Token::Str(s) => format!("\"{s}\""),
    }
}

/// Variable names in AMR corpora are a letter optionally followed by digits.
fn looks_like_variable(token: &str) -> bool {
    let mut chars = token.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase()) && chars.all(|c| c.is_ascii_digit())
}

/// Writes `graph` in PENMAN notation with four-space indentation per level.
///
/// Children appear in canonical order. A variable is expanded at its first
/// occurrence in that walk and printed bare afterwards.
pub fn serialize_penman(graph: &AmrGraph) -> String {
    enum Step<'g> {
        Node(&'g str, usize),
        Child(&'g str, &'g NodeRef, usize),
        Close,
    }

    let mut out = String::new();
    let mut printed: HashSet<&str> = HashSet::with_capacity(graph.node_count());
    let mut stack = vec![Step::Node(graph.root(), 0)];
    while let Some(step) = stack.pop() {
        match step {
            Step::Close => out.push(')'),
            Step::Node(variable, depth) => {
                printed.insert(variable);
                out.push('(');
                out.push_str(variable);
                out.push_str(" / ");
                out.push_str(graph.concept(variable).unwrap_or_default());
                stack.push(Step::Close);
                let children = graph.children(variable).unwrap_or_default();
                for (label, target) in children.into_iter().rev() {
                    stack.push(Step::Child(label, target, depth + 1));
                }
            }
            Step::Child(label, target, depth) => {
                out.push('\n');
                for _ in 0..depth {
                    out.push_str("    ");
                }
                out.push_str(label);
                out.push(' ');
                match target {
                    NodeRef::Variable(v) if !printed.contains(v.as_str()) => {
                        stack.push(Step::Node(v, depth));
                    }
                    NodeRef::Variable(v) => out.push_str(v),
                    NodeRef::Constant(c) => out.push_str(&c.to_string()),
                }
            }
        }
    }
    out
}

/// Reads an AMR corpus: blocks separated by blank lines, `# ::key value`
/// metadata comments, one PENMAN expression per block.
pub fn read_corpus<R: BufRead>(reader: R) -> io::Result<Vec<CorpusItem>> {
    let mut items = Vec::new();
    let mut block = Block::default();
    for (index, line) in reader.lines().enumerate() {
        let line = line?;
        let number = index + 1;
        if line.trim().is_empty() {
            if let Some(item) = block.finish() {
                items.push(item);
            }
            block = Block::default();
        } else {
            block.push(number, line);
        }
    }
    if let Some(item) = block.finish() {
        items.push(item);
    }
    Ok(items)
}

/// [`read_corpus`] over an in-memory string.
pub fn read_corpus_str(text: &str) -> Vec<CorpusItem> {
    read_corpus(text.as_bytes()).expect("reading from memory cannot fail")
}

/// One corpus block: either a parsed entry or the reason it failed.
pub type CorpusItem = Result<AnnotatedAmr, EntryError>;

/// A corpus entry whose graph did not parse.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("entry {}: {error}", .id.as_deref().unwrap_or("<no id>"))]
pub struct EntryError {
    pub id: Option<String>,
    pub metadata: IndexMap<String, String>,
    pub error: ParseError,
}

#[derive(Debug, Clone)]
pub struct AnnotatedAmr {
    /// `# ::key value` pairs in source order, including `id` and `snt`.
    pub metadata: IndexMap<String, String>,
    pub graph: AmrGraph,
    pub warnings: Vec<Warning>,
}

impl AnnotatedAmr {
    pub fn id(&self) -> Option<&str> {
        self.metadata.get("id").map(String::as_str)
    }

    pub fn sentence(&self) -> Option<&str> {
        self.metadata.get("snt").map(String::as_str)
    }

    /// Metadata other than `id` and `snt`.
    pub fn extra_metadata(&self) -> impl Iterator<Item = (&str, &str)> {
        self.metadata
            .iter()
            .filter(|(k, _)| k.as_str() != "id" && k.as_str() != "snt")
            .map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

#[derive(Default)]
struct Block {
    metadata: IndexMap<String, String>,
    body: String,
    first_line: Option<usize>,
    last_line: usize,
}

impl Block {
    fn push(&mut self, number: usize, line: String) {
        let trimmed = line.trim_start();
        if trimmed.starts_with('#') {
            parse_metadata(trimmed, &mut self.metadata);
            return;
        }
        if self.first_line.is_none() {
            self.first_line = Some(number);
        } else {
            // Keep line numbers aligned with the file when comments
            // interleave the graph text.
            for _ in self.last_line..number {
                self.body.push('\n');
            }
        }
        self.last_line = number;
        self.body.push_str(&line);
    }

    fn finish(self) -> Option<CorpusItem> {
        let first_line = self.first_line?;
        let source = PenmanSource::at(&self.body, first_line, 1);
        Some(match source.parse() {
            Ok(parsed) => Ok(AnnotatedAmr {
                metadata: self.metadata,
                graph: parsed.graph,
                warnings: parsed.warnings,
            }),
            Err(error) => Err(EntryError {
                id: self.metadata.get("id").cloned(),
                metadata: self.metadata,
                error,
            }),
        })
    }
}

/// Parses `# ::id x ::date y` style comment lines. `snt` and `tok` take the
/// rest of the line verbatim.
fn parse_metadata(line: &str, metadata: &mut IndexMap<String, String>) {
    let body = line.trim_start_matches('#').trim_start();
    let Some(mut rest) = body.strip_prefix("::") else {
        return;
    };
    loop {
        let (key, after_key) = match rest.find(char::is_whitespace) {
            Some(i) => (&rest[..i], rest[i..].trim_start()),
            None => (rest, ""),
        };
        if key.is_empty() {
            return;
        }
        if key == "snt" || key == "tok" {
            metadata.insert(key.to_string(), after_key.trim_end().to_string());
            return;
        }
        let (value, next) = match find_next_key(after_key) {
            Some(i) => (&after_key[..i], Some(&after_key[i + 2..])),
            None => (after_key, None),
        };
        metadata.insert(key.to_string(), value.trim().to_string());
        match next {
            Some(n) => rest = n,
            None => return,
        }
    }
}

/// Byte offset of the next ` ::key` marker.
fn find_next_key(s: &str) -> Option<usize> {
    if s.starts_with("::") {
        return Some(0);
    }
    s.match_indices(" ::").next().map(|(i, _)| i + 1)
}
