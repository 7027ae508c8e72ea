//! The DOT subset used for task-graph files:
//!
//! ```text
//! digraph name {
//!     a [Weight=2];
//!     b [Weight=3];
//!     a -> b [Weight=1];
//! }
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{GraphError, TaskGraph, TaskId, Time};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Arrow,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Eq,
    Semi,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, GraphError> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let body = match raw.find("//") {
            Some(i) => &raw[..i],
            None => raw,
        };
        let bytes = body.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i];
            match c {
                b' ' | b'\t' | b'\r' => i += 1,
                b'{' => {
                    out.push((Tok::LBrace, line));
                    i += 1;
                }
                b'}' => {
                    out.push((Tok::RBrace, line));
                    i += 1;
                }
                b'[' => {
                    out.push((Tok::LBracket, line));
                    i += 1;
                }
                b']' => {
                    out.push((Tok::RBracket, line));
                    i += 1;
                }
                b'=' => {
                    out.push((Tok::Eq, line));
                    i += 1;
                }
                b';' => {
                    out.push((Tok::Semi, line));
                    i += 1;
                }
                b'-' if bytes.get(i + 1) == Some(&b'>') => {
                    out.push((Tok::Arrow, line));
                    i += 2;
                }
                b'-' if bytes.get(i + 1).is_some_and(u8::is_ascii_digit) => {
                    let start = i;
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    let v = body[start..i].parse().map_err(|_| GraphError::Syntax {
                        line,
                        msg: "integer out of range".into(),
                    })?;
                    out.push((Tok::Int(v), line));
                }
                b'"' => {
                    let start = i + 1;
                    let end = body[start..].find('"').ok_or_else(|| GraphError::Syntax {
                        line,
                        msg: "unterminated string".into(),
                    })?;
                    out.push((Tok::Ident(body[start..start + end].to_string()), line));
                    i = start + end + 1;
                }
                c if c.is_ascii_alphanumeric() || c == b'_' => {
                    let start = i;
                    while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                        i += 1;
                    }
                    out.push((Tok::Ident(body[start..i].to_string()), line));
                }
                other => {
                    return Err(GraphError::Syntax {
                        line,
                        msg: format!("unexpected character `{}`", other as char),
                    })
                }
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map_or(1, |t| t.1)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, GraphError> {
        Err(GraphError::Syntax { line: self.line(), msg: msg.into() })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.0.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), GraphError> {
        match self.next() {
            Some(t) if t == want => Ok(()),
            Some(t) => {
                self.pos -= 1;
                self.err(format!("expected {want:?}, found {t:?}"))
            }
            None => self.err(format!("expected {want:?}, found end of input")),
        }
    }

    fn ident(&mut self) -> Result<String, GraphError> {
        match self.next() {
            Some(Tok::Ident(s)) => Ok(s),
            Some(Tok::Int(v)) if v >= 0 => Ok(v.to_string()),
            _ => {
                self.pos -= 1;
                self.err("expected identifier")
            }
        }
    }

    /// `[Weight=<int>]`
    fn weight_attr(&mut self) -> Result<i64, GraphError> {
        self.expect(Tok::LBracket)?;
        let key = self.ident()?;
        if key != "Weight" {
            return self.err(format!("unknown attribute `{key}`"));
        }
        self.expect(Tok::Eq)?;
        let v = match self.next() {
            Some(Tok::Int(v)) => v,
            Some(Tok::Ident(s)) => match s.parse() {
                Ok(v) => v,
                Err(_) => {
                    self.pos -= 1;
                    return self.err("expected integer weight");
                }
            },
            _ => {
                self.pos -= 1;
                return self.err("expected integer weight");
            }
        };
        self.expect(Tok::RBracket)?;
        Ok(v)
    }
}

/// Parses a graph file. Task ids follow declaration order.
pub fn parse_graph(text: &str) -> Result<TaskGraph, GraphError> {
    let mut p = Parser { toks: tokenize(text)?, pos: 0 };
    match p.next() {
        Some(Tok::Ident(k)) if k == "digraph" => {}
        _ => {
            p.pos = 0;
            return p.err("expected `digraph`");
        }
    }
    let name = match p.peek() {
        Some(Tok::LBrace) => String::new(),
        _ => p.ident()?,
    };
    p.expect(Tok::LBrace)?;

    let mut tasks: Vec<(String, Time)> = Vec::new();
    let mut index: HashMap<String, TaskId> = HashMap::new();
    let mut raw_edges: Vec<(String, String, i64)> = Vec::new();
    loop {
        match p.peek() {
            Some(Tok::RBrace) => {
                p.next();
                break;
            }
            None => return p.err("missing closing `}`"),
            _ => {}
        }
        let first = p.ident()?;
        if p.peek() == Some(&Tok::Arrow) {
            p.next();
            let second = p.ident()?;
            let w = p.weight_attr()?;
            p.expect(Tok::Semi)?;
            raw_edges.push((first, second, w));
        } else {
            let w = p.weight_attr()?;
            p.expect(Tok::Semi)?;
            if w <= 0 {
                return Err(GraphError::NonPositiveWeight(first, w));
            }
            let w = Time::try_from(w).map_err(|_| GraphError::Overflow)?;
            if index.insert(first.clone(), tasks.len()).is_some() {
                return Err(GraphError::DuplicateTask(first));
            }
            tasks.push((first, w));
        }
    }
    if p.peek().is_some() {
        return p.err("trailing content after `}`");
    }

    let mut edges = Vec::with_capacity(raw_edges.len());
    for (a, b, w) in raw_edges {
        let src = *index.get(&a).ok_or_else(|| GraphError::UndefinedEndpoint(a.clone()))?;
        let dst = *index.get(&b).ok_or_else(|| GraphError::UndefinedEndpoint(b.clone()))?;
        if w < 0 {
            return Err(GraphError::NegativeCost(a, b, w));
        }
        let w = Time::try_from(w).map_err(|_| GraphError::Overflow)?;
        edges.push((src, dst, w));
    }
    TaskGraph::new(name, tasks, edges)
}

fn quoted(id: &str) -> String {
    if !id.is_empty() && id.bytes().all(|c| c.is_ascii_alphanumeric() || c == b'_') {
        id.to_string()
    } else {
        format!("\"{id}\"")
    }
}

/// Writes tasks in topological order, then edges sorted by `(src, dst)`.
pub fn serialize_graph(g: &TaskGraph) -> String {
    let mut out = String::new();
    let name = if g.name().is_empty() { "g" } else { g.name() };
    writeln!(out, "digraph {} {{", quoted(name)).unwrap();
    for &t in g.topo_order() {
        writeln!(out, "\t{} [Weight={}];", quoted(g.label(t)), g.weight(t)).unwrap();
    }
    for e in g.edges() {
        writeln!(out, "\t{} -> {} [Weight={}];", quoted(g.label(e.src)), quoted(g.label(e.dst)), e.cost).unwrap();
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const G1: &str = "digraph g1 {
        a [Weight=2];
        b [Weight=3];
        c [Weight=1];
        a -> b [Weight=1];
        a -> c [Weight=4]; // expensive
    }";

    #[test]
    fn parses_three_node_graph() {
        let g = parse_graph(G1).unwrap();
        assert_eq!(g.num_tasks(), 3);
        assert_eq!(g.num_edges(), 2);
        assert_eq!(g.name(), "g1");
        assert_eq!(g.edge_cost(0, 2), Some(4));
    }

    #[test]
    fn whitespace_insensitive() {
        let g = parse_graph("digraph x{a[Weight=1];b[ Weight = 2 ];a->b[Weight=0];}").unwrap();
        assert_eq!(g.num_edges(), 1);
    }

    #[test]
    fn rejects_two_cycle() {
        let text = "digraph g { a [Weight=1]; b [Weight=1]; a -> b [Weight=1]; b -> a [Weight=1]; }";
        assert!(matches!(parse_graph(text), Err(GraphError::Cycle(_))));
    }

    #[test]
    fn rejects_zero_weight() {
        let text = "digraph g { a [Weight=0]; }";
        assert!(matches!(parse_graph(text), Err(GraphError::NonPositiveWeight(_, 0))));
    }

    #[test]
    fn rejects_negative_cost() {
        let text = "digraph g { a [Weight=1]; b [Weight=1]; a -> b [Weight=-3]; }";
        assert!(matches!(parse_graph(text), Err(GraphError::NegativeCost(_, _, -3))));
    }

    #[test]
    fn rejects_duplicate_edge_and_undefined_endpoint() {
        let dup = "digraph g { a [Weight=1]; b [Weight=1]; a -> b [Weight=1]; a -> b [Weight=2]; }";
        assert!(matches!(parse_graph(dup), Err(GraphError::DuplicateEdge(..))));
        let undef = "digraph g { a [Weight=1]; a -> z [Weight=1]; }";
        assert!(matches!(parse_graph(undef), Err(GraphError::UndefinedEndpoint(ref s)) if s == "z"));
    }

    #[test]
    fn syntax_errors_carry_line() {
        let text = "digraph g {\n a [Weight=1];\n b [Height=1];\n}";
        match parse_graph(text) {
            Err(GraphError::Syntax { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn serializer_layout() {
        let g = parse_graph(G1).unwrap();
        let text = serialize_graph(&g);
        assert_eq!(
            text,
            "digraph g1 {\n\ta [Weight=2];\n\tb [Weight=3];\n\tc [Weight=1];\n\
             \ta -> b [Weight=1];\n\ta -> c [Weight=4];\n}\n"
        );
        assert!(parse_graph(&text).unwrap().same_as(&g));
    }

    #[test]
    fn quoted_names_round_trip() {
        let g = TaskGraph::new("fork-join_4_0.1_0", vec![("x.1".into(), 2), ("y".into(), 1)], vec![(0, 1, 3)]).unwrap();
        let text = serialize_graph(&g);
        assert!(text.starts_with("digraph \"fork-join_4_0.1_0\" {"));
        let h = parse_graph(&text).unwrap();
        assert_eq!(h.name(), g.name());
        assert_eq!(h.label(0), "x.1");
        assert_eq!(serialize_graph(&h), text);
        assert!(parse_graph("digraph \"open {").is_err());
    }
}
