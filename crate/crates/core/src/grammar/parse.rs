//! Recursive-descent parser for the GBNF dialect.
//!
//! Rules are `name ::= alternation`. A rule body runs until the next
//! `name ::=` header, so bodies may span lines. `#` starts a comment.

use std::collections::HashSet;

use super::ast::{CharClass, Element, GrammarAst, RepeatKind, Rule, Sequence};
use super::GrammarError;

pub fn parse_gbnf(text: &str) -> Result<GrammarAst, GrammarError> {
    let mut p = Parser {
        chars: text.chars().collect(),
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut rules: Vec<Rule> = Vec::new();
    let mut seen = HashSet::new();

    p.skip_ws();
    while !p.at_end() {
        let (line, col) = (p.line, p.col);
        let name = p.name().ok_or_else(|| p.error("expected rule name"))?;
        p.skip_ws();
        if !p.eat_str("::=") {
            return Err(p.error("expected `::=` after rule name"));
        }
        let alternatives = p.alternation(false)?;
        if !seen.insert(name.clone()) {
            return Err(GrammarError::Syntax {
                line,
                col,
                message: format!("rule `{name}` defined more than once"),
            });
        }
        rules.push(Rule { name, alternatives });
        p.skip_ws();
    }

    let ast = GrammarAst { rules };
    check_references(&ast)?;
    Ok(ast)
}

/// Every reference resolves and `root` exists.
pub(crate) fn check_references(ast: &GrammarAst) -> Result<(), GrammarError> {
    let defined: HashSet<&str> = ast.rules.iter().map(|r| r.name.as_str()).collect();
    fn walk<'a>(el: &'a Element, out: &mut Vec<&'a str>) {
        match el {
            Element::RuleRef(n) => out.push(n),
            Element::Group(alts) => alts.iter().flatten().for_each(|e| walk(e, out)),
            Element::Repeat { inner, .. } => walk(inner, out),
            Element::Literal(_) | Element::Class(_) => {}
        }
    }
    for rule in &ast.rules {
        let mut refs = Vec::new();
        rule.alternatives
            .iter()
            .flatten()
            .for_each(|e| walk(e, &mut refs));
        if let Some(missing) = refs.into_iter().find(|r| !defined.contains(r)) {
            return Err(GrammarError::UndefinedRule {
                name: missing.to_string(),
                referenced_from: rule.name.clone(),
            });
        }
        for el in rule.alternatives.iter().flatten() {
            check_class_ranges(el)?;
        }
    }
    if !defined.contains("root") {
        return Err(GrammarError::MissingRoot);
    }
    Ok(())
}

fn check_class_ranges(el: &Element) -> Result<(), GrammarError> {
    match el {
        Element::Class(c) => {
            if let Some(&(lo, hi)) = c.ranges.iter().find(|(lo, hi)| lo > hi) {
                return Err(GrammarError::InvalidRange { lo, hi });
            }
            Ok(())
        }
        Element::Group(alts) => alts.iter().flatten().try_for_each(check_class_ranges),
        Element::Repeat { inner, .. } => check_class_ranges(inner),
        _ => Ok(()),
    }
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

impl Parser {
    fn at_end(&self) -> bool {
        self.pos >= self.chars.len()
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn error(&self, message: &str) -> GrammarError {
        GrammarError::Syntax {
            line: self.line,
            col: self.col,
            message: message.to_string(),
        }
    }

    fn eat_str(&mut self, s: &str) -> bool {
        let n = s.chars().count();
        if self.chars.len() - self.pos >= n && self.chars[self.pos..self.pos + n].iter().copied().eq(s.chars()) {
            for _ in 0..n {
                self.bump();
            }
            true
        } else {
            false
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c == '#' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn name(&mut self) -> Option<String> {
        let start = self.pos;
        while self.peek().is_some_and(is_name_char) {
            self.bump();
        }
        (self.pos > start).then(|| self.chars[start..self.pos].iter().collect())
    }

    /// True when the upcoming tokens are `name ::=`, i.e. a new rule header.
    fn at_rule_header(&self) -> bool {
        let mut i = self.pos;
        let start = i;
        while i < self.chars.len() && is_name_char(self.chars[i]) {
            i += 1;
        }
        if i == start {
            return false;
        }
        while i < self.chars.len() && self.chars[i].is_whitespace() {
            i += 1;
        }
        self.chars[i..].starts_with(&[':', ':', '='])
    }

    fn alternation(&mut self, nested: bool) -> Result<Vec<Sequence>, GrammarError> {
        let mut alts = vec![self.sequence(nested)?];
        loop {
            self.skip_ws();
            if self.peek() == Some('|') {
                self.bump();
                alts.push(self.sequence(nested)?);
            } else {
                return Ok(alts);
            }
        }
    }

    fn sequence(&mut self, nested: bool) -> Result<Sequence, GrammarError> {
        let mut seq = Vec::new();
        loop {
            self.skip_ws();
            match self.peek() {
                None | Some('|') => break,
                Some(')') if nested => break,
                Some(')') => return Err(self.error("unbalanced `)`")),
                _ if !nested && self.at_rule_header() => break,
                _ => {}
            }
            let el = self.primary()?;
            let el = self.postfix(el);
            // `""` contributes nothing to a sequence.
            if !matches!(&el, Element::Literal(s) if s.is_empty()) {
                seq.push(el);
            }
        }
        Ok(seq)
    }

    fn postfix(&mut self, mut el: Element) -> Element {
        loop {
            let kind = match self.peek() {
                Some('*') => RepeatKind::ZeroOrMore,
                Some('+') => RepeatKind::OneOrMore,
                Some('?') => RepeatKind::Optional,
                _ => return el,
            };
            self.bump();
            el = Element::Repeat {
                inner: Box::new(el),
                kind,
            };
        }
    }

    fn primary(&mut self) -> Result<Element, GrammarError> {
        match self.peek() {
            Some('"') => {
                self.bump();
                self.literal().map(Element::Literal)
            }
            Some('[') => {
                self.bump();
                self.class().map(Element::Class)
            }
            Some('(') => {
                self.bump();
                let alts = self.alternation(true)?;
                self.skip_ws();
                if self.bump() != Some(')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(Element::Group(alts))
            }
            Some('.') => {
                self.bump();
                Ok(Element::Class(CharClass::any()))
            }
            Some(c) if is_name_char(c) => Ok(Element::RuleRef(self.name().unwrap_or_default())),
            Some(c) => Err(self.error(&format!("unexpected character `{c}`"))),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn escape(&mut self) -> Result<char, GrammarError> {
        let c = self.bump().ok_or_else(|| self.error("unterminated escape"))?;
        let hex = |p: &mut Parser, n: usize| -> Result<char, GrammarError> {
            let mut v = 0u32;
            for _ in 0..n {
                let d = p
                    .bump()
                    .and_then(|c| c.to_digit(16))
                    .ok_or_else(|| p.error("bad hex escape"))?;
                v = v * 16 + d;
            }
            char::from_u32(v).ok_or_else(|| p.error("escape is not a scalar value"))
        };
        Ok(match c {
            'n' => '\n',
            't' => '\t',
            'r' => '\r',
            'x' => hex(self, 2)?,
            'u' => hex(self, 4)?,
            'U' => hex(self, 8)?,
            '"' | '\\' | ']' | '[' | '-' | '^' => c,
            other => return Err(self.error(&format!("unknown escape `\\{other}`"))),
        })
    }

    fn literal(&mut self) -> Result<String, GrammarError> {
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err(self.error("unterminated string literal")),
                Some('"') => return Ok(out),
                Some('\\') => out.push(self.escape()?),
                Some(c) => out.push(c),
            }
        }
    }

    fn class_char(&mut self) -> Result<char, GrammarError> {
        match self.bump() {
            None => Err(self.error("unterminated character class")),
            Some('\\') => self.escape(),
            Some(c) => Ok(c),
        }
    }

    fn class(&mut self) -> Result<CharClass, GrammarError> {
        let mut negated = false;
        if self.peek() == Some('^') {
            self.bump();
            negated = true;
        }
        let mut ranges = Vec::new();
        loop {
            match self.peek() {
                None => return Err(self.error("unterminated character class")),
                Some(']') => {
                    self.bump();
                    break;
                }
                _ => {}
            }
            let (line, col) = (self.line, self.col);
            let lo = self.class_char()?;
            let hi = if self.peek() == Some('-') && self.chars.get(self.pos + 1) != Some(&']') {
                self.bump();
                self.class_char()?
            } else {
                lo
            };
            if lo > hi {
                return Err(GrammarError::Syntax {
                    line,
                    col,
                    message: format!("character range {lo:?}-{hi:?} is reversed"),
                });
            }
            ranges.push((lo, hi));
        }
        Ok(CharClass { ranges, negated })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn men_grammar() {
        let ast = parse_gbnf("root ::= response\nresponse ::= [1-5]").unwrap();
        assert_eq!(ast.rules.len(), 2);
        assert_eq!(
            ast.rule("response").unwrap().alternatives,
            vec![vec![Element::Class(CharClass::range('1', '5'))]]
        );
    }

    #[test]
    fn adjacent_elements_without_spaces() {
        let ast = parse_gbnf("root ::= response\nresponse ::= \"0.\"[0-9][0-9]").unwrap();
        let seq = &ast.rule("response").unwrap().alternatives[0];
        assert_eq!(seq.len(), 3);
        assert_eq!(seq[0], Element::Literal("0.".into()));
    }

    #[test]
    fn empty_literal_is_empty_sequence() {
        let ast = parse_gbnf("root ::= \"\"").unwrap();
        assert_eq!(ast.rules[0].alternatives, vec![Vec::<Element>::new()]);
    }

    #[test]
    fn escapes_and_classes() {
        let ast = parse_gbnf(r#"root ::= "a\n\t\"\\" [^\]x-z] "\x41""#).unwrap();
        let seq = &ast.rules[0].alternatives[0];
        assert_eq!(seq[0], Element::Literal("a\n\t\"\\".into()));
        assert_eq!(
            seq[1],
            Element::Class(CharClass {
                ranges: vec![(']', ']'), ('x', 'z')],
                negated: true
            })
        );
        assert_eq!(seq[2], Element::Literal("A".into()));
    }

    #[test]
    fn multiline_bodies_groups_and_comments() {
        let text = "# header\nroot ::= item+ # trailing\n  | (\"a\" |\n \"b\")?\nitem ::= [0-9]\n";
        let ast = parse_gbnf(text).unwrap();
        assert_eq!(ast.rules.len(), 2);
        assert_eq!(ast.rules[0].alternatives.len(), 2);
    }

    #[test]
    fn syntax_error_position() {
        match parse_gbnf("root ::= \"abc") {
            Err(GrammarError::Syntax { line: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_gbnf("root ::= x\nx ::= ]") {
            Err(GrammarError::Syntax { line: 2, col: 7, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn undefined_and_missing_root() {
        assert!(matches!(
            parse_gbnf("root ::= nope"),
            Err(GrammarError::UndefinedRule { .. })
        ));
        assert!(matches!(
            parse_gbnf("response ::= [1-5]"),
            Err(GrammarError::MissingRoot)
        ));
    }

    #[test]
    fn reversed_range_rejected() {
        assert!(matches!(parse_gbnf("root ::= [9-0]"), Err(GrammarError::Syntax { .. })));
    }

    #[test]
    fn duplicate_rule_rejected() {
        assert!(parse_gbnf("root ::= \"a\"\nroot ::= \"b\"").is_err());
    }

    #[test]
    fn display_round_trips() {
        let text = "root ::= (\"a\" | [b-d])* x?\nx ::= [^\\]] \"\\n\"\n";
        let ast = parse_gbnf(text).unwrap();
        let again = parse_gbnf(&ast.to_string()).unwrap();
        assert_eq!(ast, again);
    }
}
