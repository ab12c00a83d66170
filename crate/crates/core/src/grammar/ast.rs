use std::fmt;

/// A parsed GBNF grammar. Rules keep their definition order.
#[derive(Debug, Clone, PartialEq)]
pub struct GrammarAst {
    pub rules: Vec<Rule>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub name: String,
    pub alternatives: Vec<Sequence>,
}

pub type Sequence = Vec<Element>;

#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    /// Quoted literal. An empty literal matches the empty string.
    Literal(String),
    Class(CharClass),
    RuleRef(String),
    /// Parenthesised alternation.
    Group(Vec<Sequence>),
    Repeat {
        inner: Box<Element>,
        kind: RepeatKind,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RepeatKind {
    ZeroOrMore,
    OneOrMore,
    Optional,
}

/// A set of scalar ranges, optionally negated. Ranges are inclusive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CharClass {
    pub ranges: Vec<(char, char)>,
    pub negated: bool,
}

impl CharClass {
    pub fn single(c: char) -> Self {
        CharClass {
            ranges: vec![(c, c)],
            negated: false,
        }
    }

    pub fn range(lo: char, hi: char) -> Self {
        CharClass {
            ranges: vec![(lo, hi)],
            negated: false,
        }
    }

    /// Matches every scalar value.
    pub fn any() -> Self {
        CharClass {
            ranges: Vec::new(),
            negated: true,
        }
    }

    #[inline]
    pub fn matches(&self, c: char) -> bool {
        let hit = self.ranges.iter().any(|&(lo, hi)| lo <= c && c <= hi);
        hit != self.negated
    }

    /// Number of scalars the class admits when not negated.
    pub fn positive_width(&self) -> Option<u64> {
        if self.negated {
            return None;
        }
        Some(
            self.ranges
                .iter()
                .map(|&(lo, hi)| u64::from(hi) - u64::from(lo) + 1)
                .sum(),
        )
    }
}

impl GrammarAst {
    pub fn rule(&self, name: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.name == name)
    }
}

fn write_literal(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("\"")?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            '\r' => f.write_str("\\r")?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("\"")
}

fn write_class_char(f: &mut fmt::Formatter<'_>, c: char) -> fmt::Result {
    match c {
        ']' | '\\' | '-' | '^' => write!(f, "\\{c}"),
        '\n' => f.write_str("\\n"),
        '\t' => f.write_str("\\t"),
        '\r' => f.write_str("\\r"),
        c => write!(f, "{c}"),
    }
}

impl fmt::Display for CharClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        if self.negated {
            f.write_str("^")?;
        }
        for &(lo, hi) in &self.ranges {
            write_class_char(f, lo)?;
            if hi != lo {
                f.write_str("-")?;
                write_class_char(f, hi)?;
            }
        }
        f.write_str("]")
    }
}

fn write_alternatives(f: &mut fmt::Formatter<'_>, alts: &[Sequence]) -> fmt::Result {
    for (i, seq) in alts.iter().enumerate() {
        if i > 0 {
            f.write_str(" | ")?;
        }
        if seq.is_empty() {
            f.write_str("\"\"")?;
        }
        for (j, el) in seq.iter().enumerate() {
            if j > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{el}")?;
        }
    }
    Ok(())
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Literal(s) => write_literal(f, s),
            Element::Class(c) => write!(f, "{c}"),
            Element::RuleRef(name) => f.write_str(name),
            Element::Group(alts) => {
                f.write_str("(")?;
                write_alternatives(f, alts)?;
                f.write_str(")")
            }
            Element::Repeat { inner, kind } => {
                let op = match kind {
                    RepeatKind::ZeroOrMore => '*',
                    RepeatKind::OneOrMore => '+',
                    RepeatKind::Optional => '?',
                };
                write!(f, "{inner}{op}")
            }
        }
    }
}

impl fmt::Display for GrammarAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for rule in &self.rules {
            write!(f, "{} ::= ", rule.name)?;
            write_alternatives(f, &rule.alternatives)?;
            f.write_str("\n")?;
        }
        Ok(())
    }
}
