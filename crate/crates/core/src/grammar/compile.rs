//! Lowering of [`GrammarAst`] into a flat symbol table.
//!
//! Each alternative becomes a run of symbols terminated by [`Symbol::End`];
//! a recognizer frame is simply an index into that table. Groups and
//! repetitions are rewritten into auxiliary rules:
//!
//! ```text
//! e*  =>  r ::= e r | ""
//! e+  =>  r ::= e r | e
//! e?  =>  r ::= e | ""
//! ```

use std::collections::HashMap;

use super::ast::{CharClass, Element, GrammarAst, RepeatKind};
use super::parse::check_references;
use super::GrammarError;

pub type RuleId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Symbol {
    Char(CharClass),
    Rule(RuleId),
    End,
}

/// A validated grammar ready for incremental recognition. Immutable.
#[derive(Debug, Clone)]
pub struct CompiledGrammar {
    pub(crate) symbols: Vec<Symbol>,
    /// Start index of every alternative, per rule.
    pub(crate) rule_alts: Vec<Vec<u32>>,
    rule_names: Vec<String>,
    nullable: Vec<bool>,
    root: RuleId,
}

impl CompiledGrammar {
    pub fn root(&self) -> RuleId {
        self.root
    }

    pub fn rule_count(&self) -> usize {
        self.rule_alts.len()
    }

    pub fn rule_name(&self, id: RuleId) -> &str {
        &self.rule_names[id as usize]
    }

    pub fn rule_id(&self, name: &str) -> Option<RuleId> {
        self.rule_names
            .iter()
            .position(|n| n == name)
            .map(|i| i as RuleId)
    }

    /// Whether the root derives the empty string.
    pub fn is_nullable(&self) -> bool {
        self.nullable[self.root as usize]
    }
}

pub fn compile(ast: &GrammarAst) -> Result<CompiledGrammar, GrammarError> {
    if ast.rule("root").is_none() {
        return Err(GrammarError::UnreachableRoot);
    }
    check_references(ast)?;

    let mut lowering = Lowering {
        ids: ast
            .rules
            .iter()
            .enumerate()
            .map(|(i, r)| (r.name.clone(), i as RuleId))
            .collect(),
        names: ast.rules.iter().map(|r| r.name.clone()).collect(),
        bodies: vec![Vec::new(); ast.rules.len()],
    };
    for (i, rule) in ast.rules.iter().enumerate() {
        let alts = rule
            .alternatives
            .iter()
            .map(|seq| lowering.sequence(seq, &rule.name))
            .collect();
        lowering.bodies[i] = alts;
    }

    let Lowering { names, bodies, ids } = lowering;
    let root = ids["root"];

    let nullable = nullable_rules(&bodies);
    if let Some(rule) = find_left_recursion(&bodies, &nullable) {
        return Err(GrammarError::LeftRecursion {
            rule: names[rule as usize].clone(),
        });
    }

    let mut symbols = Vec::new();
    let mut rule_alts = Vec::with_capacity(bodies.len());
    for alts in bodies {
        let mut starts = Vec::with_capacity(alts.len());
        for seq in alts {
            starts.push(symbols.len() as u32);
            symbols.extend(seq);
            symbols.push(Symbol::End);
        }
        rule_alts.push(starts);
    }

    Ok(CompiledGrammar {
        symbols,
        rule_alts,
        rule_names: names,
        nullable,
        root,
    })
}

struct Lowering {
    ids: HashMap<String, RuleId>,
    names: Vec<String>,
    bodies: Vec<Vec<Vec<Symbol>>>,
}

impl Lowering {
    fn fresh(&mut self, parent: &str, alts: Vec<Vec<Symbol>>) -> RuleId {
        let id = self.bodies.len() as RuleId;
        self.names.push(format!("{parent}_{id}"));
        self.bodies.push(alts);
        id
    }

    fn sequence(&mut self, seq: &[Element], parent: &str) -> Vec<Symbol> {
        let mut out = Vec::new();
        for el in seq {
            self.element(el, parent, &mut out);
        }
        out
    }

    fn element(&mut self, el: &Element, parent: &str, out: &mut Vec<Symbol>) {
        match el {
            Element::Literal(s) => out.extend(s.chars().map(|c| Symbol::Char(CharClass::single(c)))),
            Element::Class(c) => out.push(Symbol::Char(c.clone())),
            Element::RuleRef(name) => out.push(Symbol::Rule(self.ids[name])),
            Element::Group(alts) => {
                let lowered = alts.iter().map(|s| self.sequence(s, parent)).collect();
                let id = self.fresh(parent, lowered);
                out.push(Symbol::Rule(id));
            }
            Element::Repeat { inner, kind } => {
                let mut body = Vec::new();
                self.element(inner, parent, &mut body);
                // Reserve the id first so the body can refer to itself.
                let id = self.fresh(parent, Vec::new());
                let mut recursive = body.clone();
                recursive.push(Symbol::Rule(id));
                self.bodies[id as usize] = match kind {
                    RepeatKind::ZeroOrMore => vec![recursive, Vec::new()],
                    RepeatKind::OneOrMore => vec![recursive, body],
                    RepeatKind::Optional => vec![body, Vec::new()],
                };
                out.push(Symbol::Rule(id));
            }
        }
    }
}

fn nullable_rules(bodies: &[Vec<Vec<Symbol>>]) -> Vec<bool> {
    let mut nullable = vec![false; bodies.len()];
    let mut changed = true;
    while changed {
        changed = false;
        for (i, alts) in bodies.iter().enumerate() {
            if nullable[i] {
                continue;
            }
            let any = alts.iter().any(|seq| {
                seq.iter().all(|s| match s {
                    Symbol::Rule(r) => nullable[*r as usize],
                    _ => false,
                })
            });
            if any {
                nullable[i] = true;
                changed = true;
            }
        }
    }
    nullable
}

/// Returns a rule on a left-recursive cycle, if any. An edge `a -> b`
/// exists when `b` can be the first thing `a` expands to without consuming
/// input (every symbol before it is nullable).
fn find_left_recursion(bodies: &[Vec<Vec<Symbol>>], nullable: &[bool]) -> Option<RuleId> {
    let n = bodies.len();
    let mut edges: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (a, alts) in bodies.iter().enumerate() {
        for seq in alts {
            for sym in seq {
                match sym {
                    Symbol::Rule(b) => {
                        edges[a].push(*b as usize);
                        if !nullable[*b as usize] {
                            break;
                        }
                    }
                    _ => break,
                }
            }
        }
    }

    // Iterative three-colour DFS.
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Grey,
        Black,
    }
    let mut mark = vec![Mark::White; n];
    for start in 0..n {
        if mark[start] != Mark::White {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        mark[start] = Mark::Grey;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if let Some(&succ) = edges[node].get(*next) {
                *next += 1;
                match mark[succ] {
                    Mark::Grey => return Some(succ as RuleId),
                    Mark::White => {
                        mark[succ] = Mark::Grey;
                        stack.push((succ, 0));
                    }
                    Mark::Black => {}
                }
            } else {
                mark[node] = Mark::Black;
                stack.pop();
            }
        }
    }
    None
}
