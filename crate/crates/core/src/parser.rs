//! Recursive-descent parser for `.cpl` scene scripts.
//!
//! ```text
//! scene   := "scene" IDENT "{" "entities" "{" (IDENT ("as" IDENT)? ";")* "}"
//!            ("root" IDENT ";")? "rules" "{" rule* "}" "}"
//! rule    := (IDENT ":")? (selfloop | triple) ";"
//! selfloop:= IDENT "->" IDENT
//! triple  := refs "+" chains "->" terms ("where" rel ("," rel)*)?
//! refs    := IDENT ("^" IDENT)*
//! chains  := chain ("^" chain)*
//! chain   := IDENT ("." IDENT)+ ("(" qty ")")?
//! terms   := term ("^" term)*
//! term    := IDENT ("." IDENT ("(" qty ")")?)+
//! rel     := IDENT (("<" | ">" | "-" | "in") IDENT)+
//! qty     := operand ("-" operand)?
//! operand := IDENT | "-"? NUMBER
//! ```
//!
//! Syntax errors abandon the current rule and resume after its `;`, so one
//! pass reports every broken rule.

use std::collections::HashMap;

use crate::ast::{
    normalize_relation, Amount, Chain, ConceptId, Entity, Operand, RelationOp, Rule, Scene, Term,
    TermElement,
};
use crate::diag::{Diagnostic, SourceMap, Span};
use crate::lexer::{tokenize, Keyword, Tok, Token};

const RULE_SHAPE_HINT: &str = "rules are written `OUT + SOURCE.EFFECTOR -> OUT.EFFECTOR.SOURCE`; \
     only a self-loop `X -> X` may omit the input chain";

/// Parse a scene, discarding source positions.
pub fn parse_scene(source: &str) -> Result<Scene, Vec<Diagnostic>> {
    parse_scene_with_spans(source).map(|(scene, _)| scene)
}

/// Parse a scene and keep the position of each rule.
pub fn parse_scene_with_spans(source: &str) -> Result<(Scene, SourceMap), Vec<Diagnostic>> {
    let tokens = tokenize(source).map_err(|d| vec![d])?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        diags: Vec::new(),
        names: HashMap::new(),
    };
    let result = parser.scene();
    let mut diags = parser.diags;
    match result {
        Ok(parsed) if diags.is_empty() => Ok(parsed),
        Ok(_) => Err(diags),
        Err(d) => {
            diags.push(d);
            Err(diags)
        }
    }
}

type PResult<T> = Result<T, Diagnostic>;

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    diags: Vec<Diagnostic>,
    /// Script name (full name or alias) to canonical concept.
    names: HashMap<String, ConceptId>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &str) -> Diagnostic {
        Diagnostic::error(format!(
            "expected {expected}, found {}",
            self.peek().describe()
        ))
        .at(self.span())
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> PResult<Token> {
        if *self.peek() == tok {
            Ok(self.bump())
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn keyword(&mut self, k: Keyword) -> PResult<Token> {
        self.expect(Tok::Keyword(k), &format!("'{}'", k.as_str()))
    }

    fn ident(&mut self, what: &str) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let span = self.bump().span;
                Ok((name, span))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    /// Resolve a script name; unknown names are reported and `None` returned.
    fn concept(&mut self) -> PResult<Option<ConceptId>> {
        let (name, span) = self.ident("entity name")?;
        match self.names.get(&name) {
            Some(id) => Ok(Some(id.clone())),
            None => {
                self.diags
                    .push(Diagnostic::error(format!("unknown entity {name}")).at(span));
                Ok(None)
            }
        }
    }

    fn scene(&mut self) -> PResult<(Scene, SourceMap)> {
        self.keyword(Keyword::Scene)?;
        let (name, _) = self.ident("scene name")?;
        self.expect(Tok::LBrace, "'{'")?;
        self.keyword(Keyword::Entities)?;
        self.expect(Tok::LBrace, "'{'")?;
        let mut entities = Vec::new();
        while *self.peek() != Tok::RBrace {
            entities.push(self.entity()?);
        }
        self.bump();

        let mut root = None;
        if *self.peek() == Tok::Keyword(Keyword::Root) {
            self.bump();
            root = self.concept()?;
            self.expect(Tok::Semi, "';'")?;
        }

        self.keyword(Keyword::Rules)?;
        self.expect(Tok::LBrace, "'{'")?;
        let mut rules = Vec::new();
        let mut map = SourceMap::default();
        let mut labels: HashMap<String, Span> = HashMap::new();
        while !matches!(self.peek(), Tok::RBrace | Tok::Eof) {
            let start = self.pos;
            match self.rule() {
                Ok(Some(rule)) => {
                    let span = self.rule_span(start);
                    if let Some(label) = &rule.label {
                        if labels.insert(label.clone(), span).is_some() {
                            self.diags.push(
                                Diagnostic::error(format!("duplicate rule label {label}")).at(span),
                            );
                        }
                    }
                    map.rules.push(span);
                    rules.push(rule);
                }
                Ok(None) => {}
                Err(d) => {
                    self.diags.push(d);
                    self.recover();
                }
            }
        }
        self.expect(Tok::RBrace, "'}' closing the rules block")?;
        self.expect(Tok::RBrace, "'}' closing the scene")?;
        self.expect(Tok::Eof, "end of input")?;
        let scene = Scene {
            name,
            entities,
            root,
            rules,
        };
        Ok((scene, map))
    }

    fn entity(&mut self) -> PResult<Entity> {
        let (name, span) = self.ident("entity declaration")?;
        let mut abbrev = None;
        if *self.peek() == Tok::Keyword(Keyword::As) {
            self.bump();
            abbrev = Some(self.ident("alias after 'as'")?);
        }
        self.expect(Tok::Semi, "';'")?;
        let id = ConceptId::new(&name);
        self.declare(&name, span, &id);
        if let Some((alias, alias_span)) = &abbrev {
            if alias != &name {
                self.declare(alias, *alias_span, &id);
            }
        }
        Ok(Entity {
            name: id,
            abbrev: abbrev.map(|(a, _)| a),
        })
    }

    fn declare(&mut self, name: &str, span: Span, id: &ConceptId) {
        if self.names.insert(name.to_string(), id.clone()).is_some() {
            self.diags
                .push(Diagnostic::error(format!("duplicate declaration of {name}")).at(span));
        }
    }

    /// Skip to just past the next `;`, or stop at a `}`.
    fn recover(&mut self) {
        loop {
            match self.peek() {
                Tok::Semi => {
                    self.bump();
                    return;
                }
                Tok::RBrace | Tok::Eof => return,
                _ => {
                    self.bump();
                }
            }
        }
    }

    fn rule_span(&self, start: usize) -> Span {
        let first = self.tokens[start].span;
        let last = self.tokens[self.pos.saturating_sub(1)].span;
        let len = if last.line == first.line {
            last.column + last.len - first.column
        } else {
            first.len
        };
        Span::new(first.line, first.column, len)
    }

    /// Returns `Ok(None)` when the rule parsed but had semantic errors.
    fn rule(&mut self) -> PResult<Option<Rule>> {
        let errors_before = self.diags.len();
        let mut label = None;
        if matches!(self.peek(), Tok::Ident(_)) && *self.peek_at(1) == Tok::Colon {
            let (l, _) = self.ident("rule label")?;
            self.bump();
            label = Some(l);
        }

        if matches!(self.peek(), Tok::Ident(_)) && *self.peek_at(1) == Tok::Arrow {
            let rule = self.self_loop(label)?;
            return Ok((self.diags.len() == errors_before).then_some(rule));
        }

        let rule_start = self.span();
        let mut outputs = vec![self.concept()?];
        while *self.peek() == Tok::Caret {
            self.bump();
            outputs.push(self.concept()?);
        }
        if *self.peek() != Tok::Plus {
            let mut d = self.unexpected("'+' after the rule's output");
            d.message.push_str(&format!("; {RULE_SHAPE_HINT}"));
            return Err(d);
        }
        self.bump();

        let mut chains = vec![self.chain()?];
        while *self.peek() == Tok::Caret {
            self.bump();
            chains.push(self.chain()?);
        }
        self.expect(Tok::Arrow, "'->'")?;
        let mut terms = vec![self.term()?];
        while *self.peek() == Tok::Caret {
            self.bump();
            terms.push(self.term()?);
        }

        let mut relations = Vec::new();
        if *self.peek() == Tok::Keyword(Keyword::Where) {
            self.bump();
            self.relation_chain(&mut relations)?;
            while *self.peek() == Tok::Comma {
                self.bump();
                self.relation_chain(&mut relations)?;
            }
        }
        self.expect(Tok::Semi, "';' ending the rule")?;

        if self.diags.len() > errors_before {
            return Ok(None);
        }
        let outputs: Vec<ConceptId> = outputs.into_iter().flatten().collect();
        let inputs: Vec<Chain> = chains.into_iter().flatten().collect();
        let declared_results: Vec<Term> = terms.into_iter().flatten().collect();
        let rule = Rule {
            label,
            outputs,
            inputs,
            declared_results,
            relations,
            self_loop: false,
        };
        self.shape_errors(&rule, rule_start);
        Ok((self.diags.len() == errors_before).then_some(rule))
    }

    fn self_loop(&mut self, label: Option<String>) -> PResult<Rule> {
        let (lhs_name, lhs_span) = self.ident("entity name")?;
        self.bump();
        if !matches!(self.peek(), Tok::Ident(_)) {
            let mut d = self.unexpected("the same entity after '->'");
            d.message.push_str(&format!("; {RULE_SHAPE_HINT}"));
            return Err(d);
        }
        let (rhs_name, rhs_span) = self.ident("entity name")?;
        if lhs_name != rhs_name {
            return Err(Diagnostic::error(format!(
                "'{lhs_name} -> {rhs_name}' is a pairwise link, not a rule; {RULE_SHAPE_HINT}"
            ))
            .at(rhs_span));
        }
        match self.peek() {
            Tok::Semi => {
                self.bump();
            }
            Tok::Keyword(Keyword::Where) => {
                return Err(
                    Diagnostic::error("self-loop rules take no 'where' relations").at(self.span()),
                )
            }
            _ => return Err(self.unexpected("';' ending the self-loop")),
        }
        let concept = match self.names.get(&lhs_name) {
            Some(id) => id.clone(),
            None => {
                self.diags
                    .push(Diagnostic::error(format!("unknown entity {lhs_name}")).at(lhs_span));
                ConceptId::new(&lhs_name)
            }
        };
        Ok(Rule {
            label,
            outputs: vec![concept],
            inputs: Vec::new(),
            declared_results: Vec::new(),
            relations: Vec::new(),
            self_loop: true,
        })
    }

    fn chain(&mut self) -> PResult<Option<Chain>> {
        let mut elements = vec![self.concept()?];
        if *self.peek() != Tok::Dot {
            return Err(
                self.unexpected("'.' and an effector (input chains need a source and an effector)")
            );
        }
        while *self.peek() == Tok::Dot {
            self.bump();
            elements.push(self.concept()?);
        }
        let mut quantity = None;
        if *self.peek() == Tok::LParen {
            quantity = Some(self.quantity()?);
        }
        Ok(elements
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .map(|elements| Chain { elements, quantity }))
    }

    fn term(&mut self) -> PResult<Option<Term>> {
        let first = self.concept()?;
        let mut elements = vec![first.map(|concept| TermElement {
            concept,
            amount: None,
        })];
        if *self.peek() != Tok::Dot {
            return Err(self.unexpected("'.' in result term"));
        }
        while *self.peek() == Tok::Dot {
            self.bump();
            let concept = self.concept()?;
            let mut amount = None;
            if *self.peek() == Tok::LParen {
                amount = Some(self.quantity()?);
            }
            elements.push(concept.map(|concept| TermElement { concept, amount }));
        }
        Ok(elements
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .map(|elements| Term { elements }))
    }

    fn quantity(&mut self) -> PResult<Amount> {
        self.expect(Tok::LParen, "'('")?;
        let first = self.operand()?;
        let amount = if *self.peek() == Tok::Dash {
            self.bump();
            Amount::Difference(first, self.operand()?)
        } else {
            Amount::Single(first)
        };
        self.expect(Tok::RParen, "')' closing the quantity")?;
        Ok(amount)
    }

    fn operand(&mut self) -> PResult<Operand> {
        let negative = if *self.peek() == Tok::Dash {
            self.bump();
            true
        } else {
            false
        };
        match self.peek().clone() {
            Tok::Number(n) => {
                self.bump();
                Ok(Operand::Number(if negative { -n } else { n }))
            }
            Tok::Ident(s) if !negative => {
                self.bump();
                Ok(Operand::Symbol(s))
            }
            _ => Err(self.unexpected("quantity symbol or number")),
        }
    }

    /// `A - B < C` desugars left to right into `A - B`, `B < C`.
    fn relation_chain(&mut self, out: &mut Vec<crate::ast::Relation>) -> PResult<()> {
        let mut left_span = self.span();
        let mut left = self.concept()?;
        let mut steps = 0;
        loop {
            let op = match self.peek() {
                Tok::Less => RelationOp::Less,
                Tok::Greater => RelationOp::Greater,
                Tok::Dash => RelationOp::Dash,
                Tok::Keyword(Keyword::In) => RelationOp::In,
                _ if steps == 0 => return Err(self.unexpected("relation '<', '>', '-' or 'in'")),
                _ => return Ok(()),
            };
            self.bump();
            let right_span = self.span();
            let right = self.concept()?;
            if let (Some(l), Some(r)) = (&left, &right) {
                match normalize_relation(op, l.clone(), r.clone()) {
                    Ok(rel) => out.push(rel),
                    Err(e) => self
                        .diags
                        .push(Diagnostic::error(e.to_string()).at(Span::new(
                            left_span.line,
                            left_span.column,
                            if right_span.line == left_span.line {
                                right_span.column + right_span.len - left_span.column
                            } else {
                                left_span.len
                            },
                        ))),
                }
            }
            left = right;
            left_span = right_span;
            steps += 1;
        }
    }

    fn shape_errors(&mut self, rule: &Rule, at: Span) {
        let mut push = |msg: String| self.diags.push(Diagnostic::error(msg).at(at));
        for (i, o) in rule.outputs.iter().enumerate() {
            if rule.outputs[..i].contains(o) {
                push(format!("output {o} is listed twice"));
            }
            if rule.inputs.iter().any(|c| c.elements.contains(o)) {
                push(format!(
                    "output {o} also appears in an input chain; the output must be external to its inputs"
                ));
            }
        }
        for chain in &rule.inputs {
            for (i, e) in chain.elements.iter().enumerate() {
                if chain.elements[..i].contains(e) {
                    push(format!("input chain repeats {e}"));
                }
            }
        }
        for term in &rule.declared_results {
            if term.elements[0].amount.is_some() {
                push("quantities cannot annotate a term's output".to_string());
            }
        }
    }
}
