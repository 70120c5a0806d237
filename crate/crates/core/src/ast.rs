//! Scene, rule and relation types plus the pure rule algebra.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// Canonical (full) name of a declared concept.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct ConceptId(String);

impl ConceptId {
    pub fn new(name: impl Into<String>) -> Self {
        ConceptId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ConceptId {
    fn from(s: &str) -> Self {
        ConceptId::new(s)
    }
}

/// Letters, digits and underscore, starting with a letter.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A declared entity: full name and optional short alias used in scripts.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Entity {
    pub name: ConceptId,
    pub abbrev: Option<String>,
}

impl Entity {
    pub fn new(name: &str) -> Self {
        Entity {
            name: ConceptId::new(name),
            abbrev: None,
        }
    }

    pub fn with_abbrev(name: &str, abbrev: &str) -> Self {
        Entity {
            name: ConceptId::new(name),
            abbrev: Some(abbrev.to_string()),
        }
    }

    /// The identifier scripts use for this entity.
    pub fn script_name(&self) -> &str {
        self.abbrev.as_deref().unwrap_or(self.name.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum RelationKind {
    /// `X < Y`: X nests inside Y.
    SubConcept,
    /// `X - Y`: related but separate.
    Association,
    /// `X in Y`: X starts out placed inside Y.
    ContainedIn,
}

/// Relation operator as written in a `where` clause.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RelationOp {
    Less,
    Greater,
    Dash,
    In,
}

impl RelationOp {
    pub fn symbol(self) -> &'static str {
        match self {
            RelationOp::Less => "<",
            RelationOp::Greater => ">",
            RelationOp::Dash => "-",
            RelationOp::In => "in",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Relation {
    pub kind: RelationKind,
    pub left: ConceptId,
    pub right: ConceptId,
}

impl Relation {
    pub fn sub(child: &str, parent: &str) -> Self {
        Relation {
            kind: RelationKind::SubConcept,
            left: child.into(),
            right: parent.into(),
        }
    }

    pub fn assoc(a: &str, b: &str) -> Self {
        Relation {
            kind: RelationKind::Association,
            left: a.into(),
            right: b.into(),
        }
    }

    pub fn contained(inner: &str, outer: &str) -> Self {
        Relation {
            kind: RelationKind::ContainedIn,
            left: inner.into(),
            right: outer.into(),
        }
    }

    /// Operator used when writing the relation back out.
    pub fn op(&self) -> RelationOp {
        match self.kind {
            RelationKind::SubConcept => RelationOp::Less,
            RelationKind::Association => RelationOp::Dash,
            RelationKind::ContainedIn => RelationOp::In,
        }
    }

    /// True when `self` and `other` state the same fact. Associations are symmetric.
    pub fn same_fact(&self, other: &Relation) -> bool {
        if self.kind != other.kind {
            return false;
        }
        match self.kind {
            RelationKind::Association => {
                (self.left == other.left && self.right == other.right)
                    || (self.left == other.right && self.right == other.left)
            }
            _ => self.left == other.left && self.right == other.right,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.left, self.op().symbol(), self.right)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AstError {
    #[error("concept {0} cannot be related to itself")]
    SelfRelation(ConceptId),
}

/// Map a written relation onto its stored form. `X > Y` is stored as `Y < X`.
pub fn normalize_relation(
    op: RelationOp,
    left: ConceptId,
    right: ConceptId,
) -> Result<Relation, AstError> {
    if left == right {
        return Err(AstError::SelfRelation(left));
    }
    let (kind, left, right) = match op {
        RelationOp::Less => (RelationKind::SubConcept, left, right),
        RelationOp::Greater => (RelationKind::SubConcept, right, left),
        RelationOp::Dash => (RelationKind::Association, left, right),
        RelationOp::In => (RelationKind::ContainedIn, left, right),
    };
    Ok(Relation { kind, left, right })
}

/// A number or a symbol inside a quantity annotation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Operand {
    Number(i64),
    Symbol(String),
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Number(n) => write!(f, "{n}"),
            Operand::Symbol(s) => f.write_str(s),
        }
    }
}

/// A quantity annotation: `x`, `2`, `x-y` or `2-1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Amount {
    Single(Operand),
    Difference(Operand, Operand),
}

impl Amount {
    pub fn number(n: i64) -> Self {
        Amount::Single(Operand::Number(n))
    }

    pub fn symbol(s: &str) -> Self {
        Amount::Single(Operand::Symbol(s.to_string()))
    }

    /// Numeric value when every operand is a number.
    pub fn value(&self) -> Option<i64> {
        match self {
            Amount::Single(Operand::Number(n)) => Some(*n),
            Amount::Difference(Operand::Number(a), Operand::Number(b)) => a.checked_sub(*b),
            _ => None,
        }
    }
}

impl fmt::Display for Amount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Amount::Single(o) => write!(f, "{o}"),
            Amount::Difference(a, b) => write!(f, "{a}-{b}"),
        }
    }
}

/// Amount carried by an effector: `total` available at the source, `taken` by
/// the output and the `remainder` left behind.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Quantity {
    pub total: Amount,
    pub taken: Amount,
    pub remainder: Amount,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConservationError {
    #[error("taken amount {taken} is negative")]
    NegativeTaken { taken: i64 },
    #[error("taken amount {taken} exceeds total {total}")]
    TakenExceedsTotal { taken: i64, total: i64 },
    #[error("taken {taken} plus remainder {remainder} does not equal total {total}")]
    NotConserved {
        total: i64,
        taken: i64,
        remainder: i64,
    },
    #[error("remainder {remainder} does not equal {total}-{taken}")]
    SymbolicMismatch {
        total: Box<Amount>,
        taken: Box<Amount>,
        remainder: Box<Amount>,
    },
}

impl Quantity {
    pub fn new(total: Amount, taken: Amount, remainder: Amount) -> Self {
        Quantity {
            total,
            taken,
            remainder,
        }
    }

    /// Numeric amounts must satisfy `0 <= taken <= total` and
    /// `taken + remainder = total`; symbolic ones must have the remainder
    /// written as `total-taken`.
    pub fn check(&self) -> Result<(), ConservationError> {
        if let (Some(total), Some(taken), Some(remainder)) = (
            self.total.value(),
            self.taken.value(),
            self.remainder.value(),
        ) {
            if taken < 0 {
                return Err(ConservationError::NegativeTaken { taken });
            }
            if taken > total {
                return Err(ConservationError::TakenExceedsTotal { taken, total });
            }
            if taken.checked_add(remainder) != Some(total) {
                return Err(ConservationError::NotConserved {
                    total,
                    taken,
                    remainder,
                });
            }
            return Ok(());
        }
        let symbolic_ok = match (&self.total, &self.taken) {
            (Amount::Single(t), Amount::Single(k)) => {
                self.remainder == Amount::Difference(t.clone(), k.clone())
            }
            _ => false,
        };
        if symbolic_ok {
            Ok(())
        } else {
            Err(ConservationError::SymbolicMismatch {
                total: Box::new(self.total.clone()),
                taken: Box::new(self.taken.clone()),
                remainder: Box::new(self.remainder.clone()),
            })
        }
    }
}

/// Input chain `S.M...F`: source first, measured effector last.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Chain {
    pub elements: Vec<ConceptId>,
    pub quantity: Option<Amount>,
}

impl Chain {
    pub fn new(elements: &[&str]) -> Self {
        Chain {
            elements: elements.iter().map(|e| ConceptId::new(*e)).collect(),
            quantity: None,
        }
    }

    pub fn with_quantity(mut self, amount: Amount) -> Self {
        self.quantity = Some(amount);
        self
    }

    pub fn source(&self) -> &ConceptId {
        &self.elements[0]
    }

    pub fn effector(&self) -> &ConceptId {
        self.elements
            .last()
            .expect("chain has at least two elements")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TermElement {
    pub concept: ConceptId,
    pub amount: Option<Amount>,
}

/// A result term such as `P.D.K`, optionally with amounts on its elements.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Term {
    pub elements: Vec<TermElement>,
}

impl Term {
    pub fn plain<I, C>(concepts: I) -> Self
    where
        I: IntoIterator<Item = C>,
        C: Into<ConceptId>,
    {
        Term {
            elements: concepts
                .into_iter()
                .map(|c| TermElement {
                    concept: c.into(),
                    amount: None,
                })
                .collect(),
        }
    }

    pub fn concepts(&self) -> Vec<ConceptId> {
        self.elements.iter().map(|e| e.concept.clone()).collect()
    }
}

impl From<&ConceptId> for ConceptId {
    fn from(c: &ConceptId) -> Self {
        c.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    pub label: Option<String>,
    pub outputs: Vec<ConceptId>,
    pub inputs: Vec<Chain>,
    pub declared_results: Vec<Term>,
    pub relations: Vec<Relation>,
    pub self_loop: bool,
}

impl Rule {
    /// `P -> P`.
    pub fn self_loop(label: Option<&str>, concept: &str) -> Self {
        Rule {
            label: label.map(str::to_string),
            outputs: vec![ConceptId::new(concept)],
            inputs: Vec::new(),
            declared_results: Vec::new(),
            relations: Vec::new(),
            self_loop: true,
        }
    }

    /// Triple rule whose declared results are the derived ones.
    pub fn triple(label: Option<&str>, outputs: &[&str], inputs: Vec<Chain>) -> Self {
        let outputs: Vec<ConceptId> = outputs.iter().map(|o| ConceptId::new(*o)).collect();
        let declared_results = derive_result(&outputs, &inputs)
            .into_iter()
            .map(Term::plain)
            .collect();
        Rule {
            label: label.map(str::to_string),
            outputs,
            inputs,
            declared_results,
            relations: Vec::new(),
            self_loop: false,
        }
    }

    pub fn with_relations(mut self, relations: Vec<Relation>) -> Self {
        self.relations = relations;
        self
    }

    /// Distinct left-hand-side concepts: outputs, then chain elements, in order.
    pub fn lhs_concepts(&self) -> Vec<ConceptId> {
        let mut seen = Vec::new();
        let all = self
            .outputs
            .iter()
            .chain(self.inputs.iter().flat_map(|c| c.elements.iter()));
        for c in all {
            if !seen.contains(c) {
                seen.push(c.clone());
            }
        }
        seen
    }

    /// Every concept the rule mentions anywhere.
    pub fn mentioned_concepts(&self) -> Vec<ConceptId> {
        let mut seen = self.lhs_concepts();
        let rest = self
            .declared_results
            .iter()
            .flat_map(|t| t.elements.iter().map(|e| &e.concept))
            .chain(self.relations.iter().flat_map(|r| [&r.left, &r.right]));
        for c in rest {
            if !seen.contains(c) {
                seen.push(c.clone());
            }
        }
        seen
    }

    /// Quantities assembled from the chain totals and each matching result
    /// term's annotations (effector = taken, source = remainder).
    pub fn quantities(&self) -> Vec<Quantity> {
        let mut out = Vec::new();
        for chain in &self.inputs {
            let Some(total) = &chain.quantity else {
                continue;
            };
            for output in &self.outputs {
                let expected = derived_term(output, chain);
                for term in &self.declared_results {
                    if term.concepts() != expected {
                        continue;
                    }
                    let taken = term.elements.get(1).and_then(|e| e.amount.clone());
                    let remainder = term.elements.last().and_then(|e| e.amount.clone());
                    if let (Some(taken), Some(remainder)) = (taken, remainder) {
                        out.push(Quantity::new(total.clone(), taken, remainder));
                    }
                }
            }
        }
        out
    }
}

/// A named scene: declared entities, optional outer container, ordered rules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scene {
    pub name: String,
    pub entities: Vec<Entity>,
    pub root: Option<ConceptId>,
    pub rules: Vec<Rule>,
}

impl Scene {
    pub fn new(name: &str, entities: Vec<Entity>) -> Self {
        Scene {
            name: name.to_string(),
            entities,
            root: None,
            rules: Vec::new(),
        }
    }

    pub fn entity(&self, id: &ConceptId) -> Option<&Entity> {
        self.entities.iter().find(|e| &e.name == id)
    }

    /// How diagnostics refer to a rule: its label, or `rule N` (1-based).
    pub fn rule_ref(&self, index: usize) -> String {
        match self.rules.get(index).and_then(|r| r.label.as_ref()) {
            Some(label) => label.clone(),
            None => format!("rule {}", index + 1),
        }
    }

    /// Concepts mentioned by any rule, in first-appearance order.
    pub fn rule_concepts(&self) -> Vec<ConceptId> {
        let mut seen: Vec<ConceptId> = Vec::new();
        for rule in &self.rules {
            for c in rule.mentioned_concepts() {
                if !seen.contains(&c) {
                    seen.push(c);
                }
            }
        }
        seen
    }
}

fn derived_term(output: &ConceptId, chain: &Chain) -> Vec<ConceptId> {
    std::iter::once(output.clone())
        .chain(chain.elements.iter().rev().cloned())
        .collect()
}

/// For every output `O` and chain `S.M...F`, the term `O.F...M.S`.
/// Outputs form the outer loop.
pub fn derive_result(outputs: &[ConceptId], inputs: &[Chain]) -> Vec<Vec<ConceptId>> {
    outputs
        .iter()
        .flat_map(|o| inputs.iter().map(move |c| derived_term(o, c)))
        .collect()
}

/// Two single-output, single-chain rules that swap output and source over the
/// same effector path, e.g. `P + B.H` and `B + P.H`.
pub fn is_reverse_pair(a: &Rule, b: &Rule) -> bool {
    let simple = |r: &Rule| !r.self_loop && r.outputs.len() == 1 && r.inputs.len() == 1;
    if !simple(a) || !simple(b) {
        return false;
    }
    let (ca, cb) = (&a.inputs[0], &b.inputs[0]);
    a.outputs[0] == *cb.source()
        && b.outputs[0] == *ca.source()
        && ca.elements[1..] == cb.elements[1..]
}
