//! Content model: predicates, subscriptions, notifications and matching.
//!
//! Literal syntax, one message per line:
//!
//! ```text
//! sub: symbol eq IBM, price gt 50
//! pub: symbol=IBM, price=55
//! ```
//!
//! Operators are `eq neq lt le gt ge` or `= != < <= > >=`. A value that parses
//! as a finite number is numeric; anything else (or a double-quoted value) is
//! text.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cbv::ClusterBitVector;
use crate::error::ContentError;
use crate::topology::BrokerId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Num(f64),
    Text(String),
}

impl Value {
    pub fn parse(raw: &str) -> Value {
        let raw = raw.trim();
        if raw.len() >= 2 && raw.starts_with('"') && raw.ends_with('"') {
            return Value::Text(raw[1..raw.len() - 1].to_string());
        }
        match raw.parse::<f64>() {
            Ok(x) if x.is_finite() => Value::Num(x),
            _ => Value::Text(raw.to_string()),
        }
    }

    pub fn as_num(&self) -> Option<f64> {
        match self {
            Value::Num(x) => Some(*x),
            Value::Text(_) => None,
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Num(x)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_string())
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(x) => write!(f, "{x}"),
            Value::Text(s) if s.parse::<f64>().is_ok() || s.contains([',', ' ']) => {
                write!(f, "\"{s}\"")
            }
            Value::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Op {
    pub fn is_ordering(self) -> bool {
        matches!(self, Op::Lt | Op::Le | Op::Gt | Op::Ge)
    }

    pub fn parse(token: &str) -> Option<Op> {
        Some(match token {
            "eq" | "=" | "==" => Op::Eq,
            "neq" | "!=" => Op::Neq,
            "lt" | "<" => Op::Lt,
            "le" | "<=" => Op::Le,
            "gt" | ">" => Op::Gt,
            "ge" | ">=" => Op::Ge,
            _ => return None,
        })
    }

    pub fn keyword(self) -> &'static str {
        match self {
            Op::Eq => "eq",
            Op::Neq => "neq",
            Op::Lt => "lt",
            Op::Le => "le",
            Op::Gt => "gt",
            Op::Ge => "ge",
        }
    }
}

/// Result of evaluating one predicate against a notification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evaluation {
    Holds,
    Fails,
    /// Attribute absent from the notification.
    Missing,
    /// Ordering operator met a text value.
    TypeMismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    pub attribute: String,
    pub op: Op,
    pub value: Value,
}

impl Predicate {
    pub fn new(attribute: impl Into<String>, op: Op, value: impl Into<Value>) -> Result<Self, ContentError> {
        let attribute = attribute.into();
        let value = value.into();
        if op.is_ordering() && value.as_num().is_none() {
            return Err(ContentError::NonNumericOrdering {
                attribute,
                op: op.keyword().into(),
            });
        }
        Ok(Predicate { attribute, op, value })
    }

    pub fn evaluate(&self, content: &Content) -> Evaluation {
        let Some(actual) = content.get(&self.attribute) else {
            return Evaluation::Missing;
        };
        let holds = match (self.op, actual, &self.value) {
            (Op::Eq, a, b) => values_equal(a, b),
            (Op::Neq, a, b) => !values_equal(a, b),
            (op, Value::Num(a), Value::Num(b)) => {
                let ord = a.partial_cmp(b).unwrap_or(Ordering::Equal);
                match op {
                    Op::Lt => ord == Ordering::Less,
                    Op::Le => ord != Ordering::Greater,
                    Op::Gt => ord == Ordering::Greater,
                    _ => ord != Ordering::Less,
                }
            }
            _ => return Evaluation::TypeMismatch,
        };
        if holds {
            Evaluation::Holds
        } else {
            Evaluation::Fails
        }
    }
}

fn values_equal(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Num(x), Value::Num(y)) => x == y,
        (Value::Text(x), Value::Text(y)) => x == y,
        _ => false,
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.attribute, self.op.keyword(), self.value)
    }
}

/// Non-empty conjunction of predicates, at most one per (attribute, operator).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Predicate>", into = "Vec<Predicate>")]
pub struct Filter(Vec<Predicate>);

impl Filter {
    pub fn new(predicates: Vec<Predicate>) -> Result<Self, ContentError> {
        if predicates.is_empty() {
            return Err(ContentError::EmptyFilter);
        }
        for (i, p) in predicates.iter().enumerate() {
            if predicates[..i]
                .iter()
                .any(|q| q.attribute == p.attribute && q.op == p.op)
            {
                return Err(ContentError::DuplicatePredicate {
                    attribute: p.attribute.clone(),
                    op: p.op.keyword().into(),
                });
            }
            if p.op.is_ordering() && p.value.as_num().is_none() {
                return Err(ContentError::NonNumericOrdering {
                    attribute: p.attribute.clone(),
                    op: p.op.keyword().into(),
                });
            }
        }
        Ok(Filter(predicates))
    }

    pub fn predicates(&self) -> &[Predicate] {
        &self.0
    }

    pub fn matches(&self, content: &Content) -> bool {
        self.0.iter().all(|p| p.evaluate(content) == Evaluation::Holds)
    }

    /// Number of predicates that hit an ordering/type mismatch.
    pub fn type_mismatches(&self, content: &Content) -> usize {
        self.0
            .iter()
            .filter(|p| p.evaluate(content) == Evaluation::TypeMismatch)
            .count()
    }

    /// Parses `symbol eq IBM, price gt 50`, with or without a `sub:` prefix.
    pub fn parse(line: &str) -> Result<Self, ContentError> {
        let body = strip_prefix(line, "sub")?;
        let mut preds = Vec::new();
        for item in body.split(',') {
            let item = item.trim();
            let (attr, op, value) = split_comparison(item).ok_or_else(|| ContentError::Syntax {
                text: item.to_string(),
                reason: "expected `attribute operator value`".into(),
            })?;
            preds.push(Predicate::new(attr, op, Value::parse(value))?);
        }
        Filter::new(preds)
    }
}

impl TryFrom<Vec<Predicate>> for Filter {
    type Error = ContentError;
    fn try_from(v: Vec<Predicate>) -> Result<Self, Self::Error> {
        Filter::new(v)
    }
}

impl From<Filter> for Vec<Predicate> {
    fn from(f: Filter) -> Self {
        f.0
    }
}

impl fmt::Display for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("sub: ")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

fn strip_prefix<'a>(line: &'a str, kind: &str) -> Result<&'a str, ContentError> {
    let line = line.trim();
    match line.split_once(':') {
        Some((head, rest)) if head.trim() == kind => Ok(rest.trim()),
        Some((head, _)) if head.trim() == "sub" || head.trim() == "pub" => Err(ContentError::Syntax {
            text: line.to_string(),
            reason: format!("expected a `{kind}:` line"),
        }),
        _ => Ok(line),
    }
}

/// Splits `attr op value`, accepting both word and symbol operators with or
/// without surrounding spaces.
fn split_comparison(item: &str) -> Option<(&str, Op, &str)> {
    let mut parts = item.splitn(3, char::is_whitespace);
    if let (Some(a), Some(o), Some(v)) = (parts.next(), parts.next(), parts.next()) {
        if let Some(op) = Op::parse(o) {
            if !a.is_empty() && !v.trim().is_empty() {
                return Some((a, op, v.trim()));
            }
        }
    }
    for sym in ["<=", ">=", "!=", "==", "<", ">", "="] {
        if let Some((a, v)) = item.split_once(sym) {
            let (a, v) = (a.trim(), v.trim());
            if !a.is_empty() && !v.is_empty() && !a.contains(char::is_whitespace) {
                return Some((a, Op::parse(sym)?, v));
            }
        }
    }
    None
}

/// Attribute–value pairs of a notification, unique by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(String, Value)>", into = "Vec<(String, Value)>")]
pub struct Content(Vec<(String, Value)>);

impl Content {
    pub fn new(mut attrs: Vec<(String, Value)>) -> Result<Self, ContentError> {
        attrs.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = attrs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(ContentError::DuplicateAttribute(w[0].0.clone()));
        }
        Ok(Content(attrs))
    }

    pub fn get(&self, attribute: &str) -> Option<&Value> {
        self.0
            .binary_search_by(|(name, _)| name.as_str().cmp(attribute))
            .ok()
            .map(|i| &self.0[i].1)
    }

    pub fn attributes(&self) -> &[(String, Value)] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Parses `symbol=IBM, price=55`, with or without a `pub:` prefix.
    pub fn parse(line: &str) -> Result<Self, ContentError> {
        let body = strip_prefix(line, "pub")?;
        let mut attrs = Vec::new();
        for item in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (a, v) = item.split_once('=').ok_or_else(|| ContentError::Syntax {
                text: item.to_string(),
                reason: "expected `attribute=value`".into(),
            })?;
            let a = a.trim();
            if a.is_empty() || v.trim().is_empty() {
                return Err(ContentError::Syntax {
                    text: item.to_string(),
                    reason: "empty attribute or value".into(),
                });
            }
            attrs.push((a.to_string(), Value::parse(v)));
        }
        Content::new(attrs)
    }
}

impl TryFrom<Vec<(String, Value)>> for Content {
    type Error = ContentError;
    fn try_from(v: Vec<(String, Value)>) -> Result<Self, Self::Error> {
        Content::new(v)
    }
}

impl From<Content> for Vec<(String, Value)> {
    fn from(c: Content) -> Self {
        c.0
    }
}

impl fmt::Display for Content {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("pub: ")?;
        for (i, (a, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}={v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClientId(pub u32);

impl fmt::Display for ClientId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

/// Issuing broker plus that broker's local sequence number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubscriptionId {
    pub host: BrokerId,
    pub seq: u32,
}

impl fmt::Display for SubscriptionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}.{}.{}", self.host.region, self.host.cluster, self.seq)
    }
}

/// Broker identification token of the unclustered baseline. One per
/// subscription: the stamping broker plus its counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Bid(pub SubscriptionId);

impl Bid {
    pub fn broker(self) -> BrokerId {
        self.0.host
    }
}

impl fmt::Display for Bid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "bid{}.{}.{}", self.0.host.region, self.0.host.cluster, self.0.seq)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SubState {
    Primary,
    Secondary,
}

/// A subscription as it travels between brokers.
#[derive(Debug, Clone, PartialEq)]
pub struct Subscription {
    pub id: SubscriptionId,
    pub subscriber: ClientId,
    pub filter: Arc<Filter>,
    /// Clustered mode only.
    pub state: Option<SubState>,
    /// Clustered mode only: the subscriber's host cluster.
    pub cbv: Option<ClusterBitVector>,
    /// Unclustered mode only.
    pub bid: Option<Bid>,
}

impl Subscription {
    pub fn new(id: SubscriptionId, subscriber: ClientId, filter: Arc<Filter>) -> Self {
        Subscription {
            id,
            subscriber,
            filter,
            state: None,
            cbv: None,
            bid: None,
        }
    }

    pub fn matches(&self, n: &Notification) -> bool {
        self.filter.matches(&n.content)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NotificationId(pub u64);

impl fmt::Display for NotificationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Routing header carried by a notification copy.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Header {
    #[default]
    None,
    Bids(Vec<Bid>),
    /// Never all-zero.
    Cbv(ClusterBitVector),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Notification {
    pub id: NotificationId,
    pub publisher: ClientId,
    pub issue_tick: u64,
    pub content: Arc<Content>,
    pub header: Header,
}

impl Notification {
    pub fn new(id: NotificationId, publisher: ClientId, issue_tick: u64, content: Arc<Content>) -> Self {
        Notification {
            id,
            publisher,
            issue_tick,
            content,
            header: Header::None,
        }
    }

    /// Copy of this notification with a different header.
    pub fn with_header(&self, header: Header) -> Self {
        Notification { header, ..self.clone() }
    }

    pub fn cbv(&self) -> Option<&ClusterBitVector> {
        match &self.header {
            Header::Cbv(v) => Some(v),
            _ => None,
        }
    }

    pub fn bids(&self) -> &[Bid] {
        match &self.header {
            Header::Bids(b) => b,
            _ => &[],
        }
    }
}

/// Stand-alone predicate check used by oracles.
pub fn matches(n: &Notification, s: &Subscription) -> bool {
    s.matches(n)
}
