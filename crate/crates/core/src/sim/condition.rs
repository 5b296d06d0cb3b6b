//! Crash conditions in prefix form, e.g. `["<", ["num", "w_size"], 0]`.
//!
//! Forms:
//! - `["and", c...]`, `["or", c...]`, `["not", c]`
//! - `[op, a, b]` with op in `< <= > >= == !=`; operands are numbers,
//!   `["num", w]` or `["len", w]`. A non-numeric operand makes it false.
//! - `["holds", w, rule]`, `["violates", w, rule]` where rule is a rule
//!   object or the name of an argument-free rule kind
//! - `["contains_class", w, class]`, `["len_exceeds", w, n]`
//! - `["unguarded_parse", w, "int" | "decimal"]`: parsing would throw

use std::collections::BTreeMap;

use serde::Deserialize;
use serde_json::Value;

use super::spec::{value, RuleKind};
use crate::dsl::{parse_decimal, CharClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Const(f64),
    Num(String),
    Len(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseKind {
    Int,
    Decimal,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(try_from = "Value")]
pub enum Condition {
    And(Vec<Condition>),
    Or(Vec<Condition>),
    Not(Box<Condition>),
    Cmp(CmpOp, Operand, Operand),
    Holds(String, RuleKind),
    Violates(String, RuleKind),
    ContainsClass(String, CharClass),
    LenExceeds(String, usize),
    UnguardedParse(String, ParseKind),
}

fn widget(v: &Value) -> Result<String, String> {
    v.as_str().map(str::to_string).ok_or_else(|| format!("expected a widget id, got {v}"))
}

fn operand(v: &Value) -> Result<Operand, String> {
    if let Some(x) = v.as_f64() {
        return Ok(Operand::Const(x));
    }
    match v.as_array().map(Vec::as_slice) {
        Some([Value::String(f), w]) if f == "num" => Ok(Operand::Num(widget(w)?)),
        Some([Value::String(f), w]) if f == "len" => Ok(Operand::Len(widget(w)?)),
        _ => Err(format!("bad operand {v}")),
    }
}

fn rule(v: &Value) -> Result<RuleKind, String> {
    let obj = match v {
        Value::String(kind) => serde_json::json!({ "kind": kind }),
        other => other.clone(),
    };
    serde_json::from_value(obj).map_err(|e| format!("bad rule {v}: {e}"))
}

impl TryFrom<Value> for Condition {
    type Error = String;

    fn try_from(v: Value) -> Result<Self, Self::Error> {
        let items = v.as_array().ok_or_else(|| format!("condition must be a list, got {v}"))?;
        let (head, args) = items.split_first().ok_or("empty condition")?;
        let head = head.as_str().ok_or_else(|| format!("condition head must be a string, got {head}"))?;
        let arity = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(format!("`{head}` takes {n} arguments, got {}", args.len()))
            }
        };
        let cmp = match head {
            "<" => Some(CmpOp::Lt),
            "<=" => Some(CmpOp::Le),
            ">" => Some(CmpOp::Gt),
            ">=" => Some(CmpOp::Ge),
            "==" => Some(CmpOp::Eq),
            "!=" => Some(CmpOp::Ne),
            _ => None,
        };
        if let Some(op) = cmp {
            arity(2)?;
            return Ok(Condition::Cmp(op, operand(&args[0])?, operand(&args[1])?));
        }
        let sub = |v: &Value| Condition::try_from(v.clone());
        Ok(match head {
            "and" | "or" => {
                if args.is_empty() {
                    return Err(format!("`{head}` needs at least one argument"));
                }
                let parts = args.iter().map(sub).collect::<Result<Vec<_>, _>>()?;
                if head == "and" {
                    Condition::And(parts)
                } else {
                    Condition::Or(parts)
                }
            }
            "not" => {
                arity(1)?;
                Condition::Not(Box::new(sub(&args[0])?))
            }
            "holds" | "violates" => {
                arity(2)?;
                let (w, r) = (widget(&args[0])?, rule(&args[1])?);
                if head == "holds" {
                    Condition::Holds(w, r)
                } else {
                    Condition::Violates(w, r)
                }
            }
            "contains_class" => {
                arity(2)?;
                let class = args[1].as_str().ok_or("class must be a string")?.parse()?;
                Condition::ContainsClass(widget(&args[0])?, class)
            }
            "len_exceeds" => {
                arity(2)?;
                let n = args[1].as_u64().ok_or("length must be a non-negative integer")?;
                Condition::LenExceeds(widget(&args[0])?, n as usize)
            }
            "unguarded_parse" => {
                arity(2)?;
                let kind = match args[1].as_str() {
                    Some("int") => ParseKind::Int,
                    Some("decimal") => ParseKind::Decimal,
                    _ => return Err(format!("unguarded_parse kind must be int or decimal, got {}", args[1])),
                };
                Condition::UnguardedParse(widget(&args[0])?, kind)
            }
            other => return Err(format!("unknown condition `{other}`")),
        })
    }
}

impl Condition {
    /// Every widget id the condition reads.
    pub fn widgets(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect<'a>(&'a self, out: &mut Vec<&'a str>) {
        let operand = |o: &'a Operand, out: &mut Vec<&'a str>| match o {
            Operand::Num(w) | Operand::Len(w) => out.push(w),
            Operand::Const(_) => {}
        };
        match self {
            Condition::And(cs) | Condition::Or(cs) => cs.iter().for_each(|c| c.collect(out)),
            Condition::Not(c) => c.collect(out),
            Condition::Cmp(_, a, b) => {
                operand(a, out);
                operand(b, out);
            }
            Condition::Holds(w, r) | Condition::Violates(w, r) => {
                out.push(w);
                out.extend(r.references());
            }
            Condition::ContainsClass(w, _) | Condition::LenExceeds(w, _) | Condition::UnguardedParse(w, _) => {
                out.push(w)
            }
        }
    }

    pub fn eval(&self, assignment: &BTreeMap<String, String>) -> bool {
        let operand = |o: &Operand| match o {
            Operand::Const(x) => Some(*x),
            Operand::Num(w) => parse_decimal(value(assignment, w)),
            Operand::Len(w) => Some(value(assignment, w).chars().count() as f64),
        };
        match self {
            Condition::And(cs) => cs.iter().all(|c| c.eval(assignment)),
            Condition::Or(cs) => cs.iter().any(|c| c.eval(assignment)),
            Condition::Not(c) => !c.eval(assignment),
            Condition::Cmp(op, a, b) => match (operand(a), operand(b)) {
                (Some(a), Some(b)) => match op {
                    CmpOp::Lt => a < b,
                    CmpOp::Le => a <= b,
                    CmpOp::Gt => a > b,
                    CmpOp::Ge => a >= b,
                    CmpOp::Eq => a == b,
                    CmpOp::Ne => a != b,
                },
                _ => false,
            },
            Condition::Holds(w, r) => r.holds(w, assignment),
            Condition::Violates(w, r) => !r.holds(w, assignment),
            Condition::ContainsClass(w, class) => class.occurs_in(value(assignment, w)),
            Condition::LenExceeds(w, n) => value(assignment, w).chars().count() > *n,
            Condition::UnguardedParse(w, kind) => {
                let v = value(assignment, w);
                match kind {
                    ParseKind::Int => v.parse::<i32>().is_err(),
                    ParseKind::Decimal => parse_decimal(v).is_none(),
                }
            }
        }
    }
}
