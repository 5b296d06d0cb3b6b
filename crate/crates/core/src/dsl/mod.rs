//! Mutation language for test generators.
//!
//! A generator is a small, closed, line-oriented program: a mutation rule, the
//! widgets it targets, their base (valid) values, a sequence of mutation
//! operations and an optional axis that fans one program out into a batch.
//!
//! ```text
//! rule: inject control characters
//! target: w_price
//! base: w_price = "12.5"
//! op: charset_inject(class=$X, count=3, pos=end)
//! axis: $X in [control, null_byte, rtl_override]
//! batch: 3
//! ```
//!
//! Execution is a pure function of the program: no I/O, no clock, no
//! randomness. Every emitted value is capped at [`MAX_INPUT_CHARS`] and a
//! program holds at most [`MAX_OPS`] operations.

mod charset;
mod exec;
mod parse;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

pub use charset::CharClass;
pub use exec::{execute_program, format_number, parse_decimal};
pub use parse::parse_program;
pub(crate) use parse::is_widget_id;

pub const MAX_OPS: usize = 32;
pub const MAX_INPUT_CHARS: usize = 65_536;
pub const DEFAULT_BATCH: usize = 10;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DslError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("line {line}: unknown operation `{name}`")]
    UnknownOp { line: usize, name: String },
    #[error("line {line}: widget `{widget}` is not bound by target and base")]
    UnboundWidget { line: usize, widget: String },
}

impl DslError {
    pub fn line(&self) -> usize {
        match self {
            DslError::Syntax { line, .. } | DslError::UnknownOp { line, .. } | DslError::UnboundWidget { line, .. } => {
                *line
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpName {
    Set,
    Append,
    Prepend,
    Insert,
    Repeat,
    Truncate,
    Pad,
    CaseFlip,
    Empty,
    NumberNegate,
    NumberScale,
    NumberSet,
    Digits,
    CharsetInject,
    Swap,
    ViolateOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Text,
    Char,
    Count,
    Float,
    Number,
    Position,
    Class,
    Widget,
}

#[derive(Debug, Clone, Copy)]
pub struct Param {
    pub name: &'static str,
    pub kind: ParamKind,
    pub default: Option<&'static str>,
}

const fn p(name: &'static str, kind: ParamKind) -> Param {
    Param { name, kind, default: None }
}

const fn pd(name: &'static str, kind: ParamKind, default: &'static str) -> Param {
    Param {
        name,
        kind,
        default: Some(default),
    }
}

impl OpName {
    pub const ALL: [OpName; 16] = [
        OpName::Set,
        OpName::Append,
        OpName::Prepend,
        OpName::Insert,
        OpName::Repeat,
        OpName::Truncate,
        OpName::Pad,
        OpName::CaseFlip,
        OpName::Empty,
        OpName::NumberNegate,
        OpName::NumberScale,
        OpName::NumberSet,
        OpName::Digits,
        OpName::CharsetInject,
        OpName::Swap,
        OpName::ViolateOrder,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OpName::Set => "set",
            OpName::Append => "append",
            OpName::Prepend => "prepend",
            OpName::Insert => "insert",
            OpName::Repeat => "repeat",
            OpName::Truncate => "truncate",
            OpName::Pad => "pad",
            OpName::CaseFlip => "case_flip",
            OpName::Empty => "empty",
            OpName::NumberNegate => "number_negate",
            OpName::NumberScale => "number_scale",
            OpName::NumberSet => "number_set",
            OpName::Digits => "digits",
            OpName::CharsetInject => "charset_inject",
            OpName::Swap => "swap",
            OpName::ViolateOrder => "violate_order",
        }
    }

    pub fn params(self) -> &'static [Param] {
        use ParamKind::*;
        const V_TEXT: [Param; 1] = [p("v", Text)];
        const S_TEXT: [Param; 1] = [p("s", Text)];
        const INSERT: [Param; 2] = [p("pos", Position), p("s", Text)];
        const N_COUNT: [Param; 1] = [p("n", Count)];
        const PAD: [Param; 2] = [p("n", Count), pd("ch", Char, " ")];
        const F_FLOAT: [Param; 1] = [p("f", Float)];
        const V_NUMBER: [Param; 1] = [p("v", Number)];
        const INJECT: [Param; 3] = [p("class", Class), pd("count", Count, "1"), pd("pos", Position, "end")];
        const SWAP: [Param; 2] = [p("wa", Widget), p("wb", Widget)];
        const ORDER: [Param; 3] = [p("w_lo", Widget), p("w_hi", Widget), pd("delta", Number, "1")];
        match self {
            OpName::Set => &V_TEXT,
            OpName::Append | OpName::Prepend => &S_TEXT,
            OpName::Insert => &INSERT,
            OpName::Repeat | OpName::Truncate | OpName::Digits => &N_COUNT,
            OpName::Pad => &PAD,
            OpName::CaseFlip | OpName::Empty | OpName::NumberNegate => &[],
            OpName::NumberScale => &F_FLOAT,
            OpName::NumberSet => &V_NUMBER,
            OpName::CharsetInject => &INJECT,
            OpName::Swap => &SWAP,
            OpName::ViolateOrder => &ORDER,
        }
    }

    /// Ops that act on one value and accept an `on=<widget>` selector.
    pub fn is_single_widget(self) -> bool {
        !matches!(self, OpName::Swap | OpName::ViolateOrder)
    }
}

impl FromStr for OpName {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        OpName::ALL.into_iter().find(|o| o.name() == s).ok_or(())
    }
}

/// Where an insertion happens. `Middle` is `floor(len / 2)` characters in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Position {
    Start,
    End,
    Middle,
    Index(usize),
}

impl FromStr for Position {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "start" => Ok(Position::Start),
            "end" => Ok(Position::End),
            "middle" => Ok(Position::Middle),
            _ => s
                .parse::<usize>()
                .map(Position::Index)
                .map_err(|_| format!("bad position `{s}`")),
        }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Position::Start => f.write_str("start"),
            Position::End => f.write_str("end"),
            Position::Middle => f.write_str("middle"),
            Position::Index(i) => write!(f, "{i}"),
        }
    }
}

/// A fully bound mutation.
#[derive(Debug, Clone, PartialEq)]
pub enum MutationOp {
    Set(String),
    Append(String),
    Prepend(String),
    Insert { pos: Position, text: String },
    Repeat(usize),
    Truncate(usize),
    Pad { len: usize, ch: char },
    CaseFlip,
    Empty,
    NumberNegate,
    NumberScale(f64),
    NumberSet(String),
    Digits(usize),
    CharsetInject { class: CharClass, count: usize, pos: Position },
    Swap { a: String, b: String },
    ViolateOrder { lo: String, hi: String, delta: f64 },
}

/// An op argument as written: a literal or the axis variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Arg {
    Lit(String),
    Axis,
}

/// An operation line. `args` is aligned with [`OpName::params`], defaults
/// filled in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpCall {
    pub op: OpName,
    pub on: Option<String>,
    pub args: Vec<Arg>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Axis {
    pub name: String,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorProgram {
    pub rule: String,
    pub targets: Vec<String>,
    pub base: BTreeMap<String, String>,
    pub ops: Vec<OpCall>,
    pub axis: Option<Axis>,
    pub batch_size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct OpTrace {
    pub op: String,
    /// Widgets the op could not be applied to (e.g. a numeric op on text).
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub inapplicable: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct Provenance {
    pub rule: String,
    pub op_trace: Vec<OpTrace>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis_value: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnusualInput {
    pub assignment: BTreeMap<String, String>,
    pub provenance: Provenance,
}

fn is_bare(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| !c.is_whitespace() && !c.is_control() && !matches!(c, ',' | '(' | ')' | '=' | '"' | '[' | ']' | '\\'))
        && !s.starts_with('$')
        && !s.starts_with('#')
}

/// Quote a string literal the way the parser reads it back.
pub fn quote_literal(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if c.is_control() || matches!(c, '\u{2028}' | '\u{2029}' | '\u{85}') => {
                out.push_str(&format!("\\u{{{:x}}}", u32::from(c)));
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn literal_display(kind: ParamKind, value: &str) -> String {
    match kind {
        ParamKind::Text | ParamKind::Char => quote_literal(value),
        _ if is_bare(value) => value.to_string(),
        _ => quote_literal(value),
    }
}

impl OpCall {
    fn fmt_with(&self, f: &mut fmt::Formatter<'_>, axis_name: &str) -> fmt::Result {
        write!(f, "{}(", self.op.name())?;
        let mut parts = Vec::new();
        if let Some(on) = &self.on {
            parts.push(format!("on={on}"));
        }
        for (param, arg) in self.op.params().iter().zip(&self.args) {
            let value = match arg {
                Arg::Lit(v) => literal_display(param.kind, v),
                Arg::Axis => format!("${axis_name}"),
            };
            parts.push(format!("{}={value}", param.name));
        }
        write!(f, "{})", parts.join(", "))
    }
}

impl fmt::Display for GeneratorProgram {
    /// Canonical source form; [`parse_program`] reads it back unchanged.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rule: {}", self.rule)?;
        writeln!(f, "target: {}", self.targets.join(", "))?;
        for target in &self.targets {
            if let Some(v) = self.base.get(target) {
                writeln!(f, "base: {target} = {}", quote_literal(v))?;
            }
        }
        let axis_name = self.axis.as_ref().map_or("X", |a| a.name.as_str());
        for op in &self.ops {
            f.write_str("op: ")?;
            op.fmt_with(f, axis_name)?;
            writeln!(f)?;
        }
        if let Some(axis) = &self.axis {
            let values: Vec<String> = axis
                .values
                .iter()
                .map(|v| if is_bare(v) { v.clone() } else { quote_literal(v) })
                .collect();
            writeln!(f, "axis: ${} in [{}]", axis.name, values.join(", "))?;
        }
        writeln!(f, "batch: {}", self.batch_size)
    }
}

impl fmt::Display for MutationOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MutationOp::Set(v) => write!(f, "set({})", quote_literal(v)),
            MutationOp::Append(s) => write!(f, "append({})", quote_literal(s)),
            MutationOp::Prepend(s) => write!(f, "prepend({})", quote_literal(s)),
            MutationOp::Insert { pos, text } => write!(f, "insert({pos}, {})", quote_literal(text)),
            MutationOp::Repeat(n) => write!(f, "repeat({n})"),
            MutationOp::Truncate(n) => write!(f, "truncate({n})"),
            MutationOp::Pad { len, ch } => write!(f, "pad({len}, {})", quote_literal(&ch.to_string())),
            MutationOp::CaseFlip => f.write_str("case_flip()"),
            MutationOp::Empty => f.write_str("empty()"),
            MutationOp::NumberNegate => f.write_str("number_negate()"),
            MutationOp::NumberScale(x) => write!(f, "number_scale({x})"),
            MutationOp::NumberSet(v) => write!(f, "number_set({v})"),
            MutationOp::Digits(n) => write!(f, "digits({n})"),
            MutationOp::CharsetInject { class, count, pos } => write!(f, "charset_inject({class}, {count}, {pos})"),
            MutationOp::Swap { a, b } => write!(f, "swap({a}, {b})"),
            MutationOp::ViolateOrder { lo, hi, delta } => write!(f, "violate_order({lo}, {hi}, {delta})"),
        }
    }
}
