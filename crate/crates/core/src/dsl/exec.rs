use std::collections::{BTreeMap, HashSet};

use super::parse::is_widget_id;
use super::{
    Arg, CharClass, GeneratorProgram, MutationOp, OpCall, OpName, OpTrace, ParamKind, Position, Provenance,
    UnusualInput, MAX_INPUT_CHARS,
};

/// Strict decimal recognizer: optional sign, digits with optional fraction,
/// optional exponent. Surrounding whitespace is ignored.
pub fn parse_decimal(s: &str) -> Option<f64> {
    let t = s.trim();
    let body = t.strip_prefix(['+', '-']).unwrap_or(t);
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], Some(&body[i + 1..])),
        None => (body, None),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let digits = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
    if int.is_empty() && frac.is_empty() || !digits(int) || !digits(frac) {
        return None;
    }
    if let Some(e) = exponent {
        let e = e.strip_prefix(['+', '-']).unwrap_or(e);
        if e.is_empty() || !digits(e) {
            return None;
        }
    }
    t.parse::<f64>().ok().filter(|x| x.is_finite())
}

/// Integers print without a fraction; everything else uses the shortest
/// round-tripping decimal form.
pub fn format_number(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

fn lit(call: &OpCall, idx: usize, axis: Option<&str>) -> Result<String, String> {
    match &call.args[idx] {
        Arg::Lit(v) => Ok(v.clone()),
        Arg::Axis => axis
            .map(str::to_string)
            .ok_or_else(|| "axis variable without an axis value".to_string()),
    }
}

fn typed<T>(call: &OpCall, idx: usize, axis: Option<&str>, kind: ParamKind) -> Result<T, String>
where
    T: FromTyped,
{
    let raw = lit(call, idx, axis)?;
    let name = call.op.params()[idx].name;
    T::from_typed(&raw, kind).map_err(|e| format!("{}: argument `{name}`: {e}", call.op.name()))
}

trait FromTyped: Sized {
    fn from_typed(raw: &str, kind: ParamKind) -> Result<Self, String>;
}

impl FromTyped for String {
    fn from_typed(raw: &str, kind: ParamKind) -> Result<Self, String> {
        match kind {
            ParamKind::Number => parse_decimal(raw)
                .map(|_| raw.trim().to_string())
                .ok_or_else(|| format!("`{raw}` is not a number")),
            ParamKind::Widget if !is_widget_id(raw) => Err(format!("bad widget id {raw:?}")),
            _ => Ok(raw.to_string()),
        }
    }
}

impl FromTyped for usize {
    fn from_typed(raw: &str, _: ParamKind) -> Result<Self, String> {
        raw.trim()
            .parse::<usize>()
            .map_err(|_| format!("`{raw}` is not a non-negative integer"))
    }
}

impl FromTyped for f64 {
    fn from_typed(raw: &str, _: ParamKind) -> Result<Self, String> {
        parse_decimal(raw).ok_or_else(|| format!("`{raw}` is not a finite number"))
    }
}

impl FromTyped for char {
    fn from_typed(raw: &str, _: ParamKind) -> Result<Self, String> {
        let mut chars = raw.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Ok(c),
            _ => Err(format!("{raw:?} is not a single character")),
        }
    }
}

impl FromTyped for Position {
    fn from_typed(raw: &str, _: ParamKind) -> Result<Self, String> {
        raw.trim().parse()
    }
}

impl FromTyped for CharClass {
    fn from_typed(raw: &str, _: ParamKind) -> Result<Self, String> {
        raw.trim().parse()
    }
}

/// Resolve an op call into a typed mutation, substituting the axis value.
pub(crate) fn bind(call: &OpCall, axis: Option<&str>) -> Result<MutationOp, String> {
    use ParamKind::*;
    Ok(match call.op {
        OpName::Set => MutationOp::Set(typed(call, 0, axis, Text)?),
        OpName::Append => MutationOp::Append(typed(call, 0, axis, Text)?),
        OpName::Prepend => MutationOp::Prepend(typed(call, 0, axis, Text)?),
        OpName::Insert => MutationOp::Insert {
            pos: typed(call, 0, axis, Position)?,
            text: typed(call, 1, axis, Text)?,
        },
        OpName::Repeat => MutationOp::Repeat(typed(call, 0, axis, Count)?),
        OpName::Truncate => MutationOp::Truncate(typed(call, 0, axis, Count)?),
        OpName::Pad => MutationOp::Pad {
            len: typed(call, 0, axis, Count)?,
            ch: typed(call, 1, axis, Char)?,
        },
        OpName::CaseFlip => MutationOp::CaseFlip,
        OpName::Empty => MutationOp::Empty,
        OpName::NumberNegate => MutationOp::NumberNegate,
        OpName::NumberScale => MutationOp::NumberScale(typed(call, 0, axis, Float)?),
        OpName::NumberSet => MutationOp::NumberSet(typed(call, 0, axis, Number)?),
        OpName::Digits => MutationOp::Digits(typed(call, 0, axis, Count)?),
        OpName::CharsetInject => MutationOp::CharsetInject {
            class: typed(call, 0, axis, Class)?,
            count: typed(call, 1, axis, Count)?,
            pos: typed(call, 2, axis, Position)?,
        },
        OpName::Swap => MutationOp::Swap {
            a: typed(call, 0, axis, Widget)?,
            b: typed(call, 1, axis, Widget)?,
        },
        OpName::ViolateOrder => MutationOp::ViolateOrder {
            lo: typed(call, 0, axis, Widget)?,
            hi: typed(call, 1, axis, Widget)?,
            delta: typed(call, 2, axis, Number)?,
        },
    })
}

fn cap(mut s: String) -> String {
    if let Some((idx, _)) = s.char_indices().nth(MAX_INPUT_CHARS) {
        s.truncate(idx);
    }
    s
}

fn char_len(s: &str) -> usize {
    s.chars().count()
}

fn byte_index(s: &str, pos: Position) -> usize {
    let chars = match pos {
        Position::Start => 0,
        Position::End => return s.len(),
        Position::Middle => char_len(s) / 2,
        Position::Index(i) => i,
    };
    s.char_indices().nth(chars).map_or(s.len(), |(i, _)| i)
}

fn negate(s: &str) -> String {
    let t = s.trim();
    if let Some(rest) = t.strip_prefix('-') {
        rest.to_string()
    } else {
        format!("-{}", t.strip_prefix('+').unwrap_or(t))
    }
}

/// Apply a single-value op. `None` means the op does not apply to `value`.
fn apply_one(op: &MutationOp, value: &str) -> Option<String> {
    let out = match op {
        MutationOp::Set(v) => v.clone(),
        MutationOp::Append(s) => format!("{value}{s}"),
        MutationOp::Prepend(s) => format!("{s}{value}"),
        MutationOp::Insert { pos, text } => {
            let at = byte_index(value, *pos);
            format!("{}{text}{}", &value[..at], &value[at..])
        }
        MutationOp::Repeat(n) => {
            let len = char_len(value).max(1);
            let needed = (*n).min(MAX_INPUT_CHARS / len + 1);
            value.repeat(needed)
        }
        MutationOp::Truncate(n) => value.chars().take(*n).collect(),
        MutationOp::Pad { len, ch } => {
            let have = char_len(value);
            let want = (*len).min(MAX_INPUT_CHARS);
            let mut s = value.to_string();
            s.extend(std::iter::repeat_n(*ch, want.saturating_sub(have)));
            s
        }
        MutationOp::CaseFlip => value
            .chars()
            .flat_map(|c| -> Box<dyn Iterator<Item = char>> {
                if c.is_lowercase() {
                    Box::new(c.to_uppercase())
                } else if c.is_uppercase() {
                    Box::new(c.to_lowercase())
                } else {
                    Box::new(std::iter::once(c))
                }
            })
            .collect(),
        MutationOp::Empty => String::new(),
        MutationOp::NumberNegate => {
            parse_decimal(value)?;
            negate(value)
        }
        MutationOp::NumberScale(f) => {
            let x = parse_decimal(value)? * f;
            if !x.is_finite() {
                return None;
            }
            format_number(x)
        }
        MutationOp::NumberSet(v) => v.clone(),
        MutationOp::Digits(n) => "1234567890".chars().cycle().take((*n).min(MAX_INPUT_CHARS)).collect(),
        MutationOp::CharsetInject { class, count, pos } => {
            let pieces = class.pieces();
            let injected: String = pieces
                .iter()
                .cycle()
                .take((*count).min(MAX_INPUT_CHARS))
                .copied()
                .collect();
            let at = byte_index(value, *pos);
            format!("{}{injected}{}", &value[..at], &value[at..])
        }
        MutationOp::Swap { .. } | MutationOp::ViolateOrder { .. } => unreachable!("multi-widget op"),
    };
    Some(cap(out))
}

fn run_once(program: &GeneratorProgram, axis_value: Option<&str>) -> UnusualInput {
    let mut values: BTreeMap<String, String> = program
        .targets
        .iter()
        .map(|t| (t.clone(), program.base.get(t).cloned().unwrap_or_default()))
        .collect();
    let mut trace = Vec::with_capacity(program.ops.len());
    for call in &program.ops {
        let op = match bind(call, axis_value) {
            Ok(op) => op,
            Err(e) => {
                // Unreachable for parsed programs, which are type-checked.
                trace.push(OpTrace {
                    op: call.op.name().to_string(),
                    inapplicable: vec![e],
                });
                continue;
            }
        };
        let mut entry = OpTrace {
            op: match &call.on {
                Some(w) => format!("{op} on {w}"),
                None => op.to_string(),
            },
            inapplicable: Vec::new(),
        };
        match &op {
            MutationOp::Swap { a, b } => {
                let va = values.get(a).cloned().unwrap_or_default();
                let vb = values.get(b).cloned().unwrap_or_default();
                values.insert(a.clone(), vb);
                values.insert(b.clone(), va);
            }
            MutationOp::ViolateOrder { lo, hi, delta } => {
                match values.get(hi).and_then(|v| parse_decimal(v)).map(|x| x + delta) {
                    Some(x) if x.is_finite() => {
                        values.insert(lo.clone(), cap(format_number(x)));
                    }
                    _ => entry.inapplicable.push(hi.clone()),
                }
            }
            _ => {
                let widgets: Vec<String> = match &call.on {
                    Some(w) => vec![w.clone()],
                    None => program.targets.clone(),
                };
                for w in widgets {
                    let current = values.get(&w).cloned().unwrap_or_default();
                    match apply_one(&op, &current) {
                        Some(next) => {
                            values.insert(w, next);
                        }
                        None => entry.inapplicable.push(w),
                    }
                }
            }
        }
        trace.push(entry);
    }
    UnusualInput {
        assignment: values,
        provenance: Provenance {
            rule: program.rule.clone(),
            op_trace: trace,
            axis_value: axis_value.map(str::to_string),
        },
    }
}

/// Run a generator. One input per axis value (at most `batch_size`), or a
/// single input without an axis; duplicates are dropped, order preserved.
pub fn execute_program(program: &GeneratorProgram) -> Vec<UnusualInput> {
    let raw: Vec<UnusualInput> = match &program.axis {
        Some(axis) => axis
            .values
            .iter()
            .take(program.batch_size)
            .map(|v| run_once(program, Some(v)))
            .collect(),
        None => vec![run_once(program, None)],
    };
    let mut seen = HashSet::new();
    raw.into_iter()
        .filter(|input| seen.insert(input.assignment.clone()))
        .take(program.batch_size)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_program, MAX_OPS};
    use proptest::prelude::*;

    fn run(src: &str) -> Vec<BTreeMap<String, String>> {
        execute_program(&parse_program(src).unwrap())
            .into_iter()
            .map(|u| u.assignment)
            .collect()
    }

    fn single(base: &str, ops: &[&str]) -> String {
        let mut src = format!("rule: r\ntarget: w\nbase: w = {}\n", super::super::quote_literal(base));
        for op in ops {
            src.push_str(&format!("op: {op}\n"));
        }
        let out = run(&src);
        assert_eq!(out.len(), 1);
        out[0]["w"].clone()
    }

    #[test]
    fn negate_font_size() {
        assert_eq!(single("18", &["number_negate()"]), "-18");
        assert_eq!(single("-18", &["number_negate()"]), "18");
    }

    #[test]
    fn identity_program() {
        assert_eq!(single("abc", &[]), "abc");
    }

    #[test]
    fn repeat_and_friends() {
        assert_eq!(single("a", &["repeat(3)"]), "aaa");
        assert_eq!(single("ab", &["repeat(0)"]), "");
        assert_eq!(single("hello", &["truncate(2)"]), "he");
        assert_eq!(single("ab", &["pad(5, \"*\")"]), "ab***");
        assert_eq!(single("abcdef", &["pad(2)"]), "abcdef");
        assert_eq!(single("aBc1", &["case_flip()"]), "AbC1");
        assert_eq!(single("x", &["empty()"]), "");
        assert_eq!(single("x", &["set(\"y\")", "append(\"z\")", "prepend(\"<\")"]), "<yz");
        assert_eq!(single("abcd", &["insert(middle, \"|\")"]), "ab|cd");
        assert_eq!(single("abc", &["insert(middle, \"|\")"]), "a|bc");
        assert_eq!(single("abc", &["insert(1, \"|\")"]), "a|bc");
        assert_eq!(single("abc", &["insert(99, \"|\")"]), "abc|");
        assert_eq!(single("abc", &["insert(start, \"|\")"]), "|abc");
        assert_eq!(single("x", &["digits(12)"]), "123456789012");
        assert_eq!(single("12.5", &["number_scale(-2)"]), "-25");
        assert_eq!(single("3", &["number_scale(0.5)"]), "1.5");
        assert_eq!(single("abc", &["number_set(-1)"]), "-1");
    }

    #[test]
    fn charset_injection_is_table_driven() {
        assert_eq!(
            single("12.5", &["charset_inject(control, 3, end)"]),
            "12.5\u{0}\u{1}\u{8}"
        );
        assert_eq!(single("ab", &["charset_inject(format_specifier, 4, middle)"]), "a%s%n{0}%sb");
        assert_eq!(single("ab", &["charset_inject(rtl_override, 1, start)"]), "\u{202e}ab");
    }

    #[test]
    fn axis_program_yields_one_input_per_value() {
        let src = "rule: inject control characters\ntarget: w_price\nbase: w_price = \"12.5\"\n\
                   op: charset_inject(class=$X, count=3, pos=end)\n\
                   axis: $X in [control, null_byte, rtl_override]\nbatch: 3";
        let out = execute_program(&parse_program(src).unwrap());
        let values: Vec<_> = out.iter().map(|u| u.assignment["w_price"].clone()).collect();
        assert_eq!(
            values,
            vec![
                "12.5\u{0}\u{1}\u{8}".to_string(),
                "12.5\u{0}\u{0}\u{0}".to_string(),
                "12.5\u{202e}\u{202e}\u{202e}".to_string()
            ]
        );
        assert_eq!(out[1].provenance.axis_value.as_deref(), Some("null_byte"));
        assert_eq!(out[0].provenance.rule, "inject control characters");
    }

    #[test]
    fn batch_limits_axis_and_duplicates_collapse() {
        let src = "rule: r\ntarget: w\nbase: w = \"1\"\nop: repeat(n=$N)\naxis: $N in [1, 2, 3, 4, 5]\nbatch: 3";
        assert_eq!(run(src).len(), 3);
        let src = "rule: r\ntarget: w\nbase: w = \"\"\nop: repeat(n=$N)\naxis: $N in [1, 2, 3]";
        assert_eq!(run(src).len(), 1);
    }

    #[test]
    fn violate_order_oracle() {
        let src = "rule: r\ntarget: min, max\nbase: min = \"10\"\nbase: max = \"100\"\nop: violate_order(min, max, delta=1)";
        let out = run(src);
        let min: f64 = out[0]["min"].parse().unwrap();
        let max: f64 = out[0]["max"].parse().unwrap();
        assert_eq!(min, max + 1.0);
        assert_eq!(out[0]["min"], "101");
        assert_eq!(out[0]["max"], "100");
    }

    #[test]
    fn numeric_ops_on_text_are_logged_not_fatal() {
        let src = "rule: r\ntarget: a, b\nbase: a = \"abc\"\nbase: b = \"4\"\nop: number_negate()\nop: violate_order(b, a)";
        let out = execute_program(&parse_program(src).unwrap());
        assert_eq!(out[0].assignment["a"], "abc");
        assert_eq!(out[0].assignment["b"], "-4");
        assert_eq!(out[0].provenance.op_trace[0].inapplicable, vec!["a"]);
        assert_eq!(out[0].provenance.op_trace[1].inapplicable, vec!["a"]);
    }

    #[test]
    fn outputs_are_capped() {
        assert_eq!(single("ab", &["repeat(1000000000)"]).chars().count(), MAX_INPUT_CHARS);
        assert_eq!(single("", &["pad(99999999, \"x\")"]).chars().count(), MAX_INPUT_CHARS);
        assert_eq!(single("", &["digits(99999999)"]).chars().count(), MAX_INPUT_CHARS);
        assert_eq!(
            single("", &["charset_inject(sql_meta, 99999999, end)"]).chars().count(),
            MAX_INPUT_CHARS
        );
        let huge = single("9", &["repeat(400)"]);
        assert_eq!(huge.len(), 400);
        // Overflowing scale is inapplicable, so the value is kept.
        assert_eq!(single("1e300", &["number_scale(1e300)"]), "1e300");
        let mut ops = vec!["repeat(65536)"; MAX_OPS];
        ops[0] = "set(\"ab\")";
        assert_eq!(single("", &ops).chars().count(), MAX_INPUT_CHARS);
    }

    #[test]
    fn decimal_recognizer() {
        for ok in ["0", "18", "-18", "+3", "12.5", ".5", "5.", "1e3", "-2.5E-2", " 7 "] {
            assert!(parse_decimal(ok).is_some(), "{ok}");
        }
        for bad in ["", "-", ".", "abc", "1.2.3", "inf", "NaN", "1e", "0x10", "1,000", "1e400"] {
            assert!(parse_decimal(bad).is_none(), "{bad}");
        }
        assert_eq!(format_number(101.0), "101");
        assert_eq!(format_number(-0.0), "0");
        assert_eq!(format_number(0.25), "0.25");
    }

    fn numeric() -> impl Strategy<Value = String> {
        (any::<bool>(), 0u64..1_000_000, proptest::option::of(0u32..1000)).prop_map(|(neg, i, f)| {
            let mut s = if neg { format!("-{i}") } else { i.to_string() };
            if let Some(f) = f {
                s.push_str(&format!(".{f}"));
            }
            s
        })
    }

    proptest! {
        #[test]
        fn swap_twice_is_identity(a in "\\PC{0,10}", b in "\\PC{0,10}") {
            let src = format!(
                "rule: r\ntarget: a, b\nbase: a = {}\nbase: b = {}\nop: swap(a, b)\nop: swap(a, b)",
                super::super::quote_literal(&a), super::super::quote_literal(&b));
            let out = run(&src);
            prop_assert_eq!(&out[0]["a"], &a);
            prop_assert_eq!(&out[0]["b"], &b);
        }

        #[test]
        fn negate_twice_is_identity(base in numeric()) {
            prop_assert_eq!(single(&base, &["number_negate()", "number_negate()"]), base);
        }

        #[test]
        fn empty_then_append_is_set(base in "\\PC{0,10}", s in "\\PC{0,10}") {
            let lit = super::super::quote_literal(&s);
            prop_assert_eq!(
                single(&base, &["empty()", &format!("append({lit})")]),
                single(&base, &[&format!("set({lit})")])
            );
        }

        #[test]
        fn execution_is_deterministic(base in "\\PC{0,8}", n in 0usize..5) {
            let src = format!(
                "rule: r\ntarget: w\nbase: w = {}\nop: charset_inject(class=$C, count={n}, pos=middle)\n\
                 axis: $C in [emoji, whitespace, combining, sql_meta]",
                super::super::quote_literal(&base));
            let p = parse_program(&src).unwrap();
            prop_assert_eq!(execute_program(&p), execute_program(&p));
        }
    }
}
