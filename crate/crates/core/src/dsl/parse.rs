use std::collections::BTreeMap;

use super::exec::bind;
use super::{Arg, Axis, DslError, GeneratorProgram, OpCall, OpName, ParamKind, DEFAULT_BATCH, MAX_OPS};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Bare(String),
    Str(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Eq,
}

fn lex(text: &str) -> Result<Vec<Tok>, String> {
    let mut toks = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '(' | ')' | '[' | ']' | ',' | '=' => {
                chars.next();
                toks.push(match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    ',' => Tok::Comma,
                    _ => Tok::Eq,
                });
            }
            '"' => {
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        None => return Err("unterminated string literal".into()),
                        Some('"') => break,
                        Some('\\') => s.push(unescape(&mut chars)?),
                        Some(c) => s.push(c),
                    }
                }
                toks.push(Tok::Str(s));
            }
            _ => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || matches!(c, '(' | ')' | '[' | ']' | ',' | '=' | '"') {
                        break;
                    }
                    if c == '\\' {
                        return Err("backslash outside a string literal".into());
                    }
                    s.push(c);
                    chars.next();
                }
                toks.push(Tok::Bare(s));
            }
        }
    }
    Ok(toks)
}

fn unescape(chars: &mut std::iter::Peekable<std::str::Chars<'_>>) -> Result<char, String> {
    match chars.next() {
        Some('"') => Ok('"'),
        Some('\\') => Ok('\\'),
        Some('n') => Ok('\n'),
        Some('t') => Ok('\t'),
        Some('r') => Ok('\r'),
        Some('0') => Ok('\0'),
        Some('u') => {
            if chars.next() != Some('{') {
                return Err("expected `{` after \\u".into());
            }
            let mut hex = String::new();
            loop {
                match chars.next() {
                    Some('}') => break,
                    Some(c) if c.is_ascii_hexdigit() && hex.len() < 6 => hex.push(c),
                    _ => return Err("bad \\u{...} escape".into()),
                }
            }
            u32::from_str_radix(&hex, 16)
                .ok()
                .and_then(char::from_u32)
                .ok_or_else(|| format!("invalid code point \\u{{{hex}}}"))
        }
        Some(c) => Err(format!("unknown escape \\{c}")),
        None => Err("dangling backslash".into()),
    }
}

pub(crate) fn is_widget_id(s: &str) -> bool {
    !s.is_empty()
        && s
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.' | ':' | '/'))
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A value in an argument position.
enum Value {
    Lit(String),
    Var(String),
}

fn value_of(tok: Tok) -> Result<Value, String> {
    match tok {
        Tok::Str(s) => Ok(Value::Lit(s)),
        Tok::Bare(s) => match s.strip_prefix('$') {
            Some(name) if is_ident(name) => Ok(Value::Var(name.to_string())),
            Some(_) => Err(format!("bad variable `{s}`")),
            None => Ok(Value::Lit(s)),
        },
        other => Err(format!("expected a value, found {other:?}")),
    }
}

struct ParsedOp {
    call: OpCall,
    var: Option<(usize, String)>,
}

fn parse_op(rest: &str, line: usize) -> Result<ParsedOp, DslError> {
    let syntax = |reason: String| DslError::Syntax { line, reason };
    let toks = lex(rest).map_err(syntax)?;
    let mut it = toks.into_iter();
    let name = match it.next() {
        Some(Tok::Bare(n)) => n,
        _ => return Err(syntax("expected an operation name".into())),
    };
    let op: OpName = name
        .parse()
        .map_err(|_| DslError::UnknownOp { line, name: name.clone() })?;
    if it.next() != Some(Tok::LParen) {
        return Err(syntax(format!("expected `(` after `{name}`")));
    }
    let mut raw: Vec<(Option<String>, Value)> = Vec::new();
    let mut closed = false;
    let mut expect_arg = true;
    while let Some(tok) = it.next() {
        match tok {
            Tok::RParen => {
                closed = true;
                break;
            }
            Tok::Comma if !expect_arg => expect_arg = true,
            tok if expect_arg => {
                expect_arg = false;
                let mut lookahead = it.clone();
                if let (Tok::Bare(key), Some(Tok::Eq)) = (&tok, lookahead.next()) {
                    it = lookahead;
                    let v = it.next().ok_or_else(|| syntax(format!("missing value for `{key}`")))?;
                    raw.push((Some(key.clone()), value_of(v).map_err(syntax)?));
                } else {
                    raw.push((None, value_of(tok).map_err(syntax)?));
                }
            }
            other => return Err(syntax(format!("unexpected {other:?} in argument list"))),
        }
    }
    if !closed {
        return Err(syntax("missing `)`".into()));
    }
    if expect_arg && !raw.is_empty() {
        return Err(syntax("trailing comma".into()));
    }
    if let Some(extra) = it.next() {
        return Err(syntax(format!("unexpected {extra:?} after `)`")));
    }

    let params = op.params();
    let mut slots: Vec<Option<Value>> = params.iter().map(|_| None).collect();
    let mut on = None;
    let mut seen_named = false;
    let mut positional = 0;
    for (key, value) in raw {
        match key {
            None if seen_named => return Err(syntax("positional argument after a named one".into())),
            None => {
                if positional >= params.len() {
                    return Err(syntax(format!("`{name}` takes {} arguments", params.len())));
                }
                slots[positional] = Some(value);
                positional += 1;
            }
            Some(key) => {
                seen_named = true;
                if key == "on" && op.is_single_widget() {
                    match value {
                        Value::Lit(w) if is_widget_id(&w) && on.is_none() => on = Some(w),
                        _ => return Err(syntax("`on` needs a single widget id".into())),
                    }
                    continue;
                }
                let idx = params
                    .iter()
                    .position(|p| p.name == key)
                    .ok_or_else(|| syntax(format!("`{name}` has no parameter `{key}`")))?;
                if slots[idx].is_some() {
                    return Err(syntax(format!("parameter `{key}` given twice")));
                }
                slots[idx] = Some(value);
            }
        }
    }

    let mut args = Vec::with_capacity(params.len());
    let mut var = None;
    for (i, (param, slot)) in params.iter().zip(slots).enumerate() {
        match slot {
            Some(Value::Lit(v)) => args.push(Arg::Lit(v)),
            Some(Value::Var(n)) => {
                if param.kind == ParamKind::Widget {
                    return Err(syntax(format!("parameter `{}` cannot vary along an axis", param.name)));
                }
                if var.is_some() {
                    return Err(syntax("an operation may use the axis variable only once".into()));
                }
                var = Some((i, n));
                args.push(Arg::Axis);
            }
            None => match param.default {
                Some(d) => args.push(Arg::Lit(d.to_string())),
                None => return Err(syntax(format!("`{name}` is missing `{}`", param.name))),
            },
        }
    }
    Ok(ParsedOp {
        call: OpCall { op, on, args },
        var,
    })
}

fn parse_axis(rest: &str, line: usize) -> Result<Axis, DslError> {
    let syntax = |reason: String| DslError::Syntax { line, reason };
    let toks = lex(rest).map_err(syntax)?;
    let mut it = toks.into_iter();
    let name = match (it.next(), it.next()) {
        (Some(Tok::Bare(v)), Some(Tok::Bare(kw))) if kw == "in" => match v.strip_prefix('$') {
            Some(n) if is_ident(n) => n.to_string(),
            _ => return Err(syntax("axis must start with `$NAME in [`".into())),
        },
        _ => return Err(syntax("axis must look like `$NAME in [v1, v2]`".into())),
    };
    if it.next() != Some(Tok::LBracket) {
        return Err(syntax("expected `[`".into()));
    }
    let mut values = Vec::new();
    let mut expect_value = true;
    let mut closed = false;
    for tok in it.by_ref() {
        match tok {
            Tok::RBracket => {
                closed = true;
                break;
            }
            Tok::Comma if !expect_value => expect_value = true,
            Tok::Str(s) | Tok::Bare(s) if expect_value => {
                values.push(s);
                expect_value = false;
            }
            other => return Err(syntax(format!("unexpected {other:?} in axis values"))),
        }
    }
    if !closed || it.next().is_some() {
        return Err(syntax("axis list must end with `]`".into()));
    }
    if values.is_empty() {
        return Err(syntax("axis needs at least one value".into()));
    }
    if expect_value {
        return Err(syntax("trailing comma".into()));
    }
    Ok(Axis { name, values })
}

/// Parse generator source. Any malformed line rejects the whole program.
pub fn parse_program(source: &str) -> Result<GeneratorProgram, DslError> {
    let mut rule: Option<String> = None;
    let mut targets: Vec<String> = Vec::new();
    let mut target_line = 0;
    let mut base: BTreeMap<String, String> = BTreeMap::new();
    let mut base_lines: BTreeMap<String, usize> = BTreeMap::new();
    let mut ops: Vec<(usize, ParsedOp)> = Vec::new();
    let mut axis: Option<(usize, Axis)> = None;
    let mut batch: Option<usize> = None;
    let mut last_line = 0;

    for (idx, raw) in source.lines().enumerate() {
        let line = idx + 1;
        let text = raw.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        last_line = line;
        let syntax = |reason: String| DslError::Syntax { line, reason };
        let (key, rest) = text
            .split_once(':')
            .ok_or_else(|| syntax(format!("expected `directive: value`, got {text:?}")))?;
        let rest = rest.trim();
        match key.trim() {
            "rule" => {
                if rule.is_some() {
                    return Err(syntax("duplicate `rule:`".into()));
                }
                if rest.is_empty() {
                    return Err(syntax("empty rule".into()));
                }
                rule = Some(rest.to_string());
            }
            "target" => {
                target_line = if targets.is_empty() { line } else { target_line };
                for id in rest.split(',').map(str::trim) {
                    if !is_widget_id(id) {
                        return Err(syntax(format!("bad widget id {id:?}")));
                    }
                    if targets.iter().any(|t| t == id) {
                        return Err(syntax(format!("widget `{id}` targeted twice")));
                    }
                    targets.push(id.to_string());
                }
            }
            "base" => {
                let toks = lex(rest).map_err(syntax)?;
                match toks.as_slice() {
                    [Tok::Bare(id), Tok::Eq, Tok::Str(v) | Tok::Bare(v)] if is_widget_id(id) => {
                        if base.insert(id.clone(), v.clone()).is_some() {
                            return Err(syntax(format!("duplicate base for `{id}`")));
                        }
                        base_lines.insert(id.clone(), line);
                    }
                    [Tok::Bare(id), Tok::Eq] if is_widget_id(id) => {
                        return Err(syntax(format!("missing base value for `{id}`")));
                    }
                    _ => return Err(syntax("expected `base: <widget> = \"value\"`".into())),
                }
            }
            "op" => {
                if ops.len() == MAX_OPS {
                    return Err(syntax(format!("more than {MAX_OPS} operations")));
                }
                ops.push((line, parse_op(rest, line)?));
            }
            "axis" => {
                if axis.is_some() {
                    return Err(syntax("only one axis is allowed".into()));
                }
                axis = Some((line, parse_axis(rest, line)?));
            }
            "batch" => {
                if batch.is_some() {
                    return Err(syntax("duplicate `batch:`".into()));
                }
                match rest.parse::<usize>() {
                    Ok(n) if n > 0 => batch = Some(n),
                    _ => return Err(syntax(format!("batch must be a positive integer, got {rest:?}"))),
                }
            }
            other => return Err(syntax(format!("unknown directive `{other}`"))),
        }
    }

    let end = last_line.max(1);
    let rule = rule.ok_or(DslError::Syntax {
        line: end,
        reason: "missing `rule:`".into(),
    })?;
    if targets.is_empty() {
        return Err(DslError::Syntax {
            line: end,
            reason: "missing `target:`".into(),
        });
    }
    for t in &targets {
        if !base.contains_key(t) {
            return Err(DslError::UnboundWidget {
                line: target_line,
                widget: t.clone(),
            });
        }
    }
    for (id, line) in &base_lines {
        if !targets.contains(id) {
            return Err(DslError::UnboundWidget {
                line: *line,
                widget: id.clone(),
            });
        }
    }

    // Axis usage: exactly one reference, with the declared name.
    let refs: Vec<(usize, &str)> = ops
        .iter()
        .filter_map(|(line, p)| p.var.as_ref().map(|(_, n)| (*line, n.as_str())))
        .collect();
    match (&axis, refs.as_slice()) {
        (None, []) => {}
        (None, [(line, name), ..]) => {
            return Err(DslError::Syntax {
                line: *line,
                reason: format!("`${name}` used but no axis is declared"),
            })
        }
        (Some((line, a)), []) => {
            return Err(DslError::Syntax {
                line: *line,
                reason: format!("axis `${}` is never used", a.name),
            })
        }
        (Some((_, a)), [(line, name)]) => {
            if *name != a.name {
                return Err(DslError::Syntax {
                    line: *line,
                    reason: format!("`${name}` is not the declared axis `${}`", a.name),
                });
            }
        }
        (Some(_), [_, (line, _), ..]) => {
            return Err(DslError::Syntax {
                line: *line,
                reason: "the axis variable may appear only once".into(),
            })
        }
    }

    // Type-check every op under every axis value, and widget references.
    for (line, parsed) in &ops {
        let call = &parsed.call;
        let mut widgets: Vec<&str> = call.on.iter().map(String::as_str).collect();
        for (param, arg) in call.op.params().iter().zip(&call.args) {
            if let (ParamKind::Widget, Arg::Lit(w)) = (param.kind, arg) {
                if !is_widget_id(w) {
                    return Err(DslError::Syntax {
                        line: *line,
                        reason: format!("bad widget id {w:?}"),
                    });
                }
                widgets.push(w);
            }
        }
        if let Some(w) = widgets.into_iter().find(|w| !targets.iter().any(|t| t == w)) {
            return Err(DslError::UnboundWidget {
                line: *line,
                widget: w.to_string(),
            });
        }
        let check = |value: Option<&str>, at: usize| {
            bind(call, value).map(|_| ()).map_err(|reason| DslError::Syntax { line: at, reason })
        };
        match (&parsed.var, &axis) {
            (Some(_), Some((axis_line, a))) => {
                for v in &a.values {
                    check(Some(v), *axis_line)?;
                }
            }
            _ => check(None, *line)?,
        }
    }

    Ok(GeneratorProgram {
        rule,
        targets,
        base,
        ops: ops.into_iter().map(|(_, p)| p.call).collect(),
        axis: axis.map(|(_, a)| a),
        batch_size: batch.unwrap_or(DEFAULT_BATCH),
    })
}
