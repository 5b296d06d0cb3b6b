use std::collections::BTreeMap;

use super::LlmError;

/// Keywords anchoring the two response parsers. Matching is ASCII
/// case-insensitive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseMarkers {
    pub constraints: Vec<String>,
    pub input: Vec<String>,
    pub rule: String,
    pub generator: String,
    pub end: String,
}

impl Default for ResponseMarkers {
    fn default() -> Self {
        Self {
            constraints: vec!["constraints".into(), "constraint:".into()],
            input: vec![
                "the valid input".into(),
                "valid input".into(),
                "the input".into(),
                "input is".into(),
            ],
            rule: "mutation rule".into(),
            generator: "test generator".into(),
            end: "end generator.".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidInputResponse {
    pub valid_input: BTreeMap<String, String>,
    pub inferred_constraints: String,
    pub raw: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorResponse {
    pub mutation_rule: String,
    pub program_source: String,
    pub raw: String,
}

fn lower(s: &str) -> String {
    s.to_ascii_lowercase()
}

/// Skip an optional `is` and an optional colon after a marker.
fn skip_connective(raw: &str, mut at: usize) -> usize {
    let lower_rest = lower(&raw[at..]);
    let trimmed = lower_rest.trim_start_matches([' ', '\t']);
    if let Some(after) = trimmed.strip_prefix("is") {
        if after.is_empty() || !after.starts_with(|c: char| c.is_alphanumeric()) {
            at += lower_rest.len() - after.len();
        }
    }
    let rest = &raw[at..];
    let trimmed = rest.trim_start_matches([' ', '\t']);
    if let Some(after) = trimmed.strip_prefix(':') {
        at += rest.len() - after.len();
    }
    at
}

fn trim_value(s: &str) -> &str {
    s.trim().trim_matches(|c: char| c.is_whitespace())
}

fn first_quoted(segment: &str) -> Option<&str> {
    for (open, close) in [('"', '"'), ('\u{201C}', '\u{201D}')] {
        if let Some(start) = segment.find(open) {
            let body = &segment[start + open.len_utf8()..];
            if let Some(end) = body.find(close) {
                return Some(&body[..end]);
            }
        }
    }
    None
}

impl ResponseMarkers {
    /// Marker occurrences `(start, end)` at or after `from`, longest match at
    /// each position, non-overlapping.
    fn input_markers(&self, lower_raw: &str, from: usize) -> Vec<(usize, usize)> {
        let mut found = Vec::new();
        let mut i = from;
        while i < lower_raw.len() {
            if !lower_raw.is_char_boundary(i) {
                i += 1;
                continue;
            }
            let rest = &lower_raw[i..];
            let best = self
                .input
                .iter()
                .filter(|m| !m.is_empty() && rest.starts_with(m.as_str()))
                .map(String::len)
                .max();
            match best {
                Some(len) => {
                    found.push((i, i + len));
                    i += len;
                }
                None => i += 1,
            }
        }
        found
    }

    pub fn parse_valid_input(&self, raw: &str, expected_widgets: &[String]) -> Result<ValidInputResponse, LlmError> {
        let lower_raw = lower(raw);
        let constraint_marker = self
            .constraints
            .iter()
            .filter_map(|m| lower_raw.find(&lower(m)).map(|p| (p, p + m.len())))
            .min();
        let search_from = constraint_marker.map_or(0, |(_, end)| end);
        let markers = self.input_markers(&lower_raw, search_from);
        let Some(&(first_start, _)) = markers.first() else {
            return Err(LlmError::ParseMiss("no valid-input marker".into()));
        };
        let constraint_text = match constraint_marker {
            Some((_, end)) => {
                let start = skip_connective(raw, end).min(first_start);
                &raw[start..first_start]
            }
            None => &raw[..first_start],
        };
        let inferred_constraints = constraint_text
            .trim()
            .trim_matches(|c: char| c.is_whitespace() || matches!(c, '.' | ',' | ';' | ':'))
            .to_string();

        let mut values = Vec::new();
        for (idx, &(_, end)) in markers.iter().enumerate() {
            let start = skip_connective(raw, end);
            let line_end = raw[start..].find('\n').map_or(raw.len(), |p| start + p);
            let next = markers.get(idx + 1).map_or(raw.len(), |m| m.0);
            let segment = &raw[start..line_end.min(next.max(start))];
            let value = match first_quoted(segment) {
                Some(q) => q.to_string(),
                None => trim_value(segment)
                    .trim_end_matches(['.', ',', ';'])
                    .trim()
                    .to_string(),
            };
            values.push(value);
        }
        if values.len() < expected_widgets.len() {
            return Err(LlmError::ParseMiss(format!(
                "found {} values for {} widgets",
                values.len(),
                expected_widgets.len()
            )));
        }
        Ok(ValidInputResponse {
            valid_input: expected_widgets.iter().cloned().zip(values).collect(),
            inferred_constraints,
            raw: raw.to_string(),
        })
    }

    pub fn parse_generator(&self, raw: &str) -> Result<GeneratorResponse, LlmError> {
        let lower_raw = lower(raw);
        let rule_at = lower_raw
            .find(&lower(&self.rule))
            .ok_or_else(|| LlmError::ParseMiss(format!("no `{}` marker", self.rule)))?;
        let rule_start = skip_colon(raw, rule_at + self.rule.len());
        let gen_at = lower_raw[rule_start..]
            .find(&lower(&self.generator))
            .map(|p| p + rule_start)
            .ok_or_else(|| LlmError::ParseMiss(format!("no `{}` marker", self.generator)))?;
        let program_start = skip_colon(raw, gen_at + self.generator.len());
        let program_end = lower_raw[program_start..]
            .find(&lower(&self.end))
            .map_or(raw.len(), |p| p + program_start);
        let mutation_rule = raw[rule_start..gen_at].trim().to_string();
        let program_source = strip_fences(&raw[program_start..program_end]);
        if mutation_rule.is_empty() {
            return Err(LlmError::ParseMiss("empty mutation rule".into()));
        }
        if program_source.is_empty() {
            return Err(LlmError::ParseMiss("empty test generator".into()));
        }
        Ok(GeneratorResponse {
            mutation_rule,
            program_source,
            raw: raw.to_string(),
        })
    }
}

fn skip_colon(raw: &str, at: usize) -> usize {
    let rest = &raw[at..];
    let trimmed = rest.trim_start_matches([' ', '\t']);
    match trimmed.strip_prefix(':') {
        Some(after) => at + rest.len() - after.len(),
        None => at,
    }
}

fn strip_fences(text: &str) -> String {
    text.lines()
        .filter(|l| !l.trim_start().starts_with("```"))
        .collect::<Vec<_>>()
        .join("\n")
        .trim()
        .to_string()
}

pub fn parse_valid_input_response(raw: &str, expected_widgets: &[String]) -> Result<ValidInputResponse, LlmError> {
    ResponseMarkers::default().parse_valid_input(raw, expected_widgets)
}

pub fn parse_generator_response(raw: &str) -> Result<GeneratorResponse, LlmError> {
    ResponseMarkers::default().parse_generator(raw)
}

/// The response shape the generator parser reads back.
pub fn render_generator_response(rule: &str, program: &str) -> String {
    format!("Mutation rule: {rule}\nTest generator:\n{program}\nEnd generator.")
}
