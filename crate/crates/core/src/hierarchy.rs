//! View-hierarchy snapshots: parsing, input-widget discovery, context
//! extraction and dynamic-hint extraction by page differencing.
//!
//! Snapshot wire format (JSON):
//!
//! ```json
//! { "app_name": "Wallet", "activity_name": "User",
//!   "root": { "class": "FrameLayout", "resource_id": "", "text": "", "hint": "",
//!             "bounds": [0, 0, 1080, 1920], "children": [] } }
//! ```
//!
//! Every string field defaults to `""` and `children` defaults to `[]`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Bounds, GuiPage, InputWidget, ModelError, ViewNode, WidgetContext, MAX_TREE_DEPTH};

/// Class-name fragments that mark a node as a text input widget.
pub const INPUT_CLASS_KEYWORDS: [&str; 4] = ["EditText", "AutoCompleteTextView", "TextInputEditText", "SearchView"];

#[derive(Debug, Error)]
pub enum HierarchyError {
    #[error("malformed snapshot: {0}")]
    MalformedSnapshot(String),
    #[error("widget {0} is not on this page")]
    WidgetNotInPage(String),
}

impl From<ModelError> for HierarchyError {
    fn from(e: ModelError) -> Self {
        HierarchyError::MalformedSnapshot(e.to_string())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PageWire {
    app_name: String,
    activity_name: String,
    root: NodeWire,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeWire {
    #[serde(default)]
    class: String,
    #[serde(default)]
    resource_id: String,
    #[serde(default)]
    text: String,
    #[serde(default)]
    hint: String,
    bounds: [i32; 4],
    #[serde(default)]
    children: Vec<NodeWire>,
}

impl From<NodeWire> for ViewNode {
    fn from(w: NodeWire) -> Self {
        let [l, t, r, b] = w.bounds;
        ViewNode {
            node_class: w.class,
            resource_id: w.resource_id,
            text: w.text,
            hint_text: w.hint,
            bounds: Bounds::new(l, t, r, b),
            children: w.children.into_iter().map(ViewNode::from).collect(),
        }
    }
}

impl From<&ViewNode> for NodeWire {
    fn from(n: &ViewNode) -> Self {
        NodeWire {
            class: n.node_class.clone(),
            resource_id: n.resource_id.clone(),
            text: n.text.clone(),
            hint: n.hint_text.clone(),
            bounds: [n.bounds.left, n.bounds.top, n.bounds.right, n.bounds.bottom],
            children: n.children.iter().map(NodeWire::from).collect(),
        }
    }
}

/// Deepest `{`/`[` nesting in a JSON document, ignoring string contents.
fn json_nesting(text: &str) -> usize {
    let (mut depth, mut max) = (0usize, 0usize);
    let (mut in_str, mut escaped) = (false, false);
    for b in text.bytes() {
        if in_str {
            match (escaped, b) {
                (true, _) => escaped = false,
                (false, b'\\') => escaped = true,
                (false, b'"') => in_str = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' => in_str = true,
            b'{' | b'[' => {
                depth += 1;
                max = max.max(depth);
            }
            b'}' | b']' => depth = depth.saturating_sub(1),
            _ => {}
        }
    }
    max
}

/// Parse a page snapshot document.
pub fn parse_hierarchy(snapshot: &str) -> Result<GuiPage, HierarchyError> {
    // Page object + (node object + children array) per level + bounds array.
    if json_nesting(snapshot) > 2 * (MAX_TREE_DEPTH + 1) + 2 {
        return Err(ModelError::TooDeep.into());
    }
    let mut de = serde_json::Deserializer::from_str(snapshot);
    // Nesting is bounded by the pre-scan above.
    de.disable_recursion_limit();
    let wire = PageWire::deserialize(&mut de).map_err(|e| HierarchyError::MalformedSnapshot(e.to_string()))?;
    de.end().map_err(|e| HierarchyError::MalformedSnapshot(e.to_string()))?;
    let page = GuiPage {
        app_name: wire.app_name,
        activity_name: wire.activity_name,
        root: wire.root.into(),
    };
    page.validate()?;
    Ok(page)
}

/// Serialize a page to the snapshot format.
pub fn write_hierarchy(page: &GuiPage) -> String {
    let wire = PageWire {
        app_name: page.app_name.clone(),
        activity_name: page.activity_name.clone(),
        root: NodeWire::from(&page.root),
    };
    serde_json::to_string_pretty(&wire).expect("snapshot serialization is infallible")
}

fn is_input_node(node: &ViewNode) -> bool {
    INPUT_CLASS_KEYWORDS.iter().any(|k| node.node_class.contains(k)) || !node.hint_text.is_empty()
}

fn descriptor_of(node: &ViewNode) -> String {
    [&node.hint_text, &node.resource_id, &node.text]
        .into_iter()
        .find(|s| !s.is_empty())
        .cloned()
        // No textual field at all: fall back to the simple class name.
        .unwrap_or_else(|| match node.node_class.rsplit('.').next() {
            Some(simple) if !simple.is_empty() => simple.to_string(),
            _ => "input".to_string(),
        })
}

fn widget_id(activity: &str, node: &ViewNode, path: &[usize]) -> String {
    if node.resource_id.is_empty() {
        let flat: Vec<String> = path.iter().map(usize::to_string).collect();
        format!("{activity}/idx{}", flat.join("."))
    } else {
        format!("{activity}/{}", node.resource_id)
    }
}

/// Input widgets of a page in document (pre-order) order.
pub fn identify_input_widgets(page: &GuiPage) -> Vec<InputWidget> {
    let mut found = Vec::new();
    page.root.walk(|path, node| {
        if is_input_node(node) {
            found.push(InputWidget {
                widget_id: widget_id(&page.activity_name, node, path),
                descriptor: descriptor_of(node),
                node_path: path.to_vec(),
            });
        }
    });
    found
}

fn resolve<'a>(page: &'a GuiPage, widget: &InputWidget) -> Result<&'a ViewNode, HierarchyError> {
    page.node(&widget.node_path)
        .filter(|n| widget_id(&page.activity_name, n, &widget.node_path) == widget.widget_id)
        .ok_or_else(|| HierarchyError::WidgetNotInPage(widget.widget_id.clone()))
}

/// Build the textual context of one input widget.
///
/// Nearby labels are collected from the parent node, then the parent's
/// children and leaf descendants, then every non-ancestor node on the same
/// row as the widget. Labels are deduplicated and joined with `;`.
pub fn extract_widget_context(page: &GuiPage, widget: &InputWidget) -> Result<WidgetContext, HierarchyError> {
    let target = resolve(page, widget)?;
    let path = widget.node_path.as_slice();
    let mut out: Vec<String> = Vec::new();
    let mut take = |node: &ViewNode| {
        let label = node.label();
        if !label.is_empty() && !out.iter().any(|l| l == label) {
            out.push(label.to_string());
        }
    };

    if let Some((_, parent_path)) = path.split_last() {
        let parent = page.node(parent_path).expect("parent of a resolved node exists");
        take(parent);
        parent.walk(|rel, node| {
            let is_self = rel == &path[parent_path.len()..];
            let is_inside_self = rel.len() > 1 && rel[0] == path[parent_path.len()];
            if rel.is_empty() || is_self || is_inside_self {
                return;
            }
            if rel.len() == 1 || node.children.is_empty() {
                take(node);
            }
        });
    }
    page.root.walk(|p, node| {
        let is_ancestor_or_self = path.starts_with(p);
        let is_inside_self = p.starts_with(path);
        if !is_ancestor_or_self && !is_inside_self && node.bounds.shares_row_with(&target.bounds) {
            take(node);
        }
    });

    Ok(WidgetContext {
        app_name: page.app_name.clone(),
        page_name: page.activity_name.clone(),
        input_widget: widget.descriptor.clone(),
        nearby_widgets: out.join(";"),
        dynamic_hint: String::new(),
        hint_provoking_input: String::new(),
    })
}

/// Feedback text that appeared after a submission.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DynamicHint {
    pub hint: String,
    pub provoking_input: String,
    /// Paths (in the `after` page) of the nodes that carried the hint text.
    pub node_paths: Vec<Vec<usize>>,
}

type NodeIdentity<'a> = (&'a str, &'a str, Bounds);

fn identity(node: &ViewNode) -> NodeIdentity<'_> {
    (&node.node_class, &node.resource_id, node.bounds)
}

/// Texts of nodes present in `after` but not in `before`, joined with `"; "`.
///
/// Node identity is `(class, resource_id, bounds)`; text is not
/// part of it so relabelled nodes are not mistaken for new ones.
pub fn diff_pages(before: &GuiPage, after: &GuiPage, provoking_input: &str) -> Option<DynamicHint> {
    let mut known: HashSet<NodeIdentity<'_>> = HashSet::new();
    before.root.walk(|_, n| {
        known.insert(identity(n));
    });
    let mut texts = Vec::new();
    let mut node_paths = Vec::new();
    after.root.walk(|path, n| {
        if !n.text.is_empty() && !known.contains(&identity(n)) {
            texts.push(n.text.clone());
            node_paths.push(path.to_vec());
        }
    });
    if texts.is_empty() {
        return None;
    }
    Some(DynamicHint {
        hint: texts.join("; "),
        provoking_input: provoking_input.to_string(),
        node_paths,
    })
}
