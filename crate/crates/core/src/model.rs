//! Shared domain types: view trees, pages, input widgets, widget context and
//! the candidate-constraint catalog.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Maximum accepted view-tree depth. The root sits at depth 1.
pub const MAX_TREE_DEPTH: usize = 100;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("degenerate bounds {0}")]
    DegenerateBounds(Bounds),
    #[error("view tree deeper than {MAX_TREE_DEPTH} levels")]
    TooDeep,
    #[error("page is missing {0}")]
    MissingName(&'static str),
}

/// Screen rectangle in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Bounds {
    pub left: i32,
    pub top: i32,
    pub right: i32,
    pub bottom: i32,
}

impl Bounds {
    pub const fn new(left: i32, top: i32, right: i32, bottom: i32) -> Self {
        Self { left, top, right, bottom }
    }

    pub fn is_valid(&self) -> bool {
        self.left <= self.right && self.top <= self.bottom
    }

    pub fn height(&self) -> i64 {
        i64::from(self.bottom) - i64::from(self.top)
    }

    /// True when the two vertical intervals overlap by at least half of the
    /// smaller height.
    pub fn shares_row_with(&self, other: &Bounds) -> bool {
        let overlap = i64::from(self.bottom.min(other.bottom)) - i64::from(self.top.max(other.top));
        let smaller = self.height().min(other.height());
        overlap > 0 && overlap * 2 >= smaller
    }
}

impl fmt::Display for Bounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{},{},{}]", self.left, self.top, self.right, self.bottom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ViewNode {
    pub node_class: String,
    pub resource_id: String,
    pub text: String,
    pub hint_text: String,
    pub bounds: Bounds,
    pub children: Vec<ViewNode>,
}

impl ViewNode {
    pub fn new(node_class: impl Into<String>, bounds: Bounds) -> Self {
        Self {
            node_class: node_class.into(),
            bounds,
            ..Self::default()
        }
    }

    pub fn with_id(mut self, resource_id: impl Into<String>) -> Self {
        self.resource_id = resource_id.into();
        self
    }

    pub fn with_text(mut self, text: impl Into<String>) -> Self {
        self.text = text.into();
        self
    }

    pub fn with_hint(mut self, hint: impl Into<String>) -> Self {
        self.hint_text = hint.into();
        self
    }

    pub fn with_children(mut self, children: Vec<ViewNode>) -> Self {
        self.children = children;
        self
    }

    /// Depth of the subtree rooted here (a leaf has depth 1).
    pub fn depth(&self) -> usize {
        // Iterative so malformed, very deep trees cannot blow the stack.
        let mut max = 0;
        let mut stack = vec![(self, 1usize)];
        while let Some((node, d)) = stack.pop() {
            max = max.max(d);
            stack.extend(node.children.iter().map(|c| (c, d + 1)));
        }
        max
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.depth() > MAX_TREE_DEPTH {
            return Err(ModelError::TooDeep);
        }
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            if !node.bounds.is_valid() {
                return Err(ModelError::DegenerateBounds(node.bounds));
            }
            stack.extend(node.children.iter());
        }
        Ok(())
    }

    /// Resolve an index path from this node.
    pub fn at_path(&self, path: &[usize]) -> Option<&ViewNode> {
        path.iter().try_fold(self, |node, &i| node.children.get(i))
    }

    /// Label used when the node is mentioned as context: text, falling back
    /// to the resource id.
    pub fn label(&self) -> &str {
        if self.text.is_empty() {
            &self.resource_id
        } else {
            &self.text
        }
    }

    /// Visit every node in pre-order together with its index path.
    pub fn walk<'a>(&'a self, mut visit: impl FnMut(&[usize], &'a ViewNode)) {
        let mut stack: Vec<(Vec<usize>, &ViewNode)> = vec![(Vec::new(), self)];
        while let Some((path, node)) = stack.pop() {
            visit(&path, node);
            for (i, child) in node.children.iter().enumerate().rev() {
                let mut p = path.clone();
                p.push(i);
                stack.push((p, child));
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuiPage {
    pub app_name: String,
    pub activity_name: String,
    pub root: ViewNode,
}

impl GuiPage {
    pub fn new(app_name: impl Into<String>, activity_name: impl Into<String>, root: ViewNode) -> Self {
        Self {
            app_name: app_name.into(),
            activity_name: activity_name.into(),
            root,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.app_name.is_empty() {
            return Err(ModelError::MissingName("app_name"));
        }
        if self.activity_name.is_empty() {
            return Err(ModelError::MissingName("activity_name"));
        }
        self.root.validate()
    }

    pub fn node(&self, path: &[usize]) -> Option<&ViewNode> {
        self.root.at_path(path)
    }
}

/// An input widget found on a page.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InputWidget {
    /// `activity/resource_id`, or `activity/idx<path>` when the node has no id.
    pub widget_id: String,
    pub descriptor: String,
    pub node_path: Vec<usize>,
}

impl InputWidget {
    /// The widget id without its activity prefix. This is the key used by
    /// mutation programs and by the app simulator.
    pub fn local_key(&self) -> &str {
        self.widget_id
            .split_once('/')
            .map_or(self.widget_id.as_str(), |(_, key)| key)
    }
}

/// Everything textual known about one input widget.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct WidgetContext {
    pub app_name: String,
    pub page_name: String,
    pub input_widget: String,
    pub nearby_widgets: String,
    #[serde(default)]
    pub dynamic_hint: String,
    #[serde(default, skip_serializing)]
    pub hint_provoking_input: String,
}

impl WidgetContext {
    pub fn with_dynamic_hint(mut self, hint: impl Into<String>, provoking: impl Into<String>) -> Self {
        self.dynamic_hint = hint.into();
        self.hint_provoking_input = provoking.into();
        self
    }

    /// Text used for similarity search.
    pub fn retrieval_text(&self) -> String {
        [
            self.app_name.as_str(),
            self.page_name.as_str(),
            self.input_widget.as_str(),
            self.nearby_widgets.as_str(),
        ]
        .join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintCategory {
    IntraExplicit,
    IntraImplicit,
    Inter,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintCatalogEntry {
    pub category: ConstraintCategory,
    pub description: String,
}

const INTRA_EXPLICIT: [&str; 5] = [
    "Pure text (without special characters)",
    "Pure digits",
    "Decimal number",
    "Date format",
    "Currency amount",
];

const INTRA_IMPLICIT: [&str; 5] = [
    "Limited string length",
    "Required character classes (upper case, digit, special character)",
    "Uniqueness (value already in use)",
    "Non-negative value",
    "Bounded range",
];

const INTER: [&str; 7] = [
    "Less-than ordering (e.g., minimum below maximum, diastolic below systolic)",
    "Sum equals total",
    "Date before (e.g., departure before arrival)",
    "Equality of confirm fields",
    "Non-equality (e.g., new value differs from old value)",
    "Dependent enable (one field required when another is filled)",
    "Cross-field format consistency",
];

/// The built-in candidate-constraint catalog (5 explicit, 5 implicit, 7 inter).
pub fn default_catalog() -> Vec<ConstraintCatalogEntry> {
    let entries = |category, items: &[&str]| {
        items
            .iter()
            .map(move |d| ConstraintCatalogEntry {
                category,
                description: (*d).to_string(),
            })
            .collect::<Vec<_>>()
    };
    let mut catalog = entries(ConstraintCategory::IntraExplicit, &INTRA_EXPLICIT);
    catalog.extend(entries(ConstraintCategory::IntraImplicit, &INTRA_IMPLICIT));
    catalog.extend(entries(ConstraintCategory::Inter, &INTER));
    assert_catalog_shape(&catalog);
    catalog
}

/// Panics unless the catalog holds 5/5/7 entries per category.
pub fn assert_catalog_shape(catalog: &[ConstraintCatalogEntry]) {
    let count = |c| catalog.iter().filter(|e| e.category == c).count();
    assert_eq!(count(ConstraintCategory::IntraExplicit), 5, "explicit intra-constraints");
    assert_eq!(count(ConstraintCategory::IntraImplicit), 5, "implicit intra-constraints");
    assert_eq!(count(ConstraintCategory::Inter), 7, "inter-constraints");
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_has_expected_cardinalities() {
        let catalog = default_catalog();
        assert_eq!(catalog.len(), 17);
        assert_eq!(catalog[0].description, "Pure text (without special characters)");
        assert_eq!(catalog[5].description, "Limited string length");
    }

    #[test]
    #[should_panic(expected = "inter-constraints")]
    fn catalog_shape_rejects_short_inter_list() {
        let mut catalog = default_catalog();
        catalog.pop();
        assert_catalog_shape(&catalog);
    }

    #[test]
    fn degenerate_bounds_rejected() {
        let node = ViewNode::new("View", Bounds::new(10, 0, 5, 10));
        assert_eq!(node.validate(), Err(ModelError::DegenerateBounds(Bounds::new(10, 0, 5, 10))));
    }

    #[test]
    fn depth_limit() {
        let mut node = ViewNode::new("Leaf", Bounds::default());
        for _ in 1..MAX_TREE_DEPTH {
            node = ViewNode::new("V", Bounds::default()).with_children(vec![node]);
        }
        assert_eq!(node.depth(), MAX_TREE_DEPTH);
        assert!(node.validate().is_ok());
        let deeper = ViewNode::new("V", Bounds::default()).with_children(vec![node]);
        assert_eq!(deeper.validate(), Err(ModelError::TooDeep));
    }

    #[test]
    fn row_overlap_threshold() {
        let a = Bounds::new(0, 0, 10, 100);
        assert!(a.shares_row_with(&Bounds::new(0, 50, 10, 150)));
        assert!(!a.shares_row_with(&Bounds::new(0, 51, 10, 151)));
        assert!(a.shares_row_with(&Bounds::new(0, 90, 10, 110)));
        assert!(!a.shares_row_with(&Bounds::new(0, 100, 10, 200)));
    }

    #[test]
    fn walk_is_preorder() {
        let tree = ViewNode::new("a", Bounds::default()).with_children(vec![
            ViewNode::new("b", Bounds::default()).with_children(vec![ViewNode::new("c", Bounds::default())]),
            ViewNode::new("d", Bounds::default()),
        ]);
        let mut seen = Vec::new();
        tree.walk(|path, n| seen.push((path.to_vec(), n.node_class.clone())));
        assert_eq!(
            seen,
            vec![
                (vec![], "a".to_string()),
                (vec![0], "b".to_string()),
                (vec![0, 0], "c".to_string()),
                (vec![1], "d".to_string()),
            ]
        );
    }

    #[test]
    fn local_key_strips_activity() {
        let w = InputWidget {
            widget_id: "User/username".into(),
            descriptor: "x".into(),
            node_path: vec![0],
        };
        assert_eq!(w.local_key(), "username");
    }
}
