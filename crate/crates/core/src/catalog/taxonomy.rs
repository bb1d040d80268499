use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

/// Ordered list of key attribute names for a category.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AttributeTemplate(Vec<String>);

impl AttributeTemplate {
    pub fn new<I, S>(names: I) -> Result<Self, TaxonomyError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let mut seen = HashSet::new();
        for name in &names {
            if name.is_empty() {
                return Err(TaxonomyError::EmptyAttributeName);
            }
            if !seen.insert(name.as_str()) {
                return Err(TaxonomyError::DuplicateAttribute(name.clone()));
            }
        }
        Ok(Self(names))
    }

    pub fn names(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.iter().any(|n| n == name)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.0.iter().position(|n| n == name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    /// Same template keeping only names accepted by `keep`, order preserved.
    pub fn filtered(&self, mut keep: impl FnMut(&str) -> bool) -> Self {
        Self(self.0.iter().filter(|n| keep(n)).cloned().collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryNode {
    pub id: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_id: Option<String>,
    #[serde(default)]
    pub attribute_template: AttributeTemplate,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TaxonomyError {
    #[error("category {0} not found")]
    NotFound(String),
    #[error("duplicate category id {0}")]
    DuplicateCategory(String),
    #[error("category {child} references unknown parent {parent}")]
    UnknownParent { child: String, parent: String },
    #[error("taxonomy has a cycle through {0}")]
    Cycle(String),
    #[error("attribute template repeats {0}")]
    DuplicateAttribute(String),
    #[error("attribute template has an empty name")]
    EmptyAttributeName,
    #[error("cannot read taxonomy: {0}")]
    Io(String),
    #[error("malformed taxonomy: {0}")]
    Parse(String),
}

/// Nested taxonomy file entry; children inherit `parent_id` from nesting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaxonomyEntry {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub attribute_template: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<TaxonomyEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaxonomyFile {
    pub categories: Vec<TaxonomyEntry>,
}

/// Category forest keyed by id.
#[derive(Debug, Clone, Default)]
pub struct Taxonomy {
    nodes: BTreeMap<String, CategoryNode>,
}

impl Taxonomy {
    pub fn from_nodes(nodes: impl IntoIterator<Item = CategoryNode>) -> Result<Self, TaxonomyError> {
        let mut map = BTreeMap::new();
        for node in nodes {
            if map.contains_key(&node.id) {
                return Err(TaxonomyError::DuplicateCategory(node.id));
            }
            map.insert(node.id.clone(), node);
        }
        for node in map.values() {
            if let Some(parent) = &node.parent_id {
                if !map.contains_key(parent) {
                    return Err(TaxonomyError::UnknownParent {
                        child: node.id.clone(),
                        parent: parent.clone(),
                    });
                }
            }
        }
        // Every parent chain must end at a root within |nodes| steps.
        for start in map.keys() {
            let mut cursor = map[start].parent_id.as_ref();
            let mut steps = 0;
            while let Some(parent) = cursor {
                steps += 1;
                if steps > map.len() || parent == start {
                    return Err(TaxonomyError::Cycle(start.clone()));
                }
                cursor = map[parent].parent_id.as_ref();
            }
        }
        Ok(Self { nodes: map })
    }

    pub fn from_file_doc(doc: TaxonomyFile) -> Result<Self, TaxonomyError> {
        fn flatten(
            entry: TaxonomyEntry,
            parent: Option<&str>,
            out: &mut Vec<CategoryNode>,
        ) -> Result<(), TaxonomyError> {
            out.push(CategoryNode {
                id: entry.id.clone(),
                name: entry.name,
                parent_id: parent.map(str::to_string),
                attribute_template: AttributeTemplate::new(entry.attribute_template)?,
            });
            for child in entry.children {
                flatten(child, Some(&entry.id), out)?;
            }
            Ok(())
        }
        let mut nodes = Vec::new();
        for entry in doc.categories {
            flatten(entry, None, &mut nodes)?;
        }
        Self::from_nodes(nodes)
    }

    pub fn from_json(text: &str) -> Result<Self, TaxonomyError> {
        let doc: TaxonomyFile =
            serde_json::from_str(text).map_err(|e| TaxonomyError::Parse(e.to_string()))?;
        Self::from_file_doc(doc)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TaxonomyError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| TaxonomyError::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_json(&text)
    }

    pub fn get_category(&self, category_id: &str) -> Result<&CategoryNode, TaxonomyError> {
        self.nodes
            .get(category_id)
            .ok_or_else(|| TaxonomyError::NotFound(category_id.to_string()))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &CategoryNode> {
        self.nodes.values()
    }

    /// Back to the nested file form.
    pub fn to_file_doc(&self) -> TaxonomyFile {
        fn build(tax: &Taxonomy, id: &str) -> TaxonomyEntry {
            let node = &tax.nodes[id];
            TaxonomyEntry {
                id: node.id.clone(),
                name: node.name.clone(),
                attribute_template: node.attribute_template.names().to_vec(),
                children: tax
                    .nodes
                    .values()
                    .filter(|n| n.parent_id.as_deref() == Some(id))
                    .map(|n| build(tax, &n.id))
                    .collect(),
            }
        }
        TaxonomyFile {
            categories: self
                .nodes
                .values()
                .filter(|n| n.parent_id.is_none())
                .map(|n| build(self, &n.id))
                .collect(),
        }
    }
}
