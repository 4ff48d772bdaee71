//! Prefix tree over normalized part numbers, item names and friendly names.
//!
//! Nodes live in one arena; each node keeps its children sorted by
//! character, so a depth-first walk yields keys in lexicographic order.

use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, FieldKind, SkuId};
use crate::text::normalize_text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Payload {
    pub sku_id: SkuId,
    pub field_kind: FieldKind,
}

#[derive(Debug, Clone, Default)]
struct Node {
    children: Vec<(char, u32)>,
    payloads: Vec<Payload>,
}

impl Node {
    fn child(&self, c: char) -> Option<u32> {
        self.children
            .binary_search_by(|(k, _)| k.cmp(&c))
            .ok()
            .map(|i| self.children[i].1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Suggestion {
    pub matched_key: String,
    pub sku_id: SkuId,
    pub field_kind: FieldKind,
}

#[derive(Debug, Clone)]
pub struct Trie {
    nodes: Vec<Node>,
    key_count: usize,
}

impl Default for Trie {
    fn default() -> Self {
        Trie {
            nodes: vec![Node::default()],
            key_count: 0,
        }
    }
}

impl Trie {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts `key` verbatim. Returns false when the (key, payload) pair was
    /// already present or the key is empty.
    pub fn insert(&mut self, key: &str, payload: Payload) -> bool {
        if key.is_empty() {
            return false;
        }
        let mut cur = 0usize;
        for c in key.chars() {
            cur = match self.nodes[cur]
                .children
                .binary_search_by(|(k, _)| k.cmp(&c))
            {
                Ok(i) => self.nodes[cur].children[i].1 as usize,
                Err(i) => {
                    let id = self.nodes.len();
                    self.nodes.push(Node::default());
                    self.nodes[cur].children.insert(i, (c, id as u32));
                    id
                }
            };
        }
        let node = &mut self.nodes[cur];
        if node.payloads.contains(&payload) {
            return false;
        }
        node.payloads.push(payload);
        self.key_count += 1;
        true
    }

    pub fn key_count(&self) -> usize {
        self.key_count
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Rough heap footprint in bytes.
    pub fn approx_memory_bytes(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| {
                std::mem::size_of::<Node>()
                    + n.children.capacity() * std::mem::size_of::<(char, u32)>()
                    + n.payloads.capacity() * std::mem::size_of::<Payload>()
            })
            .sum()
    }

    fn walk(&self, key: &str) -> Option<usize> {
        let mut cur = 0usize;
        for c in key.chars() {
            cur = self.nodes[cur].child(c)? as usize;
        }
        Some(cur)
    }

    /// Payloads stored at exactly `key`.
    pub fn get(&self, key: &str) -> &[Payload] {
        match self.walk(key) {
            Some(n) => &self.nodes[n].payloads,
            None => &[],
        }
    }

    /// Up to `limit` entries whose key starts with the normalized prefix, in
    /// lexicographic key order. An empty prefix yields nothing.
    pub fn suggest(&self, prefix: &str, limit: usize) -> Vec<Suggestion> {
        let prefix = normalize_text(prefix);
        let mut out = Vec::new();
        if prefix.is_empty() || limit == 0 {
            return out;
        }
        let Some(start) = self.walk(&prefix) else {
            return out;
        };
        let mut key = prefix;
        self.collect(start, &mut key, limit, &mut out);
        out
    }

    fn collect(&self, node: usize, key: &mut String, limit: usize, out: &mut Vec<Suggestion>) {
        // explicit stack of (node, depth-in-chars, next child index)
        let mut stack: Vec<(usize, usize)> = vec![(node, 0)];
        self.emit(node, key, limit, out);
        while let Some(&mut (n, ref mut next)) = stack.last_mut() {
            if out.len() >= limit {
                return;
            }
            match self.nodes[n].children.get(*next) {
                Some(&(c, child)) => {
                    *next += 1;
                    key.push(c);
                    self.emit(child as usize, key, limit, out);
                    stack.push((child as usize, 0));
                }
                None => {
                    stack.pop();
                    if !stack.is_empty() {
                        key.pop();
                    }
                }
            }
        }
    }

    fn emit(&self, node: usize, key: &str, limit: usize, out: &mut Vec<Suggestion>) {
        for p in &self.nodes[node].payloads {
            if out.len() >= limit {
                return;
            }
            out.push(Suggestion {
                matched_key: key.to_string(),
                sku_id: p.sku_id,
                field_kind: p.field_kind,
            });
        }
    }

    /// Every (key, payload) pair in lexicographic key order.
    pub fn entries(&self) -> Vec<(String, Payload)> {
        let mut out = Vec::with_capacity(self.key_count);
        let mut key = String::new();
        let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
        while let Some(&mut (n, ref mut next)) = stack.last_mut() {
            if *next == 0 {
                out.extend(self.nodes[n].payloads.iter().map(|p| (key.clone(), *p)));
            }
            match self.nodes[n].children.get(*next) {
                Some(&(c, child)) => {
                    *next += 1;
                    key.push(c);
                    stack.push((child as usize, 0));
                }
                None => {
                    stack.pop();
                    key.pop();
                }
            }
        }
        out
    }
}

pub fn build_trie(catalog: &Catalog) -> Trie {
    let mut trie = Trie::new();
    for rec in catalog {
        for (field_kind, text) in rec.fields() {
            trie.insert(
                &normalize_text(text),
                Payload {
                    sku_id: rec.sku_id,
                    field_kind,
                },
            );
        }
    }
    trie
}
