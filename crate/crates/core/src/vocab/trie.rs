/// Prefix tree over token texts, keyed by Unicode scalar. Children are kept
/// sorted so traversal order is deterministic.
#[derive(Debug, Clone, Default)]
pub struct TokenTrie {
    nodes: Vec<Node>,
}

#[derive(Debug, Clone, Default)]
struct Node {
    children: Vec<(char, u32)>,
    tokens: Vec<u32>,
}

impl TokenTrie {
    pub const ROOT: u32 = 0;

    pub fn build<'a>(entries: impl IntoIterator<Item = (u32, &'a str)>) -> Self {
        let mut trie = TokenTrie {
            nodes: vec![Node::default()],
        };
        for (id, text) in entries {
            let mut node = Self::ROOT;
            for c in text.chars() {
                node = trie.child_or_insert(node, c);
            }
            trie.nodes[node as usize].tokens.push(id);
        }
        for n in &mut trie.nodes {
            n.tokens.sort_unstable();
        }
        trie
    }

    fn child_or_insert(&mut self, node: u32, c: char) -> u32 {
        let children = &self.nodes[node as usize].children;
        match children.binary_search_by_key(&c, |&(k, _)| k) {
            Ok(i) => children[i].1,
            Err(i) => {
                let id = self.nodes.len() as u32;
                self.nodes[node as usize].children.insert(i, (c, id));
                self.nodes.push(Node::default());
                id
            }
        }
    }

    pub fn children(&self, node: u32) -> &[(char, u32)] {
        &self.nodes[node as usize].children
    }

    pub fn tokens_at(&self, node: u32) -> &[u32] {
        &self.nodes[node as usize].tokens
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// All `(text, id)` pairs stored in the tree, in traversal order.
    pub fn entries(&self) -> Vec<(String, u32)> {
        let mut out = Vec::new();
        let mut buf = String::new();
        self.collect(Self::ROOT, &mut buf, &mut out);
        out
    }

    fn collect(&self, node: u32, buf: &mut String, out: &mut Vec<(String, u32)>) {
        for &id in self.tokens_at(node) {
            out.push((buf.clone(), id));
        }
        for &(c, child) in self.children(node) {
            buf.push(c);
            self.collect(child, buf, out);
            buf.pop();
        }
    }
}
