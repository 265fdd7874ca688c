//! Small-tree text format.
//!
//! ```text
//! tree  := '.' | '(' [label] tree tree ')'
//! label := [A-Za-z0-9_]+
//! ```
//!
//! `.` is an absent child; the two inner trees are the left and right
//! children. Whitespace separates tokens and is otherwise ignored. Labels are
//! accepted and discarded. `(A (B . .) .)` is a root with a single left leaf.
//! [`to_text`] writes the unlabelled form, e.g. `((. .) .)`.

use crate::error::{Error, Result};
use crate::interval::Side;
use crate::tree::{NodeHandle, TreeStore};

fn parse_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        offset,
        message: message.into(),
    }
}

#[derive(Clone, Copy)]
enum Slot {
    Left,
    Right,
    Full,
}

pub fn parse_tree(input: &str) -> Result<TreeStore> {
    let bytes = input.as_bytes();
    let mut tree = TreeStore::new();
    let mut stack: Vec<(NodeHandle, Slot)> = Vec::new();
    let mut finished = false;
    let mut i = 0;

    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if finished {
            return Err(parse_err(i, "trailing input after tree"));
        }
        match c {
            b'(' => {
                let node = match stack.last_mut() {
                    None => tree.set_root(),
                    Some((parent, slot)) => {
                        let side = match *slot {
                            Slot::Left => Side::Left,
                            Slot::Right => Side::Right,
                            Slot::Full => {
                                return Err(parse_err(i, "node has more than two children"))
                            }
                        };
                        *slot = next_slot(*slot);
                        tree.push_child(*parent, side)
                    }
                };
                stack.push((node, Slot::Left));
                i += 1;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
            }
            b'.' => {
                match stack.last_mut() {
                    None => finished = true,
                    Some((_, slot)) => {
                        if matches!(slot, Slot::Full) {
                            return Err(parse_err(i, "node has more than two children"));
                        }
                        *slot = next_slot(*slot);
                    }
                }
                i += 1;
            }
            b')' => {
                match stack.pop() {
                    Some((_, Slot::Full)) => {}
                    Some(_) => {
                        return Err(parse_err(i, "node closed before both children were given"))
                    }
                    None => return Err(parse_err(i, "unbalanced ')'")),
                }
                if stack.is_empty() {
                    finished = true;
                }
                i += 1;
            }
            _ => {
                return Err(parse_err(
                    i,
                    format!("unexpected character {:?}", c as char),
                ))
            }
        }
    }
    if !finished {
        return Err(parse_err(bytes.len(), "unexpected end of input"));
    }
    Ok(tree)
}

fn next_slot(slot: Slot) -> Slot {
    match slot {
        Slot::Left => Slot::Right,
        Slot::Right | Slot::Full => Slot::Full,
    }
}

/// Serialize the tree reachable from the root (clipped parts are omitted).
pub fn to_text(tree: &TreeStore) -> String {
    match tree.root() {
        None => ".".to_string(),
        Some(root) => subtree_to_text(tree, root),
    }
}

pub fn subtree_to_text(tree: &TreeStore, start: NodeHandle) -> String {
    enum Item {
        Node(NodeHandle),
        Str(&'static str),
    }
    let mut out = String::new();
    let mut stack = vec![Item::Node(start)];
    while let Some(item) = stack.pop() {
        match item {
            Item::Str(s) => out.push_str(s),
            Item::Node(n) => {
                out.push('(');
                stack.push(Item::Str(")"));
                match tree.right(n) {
                    Some(r) => stack.push(Item::Node(r)),
                    None => stack.push(Item::Str(".")),
                }
                stack.push(Item::Str(" "));
                match tree.left(n) {
                    Some(l) => stack.push(Item::Node(l)),
                    None => stack.push(Item::Str(".")),
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_labelled_example() {
        let t = parse_tree("(A (B . .) .)").unwrap();
        let root = t.root().unwrap();
        assert_eq!(t.node_count(), 2);
        assert!(t.left(root).is_some());
        assert!(t.right(root).is_none());
        assert_eq!(to_text(&t), "((. .) .)");
    }

    #[test]
    fn empty_and_single() {
        assert!(parse_tree(".").unwrap().is_empty());
        assert_eq!(to_text(&parse_tree(" ( . . ) ").unwrap()), "(. .)");
    }

    #[test]
    fn rejects_malformed() {
        for bad in [
            "",
            "(",
            "(. . .)",
            "(.)",
            ")",
            "(. .) (. .)",
            "(x . ?)",
            ". .",
        ] {
            assert!(parse_tree(bad).is_err(), "{bad:?} should not parse");
        }
    }
}
