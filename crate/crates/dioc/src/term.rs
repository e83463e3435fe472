//! Structural operations shared by the two process languages: which
//! subterms are currently active, whether a term can terminate, and
//! replacement of an active subterm.

use std::sync::Arc;

use crate::ast::{DiocProcess, DpocProcess};

pub(crate) enum Shape<'a, T> {
    Seq(&'a Arc<T>, &'a Arc<T>),
    Par(&'a Arc<T>, &'a Arc<T>),
    One,
    Zero,
    Leaf,
}

pub(crate) trait Term: Sized + Clone {
    fn shape(&self) -> Shape<'_, Self>;
    fn with_child(&self, right: bool, child: Self) -> Self;
}

impl Term for DiocProcess {
    fn shape(&self) -> Shape<'_, Self> {
        match self {
            DiocProcess::Seq { left, right, .. } => Shape::Seq(left, right),
            DiocProcess::Par { left, right, .. } => Shape::Par(left, right),
            DiocProcess::One => Shape::One,
            DiocProcess::Zero => Shape::Zero,
            _ => Shape::Leaf,
        }
    }

    fn with_child(&self, right: bool, child: Self) -> Self {
        let child = Arc::new(child);
        match self {
            DiocProcess::Seq { left, right: r, span } => {
                if right {
                    DiocProcess::Seq { left: left.clone(), right: child, span: *span }
                } else {
                    DiocProcess::Seq { left: child, right: r.clone(), span: *span }
                }
            }
            DiocProcess::Par { left, right: r, span } => {
                if right {
                    DiocProcess::Par { left: left.clone(), right: child, span: *span }
                } else {
                    DiocProcess::Par { left: child, right: r.clone(), span: *span }
                }
            }
            _ => unreachable!("only compositions have children on a path"),
        }
    }
}

impl Term for DpocProcess {
    fn shape(&self) -> Shape<'_, Self> {
        match self {
            DpocProcess::Seq(a, b) => Shape::Seq(a, b),
            DpocProcess::Par(a, b) => Shape::Par(a, b),
            DpocProcess::One => Shape::One,
            DpocProcess::Zero => Shape::Zero,
            _ => Shape::Leaf,
        }
    }

    fn with_child(&self, right: bool, child: Self) -> Self {
        let child = Arc::new(child);
        match self {
            DpocProcess::Seq(a, b) => {
                if right {
                    DpocProcess::Seq(a.clone(), child)
                } else {
                    DpocProcess::Seq(child, b.clone())
                }
            }
            DpocProcess::Par(a, b) => {
                if right {
                    DpocProcess::Par(a.clone(), child)
                } else {
                    DpocProcess::Par(child, b.clone())
                }
            }
            _ => unreachable!("only compositions have children on a path"),
        }
    }
}

/// Can the term perform a termination step right now?
pub(crate) fn can_tick<T: Term>(p: &T) -> bool {
    match p.shape() {
        Shape::One => true,
        Shape::Seq(a, b) | Shape::Par(a, b) => can_tick(a.as_ref()) && can_tick(b.as_ref()),
        Shape::Zero | Shape::Leaf => false,
    }
}

/// A path from the root through compositions; `true` means "right child".
pub(crate) type Path = Vec<bool>;

/// Active leaves: the left side of a sequence, the right side too when the
/// left side can terminate, and both sides of a parallel composition.
pub(crate) fn leaves<T: Term>(p: &T) -> Vec<(Path, &T)> {
    let mut out = Vec::new();
    let mut stack: Vec<(Path, &T)> = vec![(Vec::new(), p)];
    while let Some((path, node)) = stack.pop() {
        match node.shape() {
            Shape::Seq(a, b) => {
                if can_tick(a.as_ref()) {
                    let mut pr = path.clone();
                    pr.push(true);
                    stack.push((pr, b.as_ref()));
                }
                let mut pl = path;
                pl.push(false);
                stack.push((pl, a.as_ref()));
            }
            Shape::Par(a, b) => {
                let mut pr = path.clone();
                pr.push(true);
                stack.push((pr, b.as_ref()));
                let mut pl = path;
                pl.push(false);
                stack.push((pl, a.as_ref()));
            }
            Shape::Leaf => out.push((path, node)),
            Shape::One | Shape::Zero => {}
        }
    }
    out
}

/// Replace the leaf at `path`. Entering the right side of a sequence
/// discards its (terminated) left side.
pub(crate) fn apply<T: Term>(p: &T, path: &[bool], repl: T) -> T {
    let Some((&dir, rest)) = path.split_first() else { return repl };
    match p.shape() {
        Shape::Seq(a, b) => {
            if dir {
                apply(b.as_ref(), rest, repl)
            } else {
                p.with_child(false, apply(a.as_ref(), rest, repl))
            }
        }
        Shape::Par(a, b) => {
            let child = if dir { b } else { a };
            p.with_child(dir, apply(child.as_ref(), rest, repl))
        }
        _ => unreachable!("path leads through compositions only"),
    }
}

