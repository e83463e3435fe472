//! Program and pair-set generators for randomised testing and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::ast::{BinOp, DiocProcess as D, Expr, Role, RolePair};
use crate::connectedness::PairSet;

fn role_name(i: usize) -> String {
    format!("r{i}")
}

fn random_leaf<R: Rng>(rng: &mut R, roles: usize, ops: usize) -> D {
    let a = rng.gen_range(0..roles);
    match rng.gen_range(0..5) {
        0 => D::One,
        1 => D::assign("v", &role_name(a), Expr::int(rng.gen_range(0..4))),
        _ => {
            let mut b = rng.gen_range(0..roles);
            if b == a {
                b = (a + 1) % roles;
            }
            let op = format!("o{}", rng.gen_range(0..ops));
            D::interaction(&op, &role_name(a), Expr::var("v"), &role_name(b), "v")
        }
    }
}

/// A random choreography with exactly `size` AST nodes over `roles` roles
/// (at least two) and `ops` operation names.
///
/// The result is neither guaranteed to be connected nor to terminate; it is
/// meant for static checks.
pub fn random_program<R: Rng>(rng: &mut R, size: usize, roles: usize, ops: usize) -> D {
    assert!(size >= 1 && roles >= 2 && ops >= 1);
    if size == 1 {
        return random_leaf(rng, roles, ops);
    }
    let r = role_name(rng.gen_range(0..roles));
    let guard = Expr::binary(BinOp::Lt, Expr::var("v"), Expr::int(2));
    let pick = if size == 2 { rng.gen_range(0..2) } else { rng.gen_range(0..5) };
    match pick {
        0 => D::while_(guard, &r, random_program(rng, size - 1, roles, ops)),
        1 => D::scope(&r, random_program(rng, size - 1, roles, ops)),
        2 => {
            let left = rng.gen_range(1..size - 1);
            D::if_(
                guard,
                &r,
                random_program(rng, left, roles, ops),
                random_program(rng, size - 1 - left, roles, ops),
            )
        }
        3 => {
            let left = rng.gen_range(1..size - 1);
            D::par(random_program(rng, left, roles, ops), random_program(rng, size - 1 - left, roles, ops))
        }
        _ => {
            let left = rng.gen_range(1..size - 1);
            D::seq(random_program(rng, left, roles, ops), random_program(rng, size - 1 - left, roles, ops))
        }
    }
}

/// A random set of role pairs.
///
/// Half of the sets are stars around role `r0` (optionally with one extra
/// pair) so that large covering sets occur alongside arbitrary ones.
pub fn random_pair_set<R: Rng>(rng: &mut R, roles: usize, max_len: usize) -> PairSet {
    let len = rng.gen_range(0..=max_len);
    let star = rng.gen_bool(0.5);
    let mut out = PairSet::new();
    for _ in 0..len {
        let a = if star { 0 } else { rng.gen_range(0..roles) };
        let b = rng.gen_range(0..roles);
        out.insert(RolePair::new(Role::new(&role_name(a)), Role::new(&role_name(b))));
    }
    if star && rng.gen_bool(0.3) {
        let mut ends: Vec<usize> = (0..roles).collect();
        ends.shuffle(rng);
        out.insert(RolePair::new(Role::new(&role_name(ends[0])), Role::new(&role_name(ends[1]))));
    }
    out
}

/// A connected choreography with exactly `n` nodes, for timing the
/// connectedness checker.
///
/// Every interaction involves the hub role `h` and has its own operation, so
/// all sequences and parallel compositions are connected. Nodes form a
/// balanced tree mixing sequences, parallel compositions, scopes and loops
/// across 64 spoke roles.
pub fn synthetic_program(n: usize) -> D {
    let mut next_op = 0usize;
    build(n, 0, &mut next_op)
}

fn build(n: usize, depth: usize, next_op: &mut usize) -> D {
    if n == 1 {
        let k = *next_op;
        *next_op += 1;
        let spoke = format!("s{}", k % 64);
        return if k.is_multiple_of(2) {
            D::interaction(&format!("op{k}"), "h", Expr::int(k as i64), &spoke, "x")
        } else {
            D::interaction(&format!("op{k}"), &spoke, Expr::var("x"), "h", "y")
        };
    }
    if n == 2 || depth % 5 == 4 {
        let body = build(n - 1, depth + 1, next_op);
        return if depth.is_multiple_of(2) {
            D::scope("h", body)
        } else {
            D::while_(Expr::binary(BinOp::Lt, Expr::var("y"), Expr::int(0)), "h", body)
        };
    }
    let left = (n - 1) / 2;
    let l = build(left, depth + 1, next_op);
    let r = build(n - 1 - left, depth + 1, next_op);
    if depth % 3 == 1 {
        D::par(l, r)
    } else {
        D::seq(l, r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connectedness::is_connected;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sizes_are_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for size in 1..60 {
            assert_eq!(random_program(&mut rng, size, 3, 3).size(), size);
        }
        for n in [1, 2, 3, 10, 999, 2048] {
            assert_eq!(synthetic_program(n).size(), n);
        }
    }

    #[test]
    fn synthetic_programs_are_connected() {
        assert!(is_connected(&synthetic_program(500)));
    }
}
