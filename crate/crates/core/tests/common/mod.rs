#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use fouriercsp_core::model::format::parse_instance;
use fouriercsp_core::optimizer::random_start;
use fouriercsp_core::{Instance, RowMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Variable declarations `x1..xn` with random domain sizes in `2..=max`.
pub fn random_sizes(rng: &mut impl Rng, n: usize, max: u32) -> Vec<u32> {
    (0..n).map(|_| rng.gen_range(2..=max)).collect()
}

pub fn declarations(sizes: &[u32]) -> String {
    sizes
        .iter()
        .enumerate()
        .map(|(i, s)| format!("var x{} {}\n", i + 1, s))
        .collect()
}

fn atom(rng: &mut impl Rng, sizes: &[u32]) -> String {
    let n = sizes.len();
    let i = rng.gen_range(0..n);
    let j = (i + rng.gen_range(1..n.max(2))) % n;
    match rng.gen_range(0..7) {
        0 | 1 => format!("x{}", i + 1),
        2 => format!("(x{} < x{})", i + 1, j + 1),
        3 => format!("(x{} > x{})", i + 1, j + 1),
        4 => format!("(x{} = {})", i + 1, rng.gen_range(0..sizes[i])),
        5 => format!("((x{} + x{}) % {})", i + 1, j + 1, rng.gen_range(2..4)),
        _ => format!("!x{}", i + 1),
    }
}

fn expr_rec(rng: &mut impl Rng, sizes: &[u32], depth: u32) -> String {
    if depth == 0 || rng.gen_bool(0.25) {
        return atom(rng, sizes);
    }
    let op = ["&", "|", "^"].choose(rng).unwrap();
    let (a, b) = (expr_rec(rng, sizes, depth - 1), expr_rec(rng, sizes, depth - 1));
    // unparenthesized chains exercise precedence
    if rng.gen_bool(0.3) {
        format!("{a} {op} {b}")
    } else {
        format!("({a} {op} {b})")
    }
}

/// A random expression over `x1..x{sizes.len()}`.
pub fn random_expression(rng: &mut impl Rng, sizes: &[u32]) -> String {
    let e = expr_rec(rng, sizes, 3);
    match rng.gen_range(0..4) {
        0 => format!("({e}) = 1"),
        1 => format!("({e}) != 0"),
        _ => e,
    }
}

/// A random structured constraint line over distinct variables.
pub fn random_structured(rng: &mut impl Rng, n: usize) -> String {
    let mut vars: Vec<usize> = (1..=n).collect();
    vars.shuffle(rng);
    match rng.gen_range(0..4) {
        0 => format!("lt x{} x{}", vars[0], vars[1]),
        1 => format!("neq x{} x{}", vars[0], vars[1]),
        2 if n >= 4 => format!("neq2 x{} x{} x{} x{}", vars[0], vars[1], vars[2], vars[3]),
        _ => {
            let k = rng.gen_range(1..=n);
            let scope: Vec<String> = vars[..k].iter().map(|v| format!("x{v}")).collect();
            format!("parity {} {}", k, scope.join(" "))
        }
    }
}

/// Single-constraint instance.
pub fn single(sizes: &[u32], body: &str) -> Instance {
    let text = format!("{}con {}\n", declarations(sizes), body);
    parse_instance(&text).unwrap_or_else(|e| panic!("{e}\n{text}"))
}

/// A random small instance with unit weights: expression and structured
/// constraints, plus occasional pinning constraints that make it likelier
/// to be unsatisfiable.
pub fn random_instance(rng: &mut impl Rng) -> Instance {
    let n = rng.gen_range(3..=5);
    let sizes = random_sizes(rng, n, 3);
    let mut text = declarations(&sizes);
    for _ in 0..rng.gen_range(2..=5) {
        let line = match rng.gen_range(0..5) {
            0 | 1 => format!("expr {}", random_expression(rng, &sizes)),
            2 => {
                let i = rng.gen_range(0..n);
                format!("expr x{} = {}", i + 1, rng.gen_range(0..sizes[i]))
            }
            _ => random_structured(rng, n),
        };
        text.push_str(&format!("con {line}\n"));
    }
    parse_instance(&text).unwrap_or_else(|e| panic!("{e}\n{text}"))
}

/// Random point on the product of simplices; some rows are pushed to the
/// boundary.
pub fn random_point(rng: &mut impl Rng, shape: &[usize]) -> RowMatrix {
    let mut p = random_start(shape, rng).into_matrix();
    for i in 0..p.rows() {
        if rng.gen_bool(0.15) {
            let row = p.row_mut(i);
            let k = rng.gen_range(0..row.len());
            row.fill(0.0);
            row[k] = 1.0;
        }
    }
    p
}

/// Every discrete assignment of a shape, in lexicographic order.
pub fn all_assignments(shape: &[usize]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for &s in shape {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..s as u32).map(move |v| {
                    let mut x = prefix.clone();
                    x.push(v);
                    x
                })
            })
            .collect();
    }
    out
}
