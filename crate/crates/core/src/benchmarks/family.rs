//! A fixed family of 36 small test expressions: three domain sizes
//! (2, 3, 4), each with 4, 8 and 16 variables, four expressions per size
//! where the fourth is the conjunction of the second and third.

use crate::error::Result;
use crate::model::{parse_expression, Constraint, Instance, ObjectiveMode, VariableTable};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FamilyCase {
    /// 1-based case number.
    pub index: usize,
    pub domain: u32,
    pub vars: u32,
    pub expression: String,
    /// A known satisfying corner, where one is known.
    pub corner: Option<Vec<u32>>,
}

const BASE: [(&str, &str, &str); 9] = [
    // (first, second, third) per (domain, size) block; the fourth is second & third
    (
        "x1 & x2 & x3 & x4",
        "x1 | x2 ^ x3 & x4",
        "x1 & x2 & x3 | x4",
    ),
    (
        "x1 & x2 & x3 & x4 & x5 & x6 & x7 & x8",
        "x1 ^ x2 & x3 | x4 & x5 & x6 | x7 ^ x8",
        "x1 & x2 ^ x3 & x4 | x5 & x6 ^ x7 & x8",
    ),
    (
        "x1 & x2 & x3 & x4 & x5 & x6 & x7 & x8 & x9 & x10 & x11 & x12 & x13 & x14 & x15 & x16",
        "x1 & x2 & x3 | x4 | x5 ^ x6 & x7 ^ x8 | x9 & x10 ^ x11 & x12 | x13 & x14 | x15 | x16",
        "x1 ^ x2 & x3 | x4 & x5 ^ x6 & x7 ^ x8 | x9 & x10 ^ x11 | x12 & x13 & x14 ^ x15 & x16",
    ),
    (
        "x1 & x2 & x3 & x4 = 1",
        "(x1 < x2) ^ (x3 > x4) = 1",
        "x1 & (x2 < x3) & x4 = 1",
    ),
    (
        "x1 & x2 & x3 & x4 & x5 & x6 & x7 & x8 = 1",
        "(x1 & x2 & x3 | x4 ^ (x5 < x6) & x7 & x8) = 1",
        "(x1 | x2 ^ (x3 < x4) | x5 & (x6 < x7) ^ x8) = 1",
    ),
    (
        "x1 & x2 & x3 & x4 & x5 & x6 & x7 & x8 & x9 & x10 & x11 & x12 & x13 & x14 & x15 & x16 = 1",
        "((x1 < x2) & (x3 > x4) ^ x5 & (x6 < x7) ^ x8 & x9 & x10 | x11 & x12 ^ x13 | x14 ^ (x15 < x16)) = 1",
        "((x1 > x2) & x3 & (x4 < x5) | x6 ^ (x7 > x8) & x9 | x10 | (x11 > x12) | (x13 < x14) & (x15 < x16)) = 1",
    ),
    (
        "x1 & x2 & x3 & x4 = 1",
        "x1 & (x2 < x3) & x4 = 1",
        "x1 & x2 & (x3 > x4) = 1",
    ),
    (
        "x1 & x2 & x3 & x4 & x5 & x6 & x7 & x8 = 1",
        "((x1 < x2) & (x3 > x4) & x5 | (x6 ^ x7) & x8) = 1",
        "(x1 & x2 ^ x3 | (x4 < x5) ^ x6 & x7 ^ x8) = 1",
    ),
    (
        "x1 & x2 & x3 & x4 & x5 & x6 & x7 & x8 & x9 & x10 & x11 & x12 & x13 & x14 & x15 & x16",
        "x1 ^ (x2 > x3) & x4 | x5 ^ (x6 > x7) | (x8 < x9) & x10 & (x11 < x12) ^ x13 | (x14 > x15) ^ x16",
        "((x1 < x2) & (x3 < x4) & x5 ^ x6 & x7 ^ (x8 > x9) & x10 & x11 | x12 | (x13 > x14) & (x15 > x16)) = 1",
    ),
];

/// Known satisfying corners, by case number.
const CORNERS: [(usize, [u32; 4]); 5] = [
    (1, [1, 1, 1, 1]),
    (14, [2, 0, 2, 0]),
    (15, [1, 0, 2, 1]),
    (16, [1, 0, 2, 1]),
    (26, [1, 1, 2, 1]),
];

pub fn expression_family() -> Vec<FamilyCase> {
    let mut out = Vec::with_capacity(36);
    for (block, (first, second, third)) in BASE.iter().enumerate() {
        let domain = 2 + (block / 3) as u32;
        let vars = [4, 8, 16][block % 3];
        let fourth = format!("({second}) != 0 & ({third}) != 0");
        for (k, expression) in [first.to_string(), second.to_string(), third.to_string(), fourth]
            .into_iter()
            .enumerate()
        {
            let index = block * 4 + k + 1;
            let corner = CORNERS
                .iter()
                .find(|(i, _)| *i == index)
                .map(|(_, c)| c.to_vec());
            out.push(FamilyCase {
                index,
                domain,
                vars,
                expression,
                corner,
            });
        }
    }
    out
}

impl FamilyCase {
    /// Single-constraint instance over `x1..x{vars}`.
    pub fn instance(&self) -> Result<Instance> {
        let mut table = VariableTable::new();
        for i in 1..=self.vars {
            table.add(format!("x{i}"), self.domain)?;
        }
        let expr = parse_expression(&self.expression, &table)?;
        Instance::new(table, vec![Constraint::expr(expr)], ObjectiveMode::Satisfy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DiscreteAssignment;

    #[test]
    fn family_shape() {
        let fam = expression_family();
        assert_eq!(fam.len(), 36);
        for case in &fam {
            let inst = case.instance().unwrap();
            assert_eq!(inst.num_variables(), case.vars as usize);
            // every variable is an atom
            assert_eq!(inst.constraints()[0].variables().len(), case.vars as usize);
        }
        assert_eq!(fam[13].expression, "(x1 < x2) ^ (x3 > x4) = 1");
        assert_eq!((fam[35].domain, fam[35].vars), (4, 16));
    }

    #[test]
    fn known_corners_satisfy() {
        for case in expression_family() {
            if let Some(c) = &case.corner {
                let inst = case.instance().unwrap();
                let v = inst.verify(&DiscreteAssignment::new(c.clone())).unwrap();
                assert!(v.all_satisfied(), "case {}", case.index);
            }
        }
    }
}
