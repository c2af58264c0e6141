//! Example solutions shipped with the crate.

use crate::error::Result;
use crate::io::{parse_solution, SolutionFile};

pub const A2: &str = include_str!("../data/a2.sol");
pub const A3: &str = include_str!("../data/a3.sol");
/// Violates WDVV; negative control.
pub const A3_PERTURBED: &str = include_str!("../data/a3_perturbed.sol");
pub const I2_3: &str = include_str!("../data/i2_3.sol");
pub const I2_4: &str = include_str!("../data/i2_4.sol");
pub const I2_5: &str = include_str!("../data/i2_5.sol");

/// Genus-one `G` functions for the examples (all zero at this order).
pub const G_ZERO: &str = include_str!("../data/zero.g");

/// `(name, text)` for every valid example.
pub fn examples() -> Vec<(&'static str, &'static str)> {
    vec![
        ("a2", A2),
        ("i2_3", I2_3),
        ("i2_4", I2_4),
        ("i2_5", I2_5),
        ("a3", A3),
    ]
}

pub fn load(text: &str) -> Result<SolutionFile> {
    parse_solution(text)
}

pub fn a2() -> SolutionFile {
    load(A2).expect("shipped example parses")
}

pub fn a3() -> SolutionFile {
    load(A3).expect("shipped example parses")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frobenius::{check_conformal, infer_spectrum};
    use crate::inversion::{invert_solution, transform_conformal};

    #[test]
    fn examples_are_conformal_wdvv_solutions() {
        for (name, text) in examples() {
            let sf = load(text).unwrap();
            assert!(sf.solution.check_wdvv().is_empty(), "{name}");
            let cd = sf.conformal.unwrap();
            assert!(check_conformal(&sf.solution, &cd).unwrap().is_zero(), "{name}");
            assert_eq!(infer_spectrum(&sf.solution).unwrap(), cd, "{name}");
        }
        let bad = load(A3_PERTURBED).unwrap();
        assert!(!bad.solution.check_wdvv().is_empty());
    }

    #[test]
    fn inverted_examples_close() {
        for (name, text) in examples() {
            let sf = load(text).unwrap();
            let hat = invert_solution(&sf.solution).unwrap();
            assert!(hat.check_wdvv().is_empty(), "{name}");
            let cd_hat = transform_conformal(sf.conformal.as_ref().unwrap());
            assert_eq!(infer_spectrum(&hat).unwrap(), cd_hat, "{name}");
        }
    }
}
