use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Pow};

use super::CfType;

/// Number of distinct left-memory access patterns for one junction.
///
/// `exact` is false when dithering is requested but neither of `z` and `d_in`
/// divides the other; the value is then an upper bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternCount {
    pub value: BigUint,
    pub exact: bool,
}

impl fmt::Display for PatternCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exact {
            write!(f, "{}", self.value)
        } else {
            write!(f, "<= {} (bound)", self.value)
        }
    }
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * BigUint::from(k))
}

/// Counts access patterns: `D^z` (type 1), `D^(z d_out)` (type 2) or
/// `(D!)^(z d_out)` (type 3), times the dither factor `K` when `dither` is set.
pub fn count_patterns(
    depth: usize,
    z: usize,
    d_out: usize,
    d_in: usize,
    cf_type: CfType,
    dither: bool,
) -> PatternCount {
    assert!(
        depth > 0 && z > 0 && d_out > 0 && d_in > 0,
        "arguments must be positive"
    );
    let d = BigUint::from(depth);
    let base = match cf_type {
        CfType::Type1 => Pow::pow(d, z as u32),
        CfType::Type2 => Pow::pow(d, (z * d_out) as u32),
        CfType::Type3 => Pow::pow(factorial(depth), (z * d_out) as u32),
    };
    if !dither {
        return PatternCount {
            value: base,
            exact: true,
        };
    }
    let exponent = match cf_type {
        CfType::Type1 => 1u32,
        _ => d_out as u32,
    };
    if d_in % z == 0 {
        // every cycle lies inside one right neuron, so lane order is irrelevant
        PatternCount {
            value: base,
            exact: true,
        }
    } else if z % d_in == 0 {
        let groups = (z / d_in) as u32;
        let per_sweep = factorial(z) / Pow::pow(factorial(d_in), groups);
        PatternCount {
            value: base * Pow::pow(per_sweep, exponent),
            exact: true,
        }
    } else {
        PatternCount {
            value: base * Pow::pow(factorial(z), d_out as u32),
            exact: false,
        }
    }
}

/// Product of per-junction counts. Exact only if every factor is.
pub fn network_pattern_count(per_junction: &[PatternCount]) -> PatternCount {
    per_junction.iter().fold(
        PatternCount {
            value: BigUint::one(),
            exact: true,
        },
        |acc, c| PatternCount {
            value: acc.value * &c.value,
            exact: acc.exact && c.exact,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_row(cf_type: CfType, dither: bool) -> u64 {
        let c = count_patterns(3, 4, 2, 2, cf_type, dither);
        assert!(c.exact);
        c.value.try_into().unwrap()
    }

    #[test]
    fn comparison_table_values() {
        assert_eq!(table_row(CfType::Type1, false), 81);
        assert_eq!(table_row(CfType::Type1, true), 486);
        assert_eq!(table_row(CfType::Type2, false), 6561);
        assert_eq!(table_row(CfType::Type2, true), 236_196);
        assert_eq!(table_row(CfType::Type3, false), 1_679_616);
        assert_eq!(table_row(CfType::Type3, true), 60_466_176);
    }

    #[test]
    fn dither_has_no_effect_when_din_multiple_of_z() {
        let plain = count_patterns(3, 2, 2, 4, CfType::Type2, false);
        let dithered = count_patterns(3, 2, 2, 4, CfType::Type2, true);
        assert_eq!(plain, dithered);
    }

    #[test]
    fn fractional_ratio_is_a_bound() {
        let c = count_patterns(4, 3, 2, 2, CfType::Type1, true);
        assert!(!c.exact);
        assert_eq!(c.value, BigUint::from(64u32 * 36));
        assert!(c.to_string().contains("bound"));
    }

    #[test]
    fn big_values_do_not_overflow() {
        let c = count_patterns(50, 1000, 25, 1000, CfType::Type3, false);
        assert!(c.value.bits() > 64 * 1000);
    }

    #[test]
    fn network_product() {
        let a = count_patterns(2, 2, 1, 2, CfType::Type1, false);
        let b = count_patterns(3, 4, 2, 2, CfType::Type1, false);
        let n = network_pattern_count(&[a, b]);
        assert_eq!(n.value, BigUint::from(4u32 * 81));
        assert!(n.exact);
    }
}
