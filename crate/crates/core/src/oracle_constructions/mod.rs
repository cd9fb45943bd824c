//! Constructions that consult a dominating function: the ultrafilter base
//! over the stream tree and the maximal independent family, plus the exact
//! leftmost-path oracle used to verify them.

mod indep;
mod leftmost;
mod ufbase;

use thiserror::Error;

use crate::encoding::{BitString, CodedFamily, Column};

pub use indep::{build_indep_family, IndepParams, IndepRun, Interval, Phase};
pub use leftmost::{child_stream, leftmost_path, stream_of, v_set, Alphabet, EpSet, LeftmostPath};
pub use ufbase::{build_uf_base, uf_columns, UfBaseParams, UfBaseRun};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("index {0} has no declared limit behavior")]
    UniverseNotDecidable(u64),
    #[error("no child at level {0} has an infinite stream")]
    NoInfinitePath(usize),
}

/// `F_σ = ⋂_{σ(i)=1} F_i ∩ ⋂_{σ(i)=0} (ω ∖ F_i)` on `[0, horizon)`, read at
/// the family's horizon.
pub fn f_sigma(fam: &CodedFamily, sigma: &BitString, horizon: u64) -> Column {
    let cols: Vec<Column> = (0..sigma.len() as u64)
        .map(|i| fam.column(i, fam.horizon()).unwrap_or_default())
        .collect();
    f_sigma_of(&cols, sigma, horizon)
}

/// As [`f_sigma`], over already materialized columns.
pub fn f_sigma_of(cols: &[Column], sigma: &BitString, horizon: u64) -> Column {
    (0..horizon)
        .filter(|x| {
            sigma
                .bits()
                .iter()
                .enumerate()
                .all(|(i, &b)| cols.get(i).is_some_and(|c| c.contains(x)) == b)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_sigma_examples() {
        let f0: Column = (0..20).filter(|x| x % 2 == 0).collect();
        let f1: Column = (0..20).filter(|x| x % 3 == 0).collect();
        let fam = CodedFamily::from_columns(&[f0.clone(), f1.clone()], 20);
        assert_eq!(f_sigma(&fam, &BitString::empty(), 20), (0..20).collect());
        assert_eq!(f_sigma(&fam, &"1".parse().unwrap(), 20), f0);
        let ten: Column = f0.difference(&f1).copied().collect();
        assert_eq!(f_sigma(&fam, &"10".parse().unwrap(), 20), ten);
    }
}
