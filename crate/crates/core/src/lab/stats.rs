//! Inter-rater agreement.

use thiserror::Error;

use crate::scalar::Proportion;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("rating vectors have different lengths ({0} and {1})")]
    LengthMismatch(usize, usize),
    #[error("rating vectors are empty")]
    Empty,
    #[error("kappa is undefined: chance agreement is 1 but observed agreement is not")]
    UndefinedKappa,
}

/// Contingency counts of two binary raters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Agreement {
    pub yes_yes: usize,
    pub yes_no: usize,
    pub no_yes: usize,
    pub no_no: usize,
}

impl Agreement {
    pub fn tally(a: &[bool], b: &[bool]) -> Result<Self, StatsError> {
        if a.len() != b.len() {
            return Err(StatsError::LengthMismatch(a.len(), b.len()));
        }
        if a.is_empty() {
            return Err(StatsError::Empty);
        }
        let mut t = Agreement::default();
        for (&x, &y) in a.iter().zip(b) {
            match (x, y) {
                (true, true) => t.yes_yes += 1,
                (true, false) => t.yes_no += 1,
                (false, true) => t.no_yes += 1,
                (false, false) => t.no_no += 1,
            }
        }
        Ok(t)
    }

    pub fn total(&self) -> usize {
        self.yes_yes + self.yes_no + self.no_yes + self.no_no
    }

    pub fn matches(&self) -> usize {
        self.yes_yes + self.no_no
    }
}

pub fn percent_agreement<P: Proportion>(a: &[bool], b: &[bool]) -> Result<P, StatsError> {
    let t = Agreement::tally(a, b)?;
    Ok(P::from_count(t.matches()) / P::from_count(t.total()))
}

/// Cohen's kappa for two binary raters.
///
/// When both raters use a single identical label throughout, chance
/// agreement is 1 and kappa is defined as 1.
pub fn cohen_kappa<P: Proportion>(a: &[bool], b: &[bool]) -> Result<P, StatsError> {
    let t = Agreement::tally(a, b)?;
    let n = t.total();
    let a_yes = t.yes_yes + t.yes_no;
    let b_yes = t.yes_yes + t.no_yes;
    // n²·p_e in integers so the degenerate case is detected exactly
    let chance = a_yes * b_yes + (n - a_yes) * (n - b_yes);
    if chance == n * n {
        return if t.matches() == n {
            Ok(P::one())
        } else {
            Err(StatsError::UndefinedKappa)
        };
    }
    let nn = P::from_count(n) * P::from_count(n);
    let p_o = P::from_count(t.matches()) / P::from_count(n);
    let p_e = P::from_count(chance) / nn;
    Ok((p_o - p_e) / (P::one() - p_e))
}
