use std::collections::{BTreeMap, BTreeSet};

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use super::{check_measure, evolve, SimError, SimErrorKind};
use crate::circuit::{Circuit, InstructionKind};
use crate::scalar::Scalar;

/// Name of the shot-sampling scheme. Golden counts depend on every detail
/// listed here, so any change to it must bump the version:
///
/// - generator: ChaCha8 (`rand_chacha`), seeded with `seed_from_u64(seed)`;
/// - shots are drawn in batches of [`SHOTS_PER_STREAM`]; batch `b` uses
///   stream `b` of that generator;
/// - each shot takes one `next_u64`, keeps the top 53 bits as a uniform
///   `u` in `[0, 1)`, and selects the first outcome (ascending classical
///   index) whose cumulative probability exceeds `u · total`.
pub const SAMPLER_ID: &str = "qrepair-shots-v1";

pub const SHOTS_PER_STREAM: u64 = 1024;

/// Probability map over classical bitstrings.
pub type Distribution<T> = BTreeMap<String, T>;

/// Shot counts keyed by classical bitstring, most significant bit first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountsDistribution {
    pub shots: u64,
    pub counts: BTreeMap<String, u64>,
}

impl CountsDistribution {
    pub fn probabilities<T: Scalar>(&self) -> Distribution<T> {
        let shots = T::from_u64(self.shots).unwrap_or_else(T::one);
        self.counts
            .iter()
            .map(|(k, &v)| (k.clone(), T::from_u64(v).unwrap_or_else(T::zero) / shots))
            .collect()
    }
}

/// Samples `shots` terminal-measurement outcomes.
///
/// Classical bits never written by a measurement read 0. A circuit without
/// measurements therefore yields the all-zeros key for every shot.
pub fn sample<T: Scalar>(circuit: &Circuit, shots: u64, seed: u64) -> Result<CountsDistribution, SimError> {
    if shots == 0 {
        return Err(SimError::new(
            SimErrorKind::InvalidCircuit,
            "shot count must be positive",
            None,
        ));
    }
    let state = evolve::<T>(circuit)?;
    let width = circuit.num_clbits();
    if width > 64 {
        return Err(SimError::new(
            SimErrorKind::InvalidCircuit,
            format!("{width} classical bits exceeds the sampler limit of 64"),
            None,
        ));
    }
    let mut source = vec![None; width];
    for inst in circuit
        .instructions
        .iter()
        .filter(|i| i.kind == InstructionKind::Measure)
    {
        let (q, c) = check_measure(circuit, inst)?;
        source[c] = Some(q);
    }

    let mut marginal: BTreeMap<u64, T> = BTreeMap::new();
    for (index, amp) in state.amplitudes().iter().enumerate() {
        let p = amp.norm_sqr();
        if p == T::zero() {
            continue;
        }
        let key = source
            .iter()
            .enumerate()
            .filter_map(|(c, q)| q.map(|q| (((index >> q) & 1) as u64) << c))
            .sum::<u64>();
        let slot = marginal.entry(key).or_insert_with(T::zero);
        *slot = *slot + p;
    }
    let mut cumulative = Vec::with_capacity(marginal.len());
    let mut total = T::zero();
    for (key, p) in marginal {
        total = total + p;
        cumulative.push((key, total));
    }

    let mut tallies: BTreeMap<u64, u64> = BTreeMap::new();
    let mut remaining = shots;
    let mut stream = 0u64;
    while remaining > 0 {
        let batch = remaining.min(SHOTS_PER_STREAM);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        for _ in 0..batch {
            let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            let target = T::lit(u) * total;
            let idx = cumulative
                .partition_point(|(_, c)| *c <= target)
                .min(cumulative.len() - 1);
            *tallies.entry(cumulative[idx].0).or_default() += 1;
        }
        remaining -= batch;
        stream += 1;
    }

    let counts = tallies.into_iter().map(|(key, n)| (bitstring(key, width), n)).collect();
    Ok(CountsDistribution { shots, counts })
}

fn bitstring(key: u64, width: usize) -> String {
    (0..width)
        .rev()
        .map(|c| if key >> c & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Total variation distance: half the L1 distance over the union of keys.
pub fn tvd<T: Scalar>(p: &Distribution<T>, q: &Distribution<T>) -> T {
    let keys: BTreeSet<&String> = p.keys().chain(q.keys()).collect();
    let sum = keys.into_iter().fold(T::zero(), |acc, k| {
        let a = p.get(k).copied().unwrap_or_else(T::zero);
        let b = q.get(k).copied().unwrap_or_else(T::zero);
        acc + (a - b).abs()
    });
    sum / T::lit(2.0)
}
