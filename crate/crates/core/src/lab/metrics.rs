//! Success rates and fixed-set breakdowns.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{ExperimentReport, LabError, RepairAttempt, RepairVerdict};
use crate::prompt::PromptConfig;
use crate::scalar::Proportion;

/// Bundles with at least one successful attempt among `attempts`.
pub fn fixed_bundles<'a>(attempts: impl IntoIterator<Item = &'a RepairAttempt>) -> BTreeSet<String> {
    attempts
        .into_iter()
        .filter(|a| a.verdict == RepairVerdict::Success)
        .map(|a| a.bundle_id.clone())
        .collect()
}

/// Share of `subset` with at least one successful attempt.
pub fn success_rate<P: Proportion>(attempts: &[RepairAttempt], subset: &BTreeSet<String>) -> Result<P, LabError> {
    if subset.is_empty() {
        return Err(LabError::EmptySubset);
    }
    let fixed = fixed_bundles(attempts.iter().filter(|a| subset.contains(&a.bundle_id)));
    Ok(P::from_count(fixed.len()) / P::from_count(subset.len()))
}

/// For every nonempty subset of the keys of `sets`, the items of `universe`
/// contained in exactly those sets. Regions may be empty.
pub fn venn_regions<K: Ord + Clone>(
    sets: &BTreeMap<K, BTreeSet<String>>,
    universe: &BTreeSet<String>,
) -> BTreeMap<BTreeSet<K>, BTreeSet<String>> {
    let keys: Vec<&K> = sets.keys().collect();
    assert!(keys.len() < 16, "too many sets for a Venn breakdown");
    let mut regions: BTreeMap<BTreeSet<K>, BTreeSet<String>> = (1u32..1 << keys.len())
        .map(|mask| {
            let members = (0..keys.len())
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| keys[i].clone())
                .collect();
            (members, BTreeSet::new())
        })
        .collect();
    for item in universe {
        let members: BTreeSet<K> = sets
            .iter()
            .filter(|(_, s)| s.contains(item))
            .map(|(k, _)| k.clone())
            .collect();
        if let Some(region) = regions.get_mut(&members) {
            region.insert(item.clone());
        }
    }
    regions
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub configs: Vec<PromptConfig>,
    pub bundles: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedSetBreakdown {
    /// Every nonempty combination of configurations, smallest first.
    pub regions: Vec<Region>,
    /// Bundles fixed by every configuration.
    pub intersection: BTreeSet<String>,
    /// Bundles fixed by that configuration alone.
    pub exclusive: BTreeMap<PromptConfig, BTreeSet<String>>,
    /// Bundles fixed by no configuration.
    pub unfixed: BTreeSet<String>,
}

pub fn fixed_set_breakdown(report: &ExperimentReport) -> FixedSetBreakdown {
    let universe: BTreeSet<String> = report.symptoms.keys().cloned().collect();
    let sets: BTreeMap<PromptConfig, BTreeSet<String>> = report
        .configs
        .iter()
        .map(|c| (*c, report.fixed_sets.get(c).cloned().unwrap_or_default()))
        .collect();
    let raw = venn_regions(&sets, &universe);
    let all: BTreeSet<PromptConfig> = sets.keys().copied().collect();
    let intersection = raw.get(&all).cloned().unwrap_or_default();
    let exclusive = sets
        .keys()
        .map(|c| (*c, raw.get(&BTreeSet::from([*c])).cloned().unwrap_or_default()))
        .collect();
    let covered: BTreeSet<&String> = sets.values().flatten().collect();
    let unfixed = universe.iter().filter(|b| !covered.contains(b)).cloned().collect();
    let mut regions: Vec<Region> = raw
        .into_iter()
        .map(|(configs, bundles)| Region {
            configs: configs.into_iter().collect(),
            bundles,
        })
        .collect();
    regions.sort_by(|a, b| (a.configs.len(), &a.configs).cmp(&(b.configs.len(), &b.configs)));
    FixedSetBreakdown {
        regions,
        intersection,
        exclusive,
        unfixed,
    }
}
