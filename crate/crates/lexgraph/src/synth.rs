//! Synthetic corpora with planted structure, used to validate the training
//! and evaluation pipeline end to end: a linearly separable classification
//! corpus with homophilous citations, a two-community citation graph for
//! link scoring, and a corpus shaped to a prescribed year distribution.

use rand::Rng;

use crate::corpus::{CaseDoc, SplitHint, YearRange};
use crate::features::FeatureTable;
use crate::rng;

/// How train/test hints are assigned by the planted generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HintPolicy {
    /// Uniform seeded assignment.
    Shuffled,
    /// The newest cases are the test split, mirroring evaluation on cases
    /// the past cannot have cited.
    NewestTest,
}

/// Generator settings for [`planted_signal_corpus`].
#[derive(Clone, Debug)]
pub struct PlantedConfig {
    pub nodes: usize,
    pub feature_dim: usize,
    pub seed: u64,
    /// Citation probability between same-label cases.
    pub p_intra: f64,
    /// Citation probability between different-label cases.
    pub p_inter: f64,
    /// Fraction of cases hinted train (the rest are hinted test).
    pub train_fraction: f64,
    pub years: YearRange,
    pub hint_policy: HintPolicy,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            nodes: 400,
            feature_dim: 64,
            seed: 0,
            p_intra: 0.2,
            p_inter: 0.02,
            train_fraction: 0.7,
            years: YearRange::new(1960, 1999),
            hint_policy: HintPolicy::Shuffled,
        }
    }
}

/// Classification fixture: features are uniform on [-0.5, 0.5], the label is
/// the sign of a fixed random linear functional of the features, and
/// citations are homophilous (same-label pairs cite at `p_intra`, others at
/// `p_inter`), with the later case citing the earlier.
pub fn planted_signal_corpus(config: &PlantedConfig) -> (Vec<CaseDoc>, FeatureTable) {
    let n = config.nodes;
    let d = config.feature_dim;
    let mut table = FeatureTable::new(d);

    let mut w_rng = rng::rng_for(config.seed, "planted/functional");
    let functional: Vec<f64> = (0..d).map(|_| w_rng.gen::<f64>() * 2.0 - 1.0).collect();

    let mut labels = Vec::with_capacity(n);
    let mut years = Vec::with_capacity(n);
    let span = (config.years.end - config.years.start + 1).max(1);
    for i in 0..n {
        let key = format!("p{i:04}");
        let mut f_rng = rng::rng_for(config.seed, &format!("planted/features/{key}"));
        let x: Vec<f64> = (0..d).map(|_| f_rng.gen::<f64>() - 0.5).collect();
        let score: f64 = functional.iter().zip(&x).map(|(a, b)| a * b).sum();
        labels.push(u8::from(score > 0.0));
        years.push(config.years.start + (i as i32 * span) / n as i32);
        table.insert(key, x).expect("fixture keys are unique");
    }

    // Deterministic train/test hint assignment.
    let train_count = ((n as f64) * config.train_fraction).round() as usize;
    let mut hints = vec![SplitHint::Test; n];
    match config.hint_policy {
        HintPolicy::Shuffled => {
            let mut order: Vec<usize> = (0..n).collect();
            let mut h_rng = rng::rng_for(config.seed, "planted/hints");
            for i in (1..n).rev() {
                let j = h_rng.gen_range(0..=i);
                order.swap(i, j);
            }
            for &idx in order.iter().take(train_count) {
                hints[idx] = SplitHint::Train;
            }
        }
        HintPolicy::NewestTest => {
            // Years ascend with index, so the oldest prefix trains.
            for hint in hints.iter_mut().take(train_count) {
                *hint = SplitHint::Train;
            }
        }
    }

    let mut e_rng = rng::rng_for(config.seed, "planted/edges");
    let mut cited: Vec<Vec<String>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if labels[i] == labels[j] {
                config.p_intra
            } else {
                config.p_inter
            };
            if e_rng.gen::<f64>() < p {
                // Later case cites earlier.
                let (citing, cited_idx) = if years[i] >= years[j] { (i, j) } else { (j, i) };
                cited[citing].push(format!("p{cited_idx:04}"));
            }
        }
    }

    let docs: Vec<CaseDoc> = (0..n)
        .map(|i| CaseDoc {
            cited_ids: std::mem::take(&mut cited[i]),
            ..CaseDoc::new(format!("p{i:04}"), years[i]).with_label(labels[i], hints[i])
        })
        .collect();
    (docs, table)
}

/// Which way generated citations point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeOrientation {
    /// The later case cites the earlier one.
    LaterCitesEarlier,
    /// Coin-flip orientation, independent of year.
    Random,
}

/// Generator settings for [`two_community_corpus`].
#[derive(Clone, Debug)]
pub struct TwoCommunityConfig {
    pub nodes: usize,
    pub feature_dim: usize,
    pub seed: u64,
    /// Edge probability inside a community.
    pub p_intra: f64,
    /// Edge probability across communities.
    pub p_inter: f64,
    /// Magnitude of the community indicator coordinate.
    pub indicator_scale: f64,
    pub years: YearRange,
    pub orientation: EdgeOrientation,
}

impl Default for TwoCommunityConfig {
    fn default() -> Self {
        TwoCommunityConfig {
            nodes: 120,
            feature_dim: 16,
            seed: 0,
            p_intra: 0.3,
            p_inter: 0.01,
            indicator_scale: 1.0,
            years: YearRange::new(1900, 1999),
            orientation: EdgeOrientation::LaterCitesEarlier,
        }
    }
}

/// Link prediction fixture: two equal communities, dense inside and sparse
/// across, with community-indicator features (the first coordinate carries
/// the community sign on top of per-node noise). Unlabeled documents.
pub fn two_community_corpus(config: &TwoCommunityConfig) -> (Vec<CaseDoc>, FeatureTable) {
    let n = config.nodes;
    let d = config.feature_dim;
    let half = n / 2;
    let mut table = FeatureTable::new(d);

    let mut years = Vec::with_capacity(n);
    let span = (config.years.end - config.years.start + 1).max(1);
    for i in 0..n {
        let key = format!("g{i:04}");
        let mut f_rng = rng::rng_for(config.seed, &format!("community/features/{key}"));
        let mut x: Vec<f64> = (0..d).map(|_| f_rng.gen::<f64>() - 0.5).collect();
        x[0] += if i < half {
            config.indicator_scale
        } else {
            -config.indicator_scale
        };
        years.push(config.years.start + (i as i32 * span) / n as i32);
        table.insert(key, x).expect("fixture keys are unique");
    }

    let mut e_rng = rng::rng_for(config.seed, "community/edges");
    let mut cited: Vec<Vec<String>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if (i < half) == (j < half) {
                config.p_intra
            } else {
                config.p_inter
            };
            if e_rng.gen::<f64>() < p {
                let backward = years[i] >= years[j];
                let flip = match config.orientation {
                    EdgeOrientation::LaterCitesEarlier => backward,
                    EdgeOrientation::Random => e_rng.gen::<bool>(),
                };
                let (citing, cited_idx) = if flip { (i, j) } else { (j, i) };
                cited[citing].push(format!("g{cited_idx:04}"));
            }
        }
    }

    let docs: Vec<CaseDoc> = (0..n)
        .map(|i| CaseDoc {
            cited_ids: std::mem::take(&mut cited[i]),
            ..CaseDoc::new(format!("g{i:04}"), years[i])
        })
        .collect();
    (docs, table)
}

/// Corpus whose labeled training examples follow a prescribed year
/// distribution: `counts[k]` documents inside the k-th range, spread
/// round-robin over the range's years, all hinted train with alternating
/// labels.
pub fn corpus_with_year_counts(counts: &[(YearRange, usize)]) -> Vec<CaseDoc> {
    let mut docs = Vec::new();
    let mut serial = 0usize;
    for &(range, count) in counts {
        let width = (range.end - range.start + 1) as usize;
        for k in 0..count {
            let year = range.start + (k % width) as i32;
            docs.push(
                CaseDoc::new(format!("y{serial:05}"), year)
                    .with_label((serial % 2) as u8, SplitHint::Train),
            );
            serial += 1;
        }
    }
    docs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::year_histogram;

    #[test]
    fn planted_corpus_is_deterministic_and_labeled() {
        let config = PlantedConfig {
            nodes: 50,
            feature_dim: 8,
            ..PlantedConfig::default()
        };
        let (docs1, table1) = planted_signal_corpus(&config);
        let (docs2, table2) = planted_signal_corpus(&config);
        assert_eq!(docs1, docs2);
        assert_eq!(table1, table2);
        assert!(docs1.iter().all(|d| d.label.is_some()));
        // Both labels occur.
        assert!(docs1.iter().any(|d| d.label == Some(0)));
        assert!(docs1.iter().any(|d| d.label == Some(1)));
        // Roughly the requested train fraction.
        let train = docs1
            .iter()
            .filter(|d| d.split_hint == Some(SplitHint::Train))
            .count();
        assert_eq!(train, 35);
    }

    #[test]
    fn planted_homophily_dominates() {
        let (docs, _) = planted_signal_corpus(&PlantedConfig {
            nodes: 120,
            feature_dim: 8,
            ..PlantedConfig::default()
        });
        let label_of: std::collections::HashMap<&str, u8> = docs
            .iter()
            .map(|d| (d.case_id.as_str(), d.label.unwrap()))
            .collect();
        let mut intra = 0usize;
        let mut inter = 0usize;
        for d in &docs {
            for c in &d.cited_ids {
                if label_of[d.case_id.as_str()] == label_of[c.as_str()] {
                    intra += 1;
                } else {
                    inter += 1;
                }
            }
        }
        assert!(intra > 3 * inter, "intra {intra} vs inter {inter}");
    }

    #[test]
    fn two_community_edges_mostly_internal() {
        let (docs, table) = two_community_corpus(&TwoCommunityConfig {
            nodes: 80,
            ..TwoCommunityConfig::default()
        });
        assert_eq!(table.dim(), 16);
        let mut intra = 0usize;
        let mut inter = 0usize;
        for (i, d) in docs.iter().enumerate() {
            for c in &d.cited_ids {
                let j: usize = c[1..].parse().unwrap();
                if (i < 40) == (j < 40) {
                    intra += 1;
                } else {
                    inter += 1;
                }
            }
        }
        assert!(intra > 5 * inter, "intra {intra} vs inter {inter}");
        // Citations point backward in time.
        let year_of: Vec<i32> = docs.iter().map(|d| d.year).collect();
        for (i, d) in docs.iter().enumerate() {
            for c in &d.cited_ids {
                let j: usize = c[1..].parse().unwrap();
                assert!(year_of[i] >= year_of[j]);
            }
        }
    }

    #[test]
    fn year_counts_reproduce_histogram() {
        let counts = vec![
            (YearRange::new(1956, 1960), 7),
            (YearRange::new(1961, 1965), 3),
        ];
        let docs = corpus_with_year_counts(&counts);
        assert_eq!(docs.len(), 10);
        let rows = year_histogram(
            &docs,
            &[YearRange::new(1956, 1960), YearRange::new(1961, 1965)],
        );
        assert_eq!(rows[0].count, 7);
        assert_eq!(rows[1].count, 3);
        assert_eq!(rows[1].cumulative, 10);
    }
}
