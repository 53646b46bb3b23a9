//! Frequent itemset mining over per-file service type sets, level-wise
//! Apriori with prefix join and downward-closure pruning. Items are plain
//! strings; the caller decides what goes into a transaction.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::ServiceType;

/// One transaction: the deduplicated set of items in one file.
pub type Transaction = BTreeSet<String>;

#[derive(Debug, Error, PartialEq)]
pub enum MiningError {
    #[error("no transactions to mine")]
    EmptyCorpus,
    #[error("min support {0} is outside (0, 1]")]
    InvalidSupport(f64),
}

/// One frequent itemset. `support` is the fixed six-decimal rendering of
/// count/total, computed once so serialized reports never carry raw floats.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemsetResult {
    pub items: Vec<String>,
    pub count: usize,
    pub total: usize,
    pub support: String,
}

impl ItemsetResult {
    pub fn new(items: Vec<String>, count: usize, total: usize) -> Self {
        let support = format_support(count, total);
        ItemsetResult {
            items,
            count,
            total,
            support,
        }
    }

    pub fn support_value(&self) -> f64 {
        self.count as f64 / self.total as f64
    }
}

pub fn format_support(count: usize, total: usize) -> String {
    format!("{:.6}", count as f64 / total as f64)
}

fn contains_all(transaction: &Transaction, items: &[String]) -> bool {
    items.iter().all(|i| transaction.contains(i))
}

/// Ascending support, ties by item names. Cross-multiplied so the compare
/// never touches floats.
fn result_order(a: &ItemsetResult, b: &ItemsetResult) -> std::cmp::Ordering {
    let left = a.count as u128 * b.total as u128;
    let right = b.count as u128 * a.total as u128;
    left.cmp(&right).then_with(|| a.items.cmp(&b.items))
}

/// Mines every itemset whose support (count/total) reaches `min_support`.
/// Transactions are sets, so an item occurring twice in one file counts
/// once. Result order: ascending support, then item names.
pub fn mine_frequent_itemsets(
    transactions: &[Transaction],
    min_support: f64,
) -> Result<Vec<ItemsetResult>, MiningError> {
    if !(min_support > 0.0 && min_support <= 1.0) {
        return Err(MiningError::InvalidSupport(min_support));
    }
    let total = transactions.len();
    if total == 0 {
        return Err(MiningError::EmptyCorpus);
    }
    let meets = |count: usize| count as f64 / total as f64 >= min_support;

    let mut singles: BTreeMap<String, usize> = BTreeMap::new();
    for t in transactions {
        for item in t {
            *singles.entry(item.clone()).or_insert(0) += 1;
        }
    }
    let mut frequent: Vec<(Vec<String>, usize)> = singles
        .into_iter()
        .filter(|(_, c)| meets(*c))
        .map(|(item, c)| (vec![item], c))
        .collect();

    let mut all_frequent = frequent.clone();
    while frequent.len() > 1 {
        let prev: BTreeSet<&[String]> = frequent.iter().map(|(i, _)| i.as_slice()).collect();
        let k = frequent[0].0.len() + 1;
        let mut candidates: Vec<Vec<String>> = Vec::new();
        for i in 0..frequent.len() {
            for j in (i + 1)..frequent.len() {
                let a = &frequent[i].0;
                let b = &frequent[j].0;
                if a[..k - 2] != b[..k - 2] {
                    // frequent is sorted, equal prefixes are contiguous
                    break;
                }
                let mut cand = a.clone();
                cand.push(b[k - 2].clone());
                // downward closure: the two generators are frequent by
                // construction, check the remaining (k-1)-subsets
                let closed = (0..k.saturating_sub(2)).all(|drop| {
                    let subset: Vec<String> = cand
                        .iter()
                        .enumerate()
                        .filter(|(idx, _)| *idx != drop)
                        .map(|(_, it)| it.clone())
                        .collect();
                    prev.contains(subset.as_slice())
                });
                if closed {
                    candidates.push(cand);
                }
            }
        }
        let mut next: Vec<(Vec<String>, usize)> = Vec::new();
        for cand in candidates {
            let count = transactions.iter().filter(|t| contains_all(t, &cand)).count();
            if meets(count) {
                next.push((cand, count));
            }
        }
        all_frequent.extend(next.iter().cloned());
        frequent = next;
    }

    let mut results: Vec<ItemsetResult> = all_frequent
        .into_iter()
        .map(|(items, count)| ItemsetResult::new(items, count, total))
        .collect();
    results.sort_by(result_order);
    Ok(results)
}

/// Turns per-file classified type lists into transactions. Unclassified is
/// skipped unless asked for; each type counts once per file.
pub fn transactions_from_types(
    per_file: &[Vec<ServiceType>],
    include_unclassified: bool,
) -> Vec<Transaction> {
    per_file
        .iter()
        .map(|types| {
            types
                .iter()
                .filter(|t| include_unclassified || **t != ServiceType::Unclassified)
                .map(|t| t.name().to_string())
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(items: &[&str]) -> Transaction {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn hand_computed_corpus() {
        let transactions = vec![t(&["a", "b", "c"]), t(&["a", "b"]), t(&["a", "c"]), t(&["a"])];
        let got = mine_frequent_itemsets(&transactions, 0.5).unwrap();
        let expect: Vec<(Vec<&str>, usize)> = vec![
            (vec!["a", "b"], 2),
            (vec!["a", "c"], 2),
            (vec!["b"], 2),
            (vec!["c"], 2),
            (vec!["a"], 4),
        ];
        assert_eq!(got.len(), expect.len());
        for (g, (items, count)) in got.iter().zip(&expect) {
            assert_eq!(g.items, *items);
            assert_eq!(g.count, *count);
            assert_eq!(g.total, 4);
        }
        assert_eq!(got[0].support, "0.500000");
        assert_eq!(got[4].support, "1.000000");
    }

    #[test]
    fn support_renders_six_decimals() {
        assert_eq!(format_support(27, 51), "0.529412");
        assert_eq!(format_support(1, 3), "0.333333");
        assert_eq!(format_support(2, 3), "0.666667");
        assert_eq!(format_support(1, 1), "1.000000");
    }

    #[test]
    fn transaction_order_is_irrelevant() {
        let a = vec![t(&["x", "y"]), t(&["y"]), t(&["x", "y", "z"]), t(&["z"])];
        let mut b = a.clone();
        b.reverse();
        assert_eq!(
            mine_frequent_itemsets(&a, 0.25).unwrap(),
            mine_frequent_itemsets(&b, 0.25).unwrap()
        );
    }

    #[test]
    fn duplicates_in_one_file_count_once() {
        // a set cannot hold duplicates; feeding the same item twice through
        // transactions_from_types collapses it
        let per_file = vec![vec![ServiceType::Database, ServiceType::Database]];
        let txs = transactions_from_types(&per_file, false);
        assert_eq!(txs[0].len(), 1);
        let got = mine_frequent_itemsets(&txs, 1.0).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].count, 1);
    }

    #[test]
    fn unclassified_excluded_by_default() {
        let per_file = vec![vec![ServiceType::Database, ServiceType::Unclassified]];
        let txs = transactions_from_types(&per_file, false);
        assert_eq!(txs[0], t(&["Database"]));
        let txs = transactions_from_types(&per_file, true);
        assert_eq!(txs[0], t(&["Database", "Unclassified"]));
    }

    #[test]
    fn errors_on_empty_and_bad_support() {
        assert_eq!(
            mine_frequent_itemsets(&[], 0.5),
            Err(MiningError::EmptyCorpus)
        );
        for bad in [0.0, -0.1, 1.5, f64::NAN] {
            match mine_frequent_itemsets(&[t(&["a"])], bad) {
                Err(MiningError::InvalidSupport(_)) => {}
                other => panic!("expected InvalidSupport, got {other:?}"),
            }
        }
    }

    #[test]
    fn downward_closure_holds() {
        let transactions = vec![
            t(&["a", "b", "c", "d"]),
            t(&["a", "b", "c"]),
            t(&["a", "b"]),
            t(&["c", "d"]),
            t(&["a", "c", "d"]),
        ];
        let got = mine_frequent_itemsets(&transactions, 0.4).unwrap();
        let reported: BTreeSet<&[String]> = got.iter().map(|r| r.items.as_slice()).collect();
        for r in &got {
            if r.items.len() < 2 {
                continue;
            }
            for drop in 0..r.items.len() {
                let subset: Vec<String> = r
                    .items
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != drop)
                    .map(|(_, s)| s.clone())
                    .collect();
                assert!(
                    reported.contains(subset.as_slice()),
                    "missing subset {subset:?} of {:?}",
                    r.items
                );
            }
        }
    }

    #[test]
    fn matches_brute_force_on_small_corpus() {
        let transactions = vec![
            t(&["a", "b"]),
            t(&["b", "c"]),
            t(&["a", "b", "c"]),
            t(&["a"]),
            t(&["b"]),
            t(&["a", "c"]),
        ];
        let min_support = 0.3;
        let got = mine_frequent_itemsets(&transactions, min_support).unwrap();

        // independent exponential enumeration
        let universe: Vec<String> = transactions
            .iter()
            .flatten()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let total = transactions.len();
        let mut expected: Vec<ItemsetResult> = Vec::new();
        for mask in 1u32..(1 << universe.len()) {
            let items: Vec<String> = universe
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, s)| s.clone())
                .collect();
            let count = transactions
                .iter()
                .filter(|tr| items.iter().all(|i| tr.contains(i)))
                .count();
            if count as f64 / total as f64 >= min_support {
                expected.push(ItemsetResult::new(items, count, total));
            }
        }
        expected.sort_by(result_order);
        assert_eq!(got, expected);
    }
}
