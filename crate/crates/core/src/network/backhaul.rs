//! Bit accounting for everything that crosses the backhaul.
//!
//! Indices are counted at their information-theoretic width with no framing
//! overhead. Iterations are numbered from 1.

use std::collections::BTreeMap;

use crate::detection::CandidateList;
use crate::error::check_len;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Bs(usize),
    SelectionUnit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Link {
    pub from: Node,
    pub to: Node,
}

impl Link {
    pub fn new(from: Node, to: Node) -> Self {
        Self { from, to }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MessageKind {
    /// Quantized soft symbol, both real dimensions.
    SoftSymbol,
    /// Sliced symbol index.
    HardIndex,
    /// Entries of a candidate list.
    RmpList,
    /// Index of a base station's minimum-distance candidate.
    RmpArgmin,
    /// Quantized per-candidate partial distances. Not a reduced message: only
    /// the exact-selection reference sends these.
    RmpPartial,
}

impl MessageKind {
    pub fn is_reduced(self) -> bool {
        self != MessageKind::RmpPartial
    }
}

/// Bit counts keyed by iteration, link and message kind.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BackhaulLedger {
    counts: BTreeMap<(usize, Link, MessageKind), u64>,
}

impl BackhaulLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, iteration: usize, link: Link, kind: MessageKind, bits: u64) {
        if bits > 0 {
            *self.counts.entry((iteration, link, kind)).or_default() += bits;
        }
    }

    pub fn get(&self, iteration: usize, link: Link, kind: MessageKind) -> u64 {
        self.counts
            .get(&(iteration, link, kind))
            .copied()
            .unwrap_or(0)
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, Link, MessageKind, u64)> + '_ {
        self.counts.iter().map(|(&(i, l, k), &b)| (i, l, k, b))
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn iteration_total(&self, iteration: usize) -> u64 {
        self.entries()
            .filter(|e| e.0 == iteration)
            .map(|e| e.3)
            .sum()
    }

    pub fn kind_total(&self, kind: MessageKind) -> u64 {
        self.entries().filter(|e| e.2 == kind).map(|e| e.3).sum()
    }

    pub fn link_total(&self, link: Link) -> u64 {
        self.entries().filter(|e| e.1 == link).map(|e| e.3).sum()
    }

    /// Largest iteration with a recorded entry, 0 when empty.
    pub fn last_iteration(&self) -> usize {
        self.counts.keys().map(|k| k.0).max().unwrap_or(0)
    }

    /// Bits per iteration, `iterations` long.
    pub fn per_iteration(&self, iterations: usize) -> Vec<u64> {
        let mut out = vec![0; iterations];
        for (i, _, _, bits) in self.entries() {
            if (1..=iterations).contains(&i) {
                out[i - 1] += bits;
            }
        }
        out
    }

    /// Running totals over iterations `1..=iterations`.
    pub fn cumulative(&self, iterations: usize) -> Vec<u64> {
        self.per_iteration(iterations)
            .into_iter()
            .scan(0, |acc, b| {
                *acc += b;
                Some(*acc)
            })
            .collect()
    }

    pub fn merge(&mut self, other: &BackhaulLedger) {
        for (&key, &bits) in &other.counts {
            *self.counts.entry(key).or_default() += bits;
        }
    }
}

/// `ceil(log2(n))`, zero for `n <= 1`.
pub fn index_bits(n: u64) -> u64 {
    if n <= 1 {
        0
    } else {
        u64::from(64 - (n - 1).leading_zeros())
    }
}

/// Soft exchange: `2 q` bits per symbol on every link, every iteration.
pub fn meter_soft(
    ledger: &mut BackhaulLedger,
    iteration: usize,
    links: &[Link],
    symbols: u64,
    quant_bits: u32,
) -> u64 {
    let per_link = 2 * u64::from(quant_bits) * symbols;
    for &link in links {
        ledger.record(iteration, link, MessageKind::SoftSymbol, per_link);
    }
    per_link * links.len() as u64
}

/// Hard exchange: every decision on the first iteration, afterwards only the
/// symbols whose decision changed. `bits_per_symbol` bits each, per link.
pub fn meter_hard(
    ledger: &mut BackhaulLedger,
    iteration: usize,
    links: &[Link],
    now: &[usize],
    previous: Option<&[usize]>,
    bits_per_symbol: usize,
) -> Result<u64> {
    let changed = match previous {
        None => now.len(),
        Some(prev) => {
            check_len("hard decisions", now.len(), prev.len())?;
            now.iter().zip(prev).filter(|(a, b)| a != b).count()
        }
    };
    let per_link = (changed * bits_per_symbol) as u64;
    for &link in links {
        ledger.record(iteration, link, MessageKind::HardIndex, per_link);
    }
    Ok(per_link * links.len() as u64)
}

/// List exchange of one user: `|L| J` bits for every symbol whose list differs
/// from the previous iteration's (every symbol on the first).
pub fn meter_rmp_lists(
    ledger: &mut BackhaulLedger,
    iteration: usize,
    link: Link,
    lists: &[CandidateList],
    previous: Option<&[CandidateList]>,
    bits_per_symbol: usize,
) -> Result<u64> {
    if let Some(prev) = previous {
        check_len("candidate lists", lists.len(), prev.len())?;
    }
    let bits: u64 = lists
        .iter()
        .enumerate()
        .filter(|&(i, list)| previous.is_none_or(|prev| !list.same_indices(&prev[i])))
        .map(|(_, list)| (list.len() * bits_per_symbol) as u64)
        .sum();
    ledger.record(iteration, link, MessageKind::RmpList, bits);
    Ok(bits)
}

/// Argmin reports of one base station: `ceil(log2 Γ)` bits per symbol time.
pub fn meter_rmp_reports(
    ledger: &mut BackhaulLedger,
    iteration: usize,
    link: Link,
    gammas: &[u64],
) -> u64 {
    let bits = gammas.iter().map(|&g| index_bits(g)).sum();
    ledger.record(iteration, link, MessageKind::RmpArgmin, bits);
    bits
}

/// Partial-distance reports of one base station: `Γ` values per symbol time,
/// each metered like a quantized complex sample (`2 q` bits).
pub fn meter_rmp_partials(
    ledger: &mut BackhaulLedger,
    iteration: usize,
    link: Link,
    gammas: &[u64],
    quant_bits: u32,
) -> u64 {
    let bits = gammas.iter().sum::<u64>() * 2 * u64::from(quant_bits);
    ledger.record(iteration, link, MessageKind::RmpPartial, bits);
    bits
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::{build_candidate_list, SymbolPosterior};

    fn link(a: usize, b: usize) -> Link {
        Link::new(Node::Bs(a), Node::Bs(b))
    }

    fn singleton(q: usize) -> CandidateList {
        build_candidate_list(&SymbolPosterior::point_mass(4, q), 0.2, 4).unwrap()
    }

    #[test]
    fn soft_metering() {
        let mut ledger = BackhaulLedger::new();
        for it in 1..=4 {
            meter_soft(&mut ledger, it, &[link(0, 1)], 1, 6);
        }
        assert_eq!(ledger.total(), 48);

        let mut coarse = BackhaulLedger::new();
        for it in 1..=4 {
            meter_soft(&mut coarse, it, &[link(0, 1)], 1, 3);
        }
        assert_eq!(2 * coarse.total(), ledger.total());

        let mut empty = BackhaulLedger::new();
        assert_eq!(meter_soft(&mut empty, 1, &[], 100, 6), 0);
        assert_eq!(empty.total(), 0);
    }

    #[test]
    fn hard_metering() {
        let mut ledger = BackhaulLedger::new();
        assert_eq!(
            meter_hard(&mut ledger, 1, &[link(0, 1)], &[3], None, 2).unwrap(),
            2
        );

        let first = [0, 1, 2, 3, 0, 1, 2, 3, 0, 1];
        let mut ledger = BackhaulLedger::new();
        meter_hard(&mut ledger, 1, &[link(0, 1)], &first, None, 2).unwrap();
        assert_eq!(
            meter_hard(&mut ledger, 2, &[link(0, 1)], &first, Some(&first), 2).unwrap(),
            0
        );
        let mut flipped = first;
        flipped[0] = 3;
        flipped[4] = 2;
        flipped[9] = 0;
        assert_eq!(
            meter_hard(&mut ledger, 3, &[link(0, 1)], &flipped, Some(&first), 2).unwrap(),
            6
        );
        assert_eq!(ledger.per_iteration(3), vec![20, 0, 6]);
        assert_eq!(ledger.cumulative(3), vec![20, 20, 26]);
    }

    #[test]
    fn rmp_metering() {
        let to_su = Link::new(Node::Bs(0), Node::SelectionUnit);
        let mut ledger = BackhaulLedger::new();
        let lists = vec![singleton(1)];
        assert_eq!(
            meter_rmp_lists(&mut ledger, 1, to_su, &lists, None, 2).unwrap(),
            2
        );
        assert_eq!(meter_rmp_reports(&mut ledger, 1, to_su, &[1]), 0);

        let pair = build_candidate_list(
            &SymbolPosterior {
                probs: vec![0.5, 0.4, 0.05, 0.05],
            },
            0.2,
            4,
        )
        .unwrap();
        assert_eq!(
            meter_rmp_lists(&mut ledger, 2, to_su, std::slice::from_ref(&pair), None, 2).unwrap(),
            4
        );
        assert_eq!(
            meter_rmp_lists(&mut ledger, 3, to_su, &lists, Some(&lists), 2).unwrap(),
            0
        );
        assert_eq!(
            meter_rmp_reports(&mut ledger, 3, to_su, &[4, 3, 16, 17]),
            2 + 2 + 4 + 5
        );
        assert_eq!(meter_rmp_partials(&mut ledger, 4, to_su, &[4], 6), 48);
        assert!(!MessageKind::RmpPartial.is_reduced());
    }

    #[test]
    fn index_widths() {
        assert_eq!(
            (0..=9).map(index_bits).collect::<Vec<_>>(),
            vec![0, 0, 1, 2, 2, 3, 3, 3, 3, 4]
        );
    }
}
