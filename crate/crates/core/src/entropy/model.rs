//! Frequency tables and context-selected probability models.

use std::hash::{Hash, Hasher};

use super::range_coder::MAX_TOTAL;
use crate::error::{Error, Result};

pub const ALPHABET: usize = 256;
/// Count added to a symbol each time it is seen.
pub const INCREMENT: u32 = 32;
/// All counts are halved once the total exceeds this.
pub const RESCALE_LIMIT: u32 = 1 << 16;

/// Counts over the 256-symbol alphabet with a Fenwick tree for cumulative
/// lookups. Every count stays ≥ 1, so no symbol ever has zero probability.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyTable {
    freq: [u32; ALPHABET],
    tree: [u32; ALPHABET + 1],
    total: u32,
    increment: u32,
}

impl Default for FrequencyTable {
    fn default() -> Self {
        Self::adaptive()
    }
}

impl Hash for FrequencyTable {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.freq.hash(state);
        self.total.hash(state);
        self.increment.hash(state);
    }
}

impl FrequencyTable {
    /// All counts 1, +32 per observation, halving above 2^16.
    pub fn adaptive() -> Self {
        Self::build([1; ALPHABET], INCREMENT)
    }

    /// A non-adapting table. Counts must be ≥ 1 with a total ≤ 2^16.
    pub fn fixed(counts: [u32; ALPHABET]) -> Result<Self> {
        let total: u64 = counts.iter().map(|&c| c as u64).sum();
        if counts.contains(&0) || total > MAX_TOTAL as u64 {
            return Err(Error::InvalidArgument(format!(
                "static counts must be >= 1 with total <= {MAX_TOTAL} (total {total})"
            )));
        }
        Ok(Self::build(counts, 0))
    }

    /// Static table approximating the distribution `p` (length 256).
    pub fn from_probabilities(p: &[f64]) -> Result<Self> {
        if p.len() != ALPHABET || p.iter().any(|&x| !(x >= 0.0)) {
            return Err(Error::InvalidArgument("need 256 non-negative probabilities".into()));
        }
        let sum: f64 = p.iter().sum();
        let budget = (MAX_TOTAL - ALPHABET as u32) as f64;
        let mut counts = [0u32; ALPHABET];
        for (c, &x) in counts.iter_mut().zip(p) {
            *c = 1 + (x / sum * budget).floor() as u32;
        }
        Self::fixed(counts)
    }

    fn build(freq: [u32; ALPHABET], increment: u32) -> Self {
        let mut t = Self {
            freq,
            tree: [0; ALPHABET + 1],
            total: 0,
            increment,
        };
        t.rebuild();
        t
    }

    fn rebuild(&mut self) {
        self.tree = [0; ALPHABET + 1];
        for i in 1..=ALPHABET {
            self.tree[i] += self.freq[i - 1];
            let parent = i + (i & i.wrapping_neg());
            if parent <= ALPHABET {
                self.tree[parent] += self.tree[i];
            }
        }
        self.total = self.freq.iter().sum();
    }

    #[inline]
    pub fn total(&self) -> u32 {
        self.total
    }

    #[inline]
    pub fn count(&self, symbol: u8) -> u32 {
        self.freq[symbol as usize]
    }

    pub fn probability(&self, symbol: u8) -> f64 {
        self.count(symbol) as f64 / self.total as f64
    }

    /// Cost in bits of coding `symbol` in the current state.
    pub fn cost(&self, symbol: u8) -> f64 {
        -self.probability(symbol).log2()
    }

    /// `(cumulative count below symbol, count of symbol)`.
    #[inline]
    pub fn interval(&self, symbol: u8) -> (u32, u32) {
        let mut i = symbol as usize;
        let mut cum = 0;
        while i > 0 {
            cum += self.tree[i];
            i &= i - 1;
        }
        (cum, self.freq[symbol as usize])
    }

    /// Symbol whose interval contains `target` (< total).
    #[inline]
    pub fn find(&self, mut target: u32) -> u8 {
        let mut pos = 0usize;
        let mut step = ALPHABET;
        while step > 0 {
            let next = pos + step;
            if next <= ALPHABET && self.tree[next] <= target {
                target -= self.tree[next];
                pos = next;
            }
            step >>= 1;
        }
        pos as u8
    }

    #[inline]
    pub fn update(&mut self, symbol: u8) {
        if self.increment == 0 {
            return;
        }
        self.freq[symbol as usize] += self.increment;
        self.total += self.increment;
        if self.total > RESCALE_LIMIT {
            for f in self.freq.iter_mut() {
                *f = (*f).div_ceil(2);
            }
            self.rebuild();
        } else {
            let mut i = symbol as usize + 1;
            while i <= ALPHABET {
                self.tree[i] += self.increment;
                i += i & i.wrapping_neg();
            }
        }
    }
}

/// How the coding history selects a table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ContextRule {
    /// One table for every position.
    Order0,
    /// Table chosen by the previous symbol (zero at the start).
    Order1,
}

impl ContextRule {
    pub fn contexts(self) -> usize {
        match self {
            ContextRule::Order0 => 1,
            ContextRule::Order1 => ALPHABET,
        }
    }

    #[inline]
    pub fn context(self, history: &[u8]) -> usize {
        match self {
            ContextRule::Order0 => 0,
            ContextRule::Order1 => history.last().map_or(0, |&s| s as usize),
        }
    }
}

/// Per-context frequency tables plus the rule picking among them.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProbabilityModel {
    rule: ContextRule,
    tables: Vec<FrequencyTable>,
}

impl ProbabilityModel {
    pub fn adaptive(rule: ContextRule) -> Self {
        Self {
            rule,
            tables: vec![FrequencyTable::adaptive(); rule.contexts()],
        }
    }

    /// Order-0 model that never adapts.
    pub fn fixed(table: FrequencyTable) -> Self {
        Self {
            rule: ContextRule::Order0,
            tables: vec![table],
        }
    }

    pub fn uniform() -> Self {
        Self::fixed(FrequencyTable::fixed([256; ALPHABET]).expect("uniform counts are valid"))
    }

    #[inline]
    pub fn table_for(&mut self, history: &[u8]) -> &mut FrequencyTable {
        let ctx = self.rule.context(history);
        &mut self.tables[ctx]
    }

    pub fn tables(&self) -> &[FrequencyTable] {
        &self.tables
    }

    /// Hash of the full model state; equal on both sides of a coding session.
    pub fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.hash(&mut h);
        h.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_cum(t: &FrequencyTable, s: u8) -> u32 {
        (0..s).map(|i| t.count(i)).sum()
    }

    #[test]
    fn fenwick_matches_linear_scan() {
        let mut t = FrequencyTable::adaptive();
        let mut x = 12345u32;
        for _ in 0..20_000 {
            x = x.wrapping_mul(1_103_515_245).wrapping_add(12345);
            let s = ((x >> 16) % 7) as u8 * 30;
            t.update(s);
            assert!(t.total() <= RESCALE_LIMIT);
        }
        let mut sum = 0;
        for s in 0..=255u8 {
            let (cum, f) = t.interval(s);
            assert_eq!(cum, linear_cum(&t, s));
            assert!(f >= 1);
            assert_eq!(t.find(cum), s);
            assert_eq!(t.find(cum + f - 1), s);
            sum += f;
        }
        assert_eq!(sum, t.total());
    }

    #[test]
    fn rescale_keeps_every_symbol_codable() {
        let mut t = FrequencyTable::adaptive();
        for _ in 0..100_000 {
            t.update(0);
        }
        assert!(t.total() <= RESCALE_LIMIT);
        assert!((1..=255u8).all(|s| t.count(s) >= 1));
        assert!(t.probability(0) > 0.99);
    }

    #[test]
    fn fixed_rejects_bad_counts() {
        assert!(FrequencyTable::fixed([0; 256]).is_err());
        assert!(FrequencyTable::fixed([300; 256]).is_err());
        let mut t = FrequencyTable::fixed([256; 256]).unwrap();
        t.update(3);
        assert_eq!(t.count(3), 256);
    }

    #[test]
    fn order1_context() {
        assert_eq!(ContextRule::Order1.context(&[]), 0);
        assert_eq!(ContextRule::Order1.context(&[4, 9]), 9);
        assert_eq!(ContextRule::Order0.context(&[4, 9]), 0);
    }
}
