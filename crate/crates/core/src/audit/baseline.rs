//! Privacy-loss accounting for the windowed baseline.
//!
//! An input at in-round position `s` has spent `eps_cur / k` for every tree
//! node containing it that has been released by the observation time, plus
//! `eps_past` for every later round that has started, since each such round
//! releases a noisy prefix including it.
//!
//! Prefix releases only ever use left children: the level-`ℓ` node with
//! 0-based block index `m` is released iff `m` is even and it ends inside the
//! window, and it first appears in the release at its own end position.
//! The loss depends on the position only through `s`, so positions beyond
//! the first round add nothing new.

use crate::mechanisms::BaselineParams;

use super::curve::PrivacyLossCurve;
use super::expiration::AuditRow;

/// Budget units spent at a given elapsed time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BaselineLossTerms {
    pub position: u64,
    pub tree_nodes: u32,
    pub past_rounds: u64,
}

impl BaselineLossTerms {
    pub fn loss(&self, params: &BaselineParams) -> f64 {
        self.tree_nodes as f64 * (params.eps_cur() / params.tree_depth() as f64)
            + self.past_rounds as f64 * params.eps_past()
    }
}

/// Precomputed node end positions for every in-round position.
#[derive(Debug, Clone)]
pub struct BaselineAudit {
    params: BaselineParams,
    positions: u64,
    /// `ends[s-1]`: ascending in-round end positions of released nodes containing `s`.
    ends: Vec<Vec<u64>>,
    /// Argmax of node count over positions `1..=s` (prefix) and `s..=S` (suffix).
    prefix_best: Vec<u64>,
    suffix_best: Vec<u64>,
}

impl BaselineAudit {
    /// Audits positions `t ≤ horizon` (only the first `min(W, horizon)` matter).
    pub fn new(params: BaselineParams, horizon: u64) -> Self {
        let w = params.window();
        let positions = w.min(horizon);
        let ends: Vec<Vec<u64>> = (1..=positions)
            .map(|s| {
                (0..params.tree_depth())
                    .filter(|&level| ((s - 1) >> level) & 1 == 0)
                    .map(|level| (((s - 1) >> level) + 1) << level)
                    .filter(|&e| e <= w)
                    .collect()
            })
            .collect();
        let count = |s: u64| ends[(s - 1) as usize].len();
        let mut prefix_best = Vec::with_capacity(positions as usize);
        for s in 1..=positions {
            let prev = prefix_best.last().copied();
            prefix_best.push(match prev {
                Some(p) if count(p) >= count(s) => p,
                _ => s,
            });
        }
        let mut suffix_best = vec![0; positions as usize];
        for s in (1..=positions).rev() {
            let next = suffix_best.get(s as usize).copied();
            suffix_best[(s - 1) as usize] = match next {
                Some(n) if count(n) > count(s) => n,
                _ => s,
            };
        }
        Self {
            params,
            positions,
            ends,
            prefix_best,
            suffix_best,
        }
    }

    pub fn params(&self) -> &BaselineParams {
        &self.params
    }

    /// Units spent by the input at in-round position `s` after `d` steps.
    pub fn terms_at(&self, s: u64, d: u64) -> BaselineLossTerms {
        let ends = &self.ends[(s - 1) as usize];
        let reach = s + d;
        BaselineLossTerms {
            position: s,
            tree_nodes: ends.partition_point(|&e| e <= reach) as u32,
            past_rounds: (s + d - 1) / self.params.window(),
        }
    }

    fn full_terms(&self, s: u64, past_rounds: u64) -> BaselineLossTerms {
        BaselineLossTerms {
            position: s,
            tree_nodes: self.ends[(s - 1) as usize].len() as u32,
            past_rounds,
        }
    }

    /// Worst-case terms at elapsed time `d`, or `None` for an empty horizon.
    pub fn worst_terms(&self, d: u64) -> Option<BaselineLossTerms> {
        if self.positions == 0 {
            return None;
        }
        let w = self.params.window();
        let better = |a: BaselineLossTerms, b: BaselineLossTerms| {
            if b.loss(&self.params) > a.loss(&self.params) {
                b
            } else {
                a
            }
        };
        if d < w {
            return (1..=self.positions)
                .map(|s| self.terms_at(s, d))
                .reduce(better);
        }
        // Every released node has ended. Past rounds are base or base + 1,
        // switching at s = W − rem.
        let base = (d - 1) / w;
        let rem = (d - 1) % w;
        let switch = w - rem;
        let mut best: Option<BaselineLossTerms> = None;
        if switch > 1 {
            let s = self.prefix_best[(switch - 1).min(self.positions) as usize - 1];
            best = Some(self.full_terms(s, base));
        }
        if switch <= self.positions {
            let s = self.suffix_best[(switch - 1) as usize];
            let t = self.full_terms(s, base + 1);
            best = Some(best.map_or(t, |b| better(b, t)));
        }
        best
    }

    pub fn loss(&self, d: u64) -> f64 {
        self.worst_terms(d).map_or(0.0, |t| t.loss(&self.params))
    }

    pub fn curve(&self, d_max: u64) -> PrivacyLossCurve {
        PrivacyLossCurve::from_losses((0..=d_max).map(|d| (d, self.loss(d))))
    }
}

/// Worst-case loss of the baseline at elapsed time `d` over input positions
/// `t ≤ horizon`.
pub fn empirical_loss_baseline(d: u64, params: &BaselineParams, horizon: u64) -> f64 {
    BaselineAudit::new(*params, horizon).loss(d)
}

/// Audit rows for `d = 0..=d_max`; there is no theoretical column.
pub fn audit_baseline(params: &BaselineParams, d_max: u64, horizon: u64) -> Vec<AuditRow> {
    BaselineAudit::new(*params, horizon)
        .curve(d_max)
        .points()
        .iter()
        .map(|p| AuditRow {
            d: p.d,
            loss_empirical: p.loss,
            loss_envelope: p.envelope,
            loss_theoretical: None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    use std::collections::BTreeSet;

    /// Walks every release from `t` to `t + d` and collects the noise terms
    /// that depend on the input at `t`.
    fn brute_force(d: u64, params: &BaselineParams, horizon: u64) -> f64 {
        let k = params.tree_depth();
        let mut best = 0.0f64;
        for t in 1..=horizon {
            let (r, s) = params.locate(t);
            let mut nodes = BTreeSet::new();
            let mut rounds = BTreeSet::new();
            for now in t..=t + d {
                let (r_now, s_now) = params.locate(now);
                if r_now > r {
                    rounds.insert(r_now);
                    continue;
                }
                // Binary decomposition of [1, s_now], highest block first.
                let mut start = 0u64;
                for level in (0..k).rev() {
                    if s_now >> level & 1 == 1 {
                        let node = (start + 1, start + (1 << level));
                        if node.0 <= s && s <= node.1 {
                            nodes.insert(node);
                        }
                        start += 1 << level;
                    }
                }
            }
            let loss = nodes.len() as f64 * (params.eps_cur() / k as f64)
                + rounds.len() as f64 * params.eps_past();
            best = best.max(loss);
        }
        best
    }

    #[test]
    fn matches_brute_force_on_small_windows() {
        for w in [1u64, 2, 3, 4, 5, 7, 8, 13] {
            let p = BaselineParams::new(w, 1.3, 0.17).unwrap();
            for horizon in [1, w, 3 * w + 1] {
                let audit = BaselineAudit::new(p, horizon);
                for d in 0..6 * w {
                    let got = audit.loss(d);
                    let want = brute_force(d, &p, horizon);
                    assert!(
                        (got - want).abs() <= 1e-12,
                        "w {w} h {horizon} d {d}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn saturates_after_window() {
        let p = BaselineParams::new(4, 1.0, 0.1).unwrap();
        let audit = BaselineAudit::new(p, 4);
        // k = 3; position 1 lies in [1,1], [1,2], [1,4], all released.
        assert_eq!(audit.terms_at(1, 4).tree_nodes, 3);
        assert_eq!(audit.terms_at(1, 1).tree_nodes, 2);
        for d in 4..40 {
            let worst = audit.worst_terms(d).unwrap();
            assert!(worst.tree_nodes <= 3);
            assert!(audit.loss(d) >= 1.0 + 0.1 * (d / 4) as f64 - 1e-12);
        }
    }

    #[test]
    fn zero_elapsed_time() {
        let p = BaselineParams::new(4, 1.0, 0.1).unwrap();
        // Each release adds exactly one new node, so d = 0 spends one node.
        let audit = BaselineAudit::new(p, 4);
        assert_eq!(audit.worst_terms(0).unwrap().tree_nodes, 1);
        assert!((audit.loss(0) - 1.0 / 3.0).abs() < 1e-15);
        // Position 4 is only ever covered by the released node [1,4].
        assert_eq!(audit.terms_at(4, 100).tree_nodes, 1);
        assert!((empirical_loss_baseline(0, &p, 1) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn monotone_in_d() {
        let p = BaselineParams::new(31, 0.5678, 0.05678).unwrap();
        let audit = BaselineAudit::new(p, 1000);
        let mut prev = 0.0;
        for d in 0..500 {
            let l = audit.loss(d);
            assert!(l >= prev);
            prev = l;
        }
    }
}
