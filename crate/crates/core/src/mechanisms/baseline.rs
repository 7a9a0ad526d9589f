use crate::fixed::Fixed;
use crate::noise::{LaplaceScale, NoiseSlot, NoiseSource};

use super::{check_input, ContinualCounter, MechanismError};

/// Windowed baseline: the stream is cut into rounds of `window` steps.
/// Inside a round a standard binary mechanism with budget `eps_cur` releases
/// the in-round prefix; from round 2 on, the release is offset by the true
/// prefix of all earlier rounds plus one `Lap(1/eps_past)` draw per round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineParams {
    window: u64,
    eps_cur: f64,
    eps_past: f64,
}

impl BaselineParams {
    pub fn new(window: u64, eps_cur: f64, eps_past: f64) -> Result<Self, MechanismError> {
        if window == 0 || window > (1 << 40) {
            return Err(MechanismError::InvalidParams(format!(
                "window must be in [1, 2^40], got {window}"
            )));
        }
        let params = Self {
            window,
            eps_cur,
            eps_past,
        };
        for (name, eps) in [("eps_cur", eps_cur), ("eps_past", eps_past)] {
            if !(eps.is_finite() && eps > 0.0) {
                return Err(MechanismError::InvalidParams(format!(
                    "{name} must be positive and finite, got {eps}"
                )));
            }
        }
        if LaplaceScale::new(params.node_scale_value()).is_err()
            || LaplaceScale::new(1.0 / eps_past).is_err()
        {
            return Err(MechanismError::InvalidParams(
                "privacy parameters too small for the noise range".into(),
            ));
        }
        Ok(params)
    }

    /// Derives `eps_past = ratio · eps_cur`.
    pub fn with_ratio(window: u64, eps_cur: f64, ratio: f64) -> Result<Self, MechanismError> {
        Self::new(window, eps_cur, ratio * eps_cur)
    }

    pub fn window(&self) -> u64 {
        self.window
    }

    pub fn eps_cur(&self) -> f64 {
        self.eps_cur
    }

    pub fn eps_past(&self) -> f64 {
        self.eps_past
    }

    pub fn ratio(&self) -> f64 {
        self.eps_past / self.eps_cur
    }

    /// Tree depth `k = ⌈log₂(W + 1)⌉`, the number of nodes covering any position.
    pub fn tree_depth(&self) -> u32 {
        64 - self.window.leading_zeros()
    }

    fn node_scale_value(&self) -> f64 {
        self.tree_depth() as f64 / self.eps_cur
    }

    /// Per-node noise scale `k / eps_cur`.
    pub fn node_scale(&self) -> LaplaceScale {
        LaplaceScale::new(self.node_scale_value()).expect("validated at construction")
    }

    pub fn past_scale(&self) -> LaplaceScale {
        LaplaceScale::new(1.0 / self.eps_past).expect("validated at construction")
    }

    /// Round (1-based) and in-round position (1-based) of step `t ≥ 1`.
    pub fn locate(&self, t: u64) -> (u64, u64) {
        let round = (t - 1) / self.window + 1;
        (round, t - (round - 1) * self.window)
    }
}

#[derive(Debug, Clone)]
pub struct BaselineMechanism<N> {
    params: BaselineParams,
    noise: N,
    t: u64,
    round: u64,
    position: u64,
    past_sum: Fixed,
    past_noise: Fixed,
    round_sum: Fixed,
    /// Nodes of the binary decomposition of `[1, position]`, lowest level last.
    nodes: Vec<(u32, Fixed)>,
    tree_total: Fixed,
}

impl<N: NoiseSource> BaselineMechanism<N> {
    pub fn new(params: BaselineParams, noise: N) -> Self {
        Self {
            params,
            noise,
            t: 0,
            round: 1,
            position: 0,
            past_sum: Fixed::ZERO,
            past_noise: Fixed::ZERO,
            round_sum: Fixed::ZERO,
            nodes: Vec::new(),
            tree_total: Fixed::ZERO,
        }
    }

    pub fn params(&self) -> &BaselineParams {
        &self.params
    }

    /// Number of tree noise terms in the current release.
    pub fn tree_terms(&self) -> usize {
        self.nodes.len()
    }

    pub fn noise_source(&self) -> &N {
        &self.noise
    }

    fn start_round(&mut self) {
        self.round += 1;
        self.position = 0;
        self.past_sum += self.round_sum;
        self.round_sum = Fixed::ZERO;
        self.nodes.clear();
        self.tree_total = Fixed::ZERO;
        self.past_noise = self
            .noise
            .noise(NoiseSlot::RoundPast(self.round), self.params.past_scale());
    }

    // Going from s−1 to s clears the trailing one-bits of s−1 and sets bit
    // tz(s): the nodes below that level merge into one new node.
    fn advance_tree(&mut self) {
        let s = self.position;
        let level = s.trailing_zeros();
        while let Some(&(l, z)) = self.nodes.last() {
            if l >= level {
                break;
            }
            self.tree_total -= z;
            self.nodes.pop();
        }
        let z = self.noise.noise(
            NoiseSlot::RoundNode {
                round: self.round,
                level,
                index: (s - 1) >> level,
            },
            self.params.node_scale(),
        );
        self.tree_total += z;
        self.nodes.push((level, z));
    }
}

impl<N: NoiseSource> ContinualCounter for BaselineMechanism<N> {
    fn step(&mut self, x: f64) -> Result<f64, MechanismError> {
        let x = check_input(self.t + 1, x)?;
        self.t += 1;
        if self.position == self.params.window {
            self.start_round();
        }
        self.position += 1;
        self.round_sum += x;
        self.advance_tree();
        let mut out = self.round_sum + self.tree_total;
        if self.round > 1 {
            out += self.past_sum + self.past_noise;
        }
        Ok(out.to_f64())
    }

    fn time(&self) -> u64 {
        self.t
    }
}
