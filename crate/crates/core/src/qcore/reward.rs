/// Running team-reward statistics (Welford) used to standardize rewards at
/// training time. Every agent keeps its own copy; since all agents observe
/// the same team reward stream the copies agree exactly.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RewardStandardizer {
    pub enabled: bool,
    count: u64,
    mean: f64,
    m2: f64,
}

const STD_FLOOR: f64 = 1e-6;

impl RewardStandardizer {
    pub fn new(enabled: bool) -> Self {
        RewardStandardizer {
            enabled,
            ..Default::default()
        }
    }

    pub fn observe(&mut self, reward: f64) {
        self.count += 1;
        let delta = reward - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (reward - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Population variance of the rewards seen so far.
    pub fn variance(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.m2 / self.count as f64
        }
    }

    /// `(r - mean) / max(std, 1e-6)` when enabled and at least one reward
    /// was observed, `r` otherwise.
    pub fn standardize(&self, reward: f64) -> f64 {
        if !self.enabled || self.count == 0 {
            return reward;
        }
        (reward - self.mean) / self.variance().sqrt().max(STD_FLOOR)
    }
}
