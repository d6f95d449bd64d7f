//! Scenario parameters, the NOMA receive-SNR ladder, transmission policies and
//! the channel feasibility primitive.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{AoiError, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Oma,
    Noma,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Oma => f.write_str("oma"),
            Scheme::Noma => f.write_str("noma"),
        }
    }
}

/// When a user's update is generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenerationModel {
    /// Every user generates a fresh update at the start of each frame.
    #[default]
    Gar,
    /// An update is generated right before the slot in which it is transmitted.
    Gaw,
}

impl fmt::Display for GenerationModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GenerationModel::Gar => f.write_str("gar"),
            GenerationModel::Gaw => f.write_str("gaw"),
        }
    }
}

/// What a NOMA user does when its chosen level is out of reach of its power
/// budget in a slot. Only the simulator and the finite-SNR oracle look at this.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InfeasibleBehavior {
    /// Stay silent for the slot.
    #[default]
    Abstain,
    /// Transmit at full power anyway; the signal cannot be decoded and stops SIC
    /// at its level.
    Jam,
}

/// Transmit power budget `P` on a linear SNR scale (noise power 1).
///
/// `Infinite` is the high-SNR sentinel: it disables every outage and
/// feasibility failure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TxPower<T> {
    Finite(T),
    Infinite,
}

impl<T: Real> TxPower<T> {
    pub fn from_db(db: T) -> Self {
        TxPower::Finite(T::lit(10.0).powf(db / T::lit(10.0)))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, TxPower::Infinite)
    }

    pub fn finite(&self) -> Option<T> {
        match *self {
            TxPower::Finite(p) => Some(p),
            TxPower::Infinite => None,
        }
    }
}

impl<T: Real> fmt::Display for TxPower<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TxPower::Finite(p) => write!(f, "{p}"),
            TxPower::Infinite => f.write_str("infinite"),
        }
    }
}

impl<T: Serialize> Serialize for TxPower<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            TxPower::Finite(p) => p.serialize(serializer),
            TxPower::Infinite => serializer.serialize_str("infinite"),
        }
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for TxPower<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw<T> {
            Value(T),
            Text(String),
        }
        match Raw::<T>::deserialize(deserializer)? {
            Raw::Value(p) => Ok(TxPower::Finite(p)),
            Raw::Text(s) if matches!(s.to_ascii_lowercase().as_str(), "infinite" | "inf") => Ok(TxPower::Infinite),
            Raw::Text(s) => {
                Err(serde::de::Error::custom(format!("tx_power must be a number or \"infinite\", got {s:?}")))
            }
        }
    }
}

/// Per-slot transmission-attempt probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxPolicy<T> {
    Fixed(T),
    /// `1 / (M - j)` with `j` users already delivered in the current frame.
    AdaptiveOma,
    /// `min{1, K / M}`, independent of the state.
    AdaptiveNoma,
}

impl<T: Real> TxPolicy<T> {
    /// The adaptive policy matching a scheme.
    pub fn adaptive_for(scheme: Scheme) -> Self {
        match scheme {
            Scheme::Oma => TxPolicy::AdaptiveOma,
            Scheme::Noma => TxPolicy::AdaptiveNoma,
        }
    }

    pub fn label(&self) -> String {
        match self {
            TxPolicy::Fixed(p) => format!("fixed({p})"),
            TxPolicy::AdaptiveOma => "adaptive-oma".to_string(),
            TxPolicy::AdaptiveNoma => "adaptive-noma".to_string(),
        }
    }
}

/// Every parameter of one grant-free scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig<T> {
    /// `M`
    pub num_users: usize,
    /// `N`
    pub slots_per_frame: usize,
    /// `T`, seconds.
    pub slot_duration: T,
    /// `K`; must be 1 for OMA.
    pub num_levels: usize,
    pub tx_power: TxPower<T>,
    /// `R`, bits per channel use.
    pub target_rate: T,
    pub scheme: Scheme,
    #[serde(default)]
    pub generation: GenerationModel,
    pub tx_policy: TxPolicy<T>,
    #[serde(default)]
    pub infeasible: InfeasibleBehavior,
}

impl<T: Real> SystemConfig<T> {
    /// OMA scenario with `T = 6`, `R = 0.5`, infinite power and the adaptive policy.
    pub fn oma(num_users: usize, slots_per_frame: usize) -> Self {
        SystemConfig {
            num_users,
            slots_per_frame,
            slot_duration: T::lit(6.0),
            num_levels: 1,
            tx_power: TxPower::Infinite,
            target_rate: T::lit(0.5),
            scheme: Scheme::Oma,
            generation: GenerationModel::Gar,
            tx_policy: TxPolicy::AdaptiveOma,
            infeasible: InfeasibleBehavior::Abstain,
        }
    }

    /// NOMA scenario with `K` levels and otherwise the same defaults as [`SystemConfig::oma`].
    pub fn noma(num_users: usize, slots_per_frame: usize, num_levels: usize) -> Self {
        SystemConfig {
            num_levels,
            scheme: Scheme::Noma,
            tx_policy: TxPolicy::AdaptiveNoma,
            ..Self::oma(num_users, slots_per_frame)
        }
    }

    pub fn with_policy(mut self, policy: TxPolicy<T>) -> Self {
        self.tx_policy = policy;
        self
    }

    pub fn with_fixed_ptx(self, ptx: T) -> Self {
        self.with_policy(TxPolicy::Fixed(ptx))
    }

    pub fn with_power(mut self, power: TxPower<T>) -> Self {
        self.tx_power = power;
        self
    }

    pub fn with_slot_duration(mut self, slot_duration: T) -> Self {
        self.slot_duration = slot_duration;
        self
    }

    pub fn with_rate(mut self, rate: T) -> Self {
        self.target_rate = rate;
        self
    }

    pub fn with_generation(mut self, generation: GenerationModel) -> Self {
        self.generation = generation;
        self
    }

    pub fn with_infeasible(mut self, infeasible: InfeasibleBehavior) -> Self {
        self.infeasible = infeasible;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(AoiError::InvalidConfig(msg));
        if self.num_users == 0 {
            return bad("num_users must be at least 1".into());
        }
        if self.slots_per_frame == 0 {
            return bad("slots_per_frame must be at least 1".into());
        }
        if !(self.slot_duration.is_finite() && self.slot_duration > T::zero()) {
            return bad(format!("slot_duration must be positive, got {}", self.slot_duration));
        }
        if self.num_levels == 0 {
            return bad("num_levels must be at least 1".into());
        }
        if self.scheme == Scheme::Oma && self.num_levels != 1 {
            return bad(format!("OMA requires num_levels = 1, got {}", self.num_levels));
        }
        if !(self.target_rate.is_finite() && self.target_rate > T::zero()) {
            return bad(format!("target_rate must be positive, got {}", self.target_rate));
        }
        if let TxPower::Finite(p) = self.tx_power {
            if !(p.is_finite() && p > T::zero()) {
                return bad(format!("tx_power must be positive or \"infinite\", got {p}"));
            }
        }
        if let TxPolicy::Fixed(p) = self.tx_policy {
            if !(p >= T::zero() && p <= T::one()) {
                return bad(format!("fixed transmission probability must lie in [0, 1], got {p}"));
            }
        }
        Ok(())
    }

    /// `ε = 2^R - 1`
    pub fn epsilon(&self) -> T {
        T::lit(2.0).powf(self.target_rate) - T::one()
    }

    /// Probability of picking any particular SNR level, `1 / K`.
    pub fn level_selection_probability(&self) -> T {
        T::one() / T::count(self.num_levels)
    }

    pub fn frame_duration(&self) -> T {
        T::count(self.slots_per_frame) * self.slot_duration
    }

    pub fn ladder(&self) -> Result<SnrLadder<T>> {
        build_snr_ladder(self.target_rate, self.num_levels)
    }

    /// Transmission probability of a remaining user when `j` users have delivered.
    pub fn ptx(&self, j: usize) -> Result<T> {
        tx_probability(self.tx_policy, j, self.num_users, self.num_levels)
    }
}

/// Receive-SNR levels `P_1 > ... > P_K`, each decodable at rate `R` while all
/// lower levels act as interference.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrLadder<T> {
    levels: Vec<T>,
    epsilon: T,
}

impl<T: Real> SnrLadder<T> {
    /// Levels in decoding order, strongest first.
    pub fn levels(&self) -> &[T] {
        &self.levels
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// `P_k` with `k` zero-based.
    pub fn level(&self, k: usize) -> T {
        self.levels[k]
    }
}

/// Builds the ladder bottom-up: `P_K = 2^R - 1`, then
/// `P_k = ε (1 + Σ_{i>k} P_i)`.
pub fn build_snr_ladder<T: Real>(rate: T, num_levels: usize) -> Result<SnrLadder<T>> {
    if num_levels == 0 {
        return Err(AoiError::InvalidConfig("the SNR ladder needs at least one level".into()));
    }
    if !(rate.is_finite() && rate > T::zero()) {
        return Err(AoiError::InvalidConfig(format!("target rate must be positive and finite, got {rate}")));
    }
    let epsilon = T::lit(2.0).powf(rate) - T::one();
    let mut levels = vec![T::zero(); num_levels];
    let mut below = T::zero();
    for k in (0..num_levels).rev() {
        levels[k] = epsilon * (T::one() + below);
        below = below + levels[k];
    }
    Ok(SnrLadder { levels, epsilon })
}

/// Transmission probability of each remaining user in state `j`.
pub fn tx_probability<T: Real>(policy: TxPolicy<T>, j: usize, num_users: usize, num_levels: usize) -> Result<T> {
    if j >= num_users {
        return Err(AoiError::StateOutOfRange { state: j, users: num_users });
    }
    let p = match policy {
        TxPolicy::Fixed(p) => p,
        TxPolicy::AdaptiveOma => T::one() / T::count(num_users - j),
        TxPolicy::AdaptiveNoma => (T::count(num_levels) / T::count(num_users)).min(T::one()),
    };
    if !(p >= T::zero() && p <= T::one()) {
        return Err(AoiError::InvalidConfig(format!("transmission probability {p} outside [0, 1]")));
    }
    Ok(p)
}

/// `Pr{|h|^2 >= P_k / P}` for a unit-mean exponential `|h|^2`, i.e. `exp(-P_k / P)`.
pub fn feasibility_probability<T: Real>(level: T, power: TxPower<T>) -> T {
    match power {
        TxPower::Infinite => T::one(),
        TxPower::Finite(p) => (-level / p).exp(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn ladder_small_cases() {
        let l = build_snr_ladder(1.0_f64, 1).unwrap();
        assert_eq!(l.levels(), &[1.0]);
        assert_eq!(l.epsilon(), 1.0);

        let l = build_snr_ladder(1.0_f64, 2).unwrap();
        assert_eq!(l.levels(), &[2.0, 1.0]);
        assert_relative_eq!((1.0 + 2.0 / (1.0 + 1.0_f64)).log2(), 1.0);

        let l = build_snr_ladder(1.0_f64, 3).unwrap();
        assert_eq!(l.levels(), &[4.0, 2.0, 1.0]);
        assert_relative_eq!((1.0 + 4.0 / (1.0 + 3.0_f64)).log2(), 1.0);

        let l = build_snr_ladder(0.5_f64, 1).unwrap();
        assert_relative_eq!(l.level(0), 0.414_213_562_373_095, epsilon = 1e-12);
    }

    #[test]
    fn ladder_generic_f32() {
        let l = build_snr_ladder(1.0_f32, 3).unwrap();
        assert_eq!(l.levels(), &[4.0_f32, 2.0, 1.0]);
    }

    #[test]
    fn ladder_rejects_bad_input() {
        assert!(build_snr_ladder(1.0_f64, 0).is_err());
        assert!(build_snr_ladder(f64::NAN, 2).is_err());
        assert!(build_snr_ladder(f64::INFINITY, 2).is_err());
        assert!(build_snr_ladder(-1.0_f64, 2).is_err());
    }

    #[test]
    fn ladder_closure_grid() {
        for &rate in &[0.25_f64, 0.5, 1.0, 2.0] {
            for k in 1..=6 {
                let ladder = build_snr_ladder(rate, k).unwrap();
                let levels = ladder.levels();
                for idx in 0..k {
                    let interference: f64 = levels[idx + 1..].iter().sum();
                    let achieved = (1.0 + levels[idx] / (1.0 + interference)).log2();
                    assert!((achieved - rate).abs() < 1e-10, "R={rate} K={k} level {idx}");
                    // closed form ε(1+ε)^{K-k}
                    let eps = ladder.epsilon();
                    let closed = eps * (1.0 + eps).powi((k - 1 - idx) as i32);
                    assert_relative_eq!(levels[idx], closed, max_relative = 1e-12);
                }
                assert!(levels.windows(2).all(|w| w[0] > w[1]));
                assert!(levels[k - 1] > 0.0);
            }
        }
    }

    #[test]
    fn tx_probability_policies() {
        assert_eq!(tx_probability(TxPolicy::<f64>::AdaptiveOma, 3, 8, 1).unwrap(), 0.2);
        assert_eq!(tx_probability(TxPolicy::<f64>::AdaptiveOma, 7, 8, 1).unwrap(), 1.0);
        for j in 0..8 {
            assert_eq!(tx_probability(TxPolicy::<f64>::AdaptiveNoma, j, 8, 4).unwrap(), 0.5);
        }
        assert_eq!(tx_probability(TxPolicy::<f64>::AdaptiveNoma, 0, 2, 4).unwrap(), 1.0);
        assert_eq!(tx_probability(TxPolicy::Fixed(0.05_f64), 5, 8, 2).unwrap(), 0.05);
        assert_eq!(
            tx_probability(TxPolicy::<f64>::AdaptiveOma, 8, 8, 1),
            Err(AoiError::StateOutOfRange { state: 8, users: 8 })
        );
    }

    #[test]
    fn feasibility_values() {
        assert_eq!(feasibility_probability(1.0_f64, TxPower::Infinite), 1.0);
        assert_relative_eq!(feasibility_probability(3.0_f64, TxPower::Finite(3.0)), (-1.0_f64).exp());
        let p = 7.0_f64;
        assert_relative_eq!(feasibility_probability(p * 2.0_f64.ln(), TxPower::Finite(p)), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn config_validation() {
        assert!(SystemConfig::<f64>::oma(8, 8).validate().is_ok());
        assert!(SystemConfig::<f64>::noma(8, 8, 4).validate().is_ok());
        let mut c = SystemConfig::<f64>::oma(8, 8);
        c.num_levels = 2;
        assert!(c.validate().is_err());
        assert!(SystemConfig::<f64>::oma(0, 8).validate().is_err());
        assert!(SystemConfig::<f64>::oma(8, 0).validate().is_err());
        assert!(SystemConfig::<f64>::oma(8, 1).with_fixed_ptx(1.5).validate().is_err());
        assert!(SystemConfig::<f64>::oma(8, 1).with_power(TxPower::Finite(0.0)).validate().is_err());
        assert!(SystemConfig::<f64>::oma(8, 1).with_slot_duration(-1.0).validate().is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = SystemConfig::<f64>::noma(8, 1, 2).with_power(TxPower::Finite(100.0)).with_fixed_ptx(0.2);
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"fixed\":0.2"));
        let back: SystemConfig<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);

        let text = r#"{"num_users":4,"slots_per_frame":2,"slot_duration":6,"num_levels":1,
            "tx_power":"infinite","target_rate":0.5,"scheme":"oma","tx_policy":"adaptive_oma"}"#;
        let cfg: SystemConfig<f64> = serde_json::from_str(text).unwrap();
        assert!(cfg.tx_power.is_infinite());
        assert_eq!(cfg.generation, GenerationModel::Gar);
        assert_eq!(cfg.infeasible, InfeasibleBehavior::Abstain);

        let bad = text.replace("\"infinite\"", "\"loud\"");
        assert!(serde_json::from_str::<SystemConfig<f64>>(&bad).is_err());
    }

    #[test]
    fn power_from_db() {
        assert_relative_eq!(TxPower::from_db(20.0_f64).finite().unwrap(), 100.0, epsilon = 1e-12);
        assert_relative_eq!(TxPower::from_db(0.0_f64).finite().unwrap(), 1.0);
    }

    proptest! {
        #[test]
        fn tx_probability_in_unit_interval(m in 1usize..200, k in 1usize..8, j_frac in 0.0f64..1.0, fixed in 0.0f64..=1.0) {
            let j = ((m as f64) * j_frac) as usize % m;
            for policy in [TxPolicy::Fixed(fixed), TxPolicy::AdaptiveOma, TxPolicy::AdaptiveNoma] {
                let p = tx_probability(policy, j, m, k).unwrap();
                prop_assert!((0.0..=1.0).contains(&p));
            }
        }

        #[test]
        fn feasibility_monotone(a in 0.01f64..10.0, b in 0.01f64..10.0, p in 0.1f64..1e4, q in 0.1f64..1e4) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(feasibility_probability(hi, TxPower::Finite(p)) <= feasibility_probability(lo, TxPower::Finite(p)));
            let (plo, phi) = if p <= q { (p, q) } else { (q, p) };
            prop_assert!(feasibility_probability(a, TxPower::Finite(plo)) <= feasibility_probability(a, TxPower::Finite(phi)));
            prop_assert!(feasibility_probability(a, TxPower::Finite(phi)) <= feasibility_probability(a, TxPower::Infinite));
        }
    }
}
