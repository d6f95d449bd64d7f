//! Brute-force single-slot outcome distributions.
//!
//! The NOMA enumerator walks the SIC levels in decoding order and, at every
//! level, iterates over every subset of the not-yet-placed active users that
//! could sit there. Once SIC stops (collision, or an undecodable lone signal)
//! the placement of the leftover users no longer matters and their probability
//! mass is summed in one factor. Nothing here relies on the users being
//! exchangeable, which is what makes it a useful cross-check of the closed
//! forms in [`crate::markov`].

use std::collections::{BTreeMap, HashMap};

use crate::{AoiError, Real, Result};

/// Users considered by the enumerators (tagged user is index 0).
pub const MAX_REMAINING: usize = 12;
pub const MAX_LEVELS: usize = 6;

/// Distribution of one slot's outcome seen from a transient state with
/// `remaining` contenders, the tagged user among them.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotOutcomeDistribution<T> {
    /// `(non-tagged successes, tagged success) -> probability`
    mass: BTreeMap<(usize, bool), T>,
    remaining: usize,
    levels: usize,
    ptx: T,
    level_success: Vec<T>,
}

impl<T: Real> SlotOutcomeDistribution<T> {
    pub fn mass(&self, non_tagged: usize, tagged: bool) -> T {
        self.mass.get(&(non_tagged, tagged)).copied().unwrap_or_else(T::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, bool), &T)> {
        self.mass.iter()
    }

    pub fn total(&self) -> T {
        self.mass.values().fold(T::zero(), |acc, &p| acc + p)
    }

    pub fn remaining(&self) -> usize {
        self.remaining
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn ptx(&self) -> T {
        self.ptx
    }

    pub fn level_success(&self) -> &[T] {
        &self.level_success
    }

    /// Transition `s_j -> s_{j+i}`: `i` other users decoded, the tagged user not.
    pub fn advance(&self, i: usize) -> T {
        self.mass(i, false)
    }

    /// Transition `s_j -> s_M`: the tagged user decoded, whatever else happened.
    pub fn absorb(&self) -> T {
        self.mass.iter().filter(|((_, tagged), _)| *tagged).fold(T::zero(), |acc, (_, &p)| acc + p)
    }
}

/// Which users the receiver decodes in one NOMA slot.
///
/// `transmissions` holds `(user, level, decodable)` with zero-based levels.
/// Levels are scanned strongest first: an empty level is skipped, a lone
/// decodable signal is decoded and cancelled, and anything else (two or more
/// signals, or a lone undecodable one) ends SIC for every later level.
pub fn sic_decoded(levels: usize, transmissions: &[(usize, usize, bool)]) -> Vec<usize> {
    let mut decoded = Vec::new();
    for level in 0..levels {
        let mut occupants = transmissions.iter().filter(|t| t.1 == level);
        match (occupants.next(), occupants.next()) {
            (None, _) => continue,
            (Some(&(user, _, true)), None) => decoded.push(user),
            _ => break,
        }
    }
    decoded
}

/// Per-level quantities driving the enumeration.
struct LevelWeights<T> {
    /// probability a user shows up at level k
    arrive: Vec<T>,
    /// probability a lone signal at level k is decodable
    decode: Vec<T>,
    /// probability a user shows up nowhere
    silent: T,
}

struct Enumerator<T> {
    w: LevelWeights<T>,
    /// `silent + Σ_{κ > k} arrive[κ]`, the mass of "anywhere after level k"
    after: Vec<T>,
    memo: HashMap<(usize, u32), Vec<T>>,
    width: usize,
}

impl<T: Real> Enumerator<T> {
    fn new(w: LevelWeights<T>, remaining: usize) -> Self {
        let levels = w.arrive.len();
        let mut after = vec![w.silent; levels];
        for k in (0..levels.saturating_sub(1)).rev() {
            after[k] = after[k + 1] + w.arrive[k + 1];
        }
        Enumerator { w, after, memo: HashMap::new(), width: remaining }
    }

    fn idx(&self, successes: usize, tagged: bool) -> usize {
        successes * 2 + usize::from(tagged)
    }

    /// Outcome table for the users in `unplaced`, who all still have to pick a
    /// level `>= level` (or stay silent). Entry `idx(i, t)` is the probability
    /// of `i` further non-tagged decodes and tagged flag `t`.
    fn solve(&mut self, level: usize, unplaced: u32) -> Vec<T> {
        if let Some(hit) = self.memo.get(&(level, unplaced)) {
            return hit.clone();
        }
        let mut table = vec![T::zero(); (self.width + 1) * 2];
        let levels = self.w.arrive.len();
        if level == levels {
            table[0] = self.w.silent.powi(unplaced.count_ones() as i32);
            self.memo.insert((level, unplaced), table.clone());
            return table;
        }
        let arrive = self.w.arrive[level];
        let decode = self.w.decode[level];
        let after = self.after[level];
        let mut subset = unplaced;
        loop {
            let here = subset.count_ones() as i32;
            let left = unplaced & !subset;
            let weight = arrive.powi(here);
            match here {
                0 => {
                    let child = self.solve(level + 1, left);
                    for (slot, &p) in table.iter_mut().zip(&child) {
                        *slot = *slot + weight * p;
                    }
                }
                1 => {
                    let user = subset.trailing_zeros() as usize;
                    let child = self.solve(level + 1, left);
                    for successes in 0..=self.width {
                        for tagged in [false, true] {
                            let p = child[self.idx(successes, tagged)];
                            if p == T::zero() {
                                continue;
                            }
                            let (s2, t2) = if user == 0 { (successes, true) } else { (successes + 1, tagged) };
                            let at = self.idx(s2, t2);
                            table[at] = table[at] + weight * decode * p;
                        }
                    }
                    // undecodable lone signal stops SIC here
                    table[0] = table[0] + weight * (T::one() - decode) * after.powi(left.count_ones() as i32);
                }
                _ => {
                    table[0] = table[0] + weight * after.powi(left.count_ones() as i32);
                }
            }
            if subset == 0 {
                break;
            }
            subset = (subset - 1) & unplaced;
        }
        self.memo.insert((level, unplaced), table.clone());
        table
    }
}

fn check_noma_size(remaining: usize, levels: usize) -> Result<()> {
    if remaining == 0 || levels == 0 || remaining > MAX_REMAINING || levels > MAX_LEVELS {
        return Err(AoiError::OracleTooLarge { remaining, levels });
    }
    Ok(())
}

fn run<T: Real>(remaining: usize, ptx: T, level_success: &[T], w: LevelWeights<T>) -> SlotOutcomeDistribution<T> {
    let levels = w.arrive.len();
    let mut e = Enumerator::new(w, remaining);
    let all = if remaining == 32 { u32::MAX } else { (1u32 << remaining) - 1 };
    let table = e.solve(0, all);
    let mut mass = BTreeMap::new();
    for successes in 0..=remaining {
        for tagged in [false, true] {
            let p = table[successes * 2 + usize::from(tagged)];
            if p != T::zero() {
                mass.insert((successes, tagged), p);
            }
        }
    }
    SlotOutcomeDistribution { mass, remaining, levels, ptx, level_success: level_success.to_vec() }
}

fn check_probability<T: Real>(name: &str, p: T) -> Result<()> {
    if p >= T::zero() && p <= T::one() {
        Ok(())
    } else {
        Err(AoiError::InvalidConfig(format!("{name} = {p} is not a probability")))
    }
}

/// Enumerates one NOMA slot. Every remaining user transmits with probability
/// `ptx` at a uniformly drawn level; a lone signal at level `k` is decoded with
/// probability `level_success[k]` and otherwise stops SIC (pass all ones for
/// the collision-only model).
pub fn enumerate_noma_slot<T: Real>(
    remaining: usize,
    levels: usize,
    ptx: T,
    level_success: &[T],
) -> Result<SlotOutcomeDistribution<T>> {
    check_noma_size(remaining, levels)?;
    check_probability("ptx", ptx)?;
    if level_success.len() != levels {
        return Err(AoiError::InvalidConfig(format!(
            "need {levels} level success probabilities, got {}",
            level_success.len()
        )));
    }
    for &p in level_success {
        check_probability("level success probability", p)?;
    }
    let share = ptx / T::count(levels);
    let w = LevelWeights { arrive: vec![share; levels], decode: level_success.to_vec(), silent: T::one() - ptx };
    Ok(run(remaining, ptx, level_success, w))
}

/// Same slot when an infeasible user stays silent instead: a user shows up at
/// level `k` only with probability `ptx / K * feasibility[k]`, and anyone who
/// shows up is decodable when alone.
pub fn enumerate_noma_slot_abstain<T: Real>(
    remaining: usize,
    levels: usize,
    ptx: T,
    feasibility: &[T],
) -> Result<SlotOutcomeDistribution<T>> {
    check_noma_size(remaining, levels)?;
    check_probability("ptx", ptx)?;
    if feasibility.len() != levels {
        return Err(AoiError::InvalidConfig(format!(
            "need {levels} feasibility probabilities, got {}",
            feasibility.len()
        )));
    }
    for &p in feasibility {
        check_probability("feasibility probability", p)?;
    }
    let share = ptx / T::count(levels);
    let arrive: Vec<T> = feasibility.iter().map(|&f| share * f).collect();
    let silent = arrive.iter().fold(T::one(), |acc, &a| acc - a);
    let w = LevelWeights { arrive, decode: vec![T::one(); levels], silent };
    Ok(run(remaining, ptx, feasibility, w))
}

/// One OMA slot: a success needs exactly one transmitter and no outage
/// (`success_prob`); the lone transmitter is the tagged user with probability
/// `1 / remaining`.
pub fn enumerate_oma_slot<T: Real>(remaining: usize, ptx: T, success_prob: T) -> Result<SlotOutcomeDistribution<T>> {
    if remaining == 0 {
        return Err(AoiError::InvalidConfig("at least the tagged user must remain".into()));
    }
    check_probability("ptx", ptx)?;
    check_probability("success probability", success_prob)?;
    let r = T::count(remaining);
    let exactly_one = r * ptx * (T::one() - ptx).powi(remaining as i32 - 1);
    let delivered = exactly_one * success_prob;
    let tagged = delivered / r;
    let other = delivered - tagged;
    let mut mass = BTreeMap::new();
    mass.insert((0, false), T::one() - delivered);
    if other > T::zero() {
        mass.insert((1, false), other);
    }
    if tagged > T::zero() {
        mass.insert((0, true), tagged);
    }
    Ok(SlotOutcomeDistribution { mass, remaining, levels: 1, ptx, level_success: vec![success_prob] })
}
