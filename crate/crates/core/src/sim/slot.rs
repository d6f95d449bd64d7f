//! Resolution of a single slot given everyone's draws.

use crate::model::{InfeasibleBehavior, SnrLadder, TxPower};

/// One user's transmission attempt in a slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Attempt {
    pub user: usize,
    /// Zero-based SNR level (always 0 for OMA).
    pub level: usize,
    /// Channel power gain `|h|^2` drawn for this slot.
    pub gain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UserFate {
    Silent,
    /// Chose a level its power budget cannot reach and stayed quiet.
    InfeasibleAbstain,
    Collided,
    /// Never reached: SIC stopped at a stronger level.
    SicBlocked,
    /// Alone but undecodable (OMA outage, or an infeasible NOMA signal sent anyway).
    Outage,
    Success,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SlotOutcome {
    /// Fate of every attempting user, in attempt order.
    pub fates: Vec<(usize, UserFate)>,
    /// Signals present at each level (abstaining users excluded).
    pub occupancy: Vec<u32>,
    /// Level at which SIC stopped, if it did.
    pub sic_stop: Option<usize>,
}

impl SlotOutcome {
    pub fn successes(&self) -> impl Iterator<Item = usize> + '_ {
        self.fates.iter().filter(|(_, f)| *f == UserFate::Success).map(|(u, _)| *u)
    }

    fn clear(&mut self, levels: usize) {
        self.fates.clear();
        self.occupancy.clear();
        self.occupancy.resize(levels, 0);
        self.sic_stop = None;
    }
}

fn reaches(gain: f64, required: f64, power: TxPower<f64>) -> bool {
    match power {
        TxPower::Infinite => true,
        TxPower::Finite(p) => required <= p * gain,
    }
}

/// Slotted ALOHA: a lone transmitter succeeds unless `log2(1 + P|h|^2) <= R`.
pub fn resolve_oma(attempts: &[Attempt], epsilon: f64, power: TxPower<f64>, out: &mut SlotOutcome) {
    out.clear(1);
    out.occupancy[0] = attempts.len() as u32;
    match attempts {
        [] => {}
        [only] => {
            let ok = match power {
                TxPower::Infinite => true,
                TxPower::Finite(p) => p * only.gain > epsilon,
            };
            out.fates.push((only.user, if ok { UserFate::Success } else { UserFate::Outage }));
            if !ok {
                out.sic_stop = Some(0);
            }
        }
        many => {
            out.fates.extend(many.iter().map(|a| (a.user, UserFate::Collided)));
            out.sic_stop = Some(0);
        }
    }
}

/// NOMA with channel inversion onto the ladder, then SIC strongest level first.
pub fn resolve_noma(
    attempts: &[Attempt],
    ladder: &SnrLadder<f64>,
    power: TxPower<f64>,
    infeasible: InfeasibleBehavior,
    out: &mut SlotOutcome,
) {
    let levels = ladder.len();
    out.clear(levels);
    // (attempt index, decodable) per present signal
    let mut present: Vec<(usize, bool)> = Vec::with_capacity(attempts.len());
    for (idx, a) in attempts.iter().enumerate() {
        let feasible = reaches(a.gain, ladder.level(a.level), power);
        if !feasible && infeasible == InfeasibleBehavior::Abstain {
            out.fates.push((a.user, UserFate::InfeasibleAbstain));
            continue;
        }
        out.occupancy[a.level] += 1;
        present.push((idx, feasible));
        out.fates.push((a.user, UserFate::Silent));
    }
    for level in 0..levels {
        let count = out.occupancy[level];
        if count == 0 {
            continue;
        }
        let fate = if out.sic_stop.is_some() {
            UserFate::SicBlocked
        } else if count >= 2 {
            UserFate::Collided
        } else {
            let decodable = present.iter().any(|&(i, ok)| ok && attempts[i].level == level);
            if decodable {
                UserFate::Success
            } else {
                UserFate::Outage
            }
        };
        if matches!(fate, UserFate::Outage | UserFate::Collided) {
            out.sic_stop = Some(level);
        }
        // fates were pushed in attempt order
        for &(i, _) in present.iter().filter(|(i, _)| attempts[*i].level == level) {
            out.fates[i].1 = fate;
        }
    }
}
