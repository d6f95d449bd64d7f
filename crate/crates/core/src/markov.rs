//! Absorbing Markov chain of one frame and the renewal analysis of the AoI.
//!
//! Transient state `s_j` (`0 <= j < M`) means `j` users other than the tagged
//! user have delivered in the current frame; `s_M` means the tagged user has
//! delivered. The transient block is banded: from `s_j` the chain can move at
//! most `K` states forward (one for OMA), so it is stored row-wise as a band.

use crate::model::{feasibility_probability, Scheme, SystemConfig, TxPower};
use crate::{AoiError, Real, Result};

/// Transient transition matrix `P` (banded) and absorption vector `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionModel<T> {
    /// `band[j][d] = P_{j, j+d}`
    band: Vec<Vec<T>>,
    absorb: Vec<T>,
    config: SystemConfig<T>,
}

impl<T: Real> TransitionModel<T> {
    /// Number of transient states, `M`.
    pub fn num_states(&self) -> usize {
        self.absorb.len()
    }

    pub fn scheme(&self) -> Scheme {
        self.config.scheme
    }

    pub fn config(&self) -> &SystemConfig<T> {
        &self.config
    }

    /// `P_{j,i}` for transient states `j, i`.
    pub fn entry(&self, j: usize, i: usize) -> T {
        if i < j {
            return T::zero();
        }
        self.band[j].get(i - j).copied().unwrap_or_else(T::zero)
    }

    /// Non-zero part of row `j`, starting at column `j`.
    pub fn band_row(&self, j: usize) -> &[T] {
        &self.band[j]
    }

    /// `P_{j,M}`
    pub fn absorb(&self, j: usize) -> T {
        self.absorb[j]
    }

    pub fn absorb_vector(&self) -> &[T] {
        &self.absorb
    }

    /// Dense copy of `P`, row-major. Only sensible for small `M`.
    pub fn transient_dense(&self) -> Vec<Vec<T>> {
        let m = self.num_states();
        (0..m).map(|j| (0..m).map(|i| self.entry(j, i)).collect()).collect()
    }

    /// `max_j |Σ_i P_{j,i} + P_{j,M} - 1|`
    pub fn max_row_deviation(&self) -> T {
        self.band
            .iter()
            .zip(&self.absorb)
            .map(|(row, &a)| (row.iter().fold(a, |acc, &x| acc + x) - T::one()).abs())
            .fold(T::zero(), T::max)
    }

    /// One step of the row vector: `v^T P`.
    pub fn step(&self, state: &[T]) -> Vec<T> {
        let mut next = vec![T::zero(); state.len()];
        for (j, (&mass, row)) in state.iter().zip(&self.band).enumerate() {
            if mass == T::zero() {
                continue;
            }
            for (d, &p) in row.iter().enumerate() {
                next[j + d] = next[j + d] + mass * p;
            }
        }
        next
    }

    fn initial_state(&self) -> Vec<T> {
        let mut s0 = vec![T::zero(); self.num_states()];
        s0[0] = T::one();
        s0
    }

    fn dot_absorb(&self, state: &[T]) -> T {
        state.iter().zip(&self.absorb).fold(T::zero(), |acc, (&v, &a)| acc + v * a)
    }
}

fn clamp_tolerance<T: Real>() -> T {
    T::lit(1e-9).max(T::epsilon() * T::lit(64.0))
}

fn clamp_entry<T: Real>(value: T, row: usize, col: usize) -> Result<T> {
    if value >= T::zero() {
        Ok(value)
    } else if value >= -clamp_tolerance::<T>() {
        Ok(T::zero())
    } else {
        Err(AoiError::NegativeTransition { row, col, value: value.to_f64_lossy() })
    }
}

/// Builds the model for whichever scheme the configuration names.
pub fn transitions<T: Real>(config: &SystemConfig<T>) -> Result<TransitionModel<T>> {
    match config.scheme {
        Scheme::Oma => oma_transitions(config),
        Scheme::Noma => noma_transitions(config),
    }
}

/// Exact OMA (slotted ALOHA) transitions, outage included.
pub fn oma_transitions<T: Real>(config: &SystemConfig<T>) -> Result<TransitionModel<T>> {
    config.validate()?;
    if config.scheme != Scheme::Oma {
        return Err(AoiError::Unsupported("oma_transitions needs an OMA configuration".into()));
    }
    let m = config.num_users;
    let success = feasibility_probability(config.epsilon(), config.tx_power);
    let mut band = Vec::with_capacity(m);
    let mut absorb = Vec::with_capacity(m);
    for j in 0..m {
        let remaining = m - j;
        let q = config.ptx(j)?;
        // one given user transmits alone and clears the outage threshold
        let solo = q * success * (T::one() - q).powi((remaining - 1) as i32);
        let stay = T::one() - T::count(remaining) * solo;
        let mut row = vec![clamp_entry(stay, j, j)?];
        if remaining > 1 {
            row.push(T::count(remaining - 1) * solo);
        }
        band.push(row);
        absorb.push(solo);
    }
    Ok(TransitionModel { band, absorb, config: config.clone() })
}

/// `C(n, m) q^m (1-q)^(n-m)` for `m = 0..=n`, evaluated through logarithms so
/// large `n` neither overflows the coefficient nor underflows the powers.
fn binomial_weights<T: Real>(n: usize, q: T) -> Vec<T> {
    let mut w = vec![T::zero(); n + 1];
    if q <= T::zero() {
        w[0] = T::one();
        return w;
    }
    if q >= T::one() {
        w[n] = T::one();
        return w;
    }
    let (ln_q, ln_1q) = (q.ln(), (-q).ln_1p());
    let mut ln_binom = T::zero();
    for (i, slot) in w.iter_mut().enumerate() {
        if i > 0 {
            ln_binom = ln_binom + T::count(n - i + 1).ln() - T::count(i).ln();
        }
        *slot = (ln_binom + T::count(i) * ln_q + T::count(n - i) * ln_1q).exp();
    }
    w
}

/// Small binomial coefficient `C(n, r)`, zero for `r > n`.
fn small_binomial<T: Real>(n: usize, r: usize) -> T {
    if r > n {
        return T::zero();
    }
    let r = r.min(n - r);
    (0..r).fold(T::one(), |acc, i| acc * T::count(n - i) / T::count(i + 1))
}

/// `m (m-1) ... (m-i+1)`
fn falling_factorial<T: Real>(m: usize, i: usize) -> T {
    (0..i).fold(T::one(), |acc, p| acc * T::count(m - p))
}

/// High-SNR row of the NOMA chain for a state with `n` remaining users
/// (tagged user included): `[P_{j,j}, P_{j,j+1}, ..., P_{j,j+min(n-1,K)}]`.
///
/// Levels are 1-based in the loops below to keep the index arithmetic
/// recognisable; `tail(k) = 1 - k/K` is the chance a user lands strictly
/// after level `k`.
fn noma_row<T: Real>(n: usize, levels: usize, q: T) -> Vec<T> {
    let big_k = levels;
    let u = T::one() / T::count(big_k);
    let tail = |k: usize| T::count(big_k - k) / T::count(big_k);
    let w = binomial_weights(n, q);
    let nf = T::count(n);
    let width = (n - 1).min(big_k);
    let mut row = vec![T::zero(); width + 1];

    // P_{j,j}: no active user is decoded, i.e. the first occupied level collides.
    let mut any_success = T::zero();
    for (m, &wm) in w.iter().enumerate().skip(1) {
        let mf = T::count(m);
        let first_lone = (1..=big_k).fold(T::zero(), |acc, k| acc + mf * u * tail(k).powi(m as i32 - 1));
        any_success = any_success + wm * first_lone;
    }
    row[0] = T::one() - any_success;

    if width >= 1 {
        // exactly one decoded user, and it is not the tagged one
        let others = T::count(n - 1) / nf;
        let mut p = w[1] * others * T::count(big_k) * u;
        for (m, &wm) in w.iter().enumerate().skip(2) {
            let mf = T::count(m);
            let mut inner = T::zero();
            for k in 1..big_k {
                let next_lone = (k + 1..=big_k)
                    .fold(T::zero(), |acc, kappa| acc + T::count(m - 1) * u * tail(kappa).powi(m as i32 - 2));
                inner = inner + others * mf * u * (tail(k).powi(m as i32 - 1) - next_lone);
            }
            p = p + wm * inner;
        }
        row[1] = p;
    }

    for i in 2..=width {
        let others = T::count(n - i) / nf;
        let ui = u.powi(i as i32);

        // all i active users decoded: i distinct levels, any order
        let mut spans = T::zero();
        for k1 in 1..=big_k + 1 - i {
            for k2 in k1 + i - 1..=big_k {
                spans = spans + small_binomial::<T>(k2 - k1 - 1, i - 2);
            }
        }
        let mut p = w[i] * others * ui * spans * falling_factorial::<T>(i, i);

        // i decoded, then the next occupied level after the last decoded one collides
        for (m, &wm) in w.iter().enumerate().skip(i + 1) {
            let rest = m - i;
            let mut inner = T::zero();
            for k1 in 1..=big_k - i {
                for k2 in k1 + i - 1..big_k {
                    let next_lone = (k2 + 1..=big_k)
                        .fold(T::zero(), |acc, kappa| acc + T::count(rest) * u * tail(kappa).powi(rest as i32 - 1));
                    inner = inner + small_binomial::<T>(k2 - k1 - 1, i - 2) * (tail(k2).powi(rest as i32) - next_lone);
                }
            }
            p = p + wm * others * ui * falling_factorial::<T>(m, i) * inner;
        }
        row[i] = p;
    }
    row
}

/// High-SNR (collision-only) NOMA transitions; absorption by complement.
pub fn noma_transitions<T: Real>(config: &SystemConfig<T>) -> Result<TransitionModel<T>> {
    config.validate()?;
    if config.scheme != Scheme::Noma {
        return Err(AoiError::Unsupported("noma_transitions needs a NOMA configuration".into()));
    }
    if config.num_levels < 2 {
        return Err(AoiError::Unsupported(format!("NOMA needs at least two SNR levels, got K={}", config.num_levels)));
    }
    if config.tx_power != TxPower::Infinite {
        return Err(AoiError::Unsupported(
            "NOMA transition probabilities are only available in the high-SNR limit (tx_power = infinite)".into(),
        ));
    }
    let m = config.num_users;
    let mut band = Vec::with_capacity(m);
    let mut absorb = Vec::with_capacity(m);
    for j in 0..m {
        let q = config.ptx(j)?;
        let raw = noma_row(m - j, config.num_levels, q);
        let row = raw.into_iter().enumerate().map(|(d, p)| clamp_entry(p, j, j + d)).collect::<Result<Vec<T>>>()?;
        let leftover = row.iter().fold(T::one(), |acc, &p| acc - p);
        absorb.push(clamp_entry(leftover, j, m)?);
        band.push(row);
    }
    Ok(TransitionModel { band, absorb, config: config.clone() })
}

/// `Pr(Z = n) = s_0^T P^(n-1) p`: probability the tagged user delivers in slot `n`
/// of a frame with unlimited slots.
pub fn pmf_update_delay<T: Real>(model: &TransitionModel<T>, n: usize) -> T {
    assert!(n >= 1, "slot index starts at 1");
    let mut state = model.initial_state();
    for _ in 1..n {
        state = model.step(&state);
    }
    model.dot_absorb(&state)
}

/// `[Pr(Z = 1), ..., Pr(Z = n_max)]` in one sweep.
pub fn update_delay_pmf<T: Real>(model: &TransitionModel<T>, n_max: usize) -> Vec<T> {
    let mut state = model.initial_state();
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        if n > 1 {
            state = model.step(&state);
        }
        out.push(model.dot_absorb(&state));
    }
    out
}

/// `P_fail = s_0^T P^N 1`: the tagged user is still transient after `N` slots.
pub fn failure_probability<T: Real>(model: &TransitionModel<T>, slots: usize) -> T {
    let mut state = model.initial_state();
    for _ in 0..slots {
        state = model.step(&state);
    }
    state.iter().fold(T::zero(), |acc, &v| acc + v).min(T::one()).max(T::zero())
}

/// Per-frame renewal quantities. Times are in seconds, `X` counts frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenewalMoments<T> {
    pub p_fail: T,
    /// `E{S}`, service delay
    pub e_s: T,
    pub e_s2: T,
    /// `E{X}`, frames between deliveries
    pub e_x: T,
    pub e_x2: T,
    /// `E{Y}`, inter-departure time
    pub e_y: T,
    pub e_y2: T,
    /// `E{S_{j-1} Y_j}`
    pub e_s_prev_y: T,
}

pub fn renewal_moments<T: Real>(
    model: &TransitionModel<T>,
    slots: usize,
    slot_duration: T,
) -> Result<RenewalMoments<T>> {
    if slots == 0 {
        return Err(AoiError::InvalidConfig("a frame needs at least one slot".into()));
    }
    let mut state = model.initial_state();
    let (mut m1, mut m2) = (T::zero(), T::zero());
    for n in 1..=slots {
        if n > 1 {
            state = model.step(&state);
        }
        let pz = model.dot_absorb(&state);
        let nf = T::count(n);
        m1 = m1 + nf * pz;
        m2 = m2 + nf * nf * pz;
    }
    state = model.step(&state);
    let p_fail = state.iter().fold(T::zero(), |acc, &v| acc + v).min(T::one()).max(T::zero());
    if p_fail >= T::one() - T::lit(1e-12) {
        return Err(AoiError::NoAbsorption { p_fail: p_fail.to_f64_lossy() });
    }
    let delivered = T::one() - p_fail;
    let t = slot_duration;
    let frame = T::count(slots) * t;
    let e_s = t * m1 / delivered;
    let e_s2 = t * t * m2 / delivered;
    let e_x = T::one() / delivered;
    let e_x2 = (T::one() + p_fail) / (delivered * delivered);
    let e_y = frame * e_x;
    let two = T::lit(2.0);
    let e_y2 = frame * frame * e_x2 + two * e_s2 - two * e_s * e_s;
    let e_s_prev_y = e_s * e_y - e_s2 + e_s * e_s;
    Ok(RenewalMoments { p_fail, e_s, e_s2, e_x, e_x2, e_y, e_y2, e_s_prev_y })
}

fn check_moments<T: Real>(moments: &RenewalMoments<T>) -> Result<()> {
    if moments.e_y.is_finite() && moments.e_y > T::zero() && moments.e_y2.is_finite() {
        Ok(())
    } else {
        Err(AoiError::NoAbsorption { p_fail: moments.p_fail.to_f64_lossy() })
    }
}

/// Average AoI under generate-at-request.
pub fn aoi_gar<T: Real>(moments: &RenewalMoments<T>) -> Result<T> {
    check_moments(moments)?;
    Ok(moments.e_s_prev_y / moments.e_y + moments.e_y2 / (T::lit(2.0) * moments.e_y))
}

/// Average AoI under generate-at-will.
pub fn aoi_gaw<T: Real>(moments: &RenewalMoments<T>, slot_duration: T) -> Result<T> {
    check_moments(moments)?;
    Ok(slot_duration + moments.e_y2 / (T::lit(2.0) * moments.e_y))
}

/// Analytical result for one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticalAoi<T> {
    pub gar: T,
    pub gaw: T,
    pub moments: RenewalMoments<T>,
}

impl<T: Real> AnalyticalAoi<T> {
    /// The AoI for the generation model the configuration asked for.
    pub fn for_model(&self, model: crate::GenerationModel) -> T {
        match model {
            crate::GenerationModel::Gar => self.gar,
            crate::GenerationModel::Gaw => self.gaw,
        }
    }
}

/// Transitions, renewal moments and both AoI flavours in one call.
pub fn analyze<T: Real>(config: &SystemConfig<T>) -> Result<AnalyticalAoi<T>> {
    let model = transitions(config)?;
    let moments = renewal_moments(&model, config.slots_per_frame, config.slot_duration)?;
    Ok(AnalyticalAoi { gar: aoi_gar(&moments)?, gaw: aoi_gaw(&moments, config.slot_duration)?, moments })
}
