//! Frame/slot Monte Carlo simulator.
//!
//! Every frame draws its randomness from its own ChaCha stream keyed by
//! `(seed, frame index)`, so frames can be simulated in parallel blocks and
//! still reproduce the serial trace bit for bit. The AoI of the tagged user
//! (user 0) is then integrated in frame order: between deliveries the age
//! grows linearly, so each segment contributes `dt * age_start + dt^2 / 2`.

mod slot;
mod stats;

pub use slot::{resolve_noma, resolve_oma, Attempt, SlotOutcome, UserFate};
pub use stats::{empirical_aoi, empirical_renewal, AoiEstimate, EmpiricalRenewal};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::model::{GenerationModel, Scheme, SnrLadder, SystemConfig};
use crate::{AoiError, Result};

/// Frames simulated per parallel work item.
const BLOCK: u64 = 1 << 13;
/// Work items handed to rayon before folding into the trace.
const BLOCKS_PER_ROUND: u64 = 64;
/// Target number of batches for batch-means standard errors.
const BATCHES: u64 = 32;

/// Everything measured along one trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStats {
    pub seed: u64,
    pub frames_run: u64,
    pub slot_duration: f64,
    pub slots_per_frame: usize,
    /// `∫ Δ(t) dt` over the whole trace, seconds².
    pub aoi_time_integral: f64,
    /// `frames_run * N * T`
    pub elapsed: f64,
    /// `S` of every delivery of the tagged user, seconds.
    pub service_delays: Vec<f64>,
    /// `Y` between consecutive deliveries; entry `i` follows delivery `i`.
    pub inter_departures: Vec<f64>,
    /// `X` between consecutive deliveries, frames.
    pub frame_gaps: Vec<u64>,
    /// Frames in which the tagged user delivered.
    pub tagged_deliveries: u64,
    /// `histogram[c]` = frames in which exactly `c` users delivered.
    pub success_histogram: Vec<u64>,
    pub batch_integrals: Vec<f64>,
    pub batch_durations: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
struct FrameRecord {
    /// 1-based slot of the tagged user's delivery, 0 if none.
    tagged_slot: u32,
    delivered: u32,
}

/// Per-frame machinery shared by all frames of one run.
struct FrameSim<'a> {
    config: &'a SystemConfig<f64>,
    ladder: Option<SnrLadder<f64>>,
    epsilon: f64,
    ptx_by_state: Vec<f64>,
}

impl<'a> FrameSim<'a> {
    fn new(config: &'a SystemConfig<f64>) -> Result<Self> {
        let ladder = match config.scheme {
            Scheme::Noma => Some(config.ladder()?),
            Scheme::Oma => None,
        };
        let ptx_by_state = (0..config.num_users).map(|j| config.ptx(j)).collect::<Result<Vec<_>>>()?;
        Ok(FrameSim { config, ladder, epsilon: config.epsilon(), ptx_by_state })
    }

    fn run_frame(&self, rng: &mut ChaCha8Rng, scratch: &mut Scratch) -> FrameRecord {
        let m = self.config.num_users;
        let levels = self.config.num_levels;
        scratch.delivered.clear();
        scratch.delivered.resize(m, false);
        let mut record = FrameRecord::default();
        let mut done = 0usize;
        for slot in 1..=self.config.slots_per_frame {
            if done == m {
                break;
            }
            let ptx = self.ptx_by_state[done];
            scratch.attempts.clear();
            for user in 0..m {
                if scratch.delivered[user] {
                    continue;
                }
                let coin: f64 = rng.random();
                if coin >= ptx {
                    continue;
                }
                let level = if levels > 1 { rng.random_range(0..levels) } else { 0 };
                let gain: f64 = rng.sample(Exp1);
                scratch.attempts.push(Attempt { user, level, gain });
            }
            match &self.ladder {
                Some(ladder) => resolve_noma(
                    &scratch.attempts,
                    ladder,
                    self.config.tx_power,
                    self.config.infeasible,
                    &mut scratch.outcome,
                ),
                None => resolve_oma(&scratch.attempts, self.epsilon, self.config.tx_power, &mut scratch.outcome),
            }
            for user in scratch.outcome.successes() {
                scratch.delivered[user] = true;
                done += 1;
                if user == 0 {
                    record.tagged_slot = slot as u32;
                }
            }
        }
        record.delivered = done as u32;
        record
    }
}

#[derive(Default)]
struct Scratch {
    delivered: Vec<bool>,
    attempts: Vec<Attempt>,
    outcome: SlotOutcome,
}

fn frame_rng(seed: u64, frame: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame);
    rng
}

/// Running AoI bookkeeping, folded frame by frame in order.
struct Integrator {
    frame_len: f64,
    slot: f64,
    generation: GenerationModel,
    batch_len: u64,
    now: f64,
    age: f64,
    batch_acc: f64,
    batch_start: f64,
    last_delivery: Option<(u64, f64)>,
    stats: TraceStats,
}

impl Integrator {
    fn new(config: &SystemConfig<f64>, frames: u64, seed: u64) -> Self {
        let frame_len = config.frame_duration();
        let batches = BATCHES.min(frames).max(1);
        Integrator {
            frame_len,
            slot: config.slot_duration,
            generation: config.generation,
            batch_len: frames / batches,
            now: 0.0,
            // as if a frame-start update had been delivered at the end of the previous frame
            age: frame_len,
            batch_acc: 0.0,
            batch_start: 0.0,
            last_delivery: None,
            stats: TraceStats {
                seed,
                frames_run: frames,
                slot_duration: config.slot_duration,
                slots_per_frame: config.slots_per_frame,
                aoi_time_integral: 0.0,
                elapsed: 0.0,
                service_delays: Vec::new(),
                inter_departures: Vec::new(),
                frame_gaps: Vec::new(),
                tagged_deliveries: 0,
                success_histogram: vec![0; config.num_users + 1],
                batch_integrals: Vec::new(),
                batch_durations: Vec::new(),
            },
        }
    }

    fn advance_to(&mut self, t: f64) {
        let dt = t - self.now;
        self.batch_acc += dt * self.age + 0.5 * dt * dt;
        self.age += dt;
        self.now = t;
    }

    fn push(&mut self, frame: u64, record: FrameRecord) {
        let start = frame as f64 * self.frame_len;
        self.stats.success_histogram[record.delivered as usize] += 1;
        if record.tagged_slot > 0 {
            let service = record.tagged_slot as f64 * self.slot;
            let at = start + service;
            self.advance_to(at);
            self.age = match self.generation {
                GenerationModel::Gar => service,
                GenerationModel::Gaw => self.slot,
            };
            self.stats.tagged_deliveries += 1;
            self.stats.service_delays.push(service);
            if let Some((last_frame, last_at)) = self.last_delivery {
                self.stats.inter_departures.push(at - last_at);
                self.stats.frame_gaps.push(frame - last_frame);
            }
            self.last_delivery = Some((frame, at));
        }
        let end = start + self.frame_len;
        self.advance_to(end);
        let closes_batch = (frame + 1).is_multiple_of(self.batch_len)
            && self.stats.batch_integrals.len() + 1 < BATCHES.min(self.stats.frames_run) as usize;
        if closes_batch || frame + 1 == self.stats.frames_run {
            self.stats.aoi_time_integral += self.batch_acc;
            self.stats.batch_integrals.push(self.batch_acc);
            self.stats.batch_durations.push(end - self.batch_start);
            self.batch_acc = 0.0;
            self.batch_start = end;
        }
    }

    fn finish(mut self) -> TraceStats {
        self.stats.elapsed = self.now;
        self.stats
    }
}

/// Runs `frames` frames of the scenario with the given seed.
pub fn simulate(config: &SystemConfig<f64>, frames: u64, seed: u64) -> Result<TraceStats> {
    config.validate()?;
    if frames == 0 {
        return Err(AoiError::InvalidConfig("simulate needs at least one frame".into()));
    }
    if config.scheme == Scheme::Noma && config.num_levels < 2 {
        return Err(AoiError::Unsupported("NOMA simulation needs at least two SNR levels".into()));
    }
    let sim = FrameSim::new(config)?;
    let mut integrator = Integrator::new(config, frames, seed);
    let blocks = frames.div_ceil(BLOCK);
    let mut block = 0;
    while block < blocks {
        let upto = (block + BLOCKS_PER_ROUND).min(blocks);
        let records: Vec<Vec<FrameRecord>> = (block..upto)
            .into_par_iter()
            .map(|b| {
                let mut scratch = Scratch::default();
                let first = b * BLOCK;
                let last = (first + BLOCK).min(frames);
                (first..last).map(|f| sim.run_frame(&mut frame_rng(seed, f), &mut scratch)).collect()
            })
            .collect();
        for (offset, chunk) in records.into_iter().enumerate() {
            let first = (block + offset as u64) * BLOCK;
            for (i, record) in chunk.into_iter().enumerate() {
                integrator.push(first + i as u64, record);
            }
        }
        block = upto;
    }
    Ok(integrator.finish())
}
