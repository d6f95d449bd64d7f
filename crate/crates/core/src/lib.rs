//! Age of Information (AoI) of grant-free slotted random access.
//!
//! Two channel-access schemes are covered: OMA (slotted ALOHA, one success per
//! slot) and NOMA-assisted random access, where each transmitter targets one of
//! `K` receive-SNR levels and the base station resolves them by successive
//! interference cancellation (SIC). For both, the crate offers
//!
//! * an absorbing Markov chain model of one frame, from which the renewal
//!   moments and the average AoI under generate-at-request (GAR) and
//!   generate-at-will (GAW) follow ([`markov`]),
//! * the closed forms available for `K = 2`, `N = 1` and the large-`M`
//!   asymptotes, plus a grid optimizer for the transmission probability
//!   ([`asymptotics`]),
//! * a brute-force single-slot outcome enumerator used to validate the
//!   transition probabilities ([`oracle`]),
//! * a frame/slot Monte Carlo simulator measuring the time-average AoI
//!   directly ([`sim`]).
//!
//! The analytical modules are generic over the scalar type (see [`Real`]);
//! the aliases below fix it to `f64`, which is what the simulator and the CLI use.

pub mod asymptotics;
mod error;
pub mod markov;
pub mod model;
pub mod oracle;
mod scalar;
pub mod sim;

pub use error::{AoiError, Result};
pub use scalar::Real;

pub use model::{
    build_snr_ladder, feasibility_probability, tx_probability, GenerationModel, InfeasibleBehavior, Scheme, SnrLadder,
    SystemConfig, TxPolicy, TxPower,
};

pub type Config = model::SystemConfig<f64>;
pub type Ladder = model::SnrLadder<f64>;
pub type Policy = model::TxPolicy<f64>;
pub type Power = model::TxPower<f64>;
pub type Transitions = markov::TransitionModel<f64>;
pub type Moments = markov::RenewalMoments<f64>;
pub type SlotDistribution = oracle::SlotOutcomeDistribution<f64>;

pub type Config32 = model::SystemConfig<f32>;
pub type Transitions32 = markov::TransitionModel<f32>;
pub type Moments32 = markov::RenewalMoments<f32>;
