//! Atomic frequency comb: optical-depth profiles, the comb as a causal
//! linear filter, echo bookkeeping and efficiency accounting.

pub mod calibrate;
pub mod dephasing;
pub mod design;
pub mod echo;
pub mod efficiency;
pub mod memory;
pub mod profile;
pub mod sidehole;
pub mod text;
pub mod transfer;

pub use dephasing::{dephasing_factor, rephasing_peak};
pub use design::{design_afc, AfcDesign, SideHoleReport};
pub use echo::{account_echo, echo_response, gaussian_pulse, probe_echo, EchoAccounting};
pub use efficiency::{
    efficiency_breakdown, filter_overlap, EfficiencyBreakdown, InternalConvention, PhotonSpectrum,
    PUBLISHED_FILTER_FACTOR,
};
pub use memory::{MemoryModel, MemoryPrediction};
pub use profile::{CombParams, CombProfile, ToothShape};
pub use sidehole::{misalignment, SideHole, SideHolePenalty};
pub use transfer::{transfer_function, TransferFunction};
