//! Coordination of several simultaneous transmitters.
//!
//! Sliding-correlator campaigns share one band by TDMA: each transmitter owns
//! one slot of every period, clocks disagree by a modeled error, and parked
//! transmitters may leak. Stepped-frequency campaigns give every transmitter
//! its own bin-centered tone, spilling into extra time frames when the band
//! cannot hold them all.

mod clock;
mod plan;
mod scene;
mod schedule;

pub use clock::{ClockModel, ClockSpec};
pub use plan::{build_frequency_plan, frame_capacity, FrequencyPlan, FrequencyPlanConfig, ToneAssignment};
pub use scene::{compose_received, LeakageModel, Parking, SampleWindow, Scene, SceneTransmitter};
pub use schedule::{assess_alignment, segment_capture, slot_window, AlignmentFlag, TdmaSchedule, DEFAULT_GUARD_FRACTION};
