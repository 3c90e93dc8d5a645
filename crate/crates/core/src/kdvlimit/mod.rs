//! Differential operators on the circle, the (2, d+1)-KdV flow, lifted
//! curves and the envelopes whose small-ε expansion recovers the flow.

pub mod curve;
pub mod envelope;
pub mod flow;
pub mod grid;
pub mod jet;
pub mod limit;
pub mod operator;

pub use curve::{curve_from_potentials, SampledCurve};
pub use envelope::{envelope, envelope_potentials, Envelope};
pub use flow::{kdv_flow, spectral_shift_check, Trajectory};
pub use grid::CircleGrid;
pub use limit::{continuous_limit_check, node_alpha, LimitReport, LimitRow, MEASURED_ALPHA};
pub use operator::{commutator, q2_of, DiffOperator, PotentialsFile};
