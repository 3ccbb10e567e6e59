//! Sound size reduction and exact output range analysis for feed-forward
//! rectifier networks with interval weights.
//!
//! An *interval network* generalizes an ordinary network by letting every
//! weight and bias range over a closed interval; an ordinary network is the
//! degenerate case where all intervals are single points. The toolkit does
//! three things with them:
//!
//! * **Abstraction** ([`abstraction`]): merge groups of nodes per a
//!   [`Partition`], producing a smaller interval network whose behaviour
//!   covers the original's — the sound construction scales each merged hull
//!   by the source group size.
//! * **Encoding** ([`encode`]): translate a network plus an input box into a
//!   mixed-integer linear model, one binary switch per rectifier, with
//!   per-node big-M constants from interval bound propagation.
//! * **Range analysis** ([`range`]): minimize and maximize every output over
//!   that model — exactly via the bundled branch-and-bound solver, or by
//!   full switch enumeration on small instances — plus empirical soundness
//!   checking and partition benchmarking.
//!
//! File formats (JSON documents and the NNet text dialect) live in [`io`].

pub mod abstraction;
pub mod bounds;
pub mod encode;
pub mod error;
pub mod interval;
pub mod io;
pub mod network;
pub mod partition;
pub mod range;

pub use abstraction::{
    abstract_network, merge_sources, merge_targets, valuation_envelope, AbstractionMode,
    ValuationEnvelope,
};
pub use bounds::{interval_bounds, NetworkBounds, NodeBounds};
pub use encode::{compute_big_m, encode, EncodeStyle, Encoding, ExtraRow, NodeRef};
pub use error::{Error, Result};
pub use interval::Interval;
pub use network::{
    eval, layer_membership, post_layer, sample_selection, selection_within, InputBox,
    IntervalNetwork, Layer, Valuation, WeightSelection, MEMBERSHIP_TOL,
};
pub use partition::{random_balanced, round_robin, Partition};
pub use range::{
    bench_partitions, exact_range_oracle, output_range, soundness_check, Agg, BenchBoundAgg,
    BenchReport, BenchRow, BenchSummary, BoundReport, BoundStatus, OutputRange, RangeConfig,
    RangeMeta, RangeResult, SampleConfig, SoundnessReport, Timings, Violation, ORACLE_NODE_LIMIT,
};
