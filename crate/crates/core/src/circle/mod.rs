//! Arcs, boxes, the four-way dissection, mean values over regions and the
//! singular-series / singular-integral prediction.

pub mod arcs;
pub mod moments;
pub mod singular;

pub use arcs::{
    box_measure, dissection_classify, kdim_membership, major_arc_membership_1d, ArcFamily, ArcKind,
    DissectionConfig, Scale, Tag,
};
pub use moments::{
    conjecture_check, dft_moment, restricted_moment_estimate, ConjectureRecord, DftResult, MomentEstimate,
    MomentSpec, Region, SamplerConfig,
};
pub use singular::{
    asymptotic_prediction, singular_integral_truncated, singular_series_partial, IntegralMethod, Prediction,
    SingularIntegral, SingularSeries,
};
