//! Samplers for translation-invariant two-species measures and related
//! initial data, built from arrival/service queueing recursions.

mod bernoulli;
mod gaps;
mod markov;
mod queue;
mod two_species;

pub use bernoulli::{sample_bernoulli, ArrivalServicePair};
pub use gaps::{second_class_voids, VoidCurve};
pub use markov::{sample_markov_arrivals, MarkovArrivalSpec};
pub use queue::{
    build_queue, drift_check, geometric_mark, match_brute_force, return_times, tail_slope_theta,
    DriftReport, QueueState,
};
pub use two_species::{
    first_class_given_services, general_queue, sample_mirrored, sample_queue,
    default_burn_in, flat_two_species, sample_general_two_species, sample_reflected, sample_two_species,
    sample_two_species_with, SamplerOptions,
};
