//! Finitary random interlacements on `Z^d`.
//!
//! FRI at intensity `u` and mean length `T` is a Poisson cloud of killed
//! simple random walks: every site emits Poisson(`2du/(T+1)`) walks, each
//! with Geometric length of mean `T`. This crate samples the cloud in finite
//! windows, computes killed and classical capacities, couples the model with
//! random interlacements, and analyses percolation of the trace.

pub mod coupling;
pub mod goodbox;
pub mod hitting;
pub mod io;
pub mod lattice;
pub mod parallel;
pub mod peierls;
pub mod percolation;
pub mod sampler;
pub mod scan;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod walk;

pub use lattice::{Edge, LatticeBox, LatticeError, Point};
pub use rng::RandomStream;
pub use scalar::Real;
pub use walk::Trajectory;

pub type KillingLaw64 = walk::KillingLaw<f64>;
pub type KillingLaw32 = walk::KillingLaw<f32>;
pub type GreenKernel64 = hitting::GreenKernel<f64>;
pub type GreenKernel32 = hitting::GreenKernel<f32>;
pub type Capacity64 = hitting::CapacityResult<f64>;
pub type Capacity32 = hitting::CapacityResult<f32>;
pub type Measure64 = hitting::DiscreteMeasure<f64>;
pub type FriParams64 = sampler::FriParams<f64>;
pub type FriParams32 = sampler::FriParams<f32>;
pub type PeierlsThreshold64 = peierls::PeierlsThreshold<f64>;
pub type PeierlsThreshold32 = peierls::PeierlsThreshold<f32>;
