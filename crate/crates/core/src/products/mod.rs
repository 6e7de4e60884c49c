//! Filter and prime products of ordered systems, the textbook reduced
//! product used as an oracle, ω-chain prime powers and the assembly of
//! ultraproducts of chains as prime products.

mod appendix;
mod classical;
mod filter_product;
mod omega;

pub use appendix::{
    appendix_transform, principal_ultrafilter, random_bundle, random_chain, AppendixBundle,
    AppendixChecks, RawBundle,
};
pub use classical::{classical_reduced_product, ReducedProduct};
pub use filter_product::{filter_product, point_section, prime_product, FilterProduct};
pub use omega::{omega_prime_power, OmegaView};
