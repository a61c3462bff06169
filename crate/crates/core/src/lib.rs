//! Diffusion auctions for selling `K` homogeneous items through a social
//! network.
//!
//! Buyers learn about the sale only through invitations from their
//! neighbors. The crate provides the single-item information diffusion
//! mechanism ([`mechanisms::run_idm`]), its multi-item generalization
//! ([`mechanisms::run_gidm`]), a neighbors-only `(K+1)`-price baseline
//! ([`mechanisms::run_vcg_local`]), and brute-force property campaigns in
//! [`verify`].

pub mod allocation;
pub mod critical;
pub mod io;
pub mod mechanisms;
pub mod network;
pub mod report;
pub mod value;
pub mod verify;

pub use network::{Action, ActionProfile, BuyerId, BuyerType, Network};
pub use value::{Exact, Value};
