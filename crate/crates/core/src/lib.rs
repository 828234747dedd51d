pub mod overlay;
pub mod protocols_auth;
pub mod protocols_crash;
pub mod seed;
pub mod singleport;
pub mod simnet;
