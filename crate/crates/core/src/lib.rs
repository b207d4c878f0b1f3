//! Lower bounds on asymptotic secret-key rates of routed device-independent
//! QKD protocols.
//!
//! The pipeline: honest two-qubit correlation models ([`qmodel`],
//! [`protocols`]) feed a noncommutative moment relaxation ([`npo`]) that is
//! solved node-by-node over a Gauss-Radau quadrature ([`quadrature`]) with a
//! first-order SDP solver ([`sdp`]), and the resulting conditional-entropy
//! bounds are assembled into Devetak-Winter key rates ([`keyrate`]).

pub mod keyrate;
pub mod npo;
pub mod protocols;
pub mod qmodel;
pub mod quadrature;
pub mod sdp;
pub mod tol;
