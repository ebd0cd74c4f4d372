//! Constructive factorization of compactly supported Hamiltonian
//! diffeomorphisms of standard R^2n into three autonomous pieces.
//!
//! Given a product `f = a_1 o ... o a_m` of autonomous Hamiltonian
//! diffeomorphisms with supports in a ball `B(r)`, the library builds
//!
//! * a displacing autonomous map `h` translating `B(r)` far enough that its
//!   iterates are pairwise disjoint ([`displacement`]),
//! * an auxiliary element `g`, assembled from conjugated partial products,
//!   for which the identity `f = [g, h] . b` holds exactly in the word
//!   algebra ([`words`]),
//! * three explicitly autonomous factors: `A1 = g h g^{-1}` (Hamiltonian
//!   `H o g^{-1}`), `A2 = h^{-1}` (Hamiltonian `-H`), and `A3`, the time-1
//!   flow of a single glued Hamiltonian with pairwise disjointly supported
//!   pieces ([`factorization`]),
//!
//! and verifies `f = A1 o A2 o A3` both symbolically (exact reduction in the
//! word algebra) and numerically (flow integration at sampled points). The
//! [`calabi`] module adds the volume-integral invariant and a balanced
//! variant in which every factor has vanishing Calabi value.
//!
//! Hamiltonians are closed-form expressions in a small language ([`expr`])
//! with exact differentiation and structural support bounds; flows are
//! integrated by fixed-step RK4 ([`geometry`]).

pub mod calabi;
pub mod cli;
pub mod config;
pub mod displacement;
pub mod expr;
pub mod factorization;
pub mod geometry;
pub mod report;
pub mod words;

pub use expr::{parse, HamiltonianExpr, SupportBound};
pub use factorization::{plan_factorization, verify_factorization, FactorizationPlan};
pub use geometry::{evaluate_word, flow, vector_field, DiffeoWord, IntegratorConfig, Letter};
