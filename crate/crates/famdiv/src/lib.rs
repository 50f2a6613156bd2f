//! Fair division of a one-dimensional resource among *families*.
//!
//! Classic cake-cutting hands each agent a private piece. Here the cake
//! is instead split into one piece per *family* — a group whose members
//! share their piece but hold their own opinions about value. Because a
//! family has no single utility function, "envy-free" splits into three
//! distinct criteria, ordered by strength:
//!
//! * **unanimous** — every member of every family prefers (weakly) the
//!   family's own piece;
//! * **democratic** — at least half the members of every family do;
//! * **average** — each family's *averaged* valuation prefers its own
//!   piece.
//!
//! The crate provides exact checkers for all three (plus the matching
//! proportionality variants), division protocols that achieve each
//! criterion with provable bounds on the number of cuts, an exact
//! division solver over step-function valuations, a query model with an
//! adversary that certifies lower bounds on what protocols can achieve,
//! and a lower-bound gallery for component counts. All arithmetic is
//! exact rational arithmetic; every checker verdict is a theorem about
//! the input, not a float comparison.
//!
//! # Quick tour
//!
//! ```
//! use famdiv::fixtures::estate;
//! use famdiv::geometry::{Interval, Piece};
//! use famdiv::fairness::{check_unanimous_ef, check_average_ef};
//! use famdiv::instance::Allocation;
//! use famdiv::rational::int;
//!
//! let inst = estate();
//! // Cut the estate in the middle: [0,2] to f1, [2,4] to f2.
//! let alloc = Allocation::new(vec![
//!     Piece::from_interval(Interval::new(int(0), int(2))),
//!     Piece::from_interval(Interval::new(int(2), int(4))),
//! ]);
//! assert!(check_unanimous_ef(&inst, &alloc).unwrap().satisfied);
//! assert!(check_average_ef(&inst, &alloc, false).unwrap().satisfied);
//! ```

pub mod rational;

pub mod geometry;
pub mod instance;
pub mod measure;

pub mod fixtures;

pub mod fairness;

mod linalg;

pub mod exact;

pub mod query;

pub mod protocols;

pub mod hardness;

pub mod io;

pub mod render;

pub mod guide;
