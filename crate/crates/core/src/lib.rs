//! Exact counting of bounded-height rationals inside p-adic balls, the
//! closed-form height density of balls and spheres, and the empirical
//! machinery that compares the two.

pub mod arithfn;
pub mod ball;
pub mod counting;
pub mod decimal;
pub mod error;
pub mod estimator;
pub mod exec;
pub mod measure;
pub mod rational;

pub use ball::{ball_canonical, ball_contains, ball_relation, Ball, BallRelation, Sphere};
pub use counting::{CountJob, Region, SliceCase, SliceStat};
pub use decimal::{Decimal, Fixed};
pub use error::{Error, Result};
pub use exec::Exec;
pub use rational::{height, make_rational, valuation, ExtendedValuation, Prime, Rational};
