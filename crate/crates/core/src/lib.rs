//! Stationary radiative-equilibrium solver in convex domains.
//!
//! Computes the temperature field of a body whose heat balance is purely
//! radiative: local emission equals absorbed radiation from the rest of the
//! body and from the boundary influx, with optional elastic scattering.
//! The fixed-point unknown is `u(x) = 4π σ T(x)^4` (Grey) or its
//! spectrally-weighted analogue (pseudo-Grey); the right-hand side is a
//! non-local integral operator evaluated along exact chords of the convex
//! domain.
//!
//! Modules:
//! - [`geometry`]: analytic convex bodies, ray exits, sphere/chord quadrature;
//! - [`physics`]: Planck radiometry, coefficient models, scattering kernels;
//! - [`field`]: Cartesian scalar/angular fields with trilinear chord sampling;
//! - [`transport`]: optical depth, attenuation, emission-absorption operators;
//! - [`scattering`]: collision-order (Duhamel) series for the full equation;
//! - [`solver`]: outer Picard iteration with contraction diagnostics;
//! - [`compactlab`]: Fourier line-integral operators on the periodic torus;
//! - [`mc`]: analog Monte Carlo photon transport used as an independent oracle;
//! - [`io`]: CSV / binary-grid / legacy structured-points field exchange.

pub mod compactlab;
pub mod field;
pub mod geometry;
pub mod io;
pub mod mc;
pub mod physics;
pub mod real;
pub mod reference;
pub mod scattering;
pub mod solver;
pub mod transport;
pub mod vec3;

pub use real::Real;
pub use vec3::Vec3;

/// Default scalar for the CLI and the acceptance suite.
pub type Scalar = f64;

pub type Vec3F = Vec3<Scalar>;
pub type DomainF = geometry::ConvexDomain<Scalar>;
pub type SphereQuadratureF = geometry::SphereQuadrature<Scalar>;
pub type ModelF = physics::RadiativeModel<Scalar>;
pub type ScalarFieldF = field::ScalarField<Scalar>;
pub type AngularFieldF = field::AngularField<Scalar>;
