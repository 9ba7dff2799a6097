//! Radiometry and material models: Planck emission, the Stefan law,
//! temperature-dependent absorption/scattering coefficients, frequency
//! profiles, scattering kernels, and boundary influx sources.
//!
//! Units are nondimensional by default (`h = k = c = 1`, so
//! `σ = 2π⁴/15`); physical constants can be substituted in the config.

use crate::geometry::SphereQuadrature;
use crate::real::Real;
use crate::vec3::Vec3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PhysicsError {
    #[error("nonphysical input: {0}")]
    NonphysicalInput(String),
    #[error("negative input: {0}")]
    NegativeInput(String),
    #[error("value {value} outside the invertible range [0, {max}]")]
    OutOfRange { value: f64, max: f64 },
    #[error("scattering profile is negative at cos angle {0}")]
    NegativeProfile(f64),
    #[error("frequency profile tail not integrable: residual {0} exceeds tolerance")]
    NonIntegrableProfile(f64),
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

/// Planck, Boltzmann, and light-speed constants. Defaults are the
/// nondimensional values `h = k = c = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants<R> {
    pub h: R,
    pub k: R,
    pub c: R,
}

impl<R: Real> Default for PhysicalConstants<R> {
    fn default() -> Self {
        Self {
            h: R::one(),
            k: R::one(),
            c: R::one(),
        }
    }
}

impl<R: Real> PhysicalConstants<R> {
    /// Stefan constant `σ = 2π⁴ k⁴ / (15 h³ c²)`.
    pub fn sigma(&self) -> R {
        let pi4 = R::PI().powi(4);
        R::two() * pi4 * self.k.powi(4) / (R::of(15.0) * self.h.powi(3) * self.c.powi(2))
    }
}

/// Spectral radiance of a blackbody, `B_ν(T) = (2hν³/c²) / (e^{hν/kT} - 1)`.
pub fn planck<R: Real>(
    consts: &PhysicalConstants<R>,
    nu: R,
    temperature: R,
) -> Result<R, PhysicsError> {
    if nu <= R::zero() {
        return Err(PhysicsError::NonphysicalInput(format!(
            "frequency must be positive, got {nu}"
        )));
    }
    if temperature < R::zero() {
        return Err(PhysicsError::NonphysicalInput(format!(
            "temperature must be nonnegative, got {temperature}"
        )));
    }
    Ok(planck_unchecked(consts, nu, temperature))
}

#[inline]
pub(crate) fn planck_unchecked<R: Real>(consts: &PhysicalConstants<R>, nu: R, t: R) -> R {
    if t == R::zero() {
        return R::zero();
    }
    let x = consts.h * nu / (consts.k * t);
    let denom = x.exp_m1();
    if denom.is_infinite() {
        return R::zero();
    }
    R::two() * consts.h * nu.powi(3) / (consts.c * consts.c) / denom
}

/// `∂B_ν/∂T`, positive for `T > 0`.
pub(crate) fn planck_dt<R: Real>(consts: &PhysicalConstants<R>, nu: R, t: R) -> R {
    if t == R::zero() {
        return R::zero();
    }
    let x = consts.h * nu / (consts.k * t);
    let em = x.exp_m1();
    if em.is_infinite() {
        return R::zero();
    }
    let prefactor = R::two() * consts.h * nu.powi(3) / (consts.c * consts.c);
    prefactor * x * (em + R::one()) / (t * em * em)
}

/// Nodes and weights discretizing `∫_0^∞ dν` after the substitution
/// `ζ = hν/(k T_ref)`: composite Gauss-Legendre on `[0, ζ_max]` with
/// `ζ_max` large enough that the Planck tail is below 1e-12 of the total.
///
/// Panels are geometrically graded toward `ζ = 0` so a single grid built at
/// the hottest temperature also resolves Planck integrands at temperatures
/// an order of magnitude colder.
#[derive(Debug, Clone)]
pub struct FrequencyGrid<R> {
    pub nodes: Vec<R>,
    pub weights: Vec<R>,
    pub t_ref: R,
}

pub const DEFAULT_FREQ_PANELS: usize = 12;
pub const DEFAULT_FREQ_PANEL_ORDER: usize = 8;
const ZETA_MAX: f64 = 45.0;
const ZETA_LO: f64 = 0.02;

impl<R: Real> FrequencyGrid<R> {
    pub fn for_temperature(
        consts: &PhysicalConstants<R>,
        t_ref: R,
        panels: usize,
        panel_order: usize,
    ) -> Self {
        assert!(t_ref > R::zero() && panels >= 1 && panel_order >= 2);
        let scale = consts.k * t_ref / consts.h;
        let (gl_x, gl_w) = crate::geometry::gauss_legendre::<R>(panel_order);
        // Panel edges: a linear seed panel [0, ζ_lo], then log-spaced up to
        // ζ_max.
        let mut edges = vec![R::zero(), R::of(ZETA_LO)];
        let ratio = R::of((ZETA_MAX / ZETA_LO).powf(1.0 / panels as f64));
        for p in 1..=panels {
            edges.push(R::of(ZETA_LO) * ratio.powi(p as i32));
        }
        let mut nodes = Vec::with_capacity((panels + 1) * panel_order);
        let mut weights = Vec::with_capacity((panels + 1) * panel_order);
        for pair in edges.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let half_width = (b - a) * R::half();
            for (x, w) in gl_x.iter().zip(&gl_w) {
                let zeta = a + half_width * (*x + R::one());
                nodes.push(scale * zeta);
                weights.push(scale * half_width * *w);
            }
        }
        FrequencyGrid {
            nodes,
            weights,
            t_ref,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(R) -> R>(&self, f: F) -> R {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&nu, &w)| w * f(nu))
            .sum()
    }
}

/// Total blackbody emission `∫_0^∞ B_ν(T) dν` by frequency quadrature;
/// agrees with the closed form `σ T⁴`.
pub fn stefan_integral<R: Real>(
    consts: &PhysicalConstants<R>,
    temperature: R,
) -> Result<R, PhysicsError> {
    if temperature < R::zero() {
        return Err(PhysicsError::NonphysicalInput(format!(
            "temperature must be nonnegative, got {temperature}"
        )));
    }
    if temperature == R::zero() {
        return Ok(R::zero());
    }
    let grid = FrequencyGrid::for_temperature(consts, temperature, 24, 16);
    Ok(grid.integrate(|nu| planck_unchecked(consts, nu, temperature)))
}

/// Grey change of variables `u = 4π σ T⁴`.
pub fn u_from_t<R: Real>(consts: &PhysicalConstants<R>, t: R) -> Result<R, PhysicsError> {
    if t < R::zero() {
        return Err(PhysicsError::NegativeInput(format!("temperature {t}")));
    }
    Ok(R::four_pi() * consts.sigma() * t.powi(4))
}

/// Inverse of [`u_from_t`], `T = (u / 4πσ)^{1/4}`.
pub fn t_from_u<R: Real>(consts: &PhysicalConstants<R>, u: R) -> Result<R, PhysicsError> {
    if u < R::zero() {
        return Err(PhysicsError::NegativeInput(format!("u {u}")));
    }
    Ok((u / (R::four_pi() * consts.sigma())).powf(R::of(0.25)))
}

/// Frequency profile `Q(ν)` for pseudo-Grey coefficients: bounded,
/// strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectrumProfile<R> {
    /// `Q ≡ 1`: the Grey case.
    Unit,
    /// `Q(ν) = e^{-rate ν}`.
    Exponential { rate: R },
    /// `Q(ν) = 1 / (1 + (ν/width)²)`.
    Lorentzian { width: R },
}

impl<R: Real> SpectrumProfile<R> {
    pub fn eval(&self, nu: R) -> R {
        match *self {
            SpectrumProfile::Unit => R::one(),
            SpectrumProfile::Exponential { rate } => (-rate * nu).exp(),
            SpectrumProfile::Lorentzian { width } => {
                R::one() / (R::one() + (nu / width).powi(2))
            }
        }
    }

    pub fn sup_norm(&self) -> R {
        R::one()
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, SpectrumProfile::Unit)
    }
}

/// Temperature-dependent coefficient family `α(T)`, monotone on the declared
/// range so its bounds are attained at the endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoefficientFn<R> {
    Constant { value: R },
    /// `α(T) = a T^p + c` with `a, p ≥ 0`.
    PowerLaw { a: R, p: R, c: R },
    /// `α(T) = lo + (hi - lo) T² / (scale² + T²)`, bounded in `[lo, hi]`.
    Rational { lo: R, hi: R, scale: R },
}

impl<R: Real> CoefficientFn<R> {
    pub fn eval(&self, t: R) -> R {
        match *self {
            CoefficientFn::Constant { value } => value,
            CoefficientFn::PowerLaw { a, p, c } => a * t.powf(p) + c,
            CoefficientFn::Rational { lo, hi, scale } => {
                lo + (hi - lo) * t * t / (scale * scale + t * t)
            }
        }
    }

    /// `(min, max)` over `[t_lo, t_hi]`; all families are monotone in `T`.
    pub fn bounds(&self, t_lo: R, t_hi: R) -> (R, R) {
        let a = self.eval(t_lo);
        let b = self.eval(t_hi);
        (a.min(b), a.max(b))
    }

    pub fn validate(&self, name: &str) -> Result<(), PhysicsError> {
        let ok = match *self {
            CoefficientFn::Constant { value } => value >= R::zero(),
            CoefficientFn::PowerLaw { a, p, c } => a >= R::zero() && p >= R::zero() && c >= R::zero(),
            CoefficientFn::Rational { lo, hi, scale } => {
                lo >= R::zero() && hi >= lo && scale > R::zero()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(PhysicsError::InvalidModel(format!(
                "coefficient {name} has negative or ill-ordered parameters"
            )))
        }
    }
}

/// Rotationally invariant phase profile `p(μ)`, `μ = n·n'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhaseProfile<R> {
    Isotropic,
    /// `p(μ) = 1 + b μ`, `|b| ≤ 1`.
    Linear { b: R },
    /// Henyey-Greenstein, `p(μ) = (1-g²)(1+g²-2gμ)^{-3/2}`, `|g| < 1`.
    HenyeyGreenstein { g: R },
}

impl<R: Real> PhaseProfile<R> {
    pub fn eval(&self, mu: R) -> R {
        match *self {
            PhaseProfile::Isotropic => R::one(),
            PhaseProfile::Linear { b } => R::one() + b * mu,
            PhaseProfile::HenyeyGreenstein { g } => {
                let d = R::one() + g * g - R::two() * g * mu;
                (R::one() - g * g) / (d * d.sqrt())
            }
        }
    }
}

/// Scattering kernel `K(n, n') = p(n·n') / Z`, normalized so that
/// `∫_{S²} K(n', n) dn = 1` for every `n'` (scattering conserves photons
/// and does not change frequency). Symmetry `K(n, n') = K(n', n)` is
/// automatic for a profile of the inner product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringKernel<R> {
    pub profile: PhaseProfile<R>,
    norm: R,
}

/// Builds the normalized kernel: `Z = 2π ∫_{-1}^{1} p(μ) dμ` by high-order
/// Gauss-Legendre quadrature.
pub fn kernel_normalize<R: Real>(
    profile: PhaseProfile<R>,
) -> Result<ScatteringKernel<R>, PhysicsError> {
    let (xs, ws) = crate::geometry::gauss_legendre::<R>(64);
    let mut integral = R::zero();
    for (x, w) in xs.iter().zip(&ws) {
        let v = profile.eval(*x);
        if v < R::zero() {
            return Err(PhysicsError::NegativeProfile(x.to_f64().unwrap_or(f64::NAN)));
        }
        integral = integral + *w * v;
    }
    let norm = R::two() * R::PI() * integral;
    if norm <= R::zero() {
        return Err(PhysicsError::InvalidModel(
            "scattering profile integrates to zero".into(),
        ));
    }
    Ok(ScatteringKernel { profile, norm })
}

impl<R: Real> ScatteringKernel<R> {
    pub fn isotropic() -> Self {
        kernel_normalize(PhaseProfile::Isotropic).unwrap()
    }

    /// `K(n, n')`.
    pub fn eval(&self, n: Vec3<R>, n_prime: Vec3<R>) -> R {
        self.profile.eval(n.dot(n_prime)) / self.norm
    }

    /// `p(μ)/Z` directly from the cosine.
    pub fn eval_mu(&self, mu: R) -> R {
        self.profile.eval(mu) / self.norm
    }

    /// Worst deviation of `∫ K(n', n) dn` from 1 over all quadrature nodes
    /// `n'`, evaluated with the given sphere rule.
    pub fn normalization_defect(&self, quad: &SphereQuadrature<R>) -> R {
        let mut worst = R::zero();
        for &np in &quad.nodes {
            let integral = quad.integrate(|n| self.eval(np, n));
            worst = worst.max((integral - R::one()).abs());
        }
        worst
    }
}

/// Angular dependence of a separable boundary source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AngularShape<R> {
    Uniform,
    /// `a(n) = base + coeff (n·axis)`, nonnegative when `base ≥ |coeff|`.
    Dipole { axis: Vec3<R>, base: R, coeff: R },
}

impl<R: Real> AngularShape<R> {
    pub fn eval(&self, n: Vec3<R>) -> R {
        match *self {
            AngularShape::Uniform => R::one(),
            AngularShape::Dipole { axis, base, coeff } => base + coeff * n.dot(axis),
        }
    }
}

/// Spectral dependence of a separable boundary source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectrumShape<R> {
    /// `s(ν) = amp e^{-rate ν}` with `∫ s dν = amp / rate`.
    Exponential { amp: R, rate: R },
}

impl<R: Real> SpectrumShape<R> {
    pub fn eval(&self, nu: R) -> R {
        match *self {
            SpectrumShape::Exponential { amp, rate } => amp * (-rate * nu).exp(),
        }
    }

    pub fn integral(&self) -> R {
        match *self {
            SpectrumShape::Exponential { amp, rate } => amp / rate,
        }
    }
}

/// Incoming boundary radiation `g_ν(n) ≥ 0` prescribed for incoming
/// directions; `G(n) = ∫_0^∞ g_ν(n) dν`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundarySource<R> {
    Zero,
    /// Frequency-integrated constant influx; Grey modes only.
    GreyConstant { g: R },
    /// Blackbody influx at temperature `t0`: `g_ν = B_ν(T₀)`, `G = σT₀⁴`.
    Planckian { t0: R },
    /// `g_ν(n) = s(ν) a(n)`.
    Separable {
        spectrum: SpectrumShape<R>,
        angular: AngularShape<R>,
    },
}

impl<R: Real> BoundarySource<R> {
    /// Spectral influx `g_ν(n)`.
    pub fn g_nu(&self, consts: &PhysicalConstants<R>, nu: R, n: Vec3<R>) -> R {
        match *self {
            BoundarySource::Zero => R::zero(),
            BoundarySource::GreyConstant { .. } => panic!(
                "grey_constant boundary source has no spectral density; use a spectral source"
            ),
            BoundarySource::Planckian { t0 } => planck_unchecked(consts, nu, t0),
            BoundarySource::Separable { spectrum, angular } => {
                spectrum.eval(nu) * angular.eval(n)
            }
        }
    }

    pub fn has_spectral_density(&self) -> bool {
        !matches!(self, BoundarySource::GreyConstant { .. })
    }

    /// Closed-form `G(n)` where available.
    pub fn g_integrated(&self, consts: &PhysicalConstants<R>, n: Vec3<R>) -> R {
        match *self {
            BoundarySource::Zero => R::zero(),
            BoundarySource::GreyConstant { g } => g,
            BoundarySource::Planckian { t0 } => consts.sigma() * t0.powi(4),
            BoundarySource::Separable { spectrum, angular } => {
                spectrum.integral() * angular.eval(n)
            }
        }
    }
}

/// Complete radiative model: coefficients `α^a_ν(T) = Q_a(ν) α^a(T)` and
/// `α^s_ν(T) = Q_s(ν) α^s(T)`, scattering kernel, boundary influx, and the
/// declared temperature range from which coefficient bounds are derived.
#[derive(Debug, Clone)]
pub struct RadiativeModel<R> {
    pub constants: PhysicalConstants<R>,
    pub alpha_a: CoefficientFn<R>,
    pub alpha_s: CoefficientFn<R>,
    pub q_a: SpectrumProfile<R>,
    pub q_s: SpectrumProfile<R>,
    pub kernel: ScatteringKernel<R>,
    pub boundary: BoundarySource<R>,
    /// Declared temperature range `[0, t_max]` for coefficient bounds and
    /// the frequency grid reference temperature.
    pub t_max: R,
    pub freq: FrequencyGrid<R>,
}

impl<R: Real> RadiativeModel<R> {
    pub fn new(
        constants: PhysicalConstants<R>,
        alpha_a: CoefficientFn<R>,
        alpha_s: CoefficientFn<R>,
        q_a: SpectrumProfile<R>,
        q_s: SpectrumProfile<R>,
        kernel: ScatteringKernel<R>,
        boundary: BoundarySource<R>,
        t_max: R,
    ) -> Result<Self, PhysicsError> {
        alpha_a.validate("alpha_a")?;
        alpha_s.validate("alpha_s")?;
        if t_max <= R::zero() {
            return Err(PhysicsError::InvalidModel("t_max must be positive".into()));
        }
        let (amin, _) = alpha_a.bounds(R::zero(), t_max);
        if amin <= R::zero() {
            return Err(PhysicsError::InvalidModel(
                "absorption coefficient must be strictly positive on the declared range".into(),
            ));
        }
        let freq = FrequencyGrid::for_temperature(
            &constants,
            t_max,
            DEFAULT_FREQ_PANELS,
            DEFAULT_FREQ_PANEL_ORDER,
        );
        Ok(RadiativeModel {
            constants,
            alpha_a,
            alpha_s,
            q_a,
            q_s,
            kernel,
            boundary,
            t_max,
            freq,
        })
    }

    /// Grey pure-absorption model with constant coefficient and constant
    /// frequency-integrated influx.
    pub fn grey_constant(alpha: R, g: R) -> Self {
        Self::new(
            PhysicalConstants::default(),
            CoefficientFn::Constant { value: alpha },
            CoefficientFn::Constant { value: R::zero() },
            SpectrumProfile::Unit,
            SpectrumProfile::Unit,
            ScatteringKernel::isotropic(),
            BoundarySource::GreyConstant { g },
            R::of(4.0),
        )
        .unwrap()
    }

    pub fn is_grey(&self) -> bool {
        self.q_a.is_unit() && self.q_s.is_unit()
    }

    pub fn has_scattering(&self) -> bool {
        let (_, smax) = self.alpha_s.bounds(R::zero(), self.t_max);
        smax > R::zero()
    }

    pub fn alpha_a_bounds(&self) -> (R, R) {
        self.alpha_a.bounds(R::zero(), self.t_max)
    }

    pub fn alpha_s_bounds(&self) -> (R, R) {
        self.alpha_s.bounds(R::zero(), self.t_max)
    }

    /// Upper bound on the total extinction `‖Q_a α^a + Q_s α^s‖_∞`.
    pub fn extinction_sup(&self) -> R {
        let (_, amax) = self.alpha_a_bounds();
        let (_, smax) = self.alpha_s_bounds();
        amax * self.q_a.sup_norm() + smax * self.q_s.sup_norm()
    }

    /// Frequency-integrated boundary influx `G(n)`.
    pub fn g_integrated(&self, n: Vec3<R>) -> R {
        self.boundary.g_integrated(&self.constants, n)
    }

    /// `‖G‖_{L¹(S²)}` by sphere quadrature.
    pub fn g_l1(&self, quad: &SphereQuadrature<R>) -> R {
        quad.integrate(|n| self.g_integrated(n))
    }

    /// `‖G‖_{L∞(S²)}` over the quadrature nodes.
    pub fn g_sup(&self, quad: &SphereQuadrature<R>) -> R {
        quad.nodes
            .iter()
            .map(|&n| self.g_integrated(n))
            .fold(R::zero(), |a, b| a.max(b))
    }
}

/// `F(T) = 4π ∫ Q_a(ν) B_ν(T) dν`, the pseudo-Grey change of variables,
/// with its strictly monotone inverse on `[0, t_max]`.
#[derive(Debug, Clone)]
pub struct FMap<R> {
    consts: PhysicalConstants<R>,
    q_a: SpectrumProfile<R>,
    freq: FrequencyGrid<R>,
    pub t_max: R,
    u_max: R,
}

impl<R: Real> FMap<R> {
    pub fn for_model(model: &RadiativeModel<R>) -> Self {
        Self::new(model.constants, model.q_a, model.freq.clone(), model.t_max)
    }

    pub fn new(
        consts: PhysicalConstants<R>,
        q_a: SpectrumProfile<R>,
        freq: FrequencyGrid<R>,
        t_max: R,
    ) -> Self {
        let mut fm = FMap {
            consts,
            q_a,
            freq,
            t_max,
            u_max: R::zero(),
        };
        fm.u_max = fm.map(t_max);
        fm
    }

    /// `F(T)`, strictly increasing in `T`.
    pub fn map(&self, t: R) -> R {
        R::four_pi()
            * self
                .freq
                .integrate(|nu| self.q_a.eval(nu) * planck_unchecked(&self.consts, nu, t))
    }

    fn map_dt(&self, t: R) -> R {
        R::four_pi()
            * self
                .freq
                .integrate(|nu| self.q_a.eval(nu) * planck_dt(&self.consts, nu, t))
    }

    pub fn u_max(&self) -> R {
        self.u_max
    }

    /// Inverse by bracketed bisection with Newton acceleration; relative
    /// tolerance well below 1e-10.
    pub fn inverse(&self, u: R) -> Result<R, PhysicsError> {
        if u < R::zero() || u > self.u_max * (R::one() + R::of(1e-9)) {
            return Err(PhysicsError::OutOfRange {
                value: u.to_f64().unwrap_or(f64::NAN),
                max: self.u_max.to_f64().unwrap_or(f64::NAN),
            });
        }
        if u == R::zero() {
            return Ok(R::zero());
        }
        let u = u.min(self.u_max);
        let (mut lo, mut hi) = (R::zero(), self.t_max);
        // Seed with the Grey quartic inverse, then safeguarded Newton.
        let sigma = self.consts.sigma();
        let mut t = (u / (R::four_pi() * sigma)).powf(R::of(0.25)).min(self.t_max);
        for _ in 0..200 {
            let f = self.map(t) - u;
            if f > R::zero() {
                hi = t;
            } else {
                lo = t;
            }
            let df = self.map_dt(t);
            let mut next = if df > R::zero() { t - f / df } else { t };
            if !(next > lo && next < hi) {
                next = R::half() * (lo + hi);
            }
            let step = (next - t).abs();
            t = next;
            if step <= t.abs() * R::of(1e-14) + R::of(1e-300) || hi - lo <= t.abs() * R::of(1e-14)
            {
                break;
            }
        }
        Ok(t)
    }
}
