//! Known-parameter ARMA process models and their level-shift structure.
//!
//! Conventions follow Box–Jenkins with the signs fixed as
//!
//! ```text
//! Φ(B) x_t = Θ(B) a_t,   Φ(B) = 1 − φ₁B − … − φ_pB^p,   Θ(B) = 1 + θ₁B + … + θ_qB^q
//! ```
//!
//! and the AR(∞) form Π(B) x_t = a_t with Π(B) = Θ⁻¹(B) Φ(B) = 1 − Σ πᵢ Bⁱ.
//! The one-step forecast from the truncated AR form is x̂_t = Σ πᵢ x_{t−i}
//! (in deviations from the known mean), so in control the one-step prediction
//! errors e_t = x_t − x̂_t are iid N(0, σ_a²).
//!
//! A permanent level shift of size τ at time t* (the Chen–Tiao step
//! disturbance ω(B)/δ(B) = 1/(1−B)) moves the mean of the prediction errors
//! according to the response polynomial
//!
//! ```text
//! H(B) = Π(B) / (1−B) = Σ η_i B^i,   E e_{t*+i} = τ η_i,   η₀ = 1,
//! η_j = 1 − Σ_{i≤min(j, p*)} π_i.
//! ```
//!
//! For an AR(1) the η weights drop from 1 to the constant 1 − φ₁ after one
//! step, which is what makes the shift hard to see in residuals once the
//! forecast has adapted; the detector in [`crate::detector`] exists to
//! aggregate exactly this decaying evidence.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Default truncation tolerance for the AR(∞) representation.
pub const DEFAULT_PI_TOL: f64 = 1e-8;
/// Default hard cap on the truncation order p*.
pub const DEFAULT_PI_MAX_ORDER: usize = 500;

/// A stationary, invertible ARMA(p, q) model with known parameters.
#[derive(Clone, Debug)]
pub struct ArmaModel {
    ar: Vec<f64>,
    ma: Vec<f64>,
    sigma_a: f64,
    mean: f64,
}

impl ArmaModel {
    /// Builds a model, enforcing stationarity (all roots of Φ outside the
    /// unit circle), invertibility (same for Θ) and σ_a > 0. Roots with
    /// modulus ≤ 1 + 1e-9 are rejected.
    pub fn new(ar: Vec<f64>, ma: Vec<f64>, sigma_a: f64, mean: f64) -> Result<Self> {
        if !sigma_a.is_finite() || sigma_a <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "sigma_a must be a positive finite number, got {sigma_a}"
            )));
        }
        if !mean.is_finite() {
            return Err(Error::InvalidParameter("mean must be finite".into()));
        }
        if ar.iter().chain(ma.iter()).any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(
                "ARMA coefficients must be finite".into(),
            ));
        }
        if let Some(modulus) = root_inside_closed_unit_disc(&ar, -1.0) {
            return Err(Error::NonStationary { modulus });
        }
        if let Some(modulus) = root_inside_closed_unit_disc(&ma, 1.0) {
            return Err(Error::NonInvertible { modulus });
        }
        Ok(Self {
            ar,
            ma,
            sigma_a,
            mean,
        })
    }

    /// Convenience constructor for the AR(1) processes used throughout the
    /// experiment grids.
    pub fn ar1(phi1: f64, sigma_a: f64) -> Result<Self> {
        Self::new(vec![phi1], Vec::new(), sigma_a, 0.0)
    }

    /// Autoregressive coefficients φ₁..φ_p.
    pub fn ar_coeffs(&self) -> &[f64] {
        &self.ar
    }

    /// Moving-average coefficients θ₁..θ_q.
    pub fn ma_coeffs(&self) -> &[f64] {
        &self.ma
    }

    /// Innovation standard deviation σ_a.
    pub fn sigma_a(&self) -> f64 {
        self.sigma_a
    }

    /// Known process level.
    pub fn mean(&self) -> f64 {
        self.mean
    }
}

/// Returns the modulus of a root of `1 + sign·(c₁z + … + c_nz^n)` that lies
/// inside or on the (tolerance-widened) unit circle, if any. Roots are taken
/// from the companion matrix of the monic rescaling, which is robust for the
/// small polynomial degrees used here.
fn root_inside_closed_unit_disc(coeffs: &[f64], sign: f64) -> Option<f64> {
    // ascending coefficients of the polynomial, c[0] = 1
    let mut poly = vec![1.0];
    poly.extend(coeffs.iter().map(|c| sign * c));
    while poly.len() > 1 && poly[poly.len() - 1] == 0.0 {
        poly.pop();
    }
    let degree = poly.len() - 1;
    if degree == 0 {
        return None;
    }
    let lead = poly[degree];
    let mut companion = DMatrix::<f64>::zeros(degree, degree);
    for i in 1..degree {
        companion[(i, i - 1)] = 1.0;
    }
    for (i, c) in poly.iter().take(degree).enumerate() {
        companion[(i, degree - 1)] = -c / lead;
    }
    companion
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .find(|m| *m <= 1.0 + 1e-9)
}

/// Truncated AR(∞) representation Π(B) = 1 − Σ πᵢBⁱ of a model.
#[derive(Clone, Debug)]
pub struct PiWeights {
    pi: Vec<f64>,
    truncation_tol: f64,
    truncated: bool,
}

impl PiWeights {
    /// The retained coefficients π₁..π_{p*}.
    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    /// Truncation order p* (number of retained coefficients).
    pub fn p_star(&self) -> usize {
        self.pi.len()
    }

    /// Tolerance used to trim the tail.
    pub fn truncation_tol(&self) -> f64 {
        self.truncation_tol
    }

    /// True when the hard cap cut the series while the tail was still above
    /// the tolerance; downstream consumers should treat results as degraded.
    pub fn truncated(&self) -> bool {
        self.truncated
    }
}

/// Computes the AR(∞) weights by polynomial long division of Φ by Θ.
///
/// For a pure AR model the φ coefficients are returned verbatim. Otherwise
/// the series is computed to `max_order` and trailing coefficients below
/// `tol` in absolute value are trimmed; if the coefficient at the cap is
/// still at or above `tol`, the truncation flag is set.
pub fn ar_representation(model: &ArmaModel, tol: f64, max_order: usize) -> Result<PiWeights> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "truncation tolerance must be positive, got {tol}"
        )));
    }
    if max_order < model.ar.len() {
        return Err(Error::InvalidParameter(format!(
            "max_order {} is below the AR order {}",
            max_order,
            model.ar.len()
        )));
    }
    if model.ma.is_empty() {
        return Ok(PiWeights {
            pi: model.ar.clone(),
            truncation_tol: tol,
            truncated: false,
        });
    }
    // Long division of Φ(B) = 1 + Σ c_k B^k (c_k = −φ_k) by Θ(B) = 1 + Σ d_j B^j:
    // quotient coefficients g satisfy g_0 = 1, g_k = c_k − Σ_{j≤min(k,q)} d_j g_{k−j},
    // and π_k = −g_k.
    let p = model.ar.len();
    let q = model.ma.len();
    let mut g = vec![0.0; max_order + 1];
    g[0] = 1.0;
    for k in 1..=max_order {
        let mut acc = if k <= p { -model.ar[k - 1] } else { 0.0 };
        for j in 1..=q.min(k) {
            acc -= model.ma[j - 1] * g[k - j];
        }
        g[k] = acc;
    }
    let mut pi: Vec<f64> = g[1..].iter().map(|v| -v).collect();
    let truncated = pi.last().is_some_and(|v| v.abs() >= tol);
    while pi.last().is_some_and(|v| v.abs() < tol) {
        pi.pop();
    }
    Ok(PiWeights {
        pi,
        truncation_tol: tol,
        truncated,
    })
}

/// Level-shift response weights η₀, η₁, … of H(B) = Π(B)/(1−B).
///
/// The sequence is constant once the index passes p*, so the struct stores an
/// explicit head plus the tail constant and answers any index via
/// [`EtaWeights::get`].
#[derive(Clone, Debug)]
pub struct EtaWeights {
    values: Vec<f64>,
    tail: f64,
}

impl EtaWeights {
    /// η_j, valid for any j ≥ 0.
    pub fn get(&self, j: usize) -> f64 {
        self.values.get(j).copied().unwrap_or(self.tail)
    }

    /// Explicitly materialized head η₀..η_{L−1}.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of explicitly stored weights.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false: η₀ = 1 is stored unconditionally.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The constant value of the sequence beyond the stored head.
    pub fn tail_constant(&self) -> f64 {
        self.tail
    }

    /// η₁, the stable post-shift error mean in τ units for AR(1) models.
    pub fn eta1(&self) -> f64 {
        self.get(1)
    }
}

/// Computes η weights to the requested length (η₀ = 1; η_j = 1 − Σ_{i≤min(j,p*)} πᵢ).
pub fn eta_weights(pi: &PiWeights, length: usize) -> EtaWeights {
    let length = length.max(1);
    let mut values = Vec::with_capacity(length);
    let mut partial = 0.0;
    for j in 0..length {
        if j >= 1 && j <= pi.p_star() {
            partial += pi.pi()[j - 1];
        }
        values.push(1.0 - partial);
    }
    let tail = 1.0 - pi.pi().iter().sum::<f64>();
    EtaWeights { values, tail }
}

/// A level-shift disturbance: a permanent step of size τ in the process mean
/// starting at time t*.
#[derive(Clone, Copy, Debug)]
pub struct ShiftSpec {
    /// First shifted time index (1-based monitoring time).
    pub t_star: u64,
    /// Standardized shift size δ (bookkeeping; τ drives the simulation).
    pub delta: f64,
    /// Raw shift size in data units.
    pub tau: f64,
}

impl ShiftSpec {
    /// AR(1) parametrization τ = δ σ_a / √(1 − φ₁²), which makes δ the shift
    /// in process-standard-deviation units.
    pub fn for_ar1(delta: f64, phi1: f64, sigma_a: f64, t_star: u64) -> Result<Self> {
        if phi1.abs() >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "AR(1) shift parametrization needs |phi1| < 1, got {phi1}"
            )));
        }
        Ok(Self {
            t_star,
            delta,
            tau: delta * sigma_a / (1.0 - phi1 * phi1).sqrt(),
        })
    }

    /// Directly specified raw shift size for general models; `delta` is
    /// recorded as the shift in innovation-standard-deviation units.
    pub fn from_tau(tau: f64, sigma_a: f64, t_star: u64) -> Self {
        Self {
            t_star,
            delta: tau / sigma_a,
            tau,
        }
    }

    /// No disturbance (τ = 0); used for in-control cells.
    pub fn none() -> Self {
        Self {
            t_star: 1,
            delta: 0.0,
            tau: 0.0,
        }
    }
}

/// One-step prediction errors from the truncated AR form.
///
/// The first p* observations are warm-up and emit no error; errors are
/// returned for t = p*+1 .. n (1-based), each computed as
/// e_t = (x_t − mean) − Σ πᵢ (x_{t−i} − mean).
pub fn one_step_errors(pi: &PiWeights, observations: &[f64], mean: f64) -> Result<Vec<f64>> {
    let p_star = pi.p_star();
    if observations.len() < p_star + 1 {
        return Err(Error::InsufficientHistory {
            needed: p_star + 1,
            got: observations.len(),
        });
    }
    let mut errors = Vec::with_capacity(observations.len() - p_star);
    for t in p_star..observations.len() {
        let mut e = observations[t] - mean;
        for (i, w) in pi.pi().iter().enumerate() {
            e -= w * (observations[t - 1 - i] - mean);
        }
        errors.push(e);
    }
    Ok(errors)
}

/// Simulates one-step prediction errors directly from their post-shift law:
/// e_t ~ N(μ_t, σ_a²) with μ_t = 0 before t* and μ_t = τ η_{t−t*} from t* on.
/// Times run t = 1..=horizon.
pub fn simulate_errors<R: Rng + ?Sized>(
    eta: &EtaWeights,
    shift: &ShiftSpec,
    horizon: usize,
    sigma_a: f64,
    rng: &mut R,
) -> Vec<f64> {
    let mut errors = Vec::with_capacity(horizon);
    for t in 1..=horizon as u64 {
        let mu = if t >= shift.t_star {
            shift.tau * eta.get((t - shift.t_star) as usize)
        } else {
            0.0
        };
        let z: f64 = rng.sample(StandardNormal);
        errors.push(mu + sigma_a * z);
    }
    errors
}

/// Simulates `n` observations of the raw process after a stationarity
/// burn-in, via the defining ARMA recursion.
pub fn simulate_process<R: Rng + ?Sized>(
    model: &ArmaModel,
    n: usize,
    burn_in: usize,
    rng: &mut R,
) -> Vec<f64> {
    let p = model.ar.len();
    let q = model.ma.len();
    let total = n + burn_in;
    let mut x_dev = vec![0.0; p]; // most recent first
    let mut a_hist = vec![0.0; q];
    let mut out = Vec::with_capacity(n);
    for t in 0..total {
        let a: f64 = model.sigma_a * rng.sample::<f64, _>(StandardNormal);
        let mut dev = a;
        for (i, phi) in model.ar.iter().enumerate() {
            dev += phi * x_dev[i];
        }
        for (j, theta) in model.ma.iter().enumerate() {
            dev += theta * a_hist[j];
        }
        if p > 0 {
            x_dev.rotate_right(1);
            x_dev[0] = dev;
        }
        if q > 0 {
            a_hist.rotate_right(1);
            a_hist[0] = a;
        }
        if t >= burn_in {
            out.push(model.mean + dev);
        }
    }
    out
}
