//! Model parameters, torus geometry, profile and attachment functions, and
//! the closed-form regime arithmetic (distance prefactor, layer parameters).

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{arg, Result, SpamError};

/// Scalar parameters of the spatial preferential attachment model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Slope of the affine attachment rule, in (0, 1).
    pub gamma: f64,
    /// Offset of the affine attachment rule, > 0.
    pub gamma_prime: f64,
    /// Profile decay exponent, > 1.
    pub delta: f64,
    pub dimension: u32,
    /// Torus volume `n`; the side length is `n^(1/d)`.
    pub volume: f64,
    /// Poisson intensity (1 in the standard model).
    pub intensity: f64,
    pub seed: u64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            gamma: 0.8,
            gamma_prime: 1.0,
            delta: 1.2,
            dimension: 1,
            volume: 1000.0,
            intensity: 1.0,
            seed: 0,
        }
    }
}

impl ModelParams {
    pub fn new(gamma: f64, gamma_prime: f64, delta: f64, dimension: u32, volume: f64) -> Self {
        ModelParams {
            gamma,
            gamma_prime,
            delta,
            dimension,
            volume,
            ..Default::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_intensity(mut self, intensity: f64) -> Self {
        self.intensity = intensity;
        self
    }

    /// Every violated invariant, one message each.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            out.push(format!("gamma = {} must lie in (0,1)", self.gamma));
        }
        if !(self.gamma_prime > 0.0 && self.gamma_prime.is_finite()) {
            out.push(format!("gamma_prime = {} must be > 0", self.gamma_prime));
        }
        if !(self.delta > 1.0 && self.delta.is_finite()) {
            out.push(format!("delta = {} must be > 1", self.delta));
        }
        if self.dimension < 1 {
            out.push("dimension must be >= 1".to_string());
        }
        if !(self.volume > 0.0 && self.volume.is_finite()) {
            out.push(format!("volume n = {} must be > 0", self.volume));
        }
        if !(self.intensity > 0.0 && self.intensity.is_finite()) {
            out.push(format!("intensity = {} must be > 0", self.intensity));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(SpamError::Argument(v.join("; ")))
        }
    }

    pub fn side(&self) -> f64 {
        self.volume.powf(1.0 / self.dimension as f64)
    }

    pub fn torus(&self) -> TorusBox {
        TorusBox {
            dimension: self.dimension as usize,
            side: self.side(),
        }
    }

    pub fn profile(&self) -> Result<ProfileFunction> {
        ProfileFunction::power(self.delta)
    }

    pub fn attachment(&self) -> Result<AttachmentRule> {
        AttachmentRule::affine(self.gamma, self.gamma_prime)
    }

    pub fn kernel(&self) -> Result<ConnectionKernel> {
        Ok(ConnectionKernel {
            profile: self.profile()?,
            attachment: self.attachment()?,
            dimension: self.dimension as i32,
        })
    }

    /// Short stable fingerprint used to tag outputs.
    pub fn fingerprint(&self) -> String {
        format!(
            "g{}_gp{}_d{}_dim{}_n{}_l{}",
            self.gamma, self.gamma_prime, self.delta, self.dimension, self.volume, self.intensity
        )
    }
}

/// Flat torus `[-side/2, side/2)^d` with periodic boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusBox {
    pub dimension: usize,
    pub side: f64,
}

impl TorusBox {
    pub fn new(dimension: usize, side: f64) -> Result<Self> {
        if dimension == 0 {
            return arg("torus dimension must be >= 1");
        }
        if !(side > 0.0 && side.is_finite()) {
            return arg(format!("torus side {side} must be > 0"));
        }
        Ok(TorusBox { dimension, side })
    }

    #[inline]
    pub fn wrapped_delta(&self, a: f64, b: f64) -> f64 {
        let d = (a - b).abs();
        d.min(self.side - d)
    }

    /// Unchecked torus distance; both slices must have `dimension` entries.
    #[inline]
    pub fn dist(&self, x: &[f64], y: &[f64]) -> f64 {
        if self.dimension == 1 {
            return self.wrapped_delta(x[0], y[0]);
        }
        let mut acc = 0.0;
        for (a, b) in x.iter().zip(y) {
            let w = self.wrapped_delta(*a, *b);
            acc += w * w;
        }
        acc.sqrt()
    }

    /// Largest possible torus distance, `side * sqrt(d) / 2`.
    pub fn diameter(&self) -> f64 {
        self.side * (self.dimension as f64).sqrt() / 2.0
    }

    /// Maps an arbitrary coordinate into the fundamental domain.
    pub fn wrap(&self, c: f64) -> f64 {
        let h = self.side / 2.0;
        let w = (c + h).rem_euclid(self.side) - h;
        if w >= h {
            -h
        } else {
            w
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let h = self.side / 2.0;
        x.len() == self.dimension && x.iter().all(|c| *c >= -h && *c < h)
    }
}

pub fn torus_distance(x: &[f64], y: &[f64], torus: &TorusBox) -> Result<f64> {
    if x.len() != torus.dimension || y.len() != torus.dimension {
        return arg(format!(
            "dimension mismatch: |x| = {}, |y| = {}, d = {}",
            x.len(),
            y.len(),
            torus.dimension
        ));
    }
    Ok(torus.dist(x, y))
}

/// `kappa = ((delta - 1) / (2 delta))^delta`, the constant making the
/// capped power profile integrate to 1/2 on the half line.
pub fn profile_kappa(delta: f64) -> Result<f64> {
    if !(delta > 1.0) || !delta.is_finite() {
        return Err(SpamError::DivergentIntegral(delta));
    }
    Ok(((delta - 1.0) / (2.0 * delta)).powf(delta))
}

pub type SlowlyVarying = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum ProfileKind {
    Power { delta: f64 },
    /// `min(kappa * L(x) * x^-delta, 1)` with a user supplied slowly varying `L`.
    SlowlyVarying { delta: f64, slowly: SlowlyVarying },
}

impl fmt::Debug for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileKind::Power { delta } => write!(f, "Power {{ delta: {delta} }}"),
            ProfileKind::SlowlyVarying { delta, .. } => {
                write!(f, "SlowlyVarying {{ delta: {delta}, .. }}")
            }
        }
    }
}

/// Decreasing profile `phi: [0, inf) -> [0, 1]` normalised to `int phi = 1/2`.
#[derive(Debug, Clone)]
pub struct ProfileFunction {
    pub kind: ProfileKind,
    pub kappa: f64,
    kink: f64,
}

impl ProfileFunction {
    pub fn power(delta: f64) -> Result<Self> {
        let kappa = profile_kappa(delta)?;
        Ok(ProfileFunction {
            kind: ProfileKind::Power { delta },
            kappa,
            kink: kappa.powf(1.0 / delta),
        })
    }

    /// Profile `min(kappa L(x) x^-delta, 1)`; `kappa` is found by bisection
    /// against a numerical integral. `L` must keep the product nonincreasing.
    pub fn slowly_varying(delta: f64, slowly: SlowlyVarying) -> Result<Self> {
        if !(delta > 1.0) || !delta.is_finite() {
            return Err(SpamError::DivergentIntegral(delta));
        }
        let raw = |x: f64| slowly(x) * x.powf(-delta);
        // monotonicity and positivity on a log grid
        let mut prev = f64::INFINITY;
        for i in 0..=400 {
            let x = 10f64.powf(-6.0 + 12.0 * i as f64 / 400.0);
            let v = raw(x);
            if !(v > 0.0) || !v.is_finite() {
                return arg(format!("slowly varying factor gives invalid value {v} at x = {x}"));
            }
            if v > prev * (1.0 + 1e-12) {
                return arg(format!("profile not nonincreasing near x = {x}"));
            }
            prev = v;
        }
        let integral = |kappa: f64| {
            let kink = find_kink(&|x| kappa * raw(x));
            kink + tail_integral(&|x| kappa * raw(x), kink, delta)
        };
        let (mut lo, mut hi) = (1e-12_f64, 1.0_f64);
        while integral(hi) < 0.5 {
            hi *= 2.0;
            if hi > 1e12 {
                return arg("could not bracket the normalising constant");
            }
        }
        while integral(lo) > 0.5 {
            lo /= 2.0;
            if lo < 1e-300 {
                return arg("could not bracket the normalising constant");
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if integral(mid) < 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
            if (hi - lo) <= 1e-15 * hi {
                break;
            }
        }
        let kappa = 0.5 * (lo + hi);
        let kink = find_kink(&|x| kappa * raw(x));
        Ok(ProfileFunction {
            kind: ProfileKind::SlowlyVarying { delta, slowly },
            kappa,
            kink,
        })
    }

    pub fn delta(&self) -> f64 {
        match &self.kind {
            ProfileKind::Power { delta } | ProfileKind::SlowlyVarying { delta, .. } => *delta,
        }
    }

    /// Point where the cap at 1 stops binding.
    pub fn kink(&self) -> f64 {
        self.kink
    }

    /// Unchecked evaluation; `x` must be `>= 0` (infinite is allowed).
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        if x <= self.kink {
            return 1.0;
        }
        if x.is_infinite() {
            return 0.0;
        }
        let v = match &self.kind {
            ProfileKind::Power { delta } => self.kappa * x.powf(-delta),
            ProfileKind::SlowlyVarying { delta, slowly } => self.kappa * slowly(x) * x.powf(-delta),
        };
        v.min(1.0)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return arg(format!("profile argument {x} must be >= 0"));
        }
        Ok(self.value(x))
    }

    /// `int_0^inf phi` by quadrature, independent of the closed form.
    pub fn integral(&self) -> f64 {
        self.kink + tail_integral(&|x| self.value(x), self.kink, self.delta())
    }
}

fn find_kink(g: &dyn Fn(f64) -> f64) -> f64 {
    // g is decreasing; locate g(x) = 1
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while g(hi) > 1.0 {
        hi *= 2.0;
        if hi > 1e300 {
            return hi;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// `int_a^inf g` via `x = a u^(-1/(delta-1))`, which makes the integrand of a
/// pure power tail constant in `u`.
fn tail_integral(g: &dyn Fn(f64) -> f64, a: f64, delta: f64) -> f64 {
    let a = a.max(1e-300);
    let p = 1.0 / (delta - 1.0);
    let h = |u: f64| {
        if u <= 0.0 {
            0.0
        } else {
            let x = a * u.powf(-p);
            g(x) * p * x / u
        }
    };
    quadrature::integrate(h, 0.0, 1.0, 1e-13).integral
}

/// Preferential attachment rule `f: Z>=0 -> (0, inf)`.
#[derive(Debug, Clone, PartialEq)]
pub enum AttachmentRule {
    Affine { gamma: f64, gamma_prime: f64 },
    /// Tabulated values `f(0..len)`, continued linearly with slope `gamma`.
    General { table: Vec<f64>, gamma: f64 },
}

impl AttachmentRule {
    pub fn affine(gamma: f64, gamma_prime: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return arg(format!("gamma = {gamma} must lie in (0,1)"));
        }
        if !(gamma_prime > 0.0) {
            return arg(format!("gamma_prime = {gamma_prime} must be > 0"));
        }
        Ok(AttachmentRule::Affine { gamma, gamma_prime })
    }

    pub fn general(table: Vec<f64>, gamma: f64) -> Result<Self> {
        if table.is_empty() {
            return arg("attachment table must be nonempty");
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return arg(format!("asymptotic slope {gamma} must lie in (0,1)"));
        }
        if table[0] <= 0.0 || table.windows(2).any(|w| w[1] < w[0]) {
            return arg("attachment table must be positive and nondecreasing");
        }
        Ok(AttachmentRule::General { table, gamma })
    }

    #[inline]
    pub fn value(&self, z: u32) -> f64 {
        match self {
            AttachmentRule::Affine { gamma, gamma_prime } => gamma * z as f64 + gamma_prime,
            AttachmentRule::General { table, gamma } => {
                let z = z as usize;
                if z < table.len() {
                    table[z]
                } else {
                    table[table.len() - 1] + gamma * (z + 1 - table.len()) as f64
                }
            }
        }
    }

    pub fn eval(&self, z: i64) -> Result<f64> {
        if z < 0 {
            return arg(format!("in-degree {z} must be >= 0"));
        }
        Ok(self.value(z.min(u32::MAX as i64) as u32))
    }

    pub fn slope(&self) -> f64 {
        match self {
            AttachmentRule::Affine { gamma, .. } | AttachmentRule::General { gamma, .. } => *gamma,
        }
    }
}

/// Profile, attachment rule and dimension bundled for the hot path.
#[derive(Debug, Clone)]
pub struct ConnectionKernel {
    pub profile: ProfileFunction,
    pub attachment: AttachmentRule,
    pub dimension: i32,
}

impl ConnectionKernel {
    /// `phi(t * dist^d / f(z))` without argument checks.
    #[inline]
    pub fn prob(&self, older_indegree: u32, dist: f64, t: f64) -> f64 {
        let r = if self.dimension == 1 {
            dist
        } else {
            dist.powi(self.dimension)
        };
        self.profile.value(t * r / self.attachment.value(older_indegree))
    }
}

pub fn connection_probability(
    older_indegree: i64,
    distance: f64,
    t: f64,
    kernel: &ConnectionKernel,
) -> Result<f64> {
    if older_indegree < 0 {
        return arg(format!("in-degree {older_indegree} must be >= 0"));
    }
    if !(distance >= 0.0) {
        return arg(format!("distance {distance} must be >= 0"));
    }
    if !(t > 0.0 && t <= 1.0) {
        return arg(format!("birth time {t} must lie in (0,1]"));
    }
    Ok(kernel.prob(older_indegree.min(u32::MAX as i64) as u32, distance, t))
}

/// Volume of the unit ball in `R^d`.
pub fn ball_volume(d: i64) -> Result<f64> {
    if d < 1 {
        return arg(format!("dimension {d} must be >= 1"));
    }
    let (mut even, mut odd) = (1.0_f64, 2.0_f64);
    for k in 2..=d {
        let next = if k % 2 == 0 { even } else { odd } * 2.0 * std::f64::consts::PI / k as f64;
        if k % 2 == 0 {
            even = next;
        } else {
            odd = next;
        }
    }
    Ok(if d % 2 == 0 { even } else { odd })
}

/// Robustness, distance prefactor and layer parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub robust: bool,
    pub rho: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub nu: Option<f64>,
    /// Final layer index; 0 when no `k >= 1` qualifies (see `k_empty`).
    pub k: u32,
    pub k_empty: bool,
}

impl RegimeReport {
    pub fn rho(&self) -> Result<f64> {
        self.rho
            .ok_or_else(|| SpamError::Regime("distance prefactor only defined when gamma > delta/(1+delta)".into()))
    }

    pub fn layer_params(&self) -> Result<(f64, f64, f64)> {
        match (self.alpha, self.beta, self.nu) {
            (Some(a), Some(b), Some(n)) => Ok((a, b, n)),
            _ => Err(SpamError::Regime("layer parameters need the robust regime".into())),
        }
    }

    /// `(4 + eps) * rho * ln ln n`.
    pub fn distance_budget(&self, volume: f64, epsilon: f64) -> Result<f64> {
        Ok((4.0 + epsilon) * self.rho()? * volume.ln().ln())
    }
}

pub fn is_robust(gamma: f64, delta: f64) -> bool {
    gamma > delta / (1.0 + delta)
}

/// Largest `k >= 1` with `n^(-alpha^-k) <= (ln n)^(-1/nu)`, or `None`.
pub fn final_layer_index(volume: f64, alpha: f64, nu: f64) -> Option<u32> {
    final_layer_index_ln(volume.ln(), alpha, nu)
}

/// As [`final_layer_index`] but taking `ln n`, for volumes beyond `f64` range.
pub fn final_layer_index_ln(ln_n: f64, alpha: f64, nu: f64) -> Option<u32> {
    let lnln = ln_n.ln();
    if !(ln_n > 0.0) || !(lnln > 0.0) || !(alpha > 1.0) || !(nu > 0.0) {
        return None;
    }
    // alpha^-k * ln n >= ln ln n / nu
    let holds = |k: u32| alpha.powi(-(k as i32)) * ln_n >= lnln / nu;
    if !holds(1) {
        return None;
    }
    let guess = ((nu * ln_n / lnln).ln() / alpha.ln()).floor().max(1.0) as u32;
    let mut k = guess;
    while k > 1 && !holds(k) {
        k -= 1;
    }
    while holds(k + 1) {
        k += 1;
    }
    Some(k)
}

pub fn regime_report(
    params: &ModelParams,
    alpha_choice: Option<f64>,
    beta_choice: Option<f64>,
) -> Result<RegimeReport> {
    params.validate()?;
    let (g, dl) = (params.gamma, params.delta);
    if !is_robust(g, dl) {
        if alpha_choice.is_some() || beta_choice.is_some() {
            return Err(SpamError::Regime(format!(
                "no admissible alpha, beta outside the robust regime (gamma = {g}, delta = {dl})"
            )));
        }
        return Ok(RegimeReport {
            robust: false,
            rho: None,
            alpha: None,
            beta: None,
            nu: None,
            k: 0,
            k_empty: true,
        });
    }
    let ratio = g / (dl * (1.0 - g));
    let rho = 1.0 / ratio.ln();
    let alpha = match alpha_choice {
        Some(a) if a > 1.0 && a < ratio => a,
        Some(a) => return arg(format!("alpha = {a} outside (1, {ratio})")),
        None => 0.5 * (1.0 + ratio),
    };
    let beta_hi = g / dl + alpha * g;
    let beta = match beta_choice {
        Some(b) if b > alpha && b < beta_hi => b,
        Some(b) => return arg(format!("beta = {b} outside ({alpha}, {beta_hi})")),
        None => 0.5 * (alpha + beta_hi),
    };
    let d = params.dimension as f64;
    let nu = (-beta * dl + g + alpha * g * dl).min((beta - alpha) / d);
    let k = final_layer_index(params.volume, alpha, nu);
    Ok(RegimeReport {
        robust: true,
        rho: Some(rho),
        alpha: Some(alpha),
        beta: Some(beta),
        nu: Some(nu),
        k: k.unwrap_or(0),
        k_empty: k.is_none(),
    })
}
