//! Transport-cost evaluators.
//!
//! On the line every even convex cost is minimized by the quantile coupling,
//! so κ_ψ(μ, ν) = ∫₀¹ ψ(F⁻¹(u) − G⁻¹(u)) du. Three evaluation routes:
//!
//! * both laws atomic — the integrand is piecewise constant on the common
//!   refinement of the two quantile step functions and the integral is an
//!   exact finite sum (`PiecewiseLattice`);
//! * otherwise — substitute `u = Φ(z)` and integrate
//!   `ψ(F⁻¹(Φ(z)) − G⁻¹(Φ(z))) φ(z)` adaptively over |z| ≤ 8.5, with cells
//!   pre-split at every quantile breakpoint and an analytic remainder bound
//!   for the truncated tails built from the quadratic envelope of the cost
//!   (`ZSpaceQuadrature`);
//! * identical inputs — zero (`ClosedForm`).
//!
//! The same machinery evaluates weighted costs `∫ g(u)|F⁻¹ − G⁻¹| du`,
//! signed functionals `∫ g(u) ℓ(F⁻¹ − G⁻¹) du`, and the convex-dual witness
//! that certifies a lower bound on κ_φ for smoothed laws.

use crate::cost::CostFunction;
use crate::dist::{u_of_z, Distribution, Z_CUT};
use crate::quad;
use crate::special::{norm_quantile, norm_sf, phi};
use crate::{Error, Result};

/// How a transport value was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Method {
    ZSpaceQuadrature,
    PiecewiseLattice,
    ClosedForm,
}

/// A transport-cost value with an attached accuracy budget.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TransportReport {
    pub value: f64,
    pub abs_error: f64,
    pub method: Method,
    pub evaluations: u64,
}

impl TransportReport {
    fn closed(value: f64) -> Self {
        TransportReport {
            value,
            abs_error: 0.0,
            method: Method::ClosedForm,
            evaluations: 0,
        }
    }
}

/// Local quadrature tolerance per cell.
const LOCAL_TOL: f64 = 1e-10;
/// Global evaluation budget per transport integral.
const MAX_EVALS: u64 = 1_000_000;

/// Quantile breakpoints (interior u-values where the quantile function jumps
/// or kinks).
fn quantile_breaks(d: &Distribution) -> Vec<f64> {
    let cums = |n: usize, cum_at: &dyn Fn(usize) -> f64| -> Vec<f64> {
        (0..n.saturating_sub(1)).map(cum_at).collect()
    };
    match d {
        Distribution::Lattice(law) => cums(law.len(), &|i| law.cum_at(i)),
        Distribution::Discrete(law) => cums(law.points().len(), &|i| law.cum_at(i)),
        Distribution::LatticeUniformShift(law) => {
            // quantile is piecewise linear with kinks at every cum value
            let mut v = cums(law.len(), &|i| law.cum_at(i));
            v.extend((0..law.len()).map(|i| law.cum_before(i)));
            v
        }
        _ => Vec::new(),
    }
}

/// Fast quantile-at-gaussian-level closure: for normal laws `F⁻¹(Φ(z))`
/// collapses to `m + s z`, avoiding the inverse-cdf round trip.
fn quantile_at_z(d: &Distribution) -> Box<dyn Fn(f64) -> f64 + '_> {
    match d {
        Distribution::Normal { mean, variance } => {
            let (m, s) = (*mean, variance.sqrt());
            Box::new(move |z| m + s * z)
        }
        _ => Box::new(move |z| d.quantile(u_of_z(z))),
    }
}

fn merged_cells(f: &Distribution, g: &Distribution) -> Vec<f64> {
    let mut zs: Vec<f64> = quantile_breaks(f)
        .into_iter()
        .chain(quantile_breaks(g))
        .filter(|&u| u > 1e-16 && u < 1.0 - 1e-16)
        .map(norm_quantile)
        .filter(|z| z.abs() < Z_CUT)
        .collect();
    zs.push(-Z_CUT);
    zs.push(Z_CUT);
    zs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    zs.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    zs
}

/// Analytic bound on the u-mass not covered by the z-space integral,
/// via `c(d) <= α d² + β` and `d² <= 2 F⁻¹² + 2 G⁻¹²`: per law,
/// `∫_{tails} Q(u)² du <= E[X² 1_{X outside [Q(u_lo), Q(u_hi)]}]
///   `+ mass·(Q(u_lo)² + Q(u_hi)²)` with strict-inequality truncated moments,
/// so boundary atoms are charged only their actual tail mass.
fn tail_remainder(c: &CostFunction, f: &Distribution, g: &Distribution) -> Result<f64> {
    let (alpha, beta) = c.quadratic_envelope().ok_or_else(|| {
        Error::InvalidParameter(
            "cost grows faster than quadratically; no tail envelope available".into(),
        )
    })?;
    let u_lo = u_of_z(-Z_CUT);
    let u_hi = u_of_z(Z_CUT);
    // per-side u-mass outside the effective integration range
    let mass = norm_sf(Z_CUT).max(1.0 - u_hi);
    let law_tail = |d: &Distribution| {
        let qa = d.quantile(u_lo);
        let qb = d.quantile(u_hi);
        d.second_moment_outside(qa, qb) + mass * (qa * qa + qb * qb)
    };
    Ok(2.0 * alpha * (law_tail(f) + law_tail(g)) + beta * 2.0 * mass)
}

fn exact_discrete(
    c: &CostFunction,
    f: &crate::lattice::DiscreteLaw,
    g: &crate::lattice::DiscreteLaw,
    defect: f64,
) -> TransportReport {
    let fa = f.points();
    let ga = g.points();
    let mut value = 0.0;
    let mut comp = 0.0;
    let mut evaluations = 0u64;
    let (mut ia, mut ig) = (0usize, 0usize);
    let mut u_prev = 0.0;
    while ia < fa.len() && ig < ga.len() {
        let cf = f.cum_at(ia);
        let cg = g.cum_at(ig);
        let next = cf.min(cg);
        let w = next - u_prev;
        if w > 0.0 {
            let term = w * c.eval(fa[ia].0 - ga[ig].0);
            // Neumaier accumulation
            let t = value + term;
            if value.abs() >= term.abs() {
                comp += (value - t) + term;
            } else {
                comp += (term - t) + value;
            }
            value = t;
            evaluations += 1;
        }
        if cf <= next {
            ia += 1;
        }
        if cg <= next {
            ig += 1;
        }
        u_prev = next;
    }
    let value = value + comp;
    let span = fa.last().unwrap().0.abs().max(fa[0].0.abs())
        + ga.last().unwrap().0.abs().max(ga[0].0.abs());
    let abs_error = defect * c.eval(span) + 1e-15 * evaluations as f64 * value.abs().max(1.0);
    TransportReport {
        value: value.max(0.0),
        abs_error,
        method: Method::PiecewiseLattice,
        evaluations,
    }
}

/// Transport cost `κ_c(F, G) = ∫₀¹ c(F⁻¹(u) − G⁻¹(u)) du`.
pub fn kappa(c: &CostFunction, f: &Distribution, g: &Distribution) -> Result<TransportReport> {
    if f == g {
        return Ok(TransportReport::closed(0.0));
    }
    // integrability pre-check at extreme quantile levels
    for u in [1e-8, 1.0 - 1e-8] {
        let d = f.quantile(u) - g.quantile(u);
        if !c.eval(d).is_finite() {
            return Err(Error::Divergent(format!(
                "cost of quantile difference at u = {u} is not finite"
            )));
        }
    }
    if let (Some(df), Some(dg)) = (f.as_discrete(), g.as_discrete()) {
        let defect = f.as_lattice().map_or(0.0, |l| l.mass_defect())
            + g.as_lattice().map_or(0.0, |l| l.mass_defect());
        return Ok(exact_discrete(c, &df, &dg, defect));
    }
    let qf = quantile_at_z(f);
    let qg = quantile_at_z(g);
    let cells = merged_cells(f, g);
    let r = quad::adaptive_cells(
        |z| c.eval(qf(z) - qg(z)) * phi(z),
        &cells,
        LOCAL_TOL,
        MAX_EVALS,
    )
    .map_err(|e| Error::Quadrature(e.to_string()))?;
    let tail = tail_remainder(c, f, g)?;
    Ok(TransportReport {
        value: r.value.max(0.0),
        abs_error: r.abs_error + tail,
        method: Method::ZSpaceQuadrature,
        evaluations: r.evaluations,
    })
}

/// `W_p = κ_p^{1/p}` for the power cost `|x|^p`.
pub fn wasserstein_p(p: f64, f: &Distribution, g: &Distribution) -> Result<TransportReport> {
    let cost = crate::cost::power_p(p)?;
    let r = kappa(&cost, f, g)?;
    let value = r.value.powf(1.0 / p);
    // first-order sensitivity of the root
    let abs_error = if r.value > 0.0 {
        r.abs_error * value / (p * r.value)
    } else {
        r.abs_error.powf(1.0 / p)
    };
    Ok(TransportReport {
        value,
        abs_error,
        method: r.method,
        evaluations: r.evaluations,
    })
}

/// `W_φ = κ_φ^{1/2}` for a class-Ψ cost (a distance on laws with `μ(φ) < ∞`).
pub fn w_phi(c: &CostFunction, f: &Distribution, g: &Distribution) -> Result<TransportReport> {
    if !c.is_class_psi() {
        return Err(Error::InvalidParameter(
            "w_phi needs a class-Ψ cost (use wasserstein_p for power costs)".into(),
        ));
    }
    let r = kappa(c, f, g)?;
    let value = r.value.sqrt();
    let abs_error = if r.value > 0.0 {
        0.5 * r.abs_error / value
    } else {
        r.abs_error.sqrt()
    };
    Ok(TransportReport {
        value,
        abs_error,
        method: r.method,
        evaluations: r.evaluations,
    })
}

fn tail_probe(integrand: &dyn Fn(f64) -> f64) -> f64 {
    let mut worst: f64 = 0.0;
    for &z in &[-8.4, -8.0, -7.5, 7.5, 8.0, 8.4] {
        worst = worst.max(integrand(z).abs());
    }
    // crude envelope: peak magnitude times the remaining z-length it could act on
    worst * 2.0
}

/// Weighted cost `κ_{1,g}(F, G) = ∫₀¹ g(u) |F⁻¹(u) − G⁻¹(u)| du`.
///
/// The weight must stay integrable against the quantile difference; weights
/// blowing up at the endpoints faster than the Gaussian density decays are
/// flagged as divergent.
pub fn weighted_cost(
    weight: &dyn Fn(f64) -> f64,
    f: &Distribution,
    g: &Distribution,
) -> Result<TransportReport> {
    let qf = quantile_at_z(f);
    let qg = quantile_at_z(g);
    let integrand = |z: f64| weight(u_of_z(z)) * (qf(z) - qg(z)).abs() * phi(z);
    let probe = tail_probe(&integrand);
    if !probe.is_finite() || probe > 1e-6 {
        return Err(Error::Divergent(format!(
            "weight is too heavy near the endpoints (tail envelope {probe:.3e})"
        )));
    }
    let cells = merged_cells(f, g);
    let r = quad::adaptive_cells(&integrand, &cells, LOCAL_TOL, MAX_EVALS)
        .map_err(|e| Error::Quadrature(e.to_string()))?;
    Ok(TransportReport {
        value: r.value.max(0.0),
        abs_error: r.abs_error + probe,
        method: Method::ZSpaceQuadrature,
        evaluations: r.evaluations,
    })
}

/// Signed functional `∫₀¹ g(u) ℓ(F⁻¹(u) − G⁻¹(u)) du` for Lipschitz `ℓ`.
/// Returns `(value, abs_error)`; the value may be negative.
pub fn signed_functional(
    weight: &dyn Fn(f64) -> f64,
    ell: &dyn Fn(f64) -> f64,
    f: &Distribution,
    g: &Distribution,
) -> Result<(f64, f64)> {
    let qf = quantile_at_z(f);
    let qg = quantile_at_z(g);
    let integrand = |z: f64| weight(u_of_z(z)) * ell(qf(z) - qg(z)) * phi(z);
    let probe = tail_probe(&integrand);
    if !probe.is_finite() || probe > 1e-6 {
        return Err(Error::Divergent(format!(
            "weighted signed integrand too heavy near endpoints ({probe:.3e})"
        )));
    }
    let cells = merged_cells(f, g);
    let r = quad::adaptive_cells(&integrand, &cells, LOCAL_TOL, MAX_EVALS)
        .map_err(|e| Error::Quadrature(e.to_string()))?;
    Ok((r.value, r.abs_error + probe))
}

// ---------------------------------------------------------------------------
// convex-dual witness
// ---------------------------------------------------------------------------

/// The explicitly constructed dual test function `h` with
/// `h'(t) = sign(G−F)(t) · φ'(2 d(t, A))`, where `A` is the zero set of
/// `H = G_cdf − F_cdf`.
pub struct WitnessFunction {
    cost: CostFunction,
    f: Distribution,
    g: Distribution,
    zeros: Vec<f64>,
    identical: bool,
}

impl WitnessFunction {
    /// Distance from `t` to the located zero set of `H`.
    pub fn zero_set_probe(&self, t: f64) -> f64 {
        if self.identical {
            return 0.0;
        }
        self.zeros
            .iter()
            .map(|z| (t - z).abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// `h'(t)`.
    pub fn derivative(&self, t: f64) -> f64 {
        if self.identical {
            return 0.0;
        }
        let h = self.g.cdf(t) - self.f.cdf(t);
        h.signum() * self.cost.deriv(2.0 * self.zero_set_probe(t))
    }

    /// `h(t) = ∫₀ᵗ h'(s) ds`.
    pub fn value_at(&self, t: f64) -> f64 {
        if self.identical || t == 0.0 {
            return 0.0;
        }
        let (a, b) = if t < 0.0 { (t, 0.0) } else { (0.0, t) };
        let mut points: Vec<f64> = self
            .zeros
            .iter()
            .copied()
            .filter(|z| *z > a && *z < b)
            .collect();
        points.insert(0, a);
        points.push(b);
        let r = quad::adaptive_cells(|s| self.derivative(s), &points, 1e-11, 400_000)
            .map(|r| r.value)
            .unwrap_or(f64::NAN);
        if t < 0.0 {
            -r
        } else {
            r
        }
    }

    pub fn zeros(&self) -> &[f64] {
        &self.zeros
    }
}

/// Builds the dual witness for two laws with continuous strictly increasing
/// cdfs (as produced by [`Distribution::smooth`]) and returns it together
/// with the certified lower bound
/// `ζ = μ(h) − ν(h) = ∫ |H(t)| φ'(2 d(t, A)) dt ≤ ζ_φ(μ, ν)`.
///
/// By the duality inequality the returned value dominates κ_φ(μ, ν) up to
/// the quadrature error.
pub fn dual_witness(
    c: &CostFunction,
    f: &Distribution,
    g: &Distribution,
) -> Result<(WitnessFunction, f64)> {
    if !c.is_class_psi() && !matches!(c.kind(), crate::cost::CostKind::PsiX(_)) {
        return Err(Error::InvalidParameter(
            "dual witness needs an even convex cost with concave derivative".into(),
        ));
    }
    if !f.has_smooth_cdf() || !g.has_smooth_cdf() {
        return Err(Error::InvalidParameter(
            "dual witness needs strictly increasing continuous cdfs; smooth() the laws first"
                .into(),
        ));
    }
    if f == g {
        let w = WitnessFunction {
            cost: c.clone(),
            f: f.clone(),
            g: g.clone(),
            zeros: Vec::new(),
            identical: true,
        };
        return Ok((w, 0.0));
    }
    let lo = f.quantile(1e-7).min(g.quantile(1e-7));
    let hi = f.quantile(1.0 - 1e-7).max(g.quantile(1.0 - 1e-7));
    let h = |t: f64| g.cdf(t) - f.cdf(t);
    let n = 4096usize;
    let step = (hi - lo) / n as f64;
    let mut zeros = Vec::new();
    let mut prev_t = lo;
    let mut prev_h = h(lo);
    for i in 1..=n {
        let t = lo + step * i as f64;
        let ht = h(t);
        if prev_h == 0.0 {
            zeros.push(prev_t);
        } else if prev_h * ht < 0.0 {
            // bisect to locate the crossing
            let (mut a, mut b) = (prev_t, t);
            let (mut ha, _) = (prev_h, ht);
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                let hm = h(m);
                if hm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if ha * hm < 0.0 {
                    b = m;
                } else {
                    a = m;
                    ha = hm;
                }
                if b - a < 1e-13 * (1.0 + m.abs()) {
                    break;
                }
            }
            zeros.push(0.5 * (a + b));
        }
        prev_t = t;
        prev_h = ht;
    }
    zeros.dedup_by(|a, b| (*a - *b).abs() < 1e-10);
    if zeros.is_empty() {
        return Err(Error::EmptyZeroSet);
    }
    let witness = WitnessFunction {
        cost: c.clone(),
        f: f.clone(),
        g: g.clone(),
        zeros,
        identical: false,
    };
    // ζ = ∫ h' (G − F) dt = ∫ |H| φ'(2 d(t,A)) dt, split at the zeros
    let mut points = vec![lo];
    points.extend(witness.zeros.iter().copied().filter(|z| *z > lo && *z < hi));
    points.push(hi);
    let r = quad::adaptive_cells(
        |t| {
            let ht = h(t);
            ht.abs() * c.deriv(2.0 * witness.zero_set_probe(t))
        },
        &points,
        1e-11,
        MAX_EVALS,
    )
    .map_err(|e| Error::Quadrature(e.to_string()))?;
    Ok((witness, r.value))
}
