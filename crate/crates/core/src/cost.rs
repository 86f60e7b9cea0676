//! The convex cost family.
//!
//! A [`CostFunction`] is an even convex function with `eval(0) = 0` together
//! with its derivative. Members of the class `Ψ` (even, convex, C¹, concave
//! nondecreasing derivative with unit slope at zero and sublinear growth)
//! additionally carry the tail `y ↦ ν([y, ∞))` of their mixing measure: every
//! such cost is a mixture `φ(z) = 2 ∫ ψ_{t/2}(z) dν(t)` of the
//! quadratic-then-linear generators `ψ_x`, and the tail equals `φ''`.

use crate::quad;
use crate::{Error, Result};
use std::fmt;
use std::sync::Arc;

/// Evaluation budget for the one-dimensional work inside this module.
const DUAL_TOL: f64 = 1e-12;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Tags the closed-form families; `Custom` members are validated numerically
/// on construction.
#[derive(Clone)]
pub enum CostKind {
    /// `ψ_x`: `t²/4` for |t| ≤ 2x, `|t|x − x²` beyond.
    PsiX(f64),
    /// `g_p`: `x²/2` on [0,1], `x^p/p + 1/2 − 1/p` beyond, p in (1,2).
    Gp(f64),
    /// `(1+|x|) ln(1+|x|) − |x|`.
    Entropy,
    /// `|t|^p`, p ≥ 1.
    PowerP(f64),
    /// The one-atom mixture `2ψ_{x/2}`: `t²/2` for |t| ≤ x, `|t|x − x²/2` beyond.
    Huber(f64),
    /// User-supplied `(eval, deriv, mixing_tail)` triple.
    Custom,
}

impl fmt::Debug for CostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostKind::PsiX(x) => write!(f, "PsiX({x})"),
            CostKind::Gp(p) => write!(f, "Gp({p})"),
            CostKind::Entropy => write!(f, "Entropy"),
            CostKind::PowerP(p) => write!(f, "PowerP({p})"),
            CostKind::Huber(x) => write!(f, "Huber({x})"),
            CostKind::Custom => write!(f, "Custom"),
        }
    }
}

/// An even convex transport cost with derivative and optional mixing tail.
#[derive(Clone)]
pub struct CostFunction {
    kind: CostKind,
    custom_eval: Option<ScalarFn>,
    custom_deriv: Option<ScalarFn>,
    custom_tail: Option<ScalarFn>,
}

impl fmt::Debug for CostFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CostFunction").field("kind", &self.kind).finish()
    }
}

/// `ψ_x` generator cost. Rejects non-positive `x`.
pub fn psi_x(x: f64) -> Result<CostFunction> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::InvalidParameter(format!("psi_x needs x > 0, got {x}")));
    }
    Ok(CostFunction::closed(CostKind::PsiX(x)))
}

/// `g_p` cost for `p` in (1, 2).
pub fn g_p(p: f64) -> Result<CostFunction> {
    if !(p > 1.0 && p < 2.0) {
        return Err(Error::InvalidParameter(format!("g_p needs p in (1,2), got {p}")));
    }
    Ok(CostFunction::closed(CostKind::Gp(p)))
}

/// The entropy cost `(1+|x|) ln(1+|x|) − |x|`.
pub fn entropy_cost() -> CostFunction {
    CostFunction::closed(CostKind::Entropy)
}

/// Power cost `|t|^p`, p ≥ 1 (p = 2 gives the quadratic cost behind W₂).
pub fn power_p(p: f64) -> Result<CostFunction> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("power cost needs p >= 1, got {p}")));
    }
    Ok(CostFunction::closed(CostKind::PowerP(p)))
}

/// The canonical one-atom class-Ψ member `2ψ_{x/2}` (mixing measure δ_x).
pub fn huber(x: f64) -> Result<CostFunction> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::InvalidParameter(format!("huber needs x > 0, got {x}")));
    }
    Ok(CostFunction::closed(CostKind::Huber(x)))
}

/// Registers a custom class-Ψ member from an `(eval, deriv, mixing_tail)`
/// triple, validating the class conditions on a logarithmic grid.
///
/// The limit condition `φ'(x)/x → 0` can only be probed at finite points;
/// the decay check here is necessary, not sufficient.
pub fn custom_psi(
    eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
    deriv: impl Fn(f64) -> f64 + Send + Sync + 'static,
    mixing_tail: Option<impl Fn(f64) -> f64 + Send + Sync + 'static>,
) -> Result<CostFunction> {
    let c = CostFunction {
        kind: CostKind::Custom,
        custom_eval: Some(Arc::new(eval)),
        custom_deriv: Some(Arc::new(deriv)),
        custom_tail: mixing_tail.map(|f| Arc::new(f) as ScalarFn),
    };
    c.validate_class_psi()?;
    Ok(c)
}

impl CostFunction {
    fn closed(kind: CostKind) -> Self {
        CostFunction {
            kind,
            custom_eval: None,
            custom_deriv: None,
            custom_tail: None,
        }
    }

    pub fn kind(&self) -> &CostKind {
        &self.kind
    }

    /// Cost value; even in its argument, zero at zero.
    pub fn eval(&self, t: f64) -> f64 {
        let a = t.abs();
        match self.kind {
            CostKind::PsiX(x) => {
                if a <= 2.0 * x {
                    0.25 * t * t
                } else {
                    a * x - x * x
                }
            }
            CostKind::Gp(p) => {
                if a <= 1.0 {
                    0.5 * a * a
                } else {
                    a.powf(p) / p + 0.5 - 1.0 / p
                }
            }
            CostKind::Entropy => (1.0 + a) * (1.0 + a).ln() - a,
            CostKind::PowerP(p) => a.powf(p),
            CostKind::Huber(x) => {
                if a <= x {
                    0.5 * t * t
                } else {
                    a * x - 0.5 * x * x
                }
            }
            CostKind::Custom => (self.custom_eval.as_ref().unwrap())(a),
        }
    }

    /// Derivative; odd, with `deriv(0) = 0`.
    pub fn deriv(&self, t: f64) -> f64 {
        let a = t.abs();
        let s = if t < 0.0 { -1.0 } else { 1.0 };
        let d = match self.kind {
            CostKind::PsiX(x) => (0.5 * a).min(x),
            CostKind::Gp(p) => a.min(a.powf(p - 1.0)),
            CostKind::Entropy => (1.0 + a).ln(),
            CostKind::PowerP(p) => {
                if p == 1.0 {
                    if a == 0.0 {
                        0.0
                    } else {
                        1.0
                    }
                } else {
                    p * a.powf(p - 1.0)
                }
            }
            CostKind::Huber(x) => a.min(x),
            CostKind::Custom => (self.custom_deriv.as_ref().unwrap())(a),
        };
        s * d
    }

    /// Mixing-measure tail `y ↦ ν([y, ∞))`, equal to `φ''(y)`; present for
    /// class-Ψ members only.
    pub fn mixing_tail(&self, y: f64) -> Option<f64> {
        debug_assert!(y >= 0.0);
        match self.kind {
            CostKind::Gp(p) => Some(if y <= 1.0 { 1.0 } else { (p - 1.0) * y.powf(p - 2.0) }),
            CostKind::Entropy => Some(1.0 / (1.0 + y)),
            CostKind::Huber(x) => Some(if y <= x { 1.0 } else { 0.0 }),
            CostKind::Custom => self.custom_tail.as_ref().map(|f| f(y)),
            _ => None,
        }
    }

    /// Whether this member satisfies the class-Ψ contract.
    pub fn is_class_psi(&self) -> bool {
        matches!(
            self.kind,
            CostKind::Gp(_) | CostKind::Entropy | CostKind::Huber(_) | CostKind::Custom
        )
    }

    /// Positive abscissas where the second derivative jumps (quadrature
    /// cells must break there).
    pub fn knots(&self) -> Vec<f64> {
        match self.kind {
            CostKind::PsiX(x) => vec![2.0 * x],
            CostKind::Gp(_) => vec![1.0],
            CostKind::Huber(x) => vec![x],
            _ => Vec::new(),
        }
    }

    /// A quadratic envelope `eval(t) <= alpha t^2 + beta` used by tail
    /// remainder bounds. Class-Ψ members satisfy `eval <= t²/2`, the
    /// generator `ψ_x <= t²/4`, and `|t|^p <= t² + 1` for p <= 2.
    pub fn quadratic_envelope(&self) -> Option<(f64, f64)> {
        match self.kind {
            CostKind::PsiX(_) => Some((0.25, 0.0)),
            CostKind::Gp(_) | CostKind::Entropy | CostKind::Huber(_) | CostKind::Custom => {
                Some((0.5, 0.0))
            }
            CostKind::PowerP(p) if p <= 2.0 => Some((1.0, 1.0)),
            CostKind::PowerP(_) => None,
        }
    }

    fn validate_class_psi(&self) -> Result<()> {
        let mut grid = vec![0.0];
        let mut x = 1e-4;
        while x <= 1e3 {
            grid.push(x);
            x *= 10f64.powf(0.25);
        }
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.eval(0.0).abs() > 1e-14 || self.deriv(0.0).abs() > 1e-12 {
            return bad("custom cost must have eval(0) = deriv(0) = 0".into());
        }
        // phi''(0) = 1 by a forward difference on the derivative.
        let h = 1e-7;
        let second = (self.deriv(h) - self.deriv(0.0)) / h;
        if (second - 1.0).abs() > 1e-4 {
            return bad(format!("custom cost must have phi''(0) = 1, measured {second}"));
        }
        let mut prev_d = 0.0;
        let mut prev_ratio = f64::INFINITY;
        let mut prev_slope = f64::INFINITY;
        for w in grid.windows(2) {
            let (a, b) = (w[0], w[1]);
            let d = self.deriv(b);
            if d < prev_d - 1e-12 {
                return bad(format!("derivative must be nondecreasing (fails near {b})"));
            }
            // concavity of phi': difference quotients must not increase
            let slope = (d - prev_d) / (b - a);
            if slope > prev_slope + 1e-9 {
                return bad(format!("derivative must be concave (fails near {b})"));
            }
            let ratio = d / b;
            if ratio > prev_ratio + 1e-12 {
                return bad(format!("deriv(x)/x must be nonincreasing (fails near {b})"));
            }
            prev_d = d;
            prev_slope = slope;
            prev_ratio = ratio;
        }
        // finite decay proxy for phi'(x)/x -> 0
        let d1 = self.deriv(1.0);
        let r3 = self.deriv(1e3) / 1e3;
        let r6 = self.deriv(1e6) / 1e6;
        if !(r6 < r3 && r6 < 1e-2 * d1) {
            return bad("deriv(x)/x does not decay (sublinearity check failed)".into());
        }
        if let Some(t0) = self.mixing_tail(1e-9) {
            if (t0 - 1.0).abs() > 1e-6 {
                return bad(format!("mixing tail must equal 1 at 0+, got {t0}"));
            }
        }
        Ok(())
    }
}

/// Young (convex) dual `c*(x) = sup_t (x t − c(t))`.
///
/// Closed forms for the known kinds; otherwise solves `deriv(t) = x` by
/// bisection (the derivative is monotone). Returns `Err(Divergent)` when the
/// supremum is infinite, e.g. `PowerP(1)` with |x| > 1 or `ψ_x` with |x|
/// beyond the derivative's plateau.
pub fn young_dual(c: &CostFunction, x: f64) -> Result<f64> {
    let y = x.abs();
    if y == 0.0 {
        return Ok(0.0);
    }
    let diverged = || {
        Err(Error::Divergent(format!(
            "young dual is +infinity at {x} (bounded derivative)"
        )))
    };
    match c.kind {
        CostKind::PsiX(a) => {
            if y <= a {
                Ok(y * y)
            } else {
                diverged()
            }
        }
        CostKind::Huber(a) => {
            if y <= a {
                Ok(0.5 * y * y)
            } else {
                diverged()
            }
        }
        CostKind::Entropy => Ok(y.exp() - 1.0 - y),
        CostKind::Gp(p) => {
            let q = p / (p - 1.0);
            if y <= 1.0 {
                Ok(0.5 * y * y)
            } else {
                Ok(y.powf(q) / q + 1.0 / p - 0.5)
            }
        }
        CostKind::PowerP(p) => {
            if p == 1.0 {
                if y <= 1.0 {
                    Ok(0.0)
                } else {
                    diverged()
                }
            } else {
                let q = p / (p - 1.0);
                Ok((p - 1.0) * (y / p).powf(q))
            }
        }
        CostKind::Custom => {
            // bracket: deriv is nondecreasing; expand until deriv(t) >= y
            let mut hi = 1.0;
            while c.deriv(hi) < y {
                hi *= 2.0;
                if hi > 1e13 {
                    return diverged();
                }
            }
            let mut lo = 0.0;
            while hi - lo > DUAL_TOL * (1.0 + hi) {
                let mid = 0.5 * (lo + hi);
                if c.deriv(mid) < y {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let t = 0.5 * (lo + hi);
            Ok(y * t - c.eval(t))
        }
    }
}

/// Max absolute error of the mixture representation over a grid:
/// `max_z |deriv(z) − ∫_0^z ν([y,∞)) dy|`.
pub fn mixture_check(c: &CostFunction, z_grid: &[f64]) -> Result<f64> {
    if c.mixing_tail(0.0).is_none() {
        return Err(Error::MissingMixingTail);
    }
    let mut worst: f64 = 0.0;
    for &z in z_grid {
        let z = z.abs();
        // the tail may jump at a knot (a mixing-measure atom); cells break there
        let mut cells = vec![0.0];
        cells.extend(c.knots().into_iter().filter(|&k| k > 0.0 && k < z));
        cells.push(z);
        let integral = quad::adaptive_cells(|y| c.mixing_tail(y).unwrap(), &cells, 1e-12, 200_000)
            .map_err(|e| Error::Quadrature(e.to_string()))?;
        worst = worst.max((c.deriv(z) - integral.value).abs());
    }
    Ok(worst)
}
