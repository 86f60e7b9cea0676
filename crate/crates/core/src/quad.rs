//! Adaptive one-dimensional quadrature.
//!
//! The workhorse is interval bisection with a nested Gauss-Legendre pair
//! (16 vs 32 nodes); the difference between the two rules is the local
//! error estimate. Callers pre-split at known kinks (lattice quantile
//! breakpoints, |G^2-1| corners, cost knots) so each cell sees a smooth
//! integrand and the pair converges at spectral rate.

use std::sync::OnceLock;

/// Value, a conservative absolute-error bound, and the evaluation count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: u64,
}

impl QuadResult {
    pub const ZERO: QuadResult = QuadResult {
        value: 0.0,
        abs_error: 0.0,
        evaluations: 0,
    };

    pub fn combine(self, other: QuadResult) -> QuadResult {
        QuadResult {
            value: self.value + other.value,
            abs_error: self.abs_error + other.abs_error,
            evaluations: self.evaluations + other.evaluations,
        }
    }
}

/// Budget exhausted before the tolerance was met.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("quadrature budget exhausted ({evaluations} evaluations, max {max_evaluations})")]
pub struct BudgetExhausted {
    pub evaluations: u64,
    pub max_evaluations: u64,
}

fn legendre_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    // Newton iteration on P_n with the usual Chebyshev-like initial guess.
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 1..n {
                let p2 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p0) / (k + 1) as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

type Rule = (Vec<f64>, Vec<f64>);

fn rules() -> &'static (Rule, Rule) {
    static RULES: OnceLock<(Rule, Rule)> = OnceLock::new();
    RULES.get_or_init(|| (legendre_nodes(16), legendre_nodes(32)))
}

/// Fixed-order Gauss-Legendre on [a, b].
pub fn gauss_legendre<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize) -> f64 {
    let (nodes, weights) = legendre_nodes(n);
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in nodes.iter().zip(&weights) {
        acc += w * f(c + h * x);
    }
    acc * h
}

struct Worker<'a> {
    f: &'a mut dyn FnMut(f64) -> f64,
    evals: u64,
    max_evals: u64,
    exhausted: bool,
}

impl Worker<'_> {
    fn pair(&mut self, a: f64, b: f64) -> (f64, f64) {
        let ((n16, w16), (n32, w32)) = rules();
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut lo = 0.0;
        for (x, w) in n16.iter().zip(w16) {
            lo += w * (self.f)(c + h * x);
        }
        let mut hi = 0.0;
        for (x, w) in n32.iter().zip(w32) {
            hi += w * (self.f)(c + h * x);
        }
        self.evals += 48;
        (hi * h, (hi - lo).abs() * h)
    }

    fn integrate(&mut self, a: f64, b: f64, tol: f64, depth: u32) -> (f64, f64) {
        let (value, err) = self.pair(a, b);
        if err <= tol || depth >= 48 || !value.is_finite() {
            return (value, err.max(f64::EPSILON * value.abs()));
        }
        if self.evals >= self.max_evals {
            self.exhausted = true;
            return (value, err);
        }
        let mid = 0.5 * (a + b);
        let (lv, le) = self.integrate(a, mid, 0.5 * tol, depth + 1);
        let (rv, re) = self.integrate(mid, b, 0.5 * tol, depth + 1);
        (lv + rv, le + re)
    }
}

/// Adaptive quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_evals: u64,
) -> Result<QuadResult, BudgetExhausted> {
    if a == b {
        return Ok(QuadResult::ZERO);
    }
    let mut worker = Worker {
        f: &mut f,
        evals: 0,
        max_evals,
        exhausted: false,
    };
    let (value, err) = worker.integrate(a, b, tol, 0);
    if worker.exhausted {
        return Err(BudgetExhausted {
            evaluations: worker.evals,
            max_evaluations: max_evals,
        });
    }
    Ok(QuadResult {
        value,
        abs_error: err,
        evaluations: worker.evals,
    })
}

/// Adaptive quadrature over a partition: the cells defined by consecutive
/// `points` entries are integrated independently (so kinks placed at the
/// breakpoints never degrade the convergence rate).
pub fn adaptive_cells<F: FnMut(f64) -> f64>(
    mut f: F,
    points: &[f64],
    tol: f64,
    max_evals: u64,
) -> Result<QuadResult, BudgetExhausted> {
    assert!(points.len() >= 2, "need at least one cell");
    let cells = points.len() - 1;
    let mut acc = QuadResult::ZERO;
    for w in points.windows(2) {
        let r = adaptive(
            &mut f,
            w[0],
            w[1],
            tol / cells as f64,
            max_evals.saturating_sub(acc.evaluations),
        )?;
        acc = acc.combine(r);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::phi;

    #[test]
    fn polynomial_is_exact() {
        let r = adaptive(|x| 3.0 * x * x, 0.0, 2.0, 1e-12, 10_000).unwrap();
        assert!((r.value - 8.0).abs() < 1e-13);
    }

    #[test]
    fn gaussian_mass() {
        let r = adaptive(phi, -8.5, 8.5, 1e-13, 100_000).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        assert!(r.abs_error < 1e-11);
    }

    #[test]
    fn kinked_integrand_with_cells() {
        // ∫_{-1}^{1} |x| dx = 1, kink pre-split at 0
        let r = adaptive_cells(|x: f64| x.abs(), &[-1.0, 0.0, 1.0], 1e-13, 10_000).unwrap();
        assert!((r.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn budget_is_enforced() {
        let err = adaptive(|x: f64| (1e6 * x).sin().abs(), 0.0, 1.0, 1e-14, 2_000);
        assert!(err.is_err());
    }

    #[test]
    fn fixed_rule_matches() {
        let v = gauss_legendre(|x| x.exp(), 0.0, 1.0, 16);
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-14);
    }
}
