//! Tail machinery: conditional value at risk, the Hardy–Littlewood maximal
//! quantile `Q̃`, its generalized inverse `H̃`, weak moments and Calderon
//! norms.
//!
//! Everything is driven by two primitives of the underlying law — the
//! partial expectation `E(Z − t)_+` and the cdf — through the variational
//! identities
//!
//! ```text
//! Q̃_Z(u) = CVar(Z)(u) = inf_t { t + u⁻¹ E(Z − t)_+ }       (Pinelis)
//! H̃_Z(x) = inf_{t<x} (x − t)⁻¹ E(Z − t)_+
//! ```
//!
//! linked by the Galois relation `H̃(x) < u ⇔ x > Q̃(u)`. Both infima are
//! one-dimensional convex/unimodal problems solved by golden-section.

use crate::coupling::CouplingZLaw;
use crate::dist::Distribution;
use crate::lattice::DiscreteLaw;
use crate::special::{norm_cdf, phi};
use crate::{Error, Result};

/// The primitives a law must expose to the tail machinery.
pub trait TailLaw {
    /// `E (Z − t)_+`.
    fn expectation_plus(&self, t: f64) -> f64;
    /// `P(Z <= x)`.
    fn cdf(&self, x: f64) -> f64;
    /// Generalized inverse cdf.
    fn quantile(&self, u: f64) -> f64;
    /// Atom positions when the law is purely discrete (enables exact
    /// weak-moment suprema).
    fn atoms(&self) -> Option<Vec<f64>> {
        None
    }
}

impl TailLaw for Distribution {
    fn expectation_plus(&self, t: f64) -> f64 {
        Distribution::expectation_plus(self, t)
    }
    fn cdf(&self, x: f64) -> f64 {
        Distribution::cdf(self, x)
    }
    fn quantile(&self, u: f64) -> f64 {
        Distribution::quantile(self, u)
    }
    fn atoms(&self) -> Option<Vec<f64>> {
        self.as_discrete()
            .map(|d| d.points().iter().map(|&(x, _)| x).collect())
    }
}

impl TailLaw for CouplingZLaw {
    fn expectation_plus(&self, t: f64) -> f64 {
        CouplingZLaw::expectation_plus(self, t)
    }
    fn cdf(&self, x: f64) -> f64 {
        CouplingZLaw::cdf(self, x)
    }
    fn quantile(&self, u: f64) -> f64 {
        CouplingZLaw::quantile(self, u)
    }
}

impl TailLaw for DiscreteLaw {
    fn expectation_plus(&self, t: f64) -> f64 {
        self.expect(|x| (x - t).max(0.0))
    }
    fn cdf(&self, x: f64) -> f64 {
        DiscreteLaw::cdf(self, x)
    }
    fn quantile(&self, u: f64) -> f64 {
        DiscreteLaw::quantile(self, u)
    }
    fn atoms(&self) -> Option<Vec<f64>> {
        Some(self.points().iter().map(|&(x, _)| x).collect())
    }
}

/// The law of `|G² − 1|` for a standard normal `G`, with closed-form tail
/// and partial expectation — the limit law behind the asymptotic weak
/// moments.
#[derive(Clone, Copy, Debug, Default)]
pub struct AbsGaussSquaredMinusOne;

impl AbsGaussSquaredMinusOne {
    /// `P(|G² − 1| > x)`.
    pub fn tail(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        let upper = 2.0 * norm_cdf(-(1.0 + x).sqrt());
        let lower = if x < 1.0 {
            2.0 * norm_cdf((1.0 - x).sqrt()) - 1.0
        } else {
            0.0
        };
        upper + lower
    }
}

impl TailLaw for AbsGaussSquaredMinusOne {
    fn expectation_plus(&self, t: f64) -> f64 {
        if t < 0.0 {
            return self.expectation_plus(0.0) - t;
        }
        // E(G² − (1+t))_+ = 2sφ(s) − 2t(1 − Φ(s)), s = √(1+t)
        let s = (1.0 + t).sqrt();
        let a = 2.0 * s * phi(s) - 2.0 * t * norm_cdf(-s);
        // E((1−t) − G²)_+ = −t(2Φ(s)−1) + 2sφ(s), s = √(1−t), for t < 1
        let b = if t < 1.0 {
            let s = (1.0 - t).sqrt();
            -t * (2.0 * norm_cdf(s) - 1.0) + 2.0 * s * phi(s)
        } else {
            0.0
        };
        a + b
    }

    fn cdf(&self, x: f64) -> f64 {
        1.0 - self.tail(x)
    }

    fn quantile(&self, u: f64) -> f64 {
        let mut lo = 0.0;
        let mut hi = 2.0;
        while self.cdf(hi) < u && hi < 1e9 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) >= u {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < 1e-14 * (1.0 + hi) {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

// ---------------------------------------------------------------------------
// one-dimensional minimization
// ---------------------------------------------------------------------------

fn golden_min(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..240 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        if (b - a).abs() <= tol {
            break;
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

fn bracket(law: &dyn TailLaw) -> (f64, f64) {
    let lo = law.quantile(1e-12);
    let hi = law.quantile(1.0 - 1e-12);
    let spread = (hi - lo).abs().max(1e-9);
    (lo - spread - 1.0, hi + spread + 1.0)
}

// ---------------------------------------------------------------------------
// CVaR / Q-tilde / H-tilde
// ---------------------------------------------------------------------------

/// Conditional value at risk computed both ways: the variational infimum
/// `inf_t (t + u⁻¹ E(Z−t)_+)` by golden-section, and the Hardy–Littlewood
/// integral `(1/u) ∫₀ᵘ Q_Z(v) dv` by dyadic-strip quadrature of the tail
/// quantile. The two agree by the Pinelis identity; their numerical gap is
/// itself a consistency check.
pub fn cvar_both(law: &dyn TailLaw, u: f64) -> Result<(f64, f64)> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::InvalidParameter(format!("cvar needs u in (0,1), got {u}")));
    }
    let (lo, hi) = bracket(law);
    let objective = |t: f64| t + law.expectation_plus(t) / u;
    let tol = 1e-12 * (1.0 + hi.abs().max(lo.abs()));
    let (_, variational) = golden_min(&objective, lo, hi, tol);

    // integral route: ∫₀ᵘ Q(v) dv over dyadic strips shrinking into v = 0;
    // adaptive per strip so quantile step discontinuities are resolved
    let mut integral = 0.0;
    let mut hi_v = u;
    for _ in 0..80 {
        let lo_v = 0.5 * hi_v;
        integral += crate::quad::adaptive(
            |v| law.quantile((1.0 - v).min(1.0 - 1e-16)),
            lo_v,
            hi_v,
            3e-10,
            400_000,
        )
        .map_err(|e| Error::Quadrature(e.to_string()))?
        .value;
        hi_v = lo_v;
        if hi_v < 1e-16 {
            break;
        }
    }
    // leftover sliver [0, hi_v): bounded by hi_v · Q(small)
    integral += hi_v * law.quantile(1.0 - 1e-16);
    Ok((variational, integral / u))
}

/// `Q̃_Z(u)` (the variational evaluation).
pub fn qtilde(law: &dyn TailLaw, u: f64) -> f64 {
    let (lo, hi) = bracket(law);
    let objective = |t: f64| t + law.expectation_plus(t) / u;
    let tol = 1e-12 * (1.0 + hi.abs().max(lo.abs()));
    golden_min(&objective, lo, hi, tol).1
}

/// `H̃_Z(x) = inf_{t<x} (x−t)⁻¹ E(Z−t)_+`, clipped to [0, 1].
///
/// The objective decreases then increases (its derivative has the sign of
/// `E(Z−t)_+ − (x−t) P(Z>t)`, which is nondecreasing in `t`), so
/// golden-section applies; the `t → −∞` limit equals 1, which caps the
/// result.
pub fn htilde(law: &dyn TailLaw, x: f64) -> f64 {
    let (lo, _) = bracket(law);
    let lo = lo.min(x - 1.0);
    let width = (x - lo).max(1e-6);
    let hi = x - 1e-14 * width.max(1.0);
    let objective = |t: f64| law.expectation_plus(t) / (x - t);
    let tol = 1e-13 * width;
    let (_, value) = golden_min(&objective, lo, hi, tol);
    value.clamp(0.0, 1.0).min(1.0)
}

/// Plain tail `H_Z(x) = P(Z > x)`.
pub fn tail(law: &dyn TailLaw, x: f64) -> f64 {
    1.0 - law.cdf(x)
}

// ---------------------------------------------------------------------------
// weak moments and Calderon norms
// ---------------------------------------------------------------------------

fn sup_refine(f: &dyn Fn(f64) -> f64, grid: &[f64]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    let mut best_i = 0;
    for (i, &x) in grid.iter().enumerate() {
        let v = f(x);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    // ternary refinement inside the bracket around the best grid point
    let lo = grid[best_i.saturating_sub(1)];
    let hi = grid[(best_i + 1).min(grid.len() - 1)];
    if hi > lo {
        let neg = |x: f64| -f(x);
        let (_, v) = golden_min(&neg, lo, hi, 1e-13 * (1.0 + hi));
        best = best.max(-v);
    }
    best
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let lo = lo.max(1e-300);
    let ratio = (hi / lo).max(1.0 + 1e-12);
    (0..=n)
        .map(|i| lo * ratio.powf(i as f64 / n as f64))
        .collect()
}

/// Weak moments `Λ_q = sup_x x^q H(x)` and `Λ̃_q = sup_x x^q H̃(x)` of a
/// nonnegative law. The plain-tail supremum is exact for discrete laws
/// (evaluated at the atoms); otherwise both use a 512-point logarithmic grid
/// with local refinement.
pub fn weak_moments(law: &dyn TailLaw, q: f64) -> Result<(f64, f64)> {
    if !(q >= 1.0) {
        return Err(Error::InvalidParameter(format!("weak moment needs q >= 1, got {q}")));
    }
    let x_hi = law.quantile(1.0 - 1e-10).max(1e-6);
    let x_lo = (law.quantile(1e-10).abs()).max(1e-8 * x_hi).min(x_hi * 0.5);
    if !x_hi.is_finite() {
        return Err(Error::Divergent("law has no finite high quantile".into()));
    }
    let lambda = if let Some(mut atoms) = law.atoms() {
        atoms.retain(|&x| x > 0.0);
        // on [x_i, x_{i+1}) the tail is constant, so the supremum over each
        // piece is attained in the limit at the next atom:
        // Λ_q = max_i x_i^q · P(Z >= x_i)
        atoms
            .iter()
            .map(|&x| {
                let p_ge = 1.0 - law.cdf(x) + (law.cdf(x) - law.cdf(x * (1.0 - 1e-12) - 1e-300));
                x.powf(q) * p_ge
            })
            .fold(0.0f64, f64::max)
    } else {
        let grid = log_grid(x_lo, x_hi * 1.5, 512);
        sup_refine(&|x| x.powf(q) * tail(law, x), &grid)
    };
    let grid = log_grid(x_lo, x_hi * 1.5, 512);
    let lambda_tilde = sup_refine(&|x| x.powf(q) * htilde(law, x), &grid);
    // a sanity floor: Λ_q <= Λ̃_q always
    Ok((lambda, lambda_tilde.max(lambda)))
}

/// Calderon weak norm `‖Z‖_{w,p} = sup_u u^{1/p} Q̃(u)`.
pub fn calderon_norm(law: &dyn TailLaw, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("calderon norm needs p >= 1, got {p}")));
    }
    let grid = log_grid(1e-10, 1.0, 512);
    Ok(sup_refine(&|u| u.powf(1.0 / p) * qtilde(law, u), &grid))
}

// ---------------------------------------------------------------------------
// subadditivity of H-tilde
// ---------------------------------------------------------------------------

/// Joint law specification for the subadditivity check.
pub enum Joint<'a> {
    /// `A` and `B` independent.
    Independent(&'a DiscreteLaw, &'a DiscreteLaw),
    /// Explicit atoms `(a, b, probability)`.
    Explicit(&'a [(f64, f64, f64)]),
}

/// Margin of `H̃_{A+B}(x) <= max(H̃_A(t), H̃_B(x − t))`:
/// returns `max(H̃_A(t), H̃_B(x−t)) − H̃_{A+B}(x)`, which must be ≥ −1e−9.
pub fn htilde_subadditivity_margin(joint: Joint<'_>, x: f64, t: f64) -> Result<f64> {
    let (law_a, law_b, law_sum) = match joint {
        Joint::Independent(a, b) => (a.clone(), b.clone(), a.convolve_independent(b)?),
        Joint::Explicit(atoms) => {
            let a = DiscreteLaw::new(atoms.iter().map(|&(a, _, p)| (a, p)).collect())?;
            let b = DiscreteLaw::new(atoms.iter().map(|&(_, b, p)| (b, p)).collect())?;
            let s = DiscreteLaw::new(atoms.iter().map(|&(a, b, p)| (a + b, p)).collect())?;
            (a, b, s)
        }
    };
    let lhs = htilde(&law_sum, x);
    let rhs = htilde(&law_a, t).max(htilde(&law_b, x - t));
    Ok(rhs - lhs)
}

/// One row of the tail-profile export: `(u, Q(u), Q̃(u))`.
pub fn quantile_table(law: &dyn TailLaw, us: &[f64]) -> Vec<(f64, f64, f64)> {
    us.iter()
        .map(|&u| (u, law.quantile(1.0 - u), qtilde(law, u)))
        .collect()
}

/// One row of the tail-profile export: `(x, H(x), H̃(x))`.
pub fn tail_table(law: &dyn TailLaw, xs: &[f64]) -> Vec<(f64, f64, f64)> {
    xs.iter().map(|&x| (x, tail(law, x), htilde(law, x))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn cvar_uniform_and_exponential() {
        // Z uniform on [0,1]: Q̃(u) = 1 − u/2
        let z = Distribution::Uniform { lo: 0.0, hi: 1.0 };
        let (v, i) = cvar_both(&z, 0.5).unwrap();
        close(v, 0.75, 1e-10);
        close(i, 0.75, 1e-8);
        // Z exponential(1) (shift the centered one): Q̃(u) = 1 − ln u
        let e = Distribution::centered_exponential();
        let shifted = |u: f64| qtilde(&e, u) + 1.0;
        close(shifted(0.1), 1.0 - 0.1f64.ln(), 1e-8);
    }

    #[test]
    fn cvar_full_mass_is_mean() {
        let z = Distribution::Uniform { lo: 0.0, hi: 1.0 };
        let q = qtilde(&z, 1.0 - 1e-9);
        close(q, 0.5, 1e-6);
    }

    #[test]
    fn cvar_variational_equals_integral() {
        let laws: Vec<Box<dyn TailLaw>> = vec![
            Box::new(Distribution::Uniform { lo: 0.0, hi: 2.0 }),
            Box::new(Distribution::standard_normal()),
            Box::new(DiscreteLaw::new(vec![(0.0, 0.3), (1.0, 0.4), (2.5, 0.3)]).unwrap()),
        ];
        for law in &laws {
            for &u in &[0.05, 0.3, 0.7] {
                let (v, i) = cvar_both(law.as_ref(), u).unwrap();
                close(v, i, 1e-8);
            }
        }
    }

    #[test]
    fn htilde_point_mass() {
        let c = DiscreteLaw::new(vec![(1.0, 1.0)]).unwrap();
        close(htilde(&c, 2.0), 0.0, 1e-10);
        close(htilde(&c, 0.5), 1.0, 1e-6);
        close(htilde(&c, 1.0), 1.0, 1e-6);
    }

    #[test]
    fn htilde_dominates_tail_and_galois() {
        let laws: Vec<Box<dyn TailLaw>> = vec![
            Box::new(DiscreteLaw::new(vec![(0.2, 0.5), (1.0, 0.3), (3.0, 0.2)]).unwrap()),
            Box::new(AbsGaussSquaredMinusOne),
        ];
        for law in &laws {
            for &x in &[0.3, 0.8, 1.5, 3.5] {
                let h = tail(law.as_ref(), x);
                let ht = htilde(law.as_ref(), x);
                assert!(ht >= h - 1e-9, "H̃ {ht} < H {h} at {x}");
            }
            // Galois: H̃(x) < u  iff  x > Q̃(u)
            for &x in &[0.4, 1.2, 2.0] {
                for &u in &[0.05, 0.4, 0.9] {
                    let lhs = htilde(law.as_ref(), x) < u - 1e-9;
                    let rhs = x > qtilde(law.as_ref(), u) + 1e-9;
                    let borderline = (htilde(law.as_ref(), x) - u).abs() < 1e-7
                        || (x - qtilde(law.as_ref(), u)).abs() < 1e-7;
                    assert!(lhs == rhs || borderline, "galois fails at x={x}, u={u}");
                }
            }
        }
    }

    #[test]
    fn abs_gauss_squared_closed_forms() {
        let law = AbsGaussSquaredMinusOne;
        // E|G²−1| = 4 φ(1)
        close(law.expectation_plus(0.0), 4.0 * phi(1.0), 1e-14);
        // tail at 0 is 1, decreasing
        close(law.tail(0.0), 1.0, 0.0);
        assert!(law.tail(1.0) < law.tail(0.5));
        // numeric derivative of E(Z−t)_+ equals −tail
        let t = 0.8;
        let h = 1e-6;
        let slope = (law.expectation_plus(t + h) - law.expectation_plus(t - h)) / (2.0 * h);
        close(slope, -law.tail(t), 1e-6);
        let q = law.quantile(0.9);
        close(law.cdf(q), 0.9, 1e-9);
    }

    #[test]
    fn weak_moment_pareto_calibration() {
        // atoms x_i = (i/n)^{−1/q} with mass 1/n give P(Z >= x_i) = i/n, so
        // x_i^q P(Z >= x_i) = 1 at every atom and Λ_q = 1 exactly.
        let q = 1.5;
        let n = 4000;
        let atoms: Vec<(f64, f64)> = (1..=n)
            .map(|i| {
                let v = i as f64 / n as f64;
                (v.powf(-1.0 / q), 1.0 / n as f64)
            })
            .collect();
        let law = DiscreteLaw::new(atoms).unwrap();
        let (lambda, lambda_t) = weak_moments(&law, q).unwrap();
        close(lambda, 1.0, 1e-9);
        assert!(lambda <= lambda_t + 1e-12);
    }

    #[test]
    fn weak_moments_of_limit_law() {
        let law = AbsGaussSquaredMinusOne;
        for &p in &[1.0, 1.5] {
            let (l, lt) = weak_moments(&law, p).unwrap();
            assert!(l > 0.0 && l <= lt);
            // brute-force oracle for the plain weak moment
            let mut brute = 0.0f64;
            let mut x = 1e-4f64;
            while x < 60.0 {
                brute = brute.max(x.powf(p) * law.tail(x));
                x *= 1.0005;
            }
            close(l, brute, 1e-3 * brute.max(1.0));
        }
    }

    #[test]
    fn calderon_identity() {
        let law = DiscreteLaw::new(vec![(0.1, 0.25), (0.7, 0.5), (2.0, 0.25)]).unwrap();
        let p = 1.5;
        let (_, lt) = weak_moments(&law, p).unwrap();
        let c = calderon_norm(&law, p).unwrap();
        close(lt, c.powf(p), 1e-8 * lt.max(1.0));
    }

    #[test]
    fn htilde_subadditivity_cases() {
        let rad = DiscreteLaw::new(vec![(-1.0, 0.5), (1.0, 0.5)]).unwrap();
        let m = htilde_subadditivity_margin(Joint::Independent(&rad, &rad), 1.0, 0.5).unwrap();
        assert!(m >= -1e-9);
        // comonotone A = B on a 5-atom law, x = 2t
        let base: Vec<(f64, f64, f64)> = [(-2.0, 0.1), (-0.5, 0.2), (0.0, 0.3), (1.0, 0.25), (2.5, 0.15)]
            .iter()
            .map(|&(a, p)| (a, a, p))
            .collect();
        let m = htilde_subadditivity_margin(Joint::Explicit(&base), 2.0, 1.0).unwrap();
        assert!(m >= -1e-9);
        // degenerate B = 0
        let zero = DiscreteLaw::new(vec![(0.0, 1.0)]).unwrap();
        let m = htilde_subadditivity_margin(Joint::Independent(&rad, &zero), 1.0, 0.4).unwrap();
        assert!(m >= -1e-9);
    }

    #[test]
    fn cvar_difference_bounded_by_coupled_difference() {
        // |Q̃_X(u) − Q̃_Y(u)| <= Q̃_{|X−Y|}(u) on an explicit joint
        let joint = [
            (-1.0, -0.8, 0.3),
            (0.0, 0.4, 0.4),
            (1.5, 1.0, 0.2),
            (3.0, 3.5, 0.1),
        ];
        let x = DiscreteLaw::new(joint.iter().map(|&(a, _, p)| (a, p)).collect()).unwrap();
        let y = DiscreteLaw::new(joint.iter().map(|&(_, b, p)| (b, p)).collect()).unwrap();
        let d = DiscreteLaw::new(joint.iter().map(|&(a, b, p)| ((a - b).abs(), p)).collect())
            .unwrap();
        for &u in &[0.1, 0.3, 0.6, 0.9] {
            let gap = (qtilde(&x, u) - qtilde(&y, u)).abs();
            assert!(gap <= qtilde(&d, u) + 1e-9, "u={u}");
        }
    }

    #[test]
    fn u_qtilde_nondecreasing() {
        let law = DiscreteLaw::new(vec![(0.0, 0.4), (1.0, 0.4), (4.0, 0.2)]).unwrap();
        let mut prev = 0.0;
        for i in 1..40 {
            let u = i as f64 / 40.0;
            let v = u * qtilde(&law, u);
            assert!(v >= prev - 1e-10);
            prev = v;
        }
    }

    #[test]
    fn psi_envelope_bound() {
        // H̃_{|Z|}(u) <= (4/u²) E ψ_{u/2}(|Z|)
        let z = Distribution::standard_normal();
        let abs_z = Distribution::smooth(&Distribution::point_mass(0.0), 1.0).unwrap();
        let _ = abs_z;
        for &u in &[1.0, 2.0, 3.0] {
            let cost = crate::cost::psi_x(u / 2.0).unwrap();
            let e_psi = z.expect(&|x| cost.eval(x.abs())).unwrap();
            // |Z| for Z standard normal: build via discrete approximation-free
            // route: H̃_{|Z|}(u) computed from the folded law's primitives
            let folded = FoldedNormal;
            let ht = htilde(&folded, u);
            assert!(ht <= 4.0 / (u * u) * e_psi + 1e-9, "u={u}");
        }
    }

    /// |N(0,1)|, used by the envelope test.
    struct FoldedNormal;
    impl TailLaw for FoldedNormal {
        fn expectation_plus(&self, t: f64) -> f64 {
            if t < 0.0 {
                return 2.0 * phi(0.0) - t;
            }
            2.0 * (phi(t) - t * norm_cdf(-t))
        }
        fn cdf(&self, x: f64) -> f64 {
            if x <= 0.0 {
                0.0
            } else {
                2.0 * norm_cdf(x) - 1.0
            }
        }
        fn quantile(&self, u: f64) -> f64 {
            crate::special::norm_quantile(0.5 + 0.5 * u.clamp(1e-300, 1.0 - 1e-16))
        }
    }
}
