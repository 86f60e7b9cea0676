//! Explicit couplings.
//!
//! * [`QuantileCoupling`] — couples an exact lattice partial-sum law `S_n`
//!   to `N(0, nσ²)` through the randomized quantile transformation
//!   `G = σ√n Φ⁻¹(F(S−0) + δ(F(S) − F(S−0)))`; the joint law of
//!   `Z = |S − G|` is available in closed form per atom.
//! * [`ShiftedCoupling`] — the continuous variant `S̄ = S + hV` with a
//!   uniform smear of one lattice step; no auxiliary δ is needed and
//!   `Z̄(u) <= Z(u) + h/2` pathwise on a common uniform.
//! * [`DyadicCoupling`] — the dyadic Poisson–normal coupling: one Poisson
//!   draw at the finest level, binomial thinning downwards, and a
//!   conditional quantile transform matching each dyadic increment to an
//!   independent standard Gaussian.
//! * [`binomial_gaussian_coupling`] — exact quadratic cost between the
//!   symmetric ±1 walk and its matching Gaussian.

use crate::cost::CostFunction;
use crate::dist::Distribution;
use crate::lattice::LatticeLaw;
use crate::quad;
use crate::special::{binom_half_cdf, gauss_partial_moment, norm_quantile};
use crate::{Error, Result};
use rand::Rng;
use rand_distr::Distribution as RandDistribution;

/// The randomized quantile coupling of a lattice sum law with its Gaussian.
#[derive(Clone, Debug)]
pub struct QuantileCoupling {
    sum_law: LatticeLaw,
    n: u32,
    sigma: f64,
    /// Gaussian scale σ√n.
    scale: f64,
}

impl QuantileCoupling {
    pub fn new(sum_law: LatticeLaw, n: u32, sigma: f64) -> Result<Self> {
        if n == 0 || !(sigma > 0.0) {
            return Err(Error::InvalidParameter(
                "quantile coupling needs n >= 1 and σ > 0".into(),
            ));
        }
        let scale = sigma * (n as f64).sqrt();
        Ok(QuantileCoupling { sum_law, n, sigma, scale })
    }

    pub fn sum_law(&self) -> &LatticeLaw {
        &self.sum_law
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// The Gaussian coordinate for uniforms `(u, δ)`. The atom is the one
    /// whose closed cdf interval contains `u` (ties resolve to the atom
    /// whose right endpoint equals `u`).
    pub fn gaussian_coord(&self, u: f64, delta: f64) -> f64 {
        let i = self.sum_law.quantile_index(u);
        let lo = self.sum_law.cum_before(i);
        let hi = self.sum_law.cum_at(i);
        let v = (lo + delta * (hi - lo)).clamp(1e-300, 1.0 - 1e-16);
        self.scale * norm_quantile(v)
    }

    /// `Z = |S − G|` as a function of the two uniforms.
    pub fn z_of_u(&self, u: f64, delta: f64) -> f64 {
        let i = self.sum_law.quantile_index(u);
        (self.sum_law.position(i) - self.gaussian_coord(u, delta)).abs()
    }

    /// `Z` driven by a single uniform, taking δ as the position of `u`
    /// inside its atom; then `G = σ√n Φ⁻¹(u)` exactly.
    pub fn z_of_u_canonical(&self, u: f64) -> f64 {
        let i = self.sum_law.quantile_index(u);
        let v = u.clamp(1e-300, 1.0 - 1e-16);
        (self.sum_law.position(i) - self.scale * norm_quantile(v)).abs()
    }

    /// `E c(Z)` by per-atom quadrature over the conditional Gaussian
    /// coordinate — an evaluation path separate from the transport module's
    /// merged-cell integrals.
    pub fn expect_cost(&self, c: &CostFunction) -> Result<f64> {
        let mut acc = 0.0;
        for i in 0..self.sum_law.len() {
            let s = self.sum_law.position(i);
            let (u0, u1) = (self.sum_law.cum_before(i), self.sum_law.cum_at(i));
            if u1 <= u0 {
                continue;
            }
            let z0 = if u0 <= 0.0 { -8.5 } else { norm_quantile(u0).max(-8.5) };
            let z1 = if u1 >= 1.0 { 8.5 } else { norm_quantile(u1).min(8.5) };
            if z1 <= z0 {
                continue;
            }
            let r = quad::adaptive(
                |z| c.eval(s - self.scale * z) * crate::special::phi(z),
                z0,
                z1,
                1e-12,
                400_000,
            )
            .map_err(|e| Error::Quadrature(e.to_string()))?;
            acc += r.value;
        }
        Ok(acc)
    }

    /// The exact functional law of `Z` (closed-form partial expectations).
    pub fn z_law(&self) -> CouplingZLaw {
        let cells = (0..self.sum_law.len())
            .map(|i| {
                let (u0, u1) = (self.sum_law.cum_before(i), self.sum_law.cum_at(i));
                ZCell {
                    s: self.sum_law.position(i),
                    z0: if u0 <= 0.0 { f64::NEG_INFINITY } else { norm_quantile(u0) },
                    z1: if u1 >= 1.0 { f64::INFINITY } else { norm_quantile(u1) },
                }
            })
            .collect();
        CouplingZLaw { cells, a: self.scale }
    }
}

#[derive(Clone, Copy, Debug)]
struct ZCell {
    s: f64,
    z0: f64,
    z1: f64,
}

/// Law of `Z_n = |S_n − G_{nσ²}|` under the quantile coupling: per lattice
/// atom `s` with cdf interval `[u0, u1]`, the Gaussian coordinate is
/// `σ√n Φ⁻¹(V)` with `V ~ U[u0, u1]`, so every tail functional reduces to
/// Gaussian partial moments on `[Φ⁻¹(u0), Φ⁻¹(u1)]`.
#[derive(Clone, Debug)]
pub struct CouplingZLaw {
    cells: Vec<ZCell>,
    a: f64,
}

impl CouplingZLaw {
    /// `E (Z − t)_+`, exactly.
    pub fn expectation_plus(&self, t: f64) -> f64 {
        if t < 0.0 {
            // Z >= 0, so E(Z − t)_+ = E Z − t
            return self.expectation_plus(0.0) - t;
        }
        let mut acc = 0.0;
        for c in &self.cells {
            // |s − a z| − t >= 0 on z <= (s−t)/a (value s − t − a z)
            // and z >= (s+t)/a (value a z − s − t)
            let zl = (c.s - t) / self.a;
            let zr = (c.s + t) / self.a;
            let lo = c.z0;
            let hi = c.z1.min(zl);
            if hi > lo {
                acc += (c.s - t) * gauss_partial_moment(0, lo, hi)
                    - self.a * gauss_partial_moment(1, lo, hi);
            }
            let lo = c.z0.max(zr);
            let hi = c.z1;
            if hi > lo {
                acc += self.a * gauss_partial_moment(1, lo, hi)
                    - (c.s + t) * gauss_partial_moment(0, lo, hi);
            }
        }
        acc.max(0.0)
    }

    /// `P(Z <= x)`, exactly.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let mut acc = 0.0;
        for c in &self.cells {
            // |s − a z| <= x  <=>  (s−x)/a <= z <= (s+x)/a
            let lo = c.z0.max((c.s - x) / self.a);
            let hi = c.z1.min((c.s + x) / self.a);
            if hi > lo {
                acc += gauss_partial_moment(0, lo, hi);
            }
        }
        acc.min(1.0)
    }

    pub fn mean(&self) -> f64 {
        self.expectation_plus(0.0)
    }

    /// `E Z²`, exactly.
    pub fn second_moment(&self) -> f64 {
        let mut acc = 0.0;
        for c in &self.cells {
            let m0 = gauss_partial_moment(0, c.z0, c.z1);
            let m1 = gauss_partial_moment(1, c.z0, c.z1);
            let m2 = gauss_partial_moment(2, c.z0, c.z1);
            acc += c.s * c.s * m0 - 2.0 * c.s * self.a * m1 + self.a * self.a * m2;
        }
        acc
    }

    /// Quantile by bisection on the exact cdf.
    pub fn quantile(&self, u: f64) -> f64 {
        let mut lo = 0.0;
        let mut hi = 1.0;
        while self.cdf(hi) < u && hi < 1e12 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) >= u {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < 1e-13 * (1.0 + hi) {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

/// The V-shift coupling: `S̄ = S + hV`, `Ḡ = σ√n Φ⁻¹(F̄(S̄))`.
#[derive(Clone, Debug)]
pub struct ShiftedCoupling {
    shifted: Distribution,
    scale: f64,
    h: f64,
}

impl ShiftedCoupling {
    /// `h` must be the lattice step of `sum_law` (the shift must exactly fill
    /// the lattice gaps to produce a continuous law).
    pub fn new(sum_law: LatticeLaw, n: u32, sigma: f64, h: f64) -> Result<Self> {
        if n == 0 || !(sigma > 0.0) {
            return Err(Error::InvalidParameter(
                "shifted coupling needs n >= 1 and σ > 0".into(),
            ));
        }
        if (h - sum_law.step()).abs() > 1e-12 * h.abs() {
            return Err(Error::InvalidParameter(format!(
                "shift width {h} must equal the lattice step {}",
                sum_law.step()
            )));
        }
        Ok(ShiftedCoupling {
            shifted: Distribution::lattice_uniform_shift(sum_law),
            scale: sigma * (n as f64).sqrt(),
            h,
        })
    }

    /// The law of `S̄`.
    pub fn shifted_law(&self) -> &Distribution {
        &self.shifted
    }

    /// `Z̄(u) = |F̄⁻¹(u) − σ√n Φ⁻¹(u)|` — deterministic in one uniform.
    pub fn z_of_u(&self, u: f64) -> f64 {
        let v = u.clamp(1e-300, 1.0 - 1e-16);
        (self.shifted.quantile(v) - self.scale * norm_quantile(v)).abs()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// `E c(Z̄)` through the coupling realization.
    pub fn expect_cost(&self, c: &CostFunction) -> Result<f64> {
        let r = crate::transport::kappa(
            c,
            &self.shifted,
            &Distribution::normal(0.0, self.scale * self.scale)?,
        )?;
        Ok(r.value)
    }
}

/// One draw of the dyadic Poisson–normal coupling.
#[derive(Clone, Debug)]
pub struct DyadicCouplingSample {
    pub m: f64,
    pub levels: u32,
    /// `Π(m)` — the coarsest Poisson value.
    pub poisson_value: u64,
    /// truncation of `W(m)`: marginally `N(0, m(1 − 2^{−levels}))`.
    pub gaussian_value: f64,
    /// variance of the discarded dyadic tail, `m · 2^{−levels}`.
    pub residual_var_bound: f64,
    /// per-level residuals `V_ℓ = ξ_ℓ √(2^{ℓ+1} m) − Ũ_{ℓ+1}`, ℓ = 0..levels.
    pub level_residuals: Vec<f64>,
    /// per-level standard Gaussians ξ_ℓ.
    pub level_xis: Vec<f64>,
}

/// Sampler for the dyadic coupling at a fixed `(m, levels)`.
#[derive(Clone, Copy, Debug)]
pub struct DyadicCoupling {
    m: f64,
    levels: u32,
}

impl DyadicCoupling {
    pub fn new(m: f64, levels: u32) -> Result<Self> {
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::InvalidParameter(format!("dyadic coupling needs m > 0, got {m}")));
        }
        if levels < 1 {
            return Err(Error::InvalidParameter("dyadic coupling needs levels >= 1".into()));
        }
        if 2f64.powi(levels as i32) * m > 4.0e15 {
            return Err(Error::InvalidParameter(
                "2^levels · m too large for exact integer Poisson sampling".into(),
            ));
        }
        Ok(DyadicCoupling { m, levels })
    }

    /// Smallest level count with residual variance `m 2^{−L} <= 1e−4 · m`.
    pub fn default_levels() -> u32 {
        14
    }

    /// Requires `m 2^{−levels} <= bound · m`.
    pub fn with_residual_bound(m: f64, relative_bound: f64) -> Result<Self> {
        let levels = (-relative_bound.log2()).ceil() as u32;
        if levels < 1 {
            return Err(Error::InvalidParameter(
                "residual bound too loose; need at least one level".into(),
            ));
        }
        Self::new(m, levels)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DyadicCouplingSample {
        let top_mean = 2f64.powi(self.levels as i32) * self.m;
        let mut upper: u64 = rand_distr::Poisson::new(top_mean).unwrap().sample(rng) as u64;
        let mut xis = vec![0.0f64; self.levels as usize];
        let mut residuals = vec![0.0f64; self.levels as usize];
        let mut w = 0.0;
        for level in (0..self.levels).rev() {
            // Π(2^ℓ m) | Π(2^{ℓ+1} m) = n  ~  Binomial(n, 1/2)
            let b = if upper == 0 {
                0
            } else {
                rand_distr::Binomial::new(upper, 0.5).unwrap().sample(rng)
            };
            let utilde = 2.0 * b as f64 - upper as f64;
            // conditional symmetric-binomial cdf at Ũ and just below it
            let cdf_at = binom_half_cdf(upper, b as i64);
            let cdf_before = binom_half_cdf(upper, b as i64 - 1);
            let delta: f64 = rng.random();
            let v = (cdf_before + delta * (cdf_at - cdf_before)).clamp(1e-300, 1.0 - 1e-16);
            let xi = norm_quantile(v);
            let lscale = (2f64.powi(level as i32 + 1) * self.m).sqrt();
            xis[level as usize] = xi;
            residuals[level as usize] = xi * lscale - utilde;
            w += xi * lscale * 2f64.powi(-(level as i32) - 1);
            upper = b;
        }
        DyadicCouplingSample {
            m: self.m,
            levels: self.levels,
            poisson_value: upper,
            gaussian_value: w,
            residual_var_bound: self.m * 2f64.powi(-(self.levels as i32)),
            level_residuals: residuals,
            level_xis: xis,
        }
    }
}

/// Exact `W₂²` between the symmetric ±1 walk at time n and `N(0, n)`
/// (quantile-coupling second moment on the exact binomial lattice law).
pub fn binomial_gaussian_coupling(n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("walk length must be >= 1".into()));
    }
    if n > 1 << 14 {
        return Err(Error::InvalidParameter(format!(
            "n = {n} beyond the exact-mode cap 2^14"
        )));
    }
    let walk = Distribution::rademacher()
        .as_lattice()
        .unwrap()
        .convolve_n(n)?;
    let coupling = QuantileCoupling::new(walk, n, 1.0)?;
    Ok(coupling.z_law().second_moment())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::norm_cdf;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn rademacher_coupling(n: u32) -> QuantileCoupling {
        let law = Distribution::rademacher().as_lattice().unwrap().convolve_n(n).unwrap();
        QuantileCoupling::new(law, n, 1.0).unwrap()
    }

    #[test]
    fn rademacher_single_draw() {
        let qc = rademacher_coupling(1);
        // u in the lower atom, δ = 0.5: G = Φ⁻¹(0.25), Z = |−1 − Φ⁻¹(0.25)|
        let g = qc.gaussian_coord(0.25, 0.5);
        close(g, -0.6744897501960817, 1e-12);
        close(qc.z_of_u(0.25, 0.5), 0.3255102498039183, 1e-12);
    }

    #[test]
    fn rademacher_second_moment_closed_form() {
        let qc = rademacher_coupling(1);
        let exact = 2.0 - 2.0 * (2.0 / std::f64::consts::PI).sqrt();
        close(qc.z_law().second_moment(), exact, 1e-12);
        close(qc.expect_cost(&crate::cost::power_p(2.0).unwrap()).unwrap(), exact, 1e-10);
    }

    #[test]
    fn degenerate_sum_is_absolute_gaussian() {
        let point = LatticeLaw::new(0.0, 1.0, vec![(0, 1.0)]).unwrap();
        let qc = QuantileCoupling::new(point, 1, 1.0).unwrap();
        let z = qc.z_law();
        close(z.second_moment(), 1.0, 1e-13);
        // Z has the law of |N(0,1)|
        close(z.cdf(1.0), 2.0 * norm_cdf(1.0) - 1.0, 1e-13);
        close(z.mean(), (2.0 / std::f64::consts::PI).sqrt(), 1e-13);
    }

    #[test]
    fn coupling_matches_transport_kappa() {
        let law = Distribution::centered_poisson(1.0)
            .unwrap()
            .as_lattice()
            .unwrap()
            .convolve_n(4)
            .unwrap();
        let qc = QuantileCoupling::new(law.clone(), 4, 1.0).unwrap();
        for c in [crate::cost::power_p(2.0).unwrap(), crate::cost::psi_x(1.0).unwrap()] {
            let via_coupling = qc.expect_cost(&c).unwrap();
            let via_kappa = crate::transport::kappa(
                &c,
                &Distribution::from_lattice(law.clone()),
                &Distribution::normal(0.0, 4.0).unwrap(),
            )
            .unwrap();
            close(via_coupling, via_kappa.value, 1e-8);
        }
        // and the z-law second moment is a third route for the quadratic cost
        close(
            qc.z_law().second_moment(),
            qc.expect_cost(&crate::cost::power_p(2.0).unwrap()).unwrap(),
            1e-9,
        );
    }

    #[test]
    fn expectation_plus_consistency() {
        let qc = rademacher_coupling(2);
        let z = qc.z_law();
        // E(Z − 0)_+ equals E Z; numeric derivative of t ↦ E(Z−t)_+ is −P(Z > t)
        let t = 0.7;
        let h = 1e-6;
        let slope = (z.expectation_plus(t + h) - z.expectation_plus(t - h)) / (2.0 * h);
        close(slope, -(1.0 - z.cdf(t)), 1e-5);
        // quantile inverts the cdf
        let q = z.quantile(0.8);
        close(z.cdf(q), 0.8, 1e-9);
    }

    #[test]
    fn shifted_coupling_pathwise_bound() {
        let law = Distribution::rademacher().as_lattice().unwrap().convolve_n(2).unwrap();
        let qc = QuantileCoupling::new(law.clone(), 2, 1.0).unwrap();
        let sc = ShiftedCoupling::new(law, 2, 1.0, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let u: f64 = rng.random();
            assert!(sc.z_of_u(u) <= qc.z_of_u_canonical(u) + 1.0 + 1e-12);
        }
        // h must match the step
        assert!(ShiftedCoupling::new(
            Distribution::rademacher().as_lattice().unwrap().clone(),
            1,
            1.0,
            1.0
        )
        .is_err());
    }

    #[test]
    fn shifted_kappa_two_routes() {
        let law = Distribution::centered_poisson(2.0)
            .unwrap()
            .as_lattice()
            .unwrap()
            .clone();
        let sc = ShiftedCoupling::new(law.clone(), 2, 1.0, 1.0).unwrap();
        let c = crate::cost::power_p(2.0).unwrap();
        let via_coupling = sc.expect_cost(&c).unwrap();
        let direct = crate::transport::kappa(
            &c,
            &Distribution::lattice_uniform_shift(law),
            &Distribution::normal(0.0, 2.0).unwrap(),
        )
        .unwrap();
        close(via_coupling, direct.value, 1e-8);
    }

    #[test]
    fn shifted_median_at_zero() {
        let point = LatticeLaw::new(0.0, 1.0, vec![(0, 1.0)]).unwrap();
        let sc = ShiftedCoupling::new(point, 1, 1.0, 1.0).unwrap();
        close(sc.z_of_u(0.5), 0.0, 1e-12);
    }

    #[test]
    fn dyadic_marginals_smoke() {
        let dc = DyadicCoupling::new(1.0, 12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 20_000;
        let mut sum_w = 0.0;
        let mut sum_w2 = 0.0;
        let mut sum_p = 0.0;
        for _ in 0..n {
            let s = dc.sample(&mut rng);
            sum_w += s.gaussian_value;
            sum_w2 += s.gaussian_value * s.gaussian_value;
            sum_p += s.poisson_value as f64;
        }
        let nf = n as f64;
        close(sum_w / nf, 0.0, 4.0 / nf.sqrt());
        close(sum_w2 / nf, 1.0, 0.05);
        close(sum_p / nf, 1.0, 4.0 / nf.sqrt());
        // residual bookkeeping
        let s = dc.sample(&mut rng);
        close(s.residual_var_bound, 2f64.powi(-12), 1e-18);
        assert_eq!(s.level_xis.len(), 12);
    }

    #[test]
    fn dyadic_rejects_bad_parameters() {
        assert!(DyadicCoupling::new(0.0, 10).is_err());
        assert!(DyadicCoupling::new(1.0, 0).is_err());
        assert!(DyadicCoupling::with_residual_bound(1.0, 1e-4).unwrap().levels >= 14);
    }

    #[test]
    fn walk_coupling_reference_values() {
        let w1 = binomial_gaussian_coupling(1).unwrap();
        let exact = 2.0 - 2.0 * (2.0 / std::f64::consts::PI).sqrt();
        close(w1, exact, 1e-12);
        assert!(w1 <= (33.0 / 16.0f64).min(2.0 * (1.0 - (2.0 / std::f64::consts::PI).sqrt())));
        for &n in &[2u32, 8, 64, 256] {
            let v = binomial_gaussian_coupling(n).unwrap();
            assert!(v <= 33.0 / 16.0, "n={n}: {v}");
        }
        assert!(binomial_gaussian_coupling(0).is_err());
        assert!(binomial_gaussian_coupling(1 << 15).is_err());
    }

    #[test]
    fn massart_envelope_on_grid() {
        // |S_n − G_n| <= 3/2 + Y²/4 with S_n = F_n⁻¹(Φ(Y)), Y = G_n/√n
        for &n in &[1u32, 2, 4, 16, 64] {
            let law = Distribution::rademacher().as_lattice().unwrap().convolve_n(n).unwrap();
            let sqrt_n = (n as f64).sqrt();
            let mut y = -8.0;
            while y <= 8.0 {
                let u = norm_cdf(y).clamp(1e-300, 1.0 - 1e-16);
                let s = law.quantile(u);
                let g = sqrt_n * y;
                assert!(
                    (s - g).abs() <= 1.5 + y * y / 4.0 + 1e-9,
                    "n={n}, y={y}: |{s} − {g}|"
                );
                y += 0.01;
            }
        }
    }
}
