//! Property-based and soak tests for the numerical invariants.

use ctl::cost::{entropy_cost, g_p, huber, power_p, psi_x};
use ctl::coupling::DyadicCoupling;
use ctl::dist::Distribution;
use ctl::lattice::LatticeLaw;
use ctl::transport::kappa;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn class_psi_members() -> Vec<ctl::CostFunction> {
    vec![
        entropy_cost(),
        g_p(1.1).unwrap(),
        g_p(1.5).unwrap(),
        g_p(1.9).unwrap(),
        huber(0.4).unwrap(),
        huber(3.0).unwrap(),
    ]
}

proptest! {
    #[test]
    fn cost_even_convex_and_derivative_bounded(t in -50.0f64..50.0, s in -50.0f64..50.0) {
        let mut costs = class_psi_members();
        costs.push(psi_x(1.3).unwrap());
        costs.push(power_p(1.5).unwrap());
        for c in &costs {
            // evenness and nonnegativity
            prop_assert!((c.eval(t) - c.eval(-t)).abs() <= 1e-12 * (1.0 + c.eval(t)));
            prop_assert!(c.eval(t) >= 0.0);
            // midpoint convexity
            let mid = c.eval(0.5 * (t + s));
            prop_assert!(mid <= 0.5 * (c.eval(t) + c.eval(s)) + 1e-10 * (1.0 + mid));
        }
        // x φ'(x) <= 2 φ(x) and φ(x) <= x²/2 for class-Ψ members
        let x = t.abs();
        for c in class_psi_members() {
            prop_assert!(x * c.deriv(x) <= 2.0 * c.eval(x) + 1e-12);
            prop_assert!(c.eval(x) <= 0.5 * x * x + 1e-12);
        }
        // ψ_x(t) <= t²/4
        let px = psi_x(0.8).unwrap();
        prop_assert!(px.eval(t) <= 0.25 * t * t + 1e-12);
    }

    #[test]
    fn mixing_tail_is_a_probability_tail(y in 0.0f64..100.0, z in 0.001f64..40.0) {
        for c in class_psi_members() {
            let tail = c.mixing_tail(y).unwrap();
            prop_assert!((0.0..=1.0 + 1e-12).contains(&tail));
            if y > 0.0 {
                prop_assert!(c.mixing_tail(y * 1.5).unwrap() <= tail + 1e-12);
            }
            // φ'(z) = ∫₀^z tail: derivative of deriv stays below the tail at 0
            prop_assert!(c.deriv(z) <= z + 1e-12);
        }
    }

    #[test]
    fn lattice_quantile_galois(u in 0.001f64..0.999, x in -6.0f64..6.0) {
        let laws = [
            Distribution::rademacher(),
            Distribution::centered_poisson(2.0).unwrap(),
            Distribution::centered_bernoulli(0.3).unwrap(),
        ];
        for law in &laws {
            let q = law.quantile(u);
            prop_assert!(law.cdf(q) >= u - 1e-12);
            let c = law.cdf(x);
            if c > 0.0 && c < 1.0 {
                prop_assert!(law.quantile(c) <= x + 1e-12);
            }
        }
    }

    #[test]
    fn convolution_preserves_mean_and_variance(
        p1 in 0.05f64..0.95,
        gap in 1u8..4,
        n in 1u32..24,
    ) {
        let atoms = vec![(0i64, p1), (gap as i64, 1.0 - p1)];
        let law = LatticeLaw::new(-0.7, 0.5, atoms).unwrap();
        let m = law.moment(1);
        let v = law.moment(2) - m * m;
        let sn = law.convolve_n(n).unwrap();
        let mn = sn.moment(1);
        let vn = sn.moment(2) - mn * mn;
        prop_assert!((mn - n as f64 * m).abs() <= 1e-10 * (1.0 + (n as f64 * m).abs()));
        prop_assert!((vn - n as f64 * v).abs() <= 1e-10 * (1.0 + n as f64 * v));
    }
}

#[test]
fn transport_symmetry_on_random_lattice_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let c = psi_x(0.9).unwrap();
    for _ in 0..20 {
        let mk = |rng: &mut ChaCha8Rng| {
            let n = rng.random_range(2..6);
            let atoms: Vec<(i64, f64)> = (0..n)
                .map(|i| (2 * i as i64, rng.random::<f64>() + 0.05))
                .collect();
            let total: f64 = atoms.iter().map(|a| a.1).sum();
            let atoms = atoms.into_iter().map(|(k, p)| (k, p / total)).collect();
            Distribution::from_lattice(LatticeLaw::new(-1.3, 0.5, atoms).unwrap())
        };
        let f = mk(&mut rng);
        let g = mk(&mut rng);
        let ab = kappa(&c, &f, &g).unwrap().value;
        let ba = kappa(&c, &g, &f).unwrap().value;
        assert!((ab - ba).abs() <= 1e-10 * (1.0 + ab));
    }
}

#[test]
fn sampler_kolmogorov_soak() {
    // empirical cdf within 3/√N of the analytic cdf at N = 1e5
    let n = 100_000usize;
    let tol = 3.0 / (n as f64).sqrt();
    let laws = [
        ("normal", Distribution::standard_normal()),
        ("poisson", Distribution::centered_poisson(2.0).unwrap()),
        ("exponential", Distribution::centered_exponential()),
        ("surrogate", Distribution::lindeberg_surrogate(1.0).unwrap()),
        (
            "smoothed walk",
            Distribution::smooth(&Distribution::rademacher(), 0.5).unwrap(),
        ),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
    for (name, law) in &laws {
        let mut xs = law.sample(&mut rng, n);
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // tie-aware two-sided Kolmogorov statistic (atoms produce blocks)
        let mut ks: f64 = 0.0;
        let mut i = 0usize;
        while i < n {
            let x = xs[i];
            let mut j = i;
            while j < n && xs[j] == x {
                j += 1;
            }
            let f = law.cdf(x);
            let f_left = law.cdf(x - 1e-9 * (1.0 + x.abs()));
            ks = ks
                .max((f - j as f64 / n as f64).abs())
                .max((f_left - i as f64 / n as f64).abs());
            i = j;
        }
        assert!(ks < tol, "{name}: KS distance {ks} above {tol}");
    }
}

#[test]
fn dyadic_levels_marginals_and_orthogonality() {
    // m = 4, 20 levels, 1e5 samples: the truncated Gaussian marginal and the
    // per-level orthogonality of V_ℓ = ξ_ℓ √(2^{ℓ+1} m) − Ũ_{ℓ+1}
    let m = 4.0;
    let levels = 20u32;
    let samples = 100_000usize;
    let coupling = DyadicCoupling::new(m, levels).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31337);
    let mut w_sum = 0.0;
    let mut w_sq = 0.0;
    let (la, lb) = (2usize, 9usize);
    let mut va = Vec::with_capacity(samples);
    let mut vb = Vec::with_capacity(samples);
    let mut xi_a = Vec::with_capacity(samples);
    let mut xi_b = Vec::with_capacity(samples);
    for _ in 0..samples {
        let s = coupling.sample(&mut rng);
        w_sum += s.gaussian_value;
        w_sq += s.gaussian_value * s.gaussian_value;
        va.push(s.level_residuals[la]);
        vb.push(s.level_residuals[lb]);
        xi_a.push(s.level_xis[la]);
        xi_b.push(s.level_xis[lb]);
    }
    let nf = samples as f64;
    let mean = w_sum / nf;
    assert!(mean.abs() < 4.0 * (m / nf).sqrt(), "W mean {mean}");
    let var = w_sq / nf - mean * mean;
    let target = m * (1.0 - 2f64.powi(-(levels as i32)));
    assert!((var - target).abs() < 0.02 * target, "W variance {var} vs {target}");

    // orthogonality of level residuals: sample covariance within 4 SE of 0
    let ma = va.iter().sum::<f64>() / nf;
    let mb = vb.iter().sum::<f64>() / nf;
    let mut cov = 0.0;
    let mut cov_sq = 0.0;
    for i in 0..samples {
        let prod = (va[i] - ma) * (vb[i] - mb);
        cov += prod;
        cov_sq += prod * prod;
    }
    cov /= nf;
    let se = ((cov_sq / nf - cov * cov).max(0.0) / nf).sqrt();
    assert!(cov.abs() <= 4.0 * se, "cov {cov} vs SE {se}");

    // pairwise independence of the level Gaussians: chi-square on the 4×4
    // quartile histogram, 1% critical value of χ²(9) = 21.666
    let quartile = |x: f64| -> usize {
        if x < -0.6744897501960817 {
            0
        } else if x < 0.0 {
            1
        } else if x < 0.6744897501960817 {
            2
        } else {
            3
        }
    };
    let mut counts = [[0usize; 4]; 4];
    for i in 0..samples {
        counts[quartile(xi_a[i])][quartile(xi_b[i])] += 1;
    }
    let expected = nf / 16.0;
    let chi2: f64 = counts
        .iter()
        .flatten()
        .map(|&o| {
            let d = o as f64 - expected;
            d * d / expected
        })
        .sum();
    assert!(chi2 < 21.666, "chi-square {chi2} above the 1% critical value");
}

#[test]
fn shifted_coupling_pathwise_envelope_bulk() {
    // Z̄ <= Z + h/2 pathwise on a common uniform, 1e4 probes
    let law = Distribution::centered_poisson(2.0)
        .unwrap()
        .as_lattice()
        .unwrap()
        .convolve_n(4)
        .unwrap();
    let qc = ctl::coupling::QuantileCoupling::new(law.clone(), 4, 2f64.sqrt()).unwrap();
    let sc = ctl::coupling::ShiftedCoupling::new(law, 4, 2f64.sqrt(), 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10_000 {
        let u: f64 = rng.random();
        assert!(sc.z_of_u(u) <= qc.z_of_u_canonical(u) + 0.5 + 1e-10);
    }
}

#[test]
fn dual_bound_on_extra_smoothed_pairs() {
    // ζ + ε >= κ for every smoothed test pair
    let pairs = [
        (
            Distribution::smooth(&Distribution::centered_bernoulli(0.3).unwrap(), 0.45).unwrap(),
            Distribution::smooth(
                &Distribution::normal(0.0, 0.3 * 0.7).unwrap(),
                0.45,
            )
            .unwrap(),
        ),
        (
            Distribution::smooth(&Distribution::uniform_centered(), 0.25).unwrap(),
            Distribution::smooth(&Distribution::normal(0.0, 1.0 / 12.0).unwrap(), 0.25).unwrap(),
        ),
    ];
    for (f, g) in &pairs {
        for c in [psi_x(0.6).unwrap(), entropy_cost()] {
            let (_, zeta) = ctl::transport::dual_witness(&c, f, g).unwrap();
            let k = kappa(&c, f, g).unwrap().value;
            assert!(zeta >= k - 1e-6, "ζ {zeta} vs κ {k}");
        }
    }
}

#[test]
fn mixture_representation_certifies_members() {
    let grid = [0.5, 1.0, 5.0, 20.0];
    for c in class_psi_members() {
        let err = ctl::cost::mixture_check(&c, &grid).unwrap();
        assert!(err < 1e-8, "{:?}: mixture defect {err}", c.kind());
    }
}
