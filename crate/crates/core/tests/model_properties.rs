//! Copula, simulation and transform properties checked against independent oracles.

mod common;

use migcopula::copulas::{Copula, CopulaFamily, ParamKind};
use migcopula::process::{
    apply_psi, simulate, stationary_marginal_cdf, ClimateLink, LinkFn, LinkTarget, ModelSpec, Psi,
};
use migcopula::rng::{derive_seed, UniformStream};
use migcopula::specfun::{std_normal_cdf, std_normal_quantile};
use migcopula::stats::{ks_uniform, ks_uniform_statistic};
use migcopula::transform::{gaussianize, mixed_difference, DiscreteMarginal, PitMode};
use proptest::prelude::*;

use common::{central_diff, gl_on, kendall_tau, poisson_draw, stationary_draws};

#[test]
fn gaussian_cdf_matches_double_integral_of_bivariate_density() {
    let rho: f64 = 0.5;
    let (a, b) = (
        std_normal_quantile(0.3).unwrap(),
        std_normal_quantile(0.7).unwrap(),
    );
    let det = 1.0 - rho * rho;
    let phi2 = |x: f64, y: f64| {
        (-(x * x - 2.0 * rho * x * y + y * y) / (2.0 * det)).exp() / (2.0 * std::f64::consts::PI * det.sqrt())
    };
    let mut oracle = 0.0;
    for (x, wx) in gl_on(200, -12.0, a) {
        for (y, wy) in gl_on(200, -12.0, b) {
            oracle += wx * wy * phi2(x, y);
        }
    }
    let c = Copula::Gaussian { rho }.cdf(0.3, 0.7).unwrap();
    assert!((c - oracle).abs() < 1e-6, "{c} vs {oracle}");
}

#[test]
fn trivial_cdf_values() {
    assert!((Copula::Independence.cdf(0.3, 0.7).unwrap() - 0.21).abs() < 1e-15);
    assert!((Copula::Gumbel { alpha: 1.0 }.cdf(0.3, 0.7).unwrap() - 0.21).abs() < 1e-14);
    assert!((Copula::Gaussian { rho: 0.0 }.density(0.2, 0.9).unwrap() - 1.0).abs() < 1e-14);
}

#[test]
fn gumbel_density_and_h_match_finite_differences() {
    let g = Copula::Gumbel { alpha: 2.0 };
    let d = 1e-4;
    let cdf = |x: f64, y: f64| g.cdf(x, y).unwrap();
    let mixed = (cdf(0.3 + d, 0.7 + d) - cdf(0.3 + d, 0.7 - d) - cdf(0.3 - d, 0.7 + d) + cdf(0.3 - d, 0.7 - d))
        / (4.0 * d * d);
    assert!((g.density(0.3, 0.7).unwrap() - mixed).abs() < 1e-4);
    let dc_du2 = central_diff(|s| cdf(0.3, s), 0.7, d);
    assert!((g.h(0.3, 0.7).unwrap() - dc_du2).abs() < 1e-5);
}

#[test]
fn gumbel_h_inv_matches_grid_and_bisection() {
    let g = Copula::Gumbel { alpha: 3.0 };
    let h = |x: f64| g.h(x, 0.1).unwrap() - 0.9;
    let grid: Vec<f64> = (1..10_000).map(|i| i as f64 / 10_000.0).collect();
    let k = grid.windows(2).position(|w| h(w[0]) <= 0.0 && h(w[1]) > 0.0).unwrap();
    let (mut lo, mut hi) = (grid[k], grid[k + 1]);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if h(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert!((g.h_inv(0.9, 0.1).unwrap() - 0.5 * (lo + hi)).abs() < 1e-8);
}

fn random_copula(rng: &mut UniformStream, family: CopulaFamily) -> Copula {
    let mut r = |lo: f64, hi: f64| lo + (hi - lo) * rng.next_open01();
    match family {
        CopulaFamily::Independence => Copula::Independence,
        CopulaFamily::Gaussian => Copula::Gaussian { rho: r(-0.98, 0.98) },
        CopulaFamily::StudentT => Copula::StudentT {
            rho: r(-0.98, 0.98),
            nu: r(2.1, 60.0),
        },
        CopulaFamily::Gumbel => Copula::Gumbel { alpha: r(1.0, 30.0) },
    }
}

const FAMILIES: [CopulaFamily; 4] = [
    CopulaFamily::Independence,
    CopulaFamily::Gaussian,
    CopulaFamily::StudentT,
    CopulaFamily::Gumbel,
];

#[test]
fn frechet_bounds_on_random_points() {
    let mut rng = UniformStream::new(11);
    for family in FAMILIES {
        let n = if family == CopulaFamily::StudentT { 2_000 } else { 10_000 };
        for _ in 0..n {
            let c = random_copula(&mut rng, family);
            let (u1, u2) = (rng.next_open01(), rng.next_open01());
            let v = c.cdf(u1, u2).unwrap();
            assert!(v >= (u1 + u2 - 1.0).max(0.0) - 1e-12 && v <= u1.min(u2) + 1e-12, "{c:?} {u1} {u2} {v}");
        }
    }
}

#[test]
fn h_strictly_increasing_on_grid() {
    let mut rng = UniformStream::new(12);
    let grid: Vec<f64> = (1..=1000).map(|i| i as f64 / 1001.0).collect();
    for family in &FAMILIES[1..] {
        for _ in 0..5 {
            let c = random_copula(&mut rng, *family);
            let u2 = 0.05 + 0.9 * rng.next_open01();
            let h: Vec<f64> = grid.iter().map(|&x| c.h(x, u2).unwrap()).collect();
            assert!(h.windows(2).all(|w| w[1] >= w[0]), "{c:?} at u2={u2}");
            assert!(h.last().unwrap() > h.first().unwrap());
        }
    }
}

#[test]
fn reparameterization_roundtrip() {
    assert_eq!(ParamKind::Correlation.to_unconstrained(0.0), 0.0);
    assert!(ParamKind::GumbelAlpha.to_unconstrained(2.0).abs() < 1e-15);
    let mut rng = UniformStream::new(13);
    for family in &FAMILIES[1..] {
        for _ in 0..100 {
            let c = random_copula(&mut rng, *family);
            let back = Copula::from_unconstrained(*family, &c.to_unconstrained()).unwrap();
            for (a, b) in c.params().iter().zip(back.params()) {
                assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "{c:?} -> {back:?}");
            }
        }
    }
}

#[test]
fn independence_paths_reproduce_innovations() {
    let p = simulate(&ModelSpec::mag1(Copula::Gaussian { rho: 0.0 }), 200, 10, 5, None).unwrap();
    for (u, w) in p.u.iter().zip(&p.w) {
        assert!((u - w).abs() < 1e-14);
    }
    let q = simulate(
        &ModelSpec::magmar11(Copula::Independence, Copula::Independence),
        200,
        10,
        5,
        None,
    )
    .unwrap();
    assert_eq!(q.u, q.w);
}

#[test]
fn lag_one_kendall_tau_matches_large_sample_oracle() {
    let spec = ModelSpec::mag1(Copula::Gaussian { rho: 0.5 });
    let big = simulate(&spec, 1_000_000, 500, 1001, None).unwrap().u;
    let oracle = kendall_tau(&big[1..], &big[..big.len() - 1]);
    let small = simulate(&spec, 20_000, 500, 1002, None).unwrap().u;
    let tau = kendall_tau(&small[1..], &small[..small.len() - 1]);
    assert!((tau - oracle).abs() < 0.03, "{tau} vs {oracle}");
    // Closed form for the Gaussian case: lag-1 normal-score correlation theta*sqrt(1-theta^2).
    let closed = 2.0 / std::f64::consts::PI * (0.5 * 0.75f64.sqrt()).asin();
    assert!((oracle - closed).abs() < 0.005);
}

#[test]
fn simulation_is_deterministic() {
    let spec = ModelSpec::magmar11(Copula::Gumbel { alpha: 1.7 }, Copula::StudentT { rho: 0.3, nu: 6.0 });
    let a = simulate(&spec, 500, 100, 77, None).unwrap();
    let b = simulate(&spec, 500, 100, 77, None).unwrap();
    assert_eq!(a, b);
    let c = simulate(&spec, 500, 100, 78, None).unwrap();
    assert_ne!(a.u, c.u);
}

#[test]
fn magmar_recursion_recovers_innovations() {
    for (ar, mag) in [
        (Copula::Gaussian { rho: 0.6 }, Copula::Gaussian { rho: -0.3 }),
        (Copula::StudentT { rho: 0.4, nu: 5.0 }, Copula::Gumbel { alpha: 2.5 }),
        (Copula::Gumbel { alpha: 1.8 }, Copula::StudentT { rho: 0.5, nu: 9.0 }),
    ] {
        let p = simulate(&ModelSpec::magmar11(ar, mag), 2000, 100, 3, None).unwrap();
        let mut prev = p.initial;
        for t in 0..p.len() {
            let s = ar.h(p.u[t], prev.0).unwrap();
            let w = mag.h(s, prev.1).unwrap();
            assert!((w - p.w[t]).abs() < 1e-8, "{ar:?}/{mag:?} at {t}");
            prev = (p.u[t], p.w[t]);
        }
    }
}

#[test]
fn climate_link_ranges() {
    let mut rng = UniformStream::new(21);
    for _ in 0..2000 {
        let b0 = 4.0 * rng.next_open01() - 2.0;
        let b1 = 2.0 * rng.next_open01() - 1.0;
        let cmax = (5.0 - b0.abs()) / b1.abs().max(1e-9);
        let c = (2.0 * rng.next_open01() - 1.0) * cmax.min(50.0);
        let tanh = ClimateLink {
            link: LinkFn::Tanh,
            beta0: b0,
            beta1: b1,
            target: LinkTarget::Mag,
        };
        let v = tanh.eval(c).unwrap();
        assert!((-0.9999..=0.9999).contains(&v));
        let exp = ClimateLink {
            link: LinkFn::OnePlusExp,
            ..tanh
        };
        assert!(exp.eval(c).unwrap() >= 1.0);
    }
}

#[test]
fn stationary_margin_of_mag1_is_uniform() {
    for (i, c) in [
        Copula::Gaussian { rho: 0.7 },
        Copula::StudentT { rho: -0.4, nu: 4.0 },
        Copula::Gumbel { alpha: 3.0 },
    ]
    .into_iter()
    .enumerate()
    {
        let psi = stationary_marginal_cdf(&ModelSpec::mag1(c), 100_000, derive_seed(40, i as u64)).unwrap();
        assert!(psi.sup_distance_to_identity() < 0.02, "{c:?}");
        assert!(psi.is_strictly_increasing());
        assert!(psi.eval(1e-12) < 1e-6 && psi.eval(1.0 - 1e-12) > 1.0 - 1e-6);
    }
    let indep = ModelSpec::magmar11(Copula::Independence, Copula::Independence);
    let psi = stationary_marginal_cdf(&indep, 20_000, 41).unwrap();
    assert!(psi.sup_distance_to_identity() < 0.02);
    assert!(stationary_marginal_cdf(&indep, 100, 41).is_err());
}

#[test]
fn psi_adjusts_magmar_margin() {
    let spec = ModelSpec::magmar11(Copula::Gumbel { alpha: 2.0 }, Copula::Gaussian { rho: 0.6 });
    let psi = stationary_marginal_cdf(&spec, 100_000, 50).unwrap();
    let fresh = stationary_draws(&spec, 10_000, 51);
    assert!(ks_uniform_statistic(&fresh) > 0.02);
    assert!(ks_uniform_statistic(&apply_psi(&psi, &fresh)) < 0.02);

    let id = Psi::identity();
    assert_eq!(apply_psi(&id, &fresh), fresh);
    let sorted: Vec<f64> = (1..200).map(|i| i as f64 / 200.0).collect();
    let mapped = apply_psi(&psi, &sorted);
    assert!(mapped.windows(2).all(|w| w[1] > w[0]));
    assert!(mapped.iter().all(|&x| x > 0.0 && x < 1.0));
}

#[test]
fn empirical_marginal_of_poisson_sample() {
    let mut rng = UniformStream::new(60);
    let a: Vec<i64> = (0..100_000).map(|_| poisson_draw(&mut rng, 3.0)).collect();
    let m = DiscreteMarginal::empirical(&a).unwrap();
    let exact = (-3.0f64).exp() * 27.0 / 6.0;
    assert!((m.pmf(3) - exact).abs() < 0.01);
    assert!((exact - 0.2240).abs() < 1e-4);
    let total: f64 = m.probabilities().iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn randomized_transform_with_true_marginal_is_uniform() {
    let mut rng = UniformStream::new(61);
    let a: Vec<i64> = (0..20_000).map(|_| poisson_draw(&mut rng, 3.0)).collect();
    let m = DiscreteMarginal::poisson(3.0).unwrap();
    let s = mixed_difference(&a, &m, 62, PitMode::Randomized).unwrap();
    assert!(ks_uniform(&s.u).p_value > 0.01);
    let again = mixed_difference(&a, &m, 62, PitMode::Randomized).unwrap();
    assert_eq!(s, again);
    for (ut, at) in s.u.iter().zip(&a) {
        assert!(*ut >= m.cdf_left(*at) - 1e-12 && *ut <= m.cdf(*at) + 1e-12);
    }
}

#[test]
fn gaussianize_oracles() {
    let z = gaussianize(&[0.025, 0.975]).unwrap();
    assert!((z[0] + 1.95996).abs() < 1e-4 && (z[1] - 1.95996).abs() < 1e-4);
    let xs: Vec<f64> = (0..1000).map(|i| -5.0 + 10.0 * i as f64 / 999.0).collect();
    let u: Vec<f64> = xs.iter().map(|&x| std_normal_cdf(x)).collect();
    for (x, back) in xs.iter().zip(gaussianize(&u).unwrap()) {
        assert!((x - back).abs() < 1e-9, "{x}");
    }
}

proptest! {
    #[test]
    fn roundtrip_for_any_family(fam in 0usize..4, p1 in 0.0f64..1.0, p2 in 0.0f64..1.0,
                                v in 0.001f64..0.999, u2 in 0.001f64..0.999) {
        let c = match fam {
            0 => Copula::Independence,
            1 => Copula::Gaussian { rho: -0.95 + 1.9 * p1 },
            2 => Copula::StudentT { rho: -0.95 + 1.9 * p1, nu: 2.1 + 40.0 * p2 },
            _ => Copula::Gumbel { alpha: 1.0 + 20.0 * p1 },
        };
        let u1 = c.h_inv(v, u2).unwrap();
        prop_assert!((c.h(u1, u2).unwrap() - v).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&c.cdf(u1, u2).unwrap()));
        prop_assert!(c.density(u1, u2).unwrap() > 0.0);
    }

    #[test]
    fn transform_preserves_count_order(a in proptest::collection::vec(0i64..15, 2..80), seed in 0u64..500) {
        let m = DiscreteMarginal::empirical(&a).unwrap();
        for mode in [PitMode::Randomized, PitMode::Mid] {
            let s = mixed_difference(&a, &m, seed, mode).unwrap();
            for i in 0..a.len() {
                for j in 0..a.len() {
                    if a[i] < a[j] {
                        prop_assert!(s.u[i] < s.u[j]);
                    }
                }
            }
        }
    }
}
