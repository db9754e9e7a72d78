use std::f64::consts::PI;

use fractrace::heat_kernel::{kernel_at_zero, kernel_at_zero_t, mixed_kernel_at_zero, relativistic_kernel_at_zero};
use fractrace::mc::mean;
use fractrace::subordinator::StableIndex;

const N: u64 = 1_000_000;

#[test]
fn relativistic_small_mass_is_stable() {
    for (d, alpha, t) in [(1, 1.0, 0.5), (2, 1.5, 2.0)] {
        let est = relativistic_kernel_at_zero(d, alpha, 1e-8, t, N, 1).unwrap();
        assert!(est.z_score(kernel_at_zero_t(d, alpha, t).unwrap()) < 3.0, "{est:?}");
    }
}

// The same seed gives common random numbers, so the rescaled estimates
// inherit the pathwise monotonicity in t.
#[test]
fn relativistic_limit_law() {
    let (d, alpha, m) = (1, 1.0, 1.0);
    let p1 = kernel_at_zero(d, alpha).unwrap();
    let scaled: Vec<_> = [1e-1, 1e-2, 1e-3]
        .into_iter()
        .map(|t: f64| relativistic_kernel_at_zero(d, alpha, m, t, N, 5).unwrap().scaled(t.powf(d as f64 / alpha) * (-m * t).exp()))
        .collect();
    assert!(scaled.windows(2).all(|w| w[1].value > w[0].value));
    assert!(scaled[0].z_score(p1) > 3.0);
    assert!(scaled[2].z_score(p1) < 3.0, "{:?} vs {p1}", scaled[2]);
}

#[test]
fn relativistic_lower_bound() {
    let (d, alpha, m) = (1usize, 1.0, 1.0f64);
    let idx = StableIndex::new(alpha).unwrap();
    let half_d = d as f64 / 2.0;
    // (4π)^{-d/2} e^{-m} E[S_{1,m}^{-d/2}] = (4π)^{-d/2} E[S^{-d/2} e^{-m^{2/α} S}].
    let bound = mean(N, 11, |rng| {
        let s = idx.draw_unit(rng);
        s.powf(-half_d) * (-m.powf(2.0 / alpha) * s).exp()
    })
    .scaled((4.0 * PI).powf(-half_d));
    for (k, t) in [0.9, 0.5, 0.1, 0.01].into_iter().enumerate() {
        let lhs = relativistic_kernel_at_zero(d, alpha, m, t, N, 20 + k as u64).unwrap().scaled(t.powf(d as f64 / alpha));
        assert!(lhs.value >= bound.value - 3.0 * lhs.stderr.hypot(bound.stderr), "t={t}: {lhs:?} < {bound:?}");
    }
}

#[test]
fn mixed_small_weight_is_stable() {
    let est = mixed_kernel_at_zero(1, 0.8, 1.6, 1e-8, 1.0, N, 7).unwrap();
    assert!(est.z_score(kernel_at_zero(1, 0.8).unwrap()) < 3.0, "{est:?}");
}

#[test]
fn mixed_comparability_band() {
    let (d, alpha, beta, a) = (2usize, 0.8, 1.6, 1.0f64);
    let df = d as f64;
    let upper = kernel_at_zero(d, alpha).unwrap().max(a.powf(-df / beta) * kernel_at_zero(d, beta).unwrap());
    let ratios: Vec<f64> = [1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0]
        .into_iter()
        .enumerate()
        .map(|(k, t)| {
            let est = mixed_kernel_at_zero(d, alpha, beta, a, t, N, 30 + k as u64).unwrap();
            let f = t.powf(-df / alpha).min((a * t).powf(-df / beta));
            // p ≤ min of the two single-index kernels ≤ upper · f.
            assert!(est.value <= upper * f + 3.0 * est.stderr);
            est.value / f
        })
        .collect();
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &r| (l.min(r), h.max(r)));
    assert!(hi / lo < 10.0, "{ratios:?}");
}
