use hzeros_core::ensembles::{derive_seed, ensemble_pair, sample_coefficients, EnsembleKind, HarmonicPolynomial};
use hzeros_core::montecarlo::monte_carlo_expectation;
use hzeros_core::zerofinder::{evaluate, find_zeros, zero_radius_bound, ZeroFinderOptions};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Plain Newton on the real 2x2 system from every node of a square grid,
/// written independently of the library's damped iteration.
fn grid_oracle(h: &HarmonicPolynomial, side: usize) -> Vec<Complex64> {
    let radius = zero_radius_bound(h).unwrap().min(50.0);
    let eval = |z: Complex64| -> (Complex64, [[f64; 2]; 2]) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for (j, a) in h.a().iter().enumerate() {
            p += a * z.powu(j as u32);
            if j > 0 {
                dp += a * j as f64 * z.powu(j as u32 - 1);
            }
        }
        let mut q = Complex64::new(0.0, 0.0);
        let mut dq = Complex64::new(0.0, 0.0);
        for (j, b) in h.b().iter().enumerate() {
            q += b * z.powu(j as u32);
            if j > 0 {
                dq += b * j as f64 * z.powu(j as u32 - 1);
            }
        }
        // H = u + i v; d/dx = p' + conj(q'), d/dy = i p' - i conj(q')
        let hx = dp + dq.conj();
        let hy = Complex64::i() * dp - Complex64::i() * dq.conj();
        (p + q.conj(), [[hx.re, hy.re], [hx.im, hy.im]])
    };
    let mut found: Vec<Complex64> = Vec::new();
    for i in 0..side {
        for k in 0..side {
            let x = -radius + 2.0 * radius * (i as f64 + 0.5) / side as f64;
            let y = -radius + 2.0 * radius * (k as f64 + 0.5) / side as f64;
            let mut z = Complex64::new(x, y);
            let mut ok = false;
            for _ in 0..60 {
                let (v, j) = eval(z);
                let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
                if det == 0.0 || !det.is_finite() {
                    break;
                }
                let dx = (j[1][1] * v.re - j[0][1] * v.im) / det;
                let dy = (-j[1][0] * v.re + j[0][0] * v.im) / det;
                z -= Complex64::new(dx, dy);
                if z.norm() > 10.0 * radius {
                    break;
                }
                if dx.hypot(dy) < 1e-13 * (1.0 + z.norm()) {
                    ok = eval(z).0.norm() < 1e-9 * (1.0 + z.norm()).powi(h.n() as i32);
                    break;
                }
            }
            if ok && !found.iter().any(|w| (w - z).norm() < 1e-7 * (1.0 + z.norm())) {
                found.push(z);
            }
        }
    }
    found
}

#[test]
fn weyl_five_three_seed_seven_matches_grid() {
    let (p, q) = ensemble_pair(EnsembleKind::Weyl, 5, 3).unwrap();
    let h = sample_coefficients(&p, &q, 7).unwrap();
    let set = find_zeros(&h, &ZeroFinderOptions::default()).unwrap();
    assert!(!set.flagged, "{:?}", set.reason);
    let count = set.count();
    assert!((5..=25).contains(&count) && count % 2 == 1);
    let oracle = grid_oracle(&h, 200);
    assert_eq!(count, oracle.len());
    for z in &oracle {
        assert!(set.zeros.iter().any(|w| (w.z - z).norm() < 1e-6 * (1.0 + z.norm())));
    }
}

#[test]
fn fifty_small_instances_match_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let kinds = [EnsembleKind::Weyl, EnsembleKind::Kostlan, EnsembleKind::Naive];
    for i in 0..50u64 {
        let n = rng.random_range(1..=5usize);
        let m = rng.random_range(0..n);
        let kind = kinds[rng.random_range(0..3)];
        let (p, q) = ensemble_pair(kind, n, m).unwrap();
        let h = sample_coefficients(&p, &q, derive_seed(99, i)).unwrap();
        let set = find_zeros(&h, &ZeroFinderOptions::default()).unwrap();
        assert!(!set.flagged, "{kind} n={n} m={m}: {:?}", set.reason);
        let oracle = grid_oracle(&h, 120);
        assert_eq!(set.count(), oracle.len(), "instance {i}: {kind} n={n} m={m}");
    }
}

#[test]
fn wirtinger_pair_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..200u64 {
        let n = rng.random_range(1..=8usize);
        let m = rng.random_range(0..=n);
        let (p, q) = ensemble_pair(EnsembleKind::Kostlan, n, m).unwrap();
        let h = sample_coefficients(&p, &q, i).unwrap();
        let z = Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let v = evaluate(&h, z);
        let step = 1e-5;
        let dx = (evaluate(&h, z + step).value - evaluate(&h, z - step).value) / (2.0 * step);
        let iy = Complex64::new(0.0, step);
        let dy = (evaluate(&h, z + iy).value - evaluate(&h, z - iy).value) / (2.0 * step);
        // d/dz = (d/dx - i d/dy) / 2, d/dzbar = (d/dx + i d/dy) / 2
        let dz = (dx - Complex64::i() * dy) / 2.0;
        let dzbar = (dx + Complex64::i() * dy) / 2.0;
        let scale = 1.0 + v.dz.norm() + v.dzbar.norm();
        assert!((dz - v.dz).norm() < 1e-6 * scale);
        assert!((dzbar - v.dzbar).norm() < 1e-6 * scale);
    }
}

#[test]
fn zero_set_invariants_over_samples() {
    for (kind, n, m) in [(EnsembleKind::Weyl, 6usize, 3usize), (EnsembleKind::Naive, 7, 2), (EnsembleKind::Kostlan, 5, 5)] {
        let (p, q) = ensemble_pair(kind, n, m).unwrap();
        for s in 0..100u64 {
            let h = sample_coefficients(&p, &q, derive_seed(3, s)).unwrap();
            let set = find_zeros(&h, &ZeroFinderOptions::default()).unwrap();
            if set.flagged {
                continue;
            }
            let scale = h.max_coefficient();
            for z in &set.zeros {
                assert!(z.residual <= 1e-9 * scale * (1.0 + z.z.norm()).powi(n as i32));
            }
            for (i, a) in set.zeros.iter().enumerate() {
                for b in &set.zeros[i + 1..] {
                    assert!((a.z - b.z).norm() >= 1e-7 * (1.0 + a.z.norm()));
                }
            }
            assert!(n <= set.count() && set.count() <= n * n);
            if m < n {
                assert_eq!(set.count(), n + 2 * set.sense_reversing);
            }
        }
    }
}

#[test]
fn monte_carlo_is_deterministic_and_consistent() {
    let a = monte_carlo_expectation(EnsembleKind::Weyl, 5, 2, 300, 11).unwrap();
    let b = monte_carlo_expectation(EnsembleKind::Weyl, 5, 2, 300, 11).unwrap();
    assert_eq!(a, b);
    let c = monte_carlo_expectation(EnsembleKind::Weyl, 5, 2, 300, 12).unwrap();
    assert_ne!(a.histogram, c.histogram);
    assert!(a.mean >= 5.0 - 3.0 * a.stderr);
    assert!(a.histogram.keys().all(|k| k % 2 == 1));
    assert_eq!(a.histogram.values().sum::<usize>(), 300);
}

#[test]
fn monte_carlo_analytic_case() {
    let est = monte_carlo_expectation(EnsembleKind::Weyl, 4, 0, 50, 3).unwrap();
    assert_eq!(est.mean, 4.0);
    assert_eq!(est.stderr, 0.0);
}
