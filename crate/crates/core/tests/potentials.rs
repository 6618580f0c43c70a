use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stark_core::potentials::{eval_potential, grad_potential, PotentialSpec, RadialTable};

fn random_point(rng: &mut ChaCha8Rng, d: usize, r_lo: f64, r_hi: f64) -> Vec<f64> {
    let dir: Vec<f64> = loop {
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 0.1 && n <= 1.0 {
            break v.iter().map(|a| a / n).collect();
        }
    };
    let r = r_lo * (r_hi / r_lo).powf(rng.gen::<f64>());
    dir.iter().map(|a| a * r).collect()
}

fn sampled_table() -> RadialTable {
    // A Yukawa-screened Coulomb core continued by r^{-3/2}.
    let radii: Vec<f64> = (0..200).map(|i| 0.05 * 1.05f64.powi(i)).collect();
    let values = radii
        .iter()
        .map(|&r| (-r).exp() / r + r.max(1.0).powf(-1.5))
        .collect();
    RadialTable::new(radii, values)
}

fn builtin_kinds() -> Vec<PotentialSpec> {
    vec![
        PotentialSpec::coulomb(1.0),
        PotentialSpec::coulomb(-2.0),
        PotentialSpec::homogeneous(1.0, 0.8),
        PotentialSpec::homogeneous(0.7, 1.5),
        PotentialSpec::homogeneous(1.0, 2.2),
        PotentialSpec::table(1.0, sampled_table(), 0.5),
    ]
}

#[test]
fn documented_values() {
    let zero = PotentialSpec::zero();
    assert_eq!(eval_potential(&zero, 0.3, &[-1.0, 7.0]).unwrap(), 0.0);
    assert_eq!(grad_potential(&zero, 0.3, &[-1.0]).unwrap(), vec![0.0, 0.0]);

    let coulomb = PotentialSpec::coulomb(1.0).with_softening(0.0);
    assert!((eval_potential(&coulomb, 3.0, &[4.0]).unwrap() - 0.2).abs() < 1e-16);
    let g = grad_potential(&coulomb, 3.0, &[4.0]).unwrap();
    assert!((g[0] + 3.0 / 125.0).abs() < 1e-17 && (g[1] + 4.0 / 125.0).abs() < 1e-17);

    let h2 = PotentialSpec::homogeneous(2.0, 2.0).with_softening(0.0);
    assert!((eval_potential(&h2, 0.0, &[1.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
    let h1 = PotentialSpec::homogeneous(1.0, 2.0).with_softening(0.0);
    assert_eq!(grad_potential(&h1, 1.0, &[0.0]).unwrap(), vec![-2.0, 0.0]);
}

#[test]
fn origin_rules() {
    let bare = PotentialSpec::coulomb(1.0).with_softening(0.0);
    assert!(eval_potential(&bare, 0.0, &[0.0]).is_err());
    assert!(grad_potential(&bare, 0.0, &[0.0, 0.0]).is_err());
    let soft = PotentialSpec::coulomb(1.0);
    assert!((eval_potential(&soft, 0.0, &[0.0]).unwrap() - 1.0 / soft.softening).abs() < 1e-9);
    assert_eq!(grad_potential(&soft, 0.0, &[0.0]).unwrap(), vec![0.0, 0.0]);
    assert!(eval_potential(&soft, f64::NAN, &[0.0]).is_err());
}

#[test]
fn validation_of_parameter_ranges() {
    assert!(PotentialSpec::coulomb(1.0).validate(3).is_ok());
    assert!(PotentialSpec::coulomb(1.0)
        .with_delta(0.25)
        .validate(3)
        .is_err());
    assert!(PotentialSpec::homogeneous(1.0, 2.0).validate(2).is_err());
    assert!(PotentialSpec::homogeneous(1.0, 2.0).validate(3).is_ok());
    assert!(PotentialSpec::homogeneous(1.0, 0.5).validate(3).is_err());
    assert!(PotentialSpec::homogeneous(1.0, 0.8)
        .with_delta(0.5)
        .validate(3)
        .is_err());
    assert!(PotentialSpec::coulomb(1.0)
        .with_softening(-1.0)
        .validate(2)
        .is_err());
    assert!(PotentialSpec::table(1.0, sampled_table(), 0.5)
        .validate(2)
        .is_ok());
    let bad = RadialTable::new(vec![1.0, 0.5], vec![1.0, 2.0]);
    assert!(PotentialSpec::table(1.0, bad, 0.5).validate(2).is_err());
}

#[test]
fn decay_bounds_at_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for spec in builtin_kinds() {
        let p_val = 0.5 + spec.delta;
        let p_grad = 1.0 + spec.delta;
        for d in [2usize, 3] {
            if spec.validate(d).is_err() {
                continue;
            }
            let mut c_val = 0.0f64;
            let mut c_grad = 0.0f64;
            let mut samples = Vec::new();
            for _ in 0..2_000 {
                let p = random_point(&mut rng, d, 1.0, 1e6);
                let r = p.iter().map(|a| a * a).sum::<f64>().sqrt();
                let q = eval_potential(&spec, p[0], &p[1..]).unwrap();
                let g = grad_potential(&spec, p[0], &p[1..]).unwrap();
                let gn = g.iter().map(|a| a * a).sum::<f64>().sqrt();
                samples.push((r, q.abs(), gn));
                c_val = c_val.max(q.abs() * r.powf(p_val));
                c_grad = c_grad.max(gn * r.powf(p_grad));
            }
            // Constants fitted on r ≤ 10 must still bound the far field.
            let near = |pick: fn(&(f64, f64, f64)) -> f64, p: f64| {
                samples
                    .iter()
                    .filter(|s| s.0 <= 10.0)
                    .map(|s| pick(s) * s.0.powf(p))
                    .fold(0.0, f64::max)
            };
            let (n_val, n_grad) = (near(|s| s.1, p_val), near(|s| s.2, p_grad));
            for (r, q, g) in samples.iter().filter(|s| s.0 > 1e5) {
                assert!(
                    q * r.powf(p_val) <= 2.0 * n_val,
                    "{spec:?}: value at r = {r}"
                );
                assert!(
                    g * r.powf(p_grad) <= 2.0 * n_grad,
                    "{spec:?}: gradient at r = {r}"
                );
            }
            assert!(c_val.is_finite() && c_grad.is_finite());
            assert!(
                c_val <= 10.0 * spec.decay_constant().max(1.0),
                "{spec:?}: {c_val}"
            );
        }
    }
}

#[test]
fn analytic_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for spec in builtin_kinds().into_iter().take(5) {
        for d in [2usize, 3] {
            for _ in 0..2_000 {
                let p = random_point(&mut rng, d, 1.0, 1e6);
                let r = p.iter().map(|a| a * a).sum::<f64>().sqrt();
                let h = 1e-4 * r;
                let g = grad_potential(&spec, p[0], &p[1..]).unwrap();
                let gn = g.iter().map(|a| a * a).sum::<f64>().sqrt();
                for k in 0..d {
                    let at = |s: f64| {
                        let mut q = p.clone();
                        q[k] += s * h;
                        eval_potential(&spec, q[0], &q[1..]).unwrap()
                    };
                    let fd = (at(-2.0) - 8.0 * at(-1.0) + 8.0 * at(1.0) - at(2.0)) / (12.0 * h);
                    assert!(
                        (fd - g[k]).abs() <= 1e-6 * gn,
                        "{spec:?} at {p:?}: {fd} vs {}",
                        g[k]
                    );
                }
            }
        }
    }
}

#[test]
fn table_follows_declared_power_beyond_last_radius() {
    let spec = PotentialSpec::table(1.0, sampled_table(), 0.5).with_softening(0.0);
    let t = spec.table.as_ref().unwrap();
    let (r_last, v_last) = (*t.radii.last().unwrap(), *t.values.last().unwrap());
    for factor in [2.0, 10.0, 1e3] {
        let r = r_last * factor;
        let v = eval_potential(&spec, r, &[0.0]).unwrap();
        assert!((v / (v_last * factor.powf(-1.0)) - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn homogeneous_scaling(alpha in 0.6f64..2.4, r in 1.0f64..1e4, lambda in 1.0f64..100.0) {
        let spec = PotentialSpec::homogeneous(1.3, alpha).with_softening(0.0);
        let a = eval_potential(&spec, r, &[0.5 * r]).unwrap();
        let b = eval_potential(&spec, lambda * r, &[0.5 * lambda * r]).unwrap();
        prop_assert!((b / a - lambda.powf(-alpha)).abs() <= 1e-12 * lambda.powf(-alpha));
    }

    #[test]
    fn potentials_are_radial(x in -50.0f64..50.0, y in -50.0f64..50.0) {
        prop_assume!(x * x + y * y > 1.0);
        for spec in builtin_kinds() {
            let a = eval_potential(&spec, x, &[y]).unwrap();
            let b = eval_potential(&spec, y, &[-x]).unwrap();
            let c = eval_potential(&spec, (x * x + y * y).sqrt(), &[0.0, 0.0]).unwrap();
            prop_assert!((a - b).abs() <= 1e-13 * a.abs().max(1e-300));
            prop_assert!((a - c).abs() <= 1e-12 * a.abs().max(1e-300));
        }
    }
}
