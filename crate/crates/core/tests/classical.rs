use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stark_core::classical::{
    asymptotic_momentum, decay_slope, free_flow, gamma_observables, in_region_x, integrate_orbit,
    integrate_orbit_with, region_a, MomentumOptions, Observable, OrbitOptions, PhasePoint, Record,
    Sign,
};
use stark_core::fit;
use stark_core::parabolic::theta1_calculus;
use stark_core::potentials::{PotentialSpec, RadialTable};
use stark_core::Error;

fn random_point(rng: &mut ChaCha8Rng, d: usize) -> PhasePoint {
    PhasePoint::new(
        rng.gen_range(5.0..20.0),
        (0..d - 1).map(|_| rng.gen_range(-3.0..3.0)).collect(),
        rng.gen_range(-2.0..2.0),
        (0..d - 1).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
}

fn built_in_potentials() -> Vec<PotentialSpec> {
    let radii: Vec<f64> = (0..120).map(|i| 0.2 * 1.08f64.powi(i)).collect();
    let values: Vec<f64> = radii.iter().map(|r| (1.0 + r * r).powf(-0.6)).collect();
    vec![
        PotentialSpec::zero(),
        PotentialSpec::coulomb(0.5),
        PotentialSpec::coulomb(-0.3),
        PotentialSpec::homogeneous(0.5, 1.5),
        PotentialSpec::table(0.4, RadialTable::new(radii, values), 0.1),
    ]
}

fn zero_energy_point(spec: &PotentialSpec, rng: &mut ChaCha8Rng) -> PhasePoint {
    let x0: f64 = rng.gen_range(20.0..50.0);
    let y0: f64 = rng.gen_range(-2.0..2.0);
    let z0: f64 = rng.gen_range(-0.5..0.5);
    let q = spec.eval(x0, &[y0]).unwrap();
    PhasePoint::new(x0, vec![y0], (2.0 * (x0 - q) - z0 * z0).sqrt(), vec![z0])
}

fn log_times(lo: f64, hi: f64, per_octave: usize) -> Vec<f64> {
    let n = ((hi / lo).log2() * per_octave as f64).ceil() as usize;
    (0..=n)
        .map(|j| lo * 2f64.powf(j as f64 / per_octave as f64))
        .collect()
}

#[test]
fn energy_is_conserved_for_all_potentials() {
    let tol = 1e-10;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for spec in built_in_potentials() {
        for d in [2, 3] {
            for _ in 0..50 {
                let p0 = random_point(&mut rng, d);
                let traj = integrate_orbit(&spec, &p0, 100.0, tol).unwrap();
                let drift = traj.energy_drift();
                assert!(
                    drift <= 100.0 * tol,
                    "{:?} {p0:?}: drift {drift:e}",
                    spec.kind
                );
            }
        }
    }
}

#[test]
fn coulomb_orbit_matches_tighter_tolerance() {
    let spec = PotentialSpec::coulomb(0.1);
    let p0 = PhasePoint::new(10.0, vec![0.5], 1.0, vec![0.2]);
    let coarse = integrate_orbit(&spec, &p0, 100.0, 1e-10).unwrap();
    let fine = integrate_orbit(&spec, &p0, 100.0, 1e-13).unwrap();
    assert!(coarse.energy_drift() <= 1e-8);
    let (a, b) = (coarse.last().unwrap(), fine.last().unwrap());
    assert!((a.eta - b.eta).abs() < 1e-7 && (a.zeta[0] - b.zeta[0]).abs() < 1e-7);
    assert!((a.x - b.x).abs() < 1e-5 * b.x && (a.y[0] - b.y[0]).abs() < 1e-5);
}

#[test]
fn zero_potential_reproduces_free_flow() {
    let p0 = PhasePoint::new(-3.0, vec![1.0, 2.0], 0.5, vec![-0.2, 0.7]);
    let traj = integrate_orbit(&PotentialSpec::zero(), &p0, 300.0, 1e-10).unwrap();
    for (t, p) in traj.times.iter().zip(&traj.points) {
        let exact = free_flow(&p0, *t);
        assert!((p.x - exact.x).abs() <= 1e-9 * exact.x.abs().max(1.0));
        assert!((p.eta - exact.eta).abs() <= 1e-9);
    }
}

#[test]
fn free_flow_group_law() {
    let p = PhasePoint::new(0.25, vec![1.5], -2.0, vec![0.5]);
    // Dyadic data keeps every operation exact.
    let a = free_flow(&free_flow(&p, 0.5), 1.25);
    let b = free_flow(&p, 1.75);
    assert_eq!(a, b);
}

#[test]
fn time_reversal_returns_to_start() {
    let spec = PotentialSpec::coulomb(0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let p0 = random_point(&mut rng, 3);
        let fwd = integrate_orbit(&spec, &p0, 30.0, 1e-12).unwrap();
        let back = integrate_orbit(&spec, fwd.last().unwrap(), -30.0, 1e-12).unwrap();
        let start = &back.points[0];
        assert_eq!(back.times[0], -30.0);
        assert!((start.x - p0.x).abs() < 1e-7, "{start:?} vs {p0:?}");
        assert!((start.eta - p0.eta).abs() < 1e-7);
        for k in 0..2 {
            assert!((start.y[k] - p0.y[k]).abs() < 1e-7);
            assert!((start.zeta[k] - p0.zeta[k]).abs() < 1e-7);
        }
    }
}

#[test]
fn zero_potential_momenta_are_exact() {
    let p0 = PhasePoint::new(10.0, vec![1.0], 1.0, vec![0.3]);
    for sign in [Sign::Plus, Sign::Minus] {
        let m = asymptotic_momentum(
            &PotentialSpec::zero(),
            &p0,
            sign,
            &MomentumOptions::default(),
        )
        .unwrap();
        assert_eq!(m.value, vec![0.3]);
        assert_eq!(m.error, 0.0);
    }
}

#[test]
fn coulomb_momenta_converge() {
    let spec = PotentialSpec::coulomb(0.1);
    let p0 = PhasePoint::new(10.0, vec![1.0], 1.0, vec![0.3]);
    for sign in [Sign::Plus, Sign::Minus] {
        let m = asymptotic_momentum(&spec, &p0, sign, &MomentumOptions::default()).unwrap();
        let diffs: Vec<f64> = m
            .samples
            .windows(2)
            .map(|w| (w[1][0] - w[0][0]).abs())
            .collect();
        assert!(diffs.last().unwrap() < &diffs[0]);
        assert!(m.error < 1e-9, "{m:?}");
        // Oracle: a much longer integration at tighter tolerance.
        let t_end = sign.value() * 1e6;
        let long = integrate_orbit(&spec, &p0, t_end, 1e-13).unwrap();
        let zeta = if t_end > 0.0 {
            long.last().unwrap().zeta[0]
        } else {
            long.points[0].zeta[0]
        };
        assert!((m.value[0] - zeta).abs() < 1e-9, "{} vs {zeta}", m.value[0]);
        // The deflection is first order in κ.
        assert!((m.value[0] - 0.3).abs() > 1e-4);
    }
}

#[test]
fn deflection_is_linear_in_coupling() {
    let p0 = PhasePoint::new(10.0, vec![1.0], 1.0, vec![0.3]);
    let kappas = [0.01, 0.02, 0.04];
    let deflections: Vec<f64> = kappas
        .iter()
        .map(|k| {
            let m = asymptotic_momentum(
                &PotentialSpec::coulomb(*k),
                &p0,
                Sign::Plus,
                &MomentumOptions::default(),
            )
            .unwrap();
            (m.value[0] - 0.3).abs()
        })
        .collect();
    let lf = fit::power_law(&kappas, &deflections).unwrap();
    assert!((lf.slope - 1.0).abs() < 0.05, "slope {}", lf.slope);
}

#[test]
fn non_escaping_orbit_is_a_budget_error() {
    let p0 = PhasePoint::new(10.0, vec![1.0], 1.0, vec![0.3]);
    let opts = MomentumOptions {
        t_first: 0.5,
        doublings: 3,
        ..MomentumOptions::default()
    };
    let r = asymptotic_momentum(&PotentialSpec::coulomb(0.1), &p0, Sign::Plus, &opts);
    assert!(matches!(r, Err(Error::Budget { .. })));
}

#[test]
fn gamma_agrees_with_finite_difference_phase_gradient() {
    let p = PhasePoint::new(400.0, vec![12.0, -7.0], 27.0, vec![0.4, 0.1]);
    let g = gamma_observables(&p).unwrap();
    let h = 1e-3;
    let mut grad = [0.0; 3];
    for i in 0..3 {
        let mut a = [p.x, p.y[0], p.y[1]];
        let mut b = a;
        a[i] += h;
        b[i] -= h;
        let va = theta1_calculus(a[0], &a[1..]).unwrap().value;
        let vb = theta1_calculus(b[0], &b[1..]).unwrap().value;
        grad[i] = (va - vb) / (2.0 * h);
    }
    assert!((g.gamma[0] - (p.eta - grad[0])).abs() < 1e-6);
    assert!((g.gamma[1] - (p.zeta[0] - grad[1])).abs() < 1e-6);
    assert!((g.gamma[2] - (p.zeta[1] - grad[2])).abs() < 1e-6);
    // On the exact phase the only contribution is γ̃.
    let t1 = theta1_calculus(p.x, &p.y).unwrap();
    let on = PhasePoint::new(p.x, p.y.clone(), t1.gradient[0], t1.gradient[1..].to_vec());
    let g = gamma_observables(&on).unwrap();
    let f2 = p.x + (p.x * p.x + 12f64.powi(2) + 49.0).sqrt();
    assert!((g.gamma_norm - (12f64.powi(2) + 49.0).sqrt() / f2).abs() < 1e-12);
}

fn decay_slopes(spec: &PotentialSpec, seed: u64, n: usize) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sg, mut sp) = (0.0, 0.0);
    for _ in 0..n {
        let p0 = zero_energy_point(spec, &mut rng);
        let opts = OrbitOptions {
            tol: 1e-14,
            record: Record::Times(log_times(50.0, 2e4, 8)),
            max_steps: 1_000_000,
        };
        let traj = integrate_orbit_with(spec, &p0, 2e4, &opts).unwrap();
        sg += decay_slope(&traj, Observable::GammaNorm, (100.0, 1e4))
            .unwrap()
            .slope;
        sp += decay_slope(&traj, Observable::GammaPar, (100.0, 1e4))
            .unwrap()
            .slope;
    }
    (sg / n as f64, sp / n as f64)
}

#[test]
fn coulomb_decay_rates() {
    let (g, p) = decay_slopes(&PotentialSpec::coulomb(0.1), 11, 5);
    assert!(g <= -0.9, "Gamma slope {g}");
    assert!(p <= -1.8, "gamma_par slope {p}");
}

#[test]
fn homogeneous_decay_rates() {
    let spec = PotentialSpec::homogeneous(0.1, 1.5);
    let (g, p) = decay_slopes(&spec, 12, 5);
    assert!(g <= -0.9, "Gamma slope {g}");
    assert!(p <= -1.0 - 2.0 * spec.delta + 0.2, "gamma_par slope {p}");
}

#[test]
fn exact_free_parabola_is_filtered_out() {
    let x0: f64 = 50.0;
    let p0 = PhasePoint::new(x0, vec![0.0], (2.0 * x0).sqrt(), vec![0.0]);
    let opts = OrbitOptions {
        tol: 1e-12,
        record: Record::Times(log_times(50.0, 2e4, 8)),
        max_steps: 100_000,
    };
    let traj = integrate_orbit_with(&PotentialSpec::zero(), &p0, 2e4, &opts).unwrap();
    for obs in [Observable::GammaNorm, Observable::GammaPar] {
        let r = decay_slope(&traj, obs, (100.0, 1e4));
        assert!(matches!(r, Err(Error::InsufficientData { .. })), "{r:?}");
    }
}

#[test]
fn region_membership_examples() {
    let p = PhasePoint::new(10.0, vec![0.0], 5.0, vec![0.0]);
    assert!(in_region_x(&p, 1.0, 0.3, Sign::Plus));
    let q = PhasePoint::new(10.0, vec![0.0], -5.0, vec![0.0]);
    assert!(!in_region_x(&q, 1.0, 0.3, Sign::Plus));
}

fn phase_point(d: usize) -> impl Strategy<Value = PhasePoint> {
    (
        -50.0..50.0f64,
        prop::collection::vec(-50.0..50.0f64, d - 1),
        -20.0..20.0f64,
        prop::collection::vec(-5.0..5.0f64, d - 1),
    )
        .prop_map(|(x, y, eta, zeta)| PhasePoint::new(x, y, eta, zeta))
}

proptest! {
    #[test]
    fn free_flow_preserves_outgoing_region(p in phase_point(3), eps in 0.05..0.95f64) {
        prop_assume!(in_region_x(&p, 1.0, eps, Sign::Plus));
        for t in [1.0, 10.0, 100.0] {
            prop_assert!(in_region_x(&free_flow(&p, t), 1.0, eps, Sign::Plus));
            prop_assert!(in_region_x(&free_flow(&p.reflected(), -t).reflected(), 1.0, eps, Sign::Plus));
        }
    }

    #[test]
    fn free_flow_preserves_incoming_region(p in phase_point(2), eps in 0.05..0.95f64) {
        prop_assume!(in_region_x(&p, 1.0, eps, Sign::Minus));
        for t in [1.0, 10.0, 100.0] {
            prop_assert!(in_region_x(&free_flow(&p, -t), 1.0, eps, Sign::Minus));
        }
    }

    #[test]
    fn region_parameter_never_drops_below_minus_eps(p in phase_point(3), eps in 0.05..0.95f64) {
        let a0 = region_a(&p, 1.0);
        prop_assume!(matches!(a0, Some(a) if a > -eps));
        for i in 0..200 {
            let t = 0.5 * i as f64;
            let a = region_a(&free_flow(&p, t), 1.0).unwrap();
            prop_assert!(a > -eps, "a({t}) = {a}");
        }
    }
}
