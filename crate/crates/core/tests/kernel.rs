use std::f64::consts::PI;

use num_complex::Complex64;
use stark_core::fit::power_law;
use stark_core::kernel::{
    born_symbol, homogeneous_symbol_asymptote, kernel_fft_check, kernel_singularity_law,
    FftCheckOptions, SymbolGrid,
};
use stark_core::potentials::PotentialSpec;
use stark_core::quadrature::{adaptive, AdaptiveOptions};

const GAMMA_QUARTER: f64 = 3.625_609_908_221_908;
const GAMMA_THREE_QUARTERS: f64 = 1.225_416_702_465_178;

/// ∫_a^b (x² + ρ²)^{−1/2} (2x)^{−1/2} dx via x = s², dx = 2s ds.
fn coulomb_integral(rho: f64, a: f64, b: f64) -> f64 {
    let opts = AdaptiveOptions {
        abs_tol: 1e-15,
        rel_tol: 1e-13,
        max_intervals: 10_000,
    };
    adaptive(
        |s: f64| {
            let x = s * s;
            2.0 * s / ((x * x + rho * rho).sqrt() * (2.0 * x).sqrt())
        },
        a.sqrt(),
        b.sqrt(),
        &opts,
    )
    .value
}

#[test]
fn coulomb_symbol_against_direct_quadrature() {
    let spec = PotentialSpec::coulomb(1.0);
    let rho = 1e3;
    let got = born_symbol(&spec, &[0.0, 0.0], &[rho, 0.0], 0.0, Some(1.0), 1e-11).unwrap();
    // ∫_1^∞ split at 10⁸; beyond, (x² + ρ²)^{−1/2} ≈ 1/x and the tail is √2·10⁻⁴.
    let want =
        coulomb_integral(rho, 1.0, 1e4) + coulomb_integral(rho, 1e4, 1e8) + 2f64.sqrt() * 1e-4;
    assert!(
        (got.im + 2.0 * want).abs() < 1e-8,
        "{got} vs {}",
        -2.0 * want
    );
    assert_eq!(got.re, 0.0);
}

#[test]
fn coulomb_symbol_near_large_y_asymptote() {
    let spec = PotentialSpec::coulomb(1.0);
    let rho: f64 = 1e3;
    let got = born_symbol(&spec, &[0.0, 0.0], &[0.0, rho], 0.0, Some(1.0), 1e-11).unwrap();
    let c1 = 2f64.powf(-1.5) * GAMMA_QUARTER * GAMMA_QUARTER / PI.sqrt();
    let asym = -2.0 * c1 * rho.powf(-0.5);
    let rel = (got.im - asym).abs() / asym.abs();
    // Dropping ∫_0^1 costs about √2/ρ of the value.
    assert!(rel < 0.02, "{rel}");
    assert!(got.im > asym);
}

#[test]
fn symbol_is_linear_in_coupling() {
    let a = born_symbol(
        &PotentialSpec::coulomb(1.0),
        &[0.3],
        &[7.0],
        0.2,
        None,
        1e-12,
    )
    .unwrap();
    let b = born_symbol(
        &PotentialSpec::coulomb(2.5),
        &[0.3],
        &[7.0],
        0.2,
        None,
        1e-12,
    )
    .unwrap();
    assert!((b - a * 2.5).norm() < 1e-10);
    assert!(a.im < 0.0);
}

#[test]
fn zero_potential_has_zero_symbol_everywhere() {
    for rho in [0.0, 1.0, 1e3] {
        let v = born_symbol(
            &PotentialSpec::zero(),
            &[0.5, 0.5],
            &[rho, 1.0],
            -0.5,
            None,
            1e-10,
        )
        .unwrap();
        assert_eq!(v, Complex64::new(0.0, 0.0));
    }
}

#[test]
fn homogeneous_asymptote_values_and_scaling() {
    let v = homogeneous_symbol_asymptote(1.0, 1.0, &[1e4, 0.0]).unwrap();
    assert!((v.im + 2.0 * 2.6221e-2).abs() < 1e-5, "{v}");
    for alpha in [0.8, 1.0, 1.7, 2.3] {
        let a = homogeneous_symbol_asymptote(1.3, alpha, &[3.0, 4.0]).unwrap();
        let b = homogeneous_symbol_asymptote(1.3, alpha, &[6.0, 8.0]).unwrap();
        assert!((b.im / a.im - 2f64.powf(0.5 - alpha)).abs() < 1e-14);
    }
    assert!(homogeneous_symbol_asymptote(1.0, 2.6, &[1.0, 1.0]).is_err());
    assert!(homogeneous_symbol_asymptote(1.0, 0.5, &[1.0]).is_err());
}

#[test]
fn symbol_approaches_asymptote() {
    for alpha in [1.0, 1.5] {
        let spec = PotentialSpec::homogeneous(1.0, alpha);
        let devs: Vec<f64> = [1e2, 1e3, 1e4]
            .iter()
            .map(|&rho| {
                let t = born_symbol(&spec, &[0.0, 0.0], &[rho, 0.0], 0.0, None, 1e-12).unwrap();
                let a = homogeneous_symbol_asymptote(1.0, alpha, &[rho, 0.0]).unwrap();
                (t.im / a.im - 1.0).abs()
            })
            .collect();
        assert!(devs[0] > devs[1] && devs[1] > devs[2], "{devs:?}");
        assert!(devs[2] <= 0.05, "{devs:?}");
    }
}

#[test]
fn energy_and_zeta_dependence_is_subleading() {
    let spec = PotentialSpec::coulomb(1.0);
    let y = [1e3, 0.0];
    let base = born_symbol(&spec, &[0.0, 0.0], &y, 0.0, Some(3.0), 1e-12).unwrap();
    for lambda in [-1.0, -0.5, 0.5, 1.0] {
        for zeta in [[0.0, 0.0], [0.6, 0.0], [0.0, 1.0], [0.6, 0.8]] {
            let v = born_symbol(&spec, &zeta, &y, lambda, Some(3.0), 1e-12).unwrap();
            let rel = (v - base).norm() / base.norm();
            assert!(rel < 0.02, "λ = {lambda}, ζ = {zeta:?}: {rel}");
        }
    }
}

#[test]
fn symbol_derivatives_decay_like_a_symbol() {
    // δ = 1/2: t = O(⟨y⟩^{−1/2}) and ∂_y t = O(⟨y⟩^{−1}).
    let spec = PotentialSpec::coulomb(1.0);
    let rhos: Vec<f64> = (0..9).map(|i| 1e2 * 10f64.powf(i as f64 / 4.0)).collect();
    let t = |rho: f64| {
        born_symbol(&spec, &[0.0, 0.0], &[rho, 0.0], 0.0, None, 1e-13)
            .unwrap()
            .im
    };
    let values: Vec<f64> = rhos.iter().map(|&r| t(r)).collect();
    let derivs: Vec<f64> = rhos
        .iter()
        .map(|&r| {
            let h = 1e-3 * r;
            (t(r + h) - t(r - h)) / (2.0 * h)
        })
        .collect();
    let s0 = power_law(&rhos, &values).unwrap().slope;
    let s1 = power_law(&rhos, &derivs).unwrap().slope;
    assert!((s0 + 0.5).abs() <= 0.15, "{s0}");
    assert!(s1 <= -1.0 + 0.15, "{s1}");
}

/// ∫_{R²} e^{ik·y} |y|^{−a} dy = 2^{2−a} π Γ(1 − a/2)/Γ(a/2) |k|^{a−2}, here a = 1/2.
#[test]
fn pure_power_law_recovers_fourier_pair() {
    let grid = SymbolGrid::from_radial(2048, 100.0, vec![0.0, 0.0], 0.0, |r| {
        Ok(Complex64::new(r.powf(-0.5), 0.0))
    })
    .unwrap();
    let pair = 2f64.powf(1.5) * PI * GAMMA_THREE_QUARTERS / GAMMA_QUARTER;
    let expected = pair / (2.0 * PI).powi(2);
    let law = stark_core::special::KernelLaw {
        prefactor: Complex64::new(expected, 0.0),
        exponent: -1.5,
    };
    let fit = kernel_fft_check(&grid, &law, &FftCheckOptions::default()).unwrap();
    for bin in &fit.bins {
        let want = expected * bin.k.powf(-1.5);
        assert!(
            (bin.modulus / want - 1.0).abs() < 0.05,
            "k = {}: {}",
            bin.k,
            bin.modulus / want
        );
    }
    assert!((fit.exponent + 1.5).abs() < 0.05);
    assert!(fit.phase.abs() < 1e-6);
}

#[test]
fn coulomb_kernel_singularity_from_fft() {
    let law = kernel_singularity_law(3, 1.0, 1.0).unwrap();
    let grid = SymbolGrid::born(
        &PotentialSpec::coulomb(1.0),
        vec![0.0, 0.0],
        0.0,
        2048,
        100.0,
        None,
        1e-10,
    )
    .unwrap();
    let fit = kernel_fft_check(&grid, &law, &FftCheckOptions::default()).unwrap();
    assert!((fit.exponent + 1.5).abs() <= 0.1, "{}", fit.exponent);
    let target = (2.0 * PI).powf(-0.5);
    assert!(
        (fit.prefactor_modulus / target - 1.0).abs() <= 0.1,
        "{}",
        fit.prefactor_modulus
    );
    // T ≈ −i|c₂|k^{−3/2}.
    assert!((fit.phase + PI / 2.0).abs() < 1e-6, "{}", fit.phase);
}

#[test]
fn fft_exponents_for_other_homogeneous_potentials() {
    for (d, alpha, n) in [(3usize, 1.5, 2048usize), (2, 1.0, 1 << 14)] {
        let law = kernel_singularity_law(d, alpha, 1.0).unwrap();
        let grid = SymbolGrid::born(
            &PotentialSpec::homogeneous(1.0, alpha),
            vec![0.0; d - 1],
            0.0,
            n,
            100.0,
            None,
            1e-10,
        )
        .unwrap();
        let fit = kernel_fft_check(&grid, &law, &FftCheckOptions::default()).unwrap();
        assert!(
            (fit.exponent - law.exponent).abs() <= 0.1,
            "(d, α) = ({d}, {alpha}): {} vs {}",
            fit.exponent,
            law.exponent
        );
    }
}

#[test]
fn asymptote_grid_reproduces_closed_form_prefactor() {
    for (d, alpha) in [(3usize, 1.0), (3, 1.5), (2, 1.0)] {
        let law = kernel_singularity_law(d, alpha, 1.0).unwrap();
        let grid = SymbolGrid::from_radial(2048, 100.0, vec![0.0; d - 1], 0.0, |r| {
            let mut y = vec![0.0; d - 1];
            y[0] = r;
            homogeneous_symbol_asymptote(1.0, alpha, &y)
        })
        .unwrap();
        let fit = kernel_fft_check(&grid, &law, &FftCheckOptions::default()).unwrap();
        assert!(
            (fit.exponent - law.exponent).abs() < 0.02,
            "{}",
            fit.exponent
        );
        assert!((fit.prefactor_modulus / law.prefactor.norm() - 1.0).abs() < 0.01);
    }
}
