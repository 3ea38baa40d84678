use proptest::prelude::*;
use qworkscope::numerics::{
    c64, frobenius_distance, hermitian_eigendecompose, unitary_from_hamiltonian, ComplexMatrix,
};
use qworkscope::state::{decohere_for_measurement, DensityMatrix};
use qworkscope::work::{build_work_distribution, quadrature_moment, ProcessSnapshot};

fn hermitian(dim: usize, raw: &[f64]) -> ComplexMatrix {
    let a = ComplexMatrix::from_fn(dim, |i, j| {
        c64(raw[2 * (i * dim + j)], raw[2 * (i * dim + j) + 1])
    });
    (&a + &a.adjoint()).scale(c64(0.5, 0.0))
}

fn density(dim: usize, raw: &[f64]) -> DensityMatrix {
    let a = ComplexMatrix::from_fn(dim, |i, j| {
        c64(raw[2 * (i * dim + j)], raw[2 * (i * dim + j) + 1])
    });
    let m = &a * &a.adjoint();
    let tr = m.trace().re;
    DensityMatrix::new(m.scale(c64(1.0 / tr, 0.0)).hermitian_part()).unwrap()
}

fn matrix_input(max_dim: usize) -> impl Strategy<Value = (usize, Vec<f64>)> {
    (2..=max_dim).prop_flat_map(|d| (Just(d), prop::collection::vec(-2.0f64..2.0, 2 * d * d)))
}

fn snapshot_input() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, f64)> {
    (2usize..=5).prop_flat_map(|d| {
        let v = || prop::collection::vec(-1.5f64..1.5, 2 * d * d);
        (
            Just(d),
            v(),
            v(),
            v(),
            prop::collection::vec(0.1f64..1.0, 2 * d * d),
            0.05f64..3.0,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigendecomposition_reconstructs((d, raw) in matrix_input(16)) {
        let h = hermitian(d, &raw);
        let eig = hermitian_eigendecompose(&h).unwrap();
        prop_assert!(frobenius_distance(&eig.reconstruct(), &h).unwrap() < 1e-10);
        prop_assert!(eig.values().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn evolution_is_unitary_and_composes((d, raw) in matrix_input(16), t in 0.0f64..5.0, s in 0.0f64..5.0) {
        let h = hermitian(d, &raw);
        let u = unitary_from_hamiltonian(&h, t).unwrap();
        let id = ComplexMatrix::identity(d);
        prop_assert!(frobenius_distance(&(&u.adjoint() * &u), &id).unwrap() < 1e-10);
        let composed = &unitary_from_hamiltonian(&h, s).unwrap() * &u;
        let direct = unitary_from_hamiltonian(&h, s + t).unwrap();
        prop_assert!(frobenius_distance(&composed, &direct).unwrap() < 1e-9);
    }

    #[test]
    fn dephasing_keeps_trace_and_positivity((d, raw) in matrix_input(6), seed in prop::collection::vec(-1.0f64..1.0, 72), sigma in 0.01f64..5.0) {
        let rho = density(d, &seed[..2 * d * d]);
        let eig = hermitian_eigendecompose(&hermitian(d, &raw)).unwrap();
        let out = decohere_for_measurement(&rho, &eig, sigma).unwrap();
        prop_assert!((out.trace().re - 1.0).abs() < 1e-12);
        let spectrum = hermitian_eigendecompose(out.matrix()).unwrap();
        prop_assert!(spectrum.values()[0] > -1e-12);
        prop_assert!(out.purity() <= rho.purity() + 1e-12);
    }

    #[test]
    fn work_distribution_is_a_probability_density((d, h0, ht, drive, seed, sigma) in snapshot_input()) {
        let h0 = hermitian(d, &h0);
        let ht = hermitian(d, &ht);
        let u = unitary_from_hamiltonian(&hermitian(d, &drive), 1.0).unwrap();
        let snap = ProcessSnapshot::from_propagator(&h0, &ht, &u, density(d, &seed), sigma).unwrap();

        let amps = snap.amplitudes();
        for i in 0..d {
            let row: f64 = (0..d).map(|j| amps[(i, j)].norm_sqr()).sum();
            let col: f64 = (0..d).map(|j| amps[(j, i)].norm_sqr()).sum();
            prop_assert!((row - 1.0).abs() < 1e-10 && (col - 1.0).abs() < 1e-10);
        }

        let dist = build_work_distribution(&snap).unwrap();
        prop_assert!((dist.total_weight().re - 1.0).abs() < 1e-10);
        prop_assert!(dist.total_weight().im.abs() < 1e-10);
        prop_assert!((quadrature_moment(&dist, 0) - 1.0).abs() < 1e-8);
        let (lo, hi) = dist.support();
        for k in 0..=200 {
            let w = lo + (hi - lo) * k as f64 / 200.0;
            prop_assert!(dist.density(w) >= -1e-12, "negative density {} at {}", dist.density(w), w);
        }
    }
}
