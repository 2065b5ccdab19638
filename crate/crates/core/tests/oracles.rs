//! Library results compared against independent constructions written out
//! directly in the test.

use subfactor_core::algebra::{basic_construction, markov_trace, InclusionData, TraceForm};
use subfactor_core::hadamard::{HadamardMatrix, SpinTower};
use subfactor_core::{CMatrix, Complex, Settings, Subalgebra};

fn test_matrix(d: usize, seed: u64) -> CMatrix {
    // small deterministic pseudo-random entries
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    };
    CMatrix::from_fn(d, |_, _| Complex::new(next(), next()))
}

fn diag_part(x: &CMatrix) -> CMatrix {
    CMatrix::from_fn(x.dim(), |i, j| if i == j { x.get(i, i) } else { Complex::new(0.0, 0.0) })
}

#[test]
fn spin_square_expectations_match_closed_forms() {
    for n in 2..=6 {
        let f = HadamardMatrix::<f64>::fourier(n).unwrap().normalized();
        let fa = f.adjoint();
        let diag = Subalgebra::diagonal(n);
        let rotated = Subalgebra::diagonal(n).conjugate(&f, &Settings::default()).unwrap();
        for seed in 0..4 {
            let x = test_matrix(n, seed);
            let ep = diag_part(&x);
            let eq = &(&f * &diag_part(&(&(&fa * &x) * &f))) * &fa;
            assert!((&diag.expectation(&x).unwrap() - &ep).frobenius() < 1e-12);
            assert!((&rotated.expectation(&x).unwrap() - &eq).frobenius() < 1e-12);
            // E_P E_Q x = tr(x) 1
            let en = CMatrix::identity(n).scale(x.trace());
            let epq = diag_part(&eq);
            assert!((&epq - &en).frobenius() < 1e-12, "n={n}");
        }
    }
}

fn perron(lam: &[Vec<f64>]) -> (Vec<f64>, f64) {
    let rows = lam.len();
    let cols = lam[0].len();
    let mut t = vec![1.0; cols];
    let mut rho = 0.0;
    for _ in 0..2000 {
        let s: Vec<f64> = (0..rows).map(|i| (0..cols).map(|j| lam[i][j] * t[j]).sum()).collect();
        let next: Vec<f64> = (0..cols).map(|j| (0..rows).map(|i| lam[i][j] * s[i]).sum()).collect();
        let norm: f64 = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        let tn: f64 = t.iter().map(|x| x * x).sum::<f64>().sqrt();
        rho = norm / tn;
        t = next.iter().map(|x| x / norm).collect();
    }
    (t, rho)
}

#[test]
fn markov_trace_matches_power_iteration() {
    let cases: Vec<(Vec<Vec<u32>>, Vec<u32>)> = vec![
        (vec![vec![1, 1], vec![0, 1]], vec![1, 2]),
        (vec![vec![1, 0], vec![1, 1], vec![0, 1]], vec![2, 3]),
        (vec![vec![2, 1], vec![1, 1]], vec![3, 2]),
        (vec![vec![1], vec![1], vec![1]], vec![3]),
    ];
    for (lam, sizes) in cases {
        let m = markov_trace(&InclusionData::new(lam.clone()).with_block_sizes(sizes.clone())).unwrap();
        let lf: Vec<Vec<f64>> = lam.iter().map(|r| r.iter().map(|&x| x as f64).collect()).collect();
        let (t, rho) = perron(&lf);
        let total: f64 = t.iter().zip(&sizes).map(|(a, &b)| a * b as f64).sum();
        for (a, b) in m.trace_vector.iter().zip(&t) {
            assert!((a - b / total).abs() < 1e-12, "{lam:?}");
        }
        assert!((m.modulus - rho).abs() < 1e-10);
        assert!(m.residual < 1e-12);
    }
    assert!(markov_trace(&InclusionData::new(vec![vec![1, 0], vec![0, 1]])).is_err());
}

// u_0 = w, u_{2k+1} = (1_n ⊗ u_{2k})(D_u ⊗ 1_{n^k}), u_{2k} = u_{2k-1}(w ⊗ 1_{n^k})
fn naive_stages(u: &CMatrix, stages: usize) -> Vec<CMatrix> {
    let n = u.dim();
    let w = u.scale_real(1.0 / (n as f64).sqrt());
    let d: Vec<Complex<f64>> = (0..n * n).map(|x| u.get(x / n, x % n).conj()).collect();
    let du = CMatrix::diagonal(&d);
    let mut out = vec![w.clone()];
    for j in 1..=stages {
        let k = (j - 1) / 2;
        let prev = &out[j - 1];
        let next = if j % 2 == 1 {
            &CMatrix::identity(n).kron(prev) * &du.kron(&CMatrix::identity(n.pow(k as u32)))
        } else {
            let k = j / 2;
            prev * &w.kron(&CMatrix::identity(n.pow(k as u32)))
        };
        out.push(next);
    }
    out
}

#[test]
fn tower_stages_match_naive_products() {
    let s = Settings::default();
    for (n, stages) in [(2usize, 8usize), (3, 5)] {
        let u = HadamardMatrix::<f64>::fourier(n).unwrap();
        let tower = SpinTower::new(&u, stages, &s).unwrap();
        let naive = naive_stages(u.matrix(), stages);
        for (j, expect) in naive.iter().enumerate() {
            let got = tower.stage(j).unwrap().materialize(&s).unwrap();
            assert_eq!(got.dim(), expect.dim(), "n={n}, stage {j}");
            assert!((&got - expect).frobenius() < 1e-11, "n={n}, stage {j}");
            assert!(expect.unitary_residual() < 1e-11);
        }
    }
}

#[test]
fn jones_projection_of_the_diagonal_masa() {
    let s = Settings::default();
    for n in 2..=4 {
        let small = Subalgebra::diagonal(n);
        let big = Subalgebra::full(n);
        let bc = basic_construction(&small, &big, &TraceForm::new(n).unwrap(), &s).unwrap();
        let e = &bc.jones_projection;
        assert!(e.projection_residual() < 1e-12);
        // onto L^2(Δ_n): rank n inside an n^2-dimensional space
        assert_eq!(e.rank(1e-8), n);
        assert!(bc.jones_relation_residual(&small).unwrap() < 1e-12);
        // e1 commutes with the represented Δ_n
        for b in small.basis() {
            let lb = bc.represent(b).unwrap();
            assert!(lb.commutator(e).frobenius() < 1e-12);
        }
        // <M_n, e1> = (J Δ_n J)' = M_n ⊗ Δ_n on L^2(M_n), of dimension n^3
        assert_eq!(bc.tower.dim(), n.pow(3));
    }
}
