use iapd::diagnostics::{fit_linear_rate_values, manifold_dim};
use iapd::linalg::{normal_project, polar, random_orthonormal, svd, tangent_project, Matrix};
use iapd::rng::{gaussian_matrix, gaussian_vec, stream};
use iapd::solver::{lambda_of, run, FactorSet, SolverConfig};
use iapd::tensor::{assemble, diag_tensor, extract_diag, multilinear_multiply};
use iapd::{BlockVector, DenseTensor};
use proptest::prelude::*;

fn dims_strategy(max_order: usize, max_dim: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1..=max_dim, 3..=max_order)
}

fn tensor(dims: &[usize], seed: u64) -> DenseTensor {
    let len = dims.iter().product();
    DenseTensor::new(dims.to_vec(), gaussian_vec(&mut stream(seed, 0), len)).unwrap()
}

fn block(dims: &[usize], seed: u64, unit: bool) -> BlockVector {
    let mut rng = stream(seed, 1);
    BlockVector::new(
        dims.iter()
            .map(|&n| {
                let mut v = gaussian_vec(&mut rng, n);
                if unit {
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    v.iter_mut().for_each(|x| *x /= norm);
                }
                v
            })
            .collect(),
    )
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn naive_multiply(bs: &[Matrix], a: &DenseTensor) -> DenseTensor {
    let out_dims: Vec<usize> = bs.iter().map(|b| b.rows()).collect();
    DenseTensor::from_fn(out_dims, |out| {
        let mut total = 0.0;
        let mut idx = vec![0; a.order()];
        loop {
            let w: f64 = bs.iter().enumerate().map(|(i, b)| b[(out[i], idx[i])]).product();
            total += w * a.get(&idx);
            let mut d = a.order();
            loop {
                if d == 0 {
                    return total;
                }
                d -= 1;
                idx[d] += 1;
                if idx[d] < a.dims()[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn contraction_is_multilinear(dims in dims_strategy(5, 4), seed in any::<u64>(), mode in 0usize..5, s in -3.0f64..3.0) {
        let a = tensor(&dims, seed);
        let x = block(&dims, seed ^ 1, false);
        let y = block(&dims, seed ^ 2, false);
        let i = mode % dims.len();
        let mixed: Vec<f64> = x.parts[i].iter().zip(&y.parts[i]).map(|(p, q)| p + s * q).collect();
        let lhs = a.contract_full(&x.with_part(i, mixed)).unwrap();
        let rhs = a.contract_full(&x).unwrap() + s * a.contract_full(&x.with_part(i, y.parts[i].clone())).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn mode_contraction_is_adjoint(dims in dims_strategy(5, 4), seed in any::<u64>(), mode in 0usize..5) {
        let a = tensor(&dims, seed);
        let x = block(&dims, seed ^ 3, false);
        let i = mode % dims.len();
        let y = gaussian_vec(&mut stream(seed, 9), dims[i]);
        let lhs = dot(&a.contract_mode(&x, i).unwrap(), &y);
        let rhs = a.contract_full(&x.with_part(i, y)).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn unit_contraction_bounded_by_norm(dims in dims_strategy(5, 4), seed in any::<u64>()) {
        let a = tensor(&dims, seed);
        let x = block(&dims, seed ^ 4, true);
        prop_assert!(a.contract_full(&x).unwrap().abs() <= a.norm() * (1.0 + 1e-12));
    }

    #[test]
    fn diag_round_trip(lambda in prop::collection::vec(-5.0f64..5.0, 1..5), k in 3usize..6) {
        prop_assert_eq!(extract_diag(&diag_tensor(&lambda, k).unwrap()).unwrap(), lambda);
    }

    #[test]
    fn multilinear_multiply_matches_loops(dims in prop::collection::vec(1usize..=3, 3..=4), seed in any::<u64>(), rows in prop::collection::vec(1usize..=3, 4)) {
        let a = tensor(&dims, seed);
        let bs: Vec<Matrix> = dims.iter().enumerate().map(|(i, &n)| gaussian_matrix(rows[i], n, seed ^ (10 + i as u64))).collect();
        let fast = multilinear_multiply(&bs, &a).unwrap();
        let slow = naive_multiply(&bs, &a);
        prop_assert_eq!(fast.dims(), slow.dims());
        for (p, q) in fast.data().iter().zip(slow.data()) {
            prop_assert!((p - q).abs() <= 1e-12 * (1.0 + q.abs()));
        }
    }

    #[test]
    fn odeco_norm_is_weight_norm(n in 2usize..6, k in 3usize..5, r in 1usize..4, seed in any::<u64>()) {
        let r = r.min(n);
        let fs: Vec<_> = (0..k).map(|i| random_orthonormal(n, r, seed ^ i as u64).unwrap()).collect();
        let lambda = gaussian_vec(&mut stream(seed, 5), r);
        let a = assemble(&fs, &lambda).unwrap();
        prop_assert!((a.norm() - dot(&lambda, &lambda).sqrt()).abs() <= 1e-12 * (1.0 + a.norm()));
        let got = lambda_of(&a, &FactorSet::new(fs).unwrap()).unwrap();
        for (p, q) in got.iter().zip(&lambda) {
            prop_assert!((p - q).abs() <= 1e-12);
        }
    }

    #[test]
    fn polar_reconstructs_and_maximizes(n in 1usize..7, m in 1usize..7, seed in any::<u64>()) {
        let (n, m) = (n.max(m), n.min(m));
        let a = gaussian_matrix(n, m, seed);
        let p = polar(&a).unwrap();
        let back = p.u.matmul(&p.h).unwrap();
        prop_assert!((&back - &a).frobenius_norm() <= 1e-10 * (1.0 + a.frobenius_norm()));
        prop_assert!(p.h.asymmetry() <= 1e-12 * (1.0 + a.frobenius_norm()));
        prop_assert!(p.u.gram_defect() <= 1e-12);
        for probe in 0..4 {
            let q = random_orthonormal(n, m, seed ^ (100 + probe)).unwrap();
            prop_assert!(p.u.dot(&a) >= q.dot(&a) - 1e-12);
        }
    }

    #[test]
    fn svd_reconstructs(n in 1usize..8, m in 1usize..8, seed in any::<u64>()) {
        let a = gaussian_matrix(n, m, seed);
        let d = svd(&a).unwrap();
        prop_assert!((&d.reconstruct() - &a).frobenius_norm() <= 1e-12 * (1.0 + a.frobenius_norm()));
        prop_assert!(d.sigma.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(d.g.gram_defect() <= 1e-12 && d.h.gram_defect() <= 1e-12);
    }

    #[test]
    fn tangent_and_normal_parts_reconstruct(n in 2usize..7, r in 1usize..7, seed in any::<u64>()) {
        let r = r.min(n);
        let u = random_orthonormal(n, r, seed).unwrap();
        let b = gaussian_matrix(n, r, seed ^ 7);
        let t = tangent_project(&u, &b).unwrap();
        let nrm = normal_project(&u, &b).unwrap();
        prop_assert!((&(&t + &nrm) - &b).frobenius_norm() <= 1e-12 * (1.0 + b.frobenius_norm()));
        // UᵀT is skew for a tangent vector.
        prop_assert!(u.tr_matmul(&t).unwrap().sym().frobenius_norm() <= 1e-12 * (1.0 + b.frobenius_norm()));
    }

    #[test]
    fn manifold_dim_is_integral(dims in prop::collection::vec(1usize..=6, 1..=5), r in 1usize..=6) {
        let min = *dims.iter().min().unwrap();
        prop_assume!(r <= min);
        let k = dims.len() as i64;
        let sum: i64 = dims.iter().map(|&n| n as i64).sum();
        let twice = r as i64 * (2 * sum - k * (r as i64 + 1) + 2);
        prop_assert_eq!(manifold_dim(&dims, r).unwrap() as i64 * 2, twice);
    }

    #[test]
    fn geometric_trace_ratio_recovered(rho in 0.2f64..0.95, scale in 0.1f64..10.0, limit in -5.0f64..5.0) {
        // Stop while the last gap is still well above f64 rounding of the values.
        let len = (((1e-7f64).ln() / rho.ln()).ceil() as i32).max(15);
        let values: Vec<f64> = (0..len).map(|p| limit - scale * rho.powi(p)).collect();
        let rep = fit_linear_rate_values(&values).unwrap();
        prop_assert!((rep.rho - rho).abs() <= 1e-6, "{} vs {}", rep.rho, rho);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn solver_trace_invariants(n in 3usize..6, r in 1usize..3, seed in any::<u64>()) {
        let a = tensor(&[n, n, n], seed);
        let sol = run(&a, r, &SolverConfig::default()).unwrap();
        let from = sol.trace.last_truncation().map_or(0, |p| p + 1);
        for (idx, rec) in sol.trace.records.iter().enumerate() {
            prop_assert!(rec.f_value.is_finite());
            if let Some(u) = &rec.factors {
                prop_assert!(u.factors().iter().all(|f| f.gram_defect() <= 1e-9));
            }
            if idx >= from {
                prop_assert!(rec.delta_f >= -1e-9);
            }
        }
        let l2 = dot(&sol.lambda, &sol.lambda);
        let expected = a.norm_squared() - l2;
        prop_assert!((sol.residual.powi(2) - expected).abs() <= 1e-8 * a.norm_squared().max(1.0));
    }
}
