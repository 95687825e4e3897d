use iapd::linalg::{polar, svd};
use iapd::rng::gaussian_matrix;
use nalgebra::DMatrix;

fn to_na(m: &iapd::Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

#[test]
fn singular_values_match_nalgebra() {
    for (i, (n, m)) in [(1, 1), (3, 3), (5, 2), (2, 5), (8, 8), (25, 4), (4, 25)].into_iter().enumerate() {
        let a = gaussian_matrix(n, m, 300 + i as u64);
        let ours = svd(&a).unwrap().sigma;
        let mut theirs: Vec<f64> = to_na(&a).singular_values().iter().copied().collect();
        theirs.sort_by(|p, q| q.total_cmp(p));
        assert_eq!(ours.len(), theirs.len());
        for (p, q) in ours.iter().zip(&theirs) {
            assert!((p - q).abs() <= 1e-12 * theirs[0], "{n}x{m}: {p} vs {q}");
        }
    }
}

#[test]
fn polar_factor_matches_nalgebra() {
    for (i, (n, m)) in [(3, 3), (6, 2), (10, 4)].into_iter().enumerate() {
        let a = gaussian_matrix(n, m, 400 + i as u64);
        let ours = polar(&a).unwrap().u;
        let d = to_na(&a).svd(true, true);
        let theirs = d.u.unwrap() * d.v_t.unwrap();
        let diff = (to_na(ours.matrix()) - theirs).norm();
        assert!(diff <= 1e-10, "{n}x{m}: {diff}");
    }
}
