//! Property suite for the binding parameterization: simplex normalization,
//! hard-mode planarity, and analytic-vs-numeric position gradients over
//! random parameter draws.

use gauss_model::{BindingMode, BoundGaussianSet, UnitGrad};
use geom_core::{TriangleMesh, Vec3};
use proptest::prelude::*;
use std::sync::Arc;

fn slanted_mesh() -> Arc<TriangleMesh> {
    Arc::new(
        TriangleMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.1),
                Vec3::new(0.4, 0.05, 0.0),
                Vec3::new(0.1, 0.5, 0.25),
                Vec3::new(0.55, 0.45, 0.3),
            ],
            vec![[0, 1, 2], [1, 3, 2]],
        )
        .unwrap(),
    )
}

proptest! {
    /// Softmax-derived weights always lie on the simplex.
    #[test]
    fn barycentric_weights_sum_to_one(
        l0 in -30.0..30.0f64,
        l1 in -30.0..30.0f64,
        l2 in -30.0..30.0f64,
    ) {
        let mesh = slanted_mesh();
        let mut set = BoundGaussianSet::init_bindings(mesh, 1, BindingMode::Soft, 0).unwrap();
        set.gaussians_mut()[0].bary_logits = [l0, l1, l2];
        let alpha = set.gaussians()[0].barycentric();
        let sum: f64 = alpha.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-9);
        prop_assert!(alpha.iter().all(|&a| a > 0.0));
    }

    /// Hard mode reproduces the in-plane combination exactly.
    #[test]
    fn hard_mode_is_planar(
        l0 in -5.0..5.0f64,
        l1 in -5.0..5.0f64,
        l2 in -5.0..5.0f64,
        nr in -3.0..3.0f64,
        face in 0usize..2,
    ) {
        let mesh = slanted_mesh();
        let mut set = BoundGaussianSet::init_bindings(mesh.clone(), 1, BindingMode::Hard, 0)
            .unwrap();
        set.gaussians_mut()[0].bary_logits = [l0, l1, l2];
        set.gaussians_mut()[0].normal_raw = nr;
        set.gaussians_mut()[0].face_index = face;
        let unit = set.resolve(0).unwrap();
        let n = mesh.normals()[face];
        let [v1, _, _] = mesh.face_vertices(face);
        let h = mesh.face_area(face).sqrt();
        prop_assert!((unit.position - v1).dot(n).abs() < 1e-9 * h);
    }

    /// Central finite differences confirm the analytic position gradient for
    /// random logits, random normal weights and a random probe direction.
    #[test]
    fn position_gradient_matches_fd(
        l0 in -2.0..2.0f64,
        l1 in -2.0..2.0f64,
        l2 in -2.0..2.0f64,
        nr in -1.5..1.5f64,
        wx in -1.0..1.0f64,
        wy in -1.0..1.0f64,
        wz in -1.0..1.0f64,
    ) {
        prop_assume!(wx.abs() + wy.abs() + wz.abs() > 0.1);
        let mesh = slanted_mesh();
        let mut set = BoundGaussianSet::init_bindings(mesh, 1, BindingMode::Soft, 0).unwrap();
        set.gaussians_mut()[0].bary_logits = [l0, l1, l2];
        set.gaussians_mut()[0].normal_raw = nr;

        let w = Vec3::new(wx, wy, wz);
        let upstream = UnitGrad { position: w, ..Default::default() };
        let grad = set.resolve_backward(0, &upstream).unwrap();

        let eval = |s: &BoundGaussianSet| w.dot(s.resolve(0).unwrap().position);
        let step = 1e-5;
        let mut params: Vec<(f64, f64)> = Vec::new(); // (analytic, fd)
        for k in 0..3 {
            let mut p = set.clone();
            p.gaussians_mut()[0].bary_logits[k] += step;
            let mut m = set.clone();
            m.gaussians_mut()[0].bary_logits[k] -= step;
            params.push((grad.bary_logits[k], (eval(&p) - eval(&m)) / (2.0 * step)));
        }
        let mut p = set.clone();
        p.gaussians_mut()[0].normal_raw += step;
        let mut m = set.clone();
        m.gaussians_mut()[0].normal_raw -= step;
        params.push((grad.normal_raw, (eval(&p) - eval(&m)) / (2.0 * step)));

        for (analytic, fd) in params {
            let scale = fd.abs().max(analytic.abs()).max(1e-6);
            prop_assert!(
                (analytic - fd).abs() / scale < 1e-4,
                "analytic {analytic} vs fd {fd}"
            );
        }
    }
}
