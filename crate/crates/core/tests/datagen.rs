use percept::datagen::{generate_scenario, sample_shape, Geometry, Scenario, ScenarioKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

fn radii(frames: &[percept::cloud::PointCloud]) -> Vec<f64> {
    frames.iter().flat_map(|f| f.points().map(|p| (p[0] * p[0] + p[1] * p[1]).sqrt()).collect::<Vec<_>>()).collect()
}

#[test]
fn noiseless_shapes_lie_on_surface() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let c = sample_shape(&Geometry::Circle, 500, 0.0, &mut rng).unwrap();
    assert!(c.points().all(|p| ((p[0] * p[0] + p[1] * p[1]).sqrt() - 1.0).abs() < 1e-12));
    let e = sample_shape(&Geometry::Ellipse { axes: None }, 500, 0.0, &mut rng).unwrap();
    assert!(e.points().all(|p| ((p[0] / 2.0).powi(2) + p[1] * p[1] - 1.0).abs() < 1e-12));
    let s = sample_shape(&Geometry::Ellipsoid { dim: 4, axes: None }, 500, 0.0, &mut rng).unwrap();
    assert_eq!(s.dim(), 4);
    assert!(s.points().all(|p| ((p[0] / 2.0).powi(2) + p[1] * p[1] + p[2] * p[2] + p[3] * p[3] - 1.0).abs() < 1e-12));
}

#[test]
fn radial_residual_matches_noise_level() {
    // Radial residual of a small isotropic perturbation of the unit circle
    // has standard deviation close to sigma.
    let sigma = 0.05;
    let s = Scenario { frames: 120, change: 120, ..Scenario::noise_change(Geometry::Circle, sigma, sigma, 4) };
    let r = radii(&generate_scenario(&s).unwrap());
    assert!(r.len() >= 10_000);
    let m = r.iter().sum::<f64>() / r.len() as f64;
    let sd = (r.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (r.len() - 1) as f64).sqrt();
    assert!((sd - sigma).abs() <= 0.1 * sigma, "sd = {sd}");
}

#[test]
fn noise_change_is_detectable_in_residuals() {
    let s = Scenario::noise_change(Geometry::Circle, 0.05, 0.10, 7);
    let frames = generate_scenario(&s).unwrap();
    assert_eq!(frames.len(), 400);
    let dev = |fs: &[percept::cloud::PointCloud]| radii(fs).into_iter().map(|r| (r - 1.0).abs()).collect::<Vec<_>>();
    let (a, b) = (dev(&frames[..200]), dev(&frames[200..]));
    let stats = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64, v.len() as f64)
    };
    let ((ma, va, na), (mb, vb, nb)) = (stats(&a), stats(&b));
    let se = (va / na + vb / nb).sqrt();
    let t = (mb - ma) / se;
    let df = (va / na + vb / nb).powi(2) / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
    let p = 2.0 * (1.0 - StudentsT::new(0.0, 1.0, df).unwrap().cdf(t.abs()));
    assert!(p < 0.01, "p = {p}");
}

#[test]
fn deterministic_and_regime_split() {
    let s = Scenario::shape_change(Geometry::Circle, Geometry::Ellipse { axes: None }, 0.0, 3);
    let a = generate_scenario(&s).unwrap();
    assert_eq!(a, generate_scenario(&s).unwrap());
    assert_ne!(a, generate_scenario(&Scenario { seed: 4, ..s.clone() }).unwrap());
    let on_circle = |f: &percept::cloud::PointCloud| f.points().all(|p| ((p[0] * p[0] + p[1] * p[1]).sqrt() - 1.0).abs() < 1e-12);
    assert!(a[..200].iter().all(on_circle));
    assert!(!a[200..].iter().any(on_circle));
    assert_eq!(s.kind, ScenarioKind::ShapeChange);
    let n = Scenario::noise_change(Geometry::Sphere { dim: 3 }, 0.05, 0.1, 0);
    assert_eq!(n.regime(0).0, n.regime(399).0);
    assert_eq!((n.regime(199).1, n.regime(200).1), (0.05, 0.1));
}
