use nonlocal_liouville_demo::{front, Scene};

const DISK: &str = "[grid]\nlo = -3,-3\nhi = 3,3\nh = 0.125\n\n[obstacle]\nfamily = ball\nradius = 1\n";

#[test]
fn mass_map_marks_obstacle() {
    let s = Scene::new(DISK, "hostile").unwrap();
    assert_eq!(s.width() * s.height(), s.mass_map().len());
    let m = s.mass_map();
    let centre = (s.width() / 2) * s.height() + s.height() / 2;
    assert!(m[centre].is_nan());
    assert!(s.convex());
    assert!(s.min_mass() >= 0.45);
}

#[test]
fn relaxation_fills_the_domain() {
    let mut s = Scene::new(DISK, "hostile").unwrap();
    let mut r = f64::INFINITY;
    while s.steps() < 5000 && r > 1e-8 {
        r = s.relax(50).unwrap();
    }
    assert!(r <= 1e-8, "residual {r}");
    assert!(s.min_u() > 1.0 - 1e-6);
}

#[test]
fn front_is_monotone_and_pinned() {
    let f = front(DISK).unwrap();
    let v = f.values();
    assert!(v.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    assert!((v[f.pin()] - 0.3).abs() < 1e-9);
    assert!(f.speed() > 0.0);
}
