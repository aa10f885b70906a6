use planar_switching::builtins;
use planar_switching::collinearity::{analyze, classify_component, trace_zero_set};
use planar_switching::field::{parse_field, FieldForm};
use planar_switching::system::{SwitchedSystem, Tolerances};
use planar_switching::Vec2;
use proptest::prelude::*;

/// Builtins whose fields are smooth, with their default windows.
fn smooth_builtins() -> Vec<(SwitchedSystem, planar_switching::Window)> {
    builtins::names()
        .filter(|&n| n != "remark_gus_pair")
        .map(|n| {
            let cfg = builtins::config(n).unwrap();
            (cfg.build_system().unwrap(), cfg.window)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn q_is_antisymmetric_under_swap(k in 0usize..8, x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let sys = builtins::system(builtins::names().nth(k).unwrap()).unwrap();
        let p = Vec2::new(x, y);
        let a = sys.q_jet(p).unwrap();
        let b = sys.swapped().q_jet(p).unwrap();
        prop_assert_eq!(a.value, -b.value);
        prop_assert_eq!(a.gradient, [-b.gradient[0], -b.gradient[1]]);
    }

    #[test]
    fn polar_and_cartesian_forms_agree(r in 0.05f64..2.9, theta in -std::f64::consts::PI..std::f64::consts::PI) {
        // magnitude r^2 bump(r/3), direction theta + 1
        let polar = parse_field("(r^2*bump(r/3), theta + 1)", FieldForm::Polar).unwrap();
        let cart = parse_field(
            "(sqrt(x^2 + y^2)*bump(sqrt(x^2 + y^2)/3)*(x*cos(1) - y*sin(1)), \
              sqrt(x^2 + y^2)*bump(sqrt(x^2 + y^2)/3)*(x*sin(1) + y*cos(1)))",
            FieldForm::Cartesian,
        )
        .unwrap();
        let p = Vec2::from_polar(r, theta);
        let (a, b) = (polar.eval(p).unwrap(), cart.eval(p).unwrap());
        prop_assert!(a.dist(b) <= 1e-12 * a.norm().max(1.0), "{:?} vs {:?}", a, b);
    }
}

#[test]
fn refined_vertices_lie_on_z() {
    let tol = Tolerances::default();
    for (sys, w) in smooth_builtins() {
        let z = trace_zero_set(&sys, &w, &tol).unwrap();
        for c in &z.components {
            for &v in &c.polyline {
                let (a, b) = sys.fields(v).unwrap();
                let q = sys.q(v).unwrap();
                assert!(q.abs() <= tol.refine_tol * (a.norm() * b.norm()).max(1.0), "{}: Q({v:?}) = {q:e}", sys.name);
            }
        }
    }
}

#[test]
fn sign_change_components_separate_signs() {
    let tol = Tolerances::default();
    for (sys, w) in smooth_builtins() {
        let z = analyze(&sys, &w, &tol).unwrap();
        let d = tol.probe(&w);
        for c in z.components.iter().filter(|c| c.q_sign_change) {
            let n = c.polyline.len();
            for k in 0..n {
                // normal from the neighbouring vertices
                let (a, b) = (c.polyline[k.saturating_sub(1)], c.polyline[(k + 1).min(n - 1)]);
                let Some(t) = (b - a).normalized() else { continue };
                let v = c.polyline[k];
                let (qp, qm) = (sys.q(v + t.perp() * d).unwrap(), sys.q(v - t.perp() * d).unwrap());
                assert!(qp * qm < 0.0, "{}: vertex {k} of component {}", sys.name, c.id);
            }
        }
    }
}

#[test]
fn orientation_is_swap_invariant() {
    let tol = Tolerances::default();
    for (sys, w) in smooth_builtins() {
        let z = trace_zero_set(&sys, &w, &tol).unwrap();
        let swapped = sys.swapped();
        for c in &z.components {
            let a = classify_component(&sys, c, &tol).unwrap();
            let b = classify_component(&swapped, c, &tol).unwrap();
            assert_eq!(a, b, "{} component {}", sys.name, c.id);
        }
    }
}

#[test]
fn grid_halving_keeps_component_count() {
    let tol = Tolerances::default();
    for (sys, w) in smooth_builtins() {
        let coarse = trace_zero_set(&sys, &w, &tol).unwrap();
        let fine = trace_zero_set(&sys, &w.refined(), &tol).unwrap();
        assert_eq!(coarse.components.len(), fine.components.len(), "{}", sys.name);
    }
}

#[test]
fn counterexample_line_and_offset_tangencies() {
    let tol = Tolerances::default();
    let cfg = builtins::config("paper_linear_counterexample").unwrap();
    let z = analyze(&cfg.build_system().unwrap(), &cfg.window, &tol).unwrap();
    let slope = -20.0 / (401f64.sqrt() - 1.0);
    assert_eq!(z.components.len(), 2);
    for c in &z.components {
        assert!(c.is_inverse() && !c.q_sign_change && c.touches_border);
        for p in &c.polyline {
            assert!((p.y - slope * p.x).abs() < 1e-3);
        }
    }

    let cfg = builtins::config("offset_circle_tangency").unwrap();
    let z = analyze(&cfg.build_system().unwrap(), &cfg.window, &tol).unwrap();
    assert_eq!(z.components.len(), 1);
    let c = &z.components[0];
    assert!(c.closed && !c.encloses_origin && !c.is_inverse());
    let mut t = c.tangencies.clone();
    t.sort_by(|a, b| a.y.total_cmp(&b.y));
    let h = 3f64.sqrt() / 2.0;
    assert!(t[0].dist(Vec2::new(1.5, -h)) < 1e-4 && t[1].dist(Vec2::new(1.5, h)) < 1e-4, "{t:?}");
}
