use planar_switching::builtins;
use planar_switching::field::{parse_field, FieldForm};
use planar_switching::simulate::{
    accessible_boundary, integrate, random_schedule, BoundaryOptions, IntegrateOptions, Policy, Status, Trajectory,
};
use planar_switching::{SwitchedSystem, Tolerances, Vec2};
use proptest::prelude::*;

fn run(sys: &SwitchedSystem, policy: &Policy, q0: Vec2, t_max: f64, h: f64) -> Trajectory {
    integrate(sys, policy, q0, &IntegrateOptions::new(t_max, h, q0, &Tolerances::default())).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn radial_pair_trajectories_stay_in_the_accessible_region(
        seed in any::<u64>(),
        r in 0.5f64..2.0,
        theta in 0.0f64..std::f64::consts::TAU,
        dwell in 0.05f64..2.0,
    ) {
        let sys = builtins::system("radial_pair").unwrap();
        let q = Vec2::from_polar(r, theta);
        let region = accessible_boundary(&sys, q, &BoundaryOptions::default()).unwrap();
        prop_assert!(region.simple);
        let tr = run(&sys, &random_schedule(seed, 30.0, dwell), q, 30.0, 5e-3);
        for s in &tr.samples {
            prop_assert!(region.contains(s.p, 1e-3 * r), "t = {} p = {:?}", s.t, s.p);
        }
    }

    #[test]
    fn radial_pair_trajectories_do_not_accumulate(seed in any::<u64>(), dwell in 0.05f64..1.0) {
        let sys = builtins::system("radial_pair").unwrap();
        let q0 = Vec2::new(2.0, 0.0);
        let tr = run(&sys, &random_schedule(seed, 40.0, dwell), q0, 40.0, 5e-3);
        let s = &tr.samples;
        for k in (0..s.len()).step_by(s.len() / 20 + 1) {
            let p = s[k].p;
            if !(0.1..=2.0).contains(&p.norm()) {
                continue;
            }
            let Some(left) = s[k..].iter().position(|x| x.p.dist(p) > 0.05) else { continue };
            let back: f64 = s[k + left..]
                .windows(2)
                .filter(|w| w[0].p.dist(p) < 0.01)
                .map(|w| w[1].t - w[0].t)
                .sum();
            prop_assert!(back <= 1.0, "returns near {:?} for {} time units", p, back);
        }
    }

    #[test]
    fn unit_circle_is_crossed_at_most_once(seed in any::<u64>(), r in 0.3f64..2.5, theta in 0.0f64..std::f64::consts::TAU, dwell in 0.05f64..1.0) {
        let sys = builtins::system("unit_circle").unwrap();
        let q0 = Vec2::from_polar(r, theta);
        let tr = run(&sys, &random_schedule(seed, 20.0, dwell), q0, 20.0, 1e-2);
        let signs: Vec<f64> = tr
            .samples
            .iter()
            .filter_map(|s| {
                let q = sys.q(s.p).unwrap();
                (q.abs() > 1e-9).then_some(q.signum())
            })
            .collect();
        let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
        prop_assert!(changes <= 1, "{} sign changes of Q", changes);
    }
}

#[test]
fn exact_decay() {
    let x = parse_field("(-x, -y)", FieldForm::Cartesian).unwrap();
    let sys = SwitchedSystem::new("decay", x.clone(), x);
    let tr = run(&sys, &Policy::Constant { u: 1.0 }, Vec2::new(1.0, 0.0), 1.0, 1e-3);
    let end = tr.last();
    assert_eq!(end.t, 1.0);
    assert!(end.p.dist(Vec2::new((-1f64).exp(), 0.0)) < 1e-8);
}

#[test]
fn chatter_tracks_the_convexified_flow_to_first_order() {
    let sys = builtins::system("radial_pair").unwrap();
    let q0 = Vec2::new(1.0, 0.0);
    let mean = run(&sys, &Policy::Constant { u: 0.5 }, q0, 5.0, 1e-3);
    let distance = |period: f64| {
        let tr = run(&sys, &Policy::Chatter { period, duty: 0.5 }, q0, 5.0, 1e-3);
        tr.samples.iter().map(|s| s.p.dist(mean.at(s.t))).fold(0.0, f64::max)
    };
    let d: Vec<f64> = [0.1, 0.05, 0.025].iter().map(|&p| distance(p)).collect();
    // tube constant fitted on the coarsest period
    let c = d[0] / 0.1;
    for (k, w) in d.windows(2).enumerate() {
        let ratio = w[0] / w[1];
        assert!((1.6..=2.4).contains(&ratio), "ratio {ratio} at step {k}");
    }
    for (dist, period) in d.iter().zip([0.1, 0.05, 0.025]) {
        assert!(*dist <= 1.05 * c * period, "{dist} > C * {period}");
    }
}

#[test]
fn greedy_examples() {
    let sys = builtins::system("radial_pair").unwrap();
    let tr = run(&sys, &Policy::GreedyRadial, Vec2::new(1.0, 0.0), 50.0, 1e-2);
    assert_eq!(tr.status, Status::Converged);

    let sys = builtins::system("unstable_linear_pair").unwrap();
    let tr = run(&sys, &Policy::GreedyRadial, Vec2::new(1.0, 0.0), 20.0, 1e-3);
    assert!(tr.max_radius() > 10.0);
    // radius at successive returns to the positive x half-axis
    let returns: Vec<f64> = tr
        .samples
        .windows(2)
        .filter(|w| (w[0].p.y < 0.0) != (w[1].p.y < 0.0) && w[1].p.x > 0.0)
        .map(|w| w[1].p.norm())
        .collect();
    assert!(returns.len() >= 2);
    assert!(returns.windows(2).all(|w| w[1] > w[0]), "{returns:?}");
}

#[test]
fn gus_feedback_escapes() {
    let sys = builtins::system("remark_gus_pair").unwrap();
    let q0 = Vec2::new(1.0, 0.0);
    let tr = run(&sys, &Policy::GusFeedback, q0, 100.0, 1e-3);
    assert_eq!(tr.status, Status::Escaped);
    assert!(tr.samples.iter().any(|s| s.p.norm() > 10.0 && s.t < 100.0));
    // the constant controls stay bounded
    for u in [0.0, 1.0] {
        let tr = run(&sys, &Policy::Constant { u }, q0, 50.0, 1e-3);
        assert_eq!(tr.status, Status::Completed);
        assert!(tr.max_radius() < 1.5);
    }
}

#[test]
fn boundary_along_a_nearly_vertical_ray_is_simple() {
    // consecutive X-ray segments are collinear up to rounding here
    let sys = builtins::system("radial_pair").unwrap();
    let q = Vec2::from_polar(1.8790070919096087, 1.6629723703357158);
    assert!(accessible_boundary(&sys, q, &BoundaryOptions::default()).unwrap().simple);
}
