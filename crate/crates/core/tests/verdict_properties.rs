use planar_switching::builtins;
use planar_switching::collinearity::{analyze, check_genericity, CollinearitySet, GenericityReport, TriState};
use planar_switching::linear::{linear_guas_test, linearize, LinearVerdict};
use planar_switching::verdict::{decide, StabilityClass, RULE_INVERSE, RULE_NO_COLLINEARITY, RULE_NO_TANGENCY, RULE_UNBOUNDED_INVERSE};
use planar_switching::{SwitchedSystem, Window};

struct Inputs {
    sys: SwitchedSystem,
    w: Window,
    z: CollinearitySet,
    gen: GenericityReport,
    linear: Option<LinearVerdict>,
}

fn inputs(sys: SwitchedSystem, w: Window) -> Inputs {
    let tol = planar_switching::Tolerances::default();
    let z = analyze(&sys, &w, &tol).unwrap();
    let gen = check_genericity(&sys, &z, &tol);
    let linear = linearize(&sys)
        .and_then(|p| linear_guas_test(&p, tol.n_angles, tol.gain_tol, tol.rate_tol, tol.hurwitz_tol))
        .ok();
    Inputs { sys, w, z, gen, linear }
}

fn analysed_builtins() -> Vec<Inputs> {
    builtins::names()
        .filter(|&n| n != "remark_gus_pair")
        .map(|n| {
            let cfg = builtins::config(n).unwrap();
            inputs(cfg.build_system().unwrap(), cfg.window)
        })
        .collect()
}

fn verdict(i: &Inputs) -> planar_switching::verdict::Verdict {
    decide(&i.z, &i.gen, i.linear.as_ref(), &i.sys, &i.w)
}

#[test]
fn golden_classes() {
    let expected = [
        ("radial_pair", StabilityClass::Guas),
        ("unit_circle", StabilityClass::Guas),
        ("offset_circle_tangency", StabilityClass::Gus),
        ("davydov_type1", StabilityClass::Unbounded),
        ("davydov_type2", StabilityClass::Unbounded),
        ("paper_linear_counterexample", StabilityClass::NotGloballyAttractive),
        ("unstable_linear_pair", StabilityClass::NotLas),
    ];
    for (i, (name, class)) in analysed_builtins().iter().zip(expected) {
        assert_eq!(i.sys.name, name);
        assert_eq!(verdict(i).class, class, "{name}");
    }
}

#[test]
fn weakening_tri_states_is_monotone() {
    for i in analysed_builtins() {
        let base = verdict(&i);
        for mask in 0u32..16 {
            let mut gen = i.gen.clone();
            let mut z = i.z.clone();
            let weaken = |t: &mut TriState, bit: u32| {
                if mask & (1 << bit) != 0 && *t == TriState::Yes {
                    *t = TriState::Unknown;
                }
            };
            weaken(&mut gen.g1.holds, 0);
            weaken(&mut gen.g2.holds, 1);
            weaken(&mut gen.g3.holds, 2);
            weaken(&mut z.origin_isolated, 3);
            let v = decide(&z, &gen, i.linear.as_ref(), &i.sys, &i.w);
            assert!(
                base.class.implies(v.class),
                "{} mask {mask:04b}: {} weakened to {}",
                i.sys.name,
                base.class,
                v.class
            );
            let (g1, g2, g3) = (gen.g1.holds.is_yes(), gen.g2.holds.is_yes(), gen.g3.holds.is_yes());
            let iso = z.origin_isolated.is_yes();
            assert!(!v.fired(RULE_UNBOUNDED_INVERSE) || (g1 && g3));
            assert!(!v.fired(RULE_NO_TANGENCY) || (g1 && g2 && iso));
            assert!(!v.fired(RULE_NO_COLLINEARITY) || iso);
        }
    }
}

#[test]
fn decide_is_deterministic() {
    for i in analysed_builtins() {
        assert_eq!(verdict(&i), verdict(&i), "{}", i.sys.name);
    }
}

#[test]
fn structural_rule_exclusions() {
    for i in analysed_builtins() {
        let v = verdict(&i);
        assert!(!(v.fired(RULE_NO_COLLINEARITY) && v.fired(RULE_INVERSE)), "{}", i.sys.name);
        if v.class == StabilityClass::Guas {
            assert!(v.rules_fired.iter().all(|r| r.conclusion != StabilityClass::NotGloballyAttractive));
        }
        for r in &v.rules_fired {
            assert!(!r.citation.is_empty() && !r.rule_id.is_empty());
        }
    }
}

#[test]
fn swapping_fields_keeps_the_class() {
    for i in analysed_builtins() {
        let swapped = inputs(i.sys.swapped(), i.w);
        assert_eq!(verdict(&i).class, verdict(&swapped).class, "{}", i.sys.name);
    }
}

/// Adds `c0*x + c1*y` to the first component and `c2*x + c3*y` to the second.
fn perturbed(src: &str, c: [f64; 4]) -> String {
    let inner = &src.trim()[1..src.trim().len() - 1];
    let mut depth = 0;
    let split = inner
        .char_indices()
        .find(|&(_, ch)| {
            match ch {
                '(' => depth += 1,
                ')' => depth -= 1,
                _ => {}
            }
            ch == ',' && depth == 0
        })
        .unwrap()
        .0;
    let (a, b) = (&inner[..split], &inner[split + 1..]);
    format!(
        "({} + ({:e})*x + ({:e})*y, {} + ({:e})*x + ({:e})*y)",
        a.trim(),
        c[0],
        c[1],
        b.trim(),
        c[2],
        c[3]
    )
}

#[test]
fn small_perturbations_keep_the_class() {
    use planar_switching::field::{parse_field, FieldForm};
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    for name in ["radial_pair", "unit_circle", "offset_circle_tangency", "davydov_type1", "unstable_linear_pair"] {
        let cfg = builtins::config(name).unwrap();
        let (x, y, _) = builtins::sources(name).unwrap();
        let base = verdict(&inputs(cfg.build_system().unwrap(), cfg.window)).class;
        for _ in 0..3 {
            let mut c = || std::array::from_fn(|_| rng.gen_range(-1e-3..1e-3));
            let sys = SwitchedSystem::new(
                name,
                parse_field(&perturbed(x, c()), FieldForm::Cartesian).unwrap(),
                parse_field(&perturbed(y, c()), FieldForm::Cartesian).unwrap(),
            );
            assert_eq!(verdict(&inputs(sys, cfg.window)).class, base, "{name}");
        }
    }
}
