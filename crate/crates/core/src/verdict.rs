//! Stability verdicts from the collinearity, genericity and linear reports.
//!
//! Rules are tried instability-first. Every rule whose hypotheses are
//! certified is recorded; the class is the conclusion of the first one.
//! A hypothesis reported as unknown never lets a rule fire.

use serde::Serialize;

use crate::collinearity::{CollinearitySet, GenericityReport, TriState};
use crate::geometry::Vec2;
use crate::linear::{LinearClass, LinearVerdict};
use crate::system::{SwitchedSystem, Window};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityClass {
    Guas,
    Gus,
    Bounded,
    NotGloballyAttractive,
    Unbounded,
    NotLas,
    Unknown,
}

impl StabilityClass {
    pub fn as_str(self) -> &'static str {
        match self {
            StabilityClass::Guas => "guas",
            StabilityClass::Gus => "gus",
            StabilityClass::Bounded => "bounded",
            StabilityClass::NotGloballyAttractive => "not_globally_attractive",
            StabilityClass::Unbounded => "unbounded",
            StabilityClass::NotLas => "not_las",
            StabilityClass::Unknown => "unknown",
        }
    }

    /// Whether a system of class `self` necessarily has class `other`.
    pub fn implies(self, other: StabilityClass) -> bool {
        use StabilityClass::*;
        self == other
            || other == Unknown
            || matches!(
                (self, other),
                (Guas, Gus) | (Guas, Bounded) | (Gus, Bounded) | (Unbounded, NotGloballyAttractive)
            )
    }

    pub fn is_conclusive(self) -> bool {
        self != StabilityClass::Unknown
    }
}

impl std::fmt::Display for StabilityClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub what: String,
    pub point: Option<Vec2>,
    pub value: Option<f64>,
}

impl Witness {
    fn at(what: impl Into<String>, p: Vec2) -> Self {
        Witness { what: what.into(), point: Some(p), value: None }
    }

    fn note(what: impl Into<String>) -> Self {
        Witness { what: what.into(), point: None, value: None }
    }

    fn value(what: impl Into<String>, v: f64) -> Self {
        Witness { what: what.into(), point: None, value: Some(v) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleFired {
    pub rule_id: &'static str,
    pub citation: &'static str,
    pub conclusion: StabilityClass,
    pub witnesses: Vec<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub class: StabilityClass,
    pub rules_fired: Vec<RuleFired>,
    pub scope: Window,
    pub caveats: Vec<String>,
}

impl Verdict {
    pub fn fired(&self, rule_id: &str) -> bool {
        self.rules_fired.iter().any(|r| r.rule_id == rule_id)
    }
}

pub const RULE_UNBOUNDED_INVERSE: &str = "t-inv-non-comp";
pub const RULE_INVERSE: &str = "p-mai-inverse";
pub const RULE_NO_COLLINEARITY: &str = "t-mai-paralleli";
pub const RULE_NO_TANGENCY: &str = "t-mai-tangent";
pub const RULE_COMPACT_LINEAR: &str = "c1";
pub const RULE_COMPACT: &str = "t-solo-compatte";
pub const RULE_LINEARIZATION: &str = "nec-cond";

const CITE_UNBOUNDED_INVERSE: &str =
    "Theorem: under (G1) and (G3), an unbounded inverse component of Z makes the system unbounded";
const CITE_INVERSE: &str = "Proposition: an inverse component of Z prevents global attractivity";
const CITE_NO_COLLINEARITY: &str = "Theorem: if Z = {0} the switched system is GUAS";
const CITE_NO_TANGENCY: &str =
    "Theorem: under (G1) and (G2), with the origin isolated in Z and no tangency point, the system is GUAS";
const CITE_COMPACT_LINEAR: &str =
    "Corollary: Z compact and the linearized system non-degenerate and GUAS imply GUS";
const CITE_COMPACT: &str = "Theorem: if Z is compact the switched system is bounded";
const CITE_LINEARIZATION: &str =
    "Proposition: with Hurwitz linearizations, the system is LAS if and only if the linearized system is GUAS";

pub const DEGENERATE_CAVEAT: &str = "collinearity set degenerate; paper hypotheses (G1) fail";

/// Apply the rules in the order 6, 5, 1, 2, 4, 3, 7.
pub fn decide(
    z: &CollinearitySet,
    gen: &GenericityReport,
    linear: Option<&LinearVerdict>,
    sys: &SwitchedSystem,
    w: &Window,
) -> Verdict {
    let mut caveats = sys.caveats.clone();
    if z.degenerate {
        caveats.push(DEGENERATE_CAVEAT.to_string());
        return Verdict {
            class: StabilityClass::Unknown,
            rules_fired: Vec::new(),
            scope: *w,
            caveats,
        };
    }
    let mut fired = Vec::new();
    let comps = &z.components;
    let inverse: Vec<_> = comps.iter().filter(|c| c.is_inverse()).collect();
    let g1 = gen.g1.holds == TriState::Yes;
    let g2 = gen.g2.holds == TriState::Yes;
    let g3 = gen.g3.holds == TriState::Yes;
    let witness_point = |c: &crate::collinearity::ZComponent| c.polyline[c.polyline.len() / 2];

    // 6
    let unbounded_inverse: Vec<_> = inverse.iter().filter(|c| c.touches_border).collect();
    if g1 && g3 && !unbounded_inverse.is_empty() {
        fired.push(RuleFired {
            rule_id: RULE_UNBOUNDED_INVERSE,
            citation: CITE_UNBOUNDED_INVERSE,
            conclusion: StabilityClass::Unbounded,
            witnesses: unbounded_inverse
                .iter()
                .map(|c| Witness::at(format!("inverse component {} reaches the window border", c.id), witness_point(c)))
                .collect(),
        });
        caveats.push("unboundedness of the inverse component certified only within the window".into());
    }
    // 5
    if !inverse.is_empty() {
        fired.push(RuleFired {
            rule_id: RULE_INVERSE,
            citation: CITE_INVERSE,
            conclusion: StabilityClass::NotGloballyAttractive,
            witnesses: inverse
                .iter()
                .map(|c| Witness::at(format!("equilibrium of a constant control on inverse component {}", c.id), witness_point(c)))
                .collect(),
        });
    }
    // 1
    let isolated = z.origin_isolated == TriState::Yes;
    if comps.is_empty() && isolated {
        fired.push(RuleFired {
            rule_id: RULE_NO_COLLINEARITY,
            citation: CITE_NO_COLLINEARITY,
            conclusion: StabilityClass::Guas,
            witnesses: vec![Witness::note("no component of Z in the window")],
        });
    }
    // 2
    let tangency_free = comps.iter().all(|c| c.tangencies_checked && c.tangencies.is_empty());
    if g1 && g2 && isolated && tangency_free {
        let mut witnesses = Vec::new();
        if let Some(m) = gen.g1.min_grad_norm {
            witnesses.push(Witness::value("min |grad Q| on Z", m));
        }
        if let Some(d) = gen.g2.hessian_det {
            witnesses.push(Witness::value("det Hess Q(0)", d));
        }
        fired.push(RuleFired {
            rule_id: RULE_NO_TANGENCY,
            citation: CITE_NO_TANGENCY,
            conclusion: StabilityClass::Guas,
            witnesses,
        });
    }
    // 4 and 3
    let compact = comps.iter().all(|c| !c.touches_border);
    let linear_guas = linear.is_some_and(|l| l.class == LinearClass::Guas);
    if compact && linear_guas {
        let mut witnesses = vec![Witness::note("linearized pair classified guas")];
        witnesses.extend(comps.iter().flat_map(|c| c.tangencies.iter().map(|&t| Witness::at("tangency point", t))));
        fired.push(RuleFired {
            rule_id: RULE_COMPACT_LINEAR,
            citation: CITE_COMPACT_LINEAR,
            conclusion: StabilityClass::Gus,
            witnesses,
        });
    }
    if compact {
        fired.push(RuleFired {
            rule_id: RULE_COMPACT,
            citation: CITE_COMPACT,
            conclusion: StabilityClass::Bounded,
            witnesses: vec![Witness::value("components, none reaching the window border", comps.len() as f64)],
        });
    }
    // 7
    if let Some(l) = linear {
        if matches!(l.class, LinearClass::MarginalNotGuas | LinearClass::Unbounded) {
            let mut witnesses = vec![Witness::note(format!("linearized pair classified {}", l.class.as_str()))];
            if let Some(g) = l.worst_cycle_gain {
                witnesses.push(Witness::value("worst log-gain per revolution", g));
            }
            fired.push(RuleFired {
                rule_id: RULE_LINEARIZATION,
                citation: CITE_LINEARIZATION,
                conclusion: StabilityClass::NotLas,
                witnesses,
            });
        }
    }

    let class = fired.first().map_or(StabilityClass::Unknown, |r| r.conclusion);
    if fired.iter().any(|r| matches!(r.rule_id, RULE_NO_COLLINEARITY | RULE_COMPACT | RULE_COMPACT_LINEAR)) {
        caveats.push("shape of Z checked only within the window".into());
    }
    Verdict {
        class,
        rules_fired: fired,
        scope: *w,
        caveats,
    }
}
