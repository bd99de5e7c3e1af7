//! Built-in evaluators for every problem module and the figure recipes that
//! combine them with a grid and an optional boundary fit.

use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{AxisLabels, Cell, FitModel, FnEvaluator, GridSpec, PropertyEvaluator};
use crate::bvp::{classify_ss, SsRegime};
use crate::classical::{clairaut_label, root_count_unit_interval, ClassicalLabel};
use crate::dispersion::{count_bifurcations_4comp, ScanOptions, SktParams};
use crate::error::{Error, Result};
use crate::fastslow::{classify_olsen_with, classify_transcritical, OscKind, StateBox, TcConfig, TcLabel, OLSEN_SEED_STATE};
use crate::kernel::ParamPoint;
use crate::pdmp::{classify_bdd, pdl_label, threshold_g, PdlLabel, DEFAULT_CELLS};
use crate::shear::{lyapunov_quadrature, mc_lyapunov_hopf};
use crate::stochastic::{
    classify_fhn, escape_probability_strip, transition_probability_transcritical, FhnLabel, ProbEstimate, StripProblem,
};

/// Effort level of the Monte Carlo and long-run evaluators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Effort {
    Quick,
    Full,
}

impl Effort {
    fn pick<T>(self, quick: T, full: T) -> T {
        match self {
            Effort::Quick => quick,
            Effort::Full => full,
        }
    }
}

pub const PROBLEMS: &[&str] = &[
    "root-count",
    "convexity",
    "clairaut",
    "tc",
    "olsen",
    "strip-sfs",
    "stoch-tc",
    "stoch-tcd",
    "fhn",
    "shear",
    "hopf",
    "pdmp-linear",
    "pdmp-bdd",
    "mems-ss",
    "skt",
];

/// Below 1/2 or above 1/2 with 95% confidence, else ambiguous.
fn half_level(p: &ProbEstimate, below: &str, above: &str) -> Cell {
    if p.ci95.1 < 0.5 {
        Cell::label(below)
    } else if p.ci95.0 > 0.5 {
        Cell::label(above)
    } else {
        Cell::Ambiguous
    }
}

fn cached_g() -> impl Fn(f64) -> Result<f64> + Send + Sync {
    let cache: Mutex<HashMap<u64, f64>> = Mutex::new(HashMap::new());
    move |eps: f64| {
        if let Some(&g) = cache.lock().unwrap().get(&eps.to_bits()) {
            return Ok(g);
        }
        let g = threshold_g(eps, DEFAULT_CELLS)?;
        cache.lock().unwrap().insert(eps.to_bits(), g);
        Ok(g)
    }
}

/// Evaluator for a built-in problem id (see [`PROBLEMS`]).
pub fn problem_evaluator(id: &str, effort: Effort) -> Result<Box<dyn PropertyEvaluator>> {
    let ev = match id {
        "root-count" => FnEvaluator::new(id, &["2", "0"], |e, d, _| {
            Ok(Cell::label(root_count_unit_interval(&ParamPoint::new(e, d)?).to_string()))
        })
        .with_axes(AxisLabels { eps_axis: Cell::label("2"), delta_axis: Cell::label("0"), origin: Cell::NotDefined }),
        "convexity" => FnEvaluator::new(id, &["1"], |_, _, _| Ok(Cell::label("1"))).with_axes(AxisLabels {
            eps_axis: Cell::label("1"),
            delta_axis: Cell::label("1"),
            origin: Cell::label("1"),
        }),
        "clairaut" => FnEvaluator::new(id, &["+", "-"], |e, d, _| {
            Ok(match clairaut_label(e, d) {
                Some(ClassicalLabel::PartialPlus) => Cell::label("+"),
                Some(ClassicalLabel::PartialMinus) => Cell::label("-"),
                _ => Cell::NotDefined,
            })
        }),
        "tc" => FnEvaluator::new(id, &["ExchangeOfStability", "CriticalTransition", "Canard"], |e, d, _| {
            let l = classify_transcritical(e, d, &StateBox::default(), &TcConfig::default())?;
            Ok(Cell::label(match l {
                TcLabel::ExchangeOfStability => "ExchangeOfStability",
                TcLabel::CriticalTransition => "CriticalTransition",
                TcLabel::Canard => "Canard",
            }))
        }),
        "olsen" => {
            let (t_tr, win) = effort.pick((1e5, 2000.0), (1e5, 4000.0));
            FnEvaluator::new(id, &["Relaxation", "MMO", "Chaotic"], move |e, d, _| {
                let cfg = crate::fastslow::OlsenConfig::default();
                let k0 = crate::fastslow::calibrate_k0(e, t_tr, &crate::fastslow::OlsenConfig { k_window: win * e, ..cfg })?.k0;
                let l = classify_olsen_with(e, d, t_tr, win, &OLSEN_SEED_STATE, k0, &cfg)?;
                Ok(Cell::label(match l.kind {
                    OscKind::Relaxation => "Relaxation",
                    OscKind::MMO => "MMO",
                    OscKind::Chaotic => "Chaotic",
                }))
            })
        }
        "strip-sfs" => {
            let n = effort.pick(200, 1000);
            FnEvaluator::new(id, &["I", "II"], move |e, s, seed| {
                let p = escape_probability_strip(&StripProblem::sfs_stable_branch(), e, s, 1.0, 1.0, n, seed)?;
                Ok(half_level(&p, "I", "II"))
            })
            .with_axis_names("eps", "sigma")
        }
        "stoch-tc" => {
            let n = effort.pick(200, 2000);
            FnEvaluator::new(id, &["Stays", "Transition"], move |e, s, seed| {
                let p = transition_probability_transcritical(e, s, None, -1.0, n, seed)?;
                Ok(half_level(&p, "Stays", "Transition"))
            })
            .with_axis_names("eps", "sigma")
        }
        "stoch-tcd" => {
            let n = effort.pick(200, 2000);
            FnEvaluator::new(id, &["Stays", "Transition"], move |e, s, seed| {
                let p = transition_probability_transcritical(e, s, Some(0.04), -1.0, n, seed)?;
                Ok(half_level(&p, "Stays", "Transition"))
            })
            .with_axis_names("eps", "sigma")
        }
        "fhn" => {
            let t_end = effort.pick(500.0, 5000.0);
            FnEvaluator::new(id, &["RareIsolated", "Clusters", "Repeated"], move |d, s, seed| {
                let st = classify_fhn(0.01, d, s, t_end, seed)?;
                Ok(Cell::label(match st.label {
                    FhnLabel::RareIsolated => "RareIsolated",
                    FhnLabel::Clusters => "Clusters",
                    FhnLabel::Repeated => "Repeated",
                }))
            })
            .with_axis_names("delta", "sigma")
        }
        "shear" => FnEvaluator::new(id, &["Synchronizing", "Chaotic", "Neutral"], |a, s, _| {
            let l = lyapunov_quadrature(a, 1.0, s)?.lambda1;
            Ok(if l < 0.0 {
                Cell::label("Synchronizing")
            } else if l > 0.0 {
                Cell::label("Chaotic")
            } else {
                Cell::label("Neutral")
            })
        })
        // without noise the limit cycle is neutral; without damping the noise wins
        .with_axes(AxisLabels { eps_axis: Cell::label("Neutral"), delta_axis: Cell::label("Chaotic"), origin: Cell::label("Neutral") })
        .with_axis_names("alpha", "sigma"),
        "hopf" => {
            let (t, reps) = effort.pick((200.0, 4), (2000.0, 10));
            FnEvaluator::new(id, &["Synchronizing", "Chaotic", "Neutral"], move |a, s, seed| {
                let p = mc_lyapunov_hopf(a, 0.0, 1.0, 3.0, s, t, reps, seed)?;
                let se = p.se.unwrap_or(f64::INFINITY);
                Ok(if p.lambda1 + 2.0 * se < 0.0 {
                    Cell::label("Synchronizing")
                } else if p.lambda1 - 2.0 * se > 0.0 {
                    Cell::label("Chaotic")
                } else {
                    Cell::Ambiguous
                })
            })
            .with_axes(AxisLabels { eps_axis: Cell::label("Neutral"), delta_axis: Cell::NotDefined, origin: Cell::label("Neutral") })
            .with_axis_names("alpha", "sigma")
        }
        "pdmp-linear" => {
            let g = cached_g();
            FnEvaluator::new(id, &["Stable", "Unstable"], move |e, d, _| {
                Ok(match pdl_label(d, g(e)?) {
                    PdlLabel::Stable => Cell::label("Stable"),
                    PdlLabel::Unstable => Cell::label("Unstable"),
                    PdlLabel::Boundary => Cell::NotDefined,
                })
            })
        }
        "pdmp-bdd" => FnEvaluator::new(id, &["1", "0"], |e, d, _| {
            Ok(classify_bdd(e, d).map(|v| Cell::label(v.to_string())).unwrap_or(Cell::NotDefined))
        }),
        "mems-ss" => FnEvaluator::new(id, &["I", "II", "III", "IV"], |e, d, _| {
            Ok(match classify_ss(e, d) {
                Some(SsRegime::I) => Cell::label("I"),
                Some(SsRegime::II) => Cell::label("II"),
                Some(SsRegime::III) => Cell::label("III"),
                Some(SsRegime::IV) => Cell::label("IV"),
                None => Cell::NotDefined,
            })
        })
        .with_axes(AxisLabels {
            eps_axis: cells_opt(classify_ss(0.01, 0.0)),
            delta_axis: cells_opt(classify_ss(0.0, 0.5)),
            origin: cells_opt(classify_ss(0.0, 0.0)),
        }),
        "skt" => {
            let n_scan = effort.pick(400, 2000);
            let labels: Vec<String> = (0..=24).map(|k| k.to_string()).collect();
            let refs: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
            FnEvaluator::new(id, &refs, move |e, d, _| {
                let opts = ScanOptions { n_scan, ..Default::default() };
                Ok(Cell::label(count_bifurcations_4comp(&SktParams::default(), e, d, &opts)?.count.to_string()))
            })
        }
        _ => return Err(Error::InvalidInput(format!("unknown problem '{id}'; known: {}", PROBLEMS.join(", ")))),
    };
    Ok(Box::new(ev))
}

fn cells_opt(r: Option<SsRegime>) -> Cell {
    match r {
        Some(r) => Cell::label(format!("{r:?}")),
        None => Cell::NotDefined,
    }
}

/// A reproducible diagram for one figure of the source analysis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Recipe {
    pub id: String,
    pub problem: String,
    /// What the figure shows, for the manifest.
    pub description: String,
    pub grid: GridSpec,
    pub quick_grid: GridSpec,
    /// Lower and upper labels of the fitted boundary.
    pub boundary: Option<(String, String)>,
    pub fit: Option<FitModel>,
}

fn recipe(
    id: &str,
    problem: &str,
    description: &str,
    grid: GridSpec,
    quick_grid: GridSpec,
    boundary: Option<(&str, &str, FitModel)>,
) -> Recipe {
    Recipe {
        id: id.into(),
        problem: problem.into(),
        description: description.into(),
        grid,
        quick_grid,
        boundary: boundary.map(|(a, b, _)| (a.into(), b.into())),
        fit: boundary.map(|(_, _, m)| m),
    }
}

pub fn recipes() -> Vec<Recipe> {
    use FitModel::*;
    let g = GridSpec::log;
    vec![
        recipe("fig2", "root-count", "roots of eps x^2 - delta in [-1, 1]", g((0.01, 1.0), (0.01, 1.0), 40, 40), g((0.01, 1.0), (0.01, 1.0), 20, 20), Some(("2", "0", PowerLaw))),
        recipe("fig4", "clairaut", "sign of the mixed difference quotient", g((0.01, 1.0), (0.01, 1.0), 40, 40), g((0.01, 1.0), (0.01, 1.0), 20, 20), Some(("+", "-", PowerLaw))),
        recipe("fig6", "tc", "deterministic transcritical passage (wedge around delta = eps)", g((0.02, 0.3), (0.005, 1.0), 12, 40), g((0.05, 0.3), (0.02, 0.5), 3, 12), None),
        recipe("fig7", "olsen", "Olsen oscillation patterns (conjectural)", g((0.03, 0.1), (1e-4, 0.1), 4, 6), g((0.05, 0.05), (0.025, 0.025), 1, 1), None),
        recipe("fig8", "strip-sfs", "escape from a neighbourhood of a stable slow manifold", g((1e-3, 0.1), (0.05, 1.0), 8, 16), g((0.01, 0.1), (0.1, 1.0), 3, 6), Some(("I", "II", ExpLaw))),
        recipe("fig9", "stoch-tc", "noisy transcritical, transition probability vs 1/2", g((1e-3, 0.1), (1e-3, 1.0), 8, 24), g((0.01, 0.1), (0.01, 0.3), 3, 6), Some(("Stays", "Transition", PowerLaw))),
        recipe("fig10", "stoch-tcd", "noisy avoided transcritical at delta = 0.04", g((1e-3, 0.1), (1e-3, 1.0), 8, 24), g((0.01, 0.1), (0.01, 0.3), 3, 6), None),
        recipe("fig13", "shear", "shear-induced chaos, sign of lambda_1 with sigma_0(alpha)", g((0.05, 2.0), (0.05, 10.0), 16, 120), g((0.1, 2.0), (0.1, 10.0), 6, 30), Some(("Synchronizing", "Chaotic", PowerLaw))),
        recipe("fig14", "hopf", "noisy Hopf normal form, sign of lambda_1 (Monte Carlo)", g((0.05, 1.0), (0.05, 1.0), 6, 6), g((0.1, 1.0), (0.1, 1.0), 2, 2), None),
        recipe("fig16", "pdmp-linear", "linear switching, sign of delta - G(eps)", g((0.05, 2.0), (0.001, 1.0), 10, 30), g((0.05, 1.0), (0.001, 1.0), 5, 10), Some(("Unstable", "Stable", PowerLaw))),
        recipe("fig18", "pdmp-bdd", "logistic switching, bounded quiet-mode density", g((0.01, 1.0), (0.01, 1.0), 40, 40), g((0.01, 1.0), (0.01, 1.0), 20, 20), Some(("1", "0", PowerLaw))),
        recipe("fig20", "mems-ss", "regularized membrane, solution-set regimes", g((0.01, 0.5), (0.01, 2.0), 30, 30), g((0.01, 0.5), (0.01, 2.0), 10, 10), None),
        recipe("fhn", "fhn", "FitzHugh-Nagumo spiking patterns at eps = 0.01", g((0.005, 0.05), (1e-3, 0.03), 5, 6), g((0.01, 0.03), (3e-3, 0.01), 2, 2), None),
        recipe("skt", "skt", "bifurcation-point count of the fast-reaction SKT system", g((1e-5, 0.1), (1e-5, 0.1), 12, 12), g((1e-4, 0.1), (1e-4, 0.1), 4, 4), None),
    ]
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use super::*;

    #[test]
    fn every_problem_builds() {
        for id in PROBLEMS {
            let e = problem_evaluator(id, Effort::Quick).unwrap();
            assert_eq!(e.name(), *id);
            assert!(!e.label_set().is_empty());
        }
        assert!(matches!(problem_evaluator("nope", Effort::Quick), Err(Error::InvalidInput(_))));
        for r in recipes() {
            assert!(PROBLEMS.contains(&r.problem.as_str()), "{}", r.id);
            r.grid.validate().unwrap();
        }
    }

    #[test]
    fn closed_form_evaluators() {
        let e = problem_evaluator("root-count", Effort::Quick).unwrap();
        assert_eq!(e.evaluate(0.5, 0.5, 0).unwrap(), Cell::label("2"));
        assert_eq!(e.evaluate(0.5, 0.6, 0).unwrap(), Cell::label("0"));
        let e = problem_evaluator("pdmp-bdd", Effort::Quick).unwrap();
        assert_eq!(e.evaluate(0.5, 0.5, 0).unwrap(), Cell::label("1"));
        let e = problem_evaluator("clairaut", Effort::Quick).unwrap();
        assert_eq!(e.evaluate(0.5, 0.5, 0).unwrap(), Cell::NotDefined);
        assert_eq!(e.evaluate(0.5, 0.1, 0).unwrap(), Cell::label("+"));
    }
}
