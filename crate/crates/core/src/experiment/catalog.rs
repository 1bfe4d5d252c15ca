//! Builtin experiments, one per checked statement.

use std::collections::BTreeMap;

use crate::operators::{DiagonalRule, KernelChoice, Route, ZeroMode, DEFAULT_MATRIX_BUDGET};

use super::config::{AnalysisSpec, DensitySpec, ExperimentConfig, OperatorSpec, OutputSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpectedVerdict {
    Pass,
    /// Known to miss its tolerance at the configured resolution.
    Fail,
}

impl ExpectedVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            ExpectedVerdict::Pass => "pass",
            ExpectedVerdict::Fail => "fail",
        }
    }
}

pub struct ScenarioEntry {
    pub id: &'static str,
    pub description: &'static str,
    /// The result the scenario tests.
    pub reference: &'static str,
    pub expected: ExpectedVerdict,
    build: fn() -> ExperimentConfig,
}

impl ScenarioEntry {
    pub fn config(&self) -> ExperimentConfig {
        (self.build)()
    }
}

fn op(route: Route) -> OperatorSpec {
    OperatorSpec {
        route,
        kernel: None,
        log_coefficient: None,
        diagonal_rule: DiagonalRule::CellAverage,
        period: None,
        cutoff: None,
        zero_mode: ZeroMode::Drop,
        budget: DEFAULT_MATRIX_BUDGET,
    }
}

fn bessel() -> OperatorSpec {
    OperatorSpec {
        kernel: Some(KernelChoice::BesselExactN2),
        ..op(Route::Logkernel)
    }
}

fn fourier(period: f64, cutoff: usize) -> OperatorSpec {
    OperatorSpec {
        period: Some(period),
        cutoff: Some(cutoff),
        ..op(Route::Fourier)
    }
}

fn steklov(cutoff: usize, zero_mode: ZeroMode) -> OperatorSpec {
    OperatorSpec {
        cutoff: Some(cutoff),
        zero_mode,
        ..op(Route::Steklov)
    }
}

fn config(scenario: &str, params: &[(&str, f64)], operator: OperatorSpec, analysis: AnalysisSpec) -> ExperimentConfig {
    ExperimentConfig {
        scenario: scenario.into(),
        seed: 0,
        measure: params.iter().map(|(k, v)| (k.to_string(), *v)).collect::<BTreeMap<_, _>>(),
        density: DensitySpec::Scenario,
        operator,
        analysis,
        output: OutputSpec::default(),
    }
}

fn plateau(tol: f64) -> AnalysisSpec {
    AnalysisSpec {
        plateau_tolerance: Some(tol),
        ..AnalysisSpec::default()
    }
}

fn order(window: (usize, usize), max: f64) -> AnalysisSpec {
    AnalysisSpec {
        order_window: Some(window),
        order_ratio_max: Some(max),
        sensitivity: false,
        ..AnalysisSpec::default()
    }
}

pub const SCENARIOS: &[ScenarioEntry] = &[
    ScenarioEntry {
        id: "circle",
        description: "unit circle, V = 1, Bessel log kernel, 2000 atoms, plateau over k in [100, 500]",
        reference: "Weyl asymptotics for Lipschitz curves",
        expected: ExpectedVerdict::Pass,
        build: || {
            config(
                "circle",
                &[("atoms", 2000.0)],
                bessel(),
                AnalysisSpec {
                    index_window: Some((100, 500)),
                    dixmier_agreement: Some(0.10),
                    ..plateau(0.05)
                },
            )
        },
    },
    ScenarioEntry {
        id: "circle_fourier",
        description: "unit circle, V = 1, torus Fourier route L = 8, K = 40",
        reference: "equality of the nonzero spectra of K*K and KK*",
        expected: ExpectedVerdict::Fail,
        build: || {
            config(
                "circle",
                &[("atoms", 2000.0)],
                fourier(8.0, 40),
                AnalysisSpec {
                    sensitivity: false,
                    ..plateau(0.08)
                },
            )
        },
    },
    ScenarioEntry {
        id: "segment",
        description: "unit segment, V = 1, Bessel log kernel, 2000 atoms",
        reference: "Weyl asymptotics for Lipschitz curves",
        expected: ExpectedVerdict::Pass,
        build: || config("segment", &[("atoms", 2000.0)], bessel(), plateau(0.10)),
    },
    ScenarioEntry {
        id: "two_circles",
        description: "disjoint circles of radii 1 and 0.5 with gap 1, Bessel log kernel, 2000 atoms",
        reference: "additivity of asymptotic coefficients over separated supports",
        expected: ExpectedVerdict::Pass,
        build: || config("two_circles", &[("atoms", 2000.0)], bessel(), plateau(0.10)),
    },
    ScenarioEntry {
        id: "half_signed_circle",
        description: "unit circle with V = +1 on the upper half and -1 on the lower half, Bessel log kernel",
        reference: "separate asymptotics of positive and negative eigenvalues",
        expected: ExpectedVerdict::Pass,
        build: || {
            config(
                "half_signed_circle",
                &[("atoms", 2000.0)],
                bessel(),
                AnalysisSpec {
                    dixmier_signed_max: Some(0.1),
                    ..plateau(0.12)
                },
            )
        },
    },
    ScenarioEntry {
        id: "circle_plus_square",
        description: "unit circle plus a unit-area square in the plane, torus Fourier route K = 40",
        reference: "asymptotics for unions of sets of different dimensions",
        expected: ExpectedVerdict::Fail,
        build: || {
            config(
                "circle_plus_square",
                &[("atoms", 1000.0)],
                fourier(8.0, 40),
                AnalysisSpec {
                    sensitivity: false,
                    ..plateau(0.12)
                },
            )
        },
    },
    ScenarioEntry {
        id: "cantor",
        description: "middle-third Cantor measure at depth 9 on a segment, pure log kernel",
        reference: "two-sided eigenvalue order estimate for Ahlfors regular measures",
        expected: ExpectedVerdict::Pass,
        build: || config("cantor_line", &[("depth", 9.0)], op(Route::Logkernel), order((20, 400), 10.0)),
    },
    ScenarioEntry {
        id: "sierpinski",
        description: "Sierpinski gasket measure at depth 7, pure log kernel",
        reference: "two-sided eigenvalue order estimate for Ahlfors regular measures",
        expected: ExpectedVerdict::Pass,
        build: || config("sierpinski", &[("depth", 7.0)], op(Route::Logkernel), order((20, 400), 10.0)),
    },
    ScenarioEntry {
        id: "steklov_circle",
        description: "Steklov form on the unit circle with Lebesgue angle measure, K = 200",
        reference: "eigenvalue estimates for the weighted Steklov problem",
        expected: ExpectedVerdict::Pass,
        build: || config("circle", &[("atoms", 1024.0)], steklov(200, ZeroMode::Drop), plateau(0.02)),
    },
    ScenarioEntry {
        id: "steklov_cantor",
        description: "Steklov form with Cantor angle measure at depth 12, K = 2048",
        reference: "eigenvalue estimates for the weighted Steklov problem",
        expected: ExpectedVerdict::Pass,
        build: || config("steklov_cantor", &[("depth", 12.0)], steklov(2048, ZeroMode::Drop), order((20, 300), 10.0)),
    },
    ScenarioEntry {
        id: "sphere",
        description: "unit 2-sphere in space, pure log kernel, 3000 atoms",
        reference: "Weyl asymptotics for Lipschitz surfaces",
        expected: ExpectedVerdict::Pass,
        build: || config("sphere", &[("atoms", 3000.0)], op(Route::Logkernel), plateau(0.15)),
    },
];

pub fn find_scenario(id: &str) -> Option<&'static ScenarioEntry> {
    SCENARIOS.iter().find(|s| s.id == id)
}
