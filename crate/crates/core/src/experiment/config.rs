//! Declarative experiment definitions, read from TOML.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use evalexpr::{ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Value};
use serde::{Deserialize, Serialize};

use crate::coeffs::CoefficientMode;
use crate::error::{Error, Result};
use crate::measures::{builtin_measure, PointCloudMeasure, ScenarioParams, SignedDensity, BUILTIN_MEASURES};
use crate::operators::{DiagonalRule, KernelChoice, Route, ZeroMode, DEFAULT_MATRIX_BUDGET};
use crate::spectral::DEFAULT_WINDOW;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Builtin measure the experiment runs on.
    pub scenario: String,
    #[serde(default)]
    pub seed: u64,
    /// Scenario parameters such as `atoms`, `depth` or `radius`.
    #[serde(default)]
    pub measure: BTreeMap<String, f64>,
    #[serde(default)]
    pub density: DensitySpec,
    pub operator: OperatorSpec,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    /// The density the scenario ships with.
    #[default]
    Scenario,
    Constant {
        value: f64,
    },
    /// `+1` on the closed upper half plane `y ≥ 0`, `−1` below.
    HalfSigned,
    /// Expression in `x`, `y`, `z` (or `x1 … xN`), e.g. `1 + 0.5 * x`.
    Expression {
        expr: String,
    },
    /// One value per atom, whitespace separated.
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub route: Route,
    /// Log-kernel choice; defaults to the pure log kernel.
    #[serde(default)]
    pub kernel: Option<KernelChoice>,
    /// Overrides `c_log`.
    #[serde(default)]
    pub log_coefficient: Option<f64>,
    #[serde(default = "cell_average")]
    pub diagonal_rule: DiagonalRule,
    /// Torus period `L` of the Fourier route.
    #[serde(default)]
    pub period: Option<f64>,
    /// Fourier cutoff `K`.
    #[serde(default)]
    pub cutoff: Option<usize>,
    #[serde(default = "drop_zero")]
    pub zero_mode: ZeroMode,
    #[serde(default = "default_budget")]
    pub budget: usize,
}

fn cell_average() -> DiagonalRule {
    DiagonalRule::CellAverage
}

fn drop_zero() -> ZeroMode {
    ZeroMode::Drop
}

fn default_budget() -> usize {
    DEFAULT_MATRIX_BUDGET
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    /// Relative plateau window `(f₁, f₂)`.
    #[serde(default = "default_window")]
    pub window: (f64, f64),
    /// Explicit 1-based plateau window; replaces `window` for verdicts.
    #[serde(default)]
    pub index_window: Option<(usize, usize)>,
    /// Coefficient convention the plateau verdict is checked against.
    #[serde(default = "calibrated")]
    pub mode: CoefficientMode,
    /// Relative tolerance of plateau against prediction, per sign.
    #[serde(default)]
    pub plateau_tolerance: Option<f64>,
    #[serde(default)]
    pub order_window: Option<(usize, usize)>,
    /// Upper limit for `sup/inf` of `k·λ_k` over `order_window`.
    #[serde(default)]
    pub order_ratio_max: Option<f64>,
    /// Absolute bound on the signed Dixmier estimate.
    #[serde(default)]
    pub dixmier_signed_max: Option<f64>,
    /// Relative agreement of Dixmier final and plateau, checked for
    /// nonnegative densities once the plateau dispersion is at most 5%.
    #[serde(default)]
    pub dixmier_agreement: Option<f64>,
    /// Re-solve with the cell size scaled by 0.95 and 1.05.
    #[serde(default = "yes")]
    pub sensitivity: bool,
    /// Ahlfors band and density bounds of the measure.
    #[serde(default = "yes")]
    pub diagnostics: bool,
}

fn default_window() -> (f64, f64) {
    DEFAULT_WINDOW
}

fn calibrated() -> CoefficientMode {
    CoefficientMode::Calibrated
}

fn yes() -> bool {
    true
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            index_window: None,
            mode: CoefficientMode::Calibrated,
            plateau_tolerance: None,
            order_window: None,
            order_ratio_max: None,
            dixmier_signed_max: None,
            dixmier_agreement: None,
            sensitivity: true,
            diagnostics: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub svg: bool,
}

fn invalid(param: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        param: param.into(),
        reason: reason.into(),
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config; relative density file paths are resolved against the
    /// config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)?;
        if let DensitySpec::File { path: p } = &mut config.density {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks everything that can be checked without building the measure.
    pub fn validate(&self) -> Result<()> {
        if !BUILTIN_MEASURES.contains(&self.scenario.as_str()) {
            return Err(Error::UnknownScenario(self.scenario.clone()));
        }
        let op = &self.operator;
        match op.route {
            Route::Fourier => {
                let period = op.period.ok_or_else(|| Error::Config("the fourier route needs `period`".into()))?;
                if !(period > 0.0) {
                    return Err(invalid("period", format!("must be positive, got {period}")));
                }
                op.cutoff.ok_or_else(|| Error::Config("the fourier route needs `cutoff`".into()))?;
            }
            Route::Steklov => {
                if op.cutoff.unwrap_or(0) == 0 {
                    return Err(Error::Config("the steklov route needs a positive `cutoff`".into()));
                }
            }
            Route::Logkernel | Route::Logpotential => {}
        }
        if let Some(c) = op.log_coefficient {
            if !(c > 0.0) {
                return Err(invalid("log_coefficient", format!("must be positive, got {c}")));
            }
        }
        let a = &self.analysis;
        let (f1, f2) = a.window;
        if !(0.0 <= f1 && f1 < f2 && f2 <= 1.0) {
            return Err(invalid("window", format!("need 0 <= f1 < f2 <= 1, got ({f1}, {f2})")));
        }
        for (name, w) in [("index_window", a.index_window), ("order_window", a.order_window)] {
            if let Some((lo, hi)) = w {
                if lo < 1 || lo > hi {
                    return Err(invalid(name, format!("need 1 <= start <= end, got [{lo}, {hi}]")));
                }
            }
        }
        if a.order_ratio_max.is_some() && a.order_window.is_none() {
            return Err(Error::Config("`order_ratio_max` needs `order_window`".into()));
        }
        for (name, t) in [
            ("plateau_tolerance", a.plateau_tolerance),
            ("order_ratio_max", a.order_ratio_max),
            ("dixmier_signed_max", a.dixmier_signed_max),
            ("dixmier_agreement", a.dixmier_agreement),
        ] {
            if let Some(t) = t {
                if !(t > 0.0) {
                    return Err(invalid(name, format!("must be positive, got {t}")));
                }
            }
        }
        if let DensitySpec::Expression { expr } = &self.density {
            evalexpr::build_operator_tree::<DefaultNumericTypes>(expr)
                .map_err(|e| invalid("density.expr", e.to_string()))?;
        }
        Ok(())
    }

    pub fn scenario_params(&self) -> ScenarioParams {
        ScenarioParams(self.measure.clone())
    }

    /// Builds the measure and resolves the density.
    pub fn build(&self) -> Result<(PointCloudMeasure, SignedDensity)> {
        let (measure, default) = builtin_measure(&self.scenario, &self.scenario_params())?;
        let density = resolve_density(&self.density, &measure, default)?;
        Ok((measure, density))
    }
}

fn resolve_density(spec: &DensitySpec, measure: &PointCloudMeasure, default: SignedDensity) -> Result<SignedDensity> {
    let n = measure.len();
    match spec {
        DensitySpec::Scenario => Ok(default),
        DensitySpec::Constant { value } => {
            if !value.is_finite() {
                return Err(invalid("density.value", "must be finite"));
            }
            Ok(SignedDensity::constant(n, *value))
        }
        DensitySpec::HalfSigned => {
            let axis = if measure.ambient_dim() >= 2 { 1 } else { 0 };
            SignedDensity::new(
                (0..n)
                    .map(|i| if measure.position(i)[axis] >= 0.0 { 1.0 } else { -1.0 })
                    .collect(),
            )
        }
        DensitySpec::Expression { expr } => {
            let tree = evalexpr::build_operator_tree::<DefaultNumericTypes>(expr)
                .map_err(|e| invalid("density.expr", e.to_string()))?;
            let names = ["x", "y", "z"];
            let mut values = Vec::with_capacity(n);
            for i in 0..n {
                let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
                for (a, &x) in measure.position(i).iter().enumerate() {
                    if let Some(name) = names.get(a) {
                        ctx.set_value(name.to_string(), Value::Float(x))
                            .map_err(|e| Error::Evaluation(e.to_string()))?;
                    }
                    ctx.set_value(format!("x{}", a + 1), Value::Float(x))
                        .map_err(|e| Error::Evaluation(e.to_string()))?;
                }
                let v = tree
                    .eval_number_with_context(&ctx)
                    .map_err(|e| Error::Evaluation(format!("atom {i}: {e}")))?;
                if !v.is_finite() {
                    return Err(Error::Evaluation(format!("atom {i}: non-finite value {v}")));
                }
                values.push(v);
            }
            SignedDensity::new(values)
        }
        DensitySpec::File { path } => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            let values = text
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| Error::Parse(format!("not a number: `{t}`"))))
                .collect::<Result<Vec<f64>>>()?;
            SignedDensity::for_measure(measure, values)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
scenario = "circle"
[measure]
atoms = 40
[operator]
route = "logkernel"
kernel = "bessel_exact_n2"
"#;

    #[test]
    fn parses_with_defaults() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.operator.kernel, Some(KernelChoice::BesselExactN2));
        assert_eq!(c.analysis.window, DEFAULT_WINDOW);
        assert_eq!(c.density, DensitySpec::Scenario);
        c.validate().unwrap();
        let again = ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn rejects_bad_configs() {
        let unknown = MINIMAL.replace("\"circle\"", "\"torus\"");
        assert!(matches!(
            ExperimentConfig::from_toml(&unknown).unwrap().validate(),
            Err(Error::UnknownScenario(_))
        ));
        assert!(ExperimentConfig::from_toml(&format!("{MINIMAL}\nbogus = 1")).is_err());
        let fourier = MINIMAL.replace("\"logkernel\"", "\"fourier\"");
        assert!(ExperimentConfig::from_toml(&fourier).unwrap().validate().unwrap_err().is_config());
        let window = format!("{MINIMAL}[analysis]\nwindow = [0.3, 0.2]\n");
        assert!(ExperimentConfig::from_toml(&window).unwrap().validate().is_err());
        let expr = format!("{MINIMAL}[density]\nkind = \"expression\"\nexpr = \"(1 + x\"\n");
        assert!(ExperimentConfig::from_toml(&expr).unwrap().validate().is_err());
    }

    #[test]
    fn densities_resolve() {
        let mut c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        c.density = DensitySpec::Expression {
            expr: "1 + x * y + math::cos(x1)".into(),
        };
        let (m, v) = c.build().unwrap();
        for i in 0..m.len() {
            let p = m.position(i);
            assert!((v.values()[i] - (1.0 + p[0] * p[1] + p[0].cos())).abs() < 1e-15);
        }
        c.density = DensitySpec::HalfSigned;
        let (m, v) = c.build().unwrap();
        for i in 0..m.len() {
            assert_eq!(v.values()[i] > 0.0, m.position(i)[1] >= 0.0);
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.txt");
        std::fs::write(&path, vec!["2.5"; 40].join("\n")).unwrap();
        c.density = DensitySpec::File { path: path.clone() };
        assert!(c.build().unwrap().1.values().iter().all(|x| *x == 2.5));
        std::fs::write(&path, "1 2 3").unwrap();
        assert!(matches!(c.build(), Err(Error::DensityLength { expected: 40, got: 3 })));
    }
}
