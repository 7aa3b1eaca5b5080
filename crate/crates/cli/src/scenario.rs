//! Scenario configuration: the JSON schema, validation, and the built-in
//! two-level preset.
//!
//! A scenario fixes the model (Hamiltonian, jump operators, bath rates),
//! the initial state, and the integration grid. Rates come either as an
//! explicit γ(ω) table or through the thermal-bath shorthand
//! (γ₀, ω₀, N): γ₋ = γ₀ω₀(N+1) at ω = +ω₀, γ₊ = γ₀ω₀N at ω = −ω₀, and
//! βω₀ = ln(γ₋/γ₊) = ln((N+1)/N).
//!
//! Complex matrices are stored as paired real/imaginary row-major arrays;
//! the imaginary part may be omitted in hand-written files and is
//! normalized to zeros on load, so serialize → load → serialize is
//! byte-identical.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use qsl_core::gksl::{JumpOperator, LindbladModel, ModelError, RateEntry};
use qsl_core::operator::{HermitianOperator, OperatorError, SpectralState, C64};

/// Default CSV sampling stride: every 10th integration step.
pub const DEFAULT_STRIDE: usize = 10;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed scenario file: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("{field}: matrix rows have inconsistent lengths or the matrix is not square")]
    BadMatrixShape { field: String },
    #[error("{field}: real and imaginary parts have different shapes")]
    MismatchedParts { field: String },
    #[error("hamiltonian: not Hermitian ({source})")]
    NonHermitianHamiltonian { source: OperatorError },
    #[error("initial_state: not a valid density matrix ({source})")]
    InvalidState { source: OperatorError },
    #[error("detailed balance violated: {source}")]
    DetailedBalance { source: ModelError },
    #[error("model construction failed: {source}")]
    Model { source: ModelError },
    #[error("bath: gamma0, omega0 and occupation must be positive finite numbers")]
    InvalidBath,
    #[error("bath shorthand covers only the ±ω₀ transition, but channel {channel} resolves a component at ω = {frequency}; use explicit rates")]
    BathShorthandScope { channel: usize, frequency: f64 },
    #[error("exactly one of `bath` or explicit `rates` with `beta` must be given")]
    AmbiguousRates,
    #[error("beta: required when no bath shorthand is given")]
    MissingBeta,
    #[error("t_span/dt: need t1 > t0 and dt > 0, got span ({t0}, {t1}) with dt = {dt}")]
    InvalidGrid { t0: f64, t1: f64, dt: f64 },
    #[error("stride must be ≥ 1")]
    InvalidStride,
}

/// Complex matrix as paired row-major real/imaginary arrays. `im` may be
/// omitted in input files (it defaults to zeros).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrixSpec {
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Vec<Vec<f64>>,
}

impl ComplexMatrixSpec {
    pub fn from_matrix(m: &DMatrix<C64>) -> Self {
        let rows = m.nrows();
        let cols = m.ncols();
        let row = |part: fn(&C64) -> f64| {
            (0..rows)
                .map(|i| (0..cols).map(|j| part(&m[(i, j)])).collect())
                .collect()
        };
        Self {
            re: row(|z| z.re),
            im: row(|z| z.im),
        }
    }

    /// Fill an omitted imaginary part with zeros matching `re`.
    fn normalize(&mut self) {
        if self.im.is_empty() {
            self.im = self.re.iter().map(|r| vec![0.0; r.len()]).collect();
        }
    }

    fn to_matrix(&self, field: &str) -> Result<DMatrix<C64>, ScenarioError> {
        let n = self.re.len();
        if n == 0 || self.re.iter().any(|r| r.len() != n) {
            return Err(ScenarioError::BadMatrixShape {
                field: field.to_string(),
            });
        }
        if self.im.len() != n || self.im.iter().any(|r| r.len() != n) {
            return Err(ScenarioError::MismatchedParts {
                field: field.to_string(),
            });
        }
        Ok(DMatrix::from_fn(n, n, |i, j| {
            C64::new(self.re[i][j], self.im[i][j])
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpSpec {
    pub label: String,
    pub matrix: ComplexMatrixSpec,
}

/// Thermal-bath shorthand (γ₀, ω₀, N).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    pub gamma0: f64,
    pub omega0: f64,
    pub occupation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSpec {
    pub channel: usize,
    pub frequency: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub hamiltonian: ComplexMatrixSpec,
    pub jumps: Vec<JumpSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bath: Option<BathSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rates: Vec<RateSpec>,
    pub initial_state: ComplexMatrixSpec,
    pub t_span: (f64, f64),
    pub dt: f64,
    #[serde(default = "default_stride")]
    pub stride: usize,
}

fn default_stride() -> usize {
    DEFAULT_STRIDE
}

/// The built-in two-level scenario: H = σ_z/2 (ω₀ = 1), decay channel σ₋
/// under a thermal bath with γ₀ = 0.5 and N(ω₀) = 3 (so γ₋ = 2.0,
/// γ₊ = 1.5, βω₀ = ln(4/3) ≈ 0.288), and a partially coherent initial
/// state with eigenvalues (0.8, 0.2).
pub fn preset_two_level() -> Scenario {
    Scenario {
        hamiltonian: ComplexMatrixSpec {
            re: vec![vec![0.5, 0.0], vec![0.0, -0.5]],
            im: vec![vec![0.0, 0.0], vec![0.0, 0.0]],
        },
        jumps: vec![JumpSpec {
            label: "decay".to_string(),
            matrix: ComplexMatrixSpec {
                re: vec![vec![0.0, 0.0], vec![1.0, 0.0]],
                im: vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            },
        }],
        bath: Some(BathSpec {
            gamma0: 0.5,
            omega0: 1.0,
            occupation: 3.0,
        }),
        beta: None,
        rates: Vec::new(),
        initial_state: ComplexMatrixSpec {
            re: vec![vec![0.7, 0.2], vec![0.2, 0.3]],
            im: vec![vec![0.0, 0.1], vec![-0.1, 0.0]],
        },
        t_span: (0.0, 5.0),
        dt: 1e-3,
        stride: DEFAULT_STRIDE,
    }
}

/// A validated scenario, ready to integrate.
#[derive(Debug, Clone)]
pub struct BuiltScenario {
    pub model: LindbladModel,
    pub initial_state: SpectralState,
    pub t_span: (f64, f64),
    pub dt: f64,
    pub stride: usize,
}

impl Scenario {
    /// Validate every field and construct the model and initial state.
    pub fn build(&self) -> Result<BuiltScenario, ScenarioError> {
        let h_matrix = self.hamiltonian.to_matrix("hamiltonian")?;
        let hamiltonian = HermitianOperator::new(h_matrix)
            .map_err(|source| ScenarioError::NonHermitianHamiltonian { source })?;

        let mut jumps = Vec::with_capacity(self.jumps.len());
        for (k, j) in self.jumps.iter().enumerate() {
            let m = j.matrix.to_matrix(&format!("jumps[{k}].matrix"))?;
            jumps.push(JumpOperator::new(j.label.clone(), m));
        }

        let (beta, rates) = self.resolve_rates(&jumps)?;

        let model = LindbladModel::new(hamiltonian, jumps, &rates, beta).map_err(|e| match e {
            ModelError::DetailedBalance { .. } => ScenarioError::DetailedBalance { source: e },
            other => ScenarioError::Model { source: other },
        })?;

        if self.bath.is_some() {
            // The shorthand must cover every resolved component; anything
            // outside ±ω₀ would silently get a zero rate.
            if let Some(r) = model.resolved_jumps().iter().find(|r| r.rate == 0.0) {
                return Err(ScenarioError::BathShorthandScope {
                    channel: r.channel,
                    frequency: r.frequency,
                });
            }
        }

        let rho = self.initial_state.to_matrix("initial_state")?;
        let initial_state = SpectralState::from_matrix(rho)
            .map_err(|source| ScenarioError::InvalidState { source })?;

        let (t0, t1) = self.t_span;
        if !(self.dt.is_finite() && self.dt > 0.0) || !(t1 - t0).is_finite() || t1 <= t0 {
            return Err(ScenarioError::InvalidGrid {
                t0,
                t1,
                dt: self.dt,
            });
        }
        if self.stride == 0 {
            return Err(ScenarioError::InvalidStride);
        }

        Ok(BuiltScenario {
            model,
            initial_state,
            t_span: self.t_span,
            dt: self.dt,
            stride: self.stride,
        })
    }

    fn resolve_rates(&self, jumps: &[JumpOperator]) -> Result<(f64, Vec<RateEntry>), ScenarioError> {
        match (&self.bath, self.beta, self.rates.is_empty()) {
            (Some(bath), None, true) => {
                if !(bath.gamma0 > 0.0 && bath.omega0 > 0.0 && bath.occupation > 0.0)
                    || !(bath.gamma0.is_finite()
                        && bath.omega0.is_finite()
                        && bath.occupation.is_finite())
                {
                    return Err(ScenarioError::InvalidBath);
                }
                let beta = ((bath.occupation + 1.0) / bath.occupation).ln() / bath.omega0;
                let down = bath.gamma0 * bath.omega0 * (bath.occupation + 1.0);
                let up = bath.gamma0 * bath.omega0 * bath.occupation;
                let mut rates = Vec::with_capacity(2 * jumps.len());
                for channel in 0..jumps.len() {
                    rates.push(RateEntry {
                        channel,
                        frequency: bath.omega0,
                        rate: down,
                    });
                    rates.push(RateEntry {
                        channel,
                        frequency: -bath.omega0,
                        rate: up,
                    });
                }
                Ok((beta, rates))
            }
            (None, Some(beta), _) => {
                let rates = self
                    .rates
                    .iter()
                    .map(|r| RateEntry {
                        channel: r.channel,
                        frequency: r.frequency,
                        rate: r.rate,
                    })
                    .collect();
                Ok((beta, rates))
            }
            (None, None, _) => Err(ScenarioError::MissingBeta),
            _ => Err(ScenarioError::AmbiguousRates),
        }
    }

    /// Deterministic pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<(), ScenarioError> {
        fs::write(path, self.to_json()).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Load and normalize a scenario file (the file is not yet validated as a
/// model; call [`Scenario::build`] for that).
pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut scenario: Scenario = serde_json::from_str(&text)?;
    scenario.hamiltonian.normalize();
    scenario.initial_state.normalize();
    for j in &mut scenario.jumps {
        j.matrix.normalize();
    }
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn preset_golden_values() {
        let built = preset_two_level().build().unwrap();
        // βω₀ = ln(4/3) = 0.288 to three decimals.
        assert!((built.model.beta() - 0.288).abs() < 5e-4);
        // Initial-state eigenvalues (0.8, 0.2).
        let p = built.initial_state.populations();
        assert_abs_diff_eq!(p[0], 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.2, epsilon = 1e-12);
        // Detailed balance of the expanded rates: γ₊/γ₋ = e^(−βω₀) = 0.75.
        let up = built
            .model
            .resolved_jumps()
            .iter()
            .find(|r| r.frequency < 0.0)
            .unwrap()
            .rate;
        let down = built
            .model
            .resolved_jumps()
            .iter()
            .find(|r| r.frequency > 0.0)
            .unwrap()
            .rate;
        assert_abs_diff_eq!(down, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(up, 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(up / down, (-built.model.beta()).exp(), epsilon = 1e-12);
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scenario.json");
        let scenario = preset_two_level();
        scenario.save(&path).unwrap();
        let loaded = load_scenario(&path).unwrap();
        assert_eq!(loaded, scenario);
        assert_eq!(loaded.to_json(), scenario.to_json());
        let again = dir.path().join("again.json");
        loaded.save(&again).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&again).unwrap());
    }

    #[test]
    fn omitted_imaginary_part_defaults_to_zero() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scenario.json");
        fs::write(
            &path,
            r#"{
              "hamiltonian": {"re": [[0.5, 0.0], [0.0, -0.5]]},
              "jumps": [{"label": "decay", "matrix": {"re": [[0.0, 0.0], [1.0, 0.0]]}}],
              "bath": {"gamma0": 0.5, "omega0": 1.0, "occupation": 3.0},
              "initial_state": {"re": [[0.6, 0.0], [0.0, 0.4]]},
              "t_span": [0.0, 1.0],
              "dt": 0.001
            }"#,
        )
        .unwrap();
        let scenario = load_scenario(&path).unwrap();
        assert_eq!(scenario.stride, DEFAULT_STRIDE);
        scenario.build().unwrap();
    }

    #[test]
    fn forced_detailed_balance_violation_is_distinct() {
        let mut scenario = preset_two_level();
        scenario.bath = None;
        scenario.beta = Some(0.288);
        scenario.rates = vec![
            RateSpec { channel: 0, frequency: 1.0, rate: 1.0 },
            RateSpec { channel: 0, frequency: -1.0, rate: 1.0 },
        ];
        match scenario.build() {
            Err(ScenarioError::DetailedBalance { .. }) => {}
            other => panic!("expected detailed-balance error, got {other:?}"),
        }
    }

    #[test]
    fn short_trace_state_is_rejected() {
        let mut scenario = preset_two_level();
        scenario.initial_state = ComplexMatrixSpec {
            re: vec![vec![0.6, 0.0], vec![0.0, 0.3]],
            im: vec![vec![0.0, 0.0], vec![0.0, 0.0]],
        };
        match scenario.build() {
            Err(ScenarioError::InvalidState { .. }) => {}
            other => panic!("expected invalid-state error, got {other:?}"),
        }
    }

    #[test]
    fn non_hermitian_hamiltonian_is_rejected() {
        let mut scenario = preset_two_level();
        scenario.hamiltonian.re = vec![vec![0.5, 1.0], vec![0.0, -0.5]];
        match scenario.build() {
            Err(ScenarioError::NonHermitianHamiltonian { .. }) => {}
            other => panic!("expected non-Hermitian error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_file_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        fs::write(&path, "{ not json").unwrap();
        assert!(matches!(
            load_scenario(&path),
            Err(ScenarioError::Malformed(_))
        ));
    }

    #[test]
    fn bath_with_explicit_rates_is_ambiguous() {
        let mut scenario = preset_two_level();
        scenario.rates = vec![RateSpec { channel: 0, frequency: 1.0, rate: 2.0 }];
        assert!(matches!(
            scenario.build(),
            Err(ScenarioError::AmbiguousRates)
        ));
    }

    #[test]
    fn bath_shorthand_rejects_uncovered_transitions() {
        // A three-level ladder has gaps the ±ω₀ shorthand cannot cover.
        let mut scenario = preset_two_level();
        scenario.hamiltonian = ComplexMatrixSpec {
            re: vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 0.0, 0.0],
                vec![0.0, 0.0, -1.0],
            ],
            im: vec![vec![0.0; 3]; 3],
        };
        scenario.jumps[0].matrix = ComplexMatrixSpec {
            re: vec![
                vec![0.0, 0.0, 1.0],
                vec![0.0, 0.0, 0.0],
                vec![1.0, 0.0, 0.0],
            ],
            im: vec![vec![0.0; 3]; 3],
        };
        scenario.initial_state = ComplexMatrixSpec {
            re: vec![
                vec![0.5, 0.0, 0.0],
                vec![0.0, 0.3, 0.0],
                vec![0.0, 0.0, 0.2],
            ],
            im: vec![vec![0.0; 3]; 3],
        };
        match scenario.build() {
            Err(ScenarioError::BathShorthandScope { .. }) => {}
            other => panic!("expected bath-scope error, got {other:?}"),
        }
    }
}
