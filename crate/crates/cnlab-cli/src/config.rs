//! Run configuration: a single JSON document. Numeric fields accept decimal
//! strings so inputs survive beyond binary64 resolution.

use serde::{Deserialize, Serialize};

use cnlab::error::{Error, Result};
use cnlab::nikishin::{DensityFamily, GeneratingMeasure, Interval, NikishinSystem};
use cnlab::numerics::context::PrecisionContext;
use cnlab::numerics::poly::Polynomial;
use cnlab::numerics::real::MpReal;

/// A number that may arrive as a JSON number or a decimal string.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NumberOrString {
    Number(f64),
    Text(String),
}

impl NumberOrString {
    pub fn to_real(&self, prec: u32) -> Result<MpReal> {
        match self {
            NumberOrString::Number(v) => Ok(MpReal::from_f64(*v, prec)),
            NumberOrString::Text(s) => {
                MpReal::from_decimal_str(s, prec).map_err(Error::InvalidConfig)
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum DensitySpec {
    Uniform,
    Jacobi {
        alpha: NumberOrString,
        beta: NumberOrString,
    },
    JacobiTimesPolynomial {
        alpha: NumberOrString,
        beta: NumberOrString,
        /// ascending real coefficients of the modulation polynomial
        modulation: Vec<NumberOrString>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub interval: (NumberOrString, NumberOrString),
    pub density: DensitySpec,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridSpec {
    pub re: (NumberOrString, NumberOrString),
    pub im: (NumberOrString, NumberOrString),
    pub steps: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema_version: u32,
    pub generators: Vec<GeneratorSpec>,
    #[serde(default = "default_precision")]
    pub precision_bits: u32,
    #[serde(default = "default_max_degree")]
    pub max_degree: usize,
    #[serde(default)]
    pub permutation: Option<Vec<usize>>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default = "default_table_points")]
    pub table_points: usize,
    #[serde(default = "default_orthogonality_degree")]
    pub orthogonality_degree: usize,
}

fn default_precision() -> u32 {
    256
}

fn default_max_degree() -> usize {
    24
}

fn default_table_points() -> usize {
    256
}

fn default_orthogonality_degree() -> usize {
    8
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let p = self.generators.len();
        if p == 0 {
            return Err(Error::InvalidConfig("at least one generator required".into()));
        }
        if self.max_degree < 3 * p {
            return Err(Error::InvalidConfig(format!(
                "max_degree must be at least 3p = {}",
                3 * p
            )));
        }
        if let Some(perm) = &self.permutation {
            cnlab::mop::validate_permutation(p, perm)?;
        }
        if let Some(grid) = &self.grid {
            if grid.steps < 32 {
                return Err(Error::InvalidConfig("grid resolution must be >= 32".into()));
            }
        }
        Ok(())
    }

    pub fn context(&self) -> Result<PrecisionContext> {
        PrecisionContext::with_bits(self.precision_bits)
    }

    pub fn system(&self, ctx: &PrecisionContext) -> Result<NikishinSystem> {
        let prec = ctx.prec();
        let mut gens = Vec::with_capacity(self.generators.len());
        for g in &self.generators {
            let a = g.interval.0.to_real(prec)?;
            let b = g.interval.1.to_real(prec)?;
            let interval = Interval::new(a, b)?;
            let family = match &g.density {
                DensitySpec::Uniform => DensityFamily::Uniform,
                DensitySpec::Jacobi { alpha, beta } => DensityFamily::Jacobi {
                    alpha: alpha.to_real(prec)?,
                    beta: beta.to_real(prec)?,
                },
                DensitySpec::JacobiTimesPolynomial { alpha, beta, modulation } => {
                    let coeffs = modulation
                        .iter()
                        .map(|c| c.to_real(prec))
                        .collect::<Result<Vec<_>>>()?;
                    DensityFamily::JacobiTimesPolynomial {
                        alpha: alpha.to_real(prec)?,
                        beta: beta.to_real(prec)?,
                        modulation: Polynomial::from_real_coeffs(coeffs),
                    }
                }
            };
            gens.push(GeneratingMeasure { interval, family });
        }
        NikishinSystem::new(gens, ctx)
    }

    pub fn permutation_or_identity(&self) -> Vec<usize> {
        self.permutation
            .clone()
            .unwrap_or_else(|| (1..=self.generators.len()).collect())
    }

    pub fn preset(name: &str) -> Result<RunConfig> {
        let uniform = |a: f64, b: f64| GeneratorSpec {
            interval: (
                NumberOrString::Text(format!("{a}")),
                NumberOrString::Text(format!("{b}")),
            ),
            density: DensitySpec::Uniform,
        };
        let jacobi_half = |a: f64, b: f64| GeneratorSpec {
            interval: (
                NumberOrString::Text(format!("{a}")),
                NumberOrString::Text(format!("{b}")),
            ),
            density: DensitySpec::Jacobi {
                alpha: NumberOrString::Text("0.5".into()),
                beta: NumberOrString::Text("0.5".into()),
            },
        };
        let generators = match name {
            "p1" => vec![uniform(-2.0, 2.0)],
            "p2" => vec![uniform(-1.0, 0.0), uniform(0.5, 1.5)],
            "p2-jacobi" => vec![jacobi_half(-1.0, 0.0), jacobi_half(0.5, 1.5)],
            "p3" => vec![uniform(-1.0, 0.0), uniform(0.5, 1.5), uniform(2.0, 3.0)],
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown preset {other:?} (expected p1, p2, p2-jacobi, p3)"
                )))
            }
        };
        Ok(RunConfig {
            schema_version: 1,
            generators,
            precision_bits: 256,
            max_degree: 24,
            permutation: None,
            grid: Some(GridSpec {
                re: (
                    NumberOrString::Number(-3.0),
                    NumberOrString::Number(4.0),
                ),
                im: (
                    NumberOrString::Number(-1.5),
                    NumberOrString::Number(1.5),
                ),
                steps: 96,
            }),
            table_points: 256,
            orthogonality_degree: 8,
        })
    }
}
