use serde::Serialize;

use cartan_core::calculus::{FD_STEP, OUTER_STEP, RK4_MAX_DT};
use cartan_core::connection::MULTIPLICATIVE_TOL;
use cartan_core::curvature::{CURVATURE_STEP, GRID_SPACING, SECTION_BRACKET_STEP};

use crate::config::{Format, ModelSpec};
use crate::error::LabResult;
use crate::registry::VERIFY_SAMPLES;

/// Which side of the tolerance a passing value lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    /// Pass iff `max_error ≤ tolerance`.
    Upper,
    /// Pass iff `max_error ≥ tolerance`.
    Lower,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub samples: usize,
    /// Worst value observed; `null` in JSON when a numerical failure
    /// prevented a value.
    pub max_error: f64,
    pub tolerance: f64,
    pub bound: Bound,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    pub fn new(name: &str, samples: usize, value: f64, tolerance: f64, bound: Bound) -> Self {
        let pass = match bound {
            Bound::Upper => value <= tolerance,
            Bound::Lower => value >= tolerance,
        };
        Self { name: name.into(), samples, max_error: value, tolerance, bound, pass, detail: None }
    }

    pub fn failed(name: &str, samples: usize, tolerance: f64, bound: Bound, detail: String) -> Self {
        Self { name: name.into(), samples, max_error: f64::NAN, tolerance, bound, pass: false, detail: Some(detail) }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

/// Numerical settings that determine the report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fingerprint {
    pub fd_step: f64,
    pub outer_step: f64,
    pub rk4_max_dt: f64,
    pub curvature_step: f64,
    pub grid_spacing: f64,
    pub section_bracket_step: f64,
    pub multiplicative_tolerance: f64,
    pub verify_samples: usize,
    pub jacobians: &'static str,
    pub prng: &'static str,
    pub version: &'static str,
}

impl Fingerprint {
    pub fn current() -> Self {
        Self {
            fd_step: FD_STEP,
            outer_step: OUTER_STEP,
            rk4_max_dt: RK4_MAX_DT,
            curvature_step: CURVATURE_STEP,
            grid_spacing: GRID_SPACING,
            section_bracket_step: SECTION_BRACKET_STEP,
            multiplicative_tolerance: MULTIPLICATIVE_TOL,
            verify_samples: VERIFY_SAMPLES,
            jacobians: "finite-difference",
            prng: "ChaCha8, seeded from the run seed, one stream per check",
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub experiment: String,
    pub model: ModelSpec,
    pub seed: u64,
    pub sample_count: usize,
    pub checks: Vec<Check>,
    pub fingerprint: Fingerprint,
    pub verdict: Verdict,
}

impl Report {
    pub fn new(experiment: &str, model: ModelSpec, seed: u64, sample_count: usize, checks: Vec<Check>) -> Self {
        let ok = !checks.is_empty() && checks.iter().all(|c| c.pass);
        Self {
            experiment: experiment.into(),
            model,
            seed,
            sample_count,
            checks,
            fingerprint: Fingerprint::current(),
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> LabResult<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// One row per check.
    pub fn to_csv(&self) -> LabResult<String> {
        #[derive(Serialize)]
        struct Row<'a> {
            experiment: &'a str,
            model: &'a str,
            seed: u64,
            check: &'a str,
            samples: usize,
            max_error: f64,
            tolerance: f64,
            bound: Bound,
            pass: bool,
            detail: &'a str,
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        for c in &self.checks {
            w.serialize(Row {
                experiment: &self.experiment,
                model: &self.model.name,
                seed: self.seed,
                check: &c.name,
                samples: c.samples,
                max_error: c.max_error,
                tolerance: c.tolerance,
                bound: c.bound,
                pass: c.pass,
                detail: c.detail.as_deref().unwrap_or(""),
            })?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn render(&self, format: Format) -> LabResult<String> {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }

    pub fn file_name(&self, format: Format) -> String {
        format!("{}-{}-{}.{}", self.experiment, self.model.name, self.seed, format.extension())
    }
}
