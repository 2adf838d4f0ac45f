//! The acceptance suite: one line per criterion, nonzero exit if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use cartan_lab::{run, ExperimentConfig, Format, ModelSpec, Report};

/// Wall-clock budget for each criterion.
const BUDGET: Duration = Duration::from_secs(60);

const ARITHMETIC_ZOO: [&str; 4] = ["pair-R2", "se2-action", "se2-so2", "isojet-sphere"];
const FULL_ZOO: [&str; 9] = [
    "pair-R2",
    "translation-R2",
    "se2-action",
    "so3-sphere",
    "se2-so2",
    "isojet-euclidean",
    "isojet-sphere",
    "isojet-hyperbolic",
    "isojet-perturbed",
];

type Outcome = Result<(), Vec<String>>;

struct Audit {
    failures: Vec<String>,
}

impl Audit {
    fn new() -> Self {
        Self { failures: Vec::new() }
    }

    fn run(&mut self, cfg: ExperimentConfig) -> Option<Report> {
        match run(&cfg) {
            Ok(r) => Some(r),
            Err(e) => {
                self.failures.push(format!("{} on {}: {e}", cfg.experiment, cfg.model.name));
                None
            }
        }
    }

    /// The whole report passes and contains every named check.
    fn passes(&mut self, r: &Report, required: &[&str]) {
        for c in r.checks.iter().filter(|c| !c.pass) {
            self.failures.push(format!(
                "{} on {}: {} = {:e} (tolerance {:e}){}",
                r.experiment,
                r.model.name,
                c.name,
                c.max_error,
                c.tolerance,
                c.detail.as_deref().map(|d| format!(", {d}")).unwrap_or_default()
            ));
        }
        for name in required {
            if r.check(name).is_none() {
                self.failures.push(format!("{} on {}: check {name} missing", r.experiment, r.model.name));
            }
        }
    }

    /// The named check's value is within its upper tolerance.
    fn within(&mut self, r: &Report, name: &str) {
        match r.check(name) {
            Some(c) if c.max_error <= c.tolerance => {}
            Some(c) => self.failures.push(format!("{} on {}: {name} = {:e}", r.experiment, r.model.name, c.max_error)),
            None => self.failures.push(format!("{} on {}: check {name} missing", r.experiment, r.model.name)),
        }
    }

    fn outcome(self) -> Outcome {
        if self.failures.is_empty() {
            Ok(())
        } else {
            Err(self.failures)
        }
    }
}

fn cfg(experiment: &str, model: &str) -> ExperimentConfig {
    ExperimentConfig::new(experiment, ModelSpec::named(model))
}

fn jet_arithmetic() -> Outcome {
    let mut a = Audit::new();
    for model in ARITHMETIC_ZOO {
        if let Some(r) = a.run(cfg("jet-axioms", model).with_samples(200)) {
            a.passes(&r, &["jet-product", "right-kernel-product", "decompose-assemble"]);
        }
        if let Some(r) = a.run(cfg("inversion", model).with_samples(200)) {
            a.passes(&r, &["jet-inverse"]);
        }
    }
    a.outcome()
}

fn product_identities() -> Outcome {
    let mut a = Audit::new();
    for model in ARITHMETIC_ZOO {
        if let Some(r) = a.run(cfg("kernel-products", model).with_samples(200)) {
            a.passes(&r, &["right-product", "left-product", "quotient", "conjugation", "difference"]);
        }
        if let Some(r) = a.run(cfg("semidirect", model).with_samples(200)) {
            a.passes(&r, &["vee-morphism", "kernel-group", "splitting", "bisection-law"]);
        }
    }
    a.outcome()
}

fn derivative_routes() -> Outcome {
    let mut a = Audit::new();
    for model in FULL_ZOO {
        if let Some(r) = a.run(cfg("nabla-compare", model).with_samples(100)) {
            a.passes(&r, &["flow-vs-transport"]);
        }
    }
    a.outcome()
}

fn flatness() -> Outcome {
    let mut a = Audit::new();
    for model in ["translation-R2", "se2-action", "so3-sphere", "isojet-euclidean", "isojet-sphere"] {
        if let Some(r) = a.run(cfg("flatness", model)) {
            a.passes(&r, &["curvature", "torsion"]);
        }
    }
    if let Some(r) = a.run(cfg("flatness", "isojet-perturbed")) {
        a.passes(&r, &["curved-fraction", "gauss-gradient"]);
    }
    a.outcome()
}

fn reconstruction() -> Outcome {
    let mut a = Audit::new();
    for model in ["translation-R2", "se2-action", "so3-sphere", "se2-so2", "isojet-euclidean", "isojet-sphere", "isojet-hyperbolic"] {
        if let Some(r) = a.run(cfg("reconstruct", model)) {
            a.passes(&r, &["holonomy", "dimension", "jacobi", "homomorphism", "parallelism"]);
            if model.starts_with("isojet") {
                let dim = r.check("dimension").and_then(|c| c.detail.clone()).unwrap_or_default();
                if !dim.contains("dimension 3") {
                    a.failures.push(format!("reconstruct on {model}: expected a 3-dimensional algebra, {dim}"));
                }
            }
        }
    }
    a.outcome()
}

fn round_trips() -> Outcome {
    let mut a = Audit::new();
    if let Some(r) = a.run(cfg("classical-bridge", "se2-so2")) {
        a.passes(&r, &["connection-roundtrip", "omega-roundtrip", "nabla-agreement"]);
    }
    for model in ["se2-action", "isojet-sphere"] {
        if let Some(r) = a.run(cfg("classical-bridge", model)) {
            a.passes(&r, &["connection-roundtrip"]);
        }
    }
    a.outcome()
}

fn classical_curvature() -> Outcome {
    let mut a = Audit::new();
    if let Some(r) = a.run(cfg("classical-bridge", "se2-so2")) {
        a.passes(&r, &["structure-curvature", "flat-implies-parallel"]);
        a.within(&r, "structure-curvature");
        a.within(&r, "flat-implies-parallel");
    }
    let foreign = ModelSpec { bracket: Some("so3".into()), ..ModelSpec::named("se2-so2") };
    if let Some(r) = a.run(ExperimentConfig::new("classical-bridge", foreign)) {
        a.passes(&r, &["flat-implies-parallel"]);
        a.within(&r, "flat-implies-parallel");
    }
    a.outcome()
}

fn determinism() -> Outcome {
    let mut a = Audit::new();
    for (experiment, model) in [("semidirect", "isojet-sphere"), ("flatness", "isojet-perturbed")] {
        for format in [Format::Json, Format::Csv] {
            let c = cfg(experiment, model).with_seed(7).with_samples(30);
            let bytes: Vec<String> = (0..2)
                .filter_map(|_| a.run(c.clone()))
                .filter_map(|r| r.render(format).ok())
                .collect();
            if bytes.len() != 2 || bytes[0] != bytes[1] {
                a.failures.push(format!("{experiment} on {model}: {format:?} reports differ between runs"));
            }
        }
    }
    a.outcome()
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("jet arithmetic agrees with bisection oracles", jet_arithmetic),
        ("kernel-product and semidirect identities", product_identities),
        ("flow and transport derivatives agree", derivative_routes),
        ("flatness matches involutivity", flatness),
        ("flat connections reconstruct a Lie algebra action", reconstruction),
        ("groupoid and classical connections round trip", round_trips),
        ("classical curvature of the shipped forms", classical_curvature),
        ("reports are byte-identical across runs", determinism),
    ];
    let mut failed = 0;
    for (i, (label, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut outcome = check();
        let elapsed = start.elapsed();
        if elapsed > BUDGET {
            let mut f = outcome.err().unwrap_or_default();
            f.push(format!("took {:.1} s, over the {} s budget", elapsed.as_secs_f64(), BUDGET.as_secs()));
            outcome = Err(f);
        }
        match outcome {
            Ok(()) => println!("criterion {}: PASS  {label} ({:.1} s)", i + 1, elapsed.as_secs_f64()),
            Err(reasons) => {
                failed += 1;
                println!("criterion {}: FAIL  {label} ({:.1} s)", i + 1, elapsed.as_secs_f64());
                for r in reasons {
                    println!("    {r}");
                }
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
