//! Named verification suites driven by a flat run configuration.
//!
//! Every suite draws from `RandomStream::new(seed).split(suite index)`, and
//! each verdict inside a suite from a further split of that stream, so
//! suites are independent of each other and of the order they run in.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;

use crate::besq::{self, AbsorptionReport, TimeChange};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::fock::{self, FockSpace, WeightedSpace};
use crate::forms::{self, Estimator, FormBatch, LaplaceTest};
use crate::mc::McPlan;
use crate::measure::{SpatialBox, Window};
use crate::one_particle::{self, MonomialFunction, OneParticleFunction, WeightedGrid, MARK_RANGE};
use crate::rng::RandomStream;
use crate::testfn::{BumpFunction, FormKind, MassCoefficient, SpatialTest};
use crate::verdict::IdentityVerdict;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Suite {
    Laplace,
    Mecke,
    Moments,
    GammaMarginal,
    Forms,
    Duality,
    OneParticle,
    Besq,
    Fock,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::Laplace,
        Suite::Mecke,
        Suite::Moments,
        Suite::GammaMarginal,
        Suite::Forms,
        Suite::Duality,
        Suite::OneParticle,
        Suite::Besq,
        Suite::Fock,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Laplace => "laplace",
            Suite::Mecke => "mecke",
            Suite::Moments => "moments",
            Suite::GammaMarginal => "gamma-marginal",
            Suite::Forms => "forms",
            Suite::Duality => "duality",
            Suite::OneParticle => "one-particle",
            Suite::Besq => "besq",
            Suite::Fock => "fock",
        }
    }

    /// Split index of the suite's stream.
    pub fn stream_index(self) -> u64 {
        Suite::ALL.iter().position(|s| *s == self).expect("listed") as u64
    }

    /// Parses a comma-separated list; `all` selects every suite.
    pub fn parse_list(text: &str) -> Result<Vec<Suite>> {
        let mut out = Vec::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if part == "all" {
                out.extend(Suite::ALL);
            } else {
                out.push(part.parse()?);
            }
        }
        if out.is_empty() {
            return Err(Error::Parse("no suite selected".into()));
        }
        let mut seen = Vec::new();
        out.retain(|s| {
            let fresh = !seen.contains(s);
            seen.push(*s);
            fresh
        });
        Ok(out)
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|s| s.name() == text.trim())
            .ok_or_else(|| Error::Parse(format!("unknown suite `{text}`")))
    }
}

/// Everything a batch run needs. Serialized as flat `key=value` text.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub suites: Vec<Suite>,
    /// Spatial dimension of the unit-cube window.
    pub dim: usize,
    /// Mass floor of the sampler.
    pub eps: f64,
    /// `None` runs every named coefficient.
    pub coeff: Option<MassCoefficient>,
    pub n: u64,
    /// Samples for the Mecke form estimator, which costs a quadrature per sample.
    pub mecke_n: u64,
    /// Euler–Maruyama paths.
    pub em_n: u64,
    /// Samples for the absorption report.
    pub absorption_n: u64,
    /// Gauss–Legendre degree of the Mecke estimator.
    pub degree: usize,
    pub seed: u64,
    pub shards: u32,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            suites: Suite::ALL.to_vec(),
            dim: 1,
            eps: 1e-6,
            coeff: None,
            n: 100_000,
            mecke_n: 10_000,
            em_n: 20_000,
            absorption_n: 1_000_000,
            degree: forms::DEFAULT_QUAD_DEGREE,
            seed: 1,
            shards: 4,
            out: PathBuf::from("verify-out"),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value.trim().parse().map_err(|e| Error::Parse(format!("{key}: `{value}`: {e}")))
}

impl RunConfig {
    pub const KEYS: [&'static str; 12] = [
        "suite",
        "dim",
        "eps",
        "coeff",
        "n",
        "mecke_n",
        "em_n",
        "absorption_n",
        "degree",
        "seed",
        "shards",
        "out",
    ];

    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key.trim() {
            "suite" => self.suites = Suite::parse_list(value)?,
            "dim" => self.dim = parse(key, value)?,
            "eps" => self.eps = parse(key, value)?,
            "coeff" => {
                self.coeff = match value.trim() {
                    "all" => None,
                    v => Some(v.parse()?),
                }
            }
            "n" => self.n = parse(key, value)?,
            "mecke_n" => self.mecke_n = parse(key, value)?,
            "em_n" => self.em_n = parse(key, value)?,
            "absorption_n" => self.absorption_n = parse(key, value)?,
            "degree" => self.degree = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "shards" => self.shards = parse(key, value)?,
            "out" => self.out = PathBuf::from(value.trim()),
            other => return Err(Error::Parse(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Applies `key=value` lines on top of `self`; `#` starts a comment.
    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key=value, got `{line}`", lineno + 1)))?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_kv(text)?;
        Ok(c)
    }

    pub fn to_kv(&self) -> String {
        let suites: Vec<&str> = self.suites.iter().map(|s| s.name()).collect();
        let coeff = match &self.coeff {
            None => "all".to_string(),
            Some(c) => coeff_key(c),
        };
        [
            format!("suite={}", suites.join(",")),
            format!("dim={}", self.dim),
            format!("eps={:e}", self.eps),
            format!("coeff={coeff}"),
            format!("n={}", self.n),
            format!("mecke_n={}", self.mecke_n),
            format!("em_n={}", self.em_n),
            format!("absorption_n={}", self.absorption_n),
            format!("degree={}", self.degree),
            format!("seed={}", self.seed),
            format!("shards={}", self.shards),
            format!("out={}", self.out.display()),
        ]
        .join("\n")
            + "\n"
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfiguration(msg));
        if self.suites.is_empty() {
            return bad("no suite selected".into());
        }
        if !(1..=3).contains(&self.dim) {
            return bad(format!("dim must be 1, 2 or 3, got {}", self.dim));
        }
        if !(self.eps > 0.0 && self.eps < 0.2) {
            return bad(format!(
                "eps must lie in (0, 0.2) to stay below the test-function mass supports, got {}",
                self.eps
            ));
        }
        for (key, v) in [
            ("n", self.n),
            ("mecke_n", self.mecke_n),
            ("em_n", self.em_n),
            ("absorption_n", self.absorption_n),
        ] {
            if v == 0 {
                return bad(format!("{key} must be positive"));
            }
        }
        if !(8..=64).contains(&self.degree) {
            return bad(format!("degree must lie in 8..=64, got {}", self.degree));
        }
        if self.shards == 0 {
            return bad("shards must be positive".into());
        }
        Ok(())
    }

    pub fn coefficients(&self) -> Vec<MassCoefficient> {
        match &self.coeff {
            Some(c) => vec![c.clone()],
            None => MassCoefficient::named().to_vec(),
        }
    }

    fn window(&self, dim: usize) -> Result<Window> {
        Window::unit(dim, self.eps)
    }

    fn stream(&self, suite: Suite, sub: u64) -> RandomStream {
        RandomStream::new(self.seed).split(suite.stream_index()).split(sub)
    }

    fn plan(&self, suite: Suite, sub: u64, n: u64) -> Result<McPlan> {
        McPlan::new(n, self.shards, self.stream(suite, sub))
    }
}

fn coeff_key(c: &MassCoefficient) -> String {
    match c {
        MassCoefficient::One => "one".into(),
        MassCoefficient::Linear => "s".into(),
        MassCoefficient::Quadratic => "s2".into(),
        MassCoefficient::Cubic { a1, a2, a3 } => format!("cubic:{a1},{a2},{a3}"),
        MassCoefficient::Custom { .. } => c.label(),
    }
}

/// A CSV table emitted next to the report.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub csv: String,
}

#[derive(Clone, Debug)]
pub struct SuiteOutput {
    pub suite: Suite,
    pub verdicts: Vec<IdentityVerdict>,
    pub tables: Vec<Table>,
}

impl SuiteOutput {
    pub fn pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

pub fn run_suite(suite: Suite, config: &RunConfig) -> Result<SuiteOutput> {
    config.validate()?;
    let mut tables = Vec::new();
    let verdicts = match suite {
        Suite::Laplace => laplace(config)?,
        Suite::Mecke => mecke(config)?,
        Suite::Moments => moments(config)?,
        Suite::GammaMarginal => gamma_marginal(config)?,
        Suite::Forms => forms_suite(config)?,
        Suite::Duality => duality(config)?,
        Suite::OneParticle => one_particle_suite(config, &mut tables)?,
        Suite::Besq => besq_suite(config, &mut tables)?,
        Suite::Fock => fock_suite(config)?,
    };
    tables.insert(
        0,
        Table {
            name: format!("{}_verdicts.csv", suite.name()),
            csv: verdicts_csv(&verdicts),
        },
    );
    Ok(SuiteOutput { suite, verdicts, tables })
}

fn laplace(config: &RunConfig) -> Result<Vec<IdentityVerdict>> {
    let d = config.dim;
    let window = config.window(d)?;
    let mut half_hi = vec![1.0; d];
    half_hi[0] = 0.5;
    let tests = [
        LaplaceTest::Indicator {
            region: SpatialBox::unit(d)?,
            level: -1.0,
        },
        LaplaceTest::Indicator {
            region: SpatialBox::new(vec![0.0; d], half_hi)?,
            level: 0.5,
        },
        LaplaceTest::Smooth(SpatialTest::bump(0.4 / BumpFunction::PEAK, &vec![0.5; d], 0.4)?),
    ];
    tests
        .iter()
        .enumerate()
        .map(|(i, phi)| forms::verify_laplace_transform(phi, &window, &config.plan(Suite::Laplace, i as u64, config.n)?))
        .collect()
}

fn mecke(config: &RunConfig) -> Result<Vec<IdentityVerdict>> {
    let d = config.dim;
    let window = config.window(d)?;
    let (phi, psi) = fixtures::linear_pair(d);
    let (_, g) = fixtures::standard_pair(d);
    let linear = crate::testfn::HatCylinder::linear(psi);
    let cases = [None, Some(&linear), Some(&g)];
    let notes = ["G = 1", "G linear", "G nonlinear"];
    cases
        .iter()
        .zip(notes)
        .enumerate()
        .map(|(i, (g, note))| {
            Ok(forms::verify_mecke_gamma(&phi, *g, &window, &config.plan(Suite::Mecke, i as u64, config.n)?)?.with_note(note))
        })
        .collect()
}

fn moments(config: &RunConfig) -> Result<Vec<IdentityVerdict>> {
    let d = config.dim;
    let window = config.window(d)?;
    let mut hi = vec![1.0; d];
    hi[0] = 0.5;
    let region = SpatialBox::new(vec![0.0; d], hi)?;
    [1u32, 2, 3, 5]
        .iter()
        .map(|&l| forms::verify_moments(&region, l, &window, &config.plan(Suite::Moments, u64::from(l), config.n)?))
        .collect()
}

fn gamma_marginal(config: &RunConfig) -> Result<Vec<IdentityVerdict>> {
    let d = config.dim;
    let window = config.window(d)?;
    let region = SpatialBox::unit(d)?;
    Ok(vec![forms::distribution_check_gamma(
        &region,
        &window,
        &config.plan(Suite::GammaMarginal, 0, config.n)?,
    )?])
}

/// Atom-sum against Mecke estimators, linear reductions and contraction.
fn forms_suite(config: &RunConfig) -> Result<Vec<IdentityVerdict>> {
    let d = config.dim;
    let window = config.window(d)?;
    let coeffs = config.coefficients();
    let (f, g) = fixtures::standard_pair(d);
    let started = std::time::Instant::now();
    let batch = FormBatch::new(f.clone(), g, coeffs.clone(), window.clone())?.with_mecke(forms::DEFAULT_QUAD_PANELS, config.degree)?;
    let run = batch.run(&config.plan(Suite::Forms, 0, config.mecke_n)?);
    let mut out = Vec::new();
    for (ci, c) in coeffs.iter().enumerate() {
        for kind in FormKind::ALL {
            out.push(
                run.verdict("form-representation", Estimator::Atoms, Estimator::Mecke, kind, ci, c)
                    .with_runtime(started),
            );
        }
    }
    let (phi, psi) = fixtures::linear_pair(d);
    out.push(one_particle::verify_linear_reduction(
        FormKind::Ext,
        &MassCoefficient::One,
        &phi,
        &psi,
        &window,
        &config.plan(Suite::Forms, 1, config.n)?,
    )?);
    out.push(one_particle::verify_linear_reduction(
        FormKind::Int,
        &MassCoefficient::Quadratic,
        &phi,
        &psi,
        &window,
        &config.plan(Suite::Forms, 2, config.n)?,
    )?);
    for (i, kind) in FormKind::ALL.into_iter().enumerate() {
        out.push(forms::verify_contraction(
            kind,
            &coeffs[0],
            &f,
            &window,
            &config.plan(Suite::Forms, 3 + i as u64, config.n)?,
        )?);
    }
    Ok(out)
}

/// `ℰ(F, G) = E[(-LF)G]` and `E[(-LF)G] = E[(-LG)F]` on one sample set.
fn duality(config: &RunConfig) -> Result<Vec<IdentityVerdict>> {
    let d = config.dim;
    let window = config.window(d)?;
    let coeffs = config.coefficients();
    let (f, g) = fixtures::standard_pair(d);
    let started = std::time::Instant::now();
    let run = FormBatch::new(f, g, coeffs.clone(), window)?.run(&config.plan(Suite::Duality, 0, config.n)?);
    let mut out = Vec::new();
    for (ci, c) in coeffs.iter().enumerate() {
        for kind in FormKind::ALL {
            out.push(
                run.verdict("form-duality", Estimator::Atoms, Estimator::GeneratorFG, kind, ci, c)
                    .with_runtime(started),
            );
        }
    }
    for (ci, c) in coeffs.iter().enumerate() {
        for kind in FormKind::ALL {
            out.push(
                run.verdict("form-symmetry", Estimator::GeneratorFG, Estimator::GeneratorGF, kind, ci, c)
                    .with_runtime(started),
            );
        }
    }
    Ok(out)
}

pub const MONOMIAL_TOLERANCE: f64 = 1e-10;
pub const SPECTRUM_ORDER: f64 = 1.8;
pub const SPECTRUM_NODES: [usize; 3] = [200, 400, 800];

/// Deterministic one-particle checks; always on a 1-d spatial factor.
fn one_particle_suite(config: &RunConfig, tables: &mut Vec<Table>) -> Result<Vec<IdentityVerdict>> {
    let mut out = Vec::new();
    // monomial action at random points
    let mut rng = config.stream(Suite::OneParticle, 0).rng();
    let space = SpatialTest::bump(1.0, &[0.5], 0.5)?;
    for k in 1..=5usize {
        let started = std::time::Instant::now();
        let u = OneParticleFunction::Monomial(MonomialFunction::new(space.clone(), k)?);
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let x = rng.random_range(0.05..0.95);
            let s = rng.random_range(0.05..5.0);
            let got = one_particle::apply_generator_pointwise(FormKind::Ext, &MassCoefficient::One, &u, &[x], s)?;
            let kf = k as f64;
            let closed = (kf * (kf - 1.0) * s.powi(k as i32 - 1) - kf * s.powi(k as i32)) * space.value(&[x]);
            worst = worst.max((got - closed).abs() / closed.abs().max(1.0));
        }
        out.push(
            IdentityVerdict::upper_bound("monomial-action", worst, MONOMIAL_TOLERANCE)
                .with_kind("ext")
                .with_note(format!("k={k}, 20 points, relative error"))
                .with_runtime(started),
        );
    }
    // duality on random bump pairs
    let mut rng = config.stream(Suite::OneParticle, 1).rng();
    let coeffs = config.coefficients();
    for kind in [FormKind::Int, FormKind::Ext] {
        for i in 0..10 {
            let u = fixtures::random_hat(&mut rng, 1, 0.2);
            let v = fixtures::random_hat(&mut rng, 1, 0.2);
            let c = &coeffs[i % coeffs.len()];
            out.push(one_particle::duality_check(kind, c, &u, &v)?);
        }
    }
    // discrete spectrum of the extrinsic operator
    let base = WeightedGrid::marks(MARK_RANGE.0, MARK_RANGE.1, SPECTRUM_NODES[0])?;
    let mut grid = base.clone();
    for (level, nodes) in SPECTRUM_NODES.iter().enumerate() {
        if level > 0 {
            grid = grid.refine();
        }
        let started = std::time::Instant::now();
        let op = one_particle::discretize_generator(FormKind::Ext, &MassCoefficient::One, &grid)?;
        let inv = op.invariants;
        let note = format!("{nodes} nodes");
        out.push(
            IdentityVerdict::upper_bound("assembly-symmetry", inv.symmetry_defect, one_particle::SYMMETRY_TOLERANCE)
                .with_note(note.clone()),
        );
        out.push(
            IdentityVerdict::upper_bound("assembly-spectrum", inv.max_eigenvalue, one_particle::SPECTRUM_TOLERANCE).with_note(note.clone()),
        );
        out.push(
            IdentityVerdict::lower_bound("assembly-off-diagonal", inv.min_off_diagonal, 0.0)
                .with_note(note)
                .with_runtime(started),
        );
    }
    let rows = one_particle::refinement_study(FormKind::Ext, &MassCoefficient::One, &base, SPECTRUM_NODES.len(), 3)?;
    for r in rows.iter().filter(|r| r.nodes == *SPECTRUM_NODES.last().expect("nonempty")) {
        let order = r.order.unwrap_or(f64::NAN);
        out.push(
            IdentityVerdict::lower_bound("ext-spectrum-order", order, SPECTRUM_ORDER)
                .with_kind("ext")
                .with_note(format!(
                    "eigenvalue {} -> {}: {:.10}",
                    r.index,
                    r.exact.unwrap_or(f64::NAN),
                    r.value
                )),
        );
    }
    tables.push(Table {
        name: "one_particle_refinement.csv".into(),
        csv: one_particle::refinement_csv(&rows),
    });
    for n in 1..=6 {
        let residual = one_particle::laguerre_eigen_check(n)?;
        out.push(IdentityVerdict::upper_bound("laguerre-eigenfunction", residual, MONOMIAL_TOLERANCE).with_note(format!("n={n}")));
    }
    Ok(out)
}

pub const BESQ_X: f64 = 2.0;
pub const BESQ_T: f64 = 1.0;
pub const EM_DT: f64 = 1e-4;
pub const EM_RELATIVE: f64 = 0.03;
pub const ABSORPTION_POINT: (f64, f64) = (1.0, 1.0);
pub const ABSORPTION_SWEEP: [f64; 8] = [0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0];

fn besq_suite(config: &RunConfig, tables: &mut Vec<Table>) -> Result<Vec<IdentityVerdict>> {
    let (x, t) = (BESQ_X, BESQ_T);
    let plan = |sub: u64, n: u64| config.plan(Suite::Besq, sub, n);
    let mut out = Vec::new();
    for (i, u) in [0.5, 1.0, 2.0].into_iter().enumerate() {
        out.push(besq::verify_besq_laplace(x, t, u, &plan(i as u64, config.n)?)?);
    }
    out.push(besq::verify_besq_absorption(x, t, &plan(3, config.n)?)?);
    out.push(besq::verify_besq_martingale(x, t, &plan(4, config.n)?)?);
    for (i, v) in TimeChange::ALL.into_iter().enumerate() {
        out.push(besq::verify_time_change_mean(v, 1.0, 1.0, &plan(5 + i as u64, config.n)?)?);
    }
    let started = std::time::Instant::now();
    let em_plan = plan(7, config.em_n)?;
    let em = besq::em_absorption_check(x, t, EM_DT, &em_plan, EM_RELATIVE)?;
    let mut v = IdentityVerdict::deterministic("em-absorption", em.em_frequency, em.exact, EM_RELATIVE * em.exact)
        .with_n(config.em_n)
        .with_seed(em_plan.stream.seed())
        .with_note(format!(
            "dt={EM_DT}; relative gap {:.4}; em se {:.2e}",
            em.relative_gap, em.em_std_error
        ))
        .with_runtime(started);
    v.se = em.em_std_error;
    out.push(v);
    let (s0, ta) = ABSORPTION_POINT;
    let mut reports = Vec::new();
    for (i, variant) in TimeChange::ALL.into_iter().enumerate() {
        let started = std::time::Instant::now();
        let report = besq::absorption_report(variant, s0, ta, &plan(8 + i as u64, config.absorption_n)?)?;
        out.push(absorption_verdict(&report).with_runtime(started));
        reports.push(report);
    }
    tables.push(Table {
        name: "besq_absorption.csv".into(),
        csv: absorption_report_csv(&reports),
    });
    for (i, variant) in TimeChange::ALL.into_iter().enumerate() {
        let sweep = besq::absorption_sweep(variant, s0, &ABSORPTION_SWEEP, &plan(10 + i as u64, config.n)?)?;
        tables.push(Table {
            name: format!("besq_sweep_{}.csv", variant.label()),
            csv: absorption_csv(&sweep),
        });
    }
    Ok(out)
}

/// Passes iff exactly one closed form survives at 4σ; the note names the
/// surviving and the flagged candidate.
pub fn absorption_verdict(report: &AbsorptionReport) -> IdentityVerdict {
    let survivor = report.candidates.iter().find(|c| c.matches);
    let (rhs, se) = survivor.map_or((f64::NAN, report.std_error), |c| (c.value, c.std_error));
    let describe = |c: &besq::AbsorptionCandidate| format!("{} = {:.6} ({:.1} sigma)", c.expression, c.value, c.sigma_distance);
    let matched: Vec<String> = report.candidates.iter().filter(|c| c.matches).map(describe).collect();
    let flagged: Vec<String> = report.candidates.iter().filter(|c| !c.matches).map(describe).collect();
    let mut v = IdentityVerdict::statistical("absorption-resolution", report.frequency, rhs, se, 0.0)
        .with_kind(report.variant.label())
        .with_n(report.n)
        .with_seed(report.seed)
        .with_note(format!("matches: [{}]; flagged: [{}]", matched.join("; "), flagged.join("; ")));
    v.pass = report.resolved();
    v
}

/// Columns `t, mc, se, closed_form_a, closed_form_b` with `a` the stated
/// form and `b` the one implied by the time change.
pub fn absorption_csv(reports: &[AbsorptionReport]) -> String {
    let mut out = String::from("t,mc,se,closed_form_a,closed_form_b\n");
    for r in reports {
        out.push_str(&format!(
            "{},{:.12e},{:.12e},{:.12e},{:.12e}\n",
            r.t,
            r.frequency,
            r.std_error,
            r.candidate(besq::AbsorptionFormula::Stated).value,
            r.candidate(besq::AbsorptionFormula::TimeChange).value
        ));
    }
    out
}

fn absorption_report_csv(reports: &[AbsorptionReport]) -> String {
    let mut out = String::from("variant,s0,t,n,mc,se,formula,expression,value,sigma_distance,matches\n");
    for r in reports {
        for c in &r.candidates {
            out.push_str(&format!(
                "{},{},{},{},{:.12e},{:.12e},{:?},\"{}\",{:.12e},{:.4},{}\n",
                r.variant.label(),
                r.s0,
                r.t,
                r.n,
                r.frequency,
                r.std_error,
                c.formula,
                c.expression,
                c.value,
                c.sigma_distance,
                c.matches
            ));
        }
    }
    out
}

pub const FOCK_DIM: usize = 4;
pub const FOCK_TRUNCATION: usize = 3;
pub const FOCK_TIMES: [f64; 3] = [0.1, 0.5, 1.0];
pub const FUNCTOR_TOLERANCE: f64 = 1e-10;

fn fock_suite(config: &RunConfig) -> Result<Vec<IdentityVerdict>> {
    let mut out = Vec::new();
    let mut rng = config.stream(Suite::Fock, 0).rng();
    let w: Vec<f64> = (0..FOCK_DIM).map(|_| rng.random_range(0.3..2.0)).collect();
    let space = WeightedSpace::new(w.clone())?;
    let random = random_generator(&mut rng, &w);
    let grid = WeightedGrid::marks(0.05, 6.0, FOCK_DIM)?;
    let ext = one_particle::discretize_generator(FormKind::Ext, &MassCoefficient::One, &grid)?;
    let ext_space = WeightedSpace::new(ext.weights.clone())?;
    for t in FOCK_TIMES {
        out.push(fock::verify_intertwining(&space, &random, t, FOCK_TRUNCATION)?.with_kind("random"));
        out.push(fock::verify_intertwining(&ext_space, &ext.matrix, t, FOCK_TRUNCATION)?.with_kind("ext-4-node"));
    }
    // functoriality and contraction over random contractions
    let started = std::time::Instant::now();
    let fock = FockSpace::new(space, FOCK_TRUNCATION)?;
    let (mut functor_gap, mut norm_excess) = (0.0f64, f64::NEG_INFINITY);
    for _ in 0..20 {
        let scale = rng.random_range(0.2..1.0);
        let b1 = random_contraction(&mut rng, &w, scale);
        let b2 = random_contraction(&mut rng, &w, 1.0);
        let e1 = fock.exp_matrix(&b1)?;
        let e2 = fock.exp_matrix(&b2)?;
        let e12 = fock.exp_matrix(&(&b1 * &b2))?;
        functor_gap = functor_gap.max((e12 - &e1 * &e2).abs().max());
        norm_excess = norm_excess.max(fock.operator_norm(&e1) - 1.0).max(fock.operator_norm(&e2) - 1.0);
    }
    out.push(
        IdentityVerdict::matrix("fock-functoriality", functor_gap, FUNCTOR_TOLERANCE)
            .with_note("20 random pairs")
            .with_runtime(started),
    );
    out.push(
        IdentityVerdict::upper_bound("fock-contraction", norm_excess, FUNCTOR_TOLERANCE).with_note("max over 20 pairs of ||Exp B|| - 1"),
    );
    // first chaos
    let window = config.window(1)?;
    let (phi, psi) = fixtures::linear_pair(1);
    let left = fixtures::hat(1.0, &[0.25], 0.2, 0.5, 2.0);
    let right = fixtures::hat(1.0, &[0.75], 0.2, 0.5, 2.0);
    let pairs = [
        (&phi, &psi, "linear pair"),
        (&phi, &phi, "same function"),
        (&left, &right, "disjoint supports"),
    ];
    for (i, (a, b, note)) in pairs.into_iter().enumerate() {
        out.push(fock::first_chaos_isometry(a, b, &window, &config.plan(Suite::Fock, 1 + i as u64, config.n)?)?.with_kind(note));
    }
    Ok(out)
}

/// `W⁻¹S` with `S` symmetric negative semidefinite.
fn random_generator<R: Rng + ?Sized>(rng: &mut R, w: &[f64]) -> DMatrix<f64> {
    let n = w.len();
    let q = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let s = -(q.transpose() * q);
    DMatrix::from_fn(n, n, |i, j| s[(i, j)] / w[i])
}

/// `W^{-1/2} C W^{1/2}` with `‖C‖₂ = scale`.
fn random_contraction<R: Rng + ?Sized>(rng: &mut R, w: &[f64], scale: f64) -> DMatrix<f64> {
    let n = w.len();
    let c: DMatrix<f64> = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let c = &c * (scale / c.singular_values().max());
    DMatrix::from_fn(n, n, |i, j| c[(i, j)] * w[j].sqrt() / w[i].sqrt())
}

/// One row per verdict; an empty slice gives the header only.
pub fn verdicts_csv(verdicts: &[IdentityVerdict]) -> String {
    let mut out = String::from("identity,kind,c,n,lhs,rhs,se,tolerance,discrepancy,sigma_distance,pass\n");
    for v in verdicts {
        out.push_str(&format!(
            "{},{},{},{},{:.12e},{:.12e},{:.6e},{:.6e},{:.6e},{:.4},{}\n",
            v.identity,
            v.kind.as_deref().unwrap_or(""),
            v.c.as_deref().unwrap_or(""),
            v.n,
            v.lhs,
            v.rhs,
            v.se,
            v.tolerance,
            v.discrepancy,
            v.sigma_distance,
            v.pass
        ));
    }
    out
}
