//! The 0-dimensional squared Bessel process: exact transitions, the two
//! time-changed mark diffusions, absorption statistics and an Euler–Maruyama
//! cross-check.
//!
//! BESQ⁰ solves `dQ = 2√Q dB` and has Laplace transform
//! `E e^{-uQ_t} = exp(-xu / (1 + 2tu))`, so `Q_t` is compound Poisson–gamma:
//! `N ~ Poisson(x/(2t))` and, given `N`, `Q_t ~ Gamma(N, scale 2t)`.

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mc::{pick, McPlan};
use crate::rng::StreamRng;
use crate::verdict::{IdentityVerdict, SIGMA_LEVEL};


/// Poisson means up to this value are drawn by inversion of one uniform,
/// which couples draws across different times.
const INVERSION_MAX_MEAN: f64 = 50.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesqState {
    pub value: f64,
    pub absorbed: bool,
}

impl BesqState {
    pub fn absorbed() -> Self {
        Self {
            value: 0.0,
            absorbed: true,
        }
    }

    pub fn alive(value: f64) -> Self {
        Self { value, absorbed: false }
    }
}

fn check_transition(x: f64, t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("transition time must be positive, got {t}")));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("BESQ state must be nonnegative, got {x}")));
    }
    Ok(())
}

fn check_time_change(s0: f64, t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("time must be positive, got {t}")));
    }
    if !(s0 > 0.0) || !s0.is_finite() {
        return Err(Error::Domain(format!("starting mark must be positive, got {s0}")));
    }
    Ok(())
}

fn poisson_inversion(mean: f64, u: f64) -> u64 {
    let mut p = (-mean).exp();
    let mut cdf = p;
    let mut k = 0u64;
    while u > cdf && p > 0.0 {
        k += 1;
        p *= mean / k as f64;
        cdf += p;
    }
    k
}

/// Exact draw from `Q_t` given `Q_0 = x`.
///
/// Every call consumes exactly two values from `rng` (a uniform for the
/// Poisson count and a seed for the gamma stage), so calls at different `t`
/// on equal streams share their Poisson uniform.
pub fn besq0_transition_exact<R: Rng + ?Sized>(x: f64, t: f64, rng: &mut R) -> Result<BesqState> {
    check_transition(x, t)?;
    let u: f64 = rng.random();
    let mut inner = StreamRng::seed_from_u64(rng.random());
    if x == 0.0 {
        return Ok(BesqState::absorbed());
    }
    let mean = x / (2.0 * t);
    let n = if mean <= INVERSION_MAX_MEAN {
        poisson_inversion(mean, u)
    } else {
        Poisson::new(mean).expect("finite positive mean").sample(&mut inner) as u64
    };
    if n == 0 {
        return Ok(BesqState::absorbed());
    }
    let g = Gamma::new(n as f64, 2.0 * t).expect("positive shape and scale");
    Ok(BesqState::alive(g.sample(&mut inner)))
}

/// Space-time transformations of BESQ⁰ onto the mark axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeChange {
    /// `Y(t) = e^{-2t} Q((e^{2t} - 1)/2)`, generator `2s(∂² - ∂)`.
    Double,
    /// `Z(t) = e^{-t} Q((e^t - 1)/2)`, generator `s(∂² - ∂)`.
    #[serde(alias = "halfspeed")]
    Unit,
}

impl TimeChange {
    pub const ALL: [TimeChange; 2] = [TimeChange::Double, TimeChange::Unit];

    /// Speed `k` in `e^{-kt} Q((e^{kt} - 1)/2)`.
    pub fn speed(self) -> f64 {
        match self {
            TimeChange::Double => 2.0,
            TimeChange::Unit => 1.0,
        }
    }

    pub fn clock(self, t: f64) -> f64 {
        (self.speed() * t).exp_m1() / 2.0
    }

    pub fn prefactor(self, t: f64) -> f64 {
        (-self.speed() * t).exp()
    }

    /// Euler–Maruyama generator with the same law.
    pub fn generator(self) -> EmGenerator {
        match self {
            TimeChange::Double => EmGenerator::DoubleExt,
            TimeChange::Unit => EmGenerator::Ext,
        }
    }

    /// `P(absorbed by t)` implied by the transformation: `exp(-s0/(e^{kt} - 1))`.
    pub fn absorption_probability(self, s0: f64, t: f64) -> f64 {
        (-s0 / (self.speed() * t).exp_m1()).exp()
    }

    pub fn label(self) -> &'static str {
        match self {
            TimeChange::Double => "double",
            TimeChange::Unit => "unit",
        }
    }
}

impl std::fmt::Display for TimeChange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for TimeChange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "double" => Ok(TimeChange::Double),
            "unit" | "halfspeed" => Ok(TimeChange::Unit),
            other => Err(Error::Parse(format!("unknown time change {other:?}; expected double or unit"))),
        }
    }
}

pub fn time_changed_sample<R: Rng + ?Sized>(variant: TimeChange, s0: f64, t: f64, rng: &mut R) -> Result<BesqState> {
    check_time_change(s0, t)?;
    let q = besq0_transition_exact(s0, variant.clock(t), rng)?;
    Ok(BesqState {
        value: variant.prefactor(t) * q.value,
        absorbed: q.absorbed,
    })
}

/// Closed-form absorption probabilities compared by [`absorption_report`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbsorptionFormula {
    /// `exp(-s0 / (1 - e^{-t}))`.
    Stated,
    /// `exp(-s0 / (e^{kt} - 1))` for the variant's speed `k`.
    TimeChange,
}

impl AbsorptionFormula {
    pub fn expression(self, variant: TimeChange) -> &'static str {
        match (self, variant) {
            (AbsorptionFormula::Stated, _) => "exp(-s0/(1-exp(-t)))",
            (AbsorptionFormula::TimeChange, TimeChange::Double) => "exp(-s0/(exp(2t)-1))",
            (AbsorptionFormula::TimeChange, TimeChange::Unit) => "exp(-s0/(exp(t)-1))",
        }
    }

    pub fn value(self, variant: TimeChange, s0: f64, t: f64) -> f64 {
        match self {
            AbsorptionFormula::Stated => (-s0 / -(-t).exp_m1()).exp(),
            AbsorptionFormula::TimeChange => variant.absorption_probability(s0, t),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionCandidate {
    pub formula: AbsorptionFormula,
    pub expression: String,
    pub value: f64,
    /// Binomial standard error under this candidate, `√(p(1-p)/n)`.
    pub std_error: f64,
    pub sigma_distance: f64,
    pub matches: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionReport {
    pub variant: TimeChange,
    pub s0: f64,
    pub t: f64,
    pub n: u64,
    pub shards: u32,
    pub seed: u64,
    pub frequency: f64,
    pub std_error: f64,
    pub candidates: Vec<AbsorptionCandidate>,
    /// Candidates rejected at 4σ.
    pub flagged: Vec<AbsorptionFormula>,
}

impl AbsorptionReport {
    pub fn candidate(&self, formula: AbsorptionFormula) -> &AbsorptionCandidate {
        self.candidates
            .iter()
            .find(|c| c.formula == formula)
            .expect("both formulas are always reported")
    }

    /// Exactly one candidate survives and the other is flagged.
    pub fn resolved(&self) -> bool {
        self.candidates.iter().filter(|c| c.matches).count() == 1
    }
}

/// Monte Carlo absorption frequency of a time-changed diffusion, compared
/// against both closed forms at 4σ.
pub fn absorption_report(variant: TimeChange, s0: f64, t: f64, plan: &McPlan) -> Result<AbsorptionReport> {
    check_time_change(s0, t)?;
    let acc = plan.run(1, |rng, out| {
        let st = time_changed_sample(variant, s0, t, rng).expect("validated inputs");
        out[0] = if st.absorbed { 1.0 } else { 0.0 };
    });
    let n = acc.count();
    let frequency = acc.mean(0);
    let std_error = acc.std_error(0);
    let candidates: Vec<AbsorptionCandidate> = [AbsorptionFormula::Stated, AbsorptionFormula::TimeChange]
        .into_iter()
        .map(|formula| {
            let value = formula.value(variant, s0, t);
            let se = (value * (1.0 - value) / n as f64).sqrt();
            let gap = (frequency - value).abs();
            let sigma_distance = if gap == 0.0 {
                0.0
            } else if se > 0.0 {
                gap / se
            } else {
                f64::INFINITY
            };
            AbsorptionCandidate {
                formula,
                expression: formula.expression(variant).to_string(),
                value,
                std_error: se,
                sigma_distance,
                matches: sigma_distance <= SIGMA_LEVEL,
            }
        })
        .collect();
    let flagged = candidates.iter().filter(|c| !c.matches).map(|c| c.formula).collect();
    Ok(AbsorptionReport {
        variant,
        s0,
        t,
        n,
        shards: plan.shards,
        seed: plan.stream.seed(),
        frequency,
        std_error,
        candidates,
        flagged,
    })
}

/// Reports at several times on one stream. Absorption indicators are
/// coupled through the shared Poisson uniform, so frequencies are
/// nondecreasing in `t` whenever the Poisson means stay in the inversion
/// range.
pub fn absorption_sweep(variant: TimeChange, s0: f64, times: &[f64], plan: &McPlan) -> Result<Vec<AbsorptionReport>> {
    times.iter().map(|&t| absorption_report(variant, s0, t, plan)).collect()
}

/// Diffusions simulated by Euler–Maruyama.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmGenerator {
    /// `2s ∂²`: BESQ⁰ itself, `dQ = 2√Q dB`.
    Besq0,
    /// `s(∂² - ∂)`: drift `-s`, diffusion `√(2s)`.
    Ext,
    /// `2s(∂² - ∂)`: drift `-2s`, diffusion `2√s`.
    DoubleExt,
}

impl EmGenerator {
    fn coefficients(self, s: f64) -> (f64, f64) {
        match self {
            EmGenerator::Besq0 => (0.0, 2.0 * s.sqrt()),
            EmGenerator::Ext => (-s, (2.0 * s).sqrt()),
            EmGenerator::DoubleExt => (-2.0 * s, 2.0 * s.sqrt()),
        }
    }

    /// `d/dt E s` is `-k E s` for this generator.
    pub fn decay_rate(self) -> f64 {
        match self {
            EmGenerator::Besq0 => 0.0,
            EmGenerator::Ext => 1.0,
            EmGenerator::DoubleExt => 2.0,
        }
    }
}

pub const EM_MAX_DT: f64 = 1e-3;

/// One path point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub t: f64,
    pub value: f64,
    pub absorbed: bool,
}

fn em_steps(s0: f64, t: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || dt > EM_MAX_DT {
        return Err(Error::Domain(format!("Euler-Maruyama step must lie in (0, {EM_MAX_DT}], got {dt}")));
    }
    if !(t > 0.0) || !t.is_finite() || !(s0 >= 0.0) {
        return Err(Error::Domain(format!("need s0 ≥ 0 and t > 0, got ({s0}, {t})")));
    }
    Ok((t / dt).ceil() as usize)
}

/// Euler–Maruyama with absorption at the first nonpositive proposal.
/// The step is `t / ⌈t/dt⌉`.
pub fn em_simulate<R: Rng + ?Sized>(generator: EmGenerator, s0: f64, t: f64, dt: f64, rng: &mut R) -> Result<BesqState> {
    let steps = em_steps(s0, t, dt)?;
    let h = t / steps as f64;
    let sh = h.sqrt();
    let mut s = s0;
    if s == 0.0 {
        return Ok(BesqState::absorbed());
    }
    for _ in 0..steps {
        let (drift, diffusion) = generator.coefficients(s);
        let z: f64 = StandardNormal.sample(rng);
        s += drift * h + diffusion * sh * z;
        if s <= 0.0 {
            return Ok(BesqState::absorbed());
        }
    }
    Ok(BesqState::alive(s))
}

/// Euler–Maruyama path recorded every `every` steps (and at the end).
pub fn em_path<R: Rng + ?Sized>(generator: EmGenerator, s0: f64, t: f64, dt: f64, every: usize, rng: &mut R) -> Result<Vec<PathPoint>> {
    let steps = em_steps(s0, t, dt)?;
    let every = every.max(1);
    let h = t / steps as f64;
    let mut s = s0;
    let mut absorbed = s0 == 0.0;
    let mut out = vec![PathPoint {
        t: 0.0,
        value: s,
        absorbed,
    }];
    for k in 1..=steps {
        if !absorbed {
            let (drift, diffusion) = generator.coefficients(s);
            let z: f64 = StandardNormal.sample(rng);
            s += drift * h + diffusion * h.sqrt() * z;
            if s <= 0.0 {
                s = 0.0;
                absorbed = true;
            }
        }
        if k % every == 0 || k == steps {
            out.push(PathPoint {
                t: k as f64 * h,
                value: s,
                absorbed,
            });
        }
    }
    Ok(out)
}

pub fn path_csv(points: &[PathPoint]) -> String {
    let mut out = String::from("t,value,absorbed\n");
    for p in points {
        out.push_str(&format!("{:.12e},{:.16e},{}\n", p.t, p.value, p.absorbed));
    }
    out
}

/// MC mean of `e^{-uQ_t}` against `exp(-xu/(1 + 2tu))`.
pub fn verify_besq_laplace(x: f64, t: f64, u: f64, plan: &McPlan) -> Result<IdentityVerdict> {
    check_transition(x, t)?;
    let started = std::time::Instant::now();
    let acc = plan.run(1, |rng, out| {
        out[0] = (-u * besq0_transition_exact(x, t, rng).expect("validated").value).exp()
    });
    let r = plan.report(&acc, &pick(1, 0));
    let exact = (-x * u / (1.0 + 2.0 * t * u)).exp();
    Ok(IdentityVerdict::statistical("besq-laplace", r.value, exact, r.std_error, 0.0)
        .with_n(r.n_samples)
        .with_seed(r.seed)
        .with_note(format!("x={x} t={t} u={u}"))
        .with_runtime(started))
}

/// MC frequency of `Q_t = 0` against `e^{-x/(2t)}`.
pub fn verify_besq_absorption(x: f64, t: f64, plan: &McPlan) -> Result<IdentityVerdict> {
    check_transition(x, t)?;
    let started = std::time::Instant::now();
    let acc = plan.run(1, |rng, out| {
        out[0] = f64::from(u8::from(besq0_transition_exact(x, t, rng).expect("validated").absorbed))
    });
    let r = plan.report(&acc, &pick(1, 0));
    Ok(
        IdentityVerdict::statistical("besq-absorption", r.value, (-x / (2.0 * t)).exp(), r.std_error, 0.0)
            .with_n(r.n_samples)
            .with_seed(r.seed)
            .with_note(format!("x={x} t={t}"))
            .with_runtime(started),
    )
}

/// Martingale property `E Q_t = x`.
pub fn verify_besq_martingale(x: f64, t: f64, plan: &McPlan) -> Result<IdentityVerdict> {
    check_transition(x, t)?;
    let started = std::time::Instant::now();
    let acc = plan.run(1, |rng, out| out[0] = besq0_transition_exact(x, t, rng).expect("validated").value);
    let r = plan.report(&acc, &pick(1, 0));
    Ok(IdentityVerdict::statistical("besq-martingale", r.value, x, r.std_error, 0.0)
        .with_n(r.n_samples)
        .with_seed(r.seed)
        .with_note(format!("x={x} t={t}"))
        .with_runtime(started))
}

/// `E Y_t = s0 e^{-kt}` for a time-changed diffusion.
pub fn verify_time_change_mean(variant: TimeChange, s0: f64, t: f64, plan: &McPlan) -> Result<IdentityVerdict> {
    check_time_change(s0, t)?;
    let started = std::time::Instant::now();
    let acc = plan.run(1, |rng, out| {
        out[0] = time_changed_sample(variant, s0, t, rng).expect("validated").value
    });
    let r = plan.report(&acc, &pick(1, 0));
    Ok(
        IdentityVerdict::statistical("time-change-mean", r.value, s0 * (-variant.speed() * t).exp(), r.std_error, 0.0)
            .with_kind(variant.label())
            .with_n(r.n_samples)
            .with_seed(r.seed)
            .with_note(format!("s0={s0} t={t}"))
            .with_runtime(started),
    )
}

/// Euler–Maruyama mean against `s0 e^{-kt}`; the `O(dt)` bias bound
/// `s0 · k²t·dt` enters as deterministic tolerance.
pub fn verify_em_mean(generator: EmGenerator, s0: f64, t: f64, dt: f64, plan: &McPlan) -> Result<IdentityVerdict> {
    em_steps(s0, t, dt)?;
    let started = std::time::Instant::now();
    let acc = plan.run(1, |rng, out| {
        out[0] = em_simulate(generator, s0, t, dt, rng).expect("validated").value
    });
    let r = plan.report(&acc, &pick(1, 0));
    let k = generator.decay_rate();
    let exact = s0 * (-k * t).exp();
    // (1 - k h)^{t/h} vs e^{-kt}
    let steps = (t / dt).ceil();
    let discrete = s0 * (1.0 - k * t / steps).powf(steps);
    Ok(
        IdentityVerdict::statistical("em-mean", r.value, exact, r.std_error, (exact - discrete).abs())
            .with_n(r.n_samples)
            .with_seed(r.seed)
            .with_note(format!("{generator:?} s0={s0} t={t} dt={dt}"))
            .with_runtime(started),
    )
}

/// Two-sample KS between Euler–Maruyama and the exact time-changed sampler.
pub fn em_distribution_check(variant: TimeChange, s0: f64, t: f64, dt: f64, plan: &McPlan, alpha: f64) -> Result<IdentityVerdict> {
    em_steps(s0, t, dt)?;
    let started = std::time::Instant::now();
    let generator = variant.generator();
    let em: Vec<f64> = plan
        .on(plan.stream.split(0))
        .collect(|rng| em_simulate(generator, s0, t, dt, rng).expect("validated").value);
    let exact: Vec<f64> = plan
        .on(plan.stream.split(1))
        .collect(|rng| time_changed_sample(variant, s0, t, rng).expect("validated").value);
    let ks = crate::stats::ks_two_sample(&em, &exact);
    Ok(IdentityVerdict::p_value("em-vs-exact", ks.statistic, ks.p_value, alpha)
        .with_kind(variant.label())
        .with_n(plan.n)
        .with_seed(plan.stream.seed())
        .with_note(format!("s0={s0} t={t} dt={dt}"))
        .with_runtime(started))
}

/// Relative gap between Euler–Maruyama and exact BESQ⁰ absorption at `(x, t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmAbsorptionCheck {
    pub em_frequency: f64,
    pub em_std_error: f64,
    pub exact: f64,
    pub relative_gap: f64,
    pub pass: bool,
}

pub fn em_absorption_check(x: f64, t: f64, dt: f64, plan: &McPlan, relative: f64) -> Result<EmAbsorptionCheck> {
    em_steps(x, t, dt)?;
    let acc = plan.run(1, |rng, out| {
        out[0] = f64::from(u8::from(
            em_simulate(EmGenerator::Besq0, x, t, dt, rng).expect("validated").absorbed,
        ))
    });
    let exact = (-x / (2.0 * t)).exp();
    let em_frequency = acc.mean(0);
    let relative_gap = (em_frequency - exact).abs() / exact;
    Ok(EmAbsorptionCheck {
        em_frequency,
        em_std_error: acc.std_error(0),
        exact,
        relative_gap,
        pass: relative_gap <= relative,
    })
}
