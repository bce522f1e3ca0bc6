//! Executable experiment timelines and their exact-probability oracles.
//!
//! A [`Scenario`] is an initial state plus an ordered list of unitary and
//! measurement steps with terminal classifications. Built-in constructors
//! cover the three canonical set-ups:
//!
//! * `renninger` / `renninger99` — an isotropic emitter watched by a biased
//!   near shell, with the far shell catching the null branch later;
//! * `bomb-live` / `bomb-dud` — a Mach-Zehnder interferometer with a
//!   path-blocking detector that may or may not be armed;
//! * `stern-gerlach` — spin-dependent deflection with a detector capturing
//!   only the spin-down beam.
//!
//! The same representation is produced by lowering scenario files, so the
//! Monte-Carlo engine and the exact oracle treat both identically.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::measurement::{
    null_update, outcome_probabilities, sample, Detector, MeasurementOutcome, StageOutcome,
    NULL_THRESHOLD,
};
use crate::operators::{apply, beam_splitter, mirror, spin_path_coupler, UnitaryOp};
use crate::qstate::{tensor_product, HilbertSpace, StateVector};
use crate::rng::UnitSource;

/// Classification used when a trial runs out of steps on a null branch.
pub const FALLTHROUGH_CLASS: &str = "null";

/// Exponential decay gate run before the measurement sequence.
#[derive(Debug, Clone)]
pub struct DecaySpec {
    pub tau: f64,
    pub t_cut: f64,
    pub undecayed_class: String,
}

/// When a measurement event is stamped.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeSpec {
    /// 1-based ordinal of the measure step within the sequence.
    Ordinal,
    Literal(f64),
    /// Decay instant plus a propagation delay (`T + r/v`).
    AfterDecay { offset: f64 },
}

impl TimeSpec {
    fn eval(&self, decay_time: f64, ordinal: usize) -> f64 {
        match self {
            TimeSpec::Ordinal => ordinal as f64,
            TimeSpec::Literal(t) => *t,
            TimeSpec::AfterDecay { offset } => decay_time + offset,
        }
    }
}

/// How a click terminates the trial.
#[derive(Debug, Clone, PartialEq)]
pub enum ClickAction {
    /// One classification regardless of which covered label fired.
    Classify(String),
    /// Classification looked up per clicked label; missing labels classify
    /// as the label text itself.
    ByLabel(BTreeMap<String, String>),
}

impl ClickAction {
    pub fn classify(&self, label: &str) -> String {
        match self {
            ClickAction::Classify(name) => name.clone(),
            ClickAction::ByLabel(map) => {
                map.get(label).cloned().unwrap_or_else(|| label.to_string())
            }
        }
    }
}

/// What a null outcome does.
#[derive(Debug, Clone, PartialEq)]
pub enum NullAction {
    Continue,
    Classify(String),
}

#[derive(Debug, Clone)]
pub struct MeasureStep {
    pub detector: Detector,
    pub time: TimeSpec,
    pub on_click: ClickAction,
    pub on_null: NullAction,
}

#[derive(Debug, Clone)]
pub enum Step {
    Apply(UnitaryOp),
    Measure(MeasureStep),
}

/// An executable staged-measurement protocol.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub initial: StateVector,
    pub decay: Option<DecaySpec>,
    pub steps: Vec<Step>,
    /// Declared terminal classifications, in display order. Classes that the
    /// event tree cannot reach stay at probability zero.
    pub alphabet: Vec<String>,
}

/// One recorded detector event.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialEvent {
    pub time: f64,
    pub detector: String,
    /// Clicked basis label, or `"null"` for a non-firing detector.
    pub label: String,
}

/// Result of a single Monte-Carlo trial.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub events: Vec<TrialEvent>,
    pub classification: String,
    /// Post-measurement state, attached when a null branch terminates the
    /// trial (the interesting survivor); click collapse states are the
    /// clicked basis vectors and are not retained.
    pub post_state: Option<StateVector>,
}

/// Draws an exponential decay time with mean `tau`: `T = −τ·ln(u)`.
pub fn sample_decay_time(tau: f64, rng: &mut impl UnitSource) -> f64 {
    let u = rng.next_unit().max(f64::MIN_POSITIVE);
    -tau * u.ln()
}

/// Runs one trial of a scenario, consuming draws from `rng` in a fixed
/// order: decay gate first (when present), then one draw per measure step.
pub fn run_trial(scenario: &Scenario, rng: &mut impl UnitSource) -> Result<TrialOutcome> {
    let mut decay_time = 0.0;
    if let Some(decay) = &scenario.decay {
        let t = sample_decay_time(decay.tau, rng);
        if t > decay.t_cut {
            return Ok(TrialOutcome {
                events: Vec::new(),
                classification: decay.undecayed_class.clone(),
                post_state: None,
            });
        }
        decay_time = t;
    }

    let mut state = scenario.initial.clone();
    let mut events = Vec::new();
    let mut ordinal = 0usize;
    for step in &scenario.steps {
        match step {
            Step::Apply(u) => state = apply(u, &state)?,
            Step::Measure(m) => {
                ordinal += 1;
                let time = m.time.eval(decay_time, ordinal);
                match sample(&state, &m.detector, rng)? {
                    MeasurementOutcome::Click { label, .. } => {
                        events.push(TrialEvent {
                            time,
                            detector: m.detector.name().to_string(),
                            label: label.clone(),
                        });
                        return Ok(TrialOutcome {
                            events,
                            classification: m.on_click.classify(&label),
                            post_state: None,
                        });
                    }
                    MeasurementOutcome::Null { post_state, .. } => {
                        events.push(TrialEvent {
                            time,
                            detector: m.detector.name().to_string(),
                            label: "null".to_string(),
                        });
                        match &m.on_null {
                            NullAction::Continue => state = post_state,
                            NullAction::Classify(class) => {
                                return Ok(TrialOutcome {
                                    events,
                                    classification: class.clone(),
                                    post_state: Some(post_state),
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(TrialOutcome {
        events,
        classification: FALLTHROUGH_CLASS.to_string(),
        post_state: Some(state),
    })
}

/// A leaf of the exact event tree.
#[derive(Debug, Clone)]
pub struct ScenarioLeaf {
    /// `(detector, outcome)` pairs along the branch.
    pub sequence: Vec<(String, StageOutcome)>,
    pub classification: String,
    pub probability: f64,
    pub post_state: Option<StateVector>,
}

/// Exhaustively enumerates every branch of a scenario, including
/// zero-probability clicks, so unreachable classifications report an exact
/// probability of zero. Leaf probabilities sum to one.
pub fn exact_tree(scenario: &Scenario) -> Result<Vec<ScenarioLeaf>> {
    let mut leaves = Vec::new();
    let mut weight = 1.0;
    if let Some(decay) = &scenario.decay {
        let survive = (-decay.t_cut / decay.tau).exp();
        leaves.push(ScenarioLeaf {
            sequence: Vec::new(),
            classification: decay.undecayed_class.clone(),
            probability: survive,
            post_state: None,
        });
        weight = 1.0 - survive;
    }
    walk(scenario, 0, scenario.initial.clone(), weight, Vec::new(), &mut leaves)?;
    Ok(leaves)
}

fn walk(
    scenario: &Scenario,
    step_idx: usize,
    state: StateVector,
    weight: f64,
    sequence: Vec<(String, StageOutcome)>,
    leaves: &mut Vec<ScenarioLeaf>,
) -> Result<()> {
    let mut state = state;
    for (offset, step) in scenario.steps[step_idx..].iter().enumerate() {
        match step {
            Step::Apply(u) => state = apply(u, &state)?,
            Step::Measure(m) => {
                let dist = outcome_probabilities(&state, &m.detector)?;
                for (label, p) in &dist.clicks {
                    let mut seq = sequence.clone();
                    seq.push((m.detector.name().to_string(), StageOutcome::Click(label.clone())));
                    leaves.push(ScenarioLeaf {
                        sequence: seq,
                        classification: m.on_click.classify(label),
                        probability: weight * p,
                        post_state: Some(StateVector::basis(state.space(), label)?),
                    });
                }
                if dist.null > NULL_THRESHOLD {
                    let reduced = null_update(&state, &m.detector)?;
                    let mut seq = sequence;
                    seq.push((m.detector.name().to_string(), StageOutcome::Null));
                    match &m.on_null {
                        NullAction::Continue => {
                            return walk(
                                scenario,
                                step_idx + offset + 1,
                                reduced,
                                weight * dist.null,
                                seq,
                                leaves,
                            );
                        }
                        NullAction::Classify(class) => {
                            leaves.push(ScenarioLeaf {
                                sequence: seq,
                                classification: class.clone(),
                                probability: weight * dist.null,
                                post_state: Some(reduced),
                            });
                        }
                    }
                }
                return Ok(());
            }
        }
    }
    leaves.push(ScenarioLeaf {
        sequence,
        classification: FALLTHROUGH_CLASS.to_string(),
        probability: weight,
        post_state: Some(state),
    });
    Ok(())
}

/// Exact probability of every classification. Declared alphabet entries are
/// present even at probability zero.
pub fn exact_distribution(scenario: &Scenario) -> Result<BTreeMap<String, f64>> {
    let mut dist: BTreeMap<String, f64> =
        scenario.alphabet.iter().map(|c| (c.clone(), 0.0)).collect();
    for leaf in exact_tree(scenario)? {
        *dist.entry(leaf.classification).or_insert(0.0) += leaf.probability;
    }
    Ok(dist)
}

// ---------------------------------------------------------------------------
// Renninger two-shell set-up
// ---------------------------------------------------------------------------

/// Isotropic emitter surrounded by a biased near shell and a complete far
/// shell. Angles are discretized into `n_cells` equal cells; the near shell
/// covers the first `n_cells·upper_fraction` of them.
#[derive(Debug, Clone)]
pub struct RenningerConfig {
    pub n_cells: usize,
    pub upper_fraction: f64,
    pub tau: f64,
    pub r_upper: f64,
    pub r_lower: f64,
    pub speed: f64,
    pub t_cut: f64,
}

impl Default for RenningerConfig {
    fn default() -> Self {
        Self {
            n_cells: 16,
            upper_fraction: 0.5,
            tau: 1.0,
            r_upper: 1.0,
            r_lower: 40.0,
            speed: 1.0,
            t_cut: 30.0,
        }
    }
}

impl RenningerConfig {
    /// The state-preparation variant: the near shell covers 99% of the
    /// solid angle, leaving one south-pole cell open.
    pub fn ninety_nine() -> Self {
        Self { n_cells: 100, upper_fraction: 0.99, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_cells < 2 || self.n_cells % 2 != 0 {
            return Err(Error::InvalidConfig(format!(
                "n_cells must be even and >= 2, got {}",
                self.n_cells
            )));
        }
        if !(self.upper_fraction > 0.0 && self.upper_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "upper_fraction must lie in (0, 1), got {}",
                self.upper_fraction
            )));
        }
        let exact_count = self.n_cells as f64 * self.upper_fraction;
        if (exact_count - exact_count.round()).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "n_cells * upper_fraction must be integral, got {exact_count}"
            )));
        }
        let k = exact_count.round() as usize;
        if k == 0 || k >= self.n_cells {
            return Err(Error::InvalidConfig(
                "coverage must leave both shells non-empty".to_string(),
            ));
        }
        if self.tau <= 0.0 || self.speed <= 0.0 || self.t_cut <= 0.0 {
            return Err(Error::InvalidConfig("tau, speed, t_cut must be positive".to_string()));
        }
        if self.r_lower <= self.r_upper {
            return Err(Error::InvalidConfig(format!(
                "r_lower ({}) must exceed r_upper ({})",
                self.r_lower, self.r_upper
            )));
        }
        Ok(())
    }

    pub fn upper_cell_count(&self) -> usize {
        (self.n_cells as f64 * self.upper_fraction).round() as usize
    }

    /// Non-fatal: the far shell sits close enough that it could fire before
    /// the cutoff, spoiling the delayed-verification reading.
    pub fn separation_warning(&self) -> Option<String> {
        if self.r_lower <= self.t_cut * self.speed {
            Some(format!(
                "far shell at r_lower = {} does not satisfy r_lower > t_cut*speed = {}",
                self.r_lower,
                self.t_cut * self.speed
            ))
        } else {
            None
        }
    }
}

pub fn renninger_scenario(cfg: &RenningerConfig) -> Result<Scenario> {
    cfg.validate()?;
    let labels: Vec<String> = (1..=cfg.n_cells).map(|i| format!("cell_{i}")).collect();
    let space = HilbertSpace::new(labels.clone())?;
    let k = cfg.upper_cell_count();
    let upper = Detector::new("upper", Arc::clone(&space), &labels[..k])?;
    let lower = Detector::new("lower", Arc::clone(&space), &labels[k..])?;
    Ok(Scenario {
        name: "renninger".to_string(),
        initial: StateVector::uniform(&space),
        decay: Some(DecaySpec {
            tau: cfg.tau,
            t_cut: cfg.t_cut,
            undecayed_class: "undecayed".to_string(),
        }),
        steps: vec![
            Step::Measure(MeasureStep {
                detector: upper,
                time: TimeSpec::AfterDecay { offset: cfg.r_upper / cfg.speed },
                on_click: ClickAction::Classify("upper_click".to_string()),
                on_null: NullAction::Continue,
            }),
            Step::Measure(MeasureStep {
                detector: lower,
                time: TimeSpec::AfterDecay { offset: cfg.r_lower / cfg.speed },
                on_click: ClickAction::Classify("null_then_lower".to_string()),
                on_null: NullAction::Continue,
            }),
        ],
        alphabet: vec![
            "upper_click".to_string(),
            "null_then_lower".to_string(),
            "undecayed".to_string(),
        ],
    })
}

pub fn run_renninger_trial(
    cfg: &RenningerConfig,
    rng: &mut impl UnitSource,
) -> Result<TrialOutcome> {
    run_trial(&renninger_scenario(cfg)?, rng)
}

// ---------------------------------------------------------------------------
// Elitzur-Vaidman bomb tester
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct BombTesterConfig {
    pub bomb_live: bool,
}

pub fn bomb_scenario(cfg: &BombTesterConfig) -> Result<Scenario> {
    let space = HilbertSpace::new(["1", "2"])?;
    let splitter = beam_splitter(&space)?;
    let fold = mirror(&space)?;
    let final_map: BTreeMap<String, String> =
        [("1".to_string(), "D1".to_string()), ("2".to_string(), "D2".to_string())].into();
    let final_step = Step::Measure(MeasureStep {
        detector: Detector::complete("final", Arc::clone(&space)),
        time: TimeSpec::Ordinal,
        on_click: ClickAction::ByLabel(final_map),
        on_null: NullAction::Continue,
    });

    let mut steps = vec![Step::Apply(splitter.clone())];
    if cfg.bomb_live {
        steps.push(Step::Measure(MeasureStep {
            detector: Detector::new("bomb", Arc::clone(&space), ["1"])?,
            time: TimeSpec::Ordinal,
            on_click: ClickAction::Classify("explosion".to_string()),
            on_null: NullAction::Continue,
        }));
    }
    steps.push(Step::Apply(fold));
    steps.push(Step::Apply(splitter));
    steps.push(final_step);

    Ok(Scenario {
        name: if cfg.bomb_live { "bomb-live" } else { "bomb-dud" }.to_string(),
        initial: StateVector::basis(&space, "1")?,
        decay: None,
        steps,
        alphabet: vec!["explosion".to_string(), "D1".to_string(), "D2".to_string()],
    })
}

pub fn run_bomb_trial(cfg: &BombTesterConfig, rng: &mut impl UnitSource) -> Result<TrialOutcome> {
    run_trial(&bomb_scenario(cfg)?, rng)
}

// ---------------------------------------------------------------------------
// Modified Stern-Gerlach set-up
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct SternGerlachConfig {
    pub c_up: Complex64,
    pub c_down: Complex64,
}

impl SternGerlachConfig {
    pub fn validate(&self) -> Result<()> {
        let total = self.c_up.norm_sqr() + self.c_down.norm_sqr();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "|c_up|^2 + |c_down|^2 must be 1, got {total}"
            )));
        }
        Ok(())
    }
}

pub fn sg_scenario(cfg: &SternGerlachConfig) -> Result<Scenario> {
    cfg.validate()?;
    let spin = HilbertSpace::new(["up", "down"])?;
    let path = HilbertSpace::new(["upper", "lower"])?;
    let coupler = spin_path_coupler(&spin, &path)?;
    let packet = StateVector::new(Arc::clone(&spin), vec![cfg.c_up, cfg.c_down])?;
    let initial = tensor_product(&packet, &StateVector::basis(&path, "upper")?)?;
    let product = Arc::clone(coupler.space());
    let detector = Detector::new("D", product, ["down\u{2297}lower"])?;
    Ok(Scenario {
        name: "stern-gerlach".to_string(),
        initial,
        decay: None,
        steps: vec![
            Step::Apply(coupler),
            Step::Measure(MeasureStep {
                detector,
                time: TimeSpec::Ordinal,
                on_click: ClickAction::Classify("down_captured".to_string()),
                on_null: NullAction::Classify("null_spin_up".to_string()),
            }),
        ],
        alphabet: vec!["down_captured".to_string(), "null_spin_up".to_string()],
    })
}

pub fn run_sg_trial(cfg: &SternGerlachConfig, rng: &mut impl UnitSource) -> Result<TrialOutcome> {
    run_trial(&sg_scenario(cfg)?, rng)
}

// ---------------------------------------------------------------------------
// Built-in registry
// ---------------------------------------------------------------------------

/// `(id, one-line description)` for every built-in scenario.
pub const BUILTIN_IDS: [(&str, &str); 5] = [
    ("renninger", "isotropic emitter, biased near shell, far shell catches the null branch"),
    ("renninger99", "near shell covering 99% of the solid angle; rare-null state preparation"),
    ("bomb-live", "Mach-Zehnder with an armed path detector in the lower arm"),
    ("bomb-dud", "Mach-Zehnder with a dud: interference sends every photon to D1"),
    ("stern-gerlach", "spin-down capture; a null prepares the pure spin-up beam"),
];

/// Builds a built-in scenario by identifier.
pub fn builtin(id: &str) -> Option<Scenario> {
    let scenario = match id {
        "renninger" => renninger_scenario(&RenningerConfig::default()),
        "renninger99" => {
            let mut sc = renninger_scenario(&RenningerConfig::ninety_nine());
            if let Ok(sc) = &mut sc {
                sc.name = "renninger99".to_string();
            }
            sc
        }
        "bomb-live" => bomb_scenario(&BombTesterConfig { bomb_live: true }),
        "bomb-dud" => bomb_scenario(&BombTesterConfig { bomb_live: false }),
        "stern-gerlach" => sg_scenario(&SternGerlachConfig {
            c_up: Complex64::new(0.6, 0.0),
            c_down: Complex64::new(0.8, 0.0),
        }),
        _ => return None,
    };
    Some(scenario.expect("built-in configs are valid"))
}
