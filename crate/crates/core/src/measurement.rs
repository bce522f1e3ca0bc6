//! Biased-detector measurement semantics.
//!
//! A [`Detector`] covers a subset of the basis labels; each covered label is
//! one distinguishable click outcome, and the uncovered remainder is the
//! null (no-click) branch. A click collapses the state to the clicked basis
//! vector; a null projects out the covered amplitudes and renormalizes what
//! is left — the interaction-free update that makes a biased detector
//! informative.
//!
//! Probabilities follow the relative-frequency rule `P(n) = |cₙ|²`
//! (normalized to the state's actual norm), with `P(null)` absorbing the
//! uncovered weight so every distribution sums to one exactly.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qstate::{ensure_same_space, fidelity_pure, HilbertSpace, StateVector};
use crate::rng::UnitSource;

/// Weight below which a null outcome is treated as impossible.
pub const NULL_THRESHOLD: f64 = 1e-12;
/// Normalization gate for measured states. Looser than the state-algebra
/// tolerance because scenario files may apply hand-rounded matrices.
const MEASURE_NORM_TOL: f64 = 1e-6;

/// A named, possibly incomplete set of orthogonal projectors: one projector
/// per covered basis label.
#[derive(Debug, Clone)]
pub struct Detector {
    name: String,
    space: Arc<HilbertSpace>,
    covered: Vec<bool>,          // by basis index
    coverage: Vec<String>,       // in label declaration order
}

impl Detector {
    pub fn new<I, S>(name: impl Into<String>, space: Arc<HilbertSpace>, coverage: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut covered = vec![false; space.dim()];
        let mut requested = BTreeSet::new();
        for label in coverage {
            let label = label.as_ref();
            let idx = space
                .index_of(label)
                .ok_or_else(|| Error::UnknownLabel { label: label.to_string() })?;
            covered[idx] = true;
            requested.insert(idx);
        }
        if requested.is_empty() {
            return Err(Error::EmptyCoverage);
        }
        let coverage = requested.iter().map(|&i| space.label_at(i).to_string()).collect();
        Ok(Self { name: name.into(), space, covered, coverage })
    }

    /// Covers every label: a proper, unbiased measurement.
    pub fn complete(name: impl Into<String>, space: Arc<HilbertSpace>) -> Self {
        let coverage = vec![true; space.dim()];
        let labels = space.labels().to_vec();
        Self { name: name.into(), space, covered: coverage, coverage: labels }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }

    /// Covered labels in basis declaration order (also the sampling order).
    pub fn coverage(&self) -> &[String] {
        &self.coverage
    }

    pub fn covers_index(&self, idx: usize) -> bool {
        self.covered[idx]
    }

    pub fn is_complete(&self) -> bool {
        self.covered.iter().all(|&c| c)
    }
}

/// Click/no-click probabilities of one detector against one state.
#[derive(Debug, Clone)]
pub struct OutcomeDistribution {
    /// `(label, probability)` for each covered label, in basis order.
    pub clicks: Vec<(String, f64)>,
    /// Probability that the detector does not fire.
    pub null: f64,
}

impl OutcomeDistribution {
    pub fn click_probability(&self, label: &str) -> f64 {
        self.clicks
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, p)| *p)
            .unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.clicks.iter().map(|(_, p)| p).sum::<f64>() + self.null
    }
}

/// One sampled measurement event.
#[derive(Debug, Clone)]
pub enum MeasurementOutcome {
    Click {
        label: String,
        post_state: StateVector,
        probability_used: f64,
    },
    Null {
        post_state: StateVector,
        probability_used: f64,
    },
}

impl MeasurementOutcome {
    pub fn post_state(&self) -> &StateVector {
        match self {
            Self::Click { post_state, .. } | Self::Null { post_state, .. } => post_state,
        }
    }

    pub fn probability_used(&self) -> f64 {
        match self {
            Self::Click { probability_used, .. } | Self::Null { probability_used, .. } => {
                *probability_used
            }
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Self::Null { .. })
    }
}

/// `P(n) = |cₙ|²` for covered labels, `P(null) = 1 − Σ` for the rest.
pub fn outcome_probabilities(psi: &StateVector, d: &Detector) -> Result<OutcomeDistribution> {
    ensure_same_space(psi.space(), d.space())?;
    psi.ensure_normalized(MEASURE_NORM_TOL)?;
    let norm_sqr: f64 = psi.amplitudes().iter().map(|c| c.norm_sqr()).sum();
    let mut clicks = Vec::with_capacity(d.coverage.len());
    let mut covered_total = 0.0;
    for (idx, amp) in psi.amplitudes().iter().enumerate() {
        if d.covered[idx] {
            let p = amp.norm_sqr() / norm_sqr;
            covered_total += p;
            clicks.push((psi.space().label_at(idx).to_string(), p));
        }
    }
    Ok(OutcomeDistribution { clicks, null: (1.0 - covered_total).max(0.0) })
}

/// Projects out the covered labels and renormalizes; relative phases of the
/// uncovered amplitudes are untouched and the covered entries become exact
/// zeros.
pub fn null_update(psi: &StateVector, d: &Detector) -> Result<StateVector> {
    ensure_same_space(psi.space(), d.space())?;
    psi.ensure_normalized(MEASURE_NORM_TOL)?;
    let mut reduced: Vec<Complex64> = psi.amplitudes().to_vec();
    for (idx, amp) in reduced.iter_mut().enumerate() {
        if d.covered[idx] {
            *amp = Complex64::ZERO;
        }
    }
    let weight: f64 = reduced.iter().map(|c| c.norm_sqr()).sum();
    if weight <= NULL_THRESHOLD {
        return Err(Error::NullImpossible { weight });
    }
    let inv = 1.0 / weight.sqrt();
    for amp in &mut reduced {
        *amp *= inv;
    }
    StateVector::new(Arc::clone(psi.space()), reduced)
}

/// Draws one outcome by inverse CDF over the covered labels in basis
/// declaration order, null branch last. A click collapses to the clicked
/// basis state; a null applies [`null_update`].
pub fn sample(
    psi: &StateVector,
    d: &Detector,
    rng: &mut impl UnitSource,
) -> Result<MeasurementOutcome> {
    let dist = outcome_probabilities(psi, d)?;
    let u = rng.next_unit();
    let mut acc = 0.0;
    let mut last_positive: Option<(&str, f64)> = None;
    for (label, p) in &dist.clicks {
        acc += p;
        if *p > 0.0 {
            last_positive = Some((label, *p));
        }
        if u < acc {
            return Ok(MeasurementOutcome::Click {
                label: label.clone(),
                post_state: StateVector::basis(psi.space(), label)?,
                probability_used: *p,
            });
        }
    }
    if dist.null > NULL_THRESHOLD {
        return Ok(MeasurementOutcome::Null {
            post_state: null_update(psi, d)?,
            probability_used: dist.null,
        });
    }
    // u fell into the rounding sliver past the last click edge of an
    // (effectively) complete detector; attribute it to the last live branch
    let (label, p) = last_positive.ok_or(Error::NullImpossible { weight: dist.null })?;
    Ok(MeasurementOutcome::Click {
        label: label.to_string(),
        post_state: StateVector::basis(psi.space(), label)?,
        probability_used: p,
    })
}

/// Samples once, then checks that an immediate repetition is certain to
/// reproduce the result: after a click the post-state must assign the clicked
/// label probability one (verified on the distribution, not by sampling);
/// after a null a second null update must leave the state unchanged.
pub fn verify_repeatable(
    psi: &StateVector,
    d: &Detector,
    rng: &mut impl UnitSource,
) -> Result<bool> {
    match sample(psi, d, rng)? {
        MeasurementOutcome::Click { label, post_state, .. } => {
            let again = outcome_probabilities(&post_state, d)?;
            Ok((again.click_probability(&label) - 1.0).abs() <= 1e-12)
        }
        MeasurementOutcome::Null { post_state, .. } => {
            let again = null_update(&post_state, d)?;
            Ok((fidelity_pure(&post_state, &again)? - 1.0).abs() <= 1e-9)
        }
    }
}

/// One step of an exhaustively enumerated staged measurement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StageOutcome {
    Click(String),
    Null,
}

impl std::fmt::Display for StageOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Click(label) => write!(f, "{label}"),
            Self::Null => write!(f, "null"),
        }
    }
}

/// A leaf of the staged event tree: the outcome sequence that reaches it and
/// its exact probability.
#[derive(Debug, Clone)]
pub struct StagedLeaf {
    pub sequence: Vec<StageOutcome>,
    pub probability: f64,
    /// State after the final event of the sequence.
    pub post_state: StateVector,
}

/// Exhaustively enumerates the event tree of measuring `stages` in order:
/// click branches terminate the sequence, null branches continue with the
/// updated state. Leaf probabilities sum to one.
pub fn staged_measure(psi: &StateVector, stages: &[Detector]) -> Result<Vec<StagedLeaf>> {
    for d in stages {
        ensure_same_space(psi.space(), d.space())?;
    }
    psi.ensure_normalized(MEASURE_NORM_TOL)?;
    let mut leaves = Vec::new();
    descend(psi, stages, 0, 1.0, Vec::new(), &mut leaves)?;
    Ok(leaves)
}

fn descend(
    state: &StateVector,
    stages: &[Detector],
    stage: usize,
    weight: f64,
    prefix: Vec<StageOutcome>,
    leaves: &mut Vec<StagedLeaf>,
) -> Result<()> {
    if stage == stages.len() {
        leaves.push(StagedLeaf {
            sequence: prefix,
            probability: weight,
            post_state: state.clone(),
        });
        return Ok(());
    }
    let detector = &stages[stage];
    let dist = outcome_probabilities(state, detector)?;
    for (label, p) in &dist.clicks {
        let mut seq = prefix.clone();
        seq.push(StageOutcome::Click(label.clone()));
        leaves.push(StagedLeaf {
            sequence: seq,
            probability: weight * p,
            post_state: StateVector::basis(state.space(), label)?,
        });
    }
    if dist.null > NULL_THRESHOLD {
        let reduced = null_update(state, detector)?;
        let mut seq = prefix;
        seq.push(StageOutcome::Null);
        descend(&reduced, stages, stage + 1, weight * dist.null, seq, leaves)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::TOL_EXACT;
    use crate::rng::{ForcedDraws, SplitMix64};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cells(n: usize) -> Arc<HilbertSpace> {
        HilbertSpace::new((1..=n).map(|i| format!("{i}"))).unwrap()
    }

    fn gamma(space: &Arc<HilbertSpace>) -> StateVector {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        StateVector::new(Arc::clone(space), vec![c(r, 0.0), c(0.0, r)]).unwrap()
    }

    #[test]
    fn uniform_four_with_half_coverage() {
        let sp = cells(4);
        let d = Detector::new("upper", Arc::clone(&sp), ["1", "2"]).unwrap();
        let dist = outcome_probabilities(&StateVector::uniform(&sp), &d).unwrap();
        assert!((dist.click_probability("1") - 0.25).abs() <= TOL_EXACT);
        assert!((dist.click_probability("2") - 0.25).abs() <= TOL_EXACT);
        assert!((dist.null - 0.5).abs() <= TOL_EXACT);
        assert!((dist.total() - 1.0).abs() <= TOL_EXACT);
    }

    #[test]
    fn bomb_detector_splits_even() {
        let sp = cells(2);
        let bomb = Detector::new("bomb", Arc::clone(&sp), ["1"]).unwrap();
        let dist = outcome_probabilities(&gamma(&sp), &bomb).unwrap();
        assert!((dist.click_probability("1") - 0.5).abs() <= TOL_EXACT);
        assert!((dist.null - 0.5).abs() <= TOL_EXACT);
    }

    #[test]
    fn weighted_spin_state_probabilities() {
        let sp = HilbertSpace::new(["up", "down"]).unwrap();
        let d = Detector::new("D", Arc::clone(&sp), ["down"]).unwrap();
        let psi = StateVector::new(Arc::clone(&sp), vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let dist = outcome_probabilities(&psi, &d).unwrap();
        assert!((dist.click_probability("down") - 0.64).abs() <= TOL_EXACT);
        assert!((dist.null - 0.36).abs() <= TOL_EXACT);
    }

    #[test]
    fn forced_low_draw_clicks_the_bomb() {
        let sp = cells(2);
        let bomb = Detector::new("bomb", Arc::clone(&sp), ["1"]).unwrap();
        let mut rng = ForcedDraws::new([0.3]);
        match sample(&gamma(&sp), &bomb, &mut rng).unwrap() {
            MeasurementOutcome::Click { label, post_state, probability_used } => {
                assert_eq!(label, "1");
                assert_eq!(post_state.amplitudes()[0], Complex64::ONE);
                assert!((probability_used - 0.5).abs() <= TOL_EXACT);
            }
            other => panic!("expected click, got {other:?}"),
        }
    }

    #[test]
    fn forced_high_draw_misses_the_bomb() {
        let sp = cells(2);
        let bomb = Detector::new("bomb", Arc::clone(&sp), ["1"]).unwrap();
        let mut rng = ForcedDraws::new([0.7]);
        let out = sample(&gamma(&sp), &bomb, &mut rng).unwrap();
        assert!(out.is_null());
        // |γ⟩ → |2⟩ with the relative phase i retained
        assert_eq!(out.post_state().amplitudes()[0], Complex64::ZERO);
        assert!((out.post_state().amplitudes()[1] - c(0.0, 1.0)).norm() <= TOL_EXACT);
    }

    #[test]
    fn complete_detector_never_returns_null() {
        let sp = cells(4);
        let d = Detector::complete("all", Arc::clone(&sp));
        let mut rng = SplitMix64::new(11);
        for _ in 0..1000 {
            assert!(!sample(&StateVector::uniform(&sp), &d, &mut rng).unwrap().is_null());
        }
        // a draw at the very top of the unit interval still clicks
        let mut top = ForcedDraws::new([1.0 - f64::EPSILON]);
        assert!(!sample(&StateVector::uniform(&sp), &d, &mut top).unwrap().is_null());
    }

    #[test]
    fn null_update_reduces_uniform_state_to_lower_half() {
        let sp = cells(4);
        let d = Detector::new("upper", Arc::clone(&sp), ["1", "2"]).unwrap();
        let out = null_update(&StateVector::uniform(&sp), &d).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(out.amplitudes()[0], Complex64::ZERO);
        assert_eq!(out.amplitudes()[1], Complex64::ZERO);
        assert!((out.amplitudes()[2] - c(r, 0.0)).norm() <= TOL_EXACT);
        assert!((out.amplitudes()[3] - c(r, 0.0)).norm() <= TOL_EXACT);
    }

    #[test]
    fn null_update_determines_spin_up() {
        let sp = HilbertSpace::new(["up", "down"]).unwrap();
        let d = Detector::new("D", Arc::clone(&sp), ["down"]).unwrap();
        let psi = StateVector::new(Arc::clone(&sp), vec![c(0.6, 0.0), c(0.8, 0.0)]).unwrap();
        let out = null_update(&psi, &d).unwrap();
        assert!((out.amplitudes()[0] - Complex64::ONE).norm() <= TOL_EXACT);
        assert_eq!(out.amplitudes()[1], Complex64::ZERO);
    }

    #[test]
    fn null_update_rejects_certain_detector() {
        let sp = cells(2);
        let d = Detector::complete("all", Arc::clone(&sp));
        let err = null_update(&gamma(&sp), &d).unwrap_err();
        assert!(matches!(err, Error::NullImpossible { .. }));
    }

    #[test]
    fn null_update_is_idempotent_projection() {
        let sp = cells(4);
        let d = Detector::new("upper", Arc::clone(&sp), ["1", "2"]).unwrap();
        let once = null_update(&StateVector::uniform(&sp), &d).unwrap();
        let twice = null_update(&once, &d).unwrap();
        assert_eq!(once.amplitudes(), twice.amplitudes());
        for idx in [0usize, 1] {
            assert_eq!(once.amplitudes()[idx], Complex64::ZERO);
        }
    }

    #[test]
    fn repeatable_on_covered_basis_state() {
        let sp = cells(2);
        let d = Detector::new("bomb", Arc::clone(&sp), ["1"]).unwrap();
        let one = StateVector::basis(&sp, "1").unwrap();
        let mut rng = SplitMix64::new(3);
        assert!(verify_repeatable(&one, &d, &mut rng).unwrap());
    }

    #[test]
    fn repeatable_on_null_branch() {
        let sp = cells(4);
        let d = Detector::new("upper", Arc::clone(&sp), ["1", "2"]).unwrap();
        // draw far above the covered half forces the null branch
        let mut rng = ForcedDraws::new([0.9]);
        assert!(verify_repeatable(&StateVector::uniform(&sp), &d, &mut rng).unwrap());
    }

    #[test]
    fn repeatable_for_random_states_and_detectors() {
        let mut rng = SplitMix64::new(0xACCE55);
        for trial in 0..1000 {
            let dim = 2 + (trial % 7) as usize;
            let sp = cells(dim);
            let raw: Vec<Complex64> = (0..dim)
                .map(|_| c(rng.next_unit() - 0.5, rng.next_unit() - 0.5))
                .collect();
            let psi =
                crate::qstate::normalize(&StateVector::new(Arc::clone(&sp), raw).unwrap())
                    .unwrap();
            let take = 1 + (rng.next_unit() * dim as f64) as usize;
            let coverage: Vec<String> = (1..=take.min(dim)).map(|i| format!("{i}")).collect();
            let d = Detector::new("d", Arc::clone(&sp), &coverage).unwrap();
            assert!(verify_repeatable(&psi, &d, &mut rng).unwrap());
        }
    }

    #[test]
    fn staged_halves_enumerate_four_leaves() {
        let sp = cells(4);
        let upper = Detector::new("upper", Arc::clone(&sp), ["1", "2"]).unwrap();
        let lower = Detector::new("lower", Arc::clone(&sp), ["3", "4"]).unwrap();
        let leaves = staged_measure(&StateVector::uniform(&sp), &[upper, lower]).unwrap();
        assert_eq!(leaves.len(), 4);
        let find = |seq: &[StageOutcome]| {
            leaves
                .iter()
                .find(|l| l.sequence == seq)
                .unwrap_or_else(|| panic!("missing {seq:?}"))
                .probability
        };
        assert!((find(&[StageOutcome::Click("1".into())]) - 0.25).abs() <= TOL_EXACT);
        assert!((find(&[StageOutcome::Click("2".into())]) - 0.25).abs() <= TOL_EXACT);
        assert!(
            (find(&[StageOutcome::Null, StageOutcome::Click("3".into())]) - 0.25).abs()
                <= TOL_EXACT
        );
        assert!(
            (find(&[StageOutcome::Null, StageOutcome::Click("4".into())]) - 0.25).abs()
                <= TOL_EXACT
        );
        let total: f64 = leaves.iter().map(|l| l.probability).sum();
        assert!((total - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn staged_single_complete_detector_is_born_rule() {
        let sp = cells(2);
        let d = Detector::complete("all", Arc::clone(&sp));
        let psi = StateVector::new(Arc::clone(&sp), vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let leaves = staged_measure(&psi, &[d]).unwrap();
        assert_eq!(leaves.len(), 2);
        assert!((leaves[0].probability - 0.36).abs() <= TOL_EXACT);
        assert!((leaves[1].probability - 0.64).abs() <= TOL_EXACT);
    }

    #[test]
    fn collapse_is_terminal() {
        let sp = cells(4);
        let d = Detector::new("upper", Arc::clone(&sp), ["1", "2"]).unwrap();
        let mut rng = SplitMix64::new(21);
        for _ in 0..200 {
            if let MeasurementOutcome::Click { label, post_state, .. } =
                sample(&StateVector::uniform(&sp), &d, &mut rng).unwrap()
            {
                let dist = outcome_probabilities(&post_state, &d).unwrap();
                assert_eq!(dist.click_probability(&label), 1.0);
            }
        }
    }

    #[test]
    fn empirical_frequencies_match_distribution() {
        let sp = cells(4);
        let d = Detector::new("upper", Arc::clone(&sp), ["1", "2"]).unwrap();
        let psi = StateVector::uniform(&sp);
        let dist = outcome_probabilities(&psi, &d).unwrap();
        let trials = 100_000u32;
        let mut rng = SplitMix64::new(0xBEEF);
        let mut clicks1 = 0u32;
        let mut clicks2 = 0u32;
        let mut nulls = 0u32;
        for _ in 0..trials {
            match sample(&psi, &d, &mut rng).unwrap() {
                MeasurementOutcome::Click { label, .. } if label == "1" => clicks1 += 1,
                MeasurementOutcome::Click { .. } => clicks2 += 1,
                MeasurementOutcome::Null { .. } => nulls += 1,
            }
        }
        let sigma3 = |p: f64| 3.0 * (p * (1.0 - p) / trials as f64).sqrt();
        let freq = |n: u32| n as f64 / trials as f64;
        assert!((freq(clicks1) - 0.25).abs() <= sigma3(0.25));
        assert!((freq(clicks2) - 0.25).abs() <= sigma3(0.25));
        assert!((freq(nulls) - dist.null).abs() <= sigma3(dist.null));
    }
}
