//! Seeded Monte Carlo experiments: cohorts of choosers who err when poorly
//! informed, and evaluators with heterogeneous self-interest weights and
//! consensus-biased beliefs who decide, for every information level on a
//! grid, whether to intervene.
//!
//! Everything is driven by counter-based ChaCha substreams — one stream per
//! (entity, information level) — so panels are reproducible byte-for-byte
//! from the config alone and adding entities never perturbs existing draws.

use std::io::{Read, Write};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::error::{check_unit_range, domain_err, Error, Result};
use crate::estimation::{
    chooser_choice, format_float, sample_draws, EstimationGame, Knowledge, STANDARD_K_GRID,
};
use crate::welfare::{
    optimal_policy, BeliefSet, CAProfile, OptionId, Policy, PopulationState, DEFAULT_TIE_TOL,
};

/// Distribution of the self-interest weight across simulated evaluators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PhiDistribution {
    /// Everyone shares one weight.
    Point { value: f64 },
    /// Uniform on [lo, hi].
    Uniform { lo: f64, hi: f64 },
    /// `v1` with probability `w`, otherwise `v2`.
    TwoPoint { v1: f64, v2: f64, w: f64 },
}

impl PhiDistribution {
    fn validate(&self) -> Result<()> {
        match *self {
            PhiDistribution::Point { value } => {
                check_unit_range("phi point value", value, 0.0, 1.0)
            }
            PhiDistribution::Uniform { lo, hi } => {
                check_unit_range("phi uniform lo", lo, 0.0, 1.0)?;
                check_unit_range("phi uniform hi", hi, 0.0, 1.0)?;
                if lo > hi {
                    return Err(domain_err!("phi uniform range has lo {lo} > hi {hi}"));
                }
                Ok(())
            }
            PhiDistribution::TwoPoint { v1, v2, w } => {
                check_unit_range("phi two-point v1", v1, 0.0, 1.0)?;
                check_unit_range("phi two-point v2", v2, 0.0, 1.0)?;
                check_unit_range("phi two-point weight", w, 0.0, 1.0)
            }
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            PhiDistribution::Point { value } => value,
            PhiDistribution::Uniform { lo, hi } => {
                if lo == hi {
                    lo
                } else {
                    rng.gen_range(lo..=hi)
                }
            }
            PhiDistribution::TwoPoint { v1, v2, w } => {
                if rng.gen_bool(w) {
                    v1
                } else {
                    v2
                }
            }
        }
    }
}

/// Lottery parameterization shared by every simulated choice problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffSpec {
    pub loss_prob: f64,
    pub safe_payoff: f64,
    pub loss_payoff: f64,
    pub win_payoff: f64,
}

impl Default for PayoffSpec {
    fn default() -> Self {
        let g = EstimationGame::standard(Knowledge::Exact);
        Self {
            loss_prob: g.loss_prob,
            safe_payoff: g.safe_payoff,
            loss_payoff: g.loss_payoff,
            win_payoff: g.win_payoff,
        }
    }
}

impl PayoffSpec {
    pub fn game(&self, knowledge: Knowledge) -> Result<EstimationGame> {
        EstimationGame::new(
            knowledge,
            self.loss_prob,
            self.safe_payoff,
            self.loss_payoff,
            self.win_payoff,
        )
    }
}

/// Which population state the evaluators plug into the freedom welfare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MistakeModel {
    /// The realized cohort state: evaluators see the actual mistake rates.
    #[default]
    Empirical,
    /// Evaluators apply the cohort's conditional mistake rates to their own
    /// (biased) belief about the preference split.
    BeliefBased,
}

/// Full description of one simulated experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub n_choosers: usize,
    pub n_cas: usize,
    /// Population share that genuinely prefers option One (at full
    /// information).
    pub true_pi: f64,
    pub phi_distribution: PhiDistribution,
    /// Additive false-consensus shift: evaluators preferring One believe
    /// `true_pi + b`, the others `true_pi - b`, clamped to [0, 1].
    pub consensus_bias: f64,
    pub k_grid: Vec<Knowledge>,
    pub payoffs: PayoffSpec,
    pub mistake_model: MistakeModel,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_choosers: 4000,
            n_cas: 600,
            true_pi: 0.3,
            phi_distribution: PhiDistribution::Uniform { lo: 0.0, hi: 1.0 },
            consensus_bias: 0.1,
            k_grid: STANDARD_K_GRID.to_vec(),
            payoffs: PayoffSpec::default(),
            mistake_model: MistakeModel::Empirical,
            seed: 42,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_choosers == 0 || self.n_cas == 0 {
            return Err(domain_err!(
                "simulation needs at least one chooser and one evaluator"
            ));
        }
        check_unit_range("true_pi", self.true_pi, 0.0, 1.0)?;
        check_unit_range("consensus_bias", self.consensus_bias, -1.0, 1.0)?;
        self.phi_distribution.validate()?;
        if self.k_grid.is_empty() {
            return Err(domain_err!("k_grid must not be empty"));
        }
        self.payoffs.game(Knowledge::Exact)?;
        Ok(())
    }
}

/// Reads a [`SimConfig`] from a JSON document; omitted fields take the
/// defaults.
pub fn read_sim_config<R: Read>(reader: R) -> Result<SimConfig> {
    let cfg: SimConfig = serde_json::from_reader(reader)?;
    cfg.validate()?;
    Ok(cfg)
}

// ---------------------------------------------------------------------------
// Substream derivation

const TAG_CHOOSER: u64 = 0;
const TAG_CA: u64 = 1;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// One independent ChaCha substream per (tag, grid position, entity): the
/// 64-bit config seed expands to the cipher key, and the stream counter
/// packs the coordinates, so streams never collide or overlap.
fn substream(seed: u64, tag: u64, k_idx: usize, entity: usize) -> ChaCha12Rng {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    debug_assert!(k_idx < (1 << 8) && entity < (1 << 54));
    let mut rng = ChaCha12Rng::from_seed(key);
    rng.set_stream(tag << 62 | (k_idx as u64) << 54 | entity as u64);
    rng
}

// ---------------------------------------------------------------------------
// Panel records

/// One chooser's realized draw and decision at one information level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChooserRecord {
    pub chooser_id: usize,
    pub k: Knowledge,
    /// Observed loss count; absent under exact knowledge.
    pub n_observed: Option<u32>,
    pub choice: OptionId,
    pub true_pref: OptionId,
}

/// One evaluator's intervention decision at one information level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaRecord {
    pub ca_id: usize,
    pub k: Knowledge,
    pub ca_pref: OptionId,
    pub pi_belief: f64,
    pub intervened: bool,
    /// Imposed option; present exactly when `intervened`.
    pub imposed: Option<OptionId>,
}

/// A full simulated experiment: evaluator decisions, chooser behavior, and
/// the realized population state per information level.
#[derive(Debug, Clone, PartialEq)]
pub struct SimPanel {
    pub cas: Vec<CaRecord>,
    pub choosers: Vec<ChooserRecord>,
    pub populations: Vec<(Knowledge, PopulationState)>,
}

/// An evaluator as drawn by the simulator: taste, self-interest weight, and
/// consensus-biased belief about the preference split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimCa {
    pub profile: CAProfile,
    /// Believed share of choosers preferring option One.
    pub pi_belief: f64,
}

// ---------------------------------------------------------------------------
// Simulation

/// Simulates the chooser cohort for one information level: each chooser
/// draws a true preference (One with probability `true_pi`), observes a
/// loss count, and picks via the posterior-mean rule. Exact knowledge makes
/// choices coincide with preferences, so the realized mistake rates are
/// exactly zero there.
pub fn simulate_choosers(
    cfg: &SimConfig,
    k_idx: usize,
) -> Result<(Vec<ChooserRecord>, PopulationState)> {
    cfg.validate()?;
    let k = *cfg.k_grid.get(k_idx).ok_or_else(|| {
        domain_err!(
            "k_idx {k_idx} out of range for grid of {}",
            cfg.k_grid.len()
        )
    })?;
    let game = cfg.payoffs.game(k)?;

    let records: Vec<ChooserRecord> = (0..cfg.n_choosers)
        .map(|chooser_id| {
            let mut rng = substream(cfg.seed, TAG_CHOOSER, k_idx, chooser_id);
            let true_pref = if rng.gen_bool(cfg.true_pi) {
                OptionId::One
            } else {
                OptionId::Two
            };
            let (n_observed, choice) = match k {
                Knowledge::Exact => (None, true_pref),
                Knowledge::Draws(_) => {
                    let n = sample_draws(&game, &mut rng)?;
                    (Some(n), chooser_choice(&game, n)?)
                }
            };
            Ok(ChooserRecord {
                chooser_id,
                k,
                n_observed,
                choice,
                true_pref,
            })
        })
        .collect::<Result<_>>()?;

    let n = records.len() as f64;
    let prefer_one = records
        .iter()
        .filter(|r| r.true_pref == OptionId::One)
        .count() as f64;
    let one_to_two = records
        .iter()
        .filter(|r| r.true_pref == OptionId::One && r.choice == OptionId::Two)
        .count() as f64;
    let two_to_one = records
        .iter()
        .filter(|r| r.true_pref == OptionId::Two && r.choice == OptionId::One)
        .count() as f64;
    // The count inequalities (one_to_two <= prefer_one, two_to_one <=
    // n - prefer_one) survive division by a common n except at the saturated
    // boundary, where (n-a)/n can land one ulp above 1 - a/n; min() restores
    // the mathematically exact relation without disturbing interior values.
    let pi = prefer_one / n;
    let eps_x = (one_to_two / n).min(pi);
    let eps_y = (two_to_one / n).min(1.0 - pi);
    let pop = PopulationState::new(pi, eps_x, eps_y)?;
    Ok((records, pop))
}

/// Draws the evaluator roster: preference (One with probability `true_pi`),
/// self-interest weight from `phi_distribution`, and the consensus-biased
/// belief `clamp(true_pi ± b)`. Draws are independent of the information
/// grid, matching a within-subject design.
pub fn simulate_cas(cfg: &SimConfig) -> Result<Vec<SimCa>> {
    cfg.validate()?;
    (0..cfg.n_cas)
        .map(|ca_id| {
            let mut rng = substream(cfg.seed, TAG_CA, 0, ca_id);
            let preferred = if rng.gen_bool(cfg.true_pi) {
                OptionId::One
            } else {
                OptionId::Two
            };
            let phi = cfg.phi_distribution.sample(&mut rng);
            let bias = match preferred {
                OptionId::One => cfg.consensus_bias,
                OptionId::Two => -cfg.consensus_bias,
            };
            let pi_belief = (cfg.true_pi + bias).clamp(0.0, 1.0);
            Ok(SimCa {
                profile: CAProfile::new(preferred, phi)?,
                pi_belief,
            })
        })
        .collect()
}

/// The population state an evaluator believes in: the cohort's conditional
/// mistake rates applied to the evaluator's own belief about the split.
pub fn belief_population(pi_belief: f64, empirical: &PopulationState) -> Result<PopulationState> {
    check_unit_range("pi_belief", pi_belief, 0.0, 1.0)?;
    empirical.validate()?;
    // Conditional mistake rates; a class nobody occupies contributes no
    // mistakes, so its rate is zero.
    let r_x = if empirical.pi > 0.0 {
        empirical.eps_x / empirical.pi
    } else {
        0.0
    };
    let r_y = if empirical.pi < 1.0 {
        empirical.eps_y / (1.0 - empirical.pi)
    } else {
        0.0
    };
    PopulationState::new(pi_belief, r_x * pi_belief, r_y * (1.0 - pi_belief))
}

/// Belief pair for one evaluator at one information level: the preference
/// belief plus the implied belief about the share *choosing* One.
pub fn ca_belief_set(pi_belief: f64, empirical: &PopulationState) -> Result<BeliefSet> {
    let pop = belief_population(pi_belief, empirical)?;
    BeliefSet::new(pi_belief, pop.pi_prime())
}

/// Runs the full experiment: simulates each information level's chooser
/// cohort, then records every evaluator's optimal policy against it.
/// Deterministic for a given config, including the seed.
pub fn run_experiment(cfg: &SimConfig) -> Result<SimPanel> {
    cfg.validate()?;
    let cas = simulate_cas(cfg)?;

    let per_k: Vec<(Vec<ChooserRecord>, PopulationState)> = (0..cfg.k_grid.len())
        .into_par_iter()
        .map(|k_idx| simulate_choosers(cfg, k_idx))
        .collect::<Result<_>>()?;

    let mut choosers = Vec::with_capacity(cfg.n_choosers * cfg.k_grid.len());
    let mut populations = Vec::with_capacity(cfg.k_grid.len());
    let mut ca_records = Vec::with_capacity(cfg.n_cas * cfg.k_grid.len());
    for (k_idx, (records, pop)) in per_k.into_iter().enumerate() {
        let k = cfg.k_grid[k_idx];
        for (ca_id, ca) in cas.iter().enumerate() {
            let eval_pop = match cfg.mistake_model {
                MistakeModel::Empirical => pop,
                MistakeModel::BeliefBased => belief_population(ca.pi_belief, &pop)?,
            };
            let decision =
                optimal_policy(&ca.profile, ca.pi_belief, &eval_pop, DEFAULT_TIE_TOL)?.decision;
            let imposed = match decision {
                Policy::Impose(option) => Some(option),
                Policy::LaissezFaire => None,
            };
            ca_records.push(CaRecord {
                ca_id,
                k,
                ca_pref: ca.profile.preferred,
                pi_belief: ca.pi_belief,
                intervened: imposed.is_some(),
                imposed,
            });
        }
        choosers.extend(records);
        populations.push((k, pop));
    }

    Ok(SimPanel {
        cas: ca_records,
        choosers,
        populations,
    })
}

// ---------------------------------------------------------------------------
// Rates

/// Intervention rate at one information level with an exact binomial
/// (Clopper–Pearson) 95% interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub k: Knowledge,
    pub interventions: u64,
    pub total: u64,
    pub rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

fn clopper_pearson(x: u64, n: u64, alpha: f64) -> Result<(f64, f64)> {
    let beta_inv = |a: f64, b: f64, p: f64| -> Result<f64> {
        Beta::new(a, b)
            .map(|d| d.inverse_cdf(p))
            .map_err(|e| Error::Numeric(format!("Clopper-Pearson beta quantile: {e}")))
    };
    let lo = if x == 0 {
        0.0
    } else {
        beta_inv(x as f64, (n - x + 1) as f64, alpha / 2.0)?
    };
    let hi = if x == n {
        1.0
    } else {
        beta_inv((x + 1) as f64, (n - x) as f64, 1.0 - alpha / 2.0)?
    };
    Ok((lo, hi))
}

/// Per-information-level intervention rates over the panel's evaluator
/// records, in the panel's grid order.
pub fn intervention_rate_curve(panel: &SimPanel) -> Result<Vec<RatePoint>> {
    if panel.cas.is_empty() {
        return Err(domain_err!("panel has no evaluator records"));
    }
    let mut order: Vec<Knowledge> = Vec::new();
    for rec in &panel.cas {
        if !order.contains(&rec.k) {
            order.push(rec.k);
        }
    }
    order
        .into_iter()
        .map(|k| {
            let total = panel.cas.iter().filter(|r| r.k == k).count() as u64;
            let interventions = panel
                .cas
                .iter()
                .filter(|r| r.k == k && r.intervened)
                .count() as u64;
            let (ci_lo, ci_hi) = clopper_pearson(interventions, total, 0.05)?;
            Ok(RatePoint {
                k,
                interventions,
                total,
                rate: interventions as f64 / total as f64,
                ci_lo,
                ci_hi,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// CSV export

impl SimPanel {
    /// Evaluator records as CSV: `ca_id,ca_pref,pi,intervened,imposed,k`.
    /// The first five columns follow the estimation input schema (`imposed`
    /// is `NA` on laissez-faire rows); `k` renders exact knowledge as `inf`.
    pub fn write_cas_csv<W: Write>(&self, digits: Option<usize>, mut out: W) -> Result<()> {
        writeln!(out, "ca_id,ca_pref,pi,intervened,imposed,k")?;
        for r in &self.cas {
            let imposed = match r.imposed {
                Some(option) => option.code().to_string(),
                None => "NA".to_string(),
            };
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.ca_id,
                r.ca_pref.code(),
                format_float(r.pi_belief, digits),
                u8::from(r.intervened),
                imposed,
                r.k,
            )?;
        }
        Ok(())
    }

    /// Chooser records as CSV: `chooser_id,k,n_observed,choice,true_pref`
    /// (`n_observed` empty under exact knowledge).
    pub fn write_choosers_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "chooser_id,k,n_observed,choice,true_pref")?;
        for r in &self.choosers {
            let n = r.n_observed.map(|n| n.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{}",
                r.chooser_id,
                r.k,
                n,
                r.choice.code(),
                r.true_pref.code(),
            )?;
        }
        Ok(())
    }
}

/// Rate curve as CSV: `k,interventions,total,rate,ci_lo,ci_hi`.
pub fn write_rate_curve_csv<W: Write>(
    rates: &[RatePoint],
    digits: Option<usize>,
    mut out: W,
) -> Result<()> {
    writeln!(out, "k,interventions,total,rate,ci_lo,ci_hi")?;
    for r in rates {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.k,
            r.interventions,
            r.total,
            format_float(r.rate, digits),
            format_float(r.ci_lo, digits),
            format_float(r.ci_hi, digits),
        )?;
    }
    Ok(())
}
