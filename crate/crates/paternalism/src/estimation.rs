//! Beliefs and choices in an estimation game.
//!
//! A chooser must pick between a safe payment and a lottery whose loss
//! probability `p` is unknown to them. Before choosing, the chooser observes
//! `k` independent Bernoulli(p) draws (or learns `p` outright). With a
//! uniform prior over the loss probability, observing `n` losses in `k`
//! draws yields a Beta(n + 1, k - n + 1) posterior.
//!
//! From the modeller's side, `n` itself is binomial, so the belief an
//! observer should anticipate the chooser holding is the binomial mixture of
//! those Beta posteriors — the *marginal posterior*. This module evaluates
//! that density by two independent routes (a log-space mixture sum and a
//! hypergeometric-style polynomial form), summarizes it (moments, median,
//! mode, accuracy against a reference probability, divergence from the
//! uniform prior), and implements the induced choice rule together with its
//! mistake probability.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::distributions::Distribution;
use rand::Rng;
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use statrs::function::gamma::ln_gamma;

use crate::error::{check_unit_range, domain_err, Error, Result};
use crate::quad;
use crate::welfare::OptionId;

/// Default number of base quadrature panels for posterior summaries.
pub const DEFAULT_QUAD_PANELS: usize = 4096;

/// The information grid used throughout the examples and the simulator:
/// draw counts 0, 1, 2, 5, 10, 25, 50, 1000, plus exact knowledge of `p`.
pub const STANDARD_K_GRID: [Knowledge; 9] = [
    Knowledge::Draws(0),
    Knowledge::Draws(1),
    Knowledge::Draws(2),
    Knowledge::Draws(5),
    Knowledge::Draws(10),
    Knowledge::Draws(25),
    Knowledge::Draws(50),
    Knowledge::Draws(1000),
    Knowledge::Exact,
];

/// How much a chooser learns about the loss probability before deciding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Knowledge {
    /// The chooser observes this many independent Bernoulli(p) draws.
    Draws(u32),
    /// The chooser learns `p` itself (the infinite-information limit).
    Exact,
}

impl Knowledge {
    /// Draw count for finite knowledge, `None` for exact knowledge.
    pub fn draws(self) -> Option<u32> {
        match self {
            Knowledge::Draws(k) => Some(k),
            Knowledge::Exact => None,
        }
    }
}

impl fmt::Display for Knowledge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Knowledge::Draws(k) => write!(f, "{k}"),
            Knowledge::Exact => write!(f, "inf"),
        }
    }
}

impl FromStr for Knowledge {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("exact") || t == "∞" {
            return Ok(Knowledge::Exact);
        }
        t.parse::<u32>().map(Knowledge::Draws).map_err(|_| {
            Error::Parse(format!(
                "invalid draw count {t:?} (expected an integer, \"inf\", or \"exact\")"
            ))
        })
    }
}

impl Serialize for Knowledge {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Knowledge::Draws(k) => serializer.serialize_u32(*k),
            Knowledge::Exact => serializer.serialize_str("exact"),
        }
    }
}

impl<'de> Deserialize<'de> for Knowledge {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct KnowledgeVisitor;

        impl de::Visitor<'_> for KnowledgeVisitor {
            type Value = Knowledge;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a nonnegative draw count or the string \"exact\"/\"inf\"")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Knowledge, E> {
                u32::try_from(v)
                    .map(Knowledge::Draws)
                    .map_err(|_| E::custom(format!("draw count {v} out of range")))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Knowledge, E> {
                u32::try_from(v)
                    .map(Knowledge::Draws)
                    .map_err(|_| E::custom(format!("draw count {v} out of range")))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Knowledge, E> {
                if v.fract() == 0.0 && (0.0..=u32::MAX as f64).contains(&v) {
                    Ok(Knowledge::Draws(v as u32))
                } else {
                    Err(E::custom(format!(
                        "draw count {v} is not a nonnegative integer"
                    )))
                }
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Knowledge, E> {
                Knowledge::from_str(v).map_err(E::custom)
            }
        }

        deserializer.deserialize_any(KnowledgeVisitor)
    }
}

/// The decision problem faced by a chooser: a safe payment against a lottery
/// that pays `loss_payoff` with probability `p` and `win_payoff` otherwise.
///
/// [`OptionId::One`] is the safe payment, [`OptionId::Two`] the lottery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationGame {
    pub knowledge: Knowledge,
    /// True loss probability of the lottery.
    pub loss_prob: f64,
    /// Payment for declining the lottery.
    pub safe_payoff: f64,
    /// Lottery payoff when the loss event occurs.
    pub loss_payoff: f64,
    /// Lottery payoff when the loss event does not occur.
    pub win_payoff: f64,
}

impl EstimationGame {
    pub fn new(
        knowledge: Knowledge,
        loss_prob: f64,
        safe_payoff: f64,
        loss_payoff: f64,
        win_payoff: f64,
    ) -> Result<Self> {
        check_unit_range("loss_prob", loss_prob, 0.0, 1.0)?;
        if !(loss_payoff <= safe_payoff && safe_payoff <= win_payoff) {
            return Err(domain_err!(
                "payoffs must satisfy loss_payoff <= safe_payoff <= win_payoff, \
                 got {loss_payoff}, {safe_payoff}, {win_payoff}"
            ));
        }
        Ok(Self {
            knowledge,
            loss_prob,
            safe_payoff,
            loss_payoff,
            win_payoff,
        })
    }

    /// The default parameterization used in the examples and simulator:
    /// loss probability 0.2, safe payment 15, lottery payoffs 0 and 20.
    pub fn standard(knowledge: Knowledge) -> Self {
        Self {
            knowledge,
            loss_prob: 0.2,
            safe_payoff: 15.0,
            loss_payoff: 0.0,
            win_payoff: 20.0,
        }
    }

    fn lottery_value(&self, loss_prob: f64) -> f64 {
        // Anchored form: exact when the two lottery payoffs coincide, so
        // degenerate games tie instead of picking up rounding noise.
        self.loss_payoff + (1.0 - loss_prob) * (self.win_payoff - self.loss_payoff)
    }
}

/// Beta posterior parameters after observing `n` losses in `k` draws under a
/// uniform prior: Beta(n + 1, k - n + 1).
pub fn beta_posterior_params(n: u32, k: u32) -> Result<(f64, f64)> {
    if n > k {
        return Err(domain_err!(
            "observed losses n = {n} exceed draw count k = {k}"
        ));
    }
    Ok((f64::from(n) + 1.0, f64::from(k - n) + 1.0))
}

/// Closed form for the mean of the marginal posterior after `k` draws:
/// `(k p + 1) / (k + 2)`.
///
/// `p` is assumed to lie in `[0, 1]`.
pub fn marginal_mean_closed(k: u32, p: f64) -> f64 {
    (f64::from(k) * p + 1.0) / (f64::from(k) + 2.0)
}

/// Which formula evaluates the marginal posterior density.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdfMethod {
    /// Binomial mixture of Beta posteriors, accumulated in log space.
    Sum,
    /// Closed-form polynomial with hypergeometric-style coefficients.
    Hypergeometric,
    /// `Hypergeometric` for k <= 50, `Sum` above.
    Auto,
}

fn xlogy(e: u32, y: f64) -> f64 {
    if e == 0 {
        0.0
    } else if y == 0.0 {
        f64::NEG_INFINITY
    } else {
        f64::from(e) * y.ln()
    }
}

/// Streaming log-sum-exp: accumulates `ln Σ exp(t_i)` without materializing
/// the term list, rescaling on the fly when a new maximum arrives.
struct LogSumExp {
    max: f64,
    acc: f64,
}

impl LogSumExp {
    fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            acc: 0.0,
        }
    }

    fn push(&mut self, lt: f64) {
        if lt == f64::NEG_INFINITY {
            return;
        }
        if self.acc == 0.0 {
            self.max = lt;
            self.acc = 1.0;
        } else if lt <= self.max {
            self.acc += (lt - self.max).exp();
        } else {
            self.acc = self.acc * (self.max - lt).exp() + 1.0;
            self.max = lt;
        }
    }

    /// `Σ exp(t_i)` in linear scale (0 when nothing was pushed).
    fn sum(&self) -> f64 {
        self.ln_sum().exp()
    }

    /// `ln Σ exp(t_i)` (−∞ when nothing was pushed).
    fn ln_sum(&self) -> f64 {
        if self.acc == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.acc.ln()
        }
    }
}

/// Mixture-sum evaluator: f(x) = Σ_n BetaPdf(x; n+1, k-n+1) · BinomPmf(n; k, p),
/// with the x-independent part of each log term precomputed.
struct SumEvaluator {
    k: u32,
    log_coeffs: Vec<f64>,
}

impl SumEvaluator {
    fn new(k: u32, p: f64) -> Self {
        let kf = f64::from(k);
        let lg_k2 = ln_gamma(kf + 2.0);
        let lg_k1 = ln_gamma(kf + 1.0);
        let log_coeffs = (0..=k)
            .map(|n| {
                lg_k2 + lg_k1
                    - 2.0 * ln_gamma(f64::from(n) + 1.0)
                    - 2.0 * ln_gamma(f64::from(k - n) + 1.0)
                    + xlogy(n, p)
                    + xlogy(k - n, 1.0 - p)
            })
            .collect();
        Self { k, log_coeffs }
    }

    fn eval(&self, x: f64) -> f64 {
        let ln_x = if x > 0.0 { x.ln() } else { f64::NEG_INFINITY };
        let ln_1mx = if x < 1.0 {
            (1.0 - x).ln()
        } else {
            f64::NEG_INFINITY
        };
        let mut lse = LogSumExp::new();
        for (n, &c) in self.log_coeffs.iter().enumerate() {
            if c == f64::NEG_INFINITY {
                continue;
            }
            let n = n as u32;
            let lx = if n == 0 { 0.0 } else { f64::from(n) * ln_x };
            let l1 = if n == self.k {
                0.0
            } else {
                f64::from(self.k - n) * ln_1mx
            };
            lse.push(c + lx + l1);
        }
        lse.sum()
    }
}

/// Polynomial evaluator:
/// f(x) = (k+1) (1-p)^k (1-x)^k Σ_j C(k,j)² w^j with w = p x / ((1-p)(1-x)).
///
/// Binomial coefficients come from the exact multiplicative recurrence; the
/// polynomial is accumulated in log space so large `w` (x near 1) cannot
/// overflow.
struct HyperEvaluator {
    k: u32,
    p: f64,
    ln_k1: f64,
    log_binom: Vec<f64>,
}

impl HyperEvaluator {
    fn new(k: u32, p: f64) -> Self {
        let mut log_binom = Vec::with_capacity(k as usize + 1);
        log_binom.push(0.0);
        for j in 1..=k {
            let prev = log_binom[j as usize - 1];
            log_binom.push(prev + f64::from(k - j + 1).ln() - f64::from(j).ln());
        }
        Self {
            k,
            p,
            ln_k1: (f64::from(k) + 1.0).ln(),
            log_binom,
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let (k, p) = (self.k, self.p);
        // Degenerate draw distributions collapse the polynomial to a single
        // Beta density; the general path below would form w = inf * 0 here.
        if p == 1.0 {
            return (self.ln_k1 + xlogy(k, x)).exp();
        }
        if x == 1.0 {
            return (self.ln_k1 + xlogy(k, p)).exp();
        }
        let ln_w = if p == 0.0 || x == 0.0 {
            f64::NEG_INFINITY
        } else {
            p.ln() + x.ln() - (1.0 - p).ln() - (1.0 - x).ln()
        };
        let mut lse = LogSumExp::new();
        for (j, &lb) in self.log_binom.iter().enumerate() {
            let lw = if j == 0 { 0.0 } else { j as f64 * ln_w };
            lse.push(2.0 * lb + lw);
        }
        // Combine in log scale: near x = 1 the polynomial sum overflows and
        // the (1-x)^k prefactor underflows even though their product is a
        // moderate density value.
        let ln_pre = self.ln_k1 + xlogy(k, 1.0 - p) + xlogy(k, 1.0 - x);
        (ln_pre + lse.ln_sum()).exp()
    }
}

enum PdfEvaluator {
    Sum(SumEvaluator),
    Hyper(HyperEvaluator),
}

impl PdfEvaluator {
    fn new(k: u32, p: f64, method: PdfMethod) -> Self {
        match method {
            PdfMethod::Sum => PdfEvaluator::Sum(SumEvaluator::new(k, p)),
            PdfMethod::Hypergeometric => PdfEvaluator::Hyper(HyperEvaluator::new(k, p)),
            PdfMethod::Auto => {
                if k <= 50 {
                    PdfEvaluator::Hyper(HyperEvaluator::new(k, p))
                } else {
                    PdfEvaluator::Sum(SumEvaluator::new(k, p))
                }
            }
        }
    }

    fn eval(&self, x: f64) -> f64 {
        match self {
            PdfEvaluator::Sum(e) => e.eval(x),
            PdfEvaluator::Hyper(e) => e.eval(x),
        }
    }
}

/// Density at `x` of the marginal posterior over the loss probability after
/// `k` draws with true loss probability `p`.
pub fn marginal_posterior_pdf(k: u32, p: f64, x: f64, method: PdfMethod) -> Result<f64> {
    check_unit_range("p", p, 0.0, 1.0)?;
    check_unit_range("x", x, 0.0, 1.0)?;
    Ok(PdfEvaluator::new(k, p, method).eval(x))
}

/// Location and accuracy summary of a belief distribution over the loss
/// probability.
///
/// `mae`/`rmse` measure distance to a reference probability; `kl` is the
/// divergence from the uniform prior (infinite for a point mass); `w1` is
/// the 1-Wasserstein distance to the uniform prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorSummary {
    pub mean: f64,
    pub median: f64,
    /// `None` when the density has no unique maximizer (the uniform case).
    pub mode: Option<f64>,
    pub variance: f64,
    pub mae: f64,
    pub rmse: f64,
    pub kl: f64,
    pub w1: f64,
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618033988749895;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Summarizes the belief distribution implied by `knowledge` about a lottery
/// with true loss probability `p`, scoring accuracy against `ref_p`.
///
/// Finite-knowledge summaries integrate the marginal posterior with an
/// adaptive Gauss–Legendre mesh of at least `quad_panels` base panels
/// (minimum 64); the median is found by bisecting the quadrature CDF to
/// 1e-10 and the mode by a grid scan refined with golden-section search.
/// Exact knowledge is the point mass at `p` and is summarized in closed
/// form.
pub fn posterior_summary(
    knowledge: Knowledge,
    p: f64,
    ref_p: f64,
    quad_panels: usize,
) -> Result<PosteriorSummary> {
    check_unit_range("p", p, 0.0, 1.0)?;
    check_unit_range("ref_p", ref_p, 0.0, 1.0)?;
    let k = match knowledge {
        Knowledge::Exact => {
            return Ok(PosteriorSummary {
                mean: p,
                median: p,
                mode: Some(p),
                variance: 0.0,
                mae: (p - ref_p).abs(),
                rmse: (p - ref_p).abs(),
                kl: f64::INFINITY,
                w1: 0.5 * (p * p + (1.0 - p) * (1.0 - p)),
            });
        }
        Knowledge::Draws(k) => k,
    };
    if quad_panels < 64 {
        return Err(domain_err!(
            "quad_panels = {quad_panels} is below the minimum of 64"
        ));
    }

    let pdf = PdfEvaluator::new(k, p, PdfMethod::Auto);
    let f = |x: f64| pdf.eval(x);
    // Force a mesh edge at ref_p so the |x - ref_p| kink never falls inside
    // a panel.
    let panels = quad::adaptive_mesh(f, quad_panels, &[ref_p], 1e-12)?;

    let (mut mass, mut m1, mut m2, mut mae, mut mse, mut kl) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for panel in &panels {
        for (x, w) in quad::gl8_nodes(panel.a, panel.b) {
            let fx = f(x);
            let wf = w * fx;
            mass += wf;
            m1 += wf * x;
            m2 += wf * x * x;
            let d = x - ref_p;
            mae += wf * d.abs();
            mse += wf * d * d;
            if fx > 0.0 {
                kl += wf * fx.ln();
            }
        }
    }
    if (mass - 1.0).abs() > 1e-6 {
        return Err(Error::Numeric(format!(
            "marginal posterior mass integrated to {mass}, expected 1 within 1e-6 (k = {k}, p = {p})"
        )));
    }

    // Median: locate the panel containing F = 1/2, then bisect inside it.
    let mut cum = 0.0;
    let mut median = 1.0;
    for panel in &panels {
        if cum + panel.mass >= 0.5 || std::ptr::eq(panel, panels.last().unwrap()) {
            let (mut lo, mut hi) = (panel.a, panel.b);
            while hi - lo > 1e-10 {
                let mid = 0.5 * (lo + hi);
                if cum + quad::gl8(f, panel.a, mid) < 0.5 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            median = 0.5 * (lo + hi);
            break;
        }
        cum += panel.mass;
    }

    // 1-Wasserstein distance to the uniform prior: ∫ |F(x) - x| dx, with the
    // CDF reconstructed from panel masses plus a short in-panel integral.
    let mut w1 = 0.0;
    let mut cum = 0.0;
    for panel in &panels {
        for (x, w) in quad::gl8_nodes(panel.a, panel.b) {
            let cdf = cum + quad::gl4(f, panel.a, x);
            w1 += w * (cdf - x).abs();
        }
        cum += panel.mass;
    }

    let mode = if k == 0 {
        None
    } else {
        const GRID: usize = 1024;
        let mut best = (0, f(0.0));
        for i in 1..=GRID {
            let v = f(i as f64 / GRID as f64);
            if v > best.1 {
                best = (i, v);
            }
        }
        let lo = best.0.saturating_sub(1) as f64 / GRID as f64;
        let hi = (best.0 + 1).min(GRID) as f64 / GRID as f64;
        Some(golden_max(f, lo, hi, 1e-9))
    };

    Ok(PosteriorSummary {
        mean: m1,
        median,
        mode,
        variance: m2 - m1 * m1,
        mae,
        rmse: mse.sqrt(),
        kl,
        w1,
    })
}

/// Computes [`posterior_summary`] rows for each knowledge level in `k_grid`.
pub fn posterior_table(
    k_grid: &[Knowledge],
    p: f64,
    ref_p: f64,
    quad_panels: usize,
) -> Result<Vec<(Knowledge, PosteriorSummary)>> {
    k_grid
        .iter()
        .map(|&k| posterior_summary(k, p, ref_p, quad_panels).map(|s| (k, s)))
        .collect()
}

/// Formats a float for CSV output: `inf`/`-inf` for infinities, fixed
/// precision when `digits` is given, shortest round-trip form otherwise.
pub(crate) fn format_float(x: f64, digits: Option<usize>) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    match digits {
        Some(d) => format!("{x:.d$}"),
        None => format!("{x}"),
    }
}

/// Writes a posterior table as CSV with columns
/// `k,mean,median,mode,var,mae,rmse,kl,w1`.
///
/// The `k` column renders exact knowledge as `inf`; an absent mode renders
/// as an empty field.
pub fn write_posterior_table_csv<W: Write>(
    rows: &[(Knowledge, PosteriorSummary)],
    digits: Option<usize>,
    mut out: W,
) -> Result<()> {
    writeln!(out, "k,mean,median,mode,var,mae,rmse,kl,w1")?;
    for (k, s) in rows {
        let mode = s.mode.map(|m| format_float(m, digits)).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            k,
            format_float(s.mean, digits),
            format_float(s.median, digits),
            mode,
            format_float(s.variance, digits),
            format_float(s.mae, digits),
            format_float(s.rmse, digits),
            format_float(s.kl, digits),
            format_float(s.w1, digits),
        )?;
    }
    Ok(())
}

/// Samples the number of losses a chooser observes: Binomial(k, p).
///
/// Errors for exact knowledge, which involves no draws.
pub fn sample_draws<R: Rng + ?Sized>(game: &EstimationGame, rng: &mut R) -> Result<u32> {
    match game.knowledge {
        Knowledge::Exact => Err(domain_err!("exact knowledge involves no draws to sample")),
        Knowledge::Draws(k) => {
            let binom = rand_distr::Binomial::new(u64::from(k), game.loss_prob)
                .map_err(|e| Error::Numeric(format!("binomial sampler: {e}")))?;
            Ok(binom.sample(rng) as u32)
        }
    }
}

/// A decision rule mapping an observed loss count to a choice.
pub trait ChooserRule {
    /// Chooses between the safe payment ([`OptionId::One`]) and the lottery
    /// ([`OptionId::Two`]) after observing `observed_losses` losses.
    fn choose(&self, game: &EstimationGame, observed_losses: u32) -> Result<OptionId>;
}

/// Expected-value maximization under the posterior-mean loss probability
/// `(n + 1) / (k + 2)`; ties go to the safe payment.
#[derive(Debug, Clone, Copy, Default)]
pub struct PosteriorMeanRule;

impl ChooserRule for PosteriorMeanRule {
    fn choose(&self, game: &EstimationGame, observed_losses: u32) -> Result<OptionId> {
        let k = match game.knowledge {
            Knowledge::Draws(k) => k,
            Knowledge::Exact => {
                return Err(domain_err!("posterior-mean rule needs a finite draw count"));
            }
        };
        if observed_losses > k {
            return Err(domain_err!(
                "observed losses {observed_losses} exceed draw count {k}"
            ));
        }
        let mean = (f64::from(observed_losses) + 1.0) / (f64::from(k) + 2.0);
        if game.lottery_value(mean) > game.safe_payoff {
            Ok(OptionId::Two)
        } else {
            Ok(OptionId::One)
        }
    }
}

/// Choice of the posterior-mean chooser after observing `observed_losses`
/// losses. See [`PosteriorMeanRule`].
pub fn chooser_choice(game: &EstimationGame, observed_losses: u32) -> Result<OptionId> {
    PosteriorMeanRule.choose(game, observed_losses)
}

/// The choice a chooser who knows `p` exactly would make; ties go to the
/// safe payment.
pub fn full_information_choice(game: &EstimationGame) -> OptionId {
    if game.lottery_value(game.loss_prob) > game.safe_payoff {
        OptionId::Two
    } else {
        OptionId::One
    }
}

fn log_binom_pmf(n: u32, k: u32, p: f64) -> f64 {
    let (nf, kf) = (f64::from(n), f64::from(k));
    ln_gamma(kf + 1.0) - ln_gamma(nf + 1.0) - ln_gamma(kf - nf + 1.0)
        + xlogy(n, p)
        + xlogy(k - n, 1.0 - p)
}

/// Probability that the posterior-mean chooser picks differently from the
/// full-information choice, by exact enumeration over the binomial draw
/// distribution. Zero for exact knowledge.
pub fn mistake_probability(game: &EstimationGame) -> Result<f64> {
    let k = match game.knowledge {
        Knowledge::Exact => return Ok(0.0),
        Knowledge::Draws(k) => k,
    };
    let informed = full_information_choice(game);
    let mut prob = 0.0;
    for n in 0..=k {
        if chooser_choice(game, n)? != informed {
            let lp = log_binom_pmf(n, k, game.loss_prob);
            if lp > f64::NEG_INFINITY {
                prob += lp.exp();
            }
        }
    }
    Ok(prob)
}
