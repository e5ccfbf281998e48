//! Fechner-style random-utility estimation of the self-interest weight.
//!
//! Each observation is one intervening evaluator: their own preference
//! between the two options, their belief `pi` that a random chooser is
//! better served by option One, and which option they imposed. The model
//! says the evaluator imposes One when the perceived welfare gap between
//! imposing One and imposing Two exceeds a normal noise draw with scale
//! `sigma`, so `P(impose One) = Phi(gap / sigma)`. Maximum likelihood over
//! `(phi, sigma)` recovers how heavily evaluators weight their own taste
//! (`phi`) against the choosers' interests.

use std::io::{Read, Write};

use serde_json::json;
use statrs::function::erf::erfc;

use crate::error::{check_unit_range, domain_err, Error, Result};
use crate::welfare::OptionId;

/// Default probability cutoff for classifying a predicted imposition.
pub const DEFAULT_CLASSIFY_THRESHOLD: f64 = 0.5;

/// Floor applied to each log-likelihood term: ln(1e-300).
#[allow(clippy::excessive_precision)] // full decimal expansion kept for transcription checks
const LN_FLOOR: f64 = -690.77552789821368;

/// One intensive-margin imposition decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservationRecord {
    /// The evaluator's own preference.
    pub ca_type: OptionId,
    /// The evaluator's belief that a random chooser prefers option One.
    pub pi_belief: f64,
    /// Whether the evaluator imposed option One (as opposed to Two).
    pub imposed_one: bool,
}

impl ObservationRecord {
    pub fn new(ca_type: OptionId, pi_belief: f64, imposed_one: bool) -> Result<Self> {
        check_unit_range("pi_belief", pi_belief, 0.0, 1.0)?;
        Ok(Self {
            ca_type,
            pi_belief,
            imposed_one,
        })
    }
}

/// Perceived welfare difference between imposing option One and imposing
/// option Two, for an evaluator of type `theta` with self-interest weight
/// `phi` and belief `pi`:
///
/// * `theta = One`: `phi + (2 pi - 1)(1 - phi)`
/// * `theta = Two`: `-phi + (2 pi - 1)(1 - phi)`
///
/// Inputs are assumed to lie in the unit interval.
pub fn welfare_gap(theta: OptionId, phi: f64, pi: f64) -> f64 {
    let common = (2.0 * pi - 1.0) * (1.0 - phi);
    match theta {
        OptionId::One => phi + common,
        OptionId::Two => -phi + common,
    }
}

/// Standard normal CDF via statrs' complementary error function
/// (absolute error well below 1e-10 across the real line).
fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Probability that the evaluator imposes option One: `Phi(gap / sigma)`.
pub fn impose_probability(theta: OptionId, phi: f64, pi: f64, sigma: f64) -> Result<f64> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(domain_err!("sigma must be positive, got {sigma}"));
    }
    Ok(std_normal_cdf(welfare_gap(theta, phi, pi) / sigma))
}

/// Deterministic pairwise-tree sum: the reduction tree depends only on the
/// term count, so the result is bit-identical however it is scheduled.
fn pairwise_sum(terms: &[f64]) -> f64 {
    match terms.len() {
        0 => 0.0,
        1 => terms[0],
        2 => terms[0] + terms[1],
        n => {
            let (a, b) = terms.split_at(n / 2);
            if n >= 8192 {
                let (sa, sb) = rayon::join(|| pairwise_sum(a), || pairwise_sum(b));
                sa + sb
            } else {
                pairwise_sum(a) + pairwise_sum(b)
            }
        }
    }
}

fn ll_terms(data: &[ObservationRecord], phi: f64, sigma: f64) -> (Vec<f64>, usize) {
    let mut floored = 0;
    let terms = data
        .iter()
        .map(|rec| {
            let t = welfare_gap(rec.ca_type, phi, rec.pi_belief) / sigma;
            // P(imposed_one) = Phi(t); P(!imposed_one) = Phi(-t). Evaluating
            // the complement through the opposite tail keeps both branches
            // accurate far into the tails.
            let p = if rec.imposed_one {
                std_normal_cdf(t)
            } else {
                std_normal_cdf(-t)
            };
            let lp = p.ln();
            if lp < LN_FLOOR {
                floored += 1;
                LN_FLOOR
            } else {
                lp
            }
        })
        .collect();
    (terms, floored)
}

/// Log-likelihood of the imposition data at `(phi, sigma)`, with each term
/// floored at ln(1e-300); also reports how many terms hit the floor.
pub fn log_likelihood_with_diagnostics(
    data: &[ObservationRecord],
    phi: f64,
    sigma: f64,
) -> Result<(f64, usize)> {
    if data.is_empty() {
        return Err(domain_err!("log-likelihood needs at least one observation"));
    }
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(domain_err!("sigma must be positive, got {sigma}"));
    }
    let (terms, floored) = ll_terms(data, phi, sigma);
    Ok((pairwise_sum(&terms), floored))
}

/// Log-likelihood of the imposition data at `(phi, sigma)`.
pub fn log_likelihood(data: &[ObservationRecord], phi: f64, sigma: f64) -> Result<f64> {
    log_likelihood_with_diagnostics(data, phi, sigma).map(|(ll, _)| ll)
}

/// Optimizer settings for [`fit`].
#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub phi_init: f64,
    pub sigma_init: f64,
    /// Simplex iteration budget.
    pub max_iter: usize,
    /// Relative objective tolerance for simplex termination.
    pub tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            phi_init: 0.5,
            sigma_init: 1.0,
            max_iter: 500,
            tol: 1e-10,
        }
    }
}

/// Maximum-likelihood fit of the imposition model.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub phi_hat: f64,
    pub sigma_hat: f64,
    /// Covariance of `(phi_hat, sigma_hat)` from the inverse negative
    /// Hessian; absent when the Hessian is singular or not negative
    /// definite at the optimum.
    pub vcov: Option<[[f64; 2]; 2]>,
    /// Symmetric normal 95% interval for `phi`, untruncated (bounds may
    /// leave the unit interval).
    pub ci95_phi: Option<(f64, f64)>,
    pub ci95_sigma: Option<(f64, f64)>,
    pub loglik: f64,
    pub n_obs: usize,
    pub converged: bool,
    pub iterations: usize,
    /// Number of likelihood terms floored at ln(1e-300) at the optimum.
    pub floored_terms: usize,
    /// Explanation when the fit is degraded (no identification, boundary
    /// estimate, singular Hessian, ...).
    pub diagnostic: Option<String>,
}

impl FitResult {
    /// JSON form with exactly the fields
    /// `phi_hat, sigma_hat, ci_phi, ci_sigma, loglik, n_obs, converged`.
    pub fn to_json(&self) -> serde_json::Value {
        let pair = |ci: Option<(f64, f64)>| ci.map(|(lo, hi)| vec![lo, hi]);
        json!({
            "phi_hat": self.phi_hat,
            "sigma_hat": self.sigma_hat,
            "ci_phi": pair(self.ci95_phi),
            "ci_sigma": pair(self.ci95_sigma),
            "loglik": self.loglik,
            "n_obs": self.n_obs,
            "converged": self.converged,
        })
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, &self.to_json())?;
        writeln!(out)?;
        Ok(())
    }

    /// Reads back the JSON emitted by [`FitResult::write_json`]. Fields not
    /// carried by that format (covariance, iteration counters, diagnostics)
    /// come back empty.
    pub fn read_json<R: std::io::Read>(reader: R) -> Result<Self> {
        #[derive(serde::Deserialize)]
        struct Wire {
            phi_hat: f64,
            sigma_hat: f64,
            ci_phi: Option<(f64, f64)>,
            ci_sigma: Option<(f64, f64)>,
            loglik: f64,
            n_obs: usize,
            converged: bool,
        }
        let w: Wire = serde_json::from_reader(reader)?;
        Ok(Self {
            phi_hat: w.phi_hat,
            sigma_hat: w.sigma_hat,
            vcov: None,
            ci95_phi: w.ci_phi,
            ci95_sigma: w.ci_sigma,
            loglik: w.loglik,
            n_obs: w.n_obs,
            converged: w.converged,
            iterations: 0,
            floored_terms: 0,
            diagnostic: None,
        })
    }
}

/// Objective on the unconstrained `(phi_raw, ln_sigma)` scale: the
/// log-likelihood at the box-projected parameters minus a quadratic penalty
/// for leaving the box, so simplex proposals are pushed back inside.
fn penalized_ll(data: &[ObservationRecord], x: [f64; 2]) -> f64 {
    let phi = x[0].clamp(0.0, 1.0);
    let ln_sigma = x[1].clamp(-20.0, 20.0);
    let (terms, _) = ll_terms(data, phi, ln_sigma.exp());
    let excess = (x[0] - phi).abs() + (x[1] - ln_sigma).abs();
    pairwise_sum(&terms) - 1e4 * data.len() as f64 * excess * excess
}

/// Standard Nelder–Mead minimization of `f` over two parameters.
fn nelder_mead<F: FnMut([f64; 2]) -> f64>(
    mut f: F,
    x0: [f64; 2],
    steps: [f64; 2],
    max_iter: usize,
    tol: f64,
) -> ([f64; 2], f64, usize) {
    let mut simplex = [
        (x0, f(x0)),
        ([x0[0] + steps[0], x0[1]], f([x0[0] + steps[0], x0[1]])),
        ([x0[0], x0[1] + steps[1]], f([x0[0], x0[1] + steps[1]])),
    ];
    let mut iterations = 0;
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("objective must not be NaN"));
        let (best, worst) = (simplex[0], simplex[2]);
        if (worst.1 - best.1).abs() <= tol * (1.0 + best.1.abs()) {
            break;
        }
        iterations += 1;
        let centroid = [
            0.5 * (simplex[0].0[0] + simplex[1].0[0]),
            0.5 * (simplex[0].0[1] + simplex[1].0[1]),
        ];
        let dir = [centroid[0] - worst.0[0], centroid[1] - worst.0[1]];
        let at = |t: f64| [centroid[0] + t * dir[0], centroid[1] + t * dir[1]];

        let reflected = at(1.0);
        let fr = f(reflected);
        if fr < best.1 {
            let expanded = at(2.0);
            let fe = f(expanded);
            simplex[2] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
        } else if fr < simplex[1].1 {
            simplex[2] = (reflected, fr);
        } else {
            let contracted = if fr < worst.1 { at(0.5) } else { at(-0.5) };
            let fc = f(contracted);
            if fc < worst.1.min(fr) {
                simplex[2] = (contracted, fc);
            } else {
                // Shrink toward the best vertex.
                let anchor = simplex[0].0;
                for vertex in simplex.iter_mut().skip(1) {
                    vertex.0 = [
                        0.5 * (vertex.0[0] + anchor[0]),
                        0.5 * (vertex.0[1] + anchor[1]),
                    ];
                    vertex.1 = f(vertex.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("objective must not be NaN"));
    (simplex[0].0, simplex[0].1, iterations)
}

/// Richardson-extrapolated central difference: (4 D(h/2) - D(h)) / 3.
fn richardson_grad<F: FnMut([f64; 2]) -> f64>(f: &mut F, x: [f64; 2], h: f64) -> [f64; 2] {
    let mut central = |h: f64, i: usize| {
        let mut hi = x;
        let mut lo = x;
        hi[i] += h;
        lo[i] -= h;
        (f(hi) - f(lo)) / (2.0 * h)
    };
    let mut g = [0.0; 2];
    for (i, gi) in g.iter_mut().enumerate() {
        let coarse = central(h, i);
        let fine = central(h / 2.0, i);
        *gi = (4.0 * fine - coarse) / 3.0;
    }
    g
}

fn hessian_at<F: FnMut([f64; 2]) -> f64>(f: &mut F, x: [f64; 2], h: f64) -> [[f64; 2]; 2] {
    let mut single = |h: f64| {
        let mut shifted = |di: f64, dj: f64| {
            let y = [x[0] + di, x[1] + dj];
            f(y)
        };
        let f0 = shifted(0.0, 0.0);
        let d00 = (shifted(h, 0.0) - 2.0 * f0 + shifted(-h, 0.0)) / (h * h);
        let d11 = (shifted(0.0, h) - 2.0 * f0 + shifted(0.0, -h)) / (h * h);
        let d01 =
            (shifted(h, h) - shifted(h, -h) - shifted(-h, h) + shifted(-h, -h)) / (4.0 * h * h);
        [[d00, d01], [d01, d11]]
    };
    let coarse = single(h);
    let fine = single(h / 2.0);
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = (4.0 * fine[i][j] - coarse[i][j]) / 3.0;
        }
    }
    out
}

/// Inverse of a symmetric 2x2, `None` if singular.
fn invert_2x2(m: [[f64; 2]; 2]) -> Option<[[f64; 2]; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    Some([
        [m[1][1] / det, -m[0][1] / det],
        [-m[1][0] / det, m[0][0] / det],
    ])
}

const FD_STEP: f64 = 1e-5;

/// Maximizes the imposition likelihood over `phi in [0, 1]`, `sigma > 0`.
///
/// Runs a derivative-free simplex search on `(phi, ln sigma)` followed by a
/// Newton polish using Richardson-extrapolated finite differences (step
/// 1e-5). The covariance comes from the inverse negative Hessian at the
/// optimum, mapped back to the `(phi, sigma)` scale; 95% intervals are
/// symmetric normal intervals, not truncated to the box.
///
/// Data without variation (a single outcome, or a single evaluator type
/// with a constant belief) cannot identify the parameters; the result is
/// returned with `converged = false` and a diagnostic instead of a point
/// estimate being forced.
pub fn fit(data: &[ObservationRecord], options: FitOptions) -> Result<FitResult> {
    if data.is_empty() {
        return Err(domain_err!("fit needs at least one observation"));
    }
    check_unit_range("phi_init", options.phi_init, 0.0, 1.0)?;
    if options.sigma_init.is_nan() || options.sigma_init <= 0.0 {
        return Err(domain_err!(
            "sigma_init must be positive, got {}",
            options.sigma_init
        ));
    }

    let any_one = data.iter().any(|r| r.imposed_one);
    let any_two = data.iter().any(|r| !r.imposed_one);
    let both_types = data.iter().any(|r| r.ca_type == OptionId::One)
        && data.iter().any(|r| r.ca_type == OptionId::Two);
    let beliefs_vary = {
        let first = data[0].pi_belief;
        data.iter().any(|r| (r.pi_belief - first).abs() > 1e-12)
    };
    if !(any_one && any_two) || !(both_types || beliefs_vary) {
        let (loglik, floored) =
            log_likelihood_with_diagnostics(data, options.phi_init, options.sigma_init)?;
        let diagnostic = if !(any_one && any_two) {
            "no identification: every record has the same imposition outcome"
        } else {
            "no identification: a single evaluator type with a constant belief"
        };
        return Ok(FitResult {
            phi_hat: options.phi_init,
            sigma_hat: options.sigma_init,
            vcov: None,
            ci95_phi: None,
            ci95_sigma: None,
            loglik,
            n_obs: data.len(),
            converged: false,
            iterations: 0,
            floored_terms: floored,
            diagnostic: Some(diagnostic.into()),
        });
    }

    let mut objective = |x: [f64; 2]| penalized_ll(data, x);

    let x0 = [options.phi_init, options.sigma_init.ln()];
    let (mut x, _, simplex_iters) = nelder_mead(
        |v| -objective(v),
        x0,
        [0.25, 0.5],
        options.max_iter,
        options.tol,
    );
    x[0] = x[0].clamp(0.0, 1.0);
    x[1] = x[1].clamp(-20.0, 20.0);

    // Newton polish while the iterate stays interior in phi.
    let mut newton_iters = 0;
    let mut boundary = !(x[0] > 1e-9 && x[0] < 1.0 - 1e-9);
    if !boundary {
        for _ in 0..25 {
            let g = richardson_grad(&mut objective, x, FD_STEP);
            if g[0].abs().max(g[1].abs()) < 1e-7 {
                break;
            }
            let h = hessian_at(&mut objective, x, FD_STEP);
            // Newton direction -H⁻¹ g, only trusted when H is negative
            // definite (a maximum).
            let neg_definite = h[0][0] < 0.0 && h[0][0] * h[1][1] - h[0][1] * h[1][0] > 0.0;
            let Some(hinv) = invert_2x2(h) else { break };
            if !neg_definite {
                break;
            }
            let mut step = [
                -(hinv[0][0] * g[0] + hinv[0][1] * g[1]),
                -(hinv[1][0] * g[0] + hinv[1][1] * g[1]),
            ];
            // Backtrack if the full step overshoots.
            let f0 = objective(x);
            let mut scale = 1.0;
            let mut accepted = false;
            for _ in 0..10 {
                let cand = [x[0] + scale * step[0], x[1] + scale * step[1]];
                if (0.0..=1.0).contains(&cand[0]) && objective(cand) >= f0 {
                    x = cand;
                    accepted = true;
                    break;
                }
                scale *= 0.5;
            }
            newton_iters += 1;
            step = [scale * step[0], scale * step[1]];
            if !accepted || step[0].abs().max(step[1].abs()) < 1e-12 {
                break;
            }
        }
        boundary = !(x[0] > 1e-9 && x[0] < 1.0 - 1e-9);
    }

    let phi_hat = x[0];
    let sigma_hat = x[1].exp();
    let (loglik, floored) = log_likelihood_with_diagnostics(data, phi_hat, sigma_hat)?;
    let grad = richardson_grad(&mut objective, x, FD_STEP);
    let grad_norm = grad[0].abs().max(grad[1].abs());

    let hessian = hessian_at(&mut objective, x, FD_STEP);
    let neg_h = [
        [-hessian[0][0], -hessian[0][1]],
        [-hessian[1][0], -hessian[1][1]],
    ];
    let pos_definite =
        neg_h[0][0] > 0.0 && neg_h[0][0] * neg_h[1][1] - neg_h[0][1] * neg_h[1][0] > 0.0;
    let vcov_transformed = if pos_definite {
        invert_2x2(neg_h)
    } else {
        None
    };

    // Delta-method map from (phi, ln sigma) to (phi, sigma): Jacobian
    // diag(1, sigma).
    let vcov = vcov_transformed.map(|v| {
        [
            [v[0][0], v[0][1] * sigma_hat],
            [v[1][0] * sigma_hat, v[1][1] * sigma_hat * sigma_hat],
        ]
    });
    let ci = |est: f64, var: f64| {
        let half = 1.96 * var.sqrt();
        (est - half, est + half)
    };
    let ci95_phi = vcov.map(|v| ci(phi_hat, v[0][0]));
    let ci95_sigma = vcov.map(|v| ci(sigma_hat, v[1][1]));

    let mut diagnostic = None;
    if boundary {
        diagnostic = Some(format!("phi estimate {phi_hat} sits on the box boundary"));
    } else if vcov.is_none() {
        diagnostic = Some("Hessian at the optimum is singular or not negative definite".into());
    } else if floored > 0 {
        diagnostic = Some(format!("{floored} likelihood terms floored at ln(1e-300)"));
    }

    Ok(FitResult {
        phi_hat,
        sigma_hat,
        vcov,
        ci95_phi,
        ci95_sigma,
        loglik,
        n_obs: data.len(),
        converged: vcov.is_some() && grad_norm < 1e-4 && !boundary,
        iterations: simplex_iters + newton_iters,
        floored_terms: floored,
        diagnostic,
    })
}

/// Classifies each record as "imposes One" when the fitted probability
/// reaches `threshold`.
pub fn predict_classify(
    data: &[ObservationRecord],
    fit: &FitResult,
    threshold: f64,
) -> Result<Vec<bool>> {
    if !fit.converged {
        return Err(domain_err!("prediction requires a converged fit"));
    }
    check_unit_range("threshold", threshold, 0.0, 1.0)?;
    data.iter()
        .map(|rec| {
            impose_probability(rec.ca_type, fit.phi_hat, rec.pi_belief, fit.sigma_hat)
                .map(|p| p >= threshold)
        })
        .collect()
}

/// Joint correctness counts for two classifiers against the actual
/// outcomes: rows index classifier A (wrong, correct), columns classifier B.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConfusionCompare {
    pub counts: [[u64; 2]; 2],
}

impl ConfusionCompare {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

pub fn confusion_compare(
    pred_a: &[bool],
    pred_b: &[bool],
    actual: &[bool],
) -> Result<ConfusionCompare> {
    if pred_a.len() != actual.len() || pred_b.len() != actual.len() {
        return Err(domain_err!(
            "prediction lengths {} and {} must both match {} outcomes",
            pred_a.len(),
            pred_b.len(),
            actual.len()
        ));
    }
    let mut counts = [[0u64; 2]; 2];
    for ((a, b), y) in pred_a.iter().zip(pred_b).zip(actual) {
        counts[usize::from(a == y)][usize::from(b == y)] += 1;
    }
    Ok(ConfusionCompare { counts })
}

/// Reads intensive-margin observations from CSV with columns
/// `ca_id,ca_pref,pi,intervened,imposed` (matched by header name, extra
/// columns ignored). `ca_pref`/`imposed` use codes 1 and 2; `imposed` may
/// be `NA` (or empty) on rows that did not intervene. Rows with
/// `intervened = 0` are skipped: only actual impositions enter the fit.
pub fn read_observations_csv<R: Read>(reader: R) -> Result<Vec<ObservationRecord>> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = csv.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("missing required CSV column {name:?}")))
    };
    let (pref_col, pi_col, intervened_col, imposed_col) = (
        col("ca_pref")?,
        col("pi")?,
        col("intervened")?,
        col("imposed")?,
    );

    let mut out = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let record = record?;
        let line = i + 2; // 1-based, after the header
        let field = |idx: usize| -> Result<&str> {
            record
                .get(idx)
                .ok_or_else(|| Error::Parse(format!("line {line}: missing field {idx}")))
        };
        let intervened = match field(intervened_col)? {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::Parse(format!(
                    "line {line}: intervened must be 0 or 1, got {other:?}"
                )));
            }
        };
        if !intervened {
            continue;
        }
        let ca_type = match field(pref_col)? {
            "1" => OptionId::One,
            "2" => OptionId::Two,
            other => {
                return Err(Error::Parse(format!(
                    "line {line}: ca_pref must be 1 or 2, got {other:?}"
                )));
            }
        };
        let pi: f64 = field(pi_col)?
            .parse()
            .map_err(|e| Error::Parse(format!("line {line}: bad pi: {e}")))?;
        let imposed_one = match field(imposed_col)? {
            "1" => true,
            "2" => false,
            other => {
                return Err(Error::Parse(format!(
                    "line {line}: intervening row has imposed = {other:?}, expected 1 or 2"
                )));
            }
        };
        out.push(ObservationRecord::new(ca_type, pi, imposed_one)?);
    }
    Ok(out)
}
