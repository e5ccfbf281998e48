//! Welfare evaluation for a choice architect (CA) deciding between imposing
//! one of two options and leaving the menu free.
//!
//! The CA weighs her own preference against the Choosers' with a weight
//! `phi`: imposing an option scores `phi·(own match) + (1−phi)·(believed
//! share of Choosers matched)`. Freedom of choice scores the same mixture
//! over the options Choosers actually end up with, which admits mistakes:
//! `eps_x` is the share truly preferring Option One but choosing Two,
//! `eps_y` the reverse. Everything here is a pure function; the decision
//! geometry over `(phi, q)` is exported as a grid with CSV/SVG emission.

use std::io::Write;

use crate::error::{check_unit_range, domain_err, Result};

/// Tie tolerance used by [`optimal_policy`] callers that have no opinion.
pub const DEFAULT_TIE_TOL: f64 = 1e-12;

/// One of the two options on the menu. Option One plays the role of the
/// safe amount in the estimation game (and of "x" for an x-preferring CA);
/// Option Two is the lottery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OptionId {
    One,
    Two,
}

impl OptionId {
    pub fn complement(self) -> Self {
        match self {
            OptionId::One => OptionId::Two,
            OptionId::Two => OptionId::One,
        }
    }

    /// 1-based code used by the CSV schemas (`1` = One, `2` = Two).
    pub fn code(self) -> u8 {
        match self {
            OptionId::One => 1,
            OptionId::Two => 2,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            1 => Ok(OptionId::One),
            2 => Ok(OptionId::Two),
            other => Err(domain_err!("option code must be 1 or 2, got {other}")),
        }
    }
}

/// A choice architect: which option she prefers herself and the weight
/// `phi` she puts on that preference (0 = pure Chooser-welfarist,
/// 1 = fully self-interested).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CAProfile {
    pub preferred: OptionId,
    pub phi: f64,
}

impl CAProfile {
    pub fn new(preferred: OptionId, phi: f64) -> Result<Self> {
        check_unit_range("phi", phi, 0.0, 1.0)?;
        Ok(CAProfile { preferred, phi })
    }
}

/// Joint preference/choice state of the Chooser population.
///
/// `pi` is the share truly preferring Option One at full information;
/// `eps_x` the share preferring One but choosing Two; `eps_y` the share
/// preferring Two but choosing One. The four contingency cells
/// (pi−eps_x, eps_x, eps_y, 1−pi−eps_y) must all be nonnegative, so
/// `eps_x ≤ pi` and `eps_y ≤ 1−pi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationState {
    pub pi: f64,
    pub eps_x: f64,
    pub eps_y: f64,
}

impl PopulationState {
    pub fn new(pi: f64, eps_x: f64, eps_y: f64) -> Result<Self> {
        let state = PopulationState { pi, eps_x, eps_y };
        state.validate()?;
        Ok(state)
    }

    /// State with the same `pi` and no mistakes.
    pub fn mistake_free(pi: f64) -> Result<Self> {
        Self::new(pi, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        check_unit_range("pi", self.pi, 0.0, 1.0)?;
        check_unit_range("eps_x", self.eps_x, 0.0, 1.0)?;
        check_unit_range("eps_y", self.eps_y, 0.0, 1.0)?;
        if self.eps_x > self.pi {
            return Err(domain_err!(
                "eps_x ({}) exceeds pi ({}): negative One-preferring cell",
                self.eps_x,
                self.pi
            ));
        }
        if self.eps_y > 1.0 - self.pi {
            return Err(domain_err!(
                "eps_y ({}) exceeds 1 - pi ({}): negative Two-preferring cell",
                self.eps_y,
                1.0 - self.pi
            ));
        }
        Ok(())
    }

    /// Share actually choosing Option One under ambiguity.
    pub fn pi_prime(&self) -> f64 {
        (self.pi - self.eps_x) + self.eps_y
    }
}

/// CA beliefs about the population: believed full-information share
/// preferring One (`pi_belief`) and believed share choosing One under
/// ambiguity (`pi_prime_belief`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeliefSet {
    pub pi_belief: f64,
    pub pi_prime_belief: f64,
}

impl BeliefSet {
    pub fn new(pi_belief: f64, pi_prime_belief: f64) -> Result<Self> {
        check_unit_range("pi_belief", pi_belief, 0.0, 1.0)?;
        check_unit_range("pi_prime_belief", pi_prime_belief, 0.0, 1.0)?;
        Ok(BeliefSet {
            pi_belief,
            pi_prime_belief,
        })
    }
}

/// A CA's policy: impose a specific option or leave the menu free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    Impose(OptionId),
    LaissezFaire,
}

impl Policy {
    /// Stable label used in CSV output.
    pub fn label(self) -> &'static str {
        match self {
            Policy::Impose(OptionId::One) => "impose_one",
            Policy::Impose(OptionId::Two) => "impose_two",
            Policy::LaissezFaire => "laissez_faire",
        }
    }

    // Priority for breaking exact welfare ties in the ranking: freedom
    // first (liberty default), then the CA's own option, then the other.
    fn tie_priority(self, ca: &CAProfile) -> u8 {
        match self {
            Policy::LaissezFaire => 0,
            Policy::Impose(opt) if opt == ca.preferred => 1,
            Policy::Impose(_) => 2,
        }
    }
}

/// The ternary comparison's outcome: the chosen policy plus the full
/// welfare ranking of all three alternatives (best first). The ranking
/// reflects exact welfare order; the decision additionally applies the tie
/// tolerance, resolving near-ties to `LaissezFaire`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDecision {
    pub decision: Policy,
    pub ranking: [Policy; 3],
}

// Core mixing formula, inputs already validated. For a One-preferring CA
// imposing One the value is phi + q·(1−phi); imposing Two it is
// (1−q)·(1−phi); a Two-preferring CA mirrors with q → 1−q.
fn imposed_value(ca: &CAProfile, q_belief: f64, option: OptionId) -> f64 {
    let q_own = match ca.preferred {
        OptionId::One => q_belief,
        OptionId::Two => 1.0 - q_belief,
    };
    if option == ca.preferred {
        ca.phi + q_own * (1.0 - ca.phi)
    } else {
        (1.0 - q_own) * (1.0 - ca.phi)
    }
}

/// Welfare of imposing `option` given the believed share `q_belief` of
/// Choosers preferring Option One.
pub fn welfare_imposed(ca: &CAProfile, q_belief: f64, option: OptionId) -> Result<f64> {
    check_unit_range("phi", ca.phi, 0.0, 1.0)?;
    check_unit_range("q_belief", q_belief, 0.0, 1.0)?;
    Ok(imposed_value(ca, q_belief, option))
}

/// Welfare of leaving the menu free, evaluated as the conditional mixture
/// over what Choosers actually pick: a share `pi_prime` ends up with One
/// (of whom `(pi−eps_x)/pi_prime` truly prefer it) and the rest with Two.
/// Degenerate branches with zero weight are dropped rather than clamped;
/// the result agrees with [`welfare_freedom_closed`] to machine precision.
pub fn welfare_freedom(ca: &CAProfile, pop: &PopulationState) -> Result<f64> {
    check_unit_range("phi", ca.phi, 0.0, 1.0)?;
    pop.validate()?;
    // Denominators are assembled so IEEE rounding keeps each conditional
    // share in [0, 1]: d_one >= pi - eps_x and d_two >= eps_x hold exactly.
    let d_one = (pop.pi - pop.eps_x) + pop.eps_y;
    let d_two = ((1.0 - pop.pi) - pop.eps_y) + pop.eps_x;
    let mut w = 0.0;
    if d_one > 0.0 {
        let q_among_one = (pop.pi - pop.eps_x) / d_one;
        w += d_one * imposed_value(ca, q_among_one, OptionId::One);
    }
    if d_two > 0.0 {
        let q_among_two = pop.eps_x / d_two;
        w += d_two * imposed_value(ca, q_among_two, OptionId::Two);
    }
    Ok(w)
}

/// Algebraic reduction of the freedom mixture. For a One-preferring CA:
/// `1 − phi·(1 − pi − 2·eps_y) − eps_x − eps_y`; the Two-preferring case
/// relabels `(pi, eps_x, eps_y)` as `(1−pi, eps_y, eps_x)`.
pub fn welfare_freedom_closed(ca: &CAProfile, pop: &PopulationState) -> Result<f64> {
    check_unit_range("phi", ca.phi, 0.0, 1.0)?;
    pop.validate()?;
    let (pi, adverse, favorable) = match ca.preferred {
        OptionId::One => (pop.pi, pop.eps_x, pop.eps_y),
        OptionId::Two => (1.0 - pop.pi, pop.eps_y, pop.eps_x),
    };
    Ok(1.0 - ca.phi * (1.0 - pi - 2.0 * favorable) - adverse - favorable)
}

/// Change in freedom welfare caused by the mistakes: freedom with the given
/// `eps` minus freedom in the mistake-free state with the same `pi`. Equals
/// `−eps_x − eps_y·(1 − 2·phi)` exactly for a One-preferring CA.
pub fn freedom_delta(ca: &CAProfile, pop: &PopulationState) -> Result<f64> {
    let base = PopulationState::mistake_free(pop.pi)?;
    Ok(welfare_freedom(ca, pop)? - welfare_freedom(ca, &base)?)
}

/// Belief level below which imposing the *other* option outranks imposing
/// the CA's own on the intensive margin: `(1 − 2·phi)/(2·(1 − phi))` for
/// `phi < 1/2`; `None` for `phi ≥ 1/2` (the frontier leaves the unit
/// square at zero).
pub fn boundary_q(phi: f64) -> Result<Option<f64>> {
    check_unit_range("phi", phi, 0.0, 1.0)?;
    if phi >= 0.5 {
        Ok(None)
    } else {
        Ok(Some((1.0 - 2.0 * phi) / (2.0 * (1.0 - phi))))
    }
}

/// Ternary comparison of the three alternatives. `belief_q` feeds the two
/// imposition welfares, `pop` feeds the freedom welfare — they are passed
/// separately so biased beliefs can be simulated (the default convention is
/// `belief_q = pop.pi`). Welfare ties within `tol` resolve to
/// `LaissezFaire`.
pub fn optimal_policy(
    ca: &CAProfile,
    belief_q: f64,
    pop: &PopulationState,
    tol: f64,
) -> Result<PolicyDecision> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(domain_err!("tol must be positive, got {tol}"));
    }
    let w_one = welfare_imposed(ca, belief_q, OptionId::One)?;
    let w_two = welfare_imposed(ca, belief_q, OptionId::Two)?;
    let w_free = welfare_freedom(ca, pop)?;

    let mut ranked = [
        (Policy::LaissezFaire, w_free),
        (Policy::Impose(OptionId::One), w_one),
        (Policy::Impose(OptionId::Two), w_two),
    ];
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("welfare values are finite")
            .then_with(|| a.0.tie_priority(ca).cmp(&b.0.tie_priority(ca)))
    });
    let ranking = [ranked[0].0, ranked[1].0, ranked[2].0];

    let best_impose = w_one.max(w_two);
    let decision = if w_free >= best_impose - tol {
        Policy::LaissezFaire
    } else if w_one >= w_two {
        Policy::Impose(OptionId::One)
    } else {
        Policy::Impose(OptionId::Two)
    };
    Ok(PolicyDecision { decision, ranking })
}

/// Decision-region map over the `(phi, q)` unit square for a One-preferring
/// CA with `belief_q = pi = q`. Cells are stored row-major: `phi` varies by
/// row, `q` by column, both axes inclusive of 0 and 1.
#[derive(Debug, Clone)]
pub struct RegionGrid {
    pub phis: Vec<f64>,
    pub qs: Vec<f64>,
    pub cells: Vec<PolicyDecision>,
    /// The (eps_x, eps_y) template the grid was built with.
    pub eps_template: (f64, f64),
}

/// Evaluates [`optimal_policy`] on the inclusive lattice over `[0,1]²`.
///
/// `pop_template` contributes its mistake rates; its `pi` is ignored
/// because the q axis sweeps it. At each cell the rates are truncated to
/// the feasible region (`eps_x ≤ pi`, `eps_y ≤ 1−pi`) so every cell is a
/// valid population state.
pub fn region_grid(
    phi_steps: usize,
    q_steps: usize,
    pop_template: Option<PopulationState>,
) -> Result<RegionGrid> {
    if phi_steps < 2 || q_steps < 2 {
        return Err(domain_err!(
            "grid needs at least 2 steps per axis, got {phi_steps}x{q_steps}"
        ));
    }
    let (eps_x, eps_y) = match pop_template {
        Some(t) => {
            t.validate()?;
            (t.eps_x, t.eps_y)
        }
        None => (0.0, 0.0),
    };
    let phis: Vec<f64> = (0..phi_steps)
        .map(|i| i as f64 / (phi_steps - 1) as f64)
        .collect();
    let qs: Vec<f64> = (0..q_steps)
        .map(|j| j as f64 / (q_steps - 1) as f64)
        .collect();

    use rayon::prelude::*;
    let rows: Vec<Vec<PolicyDecision>> = phis
        .par_iter()
        .map(|&phi| {
            let ca = CAProfile {
                preferred: OptionId::One,
                phi,
            };
            qs.iter()
                .map(|&q| {
                    let pop = PopulationState {
                        pi: q,
                        eps_x: eps_x.min(q),
                        eps_y: eps_y.min(1.0 - q),
                    };
                    optimal_policy(&ca, q, &pop, DEFAULT_TIE_TOL)
                        .expect("lattice inputs are valid by construction")
                })
                .collect()
        })
        .collect();

    Ok(RegionGrid {
        phis,
        qs,
        cells: rows.into_iter().flatten().collect(),
        eps_template: (eps_x, eps_y),
    })
}

impl RegionGrid {
    pub fn cell(&self, phi_idx: usize, q_idx: usize) -> &PolicyDecision {
        &self.cells[phi_idx * self.qs.len() + q_idx]
    }

    /// CSV emission: header `phi,q,decision,rank1,rank2,rank3`, one row per
    /// cell in row-major order, full-precision floats.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "phi,q,decision,rank1,rank2,rank3")?;
        for (idx, cell) in self.cells.iter().enumerate() {
            let phi = self.phis[idx / self.qs.len()];
            let q = self.qs[idx % self.qs.len()];
            writeln!(
                out,
                "{},{},{},{},{},{}",
                phi,
                q,
                cell.decision.label(),
                cell.ranking[0].label(),
                cell.ranking[1].label(),
                cell.ranking[2].label()
            )?;
        }
        Ok(())
    }

    /// Self-contained SVG heatmap of the decision regions: phi on the
    /// horizontal axis, q on the vertical (origin bottom-left), one fixed
    /// color per policy, legend embedded.
    pub fn write_svg<W: Write>(&self, out: &mut W) -> Result<()> {
        const CELL: f64 = 6.0;
        const MARGIN_LEFT: f64 = 58.0;
        const MARGIN_BOTTOM: f64 = 46.0;
        const MARGIN_TOP: f64 = 16.0;
        const LEGEND_W: f64 = 170.0;

        let nx = self.phis.len();
        let ny = self.qs.len();
        let plot_w = CELL * nx as f64;
        let plot_h = CELL * ny as f64;
        let width = MARGIN_LEFT + plot_w + LEGEND_W;
        let height = MARGIN_TOP + plot_h + MARGIN_BOTTOM;

        writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
             viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\" font-size=\"12\">"
        )?;
        writeln!(
            out,
            "  <rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>"
        )?;
        for (idx, cell) in self.cells.iter().enumerate() {
            let i = idx / ny; // phi index -> x
            let j = idx % ny; // q index -> y (flipped)
            let x = MARGIN_LEFT + i as f64 * CELL;
            let y = MARGIN_TOP + (ny - 1 - j) as f64 * CELL;
            writeln!(
                out,
                "  <rect x=\"{x}\" y=\"{y}\" width=\"{CELL}\" height=\"{CELL}\" fill=\"{}\"/>",
                svg_color(cell.decision)
            )?;
        }
        // Axes and labels.
        let axis_y = MARGIN_TOP + plot_h;
        writeln!(
            out,
            "  <rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{plot_w}\" height=\"{plot_h}\" \
             fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>"
        )?;
        writeln!(
            out,
            "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">phi</text>",
            MARGIN_LEFT + plot_w / 2.0,
            axis_y + 34.0
        )?;
        writeln!(
            out,
            "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 {} {})\">q</text>",
            MARGIN_LEFT - 40.0,
            MARGIN_TOP + plot_h / 2.0,
            MARGIN_LEFT - 40.0,
            MARGIN_TOP + plot_h / 2.0
        )?;
        for (t, label) in [(0.0, "0"), (1.0, "1")] {
            writeln!(
                out,
                "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{label}</text>",
                MARGIN_LEFT + t * plot_w,
                axis_y + 16.0
            )?;
            writeln!(
                out,
                "  <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{label}</text>",
                MARGIN_LEFT - 6.0,
                MARGIN_TOP + (1.0 - t) * plot_h + 4.0
            )?;
        }
        // Legend.
        let lx = MARGIN_LEFT + plot_w + 16.0;
        for (row, policy) in [
            Policy::Impose(OptionId::One),
            Policy::Impose(OptionId::Two),
            Policy::LaissezFaire,
        ]
        .into_iter()
        .enumerate()
        {
            let ly = MARGIN_TOP + 8.0 + row as f64 * 22.0;
            writeln!(
                out,
                "  <rect x=\"{lx}\" y=\"{ly}\" width=\"14\" height=\"14\" fill=\"{}\" \
                 stroke=\"black\" stroke-width=\"0.5\"/>",
                svg_color(policy)
            )?;
            writeln!(
                out,
                "  <text x=\"{}\" y=\"{}\">{}</text>",
                lx + 20.0,
                ly + 12.0,
                policy.label()
            )?;
        }
        writeln!(out, "</svg>")?;
        Ok(())
    }
}

fn svg_color(policy: Policy) -> &'static str {
    match policy {
        Policy::Impose(OptionId::One) => "#d95f02",
        Policy::Impose(OptionId::Two) => "#7570b3",
        Policy::LaissezFaire => "#1b9e77",
    }
}

/// Whether the Chooser mistakes the CA believes in work in her favor:
/// a One-preferring CA benefits iff she believes more Choosers pick One
/// than truly prefer it (`pi_prime_belief > pi_belief`), and mirrored for
/// a Two-preferring CA. Strict inequalities.
pub fn mistakes_benefit_ca(ca: &CAProfile, beliefs: &BeliefSet) -> bool {
    match ca.preferred {
        OptionId::One => beliefs.pi_prime_belief > beliefs.pi_belief,
        OptionId::Two => beliefs.pi_prime_belief < beliefs.pi_belief,
    }
}
