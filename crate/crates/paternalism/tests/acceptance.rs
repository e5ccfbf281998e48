//! Acceptance gate: eight criteria, one test (and one pass/fail line) each.
//!
//! Every tolerance is pinned here in code. Run with
//! `cargo test --test acceptance -- --nocapture` to see the verdict lines;
//! the default runner already reports one ok/FAILED line per criterion.

use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use paternalism::{
    boundary_q, confusion_compare, fit, freedom_delta, intervention_rate_curve, k_rank,
    marginal_posterior_pdf, optimal_policy, pages_l, posterior_summary, prop_test_yates,
    region_grid, run_experiment, welfare_freedom, welfare_freedom_closed, welfare_gap,
    welfare_imposed, CAProfile, FitOptions, Knowledge, ObservationRecord, OptionId, PdfMethod,
    Policy, PopulationState, ProportionSample, RankPanel, SimConfig, DEFAULT_QUAD_PANELS,
    DEFAULT_TIE_TOL, STANDARD_K_GRID,
};

fn verdict(criterion: usize, label: &str, pass: bool, detail: &str) {
    let word = if pass { "PASS" } else { "FAIL" };
    println!("acceptance {criterion} ({label}): {word} — {detail}");
    assert!(pass, "acceptance {criterion} ({label}): FAIL — {detail}");
}

// ---------------------------------------------------------------------------
// 1. The posterior-table subcommand reproduces the printed summary table.

/// Printed 3-decimal reference values: per k, the cells
/// (mean, median, mode, var, mae, rmse, kl, w1); `None` marks a cell that
/// is not a finite printed number (no mode at k = 0, divergent KL at k=inf).
const TABLE_ORACLE: [(&str, [Option<f64>; 8]); 9] = [
    (
        "0",
        [
            Some(0.500),
            Some(0.500),
            None,
            Some(0.083),
            Some(0.340),
            Some(0.416),
            Some(0.000),
            Some(0.000),
        ],
    ),
    (
        "1",
        [
            Some(0.400),
            Some(0.362),
            Some(0.000),
            Some(0.073),
            Some(0.261),
            Some(0.337),
            Some(0.062),
            Some(0.100),
        ],
    ),
    (
        "2",
        [
            Some(0.350),
            Some(0.307),
            Some(0.000),
            Some(0.062),
            Some(0.222),
            Some(0.290),
            Some(0.148),
            Some(0.150),
        ],
    ),
    (
        "5",
        [
            Some(0.286),
            Some(0.252),
            Some(0.083),
            Some(0.040),
            Some(0.167),
            Some(0.217),
            Some(0.338),
            Some(0.214),
        ],
    ),
    (
        "10",
        [
            Some(0.250),
            Some(0.228),
            Some(0.163),
            Some(0.025),
            Some(0.128),
            Some(0.165),
            Some(0.526),
            Some(0.250),
        ],
    ),
    (
        "25",
        [
            Some(0.222),
            Some(0.212),
            Some(0.187),
            Some(0.011),
            Some(0.086),
            Some(0.109),
            Some(0.852),
            Some(0.280),
        ],
    ),
    (
        "50",
        [
            Some(0.212),
            Some(0.206),
            Some(0.194),
            Some(0.006),
            Some(0.062),
            Some(0.079),
            Some(1.152),
            Some(0.297),
        ],
    ),
    (
        "1000",
        [
            Some(0.201),
            Some(0.200),
            Some(0.200),
            Some(0.000),
            Some(0.014),
            Some(0.018),
            Some(2.607),
            Some(0.330),
        ],
    ),
    (
        "inf",
        [
            Some(0.200),
            Some(0.200),
            Some(0.200),
            Some(0.000),
            Some(0.000),
            Some(0.000),
            None,
            Some(0.340),
        ],
    ),
];

/// 3-decimal printing quantizes at 5e-4; the extra 1e-9 admits values that
/// sit exactly on a rounding boundary (k = 2 variance is exactly 0.0615).
const TABLE_TOL: f64 = 5e-4 + 1e-9;
const TABLE_TIME_BUDGET_S: f64 = 30.0;

#[test]
fn criterion_1_posterior_table_matches_printed_values() {
    let start = Instant::now();
    let output = Command::new(env!("CARGO_BIN_EXE_paternalism"))
        .args(["posterior-table", "--p", "0.2", "--ref", "0.2"])
        .output()
        .expect("binary runs");
    let elapsed = start.elapsed().as_secs_f64();
    assert!(output.status.success(), "exit: {:?}", output.status);
    let text = String::from_utf8(output.stdout).expect("UTF-8 output");

    let mut rows = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .skip(1); // header
    let mut checked = 0usize;
    let mut worst: f64 = 0.0;
    for (k_label, cells) in TABLE_ORACLE {
        let row = rows
            .next()
            .unwrap_or_else(|| panic!("missing row for k = {k_label}"));
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 9, "row shape: {row}");
        assert_eq!(fields[0], k_label, "row order: {row}");
        for (cell, printed) in fields[1..].iter().zip(cells) {
            let Some(reference) = printed else {
                // Not part of the finite-cell comparison; still sanity-check
                // the emitted representation.
                assert!(
                    cell.is_empty() || *cell == "inf",
                    "expected empty/inf cell for k = {k_label}, got {cell}"
                );
                continue;
            };
            let value: f64 = cell.parse().unwrap_or_else(|_| panic!("bad cell {cell}"));
            worst = worst.max((value - reference).abs());
            checked += 1;
        }
    }
    assert!(rows.next().is_none(), "unexpected extra rows");

    let pass = worst <= TABLE_TOL && elapsed < TABLE_TIME_BUDGET_S && checked >= 36;
    verdict(
        1,
        "posterior table vs printed values",
        pass,
        &format!(
            "{checked} finite cells, worst |diff| = {worst:.2e} (tol {TABLE_TOL:.2e}), {elapsed:.1}s (< {TABLE_TIME_BUDGET_S}s)"
        ),
    );
}

// ---------------------------------------------------------------------------
// 2. Hand-derived closed forms at k = 1.

const DENSITY_TOL: f64 = 1e-9;
const MEDIAN_REF: f64 = 0.3615;
const MEDIAN_TOL: f64 = 1e-4;
const KL_REF: f64 = 0.0624;
const KL_TOL: f64 = 5e-4;

#[test]
fn criterion_2_single_draw_closed_forms() {
    // One draw at p = 0.2 mixes Beta(2,1) and Beta(1,2) with weights
    // (0.2, 0.8): f(x) = 0.2*2x + 0.8*2(1-x) = 1.6 - 1.2x.
    let mut worst_density: f64 = 0.0;
    for i in 0..=1000 {
        let x = i as f64 / 1000.0;
        let f = marginal_posterior_pdf(1, 0.2, x, PdfMethod::Auto).unwrap();
        worst_density = worst_density.max((f - (1.6 - 1.2 * x)).abs());
    }

    let summary = posterior_summary(Knowledge::Draws(1), 0.2, 0.2, DEFAULT_QUAD_PANELS).unwrap();
    let median_err = (summary.median - MEDIAN_REF).abs();
    let kl_err = (summary.kl - KL_REF).abs();

    let pass = worst_density <= DENSITY_TOL && median_err <= MEDIAN_TOL && kl_err <= KL_TOL;
    verdict(
        2,
        "k=1 analytic oracles",
        pass,
        &format!(
            "density worst |diff| = {worst_density:.2e} (tol {DENSITY_TOL:.0e}), \
             median = {:.6} (ref {MEDIAN_REF} ± {MEDIAN_TOL}), kl = {:.6} (ref {KL_REF} ± {KL_TOL})",
            summary.median, summary.kl
        ),
    );
}

// ---------------------------------------------------------------------------
// 3. The two density forms agree everywhere.

const FORM_REL_TOL: f64 = 1e-9;

#[test]
fn criterion_3_density_form_equivalence() {
    let mut worst: f64 = 0.0;
    for k in 0..=50u32 {
        for p in [0.2, 0.7] {
            for i in 0..=1000 {
                let x = i as f64 / 1000.0;
                let s = marginal_posterior_pdf(k, p, x, PdfMethod::Sum).unwrap();
                let h = marginal_posterior_pdf(k, p, x, PdfMethod::Hypergeometric).unwrap();
                let rel = (s - h).abs() / s.abs().max(h.abs()).max(f64::MIN_POSITIVE);
                worst = worst.max(rel);
            }
        }
    }
    let pass = worst <= FORM_REL_TOL;
    verdict(
        3,
        "summation vs hypergeometric form",
        pass,
        &format!(
            "51 k-values x 1001 grid points x 2 p-values, worst relative diff = {worst:.2e} (tol {FORM_REL_TOL:.0e})"
        ),
    );
}

// ---------------------------------------------------------------------------
// 4. Theory identities: closed form, mistake delta, classification, frontier.

const MIXTURE_TOL: f64 = 1e-12;
const DELTA_TOL: f64 = 1e-12;
const MIXTURE_TUPLES: usize = 100_000;
const CLASS_GRID: usize = 201;

#[test]
fn criterion_4_welfare_identities_and_classification() {
    let mut rng = ChaCha12Rng::seed_from_u64(20_240_814);
    let mut worst_mixture: f64 = 0.0;
    let mut worst_delta: f64 = 0.0;
    for _ in 0..MIXTURE_TUPLES {
        let phi: f64 = rng.gen();
        let pi: f64 = rng.gen();
        let eps_x = rng.gen::<f64>() * pi;
        let eps_y = rng.gen::<f64>() * (1.0 - pi);
        let pop = PopulationState::new(pi, eps_x, eps_y).unwrap();
        for preferred in [OptionId::One, OptionId::Two] {
            let ca = CAProfile::new(preferred, phi).unwrap();
            let mixture = welfare_freedom(&ca, &pop).unwrap();
            let closed = welfare_freedom_closed(&ca, &pop).unwrap();
            worst_mixture = worst_mixture.max((mixture - closed).abs());

            // Mistakes relative to the mistake-free world, in the CA's own
            // orientation: the rate away from her option enters with slope
            // -1, the rate toward it with -(1 - 2 phi).
            let (eps_away, eps_toward) = match preferred {
                OptionId::One => (eps_x, eps_y),
                OptionId::Two => (eps_y, eps_x),
            };
            let delta = freedom_delta(&ca, &pop).unwrap();
            let formula = -eps_away - eps_toward * (1.0 - 2.0 * phi);
            worst_delta = worst_delta.max((delta - formula).abs());
        }
    }

    // Mistake-free classification on the lattice: impose own taste exactly
    // when phi > 1/2 and the population is not unanimous for it; brute
    // force compares the three welfare values directly.
    let mut disagreements = 0usize;
    for i in 0..CLASS_GRID {
        let phi = i as f64 / (CLASS_GRID - 1) as f64;
        let ca = CAProfile::new(OptionId::One, phi).unwrap();
        for j in 0..CLASS_GRID {
            let q = j as f64 / (CLASS_GRID - 1) as f64;
            let pop = PopulationState::mistake_free(q).unwrap();
            let policy = optimal_policy(&ca, q, &pop, DEFAULT_TIE_TOL)
                .unwrap()
                .decision;

            let w_one = welfare_imposed(&ca, q, OptionId::One).unwrap();
            let w_two = welfare_imposed(&ca, q, OptionId::Two).unwrap();
            let w_free = welfare_freedom(&ca, &pop).unwrap();
            let brute = if w_free >= w_one.max(w_two) - DEFAULT_TIE_TOL {
                Policy::LaissezFaire
            } else if w_one >= w_two {
                Policy::Impose(OptionId::One)
            } else {
                Policy::Impose(OptionId::Two)
            };
            let proposition = if phi > 0.5 && q < 1.0 {
                Policy::Impose(OptionId::One)
            } else {
                Policy::LaissezFaire
            };
            if policy != brute || policy != proposition {
                disagreements += 1;
            }
        }
    }

    // Frontier between the two imposition options: within each phi < 1/2
    // row of the region map, the rank order of Impose(One) vs Impose(Two)
    // flips within one grid cell of (1-2 phi)/(2 (1-phi)).
    let grid = region_grid(CLASS_GRID, CLASS_GRID, None).unwrap();
    let cell_width = 1.0 / (CLASS_GRID - 1) as f64;
    let mut worst_frontier: f64 = 0.0;
    for (i, &phi) in grid.phis.iter().enumerate() {
        let Some(q_star) = boundary_q(phi).unwrap() else {
            continue;
        };
        let crossing = grid.qs.iter().enumerate().find_map(|(j, &q)| {
            let ranking = &grid.cell(i, j).ranking;
            let pos = |policy: Policy| ranking.iter().position(|&r| r == policy).unwrap();
            (pos(Policy::Impose(OptionId::One)) < pos(Policy::Impose(OptionId::Two))).then_some(q)
        });
        let q_cross = crossing.expect("imposing One must overtake by q = 1");
        worst_frontier = worst_frontier.max((q_cross - q_star).abs());
    }

    let pass = worst_mixture <= MIXTURE_TOL
        && worst_delta <= DELTA_TOL
        && disagreements == 0
        && worst_frontier <= cell_width;
    verdict(
        4,
        "welfare identities and classification",
        pass,
        &format!(
            "mixture vs closed form worst |diff| = {worst_mixture:.2e} over {MIXTURE_TUPLES} tuples (tol {MIXTURE_TOL:.0e}), \
             mistake-delta worst |diff| = {worst_delta:.2e} (tol {DELTA_TOL:.0e}), \
             {disagreements} classification disagreements on {CLASS_GRID}x{CLASS_GRID}, \
             frontier worst offset = {worst_frontier:.4} (cell {cell_width:.4})"
        ),
    );
}

// ---------------------------------------------------------------------------
// 5. Two-proportion chi-square oracles.

const CHI2_A_REF: f64 = 4.69;
const CHI2_A_TOL: f64 = 0.01;
const P_A_REF: f64 = 0.03;
const P_A_TOL: f64 = 0.005;
const CHI2_B_REF: f64 = 13.8;
const CHI2_B_TOL: f64 = 0.1;
const P_B_MAX: f64 = 0.001;

#[test]
fn criterion_5_proportion_test_oracles() {
    let a = prop_test_yates(
        ProportionSample::new(43, 54).unwrap(),
        ProportionSample::new(12, 23).unwrap(),
    )
    .unwrap();
    let b = prop_test_yates(
        ProportionSample::new(13, 54).unwrap(),
        ProportionSample::new(15, 236).unwrap(),
    )
    .unwrap();
    let pass = (a.chi2 - CHI2_A_REF).abs() <= CHI2_A_TOL
        && (a.p - P_A_REF).abs() <= P_A_TOL
        && (b.chi2 - CHI2_B_REF).abs() <= CHI2_B_TOL
        && b.p < P_B_MAX;
    verdict(
        5,
        "chi-square oracles",
        pass,
        &format!(
            "43/54 vs 12/23: chi2 = {:.4} (ref {CHI2_A_REF} ± {CHI2_A_TOL}), p = {:.4} (ref {P_A_REF} ± {P_A_TOL}); \
             13/54 vs 15/236: chi2 = {:.4} (ref {CHI2_B_REF} ± {CHI2_B_TOL}), p = {:.2e} (< {P_B_MAX})",
            a.chi2, a.p, b.chi2, b.p
        ),
    );
}

// ---------------------------------------------------------------------------
// 6. Parameter recovery across many synthetic panels.

const RECOVERY_REPS: usize = 200;
const RECOVERY_N: usize = 5000;
const PHI_STAR: f64 = 0.3;
const SIGMA_STAR: f64 = 0.8;
const BELIEF_RANGE: (f64, f64) = (0.2, 0.9);
const MEDIAN_ABS_ERR_MAX: f64 = 0.03;
const COVERAGE_RANGE: (f64, f64) = (0.90, 0.98);
const GRAD_NORM_MAX: f64 = 1e-4;
const RECOVERY_TIME_BUDGET_S: f64 = 120.0;
const GRAD_STEP: f64 = 1e-5;

fn synthetic_panel(n: usize, rng: &mut ChaCha12Rng) -> Vec<ObservationRecord> {
    let noise = Normal::new(0.0, SIGMA_STAR).unwrap();
    (0..n)
        .map(|_| {
            let ca_type = if rng.gen_bool(0.5) {
                OptionId::One
            } else {
                OptionId::Two
            };
            let pi_belief = rng.gen_range(BELIEF_RANGE.0..=BELIEF_RANGE.1);
            let gap = welfare_gap(ca_type, PHI_STAR, pi_belief);
            let imposed_one = gap + noise.sample(rng) > 0.0;
            ObservationRecord::new(ca_type, pi_belief, imposed_one).unwrap()
        })
        .collect()
}

#[test]
fn criterion_6_mle_recovery() {
    let start = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(6);
    let mut abs_errors = Vec::with_capacity(RECOVERY_REPS);
    let mut covered = 0usize;
    let mut worst_grad: f64 = 0.0;
    for _ in 0..RECOVERY_REPS {
        let data = synthetic_panel(RECOVERY_N, &mut rng);
        let result = fit(&data, FitOptions::default()).unwrap();
        assert!(
            result.converged,
            "fit did not converge: {:?}",
            result.diagnostic
        );
        abs_errors.push((result.phi_hat - PHI_STAR).abs());
        let (lo, hi) = result.ci95_phi.expect("converged fit has intervals");
        if lo <= PHI_STAR && PHI_STAR <= hi {
            covered += 1;
        }

        // Central finite differences of the log-likelihood at the reported
        // optimum.
        let ll = |phi: f64, sigma: f64| paternalism::log_likelihood(&data, phi, sigma).unwrap();
        let g_phi = (ll(result.phi_hat + GRAD_STEP, result.sigma_hat)
            - ll(result.phi_hat - GRAD_STEP, result.sigma_hat))
            / (2.0 * GRAD_STEP);
        let g_sigma = (ll(result.phi_hat, result.sigma_hat + GRAD_STEP)
            - ll(result.phi_hat, result.sigma_hat - GRAD_STEP))
            / (2.0 * GRAD_STEP);
        worst_grad = worst_grad.max(g_phi.hypot(g_sigma));
    }
    let elapsed = start.elapsed().as_secs_f64();

    abs_errors.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median_err = (abs_errors[RECOVERY_REPS / 2 - 1] + abs_errors[RECOVERY_REPS / 2]) / 2.0;
    let coverage = covered as f64 / RECOVERY_REPS as f64;

    let pass = median_err <= MEDIAN_ABS_ERR_MAX
        && coverage >= COVERAGE_RANGE.0
        && coverage <= COVERAGE_RANGE.1
        && worst_grad < GRAD_NORM_MAX
        && elapsed < RECOVERY_TIME_BUDGET_S;
    verdict(
        6,
        "estimator recovery",
        pass,
        &format!(
            "{RECOVERY_REPS} panels of {RECOVERY_N}: median |phi_hat - {PHI_STAR}| = {median_err:.4} (max {MEDIAN_ABS_ERR_MAX}), \
             CI coverage = {coverage:.3} (range {COVERAGE_RANGE:?}), worst gradient norm = {worst_grad:.2e} (< {GRAD_NORM_MAX:.0e}), \
             {elapsed:.1}s (< {RECOVERY_TIME_BUDGET_S}s). External-dataset replication skipped: no archived panel is bundled."
        ),
    );
}

// ---------------------------------------------------------------------------
// 7. Interventions fall with information in the simulated experiment.

const TREND_SEEDS: u64 = 30;
const TREND_P_MAX: f64 = 0.01;

#[test]
fn criterion_7_intervention_trend() {
    let levels = STANDARD_K_GRID.len();
    let mut mean_rate = vec![0.0f64; levels];
    let mut rows = Vec::with_capacity(TREND_SEEDS as usize);
    let mut exact_below_blind_every_seed = true;
    for seed in 0..TREND_SEEDS {
        let cfg = SimConfig {
            n_choosers: 1200,
            n_cas: 300,
            seed,
            ..SimConfig::default()
        };
        let rates = intervention_rate_curve(&run_experiment(&cfg).unwrap()).unwrap();
        assert_eq!(rates.len(), levels);
        let mut row = vec![0.0f64; levels];
        for point in &rates {
            let rank = k_rank(point.k).unwrap();
            mean_rate[rank] += point.rate / TREND_SEEDS as f64;
            // Reversed condition order turns the falling curve into the
            // rising trend the rank statistic is one-sided against.
            row[levels - 1 - rank] = point.rate;
        }
        if rates[levels - 1].rate >= rates[0].rate {
            exact_below_blind_every_seed = false;
        }
        rows.push(row);
    }

    let monotone = mean_rate.windows(2).all(|w| w[1] <= w[0]);
    let trend = pages_l(&RankPanel::new(rows).unwrap()).unwrap();

    let pass = monotone && exact_below_blind_every_seed && trend.p < TREND_P_MAX && trend.z > 0.0;
    verdict(
        7,
        "intervention rate falls with information",
        pass,
        &format!(
            "mean curve over {TREND_SEEDS} seeds = [{}], non-increasing = {monotone}, \
             exact < blind in every seed = {exact_below_blind_every_seed}, \
             trend p = {:.2e} (< {TREND_P_MAX})",
            mean_rate
                .iter()
                .map(|r| format!("{r:.3}"))
                .collect::<Vec<_>>()
                .join(", "),
            trend.p
        ),
    );
}

// ---------------------------------------------------------------------------
// 8. Classifier cross-tabulation reproduces the reference table structure.

const CONFUSION_REF: [[u64; 2]; 2] = [[32, 4], [2, 94]];

#[test]
fn criterion_8_confusion_table_structure() {
    // Construct per-observation predictions whose agreement pattern matches
    // the reference cell counts exactly (rows: model A wrong/right,
    // columns: model B wrong/right).
    let mut pred_a = Vec::new();
    let mut pred_b = Vec::new();
    let mut actual = Vec::new();
    for (i, row) in CONFUSION_REF.iter().enumerate() {
        for (j, &count) in row.iter().enumerate() {
            for _ in 0..count {
                let truth = true;
                actual.push(truth);
                pred_a.push(if i == 1 { truth } else { !truth });
                pred_b.push(if j == 1 { truth } else { !truth });
            }
        }
    }
    let table = confusion_compare(&pred_a, &pred_b, &actual).unwrap();
    let total: u64 = CONFUSION_REF.iter().flatten().sum();
    let pass = table.counts == CONFUSION_REF && table.total() == total;
    verdict(
        8,
        "confusion table structure",
        pass,
        &format!(
            "counts = {:?} (ref {CONFUSION_REF:?}), total = {} (ref {total})",
            table.counts,
            table.total()
        ),
    );
}
