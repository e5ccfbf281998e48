//! Probit estimation of the self-interest weight from imposed options.
//!
//! Generates a synthetic intervention panel from known parameters (each
//! intervening CA imposes One when her welfare gap plus Fechner noise is
//! positive), fits the two-parameter model by maximum likelihood, and
//! checks the recovered parameters, confidence intervals, and the
//! classifier built on top of the fit.
//!
//! Run with: cargo run --example fit_recovery

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use paternalism::{
    confusion_compare, fit, impose_probability, predict_classify, welfare_gap, FitOptions,
    ObservationRecord, OptionId, Result, DEFAULT_CLASSIFY_THRESHOLD,
};

const PHI_TRUE: f64 = 0.3;
const SIGMA_TRUE: f64 = 0.8;

fn synthetic(n: usize, seed: u64) -> Result<Vec<ObservationRecord>> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, SIGMA_TRUE).expect("positive sigma");
    (0..n)
        .map(|_| {
            let ca_type = if rng.gen_bool(0.5) {
                OptionId::One
            } else {
                OptionId::Two
            };
            let pi_belief = rng.gen_range(0.2..=0.9);
            let gap = welfare_gap(ca_type, PHI_TRUE, pi_belief);
            let imposed_one = gap + noise.sample(&mut rng) > 0.0;
            ObservationRecord::new(ca_type, pi_belief, imposed_one)
        })
        .collect()
}

fn main() -> Result<()> {
    let data = synthetic(5000, 7)?;
    println!(
        "synthetic panel: {} interventions, {:.1}% imposing One, truth (phi, sigma) = ({PHI_TRUE}, {SIGMA_TRUE})",
        data.len(),
        100.0 * data.iter().filter(|r| r.imposed_one).count() as f64 / data.len() as f64,
    );

    let result = fit(&data, FitOptions::default())?;
    let ci_phi = result.ci95_phi.expect("healthy fit has intervals");
    let ci_sigma = result.ci95_sigma.expect("healthy fit has intervals");
    println!(
        "\nfit (converged = {}, {} iterations):",
        result.converged, result.iterations
    );
    println!(
        "  phi_hat   = {:.4}  95% CI [{:.4}, {:.4}]",
        result.phi_hat, ci_phi.0, ci_phi.1
    );
    println!(
        "  sigma_hat = {:.4}  95% CI [{:.4}, {:.4}]",
        result.sigma_hat, ci_sigma.0, ci_sigma.1
    );
    println!(
        "  loglik    = {:.2} over {} observations",
        result.loglik, result.n_obs
    );
    println!("\nJSON as emitted by the CLI `fit` subcommand:");
    result.write_json(std::io::stdout().lock())?;

    // How the fitted model scores a One-preferring CA at various beliefs.
    println!("\nP(impose One | One-preferring CA) under the fit:");
    for pi in [0.2, 0.4, 0.6, 0.8] {
        let p = impose_probability(OptionId::One, result.phi_hat, pi, result.sigma_hat)?;
        println!("  believed share {pi:.1} -> {p:.4}");
    }

    // Classify at the default 0.5 cutoff and cross-tabulate against a
    // deliberately coarse rival (always predict the CA's own taste).
    let model = predict_classify(&data, &result, DEFAULT_CLASSIFY_THRESHOLD)?;
    let rival: Vec<bool> = data.iter().map(|r| r.ca_type == OptionId::One).collect();
    let actual: Vec<bool> = data.iter().map(|r| r.imposed_one).collect();
    let table = confusion_compare(&model, &rival, &actual)?;
    println!("\nmodel vs own-taste rival (rows: model wrong/right, cols: rival wrong/right):");
    println!("  [{:>5} {:>5}]", table.counts[0][0], table.counts[0][1]);
    println!(
        "  [{:>5} {:>5}]   n = {}",
        table.counts[1][0],
        table.counts[1][1],
        table.total()
    );
    Ok(())
}
