//! The marginal posterior of a lottery's loss probability after k draws.
//!
//! A Chooser who will see k binomial draws from a Bernoulli(p) loss process
//! holds, before drawing, a mixture of Beta posteriors ("marginal
//! posterior"). This example prints its summary table across the standard
//! information grid, verifies the two independent evaluation routes against
//! each other, and shows what the posterior-mean decision rule implies for
//! mistake rates.
//!
//! Run with: cargo run --example posterior_table

use paternalism::{
    chooser_choice, full_information_choice, marginal_mean_closed, marginal_posterior_pdf,
    mistake_probability, posterior_table, write_posterior_table_csv, EstimationGame, Knowledge,
    OptionId, PdfMethod, Result, DEFAULT_QUAD_PANELS, STANDARD_K_GRID,
};

fn main() -> Result<()> {
    let p = 0.2;

    // Summary statistics of the marginal posterior for each k, with error
    // measures taken against the true p. Printed at 3 decimals; the library
    // computes everything in full precision.
    let rows = posterior_table(&STANDARD_K_GRID, p, p, DEFAULT_QUAD_PANELS)?;
    let mut table = Vec::new();
    write_posterior_table_csv(&rows, Some(3), &mut table)?;
    print!("{}", String::from_utf8(table).expect("CSV is UTF-8"));

    // Two algebraically different forms of the same density: the explicit
    // Beta-mixture sum and a Gauss-hypergeometric polynomial. They agree to
    // near machine precision; Auto picks whichever is cheaper.
    println!("\nroute agreement at k = 25, x = 0.3:");
    let sum = marginal_posterior_pdf(25, p, 0.3, PdfMethod::Sum)?;
    let hyper = marginal_posterior_pdf(25, p, 0.3, PdfMethod::Hypergeometric)?;
    println!("  sum form:            {sum:.15}");
    println!("  hypergeometric form: {hyper:.15}");
    println!("  |rel diff|:          {:.2e}", ((sum - hyper) / sum).abs());

    // The pre-draw mean has a closed form linear in p.
    println!("\nclosed-form mean (k p + 1)/(k + 2):");
    for k in [0u32, 5, 50] {
        println!("  k = {k:<3} -> {:.6}", marginal_mean_closed(k, p));
    }

    // Decision behavior: the standard game pays 15 for the safe option and
    // a 20-or-0 lottery with true loss probability 0.2, so a fully informed
    // risk-neutral Chooser takes the lottery (EV 16). With few draws the
    // posterior mean overreacts to observed losses.
    println!("\nposterior-mean rule in the standard game (safe = One, lottery = Two):");
    for k in [0u32, 1, 2, 5, 10, 50] {
        let game = EstimationGame::standard(Knowledge::Draws(k));
        let full = full_information_choice(&game);
        let mistake = mistake_probability(&game)?;
        // The smallest observed loss count that flips the Chooser to safety.
        let flip = (0..=k).find(|&n| chooser_choice(&game, n).unwrap() == OptionId::One);
        println!(
            "  k = {k:<3} full-info: {:?}  P(choice != {:?}) = {mistake:.5}  first safe n: {}",
            full,
            full,
            flip.map_or("never".into(), |n| n.to_string()),
        );
    }
    let exact = EstimationGame::standard(Knowledge::Exact);
    println!(
        "  k = inf -> mistake probability {}",
        mistake_probability(&exact)?
    );
    Ok(())
}
