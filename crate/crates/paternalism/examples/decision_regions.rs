//! Welfare evaluation and optimal-policy regions.
//!
//! Walks one Choice Architect through the three policy values (impose own,
//! impose other, laissez-faire), shows how Chooser mistakes shift the
//! intervention boundary, and renders the full (phi, q) decision map as CSV
//! and SVG under target/example-artifacts/.
//!
//! Run with: cargo run --example decision_regions

use std::fs::{self, File};
use std::io::BufWriter;

use paternalism::{
    boundary_q, freedom_delta, mistakes_benefit_ca, optimal_policy, region_grid, welfare_freedom,
    welfare_freedom_closed, welfare_imposed, BeliefSet, CAProfile, OptionId, PopulationState,
    Result, DEFAULT_TIE_TOL,
};

fn main() -> Result<()> {
    // A moderately self-interested CA who prefers option One, facing a
    // population where 40% genuinely agree with her.
    let ca = CAProfile::new(OptionId::One, 0.3)?;
    let clean = PopulationState::mistake_free(0.4)?;

    let w_own = welfare_imposed(&ca, clean.pi, OptionId::One)?;
    let w_other = welfare_imposed(&ca, clean.pi, OptionId::Two)?;
    let w_free = welfare_freedom(&ca, &clean)?;
    println!("CA(pref=One, phi={}), pi = {}", ca.phi, clean.pi);
    println!("  impose One:    {w_own:.4}");
    println!("  impose Two:    {w_other:.4}");
    println!("  laissez-faire: {w_free:.4} (mistake-free)");
    let decision = optimal_policy(&ca, clean.pi, &clean, DEFAULT_TIE_TOL)?;
    println!("  decision:      {}", decision.decision.label());

    // Mistakes erode the value of freedom. The mixture evaluation and the
    // algebraic closed form agree to machine precision; the delta relative
    // to the mistake-free baseline is linear in the mistake rates.
    let noisy = PopulationState::new(0.4, 0.08, 0.05)?;
    let w_noisy = welfare_freedom(&ca, &noisy)?;
    println!(
        "\nWith mistakes eps_x = {}, eps_y = {}:",
        noisy.eps_x, noisy.eps_y
    );
    println!("  freedom (mixture):     {w_noisy:.6}");
    println!(
        "  freedom (closed form): {:.6}",
        welfare_freedom_closed(&ca, &noisy)?
    );
    println!(
        "  delta vs mistake-free: {:+.6}",
        freedom_delta(&ca, &noisy)?
    );
    let decision = optimal_policy(&ca, noisy.pi, &noisy, DEFAULT_TIE_TOL)?;
    println!("  decision now:          {}", decision.decision.label());

    // The CA benefits from mistakes exactly when they push Choosers toward
    // her preferred option on net.
    let beliefs = BeliefSet::new(0.4, noisy.pi_prime())?;
    println!(
        "  mistakes net-favor CA: {}",
        if mistakes_benefit_ca(&ca, &beliefs) {
            "yes"
        } else {
            "no"
        }
    );

    // Along the q axis the intervention frontier is (1-2*phi)/(2*(1-phi))
    // for phi < 1/2 and disappears afterwards: strong self-interest imposes
    // regardless of how unpopular the CA's taste is.
    println!("\nIntervention frontier q*(phi) in the mistake-free world:");
    for phi in [0.0, 0.2, 0.4, 0.49, 0.5, 0.8] {
        match boundary_q(phi)? {
            Some(q) => println!("  phi = {phi:<4} -> impose One when q > {q:.4}"),
            None => println!("  phi = {phi:<4} -> imposes own taste at every q"),
        }
    }

    // Full decision map, once clean and once with asymmetric mistakes.
    let dir = std::path::Path::new("target/example-artifacts");
    fs::create_dir_all(dir)?;
    for (name, template) in [
        ("regions_clean", None),
        (
            "regions_noisy",
            Some(PopulationState::new(0.5, 0.05, 0.10)?),
        ),
    ] {
        let grid = region_grid(101, 101, template)?;
        let mut csv = BufWriter::new(File::create(dir.join(format!("{name}.csv")))?);
        grid.write_csv(&mut csv)?;
        let mut svg = BufWriter::new(File::create(dir.join(format!("{name}.svg")))?);
        grid.write_svg(&mut svg)?;
        let imposing = grid
            .cells
            .iter()
            .filter(|c| c.decision.label() != "laissez_faire")
            .count();
        println!(
            "\n{name}: {} cells, {imposing} imposing -> {}/{{csv,svg}}",
            grid.cells.len(),
            dir.join(name).display()
        );
    }
    Ok(())
}
