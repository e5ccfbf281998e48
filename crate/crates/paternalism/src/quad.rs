//! Adaptive composite Gauss–Legendre quadrature on [0, 1].
//!
//! The mesh starts from a uniform panel layout (plus any caller-supplied
//! interior edges, used to pin integrand kinks) and repeatedly bisects the
//! panel with the worst GL4-vs-GL8 error indicator until the summed
//! indicator is negligible or a panel budget is exhausted. Densities here
//! are polynomials, so convergence is immediate in practice; the budget
//! exists to turn pathological integrands into a reported error instead of
//! a silent bad number.

use crate::error::{Error, Result};

// Gauss–Legendre abscissae/weights on [-1, 1].
const GL4: [(f64, f64); 4] = [
    (-0.8611363115940526, 0.3478548451374538),
    (-0.3399810435848563, 0.6521451548625461),
    (0.3399810435848563, 0.6521451548625461),
    (0.8611363115940526, 0.3478548451374538),
];

#[allow(clippy::excessive_precision)] // 16-digit table values transcribed verbatim
const GL8: [(f64, f64); 8] = [
    (-0.9602898564975363, 0.1012285362903763),
    (-0.7966664774136267, 0.2223810344533745),
    (-0.5255324099163290, 0.3137066458778873),
    (-0.1834346424956498, 0.3626837833783620),
    (0.1834346424956498, 0.3626837833783620),
    (0.5255324099163290, 0.3137066458778873),
    (0.7966664774136267, 0.2223810344533745),
    (0.9602898564975363, 0.1012285362903763),
];

/// One mesh panel with its GL8 mass and GL4/GL8 error indicator.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Panel {
    pub a: f64,
    pub b: f64,
    pub mass: f64,
    pub err: f64,
}

fn gauss<const N: usize>(
    rule: &[(f64, f64); N],
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for &(t, w) in rule {
        acc += w * f(mid + half * t);
    }
    acc * half
}

pub(crate) fn gl4<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> f64 {
    gauss(&GL4, &mut f, a, b)
}

pub(crate) fn gl8<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> f64 {
    gauss(&GL8, &mut f, a, b)
}

fn make_panel(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> Panel {
    let coarse = gauss(&GL4, f, a, b);
    let fine = gauss(&GL8, f, a, b);
    Panel {
        a,
        b,
        mass: fine,
        err: (fine - coarse).abs(),
    }
}

/// Builds the adaptive mesh for `f` over [0, 1].
///
/// `base_panels` is the uniform starting resolution; `interior_edges` are
/// forced mesh points (deduplicated, endpoints ignored). Returns panels
/// sorted by position.
pub(crate) fn adaptive_mesh(
    mut f: impl FnMut(f64) -> f64,
    base_panels: usize,
    interior_edges: &[f64],
    abs_tol: f64,
) -> Result<Vec<Panel>> {
    let mut edges: Vec<f64> = (0..=base_panels)
        .map(|i| i as f64 / base_panels as f64)
        .collect();
    for &e in interior_edges {
        if e > 0.0 && e < 1.0 {
            edges.push(e);
        }
    }
    edges.sort_by(|x, y| x.partial_cmp(y).unwrap());
    edges.dedup();

    let mut panels: Vec<Panel> = edges
        .windows(2)
        .map(|w| make_panel(&mut f, w[0], w[1]))
        .collect();

    let budget = base_panels.saturating_mul(4);
    loop {
        let total_err: f64 = panels.iter().map(|p| p.err).sum();
        if total_err <= abs_tol || panels.len() >= budget {
            if total_err > abs_tol.max(1e-9) {
                return Err(Error::Numeric(format!(
                    "quadrature did not converge: residual {total_err:.3e} \
                     after {} panels (budget {budget})",
                    panels.len()
                )));
            }
            break;
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.partial_cmp(&y.1.err).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let Panel { a, b, .. } = panels[worst];
        // Bisection cannot make progress once the panel width hits the
        // floating-point floor; treat that as non-convergence.
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            return Err(Error::Numeric(format!(
                "quadrature stalled on panel [{a}, {b}] with residual {:.3e}",
                panels[worst].err
            )));
        }
        panels[worst] = make_panel(&mut f, a, mid);
        panels.insert(worst + 1, make_panel(&mut f, mid, b));
    }
    Ok(panels)
}

/// GL8 nodes/weights mapped onto [a, b].
pub(crate) fn gl8_nodes(a: f64, b: f64) -> [(f64, f64); 8] {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    GL8.map(|(t, w)| (mid + half * t, w * half))
}
