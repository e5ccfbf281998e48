//! Frequentist tests used when analyzing experiment panels: a
//! continuity-corrected two-proportion test and Page's test for a monotone
//! trend across ordered conditions.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{domain_err, Error, Result};
use crate::estimation::Knowledge;

/// A count of successes out of a total, e.g. "43 of 54 imposed".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProportionSample {
    pub successes: u64,
    pub total: u64,
}

impl ProportionSample {
    pub fn new(successes: u64, total: u64) -> Result<Self> {
        if total == 0 {
            return Err(domain_err!("proportion sample needs a positive total"));
        }
        if successes > total {
            return Err(domain_err!("successes {successes} exceed total {total}"));
        }
        Ok(Self { successes, total })
    }

    fn failures(self) -> u64 {
        self.total - self.successes
    }
}

/// Result of the two-proportion chi-squared test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropTestResult {
    /// Continuity-corrected chi-squared statistic (1 degree of freedom).
    pub chi2: f64,
    /// Two-sided p-value.
    pub p: f64,
    /// True when a margin of the 2x2 table is empty, making the statistic
    /// undefined; `chi2` is reported as 0 and `p` as 1 in that case.
    pub degenerate: bool,
}

fn chi2_sf_df1(x: f64) -> f64 {
    ChiSquared::new(1.0).expect("df = 1 is valid").sf(x)
}

/// Two-proportion chi-squared test with Yates' continuity correction.
///
/// Each |O - E| is reduced by 1/2 (floored at zero) before squaring, so the
/// statistic is conservative relative to the uncorrected test and is exactly
/// zero for identical proportions.
pub fn prop_test_yates(a: ProportionSample, b: ProportionSample) -> Result<PropTestResult> {
    let observed = [
        [a.successes as f64, a.failures() as f64],
        [b.successes as f64, b.failures() as f64],
    ];
    let row = [a.total as f64, b.total as f64];
    let col = [
        observed[0][0] + observed[1][0],
        observed[0][1] + observed[1][1],
    ];
    let n = row[0] + row[1];
    if col[0] == 0.0 || col[1] == 0.0 {
        return Ok(PropTestResult {
            chi2: 0.0,
            p: 1.0,
            degenerate: true,
        });
    }
    let mut chi2 = 0.0;
    for (i, row_total) in row.iter().enumerate() {
        for (j, col_total) in col.iter().enumerate() {
            let expected = row_total * col_total / n;
            let d = ((observed[i][j] - expected).abs() - 0.5).max(0.0);
            chi2 += d * d / expected;
        }
    }
    Ok(PropTestResult {
        chi2,
        p: chi2_sf_df1(chi2),
        degenerate: false,
    })
}

/// A subjects-by-conditions panel of scores, columns in hypothesized order.
#[derive(Debug, Clone, PartialEq)]
pub struct RankPanel {
    rows: Vec<Vec<f64>>,
    conditions: usize,
}

impl RankPanel {
    /// Builds a panel from per-subject rows; every row must have the same
    /// number (at least two) of finite scores.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let conditions = match rows.first() {
            Some(r) => r.len(),
            None => return Err(domain_err!("rank panel needs at least one subject row")),
        };
        if conditions < 2 {
            return Err(domain_err!("rank panel needs at least two conditions"));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != conditions {
                return Err(domain_err!(
                    "row {i} has {} entries, expected {conditions}",
                    row.len()
                ));
            }
            if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
                return Err(domain_err!("row {i} contains non-finite score {bad}"));
            }
        }
        Ok(Self { rows, conditions })
    }

    pub fn subjects(&self) -> usize {
        self.rows.len()
    }

    pub fn conditions(&self) -> usize {
        self.conditions
    }
}

/// Result of Page's trend test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PageTestResult {
    /// Page's L statistic (midranks, so possibly half-integral under ties).
    pub l: f64,
    /// Normal approximation z-score; negative for a decreasing trend.
    pub z: f64,
    /// z squared, referred to a chi-squared with 1 degree of freedom.
    pub chi2: f64,
    /// Two-sided p-value.
    pub p: f64,
    /// True when any row contained tied scores (midranks were used; the
    /// variance has no tie correction, which is conservative).
    pub tied: bool,
}

/// Midranks of one row: average ranks over runs of equal values. Returns
/// the ranks in original column order and whether any tie occurred.
fn midranks(row: &[f64]) -> (Vec<f64>, bool) {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&i, &j| {
        row[i]
            .partial_cmp(&row[j])
            .expect("scores validated finite")
    });
    let mut ranks = vec![0.0; row.len()];
    let mut tied = false;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && row[order[end]] == row[order[start]] {
            end += 1;
        }
        if end - start > 1 {
            tied = true;
        }
        // Ranks are 1-based; a run [start, end) shares the average rank.
        let avg = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = avg;
        }
        start = end;
    }
    (ranks, tied)
}

fn page_trend_from_l(l: f64, subjects: usize, conditions: usize, tied: bool) -> PageTestResult {
    let n = subjects as f64;
    let k = conditions as f64;
    let mean = n * k * (k + 1.0) * (k + 1.0) / 4.0;
    let variance = n * k * k * (k + 1.0) * (k * k - 1.0) / 144.0;
    let z = (l - mean) / variance.sqrt();
    let chi2 = z * z;
    PageTestResult {
        l,
        z,
        chi2,
        p: chi2_sf_df1(chi2),
        tied,
    }
}

/// Page's test for a monotone trend across the panel's column order.
///
/// Each subject's scores are converted to within-row midranks; the statistic
/// is `L = Σ_j j · R_j` with `R_j` the rank sum of column `j`. Inference
/// uses the large-sample normal approximation, reported two-sided via
/// `chi2 = z²` on one degree of freedom.
pub fn pages_l(panel: &RankPanel) -> Result<PageTestResult> {
    let mut rank_sums = vec![0.0; panel.conditions];
    let mut tied = false;
    for row in &panel.rows {
        let (ranks, row_tied) = midranks(row);
        tied |= row_tied;
        for (sum, r) in rank_sums.iter_mut().zip(&ranks) {
            *sum += r;
        }
    }
    let l: f64 = rank_sums
        .iter()
        .enumerate()
        .map(|(j, r)| (j + 1) as f64 * r)
        .sum();
    Ok(page_trend_from_l(
        l,
        panel.subjects(),
        panel.conditions,
        tied,
    ))
}

/// Reads a rank panel from CSV: one row per subject, one column per
/// condition in hypothesized order. A non-numeric first row is treated as a
/// header; `#` lines are comments.
pub fn read_rank_panel_csv<R: std::io::Read>(reader: R) -> Result<RankPanel> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let record = record?;
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if i == 0 && rows.is_empty() => continue, // header row
            Err(_) => {
                return Err(Error::Parse(format!(
                    "non-numeric score in panel row {}: {record:?}",
                    i + 1
                )));
            }
        }
    }
    RankPanel::new(rows)
}

/// Position of a knowledge level on the standard information grid
/// 0, 1, 2, 5, 10, 25, 50, 1000, exact — the condition order used for trend
/// tests over simulated experiments.
pub fn k_rank(k: Knowledge) -> Result<usize> {
    let rank = match k {
        Knowledge::Draws(0) => 0,
        Knowledge::Draws(1) => 1,
        Knowledge::Draws(2) => 2,
        Knowledge::Draws(5) => 3,
        Knowledge::Draws(10) => 4,
        Knowledge::Draws(25) => 5,
        Knowledge::Draws(50) => 6,
        Knowledge::Draws(1000) => 7,
        Knowledge::Exact => 8,
        Knowledge::Draws(other) => {
            return Err(domain_err!(
                "draw count {other} is not on the standard grid"
            ));
        }
    };
    Ok(rank)
}
