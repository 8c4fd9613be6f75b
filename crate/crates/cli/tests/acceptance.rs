//! One pass/fail line per acceptance criterion. Runs without the libtest
//! harness so the lines are always printed.

use std::process::Command;

use simpson_core::sampling::sample_unconditional;
use simpson_core::verify::{lemma_exhaustive, lemma_random, verify_theorems};
use simpson_core::{
    analyze_case, ls_coefficients, ls_oracle, run_conditional, run_unconditional, CollapsedTable,
    Condition, Family, Reversal, SamplerConfig, SimulationReport,
};

type Grid = [[f64; 3]; 6];

const UNCONDITIONAL_REVERSAL: Grid = [
    [0.0805, 0.3538, 0.8607],
    [0.0750, 0.3794, 0.8232],
    [0.1161, 0.4959, 0.9300],
    [0.2004, 0.7526, 0.9983],
    [0.1626, 0.6384, 0.9483],
    [0.1503, 0.6132, 0.9428],
];

const UNCONDITIONAL_NO_REVERSAL: Grid = [
    [0.9912, 0.9490, 0.5364],
    [0.9925, 0.9615, 0.5427],
    [0.9915, 0.9496, 0.5285],
    [1.0, 0.9767, 0.5395],
    [1.0, 0.9792, 0.5451],
    [1.0, 0.9818, 0.5489],
];

const CONDITIONAL_REVERSAL: Grid = [
    [0.0544, 0.2064, 0.9586],
    [0.0543, 0.2096, 0.9400],
    [0.0506, 0.1890, 0.9415],
    [0.0801, 0.2572, 1.0],
    [0.0716, 0.2380, 0.9872],
    [0.0430, 0.1659, 0.9089],
];

const CONDITIONAL_NO_REVERSAL: Grid = [
    [0.9860, 0.9397, 0.3382],
    [0.9860, 0.9406, 0.3335],
    [0.9858, 0.9377, 0.3393],
    [1.0, 0.9741, 0.3844],
    [1.0, 0.9764, 0.3969],
    [1.0, 0.9910, 0.4769],
];

const OBSERVED: &str = "501,91,16533,1784";

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn config(seed: u64) -> SamplerConfig {
    SamplerConfig {
        seed,
        ..SamplerConfig::default()
    }
}

fn observed() -> CollapsedTable {
    CollapsedTable::from_column_order([501, 91, 16533, 1784])
}

/// Largest deviation from a reference grid, with the worst cell.
fn max_deviation(report: &SimulationReport, family: Family, reference: &Grid) -> (f64, String) {
    let mut worst = (0.0, String::new());
    for (i, c) in Condition::ALL.into_iter().enumerate() {
        for (j, r) in Reversal::ALL.into_iter().enumerate() {
            let p = report.estimate(c, r, family).p_hat.unwrap_or(f64::NAN);
            let d = (p - reference[i][j]).abs();
            if d.is_nan() || d > worst.0 {
                worst = (d, format!("{} / {}: {p:.4} vs {:.4}", c.label(), r.label(), reference[i][j]));
            }
        }
    }
    worst
}

/// Cells whose reference value is exactly one must be exactly one.
fn exact_ones(report: &SimulationReport, family: Family, reference: &Grid) -> Vec<String> {
    let mut broken = Vec::new();
    for (i, c) in Condition::ALL.into_iter().enumerate() {
        for (j, r) in Reversal::ALL.into_iter().enumerate() {
            if reference[i][j] != 1.0 {
                continue;
            }
            let e = report.estimate(c, r, family);
            if e.p_hat != Some(1.0) {
                broken.push(format!("{} / {}", c.label(), r.label()));
            }
        }
    }
    broken
}

fn table_check(
    reports: &[SimulationReport],
    family: Family,
    reference: &Grid,
    tolerance: f64,
) -> Outcome {
    let mut detail = Vec::new();
    let mut passed = true;
    for report in reports {
        let (dev, cell) = max_deviation(report, family, reference);
        let ones = exact_ones(report, family, reference);
        passed &= dev <= tolerance && ones.is_empty();
        detail.push(format!("seed {}: max |diff| {dev:.4} ({cell})", report.config.seed));
        if !ones.is_empty() {
            detail.push(format!("seed {}: not exactly 1: {}", report.config.seed, ones.join(", ")));
        }
    }
    outcome(passed, detail.join("; "))
}

fn simpson(args: &[&str], threads: &str) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_simpson"))
        .args(args)
        .env("SIMPSON_THREADS", threads)
        .output()
        .expect("run simpson binary")
}

fn criterion_threshold() -> Outcome {
    let report = match analyze_case(&observed(), 1.4, None) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let required = report.threshold.required_or_wx.unwrap_or(f64::NAN);
    let cli = simpson(&["analyze", "--table", OBSERVED, "--or-wy", "1.4"], "1");
    let text = String::from_utf8_lossy(&cli.stdout);
    let printed = text
        .lines()
        .find_map(|l| l.strip_prefix("required OR_WX ≈ "))
        .and_then(|v| v.trim().parse::<f64>().ok())
        .unwrap_or(f64::NAN);
    outcome(
        (report.r_xy - 0.0328).abs() <= 1e-4
            && required > 5.0
            && required < 5.5
            && (printed - required).abs() < 1e-4
            && cli.status.success(),
        format!("r_XY {:.6}, required OR_WX {required:.6}, CLI prints {printed}", report.r_xy),
    )
}

fn criterion_theorems() -> Outcome {
    let cfg = SamplerConfig {
        seed: 42,
        target_accepted: 100_000,
        ..SamplerConfig::default()
    };
    match verify_theorems(&cfg) {
        Ok(report) => {
            let counts: Vec<String> = report
                .implications
                .iter()
                .map(|c| format!("{}={}", c.name, c.counterexamples))
                .collect();
            let passed = report.tables >= 100_000 && report.implications.iter().all(|c| c.passed());
            outcome(passed, format!("{} tables; {}", report.tables, counts.join(", ")))
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn criterion_lemma() -> Outcome {
    let exhaustive = lemma_exhaustive(6);
    let random = lemma_random(100_000, 1_000, 42);
    outcome(
        exhaustive.passed() && random.passed() && random.margins >= 100_000,
        format!(
            "exhaustive: {} margins, {} violations, {} equalities (all at a=d, b=c: {}); \
             random: {} margins, {} violations",
            exhaustive.margins,
            exhaustive.violations,
            exhaustive.equalities,
            exhaustive.unexpected_equalities == 0 && exhaustive.missed_equalities == 0,
            random.margins,
            random.violations
        ),
    )
}

fn criterion_least_squares() -> Outcome {
    let cfg = SamplerConfig {
        seed: 7,
        target_accepted: 10_000,
        allow_small: true,
        ..SamplerConfig::default()
    };
    let (tables, _) = match sample_unconditional(&cfg) {
        Ok(t) => t,
        Err(e) => return outcome(false, e.to_string()),
    };
    let mut worst: f64 = 0.0;
    for t in &tables {
        let (Ok(a), Ok(b)) = (ls_coefficients(t), ls_oracle(t)) else {
            return outcome(false, format!("least squares failed on {t}"));
        };
        worst = worst
            .max((a.beta_x_given_w - b.beta_x_given_w).abs())
            .max((a.beta_w_given_x - b.beta_w_given_x).abs())
            .max((a.beta_0 - b.beta_0).abs());
    }
    outcome(
        tables.len() == 10_000 && worst <= 1e-9,
        format!("{} tables, max |diff| {worst:e}", tables.len()),
    )
}

fn criterion_odds_ratio_complement(reports: &[SimulationReport]) -> Outcome {
    let mut passed = true;
    let mut detail = Vec::new();
    for report in reports {
        let e = report.estimate(
            Condition::OddsRatio,
            Reversal::AdjustedRiskDifference,
            Family::NoReversalGivenNoCondition,
        );
        let complement = 1.0 - e.p_hat.unwrap_or(f64::NAN);
        passed &= (0.013..=0.025).contains(&complement);
        detail.push(format!("seed {}: {complement:.4}", report.config.seed));
    }
    outcome(passed, detail.join(", "))
}

fn criterion_determinism() -> Outcome {
    let args = ["simulate", "--seed", "11", "--format", "csv"];
    let a = simpson(&args, "1");
    let b = simpson(&args, "4");
    let c = simpson(&args, "4");
    let rows = String::from_utf8_lossy(&a.stdout).lines().count();
    outcome(
        a.status.success() && a.stdout == b.stdout && b.stdout == c.stdout && rows == 37,
        format!("{} bytes, {rows} lines, identical across runs and thread counts", a.stdout.len()),
    )
}

fn main() {
    let seeds = [42, 2024];
    let unconditional: Vec<SimulationReport> = seeds
        .iter()
        .map(|&s| run_unconditional(&config(s)).expect("unconditional simulation"))
        .collect();
    let conditional: Vec<SimulationReport> = seeds
        .iter()
        .map(|&s| run_conditional(&observed(), &config(s)).expect("conditional simulation"))
        .collect();

    let results = [
        (
            "1 unconditional P(reversal | condition) within 0.02",
            table_check(&unconditional, Family::ReversalGivenCondition, &UNCONDITIONAL_REVERSAL, 0.02),
        ),
        (
            "2 unconditional P(no reversal | no condition) within 0.02, exact ones",
            table_check(
                &unconditional,
                Family::NoReversalGivenNoCondition,
                &UNCONDITIONAL_NO_REVERSAL,
                0.02,
            ),
        ),
        (
            "3 conditional tables within 0.03, exact ones",
            {
                let a = table_check(&conditional, Family::ReversalGivenCondition, &CONDITIONAL_REVERSAL, 0.03);
                let b = table_check(
                    &conditional,
                    Family::NoReversalGivenNoCondition,
                    &CONDITIONAL_NO_REVERSAL,
                    0.03,
                );
                outcome(a.passed && b.passed, format!("{} | {}", a.detail, b.detail))
            },
        ),
        ("4 observed-table threshold", criterion_threshold()),
        ("5 implications on 1e5 tables", criterion_theorems()),
        ("6 correlation bound", criterion_lemma()),
        ("7 least squares against normal equations", criterion_least_squares()),
        (
            "8 odds ratio condition misses few ARD reversals",
            criterion_odds_ratio_complement(&unconditional),
        ),
        ("9 deterministic CSV", criterion_determinism()),
    ];

    let mut failures = 0;
    for (name, result) in &results {
        println!(
            "{} criterion {name}: {}",
            if result.passed { "PASS" } else { "FAIL" },
            result.detail
        );
        failures += usize::from(!result.passed);
    }
    println!("{} of {} criteria passed", results.len() - failures, results.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
