//! Text, CSV and JSON renderings of every report. Text rounds to four
//! decimals; CSV and JSON carry full precision.

use std::fmt::Write as _;

use clap::ValueEnum;
use serde::Serialize;
use simpson_core::simulation::{Protocol, ReportRow};
use simpson_core::verify::VerifyReport;
use simpson_core::{CaseReport, Condition, Family, Reversal, SimulationReport, TableEvaluation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header).expect("write to memory");
    for row in rows {
        writer.write_record(&row).expect("write to memory");
    }
    String::from_utf8(writer.into_inner().expect("flush to memory")).expect("utf-8 csv")
}

fn json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

fn full(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |v| v.to_string())
}

fn fixed(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.4}")
    } else {
        "undefined".to_string()
    }
}

fn key_value_csv(pairs: &[(String, String)]) -> String {
    csv_string(
        &["quantity", "value"],
        pairs.iter().map(|(k, v)| vec![k.clone(), v.clone()]),
    )
}

// ---------------------------------------------------------------------------
// simulation reports

#[derive(Serialize)]
struct JsonRow {
    condition: Condition,
    reversal: Reversal,
    family: Family,
    p_hat: Option<f64>,
    se: Option<f64>,
    n: u64,
}

#[derive(Serialize)]
struct JsonSimulation<'a> {
    protocol: &'a Protocol,
    seed: u64,
    filter: simpson_core::Filter,
    orientation: simpson_core::Orientation,
    rounding: simpson_core::CellRounding,
    target_accepted: u64,
    accepted: u64,
    rejected: u64,
    rows: Vec<JsonRow>,
}

fn json_row(row: &ReportRow) -> JsonRow {
    JsonRow {
        condition: row.condition,
        reversal: row.reversal,
        family: row.family,
        p_hat: row.estimate.p_hat,
        se: row.estimate.se,
        n: row.estimate.n,
    }
}

pub fn simulation(report: &SimulationReport, format: Format) -> String {
    match format {
        Format::Csv => csv_string(
            &["condition", "reversal", "family", "p_hat", "se", "n"],
            report.rows.iter().map(|row| {
                vec![
                    row.condition.key().to_string(),
                    row.reversal.key().to_string(),
                    row.family.key().to_string(),
                    full(row.estimate.p_hat),
                    full(row.estimate.se),
                    row.estimate.n.to_string(),
                ]
            }),
        ),
        Format::Json => json_string(&JsonSimulation {
            protocol: &report.protocol,
            seed: report.config.seed,
            filter: report.config.filter,
            orientation: report.config.orientation,
            rounding: report.config.rounding,
            target_accepted: report.config.target_accepted,
            accepted: report.accepted,
            rejected: report.rejected,
            rows: report.rows.iter().map(json_row).collect(),
        }),
        Format::Text => simulation_text(report),
    }
}

fn simulation_text(report: &SimulationReport) -> String {
    let mut s = String::new();
    let cfg = &report.config;
    match &report.protocol {
        Protocol::Unconditional => {
            writeln!(s, "Tables uniform on the 7-simplex, OR_XY > 1").unwrap();
        }
        Protocol::Conditional { source } => {
            writeln!(
                s,
                "Tables collapsing to {} (column order (x0,y1),(x1,y1),(x0,y0),(x1,y0))",
                source.column_order().map(|c| c.to_string()).join(",")
            )
            .unwrap();
        }
    }
    writeln!(
        s,
        "seed {}  accepted {}  rejected {}  filter {:?}  orientation {:?}  rounding {:?}",
        cfg.seed, report.accepted, report.rejected, cfg.filter, cfg.orientation, cfg.rounding
    )
    .unwrap();

    for family in Family::ALL {
        writeln!(s).unwrap();
        writeln!(s, "{}", family.title()).unwrap();
        write!(s, "{:<22}", "").unwrap();
        for r in Reversal::ALL {
            write!(s, "{:>28}", r.label()).unwrap();
        }
        writeln!(s).unwrap();
        for c in Condition::ALL {
            write!(s, "{:<22}", c.label()).unwrap();
            for r in Reversal::ALL {
                let e = report.estimate(c, r, family);
                let cell = match (e.p_hat, e.se) {
                    (Some(p), Some(se)) => format!("{p:.4} ± {se:.4}"),
                    _ => "undefined".to_string(),
                };
                write!(s, "{cell:>28}").unwrap();
            }
            writeln!(s).unwrap();
        }
    }
    s
}

// ---------------------------------------------------------------------------
// case analysis

fn case_pairs(report: &CaseReport) -> Vec<(String, String)> {
    let t = &report.threshold;
    vec![
        ("table".into(), report.collapsed.column_order().map(|c| c.to_string()).join(" ")),
        ("r_xy".into(), report.r_xy.to_string()),
        ("or_xy".into(), report.or_xy.to_string()),
        ("rr_xy".into(), report.rr_xy.to_string()),
        ("rd_xy".into(), report.rd_xy.to_string()),
        ("or_wy_bound".into(), report.or_wy_bound.to_string()),
        ("t_y".into(), t.t_y.to_string()),
        ("q".into(), t.q.to_string()),
        (
            "required_or_wx".into(),
            t.required_or_wx
                .map_or_else(|| "unattainable".to_string(), |v| v.to_string()),
        ),
    ]
}

pub fn case(report: &CaseReport, format: Format) -> String {
    match format {
        Format::Csv => {
            let mut s = key_value_csv(&case_pairs(report));
            if let Some(sim) = &report.simulation {
                s.push('\n');
                s.push_str(&simulation(sim, Format::Csv));
            }
            s
        }
        Format::Json => json_string(report),
        Format::Text => {
            let t = &report.threshold;
            let mut s = String::new();
            writeln!(
                s,
                "Observed table (x0y1,x1y1,x0y0,x1y0): {}",
                report.collapsed.column_order().map(|c| c.to_string()).join(",")
            )
            .unwrap();
            writeln!(s, "r_XY  = {}", fixed(report.r_xy)).unwrap();
            writeln!(s, "OR_XY = {}", fixed(report.or_xy)).unwrap();
            writeln!(s, "RR_XY = {}", fixed(report.rr_xy)).unwrap();
            writeln!(s, "RD_XY = {}", fixed(report.rd_xy)).unwrap();
            writeln!(s, "OR_WY bound = {}", fixed(report.or_wy_bound)).unwrap();
            writeln!(s, "t_Y = {}, q = r_XY / t_Y = {}", fixed(t.t_y), fixed(t.q)).unwrap();
            match t.required_or_wx {
                Some(req) => {
                    writeln!(s, "required OR_WX ≈ {}", fixed(req)).unwrap();
                    writeln!(
                        s,
                        "A confounder W with OR_WY <= {} must have OR_WX > {} before the \
                         odds ratio condition can hold; below that, adjusting for W cannot \
                         produce Simpson's paradox or a least-squares reversal.",
                        fixed(report.or_wy_bound),
                        fixed(req)
                    )
                    .unwrap();
                }
                None => {
                    writeln!(s, "required OR_WX: unattainable").unwrap();
                    writeln!(
                        s,
                        "No confounder with OR_WY <= {} satisfies the odds ratio condition for \
                         any OR_WX; adjusting for it cannot produce Simpson's paradox.",
                        fixed(report.or_wy_bound)
                    )
                    .unwrap();
                }
            }
            if let Some(sim) = &report.simulation {
                writeln!(s).unwrap();
                s.push_str(&simulation_text(sim));
            }
            s
        }
    }
}

// ---------------------------------------------------------------------------
// single-table evaluation

fn evaluation_pairs(e: &TableEvaluation) -> Vec<(String, String)> {
    let m = &e.measures;
    let c = &e.conditions;
    let r = &e.reversals;
    let mut pairs: Vec<(String, String)> = vec![("table".into(), e.table.to_string().replace(',', " "))];
    for x in 0..2 {
        for w in 0..2 {
            pairs.push((format!("p_y1_given_x{x}_w{w}"), m.p_y_given_xw[x][w].to_string()));
        }
    }
    for (k, v) in [
        ("rr_xy", m.rr_xy),
        ("rr_xw", m.rr_xw),
        ("rr_wy", m.rr_wy),
        ("rd_xy", m.rd_xy),
        ("rd_xw", m.rd_xw),
        ("rd_wy", m.rd_wy),
        ("or_xy", m.or_xy),
        ("or_xw", m.or_xw),
        ("or_wy", m.or_wy),
        ("r_xy", m.r_xy),
        ("r_xw", m.r_xw),
        ("r_wy", m.r_wy),
        ("p_w1", m.p_w1),
        ("interaction", m.interaction),
    ] {
        pairs.push((k.into(), v.to_string()));
    }
    for cond in Condition::ALL {
        pairs.push((format!("{}_condition", cond.key()), c.holds(cond).to_string()));
        pairs.push((format!("{}_lhs", cond.key()), c.lhs(cond).to_string()));
    }
    pairs.push(("risk_difference_max_lhs".into(), c.risk_difference_max_lhs.to_string()));
    for (k, v) in [
        ("strong_simpson", r.strong_simpson),
        ("weak_simpson", r.weak_simpson),
        ("ard_reversal", r.ard_reversal),
        ("ls_reversal", r.ls_reversal),
    ] {
        pairs.push((k.into(), v.to_string()));
    }
    pairs.push(("reversed_strata".into(), r.reversed_strata.to_string()));
    pairs.push(("adjusted_rd".into(), r.adjusted_rd.to_string()));
    for (prefix, ls) in [("closed_form", &e.least_squares), ("normal_equations", &e.least_squares_oracle)] {
        pairs.push((format!("{prefix}_beta_x_given_w"), ls.beta_x_given_w.to_string()));
        pairs.push((format!("{prefix}_beta_w_given_x"), ls.beta_w_given_x.to_string()));
        pairs.push((format!("{prefix}_beta_0"), ls.beta_0.to_string()));
    }
    pairs
}

pub fn evaluation(e: &TableEvaluation, format: Format) -> String {
    match format {
        Format::Csv => key_value_csv(&evaluation_pairs(e)),
        Format::Json => json_string(e),
        Format::Text => {
            let m = &e.measures;
            let c = &e.conditions;
            let r = &e.reversals;
            let mut s = String::new();
            writeln!(s, "Table (x,w,y order): {}", e.table).unwrap();
            writeln!(s).unwrap();
            writeln!(s, "Measures").unwrap();
            for x in 0..2 {
                for w in 0..2 {
                    writeln!(s, "  P(Y=1|X={x},W={w}) = {}", fixed(m.p_y_given_xw[x][w])).unwrap();
                }
            }
            writeln!(s, "  {:<6}{:>10}{:>10}{:>10}", "", "(X,Y)", "(X,W)", "(W,Y)").unwrap();
            for (name, v) in [
                ("RR", [m.rr_xy, m.rr_xw, m.rr_wy]),
                ("RD", [m.rd_xy, m.rd_xw, m.rd_wy]),
                ("OR", [m.or_xy, m.or_xw, m.or_wy]),
                ("r", [m.r_xy, m.r_xw, m.r_wy]),
            ] {
                writeln!(s, "  {:<6}{:>10}{:>10}{:>10}", name, fixed(v[0]), fixed(v[1]), fixed(v[2])).unwrap();
            }
            writeln!(s, "  P(W=1) = {}, interaction = {}", fixed(m.p_w1), fixed(m.interaction)).unwrap();
            writeln!(s).unwrap();
            writeln!(s, "Conditions").unwrap();
            for cond in Condition::ALL {
                writeln!(
                    s,
                    "  {:<20} {:<5}  {} > {}",
                    cond.label(),
                    c.holds(cond),
                    fixed(c.lhs(cond)),
                    fixed(c.rhs(cond))
                )
                .unwrap();
            }
            writeln!(
                s,
                "  {:<20} {:<5}  {} > {}  (max comparison)",
                "",
                "",
                fixed(c.risk_difference_max_lhs),
                fixed(c.sqrt_rd_xy)
            )
            .unwrap();
            writeln!(s).unwrap();
            writeln!(s, "Reversals").unwrap();
            writeln!(s, "  strong Simpson                {}", r.strong_simpson).unwrap();
            writeln!(s, "  weak Simpson                  {}  ({} strata reversed)", r.weak_simpson, r.reversed_strata).unwrap();
            writeln!(s, "  adjusted risk difference      {}  (ARD = {})", r.ard_reversal, fixed(r.adjusted_rd)).unwrap();
            writeln!(s, "  least squares                 {}", r.ls_reversal).unwrap();
            writeln!(s).unwrap();
            writeln!(s, "Least squares Y ~ 1 + X + W").unwrap();
            for (name, ls) in [("closed form", &e.least_squares), ("normal equations", &e.least_squares_oracle)] {
                writeln!(
                    s,
                    "  {:<17} beta_X|W = {:.10}  beta_W|X = {:.10}  beta_0 = {:.10}",
                    name, ls.beta_x_given_w, ls.beta_w_given_x, ls.beta_0
                )
                .unwrap();
            }
            s
        }
    }
}

// ---------------------------------------------------------------------------
// theorem verification

pub fn verification(report: &VerifyReport, format: Format) -> String {
    match format {
        Format::Json => json_string(report),
        Format::Csv => {
            let mut rows: Vec<Vec<String>> = report
                .implications
                .iter()
                .map(|c| {
                    vec![
                        c.name.clone(),
                        c.premises.to_string(),
                        c.ties.to_string(),
                        c.counterexamples.to_string(),
                    ]
                })
                .collect();
            for (name, l) in [
                ("correlation bound, counts 1..6", &report.lemma_exhaustive),
                ("correlation bound, random margins", &report.lemma_random),
            ] {
                rows.push(vec![
                    name.to_string(),
                    l.margins.to_string(),
                    l.equalities.to_string(),
                    (l.violations + l.unexpected_equalities + l.missed_equalities).to_string(),
                ]);
            }
            let mut s = csv_string(&["check", "premises", "ties", "counterexamples"], rows);
            s.push_str(&format!(
                "# least-squares max |closed - normal equations| = {}\n",
                report.least_squares.max_abs_difference
            ));
            s
        }
        Format::Text => {
            let mut s = String::new();
            writeln!(s, "Sampled {} tables with OR_XY > 1 (seed {})", report.tables, report.seed).unwrap();
            for c in &report.implications {
                writeln!(
                    s,
                    "  [{}] {}: {} counterexamples (premise held on {} tables, {} ties excluded)",
                    if c.passed() { "ok" } else { "FAIL" },
                    c.name,
                    c.counterexamples,
                    c.premises,
                    c.ties
                )
                .unwrap();
                if let Some(t) = &c.first_counterexample {
                    writeln!(s, "      first counterexample: {t}").unwrap();
                }
            }
            for (name, l) in [
                ("all margins with counts 1..6", &report.lemma_exhaustive),
                ("random and sampled margins", &report.lemma_random),
            ] {
                writeln!(
                    s,
                    "  [{}] r <= (sqrt(OR)-1)/(sqrt(OR)+1) on {name}: {} violations over {} margins; \
                     {} equalities, {} not at a=d, b=c, {} symmetric margins below the bound",
                    if l.passed() { "ok" } else { "FAIL" },
                    l.violations,
                    l.margins,
                    l.equalities,
                    l.unexpected_equalities,
                    l.missed_equalities
                )
                .unwrap();
            }
            writeln!(
                s,
                "  [{}] least squares: max |closed form - normal equations| = {:e} over {} tables",
                if report.least_squares.max_abs_difference <= 1e-9 { "ok" } else { "FAIL" },
                report.least_squares.max_abs_difference,
                report.least_squares.tables
            )
            .unwrap();
            writeln!(s, "{} counterexamples", report.counterexamples()).unwrap();
            s
        }
    }
}
