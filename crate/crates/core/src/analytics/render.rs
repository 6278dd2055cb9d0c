use std::fmt::Write;

use super::fixed::Fixed2;
use super::persistence::PersistenceReport;
use super::report::{DimensionTable, Row, StatReport};

fn pct(p: Option<Fixed2>) -> String {
    p.map_or_else(|| "-".to_string(), |p| format!("{p}%"))
}

fn rows(out: &mut String, title: &str, total: Option<u64>, rows: &[Row]) {
    match total {
        Some(n) => writeln!(out, "{title} (n={n})").unwrap(),
        None => writeln!(out, "{title}").unwrap(),
    }
    let width = rows.iter().map(|r| r.class.chars().count()).max().unwrap_or(0);
    for r in rows {
        writeln!(out, "  {:<width$}  {:>5}  {:>8}", r.class, r.count, pct(r.percent)).unwrap();
    }
}

/// Plain-text rendering of a report, one table per section.
pub fn render_text(report: &StatReport) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "submissions {}  participants {}  respondents {}",
        report.submissions, report.participants, report.respondents
    )
    .unwrap();
    for table in &report.dimensions {
        out.push('\n');
        rows(&mut out, table.dimension.name(), Some(table.total), &table.rows);
    }
    writeln!(
        out,
        "\nteam share: {} summed from rounded classes, {} exact",
        pct(report.team_share.rounded_sum),
        pct(report.team_share.exact)
    )
    .unwrap();
    if let Some(age) = report.average_age {
        writeln!(out, "average age: {age}").unwrap();
    }
    let lg = &report.learning_goal;
    writeln!(out, "learning goal: {} of {} ({})", lg.met, lg.total, pct(lg.percent)).unwrap();
    if !report.reasons.is_empty() {
        out.push('\n');
        rows(&mut out, "reasons", Some(report.submissions), &report.reasons);
    }
    if !report.countries.is_empty() {
        out.push_str("\ncountry\n");
        let width = report.countries.iter().map(|c| c.country.chars().count()).max().unwrap_or(0);
        for c in &report.countries {
            writeln!(out, "  {:<width$}  {:>5}", c.country, c.count).unwrap();
        }
    }
    for note in &report.notes {
        writeln!(out, "\nnote: {note}").unwrap();
    }
    out
}

/// One dimension's table with its denominator.
pub fn render_dimension(table: &DimensionTable) -> String {
    let mut out = String::new();
    rows(&mut out, table.dimension.name(), Some(table.total), &table.rows);
    out
}

pub fn render_persistence(report: &PersistenceReport) -> String {
    let mut out = String::new();
    let width = report.areas.iter().map(|a| a.area.len()).max().unwrap_or(4).max(4);
    writeln!(out, "{:<width$}  {:>8}  {:>8}  {:>8}", "area", "dwell", "sessions", "streak").unwrap();
    for a in &report.areas {
        writeln!(
            out,
            "{:<width$}  {:>8}  {:>8}  {:>8}",
            a.area, a.total_dwell_ticks, a.sessions, a.longest_streak
        )
        .unwrap();
    }
    out
}
