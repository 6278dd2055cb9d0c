use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::fixed::Fixed2;
use crate::share::{Gender, SubmissionRecord};

/// Country label for participants and records without one.
pub const UNKNOWN_COUNTRY: &str = "unknown";
const UNANSWERED: &str = "unanswered";

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticsError {
    #[error("unknown dimension '{0}' (expected one of: tool, team_size_class, created_in, time_spent, gender, prior_knowledge, liked_theme)")]
    UnknownDimension(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl AnalyticsError {
    pub fn code(&self) -> &'static str {
        match self {
            AnalyticsError::UnknownDimension(_) => "unknown_dimension",
            AnalyticsError::Parse { .. } => "malformed_records",
        }
    }
}

/// Reads JSON-lines submission records; blank lines are skipped.
pub fn read_records(text: &str) -> Result<Vec<SubmissionRecord>, AnalyticsError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| AnalyticsError::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Tool,
    TeamSizeClass,
    CreatedIn,
    TimeSpent,
    Gender,
    PriorKnowledge,
    LikedTheme,
}

/// Whose count a percentage is taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Denominator {
    Submissions,
    /// Participants who answered the questionnaire.
    Respondents,
}

impl Dimension {
    pub const ALL: [Dimension; 7] = [
        Dimension::Tool,
        Dimension::TeamSizeClass,
        Dimension::CreatedIn,
        Dimension::TimeSpent,
        Dimension::Gender,
        Dimension::PriorKnowledge,
        Dimension::LikedTheme,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Dimension::Tool => "tool",
            Dimension::TeamSizeClass => "team_size_class",
            Dimension::CreatedIn => "created_in",
            Dimension::TimeSpent => "time_spent",
            Dimension::Gender => "gender",
            Dimension::PriorKnowledge => "prior_knowledge",
            Dimension::LikedTheme => "liked_theme",
        }
    }

    pub fn denominator(self) -> Denominator {
        match self {
            Dimension::Gender | Dimension::PriorKnowledge => Denominator::Respondents,
            _ => Denominator::Submissions,
        }
    }

    /// Display order of known classes; anything else follows by count.
    fn class_order(self) -> &'static [&'static str] {
        match self {
            Dimension::Tool => &[],
            Dimension::TeamSizeClass => &["1", "2", "3", ">3"],
            Dimension::CreatedIn => &["home", "school", "other", "unknown"],
            Dimension::TimeSpent => &["2-7d", "2-5h", "other"],
            Dimension::Gender => &["female", "male", "other"],
            Dimension::PriorKnowledge | Dimension::LikedTheme => &["yes", "no"],
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Dimension {
    type Err = AnalyticsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Dimension::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| AnalyticsError::UnknownDimension(s.to_string()))
    }
}

pub fn team_size_class(size: u32) -> &'static str {
    match size {
        0 | 1 => "1",
        2 => "2",
        3 => "3",
        _ => ">3",
    }
}

fn yes_no(flag: Option<bool>) -> &'static str {
    match flag {
        Some(true) => "yes",
        Some(false) => "no",
        None => UNANSWERED,
    }
}

fn gender_label(g: Option<Gender>) -> &'static str {
    match g {
        Some(Gender::Female) => "female",
        Some(Gender::Male) => "male",
        Some(Gender::Other) => "other",
        None => UNANSWERED,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub class: String,
    pub count: u64,
    pub percent: Option<Fixed2>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionTable {
    pub dimension: Dimension,
    pub denominator: Denominator,
    pub total: u64,
    pub rows: Vec<Row>,
}

impl DimensionTable {
    pub fn row(&self, class: &str) -> Option<&Row> {
        self.rows.iter().find(|r| r.class == class)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountryRow {
    pub country: String,
    pub count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TeamShare {
    /// Sum of the rounded per-class percentages.
    pub rounded_sum: Option<Fixed2>,
    /// Team submissions over all submissions, rounded once.
    pub exact: Option<Fixed2>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningGoal {
    pub met: u64,
    /// Records with the flag set.
    pub total: u64,
    pub percent: Option<Fixed2>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub submissions: u64,
    pub participants: u64,
    pub respondents: u64,
    pub dimensions: Vec<DimensionTable>,
    pub team_share: TeamShare,
    pub countries: Vec<CountryRow>,
    /// Multiple answers per submission; percentages are over submissions.
    pub reasons: Vec<Row>,
    pub average_age: Option<Fixed2>,
    pub learning_goal: LearningGoal,
    pub notes: Vec<String>,
}

impl StatReport {
    pub fn dimension(&self, d: Dimension) -> &DimensionTable {
        self.dimensions
            .iter()
            .find(|t| t.dimension == d)
            .expect("every dimension is reported")
    }
}

/// Raw counts. Tallies over disjoint record sets can be merged and then
/// turned into a report, which equals the report over the union.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Tally {
    submissions: u64,
    participants: u64,
    respondents: u64,
    classes: BTreeMap<Dimension, BTreeMap<String, u64>>,
    countries: BTreeMap<String, u64>,
    reasons: BTreeMap<String, u64>,
    age_sum: u64,
    ages: u64,
    goal_met: u64,
    goal_total: u64,
}

impl Tally {
    pub fn new() -> Self {
        Tally::default()
    }

    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a SubmissionRecord>) -> Self {
        let mut t = Tally::new();
        for r in records {
            t.add(r);
        }
        t
    }

    fn bump(&mut self, d: Dimension, class: &str) {
        *self.classes.entry(d).or_default().entry(class.to_string()).or_default() += 1;
    }

    pub fn add(&mut self, r: &SubmissionRecord) {
        let m = &r.meta;
        self.submissions += 1;
        self.bump(Dimension::Tool, &m.tool.to_lowercase());
        self.bump(Dimension::TeamSizeClass, team_size_class(m.team_size));
        self.bump(Dimension::CreatedIn, m.created_in.label());
        self.bump(
            Dimension::TimeSpent,
            m.survey.time_spent.map_or(UNANSWERED, |t| t.label()),
        );
        self.bump(Dimension::LikedTheme, yes_no(m.survey.liked_theme));
        for reason in &m.survey.reasons {
            *self.reasons.entry(reason.clone()).or_default() += 1;
        }
        if let Some(met) = m.survey.met_learning_goal {
            self.goal_total += 1;
            self.goal_met += u64::from(met);
        }

        if m.participants.is_empty() {
            let country = m.country.as_deref().unwrap_or(UNKNOWN_COUNTRY);
            *self.countries.entry(country.to_string()).or_default() += 1;
        }
        for p in &m.participants {
            self.participants += 1;
            let country = p.country.as_deref().unwrap_or(UNKNOWN_COUNTRY);
            *self.countries.entry(country.to_string()).or_default() += 1;
            if !p.responded {
                continue;
            }
            self.respondents += 1;
            self.bump(Dimension::Gender, gender_label(p.gender));
            self.bump(Dimension::PriorKnowledge, yes_no(p.prior_knowledge));
            if let Some(age) = p.age {
                self.age_sum += u64::from(age);
                self.ages += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &Tally) {
        self.submissions += other.submissions;
        self.participants += other.participants;
        self.respondents += other.respondents;
        for (d, classes) in &other.classes {
            let mine = self.classes.entry(*d).or_default();
            for (c, n) in classes {
                *mine.entry(c.clone()).or_default() += n;
            }
        }
        for (c, n) in &other.countries {
            *self.countries.entry(c.clone()).or_default() += n;
        }
        for (c, n) in &other.reasons {
            *self.reasons.entry(c.clone()).or_default() += n;
        }
        self.age_sum += other.age_sum;
        self.ages += other.ages;
        self.goal_met += other.goal_met;
        self.goal_total += other.goal_total;
    }

    fn denominator(&self, d: Denominator) -> u64 {
        match d {
            Denominator::Submissions => self.submissions,
            Denominator::Respondents => self.respondents,
        }
    }

    pub fn table(&self, d: Dimension) -> DimensionTable {
        let total = self.denominator(d.denominator());
        let empty = BTreeMap::new();
        let counts = self.classes.get(&d).unwrap_or(&empty);
        let order = d.class_order();
        let rank = |class: &str| {
            order
                .iter()
                .position(|c| *c == class)
                .unwrap_or(if class == UNANSWERED { usize::MAX } else { order.len() })
        };
        let mut rows: Vec<Row> = counts
            .iter()
            .map(|(class, &count)| Row {
                class: class.clone(),
                count,
                percent: Fixed2::percent(count, total),
            })
            .collect();
        rows.sort_by(|a, b| {
            rank(&a.class)
                .cmp(&rank(&b.class))
                .then(b.count.cmp(&a.count))
                .then_with(|| a.class.cmp(&b.class))
        });
        DimensionTable {
            dimension: d,
            denominator: d.denominator(),
            total,
            rows,
        }
    }

    /// Countries by descending count, ties alphabetical, with the unknown
    /// group last.
    pub fn countries(&self) -> Vec<CountryRow> {
        let mut rows: Vec<CountryRow> = self
            .countries
            .iter()
            .map(|(country, &count)| CountryRow {
                country: country.clone(),
                count,
            })
            .collect();
        rows.sort_by(|a, b| {
            (a.country == UNKNOWN_COUNTRY)
                .cmp(&(b.country == UNKNOWN_COUNTRY))
                .then(b.count.cmp(&a.count))
                .then_with(|| a.country.cmp(&b.country))
        });
        rows
    }

    pub fn team_share(&self) -> TeamShare {
        let table = self.table(Dimension::TeamSizeClass);
        let teams: Vec<&Row> = table.rows.iter().filter(|r| r.class != "1").collect();
        let rounded_sum = (self.submissions > 0)
            .then(|| teams.iter().filter_map(|r| r.percent).sum());
        TeamShare {
            rounded_sum,
            exact: Fixed2::percent(teams.iter().map(|r| r.count).sum(), self.submissions),
        }
    }

    pub fn learning_goal(&self) -> LearningGoal {
        LearningGoal {
            met: self.goal_met,
            total: self.goal_total,
            percent: Fixed2::percent(self.goal_met, self.goal_total),
        }
    }

    pub fn report(&self) -> StatReport {
        let countries = self.countries();
        let mut notes = Vec::new();
        let country_total: u64 = countries.iter().map(|c| c.count).sum();
        if self.participants > 0 && country_total != self.submissions {
            notes.push(format!(
                "country table counts {country_total} participants across {} submissions",
                self.submissions
            ));
        }
        let mut reasons: Vec<Row> = self
            .reasons
            .iter()
            .map(|(class, &count)| Row {
                class: class.clone(),
                count,
                percent: Fixed2::percent(count, self.submissions),
            })
            .collect();
        reasons.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.class.cmp(&b.class)));
        StatReport {
            submissions: self.submissions,
            participants: self.participants,
            respondents: self.respondents,
            dimensions: Dimension::ALL.iter().map(|d| self.table(*d)).collect(),
            team_share: self.team_share(),
            countries,
            reasons,
            average_age: Fixed2::ratio(self.age_sum, self.ages),
            learning_goal: self.learning_goal(),
            notes,
        }
    }
}

/// Submissions per country. Records with participants contribute one entry
/// per participant; records without contribute their own country.
pub fn country_table(records: &[SubmissionRecord]) -> Vec<CountryRow> {
    Tally::from_records(records).countries()
}

pub fn split_percentages(
    records: &[SubmissionRecord],
    dimension: &str,
) -> Result<DimensionTable, AnalyticsError> {
    let d: Dimension = dimension.parse()?;
    Ok(Tally::from_records(records).table(d))
}

pub fn team_share(records: &[SubmissionRecord]) -> TeamShare {
    Tally::from_records(records).team_share()
}

pub fn learning_goal_ratio(records: &[SubmissionRecord]) -> LearningGoal {
    Tally::from_records(records).learning_goal()
}

pub fn report(records: &[SubmissionRecord]) -> StatReport {
    Tally::from_records(records).report()
}
