use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum CreatedIn {
    Home,
    School,
    Other,
    #[default]
    Unknown,
}

impl CreatedIn {
    pub fn label(self) -> &'static str {
        match self {
            CreatedIn::Home => "home",
            CreatedIn::School => "school",
            CreatedIn::Other => "other",
            CreatedIn::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Female,
    Male,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TimeSpent {
    #[serde(rename = "2-5h")]
    Hours2To5,
    #[serde(rename = "2-7d")]
    Days2To7,
    #[serde(rename = "other")]
    Other,
}

impl TimeSpent {
    pub fn label(self) -> &'static str {
        match self {
            TimeSpent::Hours2To5 => "2-5h",
            TimeSpent::Days2To7 => "2-7d",
            TimeSpent::Other => "other",
        }
    }
}

/// One person behind a submission. `responded` marks questionnaire
/// respondents; non-respondents may still carry a country.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Participant {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gender: Option<Gender>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior_knowledge: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub country: Option<String>,
    #[serde(default)]
    pub responded: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Survey {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub liked_theme: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_spent: Option<TimeSpent>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reasons: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub met_learning_goal: Option<bool>,
}

/// What an uploader states about a submission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmissionMetadata {
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub author: String,
    pub tool: String,
    #[serde(default)]
    pub tags: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub country: Option<String>,
    #[serde(default = "one")]
    pub team_size: u32,
    #[serde(default)]
    pub created_in: CreatedIn,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub participants: Vec<Participant>,
    #[serde(default)]
    pub survey: Survey,
    /// Diversifiers the entry claims to satisfy.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diversifiers: Vec<String>,
}

fn one() -> u32 {
    1
}

impl SubmissionMetadata {
    pub fn new(tool: impl Into<String>) -> Self {
        SubmissionMetadata {
            title: String::new(),
            author: String::new(),
            tool: tool.into(),
            tags: Vec::new(),
            country: None,
            team_size: 1,
            created_in: CreatedIn::Unknown,
            participants: Vec::new(),
            survey: Survey::default(),
            diversifiers: Vec::new(),
        }
    }
}

/// A stored submission. Also the unit of the analytics JSON-lines input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmissionRecord {
    pub id: String,
    pub digest: String,
    pub uploaded_at: DateTime<Utc>,
    #[serde(flatten)]
    pub meta: SubmissionMetadata,
}

impl SubmissionRecord {
    /// Case-insensitive tag membership.
    pub fn has_tag(&self, tag: &str) -> bool {
        self.meta.tags.iter().any(|t| t.eq_ignore_ascii_case(tag))
    }
}
