//! Jam statistics over submission records and persistence metrics over
//! runtime instrumentation.

mod fixed;
mod persistence;
mod render;
mod report;

pub use fixed::Fixed2;
pub use persistence::{persistence, AreaPersistence, PersistenceReport};
pub use render::{render_dimension, render_persistence, render_text};
pub use report::{
    country_table, learning_goal_ratio, read_records, report, split_percentages, team_share,
    team_size_class, AnalyticsError, CountryRow, Denominator, Dimension, DimensionTable,
    LearningGoal, Row, StatReport, Tally, TeamShare, UNKNOWN_COUNTRY,
};
