//! Sharing platform: submission records, jams and the file-backed store.

mod jam;
mod record;
mod store;

pub use jam::{Jam, JamRule, JamSpec, SubmissionOutcome};
pub use record::{
    CreatedIn, Gender, Participant, SubmissionMetadata, SubmissionRecord, Survey, TimeSpent,
};
pub use store::{
    CommitStage, RecoveryReport, SearchPage, ShareError, ShareStore, SubmissionSummary,
    UploadReceipt,
};
