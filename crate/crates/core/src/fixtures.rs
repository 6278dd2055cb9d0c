//! Data bundled with the crate: the bird demo and the jam datasets.

use crate::analytics::read_records;
use crate::project::format::parse_manifest;
use crate::project::{check_loaded, Project};
use crate::share::SubmissionRecord;

const BIRD_MANIFEST: &[u8] = include_bytes!("../fixtures/bird_demo/project.json");
const BIRD_ASSETS: [(&str, &[u8]); 3] = [
    ("bird_down.png", include_bytes!("../fixtures/bird_demo/assets/bird_down.png")),
    ("bird_up.png", include_bytes!("../fixtures/bird_demo/assets/bird_up.png")),
    ("sky.png", include_bytes!("../fixtures/bird_demo/assets/sky.png")),
];

/// The bird demo: two looks toggled every 0.2 s, direction taken from
/// the compass reading.
pub fn bird_demo() -> Project {
    let mut project = parse_manifest(BIRD_MANIFEST).expect("bundled manifest parses");
    for (id, bytes) in BIRD_ASSETS {
        project.assets.insert(id.to_string(), bytes.to_vec());
    }
    check_loaded(project).expect("bundled demo is valid")
}

/// The bird demo's `project.json` exactly as shipped.
pub fn bird_demo_manifest() -> &'static [u8] {
    BIRD_MANIFEST
}

const ALICE: &str = include_str!("../fixtures/jams/alice.jsonl");
const NOLB: &str = include_str!("../fixtures/jams/nolb.jsonl");

/// The Alice jam dataset: 95 submissions with questionnaire answers and
/// participant countries, as JSON lines.
pub fn alice_jsonl() -> &'static str {
    ALICE
}

pub fn alice_records() -> Vec<SubmissionRecord> {
    read_records(ALICE).expect("bundled Alice records parse")
}

/// 172 classroom projects carrying only the learning-goal flag.
pub fn nolb_jsonl() -> &'static str {
    NOLB
}

pub fn nolb_records() -> Vec<SubmissionRecord> {
    read_records(NOLB).expect("bundled NOLB records parse")
}
