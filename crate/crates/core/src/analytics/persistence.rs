use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::runtime::Event;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AreaPersistence {
    pub area: String,
    pub total_dwell_ticks: u64,
    pub sessions: u64,
    /// Longest run of consecutive ticks covered by back-to-back sessions.
    pub longest_streak: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersistenceReport {
    pub areas: Vec<AreaPersistence>,
}

impl PersistenceReport {
    pub fn area(&self, area: &str) -> Option<&AreaPersistence> {
        self.areas.iter().find(|a| a.area == area)
    }

    pub fn is_empty(&self) -> bool {
        self.areas.is_empty()
    }
}

/// Summarizes instrumentation events per area. Other events are ignored.
pub fn persistence(events: &[Event]) -> PersistenceReport {
    let mut sessions: BTreeMap<&str, Vec<(u64, u64)>> = BTreeMap::new();
    for e in events {
        if let Event::Instrumentation {
            area,
            start_tick,
            dwell_ticks,
            ..
        } = e
        {
            sessions.entry(area).or_default().push((*start_tick, *dwell_ticks));
        }
    }
    let areas = sessions
        .into_iter()
        .map(|(area, mut list)| {
            list.sort_unstable();
            let mut longest = 0;
            let mut run: Option<(u64, u64)> = None;
            for &(start, dwell) in &list {
                let end = start + dwell;
                run = match run {
                    Some((s, e)) if start <= e => Some((s, e.max(end))),
                    _ => Some((start, end)),
                };
                let (s, e) = run.unwrap();
                longest = longest.max(e - s);
            }
            AreaPersistence {
                area: area.to_string(),
                total_dwell_ticks: list.iter().map(|(_, d)| d).sum(),
                sessions: list.len() as u64,
                longest_streak: longest,
            }
        })
        .collect();
    PersistenceReport { areas }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(area: &str, start: u64, dwell: u64) -> Event {
        Event::Instrumentation {
            tick: start + dwell,
            area: area.into(),
            start_tick: start,
            dwell_ticks: dwell,
        }
    }

    #[test]
    fn sums_and_streaks() {
        let log = vec![
            inst("A", 0, 10),
            inst("B", 3, 2),
            inst("A", 10, 5),
            inst("A", 40, 12),
            Event::Broadcast {
                tick: 2,
                message: "go".into(),
            },
        ];
        let r = persistence(&log);
        let a = r.area("A").unwrap();
        assert_eq!((a.total_dwell_ticks, a.sessions, a.longest_streak), (27, 3, 15));
        let b = r.area("B").unwrap();
        assert_eq!((b.total_dwell_ticks, b.sessions, b.longest_streak), (2, 1, 2));
        assert!(persistence(&[]).is_empty());
    }
}
