use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use crate::model::Gid;

/// Remote-access driven replication settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicationPolicy {
    /// A replica is created once remote accesses from one platform exceed this.
    pub threshold: u32,
    /// Accesses older than this no longer count.
    pub window_secs: i64,
}

impl Default for ReplicationPolicy {
    fn default() -> Self {
        ReplicationPolicy { threshold: 3, window_secs: 24 * 3600 }
    }
}

impl ReplicationPolicy {
    pub fn window(&self) -> Duration {
        Duration::seconds(self.window_secs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessRecord {
    pub dataset: Gid,
    pub platform: String,
    pub at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaRecord {
    pub dataset: Gid,
    pub platform: String,
    pub path: String,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReplicationChanges {
    pub created: Vec<ReplicaRecord>,
    pub evicted: Vec<(Gid, String)>,
}

/// Accesses that fall inside the window ending at `now`.
pub fn count_in_window(accesses: &[AccessRecord], dataset: Gid, platform: &str, now: DateTime<Utc>, window: Duration) -> u32 {
    let start = now - window;
    accesses
        .iter()
        .filter(|a| a.dataset == dataset && a.platform == platform && a.at > start && a.at <= now)
        .count() as u32
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_counting() {
        let now = Utc::now();
        let g = Gid::from_u128(1);
        let acc = |h: i64| AccessRecord { dataset: g, platform: "b".into(), at: now - Duration::hours(h) };
        let log = vec![acc(1), acc(2), acc(30), AccessRecord { dataset: g, platform: "c".into(), at: now }];
        assert_eq!(count_in_window(&log, g, "b", now, Duration::hours(24)), 2);
        assert_eq!(count_in_window(&log, g, "b", now, Duration::hours(48)), 3);
        assert_eq!(count_in_window(&log, g, "c", now, Duration::hours(1)), 1);
    }
}
