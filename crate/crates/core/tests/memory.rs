use std::io::Write;

use afeng::affect::{appraise, derive_behaviors, EmotionDistribution};
use afeng::memory::*;
use afeng::EmotionLabel;
use chrono::{TimeZone, Utc};

fn rec(id: u64) -> InteractionRecord {
    let label = EmotionLabel::ALL[id as usize % 8];
    let distribution = EmotionDistribution::peaked(label, 0.6).unwrap();
    InteractionRecord {
        id,
        timestamp: Utc.timestamp_opt(1_700_000_000 + id as i64, 0).unwrap(),
        text: format!("sentence {id}"),
        distribution,
        appraisal: appraise(&distribution),
        behaviors: derive_behaviors(label),
        bml_id: format!("bml-{id}"),
    }
}

fn ids(records: &[&InteractionRecord]) -> Vec<u64> {
    records.iter().map(|r| r.id).collect()
}

#[test]
fn eleven_records_evict_the_oldest() {
    let dir = tempfile::tempdir().unwrap();
    let (mut store, _) = LongTermStore::open(&dir.path().join("log"), dir.path()).unwrap();
    let mut buffer = SessionBuffer::default();
    for id in 1..=11 {
        record(&mut store, &mut buffer, rec(id)).unwrap();
    }
    assert_eq!(ids(&recent(&buffer, 100)), (2..=11).rev().collect::<Vec<_>>());
}

#[test]
fn recent_bounds() {
    let mut buffer = SessionBuffer::default();
    let dir = tempfile::tempdir().unwrap();
    let (mut store, _) = LongTermStore::open(&dir.path().join("log"), dir.path()).unwrap();
    assert!(recent(&buffer, 5).is_empty());
    for id in 1..=3 {
        record(&mut store, &mut buffer, rec(id)).unwrap();
    }
    assert!(recent(&buffer, 0).is_empty());
    assert_eq!(ids(&recent(&buffer, 2)), vec![3, 2]);
    assert_eq!(ids(&recent(&buffer, 9)), vec![3, 2, 1]);
}

#[test]
fn reopening_replays_everything_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("memory/interactions.log");
    {
        let (mut store, replay) = LongTermStore::open(&path, dir.path()).unwrap();
        assert!(replay.records.is_empty());
        let mut buffer = SessionBuffer::default();
        for id in [1, 4, 9] {
            record(&mut store, &mut buffer, rec(id)).unwrap();
        }
    }
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("#afeng-log v1\n"));
    let (store, replay) = LongTermStore::open(&path, dir.path()).unwrap();
    assert_eq!(replay.records, vec![rec(1), rec(4), rec(9)]);
    assert!(replay.warnings.is_empty());
    assert_eq!(store.next_id(), 10);
    let buffer = SessionBuffer::from_log(2, &replay.records);
    assert_eq!(ids(&buffer.recent(5)), vec![9, 4]);
}

#[test]
fn duplicate_and_decreasing_ids_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("log");
    let (mut store, _) = LongTermStore::open(&path, dir.path()).unwrap();
    let mut buffer = SessionBuffer::default();
    record(&mut store, &mut buffer, rec(5)).unwrap();
    let before = std::fs::read(&path).unwrap();
    for id in [5, 3] {
        assert!(matches!(
            record(&mut store, &mut buffer, rec(id)),
            Err(MemoryError::NonIncreasingId { last: 5, .. })
        ));
    }
    assert_eq!(std::fs::read(&path).unwrap(), before);
    assert_eq!(buffer.len(), 1);
}

#[test]
fn partial_trailing_line_is_ignored_and_never_rewritten() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("log");
    {
        let (mut store, _) = LongTermStore::open(&path, dir.path()).unwrap();
        store.append(&rec(1)).unwrap();
        store.append(&rec(2)).unwrap();
    }
    let full = serde_json::to_string(&rec(3)).unwrap();
    std::fs::OpenOptions::new()
        .append(true)
        .open(&path)
        .unwrap()
        .write_all(&full.as_bytes()[..full.len() / 2])
        .unwrap();
    let crashed = std::fs::read(&path).unwrap();

    let (mut store, replay) = LongTermStore::open(&path, dir.path()).unwrap();
    assert_eq!(replay.records, vec![rec(1), rec(2)]);
    assert_eq!(replay.warnings.len(), 1);
    store.append(&rec(3)).unwrap();
    let after = std::fs::read(&path).unwrap();
    assert_eq!(&after[..crashed.len()], crashed.as_slice());
    let replay = afeng::memory::replay(&path).unwrap();
    assert_eq!(replay.records, vec![rec(1), rec(2), rec(3)]);
}

#[test]
fn foreign_files_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("log");
    std::fs::write(&path, "something else\n").unwrap();
    assert!(matches!(
        LongTermStore::open(&path, dir.path()),
        Err(MemoryError::BadHeader { .. })
    ));
}
