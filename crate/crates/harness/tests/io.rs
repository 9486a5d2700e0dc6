use std::fs;

use drivebench::episode_io::{read_episode, write_episode, EpisodeHeader};
use drivebench::{HarnessConfig, HarnessError};
use drivebench_core::catalog::builtin;
use drivebench_core::data::SampleRecord;
use drivebench_core::episode::{run_episode, ControllerKind};
use serde_json::Value;

fn recorded(n: usize) -> Vec<SampleRecord> {
    let spec = builtin("nonhazard").unwrap().episode_specs().unwrap().remove(0);
    let out = run_episode(&spec, ControllerKind::ExpertDirect, &Default::default(), true).unwrap();
    assert!(out.records.len() >= n);
    out.records.into_iter().take(n).collect()
}

fn header(n: usize) -> EpisodeHeader {
    EpisodeHeader::new("straight", None, 0, &HarnessConfig::default().digest(), "expert-direct", n)
}

#[test]
fn hundred_records_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.jsonl");
    let records = recorded(100);
    write_episode(&path, &header(100), &records).unwrap();
    let (h, back) = read_episode(&path).unwrap();
    assert_eq!(h, header(100));
    assert_eq!(back, records);
    assert!(!dir.path().join("e.jsonl.tmp").exists());
}

#[test]
fn truncated_last_line_names_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.jsonl");
    write_episode(&path, &header(10), &recorded(10)).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    fs::write(&path, &text[..text.len() - 40]).unwrap();
    match read_episode(&path) {
        Err(HarnessError::Parse { line, .. }) => assert_eq!(line, 11),
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn malformed_middle_line_names_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.jsonl");
    write_episode(&path, &header(5), &recorded(5)).unwrap();
    let mut lines: Vec<String> = fs::read_to_string(&path).unwrap().lines().map(String::from).collect();
    lines[3] = "{\"route_id\": 3}".into();
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    match read_episode(&path) {
        Err(HarnessError::Parse { line, .. }) => assert_eq!(line, 4),
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn version_mismatch_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.jsonl");
    let mut h = header(3);
    h.version = 99;
    write_episode(&path, &h, &recorded(3)).unwrap();
    assert!(matches!(read_episode(&path), Err(HarnessError::Version { found: 99, expected: 1, .. })));
}

#[test]
fn record_count_mismatch_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.jsonl");
    write_episode(&path, &header(4), &recorded(3)).unwrap();
    assert!(matches!(read_episode(&path), Err(HarnessError::Parse { .. })));
}

fn leaves(v: &Value, path: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                path.push(k.clone());
                leaves(x, path, out);
                path.pop();
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                path.push(i.to_string());
                leaves(x, path, out);
                path.pop();
            }
        }
        _ => out.push(path.clone()),
    }
}

fn leaf_mut<'a>(v: &'a mut Value, path: &[String]) -> &'a mut Value {
    path.iter().fold(v, |v, k| match v {
        Value::Array(a) => &mut a[k.parse::<usize>().unwrap()],
        other => &mut other[k.as_str()],
    })
}

#[test]
fn digest_changes_with_every_field() {
    let base = HarnessConfig::default();
    let base_value = serde_json::to_value(&base).unwrap();
    let mut paths = Vec::new();
    leaves(&base_value, &mut Vec::new(), &mut paths);
    assert!(paths.len() > 60, "only {} leaves", paths.len());
    for path in paths {
        let mut v = base_value.clone();
        let leaf = leaf_mut(&mut v, &path);
        *leaf = match leaf.clone() {
            Value::Bool(b) => Value::Bool(!b),
            Value::Number(n) if n.is_u64() => Value::from(n.as_u64().unwrap() + 1),
            Value::Number(n) => Value::from(n.as_f64().unwrap() + 0.125),
            Value::String(s) => Value::String(format!("{s}x")),
            Value::Null => Value::String("scenarios.json".into()),
            other => panic!("unexpected leaf {other}"),
        };
        let flipped: HarnessConfig = match serde_json::from_value(v.clone()) {
            Ok(c) => c,
            Err(e) => {
                // Enum-valued string: switch to another listed variant.
                let msg = e.to_string();
                let original = leaf_mut(&mut base_value.clone(), &path).as_str().map(String::from);
                let other = msg.split('`').skip(3).step_by(2).find(|x| Some(*x) != original.as_deref()).unwrap_or_else(|| panic!("{path:?}: {msg}"));
                *leaf_mut(&mut v, &path) = Value::String(other.into());
                serde_json::from_value(v).unwrap_or_else(|e| panic!("{path:?}: {e}"))
            }
        };
        assert_ne!(flipped.digest(), base.digest(), "digest ignores {path:?}");
    }
}

#[test]
fn digest_is_stable_hex() {
    let d = HarnessConfig::default().digest();
    assert_eq!(d.len(), 64);
    assert!(d.chars().all(|c| c.is_ascii_hexdigit()));
    assert_eq!(d, HarnessConfig::default().digest());
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn header_round_trips(route in "\\PC{0,24}", scenario in proptest::option::of("[a-z_]{1,12}"), seed in any::<u64>(), take in 0usize..6) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("e.jsonl");
            let records: Vec<SampleRecord> = RECORDS.with(|r| r[..take].to_vec());
            let h = EpisodeHeader::new(&route, scenario, seed, "d", "expert-direct", records.len());
            write_episode(&path, &h, &records).unwrap();
            let (h2, r2) = read_episode(&path).unwrap();
            prop_assert_eq!(h2, h);
            prop_assert_eq!(r2, records);
        }
    }

    thread_local! {
        static RECORDS: Vec<SampleRecord> = recorded(6);
    }
}
