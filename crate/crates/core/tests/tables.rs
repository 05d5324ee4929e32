use sha2::{Digest, Sha256};

#[test]
fn cluster_table_digest() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let table = std::fs::read(format!("{dir}/data/pdf417_clusters.txt")).unwrap();
    let recorded = std::fs::read_to_string(format!("{dir}/data/pdf417_clusters.sha256")).unwrap();
    let digest: String = Sha256::digest(&table).iter().map(|b| format!("{b:02x}")).collect();
    assert_eq!(digest, recorded.trim());
}

#[test]
fn word_pools_meet_minimum_sizes() {
    let dir = env!("CARGO_MANIFEST_DIR");
    for (file, min) in [("surnames.txt", 2000), ("given_names.txt", 2000), ("streets.txt", 1000)] {
        let text = std::fs::read_to_string(format!("{dir}/data/{file}")).unwrap();
        let mut entries: Vec<&str> = text.lines().filter(|l| !l.is_empty() && !l.starts_with('#')).collect();
        let n = entries.len();
        entries.sort_unstable();
        entries.dedup();
        assert_eq!(entries.len(), n, "{file} has duplicates");
        assert!(n >= min, "{file}: {n} < {min}");
        assert!(entries.iter().all(|e| e.is_ascii() && !e.contains('|')), "{file}");
    }
}
