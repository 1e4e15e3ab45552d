//! Replays the checked-in fuzz seeds through the same checks as the fuzz targets.

use std::path::PathBuf;

use tvvi_cli::{parse_config, read_csv, write_csv, Kind, Schema, Table};

fn corpus(target: &str) -> Vec<Vec<u8>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut files: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files.into_iter().map(|p| std::fs::read(p).unwrap()).collect()
}

fn schemas() -> [Schema; 3] {
    [
        Schema::new(&[("eta", Kind::Real), ("classification", Kind::Text), ("cells", Kind::Indices)]),
        Schema::new(&[
            ("t", Kind::Int),
            ("z", Kind::Vector),
            ("z_star", Kind::Vector),
            ("sq_dist", Kind::Real),
            ("cum_track", Kind::Real),
            ("cum_regret", Kind::Real),
        ]),
        Schema::new(&[
            ("kind", Kind::Text),
            ("measure", Kind::Text),
            ("measured", Kind::Real),
            ("bound", Kind::Real),
            ("holds", Kind::Bool),
        ]),
    ]
}

#[test]
fn parse_config_seeds() {
    let seeds = corpus("parse_config");
    assert!(seeds.len() >= 5);
    let mut valid = 0;
    for s in seeds {
        match parse_config(std::str::from_utf8(&s).unwrap()) {
            Ok(_) => valid += 1,
            Err(e) => assert!(!e.0.is_empty()),
        }
    }
    assert!(valid >= 5);
}

#[test]
fn read_csv_seeds_survive_a_write_read_cycle() {
    let seeds = corpus("read_csv");
    let mut parsed = 0;
    for s in seeds {
        let (&pick, rest) = s.split_first().unwrap();
        let schema = schemas()[pick as usize % 3].clone();
        let rows = read_csv(std::str::from_utf8(rest).unwrap(), &schema).unwrap();
        let table = Table { schema: schema.clone(), rows };
        let mut buf = Vec::new();
        write_csv(&table, &mut buf).unwrap();
        assert_eq!(read_csv(std::str::from_utf8(&buf).unwrap(), &schema).unwrap(), table.rows);
        parsed += 1;
    }
    assert!(parsed >= 4);
}
