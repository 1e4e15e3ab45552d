#![no_main]

use libfuzzer_sys::fuzz_target;
use tvvi_cli::{read_csv, write_csv, Kind, Schema, Table};

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

// The first byte picks the schema; anything that parses must survive a write/read cycle.
fuzz_target!(|data: &[u8]| {
    let Some((&pick, rest)) = data.split_first() else { return };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    let schema = schemas()[pick as usize % 3].clone();
    if let Ok(rows) = read_csv(text, &schema) {
        let table = Table { schema: schema.clone(), rows };
        let mut buf = Vec::new();
        write_csv(&table, &mut buf).expect("parsed rows are writable");
        let again = read_csv(std::str::from_utf8(&buf).unwrap(), &schema).expect("written rows parse");
        assert_eq!(again, table.rows);
    }
});
