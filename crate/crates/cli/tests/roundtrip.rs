use proptest::prelude::*;
use tvvi_cli::{read_csv, write_csv, write_json, Kind, Schema, Table, Value};

const NAMES: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

fn kind() -> impl Strategy<Value = Kind> {
    prop_oneof![
        Just(Kind::Int),
        Just(Kind::Real),
        Just(Kind::Vector),
        Just(Kind::Indices),
        Just(Kind::Bool),
        Just(Kind::Text),
    ]
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![any::<f64>().prop_filter("finite", |x| x.is_finite()), -1e3..1e3f64, Just(0.0), Just(-0.0),]
}

fn value(kind: Kind) -> BoxedStrategy<Value> {
    let v = match kind {
        Kind::Int => any::<i64>().prop_map(Value::Int).boxed(),
        Kind::Real => finite().prop_map(Value::Real).boxed(),
        Kind::Vector => prop::collection::vec(finite(), 0..5).prop_map(Value::Vector).boxed(),
        Kind::Indices => prop::collection::vec(0usize..100_000, 0..6).prop_map(Value::Indices).boxed(),
        Kind::Bool => any::<bool>().prop_map(Value::Bool).boxed(),
        Kind::Text => {
            "[ -~\n\"]{0,12}".prop_filter("reserved token", |s| s != "diverged").prop_map(Value::Text).boxed()
        }
    };
    prop_oneof![9 => v, 1 => Just(Value::Diverged)].boxed()
}

fn table() -> impl Strategy<Value = Table> {
    prop::collection::vec(kind(), 1..=NAMES.len()).prop_flat_map(|kinds| {
        let schema = Schema::new(&kinds.iter().zip(NAMES).map(|(k, n)| (n, *k)).collect::<Vec<_>>());
        let row = kinds.iter().map(|k| value(*k)).collect::<Vec<_>>();
        prop::collection::vec(row, 0..8).prop_map(move |rows| Table { schema: schema.clone(), rows })
    })
}

/// `-0.0` prints as `-0e0` and reads back as `-0.0`; compare bitwise so signs matter.
fn same(a: &[Vec<Value>], b: &[Vec<Value>]) -> bool {
    let bits = |v: &Value| match v {
        Value::Real(x) => Value::Int(x.to_bits() as i64),
        Value::Vector(xs) => Value::Indices(xs.iter().map(|x| x.to_bits() as usize).collect()),
        other => other.clone(),
    };
    a.len() == b.len() && a.iter().zip(b).all(|(r, s)| r.iter().map(bits).eq(s.iter().map(bits)))
}

proptest! {
    #[test]
    fn csv_round_trip(t in table()) {
        let mut buf = Vec::new();
        write_csv(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let back = read_csv(&text, &t.schema).unwrap();
        prop_assert!(same(&back, &t.rows), "{text}");
    }

    #[test]
    fn json_rows_share_keys(t in table()) {
        let mut buf = Vec::new();
        write_json(&t, &mut buf).unwrap();
        let parsed: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        let rows = parsed.as_array().unwrap();
        prop_assert_eq!(rows.len(), t.rows.len());
        for r in rows {
            let keys: Vec<&str> = r.as_object().unwrap().keys().map(String::as_str).collect();
            prop_assert_eq!(keys, t.schema.names());
        }
    }
}

#[test]
fn header_only_and_single_row() {
    let schema = Schema::new(&[("eta", Kind::Real), ("classification", Kind::Text), ("cells", Kind::Indices)]);
    let mut t = Table::new(schema.clone());
    let mut buf = Vec::new();
    write_csv(&t, &mut buf).unwrap();
    assert_eq!(buf, b"# schema=v1\neta,classification,cells\n");
    assert!(read_csv(std::str::from_utf8(&buf).unwrap(), &schema).unwrap().is_empty());

    t.push(vec![Value::Real(3.9), Value::Text("periodic(4)".into()), Value::Indices(vec![432, 564, 578, 621])]);
    let mut buf = Vec::new();
    write_csv(&t, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().nth(1), Some("eta,classification,cells"));
    assert_eq!(read_csv(&text, &schema).unwrap(), t.rows);
}
