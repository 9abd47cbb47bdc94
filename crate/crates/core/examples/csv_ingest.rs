//! Reads a CSV with numeric features and a categorical column, quantizes the
//! features onto the grid and writes the resulting stream.

use fairwin::harness::{ingest_reader, write_stream_csv, CsvSchema};

const DATA: &str = "\
age,income,sex
34,52000,F
51,61000,M
29,,F
45,48000,M
62,75000,F
";

fn main() -> fairwin::Result<()> {
    let schema = CsvSchema { delta: 1000, ..CsvSchema::new(vec!["age".into(), "income".into()], vec!["sex".into()]) };
    let got = ingest_reader(DATA.as_bytes(), &schema)?;
    println!("{} rows kept, {} skipped", got.points.len(), got.skipped);
    for (bit, (col, val)) in got.group_bits.iter().enumerate() {
        println!("group bit {bit}: {col} = {val}");
    }
    write_stream_csv(std::io::stdout(), &got.points)
}
