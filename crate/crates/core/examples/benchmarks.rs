//! Time every primitive at a few payload sizes and print the CSV.

use medsentry::harness::bench::{run, to_csv, Primitive};

fn main() {
    let results = run(&Primitive::ALL, &[64, 1024, 4096], 100, 1);
    print!("{}", String::from_utf8(to_csv(&results)).expect("csv is utf-8"));
}
