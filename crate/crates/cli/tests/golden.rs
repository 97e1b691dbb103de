//! Freezes the CSV columns and the summary layout. Regenerate the files with
//! `REPCODE_BLESS=1 cargo test -p repcode-cli --test golden` after an
//! intentional schema change.

use std::path::PathBuf;

use repcode_cli::output::{summarize, write_csv, COLUMNS, WALL_TIME_COLUMN};
use repcode_cli::{parse_config, run_sweep};

const CONFIG: &str = r#"
axis = "lambda"
values = [0.3, 0.7]
sizes = [3, 4]
n_trajectories = 4
observable_list = ["kappa_ea", "kappa_2", "d_ea", "d_2", "s_r", "i_c_renyi2"]
engine = "dense"
workers = 2
[fixed]
q = 0.1
T = 6
master_seed = 2024
"#;

const BUILD_COLUMN: usize = 33;

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn compare(name: &str, actual: &str) {
    let path = golden(name);
    if std::env::var_os("REPCODE_BLESS").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap();
    assert_eq!(actual, expected, "{name} differs from the golden file");
}

#[test]
fn csv_and_summary_match_golden_files() {
    assert_eq!(COLUMNS[BUILD_COLUMN], "build_id");
    assert_eq!(COLUMNS[WALL_TIME_COLUMN], "wall_time");
    let table = repcode_cli::config::parse_table(CONFIG).unwrap();
    let spec = parse_config(CONFIG).unwrap();
    let rows = run_sweep(&spec, |_| Ok(())).unwrap();

    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).unwrap();
    let mut rd = csv::Reader::from_reader(buf.as_slice());
    let mut masked = csv::Writer::from_writer(Vec::new());
    masked.write_record(rd.headers().unwrap()).unwrap();
    for rec in rd.records() {
        let mut fields: Vec<String> = rec.unwrap().iter().map(String::from).collect();
        fields[BUILD_COLUMN] = "<build>".into();
        fields[WALL_TIME_COLUMN] = "<wall_time>".into();
        masked.write_record(&fields).unwrap();
    }
    compare("results.csv", &String::from_utf8(masked.into_inner().unwrap()).unwrap());

    let mut summary = summarize(&rows, serde_json::to_value(&table).unwrap());
    summary.build_id = "<build>".into();
    compare("summary.json", &(serde_json::to_string_pretty(&summary).unwrap() + "\n"));
}
