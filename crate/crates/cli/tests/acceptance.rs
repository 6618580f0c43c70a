//! Acceptance run: one line per criterion, nonzero exit if any fails.
//!
//! Criteria 1-9 run the invariant suites at full size and compare their
//! wall time with the allowed budget; criterion 10 runs `stark verify-all`
//! twice and compares the artifacts byte for byte.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use stark_core::verify::{run_suite, SuiteReport, VerifySettings};

const SEED: u64 = 20240601;

struct Criterion {
    id: usize,
    name: &'static str,
    dimension: usize,
    limit: Duration,
}

const fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

const CRITERIA: [Criterion; 9] = [
    Criterion {
        id: 1,
        name: "eikonal identity",
        dimension: 3,
        limit: secs(1),
    },
    Criterion {
        id: 2,
        name: "parabolic identities",
        dimension: 3,
        limit: secs(5),
    },
    Criterion {
        id: 3,
        name: "constants",
        dimension: 3,
        limit: secs(1),
    },
    Criterion {
        id: 4,
        name: "classical decay",
        dimension: 3,
        limit: secs(120),
    },
    Criterion {
        id: 5,
        name: "region invariance",
        dimension: 3,
        limit: secs(5),
    },
    Criterion {
        id: 6,
        name: "transport hierarchy",
        dimension: 3,
        limit: secs(300),
    },
    Criterion {
        id: 7,
        name: "stationary phase",
        dimension: 2,
        limit: secs(60),
    },
    Criterion {
        id: 8,
        name: "kernel singularity",
        dimension: 3,
        limit: secs(120),
    },
    Criterion {
        id: 9,
        name: "free-case degeneracy",
        dimension: 3,
        limit: secs(10),
    },
];

fn summarize(report: &SuiteReport) -> String {
    report
        .checks
        .iter()
        .map(|c| {
            let mark = if c.passed { "" } else { "!" };
            format!("{mark}{}={:.3e}", c.name, c.value)
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn run_criterion(c: &Criterion) -> bool {
    let settings = VerifySettings::default();
    let start = Instant::now();
    let result = run_suite(c.id, &settings, SEED, c.dimension);
    let elapsed = start.elapsed();
    let in_time = elapsed < c.limit;
    let (ok, detail) = match &result {
        Ok(r) => (r.passed && in_time, summarize(r)),
        Err(e) => (false, format!("error: {e}")),
    };
    println!(
        "criterion {} ({}): {} [{:.2} s of {} s] {}",
        c.id,
        c.name,
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        c.limit.as_secs(),
        detail
    );
    ok
}

fn read_tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(dir).expect("artifact directory") {
        let path = entry.expect("directory entry").path();
        let name = path.strip_prefix(dir).unwrap().to_path_buf();
        files.insert(name, std::fs::read(&path).expect("artifact file"));
    }
    files
}

fn determinism() -> bool {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/coulomb_d3.json");
    let tmp = tempfile::tempdir().expect("temporary directory");
    let mut trees = Vec::new();
    let mut lines = Vec::new();
    for run in ["a", "b"] {
        let dir = tmp.path().join(run);
        let out = Command::new(env!("CARGO_BIN_EXE_stark"))
            .arg("verify-all")
            .arg("--config")
            .arg(&config)
            .arg(format!("--output_dir={}", dir.display()))
            .output()
            .expect("run stark");
        lines.push(out.stdout);
        trees.push(read_tree(&dir));
    }
    let differing: Vec<String> = trees[0]
        .iter()
        .filter(|(name, bytes)| trees[1].get(*name) != Some(*bytes))
        .map(|(name, _)| name.display().to_string())
        .collect();
    // The printed summary must match as well.
    let same = !trees[0].is_empty()
        && differing.is_empty()
        && trees[0].len() == trees[1].len()
        && lines[0] == lines[1];
    println!(
        "criterion 10 (determinism): {} [{} artifacts] {}",
        if same { "PASS" } else { "FAIL" },
        trees[0].len(),
        if differing.is_empty() {
            String::new()
        } else {
            format!("differ: {}", differing.join(", "))
        }
    );
    same
}

fn main() {
    let mut failed = 0;
    for c in &CRITERIA {
        if !run_criterion(c) {
            failed += 1;
        }
    }
    if !determinism() {
        failed += 1;
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
