use std::path::Path;

use morozov::config::ExperimentConfig;

#[test]
fn shipped_configs_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg =
                ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            if let morozov::config::ProblemSpec::MatrixMarket { path: mtx, .. } = &cfg.problem {
                assert!(cfg.resolve(mtx).exists(), "{}", mtx.display());
            }
            seen += 1;
        }
    }
    assert!(seen >= 5);
}
