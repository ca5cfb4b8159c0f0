use serde_json::Value;
use toroidal_cli::commands::{self, SavedSolution};
use toroidal_cli::config::RunConfig;
use toroidal_cli::report::{validate_schema, ProfileCache};

fn fixed(a: f64) -> RunConfig {
    RunConfig {
        a: Some(a),
        auto_match: false,
        n: None,
        eps: Some(0.02),
        n_t: 256,
        n_theta: 16,
        ..RunConfig::default()
    }
}

#[test]
fn reports_are_deterministic_modulo_timestamps() {
    let cache = ProfileCache::default();
    let r1 = commands::solve(&fixed(0.1), &cache).unwrap();
    let r2 = commands::solve(&fixed(0.1), &cache).unwrap();
    assert_eq!(r1.without_timestamps().to_json(), r2.without_timestamps().to_json());
    assert!(r1.created_unix > 0);
}

#[test]
fn solve_report_has_trace_and_schema() {
    let r = commands::solve(&fixed(0.1), &ProfileCache::default()).unwrap();
    assert!(!r.trace.is_empty());
    assert!(r.certificate.unwrap().passed);
    let v: Value = serde_json::from_str(&r.to_json()).unwrap();
    validate_schema(&v).unwrap();
    assert_eq!(v["config"]["a"], 0.1);
    let mut broken = v.clone();
    broken.as_object_mut().unwrap().remove("trace");
    assert!(validate_schema(&broken).is_err());
}

#[test]
fn cache_reuses_hashed_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cache = ProfileCache {
        dir: Some(dir.path().to_path_buf()),
    };
    let (t1, p1) = cache.load(0.2, 128).unwrap();
    let (t2, p2) = cache.load(0.2, 128).unwrap();
    assert!(!p1.cached && p2.cached);
    assert_eq!(p1.sha256, p2.sha256);
    assert_eq!(t1, t2);
    let (_, p3) = cache.load(0.2, 256).unwrap();
    assert_ne!(p3.sha256, p1.sha256);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
}

#[test]
fn saved_solution_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = fixed(0.1);
    cfg.n = Some(64);
    cfg.eps = None;
    let sol_path = dir.path().join("sol.json");
    cfg.output.solution = Some(sol_path.clone());
    let cache = ProfileCache::default();
    let solved = commands::solve(&cfg, &cache).unwrap();
    let sol = SavedSolution::load(&sol_path).unwrap();
    assert_eq!(sol.n, Some(64));
    let cert = commands::certify_saved(&sol_path, cfg.r0, None, &cache).unwrap();
    assert_eq!(cert.certificate, solved.certificate);
    let mesh = dir.path().join("sol.ply");
    let ex = commands::export(&sol_path, &mesh, None, &cache).unwrap();
    assert_eq!(ex.diagnostics["euler_characteristic"], 0);
    assert!(std::fs::read_to_string(mesh).unwrap().starts_with("ply\n"));
}
