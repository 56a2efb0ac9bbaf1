use super::*;
use std::fs;

fn argv(args: &[&str]) -> Vec<String> {
    std::iter::once("vortexlab").chain(args.iter().copied()).map(String::from).collect()
}

fn path_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn reference_config(dir: &Path) -> PathBuf {
    let path = dir.join("ref.json");
    fs::write(&path, r#"{"alpha_bar": 0.5, "B": 1000, "grid": {"t_min": -4, "t_max": 4, "n": 801}}"#).unwrap();
    path
}

#[test]
fn profile_build_writes_descriptor_table_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = reference_config(dir.path());
    let out = dir.path().join("prof.json");
    let code = dispatch(argv(&["profile", "build", "--config", path_arg(&cfg), "--out", path_arg(&out)]));
    assert_eq!(code, EXIT_OK);
    let p = load_profile(&out).unwrap();
    let direct = Profile::build(&ProfileParams::reference()).unwrap();
    assert_eq!(p.xi(0.3), direct.xi(0.3));
    let csv = fs::read_to_string(out.with_extension("csv")).unwrap();
    assert!(csv.starts_with("t,Xi,XiPrime,A\n"));
    assert_eq!(csv.lines().count(), 802);
    let manifest: RunManifest =
        serde_json::from_str(&fs::read_to_string(dir.path().join("prof.json.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.command, "profile");
    assert_eq!(manifest.outputs.len(), 2);
    assert_eq!(manifest.config_digest.len(), 64);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = reference_config(dir.path());
    let digests: Vec<(String, String, RunManifest)> = ["a", "b"]
        .iter()
        .map(|tag| {
            let out = dir.path().join(format!("{tag}.json"));
            let man = dir.path().join("run.manifest.json");
            let code = dispatch(argv(&[
                "profile",
                "build",
                "--config",
                path_arg(&cfg),
                "--out",
                path_arg(&out),
                "--csv",
                path_arg(&dir.path().join("table.csv")),
                "--manifest",
                path_arg(&man),
            ]));
            assert_eq!(code, EXIT_OK);
            let m: RunManifest = serde_json::from_str(&fs::read_to_string(&man).unwrap()).unwrap();
            (fs::read_to_string(&out).unwrap(), fs::read_to_string(dir.path().join("table.csv")).unwrap(), m)
        })
        .collect();
    assert_eq!(digests[0].0, digests[1].0);
    assert_eq!(digests[0].1, digests[1].1);
    assert_eq!(digests[0].2.profile_digest, digests[1].2.profile_digest);
    assert_ne!(digests[0].2.config_digest, digests[1].2.config_digest);
}

#[test]
fn exit_codes_follow_the_failure_class() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(dispatch(argv(&["profile", "build", "--bogus"])), EXIT_USAGE);
    assert_eq!(dispatch(argv(&["frobnicate"])), EXIT_USAGE);
    assert_eq!(dispatch(argv(&["--help"])), EXIT_OK);
    let missing = dir.path().join("nope.json");
    let out = dir.path().join("o.json");
    assert_eq!(dispatch(argv(&["profile", "build", "--config", path_arg(&missing), "--out", path_arg(&out)])), EXIT_IO);
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"alpha_bar": 1.5, "B": 1000}"#).unwrap();
    assert_eq!(dispatch(argv(&["profile", "build", "--config", path_arg(&bad), "--out", path_arg(&out)])), EXIT_VALIDATION);
    fs::write(&bad, "{not json").unwrap();
    assert_eq!(dispatch(argv(&["profile", "build", "--config", path_arg(&bad), "--out", path_arg(&out)])), EXIT_VALIDATION);
    let cfg = reference_config(dir.path());
    let code = dispatch(argv(&[
        "evolve", "--profile", path_arg(&cfg), "--m", "2", "--tau-end", "1", "--dt", "1", "--out", path_arg(&out),
    ]));
    assert_eq!(code, EXIT_VALIDATION);
}

#[test]
fn module_errors_map_to_validation_or_numerics() {
    assert_eq!(CliError::from(SpecmatError::Wavenumber(0.5)).exit_code(), EXIT_VALIDATION);
    assert_eq!(CliError::from(SpecmatError::NoUnstable(1e-6)).exit_code(), EXIT_NUMERICAL);
    assert_eq!(CliError::from(SturmError::BandEmpty(0.5)).exit_code(), EXIT_NUMERICAL);
    assert_eq!(CliError::from(BifurcationError::BadSteps).exit_code(), EXIT_VALIDATION);
    assert_eq!(
        CliError::from(BifurcationError::Rayleigh(RayleighError::Wavenumber(0.5))).exit_code(),
        EXIT_VALIDATION
    );
    assert_eq!(
        CliError::from(EvolveError::Instability { tau: 1.0, norm: 1e9, cap: 1.0 }).exit_code(),
        EXIT_NUMERICAL
    );
    assert_eq!(CliError::from(FieldsError::Beta(-1.0)).exit_code(), EXIT_VALIDATION);
}

#[test]
fn evolve_and_background_write_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = reference_config(dir.path());
    let out = dir.path().join("evolve.csv");
    let code = dispatch(argv(&[
        "--threads", "2", "evolve", "--profile", path_arg(&cfg), "--m", "2", "--tau-end", "10", "--dt", "1e-3", "--seed",
        "7", "--out", path_arg(&out),
    ]));
    assert_eq!(code, EXIT_OK);
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("tau,norm,log_norm\n"));
    assert_eq!(csv.lines().count(), 102);
    let bg = dir.path().join("bg.json");
    fs::write(&bg, r#"{"beta": 3, "alpha": 0.5, "p": 3, "profile": "ref.json"}"#).unwrap();
    let out = dir.path().join("bg.csv");
    let code = dispatch(argv(&["background", "scan", "--config", path_arg(&bg), "--times", "0.01,0.1", "--out", path_arg(&out)]));
    assert_eq!(code, EXIT_OK);
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("t,L1_omega,Lp_omega,Lp_f,L2_dtv\n"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn sturm_output_carries_the_named_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = reference_config(dir.path());
    let out = dir.path().join("sturm.json");
    assert_eq!(dispatch(argv(&["sturm", "--profile", path_arg(&cfg), "--which", "a", "--out", path_arg(&out)])), EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    for key in ["lambda", "m", "psi_at_c", "nodes", "method_gap"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert!((v["lambda"].as_f64().unwrap() / 313.8269454840964 - 1.0).abs() < 1e-7, "{}", v["lambda"]);
}

#[test]
fn recipe_names_parse() {
    for r in Recipe::all() {
        let cli = Cli::try_parse_from(["vortexlab", "reproduce", r.id()]).unwrap();
        match cli.command {
            Command::Reproduce(a) => assert_eq!(a.recipe, r),
            _ => panic!("wrong subcommand"),
        }
    }
    assert!(Cli::try_parse_from(["vortexlab", "reproduce", "p9"]).is_err());
}

#[test]
fn class_recipe_passes_on_the_reference_profile() {
    let report = recipes::run(Recipe::ClassC, None).unwrap();
    assert!(report.passed(), "{}", report.render());
    assert!(report.render().lines().last().unwrap().starts_with("PASS class-C"));
}
