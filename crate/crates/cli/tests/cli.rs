use std::path::Path;
use std::process::{Command, Output};

fn sdl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdl"))
        .args(args)
        .env("SDL_THREADS", "1")
        .output()
        .expect("sdl runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const PRESET_NAMES: [&str; 9] = [
    "brownian_baseline",
    "ito_trick_scaling",
    "invariance_shear",
    "duality_gff",
    "morrey_demo",
    "cutoff_demo",
    "resolvent_sweep",
    "particle_pair",
    "variance_gff",
];

#[test]
fn list_prints_every_preset() {
    let o = sdl(&["list"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for name in PRESET_NAMES {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing:\n{text}");
    }
}

#[test]
fn dumped_presets_validate() {
    let tmp = tempfile::tempdir().unwrap();
    for name in PRESET_NAMES {
        for fmt in [&["--dump"][..], &["--dump", "--json"][..]] {
            let mut args = vec!["preset", name];
            args.extend_from_slice(fmt);
            let o = sdl(&args);
            assert!(o.status.success(), "{name}: {}", stderr(&o));
            let path = tmp.path().join(format!("{name}.{}", fmt.len()));
            std::fs::write(&path, stdout(&o)).unwrap();
            let v = sdl(&["validate", path.to_str().unwrap()]);
            assert!(v.status.success(), "{name}: {}", stderr(&v));
        }
    }
}

#[test]
fn schema_lists_keys_and_checks() {
    let o = sdl(&["schema"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for key in ["grid.N", "sim.n_paths", "kbe.lambdas", "diagnostics[].check"] {
        assert!(text.contains(key), "{key}");
    }
    assert!(text.contains("incompressibility") && text.contains("duality"));
}

#[test]
fn config_errors_exit_with_two_and_name_the_key() {
    let o = sdl(&["preset", "particle_pair", "--override", "sim.dt=0.3", "--dump"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sim"), "{}", stderr(&o));
    let o = sdl(&["preset", "no_such_preset"]);
    assert_eq!(o.status.code(), Some(2));
    let o = sdl(&["validate", "/nonexistent/config.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn preset_run_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("pair");
    let o = sdl(&[
        "preset",
        "particle_pair",
        "--override",
        "sim.n_paths=400",
        "--override",
        &format!("output_dir=\"{}\"", out.display()),
    ]);
    assert!(matches!(o.status.code(), Some(0) | Some(1)), "{}", stderr(&o));
    for f in ["config_echo.toml", "reports.jsonl", "summary.csv", "metadata.json", "ensembles/main.csv"] {
        assert!(Path::new(&out).join(f).exists(), "{f} missing");
    }
    let v = sdl(&["validate", out.join("config_echo.toml").to_str().unwrap()]);
    assert!(v.status.success(), "{}", stderr(&v));
}
