use std::path::PathBuf;
use std::process::{Command, Output};

fn esfe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_esfe"))
        .args(args)
        .env("ESFE_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn scenes() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenes")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn ins_prints_one_line_per_scale() {
    let o = esfe(&["ins", "burst_train:period=0.25,duty=0.5", "--surrogates", "10", "--seed", "3", "--scales", "0.05,0.1,0.2"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "scale,ins,gamma,verdict");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("0.05,"));
    assert!(lines[4].starts_with("INS_max "));
    assert!(lines[4].ends_with("nonstationary"), "{}", lines[4]);
}

#[test]
fn ins_reads_wav() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("noise.wav");
    let spec: esfe_core::scene::SynthSpec = "white".parse().unwrap();
    let mut sig = esfe_core::scene::synth_source(&spec, 1.0, 16000.0, 5).unwrap();
    // keep well inside 16-bit range
    sig.samples.iter_mut().for_each(|v| *v *= 0.1);
    esfe_core::scene::write_wav(&path, &sig).unwrap();
    let o = esfe(&["ins", path.to_str().unwrap(), "--surrogates", "10"]);
    assert!(stdout(&o).lines().last().unwrap().starts_with("INS_max"));
}

#[test]
fn bad_source_is_an_error() {
    let o = esfe(&["ins", "pink_noise"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("pink_noise"));
}

#[test]
fn select_esfe_on_corner_scene() {
    let cfg = scenes().join("corner.toml");
    let o = esfe(&["select", "--config", cfg.to_str().unwrap(), "--method", "esfe"]);
    let text = stdout(&o);
    assert!(text.contains("sensor,ins_max"));
    assert!(text.contains("alpha 0.3592"), "{text}");
    assert!(text.contains("selected S0 S1 S2 S3"), "{text}");
    assert!(text.contains("area x 0..10 y 0..10"), "{text}");
}

#[test]
fn select_snr_keeps_half() {
    let cfg = scenes().join("corner.toml");
    let o = esfe(&["select", "--config", cfg.to_str().unwrap(), "--method", "snr"]);
    let text = stdout(&o);
    let picked = text.lines().find(|l| l.starts_with("selected ")).unwrap();
    assert_eq!(picked.split(' ').count(), 1 + 6);
    assert!(text.contains("area x 0..20 y 0..20"));
}

#[test]
fn localize_reports_blocks_and_rmse() {
    let cfg = scenes().join("corner.toml");
    let o = esfe(&["localize", "--config", cfg.to_str().unwrap(), "--method", "hml", "--esfe", "--resolution", "0.2"]);
    let text = stdout(&o);
    let blocks = text.lines().filter(|l| l.chars().next().is_some_and(|c| c.is_ascii_digit())).count();
    assert_eq!(blocks, 46);
    let rmse: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("rmse "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(rmse.is_finite() && rmse >= 0.0);
}

#[test]
fn localize_selectors_are_exclusive() {
    let cfg = scenes().join("corner.toml");
    let o = esfe(&["localize", "--config", cfg.to_str().unwrap(), "--method", "ml", "--esfe", "--all-sensors"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_run_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let exp = dir.path().join("exp.toml");
    std::fs::write(
        &exp,
        format!(
            "scene = {:?}\nselectors = [\"all\", \"snr\"]\nsnr_list = [10.0]\nresolution = 0.5\n",
            scenes().join("corner.toml")
        ),
    )
    .unwrap();
    let out = dir.path().join("r.csv");
    let o = esfe(&["bench", "run", "--config", exp.to_str().unwrap(), "--out", out.to_str().unwrap(), "--trials", "2", "--profile"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = esfe_core::bench::parse_csv(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(rows.len(), 2 * 2 * 2);
    assert!(rows.iter().all(|r| r.status == "ok" && r.profile.is_some()));
}

#[test]
fn bench_run_exits_2_on_failed_rows() {
    let dir = tempfile::tempdir().unwrap();
    let exp = dir.path().join("exp.toml");
    std::fs::write(
        &exp,
        "snr_list = [0.0]\nselectors = [\"all\"]\n[random_scene]\nwidth = 10.0\nheight = 10.0\nsensors = 2\ntarget = \"white\"\nnoises = [\"white\"]\nduration_s = 1.0\n",
    )
    .unwrap();
    let out = dir.path().join("r.csv");
    let o = esfe(&["bench", "run", "--config", exp.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().skip(1).all(|l| l.contains(",failed: ")));
}

#[test]
fn bench_map_writes_pgm() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("map.pgm");
    let cfg = scenes().join("corner.toml");
    let o = esfe(&["bench", "map", "--config", cfg.to_str().unwrap(), "--cell", "0.5", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("P2"));
    assert!(lines.next().unwrap().starts_with('#'));
    assert_eq!(lines.next(), Some("40 40"));
    assert_eq!(lines.next(), Some("255"));
    let pixels: Vec<u32> = lines.flat_map(|l| l.split(' ')).map(|v| v.parse().unwrap()).collect();
    assert_eq!(pixels.len(), 1600);
    assert!(pixels.iter().all(|p| *p <= 255));
    assert!(pixels.contains(&255));
}

#[test]
fn bad_thread_count_is_rejected() {
    let o = Command::new(env!("CARGO_BIN_EXE_esfe"))
        .args(["ins", "white", "--surrogates", "10"])
        .env("ESFE_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}
