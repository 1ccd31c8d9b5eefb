//! End-to-end behaviour of the `deepremix` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use deepremix::nalr::{apply_fir, design_fir, nalr_gains, Audiogram, AUDIOGRAM_FREQUENCIES, NALR_CORRECTION_DB};
use deepremix::wav::{read_wav, write_wav, WavFormat};
use deepremix::{AudioBuffer, SAMPLE_RATE};
use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_deepremix"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn tone(freq: f64, amp: f64, len: usize) -> AudioBuffer {
    let x: Vec<f64> = (0..len)
        .map(|n| amp * (2.0 * std::f64::consts::PI * freq * n as f64 / SAMPLE_RATE as f64).sin())
        .collect();
    AudioBuffer::stereo(x.clone(), x.iter().map(|v| -0.5 * v).collect(), SAMPLE_RATE).unwrap()
}

fn listener(levels: f64) -> Value {
    let ear = json!({ "frequencies_hz": AUDIOGRAM_FREQUENCIES, "levels_db_hl": vec![levels; 7] });
    json!({ "id": format!("flat-{levels}"), "left": ear, "right": ear })
}

/// Writes four stems and a scene into `dir`; returns the scene path.
fn write_scene(dir: &Path, stems: [AudioBuffer; 4], listener: Value, degradation: Value) -> PathBuf {
    fs::create_dir_all(dir.join("stems")).unwrap();
    for (name, buf) in ["drums", "bass", "other", "vocal"].iter().zip(&stems) {
        write_wav(dir.join("stems").join(format!("{name}.wav")), buf, WavFormat::F32).unwrap();
    }
    let scene = json!({
        "stems": {
            "drums": "stems/drums.wav",
            "bass": "stems/bass.wav",
            "other": "stems/other.wav",
            "vocal": "stems/vocal.wav"
        },
        "gains_db": { "drums": -3.0, "bass": 0.0, "other": -6.0, "vocal": 6.0 },
        "listener": listener,
        "degradation": degradation,
        "seed": 7
    });
    let path = dir.join("scene.json");
    fs::write(&path, serde_json::to_string_pretty(&scene).unwrap()).unwrap();
    path
}

fn tone_stems(len: usize) -> [AudioBuffer; 4] {
    [
        tone(110.0, 0.2, len),
        tone(440.0, 0.1, len),
        tone(1250.0, 0.05, len),
        tone(3100.0, 0.05, len),
    ]
}

fn max_abs_diff(a: &AudioBuffer, b: &AudioBuffer) -> f64 {
    (0..a.num_channels())
        .flat_map(|c| a.channel(c).iter().zip(b.channel(c)).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn silent_stems_give_silent_remix() {
    let dir = TempDir::new().unwrap();
    let silent = || AudioBuffer::zeros(2, 10_000, SAMPLE_RATE).unwrap();
    let scene = write_scene(
        dir.path(),
        [silent(), silent(), silent(), silent()],
        listener(40.0),
        Value::Null,
    );
    let out = dir.path().join("out");
    run_ok(&["remix", "--scene", s(&scene), "--out", s(&out)]);
    for name in ["mixture_at_mic.wav", "pre_nalr.wav", "nalred.wav"] {
        let buf = read_wav(out.join(name)).unwrap();
        assert_eq!(buf.len(), 10_000);
        assert_eq!(buf.peak(), 0.0, "{name}");
    }
}

#[test]
fn missing_stem_is_reported_by_path() {
    let dir = TempDir::new().unwrap();
    let scene = write_scene(dir.path(), tone_stems(5_000), listener(20.0), Value::Null);
    fs::remove_file(dir.path().join("stems/bass.wav")).unwrap();
    let out = run(&["remix", "--scene", s(&scene)]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bass.wav"), "{err}");
}

#[test]
fn unknown_scene_key_is_rejected() {
    let dir = TempDir::new().unwrap();
    let scene = write_scene(dir.path(), tone_stems(5_000), listener(20.0), Value::Null);
    let mut v: Value = serde_json::from_str(&fs::read_to_string(&scene).unwrap()).unwrap();
    v["gains_db"]["cowbell"] = json!(3.0);
    fs::write(&scene, v.to_string()).unwrap();
    let out = run(&["remix", "--scene", s(&scene)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("cowbell"));
}

#[test]
fn normal_hearing_only_applies_the_correction_curve() {
    let dir = TempDir::new().unwrap();
    let scene = write_scene(dir.path(), tone_stems(20_000), listener(0.0), Value::Null);
    let out = dir.path().join("out");
    run_ok(&["remix", "--scene", s(&scene), "--out", s(&out)]);
    let pre = read_wav(out.join("pre_nalr.wav")).unwrap();
    let nalred = read_wav(out.join("nalred.wav")).unwrap();

    let gains = nalr_gains(&Audiogram::flat(0.0).unwrap());
    assert_eq!(gains, NALR_CORRECTION_DB);
    let expected = apply_fir(&pre, &design_fir(&gains, SAMPLE_RATE, 221).unwrap());
    assert!(max_abs_diff(&expected, &nalred) < 1e-6);
}

#[test]
fn eval_reports_cap_half_amplitude_and_mismatch() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let r = tone(440.0, 0.5, 8_000);
    write_wav(d.join("ref.wav"), &r, WavFormat::F32).unwrap();
    write_wav(d.join("half.wav"), &r.scaled(0.5), WavFormat::F32).unwrap();
    write_wav(d.join("short.wav"), &tone(440.0, 0.5, 7_000), WavFormat::F32).unwrap();

    let json_out = d.join("same.json");
    run_ok(&[
        "eval",
        s(&d.join("ref.wav")),
        s(&d.join("ref.wav")),
        "--out",
        s(&json_out),
    ]);
    let v: Value = serde_json::from_str(&fs::read_to_string(&json_out).unwrap()).unwrap();
    assert_eq!(v["sdr_mean_db"], json!(300.0));
    assert_eq!(v["mae_mean"], json!(0.0));
    assert_eq!(v["sdr_variant"], json!("energy-ratio"));

    let out = run_ok(&["eval", s(&d.join("ref.wav")), s(&d.join("half.wav"))]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let sdr = v["sdr_mean_db"].as_f64().unwrap();
    assert!((sdr - 6.0206).abs() < 1e-4, "{sdr}");

    let out = run(&["eval", s(&d.join("ref.wav")), s(&d.join("short.wav"))]);
    assert!(!out.status.success());
}

#[test]
fn nalr_prints_prescribed_gains() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    write_wav(d.join("in.wav"), &tone(1000.0, 0.1, 8_000), WavFormat::F32).unwrap();
    for (level, ig_1k) in [(0.0, "1.00"), (40.0, "19.40")] {
        let lp = d.join(format!("l{level}.json"));
        fs::write(&lp, listener(level).to_string()).unwrap();
        let out_dir = d.join(format!("o{level}"));
        let out = run_ok(&[
            "nalr",
            "--audiogram",
            s(&lp),
            "--in",
            s(&d.join("in.wav")),
            "--out",
            s(&out_dir),
        ]);
        let text = String::from_utf8_lossy(&out.stdout);
        let line = text.lines().find(|l| l.trim_start().starts_with("1000 Hz")).unwrap();
        assert!(line.contains(ig_1k), "{line}");
        assert_eq!(read_wav(out_dir.join("nalred.wav")).unwrap().len(), 8_000);
    }
}

#[test]
fn order_one_deep_filter_matches_crm_and_reruns_are_identical() {
    let dir = TempDir::new().unwrap();
    let degradation = json!({ "fir_len": 6, "mag_jitter_db": 1.0, "phase_jitter_rad": 0.3, "snr_db": 30.0 });
    let scene = write_scene(dir.path(), tone_stems(22_050), listener(30.0), degradation);
    let sc = s(&scene);
    let out = |name: &str| dir.path().join(name);

    run_ok(&["enhance", "--scene", sc, "--mode", "crm", "--out", s(&out("crm"))]);
    run_ok(&[
        "enhance",
        "--scene",
        sc,
        "--mode",
        "df",
        "--order",
        "1",
        "--out",
        s(&out("df1")),
    ]);
    assert_eq!(
        fs::read(out("crm/enhanced.wav")).unwrap(),
        fs::read(out("df1/enhanced.wav")).unwrap()
    );

    run_ok(&[
        "enhance",
        "--scene",
        sc,
        "--mode",
        "df",
        "--order",
        "5",
        "--out",
        s(&out("a")),
    ]);
    run_ok(&[
        "enhance",
        "--scene",
        sc,
        "--mode",
        "df",
        "--order",
        "5",
        "--out",
        s(&out("b")),
    ]);
    for name in ["enhanced.wav", "report.json"] {
        assert_eq!(
            fs::read(out("a").join(name)).unwrap(),
            fs::read(out("b").join(name)).unwrap(),
            "{name}"
        );
    }
    let report: Value = serde_json::from_str(&fs::read_to_string(out("a/report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["order"], json!(5));
    assert!(report["sdr_after"].as_f64().unwrap() >= report["sdr_before"].as_f64().unwrap());
}

#[test]
fn unknown_mode_is_rejected() {
    let out = run(&["enhance", "--scene", "nowhere.json", "--mode", "wiener"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("wiener"));
}

#[test]
fn remix_and_degrade_are_idempotent() {
    let dir = TempDir::new().unwrap();
    let degradation = json!({ "fir_len": 4, "delay_samples": 100, "phase_jitter_rad": 0.2, "snr_db": 20.0 });
    let scene = write_scene(dir.path(), tone_stems(10_000), listener(25.0), degradation);
    let dirs = ["one", "two"].map(|d| dir.path().join(d));
    for d in &dirs {
        run_ok(&["remix", "--scene", s(&scene), "--out", s(d)]);
        run_ok(&["degrade", "--scene", s(&scene), "--out", s(d)]);
    }
    for name in ["mixture_at_mic.wav", "pre_nalr.wav", "nalred.wav", "degraded.wav"] {
        assert_eq!(
            fs::read(dirs[0].join(name)).unwrap(),
            fs::read(dirs[1].join(name)).unwrap(),
            "{name}"
        );
    }
    run_ok(&["degrade", "--scene", s(&scene), "--out", s(&dirs[0]), "--seed", "8"]);
    assert_ne!(
        fs::read(dirs[0].join("degraded.wav")).unwrap(),
        fs::read(dirs[1].join("degraded.wav")).unwrap()
    );
}
