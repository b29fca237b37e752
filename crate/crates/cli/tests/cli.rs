use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ews(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ews"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read_column(path: &Path, col: usize) -> Vec<f64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = ews(&["simulate", "--model", "sir-white", "--seed", "7", "--out", p(out)]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let fa = fs::read(a.join("trajectory.csv")).unwrap();
    assert_eq!(fa, fs::read(b.join("trajectory.csv")).unwrap());
    assert!(a.join("simulate.manifest.json").exists());
}

#[test]
fn zero_noise_matches_ode() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path());
    assert!(ews(&["simulate", "--sigma", "0", "--t-end", "50", "--out", out])
        .status
        .success());
    assert!(ews(&["ode", "--t-end", "50", "--out", out]).status.success());
    for col in [1, 2] {
        let sde = read_column(&dir.path().join("trajectory.csv"), col);
        let ode = read_column(&dir.path().join("ode.csv"), col);
        assert_eq!(sde.len(), 51);
        let gap = sde.iter().zip(&ode).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(gap < 1e-6, "gap {gap}");
    }
    let o = ews(&[
        "simulate",
        "--model",
        "sir-demographic",
        "--sigma",
        "0",
        "--t-end",
        "10",
        "--out",
        out,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = ews(&["simulate", "--model", "foo", "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("sir-white") && stderr(&o).contains("seir-white"));

    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "model = sir-white\ncolour = red\n").unwrap();
    let o = ews(&["--config", p(&cfg), "simulate", "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("colour"));

    let o = ews(&["simulate", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_values_and_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# short run\nt_end = 5\nsigma = 0\n").unwrap();
    let out = dir.path().join("o");
    let o = ews(&["--config", p(&cfg), "simulate", "--t-end", "3", "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(read_column(&out.join("trajectory.csv"), 0).last(), Some(&3.0));
    let manifest = fs::read_to_string(out.join("simulate.manifest.json")).unwrap();
    assert!(manifest.contains(p(&cfg)), "config file hash recorded");
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let o = ews(&["train", "--dataset", p(&missing), "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope.csv"));

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "scenario_id,model,klass,pad_count,v0\n0,sir-white,null,0,1\n").unwrap();
    let o = ews(&["train", "--dataset", p(&bad), "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("klass"));
}

#[test]
fn divergence_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = ews(&[
        "simulate",
        "--t-end",
        "1",
        "--init",
        "1e300,1e300",
        "--beta0",
        "1",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn dataset_train_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("d");
    let o = ews(&[
        "dataset",
        "--groups",
        "sir-white:20:20",
        "--window",
        "100",
        "--seed",
        "5",
        "--out",
        p(&d),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let d2 = dir.path().join("d2");
    let o = ews(&[
        "dataset",
        "--groups",
        "sir-white:20:20",
        "--window",
        "100",
        "--seed",
        "5",
        "--workers",
        "3",
        "--out",
        p(&d2),
    ]);
    assert!(o.status.success());
    assert_eq!(
        fs::read(d.join("dataset.csv")).unwrap(),
        fs::read(d2.join("dataset.csv")).unwrap()
    );

    let m = dir.path().join("m");
    let data = d.join("dataset.csv");
    let o = ews(&["train", "--dataset", p(&data), "--epochs", "40", "--out", p(&m)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest = fs::read_to_string(m.join("train.manifest.json")).unwrap();
    assert!(manifest.contains(p(&data)));

    let e = dir.path().join("e");
    let model = m.join("model.json");
    let o = ews(&[
        "eval",
        "--model",
        p(&model),
        "--dataset",
        p(&data),
        "--scenarios",
        "2",
        "--out",
        p(&e),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let auc: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("learned auc "))
        .expect("learned AUC printed")
        .parse()
        .unwrap();
    assert!((0.0..=1.0).contains(&auc));
    let freq = fs::read_to_string(e.join("frequencies.csv")).unwrap();
    let total: usize = freq
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(total, 2 * 2 * 5);
    assert_eq!(fs::read_dir(e.join("traces")).unwrap().count(), 4);
}

#[test]
fn separable_dataset_scores_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("scenario_id,model,class,pad_count");
    for k in 0..100 {
        csv.push_str(&format!(",v{k}"));
    }
    csv.push('\n');
    for id in 0..60 {
        let transcritical = id % 2 == 0;
        let class = if transcritical { "transcritical" } else { "null" };
        csv.push_str(&format!("{id},sir-white,{class},0"));
        for t in 0..100 {
            let sign = if (t * 7 + id * 3) % 5 < 2 { -1.0 } else { 1.0 };
            let amp = if transcritical { 0.2 + t as f64 / 50.0 } else { 1.0 };
            csv.push_str(&format!(",{}", sign * amp));
        }
        csv.push('\n');
    }
    let data = dir.path().join("perfect.csv");
    fs::write(&data, csv).unwrap();
    let out = p(dir.path());
    let o = ews(&[
        "train",
        "--dataset",
        p(&data),
        "--epochs",
        "200",
        "--learning-rate",
        "0.05",
        "--out",
        out,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let model = dir.path().join("model.json");
    let o = ews(&["eval", "--model", p(&model), "--dataset", p(&data), "--out", out]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("learned auc 1.0000"), "{}", stdout(&o));
}

#[test]
fn re_and_slice_find_a_transition() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("date,cases\n");
    let mut level = 2000.0f64;
    let mut date = (2021, 1, 1);
    let days_in = |m: u32| match m {
        2 => 28,
        4 | 6 | 9 | 11 => 30,
        _ => 31,
    };
    for day in 0..220 {
        level *= if (60..150).contains(&day) {
            0.97
        } else if day >= 150 {
            1.04
        } else {
            1.0
        };
        csv.push_str(&format!(
            "{:04}-{:02}-{:02},{}\n",
            date.0,
            date.1,
            date.2,
            level.round() as u64
        ));
        date.2 += 1;
        if date.2 > days_in(date.1) {
            date.2 = 1;
            date.1 += 1;
        }
    }
    let cases = dir.path().join("cases.csv");
    fs::write(&cases, csv).unwrap();
    let out = dir.path().join("re");
    let o = ews(&["re", "--input", p(&cases), "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let re_csv = out.join("re.csv");
    assert!(fs::read_to_string(&re_csv)
        .unwrap()
        .starts_with("date,re_mean\n2021-01-01,\n"));

    let sliced = dir.path().join("slices");
    let o = ews(&["slice", "--input", p(&cases), "--re", p(&re_csv), "--out", p(&sliced)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let names: Vec<String> = fs::read_dir(&sliced)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(names.iter().any(|n| n.starts_with("transcritical_")), "{names:?}");
    assert!(names.iter().any(|n| n.starts_with("null_")));

    let gap = dir.path().join("gap.csv");
    fs::write(&gap, "date,cases\n2021-01-01,5\n2021-01-03,6\n").unwrap();
    let o = ews(&["re", "--input", p(&gap), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(2));
}
