use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "\
rounds = 2
episodes = 2
actor_hidden = 6
critic_hidden = 12
max_steps = 80
eval_episodes = 4
pfm_hidden = 6
pfm_epochs = 3
policy_epochs = 5
max_generations = 3
";

fn gaac(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gaac"))
        .args(args)
        .current_dir(dir)
        .env("GAAC_THREADS", "1")
        .output()
        .unwrap()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.cfg"), SMALL).unwrap();
    dir
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn run_prints_seed_and_writes_report() {
    let dir = setup();
    let o = gaac(&["run", "--config", "small.cfg", "--seed", "9", "--out", "r"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed: 9"));
    let report = std::fs::read_to_string(dir.path().join("r/report.txt")).unwrap();
    assert!(report.contains("seed: 9"));
    assert!(report.contains("eval_episodes: 4"));
    let rewards = std::fs::read_to_string(dir.path().join("r/rewards.csv")).unwrap();
    assert_eq!(rewards.lines().count(), 1 + 4 + 4);
}

#[test]
fn identical_invocations_give_identical_directories() {
    let dir = setup();
    for out in ["a", "b"] {
        assert_eq!(code(&gaac(&["run", "--config", "small.cfg", "--out", out], dir.path())), 0);
    }
    let mut names: Vec<_> = std::fs::read_dir(dir.path().join("a"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.len() >= 10);
    for name in names {
        let a = std::fs::read(dir.path().join("a").join(&name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(&name)).unwrap();
        assert_eq!(a, b, "{name:?} differs");
    }
}

#[test]
fn stage_commands_compose_to_a_full_run() {
    let dir = setup();
    assert_eq!(code(&gaac(&["run", "--config", "small.cfg", "--out", "full"], dir.path())), 0);
    assert_eq!(code(&gaac(&["collect", "--config", "small.cfg", "--out", "s"], dir.path())), 0);
    for cmd in ["train-pfm", "optimize", "train-policy", "evaluate"] {
        let o = gaac(&[cmd, "--run", "s"], dir.path());
        assert_eq!(code(&o), 0, "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["rewards.csv", "policy.txt", "w.csv", "pfm.txt", "d1.csv"] {
        let a = std::fs::read(dir.path().join("full").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("s").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs");
    }
    // Rerunning a stage would overwrite its artifact.
    assert_eq!(code(&gaac(&["train-policy", "--run", "s"], dir.path())), 3);
}

#[test]
fn exit_codes() {
    let dir = setup();
    assert_eq!(code(&gaac(&["bogus"], dir.path())), 1);
    assert_eq!(code(&gaac(&["run"], dir.path())), 1);
    assert_eq!(code(&gaac(&["--help"], dir.path())), 0);
    assert_eq!(code(&gaac(&["run", "--config", "missing.cfg", "--out", "x"], dir.path())), 2);
    std::fs::write(dir.path().join("bad.cfg"), "gamma = 1.5\n").unwrap();
    let o = gaac(&["run", "--config", "bad.cfg", "--out", "x"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("gamma"));
    std::fs::write(dir.path().join("unknown.cfg"), "colour = red\n").unwrap();
    assert_eq!(code(&gaac(&["run", "--config", "unknown.cfg", "--out", "x"], dir.path())), 2);
    assert_eq!(code(&gaac(&["run", "--config", "small.cfg", "--mode", "nope", "--out", "x"], dir.path())), 1);
    assert_eq!(code(&gaac(&["evaluate", "--run", "nowhere"], dir.path())), 3);
    assert_eq!(code(&gaac(&["plot-data", "--run", "nowhere", "--out", "p"], dir.path())), 3);
}

#[test]
fn existing_run_directory_is_left_alone() {
    let dir = setup();
    std::fs::create_dir(dir.path().join("r")).unwrap();
    std::fs::write(dir.path().join("r/keep.txt"), "x").unwrap();
    assert_eq!(code(&gaac(&["run", "--config", "small.cfg", "--out", "r"], dir.path())), 3);
    let names: Vec<_> = std::fs::read_dir(dir.path().join("r")).unwrap().collect();
    assert_eq!(names.len(), 1);
}

#[test]
fn ablation_sweep_and_plot_data() {
    let dir = setup();
    assert_eq!(code(&gaac(&["ablation", "--config", "small.cfg", "--out", "ab"], dir.path())), 0);
    for mode in ["ac", "ac_ga", "ac_beo", "gaac"] {
        assert!(dir.path().join("ab").join(mode).join("report.txt").is_file());
    }
    assert_eq!(code(&gaac(&["plot-data", "--run", "ab", "--out", "pa"], dir.path())), 0);
    let rewards = std::fs::read_to_string(dir.path().join("pa/plot_rewards.csv")).unwrap();
    assert_eq!(rewards.lines().count(), 1 + 4 * (4 + 4));
    let o = gaac(
        &["eta-sweep", "--config", "small.cfg", "--out", "es", "--etas", "0,25%", "--repeats", "2"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(code(&gaac(&["plot-data", "--run", "es", "--out", "pe"], dir.path())), 0);
    let eta = std::fs::read_to_string(dir.path().join("pe/plot_eta.csv")).unwrap();
    assert_eq!(eta.lines().count(), 1 + 2 * 4);
    assert_eq!(code(&gaac(&["eta-sweep", "--config", "small.cfg", "--out", "e2", "--etas", "2"], dir.path())), 1);
}
