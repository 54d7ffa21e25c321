//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dbtune_core::harness::{
    gen_training_data, run_scenario, sweep_buffer, GenDataRequest, RunReport, ScenarioConfig,
};
use dbtune_core::neural::{NetConfig, NeuralModel, TrainingSet, DEFAULT_FILL_USERS};
use dbtune_core::sim::LruSet;
use dbtune_core::tuner::replay;
use dbtune_core::workload::{zipf_sample, UserStep};
use dbtune_core::Ladder;

type Check = Result<String, String>;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn load(name: &str) -> ScenarioConfig {
    ScenarioConfig::load(&configs().join(name)).expect("shipped config loads")
}

fn rung_distance(ladder: &Ladder, a: u32, b: u32) -> usize {
    ladder
        .index_of(a)
        .unwrap()
        .abs_diff(ladder.index_of(b).unwrap())
}

/// 1. Backprop against central finite differences on 20 random nets.
fn gradient_correctness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for trial in 0..20 {
        let (p, h, o) = if trial == 0 {
            (5, 20, 3)
        } else {
            (
                rng.random_range(1..=5),
                rng.random_range(1..=20),
                rng.random_range(1..=3),
            )
        };
        let net = NeuralModel::new(&NetConfig {
            n_inputs: p,
            n_hidden: h,
            n_outputs: o,
            init_half_range: 1.0,
            seed: rng.random(),
            ..Default::default()
        })
        .map_err(|e| e.to_string())?;
        let x: Vec<f64> = (0..p).map(|_| rng.random()).collect();
        let t: Vec<f64> = (0..o).map(|_| rng.random()).collect();
        worst = worst.max(net.gradient_check(&x, &t));
    }
    let detail = format!("max relative error {worst:.3e} (limit 1e-4)");
    if worst <= 1e-4 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// 2. Table I with η=0.4, 100 epochs, 100 hidden units.
fn table_one_training() -> Check {
    let cfg = NetConfig::default();
    assert_eq!(
        (cfg.learning_rate, cfg.epochs, cfg.n_hidden),
        (0.4, 100, 100)
    );
    let set = TrainingSet::table_one(DEFAULT_FILL_USERS);
    let mut model = NeuralModel::new(&cfg).map_err(|e| e.to_string())?;
    let trace = model.train(&set, &cfg).map_err(|e| e.to_string())?;
    let mse = *trace.last().unwrap();
    let sim = dbtune_core::sim::SimConfig::default();
    let mut worst_cache = 0;
    let mut worst_pool = 0;
    for row in set.rows() {
        let snap = dbtune_core::monitor::MetricsSnapshot {
            window_id: 1,
            end_tick: 0,
            buffer_miss_ratio: row.miss_ratio,
            active_users: row.users,
            table_rows: row.table_rows,
            mean_response_ms: 0.0,
            queries: 0,
        };
        let (pool, cache) = model
            .estimate_sizes(&snap, &sim.pool_ladder_mb, &sim.buffer_ladder_mb)
            .map_err(|e| e.to_string())?;
        worst_cache = worst_cache.max(rung_distance(&sim.buffer_ladder_mb, cache, row.cache_mb));
        worst_pool = worst_pool.max(rung_distance(&sim.pool_ladder_mb, pool, row.pool_mb));
    }
    let detail = format!(
        "epochs {}, final mse {mse:.5} (limit 0.05), worst rung error cache {worst_cache} pool {worst_pool} (limit 1)",
        trace.len()
    );
    if trace.len() == 100 && mse <= 0.05 && worst_cache <= 1 && worst_pool <= 1 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn harmonic(n: u64) -> f64 {
    (1..=n).rev().map(|i| 1.0 / i as f64).sum()
}

/// 3. LRU buffer cache under Zipf(1) against the top-C harmonic-sum oracle.
#[allow(clippy::approx_constant)]
fn cache_model_fidelity() -> Check {
    const ACCESSES: usize = 100_000;
    const BLOCKS: u64 = 1000;
    const CACHE: usize = 100;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut cache = LruSet::new(CACHE);
    let misses = (0..ACCESSES)
        .filter(|_| !cache.access(zipf_sample(&mut rng, BLOCKS, 1.0)))
        .count();
    let empirical = misses as f64 / ACCESSES as f64;
    let oracle_hit = harmonic(100) / harmonic(1000);
    let expected = 1.0 - 0.6931;
    let detail = format!(
        "empirical LRU miss {empirical:.4}, expected {expected:.4} ± 0.02 (harmonic oracle hit {oracle_hit:.4})"
    );
    if (empirical - expected).abs() <= 0.02 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// 4. Mean response falls as the buffer cache grows.
fn buffer_sweep_shape() -> Check {
    let cfg = load("sweep.json");
    let rows = sweep_buffer(&cfg, &[4, 8, 16, 32, 64]).map_err(|e| e.to_string())?;
    let means: Vec<f64> = rows.iter().map(|r| r.mean_response_ms).collect();
    let stepwise = means.windows(2).all(|w| w[1] <= w[0] * 1.02);
    let overall = means.last().unwrap() < means.first().unwrap();
    let detail = format!(
        "means {:?}",
        means.iter().map(|m| format!("{m:.3}")).collect::<Vec<_>>()
    );
    if stepwise && overall {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// 5. Response rises sharply past 12 users at a fixed cache size.
fn user_knee() -> Check {
    let base = load("knee.json");
    let mut means = Vec::new();
    for users in [4u32, 8, 12, 16] {
        let mut cfg = base.clone();
        cfg.workload.user_schedule = vec![UserStep { tick: 0, users }];
        means.push(
            run_scenario(&cfg, None)
                .map_err(|e| e.to_string())?
                .summary
                .mean_response_ms,
        );
    }
    let ratio = means[3] / means[1];
    let detail = format!(
        "means at 4/8/12/16 users {:?}, 16-vs-8 ratio {ratio:.2} (limit >= 2)",
        means.iter().map(|m| format!("{m:.3}")).collect::<Vec<_>>()
    );
    if ratio >= 2.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

const GRID_ROWS: [u64; 4] = [65_536, 98_304, 131_072, 196_608];
const GRID_USERS: [u32; 4] = [4, 8, 12, 16];
const TARGET_MS: f64 = 15.0;

/// Characterize the closed-loop workload and train the estimator on it.
fn characterized_model(cfg: &ScenarioConfig) -> Result<NeuralModel, String> {
    let report = gen_training_data(
        cfg,
        &GenDataRequest {
            table_rows: GRID_ROWS.to_vec(),
            users: GRID_USERS.to_vec(),
            target_response_ms: TARGET_MS,
            ticks: Some(400),
        },
    )
    .map_err(|e| e.to_string())?;
    let mut model = NeuralModel::new(&cfg.net).map_err(|e| e.to_string())?;
    model
        .train(&report.set, &cfg.net)
        .map_err(|e| e.to_string())?;
    Ok(model)
}

struct ClosedLoop {
    config: ScenarioConfig,
    tuned: RunReport,
    untuned: RunReport,
    stress_config: ScenarioConfig,
    stress: RunReport,
}

fn closed_loop_runs() -> Result<ClosedLoop, String> {
    let config = load("closed_loop.json");
    let model = characterized_model(&config)?;
    let tuned = run_scenario(&config, Some(&model)).map_err(|e| e.to_string())?;
    let mut off = config.clone();
    off.tuning_enabled = false;
    let untuned = run_scenario(&off, None).map_err(|e| e.to_string())?;
    let stress_config = load("growth_stress.json");
    let stress = run_scenario(&stress_config, Some(&model)).map_err(|e| e.to_string())?;
    Ok(ClosedLoop {
        config,
        tuned,
        untuned,
        stress_config,
        stress,
    })
}

/// 6. Tuning after a 4 -> 16 user step lowers final-half response by >= 20%.
fn closed_loop_benefit(runs: &ClosedLoop) -> Check {
    let schedule = &runs.config.workload.user_schedule;
    assert_eq!(runs.config.initial_cache_mb, 4);
    assert_eq!(schedule.first().unwrap().users, 4);
    assert_eq!(schedule.last().unwrap().users, 16);
    assert_eq!(schedule.last().unwrap().tick, runs.config.total_ticks / 2);
    let tuned = runs.tuned.summary.final_half_mean_response_ms;
    let untuned = runs.untuned.summary.final_half_mean_response_ms;
    let reduction = 1.0 - tuned / untuned;
    let detail = format!(
        "final-half mean tuned {tuned:.3} ms vs untuned {untuned:.3} ms, reduction {:.1}% (limit >= 20%), cache {} -> {} MB",
        100.0 * reduction,
        runs.tuned.summary.initial_cache_mb,
        runs.tuned.summary.final_cache_mb
    );
    if reduction >= 0.20 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn check_log(config: &ScenarioConfig, report: &RunReport) -> Result<usize, String> {
    let cache_ladder = &config.sim.buffer_ladder_mb;
    let pool_ladder = &config.sim.pool_ladder_mb;
    let cooldown = u64::from(config.tuner.cooldown_windows);
    let mut last_change: Option<u64> = None;
    let mut changes = 0;
    for d in &report.decisions {
        for (size, ladder) in [
            (d.old_cache_mb, cache_ladder),
            (d.new_cache_mb, cache_ladder),
            (d.old_pool_mb, pool_ladder),
            (d.new_pool_mb, pool_ladder),
        ] {
            if !ladder.contains(size) {
                return Err(format!(
                    "window {}: {size} MB is off the ladder",
                    d.window_id
                ));
            }
        }
        if !d.changes_sizes() {
            continue;
        }
        changes += 1;
        let cache_step = rung_distance(cache_ladder, d.old_cache_mb, d.new_cache_mb);
        let pool_step = rung_distance(pool_ladder, d.old_pool_mb, d.new_pool_mb);
        if cache_step > 1 || pool_step > 1 {
            return Err(format!("window {}: moved more than one rung", d.window_id));
        }
        let (est_pool, est_cache) = report.windows[d.window_id as usize - 1]
            .estimate
            .ok_or("change without an estimate")?;
        if rung_distance(cache_ladder, d.new_cache_mb, est_cache)
            > rung_distance(cache_ladder, d.old_cache_mb, est_cache)
            || rung_distance(pool_ladder, d.new_pool_mb, est_pool)
                > rung_distance(pool_ladder, d.old_pool_mb, est_pool)
        {
            return Err(format!(
                "window {}: moved away from the estimate",
                d.window_id
            ));
        }
        if let Some(prev) = last_change {
            if d.window_id - prev <= cooldown {
                return Err(format!(
                    "changes at windows {prev} and {} violate cooldown {cooldown}",
                    d.window_id
                ));
            }
        }
        last_change = Some(d.window_id);
    }
    for w in &report.windows {
        if !cache_ladder.contains(w.cache_mb) || !pool_ladder.contains(w.pool_mb) {
            return Err(format!(
                "window {} runs off-ladder sizes",
                w.snapshot.window_id
            ));
        }
    }
    let replayed = replay(
        (config.initial_pool_mb, config.initial_cache_mb),
        &report.decisions,
    )
    .map_err(|e| e.to_string())?;
    let actual = (report.summary.final_pool_mb, report.summary.final_cache_mb);
    if replayed != actual {
        return Err(format!(
            "replay gives {replayed:?}, run ended at {actual:?}"
        ));
    }
    Ok(changes)
}

/// 7. Invariants of the closed-loop decision logs.
fn tuner_invariants(runs: &ClosedLoop) -> Check {
    let a = check_log(&runs.config, &runs.tuned)?;
    let b = check_log(&runs.stress_config, &runs.stress)?;
    if a == 0 || b < 2 {
        return Err(format!("expected changes in both logs, got {a} and {b}"));
    }
    Ok(format!(
        "closed-loop log: {} decisions, {a} changes; growth log: {} decisions, {b} changes",
        runs.tuned.decisions.len(),
        runs.stress.decisions.len()
    ))
}

fn dbtune(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_dbtune"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "dbtune {args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

fn all_subcommands(dir: &Path) -> Result<(), String> {
    let cfg = configs();
    let s = |p: PathBuf| p.to_string_lossy().into_owned();
    let closed = s(cfg.join("closed_loop.json"));
    let d = |name: &str| s(dir.join(name));
    dbtune(&["train", "--out", &d("table1")])?;
    dbtune(&[
        "gen-data",
        "--config",
        &closed,
        "--out",
        &d("gen"),
        "--table-rows",
        "65536,131072",
        "--users",
        "4,16",
        "--target-ms",
        "15",
        "--ticks",
        "400",
    ])?;
    dbtune(&[
        "train",
        "--data",
        &d("gen/training_data.csv"),
        "--out",
        &d("model"),
    ])?;
    dbtune(&[
        "run",
        "--config",
        &closed,
        "--model",
        &d("model/model.json"),
        "--out",
        &d("run"),
    ])?;
    dbtune(&[
        "run",
        "--config",
        &closed,
        "--no-tune",
        "--out",
        &d("run_off"),
    ])?;
    dbtune(&[
        "sweep",
        "--config",
        &s(cfg.join("sweep.json")),
        "--out",
        &d("sweep"),
        "--seed",
        "9",
    ])?;
    Ok(())
}

fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(files_under(&path));
        } else {
            out.push(path);
        }
    }
    out.sort();
    out
}

/// 8. Two executions of every subcommand produce identical files.
fn determinism() -> Check {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    all_subcommands(a.path())?;
    all_subcommands(b.path())?;
    let files = files_under(a.path());
    let mut compared = 0;
    for fa in &files {
        let rel = fa.strip_prefix(a.path()).unwrap();
        let ext = fa.extension().and_then(|e| e.to_str()).unwrap_or("");
        if ext != "csv" && ext != "json" {
            continue;
        }
        let fb = b.path().join(rel);
        let (x, y) = (
            std::fs::read(fa).map_err(|e| e.to_string())?,
            std::fs::read(&fb).map_err(|e| e.to_string())?,
        );
        if x != y {
            return Err(format!("{} differs between runs", rel.display()));
        }
        compared += 1;
    }
    if compared < 12 {
        return Err(format!("only {compared} artifacts produced"));
    }
    Ok(format!(
        "{compared} CSV/JSON artifacts byte-identical across two executions"
    ))
}

struct Outcome {
    pass: bool,
}

fn report(id: u32, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Check) -> Outcome {
    let start = Instant::now();
    let result = f();
    let elapsed = start.elapsed();
    let (mut pass, mut detail) = match result {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    if let Some(limit) = limit {
        if elapsed > limit {
            pass = false;
            detail.push_str(&format!("; runtime {elapsed:.2?} exceeds {limit:?}"));
        }
    }
    println!(
        "[{}] AC{id} {name} ({elapsed:.2?}): {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    Outcome { pass }
}

fn main() {
    let secs = Duration::from_secs;
    let mut outcomes = vec![
        report(
            1,
            "gradient correctness",
            Some(secs(5)),
            gradient_correctness,
        ),
        report(2, "Table I training", Some(secs(10)), table_one_training),
        report(
            3,
            "cache model fidelity",
            Some(secs(5)),
            cache_model_fidelity,
        ),
        report(4, "buffer sweep shape", Some(secs(30)), buffer_sweep_shape),
        report(5, "user-count knee", Some(secs(30)), user_knee),
    ];

    let start = Instant::now();
    let runs = closed_loop_runs();
    let setup = start.elapsed();
    match &runs {
        Ok(runs) => {
            outcomes.push(report(
                6,
                "closed-loop benefit",
                Some(secs(60).saturating_sub(setup)),
                || closed_loop_benefit(runs),
            ));
            outcomes.push(report(7, "tuner invariants", None, || {
                tuner_invariants(runs)
            }));
        }
        Err(e) => {
            for (id, name) in [(6, "closed-loop benefit"), (7, "tuner invariants")] {
                outcomes.push(report(id, name, None, || Err(e.clone())));
            }
        }
    }
    outcomes.push(report(8, "determinism", None, determinism));

    let failed = outcomes.iter().filter(|o| !o.pass).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        outcomes.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
