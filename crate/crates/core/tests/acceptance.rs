//! Acceptance run. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! The two simulation experiments (exploit and epsilon-greedy on the planted
//! 200 x 500 x 10 world, 10 runs x 30 iterations) are shared between the
//! criteria that read them.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use discovery_loop::cli::commands::{load_data, ranking_reports};
use discovery_loop::cli::config::{Config, Source};
use discovery_loop::cli::manifest::RunManifest;
use discovery_loop::cli::report::aggregate;
use discovery_loop::completion::percentile_rescale;
use discovery_loop::dataset::GroupMapping;
use discovery_loop::factorization::{observation_gradient, observation_loss, Hyperparams};
use discovery_loop::metrics::{azuma_bound, corollary2_check, BoundParams, CorollaryCheck};
use discovery_loop::policies::{oracle_ranking, PolicyConfig, PolicyKind};
use discovery_loop::seed;
use discovery_loop::simulation::{run_simulation_observed, Observer, SimulationConfig, SimulationTrace, StepEvent};
use discovery_loop::stats::{ranking_assumption_test, welch_t_test};
use discovery_loop::synthetic::{planted_signal_model, planted_world, PlantedParams, PlantedWorld};
use discovery_loop::{GroupId, ItemId};

const REC_LEN: usize = 10;
const ITERATIONS: usize = 30;
const RUNS: usize = 10;

struct Outcome {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(id: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { id, pass, detail }
}

fn experiment_hyperparams() -> Hyperparams {
    Hyperparams {
        learning_rate: 0.01,
        latent_dim: 10,
        l2_coeff: 0.01,
        epochs: 40,
        seed: 0,
    }
}

fn experiment_config(kind: PolicyKind, epsilon: f64) -> SimulationConfig {
    SimulationConfig {
        iterations: ITERATIONS,
        runs: RUNS,
        policy: PolicyConfig {
            kind,
            rec_len: REC_LEN,
            epsilon,
            ..PolicyConfig::default()
        },
        hyperparams: experiment_hyperparams(),
        master_seed: 2024,
        ..SimulationConfig::default()
    }
}

/// Filtration and increment checks over every (user, iteration) pair.
#[derive(Default)]
struct InvariantObserver {
    pairs: AtomicUsize,
    not_nested: AtomicUsize,
    bad_increment: AtomicUsize,
}

impl Observer for InvariantObserver {
    fn on_step(&self, e: &StepEvent<'_>) {
        self.pairs.fetch_add(1, Ordering::Relaxed);
        if !e.seen_before.is_subset(e.seen_after) {
            self.not_nested.fetch_add(1, Ordering::Relaxed);
        }
        let inc = e.seen_after.len() as isize - e.seen_before.len() as isize;
        if !(0..=REC_LEN as isize).contains(&inc) {
            self.bad_increment.fetch_add(1, Ordering::Relaxed);
        }
    }
}

struct Experiment {
    trace: SimulationTrace,
    observer: InvariantObserver,
    seconds: f64,
}

fn run_experiment(world: &PlantedWorld, config: &SimulationConfig) -> Experiment {
    let start = Instant::now();
    let observer = InvariantObserver::default();
    let trace = run_simulation_observed(config, &world.dataset, &world.mapping, &world.truth, &observer)
        .expect("simulation runs");
    Experiment {
        trace,
        observer,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn final_discovery(trace: &SimulationTrace) -> Vec<f64> {
    trace
        .table
        .rows
        .iter()
        .filter(|r| r.iteration == ITERATIONS)
        .map(|r| r.avg_discovery)
        .collect()
}

fn final_blind(trace: &SimulationTrace) -> f64 {
    let rows: Vec<f64> = trace
        .table
        .rows
        .iter()
        .filter(|r| r.iteration == ITERATIONS)
        .map(|r| r.blind_spot)
        .collect();
    rows.iter().sum::<f64>() / rows.len() as f64
}

fn bound_05() -> f64 {
    azuma_bound(&BoundParams {
        delta: 0.05,
        rec_len: REC_LEN,
        n: ITERATIONS,
    })
    .unwrap()
}

fn criterion_1(exploit: &Experiment) -> Outcome {
    let bound = bound_05();
    let finals = final_discovery(&exploit.trace);
    let within = finals.iter().filter(|&&d| d <= bound).count();
    let max = finals.iter().cloned().fold(f64::MIN, f64::max);
    outcome(
        "1 discovery bound (exploit)",
        finals.len() == RUNS && within >= 9,
        format!(
            "{within}/{} runs with final avg discovery <= {bound:.4} (max {max:.4}, {:.1}s)",
            finals.len(),
            exploit.seconds
        ),
    )
}

fn criterion_1_report(exploit: &Experiment) -> Outcome {
    let agg = aggregate(&[("exploit".into(), exploit.trace.table.clone())]).unwrap();
    let v = agg.violations.iter().find(|v| v.delta == 0.05).expect("delta 0.05 column");
    outcome(
        "1r report violation fraction",
        v.fraction() <= 0.05,
        format!(
            "{}/{} final-quarter points above the delta=0.05 bound (fraction {:.4})",
            v.violations,
            v.checked,
            v.fraction()
        ),
    )
}

fn criterion_2(exploit: &Experiment) -> Outcome {
    let mut mean = vec![0.0; ITERATIONS];
    for r in &exploit.trace.table.rows {
        mean[r.iteration - 1] += r.avg_discovery / RUNS as f64;
    }
    let tail = &mean[ITERATIONS - 20..];
    let worst_rise = tail.windows(2).map(|w| w[1] - w[0]).fold(f64::MIN, f64::max);
    outcome(
        "2 discovery decay",
        worst_rise <= 0.05,
        format!(
            "largest rise over iterations {}..{} is {worst_rise:.4} (mean goes {:.4} -> {:.4})",
            ITERATIONS - 19,
            ITERATIONS,
            tail[0],
            tail[19]
        ),
    )
}

/// A random instance with |S| > n and at least n candidates confined to S.
fn oracle_instance<R: Rng>(rng: &mut R) -> (GroupMapping, Vec<GroupId>, usize) {
    let g = rng.random_range(2..=20usize);
    let n = rng.random_range(1..g);
    let k = rng.random_range(n + 1..=g);
    let items = rng.random_range(n..=100usize);
    let confined = rng.random_range(n..=items);
    let mut perm: Vec<u32> = (0..g as u32).collect();
    perm.shuffle(rng);
    let seen: Vec<GroupId> = perm[..k].iter().map(|&x| GroupId(x)).collect();
    let membership = (0..items)
        .map(|i| {
            let pool: &[u32] = if i < confined { &perm[..k] } else { &perm };
            let size = rng.random_range(1..=3.min(pool.len()));
            let mut gs: Vec<GroupId> = pool.choose_multiple(rng, size).map(|&x| GroupId(x)).collect();
            gs.sort();
            gs
        })
        .collect::<Vec<_>>();
    let mut order: Vec<usize> = (0..items).collect();
    order.shuffle(rng);
    let membership = order.iter().map(|&i| membership[i].clone()).collect();
    let names = (0..g).map(|k| format!("g{k}")).collect();
    (GroupMapping::new(names, membership).unwrap(), seen, n)
}

fn criterion_3() -> Outcome {
    let mut rng = seed::rng(0x1e33a);
    let (mut violations, mut order_errors) = (0, 0);
    for _ in 0..1000 {
        let (m, seen_list, n) = oracle_instance(&mut rng);
        let seen_set = seen_list.iter().copied().collect();
        let in_seen = |item: usize| m.groups_of(ItemId::new(item)).iter().all(|g| seen_list.contains(g));
        let candidates: Vec<ItemId> = (0..m.num_items()).map(ItemId::new).collect();
        let ranking = oracle_ranking(&m, &seen_set, &candidates, &mut rng).unwrap();
        let mut scored: Vec<(usize, f64)> = ranking.entries().iter().map(|(i, s)| (i.index(), *s)).collect();
        for &(a, sa) in &scored {
            for &(b, sb) in &scored {
                if in_seen(a) && !in_seen(b) && sa <= sb {
                    order_errors += 1;
                }
            }
        }
        scored.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
        let mut introduced = BTreeSet::new();
        for &(item, _) in &scored[..n] {
            for g in m.groups_of(ItemId::new(item)) {
                if !seen_list.contains(g) {
                    introduced.insert(*g);
                }
            }
        }
        if !introduced.is_empty() {
            violations += 1;
        }
    }
    outcome(
        "3 oracle ranking introduces no groups",
        violations == 0 && order_errors == 0,
        format!("1000 instances, {violations} with new groups, {order_errors} oracle order errors"),
    )
}

fn criterion_4(experiments: &[&Experiment]) -> Outcome {
    let (mut pairs, mut nested, mut inc) = (0, 0, 0);
    let mut expected = 0;
    for e in experiments {
        pairs += e.observer.pairs.load(Ordering::Relaxed);
        nested += e.observer.not_nested.load(Ordering::Relaxed);
        inc += e.observer.bad_increment.load(Ordering::Relaxed);
        expected += RUNS * ITERATIONS * e.trace.runs[0].series.seen.len();
    }
    outcome(
        "4 filtration and increments",
        pairs == expected && nested == 0 && inc == 0,
        format!("{pairs} (user, iteration) pairs, {nested} not nested, {inc} increments outside [0, {REC_LEN}]"),
    )
}

fn criterion_5(exploit: &Experiment) -> Outcome {
    let (mut holds, mut violated, mut skipped) = (0, 0, 0);
    for run in &exploit.trace.runs {
        let s = &run.series;
        for u in 0..s.seen.len() {
            let f = |v: &Vec<usize>| v.iter().map(|&x| x as f64).collect::<Vec<_>>();
            match corollary2_check(&f(&s.seen[u]), &f(&s.blind[u]), &f(&s.error[u]), 0.0).unwrap() {
                CorollaryCheck::Holds => holds += 1,
                CorollaryCheck::Violated { .. } => violated += 1,
                CorollaryCheck::PremiseViolated { .. } => skipped += 1,
            }
        }
    }
    outcome(
        "5 blind-spot decrease inequality",
        violated == 0 && holds > 0,
        format!("{holds} user series hold, {violated} violate, {skipped} skipped (e increases)"),
    )
}

fn criterion_6a() -> Outcome {
    let start = Instant::now();
    let config = Config {
        source: Source::Synthetic(PlantedParams::default()),
        simulation: SimulationConfig {
            hyperparams: experiment_hyperparams(),
            master_seed: 6,
            ..SimulationConfig::default()
        },
        sample_users: 100,
        repetitions: 10,
        ..Config::default()
    };
    let data = load_data(&config).unwrap();
    let reports = ranking_reports(&config, &data).unwrap();
    let ok = reports
        .iter()
        .filter(|r| r.mean_seen > r.mean_unseen && r.p_value < 0.01)
        .count();
    let worst_p = reports.iter().map(|r| r.p_value).fold(0.0, f64::max);

    // the directly planted model, factors of seen-group items scaled by 1.2
    let planted_ok = (0..10u64)
        .filter(|&s| {
            let (model, ds, mapping) = planted_signal_model(200, 500, 10, 5, 1.2, s).unwrap();
            let mut rng = seed::rng(seed::derive(s, 1));
            let r = ranking_assumption_test(&model, &ds, &mapping, 100, &mut rng).unwrap();
            r.mean_seen > r.mean_unseen && r.p_value < 0.01
        })
        .count();
    let seconds = start.elapsed().as_secs_f64();
    outcome(
        "6a ranking test on planted data",
        ok >= 9 && planted_ok >= 9 && seconds <= 120.0,
        format!(
            "trained: {ok}/10 repetitions seen > unseen with p < 0.01 (worst p {worst_p:.2e}); \
             planted factors: {planted_ok}/10; {seconds:.1}s"
        ),
    )
}

fn criterion_6b() -> Option<Outcome> {
    let dir = PathBuf::from(std::env::var_os("ML1M_DIR")?);
    let config = Config {
        source: Source::MovieLens {
            ratings: dir.join("ratings.dat"),
            movies: dir.join("movies.dat"),
        },
        repetitions: 1,
        ..Config::default()
    };
    let data = load_data(&config).unwrap();
    let r = &ranking_reports(&config, &data).unwrap()[0];
    Some(outcome(
        "6b ranking test on MovieLens 1M",
        r.mean_seen > r.mean_unseen && r.p_value < 0.01,
        format!("mean_seen {:.4} mean_unseen {:.4} p {:.3e}", r.mean_seen, r.mean_unseen, r.p_value),
    ))
}

fn criterion_7(exploit: &Experiment, greedy: &Experiment) -> Outcome {
    let (b0, b2) = (final_blind(&exploit.trace), final_blind(&greedy.trace));
    let bound = bound_05();
    let within = final_discovery(&greedy.trace).iter().filter(|&&d| d <= bound).count();
    outcome(
        "7 epsilon-greedy shrinks the blind spot",
        b2 < b0 && within >= 9,
        format!(
            "mean |B_{ITERATIONS}| {b2:.4} (eps 0.2) vs {b0:.4} (eps 0); {within}/{RUNS} eps runs within bound ({:.1}s)",
            greedy.seconds
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = seed::rng(8);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let triples = 25;
    for _ in 0..triples {
        let dim = rng.random_range(1..=10);
        let p: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let q: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r = rng.random_range(1..=5) as f64;
        let l2 = rng.random_range(0.0..0.1);
        let (mut gp, mut gq) = (vec![0.0; dim], vec![0.0; dim]);
        observation_gradient(&p, &q, r, l2, &mut gp, &mut gq);
        for k in 0..dim {
            let mut pp = p.clone();
            let mut pm = p.clone();
            pp[k] += h;
            pm[k] -= h;
            let np = (observation_loss(&pp, &q, r, l2) - observation_loss(&pm, &q, r, l2)) / (2.0 * h);
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[k] += h;
            qm[k] -= h;
            let nq = (observation_loss(&p, &qp, r, l2) - observation_loss(&p, &qm, r, l2)) / (2.0 * h);
            for (a, n) in [(gp[k], np), (gq[k], nq)] {
                worst = worst.max((a - n).abs() / a.abs().max(n.abs()).max(1e-8));
            }
        }
    }
    let w = welch_t_test(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
    let welch_ok = (w.t_stat + 3.674).abs() < 1e-3 && (w.p_value - 0.0214).abs() < 1e-3;
    let b = azuma_bound(&BoundParams {
        delta: 0.05,
        rec_len: 10,
        n: 100,
    })
    .unwrap();
    let bound_ok = (b - 1.49787).abs() < 1e-5;
    outcome(
        "8 numerical kernels",
        worst < 1e-4 && welch_ok && bound_ok,
        format!(
            "gradient worst rel err {worst:.2e} over {triples} triples; welch t {:.4} p {:.4}; bound {b:.6}",
            w.t_stat, w.p_value
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut rng = seed::rng(9);
    let mut equal_classes = true;
    for _ in 0..100 {
        let mut row: Vec<f64> = (0..100).map(|k| k as f64 * 0.37 - 11.0).collect();
        row.shuffle(&mut rng);
        let c = percentile_rescale(&row).unwrap();
        equal_classes &= (1..=5u8).all(|k| c.iter().filter(|&&x| x == k).count() == 20);
    }
    let (mut monotone, mut invariant) = (0, 0);
    for _ in 0..1000 {
        let len = rng.random_range(1..=60);
        let row: Vec<f64> = (0..len).map(|_| rng.random_range(0..20) as f64).collect();
        let c = percentile_rescale(&row).unwrap();
        let ok = (0..len).all(|i| {
            (0..len).all(|j| row[i] >= row[j] || c[i] <= c[j]) && (0..len).all(|j| row[i] != row[j] || c[i] == c[j])
        });
        monotone += ok as usize;
        let moved: Vec<f64> = row.iter().map(|x| x * x * x + x + 5.0).collect();
        invariant += (percentile_rescale(&moved).unwrap() == c) as usize;
    }
    outcome(
        "9 percentile rescaling",
        equal_classes && monotone == 1000 && invariant == 1000,
        format!(
            "20 per class on distinct rows: {equal_classes}; monotone {monotone}/1000; rank invariant {invariant}/1000"
        ),
    )
}

fn cli(args: &[&str]) {
    let o = Command::new(env!("CARGO_BIN_EXE_discovery-loop"))
        .args(args)
        .output()
        .expect("spawn binary");
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

fn outputs_match(a: &Path, b: &Path) -> Result<usize, String> {
    let mut compared = 0;
    for entry in fs::read_dir(a).unwrap() {
        let name = entry.unwrap().file_name();
        let (x, y) = (a.join(&name), b.join(&name));
        if name == "manifest.json" {
            let (mut mx, mut my) = (RunManifest::read(&x).unwrap(), RunManifest::read(&y).unwrap());
            mx.duration_seconds = 0.0;
            my.duration_seconds = 0.0;
            mx.outputs.iter_mut().chain(my.outputs.iter_mut()).for_each(|d| d.path = d.path.file_name().unwrap().into());
            if mx != my {
                return Err(format!("{} differs", x.display()));
            }
        } else if fs::read(&x).unwrap() != fs::read(&y).unwrap() {
            return Err(format!("{} differs", x.display()));
        }
        compared += 1;
    }
    Ok(compared)
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let s = |p: &Path| p.to_str().unwrap().to_string();
    let cfg = d.join("run.conf");
    fs::write(
        &cfg,
        "source = synthetic\nsynthetic.users = 40\nsynthetic.items = 120\nsynthetic.groups = 6\n\
         synthetic.history = 8\nsynthetic.niche_groups = 1\niterations = 5\nruns = 3\nrec_len = 5\n\
         policy = epsilon_greedy\nepsilon = 0.2\nfeedback = rank_dependent\ntheta = 0.8\n\
         learning_rate = 0.01\nepochs = 10\nseed = 10\nsample_users = 20\nrepetitions = 3\n",
    )
    .unwrap();
    let mut results = Vec::new();
    for cmd in ["complete", "simulate", "validate-ranking"] {
        let (a, b) = (d.join(format!("{cmd}-a")), d.join(format!("{cmd}-b")));
        cli(&[cmd, "--config", &s(&cfg), "--out", &s(&a)]);
        cli(&[cmd, "--manifest", &s(&a.join("manifest.json")), "--out", &s(&b)]);
        results.push((cmd, outputs_match(&a, &b)));
    }
    let trace = d.join("simulate-a").join("trace.csv");
    let (a, b) = (d.join("report-a"), d.join("report-b"));
    cli(&["report", &s(&trace), "--out", &s(&a)]);
    cli(&["report", "--manifest", &s(&a.join("manifest.json")), "--out", &s(&b)]);
    results.push(("report", outputs_match(&a, &b)));
    let pass = results.iter().all(|(_, r)| r.is_ok());
    let detail = results
        .iter()
        .map(|(c, r)| match r {
            Ok(n) => format!("{c}: {n} files identical"),
            Err(e) => format!("{c}: {e}"),
        })
        .collect::<Vec<_>>()
        .join("; ");
    outcome("10 manifest reruns", pass, detail)
}

fn main() {
    let start = Instant::now();
    let world = planted_world(&PlantedParams::default()).unwrap();
    let exploit = run_experiment(&world, &experiment_config(PolicyKind::Exploit, 0.0));
    let greedy = run_experiment(&world, &experiment_config(PolicyKind::EpsilonGreedy, 0.2));

    let mut outcomes = vec![
        criterion_1(&exploit),
        criterion_1_report(&exploit),
        criterion_2(&exploit),
        criterion_3(),
        criterion_4(&[&exploit, &greedy]),
        criterion_5(&exploit),
        criterion_6a(),
    ];
    match criterion_6b() {
        Some(o) => outcomes.push(o),
        None => println!("SKIP 6b ranking test on MovieLens 1M: set ML1M_DIR to run"),
    }
    outcomes.extend([criterion_7(&exploit, &greedy), criterion_8(), criterion_9(), criterion_10()]);

    let mut failed = 0;
    for o in &outcomes {
        println!("{} {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.id, o.detail);
        failed += !o.pass as usize;
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        outcomes.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
