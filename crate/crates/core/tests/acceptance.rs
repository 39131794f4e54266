//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use chainflow::ergodicity::{ergodicity_verdict_with, VerdictOptions};
use chainflow::random;
use chainflow::{
    birkhoff_decompose, build_zero_flow_graph, decompose_chain, ergodicity_verdict,
    has_absolute_infinite_flow, has_infinite_flow, infinite_flow_graph, is_cycle_free,
    limit_up_to_permutation, lyapunov, lyapunov_decrease_identity_check, max_mixing_permutation,
    rate_certificate, rotate_chain, rotated_product_identity_check, set_flow, simulate,
    stability_verdict, step_flow, total_flow, trajectory, Chain, Collection, CollectionFlavor,
    Flavor, IndexSet, PermChain, Permutation, Settings, Stability, Status, StochMatrix,
};
use rand::Rng;

type Check = Result<String, String>;
/// Title, time limit in seconds, and the check itself.
type Criterion = (&'static str, f64, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn settings() -> Settings {
    Settings::default()
}

fn mat(rows: &[&[f64]]) -> StochMatrix {
    let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
    StochMatrix::from_rows(&rows, 1e-9).unwrap()
}

fn constant(a: StochMatrix, flavor: Flavor) -> Chain {
    Chain::constant(a, flavor, &settings()).unwrap()
}

fn trellis() -> StochMatrix {
    mat(&[&[0.25, 0.75], &[0.75, 0.25]])
}

fn swap() -> StochMatrix {
    mat(&[&[0.0, 1.0], &[1.0, 0.0]])
}

fn fixed_point_matrix() -> StochMatrix {
    let third = 1.0 / 3.0;
    mat(&[&[1.0, 0.0, 0.0], &[third, third, third], &[0.0, 0.0, 1.0]])
}

fn err<E: std::fmt::Debug>(e: E) -> String {
    format!("{e:?}")
}

fn criterion_1() -> Check {
    let dir = tempfile::tempdir().map_err(err)?;
    let input = dir.path().join("chain.json");
    std::fs::write(
        &input,
        r#"{"dim": 2, "flavor": "doubly_stochastic", "cycle": [[[0.25, 0.75], [0.75, 0.25]]]}"#,
    )
    .map_err(err)?;
    let out = Command::new(env!("CARGO_BIN_EXE_chainflow"))
        .args(["analyze", "--input"])
        .arg(&input)
        .output()
        .map_err(err)?;
    ensure(out.status.success(), || format!("analyze exited with {}", out.status))?;
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(err)?;
    ensure(report["ergodic"] == true, || format!("ergodic = {}", report["ergodic"]))?;
    ensure(report["gamma"] == 0.75, || format!("gamma = {}", report["gamma"]))?;

    let chain = constant(trellis(), Flavor::DoublyStochastic);
    let prod = chain.backward_product(40, 0).map_err(err)?;
    let spread = prod.row_spread();
    ensure(spread < 1e-10, || format!("row spread {spread:e} at k = 40"))?;
    let limit_err = prod.as_slice().iter().map(|v| (v - 0.5).abs()).fold(0.0, f64::max);
    ensure(limit_err < 1e-10, || format!("limit rows off by {limit_err:e}"))?;
    Ok(format!("ergodic, gamma 0.75, spread {spread:.1e}, limit error {limit_err:.1e}"))
}

fn criterion_2() -> Check {
    let s = settings();
    let chain = constant(swap(), Flavor::DoublyStochastic);
    ensure(has_infinite_flow(&chain, &s).map_err(err)?.holds, || "infinite flow fails".into())?;
    let abs = has_absolute_infinite_flow(&chain, &s).map_err(err)?;
    ensure(!abs.holds, || "absolute infinite flow holds".into())?;
    let w = abs.witness.ok_or("no witness")?;
    for k in 0..8 {
        ensure(w.at(k) != w.at(k + 1) && w.at(k) == w.at(k + 2), || {
            format!("witness does not alternate at k = {k}")
        })?;
    }
    let report = total_flow(&chain, &w, &s).map_err(err)?;
    ensure(
        !report.total_is_infinite && report.finite_value == Some(0.0) && report.witness.period_flow == 0.0,
        || format!("total flow on witness: {report:?}"),
    )?;
    let v = ergodicity_verdict(&chain, &s).map_err(err)?;
    ensure(v.status == Status::NotErgodic, || format!("verdict {:?}", v.status))?;
    Ok(format!("witness {}, {}, ... carries flow 0; not ergodic", w.at(0), w.at(1)))
}

fn criterion_3() -> Check {
    let s = settings();
    let chain = constant(fixed_point_matrix(), Flavor::Stochastic);
    let abs = has_absolute_infinite_flow(&chain, &s).map_err(err)?;
    ensure(abs.holds, || "absolute infinite flow fails".into())?;
    let v = ergodicity_verdict(&chain, &s).map_err(err)?;
    ensure(v.status == Status::Undecided, || format!("verdict {:?}", v.status))?;
    let x0 = [1.0, 0.5, 0.0];
    let xs = simulate(&chain, &x0, 10_000).map_err(err)?;
    let drift = xs
        .iter()
        .flat_map(|x| x.iter().zip(&x0).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    ensure(drift <= 4.0 * f64::EPSILON, || format!("trajectory drifts by {drift:e}"))?;
    Ok(format!("absolute flow holds, undecided, drift {drift:e} over 10^4 steps"))
}

fn criterion_4() -> Check {
    let chain = constant(mat(&[&[1.0, 0.0], &[1.0, 0.0]]), Flavor::Stochastic);
    ensure(decompose_chain(&chain, &settings()).is_none(), || "decomposition found".into())?;
    Ok("no permutation component".into())
}

fn factorial(m: usize) -> f64 {
    (1..=m).map(|v| v as f64).product()
}

fn criterion_5() -> Check {
    let s = settings();
    let mut rng = random::rng(0);
    let mut worst_err: f64 = 0.0;
    let mut max_terms_ratio: f64 = 0.0;
    for trial in 0..500 {
        let m = rng.gen_range(3..=8);
        let a = random::doubly_stochastic(&mut rng, m);
        let d = birkhoff_decompose(&a, &s).map_err(err)?;
        let recon = d.reconstruct(m);
        let e = recon.iter().zip(a.as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        worst_err = worst_err.max(e);
        ensure(e <= 1e-10, || format!("trial {trial}: reconstruction error {e:e}"))?;
        let ws = d.weight_sum();
        ensure((ws - 1.0).abs() <= 1e-10, || format!("trial {trial}: weight sum {ws}"))?;
        let bound = (m - 1) * (m - 1) + 1;
        ensure(d.terms.len() <= bound, || {
            format!("trial {trial}: {} terms exceeds {bound}", d.terms.len())
        })?;
        max_terms_ratio = max_terms_ratio.max(d.terms.len() as f64 / bound as f64);
        let (gamma, _) = max_mixing_permutation(&a, &s).ok_or("no bottleneck permutation")?;
        ensure(gamma >= 1.0 / factorial(m), || format!("trial {trial}: gamma {gamma:e}"))?;
    }
    Ok(format!(
        "500 matrices, worst reconstruction {worst_err:.1e}, max terms/bound {max_terms_ratio:.2}"
    ))
}

fn criterion_6() -> Check {
    let s = settings();
    let mut rng = random::rng(6);
    let options = VerdictOptions {
        spread_exponent: 10,
        ..VerdictOptions::default()
    };
    let (mut ergodic, mut not_ergodic, mut undecided) = (0, 0, 0);
    for trial in 0..200 {
        let m = rng.gen_range(3..=6);
        let flavor = if trial % 2 == 0 { Flavor::DoublyStochastic } else { Flavor::Stochastic };
        let chain = random::chain(&mut rng, m, 2, 3, flavor);
        let pchain = random::perm_chain(&mut rng, m, 2, 3);
        let rotated = rotate_chain(&chain, &pchain, &s).map_err(err)?;

        for k in 1..=12 {
            for start in 0..k {
                let ok = rotated_product_identity_check(&chain, &pchain, k, start, &s).map_err(err)?;
                ensure(ok, || format!("trial {trial}: product identity fails at ({k}, {start})"))?;
            }
        }

        let mut sets: Vec<IndexSet> = (0..m).map(|i| IndexSet::from_indices(m, &[i]).unwrap()).collect();
        for _ in 0..4 {
            let mask = rng.gen_range(1..(1u32 << m) - 1);
            sets.push(IndexSet::from_mask(m, mask).unwrap());
        }
        for s0 in &sets {
            let traj = trajectory(&pchain, s0).map_err(err)?;
            for k in 0..12 {
                let lhs = step_flow(chain.matrix_at(k), &traj.at(k + 1), &traj.at(k)).map_err(err)?;
                let rhs = set_flow(rotated.matrix_at(k), s0).map_err(err)?;
                ensure((lhs - rhs).abs() <= 1e-12, || {
                    format!("trial {trial}: flow mismatch {lhs} vs {rhs} for {s0} at k = {k}")
                })?;
            }
        }

        let abs_a = has_absolute_infinite_flow(&chain, &s).map_err(err)?.holds;
        let abs_b = has_absolute_infinite_flow(&rotated, &s).map_err(err)?.holds;
        ensure(abs_a == abs_b, || format!("trial {trial}: absolute flow {abs_a} vs {abs_b}"))?;
        let va = ergodicity_verdict_with(&chain, &s, &options).map_err(err)?.status;
        let vb = ergodicity_verdict_with(&rotated, &s, &options).map_err(err)?.status;
        ensure(va == vb, || format!("trial {trial}: verdict {va:?} vs {vb:?}"))?;
        match va {
            Status::Ergodic => ergodic += 1,
            Status::NotErgodic => not_ergodic += 1,
            Status::Undecided => undecided += 1,
        }
    }
    Ok(format!(
        "200 pairs; verdicts agree ({ergodic} ergodic, {not_ergodic} not ergodic, {undecided} undecided)"
    ))
}

fn criterion_7() -> Check {
    let s = settings();
    let mut rng = random::rng(7);
    let mut worst: f64 = 0.0;
    for trial in 0..200 {
        let m = rng.gen_range(2..=6);
        let flavor = if trial % 2 == 0 { Flavor::DoublyStochastic } else { Flavor::Stochastic };
        let chain = random::chain(&mut rng, m, 2, 3, flavor);
        let pchain = random::perm_chain(&mut rng, m, 2, 3);
        let rotated = rotate_chain(&chain, &pchain, &s).map_err(err)?;
        let x0 = random::vector(&mut rng, m);
        let xs = simulate(&chain, &x0, 30).map_err(err)?;
        let ys = simulate(&rotated, &x0, 30).map_err(err)?;
        for (k, (x, y)) in xs.iter().zip(&ys).enumerate() {
            let d = (lyapunov(x) - lyapunov(y)).abs();
            worst = worst.max(d);
            ensure(d <= 1e-10, || format!("trial {trial}: V differs by {d:e} at k = {k}"))?;
        }
    }
    for trial in 0..1000 {
        let m = rng.gen_range(2..=8);
        let a = random::doubly_stochastic(&mut rng, m);
        let x: Vec<f64> = random::vector(&mut rng, m).iter().map(|v| 10.0 * v).collect();
        ensure(lyapunov_decrease_identity_check(&a, &x), || {
            format!("trial {trial}: decrease identity fails")
        })?;
    }
    Ok(format!("rotation invariance worst gap {worst:.1e}; 1000 decrease identities hold"))
}

fn criterion_8() -> Check {
    let s = settings();
    let mut rng = random::rng(8);
    let mut chains = vec![(constant(trellis(), Flavor::DoublyStochastic), vec![1.0, 0.0])];
    while chains.len() < 101 {
        let m = rng.gen_range(2..=6);
        let chain = random::chain(&mut rng, m, 2, 3, Flavor::DoublyStochastic);
        if ergodicity_verdict(&chain, &s).map_err(err)?.status == Status::Ergodic {
            let x0 = random::vector(&mut rng, m);
            chains.push((chain, x0));
        }
    }
    let mut pairs = 0usize;
    let mut worst_ratio: f64 = 0.0;
    for (idx, (chain, x0)) in chains.iter().enumerate() {
        for delta in [1.0 / 3.0, 0.5] {
            let cert = rate_certificate(chain, x0, delta, 12, &s)
                .map_err(|e| format!("chain {idx}, delta {delta}: {e}"))?;
            for w in cert.trace.windows(2) {
                pairs += 1;
                let ok = w[1].v <= cert.contraction_factor * w[0].v + 1e-24 * (1.0 + x0.iter().map(|v| v * v).sum::<f64>());
                ensure(ok, || format!("chain {idx}, delta {delta}: V {} > bound {}", w[1].v, w[1].bound))?;
                if w[0].v > 1e-20 {
                    worst_ratio = worst_ratio.max(w[1].v / (cert.contraction_factor * w[0].v));
                }
            }
        }
    }
    Ok(format!(
        "101 chains x 2 deltas, {pairs} consecutive pairs, 0 violations, worst V/bound {worst_ratio:.3}"
    ))
}

fn criterion_9() -> Check {
    let s = settings();
    let ds = CollectionFlavor::DoublyStochastic;
    let mut no_witnesses = 0usize;
    let mut check_witness = |v: &chainflow::StabilityVerdict| -> Result<(), String> {
        if v.stable == Stability::No {
            let chain = v.witness_chain.as_ref().ok_or("no witness chain")?;
            let seq = v.witness_sequence.as_ref().ok_or("no witness sequence")?;
            let report = total_flow(chain, seq, &s).map_err(err)?;
            ensure(!report.total_is_infinite, || "witness carries infinite flow".into())?;
            no_witnesses += 1;
        }
        Ok(())
    };

    let swap_coll = Collection::new(vec![swap()], ds, &s).map_err(err)?;
    let v = stability_verdict(&swap_coll, &s).map_err(err)?;
    ensure(v.stable == Stability::No && v.cycle.as_ref().map(Vec::len) == Some(2), || {
        format!("swap collection: {:?} with cycle {:?}", v.stable, v.cycle)
    })?;
    check_witness(&v)?;

    for m in 2..=6 {
        let coll = Collection::new(vec![StochMatrix::uniform(m)], ds, &s).map_err(err)?;
        let v = stability_verdict(&coll, &s).map_err(err)?;
        ensure(v.stable == Stability::Yes, || format!("averaging m = {m}: {:?}", v.stable))?;
    }

    for m in 2..=5 {
        let coll = Collection::new(vec![StochMatrix::identity(m)], ds, &s).map_err(err)?;
        let g = build_zero_flow_graph(&coll, &s).map_err(err)?;
        for i in 0..m {
            let single = IndexSet::from_indices(m, &[i]).unwrap();
            ensure(g.has_edge(&single, &single), || format!("identity m = {m}: no loop at {single}"))?;
        }
        let v = stability_verdict(&coll, &s).map_err(err)?;
        ensure(v.stable == Stability::No, || format!("identity m = {m}: {:?}", v.stable))?;
        check_witness(&v)?;
    }

    let mut rng = random::rng(9);
    let (mut free, mut cyclic) = (0, 0);
    for trial in 0..200 {
        let m = rng.gen_range(2..=6);
        let terms = rng.gen_range(1..=m);
        let a = random::doubly_stochastic_with_terms(&mut rng, m, terms).into_inner();
        let coll = Collection::new(vec![a.clone()], ds, &s).map_err(err)?;
        let cycle_free = is_cycle_free(&build_zero_flow_graph(&coll, &s).map_err(err)?).cycle_free;
        let chain = constant(a, Flavor::DoublyStochastic);
        let abs = has_absolute_infinite_flow(&chain, &s).map_err(err)?.holds;
        ensure(cycle_free == abs, || format!("trial {trial}: cycle-free {cycle_free}, absolute flow {abs}"))?;
        if cycle_free {
            free += 1;
        } else {
            cyclic += 1;
        }
        check_witness(&stability_verdict(&coll, &s).map_err(err)?)?;
    }
    Ok(format!(
        "curated verdicts hold; bridge agrees on 200 ({free} cycle-free, {cyclic} cyclic); {no_witnesses} witnesses finite"
    ))
}

fn block_chain_a() -> Chain {
    let a = mat(&[
        &[0.5, 0.5, 0.0, 0.0],
        &[0.5, 0.5, 0.0, 0.0],
        &[0.0, 0.0, 0.6, 0.4],
        &[0.0, 0.0, 0.4, 0.6],
    ]);
    let b = mat(&[
        &[0.8, 0.2, 0.0, 0.0],
        &[0.2, 0.8, 0.0, 0.0],
        &[0.0, 0.0, 1.0, 0.0],
        &[0.0, 0.0, 0.0, 1.0],
    ]);
    Chain::new(Vec::new(), vec![a, b], Flavor::DoublyStochastic, &settings()).unwrap()
}

fn block_chain_b() -> Chain {
    let t = 1.0 / 3.0;
    let a = mat(&[
        &[0.5, 0.5, 0.0, 0.0, 0.0, 0.0],
        &[0.0, 0.5, 0.5, 0.0, 0.0, 0.0],
        &[0.5, 0.0, 0.5, 0.0, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 0.7, 0.3, 0.0],
        &[0.0, 0.0, 0.0, 0.3, 0.7, 0.0],
        &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
    ]);
    let b = mat(&[
        &[t, t, t, 0.0, 0.0, 0.0],
        &[t, t, t, 0.0, 0.0, 0.0],
        &[t, t, t, 0.0, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
    ]);
    let prefix = vec![StochMatrix::identity(6)];
    Chain::new(prefix, vec![a, b.clone(), b], Flavor::DoublyStochastic, &settings()).unwrap()
}

fn block_chain_rotated() -> Chain {
    let p = |map: Vec<usize>| Permutation::new(map).unwrap();
    let pchain = PermChain::new(
        vec![p(vec![4, 0, 1, 2, 3])],
        vec![p(vec![1, 2, 0, 4, 3]), p(vec![0, 1, 2, 3, 4]), p(vec![3, 4, 2, 0, 1])],
    )
    .unwrap();
    let a = mat(&[
        &[0.6, 0.4, 0.0, 0.0, 0.0],
        &[0.4, 0.3, 0.3, 0.0, 0.0],
        &[0.0, 0.3, 0.7, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 0.5, 0.5],
        &[0.0, 0.0, 0.0, 0.5, 0.5],
    ]);
    let base = Chain::constant(a, Flavor::DoublyStochastic, &settings()).unwrap();
    rotate_chain(&base, &pchain, &settings()).unwrap()
}

/// Groups rows whose pairwise distance is below `tol`.
fn empirical_clusters(a: &StochMatrix, tol: f64) -> Vec<Vec<usize>> {
    let m = a.dim();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..m {
        let close = |j: usize| -> bool {
            a.row(i).iter().zip(a.row(j)).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt() < tol
        };
        match clusters.iter_mut().find(|c| close(c[0])) {
            Some(c) => c.push(i),
            None => clusters.push(vec![i]),
        }
    }
    clusters
}

fn row_distance(a: &StochMatrix, i: usize, j: usize) -> f64 {
    a.row(i).iter().zip(a.row(j)).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn criterion_10() -> Check {
    let s = settings();
    let mut notes = Vec::new();
    for (name, chain) in [
        ("two blocks", block_chain_a()),
        ("three blocks", block_chain_b()),
        ("rotated blocks", block_chain_rotated()),
    ] {
        let pcomp = decompose_chain(&chain, &s).ok_or("not decomposable")?;
        let graph = infinite_flow_graph(&chain, &pcomp, &s).map_err(err)?;
        let est = limit_up_to_permutation(&chain, 0, 200, &s).map_err(err)?;
        let predicted: Vec<Vec<usize>> = graph.components.iter().map(IndexSet::indices).collect();
        let observed = empirical_clusters(&est.limit_estimate, 1e-8);
        ensure(predicted == observed, || {
            format!("{name}: components {predicted:?} vs row clusters {observed:?}")
        })?;
        let m = chain.dim();
        let mut within: f64 = 0.0;
        let mut across = f64::INFINITY;
        for i in 0..m {
            for j in i + 1..m {
                let d = row_distance(&est.limit_estimate, i, j);
                if predicted.iter().any(|c| c.contains(&i) && c.contains(&j)) {
                    within = within.max(d);
                } else {
                    across = across.min(d);
                }
            }
        }
        ensure(within < 1e-8 && across > 0.1, || {
            format!("{name}: within {within:e}, across {across}")
        })?;
        if name == "rotated blocks" {
            ensure(!pcomp.pchain.is_trivial(), || "rotated chain has a trivial component".into())?;
        }
        notes.push(format!("{name} {predicted:?}"));
    }
    Ok(notes.join("; "))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("ergodic 2x2 averaging chain", 1.0, criterion_1),
        ("swap chain lacks absolute infinite flow", 1.0, criterion_2),
        ("fixed-point chain is undecided", 1.0, criterion_3),
        ("non-decomposable matrix", 1.0, criterion_4),
        ("Birkhoff decomposition suite", 30.0, criterion_5),
        ("rotational transformation suite", 60.0, criterion_6),
        ("Lyapunov suite", 30.0, criterion_7),
        ("rate certificates", 60.0, criterion_8),
        ("switching suite", 60.0, criterion_9),
        ("row clusters of permuted products", 10.0, criterion_10),
    ];
    let mut failed = 0;
    for (n, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|detail| {
            if elapsed > Duration::from_secs_f64(*limit) {
                Err(format!("{detail}; took {:.2}s, limit {limit}s", elapsed.as_secs_f64()))
            } else {
                Ok(detail)
            }
        });
        let secs = elapsed.as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {:>2}. {name} ({secs:.2}s): {detail}", n + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL  {:>2}. {name} ({secs:.2}s): {why}", n + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
