//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use common::{chain, experiment_1, experiment_2, golden};

use graphtm::automata::TaTeam;
use graphtm::datasets::{gen_mv_xor, gen_seq_consecutive, seq_class_counts, SEQ_BINARY_SPLIT};
use graphtm::engine::{argmax, GraphTm, TrainConfig, Trainer};
use graphtm::exec::{Executor, Parallelism};
use graphtm::graph::{GraphRecord, InputGraph};
use graphtm::hypervector::{Hypervector, SymbolSpace};
use graphtm::interpret::{evaluate_symbolic, set_clause, trace_to_nodes};
use graphtm::model_io::to_bytes;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn node_table(model: &GraphTm, g: &InputGraph) -> Result<Vec<Vec<bool>>, String> {
    let f = model.forward(g).map_err(err)?;
    Ok((0..model.num_clauses()).map(|j| f.state.final_matches(j).to_vec()).collect())
}

fn render_table(t: &[Vec<bool>]) -> String {
    t.iter()
        .enumerate()
        .map(|(j, row)| {
            let cells: String = row.iter().map(|&b| if b { 'T' } else { 'F' }).collect();
            format!("C{j}={cells}")
        })
        .collect::<Vec<_>>()
        .join(" ")
}

// ---------------------------------------------------------------- criteria

fn c1_golden() -> Outcome {
    let (tm, g) = golden();
    let f = tm.forward(&g).map_err(err)?;
    let h0: Vec<String> = (0..5).map(|n| g.node_hv(n).bit_string()).collect();
    let a = "11000000 00111111";
    let none = "00000000 11111111";
    check(h0 == [none, a, a, a, none], || format!("H0 rows {h0:?}"))?;
    let h1: Vec<String> = (0..5).map(|n| f.state.message(1, n).bit_string()).collect();
    let want = [
        "00000110 11111001",
        "00000110 11111001",
        "00001110 11110001",
        "00001100 11110011",
        "00001100 11110011",
    ];
    check(h1 == want, || format!("H1 rows {h1:?}"))?;
    let m0 = f.state.clause_matches(0, 0);
    let m1 = f.state.clause_matches(1, 0);
    check(m0 == [false, true, true, true, false], || format!("M0 {m0:?}"))?;
    check(m1 == [false, false, true, false, false], || format!("M1 {m1:?}"))?;
    Ok("H0, H1, M0, M1 bit-exact".into())
}

fn c2_experiment_1() -> Outcome {
    let m = experiment_1();
    let g = chain(&m, "BAAAE");
    let table = node_table(&m, &g)?;
    let f = |v: &[u8]| v.iter().map(|&b| b == 1).collect::<Vec<_>>();
    let want = vec![f(&[0, 0, 0, 0, 0]), f(&[0, 0, 0, 0, 0]), f(&[0, 0, 0, 1, 0]), f(&[0, 0, 0, 0, 0])];
    let pred = m.predict(&g).map_err(err)?;
    check(table == want, || {
        format!(
            "node table {} differs from expected {} (predict={pred})",
            render_table(&table),
            render_table(&want)
        )
    })?;
    check(pred == 1, || format!("predict={pred}"))?;
    Ok(format!("{} predict={pred}", render_table(&table)))
}

fn c3_experiment_2() -> Outcome {
    let m = experiment_2();
    let g = chain(&m, "BBAEE");
    let table = node_table(&m, &g)?;
    let f = |v: &[u8]| v.iter().map(|&b| b == 1).collect::<Vec<_>>();
    let want = vec![f(&[0; 5]), f(&[0; 5]), f(&[0; 5]), f(&[1, 1, 0, 1, 1])];
    check(table == want, || format!("node table {}", render_table(&table)))?;
    let fwd = m.forward(&g).map_err(err)?;
    check(fwd.votes == [3, -3, -5], || format!("votes {:?}", fwd.votes))?;
    check(fwd.prediction() == 0, || format!("predict={}", fwd.prediction()))?;
    Ok(format!("{} votes={:?} predict=0", render_table(&table), fwd.votes))
}

fn c4_experiment_1_training() -> Outcome {
    let (neg, pos) = SEQ_BINARY_SPLIT;
    check(seq_class_counts(2, neg + pos) == [neg, pos], || "class proportions".into())?;
    let mut passes = 0;
    let mut report = Vec::new();
    for seed in 1..=5u64 {
        let train = gen_seq_consecutive(5, 2, neg + pos, 0.01, seed).map_err(err)?;
        let test = gen_seq_consecutive(5, 2, 10_000, 0.0, seed + 100).map_err(err)?;
        let config = TrainConfig {
            num_clauses: 4,
            threshold: 100,
            specificity: 1.0,
            depth: 2,
            epochs: 10,
            seed,
            ..TrainConfig::default()
        };
        let space = train.symbol_space(config.hv_size, config.bits_per_symbol, seed).map_err(err)?;
        let mut model = GraphTm::new(config, space, 2).map_err(err)?;
        let tr = train.bind(model.symbols()).map_err(err)?;
        let te = test.bind(model.symbols()).map_err(err)?;
        let mut trainer = Trainer::new(&model, seed, Parallelism::Auto).map_err(err)?;
        let hist = trainer
            .fit(&mut model, &tr, &te, 10, |m| m.test_acc.unwrap_or(0.0) < 0.99)
            .map_err(err)?;
        let last = hist.last().unwrap();
        let acc = last.test_acc.unwrap_or(0.0);
        if acc >= 0.99 {
            passes += 1;
        }
        report.push(format!("seed{seed}:{acc:.4}@{}", last.epoch));
    }
    check(passes >= 3, || format!("{passes}/5 seeds reached 0.99 ({})", report.join(" ")))?;
    Ok(format!("{passes}/5 seeds >= 0.99 ({})", report.join(" ")))
}

/// Parity by elimination, built by hand: it must classify every test
/// sample correctly before the learned model is judged.
fn xor_oracle(space: &SymbolSpace) -> Result<GraphTm, String> {
    let config = TrainConfig {
        num_clauses: 6,
        depth: 2,
        hv_size: space.hv_size(),
        bits_per_symbol: space.bits_per_symbol(),
        msg_size: 1024,
        ..TrainConfig::default()
    };
    let mut m = GraphTm::new(config, space.clone(), 2).map_err(err)?;
    let even = "¬1 ∧ ¬3 ∧ ¬5 ∧ ¬7 ∧ ¬9";
    let odd = "¬0 ∧ ¬2 ∧ ¬4 ∧ ¬6 ∧ ¬8";
    let clauses = [
        (even.to_string(), [0, 0]),
        (odd.to_string(), [0, 0]),
        (format!("{even} ∧ e0@1:0"), [-1, 1]),
        (format!("{odd} ∧ e0@1:1"), [-1, 1]),
        (format!("{even} ∧ e0@1:1"), [1, -1]),
        (format!("{odd} ∧ e0@1:0"), [1, -1]),
    ];
    for (j, (text, w)) in clauses.iter().enumerate() {
        set_clause(&mut m, j, text).map_err(err)?;
        m.set_weights(j, w).map_err(err)?;
    }
    Ok(m)
}

fn c5_mv_xor() -> Outcome {
    let train = gen_mv_xor(10, 0.01, 5000, 1).map_err(err)?;
    let test = gen_mv_xor(10, 0.0, 1000, 2).map_err(err)?;
    let config = TrainConfig {
        num_clauses: 100,
        threshold: 1000,
        specificity: 5.0,
        depth: 2,
        hv_size: 10,
        bits_per_symbol: 1,
        msg_size: 1024,
        bits_per_clause: 2,
        epochs: 30,
        seed: 1,
        ..TrainConfig::default()
    };
    let space = train.symbol_space(config.hv_size, config.bits_per_symbol, config.seed).map_err(err)?;
    let te_oracle = test.bind(&space).map_err(err)?;
    let oracle = xor_oracle(&space)?;
    let exec = Executor::sequential();
    let oracle_acc = oracle.accuracy(&te_oracle, &exec).map_err(err)?;
    check(oracle_acc == 1.0, || format!("hand-built oracle scores {oracle_acc}"))?;

    let mut model = GraphTm::new(config, space, 2).map_err(err)?;
    let tr = train.bind(model.symbols()).map_err(err)?;
    let te = test.bind(model.symbols()).map_err(err)?;
    let mut trainer = Trainer::new(&model, 1, Parallelism::Auto).map_err(err)?;
    let hist = trainer
        .fit(&mut model, &tr, &te, 30, |m| m.test_acc.unwrap_or(0.0) < 0.95)
        .map_err(err)?;
    let last = hist.last().unwrap();
    let acc = last.test_acc.unwrap_or(0.0);
    check(acc >= 0.95, || format!("test accuracy {acc:.4} after {} epochs", last.epoch))?;
    Ok(format!("oracle=1.0000 learned={acc:.4} at epoch {}", last.epoch))
}

/// Monte Carlo over one automaton. Returns counts of (toward Include,
/// unchanged, toward Exclude).
fn type_i_counts(s: f64, start: u16, lit: bool, clause: bool, draws: usize, rng: &mut ChaCha8Rng) -> [usize; 3] {
    let n = 128;
    let mut team = TaTeam::new(1, &[2], n).unwrap();
    let hv = if lit {
        Hypervector::empty(1).bundled(&[0]).unwrap()
    } else {
        Hypervector::empty(1)
    };
    let mut counts = [0; 3];
    for _ in 0..draws {
        team.set_state(0, 0, 0, start).unwrap();
        team.set_state(0, 0, 1, n).unwrap();
        team.type_i_feedback(0, 0, &hv, clause, s, None, rng).unwrap();
        let after = team.component(0, 0).unwrap().state(0);
        counts[match after.cmp(&start) {
            std::cmp::Ordering::Less => 0,
            std::cmp::Ordering::Equal => 1,
            std::cmp::Ordering::Greater => 2,
        }] += 1;
    }
    counts
}

fn c6_feedback_tables() -> Outcome {
    let draws = 100_000;
    let n = 128u16;
    let inc = n / 2;
    let exc = n + n / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for s in [1.0, 2.0, 10.0] {
        let hi = (s - 1.0) / s;
        let lo = 1.0 / s;
        // (action start, literal, clause, [P(toward Include), P(stay), P(toward Exclude)])
        let cells = [
            ("include 1,1", inc, true, true, [hi, lo, 0.0]),
            ("exclude 1,1", exc, true, true, [hi, lo, 0.0]),
            ("exclude 1,0", exc, false, true, [0.0, hi, lo]),
            ("include 0,1", inc, true, false, [0.0, hi, lo]),
            ("exclude 0,1", exc, true, false, [0.0, hi, lo]),
            ("include 0,0", inc, false, false, [0.0, hi, lo]),
            ("exclude 0,0", exc, false, false, [0.0, hi, lo]),
        ];
        for (name, start, lit, clause, want) in cells {
            let counts = type_i_counts(s, start, lit, clause, draws, &mut rng);
            for k in 0..3 {
                let p = want[k];
                let got = counts[k] as f64 / draws as f64;
                let sigma = (p * (1.0 - p) / draws as f64).sqrt();
                let dev = (got - p).abs();
                if sigma == 0.0 {
                    check(dev == 0.0, || format!("s={s} {name}: outcome {k} frequency {got}, expected exactly {p}"))?;
                } else {
                    worst = worst.max(dev / sigma);
                    check(dev <= 3.0 * sigma, || {
                        format!("s={s} {name}: outcome {k} frequency {got:.5}, expected {p:.5} (3σ = {:.5})", 3.0 * sigma)
                    })?;
                }
            }
        }
    }
    // Type II, deterministic.
    let mut team = TaTeam::new(1, &[2], n).unwrap();
    let zero = Hypervector::empty(1);
    let one = Hypervector::empty(1).bundled(&[0]).unwrap();
    let cases = [
        (exc, &zero, true, exc - 1),
        (n, &zero, true, n - 1),
        (exc, &one, true, exc),
        (inc, &one, true, inc),
        (inc, &zero, true, inc),
        (exc, &zero, false, exc),
        (inc, &one, false, inc),
    ];
    for (start, hv, clause, want) in cases {
        for _ in 0..100 {
            team.set_state(0, 0, 0, start).unwrap();
            team.type_ii_feedback(0, 0, hv, clause).unwrap();
            let got = team.component(0, 0).unwrap().state(0);
            check(got == want, || {
                format!("Type II from {start} (literal {}, clause {clause}) gave {got}, expected {want}", hv.get(0))
            })?;
        }
    }
    Ok(format!("Type I within 3σ (worst {worst:.2}σ) for s in {{1,2,10}}; Type II exact"))
}

fn c7_oracle_equivalence() -> Outcome {
    let models = [("exp1", experiment_1()), ("exp2", experiment_2())];
    let mut checked = 0usize;
    for (name, m) in &models {
        let formulas: Vec<_> = (0..m.num_clauses())
            .map(|j| trace_to_nodes(m, j).map(|t| t.formula))
            .collect::<Result<_, _>>()
            .map_err(err)?;
        for len in 1..=6u32 {
            for code in 0..3usize.pow(len) {
                let mut c = code;
                let seq: String = (0..len)
                    .map(|_| {
                        let ch = ['A', 'B', 'E'][c % 3];
                        c /= 3;
                        ch
                    })
                    .collect();
                let g = chain(m, &seq);
                let table = node_table(m, &g)?;
                let nodes: Vec<Vec<String>> = seq.chars().map(|ch| vec![ch.to_string()]).collect();
                for (j, f) in formulas.iter().enumerate() {
                    let sym = evaluate_symbolic(f, &nodes, m.symbols()).map_err(err)?;
                    check(sym == table[j], || {
                        format!("{name} clause {j} on {seq}: engine {:?} symbolic {sym:?}", table[j])
                    })?;
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} clause evaluations agree over all sequences of length 1..=6"))
}

fn c8_disconnected() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let names: Vec<String> = (0..6).map(|i| format!("s{i}")).collect();
    let space = SymbolSpace::from_vocabulary(16, 2, 3, &names, &["plain"]).map_err(err)?;
    let config = TrainConfig {
        num_clauses: 12,
        depth: 2,
        hv_size: 16,
        msg_size: 64,
        ..TrainConfig::default()
    };
    let mut model = GraphTm::new(config, space.clone(), 3).map_err(err)?;
    let mut layer0 = Vec::new();
    for j in 0..12 {
        let k = rng.gen_range(0..=3);
        let lits: Vec<usize> = (0..k).map(|_| rng.gen_range(0..32)).collect();
        model.set_component_literals(j, 0, &lits).map_err(err)?;
        let w: Vec<i32> = (0..3).map(|_| rng.gen_range(-5..=5)).collect();
        model.set_weights(j, &w).map_err(err)?;
        layer0.push((lits, w));
    }
    for gi in 0..20 {
        let nodes = rng.gen_range(1..=6);
        let props: Vec<Vec<String>> = (0..nodes)
            .map(|_| names.iter().filter(|_| rng.gen_bool(0.3)).cloned().collect())
            .collect();
        let g = GraphRecord {
            node_symbols: props.clone(),
            edges: vec![],
            label: None,
        }
        .bind(&space)
        .map_err(err)?;
        // Flat evaluation straight from the symbol bit sets.
        let mut votes = vec![0i64; 3];
        let mut outputs = Vec::new();
        for (lits, w) in &layer0 {
            let fires = props.iter().any(|syms| {
                let mut on = [false; 16];
                for s in syms {
                    for &b in space.indices(s).unwrap() {
                        on[b] = true;
                    }
                }
                lits.iter().all(|&l| if l < 16 { on[l] } else { !on[l - 16] })
            });
            outputs.push(fires);
            if fires {
                for (v, &wi) in votes.iter_mut().zip(w) {
                    *v += wi as i64;
                }
            }
        }
        let f = model.forward(&g).map_err(err)?;
        check(f.clause_outputs == outputs, || format!("graph {gi}: outputs {:?} vs flat {outputs:?}", f.clause_outputs))?;
        check(f.votes == votes, || format!("graph {gi}: votes {:?} vs flat {votes:?}", f.votes))?;
        check(f.prediction() == argmax(&votes), || format!("graph {gi}: prediction"))?;
    }
    Ok("20 edge-free graphs match the flat evaluation".into())
}

fn c9_determinism() -> Outcome {
    let train = gen_seq_consecutive(5, 3, 600, 0.01, 9).map_err(err)?;
    let config = TrainConfig {
        num_clauses: 24,
        threshold: 20,
        specificity: 3.0,
        depth: 3,
        hv_size: 16,
        msg_size: 64,
        seed: 9,
        ..TrainConfig::default()
    };
    let mut files = Vec::new();
    for par in [Parallelism::Sequential, Parallelism::Threads(4)] {
        let space = train.symbol_space(16, 2, 9).map_err(err)?;
        let mut model = GraphTm::new(config.clone(), space, 3).map_err(err)?;
        let tr = train.bind(model.symbols()).map_err(err)?;
        let mut trainer = Trainer::new(&model, 9, par).map_err(err)?;
        trainer.fit(&mut model, &tr, &[], 3, |_| true).map_err(err)?;
        files.push(to_bytes(&model));
    }
    check(files[0] == files[1], || "model files differ between 1 and 4 workers".into())?;
    Ok(format!("{} byte model files identical for workers 1 and 4", files[0].len()))
}

fn c10_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let names: Vec<String> = (0..8).map(|i| format!("p{i}")).collect();
    let space = SymbolSpace::from_vocabulary(32, 3, 5, &names, &["a", "b"]).map_err(err)?;

    // bundle: idempotent, commutative, negation half mirrors the first
    for _ in 0..200 {
        let x: Vec<usize> = (0..rng.gen_range(0..6)).map(|_| rng.gen_range(0..32)).collect();
        let y: Vec<usize> = (0..rng.gen_range(0..6)).map(|_| rng.gen_range(0..32)).collect();
        let xy = Hypervector::empty(32).bundled(&x).and_then(|h| h.bundled(&y)).map_err(err)?;
        let yx = Hypervector::empty(32).bundled(&y).and_then(|h| h.bundled(&x)).map_err(err)?;
        let xx = xy.clone().bundled(&x).map_err(err)?;
        check(xy == yx, || "bundle is not commutative".into())?;
        check(xx == xy, || "bundle is not idempotent".into())?;
        check(xy.is_mirrored(), || "negation half out of sync".into())?;
    }

    // a briefly trained deep model on random graphs
    let config = TrainConfig {
        num_clauses: 16,
        threshold: 10,
        specificity: 2.0,
        depth: 3,
        hv_size: 32,
        bits_per_symbol: 3,
        msg_size: 64,
        n_states: 16,
        seed: 10,
        ..TrainConfig::default()
    };
    let mut model = GraphTm::new(config, space.clone(), 3).map_err(err)?;
    let graphs: Vec<InputGraph> = (0..60)
        .map(|_| {
            let n = rng.gen_range(1..7);
            let props: Vec<Vec<String>> = (0..n)
                .map(|_| names.iter().filter(|_| rng.gen_bool(0.25)).cloned().collect())
                .collect();
            let edges: Vec<(usize, usize, String)> = (0..rng.gen_range(0..10))
                .map(|_| {
                    let t = if rng.gen_bool(0.5) { "a" } else { "b" };
                    (rng.gen_range(0..n), rng.gen_range(0..n), t.to_string())
                })
                .collect();
            GraphRecord {
                node_symbols: props,
                edges,
                label: Some(rng.gen_range(0..3)),
            }
            .bind(&space)
        })
        .collect::<Result<_, _>>()
        .map_err(err)?;
    let mut trainer = Trainer::new(&model, 10, Parallelism::Sequential).map_err(err)?;
    let top = 2 * model.team().n_states() - 1;
    for round in 0..5 {
        trainer.run_epoch(&mut model, &graphs, &[], round).map_err(err)?;
        for team in model.team().clauses() {
            for c in &team.components {
                check(c.states().iter().all(|&s| s <= top), || "automaton state out of bounds".into())?;
                let inc = c.states().iter().filter(|&&s| s < model.team().n_states()).count();
                check(inc == c.included_count(), || "include mask out of sync with states".into())?;
            }
        }
    }
    for (gi, g) in graphs.iter().enumerate() {
        let f = model.forward(g).map_err(err)?;
        for n in 0..g.num_nodes() {
            for i in 1..model.depth() {
                check(f.state.message(i, n).is_mirrored(), || format!("graph {gi}: message negation half"))?;
            }
        }
        for j in 0..model.num_clauses() {
            for i in 1..model.depth() {
                let (prev, cur) = (f.state.clause_matches(i - 1, j), f.state.clause_matches(i, j));
                check(cur.iter().zip(prev).all(|(&c, &p)| !c || p), || {
                    format!("graph {gi} clause {j}: layer {i} matches a node layer {} does not", i - 1)
                })?;
            }
        }
        for k in [2i32, 3, 7] {
            let mut scaled = model.clone();
            for j in 0..model.num_clauses() {
                let row: Vec<i32> = model.weights().row(j).iter().map(|w| w * k).collect();
                scaled.set_weights(j, &row).map_err(err)?;
            }
            let p = scaled.predict(g).map_err(err)?;
            check(p == f.prediction(), || format!("graph {gi}: scaling weights by {k} changed the prediction"))?;
        }
    }
    Ok("bundle, mirror, state bounds, layer monotonicity, weight scaling".into())
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("golden two-layer pass", c1_golden, Duration::from_secs(1)),
        ("experiment 1 hand-set clauses", c2_experiment_1, Duration::from_secs(1)),
        ("experiment 2 hand-set clauses", c3_experiment_2, Duration::from_secs(1)),
        ("experiment 1 training", c4_experiment_1_training, Duration::from_secs(120)),
        ("multivalue XOR", c5_mv_xor, Duration::from_secs(120)),
        ("feedback tables", c6_feedback_tables, Duration::from_secs(30)),
        ("symbolic oracle equivalence", c7_oracle_equivalence, Duration::from_secs(30)),
        ("disconnected-node reduction", c8_disconnected, Duration::from_secs(30)),
        ("determinism across workers", c9_determinism, Duration::from_secs(60)),
        ("invariants", c10_invariants, Duration::from_secs(60)),
    ];
    let filter: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, f, budget)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if took > *budget => Err(format!("{msg}; took {took:.2?}, budget {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(msg) => println!("criterion {id:>2} PASS {name}: {msg} [{took:.2?}]"),
            Err(msg) => {
                failed += 1;
                println!("criterion {id:>2} FAIL {name}: {msg} [{took:.2?}]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
