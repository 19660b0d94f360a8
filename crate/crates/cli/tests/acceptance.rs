//! Acceptance suite. One PASS/FAIL line per criterion; exits non-zero if any
//! criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use qrepair::bundle::{load_benchmark, LoadOptions};
use qrepair::circuit::catalog::{unitary, CATALOG};
use qrepair::gateway::{Noop, PerfectOracle, ReplayEntry, ReplayStore, REPLAY_FORMAT_VERSION};
use qrepair::harness::{analyze, classify_status, run_tests, MutationStatus, TestOutcome, Verdict};
use qrepair::lab::{
    aggregate_rubrics, cohen_kappa, fixed_set_breakdown, percent_agreement, run_experiment, Criterion, Element,
    ExperimentOptions, RepairVerdict, RubricSheet,
};
use qrepair::mutation::enumerate_mutants;
use qrepair::prompt::{build_prompt, render_response, Explanation};
use qrepair::sim::{evolve, evolve_traced};
use qrepair::{parse_qasm, print_qasm, BugBundle, PromptConfig, Rational, Symptom};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($fmt)+));
        }
    };
}

fn desk_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../benchmarks/desk")
}

fn desk() -> Vec<BugBundle> {
    load_benchmark(&desk_dir(), LoadOptions::default()).expect("desk benchmark loads")
}

const BELL: &str =
    "OPENQASM 2.0;\nqreg q[2];\ncreg c[2];\nh q[0];\ncx q[0],q[1];\nmeasure q[0] -> c[0];\nmeasure q[1] -> c[1];\n";

// ---------------------------------------------------------------------------
// Dense reference simulator, written from textbook gate definitions.

/// (name, qubits, params, controls)
const GATES: &[(&str, usize, usize, usize)] = &[
    ("id", 1, 0, 0),
    ("x", 1, 0, 0),
    ("y", 1, 0, 0),
    ("z", 1, 0, 0),
    ("h", 1, 0, 0),
    ("s", 1, 0, 0),
    ("sdg", 1, 0, 0),
    ("t", 1, 0, 0),
    ("tdg", 1, 0, 0),
    ("rx", 1, 1, 0),
    ("ry", 1, 1, 0),
    ("rz", 1, 1, 0),
    ("p", 1, 1, 0),
    ("cx", 2, 0, 1),
    ("cz", 2, 0, 1),
    ("swap", 2, 0, 0),
    ("ch", 2, 0, 1),
    ("ccx", 3, 0, 2),
    ("cswap", 3, 0, 1),
];

type Dense = Vec<Vec<Complex64>>;

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn one_qubit(name: &str, theta: f64) -> [[Complex64; 2]; 2] {
    let (z, o) = (cx(0.0, 0.0), cx(1.0, 0.0));
    let r = 1.0 / 2f64.sqrt();
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let phase = |a: f64| Complex64::from_polar(1.0, a);
    match name {
        "id" => [[o, z], [z, o]],
        "x" => [[z, o], [o, z]],
        "y" => [[z, cx(0.0, -1.0)], [cx(0.0, 1.0), z]],
        "z" => [[o, z], [z, -o]],
        "h" => [[cx(r, 0.0), cx(r, 0.0)], [cx(r, 0.0), cx(-r, 0.0)]],
        "s" => [[o, z], [z, cx(0.0, 1.0)]],
        "sdg" => [[o, z], [z, cx(0.0, -1.0)]],
        "t" => [[o, z], [z, phase(std::f64::consts::FRAC_PI_4)]],
        "tdg" => [[o, z], [z, phase(-std::f64::consts::FRAC_PI_4)]],
        "rx" => [[cx(c, 0.0), cx(0.0, -s)], [cx(0.0, -s), cx(c, 0.0)]],
        "ry" => [[cx(c, 0.0), cx(-s, 0.0)], [cx(s, 0.0), cx(c, 0.0)]],
        "rz" => [[phase(-theta / 2.0), z], [z, phase(theta / 2.0)]],
        "p" => [[o, z], [z, phase(theta)]],
        _ => panic!("not a one-qubit gate: {name}"),
    }
}

/// Local matrix; bit `j` of an index is operand `j`.
fn local(name: &str, theta: f64) -> Dense {
    let bit = |x: usize, j: usize| (x >> j) & 1;
    let perm = |dim: usize, f: &dyn Fn(usize) -> usize| -> Dense {
        let mut m = vec![vec![cx(0.0, 0.0); dim]; dim];
        for c in 0..dim {
            m[f(c)][c] = cx(1.0, 0.0);
        }
        m
    };
    let swap_bits = |x: usize, a: usize, b: usize| {
        if bit(x, a) != bit(x, b) {
            x ^ (1 << a) ^ (1 << b)
        } else {
            x
        }
    };
    match name {
        "cx" => perm(4, &|x| if bit(x, 0) == 1 { x ^ 2 } else { x }),
        "ccx" => perm(8, &|x| if bit(x, 0) == 1 && bit(x, 1) == 1 { x ^ 4 } else { x }),
        "swap" => perm(4, &|x| swap_bits(x, 0, 1)),
        "cswap" => perm(8, &|x| if bit(x, 0) == 1 { swap_bits(x, 1, 2) } else { x }),
        "cz" => {
            let mut m = perm(4, &|x| x);
            m[3][3] = cx(-1.0, 0.0);
            m
        }
        "ch" => {
            let h = one_qubit("h", 0.0);
            let mut m = perm(4, &|x| x);
            for r in [1, 3] {
                for c in [1, 3] {
                    m[r][c] = h[r >> 1][c >> 1];
                }
            }
            m
        }
        _ => {
            let u = one_qubit(name, theta);
            vec![u[0].to_vec(), u[1].to_vec()]
        }
    }
}

/// Full 2^n operator for a gate on `operands`.
fn embed(n: usize, gate: &Dense, operands: &[usize]) -> Dense {
    let dim = 1 << n;
    let mask: usize = operands.iter().map(|q| 1 << q).sum();
    let loc = |x: usize| {
        operands
            .iter()
            .enumerate()
            .map(|(j, q)| ((x >> q) & 1) << j)
            .sum::<usize>()
    };
    let mut out = vec![vec![cx(0.0, 0.0); dim]; dim];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            if r & !mask == c & !mask {
                *cell = gate[loc(r)][loc(c)];
            }
        }
    }
    out
}

fn matmul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let mut out = vec![vec![cx(0.0, 0.0); n]; n];
    for r in 0..n {
        for k in 0..n {
            for c in 0..n {
                out[r][c] += a[r][k] * b[k][c];
            }
        }
    }
    out
}

struct Op {
    name: &'static str,
    theta: f64,
    operands: Vec<usize>,
    text: String,
}

fn random_program(rng: &mut ChaCha8Rng) -> (usize, Vec<Op>, String) {
    let n = rng.random_range(1..=4);
    let count = rng.random_range(1..=12);
    let usable: Vec<_> = GATES.iter().filter(|g| g.1 <= n).collect();
    let mut ops = Vec::new();
    for _ in 0..count {
        let &&(name, k, params, _) = usable.choose(rng).unwrap();
        let mut qubits: Vec<usize> = (0..n).collect();
        qubits.shuffle(rng);
        qubits.truncate(k);
        let theta = rng.random_range(-6283..=6283) as f64 / 1000.0;
        let args = qubits.iter().map(|q| format!("q[{q}]")).collect::<Vec<_>>().join(",");
        let text = if params == 1 {
            format!("{name}({theta}) {args};")
        } else {
            format!("{name} {args};")
        };
        ops.push(Op {
            name,
            theta,
            operands: qubits,
            text,
        });
    }
    let src = format!(
        "OPENQASM 2.0;\nqreg q[{n}];\n{}\n",
        ops.iter().map(|o| o.text.as_str()).collect::<Vec<_>>().join("\n")
    );
    (n, ops, src)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, ops, src) = random_program(&mut rng);
        let circuit = parse_qasm(&src).map_err(|e| format!("seed {seed}: {e}"))?;
        let got = evolve::<f64>(&circuit).map_err(|e| format!("seed {seed}: {e}"))?;
        let mut total = embed(n, &local("id", 0.0), &[0]);
        for op in &ops {
            total = matmul(&embed(n, &local(op.name, op.theta), &op.operands), &total);
        }
        let diff = got
            .amplitudes()
            .iter()
            .zip(total.iter().map(|row| row[0]))
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        ensure!(diff <= 1e-9, "seed {seed}: max-norm {diff:e}\n{src}");
        worst = worst.max(diff);
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!("50 circuits, worst max-norm {worst:.1e}, {elapsed:.2?}"))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for g in CATALOG {
        for _ in 0..100 {
            let params: Vec<f64> = (0..g.param_arity).map(|_| rng.random_range(-10.0..10.0)).collect();
            let u = unitary::<f64>(g.name, &params).ok_or(format!("no unitary for {}", g.name))?;
            let d = u.dim();
            for r in 0..d {
                for c in 0..d {
                    let dot: Complex64 = (0..d).map(|k| u.get(r, k) * u.get(c, k).conj()).sum();
                    let want = if r == c { 1.0 } else { 0.0 };
                    let err = (dot - want).norm();
                    ensure!(err <= 1e-12, "{} {params:?}: entry ({r},{c}) off by {err:e}", g.name);
                    worst = worst.max(err);
                }
            }
        }
    }
    let mut drift = 0.0f64;
    let mut steps = 0usize;
    let mut sources: Vec<String> = (0..50u64)
        .map(|s| random_program(&mut ChaCha8Rng::seed_from_u64(1000 + s)).2)
        .collect();
    sources.extend(desk().iter().map(|b| print_qasm(&b.reference_fix)));
    for src in &sources {
        let c = parse_qasm(src).map_err(|e| e.to_string())?;
        evolve_traced::<f64>(&c, |_, s| {
            steps += 1;
            drift = drift.max((s.norm_sqr() - 1.0).abs());
        })
        .map_err(|e| e.to_string())?;
    }
    ensure!(drift <= 1e-9, "norm drift {drift:e}");
    Ok(format!(
        "{} gates x 100 draws, worst |UU†-I| {worst:.1e}; {steps} evolve steps, worst norm drift {drift:.1e}",
        CATALOG.len()
    ))
}

// ---------------------------------------------------------------------------
// Brute-force enumerator over the canonical text.

fn pool_key(name: &str) -> Option<(usize, usize, usize)> {
    GATES.iter().find(|g| g.0 == name).map(|g| (g.1, g.2, g.3))
}

fn split_gate(line: &str) -> (&str, &str) {
    let end = line.find(['(', ' ']).unwrap_or(line.len());
    line.split_at(end)
}

fn operand_indices(text: &str, register: char) -> Vec<usize> {
    let mut out = Vec::new();
    let pat = format!("{register}[");
    let mut rest = text;
    while let Some(i) = rest.find(&pat) {
        rest = &rest[i + pat.len()..];
        let close = rest.find(']').unwrap();
        out.push(rest[..close].parse().unwrap());
        rest = &rest[close..];
    }
    out
}

/// Every single-line edit of the canonical text, filtered by operator rules.
fn brute_force_mutants(canonical: &str) -> BTreeMap<String, String> {
    let lines: Vec<&str> = canonical.lines().collect();
    let body = lines
        .iter()
        .position(|l| !l.starts_with("OPENQASM") && !l.starts_with("qreg") && !l.starts_with("creg"))
        .unwrap_or(lines.len());
    let clbits = lines
        .iter()
        .find(|l| l.starts_with("creg"))
        .map(|l| operand_indices(l, 'c')[0])
        .unwrap_or(0);
    let join = |v: Vec<&str>| v.join("\n") + "\n";
    let mut out = BTreeMap::new();
    let mut touched = BTreeSet::new();
    let mut measured = BTreeSet::new();
    let mut used = BTreeSet::new();
    for k in body..lines.len() {
        let line = lines[k];
        let number = k + 1;
        let mut deleted = lines.clone();
        deleted.remove(k);
        if line.starts_with("measure") {
            measured.insert(operand_indices(line, 'q')[0]);
            used.insert(operand_indices(line, 'c')[0]);
            out.insert(format!("L{number}-QMD-measure"), join(deleted));
            continue;
        }
        if line.starts_with("barrier") {
            continue;
        }
        let (name, rest) = split_gate(line);
        touched.extend(operand_indices(line, 'q'));
        out.insert(format!("L{number}-QGD-{name}"), join(deleted));
        let mut dup = lines.clone();
        dup.insert(k, line);
        out.insert(format!("L{number}-QGI-{name}"), join(dup));
        for &(other, ..) in GATES {
            if other != name && pool_key(other) == pool_key(name) {
                let mut replaced = lines.clone();
                let edited = format!("{other}{rest}");
                replaced[k] = &edited;
                out.insert(format!("L{number}-QGR-{other}"), join(replaced));
            }
        }
    }
    if let Some(free) = (0..clbits).find(|c| !used.contains(c)) {
        for q in touched.difference(&measured) {
            let extra = format!("measure q[{q}] -> c[{free}];");
            let mut appended = lines.clone();
            appended.push(&extra);
            out.insert(format!("L{}-QMI-q[{q}]->c[{free}]", lines.len() + 1), join(appended));
        }
    }
    out
}

fn check_against_brute_force(src: &str) -> Result<usize, String> {
    let c = parse_qasm(src).map_err(|e| e.to_string())?;
    let canonical = print_qasm(&c);
    let want = brute_force_mutants(&canonical);
    let mutants = enumerate_mutants(&c).map_err(|e| e.to_string())?;
    let mut got = BTreeMap::new();
    for m in &mutants {
        let text = print_qasm(&m.circuit);
        let back = parse_qasm(&text).map_err(|e| format!("{}: {e}", m.id))?;
        ensure!(back == m.circuit, "{}: round-trip changed the circuit", m.id);
        ensure!(got.insert(m.id.clone(), text).is_none(), "duplicate id {}", m.id);
    }
    if got != want {
        let a: BTreeSet<_> = got.keys().collect();
        let b: BTreeSet<_> = want.keys().collect();
        return Err(format!(
            "mismatch on\n{canonical}only enumerated: {:?}\nonly brute force: {:?}",
            a.difference(&b).collect::<Vec<_>>(),
            b.difference(&a).collect::<Vec<_>>()
        ));
    }
    Ok(mutants.len())
}

fn criterion_3() -> Outcome {
    let c = parse_qasm(BELL).map_err(|e| e.to_string())?;
    let mutants = enumerate_mutants(&c).map_err(|e| e.to_string())?;
    let mut hist: BTreeMap<&str, usize> = ["QGD", "QGI", "QGR", "QMD", "QMI"]
        .into_iter()
        .map(|k| (k, 0))
        .collect();
    for m in &mutants {
        *hist.get_mut(m.operator.as_str()).ok_or("unknown operator")? += 1;
    }
    let want: BTreeMap<&str, usize> = [("QGD", 2), ("QGI", 2), ("QGR", 10), ("QMD", 2), ("QMI", 0)].into();
    ensure!(mutants.len() == 16, "{} mutants", mutants.len());
    ensure!(hist == want, "histogram {hist:?}");
    let n = check_against_brute_force(BELL)?;
    let mut extra = 0;
    for b in desk() {
        extra += check_against_brute_force(&print_qasm(&b.reference_fix))?;
    }
    for seed in 0..30u64 {
        let (_, _, mut src) = random_program(&mut ChaCha8Rng::seed_from_u64(3000 + seed));
        src = src.replacen("qreg q[", "creg c[2];\nqreg q[", 1);
        if seed % 2 == 0 {
            src += "measure q[0] -> c[1];\n";
        }
        extra += check_against_brute_force(&src)?;
    }
    Ok(format!(
        "Bell: {n} mutants {hist:?}; {extra} more mutants agree on desk and random programs"
    ))
}

fn criterion_4() -> Outcome {
    use MutationStatus::*;
    use Verdict::*;
    let row = |v: &[Verdict]| -> Vec<TestOutcome> {
        v.iter()
            .enumerate()
            .map(|(i, v)| TestOutcome {
                name: format!("t{i}"),
                verdict: *v,
                detail: String::new(),
            })
            .collect()
    };
    let table: [(&[Verdict], &[Verdict], MutationStatus); 12] = [
        (&[Pass], &[Pass], Survived),
        (&[Fail], &[Fail], Survived),
        (&[Pass], &[Fail], Killed),
        (&[Fail], &[Pass], Killed),
        (&[Pass], &[Error], Incompetent),
        (&[Fail], &[Error], Incompetent),
        (&[Pass], &[Timeout], TimeOut),
        (&[Fail], &[Timeout], TimeOut),
        (&[Error], &[Error], Incompetent),
        (&[Error], &[Fail], Killed),
        (&[Fail, Pass], &[Pass, Pass], Killed),
        (&[Pass, Pass], &[Timeout, Error], Incompetent),
    ];
    for (i, (base, mutant, want)) in table.iter().enumerate() {
        let got = classify_status(&row(base), &row(mutant)).map_err(|e| e.to_string())?;
        ensure!(
            got == *want,
            "case {}: {base:?} -> {mutant:?} gave {got:?}, want {want:?}",
            i + 1
        );
    }
    ensure!(
        classify_status(&row(&[Pass]), &row(&[Pass, Pass])).is_err(),
        "mismatched test sets accepted"
    );
    Ok("12 cases".into())
}

fn criterion_5() -> Outcome {
    let expected: [(PromptConfig, &[&str]); 4] = [
        (
            PromptConfig::S,
            &["## Buggy Code", "## Bug Description", "## Expected Behavior"],
        ),
        (
            PromptConfig::SD,
            &[
                "## Buggy Code",
                "## Bug Description",
                "## Expected Behavior",
                "## Current Result",
            ],
        ),
        (
            PromptConfig::SM,
            &[
                "## Buggy Code",
                "## Bug Description",
                "## Expected Behavior",
                "## Mutation Analysis Result",
            ],
        ),
        (
            PromptConfig::SDM,
            &[
                "## Buggy Code",
                "## Bug Description",
                "## Expected Behavior",
                "## Current Result",
                "## Mutation Analysis Result",
            ],
        ),
    ];
    let mut checked = 0;
    for b in desk() {
        let baseline = run_tests(&b.buggy_circuit, &b.tests, 10_000);
        let records = analyze(&b, 10_000).map_err(|e| e.to_string())?;
        for (config, headers) in &expected {
            let p = build_prompt(&b, *config, Some(&baseline), Some(&records)).map_err(|e| e.to_string())?;
            let got: Vec<&str> = p.user_prompt.lines().filter(|l| l.starts_with("## ")).collect();
            ensure!(got == *headers, "{} {config}: headers {got:?}", b.id);
            if config.includes_mutation() {
                for r in &records {
                    let line = r.to_json_line();
                    ensure!(
                        p.user_prompt.contains(&line),
                        "{} {config}: record missing: {line}",
                        b.id
                    );
                    let v: serde_json::Value = serde_json::from_str(&line).unwrap();
                    let fields: BTreeSet<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
                    ensure!(
                        fields == BTreeSet::from(["line_number", "mutation_operator", "exception_traceback", "status"]),
                        "record fields {fields:?}"
                    );
                }
            } else {
                ensure!(
                    !p.user_prompt.contains("\"mutation_operator\""),
                    "{} {config}: records leaked",
                    b.id
                );
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} prompts"))
}

fn qrepair(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_qrepair"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("qrepair {args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn criterion_6() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let desk = desk_dir().to_string_lossy().into_owned();
    let common = ["--samples", "5", "--seed", "17", "--shots", "4096"];
    let mut args = vec!["repair", &desk, "--provider", "perfect-oracle"];
    let (replay, rec) = (p("replay.jsonl"), p("record.json"));
    args.extend(["--record", &replay, "--out", &rec]);
    args.extend(common);
    qrepair(&args)?;
    let mut reports = Vec::new();
    for name in ["a.json", "b.json"] {
        let out = p(name);
        let mut args = vec!["repair", &desk, "--replay", &replay, "--out", &out];
        args.extend(common);
        qrepair(&args)?;
        reports.push(std::fs::read(&out).map_err(|e| e.to_string())?);
    }
    ensure!(reports[0] == reports[1], "replay reports differ");
    let text = String::from_utf8_lossy(&reports[0]);
    ensure!(
        text.contains("\"provider\": \"replay:v1\""),
        "report is not from the replay provider"
    );
    let stdout_a = qrepair(&["repair", &desk, "--replay", &replay, "--samples", "5", "--seed", "17"])?;
    let stdout_b = qrepair(&["repair", &desk, "--replay", &replay, "--samples", "5", "--seed", "17"])?;
    ensure!(
        stdout_a == stdout_b && stdout_a.as_bytes() == &reports[0][..],
        "stdout reports differ"
    );
    Ok(format!("{} bytes, identical across runs", reports[0].len()))
}

fn pct(rate: f64) -> f64 {
    rate * 100.0
}

fn criterion_7() -> Outcome {
    let bundles = desk();
    let opts = ExperimentOptions {
        n_samples: 1,
        ..Default::default()
    };
    let perfect = run_experiment(&bundles, &opts, &PerfectOracle).map_err(|e| e.to_string())?;
    ensure!(
        perfect.per_config_total_rate.values().all(|&r| r == 1.0),
        "perfect_oracle {:?}",
        perfect.per_config_total_rate
    );
    let noop = run_experiment(&bundles, &opts, &Noop).map_err(|e| e.to_string())?;
    ensure!(
        noop.per_config_total_rate.values().all(|&r| r == 0.0),
        "noop {:?}",
        noop.per_config_total_rate
    );

    // 10 WO and 8 TE bundles; success plan per configuration.
    let wo_template = bundles.iter().find(|b| b.id == "wrong-gate-bell").unwrap();
    let te_template = bundles.iter().find(|b| b.symptom == Symptom::TE).unwrap();
    let mut corpus = Vec::new();
    for i in 1..=10 {
        corpus.push(BugBundle {
            id: format!("w{i:02}"),
            ..wo_template.clone()
        });
    }
    for i in 1..=8 {
        corpus.push(BugBundle {
            id: format!("t{i}"),
            ..te_template.clone()
        });
    }
    let wo_fixed = |c: PromptConfig| match c {
        PromptConfig::S => 7,
        PromptConfig::SD => 9,
        PromptConfig::SM => 8,
        PromptConfig::SDM => 10,
    };
    let fixes = |b: &BugBundle, c: PromptConfig| -> bool {
        let n: usize = b.id[1..].parse().unwrap();
        match b.symptom {
            Symptom::WO => n <= wo_fixed(c),
            Symptom::TE => n <= 7,
        }
    };
    let explanation = Explanation {
        position: "Line 4.".into(),
        cause: "Wrong gate.".into(),
        change: "Replaced it.".into(),
    };
    let mut lines = String::new();
    for (bi, b) in corpus.iter().enumerate() {
        for (ci, c) in PromptConfig::ALL.into_iter().enumerate() {
            let winner = (bi + ci) % 5;
            for k in 0..5 {
                let response = if fixes(b, c) && k == winner {
                    render_response(&print_qasm(&b.reference_fix), &explanation)
                } else if k % 2 == 0 {
                    render_response(&print_qasm(&b.buggy_circuit), &explanation)
                } else {
                    "I could not find the bug.".to_string()
                };
                let entry = ReplayEntry {
                    version: REPLAY_FORMAT_VERSION,
                    bundle_id: b.id.clone(),
                    config: c,
                    sample_index: k,
                    response,
                };
                lines += &(serde_json::to_string(&entry).unwrap() + "\n");
            }
        }
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("synthetic.jsonl");
    std::fs::write(&path, lines).map_err(|e| e.to_string())?;
    let store = ReplayStore::open(&path).map_err(|e| e.to_string())?;
    ensure!(store.len() == 360, "{} stored responses", store.len());
    let report = run_experiment(&corpus, &ExperimentOptions::default(), &store).map_err(|e| e.to_string())?;
    ensure!(report.attempts.len() == 360, "{} attempts", report.attempts.len());

    let table: [(PromptConfig, f64, f64, f64); 4] = [
        (PromptConfig::S, 77.8, 70.0, 87.5),
        (PromptConfig::SD, 88.9, 90.0, 87.5),
        (PromptConfig::SM, 83.3, 80.0, 87.5),
        (PromptConfig::SDM, 94.4, 100.0, 87.5),
    ];
    let mut shown = Vec::new();
    for (c, total, wo, te) in table {
        let t = pct(report.per_config_total_rate[&c]);
        let w = pct(report.per_config_wo_rate[&c].ok_or("no WO rate")?);
        let e = pct(report.per_config_te_rate[&c].ok_or("no TE rate")?);
        ensure!((t - total).abs() <= 0.05, "{c}: total {t:.3}, want {total}");
        ensure!(
            (w - wo).abs() <= 0.05 && (e - te).abs() <= 0.05,
            "{c}: WO {w:.3} TE {e:.3}, want {wo} {te}"
        );
        shown.push(format!("{c} {t:.1}"));
    }
    let breakdown = fixed_set_breakdown(&report);
    ensure!(
        breakdown.intersection.len() == 14,
        "intersection {}",
        breakdown.intersection.len()
    );
    ensure!(
        report.fixed_sets[&PromptConfig::SDM].len() == 17,
        "S+D+M fixed {}",
        report.fixed_sets[&PromptConfig::SDM].len()
    );
    let verdicts: BTreeSet<String> = report.attempts.iter().map(|a| format!("{:?}", a.verdict)).collect();
    for v in [
        RepairVerdict::Success,
        RepairVerdict::TestFailure,
        RepairVerdict::Malformed,
        RepairVerdict::ParseError,
    ] {
        ensure!(verdicts.contains(&format!("{v:?}")), "verdict {v:?} never produced");
    }
    Ok(format!(
        "extremes 1.0/0.0; synthetic: {}; intersection 14, S+D+M 17",
        shown.join(", ")
    ))
}

fn criterion_8() -> Outcome {
    let close = |x: f64, want: f64| (x - want).abs() <= 1e-12;
    let rat = |p: &Rational| *p.numer() as f64 / *p.denom() as f64;
    let a: Vec<bool> = (0..10).map(|i| i % 3 == 0).collect();
    let k1: f64 = cohen_kappa(&a, &a).map_err(|e| e.to_string())?;
    ensure!(close(k1, 1.0), "identical: {k1}");
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (n, pa, pb) in [
        (20, true, true),
        (20, false, false),
        (10, true, false),
        (10, false, true),
    ] {
        x.extend(std::iter::repeat_n(pa, n));
        y.extend(std::iter::repeat_n(pb, n));
    }
    let k2: f64 = cohen_kappa(&x, &y).map_err(|e| e.to_string())?;
    let k2r: Rational = cohen_kappa(&x, &y).map_err(|e| e.to_string())?;
    ensure!(
        close(k2, 1.0 / 3.0) && k2r == Rational::new(1, 3),
        "N=60 case: {k2} / {k2r}"
    );
    let k3: f64 = cohen_kappa(&[true; 10], &[false; 10]).map_err(|e| e.to_string())?;
    ensure!(close(k3, 0.0), "opposite: {k3}");

    let ra = vec![true; 648];
    let rb: Vec<bool> = (0..648).map(|i| i < 513).collect();
    let p: f64 = percent_agreement(&ra, &rb).map_err(|e| e.to_string())?;
    let pr: Rational = percent_agreement(&ra, &rb).map_err(|e| e.to_string())?;
    ensure!(
        (p - 0.7917).abs() <= 5e-5 && (rat(&pr) - p).abs() < 1e-12,
        "513/648 gave {p}"
    );

    // Full explanation-quality table, rows Correctness/Completeness/Complexity
    // by Position/Cause/Change, columns S, S+D, S+M, S+D+M.
    let table: [[[usize; 4]; 3]; 3] = [
        [[12, 12, 13, 14], [14, 13, 12, 12], [7, 9, 5, 7]],
        [[13, 15, 12, 15], [18, 15, 16, 15], [13, 16, 13, 16]],
        [[2, 2, 1, 1], [2, 2, 1, 1], [8, 7, 8, 6]],
    ];
    let mut sheets = Vec::new();
    for (ci, config) in PromptConfig::ALL.into_iter().enumerate() {
        for i in 0..18 {
            let mut sheet = RubricSheet {
                bundle_id: format!("b{i:02}"),
                config,
                rater: "consensus".into(),
                judgments: [[false; 3]; 3],
            };
            for (ki, criterion) in Criterion::ALL.into_iter().enumerate() {
                for (ei, element) in Element::ALL.into_iter().enumerate() {
                    sheet.set(element, criterion, i < table[ki][ei][ci]);
                }
            }
            sheets.push(sheet);
        }
    }
    let counts = aggregate_rubrics(&sheets).map_err(|e| e.to_string())?;
    let s_column = [
        counts.get(Criterion::Correctness, Element::Position, PromptConfig::S),
        counts.get(Criterion::Completeness, Element::Cause, PromptConfig::S),
        counts.get(Criterion::Complexity, Element::Change, PromptConfig::S),
    ];
    ensure!(s_column == [12, 18, 8], "S column {s_column:?}");
    for (ki, criterion) in Criterion::ALL.into_iter().enumerate() {
        for (ei, element) in Element::ALL.into_iter().enumerate() {
            for (ci, config) in PromptConfig::ALL.into_iter().enumerate() {
                let got = counts.get(criterion, element, config);
                ensure!(got == table[ki][ei][ci], "{criterion}/{element}/{config}: {got}");
            }
        }
    }

    // A 2x2 table with 513 matches of 648 and balanced disagreements gives
    // kappa 0.48 to two places.
    let mut witness: Option<(usize, usize, usize, usize, usize, f64)> = None;
    for yy in 0..=513usize {
        for yn in 0..=135usize {
            let (nn, ny) = (513 - yy, 135 - yn);
            let a: Vec<bool> = [vec![true; yy + yn], vec![false; nn + ny]].concat();
            let b: Vec<bool> = [vec![true; yy], vec![false; yn + nn], vec![true; ny]].concat();
            if let Ok(k) = cohen_kappa::<f64>(&a, &b) {
                let skew = yn.abs_diff(ny);
                if (k - 0.48).abs() < 0.005 && witness.is_none_or(|(.., s, _)| skew < s) {
                    witness = Some((yy, yn, ny, nn, skew, k));
                }
            }
        }
    }
    let (yy, yn, ny, nn, _, k) = witness.ok_or("no table with 513/648 agreement reaches kappa 0.48")?;
    Ok(format!(
        "kappa 1, 1/3, 0; agreement {p:.4}; S column {s_column:?}; 513/648 is consistent with kappa {k:.3} ({yy}/{yn}/{ny}/{nn})"
    ))
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let bundles = desk();
    ensure!(bundles.len() == 6, "{} desk bundles", bundles.len());
    let report = run_experiment(&bundles, &ExperimentOptions::default(), &PerfectOracle).map_err(|e| e.to_string())?;
    for c in PromptConfig::ALL {
        ensure!(
            report.fixed_sets[&c].len() == 6,
            "{c} fixed {}",
            report.fixed_sets[&c].len()
        );
    }
    let mut problems = Vec::new();
    let mut killed = BTreeMap::new();
    for b in bundles.iter().filter(|b| b.symptom == Symptom::WO) {
        let records = &report.mutation_records[&b.id];
        let restoring: Vec<String> = enumerate_mutants(&b.buggy_circuit)
            .map_err(|e| e.to_string())?
            .into_iter()
            .filter(|m| run_tests(&m.circuit, &b.tests, 10_000).iter().all(|o| o.passed()))
            .map(|m| m.id)
            .collect();
        if restoring.is_empty() {
            problems.push(format!("{}: no single mutant restores the fix", b.id));
        }
        for id in restoring {
            match records.iter().find(|r| r.mutant_id == id) {
                Some(r) if r.status == MutationStatus::Killed => *killed.entry(b.id.clone()).or_insert(0) += 1,
                Some(r) => problems.push(format!("{}: {id} is {:?}", b.id, r.status)),
                None => problems.push(format!("{}: {id} has no record", b.id)),
            }
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    let killed: Vec<String> = killed.iter().map(|(id, n)| format!("{id} {n}")).collect();
    ensure!(
        problems.is_empty(),
        "fixed 6/6; {}; restoring mutants killed: {}",
        problems.join("; "),
        killed.join(", ")
    );
    Ok(format!(
        "fixed 6/6; restoring mutants killed: {}; {elapsed:.2?}",
        killed.join(", ")
    ))
}

fn main() {
    let criteria: [Check; 9] = [
        ("simulator matches dense matrix-product oracle", criterion_1),
        ("unitarity and norm preservation", criterion_2),
        ("Bell mutant enumeration against brute force", criterion_3),
        ("mutation status truth table", criterion_4),
        ("prompt headers and embedded records", criterion_5),
        ("replay pipeline determinism", criterion_6),
        ("synthetic provider extremes and corpus rates", criterion_7),
        ("agreement statistics and rubric aggregation", criterion_8),
        ("desk benchmark end to end", criterion_9),
    ];
    let mut failed = 0;
    for (i, (title, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {title}: {detail}", i + 1),
            Err(reason) => {
                failed += 1;
                println!("criterion {}: FAIL  {title}: {reason}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
