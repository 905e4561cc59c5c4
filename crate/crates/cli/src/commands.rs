//! Subcommand implementations.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sparsepipe::clashfree::{
    address_schedule, count_patterns, generate_connection_pattern, network_pattern_count,
    to_connection_pattern, validate_z_net, verify_clash_free, CfType, CheckLevel, ClashFreeSpec,
    PatternCount,
};
use sparsepipe::engine::{
    evaluate, init_model, kurtosis, load_checkpoint, weight_histogram, write_checkpoint,
    write_history_csv, History, SparseModel,
};
use sparsepipe::experiment::{build_patterns, run_experiment, Experiment, Method};
use sparsepipe::pipesim::{
    simulate as run_sim, storage_report, throughput_report, write_trace_csv, PipelineConfig,
};
use sparsepipe::rng;
use sparsepipe::stats::summarize;
use sparsepipe::topology::{junction_summary, JunctionPattern, NetworkConfig};

use crate::config::{RunConfig, Splits};
use crate::output::{write_atomic, write_json, write_resolved, write_text};
use crate::{CountArgs, Ctx, HistogramArgs, ReportArgs, SimulateArgs, VerifyArgs};

/// Stream for initial weights, kept in step with the experiment runner.
const INIT_STREAM: u64 = 1 << 32;

pub fn validate(ctx: &Ctx) -> Result<()> {
    let cfg = ctx.config()?;
    let net = cfg.network()?;
    let summary = junction_summary(&net);
    println!("junction  n_left  n_right  d_out  d_in  edges  density");
    for (j, s) in summary.junctions.iter().enumerate() {
        println!(
            "{}  {}  {}  {}  {}  {}  {}",
            j + 1,
            net.left_size(j),
            net.right_size(j),
            net.out_degrees()[j],
            s.in_degree,
            s.edges,
            s.density
        );
    }
    println!(
        "net density {} ({:.6})",
        summary.density, summary.density_f64
    );
    println!("trainable parameters {}", net.trainable_parameters());
    println!("method {}", cfg.method()?);
    println!("storage\n{}", storage_report(&net));
    if net.parallelism().is_some() {
        let report = validate_z_net(&net)?;
        print!("{report}");
        println!("cycles per input {}", report.cycles_per_input());
        if report.worst() == CheckLevel::Fail {
            bail!("parallelism configuration stalls");
        }
    }
    Ok(())
}

fn count_text(c: &PatternCount) -> String {
    if c.exact {
        c.value.to_string()
    } else {
        format!("<= {}", c.value)
    }
}

pub fn patterns_count(ctx: &Ctx, a: &CountArgs) -> Result<()> {
    let cf_type = CfType::from_number(a.cf_type)?;
    if let (Some(n_left), Some(n_right), Some(d_out), Some(z)) = (a.n_left, a.n_right, a.d_out, a.z)
    {
        ensure!(
            n_left > 0 && n_right > 0 && d_out > 0 && z > 0,
            "sizes must be positive"
        );
        ensure!(
            (n_left * d_out) % n_right == 0,
            "in-degree {n_left}*{d_out}/{n_right} is not an integer"
        );
        ensure!(n_left % z == 0, "z={z} does not divide {n_left}");
        let c = count_patterns(
            n_left / z,
            z,
            d_out,
            n_left * d_out / n_right,
            cf_type,
            a.dither,
        );
        println!("{}", count_text(&c));
        return Ok(());
    }
    let cfg = ctx
        .config()
        .context("pass --n-left, --n-right, --d-out and --z, or --config")?;
    let net = cfg.network()?;
    let z = net
        .parallelism()
        .context("network.parallelism is required for counting")?;
    let mut per = Vec::new();
    for j in 0..net.num_junctions() {
        ensure!(
            net.left_size(j) % z[j] == 0,
            "junction {}: z={} does not divide {}",
            j + 1,
            z[j],
            net.left_size(j)
        );
        let c = count_patterns(
            net.left_size(j) / z[j],
            z[j],
            net.out_degrees()[j],
            net.in_degree(j),
            cf_type,
            a.dither,
        );
        println!("junction {} {}", j + 1, count_text(&c));
        per.push(c);
    }
    println!("network {}", count_text(&network_pattern_count(&per)));
    Ok(())
}

pub fn patterns_gen(ctx: &Ctx) -> Result<()> {
    let cfg = ctx.config()?;
    let net = cfg.network()?;
    let method = cfg.method()?;
    let data = if method == Method::Attention {
        Some(cfg.load_data()?)
    } else {
        None
    };
    let patterns = build_patterns(&net, method, data.as_ref().map(|d| &d.train), cfg.seed)?;
    for (j, p) in patterns.iter().enumerate() {
        let path = ctx.out.join(format!("junction{}.pattern", j + 1));
        write_text(&path, &p.to_text())?;
        if let Method::ClashFree { cf_type, dither } = method {
            if !net.is_fully_connected(j) {
                let z = net.parallelism().expect("resolved")[j];
                let (nl, nr, d) = (net.left_size(j), net.right_size(j), net.out_degrees()[j]);
                let (spec, again) = generate_connection_pattern(
                    nl,
                    nr,
                    d,
                    z,
                    cf_type,
                    dither,
                    rng::derive(cfg.seed, j as u64),
                )?;
                debug_assert!(again.same_connections(p));
                write_text(
                    &ctx.out.join(format!("junction{}.spec", j + 1)),
                    &spec.to_text(),
                )?;
            }
        }
        println!("{} ({} edges)", path.display(), p.edge_count());
    }
    write_resolved(&ctx.out, cfg)
}

pub fn patterns_verify(a: &VerifyArgs) -> Result<()> {
    let open = |p: &Path| {
        fs::File::open(p)
            .with_context(|| format!("opening {}", p.display()))
            .map(BufReader::new)
    };
    let spec = ClashFreeSpec::read_from(open(&a.spec)?)?;
    if let Err(v) = verify_clash_free(&address_schedule(&spec)) {
        for x in v.iter().take(10) {
            eprintln!("{x}");
        }
        bail!("{} clash-freedom violations", v.len());
    }
    println!(
        "spec ok: type {}, z={}, D={}, {} cycles",
        spec.cf_type(),
        spec.z(),
        spec.depth(),
        spec.cycles()
    );
    if let Some(pp) = &a.pattern {
        let p = JunctionPattern::read_from(open(pp)?)?;
        ensure!(
            p.n_left() == spec.n_left(),
            "pattern has {} left neurons, spec {}",
            p.n_left(),
            spec.n_left()
        );
        let implied = to_connection_pattern(&spec, p.in_degree(0), p.n_right())?;
        ensure!(
            implied.same_connections(&p),
            "pattern does not follow the spec's access order"
        );
        println!("pattern ok: {} edges", p.edge_count());
    }
    Ok(())
}

struct Trained {
    model: SparseModel,
    history: History,
    test_acc: f64,
    density: f64,
}

fn train_one(
    cfg: &RunConfig,
    net: &NetworkConfig,
    method: Method,
    seed: u64,
    data: &Splits,
) -> Result<Trained> {
    let mut train = cfg.train_config()?;
    train.seed = seed;
    if train.epochs == 0 {
        let patterns = build_patterns(net, method, Some(&data.train), seed)?;
        let model = init_model(
            patterns,
            net.layer_sizes().to_vec(),
            rng::derive(seed, INIT_STREAM),
            cfg.train.bias_init,
        )?;
        let edges: usize = model.weights.iter().map(Vec::len).sum();
        let full: usize = net.layer_sizes().windows(2).map(|w| w[0] * w[1]).sum();
        return Ok(Trained {
            test_acc: evaluate(&model, &data.test, 1)?,
            model,
            history: History::default(),
            density: edges as f64 / full as f64,
        });
    }
    let exp = Experiment {
        network: net.clone(),
        method,
        train,
        bias_init: cfg.train.bias_init,
        seed,
    };
    let r = run_experiment(&exp, &data.train, &data.val, &data.test)?;
    Ok(Trained {
        model: r.model,
        history: r.history,
        test_acc: r.test_acc,
        density: r.density,
    })
}

fn save_model(path: &Path, m: &SparseModel) -> Result<()> {
    write_atomic(path, |b| Ok(write_checkpoint(m, b)?))
}

pub fn train(ctx: &Ctx) -> Result<()> {
    let cfg = ctx.config()?;
    let net = cfg.network()?;
    let method = cfg.method()?;
    let data = cfg.load_data()?;
    info!(
        "training {method} on {} samples for {} epochs",
        data.train.len(),
        cfg.train.epochs
    );
    let t = train_one(cfg, &net, method, cfg.seed, &data)?;
    if let Some(d) = &t.history.diverged {
        warn!("training diverged: {d}");
    }
    save_model(&ctx.out.join("model.ckpt"), &t.model)?;
    write_atomic(&ctx.out.join("history.csv"), |b| {
        Ok(write_history_csv(&t.history, b)?)
    })?;
    let last = t.history.last();
    write_json(
        &ctx.out.join("summary.json"),
        &json!({
            "method": method.to_string(),
            "layer_sizes": net.layer_sizes(),
            "out_degrees": net.out_degrees(),
            "density": t.density,
            "seed": cfg.seed,
            "epochs": t.history.records.len(),
            "test_acc": t.test_acc,
            "val_acc": last.map(|r| r.val_acc),
            "train_loss": last.map(|r| r.train_loss),
            "diverged": t.history.diverged,
        }),
    )?;
    write_resolved(&ctx.out, cfg)?;
    println!("test accuracy {:.4}", t.test_acc);
    Ok(())
}

pub fn simulate(ctx: &Ctx, a: &SimulateArgs) -> Result<()> {
    let cfg = ctx.config()?;
    let net = cfg.network()?;
    ensure!(
        net.parallelism().is_some(),
        "simulation needs network.parallelism"
    );
    let mut run_cfg = cfg.clone();
    if let Some(m) = &a.mode {
        run_cfg.pipeline.mode = m.clone();
    }
    let mode = run_cfg.mode()?;
    let n = a.inputs.unwrap_or(cfg.pipeline.inputs);
    ensure!(n > 0, "need at least one input");
    let cf_type = CfType::from_number(cfg.pipeline.cf_type)?;
    let (mut pcfg, patterns) = PipelineConfig::generate(
        net.clone(),
        cf_type,
        cfg.pipeline.dither,
        cfg.pipeline.flush.clone(),
        mode,
        cfg.seed,
    )?;
    pcfg.record_accesses = a.trace;
    let model = match &a.checkpoint {
        Some(p) => load_checkpoint(p).with_context(|| format!("loading {}", p.display()))?,
        None => init_model(
            patterns,
            net.layer_sizes().to_vec(),
            rng::derive(cfg.seed, INIT_STREAM),
            cfg.train.bias_init,
        )?,
    };
    let data = cfg.load_data()?;
    let idx: Vec<usize> = (0..n).map(|i| i % data.train.len()).collect();
    let xs: Vec<&[f64]> = idx.iter().map(|&i| data.train.sample(i)).collect();
    let ys: Vec<usize> = idx.iter().map(|&i| data.train.label(i)).collect();
    let out = run_sim(&model, &pcfg, &cfg.train_config()?, &xs, &ys)?;
    let tp = throughput_report(&out.trace);
    println!("{tp}");
    let storage = storage_report(&net);
    let live: Vec<_> = out
        .trace
        .max_live
        .iter()
        .map(|((bank, layer), v)| json!({"bank": bank.prefix(), "layer": layer, "max_live": v}))
        .collect();
    let mean_loss = out.losses.iter().sum::<f64>() / out.losses.len() as f64;
    write_json(
        &ctx.out.join("summary.json"),
        &json!({
            "mode": run_cfg.pipeline.mode,
            "inputs": n,
            "slot_cycles": tp.slot_cycles,
            "junction_cycles": tp.junction_cycles,
            "cycles_per_input": tp.cycles_per_input,
            "fill_latency_cycles": tp.fill_latency_cycles,
            "total_cycles": tp.total_cycles,
            "storage": {
                "activations": storage.activations,
                "activation_derivatives": storage.activation_derivatives,
                "deltas": storage.deltas,
                "biases": storage.biases,
                "weights": storage.weights,
                "total": storage.total,
            },
            "max_live": live,
            "mean_loss": mean_loss,
            "losses": out.losses,
            "accesses": out.trace.accesses.len(),
        }),
    )?;
    if a.trace {
        write_atomic(&ctx.out.join("trace.csv"), |b| {
            Ok(write_trace_csv(&out.trace, b)?)
        })?;
    }
    save_model(&ctx.out.join("model.ckpt"), &out.model)?;
    write_resolved(&ctx.out, &run_cfg)
}

/// One line of a sweep file: a single run or the aggregate over its repetitions.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SweepRow {
    pub kind: String,
    pub method: String,
    pub out_degrees: String,
    pub rep: Option<usize>,
    pub seed: Option<u64>,
    pub density: Option<f64>,
    pub test_acc: Option<f64>,
    pub val_acc: Option<f64>,
    pub n: Option<usize>,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub ci90: Option<f64>,
    pub error: Option<String>,
}

fn join_degrees(d: &[usize]) -> String {
    d.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("-")
}

fn sweep_rows(cfg: &RunConfig, data: &Splits, jobs: Option<usize>) -> Result<Vec<SweepRow>> {
    let degrees = if cfg.sweep.out_degrees.is_empty() {
        vec![cfg.network()?.out_degrees().to_vec()]
    } else {
        cfg.sweep.out_degrees.clone()
    };
    let methods: Vec<Method> = if cfg.sweep.methods.is_empty() {
        vec![cfg.method()?]
    } else {
        cfg.sweep
            .methods
            .iter()
            .map(|m| m.parse())
            .collect::<Result<_, _>>()?
    };
    let mut grid = Vec::new();
    for d in &degrees {
        for &m in &methods {
            for rep in 0..cfg.sweep.reps {
                grid.push((d.clone(), m, rep));
            }
        }
    }
    info!("sweep: {} runs", grid.len());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()?;
    let runs: Vec<SweepRow> = pool.install(|| {
        grid.par_iter()
            .map(|(d, m, rep)| {
                let seed = rng::derive(cfg.seed, *rep as u64);
                let mut row = SweepRow {
                    kind: "run".into(),
                    method: m.to_string(),
                    out_degrees: join_degrees(d),
                    rep: Some(*rep),
                    seed: Some(seed),
                    ..SweepRow::default()
                };
                let res = cfg
                    .network_with(d.clone())
                    .and_then(|net| train_one(cfg, &net, *m, seed, data));
                match res {
                    Ok(t) => {
                        row.density = Some(t.density);
                        row.test_acc = Some(t.test_acc);
                        row.val_acc = t.history.last().map(|r| r.val_acc);
                        row.error = t.history.diverged;
                    }
                    Err(e) => {
                        warn!("{} {} rep {rep}: {e:#}", row.method, row.out_degrees);
                        row.error = Some(format!("{e:#}"));
                    }
                }
                row
            })
            .collect()
    });
    let mut groups: BTreeMap<(String, String), Vec<&SweepRow>> = BTreeMap::new();
    for r in &runs {
        groups
            .entry((r.method.clone(), r.out_degrees.clone()))
            .or_default()
            .push(r);
    }
    let mut aggregates = Vec::new();
    for ((method, out_degrees), rows) in groups {
        let accs: Vec<f64> = rows
            .iter()
            .filter(|r| r.error.is_none())
            .filter_map(|r| r.test_acc)
            .collect();
        let s = summarize(&accs);
        aggregates.push(SweepRow {
            kind: "aggregate".into(),
            method,
            out_degrees,
            density: rows.iter().find_map(|r| r.density),
            n: Some(s.n),
            mean: Some(s.mean),
            std: Some(s.std),
            ci90: Some(s.ci90),
            error: (accs.len() < rows.len())
                .then(|| format!("{} of {} runs failed", rows.len() - accs.len(), rows.len())),
            ..SweepRow::default()
        });
    }
    Ok(runs.into_iter().chain(aggregates).collect())
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    write_atomic(path, |b| {
        let mut w = csv::Writer::from_writer(b);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    })
}

pub fn sweep(ctx: &Ctx) -> Result<()> {
    let cfg = ctx.config()?;
    let data = cfg.load_data()?;
    let rows = sweep_rows(cfg, &data, ctx.jobs)?;
    let path = ctx.out.join("sweep.csv");
    write_rows(&path, &rows)?;
    write_resolved(&ctx.out, cfg)?;
    for r in rows.iter().filter(|r| r.kind == "aggregate") {
        println!(
            "{} {}: mean {:.4} ± {:.4} (n={})",
            r.method,
            r.out_degrees,
            r.mean.unwrap_or(f64::NAN),
            r.ci90.unwrap_or(f64::NAN),
            r.n.unwrap_or(0)
        );
    }
    println!("{}", path.display());
    Ok(())
}

pub fn histogram(ctx: &Ctx, a: &HistogramArgs) -> Result<()> {
    let model = load_checkpoint(&a.checkpoint)
        .with_context(|| format!("loading {}", a.checkpoint.display()))?;
    let hists = weight_histogram(&model, a.bins, (a.lo, a.hi))?;
    write_atomic(&ctx.out.join("histogram.csv"), |b| {
        let mut w = csv::Writer::from_writer(b);
        w.write_record(["junction", "bin_start", "bin_end", "count"])?;
        for (j, h) in hists.iter().enumerate() {
            for (i, c) in h.counts.iter().enumerate() {
                let end = if i + 1 == h.counts.len() {
                    h.hi
                } else {
                    h.bin_start(i + 1)
                };
                w.write_record([
                    (j + 1).to_string(),
                    h.bin_start(i).to_string(),
                    end.to_string(),
                    c.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    })?;
    write_atomic(&ctx.out.join("histogram_summary.csv"), |b| {
        let mut w = csv::Writer::from_writer(b);
        w.write_record(["junction", "weights", "kurtosis", "underflow", "overflow"])?;
        for (j, h) in hists.iter().enumerate() {
            let k = kurtosis(&model.weights[j]);
            println!(
                "junction {}: {} weights, kurtosis {k:.4}",
                j + 1,
                model.weights[j].len()
            );
            w.write_record([
                (j + 1).to_string(),
                model.weights[j].len().to_string(),
                k.to_string(),
                h.underflow.to_string(),
                h.overflow.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    })
}

struct ReportRow {
    source: String,
    row: SweepRow,
}

fn from_run_dir(dir: &Path) -> Result<SweepRow> {
    let path = dir.join("summary.json");
    let v: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?,
    )?;
    let degrees: Vec<usize> =
        serde_json::from_value(v["out_degrees"].clone()).context("summary has no out_degrees")?;
    Ok(SweepRow {
        kind: "run".into(),
        method: v["method"].as_str().unwrap_or_default().into(),
        out_degrees: join_degrees(&degrees),
        seed: v["seed"].as_u64(),
        density: v["density"].as_f64(),
        test_acc: v["test_acc"].as_f64(),
        val_acc: v["val_acc"].as_f64(),
        error: v["diverged"].as_str().map(String::from),
        ..SweepRow::default()
    })
}

pub fn report(ctx: &Ctx, a: &ReportArgs) -> Result<()> {
    let mut rows = Vec::new();
    for input in &a.inputs {
        let source = input.display().to_string();
        if input.is_dir() {
            rows.push(ReportRow {
                source,
                row: from_run_dir(input)?,
            });
        } else {
            let mut r = csv::Reader::from_path(input)
                .with_context(|| format!("reading {}", input.display()))?;
            for row in r.deserialize::<SweepRow>() {
                rows.push(ReportRow {
                    source: source.clone(),
                    row: row.with_context(|| format!("in {}", input.display()))?,
                });
            }
        }
    }
    let path: PathBuf = ctx.out.join("report.csv");
    write_atomic(&path, |b| {
        let mut w = csv::Writer::from_writer(b);
        w.write_record([
            "source",
            "kind",
            "method",
            "out_degrees",
            "rep",
            "seed",
            "density",
            "test_acc",
            "val_acc",
            "n",
            "mean",
            "std",
            "ci90",
            "error",
        ])?;
        let o = |v: Option<String>| v.unwrap_or_default();
        for ReportRow { source, row: r } in &rows {
            w.write_record([
                source.clone(),
                r.kind.clone(),
                r.method.clone(),
                r.out_degrees.clone(),
                o(r.rep.map(|v| v.to_string())),
                o(r.seed.map(|v| v.to_string())),
                o(r.density.map(|v| v.to_string())),
                o(r.test_acc.map(|v| v.to_string())),
                o(r.val_acc.map(|v| v.to_string())),
                o(r.n.map(|v| v.to_string())),
                o(r.mean.map(|v| v.to_string())),
                o(r.std.map(|v| v.to_string())),
                o(r.ci90.map(|v| v.to_string())),
                o(r.error.clone()),
            ])?;
        }
        w.flush()?;
        Ok(())
    })?;
    println!("{} rows -> {}", rows.len(), path.display());
    Ok(())
}
