use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use bregpart::bench::{bench_run, write_csv_report, write_json_report, Mode};
use bregpart::dataio::{read_dataset, write_dataset, DataFormat};
use bregpart::engine::{Index, Partitions, SearchConfig};
use bregpart::error::{Error, Result};
use bregpart_core::data::Matrix;
use bregpart_core::{DivergenceKind, DivergenceSpec};
use clap::{Parser, Subcommand};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "bregpart", about = "Partitioned disk-resident kNN search under Bregman divergences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct BuildOpts {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "fvecs")]
    format: String,
    /// One of: se, mahalanobis, isd, exp.
    #[arg(long, default_value = "se")]
    divergence: String,
    /// Comma-separated per-dimension weights (mahalanobis only).
    #[arg(long)]
    weights: Option<String>,
    /// "auto" or a fixed partition count.
    #[arg(long, default_value = "auto")]
    partitions: String,
    #[arg(long, default_value = "on")]
    correlated: String,
    #[arg(long, default_value_t = bregpart::engine::DEFAULT_LEAF_CAPACITY)]
    leaf_capacity: usize,
    #[arg(long, default_value_t = bregpart::store::DEFAULT_PAGE_SIZE)]
    page_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = bregpart::engine::DEFAULT_FIT_SAMPLES)]
    fit_samples: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Build an index file from a dataset.
    Build {
        #[command(flatten)]
        opts: BuildOpts,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run kNN queries against an index and print results.
    Query {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long, default_value = "fvecs")]
        format: String,
        #[arg(long)]
        k: usize,
        /// Probability guarantee in (0,1]; omit for exact search.
        #[arg(long)]
        approx: Option<f64>,
    },
    /// Run a benchmark sweep of queries x k x modes and write reports.
    Bench {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long, default_value = "fvecs")]
        format: String,
        /// Comma-separated list, e.g. 20,40,60,80,100.
        #[arg(long)]
        k: String,
        /// Comma-separated, e.g. exact,approx:0.8,approx:0.9.
        #[arg(long, default_value = "exact")]
        modes: String,
        /// CSV output path; a .json twin is written alongside.
        #[arg(long)]
        out: PathBuf,
    },
    /// Build indexes across a range of partition counts and report mean
    /// query cost at each.
    SweepM {
        #[command(flatten)]
        opts: BuildOpts,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long, default_value_t = 20)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        min: usize,
        #[arg(long)]
        max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print an index file's header fields.
    Stats {
        #[arg(long)]
        index: PathBuf,
    },
    /// Extract a seeded random query sample; optionally write the
    /// remaining rows for use as the build input.
    SampleQueries {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "fvecs")]
        format: String,
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        rest: Option<PathBuf>,
    },
}

fn parse_spec(divergence: &str, weights: Option<&str>, d: usize) -> Result<DivergenceSpec> {
    let kind = DivergenceKind::from_str(divergence)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown divergence {divergence:?}")))?;
    match kind {
        DivergenceKind::DiagonalMahalanobis => {
            let ws = weights.ok_or_else(|| {
                Error::InvalidArgument("mahalanobis requires --weights".into())
            })?;
            let ws: std::result::Result<Vec<f64>, _> =
                ws.split(',').map(|s| s.trim().parse::<f64>()).collect();
            let ws = ws.map_err(|_| Error::InvalidArgument("bad --weights list".into()))?;
            if ws.len() != d {
                return Err(Error::InvalidArgument(format!(
                    "--weights has {} entries, dataset has {d} dimensions",
                    ws.len()
                )));
            }
            Ok(DivergenceSpec::mahalanobis(ws)?)
        }
        other => {
            if weights.is_some() {
                return Err(Error::InvalidArgument("--weights only applies to mahalanobis".into()));
            }
            Ok(DivergenceSpec::new(other)?)
        }
    }
}

fn parse_partitions(s: &str) -> Result<Partitions> {
    if s == "auto" {
        return Ok(Partitions::Auto);
    }
    s.parse::<usize>()
        .map(Partitions::Fixed)
        .map_err(|_| Error::InvalidArgument(format!("--partitions must be \"auto\" or a count, got {s:?}")))
}

fn parse_flag(s: &str, name: &str) -> Result<bool> {
    match s {
        "on" => Ok(true),
        "off" => Ok(false),
        other => Err(Error::InvalidArgument(format!("--{name} must be on|off, got {other:?}"))),
    }
}

fn build_config(opts: &BuildOpts, data: &Matrix) -> Result<SearchConfig> {
    let spec = parse_spec(&opts.divergence, opts.weights.as_deref(), data.cols())?;
    let mut cfg = SearchConfig::new(spec);
    cfg.partitions = parse_partitions(&opts.partitions)?;
    cfg.correlated = parse_flag(&opts.correlated, "correlated")?;
    cfg.leaf_capacity = opts.leaf_capacity;
    cfg.page_size = opts.page_size;
    cfg.seed = opts.seed;
    cfg.fit_samples = opts.fit_samples;
    Ok(cfg)
}

fn parse_k_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidArgument(format!("bad k value {t:?}")))
        })
        .collect()
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Build { opts, out } => {
            let data = read_dataset(&opts.input, DataFormat::parse(&opts.format)?)?;
            let cfg = build_config(&opts, &data)?;
            let t0 = Instant::now();
            let index = Index::build(&data, &cfg)?;
            let build_s = t0.elapsed().as_secs_f64();
            index.save(&out)?;
            println!(
                "built index: n={} d={} M={} pages={} trees={} in {build_s:.2}s -> {}",
                index.n(),
                index.d(),
                index.m(),
                index.page_count(),
                index.m(),
                out.display()
            );
        }
        Command::Query { index, queries, format, k, approx } => {
            let t0 = Instant::now();
            let index = Index::open(&index)?;
            let load_s = t0.elapsed().as_secs_f64();
            let qs = read_dataset(&queries, DataFormat::parse(&format)?)?;
            eprintln!("index loaded in {load_s:.3}s; {} queries", qs.rows());
            for (qi, y) in qs.iter_rows().enumerate() {
                let (res, report) = match approx {
                    None => index.knn_search(y, k)?,
                    Some(p) => index.approx_knn_search(y, k, p)?,
                };
                let ids: Vec<String> =
                    res.iter().map(|r| format!("{}:{:.6}", r.id, r.distance)).collect();
                println!(
                    "query {qi}: candidates={} pages_read={} elapsed_us={}{} | {}",
                    report.candidates,
                    report.pages_read,
                    report.elapsed_us,
                    if report.shortfall { " shortfall" } else { "" },
                    ids.join(" ")
                );
            }
        }
        Command::Bench { index, queries, format, k, modes, out } => {
            let t0 = Instant::now();
            let index = Index::open(&index)?;
            let load_s = t0.elapsed().as_secs_f64();
            let qs = read_dataset(&queries, DataFormat::parse(&format)?)?;
            if qs.rows() == 0 {
                eprintln!("warning: empty query file, writing empty report");
            }
            let ks = parse_k_list(&k)?;
            let modes: Result<Vec<Mode>> = modes.split(',').map(Mode::parse).collect();
            let report = bench_run(&index, &qs, &ks, &modes?)?;
            write_csv_report(&out, &report)?;
            write_json_report(&out.with_extension("json"), &report)?;
            let a = &report.aggregate;
            println!(
                "index load {load_s:.3}s | {} rows | mean candidates {:.1} | mean pages {:.1} | mean elapsed {:.0}us | mean OR {}",
                a.rows,
                a.mean_candidates,
                a.mean_pages_read,
                a.mean_elapsed_us,
                a.mean_overall_ratio.map_or("n/a".into(), |v| format!("{v:.4}")),
            );
        }
        Command::SweepM { opts, queries, k, min, max, out } => {
            let data = read_dataset(&opts.input, DataFormat::parse(&opts.format)?)?;
            let qs = read_dataset(&queries, DataFormat::parse(&opts.format)?)?;
            if min == 0 || max < min || max > data.cols() {
                return Err(Error::InvalidArgument(format!(
                    "bad sweep range [{min}, {max}] for d={}",
                    data.cols()
                )));
            }
            // Powers of two within [min, max], plus the endpoints.
            let mut ms: Vec<usize> = std::iter::successors(Some(1usize), |m| m.checked_mul(2))
                .take_while(|&m| m <= max)
                .filter(|&m| m >= min)
                .collect();
            for e in [min, max] {
                if !ms.contains(&e) {
                    ms.push(e);
                }
            }
            ms.sort_unstable();
            let mut csv = String::from("m,mean_candidates,mean_pages_read,mean_elapsed_us\n");
            println!("m,mean_candidates,mean_pages_read,mean_elapsed_us");
            for m in ms {
                let mut cfg = build_config(&opts, &data)?;
                cfg.partitions = Partitions::Fixed(m);
                let index = Index::build(&data, &cfg)?;
                let report = bench_run(&index, &qs, &[k], &[Mode::Exact])?;
                let a = &report.aggregate;
                let line = format!(
                    "{m},{:.2},{:.2},{:.0}",
                    a.mean_candidates, a.mean_pages_read, a.mean_elapsed_us
                );
                println!("{line}");
                csv.push_str(&line);
                csv.push('\n');
            }
            if let Some(path) = out {
                std::fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;
            }
        }
        Command::Stats { index } => {
            let index = Index::open(&index)?;
            println!("records:        {}", index.n());
            println!("dimensions:     {}", index.d());
            println!("partitions:     {}", index.m());
            println!("divergence:     {}", index.spec().kind().as_str());
            println!("page size:      {}", index.page_size());
            println!("page count:     {}", index.page_count());
            println!("anchor tree:    {}", index.anchor());
            let widths: Vec<String> =
                (0..index.m()).map(|i| index.layout().width(i).to_string()).collect();
            println!("subspace widths: {}", widths.join(","));
            match index.params() {
                None => println!("cost model:     none (fixed partition count)"),
                Some(p) => println!(
                    "cost model:     A={:.4e} alpha={:.4} beta={:.4e}{}",
                    p.a,
                    p.alpha,
                    p.beta,
                    if p.degenerate_fit { " (degenerate fit)" } else { "" }
                ),
            }
        }
        Command::SampleQueries { input, format, count, seed, out, rest } => {
            let format = DataFormat::parse(&format)?;
            let data = read_dataset(&input, format)?;
            if count > data.rows() {
                return Err(Error::InvalidArgument(format!(
                    "cannot sample {count} rows from {}",
                    data.rows()
                )));
            }
            let mut ids: Vec<usize> = (0..data.rows()).collect();
            ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let (picked, remaining) = ids.split_at(count);
            let mut picked = picked.to_vec();
            let mut remaining = remaining.to_vec();
            picked.sort_unstable();
            remaining.sort_unstable();
            let take = |ids: &[usize]| {
                Matrix::from_rows(&ids.iter().map(|&i| data.row(i).to_vec()).collect::<Vec<_>>())
            };
            write_dataset(&out, format, &take(&picked)?)?;
            println!("wrote {count} queries -> {}", out.display());
            if let Some(rest_path) = rest {
                write_dataset(&rest_path, format, &take(&remaining)?)?;
                println!("wrote {} remaining rows -> {}", remaining.len(), rest_path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
