use std::fs;
use std::path::{Path, PathBuf};

use gsicast_core::gsi::{emit_config_file, parse_config_file, EndpointConfig};
use gsicast_core::models::{LstmArch, MlpArch, ModelKind, SplitMode, SplitSpec, TrainConfig, TrainedModel, TrainingReport};
use gsicast_core::pipeline::{self, DatasetRequest, FeatureMode, MODEL_FILE, REPORT_FILE};
use gsicast_core::session::{write_atomic, CSV_FILE};
use gsicast_core::table::NumericTable;
use gsicast_core::windowing::latest_window;
use gsicast_server::app::{JOBS_DIR, SESSIONS_DIR};
use gsicast_server::ServerConfig;
use gsicast_sim::SimConfig;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::*;
use crate::error::CliError;
use crate::grid;

pub type Output = Result<String, CliError>;

fn pretty<T: Serialize>(v: &T) -> Output {
    Ok(serde_json::to_string_pretty(v)?)
}

fn endpoint(config: Option<&Path>, args: &EndpointArgs) -> Result<EndpointConfig, CliError> {
    let mut ep = match config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            let mut parsed = parse_config_file(&text)?;
            if parsed.uri.is_empty() {
                parsed.uri = EndpointConfig::default().uri;
            }
            parsed
        }
        None => EndpointConfig::default(),
    };
    if let Some(uri) = &args.uri {
        ep.uri = uri.clone();
    }
    for (slot, value) in [
        (&mut ep.timeout_s, args.timeout),
        (&mut ep.buffer_s, args.buffer),
        (&mut ep.throttle_s, args.throttle),
        (&mut ep.heartbeat_s, args.heartbeat),
    ] {
        if let Some(v) = value {
            *slot = v;
        }
    }
    if args.auth_token.is_some() {
        ep.auth_token = args.auth_token.clone();
    }
    ep.validate()?;
    Ok(ep)
}

pub fn serve(cli: &Cli, args: &ServeArgs) -> Output {
    let ep = endpoint(cli.config.as_deref(), &args.endpoint)?;
    let mut cfg = ServerConfig::from_endpoint(&cli.data_dir, &ep)?;
    if args.workers == 0 {
        return Err(CliError::Validation("--workers must be at least 1".into()));
    }
    cfg.workers = args.workers;
    let server = gsicast_server::spawn(cfg)?;
    let banner = json!({
        "event": "listening",
        "addr": server.addr.to_string(),
        "ingest_path": ep.path(),
        "data_dir": cli.data_dir,
    });
    println!("{banner}");
    eprintln!("listening on {} (ingest path {}), data in {}", server.url(), ep.path(), cli.data_dir.display());
    let runtime = tokio::runtime::Builder::new_current_thread().enable_all().build()?;
    runtime.block_on(shutdown_signal());
    eprintln!("shutting down");
    server.stop();
    Ok(String::new())
}

async fn shutdown_signal() {
    #[cfg(unix)]
    {
        use tokio::signal::unix::{signal, SignalKind};
        match signal(SignalKind::terminate()) {
            Ok(mut term) => {
                tokio::select! {
                    _ = tokio::signal::ctrl_c() => {}
                    _ = term.recv() => {}
                }
            }
            Err(_) => {
                let _ = tokio::signal::ctrl_c().await;
            }
        }
    }
    #[cfg(not(unix))]
    {
        let _ = tokio::signal::ctrl_c().await;
    }
}

pub fn emit_config(cli: &Cli, args: &EmitConfigArgs) -> Output {
    let ep = endpoint(cli.config.as_deref(), &args.endpoint)?;
    let text = emit_config_file(&ep);
    if let Some(path) = &args.output {
        fs::write(path, &text)?;
        eprintln!("wrote {}", path.display());
    } else {
        eprint!("{text}");
    }
    pretty(&json!({ "endpoint": ep, "config": text, "output": args.output }))
}

pub fn simulate(cli: &Cli, args: &SimulateArgs) -> Output {
    let ep = endpoint(cli.config.as_deref(), &args.endpoint)?;
    let cfg = SimConfig {
        seed: args.seed,
        ticks: args.ticks,
        pregame_ticks: args.pregame_ticks,
        postgame_ticks: args.postgame_ticks,
        speedup: args.speedup,
        endpoint: ep.clone(),
        ..SimConfig::default()
    };
    cfg.validate()?;
    let api = format!("http://{}/v1", ep.socket_addr()?);
    let http = reqwest::blocking::Client::new();
    if let Some(id) = &args.session {
        let resp = http.post(format!("{api}/sessions")).json(&json!({ "session_id": id })).send()?;
        if !resp.status().is_success() {
            let status = resp.status();
            let body = resp.text().unwrap_or_default();
            return Err(CliError::Runtime(format!("starting session {id} failed ({status}): {body}")));
        }
    }
    let summary = gsicast_sim::run_client(&cfg);
    if let Some(id) = &args.session {
        let resp = http.delete(format!("{api}/sessions/{id}")).send()?;
        if !resp.status().is_success() {
            tracing::warn!(session = %id, status = %resp.status(), "stopping session failed");
        }
    }
    let summary = summary?;
    let path = args
        .summary
        .clone()
        .unwrap_or_else(|| cli.data_dir.join("simulations").join(format!("seed-{}.json", args.seed)));
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let text = serde_json::to_string_pretty(&summary)?;
    write_atomic(&path, text.as_bytes())?;
    eprintln!(
        "seed {}: {} posts, {} gate-passing, {} timeouts, {} resends, final gold {}; summary in {}",
        summary.seed,
        summary.posts,
        summary.gate_passing,
        summary.timeouts,
        summary.full_resends,
        summary.final_gold,
        path.display()
    );
    Ok(text)
}

struct Source {
    table: NumericTable,
    label: String,
    session_id: Option<String>,
}

fn load_source(cli: &Cli, src: &SourceArgs) -> Result<Source, CliError> {
    let (path, label, session_id) = match (&src.csv, &src.session) {
        (Some(csv), _) => {
            let stem = csv.file_stem().map_or("table".into(), |s| s.to_string_lossy().into_owned());
            (csv.clone(), stem, None)
        }
        (None, Some(id)) => (cli.data_dir.join(SESSIONS_DIR).join(id).join(CSV_FILE), id.clone(), Some(id.clone())),
        (None, None) => return Err(CliError::Validation("pass --csv or --session".into())),
    };
    if !path.is_file() {
        return Err(CliError::Validation(format!("no such table: {}", path.display())));
    }
    Ok(Source {
        table: pipeline::load_numeric(&path)?,
        label,
        session_id,
    })
}

fn dataset_request(w: &WindowArgs, lag: usize, horizon: usize) -> DatasetRequest {
    DatasetRequest {
        lag,
        horizon,
        target: w.target.clone(),
        features: match &w.features {
            Some(list) => FeatureMode::Fixed { features: list.clone() },
            None => FeatureMode::Ranked { k: w.top_k },
        },
    }
}

pub fn build_dataset(cli: &Cli, args: &DatasetArgs) -> Output {
    let src = load_source(cli, &args.source)?;
    let req = dataset_request(&args.window, args.window.lag, args.window.horizon);
    let prepared = pipeline::prepare(&src.table, &req, src.session_id)?;
    let out = args.out.clone().unwrap_or_else(|| {
        cli.data_dir
            .join("datasets")
            .join(format!("{}-L{}-d{}", src.label, req.lag, req.horizon))
    });
    prepared.write(&out)?;
    eprintln!(
        "{} raw rows -> X {}x{}, y {} (L={}, d={}) in {}",
        src.table.nrows(),
        prepared.dataset.x.nrows(),
        prepared.dataset.x.ncols(),
        prepared.dataset.len(),
        req.lag,
        req.horizon,
        out.display()
    );
    pretty(&json!({
        "dir": out,
        "raw_rows": src.table.nrows(),
        "samples": prepared.dataset.len(),
        "width": prepared.window.width(),
        "lag": req.lag,
        "horizon": req.horizon,
        "target": req.target,
        "features": prepared.window.features,
    }))
}

fn train_config(args: &TrainArgs) -> TrainConfig {
    let mut cfg = TrainConfig {
        epochs: args.epochs,
        batch_size: args.batch_size,
        seed: args.seed,
        split: SplitSpec {
            test_fraction: args.test_fraction,
            mode: match args.split {
                SplitArg::Chronological => SplitMode::ChronologicalTail,
                SplitArg::Shuffled => SplitMode::Shuffled { seed: args.split_seed },
            },
        },
        mlp: MlpArch {
            hidden: args.mlp_hidden.clone(),
            batch_norm: !args.no_batch_norm,
        },
        lstm: LstmArch {
            hidden: args.lstm_hidden.clone(),
        },
        ..TrainConfig::default()
    };
    cfg.adam.learning_rate = args.learning_rate;
    cfg
}

#[derive(Debug, Serialize)]
struct RunRow {
    model: ModelKind,
    lag: usize,
    horizon: usize,
    r2: f64,
    adjusted_r2: Option<f64>,
    score: f64,
    n_train: usize,
    n_test: usize,
    forecast: Option<f64>,
    dir: PathBuf,
}

fn summary_line(r: &TrainingReport) -> String {
    let adj = r.adjusted_r2.map_or("n/a".to_string(), |a| format!("{a:.4}"));
    format!(
        "{:<5} L={:<3} d={:<3} R2={:.4} adjR2={} test={} forecast={}",
        r.model.to_string(),
        r.window.lag,
        r.window.horizon,
        r.r2,
        adj,
        r.n_test,
        r.forecast.as_ref().map_or("n/a".to_string(), |f| format!("{:.1}", f.value))
    )
}

pub fn train(cli: &Cli, args: &TrainArgs) -> Output {
    let kinds = args
        .model
        .iter()
        .map(|m| m.parse::<ModelKind>())
        .collect::<Result<Vec<_>, _>>()?;
    if args.window.lag == 0 || args.window.horizon == 0 {
        return Err(CliError::Validation("--L and --d must be at least 1".into()));
    }
    let cfg = train_config(args);
    cfg.validate()?;
    let src = load_source(cli, &args.source)?;
    let root = args
        .out
        .clone()
        .unwrap_or_else(|| cli.data_dir.join("runs").join(&src.label));
    let windows = grid::expand(args.window.lag, args.window.horizon, &args.grid);
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for &kind in &kinds {
        for &(lag, horizon) in &windows {
            let req = dataset_request(&args.window, lag, horizon);
            let mut progress = |epoch: usize, total: usize| {
                if epoch % 10 == 0 || epoch == total {
                    tracing::info!(model = %kind, lag, horizon, epoch, total, "training");
                }
            };
            let (model, report) = pipeline::run(&src.table, &req, kind, &cfg, src.session_id.clone(), &mut progress)?;
            let dir = root.join(format!("{kind}-L{lag}-d{horizon}"));
            pipeline::write_outputs(&dir, &model, &report)?;
            eprintln!("{}", summary_line(&report));
            rows.push(RunRow {
                model: kind,
                lag,
                horizon,
                r2: report.r2,
                adjusted_r2: report.adjusted_r2,
                score: report.score,
                n_train: report.n_train,
                n_test: report.n_test,
                forecast: report.forecast.as_ref().map(|f| f.value),
                dir,
            });
            reports.push(report);
        }
    }
    if let [report] = reports.as_slice() {
        return Ok(report.to_json()?);
    }
    let table: serde_json::Map<String, Value> = kinds
        .iter()
        .map(|k| {
            let per: Vec<&RunRow> = rows.iter().filter(|r| r.model == *k).collect();
            (k.to_string(), serde_json::to_value(per).unwrap_or(Value::Null))
        })
        .collect();
    pretty(&json!({ "windows": windows, "table": table }))
}

fn locate(path: &Path, file: &str) -> PathBuf {
    if path.is_dir() {
        path.join(file)
    } else {
        path.to_path_buf()
    }
}

pub fn report(cli: &Cli, args: &ReportArgs) -> Output {
    let path = match (&args.path, &args.job) {
        (Some(p), _) => locate(p, REPORT_FILE),
        (None, Some(job)) => cli.data_dir.join(JOBS_DIR).join(job).join(REPORT_FILE),
        (None, None) => return Err(CliError::Validation("pass a report path or --job".into())),
    };
    if !path.is_file() {
        return Err(CliError::Validation(format!("no report at {}", path.display())));
    }
    let report = TrainingReport::read(&path)?;
    eprintln!("{}", summary_line(&report));
    Ok(report.to_json()?)
}

pub fn forecast(cli: &Cli, args: &ForecastArgs) -> Output {
    let path = locate(&args.model, MODEL_FILE);
    if !path.is_file() {
        return Err(CliError::Validation(format!("no model at {}", path.display())));
    }
    let model = TrainedModel::load(&path)?;
    let src = load_source(cli, &args.source)?;
    let window = latest_window(&src.table, &model.window)?;
    let value = model.forecast(&window)?;
    eprintln!(
        "{} forecast for {} {} steps past row {}: {value:.2}",
        model.kind(),
        model.window.target,
        model.window.horizon,
        src.table.nrows()
    );
    pretty(&json!({
        "model": model.kind(),
        "target": model.window.target,
        "horizon": model.window.horizon,
        "rows": src.table.nrows(),
        "value": value,
    }))
}
