use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context};
use serde::{Deserialize, Serialize};
use serde_json::json;

use heartfade::sim::{self, Preset, SimConfig, SimResult, StrategyKind};
use heartfade::{LabColor, Region};

use crate::output::{InputDigest, OutputSet, RunManifest};
use crate::{Cli, Command, Format};

pub const DEFAULT_SEED: u64 = 42;

pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

/// Bad input: missing files, parse errors, invalid configs.
fn input(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 2,
        error: error.into(),
    }
}

fn runtime(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 1,
        error: error.into(),
    }
}

type CmdResult = Result<(), Failure>;

pub fn parse_region(s: &str) -> Result<Region, String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x, y, w, h] => Ok(Region::new(x, y, w, h)),
        _ => Err(format!("expected x,y,w,h, got {s:?}")),
    }
}

pub fn parse_lab(s: &str) -> Result<LabColor, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [l, a, b] if v.iter().all(|x| x.is_finite()) => Ok(LabColor::new(l, a, b)),
        _ => Err(format!("expected L,a,b, got {s:?}")),
    }
}

fn read_input(path: &Path) -> Result<(Vec<u8>, InputDigest), Failure> {
    let bytes = fs::read(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(input)?;
    let digest = InputDigest::new(path, &bytes);
    Ok((bytes, digest))
}

fn manifest(cli: &Cli, command: &str, seed: u64, config: serde_json::Value, inputs: Vec<InputDigest>) -> RunManifest {
    RunManifest {
        command: command.to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        master_seed: seed,
        config: json!({ "format": format_name(cli.format), "args": config }),
        inputs,
        outputs: Vec::new(),
    }
}

fn format_name(f: Format) -> &'static str {
    match f {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    s
}

pub fn run(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Calibrate(a) => calibrate(cli, a),
        Command::Rate(a) => rate(cli, a),
        Command::Acceptability(a) => acceptability(cli, a),
        Command::Simulate(a) => simulate(cli, a),
        Command::Sweep(a) => sweep(cli, a),
    }
}

#[derive(Serialize)]
struct CalibratedRegion {
    region: usize,
    x: usize,
    y: usize,
    w: usize,
    h: usize,
    #[serde(rename = "L")]
    l: f64,
    a: f64,
    b: f64,
}

fn calibrate(cli: &Cli, args: &crate::CalibrateArgs) -> CmdResult {
    let (bytes, digest) = read_input(&args.image)?;
    let grid = heartfade::parse_ppm(&bytes)
        .with_context(|| format!("cannot decode {}", args.image.display()))
        .map_err(input)?;
    let board = heartfade::mean_lab_of_region(&grid, args.board, heartfade::LabOffset::zero())
        .context("board region")
        .map_err(input)?;
    let offset = heartfade::derive_calibration(board, args.reference);

    let mut rows = Vec::with_capacity(args.regions.len());
    for (i, r) in args.regions.iter().enumerate() {
        let lab = heartfade::mean_lab_of_region(&grid, *r, offset)
            .with_context(|| format!("heart region {}", i + 1))
            .map_err(input)?;
        rows.push(CalibratedRegion {
            region: i + 1,
            x: r.x,
            y: r.y,
            w: r.w,
            h: r.h,
            l: lab.l,
            a: lab.a,
            b: lab.b,
        });
    }

    let (name, text) = match cli.format {
        Format::Csv => {
            let mut s = String::from("region,x,y,w,h,L,a,b\n");
            for r in &rows {
                writeln!(
                    s,
                    "{},{},{},{},{},{},{},{}",
                    r.region, r.x, r.y, r.w, r.h, r.l, r.a, r.b
                )
                .unwrap();
            }
            ("calibrate.csv", s)
        }
        Format::Json => ("calibrate.json", to_json(&json!({ "offset": offset, "regions": rows }))),
    };

    let mut out = OutputSet::create(&cli.out).map_err(runtime)?;
    out.write(name, text.as_bytes()).map_err(runtime)?;
    let config = json!({
        "image": args.image.display().to_string(),
        "board": args.board,
        "reference": args.reference,
        "regions": args.regions,
        "observed_board": board,
        "offset": offset,
    });
    out.commit(manifest(
        cli,
        "calibrate",
        cli.seed.unwrap_or(DEFAULT_SEED),
        config,
        vec![digest],
    ))
    .map_err(runtime)?;
    print!("{text}");
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WindowEntry {
    heart_id: String,
    start_day: i64,
    end_day: i64,
}

#[derive(Serialize)]
struct HeartFit {
    heart_id: String,
    start_day: i64,
    end_day: i64,
    slope: f64,
    intercept: f64,
    r2: f64,
    n: usize,
}

#[derive(Serialize)]
struct Excluded {
    heart_id: String,
    reason: String,
}

fn rate(cli: &Cli, args: &crate::RateArgs) -> CmdResult {
    let (obs_bytes, obs_digest) = read_input(&args.observations)?;
    let (win_bytes, win_digest) = read_input(&args.windows)?;
    let observations = heartfade::load_observations(&obs_bytes)
        .with_context(|| format!("cannot parse {}", args.observations.display()))
        .map_err(input)?;
    let windows: Vec<WindowEntry> = serde_json::from_slice(&win_bytes)
        .with_context(|| format!("cannot parse {}", args.windows.display()))
        .map_err(input)?;

    let series = heartfade::build_series(&observations, args.baseline);
    let mut fits = Vec::new();
    let mut excluded = Vec::new();
    for s in &series {
        let Some(w) = windows.iter().find(|w| w.heart_id == s.heart_id) else {
            excluded.push(Excluded {
                heart_id: s.heart_id.clone(),
                reason: "no window".into(),
            });
            continue;
        };
        let window = heartfade::Window {
            start_day: w.start_day,
            end_day: w.end_day,
        };
        match heartfade::estimate_heart_rate(s, window) {
            Ok(f) => fits.push(HeartFit {
                heart_id: s.heart_id.clone(),
                start_day: w.start_day,
                end_day: w.end_day,
                slope: f.slope,
                intercept: f.intercept,
                r2: f.r2,
                n: f.n,
            }),
            Err(e) => excluded.push(Excluded {
                heart_id: s.heart_id.clone(),
                reason: e.to_string(),
            }),
        }
    }
    let line_fits: Vec<heartfade::LineFit> = fits
        .iter()
        .map(|f| heartfade::LineFit {
            slope: f.slope,
            intercept: f.intercept,
            r2: f.r2,
            n: f.n,
        })
        .collect();
    let aggregate = heartfade::aggregate_rates(&line_fits).map_err(|_| {
        let ids: Vec<&str> = excluded.iter().map(|e| e.heart_id.as_str()).collect();
        runtime(anyhow!("no fittable hearts (excluded: {})", ids.join(", ")))
    })?;

    let report = json!({
        "baseline": args.baseline,
        "fits": fits,
        "aggregate": aggregate,
        "excluded": excluded,
    });
    let text = to_json(&report);
    let mut out = OutputSet::create(&cli.out).map_err(runtime)?;
    out.write("rate.json", text.as_bytes()).map_err(runtime)?;
    let config = json!({
        "observations": args.observations.display().to_string(),
        "windows": args.windows.display().to_string(),
        "baseline": args.baseline,
    });
    out.commit(manifest(
        cli,
        "rate",
        cli.seed.unwrap_or(DEFAULT_SEED),
        config,
        vec![obs_digest, win_digest],
    ))
    .map_err(runtime)?;
    print!("{text}");
    Ok(())
}

fn acceptability(cli: &Cli, args: &crate::AcceptabilityArgs) -> CmdResult {
    let (bytes, digest) = read_input(&args.survey)?;
    let points = heartfade::load_survey(&bytes)
        .with_context(|| format!("cannot parse {}", args.survey.display()))
        .map_err(input)?;
    let fit = heartfade::fit_acceptability(&points).map_err(input)?;
    let thresholds = args
        .agreement
        .iter()
        .map(|&frac| {
            heartfade::threshold_for_agreement(&fit.curve, frac)
                .map(|delta_e| json!({ "frac_agree": frac, "delta_e": delta_e }))
                .map_err(input)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let curve: Vec<(f64, f64)> = (0..=100)
        .map(|d| {
            let x = f64::from(d);
            (x, heartfade::predict_agreement(&fit.curve, x))
        })
        .collect();
    let (curve_name, curve_text) = match cli.format {
        Format::Csv => {
            let mut s = String::from("delta_e,frac_agree\n");
            for (x, p) in &curve {
                writeln!(s, "{x},{p}").unwrap();
            }
            ("acceptability_curve.csv", s)
        }
        Format::Json => (
            "acceptability_curve.json",
            to_json(
                &curve
                    .iter()
                    .map(|(x, p)| json!({ "delta_e": x, "frac_agree": p }))
                    .collect::<Vec<_>>(),
            ),
        ),
    };

    let summary = to_json(&json!({
        "m": fit.curve.m,
        "s": fit.curve.s,
        "objective": fit.objective,
        "n_points": points.len(),
        "thresholds": thresholds,
    }));
    let mut out = OutputSet::create(&cli.out).map_err(runtime)?;
    out.write("acceptability.json", summary.as_bytes()).map_err(runtime)?;
    out.write(curve_name, curve_text.as_bytes()).map_err(runtime)?;
    let config = json!({
        "survey": args.survey.display().to_string(),
        "agreement": args.agreement,
    });
    out.commit(manifest(
        cli,
        "acceptability",
        cli.seed.unwrap_or(DEFAULT_SEED),
        config,
        vec![digest],
    ))
    .map_err(runtime)?;
    print!("{summary}");
    Ok(())
}

/// Resolves the base config from a preset, a JSON file, or the defaults.
fn resolve_config(
    cli: &Cli,
    config: Option<&Path>,
    preset: Option<&str>,
) -> Result<(SimConfig, Option<Preset>, Vec<InputDigest>), Failure> {
    let mut digests = Vec::new();
    let (mut cfg, preset) = match (config, preset) {
        (Some(path), _) => {
            let (bytes, digest) = read_input(path)?;
            digests.push(digest);
            let cfg: SimConfig = serde_json::from_slice(&bytes)
                .with_context(|| format!("cannot parse {}", path.display()))
                .map_err(input)?;
            (cfg, None)
        }
        (None, Some(name)) => {
            let p = Preset::parse(name).ok_or_else(|| {
                let names: Vec<_> = Preset::ALL.iter().map(|p| p.name()).collect();
                input(anyhow!("unknown preset {name:?} (available: {})", names.join(", ")))
            })?;
            (p.config(), Some(p))
        }
        (None, None) => (SimConfig::default(), None),
    };
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    cfg.validate().map_err(input)?;
    Ok((cfg, preset, digests))
}

fn trajectory_text(res: &SimResult, format: Format) -> String {
    match format {
        Format::Csv => {
            let mut s = String::from("day,mean_frac_above,lo_frac_above,hi_frac_above,cum_repaints\n");
            for r in &res.records {
                writeln!(
                    s,
                    "{},{},{},{},{}",
                    r.day, r.mean_frac_above, r.lo_frac_above, r.hi_frac_above, r.cum_repaints
                )
                .unwrap();
            }
            s
        }
        Format::Json => to_json(&res.records),
    }
}

fn simulate(cli: &Cli, args: &crate::SimulateArgs) -> CmdResult {
    let (cfg, preset, digests) = resolve_config(cli, args.config.as_deref(), args.preset.as_deref())?;
    let strategies: Vec<StrategyKind> = if !args.strategies.is_empty() {
        args.strategies
            .iter()
            .map(|s| StrategyKind::parse(s).ok_or_else(|| input(anyhow!("unknown strategy {s:?}"))))
            .collect::<Result<_, _>>()?
    } else if let Some(p) = preset {
        p.strategies()
    } else {
        vec![cfg.strategy]
    };

    let ext = match cli.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let mut out = OutputSet::create(&cli.out).map_err(runtime)?;
    let mut summaries = Vec::new();
    for &strategy in &strategies {
        let run_cfg = SimConfig {
            strategy,
            ..cfg.clone()
        };
        let res = sim::run_simulation(&run_cfg).map_err(input)?;
        out.write(
            &format!("trajectory_{}.{ext}", strategy.name()),
            trajectory_text(&res, cli.format).as_bytes(),
        )
        .map_err(runtime)?;
        println!(
            "{:<12} day {:>5}: {:.1}% above threshold [{:.1}%, {:.1}%], {:.0} agent repaints (~{:.0} hearts)",
            strategy.name(),
            res.summary.final_day,
            100.0 * res.summary.mean_frac_above,
            100.0 * res.summary.lo_frac_above,
            100.0 * res.summary.hi_frac_above,
            res.summary.mean_cum_repaints,
            res.summary.wall_hearts_repainted,
        );
        summaries.push(res.summary);
    }
    out.write_json("summary.json", &summaries).map_err(runtime)?;
    let config = json!({
        "preset": preset.map(Preset::name),
        "strategies": strategies,
        "sim": cfg,
    });
    out.commit(manifest(cli, "simulate", cfg.master_seed, config, digests))
        .map_err(runtime)
}

fn sweep(cli: &Cli, args: &crate::SweepArgs) -> CmdResult {
    let (cfg, preset, digests) = resolve_config(cli, args.config.as_deref(), args.preset.as_deref())?;
    let rows = sim::sweep_fractions(&cfg, &args.fractions, args.horizon).map_err(input)?;
    let hearts_per_agent = cfg.hearts_per_agent();
    let (name, text) = match cli.format {
        Format::Csv => {
            let mut s = String::from(
                "repaint_fraction_weekly,strategy,frac_needing_repaint_at_horizon,total_repaints_at_horizon,wall_hearts_repainted\n",
            );
            for r in &rows {
                writeln!(
                    s,
                    "{},{},{},{},{}",
                    r.repaint_fraction_weekly,
                    r.strategy,
                    r.frac_needing_repaint_at_horizon,
                    r.total_repaints_at_horizon,
                    r.total_repaints_at_horizon * hearts_per_agent
                )
                .unwrap();
            }
            ("sweep.csv", s)
        }
        Format::Json => ("sweep.json", to_json(&rows)),
    };
    let mut out = OutputSet::create(&cli.out).map_err(runtime)?;
    out.write(name, text.as_bytes()).map_err(runtime)?;
    let config = json!({
        "preset": preset.map(Preset::name),
        "fractions": args.fractions,
        "horizon_days": args.horizon,
        "sim": cfg,
    });
    out.commit(manifest(cli, "sweep", cfg.master_seed, config, digests))
        .map_err(runtime)?;
    print!("{text}");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn region_and_lab_arguments() {
        assert_eq!(parse_region("1, 2,3,4"), Ok(Region::new(1, 2, 3, 4)));
        assert!(parse_region("1,2,3").is_err());
        assert!(parse_region("1,2,3,-4").is_err());
        assert_eq!(parse_lab("16,-0.5,0"), Ok(LabColor::new(16.0, -0.5, 0.0)));
        assert!(parse_lab("16,0").is_err());
        assert!(parse_lab("nan,0,0").is_err());
    }
}
