//! Experiment runner: seeded channel realizations, trade-off and
//! link-level sweeps, aggregation and result files.
//!
//! Every realization draws from its own generator keyed by the master seed,
//! the mobility profile and the realization index, so shards of a sweep
//! reproduce the corresponding slice of a full run exactly, and every
//! `(λ, mode)` pair sees the same channels.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::Range;
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::admm::{draw_dual_init, run_admm, AdmmOptions, OptimizationResult};
use crate::channel::{complex_normal_matrix, draw_aged_channel, draw_saa_set, SaaSampleSet};
use crate::error::OptimError;
use crate::lls::sim::{simulate_blocks, LinkPlan};
use crate::radar::{crb_total, radar_mutual_information, transmit_beampattern};
use crate::rates::noma_order;
use crate::scenario::{watts_to_dbm, AccessMode, ValidatedScenario, CONFIGURED_PROFILE, PROFILES};
use crate::{CMatrix, CVector};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown mobility profile {0:?}")]
    UnknownProfile(String),
    #[error("nothing to emit")]
    NothingToEmit,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed results file: {0}")]
    Parse(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// What to run: the sweep axes, the realization indices and the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub lambdas: Vec<f64>,
    pub modes: Vec<AccessMode>,
    pub profiles: Vec<String>,
    pub realizations: Range<usize>,
    pub master_seed: u64,
    /// Also run the link-level simulation for every realization.
    pub link_level: bool,
}

impl SweepPlan {
    pub fn from_scenario(s: &ValidatedScenario) -> Self {
        Self {
            lambdas: s.sweep.lambdas.clone(),
            modes: s.sweep.modes.clone(),
            profiles: s.sweep.profiles.clone(),
            realizations: 0..s.sweep.realizations,
            master_seed: s.solver.rng_seed,
            link_level: false,
        }
    }

    /// The same plan restricted to `range` (clipped to the plan's range).
    pub fn shard(&self, range: Range<usize>) -> Self {
        let start = range.start.max(self.realizations.start);
        let end = range.end.min(self.realizations.end).max(start);
        Self {
            realizations: start..end,
            ..self.clone()
        }
    }
}

/// Stable stream id of a profile name, independent of the sweep's list.
fn profile_id(name: &str) -> Option<u64> {
    if name == CONFIGURED_PROFILE {
        return Some(PROFILES.len() as u64);
    }
    PROFILES.iter().position(|p| p.name == name).map(|i| i as u64)
}

/// Generator of realization `r` under `profile`.
pub fn realization_rng(master_seed: u64, profile: &str, r: usize) -> Result<ChaCha8Rng, HarnessError> {
    let id = profile_id(profile).ok_or_else(|| HarnessError::UnknownProfile(profile.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream((id << 40) | r as u64);
    Ok(rng)
}

/// Random inputs of one realization, shared by every `(λ, mode)` pair.
#[derive(Debug, Clone)]
pub struct RealizationInputs {
    pub h_true: CMatrix,
    pub h_est: CMatrix,
    pub saa: SaaSampleSet,
    pub dual_init: CVector,
    pub link_seed: u64,
}

/// Draws a fresh `H_prev ~ CN(0, 1)`, ages it once, and builds the SAA set
/// around the stale estimate.
pub fn draw_realization(profiled: &ValidatedScenario, master_seed: u64, profile: &str, r: usize) -> Result<RealizationInputs, HarnessError> {
    let mut rng = realization_rng(master_seed, profile, r)?;
    let n = profiled.system.n_tx;
    let k = profiled.system.n_users;
    let prev = complex_normal_matrix(&mut rng, n, k, 1.0);
    let sample = draw_aged_channel(profiled, &mut rng, Some(&prev));
    let saa = draw_saa_set(&sample, profiled.solver.saa_samples, rng.next_u64());
    let dual_init = draw_dual_init(&mut rng, n, k);
    let link_seed = rng.next_u64();
    Ok(RealizationInputs {
        h_true: sample.h_true,
        h_est: sample.h_est,
        saa,
        dual_init,
        link_seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordStatus {
    Ok,
    QosInfeasible,
    SolverFailure,
}

/// Link-level totals of one realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkTotals {
    /// `∑_blocks ∑_k μ_k D_k`.
    pub weighted_bits: f64,
    pub symbols: usize,
    pub blocks: usize,
}

/// Outcome of one realization at one `(λ, mode, profile)` point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationRecord {
    pub profile: String,
    pub mode: AccessMode,
    pub lambda: f64,
    pub realization: usize,
    pub status: RecordStatus,
    /// Solver message for failures.
    pub message: Option<String>,
    pub wsr: f64,
    pub mse: f64,
    pub rmi: f64,
    pub crb: f64,
    /// Power per precoder column, watts.
    pub column_power: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Smallest eigenvalue of `R − p pᴴ` over every radar update.
    pub sdr_min_schur_eig: f64,
    /// Largest per-antenna power deviation over every radar update.
    pub sdr_max_power_dev: f64,
    pub link: Option<LinkTotals>,
}

impl RealizationRecord {
    fn empty(profile: &str, mode: AccessMode, lambda: f64, realization: usize, status: RecordStatus, message: Option<String>) -> Self {
        Self {
            profile: profile.to_string(),
            mode,
            lambda,
            realization,
            status,
            message,
            wsr: f64::NAN,
            mse: f64::NAN,
            rmi: f64::NAN,
            crb: f64::NAN,
            column_power: vec![],
            converged: false,
            iterations: 0,
            sdr_min_schur_eig: f64::NAN,
            sdr_max_power_dev: f64::NAN,
            link: None,
        }
    }
}

/// Runs the optimizer for one point of one realization.
pub fn solve_point(point: &ValidatedScenario, inputs: &RealizationInputs) -> Result<OptimizationResult, OptimError> {
    let opts = AdmmOptions::from_scenario(point);
    run_admm(point, &inputs.h_est, &inputs.saa, &inputs.dual_init, &opts)
}

/// Precoder rescaled from noise-normalized units to watts.
pub fn precoder_watts(p: &CMatrix, s: &ValidatedScenario) -> CMatrix {
    p * nalgebra::Complex::from(s.system.noise_power_user.sqrt())
}

fn record_from_result(point: &ValidatedScenario, profile: &str, realization: usize, inputs: &RealizationInputs, res: &OptimizationResult, link_level: bool) -> RealizationRecord {
    let mode = point.system.access_mode;
    let pw = precoder_watts(&res.precoder, point);
    let spacing = point.system.spacing;
    let link = link_level.then(|| link_totals(point, inputs, res));
    RealizationRecord {
        profile: profile.to_string(),
        mode,
        lambda: point.system.lambda_reg,
        realization,
        status: RecordStatus::Ok,
        message: None,
        wsr: res.rates.wsr,
        mse: res.mse,
        rmi: radar_mutual_information(&pw, &point.radar, spacing),
        crb: crb_total(&pw, &point.radar, spacing).unwrap_or(f64::INFINITY),
        column_power: pw.column_iter().map(|c| c.norm_squared()).collect(),
        converged: res.converged,
        iterations: res.iterations,
        sdr_min_schur_eig: res.sdr.iter().map(|d| d.schur_min_eig).fold(f64::INFINITY, f64::min),
        sdr_max_power_dev: res.sdr.iter().map(|d| d.antenna_power_dev).fold(0.0, f64::max),
        link,
    }
}

fn link_totals(point: &ValidatedScenario, inputs: &RealizationInputs, res: &OptimizationResult) -> LinkTotals {
    let mode = point.system.access_mode;
    let order = match mode {
        AccessMode::Noma => noma_order(&inputs.h_est),
        _ => (0..point.system.n_users).collect(),
    };
    let lls = &point.lls;
    let weights = &point.system.weights;
    let plan = LinkPlan::adaptive(mode, &res.precoder, &inputs.h_true, &order, &res.rates.common_splits, 1.0, lls)
        .expect("codeword length validated with the configuration");
    let blocks = simulate_blocks(&plan, &res.precoder, &inputs.h_true, lls.blocks, inputs.link_seed).expect("plan matches its own codecs");
    LinkTotals {
        weighted_bits: blocks.iter().map(|b| b.delivered_bits.iter().zip(weights).map(|(d, mu)| mu * d).sum::<f64>()).sum(),
        symbols: blocks.iter().map(|b| b.symbols).sum(),
        blocks: blocks.len(),
    }
}

/// Every `(λ, mode)` point of one realization.
fn run_realization(profiled: &ValidatedScenario, plan: &SweepPlan, profile: &str, r: usize) -> Result<Vec<RealizationRecord>, HarnessError> {
    let inputs = draw_realization(profiled, plan.master_seed, profile, r)?;
    let mut out = Vec::with_capacity(plan.lambdas.len() * plan.modes.len());
    for &mode in &plan.modes {
        for &lambda in &plan.lambdas {
            let point = profiled.with_mode(mode).with_lambda(lambda);
            let rec = match solve_point(&point, &inputs) {
                Ok(res) => record_from_result(&point, profile, r, &inputs, &res, plan.link_level),
                Err(OptimError::InfeasibleQos { users }) => {
                    RealizationRecord::empty(profile, mode, lambda, r, RecordStatus::QosInfeasible, Some(format!("users {users:?}")))
                }
                Err(e) => RealizationRecord::empty(profile, mode, lambda, r, RecordStatus::SolverFailure, Some(e.to_string())),
            };
            out.push(rec);
        }
    }
    Ok(out)
}

/// Runs every realization of `plan`; records come back in plan order.
pub fn run_records(base: &ValidatedScenario, plan: &SweepPlan) -> Result<Vec<RealizationRecord>, HarnessError> {
    let mut all = Vec::new();
    for profile in &plan.profiles {
        let profiled = base.with_profile(profile).ok_or_else(|| HarnessError::UnknownProfile(profile.clone()))?;
        let per: Vec<Vec<RealizationRecord>> = plan
            .realizations
            .clone()
            .into_par_iter()
            .map(|r| run_realization(&profiled, plan, profile, r))
            .collect::<Result<_, _>>()?;
        all.extend(per.into_iter().flatten());
    }
    sort_records(&mut all, plan);
    Ok(all)
}

/// Orders records by profile, mode and λ as listed in `plan`, then by
/// realization index. Aggregation sums in this order, which makes merged
/// shards bitwise identical to a single run.
pub fn sort_records(records: &mut [RealizationRecord], plan: &SweepPlan) {
    let pos = |r: &RealizationRecord| {
        (
            plan.profiles.iter().position(|p| *p == r.profile).unwrap_or(usize::MAX),
            plan.modes.iter().position(|m| *m == r.mode).unwrap_or(usize::MAX),
            plan.lambdas.iter().position(|l| l.to_bits() == r.lambda.to_bits()).unwrap_or(usize::MAX),
            r.realization,
        )
    };
    records.sort_by_key(pos);
}

/// Concatenates shard outputs into full-run order.
pub fn merge_shards(shards: Vec<Vec<RealizationRecord>>, plan: &SweepPlan) -> Vec<RealizationRecord> {
    let mut all: Vec<RealizationRecord> = shards.into_iter().flatten().collect();
    sort_records(&mut all, plan);
    all
}

/// One `(λ, mode, profile)` point of the EWSR/RMSE trade-off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub lambda: f64,
    pub mode: AccessMode,
    pub profile: String,
    /// Mean per-realization AWSR, bps/Hz.
    pub ewsr: f64,
    /// `√(mean MSE)`.
    pub rmse: f64,
    /// Mean RMI, bits.
    pub rmi: f64,
    /// Mean total CRB over realizations with a finite bound.
    pub crb: f64,
    /// Mean power per precoder column, dBm of the linear mean.
    pub power_dbm: Vec<f64>,
    pub n_converged: usize,
    /// Realizations attempted.
    pub n_total: usize,
    pub n_qos_infeasible: usize,
    pub n_failed: usize,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

/// Groups sorted records into points, preserving record order.
fn group(records: &[RealizationRecord]) -> Vec<&[RealizationRecord]> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=records.len() {
        let split = i == records.len() || {
            let (a, b) = (&records[i - 1], &records[i]);
            a.profile != b.profile || a.mode != b.mode || a.lambda.to_bits() != b.lambda.to_bits()
        };
        if split {
            out.push(&records[start..i]);
            start = i;
        }
    }
    out
}

/// Aggregates sorted records (see [`sort_records`]).
pub fn aggregate_tradeoff(records: &[RealizationRecord]) -> Vec<TradeoffPoint> {
    group(records)
        .into_iter()
        .filter(|g| !g.is_empty())
        .map(|g| {
            let ok: Vec<&RealizationRecord> = g.iter().filter(|r| r.status == RecordStatus::Ok).collect();
            let cols = ok.first().map_or(0, |r| r.column_power.len());
            TradeoffPoint {
                lambda: g[0].lambda,
                mode: g[0].mode,
                profile: g[0].profile.clone(),
                ewsr: mean(ok.iter().map(|r| r.wsr)),
                rmse: mean(ok.iter().map(|r| r.mse)).sqrt(),
                rmi: mean(ok.iter().map(|r| r.rmi)),
                crb: mean(ok.iter().map(|r| r.crb).filter(|c| c.is_finite())),
                power_dbm: (0..cols).map(|c| watts_to_dbm(mean(ok.iter().map(|r| r.column_power[c])))).collect(),
                n_converged: ok.iter().filter(|r| r.converged).count(),
                n_total: g.len(),
                n_qos_infeasible: g.iter().filter(|r| r.status == RecordStatus::QosInfeasible).count(),
                n_failed: g.iter().filter(|r| r.status == RecordStatus::SolverFailure).count(),
            }
        })
        .collect()
}

/// Weighted throughput of one point next to its EWSR and RMSE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlsPoint {
    pub lambda: f64,
    pub mode: AccessMode,
    pub profile: String,
    pub weighted_throughput: f64,
    pub rmse: f64,
    pub ewsr: f64,
}

pub fn aggregate_lls(records: &[RealizationRecord]) -> Vec<LlsPoint> {
    group(records)
        .into_iter()
        .filter_map(|g| {
            let ok: Vec<&RealizationRecord> = g.iter().filter(|r| r.status == RecordStatus::Ok && r.link.is_some()).collect();
            if ok.is_empty() {
                return None;
            }
            let bits: f64 = ok.iter().map(|r| r.link.unwrap().weighted_bits).sum();
            let symbols: usize = ok.iter().map(|r| r.link.unwrap().symbols).sum();
            Some(LlsPoint {
                lambda: g[0].lambda,
                mode: g[0].mode,
                profile: g[0].profile.clone(),
                weighted_throughput: bits / symbols as f64,
                rmse: mean(ok.iter().map(|r| r.mse)).sqrt(),
                ewsr: mean(ok.iter().map(|r| r.wsr)),
            })
        })
        .collect()
}

pub fn run_tradeoff(base: &ValidatedScenario, plan: &SweepPlan) -> Result<(Vec<TradeoffPoint>, Vec<RealizationRecord>), HarnessError> {
    let records = run_records(base, plan)?;
    Ok((aggregate_tradeoff(&records), records))
}

pub fn run_lls(base: &ValidatedScenario, plan: &SweepPlan) -> Result<(Vec<LlsPoint>, Vec<RealizationRecord>), HarnessError> {
    let plan = SweepPlan {
        link_level: true,
        ..plan.clone()
    };
    let records = run_records(base, &plan)?;
    Ok((aggregate_lls(&records), records))
}

/// Transmit beampattern of one solved point, with the scaled desired
/// pattern it was matched against.
pub struct BeampatternDump {
    pub angles: Vec<f64>,
    pub gains: Vec<f64>,
    pub desired: Vec<f64>,
}

pub fn beampattern_point(base: &ValidatedScenario, profile: &str, mode: AccessMode, lambda: f64, realization: usize, master_seed: u64) -> Result<Result<BeampatternDump, OptimError>, HarnessError> {
    let profiled = base.with_profile(profile).ok_or_else(|| HarnessError::UnknownProfile(profile.to_string()))?;
    let inputs = draw_realization(&profiled, master_seed, profile, realization)?;
    let point = profiled.with_mode(mode).with_lambda(lambda);
    Ok(solve_point(&point, &inputs).map(|res| BeampatternDump {
        angles: point.radar.angle_grid.clone(),
        gains: transmit_beampattern(&res.precoder, &point.radar, point.system.spacing).gains,
        desired: point.radar.desired_pattern.iter().map(|d| res.alpha * d).collect(),
    }))
}

// ---------------------------------------------------------------------------
// Files.

/// Column names of the trade-off CSV for `n_users` users.
pub fn tradeoff_header(n_users: usize) -> Vec<String> {
    let mut h: Vec<String> = ["lambda", "mode", "mobility_profile", "ewsr", "rmse", "rmi", "crb", "power_common_dbm"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((1..=n_users).map(|k| format!("power_private_{k}_dbm")));
    h.extend(["n_converged", "n_total", "n_qos_infeasible", "n_failed"].iter().map(|s| s.to_string()));
    h
}

pub const LLS_HEADER: [&str; 6] = ["lambda", "mode", "mobility_profile", "weighted_throughput", "rmse", "ewsr"];

fn csv_text(header: &[String], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

/// Header and data rows of a CSV text, each row checked for width.
fn csv_rows(text: &str) -> Result<(Vec<String>, Vec<csv::StringRecord>), HarnessError> {
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().map_err(|e| HarnessError::Parse(e.to_string()))?.iter().map(String::from).collect();
    let rows = r.records().collect::<Result<Vec<_>, _>>().map_err(|e| HarnessError::Parse(e.to_string()))?;
    Ok((header, rows))
}

/// CSV text of `points`. Floats use the shortest representation that
/// parses back to the same value.
pub fn tradeoff_csv(points: &[TradeoffPoint]) -> String {
    let k = points.first().map_or(0, |p| p.power_dbm.len().saturating_sub(1));
    let rows = points.iter().map(|p| {
        let mut row = vec![p.lambda.to_string(), p.mode.as_str().to_string(), p.profile.clone(), p.ewsr.to_string(), p.rmse.to_string(), p.rmi.to_string(), p.crb.to_string()];
        row.extend(p.power_dbm.iter().map(|v| v.to_string()));
        row.extend([p.n_converged, p.n_total, p.n_qos_infeasible, p.n_failed].iter().map(|v| v.to_string()));
        row
    });
    csv_text(&tradeoff_header(k), rows)
}

fn field<T: std::str::FromStr>(v: &str, name: &str) -> Result<T, HarnessError> {
    v.parse().map_err(|_| HarnessError::Parse(format!("bad {name} value {v:?}")))
}

fn mode_field(v: &str) -> Result<AccessMode, HarnessError> {
    AccessMode::parse(v).ok_or_else(|| HarnessError::Parse(format!("bad mode {v:?}")))
}

pub fn parse_tradeoff_csv(text: &str) -> Result<Vec<TradeoffPoint>, HarnessError> {
    let (header, rows) = csv_rows(text)?;
    let n_power = header.iter().filter(|h| h.starts_with("power_")).count();
    if n_power == 0 || header != tradeoff_header(n_power - 1) {
        return Err(HarnessError::Parse("unexpected header".into()));
    }
    let tail = 7 + n_power;
    rows.iter()
        .map(|f| {
            Ok(TradeoffPoint {
                lambda: field(&f[0], "lambda")?,
                mode: mode_field(&f[1])?,
                profile: f[2].to_string(),
                ewsr: field(&f[3], "ewsr")?,
                rmse: field(&f[4], "rmse")?,
                rmi: field(&f[5], "rmi")?,
                crb: field(&f[6], "crb")?,
                power_dbm: (7..tail).map(|i| field(&f[i], "power")).collect::<Result<_, _>>()?,
                n_converged: field(&f[tail], "n_converged")?,
                n_total: field(&f[tail + 1], "n_total")?,
                n_qos_infeasible: field(&f[tail + 2], "n_qos_infeasible")?,
                n_failed: field(&f[tail + 3], "n_failed")?,
            })
        })
        .collect()
}

pub fn lls_csv(points: &[LlsPoint]) -> String {
    let header: Vec<String> = LLS_HEADER.iter().map(|s| s.to_string()).collect();
    let rows = points.iter().map(|p| {
        vec![p.lambda.to_string(), p.mode.as_str().to_string(), p.profile.clone(), p.weighted_throughput.to_string(), p.rmse.to_string(), p.ewsr.to_string()]
    });
    csv_text(&header, rows)
}

pub fn parse_lls_csv(text: &str) -> Result<Vec<LlsPoint>, HarnessError> {
    let (header, rows) = csv_rows(text)?;
    if header != LLS_HEADER {
        return Err(HarnessError::Parse("unexpected header".into()));
    }
    rows.iter()
        .map(|f| {
            Ok(LlsPoint {
                lambda: field(&f[0], "lambda")?,
                mode: mode_field(&f[1])?,
                profile: f[2].to_string(),
                weighted_throughput: field(&f[3], "weighted_throughput")?,
                rmse: field(&f[4], "rmse")?,
                ewsr: field(&f[5], "ewsr")?,
            })
        })
        .collect()
}

fn write_file(path: &Path, contents: &str) -> Result<PathBuf, HarnessError> {
    std::fs::write(path, contents).map_err(io_err(path))?;
    Ok(path.to_path_buf())
}

fn curve_files<P>(points: &[P], key: impl Fn(&P) -> (String, AccessMode), row: impl Fn(&P) -> (f64, f64), header: &str, prefix: &str, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mut curves: BTreeMap<(String, &str), String> = BTreeMap::new();
    for p in points {
        let (profile, mode) = key(p);
        let (x, y) = row(p);
        let body = curves.entry((profile, mode.as_str())).or_insert_with(|| format!("# {header}\n"));
        let _ = writeln!(body, "{x} {y}");
    }
    curves
        .into_iter()
        .map(|((profile, mode), body)| write_file(&dir.join(format!("{prefix}_{profile}_{}.dat", mode.to_ascii_lowercase())), &body))
        .collect()
}

/// Writes `tradeoff.csv`, `tradeoff.json` (with per-realization records
/// when given) and one `rmse ewsr` curve file per `(profile, mode)`.
pub fn emit_tradeoff(points: &[TradeoffPoint], records: Option<&[RealizationRecord]>, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    if points.is_empty() {
        return Err(HarnessError::NothingToEmit);
    }
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut files = vec![write_file(&dir.join("tradeoff.csv"), &tradeoff_csv(points))?];
    let json = serde_json::json!({ "points": points, "realizations": records });
    files.push(write_file(&dir.join("tradeoff.json"), &serde_json::to_string_pretty(&json).expect("plain data"))?);
    files.extend(curve_files(points, |p| (p.profile.clone(), p.mode), |p| (p.rmse, p.ewsr), "rmse ewsr", "tradeoff", dir)?);
    files.extend(curve_files(points, |p| (p.profile.clone(), p.mode), |p| (p.lambda, p.rmi), "lambda rmi", "rmi", dir)?);
    files.extend(curve_files(points, |p| (p.profile.clone(), p.mode), |p| (p.lambda, p.crb), "lambda crb", "crb", dir)?);
    Ok(files)
}

/// Writes `lls.csv` and one `rmse weighted_throughput` curve file per
/// `(profile, mode)`.
pub fn emit_lls(points: &[LlsPoint], dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    if points.is_empty() {
        return Err(HarnessError::NothingToEmit);
    }
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut files = vec![write_file(&dir.join("lls.csv"), &lls_csv(points))?];
    files.extend(curve_files(points, |p| (p.profile.clone(), p.mode), |p| (p.rmse, p.weighted_throughput), "rmse weighted_throughput", "lls", dir)?);
    Ok(files)
}

/// Everything needed to rerun a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Fully resolved configuration.
    pub config: String,
    pub plan: SweepPlan,
    pub code_version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    /// `(profile, mode, λ, realization, message)` of failed solves.
    pub failures: Vec<(String, AccessMode, f64, usize, String)>,
}

pub fn unix_now() -> u64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

impl RunManifest {
    pub fn new(base: &ValidatedScenario, plan: &SweepPlan, records: &[RealizationRecord], started_unix: u64) -> Self {
        Self {
            config: base.to_raw().to_toml(),
            plan: plan.clone(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix,
            finished_unix: unix_now(),
            failures: records
                .iter()
                .filter(|r| r.status == RecordStatus::SolverFailure)
                .map(|r| (r.profile.clone(), r.mode, r.lambda, r.realization, r.message.clone().unwrap_or_default()))
                .collect(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, HarnessError> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        write_file(&dir.join("manifest.json"), &serde_json::to_string_pretty(self).expect("plain data"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(lambda: f64, mode: AccessMode) -> TradeoffPoint {
        TradeoffPoint {
            lambda,
            mode,
            profile: "high-mobility".into(),
            ewsr: 1.0 / 3.0,
            rmse: 705.123456789,
            rmi: 2.5e-3,
            crb: f64::INFINITY,
            power_dbm: vec![f64::NEG_INFINITY, 30.1, 29.9],
            n_converged: 3,
            n_total: 5,
            n_qos_infeasible: 1,
            n_failed: 0,
        }
    }

    fn record(profile: &str, mode: AccessMode, lambda: f64, r: usize, wsr: f64) -> RealizationRecord {
        RealizationRecord {
            wsr,
            mse: 4.0 * wsr,
            rmi: 1.0,
            crb: 2.0,
            column_power: vec![1e-3, 1e-2],
            converged: true,
            sdr_min_schur_eig: 0.0,
            sdr_max_power_dev: 0.0,
            ..RealizationRecord::empty(profile, mode, lambda, r, RecordStatus::Ok, None)
        }
    }

    #[test]
    fn csv_round_trip_is_byte_identical() {
        let pts = vec![point(1e-9, AccessMode::Rsma), point(0.1, AccessMode::Noma)];
        let csv = tradeoff_csv(&pts);
        let back = parse_tradeoff_csv(&csv).unwrap();
        assert_eq!(tradeoff_csv(&back), csv);
        let l = vec![LlsPoint {
            lambda: 1e-3,
            mode: AccessMode::Sdma,
            profile: "perfect-csit".into(),
            weighted_throughput: 2.0 / 7.0,
            rmse: 1.5,
            ewsr: 3.25,
        }];
        assert_eq!(lls_csv(&parse_lls_csv(&lls_csv(&l)).unwrap()), lls_csv(&l));
    }

    #[test]
    fn header_schema() {
        assert_eq!(
            tradeoff_header(2).join(","),
            "lambda,mode,mobility_profile,ewsr,rmse,rmi,crb,power_common_dbm,power_private_1_dbm,power_private_2_dbm,n_converged,n_total,n_qos_infeasible,n_failed"
        );
        assert!(tradeoff_csv(&[point(1.0, AccessMode::Rsma)]).starts_with(&tradeoff_header(2).join(",")));
        assert_eq!(lls_csv(&[]), "lambda,mode,mobility_profile,weighted_throughput,rmse,ewsr\n");
    }

    #[test]
    fn empty_emit_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let e = emit_tradeoff(&[], None, dir.path()).unwrap_err();
        assert_eq!(e.to_string(), "nothing to emit");
        assert_eq!(emit_lls(&[], dir.path()).unwrap_err().to_string(), "nothing to emit");
    }

    #[test]
    fn emit_writes_curves() {
        let dir = tempfile::tempdir().unwrap();
        let files = emit_tradeoff(&[point(1e-9, AccessMode::Rsma), point(0.1, AccessMode::Rsma)], None, dir.path()).unwrap();
        let curve = std::fs::read_to_string(dir.path().join("tradeoff_high-mobility_rsma.dat")).unwrap();
        assert_eq!(curve.lines().count(), 3);
        assert!(files.iter().any(|f| f.ends_with("tradeoff.json")));
    }

    #[test]
    fn aggregation_means_and_counts() {
        let mut recs = vec![
            record("perfect-csit", AccessMode::Rsma, 0.1, 0, 1.0),
            record("perfect-csit", AccessMode::Rsma, 0.1, 1, 3.0),
            RealizationRecord::empty("perfect-csit", AccessMode::Rsma, 0.1, 2, RecordStatus::QosInfeasible, None),
        ];
        recs[1].converged = false;
        let pts = aggregate_tradeoff(&recs);
        assert_eq!(pts.len(), 1);
        let p = &pts[0];
        assert_eq!(p.ewsr, 2.0);
        assert_eq!(p.rmse, 8f64.sqrt());
        assert_eq!((p.n_total, p.n_converged, p.n_qos_infeasible, p.n_failed), (3, 1, 1, 0));
        assert!((p.power_dbm[1] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn shards_merge_into_run_order() {
        let plan = SweepPlan {
            lambdas: vec![1e-9, 0.1],
            modes: vec![AccessMode::Rsma, AccessMode::Sdma],
            profiles: vec!["high-mobility".into()],
            realizations: 0..4,
            master_seed: 1,
            link_level: false,
        };
        let mut full = Vec::new();
        for m in &plan.modes {
            for l in &plan.lambdas {
                for r in 0..4 {
                    full.push(record("high-mobility", *m, *l, r, (r + 1) as f64 * l));
                }
            }
        }
        let a: Vec<_> = full.iter().filter(|r| r.realization < 2).cloned().collect();
        let b: Vec<_> = full.iter().filter(|r| r.realization >= 2).cloned().collect();
        let merged = merge_shards(vec![b, a], &plan);
        assert_eq!(merged, full);
        assert_eq!(tradeoff_csv(&aggregate_tradeoff(&merged)), tradeoff_csv(&aggregate_tradeoff(&full)));
        assert_eq!(plan.shard(2..10).realizations, 2..4);
    }

    #[test]
    fn realization_streams_are_distinct_and_stable() {
        let mut a = realization_rng(7, "high-mobility", 3).unwrap();
        let mut b = realization_rng(7, "high-mobility", 3).unwrap();
        let mut c = realization_rng(7, "low-mobility", 3).unwrap();
        let x = a.next_u64();
        assert_eq!(x, b.next_u64());
        assert_ne!(x, c.next_u64());
        assert!(realization_rng(7, "nowhere", 0).is_err());
    }
}
