//! The four subcommands. Each returns what it wrote so callers and tests can
//! inspect results without reparsing files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tierbid_core::auction::oracle::oracle_charge_given;
use tierbid_core::auction::{resolve, RoundOptions};
use tierbid_core::instances::{Coverage, InstanceFamily};
use tierbid_core::sim::{generate_workload, run_episode, strategy_payoff_experiment, EpisodeMetrics, StrategyReport};
use tierbid_core::units::{BANDWIDTH_SCALE, CURRENCY_SCALE};
use tierbid_core::{Bandwidth, Bid, BidBook, EngineConfig, Money, NetworkNode, ServiceId, Topology, UserId, WinnerRule};

use crate::bids::{BidsFile, OutcomeReport};
use crate::error::{CliError, CliResult};
use crate::scenario::{ManifestInfo, ModeKind, Resolved, ScenarioSpec};

fn write_file(path: &Path, contents: &[u8]) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s.into_bytes()
}

fn sha_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Overrides applied on top of a scenario file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub mode: Option<ModeKind>,
    pub prefix_winners: bool,
    pub out_dir: Option<PathBuf>,
    pub replications: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationSummary {
    pub replication: usize,
    pub seed: u64,
    pub users: usize,
    pub never_served: usize,
    /// Users with completion strictly inside (0.05, 0.95).
    pub mediocre_fraction: f64,
    pub p95_handoffs: u32,
    pub max_handoffs: u32,
    pub revenue: Money,
    pub social_welfare: Money,
}

impl ReplicationSummary {
    pub fn of(replication: usize, seed: u64, m: &EpisodeMetrics) -> Self {
        let users = m.agents.len();
        let mediocre = m.agents.iter().filter(|a| a.completion() > 0.05 && a.completion() < 0.95).count();
        let mut h: Vec<u32> = m.agents.iter().map(|a| a.handoffs).collect();
        h.sort_unstable();
        ReplicationSummary {
            replication,
            seed,
            users,
            never_served: m.agents.iter().filter(|a| a.served_slots == 0).count(),
            mediocre_fraction: if users == 0 { 0.0 } else { mediocre as f64 / users as f64 },
            p95_handoffs: percentile(&h, 0.95),
            max_handoffs: h.last().copied().unwrap_or(0),
            revenue: m.revenue(),
            social_welfare: m.welfare(),
        }
    }
}

/// Nearest-rank percentile of sorted values.
pub fn percentile(sorted: &[u32], q: f64) -> u32 {
    if sorted.is_empty() {
        return 0;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub seed: u64,
    pub mode: ModeKind,
    pub replications: Vec<ReplicationSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strategy: Option<StrategyReport>,
}

pub struct RunArtifacts {
    pub out_dir: PathBuf,
    pub summary: RunSummary,
    pub episodes: Vec<EpisodeMetrics>,
}

fn verify_episode(m: &EpisodeMetrics) -> CliResult<()> {
    if let Some(n) = m.networks.iter().find(|n| n.served > n.supply) {
        return Err(CliError::Invariant(format!("network {} over capacity in slot {}", n.network, n.slot)));
    }
    if let Some(a) = m.agents.iter().find(|a| a.payoff != a.payoff_from_history()) {
        return Err(CliError::Invariant(format!("payoff of {} differs from its history", a.user_id)));
    }
    Ok(())
}

fn csv_header(seed: u64, hash: &str) -> String {
    format!("# seed={seed}, config_hash={hash}, currency_scale={CURRENCY_SCALE}, bandwidth_scale={BANDWIDTH_SCALE}\n")
}

fn csv_bytes(prefix: String, rows: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(prefix.into_bytes());
    rows(&mut w).expect("in-memory csv");
    w.into_inner().expect("in-memory csv")
}

/// Per-user table. Columns: replication, user_id, class, service, t_s,
/// duration, served_slots, completion, handoffs, total_charge, payoff.
pub fn users_csv(seed: u64, hash: &str, episodes: &[EpisodeMetrics]) -> Vec<u8> {
    csv_bytes(csv_header(seed, hash), |w| {
        w.write_record([
            "replication", "user_id", "class", "service", "t_s", "duration", "served_slots", "completion", "handoffs",
            "total_charge", "payoff",
        ])?;
        for (r, m) in episodes.iter().enumerate() {
            for a in &m.agents {
                w.write_record([
                    r.to_string(),
                    a.user_id.0.clone(),
                    a.class.clone(),
                    a.service_id.0.clone(),
                    a.start.to_string(),
                    a.duration.to_string(),
                    a.served_slots.to_string(),
                    format!("{:.6}", a.completion()),
                    a.handoffs.to_string(),
                    a.total_charge.raw().to_string(),
                    a.payoff.raw().to_string(),
                ])?;
            }
        }
        Ok(())
    })
}

/// Per-network per-slot table. Columns: replication, slot, network, tier,
/// demand, supply, served, winners, revenue, welfare.
pub fn networks_csv(seed: u64, hash: &str, episodes: &[EpisodeMetrics]) -> Vec<u8> {
    csv_bytes(csv_header(seed, hash), |w| {
        w.write_record([
            "replication", "slot", "network", "tier", "demand", "supply", "served", "winners", "revenue", "welfare",
        ])?;
        for (r, m) in episodes.iter().enumerate() {
            for n in &m.networks {
                w.write_record([
                    r.to_string(),
                    n.slot.to_string(),
                    n.network.0.clone(),
                    n.tier.to_string(),
                    n.demand.raw().to_string(),
                    n.supply.raw().to_string(),
                    n.served.raw().to_string(),
                    n.winners.to_string(),
                    n.revenue.raw().to_string(),
                    n.welfare.raw().to_string(),
                ])?;
            }
        }
        Ok(())
    })
}

pub const RUN_OUTPUTS: [&str; 3] = ["users.csv", "networks.csv", "summary.json"];
pub const STRATEGY_OUTPUT: &str = "strategy.json";
pub const DEFAULT_OUT_DIR: &str = "tierbid-out";

/// Applies command-line overrides; the result is what the manifest records.
pub fn apply_overrides(mut spec: ScenarioSpec, opts: &RunOptions) -> ScenarioSpec {
    if let Some(seed) = opts.seed {
        spec.seed = seed;
    }
    if let Some(mode) = opts.mode {
        spec.mode = mode;
    }
    if opts.prefix_winners {
        spec.engine.winner_rule = WinnerRule::Prefix;
    }
    spec
}

/// Runs a scenario (or a manifest of an earlier run).
pub fn cmd_run(path: &Path, opts: &RunOptions) -> CliResult<RunArtifacts> {
    let loaded = ScenarioSpec::load(path)?;
    let replications = opts.replications.or(loaded.manifest.as_ref().map(|m| m.replications)).unwrap_or(1);
    if replications == 0 {
        return Err(CliError::Validation("--replications must be at least 1".into()));
    }
    let out_dir = opts
        .out_dir
        .clone()
        .or_else(|| loaded.output.as_ref().map(|o| o.dir.clone()))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    let spec = apply_overrides(loaded, opts).canonical();
    let resolved = spec.resolve()?;
    let hash = spec.config_hash();
    let episodes = simulate(&resolved, replications)?;
    let summaries = episodes
        .iter()
        .enumerate()
        .map(|(r, m)| ReplicationSummary::of(r, spec.seed.wrapping_add(r as u64), m))
        .collect();
    let strategy = match &spec.strategy {
        Some(s) => Some(strategy_payoff_experiment(
            &resolved.topology,
            &resolved.catalog,
            &resolved.workload,
            &resolved.mode,
            &s.target,
            s.replications,
            resolved.config,
        )?),
        None => None,
    };
    let summary = RunSummary { config_hash: hash.clone(), seed: spec.seed, mode: spec.mode, replications: summaries, strategy };

    ensure_dir(&out_dir)?;
    write_file(&out_dir.join("users.csv"), &users_csv(spec.seed, &hash, &episodes))?;
    write_file(&out_dir.join("networks.csv"), &networks_csv(spec.seed, &hash, &episodes))?;
    write_file(&out_dir.join("summary.json"), &to_json(&summary))?;
    let mut outputs: Vec<String> = RUN_OUTPUTS.iter().map(|s| s.to_string()).collect();
    if let Some(s) = &summary.strategy {
        write_file(&out_dir.join(STRATEGY_OUTPUT), &to_json(s))?;
        outputs.push(STRATEGY_OUTPUT.into());
    }
    let manifest = ScenarioSpec { manifest: Some(ManifestInfo { config_hash: hash, replications, outputs }), ..spec };
    write_file(&out_dir.join("manifest.toml"), manifest.emit().as_bytes())?;
    Ok(RunArtifacts { out_dir, summary, episodes })
}

/// Runs every replication; replication `r` uses seed `seed + r`.
pub fn simulate(resolved: &Resolved, replications: usize) -> CliResult<Vec<EpisodeMetrics>> {
    let one = |r: usize| -> CliResult<EpisodeMetrics> {
        let workload = tierbid_core::sim::WorkloadSpec { seed: resolved.workload.seed.wrapping_add(r as u64), ..resolved.workload.clone() };
        let agents = generate_workload(&workload, &resolved.topology, &resolved.catalog)?;
        let m = run_episode(&resolved.topology, &agents, &resolved.mode, &workload, resolved.config)?;
        verify_episode(&m)?;
        Ok(m)
    };
    (0..replications).into_par_iter().map(one).collect()
}

#[derive(Debug, Clone, Default)]
pub struct AuctionOptions {
    pub prefix_winners: bool,
    pub mode: Option<ModeKind>,
    pub out_dir: Option<PathBuf>,
}

/// Resolves one bids file. Writes `outcome.json` into `out_dir` when given.
pub fn cmd_auction(path: &Path, opts: &AuctionOptions) -> CliResult<(OutcomeReport, Vec<u8>)> {
    let (mut file, base) = BidsFile::load(path)?;
    if opts.prefix_winners {
        file.engine.winner_rule = WinnerRule::Prefix;
    }
    if let Some(m) = opts.mode {
        file.mode = m;
    }
    let resolved = file.resolve(&base)?;
    let outcome = resolved.run()?;
    let report = OutcomeReport::new(&resolved, &outcome, sha_hex(file.emit().as_bytes()));
    let bytes = to_json(&report);
    if let Some(dir) = &opts.out_dir {
        ensure_dir(dir)?;
        write_file(&dir.join("outcome.json"), &bytes)?;
    }
    Ok((report, bytes))
}

fn emit_options<T: Serialize>(opts: &T) -> String {
    toml::to_string(opts).expect("options serialize")
}

/// Loads options recorded by an earlier `oracle-check` or `bench` run.
pub fn load_options<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

/// Instance families for oracle checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Equal rates, users attached anywhere in random 3-tier forests.
    EqualRate,
    /// Equal rates, users attached at leaves only.
    EqualRateLeaves,
    /// Rates 1 and 5 mixed.
    Heterogeneous,
    /// Equal rates on single-chain topologies.
    Chain,
}

impl std::str::FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "equal-rate" => Ok(Family::EqualRate),
            "equal-rate-leaves" => Ok(Family::EqualRateLeaves),
            "heterogeneous" => Ok(Family::Heterogeneous),
            "chain" => Ok(Family::Chain),
            other => Err(format!("unknown family `{other}` (equal-rate, equal-rate-leaves, heterogeneous, chain)")),
        }
    }
}

impl Family {
    pub fn instances(self, max_users: usize) -> InstanceFamily {
        match self {
            Family::EqualRate => InstanceFamily::equal_rate(max_users),
            Family::EqualRateLeaves => InstanceFamily { coverage: Coverage::Leaves, ..InstanceFamily::equal_rate(max_users) },
            Family::Heterogeneous => InstanceFamily::heterogeneous(max_users),
            Family::Chain => {
                InstanceFamily { max_children: 1, coverage: Coverage::Leaves, ..InstanceFamily::equal_rate(max_users) }
            }
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Family::EqualRate => "equal-rate",
            Family::EqualRateLeaves => "equal-rate-leaves",
            Family::Heterogeneous => "heterogeneous",
            Family::Chain => "chain",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleOptions {
    pub samples: usize,
    pub seed: u64,
    pub family: Family,
    pub max_users: usize,
    pub winner_rule: WinnerRule,
    /// Draw instances from this scenario's workload instead of a family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<PathBuf>,
    #[serde(skip)]
    pub out_dir: Option<PathBuf>,
    /// Cap on dumped mismatching instances.
    pub max_dumps: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            samples: 100,
            seed: 0,
            family: Family::EqualRate,
            max_users: 50,
            winner_rule: WinnerRule::SkipGreedy,
            scenario: None,
            out_dir: None,
            max_dumps: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleMismatch {
    pub sample: usize,
    pub user: UserId,
    pub local: Money,
    pub oracle: Money,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dump: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub currency_scale: u32,
    pub config_hash: String,
    pub source: String,
    pub seed: u64,
    pub samples: usize,
    pub winner_rule: WinnerRule,
    pub winners_checked: usize,
    pub winner_matches: usize,
    pub match_rate: f64,
    pub instances_with_mismatch: usize,
    pub max_abs_discrepancy: Money,
    /// Losers whose rerun charge is non-zero (expected 0).
    pub losers_with_oracle_charge: usize,
    pub mismatches: Vec<OracleMismatch>,
}

/// `(user, local charge, oracle charge, won)` per bid.
pub type AuditRow = (UserId, Money, Money, bool);

/// One sampled instance and, for each user, `(local, oracle, winner?)`.
pub fn audit_instance(topology: &Topology, book: &BidBook, rule: WinnerRule) -> CliResult<Vec<AuditRow>> {
    let opts = RoundOptions::unicast(EngineConfig::with_rule(rule));
    let with = resolve(topology, book, &opts)?;
    with.assignments
        .iter()
        .map(|a| {
            let oracle = oracle_charge_given(topology, book, &with, &a.user_id, &opts)?;
            Ok((a.user_id.clone(), a.charge, oracle, a.is_winner()))
        })
        .collect()
}

fn snapshot_instance(resolved: &Resolved, seed: u64) -> CliResult<(Topology, BidBook)> {
    let workload = tierbid_core::sim::WorkloadSpec { seed, ..resolved.workload.clone() };
    let agents = generate_workload(&workload, &resolved.topology, &resolved.catalog)?;
    let slot = ChaCha8Rng::seed_from_u64(seed).gen_range(1..=workload.horizon);
    let mut book = BidBook::new(&resolved.topology);
    for a in agents.iter().filter(|a| a.is_active(slot)) {
        let bid = Bid::new(a.user_id.clone(), a.service_id.clone(), a.base_value(slot), a.rate, a.arrival_seq)?;
        book.register_resolved(bid, a.path.clone());
    }
    Ok((resolved.topology.clone(), book))
}

pub fn cmd_oracle_check(opts: &OracleOptions) -> CliResult<OracleReport> {
    if opts.samples == 0 {
        return Err(CliError::Validation("sample count must be at least 1".into()));
    }
    let scenario = match &opts.scenario {
        Some(p) => Some(ScenarioSpec::load(p)?.resolve()?),
        None => None,
    };
    let family = opts.family.instances(opts.max_users);
    let draw = |k: usize| -> CliResult<(Topology, BidBook)> {
        let seed = opts.seed.wrapping_add(k as u64);
        match &scenario {
            Some(r) => snapshot_instance(r, seed),
            None => {
                let inst = family.generate(&mut ChaCha8Rng::seed_from_u64(seed));
                Ok((inst.topology, inst.book))
            }
        }
    };
    let audits: Vec<CliResult<(Topology, BidBook, Vec<AuditRow>)>> = (0..opts.samples)
        .into_par_iter()
        .map(|k| {
            let (t, b) = draw(k)?;
            let a = audit_instance(&t, &b, opts.winner_rule)?;
            Ok((t, b, a))
        })
        .collect();

    let mut report = OracleReport {
        currency_scale: CURRENCY_SCALE,
        config_hash: sha_hex(emit_options(opts).as_bytes()),
        source: match &opts.scenario {
            Some(p) => format!("scenario:{}", p.display()),
            None => format!("family:{}", opts.family.label()),
        },
        seed: opts.seed,
        samples: opts.samples,
        winner_rule: opts.winner_rule,
        winners_checked: 0,
        winner_matches: 0,
        match_rate: 1.0,
        instances_with_mismatch: 0,
        max_abs_discrepancy: Money::ZERO,
        losers_with_oracle_charge: 0,
        mismatches: Vec::new(),
    };
    let mut dumps = 0;
    for (k, audit) in audits.into_iter().enumerate() {
        let (topology, book, rows) = audit?;
        let mut bad = false;
        for (user, local, oracle, winner) in rows {
            if !winner {
                if !oracle.is_zero() {
                    report.losers_with_oracle_charge += 1;
                }
                continue;
            }
            report.winners_checked += 1;
            if local == oracle {
                report.winner_matches += 1;
                continue;
            }
            let diff = Money::from_raw((local - oracle).raw().abs());
            report.max_abs_discrepancy = report.max_abs_discrepancy.max(diff);
            let dump = if !bad && dumps < opts.max_dumps {
                opts.out_dir.as_ref().map(|_| format!("mismatch-{k:05}.toml"))
            } else {
                None
            };
            if let (Some(name), Some(dir)) = (&dump, &opts.out_dir) {
                ensure_dir(dir)?;
                let file = BidsFile::from_book(&topology, &book, opts.winner_rule);
                write_file(&dir.join(name), file.emit().as_bytes())?;
                dumps += 1;
            }
            bad = true;
            report.mismatches.push(OracleMismatch { sample: k, user, local, oracle, dump });
        }
        if bad {
            report.instances_with_mismatch += 1;
        }
    }
    if report.winners_checked > 0 {
        report.match_rate = report.winner_matches as f64 / report.winners_checked as f64;
    }
    if let Some(dir) = &opts.out_dir {
        ensure_dir(dir)?;
        write_file(&dir.join("oracle_report.json"), &to_json(&report))?;
        write_file(&dir.join("oracle_manifest.toml"), emit_options(opts).as_bytes())?;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchOptions {
    pub grid: Vec<usize>,
    /// Auction rounds per timing sample.
    pub rounds: usize,
    pub repeats: usize,
    pub warmup: usize,
    pub seed: u64,
    #[serde(skip)]
    pub out_dir: Option<PathBuf>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions { grid: vec![120, 600, 1200, 2400], rounds: 20, repeats: 11, warmup: 2, seed: 0, out_dir: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub median_ms: f64,
    pub per_round_us: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub config_hash: String,
    pub seed: u64,
    pub rounds: usize,
    pub repeats: usize,
    pub rows: Vec<BenchRow>,
    /// Least-squares slope of ln(time) against ln(N ln N).
    pub fitted_exponent: Option<f64>,
    /// Largest time growth per doubling of N between grid neighbours.
    pub max_doubling_factor: Option<f64>,
}

/// One wide network of 500, two of 50 and four of 10 below them.
/// Total capacity (86 units) sits below the smallest default grid point, so
/// most bids stay live through all three tiers at every grid size.
pub fn bench_topology() -> Topology {
    let mut nodes = vec![NetworkNode::new("wide", 1, Bandwidth::from_units(50), None)];
    for m in 0..2 {
        nodes.push(NetworkNode::new(format!("mid{m}"), 2, Bandwidth::from_units(10), Some("wide")));
    }
    for l in 0..4 {
        let parent = format!("mid{}", l / 2);
        nodes.push(NetworkNode::new(format!("local{l}"), 3, Bandwidth::from_units(4), Some(&parent)));
    }
    Topology::build(nodes).expect("static topology")
}

/// `n` equal-rate users spread uniformly over the leaves.
pub fn bench_book(topology: &Topology, n: usize, rng: &mut ChaCha8Rng) -> BidBook {
    let leaves = topology.leaves();
    let mut book = BidBook::new(topology);
    for u in 0..n {
        let leaf = leaves[rng.gen_range(0..leaves.len())];
        let w = Money::from_raw(rng.gen_range(5_000_000..=20_000_000));
        let bid = Bid::new(UserId::new(format!("u{u:05}")), ServiceId::new("FTP"), w, Bandwidth::from_units(1), u as u64)
            .expect("valid bid");
        book.register_resolved(bid, topology.path_to(leaf));
    }
    book
}

pub fn fit_exponent(rows: &[BenchRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.n > 1 && r.median_ms > 0.0)
        .map(|r| {
            let n = r.n as f64;
            ((n * n.ln()).ln(), r.median_ms.ln())
        })
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

pub fn max_doubling_factor(rows: &[BenchRow]) -> Option<f64> {
    rows.windows(2)
        .filter(|w| w[0].n > 0 && w[1].n > w[0].n && w[0].median_ms > 0.0)
        .map(|w| {
            let doublings = (w[1].n as f64 / w[0].n as f64).log2();
            (w[1].median_ms / w[0].median_ms).powf(1.0 / doublings)
        })
        .reduce(f64::max)
}

pub fn cmd_bench(opts: &BenchOptions) -> CliResult<BenchReport> {
    if opts.repeats == 0 || opts.rounds == 0 {
        return Err(CliError::Validation("repeats and rounds must be at least 1".into()));
    }
    let topology = bench_topology();
    let config = EngineConfig::default();
    let opts_round = RoundOptions::unicast(config);
    let books: Vec<Vec<BidBook>> = opts
        .grid
        .iter()
        .map(|&n| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ n as u64);
            (0..opts.rounds).map(|_| bench_book(&topology, n, &mut rng)).collect()
        })
        .collect();
    // Grid points take turns within each repeat, so a slow stretch of the
    // machine lands on all sizes rather than one.
    let mut samples = vec![Vec::with_capacity(opts.repeats); opts.grid.len()];
    for rep in 0..opts.warmup + opts.repeats {
        for (k, set) in books.iter().enumerate() {
            let start = Instant::now();
            for book in set {
                let out = resolve(&topology, book, &opts_round)?;
                std::hint::black_box(&out);
            }
            if rep >= opts.warmup {
                samples[k].push(start.elapsed().as_secs_f64() * 1e3);
            }
        }
    }
    let rows: Vec<BenchRow> = opts
        .grid
        .iter()
        .zip(&mut samples)
        .map(|(&n, s)| {
            s.sort_by(f64::total_cmp);
            let median_ms = s[s.len() / 2];
            BenchRow { n, median_ms, per_round_us: median_ms * 1e3 / opts.rounds as f64 }
        })
        .collect();
    let report = BenchReport {
        config_hash: sha_hex(emit_options(opts).as_bytes()),
        seed: opts.seed,
        rounds: opts.rounds,
        repeats: opts.repeats,
        fitted_exponent: fit_exponent(&rows),
        max_doubling_factor: max_doubling_factor(&rows),
        rows,
    };
    if let Some(dir) = &opts.out_dir {
        ensure_dir(dir)?;
        let mut table = format!("# seed={}, config_hash={}\nn,median_ms,per_round_us\n", report.seed, report.config_hash);
        for r in &report.rows {
            let _ = writeln!(table, "{},{:.4},{:.3}", r.n, r.median_ms, r.per_round_us);
        }
        write_file(&dir.join("bench.csv"), table.as_bytes())?;
        write_file(&dir.join("bench.json"), &to_json(&report))?;
        write_file(&dir.join("bench_manifest.toml"), emit_options(opts).as_bytes())?;
    }
    Ok(report)
}
