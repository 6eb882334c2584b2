use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use toeplitz_lab::array::{Patch, Window};
use toeplitz_lab::config::{Deck, DeckArray, DeckConfig};
use toeplitz_lab::homomorphism::{pullback_patch, HomSpec};
use toeplitz_lab::independence::{find_independence_set, SearchOutcome, CONVENTION};
use toeplitz_lab::suites::{self, Options};
use toeplitz_lab::toeplitz_z::{summarize, williams_generate};
use toeplitz_lab::{measures, Error};

#[derive(Parser)]
#[command(name = "toeplitz-lab", version, about = "Toeplitz subshifts over Z, Z^r and Z^r ⋊ F")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Deck file (TOML)
    #[arg(long, conflicts_with = "deck")]
    config: Option<PathBuf>,
    /// Bundled deck: williams-m2, williams-m3, z2-m2, dihedral-m2, swap-m2
    #[arg(long)]
    deck: Option<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    threads: Option<usize>,
    /// Wall-clock seconds allowed for each independence search
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// η of a Williams deck on [-radius, radius]
    GenZ {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        radius: Option<i64>,
    },
    /// η of a group deck on D_N R
    GenGroup {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        level: usize,
    },
    /// Frequencies, d_n, A_n/A_0 recursions and Z masses
    Measures {
        #[command(flatten)]
        common: Common,
    },
    /// Exhaustive fiber scan over depth-K coords
    Fibers {
        #[command(flatten)]
        common: Common,
    },
    /// Certificates for the single-site symbol cylinders, sizes 1..=size
    Independence {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        radius: Option<i64>,
    },
    /// φ*η for the deck's homomorphism, with η from the williams-m2 deck
    Pullback {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20)]
        radius: i64,
    },
    /// Every invariant suite, one JSON verdict
    VerifyAll {
        #[command(flatten)]
        common: Common,
    },
}

enum Outcome {
    Ok,
    Violation(String),
    Budget(String),
}

fn load(common: &Common) -> Result<Deck, Error> {
    let cfg = match (&common.config, &common.deck) {
        (Some(p), None) => DeckConfig::load(p)?,
        (None, Some(name)) => DeckConfig::bundled(name)?,
        _ => return Err(Error::Config("pass exactly one of --config or --deck".into())),
    };
    cfg.build()
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(dir.join(name), text)?;
    Ok(())
}

fn write_csv<R: Serialize>(dir: &Path, name: &str, rows: impl IntoIterator<Item = R>) -> Result<(), Error> {
    let mut w = csv::Writer::from_path(dir.join(name)).map_err(|e| Error::Io(e.into()))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}

/// One row per cell; columns f, v1..vr, symbol, level, provenance.
fn write_patch_csv(dir: &Path, name: &str, patch: &Patch) -> Result<(), Error> {
    let mut w = csv::Writer::from_path(dir.join(name)).map_err(|e| Error::Io(e.into()))?;
    let r = patch.window.rank();
    let mut header = vec!["f".to_string()];
    header.extend((1..=r).map(|j| format!("v{j}")));
    header.extend(["symbol", "level", "provenance"].map(String::from));
    w.write_record(&header).map_err(|e| Error::Io(e.into()))?;
    for (g, c) in patch.iter() {
        let mut rec = vec![g.finite().to_string()];
        rec.extend(g.coords().iter().map(|x| x.to_string()));
        match c {
            Some(c) => rec.extend([c.symbol.to_string(), c.level.to_string()]),
            None => rec.extend([String::new(), String::new()]),
        }
        rec.push("counted".into());
        w.write_record(&rec).map_err(|e| Error::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}

fn log(dir: &Path, line: &str) {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    if let Ok(mut f) = fs::OpenOptions::new().create(true).append(true).open(dir.join("run.log")) {
        let _ = writeln!(f, "{secs} {line}");
    }
}

fn run(cmd: Command) -> Result<Outcome, Error> {
    let common = match &cmd {
        Command::GenZ { common, .. }
        | Command::GenGroup { common, .. }
        | Command::Measures { common }
        | Command::Fibers { common }
        | Command::Independence { common, .. }
        | Command::Pullback { common, .. }
        | Command::VerifyAll { common } => common.clone(),
    };
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let deck = load(&common)?;
    let out = &common.out;
    fs::create_dir_all(out)?;
    let opts = Options { search_time: common.budget.map(Duration::from_secs) };
    log(out, &format!("start deck={}", deck.name()));
    let result = match cmd {
        Command::GenZ { radius, .. } => {
            let DeckArray::Williams(w) = &deck.array else {
                return Err(Error::Config(format!("{} is not a Williams deck", deck.name())));
            };
            let n = radius.unwrap_or(w.params().periods[2.min(w.params().depth() - 1)]);
            let patch = williams_generate(w.params(), n)?;
            write_patch_csv(out, "eta_z.csv", &patch)?;
            write_json(out, "summary_z.json", &json!({ "deck": deck.name(), "provenance": "counted", "summary": summarize(w.params(), &patch) }))?;
            Outcome::Ok
        }
        Command::GenGroup { level, .. } => {
            let t = suites::group_deck(&deck)?;
            let patch = t.generate_eta(level)?;
            let strata = t.strata_sizes(&patch)?;
            write_patch_csv(out, "eta_group.csv", &patch)?;
            write_json(out, "strata.json", &json!({ "deck": deck.name(), "level": level, "provenance": "counted", "strata": strata }))?;
            Outcome::Ok
        }
        Command::Measures { .. } => {
            let checks = suites::measures_suite(&deck)?;
            if let Some(t) = deck.array.group_toeplitz() {
                #[derive(Serialize)]
                struct Row {
                    level: usize,
                    symbol: u8,
                    numerator: i128,
                    denominator: i128,
                    provenance: &'static str,
                }
                let mut rows = Vec::new();
                for n in 1..=deck.config.run.measure_level {
                    let mu = measures::mu_n_freq(t, n)?;
                    for (s, m) in mu.symbols.iter().zip(&mu.mass) {
                        rows.push(Row { level: n, symbol: *s, numerator: *m.numer(), denominator: *m.denom(), provenance: "counted" });
                    }
                }
                write_csv(out, "frequencies.csv", rows)?;
            }
            write_json(out, "measures.json", &json!({ "deck": deck.name(), "checks": checks }))?;
            verdict_of(&checks)
        }
        Command::Fibers { .. } => {
            let scan = suites::run_fiber_scan(&deck)?;
            #[derive(Serialize)]
            struct Row {
                coords: String,
                count: usize,
                bound: u128,
                pieces: usize,
                aperiodic: usize,
                approximants: usize,
                skipped: usize,
                escapes: usize,
                provenance: &'static str,
            }
            write_csv(
                out,
                "fibers.csv",
                scan.reports.iter().map(|r| Row {
                    coords: r.coords.to_string(),
                    count: r.count(),
                    bound: r.bound,
                    pieces: r.pieces,
                    aperiodic: r.aperiodic,
                    approximants: r.approximants,
                    skipped: r.skipped,
                    escapes: r.escapes,
                    provenance: "counted",
                }),
            )?;
            write_json(
                out,
                "fibers.json",
                &json!({
                    "deck": deck.name(), "provenance": "counted", "depth": scan.depth, "radius": scan.radius,
                    "coords": scan.coords_scanned, "bound": scan.bound, "max_count": scan.max_count,
                    "histogram": scan.histogram, "escapes": scan.total_escapes, "all_within_bound": scan.all_within_bound,
                }),
            )?;
            if scan.all_within_bound {
                Outcome::Ok
            } else {
                Outcome::Violation("fiber count above the bound".into())
            }
        }
        Command::Independence { size, radius, .. } => {
            let a = deck.array();
            let oracle = suites::independence_oracle(&deck)?;
            let cyl = suites::symbol_cylinders(a);
            let size = size.unwrap_or(deck.config.run.independence_size);
            let radius = radius.unwrap_or(deck.config.run.independence_radius);
            #[derive(Serialize)]
            struct Row {
                k: usize,
                size: usize,
                radius: i64,
                verdict: &'static str,
                nodes: u64,
                provenance: &'static str,
            }
            let mut rows = Vec::new();
            let mut certificates = Vec::new();
            let mut outcome = Outcome::Ok;
            for l in 1..=size {
                let budget = toeplitz_lab::independence::Budget::nodes(deck.config.run.node_budget);
                let budget = match opts.search_time {
                    Some(t) => budget.with_time(t),
                    None => budget,
                };
                let res = find_independence_set(&cyl, l, radius, &oracle, &budget)?;
                let nodes = match &res {
                    SearchOutcome::Found { nodes, .. } | SearchOutcome::Exhausted { nodes } | SearchOutcome::None { nodes } => *nodes,
                };
                rows.push(Row { k: cyl.len(), size: l, radius, verdict: res.label(), nodes, provenance: "search" });
                match res {
                    SearchOutcome::Found { certificate, .. } => certificates.push(certificate),
                    SearchOutcome::Exhausted { .. } => {
                        outcome = Outcome::Budget(format!("search for |J| = {l} ran out of budget"));
                        break;
                    }
                    SearchOutcome::None { .. } => {
                        outcome = Outcome::Violation(format!("no certificate with |J| = {l} in B(0,{radius})"));
                        break;
                    }
                }
            }
            write_csv(out, "independence.csv", rows)?;
            write_json(out, "certificates.json", &json!({ "deck": deck.name(), "convention": CONVENTION, "provenance": "search", "certificates": certificates }))?;
            outcome
        }
        Command::Pullback { radius, .. } => {
            let spec: HomSpec = deck
                .config
                .hom
                .clone()
                .ok_or_else(|| Error::Config(format!("{} has no [hom] section", deck.name())))?;
            let g = deck.array().group().clone();
            let source_deck = Deck::load_bundled("williams-m2")?;
            let DeckArray::Williams(w) = &source_deck.array else { unreachable!() };
            let reach: i64 = spec.w.iter().map(|x| x.abs()).sum::<i64>() * radius;
            let src = williams_generate(w.params(), reach.max(w.params().periods[0]))?;
            let patch = pullback_patch(&spec, &g, &src, Window::ball(g.rank(), radius, g.finite_order()))?;
            write_patch_csv(out, "pullback.csv", &patch)?;
            Outcome::Ok
        }
        Command::VerifyAll { .. } => {
            let v = suites::verify_all(&deck, &opts)?;
            write_json(out, "verdict.json", &v)?;
            if v.budget_exhausted {
                Outcome::Budget("a required search ran out of budget".into())
            } else if v.passed {
                Outcome::Ok
            } else {
                let failed: Vec<String> = v.checks.iter().filter(|c| c.hard && !c.passed).map(|c| c.name.clone()).collect();
                Outcome::Violation(format!("failed: {}", failed.join(", ")))
            }
        }
    };
    log(out, "done");
    Ok(result)
}

fn verdict_of(checks: &[suites::Check]) -> Outcome {
    match checks.iter().find(|c| c.hard && !c.passed) {
        Some(c) => Outcome::Violation(format!("{} failed", c.name)),
        None => Outcome::Ok,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Violation(msg)) => {
            eprintln!("invariant violation: {msg}");
            ExitCode::from(1)
        }
        Ok(Outcome::Budget(msg)) => {
            eprintln!("budget exhausted: {msg}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Invariant(_) | Error::Verification(_) => 1,
                Error::Budget(_) => 3,
                _ => 2,
            })
        }
    }
}
