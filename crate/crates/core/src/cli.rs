//! The `prefkit` command line.
//!
//! Exit codes: 0 success, 1 strict validation failure, 2 usage error,
//! 3 I/O or numeric failure. All outputs of a command are computed first
//! and written together at the end; existing files are only replaced when
//! `--force` is given.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::assign::{reassign, Assignment, LossReport};
use crate::error::Error;
use crate::kits::{design_all, Kit};
use crate::kmeans::{best_centroid_kits, sweep, SweepConfig, SweepTable, MIN_KITS};
use crate::model::{
    load_catalog, load_preferences, validate_constraint, write_preferences, ItemCatalog, PreferenceMatrix,
    SelectionConstraint, ValidationReport,
};
use crate::rng::derive_seed;
use crate::signs::{cluster_count_table, sign_clusters, Axis, SignClustering};
use crate::svd::{scree, svd, truncate, SvdFactors};
use crate::synth::{generate_synthetic, random_kits, write_ground_truth, SyntheticSpec};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_FAILURE: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "prefkit", version, about = "Cluster binary preference surveys into fixed-size kits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check every respondent against the selection quotas.
    Validate(ValidateArgs),
    /// Generate a synthetic population around planted kits.
    Synth(SynthArgs),
    /// K-means silhouette sweep over a range of kit counts.
    KmeansSweep(SweepArgs),
    /// Singular values of the preference matrix (scree data).
    Svd(SvdArgs),
    /// Sign-pattern clusters of users and items.
    ClusterSigns(RankArgs),
    /// One kit per user sign cluster.
    DesignKits(RankArgs),
    /// Move users to their least-mismatched kit and report losses.
    Reassign(RankArgs),
    /// Full SVD route: scree, sign clusters, kits, reassignment, losses.
    Pipeline(RankArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Item catalog CSV (item_id,name,category).
    #[arg(long)]
    pub catalog: PathBuf,
    /// Preference matrix CSV (user_id,<items>...).
    #[arg(long)]
    pub prefs: PathBuf,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Overwrite existing output files.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct ConstraintArgs {
    /// Items each respondent picks from the expensive category.
    #[arg(long, default_value_t = 6)]
    pub expensive_quota: usize,
    /// Items each respondent picks from the cheap category.
    #[arg(long, default_value_t = 4)]
    pub cheap_quota: usize,
}

impl ConstraintArgs {
    fn constraint(&self) -> SelectionConstraint {
        SelectionConstraint::new(self.expensive_quota, self.cheap_quota)
    }
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub constraint: ConstraintArgs,
    /// Exit with status 1 when any row violates the quotas.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub catalog: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub constraint: ConstraintArgs,
    #[arg(long, default_value_t = 200)]
    pub n_users: usize,
    /// Number of planted kits.
    #[arg(long, default_value_t = 8)]
    pub kits: usize,
    /// Swaps per category applied to each user's planted kit.
    #[arg(long, default_value_t = 1)]
    pub noise: usize,
    /// Minimum pairwise Hamming distance between planted kits.
    #[arg(long, default_value_t = 10)]
    pub min_kit_distance: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub constraint: ConstraintArgs,
    /// Refuse to run when any row violates the quotas (exit 1).
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = MIN_KITS)]
    pub k_min: usize,
    #[arg(long, default_value_t = 15)]
    pub k_max: usize,
    #[arg(long, default_value_t = 3)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Centroid damping factor in (0, 1]; 1 is plain Lloyd.
    #[arg(long, default_value_t = 0.3)]
    pub lambda: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    /// Permit k below the minimum of four kits.
    #[arg(long)]
    pub allow_small_k: bool,
    /// Pick kit items per category quota instead of a flat top list.
    #[arg(long)]
    pub constrained_kits: bool,
}

#[derive(Debug, Args)]
pub struct SvdArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Truncation rank r.
    #[arg(long, default_value_t = 4)]
    pub rank: usize,
    /// Pick kit items per category quota instead of a flat top list.
    #[arg(long)]
    pub constrained_kits: bool,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Validation(usize),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type CmdResult<T> = std::result::Result<T, Failure>;

/// Output files of one command, written together by [`Outputs::commit`].
#[derive(Debug, Default)]
struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    fn add(&mut self, name: &str, contents: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), contents.into()));
    }

    fn commit(self, out: &OutputArgs) -> CmdResult<()> {
        fs::create_dir_all(&out.out).map_err(|e| Error::io(&out.out, e))?;
        if !out.force {
            if let Some((name, _)) = self.files.iter().find(|(n, _)| out.out.join(n).exists()) {
                return Err(Error::OutputExists(out.out.join(name)).into());
            }
        }
        for (name, bytes) in self.files {
            let path = out.out.join(name);
            fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Validation(n)) => {
            eprintln!("error: {n} row(s) violate the selection quotas");
            EXIT_VALIDATION
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

fn dispatch(cmd: &Command) -> CmdResult<()> {
    match cmd {
        Command::Validate(a) => cmd_validate(a),
        Command::Synth(a) => cmd_synth(a),
        Command::KmeansSweep(a) => cmd_kmeans_sweep(a),
        Command::Svd(a) => cmd_svd(a),
        Command::ClusterSigns(a) => cmd_rank(a, Stage::Signs),
        Command::DesignKits(a) => cmd_rank(a, Stage::Kits),
        Command::Reassign(a) => cmd_rank(a, Stage::Reassign),
        Command::Pipeline(a) => cmd_rank(a, Stage::Pipeline),
    }
}

struct Loaded {
    catalog: ItemCatalog,
    prefs: PreferenceMatrix,
    constraint: SelectionConstraint,
    report: ValidationReport,
}

fn load(input: &InputArgs, constraint: &ConstraintArgs) -> CmdResult<Loaded> {
    let catalog = load_catalog(&input.catalog)?;
    let prefs = load_preferences(&input.prefs, &catalog)?;
    let constraint = constraint.constraint();
    constraint.check(&catalog).map_err(|e| Failure::Usage(e.to_string()))?;
    let report = validate_constraint(&prefs, &catalog, &constraint)?;
    Ok(Loaded {
        catalog,
        prefs,
        constraint,
        report,
    })
}

fn load_common(common: &CommonArgs) -> CmdResult<Loaded> {
    let loaded = load(&common.input, &common.constraint)?;
    if common.strict && !loaded.report.is_clean() {
        return Err(Failure::Validation(loaded.report.violations.len()));
    }
    Ok(loaded)
}

fn csv_bytes<F>(header: &[&str], fill: F) -> CmdResult<Vec<u8>>
where
    F: FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> csv::Result<()>,
{
    let mut buf = Vec::new();
    {
        let mut w = crate::model::csv_writer(&mut buf);
        w.write_record(header).map_err(Error::from)?;
        fill(&mut w).map_err(Error::from)?;
        w.flush().map_err(|e| Error::io("<buffer>", e))?;
    }
    Ok(buf)
}

fn violations_csv(report: &ValidationReport) -> CmdResult<Vec<u8>> {
    csv_bytes(&["row", "user_id", "expensive", "cheap", "total"], |w| {
        for v in &report.violations {
            w.write_record([
                v.row.to_string(),
                v.user_id.clone(),
                v.expensive.to_string(),
                v.cheap.to_string(),
                v.total().to_string(),
            ])?;
        }
        Ok(())
    })
}

fn cmd_validate(args: &ValidateArgs) -> CmdResult<()> {
    let loaded = load(&args.input, &args.constraint)?;
    let mut out = Outputs::default();
    out.add("violations.csv", violations_csv(&loaded.report)?);
    out.commit(&args.output)?;
    let n = loaded.report.violations.len();
    eprintln!("{} rows checked, {n} violation(s)", loaded.prefs.n_users());
    if args.strict && n > 0 {
        return Err(Failure::Validation(n));
    }
    Ok(())
}

fn kits_csv(kits: &[Kit]) -> CmdResult<Vec<u8>> {
    csv_bytes(&["kit_id", "item_id"], |w| {
        for kit in kits {
            for q in kit.items() {
                w.write_record([kit.id.to_string(), q.to_string()])?;
            }
        }
        Ok(())
    })
}

fn kits_json(kits: &[Kit]) -> CmdResult<Vec<u8>> {
    let mut map = serde_json::Map::new();
    for kit in kits {
        map.insert(kit.id.to_string(), serde_json::json!(kit.items()));
    }
    let mut s = serde_json::to_string_pretty(&serde_json::Value::Object(map))
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn cmd_synth(args: &SynthArgs) -> CmdResult<()> {
    let catalog = load_catalog(&args.catalog)?;
    let c = args.constraint.constraint();
    let usage = |e: Error| Failure::Usage(e.to_string());
    let planted = random_kits(
        &catalog,
        &c,
        args.kits,
        args.min_kit_distance,
        derive_seed(args.seed, "synth-kits", &[]),
    )
    .map_err(usage)?;
    let spec = SyntheticSpec {
        n_users: args.n_users,
        planted_kits: planted,
        noise_swaps: args.noise,
        seed: derive_seed(args.seed, "synth-users", &[]),
    };
    let pop = generate_synthetic(&spec, &catalog, &c).map_err(usage)?;

    let mut prefs = Vec::new();
    write_preferences(&pop.prefs, &mut prefs)?;
    let mut truth = Vec::new();
    write_ground_truth(&pop, &mut truth)?;
    let mut out = Outputs::default();
    out.add("preferences.csv", prefs);
    out.add("ground_truth.csv", truth);
    out.add("planted_kits.csv", kits_csv(&spec.planted_kits)?);
    out.commit(&args.output)
}

fn sweep_outputs(table: &SweepTable, loaded: &Loaded, constrained: bool) -> CmdResult<Outputs> {
    let mut header = vec!["k".to_string()];
    header.extend((1..=table.trials).map(|t| format!("trial_{t}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let values = table.values();
    let wide = csv_bytes(&header_refs, |w| {
        for (k, row) in table.k_values.iter().zip(&values) {
            let mut rec = vec![k.to_string()];
            rec.extend(row.iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        Ok(())
    })?;
    let long = csv_bytes(&["k", "trial", "silhouette"], |w| {
        for cell in &table.cells {
            w.write_record([
                cell.k.to_string(),
                (cell.trial + 1).to_string(),
                cell.silhouette.macro_average.to_string(),
            ])?;
        }
        Ok(())
    })?;
    let mut kit_rows = Vec::new();
    for cell in &table.cells {
        let kits = best_centroid_kits(&cell.run, &loaded.catalog, &loaded.constraint, constrained)?;
        for kit in kits {
            for &q in kit.items() {
                kit_rows.push([cell.k, cell.trial + 1, kit.id, q]);
            }
        }
    }
    let kits = csv_bytes(&["k", "trial", "kit_id", "item_id"], |w| {
        for r in &kit_rows {
            w.write_record(r.iter().map(usize::to_string))?;
        }
        Ok(())
    })?;
    let mut out = Outputs::default();
    out.add("silhouette_table.csv", wide);
    out.add("silhouette_plot.csv", long);
    out.add("kmeans_kits.csv", kits);
    Ok(out)
}

fn cmd_kmeans_sweep(args: &SweepArgs) -> CmdResult<()> {
    let loaded = load_common(&args.common)?;
    if args.k_min < MIN_KITS && !args.allow_small_k {
        return Err(Failure::Usage(format!(
            "--k-min {} is below {MIN_KITS} kits; pass --allow-small-k to override",
            args.k_min
        )));
    }
    if args.k_min == 0 || args.k_min > args.k_max || args.k_max > loaded.prefs.n_users() {
        return Err(Failure::Usage(format!(
            "k range {}..={} must lie within 1..={}",
            args.k_min,
            args.k_max,
            loaded.prefs.n_users()
        )));
    }
    if !(args.lambda > 0.0 && args.lambda <= 1.0) || args.max_iters == 0 || args.trials == 0 {
        return Err(Failure::Usage(
            "--lambda must be in (0, 1]; --max-iters and --trials must be positive".into(),
        ));
    }
    let config = SweepConfig {
        k_min: args.k_min,
        k_max: args.k_max,
        trials: args.trials,
        seed: args.seed,
        lambda: args.lambda,
        max_iters: args.max_iters,
        k_floor: if args.allow_small_k { 1 } else { MIN_KITS },
        ..SweepConfig::default()
    };
    let table = sweep(&loaded.prefs, &config)?;
    sweep_outputs(&table, &loaded, args.constrained_kits)?.commit(&args.common.output)
}

fn scree_csv(f: &SvdFactors) -> CmdResult<Vec<u8>> {
    csv_bytes(&["rank", "sigma"], |w| {
        for (r, s) in scree(f) {
            w.write_record([r.to_string(), s.to_string()])?;
        }
        Ok(())
    })
}

fn cmd_svd(args: &SvdArgs) -> CmdResult<()> {
    let loaded = load_common(&args.common)?;
    let f = svd(&loaded.prefs.to_f64())?;
    let mut out = Outputs::default();
    out.add("scree.csv", scree_csv(&f)?);
    out.commit(&args.common.output)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stage {
    Signs,
    Kits,
    Reassign,
    Pipeline,
}

fn counts_csv(counts: &[(usize, usize)]) -> CmdResult<Vec<u8>> {
    csv_bytes(&["r", "count"], |w| {
        for (r, n) in counts {
            w.write_record([r.to_string(), n.to_string()])?;
        }
        Ok(())
    })
}

fn membership_csv(c: &SignClustering, ids: &[String]) -> CmdResult<Vec<u8>> {
    csv_bytes(&["element_id", "cluster_id", "pattern_bits"], |w| {
        for (i, id) in ids.iter().enumerate() {
            w.write_record([id.clone(), c.labels[i].to_string(), c.patterns[i].to_string()])?;
        }
        Ok(())
    })
}

fn losses_csv(kits: &[Kit], before: &LossReport, after: &LossReport) -> CmdResult<Vec<u8>> {
    csv_bytes(&["kit_id", "population", "normal_loss", "exponential_loss", "phase"], |w| {
        for (phase, rep) in [("before", before), ("after", after)] {
            for (j, kit) in kits.iter().enumerate() {
                w.write_record([
                    kit.id.to_string(),
                    rep.clusters.population[j].to_string(),
                    rep.clusters.normal[j].to_string(),
                    rep.clusters.exponential[j].to_string(),
                    phase.to_string(),
                ])?;
            }
        }
        Ok(())
    })
}

fn user_losses_csv(
    prefs: &PreferenceMatrix,
    kits: &[Kit],
    init: &Assignment,
    after: &Assignment,
    before_rep: &LossReport,
    after_rep: &LossReport,
) -> CmdResult<Vec<u8>> {
    csv_bytes(&["user_id", "kit_before", "kit_after", "loss_before", "loss_after"], |w| {
        for (i, id) in prefs.user_ids().iter().enumerate() {
            w.write_record([
                id.clone(),
                kits[init.kit_of_user[i]].id.to_string(),
                kits[after.kit_of_user[i]].id.to_string(),
                before_rep.per_user_loss[i].to_string(),
                after_rep.per_user_loss[i].to_string(),
            ])?;
        }
        Ok(())
    })
}

fn cmd_rank(args: &RankArgs, stage: Stage) -> CmdResult<()> {
    let loaded = load_common(&args.common)?;
    let prefs = &loaded.prefs;
    let f = svd(&prefs.to_f64())?;
    let p = f.rank_limit();
    if args.rank == 0 || args.rank > p {
        return Err(Failure::Usage(format!("--rank {} must lie within 1..={p}", args.rank)));
    }
    let t = truncate(&f, args.rank)?;
    let users = sign_clusters(&t, Axis::Users);
    let mut out = Outputs::default();

    if matches!(stage, Stage::Pipeline) {
        out.add("violations.csv", violations_csv(&loaded.report)?);
        out.add("scree.csv", scree_csv(&f)?);
    }
    if matches!(stage, Stage::Signs | Stage::Pipeline) {
        let items = sign_clusters(&t, Axis::Items);
        let item_ids: Vec<String> = (0..loaded.catalog.len()).map(|q| q.to_string()).collect();
        out.add("user_cluster_counts.csv", counts_csv(&cluster_count_table(&f, Axis::Users, 1, p)?)?);
        out.add("item_cluster_counts.csv", counts_csv(&cluster_count_table(&f, Axis::Items, 1, p)?)?);
        out.add("user_membership.csv", membership_csv(&users, prefs.user_ids())?);
        out.add("item_membership.csv", membership_csv(&items, &item_ids)?);
    }
    if stage != Stage::Signs {
        let kits = design_all(
            prefs,
            &users.member_lists(),
            &loaded.catalog,
            &loaded.constraint,
            args.constrained_kits,
        )?;
        if matches!(stage, Stage::Kits | Stage::Pipeline) {
            out.add("kits.csv", kits_csv(&kits)?);
            out.add("kits.json", kits_json(&kits)?);
        }
        if matches!(stage, Stage::Reassign | Stage::Pipeline) {
            let init = Assignment::from_cluster_labels(&users.labels, &kits)?;
            let (after, before_rep, after_rep) = reassign(prefs, &kits, &init)?;
            out.add("losses.csv", losses_csv(&kits, &before_rep, &after_rep)?);
            out.add(
                "user_losses.csv",
                user_losses_csv(prefs, &kits, &init, &after, &before_rep, &after_rep)?,
            );
            if stage == Stage::Pipeline {
                let mut summary = String::new();
                let _ = writeln!(summary, "users={}", prefs.n_users());
                let _ = writeln!(summary, "items={}", prefs.n_items());
                let _ = writeln!(summary, "rank={}", args.rank);
                let _ = writeln!(summary, "kits={}", kits.len());
                let _ = writeln!(summary, "violations={}", loaded.report.violations.len());
                let _ = writeln!(summary, "total_loss_before={}", before_rep.total_loss);
                let _ = writeln!(summary, "total_loss_after={}", after_rep.total_loss);
                out.add("summary.txt", summary);
            }
        }
    }
    out.commit(&args.common.output)
}
