//! Subcommand arguments and implementations.

use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use num_complex::Complex64 as C64;
use serde::Serialize;

use entorder::cost::{idist_unordered, CostInputs, CostReport, Sign};
use entorder::entropy::{entropy_profile, qmi_matrix, Alpha, QmiMatrix};
use entorder::generate as gen;
use entorder::io;
use entorder::mps::truncation_profile;
use entorder::optimize::{
    anneal, exhaustive_with_cap, two_opt, two_opt_restarts, AnnealParams, Objective,
    OrderingReport, DEFAULT_EXHAUSTIVE_CAP,
};
use entorder::state::{DenseState, SitePermutation};
use entorder::verify::{
    battery, check_main_bound, check_ordering_efficacy, check_qmi_gap, check_rank_sa_battery,
    check_sa_random, check_slater_symmetry, check_ssa_random, check_wsa_random, merge_results,
    CheckResult, EfficacyReport,
};
use entorder::HamiltonianSpec;

use crate::fail::{CliError, CliResult};
use crate::fsutil::{read_to_string, write_atomic};
use crate::manifest::RunManifest;

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args)]
pub struct GenerateArgs {
    #[command(subcommand)]
    pub kind: GenerateKind,
}

#[derive(Subcommand)]
pub enum GenerateKind {
    /// Product state: computational-basis levels or the uniform superposition
    Product {
        #[arg(long)]
        l: usize,
        #[arg(long, default_value_t = 2)]
        d: usize,
        /// Comma-separated basis level per site (default: all 0)
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<usize>>,
        /// Use the uniform local superposition at every site instead
        #[arg(long, conflicts_with = "levels")]
        plus: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// (|0...0> + |1...1>)/sqrt(2)
    Ghz {
        #[arg(long)]
        l: usize,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Uniform single-excitation superposition (d = 2)
    W {
        #[arg(long)]
        l: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Second-quantized Slater determinant from an L x N coefficient CSV
    Slater {
        #[arg(long)]
        coeffs: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Contract seeded random MPS cores to a normalized dense state
    RandomMps {
        #[arg(long)]
        l: usize,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long)]
        chi: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exact ground state of a small spin chain (tfim | xxz | heisenberg)
    GroundState {
        #[arg(long)]
        model: String,
        #[arg(long)]
        l: usize,
        #[arg(long, default_value_t = 1.0)]
        coupling: f64,
        /// Transverse field (tfim only, default 1)
        #[arg(long)]
        field: Option<f64>,
        /// ZZ anisotropy (xxz only, default 1)
        #[arg(long)]
        anisotropy: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

pub fn generate(args: GenerateArgs) -> CliResult<()> {
    let mut manifest = RunManifest::new("generate");
    let (state, out) = match args.kind {
        GenerateKind::Product { l, d, levels, plus, out } => {
            let state = if plus {
                let local = vec![C64::new(1.0, 0.0); d];
                gen::product_state(l, d, &vec![local; l])?
            } else {
                let levels = levels.unwrap_or_else(|| vec![0; l]);
                if levels.len() != l {
                    return Err(CliError::user(format!(
                        "{} levels given for {l} sites",
                        levels.len()
                    )));
                }
                gen::basis_product(l, d, &levels)?
            };
            (state, out)
        }
        GenerateKind::Ghz { l, d, out } => (gen::ghz(l, d)?, out),
        GenerateKind::W { l, out } => (gen::w_state(l)?, out),
        GenerateKind::Slater { coeffs, out } => {
            manifest.record_input(&coeffs)?;
            let matrix = io::coeffs_from_csv(&read_to_string(&coeffs)?)?;
            (gen::slater(&matrix)?, out)
        }
        GenerateKind::RandomMps { l, d, chi, seed, out } => {
            manifest = manifest.with_seed(seed);
            (gen::random_mps(l, d, chi, seed)?, out)
        }
        GenerateKind::GroundState { model, l, coupling, field, anisotropy, out } => {
            let spec = match model.as_str() {
                "tfim" | "ising" => HamiltonianSpec::TransverseIsing {
                    l,
                    coupling,
                    field: field.unwrap_or(1.0),
                },
                "xxz" => HamiltonianSpec::Xxz {
                    l,
                    coupling,
                    anisotropy: anisotropy.unwrap_or(1.0),
                },
                "heisenberg" => HamiltonianSpec::heisenberg(l, coupling),
                other => return Err(entorder::Error::UnknownModel(other.to_string()).into()),
            };
            (gen::ground_state(&spec)?, out)
        }
    };
    emit(&mut manifest, &out, io::state_to_json(&state)?.as_bytes())?;
    manifest.write_beside(&out)?;
    println!("wrote {} ({} sites, d = {})", out.display(), state.num_sites(), state.local_dim());
    Ok(())
}

#[derive(Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub state: PathBuf,
    /// Entropy orders for the profile
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.5, 1.0, 2.0])]
    pub alphas: Vec<f64>,
    /// Bond dimensions for the truncation profile
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 4])]
    pub chi: Vec<usize>,
    /// Output prefix: writes <out>.entropy.json, <out>.qmi.{json,csv},
    /// <out>.trunc.json and <out>.manifest.json
    #[arg(long)]
    pub out: PathBuf,
}

pub fn analyze(args: AnalyzeArgs) -> CliResult<()> {
    let mut manifest = RunManifest::new("analyze");
    manifest.record_input(&args.state)?;
    let state = io::state_from_json(&read_to_string(&args.state)?)?;

    let profiles = args
        .alphas
        .iter()
        .map(|&a| entropy_profile(&state, Alpha::new(a)?))
        .collect::<entorder::Result<Vec<_>>>()?;
    let entropy_doc = io::EntropyDoc::new(state.num_sites(), profiles);

    let q = qmi_matrix(&state, Alpha::VON_NEUMANN)?;
    let profiles = args
        .chi
        .iter()
        .map(|&chi| truncation_profile(&state, chi))
        .collect::<entorder::Result<Vec<_>>>()?;

    let prefix = args.out.display();
    let entropy_path = PathBuf::from(format!("{prefix}.entropy.json"));
    let qmi_json_path = PathBuf::from(format!("{prefix}.qmi.json"));
    let qmi_csv_path = PathBuf::from(format!("{prefix}.qmi.csv"));
    let trunc_path = PathBuf::from(format!("{prefix}.trunc.json"));
    emit(&mut manifest, &entropy_path, io::entropy_doc_to_json(&entropy_doc)?.as_bytes())?;
    emit(&mut manifest, &qmi_json_path, io::qmi_to_json(&q)?.as_bytes())?;
    emit(&mut manifest, &qmi_csv_path, io::qmi_to_csv(&q).as_bytes())?;
    emit(&mut manifest, &trunc_path, to_json(&profiles)?.as_bytes())?;
    manifest.write_beside(&PathBuf::from(format!("{prefix}.json")))?;
    println!("analyzed {} -> {prefix}.{{entropy,qmi,trunc}}", args.state.display());
    Ok(())
}

#[derive(Args)]
pub struct CostArgs {
    /// Mutual-information matrix (.json with alpha, or bare .csv)
    #[arg(long)]
    pub qmi: PathBuf,
    /// Entropy report from `analyze` (needs an alpha = 1 profile)
    #[arg(long)]
    pub entropies: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    pub eta: f64,
    #[arg(long, default_value = "+")]
    pub sign: Sign,
    /// Also evaluate the binary-tree aggregate (L must be a power of two)
    #[arg(long)]
    pub tree: bool,
    /// Report each unordered pair once in the distance cost
    #[arg(long)]
    pub unordered: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct CostDoc {
    pair_counting: &'static str,
    unit: &'static str,
    #[serde(flatten)]
    report: CostReport,
}

fn load_inputs(qmi_path: &Path, entropies_path: &Path) -> CliResult<CostInputs> {
    let qmi_text = read_to_string(qmi_path)?;
    let q: QmiMatrix = if qmi_path.extension().and_then(|e| e.to_str()) == Some("csv") {
        io::qmi_from_csv(&qmi_text)?
    } else {
        io::qmi_from_json(&qmi_text)?
    };
    let doc = io::entropy_doc_from_json(&read_to_string(entropies_path)?)?;
    if doc.l != q.num_sites() {
        return Err(CliError::user(format!(
            "entropy file has L = {} but the matrix has L = {}",
            doc.l,
            q.num_sites()
        )));
    }
    Ok(CostInputs::new(doc.von_neumann_single_site()?, q)?)
}

pub fn cost(args: CostArgs) -> CliResult<()> {
    let mut manifest = RunManifest::new("cost");
    manifest.record_input(&args.qmi)?;
    manifest.record_input(&args.entropies)?;
    let inputs = load_inputs(&args.qmi, &args.entropies)?;
    let mut report = CostReport::compute(&inputs, args.eta, args.sign, args.tree)?;
    if args.unordered {
        report.idist = idist_unordered(inputs.qmi(), args.eta, args.sign);
    }
    let bytes = match args.format {
        Format::Json => to_json(&CostDoc {
            pair_counting: if args.unordered { "unordered" } else { "ordered" },
            unit: "bits",
            report,
        })?
        .into_bytes(),
        Format::Csv => {
            let identity: Vec<usize> = (1..=inputs.num_sites()).collect();
            format!("{}\n{}\n", CostReport::csv_header(), report.csv_row(&identity)).into_bytes()
        }
    };
    emit(&mut manifest, &args.out, &bytes)?;
    manifest.write_beside(&args.out)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

#[derive(Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub qmi: PathBuf,
    #[arg(long)]
    pub entropies: PathBuf,
    /// idist | i-mps | i-mps-check | i-tree
    #[arg(long, default_value = "idist")]
    pub objective: String,
    #[arg(long, default_value_t = 2.0)]
    pub eta: f64,
    #[arg(long, default_value = "+")]
    pub sign: Sign,
    /// exhaustive | two-opt | anneal
    #[arg(long, default_value = "exhaustive")]
    pub method: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Restart count for two-opt (default 20) and anneal (default 4)
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Fixed start for two-opt: `identity` or a permutation like 3,1,2
    #[arg(long)]
    pub start: Option<String>,
    /// Initial annealing temperature (default: calibrated from probe moves)
    #[arg(long)]
    pub t0: Option<f64>,
    #[arg(long, default_value_t = 0.9)]
    pub cooling: f64,
    #[arg(long, default_value_t = 250)]
    pub steps: usize,
    #[arg(long, default_value_t = 60)]
    pub levels: usize,
    /// Write the accepted/rejected move log as CSV
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_EXHAUSTIVE_CAP)]
    pub max_exhaustive_l: usize,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_objective(args: &OptimizeArgs) -> CliResult<Objective> {
    match args.objective.as_str() {
        "idist" => Ok(Objective::Idist { eta: args.eta, sign: args.sign }),
        "i-mps" => Ok(Objective::IMps),
        "i-mps-check" => Ok(Objective::IMpsCheck),
        "i-tree" => Ok(Objective::ITree),
        other => Err(CliError::user(format!("unknown objective `{other}`"))),
    }
}

fn parse_start(text: &str, l: usize) -> CliResult<SitePermutation> {
    if text == "identity" {
        return Ok(SitePermutation::identity(l));
    }
    let sites: Vec<usize> = text
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|e| CliError::user(format!("start permutation: `{part}`: {e}")))
        })
        .collect::<CliResult<_>>()?;
    Ok(SitePermutation::new(sites)?)
}

pub fn optimize(args: OptimizeArgs) -> CliResult<()> {
    let mut manifest = RunManifest::new("optimize").with_seed(args.seed);
    manifest.record_input(&args.qmi)?;
    manifest.record_input(&args.entropies)?;
    let inputs = load_inputs(&args.qmi, &args.entropies)?;
    let objective = parse_objective(&args)?;

    let report: OrderingReport = match args.method.as_str() {
        "exhaustive" => exhaustive_with_cap(&inputs, objective, args.max_exhaustive_l)?,
        "two-opt" => match &args.start {
            Some(text) => two_opt(&inputs, objective, &parse_start(text, inputs.num_sites())?)?,
            None => two_opt_restarts(&inputs, objective, args.restarts.unwrap_or(20), args.seed)?,
        },
        "anneal" => {
            let params = AnnealParams {
                initial_temp: args.t0,
                cooling: args.cooling,
                steps_per_temp: args.steps,
                temp_levels: args.levels,
                restarts: args.restarts.unwrap_or(4),
                record_trajectory: args.trajectory.is_some(),
            };
            anneal(&inputs, objective, &params, args.seed)?
        }
        other => return Err(CliError::user(format!("unknown method `{other}`"))),
    };

    if let Some(path) = &args.trajectory {
        let mut csv = String::from("step,temperature,cost,accepted\n");
        for p in report.trajectory.iter().flatten() {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                p.step,
                io::fmt_full(p.temperature),
                io::fmt_full(p.cost),
                p.accepted
            ));
        }
        emit(&mut manifest, path, csv.as_bytes())?;
    }
    emit(&mut manifest, &args.out, to_json(&report)?.as_bytes())?;
    manifest.write_beside(&args.out)?;
    let perm: Vec<String> = report.best.iter().map(|s| s.to_string()).collect();
    println!("best ordering: {}  cost: {:.12}", perm.join(" "), report.best_cost);
    Ok(())
}

#[derive(Args)]
pub struct VerifyArgs {
    /// Suites: main-bound, ssa, wsa, slater, rank-sa, qmi-gap, efficacy
    #[arg(long, value_delimiter = ',', default_values_t = [
        "main-bound".to_string(), "ssa".to_string(), "wsa".to_string(),
        "slater".to_string(), "rank-sa".to_string(), "qmi-gap".to_string(),
    ])]
    pub suite: Vec<String>,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Chain length for the efficacy diagnostic
    #[arg(long, default_value_t = 6)]
    pub l: usize,
    /// Bond dimension for the efficacy diagnostic
    #[arg(long, default_value_t = 2)]
    pub chi: usize,
    /// Extra state files appended to the built-in battery
    #[arg(long)]
    pub state: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct VerifyDoc {
    passed: bool,
    suites: Vec<CheckResult>,
    efficacy: Option<EfficacyReport>,
}

pub fn verify(args: VerifyArgs) -> CliResult<()> {
    let mut manifest = RunManifest::new("verify").with_seed(args.seed);
    let mut extra_states = Vec::new();
    for path in &args.state {
        manifest.record_input(path)?;
        extra_states.push(io::state_from_json(&read_to_string(path)?)?);
    }

    let mut suites: Vec<CheckResult> = Vec::new();
    let mut efficacy = None;
    let battery_states = battery()?;
    let over_battery = |check: &dyn Fn(&DenseState) -> entorder::Result<CheckResult>,
                        name: &str,
                        extra: &[DenseState]|
     -> entorder::Result<CheckResult> {
        let mut partial = Vec::new();
        for item in &battery_states {
            partial.push(check(&item.state)?);
        }
        for state in extra {
            partial.push(check(state)?);
        }
        Ok(merge_results(name, &partial))
    };

    for suite in &args.suite {
        match suite.as_str() {
            "main-bound" => {
                suites.push(over_battery(&check_main_bound, "main-bound", &extra_states)?)
            }
            "ssa" => {
                suites.push(check_ssa_random(args.trials, args.seed)?);
                suites.push(check_sa_random(args.trials, args.seed.wrapping_add(1 << 32))?);
            }
            "wsa" => suites.push(check_wsa_random(
                args.trials,
                &[0.5, 2.0],
                args.seed.wrapping_add(2 << 32),
            )?),
            "slater" => {
                let mut partial = Vec::new();
                for (i, (l, n)) in
                    [(4usize, 2usize), (5, 2), (6, 3), (7, 3), (8, 4)].iter().enumerate()
                {
                    let coeffs =
                        gen::random_orthonormal(*l, *n, args.seed.wrapping_add(300 + i as u64));
                    partial.push(check_slater_symmetry(&gen::slater(&coeffs)?)?);
                }
                suites.push(merge_results("slater-symmetry", &partial));
            }
            "rank-sa" => suites.push(over_battery(
                &|s| check_rank_sa_battery(s, 6, 20, args.seed),
                "rank-sa",
                &extra_states,
            )?),
            "qmi-gap" => suites.push(over_battery(&check_qmi_gap, "qmi-gap", &extra_states)?),
            "efficacy" => {
                let ground = gen::ground_state(&HamiltonianSpec::TransverseIsing {
                    l: args.l,
                    coupling: 1.0,
                    field: 1.0,
                })?;
                let scramble = random_permutation(args.l, args.seed);
                let scrambled = ground.permute_sites(&scramble, false)?;
                efficacy = Some(check_ordering_efficacy(
                    &scrambled,
                    args.chi,
                    &[
                        Objective::IMps,
                        Objective::Idist { eta: 2.0, sign: Sign::Plus },
                        Objective::IMpsCheck,
                    ],
                )?);
            }
            other => return Err(CliError::user(format!("unknown suite `{other}`"))),
        }
    }

    let passed = suites.iter().all(|s| s.passed);
    let doc = VerifyDoc { passed, suites, efficacy };
    let bytes = match args.format {
        Format::Json => to_json(&doc)?.into_bytes(),
        Format::Csv => {
            let mut csv = format!("{}\n", CheckResult::summary_csv_header());
            for s in &doc.suites {
                csv.push_str(&s.summary_csv_row());
                csv.push('\n');
            }
            csv.into_bytes()
        }
    };
    emit(&mut manifest, &args.out, &bytes)?;
    manifest.write_beside(&args.out)?;
    for s in &doc.suites {
        println!(
            "{:<16} {:>6} instances  worst margin {:>12.3e}  {}",
            s.name,
            s.instances,
            s.worst_margin,
            if s.passed { "pass" } else { "FAIL" }
        );
    }
    if let Some(e) = &doc.efficacy {
        for entry in &e.entries {
            match entry.spearman {
                Some(r) => println!(
                    "efficacy {:<24} spearman {r:+.4}  regret {:.3e}",
                    entry.objective, entry.regret
                ),
                None => println!("efficacy {:<24} degenerate (constant)", entry.objective),
            }
        }
    }
    if !passed {
        return Err(CliError::internal("one or more verification suites failed"));
    }
    Ok(())
}

fn random_permutation(l: usize, seed: u64) -> SitePermutation {
    // Seeded Fisher-Yates without pulling a rand dependency into the CLI.
    let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state
    };
    let mut perm: Vec<usize> = (1..=l).collect();
    for i in (1..l).rev() {
        let j = (next() % (i as u64 + 1)) as usize;
        perm.swap(i, j);
    }
    SitePermutation::new(perm).expect("shuffle preserves the permutation property")
}

#[derive(Args)]
pub struct TruncateArgs {
    #[arg(long)]
    pub state: PathBuf,
    #[arg(long)]
    pub chi: usize,
    /// Also write the truncated state (renormalized) as JSON
    #[arg(long)]
    pub emit_state: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn truncate(args: TruncateArgs) -> CliResult<()> {
    let mut manifest = RunManifest::new("truncate");
    manifest.record_input(&args.state)?;
    let state = io::state_from_json(&read_to_string(&args.state)?)?;
    let profile = truncation_profile(&state, args.chi)?;
    if let Some(path) = &args.emit_state {
        let (mps, _) = entorder::mps::to_mps(&state, Some(args.chi))?;
        let amps = mps.contract();
        let norm = amps.norm();
        if norm < 1e-12 {
            return Err(CliError::user("truncated state has vanishing norm"));
        }
        let renormalized: Vec<C64> = amps.iter().map(|z| z / norm).collect();
        let truncated = DenseState::new(state.num_sites(), state.local_dim(), renormalized)?;
        emit(&mut manifest, path, io::state_to_json(&truncated)?.as_bytes())?;
    }
    emit(&mut manifest, &args.out, to_json(&profile)?.as_bytes())?;
    manifest.write_beside(&args.out)?;
    println!(
        "chi = {}: idealized total {:.6e}, realized {:.6e}",
        profile.chi, profile.total, profile.realized
    );
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    serde_json::to_string_pretty(value)
        .map_err(|e| CliError::internal(format!("serialization: {e}")))
}

fn emit(manifest: &mut RunManifest, path: &Path, bytes: &[u8]) -> CliResult<()> {
    write_atomic(path, bytes)?;
    manifest.record_output(path, bytes);
    Ok(())
}
