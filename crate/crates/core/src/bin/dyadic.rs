use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde_json::json;

use dyadic_weights::characteristics::CharacteristicReport;
use dyadic_weights::factory::WeightSpec;
use dyadic_weights::io;
use dyadic_weights::norms::{
    haar_multiplier_norm, positive_operator_norm, square_function_norm, uniform_sigma_norm, SamplingBudget,
};
use dyadic_weights::operators::{lambda_from_weights, HaarMultiplier};
use dyadic_weights::verify::{run_suite, ExperimentConfig, SeedRange};
use dyadic_weights::{DyadicTree, Result, StepWeight};

/// Weighted dyadic square functions, Haar multipliers and weight characteristics.
#[derive(Parser)]
#[command(name = "dyadic", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Weight specs: typed JSON, `{"depth":N,"leaves":[..]}`, `const<c>` or `@file`.
#[derive(Args)]
struct Weights {
    #[arg(long)]
    u: Option<String>,
    #[arg(long)]
    v: Option<String>,
    #[arg(long)]
    w: Option<String>,
    /// Tree depth for `const` weights; must agree with JSON specs.
    #[arg(long)]
    depth: Option<u32>,
}

impl Weights {
    /// `[u, v, w]`, missing ones being the unit weight. JSON specs fix the
    /// depth used for `const` shorthands when `--depth` is absent.
    fn resolve(&self) -> Result<[StepWeight; 3]> {
        let specs = [&self.u, &self.v, &self.w];
        if let Some(depth) = self.depth {
            io::check_depth(depth)?;
        }
        let mut depth = self.depth;
        let mut parsed: [Option<StepWeight>; 3] = Default::default();
        for (slot, spec) in parsed.iter_mut().zip(specs) {
            if let Some(spec) = spec.as_deref().filter(|s| !s.trim().starts_with("const")) {
                let w = io::parse_weight(spec, depth)?;
                depth = Some(w.depth());
                *slot = Some(w);
            }
        }
        let mut out = Vec::with_capacity(3);
        for (slot, spec) in parsed.into_iter().zip(specs) {
            out.push(match slot {
                Some(w) => w,
                None => io::parse_weight(spec.as_deref().unwrap_or("const1"), depth)?,
            });
        }
        Ok(out.try_into().expect("three weights"))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the characteristic report of `w`, or of the triple when `--u`/`--v` are given.
    Characteristics {
        #[command(flatten)]
        weights: Weights,
        /// Exponents for the A_p and RH_p characteristics.
        #[arg(long = "p", default_values_t = [2.0])]
        exponents: Vec<f64>,
    },
    /// Compute an operator norm from L²(u) to L²(v).
    Norm {
        #[arg(long, value_enum)]
        op: Operator,
        #[command(flatten)]
        weights: Weights,
        /// Exponent of the Haar multiplier symbol.
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        /// `all+`, `all-` or `{"default":1,"overrides":{"j,k":-1}}`.
        #[arg(long, default_value = "all+", conflicts_with = "sigma_sup")]
        sigma: String,
        /// Maximise over sign patterns instead of using `--sigma`.
        #[arg(long)]
        sigma_sup: bool,
        /// Random patterns tried when the sign search is too large to enumerate.
        #[arg(long, default_value_t = SamplingBudget::default().samples)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the claim suite and write verdicts and plot data.
    Verify(VerifyArgs),
    /// Print a weight as a leaf-level JSON spec.
    Generate {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long, default_value_t = dyadic_weights::dyadic::DEFAULT_DEPTH)]
        depth: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of consecutive seeds for `random`, one spec per line.
        #[arg(long, default_value_t = 1)]
        count: u64,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        value: f64,
        /// Print the constructor spec instead of the leaf values.
        #[arg(long)]
        typed: bool,
    },
    /// Evaluate characteristics and norms along a one-parameter weight family, as CSV.
    Sweep {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, allow_hyphen_values = true)]
        to: f64,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        #[arg(long, default_value_t = 5)]
        depth: u32,
        /// Output CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Operator {
    Squarefn,
    Haarmult,
    Positive,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Random,
    Power,
    Constant,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    /// `x^α` with α the parameter.
    Power,
    /// `1` on the left half and the parameter on the right half.
    Step,
    /// Product weight with `b_I = s·√|I|` on every interval, `s` the parameter.
    Fkp,
}

#[derive(Args)]
struct VerifyArgs {
    /// JSON experiment config; the flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    depth: Option<u32>,
    /// Inclusive seed range, `a..b`.
    #[arg(long, value_parser = parse_seed_range)]
    seeds: Option<SeedRange>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Comma-separated claim ids; an empty string runs nothing.
    #[arg(long)]
    suite: Option<String>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    no_power: bool,
    #[arg(long)]
    no_fixtures: bool,
}

fn parse_seed_range(text: &str) -> std::result::Result<SeedRange, String> {
    let (a, b) = text.split_once("..").ok_or("expected a..b")?;
    let a = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b = b.trim().trim_start_matches('=').parse().map_err(|e| format!("{e}"))?;
    Ok(SeedRange(a, b))
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn characteristics(weights: &Weights, exponents: &[f64]) -> Result<()> {
    if weights.w.is_none() {
        Cli::command()
            .error(ErrorKind::MissingRequiredArgument, "characteristics needs --w <W>")
            .exit();
    }
    let [u, v, w] = weights.resolve()?;
    let report = if weights.u.is_some() || weights.v.is_some() {
        CharacteristicReport::triple(&u, &v, &w, exponents)?
    } else {
        CharacteristicReport::single(&w, exponents)?
    };
    print_json(&report)
}

#[allow(clippy::too_many_arguments)]
fn norm(
    op: Operator,
    weights: &Weights,
    t: f64,
    sigma: &str,
    sigma_sup: bool,
    samples: usize,
    seed: u64,
) -> Result<()> {
    let [u, v, w] = weights.resolve()?;
    let record = match op {
        Operator::Squarefn => json!(square_function_norm(&u, &v, &w)?),
        Operator::Positive => {
            let lambda = lambda_from_weights(&u, &v, &w)?;
            json!(positive_operator_norm(&w, &lambda, &u, &v)?)
        }
        Operator::Haarmult if sigma_sup => {
            let (result, pattern) = uniform_sigma_norm(&w, t, &u, &v, SamplingBudget { samples, seed })?;
            let mut record = json!(result);
            record["sigma"] = json!(pattern.to_spec());
            record
        }
        Operator::Haarmult => {
            let signs = io::parse_signs(sigma, w.tree())?;
            json!(haar_multiplier_norm(&HaarMultiplier::new(w, t, signs)?, &u, &v)?)
        }
    };
    print_json(&record)
}

/// Returns whether every asserted verdict passed.
fn verify(args: &VerifyArgs) -> Result<bool> {
    let mut config = match &args.config {
        Some(path) => io::load_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(depth) = args.depth {
        config.depth = depth;
    }
    if let Some(seeds) = args.seeds {
        config.seeds = seeds;
    }
    if let Some(epsilon) = args.epsilon {
        config.epsilon = epsilon;
    }
    if let Some(suite) = &args.suite {
        config.suite = Some(
            suite
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect(),
        );
    }
    if let Some(dir) = &args.output_dir {
        config.output_dir = dir.clone();
    }
    config.include_power &= !args.no_power;
    config.include_fixtures &= !args.no_fixtures;
    io::validate_config(&config)?;
    io::prepare_output_dir(&config.output_dir)?;

    let corpus = io::build_corpus(&config)?;
    let budget = SamplingBudget {
        samples: config.sigma_samples,
        seed: 0,
    };
    let out = run_suite(&corpus, &config.claims()?, &config.tolerances()?, budget)?;
    io::write_suite_output(&config.output_dir, &out)?;
    let failures: Vec<_> = out
        .failures()
        .map(|v| json!({"claimId": v.claim_id, "seed": v.seed}))
        .collect();
    print_json(&json!({
        "triples": corpus.len(),
        "verdicts": out.verdicts.len(),
        "failures": failures,
        "series": out.series.keys().collect::<Vec<_>>(),
        "outputDir": config.output_dir,
    }))?;
    Ok(out.all_pass())
}

#[allow(clippy::too_many_arguments)]
fn generate(
    kind: Kind,
    depth: u32,
    seed: u64,
    count: u64,
    epsilon: f64,
    alpha: f64,
    value: f64,
    typed: bool,
) -> Result<()> {
    io::check_depth(depth)?;
    let specs: Vec<WeightSpec> = match kind {
        Kind::Random => (seed..seed + count.max(1))
            .map(|seed| WeightSpec::Random { depth, seed, epsilon })
            .collect(),
        Kind::Power => vec![WeightSpec::Power { depth, alpha }],
        Kind::Constant => vec![WeightSpec::Constant { depth, value }],
    };
    for spec in specs {
        let line = if typed {
            spec.build()?;
            serde_json::to_string(&spec)?
        } else {
            io::weight_to_json(&spec.build()?)?
        };
        println!("{line}");
    }
    Ok(())
}

fn family_member(family: Family, s: f64, tree: DyadicTree) -> Result<StepWeight> {
    let spec = match family {
        Family::Power => WeightSpec::Power {
            depth: tree.depth(),
            alpha: s,
        },
        Family::Step => {
            let half = tree.leaf_count() / 2;
            return StepWeight::from_fn(tree, |k| if k < half { 1.0 } else { s });
        }
        Family::Fkp => WeightSpec::Fkp {
            depth: tree.depth(),
            b: tree.non_leaf().map(|i| (i.key(), s * i.length().sqrt())).collect(),
        },
    };
    spec.build()
}

#[derive(serde::Serialize)]
#[serde(rename_all = "camelCase")]
struct SweepRow {
    param: f64,
    a2: f64,
    rh2: f64,
    a_inf: f64,
    rh1: f64,
    doubling: f64,
    /// `‖S_w‖_{L²→L²}` with `w` the family member.
    weighted_square_function: f64,
    /// `‖S‖_{L²(w)→L²(w)}` for the unweighted square function.
    one_weight_square_function: f64,
}

fn sweep(family: Family, from: f64, to: f64, steps: usize, depth: u32, out: Option<&PathBuf>) -> Result<()> {
    io::check_depth(depth)?;
    let tree = DyadicTree::new(depth)?;
    let one = StepWeight::ones(tree);
    let steps = steps.max(1);
    let mut rows = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let s = from + (to - from) * k as f64 / steps as f64;
        let w = family_member(family, s, tree)?;
        let report = CharacteristicReport::single(&w, &[2.0])?;
        rows.push(SweepRow {
            param: s,
            a2: report.ap["2"],
            rh2: report.rhp["2"],
            a_inf: report.a_inf,
            rh1: report.rh1,
            doubling: report.doubling,
            weighted_square_function: square_function_norm(&one, &one, &w)?.value,
            one_weight_square_function: square_function_norm(&w, &w, &one)?.value,
        });
    }
    let sink: Box<dyn std::io::Write> = match out {
        Some(path) => Box::new(std::fs::File::create(path)?),
        None => Box::new(std::io::stdout()),
    };
    let mut writer = csv::Writer::from_writer(sink);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Characteristics { weights, exponents } => characteristics(&weights, &exponents)?,
        Command::Norm {
            op,
            weights,
            t,
            sigma,
            sigma_sup,
            samples,
            seed,
        } => norm(op, &weights, t, &sigma, sigma_sup, samples, seed)?,
        Command::Verify(args) => return verify(&args),
        Command::Generate {
            kind,
            depth,
            seed,
            count,
            epsilon,
            alpha,
            value,
            typed,
        } => generate(kind, depth, seed, count, epsilon, alpha, value, typed)?,
        Command::Sweep {
            family,
            from,
            to,
            steps,
            depth,
            out,
        } => sweep(family, from, to, steps, depth, out.as_ref())?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
