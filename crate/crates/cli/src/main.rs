//! `corrwalk` — photonic quantum-walk simulation and analysis from the
//! command line.
//!
//! Subcommands map one-to-one onto the library's analyses: single-photon
//! propagation, two-photon correlation matrices, classical-bound violation
//! maps, distribution similarity, device calibration, disorder ensembles,
//! and Hilbert-space dimension counting. Every run is deterministic given
//! its full flag set (seeds included), so repeated invocations produce
//! byte-identical artifacts.
//!
//! Exit codes: 0 on success, 2 for usage/validation/file errors, 3 for
//! numerical failures.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use corrwalk_core::io::{
    format_calibration_csv, format_calibration_json, format_ensemble_gamma_csv,
    format_ensemble_json, format_ensemble_single_csv, format_gamma_csv, format_gamma_json,
    format_nsigma_csv, format_single_json, format_vector_csv, format_violation_csv,
    format_violation_json, format_violation_sigma_csv, parse_counts_csv, parse_gamma_csv,
    parse_gamma_json, parse_lattice_spec, parse_vector_csv,
};
use corrwalk_core::render::{heatmap_ppm, violation_ppm};
use corrwalk_core::{
    build_single_hamiltonian, disorder_ensemble, distinguishable_correlation, estimate_gamma,
    fit_coupling, hilbert_dim, propagation_profile, propagator, quantum_correlation, similarity,
    single_photon_distribution, violation_map, violation_significance, CorrelationMatrix,
    EnsembleOptions, Error, FitOptions, LatticeSpec, ViolationMap,
};

#[derive(Parser)]
#[command(
    name = "corrwalk",
    version,
    about = "Quantum walks of one and two photons in coupled waveguide arrays"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single-photon output distribution, optionally with a propagation image
    SimulateSingle(SimulateSingleArgs),
    /// Two-photon correlation matrix for an input pair
    Correlate(CorrelateArgs),
    /// Classical-bound violation map from a correlation matrix or raw counts
    Violations(ViolationsArgs),
    /// Similarity between two correlation matrices
    Similarity(SimilarityArgs),
    /// Fit coupling constant and effective length to a measured pattern
    Calibrate(CalibrateArgs),
    /// Disorder-averaged correlations and localization statistics
    Ensemble(EnsembleArgs),
    /// Hilbert-space dimension for n photons over N sites
    Dim(DimArgs),
}

/// Device description: a JSON spec file or uniform-array parameters.
#[derive(Args)]
struct LatticeArgs {
    /// Device spec JSON (n_sites, beta, coupling, length_mm, label_offset)
    #[arg(long, conflicts_with_all = ["sites", "coupling", "beta", "length"])]
    spec: Option<PathBuf>,
    /// Number of waveguides (uniform array)
    #[arg(long)]
    sites: Option<usize>,
    /// Nearest-neighbour coupling constant in 1/mm (uniform array)
    #[arg(long)]
    coupling: Option<f64>,
    /// Propagation constant in 1/mm (uniform array)
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    /// Device length in mm (uniform array)
    #[arg(long)]
    length: Option<f64>,
}

impl LatticeArgs {
    fn resolve(&self) -> Result<LatticeSpec, Error> {
        if let Some(path) = &self.spec {
            return parse_lattice_spec(&read(path)?);
        }
        match (self.sites, self.coupling, self.length) {
            (Some(n), Some(c), Some(z)) => LatticeSpec::uniform(n, self.beta, c, z),
            _ => Err(Error::validation(
                "describe the device with --spec PATH or all of --sites, --coupling, --length",
            )),
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Render {
    Ppm,
}

/// Artifact destination and format.
#[derive(Args)]
struct OutputArgs {
    /// Artifact format
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write the artifact to this path instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Render an image next to --out (requires --out)
    #[arg(long, value_enum)]
    render: Option<Render>,
}

impl OutputArgs {
    /// Write or print the main artifact; `image` goes next to `--out` with
    /// the extension replaced by `.ppm`.
    fn emit(&self, artifact: &str, image: Option<Vec<u8>>) -> Result<(), Error> {
        match &self.out {
            Some(out) => {
                fs::write(out, artifact)?;
                if let Some(bytes) = image {
                    fs::write(out.with_extension("ppm"), bytes)?;
                }
            }
            None => {
                if image.is_some() {
                    return Err(Error::validation("--render requires --out"));
                }
                print!("{artifact}");
            }
        }
        Ok(())
    }

    fn wants_render(&self) -> bool {
        self.render.is_some()
    }
}

#[derive(Args)]
struct SimulateSingleArgs {
    #[command(flatten)]
    lattice: LatticeArgs,
    /// Launch waveguide (0-based index)
    #[arg(long)]
    input: usize,
    /// Number of z samples in the rendered propagation image
    #[arg(long, default_value_t = 200)]
    z_slices: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CorrelateArgs {
    #[command(flatten)]
    lattice: LatticeArgs,
    /// Input pair of 0-based waveguide indices, `J,K` (or `J` for both
    /// photons in one guide)
    #[arg(long, value_parser = parse_pair)]
    input: (usize, usize),
    /// Distinguishable photons (no quantum interference)
    #[arg(long)]
    distinguishable: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["gamma", "counts"])))]
struct ViolationsArgs {
    /// Correlation matrix file (CSV or JSON): noiseless violation map
    #[arg(long)]
    gamma: Option<PathBuf>,
    /// Raw coincidence counts CSV: violation map with significances
    #[arg(long)]
    counts: Option<PathBuf>,
    /// Counts sidecar JSON with singles rates and detector efficiencies
    #[arg(long, requires = "counts")]
    sidecar: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SimilarityArgs {
    /// First correlation matrix (CSV or JSON)
    a: PathBuf,
    /// Second correlation matrix (CSV or JSON)
    b: PathBuf,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Measured output intensity pattern (CSV, one value per waveguide)
    #[arg(long)]
    measured: PathBuf,
    #[command(flatten)]
    lattice: LatticeArgs,
    /// Launch waveguide of the calibration pattern (0-based)
    #[arg(long)]
    input: usize,
    /// Coupling search range `LO,HI` in 1/mm (single value pins it)
    #[arg(long, value_parser = parse_range)]
    c_range: (f64, f64),
    /// Effective-length search range `LO,HI` in mm (single value pins it)
    #[arg(long, value_parser = parse_range)]
    z_range: (f64, f64),
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct EnsembleArgs {
    #[command(flatten)]
    lattice: LatticeArgs,
    /// Input pair of 0-based waveguide indices, `J,K` (or `J`)
    #[arg(long, value_parser = parse_pair)]
    input: (usize, usize),
    /// Distinguishable photons (no quantum interference)
    #[arg(long)]
    distinguishable: bool,
    /// Half-width of the uniform propagation-constant disorder
    #[arg(long, default_value_t = 0.0)]
    sigma_beta: f64,
    /// Half-width of the uniform coupling disorder
    #[arg(long, default_value_t = 0.0)]
    sigma_coupling: f64,
    /// Number of disorder samples
    #[arg(long, default_value_t = 100)]
    trials: u64,
    /// Master seed for the disorder ensemble
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct DimArgs {
    /// Number of photons
    #[arg(long)]
    photons: u32,
    /// Number of waveguides
    #[arg(long)]
    sites: u64,
    /// Count distinguishable-photon states instead of bosonic ones
    #[arg(long)]
    distinguishable: bool,
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let parse_one = |tok: &str| {
        tok.trim()
            .parse::<usize>()
            .map_err(|_| format!("'{tok}' is not a site index"))
    };
    match s.split_once(',') {
        Some((a, b)) => Ok((parse_one(a)?, parse_one(b)?)),
        None => {
            let j = parse_one(s)?;
            Ok((j, j))
        }
    }
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let parse_one = |tok: &str| {
        tok.trim()
            .parse::<f64>()
            .map_err(|_| format!("'{tok}' is not a number"))
    };
    match s.split_once(',') {
        Some((a, b)) => Ok((parse_one(a)?, parse_one(b)?)),
        None => {
            let v = parse_one(s)?;
            Ok((v, v))
        }
    }
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

/// Correlation matrices on disk are either the CSV or the JSON encoding;
/// sniff by the leading byte.
fn read_gamma(path: &Path) -> Result<CorrelationMatrix, Error> {
    let text = read(path)?;
    if text.trim_start().starts_with('{') {
        parse_gamma_json(&text)
    } else {
        parse_gamma_csv(&text)
    }
}

fn violation_csv_bundle(map: &ViolationMap) -> String {
    let mut out = format_violation_csv(map);
    if let Some(sigma) = format_violation_sigma_csv(map) {
        out.push_str(&sigma);
    }
    if let Some(nsigma) = format_nsigma_csv(map) {
        out.push_str(&nsigma);
    }
    out
}

fn cmd_simulate_single(args: &SimulateSingleArgs) -> Result<(), Error> {
    let spec = args.lattice.resolve()?;
    let h = build_single_hamiltonian(&spec)?;
    let u = propagator(h.matrix(), spec.length_mm)?;
    let p = single_photon_distribution(&u, args.input)?;

    let artifact = match args.output.format {
        Format::Csv => format_vector_csv(&p),
        Format::Json => format_single_json(args.input, &p),
    };
    let image = if args.output.wants_render() {
        let profile = propagation_profile(&spec, args.input, args.z_slices)?;
        Some(heatmap_ppm(&profile, None, 1)?)
    } else {
        None
    };
    args.output.emit(&artifact, image)
}

fn cmd_correlate(args: &CorrelateArgs) -> Result<(), Error> {
    let spec = args.lattice.resolve()?;
    let h = build_single_hamiltonian(&spec)?;
    let u = propagator(h.matrix(), spec.length_mm)?;
    let gamma = if args.distinguishable {
        distinguishable_correlation(&u, args.input)?
    } else {
        quantum_correlation(&u, args.input)?
    };

    let artifact = match args.output.format {
        Format::Csv => format_gamma_csv(&gamma),
        Format::Json => format_gamma_json(&gamma),
    };
    let image = if args.output.wants_render() {
        Some(heatmap_ppm(gamma.gamma(), Some(gamma.present_mask()), 8)?)
    } else {
        None
    };
    args.output.emit(&artifact, image)
}

fn cmd_violations(args: &ViolationsArgs) -> Result<(), Error> {
    let map = if let Some(path) = &args.gamma {
        violation_map(&read_gamma(path)?)
    } else {
        let counts_path = args.counts.as_ref().expect("clap enforces the group");
        let sidecar = match &args.sidecar {
            Some(p) => Some(read(p)?),
            None => None,
        };
        let counts = parse_counts_csv(&read(counts_path)?, sidecar.as_deref())?;
        let est = estimate_gamma(&counts, &Default::default())?;
        violation_significance(&est)?
    };

    match args.output.format {
        Format::Json => {
            let artifact = format_violation_json(&map);
            let image = args
                .output
                .wants_render()
                .then(|| violation_ppm(&map, 8))
                .transpose()?;
            args.output.emit(&artifact, image)
        }
        Format::Csv => {
            // To a file: V in the main artifact, significances in siblings.
            // To stdout: one concatenated stream of named matrices.
            let image = args
                .output
                .wants_render()
                .then(|| violation_ppm(&map, 8))
                .transpose()?;
            match &args.output.out {
                Some(out) => {
                    fs::write(out, format_violation_csv(&map))?;
                    if let Some(sigma) = format_violation_sigma_csv(&map) {
                        fs::write(out.with_extension("sigma.csv"), sigma)?;
                    }
                    if let Some(nsigma) = format_nsigma_csv(&map) {
                        fs::write(out.with_extension("nsigma.csv"), nsigma)?;
                    }
                    if let Some(bytes) = image {
                        fs::write(out.with_extension("ppm"), bytes)?;
                    }
                    Ok(())
                }
                None => args.output.emit(&violation_csv_bundle(&map), image),
            }
        }
    }
}

fn cmd_similarity(args: &SimilarityArgs) -> Result<(), Error> {
    let a = read_gamma(&args.a)?;
    let b = read_gamma(&args.b)?;
    let s = similarity(&a, &b)?;
    println!("{s:.4}");
    Ok(())
}

fn cmd_calibrate(args: &CalibrateArgs) -> Result<(), Error> {
    let template = args.lattice.resolve()?;
    let measured = parse_vector_csv(&read(&args.measured)?)?;
    let fit = fit_coupling(
        &measured,
        &template,
        args.input,
        args.c_range,
        args.z_range,
        &FitOptions::default(),
    )?;

    let artifact = match args.output.format {
        Format::Csv => format_calibration_csv(&fit),
        Format::Json => format_calibration_json(&fit),
    };
    if args.output.out.is_some() {
        println!(
            "Cz product: {:.6} (degenerate: {})",
            fit.cz_product(),
            fit.cz_degenerate
        );
    }
    args.output.emit(&artifact, None)
}

fn cmd_ensemble(args: &EnsembleArgs) -> Result<(), Error> {
    let template = args.lattice.resolve()?;
    let options = EnsembleOptions {
        input: args.input,
        indistinguishable: !args.distinguishable,
        sigma_beta: args.sigma_beta,
        sigma_coupling: args.sigma_coupling,
        trials: args.trials,
        seed: args.seed,
    };
    let result = disorder_ensemble(&template, &options)?;

    match args.output.format {
        Format::Json => args.output.emit(&format_ensemble_json(&result), None),
        Format::Csv => match &args.output.out {
            Some(out) => {
                fs::write(out, format_ensemble_gamma_csv(&result))?;
                fs::write(
                    out.with_extension("single.csv"),
                    format_ensemble_single_csv(&result),
                )?;
                Ok(())
            }
            None => {
                let mut text = format_ensemble_gamma_csv(&result);
                text.push_str(&format_ensemble_single_csv(&result));
                args.output.emit(&text, None)
            }
        },
    }
}

fn cmd_dim(args: &DimArgs) -> Result<(), Error> {
    let dim = hilbert_dim(args.photons, args.sites, args.distinguishable)?;
    println!("{dim}");
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::SimulateSingle(args) => cmd_simulate_single(args),
        Command::Correlate(args) => cmd_correlate(args),
        Command::Violations(args) => cmd_violations(args),
        Command::Similarity(args) => cmd_similarity(args),
        Command::Calibrate(args) => cmd_calibrate(args),
        Command::Ensemble(args) => cmd_ensemble(args),
        Command::Dim(args) => cmd_dim(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Numerical(_) => ExitCode::from(3),
                Error::Validation(_) | Error::Io(_) | Error::Resource(_) => ExitCode::from(2),
            }
        }
    }
}
