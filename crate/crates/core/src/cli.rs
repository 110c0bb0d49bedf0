//! Command-line front end.
//!
//! Exit codes: `classify` returns 0 for a stable system and 2 for an unstable
//! one; `oracle` returns 0 when every cross-check passes and 3 otherwise; every
//! command returns 1 on invalid input.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use crate::coeffs::{classify_stability, schur_canonicalize, CanonicalForm, CoeffMatrix, FormKind};
use crate::error::{Error, Result};
use crate::modal_sim::{
    choose_kappa, evolve_mode, fit_decay, mode_block, simulate, uniform_times, FitOptions, ModalState, ModeBlock,
};
use crate::oracle::{char_poly, fd_leapfrog, match_roots, poly_roots, rk4_integrate, GridState, Quartic};
use crate::resolvent::{imaginary_axis_clear, resolvent_sup, verdict_from_sweep, ResolventOptions};
use crate::spectrum::{chain_residual, decay_prediction, mode_structure, spectrum_json, xy_report};

pub const DEFAULT_MODES: usize = 64;
pub const DEFAULT_T_END: f64 = 50.0;
pub const DEFAULT_SAMPLES: usize = 2001;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(name = "coupled-wave", version, about = "Stability and decay of velocity-coupled wave equations")]
struct Cli {
    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for output files (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of sine modes.
    #[arg(long, global = true)]
    modes: Option<usize>,
    /// Suppress the human-readable report.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormArg {
    Rotation,
    Triangular,
}

#[derive(Debug, Clone, Default, Args)]
struct SystemArgs {
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    eta: Option<f64>,
    /// Canonical form given by `--a --b [--c]` instead of the raw matrix.
    #[arg(long, value_enum)]
    form: Option<FormArg>,
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    b: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    c: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InitKind {
    Random,
    Explicit,
    File,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Stability verdict, canonical form and predicted decay rate.
    Classify(SystemArgs),
    /// Eigenvalues and Jordan chains of every mode as JSON.
    Spectrum(SystemArgs),
    /// Exact modal simulation, energy trace and fitted decay.
    Simulate {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, value_enum)]
        init: Option<InitKind>,
        /// `u,y,v,z;u,y,v,z;...`, one group per mode.
        #[arg(long, allow_hyphen_values = true)]
        init_coeffs: Option<String>,
        /// Gridded data, one `u u_t v v_t` line per interior node.
        #[arg(long)]
        init_file: Option<PathBuf>,
    },
    /// Resolvent sweep along the imaginary axis.
    Resolvent {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        xi_max: Option<f64>,
        #[arg(long)]
        grid_step: Option<f64>,
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Cross-checks against root finding, RK4 and finite differences.
    Oracle {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, hide = true, allow_negative_numbers = true)]
        perturb_eigenvalue: Option<f64>,
    },
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    1
                }
            };
        }
    };
    match execute(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

/// Values from the config file, keyed by flag name with `-` or `_`.
#[derive(Debug, Default)]
struct ConfigFile {
    values: BTreeMap<String, String>,
}

const CONFIG_KEYS: &[&str] = &[
    "alpha", "beta", "gamma", "eta", "form", "a", "b", "c", "modes", "seed", "out", "quiet", "t_end", "samples", "init",
    "init_coeffs", "init_file", "xi_max", "grid_step", "n_max",
];

impl ConfigFile {
    fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let key = key.trim().replace('-', "_");
            if !CONFIG_KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!("line {}: unknown key `{key}`", i + 1)));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Self { values })
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("invalid value `{v}` for `{key}`"))),
        }
    }
}

fn pick<T: FromStr>(flag: Option<T>, cfg: &ConfigFile, key: &str) -> Result<Option<T>> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => cfg.get(key),
    }
}

/// The system as given, plus its canonical form.
struct System {
    coeffs: CoeffMatrix,
    form: CanonicalForm,
    /// `true` when the canonical form was given directly.
    canonical_input: bool,
}

fn resolve_system(args: &SystemArgs, cfg: &ConfigFile, default: Option<CanonicalForm>) -> Result<System> {
    let raw = [
        ("alpha", pick(args.alpha, cfg, "alpha")?),
        ("beta", pick(args.beta, cfg, "beta")?),
        ("gamma", pick(args.gamma, cfg, "gamma")?),
        ("eta", pick(args.eta, cfg, "eta")?),
    ];
    let form_kind = match args.form {
        Some(f) => Some(f),
        None => match cfg.values.get("form").map(String::as_str) {
            None => None,
            Some("rotation") => Some(FormArg::Rotation),
            Some("triangular") => Some(FormArg::Triangular),
            Some(v) => return Err(Error::Config(format!("invalid value `{v}` for `form`"))),
        },
    };
    let canon = [("a", pick(args.a, cfg, "a")?), ("b", pick(args.b, cfg, "b")?), ("c", pick(args.c, cfg, "c")?)];
    let any_raw = raw.iter().any(|(_, v)| v.is_some());
    let any_canon = form_kind.is_some() || canon.iter().any(|(_, v)| v.is_some());
    if any_raw && any_canon {
        return Err(Error::Config("give either --alpha/--beta/--gamma/--eta or --form with --a/--b/--c, not both".into()));
    }
    if any_raw {
        let mut vals = [0.0; 4];
        for (k, (name, v)) in raw.iter().enumerate() {
            vals[k] = v.ok_or_else(|| Error::Config(format!("missing --{name}")))?;
        }
        let coeffs = CoeffMatrix::new(vals[0], vals[1], vals[2], vals[3])?;
        return Ok(System { coeffs, form: schur_canonicalize(&coeffs)?, canonical_input: false });
    }
    if any_canon {
        let kind = form_kind.ok_or_else(|| Error::Config("missing --form".into()))?;
        let a = canon[0].1.ok_or_else(|| Error::Config("missing --a".into()))?;
        let b = canon[1].1.ok_or_else(|| Error::Config("missing --b".into()))?;
        let form = match kind {
            FormArg::Rotation => {
                if canon[2].1.is_some() {
                    return Err(Error::Config("--c is not used by the rotation form".into()));
                }
                CanonicalForm::rotation(a, b)?
            }
            FormArg::Triangular => {
                let c = canon[2].1.ok_or_else(|| Error::Config("missing --c".into()))?;
                CanonicalForm::triangular(a, b, c)?
            }
        };
        return Ok(System { coeffs: form.coeffs(), form, canonical_input: true });
    }
    match default {
        Some(form) => Ok(System { coeffs: form.coeffs(), form, canonical_input: true }),
        None => Err(Error::Config("missing system: give --alpha --beta --gamma --eta or --form with --a --b [--c]".into())),
    }
}

struct Globals {
    out_dir: Option<PathBuf>,
    seed: u64,
    modes: usize,
    quiet: bool,
}

fn resolve_globals(cli: &Cli, cfg: &ConfigFile) -> Result<Globals> {
    let modes = pick(cli.modes, cfg, "modes")?.unwrap_or(DEFAULT_MODES);
    if modes == 0 {
        return Err(Error::Config("modes must be >= 1".into()));
    }
    Ok(Globals {
        out_dir: pick(cli.out.clone(), cfg, "out")?,
        seed: pick(cli.seed, cfg, "seed")?.unwrap_or(DEFAULT_SEED),
        modes,
        quiet: cli.quiet || cfg.get::<bool>("quiet")?.unwrap_or(false),
    })
}

/// Writes `content` to `out_dir/name`, or to stdout when no directory is set.
fn emit(g: &Globals, name: &str, content: &str, out: &mut impl Write) -> Result<()> {
    match &g.out_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(name), content)?;
        }
        None => out.write_all(content.as_bytes())?,
    }
    Ok(())
}

fn execute(cli: Cli, out: &mut impl Write) -> Result<u8> {
    let cfg = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let g = resolve_globals(&cli, &cfg)?;
    match &cli.command {
        Command::Classify(sys) => cmd_classify(&resolve_system(sys, &cfg, None)?, &g, out),
        Command::Spectrum(sys) => cmd_spectrum(&resolve_system(sys, &cfg, None)?, &g, out),
        Command::Simulate { system, t_end, samples, init, init_coeffs, init_file } => {
            let sys = resolve_system(system, &cfg, None)?;
            let t_end = pick(*t_end, &cfg, "t_end")?.unwrap_or(DEFAULT_T_END);
            let samples = pick(*samples, &cfg, "samples")?.unwrap_or(DEFAULT_SAMPLES);
            let coeffs_text = pick(init_coeffs.clone(), &cfg, "init_coeffs")?;
            let file = pick(init_file.clone(), &cfg, "init_file")?;
            let kind = match init {
                Some(k) => Some(*k),
                None => match cfg.values.get("init").map(String::as_str) {
                    None => None,
                    Some("random") => Some(InitKind::Random),
                    Some("explicit") => Some(InitKind::Explicit),
                    Some("file") => Some(InitKind::File),
                    Some(v) => return Err(Error::Config(format!("invalid value `{v}` for `init`"))),
                },
            };
            let kind = kind.unwrap_or(match (&coeffs_text, &file) {
                (Some(_), None) => InitKind::Explicit,
                (None, Some(_)) => InitKind::File,
                _ => InitKind::Random,
            });
            let state = match kind {
                InitKind::Random => {
                    if coeffs_text.is_some() || file.is_some() {
                        return Err(Error::Config("random initial data takes no --init-coeffs/--init-file".into()));
                    }
                    ModalState::random(g.modes, g.seed)?
                }
                InitKind::Explicit => {
                    if file.is_some() {
                        return Err(Error::Config("give only one initial-data source".into()));
                    }
                    let text = coeffs_text.ok_or_else(|| Error::Config("missing --init-coeffs".into()))?;
                    parse_coeffs(&text, cli.modes.or(cfg.get("modes")?))?
                }
                InitKind::File => {
                    if coeffs_text.is_some() {
                        return Err(Error::Config("give only one initial-data source".into()));
                    }
                    let path = file.ok_or_else(|| Error::Config("missing --init-file".into()))?;
                    ModalState::from_grid(&read_grid(&path)?, g.modes)?
                }
            };
            cmd_simulate(&sys, &state, t_end, samples, &g, out)
        }
        Command::Resolvent { system, xi_max, grid_step, n_max } => {
            let sys = resolve_system(system, &cfg, None)?;
            let xi_max = pick(*xi_max, &cfg, "xi_max")?.unwrap_or(80.0);
            let grid_step = pick(*grid_step, &cfg, "grid_step")?.unwrap_or(0.01);
            let mut opts = ResolventOptions::with_xi_max(xi_max, grid_step);
            if let Some(n) = pick(*n_max, &cfg, "n_max")? {
                opts.n_max = n;
            }
            cmd_resolvent(&sys, &opts, &g, out)
        }
        Command::Oracle { system, perturb_eigenvalue } => {
            let default = CanonicalForm::rotation(1.0, 1.0)?;
            let sys = resolve_system(system, &cfg, Some(default))?;
            cmd_oracle(&sys, perturb_eigenvalue.unwrap_or(0.0), &g, out)
        }
    }
}

/// `u,y,v,z;...` with optional zero padding up to `modes`.
fn parse_coeffs(text: &str, modes: Option<usize>) -> Result<ModalState> {
    let mut groups = Vec::new();
    for (i, group) in text.split(';').map(str::trim).filter(|g| !g.is_empty()).enumerate() {
        let vals: Vec<f64> = group
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Config(format!("init_coeffs: mode {} is not a list of numbers", i + 1)))?;
        if vals.len() != 4 {
            return Err(Error::Config(format!("init_coeffs: mode {} needs 4 values, got {}", i + 1, vals.len())));
        }
        groups.push([vals[0], vals[1], vals[2], vals[3]]);
    }
    if let Some(n) = modes {
        if groups.len() > n {
            return Err(Error::Config(format!("init_coeffs has {} modes but modes = {n}", groups.len())));
        }
        groups.resize(n, [0.0; 4]);
    }
    ModalState::new(groups)
}

fn read_grid(path: &Path) -> Result<GridState> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read init_file {}: {e}", path.display())))?;
    let mut cols: [Vec<f64>; 4] = Default::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Config(format!("init_file line {}: not numeric", i + 1)))?;
        if vals.len() != 4 {
            return Err(Error::Config(format!("init_file line {}: expected 4 columns, got {}", i + 1, vals.len())));
        }
        for k in 0..4 {
            cols[k].push(vals[k]);
        }
    }
    let [u, ut, v, vt] = cols;
    GridState::new(u, ut, v, vt)
}

fn form_label(form: &CanonicalForm) -> String {
    match form.kind {
        FormKind::Rotation => format!("Rotation(a={},b={})", form.a, form.b),
        FormKind::Triangular => format!("Triangular(a={},b={},c={})", form.a, form.b, form.c),
    }
}

fn cmd_classify(sys: &System, g: &Globals, out: &mut impl Write) -> Result<u8> {
    let verdict = classify_stability(&sys.coeffs)?;
    let label = form_label(&sys.form);
    if verdict.stable {
        let pred = decay_prediction(&sys.form)?;
        if !g.quiet {
            writeln!(out, "STABLE, form={label}, omega≈{:.6}, p={}", pred.omega, pred.p)?;
            writeln!(out, "trace = {}, det = {}", verdict.trace, verdict.det)?;
            writeln!(
                out,
                "dominant eigenvalue {} at mode {}, Jordan chain length {}",
                fmt_complex(pred.dominant_eigenvalue),
                pred.dominant_mode,
                pred.dominant_chain_len
            )?;
        }
        Ok(0)
    } else {
        if !g.quiet {
            writeln!(out, "UNSTABLE, form={label}")?;
            writeln!(out, "trace = {}, det = {}", verdict.trace, verdict.det)?;
        }
        Ok(2)
    }
}

fn fmt_complex(z: Complex64) -> String {
    if z.im >= 0.0 {
        format!("{:.6}+{:.6}i", z.re, z.im)
    } else {
        format!("{:.6}-{:.6}i", z.re, -z.im)
    }
}

fn cmd_spectrum(sys: &System, g: &Globals, out: &mut impl Write) -> Result<u8> {
    let modes = (1..=g.modes).map(|n| mode_structure(&sys.form, n)).collect::<Result<Vec<_>>>()?;
    let xy = match sys.form.kind {
        FormKind::Rotation => {
            Some((1..=g.modes).map(|n| xy_report(sys.form.a, sys.form.b, n)).collect::<Result<Vec<_>>>()?)
        }
        FormKind::Triangular => None,
    };
    let mut json = spectrum_json(&modes, xy.as_deref());
    json.push('\n');
    emit(g, "spectrum.json", &json, out)?;
    if !g.quiet && g.out_dir.is_some() {
        writeln!(out, "form={}, {} modes written", form_label(&sys.form), g.modes)?;
    }
    Ok(0)
}

fn cmd_simulate(
    sys: &System,
    init: &ModalState,
    t_end: f64,
    samples: usize,
    g: &Globals,
    out: &mut impl Write,
) -> Result<u8> {
    let times = uniform_times(t_end, samples)?;
    // Triangular forms come from an orthogonal change of basis, so the energy
    // is the same in canonical coordinates and the weighted energy applies.
    let trace = match sys.form.kind {
        FormKind::Triangular => {
            let state = if sys.canonical_input { init.clone() } else { crate::coeffs::change_of_variables(&sys.coeffs, init)? };
            let kappa = choose_kappa(sys.form.a, sys.form.b, sys.form.c).ok();
            simulate(&sys.form.coeffs(), &state, &times, kappa)?
        }
        FormKind::Rotation => simulate(&sys.coeffs, init, &times, None)?,
    };
    emit(g, "trace.csv", &trace.to_csv_string(), out)?;
    if g.quiet {
        return Ok(0);
    }
    // The report goes to stdout only when the trace went to a file.
    let mut sink: Box<dyn Write> = if g.out_dir.is_some() { Box::new(&mut *out) } else { Box::new(std::io::sink()) };
    writeln!(sink, "form={}, modes={}, E(0)={:.6e}", form_label(&sys.form), init.mode_count(), trace.energy[0])?;
    match decay_prediction(&sys.form) {
        Ok(pred) => match fit_decay(&trace, &pred, &FitOptions::default()) {
            Ok(fit) => writeln!(
                sink,
                "omega_pred={:.6}, omega_hat={:.6}, rel_err={:.3e}, p={}, p_hat={:.3}, expected energy exponent={}",
                pred.omega,
                fit.omega_hat,
                fit.rel_err_omega,
                pred.p,
                fit.p_hat,
                pred.energy_exponent()
            )?,
            Err(e) => writeln!(sink, "omega_pred={:.6}, fit unavailable: {e}", pred.omega)?,
        },
        Err(e) => writeln!(sink, "no decay prediction: {e}")?,
    }
    Ok(0)
}

fn cmd_resolvent(sys: &System, opts: &ResolventOptions, g: &Globals, out: &mut impl Write) -> Result<u8> {
    let axis = imaginary_axis_clear(&sys.form, opts.n_max)?;
    let sweep = resolvent_sup(&sys.form, opts)?;
    let verdict = verdict_from_sweep(&sys.form, opts, axis, &sweep);
    let mut buf = Vec::new();
    sweep.write_csv(&mut buf)?;
    emit(g, "resolvent.csv", &String::from_utf8_lossy(&buf), out)?;
    if !g.quiet && g.out_dir.is_some() {
        writeln!(
            out,
            "{}, sup_norm={:.6e}, argmax_xi={}, refined_sup={}, tail_bound={:.3e}, max_re={:.3e}",
            verdict.verdict,
            verdict.sup_norm,
            verdict.argmax_xi,
            verdict.refined_sup.map_or("n/a".to_string(), |s| format!("{s:.6e}")),
            verdict.tail_bound,
            axis.max_re
        )?;
    }
    Ok(0)
}

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn cmd_oracle(sys: &System, perturb: f64, g: &Globals, out: &mut impl Write) -> Result<u8> {
    let form = &sys.form;
    let canon = form.coeffs();
    let mut checks = Vec::new();

    // Closed-form eigenvalues against Durand–Kerner roots of the block's
    // characteristic polynomial.
    let mut worst = 0.0f64;
    let mut eig_ok = true;
    for n in 1..=g.modes {
        let structure = mode_structure(form, n)?;
        let mut eig = structure.eigenvalues;
        eig[0] += perturb;
        let blk = mode_block(&canon, n)?;
        let roots = poly_roots(&Quartic::from_real(char_poly(&blk.matrix))?)?;
        let d = match_roots(&eig, &roots);
        let scale = 1.0 + eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mult = eig.iter().map(|z| eig.iter().filter(|w| (*w - z).norm() <= 1e-6 * scale).count()).max().unwrap();
        // Multiple roots are only determined to `eps^(1/mult)`.
        let tol = (1e-8f64).max(10.0 * (f64::EPSILON).powf(1.0 / mult as f64)) * scale;
        worst = worst.max(d / scale);
        eig_ok &= d <= tol;
    }
    checks.push(Check { name: "eigenvalues-vs-quartic-roots", passed: eig_ok, detail: format!("max rel distance {worst:.2e}") });

    let mut worst = 0.0f64;
    for n in 1..=g.modes {
        let blk = mode_block(&sys.coeffs, n)?;
        let got = char_poly(&blk.matrix);
        let want = ModeBlock::expected_char_poly(&sys.coeffs, n);
        for (x, y) in got.iter().zip(&want) {
            worst = worst.max((x - y).abs() / y.abs().max(1.0));
        }
    }
    checks.push(Check { name: "characteristic-polynomial", passed: worst <= 1e-9, detail: format!("max rel error {worst:.2e}") });

    let mut worst = 0.0f64;
    for n in 1..=g.modes {
        let structure = mode_structure(form, n)?;
        worst = worst.max(chain_residual(&mode_block(&canon, n)?.matrix, &structure));
    }
    checks.push(Check { name: "jordan-chains", passed: worst <= 1e-9, detail: format!("max residual {worst:.2e}") });

    let state = ModalState::random(g.modes.min(8), g.seed)?;
    let mut worst = 0.0f64;
    for (i, &x0) in state.modes().iter().enumerate() {
        let blk = mode_block(&sys.coeffs, i + 1)?;
        let exact = evolve_mode(&blk, x0, 1.0)?;
        let rk = rk4_integrate(&blk, x0, 1.0, 1e-4)?;
        let diff = exact.iter().zip(&rk).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm = exact.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-300);
        worst = worst.max(diff / norm);
    }
    checks.push(Check { name: "matrix-exponential-vs-rk4", passed: worst <= 1e-8, detail: format!("max rel error {worst:.2e}") });

    let m = 400;
    let grid = GridState::from_fn(m, |x| [x.sin(), 0.0, 0.0, 0.0])?;
    let times = uniform_times(10.0, 101)?;
    let dt = 0.1 / (0.1 / (0.5 * grid.dx())).ceil();
    let fd = fd_leapfrog(&sys.coeffs, &grid, 10.0, dt, &times)?;
    let exact = simulate(&sys.coeffs, &ModalState::single_mode(1, 1, [1.0, 0.0, 0.0, 0.0])?, &times, None)?;
    let e0 = exact.energy[0];
    let worst = fd
        .trace
        .energy
        .iter()
        .zip(&exact.energy)
        .map(|(x, y)| (x - y).abs() / (y + 1e-12 * e0))
        .fold(0.0, f64::max);
    checks.push(Check { name: "modal-vs-finite-difference", passed: worst <= 1e-2, detail: format!("max rel error {worst:.2e} at M = {m}") });

    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    if !g.quiet {
        writeln!(out, "form={}", form_label(form))?;
        for c in &checks {
            writeln!(out, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
    }
    if failed.is_empty() {
        writeln!(out, "ALL CHECKS PASS")?;
        Ok(0)
    } else {
        writeln!(out, "FAILED: {}", failed.join(", "))?;
        Ok(3)
    }
}
