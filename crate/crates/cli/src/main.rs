//! `speclen`: spectral zeta functions, map lengths and zeta-distances from
//! the command line.
//!
//! Exit codes: 0 success or affirmative answer, 1 negative finding, 2 usage
//! or input error, 3 numeric-domain error.

mod output;

use clap::{Args, Parser, Subcommand, ValueEnum};
use output::{Format, Report};
use speclen_core::dirichlet::{residue_closed_form, residue_numeric};
use speclen_core::heat::mellin_check;
use speclen_core::lattice::is_isospectral;
use speclen_core::length::{
    circle_length_closed_form_with, circle_length_computed, fig1_curve, group_hom_orders, torus_length_report,
    zeta_distance_torus, LengthReport, Normalization, DEFAULT_GRID,
};
use speclen_core::manifolds::product_rule_convergence;
use speclen_core::maps::{matrix_from_spec, spectral_norm, CircleRescale, TorusLinearMap};
use speclen_core::testfn::{FourierPoly, TrigPoly};
use speclen_core::{Error, FlatTorus, Lattice, Result};
use std::f64::consts::PI;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "speclen", version, about = "Spectral zeta functions and lengths of maps between manifolds")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Human, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// ζ_{T,a0}(s) of a flat torus.
    Zeta(ZetaArgs),
    /// Compare torus spectra up to a squared dual norm.
    Isospectral(IsospectralArgs),
    /// Length of a circle rescaling or a torus map.
    Length {
        #[command(subcommand)]
        kind: LengthKind,
    },
    /// CSV of the rescaling length ℓ(φ_{r,1}) against r.
    Fig1(Fig1Args),
    /// Zeta-distance between two tori over unimodular integer maps.
    Distance(DistanceArgs),
    /// Length of x ↦ m x from Z/a to Z/b.
    Group(GroupArgs),
    /// Built-in numerical oracle suites.
    Oracle {
        #[arg(value_enum)]
        suite: Suite,
    },
}

#[derive(Args)]
struct ZetaArgs {
    /// Lattice: Zn:<d>, schiemann:+, schiemann:-, diag:<a>,<b>,... or a file.
    #[arg(long)]
    lattice: String,
    /// Evaluation point.
    #[arg(long, conflicts_with = "s_range", required_unless_present = "s_range")]
    s: Option<f64>,
    /// Evaluation grid `start:end:count`.
    #[arg(long)]
    s_range: Option<String>,
    /// Test function: terms joined by `+`, each `const:<c>`,
    /// `cos:<k1>,..,<kd>:<amp>`, `sin:<k1>,..,<kd>:<amp>` or `random:<degree>:<seed>`.
    #[arg(long, default_value = "const:1")]
    a0: String,
}

#[derive(Args)]
struct IsospectralArgs {
    #[arg(long)]
    lattice1: String,
    #[arg(long)]
    lattice2: String,
    /// Largest squared dual norm compared.
    #[arg(long, default_value_t = 30.0)]
    bound: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    Paper,
    FirstPrinciples,
}

impl From<NormArg> for Normalization {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Paper => Normalization::Paper,
            NormArg::FirstPrinciples => Normalization::FirstPrinciples,
        }
    }
}

#[derive(Subcommand)]
enum LengthKind {
    /// Rescaling S_{r1} → S_{r2}, θ ↦ θ.
    Circle {
        #[arg(long)]
        r1: f64,
        #[arg(long)]
        r2: f64,
        #[arg(long, value_enum, default_value_t = NormArg::Paper)]
        normalization: NormArg,
        /// Grid points on [1, 2] before refinement.
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
    },
    /// Linear map of tori.
    Torus {
        /// Matrix: paper-A, I:<d> or a file.
        #[arg(long, default_value = "paper-A")]
        map: String,
        /// Source lattice (default schiemann:+ for paper-A).
        #[arg(long)]
        source: Option<String>,
        /// Target lattice (default schiemann:- for paper-A).
        #[arg(long)]
        target: Option<String>,
        /// Squared dual norm bound of the single-mode search.
        #[arg(long, default_value_t = 6.0)]
        mode_bound: f64,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
    },
}

#[derive(Args)]
struct Fig1Args {
    #[arg(long, default_value_t = 0.01)]
    r_min: f64,
    #[arg(long, default_value_t = 2.0)]
    r_max: f64,
    #[arg(long, default_value_t = 400)]
    steps: usize,
    /// Add a first-principles column.
    #[arg(long)]
    both_normalizations: bool,
}

#[derive(Args)]
struct DistanceArgs {
    #[arg(long)]
    lattice1: String,
    #[arg(long)]
    lattice2: String,
    /// Largest absolute entry of the integer matrices searched.
    #[arg(long, default_value_t = 1)]
    entry_bound: u32,
    #[arg(long, default_value_t = DEFAULT_GRID)]
    grid: usize,
}

#[derive(Args)]
struct GroupArgs {
    #[arg(long)]
    a: u64,
    #[arg(long)]
    b: u64,
    #[arg(long, allow_hyphen_values = true)]
    multiplier: i64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Lemma2to1,
    Residue,
    Mellin,
}

/// Outcome of a command: the report and whether the answer was affirmative.
struct Outcome {
    report: Report,
    affirmative: bool,
}

impl From<Report> for Outcome {
    fn from(report: Report) -> Self {
        Self { report, affirmative: true }
    }
}

fn parse_a0(spec: &str, t: &FlatTorus) -> Result<TrigPoly> {
    let mut total: Option<TrigPoly> = None;
    for term in spec.split('+') {
        let parts: Vec<&str> = term.trim().split(':').collect();
        let bad = || Error::Parse(format!("bad test-function term {term:?}"));
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
        let freq = |s: &str| -> Result<Vec<i64>> {
            s.split(',').map(|x| x.trim().parse::<i64>().map_err(|_| bad())).collect()
        };
        let p = match parts.as_slice() {
            ["const", c] => TrigPoly::constant(t, num(c)?),
            ["cos", k, amp] => TrigPoly::cos_mode(t, &freq(k)?, num(amp)?)?,
            ["sin", k, amp] => TrigPoly::sin_mode(t, &freq(k)?, num(amp)?)?,
            ["random", deg, seed] => TrigPoly::random_nonneg(
                t,
                deg.trim().parse().map_err(|_| bad())?,
                seed.trim().parse().map_err(|_| bad())?,
            ),
            _ => return Err(bad()),
        };
        total = Some(match total {
            None => p,
            Some(acc) => acc.add(&p)?,
        });
    }
    total.ok_or_else(|| Error::Parse("empty test function".into()))
}

fn parse_range(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::Parse(format!("bad range {spec:?}, expected start:end:count"));
    let p: Vec<&str> = spec.split(':').collect();
    let [a, b, n] = p.as_slice() else { return Err(bad()) };
    let (a, b): (f64, f64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
    let n: usize = n.parse().map_err(|_| bad())?;
    if n == 0 {
        return Err(bad());
    }
    Ok((0..n).map(|i| if n == 1 { a } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect())
}

fn cmd_zeta(args: &ZetaArgs) -> Result<Outcome> {
    let t = FlatTorus::from_spec(&args.lattice)?;
    let a0 = parse_a0(&args.a0, &t)?;
    let points = match (&args.s_range, args.s) {
        (Some(r), _) => parse_range(r)?,
        (None, Some(s)) => vec![s],
        (None, None) => return Err(Error::Invalid("give --s or --s-range".into())),
    };
    let mut r = Report::new();
    r.field("lattice", &args.lattice)
        .field("dim", t.dim())
        .field("volume", t.volume())
        .field("a0_mean", a0.integral(&t)? / t.volume())
        .field("method", "Epstein zeta, Ewald split with incomplete gamma, relative accuracy ~1e-12")
        .headers(&["s", "zeta_T", "zeta_T_a0"]);
    for s in points {
        r.row(vec![s.to_string(), t.zeta(s)?.to_string(), t.zeta_family(&a0, s)?.to_string()]);
    }
    Ok(r.into())
}

fn cmd_isospectral(args: &IsospectralArgs) -> Result<Outcome> {
    let (l1, l2) = (Lattice::from_spec(&args.lattice1)?, Lattice::from_spec(&args.lattice2)?);
    let rep = is_isospectral(&l1, &l2, 4.0 * PI * PI * args.bound)?;
    let mut r = Report::new();
    r.field("isospectral", rep.isospectral)
        .field("squared_norm_bound", args.bound)
        .field("clusters_compared", rep.clusters_compared);
    if let Some(d) = &rep.first_discrepancy {
        let show = |c: Option<(f64, usize)>| match c {
            Some((e, m)) => format!("norm^2 {} multiplicity {m}", e / (4.0 * PI * PI)),
            None => "none".into(),
        };
        r.field("discrepancy_index", d.index)
            .field("discrepancy_left", show(d.left))
            .field("discrepancy_right", show(d.right));
    }
    Ok(Outcome { report: r, affirmative: rep.isospectral })
}

fn default_circle_family() -> Result<Vec<(FourierPoly, FourierPoly)>> {
    Ok(vec![
        (FourierPoly::constant(1.0), FourierPoly::cos(1, 1.0)),
        (FourierPoly::random_nonneg(3, 11), FourierPoly::random_real(2, 12)?),
    ])
}

fn witness_fields(r: &mut Report, rep: &LengthReport) {
    r.field("length_lower", rep.length_lower);
    if let Some(u) = rep.length_upper {
        r.field("length_upper", u);
    }
    r.field("witness", &rep.witness.description)
        .field("witness_term", format!("{:?}", rep.witness.term))
        .field("witness_s", rep.witness.s);
    if let Some(ratio) = rep.witness.ratio {
        r.field("witness_gradient_ratio", ratio);
    }
    r.field("family", &rep.family);
}

fn cmd_length(kind: &LengthKind) -> Result<Outcome> {
    let mut r = Report::new();
    match kind {
        LengthKind::Circle { r1, r2, normalization, grid } => {
            let norm: Normalization = (*normalization).into();
            let phi = CircleRescale::new(*r1, *r2)?;
            let rep = circle_length_computed(&phi, &default_circle_family()?, norm, *grid)?;
            r.field("map", format!("S_{r1} -> S_{r2}, theta -> theta"))
                .field("normalization", format!("{norm:?}"))
                .field("formula", format!("1/(1 + 1/({}|log(r1/r2)|))", norm.length_factor()))
                .field("closed_form", circle_length_closed_form_with(*r1, *r2, norm));
            witness_fields(&mut r, &rep);
        }
        LengthKind::Torus { map, source, target, mode_bound, grid } => {
            let a = matrix_from_spec(map)?;
            let (src, dst) = match (source, target) {
                (Some(s), Some(t)) => (FlatTorus::from_spec(s)?, FlatTorus::from_spec(t)?),
                (None, None) if map == "paper-A" => {
                    (FlatTorus::from_spec("schiemann:+")?, FlatTorus::from_spec("schiemann:-")?)
                }
                _ => return Err(Error::Invalid("give both --source and --target".into())),
            };
            let phi = TorusLinearMap::new(a, src, dst)?;
            let norm = spectral_norm(phi.matrix())?;
            let rep = torus_length_report(&phi, *mode_bound, *grid)?;
            r.field("map", map)
                .field("jacobian", phi.jacobian())
                .field("spectral_norm", norm)
                .field("norm_bound", rep.printed_upper.unwrap_or(0.0))
                .field("norm_bound_formula", "log||A||_2/(1+log||A||_2)");
            witness_fields(&mut r, &rep);
        }
    }
    Ok(r.into())
}

fn cmd_fig1(args: &Fig1Args) -> Result<Outcome> {
    let mut r = Report::new();
    if args.both_normalizations {
        r.headers(&["r", "length", "length_first_principles"]);
    } else {
        r.headers(&["r", "length"]);
    }
    for (x, paper, fp) in fig1_curve(args.r_min, args.r_max, args.steps)? {
        let mut row = vec![x.to_string(), paper.to_string()];
        if args.both_normalizations {
            row.push(fp.to_string());
        }
        r.row(row);
    }
    Ok(r.into())
}

fn matrix_text(m: &speclen_core::nalgebra::DMatrix<i64>) -> String {
    let rows: Vec<String> = m
        .row_iter()
        .map(|row| format!("[{}]", row.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")))
        .collect();
    rows.join(" ")
}

fn cmd_distance(args: &DistanceArgs) -> Result<Outcome> {
    let t1 = FlatTorus::from_spec(&args.lattice1)?;
    let t2 = FlatTorus::from_spec(&args.lattice2)?;
    let rep = zeta_distance_torus(&t1, &t2, args.entry_bound, args.grid)?;
    let mut r = Report::new();
    r.field("entry_bound", args.entry_bound)
        .field("candidates", rep.candidates)
        .field("unimodular", rep.unimodular)
        .field("one_sided", rep.one_sided)
        .field("symmetrized", rep.symmetrized)
        .field("backward", rep.backward.upper);
    for (name, dir) in [("forward", &rep.forward), ("backward", &rep.backward)] {
        if let Some(m) = &dir.witness {
            r.field(&format!("{name}_witness_M"), matrix_text(m));
        }
        if let Some(l) = dir.witness_lower {
            r.field(&format!("{name}_witness_lower"), l);
        }
    }
    Ok(r.into())
}

fn cmd_group(args: &GroupArgs) -> Result<Outcome> {
    let (k, c) = group_hom_orders(args.a, args.b, args.multiplier)?;
    let mut r = Report::new();
    r.field("kernel_order", k)
        .field("cokernel_order", c)
        .field("length", (k as f64).ln().max((c as f64).ln()));
    Ok(r.into())
}

fn cmd_oracle(suite: Suite) -> Result<Outcome> {
    let mut r = Report::new();
    let pass = match suite {
        Suite::Lemma2to1 => {
            let rep = product_rule_convergence(&FourierPoly::cos(1, 1.0), 1.0, 2.0, &[64, 128, 256])?;
            r.headers(&["n", "gap"]);
            for (n, g) in rep.ns.iter().zip(&rep.gaps) {
                r.row(vec![n.to_string(), g.to_string()]);
            }
            let pass = (rep.slope + 2.0).abs() <= 0.3;
            r.field("suite", "lemma2to1").field("slope", rep.slope).field("expected", "-2 +- 0.3").field("pass", pass);
            pass
        }
        Suite::Residue => {
            r.headers(&["lattice", "numeric", "closed_form", "relative_gap"]);
            let mut pass = true;
            for spec in ["Zn:1", "Zn:2", "Zn:3", "schiemann:+", "schiemann:-"] {
                let l = Lattice::from_spec(spec)?;
                let (num, exact) = (residue_numeric(&l)?, residue_closed_form(&l, l.volume()));
                let gap = ((num - exact) / exact).abs();
                pass &= gap <= 1e-8;
                r.row(vec![spec.into(), num.to_string(), exact.to_string(), gap.to_string()]);
            }
            r.field("suite", "residue").field("tolerance", 1e-8).field("pass", pass);
            pass
        }
        Suite::Mellin => {
            r.headers(&["lattice", "s", "lhs", "rhs", "relative_gap"]);
            let mut pass = true;
            for d in [1usize, 2] {
                let t = FlatTorus::new(Lattice::integer(d)?)?;
                for s in [d as f64, d as f64 + 1.0] {
                    let m = mellin_check(&t, s)?;
                    pass &= m.relative_gap <= 1e-4;
                    r.row(vec![
                        format!("Zn:{d}"),
                        s.to_string(),
                        m.lhs.to_string(),
                        m.rhs.to_string(),
                        m.relative_gap.to_string(),
                    ]);
                }
            }
            r.field("suite", "mellin").field("tolerance", 1e-4).field("pass", pass);
            pass
        }
    };
    Ok(Outcome { report: r, affirmative: pass })
}

fn configure_threads() -> std::result::Result<(), String> {
    let Ok(v) = std::env::var("SPECLEN_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| format!("SPECLEN_THREADS must be a positive integer, got {v:?}"))?;
    if n == 0 {
        return Err("SPECLEN_THREADS must be positive".into());
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let result = match &cli.command {
        Command::Zeta(a) => cmd_zeta(a),
        Command::Isospectral(a) => cmd_isospectral(a),
        Command::Length { kind } => cmd_length(kind),
        Command::Fig1(a) => cmd_fig1(a),
        Command::Distance(a) => cmd_distance(a),
        Command::Group(a) => cmd_group(a),
        Command::Oracle { suite } => cmd_oracle(*suite),
    };
    match result {
        Ok(out) => {
            // plot data is always CSV
            let format = if matches!(cli.command, Command::Fig1(_)) { Format::Csv } else { cli.format };
            print!("{}", out.report.render(format));
            ExitCode::from(if out.affirmative { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { 3 } else { 2 })
        }
    }
}
