use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use implicitquad::engine::{EngineConfig, Mode, Plan, Schemes};
use implicitquad::io::{self, fmt_f64, RuleDocument};
use implicitquad::testbed::{self, PolyClass};
use implicitquad::{BoxMap, Error, Scheme, TensorPoly};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    Volume,
    Surface,
    SurfaceFlux,
    Rule,
    Converge,
    RandomStudy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Study {
    H,
    Q,
}

/// Quadrature on domains and interfaces given implicitly by polynomials.
///
/// Integrals use the integrand f = 1; volume integrals cover the region where
/// every input polynomial is negative.
#[derive(Debug, Parser)]
#[command(name = "iquad", version)]
struct Args {
    command: Command,
    /// Polynomial files (JSON); may be repeated.
    #[arg(long, num_args = 1..)]
    poly: Vec<PathBuf>,
    /// Named built-in fixture instead of a file; supplies its own box unless --box is given.
    #[arg(long)]
    fixture: Option<String>,
    /// Box as "lo1,hi1;lo2,hi2;...". Defaults to the unit box.
    #[arg(long = "box", allow_hyphen_values = true)]
    bbox: Option<String>,
    /// Quadrature order, or a comma list for studies.
    #[arg(long)]
    q: Option<String>,
    /// "auto" or one scheme per level, outermost first, e.g. "ts,gl".
    #[arg(long, default_value = "auto")]
    schemes: String,
    /// Restrict to the simplex {x >= 0, sum x <= 1} of the box.
    #[arg(long)]
    simplex: bool,
    /// Rule mode for `rule` and `converge`.
    #[arg(long, default_value = "volume")]
    mode: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// First seed of the random study.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Disable masks (all subcells active).
    #[arg(long)]
    no_masks: bool,
    /// Print the top-level masks to stderr.
    #[arg(long)]
    dump_masks: bool,
    #[arg(long, value_enum, default_value = "q")]
    study: Study,
    /// Grid sizes per axis for h-studies.
    #[arg(long, default_value = "8,16,32,64")]
    cells: String,
    /// Reference order for studies.
    #[arg(long, default_value_t = 100)]
    reference_q: usize,
    /// Dimension for random studies or when no polynomial is given.
    #[arg(long, default_value_t = 2)]
    dims: usize,
    #[arg(long, default_value = "A")]
    class: String,
    #[arg(long, default_value_t = 200)]
    count: usize,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(text) => {
            if let Some(path) = &args.out {
                if let Err(e) = io::write_text(path, &text) {
                    eprintln!("error: {e}");
                    return ExitCode::from(4);
                }
            } else {
                print!("{text}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_) | Error::InvalidArgument(_) | Error::DimensionMismatch { .. } | Error::ShapeMismatch { .. } => 2,
        Error::Degenerate(_) | Error::ZeroPolynomial => 3,
        Error::Numerical(_) => 4,
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, Error> {
    s.split(',')
        .map(|v| v.trim().parse().map_err(|_| Error::Parse(format!("bad {what} '{v}'"))))
        .collect()
}

fn parse_schemes(s: &str) -> Result<Schemes, Error> {
    if s.trim().eq_ignore_ascii_case("auto") {
        return Ok(Schemes::Auto);
    }
    s.split(',')
        .map(|v| Scheme::parse(v).ok_or_else(|| Error::Parse(format!("unknown scheme '{v}'"))))
        .collect::<Result<Vec<_>, _>>()
        .map(Schemes::Fixed)
}

fn scheme_names(s: &Schemes) -> Vec<String> {
    match s {
        Schemes::Auto => vec!["auto".into()],
        Schemes::Fixed(v) => v.iter().map(|s| s.name().to_string()).collect(),
    }
}

struct Problem {
    boxmap: BoxMap,
    phis: Vec<TensorPoly>,
}

fn load(args: &Args) -> Result<Problem, Error> {
    let fixture = match &args.fixture {
        Some(name) => Some(testbed::fixture(name).ok_or_else(|| Error::Parse(format!("unknown fixture '{name}'")))?),
        None => None,
    };
    let files = args.poly.iter().map(|p| io::read_polys(p)).collect::<Result<Vec<_>, _>>()?;
    let files: Vec<io::PolyFile> = files.into_iter().flatten().collect();
    let boxmap = match (&args.bbox, &fixture) {
        (Some(b), _) => io::parse_box(b)?,
        (None, Some(f)) => f.boxmap(),
        (None, None) => BoxMap::unit(files.first().map_or(args.dims, |f| f.dims)),
    };
    let mut phis = Vec::new();
    if let Some(f) = &fixture {
        if f.degrees.len() != boxmap.dims() {
            return Err(Error::Parse(format!("fixture '{}' is {}-dimensional", f.name, f.degrees.len())));
        }
        phis.push(boxmap.pull_back_monomial(f.degrees.clone(), f.monomial.clone())?);
    }
    for f in &files {
        phis.push(f.to_poly(&boxmap).map_err(|e| match e {
            Error::DimensionMismatch { .. } | Error::ShapeMismatch { .. } | Error::InvalidArgument(_) => Error::Parse(e.to_string()),
            other => other,
        })?);
    }
    Ok(Problem { boxmap, phis })
}

fn config(args: &Args, mode: Mode, q: usize) -> Result<EngineConfig, Error> {
    Ok(EngineConfig { q, schemes: parse_schemes(&args.schemes)?, mode, use_masks: !args.no_masks, ..EngineConfig::default() })
}

fn plan(args: &Args, prob: &Problem, cfg: &EngineConfig) -> Result<Plan, Error> {
    let plan = if args.simplex {
        Plan::new_simplex(&prob.phis, &prob.boxmap, cfg)?
    } else {
        Plan::new(&prob.phis, &prob.boxmap, cfg)?
    };
    for d in plan.diagnostics() {
        eprintln!("note: {d}");
    }
    if args.dump_masks {
        for (i, m) in plan.top_masks().iter().enumerate() {
            eprintln!("mask {i}");
            eprint!("{}", m.to_text());
        }
    }
    Ok(plan)
}

fn single_q(args: &Args, default: usize) -> Result<usize, Error> {
    match &args.q {
        None => Ok(default),
        Some(s) => {
            let v: Vec<usize> = parse_list(s, "order")?;
            match v.as_slice() {
                [q] if *q >= 1 => Ok(*q),
                _ => Err(Error::Parse(format!("expected one positive order, got '{s}'"))),
            }
        }
    }
}

fn parse_mode(s: &str) -> Result<Mode, Error> {
    Mode::parse(s).ok_or_else(|| Error::Parse(format!("unknown mode '{s}'")))
}

fn run(args: &Args) -> Result<String, Error> {
    match args.command {
        Command::Volume | Command::Surface => {
            let mode = if args.command == Command::Volume { Mode::Volume } else { Mode::Surface };
            let prob = load(args)?;
            let q = single_q(args, 20)?;
            let cfg = config(args, mode, q)?;
            let plan = plan(args, &prob, &cfg)?;
            let pattern = vec![-1; if mode == Mode::Volume { prob.phis.len() } else { 0 }];
            let v = plan.integrate(q, &cfg.schemes, &pattern, |_| 1.0)?;
            check_finite(&[v])?;
            Ok(scalar_output(args, mode, q, &[v]))
        }
        Command::SurfaceFlux => {
            let prob = load(args)?;
            let q = single_q(args, 20)?;
            let cfg = config(args, Mode::SurfaceFlux, q)?;
            let plan = plan(args, &prob, &cfg)?;
            let v = plan.rule(q, &cfg.schemes)?.integrate_flux(|_| 1.0);
            check_finite(&v)?;
            Ok(scalar_output(args, Mode::SurfaceFlux, q, &v))
        }
        Command::Rule => {
            let prob = load(args)?;
            let q = single_q(args, 20)?;
            let cfg = config(args, parse_mode(&args.mode)?, q)?;
            let plan = plan(args, &prob, &cfg)?;
            let rule = plan.rule(q, &cfg.schemes)?;
            let doc = RuleDocument {
                q,
                schemes: scheme_names(&cfg.schemes),
                axes: plan.axes(),
                lo: prob.boxmap.lo.clone(),
                hi: prob.boxmap.hi.clone(),
                rule,
            };
            Ok(match args.format {
                Format::Json => doc.to_json() + "\n",
                Format::Csv => doc.to_csv(),
            })
        }
        Command::Converge => converge(args),
        Command::RandomStudy => random_study(args),
    }
}

fn check_finite(v: &[f64]) -> Result<(), Error> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numerical("non-finite result".into()))
    }
}

fn scalar_output(args: &Args, mode: Mode, q: usize, v: &[f64]) -> String {
    let cols: Vec<String> = v.iter().map(|x| fmt_f64(*x)).collect();
    match (args.format, &args.out) {
        (_, None) => cols.join(",") + "\n",
        (Format::Csv, Some(_)) => {
            let names: Vec<String> = if v.len() == 1 { vec!["value".into()] } else { (1..=v.len()).map(|i| format!("value{i}")).collect() };
            format!("{}\n{}\n", names.join(","), cols.join(","))
        }
        (Format::Json, Some(_)) => {
            let mode = match mode {
                Mode::Volume => "volume",
                Mode::Surface => "surface",
                Mode::SurfaceFlux => "surface-flux",
            };
            format!("{{\n  \"mode\": \"{mode}\",\n  \"q\": {q},\n  \"value\": [{}]\n}}\n", cols.join(", "))
        }
    }
}

fn converge(args: &Args) -> Result<String, Error> {
    let prob = load(args)?;
    let mode = parse_mode(&args.mode)?;
    if args.simplex {
        return Err(Error::Parse("converge does not support --simplex".into()));
    }
    let reference = {
        let mut cfg = config(args, mode, args.reference_q)?;
        if args.study == Study::H {
            // the grid rule may use low-order schemes; the single-cell reference should not
            cfg.schemes = Schemes::Auto;
        }
        integrate(&plan(args, &prob, &cfg)?, args.reference_q, &cfg, prob.phis.len())?
    };
    let mut rows: Vec<(f64, f64, f64)> = Vec::new();
    let label = match args.study {
        Study::H => {
            let q = single_q(args, 3)?;
            let cfg = config(args, mode, q)?;
            for n in parse_list::<usize>(&args.cells, "cell count")? {
                let v = testbed::grid_integral(&prob.phis, &prob.boxmap, n, &cfg, |_| 1.0)?;
                rows.push((n as f64, v, ((v - reference) / reference).abs()));
            }
            "n"
        }
        Study::Q => {
            let qs: Vec<usize> = parse_list(args.q.as_deref().unwrap_or("5,10,20,40"), "order")?;
            let cfg = config(args, mode, qs[0])?;
            let plan = plan(args, &prob, &cfg)?;
            for q in qs {
                let v = integrate(&plan, q, &cfg, prob.phis.len())?;
                rows.push((q as f64, v, ((v - reference) / reference).abs()));
            }
            "q"
        }
    };
    check_finite(&rows.iter().flat_map(|r| [r.1, r.2]).collect::<Vec<_>>())?;
    // fit only the points above the double-precision plateau
    let fit: Vec<&(f64, f64, f64)> = rows.iter().filter(|r| r.2 > 1e-13).collect();
    let slope = if fit.len() >= 2 {
        let x: Vec<f64> = fit.iter().map(|r| if args.study == Study::H { 1.0 / r.0 } else { r.0 }).collect();
        let y: Vec<f64> = fit.iter().map(|r| r.2).collect();
        match args.study {
            Study::H => testbed::loglog_slope(&x, &y),
            Study::Q => digits_per_doubling(&x, &y),
        }
    } else {
        f64::NAN
    };
    Ok(match args.format {
        Format::Csv => {
            let mut s = format!("# reference={} slope={}\n{label},value,error\n", fmt_f64(reference), fmt_f64(slope));
            for (x, v, e) in &rows {
                s += &format!("{},{},{}\n", *x as usize, fmt_f64(*v), fmt_f64(*e));
            }
            s
        }
        Format::Json => {
            let body: Vec<String> = rows
                .iter()
                .map(|(x, v, e)| format!("    {{\"{label}\": {}, \"value\": {}, \"error\": {}}}", *x as usize, fmt_f64(*v), fmt_f64(*e)))
                .collect();
            format!(
                "{{\n  \"study\": \"{label}\",\n  \"reference\": {},\n  \"slope\": {},\n  \"rows\": [\n{}\n  ]\n}}\n",
                fmt_f64(reference),
                json_number(slope),
                body.join(",\n")
            )
        }
    })
}

fn json_number(v: f64) -> String {
    if v.is_finite() {
        fmt_f64(v)
    } else {
        "null".into()
    }
}

/// Ratio of correct digits between consecutive orders, divided by log2 of the order ratio, averaged.
fn digits_per_doubling(q: &[f64], err: &[f64]) -> f64 {
    let ratios: Vec<f64> = q
        .windows(2)
        .zip(err.windows(2))
        .map(|(qw, ew)| (ew[1].log10() / ew[0].log10()).powf(1.0 / (qw[1] / qw[0]).log2()))
        .collect();
    ratios.iter().sum::<f64>() / ratios.len() as f64
}

fn integrate(plan: &Plan, q: usize, cfg: &EngineConfig, n: usize) -> Result<f64, Error> {
    match cfg.mode {
        Mode::Volume => plan.integrate(q, &cfg.schemes, &vec![-1; n], |_| 1.0),
        Mode::Surface => Ok(plan.rule(q, &cfg.schemes)?.integrate(|_| 1.0)),
        Mode::SurfaceFlux => Ok(plan.rule(q, &cfg.schemes)?.integrate_flux(|_| 1.0).iter().sum()),
    }
}

fn random_study(args: &Args) -> Result<String, Error> {
    let class = match args.class.to_ascii_uppercase().as_str() {
        "A" => PolyClass::A,
        "B" => PolyClass::B,
        other => return Err(Error::Parse(format!("unknown class '{other}'"))),
    };
    if !(2..=3).contains(&args.dims) {
        return Err(Error::Parse("random studies need --dims 2 or 3".into()));
    }
    let qs: Vec<usize> = parse_list(args.q.as_deref().unwrap_or("5,10,20,40"), "order")?;
    let schemes = parse_schemes(&args.schemes)?;
    let instances = testbed::random_instances(args.dims, class, args.count, args.seed);
    let rows = testbed::random_study(&instances, &qs, &schemes, args.reference_q)?;
    Ok(match args.format {
        Format::Csv => {
            let mut s = String::from("seed,class,q,E_q,runtime\n");
            for r in &rows {
                s += &format!("{},{},{},{},{}\n", r.seed, r.class.name(), r.q, fmt_f64(r.error), fmt_f64(r.runtime));
            }
            s
        }
        Format::Json => {
            let body: Vec<String> = rows
                .iter()
                .map(|r| {
                    format!(
                        "  {{\"seed\": {}, \"class\": \"{}\", \"q\": {}, \"E_q\": {}, \"runtime\": {}}}",
                        r.seed,
                        r.class.name(),
                        r.q,
                        json_number(r.error),
                        json_number(r.runtime)
                    )
                })
                .collect();
            format!("[\n{}\n]\n", body.join(",\n"))
        }
    })
}
