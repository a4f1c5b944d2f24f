//! `spectra`: command-line front end.

mod selftest;

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Map, Value};

use spectra_core::chains::validate_chain;
use spectra_core::complex::{EntourageGroup, NullityVerdict, Triviality, Verdict, DEFAULT_BUDGET};
use spectra_core::cover::{build_cover_ball, covers_equivalent, CoverEquivalence, CoverError};
use spectra_core::entourage::EntourageSpec;
use spectra_core::io::{generator_from_json, space_from_csv, space_from_graph_json};
use spectra_core::spectra::{
    covering_spectrum, entourage_spectrum, entourage_spectrum_pairs, homotopy_critical_spectrum, metric_family,
    minimum_length_spectrum, nc_profile, spec_of, t2_bound, verify_certificate, Certificate, Completeness,
    ScanOptions, SpectrumReport, REPORT_SCHEMA,
};
use spectra_core::{base_entourage, metric_entourage, parse_rational, render, Entourage, FiniteMetricSpace, GeneratorSpec, Rational};

const CERT_SCHEMA: &str = "spectra-certificate/1";

#[derive(Parser)]
#[command(name = "spectra", version, about = "Critical spectra, entourage covers and loop nullity for finite metric spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
#[group(required = true, multiple = false)]
struct Input {
    /// Built-in space, e.g. `circle:n=12,L=1`, or `@FILE` with a JSON generator spec
    #[arg(long, value_name = "KIND:PARAMS")]
    generate: Option<String>,
    /// CSV distance matrix
    #[arg(long, value_name = "FILE")]
    matrix: Option<PathBuf>,
    /// JSON weighted edge list
    #[arg(long, value_name = "FILE")]
    graph: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct Output {
    /// Write the JSON report here instead of stdout
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Exit with status 2 when an answer is unknown or budget-limited
    #[arg(long)]
    strict: bool,
}

#[derive(Args, Clone)]
struct Scale {
    /// Scale of the metric entourage (closed unless --open)
    #[arg(long, value_name = "P/Q")]
    eps: Option<String>,
    /// Use the strict entourage d < eps
    #[arg(long)]
    open: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Hcs,
    Cs,
    Ecs,
    Es,
    Mls,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check an input space
    Validate {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        output: Output,
        /// Recheck a certificate file against this space
        #[arg(long, value_name = "FILE")]
        check_certificate: Option<PathBuf>,
    },
    /// Write a built-in space as a distance matrix or generator spec
    Generate {
        #[arg(long, value_name = "KIND:PARAMS")]
        generate: String,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Compute a spectrum
    Spectrum {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum)]
        kind: Kind,
        #[command(flatten)]
        scale: Scale,
        /// Upper length bound for the length spectrum
        #[arg(long, value_name = "P/Q")]
        length_bound: Option<String>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
        /// Values at or below this are reported as artifacts (default: twice the base scale)
        #[arg(long, value_name = "P/Q")]
        floor: Option<String>,
        /// JSON family: {"members": [...]} and/or {"pairs": [[strict, closed], ...]}
        #[arg(long, value_name = "FILE")]
        family: Option<PathBuf>,
        /// Write one certificate file per witness into this directory
        #[arg(long, value_name = "DIR")]
        certificates: Option<PathBuf>,
        /// Recheck a certificate file instead of computing
        #[arg(long, value_name = "FILE")]
        check_certificate: Option<PathBuf>,
        /// Print a plain-text table to stdout
        #[arg(long)]
        table: bool,
        /// Write the profile steps as tab-separated text
        #[arg(long, value_name = "FILE")]
        plot_data: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Build a ball in an entourage cover
    Cover {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        scale: Scale,
        #[arg(long, value_name = "P/Q")]
        radius: String,
        #[command(flatten)]
        output: Output,
    },
    /// Decide whether a loop is null
    Nullity {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        scale: Scale,
        /// Comma-separated vertices of a closed chain
        #[arg(long = "loop", value_name = "V,V,...")]
        loop_points: Option<String>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
        #[arg(long, value_name = "DIR")]
        certificates: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        check_certificate: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Compare the covers of two entourages
    Equivalent {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        scale: Scale,
        #[arg(long, value_name = "P/Q")]
        against: Option<String>,
        #[arg(long)]
        against_open: bool,
        /// Compare the first two members of a family file instead
        #[arg(long, value_name = "FILE")]
        family: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// log2 of the bound on the number of cover classes at a scale
    Bound {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_name = "P/Q")]
        eps: String,
        #[command(flatten)]
        output: Output,
    },
    /// Seeded randomized checks of the core invariants
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    msg: String,
}

fn err<E: Display>(e: E) -> Failure {
    Failure { code: 1, msg: e.to_string() }
}

type Res<T> = Result<T, Failure>;

/// What a finished command reports back to `main`.
struct Done {
    undecided: bool,
    strict: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(d) if d.undecided && d.strict => {
            eprintln!("spectra: result is unknown or budget-limited");
            ExitCode::from(2)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("spectra: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn run(cmd: Command) -> Res<Done> {
    match cmd {
        Command::Validate { input, output, check_certificate } => {
            let (space, source) = load(&input)?;
            if let Some(path) = check_certificate {
                return check(&space, &path, &output);
            }
            let mut m = header("validation", source);
            m.insert("points".into(), json!(space.len()));
            m.insert("base_scale".into(), json!(space.base_scale().map(|b| render(&b))));
            m.insert("diameter".into(), json!(render(&space.diameter())));
            m.insert("distinct_distances".into(), json!(space.distance_values().len()));
            emit(&Value::Object(m), output.out.as_deref())?;
            Ok(Done { undecided: false, strict: output.strict })
        }
        Command::Generate { generate, format, out } => {
            let spec = generator(&generate)?;
            let space = FiniteMetricSpace::generate(&spec).map_err(err)?;
            let text = match format {
                Format::Csv => space
                    .rows()
                    .iter()
                    .map(|r| r.iter().map(render).collect::<Vec<_>>().join(",") + "\n")
                    .collect::<String>(),
                Format::Json => pretty(&serde_json::to_value(&spec).map_err(err)?),
            };
            write_text(&text, out.as_deref())?;
            Ok(Done { undecided: false, strict: false })
        }
        Command::Spectrum {
            input,
            kind,
            scale,
            length_bound,
            budget,
            floor,
            family,
            certificates,
            check_certificate,
            table,
            plot_data,
            output,
        } => {
            let (space, source) = load(&input)?;
            if let Some(path) = check_certificate {
                return check(&space, &path, &output);
            }
            let opts = ScanOptions { budget, floor: floor.as_deref().map(rational).transpose()? };
            let fam = family.as_deref().map(|p| read_family(&space, p)).transpose()?;
            let report = match kind {
                Kind::Hcs => homotopy_critical_spectrum(&space, &opts).map_err(err)?,
                Kind::Cs => covering_spectrum(&space, &opts).map_err(err)?,
                Kind::Ecs => match &fam {
                    Some(f) if !f.members.is_empty() => {
                        nc_profile(&f.members, &format!("{} members from file", f.members.len())).map_err(err)?
                    }
                    _ => nc_profile(&metric_family(&space).map_err(err)?, "metric").map_err(err)?,
                },
                Kind::Es => match &fam {
                    Some(f) if !f.pairs.is_empty() => entourage_spectrum_pairs(&f.pairs, budget).map_err(err)?,
                    _ => entourage_spectrum(&space, &opts).map_err(err)?,
                },
                Kind::Mls => {
                    let bound = length_bound
                        .as_deref()
                        .ok_or_else(|| err("--length-bound is required for --kind mls"))?;
                    let e = match &scale.eps {
                        Some(_) => entourage(&space, &scale)?,
                        None => base_entourage(&space),
                    };
                    minimum_length_spectrum(&e, rational(bound)?, budget).map_err(err)?
                }
            };
            if let Some(dir) = certificates {
                write_certificates(&report, &dir)?;
            }
            if let Some(p) = plot_data {
                let text: String =
                    report.profile.iter().map(|pt| format!("{}\t{}\n", render(&pt.eps), pt.nc)).collect();
                write_text(&text, Some(&p))?;
            }
            let mut m = match report.to_json() {
                Value::Object(m) => m,
                _ => unreachable!(),
            };
            m.insert("input".into(), source);
            let value = Value::Object(m);
            if table {
                print!("{}", report.table());
                if let Some(p) = &output.out {
                    emit(&value, Some(p))?;
                }
            } else {
                emit(&value, output.out.as_deref())?;
            }
            Ok(Done { undecided: report.completeness == Completeness::BudgetLimited, strict: output.strict })
        }
        Command::Cover { input, scale, radius, output } => {
            let (space, source) = load(&input)?;
            let e = entourage(&space, &scale)?;
            let ball = match build_cover_ball(&e, rational(&radius)?) {
                Ok(b) => b,
                Err(CoverError::UndecidedMerge(v)) => {
                    return Err(Failure {
                        code: if output.strict { 2 } else { 1 },
                        msg: format!("could not decide whether lifts of vertex {:?} coincide", v.first()),
                    })
                }
                Err(e) => return Err(err(e)),
            };
            let mut m = header("cover", source);
            m.insert("entourage".into(), to_value(&spec_of(&e))?);
            m.insert("points".into(), json!(ball.len()));
            m.insert("deck_group_trivial".into(), json!(ball.group().is_trivial()));
            m.insert("ball".into(), to_value(&ball.export())?);
            emit(&Value::Object(m), output.out.as_deref())?;
            Ok(Done { undecided: false, strict: output.strict })
        }
        Command::Nullity { input, scale, loop_points, budget, certificates, check_certificate, output } => {
            let (space, source) = load(&input)?;
            if let Some(path) = check_certificate {
                return check(&space, &path, &output);
            }
            let e = match &scale.eps {
                Some(_) => entourage(&space, &scale)?,
                None => base_entourage(&space),
            };
            let pts = parse_points(loop_points.as_deref().ok_or_else(|| err("--loop is required"))?)?;
            let chain = validate_chain(&e, &pts).map_err(err)?;
            if !chain.is_loop() {
                return Err(err("the chain is not closed"));
            }
            let g = EntourageGroup::new(&e).map_err(err)?;
            let v = g.decide_null(&pts, budget).map_err(err)?;
            let mut bundle = Map::new();
            bundle.insert("schema".into(), json!(CERT_SCHEMA));
            bundle.insert("kind".into(), json!("nullity"));
            bundle.insert("entourage".into(), to_value(&spec_of(&e))?);
            bundle.insert("loop".into(), json!(pts));
            bundle.insert("verdict".into(), to_value(&v)?);
            if let Some(dir) = certificates {
                fs::create_dir_all(&dir).map_err(|e| err(format!("{}: {e}", dir.display())))?;
                write_text(&pretty(&Value::Object(bundle.clone())), Some(&dir.join("nullity.json")))?;
            }
            let mut m = header("nullity", source);
            m.extend(bundle.into_iter().filter(|(k, _)| k != "schema" && k != "kind"));
            emit(&Value::Object(m), output.out.as_deref())?;
            Ok(Done { undecided: matches!(v.verdict, Verdict::Unknown { .. }), strict: output.strict })
        }
        Command::Equivalent { input, scale, against, against_open, family, output } => {
            let (space, source) = load(&input)?;
            let (e, f) = match family {
                Some(p) => {
                    let fam = read_family(&space, &p)?;
                    match fam.members.as_slice() {
                        [a, b, ..] => (a.clone(), b.clone()),
                        _ => return Err(err(format!("{}: needs at least two members", p.display()))),
                    }
                }
                None => {
                    let other = Scale { eps: against, open: against_open };
                    if other.eps.is_none() {
                        return Err(err("--against or --family is required"));
                    }
                    (entourage(&space, &scale)?, entourage(&space, &other)?)
                }
            };
            let r = covers_equivalent(&e, &f).map_err(err)?;
            let mut m = header("equivalence", source);
            m.insert("first".into(), to_value(&spec_of(&e))?);
            m.insert("second".into(), to_value(&spec_of(&f))?);
            m.insert("result".into(), to_value(&r)?);
            emit(&Value::Object(m), output.out.as_deref())?;
            Ok(Done { undecided: matches!(r, CoverEquivalence::Unknown { .. }), strict: output.strict })
        }
        Command::Bound { input, eps, output } => {
            let (space, source) = load(&input)?;
            let b = t2_bound(&space, rational(&eps)?).map_err(err)?;
            let mut v = b.to_json();
            v["input"] = source;
            emit(&v, output.out.as_deref())?;
            Ok(Done { undecided: false, strict: output.strict })
        }
        Command::Selftest { seed, samples, out } => {
            let checks = selftest::run(seed, samples).map_err(err)?;
            let failed = checks.iter().any(|c| c.failures > 0);
            let mut m = Map::new();
            m.insert("schema".into(), json!(REPORT_SCHEMA));
            m.insert("kind".into(), json!("selftest"));
            m.insert("seed".into(), json!(seed));
            let mut cs = Map::new();
            for c in &checks {
                cs.insert(c.name.into(), json!({"samples": c.samples, "failures": c.failures}));
            }
            m.insert("checks".into(), Value::Object(cs));
            emit(&Value::Object(m), out.as_deref())?;
            if failed {
                return Err(err("self-test failures"));
            }
            Ok(Done { undecided: false, strict: false })
        }
    }
}

fn header(kind: &str, source: Value) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("schema".into(), json!(REPORT_SCHEMA));
    m.insert("kind".into(), json!(kind));
    m.insert("input".into(), source);
    m
}

fn to_value<T: serde::Serialize>(t: &T) -> Res<Value> {
    serde_json::to_value(t).map_err(err)
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json");
    s.push('\n');
    s
}

fn emit(v: &Value, out: Option<&Path>) -> Res<()> {
    write_text(&pretty(v), out)
}

fn write_text(text: &str, out: Option<&Path>) -> Res<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| err(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read(path: &Path) -> Res<String> {
    fs::read_to_string(path).map_err(|e| err(format!("{}: {e}", path.display())))
}

fn rational(s: &str) -> Res<Rational> {
    parse_rational(s).map_err(|e| err(format!("`{s}`: {e}")))
}

fn parse_points(s: &str) -> Res<Vec<usize>> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| err(format!("loop vertex `{}`: {e}", t.trim()))))
        .collect()
}

fn generator(arg: &str) -> Res<GeneratorSpec> {
    match arg.strip_prefix('@') {
        Some(path) => {
            let p = Path::new(path);
            generator_from_json(&read(p)?).map_err(|e| err(format!("{}: {e}", p.display())))
        }
        None => arg.parse::<GeneratorSpec>().map_err(err),
    }
}

/// Loads the space and a file-independent description of where it came from.
fn load(input: &Input) -> Res<(FiniteMetricSpace, Value)> {
    let name = |p: &Path| p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    if let Some(g) = &input.generate {
        let spec = generator(g)?;
        let space = FiniteMetricSpace::generate(&spec).map_err(err)?;
        Ok((space, json!({"generator": to_value(&spec)?})))
    } else if let Some(p) = &input.matrix {
        let space = space_from_csv(&read(p)?).map_err(|e| err(format!("{}: {e}", p.display())))?;
        Ok((space, json!({"matrix": name(p)})))
    } else if let Some(p) = &input.graph {
        let space = space_from_graph_json(&read(p)?).map_err(|e| err(format!("{}: {e}", p.display())))?;
        Ok((space, json!({"graph": name(p)})))
    } else {
        Err(err("no input space"))
    }
}

fn entourage(space: &FiniteMetricSpace, scale: &Scale) -> Res<Entourage> {
    let eps = scale.eps.as_deref().ok_or_else(|| err("--eps is required"))?;
    metric_entourage(space, rational(eps)?, scale.open).map_err(err)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyFile {
    #[serde(default)]
    members: Vec<EntourageSpec>,
    #[serde(default)]
    pairs: Vec<(EntourageSpec, EntourageSpec)>,
}

struct Family {
    members: Vec<Entourage>,
    pairs: Vec<(Entourage, Entourage)>,
}

fn read_family(space: &FiniteMetricSpace, path: &Path) -> Res<Family> {
    let at = |m: String| err(format!("{}: {m}", path.display()));
    let f: FamilyFile = serde_json::from_str(&read(path)?)
        .map_err(|e| at(format!("line {}, column {}: {e}", e.line(), e.column())))?;
    let build = |i: usize, s: &EntourageSpec| s.build(space).map_err(|e| at(format!("member {i}: {e}")));
    let members = f.members.iter().enumerate().map(|(i, s)| build(i, s)).collect::<Res<Vec<_>>>()?;
    let pairs = f
        .pairs
        .iter()
        .enumerate()
        .map(|(i, (a, b))| Ok((build(i, a)?, build(i, b)?)))
        .collect::<Res<Vec<_>>>()?;
    Ok(Family { members, pairs })
}

fn write_certificates(report: &SpectrumReport, dir: &Path) -> Res<()> {
    fs::create_dir_all(dir).map_err(|e| err(format!("{}: {e}", dir.display())))?;
    let kind = to_value(&report.kind)?;
    let kind = kind.as_str().unwrap_or("spectrum");
    for (i, (v, c)) in report.certificates().into_iter().enumerate() {
        let bundle = json!({
            "schema": CERT_SCHEMA,
            "kind": "spectral",
            "spectrum": kind,
            "value": render(&v),
            "certificate": to_value(c)?,
        });
        write_text(&pretty(&bundle), Some(&dir.join(format!("{kind}-{i:03}.json"))))?;
    }
    Ok(())
}

fn check(space: &FiniteMetricSpace, path: &Path, output: &Output) -> Res<Done> {
    let at = |m: String| err(format!("{}: {m}", path.display()));
    let v: Value = serde_json::from_str(&read(path)?).map_err(|e| at(e.to_string()))?;
    let kind = if v.get("verdict").is_some() {
        check_nullity(space, &v).map_err(at)?;
        "nullity"
    } else {
        let c = v.get("certificate").unwrap_or(&v);
        let cert: Certificate = serde_json::from_value(c.clone()).map_err(|e| at(e.to_string()))?;
        verify_certificate(space, &cert).map_err(at)?;
        "spectral"
    };
    let out = json!({"schema": REPORT_SCHEMA, "kind": "certificate_check", "certificate": kind, "valid": true});
    emit(&out, output.out.as_deref())?;
    Ok(Done { undecided: false, strict: output.strict })
}

fn check_nullity(space: &FiniteMetricSpace, v: &Value) -> Result<(), String> {
    let field = |k: &str| v.get(k).cloned().ok_or_else(|| format!("missing `{k}`"));
    let spec: EntourageSpec = serde_json::from_value(field("entourage")?).map_err(|e| e.to_string())?;
    let pts: Vec<usize> = serde_json::from_value(field("loop")?).map_err(|e| e.to_string())?;
    let verdict: NullityVerdict = serde_json::from_value(field("verdict")?).map_err(|e| e.to_string())?;
    let e = spec.build(space).map_err(|e| e.to_string())?;
    validate_chain(&e, &pts).map_err(|e| e.to_string())?;
    match verdict.verdict {
        Verdict::Null(seq) => {
            if seq.start != pts {
                return Err("contraction does not start at the loop".into());
            }
            let end = seq.replay(&e).map_err(|e| e.to_string())?;
            if !end.is_constant() || end.points() != seq.end.as_slice() {
                return Err("contraction does not end at the recorded constant chain".into());
            }
            Ok(())
        }
        Verdict::NonNull(ob) => match EntourageGroup::new(&e).map_err(|e| e.to_string())?.decide(&pts) {
            Triviality::NonTrivial(o) if o == ob => Ok(()),
            other => Err(format!("obstruction does not recompute: {other:?}")),
        },
        Verdict::Unknown { .. } => Err("an unknown verdict carries no certificate".into()),
    }
}
