use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use subanalytic::automorphism::make_distinguished;
use subanalytic::blowup::{pullback_chart, pushdown_poly, Chart, ChartIndex};
use subanalytic::document::Document;
use subanalytic::formula::{parse_formula, parse_series, Formula};
use subanalytic::projection::{decide_formula, qe_prepare, Decision};
use subanalytic::valued::{format_scalar, parse_scalar};
use subanalytic::weierstrass::{distinguished_order, weierstrass_divide, weierstrass_prepare};
use subanalytic::{NormValue, Point, Series, Space, Tri, VarSpec};

#[derive(Parser)]
#[command(name = "subanalytic", version, about = "Exact p-adic restricted power series, semianalytic formulas and constructible sets")]
struct Cli {
    #[command(flatten)]
    source: Source,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    /// Input document (JSON).
    #[arg(short = 'i', long = "input", global = true)]
    input: Option<PathBuf>,
    /// Prime for inline use without a document.
    #[arg(long, global = true)]
    prime: Option<u64>,
    /// Variables for inline use, e.g. `T:2^0,x:2^1`.
    #[arg(long, global = true)]
    vars: Option<String>,
    /// Space that inline series and formula text is read over.
    #[arg(long, global = true)]
    space: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Gauss norm of a series.
    Norm {
        #[arg(long)]
        series: String,
    },
    /// Weierstrass division of f by a distinguished g.
    Divide {
        #[arg(long)]
        f: String,
        #[arg(long)]
        g: String,
        #[arg(long)]
        pivot: String,
        #[arg(long)]
        eps: Option<String>,
    },
    /// Weierstrass preparation g = e·w.
    Prepare {
        #[arg(long)]
        g: String,
        #[arg(long)]
        pivot: String,
        #[arg(long)]
        eps: Option<String>,
    },
    /// Distinguished order in the pivot, or `none`.
    Distinguish {
        #[arg(long)]
        f: String,
        #[arg(long)]
        pivot: String,
    },
    /// A shared Weierstrass automorphism making every series distinguished.
    Sigma {
        #[arg(long, value_delimiter = ',')]
        series: Vec<String>,
        #[arg(long)]
        pivot: String,
    },
    /// Evaluates a formula at a point.
    Eval {
        #[arg(long)]
        formula: String,
        #[arg(long)]
        point: String,
    },
    /// Membership of a point in a constructible set.
    Member {
        #[arg(long)]
        set: String,
        #[arg(long)]
        point: String,
    },
    /// Complement of a constructible set, written as a new set.
    Complement {
        #[arg(long)]
        set: String,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
        #[arg(long)]
        name: Option<String>,
    },
    /// Intersection of constructible sets, written as a new set.
    Intersect {
        #[arg(long, value_delimiter = ',')]
        sets: Vec<String>,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
        #[arg(long)]
        name: Option<String>,
    },
    /// Decides whether some pivot value in the closed unit disc satisfies
    /// the formula at a base point.
    Qe1 {
        #[arg(long)]
        conjunct: String,
        #[arg(long)]
        pivot: String,
        /// Values of the remaining variables, in order.
        #[arg(long)]
        point: Option<String>,
        /// Candidate rational roots of the specialized polynomials.
        #[arg(long, value_delimiter = ',')]
        roots: Vec<String>,
        /// Also print the Weierstrass-prepared form of each conjunct.
        #[arg(long)]
        prepared: bool,
    },
    /// Pulls a series in two variables back to a blow-up chart.
    Blowup {
        #[arg(long)]
        chart: u32,
        #[arg(long)]
        series: String,
        /// Blown-up point, `a,b`; the origin by default.
        #[arg(long)]
        center: Option<String>,
    },
    /// `x^M·P(x, t) = P̃(x, t·x)` for a polynomial in the second variable.
    Pushdown {
        #[arg(long)]
        poly: String,
        #[arg(long, default_value = "y")]
        y: String,
    },
}

/// What a command printed and how it ended.
struct Report {
    text: String,
    unknown: bool,
}

impl Report {
    fn ok(text: impl Into<String>) -> Report {
        Report {
            text: text.into(),
            unknown: false,
        }
    }

    fn tri(t: Tri) -> Report {
        Report {
            text: t.as_str().to_string(),
            unknown: t == Tri::Unknown,
        }
    }
}

struct Session {
    doc: Document,
    space: Option<String>,
}

impl Session {
    fn open(src: &Source) -> Result<Session> {
        let mut doc = match &src.input {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                Document::from_json(&text)?
            }
            None => Document::new(src.prime.unwrap_or(2))?,
        };
        if let Some(p) = src.prime {
            if p != doc.prime {
                bail!("prime {p} differs from the document prime {}", doc.prime);
            }
        }
        let mut space = src.space.clone();
        if let Some(vars) = &src.vars {
            let specs = vars
                .split(',')
                .map(|v| {
                    let (name, r) = v.split_once(':').unwrap_or((v, "2^0"));
                    Ok(VarSpec::new(name.trim(), NormValue::parse(r.trim(), doc.prime)?))
                })
                .collect::<Result<Vec<_>>>()?;
            let name = "inline".to_string();
            doc.spaces.insert(name.clone(), Space::new(doc.prime, specs)?);
            space = Some(name);
        }
        Ok(Session { doc, space })
    }

    /// The space inline text is read over: `--space`, else the only space,
    /// else the only space declaring every name in `needs`.
    fn text_space(&self, needs: &[&str]) -> Result<Arc<Space>> {
        if let Some(name) = &self.space {
            return Ok(self.doc.space(name)?.clone());
        }
        let fits: Vec<&Arc<Space>> = self
            .doc
            .spaces
            .values()
            .filter(|s| needs.iter().all(|n| s.index_of(n).is_some()))
            .collect();
        match fits.as_slice() {
            [one] => Ok((*one).clone()),
            [] => bail!("no space declares {}; pass --vars or --space", needs.join(", ")),
            _ => bail!("several spaces fit; pass --space"),
        }
    }

    fn series(&self, key: &str, needs: &[&str]) -> Result<Series> {
        if let Some(s) = self.doc.series.get(key) {
            return Ok(s.clone());
        }
        Ok(parse_series(key, &self.text_space(needs)?)?)
    }

    fn formula(&self, key: &str, needs: &[&str]) -> Result<Formula> {
        if let Some(f) = self.doc.formulas.get(key) {
            return Ok(f.clone());
        }
        Ok(parse_formula(key, &self.text_space(needs)?)?)
    }

    fn eps(&self, text: Option<&str>, scale: &Series) -> Result<NormValue> {
        Ok(match text {
            Some(t) => NormValue::parse(t, self.doc.prime)?,
            None => &scale.norm_bound().max(NormValue::one()) * &NormValue::pow_int(-20),
        })
    }

    fn write(&self, out: &PathBuf, doc: &Document) -> Result<()> {
        std::fs::write(out, doc.to_json()).with_context(|| format!("writing {}", out.display()))
    }
}

fn pivot_of(f: &Series, name: &str) -> Result<usize> {
    Ok(f.space().require(name)?)
}

fn run(cli: &Cli) -> Result<Report> {
    let s = Session::open(&cli.source)?;
    let p = s.doc.prime;
    match &cli.command {
        Command::Norm { series } => {
            let f = s.series(series, &[])?;
            let est = f.gauss_norm();
            Ok(Report::ok(if est.is_exact() {
                est.lower().display(p).to_string()
            } else {
                format!("between {} and {}", est.lower().display(p), est.upper().display(p))
            }))
        }
        Command::Divide { f, g, pivot, eps } => {
            let f = s.series(f, &[pivot])?;
            let g = s.series(g, &[pivot])?;
            let i = pivot_of(&g, pivot)?;
            let cert = distinguished_order(&g, i).ok_or_else(|| anyhow!("g is not distinguished in {pivot}"))?;
            let eps = s.eps(eps.as_deref(), &f)?;
            let out = weierstrass_divide(&f, &g, &cert, &eps)?;
            Ok(Report::ok(format!(
                "q = {}, R = {}, residual = {}",
                out.quotient,
                out.remainder,
                out.residual.display(p)
            )))
        }
        Command::Prepare { g, pivot, eps } => {
            let g = s.series(g, &[pivot])?;
            let i = pivot_of(&g, pivot)?;
            let cert = distinguished_order(&g, i).ok_or_else(|| anyhow!("g is not distinguished in {pivot}"))?;
            let eps = s.eps(eps.as_deref(), &g)?;
            let prep = weierstrass_prepare(&g, &cert, &eps)?;
            Ok(Report::ok(format!(
                "e = {}, w = {}, residual = {}",
                prep.unit,
                prep.w,
                prep.residual.display(p)
            )))
        }
        Command::Distinguish { f, pivot } => {
            let f = s.series(f, &[pivot])?;
            let i = pivot_of(&f, pivot)?;
            Ok(Report::ok(match distinguished_order(&f, i) {
                Some(c) => format!("order = {}", c.order),
                None => "none".to_string(),
            }))
        }
        Command::Sigma { series, pivot } => {
            let fs = series.iter().map(|k| s.series(k, &[pivot])).collect::<Result<Vec<_>>>()?;
            let i = pivot_of(fs.first().ok_or_else(|| anyhow!("no series given"))?, pivot)?;
            let r = make_distinguished(&fs, i)?;
            let orders: Vec<String> = r.orders.iter().map(u32::to_string).collect();
            let mut text = format!("d = {}, s = {}, orders = {}", r.d, r.s.display(p), orders.join(","));
            for img in &r.images {
                text.push_str(&format!("\n  {img}"));
            }
            Ok(Report::ok(text))
        }
        Command::Eval { formula, point } => {
            let phi = s.formula(formula, &[])?;
            Ok(Report::tri(phi.eval(&s.doc.point(point)?)?))
        }
        Command::Member { set, point } => Ok(Report::tri(s.doc.set(set)?.membership(&s.doc.point(point)?)?)),
        Command::Complement { set, output, name } => {
            let c = s.doc.set(set)?.complement()?.normalized();
            let name = name.clone().unwrap_or_else(|| format!("{set}_complement"));
            let mut doc = s.doc.clone();
            let summary = format!("{name}: {} chains", c.chains().len());
            doc.sets.insert(name, c);
            s.write(output, &doc)?;
            Ok(Report::ok(summary))
        }
        Command::Intersect { sets, output, name } => {
            let Some((first, rest)) = sets.split_first() else {
                bail!("no sets given");
            };
            let mut acc = s.doc.set(first)?.clone();
            for n in rest {
                acc = acc.intersect(s.doc.set(n)?)?;
            }
            let acc = acc.normalized();
            let name = name.clone().unwrap_or_else(|| sets.join("_and_"));
            let mut doc = s.doc.clone();
            let summary = format!("{name}: {} chains", acc.chains().len());
            doc.sets.insert(name, acc);
            s.write(output, &doc)?;
            Ok(Report::ok(summary))
        }
        Command::Qe1 {
            conjunct,
            pivot,
            point,
            roots,
            prepared,
        } => {
            let phi = s.formula(conjunct, &[pivot])?;
            let space = phi.space().ok_or_else(|| anyhow!("formula has no variables"))?;
            let i = space.require(pivot)?;
            let base = match point {
                Some(text) => match s.doc.point(text)? {
                    Point::Rigid(c) => c,
                    Point::Monomial { .. } => bail!("the base point must be rigid"),
                },
                None => Vec::new(),
            };
            let hints = roots.iter().map(|r| parse_scalar(r)).collect::<subanalytic::Result<Vec<_>>>()?;
            let mut text = String::new();
            if *prepared {
                for c in phi.to_dnf() {
                    if c.is_empty() {
                        continue;
                    }
                    let prep = qe_prepare(&c, i)?;
                    text.push_str(&format!("prepared: {}\n", prep.display()));
                }
            }
            let unit = space.with_radii(&vec![NormValue::one(); space.dim()])?;
            let phi_unit = phi.embed_by_name(&unit)?;
            let d = decide_formula(&phi_unit, &unit, i, &base, &hints)?;
            let unknown = d == Decision::Unknown;
            text.push_str(&match d {
                Decision::Sat(x) => format!("SAT {pivot} = {}", witness_text(&x, p)),
                Decision::Unsat => "UNSAT".to_string(),
                Decision::Unknown => "UNKNOWN".to_string(),
            });
            Ok(Report { text, unknown })
        }
        Command::Blowup { chart, series, center } => {
            let h = s.series(series, &[])?;
            let center = match center {
                Some(c) => c.split(',').map(|a| parse_scalar(a.trim())).collect::<subanalytic::Result<Vec<_>>>()?,
                None => vec![Default::default(); 2],
            };
            let chart = Chart::new(h.space(), ChartIndex::from_number(*chart)?, center)?;
            Ok(Report::ok(pullback_chart(&h, &chart)?.to_string()))
        }
        Command::Pushdown { poly, y } => {
            let (m, q) = pushdown_poly(&s.series(poly, &[])?, y)?;
            Ok(Report::ok(format!("M = {m}, P~ = {q}")))
        }
    }
}

fn witness_text(x: &Point, p: u64) -> String {
    match x {
        Point::Rigid(c) if c.len() == 1 => format_scalar(&c[0]),
        other => other.display(p),
    }
}

fn main() -> ExitCode {
    // usage errors exit 1; exit 2 is reserved for an unknown result
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(r) => {
            println!("{}", r.text);
            if r.unknown {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
