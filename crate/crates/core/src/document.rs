//! JSON documents of named spaces, series, formulas, constructible sets and
//! points over a single prime.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::constructible::{ConstructibleSet, DatumChain, ElementaryDatum};
use crate::error::{Error, Result};
use crate::formula::{parse_formula, parse_series, Formula};
use crate::point::Point;
use crate::series::{Series, Space, VarSpec};
use crate::valued::{check_prime, format_scalar, parse_scalar, NormValue, Scalar};

#[derive(Serialize, Deserialize)]
struct RawVar {
    name: String,
    radius: String,
}

#[derive(Serialize, Deserialize)]
struct RawCoeff {
    mono: Vec<u32>,
    c: String,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawSeries {
    Explicit {
        vars: Vec<RawVar>,
        coeffs: Vec<RawCoeff>,
        #[serde(default = "zero_text")]
        tail: String,
    },
    Text {
        space: String,
        text: String,
    },
}

#[derive(Serialize, Deserialize)]
struct RawFormula {
    space: String,
    text: String,
}

#[derive(Serialize, Deserialize)]
struct RawLink {
    f: String,
    g: String,
    r: String,
    s: String,
    #[serde(rename = "R", default = "true_text")]
    region: String,
    #[serde(default)]
    t: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct RawChain {
    #[serde(default = "true_text")]
    region: String,
    #[serde(default)]
    links: Vec<RawLink>,
}

#[derive(Serialize, Deserialize)]
struct RawSet {
    space: String,
    chains: Vec<RawChain>,
}

#[derive(Serialize, Deserialize)]
struct RawDocument {
    prime: u64,
    #[serde(default)]
    spaces: BTreeMap<String, Vec<RawVar>>,
    #[serde(default)]
    series: BTreeMap<String, RawSeries>,
    #[serde(default)]
    formulas: BTreeMap<String, RawFormula>,
    #[serde(default)]
    sets: BTreeMap<String, RawSet>,
    #[serde(default)]
    points: BTreeMap<String, String>,
}

fn zero_text() -> String {
    "0".into()
}

fn true_text() -> String {
    "true".into()
}

#[derive(Clone, Debug, Default)]
pub struct Document {
    pub prime: u64,
    pub spaces: BTreeMap<String, Arc<Space>>,
    pub series: BTreeMap<String, Series>,
    pub formulas: BTreeMap<String, Formula>,
    pub sets: BTreeMap<String, ConstructibleSet>,
    pub points: BTreeMap<String, Point>,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Invalid(msg.into())
}

fn space_of(p: u64, vars: &[RawVar]) -> Result<Arc<Space>> {
    let specs = vars
        .iter()
        .map(|v| Ok(VarSpec::new(v.name.clone(), NormValue::parse(&v.radius, p)?)))
        .collect::<Result<Vec<_>>>()?;
    Space::new(p, specs)
}

fn raw_vars(space: &Space) -> Vec<RawVar> {
    space
        .vars()
        .iter()
        .map(|v| RawVar {
            name: v.name.clone(),
            radius: v.radius.display(space.prime()).to_string(),
        })
        .collect()
}

fn raw_series(f: &Series) -> RawSeries {
    RawSeries::Explicit {
        vars: raw_vars(f.space()),
        coeffs: f
            .terms()
            .iter()
            .map(|(m, c)| RawCoeff {
                mono: m.clone(),
                c: format_scalar(c),
            })
            .collect(),
        tail: f.tail().display(f.prime()).to_string(),
    }
}

/// `(a,b,…)` for a rigid point; `gauss(a,…;ρ,…)` or `gauss(a,…,ρ,…)` for a
/// monomial point.
pub fn parse_point(text: &str, p: u64) -> Result<Point> {
    let t = text.trim();
    let bad = || Error::Parse {
        pos: 0,
        msg: format!("not a point: `{text}`"),
    };
    if let Some(inner) = t.strip_prefix("gauss(").and_then(|r| r.strip_suffix(')')) {
        let (centers, radii): (Vec<&str>, Vec<&str>) = match inner.split_once(';') {
            Some((a, r)) => (split_list(a), split_list(r)),
            None => {
                let all = split_list(inner);
                if all.len() % 2 != 0 {
                    return Err(bad());
                }
                let (a, r) = all.split_at(all.len() / 2);
                (a.to_vec(), r.to_vec())
            }
        };
        if centers.len() != radii.len() {
            return Err(bad());
        }
        return Ok(Point::Monomial {
            center: centers.iter().map(|a| parse_scalar(a)).collect::<Result<_>>()?,
            rho: radii.iter().map(|r| NormValue::parse(r, p)).collect::<Result<_>>()?,
        });
    }
    let inner = t.strip_prefix('(').and_then(|r| r.strip_suffix(')')).unwrap_or(t);
    Ok(Point::Rigid(
        split_list(inner).iter().map(|a| parse_scalar(a)).collect::<Result<Vec<Scalar>>>()?,
    ))
}

fn split_list(s: &str) -> Vec<&str> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).collect()
}

impl Document {
    pub fn new(prime: u64) -> Result<Document> {
        check_prime(prime)?;
        Ok(Document {
            prime,
            ..Document::default()
        })
    }

    pub fn from_json(text: &str) -> Result<Document> {
        let raw: RawDocument = serde_json::from_str(text).map_err(|e| Error::Parse {
            pos: e.column(),
            msg: format!("document line {}: {e}", e.line()),
        })?;
        let p = raw.prime;
        let mut doc = Document::new(p)?;
        let mut names = BTreeSet::new();
        let mut claim = |n: &str| {
            if names.insert(n.to_string()) {
                Ok(())
            } else {
                Err(invalid(format!("name `{n}` is defined twice")))
            }
        };
        for (name, vars) in &raw.spaces {
            claim(name)?;
            doc.spaces.insert(name.clone(), space_of(p, vars)?);
        }
        for (name, s) in &raw.series {
            claim(name)?;
            let series = match s {
                RawSeries::Explicit { vars, coeffs, tail } => {
                    let space = space_of(p, vars)?;
                    let mut terms = Vec::new();
                    for c in coeffs {
                        if c.mono.len() != space.dim() {
                            return Err(invalid(format!("series `{name}`: monomial length does not match its variables")));
                        }
                        terms.push((c.mono.clone(), parse_scalar(&c.c)?));
                    }
                    Series::from_terms(&space, terms).with_tail(NormValue::parse(tail, p)?)
                }
                RawSeries::Text { space, text } => parse_series(text, doc.space(space)?)?,
            };
            doc.series.insert(name.clone(), series);
        }
        for (name, f) in &raw.formulas {
            claim(name)?;
            let formula = parse_formula(&f.text, doc.space(&f.space)?)?;
            doc.formulas.insert(name.clone(), formula);
        }
        for (name, s) in &raw.sets {
            claim(name)?;
            let set = doc.load_set(s)?;
            doc.sets.insert(name.clone(), set);
        }
        for (name, pt) in &raw.points {
            claim(name)?;
            doc.points.insert(name.clone(), parse_point(pt, p)?);
        }
        Ok(doc)
    }

    fn load_set(&self, raw: &RawSet) -> Result<ConstructibleSet> {
        let base = self.space(&raw.space)?.clone();
        let mut chains = Vec::new();
        for c in &raw.chains {
            let mut chain = DatumChain::identity(&base, parse_formula(&c.region, &base)?)?;
            for l in &c.links {
                let ambient = chain.full_ambient();
                let f = self.series_in(&l.f, &ambient)?;
                let g = self.series_in(&l.g, &ambient)?;
                let r = NormValue::parse(&l.r, self.prime)?;
                let s = NormValue::parse(&l.s, self.prime)?;
                let chart = match &l.t {
                    Some(t) => t.clone(),
                    None => crate::constructible::fresh_chart_name(&ambient, "t"),
                };
                let ext = ambient.extended(VarSpec::new(chart.clone(), r.clone()))?;
                let region = parse_formula(&l.region, &ext)?;
                chain.push_link(ElementaryDatum {
                    f,
                    g,
                    r,
                    s,
                    region,
                    chart,
                })?;
            }
            chains.push(chain);
        }
        ConstructibleSet::new(&base, chains)
    }

    /// A named series re-read over `ambient`, or series text over it.
    fn series_in(&self, text: &str, ambient: &Arc<Space>) -> Result<Series> {
        match self.series.get(text) {
            Some(s) => s.embed_by_name(ambient),
            None => parse_series(text, ambient),
        }
    }

    pub fn to_json(&self) -> String {
        let p = self.prime;
        let mut raw = RawDocument {
            prime: p,
            spaces: self.spaces.iter().map(|(n, s)| (n.clone(), raw_vars(s))).collect(),
            series: self.series.iter().map(|(n, s)| (n.clone(), raw_series(s))).collect(),
            formulas: BTreeMap::new(),
            sets: BTreeMap::new(),
            points: self.points.iter().map(|(n, x)| (n.clone(), x.display(p))).collect(),
        };
        let space_name = |s: &Arc<Space>, raw: &mut RawDocument| -> String {
            if let Some((n, _)) = raw.spaces.iter().find(|(_, v)| space_of(p, v).ok().as_ref() == Some(s)) {
                return n.clone();
            }
            let n = (0..).map(|i| format!("space{i}")).find(|n| !raw.spaces.contains_key(n)).expect("fresh");
            raw.spaces.insert(n.clone(), raw_vars(s));
            n
        };
        for (name, f) in &self.formulas {
            let space = f.space().unwrap_or_else(|| Space::new(p, Vec::new()).expect("empty space"));
            let sp = space_name(&space, &mut raw);
            raw.formulas.insert(
                name.clone(),
                RawFormula {
                    space: sp,
                    text: f.to_string(),
                },
            );
        }
        for (name, set) in &self.sets {
            let sp = space_name(set.base(), &mut raw);
            let mut chains = Vec::new();
            for (ci, c) in set.chains().iter().enumerate() {
                let mut links = Vec::new();
                for (li, l) in c.links().iter().enumerate() {
                    let key = |which: &str| format!("{name}.{ci}.{li}.{which}");
                    raw.series.insert(key("f"), raw_series(&l.f));
                    raw.series.insert(key("g"), raw_series(&l.g));
                    links.push(RawLink {
                        f: key("f"),
                        g: key("g"),
                        r: l.r.display(p).to_string(),
                        s: l.s.display(p).to_string(),
                        region: l.region.to_string(),
                        t: Some(l.chart.clone()),
                    });
                }
                chains.push(RawChain {
                    region: c.base_region().to_string(),
                    links,
                });
            }
            raw.sets.insert(name.clone(), RawSet { space: sp, chains });
        }
        let mut out = serde_json::to_string_pretty(&raw).expect("documents serialize");
        out.push('\n');
        out
    }

    pub fn space(&self, name: &str) -> Result<&Arc<Space>> {
        self.spaces.get(name).ok_or_else(|| invalid(format!("no space named `{name}`")))
    }

    pub fn get_series(&self, name: &str) -> Result<&Series> {
        self.series.get(name).ok_or_else(|| invalid(format!("no series named `{name}`")))
    }

    pub fn formula(&self, name: &str) -> Result<&Formula> {
        self.formulas.get(name).ok_or_else(|| invalid(format!("no formula named `{name}`")))
    }

    pub fn set(&self, name: &str) -> Result<&ConstructibleSet> {
        self.sets.get(name).ok_or_else(|| invalid(format!("no set named `{name}`")))
    }

    /// A named point, or point text.
    pub fn point(&self, text: &str) -> Result<Point> {
        match self.points.get(text) {
            Some(x) => Ok(x.clone()),
            None => parse_point(text, self.prime),
        }
    }
}
