//! JSON file formats for spaces, measures, needles, plans and potentials.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{DensityOnNeedle, DiscreteMeasure};
use crate::space::{validate_space, FiniteMMSpace, GeodesicChain, Needle};
use crate::transport::{DynamicPlan, PlanEntry};

/// Default needle grid step.
pub const DEFAULT_GRID: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xy: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Euclidean,
    PathGraph,
    Grid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub metric: MetricKind,
    /// Weighted edges `[from, to, length]` of a path graph; consecutive
    /// points with unit length (or coordinate distance) when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<(String, String, f64)>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DistSpec {
    Matrix(Vec<Vec<f64>>),
    Metric(MetricSpec),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NodeRef {
    Index(usize),
    Label(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub nodes: Vec<NodeRef>,
    pub times: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceFile {
    pub points: Vec<PointSpec>,
    pub dist: DistSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub geodesics: Vec<ChainSpec>,
}

fn resolve(labels: &[String], r: &NodeRef) -> Result<usize> {
    match r {
        NodeRef::Index(i) if *i < labels.len() => Ok(*i),
        NodeRef::Index(i) => Err(Error::UnknownPoint(i.to_string())),
        NodeRef::Label(l) => labels
            .iter()
            .position(|x| x == l)
            .ok_or_else(|| Error::UnknownPoint(l.clone())),
    }
}

fn shortest_paths(n: usize, edges: &[(usize, usize, f64)]) -> Result<Vec<Vec<f64>>> {
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for &(a, b, w) in edges {
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::Input(format!(
                "edge length {w} must be positive and finite"
            )));
        }
        d[a][b] = d[a][b].min(w);
        d[b][a] = d[b][a].min(w);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    if d.iter().flatten().any(|v| v.is_infinite()) {
        return Err(Error::Input("path graph is disconnected".into()));
    }
    Ok(d)
}

impl SpaceFile {
    pub fn into_space(self) -> Result<FiniteMMSpace> {
        let n = self.points.len();
        if n == 0 {
            return Err(Error::Input("space has no points".into()));
        }
        let labels: Vec<String> = self.points.iter().map(|p| p.id.clone()).collect();
        let mut seen = labels.clone();
        seen.sort();
        if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Input(format!("duplicate point id {}", w[0])));
        }
        let coords: Vec<Option<Vec<f64>>> = self.points.iter().map(|p| p.xy.clone()).collect();
        let need_coords = |what: &str| -> Result<Vec<Vec<f64>>> {
            coords
                .iter()
                .zip(&labels)
                .map(|(c, l)| {
                    c.clone().ok_or_else(|| {
                        Error::Input(format!("{what} metric needs xy for point {l}"))
                    })
                })
                .collect()
        };
        let dist = match &self.dist {
            DistSpec::Matrix(m) => m.clone(),
            DistSpec::Metric(MetricSpec {
                metric: MetricKind::Euclidean,
                ..
            }) => {
                let c = need_coords("euclidean")?;
                (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| FiniteMMSpace::euclidean(&c[i], &c[j]))
                            .collect()
                    })
                    .collect()
            }
            DistSpec::Metric(MetricSpec {
                metric: MetricKind::Grid,
                ..
            }) => {
                let c = need_coords("grid")?;
                (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| FiniteMMSpace::manhattan(&c[i], &c[j]))
                            .collect()
                    })
                    .collect()
            }
            DistSpec::Metric(MetricSpec {
                metric: MetricKind::PathGraph,
                edges,
            }) => {
                let edges = match edges {
                    Some(list) => list
                        .iter()
                        .map(|(a, b, w)| {
                            Ok((
                                resolve(&labels, &NodeRef::Label(a.clone()))?,
                                resolve(&labels, &NodeRef::Label(b.clone()))?,
                                *w,
                            ))
                        })
                        .collect::<Result<Vec<_>>>()?,
                    None => (1..n)
                        .map(|i| {
                            let w = match (&coords[i - 1], &coords[i]) {
                                (Some(a), Some(b)) => FiniteMMSpace::euclidean(a, b),
                                _ => 1.0,
                            };
                            (i - 1, i, w)
                        })
                        .collect(),
                };
                shortest_paths(n, &edges)?
            }
        };
        let reference = match self.measure {
            Some(w) => DiscreteMeasure::new(w)?,
            None => DiscreteMeasure::uniform(n),
        };
        let geodesics = self
            .geodesics
            .iter()
            .map(|g| {
                let nodes = g
                    .nodes
                    .iter()
                    .map(|r| resolve(&labels, r))
                    .collect::<Result<Vec<_>>>()?;
                GeodesicChain::new(nodes, g.times.clone())
            })
            .collect::<Result<Vec<_>>>()?;
        let space = FiniteMMSpace::new(labels, coords, dist, reference, geodesics)?;
        let violations = validate_space(&space, 1e-9 * space.diameter().max(1.0));
        if !violations.is_empty() {
            let text = serde_json::to_string(&violations)?;
            return Err(Error::Input(format!("invalid space: {text}")));
        }
        Ok(space)
    }

    /// Explicit form of a space: distance matrix, weights and labelled chains.
    pub fn from_space(space: &FiniteMMSpace) -> Self {
        let points = (0..space.n())
            .map(|x| PointSpec {
                id: space.label(x).to_string(),
                xy: space.coords(x).map(<[f64]>::to_vec),
            })
            .collect();
        let geodesics = space
            .geodesics()
            .iter()
            .map(|g| ChainSpec {
                nodes: g
                    .nodes()
                    .iter()
                    .map(|&x| NodeRef::Label(space.label(x).to_string()))
                    .collect(),
                times: g.times().to_vec(),
                mass: None,
            })
            .collect();
        Self {
            points,
            dist: DistSpec::Matrix(space.distance_rows()),
            measure: Some(space.reference().weights().to_vec()),
            geodesics,
        }
    }
}

/// A measure given as a weight vector or as atoms keyed by point id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeasureFile {
    Weights(Vec<f64>),
    Atoms { atoms: BTreeMap<String, f64> },
}

impl MeasureFile {
    pub fn into_measure(self, space: &FiniteMMSpace) -> Result<DiscreteMeasure> {
        match self {
            MeasureFile::Weights(w) => {
                if w.len() != space.n() {
                    return Err(Error::MismatchedSpace {
                        expected: space.n(),
                        found: w.len(),
                    });
                }
                DiscreteMeasure::new(w)
            }
            MeasureFile::Atoms { atoms } => {
                let mut mu = DiscreteMeasure::zeros(space.n());
                for (label, w) in atoms {
                    let x = space.index_of(&label).ok_or(Error::UnknownPoint(label))?;
                    if !(w >= 0.0) || !w.is_finite() {
                        return Err(Error::Input(format!(
                            "atom mass {w} must be finite and nonnegative"
                        )));
                    }
                    mu.add_mass(x, w);
                }
                Ok(mu)
            }
        }
    }

    pub fn from_measure(mu: &DiscreteMeasure, space: &FiniteMMSpace) -> Self {
        MeasureFile::Atoms {
            atoms: mu
                .atoms()
                .map(|(x, w)| (space.label(x).to_string(), w))
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeedleModel {
    Sine,
    Constant,
    Sinh,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NeedleFile {
    Density {
        length: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grid_step: Option<f64>,
        density: Vec<f64>,
    },
    Model {
        model: NeedleModel,
        #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
        k: Option<f64>,
        #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
        n: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        length: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        value: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grid_step: Option<f64>,
    },
}

impl NeedleFile {
    /// Builds the needle; `grid` overrides the model grid step.
    pub fn into_needle(self, grid: Option<f64>) -> Result<Needle> {
        match self {
            NeedleFile::Density {
                length,
                grid_step,
                density,
            } => {
                let d = DensityOnNeedle::new(length, density)?;
                if let Some(s) = grid_step {
                    if (s - d.step()).abs() > 1e-9 * s {
                        return Err(Error::Input(format!(
                            "grid_step {s} disagrees with {} samples over {length}",
                            d.nodes()
                        )));
                    }
                }
                Ok(Needle::new(d))
            }
            NeedleFile::Model {
                model,
                k,
                n,
                length,
                value,
                grid_step,
            } => {
                let step = grid.or(grid_step).unwrap_or(DEFAULT_GRID);
                let need = |v: Option<f64>, name: &str| {
                    v.ok_or_else(|| Error::Input(format!("model needs {name}")))
                };
                match model {
                    NeedleModel::Sine => Needle::sine_model(need(k, "K")?, need(n, "N")?, step),
                    NeedleModel::Sinh => Needle::sinh_model(
                        need(k, "K")?,
                        need(n, "N")?,
                        length.unwrap_or(1.0),
                        step,
                    ),
                    NeedleModel::Constant => {
                        Needle::constant(length.unwrap_or(1.0), value.unwrap_or(1.0), step)
                    }
                }
            }
        }
    }

    pub fn from_needle(needle: &Needle) -> Self {
        let d = needle.density();
        NeedleFile::Density {
            length: d.length(),
            grid_step: Some(d.step()),
            density: d.values().to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    pub chains: Vec<ChainSpec>,
}

impl PlanFile {
    pub fn into_plan(self, space: &FiniteMMSpace) -> Result<DynamicPlan> {
        let entries = self
            .chains
            .into_iter()
            .map(|c| {
                let nodes = c
                    .nodes
                    .iter()
                    .map(|r| resolve(space.labels(), r))
                    .collect::<Result<Vec<_>>>()?;
                let mass = c
                    .mass
                    .ok_or_else(|| Error::Input("plan chain needs a mass".into()))?;
                Ok(PlanEntry {
                    chain: GeodesicChain::new(nodes, c.times)?,
                    mass,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        DynamicPlan::new(entries)
    }

    pub fn from_plan(plan: &DynamicPlan, space: &FiniteMMSpace) -> Self {
        let chains = plan
            .entries
            .iter()
            .map(|e| ChainSpec {
                nodes: e
                    .chain
                    .nodes()
                    .iter()
                    .map(|&x| NodeRef::Label(space.label(x).to_string()))
                    .collect(),
                times: e.chain.times().to_vec(),
                mass: Some(e.mass),
            })
            .collect();
        Self { chains }
    }
}

/// Reads a JSON file, reporting line and column on syntax errors.
pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    parse_json(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

pub fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        Error::Input(format!(
            "malformed JSON at line {} column {}: {e}",
            e.line(),
            e.column()
        ))
    })
}

pub fn load_space(path: &Path) -> Result<FiniteMMSpace> {
    read_json::<SpaceFile>(path)?.into_space()
}

/// Parses a measure argument: `uniform`, `reference`, `dirac:ID`,
/// `uniform:ID,ID,...` or a JSON file path.
pub fn parse_measure(arg: &str, space: &FiniteMMSpace) -> Result<DiscreteMeasure> {
    let lookup = |l: &str| {
        space
            .index_of(l.trim())
            .ok_or_else(|| Error::UnknownPoint(l.trim().to_string()))
    };
    if arg == "uniform" {
        return Ok(DiscreteMeasure::uniform(space.n()));
    }
    if arg == "reference" {
        return Ok(space.reference().clone());
    }
    if let Some(l) = arg.strip_prefix("dirac:") {
        return Ok(DiscreteMeasure::dirac(space.n(), lookup(l)?));
    }
    if let Some(list) = arg.strip_prefix("uniform:") {
        let pts = list.split(',').map(lookup).collect::<Result<Vec<_>>>()?;
        return Ok(DiscreteMeasure::uniform_on(space.n(), &pts));
    }
    read_json::<MeasureFile>(Path::new(arg))?.into_measure(space)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PotentialFile {
    Values(Vec<f64>),
    Keyed { u: Vec<f64> },
}

/// Parses a potential: `x`, `-x`, `y`, `-y`, `0`, `d:ID`, `-d:ID`, an
/// inline JSON array or `@path`.
pub fn parse_potential(arg: &str, space: &FiniteMMSpace) -> Result<Vec<f64>> {
    let n = space.n();
    let coord = |axis: usize, sign: f64| -> Result<Vec<f64>> {
        (0..n)
            .map(|x| {
                space
                    .coords(x)
                    .and_then(|c| c.get(axis))
                    .map(|v| sign * v)
                    .ok_or_else(|| {
                        Error::Input(format!("point {} lacks coordinate {axis}", space.label(x)))
                    })
            })
            .collect()
    };
    let dist = |label: &str, sign: f64| -> Result<Vec<f64>> {
        let y = space
            .index_of(label)
            .ok_or_else(|| Error::UnknownPoint(label.to_string()))?;
        Ok((0..n).map(|x| sign * space.d(x, y)).collect())
    };
    let u = match arg.trim() {
        "x" => coord(0, 1.0)?,
        "-x" => coord(0, -1.0)?,
        "y" => coord(1, 1.0)?,
        "-y" => coord(1, -1.0)?,
        "0" => vec![0.0; n],
        s if s.starts_with("d:") => dist(&s[2..], 1.0)?,
        s if s.starts_with("-d:") => dist(&s[3..], -1.0)?,
        s if s.starts_with('[') => parse_json(s)?,
        s if s.starts_with('@') => match read_json::<PotentialFile>(Path::new(&s[1..]))? {
            PotentialFile::Values(v) | PotentialFile::Keyed { u: v } => v,
        },
        s => return Err(Error::Input(format!("unrecognized potential {s:?}"))),
    };
    if u.len() != n {
        return Err(Error::MismatchedSpace {
            expected: n,
            found: u.len(),
        });
    }
    Ok(u)
}

/// Pretty JSON with sorted keys and a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIANGLE: &str = r#"{
        "points": [{"id": "a", "xy": [0, 0]}, {"id": "b", "xy": [3, 0]}, {"id": "c", "xy": [3, 4]}],
        "dist": {"metric": "euclidean"},
        "geodesics": [{"nodes": ["a", "b"], "times": [0, 1]}]
    }"#;

    #[test]
    fn euclidean_space() {
        let s = parse_json::<SpaceFile>(TRIANGLE)
            .unwrap()
            .into_space()
            .unwrap();
        assert_eq!(s.d(0, 2), 5.0);
        assert_eq!(s.geodesics().len(), 1);
        assert!((s.reference().mass(1) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn grid_and_path_metrics() {
        let g = r#"{"points": [{"id": "a", "xy": [0, 0]}, {"id": "b", "xy": [1, 1]}], "dist": {"metric": "grid"}}"#;
        assert_eq!(
            parse_json::<SpaceFile>(g)
                .unwrap()
                .into_space()
                .unwrap()
                .d(0, 1),
            2.0
        );
        let p = r#"{"points": [{"id": "a"}, {"id": "b"}, {"id": "c"}],
                    "dist": {"metric": "path_graph", "edges": [["a", "b", 2], ["b", "c", 0.5]]}}"#;
        assert_eq!(
            parse_json::<SpaceFile>(p)
                .unwrap()
                .into_space()
                .unwrap()
                .d(0, 2),
            2.5
        );
        let chain = r#"{"points": [{"id": "a"}, {"id": "b"}, {"id": "c"}], "dist": {"metric": "path_graph"}}"#;
        assert_eq!(
            parse_json::<SpaceFile>(chain)
                .unwrap()
                .into_space()
                .unwrap()
                .d(0, 2),
            2.0
        );
    }

    #[test]
    fn invalid_metric_rejected() {
        let bad = r#"{"points": [{"id": "a"}, {"id": "b"}, {"id": "c"}],
                      "dist": [[0, 1, 3], [1, 0, 1], [3, 1, 0]]}"#;
        let err = parse_json::<SpaceFile>(bad)
            .unwrap()
            .into_space()
            .unwrap_err();
        assert!(err.to_string().contains("triangle"), "{err}");
    }

    #[test]
    fn malformed_json_position() {
        let err = parse_json::<SpaceFile>("{\n  \"points\": [,\n}").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn round_trips() {
        let s = parse_json::<SpaceFile>(TRIANGLE)
            .unwrap()
            .into_space()
            .unwrap();
        let again = SpaceFile::from_space(&s).into_space().unwrap();
        assert_eq!(again, s);
        let mu = parse_measure("uniform:a,c", &s).unwrap();
        let file = MeasureFile::from_measure(&mu, &s);
        let text = to_json(&file).unwrap();
        assert_eq!(
            parse_json::<MeasureFile>(&text)
                .unwrap()
                .into_measure(&s)
                .unwrap(),
            mu
        );
        let plan = DynamicPlan::new(vec![PlanEntry {
            chain: GeodesicChain::segment(0, 1),
            mass: 1.0,
        }])
        .unwrap();
        let pf = PlanFile::from_plan(&plan, &s);
        assert_eq!(
            parse_json::<PlanFile>(&to_json(&pf).unwrap())
                .unwrap()
                .into_plan(&s)
                .unwrap(),
            plan
        );
        let nd = Needle::sine_model(1.0, 3.0, 0.1).unwrap();
        let nf = NeedleFile::from_needle(&nd);
        assert!(
            parse_json::<NeedleFile>(&to_json(&nf).unwrap())
                .unwrap()
                .into_needle(None)
                .unwrap()
                == nd
        );
    }

    #[test]
    fn potentials() {
        let s = parse_json::<SpaceFile>(TRIANGLE)
            .unwrap()
            .into_space()
            .unwrap();
        assert_eq!(parse_potential("-x", &s).unwrap(), vec![0.0, -3.0, -3.0]);
        assert_eq!(parse_potential("-d:a", &s).unwrap(), vec![0.0, -3.0, -5.0]);
        assert_eq!(
            parse_potential("[1, 2, 3]", &s).unwrap(),
            vec![1.0, 2.0, 3.0]
        );
        assert!(parse_potential("[1]", &s).is_err());
        assert!(parse_potential("z", &s).is_err());
    }

    #[test]
    fn needle_models() {
        let f: NeedleFile = parse_json(r#"{"model": "sine", "K": 1, "N": 2}"#).unwrap();
        let nd = f.into_needle(Some(0.01)).unwrap();
        assert!((nd.length() - std::f64::consts::PI).abs() < 1e-12);
        let f: NeedleFile = parse_json(r#"{"model": "constant", "length": 2}"#).unwrap();
        assert_eq!(f.into_needle(None).unwrap().length(), 2.0);
        let f: NeedleFile =
            parse_json(r#"{"length": 1, "grid_step": 0.5, "density": [1, 2, 3]}"#).unwrap();
        assert_eq!(f.into_needle(None).unwrap().step(), 0.5);
    }
}
