//! Command-line interface.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::cd::{
    cd1_entropy_check, condition_from_localization, firstclaim_per_ray, localize, mcp_check,
    needle_cd_check, CheckReport, ConditionOptions, ConditionReport, EntropyCheckConfig,
    Localization, NeedleSampling, Window,
};
use crate::coefficients::{d_max, sigma, tau};
use crate::config::{default_t_samples, nprime_samples, Tolerances};
use crate::error::{Error, Result};
use crate::glue::{glue, verify_glued_cd1, GlueOptions, GluedPlan};
use crate::io::{
    load_space, parse_measure, parse_potential, read_json, to_json, NeedleFile, NeedleModel,
    PlanFile,
};
use crate::measures::{renyi_entropy, DiscreteMeasure};
use crate::num::Ext;
use crate::oracle::{
    branching_sets_brute, brute_force_ot, fd_concavity_defect, hp_sigma, hp_tau, OracleConfig,
};
use crate::space::{is_one_lipschitz, validate_space, FiniteMMSpace, Needle};
use crate::svg::{bar_chart, line_chart, Series};
use crate::transport::{
    is_cyclically_monotone, kantorovich_potential, pushforward_at, wasserstein_p,
};

#[derive(Parser, Debug)]
#[command(
    name = "needle-cd",
    version,
    about = "Curvature-dimension checks on finite metric measure spaces"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Tolerance of the sampled inequalities.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Needle grid step.
    #[arg(long, global = true)]
    pub grid: Option<f64>,
    /// Comma-separated sample times.
    #[arg(long = "t-samples", global = true, value_delimiter = ',')]
    pub t_samples: Option<Vec<f64>>,
    /// Comma-separated entropy exponents N'.
    #[arg(long = "nprime-samples", global = true, value_delimiter = ',')]
    pub nprime_samples: Option<Vec<f64>>,
    /// Seed for randomly sampled windows.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Cross-check against the brute-force references.
    #[arg(long, global = true)]
    pub oracle: bool,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Also write a plot.
    #[arg(long, global = true)]
    pub svg: Option<PathBuf>,
    /// Print a text table to stderr.
    #[arg(long, global = true)]
    pub table: bool,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct Curvature {
    #[arg(long = "K", allow_negative_numbers = true)]
    pub k: f64,
    #[arg(long = "N")]
    pub n: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModelArg {
    Sine,
    Constant,
    Sinh,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Distortion coefficients σ and τ.
    Coeffs {
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
        #[command(flatten)]
        curvature: Curvature,
        #[arg(long, allow_negative_numbers = true)]
        theta: f64,
    },
    /// Rényi entropy of a measure.
    Entropy {
        #[arg(long)]
        space: PathBuf,
        #[arg(long, default_value = "reference")]
        mu: String,
        /// N' values when --nprime-samples is not given.
        #[arg(long = "N")]
        n: Option<f64>,
    },
    /// Wasserstein distance and an optimal coupling.
    Wasserstein {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        mu0: String,
        #[arg(long)]
        mu1: String,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
    },
    /// Kantorovich potential of the W₁ problem.
    Potential {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        mu0: String,
        #[arg(long)]
        mu1: String,
    },
    /// Transport set, branching points, rays and the disintegration of m.
    Decompose {
        #[arg(long)]
        space: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        u: String,
        #[arg(long = "ray-tol")]
        ray_tol: Option<f64>,
    },
    /// CD(K, N) of a single needle.
    CheckNeedle {
        #[arg(long, conflicts_with = "model")]
        needle: Option<PathBuf>,
        #[arg(long, value_enum)]
        model: Option<ModelArg>,
        /// Length of constant and sinh models.
        #[arg(long)]
        length: Option<f64>,
        #[command(flatten)]
        curvature: Curvature,
    },
    /// Measure contraction along a plan collapsing μ₀ onto x₀.
    CheckMcp {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        mu0: String,
        #[arg(long)]
        x0: String,
        #[arg(long)]
        plan: PathBuf,
        #[command(flatten)]
        curvature: Curvature,
    },
    /// Entropy inequality along a W₁-optimal plan.
    CheckCd1 {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        mu0: Option<String>,
        #[arg(long)]
        mu1: Option<String>,
        #[command(flatten)]
        curvature: Curvature,
    },
    /// CD(K, N) of every needle of a potential.
    CheckCd1u {
        #[arg(long)]
        space: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        u: String,
        #[arg(long = "ray-tol")]
        ray_tol: Option<f64>,
        #[command(flatten)]
        curvature: Curvature,
    },
    /// Two-interval estimate on every needle of a potential.
    CheckFirstclaim {
        #[arg(long)]
        space: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        u: String,
        #[command(flatten)]
        curvature: Curvature,
        #[arg(long)]
        r0: Option<f64>,
        #[arg(long)]
        r1: Option<f64>,
        #[arg(long)]
        l0: Option<f64>,
        #[arg(long)]
        l1: Option<f64>,
        /// Number of random windows when no window is given.
        #[arg(long, default_value_t = 100)]
        windows: usize,
    },
    /// Glued W₁-geodesic and its entropy check.
    Glue {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        mu0: String,
        #[arg(long)]
        mu1: String,
        #[arg(long, allow_hyphen_values = true)]
        u: Option<String>,
        #[command(flatten)]
        curvature: Curvature,
    },
    /// Space validation, decomposition, needle and two-interval checks.
    Report {
        #[arg(long)]
        space: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        u: String,
        #[command(flatten)]
        curvature: Curvature,
        #[arg(long, default_value_t = 20)]
        windows: usize,
    },
}

/// Result of a subcommand before it is written out.
pub struct Outcome {
    pub json: Value,
    pub passed: Option<bool>,
    pub svg: Option<String>,
    pub table: Option<String>,
}

impl Outcome {
    fn done(json: Value) -> Self {
        Self {
            json,
            passed: None,
            svg: None,
            table: None,
        }
    }

    fn check(json: Value, passed: bool) -> Self {
        Self {
            json,
            passed: Some(passed),
            svg: None,
            table: None,
        }
    }

    fn with_svg(mut self, svg: String) -> Self {
        self.svg = Some(svg);
        self
    }

    fn with_table(mut self, table: String) -> Self {
        self.table = Some(table);
        self
    }
}

struct Ctx<'a> {
    g: &'a Global,
    tol: Tolerances,
    oracle: OracleConfig,
}

impl Ctx<'_> {
    fn t_samples(&self) -> Vec<f64> {
        self.g.t_samples.clone().unwrap_or_else(default_t_samples)
    }

    fn nprimes(&self, n: f64) -> Vec<f64> {
        self.g
            .nprime_samples
            .clone()
            .unwrap_or_else(|| nprime_samples(n))
    }

    fn entropy_config(&self, c: Curvature) -> EntropyCheckConfig {
        EntropyCheckConfig {
            t_samples: self.t_samples(),
            nprime_samples: self.nprimes(c.n),
            tol: self.tol,
            ..EntropyCheckConfig::new(c.k, c.n)
        }
    }

    fn condition_options(&self, ray_tol: Option<f64>) -> ConditionOptions {
        ConditionOptions {
            ray_tol,
            step: self.g.grid,
            sampling: NeedleSampling::default(),
            tol: self.tol,
        }
    }
}

fn label_list(space: &FiniteMMSpace, xs: &[usize]) -> Vec<String> {
    xs.iter().map(|&x| space.label(x).to_string()).collect()
}

fn atoms_json(space: &FiniteMMSpace, mu: &DiscreteMeasure) -> Value {
    Value::Object(
        mu.atoms()
            .map(|(x, w)| (space.label(x).to_string(), json!(w)))
            .collect(),
    )
}

fn point_values(space: &FiniteMMSpace, v: &[f64]) -> Value {
    Value::Array(
        (0..space.n())
            .map(|x| json!({"id": space.label(x), "value": Ext(v[x])}))
            .collect(),
    )
}

fn report_json(r: &CheckReport) -> Result<Value> {
    Ok(serde_json::to_value(r)?)
}

fn margins_svg(title: &str, r: &CheckReport) -> String {
    let labels: Vec<String> = r.witnesses.iter().map(|w| w.kind.clone()).collect();
    let values: Vec<f64> = r.witnesses.iter().map(|w| w.margin).collect();
    bar_chart(title, &labels, &values)
}

fn needle_series(name: String, nd: &Needle, points: usize) -> Series {
    let d = nd.density();
    let stride = (d.nodes() / points.max(2)).max(1);
    let mut pts: Vec<(f64, f64)> = (0..d.nodes())
        .step_by(stride)
        .map(|i| (d.position(i), d.values()[i]))
        .collect();
    if !(d.nodes() - 1).is_multiple_of(stride) {
        pts.push((d.length(), *d.values().last().unwrap()));
    }
    Series { name, points: pts }
}

fn coeffs(ctx: &Ctx, t: f64, c: Curvature, theta: f64) -> Result<Outcome> {
    let s = sigma(t, c.k, c.n, theta)?;
    let tv = tau(t, c.k, c.n, theta)?;
    let mut out = json!({
        "inputs": {"t": t, "K": c.k, "N": c.n, "theta": theta},
        "sigma": s,
        "tau": tv,
        "d_max": d_max(c.k, c.n),
    });
    let curve: Vec<(f64, f64)> = (0..=100)
        .map(|i| i as f64 / 100.0)
        .filter_map(|x| sigma(x, c.k, c.n, theta).ok().map(|v| (x, v.to_f64())))
        .collect();
    let svg = line_chart(
        "sigma(t)",
        &[Series {
            name: "sigma".into(),
            points: curve,
        }],
    );
    if !ctx.g.oracle {
        return Ok(Outcome::done(out).with_svg(svg));
    }
    let digits = ctx.oracle.precision;
    let hs = hp_sigma(t, c.k, c.n, theta, digits)?.to_f64();
    let ht = hp_tau(t, c.k, c.n, theta, digits)?.to_f64();
    let rel = |a: f64, b: f64| {
        if a == b {
            0.0
        } else {
            (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
        }
    };
    let (es, et) = (rel(s.to_f64(), hs), rel(tv.to_f64(), ht));
    let agree = es <= ctx.tol.coefficient && et <= ctx.tol.coefficient;
    out["oracle"] = json!({"digits": digits, "sigma": Ext(hs), "tau": Ext(ht), "sigma_rel_err": Ext(es), "tau_rel_err": Ext(et), "agree": agree});
    Ok(Outcome::check(out, agree).with_svg(svg))
}

fn entropy(ctx: &Ctx, space: &Path, mu: &str, n: Option<f64>) -> Result<Outcome> {
    let s = load_space(space)?;
    let mu = parse_measure(mu, &s)?;
    let nprimes = match (&ctx.g.nprime_samples, n) {
        (Some(v), _) => v.clone(),
        (None, Some(n)) => nprime_samples(n),
        (None, None) => return Err(Error::Input("give --N or --nprime-samples".into())),
    };
    let ac = crate::measures::ac_decompose(&mu, s.reference())?;
    let values = nprimes
        .iter()
        .map(|&np| {
            Ok(json!({"nprime": np, "entropy": Ext(renyi_entropy(&mu, s.reference(), np)?)}))
        })
        .collect::<Result<Vec<_>>>()?;
    let labels = label_list(&s, &(0..s.n()).collect::<Vec<_>>());
    let svg = bar_chart("density", &labels, &ac.density);
    Ok(Outcome::done(
        json!({"entropy": values, "singular_mass": ac.singular_mass(), "mass": mu.total_mass()}),
    )
    .with_svg(svg))
}

fn wasserstein(ctx: &Ctx, space: &Path, mu0: &str, mu1: &str, p: f64) -> Result<Outcome> {
    let s = load_space(space)?;
    let (a, b) = (parse_measure(mu0, &s)?, parse_measure(mu1, &s)?);
    let (value, coupling) = wasserstein_p(&s, &a, &b, p)?;
    let monotone = crate::transport::is_cyclically_monotone_p(&coupling.support(), &s, 4, p);
    let entries: Vec<Value> = coupling
        .entries
        .iter()
        .map(|e| json!({"from": s.label(e.x), "to": s.label(e.y), "mass": e.mass}))
        .collect();
    let mut out =
        json!({"p": p, "value": value, "coupling": entries, "cyclically_monotone": monotone});
    let mut passed = monotone;
    if ctx.g.oracle {
        let r = brute_force_ot(&s, &a, &b, p, &ctx.oracle)?;
        let agree = (r.value - value).abs() <= 1e-9 * value.max(1.0);
        passed &= agree;
        out["oracle"] = json!({"value": r.value, "cost_exact": r.cost_exact, "agree": agree});
    }
    let labels: Vec<String> = coupling
        .entries
        .iter()
        .map(|e| format!("{}>{}", s.label(e.x), s.label(e.y)))
        .collect();
    let masses: Vec<f64> = coupling.entries.iter().map(|e| e.mass).collect();
    Ok(Outcome::check(out, passed).with_svg(bar_chart("coupling", &labels, &masses)))
}

fn potential(ctx: &Ctx, space: &Path, mu0: &str, mu1: &str) -> Result<Outcome> {
    let s = load_space(space)?;
    let (a, b) = (parse_measure(mu0, &s)?, parse_measure(mu1, &s)?);
    let k = kantorovich_potential(&s, &a, &b)?;
    let lipschitz = is_one_lipschitz(&k.values, &s, ctx.tol.metric * s.diameter().max(1.0)).0;
    let mut out = json!({"u": point_values(&s, &k.values), "w1": k.w1, "duality_gap": k.duality_gap, "one_lipschitz": lipschitz});
    let mut passed = lipschitz;
    if ctx.g.oracle {
        let r = brute_force_ot(&s, &a, &b, 1.0, &ctx.oracle)?;
        let agree = (r.value - k.w1).abs() <= 1e-9 * k.w1.max(1.0);
        passed &= agree;
        out["oracle"] = json!({"w1": r.value, "agree": agree});
    }
    let labels = label_list(&s, &(0..s.n()).collect::<Vec<_>>());
    Ok(Outcome::check(out, passed).with_svg(bar_chart("potential", &labels, &k.values)))
}

fn decomposition_json(s: &FiniteMMSpace, loc: &Localization) -> Value {
    let rays: Vec<Value> = loc
        .decomposition
        .rays
        .iter()
        .map(|r| {
            let part = loc.disintegration.part_for_ray(r.id);
            json!({
                "id": r.id,
                "representative": s.label(r.representative),
                "members": label_list(s, &r.members),
                "params": r.params,
                "quotient_mass": part.map_or(0.0, |p| p.mass),
                "conditional": r.members.iter().map(|&x| part.map_or(0.0, |p| p.conditional.mass(x))).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({
        "transport_set": label_list(s, &loc.structure.transport_set()),
        "branching": {"plus": label_list(s, &loc.branching.plus), "minus": label_list(s, &loc.branching.minus)},
        "branching_mass": loc.branching.mass(s.reference()),
        "rays": rays,
        "reconstruction_error": loc
            .disintegration
            .reconstruct(s.n())
            .max_abs_diff(&s.reference().restrict(&loc.decomposition.nonbranched)),
    })
}

fn decompose(ctx: &Ctx, space: &Path, u: &str, ray_tol: Option<f64>) -> Result<Outcome> {
    let s = load_space(space)?;
    let u = parse_potential(u, &s)?;
    let loc = localize(&s, &u, ray_tol, ctx.g.grid)?;
    let mut out = decomposition_json(&s, &loc);
    let mut passed = None;
    if ctx.g.oracle {
        let (plus, minus) = branching_sets_brute(&s, &u, loc.structure.tol());
        let agree = plus == loc.branching.plus && minus == loc.branching.minus;
        passed = Some(agree);
        out["oracle"] =
            json!({"plus": label_list(&s, &plus), "minus": label_list(&s, &minus), "agree": agree});
    }
    let series: Vec<Series> = loc
        .needle_rays()
        .into_iter()
        .map(|r| needle_series(format!("ray {r}"), loc.needle(r).unwrap(), 200))
        .collect();
    let table = loc
        .decomposition
        .rays
        .iter()
        .map(|r| {
            format!(
                "{:>4}  {:<10}  {}",
                r.id,
                s.label(r.representative),
                label_list(&s, &r.members).join(" ")
            )
        })
        .collect::<Vec<_>>()
        .join("\n");
    Ok(Outcome {
        json: out,
        passed,
        svg: Some(line_chart("needle densities", &series)),
        table: Some(table),
    })
}

fn check_needle(
    ctx: &Ctx,
    file: Option<&Path>,
    model: Option<ModelArg>,
    length: Option<f64>,
    c: Curvature,
) -> Result<Outcome> {
    let nf = match (file, model) {
        (Some(p), _) => read_json::<NeedleFile>(p)?,
        (None, Some(m)) => NeedleFile::Model {
            model: match m {
                ModelArg::Sine => NeedleModel::Sine,
                ModelArg::Constant => NeedleModel::Constant,
                ModelArg::Sinh => NeedleModel::Sinh,
            },
            k: Some(c.k),
            n: Some(c.n),
            length,
            value: None,
            grid_step: None,
        },
        (None, None) => return Err(Error::Input("give --needle or --model".into())),
    };
    let nd = nf.into_needle(ctx.g.grid)?;
    let r = needle_cd_check(&nd, c.k, c.n, &NeedleSampling::default(), &ctx.tol)?;
    let mut out = json!({
        "needle": {"length": nd.length(), "step": nd.step(), "nodes": nd.density().nodes()},
        "K": c.k,
        "N": c.n,
        "report": report_json(&r)?,
        "passed": r.passed,
    });
    if ctx.g.oracle {
        out["oracle"] = serde_json::to_value(fd_concavity_defect(&nd, c.k, c.n, &ctx.oracle)?)?;
    }
    let g = Needle::new(crate::measures::DensityOnNeedle::new(
        nd.length(),
        nd.density()
            .values()
            .iter()
            .map(|v| v.powf(1.0 / (c.n - 1.0)))
            .collect(),
    )?);
    let svg = line_chart(
        "needle",
        &[
            needle_series("h".into(), &nd, 400),
            needle_series("h^(1/(N-1))".into(), &g, 400),
        ],
    );
    Ok(Outcome::check(out, r.passed).with_svg(svg))
}

fn check_mcp(
    ctx: &Ctx,
    space: &Path,
    mu0: &str,
    x0: &str,
    plan: &Path,
    c: Curvature,
) -> Result<Outcome> {
    let s = load_space(space)?;
    let mu0 = parse_measure(mu0, &s)?;
    let x = s
        .index_of(x0)
        .ok_or_else(|| Error::UnknownPoint(x0.to_string()))?;
    let plan = read_json::<PlanFile>(plan)?.into_plan(&s)?;
    let r = mcp_check(&s, &mu0, x, &plan, &ctx.entropy_config(c))?;
    let svg = margins_svg("mcp margins", &r);
    Ok(Outcome::check(
        json!({"K": c.k, "N": c.n, "x0": x0, "report": report_json(&r)?, "passed": r.passed}),
        r.passed,
    )
    .with_svg(svg))
}

fn check_cd1(
    ctx: &Ctx,
    space: &Path,
    plan: &Path,
    mu0: Option<&str>,
    mu1: Option<&str>,
    c: Curvature,
) -> Result<Outcome> {
    let s = load_space(space)?;
    let plan = read_json::<PlanFile>(plan)?.into_plan(&s)?;
    let endpoint = |arg: Option<&str>, t: f64| match arg {
        Some(a) => parse_measure(a, &s),
        None => pushforward_at(&plan, t, &s, ctx.tol.time_snap),
    };
    let (a, b) = (endpoint(mu0, 0.0)?, endpoint(mu1, 1.0)?);
    let r = cd1_entropy_check(&s, &plan, &a, &b, &ctx.entropy_config(c))?;
    let svg = margins_svg("entropy margins", &r);
    Ok(Outcome::check(
        json!({"K": c.k, "N": c.n, "report": report_json(&r)?, "passed": r.passed}),
        r.passed,
    )
    .with_svg(svg))
}

fn condition_json(s: &FiniteMMSpace, r: &ConditionReport) -> Result<(Value, String)> {
    let mut table = vec![format!(
        "{:>4}  {:<10}  {:>8}  {:>10}  {:>14}  status",
        "ray", "rep", "length", "mass", "worst"
    )];
    let rays: Vec<Value> = r
        .rays
        .iter()
        .map(|rc| {
            let (passed, worst) = rc
                .report
                .as_ref()
                .map_or((true, f64::INFINITY), |x| (x.passed, x.worst_margin));
            table.push(format!(
                "{:>4}  {:<10}  {:>8.4}  {:>10.6}  {:>14.6e}  {}",
                rc.ray,
                s.label(rc.representative),
                rc.length,
                rc.quotient_mass,
                worst,
                if rc.report.is_none() {
                    "skipped"
                } else if passed {
                    "pass"
                } else {
                    "FAIL"
                }
            ));
            json!({
                "ray": rc.ray,
                "representative": s.label(rc.representative),
                "members": label_list(s, &rc.members),
                "length": rc.length,
                "quotient_mass": rc.quotient_mass,
                "passed": passed,
                "worst_margin": Ext(worst),
                "note": rc.note,
            })
        })
        .collect();
    let value = json!({
        "report": report_json(&r.report)?,
        "rays": rays,
        "branching_mass": r.branching_mass,
        "reconstruction_error": r.reconstruction_error,
        "passed": r.report.passed,
    });
    Ok((value, table.join("\n")))
}

fn check_cd1u(
    ctx: &Ctx,
    space: &Path,
    u: &str,
    ray_tol: Option<f64>,
    c: Curvature,
) -> Result<Outcome> {
    let s = load_space(space)?;
    let u = parse_potential(u, &s)?;
    if !(c.n > 1.0) {
        return Err(Error::Domain(format!("condition needs N > 1, got {}", c.n)));
    }
    let opts = ctx.condition_options(ray_tol);
    let loc = localize(&s, &u, ray_tol, ctx.g.grid)?;
    let r = condition_from_localization(&s, &loc, c.k, c.n, &opts)?;
    let (mut out, table) = condition_json(&s, &r)?;
    out["K"] = json!(c.k);
    out["N"] = json!(c.n);
    let passed = r.report.passed;
    if ctx.g.oracle {
        let mut fd = Vec::new();
        for ray in loc.needle_rays() {
            let d = fd_concavity_defect(loc.needle(ray).unwrap(), c.k, c.n, &ctx.oracle)?;
            let agree = d.violated
                != r.rays
                    .iter()
                    .find(|x| x.ray == ray)
                    .and_then(|x| x.report.as_ref())
                    .is_none_or(|x| x.passed);
            fd.push(json!({"ray": ray, "defect": d, "agree": agree}));
        }
        out["oracle"] = Value::Array(fd);
    }
    let series: Vec<Series> = loc
        .needle_rays()
        .into_iter()
        .map(|r| needle_series(format!("ray {r}"), loc.needle(r).unwrap(), 200))
        .collect();
    Ok(Outcome::check(out, passed)
        .with_svg(line_chart("needle densities", &series))
        .with_table(table))
}

/// `count` random windows admissible for needles of length at least `len`.
pub fn random_windows(len: f64, count: usize, seed: u64) -> Vec<Window> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let r0 = rng.gen_range(0.0..0.8) * len;
            let r1 = r0 + rng.gen_range(0.05..1.0) * (0.95 * len - r0);
            let l1 = rng.gen_range(0.05..1.0) * (len - r1);
            let l0 = rng.gen_range(0.05..1.0) * (len - r0);
            Window { r0, r1, l0, l1 }
        })
        .collect()
}

fn firstclaim_report(
    ctx: &Ctx,
    loc: &Localization,
    c: Curvature,
    windows: &[Window],
) -> Result<CheckReport> {
    let needles: Vec<(usize, &Needle)> = loc
        .needle_rays()
        .into_iter()
        .map(|r| (r, loc.needle(r).unwrap()))
        .collect();
    if needles.is_empty() {
        return Err(Error::Input("the potential has no needles".into()));
    }
    let mut parts = Vec::new();
    for (i, w) in windows.iter().enumerate() {
        parts.push((
            i as f64,
            firstclaim_per_ray(&needles, c.k, c.n, w, &ctx.t_samples(), &ctx.tol)?,
        ));
    }
    Ok(CheckReport::merge(parts, "window", 5))
}

fn min_needle_length(loc: &Localization) -> f64 {
    loc.needle_rays()
        .into_iter()
        .map(|r| loc.needle(r).unwrap().length())
        .fold(f64::INFINITY, f64::min)
}

#[allow(clippy::too_many_arguments)]
fn check_firstclaim(
    ctx: &Ctx,
    space: &Path,
    u: &str,
    c: Curvature,
    window: [Option<f64>; 4],
    count: usize,
) -> Result<Outcome> {
    let s = load_space(space)?;
    let u = parse_potential(u, &s)?;
    let loc = localize(&s, &u, None, ctx.g.grid)?;
    let windows = match window {
        [Some(r0), Some(r1), Some(l0), Some(l1)] => vec![Window { r0, r1, l0, l1 }],
        [None, None, None, None] => random_windows(min_needle_length(&loc), count, ctx.g.seed),
        _ => {
            return Err(Error::Input(
                "give all of --r0 --r1 --l0 --l1 or none".into(),
            ))
        }
    };
    let r = firstclaim_report(ctx, &loc, c, &windows)?;
    let svg = margins_svg("two-interval margins", &r);
    Ok(Outcome::check(
        json!({"K": c.k, "N": c.n, "windows": windows.len(), "seed": ctx.g.seed, "report": report_json(&r)?, "passed": r.passed}),
        r.passed,
    )
    .with_svg(svg))
}

fn glue_json(ctx: &Ctx, g: &GluedPlan, r: &CheckReport) -> Result<Value> {
    let s = &g.lift.space;
    let ts = &g.t_samples;
    let mut marginals = Vec::new();
    let mut pushed = Vec::new();
    for &t in ts {
        let mu = g.pushforward(t)?;
        marginals.push(json!({"t": t, "atoms": atoms_json(s, &mu)}));
        pushed.push(mu);
    }
    let mut identity = Vec::new();
    let mut worst = 0.0f64;
    for i in 0..ts.len() {
        for j in i + 1..ts.len() {
            let (w, _) = wasserstein_p(s, &pushed[i], &pushed[j], 1.0)?;
            let expected = (ts[j] - ts[i]) * g.w1;
            worst = worst.max((w - expected).abs());
            identity.push(json!({"s": ts[i], "t": ts[j], "w1": w, "expected": expected}));
        }
    }
    let rays: Vec<Value> = g
        .ray_plans
        .iter()
        .map(|p| {
            let lr = &g.lift.rays[p.ray];
            json!({
                "ray": p.ray,
                "q0": p.q0,
                "pairs": p.pairs.iter().map(|q| json!({
                    "from": s.label(lr.point(lr.slots[q.source])),
                    "to": s.label(lr.point(lr.slots[q.target])),
                    "mass": q.mass,
                })).collect::<Vec<_>>(),
            })
        })
        .collect();
    let cm = is_cyclically_monotone(&g.plan.endpoint_coupling().support(), s, 4);
    let mixture = ts
        .iter()
        .map(|&t| g.mixture_error(t))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(json!({
        "w1": g.w1,
        "u": point_values(s, &g.lift.potential),
        "lattice_denominator": g.lift.denominator,
        "lifted_points": s.n(),
        "rays": rays,
        "plan": PlanFile::from_plan(&g.plan, s),
        "marginals": marginals,
        "geodesic_identity": identity,
        "geodesic_identity_error": worst,
        "geodesic_identity_ok": worst <= 1e-8 * g.w1.max(1.0),
        "mixture_error": mixture,
        "cyclically_monotone": cm,
        "report": report_json(r)?,
        "passed": r.passed,
        "tolerance": ctx.tol.discrete_check,
    }))
}

fn glue_cmd(
    ctx: &Ctx,
    space: &Path,
    mu0: &str,
    mu1: &str,
    u: Option<&str>,
    c: Curvature,
) -> Result<Outcome> {
    let s = load_space(space)?;
    let (a, b) = (parse_measure(mu0, &s)?, parse_measure(mu1, &s)?);
    let u = u.map(|u| parse_potential(u, &s)).transpose()?;
    let opts = GlueOptions {
        t_samples: ctx.t_samples(),
        ray_tol: None,
        tol: ctx.tol,
    };
    let g = glue(&s, u.as_deref(), &a, &b, &opts)?;
    let r = verify_glued_cd1(&g, c.k, c.n, &ctx.nprimes(c.n), &ctx.tol)?;
    let out = glue_json(ctx, &g, &r)?;
    let ok = r.passed && out["geodesic_identity_ok"] == json!(true);
    let series: Vec<Series> = g
        .t_samples
        .iter()
        .map(|&t| {
            let mu = g
                .pushforward(t)
                .unwrap_or_else(|_| DiscreteMeasure::zeros(g.lift.space.n()));
            Series {
                name: format!("t = {t}"),
                points: (0..mu.len()).map(|x| (x as f64, mu.mass(x))).collect(),
            }
        })
        .collect();
    Ok(Outcome::check(out, ok).with_svg(line_chart("mu_t by lifted index", &series)))
}

fn report_cmd(ctx: &Ctx, space: &Path, u: &str, c: Curvature, count: usize) -> Result<Outcome> {
    let s = load_space(space)?;
    let violations = validate_space(&s, ctx.tol.metric * s.diameter().max(1.0));
    let u = parse_potential(u, &s)?;
    let loc = localize(&s, &u, None, ctx.g.grid)?;
    let decomposition = decomposition_json(&s, &loc);
    let cond = condition_from_localization(&s, &loc, c.k, c.n, &ctx.condition_options(None))?;
    let (cond_json, table) = condition_json(&s, &cond)?;
    let first = if loc.needle_rays().is_empty() {
        None
    } else {
        Some(firstclaim_report(
            ctx,
            &loc,
            c,
            &random_windows(min_needle_length(&loc), count, ctx.g.seed),
        )?)
    };
    let first_passed = first.as_ref().is_none_or(|r| r.passed);
    let passed = violations.is_empty() && cond.report.passed && first_passed;
    let out = json!({
        "space": {"points": s.n(), "diameter": s.diameter(), "violations": violations},
        "decomposition": decomposition,
        "cd1u": cond_json,
        "firstclaim": first.as_ref().map(report_json).transpose()?,
        "K": c.k,
        "N": c.n,
        "passed": passed,
    });
    let series: Vec<Series> = loc
        .needle_rays()
        .into_iter()
        .map(|r| needle_series(format!("ray {r}"), loc.needle(r).unwrap(), 200))
        .collect();
    Ok(Outcome::check(out, passed)
        .with_svg(line_chart("needle densities", &series))
        .with_table(table))
}

/// Runs one parsed command.
pub fn execute(cli: &Cli) -> Result<Outcome> {
    let mut tol = Tolerances::default();
    if let Some(t) = cli.global.tol {
        tol.discrete_check = t;
        tol.needle_check = t;
    }
    let ctx = Ctx {
        g: &cli.global,
        tol,
        oracle: OracleConfig::default(),
    };
    match &cli.command {
        Command::Coeffs {
            t,
            curvature,
            theta,
        } => coeffs(&ctx, *t, *curvature, *theta),
        Command::Entropy { space, mu, n } => entropy(&ctx, space, mu, *n),
        Command::Wasserstein { space, mu0, mu1, p } => wasserstein(&ctx, space, mu0, mu1, *p),
        Command::Potential { space, mu0, mu1 } => potential(&ctx, space, mu0, mu1),
        Command::Decompose { space, u, ray_tol } => decompose(&ctx, space, u, *ray_tol),
        Command::CheckNeedle {
            needle,
            model,
            length,
            curvature,
        } => check_needle(&ctx, needle.as_deref(), *model, *length, *curvature),
        Command::CheckMcp {
            space,
            mu0,
            x0,
            plan,
            curvature,
        } => check_mcp(&ctx, space, mu0, x0, plan, *curvature),
        Command::CheckCd1 {
            space,
            plan,
            mu0,
            mu1,
            curvature,
        } => check_cd1(
            &ctx,
            space,
            plan,
            mu0.as_deref(),
            mu1.as_deref(),
            *curvature,
        ),
        Command::CheckCd1u {
            space,
            u,
            ray_tol,
            curvature,
        } => check_cd1u(&ctx, space, u, *ray_tol, *curvature),
        Command::CheckFirstclaim {
            space,
            u,
            curvature,
            r0,
            r1,
            l0,
            l1,
            windows,
        } => check_firstclaim(&ctx, space, u, *curvature, [*r0, *r1, *l0, *l1], *windows),
        Command::Glue {
            space,
            mu0,
            mu1,
            u,
            curvature,
        } => glue_cmd(&ctx, space, mu0, mu1, u.as_deref(), *curvature),
        Command::Report {
            space,
            u,
            curvature,
            windows,
        } => report_cmd(&ctx, space, u, *curvature, *windows),
    }
}

/// Parses `args`, runs the command and writes its artifacts. Returns the
/// exit code: 0 passed or done, 1 check failed, 2 input or usage error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = match execute(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let text = match to_json(&outcome.json) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let written = match &cli.global.out {
        Some(p) => std::fs::write(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return 2;
    }
    if let (Some(path), Some(svg)) = (&cli.global.svg, &outcome.svg) {
        if let Err(e) = std::fs::write(path, svg) {
            eprintln!("error: {e}");
            return 2;
        }
    }
    if cli.global.table {
        if let Some(t) = &outcome.table {
            eprintln!("{t}");
        }
    }
    match outcome.passed {
        Some(false) => 1,
        _ => 0,
    }
}
