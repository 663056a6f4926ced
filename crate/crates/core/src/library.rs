//! Closed-form soliton examples with their expected verdicts.

use std::collections::BTreeMap;
use std::fmt;

use crate::chart::{Chart, Constraint, Domain, Factor, FactorKind, ProductStructure};
use crate::check::Check;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::qspec::{bach_tensor, QSpec};
use crate::report::Verdict;
use crate::soliton::SolitonData;

/// Every name accepted by [`build`].
pub const NAMES: [&str; 6] = [
    "gaussian",
    "round_sphere",
    "cylinder_shrinker",
    "bach_product",
    "rigid_generic",
    "hyperbolic_expander",
];

/// String-valued example parameters with typed accessors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Params(BTreeMap<String, String>);

impl Params {
    pub fn new() -> Params {
        Params::default()
    }

    pub fn set(mut self, key: &str, value: impl fmt::Display) -> Params {
        self.0.insert(key.to_string(), value.to_string());
        self
    }

    pub fn insert(&mut self, key: &str, value: impl fmt::Display) {
        self.0.insert(key.to_string(), value.to_string());
    }

    /// Parses `key=value`.
    pub fn insert_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::InvalidParam(format!("expected key=value, got '{pair}'")))?;
        self.insert(k.trim(), v.trim());
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &String)> {
        self.0.iter()
    }

    fn reject_unknown(&self, allowed: &[&str]) -> Result<()> {
        match self.0.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(Error::InvalidParam(format!(
                "unknown parameter '{k}' (allowed: {})",
                allowed.join(", ")
            ))),
            None => Ok(()),
        }
    }

    pub fn f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::InvalidParam(format!("{key}={v} is not a finite number"))),
        }
    }

    pub fn usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::InvalidParam(format!("{key}={v} is not a non-negative integer"))),
        }
    }

    pub fn string(&self, key: &str, default: &str) -> String {
        self.0.get(key).cloned().unwrap_or_else(|| default.to_string())
    }

    /// Comma-separated numbers.
    pub fn vector(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.0.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidParam(format!("{key}: '{t}' is not a number")))
                })
                .collect(),
        }
    }
}

/// A built example: the soliton under test and what every check should say.
#[derive(Clone, Debug)]
pub struct Example {
    pub name: String,
    /// Parameters with defaults filled in.
    pub params: Params,
    pub soliton: SolitonData,
    pub expected: BTreeMap<Check, Verdict>,
}

impl Example {
    pub fn chart(&self) -> &Chart {
        &self.soliton.chart
    }

    pub fn expected(&self, check: Check) -> Option<Verdict> {
        self.expected.get(&check).copied()
    }
}

/// Base factor `N` of a rigid product `N × ℝᵏ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RigidBase {
    Point,
    Sphere { dim: usize, radius: f64 },
    Hyperbolic { dim: usize, radius: f64 },
}

impl RigidBase {
    fn dim(self) -> usize {
        match self {
            RigidBase::Point => 0,
            RigidBase::Sphere { dim, .. } | RigidBase::Hyperbolic { dim, .. } => dim,
        }
    }
}

fn names(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|i| format!("{prefix}{i}")).collect()
}

/// `4a²/(1 ± |u|²)²` over the given coordinate indices.
fn space_form_factor(vars: std::ops::Range<usize>, radius: f64, sign: f64) -> Expr {
    let r2 = Expr::sum_of_squares(vars);
    let denom = if sign > 0.0 {
        Expr::num(1.0) + r2
    } else {
        Expr::num(1.0) - r2
    };
    Expr::num(4.0 * radius * radius) / denom.powf(2.0)
}

/// Chart of `N × ℝᵏ` with coordinates `u…` on `N` and `x…` on the flat factor.
pub fn product_chart(label: &str, base: RigidBase, k: usize) -> Result<Chart> {
    let m = base.dim();
    let n = m + k;
    if n == 0 {
        return Err(Error::InvalidParam("product of dimension 0".into()));
    }
    let mut coords = names("u", m);
    coords.extend(names("x", k));
    let block = match base {
        RigidBase::Point => None,
        RigidBase::Sphere { radius, .. } => Some(space_form_factor(0..m, radius, 1.0)),
        RigidBase::Hyperbolic { radius, .. } => Some(space_form_factor(0..m, radius, -1.0)),
    };
    let mut entries = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            entries.push(match (i == j, i < m) {
                (false, _) => Expr::num(0.0),
                (true, true) => block.clone().expect("base block"),
                (true, false) => Expr::num(1.0),
            });
        }
    }
    let mut factors = Vec::new();
    let mut sample_box = Vec::with_capacity(n);
    let mut domain = Domain::all();
    match base {
        RigidBase::Point => {}
        RigidBase::Sphere { radius, .. } => {
            factors.push(Factor {
                kind: FactorKind::Sphere { radius },
                start: 0,
                dim: m,
            });
            sample_box.extend(std::iter::repeat_n((-1.5, 1.5), m));
        }
        RigidBase::Hyperbolic { radius, .. } => {
            factors.push(Factor {
                kind: FactorKind::Hyperbolic { radius },
                start: 0,
                dim: m,
            });
            domain.constraints.push(Constraint::Ball {
                coords: (0..m).collect(),
                radius: 1.0,
            });
            let h = 0.9 / (m as f64).sqrt();
            sample_box.extend(std::iter::repeat_n((-h, h), m));
        }
    }
    if k > 0 {
        factors.push(Factor {
            kind: FactorKind::Flat,
            start: m,
            dim: k,
        });
        sample_box.extend(std::iter::repeat_n((-3.0, 3.0), k));
    }
    Ok(Chart::new(label, coords, entries)?
        .with_domain(domain)
        .with_sample_box(sample_box)
        .with_anchor(vec![0.0; n])
        .with_structure(ProductStructure { factors }))
}

/// Rigid soliton on `N × ℝᵏ` with `f = Λ/2 |x|² + L·x + b`.
pub fn rigid_factory(
    base: RigidBase,
    k: usize,
    big_lambda: f64,
    linear: &[f64],
    offset: f64,
    q: QSpec,
    lambda: f64,
) -> Result<SolitonData> {
    if k == 0 {
        return Err(Error::InvalidParam("rigid products need k >= 1".into()));
    }
    if !linear.is_empty() && linear.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: linear.len(),
        });
    }
    let chart = product_chart("rigid", base, k)?;
    let m = base.dim();
    let mut f = big_lambda / 2.0 * Expr::sum_of_squares(m..m + k);
    for (i, &l) in linear.iter().enumerate() {
        if l != 0.0 {
            f = f + l * Expr::var(m + i);
        }
    }
    f = f + offset;
    Ok(SolitonData::new(chart, f, lambda, q)?.with_big_lambda(big_lambda))
}

fn table(entries: &[(Check, Verdict)]) -> BTreeMap<Check, Verdict> {
    let mut t: BTreeMap<Check, Verdict> = Check::ALL.iter().map(|&c| (c, Verdict::Inapplicable)).collect();
    for &(c, v) in entries {
        t.insert(c, v);
    }
    t
}

use Check as C;
use Verdict::{Fail, Pass};

const IDENTITIES: [Check; 6] = [
    C::SolitonResidual,
    C::HamiltonScalar,
    C::HamiltonTensor,
    C::FLambda,
    C::LaplacianTrace,
    C::Rigidity,
];

/// Verdicts of a non-compact shrinking rigid example with `F ≤ 0`.
fn shrinking_rigid_table(q_flat: bool, half: bool, f_nonpositive: bool) -> BTreeMap<Check, Verdict> {
    let mut t = table(&[]);
    for c in IDENTITIES {
        t.insert(c, Pass);
    }
    for c in [
        C::TraceBounds,
        C::EvolutionIdentities,
        C::ShapeOperator,
        C::Coarea,
        C::UpperVolume,
        C::LowerVolume,
    ] {
        t.insert(c, Pass);
    }
    if q_flat {
        t.insert(C::FlatnessHypotheses, Pass);
    }
    if f_nonpositive {
        t.insert(C::GrowthBounds, Pass);
        t.insert(C::LowerBound, Pass);
        if half {
            t.insert(C::OmoriYau, Pass);
        }
    }
    t
}

fn gaussian(p: &Params) -> Result<Example> {
    p.reject_unknown(&["dim", "lambda"])?;
    let n = p.usize("dim", 2)?;
    let lambda = p.f64("lambda", 0.5)?;
    if n == 0 || lambda <= 0.0 {
        return Err(Error::InvalidParam("gaussian needs dim >= 1 and lambda > 0".into()));
    }
    let s = rigid_factory(RigidBase::Point, n, lambda, &[], 0.0, QSpec::Zero, lambda)?;
    let s = relabel(s, "gaussian");
    Ok(Example {
        name: "gaussian".into(),
        params: Params::new().set("dim", n).set("lambda", lambda),
        soliton: s,
        expected: shrinking_rigid_table(true, lambda == 0.5, true),
    })
}

fn relabel(mut s: SolitonData, label: &str) -> SolitonData {
    s.label = label.to_string();
    let chart = (*s.chart).clone().with_label(label);
    s.chart = std::sync::Arc::new(chart);
    s
}

fn cylinder(p: &Params) -> Result<Example> {
    p.reject_unknown(&["k", "a"])?;
    let k = p.usize("k", 2)?;
    let a = p.f64("a", 1.0)?;
    let base = RigidBase::Sphere {
        dim: 2,
        radius: std::f64::consts::SQRT_2,
    };
    let s = rigid_factory(base, k, 0.5, &[], 0.0, QSpec::Ricci, 0.5)?.with_normalization(a);
    Ok(Example {
        name: "cylinder_shrinker".into(),
        params: Params::new().set("k", k).set("a", a),
        soliton: relabel(s, "cylinder_shrinker"),
        expected: shrinking_rigid_table(false, true, a >= 0.0),
    })
}

fn rigid_generic(p: &Params) -> Result<Example> {
    p.reject_unknown(&["k", "Lambda", "L", "b"])?;
    let k = p.usize("k", 2)?;
    let big = p.f64("Lambda", 0.5)?;
    let mut default_l = vec![0.0; k.max(1)];
    default_l[0] = 1.0;
    let l = p.vector("L", &default_l)?;
    let b = p.f64("b", 1.0)?;
    // Einstein base S²(R) with Ric = Λg.
    let base = RigidBase::Sphere {
        dim: 2,
        radius: (1.0 / big).sqrt(),
    };
    let s = rigid_factory(base, k, big, &l, b, QSpec::Ricci, big)?;
    let l2: f64 = l.iter().map(|v| v * v).sum();
    let f_nonpositive = 0.5 * l2 - big * b <= 0.0;
    Ok(Example {
        name: "rigid_generic".into(),
        params: Params::new()
            .set("k", k)
            .set("Lambda", big)
            .set("L", l.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(","))
            .set("b", b),
        soliton: relabel(s, "rigid_generic"),
        expected: shrinking_rigid_table(false, big == 0.5, f_nonpositive),
    })
}

/// `c²` of the Bach tensor `B = −c² g_N + c² g_ℝ²` on a product chart.
pub fn bach_constant(chart: &Chart) -> Result<f64> {
    let b = bach_tensor(chart, chart.anchor())?;
    let g = chart.metric_at(chart.anchor())?;
    Ok(b.at2(2, 2) / g[(2, 2)])
}

fn bach_product(p: &Params) -> Result<Example> {
    p.reject_unknown(&["sign"])?;
    let sign = p.string("sign", "positive");
    let base = match sign.as_str() {
        "positive" | "+" | "1" => RigidBase::Sphere { dim: 2, radius: 1.0 },
        "negative" | "-" | "-1" => RigidBase::Hyperbolic { dim: 2, radius: 1.0 },
        other => {
            return Err(Error::InvalidParam(format!(
                "sign must be positive or negative, got '{other}'"
            )))
        }
    };
    let c2 = bach_constant(&product_chart("bach_product", base, 2)?)?;
    let s = rigid_factory(base, 2, c2, &[], 0.0, QSpec::Bach, c2 / 2.0)?;
    Ok(Example {
        name: "bach_product".into(),
        params: Params::new().set(
            "sign",
            if matches!(base, RigidBase::Sphere { .. }) {
                "positive"
            } else {
                "negative"
            },
        ),
        soliton: relabel(s, "bach_product"),
        expected: table(&[
            (C::SolitonResidual, Pass),
            (C::HamiltonScalar, Fail),
            (C::HamiltonTensor, Fail),
            (C::FLambda, Pass),
            (C::Rigidity, Pass),
            (C::EvolutionIdentities, Fail),
            (C::ShapeOperator, Pass),
        ]),
    })
}

fn round_sphere(p: &Params) -> Result<Example> {
    p.reject_unknown(&["dim", "radius", "rho"])?;
    let n = p.usize("dim", 2)?;
    let a = p.f64("radius", std::f64::consts::SQRT_2)?;
    if n < 2 || a <= 0.0 {
        return Err(Error::InvalidParam("round_sphere needs dim >= 2 and radius > 0".into()));
    }
    let nf = n as f64;
    let (q, lambda, params) = match p.0.get("rho") {
        None => (QSpec::Ricci, (nf - 1.0) / (a * a), Params::new()),
        Some(_) => {
            let rho = p.f64("rho", 0.0)?;
            (
                QSpec::Bourguignon { rho },
                (nf - 1.0) * (1.0 - rho * nf) / (a * a),
                Params::new().set("rho", rho),
            )
        }
    };
    let chart = Chart::conformal("round_sphere", names("u", n), space_form_factor(0..n, a, 1.0))?
        .with_sample_box(vec![(-1.5, 1.5); n])
        .with_structure(ProductStructure {
            factors: vec![Factor {
                kind: FactorKind::Sphere { radius: a },
                start: 0,
                dim: n,
            }],
        });
    let s = SolitonData::new(chart, Expr::num(0.0), lambda, q)?;
    let mut expected = table(&[
        (C::SolitonResidual, Pass),
        (C::HamiltonScalar, Pass),
        (C::HamiltonTensor, Pass),
        (C::FLambda, Pass),
        (C::LaplacianTrace, Pass),
        (C::Rigidity, Pass),
        (C::CompactIntegral, Pass),
        (C::EvolutionIdentities, Pass),
    ]);
    if lambda != 0.0 {
        expected.insert(C::TraceBounds, Pass);
    } else {
        expected.insert(C::FlatnessHypotheses, Pass);
    }
    if lambda > 0.0 {
        expected.insert(C::GrowthBounds, Pass);
    }
    Ok(Example {
        name: "round_sphere".into(),
        params: params.set("dim", n).set("radius", a),
        soliton: s,
        expected,
    })
}

fn hyperbolic_expander(p: &Params) -> Result<Example> {
    p.reject_unknown(&["dim"])?;
    let n = p.usize("dim", 2)?;
    if n < 2 {
        return Err(Error::InvalidParam("hyperbolic_expander needs dim >= 2".into()));
    }
    let h = 0.9 / (n as f64).sqrt();
    let chart = Chart::conformal("hyperbolic_expander", names("u", n), space_form_factor(0..n, 1.0, -1.0))?
        .with_domain(Domain {
            constraints: vec![Constraint::Ball {
                coords: (0..n).collect(),
                radius: 1.0,
            }],
        })
        .with_sample_box(vec![(-h, h); n])
        .with_structure(ProductStructure {
            factors: vec![Factor {
                kind: FactorKind::Hyperbolic { radius: 1.0 },
                start: 0,
                dim: n,
            }],
        });
    let s = SolitonData::new(chart, Expr::num(0.0), -(n as f64 - 1.0), QSpec::Ricci)?;
    Ok(Example {
        name: "hyperbolic_expander".into(),
        params: Params::new().set("dim", n),
        soliton: s,
        expected: table(&[
            (C::SolitonResidual, Pass),
            (C::HamiltonScalar, Pass),
            (C::HamiltonTensor, Pass),
            (C::FLambda, Pass),
            (C::LaplacianTrace, Pass),
            (C::Rigidity, Pass),
            (C::TraceBounds, Pass),
            (C::EvolutionIdentities, Pass),
        ]),
    })
}

/// Builds a named example; unknown parameters are rejected.
pub fn build(name: &str, params: &Params) -> Result<Example> {
    match name {
        "gaussian" => gaussian(params),
        "round_sphere" => round_sphere(params),
        "cylinder_shrinker" => cylinder(params),
        "bach_product" => bach_product(params),
        "rigid_generic" => rigid_generic(params),
        "hyperbolic_expander" => hyperbolic_expander(params),
        other => Err(Error::UnknownExample(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::curvature_at;

    #[test]
    fn every_name_builds_with_defaults() {
        for name in NAMES {
            let ex = build(name, &Params::new()).unwrap();
            assert_eq!(ex.expected.len(), 17, "{name}");
            assert!(ex.chart().contains(ex.chart().anchor()), "{name}");
        }
        assert!(matches!(build("nope", &Params::new()), Err(Error::UnknownExample(_))));
        assert!(matches!(
            build("gaussian", &Params::new().set("radius", 1)),
            Err(Error::InvalidParam(_))
        ));
    }

    #[test]
    fn cylinder_curvature_blocks() {
        let ex = build("cylinder_shrinker", &Params::new()).unwrap();
        let b = curvature_at(ex.chart(), &[0.3, -0.2, 1.0, 2.0]).unwrap();
        assert!((b.scalar - 1.0).abs() < 1e-12);
        let g = ex.chart().metric_at(&[0.3, -0.2, 1.0, 2.0]).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i < 2 && j < 2 { 0.5 * g[(i, j)] } else { 0.0 };
                assert!((b.ricci.at2(i, j) - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bach_constant_matches_for_both_signs() {
        for sign in ["positive", "negative"] {
            let ex = build("bach_product", &Params::new().set("sign", sign)).unwrap();
            let c2 = 2.0 * ex.soliton.lambda;
            assert!((c2 - 1.0 / 6.0).abs() < 1e-9, "{sign}: {c2}");
            assert_eq!(ex.soliton.big_lambda, Some(c2));
        }
    }

    #[test]
    fn rigid_point_base_is_gaussian() {
        let s = rigid_factory(RigidBase::Point, 3, 0.5, &[], 0.0, QSpec::Zero, 0.5).unwrap();
        let g = build("gaussian", &Params::new().set("dim", 3)).unwrap().soliton;
        for p in [[0.1, 0.2, 0.3], [1.0, -2.0, 0.5]] {
            assert_eq!(s.potential(&p).unwrap(), g.potential(&p).unwrap());
        }
    }
}
