//! Line-oriented text format for charts, solitons and flow tensors.
//!
//! ```text
//! chart = cylinder
//! coords = u1 u2 x1 x2
//! domain = interval x1 -5.0 5.0
//! domain = ball u1 u2 3.0
//! sample u1 = -1.0 1.0
//! anchor = 0.0 0.0 0.0 0.0
//! derivatives = exact
//! factor = sphere radius=1.4142135623730951 u1 u2
//! factor = flat x1 x2
//! g u1 u1 = 8.0 / (1.0 + u1^2 + u2^2)^2
//! f = (x1^2 + x2^2) / 4.0 + 1.0
//! lambda = 0.5
//! q = ricci
//! expect soliton_residual = pass
//! ```
//!
//! Metric and `q = custom { ... }` entries that are omitted are zero.
//! Blank lines and text after `#` are ignored.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::chart::{
    upper_index, Chart, Constraint, Domain, Factor, FactorKind, JetRegime, MetricSource, ProductStructure,
};
use crate::check::Check;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fields::ScalarField;
use crate::library::{Example, Params};
use crate::qspec::QSpec;
use crate::report::Verdict;
use crate::soliton::SolitonData;

const RESERVED: [&str; 10] = ["pi", "e", "exp", "log", "sin", "cos", "sinh", "cosh", "sqrt", "pow"];

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn number(line: usize, text: &str) -> Result<f64> {
    text.parse::<f64>()
        .map_err(|_| err(line, format!("expected a number, got '{text}'")))
}

fn coord_index(line: usize, coords: &[String], name: &str) -> Result<usize> {
    coords
        .iter()
        .position(|c| c == name)
        .ok_or_else(|| err(line, format!("unknown coordinate '{name}'")))
}

fn expression(line: usize, text: &str, coords: &[String]) -> Result<Expr> {
    Expr::parse(text, coords).map_err(|m| err(line, m))
}

/// Parses the right-hand side of a `q = ...` line. Custom tensors need their
/// component lines, which only [`parse_example`] supplies.
pub fn parse_qspec(text: &str) -> Result<QSpec> {
    parse_qspec_line(0, text)
}

fn parse_qspec_line(line: usize, text: &str) -> Result<QSpec> {
    let mut words = text.split_whitespace();
    let head = words.next().ok_or_else(|| err(line, "empty q specification"))?;
    let rest: Vec<&str> = words.collect();
    let spec = match head {
        "zero" => QSpec::Zero,
        "ricci" => QSpec::Ricci,
        "bach" => QSpec::Bach,
        "bourguignon" => {
            let rho = match rest.as_slice() {
                [arg] => arg
                    .strip_prefix("rho=")
                    .ok_or_else(|| err(line, "bourguignon needs rho=<value>"))?,
                _ => return Err(err(line, "bourguignon needs exactly rho=<value>")),
            };
            return Ok(QSpec::Bourguignon {
                rho: number(line, rho)?,
            });
        }
        "custom" => return Err(err(line, "custom q needs a component block")),
        other => return Err(err(line, format!("unknown q '{other}'"))),
    };
    if !rest.is_empty() {
        return Err(err(line, format!("unexpected arguments after '{head}'")));
    }
    Ok(spec)
}

/// Renders `q` as the lines that [`parse_example`] reads back.
pub fn render_qspec(q: &QSpec, coords: &[String]) -> String {
    match q {
        QSpec::Custom(entries) => {
            let mut out = String::from("q = custom {\n");
            write_upper(&mut out, "  ", entries, coords);
            out.push_str("}\n");
            out
        }
        other => format!("q = {other}\n"),
    }
}

fn write_upper(out: &mut String, prefix: &str, entries: &[Expr], coords: &[String]) {
    let n = coords.len();
    for i in 0..n {
        for j in i..n {
            let e = &entries[upper_index(n, i, j)];
            if !e.is_zero() {
                let _ = writeln!(out, "{prefix}{} {} = {}", coords[i], coords[j], e.render(coords));
            }
        }
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(" ")
}

fn factor_line(f: &Factor, coords: &[String]) -> String {
    let kind = match f.kind {
        FactorKind::Flat => "flat".to_string(),
        FactorKind::Sphere { radius } => format!("sphere radius={radius:?}"),
        FactorKind::Hyperbolic { radius } => format!("hyperbolic radius={radius:?}"),
    };
    let names = coords[f.start..f.start + f.dim].join(" ");
    format!("factor = {kind} {names}\n")
}

/// Writes an example in the text format. Fails when the metric or the
/// potential is only known pointwise.
pub fn export_example(ex: &Example) -> Result<String> {
    let s = &ex.soliton;
    let chart = &*s.chart;
    let coords = chart.coords();
    let MetricSource::Expressions(entries) = chart.metric_source() else {
        return Err(Error::InvalidParam("metric has no closed form to export".into()));
    };
    let ScalarField::Expr(f) = &s.f else {
        return Err(Error::InvalidParam("potential has no closed form to export".into()));
    };
    let mut out = String::new();
    let _ = writeln!(out, "chart = {}", chart.label());
    if s.label != chart.label() {
        let _ = writeln!(out, "label = {}", s.label);
    }
    let _ = writeln!(out, "coords = {}", coords.join(" "));
    for c in &chart.domain().constraints {
        match c {
            Constraint::Interval { coord, lo, hi } => {
                let _ = writeln!(out, "domain = interval {} {lo:?} {hi:?}", coords[*coord]);
            }
            Constraint::Ball { coords: cs, radius } => {
                let names: Vec<&str> = cs.iter().map(|&i| coords[i].as_str()).collect();
                let _ = writeln!(out, "domain = ball {} {radius:?}", names.join(" "));
            }
        }
    }
    for (name, (lo, hi)) in coords.iter().zip(chart.sample_box()) {
        let _ = writeln!(out, "sample {name} = {lo:?} {hi:?}");
    }
    let _ = writeln!(out, "anchor = {}", join(chart.anchor()));
    let _ = writeln!(out, "derivatives = {}", chart.regime());
    match chart.structure() {
        Some(st) => {
            for f in &st.factors {
                out.push_str(&factor_line(f, coords));
            }
        }
        None => {
            let _ = writeln!(out, "compact = {}", chart.is_compact());
        }
    }
    write_upper(&mut out, "g ", entries, coords);
    let _ = writeln!(out, "f = {}", f.render(coords));
    let _ = writeln!(out, "lambda = {:?}", s.lambda);
    if let Some(big) = s.big_lambda {
        let _ = writeln!(out, "Lambda = {big:?}");
    }
    if s.normalization != 0.0 {
        let _ = writeln!(out, "normalization = {:?}", s.normalization);
    }
    out.push_str(&render_qspec(&s.q, coords));
    for (check, verdict) in &ex.expected {
        let _ = writeln!(out, "expect {check} = {verdict}");
    }
    Ok(out)
}

#[derive(Default)]
struct Draft {
    label: Option<String>,
    chart: Option<String>,
    coords: Option<Vec<String>>,
    domain: Vec<Constraint>,
    sample: BTreeMap<usize, (f64, f64)>,
    anchor: Option<Vec<f64>>,
    derivatives: Option<JetRegime>,
    compact: Option<bool>,
    factors: Vec<Factor>,
    metric: BTreeMap<usize, Expr>,
    f: Option<Expr>,
    lambda: Option<f64>,
    big_lambda: Option<f64>,
    normalization: Option<f64>,
    q: Option<QSpec>,
    expected: BTreeMap<Check, Verdict>,
}

impl Draft {
    fn coords(&self, line: usize) -> Result<&[String]> {
        self.coords
            .as_deref()
            .ok_or_else(|| err(line, "coords must be declared first"))
    }

    fn pair(&self, line: usize, text: &str) -> Result<usize> {
        let coords = self.coords(line)?;
        match text.split_whitespace().collect::<Vec<_>>().as_slice() {
            [a, b] => Ok(upper_index(
                coords.len(),
                coord_index(line, coords, a)?,
                coord_index(line, coords, b)?,
            )),
            _ => Err(err(line, format!("expected two coordinates, got '{text}'"))),
        }
    }
}

fn set_once<T>(slot: &mut Option<T>, value: T, line: usize, key: &str) -> Result<()> {
    if slot.is_some() {
        return Err(err(line, format!("'{key}' given twice")));
    }
    *slot = Some(value);
    Ok(())
}

fn parse_factor(line: usize, text: &str, coords: &[String]) -> Result<Factor> {
    let words: Vec<&str> = text.split_whitespace().collect();
    let (kind, names) = match words.as_slice() {
        ["flat", names @ ..] => (FactorKind::Flat, names),
        [k @ ("sphere" | "hyperbolic"), r, names @ ..] => {
            let radius = number(
                line,
                r.strip_prefix("radius=")
                    .ok_or_else(|| err(line, "factor needs radius=<value>"))?,
            )?;
            if !(radius > 0.0) {
                return Err(err(line, "factor radius must be positive"));
            }
            let kind = if *k == "sphere" {
                FactorKind::Sphere { radius }
            } else {
                FactorKind::Hyperbolic { radius }
            };
            (kind, names)
        }
        _ => return Err(err(line, format!("unknown factor '{text}'"))),
    };
    if names.is_empty() {
        return Err(err(line, "factor lists no coordinates"));
    }
    let idx = names
        .iter()
        .map(|n| coord_index(line, coords, n))
        .collect::<Result<Vec<_>>>()?;
    if idx.windows(2).any(|w| w[1] != w[0] + 1) {
        return Err(err(line, "factor coordinates must be consecutive"));
    }
    Ok(Factor {
        kind,
        start: idx[0],
        dim: idx.len(),
    })
}

fn parse_domain(line: usize, text: &str, coords: &[String]) -> Result<Constraint> {
    let words: Vec<&str> = text.split_whitespace().collect();
    match words.as_slice() {
        ["interval", c, lo, hi] => {
            let (lo, hi) = (number(line, lo)?, number(line, hi)?);
            if !(lo < hi) {
                return Err(err(line, "interval needs lo < hi"));
            }
            Ok(Constraint::Interval {
                coord: coord_index(line, coords, c)?,
                lo,
                hi,
            })
        }
        ["ball", names @ .., r] if !names.is_empty() => {
            let radius = number(line, r)?;
            if !(radius > 0.0) {
                return Err(err(line, "ball radius must be positive"));
            }
            Ok(Constraint::Ball {
                coords: names
                    .iter()
                    .map(|n| coord_index(line, coords, n))
                    .collect::<Result<_>>()?,
                radius,
            })
        }
        _ => Err(err(line, format!("unknown domain constraint '{text}'"))),
    }
}

fn parse_custom_block<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    start: usize,
    coords: &[String],
) -> Result<Vec<Expr>> {
    let n = coords.len();
    let mut entries = vec![Expr::num(0.0); n * (n + 1) / 2];
    let mut seen = vec![false; entries.len()];
    for (line, raw) in lines {
        let text = strip(raw);
        if text.is_empty() {
            continue;
        }
        if text == "}" {
            return Ok(entries);
        }
        let (lhs, rhs) = text
            .split_once('=')
            .ok_or_else(|| err(line, "expected '<coord> <coord> = <expression>'"))?;
        let words: Vec<&str> = lhs.split_whitespace().collect();
        let [a, b] = words.as_slice() else {
            return Err(err(line, "expected two coordinates"));
        };
        let k = upper_index(n, coord_index(line, coords, a)?, coord_index(line, coords, b)?);
        if std::mem::replace(&mut seen[k], true) {
            return Err(err(line, format!("component {a} {b} given twice")));
        }
        entries[k] = expression(line, rhs.trim(), coords)?;
    }
    Err(err(start, "unterminated custom block"))
}

fn strip(raw: &str) -> &str {
    raw.split('#').next().unwrap_or("").trim()
}

/// Reads an example from the text format.
pub fn parse_example(text: &str) -> Result<Example> {
    let mut d = Draft::default();
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    while let Some((line, raw)) = lines.next() {
        let text = strip(raw);
        if text.is_empty() {
            continue;
        }
        let (lhs, rhs) = text
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected 'key = value', got '{text}'")))?;
        let (lhs, rhs) = (lhs.trim(), rhs.trim());
        let (key, arg) = lhs.split_once(char::is_whitespace).unwrap_or((lhs, ""));
        let arg = arg.trim();
        match key {
            "chart" => set_once(&mut d.chart, rhs.to_string(), line, key)?,
            "label" => set_once(&mut d.label, rhs.to_string(), line, key)?,
            "coords" => {
                let names: Vec<String> = rhs.split_whitespace().map(str::to_string).collect();
                if names.is_empty() {
                    return Err(err(line, "coords is empty"));
                }
                for (i, n) in names.iter().enumerate() {
                    let valid = n.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_')
                        && n.chars().all(|c| c.is_alphanumeric() || c == '_');
                    if !valid || RESERVED.contains(&n.as_str()) {
                        return Err(err(line, format!("invalid coordinate name '{n}'")));
                    }
                    if names[..i].contains(n) {
                        return Err(err(line, format!("duplicate coordinate '{n}'")));
                    }
                }
                set_once(&mut d.coords, names, line, key)?;
            }
            "domain" => {
                let c = parse_domain(line, rhs, d.coords(line)?)?;
                d.domain.push(c);
            }
            "sample" => {
                let i = coord_index(line, d.coords(line)?, arg)?;
                let v: Vec<&str> = rhs.split_whitespace().collect();
                let [lo, hi] = v.as_slice() else {
                    return Err(err(line, "sample needs two bounds"));
                };
                let (lo, hi) = (number(line, lo)?, number(line, hi)?);
                if !(lo < hi) {
                    return Err(err(line, "sample needs lo < hi"));
                }
                if d.sample.insert(i, (lo, hi)).is_some() {
                    return Err(err(line, format!("sample {arg} given twice")));
                }
            }
            "anchor" => {
                let v = rhs
                    .split_whitespace()
                    .map(|w| number(line, w))
                    .collect::<Result<Vec<_>>>()?;
                set_once(&mut d.anchor, v, line, key)?;
            }
            "derivatives" => {
                let r = match rhs {
                    "exact" => JetRegime::Exact,
                    "finite-difference" => JetRegime::FiniteDifference,
                    other => return Err(err(line, format!("unknown derivative regime '{other}'"))),
                };
                set_once(&mut d.derivatives, r, line, key)?;
            }
            "compact" => {
                let b = rhs
                    .parse::<bool>()
                    .map_err(|_| err(line, "compact must be true or false"))?;
                set_once(&mut d.compact, b, line, key)?;
            }
            "factor" => {
                let f = parse_factor(line, rhs, d.coords(line)?)?;
                d.factors.push(f);
            }
            "g" => {
                let k = d.pair(line, arg)?;
                let e = expression(line, rhs, d.coords(line)?)?;
                if d.metric.insert(k, e).is_some() {
                    return Err(err(line, format!("metric entry {arg} given twice")));
                }
            }
            "f" => {
                let e = expression(line, rhs, d.coords(line)?)?;
                set_once(&mut d.f, e, line, key)?;
            }
            "lambda" => set_once(&mut d.lambda, number(line, rhs)?, line, key)?,
            "Lambda" => set_once(&mut d.big_lambda, number(line, rhs)?, line, key)?,
            "normalization" => set_once(&mut d.normalization, number(line, rhs)?, line, key)?,
            "q" => {
                let q = if rhs == "custom {" || rhs == "custom{" {
                    let coords = d.coords(line)?.to_vec();
                    QSpec::Custom(parse_custom_block(&mut lines, line, &coords)?)
                } else {
                    parse_qspec_line(line, rhs)?
                };
                set_once(&mut d.q, q, line, key)?;
            }
            "expect" => {
                let check: Check = arg.parse().map_err(|e: Error| err(line, e.to_string()))?;
                let verdict: Verdict = rhs.parse().map_err(|_| err(line, format!("unknown verdict '{rhs}'")))?;
                if d.expected.insert(check, verdict).is_some() {
                    return Err(err(line, format!("expectation for {check} given twice")));
                }
            }
            other => return Err(err(line, format!("unknown key '{other}'"))),
        }
    }
    assemble(d, text.lines().count())
}

fn assemble(d: Draft, last: usize) -> Result<Example> {
    let missing = |what: &str| err(last, format!("missing '{what}'"));
    let coords = d.coords.ok_or_else(|| missing("coords"))?;
    let n = coords.len();
    let name = d.chart.ok_or_else(|| missing("chart"))?;
    let mut entries = vec![Expr::num(0.0); n * (n + 1) / 2];
    for (k, e) in d.metric {
        entries[k] = e;
    }
    if entries.iter().all(Expr::is_zero) {
        return Err(missing("g"));
    }
    let defaults: Vec<(f64, f64)> = vec![(-1.0, 1.0); n];
    let sample_box = (0..n)
        .map(|i| d.sample.get(&i).copied().unwrap_or(defaults[i]))
        .collect();
    let mut chart = Chart::new(name.clone(), coords, entries)?
        .with_domain(Domain { constraints: d.domain })
        .with_sample_box(sample_box);
    if let Some(a) = d.anchor {
        if a.len() != n {
            return Err(err(last, format!("anchor has {} entries, expected {n}", a.len())));
        }
        chart = chart.with_anchor(a);
    }
    if d.derivatives == Some(JetRegime::FiniteDifference) {
        chart = chart.with_finite_differences();
    }
    if !d.factors.is_empty() {
        if d.compact.is_some() {
            return Err(err(last, "'compact' is implied by the factor lines"));
        }
        let mut next = 0;
        for f in &d.factors {
            if f.start != next {
                return Err(err(last, "factors must cover the coordinates in order"));
            }
            next += f.dim;
        }
        if next != n {
            return Err(err(last, "factors must cover every coordinate"));
        }
        chart = chart.with_structure(ProductStructure { factors: d.factors });
    } else if let Some(c) = d.compact {
        chart = chart.with_compact(c);
    }
    let f = d.f.ok_or_else(|| missing("f"))?;
    let lambda = d.lambda.ok_or_else(|| missing("lambda"))?;
    let q = d.q.ok_or_else(|| missing("q"))?;
    let mut s = SolitonData::new(chart, f, lambda, q)?;
    if let Some(l) = d.label {
        s = s.with_label(l);
    }
    if let Some(b) = d.big_lambda {
        s = s.with_big_lambda(b);
    }
    if let Some(a) = d.normalization {
        s = s.with_normalization(a);
    }
    Ok(Example {
        name,
        params: Params::new(),
        soliton: s,
        expected: d.expected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::{build, NAMES};
    use proptest::prelude::*;

    fn assert_same(a: &Example, b: &Example, points: &[Vec<f64>]) {
        assert_eq!(a.chart().coords(), b.chart().coords());
        assert_eq!(a.chart().domain(), b.chart().domain());
        assert_eq!(a.chart().sample_box(), b.chart().sample_box());
        assert_eq!(a.chart().anchor(), b.chart().anchor());
        assert_eq!(a.chart().structure(), b.chart().structure());
        assert_eq!(a.chart().is_compact(), b.chart().is_compact());
        assert_eq!(a.soliton.lambda, b.soliton.lambda);
        assert_eq!(a.soliton.big_lambda, b.soliton.big_lambda);
        assert_eq!(a.soliton.normalization, b.soliton.normalization);
        assert_eq!(a.expected, b.expected);
        for p in points.iter().filter(|p| a.chart().contains(p)) {
            assert_eq!(a.chart().metric_at(p).unwrap(), b.chart().metric_at(p).unwrap());
            assert_eq!(a.soliton.potential(p).unwrap(), b.soliton.potential(p).unwrap());
        }
    }

    #[test]
    fn every_example_round_trips() {
        for name in NAMES {
            let ex = build(name, &Params::new()).unwrap();
            let text = export_example(&ex).unwrap();
            let back = parse_example(&text).unwrap();
            let n = ex.chart().dim();
            let points: Vec<Vec<f64>> = (0..5)
                .map(|k| (0..n).map(|i| 0.13 * (k as f64 + 1.0) * (i as f64 - 0.7)).collect())
                .collect();
            assert_same(&ex, &back, &points);
            assert_eq!(ex.soliton.q, back.soliton.q, "{name}");
            assert_eq!(export_example(&back).unwrap(), text, "{name}");
        }
    }

    #[test]
    fn qspec_lines() {
        assert_eq!(parse_qspec("ricci").unwrap(), QSpec::Ricci);
        assert_eq!(parse_qspec("bach").unwrap(), QSpec::Bach);
        assert_eq!(
            parse_qspec("bourguignon rho=0.25").unwrap(),
            QSpec::Bourguignon { rho: 0.25 }
        );
        assert!(parse_qspec("bourguignon").is_err());
        assert!(parse_qspec("ricci extra").is_err());
        assert!(parse_qspec("custom {").is_err());
        assert!(parse_qspec("nope").is_err());
    }

    const CUSTOM: &str = "chart = plane
coords = x y
g x x = 1
g y y = 1   # flat
f = (x^2 + y^2) / 4
lambda = 1.5
q = custom {
  x x = -2
  y y = -2
}
expect soliton_residual = pass
";

    #[test]
    fn custom_block_parses() {
        let ex = parse_example(CUSTOM).unwrap();
        let QSpec::Custom(c) = &ex.soliton.q else {
            panic!("expected custom q");
        };
        assert_eq!(c.len(), 3);
        assert!(c[1].is_zero());
        assert_eq!(c[0].eval_f64(&[0.0, 0.0]).unwrap(), -2.0);
        assert_eq!(ex.expected(Check::SolitonResidual), Some(Verdict::Pass));
        let again = parse_example(&export_example(&ex).unwrap()).unwrap();
        assert_eq!(again.soliton.q, ex.soliton.q);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("chart = a\ng x x = 1\n", 2),
            ("coords = x\nchart = a\nchart = b\n", 3),
            ("coords = x\ng x y = 1\n", 2),
            ("coords = x\nf = x +\n", 2),
            ("coords = pi\n", 1),
            ("coords = x\nq = custom {\n x x = 1\n", 2),
            ("coords = x\nwhat = 1\n", 2),
            ("coords = x y\nfactor = flat y x\n", 2),
        ];
        for (text, line) in cases {
            match parse_example(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn missing_pieces_are_reported() {
        let text = "chart = a\ncoords = x\ng x x = 1\nlambda = 1\nq = zero\n";
        let e = parse_example(text).unwrap_err();
        assert!(e.to_string().contains("'f'"), "{e}");
    }

    fn expr_strategy(n: usize) -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![(-3.0f64..3.0).prop_map(Expr::num), (0..n).prop_map(Expr::var),];
        leaf.prop_recursive(3, 12, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
                inner.clone().prop_map(|a| a.call(crate::expr::Func::Sin)),
                inner.prop_map(|a| -a),
            ]
        })
    }

    proptest! {
        #[test]
        fn conformal_charts_round_trip(
            n in 1usize..4,
            bump in expr_strategy(3),
            lambda in -2.0f64..2.0,
            lo in -3.0f64..-0.5,
            radius in 0.5f64..4.0,
            fd in any::<bool>(),
        ) {
            let coords: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
            let bump = if bump.max_var().is_some_and(|m| m >= n) { Expr::num(0.5) } else { bump };
            let factor = bump.clone() * bump + 1.0;
            let mut chart = Chart::conformal("c", coords.clone(), factor).unwrap()
                .with_domain(Domain { constraints: vec![
                    Constraint::Interval { coord: 0, lo, hi: -lo },
                    Constraint::Ball { coords: (0..n).collect(), radius },
                ]})
                .with_sample_box(vec![(lo, -lo); n])
                .with_anchor(vec![0.0; n]);
            if fd {
                chart = chart.with_finite_differences();
            }
            let f = Expr::sum_of_squares(0..n) * Expr::num(0.25);
            let s = SolitonData::new(chart, f, lambda, QSpec::Bourguignon { rho: lo }).unwrap();
            let ex = Example { name: "c".into(), params: Params::new(), soliton: s, expected: BTreeMap::new() };
            let text = export_example(&ex).unwrap();
            let back = parse_example(&text).unwrap();
            prop_assert_eq!(export_example(&back).unwrap(), text);
            prop_assert_eq!(back.chart().regime(), ex.chart().regime());
            prop_assert_eq!(&back.soliton.q, &ex.soliton.q);
            let pts: Vec<Vec<f64>> = (0..4).map(|k| vec![0.1 * k as f64 - 0.15; n]).collect();
            for p in pts.iter().filter(|p| ex.chart().contains(p)) {
                let (a, b) = (ex.chart().metric_at(p), back.chart().metric_at(p));
                prop_assert_eq!(a.ok(), b.ok());
            }
        }
    }
}
