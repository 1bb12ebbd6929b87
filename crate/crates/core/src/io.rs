//! PEM1 instance files, JSON reports and reproducible instance generators.
//!
//! PEM1 is a line-oriented UTF-8 text format. `#` starts a comment running
//! to the end of the line and tokens are whitespace-separated:
//!
//! ```text
//! PEM1
//! <node_count> <label_count> <edge_count>
//! <f_0>
//! <node_count lines of label_count unary rationals>
//! # per edge:
//! <s> <t>
//! <label_count lines of label_count pairwise rationals>
//! ```
//!
//! Rationals are written `-3/2`, `7`, `0`; integers never carry a
//! denominator. Parsing and serialization round-trip exactly.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::energy::{EnergyError, EnergyFunction, LabelSpace};
use crate::{rat, Rational};

/// Errors raised while reading a PEM1 instance.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: expected {expected}, found `{found}`")]
    UnexpectedToken {
        line: usize,
        expected: &'static str,
        found: String,
    },
    #[error("unexpected end of input: expected {0}")]
    UnexpectedEof(&'static str),
    #[error("line {line}: malformed rational `{found}`")]
    BadRational { line: usize, found: String },
    #[error("line {line}: {source}")]
    Structure {
        line: usize,
        #[source]
        source: EnergyError,
    },
    #[error("line {line}: trailing input after instance")]
    TrailingInput { line: usize },
}

struct Tokens<'a> {
    stream: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let mut stream = Vec::new();
        for (i, raw_line) in text.lines().enumerate() {
            let line = raw_line.split('#').next().unwrap_or("");
            for token in line.split_whitespace() {
                stream.push((i + 1, token));
            }
        }
        Tokens { stream, pos: 0 }
    }

    fn next(&mut self, expected: &'static str) -> Result<(usize, &'a str), ParseError> {
        let item = self
            .stream
            .get(self.pos)
            .copied()
            .ok_or(ParseError::UnexpectedEof(expected))?;
        self.pos += 1;
        Ok(item)
    }

    fn usize(&mut self, expected: &'static str) -> Result<(usize, usize), ParseError> {
        let (line, tok) = self.next(expected)?;
        tok.parse()
            .map(|v| (line, v))
            .map_err(|_| ParseError::UnexpectedToken {
                line,
                expected,
                found: tok.to_string(),
            })
    }

    fn rational(&mut self) -> Result<Rational, ParseError> {
        let (line, tok) = self.next("rational")?;
        parse_rational(tok).ok_or(ParseError::BadRational {
            line,
            found: tok.to_string(),
        })
    }

    fn finished(&self) -> Option<usize> {
        self.stream.get(self.pos).map(|&(line, _)| line)
    }
}

/// Parses `[-]digits[/digits]` into an exact rational.
pub fn parse_rational(token: &str) -> Option<Rational> {
    let (num_text, den_text) = match token.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (token, None),
    };
    if num_text.is_empty() {
        return None;
    }
    let numer: BigInt = num_text.parse().ok()?;
    let denom: BigInt = match den_text {
        Some(d) if !d.is_empty() && d.chars().all(|c| c.is_ascii_digit()) => d.parse().ok()?,
        Some(_) => return None,
        None => BigInt::one(),
    };
    if denom.is_zero() {
        return None;
    }
    Some(Rational::new(numer, denom))
}

/// Canonical text of a rational: reduced, `n/d` only when the denominator
/// is not one.
pub fn format_rational(value: &Rational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Parses a PEM1 instance.
pub fn parse(text: &str) -> Result<EnergyFunction, ParseError> {
    let mut tokens = Tokens::new(text);
    let (line, magic) = tokens.next("PEM1 header")?;
    if magic != "PEM1" {
        return Err(ParseError::UnexpectedToken {
            line,
            expected: "PEM1 header",
            found: magic.to_string(),
        });
    }
    let (_, node_count) = tokens.usize("node count")?;
    let (_, label_count) = tokens.usize("label count")?;
    let (counts_line, edge_count) = tokens.usize("edge count")?;

    let constant = tokens.rational()?;
    let mut unary = Vec::with_capacity(node_count);
    for _ in 0..node_count {
        let mut row = Vec::with_capacity(label_count);
        for _ in 0..label_count {
            row.push(tokens.rational()?);
        }
        unary.push(row);
    }

    let mut edges = Vec::with_capacity(edge_count);
    let mut edge_lines = Vec::with_capacity(edge_count);
    let mut pairwise = Vec::with_capacity(edge_count);
    for _ in 0..edge_count {
        let (line, s) = tokens.usize("edge endpoint")?;
        let (_, t) = tokens.usize("edge endpoint")?;
        edges.push((s, t));
        edge_lines.push(line);
        let mut table = Vec::with_capacity(label_count);
        for _ in 0..label_count {
            let mut row = Vec::with_capacity(label_count);
            for _ in 0..label_count {
                row.push(tokens.rational()?);
            }
            table.push(row);
        }
        pairwise.push(table);
    }

    if let Some(line) = tokens.finished() {
        return Err(ParseError::TrailingInput { line });
    }

    let space = LabelSpace::new(node_count, label_count, edges.clone()).map_err(|source| {
        let line = match &source {
            EnergyError::SelfLoop(s, t) | EnergyError::EdgeOutOfRange(s, t) => edges
                .iter()
                .position(|&e| e == (*s, *t))
                .map_or(counts_line, |i| edge_lines[i]),
            EnergyError::DuplicateEdge(s, t) => edges
                .iter()
                .enumerate()
                .filter(|&(_, &e)| e == (*s, *t))
                .nth(1)
                .map_or(counts_line, |(i, _)| edge_lines[i]),
            _ => counts_line,
        };
        ParseError::Structure { line, source }
    })?;
    EnergyFunction::new(space, constant, unary, pairwise).map_err(|source| {
        ParseError::Structure {
            line: counts_line,
            source,
        }
    })
}

/// Serializes an energy function into canonical PEM1 text.
pub fn serialize(f: &EnergyFunction) -> String {
    let space = f.space();
    let mut out = String::from("PEM1\n");
    out.push_str(&format!(
        "{} {} {}\n",
        space.node_count(),
        space.label_count(),
        space.edges().len()
    ));
    out.push_str(&format_rational(f.constant()));
    out.push('\n');
    for s in space.nodes() {
        let row: Vec<String> = f.unary(s).iter().map(format_rational).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    for (e, &(s, t)) in space.edges().iter().enumerate() {
        out.push_str(&format!("{s} {t}\n"));
        for row in f.pairwise(e) {
            let cells: Vec<String> = row.iter().map(format_rational).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
    }
    out
}

/// Families of generated instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    /// Uniform integer tables, no structural promise.
    Random,
    /// Zero diagonal, constant positive off-diagonal per edge.
    Potts,
    /// Every edge table is a metric.
    Metric,
    /// Every edge table satisfies the submodularity inequality.
    Submodular,
    /// Random instance restricted to two labels.
    TwoLabel,
}

/// Deterministic generator specification: equal specs produce identical
/// instances.
#[derive(Debug, Clone)]
pub struct GeneratorSpec {
    pub node_count: usize,
    pub label_count: usize,
    pub edge_density: f64,
    pub value_range: i64,
    pub structure: Structure,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(
        node_count: usize,
        label_count: usize,
        structure: Structure,
        seed: u64,
    ) -> GeneratorSpec {
        GeneratorSpec {
            node_count,
            label_count,
            edge_density: 0.6,
            value_range: 10,
            structure,
            seed,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeneratorError {
    #[error("infeasible generator spec: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Energy(#[from] EnergyError),
}

/// Generates an instance from a spec. Structural promises (`Submodular`,
/// `Metric`, `Potts`) hold for every seed.
pub fn generate(spec: &GeneratorSpec) -> Result<EnergyFunction, GeneratorError> {
    if spec.node_count == 0 || spec.label_count == 0 {
        return Err(GeneratorError::Infeasible(
            "node and label counts must be positive".into(),
        ));
    }
    if !(0.0..=1.0).contains(&spec.edge_density) {
        return Err(GeneratorError::Infeasible(
            "edge density must lie in [0, 1]".into(),
        ));
    }
    if spec.value_range < 1 {
        return Err(GeneratorError::Infeasible(
            "value range must be at least 1".into(),
        ));
    }
    match spec.structure {
        Structure::Metric if spec.label_count < 2 => {
            return Err(GeneratorError::Infeasible(
                "metric structure needs at least two labels".into(),
            ));
        }
        Structure::TwoLabel if spec.label_count != 2 => {
            return Err(GeneratorError::Infeasible(
                "two-label structure requires label_count = 2".into(),
            ));
        }
        _ => {}
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let l = spec.label_count;
    let bound = spec.value_range;

    let mut edges = Vec::new();
    for s in 0..spec.node_count {
        for t in (s + 1)..spec.node_count {
            if rng.gen_bool(spec.edge_density) {
                edges.push((s, t));
            }
        }
    }
    let space = LabelSpace::new(spec.node_count, l, edges)?;

    let unary: Vec<Vec<Rational>> = (0..spec.node_count)
        .map(|_| (0..l).map(|_| rat(rng.gen_range(-bound..=bound))).collect())
        .collect();

    let mut pairwise = Vec::with_capacity(space.edges().len());
    for _ in space.edges() {
        let table = match spec.structure {
            Structure::Random | Structure::TwoLabel => (0..l)
                .map(|_| (0..l).map(|_| rat(rng.gen_range(-bound..=bound))).collect())
                .collect(),
            Structure::Potts => {
                let weight = rat(rng.gen_range(1..=bound));
                (0..l)
                    .map(|i| {
                        (0..l)
                            .map(|j| if i == j { rat(0) } else { weight.clone() })
                            .collect()
                    })
                    .collect()
            }
            Structure::Metric => metric_table(&mut rng, l, bound),
            Structure::Submodular => submodular_table(&mut rng, l, bound),
        };
        pairwise.push(table);
    }

    Ok(EnergyFunction::new(space, rat(0), unary, pairwise)?)
}

/// Deterministic random labeling, used for seeded starting points.
pub fn random_labeling(space: &LabelSpace, seed: u64) -> crate::energy::Labeling {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    crate::energy::Labeling(
        (0..space.node_count())
            .map(|_| rng.gen_range(0..space.label_count()))
            .collect(),
    )
}

/// Line metric from distinct integer points: `d(i, j) = |p_i - p_j|`.
fn metric_table(rng: &mut ChaCha8Rng, l: usize, bound: i64) -> Vec<Vec<Rational>> {
    let span = bound.max(l as i64 - 1);
    let mut points: Vec<i64> = (0..=span).collect();
    for i in (1..points.len()).rev() {
        let j = rng.gen_range(0..=i);
        points.swap(i, j);
    }
    points.truncate(l);
    (0..l)
        .map(|i| (0..l).map(|j| rat((points[i] - points[j]).abs())).collect())
        .collect()
}

/// Rejection-free submodular table: a modular part plus nonpositive mixed
/// second differences, which spans exactly the submodular tables.
fn submodular_table(rng: &mut ChaCha8Rng, l: usize, bound: i64) -> Vec<Vec<Rational>> {
    let row_offsets: Vec<i64> = (0..l).map(|_| rng.gen_range(-bound..=bound)).collect();
    let col_offsets: Vec<i64> = (0..l).map(|_| rng.gen_range(-bound..=bound)).collect();
    let mut increments = vec![vec![0i64; l]; l];
    for row in increments.iter_mut().skip(1) {
        for cell in row.iter_mut().skip(1) {
            *cell = -rng.gen_range(0..=bound);
        }
    }
    (0..l)
        .map(|i| {
            (0..l)
                .map(|j| {
                    let mut v = row_offsets[i] + col_offsets[j];
                    for row in increments.iter().take(i + 1).skip(1) {
                        for cell in row.iter().take(j + 1).skip(1) {
                            v += cell;
                        }
                    }
                    rat(v)
                })
                .collect()
        })
        .collect()
}

/// Machine-readable run record. Every key is always present so the schema
/// is stable for scripting; absent values serialize as `null`.
#[derive(Debug, Clone, Serialize, Default)]
pub struct Report {
    pub instance: Option<String>,
    pub method: Option<String>,
    pub derived_constraint: Option<Vec<Vec<usize>>>,
    pub autarky: Option<AutarkyReport>,
    pub lp_value: Option<String>,
    pub energy_value: Option<String>,
    pub labeling: Option<Vec<usize>>,
    pub trace: Option<Vec<String>>,
    pub fixed_point: Option<bool>,
    pub oracle_verdict: Option<String>,
    pub wall_time_ms: u64,
}

/// Autarky fragment of a [`Report`].
#[derive(Debug, Clone, Serialize)]
pub struct AutarkyReport {
    pub x_min: Vec<usize>,
    pub x_max: Vec<usize>,
    pub strength: String,
}

impl AutarkyReport {
    pub fn from_autarky(a: &crate::energy::Autarky) -> Self {
        AutarkyReport {
            x_min: a.x_min.0.clone(),
            x_max: a.x_max.0.clone(),
            strength: a.strength.to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio;

    #[test]
    fn parses_minimal_zero_instance() {
        let f = parse("PEM1\n1 2 0\n0\n0 0\n").unwrap();
        assert_eq!(f.space().node_count(), 1);
        assert_eq!(f.space().label_count(), 2);
        assert_eq!(f.constant(), &rat(0));
        assert_eq!(f.unary(0), &[rat(0), rat(0)]);
    }

    #[test]
    fn parses_exact_rationals() {
        let text = "PEM1\n2 2 1\n0\n0 0\n0 0\n0 1\n-3/2 1\n2 5/3\n";
        let f = parse(text).unwrap();
        assert_eq!(f.pairwise(0)[0][0], ratio(-3, 2));
        assert_eq!(f.pairwise(0)[1][1], ratio(5, 3));
    }

    #[test]
    fn rejects_self_loop() {
        let text = "PEM1\n2 2 1\n0\n0 0\n0 0\n0 0\n0 0\n0 0\n";
        match parse(text) {
            Err(ParseError::Structure { line, source }) => {
                assert_eq!(source, EnergyError::SelfLoop(0, 0));
                assert_eq!(line, 6);
            }
            other => panic!("expected self-loop error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicate_edge_and_bad_index() {
        let dup = "PEM1\n2 2 2\n0\n0 0\n0 0\n0 1\n0 0\n0 0\n0 1\n0 0\n0 0\n";
        assert!(matches!(
            parse(dup),
            Err(ParseError::Structure {
                source: EnergyError::DuplicateEdge(0, 1),
                ..
            })
        ));
        let oob = "PEM1\n2 2 1\n0\n0 0\n0 0\n0 5\n0 0\n0 0\n";
        assert!(matches!(
            parse(oob),
            Err(ParseError::Structure {
                source: EnergyError::EdgeOutOfRange(0, 5),
                ..
            })
        ));
    }

    #[test]
    fn reports_line_numbers_and_strips_comments() {
        let text = "PEM1\n# a comment\n1 2 0\n0\nbad 0\n";
        match parse(text) {
            Err(ParseError::BadRational { line, found }) => {
                assert_eq!(line, 5);
                assert_eq!(found, "bad");
            }
            other => panic!("expected rational error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_trailing_tokens() {
        assert!(matches!(
            parse("PEM1\n1 2 0\n0\n0 0\n7\n"),
            Err(ParseError::TrailingInput { line: 5 })
        ));
    }

    #[test]
    fn round_trip_is_identity() {
        let text = "PEM1\n2 3 1\n-1/2\n0 1 2\n3 4 5\n0 1\n0 1 2\n1 0 1\n2 1 0\n";
        let f = parse(text).unwrap();
        let printed = serialize(&f);
        assert_eq!(parse(&printed).unwrap(), f);
        assert_eq!(printed, text);
    }

    #[test]
    fn integers_serialize_without_denominator() {
        assert_eq!(format_rational(&rat(3)), "3");
        assert_eq!(format_rational(&ratio(6, 2)), "3");
        assert_eq!(format_rational(&ratio(-3, 2)), "-3/2");
        assert_eq!(format_rational(&ratio(3, -2)), "-3/2");
    }

    #[test]
    fn rational_parser_rejects_garbage() {
        assert!(parse_rational("1/0").is_none());
        assert!(parse_rational("1/-2").is_none());
        assert!(parse_rational("").is_none());
        assert!(parse_rational("1.5").is_none());
        assert_eq!(parse_rational("-7/14"), Some(ratio(-1, 2)));
    }

    #[test]
    fn potts_generator_shape() {
        let spec = GeneratorSpec::new(4, 3, Structure::Potts, 11);
        let f = generate(&spec).unwrap();
        assert!(!f.space().edges().is_empty());
        for (e, _) in f.space().edges().iter().enumerate() {
            let t = f.pairwise(e);
            let w = t[0][1].clone();
            assert!(w > rat(0));
            for i in 0..3 {
                for j in 0..3 {
                    if i == j {
                        assert_eq!(t[i][j], rat(0));
                    } else {
                        assert_eq!(t[i][j], w);
                    }
                }
            }
        }
    }

    #[test]
    fn generator_is_deterministic() {
        let spec = GeneratorSpec::new(5, 3, Structure::Submodular, 7);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
    }

    #[test]
    fn submodular_generator_keeps_its_promise() {
        for seed in 0..100 {
            let spec = GeneratorSpec::new(4, 4, Structure::Submodular, seed);
            let f = generate(&spec).unwrap();
            assert!(
                f.is_submodular(),
                "seed {seed} produced a non-submodular instance"
            );
        }
    }

    #[test]
    fn metric_generator_keeps_its_promise() {
        for seed in 0..50 {
            let spec = GeneratorSpec::new(4, 3, Structure::Metric, seed);
            let f = generate(&spec).unwrap();
            assert!(f.is_metric(), "seed {seed} produced a non-metric instance");
        }
    }

    #[test]
    fn infeasible_specs_are_rejected() {
        let spec = GeneratorSpec::new(2, 1, Structure::Metric, 0);
        assert!(matches!(generate(&spec), Err(GeneratorError::Infeasible(_))));
        let spec = GeneratorSpec::new(2, 3, Structure::TwoLabel, 0);
        assert!(matches!(generate(&spec), Err(GeneratorError::Infeasible(_))));
    }

    #[test]
    fn round_trip_on_generated_instances() {
        for seed in 0..100 {
            let structure = match seed % 4 {
                0 => Structure::Random,
                1 => Structure::Potts,
                2 => Structure::Submodular,
                _ => Structure::Metric,
            };
            let spec = GeneratorSpec::new(3 + (seed as usize % 3), 3, structure, seed);
            let f = generate(&spec).unwrap();
            assert_eq!(parse(&serialize(&f)).unwrap(), f, "seed {seed}");
        }
    }

    #[test]
    fn report_serializes_all_keys() {
        let report = Report {
            wall_time_ms: 3,
            ..Report::default()
        };
        let json: serde_json::Value =
            serde_json::from_str(&serde_json::to_string(&report).unwrap()).unwrap();
        let object = json.as_object().unwrap();
        for key in [
            "instance",
            "method",
            "derived_constraint",
            "autarky",
            "lp_value",
            "energy_value",
            "labeling",
            "trace",
            "fixed_point",
            "oracle_verdict",
            "wall_time_ms",
        ] {
            assert!(object.contains_key(key), "missing key {key}");
        }
    }
}
