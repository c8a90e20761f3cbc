//! Domain types shared across the crate: transitions, segments, queries,
//! preference labels and the append-only preference dataset.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: usize,
    pub next_state: Vec<f64>,
}

impl Transition {
    pub fn new(state: Vec<f64>, action: usize, next_state: Vec<f64>) -> Self {
        Self {
            state,
            action,
            next_state,
        }
    }
}

/// A fixed-length chained run of transitions.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    steps: Vec<Transition>,
}

impl Segment {
    /// Builds a segment, checking that it is non-empty, dimensionally
    /// consistent and chained (`next_state[i] == state[i + 1]`).
    pub fn new(steps: Vec<Transition>) -> Result<Self> {
        let first = steps.first().ok_or(Error::Dimension {
            expected: 1,
            actual: 0,
        })?;
        let dim = first.state.len();
        for (i, step) in steps.iter().enumerate() {
            for v in [&step.state, &step.next_state] {
                if v.len() != dim {
                    return Err(Error::Dimension {
                        expected: dim,
                        actual: v.len(),
                    });
                }
            }
            if let Some(next) = steps.get(i + 1) {
                if next.state != step.next_state {
                    return Err(Error::Config(format!(
                        "segment is not chained at step {i}"
                    )));
                }
            }
        }
        Ok(Self { steps })
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn obs_dim(&self) -> usize {
        self.steps[0].state.len()
    }

    pub fn steps(&self) -> &[Transition] {
        &self.steps
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.steps.iter()
    }
}

/// Sum of per-step rewards over the segment.
pub fn segment_return<F>(segment: &Segment, reward: F) -> f64
where
    F: Fn(&[f64], usize) -> f64,
{
    segment
        .iter()
        .map(|step| reward(&step.state, step.action))
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub first: Segment,
    pub second: Segment,
}

impl Query {
    pub fn new(first: Segment, second: Segment) -> Result<Self> {
        if first.len() != second.len() {
            return Err(Error::Dimension {
                expected: first.len(),
                actual: second.len(),
            });
        }
        Ok(Self { first, second })
    }

    pub fn swapped(&self) -> Query {
        Query {
            first: self.second.clone(),
            second: self.first.clone(),
        }
    }
}

/// Distribution over which segment of a query is preferred.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelDistribution {
    mu1: f64,
    mu2: f64,
}

impl LabelDistribution {
    pub fn soft(mu1: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&mu1) {
            return Err(Error::Config(format!("label probability {mu1} outside [0, 1]")));
        }
        Ok(Self {
            mu1,
            mu2: 1.0 - mu1,
        })
    }

    pub fn hard(first_preferred: bool) -> Self {
        if first_preferred {
            Self { mu1: 1.0, mu2: 0.0 }
        } else {
            Self { mu1: 0.0, mu2: 1.0 }
        }
    }

    pub fn mu1(&self) -> f64 {
        self.mu1
    }

    pub fn mu2(&self) -> f64 {
        self.mu2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceRecord {
    pub query: Query,
    pub label: LabelDistribution,
    pub teacher_id: usize,
    /// Agent environment steps when the label was collected.
    pub step_collected: u64,
}

/// Append-only preference store; iteration is insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PreferenceDataset {
    records: Vec<PreferenceRecord>,
}

impl PreferenceDataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn append(&mut self, record: PreferenceRecord) {
        self.records.push(record);
    }

    pub fn iter(&self) -> std::slice::Iter<'_, PreferenceRecord> {
        self.records.iter()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[PreferenceRecord] {
        &self.records
    }

    /// Writes the dataset as line-delimited text.
    ///
    /// The first line is a header `#segment_len=<k>,obs_dim=<d>`. Each
    /// following line is one record:
    /// `teacher_id,step_collected,mu1,mu2,<first segment>,<second segment>`,
    /// where a segment is its steps in order, each flattened as
    /// `state..., action, next_state...`. Floats use the shortest decimal
    /// that round-trips.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let (k, dim) = self
            .records
            .first()
            .map(|r| (r.query.first.len(), r.query.first.obs_dim()))
            .unwrap_or((0, 0));
        writeln!(out, "#segment_len={k},obs_dim={dim}")?;
        let mut line = String::new();
        for record in &self.records {
            line.clear();
            let _ = write!(
                line,
                "{},{},{},{}",
                record.teacher_id,
                record.step_collected,
                record.label.mu1(),
                record.label.mu2()
            );
            for segment in [&record.query.first, &record.query.second] {
                for step in segment.iter() {
                    for v in &step.state {
                        let _ = write!(line, ",{v}");
                    }
                    let _ = write!(line, ",{}", step.action as f64);
                    for v in &step.next_state {
                        let _ = write!(line, ",{v}");
                    }
                }
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let header = match lines.next() {
            Some((_, line)) => line.map_err(|e| Error::parse(1, e.to_string()))?,
            None => return Ok(Self::new()),
        };
        let (k, dim) = parse_header(&header)?;
        let per_step = 2 * dim + 1;
        let expected_fields = 4 + 2 * k * per_step;

        let mut dataset = Self::new();
        for (idx, line) in lines {
            let lineno = idx + 1;
            let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != expected_fields {
                return Err(Error::parse(
                    lineno,
                    format!("expected {expected_fields} fields, got {}", fields.len()),
                ));
            }
            let teacher_id = fields[0]
                .parse::<usize>()
                .map_err(|e| Error::parse(lineno, e.to_string()))?;
            let step_collected = fields[1]
                .parse::<u64>()
                .map_err(|e| Error::parse(lineno, e.to_string()))?;
            let floats = fields[2..]
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::parse(lineno, e.to_string()))?;
            let (mu1, mu2) = (floats[0], floats[1]);
            if (mu1 + mu2 - 1.0).abs() > 1e-12 {
                return Err(Error::parse(lineno, "label entries do not sum to 1"));
            }
            let label = LabelDistribution { mu1, mu2 };
            let body = &floats[2..];
            let (a, b) = body.split_at(k * per_step);
            let first = parse_segment(a, dim).map_err(|e| Error::parse(lineno, e.to_string()))?;
            let second = parse_segment(b, dim).map_err(|e| Error::parse(lineno, e.to_string()))?;
            dataset.append(PreferenceRecord {
                query: Query::new(first, second)?,
                label,
                teacher_id,
                step_collected,
            });
        }
        Ok(dataset)
    }
}

impl<'a> IntoIterator for &'a PreferenceDataset {
    type Item = &'a PreferenceRecord;
    type IntoIter = std::slice::Iter<'a, PreferenceRecord>;

    fn into_iter(self) -> Self::IntoIter {
        self.records.iter()
    }
}

fn parse_header(header: &str) -> Result<(usize, usize)> {
    let body = header
        .strip_prefix('#')
        .ok_or_else(|| Error::parse(1, "missing header"))?;
    let mut k = None;
    let mut dim = None;
    for part in body.split(',') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Error::parse(1, format!("bad header field `{part}`")))?;
        let value: usize = value
            .trim()
            .parse()
            .map_err(|_| Error::parse(1, format!("bad header value `{value}`")))?;
        match key.trim() {
            "segment_len" => k = Some(value),
            "obs_dim" => dim = Some(value),
            other => return Err(Error::parse(1, format!("unknown header key `{other}`"))),
        }
    }
    match (k, dim) {
        (Some(k), Some(dim)) => Ok((k, dim)),
        _ => Err(Error::parse(1, "header needs segment_len and obs_dim")),
    }
}

fn parse_segment(values: &[f64], dim: usize) -> Result<Segment> {
    let steps = values
        .chunks_exact(2 * dim + 1)
        .map(|chunk| {
            let action = chunk[dim];
            if action < 0.0 || action.fract() != 0.0 {
                return Err(Error::Config(format!("action {action} is not an index")));
            }
            Ok(Transition::new(
                chunk[..dim].to_vec(),
                action as usize,
                chunk[dim + 1..].to_vec(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Segment::new(steps)
}
