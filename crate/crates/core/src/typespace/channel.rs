use crate::error::{Error, Result};

use super::NORM_TOL;

/// A finite alphabet, optionally with symbol names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    size: usize,
    labels: Option<Vec<String>>,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::AlphabetTooSmall { size, min: 1 });
        }
        Ok(Self { size, labels: None })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        let mut a = Self::new(labels.len())?;
        a.labels = Some(labels);
        Ok(a)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(l) if i < l.len() => l[i].clone(),
            _ => i.to_string(),
        }
    }
}

fn check_probs(what: &str, probs: &[f64]) -> Result<()> {
    for &p in probs {
        if !p.is_finite() || !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability { what: what.into(), value: p });
        }
    }
    let sum: f64 = crate::numeric::sum_compensated(probs.iter().copied());
    if (sum - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized { what: what.into(), sum, tol: NORM_TOL });
    }
    Ok(())
}

/// Discrete memoryless channel `W(y|x)`, stored row-major with cached
/// natural logs (`-inf` on zeros).
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    nx: usize,
    ny: usize,
    probs: Vec<f64>,
    logs: Vec<f64>,
}

impl Channel {
    /// Build from rows `W(.|x)`. Every row must sum to one within 1e-12.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let nx = rows.len();
        if nx == 0 {
            return Err(Error::AlphabetTooSmall { size: 0, min: 1 });
        }
        let ny = rows[0].len();
        if ny == 0 {
            return Err(Error::AlphabetTooSmall { size: 0, min: 1 });
        }
        let mut probs = Vec::with_capacity(nx * ny);
        for (x, row) in rows.iter().enumerate() {
            if row.len() != ny {
                return Err(Error::DimensionMismatch(format!(
                    "channel row {x} has {} entries, row 0 has {ny}",
                    row.len()
                )));
            }
            check_probs(&format!("channel row {x}"), row)?;
            probs.extend_from_slice(row);
        }
        let logs = probs.iter().map(|&p| if p > 0.0 { p.ln() } else { f64::NEG_INFINITY }).collect();
        Ok(Self { nx, ny, probs, logs })
    }

    /// Binary symmetric channel with crossover probability `p`.
    pub fn bsc(p: f64) -> Result<Self> {
        Self::new(vec![vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    /// Binary channel with `W(1|0) = a` and `W(0|1) = b`.
    pub fn binary(a: f64, b: f64) -> Result<Self> {
        Self::new(vec![vec![1.0 - a, a], vec![b, 1.0 - b]])
    }

    /// Noiseless identity channel on `k` symbols.
    pub fn identity(k: usize) -> Result<Self> {
        Self::new((0..k).map(|x| (0..k).map(|y| if x == y { 1.0 } else { 0.0 }).collect()).collect())
    }

    /// Symmetric channel with crossover 0.01.
    pub fn w1() -> Self {
        Self::bsc(0.01).expect("valid preset")
    }

    /// Asymmetric channel with `W(1|0) = 0.4` and `W(0|1) = 0.01`.
    pub fn w2() -> Self {
        Self::binary(0.4, 0.01).expect("valid preset")
    }

    /// Parse whitespace-separated rows; `#` starts a comment, blank lines
    /// are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        let mut lines = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|_| Error::Parse {
                        line: i + 1,
                        msg: format!("not a number: {tok:?}"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
            lines.push(i + 1);
        }
        if rows.is_empty() {
            return Err(Error::Parse { line: 0, msg: "no channel rows found".into() });
        }
        Self::new(rows.clone()).map_err(|e| match e {
            Error::NotNormalized { ref what, .. } | Error::InvalidProbability { ref what, .. } => {
                let x: usize = what.rsplit(' ').next().and_then(|s| s.parse().ok()).unwrap_or(0);
                Error::Parse { line: lines.get(x).copied().unwrap_or(0), msg: e.to_string() }
            }
            other => other,
        })
    }

    #[inline]
    pub fn input_size(&self) -> usize {
        self.nx
    }

    #[inline]
    pub fn output_size(&self) -> usize {
        self.ny
    }

    #[inline]
    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.probs[x * self.ny + y]
    }

    /// `ln W(y|x)`, `-inf` where the transition is impossible.
    #[inline]
    pub fn ln_prob(&self, x: usize, y: usize) -> f64 {
        self.logs[x * self.ny + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.probs[x * self.ny..(x + 1) * self.ny]
    }

    pub(crate) fn logs(&self) -> &[f64] {
        &self.logs
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.nx).map(|x| self.row(x).to_vec()).collect()
    }

    /// Output distribution induced by input distribution `px`.
    pub fn output_marginal(&self, px: &InputDistribution) -> Marginal {
        let mut q = vec![0.0; self.ny];
        for x in 0..self.nx {
            for (y, qy) in q.iter_mut().enumerate() {
                *qy += px.prob(x) * self.prob(x, y);
            }
        }
        Marginal::from_raw(q)
    }

    pub(crate) fn same_shape(&self, other: &Channel) -> bool {
        self.nx == other.nx && self.ny == other.ny
    }
}

/// Input distribution `P_X` of the fixed-composition ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct InputDistribution {
    probs: Vec<f64>,
}

impl InputDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::AlphabetTooSmall { size: 0, min: 1 });
        }
        check_probs("input distribution", &probs)?;
        Ok(Self { probs })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::AlphabetTooSmall { size: 0, min: 1 });
        }
        Ok(Self { probs: vec![1.0 / k as f64; k] })
    }

    /// Whitespace or comma separated probabilities.
    pub fn parse(text: &str) -> Result<Self> {
        let probs = text
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::Parse { line: 1, msg: format!("not a number: {t:?}") })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(probs)
    }

    #[inline]
    pub fn prob(&self, x: usize) -> f64 {
        self.probs[x]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Output marginal `Q_Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal {
    probs: Vec<f64>,
}

impl Marginal {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::AlphabetTooSmall { size: 0, min: 1 });
        }
        check_probs("marginal", &probs)?;
        Ok(Self { probs })
    }

    pub(crate) fn from_raw(probs: Vec<f64>) -> Self {
        Self { probs }
    }

    #[inline]
    pub fn prob(&self, y: usize) -> f64 {
        self.probs[y]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        let w1 = Channel::w1();
        assert_eq!(w1.prob(0, 1), 0.01);
        assert_eq!(w1.prob(1, 0), 0.01);
        let w2 = Channel::w2();
        assert_eq!(w2.prob(0, 1), 0.4);
        assert_eq!(w2.prob(1, 0), 0.01);
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(matches!(
            Channel::new(vec![vec![0.5, 0.6], vec![0.5, 0.5]]),
            Err(Error::NotNormalized { .. })
        ));
        assert!(matches!(
            Channel::new(vec![vec![1.5, -0.5]]),
            Err(Error::InvalidProbability { .. })
        ));
        assert!(matches!(
            Channel::new(vec![vec![1.0], vec![0.5, 0.5]]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn parse_with_comments() {
        let ch = Channel::parse("# a channel\n0.9 0.1  # row 0\n\n0.2 0.8\n").unwrap();
        assert_eq!(ch.rows(), vec![vec![0.9, 0.1], vec![0.2, 0.8]]);
        let err = Channel::parse("0.9 0.1\n0.3 0.8\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
        assert!(Channel::parse("0.9 abc").is_err());
    }

    #[test]
    fn zero_entries_have_neg_inf_log() {
        let ch = Channel::identity(2).unwrap();
        assert_eq!(ch.ln_prob(0, 1), f64::NEG_INFINITY);
        assert_eq!(ch.ln_prob(0, 0), 0.0);
    }

    #[test]
    fn alphabet_labels() {
        let a = Alphabet::with_labels(vec!["a".into(), "b".into()]).unwrap();
        assert_eq!(a.size(), 2);
        assert_eq!(a.label(1), "b");
        assert_eq!(Alphabet::new(3).unwrap().label(2), "2");
        assert!(Alphabet::new(0).is_err());
    }
}
