//! Finite metric spaces, the product 1-metric, Hausdorff distance to a
//! subset, greedy ε-nets, exact Gromov–Hausdorff distance for small spaces,
//! and the Baire space metric on finite prefixes.

use crate::error::{Error, Result};

/// Triangle-inequality slack accepted when validating distance matrices.
pub const TRIANGLE_TOL: f64 = 1e-12;

/// Largest `|X|·|Y|` for which [`gh_bruteforce`] enumerates correspondences.
pub const GH_CAPACITY: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricSpace {
    labels: Vec<String>,
    dist: Vec<Vec<f64>>,
}

impl FiniteMetricSpace {
    pub fn new(labels: Vec<String>, dist: Vec<Vec<f64>>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::Validation("metric space has no points".into()));
        }
        if dist.len() != n || dist.iter().any(|r| r.len() != n) {
            return Err(Error::Validation(format!(
                "distance matrix must be {n}x{n}"
            )));
        }
        for i in 0..n {
            if labels[..i].contains(&labels[i]) {
                return Err(Error::Validation(format!(
                    "duplicate label {:?}",
                    labels[i]
                )));
            }
            if dist[i][i] != 0.0 {
                return Err(Error::Validation(format!(
                    "d({0},{0}) must be 0",
                    labels[i]
                )));
            }
            for j in 0..n {
                let d = dist[i][j];
                if !d.is_finite() {
                    return Err(Error::Validation(format!(
                        "d({},{}) is not finite",
                        labels[i], labels[j]
                    )));
                }
                if d != dist[j][i] {
                    return Err(Error::Validation(format!(
                        "distance not symmetric at ({}, {})",
                        labels[i], labels[j]
                    )));
                }
                if i != j && !(d > 0.0) {
                    return Err(Error::Validation(format!(
                        "d({},{}) must be positive",
                        labels[i], labels[j]
                    )));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if dist[i][k] > dist[i][j] + dist[j][k] + TRIANGLE_TOL {
                        return Err(Error::Validation(format!(
                            "triangle inequality violated for ({}, {}, {})",
                            labels[i], labels[j], labels[k]
                        )));
                    }
                }
            }
        }
        Ok(FiniteMetricSpace { labels, dist })
    }

    /// Points labelled `0, 1, …` at the given positions on the real line.
    pub fn on_line(points: &[f64]) -> Result<Self> {
        let labels = (0..points.len()).map(|i| i.to_string()).collect();
        let dist = points
            .iter()
            .map(|a| points.iter().map(|b| (a - b).abs()).collect())
            .collect();
        Self::new(labels, dist)
    }

    pub fn single_point() -> Self {
        FiniteMetricSpace {
            labels: vec!["x".into()],
            dist: vec![vec![0.0]],
        }
    }

    /// Two points at distance `d`.
    pub fn two_point(d: f64) -> Result<Self> {
        Self::new(
            vec!["p".into(), "q".into()],
            vec![vec![0.0, d], vec![d, 0.0]],
        )
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn distances(&self) -> &[Vec<f64>] {
        &self.dist
    }

    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i][j]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::Domain(format!("unknown point {label:?}")))
    }

    pub fn diameter(&self) -> f64 {
        self.dist
            .iter()
            .flat_map(|r| r.iter().copied())
            .fold(0.0, f64::max)
    }

    /// Subspace on the given point indices, in the given order.
    pub fn restrict(&self, subset: &[usize]) -> Result<Self> {
        if subset.is_empty() {
            return Err(Error::Domain("empty subset".into()));
        }
        if let Some(&bad) = subset.iter().find(|&&i| i >= self.len()) {
            return Err(Error::Range(format!("point index {bad} out of range")));
        }
        Ok(FiniteMetricSpace {
            labels: subset.iter().map(|&i| self.labels[i].clone()).collect(),
            dist: subset
                .iter()
                .map(|&i| subset.iter().map(|&j| self.dist[i][j]).collect())
                .collect(),
        })
    }

    /// Slope seminorm `max_{x≠y} |f(x) − f(y)| / d(x,y)` of a real function.
    pub fn lipschitz_constant(&self, f: &[f64]) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                best = best.max((f[i] - f[j]).abs() / self.dist[i][j]);
            }
        }
        best
    }
}

/// `X × Y` with `d((x1,y1),(x2,y2)) = d_X(x1,x2) + d_Y(y1,y2)`; point `(i, j)`
/// sits at index `i·|Y| + j`.
pub fn product_1_metric(x: &FiniteMetricSpace, y: &FiniteMetricSpace) -> FiniteMetricSpace {
    let (nx, ny) = (x.len(), y.len());
    let mut labels = Vec::with_capacity(nx * ny);
    for a in x.labels() {
        for b in y.labels() {
            labels.push(format!("({a},{b})"));
        }
    }
    let dist = (0..nx * ny)
        .map(|p| {
            (0..nx * ny)
                .map(|q| x.d(p / ny, q / ny) + y.d(p % ny, q % ny))
                .collect()
        })
        .collect();
    let out = FiniteMetricSpace { labels, dist };
    debug_assert_eq!(out.diameter(), x.diameter() + y.diameter());
    out
}

/// `max_{p ∈ X} min_{s ∈ S} d(p, s)`.
pub fn hausdorff_subset(x: &FiniteMetricSpace, subset: &[usize]) -> Result<f64> {
    if subset.is_empty() {
        return Err(Error::Domain(
            "Hausdorff distance to the empty subset".into(),
        ));
    }
    if let Some(&bad) = subset.iter().find(|&&i| i >= x.len()) {
        return Err(Error::Range(format!("point index {bad} out of range")));
    }
    Ok((0..x.len())
        .map(|p| {
            subset
                .iter()
                .map(|&s| x.d(p, s))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max))
}

/// Farthest-point ε-net starting from the first point; ties go to the lowest index.
pub fn greedy_net(x: &FiniteMetricSpace, eps: f64) -> Result<Vec<usize>> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!(
            "net radius must be positive, got {eps}"
        )));
    }
    let mut net = vec![0usize];
    let mut gap: Vec<f64> = (0..x.len()).map(|p| x.d(p, 0)).collect();
    loop {
        let (far, &worst) = gap
            .iter()
            .enumerate()
            .fold((0, &f64::NEG_INFINITY), |acc, (i, g)| {
                if *g > *acc.1 {
                    (i, g)
                } else {
                    acc
                }
            });
        if worst <= eps {
            return Ok(net);
        }
        net.push(far);
        for (p, g) in gap.iter_mut().enumerate() {
            *g = g.min(x.d(p, far));
        }
    }
}

/// Exact Gromov–Hausdorff distance: half the least distortion over all
/// correspondences, by enumeration of relations `R ⊆ X × Y`.
pub fn gh_bruteforce(x: &FiniteMetricSpace, y: &FiniteMetricSpace) -> Result<f64> {
    let (nx, ny) = (x.len(), y.len());
    let cells = nx * ny;
    if cells > GH_CAPACITY {
        return Err(Error::Capacity(format!(
            "|X|·|Y| = {cells} exceeds {GH_CAPACITY}; use a Hausdorff-distance upper bound against a subset (net) instead"
        )));
    }
    let cell_dist: Vec<Vec<f64>> = (0..cells)
        .map(|p| {
            (0..cells)
                .map(|q| (x.d(p / ny, q / ny) - y.d(p % ny, q % ny)).abs())
                .collect()
        })
        .collect();
    let full_x = (1u32 << nx) - 1;
    let full_y = (1u32 << ny) - 1;
    let mut best = f64::INFINITY;
    let mut members = Vec::with_capacity(cells);
    for mask in 1u32..(1u32 << cells) {
        let (mut cover_x, mut cover_y) = (0u32, 0u32);
        members.clear();
        for c in 0..cells {
            if mask & (1 << c) != 0 {
                cover_x |= 1 << (c / ny);
                cover_y |= 1 << (c % ny);
                members.push(c);
            }
        }
        if cover_x != full_x || cover_y != full_y {
            continue;
        }
        let mut dis = 0.0f64;
        'outer: for (k, &p) in members.iter().enumerate() {
            for &q in &members[k + 1..] {
                dis = dis.max(cell_dist[p][q]);
                if dis >= best {
                    break 'outer;
                }
            }
        }
        best = best.min(dis);
    }
    Ok(best / 2.0)
}

/// Finite prefix of an element of the Baire space.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BaireSeq(Vec<u64>);

impl BaireSeq {
    pub fn new(entries: Vec<u64>) -> Result<Self> {
        if let Some(i) = entries.iter().position(|&e| e == 0) {
            return Err(Error::Domain(format!(
                "Baire sequence entry {i} must be >= 1"
            )));
        }
        Ok(BaireSeq(entries))
    }

    pub fn entries(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the first disagreement, `None` when equal.
    pub fn first_disagreement(&self, other: &BaireSeq) -> Result<Option<usize>> {
        if self.len() != other.len() {
            return Err(Error::Domain(format!(
                "Baire prefixes have different lengths {} and {}",
                self.len(),
                other.len()
            )));
        }
        Ok(self.0.iter().zip(&other.0).position(|(a, b)| a != b))
    }
}

impl std::str::FromStr for BaireSeq {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let entries = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u64>()
                    .map_err(|e| Error::Parse(format!("bad sequence entry {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        BaireSeq::new(entries)
    }
}

/// `0` if equal, else `2^{-m}` with `m` the first index of disagreement.
pub fn baire_distance(a: &BaireSeq, b: &BaireSeq) -> Result<f64> {
    Ok(match a.first_disagreement(b)? {
        None => 0.0,
        Some(m) => 0.5f64.powi(m as i32),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_broken_triangle() {
        let err = FiniteMetricSpace::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![
                vec![0.0, 1.0, 3.0],
                vec![1.0, 0.0, 1.0],
                vec![3.0, 1.0, 0.0],
            ],
        )
        .unwrap_err();
        assert!(err
            .to_string()
            .contains("triangle inequality violated for (a, b, c)"));
    }

    #[test]
    fn product_examples() {
        let y = FiniteMetricSpace::on_line(&[0.0, 1.0, 2.5]).unwrap();
        let p = product_1_metric(&FiniteMetricSpace::single_point(), &y);
        assert_eq!(p.distances(), y.distances());
        let q = product_1_metric(
            &FiniteMetricSpace::two_point(1.0).unwrap(),
            &FiniteMetricSpace::two_point(2.0).unwrap(),
        );
        assert_eq!(q.diameter(), 3.0);
        assert_eq!(q.d(3, 3), 0.0);
        assert!(FiniteMetricSpace::new(q.labels().to_vec(), q.distances().to_vec()).is_ok());
    }

    #[test]
    fn hausdorff_examples() {
        let line = FiniteMetricSpace::on_line(&[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(hausdorff_subset(&line, &[0, 1, 2]).unwrap(), 0.0);
        assert_eq!(hausdorff_subset(&line, &[0, 2]).unwrap(), 1.0);
        let two = FiniteMetricSpace::two_point(4.0).unwrap();
        assert_eq!(hausdorff_subset(&two, &[1]).unwrap(), 4.0);
        assert_eq!(hausdorff_subset(&two, &[]).unwrap_err().code(), "domain");
    }

    #[test]
    fn greedy_net_examples() {
        let line = FiniteMetricSpace::on_line(&[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(greedy_net(&line, 2.0).unwrap(), vec![0]);
        // Exhaustive oracle: no 2-subset of {0,1,2} is a 0.4-net.
        for s in [[0, 1], [0, 2], [1, 2]] {
            assert!(hausdorff_subset(&line, &s).unwrap() > 0.4);
        }
        let mut net = greedy_net(&line, 0.4).unwrap();
        net.sort();
        assert_eq!(net, vec![0, 1, 2]);
        let two = FiniteMetricSpace::two_point(1.0).unwrap();
        assert_eq!(greedy_net(&two, 0.999).unwrap().len(), 2);
        assert!(greedy_net(&two, 0.0).is_err());
    }

    #[test]
    fn gh_examples() {
        let x = FiniteMetricSpace::on_line(&[0.0, 1.0, 3.0]).unwrap();
        assert_eq!(gh_bruteforce(&x, &x.clone()).unwrap(), 0.0);
        let pt = FiniteMetricSpace::single_point();
        let pair = FiniteMetricSpace::two_point(2.5).unwrap();
        assert_eq!(gh_bruteforce(&pt, &pair).unwrap(), 1.25);
        let a = FiniteMetricSpace::two_point(1.0).unwrap();
        let b = FiniteMetricSpace::two_point(3.0).unwrap();
        assert_eq!(gh_bruteforce(&a, &b).unwrap(), 1.0);
        let big = FiniteMetricSpace::on_line(&[0.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(gh_bruteforce(&big, &big).unwrap_err().code(), "capacity");
    }

    #[test]
    fn baire_examples() {
        let a: BaireSeq = "1,2,3".parse().unwrap();
        let b: BaireSeq = "1,2,4".parse().unwrap();
        let c: BaireSeq = "2,2,3".parse().unwrap();
        assert_eq!(baire_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(baire_distance(&a, &c).unwrap(), 1.0);
        assert_eq!(baire_distance(&a, &b).unwrap(), 0.25);
        let short: BaireSeq = "1,2".parse().unwrap();
        assert_eq!(baire_distance(&a, &short).unwrap_err().code(), "domain");
        assert!(BaireSeq::new(vec![1, 0]).is_err());
    }
}
