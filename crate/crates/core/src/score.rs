//! Archetype × target score matrices and fitted invariant manifolds.

use crate::error::{DaaError, Result};
use crate::scalar::Real;
use crate::train::FitResult;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{Read, Write};

/// Raw `(dissimilarity, complexity)` pairs with their row-normalized scores.
/// Rows are archetypes, columns targets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ScoreMatrix<T> {
    pub archetypes: Vec<String>,
    pub targets: Vec<String>,
    pub dissimilarity: Vec<Vec<T>>,
    pub complexity: Vec<Vec<T>>,
    pub similarity: Vec<Vec<T>>,
    pub simplicity: Vec<Vec<T>>,
}

/// `1 - x / max(row)`; a row whose maximum is zero maps to zeros.
/// Non-finite entries mark failed fits: they score zero and are left out of
/// the maximum.
pub fn row_scores<T: Real>(row: &[T]) -> Vec<T> {
    let max = row.iter().copied().filter(|x| x.is_finite()).fold(T::zero(), T::max);
    row.iter()
        .map(|&x| if max > T::zero() && x.is_finite() { T::one() - x / max } else { T::zero() })
        .collect()
}

impl<T: Real> ScoreMatrix<T> {
    /// Builds the matrix from `(dissimilarity, complexity)` per `(archetype, target)`.
    pub fn from_pairs(
        archetypes: &[String],
        targets: &[String],
        pairs: &BTreeMap<(String, String), (T, T)>,
    ) -> Result<Self> {
        let missing: Vec<(String, String)> = archetypes
            .iter()
            .flat_map(|a| targets.iter().map(move |t| (a.clone(), t.clone())))
            .filter(|k| !pairs.contains_key(k))
            .collect();
        if !missing.is_empty() {
            return Err(DaaError::IncompleteGrid { missing });
        }
        let grid = |pick: fn(&(T, T)) -> T| -> Vec<Vec<T>> {
            archetypes
                .iter()
                .map(|a| targets.iter().map(|t| pick(&pairs[&(a.clone(), t.clone())])).collect())
                .collect()
        };
        let dissimilarity = grid(|p| p.0);
        let complexity = grid(|p| p.1);
        Ok(Self {
            archetypes: archetypes.to_vec(),
            targets: targets.to_vec(),
            similarity: dissimilarity.iter().map(|r| row_scores(r)).collect(),
            simplicity: complexity.iter().map(|r| row_scores(r)).collect(),
            dissimilarity,
            complexity,
        })
    }

    fn target_index(&self, target: &str) -> Result<usize> {
        self.targets
            .iter()
            .position(|t| t == target)
            .ok_or_else(|| DaaError::UnknownName(target.to_string()))
    }

    /// Argmax of similarity in the target's column; ties go to higher
    /// simplicity, then to the earlier archetype.
    pub fn best_archetype(&self, target: &str) -> Result<&str> {
        let j = self.target_index(target)?;
        let mut best = 0;
        for i in 1..self.archetypes.len() {
            let (s, b) = (self.similarity[i][j], self.similarity[best][j]);
            if s > b || (s == b && self.simplicity[i][j] > self.simplicity[best][j]) {
                best = i;
            }
        }
        Ok(&self.archetypes[best])
    }

    /// Long format: `archetype,target,dissimilarity,complexity,similarity,simplicity`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["archetype", "target", "dissimilarity", "complexity", "similarity", "simplicity"])?;
        for (i, a) in self.archetypes.iter().enumerate() {
            for (j, t) in self.targets.iter().enumerate() {
                let cells = [
                    self.dissimilarity[i][j],
                    self.complexity[i][j],
                    self.similarity[i][j],
                    self.simplicity[i][j],
                ]
                .map(|v| format!("{}", v));
                out.write_record([a.as_str(), t.as_str(), &cells[0], &cells[1], &cells[2], &cells[3]])?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Inverse of [`ScoreMatrix::write_csv`]; row and column order follow
    /// first appearance.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let header = rd.headers()?.clone();
        let expected = ["archetype", "target", "dissimilarity", "complexity", "similarity", "simplicity"];
        if header.iter().collect::<Vec<_>>() != expected {
            return Err(DaaError::ParseError {
                line: 1,
                column: "header".into(),
                message: format!("expected {}", expected.join(",")),
            });
        }
        let mut archetypes: Vec<String> = Vec::new();
        let mut targets: Vec<String> = Vec::new();
        let mut cells: BTreeMap<(String, String), [T; 4]> = BTreeMap::new();
        for rec in rd.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            let (a, t) = (rec[0].to_string(), rec[1].to_string());
            let mut vals = [T::zero(); 4];
            for (k, v) in vals.iter_mut().enumerate() {
                let raw = &rec[k + 2];
                *v = raw.trim().parse::<f64>().map(T::lit).map_err(|e| DaaError::ParseError {
                    line,
                    column: expected[k + 2].into(),
                    message: format!("{raw:?}: {e}"),
                })?;
            }
            if !archetypes.contains(&a) {
                archetypes.push(a.clone());
            }
            if !targets.contains(&t) {
                targets.push(t.clone());
            }
            cells.insert((a, t), vals);
        }
        let pick = |k: usize| -> Result<Vec<Vec<T>>> {
            archetypes
                .iter()
                .map(|a| {
                    targets
                        .iter()
                        .map(|t| {
                            cells
                                .get(&(a.clone(), t.clone()))
                                .map(|v| v[k])
                                .ok_or_else(|| DaaError::IncompleteGrid {
                                    missing: vec![(a.clone(), t.clone())],
                                })
                        })
                        .collect()
                })
                .collect()
        };
        Ok(Self {
            dissimilarity: pick(0)?,
            complexity: pick(1)?,
            similarity: pick(2)?,
            simplicity: pick(3)?,
            archetypes,
            targets,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Builds the matrix from completed fits keyed by `(archetype, target)`.
pub fn build_matrix<T: Real>(
    archetypes: &[String],
    targets: &[String],
    fits: &BTreeMap<(String, String), FitResult<T>>,
) -> Result<ScoreMatrix<T>> {
    let pairs = fits
        .iter()
        .map(|(k, f)| (k.clone(), (f.test_mse, f.complexity)))
        .collect();
    ScoreMatrix::from_pairs(archetypes, targets, &pairs)
}

pub fn best_archetype<'a, T: Real>(matrix: &'a ScoreMatrix<T>, target: &str) -> Result<&'a str> {
    matrix.best_archetype(target)
}

/// An archetype's invariant manifold carried into (normalized) target space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MappedManifold<T> {
    pub archetype: String,
    pub target: String,
    pub points: Vec<Vec<T>>,
}

impl<T: Real> MappedManifold<T> {
    /// The same points in the target's original coordinates.
    pub fn denormalized(&self, fit: &FitResult<T>) -> Vec<Vec<T>> {
        self.points
            .iter()
            .map(|p| {
                let mut q = p.clone();
                fit.normalization.invert(&mut q);
                q
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let d = self.points.first().map_or(0, Vec::len);
        let header: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
        writeln!(w, "{}", header.join(","))?;
        for p in &self.points {
            let row: Vec<String> = p.iter().map(|v| format!("{v}")).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// `Φ_θ*` applied to `n_points` samples of the fitted archetype's manifold.
pub fn map_manifold<T: Real>(fit: &FitResult<T>, n_points: usize) -> Result<MappedManifold<T>> {
    let sample = fit.archetype.invariant_manifold(n_points)?;
    let points = sample
        .points
        .iter()
        .map(|p| fit.model.forward(p))
        .collect::<Result<Vec<_>>>()?;
    Ok(MappedManifold {
        archetype: fit.archetype_name.clone(),
        target: fit.target_name.clone(),
        points,
    })
}
