use crate::OracleError;

/// Tensor grid with successive zoom around the incumbent.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    /// Points per dimension on each level.
    pub resolution: usize,
    pub levels: usize,
    /// Factor by which the box shrinks per level.
    pub shrink: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            resolution: 33,
            levels: 40,
            shrink: 4.0,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), OracleError> {
        if self.resolution < 16 {
            return Err(OracleError::Grid(format!(
                "resolution {} is below 16 points per dimension",
                self.resolution
            )));
        }
        if !(self.shrink >= 4.0) {
            return Err(OracleError::Grid(format!("shrink {} is below 4", self.shrink)));
        }
        Ok(())
    }
}

/// Minimizes `f` over the box `bounds`; `f` returns `None` outside its
/// domain. Each level samples `resolution` points per dimension, recenters on
/// the best sample and shrinks the box, clipped to the original bounds.
pub fn grid_minimize<F>(bounds: &[[f64; 2]], spec: &GridSpec, f: F) -> Result<Vec<f64>, OracleError>
where
    F: Fn(&[f64]) -> Option<f64>,
{
    spec.validate()?;
    let dim = bounds.len();
    let mut lo: Vec<f64> = bounds.iter().map(|b| b[0]).collect();
    let mut hi: Vec<f64> = bounds.iter().map(|b| b[1]).collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let r = spec.resolution;
    let mut x = vec![0.0; dim];
    for _ in 0..spec.levels {
        let mut idx = vec![0usize; dim];
        'outer: loop {
            for d in 0..dim {
                x[d] = lo[d] + (hi[d] - lo[d]) * idx[d] as f64 / (r - 1) as f64;
            }
            if let Some(v) = f(&x) {
                if best.as_ref().is_none_or(|(b, _)| v < *b) {
                    best = Some((v, x.clone()));
                }
            }
            for d in 0..dim {
                idx[d] += 1;
                if idx[d] < r {
                    continue 'outer;
                }
                idx[d] = 0;
            }
            break;
        }
        let Some((_, center)) = &best else {
            return Err(OracleError::Grid("no feasible grid point".into()));
        };
        for d in 0..dim {
            let half = (hi[d] - lo[d]) / (2.0 * spec.shrink);
            lo[d] = (center[d] - half).max(bounds[d][0]);
            hi[d] = (center[d] + half).min(bounds[d][1]);
        }
    }
    Ok(best.expect("at least one level ran").1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_quadratic_minimum() {
        let x = grid_minimize(&[[-10.0, 10.0], [-3.0, 7.0]], &GridSpec::default(), |x| {
            Some((x[0] - 1.234567).powi(2) + 3.0 * (x[1] + 2.5).powi(2))
        })
        .unwrap();
        assert!((x[0] - 1.234567).abs() < 1e-9);
        assert!((x[1] + 2.5).abs() < 1e-9);
    }

    #[test]
    fn rejects_coarse_grid() {
        let spec = GridSpec {
            resolution: 8,
            ..GridSpec::default()
        };
        assert!(grid_minimize(&[[0.0, 1.0]], &spec, |_| Some(0.0)).is_err());
    }
}
