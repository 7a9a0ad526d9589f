/// Worst-case privacy loss against elapsed time `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub d: u64,
    pub loss: f64,
    /// Running maximum of `loss` over this and all earlier points.
    pub envelope: f64,
}

/// Per-`d` losses together with their monotone envelope. Points are kept in
/// strictly increasing `d`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PrivacyLossCurve {
    points: Vec<CurvePoint>,
}

impl PrivacyLossCurve {
    /// Builds a curve from `(d, loss)` pairs; `d` must strictly increase.
    pub fn from_losses(losses: impl IntoIterator<Item = (u64, f64)>) -> Self {
        let mut points: Vec<CurvePoint> = Vec::new();
        let mut running = f64::NEG_INFINITY;
        for (d, loss) in losses {
            if let Some(last) = points.last() {
                assert!(d > last.d, "curve points must have increasing d");
            }
            running = running.max(loss);
            points.push(CurvePoint {
                d,
                loss,
                envelope: running,
            });
        }
        Self { points }
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn find(&self, d: u64) -> Option<&CurvePoint> {
        self.points
            .binary_search_by_key(&d, |p| p.d)
            .ok()
            .map(|i| &self.points[i])
    }

    pub fn loss(&self, d: u64) -> Option<f64> {
        self.find(d).map(|p| p.loss)
    }

    pub fn envelope(&self, d: u64) -> Option<f64> {
        self.find(d).map(|p| p.envelope)
    }

    /// Divides every loss by `epsilon`, giving the expiration function `g`
    /// with `loss = ε·g`.
    pub fn to_expiration_function(&self, epsilon: f64) -> Self {
        Self::from_losses(self.points.iter().map(|p| (p.d, p.loss / epsilon)))
    }

    /// Whether this curve's envelope is at least `other`'s at every shared `d`.
    pub fn dominates(&self, other: &PrivacyLossCurve) -> bool {
        other
            .points
            .iter()
            .all(|p| self.envelope(p.d).is_none_or(|e| e >= p.envelope))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_is_running_max() {
        let c = PrivacyLossCurve::from_losses([(0, 1.0), (1, 3.0), (2, 2.0), (3, 4.0)]);
        let env: Vec<f64> = c.points().iter().map(|p| p.envelope).collect();
        assert_eq!(env, vec![1.0, 3.0, 3.0, 4.0]);
        assert_eq!(c.loss(2), Some(2.0));
        assert_eq!(c.envelope(2), Some(3.0));
        assert_eq!(c.envelope(9), None);
    }

    #[test]
    fn scaling_to_expiration_function() {
        let c = PrivacyLossCurve::from_losses([(0, 0.5), (1, 1.0)]);
        let g = c.to_expiration_function(0.5);
        assert_eq!(g.loss(1), Some(2.0));
    }

    #[test]
    #[should_panic]
    fn rejects_unsorted_points() {
        PrivacyLossCurve::from_losses([(1, 1.0), (0, 1.0)]);
    }
}
