use std::fmt;

use crate::hillclimb::BoxDomain;
use crate::models::InputRange;

use super::MctsError;

/// One cell of the input partition: `indices[i] ∈ 1..=L_i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct Action {
    pub indices: Vec<usize>,
}

impl Action {
    pub fn new(indices: Vec<usize>) -> Self {
        Self { indices }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.indices.iter().map(usize::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// The time-staged input space: `K` control points over `[0, T]`, each
/// taking values in the box `Π I_i`, with `I_i` split into `L_i` cells.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSpace {
    ranges: Vec<InputRange>,
    control_points: usize,
    partitions: Vec<usize>,
    horizon: f64,
}

impl InputSpace {
    pub fn new(
        ranges: Vec<InputRange>,
        control_points: usize,
        partitions: Vec<usize>,
        horizon: f64,
    ) -> Result<Self, MctsError> {
        if ranges.is_empty() {
            return Err(MctsError::InvalidArgument("input space needs at least one dimension".into()));
        }
        if partitions.len() != ranges.len() {
            return Err(MctsError::InvalidArgument(format!(
                "{} partition counts for {} input dimensions",
                partitions.len(),
                ranges.len()
            )));
        }
        if partitions.contains(&0) {
            return Err(MctsError::InvalidArgument("partition counts must be at least 1".into()));
        }
        if control_points == 0 {
            return Err(MctsError::InvalidArgument("need at least one control point".into()));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(MctsError::InvalidArgument(format!("horizon must be positive, got {horizon}")));
        }
        for r in &ranges {
            if !(r.min.is_finite() && r.max.is_finite() && r.min < r.max) {
                return Err(MctsError::InvalidArgument(format!("input `{}` has an empty range", r.name)));
            }
        }
        Ok(Self { ranges, control_points, partitions, horizon })
    }

    pub fn dims(&self) -> usize {
        self.ranges.len()
    }

    pub fn control_points(&self) -> usize {
        self.control_points
    }

    pub fn partitions(&self) -> &[usize] {
        &self.partitions
    }

    pub fn ranges(&self) -> &[InputRange] {
        &self.ranges
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `|A| = Π L_i`.
    pub fn num_actions(&self) -> usize {
        self.partitions.iter().product()
    }

    /// Mixed-radix decoding of an action id in `0..|A|`, first dimension
    /// varying slowest.
    pub fn action(&self, id: usize) -> Action {
        let mut rest = id;
        let mut indices = vec![0; self.dims()];
        for i in (0..self.dims()).rev() {
            indices[i] = rest % self.partitions[i] + 1;
            rest /= self.partitions[i];
        }
        Action { indices }
    }

    pub fn action_id(&self, a: &Action) -> usize {
        a.indices.iter().zip(&self.partitions).fold(0, |acc, (k, l)| acc * l + (k - 1))
    }

    pub fn actions(&self) -> impl Iterator<Item = Action> + '_ {
        (0..self.num_actions()).map(|id| self.action(id))
    }

    pub fn is_valid(&self, a: &Action) -> bool {
        a.indices.len() == self.dims() && a.indices.iter().zip(&self.partitions).all(|(k, l)| (1..=*l).contains(k))
    }

    /// Bounds of cells `k_lo..=k_hi` along dimension `i` (1-based).
    pub(crate) fn cell_span(&self, i: usize, k_lo: usize, k_hi: usize) -> (f64, f64) {
        let r = &self.ranges[i];
        let l = self.partitions[i] as f64;
        let lo = r.min + (k_lo - 1) as f64 / l * r.width();
        let hi = if k_hi == self.partitions[i] { r.max } else { r.min + k_hi as f64 / l * r.width() };
        (lo, hi)
    }

    /// The input region `Reg(a)` of an action.
    pub fn reg(&self, a: &Action) -> BoxDomain {
        assert!(self.is_valid(a), "action {a} outside the partition {:?}", self.partitions);
        BoxDomain::from_intervals((0..self.dims()).map(|i| self.cell_span(i, a.indices[i], a.indices[i])))
            .expect("cells of a valid range are non-degenerate")
    }

    /// The cell containing `u`; points on a shared face go to the upper
    /// cell, and the upper range end belongs to the last cell.
    pub fn cell_of(&self, u: &[f64]) -> Action {
        let indices = (0..self.dims())
            .map(|i| {
                let r = &self.ranges[i];
                let l = self.partitions[i];
                let k = ((u[i] - r.min) / r.width() * l as f64).floor();
                (k.max(0.0) as usize).min(l - 1) + 1
            })
            .collect();
        Action { indices }
    }

    pub fn full_box(&self) -> BoxDomain {
        BoxDomain::from_intervals(self.ranges.iter().map(|r| (r.min, r.max))).expect("validated ranges")
    }

    /// The `K·M`-dimensional search box whose first control points are
    /// confined to `regions` and whose remaining ones range over the full box.
    pub fn playout_domain(&self, regions: &[BoxDomain]) -> BoxDomain {
        assert!(regions.len() <= self.control_points, "more regions than control points");
        let full = self.full_box();
        let mut lo = Vec::with_capacity(self.control_points * self.dims());
        let mut hi = Vec::with_capacity(lo.capacity());
        for k in 0..self.control_points {
            let b = regions.get(k).unwrap_or(&full);
            lo.extend_from_slice(b.lo());
            hi.extend_from_slice(b.hi());
        }
        BoxDomain::new(lo, hi).expect("regions are non-degenerate")
    }

    /// Largest step not exceeding `nominal` that puts every control-point
    /// boundary on the sampling grid.
    pub fn realization_step(&self, nominal: f64) -> f64 {
        let segment = self.horizon / self.control_points as f64;
        let per_segment = (segment / nominal - 1e-9).ceil().max(1.0);
        segment / per_segment
    }
}
