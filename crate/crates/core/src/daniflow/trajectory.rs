use crate::ffield::LaurentSeries;
use crate::lattice::{LatticeBasis, LatticeError};

use super::{unipotent_lattice, DaniError, FlowSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeltaPoint {
    pub t: i64,
    pub delta: i64,
    pub certified: bool,
}

/// Precision (last known index of `A`) that certifies `Δ(g_t Λ_A)` for `t ≤ horizon`.
pub fn recommended_precision(spec: &FlowSpec, horizon: i64) -> i64 {
    spec.rank() as i64 * horizon.max(0) + 2
}

/// `Δ(g_t Λ)` along integer times, advancing one step at a time.
///
/// The basis is kept reduced with honest precision windows; each step scales
/// the rows by `g_1` and re-reduces. Windows widen pessimistically along the
/// way, so once a step cannot be decided in the window the trajectory
/// switches to reducing the polynomial part of `g_t Λ` from scratch, which
/// is certified or rejected on its own.
pub struct Trajectory {
    spec: FlowSpec,
    origin: LatticeBasis,
    basis: Option<LatticeBasis>,
    step: Vec<i64>,
    t: i64,
    delta: i64,
}

impl Trajectory {
    pub fn new(lattice: &LatticeBasis, spec: &FlowSpec) -> Result<Self, DaniError> {
        let mut traj = Trajectory {
            spec: spec.clone(),
            origin: lattice.clone(),
            basis: Some(lattice.clone()),
            step: spec.exponents(1),
            t: 0,
            delta: 0,
        };
        traj.delta = traj.settle()?;
        Ok(traj)
    }

    pub fn time(&self) -> i64 {
        self.t
    }

    pub fn delta(&self) -> i64 {
        self.delta
    }

    /// The window-reduced basis of `g_t Λ`, while the incremental route is alive.
    pub fn basis(&self) -> Option<&LatticeBasis> {
        self.basis.as_ref()
    }

    /// Moves to `t + 1` and returns `Δ` there.
    pub fn advance(&mut self) -> Result<i64, DaniError> {
        if let Some(b) = self.basis.as_mut() {
            b.scale_rows_in_place(&self.step);
        }
        self.t += 1;
        self.delta = self.settle()?;
        Ok(self.delta)
    }

    pub fn advance_to(&mut self, t: i64) -> Result<i64, DaniError> {
        while self.t < t {
            self.advance()?;
        }
        Ok(self.delta)
    }

    fn settle(&mut self) -> Result<i64, DaniError> {
        if let Some(b) = self.basis.as_mut() {
            match b.reduce_in_window_in_place() {
                Ok(deg) => return Ok(-deg.iter().min().copied().unwrap_or(0)),
                Err(LatticeError::Indeterminate { .. }) => self.basis = None,
                Err(e) => return Err(e.into()),
            }
        }
        let flowed = self.origin.scale_rows(&self.spec.exponents(self.t));
        match flowed.delta() {
            Ok(d) => Ok(d.value),
            Err(LatticeError::Uncertified { .. } | LatticeError::Indeterminate { .. }) => {
                Err(DaniError::Certification {
                    t: self.t,
                    needed_precision: recommended_precision(&self.spec, self.t),
                })
            }
            Err(e) => Err(e.into()),
        }
    }
}

/// `Δ(g_t Λ_A)` for `t = 1..=horizon`.
pub fn delta_trajectory(
    a: &[Vec<LaurentSeries>],
    spec: &FlowSpec,
    horizon: i64,
) -> Result<Vec<DeltaPoint>, DaniError> {
    let lattice = unipotent_lattice(a, spec)?;
    let mut traj = Trajectory::new(&lattice, spec)?;
    let mut out = Vec::with_capacity(horizon.max(0) as usize);
    for _ in 0..horizon {
        let delta = traj.advance()?;
        out.push(DeltaPoint { t: traj.time(), delta, certified: true });
    }
    Ok(out)
}

/// CSV with a schema line, then `t,delta,certified`.
pub fn trajectory_csv(points: &[DeltaPoint]) -> String {
    let mut s = String::from("# ffdyn-trajectory v1\nt,delta,certified\n");
    for p in points {
        s.push_str(&format!("{},{},{}\n", p.t, p.delta, p.certified));
    }
    s
}
