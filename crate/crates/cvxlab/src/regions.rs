//! Region grammar for scans: `cube:S`, `polydisc:R`, `ball:<space>`.

use cvxlab_core::domains::{self, DomainSpec};
use cvxlab_core::pshlab::{BoxRegion, Region};
use cvxlab_core::{CVec, Result, Space, SpaceSpec};
use num_complex::Complex64;

pub type BoxedRegion = Box<dyn Region + Send + Sync>;

/// Polydisc `{|z_k| < R}` with exact disc radii.
pub struct Polydisc {
    radius: f64,
    bounds: BoxRegion,
}

impl Polydisc {
    pub fn new(n: usize, radius: f64) -> Result<Self> {
        Ok(Polydisc { radius, bounds: BoxRegion::cube(n, radius)? })
    }
}

impl Region for Polydisc {
    fn dim(&self) -> usize {
        self.bounds.dim()
    }
    fn bounds(&self) -> (&[f64], &[f64]) {
        self.bounds.bounds()
    }
    fn contains(&self, z: &[Complex64]) -> bool {
        z.iter().all(|w| w.norm() < self.radius)
    }
    fn disc_radius(&self, a: &[Complex64], b: &[Complex64]) -> Option<Result<f64>> {
        // |a_k + w b_k| ≤ |a_k| + r|b_k| < R for all |w| ≤ r, with equality attained.
        let r = a
            .iter()
            .zip(b)
            .filter(|(_, y)| y.norm() > 0.0)
            .map(|(x, y)| (self.radius - x.norm()) / y.norm())
            .fold(f64::INFINITY, f64::min);
        Some(Ok(r.max(0.0)))
    }
}

/// A ball domain seen as a region, using the domain's disc radius.
pub struct Ball(pub DomainSpec);

impl Region for Ball {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn bounds(&self) -> (&[f64], &[f64]) {
        self.0.bounds.bounds()
    }
    fn contains(&self, z: &[Complex64]) -> bool {
        self.0.rho(z) < 0.0
    }
    fn disc_radius(&self, a: &[Complex64], b: &[Complex64]) -> Option<Result<f64>> {
        Some(domains::disc_radius(&self.0, &CVec::new(a.to_vec()), &CVec::new(b.to_vec())))
    }
}

/// Parses a region for functions of `dim` complex variables; `radius`
/// scales `ball:` regions.
pub fn parse(text: &str, dim: usize, radius: f64) -> std::result::Result<BoxedRegion, String> {
    let err = |e: cvxlab_core::Error| e.to_string();
    let num = |t: &str| t.parse::<f64>().map_err(|_| format!("cannot parse region `{text}`"));
    if let Some(rest) = text.strip_prefix("ball:") {
        let spec: SpaceSpec = rest.parse().map_err(err)?;
        let space = Space::new(spec).map_err(err)?;
        if space.dim() != dim {
            return Err(format!("region `{text}` has dimension {}, function has {dim}", space.dim()));
        }
        return Ok(Box::new(Ball(DomainSpec::ball(&space, radius, None).map_err(err)?)));
    }
    match text.split_once(':') {
        Some(("cube", s)) => Ok(Box::new(BoxRegion::cube(dim, num(s)?).map_err(err)?)),
        Some(("polydisc", r)) => Ok(Box::new(Polydisc::new(dim, num(r)?).map_err(err)?)),
        _ => Err(format!("cannot parse region `{text}` (expected cube:S, polydisc:R or ball:<space>)")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polydisc_radius_is_exact() {
        let p = Polydisc::new(2, 1.0).unwrap();
        let a = [Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.0)];
        let b = [Complex64::new(0.0, 1.0), Complex64::new(0.25, 0.0)];
        let r = p.disc_radius(&a, &b).unwrap().unwrap();
        assert!((r - 0.5).abs() < 1e-15);
    }

    #[test]
    fn grammar() {
        assert_eq!(parse("cube:2", 2, 1.0).unwrap().dim(), 2);
        assert_eq!(parse("ball:lp:1:2", 2, 1.0).unwrap().dim(), 2);
        assert!(parse("ball:lp:1:3", 2, 1.0).is_err());
        assert!(parse("sphere:1", 2, 1.0).is_err());
        let ball = parse("ball:lp:2:2", 2, 1.0).unwrap();
        assert!(ball.contains(&[Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.5)]));
        assert!(!ball.contains(&[Complex64::new(0.8, 0.0), Complex64::new(0.0, 0.8)]));
    }
}
