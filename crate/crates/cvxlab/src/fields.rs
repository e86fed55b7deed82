//! Named test functions for the `psh` and `domain` commands.

use cvxlab_core::{Field, FnField, Smoothness, Space, SpaceSpec};
use num_complex::Complex64;

pub type BoxedField = Box<dyn Field + Send + Sync>;

pub const NAMES: &str = "norm2sq, neg_norm2sq, exp_norm2sq, re_z1, abs_re_z1, abs_z1z2, log_abs_z1, norm:<space>";

fn norm2(z: &[Complex64]) -> f64 {
    z.iter().map(|w| w.norm_sqr()).sum()
}

fn boxed<F>(dim: usize, hint: Smoothness, f: F) -> BoxedField
where
    F: Fn(&[Complex64]) -> f64 + Send + Sync + 'static,
{
    Box::new(FnField::new(dim, f).with_hint(hint))
}

/// Looks up `name`; `dim` is the number of complex variables, ignored for
/// `norm:<space>` which takes the space's dimension.
pub fn named(name: &str, dim: usize) -> Result<BoxedField, String> {
    if let Some(space) = name.strip_prefix("norm:") {
        let spec: SpaceSpec = space.parse().map_err(|e| format!("{e}"))?;
        let s = Space::new(spec).map_err(|e| format!("{e}"))?;
        let n = s.dim();
        return Ok(boxed(n, Smoothness::Lipschitz, move |z| {
            s.norm(&cvxlab_core::CVec::new(z.to_vec())).unwrap_or(f64::NAN)
        }));
    }
    if dim == 0 {
        return Err("function dimension must be at least 1".into());
    }
    let f = match name {
        "norm2sq" => boxed(dim, Smoothness::C2, norm2),
        "neg_norm2sq" => boxed(dim, Smoothness::C2, |z| -norm2(z)),
        "exp_norm2sq" => boxed(dim, Smoothness::C2, |z| norm2(z).exp()),
        "re_z1" => boxed(dim, Smoothness::C2, |z| z[0].re),
        "abs_re_z1" => boxed(dim, Smoothness::Lipschitz, |z| z[0].re.abs()),
        "abs_z1z2" if dim >= 2 => boxed(dim, Smoothness::Lipschitz, |z| (z[0] * z[1]).norm()),
        "abs_z1z2" => return Err("abs_z1z2 needs dim >= 2".into()),
        "log_abs_z1" => boxed(dim, Smoothness::Usc, |z| {
            let r = z[0].norm();
            if r == 0.0 {
                f64::NEG_INFINITY
            } else {
                r.ln()
            }
        }),
        _ => return Err(format!("unknown function `{name}` (known: {NAMES})")),
    };
    Ok(f)
}
