use vecbal::adversaries::{IidDistribution, SourceKind};
use vecbal::io::read_vector_stream;

use crate::args::{DistArg, KindArg, SourceArgs};
use crate::output::Report;
use crate::{invalid, open, Result};

/// A resolved source: what to generate and at which size.
pub struct Source {
    pub kind: SourceKind,
    pub n: usize,
    pub t: usize,
    pub label: String,
}

impl Source {
    pub fn describe(&self, r: &mut Report) {
        r.meta("source", &self.label);
        r.meta("n", self.n);
        r.meta("t", self.t);
    }

    /// Uniform-cube vectors carry a 1/√n factor; reported norms are in those units.
    pub fn unscaled_factor(&self) -> Option<f64> {
        matches!(self.kind, SourceKind::Iid(IidDistribution::UniformCube)).then(|| (self.n as f64).sqrt())
    }
}

pub fn resolve(a: &SourceArgs) -> Result<Source> {
    if let Some(path) = &a.input {
        let (n, vectors) = read_vector_stream(open(path)?)?;
        if n == 0 {
            return Err(invalid(format!("{}: dimension must be positive", path.display())));
        }
        let t = vectors.len();
        return Ok(Source {
            kind: SourceKind::FixedList(vectors),
            n,
            t,
            label: format!("file {}", path.display()),
        });
    }
    let kind = a.kind.ok_or_else(|| invalid("give either --input FILE or --kind with --n and --t"))?;
    let n = a.n.ok_or_else(|| invalid("--n is required with --kind"))?;
    let t = a.t.ok_or_else(|| invalid("--t is required with --kind"))?;
    if kind != KindArg::Sparse && a.s.is_some() {
        return Err(invalid("--s only applies to --kind sparse"));
    }
    let (kind, label) = match kind {
        KindArg::RepeatedBasis => (SourceKind::RepeatedBasis, "repeated-basis".to_string()),
        KindArg::Iid => match a.distribution {
            DistArg::UniformSphere => (SourceKind::Iid(IidDistribution::UniformSphere), "iid uniform-sphere".into()),
            DistArg::UniformCube => (SourceKind::Iid(IidDistribution::UniformCube), "iid uniform-cube".into()),
        },
        KindArg::Sparse => {
            let s = a.s.ok_or_else(|| invalid("--s is required with --kind sparse"))?;
            (SourceKind::SparseRandom { s }, format!("sparse s={s}"))
        }
        KindArg::AdaptiveOrthogonal => (SourceKind::AdaptiveOrthogonal, "adaptive-orthogonal".to_string()),
    };
    Ok(Source { kind, n, t, label })
}
