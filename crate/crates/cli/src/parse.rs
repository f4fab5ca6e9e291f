//! Text forms for domains, weights, objectives and numeric grids.

use std::fs;

use anyhow::{anyhow, bail, Context, Result};
use steklov::curve_bem::{Curve, CurveWeight};
use steklov::exact_dtn::Domain;
use steklov::functionals::FunctionalSpec;
use steklov::optimize::Objective;
use steklov::trace::{BoundaryWeight, TrigPolynomial, WeightRepresentation};
use steklov::{CurveF64, DomainF64, TrigPoly, Weight};

/// A domain handled either by the exact Fourier solver or by the boundary integral solver.
#[derive(Clone, Debug)]
pub enum Target {
    Exact(DomainF64),
    Curve(CurveF64),
}

impl Target {
    pub fn components(&self) -> usize {
        match self {
            Target::Exact(d) => d.boundary_components(),
            Target::Curve(_) => 1,
        }
    }

    pub fn exact(&self) -> Result<&DomainF64> {
        match self {
            Target::Exact(d) => Ok(d),
            Target::Curve(_) => bail!("this command needs a disk, annulus or Moebius band"),
        }
    }
}

fn number(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().with_context(|| format!("not a number: {s:?}"))
}

/// Comma-separated numbers.
pub fn numbers(s: &str) -> Result<Vec<f64>> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(number).collect()
}

/// Comma list, or an inclusive range `start:stop:step`.
pub fn grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [a, b, h] => {
            let (a, b, h) = (number(a)?, number(b)?, number(h)?);
            if !(h > 0.0) || b < a {
                bail!("range {s:?} needs start ≤ stop and a positive step");
            }
            let n = ((b - a) / h + 1e-9).floor() as usize;
            // Rounded to 12 digits so 0.1 steps print cleanly.
            Ok((0..=n).map(|i| ((a + i as f64 * h) * 1e12).round() / 1e12).collect())
        }
        [_] => numbers(s),
        _ => bail!("grid {s:?} is neither a list nor start:stop:step"),
    }
}

pub fn usizes(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<usize>().with_context(|| format!("not an integer: {t:?}")))
        .collect()
}

fn split_kind(s: &str) -> (&str, &str) {
    match s.split_once(':') {
        Some((k, v)) => (k.trim(), v.trim()),
        None => (s.trim(), ""),
    }
}

/// `disk`, `annulus:ρ`, `moebius:ε`, `circle:r`, `ellipse:q` or `curve:file.json`.
pub fn target(s: &str) -> Result<Target> {
    let (kind, arg) = split_kind(s);
    let t = match kind {
        "disk" => Target::Exact(Domain::Disk),
        "annulus" => Target::Exact(Domain::Annulus { rho: number(arg)? }),
        "moebius" | "mobius" => Target::Exact(Domain::Moebius { eps: number(arg)? }),
        "circle" => Target::Curve(Curve::Circle { radius: number(arg)? }),
        "ellipse" => Target::Curve(Curve::Ellipse { q: number(arg)? }),
        "curve" => {
            let text = fs::read_to_string(arg).with_context(|| format!("reading curve file {arg}"))?;
            Target::Curve(serde_json::from_str(&text).context("curve file is not a Curve JSON object")?)
        }
        _ => bail!("unknown domain {s:?}"),
    };
    match &t {
        Target::Exact(d) => d.validate()?,
        Target::Curve(c) => c.validate()?,
    }
    Ok(t)
}

#[derive(Clone)]
enum Piece {
    Const(f64),
    Poly(WeightRepresentation, TrigPoly),
}

fn coefficients(arg: &str) -> Result<TrigPoly> {
    let c = numbers(arg)?;
    if c.len() % 2 == 0 {
        bail!("interleaved coefficients need odd length (a0, cos1, sin1, ...), got {}", c.len());
    }
    Ok(TrigPolynomial::from_interleaved(&c))
}

fn piece(s: &str) -> Result<Piece> {
    let (kind, arg) = split_kind(s);
    Ok(match kind {
        "const" => Piece::Const(number(arg)?),
        "fourier" => Piece::Poly(WeightRepresentation::Direct, coefficients(arg)?),
        "log-fourier" => Piece::Poly(WeightRepresentation::Log, coefficients(arg)?),
        "file" => {
            let text = fs::read_to_string(arg).with_context(|| format!("reading weight file {arg}"))?;
            let poly: TrigPoly = serde_json::from_str(&text).context("weight file is not a TrigPolynomial")?;
            Piece::Poly(WeightRepresentation::Direct, poly)
        }
        _ => bail!("unknown weight component {s:?}"),
    })
}

/// Density on each boundary circle; components are separated by `|`. A whole
/// `BoundaryWeight` JSON file is accepted as `weight-file:path`.
pub fn weight(s: &str, components: usize) -> Result<Weight> {
    let (kind, arg) = split_kind(s);
    if kind == "weight-file" {
        let text = fs::read_to_string(arg).with_context(|| format!("reading weight file {arg}"))?;
        let w: Weight = serde_json::from_str(&text).context("not a BoundaryWeight JSON object")?;
        check_count(w.component_count(), components)?;
        return Ok(w);
    }
    let mut pieces = s.split('|').map(piece).collect::<Result<Vec<_>>>()?;
    if pieces.len() == 1 && components > 1 {
        if let Piece::Const(c) = pieces[0] {
            pieces = vec![Piece::Const(c); components];
        }
    }
    check_count(pieces.len(), components)?;
    let log = pieces.iter().any(|p| matches!(p, Piece::Poly(WeightRepresentation::Log, _)));
    let direct = pieces.iter().any(|p| matches!(p, Piece::Poly(WeightRepresentation::Direct, _)));
    if log && direct {
        bail!("cannot mix fourier and log-fourier components");
    }
    let polys = pieces
        .into_iter()
        .map(|p| match p {
            Piece::Const(c) if !(c > 0.0) => Err(anyhow!("constant density must be positive, got {c}")),
            Piece::Const(c) if log => Ok(TrigPolynomial::constant(c.ln())),
            Piece::Const(c) => Ok(TrigPolynomial::constant(c)),
            Piece::Poly(_, p) => Ok(p),
        })
        .collect::<Result<Vec<_>>>()?;
    let w = if log { BoundaryWeight::log(polys) } else { BoundaryWeight::direct(polys) };
    w.validate()?;
    Ok(w)
}

fn check_count(got: usize, want: usize) -> Result<()> {
    if got != want {
        bail!("weight has {got} component(s) but the domain has {want} boundary circle(s)");
    }
    Ok(())
}

/// Density on a curve: `const:c`, `fourier:...`, `log-fourier:...`, `critical`
/// (ellipse only) or `file:` with a `CurveWeight` JSON object.
pub fn curve_weight(s: &str, curve: &CurveF64) -> Result<CurveWeight<f64>> {
    let (kind, arg) = split_kind(s);
    Ok(match kind {
        "const" => {
            let c = number(arg)?;
            if !(c > 0.0) {
                bail!("constant density must be positive, got {c}");
            }
            if c == 1.0 {
                CurveWeight::Uniform
            } else {
                CurveWeight::Fourier { beta: TrigPolynomial::constant(c) }
            }
        }
        "fourier" => CurveWeight::Fourier { beta: coefficients(arg)? },
        "log-fourier" => CurveWeight::Log { log_beta: coefficients(arg)? },
        "critical" => match curve {
            Curve::Ellipse { q } => CurveWeight::CriticalEllipse { q: *q },
            _ => bail!("the critical density is defined on ellipses only"),
        },
        "file" => {
            let text = fs::read_to_string(arg).with_context(|| format!("reading weight file {arg}"))?;
            serde_json::from_str(&text).context("weight file is not a CurveWeight JSON object")?
        }
        _ => bail!("unknown curve weight {s:?}"),
    })
}

/// `sigma-bar:k`, `ht-plus:t`, `ht-minus:t`, `hst:s,t`, `fmn:m,n` or `neg:k`.
pub fn objective(s: &str) -> Result<Objective<f64>> {
    let (kind, arg) = split_kind(s);
    let index = |a: &str| a.parse::<usize>().with_context(|| format!("not an index: {a:?}"));
    let pair = |a: &str| -> Result<(f64, f64)> {
        match numbers(a)?.as_slice() {
            [x, y] => Ok((*x, *y)),
            _ => bail!("expected two comma-separated numbers, got {a:?}"),
        }
    };
    let functional = match kind {
        "sigma-bar" => return Ok(Objective::MaximizeNormalized { k: index(arg)? }),
        "ht-plus" => FunctionalSpec::HtPlus { t: number(arg)? },
        "ht-minus" => FunctionalSpec::HtMinus { t: number(arg)? },
        "hst" => {
            let (s, t) = pair(arg)?;
            FunctionalSpec::Hst { s, t }
        }
        "fmn" => {
            let (m, n) = pair(arg)?;
            FunctionalSpec::Fmn { m: m as usize, n: n as usize }
        }
        "neg" => FunctionalSpec::SingleEigenvalueNeg { k: index(arg)? },
        _ => bail!("unknown objective {s:?}"),
    };
    functional.validate()?;
    Ok(Objective::MinimizeFunctional { functional })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_are_inclusive() {
        assert_eq!(grid("0.05:0.95:0.05").unwrap().len(), 19);
        assert_eq!(grid("1,2,3").unwrap(), vec![1.0, 2.0, 3.0]);
        assert!(grid("1:0:0.1").is_err());
    }

    #[test]
    fn weights_replicate_constants() {
        let w = weight("const:2", 2).unwrap();
        assert_eq!(w.component_count(), 2);
        let w = weight("log-fourier:0,0.1,0|const:1", 2).unwrap();
        assert_eq!(w.representation, WeightRepresentation::Log);
        assert_eq!(w.components[1].a0(), 0.0);
        assert!(weight("fourier:1,0.1,0|log-fourier:0", 2).is_err());
        assert!(weight("fourier:1,0.1", 1).is_err());
    }

    #[test]
    fn objectives() {
        assert_eq!(objective("sigma-bar:2").unwrap(), Objective::MaximizeNormalized { k: 2 });
        assert!(matches!(objective("hst:2,1").unwrap(), Objective::MinimizeFunctional { .. }));
        assert!(objective("nope:1").is_err());
    }
}
