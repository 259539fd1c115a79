//! Two-center Slater-Koster matrix elements.

use thiserror::Error;

use super::basis::{BasisTier, Orbital};

/// Two-center integrals `v[a][b][bond]` for shell `a` on the origin atom and
/// shell `b` on the neighbour, bond index sigma/pi/delta. eV.
pub type Integrals = [[[f64; 3]; 4]; 4];

#[derive(Debug, Error, PartialEq)]
pub enum SkError {
    #[error("direction cosines not normalized: l^2+m^2+n^2 = {0}")]
    Unnormalized(f64),
    #[error("bond length must be positive, got {0}")]
    NonPositiveLength(f64),
}

const SQ3: f64 = 1.732_050_807_568_877_2;

/// `V (d0/d)^eta`.
pub fn strain_scale(v: f64, d0: f64, d: f64, eta: f64) -> Result<f64, SkError> {
    if !(d > 0.0) {
        return Err(SkError::NonPositiveLength(d));
    }
    if eta == 0.0 {
        return Ok(v);
    }
    Ok(v * (d0 / d).powf(eta))
}

fn sp(b: Orbital, [l, m, n]: [f64; 3], v: [f64; 3]) -> f64 {
    let c = match b {
        Orbital::Px => l,
        Orbital::Py => m,
        Orbital::Pz => n,
        _ => unreachable!(),
    };
    c * v[0]
}

fn sd(b: Orbital, [l, m, n]: [f64; 3], v: [f64; 3]) -> f64 {
    let f = match b {
        Orbital::Dxy => SQ3 * l * m,
        Orbital::Dyz => SQ3 * m * n,
        Orbital::Dzx => SQ3 * n * l,
        Orbital::Dx2y2 => 0.5 * SQ3 * (l * l - m * m),
        Orbital::Dz2 => n * n - 0.5 * (l * l + m * m),
        _ => unreachable!(),
    };
    f * v[0]
}

fn pp(a: Orbital, b: Orbital, c: [f64; 3], v: [f64; 3]) -> f64 {
    let i = a as usize - Orbital::Px as usize;
    let j = b as usize - Orbital::Px as usize;
    let delta = if i == j { 1.0 } else { 0.0 };
    c[i] * c[j] * v[0] + (delta - c[i] * c[j]) * v[1]
}

fn pd(a: Orbital, b: Orbital, [l, m, n]: [f64; 3], v: [f64; 3]) -> f64 {
    use Orbital::*;
    let (s, p) = (v[0], v[1]);
    let lmn = l * m * n;
    let (l2, m2, n2) = (l * l, m * m, n * n);
    match (a, b) {
        (Px, Dxy) => SQ3 * l2 * m * s + m * (1.0 - 2.0 * l2) * p,
        (Px, Dyz) => SQ3 * lmn * s - 2.0 * lmn * p,
        (Px, Dzx) => SQ3 * l2 * n * s + n * (1.0 - 2.0 * l2) * p,
        (Py, Dxy) => SQ3 * m2 * l * s + l * (1.0 - 2.0 * m2) * p,
        (Py, Dyz) => SQ3 * m2 * n * s + n * (1.0 - 2.0 * m2) * p,
        (Py, Dzx) => SQ3 * lmn * s - 2.0 * lmn * p,
        (Pz, Dxy) => SQ3 * lmn * s - 2.0 * lmn * p,
        (Pz, Dyz) => SQ3 * n2 * m * s + m * (1.0 - 2.0 * n2) * p,
        (Pz, Dzx) => SQ3 * n2 * l * s + l * (1.0 - 2.0 * n2) * p,
        (Px, Dx2y2) => 0.5 * SQ3 * l * (l2 - m2) * s + l * (1.0 - l2 + m2) * p,
        (Py, Dx2y2) => 0.5 * SQ3 * m * (l2 - m2) * s - m * (1.0 + l2 - m2) * p,
        (Pz, Dx2y2) => 0.5 * SQ3 * n * (l2 - m2) * s - n * (l2 - m2) * p,
        (Px, Dz2) => l * (n2 - 0.5 * (l2 + m2)) * s - SQ3 * l * n2 * p,
        (Py, Dz2) => m * (n2 - 0.5 * (l2 + m2)) * s - SQ3 * m * n2 * p,
        (Pz, Dz2) => n * (n2 - 0.5 * (l2 + m2)) * s + SQ3 * n * (l2 + m2) * p,
        _ => unreachable!(),
    }
}

fn dd(a: Orbital, b: Orbital, [l, m, n]: [f64; 3], v: [f64; 3]) -> f64 {
    use Orbital::*;
    let (s, p, d) = (v[0], v[1], v[2]);
    let (l2, m2, n2) = (l * l, m * m, n * n);
    let (a, b) = if (a as usize) <= (b as usize) { (a, b) } else { (b, a) };
    match (a, b) {
        (Dxy, Dxy) => 3.0 * l2 * m2 * s + (l2 + m2 - 4.0 * l2 * m2) * p + (n2 + l2 * m2) * d,
        (Dyz, Dyz) => 3.0 * m2 * n2 * s + (m2 + n2 - 4.0 * m2 * n2) * p + (l2 + m2 * n2) * d,
        (Dzx, Dzx) => 3.0 * n2 * l2 * s + (n2 + l2 - 4.0 * n2 * l2) * p + (m2 + n2 * l2) * d,
        (Dxy, Dyz) => 3.0 * l * m2 * n * s + l * n * (1.0 - 4.0 * m2) * p + l * n * (m2 - 1.0) * d,
        (Dyz, Dzx) => 3.0 * m * n2 * l * s + m * l * (1.0 - 4.0 * n2) * p + m * l * (n2 - 1.0) * d,
        (Dxy, Dzx) => 3.0 * l2 * m * n * s + m * n * (1.0 - 4.0 * l2) * p + m * n * (l2 - 1.0) * d,
        (Dxy, Dx2y2) => {
            let lm = l * m;
            1.5 * lm * (l2 - m2) * s + 2.0 * lm * (m2 - l2) * p + 0.5 * lm * (l2 - m2) * d
        }
        (Dyz, Dx2y2) => {
            let mn = m * n;
            1.5 * mn * (l2 - m2) * s - mn * (1.0 + 2.0 * (l2 - m2)) * p + mn * (1.0 + 0.5 * (l2 - m2)) * d
        }
        (Dzx, Dx2y2) => {
            let nl = n * l;
            1.5 * nl * (l2 - m2) * s + nl * (1.0 - 2.0 * (l2 - m2)) * p - nl * (1.0 - 0.5 * (l2 - m2)) * d
        }
        (Dxy, Dz2) => {
            let lm = l * m;
            SQ3 * (lm * (n2 - 0.5 * (l2 + m2)) * s - 2.0 * lm * n2 * p + 0.5 * lm * (1.0 + n2) * d)
        }
        (Dyz, Dz2) => {
            let mn = m * n;
            SQ3 * (mn * (n2 - 0.5 * (l2 + m2)) * s + mn * (l2 + m2 - n2) * p - 0.5 * mn * (l2 + m2) * d)
        }
        (Dzx, Dz2) => {
            let ln = l * n;
            SQ3 * (ln * (n2 - 0.5 * (l2 + m2)) * s + ln * (l2 + m2 - n2) * p - 0.5 * ln * (l2 + m2) * d)
        }
        (Dx2y2, Dx2y2) => {
            let q = l2 - m2;
            0.75 * q * q * s + (l2 + m2 - q * q) * p + (n2 + 0.25 * q * q) * d
        }
        (Dx2y2, Dz2) => {
            let q = l2 - m2;
            SQ3 * (0.5 * q * (n2 - 0.5 * (l2 + m2)) * s - n2 * q * p + 0.25 * (1.0 + n2) * q * d)
        }
        (Dz2, Dz2) => {
            let t = n2 - 0.5 * (l2 + m2);
            t * t * s + 3.0 * n2 * (l2 + m2) * p + 0.75 * (l2 + m2).powi(2) * d
        }
        _ => unreachable!(),
    }
}

/// Table entry with `a` on the origin atom, `b` on the atom at `+dir`, and
/// `l(a) <= l(b)`.
fn ordered(a: Orbital, b: Orbital, dir: [f64; 3], v: [f64; 3]) -> f64 {
    match (a.shell().l(), b.shell().l()) {
        (0, 0) => v[0],
        (0, 1) => sp(b, dir, v),
        (0, 2) => sd(b, dir, v),
        (1, 1) => pp(a, b, dir, v),
        (1, 2) => pd(a, b, dir, v),
        (2, 2) => dd(a, b, dir, v),
        _ => unreachable!(),
    }
}

/// `<a at origin| H |b at dir>` for unit `dir`, with integrals indexed
/// `[shell on origin][shell on neighbour]`.
pub fn sk_element(a: Orbital, b: Orbital, dir: [f64; 3], v: &Integrals) -> f64 {
    let vab = v[a.shell() as usize][b.shell() as usize];
    if a.shell().l() <= b.shell().l() {
        ordered(a, b, dir, vab)
    } else {
        ordered(b, a, [-dir[0], -dir[1], -dir[2]], vab)
    }
}

pub fn check_direction(dir: [f64; 3]) -> Result<(), SkError> {
    let norm = dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2];
    if (norm - 1.0).abs() > 1e-12 {
        return Err(SkError::Unnormalized(norm));
    }
    Ok(())
}

/// Orbital coupling block, row-major `norb x norb`: rows are orbitals on the
/// origin atom, columns orbitals on the neighbour at `dir`.
pub fn slater_koster_block(dir: [f64; 3], v: &Integrals, tier: BasisTier) -> Result<Vec<f64>, SkError> {
    check_direction(dir)?;
    let orbs = tier.orbitals();
    let mut out = Vec::with_capacity(orbs.len() * orbs.len());
    for &a in orbs {
        for &b in orbs {
            out.push(sk_element(a, b, dir, v));
        }
    }
    Ok(out)
}

/// Integrals as seen from the other end of the bond.
pub fn reversed(v: &Integrals) -> Integrals {
    let mut out = [[[0.0; 3]; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            out[b][a] = v[a][b];
        }
    }
    out
}
