//! One-dimensional views of intensity maps: the y = 0 cross-section, its
//! side-lobe count, and azimuthally averaged ring profiles.

use crate::field::IntensityMap;

/// Transverse extent beyond which a CCD frame no longer resolves the outer
/// diffraction rings, metres.
pub const DETECTABLE_HALF_WIDTH: f64 = 2.2e-3;
/// Lobes weaker than this fraction of the profile maximum are ignored.
pub const LOBE_THRESHOLD: f64 = 0.005;

/// The row through the optical axis (`y = 0`) as `(x, intensity)` pairs.
pub fn cross_section(map: &IntensityMap) -> Vec<(f64, f64)> {
    let g = map.grid();
    let iy = g.center();
    (0..g.n()).map(|ix| (g.coord(ix), map.at(ix, iy))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LobeCount {
    /// Side lobes with x below the left principal peak.
    pub left: usize,
    /// Side lobes with x beyond the right principal peak.
    pub right: usize,
    /// Positions of the two principal peaks.
    pub principal: (f64, f64),
}

/// Count diffraction side lobes on each side of a cross-section.
///
/// A lobe is a strict local maximum above `rel_threshold` of the global
/// maximum. The strongest maximum on each side of `x = 0` is the principal
/// peak; lobes are the remaining maxima further out, limited to
/// `|x| <= half_width`.
pub fn count_side_lobes(profile: &[(f64, f64)], half_width: f64, rel_threshold: f64) -> LobeCount {
    let peak = profile.iter().map(|p| p.1).fold(0.0, f64::max);
    let maxima: Vec<(f64, f64)> = profile
        .windows(3)
        .filter(|w| w[1].1 > w[0].1 && w[1].1 > w[2].1 && w[1].1 > rel_threshold * peak)
        .map(|w| w[1])
        .collect();
    let strongest = |side: &dyn Fn(f64) -> bool| {
        maxima
            .iter()
            .filter(|m| side(m.0))
            .fold(None::<(f64, f64)>, |best, &m| match best {
                Some(b) if b.1 >= m.1 => Some(b),
                _ => Some(m),
            })
    };
    let left_peak = strongest(&|x| x < 0.0).map_or(0.0, |m| m.0);
    let right_peak = strongest(&|x| x > 0.0).map_or(0.0, |m| m.0);
    let left = maxima
        .iter()
        .filter(|m| m.0 < left_peak && m.0 >= -half_width)
        .count();
    let right = maxima
        .iter()
        .filter(|m| m.0 > right_peak && m.0 <= half_width)
        .count();
    LobeCount {
        left,
        right,
        principal: (left_peak, right_peak),
    }
}

/// Azimuthal average in rings one pitch wide: entry `i` averages the samples
/// whose distance from the axis rounds to `i` pitches. Covers radii below
/// `n/2` pitches.
pub fn ring_profile(map: &IntensityMap) -> Vec<f64> {
    let g = map.grid();
    let n = g.n();
    let c = g.center() as i64;
    let bins = n / 2;
    let mut sum = vec![0.0; bins];
    let mut count = vec![0usize; bins];
    for iy in 0..n {
        let dy = iy as i64 - c;
        for ix in 0..n {
            let dx = ix as i64 - c;
            let r = ((dx * dx + dy * dy) as f64).sqrt().round() as usize;
            if r < bins {
                sum[r] += map.at(ix, iy);
                count[r] += 1;
            }
        }
    }
    sum.iter()
        .zip(&count)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect()
}

/// Radius (metres) of the brightest ring, refined to sub-pitch precision by a
/// parabola through the maximum ring bin and its neighbours.
pub fn ring_peak_radius(map: &IntensityMap) -> f64 {
    let prof = ring_profile(map);
    let i = prof
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > prof[best] { i } else { best });
    let offset = if i > 0 && i + 1 < prof.len() {
        let (a, b, c) = (prof[i - 1], prof[i], prof[i + 1]);
        let denom = a - 2.0 * b + c;
        if denom < 0.0 {
            0.5 * (a - c) / denom
        } else {
            0.0
        }
    } else {
        0.0
    };
    (i as f64 + offset) * map.grid().pitch()
}

/// Second-moment beam radius `sqrt(2 <r^2>)` about the grid centre; equals
/// `w` for an intensity `exp(-2 r^2 / w^2)`.
pub fn second_moment_radius(map: &IntensityMap) -> f64 {
    let g = map.grid();
    let coords = g.coords();
    let (mut num, mut den) = (0.0, 0.0);
    for (iy, row) in map.values().chunks_exact(g.n()).enumerate() {
        for (ix, &v) in row.iter().enumerate() {
            num += v * (coords[ix] * coords[ix] + coords[iy] * coords[iy]);
            den += v;
        }
    }
    (2.0 * num / den).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn radial_map(n: usize, f: impl Fn(f64) -> f64) -> IntensityMap {
        let g = GridSpec::new(n, 1.0).unwrap();
        let mut v = Vec::with_capacity(n * n);
        for iy in 0..n {
            for ix in 0..n {
                v.push(f(g.coord(ix).hypot(g.coord(iy))));
            }
        }
        IntensityMap::new(g, v).unwrap()
    }

    #[test]
    fn cross_section_is_the_axis_row() {
        let m = radial_map(16, |r| r);
        let cs = cross_section(&m);
        assert_eq!(cs.len(), 16);
        assert_eq!(cs[8], (0.0, 0.0));
        assert_eq!(cs[0].0, -0.5);
    }

    #[test]
    fn radially_symmetric_profile_is_symmetric() {
        let m = radial_map(64, |r| (-(r * r) * 20.0).exp() * (1.0 + (30.0 * r).cos()));
        let cs = cross_section(&m);
        // index 0 has no mirror partner on an even grid
        for i in 1..32 {
            let (a, b) = (cs[32 - i].1, cs[32 + i].1);
            assert!((a - b).abs() <= 1e-12 * a.max(b).max(1e-300));
        }
    }

    #[test]
    fn lobe_rule_on_synthetic_profile() {
        // principal peaks at +-1, two weaker lobes further out on each side,
        // plus one lobe beyond the detectable window and one below threshold
        let xs: Vec<f64> = (-400..=400).map(|i| i as f64 * 0.01).collect();
        let bump = |x: f64, c: f64, h: f64| h * (-(x - c).powi(2) / 0.002).exp();
        let profile: Vec<(f64, f64)> = xs
            .iter()
            .map(|&x| {
                let v = [(-1.0, 1.0), (1.0, 1.0), (-1.5, 0.3), (1.5, 0.3), (-1.9, 0.1), (1.9, 0.1), (3.0, 0.2), (-2.1, 0.001)]
                    .iter()
                    .map(|&(c, h)| bump(x, c, h))
                    .sum::<f64>();
                (x, v)
            })
            .collect();
        let lc = count_side_lobes(&profile, 2.2, 0.005);
        assert_eq!((lc.left, lc.right), (2, 2));
        assert!((lc.principal.0 + 1.0).abs() < 1e-9 && (lc.principal.1 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ring_peak_of_annulus() {
        let m = radial_map(128, |r| (-((r - 0.2) / 0.03).powi(2)).exp());
        let r = ring_peak_radius(&m);
        assert!((r - 0.2).abs() < 0.25 / 128.0, "{r}");
    }
}
