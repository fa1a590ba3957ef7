use std::io::{BufRead, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peg {
    pub center: [f64; 2],
    pub radius: f64,
}

/// Axis-aligned field in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Field {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Field {
    pub fn area(&self) -> f64 {
        (self.max[0] - self.min[0]) * (self.max[1] - self.min[1])
    }

    pub fn center(&self) -> [f64; 2] {
        [
            0.5 * (self.min[0] + self.max[0]),
            0.5 * (self.min[1] + self.max[1]),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PegWorld {
    pub pegs: Vec<Peg>,
    pub seed: u64,
    pub field: Field,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorldConfig {
    /// Pegs per square meter.
    pub density: f64,
    pub peg_radius: f64,
    /// Minimum center-to-center distance between pegs.
    pub min_spacing: f64,
    pub field: Field,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            density: 20.0,
            peg_radius: 0.02,
            min_spacing: 0.15,
            field: Field {
                min: [0.0, 0.0],
                max: [3.0, 1.5],
            },
        }
    }
}

const ATTEMPTS_PER_PEG: usize = 200;

/// Rejection-sampled peg array with a minimum spacing. The peg count is
/// `round(density · area)`; generation fails if the sampler cannot place
/// that many pegs within its attempt budget.
pub fn generate_world(seed: u64, cfg: &WorldConfig) -> Result<PegWorld> {
    if !(cfg.min_spacing > 2.0 * cfg.peg_radius) || !(cfg.peg_radius > 0.0) {
        return Err(Error::Config(
            "min_spacing must exceed twice the (positive) peg radius".into(),
        ));
    }
    let target = (cfg.density.max(0.0) * cfg.field.area()).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pegs: Vec<Peg> = Vec::with_capacity(target);
    let spacing2 = cfg.min_spacing * cfg.min_spacing;
    let mut attempts = 0;
    while pegs.len() < target {
        if attempts >= ATTEMPTS_PER_PEG * target {
            return Err(Error::WorldGeneration(format!(
                "placed {} of {target} pegs; density too high for the field",
                pegs.len()
            )));
        }
        attempts += 1;
        let c = [
            rng.random_range(cfg.field.min[0]..cfg.field.max[0]),
            rng.random_range(cfg.field.min[1]..cfg.field.max[1]),
        ];
        let clear = pegs.iter().all(|p| {
            let dx = p.center[0] - c[0];
            let dy = p.center[1] - c[1];
            dx * dx + dy * dy >= spacing2
        });
        if clear {
            pegs.push(Peg {
                center: c,
                radius: cfg.peg_radius,
            });
        }
    }
    Ok(PegWorld {
        pegs,
        seed,
        field: cfg.field,
    })
}

impl PegWorld {
    pub fn empty(field: Field) -> Self {
        Self {
            pegs: Vec::new(),
            seed: 0,
            field,
        }
    }

    /// Writes one peg per line as `x y r`.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        for p in &self.pegs {
            writeln!(out, "{:?} {:?} {:?}", p.center[0], p.center[1], p.radius)?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_text(std::io::BufWriter::new(file))
    }

    /// Parses the `x y r` line format. Blank lines and `#` comments are
    /// skipped.
    pub fn read_text<R: BufRead>(input: R, field: Field) -> Result<Self> {
        let mut pegs = Vec::new();
        for (n, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Corrupt(format!("world line {}: {e}", n + 1)))?;
            if vals.len() != 3 || !(vals[2] > 0.0) {
                return Err(Error::Corrupt(format!(
                    "world line {}: expected `x y r` with r > 0",
                    n + 1
                )));
            }
            pegs.push(Peg {
                center: [vals[0], vals[1]],
                radius: vals[2],
            });
        }
        Ok(Self {
            pegs,
            seed: 0,
            field,
        })
    }

    /// Drops pegs within `clearance` of any of the given segments.
    pub fn clear_around(&mut self, segments: &[([f64; 2], [f64; 2])], clearance: f64) {
        self.pegs.retain(|p| {
            segments
                .iter()
                .all(|(a, b)| point_segment_distance(p.center, *a, *b).0 > p.radius + clearance)
        });
    }

    /// Reflection across the horizontal line `y = axis`.
    pub fn mirrored(&self, axis: f64) -> Self {
        let mut out = self.clone();
        for p in &mut out.pegs {
            p.center[1] = 2.0 * axis - p.center[1];
        }
        out
    }
}

/// Distance from `p` to segment `ab` and the closest point on it.
pub fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> (f64, [f64; 2]) {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
    ((p[0] - q[0]).hypot(p[1] - q[1]), q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_density_is_empty() {
        let cfg = WorldConfig {
            density: 0.0,
            ..WorldConfig::default()
        };
        assert!(generate_world(1, &cfg).unwrap().pegs.is_empty());
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = WorldConfig::default();
        assert_eq!(generate_world(9, &cfg).unwrap(), generate_world(9, &cfg).unwrap());
        assert_ne!(
            generate_world(9, &cfg).unwrap().pegs,
            generate_world(10, &cfg).unwrap().pegs
        );
    }

    #[test]
    fn spacing_respected_and_count_stable() {
        let cfg = WorldConfig::default();
        let expected = cfg.density * cfg.field.area();
        for seed in 0..100 {
            let w = generate_world(seed, &cfg).unwrap();
            let n = w.pegs.len() as f64;
            assert!((n - expected).abs() <= 0.1 * expected);
            for (i, a) in w.pegs.iter().enumerate() {
                for b in &w.pegs[i + 1..] {
                    let d = (a.center[0] - b.center[0]).hypot(a.center[1] - b.center[1]);
                    assert!(d >= cfg.min_spacing);
                }
            }
        }
    }

    #[test]
    fn infeasible_density_errors() {
        let cfg = WorldConfig {
            density: 400.0,
            ..WorldConfig::default()
        };
        assert!(matches!(
            generate_world(0, &cfg),
            Err(Error::WorldGeneration(_))
        ));
    }

    #[test]
    fn text_round_trip() {
        let w = generate_world(4, &WorldConfig::default()).unwrap();
        let mut buf = Vec::new();
        w.write_text(&mut buf).unwrap();
        let back = PegWorld::read_text(buf.as_slice(), w.field).unwrap();
        assert_eq!(back.pegs, w.pegs);
        assert!(PegWorld::read_text("1 2\n".as_bytes(), w.field).is_err());
    }
}
