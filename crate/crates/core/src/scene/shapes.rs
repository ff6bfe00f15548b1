//! Procedural stand-ins for CAD point clouds: surface samples of a standing
//! pedestrian and of two bungalows separated by a gap.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Scatterer, Scene};

enum Surface {
    /// Vertical elliptic cylinder: centre (x, y), radii (rx, ry), z span.
    Cylinder {
        x: f64,
        y: f64,
        rx: f64,
        ry: f64,
        z0: f64,
        z1: f64,
    },
    Sphere {
        c: [f64; 3],
        r: f64,
    },
    /// Axis-aligned rectangle with one zero-extent axis.
    Rect {
        lo: [f64; 3],
        hi: [f64; 3],
    },
}

impl Surface {
    fn area(&self) -> f64 {
        match *self {
            // Ramanujan perimeter approximation is plenty here.
            Surface::Cylinder { rx, ry, z0, z1, .. } => {
                let h = ((rx - ry) / (rx + ry)).powi(2);
                let perim = PI * (rx + ry) * (1.0 + 3.0 * h / (10.0 + (4.0 - 3.0 * h).sqrt()));
                perim * (z1 - z0)
            }
            Surface::Sphere { r, .. } => 4.0 * PI * r * r,
            Surface::Rect { lo, hi } => {
                let e: Vec<f64> = (0..3).map(|k| hi[k] - lo[k]).filter(|v| *v > 0.0).collect();
                e.iter().product()
            }
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> [f64; 3] {
        match *self {
            Surface::Cylinder {
                x,
                y,
                rx,
                ry,
                z0,
                z1,
            } => {
                let a = rng.random::<f64>() * 2.0 * PI;
                [
                    x + rx * a.cos(),
                    y + ry * a.sin(),
                    z0 + rng.random::<f64>() * (z1 - z0),
                ]
            }
            Surface::Sphere { c, r } => {
                let z = rng.random::<f64>() * 2.0 - 1.0;
                let a = rng.random::<f64>() * 2.0 * PI;
                let s = (1.0 - z * z).sqrt();
                [c[0] + r * s * a.cos(), c[1] + r * s * a.sin(), c[2] + r * z]
            }
            Surface::Rect { lo, hi } => {
                let mut p = [0.0; 3];
                for k in 0..3 {
                    p[k] = lo[k] + rng.random::<f64>() * (hi[k] - lo[k]);
                }
                p
            }
        }
    }
}

fn sample_surfaces(label: &str, parts: &[Surface], count: usize, seed: u64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total: f64 = parts.iter().map(Surface::area).sum();
    let mut cumulative = Vec::with_capacity(parts.len());
    let mut acc = 0.0;
    for p in parts {
        acc += p.area() / total;
        cumulative.push(acc);
    }
    let pts = (0..count)
        .map(|_| {
            let u: f64 = rng.random();
            let i = cumulative
                .iter()
                .position(|c| u <= *c)
                .unwrap_or(parts.len() - 1);
            Scatterer::unit(parts[i].sample(&mut rng))
        })
        .collect();
    Scene::new(label, pts)
}

/// A 1.75 m standing person whose feet are centred on `base`.
pub fn pedestrian(base: [f64; 3], count: usize, seed: u64) -> Scene {
    let [bx, by, bz] = base;
    let parts = [
        Surface::Sphere {
            c: [bx, by, bz + 1.63],
            r: 0.11,
        },
        Surface::Cylinder {
            x: bx,
            y: by,
            rx: 0.12,
            ry: 0.19,
            z0: bz + 0.88,
            z1: bz + 1.48,
        },
        Surface::Cylinder {
            x: bx,
            y: by - 0.1,
            rx: 0.07,
            ry: 0.07,
            z0: bz,
            z1: bz + 0.88,
        },
        Surface::Cylinder {
            x: bx,
            y: by + 0.1,
            rx: 0.07,
            ry: 0.07,
            z0: bz,
            z1: bz + 0.88,
        },
        Surface::Cylinder {
            x: bx,
            y: by - 0.26,
            rx: 0.045,
            ry: 0.045,
            z0: bz + 0.82,
            z1: bz + 1.44,
        },
        Surface::Cylinder {
            x: bx,
            y: by + 0.26,
            rx: 0.045,
            ry: 0.045,
            z0: bz + 0.82,
            z1: bz + 1.44,
        },
    ];
    sample_surfaces("pedestrian", &parts, count, seed)
}

/// Two 4 m × 5 m × 2.6 m boxes along the direction of travel with a `gap`
/// between them. `base` is the centre of the gap at ground level on the
/// side facing the radar.
pub fn bungalows(base: [f64; 3], gap: f64, count: usize, seed: u64) -> Scene {
    let [bx, by, bz] = base;
    let (depth, width, height) = (4.0, 5.0, 2.6);
    let mut parts = Vec::new();
    for side in [-1.0, 1.0] {
        let y_near = by + side * gap / 2.0;
        let y_far = y_near + side * width;
        let (y0, y1) = if side < 0.0 {
            (y_far, y_near)
        } else {
            (y_near, y_far)
        };
        let (x0, x1, z0, z1) = (bx, bx + depth, bz, bz + height);
        parts.push(Surface::Rect {
            lo: [x0, y0, z0],
            hi: [x0, y1, z1],
        });
        parts.push(Surface::Rect {
            lo: [x0, y0, z1],
            hi: [x1, y1, z1],
        });
        parts.push(Surface::Rect {
            lo: [x0, y0, z0],
            hi: [x1, y0, z1],
        });
        parts.push(Surface::Rect {
            lo: [x0, y1, z0],
            hi: [x1, y1, z1],
        });
    }
    sample_surfaces("bungalows", &parts, count, seed)
}
