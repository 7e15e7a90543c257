//! A circle map with a source, a saddle-like point and a sink.

use crate::error::{Error, Result};
use crate::rational::{rat, Rational};
use crate::space::{DistanceSpec, NetSystem};

/// Indices of the three fixed points `x = 0`, `y = 1/3`, `z = 2/3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fig1Points {
    pub x: usize,
    pub y: usize,
    pub z: usize,
}

pub fn fig1_points(net_size: usize) -> Fig1Points {
    Fig1Points { x: 0, y: net_size / 3, z: 2 * net_size / 3 }
}

/// Net steps taken by a point at offset `t` from the repelling end of an
/// arc of `len` steps: one step within three of either end, at least four
/// elsewhere, fastest in the middle.
fn speed(t: usize, len: usize) -> usize {
    let d = t.min(len - t);
    if d < 4 {
        1
    } else {
        (d / 4).max(4)
    }
}

/// Circle net of `net_size` equally spaced points, `x = 0`, `y = 1/3`,
/// `z = 2/3` fixed. Points of `(x, y)` and `(y, z)` move counter-clockwise
/// (towards `y`, resp. `z`); points of `(z, x)` move clockwise towards `z`.
/// Motion is monotone and never jumps over a fixed point.
pub fn fig1_circle(net_size: usize) -> Result<NetSystem> {
    if net_size < 12 || !net_size.is_multiple_of(3) {
        return Err(Error::InvalidArgument("net size must be a multiple of 3, at least 12".into()));
    }
    let n = net_size;
    let len = n / 3;
    let mut map = vec![0usize; n];
    for (i, m) in map.iter_mut().enumerate() {
        let arc = i / len;
        let t = i % len;
        *m = if t == 0 {
            i
        } else {
            let target = match arc {
                0 | 1 => arc * len + (t + speed(t, len)).min(len),
                // (z, x): source at x (t = len), sink at z (t = 0)
                _ => 2 * len + t - speed(len - t, len).min(t),
            };
            target % n
        };
    }
    let angles: Vec<Rational> = (0..n).map(|i| rat(i as i64, n as i64)).collect();
    let labels = (0..n)
        .map(|i| match i {
            0 => "x".to_string(),
            i if i == len => "y".to_string(),
            i if i == 2 * len => "z".to_string(),
            i => i.to_string(),
        })
        .collect();
    NetSystem::new_unchecked(DistanceSpec::Circle { angles }, map, false, rat(1, n as i64), labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_points_and_direction() {
        let s = fig1_circle(360).unwrap();
        let p = fig1_points(360);
        for f in [p.x, p.y, p.z] {
            assert_eq!(s.image(f), f);
        }
        for i in 1..120 {
            assert!(s.image(i) > i && s.image(i) <= 120);
        }
        for i in 121..240 {
            assert!(s.image(i) > i && s.image(i) <= 240);
        }
        for i in 241..360 {
            assert!(s.image(i) < i && s.image(i) >= 240);
        }
    }

    #[test]
    fn arc_point_goes_to_the_sink() {
        let s = fig1_circle(360).unwrap();
        let mut p = 150;
        for _ in 0..400 {
            let q = s.image(p);
            assert!(q >= p);
            p = q;
        }
        assert_eq!(p, 240);
    }
}
