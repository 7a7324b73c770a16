//! Space-time Poisson vertex clouds, red/black colouring and the cube census
//! used by the truncation diagnostics.

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{arg, Result, SpamError};
use crate::model::{ModelParams, TorusBox};
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Colour {
    Uncoloured,
    Black,
    Red,
}

impl Colour {
    pub fn as_str(&self) -> &'static str {
        match self {
            Colour::Uncoloured => "none",
            Colour::Black => "black",
            Colour::Red => "red",
        }
    }

    pub fn parse(s: &str) -> Option<Colour> {
        match s {
            "none" => Some(Colour::Uncoloured),
            "black" => Some(Colour::Black),
            "red" => Some(Colour::Red),
            _ => None,
        }
    }
}

impl fmt::Display for Colour {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimePoint {
    pub id: u32,
    pub position: Vec<f64>,
    pub birth_time: f64,
    pub colour: Colour,
}

/// Birth-ordered vertex cloud; point `i` has the `i`-th smallest birth time.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub params: ModelParams,
    pub torus: TorusBox,
    births: Vec<f64>,
    positions: Vec<f64>,
    colours: Vec<Colour>,
}

impl PointCloud {
    /// Assembles a cloud from explicit data, checking every invariant.
    pub fn from_parts(
        params: ModelParams,
        births: Vec<f64>,
        positions: Vec<f64>,
        colours: Option<Vec<Colour>>,
    ) -> Result<Self> {
        params.validate()?;
        let torus = params.torus();
        let d = torus.dimension;
        if positions.len() != births.len() * d {
            return arg(format!(
                "{} coordinates for {} points in dimension {d}",
                positions.len(),
                births.len()
            ));
        }
        for (i, b) in births.iter().enumerate() {
            if !(*b > 0.0 && *b <= 1.0) {
                return arg(format!("birth time {b} of point {i} outside (0,1]"));
            }
            if i > 0 && births[i - 1] >= *b {
                return Err(SpamError::Contract(format!(
                    "birth times not strictly increasing at point {i}"
                )));
            }
            if !torus.contains(&positions[i * d..(i + 1) * d]) {
                return arg(format!("point {i} lies outside the torus"));
            }
        }
        let colours = colours.unwrap_or_else(|| vec![Colour::Uncoloured; births.len()]);
        if colours.len() != births.len() {
            return arg("colour vector length differs from point count");
        }
        Ok(PointCloud {
            params,
            torus,
            births,
            positions,
            colours,
        })
    }

    pub fn len(&self) -> usize {
        self.births.len()
    }

    pub fn is_empty(&self) -> bool {
        self.births.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.torus.dimension
    }

    #[inline]
    pub fn birth(&self, i: u32) -> f64 {
        self.births[i as usize]
    }

    #[inline]
    pub fn pos(&self, i: u32) -> &[f64] {
        let d = self.torus.dimension;
        &self.positions[i as usize * d..(i as usize + 1) * d]
    }

    #[inline]
    pub fn colour(&self, i: u32) -> Colour {
        self.colours[i as usize]
    }

    pub fn births(&self) -> &[f64] {
        &self.births
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn colours(&self) -> &[Colour] {
        &self.colours
    }

    pub fn is_coloured(&self) -> bool {
        self.colours.iter().all(|c| *c != Colour::Uncoloured)
    }

    #[inline]
    pub fn dist(&self, a: u32, b: u32) -> f64 {
        self.torus.dist(self.pos(a), self.pos(b))
    }

    pub fn point(&self, i: u32) -> SpaceTimePoint {
        SpaceTimePoint {
            id: i,
            position: self.pos(i).to_vec(),
            birth_time: self.birth(i),
            colour: self.colour(i),
        }
    }

    pub fn points(&self) -> impl Iterator<Item = SpaceTimePoint> + '_ {
        (0..self.len() as u32).map(|i| self.point(i))
    }

    /// Number of points born at or before `t`.
    pub fn count_born_by(&self, t: f64) -> usize {
        self.births.partition_point(|b| *b <= t)
    }

    pub fn colour_count(&self, c: Colour) -> usize {
        self.colours.iter().filter(|x| **x == c).count()
    }
}

pub fn sample_points(params: &ModelParams, stream_label: &str) -> Result<PointCloud> {
    params.validate()?;
    let torus = params.torus();
    let d = torus.dimension;
    let mean = params.intensity * params.volume;
    if mean > 2e9 {
        return Err(SpamError::Sampling(format!("expected point count {mean} too large")));
    }
    let mut rng = stream_rng(params.seed, stream_label);
    let count = Poisson::new(mean)
        .map_err(|e| SpamError::Sampling(e.to_string()))?
        .sample(&mut rng) as usize;

    let mut births: Vec<f64> = (0..count).map(|_| 1.0 - rng.random::<f64>()).collect();
    let half = torus.side / 2.0;
    let mut positions = Vec::with_capacity(count * d);
    for _ in 0..count * d {
        let mut c = rng.random::<f64>() * torus.side - half;
        if c >= half {
            c = -half;
        }
        positions.push(c);
    }
    // positions are iid, so sorting births alone keeps the joint law
    births.sort_by(f64::total_cmp);
    loop {
        let mut dup = false;
        for i in 1..births.len() {
            if births[i] == births[i - 1] {
                births[i] = 1.0 - rng.random::<f64>();
                dup = true;
            }
        }
        if !dup {
            break;
        }
        births.sort_by(f64::total_cmp);
    }
    Ok(PointCloud {
        params: *params,
        torus,
        colours: vec![Colour::Uncoloured; count],
        births,
        positions,
    })
}

/// Independent colouring: red with probability `r`, black otherwise.
pub fn colour_points(cloud: &PointCloud, r: f64, stream_label: &str) -> Result<PointCloud> {
    if !(0.0..=1.0).contains(&r) {
        return arg(format!("red probability {r} outside [0,1]"));
    }
    if cloud.colours.iter().any(|c| *c != Colour::Uncoloured) {
        return Err(SpamError::Contract("cloud is already coloured".into()));
    }
    let mut rng = stream_rng(cloud.params.seed, stream_label);
    let colours = (0..cloud.len())
        .map(|_| {
            if rng.random::<f64>() < r {
                Colour::Red
            } else {
                Colour::Black
            }
        })
        .collect();
    Ok(PointCloud {
        colours,
        ..cloud.clone()
    })
}

pub fn early_vertex_count(cloud: &PointCloud, sigma: f64) -> usize {
    cloud.count_born_by(sigma)
}

/// Per-cube point counts on the unit lattice grid; the last cube on each axis
/// is truncated when the side length is not an integer.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeCensus {
    pub per_axis: usize,
    pub dimension: usize,
    pub counts: Vec<u32>,
    pub dense: Vec<bool>,
    pub m: u32,
}

impl CubeCensus {
    pub fn dense_indices(&self) -> Vec<usize> {
        (0..self.dense.len()).filter(|i| self.dense[*i]).collect()
    }

    pub fn dense_mass(&self) -> u64 {
        self.counts
            .iter()
            .zip(&self.dense)
            .filter(|(_, d)| **d)
            .map(|(c, _)| *c as u64)
            .sum()
    }

    pub fn is_dense(&self, cube: usize) -> bool {
        self.dense[cube]
    }
}

pub fn cube_of(torus: &TorusBox, x: &[f64]) -> usize {
    let per_axis = torus.side.ceil().max(1.0) as usize;
    let half = torus.side / 2.0;
    let mut idx = 0usize;
    for c in x.iter().rev() {
        let k = ((c + half).floor().max(0.0) as usize).min(per_axis - 1);
        idx = idx * per_axis + k;
    }
    idx
}

pub fn dense_cube_census(cloud: &PointCloud, m: u32) -> Result<CubeCensus> {
    if m < 1 {
        return arg("density threshold m must be >= 1");
    }
    let torus = &cloud.torus;
    let per_axis = torus.side.ceil().max(1.0) as usize;
    let cells = per_axis
        .checked_pow(torus.dimension as u32)
        .filter(|c| *c <= 1 << 28)
        .ok_or_else(|| SpamError::Argument("too many cubes for a census".into()))?;
    let mut counts = vec![0u32; cells];
    for i in 0..cloud.len() as u32 {
        counts[cube_of(torus, cloud.pos(i))] += 1;
    }
    let dense = counts.iter().map(|c| *c >= m).collect();
    Ok(CubeCensus {
        per_axis,
        dimension: torus.dimension,
        counts,
        dense,
        m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_sorted() {
        let p = ModelParams::new(0.8, 1.0, 1.5, 2, 500.0).with_seed(3);
        let a = sample_points(&p, "points").unwrap();
        let b = sample_points(&p, "points").unwrap();
        assert_eq!(a, b);
        assert!(a.births().windows(2).all(|w| w[0] < w[1]));
        assert!((0..a.len() as u32).all(|i| a.torus.contains(a.pos(i))));
        let c = sample_points(&p, "other").unwrap();
        assert_ne!(a.births(), c.births());
    }

    #[test]
    fn colouring_extremes() {
        let p = ModelParams::new(0.8, 1.0, 1.5, 1, 300.0);
        let a = sample_points(&p, "points").unwrap();
        let all_black = colour_points(&a, 0.0, "c").unwrap();
        assert_eq!(all_black.colour_count(Colour::Black), a.len());
        let all_red = colour_points(&a, 1.0, "c").unwrap();
        assert_eq!(all_red.colour_count(Colour::Red), a.len());
        assert!(colour_points(&a, 1.5, "c").is_err());
        assert!(colour_points(&all_red, 0.5, "c").is_err());
    }

    #[test]
    fn early_counts() {
        let p = ModelParams::new(0.8, 1.0, 1.5, 1, 300.0);
        let a = sample_points(&p, "points").unwrap();
        assert_eq!(early_vertex_count(&a, 0.0), 0);
        assert_eq!(early_vertex_count(&a, 1.0), a.len());
    }

    #[test]
    fn census_basics() {
        let p = ModelParams::new(0.8, 1.0, 1.5, 2, 30.0);
        let empty = PointCloud::from_parts(p, vec![], vec![], None).unwrap();
        let c = dense_cube_census(&empty, 1).unwrap();
        assert_eq!(c.per_axis, 6);
        assert!(c.counts.iter().all(|x| *x == 0));
        assert!(c.dense_indices().is_empty());
        assert!(dense_cube_census(&empty, 0).is_err());

        let a = sample_points(&p.with_seed(1), "points").unwrap();
        let c = dense_cube_census(&a, 1).unwrap();
        assert_eq!(c.counts.iter().map(|x| *x as usize).sum::<usize>(), a.len());
        for i in 0..c.counts.len() {
            assert_eq!(c.dense[i], c.counts[i] >= 1);
        }
    }

    #[test]
    fn cube_index_edges() {
        let t = TorusBox::new(1, 4.5).unwrap();
        assert_eq!(cube_of(&t, &[-2.25]), 0);
        assert_eq!(cube_of(&t, &[2.2]), 4);
        let t2 = TorusBox::new(2, 3.0).unwrap();
        assert_eq!(cube_of(&t2, &[-1.5, 1.4]), 6);
    }

    #[test]
    fn from_parts_rejects_unsorted() {
        let p = ModelParams::new(0.8, 1.0, 1.5, 1, 10.0);
        let r = PointCloud::from_parts(p, vec![0.5, 0.2], vec![0.0, 1.0], None);
        assert!(matches!(r, Err(SpamError::Contract(_))));
        assert!(PointCloud::from_parts(p, vec![0.5], vec![7.0], None).is_err());
    }
}
