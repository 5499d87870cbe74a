//! Correspondences between two images and labeled match sets.

use alloc::vec::Vec;
use nalgebra::Vector2;

/// A putative match: pixel (or normalized) coordinates `(x, y)` in the
/// first image and `(xp, yp)` in the second.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Correspondence {
    pub x: f64,
    pub y: f64,
    pub xp: f64,
    pub yp: f64,
}

impl Correspondence {
    pub fn new(x: f64, y: f64, xp: f64, yp: f64) -> Self {
        Self { x, y, xp, yp }
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x, self.y, self.xp, self.yp]
    }

    pub fn p1(&self) -> Vector2<f64> {
        Vector2::new(self.x, self.y)
    }

    pub fn p2(&self) -> Vector2<f64> {
        Vector2::new(self.xp, self.yp)
    }

    /// True when both endpoints lie in `[0, w] x [0, h]` of their image.
    pub fn in_bounds(&self, w1: f64, h1: f64, w2: f64, h2: f64) -> bool {
        self.x >= 0.0
            && self.x <= w1
            && self.y >= 0.0
            && self.y <= h1
            && self.xp >= 0.0
            && self.xp <= w2
            && self.yp >= 0.0
            && self.yp <= h2
    }
}

/// Matches plus per-match inlier labels.
#[derive(Clone, Debug, PartialEq)]
pub struct MatchSet {
    pub matches: Vec<Correspondence>,
    pub labels: Vec<bool>,
}

impl MatchSet {
    pub fn new(matches: Vec<Correspondence>, labels: Vec<bool>) -> Self {
        assert_eq!(matches.len(), labels.len(), "labels must match matches");
        Self { matches, labels }
    }

    /// All matches labeled inlier.
    pub fn all_inliers(matches: Vec<Correspondence>) -> Self {
        let labels = alloc::vec![true; matches.len()];
        Self { matches, labels }
    }

    pub fn len(&self) -> usize {
        self.matches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matches.is_empty()
    }

    pub fn inlier_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    pub fn inlier_fraction(&self) -> f64 {
        if self.matches.is_empty() {
            0.0
        } else {
            self.inlier_count() as f64 / self.matches.len() as f64
        }
    }
}
