use crate::scalar::Real;

/// One LiDAR return in the sensor frame (x forward, y left, z up).
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
    pub z: T,
    /// Reflectivity in `[0, 1]`.
    pub intensity: T,
}

impl<T: Real> Point<T> {
    pub fn new(x: T, y: T, z: T, intensity: T) -> Self {
        Self { x, y, z, intensity }
    }

    /// Euclidean distance to the sensor origin.
    #[inline]
    pub fn range(&self) -> T {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Horizontal angle `atan2(y, x)` in `[-π, π)`.
    #[inline]
    pub fn azimuth(&self) -> T {
        let a = self.y.atan2(self.x);
        if a >= T::pi() {
            a - T::two_pi()
        } else {
            a
        }
    }

    /// Vertical angle above the sensor's horizontal plane.
    #[inline]
    pub fn elevation(&self) -> T {
        let planar = (self.x * self.x + self.y * self.y).sqrt();
        self.z.atan2(planar)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite() && self.intensity.is_finite()
    }

    pub fn cast<U: Real>(&self) -> Point<U> {
        Point {
            x: U::lit(self.x.as_f64()),
            y: U::lit(self.y.as_f64()),
            z: U::lit(self.z.as_f64()),
            intensity: U::lit(self.intensity.as_f64()),
        }
    }
}

/// Ordered list of returns. Order is the sensor's acquisition order and is
/// meaningful: scan-line recovery depends on it.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct PointCloud<T> {
    points: Vec<Point<T>>,
}

impl<T: Real> PointCloud<T> {
    pub fn new() -> Self {
        Self { points: Vec::new() }
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            points: Vec::with_capacity(n),
        }
    }

    pub fn from_points(points: Vec<Point<T>>) -> Self {
        Self { points }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn points(&self) -> &[Point<T>] {
        &self.points
    }

    #[inline]
    pub fn points_mut(&mut self) -> &mut [Point<T>] {
        &mut self.points
    }

    pub fn push(&mut self, p: Point<T>) {
        self.points.push(p);
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point<T>> {
        self.points.iter()
    }

    pub fn into_points(self) -> Vec<Point<T>> {
        self.points
    }

    pub fn cast<U: Real>(&self) -> PointCloud<U> {
        self.points.iter().map(Point::cast).collect()
    }
}

impl<T: Real> FromIterator<Point<T>> for PointCloud<T> {
    fn from_iter<I: IntoIterator<Item = Point<T>>>(iter: I) -> Self {
        Self {
            points: iter.into_iter().collect(),
        }
    }
}

impl<'a, T: Real> IntoIterator for &'a PointCloud<T> {
    type Item = &'a Point<T>;
    type IntoIter = std::slice::Iter<'a, Point<T>>;

    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}
