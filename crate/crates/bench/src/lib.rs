//! Fixed inputs shared by the benchmarks.

use pentalab::kdvlimit::{CircleGrid, DiffOperator};
use pentalab::polygon::random_polygon;
use pentalab::TwistedCoords;
use rug::{Complex, Rational};

pub fn rational_polygon(d: usize, n: usize) -> TwistedCoords<Rational> {
    random_polygon(d, n, 7, 5.0, &()).expect("seed 7 gives a valid polygon")
}

pub fn float_polygon(d: usize, n: usize, precision: u32) -> TwistedCoords<Complex> {
    random_polygon(d, n, 7, 0.2, &precision).expect("seed 7 gives a valid polygon")
}

pub fn smooth_operator(d: usize, grid: usize) -> DiffOperator {
    let g = CircleGrid::new(grid).expect("even grid of at least 32 points");
    let u = (0..d).map(|j| g.sample(|x| 0.3 * ((j + 1) as f64 * x).cos() + 0.2 * (x + j as f64).sin())).collect();
    DiffOperator::agd(&g, u).expect("finite potentials")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        assert_eq!(rational_polygon(3, 7).n(), 7);
        assert_eq!(float_polygon(4, 7, 128).d(), 4);
        assert_eq!(smooth_operator(2, 32).dimension(), 2);
    }
}
