//! Finite-volume Anderson Hamiltonians `H = H_0 + sum_j omega_j Pi_j`.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::SymBandMatrix;
use crate::measures::Measure;

/// A box `Lambda` in `Z^d`. Sites are numbered with the first coordinate
/// varying fastest, so the last direction has the widest stride.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FiniteVolume {
    sides: Vec<usize>,
}

impl FiniteVolume {
    pub fn new(sides: Vec<usize>) -> Result<Self> {
        if sides.is_empty() || sides.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "box sides must be positive and nonempty, got {sides:?}"
            )));
        }
        Ok(Self { sides })
    }

    /// A `d`-dimensional cube of side `side`.
    pub fn cube(d: usize, side: usize) -> Result<Self> {
        Self::new(vec![side; d])
    }

    pub fn dimension(&self) -> usize {
        self.sides.len()
    }

    pub fn sides(&self) -> &[usize] {
        &self.sides
    }

    /// `|Lambda|`.
    pub fn len(&self) -> usize {
        self.sides.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn strides(&self) -> Vec<usize> {
        let mut stride = 1;
        self.sides
            .iter()
            .map(|s| {
                let out = stride;
                stride *= s;
                out
            })
            .collect()
    }

    pub fn index(&self, coords: &[usize]) -> Result<usize> {
        if coords.len() != self.sides.len() {
            return Err(Error::DimensionMismatch {
                expected: self.sides.len(),
                got: coords.len(),
            });
        }
        let mut idx = 0;
        for ((c, s), st) in coords.iter().zip(&self.sides).zip(self.strides()) {
            if c >= s {
                return Err(Error::InvalidArgument(format!(
                    "coordinate {c} outside side {s}"
                )));
            }
            idx += c * st;
        }
        Ok(idx)
    }

    pub fn coords(&self, index: usize) -> Vec<usize> {
        let mut rem = index;
        self.sides
            .iter()
            .map(|s| {
                let c = rem % s;
                rem /= s;
                c
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Simple,
    Periodic,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FreeKind {
    /// Nearest-neighbour adjacency: off-diagonal entries `1`, zero diagonal.
    Adjacency,
    /// `2d` on the diagonal and `-1` between nearest neighbours.
    Laplacian,
    /// A user-supplied symmetric banded background; the boundary is ignored.
    Custom(SymBandMatrix),
}

/// The background operator `H_{0, Lambda}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeOperator {
    pub kind: FreeKind,
    pub boundary: Boundary,
}

impl FreeOperator {
    pub fn adjacency(boundary: Boundary) -> Self {
        Self {
            kind: FreeKind::Adjacency,
            boundary,
        }
    }

    pub fn laplacian(boundary: Boundary) -> Self {
        Self {
            kind: FreeKind::Laplacian,
            boundary,
        }
    }

    pub fn custom(matrix: SymBandMatrix) -> Self {
        Self {
            kind: FreeKind::Custom(matrix),
            boundary: Boundary::Simple,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            FreeKind::Adjacency => "adjacency",
            FreeKind::Laplacian => "laplacian",
            FreeKind::Custom(_) => "custom",
        }
    }

    /// The matrix of `H_{0, Lambda}`.
    ///
    /// Periodic wrapping couples the two faces of each direction, which
    /// widens the band to the full matrix.
    pub fn matrix(&self, volume: &FiniteVolume) -> Result<SymBandMatrix> {
        let (hop, diag) = match &self.kind {
            FreeKind::Custom(m) => {
                if m.dim() != volume.len() {
                    return Err(Error::DimensionMismatch {
                        expected: volume.len(),
                        got: m.dim(),
                    });
                }
                return Ok(m.clone());
            }
            FreeKind::Adjacency => (1.0, 0.0),
            FreeKind::Laplacian => (-1.0, 2.0 * volume.dimension() as f64),
        };
        let n = volume.len();
        let strides = volume.strides();
        let mut entries: Vec<(usize, usize)> = Vec::new();
        for site in 0..n {
            let coords = volume.coords(site);
            for (axis, (&side, &stride)) in volume.sides.iter().zip(&strides).enumerate() {
                let c = coords[axis];
                match self.boundary {
                    Boundary::Simple => {
                        if c + 1 < side {
                            entries.push((site + stride, site));
                        }
                    }
                    Boundary::Periodic => {
                        // Both directions from every site; each directed bond
                        // lands on its own triangle so sums stay symmetric.
                        let up = (c + 1) % side;
                        let down = (c + side - 1) % side;
                        for nb_c in [up, down] {
                            let nb = site - c * stride + nb_c * stride;
                            if nb <= site {
                                entries.push((site, nb));
                            }
                        }
                    }
                }
            }
        }
        let bandwidth = entries.iter().map(|(i, j)| i - j).max().unwrap_or(0);
        let mut m = SymBandMatrix::zeros(n, bandwidth);
        for i in 0..n {
            m.set(i, i, diag);
        }
        for (i, j) in entries {
            m.add(i, j, hop);
        }
        Ok(m)
    }
}

/// One realization `omega` restricted to the box, indexed by site.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialConfig(pub Vec<f64>);

impl PotentialConfig {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Copy with `omega_j` replaced by `tau`.
    pub fn replace_site(&self, j: usize, tau: f64) -> Result<PotentialConfig> {
        if j >= self.0.len() {
            return Err(Error::InvalidArgument(format!(
                "site {j} outside a box of {} sites",
                self.0.len()
            )));
        }
        let mut out = self.clone();
        out.0[j] = tau;
        Ok(out)
    }
}

/// `H_{0, Lambda} + V_omega`.
pub fn assemble(
    volume: &FiniteVolume,
    free: &FreeOperator,
    potential: &PotentialConfig,
) -> Result<SymBandMatrix> {
    let h0 = free.matrix(volume)?;
    add_potential(&h0, potential)
}

/// Adds `omega` to the diagonal of a prebuilt background.
pub fn add_potential(h0: &SymBandMatrix, potential: &PotentialConfig) -> Result<SymBandMatrix> {
    if potential.len() != h0.dim() {
        return Err(Error::DimensionMismatch {
            expected: h0.dim(),
            got: potential.len(),
        });
    }
    let mut h = h0.clone();
    for (i, w) in potential.values().iter().enumerate() {
        h.add(i, i, *w);
    }
    Ok(h)
}

/// Independent draws in site order.
pub fn sample_potential<R: Rng + ?Sized>(measures: &[Measure], rng: &mut R) -> PotentialConfig {
    PotentialConfig(measures.iter().map(|m| m.sample(rng)).collect())
}

/// A random Hamiltonian: box, background and one law per site.
#[derive(Debug, Clone)]
pub struct Ensemble {
    volume: FiniteVolume,
    free: FreeOperator,
    measures: Vec<Measure>,
    h0: SymBandMatrix,
}

impl Ensemble {
    /// `measures` holds either one law shared by every site or one per site.
    pub fn new(volume: FiniteVolume, free: FreeOperator, measures: Vec<Measure>) -> Result<Self> {
        let n = volume.len();
        let measures = match measures.len() {
            1 => vec![measures[0].clone(); n],
            k if k == n => measures,
            k => {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: k,
                })
            }
        };
        let h0 = free.matrix(&volume)?;
        Ok(Self {
            volume,
            free,
            measures,
            h0,
        })
    }

    pub fn volume(&self) -> &FiniteVolume {
        &self.volume
    }

    pub fn free(&self) -> &FreeOperator {
        &self.free
    }

    pub fn measures(&self) -> &[Measure] {
        &self.measures
    }

    pub fn background(&self) -> &SymBandMatrix {
        &self.h0
    }

    /// `|Lambda|`.
    pub fn sites(&self) -> usize {
        self.volume.len()
    }

    pub fn sample_potential<R: Rng + ?Sized>(&self, rng: &mut R) -> PotentialConfig {
        sample_potential(&self.measures, rng)
    }

    pub fn sample_hamiltonian<R: Rng + ?Sized>(&self, rng: &mut R) -> SymBandMatrix {
        let p = self.sample_potential(rng);
        add_potential(&self.h0, &p).expect("one draw per site")
    }

    /// The same ensemble with every site law replaced by `f(law)`.
    pub fn map_measures<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(&Measure) -> Result<Measure>,
    {
        let measures = self.measures.iter().map(f).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            measures,
            ..self.clone()
        })
    }

    /// `Q_Lambda(s)`.
    pub fn q_lambda(&self, s: f64) -> Result<f64> {
        crate::measures::q_lambda(&self.measures, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn site_index_is_bijective() {
        let v = FiniteVolume::new(vec![3, 4, 2]).unwrap();
        assert_eq!(v.len(), 24);
        for i in 0..v.len() {
            assert_eq!(v.index(&v.coords(i)).unwrap(), i);
        }
        assert!(v.index(&[3, 0, 0]).is_err());
        assert!(FiniteVolume::new(vec![]).is_err());
    }

    #[test]
    fn path_adjacency() {
        let v = FiniteVolume::new(vec![3]).unwrap();
        let h = assemble(
            &v,
            &FreeOperator::adjacency(Boundary::Simple),
            &PotentialConfig(vec![0.0; 3]),
        )
        .unwrap();
        assert_eq!(h.diagonal(), vec![0.0; 3]);
        assert_eq!(h.off_diagonal(), vec![1.0, 1.0]);
        assert_eq!(h.get(0, 2), 0.0);
    }

    #[test]
    fn two_site_with_potential() {
        let v = FiniteVolume::new(vec![2]).unwrap();
        let h = assemble(
            &v,
            &FreeOperator::adjacency(Boundary::Simple),
            &PotentialConfig(vec![5.0, -1.0]),
        )
        .unwrap();
        let d = h.to_dense();
        assert_eq!(d, nalgebra::dmatrix![5.0, 1.0; 1.0, -1.0]);
    }

    #[test]
    fn square_laplacian() {
        let v = FiniteVolume::new(vec![2, 2]).unwrap();
        let h = assemble(
            &v,
            &FreeOperator::laplacian(Boundary::Simple),
            &PotentialConfig(vec![0.0; 4]),
        )
        .unwrap();
        assert_eq!(h.diagonal(), vec![4.0; 4]);
        let d = h.to_dense();
        let mut bonds = 0;
        for i in 0..4 {
            for j in 0..i {
                if d[(i, j)] != 0.0 {
                    assert_eq!(d[(i, j)], -1.0);
                    bonds += 1;
                }
            }
        }
        assert_eq!(bonds, 4);
        // sites 0 and 3 sit on a diagonal of the square
        assert_eq!(d[(3, 0)], 0.0);
        assert_eq!(h.bandwidth(), 2);
    }

    #[test]
    fn simple_bandwidth_is_last_stride() {
        let v = FiniteVolume::new(vec![3, 4, 5]).unwrap();
        let h = FreeOperator::adjacency(Boundary::Simple).matrix(&v).unwrap();
        assert_eq!(h.bandwidth(), 12);
    }

    #[test]
    fn periodic_ring_spectrum() {
        for n in 1..=64usize {
            let v = FiniteVolume::new(vec![n]).unwrap();
            let h = FreeOperator::adjacency(Boundary::Periodic).matrix(&v).unwrap();
            let mut got: Vec<f64> = SymmetricEigen::new(h.to_dense()).eigenvalues.iter().copied().collect();
            got.sort_by(f64::total_cmp);
            let mut want: Vec<f64> = (0..n)
                .map(|k| 2.0 * (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos())
                .collect();
            want.sort_by(f64::total_cmp);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-10, "n={n}: {g} vs {w}");
            }
        }
    }

    #[test]
    fn replace_site_examples() {
        let p = PotentialConfig(vec![1.0, 2.0, 3.0]);
        assert_eq!(p.replace_site(1, 9.0).unwrap().0, vec![1.0, 9.0, 3.0]);
        assert_eq!(p.0, vec![1.0, 2.0, 3.0]);
        assert_eq!(p.replace_site(2, 3.0).unwrap(), p);
        let ab = p.replace_site(0, 7.0).unwrap().replace_site(2, 8.0).unwrap();
        let ba = p.replace_site(2, 8.0).unwrap().replace_site(0, 7.0).unwrap();
        assert_eq!(ab, ba);
        assert!(p.replace_site(3, 0.0).is_err());
    }

    #[test]
    fn replacement_is_rank_one_on_site() {
        let v = FiniteVolume::new(vec![3, 3]).unwrap();
        let free = FreeOperator::laplacian(Boundary::Periodic);
        let p = PotentialConfig((0..9).map(|i| i as f64 * 0.3).collect());
        let j = 4;
        let tau = -2.5;
        let a = assemble(&v, &free, &p).unwrap().to_dense();
        let b = assemble(&v, &free, &p.replace_site(j, tau).unwrap()).unwrap().to_dense();
        let diff = b - a;
        for r in 0..9 {
            for c in 0..9 {
                let want = if r == j && c == j { tau - p.0[j] } else { 0.0 };
                assert_eq!(diff[(r, c)], want);
            }
        }
    }

    #[test]
    fn sampling_is_reproducible_and_per_site() {
        let ms = vec![
            Measure::uniform(0.0, 1.0).unwrap(),
            Measure::uniform(5.0, 6.0).unwrap(),
            Measure::cantor(30).unwrap(),
        ];
        let a = sample_potential(&ms, &mut ChaCha8Rng::seed_from_u64(1));
        let b = sample_potential(&ms, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(a, b);
        assert!((0.0..=1.0).contains(&a.0[0]));
        assert!((5.0..=6.0).contains(&a.0[1]));
        assert!((0.0..=1.0).contains(&a.0[2]));
        let single = sample_potential(&ms[..1], &mut ChaCha8Rng::seed_from_u64(2));
        assert_eq!(single.len(), 1);
    }
}
