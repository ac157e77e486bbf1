use super::{FittedMesh, PolytopicMesh, Sign};
use crate::geometry::Point2;
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MAX_LLOYD_ITERS: usize = 100;

/// Lloyd's algorithm with k-means++ seeding.
///
/// Deterministic for a given RNG state: nearest-center ties break toward the
/// lowest center index, and emptied clusters are re-seeded on the point
/// farthest from its current center.
pub fn kmeans_lloyd(points: &[Point2], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    assert!(k >= 1 && points.len() >= k);
    let n = points.len();

    // k-means++ seeding.
    let mut centers: Vec<Point2> = Vec::with_capacity(k);
    centers.push(points[rng.gen_range(0..n)]);
    let mut d2: Vec<f64> = points.iter().map(|p| p.dist(centers[0]).powi(2)).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            // All points coincide with a center; fall back to a uniform draw.
            rng.gen_range(0..n)
        } else {
            let u = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if u < acc {
                    pick = i;
                    break;
                }
            }
            pick
        };
        centers.push(points[next]);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(p.dist(points[next]).powi(2));
        }
    }

    let mut assignment = vec![0usize; n];
    for _ in 0..MAX_LLOYD_ITERS {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let mut best = 0usize;
            let mut best_d = p.dist(centers[0]).powi(2);
            for (c, center) in centers.iter().enumerate().skip(1) {
                let d = p.dist(*center).powi(2);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if assignment[i] != best {
                assignment[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![Point2::default(); k];
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            sums[assignment[i]] = sums[assignment[i]] + *p;
            counts[assignment[i]] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].scale(1.0 / counts[c] as f64);
            } else {
                // Re-seed an emptied cluster on the worst-represented point.
                let mut far = 0usize;
                let mut far_d = -1.0;
                for (i, p) in points.iter().enumerate() {
                    let d = p.dist(centers[assignment[i]]).powi(2);
                    if d > far_d {
                        far_d = d;
                        far = i;
                    }
                }
                centers[c] = points[far];
            }
        }
    }
    assignment
}

/// Agglomerates the fitted triangles into polytopic elements by k-means on
/// the barycenters of each sign class.
///
/// Disconnected clusters are split into edge-connected components, so the
/// element count may exceed `k_plus + k_minus`. No element mixes signs.
pub fn agglomerate(
    fitted: &FittedMesh,
    k_plus: usize,
    k_minus: usize,
    seed: u64,
) -> Result<PolytopicMesh<'_>> {
    let mesh = &fitted.mesh;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut elements: Vec<Vec<usize>> = Vec::new();
    for (sign, k) in [(Sign::Pos, k_plus), (Sign::Neg, k_minus)] {
        let tris: Vec<usize> = fitted.triangles_with_sign(sign).collect();
        if tris.is_empty() {
            return Err(Error::EmptyRegion(format!(
                "sign class {sign:?} is empty but k = {k} clusters were requested"
            )));
        }
        if tris.len() < k {
            return Err(Error::InvalidArgument(format!(
                "sign class {sign:?} has {} triangles, fewer than k = {k}",
                tris.len()
            )));
        }
        let barycenters: Vec<Point2> = tris.iter().map(|&t| mesh.barycenter(t)).collect();
        let assignment = kmeans_lloyd(&barycenters, k, &mut rng);

        let mut clusters: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (i, &t) in tris.iter().enumerate() {
            clusters[assignment[i]].push(t);
        }
        for cluster in clusters {
            if cluster.is_empty() {
                continue;
            }
            elements.extend(connected_components(mesh, &cluster));
        }
    }

    PolytopicMesh::build(mesh, elements)
}

/// Splits a triangle set into edge-connected components (ascending discovery
/// order, components ordered by their smallest triangle index).
fn connected_components(
    mesh: &super::SimplicialMesh,
    cluster: &[usize],
) -> Vec<Vec<usize>> {
    let in_cluster: std::collections::HashSet<usize> = cluster.iter().copied().collect();
    let mut seen: std::collections::HashSet<usize> = std::collections::HashSet::new();
    let mut components = Vec::new();
    for &start in cluster {
        if seen.contains(&start) {
            continue;
        }
        let mut component = Vec::new();
        let mut stack = vec![start];
        seen.insert(start);
        while let Some(t) = stack.pop() {
            component.push(t);
            for &e in &mesh.tri_edges(t) {
                if let Some(o) = mesh.edge(e).other_tri(t) {
                    if in_cluster.contains(&o) && !seen.contains(&o) {
                        seen.insert(o);
                        stack.push(o);
                    }
                }
            }
        }
        component.sort_unstable();
        components.push(component);
    }
    components
}
