use polydg::dg::PolySpace;
use polydg::elliptic::solve_state_laplace;
use polydg::mesh::{agglomerate, disc_mesh, extract_interior_submesh, refine_to_fit, FaceKind};
use polydg::recovery::ContinuousField;

fn main() {
    let mesh = disc_mesh(600).unwrap();
    let phi = ContinuousField::from_fn(&mesh, 1, |p| 0.55 - p.norm());
    let fitted = refine_to_fit(&mesh, &phi).unwrap();
    let poly = agglomerate(&fitted, 10, 30, 17).unwrap();
    let sub = extract_interior_submesh(&poly, &fitted).unwrap();
    // Face stats
    let mut n1 = 0; let mut len_min: f64 = 1e9; let mut len_max: f64 = 0.0;
    for f in sub.poly.faces() {
        if f.fine_edges.len() == 1 { n1 += 1; }
        len_min = len_min.min(f.length); len_max = len_max.max(f.length);
    }
    let hmax = (0..sub.poly.n_elements()).map(|e| sub.poly.diameter(e)).fold(0.0f64, f64::max);
    println!("submesh elements {} faces {} single-edge {} len [{:.3e},{:.3e}] hmax {:.3}",
        sub.poly.n_elements(), sub.poly.faces().len(), n1, len_min, len_max, hmax);
    for c in [10.0, 100.0, 1000.0] {
        let space = PolySpace::new(&sub.poly, 2);
        let r = solve_state_laplace(&space, c, 4, |k, _| match k {
            FaceKind::DomainBoundary => -1.0,
            _ => 0.0,
        });
        match r {
            Ok(u) => {
                let err = polydg::elliptic::l2_error(&space, &u, 6, |_, p| {
                    (p.norm().ln()) / (0.55f64.ln()) - 1.0
                });
                println!("C_sigma {c}: solved, L2 err vs analytic {err:.3e}");
            }
            Err(e) => println!("C_sigma {c}: {e}"),
        }
    }
}
