//! temporary calibration scratch
use srlab::euler::initial_momentum;
use srlab::flow::{casimir_flow, geodesic_flow, PhaseState};
use srlab::sl2::Psl2Element;

fn main() {
    let c = 5.0;
    let p0 = initial_momentum(c).unwrap();
    let s = PhaseState::new(Psl2Element::identity(), p0);
    let (t, u) = (2.0, 8.0);
    let mid_a = casimir_flow(&s, u);
    println!("after casimir: g norm = {:.3e}, p = ({:.6}, {:.6}, {:.6})", mid_a.g.norm_sup(), mid_a.p.xi, mid_a.p.eta, mid_a.p.zeta);
    let a = geodesic_flow(&mid_a, t, 1e-12).unwrap();
    let mid_b = geodesic_flow(&s, t, 1e-12).unwrap();
    let b = casimir_flow(&mid_b, u);
    println!("path_a.g = {:?} norm {:.3e}", a.g, a.g.norm_sup());
    println!("path_b.g = {:?} norm {:.3e}", b.g, b.g.norm_sup());
    println!("p_a = {:?}", a.p);
    println!("p_b = {:?}", b.p);
    println!("g dist = {:.3e}", a.g.dist(&b.g));
}
