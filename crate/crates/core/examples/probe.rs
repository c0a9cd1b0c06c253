use iw_core::amde::*;
use iw_core::numcore::{RngStream, Series};
fn main() {
    let mut rng = RngStream::new(1, 777);
    let n = 100_000;
    let x = rng.normal_vec(n);
    let y: Vec<f64> = x.iter().map(|v| v + 0.1 * rng.standard_normal()).collect();
    let r = weighted_outcome_estimate(
        &Series::new("y", y).unwrap(),
        &Series::new("x", x.clone()).unwrap(),
        &RieszVariant::DensityWeighted { bandwidth: None },
    ).unwrap();
    let target = 0.28209479177387814;
    println!("dw: theta={:.6} se={:.6} dev/se={:.2}", r.theta, r.se, (r.theta-target)/r.se);

    let y2: Vec<f64> = x.iter().map(|v| v*v + v + 0.2 * rng.standard_normal()).collect();
    for c in [NuisanceCorruption::None, NuisanceCorruption::ZeroRegression, NuisanceCorruption::ZeroRepresenter] {
        let r = orthogonal_ad(
            &Series::new("y", y2.clone()).unwrap(),
            &Series::new("x", x.clone()).unwrap(), c).unwrap();
        println!("dml {:?}: theta={:.5} se={:.5} dev/se={:.2}", c, r.theta, r.se, (r.theta-1.0)/r.se);
    }
}
