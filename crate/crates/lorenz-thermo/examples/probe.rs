use lorenz_thermo::*;
fn main() {
    let map = LorenzMap::doubling();
    let phi = phase_family(&map, 4.0, DepthRule::DepthCoupled).unwrap();
    let series = variation_series(&map, &phi, 8, 9).unwrap();
    println!("verdict {:?} limit {} sigma {}", series.verdict, series.limit_ratio, series.sigma);
    println!("ratios {:?}", series.ratio_estimates);
    let gc = gap_check(&map, &phi, 4, 8, PressureOptions::default()).unwrap();
    println!("gap {:?} margin {} total {} boundary {}", gc.verdict, gc.margin, gc.total.value, gc.boundary.value);
    println!("total seq {:?}", gc.total.sequence);
    println!("bdry seq {:?}", gc.boundary.sequence);
    println!("disp t {} b {}", gc.total.tail_dispersion(), gc.boundary.tail_dispersion());
}
