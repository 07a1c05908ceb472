//! Signed intersection numbers of instanton families on two toy flows.
//!
//! On the logistic product every observation time gives exactly one
//! crossing. On the twisted spiral sink the raw number of crossings
//! changes with the observation time while the signed sum stays 1.

use memflow::toy::{build_instanton_family, intersection_number, invariance_scan, linspace, FamilySpec, Observables, ToyFlow};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let logistic = build_instanton_family(&ToyFlow::logistic_product(2)?, &FamilySpec::default())?;
    let grid: Vec<Vec<f64>> = linspace(5.0, 13.0, 20).into_iter().map(|t| vec![t, 9.0]).collect();
    let rep = invariance_scan(&logistic, &[0, 1], &grid);
    println!("logistic: values {:?}, raw counts {:?}", rep.values(), rep.raw_counts());

    let flow = ToyFlow::spiral(0.5, 6.0)?;
    for c in &flow.critical_points {
        println!("  critical point {:?}: {}", c.x, c.stability.label());
    }
    let spec = FamilySpec {
        sigma_lo: -6.0,
        sigma_hi: 4.0,
        points: 21,
        ..FamilySpec::default()
    };
    let spiral = build_instanton_family(&flow, &spec)?;
    let grid: Vec<Vec<f64>> = linspace(8.5, 11.5, 20).into_iter().map(|t| vec![t, 10.0]).collect();
    let rep = invariance_scan(&spiral, &[0, 1], &grid);
    for e in &rep.entries {
        if let Ok(r) = &e.result {
            let signs: String = r.crossings.iter().map(|c| if c.sign > 0 { '+' } else { '-' }).collect();
            println!("  t = {:?}: {} crossings [{signs}] sum {}", e.times, r.raw_count(), r.value());
        }
    }
    println!("spiral: values {:?}, raw counts {:?}", rep.values(), rep.raw_counts());

    // One tuple in detail.
    let one = intersection_number(&spiral, &Observables::new(vec![0, 1], vec![11.0, 10.0]))?;
    for c in &one.crossings {
        println!("  sigma = ({:+.4}, {:+.4})  det = {:+.4}", c.sigma[0], c.sigma[1], c.det);
    }
    Ok(())
}
