use hyperdyn::coding::DEFAULT_CYLINDER_CAP;
use hyperdyn::moebius::Disk;
use hyperdyn::schottky::{estimate_contraction, GeneratorSpec, SchottkyScheme};
use hyperdyn::transfer::*;
use num_complex::Complex64;

fn main() {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let scheme = SchottkyScheme::build(&[
        GeneratorSpec::new(Disk::new(c(-2.0, 0.0), 0.5).unwrap(), Disk::new(c(2.0, 0.0), 0.5).unwrap(), 0.7),
        GeneratorSpec::new(Disk::new(c(0.0, -2.0), 0.5).unwrap(), Disk::new(c(0.0, 2.0), 0.5).unwrap(), -0.3),
    ]).unwrap();
    let bounds = estimate_contraction(&scheme, 1024);
    println!("kappa = {:.4}, kappa_1 = {:.4}", bounds.kappa, bounds.kappa_1);
    for depth in [4usize, 5, 6] {
        let d = Discretization::new(&scheme, depth, DEFAULT_CYLINDER_CAP).unwrap();
        let delta = solve_delta_on(&d, 1e-12).unwrap().delta;
        let spec = perron(&assemble(&d, TwistSpec::untwisted(delta))).unwrap();
        let w = stationary_weights(&spec);
        print!("depth {depth}: delta = {delta:.6}");
        for k in [1i32, 5] {
            let tw = normalize(&assemble(&d, TwistSpec { k, b: 0.0, a: delta }), &spec);
            let rep = iterate_norm(&tw, &w, 200).unwrap();
            print!("  rho(k={k}) = {:.4}", rep.rho_est);
        }
        println!();
        let ly = ly_check(&d, &spec, TwistSpec { k: 1, b: 0.0, a: delta }, &[1, 2, 4, 8], &bounds).unwrap();
        println!("  ly k=1: {:?} spread {:.3}", ly.points.iter().map(|p| p.a0).collect::<Vec<_>>(), ly.spread);
        let ly5 = ly_check(&d, &spec, TwistSpec { k: 5, b: 0.0, a: delta }, &[1, 2, 4, 8], &bounds).unwrap();
        println!("  ly k=5: {:?} spread {:.3}", ly5.points.iter().map(|p| p.a0).collect::<Vec<_>>(), ly5.spread);
    }
}
