//! The three ground metrics on small hand-made points.

use predcore::measure::{GroundMetric, Point};

fn main() -> predcore::Result<()> {
    let a = Point::new(vec![0.0, 0.0]);
    let b = Point::new(vec![3.0, 4.0]);
    println!("euclidean            {:.4}", GroundMetric::euclidean().dist(&a, &b)?);
    println!("euclidean, p = 1     {:.4}", GroundMetric::Euclidean { p: 1.0 }.dist(&a, &b)?);

    let x0 = Point::labeled(vec![1.0, 0.0], 0);
    let x1 = Point::labeled(vec![1.0, 0.0], 1);
    let x2 = Point::labeled(vec![2.0, 0.0], 1);
    let pc = GroundMetric::product_class();
    println!("product, same x, labels differ   {:.4}", pc.dist(&x0, &x1)?);
    println!("product, labels match            {:.4}", pc.dist(&x1, &x2)?);
    println!("product, both differ             {:.4}", pc.dist(&x0, &x2)?);

    let u = Point::with_latent(vec![0.0, 0.0], vec![1.0, 1.0]);
    let v = Point::with_latent(vec![1.0, 0.0], vec![-1.0, 1.0]);
    for lambda in [0.0, 0.25, 1.0] {
        println!("latent pair, lambda = {lambda:<4}  {:.4}", GroundMetric::latent_pair(lambda).dist(&u, &v)?);
    }
    // mixing up point kinds is a shape error, not a silent zero
    println!("missing label: {}", pc.dist(&a, &x0).unwrap_err());
    Ok(())
}
