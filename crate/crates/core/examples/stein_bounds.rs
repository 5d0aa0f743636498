use stein_queues::stein::{build_family, stein_bound, triple_abs_sum, FamilyVariant, Method};

fn main() -> stein_queues::Result<()> {
    let eta = 0.1;
    println!("{:>5} {:>12} {:>12} {:>12}", "n", "MM1", "MMInfty", "tripleSum/n");
    for n in [8, 16, 32, 64, 128] {
        let mm1 = build_family(FamilyVariant::MM1 { lambda: 1.0, mu: 2.0, horizon: 1.0 }, n)?;
        let inf = build_family(FamilyVariant::MMInfty { lambda: 1.0, mu: 1.0, horizon: 1.0 }, n)?;
        let r = stein_bound(&inf, eta)?;
        println!(
            "{n:5} {:12.6} {:12.6} {:12.4}",
            stein_bound(&mm1, eta)?.bound,
            r.bound,
            r.triple_sum / n as f64
        );
    }
    let small = build_family(FamilyVariant::MMInfty { lambda: 1.0, mu: 1.0, horizon: 1.0 }, 4)?;
    println!(
        "closed form {:.12}, cellwise {:.12}",
        triple_abs_sum(&small, Method::ClosedForm)?,
        triple_abs_sum(&small, Method::Exact)?
    );
    Ok(())
}
