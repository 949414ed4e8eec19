//! Closed-form tail bounds for the four events as m grows.

use ripless::estimates::{tail_bound, Estimate, TailBoundQuery};

fn main() -> ripless::Result<()> {
    let (n, s, mu) = (256, 4, 1.0);
    println!("{:>6} {:>10} {:>10} {:>10} {:>10}", "m", "E1", "E2", "E3", "E4");
    for m in [100, 400, 1600, 6400] {
        let mut row = format!("{m:>6}");
        for which in [Estimate::E1, Estimate::E2, Estimate::E3, Estimate::E4] {
            let b = tail_bound(&TailBoundQuery::new(which, m, s, n, mu, 0.5)?)?;
            row += &format!(" {:>9.3e}{}", b.value, if b.out_of_range { "*" } else { " " });
        }
        println!("{row}");
    }
    println!("* level outside the range where the bound is stated");
    Ok(())
}
