//! Exact operator algebra: composition, the commutation rule, annihilators,
//! and the delay conjugation that turns `e^{-t s}` into a polynomial in `t`.
//!
//!     cargo run --example weyl_algebra

use algebraic_changepoint::algebra::{
    annihilator_of_span, conjugate_by_delay, DiffOperator, Polynomial, RationalFunction,
};

fn main() -> algebraic_changepoint::Result<()> {
    let d = DiffOperator::d();
    let s = DiffOperator::from_rf(RationalFunction::s_pow(1));

    // d/ds ∘ s - s ∘ d/ds = 1
    let comm = &d.compose(&s) - &s.compose(&d);
    println!("[d/ds, s] = {comm}");

    // a ramp-then-jump span: 1/s, 1/s^2 and the shifted pole 1/(s+1)
    let basis = vec![
        RationalFunction::s_pow(-1),
        RationalFunction::s_pow(-2),
        RationalFunction::new(Polynomial::one(), Polynomial::from_ints(&[1, 1]))?,
    ];
    let ann = annihilator_of_span(&basis)?;
    println!("annihilator: {ann}");
    for f in &basis {
        println!("  applied to {f:>10}: {}", ann.apply(f));
    }

    // conjugating by the delay replaces d/ds with d/ds + t
    let p = DiffOperator::d_pow(2);
    println!("conjugate_by_delay(D^2):\n{}", conjugate_by_delay(&p));
    Ok(())
}
