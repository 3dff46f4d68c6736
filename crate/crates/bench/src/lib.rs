//! Instances shared by the benchmarks.

use lottery_core::{generate_named, Fraction, Instance, NamedConstruction};

pub fn hamilton(n: usize) -> Instance {
    generate_named(&NamedConstruction::HamiltonLike {
        n,
        k: 21,
        couples: n / 5,
    })
    .expect("valid")
}

pub fn big_sur() -> Instance {
    generate_named(&NamedConstruction::BigSurLike {
        n: 1296,
        k: 702,
        s_max: 15,
    })
    .expect("valid")
}

pub fn spl_tight(m: usize, s: usize) -> Instance {
    let alpha = Fraction::new(1, 2).expect("valid");
    generate_named(&NamedConstruction::SplTight { m, s, alpha }).expect("valid")
}
