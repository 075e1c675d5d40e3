#[path = "criteria/mod.rs"]
mod criteria;
use criteria::AEC_MULTI;
use wrtkit::scenario::Scenario;
use wrtkit::invariants::{invariant_sequence, Convention};
use wrtkit::asymptotics::prony_detect;

#[test]
fn probe_multi() {
    let sc = Scenario::from_json_str(AEC_MULTI).unwrap();
    let seq = invariant_sequence(sc.marking(), sc.spec(), sc.k0(), sc.s_max(), Convention::Cs).unwrap();
    let points = seq.points();
    eprintln!("points: {:?}", points.iter().map(|(k, z)| (*k, z.norm())).collect::<Vec<_>>());
    for t in [1usize, 2, 3] {
        match prony_detect(&points, t) {
            Ok(d) => eprintln!("max_terms {t}: phases {:?} modulus {}", d.phases, d.modulus),
            Err(e) => eprintln!("max_terms {t}: ERR {e}"),
        }
    }
    panic!("probe");
}
