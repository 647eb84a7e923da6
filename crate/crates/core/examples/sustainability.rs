//! Membership stability and growth rate of a group over four slices.

use std::collections::{BTreeMap, BTreeSet};

use groupdyn::sustainability::{growth_rate, membership_stability, series};
use groupdyn::topics::{TopicTable, DEFAULT_EPSILON};
use groupdyn::{SocialGroup, UserId};

fn users(names: &[&str]) -> BTreeSet<UserId> {
    names.iter().map(|n| UserId::new(*n)).collect()
}

fn main() {
    let prev = users(&["a", "b", "c", "d", "e"]);
    let cur = users(&["e", "f", "g", "h", "i", "j", "k", "l", "m", "n"]);
    println!("4 leave, 9 join: MS = {:?}, GR = {:?}", membership_stability(&prev, &cur), growth_rate(&prev, &cur));

    let snapshots = BTreeMap::from([
        (0, users(&["a", "b", "c"])),
        (1, users(&["a", "b", "c", "d"])),
        (3, users(&["b", "c", "d", "e", "f"])),
    ]);
    let members = snapshots.values().flatten().cloned().collect();
    let group = SocialGroup::from_snapshots(0, members, snapshots);
    let s = series(&group, 4, &TopicTable::new(3), DEFAULT_EPSILON);
    println!("per-slice MS {:?}", s.ms);
    println!("per-slice GR {:?}", s.gr);
    println!("mean MS {:?}, mean GR {:?}", s.mean_ms(), s.mean_gr());
}
