//! Labels users with regional, expertise and AID identities and reports the
//! entropy of each identity type for one group.

use std::collections::BTreeSet;

use groupdyn::corpus::{Corpus, RawProfile};
use groupdyn::identity::{ExpertiseLexicon, Gazetteer, GroupIdentity, IdentityLabeler};
use groupdyn::UserId;

fn profile(user: &str, location: &str, description: &str, counts: (u64, u64, u64)) -> RawProfile {
    RawProfile {
        user_id: UserId::new(user),
        location: location.into(),
        description: description.into(),
        posts: Some(counts.0),
        mentions_received: Some(counts.1),
        retweets_received: Some(counts.2),
    }
}

fn main() {
    let profiles = vec![
        profile("ann", "Brooklyn, NY", "ER nurse and mom", (40, 12, 3)),
        profile("bob", "Hoboken, New Jersey", "reporter at a local paper", (8, 90, 40)),
        profile("cat", "London", "software engineer", (2, 1, 0)),
        profile("dan", "Queens, NY", "state senator", (15, 5, 60)),
        profile("eve", "", "", (1, 0, 0)),
    ];
    let corpus = Corpus::from_parts(Vec::new(), profiles, Vec::new(), 86_400).unwrap();
    let labeler = IdentityLabeler::for_corpus(&corpus, Gazetteer::bundled(), ExpertiseLexicon::bundled(), "US");

    for p in corpus.profiles() {
        let l = labeler.label(p);
        println!(
            "{:<4} regional={:<12} expertise={:<14} aid={}",
            p.user_id,
            l.regional.as_deref().unwrap_or("-"),
            l.expertise.name(),
            l.aid
        );
    }
    let group: BTreeSet<UserId> = corpus.users().cloned().collect();
    let h = GroupIdentity::compute(&group, &corpus, &labeler);
    println!("regional entropy  {:?}", h.regional_entropy);
    println!("expertise entropy {:?}", h.expertise_entropy);
    println!("aid entropy       {:?}", h.aid_entropy);
}
