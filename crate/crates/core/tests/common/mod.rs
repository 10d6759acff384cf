//! Strategies shared by the integration tests.
#![allow(dead_code)]

use chutok::corpus::{CharacterInstance, CharacterTypeTag, Corpus, GlyphLabel};
use chutok::detection::BoundingBox;
use proptest::prelude::*;

pub const MODERN: [&str; 6] = ["初", "人", "木", "水", "火", "日"];
pub const COMPONENTS: [&str; 6] = ["心", "相", "口", "又", "土", "月"];

pub fn arb_label() -> impl Strategy<Value = GlyphLabel> {
    let tags = [
        CharacterTypeTag::Logogram,
        CharacterTypeTag::SemanticPhoneticCompound,
        CharacterTypeTag::Phonogram,
    ];
    let components = prop::sample::subsequence(COMPONENTS.to_vec(), 1..=3)
        .prop_flat_map(|items| Just(items).prop_shuffle())
        .prop_flat_map(move |items| (Just(items), prop::option::of(prop::sample::select(tags.to_vec()))))
        .prop_map(|(items, char_type)| GlyphLabel::Components {
            items: items.into_iter().map(String::from).collect(),
            char_type,
        });
    prop_oneof![
        5 => prop::sample::select(MODERN.to_vec()).prop_map(GlyphLabel::modern),
        3 => components,
        1 => Just(GlyphLabel::Unknown),
    ]
}

/// A valid corpus: unique ids, one reading index per slip position.
pub fn arb_corpus(max_len: usize) -> impl Strategy<Value = Corpus> {
    prop::collection::vec((arb_label(), 0usize..4, any::<bool>(), 1.0..40.0f64), 0..=max_len).prop_map(|rows| {
        let mut next_index = [0u32; 4];
        rows.into_iter()
            .enumerate()
            .map(|(n, (label, slip, with_box, size))| {
                let reading_index = next_index[slip];
                next_index[slip] += 1;
                CharacterInstance {
                    id: format!("i{n:04}"),
                    image_path: format!("crops/i{n:04}.png"),
                    source: "src".into(),
                    document: if slip < 2 { "a".into() } else { "b".into() },
                    slip: format!("s{}", slip % 2),
                    reading_index,
                    bbox: with_box.then(|| BoundingBox::new(3.0, 40.0 * reading_index as f64, size, size + 0.5)),
                    label,
                }
            })
            .collect()
    })
}
