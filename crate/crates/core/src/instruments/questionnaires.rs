use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const IQCODE_ITEMS: usize = 16;
/// Mean IQCODE at or above this marks cognitive impairment.
pub const IQCODE_IMPAIRMENT: f64 = 3.22;
/// Mean IQCODE at or above this marks dementia.
pub const IQCODE_DEMENTIA: f64 = 3.48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IqcodeStatus {
    Normal,
    Impairment,
    Dementia,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Iqcode {
    pub items: [Option<u8>; IQCODE_ITEMS],
    pub score: f64,
    pub status: IqcodeStatus,
}

pub fn iqcode_status(score: f64) -> IqcodeStatus {
    if score >= IQCODE_DEMENTIA {
        IqcodeStatus::Dementia
    } else if score >= IQCODE_IMPAIRMENT {
        IqcodeStatus::Impairment
    } else {
        IqcodeStatus::Normal
    }
}

/// Mean of the answered 1..5 Likert items.
pub fn score_iqcode(items: &[Option<u8>; IQCODE_ITEMS]) -> Result<Iqcode> {
    let answered: Vec<u8> = items.iter().flatten().copied().collect();
    if answered.is_empty() {
        return Err(Error::AllMissing);
    }
    if let Some(bad) = answered.iter().find(|v| !(1..=5).contains(*v)) {
        return Err(Error::InvalidMeasure(format!("IQCODE item value {bad}")));
    }
    let score = answered.iter().map(|&v| f64::from(v)).sum::<f64>() / answered.len() as f64;
    Ok(Iqcode { items: *items, score, status: iqcode_status(score) })
}

/// Which CES-D8 items score on "No".
///
/// `ReverseFiveSeven` reverses items 5 and 7 as the survey instrument is
/// keyed; `ReverseFourSix` reverses the positive-affect items 4 and 6.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CesdScoring {
    #[default]
    ReverseFiveSeven,
    ReverseFourSix,
}

impl CesdScoring {
    fn scores_on_no(self, item: usize) -> bool {
        match self {
            CesdScoring::ReverseFiveSeven => item == 5 || item == 7,
            CesdScoring::ReverseFourSix => item == 4 || item == 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cesd8 {
    pub items: [Option<bool>; 8],
    pub score: u8,
    pub positive: bool,
    /// False when any item is unanswered; such participants are excluded
    /// from the depressive-symptoms predictor.
    pub complete: bool,
}

/// `items[i]` is `Some(true)` for "Yes".
pub fn score_cesd8(items: &[Option<bool>; 8], scoring: CesdScoring) -> Result<Cesd8> {
    if items.iter().all(Option::is_none) {
        return Err(Error::AllMissing);
    }
    let score = items
        .iter()
        .enumerate()
        .filter_map(|(i, a)| a.map(|yes| (i + 1, yes)))
        .filter(|&(item, yes)| yes != scoring.scores_on_no(item))
        .count() as u8;
    Ok(Cesd8 { items: *items, score, positive: score >= 4, complete: items.iter().all(Option::is_some) })
}

/// Contact frequencies, most frequent first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ContactFrequency {
    ThreePlusPerWeek,
    OneTwoPerWeek,
    OneTwoPerMonth,
    EveryTwoThreeMonths,
    OnceTwicePerYear,
    LessThanYearlyOrNever,
}

impl ContactFrequency {
    pub const ALL: [ContactFrequency; 6] = [
        ContactFrequency::ThreePlusPerWeek,
        ContactFrequency::OneTwoPerWeek,
        ContactFrequency::OneTwoPerMonth,
        ContactFrequency::EveryTwoThreeMonths,
        ContactFrequency::OnceTwicePerYear,
        ContactFrequency::LessThanYearlyOrNever,
    ];

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn at_least_monthly(self) -> bool {
        self <= ContactFrequency::OneTwoPerMonth
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SocialContact {
    Isolated,
    InContact,
}

/// Isolated iff every answered item is rarer than monthly; `None` when all
/// three are unanswered.
pub fn social_isolation(freqs: [Option<ContactFrequency>; 3]) -> Option<SocialContact> {
    let answered: Vec<ContactFrequency> = freqs.iter().flatten().copied().collect();
    if answered.is_empty() {
        return None;
    }
    if answered.iter().any(|f| f.at_least_monthly()) {
        Some(SocialContact::InContact)
    } else {
        Some(SocialContact::Isolated)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HearingRaw {
    VeryGoodOrExcellent,
    Good,
    Fair,
    Poor,
    VeryPoor,
}

impl HearingRaw {
    pub const ALL: [HearingRaw; 5] =
        [HearingRaw::VeryGoodOrExcellent, HearingRaw::Good, HearingRaw::Fair, HearingRaw::Poor, HearingRaw::VeryPoor];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hearing {
    Good,
    Fair,
    Poor,
}

pub fn collapse_hearing(raw: Option<HearingRaw>) -> Result<Hearing> {
    match raw.ok_or_else(|| Error::MissingInput("hearing".into()))? {
        HearingRaw::VeryGoodOrExcellent | HearingRaw::Good => Ok(Hearing::Good),
        HearingRaw::Fair => Ok(Hearing::Fair),
        HearingRaw::Poor | HearingRaw::VeryPoor => Ok(Hearing::Poor),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iq(values: &[u8]) -> [Option<u8>; 16] {
        let mut items = [None; 16];
        for (slot, &v) in items.iter_mut().zip(values) {
            *slot = Some(v);
        }
        items
    }

    #[test]
    fn iqcode_examples() {
        let s = score_iqcode(&iq(&[3; 16])).unwrap();
        assert_eq!((s.score, s.status), (3.0, IqcodeStatus::Normal));
        assert_eq!(score_iqcode(&iq(&[4; 16])).unwrap().status, IqcodeStatus::Dementia);
        let mut half = [3u8; 16];
        half[..8].fill(4);
        let s = score_iqcode(&iq(&half)).unwrap();
        assert_eq!((s.score, s.status), (3.5, IqcodeStatus::Dementia));
        let mut seven = [3u8; 16];
        seven[..7].fill(4);
        let s = score_iqcode(&iq(&seven)).unwrap();
        assert_eq!((s.score, s.status), (3.4375, IqcodeStatus::Impairment));
    }

    #[test]
    fn iqcode_uses_answered_items_only() {
        let s = score_iqcode(&iq(&[5, 4])).unwrap();
        assert_eq!(s.score, 4.5);
        assert_eq!(score_iqcode(&[None; 16]), Err(Error::AllMissing));
        assert!(matches!(score_iqcode(&iq(&[6])), Err(Error::InvalidMeasure(_))));
    }

    #[test]
    fn iqcode_boundaries_inclusive() {
        assert_eq!(iqcode_status(3.2199), IqcodeStatus::Normal);
        assert_eq!(iqcode_status(3.22), IqcodeStatus::Impairment);
        assert_eq!(iqcode_status(3.47), IqcodeStatus::Impairment);
        assert_eq!(iqcode_status(3.48), IqcodeStatus::Dementia);
    }

    #[test]
    fn cesd8_examples() {
        let no = score_cesd8(&[Some(false); 8], CesdScoring::ReverseFiveSeven).unwrap();
        assert_eq!((no.score, no.positive), (2, false));
        let yes = score_cesd8(&[Some(true); 8], CesdScoring::ReverseFiveSeven).unwrap();
        assert_eq!((yes.score, yes.positive), (6, true));
        let mut items = [Some(false); 8];
        items[..3].fill(Some(true));
        let s = score_cesd8(&items, CesdScoring::ReverseFiveSeven).unwrap();
        assert_eq!((s.score, s.positive), (5, true));
        assert!(s.complete);
    }

    #[test]
    fn cesd8_conventional_reverses_positive_affect_items() {
        let mut items = [Some(false); 8];
        items[3] = Some(true); // happy
        items[4] = Some(true); // lonely
        assert_eq!(score_cesd8(&items, CesdScoring::ReverseFiveSeven).unwrap().score, 2);
        assert_eq!(score_cesd8(&items, CesdScoring::ReverseFourSix).unwrap().score, 2);
        items[3] = Some(false);
        assert_eq!(score_cesd8(&items, CesdScoring::ReverseFiveSeven).unwrap().score, 1);
        assert_eq!(score_cesd8(&items, CesdScoring::ReverseFourSix).unwrap().score, 3);
    }

    #[test]
    fn cesd8_partial_and_empty() {
        let mut items = [None; 8];
        assert_eq!(score_cesd8(&items, CesdScoring::ReverseFiveSeven), Err(Error::AllMissing));
        items[0] = Some(true);
        let s = score_cesd8(&items, CesdScoring::ReverseFiveSeven).unwrap();
        assert_eq!(s.score, 1);
        assert!(!s.complete);
    }

    #[test]
    fn social_contact_examples() {
        use ContactFrequency::*;
        assert_eq!(social_isolation([Some(ThreePlusPerWeek); 3]), Some(SocialContact::InContact));
        assert_eq!(social_isolation([Some(LessThanYearlyOrNever); 3]), Some(SocialContact::Isolated));
        assert_eq!(social_isolation([None, Some(OneTwoPerMonth), None]), Some(SocialContact::InContact));
        assert_eq!(social_isolation([None, Some(EveryTwoThreeMonths), None]), Some(SocialContact::Isolated));
        assert_eq!(social_isolation([None; 3]), None);
    }

    #[test]
    fn hearing_groups() {
        assert_eq!(collapse_hearing(Some(HearingRaw::VeryGoodOrExcellent)), Ok(Hearing::Good));
        assert_eq!(collapse_hearing(Some(HearingRaw::Good)), Ok(Hearing::Good));
        assert_eq!(collapse_hearing(Some(HearingRaw::Fair)), Ok(Hearing::Fair));
        assert_eq!(collapse_hearing(Some(HearingRaw::Poor)), Ok(Hearing::Poor));
        assert_eq!(collapse_hearing(Some(HearingRaw::VeryPoor)), Ok(Hearing::Poor));
        assert!(matches!(collapse_hearing(None), Err(Error::MissingInput(_))));
    }

    proptest! {
        #[test]
        fn iqcode_status_monotone_in_each_item(
            values in proptest::collection::vec(proptest::option::of(1u8..=5), 16),
            idx in 0usize..16,
            bump in 1u8..=4,
        ) {
            let mut items = [None; 16];
            for (s, v) in items.iter_mut().zip(&values) { *s = *v; }
            let base = items[idx].unwrap_or(1);
            items[idx] = Some(base);
            let lo = score_iqcode(&items).unwrap();
            items[idx] = Some((base + bump).min(5));
            let hi = score_iqcode(&items).unwrap();
            prop_assert!(hi.status >= lo.status);
            prop_assert!((1.0..=5.0).contains(&hi.score));
        }
    }
}
