//! Scoring and categorization of questionnaire and measurement predictors.
//!
//! Every function here is pure: identical inputs give identical outputs.

mod cognition;
mod physical;
mod questionnaires;

pub use cognition::{
    battery_raw_scores, global_cognitive_score, zscore, BatteryResponses, BatteryScores, ProspectiveRubric,
    SdConvention, SUBDOMAINS,
};
pub use physical::{
    categorize_bmi, categorize_hgs, classify_bp, score_ipaq, weekly_drinks, ActivityLevel, BmiCategory,
    BodyMeasures, HgsCell, HgsLevel, HgsNorms, HgsReading, IpaqInput, IpaqRecord, Sex,
};
pub use questionnaires::{
    collapse_hearing, iqcode_status, score_cesd8, score_iqcode, social_isolation, Cesd8, CesdScoring,
    ContactFrequency, Hearing, HearingRaw, Iqcode, IqcodeStatus, SocialContact, IQCODE_DEMENTIA, IQCODE_IMPAIRMENT,
    IQCODE_ITEMS,
};
