//! Column names and codebooks for the raw cohort format and the derived
//! analysis cohort.
//!
//! Binary raw flags use levels `[no, yes]` (code 0 / 1); level index 1 is
//! read as "true" throughout.

use crate::data::{Codebook, Kind, Role, VariableSpec};

pub const ID: &str = "id";
pub const AGE: &str = "age";
pub const SEX: &str = "sex";
pub const EDUCATION: &str = "education";
pub const EDUCATION_YEARS: &str = "education_years";
pub const SKIN_COLOR: &str = "skin_color";
pub const OCCUPATION: &str = "occupation";
pub const MARITAL_STATUS: &str = "marital_status";
pub const WEIGHT: &str = "weight_kg";
pub const HEIGHT: &str = "height_m";
pub const SBP: [&str; 3] = ["sbp_1", "sbp_2", "sbp_3"];
pub const DBP: [&str; 3] = ["dbp_1", "dbp_2", "dbp_3"];
pub const DIABETES: &str = "diabetes";
pub const HIGH_CHOLESTEROL: &str = "high_cholesterol";
pub const CATARACT_DX: &str = "cataract_dx";
pub const CATARACT_SURGERY: &str = "cataract_surgery";
pub const RETINOPATHY: &str = "retinopathy";
pub const HEARING_SELF: &str = "hearing_self";
pub const WALK_DAYS: &str = "walk_days";
pub const WALK_MIN: &str = "walk_min";
pub const MODERATE_DAYS: &str = "moderate_days";
pub const MODERATE_MIN: &str = "moderate_min";
pub const VIGOROUS_DAYS: &str = "vigorous_days";
pub const VIGOROUS_MIN: &str = "vigorous_min";
pub const HGS_KGF: &str = "hgs_kgf";
pub const HGS_STATUS: &str = "hgs_status";
pub const SMOKING: &str = "smoking";
pub const ALCOHOL_DAYS: &str = "alcohol_days";
pub const ALCOHOL_DRINKS: &str = "alcohol_drinks";
pub const CONTACT: [&str; 3] = ["contact_children", "contact_relatives", "contact_friends"];
pub const LONELINESS: &str = "loneliness";
pub const LIFE_SATISFACTION: &str = "life_satisfaction";
pub const CESD: [&str; 8] = ["cesd_1", "cesd_2", "cesd_3", "cesd_4", "cesd_5", "cesd_6", "cesd_7", "cesd_8"];
pub const ORIENTATION: [&str; 4] = ["orient_day", "orient_month", "orient_year", "orient_weekday"];
pub const SEMANTIC_MEMORY_PREFIX: &str = "semmem_";
pub const FLUENCY: &str = "fluency_animals";
pub const RECALL_IMMEDIATE: &str = "recall_immediate";
pub const RECALL_DELAYED: &str = "recall_delayed";
pub const PROSPECTIVE: &str = "prospective_code";
pub const IQCODE_PREFIX: &str = "iqcode_";
pub const IADL: [&str; 4] = ["iadl_finances", "iadl_transport", "iadl_telephone", "iadl_medications"];
pub const IADL_NONCOGNITIVE: &str = "iadl_noncognitive";
pub const VISION_IMPAIRMENT: &str = "vision_impairment";
pub const HEARING_IMPAIRMENT: &str = "hearing_impairment";
pub const DEPRESSION_DX: &str = "depression_dx";
pub const STROKE: &str = "stroke";
pub const ALZHEIMER: &str = "alzheimer";
pub const PARKINSON: &str = "parkinson";
pub const MEMORY_SELF: &str = "memory_complaint_self";
pub const MEMORY_INFORMANT: &str = "memory_complaint_informant";

// Derived analysis columns.
pub const AGE_GROUP: &str = "age_group";
pub const BMI: &str = "bmi";
pub const HGS: &str = "hgs";
pub const PHYSICAL_ACTIVITY: &str = "physical_activity";
pub const HEARING: &str = "hearing";
pub const DEPRESSIVE_SYMPTOMS: &str = "depressive_symptoms";
pub const SOCIAL_ISOLATION: &str = "social_isolation";
pub const HYPERTENSION: &str = "hypertension";
pub const CATARACT: &str = "cataract";
pub const EXCESSIVE_ALCOHOL: &str = "excessive_alcohol";
pub const OUTCOME: &str = "dementia";

// Label columns appended by the labeling stage.
pub const COG_STATUS: &str = "cog_status";
pub const RESIDUAL_Z: &str = "residual_z";
pub const LABEL_PATH: &str = "label_path";

pub const EDUCATION_LEVELS: [&str; 6] = [
    "Illiterate",
    "Less than Primary Education",
    "Completed Primary Education",
    "Incomplete Secondary Education",
    "Completed Secondary Education",
    "Higher Education or More",
];
pub const AGE_GROUPS: [&str; 9] = ["50-54", "55-59", "60-64", "65-69", "70-74", "75-79", "80-84", "85-89", "90+"];
pub const BMI_LEVELS: [&str; 7] = [
    "Severely underweight",
    "Underweight",
    "Normal weight",
    "Overweight",
    "Moderately obese (Grade I)",
    "Severely obese (Grade II)",
    "Morbid obesity (Grade III)",
];
pub const HGS_LEVELS: [&str; 5] = ["Low", "Slightly low", "Moderate", "Slightly high", "High"];
pub const MARITAL_LEVELS: [&str; 4] = ["Single", "Married/partner/stable union", "Divorced or separated", "Widowed"];
pub const SKIN_LEVELS: [&str; 5] =
    ["White", "Black", "Brown (mixed race)", "Yellow (East Asian origin)", "Indigenous"];
pub const ACTIVITY_LEVELS: [&str; 3] = ["High", "Moderate", "Low"];
pub const LONELINESS_LEVELS: [&str; 3] = ["Never", "Sometimes", "Always"];
pub const HEARING_LEVELS: [&str; 3] = ["Good", "Fair", "Poor"];
pub const HEARING_RAW_LEVELS: [&str; 5] = ["Very good or excellent", "Good", "Fair", "Poor", "Very poor"];
pub const SEX_LEVELS: [&str; 2] = ["Male", "Female"];
pub const OCCUPATION_LEVELS: [&str; 2] = ["No (Not working)", "Yes (working)"];
pub const SMOKING_LEVELS: [&str; 3] = ["No", "Yes, less than daily", "Yes, daily"];
pub const CONTACT_LEVELS: [&str; 6] = [
    "3 or more times per week",
    "1 or 2 times per week",
    "1 or 2 times per month",
    "Every 2 or 3 months",
    "Once or twice per year",
    "Less than once a year or never",
];
pub const HGS_STATUS_LEVELS: [&str; 5] = ["measured", "attempted_but_could_not", "unable", "refused", "not_attempted_risk"];
pub const NO_YES: [&str; 2] = ["No", "Yes"];
pub const OUTCOME_LEVELS: [&str; 2] = ["Normal cognition", "Dementia"];

/// Age in years to its 5-year band, `None` below 50.
pub fn age_group_index(age: f64) -> Option<usize> {
    if age < 50.0 {
        return None;
    }
    Some((((age - 50.0) / 5.0).floor() as usize).min(AGE_GROUPS.len() - 1))
}

fn cat(name: &str, kind: Kind, labels: &[&str], reference: &str, role: Role) -> VariableSpec {
    VariableSpec::indexed(name, kind, labels, reference, role)
}

fn yes_no(name: &str, role: Role) -> VariableSpec {
    cat(name, Kind::Binary, &NO_YES, "No", role)
}

fn cont(name: &str, role: Role) -> VariableSpec {
    VariableSpec::continuous(name, role)
}

/// Semantic-memory item columns: `semmem_1..=count`.
pub fn semantic_memory_columns(count: usize) -> Vec<String> {
    (1..=count).map(|i| format!("{SEMANTIC_MEMORY_PREFIX}{i}")).collect()
}

pub fn iqcode_columns() -> Vec<String> {
    (1..=16).map(|i| format!("{IQCODE_PREFIX}{i}")).collect()
}

/// Codebook of the raw participant-level file.
pub fn raw_codebook(semantic_items: usize) -> Codebook {
    use Role::{Identifier as Id, Predictor as P, RawInstrument as R};
    let mut v = vec![
        cont(ID, Id),
        cont(AGE, P),
        cat(SEX, Kind::Binary, &SEX_LEVELS, "Male", P),
        cat(EDUCATION, Kind::Ordinal, &EDUCATION_LEVELS, "Higher Education or More", P),
        cont(EDUCATION_YEARS, R),
        cat(SKIN_COLOR, Kind::Nominal, &SKIN_LEVELS, "White", P),
        cat(OCCUPATION, Kind::Binary, &OCCUPATION_LEVELS, "No (Not working)", P),
        cat(MARITAL_STATUS, Kind::Nominal, &MARITAL_LEVELS, "Married/partner/stable union", P),
        cont(WEIGHT, R),
        cont(HEIGHT, R),
    ];
    for (s, d) in SBP.iter().zip(DBP) {
        v.push(cont(s, R));
        v.push(cont(d, R));
    }
    for name in [DIABETES, HIGH_CHOLESTEROL, RETINOPATHY] {
        v.push(yes_no(name, P));
    }
    for name in [CATARACT_DX, CATARACT_SURGERY] {
        v.push(yes_no(name, R));
    }
    v.push(cat(HEARING_SELF, Kind::Ordinal, &HEARING_RAW_LEVELS, "Good", R));
    for name in [WALK_DAYS, WALK_MIN, MODERATE_DAYS, MODERATE_MIN, VIGOROUS_DAYS, VIGOROUS_MIN] {
        v.push(cont(name, R));
    }
    v.push(cont(HGS_KGF, R));
    v.push(cat(HGS_STATUS, Kind::Nominal, &HGS_STATUS_LEVELS, "measured", R));
    v.push(cat(SMOKING, Kind::Nominal, &SMOKING_LEVELS, "No", P));
    v.push(cont(ALCOHOL_DAYS, R));
    v.push(cont(ALCOHOL_DRINKS, R));
    for name in CONTACT {
        v.push(cat(name, Kind::Ordinal, &CONTACT_LEVELS, CONTACT_LEVELS[0], R));
    }
    v.push(cat(LONELINESS, Kind::Ordinal, &LONELINESS_LEVELS, "Never", P));
    v.push(cont(LIFE_SATISFACTION, P).with_range(1.0, 10.0));
    for name in CESD {
        v.push(yes_no(name, R));
    }
    for name in ORIENTATION {
        v.push(yes_no(name, R));
    }
    for name in semantic_memory_columns(semantic_items) {
        v.push(yes_no(&name, R));
    }
    for name in [FLUENCY, RECALL_IMMEDIATE, RECALL_DELAYED, PROSPECTIVE] {
        v.push(cont(name, R));
    }
    for name in iqcode_columns() {
        v.push(VariableSpec::categorical(
            &name,
            Kind::Ordinal,
            &[
                (1, "Improved a lot"),
                (2, "Some improvement"),
                (3, "Did not change much"),
                (4, "Some decline"),
                (5, "Worsened a lot"),
            ],
            "Did not change much",
            R,
        ));
    }
    for name in IADL.iter().chain([&IADL_NONCOGNITIVE]) {
        v.push(yes_no(name, R));
    }
    for name in [
        VISION_IMPAIRMENT,
        HEARING_IMPAIRMENT,
        DEPRESSION_DX,
        STROKE,
        ALZHEIMER,
        PARKINSON,
        MEMORY_SELF,
        MEMORY_INFORMANT,
    ] {
        v.push(yes_no(name, R));
    }
    Codebook { variables: v }
}

/// The 21 derived candidate predictors, in a fixed column order.
pub fn analysis_predictors() -> Vec<VariableSpec> {
    use Role::Predictor as P;
    vec![
        cat(EDUCATION, Kind::Ordinal, &EDUCATION_LEVELS, "Higher Education or More", P),
        cat(AGE_GROUP, Kind::Ordinal, &AGE_GROUPS, "50-54", P),
        cont(LIFE_SATISFACTION, P).with_range(1.0, 10.0),
        cat(BMI, Kind::Ordinal, &BMI_LEVELS, "Normal weight", P),
        cat(HGS, Kind::Ordinal, &HGS_LEVELS, "High", P),
        cat(MARITAL_STATUS, Kind::Nominal, &MARITAL_LEVELS, "Married/partner/stable union", P),
        cat(SKIN_COLOR, Kind::Nominal, &SKIN_LEVELS, "White", P),
        cat(PHYSICAL_ACTIVITY, Kind::Ordinal, &ACTIVITY_LEVELS, "High", P),
        cat(LONELINESS, Kind::Ordinal, &LONELINESS_LEVELS, "Never", P),
        cat(HEARING, Kind::Ordinal, &HEARING_LEVELS, "Good", P),
        yes_no(DEPRESSIVE_SYMPTOMS, P),
        cat(SEX, Kind::Binary, &SEX_LEVELS, "Male", P),
        yes_no(HIGH_CHOLESTEROL, P),
        cat(OCCUPATION, Kind::Binary, &OCCUPATION_LEVELS, "No (Not working)", P),
        yes_no(DIABETES, P),
        yes_no(RETINOPATHY, P),
        cat(SMOKING, Kind::Nominal, &SMOKING_LEVELS, "No", P),
        yes_no(SOCIAL_ISOLATION, P),
        yes_no(HYPERTENSION, P),
        yes_no(CATARACT, P),
        yes_no(EXCESSIVE_ALCOHOL, P),
    ]
}

pub fn outcome_spec() -> VariableSpec {
    cat(OUTCOME, Kind::Binary, &OUTCOME_LEVELS, "Normal cognition", Role::Outcome)
}
