//! Group fairness measures and the harm each one equalizes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Statistic;

/// Which way a statistic should move to reduce the harm it tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HarmDirection {
    HigherIsBetter,
    LowerIsBetter,
    /// Context decides: a low selection rate is a harm in hiring, not necessarily elsewhere.
    Bidirectional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FairnessMeasure {
    DemographicParity,
    EqualOpportunity,
    PredictiveParity,
    FalsePositiveErrorRateBalance,
    EqualizedOdds,
    ConditionalUseAccuracyEquality,
    OverallAccuracyEquality,
    TreatmentEquality,
}

/// One row of the measure/harm/remedy taxonomy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmProfile {
    pub measure: FairnessMeasure,
    pub justified_use: &'static str,
    pub example: Option<&'static str>,
    pub harm: Option<&'static str>,
    pub remedy: Option<&'static str>,
    /// Statistics the remedy acts on, with the direction that reduces harm.
    pub remedy_statistics: Vec<(Statistic, HarmDirection)>,
    /// Whether the measure may be used as an equality constraint.
    pub enforceable: bool,
}

impl FairnessMeasure {
    pub const ALL: [FairnessMeasure; 8] = [
        FairnessMeasure::DemographicParity,
        FairnessMeasure::EqualOpportunity,
        FairnessMeasure::PredictiveParity,
        FairnessMeasure::FalsePositiveErrorRateBalance,
        FairnessMeasure::EqualizedOdds,
        FairnessMeasure::ConditionalUseAccuracyEquality,
        FairnessMeasure::OverallAccuracyEquality,
        FairnessMeasure::TreatmentEquality,
    ];

    /// Statistics whose cross-group spread defines the disparity.
    pub fn statistics(self) -> &'static [Statistic] {
        use FairnessMeasure::*;
        match self {
            DemographicParity => &[Statistic::SelectionRate],
            EqualOpportunity => &[Statistic::Tpr],
            PredictiveParity => &[Statistic::Precision],
            FalsePositiveErrorRateBalance => &[Statistic::Tnr],
            EqualizedOdds => &[Statistic::Tpr, Statistic::Fpr],
            ConditionalUseAccuracyEquality => &[Statistic::Precision, Statistic::Npv],
            OverallAccuracyEquality => &[Statistic::Accuracy],
            TreatmentEquality => &[Statistic::FnFpRatio],
        }
    }

    /// First tracked statistic; used for tie-breaking and level-up targets.
    pub fn primary_statistic(self) -> Statistic {
        self.statistics()[0]
    }

    pub fn enforceable(self) -> bool {
        self != FairnessMeasure::TreatmentEquality
    }

    pub fn harm_profile(self) -> HarmProfile {
        use FairnessMeasure::*;
        use HarmDirection::*;
        const GROUND_TRUTH_FP: &str =
            "Situations where there is agreed up on ground-truth and the overwhelming harm comes from false positives.";
        const POLICE: &str = "Misidentification as a known person of interest to the police.";
        const SURGERY: &str = "Treatment of illness by performing risky surgery.";
        const NOT_COMPARABLE: &str = "Harms exist for failure to correctly identify positive and negative cases but they cannot be directly compared.";
        let (justified_use, example, harm, remedy, remedy_statistics) = match self {
            DemographicParity => (
                "Situations where historic data is expected to be prejudicial, and there is no agreed upon ground-truth.",
                Some("Hiring, offering loans, access to education, representation in the media."),
                Some("Lack of selection."),
                Some("Increase or decrease selection rate."),
                vec![(Statistic::SelectionRate, Bidirectional)],
            ),
            EqualOpportunity => (
                "Situations where there is agreed up on ground-truth and the overwhelming harm comes from false negatives.",
                Some("Cancer or other serious illness screening."),
                Some("Failure to identify positive cases."),
                Some("Increase the recall."),
                vec![(Statistic::Tpr, HigherIsBetter)],
            ),
            PredictiveParity => (
                GROUND_TRUTH_FP,
                Some(POLICE),
                Some("Failure to identify negative cases."),
                Some("Increases the precision."),
                vec![(Statistic::Precision, HigherIsBetter)],
            ),
            FalsePositiveErrorRateBalance => (
                GROUND_TRUTH_FP,
                Some(POLICE),
                Some("Failure to identify negative cases."),
                Some("Increase the true negative rate."),
                vec![(Statistic::Tnr, HigherIsBetter)],
            ),
            EqualizedOdds => (
                "Combination of Equal Opportunity and False positive rate.",
                Some(SURGERY),
                Some(NOT_COMPARABLE),
                Some("Increase recall and true negative rate simultaneously (may not be possible)."),
                vec![(Statistic::Tpr, HigherIsBetter), (Statistic::Fpr, LowerIsBetter)],
            ),
            ConditionalUseAccuracyEquality => (
                "Combination of predictive parity and false positive error rate balance.",
                Some(SURGERY),
                Some(NOT_COMPARABLE),
                Some("Increase precision and specificity simultaneously (may not be possible)."),
                vec![(Statistic::Precision, HigherIsBetter), (Statistic::Npv, HigherIsBetter)],
            ),
            OverallAccuracyEquality => (
                "Situations where there is agreed up on ground-truth and the harm of misclassification is the same regardless of how people are situated.",
                Some("Offering someone left- or right-handed scissors."),
                Some("Harms exist for failure to correctly identify positive and negative cases and they are the same in both cases."),
                Some("Increase overall accuracy simultaneously (may not be possible)."),
                vec![(Statistic::Accuracy, HigherIsBetter)],
            ),
            TreatmentEquality => ("Unclear", None, None, None, vec![]),
        };
        HarmProfile {
            measure: self,
            justified_use,
            example,
            harm,
            remedy,
            remedy_statistics,
            enforceable: self.enforceable(),
        }
    }

    pub fn as_str(self) -> &'static str {
        use FairnessMeasure::*;
        match self {
            DemographicParity => "demographic_parity",
            EqualOpportunity => "equal_opportunity",
            PredictiveParity => "predictive_parity",
            FalsePositiveErrorRateBalance => "false_positive_error_rate_balance",
            EqualizedOdds => "equalized_odds",
            ConditionalUseAccuracyEquality => "conditional_use_accuracy_equality",
            OverallAccuracyEquality => "overall_accuracy_equality",
            TreatmentEquality => "treatment_equality",
        }
    }
}

impl fmt::Display for FairnessMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FairnessMeasure {
    type Err = String;

    /// Accepts the snake_case name or a short alias (`dp`, `eo`, `pp`, `fpr`, `eodds`, `cuae`, `oae`, `te`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        use FairnessMeasure::*;
        let m = match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "dp" | "demographic_parity" => DemographicParity,
            "eo" | "equal_opportunity" => EqualOpportunity,
            "pp" | "predictive_parity" => PredictiveParity,
            "fpr" | "tnr" | "false_positive_error_rate_balance" => FalsePositiveErrorRateBalance,
            "eodds" | "equalized_odds" => EqualizedOdds,
            "cuae" | "conditional_use_accuracy_equality" => ConditionalUseAccuracyEquality,
            "oae" | "overall_accuracy_equality" => OverallAccuracyEquality,
            "te" | "treatment_equality" => TreatmentEquality,
            other => return Err(format!("unknown fairness measure `{other}`")),
        };
        Ok(m)
    }
}

impl Statistic {
    /// Direction in which the statistic reduces harm, if it has one.
    pub fn harm_direction(self) -> Option<HarmDirection> {
        use HarmDirection::*;
        match self {
            Statistic::SelectionRate => Some(Bidirectional),
            Statistic::Tpr | Statistic::Tnr | Statistic::Precision | Statistic::Npv | Statistic::Accuracy => {
                Some(HigherIsBetter)
            }
            Statistic::Fnr | Statistic::Fpr => Some(LowerIsBetter),
            Statistic::FnFpRatio => None,
        }
    }

    /// The measure whose harm this statistic tracks most directly.
    pub fn measure(self) -> Option<FairnessMeasure> {
        use FairnessMeasure::*;
        match self {
            Statistic::SelectionRate => Some(DemographicParity),
            Statistic::Tpr | Statistic::Fnr => Some(EqualOpportunity),
            Statistic::Precision => Some(PredictiveParity),
            Statistic::Tnr | Statistic::Fpr => Some(FalsePositiveErrorRateBalance),
            Statistic::Npv => Some(ConditionalUseAccuracyEquality),
            Statistic::Accuracy => Some(OverallAccuracyEquality),
            Statistic::FnFpRatio => Some(TreatmentEquality),
        }
    }
}
