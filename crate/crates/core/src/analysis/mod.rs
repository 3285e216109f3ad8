//! Background factors to perception ratings, and perceptions to social
//! media engagement.

mod engagement;
mod perception;
mod posts;
pub mod synth;

pub use engagement::{
    engagement_study, fit_engagement_predictor, fit_engagement_predictors, predict_engagement, score_posts,
    DatasetMetadata, EngagementDataset, EngagementPrediction, EngagementPredictor, EngagementRow, EngagementStudy,
    DEFAULT_VIF_THRESHOLD, FIRST_SHARE, LOG_COMMENTS, LOG_SCORE, OUTCOMES, ROWS_PER_PREDICTOR,
};
pub use perception::{categorical_contrast, perception_outcome_study, political_column, FREQUENCY_VARIABLE};
pub use posts::{
    build_url_groups, engagement_outcomes, normalize_url, url_domain, GroupedPost, SocialPost, UrlGroups,
    COMMENTS_TRANSFORM, SCORE_TRANSFORM,
};
