//! Baseline classifiers: one-vs-rest logistic regression, diagonal LDA and
//! k-nearest neighbours. All three expect normalized features.

mod knn;
mod lda;
mod logistic;

pub use knn::{knn_predict, KnnModel};
pub use lda::{lda_discriminant, lda_fit, lda_predict, LdaModel};
pub use logistic::{
    log_likelihood, log_likelihood_gradient, lr_predict, lr_train, lr_train_binary, BinaryFit, LogisticConfig,
    LogisticFitInfo, LogisticModel,
};
