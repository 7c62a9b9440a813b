//! Closed-form MSE predictors.
