#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "barb/lstsq.hpp"

namespace barb {

using BasePreds = std::array<double, 4>;

struct EnsembleSpec {
    int degree = 3;  // 0 selects the parameter-free arithmetic average
    bool include_interactions = false;

    void validate() const;  // degree must lie in {0,..,4}
    std::string name() const;
    bool operator==(const EnsembleSpec&) const = default;
};

// Polynomial feature width excluding the intercept.
std::size_t design_width(const EnsembleSpec& spec);

// Feature layout: powers in descending total degree; within a degree the pure
// powers y_i^p in modality order, then (degree 2 only, when interactions are
// enabled) the pairwise products y_i*y_j with i < j. The intercept is not part
// of the row.
std::vector<double> design_row(const BasePreds& preds, const EnsembleSpec& spec);

struct FitDiagnostics {
    double rss = 0.0;
    double cond = 0.0;
    std::size_t rank = 0;
};

struct EnsembleModel {
    EnsembleSpec spec;
    // design_width coefficients in design_row order, then the intercept.
    // Empty for degree 0.
    std::vector<double> coefficients;
    FitDiagnostics diagnostics;

    double intercept() const { return coefficients.empty() ? 0.0 : coefficients.back(); }
};

// Ordinary least squares with intercept; rank-deficient designs fall back to
// the minimum-norm solution rather than failing.
EnsembleModel fit_ensemble(const std::vector<BasePreds>& base_preds,
                           const std::vector<double>& ages, const EnsembleSpec& spec);

double predict_ensemble(const EnsembleModel& model, const BasePreds& preds);

struct MetricTriple {
    double r2 = 0.0;
    double mae = 0.0;
    double mse = 0.0;
};

struct CvCandidate {
    EnsembleSpec spec;
    bool failed = false;  // underdetermined on some split; excluded from selection
    std::vector<MetricTriple> per_split;
    MetricTriple mean;
    MetricTriple variance;  // sample variance across splits
};

struct CvReport {
    std::size_t folds = 0;
    std::uint64_t seed = 0;
    std::vector<CvCandidate> candidates;
    std::size_t selected = 0;  // index into candidates
};

// {average, linear, second, third, fourth}, no interaction terms.
std::vector<EnsembleSpec> default_candidates();

// Seeded k-fold cross-validation of every candidate; selection by highest
// mean R^2, ties broken by lower mean MSE, then lower degree.
CvReport cross_validate_select(const std::vector<BasePreds>& base_preds,
                               const std::vector<double>& ages,
                               const std::vector<EnsembleSpec>& candidates, std::size_t k,
                               std::uint64_t seed);

}  // namespace barb
