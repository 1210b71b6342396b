#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace barb {

struct RegressionMetrics {
    std::optional<double> r2;  // absent when the actuals carry zero variance
    double mae = 0.0;
    double mse = 0.0;
};

RegressionMetrics regression_metrics(const std::vector<double>& actual,
                                     const std::vector<double>& predicted);

struct IcdFlags {
    bool htn = false, dm = false, mtbi = false, sad = false, aad = false;

    int count() const {
        return static_cast<int>(htn) + static_cast<int>(dm) + static_cast<int>(mtbi) +
               static_cast<int>(sad) + static_cast<int>(aad);
    }
    bool get(std::size_t i) const;
    static const char* flag_name(std::size_t i);  // i in 0..4
};

// residual = actual - predicted; negative values mean the model sees an
// older-than-chronological brain.
struct ResidualRecord {
    std::string subject_id;
    double actual_age = 0.0;
    double predicted_age = 0.0;
    double residual = 0.0;
    IcdFlags flags;
    int icd_count = 0;
    bool over_age_threshold = false;
};

std::vector<ResidualRecord> compute_residuals(const std::vector<std::string>& ids,
                                              const std::vector<double>& actual,
                                              const std::vector<double>& predicted,
                                              const std::vector<IcdFlags>& flags,
                                              double age_threshold = 49.0);

struct AnovaResult {
    double f = 0.0;
    std::size_t df_between = 0;
    std::size_t df_within = 0;
    double p = 1.0;
};

AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups);

struct GroupLine {
    double slope = 0.0;
    double intercept = 0.0;
};

struct TrendTestResult {
    std::vector<GroupLine> group_lines;
    GroupLine pooled;
    double rss_pooled = 0.0;
    double rss_full = 0.0;
    double f = 0.0;
    std::size_t df_num = 0;
    std::size_t df_den = 0;
    double p = 1.0;
};

// Full model: one line per group. Reduced model: a single pooled line, or,
// with slopes_only, per-group intercepts sharing one slope.
TrendTestResult trendline_equality_test(
    const std::vector<std::vector<std::pair<double, double>>>& groups, bool slopes_only = false);

struct GroupMoments {
    std::string key;
    std::size_t count = 0;
    double mean = 0.0;
    double median = 0.0;
    std::optional<double> skewness;         // m3 / m2^(3/2)
    std::optional<double> excess_kurtosis;  // m4 / m2^2 - 3
};

// Population-moment estimators; skewness/kurtosis absent when the variance
// vanishes or count < 2.
GroupMoments moment_stats(const std::vector<double>& values, std::string key = "");

// Upper tail of the F distribution via the regularized incomplete beta.
double f_survival(double f, double df1, double df2);

double regularized_incomplete_beta(double x, double a, double b);

struct AnovaEntry {
    std::string grouping;
    AnovaResult result;
};

// Everything residual_group_report derives from a set of residual records.
struct ResidualAnalysis {
    double age_threshold = 49.0;
    std::size_t record_count = 0;
    std::vector<GroupMoments> by_icd_count;      // keys "0".."5", present counts only
    std::vector<GroupMoments> by_flag;           // subjects carrying each flag
    std::vector<GroupMoments> by_flag_age_side;  // e.g. "htn<=49", "htn>49"
    std::optional<AnovaResult> anova_by_count;
    std::optional<AnovaResult> anova_by_count_over_threshold;
    std::vector<AnovaEntry> anova_per_flag;               // flag present vs absent
    std::optional<AnovaResult> anova_by_flag_combination;  // grouped by exact flag pattern
    std::optional<TrendTestResult> trend_by_count;  // (actual, predicted) lines per count group
    std::vector<std::string> notes;  // degenerate groupings flagged, never fatal
};

ResidualAnalysis residual_group_report(const std::vector<ResidualRecord>& records,
                                       double age_threshold = 49.0);

struct BiasVarianceEstimate {
    double bias_sq = 0.0;
    double variance = 0.0;
    double irreducible = 0.0;
    double total = 0.0;  // bias_sq + variance + irreducible
};

struct TrainingDraw {
    std::vector<double> x;
    std::vector<double> y;
};

class Rng;

// A data source with known truth: y = f(x) + noise.
class DataSource {
public:
    virtual ~DataSource() = default;
    virtual double true_f(double x) const = 0;
    virtual double noise_variance() const = 0;
    virtual TrainingDraw draw_training(Rng& rng) const = 0;
};

using Predictor = std::function<double(double)>;
using Trainer = std::function<Predictor(const TrainingDraw&)>;

// Monte Carlo estimate over independently drawn training sets: squared bias
// and variance of the trained predictor averaged over the evaluation points,
// plus the source's irreducible noise.
BiasVarianceEstimate bias_variance_decompose(const Trainer& trainer, const DataSource& source,
                                             int n_repeats,
                                             const std::vector<double>& eval_points,
                                             std::uint64_t seed);

}  // namespace barb
