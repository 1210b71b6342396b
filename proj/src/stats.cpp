#include "barb/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "barb/errors.hpp"
#include "barb/rng.hpp"

namespace barb {

RegressionMetrics regression_metrics(const std::vector<double>& actual,
                                     const std::vector<double>& predicted) {
    if (actual.size() != predicted.size()) {
        throw DimensionError("regression_metrics: length mismatch");
    }
    if (actual.size() < 2) throw ValueError("regression_metrics: need at least 2 observations");
    const double n = static_cast<double>(actual.size());
    double mean = std::accumulate(actual.begin(), actual.end(), 0.0) / n;
    double ss_tot = 0.0, ss_res = 0.0, abs_sum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        if (!std::isfinite(actual[i]) || !std::isfinite(predicted[i])) {
            throw ValueError("regression_metrics: non-finite input");
        }
        const double r = actual[i] - predicted[i];
        ss_res += r * r;
        abs_sum += std::abs(r);
        ss_tot += (actual[i] - mean) * (actual[i] - mean);
    }
    RegressionMetrics m;
    m.mae = abs_sum / n;
    m.mse = ss_res / n;
    if (ss_tot > 0.0) m.r2 = 1.0 - ss_res / ss_tot;
    return m;
}

bool IcdFlags::get(std::size_t i) const {
    switch (i) {
        case 0: return htn;
        case 1: return dm;
        case 2: return mtbi;
        case 3: return sad;
        case 4: return aad;
    }
    throw ValueError("IcdFlags: index out of range");
}

const char* IcdFlags::flag_name(std::size_t i) {
    static const char* names[] = {"htn", "dm", "mtbi", "sad", "aad"};
    if (i >= 5) throw ValueError("IcdFlags: index out of range");
    return names[i];
}

std::vector<ResidualRecord> compute_residuals(const std::vector<std::string>& ids,
                                              const std::vector<double>& actual,
                                              const std::vector<double>& predicted,
                                              const std::vector<IcdFlags>& flags,
                                              double age_threshold) {
    if (ids.size() != actual.size() || actual.size() != predicted.size() ||
        predicted.size() != flags.size()) {
        throw DimensionError("compute_residuals: input lengths disagree");
    }
    std::vector<ResidualRecord> out;
    out.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (!std::isfinite(actual[i]) || !std::isfinite(predicted[i])) {
            throw ValueError("compute_residuals: non-finite input for subject " + ids[i]);
        }
        ResidualRecord r;
        r.subject_id = ids[i];
        r.actual_age = actual[i];
        r.predicted_age = predicted[i];
        r.residual = actual[i] - predicted[i];
        r.flags = flags[i];
        r.icd_count = flags[i].count();
        r.over_age_threshold = actual[i] > age_threshold;
        out.push_back(std::move(r));
    }
    return out;
}

AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) throw ValueError("one_way_anova: need at least 2 groups");
    std::size_t n = 0;
    for (const auto& g : groups) {
        if (g.empty()) throw ValueError("one_way_anova: empty group");
        n += g.size();
    }
    if (n <= groups.size()) {
        throw ValueError("one_way_anova: no within-group degrees of freedom");
    }
    double grand = 0.0;
    for (const auto& g : groups) grand = std::accumulate(g.begin(), g.end(), grand);
    grand /= static_cast<double>(n);

    double ssb = 0.0, ssw = 0.0;
    for (const auto& g : groups) {
        const double gmean =
            std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
        ssb += static_cast<double>(g.size()) * (gmean - grand) * (gmean - grand);
        for (double v : g) ssw += (v - gmean) * (v - gmean);
    }

    AnovaResult res;
    res.df_between = groups.size() - 1;
    res.df_within = n - groups.size();
    if (ssw == 0.0) {
        if (ssb == 0.0) {
            res.f = 0.0;
            res.p = 1.0;
        } else {
            res.f = std::numeric_limits<double>::infinity();
            res.p = 0.0;
        }
        return res;
    }
    res.f = (ssb / static_cast<double>(res.df_between)) /
            (ssw / static_cast<double>(res.df_within));
    res.p = f_survival(res.f, static_cast<double>(res.df_between),
                       static_cast<double>(res.df_within));
    return res;
}

namespace {

struct LineFit {
    GroupLine line;
    double rss = 0.0;
};

LineFit fit_line(const std::vector<std::pair<double, double>>& pts) {
    const double n = static_cast<double>(pts.size());
    double xbar = 0.0, ybar = 0.0;
    for (const auto& [x, y] : pts) {
        xbar += x;
        ybar += y;
    }
    xbar /= n;
    ybar /= n;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [x, y] : pts) {
        sxx += (x - xbar) * (x - xbar);
        sxy += (x - xbar) * (y - ybar);
    }
    LineFit fit;
    fit.line.slope = sxy / sxx;
    fit.line.intercept = ybar - fit.line.slope * xbar;
    for (const auto& [x, y] : pts) {
        const double r = y - (fit.line.slope * x + fit.line.intercept);
        fit.rss += r * r;
    }
    return fit;
}

}  // namespace

TrendTestResult trendline_equality_test(
    const std::vector<std::vector<std::pair<double, double>>>& groups, bool slopes_only) {
    if (groups.size() < 2) throw ValueError("trendline_equality_test: need at least 2 groups");
    std::size_t n = 0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].size() < 3) {
            throw ValueError("trendline_equality_test: group " + std::to_string(g) +
                             " has fewer than 3 points");
        }
        double xbar = 0.0;
        for (const auto& [x, y] : groups[g]) xbar += x;
        xbar /= static_cast<double>(groups[g].size());
        double sxx = 0.0;
        for (const auto& [x, y] : groups[g]) sxx += (x - xbar) * (x - xbar);
        if (sxx == 0.0) {
            throw ValueError("trendline_equality_test: group " + std::to_string(g) +
                             " has zero x-variance");
        }
        n += groups[g].size();
    }
    if (n <= 2 * groups.size()) {
        throw ValueError("trendline_equality_test: too few points for per-group lines");
    }

    TrendTestResult res;
    double y_scale = 0.0;
    {
        std::vector<std::pair<double, double>> all;
        for (const auto& g : groups) all.insert(all.end(), g.begin(), g.end());
        const LineFit pooled = fit_line(all);
        res.pooled = pooled.line;
        double ybar = 0.0;
        for (const auto& [x, y] : all) ybar += y;
        ybar /= static_cast<double>(all.size());
        for (const auto& [x, y] : all) y_scale += (y - ybar) * (y - ybar);
        if (!slopes_only) res.rss_pooled = pooled.rss;
    }

    for (const auto& g : groups) {
        const LineFit fit = fit_line(g);
        res.group_lines.push_back(fit.line);
        res.rss_full += fit.rss;
    }

    if (slopes_only) {
        // Common slope, free intercepts: slope = pooled within-group covariance.
        double sxx = 0.0, sxy = 0.0;
        for (const auto& g : groups) {
            double xbar = 0.0, ybar = 0.0;
            for (const auto& [x, y] : g) {
                xbar += x;
                ybar += y;
            }
            xbar /= static_cast<double>(g.size());
            ybar /= static_cast<double>(g.size());
            for (const auto& [x, y] : g) {
                sxx += (x - xbar) * (x - xbar);
                sxy += (x - xbar) * (y - ybar);
            }
        }
        const double slope = sxy / sxx;
        for (const auto& g : groups) {
            double xbar = 0.0, ybar = 0.0;
            for (const auto& [x, y] : g) {
                xbar += x;
                ybar += y;
            }
            xbar /= static_cast<double>(g.size());
            ybar /= static_cast<double>(g.size());
            const double intercept = ybar - slope * xbar;
            for (const auto& [x, y] : g) {
                const double r = y - (slope * x + intercept);
                res.rss_pooled += r * r;
            }
        }
        res.df_num = groups.size() - 1;
    } else {
        res.df_num = 2 * groups.size() - 2;
    }
    res.df_den = n - 2 * groups.size();

    res.rss_full = std::min(res.rss_full, res.rss_pooled);
    const double tol = y_scale * 1e-12;
    if (res.rss_pooled <= tol) {
        res.f = 0.0;
        res.p = 1.0;
        return res;
    }
    if (res.rss_full <= tol) {
        res.f = std::numeric_limits<double>::infinity();
        res.p = 0.0;
        return res;
    }
    res.f = ((res.rss_pooled - res.rss_full) / static_cast<double>(res.df_num)) /
            (res.rss_full / static_cast<double>(res.df_den));
    res.p = f_survival(res.f, static_cast<double>(res.df_num), static_cast<double>(res.df_den));
    return res;
}

GroupMoments moment_stats(const std::vector<double>& values, std::string key) {
    if (values.empty()) throw ValueError("moment_stats: empty input");
    GroupMoments gm;
    gm.key = std::move(key);
    gm.count = values.size();
    const double n = static_cast<double>(values.size());
    gm.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;

    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = sorted.size() / 2;
    gm.median = sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);

    if (values.size() < 2) return gm;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : values) {
        const double d = v - gm.mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if (m2 > 0.0) {
        gm.skewness = m3 / std::pow(m2, 1.5);
        gm.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    }
    return gm;
}

namespace {

// Continued fraction for the regularized incomplete beta (modified Lentz).
double betacf(double x, double a, double b) {
    const double tiny = 1e-300;
    const double eps = 1e-16;
    double c = 1.0;
    double d = 1.0 - (a + b) * x / (a + 1.0);
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 500; ++m) {
        const double dm = static_cast<double>(m);
        double num = dm * (b - dm) * x / ((a + 2.0 * dm - 1.0) * (a + 2.0 * dm));
        d = 1.0 + num * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + num / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        num = -(a + dm) * (a + b + dm) * x / ((a + 2.0 * dm) * (a + 2.0 * dm + 1.0));
        d = 1.0 + num * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + num / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double mult = d * c;
        h *= mult;
        if (std::abs(mult - 1.0) < eps) break;
    }
    return h;
}

}  // namespace

double regularized_incomplete_beta(double x, double a, double b) {
    if (a <= 0.0 || b <= 0.0) throw ValueError("incomplete beta: a, b must be > 0");
    if (x < 0.0 || x > 1.0) throw ValueError("incomplete beta: x must lie in [0,1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return std::exp(ln_front) * betacf(x, a, b) / a;
    }
    return 1.0 - std::exp(ln_front) * betacf(1.0 - x, b, a) / b;
}

double f_survival(double f, double df1, double df2) {
    if (df1 < 1.0 || df2 < 1.0) throw ValueError("f_survival: df must be >= 1");
    if (!(f >= 0.0)) throw ValueError("f_survival: F must be >= 0");
    if (std::isinf(f)) return 0.0;
    const double x = df2 / (df2 + df1 * f);
    return regularized_incomplete_beta(x, df2 / 2.0, df1 / 2.0);
}

namespace {

void append_moments(std::vector<GroupMoments>& out, const std::string& key,
                    const std::vector<double>& values, std::vector<std::string>& notes) {
    if (values.empty()) return;
    GroupMoments gm = moment_stats(values, key);
    if (!gm.skewness.has_value()) {
        notes.push_back("group '" + key + "' has degenerate variance; skewness/kurtosis omitted");
    }
    out.push_back(std::move(gm));
}

}  // namespace

ResidualAnalysis residual_group_report(const std::vector<ResidualRecord>& records,
                                       double age_threshold) {
    if (records.empty()) throw ValueError("residual_group_report: no records");
    ResidualAnalysis out;
    out.age_threshold = age_threshold;
    out.record_count = records.size();

    std::map<int, std::vector<double>> by_count;
    std::map<int, std::vector<double>> by_count_over;
    std::map<int, std::vector<std::pair<double, double>>> points_by_count;
    for (const ResidualRecord& r : records) {
        by_count[r.icd_count].push_back(r.residual);
        if (r.actual_age > age_threshold) by_count_over[r.icd_count].push_back(r.residual);
        points_by_count[r.icd_count].push_back({r.actual_age, r.predicted_age});
    }
    for (const auto& [count, values] : by_count) {
        append_moments(out.by_icd_count, std::to_string(count), values, out.notes);
    }

    for (std::size_t i = 0; i < 5; ++i) {
        std::vector<double> with_flag, low, high;
        for (const ResidualRecord& r : records) {
            if (!r.flags.get(i)) continue;
            with_flag.push_back(r.residual);
            (r.actual_age > age_threshold ? high : low).push_back(r.residual);
        }
        const std::string name = IcdFlags::flag_name(i);
        append_moments(out.by_flag, name, with_flag, out.notes);
        append_moments(out.by_flag_age_side, name + "<=" + std::to_string(age_threshold), low,
                       out.notes);
        append_moments(out.by_flag_age_side, name + ">" + std::to_string(age_threshold), high,
                       out.notes);
    }

    auto run_anova = [&out](const std::map<int, std::vector<double>>& grouped,
                            const std::string& label) -> std::optional<AnovaResult> {
        std::vector<std::vector<double>> groups;
        std::size_t total = 0;
        for (const auto& [key, values] : grouped) {
            if (!values.empty()) {
                groups.push_back(values);
                total += values.size();
            }
        }
        if (groups.size() < 2 || total <= groups.size()) {
            out.notes.push_back("anova '" + label + "' not applicable: fewer than 2 usable groups");
            return std::nullopt;
        }
        return one_way_anova(groups);
    };
    out.anova_by_count = run_anova(by_count, "icd_count");
    out.anova_by_count_over_threshold = run_anova(by_count_over, "icd_count_over_threshold");

    for (std::size_t i = 0; i < 5; ++i) {
        std::vector<double> with_flag, without_flag;
        for (const ResidualRecord& r : records) {
            (r.flags.get(i) ? with_flag : without_flag).push_back(r.residual);
        }
        const std::string name = IcdFlags::flag_name(i);
        if (with_flag.empty() || without_flag.empty() ||
            with_flag.size() + without_flag.size() <= 2) {
            out.notes.push_back("anova '" + name + "' not applicable: one-sided flag");
            continue;
        }
        out.anova_per_flag.push_back({name, one_way_anova({with_flag, without_flag})});
    }

    {
        std::map<int, std::vector<double>> by_pattern;
        for (const ResidualRecord& r : records) {
            int pattern = 0;
            for (std::size_t i = 0; i < 5; ++i) pattern |= r.flags.get(i) ? (1 << i) : 0;
            by_pattern[pattern].push_back(r.residual);
        }
        out.anova_by_flag_combination = run_anova(by_pattern, "flag_combination");
    }

    {
        std::vector<std::vector<std::pair<double, double>>> groups;
        for (const auto& [count, pts] : points_by_count) {
            if (pts.size() < 3) {
                out.notes.push_back("trend test: icd_count group " + std::to_string(count) +
                                    " skipped (fewer than 3 points)");
                continue;
            }
            double xbar = 0.0;
            for (const auto& [x, y] : pts) xbar += x;
            xbar /= static_cast<double>(pts.size());
            double sxx = 0.0;
            for (const auto& [x, y] : pts) sxx += (x - xbar) * (x - xbar);
            if (sxx == 0.0) {
                out.notes.push_back("trend test: icd_count group " + std::to_string(count) +
                                    " skipped (zero age variance)");
                continue;
            }
            groups.push_back(pts);
        }
        std::size_t total = 0;
        for (const auto& g : groups) total += g.size();
        if (groups.size() >= 2 && total > 2 * groups.size()) {
            out.trend_by_count = trendline_equality_test(groups);
        } else {
            out.notes.push_back("trend test not applicable: fewer than 2 usable groups");
        }
    }
    return out;
}

BiasVarianceEstimate bias_variance_decompose(const Trainer& trainer, const DataSource& source,
                                             int n_repeats,
                                             const std::vector<double>& eval_points,
                                             std::uint64_t seed) {
    if (n_repeats < 20) throw ValueError("bias_variance_decompose: need at least 20 repeats");
    if (eval_points.empty()) throw ValueError("bias_variance_decompose: no evaluation points");

    const std::size_t ne = eval_points.size();
    std::vector<std::vector<double>> preds(static_cast<std::size_t>(n_repeats),
                                           std::vector<double>(ne, 0.0));
    for (int r = 0; r < n_repeats; ++r) {
        Rng rng(derive_seed(seed, "bvd/train", static_cast<std::uint64_t>(r)));
        const TrainingDraw draw = source.draw_training(rng);
        const Predictor predictor = trainer(draw);
        for (std::size_t j = 0; j < ne; ++j) {
            const double v = predictor(eval_points[j]);
            if (!std::isfinite(v)) {
                throw DivergenceError("bias_variance_decompose: non-finite prediction at repeat " +
                                      std::to_string(r));
            }
            preds[static_cast<std::size_t>(r)][j] = v;
        }
    }

    BiasVarianceEstimate est;
    est.irreducible = source.noise_variance();
    for (std::size_t j = 0; j < ne; ++j) {
        double mean = 0.0;
        for (int r = 0; r < n_repeats; ++r) mean += preds[static_cast<std::size_t>(r)][j];
        mean /= static_cast<double>(n_repeats);
        const double d = mean - source.true_f(eval_points[j]);
        est.bias_sq += d * d / static_cast<double>(ne);
        double var = 0.0;
        for (int r = 0; r < n_repeats; ++r) {
            const double dev = preds[static_cast<std::size_t>(r)][j] - mean;
            var += dev * dev;
        }
        est.variance += var / static_cast<double>(n_repeats) / static_cast<double>(ne);
    }
    est.total = est.bias_sq + est.variance + est.irreducible;
    return est;
}

}  // namespace barb
