#include "barb/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "barb/dataio.hpp"
#include "barb/errors.hpp"

namespace barb {

void EnsembleSpec::validate() const {
    if (degree < 0 || degree > 4) {
        throw ValueError("EnsembleSpec: degree must lie in {0,..,4}, got " +
                         std::to_string(degree));
    }
}

std::string EnsembleSpec::name() const {
    static const char* names[] = {"average", "linear", "second", "third", "fourth"};
    validate();
    std::string n = names[degree];
    if (degree >= 2 && include_interactions) n += "_interactions";
    return n;
}

std::size_t design_width(const EnsembleSpec& spec) {
    spec.validate();
    if (spec.degree == 0) return 0;
    std::size_t w = 4 * static_cast<std::size_t>(spec.degree);
    if (spec.degree >= 2 && spec.include_interactions) w += 6;
    return w;
}

std::vector<double> design_row(const BasePreds& preds, const EnsembleSpec& spec) {
    spec.validate();
    if (spec.degree == 0) {
        throw ValueError("design_row: not applicable to the averaging model");
    }
    for (double p : preds) {
        if (!std::isfinite(p)) throw ValueError("design_row: non-finite base prediction");
    }
    std::vector<double> row;
    row.reserve(design_width(spec));
    for (int power = spec.degree; power >= 1; --power) {
        for (double p : preds) row.push_back(std::pow(p, power));
        if (power == 2 && spec.include_interactions) {
            for (std::size_t i = 0; i < 4; ++i) {
                for (std::size_t j = i + 1; j < 4; ++j) row.push_back(preds[i] * preds[j]);
            }
        }
    }
    return row;
}

EnsembleModel fit_ensemble(const std::vector<BasePreds>& base_preds,
                           const std::vector<double>& ages, const EnsembleSpec& spec) {
    spec.validate();
    if (base_preds.size() != ages.size()) {
        throw DimensionError("fit_ensemble: prediction rows and ages disagree");
    }
    for (const BasePreds& p : base_preds) {
        for (double v : p) {
            if (!std::isfinite(v)) throw ValueError("fit_ensemble: non-finite base prediction");
        }
    }
    for (double a : ages) {
        if (!std::isfinite(a)) throw ValueError("fit_ensemble: non-finite age");
    }

    EnsembleModel model;
    model.spec = spec;
    if (spec.degree == 0) {
        double rss = 0.0;
        for (std::size_t i = 0; i < ages.size(); ++i) {
            const double pred =
                (base_preds[i][0] + base_preds[i][1] + base_preds[i][2] + base_preds[i][3]) / 4.0;
            rss += (ages[i] - pred) * (ages[i] - pred);
        }
        model.diagnostics = {rss, 1.0, 0};
        return model;
    }

    const std::size_t w = design_width(spec);
    if (base_preds.size() <= w + 1) {
        throw UnderdeterminedError("fit_ensemble: " + std::to_string(base_preds.size()) +
                                   " rows cannot determine " + std::to_string(w + 1) +
                                   " coefficients");
    }
    Matrix design(base_preds.size(), w + 1);
    for (std::size_t i = 0; i < base_preds.size(); ++i) {
        const std::vector<double> row = design_row(base_preds[i], spec);
        for (std::size_t j = 0; j < w; ++j) design.at(i, j) = row[j];
        design.at(i, w) = 1.0;
    }
    LstsqResult sol = lstsq_min_norm(design, ages);
    model.coefficients = std::move(sol.x);
    model.diagnostics = {sol.rss, sol.cond, sol.rank};
    return model;
}

double predict_ensemble(const EnsembleModel& model, const BasePreds& preds) {
    for (double p : preds) {
        if (!std::isfinite(p)) throw ValueError("predict_ensemble: non-finite base prediction");
    }
    if (model.spec.degree == 0) {
        return (preds[0] + preds[1] + preds[2] + preds[3]) / 4.0;
    }
    const std::vector<double> row = design_row(preds, model.spec);
    if (model.coefficients.size() != row.size() + 1) {
        throw DimensionError("predict_ensemble: coefficient count does not match spec");
    }
    double y = model.coefficients.back();
    for (std::size_t j = 0; j < row.size(); ++j) y += model.coefficients[j] * row[j];
    return y;
}

std::vector<EnsembleSpec> default_candidates() {
    std::vector<EnsembleSpec> out;
    for (int d = 0; d <= 4; ++d) out.push_back({d, false});
    return out;
}

namespace {

MetricTriple holdout_metrics(const std::vector<double>& actual,
                             const std::vector<double>& predicted) {
    const std::size_t n = actual.size();
    double mean = std::accumulate(actual.begin(), actual.end(), 0.0) / static_cast<double>(n);
    double ss_tot = 0.0, ss_res = 0.0, abs_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = actual[i] - predicted[i];
        ss_res += r * r;
        abs_sum += std::abs(r);
        ss_tot += (actual[i] - mean) * (actual[i] - mean);
    }
    if (ss_tot == 0.0) {
        throw ValueError("cross_validate_select: constant ages in a fold leave R^2 undefined");
    }
    MetricTriple m;
    m.r2 = 1.0 - ss_res / ss_tot;
    m.mae = abs_sum / static_cast<double>(n);
    m.mse = ss_res / static_cast<double>(n);
    return m;
}

}  // namespace

CvReport cross_validate_select(const std::vector<BasePreds>& base_preds,
                               const std::vector<double>& ages,
                               const std::vector<EnsembleSpec>& candidates, std::size_t k,
                               std::uint64_t seed) {
    if (k < 2) throw ValueError("cross_validate_select: k must be >= 2");
    if (base_preds.size() != ages.size()) {
        throw DimensionError("cross_validate_select: prediction rows and ages disagree");
    }
    if (base_preds.size() < 2 * k) {
        throw ValueError("cross_validate_select: need at least 2k rows");
    }
    if (candidates.empty()) throw ValueError("cross_validate_select: no candidates");

    const std::vector<std::vector<std::size_t>> folds = kfold_indices(base_preds.size(), k, seed);

    CvReport report;
    report.folds = k;
    report.seed = seed;
    for (const EnsembleSpec& spec : candidates) {
        CvCandidate cand;
        cand.spec = spec;
        for (const std::vector<std::size_t>& fold : folds) {
            std::vector<char> held(base_preds.size(), 0);
            for (std::size_t idx : fold) held[idx] = 1;
            std::vector<BasePreds> train_p, eval_p;
            std::vector<double> train_y, eval_y;
            for (std::size_t i = 0; i < base_preds.size(); ++i) {
                if (held[i]) {
                    eval_p.push_back(base_preds[i]);
                    eval_y.push_back(ages[i]);
                } else {
                    train_p.push_back(base_preds[i]);
                    train_y.push_back(ages[i]);
                }
            }
            EnsembleModel model;
            try {
                model = fit_ensemble(train_p, train_y, spec);
            } catch (const UnderdeterminedError&) {
                cand.failed = true;
                break;
            }
            std::vector<double> pred(eval_p.size());
            for (std::size_t i = 0; i < eval_p.size(); ++i) {
                pred[i] = predict_ensemble(model, eval_p[i]);
            }
            cand.per_split.push_back(holdout_metrics(eval_y, pred));
        }
        if (!cand.failed) {
            const double n = static_cast<double>(cand.per_split.size());
            for (const MetricTriple& m : cand.per_split) {
                cand.mean.r2 += m.r2 / n;
                cand.mean.mae += m.mae / n;
                cand.mean.mse += m.mse / n;
            }
            for (const MetricTriple& m : cand.per_split) {
                cand.variance.r2 += (m.r2 - cand.mean.r2) * (m.r2 - cand.mean.r2) / (n - 1.0);
                cand.variance.mae += (m.mae - cand.mean.mae) * (m.mae - cand.mean.mae) / (n - 1.0);
                cand.variance.mse += (m.mse - cand.mean.mse) * (m.mse - cand.mean.mse) / (n - 1.0);
            }
        }
        report.candidates.push_back(std::move(cand));
    }

    bool found = false;
    for (std::size_t i = 0; i < report.candidates.size(); ++i) {
        const CvCandidate& c = report.candidates[i];
        if (c.failed) continue;
        if (!found) {
            report.selected = i;
            found = true;
            continue;
        }
        const CvCandidate& best = report.candidates[report.selected];
        if (c.mean.r2 > best.mean.r2 ||
            (c.mean.r2 == best.mean.r2 &&
             (c.mean.mse < best.mean.mse ||
              (c.mean.mse == best.mean.mse && c.spec.degree < best.spec.degree)))) {
            report.selected = i;
        }
    }
    if (!found) throw ValueError("cross_validate_select: every candidate failed");
    return report;
}

}  // namespace barb
