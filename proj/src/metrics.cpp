#include "hazardnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "hazardnet/text.hpp"

namespace hazardnet {

EvalReport point_metrics(std::span<const TruthRecord> truth, std::span<const double> predicted,
                         std::span<const double> thresholds) {
    if (truth.size() != predicted.size())
        throw std::invalid_argument("metrics: truth and predictions differ in length");
    std::vector<double> abs_err;
    EvalReport r;
    double sq = 0, sq_log = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i].y != 1) continue;
        const double t = truth[i].t;
        const double p = predicted[i];
        const double e = std::abs(t - p);
        abs_err.push_back(e);
        r.mae += e;
        r.mre += e / t;
        sq += e * e;
        const double le = std::log1p(t) - std::log1p(p);
        sq_log += le * le;
    }
    if (abs_err.empty()) throw std::invalid_argument("metrics: no observed samples to evaluate");
    const double n = static_cast<double>(abs_err.size());
    r.evaluated = abs_err.size();
    r.mae /= n;
    r.mre /= n;
    r.rmse = std::sqrt(sq / n);
    r.msle = sq_log / n;

    std::sort(abs_err.begin(), abs_err.end());
    const auto m = abs_err.size();
    r.mdae = m % 2 == 1 ? abs_err[m / 2] : 0.5 * (abs_err[m / 2 - 1] + abs_err[m / 2]);

    for (double th : thresholds) {
        // Strict inequality: count of errors below th.
        const auto below = std::lower_bound(abs_err.begin(), abs_err.end(), th) - abs_err.begin();
        r.acc_at[th] = static_cast<double>(below) / n;
    }
    return r;
}

namespace {

// Fenwick tree over prediction ranks.
class RankCounter {
public:
    explicit RankCounter(std::size_t n) : tree_(n + 1, 0) {}
    void add(std::size_t rank) {
        for (auto i = rank + 1; i < tree_.size(); i += i & (~i + 1)) ++tree_[i];
    }
    // Number of inserted ranks < rank.
    std::size_t below(std::size_t rank) const {
        std::size_t s = 0;
        for (auto i = rank; i > 0; i -= i & (~i + 1)) s += tree_[i];
        return s;
    }

private:
    std::vector<std::size_t> tree_;
};

}  // namespace

double concordance_index(std::span<const TruthRecord> truth, std::span<const double> predicted) {
    if (truth.size() != predicted.size())
        throw std::invalid_argument("concordance: truth and predictions differ in length");
    const auto n = truth.size();

    std::vector<double> levels(predicted.begin(), predicted.end());
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    auto rank_of = [&](double p) {
        return static_cast<std::size_t>(std::lower_bound(levels.begin(), levels.end(), p) -
                                        levels.begin());
    };

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return truth[a].t > truth[b].t; });

    // Walk from the latest time down; the counter holds samples with a
    // strictly later time than the current group.
    RankCounter later(levels.size());
    std::size_t inserted = 0;
    double concordant = 0;
    double comparable = 0;
    for (std::size_t g = 0; g < n;) {
        std::size_t end = g;
        while (end < n && truth[order[end]].t == truth[order[g]].t) ++end;
        for (std::size_t k = g; k < end; ++k) {
            const auto i = order[k];
            if (truth[i].y != 1) continue;
            const auto r = rank_of(predicted[i]);
            const auto lower = later.below(r);
            const auto not_higher = later.below(r + 1);
            const auto higher = inserted - not_higher;
            const auto ties = not_higher - lower;
            comparable += static_cast<double>(inserted);
            concordant += static_cast<double>(higher) + 0.5 * static_cast<double>(ties);
        }
        for (std::size_t k = g; k < end; ++k) later.add(rank_of(predicted[order[k]]));
        inserted += end - g;
        g = end;
    }
    if (comparable == 0) throw std::invalid_argument("concordance: no comparable pairs");
    return concordant / comparable;
}

EvalReport evaluate(std::span<const TruthRecord> truth, std::span<const double> predicted,
                    std::span<const double> thresholds) {
    auto r = point_metrics(truth, predicted, thresholds);
    r.ci = concordance_index(truth, predicted);
    return r;
}

std::string EvalReport::to_json() const {
    nlohmann::json j;
    j["mae"] = mae;
    j["mre"] = mre;
    j["rmse"] = rmse;
    j["msle"] = msle;
    j["mdae"] = mdae;
    auto acc = nlohmann::json::array();
    for (const auto& [th, v] : acc_at) acc.push_back({{"threshold", th}, {"acc", v}});
    j["acc"] = acc;
    j["ci"] = ci ? nlohmann::json(*ci) : nlohmann::json(nullptr);
    j["evaluated"] = evaluated;
    return j.dump(2);
}

std::string EvalReport::csv_header() const {
    std::string h = "mae,mre,rmse,msle,mdae";
    for (const auto& [th, v] : acc_at) h += ",acc@" + format_double(th);
    return h + ",ci,evaluated";
}

std::string EvalReport::csv_row() const {
    std::string r = format_double(mae) + ',' + format_double(mre) + ',' + format_double(rmse) +
                    ',' + format_double(msle) + ',' + format_double(mdae);
    for (const auto& [th, v] : acc_at) r += ',' + format_double(v);
    return r + ',' + (ci ? format_double(*ci) : std::string()) + ',' + std::to_string(evaluated);
}

}  // namespace hazardnet
