#include "carate/crossfit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace carate {
namespace {

enum : std::uint64_t { kFoldStream = 0xf0 };

// Window membership of x around z, shared by every prediction path so both
// decide identically. In one dimension the two norms coincide.
bool in_window(std::span<const double> x, std::span<const double> z, double inv_h,
               const UniformKernel& k) {
    if (k.norm == KernelNorm::Max) {
        for (std::size_t d = 0; d < z.size(); ++d) {
            const double u = (x[d] - z[d]) * inv_h;
            if (u * u > k.radius * k.radius) return false;
        }
        return true;
    }
    double d2 = 0.0;
    for (std::size_t d = 0; d < z.size(); ++d) {
        const double u = (x[d] - z[d]) * inv_h;
        d2 += u * u;
    }
    return d2 <= k.radius * k.radius;
}

// One training set (a single (a, s) group minus one fold), indexed for queries.
class TrainingSet {
public:
    TrainingSet(const ExperimentFrame& frame, std::vector<std::size_t> units)
        : frame_(frame), units_(std::move(units)), dim_(frame.z.cols()) {
        if (dim_ == 1) {
            std::sort(units_.begin(), units_.end(), [&](std::size_t a, std::size_t b) {
                const double za = frame_.z(a, 0), zb = frame_.z(b, 0);
                return za < zb || (za == zb && a < b);
            });
            sorted_z_.reserve(units_.size());
            prefix_.assign(units_.size() + 1, 0.0);
            for (std::size_t r = 0; r < units_.size(); ++r) {
                sorted_z_.push_back(frame_.z(units_[r], 0));
                prefix_[r + 1] = prefix_[r] + frame_.y[units_[r]];
            }
        }
    }

    std::size_t size() const { return units_.size(); }

    double predict(std::span<const double> z, double h, const UniformKernel& kernel) const {
        if (units_.empty()) return 0.0;
        const double inv_h = 1.0 / h;
        const double r2 = kernel.radius * kernel.radius;
        if (dim_ == 1) {
            const double z0 = z[0];
            auto inside = [&](double x) {
                const double u = (x - z0) * inv_h;
                return u * u <= r2;
            };
            auto lo = std::partition_point(sorted_z_.begin(), sorted_z_.end(),
                                           [&](double x) { return x < z0 && !inside(x); });
            auto hi = std::partition_point(lo, sorted_z_.end(),
                                           [&](double x) { return x <= z0 || inside(x); });
            const auto l = static_cast<std::size_t>(lo - sorted_z_.begin());
            const auto u = static_cast<std::size_t>(hi - sorted_z_.begin());
            if (u == l) return 0.0;
            return (prefix_[u] - prefix_[l]) / static_cast<double>(u - l);
        }
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t j : units_) {
            if (in_window(frame_.z.row(j), z, inv_h, kernel)) {
                sum += frame_.y[j];
                ++count;
            }
        }
        return count == 0 ? 0.0 : sum / static_cast<double>(count);
    }

private:
    const ExperimentFrame& frame_;
    std::vector<std::size_t> units_;
    std::size_t dim_;
    std::vector<double> sorted_z_;
    std::vector<double> prefix_;
};

}  // namespace

std::size_t fold_size(std::size_t group_size, int folds, int j) {
    const auto J = static_cast<std::size_t>(folds);
    const auto base = group_size / J;
    return j < folds ? base : group_size - (J - 1) * base;
}

FoldPlan::FoldPlan(std::vector<int> labels, std::vector<int> assignments, int num_strata, int folds,
                   std::vector<int> fold_of_unit)
    : folds_(folds), num_strata_(num_strata), labels_(std::move(labels)),
      fold_of_unit_(std::move(fold_of_unit)) {
    if (folds < 2) throw ConfigError("cross-fitting needs at least 2 folds");
    const auto n = labels_.size();
    if (assignments.size() != n || fold_of_unit_.size() != n)
        throw DataError("fold plan: length mismatch");
    groups_.assign(2 * static_cast<std::size_t>(num_strata) * folds, {});
    for (std::size_t i = 0; i < n; ++i) {
        const int s = labels_[i], a = assignments[i], j = fold_of_unit_[i];
        if (s < 1 || s > num_strata || (a != 0 && a != 1) || j < 1 || j > folds)
            throw DataError("fold plan: invalid label, arm or fold at unit " + std::to_string(i));
        groups_[slot(a, s, j)].push_back(i);
    }
    for (int a = 0; a <= 1; ++a)
        for (int s = 1; s <= num_strata; ++s) {
            std::size_t total = 0;
            for (int j = 1; j <= folds; ++j) total += groups_[slot(a, s, j)].size();
            for (int j = 1; j <= folds; ++j)
                if (groups_[slot(a, s, j)].size() != fold_size(total, folds, j))
                    throw DataError("fold plan violates the fold size law");
        }
}

std::span<const std::size_t> FoldPlan::group(int a, int s, int j) const {
    return groups_[slot(a, s, j)];
}

std::vector<std::size_t> FoldPlan::stratum_fold(int s, int j) const {
    const auto g0 = group(0, s, j), g1 = group(1, s, j);
    std::vector<std::size_t> out;
    out.reserve(g0.size() + g1.size());
    std::merge(g0.begin(), g0.end(), g1.begin(), g1.end(), std::back_inserter(out));
    return out;
}

FoldPlan make_folds(std::span<const int> labels, std::span<const int> assignments, int num_strata,
                    int folds, std::uint64_t seed) {
    if (folds < 2) throw ConfigError("cross-fitting needs at least 2 folds");
    if (labels.size() != assignments.size()) throw DataError("make_folds: length mismatch");
    const auto S = static_cast<std::size_t>(num_strata);
    std::vector<std::vector<std::size_t>> members(2 * S);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int s = labels[i], a = assignments[i];
        if (s < 1 || s > num_strata || (a != 0 && a != 1))
            throw DataError("make_folds: invalid label or arm at unit " + std::to_string(i));
        members[static_cast<std::size_t>(a) * S + (s - 1)].push_back(i);
    }
    std::vector<int> fold_of(labels.size(), 0);
    for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t s = 1; s <= S; ++s) {
            const auto& idx = members[a * S + (s - 1)];
            const auto N = idx.size();
            // Fold labels laid out by the size law, then shuffled; the shuffle
            // depends on N(a,s) and the (a,s) substream only.
            std::vector<int> layout;
            layout.reserve(N);
            for (int j = 1; j <= folds; ++j) layout.insert(layout.end(), fold_size(N, folds, j), j);
            Engine eng = make_engine(derive_seed(seed, {kFoldStream, a, s}));
            std::shuffle(layout.begin(), layout.end(), eng);
            for (std::size_t r = 0; r < N; ++r) fold_of[idx[r]] = layout[r];
        }
    return FoldPlan(std::vector<int>(labels.begin(), labels.end()),
                    std::vector<int>(assignments.begin(), assignments.end()), num_strata, folds,
                    std::move(fold_of));
}

std::vector<std::size_t> estimation_set(const FoldPlan& plan, std::size_t i, int a) {
    if (i >= plan.size()) throw DataError("estimation_set: unit index out of range");
    const int s = plan.stratum_of(i), own = plan.fold_of(i);
    std::vector<std::size_t> out;
    for (int j = 1; j <= plan.folds(); ++j) {
        if (j == own) continue;
        const auto g = plan.group(a, s, j);
        out.insert(out.end(), g.begin(), g.end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

double nw_predict(std::span<const double> train_y, const Matrix& train_z,
                  std::span<const double> z, double h, UniformKernel kernel) {
    if (!(h > 0.0)) throw ConfigError("bandwidth must be positive");
    if (train_y.size() != train_z.rows()) throw DataError("nw_predict: training data misaligned");
    if (train_z.rows() > 0 && train_z.cols() != z.size())
        throw DataError("nw_predict: dimension mismatch");
    if (!(kernel.radius > 0.0)) throw ConfigError("kernel radius must be positive");
    const double inv_h = 1.0 / h;
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t j = 0; j < train_y.size(); ++j) {
        if (in_window(train_z.row(j), z, inv_h, kernel)) {
            sum += train_y[j];
            ++count;
        }
    }
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

BandwidthSize parse_bandwidth_size(const std::string& s) {
    if (s == "sample") return BandwidthSize::SampleSize;
    if (s == "estimation_set") return BandwidthSize::EstimationSet;
    throw ConfigError("unknown bandwidth size rule '" + s + "' (expected sample|estimation_set)");
}

std::string to_string(BandwidthSize b) {
    return b == BandwidthSize::SampleSize ? "sample" : "estimation_set";
}

KernelNorm parse_kernel_norm(const std::string& s) {
    if (s == "euclidean") return KernelNorm::Euclidean;
    if (s == "max") return KernelNorm::Max;
    throw ConfigError("unknown kernel norm '" + s + "' (expected euclidean|max)");
}

std::string to_string(KernelNorm n) { return n == KernelNorm::Euclidean ? "euclidean" : "max"; }

double default_bandwidth_const(std::size_t dim) {
    if (dim == 1) return 1.0 / std::sqrt(3.0);
    if (dim == 5) return 3.0;
    return 1.0;
}

double KernelSpec::constant_for(std::size_t dim) const {
    return bandwidth_const > 0.0 ? bandwidth_const : default_bandwidth_const(dim);
}

double KernelSpec::bandwidth(std::size_t m, std::size_t dim) const {
    if (m == 0) throw ConfigError("bandwidth undefined for an empty estimation set");
    return constant_for(dim) *
           std::pow(static_cast<double>(m), -1.0 / (4.0 + static_cast<double>(dim)));
}

FitMatrix crossfit_mhat(const ExperimentFrame& frame, const FoldPlan& plan,
                        const KernelSpec& kernel) {
    const auto n = frame.size();
    if (plan.size() != n) throw DataError("crossfit_mhat: plan and frame differ in size");
    const auto dim = frame.z.cols();
    if (!(kernel.kernel.radius > 0.0)) throw ConfigError("kernel radius must be positive");
    FitMatrix fits(n);
    for (int s = 1; s <= plan.num_strata(); ++s)
        for (int j = 1; j <= plan.folds(); ++j) {
            const auto targets = plan.stratum_fold(s, j);
            if (targets.empty()) continue;
            for (int a = 0; a <= 1; ++a) {
                std::vector<std::size_t> train;
                for (int jj = 1; jj <= plan.folds(); ++jj) {
                    if (jj == j) continue;
                    const auto g = plan.group(a, s, jj);
                    train.insert(train.end(), g.begin(), g.end());
                }
                if (train.empty()) continue;
                const std::size_t m =
                    kernel.size_rule == BandwidthSize::SampleSize ? n : train.size();
                const double h = kernel.bandwidth(m, dim);
                const TrainingSet ts(frame, std::move(train));
                for (std::size_t i : targets)
                    fits(i, a) = ts.predict(frame.z.row(i), h, kernel.kernel);
            }
        }
    return fits;
}

}  // namespace carate
