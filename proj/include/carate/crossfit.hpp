#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "carate/assignment.hpp"
#include "carate/core.hpp"

namespace carate {

/// Stratum-by-arm fold partition for cross-fitting.
///
/// For every (a, s) the units with A = a and S = s are split into `folds`
/// groups; groups 1..J-1 hold floor(N(a,s)/J) units and group J the rest.
class FoldPlan {
public:
    FoldPlan() = default;

    /// Builds a plan from an explicit fold label per unit (1-based). Validates
    /// the partition size law.
    FoldPlan(std::vector<int> labels, std::vector<int> assignments, int num_strata, int folds,
             std::vector<int> fold_of_unit);

    int folds() const { return folds_; }
    int num_strata() const { return num_strata_; }
    std::size_t size() const { return fold_of_unit_.size(); }

    int fold_of(std::size_t i) const { return fold_of_unit_[i]; }
    int stratum_of(std::size_t i) const { return labels_[i]; }
    const std::vector<int>& fold_of_unit() const { return fold_of_unit_; }

    /// G_{n j}(a, s), sorted by unit index.
    std::span<const std::size_t> group(int a, int s, int j) const;

    /// G_n(s, j) = G_n(1, s, j) U G_n(0, s, j), sorted.
    std::vector<std::size_t> stratum_fold(int s, int j) const;

private:
    std::size_t slot(int a, int s, int j) const {
        return (static_cast<std::size_t>(a) * num_strata_ + (s - 1)) * folds_ + (j - 1);
    }

    int folds_ = 2;
    int num_strata_ = 1;
    std::vector<int> labels_;
    std::vector<int> fold_of_unit_;
    std::vector<std::vector<std::size_t>> groups_;
};

/// Expected size of fold j (1-based) for a group of `group_size` units.
std::size_t fold_size(std::size_t group_size, int folds, int j);

/// Random fold plan. Within each (a, s) the partition is uniform among those
/// obeying the size law and depends only on (seed, a, s, N(a,s)).
FoldPlan make_folds(std::span<const int> labels, std::span<const int> assignments, int num_strata,
                    int folds, std::uint64_t seed);

/// Gamma_n(a, i): units with arm a in stratum S_i outside unit i's fold.
std::vector<std::size_t> estimation_set(const FoldPlan& plan, std::size_t i, int a);

enum class KernelNorm {
    Euclidean,  ///< ball window
    Max,        ///< box window (product uniform kernel)
};

KernelNorm parse_kernel_norm(const std::string& s);
std::string to_string(KernelNorm n);

/// kappa(u) = I(||u|| <= radius).
struct UniformKernel {
    double radius = 1.0;
    KernelNorm norm = KernelNorm::Euclidean;
};

/// Nadaraya-Watson prediction at z from (train_z, train_y) with bandwidth h.
/// Returns 0 when no training point falls inside the window (0/0 = 0).
double nw_predict(std::span<const double> train_y, const Matrix& train_z,
                  std::span<const double> z, double h, UniformKernel kernel = {});

enum class BandwidthSize {
    SampleSize,     ///< m = n, the full experiment size
    EstimationSet,  ///< m = |Gamma_n(a, i)|
};

BandwidthSize parse_bandwidth_size(const std::string& s);
std::string to_string(BandwidthSize b);

/// Bandwidth rule h = c_k * m^{-1/(4+k)} and the kernel it is used with.
///
/// Defaults reproduce the simulation tables: m is the sample size and the
/// window is the box of side h centred at the evaluation point (uniform kernel
/// of radius 1/2 in the max norm).
struct KernelSpec {
    /// c_k; non-positive means "use the default for the covariate dimension".
    double bandwidth_const = 0.0;
    BandwidthSize size_rule = BandwidthSize::SampleSize;
    UniformKernel kernel{0.5, KernelNorm::Max};

    double constant_for(std::size_t dim) const;
    double bandwidth(std::size_t m, std::size_t dim) const;
};

/// c_1 = 1/sqrt(3), c_5 = 3, otherwise 1.
double default_bandwidth_const(std::size_t dim);

/// mhat(i, a) = Nadaraya-Watson fit at Z_i using only Gamma_n(a, i).
class FitMatrix {
public:
    FitMatrix() = default;
    explicit FitMatrix(std::size_t n) : values_(n * 2, 0.0) {}

    std::size_t size() const { return values_.size() / 2; }
    double operator()(std::size_t i, int a) const { return values_[i * 2 + a]; }
    double& operator()(std::size_t i, int a) { return values_[i * 2 + a]; }
    const std::vector<double>& values() const { return values_; }

    bool operator==(const FitMatrix&) const = default;

private:
    std::vector<double> values_;
};

FitMatrix crossfit_mhat(const ExperimentFrame& frame, const FoldPlan& plan,
                        const KernelSpec& kernel);

}  // namespace carate
