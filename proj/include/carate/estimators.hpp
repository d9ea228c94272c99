#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "carate/assignment.hpp"
#include "carate/crossfit.hpp"
#include "carate/population.hpp"
#include "carate/strata.hpp"

namespace carate {

enum class EstimatorId { AipwInfeasible, AipwFeasible, Sat, Imp };

std::string to_string(EstimatorId id);
EstimatorId parse_estimator(const std::string& s);

/// Which treatment shares enter the inverse-probability weights.
enum class PropensityMode { TruePi, SampleProportions };

PropensityMode parse_propensity_mode(const std::string& s);
std::string to_string(PropensityMode m);

namespace flags {
/// Some stratum has no treated or no control units; the SAT cell mean was set to 0.
inline constexpr std::uint32_t kDegenerateCell = 1u << 0;
/// Sample propensity 0 or 1 in a stratum; the estimate is undefined.
inline constexpr std::uint32_t kDegeneratePropensity = 1u << 1;
}  // namespace flags

struct EstimateRecord {
    EstimatorId estimator = EstimatorId::Sat;
    double value = 0.0;
    std::size_t n = 0;
    std::uint32_t flags = 0;
};

/// phi(y, a, z; m0, m1, b) for a unit whose stratum has propensity `pi`.
double eif(double y, int a, double pi, double m0, double m1, double beta);

/// Stratum-weighted difference in treated/control means.
EstimateRecord est_sat(const ExperimentFrame& frame);

/// Imputes each unobserved potential outcome with its cross-fitted prediction.
EstimateRecord est_imp(const ExperimentFrame& frame, const FitMatrix& fits);

/// AIPW with the true conditional means and the known pi.
EstimateRecord est_aipw_infeasible(const ExperimentFrame& frame, const PopulationSpec& spec,
                                   const TargetProportions& pi);

/// AIPW with cross-fitted means. Throws DegeneratePropensityError in
/// sample-proportion mode when some nonempty stratum is all-treated or all-control.
EstimateRecord est_aipw_feasible(const ExperimentFrame& frame, const FitMatrix& fits,
                                 const TargetProportions& pi, PropensityMode mode);

/// True conditional means evaluated at every unit, packaged as a FitMatrix.
FitMatrix true_mean_fits(const ExperimentFrame& frame, const PopulationSpec& spec);

/// Decomposition of sqrt(n)(feasible - infeasible) into remainder terms.
///
/// r[a] = n^{-1/2} sum (I{A=a} - pihat_a) / pihat_a * (mhat(a) - m_*(a)) and
/// r_tilde[a] = n^{-1/2} sum (1/pihat_a - 1/pi_a) I{A=a} (Y - m_*(a)), each
/// exactly as written. Expanding the two estimators term by term gives
///
///     sqrt(n)(feasible - infeasible) = -(r[1] - r[0]) + r_tilde[1] - r_tilde[0],
///
/// so the regression remainders enter with a negative sign. identity_residual
/// measures that identity and vanishes to rounding.
struct RemainderTerms {
    double r1 = 0.0;
    double r0 = 0.0;
    double r1_tilde = 0.0;
    double r0_tilde = 0.0;
    double identity_residual = 0.0;
};

RemainderTerms remainder_decomposition(const ExperimentFrame& frame, const FitMatrix& fits,
                                       const PopulationSpec& spec, const TargetProportions& pi,
                                       PropensityMode mode);

/// pihat(s) for every stratum under `mode` (index s-1). Throws on degenerate strata
/// in sample-proportion mode; strata with N(s) = 0 keep pi(s).
std::vector<double> propensities(const ExperimentFrame& frame, const TargetProportions& pi,
                                 PropensityMode mode);

}  // namespace carate
