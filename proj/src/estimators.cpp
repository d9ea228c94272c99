#include "carate/estimators.hpp"

#include <cmath>

namespace carate {
namespace {

void check_frame(const ExperimentFrame& frame) {
    if (frame.size() == 0) throw DataError("empty experiment frame");
    if (frame.assignments.size() != frame.size() || frame.labels.size() != frame.size())
        throw DataError("experiment frame: length mismatch");
}

void check_fits(const ExperimentFrame& frame, const FitMatrix& fits) {
    if (fits.size() != frame.size()) throw DataError("fit matrix not aligned with frame");
}

void check_pi(const ExperimentFrame& frame, const TargetProportions& pi) {
    if (static_cast<int>(pi.size()) < frame.num_strata)
        throw ConfigError("fewer target proportions than strata");
}

}  // namespace

std::string to_string(EstimatorId id) {
    switch (id) {
        case EstimatorId::AipwInfeasible: return "aipw_infeasible";
        case EstimatorId::AipwFeasible: return "aipw_feasible";
        case EstimatorId::Sat: return "sat";
        case EstimatorId::Imp: return "imp";
    }
    return "?";
}

EstimatorId parse_estimator(const std::string& s) {
    if (s == "aipw_infeasible") return EstimatorId::AipwInfeasible;
    if (s == "aipw_feasible") return EstimatorId::AipwFeasible;
    if (s == "sat") return EstimatorId::Sat;
    if (s == "imp") return EstimatorId::Imp;
    throw ConfigError("unknown estimator '" + s + "'");
}

PropensityMode parse_propensity_mode(const std::string& s) {
    if (s == "true_pi") return PropensityMode::TruePi;
    if (s == "sample_proportions") return PropensityMode::SampleProportions;
    throw ConfigError("unknown propensity mode '" + s + "' (expected true_pi|sample_proportions)");
}

std::string to_string(PropensityMode m) {
    return m == PropensityMode::TruePi ? "true_pi" : "sample_proportions";
}

double eif(double y, int a, double pi, double m0, double m1, double beta) {
    if (!(pi > 0.0 && pi < 1.0)) throw ConfigError("propensity must lie strictly in (0,1)");
    return a * (y - m1) / pi - (1 - a) * (y - m0) / (1.0 - pi) + (m1 - m0 - beta);
}

EstimateRecord est_sat(const ExperimentFrame& frame) {
    check_frame(frame);
    const int S = frame.num_strata;
    std::vector<double> sum1(S, 0.0), sum0(S, 0.0);
    const auto counts = stratum_counts(frame.labels, S, std::span<const int>(frame.assignments));
    for (std::size_t i = 0; i < frame.size(); ++i) {
        auto& acc = frame.assignments[i] == 1 ? sum1 : sum0;
        acc[frame.labels[i] - 1] += frame.y[i];
    }
    EstimateRecord rec{EstimatorId::Sat, 0.0, frame.size(), 0};
    const double n = static_cast<double>(frame.size());
    for (int s = 1; s <= S; ++s) {
        const auto ns = counts.n(s);
        if (ns == 0) continue;
        const auto n1 = counts.n(1, s), n0 = counts.n(0, s);
        if (n1 == 0 || n0 == 0) rec.flags |= flags::kDegenerateCell;
        const double mean1 = n1 ? sum1[s - 1] / static_cast<double>(n1) : 0.0;
        const double mean0 = n0 ? sum0[s - 1] / static_cast<double>(n0) : 0.0;
        rec.value += static_cast<double>(ns) / n * (mean1 - mean0);
    }
    return rec;
}

EstimateRecord est_imp(const ExperimentFrame& frame, const FitMatrix& fits) {
    check_frame(frame);
    check_fits(frame, fits);
    double treated = 0.0, control = 0.0;
    for (std::size_t i = 0; i < frame.size(); ++i) {
        const int a = frame.assignments[i];
        const double y = frame.y[i];
        treated += a == 1 ? y : fits(i, 1);
        control += a == 0 ? y : fits(i, 0);
    }
    const double n = static_cast<double>(frame.size());
    return {EstimatorId::Imp, treated / n - control / n, frame.size(), 0};
}

EstimateRecord est_aipw_infeasible(const ExperimentFrame& frame, const PopulationSpec& spec,
                                   const TargetProportions& pi) {
    check_frame(frame);
    check_pi(frame, pi);
    double sum = 0.0;
    for (std::size_t i = 0; i < frame.size(); ++i) {
        const auto z = frame.z.row(i);
        sum += eif(frame.y[i], frame.assignments[i], pi(frame.labels[i]), spec.mean(0, z),
                   spec.mean(1, z), 0.0);
    }
    return {EstimatorId::AipwInfeasible, sum / static_cast<double>(frame.size()), frame.size(), 0};
}

std::vector<double> propensities(const ExperimentFrame& frame, const TargetProportions& pi,
                                 PropensityMode mode) {
    check_pi(frame, pi);
    const int S = frame.num_strata;
    std::vector<double> out(S);
    for (int s = 1; s <= S; ++s) out[s - 1] = pi(s);
    if (mode == PropensityMode::TruePi) return out;
    const auto counts = stratum_counts(frame.labels, S, std::span<const int>(frame.assignments));
    for (int s = 1; s <= S; ++s) {
        const auto ns = counts.n(s);
        if (ns == 0) continue;
        const auto n1 = counts.n(1, s);
        if (n1 == 0 || n1 == ns)
            throw DegeneratePropensityError("stratum " + std::to_string(s) +
                                            " has sample propensity " + (n1 ? "1" : "0"));
        out[s - 1] = static_cast<double>(n1) / static_cast<double>(ns);
    }
    return out;
}

EstimateRecord est_aipw_feasible(const ExperimentFrame& frame, const FitMatrix& fits,
                                 const TargetProportions& pi, PropensityMode mode) {
    check_frame(frame);
    check_fits(frame, fits);
    const auto pihat = propensities(frame, pi, mode);
    double ipw1 = 0.0, ipw0 = 0.0, reg = 0.0;
    for (std::size_t i = 0; i < frame.size(); ++i) {
        const double p = pihat[frame.labels[i] - 1];
        const double y = frame.y[i];
        if (frame.assignments[i] == 1)
            ipw1 += (y - fits(i, 1)) / p;
        else
            ipw0 += (y - fits(i, 0)) / (1.0 - p);
        reg += fits(i, 1) - fits(i, 0);
    }
    const double n = static_cast<double>(frame.size());
    return {EstimatorId::AipwFeasible, ipw1 / n - ipw0 / n + reg / n, frame.size(), 0};
}

FitMatrix true_mean_fits(const ExperimentFrame& frame, const PopulationSpec& spec) {
    FitMatrix fits(frame.size());
    for (std::size_t i = 0; i < frame.size(); ++i) {
        const auto z = frame.z.row(i);
        fits(i, 0) = spec.mean(0, z);
        fits(i, 1) = spec.mean(1, z);
    }
    return fits;
}

RemainderTerms remainder_decomposition(const ExperimentFrame& frame, const FitMatrix& fits,
                                       const PopulationSpec& spec, const TargetProportions& pi,
                                       PropensityMode mode) {
    check_frame(frame);
    check_fits(frame, fits);
    const auto pihat = propensities(frame, pi, mode);
    double r[2] = {0.0, 0.0}, rt[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < frame.size(); ++i) {
        const auto z = frame.z.row(i);
        const int s = frame.labels[i];
        for (int a = 0; a <= 1; ++a) {
            const double ph = a == 1 ? pihat[s - 1] : 1.0 - pihat[s - 1];
            const double pt = pi.arm(a, s);
            const double ind = frame.assignments[i] == a ? 1.0 : 0.0;
            const double m = spec.mean(a, z);
            r[a] += (ind - ph) / ph * (fits(i, a) - m);
            rt[a] += (1.0 / ph - 1.0 / pt) * ind * (frame.y[i] - m);
        }
    }
    const double root_n = std::sqrt(static_cast<double>(frame.size()));
    RemainderTerms out;
    out.r1 = r[1] / root_n;
    out.r0 = r[0] / root_n;
    out.r1_tilde = rt[1] / root_n;
    out.r0_tilde = rt[0] / root_n;
    const double feasible = est_aipw_feasible(frame, fits, pi, mode).value;
    const double infeasible = est_aipw_infeasible(frame, spec, pi).value;
    out.identity_residual = root_n * (feasible - infeasible) -
                            (-(out.r1 - out.r0) + out.r1_tilde - out.r0_tilde);
    return out;
}

}  // namespace carate
