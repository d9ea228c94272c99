#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "carate/core.hpp"

namespace carate {

enum class BuiltinDgp { Dgp1, Dgp2, Dgp3, Dgp4 };

/// Arm-indexed function of covariates, e.g. m_*(a, z) or sigma(a, z).
using ArmFunction = std::function<double(int arm, std::span<const double> z)>;
using CovariateSampler = std::function<void(Engine&, std::span<double> z)>;
using NoiseSampler = std::function<double(Engine&)>;

/// Additive-noise population: Y(a) = mean(a, Z) + scale(a, Z) * eps.
///
/// Immutable after construction; all randomness comes from the engine passed to
/// the samplers, so a spec can be shared by concurrent replications.
struct PopulationSpec {
    std::string name;
    std::size_t dim = 1;
    ArmFunction mean;
    ArmFunction scale;
    CovariateSampler covariate_sampler;
    NoiseSampler noise_sampler;
    double true_ate = 0.0;
};

/// Potential outcomes and covariates for n i.i.d. units.
struct PotentialSample {
    std::vector<double> y0;
    std::vector<double> y1;
    Matrix z;

    std::size_t size() const { return y0.size(); }
};

PopulationSpec make_builtin_dgp(BuiltinDgp id);

/// Standard normal noise and Uniform([-1,1]^dim) covariates, the builtin samplers.
PopulationSpec make_additive_dgp(std::string name, std::size_t dim, ArmFunction mean,
                                 ArmFunction scale, double true_ate);

PotentialSample sample_population(const PopulationSpec& spec, std::size_t n, std::uint64_t seed);

inline double true_ate(const PopulationSpec& spec) { return spec.true_ate; }

BuiltinDgp parse_builtin_dgp(const std::string& name);
std::string to_string(BuiltinDgp id);

/// Name -> factory lookup. Starts populated with "dgp1".."dgp4"; callers add
/// their own closures-backed populations with add().
class DgpRegistry {
public:
    using Factory = std::function<PopulationSpec()>;

    DgpRegistry();

    void add(const std::string& name, Factory factory);
    bool contains(const std::string& name) const;
    PopulationSpec make(const std::string& name) const;
    std::vector<std::string> names() const;

private:
    std::map<std::string, Factory> factories_;
};

}  // namespace carate
