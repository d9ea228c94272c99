#include "carate/population.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace carate {
namespace {

constexpr double kPi = std::numbers::pi;

// 2 E[m0(Z)^3]: m0 takes the values k/10, k = 1..10 on z < 0 and k = 0..9 on
// z >= 0, each with probability 1/20, so E[m0^3] = (3.025 + 2.025) / 20.
constexpr double kDgp2Ate = 0.505;

double sign_nonneg(double x) { return x >= 0.0 ? 1.0 : -1.0; }

double dgp1_m0(double z) { return std::sin(10.0 * kPi * z); }

double dgp2_m0(double z) { return sign_nonneg(z) * std::floor(10.0 * z) / 10.0; }

double dgp12_scale(int arm, double z) {
    const double s0 = 1.0 + std::abs(z);
    return arm == 1 ? std::numbers::sqrt2 * s0 : s0;
}

double lambda(double z1, double z2, double z3, double z4, double z5, bool jump) {
    const double q = z3 + z4 - 1.0;
    double v = std::cos(2.0 * kPi * z1 * z2) + q * q + z5 / 2.0;
    if (jump && z1 >= 0.0) v += 1.0;
    return v;
}

ArmFunction dgp34_mean(bool jump) {
    return [jump](int arm, std::span<const double> z) {
        if (arm == 1)
            return lambda(z[0], z[1], z[2], z[3], z[4], jump) +
                   2.0 * std::sin(2.0 * kPi * z[0] * z[1]);
        return lambda(z[4], z[3], z[2], z[1], z[0], jump);
    };
}

}  // namespace

PopulationSpec make_additive_dgp(std::string name, std::size_t dim, ArmFunction mean,
                                 ArmFunction scale, double true_ate) {
    if (dim == 0) throw ConfigError("population dimension must be positive");
    PopulationSpec spec;
    spec.name = std::move(name);
    spec.dim = dim;
    spec.mean = std::move(mean);
    spec.scale = std::move(scale);
    spec.covariate_sampler = [](Engine& eng, std::span<double> z) {
        std::uniform_real_distribution<double> unif(-1.0, 1.0);
        for (auto& v : z) v = unif(eng);
    };
    spec.noise_sampler = [](Engine& eng) {
        std::normal_distribution<double> norm(0.0, 1.0);
        return norm(eng);
    };
    spec.true_ate = true_ate;
    return spec;
}

PopulationSpec make_builtin_dgp(BuiltinDgp id) {
    switch (id) {
        case BuiltinDgp::Dgp1:
            return make_additive_dgp(
                "dgp1", 1,
                [](int arm, std::span<const double> z) {
                    const double m0 = dgp1_m0(z[0]);
                    return arm == 1 ? m0 + 2.0 * std::cos(10.0 * kPi * z[0]) : m0;
                },
                [](int arm, std::span<const double> z) { return dgp12_scale(arm, z[0]); }, 0.0);
        case BuiltinDgp::Dgp2:
            return make_additive_dgp(
                "dgp2", 1,
                [](int arm, std::span<const double> z) {
                    const double m0 = dgp2_m0(z[0]);
                    return arm == 1 ? m0 + 2.0 * m0 * m0 * m0 : m0;
                },
                [](int arm, std::span<const double> z) { return dgp12_scale(arm, z[0]); },
                kDgp2Ate);
        case BuiltinDgp::Dgp3:
        case BuiltinDgp::Dgp4:
            return make_additive_dgp(
                id == BuiltinDgp::Dgp3 ? "dgp3" : "dgp4", 5, dgp34_mean(id == BuiltinDgp::Dgp4),
                [](int arm, std::span<const double>) {
                    return arm == 1 ? std::numbers::sqrt2 : 1.0;
                },
                0.0);
    }
    throw ConfigError("unknown builtin DGP");
}

PotentialSample sample_population(const PopulationSpec& spec, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw ConfigError("sample size must be positive");
    PotentialSample out;
    out.y0.resize(n);
    out.y1.resize(n);
    out.z = Matrix(n, spec.dim);
    Engine eng = make_engine(seed);
    for (std::size_t i = 0; i < n; ++i) {
        auto z = out.z.row(i);
        spec.covariate_sampler(eng, z);
        // One noise draw per unit feeds both potential outcomes.
        const double eps = spec.noise_sampler(eng);
        out.y0[i] = spec.mean(0, z) + spec.scale(0, z) * eps;
        out.y1[i] = spec.mean(1, z) + spec.scale(1, z) * eps;
    }
    return out;
}

BuiltinDgp parse_builtin_dgp(const std::string& name) {
    if (name == "dgp1") return BuiltinDgp::Dgp1;
    if (name == "dgp2") return BuiltinDgp::Dgp2;
    if (name == "dgp3") return BuiltinDgp::Dgp3;
    if (name == "dgp4") return BuiltinDgp::Dgp4;
    throw ConfigError("unknown DGP '" + name + "' (expected dgp1..dgp4)");
}

std::string to_string(BuiltinDgp id) {
    switch (id) {
        case BuiltinDgp::Dgp1: return "dgp1";
        case BuiltinDgp::Dgp2: return "dgp2";
        case BuiltinDgp::Dgp3: return "dgp3";
        case BuiltinDgp::Dgp4: return "dgp4";
    }
    return "?";
}

DgpRegistry::DgpRegistry() {
    for (auto id : {BuiltinDgp::Dgp1, BuiltinDgp::Dgp2, BuiltinDgp::Dgp3, BuiltinDgp::Dgp4})
        factories_[to_string(id)] = [id] { return make_builtin_dgp(id); };
}

void DgpRegistry::add(const std::string& name, Factory factory) {
    if (name.empty()) throw ConfigError("DGP name must be non-empty");
    factories_[name] = std::move(factory);
}

bool DgpRegistry::contains(const std::string& name) const { return factories_.count(name) > 0; }

PopulationSpec DgpRegistry::make(const std::string& name) const {
    auto it = factories_.find(name);
    if (it == factories_.end()) throw ConfigError("unknown DGP '" + name + "'");
    return it->second();
}

std::vector<std::string> DgpRegistry::names() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : factories_) out.push_back(k);
    return out;
}

}  // namespace carate
