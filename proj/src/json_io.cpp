#include "p3b/json_io.hpp"

#include <stdexcept>

namespace p3b {

namespace {

nlohmann::json vec6_to_json(const Vec6& v) {
    nlohmann::json out = nlohmann::json::array();
    for (int i = 0; i < 6; ++i) out.push_back(v[i]);
    return out;
}

Vec6 vec6_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 6)
        throw std::invalid_argument("json_io: a configuration needs six coordinates");
    Vec6 v;
    for (int i = 0; i < 6; ++i) v[i] = j.at(i).get<double>();
    return v;
}

nlohmann::json complex_to_json(const std::complex<double>& z) {
    return nlohmann::json{{"re", z.real()}, {"im", z.imag()}};
}

}  // namespace

nlohmann::json to_json(const MassTriple& m) {
    return nlohmann::json::array({m[0], m[1], m[2]});
}

nlohmann::json to_json(const CentralConfiguration& cc) {
    nlohmann::json out{
        {"kind", cc_kind_name(cc.kind)},
        {"s", vec6_to_json(cc.s.s)},
        {"U", cc.U_value},
        {"lambda", cc.lambda},
        {"grad_residual", cc.grad_residual},
        {"com_residual", cc.s.com_residual},
        {"sphere_residual", cc.s.sphere_residual},
    };
    if (cc.euler_root) out["euler_root"] = *cc.euler_root;
    return out;
}

nlohmann::json to_json(const SpectralReport& report) {
    nlohmann::json eigs = nlohmann::json::array();
    for (const auto& z : report.eigenvalues) eigs.push_back(complex_to_json(z));
    nlohmann::json out{
        {"cc_kind", cc_kind_name(report.cc_kind)},
        {"v0", report.v0},
        {"at_infinity", report.at_infinity},
        {"alphas", nlohmann::json::array({report.alphas.first, report.alphas.second})},
        {"eigenvalues", eigs},
    };
    if (report.k) out["k"] = *report.k;
    if (report.nu) out["nu"] = *report.nu;
    if (report.spiraling) out["spiraling"] = *report.spiraling;
    return out;
}

nlohmann::json to_json(const NegativeDirection& direction) {
    return nlohmann::json{
        {"window", nlohmann::json{{"a", direction.profile.a},
                                  {"b", direction.profile.b},
                                  {"intervals", direction.profile.intervals()}}},
        {"z_direction", vec6_to_json(direction.profile.z_direction)},
        {"Q", direction.q_value},
        {"quadrature_error", direction.quadrature_error},
        {"margin", std::abs(direction.q_value) / direction.quadrature_error},
        {"nu", direction.nu},
        {"conjugate_ratio", direction.conjugate_ratio},
    };
}

nlohmann::json to_json(const MinimizerProbe& probe) {
    nlohmann::json coeffs = nlohmann::json::array();
    for (int i = 0; i < probe.worst_direction.size(); ++i)
        coeffs.push_back(probe.worst_direction[i]);
    return nlohmann::json{
        {"min_eigenvalue", probe.min_eigenvalue},
        {"n_modes", probe.n_modes},
        {"worst_direction", coeffs},
    };
}

nlohmann::json to_json(const DiscretePath& path) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const Vec6& q : path.nodes) nodes.push_back(vec6_to_json(q));
    nlohmann::json out{{"masses", to_json(path.masses)}, {"nodes", nodes}};
    if (path.times) out["times"] = *path.times;
    return out;
}

DiscretePath path_from_json(const nlohmann::json& j) {
    const auto& jm = j.at("masses");
    if (!jm.is_array() || jm.size() != 3)
        throw std::invalid_argument("json_io: masses must be a triple");
    const MassTriple m(jm.at(0).get<double>(), jm.at(1).get<double>(), jm.at(2).get<double>());
    DiscretePath path{m, {}, std::nullopt};
    for (const auto& node : j.at("nodes")) path.nodes.push_back(vec6_from_json(node));
    if (j.contains("times")) path.times = j.at("times").get<std::vector<double>>();
    validate_path(path);
    return path;
}

}  // namespace p3b
