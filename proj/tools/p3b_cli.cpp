// p3b: command-line front end for the planar three-body blow-up library.
// Subcommands: cc, spectra, massmap, integrate, secondvar, minprobe.
// Exit codes: 0 success, 2 invalid input, 3 numerical failure.

#include <cmath>
#include <complex>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "p3b/centralconfig.hpp"
#include "p3b/errors.hpp"
#include "p3b/flow.hpp"
#include "p3b/jmaction.hpp"
#include "p3b/json_io.hpp"
#include "p3b/secondvar.hpp"
#include "p3b/spectra.hpp"

namespace {

using nlohmann::json;
using namespace p3b;

MassTriple parse_masses(const std::string& text) {
    std::istringstream in(text);
    double v[3];
    char sep[2];
    if (!(in >> v[0] >> sep[0] >> v[1] >> sep[1] >> v[2]) || sep[0] != ',' || sep[1] != ',' ||
        !(in >> std::ws).eof())
        throw std::invalid_argument("masses must be a comma triple, e.g. 1,2,3");
    return MassTriple(v[0], v[1], v[2]);
}

std::vector<double> parse_doubles(const std::string& text, size_t count, const char* what) {
    std::vector<double> out;
    std::istringstream in(text);
    std::string tok;
    while (std::getline(in, tok, ',')) out.push_back(std::stod(tok));
    if (out.size() != count)
        throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(count) +
                                    " comma-separated numbers");
    return out;
}

CentralConfiguration parse_cc(const std::string& kind, const MassTriple& m) {
    if (kind == "lagrange+") return lagrange(m, Orientation::Positive);
    if (kind == "lagrange-") return lagrange(m, Orientation::Negative);
    if (kind == "euler1") return euler(m, 1);
    if (kind == "euler2") return euler(m, 2);
    if (kind == "euler3") return euler(m, 3);
    throw std::invalid_argument("unknown configuration kind '" + kind +
                                "' (use lagrange+, lagrange-, euler1, euler2, euler3)");
}

void check_format(const std::string& format, const std::string& expected) {
    if (format != expected)
        throw std::invalid_argument("this subcommand only supports --format " + expected);
}

void write_output(const std::string& path, const std::string& payload) {
    if (path.empty()) {
        std::cout << payload;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::invalid_argument("cannot open output file: " + path);
    out << payload;
}

// Largest pairing error after greedily matching each value to its nearest
// unclaimed partner; cross-check metric between closed-form and numeric
// spectra.
double multiset_distance(std::vector<std::complex<double>> a,
                         std::vector<std::complex<double>> b) {
    double worst = 0.0;
    for (const auto& x : a) {
        size_t best = 0;
        double bestd = std::numeric_limits<double>::infinity();
        for (size_t j = 0; j < b.size(); ++j) {
            const double d = std::abs(x - b[j]);
            if (d < bestd) {
                bestd = d;
                best = j;
            }
        }
        worst = std::max(worst, bestd);
        b.erase(b.begin() + static_cast<long>(best));
    }
    return worst;
}

const char* termination_name(TerminationReason reason) {
    switch (reason) {
        case TerminationReason::Completed: return "completed";
        case TerminationReason::RadialBound: return "radial_bound";
        case TerminationReason::CollisionApproach: return "collision_approach";
    }
    return "unknown";
}

struct CcArgs {
    std::string masses, output, format = "json";
};

int run_cc(const CcArgs& args) {
    check_format(args.format, "json");
    const MassTriple m = parse_masses(args.masses);
    json records = json::array();
    for (const CentralConfiguration& cc : all_central_configurations(m))
        records.push_back(to_json(cc));
    const json out{{"masses", to_json(m)}, {"central_configurations", records}};
    write_output(args.output, out.dump(2) + "\n");
    return 0;
}

struct SpectraArgs {
    std::string masses, cc, output, format = "json";
    int sign = 1;
    bool at_infinity = false;
};

int run_spectra(const SpectraArgs& args) {
    check_format(args.format, "json");
    if (args.sign != 1 && args.sign != -1)
        throw std::invalid_argument("--sign must be 1 or -1");
    const MassTriple m = parse_masses(args.masses);
    const CentralConfiguration cc = parse_cc(args.cc, m);
    const SpectralReport report = restpoint_eigenvalues(cc, args.sign, args.at_infinity, m);
    json out = to_json(report);
    out["masses"] = to_json(m);
    out["crosscheck_discrepancy"] = multiset_distance(
        report.constrained_eigenvalues(),
        constrained_b_spectrum(cc, args.sign, args.at_infinity, m));
    write_output(args.output, out.dump(2) + "\n");
    return 0;
}

struct MassmapArgs {
    std::string output, format = "csv";
    int resolution = 200;
    double margin = 1e-3;
    bool serial = false;
};

int run_massmap(const MassmapArgs& args) {
    check_format(args.format, "csv");
    if (args.resolution < 2) throw std::invalid_argument("--resolution must be at least 2");
    if (!(args.margin > 0.0 && args.margin < 1.0 / 3.0))
        throw std::invalid_argument("--margin must lie in (0, 1/3)");
    const std::vector<MassMapCell> cells =
        args.serial ? spiraling_region_scan_serial(args.resolution, args.margin)
                    : spiraling_region_scan(args.resolution, args.margin);
    std::ostringstream csv;
    write_massmap_csv(csv, cells);
    write_output(args.output, csv.str());
    return 0;
}

struct IntegrateArgs {
    std::string masses, restpoint, state, chart = "r", dir, output, format = "csv";
    double h = 0.0, offset = 0.0, tau = 1.0;
    double tol_rel = 1e-10, tol_abs = 1e-12;
    int sign = 1;
};

int run_integrate(const IntegrateArgs& args) {
    check_format(args.format, "csv");
    const MassTriple m = parse_masses(args.masses);
    IntegratorOptions opts;
    opts.rtol = args.tol_rel;
    opts.atol = args.tol_abs;

    std::optional<Trajectory> traj;
    if (!args.restpoint.empty()) {
        std::string kind = args.restpoint;
        bool at_infinity = false;
        if (const auto comma = kind.find(','); comma != std::string::npos) {
            const std::string where = kind.substr(comma + 1);
            kind = kind.substr(0, comma);
            if (where == "infinity")
                at_infinity = true;
            else if (where != "collision")
                throw std::invalid_argument("restpoint location must be collision or infinity");
        }
        const CentralConfiguration cc = parse_cc(kind, m);
        if (args.sign != 1 && args.sign != -1)
            throw std::invalid_argument("--sign must be 1 or -1");
        const RestpointState rp = restpoint(cc, args.sign, at_infinity, m);
        if (!args.dir.empty() || args.offset > 0.0) {
            if (args.dir.rfind("stable", 0) != 0)
                throw std::invalid_argument("--dir must look like stable0, stable1, ...");
            const int index = std::stoi(args.dir.substr(6));
            const StableSubspace stable = stable_subspace(rp, m);
            if (index < 0 || index >= static_cast<int>(stable.modes.size()))
                throw std::invalid_argument("stable direction index out of range");
            traj = shoot_stable_manifold(rp, args.offset, stable.modes[index].vec,
                                         std::abs(args.tau), m, opts);
        } else {
            // Without an offset, start on the homothetic orbit through the
            // restpoint at radial coordinate 1.
            const BlownUpState start = make_state(rp.state.chart, 1.0, rp.state.s.s,
                                                  rp.state.z, 0.0, m);
            traj = integrate(start, {0.0, args.tau}, m, opts);
        }
    } else if (!args.state.empty()) {
        const std::vector<double> v = parse_doubles(args.state, 13, "--state");
        Vec6 s, z;
        for (int i = 0; i < 6; ++i) {
            s[i] = v[1 + i];
            z[i] = v[7 + i];
        }
        const Chart chart = args.chart == "u" ? Chart::UChart : Chart::RChart;
        if (args.chart != "r" && args.chart != "u")
            throw std::invalid_argument("--chart must be r or u");
        const BlownUpState start = make_state(chart, v[0], s, z, args.h, m);
        traj = integrate(start, {0.0, args.tau}, m, opts);
    } else {
        throw std::invalid_argument("integrate needs --restpoint or --state");
    }

    std::ostringstream csv;
    write_trajectory_csv(csv, *traj);

    double max_energy = 0.0, min_radial = std::numeric_limits<double>::infinity();
    int v_violations = 0;
    for (size_t i = 0; i < traj->samples.size(); ++i) {
        max_energy = std::max(max_energy, traj->samples[i].diagnostics.energy_residual);
        min_radial = std::min(min_radial, traj->samples[i].state.radial);
        if (i > 0 &&
            traj->samples[i].diagnostics.v < traj->samples[i - 1].diagnostics.v - 1e-9)
            ++v_violations;
    }
    const json summary{
        {"samples", traj->samples.size()},
        {"termination", termination_name(traj->termination)},
        {"max_energy_residual", max_energy},
        {"v_monotonicity_violations", v_violations},
        {"tau_final", traj->samples.back().tau},
        {"t_final", traj->samples.back().t},
        {"radial_final", traj->samples.back().state.radial},
    };
    if (args.output.empty()) {
        std::cout << csv.str();
        std::cerr << summary.dump(2) << "\n";
    } else {
        write_output(args.output, csv.str());
        std::cout << summary.dump(2) << "\n";
    }
    return 0;
}

struct SecondvarArgs {
    std::string masses, output, format = "json";
    int middle = 2;
    double window_start = 1.0;
};

int run_secondvar(const SecondvarArgs& args) {
    check_format(args.format, "json");
    const MassTriple m = parse_masses(args.masses);
    if (args.middle < 1 || args.middle > 3)
        throw std::invalid_argument("--middle must be 1, 2 or 3");
    const CentralConfiguration cc = euler(m, args.middle);
    json out{{"masses", to_json(m)},
             {"middle", args.middle},
             {"nu", nu_parameter(m, args.middle)}};
    try {
        const NegativeDirection nd = negative_direction(cc, m, args.window_start);
        out.merge_patch(to_json(nd));
        out["spiraling"] = true;
        out["conjugate_points"] = conjugate_points(nd.nu, args.window_start, nd.profile.b);
    } catch (const NotSpiralingError&) {
        out["spiraling"] = false;
        out["conjugate_points"] = json::array();
        out["note"] = "no oscillation: the variational form is nonnegative on every window";
    } catch (const BoundaryError&) {
        out["spiraling"] = nullptr;
        out["note"] = "nu sits inside the indeterminate boundary band";
    }
    write_output(args.output, out.dump(2) + "\n");
    return 0;
}

struct MinprobeArgs {
    std::string masses, cc = "euler2", window, path_file, output, format = "json";
    int nodes = 241, modes = 10;
};

int run_minprobe(const MinprobeArgs& args) {
    check_format(args.format, "json");
    DiscretePath path{MassTriple(1.0, 1.0, 1.0), {}, std::nullopt};
    json meta;
    if (!args.path_file.empty()) {
        std::ifstream in(args.path_file);
        if (!in) throw std::invalid_argument("cannot open path file: " + args.path_file);
        path = path_from_json(json::parse(in));
        meta["path_file"] = args.path_file;
    } else {
        const MassTriple m = parse_masses(args.masses);
        const CentralConfiguration cc = parse_cc(args.cc, m);
        double a = 1.0, b = 4.0;
        if (!args.window.empty()) {
            const std::vector<double> w = parse_doubles(args.window, 2, "--window");
            a = w[0];
            b = w[1];
        } else if (cc.is_euler()) {
            const IndicialData ind = indicial(nu_parameter(m, cc.euler_middle()));
            if (ind.oscillation_rate)
                b = a * std::exp(1.25 * M_PI / *ind.oscillation_rate);
        }
        if (!(a > 0.0 && b > a)) throw std::invalid_argument("--window must satisfy 0 < a < b");
        if (args.nodes < 2 || args.nodes > 100000)
            throw std::invalid_argument("--nodes out of range");
        const HomotheticOrbit orbit = homothetic_orbit(cc);
        std::vector<Vec6> nodes(args.nodes);
        std::vector<double> times(args.nodes);
        for (int i = 0; i < args.nodes; ++i) {
            times[i] = a * std::pow(b / a, static_cast<double>(i) / (args.nodes - 1));
            nodes[i] = homothetic_position(orbit, times[i]);
        }
        path = DiscretePath{m, std::move(nodes), std::move(times)};
        meta = json{{"masses", to_json(m)},
                    {"cc", args.cc},
                    {"window", json::array({a, b})},
                    {"nodes", args.nodes}};
    }
    const MinimizerProbe probe = local_minimizer_probe(path, args.modes);
    json out = to_json(probe);
    out["input"] = meta;
    write_output(args.output, out.dump(2) + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Planar three-body problem: blow-up flow, spectra and action toolkit"};
    app.require_subcommand(1);
    int seed = 0;
    app.add_option("--seed", seed, "Seed for randomized batteries (reserved)");

    CcArgs cc_args;
    auto* cc_cmd = app.add_subcommand("cc", "All five central configurations as JSON");
    cc_cmd->add_option("--masses", cc_args.masses, "Comma mass triple")->required();
    cc_cmd->add_option("--output", cc_args.output, "Output path (default stdout)");
    cc_cmd->add_option("--format", cc_args.format, "Output format (json)");

    SpectraArgs sp_args;
    auto* sp_cmd = app.add_subcommand("spectra", "Restpoint eigenvalue report as JSON");
    sp_cmd->add_option("--masses", sp_args.masses, "Comma mass triple")->required();
    sp_cmd->add_option("--cc", sp_args.cc, "lagrange+|lagrange-|euler1|euler2|euler3")
        ->required();
    sp_cmd->add_option("--sign", sp_args.sign, "Restpoint sign (+1 expanding, -1 contracting)");
    sp_cmd->add_flag("--infinity", sp_args.at_infinity, "Restpoint at infinity (u-chart)");
    sp_cmd->add_option("--output", sp_args.output, "Output path (default stdout)");
    sp_cmd->add_option("--format", sp_args.format, "Output format (json)");

    MassmapArgs mm_args;
    auto* mm_cmd = app.add_subcommand("massmap", "Spiraling-region scan of the mass simplex");
    mm_cmd->add_option("--resolution", mm_args.resolution, "Points per simplex edge (>= 2)");
    mm_cmd->add_option("--margin", mm_args.margin, "Barycentric exclusion margin");
    mm_cmd->add_flag("--serial", mm_args.serial, "Use the serial reference kernel");
    mm_cmd->add_option("--output", mm_args.output, "Output path (default stdout)");
    mm_cmd->add_option("--format", mm_args.format, "Output format (csv)");

    IntegrateArgs in_args;
    auto* in_cmd = app.add_subcommand("integrate", "Blown-up flow integration to trajectory CSV");
    in_cmd->add_option("--masses", in_args.masses, "Comma mass triple")->required();
    in_cmd->add_option("--restpoint", in_args.restpoint,
                       "Restpoint spec, e.g. lagrange+,infinity or euler2");
    in_cmd->add_option("--state", in_args.state, "Explicit state: radial,s(6),z(6)");
    in_cmd->add_option("--chart", in_args.chart, "Chart for --state: r or u");
    in_cmd->add_option("--energy", in_args.h, "Energy for --state in the r-chart");
    in_cmd->add_option("--sign", in_args.sign, "Restpoint sign (+1 expanding, -1 contracting)");
    in_cmd->add_option("--offset", in_args.offset, "Stable-manifold offset in [1e-8, 1e-4]");
    in_cmd->add_option("--dir", in_args.dir, "Stable direction, e.g. stable0");
    in_cmd->add_option("--tau", in_args.tau, "Rescaled-time span (negative = backward)");
    in_cmd->add_option("--tol-rel", in_args.tol_rel, "Relative tolerance");
    in_cmd->add_option("--tol-abs", in_args.tol_abs, "Absolute tolerance");
    in_cmd->add_option("--output", in_args.output, "CSV path (summary then goes to stdout)");
    in_cmd->add_option("--format", in_args.format, "Output format (csv)");

    SecondvarArgs sv_args;
    auto* sv_cmd = app.add_subcommand("secondvar", "Second-variation certificate as JSON");
    sv_cmd->add_option("--masses", sv_args.masses, "Comma mass triple")->required();
    sv_cmd->add_option("--middle", sv_args.middle, "Middle body of the collinear shape (1-3)");
    sv_cmd->add_option("--window-start", sv_args.window_start,
                       "Base point of the certificate window");
    sv_cmd->add_option("--output", sv_args.output, "Output path (default stdout)");
    sv_cmd->add_option("--format", sv_args.format, "Output format (json)");

    MinprobeArgs mp_args;
    auto* mp_cmd = app.add_subcommand("minprobe", "Discrete local-minimality probe as JSON");
    mp_cmd->add_option("--masses", mp_args.masses, "Comma mass triple");
    mp_cmd->add_option("--cc", mp_args.cc, "Homothetic configuration kind");
    mp_cmd->add_option("--window", mp_args.window, "Time window a,b for the homothetic path");
    mp_cmd->add_option("--nodes", mp_args.nodes, "Node count of the sampled path");
    mp_cmd->add_option("--modes", mp_args.modes, "Sine modes per coordinate");
    mp_cmd->add_option("--path", mp_args.path_file, "JSON path file (overrides --cc/--window)");
    mp_cmd->add_option("--output", mp_args.output, "Output path (default stdout)");
    mp_cmd->add_option("--format", mp_args.format, "Output format (json)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*cc_cmd) return run_cc(cc_args);
        if (*sp_cmd) return run_spectra(sp_args);
        if (*mm_cmd) return run_massmap(mm_args);
        if (*in_cmd) return run_integrate(in_args);
        if (*sv_cmd) return run_secondvar(sv_args);
        if (*mp_cmd) return run_minprobe(mp_args);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::out_of_range& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
