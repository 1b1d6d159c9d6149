#include "speclab/runner.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "speclab/calculus.hpp"
#include "speclab/control.hpp"
#include "speclab/errors.hpp"
#include "speclab/inequality.hpp"
#include "speclab/numerics.hpp"
#include "speclab/psi.hpp"
#include "speclab/spectral.hpp"
#include "speclab/symbol.hpp"

namespace speclab {

namespace {

using nlohmann::json;

[[noreturn]] void bad_config(const std::string& origin, const std::string& path,
                             const std::string& what) {
    throw ConfigError(origin + ": " + path + ": " + what);
}

void check_keys(const json& obj, const std::string& origin, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                known = true;
                break;
            }
        if (!known) bad_config(origin, path, "unknown key \"" + it.key() + "\"");
    }
}

const json& expect_object(const json& v, const std::string& origin, const std::string& path) {
    if (!v.is_object()) bad_config(origin, path, "expected an object");
    return v;
}

double expect_number(const json& v, const std::string& origin, const std::string& path) {
    if (!v.is_number()) bad_config(origin, path, "expected a number");
    return v.get<double>();
}

double expect_positive(const json& v, const std::string& origin, const std::string& path) {
    const double x = expect_number(v, origin, path);
    if (!(x > 0.0)) bad_config(origin, path, "must be positive");
    return x;
}

long expect_integer(const json& v, const std::string& origin, const std::string& path) {
    if (!v.is_number_integer()) bad_config(origin, path, "expected an integer");
    return v.get<long>();
}

std::string expect_string(const json& v, const std::string& origin, const std::string& path) {
    if (!v.is_string()) bad_config(origin, path, "expected a string");
    return v.get<std::string>();
}

std::vector<double> expect_positive_array(const json& v, const std::string& origin,
                                          const std::string& path, bool ascending) {
    if (!v.is_array() || v.empty()) bad_config(origin, path, "expected a nonempty array");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string slot = path + "[" + std::to_string(i) + "]";
        out.push_back(expect_positive(v[i], origin, slot));
        if (ascending && i > 0 && out[i] <= out[i - 1])
            bad_config(origin, slot, "grid must be strictly increasing");
    }
    return out;
}

void validate_params(const std::string& kind, const json& params, int dimension,
                     const std::string& origin, const std::string& path) {
    if (kind == "spectra") {
        check_keys(params, origin, path, {"lambda_max"});
        if (!params.contains("lambda_max")) bad_config(origin, path, "missing \"lambda_max\"");
        expect_positive(params["lambda_max"], origin, path + ".lambda_max");
    } else if (kind == "observability") {
        check_keys(params, origin, path, {"lambdas"});
        if (!params.contains("lambdas")) bad_config(origin, path, "missing \"lambdas\"");
        expect_positive_array(params["lambdas"], origin, path + ".lambdas", true);
    } else if (kind == "doubling") {
        check_keys(params, origin, path, {"center", "radius", "lambdas", "packets_per_cell"});
        for (const char* k : {"center", "radius", "lambdas"})
            if (!params.contains(k))
                bad_config(origin, path, std::string("missing \"") + k + "\"");
        const json& c = params["center"];
        if (!c.is_array() || c.size() != static_cast<std::size_t>(dimension))
            bad_config(origin, path + ".center", "expected an array of length dimension");
        for (std::size_t i = 0; i < c.size(); ++i)
            expect_number(c[i], origin, path + ".center[" + std::to_string(i) + "]");
        const double r = expect_positive(params["radius"], origin, path + ".radius");
        if (!(2.0 * r < 0.5)) bad_config(origin, path + ".radius", "doubled ball must fit the torus");
        expect_positive_array(params["lambdas"], origin, path + ".lambdas", true);
        if (params.contains("packets_per_cell")) {
            const long p = expect_integer(params["packets_per_cell"], origin,
                                          path + ".packets_per_cell");
            if (p < 1) bad_config(origin, path + ".packets_per_cell", "must be >= 1");
        }
    } else if (kind == "interpolation") {
        check_keys(params, origin, path,
                   {"lambda_max", "horizon", "alpha", "packets", "time_samples"});
        for (const char* k : {"lambda_max", "horizon", "alpha"})
            if (!params.contains(k))
                bad_config(origin, path, std::string("missing \"") + k + "\"");
        expect_positive(params["lambda_max"], origin, path + ".lambda_max");
        const double T = expect_positive(params["horizon"], origin, path + ".horizon");
        const double a = expect_positive(params["alpha"], origin, path + ".alpha");
        if (!(2.0 * a < T))
            bad_config(origin, path + ".alpha", "the trimmed window (alpha, T-alpha) is empty");
        if (params.contains("packets")) {
            const long p = expect_integer(params["packets"], origin, path + ".packets");
            if (p < 1) bad_config(origin, path + ".packets", "must be >= 1");
        }
        if (params.contains("time_samples")) {
            const long p = expect_integer(params["time_samples"], origin, path + ".time_samples");
            if (p < 17) bad_config(origin, path + ".time_samples", "must be >= 17");
        }
    } else if (kind == "psi-check") {
        check_keys(params, origin, path, {"epsilons", "horizon", "grid"});
        for (const char* k : {"epsilons", "horizon"})
            if (!params.contains(k))
                bad_config(origin, path, std::string("missing \"") + k + "\"");
        const json& eps = params["epsilons"];
        if (!eps.is_array() || eps.empty())
            bad_config(origin, path + ".epsilons", "expected a nonempty array");
        for (std::size_t i = 0; i < eps.size(); ++i) {
            const std::string slot = path + ".epsilons[" + std::to_string(i) + "]";
            const double e = expect_number(eps[i], origin, slot);
            if (!(e > 0.0 && e < 1.0)) bad_config(origin, slot, "must lie in (0, 1)");
        }
        expect_positive(params["horizon"], origin, path + ".horizon");
        if (params.contains("grid")) {
            const long g = expect_integer(params["grid"], origin, path + ".grid");
            if (g < 16) bad_config(origin, path + ".grid", "must be >= 16");
        }
    } else if (kind == "powers") {
        check_keys(params, origin, path, {"exponents", "grid", "contour_nodes"});
        if (!params.contains("exponents")) bad_config(origin, path, "missing \"exponents\"");
        const json& zs = params["exponents"];
        if (!zs.is_array() || zs.empty())
            bad_config(origin, path + ".exponents", "expected a nonempty array");
        for (std::size_t i = 0; i < zs.size(); ++i) {
            const std::string slot = path + ".exponents[" + std::to_string(i) + "]";
            if (!zs[i].is_array() || zs[i].size() != 2)
                bad_config(origin, slot, "expected a [re, im] pair");
            expect_number(zs[i][0], origin, slot + "[0]");
            expect_number(zs[i][1], origin, slot + "[1]");
        }
        if (params.contains("grid")) {
            const long g = expect_integer(params["grid"], origin, path + ".grid");
            if (g < 2) bad_config(origin, path + ".grid", "must be >= 2");
        }
        if (params.contains("contour_nodes")) {
            const long n = expect_integer(params["contour_nodes"], origin,
                                          path + ".contour_nodes");
            if (n < 8 || n % 2 != 0) bad_config(origin, path + ".contour_nodes", "must be even and >= 8");
        }
    } else if (kind == "product-bounds") {
        check_keys(params, origin, path, {"lambda_max", "horizon", "mode_cap", "epsilons"});
        if (!params.contains("lambda_max")) bad_config(origin, path, "missing \"lambda_max\"");
        expect_positive(params["lambda_max"], origin, path + ".lambda_max");
        if (params.contains("horizon"))
            expect_positive(params["horizon"], origin, path + ".horizon");
        if (params.contains("mode_cap")) {
            const long k = expect_integer(params["mode_cap"], origin, path + ".mode_cap");
            if (k < 2) bad_config(origin, path + ".mode_cap", "must be >= 2");
        }
        if (params.contains("epsilons"))
            expect_positive_array(params["epsilons"], origin, path + ".epsilons", true);
    } else if (kind == "control") {
        check_keys(params, origin, path, {"alpha", "horizon", "lambda_max", "initial"});
        for (const char* k : {"alpha", "horizon", "lambda_max"})
            if (!params.contains(k))
                bad_config(origin, path, std::string("missing \"") + k + "\"");
        expect_positive(params["alpha"], origin, path + ".alpha");
        expect_positive(params["horizon"], origin, path + ".horizon");
        expect_positive(params["lambda_max"], origin, path + ".lambda_max");
        if (params.contains("initial")) {
            const json& u0 = params["initial"];
            if (!u0.is_array() || u0.empty())
                bad_config(origin, path + ".initial", "expected a nonempty array");
            for (std::size_t i = 0; i < u0.size(); ++i) {
                const std::string slot = path + ".initial[" + std::to_string(i) + "]";
                if (!u0[i].is_array() || u0[i].size() != 2)
                    bad_config(origin, slot, "expected a [re, im] pair");
                expect_number(u0[i][0], origin, slot + "[0]");
                expect_number(u0[i][1], origin, slot + "[1]");
            }
        }
    } else if (kind == "cost-curve") {
        check_keys(params, origin, path, {"alpha", "lambda_max", "horizons"});
        for (const char* k : {"alpha", "lambda_max", "horizons"})
            if (!params.contains(k))
                bad_config(origin, path, std::string("missing \"") + k + "\"");
        expect_positive(params["alpha"], origin, path + ".alpha");
        expect_positive(params["lambda_max"], origin, path + ".lambda_max");
        expect_positive_array(params["horizons"], origin, path + ".horizons", true);
    } else {
        bad_config(origin, path + ".kind", "unknown experiment \"" + kind + "\"");
    }
}

struct CsvTable {
    std::ostringstream body;
    explicit CsvTable(std::initializer_list<const char*> columns) {
        bool first = true;
        for (const char* c : columns) {
            if (!first) body << ",";
            body << c;
            first = false;
        }
        body << "\n";
    }
    void row(std::initializer_list<double> values) {
        bool first = true;
        for (double v : values) {
            if (!first) body << ",";
            body << format_double(v);
            first = false;
        }
        body << "\n";
    }
    std::string str() const { return body.str(); }
};

struct Emitted {
    std::string csv;
    json sidecar;
    bool pass = true;
    std::string message;
};

json sensor_json(const ExperimentConfig& cfg) {
    json boxes = json::array();
    for (const SensorBox& b : cfg.sensor) boxes.push_back({{"lo", b.lo}, {"hi", b.hi}});
    return boxes;
}

// Shared per-run state.  Bases are cached by cutoff and built lazily under a
// lock; everything downstream of construction is pure computation.
struct RunContext {
    const ExperimentConfig& cfg;
    LatticePtr lattice;
    Subdomain sensor;
    std::mutex basis_lock;
    std::map<double, std::shared_ptr<const SpectralBasis>> bases;

    RunContext(const ExperimentConfig& c, LatticePtr lat, Subdomain omega)
        : cfg(c), lattice(std::move(lat)), sensor(std::move(omega)) {}

    ToroidalSymbol make_symbol(LatticePtr lat) const {
        const double nu = cfg.nu;
        const double shift = cfg.shift;
        if (cfg.symbol == "laplace")
            return ToroidalSymbol::from_multiplier(lat, 2.0, [](const std::vector<int>& xi) {
                double s = 0;
                for (int c : xi) s += double(c) * c;
                return Complex(4.0 * kPiSq * s, 0.0);
            });
        if (cfg.symbol == "power")
            return ToroidalSymbol::from_multiplier(lat, nu, [=](const std::vector<int>& xi) {
                double s = 0;
                for (int c : xi) s += double(c) * c;
                return Complex(std::pow(shift + 4.0 * kPiSq * s, nu / 2.0), 0.0);
            });
        return ToroidalSymbol::from_multiplier(lat, 2.0, [=](const std::vector<int>& xi) {
            double s = 0;
            for (int c : xi) s += double(c) * c;
            return Complex(shift + 4.0 * kPiSq * s, 0.0);
        });
    }

    std::shared_ptr<const SpectralBasis> basis_at(double lambda_max) {
        std::lock_guard<std::mutex> lock(basis_lock);
        auto it = bases.find(lambda_max);
        if (it != bases.end()) return it->second;
        auto basis = std::make_shared<SpectralBasis>(
            eigendata(assemble_operator(make_symbol(lattice)), lambda_max));
        bases.emplace(lambda_max, basis);
        return basis;
    }

    static constexpr double kPiSq = 9.8696044010893586;
};

std::uint64_t mix_seed(std::uint64_t base, const std::string& name) {
    return base ^ fnv1a64(name);
}

Emitted exec_spectra(RunContext& ctx, const ExperimentEntry& e) {
    auto basis = ctx.basis_at(e.params["lambda_max"].get<double>());
    CsvTable t{"index", "mu", "lambda"};
    for (long j = 0; j < basis->size(); ++j)
        t.row({double(j), basis->mu(j), basis->lambda(j)});
    Emitted out;
    out.csv = t.str();
    out.sidecar["nu"] = basis->nu();
    out.sidecar["modes"] = basis->size();
    out.sidecar["next_mu"] = basis->next_mu();
    out.sidecar["truncation_warning"] = basis->truncation_warning();
    return out;
}

Emitted exec_observability(RunContext& ctx, const ExperimentEntry& e) {
    const std::vector<double> lambdas = e.params["lambdas"].get<std::vector<double>>();
    auto basis = ctx.basis_at(lambdas.back());
    ObservabilityReport rep = observability_sweep(*basis, ctx.sensor, lambdas);
    CsvTable t{"lambda", "C", "sigma_min"};
    for (std::size_t i = 0; i < rep.lambdas.size(); ++i)
        t.row({rep.lambdas[i], rep.constants[i], rep.sigma_mins[i]});
    Emitted out;
    out.csv = t.str();
    out.sidecar["fit"] = {{"C1", rep.fit.C1}, {"C2", rep.fit.C2}, {"r2", rep.fit.r2}};
    out.sidecar["tolerance_r2"] = ctx.cfg.tolerances.observability_r2;
    bool monotone = true;
    for (std::size_t i = 1; i < rep.constants.size(); ++i)
        monotone = monotone && rep.constants[i] >= rep.constants[i - 1] * (1.0 - 1e-12);
    out.pass = rep.fit.r2 >= ctx.cfg.tolerances.observability_r2 && monotone &&
               rep.fit.C2 > 0.0;
    if (!out.pass) out.message = "observability fit failed the declared bar";
    return out;
}

Emitted exec_doubling(RunContext& ctx, const ExperimentEntry& e, std::uint64_t seed) {
    const std::vector<double> lambdas = e.params["lambdas"].get<std::vector<double>>();
    const std::vector<double> center = e.params["center"].get<std::vector<double>>();
    const double radius = e.params["radius"].get<double>();
    const long ppc = e.params.value("packets_per_cell", 8);
    auto basis = ctx.basis_at(lambdas.back());
    DoublingReport rep = doubling_sweep(basis, center, radius, lambdas, ppc, seed);
    CsvTable t{"lambda", "ratio"};
    for (std::size_t i = 0; i < rep.lambdas.size(); ++i)
        t.row({rep.lambdas[i], rep.ratios[i]});
    Emitted out;
    out.csv = t.str();
    out.sidecar["fit"] = {{"C1", rep.fit.C1}, {"C2", rep.fit.C2}, {"r2", rep.fit.r2}};
    out.sidecar["center"] = center;
    out.sidecar["radius"] = radius;
    out.sidecar["packets_per_cell"] = ppc;
    out.sidecar["tolerance_r2"] = ctx.cfg.tolerances.doubling_r2;
    out.pass = rep.fit.r2 >= ctx.cfg.tolerances.doubling_r2;
    if (!out.pass) out.message = "doubling envelope fit failed the declared bar";
    return out;
}

Emitted exec_interpolation(RunContext& ctx, const ExperimentEntry& e, std::uint64_t seed) {
    const double lambda_max = e.params["lambda_max"].get<double>();
    const double horizon = e.params["horizon"].get<double>();
    const double alpha = e.params["alpha"].get<double>();
    const long packets = e.params.value("packets", 6);
    const long time_samples = e.params.value("time_samples", 65);
    auto basis = ctx.basis_at(lambda_max);
    CsvTable t{"packet", "kappa", "ratio"};
    Emitted out;
    bool all_finite = true;
    std::vector<double> kappas;
    for (long i = 0; i < packets; ++i) {
        WavePacket packet = random_packet(basis, lambda_max, seed + std::uint64_t(i));
        InterpolationSearch search =
            interpolation_search(packet, ctx.sensor, horizon, alpha, time_samples);
        t.row({double(i), search.kappa, search.ratio});
        kappas.push_back(search.kappa);
        all_finite = all_finite && std::isfinite(search.ratio) && search.ratio > 0.0;
    }
    out.csv = t.str();
    out.sidecar["kappas"] = kappas;
    out.sidecar["horizon"] = horizon;
    out.sidecar["alpha"] = alpha;
    out.pass = all_finite;
    if (!out.pass) out.message = "interpolation ratios left the finite range";
    return out;
}

Emitted exec_psi(RunContext& ctx, const ExperimentEntry& e) {
    const std::vector<double> epsilons = e.params["epsilons"].get<std::vector<double>>();
    const double horizon = e.params["horizon"].get<double>();
    const long grid = e.params.value("grid", 2000);
    CsvTable t{"epsilon", "psi0", "residual1", "residual2", "residual3", "residual4"};
    Emitted out;
    bool all_ok = true;
    for (double eps : epsilons) {
        PsiFunction psi(eps, horizon);
        PsiReport rep = verify_psi(psi, grid);
        t.row({eps, rep.psi0, rep.branch_residual[0], rep.branch_residual[1],
               rep.branch_residual[2], rep.branch_residual[3]});
        all_ok = all_ok && rep.ok;
        if (!rep.ok && out.message.empty()) out.message = rep.failure;
    }
    out.csv = t.str();
    out.sidecar["uniform_sup"] = uniform_sup_bound(horizon, epsilons, grid);
    out.sidecar["horizon"] = horizon;
    out.sidecar["grid"] = grid;
    out.pass = all_ok;
    (void)ctx;
    return out;
}

Emitted exec_powers(RunContext& ctx, const ExperimentEntry& e) {
    const long grid = e.params.value("grid", 6);
    const long nodes = e.params.value("contour_nodes", 400);
    auto lat = std::make_shared<FourierLattice>(ctx.cfg.dimension, int(grid));
    EllipticOperator op = assemble_operator(ctx.make_symbol(lat));
    SpectralBasis basis =
        eigendata(op, std::pow(op.spectral_ceiling(), 1.0 / op.order()) + 1.0);
    ContourSpec contour = default_contour(op, nodes);
    CsvTable t{"re", "im", "route_gap"};
    Emitted out;
    double worst = 0.0;
    for (const auto& z : e.params["exponents"]) {
        const Complex zc(z[0].get<double>(), z[1].get<double>());
        const Eigen::MatrixXcd ref = spectral_power(basis, zc).dense();
        const Eigen::MatrixXcd got = contour_power(op, zc, contour).dense();
        const double denom = std::max(ref.norm(), 1.0);
        const double gap = (got - ref).norm() / denom;
        worst = std::max(worst, gap);
        t.row({zc.real(), zc.imag(), gap});
    }
    out.csv = t.str();
    out.sidecar["contour"] = {{"vertex", contour.vertex},
                              {"half_aperture", contour.half_aperture},
                              {"radius", contour.radius},
                              {"nodes", contour.nodes}};
    out.sidecar["worst_gap"] = worst;
    out.sidecar["tolerance_gap"] = ctx.cfg.tolerances.power_gap;
    out.pass = worst <= ctx.cfg.tolerances.power_gap;
    if (!out.pass) out.message = "spectral and contour routes disagree beyond the bar";
    return out;
}

Emitted exec_product(RunContext& ctx, const ExperimentEntry& e) {
    const double lambda_max = e.params["lambda_max"].get<double>();
    const double horizon = e.params.value("horizon", 1.0);
    const long mode_cap = e.params.value("mode_cap", 8);
    std::vector<double> epsilons;
    if (e.params.contains("epsilons"))
        epsilons = e.params["epsilons"].get<std::vector<double>>();
    auto basis = ctx.basis_at(lambda_max);
    DilatedTorus torus(horizon, 0.0, int(mode_cap));
    ProductOperatorReport rep =
        product_operator_inverse(*basis, torus, ctx.cfg.nu, epsilons);
    CsvTable t{"eps", "B_eps", "C_eps", "min_joint"};
    for (std::size_t i = 0; i < rep.eps_grid.size(); ++i)
        t.row({rep.eps_grid[i], rep.B_eps[i], rep.C_eps[i], rep.min_joint[i]});
    Emitted out;
    out.csv = t.str();
    out.sidecar["B_sup"] = rep.B_sup;
    out.sidecar["C_sup"] = rep.C_sup;
    out.sidecar["floor_c"] = rep.floor_c;
    out.sidecar["bound"] = rep.bound;
    out.sidecar["multiplier_route"] = rep.multiplier_route;
    out.sidecar["tolerance_slack"] = ctx.cfg.tolerances.product_slack;
    out.pass = true;
    for (double b : rep.B_eps)
        out.pass = out.pass && b <= rep.bound + ctx.cfg.tolerances.product_slack;
    if (!out.pass) out.message = "B_eps exceeded the 1 + 1/c bound";
    return out;
}

CoefficientVector initial_datum(const json& params, long m) {
    CoefficientVector u0(m);
    if (params.contains("initial")) {
        const json& given = params["initial"];
        if (static_cast<long>(given.size()) != m) {
            std::ostringstream msg;
            msg << "initial datum has " << given.size() << " modes, the truncation needs " << m;
            throw DimensionError(msg.str());
        }
        for (long j = 0; j < m; ++j)
            u0[j] = Complex(given[j][0].get<double>(), given[j][1].get<double>());
        return u0;
    }
    for (long j = 0; j < m; ++j) u0[j] = Complex(1.0 / (1.0 + double(j)), 0.0);
    return u0;
}

Emitted exec_control(RunContext& ctx, const ExperimentEntry& e) {
    const double alpha = e.params["alpha"].get<double>();
    const double horizon = e.params["horizon"].get<double>();
    auto basis = ctx.basis_at(e.params["lambda_max"].get<double>());
    const long m = basis->size();
    ControlProblem pb(basis, alpha, horizon, ctx.sensor, initial_datum(e.params, m));
    ControlResult res = hum_control(pb);
    CsvTable t{"index", "mu", "phi_re", "phi_im"};
    for (long j = 0; j < m; ++j)
        t.row({double(j), basis->mu(j), res.phi[j].real(), res.phi[j].imag()});
    Emitted out;
    out.csv = t.str();
    out.sidecar["alpha"] = alpha;
    out.sidecar["nu"] = basis->nu();
    out.sidecar["horizon"] = horizon;
    out.sidecar["sensor"] = sensor_json(ctx.cfg);
    out.sidecar["cost"] = res.cost;
    out.sidecar["cost_quadrature"] = res.cost_quadrature;
    out.sidecar["residual"] = res.residual;
    out.sidecar["condition"] = res.condition;
    out.sidecar["tikhonov"] = res.tikhonov;
    out.sidecar["tail_decay"] = res.tail_decay;
    out.sidecar["tolerance_residual"] = ctx.cfg.tolerances.control_residual;
    out.pass = res.residual <= ctx.cfg.tolerances.control_residual;
    if (!out.pass) out.message = "terminal residual exceeded the declared bar";
    return out;
}

Emitted exec_cost_curve(RunContext& ctx, const ExperimentEntry& e) {
    const double alpha = e.params["alpha"].get<double>();
    const std::vector<double> horizons = e.params["horizons"].get<std::vector<double>>();
    auto basis = ctx.basis_at(e.params["lambda_max"].get<double>());
    const long m = basis->size();
    ControlProblem pb(basis, alpha, horizons.back(), ctx.sensor,
                      CoefficientVector::Zero(m));
    CostCurve curve = cost_curve(pb, horizons);
    CsvTable t{"T", "C_T", "flag"};
    for (const CostPoint& p : curve.points)
        t.row({p.horizon, p.cost, p.ok ? 1.0 : 0.0});
    Emitted out;
    out.csv = t.str();
    out.sidecar["alpha"] = alpha;
    out.sidecar["nu"] = basis->nu();
    out.sidecar["sensor"] = sensor_json(ctx.cfg);
    out.sidecar["fit"] = {{"C1", curve.C1},
                          {"C2", curve.C2},
                          {"beta_fit", curve.beta_fit},
                          {"beta_star", curve.beta_star},
                          {"r2", curve.fit_r2}};
    json conds = json::array();
    for (const CostPoint& p : curve.points)
        conds.push_back(std::isfinite(p.condition) ? json(p.condition) : json("inf"));
    out.sidecar["conditions"] = conds;
    out.sidecar["tolerance_slack"] = ctx.cfg.tolerances.curve_slack;
    bool monotone = true;
    double prev = std::numeric_limits<double>::infinity();
    for (const CostPoint& p : curve.points) {
        if (!p.ok) continue;
        monotone = monotone && p.cost <= prev + ctx.cfg.tolerances.curve_slack * (1.0 + prev);
        prev = p.cost;
    }
    const bool slope_ok = !std::isfinite(curve.beta_star) ||
                          (curve.beta_fit > 0.0 && curve.beta_fit <= curve.beta_star + 0.5);
    out.pass = monotone && slope_ok;
    if (!out.pass) out.message = "cost curve violated monotonicity or the fitted slope window";
    return out;
}

Emitted dispatch(RunContext& ctx, const ExperimentEntry& e, std::uint64_t seed) {
    if (e.kind == "spectra") return exec_spectra(ctx, e);
    if (e.kind == "observability") return exec_observability(ctx, e);
    if (e.kind == "doubling") return exec_doubling(ctx, e, seed);
    if (e.kind == "interpolation") return exec_interpolation(ctx, e, seed);
    if (e.kind == "psi-check") return exec_psi(ctx, e);
    if (e.kind == "powers") return exec_powers(ctx, e);
    if (e.kind == "product-bounds") return exec_product(ctx, e);
    if (e.kind == "control") return exec_control(ctx, e);
    return exec_cost_curve(ctx, e);
}

void write_file(const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << body;
    out.flush();
    if (!out) throw IoError("short write to " + path.string());
}

} // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& err) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < err.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::ostringstream msg;
        msg << origin << ": line " << line << ", column " << col << ": " << err.what();
        throw ConfigError(msg.str());
    }
    expect_object(root, origin, "$");
    check_keys(root, origin, "$",
               {"manifold", "operator", "sensor", "seed", "output", "tolerances",
                "experiments"});

    ExperimentConfig cfg;
    if (root.contains("manifold")) {
        const json& man = expect_object(root["manifold"], origin, "$.manifold");
        check_keys(man, origin, "$.manifold", {"dimension", "grid"});
        if (man.contains("dimension")) {
            cfg.dimension = int(expect_integer(man["dimension"], origin, "$.manifold.dimension"));
            if (cfg.dimension < 1 || cfg.dimension > 3)
                bad_config(origin, "$.manifold.dimension", "supported dimensions are 1..3");
        }
        if (man.contains("grid")) {
            cfg.grid = int(expect_integer(man["grid"], origin, "$.manifold.grid"));
            if (cfg.grid < 2 || cfg.grid > 512)
                bad_config(origin, "$.manifold.grid", "grid cutoff must lie in [2, 512]");
        }
    }
    if (root.contains("operator")) {
        const json& op = expect_object(root["operator"], origin, "$.operator");
        check_keys(op, origin, "$.operator", {"symbol", "nu", "shift"});
        if (op.contains("symbol")) {
            cfg.symbol = expect_string(op["symbol"], origin, "$.operator.symbol");
            if (cfg.symbol != "helmholtz" && cfg.symbol != "laplace" && cfg.symbol != "power")
                bad_config(origin, "$.operator.symbol",
                           "known symbols are helmholtz, laplace, power");
        }
        if (op.contains("nu")) {
            cfg.nu = expect_positive(op["nu"], origin, "$.operator.nu");
            if (cfg.symbol != "power" && cfg.nu != 2.0)
                bad_config(origin, "$.operator.nu",
                           "helmholtz and laplace are second order; use symbol \"power\"");
        }
        if (op.contains("shift")) {
            cfg.shift = expect_number(op["shift"], origin, "$.operator.shift");
            if (cfg.symbol == "laplace")
                bad_config(origin, "$.operator.shift", "laplace takes no shift");
            if (!(cfg.shift > 0.0)) bad_config(origin, "$.operator.shift", "must be positive");
        }
    }
    if (root.contains("sensor")) {
        const json& sens = root["sensor"];
        if (!sens.is_array() || sens.empty())
            bad_config(origin, "$.sensor", "expected a nonempty array of boxes");
        for (std::size_t i = 0; i < sens.size(); ++i) {
            const std::string path = "$.sensor[" + std::to_string(i) + "]";
            const json& box = expect_object(sens[i], origin, path);
            check_keys(box, origin, path, {"lo", "hi"});
            if (!box.contains("lo") || !box.contains("hi"))
                bad_config(origin, path, "a box needs \"lo\" and \"hi\"");
            SensorBox sb;
            for (const char* side : {"lo", "hi"}) {
                const json& arr = box[side];
                const std::string sp = path + "." + side;
                if (!arr.is_array() || arr.size() != static_cast<std::size_t>(cfg.dimension))
                    bad_config(origin, sp, "expected an array of length dimension");
                for (std::size_t d = 0; d < arr.size(); ++d)
                    (side[0] == 'l' ? sb.lo : sb.hi)
                        .push_back(expect_number(arr[d], origin,
                                                 sp + "[" + std::to_string(d) + "]"));
            }
            for (int d = 0; d < cfg.dimension; ++d)
                if (!(sb.lo[d] < sb.hi[d]))
                    bad_config(origin, path, "box sides must satisfy lo < hi");
            cfg.sensor.push_back(std::move(sb));
        }
    } else {
        SensorBox sb;
        sb.lo.assign(cfg.dimension, 0.0);
        sb.hi.assign(cfg.dimension, 0.3);
        cfg.sensor.push_back(std::move(sb));
    }
    if (root.contains("seed")) {
        if (!root["seed"].is_number_integer() || root["seed"].get<long long>() < 0)
            bad_config(origin, "$.seed", "expected a nonnegative integer");
        cfg.seed = root["seed"].get<std::uint64_t>();
    }
    if (root.contains("output"))
        cfg.output = expect_string(root["output"], origin, "$.output");
    if (root.contains("tolerances")) {
        const json& tol = expect_object(root["tolerances"], origin, "$.tolerances");
        check_keys(tol, origin, "$.tolerances",
                   {"observability_r2", "doubling_r2", "power_gap", "control_residual",
                    "curve_slack", "product_slack"});
        auto grab = [&](const char* key, double& slot) {
            if (tol.contains(key))
                slot = expect_positive(tol[key], origin, std::string("$.tolerances.") + key);
        };
        grab("observability_r2", cfg.tolerances.observability_r2);
        grab("doubling_r2", cfg.tolerances.doubling_r2);
        grab("power_gap", cfg.tolerances.power_gap);
        grab("control_residual", cfg.tolerances.control_residual);
        grab("curve_slack", cfg.tolerances.curve_slack);
        grab("product_slack", cfg.tolerances.product_slack);
    }
    if (!root.contains("experiments"))
        bad_config(origin, "$", "missing \"experiments\"");
    const json& exps = root["experiments"];
    if (!exps.is_array()) bad_config(origin, "$.experiments", "expected an array");
    for (std::size_t i = 0; i < exps.size(); ++i) {
        const std::string path = "$.experiments[" + std::to_string(i) + "]";
        const json& ej = expect_object(exps[i], origin, path);
        if (!ej.contains("kind")) bad_config(origin, path, "missing \"kind\"");
        ExperimentEntry entry;
        entry.kind = expect_string(ej["kind"], origin, path + ".kind");
        entry.name = ej.contains("name")
                         ? expect_string(ej["name"], origin, path + ".name")
                         : entry.kind;
        if (entry.name.empty() ||
            entry.name.find_first_not_of(
                "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789-_") !=
                std::string::npos)
            bad_config(origin, path + ".name",
                       "names are nonempty [A-Za-z0-9_-] (they become file names)");
        entry.params = ej;
        entry.params.erase("kind");
        entry.params.erase("name");
        validate_params(entry.kind, entry.params, cfg.dimension, origin, path);
        for (const ExperimentEntry& prev : cfg.experiments)
            if (prev.name == entry.name)
                bad_config(origin, path + ".name",
                           "duplicate experiment name \"" + entry.name +
                               "\"; give the repeats explicit names");
        cfg.experiments.push_back(std::move(entry));
    }
    cfg.digest = hex64(fnv1a64(root.dump()));
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path);
}

const std::vector<std::pair<std::string, std::string>>& experiment_catalog() {
    static const std::vector<std::pair<std::string, std::string>> catalog = {
        {"spectra", "eigenvalue table of the operator up to lambda_max"},
        {"observability", "observability constants and the exponential fit over a lambda grid"},
        {"doubling", "vanishing-order envelope of doubling ratios on a geodesic ball"},
        {"interpolation", "best interpolation exponent kappa per random packet"},
        {"psi-check", "branch regularity report of the psi regularizer over an epsilon grid"},
        {"powers", "spectral vs contour route gap for complex powers (own small grid)"},
        {"product-bounds", "inverse bounds B_eps, C_eps of the product operator on the cylinder"},
        {"control", "HUM null control: multiplier, cost, residual, condition"},
        {"cost-curve", "control cost C_T over a horizon grid with the short-time fit"},
    };
    return catalog;
}

std::string resolve_out_dir(const std::string& cli_out, const ExperimentConfig& cfg) {
    if (!cli_out.empty()) return cli_out;
    if (!cfg.output.empty()) return cfg.output;
    if (const char* env = std::getenv("SPECLAB_OUT"); env && *env) return env;
    return "speclab-out";
}

RunReport run_experiments(const ExperimentConfig& cfg, const std::string& out_dir,
                          int jobs) {
    namespace fs = std::filesystem;
    if (jobs < 1) throw DomainError("run_experiments: jobs must be >= 1");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir + ": " + ec.message());

    auto lattice = std::make_shared<FourierLattice>(cfg.dimension, cfg.grid);
    std::vector<Box> boxes;
    for (const SensorBox& b : cfg.sensor) boxes.push_back(Box{b.lo, b.hi});
    RunContext ctx(cfg, lattice, Subdomain(lattice, boxes));

    const std::size_t n = cfg.experiments.size();
    RunReport report;
    report.out_dir = out_dir;
    report.outcomes.resize(n);
    std::atomic<std::size_t> cursor{0};
    std::atomic<bool> io_trouble{false};

    auto work = [&]() {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= n) return;
            const ExperimentEntry& entry = cfg.experiments[i];
            ExperimentOutcome& out = report.outcomes[i];
            out.name = entry.name;
            out.kind = entry.kind;
            const auto t0 = std::chrono::steady_clock::now();
            try {
                Emitted emitted = dispatch(ctx, entry, mix_seed(cfg.seed, entry.name));
                emitted.sidecar["experiment"] = entry.name;
                emitted.sidecar["kind"] = entry.kind;
                emitted.sidecar["pass"] = emitted.pass;
                emitted.sidecar["params"] = entry.params;
                emitted.sidecar["seed"] = mix_seed(cfg.seed, entry.name);
                write_file(fs::path(out_dir) / (entry.name + ".csv"), emitted.csv);
                write_file(fs::path(out_dir) / (entry.name + ".json"),
                           emitted.sidecar.dump(2) + "\n");
                out.files = {entry.name + ".csv", entry.name + ".json"};
                out.ok = emitted.pass;
                out.message = emitted.message;
            } catch (const IoError& err) {
                out.ok = false;
                out.message = err.what();
                io_trouble.store(true);
            } catch (const std::exception& err) {
                out.ok = false;
                out.message = err.what();
            }
            out.seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
    };

    const int workers = int(std::min<std::size_t>(std::max(jobs, 1), std::max<std::size_t>(n, 1)));
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (std::thread& th : pool) th.join();

    json manifest;
    manifest["artifact_version"] = kArtifactVersion;
    manifest["config_digest"] = cfg.digest;
    manifest["seed"] = cfg.seed;
    json rows = json::array();
    bool all_ok = true;
    for (const ExperimentOutcome& out : report.outcomes) {
        rows.push_back({{"name", out.name},
                        {"kind", out.kind},
                        {"ok", out.ok},
                        {"seconds", out.seconds},
                        {"message", out.message},
                        {"files", out.files}});
        all_ok = all_ok && out.ok;
    }
    manifest["experiments"] = rows;
    const fs::path manifest_path = fs::path(out_dir) / "manifest.json";
    write_file(manifest_path, manifest.dump(2) + "\n");
    report.manifest_path = manifest_path.string();
    report.exit_code = io_trouble.load() ? 3 : (all_ok ? 0 : 1);
    return report;
}

} // namespace speclab
