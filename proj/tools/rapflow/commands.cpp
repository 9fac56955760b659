#include "commands.hpp"

#include "rapflow/error.hpp"
#include "rapflow/estimators.hpp"
#include "rapflow/passage.hpp"
#include "rapflow/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rapflow::app {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ojson to_ojson(const std::vector<double>& v) {
    ojson out = ojson::array();
    for (double x : v) out.push_back(x);
    return out;
}

RowVector checked_alpha(const RowVector& a, const ModelFile& file) {
    const Eigen::Index n = file.model.structure().eta(Regime::Plus);
    if (a.size() != n) {
        throw_input("dimension-mismatch", "alpha has " + std::to_string(a.size()) +
                                              " entries, Z+ has " + std::to_string(n));
    }
    if (a.size() == 0 || a.minCoeff() < -1e-12 || std::abs(a.sum() - 1.0) > 1e-10) {
        throw_input("alpha-not-normalized", "alpha must be a probability vector on Z+");
    }
    return a;
}

RowVector alpha_of(const Arguments& args, const ModelFile& file) {
    if (args.alpha) {
        return checked_alpha(Eigen::Map<const RowVector>(args.alpha->data(),
                                                         static_cast<Eigen::Index>(args.alpha->size())),
                             file);
    }
    if (file.alpha) return checked_alpha(*file.alpha, file);
    for (const auto& s : file.model.seeds()) {
        if (s.regime == Regime::Plus) return s.a;
    }
    throw_input("alpha-required", "give --alpha or an \"alpha\" entry in the model file");
}

PsiOptions psi_options(const Arguments& args) {
    PsiOptions o;
    o.tol = args.tol;
    o.max_iter = args.max_iter;
    return o;
}

double require_x(const Arguments& args) {
    if (!args.x) throw_input("missing-argument", "--x is required for " + args.command);
    return *args.x;
}

std::vector<double> grid_of(const Arguments& args) {
    if (args.grid) return *args.grid;
    return {0.0, 0.5, 1.0, 2.0, 4.0};
}

std::uint64_t require_seed(const Arguments& args) {
    if (!args.seed) throw_input("missing-seed", args.command + " needs an explicit --seed");
    return *args.seed;
}

void add_psi(Report& r, const PassageSolution& p) {
    r.matrix("psi", p.psi.psi);
    r.diagnostics["psi_iterations"] = p.psi.iterations;
    r.diagnostics["psi_residual"] = p.psi.residual;
    r.diagnostics["psi_last_step"] = p.psi.last_step;
    r.diagnostics["psi_error_estimate"] = p.psi.error_estimate;
    r.diagnostics["psi_converged"] = p.psi.converged;
    r.diagnostics["censored"] = p.psi.censored;
    if (!p.psi.converged) {
        r.warnings.push_back("Psi iteration did not converge within " +
                             std::to_string(p.psi.iterations) + " iterations");
    }
}

void add_stability(Report& r, const StabilityReport& s) {
    ojson j = ojson::object();
    j["psi_row_sum_error"] = s.psi_row_sum_error;
    j["k_abscissa"] = s.k_abscissa;
    j["k_abscissa_zero"] = s.k_abscissa_zero;
    j["u_zero_eigenvalues"] = s.u_zero_eigenvalues;
    j["recurrent"] = s.recurrent;
    j["positive_recurrent"] = s.positive_recurrent;
    j["notes"] = s.notes;
    r.diagnostics["stability"] = std::move(j);
}

void cmd_validate(Report& r, const ModelFile& file, int& code) {
    const ValidationReport v = validate(file.model);
    ojson checks = ojson::array();
    for (const auto& c : v.checks) {
        checks.push_back({{"name", c.name}, {"passed", c.passed}, {"value", c.value},
                          {"detail", c.detail}});
        if (!c.passed) r.warnings.push_back(c.name + ": " + c.detail);
    }
    r.diagnostics["checks"] = std::move(checks);
    r.diagnostics["assumptions"] = v.assumptions;
    r.diagnostics["valid"] = v.all_passed();
    if (!v.all_passed()) code = kInputFailure;
}

void cmd_psi(Report& r, const Arguments& args, const ModelFile& file, int& code) {
    const PassageSolution p = solve_passage(file.model, psi_options(args));
    add_psi(r, p);
    r.matrix("U", p.gens.u);
    r.matrix("K", p.gens.k);
    if (p.matrices.censored) {
        r.matrix("C_plus_star", p.matrices.c_plus);
        r.matrix("C_minus_star", p.matrices.c_minus);
        r.matrix("D_plus_minus_star", p.matrices.d_plus_minus);
        r.matrix("D_minus_plus_star", p.matrices.d_minus_plus);
    }
    if (!p.psi.converged) code = kNumericalFailure;
}

void cmd_first_return(Report& r, const Arguments& args, const ModelFile& file) {
    const RowVector alpha = alpha_of(args, file);
    const PassageSolution p = solve_passage(file.model, psi_options(args));
    const FirstReturn fr = first_return(alpha, p.psi);
    r.vector("first_return", fr.vector);
    r.scalar("prob", fr.prob);
    r.diagnostics["prob_in_range"] = fr.prob_in_range;
    add_psi(r, p);
}

void cmd_record(Report& r, const Arguments& args, const ModelFile& file) {
    const RowVector alpha = alpha_of(args, file);
    const double x = require_x(args);
    const PassageSolution p = solve_passage(file.model, psi_options(args));
    r.vector("record", downward_record(alpha, true, x, p.gens, p.psi));
    r.scalar("hitting_prob", level_hitting_prob(alpha, x, p.gens, p.psi));
    add_psi(r, p);
}

void cmd_hitting(Report& r, const Arguments& args, const ModelFile& file) {
    const RowVector alpha = alpha_of(args, file);
    const double x = require_x(args);
    const PassageSolution p = solve_passage(file.model, psi_options(args));
    r.scalar("hitting_prob", level_hitting_prob(alpha, x, p.gens, p.psi));
    add_psi(r, p);
}

void cmd_crossings(Report& r, const Arguments& args, const ModelFile& file) {
    const RowVector alpha = alpha_of(args, file);
    const double x = require_x(args);
    const PassageSolution p = solve_passage(file.model, psi_options(args));
    const CrossingExpectations c = crossing_expectations(alpha, x, p.gens, p.psi);
    r.vector("up", c.up);
    r.vector("down", c.down);
    add_psi(r, p);
}

RowVector bin_masses(const StationarySolution& s, const std::vector<double>& grid) {
    RowVector out(static_cast<Eigen::Index>(grid.size()) - 1);
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        out(static_cast<Eigen::Index>(i)) = density_mass(s, grid[i], grid[i + 1]).total();
    }
    return out;
}

void check_grid(const std::vector<double>& grid) {
    if (grid.size() < 2) throw_input("bad-grid", "--grid needs at least two points");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] >= 0.0) || (i > 0 && !(grid[i] > grid[i - 1]))) {
            throw_input("bad-grid", "--grid must be nonnegative and strictly increasing");
        }
    }
}

void add_stationary(Report& r, const StationarySolution& s) {
    r.scalar("c_minus", s.c_minus);
    r.vector("v0", s.v0);
    if (s.has_zero()) r.vector("boundary_zero", s.boundary_zero);
    r.scalar("density_mass", s.density_mass);
    r.scalar("total_mass", s.total_mass);
    r.scalar("normalization_residual", s.normalization_residual);
    r.scalar("c_minus_with_zero_atom", s.c_minus_with_zero_atom);
    if (std::abs(s.normalization_residual) > 1e-8) {
        r.warnings.push_back("boundary atoms plus density integrate to " +
                             format_double(s.total_mass) + ", not 1");
    }
}

void cmd_stationary(Report& r, const Arguments& args, const ModelFile& file) {
    const std::vector<double> grid = grid_of(args);
    check_grid(grid);
    StationaryOptions opts;
    opts.psi = psi_options(args);
    const StationarySolution s = stationary_solve(file.model, opts);
    add_stationary(r, s);
    r.vector("grid", Eigen::Map<const RowVector>(grid.data(), static_cast<Eigen::Index>(grid.size())));
    RowVector pi(static_cast<Eigen::Index>(grid.size()));
    bool nonnegative = true;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const StationaryDensity d = density_eval(s, grid[i]);
        pi(static_cast<Eigen::Index>(i)) = d.pi;
        nonnegative = nonnegative && d.nonnegative;
    }
    r.vector("density", pi);
    r.vector("bin_mass", bin_masses(s, grid));
    r.matrix("K", s.k());
    r.matrix("psi", s.psi());
    r.diagnostics["density_nonnegative"] = nonnegative;
    add_stability(r, s.stability);
    if (!nonnegative) r.warnings.push_back("negative density value on the grid");
}

struct Simulated {
    std::optional<PassageEstimate> passage;
    std::optional<StationaryEstimate> stationary;
    std::vector<double> grid;
};

Simulated simulate(Report& r, const Arguments& args, const ModelFile& file) {
    const std::uint64_t seed = require_seed(args);
    const RowVector alpha = alpha_of(args, file);
    Simulated out;
    ojson& d = r.diagnostics;
    if (args.target == "return" || args.target == "hitting") {
        const double x = args.target == "return" ? 0.0 : require_x(args);
        const double horizon = args.horizon ? *args.horizon : default_horizon(file.model);
        auto e = estimate_level_hitting(file.model, alpha, x, args.paths, horizon, seed);
        r.estimate("sim_prob", e.prob, false);
        r.estimate("sim_vector", e.vector, true);
        d["paths"] = args.paths;
        d["horizon"] = e.horizon;
        d["truncated"] = e.truncated;
        d["aborted"] = e.aborted;
        d["truncation_rate"] = static_cast<double>(e.truncated) / static_cast<double>(args.paths);
        for (const auto& w : e.warnings) r.warnings.push_back(w);
        out.passage = std::move(e);
    } else if (args.target == "stationary") {
        out.grid = grid_of(args);
        check_grid(out.grid);
        std::vector<double> bins = out.grid;
        const double total = args.horizon ? *args.horizon : 1e5;
        const double burn_in = args.burn_in >= 0.0 ? args.burn_in : 0.01 * total;
        auto e = estimate_stationary(file.model, alpha, total, burn_in, bins, seed, args.batches);
        r.estimate("sim_atom_minus", e.atom_minus, false);
        if (file.model.has_zero()) r.estimate("sim_atom_zero", e.atom_zero, false);
        r.estimate("sim_bin_mass", e.bins, true);
        r.estimate("sim_bin_mass_plus", e.bins_plus, true);
        r.estimate("sim_bin_mass_minus", e.bins_minus, true);
        if (file.model.has_zero()) r.estimate("sim_bin_mass_zero", e.bins_zero, true);
        d["total_time"] = total;
        d["burn_in"] = burn_in;
        d["batches"] = e.batches;
        d["jumps"] = e.jumps;
        for (const auto& w : e.warnings) r.warnings.push_back(w);
        out.stationary = std::move(e);
    } else {
        throw_input("bad-target", "--target must be return, stationary or hitting");
    }
    return out;
}

double z_score(double sim, double se, double exact) {
    if (se > 0.0) return (sim - exact) / se;
    if (std::abs(sim - exact) <= 1e-9 * std::max(1.0, std::abs(exact))) return 0.0;
    return std::copysign(kInf, sim - exact);
}

void compare_row(Report& r, ojson& zs, double& max_z, const std::string& name, double sim,
                 double se, double exact) {
    const double z = z_score(sim, se, exact);
    zs.push_back({{"name", name}, {"analytic", exact}, {"simulated", sim}, {"stderr", se},
                  {"z", z}});
    r.scalar("z_" + name, z);
    max_z = std::max(max_z, std::abs(z));
}

void cmd_compare(Report& r, const Arguments& args, const ModelFile& file) {
    const RowVector alpha = alpha_of(args, file);
    ojson zs = ojson::array();
    double max_z = 0.0;
    if (args.target == "return" || args.target == "hitting") {
        const double x = args.target == "return" ? 0.0 : require_x(args);
        const PassageSolution p = solve_passage(file.model, psi_options(args));
        const RowVector exact = downward_record(alpha, true, x, p.gens, p.psi);
        const double prob = exact.sum();
        r.scalar("analytic_prob", prob);
        r.vector("analytic_vector", exact);
        const Simulated s = simulate(r, args, file);
        const auto& e = *s.passage;
        compare_row(r, zs, max_z, "prob", e.prob.value(), e.prob.error(), prob);
        for (Eigen::Index i = 0; i < exact.size(); ++i) {
            compare_row(r, zs, max_z, "vector_" + std::to_string(i), e.vector.mean(i),
                        e.vector.std_error(i), exact(i));
        }
        r.diagnostics["psi_converged"] = p.psi.converged;
    } else if (args.target == "stationary") {
        StationaryOptions opts;
        opts.psi = psi_options(args);
        const StationarySolution sol = stationary_solve(file.model, opts);
        add_stationary(r, sol);
        const Simulated s = simulate(r, args, file);
        const auto& e = *s.stationary;
        const RowVector mass = bin_masses(sol, s.grid);
        r.vector("analytic_bin_mass", mass);
        compare_row(r, zs, max_z, "atom_minus", e.atom_minus.value(), e.atom_minus.error(),
                    sol.c_minus);
        if (sol.has_zero()) {
            compare_row(r, zs, max_z, "atom_zero", e.atom_zero.value(), e.atom_zero.error(),
                        sol.boundary_zero.sum());
        }
        for (Eigen::Index i = 0; i < mass.size(); ++i) {
            compare_row(r, zs, max_z, "bin_" + std::to_string(i), e.bins.mean(i),
                        e.bins.std_error(i), mass(i));
        }
    } else {
        throw_input("bad-target", "--target must be return, stationary or hitting");
    }
    r.scalar("max_abs_z", max_z);
    r.diagnostics["comparisons"] = std::move(zs);
    r.diagnostics["within_3_stderr"] = max_z <= 3.0;
}

ojson echo(const Arguments& a) {
    ojson j = ojson::object();
    j["name"] = a.command;
    j["model"] = a.model_path;
    if (a.alpha) j["alpha"] = to_ojson(*a.alpha);
    const bool analytic = a.command != "validate";
    if (analytic) {
        j["tol"] = a.tol;
        j["max_iter"] = a.max_iter;
    }
    if (a.x) j["x"] = *a.x;
    if (a.grid) j["grid"] = to_ojson(*a.grid);
    if (a.command == "simulate" || a.command == "compare") {
        j["target"] = a.target;
        j["paths"] = a.paths;
        if (a.horizon) j["horizon"] = *a.horizon;
        if (a.seed) j["seed"] = *a.seed;
        if (a.target == "stationary") {
            if (a.burn_in >= 0.0) j["burn_in"] = a.burn_in;
            j["batches"] = a.batches;
        }
    }
    return j;
}

}  // namespace

Outcome run(const Arguments& args, const ModelFile& file) {
    Outcome out;
    Report& r = out.report;
    r.command = echo(args);
    r.fingerprint = fingerprint(file.model);
    r.diagnostics["constructor"] = file.constructor;
    try {
        const std::string& c = args.command;
        if (c == "validate") {
            cmd_validate(r, file, out.exit_code);
        } else if (c == "psi") {
            cmd_psi(r, args, file, out.exit_code);
        } else if (c == "first-return") {
            cmd_first_return(r, args, file);
        } else if (c == "record") {
            cmd_record(r, args, file);
        } else if (c == "hitting") {
            cmd_hitting(r, args, file);
        } else if (c == "crossings") {
            cmd_crossings(r, args, file);
        } else if (c == "stationary") {
            cmd_stationary(r, args, file);
        } else if (c == "simulate") {
            simulate(r, args, file);
        } else if (c == "compare") {
            cmd_compare(r, args, file);
        } else {
            out.exit_code = kUsage;
            r.error = ojson{{"code", "unknown-command"}, {"message", c}};
        }
    } catch (const Error& e) {
        out.exit_code = e.kind() == ErrorKind::Input ? kInputFailure : kNumericalFailure;
        r.error = ojson{{"code", e.code()}, {"message", e.what()}};
    }
    return out;
}

}  // namespace rapflow::app
