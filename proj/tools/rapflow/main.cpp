#include "commands.hpp"
#include "model_file.hpp"
#include "report.hpp"

#include "rapflow/error.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>

using rapflow::app::Arguments;

namespace {

struct Flags {
    std::vector<double> alpha;
    std::vector<double> grid;
    double x = 0.0;
    double horizon = 0.0;
    std::uint64_t seed = 0;
    std::string format = "json";
    bool timing = false;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rational-arrival fluid flow solver and simulator"};
    app.require_subcommand(1);
    app.fallthrough();

    Arguments args;
    Flags flags;
    app.add_option("--format", flags.format, "Report format")
        ->check(CLI::IsMember({"json", "csv"}));
    app.add_flag("--timing", flags.timing, "Include wall time in the report");

    auto add = [&](const std::string& name, const std::string& help) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("model", args.model_path, "Model file")->required();
        return sub;
    };
    auto analytic = [&](CLI::App* sub) {
        sub->add_option("--tol", args.tol, "Psi iteration tolerance")->check(CLI::NonNegativeNumber);
        sub->add_option("--max-iter", args.max_iter, "Psi iteration cap")->check(CLI::PositiveNumber);
    };
    auto alpha = [&](CLI::App* sub) {
        sub->add_option("--alpha", flags.alpha, "Initial orbit point in Z+ (comma separated)")
            ->delimiter(',');
    };
    auto level = [&](CLI::App* sub, bool required) {
        auto* o = sub->add_option("--x", flags.x, "Level x >= 0");
        if (required) o->required();
    };
    auto grid = [&](CLI::App* sub) {
        sub->add_option("--grid", flags.grid, "Level grid (comma separated)")->delimiter(',');
    };

    add("validate", "Check model conditions");
    auto* psi = add("psi", "First-return matrix Psi");
    analytic(psi);
    auto* fr = add("first-return", "alpha Psi");
    analytic(fr);
    alpha(fr);
    for (const char* name : {"record", "hitting", "crossings"}) {
        auto* sub = add(name, name == std::string("record")      ? "Downward record at level -x"
                              : name == std::string("hitting") ? "Probability of reaching -x"
                                                               : "Expected crossings of x");
        analytic(sub);
        alpha(sub);
        level(sub, true);
    }
    auto* st = add("stationary", "Stationary distribution of the regulated queue");
    analytic(st);
    grid(st);
    for (const char* name : {"simulate", "compare"}) {
        auto* sub = add(name, name == std::string("simulate") ? "Monte Carlo estimate"
                                                              : "Analytic value against simulation");
        analytic(sub);
        alpha(sub);
        level(sub, false);
        grid(sub);
        sub->add_option("--target", args.target, "Quantity to simulate")
            ->required()
            ->check(CLI::IsMember({"return", "stationary", "hitting"}));
        sub->add_option("--paths", args.paths, "Number of paths")->check(CLI::PositiveNumber);
        sub->add_option("--horizon", flags.horizon, "Path horizon, or total time for stationary")
            ->check(CLI::PositiveNumber);
        sub->add_option("--seed", flags.seed, "Master seed")->required();
        sub->add_option("--burn-in", args.burn_in, "Burn-in time for stationary")
            ->check(CLI::NonNegativeNumber);
        sub->add_option("--batches", args.batches, "Batch count for stationary (>= 20)")
            ->check(CLI::Range(20, 1000000));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "rapflow: " << e.what() << "\n\n" << app.help();
        return rapflow::app::kUsage;
    }

    CLI::App* sub = app.get_subcommands().front();
    args.command = sub->get_name();
    auto given = [&](const char* opt) {
        const CLI::Option* o = sub->get_option_no_throw(opt);
        return o && o->count() > 0;
    };
    if (given("--alpha")) args.alpha = flags.alpha;
    if (given("--grid")) args.grid = flags.grid;
    if (given("--x")) args.x = flags.x;
    if (given("--horizon")) args.horizon = flags.horizon;
    if (given("--seed")) args.seed = flags.seed;

    const auto start = std::chrono::steady_clock::now();
    rapflow::app::ModelFile file = [&]() -> rapflow::app::ModelFile {
        try {
            return rapflow::app::parse_model_file(args.model_path);
        } catch (const rapflow::Error& e) {
            std::cerr << "rapflow: " << e.what() << "\n";
            std::exit(e.kind() == rapflow::ErrorKind::Input ? rapflow::app::kInputFailure
                                                            : rapflow::app::kNumericalFailure);
        }
    }();

    rapflow::app::Outcome out = rapflow::app::run(args, file);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (flags.timing) out.report.wall_time = elapsed;

    const std::string text = flags.format == "csv" ? rapflow::app::emit_csv(out.report)
                                                   : rapflow::app::emit_json(out.report);
    std::fwrite(text.data(), 1, text.size(), stdout);

    for (const auto& w : out.report.warnings) std::cerr << "rapflow: warning: " << w << "\n";
    if (out.report.error) {
        std::cerr << "rapflow: " << (*out.report.error)["message"].get<std::string>() << "\n";
    }
    std::fprintf(stderr, "rapflow: %s finished in %.3f s\n", args.command.c_str(), elapsed);
    return out.exit_code;
}
