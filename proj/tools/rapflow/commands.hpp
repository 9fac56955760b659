#pragma once

#include "model_file.hpp"
#include "report.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rapflow::app {

struct Arguments {
    std::string command;
    std::string model_path;
    std::optional<std::vector<double>> alpha;
    double tol = 1e-12;
    int max_iter = 10000;
    std::optional<double> x;
    std::optional<std::vector<double>> grid;
    std::string target;
    std::size_t paths = 10000;
    std::optional<double> horizon;
    std::optional<std::uint64_t> seed;
    double burn_in = -1.0;  // negative: 1% of the horizon
    std::size_t batches = 20;
};

enum ExitCode : int { kOk = 0, kInputFailure = 2, kNumericalFailure = 3, kUsage = 64 };

struct Outcome {
    Report report;
    int exit_code = kOk;
};

// Runs a command on an already parsed model. Library errors are caught and
// recorded in the report with the matching exit code.
Outcome run(const Arguments& args, const ModelFile& file);

}  // namespace rapflow::app
