#pragma once

#include "rapflow/estimators.hpp"
#include "rapflow/linalg.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace rapflow::app {

using ojson = nlohmann::ordered_json;

enum class Shape { Scalar, Vector, Matrix };

struct Result {
    std::string name;
    Shape shape = Shape::Scalar;
    Matrix value;
    std::optional<Matrix> std_error;
};

struct Report {
    ojson command = ojson::object();
    std::string fingerprint;
    std::vector<Result> results;
    ojson diagnostics = ojson::object();
    std::vector<std::string> warnings;
    std::optional<ojson> error;
    std::optional<double> wall_time;

    void scalar(const std::string& name, double v);
    void vector(const std::string& name, const RowVector& v);
    void matrix(const std::string& name, const Matrix& m);
    void estimate(const std::string& name, const SimEstimate& e, bool as_vector);
};

// Floats are written with 17 significant digits; key order is insertion
// order.
std::string emit_json(const Report& report);

// One row per scalar: name,value,stderr. Vectors and matrices are flattened
// as name[i] and name[i][j].
std::string emit_csv(const Report& report);

std::string format_double(double v);

}  // namespace rapflow::app
