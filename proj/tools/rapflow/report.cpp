#include "report.hpp"

#include <cmath>
#include <cstdio>

namespace rapflow::app {

namespace {

ojson to_json(const Matrix& m, Shape shape) {
    switch (shape) {
        case Shape::Scalar: return m(0, 0);
        case Shape::Vector: {
            ojson out = ojson::array();
            for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(0, c));
            return out;
        }
        case Shape::Matrix: {
            ojson out = ojson::array();
            for (Eigen::Index r = 0; r < m.rows(); ++r) {
                ojson row = ojson::array();
                for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
                out.push_back(std::move(row));
            }
            return out;
        }
    }
    return nullptr;
}

bool is_flat(const ojson& j) {
    for (const auto& e : j) {
        if (e.is_structured()) return false;
    }
    return true;
}

void write(std::string& out, const ojson& j, int indent) {
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
    switch (j.type()) {
        case ojson::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ",\n";
                first = false;
                out += inner + ojson(it.key()).dump() + ": ";
                write(out, it.value(), indent + 1);
            }
            out += "\n" + pad + "}";
            return;
        }
        case ojson::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            if (is_flat(j)) {
                out += "[";
                for (std::size_t i = 0; i < j.size(); ++i) {
                    if (i) out += ", ";
                    write(out, j[i], indent + 1);
                }
                out += "]";
                return;
            }
            out += "[\n";
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) out += ",\n";
                out += inner;
                write(out, j[i], indent + 1);
            }
            out += "\n" + pad + "]";
            return;
        }
        case ojson::value_t::number_float: {
            const double v = j.get<double>();
            out += std::isfinite(v) ? format_double(v) : "null";
            return;
        }
        default:
            out += j.dump();
    }
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

std::string format_double(double v) {
    if (v == 0.0) v = 0.0;  // drop the sign of −0
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void Report::scalar(const std::string& name, double v) {
    results.push_back({name, Shape::Scalar, Matrix::Constant(1, 1, v), std::nullopt});
}

void Report::vector(const std::string& name, const RowVector& v) {
    results.push_back({name, Shape::Vector, Matrix(v), std::nullopt});
}

void Report::matrix(const std::string& name, const Matrix& m) {
    results.push_back({name, Shape::Matrix, m, std::nullopt});
}

void Report::estimate(const std::string& name, const SimEstimate& e, bool as_vector) {
    results.push_back({name, as_vector ? Shape::Vector : Shape::Scalar, Matrix(e.mean),
                       Matrix(e.std_error)});
}

std::string emit_json(const Report& report) {
    ojson doc = ojson::object();
    doc["command"] = report.command;
    doc["fingerprint"] = report.fingerprint;
    doc["status"] = report.error ? "error" : "ok";
    if (report.error) doc["error"] = *report.error;
    ojson results = ojson::object();
    for (const auto& r : report.results) {
        if (r.std_error) {
            results[r.name] = {{"value", to_json(r.value, r.shape)},
                               {"stderr", to_json(*r.std_error, r.shape)}};
        } else {
            results[r.name] = to_json(r.value, r.shape);
        }
    }
    doc["results"] = std::move(results);
    doc["diagnostics"] = report.diagnostics;
    doc["warnings"] = report.warnings;
    if (report.wall_time) doc["wall_time_s"] = *report.wall_time;
    std::string out;
    write(out, doc, 0);
    out += "\n";
    return out;
}

std::string emit_csv(const Report& report) {
    std::string out = "name,value,stderr\n";
    auto row = [&](const std::string& name, double v, const std::optional<double>& se) {
        out += csv_field(name) + "," + format_double(v) + "," + (se ? format_double(*se) : "") +
               "\n";
    };
    for (const auto& r : report.results) {
        for (Eigen::Index i = 0; i < r.value.rows(); ++i) {
            for (Eigen::Index j = 0; j < r.value.cols(); ++j) {
                std::string name = r.name;
                if (r.shape == Shape::Vector) name += "[" + std::to_string(j) + "]";
                if (r.shape == Shape::Matrix) {
                    name += "[" + std::to_string(i) + "][" + std::to_string(j) + "]";
                }
                std::optional<double> se;
                if (r.std_error) se = (*r.std_error)(i, j);
                row(name, r.value(i, j), se);
            }
        }
    }
    return out;
}

}  // namespace rapflow::app
