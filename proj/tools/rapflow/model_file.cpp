#include "model_file.hpp"

#include "rapflow/error.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace rapflow::app {

namespace {

using json = nlohmann::json;

[[noreturn]] void field_error(const std::string& field, const std::string& msg) {
    throw_input("model-file", field + ": " + msg);
}

const json* member(const json& obj, const std::string& key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

double number(const json& j, const std::string& field) {
    if (!j.is_number()) field_error(field, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) field_error(field, "expected a finite number");
    return v;
}

RowVector row_vector(const json& j, const std::string& field) {
    if (!j.is_array()) field_error(field, "expected an array of numbers");
    RowVector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = number(j[i], field + "[" + std::to_string(i) + "]");
    }
    return v;
}

// An empty array is a matrix with no rows; its column count is unknown and
// reported as 0.
Matrix matrix(const json& j, const std::string& field) {
    if (!j.is_array()) field_error(field, "expected an array of rows");
    if (j.empty()) return Matrix(0, 0);
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < j.size(); ++r) {
        const std::string rf = field + "[" + std::to_string(r) + "]";
        if (!j[r].is_array()) field_error(rf, "expected an array of numbers");
        if (j[r].size() != cols) {
            field_error(rf, "row has " + std::to_string(j[r].size()) + " entries, expected " +
                                std::to_string(cols));
        }
        for (std::size_t c = 0; c < cols; ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                number(j[r][c], rf + "[" + std::to_string(c) + "]");
        }
    }
    return m;
}

std::vector<std::size_t> sizes(const json& j, const std::string& field) {
    if (!j.is_array()) field_error(field, "expected an array of block sizes");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string f = field + "[" + std::to_string(i) + "]";
        if (!j[i].is_number_integer() || j[i].get<long long>() <= 0) {
            field_error(f, "expected a positive integer");
        }
        out.push_back(static_cast<std::size_t>(j[i].get<long long>()));
    }
    return out;
}

std::string key_name(Regime k) { return std::string(to_string(k)); }

Regime regime_field(const json& j, const std::string& field) {
    if (!j.is_string()) field_error(field, "expected a regime label");
    const auto k = parse_regime(j.get<std::string>());
    if (!k) field_error(field, "unknown regime '" + j.get<std::string>() + "'");
    return *k;
}

void check_rates(const json& doc) {
    const json* rates = member(doc, "rates");
    if (!rates) return;
    if (!rates->is_object()) field_error("rates", "expected an object keyed by regime");
    for (auto it = rates->begin(); it != rates->end(); ++it) {
        const Regime k = regime_field(json(it.key()), "rates");
        const double r = number(it.value(), "rates." + it.key());
        if (r != level_rate(k)) {
            std::ostringstream msg;
            msg << "rates." << it.key() << " = " << r << " is not supported; only unit rates "
                << "(+1, -1, 0) are accepted. Rescale the regime's matrices by 1/|rate| "
                << "(a standard time change) to obtain an equivalent unit-rate model";
            throw_input("general-rates", msg.str());
        }
    }
}

BlockStructure parse_structure(const json& doc) {
    const json* s = member(doc, "structure");
    if (!s) field_error("structure", "missing");
    if (!s->is_object()) field_error("structure", "expected an object");
    std::array<std::vector<std::size_t>, 3> blocks;
    for (Regime k : kAllRegimes) {
        if (const json* b = member(*s, key_name(k))) {
            blocks[index_of(k)] = sizes(*b, "structure." + key_name(k));
        }
    }
    return BlockStructure(blocks[0], blocks[1], blocks[2]);
}

std::string c_key(Regime k) { return "C_" + key_name(k); }
std::string d_key(Regime k, Regime l) {
    return "D_" + key_name(k) + "_" + key_name(l);
}

RapFluidModel parse_direct(const json& doc) {
    BlockStructure structure = parse_structure(doc);
    RapFluidModel::CMatrices c;
    RapFluidModel::DMatrices d;
    for (Regime k : kAllRegimes) {
        const json* cj = member(doc, c_key(k));
        if (cj) {
            c[index_of(k)] = matrix(*cj, c_key(k));
        } else if (structure.eta(k) > 0) {
            field_error(c_key(k), "missing");
        }
        for (Regime l : kAllRegimes) {
            if (l == k) continue;
            const json* dj = member(doc, d_key(k, l));
            if (dj) {
                d[index_of(k)][index_of(l)] = matrix(*dj, d_key(k, l));
            } else {
                d[index_of(k)][index_of(l)] = Matrix::Zero(structure.eta(k), structure.eta(l));
            }
        }
    }
    return RapFluidModel(std::move(structure), std::move(c), std::move(d));
}

RapFluidModel parse_mjp(const json& ctor) {
    const json* g = member(ctor, "generator");
    if (!g) field_error("constructor.generator", "missing");
    const Matrix q = matrix(*g, "constructor.generator");
    const json* rj = member(ctor, "regimes");
    if (!rj || !rj->is_array()) field_error("constructor.regimes", "expected an array of labels");
    std::vector<Regime> regimes;
    for (std::size_t i = 0; i < rj->size(); ++i) {
        regimes.push_back(regime_field((*rj)[i], "constructor.regimes[" + std::to_string(i) + "]"));
    }
    std::optional<BlockStructure> blocks;
    if (member(ctor, "structure")) blocks = parse_structure(ctor);
    return from_markov_jump(q, regimes, blocks);
}

MePhase phase(const json& j, const std::string& field) {
    if (!j.is_object()) field_error(field, "expected an object with alpha and S");
    const json* a = member(j, "alpha");
    const json* s = member(j, "S");
    if (!a) field_error(field + ".alpha", "missing");
    if (!s) field_error(field + ".S", "missing");
    return {row_vector(*a, field + ".alpha"), matrix(*s, field + ".S")};
}

RapFluidModel parse_me_renewal(const json& ctor) {
    const json* p = member(ctor, "plus");
    const json* m = member(ctor, "minus");
    if (!p) field_error("constructor.plus", "missing");
    if (!m) field_error("constructor.minus", "missing");
    const MePhase up = phase(*p, "constructor.plus");
    const MePhase down = phase(*m, "constructor.minus");
    return from_me_renewal(up.alpha, up.s, down.alpha, down.s);
}

RapFluidModel parse_markov_renewal_me(const json& ctor) {
    const json* r = member(ctor, "routing");
    const json* p = member(ctor, "phases");
    if (!r || !r->is_object()) field_error("constructor.routing", "expected an object");
    if (!p || !p->is_object()) field_error("constructor.phases", "expected an object");
    std::map<RegimePair, Matrix> routing;
    for (auto it = r->begin(); it != r->end(); ++it) {
        const std::string f = "constructor.routing." + it.key();
        const auto sep = it.key().find('_');
        if (sep == std::string::npos) field_error(f, "key must look like plus_minus");
        const Regime from = regime_field(json(it.key().substr(0, sep)), f);
        const Regime to = regime_field(json(it.key().substr(sep + 1)), f);
        routing[{from, to}] = matrix(it.value(), f);
    }
    std::map<Regime, std::vector<MePhase>> phases;
    for (auto it = p->begin(); it != p->end(); ++it) {
        const std::string f = "constructor.phases." + it.key();
        const Regime k = regime_field(json(it.key()), f);
        if (!it.value().is_array()) field_error(f, "expected an array of phases");
        for (std::size_t i = 0; i < it.value().size(); ++i) {
            phases[k].push_back(phase(it.value()[i], f + "[" + std::to_string(i) + "]"));
        }
    }
    return from_markov_renewal_me(routing, phases);
}

std::string position(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

ModelFile parse_model_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        // byte is one past the offending character
        const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
        std::string what = e.what();
        if (const auto pos = what.find("syntax error"); pos != std::string::npos) {
            what = what.substr(pos);
        }
        throw_input("parse-error", position(text, at) + ": " + what);
    }
    if (!doc.is_object()) throw_input("parse-error", "top level must be an object");

    check_rates(doc);

    std::optional<RapFluidModel> model;
    std::string kind = "direct";
    if (const json* ctor = member(doc, "constructor")) {
        if (!ctor->is_object()) field_error("constructor", "expected an object");
        const json* type = member(*ctor, "type");
        if (!type || !type->is_string()) field_error("constructor.type", "expected a string");
        kind = type->get<std::string>();
        for (const char* key : {"C_plus", "C_minus", "C_zero"}) {
            if (member(doc, key)) field_error(key, "not allowed together with a constructor");
        }
        if (kind == "mjp") {
            model.emplace(parse_mjp(*ctor));
        } else if (kind == "me_renewal") {
            model.emplace(parse_me_renewal(*ctor));
        } else if (kind == "markov_renewal_me") {
            model.emplace(parse_markov_renewal_me(*ctor));
        } else {
            field_error("constructor.type", "unknown constructor '" + kind + "'");
        }
    } else {
        model.emplace(parse_direct(doc));
    }

    std::optional<RowVector> alpha;
    if (const json* a = member(doc, "alpha")) alpha = row_vector(*a, "alpha");
    if (const json* labels = member(doc, "labels"); labels && !labels->is_object()) {
        field_error("labels", "expected an object");
    }
    return {std::move(*model), std::move(alpha), kind};
}

ModelFile parse_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_input("file-not-found", "cannot open model file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model_text(buf.str());
}

std::string fingerprint(const RapFluidModel& model) {
    std::string canon = "rapflow-model\n";
    char num[40];
    auto put_matrix = [&](const std::string& name, const Matrix& m) {
        canon += name + " " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + "\n";
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                const double v = m(r, c) == 0.0 ? 0.0 : m(r, c);
                std::snprintf(num, sizeof num, "%.17g", v);
                canon += (c ? " " : "") + std::string(num);
            }
            canon += "\n";
        }
    };
    const auto& s = model.structure();
    for (Regime k : kAllRegimes) {
        canon += "blocks " + key_name(k);
        for (auto n : s.sizes(k)) canon += " " + std::to_string(n);
        canon += "\n";
    }
    for (Regime k : kAllRegimes) {
        put_matrix(c_key(k), model.c(k));
        for (Regime l : kAllRegimes) {
            if (l != k) put_matrix(d_key(k, l), model.d(k, l));
        }
    }

    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(canon.data(), canon.size(), digest, &len, EVP_sha256(), nullptr);
    std::string hex = "sha256:";
    static const char* digits = "0123456789abcdef";
    for (unsigned int i = 0; i < len; ++i) {
        hex += digits[digest[i] >> 4];
        hex += digits[digest[i] & 0xf];
    }
    return hex;
}

}  // namespace rapflow::app
