#pragma once

#include "rapflow/model.hpp"

#include <optional>
#include <string>

namespace rapflow::app {

struct ModelFile {
    RapFluidModel model;
    std::optional<RowVector> alpha;
    std::string constructor;  // "direct", "mjp", "me_renewal" or "markov_renewal_me"
};

// Parse errors carry "line L, column C"; structural errors name the field.
// Both are thrown as input errors.
ModelFile parse_model_text(const std::string& text);
ModelFile parse_model_file(const std::string& path);

// SHA-256 of a canonical rendering of the model matrices (17 significant
// digits, fixed order), as "sha256:<hex>".
std::string fingerprint(const RapFluidModel& model);

}  // namespace rapflow::app
