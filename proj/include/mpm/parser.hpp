#pragma once

#include <string>
#include <string_view>

#include "mpm/model.hpp"

namespace mpm {

// Parses a guarded-command model document. Throws ParseError with line and
// column on malformed input; the returned model is fully validated.
Model parse_model(std::string_view text);

// Canonical text form; parse_model(to_text(m)) reproduces m structurally.
std::string to_text(const Model& model);

}  // namespace mpm
