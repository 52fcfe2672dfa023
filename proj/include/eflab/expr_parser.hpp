#pragma once

#include <map>
#include <string>

#include "eflab/scalar_field.hpp"

namespace eflab::expr {

// Parses the config expression grammar over y1..yn, xi1..xin, named
// constants, +, -, *, /, ^ (alias pow(,)), exp, sin, cos, sqrt into a
// ScalarField with exact derivatives. Also accepts x1.. as aliases for y1..
// Throws std::invalid_argument with a column-pointing message on bad input.
symbols::ScalarField parse_field(const std::string& text,
                                 const std::map<std::string, double>& constants = {});

}  // namespace eflab::expr
