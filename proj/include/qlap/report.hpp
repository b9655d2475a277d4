#pragma once

#include <json.hpp>
#include <string>

#include "qlap/linalg.hpp"

namespace qlap {

// JSON text with every floating-point value printed as %.17g. Keys keep
// insertion order of nlohmann::ordered_json.
using Json = nlohmann::ordered_json;
std::string dump_json(const Json& j, int indent = 2);

Json to_json(const RMatrix& m);
Json to_json(const RVector& v);
// Real part when the imaginary part is negligible, else [re, im] pairs.
Json to_json(const CMatrix& m);

}  // namespace qlap
