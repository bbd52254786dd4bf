#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "npp/bodies.hpp"

namespace npp {

// Exit codes: 0 pass, 2 certified failure, 1 usage or input error.
constexpr int kExitPass = 0;
constexpr int kExitInputError = 1;
constexpr int kExitCertifiedFail = 2;

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Parses a JSON file; syntax errors report "path:line:column".
nlohmann::json read_json_file(const std::string& path);

// A single token without '=' is a JSON file path, anything else is shorthand.
GaugeBody load_body(const std::vector<std::string>& tokens);

// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

}  // namespace npp
