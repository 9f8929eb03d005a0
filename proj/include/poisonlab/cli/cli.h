#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace poisonlab::cli {

// Parses a flat `key = value` file. Blank lines and lines starting with '#'
// are skipped; keys may use '_' or '-'. Throws Error on a line without '='
// or a repeated key.
std::map<std::string, std::string> parse_config(const std::string& text);

// Runs one invocation; `args` excludes the program name. Returns the process
// exit code: 0 on success, 1 on a runtime failure, 2 on a usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace poisonlab::cli
