#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace synthval {

// Runs one subcommand (impute, impute-compare, generate, evaluate, fit-upca,
// score, experiment). Returns 0 on success, 2 on a usage error and 1 when a
// stage fails; failures print {"error": {"type", "message"}} to `err`.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace synthval
