#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "tagspan/config.hpp"

namespace tagspan {

// Executes one CLI command against a validated config. Returns the process
// exit code: 0 on success, 1 on runtime failure, 2 on config errors.
int run_command(const std::string& command, const RunConfig& cfg, std::ostream& out,
                std::ostream& err);

// Deterministic fold assignment: seeded shuffle, then position modulo fold
// count, so folds partition the documents with sizes differing by at most 1.
std::vector<int> kfold_assignment(size_t count, int folds, uint64_t seed);

}  // namespace tagspan
