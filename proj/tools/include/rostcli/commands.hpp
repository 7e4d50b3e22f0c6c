#pragma once

#include "rostcli/config.hpp"
#include "rostcli/output.hpp"

namespace rostcli {

// Each command validates its configuration, runs, and appends records and
// summary rows to `out`; the return value echoes every effective parameter
// for the run manifest. Validation failures throw rost::ValidationError
// before anything is written.
Json cmd_sample(const RunOptions& opt, RunWriter& out);
Json cmd_evolve(const RunOptions& opt, RunWriter& out);
Json cmd_qs_test(const RunOptions& opt, RunWriter& out);
Json cmd_velocity(const RunOptions& opt, RunWriter& out);
Json cmd_counterexample(const RunOptions& opt, RunWriter& out);
Json cmd_coalescent(const RunOptions& opt, RunWriter& out);
Json cmd_continuity(const RunOptions& opt, RunWriter& out);

// Re-renders summary.csv from the records directory of a previous run and
// returns true when every stored verdict passes.
bool cmd_report(const RunOptions& opt);

}  // namespace rostcli
