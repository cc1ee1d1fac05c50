#pragma once

#include <string>

namespace qcurv::cli {

/// assemble -> solve -> diagnostics; writes solution.csv, report.json and
/// plotdata.csv under out_dir. Exit 0 iff Converged with all hard invariants
/// passing, 1 on solver failure (report still written), 2 on bad config.
int cmd_solve(const std::string& config_path, const std::string& out_dir,
              const std::string& cache_path);

/// Named oracle suite (constants, kernel closed form, spherical oracles,
/// synthetic fits, invariant failure injections). Prints one line per check;
/// exit 0 iff all pass.
int cmd_verify(bool fast);

/// kappa sweep with the Gaussian nonexistence probe; writes probe.csv.
/// Exit 0 (exploratory), 2 on bad config.
int cmd_probe(const std::string& config_path, const std::string& out_dir);

} // namespace qcurv::cli
