#pragma once

#include <string>

#include "acdc/config.hpp"

namespace acdc::cli {

// exit-code contract: 0 success, 1 config error, 2 runtime error,
// 3 theory/acceptance assertion failure
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;
inline constexpr int kExitAssertion = 3;

// Commands are callable in-process (the test suites drive them directly);
// they throw on hard errors and return the exit code otherwise.
int cmd_gen_data(const RunConfig& cfg, const std::string& out_dir);
int cmd_train(const RunConfig& cfg, const std::string& out_dir);
int cmd_run(const RunConfig& cfg, const std::string& out_dir, const std::string& mode);
int cmd_verify_theory(const RunConfig& cfg, const std::string& out_dir);
int cmd_report(const std::string& out_dir);

// argv dispatch used by the binary; maps exceptions onto the exit codes
int run_main(int argc, char** argv);

}  // namespace acdc::cli
