#pragma once

#include <string>
#include <vector>

#include "eflab/config.hpp"

namespace eflab::pipelines {

inline constexpr int kSchemaVersion = 1;

struct RunResult {
    int exit_code = 0;  // 0 ok, 2 config error, 3 numerical failure
    std::vector<std::string> warnings;
    std::string outdir;
    std::string failed_stage;
};

RunResult run(const config::Config& cfg, const std::string& outdir_override = "");

struct VerifyResult {
    bool pass = true;
    std::vector<std::pair<std::string, bool>> checks;  // (invariant name, ok)
    std::vector<std::string> messages;
};

VerifyResult verify(const std::string& artifact_dir);

// re-emit SVG plots from stored CSV traces
int replot(const std::string& artifact_dir);

std::string list_models();

}  // namespace eflab::pipelines
