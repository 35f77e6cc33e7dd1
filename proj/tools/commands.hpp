#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>

namespace difftrend::cli {

struct FitArgs {
    std::filesystem::path input;
    std::filesystem::path out;
    std::string family = "all";  ///< bass | sg | weibull | all
    std::optional<std::filesystem::path> config;
    std::optional<std::filesystem::path> launch_dates;
    int threads = 1;
    long seed = 0;  ///< recorded in the manifest; fitting itself draws nothing
};

struct OnsetArgs {
    std::filesystem::path input;
    std::optional<std::filesystem::path> out;  ///< stdout when absent
    double drift = 0.0;      ///< 0 pair = per-series defaults
    double threshold = 0.0;
    std::size_t window = 8;
};

struct ReportArgs {
    std::filesystem::path results;
    std::filesystem::path out;
    std::filesystem::path map;
    std::string group_by = "region";  ///< label for what the map clusters by
    bool include_unconverged = false;
};

struct ForecastArgs {
    std::filesystem::path results;
    std::filesystem::path out;
    std::size_t horizon_weeks = 0;
    bool best_only = false;
    bool force = false;  ///< forecast non-converged fits too
    std::optional<std::filesystem::path> input;  ///< CSV fallback when the
                                                 ///< results dir lacks prepared series
};

// Exit codes: 0 success, 1 hard error, 2 partial (some series skipped or
// some fits unconverged). Hard errors are thrown and turned into exit 1 by
// main().
int cmd_fit(const FitArgs& args);
int cmd_onset(const OnsetArgs& args);
int cmd_report(const ReportArgs& args);
int cmd_forecast(const ForecastArgs& args);

}  // namespace difftrend::cli
