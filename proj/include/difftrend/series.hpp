#pragma once

#include <Eigen/Core>

#include <json.hpp>

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "difftrend/dates.hpp"
#include "difftrend/onset.hpp"

namespace difftrend {

/// One weekly search-volume series as exported: values on a 0-100 relative
/// scale, one sample per week starting at start_date.
struct RawSeries {
    std::string service;
    std::string region;  ///< "WW" for worldwide
    Date start_date;
    Eigen::ArrayXd values;
    std::size_t zero_filled = 0;  ///< weeks absent from the file, filled with 0
};

/// Onset-shifted, binned series ready for fitting: counts y_1..y_m over
/// weekly bins [t_{i-1}, t_i) whose first edge sits at the onset offset T.
struct PreparedSeries {
    std::string service;
    std::string region;
    std::size_t onset_offset_weeks = 0;  ///< T; nonzero only for pre-window launches
    Eigen::ArrayXd bin_edges;            ///< m+1 edges, strictly increasing, in weeks
    Eigen::ArrayXd counts;               ///< m non-negative pseudo-counts

    double total() const { return counts.sum(); }
};

void to_json(nlohmann::json& j, const PreparedSeries& s);
void from_json(const nlohmann::json& j, PreparedSeries& s);

/// Column names for long-format CSV input.
struct CsvSchema {
    std::string date = "date";
    std::string service = "service";
    std::string region = "region";
    std::string value = "value";
};

/// Loads a long-format CSV (one row per service/region/week) into one
/// RawSeries per (service, region) pair, sorted by that pair. Rows may
/// arrive in any order; missing weeks inside a series are zero-filled and
/// reported through `warnings` (if given), as are values above the nominal
/// 0-100 scale. Malformed rows, duplicate (service, region, date) keys, and
/// dates off the weekly grid raise std::runtime_error with a line number.
std::vector<RawSeries> load_csv(const std::filesystem::path& path,
                                const CsvSchema& schema = {},
                                std::vector<std::string>* warnings = nullptr);

/// Pointwise mean of spelling variants of one query. All inputs must share
/// region, start date, and length; the result takes `canonical` as service.
RawSeries average_spellings(const std::vector<RawSeries>& variants,
                            const std::string& canonical);

/// Onset-shifts and bins a raw series. A launch date before the observation
/// window skips detection (the series was already live): onset is index 0
/// and T is the week gap between launch and window start. Otherwise CUSUM
/// picks the onset and T = 0; a config with threshold 0 (the default) asks
/// for OnsetConfig::defaults_for on this series. Throws std::runtime_error
/// when no onset is detected or the post-onset series is all zero.
PreparedSeries prepare(const RawSeries& raw, const OnsetConfig& onset_cfg,
                       std::optional<Date> launch_date = std::nullopt);

}  // namespace difftrend
