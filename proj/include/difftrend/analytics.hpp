#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "difftrend/dates.hpp"
#include "difftrend/fit.hpp"

namespace difftrend {

/// Onset of one series, in calendar terms. Region "WW" marks the global
/// onset the regional delays are measured against.
struct OnsetDate {
    std::string service;
    std::string region;
    Date onset;
};

/// Delay between a service's global onset and its onset in one region.
struct AdoptionDelay {
    std::string service;
    std::string region;
    long delta_days = 0;
    bool clamped = false;  ///< regional onset predated the global one; raw delta < 0
};

struct RegionDelayStats {
    std::string region;
    double mean_days = 0.0;
    double median_days = 0.0;
    int rank_mu = 0;  ///< 1-based, ascending mean (1 = earliest adopter)
    int rank_m = 0;   ///< 1-based, ascending median
    std::size_t count = 0;
};

struct AdoptionStats {
    std::vector<AdoptionDelay> delays;       ///< one per (service, region) pair
    std::vector<RegionDelayStats> regions;   ///< sorted by region name
};

/// Per-region mean/median adoption delay in days, with ascending rankings
/// under both statistics. Services lacking a "WW" onset contribute nothing
/// (noted in `warnings`), negative raw deltas clamp to 0 and are flagged,
/// and regions left with no delays are excluded with a warning. Ranking
/// ties break on region name.
AdoptionStats adoption_stats(const std::vector<OnsetDate>& onsets,
                             std::vector<std::string>* warnings = nullptr);

struct GroupGofSummary {
    std::string group;
    Family family = Family::ShiftedGompertz;
    double mean_p = 0.0;
    double frac_significant = 0.0;  ///< share of fits with p_value > 0.05
    std::size_t count = 0;
};

/// Mean p-value and significant share per (group, family), where groups
/// come from the region map; regions missing from the map land in "other".
/// Output is sorted by group then family name.
std::vector<GroupGofSummary> group_gof(const std::vector<FitRecord>& records,
                                       const std::map<std::string, std::string>& region_group);

struct EmbeddingPoint {
    std::string service;
    std::string region;
    Family family = Family::ShiftedGompertz;
    double theta1 = 0.0;
    double theta2 = 0.0;
};

struct EmbedOptions {
    bool include_unconverged = false;
    /// Replace a coordinate with its log10 — fitted parameters span decades,
    /// so plots usually want log axes. Fitted values are strictly positive;
    /// a hand-built record with a nonpositive parameter throws
    /// std::domain_error under these flags.
    bool log_theta1 = false;
    bool log_theta2 = false;
};

/// One point per fit: the fitted parameter pair as a 2-d feature vector.
/// Non-converged fits are skipped unless options say otherwise.
std::vector<EmbeddingPoint> embed(const std::vector<FitRecord>& records,
                                  const EmbedOptions& options = {});

// Figure-ready CSV forms. Readers throw std::runtime_error on malformed
// files; writers overwrite.
void write_embeddings_csv(const std::filesystem::path& path,
                          const std::vector<EmbeddingPoint>& points);
std::vector<EmbeddingPoint> read_embeddings_csv(const std::filesystem::path& path);
void write_rankings_csv(const std::filesystem::path& path,
                        const std::vector<RegionDelayStats>& regions);
void write_group_summary_csv(const std::filesystem::path& path,
                             const std::vector<GroupGofSummary>& summaries);

/// region -> group map from a two-column CSV with header `region,group`.
std::map<std::string, std::string> read_region_groups(const std::filesystem::path& path);

}  // namespace difftrend
