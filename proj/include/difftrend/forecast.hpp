#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "difftrend/fit.hpp"

namespace difftrend {

/// One weekly point of a scaled fitted curve. Values are relative search
/// volume: the in-window maximum of the fitted curve is pinned to 100.
struct ForecastSample {
    double week = 0.0;   ///< weeks since first public occurrence (t = 0)
    double value = 0.0;  ///< 100 * pdf(week) / max in-window pdf
};

struct Forecast {
    Family family = Family::ShiftedGompertz;
    double theta1 = 0.0;
    double theta2 = 0.0;
    std::size_t horizon_weeks = 0;
    double scale_factor = 0.0;  ///< 100 / max in-window pdf
    /// Weekly samples from the first observed edge through last edge +
    /// horizon; the first observed_count of them lie inside the window.
    std::vector<ForecastSample> samples;
    std::size_t observed_count = 0;
    /// Reconstruction over [0, T); present only for series with a
    /// pre-window onset offset.
    std::optional<std::vector<ForecastSample>> past_segment;
};

/// Scales the fitted curve so its weekly maximum over the observed window
/// is exactly 100, then extends it horizon_weeks past the window (and back
/// to week 0 when the series carries an onset offset). Requires a converged
/// fit unless allow_unconverged; throws when the fitted density is
/// essentially zero on the window, and for Weibull fits with kappa < 1 when
/// the window starts at week 0 (no finite density there).
Forecast forecast(const FitResult& result, const PreparedSeries& series,
                  std::size_t horizon_weeks, bool allow_unconverged = false);

struct PastReconstruction {
    /// Weeks 0..T-1 (from week 1 for Weibull shapes below one, which have
    /// no finite density at the origin).
    std::vector<ForecastSample> samples;
    /// First week at which the scaled curve clears 1% of its peak — the
    /// model's notion of when attention started.
    std::optional<std::size_t> implied_onset_week;
};

/// The pre-window part of the scaled curve for a series observed only from
/// week T > 0 onward. Throws std::invalid_argument when T = 0.
PastReconstruction reconstruct_past(const FitResult& result, const PreparedSeries& series,
                                    bool allow_unconverged = false);

/// CSV form `week,value,segment`, segment in {past, observed_fit, forecast}.
void write_forecast_csv(const std::filesystem::path& path, const Forecast& fc);

}  // namespace difftrend
