#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <optional>

namespace difftrend {

/// Tuning for the one-sided (upward) CUSUM detector. All quantities are in
/// series units. Requires threshold > drift >= 0 and baseline_window >= 4.
struct OnsetConfig {
    double drift = 0.0;
    double threshold = 0.0;
    std::size_t baseline_window = 8;

    /// Classical h = 5 sigma operating point: drift = 0.5 sigma and
    /// threshold = 5 sigma, where sigma is the standard deviation over the
    /// first baseline_window samples, floored at one series unit (search
    /// volumes are integer-quantized, so sub-unit baseline estimates are
    /// mostly quantization noise — and a flat-zero baseline gives sigma = 0).
    static OnsetConfig defaults_for(const Eigen::ArrayXd& series,
                                    std::size_t baseline_window = 8);
};

struct OnsetReport {
    /// Change-point estimate: the last index at which the CUSUM trace was
    /// zero before crossing the threshold. Equals the 0-based index of the
    /// first post-change sample. Absent when the trace never crosses.
    std::optional<std::size_t> onset_index;
    /// S_0..S_N (length = series length + 1), S_0 = 0.
    Eigen::ArrayXd cusum_trace;
    bool triggered = false;
};

/// One-sided upward CUSUM over the series:
///   S_0 = 0,  S_k = max(0, S_{k-1} + z_k - mu - drift)
/// with mu the mean of the first baseline_window samples. Detection fires at
/// the first k with S_k >= threshold; the reported onset is the most recent
/// zero of the trace before that point, not the detection time itself.
OnsetReport detect_onset(const Eigen::ArrayXd& series, const OnsetConfig& config);

/// Post-onset tail of a series plus the time offset its first sample carries.
struct ShiftedSeries {
    Eigen::ArrayXd values;
    /// Weeks of unobserved history before values[0]; downstream bin edges
    /// start at this offset. 0 for onsets inside the observation window.
    std::size_t offset_weeks = 0;
};

/// Drops everything before onset_index and annotates the result with
/// pre_period_weeks (the gap between true first occurrence and the first
/// retained sample). Throws std::out_of_range if onset_index is past the end.
ShiftedSeries shift_to_onset(const Eigen::ArrayXd& series, std::size_t onset_index,
                             std::size_t pre_period_weeks = 0);

}  // namespace difftrend
