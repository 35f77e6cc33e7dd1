#include "difftrend/onset.hpp"

#include <cmath>
#include <stdexcept>

namespace difftrend {

OnsetConfig OnsetConfig::defaults_for(const Eigen::ArrayXd& series,
                                      std::size_t baseline_window) {
    if (series.size() < static_cast<Eigen::Index>(baseline_window))
        throw std::invalid_argument("onset: series shorter than baseline window");
    const auto head = series.head(baseline_window);
    const double mean = head.mean();
    const double var = (head - mean).square().sum() / static_cast<double>(baseline_window);
    const double sigma = std::max(std::sqrt(var), 1.0);
    return {.drift = 0.5 * sigma, .threshold = 5.0 * sigma, .baseline_window = baseline_window};
}

OnsetReport detect_onset(const Eigen::ArrayXd& series, const OnsetConfig& config) {
    if (config.baseline_window < 4)
        throw std::invalid_argument("onset: baseline_window must be >= 4");
    if (!(config.drift >= 0.0) || !(config.threshold > config.drift))
        throw std::invalid_argument("onset: need threshold > drift >= 0");
    const auto n = series.size();
    if (n < static_cast<Eigen::Index>(config.baseline_window))
        throw std::invalid_argument("onset: series shorter than baseline window");

    const double mu = series.head(config.baseline_window).mean();

    OnsetReport report;
    report.cusum_trace.resize(n + 1);
    report.cusum_trace[0] = 0.0;
    std::size_t last_zero = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
        const double s = std::max(0.0, report.cusum_trace[k] + series[k] - mu - config.drift);
        report.cusum_trace[k + 1] = s;
        if (!report.triggered) {
            if (s == 0.0) last_zero = static_cast<std::size_t>(k) + 1;
            if (s >= config.threshold) {
                report.triggered = true;
                report.onset_index = last_zero;
            }
        }
    }
    return report;
}

ShiftedSeries shift_to_onset(const Eigen::ArrayXd& series, std::size_t onset_index,
                             std::size_t pre_period_weeks) {
    if (onset_index >= static_cast<std::size_t>(series.size()))
        throw std::out_of_range("shift_to_onset: onset index past end of series");
    ShiftedSeries out;
    out.values = series.tail(series.size() - static_cast<Eigen::Index>(onset_index));
    out.offset_weeks = pre_period_weeks;
    return out;
}

}  // namespace difftrend
