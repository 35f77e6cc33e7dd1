#include "difftrend/forecast.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "difftrend/io.hpp"

namespace difftrend {

namespace {

// Largest weekly pdf value over the observed window [first edge, last edge].
double window_peak(const Model& model, double first_edge, double last_edge) {
    double peak = 0.0;
    for (double t = first_edge; t <= last_edge; t += 1.0) peak = std::max(peak, model.pdf(t));
    if (!(peak > 1e-150))
        throw std::runtime_error("forecast: fitted density is zero over the observed window");
    return peak;
}

void require_usable(const FitResult& result, bool allow_unconverged) {
    if (!result.converged && !allow_unconverged)
        throw std::invalid_argument("forecast: fit did not converge (pass allow_unconverged to override)");
}

}  // namespace

Forecast forecast(const FitResult& result, const PreparedSeries& series,
                  std::size_t horizon_weeks, bool allow_unconverged) {
    require_usable(result, allow_unconverged);
    const Model model = result.model();
    const double first_edge = series.bin_edges[0];
    const double last_edge = series.bin_edges[series.bin_edges.size() - 1];
    const double peak = window_peak(model, first_edge, last_edge);

    Forecast fc;
    fc.family = result.family;
    fc.theta1 = result.theta1;
    fc.theta2 = result.theta2;
    fc.horizon_weeks = horizon_weeks;
    fc.scale_factor = 100.0 / peak;

    // 100 * (f / peak) rather than scale_factor * f: the argmax sample then
    // lands on 100.0 exactly.
    const double end = last_edge + static_cast<double>(horizon_weeks);
    for (double t = first_edge; t <= end; t += 1.0) {
        fc.samples.push_back({t, 100.0 * (model.pdf(t) / peak)});
        if (t <= last_edge) ++fc.observed_count;
    }

    if (series.onset_offset_weeks > 0) {
        std::vector<ForecastSample> past;
        past.reserve(series.onset_offset_weeks);
        // Weibull shapes below one have no finite density at the origin;
        // their reconstruction starts one week in.
        const double start =
            result.family == Family::Weibull && result.theta1 < 1.0 ? 1.0 : 0.0;
        for (double t = start; t < first_edge; t += 1.0)
            past.push_back({t, 100.0 * (model.pdf(t) / peak)});
        fc.past_segment = std::move(past);
    }
    return fc;
}

PastReconstruction reconstruct_past(const FitResult& result, const PreparedSeries& series,
                                    bool allow_unconverged) {
    if (series.onset_offset_weeks == 0)
        throw std::invalid_argument("reconstruct_past: series has no pre-window offset");
    const Forecast fc = forecast(result, series, 0, allow_unconverged);

    PastReconstruction past;
    past.samples = *fc.past_segment;
    for (const ForecastSample& s : past.samples) {
        if (s.value > 1.0) {  // 1% of the peak, which is pinned at 100
            past.implied_onset_week = static_cast<std::size_t>(std::llround(s.week));
            break;
        }
    }
    return past;
}

void write_forecast_csv(const std::filesystem::path& path, const Forecast& fc) {
    std::ostringstream out;
    out << "week,value,segment\n";
    const auto row = [&](const ForecastSample& s, const char* segment) {
        out << static_cast<long long>(std::llround(s.week)) << ',' << format_double(s.value)
            << ',' << segment << '\n';
    };
    if (fc.past_segment)
        for (const ForecastSample& s : *fc.past_segment) row(s, "past");
    for (std::size_t i = 0; i < fc.samples.size(); ++i)
        row(fc.samples[i], i < fc.observed_count ? "observed_fit" : "forecast");
    write_text_atomic(path, out.str());
}

}  // namespace difftrend
