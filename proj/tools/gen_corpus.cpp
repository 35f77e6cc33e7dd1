// Writes the bundled smoke corpus: a dozen synthetic weekly attention
// series with known families, onsets, and one pre-window launch, plus the
// launch-date and region-group side files. Fully deterministic for a given
// seed so the checked-in CSVs can be regenerated byte for byte.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "difftrend/dates.hpp"
#include "difftrend/io.hpp"
#include "difftrend/models.hpp"

namespace {

using namespace difftrend;

struct Rng {
    std::mt19937_64 engine;
    explicit Rng(std::uint64_t seed) : engine(seed) {}
    // (0, 1]; the raw engine is pinned by the standard, the shift keeps 53
    // uniform bits, so this reproduces everywhere.
    double uniform() { return ((engine() >> 11) + 1.0) * 0x1.0p-53; }
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }
};

struct SeriesSpec {
    std::string service;
    std::string region;
    Family family;
    double theta1;
    double theta2;
    int onset_week;             // index into the window; 0 for pre-window launches
    int launch_weeks_before;    // > 0: service went live this long before the window
    std::vector<int> spike_weeks;  // isolated pre-onset blips of height 1
};

constexpr int kWeeks = 483;
const Date kStart{2004, 1, 4};

std::vector<double> make_values(const SeriesSpec& spec, Rng& rng) {
    const Model model(spec.family, spec.theta1, spec.theta2);
    const double offset = static_cast<double>(spec.launch_weeks_before);

    std::vector<double> curve(kWeeks, 0.0);
    double peak = 0.0;
    for (int k = spec.onset_week; k < kWeeks; ++k) {
        const double t = offset + static_cast<double>(k - spec.onset_week);
        curve[k] = model.pdf(t);
        peak = std::max(peak, curve[k]);
    }

    // Purely multiplicative noise: any additive term survives rounding in the
    // deep tail and scatters spurious counts where the curve is ~zero.
    std::vector<double> values(kWeeks, 0.0);
    for (int k = spec.onset_week; k < kWeeks; ++k) {
        const double scaled = 100.0 * curve[k] / peak;
        const double v = scaled * (1.0 + 0.05 * rng.normal());
        values[k] = std::clamp(std::round(v), 0.0, 100.0);
    }
    for (int week : spec.spike_weeks) values[week] = 1.0;
    return values;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: gen_corpus OUT_DIR\n";
        return 1;
    }
    const std::filesystem::path out_dir = argv[1];
    std::filesystem::create_directories(out_dir);

    const std::vector<SeriesSpec> specs = {
        {"aurora", "WW", Family::ShiftedGompertz, 0.012, 12.0, 30, 0, {}},
        {"aurora", "US", Family::ShiftedGompertz, 0.012, 12.0, 34, 0, {}},
        {"aurora", "DE", Family::ShiftedGompertz, 0.011, 14.0, 41, 0, {}},
        {"beacon", "WW", Family::Bass, 0.002, 0.05, 60, 0, {}},
        {"beacon", "US", Family::Bass, 0.002, 0.05, 63, 0, {}},
        {"cascade", "WW", Family::Weibull, 1.8, 180.0, 12, 0, {}},
        {"cascade", "FR", Family::Weibull, 1.8, 170.0, 20, 0, {}},
        {"drift", "WW", Family::ShiftedGompertz, 0.05, 4.0, 100, 0, {20, 45, 70}},
        {"ember", "WW", Family::Bass, 0.01, 0.2, 5, 0, {}},
        {"flux", "WW", Family::Weibull, 2.5, 700.0, 0, 0, {}},
        {"garnet", "WW", Family::ShiftedGompertz, 0.02, 30.0, 150, 0, {}},
        {"harbor", "WW", Family::Weibull, 1.6, 320.0, 0, 260, {}},
    };

    Rng rng(20240601);
    std::ostringstream corpus;
    corpus << "date,service,region,value\n";
    for (const SeriesSpec& spec : specs) {
        const std::vector<double> values = make_values(spec, rng);
        for (int k = 0; k < kWeeks; ++k) {
            // Thin out interior zero weeks so ingestion's gap filling earns
            // its keep; end points always stay to anchor the window.
            if (values[k] == 0.0 && k != 0 && k != kWeeks - 1 && rng.uniform() < 0.3) continue;
            corpus << format_date(add_days(kStart, 7L * k)) << ',' << spec.service << ','
                   << spec.region << ',' << format_double(values[k]) << '\n';
        }
    }
    write_text_atomic(out_dir / "corpus.csv", corpus.str());

    std::ostringstream launches;
    launches << "service,launch_date\n";
    for (const SeriesSpec& spec : specs)
        if (spec.launch_weeks_before > 0)
            launches << spec.service << ','
                     << format_date(add_days(kStart, -7L * spec.launch_weeks_before)) << '\n';
    write_text_atomic(out_dir / "launch_dates.csv", launches.str());

    std::ostringstream groups;
    groups << "region,group\n"
           << "WW,worldwide\n"
           << "US,n-america\n"
           << "DE,europe\n"
           << "FR,europe\n";
    write_text_atomic(out_dir / "region_groups.csv", groups.str());
    return 0;
}
