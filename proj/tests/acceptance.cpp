// Acceptance gate for the fitting pipeline: eight numbered criteria, one
// pass/fail line each, exit code = number of failures. Statistical criteria
// run on fixed seeds so the outcome is reproducible.

#include "difftrend/fit.hpp"
#include "difftrend/forecast.hpp"
#include "difftrend/models.hpp"
#include "difftrend/onset.hpp"
#include "difftrend/series.hpp"

#include "support/oracles.hpp"
#include "support/samplers.hpp"
#include "support/tempdir.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace difftrend;
using difftrend::testing::integrate;
using difftrend::testing::invert_cdf;
using difftrend::testing::ks_uniform;
using difftrend::testing::slurp;
using difftrend::testing::TempDir;
using difftrend::testing::TestRng;

namespace {

namespace fs = std::filesystem;

std::string format_number(double x) {
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, "%.4g", x);
    return buffer;
}

double log_uniform(TestRng& rng, double lo, double hi) {
    return lo * std::exp(rng.uniform() * std::log(hi / lo));
}

double quantile(const Model& model, double mass) {
    double hi = 1.0;
    while (model.cdf(hi) < mass) hi *= 2.0;
    return invert_cdf([&](double t) { return model.cdf(t); }, mass, 0.0, hi);
}

Eigen::ArrayXd weekly_edges(std::size_t bins, double offset = 0.0) {
    Eigen::ArrayXd edges(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) edges[static_cast<long>(i)] = offset + double(i);
    return edges;
}

PreparedSeries sample_series(TestRng& rng, const Model& model, const Eigen::ArrayXd& edges,
                             long n, std::size_t offset_weeks = 0) {
    PreparedSeries out;
    out.service = "synthetic";
    out.region = "WW";
    out.onset_offset_weeks = offset_weeks;
    out.bin_edges = edges;
    out.counts = rng.multinomial(n, bin_probabilities(model, edges).probs);
    return out;
}

double median_of(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// --- criterion 1: pdf/cdf consistency and the hazard decompositions ---------

bool criterion_distributions(std::string& why) {
    TestRng rng(20240601);
    const auto families = {Family::Bass, Family::ShiftedGompertz, Family::Weibull};
    for (Family family : families) {
        for (int rep = 0; rep < 50; ++rep) {
            double theta1 = 0.0, theta2 = 0.0;
            switch (family) {
                case Family::Bass:
                    theta1 = log_uniform(rng, 1e-3, 0.05);
                    theta2 = log_uniform(rng, 0.02, 0.5);
                    break;
                case Family::ShiftedGompertz:
                    theta1 = log_uniform(rng, 0.005, 0.2);
                    theta2 = log_uniform(rng, 0.2, 25.0);
                    break;
                case Family::Weibull:
                    theta1 = log_uniform(rng, 0.5, 4.0);
                    theta2 = log_uniform(rng, 5.0, 400.0);
                    break;
            }
            const Model model(family, theta1, theta2);
            const std::string tag = std::string(family_name(family)) + "(" +
                                    format_number(theta1) + ", " + format_number(theta2) + ")";

            // quadrature of the density equals the cdf
            const double t_max = quantile(model, 0.999);
            const bool singular = family == Family::Weibull && theta1 < 1.0;
            const double a = singular ? quantile(model, 1e-3) : 0.0;
            const double integral =
                model.cdf(a) +
                integrate([&](double t) { return model.pdf(t); }, a, t_max, 1e-9);
            if (std::abs(integral - model.cdf(t_max)) > 1e-6) {
                why = tag + ": quadrature vs cdf off by " +
                      format_number(std::abs(integral - model.cdf(t_max)));
                return false;
            }

            // finite difference of the cdf equals the density
            for (double mass : {0.1, 0.5, 0.9}) {
                const double t = quantile(model, mass);
                const double h = std::max(t, 1.0) * 1e-4;
                const double fd = difftrend::testing::derivative(
                    [&](double x) { return model.cdf(x); }, t, h);
                if (std::abs(fd / model.pdf(t) - 1.0) > 1e-5) {
                    why = tag + ": cdf slope vs pdf off at t=" + format_number(t);
                    return false;
                }
            }

            // hazard decompositions
            for (double mass : {0.05, 0.3, 0.7, 0.97}) {
                const double t = quantile(model, mass);
                const double F = model.cdf(t);
                double decomposed = 0.0;
                if (family == Family::Bass)
                    decomposed = (theta1 + theta2 * F) * (1.0 - F);
                else if (family == Family::Weibull)
                    decomposed = std::pow(1.0 / theta2, theta1) * theta1 *
                                 std::pow(t, theta1 - 1.0) * (1.0 - F);
                else
                    continue;
                if (std::abs(decomposed - model.pdf(t)) > 1e-10) {
                    why = tag + ": decomposition off by " +
                          format_number(std::abs(decomposed - model.pdf(t)));
                    return false;
                }
            }
        }
    }
    return true;
}

// --- criterion 2: exponential compounding collapses to the two-rate form ----

bool criterion_compounding(std::string& why) {
    const std::pair<double, double> pairs[] = {
        {0.06, 9.0}, {0.01, 4.0}, {0.1, 20.0}, {0.03, 1.0}, {0.2, 0.5}};
    for (const auto& [beta, sigma] : pairs) {
        const BassParams linked = compound_bass_from_sg(CompoundLink(beta, sigma));
        const Model bass(Family::Bass, linked.p, linked.q);
        for (int j = 1; j <= 20; ++j) {
            const double t = quantile(bass, j / 21.0);
            const double mixed = integrate(
                [&](double eta) {
                    return Model(Family::ShiftedGompertz, beta, eta).pdf(t) *
                           std::exp(-eta / sigma) / sigma;
                },
                0.0, 60.0 * sigma, 1e-9);
            if (std::abs(mixed - bass.pdf(t)) > 1e-4) {
                why = "beta=" + format_number(beta) + " sigma=" + format_number(sigma) +
                      " t=" + format_number(t) + ": mixture off by " +
                      format_number(std::abs(mixed - bass.pdf(t)));
                return false;
            }
        }
    }
    return true;
}

// --- criterion 3: simulated-data parameter recovery -------------------------

bool criterion_recovery(std::string& why) {
    TestRng rng(20240601);
    const Eigen::ArrayXd edges = weekly_edges(300);
    struct Truth {
        Family family;
        double theta1, theta2;
    };
    for (const Truth& truth : {Truth{Family::Bass, 0.01, 0.09},
                               Truth{Family::ShiftedGompertz, 0.05, 10.0},
                               Truth{Family::Weibull, 2.0, 80.0}}) {
        const Model model(truth.family, truth.theta1, truth.theta2);
        int hits = 0;
        for (int rep = 0; rep < 200; ++rep) {
            const PreparedSeries series = sample_series(rng, model, edges, 5000);
            const FitResult result = fit(series, truth.family);
            if (result.converged &&
                std::abs(result.theta1 / truth.theta1 - 1.0) <= 0.1 &&
                std::abs(result.theta2 / truth.theta2 - 1.0) <= 0.1)
                ++hits;
        }
        if (hits < 190) {
            why = std::string(family_name(truth.family)) + ": only " + std::to_string(hits) +
                  "/200 replicates recovered both parameters within 10%";
            return false;
        }
    }
    return true;
}

// --- criterion 4: goodness-of-fit p-values are calibrated -------------------

bool criterion_calibration(std::string& why) {
    TestRng rng(20240601);
    const Eigen::ArrayXd edges = weekly_edges(300);
    const Model model(Family::Bass, 0.01, 0.09);
    std::vector<double> p_values;
    p_values.reserve(500);
    for (int rep = 0; rep < 500; ++rep) {
        const PreparedSeries series = sample_series(rng, model, edges, 5000);
        const FitResult result = fit(series, Family::Bass);
        if (!result.converged) {
            why = "replicate " + std::to_string(rep) + " did not converge";
            return false;
        }
        p_values.push_back(result.p_value);
    }
    const double ks = ks_uniform(p_values);
    if (ks >= 0.15) {
        why = "KS distance to uniform is " + format_number(ks);
        return false;
    }
    return true;
}

// --- criterion 5: truncated windows still identify the curve ----------------

bool criterion_truncation(std::string& why) {
    TestRng rng(20240601);

    // window cut at 40% of total mass, just short of the peak
    {
        const Model model(Family::ShiftedGompertz, 0.03, 8.0);
        const auto bins = static_cast<std::size_t>(std::ceil(quantile(model, 0.4)));
        const Eigen::ArrayXd edges = weekly_edges(bins);
        std::vector<double> errors;
        for (int rep = 0; rep < 100; ++rep) {
            const PreparedSeries series = sample_series(rng, model, edges, 5000);
            const FitResult result = fit(series, Family::ShiftedGompertz);
            errors.push_back(result.converged ? std::abs(result.theta1 / 0.03 - 1.0) : 1e9);
        }
        const double median = median_of(errors);
        if (median > 0.15) {
            why = "median scale error " + format_number(median) + " on the 40%-mass window";
            return false;
        }
    }

    // window starting a year into the curve's life: reconstructed onsets
    {
        const Model model(Family::Weibull, 2.0, 80.0);
        const Eigen::ArrayXd edges = weekly_edges(240, 60.0);

        // the same first-week-above-1%-of-window-peak rule, under the truth
        double true_peak = 0.0;
        for (double t = 60.0; t <= 300.0; t += 1.0) true_peak = std::max(true_peak, model.pdf(t));
        long true_onset = -1;
        for (double t = 0.0; t < 60.0; t += 1.0)
            if (100.0 * model.pdf(t) / true_peak > 1.0) {
                true_onset = std::lround(t);
                break;
            }

        int hits = 0;
        for (int rep = 0; rep < 100; ++rep) {
            const PreparedSeries series = sample_series(rng, model, edges, 5000, 60);
            const FitResult result = fit(series, Family::Weibull);
            if (!result.converged) continue;
            const PastReconstruction past = reconstruct_past(result, series);
            if (!past.implied_onset_week) continue;
            const long onset = static_cast<long>(*past.implied_onset_week);
            if (std::labs(onset - true_onset) <= 26) ++hits;
        }
        if (hits < 95) {
            why = "only " + std::to_string(hits) +
                  "/100 reconstructed onsets landed within 26 weeks of week " +
                  std::to_string(true_onset);
            return false;
        }
    }
    return true;
}

// --- criterion 6: onset detector operating point -----------------------------

bool criterion_onset(std::string& why) {
    TestRng rng(20240601);

    // null side: sparse unit blips, no sustained change, zero triggers allowed
    for (int trial = 0; trial < 1000; ++trial) {
        Eigen::ArrayXd series(104);
        for (long k = 0; k < series.size(); ++k)
            series[k] = rng.uniform() < 0.05 ? 1.0 : 0.0;
        const OnsetReport report =
            detect_onset(series, OnsetConfig::defaults_for(series));
        if (report.triggered) {
            why = "false trigger on null trial " + std::to_string(trial);
            return false;
        }
    }

    // step side: change at week 30, step 10 against noise sigma 2 (SNR 5)
    int hits = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        Eigen::ArrayXd series(60);
        for (long k = 0; k < 30; ++k) series[k] = rng.uniform() < 0.05 ? 1.0 : 0.0;
        for (long k = 30; k < 60; ++k)
            series[k] = std::max(0.0, 10.0 + 2.0 * rng.normal());
        const OnsetReport report =
            detect_onset(series, OnsetConfig::defaults_for(series));
        if (report.triggered && report.onset_index &&
            std::labs(static_cast<long>(*report.onset_index) - 30) <= 2)
            ++hits;
    }
    if (hits < 990) {
        why = "only " + std::to_string(hits) + "/1000 onsets within 2 weeks of the step";
        return false;
    }
    return true;
}

// --- criteria 7 and 8: the CLI pipeline on the bundled corpus ---------------

int run_cli(const std::string& args) {
    const std::string command = std::string(DIFFTREND_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(command.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// fit + report + forecast over data/smoke into root; returns a failure
// message or empty on success
std::string run_pipeline(const fs::path& root) {
    const fs::path smoke = fs::path(DIFFTREND_SOURCE_DIR) / "data" / "smoke";
    const fs::path results = root / "results";
    if (run_cli("fit " + (smoke / "corpus.csv").string() + " --out " + results.string() +
                " --launch-dates " + (smoke / "launch_dates.csv").string() + " --threads 4") != 0)
        return "fit exited nonzero";
    if (run_cli("report " + results.string() + " --out " + (root / "report").string() +
                " --map " + (smoke / "region_groups.csv").string()) != 0)
        return "report exited nonzero";
    if (run_cli("forecast " + results.string() + " --out " + (root / "forecast").string() +
                " --horizon-weeks 52 --best-only") != 0)
        return "forecast exited nonzero";
    return "";
}

std::map<std::string, std::string> tree_contents(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(root))
        if (entry.is_regular_file())
            files[fs::relative(entry.path(), root).string()] = slurp(entry.path());
    return files;
}

bool criterion_determinism(std::string& why) {
    // identical invocation twice, so even the path echoes in the manifests
    // must come back byte-identical
    TempDir dir;
    const fs::path root = dir / "run";
    std::string failure = run_pipeline(root);
    if (!failure.empty()) {
        why = failure;
        return false;
    }
    const auto first = tree_contents(root);
    fs::remove_all(root);
    failure = run_pipeline(root);
    if (!failure.empty()) {
        why = failure + " on the second run";
        return false;
    }
    const auto second = tree_contents(root);
    if (first.size() != second.size()) {
        why = "runs produced " + std::to_string(first.size()) + " vs " +
              std::to_string(second.size()) + " files";
        return false;
    }
    for (const auto& [path, bytes] : first) {
        const auto it = second.find(path);
        if (it == second.end()) {
            why = path + " missing from the second run";
            return false;
        }
        if (it->second != bytes) {
            why = path + " differs between runs";
            return false;
        }
    }
    return true;
}

bool criterion_goldens(std::string& why) {
    TempDir dir;
    const std::string failure = run_pipeline(dir / "run");
    if (!failure.empty()) {
        why = failure;
        return false;
    }
    const fs::path golden = fs::path(DIFFTREND_SOURCE_DIR) / "tests" / "data" / "golden";
    const fs::path run = dir / "run";

    const std::pair<fs::path, fs::path> tables[] = {
        {run / "results" / "onsets.csv", golden / "onsets.csv"},
        {run / "results" / "fits_summary.csv", golden / "fits_summary.csv"},
        {run / "report" / "gof_summary.csv", golden / "gof_summary.csv"},
        {run / "report" / "embeddings.csv", golden / "embeddings.csv"},
        {run / "report" / "adoption.csv", golden / "adoption.csv"},
    };
    for (const auto& [produced, stored] : tables) {
        if (!fs::exists(stored)) {
            why = "missing golden file " + stored.string();
            return false;
        }
        if (slurp(produced) != slurp(stored)) {
            why = produced.filename().string() + " deviates from its golden copy";
            return false;
        }
    }

    const auto produced = tree_contents(run / "forecast" / "forecasts");
    const auto stored = tree_contents(golden / "forecasts");
    if (produced.size() != stored.size() || stored.empty()) {
        why = "forecast set: " + std::to_string(produced.size()) + " files vs " +
              std::to_string(stored.size()) + " goldens";
        return false;
    }
    for (const auto& [path, bytes] : stored) {
        const auto it = produced.find(path);
        if (it == produced.end() || it->second != bytes) {
            why = "forecasts/" + path + " deviates from its golden copy";
            return false;
        }
    }
    return true;
}

}  // namespace

int main() {
    struct Criterion {
        const char* label;
        std::function<bool(std::string&)> run;
        double budget_seconds;  // 0 = unbounded
    };
    const Criterion criteria[] = {
        {"distribution correctness", criterion_distributions, 10.0},
        {"exponential compounding", criterion_compounding, 30.0},
        {"parameter recovery", criterion_recovery, 300.0},
        {"p-value calibration", criterion_calibration, 600.0},
        {"truncation robustness", criterion_truncation, 0.0},
        {"onset detection", criterion_onset, 0.0},
        {"pipeline determinism", criterion_determinism, 0.0},
        {"golden outputs", criterion_goldens, 0.0},
    };

    int failures = 0;
    int number = 0;
    for (const Criterion& criterion : criteria) {
        ++number;
        std::string why;
        const auto start = std::chrono::steady_clock::now();
        bool ok = criterion.run(why);
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (ok && criterion.budget_seconds > 0.0 && seconds > criterion.budget_seconds) {
            ok = false;
            why = "took " + format_number(seconds) + " s, budget " +
                  format_number(criterion.budget_seconds) + " s";
        }
        std::printf("[criterion %d] %s: %s (%.1f s)%s%s\n", number,
                    criterion.label, ok ? "PASS" : "FAIL", seconds,
                    why.empty() ? "" : " -- ", why.c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    std::printf("%d/8 criteria passed\n", 8 - failures);
    return failures;
}
