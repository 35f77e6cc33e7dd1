#include "commands.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <vector>

#include "difftrend/analytics.hpp"
#include "difftrend/fit.hpp"
#include "difftrend/forecast.hpp"
#include "difftrend/io.hpp"
#include "difftrend/series.hpp"

namespace difftrend::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kToolVersion = "0.1.0";

std::string sanitize(const std::string& name) {
    std::string out = name;
    for (char& c : out)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-') c = '_';
    return out;
}

void warn(const std::string& message) { std::cerr << "warning: " << message << '\n'; }

struct RunConfig {
    FitConfig fit;
    OnsetConfig onset;  ///< threshold 0 keeps per-series defaults
};

void apply_config_section(const json& section, const std::string& name, RunConfig& cfg) {
    for (const auto& [key, value] : section.items()) {
        if (name == "fit") {
            if (key == "max_iterations") cfg.fit.max_iterations = value.get<int>();
            else if (key == "param_tolerance") cfg.fit.param_tolerance = value.get<double>();
            else if (key == "objective_tolerance") cfg.fit.objective_tolerance = value.get<double>();
            else if (key == "weight_floor") cfg.fit.weight_floor = value.get<double>();
            else if (key == "damping") cfg.fit.damping = value.get<double>();
            else if (key == "max_step_halvings") cfg.fit.max_step_halvings = value.get<int>();
            else throw std::runtime_error("config: unknown fit key '" + key + "'");
        } else {
            if (key == "drift") cfg.onset.drift = value.get<double>();
            else if (key == "threshold") cfg.onset.threshold = value.get<double>();
            else if (key == "baseline_window") cfg.onset.baseline_window = value.get<std::size_t>();
            else throw std::runtime_error("config: unknown onset key '" + key + "'");
        }
    }
}

RunConfig load_config(const std::optional<fs::path>& path) {
    RunConfig cfg;
    if (!path) return cfg;
    const json j = json::parse(read_text(*path));
    for (const auto& [key, value] : j.items()) {
        if (key != "fit" && key != "onset")
            throw std::runtime_error("config: unknown section '" + key + "'");
        apply_config_section(value, key, cfg);
    }
    return cfg;
}

json config_as_json(const RunConfig& cfg) {
    return json{
        {"fit",
         {{"max_iterations", cfg.fit.max_iterations},
          {"param_tolerance", cfg.fit.param_tolerance},
          {"objective_tolerance", cfg.fit.objective_tolerance},
          {"weight_floor", cfg.fit.weight_floor},
          {"damping", cfg.fit.damping},
          {"max_step_halvings", cfg.fit.max_step_halvings}}},
        {"onset",
         {{"drift", cfg.onset.drift},
          {"threshold", cfg.onset.threshold},
          {"baseline_window", cfg.onset.baseline_window}}},
    };
}

void write_manifest(const fs::path& out_dir, json manifest) {
    manifest["tool_version"] = kToolVersion;
    write_text_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

std::map<std::string, Date> read_launch_dates(const fs::path& path) {
    std::ifstream file(path);
    if (!file) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(file, line))
        throw std::runtime_error(path.string() + ": expected header 'service,launch_date'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (split_csv_line(line) != std::vector<std::string>{"service", "launch_date"})
        throw std::runtime_error(path.string() + ": expected header 'service,launch_date'");
    std::map<std::string, Date> out;
    std::size_t line_no = 1;
    while (std::getline(file, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 2)
            throw std::runtime_error(path.string() + " line " + std::to_string(line_no) +
                                     ": expected 'service,launch_date'");
        out[fields[0]] = parse_date(fields[1]);
    }
    return out;
}

std::vector<fs::path> sorted_files(const fs::path& dir, const std::string& extension) {
    std::vector<fs::path> files;
    if (!fs::is_directory(dir)) return files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == extension)
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    return files;
}

std::vector<FitRecord> read_fit_records(const fs::path& results_dir) {
    std::vector<FitRecord> records;
    for (const fs::path& file : sorted_files(results_dir / "fits", ".json"))
        records.push_back(json::parse(read_text(file)).get<FitRecord>());
    return records;
}

const char* bool_name(bool value) { return value ? "true" : "false"; }

}  // namespace

int cmd_fit(const FitArgs& args) {
    if (args.threads < 1) throw std::runtime_error("--threads must be >= 1");
    std::vector<Family> families;
    if (args.family == "all")
        families = {Family::Bass, Family::ShiftedGompertz, Family::Weibull};
    else
        families = {family_from_name(args.family)};
    const RunConfig cfg = load_config(args.config);

    std::vector<std::string> load_warnings;
    const std::vector<RawSeries> corpus = load_csv(args.input, {}, &load_warnings);
    for (const std::string& w : load_warnings) warn(w);
    const std::map<std::string, Date> launches =
        args.launch_dates ? read_launch_dates(*args.launch_dates) : std::map<std::string, Date>{};

    fs::create_directories(args.out / "prepared");
    fs::create_directories(args.out / "fits");

    struct SeriesState {
        const RawSeries* raw = nullptr;
        std::optional<std::size_t> onset_index;
        std::optional<Date> onset_date;
        bool triggered = false;
        std::optional<PreparedSeries> prepared;
    };
    std::vector<SeriesState> states(corpus.size());
    bool partial = false;

    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const RawSeries& raw = corpus[i];
        SeriesState& state = states[i];
        state.raw = &raw;
        const auto launch = launches.find(raw.service);
        std::optional<Date> launch_date;
        if (launch != launches.end()) launch_date = launch->second;

        OnsetConfig onset_cfg = cfg.onset;
        try {
            if (launch_date && to_days(*launch_date) < to_days(raw.start_date)) {
                // Pre-window launch: the window starts mid-diffusion.
                state.onset_index = 0;
                state.onset_date = raw.start_date;
                state.triggered = true;
            } else {
                if (onset_cfg.threshold == 0.0)
                    onset_cfg = OnsetConfig::defaults_for(raw.values, onset_cfg.baseline_window);
                const OnsetReport report = detect_onset(raw.values, onset_cfg);
                state.triggered = report.triggered;
                if (report.triggered) {
                    state.onset_index = report.onset_index;
                    state.onset_date =
                        add_days(raw.start_date, 7 * static_cast<long>(*report.onset_index));
                }
            }
            state.prepared = prepare(raw, onset_cfg, launch_date);
        } catch (const std::exception& err) {
            warn(raw.service + "/" + raw.region + ": " + err.what());
            state.prepared.reset();
            partial = true;
        }
        if (state.prepared) {
            const json doc = *state.prepared;
            write_text_atomic(args.out / "prepared" /
                                  (sanitize(raw.service) + "_" + sanitize(raw.region) + ".json"),
                              doc.dump(2) + "\n");
        }
    }

    // Fit jobs fan out over (prepared series) x (families); results land in
    // job order, so any thread count yields the same files.
    struct Job {
        std::size_t series;
        Family family;
    };
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < states.size(); ++i)
        if (states[i].prepared)
            for (Family family : families) jobs.push_back({i, family});

    std::vector<std::optional<FitRecord>> fitted(jobs.size());
    std::vector<std::string> fit_errors(jobs.size());
    std::atomic<std::size_t> cursor{0};
    const auto worker = [&] {
        for (;;) {
            const std::size_t j = cursor.fetch_add(1);
            if (j >= jobs.size()) return;
            const Job& job = jobs[j];
            const SeriesState& state = states[job.series];
            try {
                FitRecord record;
                record.service = state.raw->service;
                record.region = state.raw->region;
                record.result = fit(*state.prepared, job.family, cfg.fit);
                fitted[j] = std::move(record);
            } catch (const std::exception& err) {
                fit_errors[j] = err.what();
            }
        }
    };
    if (args.threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < args.threads; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    // Per-series best tags, for the summary table.
    std::map<std::size_t, std::size_t> best_job;  // series -> job index
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        if (!fitted[j]) continue;
        const auto current = best_job.find(jobs[j].series);
        if (current == best_job.end() ||
            fit_better(fitted[j]->result, fitted[current->second]->result))
            best_job[jobs[j].series] = j;
    }

    std::ostringstream summary;
    summary << "service,region,family,theta1,theta2,rss,dof,p_value,converged,truncation_mass,best\n";
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        const Job& job = jobs[j];
        const SeriesState& state = states[job.series];
        if (!fitted[j]) {
            warn(state.raw->service + "/" + state.raw->region + " (" +
                 std::string(family_name(job.family)) + "): " + fit_errors[j]);
            partial = true;
            continue;
        }
        const FitRecord& record = *fitted[j];
        if (!record.result.converged) partial = true;
        const json doc = record;
        write_text_atomic(args.out / "fits" /
                              (sanitize(record.service) + "_" + sanitize(record.region) + "_" +
                               std::string(family_name(job.family)) + ".json"),
                          doc.dump(2) + "\n");
        summary << record.service << ',' << record.region << ','
                << family_name(record.result.family) << ',' << format_double(record.result.theta1)
                << ',' << format_double(record.result.theta2) << ','
                << format_double(record.result.rss_weighted) << ',' << record.result.dof << ','
                << format_double(record.result.p_value) << ','
                << bool_name(record.result.converged) << ','
                << format_double(record.result.truncation_mass) << ','
                << bool_name(best_job.at(job.series) == j) << '\n';
    }
    write_text_atomic(args.out / "fits_summary.csv", summary.str());

    std::ostringstream onsets;
    onsets << "service,region,onset_index,onset_date,triggered\n";
    for (const SeriesState& state : states) {
        onsets << state.raw->service << ',' << state.raw->region << ',';
        if (state.onset_index) onsets << *state.onset_index;
        onsets << ',';
        if (state.onset_date) onsets << format_date(*state.onset_date);
        onsets << ',' << bool_name(state.triggered) << '\n';
    }
    write_text_atomic(args.out / "onsets.csv", onsets.str());

    json manifest{
        {"command", "fit"},
        {"input", args.input.string()},
        {"out", args.out.string()},
        {"family", args.family},
        {"config", config_as_json(cfg)},
        {"launch_dates", args.launch_dates ? json(args.launch_dates->string()) : json(nullptr)},
        {"threads", args.threads},
        {"seed", args.seed},
    };
    write_manifest(args.out, std::move(manifest));
    return partial ? 2 : 0;
}

int cmd_onset(const OnsetArgs& args) {
    if ((args.drift > 0.0) != (args.threshold > 0.0))
        throw std::runtime_error("--drift and --threshold must be given together");
    std::vector<std::string> load_warnings;
    const std::vector<RawSeries> corpus = load_csv(args.input, {}, &load_warnings);
    for (const std::string& w : load_warnings) warn(w);

    std::ostringstream out;
    out << "service,region,onset_index,onset_date,triggered\n";
    for (const RawSeries& raw : corpus) {
        OnsetConfig cfg{args.drift, args.threshold, args.window};
        if (args.threshold == 0.0) cfg = OnsetConfig::defaults_for(raw.values, args.window);
        const OnsetReport report = detect_onset(raw.values, cfg);
        out << raw.service << ',' << raw.region << ',';
        if (report.triggered) {
            out << *report.onset_index << ','
                << format_date(add_days(raw.start_date, 7 * static_cast<long>(*report.onset_index)));
        } else {
            out << ',';
        }
        out << ',' << bool_name(report.triggered) << '\n';
    }
    if (args.out)
        write_text_atomic(*args.out, out.str());
    else
        std::cout << out.str();
    return 0;
}

int cmd_report(const ReportArgs& args) {
    if (args.group_by != "region" && args.group_by != "language")
        throw std::runtime_error("--group-by must be 'region' or 'language'");
    const std::vector<FitRecord> records = read_fit_records(args.results);
    if (records.empty())
        throw std::runtime_error("no fit results under " + (args.results / "fits").string());
    const auto groups = read_region_groups(args.map);

    fs::create_directories(args.out);
    write_group_summary_csv(args.out / "gof_summary.csv", group_gof(records, groups));
    write_embeddings_csv(args.out / "embeddings.csv", embed(records, {.include_unconverged = args.include_unconverged}));

    // Onset dates come from the fit run's onsets.csv; delays need them.
    const fs::path onsets_path = args.results / "onsets.csv";
    std::ifstream onsets_file(onsets_path);
    if (!onsets_file) throw std::runtime_error("cannot open " + onsets_path.string());
    std::string line;
    if (!std::getline(onsets_file, line))
        throw std::runtime_error(onsets_path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (split_csv_line(line) !=
        std::vector<std::string>{"service", "region", "onset_index", "onset_date", "triggered"})
        throw std::runtime_error(onsets_path.string() + ": unexpected header");
    std::vector<OnsetDate> onsets;
    while (std::getline(onsets_file, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 5)
            throw std::runtime_error(onsets_path.string() + ": bad row '" + line + "'");
        if (fields[4] != "true") continue;
        onsets.push_back({fields[0], fields[1], parse_date(fields[3])});
    }
    std::vector<std::string> adoption_warnings;
    const AdoptionStats stats = adoption_stats(onsets, &adoption_warnings);
    for (const std::string& w : adoption_warnings) warn(w);
    write_rankings_csv(args.out / "adoption.csv", stats.regions);

    json manifest{
        {"command", "report"},
        {"results", args.results.string()},
        {"out", args.out.string()},
        {"map", args.map.string()},
        {"group_by", args.group_by},
        {"include_unconverged", args.include_unconverged},
    };
    write_manifest(args.out, std::move(manifest));
    return 0;
}

int cmd_forecast(const ForecastArgs& args) {
    const std::vector<FitRecord> records = read_fit_records(args.results);
    if (records.empty())
        throw std::runtime_error("no fit results under " + (args.results / "fits").string());

    std::map<std::pair<std::string, std::string>, PreparedSeries> prepared;
    for (const fs::path& file : sorted_files(args.results / "prepared", ".json")) {
        auto series = json::parse(read_text(file)).get<PreparedSeries>();
        prepared[{series.service, series.region}] = std::move(series);
    }
    if (prepared.empty()) {
        if (!args.input)
            throw std::runtime_error("no prepared series under " + args.results.string() +
                                     "; pass --input to rebuild them from the corpus CSV");
        for (const RawSeries& raw : load_csv(*args.input))
            prepared[{raw.service, raw.region}] = prepare(raw, OnsetConfig{});
    }

    // The best family per series, for --best-only.
    std::map<std::pair<std::string, std::string>, const FitRecord*> best;
    for (const FitRecord& record : records) {
        auto& slot = best[{record.service, record.region}];
        if (slot == nullptr || fit_better(record.result, slot->result)) slot = &record;
    }

    fs::create_directories(args.out / "forecasts");
    bool partial = false;
    for (const FitRecord& record : records) {
        const std::pair<std::string, std::string> key{record.service, record.region};
        if (args.best_only && best.at(key) != &record) continue;
        if (!record.result.converged && !args.force) {
            warn(record.service + "/" + record.region + " (" +
                 std::string(family_name(record.result.family)) +
                 "): not converged, skipped (use --force to emit anyway)");
            partial = true;
            continue;
        }
        const auto series = prepared.find(key);
        if (series == prepared.end()) {
            warn(record.service + "/" + record.region + ": no prepared series, skipped");
            partial = true;
            continue;
        }
        try {
            const Forecast fc =
                forecast(record.result, series->second, args.horizon_weeks, args.force);
            write_forecast_csv(args.out / "forecasts" /
                                   (sanitize(record.service) + "_" + sanitize(record.region) +
                                    "_" + std::string(family_name(record.result.family)) + ".csv"),
                               fc);
        } catch (const std::exception& err) {
            warn(record.service + "/" + record.region + ": " + err.what());
            partial = true;
        }
    }

    json manifest{
        {"command", "forecast"},
        {"results", args.results.string()},
        {"out", args.out.string()},
        {"horizon_weeks", args.horizon_weeks},
        {"best_only", args.best_only},
        {"force", args.force},
        {"input", args.input ? json(args.input->string()) : json(nullptr)},
    };
    write_manifest(args.out, std::move(manifest));
    return partial ? 2 : 0;
}

}  // namespace difftrend::cli
