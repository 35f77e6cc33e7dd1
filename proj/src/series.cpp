#include "difftrend/series.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include "difftrend/io.hpp"

namespace difftrend {

void to_json(nlohmann::json& j, const PreparedSeries& s) {
    j = nlohmann::json{
        {"service", s.service},
        {"region", s.region},
        {"T", s.onset_offset_weeks},
        {"bin_edges", std::vector<double>(s.bin_edges.begin(), s.bin_edges.end())},
        {"counts", std::vector<double>(s.counts.begin(), s.counts.end())},
    };
}

void from_json(const nlohmann::json& j, PreparedSeries& s) {
    j.at("service").get_to(s.service);
    j.at("region").get_to(s.region);
    s.onset_offset_weeks = j.at("T").get<std::size_t>();
    const auto edges = j.at("bin_edges").get<std::vector<double>>();
    const auto counts = j.at("counts").get<std::vector<double>>();
    if (edges.size() != counts.size() + 1)
        throw std::invalid_argument("prepared series: bin_edges must have one more entry than counts");
    for (std::size_t i = 1; i < edges.size(); ++i)
        if (!(edges[i] > edges[i - 1]))
            throw std::invalid_argument("prepared series: bin_edges must be strictly increasing");
    s.bin_edges = Eigen::Map<const Eigen::ArrayXd>(edges.data(), edges.size());
    s.counts = Eigen::Map<const Eigen::ArrayXd>(counts.data(), counts.size());
}

namespace {

[[noreturn]] void fail_at(std::size_t line_no, const std::string& what) {
    throw std::runtime_error("csv line " + std::to_string(line_no) + ": " + what);
}

double parse_value(const std::string& text, std::size_t line_no) {
    double value = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || !std::isfinite(value))
        fail_at(line_no, "bad value '" + text + "'");
    return value;
}

struct Row {
    Date date;
    double value;
    std::size_t line_no;
};

}  // namespace

std::vector<RawSeries> load_csv(const std::filesystem::path& path, const CsvSchema& schema,
                                std::vector<std::string>* warnings) {
    std::ifstream file(path);
    if (!file) throw std::runtime_error("cannot open " + path.string());

    std::string line;
    std::size_t line_no = 0;

    // Header. A completely empty file is an empty collection, not an error.
    if (!std::getline(file, line)) return {};
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_csv_line(line);
    const auto column = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            throw std::runtime_error(path.string() + ": missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t date_col = column(schema.date);
    const std::size_t service_col = column(schema.service);
    const std::size_t region_col = column(schema.region);
    const std::size_t value_col = column(schema.value);
    const std::size_t needed = 1 + std::max({date_col, service_col, region_col, value_col});

    std::map<std::pair<std::string, std::string>, std::vector<Row>> groups;
    while (std::getline(file, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() < needed) fail_at(line_no, "expected at least " + std::to_string(needed) + " fields");
        Row row;
        try {
            row.date = parse_date(fields[date_col]);
        } catch (const std::invalid_argument& err) {
            fail_at(line_no, err.what());
        }
        row.value = parse_value(fields[value_col], line_no);
        if (row.value < 0.0) fail_at(line_no, "negative value");
        if (row.value > 100.5 && warnings)
            warnings->push_back(fields[service_col] + "/" + fields[region_col] + " line " +
                                std::to_string(line_no) + ": value " + fields[value_col] +
                                " above the nominal 0-100 scale");
        row.line_no = line_no;
        groups[{fields[service_col], fields[region_col]}].push_back(row);
    }

    std::vector<RawSeries> out;
    out.reserve(groups.size());
    for (auto& [key, rows] : groups) {
        std::sort(rows.begin(), rows.end(),
                  [](const Row& a, const Row& b) { return to_days(a.date) < to_days(b.date); });
        const long first = to_days(rows.front().date);
        const long span_days = to_days(rows.back().date) - first;
        if (span_days % 7 != 0 || std::any_of(rows.begin(), rows.end(), [&](const Row& r) {
                return (to_days(r.date) - first) % 7 != 0;
            })) {
            const auto bad = std::find_if(rows.begin(), rows.end(), [&](const Row& r) {
                return (to_days(r.date) - first) % 7 != 0;
            });
            fail_at(bad->line_no, "date off the weekly grid for " + key.first + "/" + key.second);
        }

        RawSeries series;
        series.service = key.first;
        series.region = key.second;
        series.start_date = rows.front().date;
        series.values = Eigen::ArrayXd::Zero(span_days / 7 + 1);
        std::vector<bool> seen(static_cast<std::size_t>(series.values.size()), false);
        for (const Row& row : rows) {
            const auto week = static_cast<std::size_t>((to_days(row.date) - first) / 7);
            if (seen[week])
                fail_at(row.line_no, "duplicate entry for " + key.first + "/" + key.second + " on " +
                                         format_date(row.date));
            seen[week] = true;
            series.values[static_cast<Eigen::Index>(week)] = row.value;
        }
        series.zero_filled =
            static_cast<std::size_t>(std::count(seen.begin(), seen.end(), false));
        if (series.zero_filled > 0 && warnings)
            warnings->push_back(key.first + "/" + key.second + ": zero-filled " +
                                std::to_string(series.zero_filled) + " missing weeks");
        out.push_back(std::move(series));
    }
    return out;
}

RawSeries average_spellings(const std::vector<RawSeries>& variants, const std::string& canonical) {
    if (variants.empty()) throw std::invalid_argument("average_spellings: no input series");
    const RawSeries& ref = variants.front();
    Eigen::ArrayXd sum = Eigen::ArrayXd::Zero(ref.values.size());
    for (const RawSeries& s : variants) {
        if (s.region != ref.region)
            throw std::invalid_argument("average_spellings: mixed regions " + ref.region + " and " + s.region);
        if (!(s.start_date == ref.start_date) || s.values.size() != ref.values.size())
            throw std::invalid_argument("average_spellings: date ranges differ for " + s.service);
        sum += s.values;
    }
    RawSeries out;
    out.service = canonical;
    out.region = ref.region;
    out.start_date = ref.start_date;
    out.values = sum / static_cast<double>(variants.size());
    return out;
}

PreparedSeries prepare(const RawSeries& raw, const OnsetConfig& onset_cfg,
                       std::optional<Date> launch_date) {
    if (raw.values.size() < 1) throw std::invalid_argument("prepare: empty series");

    std::size_t onset_index = 0;
    std::size_t offset_weeks = 0;
    if (launch_date && to_days(*launch_date) < to_days(raw.start_date)) {
        // Already live before the observation window: no onset to find, the
        // whole window is post-onset and carries the pre-window gap T.
        const long gap_days = to_days(raw.start_date) - to_days(*launch_date);
        offset_weeks = static_cast<std::size_t>((gap_days + 3) / 7);
    } else {
        OnsetConfig cfg = onset_cfg;
        if (cfg.threshold == 0.0)  // unset: derive the per-series default
            cfg = OnsetConfig::defaults_for(raw.values, cfg.baseline_window);
        const OnsetReport report = detect_onset(raw.values, cfg);
        if (!report.triggered)
            throw std::runtime_error("no onset detected (" + raw.service + ", " + raw.region + ")");
        onset_index = *report.onset_index;
    }

    const ShiftedSeries shifted = shift_to_onset(raw.values, onset_index, offset_weeks);
    if (!(shifted.values.sum() > 0.0))
        throw std::runtime_error("series all zero after onset (" + raw.service + ", " + raw.region + ")");

    PreparedSeries prepared;
    prepared.service = raw.service;
    prepared.region = raw.region;
    prepared.onset_offset_weeks = shifted.offset_weeks;
    prepared.counts = shifted.values;
    const auto m = prepared.counts.size();
    prepared.bin_edges.resize(m + 1);
    for (Eigen::Index i = 0; i <= m; ++i)
        prepared.bin_edges[i] = static_cast<double>(offset_weeks) + static_cast<double>(i);
    return prepared;
}

}  // namespace difftrend
