#include "difftrend/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "difftrend/io.hpp"

namespace difftrend {

namespace {

double median_of_sorted(const std::vector<double>& sorted) {
    const std::size_t n = sorted.size();
    if (n % 2 == 1) return sorted[n / 2];
    return 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

double parse_double_field(const std::string& text, const std::string& where) {
    double value = 0.0;
    const char* begin = text.data();
    const auto [ptr, ec] = std::from_chars(begin, begin + text.size(), value);
    if (ec != std::errc() || ptr != begin + text.size())
        throw std::runtime_error(where + ": bad number '" + text + "'");
    return value;
}

}  // namespace

AdoptionStats adoption_stats(const std::vector<OnsetDate>& onsets,
                             std::vector<std::string>* warnings) {
    // Global onsets keyed by service; everything else measures against them.
    std::map<std::string, Date> global;
    for (const OnsetDate& o : onsets)
        if (o.region == "WW") global[o.service] = o.onset;

    AdoptionStats stats;
    std::map<std::string, std::vector<double>> by_region;
    for (const OnsetDate& o : onsets) {
        if (o.region == "WW") continue;
        const auto g = global.find(o.service);
        if (g == global.end()) {
            if (warnings)
                warnings->push_back(o.service + "/" + o.region +
                                    ": no worldwide onset, excluded from delays");
            continue;
        }
        AdoptionDelay delay;
        delay.service = o.service;
        delay.region = o.region;
        delay.delta_days = days_between(g->second, o.onset);
        if (delay.delta_days < 0) {
            delay.delta_days = 0;
            delay.clamped = true;
            if (warnings)
                warnings->push_back(o.service + "/" + o.region +
                                    ": regional onset precedes worldwide onset, clamped to 0");
        }
        by_region[delay.region].push_back(static_cast<double>(delay.delta_days));
        stats.delays.push_back(std::move(delay));
    }

    for (auto& [region, delays] : by_region) {
        std::sort(delays.begin(), delays.end());
        RegionDelayStats r;
        r.region = region;
        r.count = delays.size();
        r.mean_days = std::accumulate(delays.begin(), delays.end(), 0.0) /
                      static_cast<double>(delays.size());
        r.median_days = median_of_sorted(delays);
        stats.regions.push_back(std::move(r));
    }

    // Ascending ranks under each statistic, region name as tie break.
    const auto rank_by = [&](auto key, auto assign) {
        std::vector<std::size_t> order(stats.regions.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double ka = key(stats.regions[a]), kb = key(stats.regions[b]);
            if (ka != kb) return ka < kb;
            return stats.regions[a].region < stats.regions[b].region;
        });
        for (std::size_t i = 0; i < order.size(); ++i)
            assign(stats.regions[order[i]], static_cast<int>(i) + 1);
    };
    rank_by([](const RegionDelayStats& r) { return r.mean_days; },
            [](RegionDelayStats& r, int rank) { r.rank_mu = rank; });
    rank_by([](const RegionDelayStats& r) { return r.median_days; },
            [](RegionDelayStats& r, int rank) { r.rank_m = rank; });
    return stats;
}

std::vector<GroupGofSummary> group_gof(const std::vector<FitRecord>& records,
                                       const std::map<std::string, std::string>& region_group) {
    std::map<std::pair<std::string, std::string>, GroupGofSummary> cells;
    for (const FitRecord& record : records) {
        const auto mapped = region_group.find(record.region);
        const std::string group = mapped == region_group.end() ? "other" : mapped->second;
        auto& cell = cells[{group, std::string(family_name(record.result.family))}];
        cell.group = group;
        cell.family = record.result.family;
        cell.mean_p += record.result.p_value;
        if (record.result.p_value > 0.05) cell.frac_significant += 1.0;
        cell.count += 1;
    }
    std::vector<GroupGofSummary> out;
    out.reserve(cells.size());
    for (auto& [key, cell] : cells) {
        cell.mean_p /= static_cast<double>(cell.count);
        cell.frac_significant /= static_cast<double>(cell.count);
        out.push_back(std::move(cell));
    }
    return out;
}

std::vector<EmbeddingPoint> embed(const std::vector<FitRecord>& records,
                                  const EmbedOptions& options) {
    const auto scale = [](double value, bool log_axis) {
        if (!log_axis) return value;
        if (!(value > 0.0))
            throw std::domain_error("embed: log scaling needs a positive coordinate");
        return std::log10(value);
    };
    std::vector<EmbeddingPoint> points;
    points.reserve(records.size());
    for (const FitRecord& record : records) {
        if (!record.result.converged && !options.include_unconverged) continue;
        points.push_back({record.service, record.region, record.result.family,
                          scale(record.result.theta1, options.log_theta1),
                          scale(record.result.theta2, options.log_theta2)});
    }
    return points;
}

void write_embeddings_csv(const std::filesystem::path& path,
                          const std::vector<EmbeddingPoint>& points) {
    std::ostringstream out;
    out << "service,region,family,theta1,theta2\n";
    for (const EmbeddingPoint& p : points)
        out << p.service << ',' << p.region << ',' << family_name(p.family) << ','
            << format_double(p.theta1) << ',' << format_double(p.theta2) << '\n';
    write_text_atomic(path, out.str());
}

std::vector<EmbeddingPoint> read_embeddings_csv(const std::filesystem::path& path) {
    std::ifstream file(path);
    if (!file) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    const auto strip_cr = [&] {
        if (!line.empty() && line.back() == '\r') line.pop_back();
    };
    if (!std::getline(file, line))
        throw std::runtime_error(path.string() + ": not an embeddings CSV");
    strip_cr();
    if (split_csv_line(line) !=
        std::vector<std::string>{"service", "region", "family", "theta1", "theta2"})
        throw std::runtime_error(path.string() + ": not an embeddings CSV");
    std::vector<EmbeddingPoint> points;
    while (std::getline(file, line)) {
        strip_cr();
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 5)
            throw std::runtime_error(path.string() + ": expected 5 fields, got line '" + line + "'");
        points.push_back({fields[0], fields[1], family_from_name(fields[2]),
                          parse_double_field(fields[3], path.string()),
                          parse_double_field(fields[4], path.string())});
    }
    return points;
}

void write_rankings_csv(const std::filesystem::path& path,
                        const std::vector<RegionDelayStats>& regions) {
    std::ostringstream out;
    out << "region,mean_days,median_days,rank_mu,rank_m\n";
    for (const RegionDelayStats& r : regions)
        out << r.region << ',' << format_double(r.mean_days) << ','
            << format_double(r.median_days) << ',' << r.rank_mu << ',' << r.rank_m << '\n';
    write_text_atomic(path, out.str());
}

void write_group_summary_csv(const std::filesystem::path& path,
                             const std::vector<GroupGofSummary>& summaries) {
    std::ostringstream out;
    out << "group,family,mean_p,frac_sig,count\n";
    for (const GroupGofSummary& s : summaries)
        out << s.group << ',' << family_name(s.family) << ',' << format_double(s.mean_p)
            << ',' << format_double(s.frac_significant) << ',' << s.count << '\n';
    write_text_atomic(path, out.str());
}

std::map<std::string, std::string> read_region_groups(const std::filesystem::path& path) {
    std::ifstream file(path);
    if (!file) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    const auto strip_cr = [&] {
        if (!line.empty() && line.back() == '\r') line.pop_back();
    };
    if (!std::getline(file, line))
        throw std::runtime_error(path.string() + ": expected header 'region,group'");
    strip_cr();
    if (split_csv_line(line) != std::vector<std::string>{"region", "group"})
        throw std::runtime_error(path.string() + ": expected header 'region,group'");
    std::map<std::string, std::string> mapping;
    std::size_t line_no = 1;
    while (std::getline(file, line)) {
        ++line_no;
        strip_cr();
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 2)
            throw std::runtime_error(path.string() + " line " + std::to_string(line_no) +
                                     ": expected 'region,group'");
        mapping[fields[0]] = fields[1];
    }
    return mapping;
}

}  // namespace difftrend
