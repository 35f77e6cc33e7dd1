#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace difftrend {

/// Shortest decimal form that parses back to exactly the same double
/// ("0.05", "1e-09", "260"). Keeps every CSV/JSON artifact byte-stable.
std::string format_double(double value);

/// Comma splitter for our CSV dialect (no quoting; fields must not contain
/// commas). A trailing comma yields a trailing empty field.
std::vector<std::string> split_csv_line(const std::string& line);

/// Reads a whole text file; throws std::runtime_error when unreadable.
std::string read_text(const std::filesystem::path& path);

/// Writes via a sibling temp file and rename, so readers never observe a
/// half-written artifact and reruns replace files in one step.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace difftrend
