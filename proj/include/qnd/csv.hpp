#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace qnd::csv {

// One data line, split on commas. `line` is the 1-based line number in the
// source file, kept for error messages.
struct Row {
    long line = 0;
    std::vector<std::string> fields;
};

// Reads all data rows. Blank lines and lines starting with '#' are skipped;
// leading/trailing whitespace around fields is trimmed. If `header` is given,
// the first data row must match it exactly.
std::vector<Row> read_rows(std::istream& in, const std::string& source_name,
                           const std::vector<std::string>& header = {});
std::vector<Row> read_file(const std::string& path, const std::vector<std::string>& header = {});

// Shortest representation that parses back to the same double ("inf"/"nan"
// spelled out). Used by every writer so that reruns are byte-identical.
std::string format_double(double value);

double parse_double(const Row& row, std::size_t field, const std::string& source_name);
long parse_long(const Row& row, std::size_t field, const std::string& source_name);
// Empty field -> nullopt (masked value).
std::optional<double> parse_optional_double(const Row& row, std::size_t field,
                                            const std::string& source_name);

std::string join_line(const std::vector<std::string>& fields);

}
