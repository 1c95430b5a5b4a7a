#include "qnd/csv.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "qnd/errors.hpp"

namespace qnd::csv {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(trim(cur));
    return out;
}

}  // namespace

std::vector<Row> read_rows(std::istream& in, const std::string& source_name,
                           const std::vector<std::string>& header) {
    std::vector<Row> rows;
    std::string line;
    long line_no = 0;
    bool header_pending = !header.empty();
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        Row row{line_no, split(t)};
        if (header_pending) {
            if (row.fields != header) {
                std::string want;
                for (std::size_t i = 0; i < header.size(); ++i)
                    want += (i ? "," : "") + header[i];
                throw ParseError(source_name, line_no, "expected header '" + want + "', got '" + t + "'");
            }
            header_pending = false;
            continue;
        }
        rows.push_back(std::move(row));
    }
    if (header_pending)
        throw ParseError(source_name, line_no, "missing header row");
    return rows;
}

std::vector<Row> read_file(const std::string& path, const std::vector<std::string>& header) {
    std::ifstream in(path);
    if (!in)
        throw ParseError(path + ": cannot open file");
    return read_rows(in, path, header);
}

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

namespace {

const std::string& field_at(const Row& row, std::size_t field, const std::string& source_name) {
    if (field >= row.fields.size())
        throw ParseError(source_name, row.line,
                         "missing field " + std::to_string(field + 1) + " (row has " +
                             std::to_string(row.fields.size()) + ")");
    return row.fields[field];
}

}  // namespace

double parse_double(const Row& row, std::size_t field, const std::string& source_name) {
    const std::string& s = field_at(row, field, source_name);
    if (s == "inf" || s == "+inf") return HUGE_VAL;
    if (s == "-inf") return -HUGE_VAL;
    if (s == "nan") return NAN;
    double value{};
    auto res = std::from_chars(s.data(), s.data() + s.size(), value);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ParseError(source_name, row.line, "not a number: '" + s + "'");
    return value;
}

long parse_long(const Row& row, std::size_t field, const std::string& source_name) {
    const std::string& s = field_at(row, field, source_name);
    long value{};
    auto res = std::from_chars(s.data(), s.data() + s.size(), value);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ParseError(source_name, row.line, "not an integer: '" + s + "'");
    return value;
}

std::optional<double> parse_optional_double(const Row& row, std::size_t field,
                                            const std::string& source_name) {
    if (field < row.fields.size() && row.fields[field].empty()) return std::nullopt;
    return parse_double(row, field, source_name);
}

std::string join_line(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i)
        out += (i ? "," : "") + fields[i];
    return out;
}

}
