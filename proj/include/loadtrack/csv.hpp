#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "loadtrack/error.hpp"

namespace loadtrack {

// Shortest round-trip formatting: parsing the emitted text recovers the
// exact double, which is what keeps file-based pipeline stages bit-equal
// to the in-memory path.
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// Fixed one-decimal form used for the 0.1 s timestamp grid.
inline std::string format_time(double t) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", t);
    return std::string(buf);
}

inline double parse_double(std::string_view s, const std::string& context) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        fail(ErrorCode::data_error, "bad numeric value '" + std::string(s) + "' in " + context);
    return v;
}

inline long parse_long(std::string_view s, const std::string& context) {
    long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        fail(ErrorCode::data_error, "bad integer value '" + std::string(s) + "' in " + context);
    return v;
}

namespace csv {

inline std::vector<std::string> split_row(const std::string& line, char delim = ',') {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(delim, start);
        if (pos == std::string::npos) {
            out.emplace_back(line.substr(start));
            break;
        }
        out.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().pop_back();
    return out;
}

// Header-checked row reader over a delimited text file. No quoting: the
// formats defined here never embed delimiters in fields.
class Reader {
public:
    Reader(const std::string& path, const std::vector<std::string>& expected_header)
        : path_(path), in_(path) {
        if (!in_) fail(ErrorCode::missing_file, "cannot open file: " + path);
        std::string line;
        if (!std::getline(in_, line))
            fail(ErrorCode::schema_mismatch, path + ": empty file, expected header row");
        header_ = split_row(line);
        line_no_ = 1;
        if (header_ != expected_header) {
            std::ostringstream os;
            os << path << ": unexpected header; expected ";
            for (std::size_t i = 0; i < expected_header.size(); ++i)
                os << (i ? "," : "") << expected_header[i];
            os << " got ";
            for (std::size_t i = 0; i < header_.size(); ++i) os << (i ? "," : "") << header_[i];
            fail(ErrorCode::schema_mismatch, os.str());
        }
    }

    // Returns false at end of file; rows must have exactly the header arity.
    bool next(std::vector<std::string>& row) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            if (line.empty() || line == "\r") continue;
            row = split_row(line);
            if (row.size() != header_.size())
                fail(ErrorCode::data_error, path_ + ":" + std::to_string(line_no_) +
                                                ": expected " + std::to_string(header_.size()) +
                                                " fields, got " + std::to_string(row.size()));
            return true;
        }
        return false;
    }

    std::size_t line_no() const { return line_no_; }
    std::string location() const { return path_ + ":" + std::to_string(line_no_); }

private:
    std::string path_;
    std::ifstream in_;
    std::vector<std::string> header_;
    std::size_t line_no_ = 0;
};

class Writer {
public:
    Writer(const std::string& path, const std::vector<std::string>& header) : out_(path) {
        if (!out_) fail(ErrorCode::missing_file, "cannot open file for writing: " + path);
        write_row(header);
    }

    void write_row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ << ',';
            out_ << fields[i];
        }
        out_ << '\n';
    }

    void close() { out_.close(); }

private:
    std::ofstream out_;
};

}  // namespace csv
}  // namespace loadtrack
